use std::fmt::Write as _;

use super::{CountExpr, CountTerm, Guard, RuleSet, Target};
use crate::lattice::StateSet;

pub(super) fn serialize(set: &RuleSet) -> String {
    let states = set.states();
    let mut out = String::new();
    let _ = writeln!(out, "ruleset {};", set.name());
    let _ = writeln!(out, "states {{ {} }};", states.names().join(", "));
    let _ = writeln!(out, "neighborhood {};", set.neighborhood());
    for rule in set.rules() {
        let target = match rule.target {
            Target::State(s) => states.name(s),
            Target::Keep => "self",
        };
        let _ = writeln!(
            out,
            "rule {}: {} -> {};",
            rule.name,
            guard_text(&rule.guard, states),
            target
        );
    }
    out
}

pub(crate) fn guard_text(guard: &Guard, states: &StateSet) -> String {
    let mut out = String::new();
    write_guard(&mut out, guard, states);
    out
}

fn write_guard(out: &mut String, guard: &Guard, states: &StateSet) {
    match guard {
        Guard::True => out.push_str("true"),
        Guard::SelfIs(s) => {
            out.push_str("self == ");
            out.push_str(states.name(*s));
        }
        Guard::SelfIn(set) => {
            let names: Vec<&str> = set.iter().map(|s| states.name(*s)).collect();
            let _ = write!(out, "self in {{{}}}", names.join(", "));
        }
        Guard::Compare { lhs, op, rhs } => {
            write_count(out, lhs, states);
            let _ = write!(out, " {} ", op.symbol());
            write_count(out, rhs, states);
        }
        Guard::Not(inner) => {
            out.push_str("not ");
            write_operand(out, inner, states, |g| matches!(g, Guard::And(_) | Guard::Or(_)));
        }
        Guard::And(items) => {
            for (i, g) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" and ");
                }
                write_operand(out, g, states, |g| matches!(g, Guard::And(_) | Guard::Or(_)));
            }
        }
        Guard::Or(items) => {
            for (i, g) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" or ");
                }
                write_operand(out, g, states, |g| matches!(g, Guard::Or(_)));
            }
        }
    }
}

fn write_operand(out: &mut String, g: &Guard, states: &StateSet, needs_parens: fn(&Guard) -> bool) {
    if needs_parens(g) {
        out.push('(');
        write_guard(out, g, states);
        out.push(')');
    } else {
        write_guard(out, g, states);
    }
}

fn write_count(out: &mut String, expr: &CountExpr, states: &StateSet) {
    for (i, t) in expr.0.iter().enumerate() {
        if i > 0 {
            out.push_str(" + ");
        }
        match t {
            CountTerm::Count(s) => {
                let _ = write!(out, "count({})", states.name(*s));
            }
            CountTerm::Literal(v) => {
                let _ = write!(out, "{v}");
            }
        }
    }
}
