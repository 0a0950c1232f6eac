use std::collections::HashSet;
use std::fmt;

use super::parser::KEYWORDS;
use super::write::guard_text;
use super::{CmpOp, CountExpr, CountTerm, Guard, RuleSet, Target, MAX_GUARD_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Rule the diagnostic is about; `None` for ruleset-level problems.
    pub rule: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match &self.rule {
            Some(r) => write!(f, "{sev}: rule '{r}': {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// Checks every ruleset invariant, plus shadowing and vacuous-comparison warnings.
/// An empty list means the ruleset is valid and lint-clean.
pub fn validate(set: &RuleSet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let error = |rule: Option<&str>, msg: String| Diagnostic {
        severity: Severity::Error,
        rule: rule.map(str::to_owned),
        message: msg,
    };
    let warning = |rule: &str, msg: String| Diagnostic {
        severity: Severity::Warning,
        rule: Some(rule.to_owned()),
        message: msg,
    };
    let states = set.states();

    if !crate::lattice::is_identifier(set.name()) || KEYWORDS.contains(&set.name()) {
        out.push(error(None, format!("invalid ruleset name '{}'", set.name())));
    }
    for name in states.names() {
        if KEYWORDS.contains(&name.as_str()) {
            out.push(error(None, format!("state name '{name}' is a reserved word")));
        }
    }
    if let Err(e) = set.neighborhood().validate() {
        out.push(error(None, e.to_string()));
    }
    if set.rules().is_empty() {
        out.push(error(None, format!("ruleset '{}' has no rules", set.name())));
        return out;
    }

    let mut names = HashSet::new();
    for rule in set.rules() {
        let name = rule.name.as_str();
        if !crate::lattice::is_identifier(name) || KEYWORDS.contains(&name) {
            out.push(error(Some(name), "invalid rule name".into()));
        }
        if !names.insert(name) {
            out.push(error(Some(name), "duplicate rule name".into()));
        }
        let mut undeclared = Vec::new();
        rule.guard.visit_states(&mut |s| {
            if !states.contains(s) {
                undeclared.push(s);
            }
        });
        if let Target::State(s) = rule.target {
            if !states.contains(s) {
                undeclared.push(s);
            }
        }
        for s in undeclared {
            out.push(error(Some(name), format!("references undeclared state {s}")));
        }
        if rule.guard.depth() > MAX_GUARD_DEPTH {
            out.push(error(
                Some(name),
                format!("guard is nested deeper than {MAX_GUARD_DEPTH}"),
            ));
        }
    }
    let last = set.rules().last().unwrap();
    if last.guard != Guard::True {
        out.push(error(
            Some(&last.name),
            format!(
                "ruleset '{}' is not total: the last rule must have the guard `true`",
                set.name()
            ),
        ));
    }
    if out.iter().any(|d| d.severity == Severity::Error) {
        return out;
    }

    let size = set.neighborhood().size() as u64;
    let mut catch_all: Option<&str> = None;
    for (i, rule) in set.rules().iter().enumerate() {
        if let Some(first) = catch_all {
            out.push(warning(
                &rule.name,
                format!("unreachable: rule '{first}' above matches every configuration"),
            ));
        } else if let Some(earlier) = set.rules()[..i].iter().find(|r| r.guard == rule.guard) {
            out.push(warning(
                &rule.name,
                format!(
                    "shadowed by rule '{}' which has the identical guard `{}`",
                    earlier.name,
                    guard_text(&rule.guard, states)
                ),
            ));
        }
        if rule.guard == Guard::True && i + 1 < set.rules().len() && catch_all.is_none() {
            catch_all = Some(&rule.name);
        }
        let mut vacuous = Vec::new();
        find_vacuous(&rule.guard, size, &mut vacuous);
        for cmp in vacuous {
            out.push(warning(
                &rule.name,
                format!(
                    "vacuous guard: `{}` can never hold with {size} neighbors",
                    guard_text(cmp, states)
                ),
            ));
        }
    }
    out
}

fn find_vacuous<'a>(g: &'a Guard, size: u64, out: &mut Vec<&'a Guard>) {
    match g {
        Guard::Compare { lhs, op, rhs } => {
            let (a_lo, a_hi) = range(lhs, size);
            let (b_lo, b_hi) = range(rhs, size);
            // d = lhs - rhs lies within [lo, hi]
            let lo = a_lo as i128 - b_hi as i128;
            let hi = a_hi as i128 - b_lo as i128;
            let possible = match op {
                CmpOp::Eq => lo <= 0 && 0 <= hi,
                CmpOp::Ne => !(lo == 0 && hi == 0),
                CmpOp::Lt => lo < 0,
                CmpOp::Le => lo <= 0,
                CmpOp::Gt => hi > 0,
                CmpOp::Ge => hi >= 0,
            };
            if !possible {
                out.push(g);
            }
        }
        Guard::Not(inner) => find_vacuous(inner, size, out),
        Guard::And(items) | Guard::Or(items) => {
            items.iter().for_each(|i| find_vacuous(i, size, out))
        }
        _ => {}
    }
}

/// Bounds of a count expression: every count lies in 0..=size, and counts of
/// distinct states sum to at most size.
fn range(expr: &CountExpr, size: u64) -> (u64, u64) {
    let mut lo = 0u64;
    let mut counted = Vec::new();
    for t in &expr.0 {
        match t {
            CountTerm::Literal(v) => lo += *v as u64,
            CountTerm::Count(s) => counted.push(*s),
        }
    }
    let distinct: HashSet<_> = counted.iter().collect();
    let max_multiplicity = distinct
        .iter()
        .map(|s| counted.iter().filter(|c| c == s).count() as u64)
        .max()
        .unwrap_or(0);
    (lo, lo + size * max_multiplicity)
}
