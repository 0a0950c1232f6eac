use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::error::{Error, Position};

const LIFE: &str = "\
# Conway's Game of Life
ruleset life;
states { DEAD, ALIVE };
neighborhood moore(1);
rule survive: self == ALIVE and (count(ALIVE) == 2 or count(ALIVE) == 3) -> ALIVE;
rule birth: self == DEAD and count(ALIVE) == 3 -> ALIVE;
rule die: true -> DEAD;
";

const DEAD: StateId = StateId(0);
const ALIVE: StateId = StateId(1);

fn life() -> RuleSet {
    parse_ruleset(LIFE).unwrap()
}

fn neighbors_with(alive: usize) -> Vec<StateId> {
    (0..8).map(|i| if i < alive { ALIVE } else { DEAD }).collect()
}

fn position_of(err: Error) -> Position {
    match err {
        Error::Parse { position, .. } => position,
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn parses_life() {
    let set = life();
    assert_eq!(set.name(), "life");
    assert_eq!(set.states().len(), 2);
    assert_eq!(set.rules().len(), 3);
    assert_eq!(set.neighborhood(), Neighborhood::Moore(1));
    let names: Vec<_> = set.rules().iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["survive", "birth", "die"]);
}

#[test]
fn life_thresholds() {
    let set = life();
    let fire = |current, alive| {
        let e = evaluate(&set, current, &neighbors_with(alive));
        (e.target, set.rule(e.rule).name.clone())
    };
    assert_eq!(fire(ALIVE, 2), (ALIVE, "survive".into()));
    assert_eq!(fire(ALIVE, 3), (ALIVE, "survive".into()));
    assert_eq!(fire(ALIVE, 4), (DEAD, "die".into()));
    assert_eq!(fire(ALIVE, 1), (DEAD, "die".into()));
    assert_eq!(fire(DEAD, 3), (ALIVE, "birth".into()));
    assert_eq!(fire(DEAD, 2), (DEAD, "die".into()));
}

#[test]
fn missing_catch_all_is_a_totality_error() {
    let text = LIFE.replace("rule die: true -> DEAD;\n", "");
    let err = parse_ruleset(&text).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("'life'") && msg.contains("not total"), "{msg}");
    assert_eq!(position_of(err), Position::new(6, 13));
}

#[test]
fn unknown_state_is_reported_at_its_token() {
    let text = "ruleset g;\nstates { A, B };\nneighborhood moore(1);\nrule r: count(GHOST) == 1 -> A;\nrule d: true -> self;\n";
    let err = parse_ruleset(text).unwrap_err();
    assert!(err.to_string().contains("unknown state 'GHOST'"));
    assert_eq!(position_of(err), Position::new(4, 15));
}

#[test]
fn duplicate_rule_name_is_positioned() {
    let text = "ruleset g; states { A, B }; neighborhood moore(1);\nrule r: self == A -> B;\nrule r: true -> A;";
    let err = parse_ruleset(text).unwrap_err();
    assert!(err.to_string().contains("duplicate rule name 'r'"));
    assert_eq!(position_of(err), Position::new(3, 6));
}

#[test]
fn other_parse_errors() {
    let cases = [
        ("ruleset g; states { A }; neighborhood moore(1); rule d: true -> A;", "two states"),
        ("ruleset g; states { A, A }; neighborhood moore(1); rule d: true -> A;", "duplicate state"),
        ("ruleset g; states { A, B }; neighborhood hex(3); rule d: true -> A;", "hex"),
        ("ruleset g; states { A, B }; neighborhood ring(1); rule d: true -> A;", "unknown neighborhood"),
        ("ruleset g; states { A, B }; neighborhood moore(1);", "no rules"),
        ("ruleset g; states { A, self }; neighborhood moore(1); rule d: true -> A;", "reserved"),
        ("ruleset g; states { A, B }; neighborhood moore(1); rule d: self == -> A; rule e: true -> A;", "state name"),
        ("ruleset g; states { A, B }; neighborhood moore(1); rule d: true -> A; junk", "end of input"),
        ("ruleset g; states { A, B }; neighborhood moore(1); rule d: count(A) == 99999999999 -> A; rule e: true -> A;", "too large"),
    ];
    for (text, needle) in cases {
        let err = parse_ruleset(text).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{text}");
        assert!(err.to_string().contains(needle), "{text}: {err}");
    }
}

#[test]
fn guard_depth_limit() {
    let mut guard = String::from("self == A");
    for _ in 0..40 {
        guard = format!("not ({guard} and self == B)");
    }
    let text = format!("ruleset g; states {{ A, B }}; neighborhood moore(1); rule d: {guard} -> A; rule e: true -> A;");
    let err = parse_ruleset(&text).unwrap_err();
    assert!(err.to_string().contains("deeper than 32"), "{err}");

    let deep = format!("{}self == A{}", "(".repeat(5000), ")".repeat(5000));
    let text = format!("ruleset g; states {{ A, B }}; neighborhood moore(1); rule d: {deep} -> A; rule e: true -> A;");
    assert!(parse_ruleset(&text).is_err());
}

#[test]
fn validate_life_is_clean() {
    assert_eq!(validate(&life()), vec![]);
}

#[test]
fn identical_guards_are_flagged_as_shadowed() {
    let text = "ruleset g; states { A, B }; neighborhood moore(1);\n\
        rule first: count(B) >= 2 -> B;\n\
        rule second: count(B) >= 2 -> A;\n\
        rule rest: true -> self;";
    let diags = validate(&parse_ruleset(text).unwrap());
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].severity, Severity::Warning);
    assert_eq!(diags[0].rule.as_deref(), Some("second"));
    assert!(diags[0].message.contains("shadowed by rule 'first'"));
}

#[test]
fn impossible_counts_are_vacuous() {
    let text = "ruleset g; states { X, Y }; neighborhood moore(1);\n\
        rule big: count(X) > 99 -> Y;\n\
        rule fine: count(X) + count(X) > 15 -> Y;\n\
        rule sum: count(X) + count(Y) == 9 -> Y;\n\
        rule rest: true -> self;";
    let diags = validate(&parse_ruleset(text).unwrap());
    let flagged: Vec<_> = diags.iter().map(|d| d.rule.clone().unwrap()).collect();
    assert_eq!(flagged, ["big", "sum"]);
    assert!(diags[0].message.contains("vacuous"));
}

#[test]
fn programmatic_rulesets_are_validated() {
    let states = Arc::new(StateSet::new(["A", "B"]).unwrap());
    let rules = vec![Rule {
        name: "only".into(),
        guard: Guard::SelfIs(StateId(0)),
        target: Target::Keep,
    }];
    let set = RuleSet::new_unchecked("g".into(), states.clone(), Neighborhood::Moore(1), rules.clone());
    let diags = validate(&set);
    assert!(diags.iter().any(|d| d.severity == Severity::Error && d.message.contains("not total")));
    assert!(RuleSet::new("g", states.clone(), Neighborhood::Moore(1), rules).is_err());

    let bad_state = vec![Rule {
        name: "r".into(),
        guard: Guard::True,
        target: Target::State(StateId(7)),
    }];
    assert!(RuleSet::new("g", states, Neighborhood::Moore(1), bad_state).is_err());
}

#[test]
fn canonical_text_of_life() {
    let text = life().to_text();
    assert_eq!(
        text,
        "ruleset life;\nstates { DEAD, ALIVE };\nneighborhood moore(1);\n\
         rule survive: self == ALIVE and (count(ALIVE) == 2 or count(ALIVE) == 3) -> ALIVE;\n\
         rule birth: self == DEAD and count(ALIVE) == 3 -> ALIVE;\n\
         rule die: true -> DEAD;\n"
    );
    assert_eq!(parse_ruleset(&text).unwrap(), life());
}

#[test]
fn exhaustive_totality_two_states_moore() {
    let set = life();
    for current in [DEAD, ALIVE] {
        for bits in 0u32..256 {
            let n: Vec<StateId> = (0..8).map(|i| StateId(((bits >> i) & 1) as u8)).collect();
            let e = evaluate(&set, current, &n);
            assert!(e.rule.index() < 3);
        }
    }
}

#[test]
fn evaluation_is_pure() {
    let set = life();
    let mut x: u64 = 88172645463325252;
    let mut inputs = Vec::new();
    for _ in 0..1000 {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        let current = StateId((x & 1) as u8);
        let n: Vec<StateId> = (0..8).map(|i| StateId(((x >> (i + 1)) & 1) as u8)).collect();
        inputs.push((current, n));
    }
    let first: Vec<_> = inputs.iter().map(|(c, n)| evaluate(&set, *c, n)).collect();
    for _ in 0..100 {
        for (i, (c, n)) in inputs.iter().enumerate() {
            assert_eq!(evaluate(&set, *c, n), first[i]);
        }
    }
}

#[test]
fn swapping_overlapping_rules_changes_outputs() {
    let text = "ruleset g; states { A, B }; neighborhood von_neumann(1);\n\
        rule crowd: count(B) >= 2 -> A;\n\
        rule spread: count(B) >= 1 -> B;\n\
        rule rest: true -> self;";
    let swapped = "ruleset g; states { A, B }; neighborhood von_neumann(1);\n\
        rule spread: count(B) >= 1 -> B;\n\
        rule crowd: count(B) >= 2 -> A;\n\
        rule rest: true -> self;";
    let a = parse_ruleset(text).unwrap();
    let b = parse_ruleset(swapped).unwrap();
    let mut differing = 0;
    for current in [StateId(0), StateId(1)] {
        for bits in 0u32..16 {
            let n: Vec<StateId> = (0..4).map(|i| StateId(((bits >> i) & 1) as u8)).collect();
            if evaluate(&a, current, &n).target != evaluate(&b, current, &n).target {
                differing += 1;
            }
        }
    }
    assert!(differing > 0);
}

#[test]
fn target_self_keeps_state() {
    let set = parse_ruleset("ruleset g; states { A, B }; neighborhood von_neumann(1); rule k: true -> self;")
        .unwrap();
    assert_eq!(evaluate(&set, StateId(1), &[StateId(0); 4]).target, StateId(1));
}

fn arb_guard(states: u8) -> impl Strategy<Value = Guard> {
    let state = (0..states).prop_map(StateId);
    let term = prop_oneof![
        state.clone().prop_map(CountTerm::Count),
        (0u32..12).prop_map(CountTerm::Literal),
    ];
    let expr = proptest::collection::vec(term, 1..4).prop_map(CountExpr);
    let op = prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
    ];
    let leaf = prop_oneof![
        Just(Guard::True),
        state.clone().prop_map(Guard::SelfIs),
        proptest::collection::vec(state, 1..3).prop_map(Guard::SelfIn),
        (expr.clone(), op, expr).prop_map(|(lhs, op, rhs)| Guard::Compare { lhs, op, rhs }),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|g| Guard::Not(Box::new(g))),
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Guard::And),
            proptest::collection::vec(inner, 2..4).prop_map(Guard::Or),
        ]
    })
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(guards in proptest::collection::vec(arb_guard(3), 1..5), keep in any::<bool>()) {
        let states = Arc::new(StateSet::new(["FREE", "OCC", "REGEN"]).unwrap());
        let mut rules: Vec<Rule> = guards
            .into_iter()
            .enumerate()
            .map(|(i, guard)| Rule {
                name: format!("r{i}"),
                guard,
                target: if keep { Target::Keep } else { Target::State(StateId((i % 3) as u8)) },
            })
            .collect();
        rules.push(Rule { name: "rest".into(), guard: Guard::True, target: Target::Keep });
        let set = RuleSet::new("prop", states, Neighborhood::Moore(1), rules).unwrap();
        let text = set.to_text();
        let parsed = parse_ruleset(&text).unwrap();
        prop_assert_eq!(&parsed, &set);
        prop_assert_eq!(parsed.to_text(), text);
    }
}
