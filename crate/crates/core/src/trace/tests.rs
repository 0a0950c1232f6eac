use std::sync::Arc;

use super::*;
use crate::engine::{run, SimulationConfig};
use crate::lattice::{Boundary, Geometry};
use crate::models::{ecosystem_ruleset, game_of_life_ruleset, generate_pattern, EcosystemParams, SeededPattern};
use crate::lattice::Neighborhood;

fn blinker() -> (Arc<RuleSet>, Lattice) {
    let rules = Arc::new(game_of_life_ruleset());
    let l = generate_pattern(
        Geometry::square(5, 5).unwrap(),
        Boundary::Periodic,
        Arc::clone(rules.states()),
        &SeededPattern::Cells {
            state: "ALIVE".into(),
            cells: vec![Coord::new(1, 2), Coord::new(2, 2), Coord::new(3, 2)],
        },
    )
    .unwrap();
    (rules, l)
}

fn blinker_trace(t: u32, mode: TraceMode) -> (Arc<RuleSet>, Lattice, crate::engine::Trajectory) {
    let (rules, l) = blinker();
    let traj = run(&SimulationConfig::new(Arc::clone(&rules), l.clone(), t).with_trace(mode)).unwrap();
    (rules, l, traj)
}

#[test]
fn completeness_and_format() {
    let (_, _, traj) = blinker_trace(2, TraceMode::Full);
    assert_eq!(traj.trace.batches.len(), 2);
    assert!(traj.trace.batches.iter().all(|b| b.records.len() == 25));
    let text = write_trace(&traj.trace);
    let birth = text
        .lines()
        .find(|l| l.starts_with("t=1 cell=2,1 "))
        .unwrap();
    assert_eq!(
        birth,
        "t=1 cell=2,1 prev=DEAD next=ALIVE rule=birth support=1,2:ALIVE;2,2:ALIVE;3,2:ALIVE"
    );
    let far = text.lines().find(|l| l.starts_with("t=1 cell=0,0 ")).unwrap();
    assert_eq!(far, "t=1 cell=0,0 prev=DEAD next=DEAD rule=default support=");
}

#[test]
fn round_trip() {
    let (rules, _, traj) = blinker_trace(4, TraceMode::Full);
    let text = write_trace(&traj.trace);
    assert_eq!(import_trace_for(&text, &rules).unwrap(), traj.trace);
    let open = import_trace(&text).unwrap();
    assert_eq!(write_trace(&open), text);
    let mut buf = Vec::new();
    export_trace(&traj.trace, &mut buf).unwrap();
    assert_eq!(buf, text.as_bytes());

    let (rules, _, traj) = blinker_trace(3, TraceMode::RulesOnly);
    let text = write_trace(&traj.trace);
    assert!(!text.contains("support"));
    let back = import_trace_for(&text, &rules).unwrap();
    assert_eq!(back, traj.trace);
    assert_eq!(back.mode, TraceMode::RulesOnly);
}

#[test]
fn empty_trace() {
    let t = import_trace("").unwrap();
    assert_eq!(t.record_count(), 0);
}

#[test]
fn truncated_file_names_line() {
    let (rules, _, traj) = blinker_trace(2, TraceMode::Full);
    let text = write_trace(&traj.trace);
    let cut = text.len() - 30;
    let truncated = &text[..cut];
    let line = truncated.lines().count();
    let err = import_trace_for(truncated, &rules).unwrap_err();
    match err {
        Error::Parse { position, .. } => assert_eq!(position.line, line),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn malformed_lines() {
    let cases = [
        ("t=1 cell=0,0 prev=DEAD next=DEAD rule=default\nbogus\n", 2, 1),
        ("t=0 cell=0,0 prev=DEAD next=DEAD rule=default\n", 1, 3),
        ("t=1 cell=0;0 prev=DEAD next=DEAD rule=default\n", 1, 10),
        ("t=1 cell=0,0 prev=DEAD next=ZOMBIE rule=default\n", 1, 29),
        ("t=1 cell=0,0 prev=DEAD next=DEAD rule=nope\n", 1, 39),
        ("t=1 cell=0,0 prev=DEAD nxt=DEAD rule=default\n", 1, 24),
        ("t=1 cell=0,0 prev=DEAD next=DEAD rule=default\n\n", 2, 1),
        ("t=2 cell=0,0 prev=DEAD next=DEAD rule=default\nt=1 cell=0,1 prev=DEAD next=DEAD rule=default\n", 2, 1),
        ("t=1 cell=0,0 prev=DEAD next=DEAD rule=default support=\nt=1 cell=0,1 prev=DEAD next=DEAD rule=default\n", 2, 1),
        ("t=1 cell=0,0 prev=DEAD next=ALIVE rule=birth support=1,1:ALIVE;1,2\n", 1, 64),
    ];
    let rules = game_of_life_ruleset();
    for (text, line, col) in cases {
        match import_trace_for(text, &rules) {
            Err(Error::Parse { position, .. }) => {
                assert_eq!((position.line, position.column), (line, col), "{text:?}")
            }
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn replay_matches_run() {
    let (_, l, traj) = blinker_trace(2, TraceMode::Full);
    let r = replay(&l, &traj.trace).unwrap();
    assert_eq!(r.digests, traj.digests());
    assert_eq!(&r.final_lattice, traj.last());

    let (_, l, traj) = blinker_trace(6, TraceMode::RulesOnly);
    assert_eq!(replay(&l, &traj.trace).unwrap().digests, traj.digests());
}

#[test]
fn replay_ecosystem() {
    let p = EcosystemParams::new(2, 1, Neighborhood::VonNeumann(1));
    let rules = Arc::new(ecosystem_ruleset(&p).unwrap());
    let l = generate_pattern(
        Geometry::square(30, 30).unwrap(),
        Boundary::Periodic,
        Arc::clone(rules.states()),
        &SeededPattern::Random {
            fractions: vec![("OCC_1".into(), 0.05), ("OCC_2".into(), 0.05)],
            seed: 11,
        },
    )
    .unwrap();
    let traj = run(&SimulationConfig::new(Arc::clone(&rules), l.clone(), 50).with_trace(TraceMode::Full)).unwrap();
    let text = write_trace(&traj.trace);
    let back = import_trace_for(&text, &rules).unwrap();
    assert_eq!(replay(&l, &back).unwrap().digests, traj.digests());
    assert!(traj.trace.records().all(|r| check_record(&rules, r)));
}

#[test]
fn deleted_record_is_integrity_error() {
    let (_, l, mut traj) = blinker_trace(2, TraceMode::Full);
    traj.trace.batches[1].records.remove(7);
    match replay(&l, &traj.trace) {
        Err(Error::TraceIntegrity {
            iteration, row, col, ..
        }) => assert_eq!((iteration, row, col), (2, 1, 2)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn duplicate_and_tampered_records() {
    let (_, l, traj) = blinker_trace(2, TraceMode::Full);
    let mut dup = traj.trace.clone();
    let copy = dup.batches[0].records[3].clone();
    dup.batches[0].records[4] = copy;
    assert!(matches!(
        replay(&l, &dup),
        Err(Error::TraceIntegrity { iteration: 1, row: 0, col: 3, .. })
    ));
    let mut tampered = traj.trace.clone();
    tampered.batches[0].records[10].next = StateId(1);
    assert!(matches!(
        replay(&l, &tampered),
        Err(Error::TraceIntegrity { iteration: 2, row: 2, col: 0, .. })
    ));
}

#[test]
fn soundness_rejects_forged_records() {
    let (rules, _, traj) = blinker_trace(2, TraceMode::Full);
    assert!(traj.trace.records().all(|r| check_record(&rules, r)));
    let mut forged = traj
        .trace
        .records()
        .find(|r| rules.rule(r.rule).name == "birth")
        .unwrap()
        .clone();
    forged.support.pop();
    assert!(!check_record(&rules, &forged));
}

#[test]
fn explain_blinker_birth() {
    let (_, l, traj) = blinker_trace(2, TraceMode::Full);
    let chain = explain(&l, &traj.trace, Coord::new(2, 1), 1, DEFAULT_DEPTH).unwrap();
    let root = chain.root();
    assert_eq!(root.state, "ALIVE");
    match &root.cause {
        Cause::Transition { rule, prev, support } => {
            assert_eq!(rule, "birth");
            assert_eq!(prev, "DEAD");
            let cells: Vec<_> = support.iter().map(|(c, _)| *c).collect();
            assert_eq!(cells, [Coord::new(1, 2), Coord::new(2, 2), Coord::new(3, 2)]);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(root.parents.len(), 4);
    for &p in &root.parents {
        assert!(matches!(chain.nodes[p].cause, Cause::Initial));
        assert_eq!(chain.nodes[p].iteration, 0);
    }
    let text = chain.render_text();
    assert!(text.starts_with("#0 [t=1] cell 2,1 = ALIVE by rule 'birth' (was DEAD); support: 1,2=ALIVE, 2,2=ALIVE, 3,2=ALIVE\n"));
    assert!(text.contains("initial pattern (axiomatic)"));
    let json = chain.to_json();
    assert_eq!(json["root"]["cause"]["rule"], "birth");
    assert_eq!(json["root"]["parents"].as_array().unwrap().len(), 4);
}

#[test]
fn explain_edges_and_sharing() {
    let (_, l, traj) = blinker_trace(6, TraceMode::Full);
    let chain = explain(&l, &traj.trace, Coord::new(2, 2), 6, 4).unwrap();
    assert_eq!(chain.floor, 2);
    let mut seen = std::collections::HashSet::new();
    for node in &chain.nodes {
        assert!(seen.insert((node.cell, node.iteration)));
        match &node.cause {
            Cause::Transition { support, .. } => {
                for &p in &node.parents {
                    let parent = &chain.nodes[p];
                    assert_eq!(parent.iteration + 1, node.iteration);
                    assert!(parent.cell == node.cell || support.iter().any(|(c, _)| *c == parent.cell));
                }
            }
            Cause::Horizon => assert_eq!(node.iteration, 2),
            Cause::Initial => panic!("floor is above 0"),
        }
    }
    let again = explain(&l, &traj.trace, Coord::new(2, 2), 6, 4).unwrap();
    assert_eq!(again, chain);
}

#[test]
fn explain_iteration_zero_is_empty() {
    let (_, l, traj) = blinker_trace(2, TraceMode::Full);
    let chain = explain(&l, &traj.trace, Coord::new(2, 2), 0, DEFAULT_DEPTH).unwrap();
    assert!(chain.is_empty());
    assert_eq!(chain.nodes.len(), 1);
    assert!(chain.render_text().contains("initial pattern (axiomatic)"));
}

#[test]
fn explain_errors() {
    let (_, l, traj) = blinker_trace(2, TraceMode::RulesOnly);
    assert!(matches!(
        explain(&l, &traj.trace, Coord::new(2, 2), 1, 3),
        Err(Error::Unsupported(_))
    ));
    let (_, l, traj) = blinker_trace(2, TraceMode::Full);
    assert!(matches!(explain(&l, &traj.trace, Coord::new(5, 0), 1, 3), Err(Error::Config(_))));
    assert!(matches!(explain(&l, &traj.trace, Coord::new(0, 0), 3, 3), Err(Error::Config(_))));
}

#[test]
fn trace_mode_parsing() {
    for m in [TraceMode::Full, TraceMode::RulesOnly, TraceMode::Off] {
        assert_eq!(m.to_string().parse::<TraceMode>().unwrap(), m);
    }
    assert!("verbose".parse::<TraceMode>().is_err());
}
