use std::sync::Arc;

use whitebox_ca::engine::{run, run_parallel_consistency_check, SimulationConfig};
use whitebox_ca::lattice::{Boundary, Geometry, Neighborhood};
use whitebox_ca::models::{ecosystem_ruleset, game_of_life_ruleset, generate_pattern, EcosystemParams, SeededPattern};
use whitebox_ca::trace::{write_trace, TraceMode};

fn random(rules: &Arc<whitebox_ca::rules::RuleSet>, geometry: Geometry, fractions: &[(&str, f64)]) -> whitebox_ca::lattice::Lattice {
    generate_pattern(
        geometry,
        Boundary::Periodic,
        Arc::clone(rules.states()),
        &SeededPattern::Random {
            fractions: fractions.iter().map(|(s, f)| (s.to_string(), *f)).collect(),
            seed: 77,
        },
    )
    .unwrap()
}

#[test]
fn life_is_worker_independent() {
    let rules = Arc::new(game_of_life_ruleset());
    let l = random(&rules, Geometry::square(96, 80).unwrap(), &[("ALIVE", 0.3)]);
    let cfg = SimulationConfig::new(rules, l, 30).with_trace(TraceMode::Full);
    assert!(run_parallel_consistency_check(&cfg, &[1, 2, 3, 8]));
}

#[test]
fn hex_ecosystem_trace_is_worker_independent() {
    let p = EcosystemParams::new(3, 2, Neighborhood::Hex(1)).with_priority(vec![3, 1, 2]);
    let rules = Arc::new(ecosystem_ruleset(&p).unwrap());
    let l = random(
        &rules,
        Geometry::hex(70, 64).unwrap(),
        &[("OCC_1", 0.05), ("OCC_2", 0.05), ("OCC_3", 0.05)],
    );
    let texts: Vec<String> = [1, 2, 8]
        .iter()
        .map(|&w| {
            let cfg = SimulationConfig::new(Arc::clone(&rules), l.clone(), 25)
                .with_trace(TraceMode::Full)
                .with_workers(w);
            write_trace(&run(&cfg).unwrap().trace)
        })
        .collect();
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}
