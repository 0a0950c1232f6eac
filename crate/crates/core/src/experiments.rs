//! The shipped experiments, each producing tables, traces and a short report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::analysis::{
    catastrophe_sweep, classify_growth, competition_experiment, run_until_recurrence, sweep_csv,
    ClassifierParams, EcosystemSetup, PopulationSeries, RecurrenceRun,
    SweepOutcome,
};
use crate::engine::{run, SimulationConfig};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Coord, Geometry, Lattice, Neighborhood};
use crate::models::{game_of_life_ruleset, generate_pattern, EcosystemParams, SeededPattern};
use crate::rules::RuleSet;
use crate::trace::{write_trace, Trace, TraceMode};

pub const EXPERIMENTS: [&str; 4] = [
    "gol-oracle",
    "single-species-growth",
    "catastrophe-sweep",
    "two-species-competition",
];

/// `key=value` settings replacing an experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides(BTreeMap<String, String>);

impl Overrides {
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in items {
            let item = item.as_ref();
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override '{item}' is not key=value")))?;
            map.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        Ok(Self(map))
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_owned(), value.to_string());
        self
    }

    fn check_keys(&self, experiment: &str, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::config(format!(
                "unknown setting '{k}' for {experiment} (valid: {})",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(format!("invalid value '{v}' for setting '{key}'"))),
        }
    }
}

/// One traced run inside an experiment.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub label: String,
    pub rules: Arc<RuleSet>,
    pub initial: Lattice,
    pub trace: Trace,
    /// Digests of every traced generation, initial first.
    pub digests: Vec<u64>,
    pub series: PopulationSeries,
}

impl RunRecord {
    fn from_recurrence(label: impl Into<String>, run: RecurrenceRun) -> Self {
        Self {
            label: label.into(),
            rules: run.rules,
            initial: run.initial,
            trace: run.trace,
            digests: run.digests,
            series: run.series,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub name: String,
    /// `false` when the experiment's own check failed (gol-oracle only).
    pub ok: bool,
    pub report: String,
    /// File name and content, in write order. Includes `report.txt`.
    pub files: Vec<(String, Vec<u8>)>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentOutput {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

struct Builder {
    name: &'static str,
    files: Vec<(String, Vec<u8>)>,
    runs: Vec<RunRecord>,
}

impl Builder {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            files: Vec::new(),
            runs: Vec::new(),
        }
    }

    fn file(&mut self, name: impl Into<String>, content: impl Into<Vec<u8>>) {
        self.files.push((name.into(), content.into()));
    }

    /// Writes `series`, `trace`, `initial` and `rules` files for a run, suffixed by `tag`.
    fn run_files(&mut self, tag: &str, record: RunRecord) {
        self.file(format!("series{tag}.csv"), record.series.to_csv());
        self.file(format!("trace{tag}.txt"), write_trace(&record.trace));
        self.file(format!("initial{tag}.txt"), record.initial.to_snapshot_text());
        self.file(format!("rules{tag}.car"), record.rules.to_text());
        self.runs.push(record);
    }

    fn finish(mut self, ok: bool, report: String) -> ExperimentOutput {
        self.file("report.txt", report.clone());
        ExperimentOutput {
            name: self.name.to_owned(),
            ok,
            report,
            files: self.files,
            runs: self.runs,
        }
    }
}

pub fn run_experiment(name: &str, overrides: &Overrides, workers: usize) -> Result<ExperimentOutput> {
    match name {
        "gol-oracle" => gol_oracle(overrides, workers),
        "single-species-growth" => single_species_growth(overrides, workers),
        "catastrophe-sweep" => catastrophe(overrides, workers),
        "two-species-competition" => competition(overrides, workers),
        other => Err(Error::config(format!(
            "unknown experiment '{other}' (valid: {})",
            EXPERIMENTS.join(", ")
        ))),
    }
}

/// Plain Life on a torus, written without the rule engine.
pub fn reference_life_step(grid: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    for r in 0..height {
        for c in 0..width {
            let mut n = 0;
            for dr in [height - 1, 0, 1] {
                for dc in [width - 1, 0, 1] {
                    if (dr, dc) == (0, 0) {
                        continue;
                    }
                    if grid[((r + dr) % height) * width + (c + dc) % width] {
                        n += 1;
                    }
                }
            }
            let alive = grid[r * width + c];
            out[r * width + c] = n == 3 || (alive && n == 2);
        }
    }
    out
}

fn gol_oracle(o: &Overrides, workers: usize) -> Result<ExperimentOutput> {
    o.check_keys("gol-oracle", &["seeds", "size", "iterations", "density", "seed"])?;
    let seeds: u64 = o.get("seeds", 20)?;
    let size: usize = o.get("size", 32)?;
    let iterations: u32 = o.get("iterations", 50)?;
    let density: f64 = o.get("density", 0.35)?;
    let base: u64 = o.get("seed", 1)?;

    let rules = Arc::new(game_of_life_ruleset());
    let geometry = Geometry::square(size, size)?;
    let alive = rules.states().id("ALIVE").expect("life state");
    let mut b = Builder::new("gol-oracle");
    let mut failures = Vec::new();
    for i in 0..seeds {
        let initial = generate_pattern(
            geometry,
            Boundary::Periodic,
            Arc::clone(rules.states()),
            &SeededPattern::Random {
                fractions: vec![("ALIVE".into(), density)],
                seed: base + i,
            },
        )?;
        let mode = if i == 0 { TraceMode::Full } else { TraceMode::Off };
        let cfg = SimulationConfig::new(Arc::clone(&rules), initial.clone(), iterations)
            .with_trace(mode)
            .with_workers(workers);
        let traj = run(&cfg)?;
        let mut grid: Vec<bool> = initial.cells().iter().map(|&s| s == alive).collect();
        for (t, snap) in traj.snapshots.iter().enumerate() {
            if t > 0 {
                grid = reference_life_step(&grid, size, size);
            }
            let engine: Vec<bool> = snap.cells().iter().map(|&s| s == alive).collect();
            if engine != grid {
                failures.push(format!("seed {} diverges at t={t}", base + i));
                break;
            }
        }
        if i == 0 {
            let digests = traj.digests();
            let series = PopulationSeries::from_lattices(&traj.snapshots);
            b.run_files(
                "",
                RunRecord {
                    label: format!("seed {base}"),
                    rules: Arc::clone(&rules),
                    initial,
                    trace: traj.trace,
                    digests,
                    series,
                },
            );
        }
    }
    let mut report = format!(
        "gol-oracle: {seeds} random {size}x{size} torus seeds (ALIVE fraction {density}, seeds {base}..={}), {iterations} iterations\n",
        base + seeds.max(1) - 1
    );
    let ok = failures.is_empty();
    if ok {
        let _ = writeln!(report, "PASS: engine ≡ reference on {seeds} random seeds");
    } else {
        let _ = writeln!(report, "FAIL: {}", failures.join("; "));
    }
    Ok(b.finish(ok, report))
}

fn neighborhood(o: &Overrides) -> Result<Neighborhood> {
    o.get("neighborhood", Neighborhood::VonNeumann(1))
}

fn single_species_growth(o: &Overrides, workers: usize) -> Result<ExperimentOutput> {
    o.check_keys(
        "single-species-growth",
        &["size", "regeneration", "iterations", "neighborhood"],
    )?;
    let size: usize = o.get("size", 50)?;
    let r: u32 = o.get("regeneration", 1)?;
    let t: u32 = o.get("iterations", 120)?;
    let setup = EcosystemSetup {
        geometry: Geometry::square(size, size)?,
        boundary: Boundary::Periodic,
        neighborhood: neighborhood(o)?,
        pattern: SeededPattern::Single {
            state: "OCC_1".into(),
            cell: Coord::new(size as i64 / 2, size as i64 / 2),
        },
        iterations: t,
    };
    let (rules, initial) = setup.build(&EcosystemParams::new(1, r, setup.neighborhood))?;
    let run = run_until_recurrence(rules, initial, t, TraceMode::Full, workers)?;
    let occ = run.series.total_with_prefix("OCC_");
    let class = classify_growth(&occ, &ClassifierParams::default())?;

    let mut report = format!(
        "single-species-growth: {size}x{size} torus, {}, R={r}, single seed at the centre, T={t}\n",
        setup.neighborhood
    );
    let prefix: Vec<String> = occ.iter().take(6).map(|n| n.to_string()).collect();
    let _ = writeln!(report, "OCC_1 series prefix (t=0..5): {}", prefix.join(", "));
    let peak = occ.iter().copied().max().unwrap_or(0);
    let _ = writeln!(report, "peak population: {peak}");
    if let Some(e) = class.extinction_iteration {
        let _ = writeln!(report, "extinct from t={e}");
    }
    if let Some(c) = run.cycle {
        let _ = writeln!(report, "lattice periodic from t={} with period {}", c.start, c.period);
    }
    let _ = writeln!(report, "plateaus: {:?}; inflections: {:?}", class.plateaus, class.inflections);
    let _ = writeln!(report, "classification: {}", class.label);

    let mut b = Builder::new("single-species-growth");
    b.run_files("", RunRecord::from_recurrence("single seed", run));
    Ok(b.finish(true, report))
}

fn catastrophe(o: &Overrides, workers: usize) -> Result<ExperimentOutput> {
    o.check_keys(
        "catastrophe-sweep",
        &["size", "r_min", "r_max", "iterations", "neighborhood"],
    )?;
    let size: usize = o.get("size", 40)?;
    let r_min: u32 = o.get("r_min", 0)?;
    let r_max: u32 = o.get("r_max", 8)?;
    let t: u32 = o.get("iterations", 200)?;
    if r_min > r_max {
        return Err(Error::config(format!("r_min {r_min} exceeds r_max {r_max}")));
    }
    let setup = EcosystemSetup {
        geometry: Geometry::square(size, size)?,
        boundary: Boundary::Periodic,
        neighborhood: neighborhood(o)?,
        pattern: SeededPattern::Single {
            state: "OCC_1".into(),
            cell: Coord::new(size as i64 / 2, size as i64 / 2),
        },
        iterations: t,
    };
    let rs: Vec<u32> = (r_min..=r_max).collect();
    let (rows, runs) = catastrophe_sweep(&setup, &rs, TraceMode::Full, workers)?;

    let mut report = format!(
        "catastrophe-sweep: {size}x{size} torus, {}, single seed at the centre, T={t}, R={r_min}..={r_max}\n",
        setup.neighborhood
    );
    for row in &rows {
        let _ = write!(report, "R={}: {}", row.regeneration, row.outcome);
        if let Some(e) = row.extinction_iteration {
            let _ = write!(report, " at t={e}");
        }
        report.push('\n');
    }
    match rows.iter().find(|r| r.outcome == SweepOutcome::Extinction) {
        Some(r) => {
            let _ = writeln!(report, "threshold: R*={} (smallest R ending in extinction)", r.regeneration);
        }
        None => report.push_str("threshold: none (no extinction in range)\n"),
    }

    let mut b = Builder::new("catastrophe-sweep");
    b.file("sweep.csv", sweep_csv(&rows));
    for (row, run) in rows.iter().zip(runs) {
        let tag = format!("_R{}", row.regeneration);
        b.run_files(&tag, RunRecord::from_recurrence(format!("R={}", row.regeneration), run));
    }
    Ok(b.finish(true, report))
}

fn competition(o: &Overrides, workers: usize) -> Result<ExperimentOutput> {
    o.check_keys(
        "two-species-competition",
        &["size", "regeneration", "iterations", "neighborhood"],
    )?;
    let size: usize = o.get("size", 40)?;
    let r: u32 = o.get("regeneration", 0)?;
    let t: u32 = o.get("iterations", 10_000)?;
    let nb = neighborhood(o)?;
    let params = EcosystemParams::new(2, r, nb);
    let s = size as i64;
    let placements = [
        ("exclusion", Coord::new(s / 4, s / 4), Coord::new(3 * s / 4, 3 * s / 4)),
        ("coexistence", Coord::new(s / 2, s / 2), Coord::new(s / 2, s / 2 + 1)),
    ];
    let mut report = format!(
        "two-species-competition: {size}x{size} torus, {nb}, R={r}, priority (1,2), T={t}\n"
    );
    let mut b = Builder::new("two-species-competition");
    for (label, a, c) in placements {
        let setup = EcosystemSetup {
            geometry: Geometry::square(size, size)?,
            boundary: Boundary::Periodic,
            neighborhood: nb,
            pattern: SeededPattern::Points(vec![("OCC_1".into(), a), ("OCC_2".into(), c)]),
            iterations: t,
        };
        let result = competition_experiment(&params, &setup, TraceMode::Full, workers)?;
        let last: Vec<usize> = result.species.iter().map(|s| *s.last().expect("row")).collect();
        let _ = writeln!(
            report,
            "{label}: OCC_1 at {a}, OCC_2 at {c} -> {} (final counts {}/{})",
            result.outcome, last[0], last[1]
        );
        b.run_files(&format!("_{label}"), RunRecord::from_recurrence(label, result.run));
    }
    Ok(b.finish(true, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_blinker() {
        let mut g = vec![false; 25];
        for r in 1..4 {
            g[r * 5 + 2] = true;
        }
        let h = reference_life_step(&g, 5, 5);
        let expected: Vec<bool> = (0..25).map(|i| i / 5 == 2 && (1..4).contains(&(i % 5))).collect();
        assert_eq!(h, expected);
        assert_eq!(reference_life_step(&h, 5, 5), g);
    }

    #[test]
    fn overrides() {
        let o = Overrides::parse(&["size=8", " iterations = 3 "]).unwrap();
        assert_eq!(o.get::<usize>("size", 1).unwrap(), 8);
        assert_eq!(o.get::<u32>("iterations", 1).unwrap(), 3);
        assert!(Overrides::parse(&["size"]).is_err());
        let bad = Overrides::default().set("colour", "red");
        assert!(matches!(run_experiment("gol-oracle", &bad, 1), Err(Error::Config(_))));
        let err = run_experiment("nope", &Overrides::default(), 1).unwrap_err();
        assert!(err.to_string().contains("gol-oracle, single-species-growth"));
    }

    #[test]
    fn small_gol_oracle_passes() {
        let o = Overrides::default().set("seeds", 3).set("size", 12).set("iterations", 10);
        let out = run_experiment("gol-oracle", &o, 1).unwrap();
        assert!(out.ok);
        assert!(out.report.contains("PASS: engine ≡ reference on 3 random seeds"));
        let names: Vec<_> = out.files.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["series.csv", "trace.txt", "initial.txt", "rules.car", "report.txt"]);
    }

    #[test]
    fn competition_defaults() {
        let out = run_experiment("two-species-competition", &Overrides::default(), 1).unwrap();
        assert!(out.report.contains("exclusion: OCC_1 at 10,10, OCC_2 at 30,30 -> exclusion(1) (final counts 800/0)"), "{}", out.report);
        assert!(out.report.contains("coexistence: OCC_1 at 20,20, OCC_2 at 20,21 -> coexistence(T=10000, periodic from t=38 with period 2) (final counts 400/400)"), "{}", out.report);
    }
}
