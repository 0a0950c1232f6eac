//! Macro-level observables: population series, growth-curve classification,
//! recurrence detection, the regeneration sweep and competition outcomes.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry, Lattice, Neighborhood, StateSet};
use crate::models::{ecosystem_ruleset, generate_pattern, EcosystemParams, SeededPattern};
use crate::rules::RuleSet;
use crate::trace::{Trace, TraceMode};

/// Per-iteration state histograms; row `t` belongs to snapshot `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationSeries {
    pub states: Vec<String>,
    pub rows: Vec<Vec<usize>>,
}

impl PopulationSeries {
    pub fn new(states: &StateSet) -> Self {
        Self {
            states: states.names().to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn from_lattices<'a>(lattices: impl IntoIterator<Item = &'a Lattice>) -> Self {
        let mut it = lattices.into_iter().peekable();
        let mut series = Self {
            states: it.peek().map(|l| l.states().names().to_vec()).unwrap_or_default(),
            rows: Vec::new(),
        };
        for l in it {
            series.push(l);
        }
        series
    }

    pub fn push(&mut self, lattice: &Lattice) {
        self.rows.push(lattice.histogram());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, state: &str) -> Option<Vec<usize>> {
        let i = self.states.iter().position(|s| s == state)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Summed counts of every state whose name starts with `prefix`.
    pub fn total_with_prefix(&self, prefix: &str) -> Vec<usize> {
        let cols: Vec<usize> = (0..self.states.len())
            .filter(|&i| self.states[i].starts_with(prefix))
            .collect();
        self.rows
            .iter()
            .map(|r| cols.iter().map(|&i| r[i]).sum())
            .collect()
    }

    /// `iteration,<state>...` header plus one row per iteration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration");
        for s in &self.states {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (t, row) in self.rows.iter().enumerate() {
            out.push_str(&t.to_string());
            for c in row {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Tunables of [`classify_growth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierParams {
    pub window: usize,
    /// Relative to the series maximum.
    pub tolerance: f64,
    /// Minimum plateau length as a fraction of the series length.
    pub plateau_fraction: f64,
    pub min_length: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            window: 5,
            tolerance: 0.05,
            plateau_fraction: 0.2,
            min_length: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrowthLabel {
    SShaped,
    DoubleSShaped,
    Extinction,
    Persistence,
    Other,
}

impl fmt::Display for GrowthLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthLabel::SShaped => "s_shaped",
            GrowthLabel::DoubleSShaped => "double_s_shaped",
            GrowthLabel::Extinction => "extinction",
            GrowthLabel::Persistence => "persistence",
            GrowthLabel::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthClassification {
    pub label: GrowthLabel,
    /// Half-open index ranges of the plateaus found in the smoothed series.
    pub plateaus: Vec<(usize, usize)>,
    /// Indices where the smoothed second difference changes sign, before the first plateau.
    pub inflections: Vec<usize>,
    /// First iteration from which the count stays at zero.
    pub extinction_iteration: Option<usize>,
}

/// Centered moving average; the window shrinks at the ends.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let h = window / 2;
    (0..series.len())
        .map(|i| {
            let a = i.saturating_sub(h);
            let b = (i + h + 1).min(series.len());
            series[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

/// Disjoint maximal runs at least `min_len` long whose spread is within `tol`, scanned left to right.
fn find_plateaus(s: &[f64], min_len: usize, tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let (mut lo, mut hi) = (s[i], s[i]);
        let mut j = i + 1;
        while j < s.len() {
            let (l, h) = (lo.min(s[j]), hi.max(s[j]));
            if h - l > tol {
                break;
            }
            (lo, hi) = (l, h);
            j += 1;
        }
        if j - i >= min_len {
            out.push((i, j));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Indices where the sign of the second difference flips; near-zero values are skipped.
fn sign_changes(s: &[f64], eps: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last: Option<bool> = None;
    for i in 1..s.len().saturating_sub(1) {
        let d = s[i + 1] - 2.0 * s[i] + s[i - 1];
        if d.abs() <= eps {
            continue;
        }
        let positive = d > 0.0;
        if last.is_some_and(|p| p != positive) {
            out.push(i);
        }
        last = Some(positive);
    }
    out
}

fn nondecreasing(s: &[f64], tol: f64) -> bool {
    s.windows(2).all(|w| w[1] >= w[0] - tol)
}

/// Labels a population curve.
///
/// Extinction when the last value is 0. Otherwise the series is smoothed and
/// scanned for plateaus; one final plateau preceded by a nondecreasing rise with
/// a single inflection is `s_shaped`, two plateaus joined by a rise are
/// `double_s_shaped`, any other curve ending on a plateau is `persistence`.
pub fn classify_growth(series: &[usize], params: &ClassifierParams) -> Result<GrowthClassification> {
    if series.len() < params.min_length {
        return Err(Error::Analysis(format!(
            "series has {} points, at least {} are needed",
            series.len(),
            params.min_length
        )));
    }
    let raw: Vec<f64> = series.iter().map(|&x| x as f64).collect();
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let tol = params.tolerance * max;
    let smooth = moving_average(&raw, params.window);
    let min_len = ((params.plateau_fraction * series.len() as f64).ceil() as usize).max(1);
    let plateaus = find_plateaus(&smooth, min_len, tol);
    let eps = 1e-9 * max.max(1.0);
    let first = plateaus.first().map_or(series.len(), |p| p.0 + 1);
    let inflections = sign_changes(&smooth[..first.min(series.len())], eps);

    let extinction_iteration = if series.last() == Some(&0) {
        Some(series.iter().rposition(|&x| x != 0).map_or(0, |i| i + 1))
    } else {
        None
    };

    let ends_on_plateau = plateaus.last().is_some_and(|p| p.1 == series.len());
    let label = if extinction_iteration.is_some() {
        GrowthLabel::Extinction
    } else if plateaus.len() == 1
        && ends_on_plateau
        && nondecreasing(&raw[..=plateaus[0].0], tol)
        && inflections.len() == 1
    {
        GrowthLabel::SShaped
    } else if plateaus.len() == 2 && {
        let (a, b) = (plateaus[0], plateaus[1]);
        let level = |p: (usize, usize)| smooth[p.0..p.1].iter().sum::<f64>() / (p.1 - p.0) as f64;
        level(b) > level(a) + tol
            && nondecreasing(&raw[..=a.0], tol)
            && nondecreasing(&raw[a.1 - 1..=b.0], tol)
    } {
        GrowthLabel::DoubleSShaped
    } else if ends_on_plateau {
        GrowthLabel::Persistence
    } else {
        GrowthLabel::Other
    };
    Ok(GrowthClassification {
        label,
        plateaus,
        inflections,
        extinction_iteration,
    })
}

/// `start + k * period` are all the same lattice for `k >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cycle {
    pub start: u32,
    pub period: u32,
}

impl Cycle {
    /// Iteration in `start..start + period` holding the same lattice as `t`.
    pub fn fold(&self, t: u32) -> u32 {
        if t < self.start {
            t
        } else {
            self.start + (t - self.start) % self.period
        }
    }
}

/// A run stopped at the horizon or at the first exact lattice recurrence.
#[derive(Debug, Clone)]
pub struct RecurrenceRun {
    pub rules: Arc<RuleSet>,
    pub initial: Lattice,
    pub horizon: u32,
    /// Last iteration actually computed.
    pub simulated: u32,
    pub cycle: Option<Cycle>,
    /// Rows `0..=horizon`; rows past `simulated` are read off the cycle.
    pub series: PopulationSeries,
    /// Digests of the computed generations `0..=simulated`.
    pub digests: Vec<u64>,
    /// Transitions of the computed generations.
    pub trace: Trace,
    pub at_horizon: Lattice,
}

pub fn run_until_recurrence(
    rules: Arc<RuleSet>,
    initial: Lattice,
    horizon: u32,
    mode: TraceMode,
    workers: usize,
) -> Result<RecurrenceRun> {
    let mut sim = Simulation::new(Arc::clone(&rules), initial.clone(), mode, workers)?;
    let mut history: Vec<Lattice> = vec![initial.clone()];
    let mut seen: HashMap<u64, Vec<u32>> = HashMap::new();
    let mut digests = vec![initial.digest()];
    seen.entry(digests[0]).or_default().push(0);
    let mut cycle = None;
    while sim.iteration() < horizon {
        let next = sim.step().clone();
        let t = sim.iteration();
        let d = next.digest();
        digests.push(d);
        let earlier = seen.entry(d).or_default();
        if let Some(&j) = earlier.iter().find(|&&j| history[j as usize] == next) {
            cycle = Some(Cycle {
                start: j,
                period: t - j,
            });
            history.push(next);
            break;
        }
        earlier.push(t);
        history.push(next);
    }
    let simulated = sim.iteration();
    let mut series = PopulationSeries::new(rules.states());
    for l in &history {
        series.push(l);
    }
    let at = |t: u32| cycle.map_or(t, |c: Cycle| c.fold(t)) as usize;
    for t in simulated + 1..=horizon {
        series.rows.push(series.rows[at(t)].clone());
    }
    let at_horizon = history[at(horizon)].clone();
    Ok(RecurrenceRun {
        rules,
        initial,
        horizon,
        simulated,
        cycle,
        series,
        digests,
        trace: sim.into_trace(),
        at_horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepOutcome {
    Persistence,
    Extinction,
}

impl fmt::Display for SweepOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepOutcome::Persistence => "persistence",
            SweepOutcome::Extinction => "extinction",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub regeneration: u32,
    pub outcome: SweepOutcome,
    pub extinction_iteration: Option<u32>,
}

/// Everything a single-species ecosystem run needs except the regeneration time.
#[derive(Debug, Clone, PartialEq)]
pub struct EcosystemSetup {
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub neighborhood: Neighborhood,
    pub pattern: SeededPattern,
    pub iterations: u32,
}

impl EcosystemSetup {
    pub fn build(&self, params: &EcosystemParams) -> Result<(Arc<RuleSet>, Lattice)> {
        let rules = Arc::new(ecosystem_ruleset(params)?);
        let initial = generate_pattern(
            self.geometry,
            self.boundary,
            Arc::clone(rules.states()),
            &self.pattern,
        )?;
        Ok((rules, initial))
    }
}

/// First iteration at which the summed `OCC_*` count is zero.
pub fn extinction_iteration(series: &PopulationSeries) -> Option<u32> {
    series
        .total_with_prefix("OCC_")
        .iter()
        .position(|&n| n == 0)
        .map(|t| t as u32)
}

/// One single-species run per regeneration time, rows in input order.
/// Returns the runs as well, for their series and traces.
pub fn catastrophe_sweep(
    base: &EcosystemSetup,
    regeneration: &[u32],
    mode: TraceMode,
    workers: usize,
) -> Result<(Vec<SweepRow>, Vec<RecurrenceRun>)> {
    if regeneration.is_empty() {
        return Err(Error::config("the sweep needs at least one regeneration time"));
    }
    if regeneration.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("regeneration times must be strictly ascending"));
    }
    let results: Vec<Result<RecurrenceRun>> = std::thread::scope(|s| {
        let handles: Vec<_> = regeneration
            .iter()
            .map(|&r| {
                s.spawn(move || {
                    let (rules, initial) =
                        base.build(&EcosystemParams::new(1, r, base.neighborhood))?;
                    run_until_recurrence(rules, initial, base.iterations, mode, workers)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut runs = Vec::with_capacity(results.len());
    for (&r, run) in regeneration.iter().zip(results) {
        let run = run?;
        let ext = extinction_iteration(&run.series);
        rows.push(SweepRow {
            regeneration: r,
            outcome: if ext.is_some() {
                SweepOutcome::Extinction
            } else {
                SweepOutcome::Persistence
            },
            extinction_iteration: ext,
        });
        runs.push(run);
    }
    Ok((rows, runs))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("R,outcome,extinction_iteration\n");
    for row in rows {
        let ext = row.extinction_iteration.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{ext}\n", row.regeneration, row.outcome));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompetitionOutcome {
    /// Only `winner` (1-based) is alive at the horizon.
    Exclusion { winner: usize },
    /// Every species is alive at the horizon. With a cycle, the lattice is
    /// periodic and coexistence holds for all later iterations too.
    Coexistence { horizon: u32, cycle: Option<Cycle> },
    Other,
}

impl fmt::Display for CompetitionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompetitionOutcome::Exclusion { winner } => write!(f, "exclusion({winner})"),
            CompetitionOutcome::Coexistence {
                horizon,
                cycle: Some(c),
            } => write!(
                f,
                "coexistence(T={horizon}, periodic from t={} with period {})",
                c.start, c.period
            ),
            CompetitionOutcome::Coexistence { horizon, cycle: None } => {
                write!(f, "coexistence(T={horizon})")
            }
            CompetitionOutcome::Other => f.write_str("other"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompetitionResult {
    pub outcome: CompetitionOutcome,
    /// Per-species `OCC_s` counts, `0..=horizon`.
    pub species: Vec<Vec<usize>>,
    pub run: RecurrenceRun,
}

pub fn competition_experiment(
    params: &EcosystemParams,
    setup: &EcosystemSetup,
    mode: TraceMode,
    workers: usize,
) -> Result<CompetitionResult> {
    if params.species < 2 {
        return Err(Error::config(format!(
            "competition needs at least 2 species, got {}",
            params.species
        )));
    }
    let (rules, initial) = setup.build(params)?;
    let run = run_until_recurrence(rules, initial, setup.iterations, mode, workers)?;
    let species: Vec<Vec<usize>> = (1..=params.species)
        .map(|s| run.series.column(&format!("OCC_{s}")).expect("species state"))
        .collect();
    let alive: Vec<usize> = (1..=params.species)
        .filter(|&s| *species[s - 1].last().expect("nonempty") > 0)
        .collect();
    let outcome = match alive.as_slice() {
        [winner] => CompetitionOutcome::Exclusion { winner: *winner },
        a if a.len() == params.species => CompetitionOutcome::Coexistence {
            horizon: setup.iterations,
            cycle: run.cycle,
        },
        _ => CompetitionOutcome::Other,
    };
    Ok(CompetitionResult {
        outcome,
        species,
        run,
    })
}
