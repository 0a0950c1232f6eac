//! Synchronous application of a ruleset to a whole lattice.
//!
//! Each step reads only the current generation and writes a separate next
//! generation, so evaluation order cannot leak into results. Work is split into
//! contiguous row bands; per-band transition records are concatenated in band
//! order, which makes traces byte-identical for any worker count.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Coord, Lattice, Neighbor, StateId, Topology, MAX_STATES};
use crate::rules::RuleSet;
use crate::trace::{RecordBatch, SupportEntry, Trace, TraceMode, TransitionRecord};

/// Env var capping the number of worker threads.
pub const THREADS_ENV: &str = "WHITEBOX_CA_THREADS";

/// Lattices smaller than this are stepped on one thread regardless of the worker count.
const PARALLEL_MIN_CELLS: usize = 4096;

/// Default worker count: available parallelism, capped by `WHITEBOX_CA_THREADS`.
pub fn default_workers() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(cap) if cap >= 1 => available.min(cap),
        _ => available,
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub rule_set: Arc<RuleSet>,
    pub initial: Lattice,
    pub iterations: u32,
    pub trace_mode: TraceMode,
    /// Worker threads; affects speed only. `0` picks [`default_workers`].
    pub workers: usize,
}

impl SimulationConfig {
    pub fn new(rule_set: Arc<RuleSet>, initial: Lattice, iterations: u32) -> Self {
        Self {
            rule_set,
            initial,
            iterations,
            trace_mode: TraceMode::Off,
            workers: 0,
        }
    }

    pub fn with_trace(mut self, mode: TraceMode) -> Self {
        self.trace_mode = mode;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Snapshots `t = 0..=T` plus the transition trace (empty when tracing is off).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Lattice>,
    pub trace: Trace,
}

impl Trajectory {
    pub fn initial(&self) -> &Lattice {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Lattice {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    pub fn iterations(&self) -> u32 {
        (self.snapshots.len() - 1) as u32
    }

    pub fn digests(&self) -> Vec<u64> {
        self.snapshots.iter().map(Lattice::digest).collect()
    }
}

fn check_compatible(rules: &RuleSet, lattice: &Lattice) -> Result<Topology> {
    if rules.states().as_ref() != lattice.states().as_ref() {
        return Err(Error::config(format!(
            "ruleset '{}' declares states {:?} but the lattice uses {:?}",
            rules.name(),
            rules.states().names(),
            lattice.states().names()
        )));
    }
    Topology::new(*lattice.geometry(), *lattice.boundary(), rules.neighborhood())
}

/// A running simulation: current generation, double buffer and accumulated trace.
#[derive(Debug)]
pub struct Simulation {
    rules: Arc<RuleSet>,
    topology: Topology,
    current: Lattice,
    scratch: Vec<StateId>,
    iteration: u32,
    mode: TraceMode,
    workers: usize,
    trace: Trace,
}

impl Simulation {
    pub fn new(rules: Arc<RuleSet>, initial: Lattice, mode: TraceMode, workers: usize) -> Result<Self> {
        let topology = check_compatible(&rules, &initial)?;
        let trace = Trace::for_rules(&rules, mode);
        let scratch = vec![StateId(0); initial.cells().len()];
        Ok(Self {
            rules,
            topology,
            current: initial,
            scratch,
            iteration: 0,
            mode,
            workers: if workers == 0 { default_workers() } else { workers },
            trace,
        })
    }

    pub fn rules(&self) -> &Arc<RuleSet> {
        &self.rules
    }

    pub fn lattice(&self) -> &Lattice {
        &self.current
    }

    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Advances one generation and returns the new lattice.
    pub fn step(&mut self) -> &Lattice {
        let iteration = self.iteration + 1;
        let mut next = std::mem::take(&mut self.scratch);
        let records = step_into(
            &self.rules,
            &self.topology,
            &self.current,
            &mut next,
            iteration,
            self.mode,
            self.workers,
        );
        let next_lattice = self.current.with_cells(next);
        let prev = std::mem::replace(&mut self.current, next_lattice);
        self.scratch = prev.into_cells();
        self.iteration = iteration;
        if let Some(records) = records {
            self.trace.batches.push(RecordBatch { iteration, records });
        }
        &self.current
    }
}

/// One synchronous generation. Returns the next lattice and the records of
/// this step (empty when `mode` is off).
pub fn step(
    lattice: &Lattice,
    rules: &RuleSet,
    iteration: u32,
    mode: TraceMode,
    workers: usize,
) -> Result<(Lattice, Vec<TransitionRecord>)> {
    let topology = check_compatible(rules, lattice)?;
    let mut next = vec![StateId(0); lattice.cells().len()];
    let workers = if workers == 0 { default_workers() } else { workers };
    let records = step_into(rules, &topology, lattice, &mut next, iteration, mode, workers);
    Ok((lattice.with_cells(next), records.unwrap_or_default()))
}

/// Runs `config.iterations` steps and keeps every snapshot.
pub fn run(config: &SimulationConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(
        Arc::clone(&config.rule_set),
        config.initial.clone(),
        config.trace_mode,
        config.workers,
    )?;
    let mut snapshots = Vec::with_capacity(config.iterations as usize + 1);
    snapshots.push(config.initial.clone());
    for _ in 0..config.iterations {
        snapshots.push(sim.step().clone());
    }
    Ok(Trajectory {
        snapshots,
        trace: sim.into_trace(),
    })
}

/// True iff every worker count yields the same digest sequence and trace.
pub fn run_parallel_consistency_check(config: &SimulationConfig, worker_counts: &[usize]) -> bool {
    let mut reference: Option<(Vec<u64>, Trace)> = None;
    for &workers in worker_counts {
        let cfg = config.clone().with_workers(workers.max(1));
        let Ok(t) = run(&cfg) else { return false };
        let got = (t.digests(), t.trace);
        match &reference {
            None => reference = Some(got),
            Some(r) if *r != got => return false,
            Some(_) => {}
        }
    }
    true
}

fn step_into(
    rules: &RuleSet,
    topology: &Topology,
    current: &Lattice,
    next: &mut [StateId],
    iteration: u32,
    mode: TraceMode,
    workers: usize,
) -> Option<Vec<TransitionRecord>> {
    let width = current.width();
    let height = current.height();
    let bands = if current.cells().len() < PARALLEL_MIN_CELLS {
        1
    } else {
        workers.clamp(1, height)
    };
    let ctx = BandContext {
        rules,
        topology,
        cells: current.cells(),
        fixed: match current.boundary() {
            Boundary::Fixed(s) => *s,
            Boundary::Periodic => StateId(0),
        },
        iteration,
        mode,
    };
    if bands == 1 {
        let records = ctx.run_band(0, next);
        return (mode != TraceMode::Off).then_some(records);
    }

    let base = height / bands;
    let extra = height % bands;
    let mut slices = Vec::with_capacity(bands);
    let mut rest = next;
    let mut row = 0;
    for b in 0..bands {
        let rows = base + usize::from(b < extra);
        let (head, tail) = rest.split_at_mut(rows * width);
        slices.push((row, head));
        rest = tail;
        row += rows;
    }
    let parts: Vec<Vec<TransitionRecord>> = std::thread::scope(|s| {
        let handles: Vec<_> = slices
            .into_iter()
            .map(|(first_row, out)| {
                let ctx = &ctx;
                s.spawn(move || ctx.run_band(first_row, out))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("band worker panicked"))
            .collect()
    });
    (mode != TraceMode::Off).then(|| parts.into_iter().flatten().collect())
}

struct BandContext<'a> {
    rules: &'a RuleSet,
    topology: &'a Topology,
    cells: &'a [StateId],
    fixed: StateId,
    iteration: u32,
    mode: TraceMode,
}

impl BandContext<'_> {
    /// Computes rows `first_row..` into `out` (whole rows) and returns their records.
    fn run_band(&self, first_row: usize, out: &mut [StateId]) -> Vec<TransitionRecord> {
        let width = self.topology.geometry.width;
        let rows = out.len() / width;
        let mut records = Vec::new();
        if self.mode != TraceMode::Off {
            records.reserve(out.len());
        }
        let mut counts = [0u16; MAX_STATES];
        let mut states: Vec<StateId> = Vec::with_capacity(self.rules.neighborhood().size());
        let mut row_index: Vec<i64> = Vec::new();

        for r in first_row..first_row + rows {
            let offsets = self.topology.offsets_for_row(r);
            row_index.clear();
            row_index.extend(offsets.iter().map(|&(dr, _)| {
                let i = self.topology.row_index(r as i64 + dr as i64);
                if i < 0 {
                    -1
                } else {
                    i * width as i64
                }
            }));
            for c in 0..width {
                states.clear();
                for (k, &(_, dc)) in offsets.iter().enumerate() {
                    let ri = row_index[k];
                    let ci = self.topology.col_index(c as i64 + dc as i64);
                    let s = if ri < 0 || ci < 0 {
                        self.fixed
                    } else {
                        self.cells[(ri + ci) as usize]
                    };
                    counts[s.index()] += 1;
                    states.push(s);
                }
                let idx = r * width + c;
                let current = self.cells[idx];
                let eval = self.rules.evaluate_counts(current, &counts);
                for s in &states {
                    counts[s.index()] = 0;
                }
                out[idx - first_row * width] = eval.target;

                if self.mode != TraceMode::Off {
                    let support = if self.mode == TraceMode::Full {
                        self.support(r, c, offsets, &states, eval.rule)
                    } else {
                        Vec::new()
                    };
                    records.push(TransitionRecord {
                        iteration: self.iteration,
                        cell: Coord::new(r as i64, c as i64),
                        prev: current,
                        next: eval.target,
                        rule: eval.rule,
                        support,
                    });
                }
            }
        }
        records
    }

    /// Neighbors, in canonical order, holding a state the fired rule counts.
    fn support(
        &self,
        r: usize,
        c: usize,
        offsets: &[(i32, i32)],
        states: &[StateId],
        rule: crate::rules::RuleId,
    ) -> Vec<SupportEntry> {
        let mask = self.rules.counted_states(rule);
        if mask.is_empty() {
            return Vec::new();
        }
        offsets
            .iter()
            .zip(states)
            .filter(|(_, s)| mask.contains(**s))
            .map(|(&(dr, dc), &state)| {
                let cell = match self.topology.resolve(r as i64 + dr as i64, c as i64 + dc as i64) {
                    Neighbor::Inside(c) | Neighbor::Outside(c) => c,
                };
                SupportEntry { cell, state }
            })
            .collect()
    }
}
