//! Transition records: export/import, replay, soundness checks and causal chains.

mod explain;
mod format;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{Coord, Lattice, StateId};
use crate::rules::{RuleId, RuleSet};

pub use explain::{explain, Cause, CausalChain, ChainNode, DEFAULT_DEPTH};
pub use format::{export_trace, import_trace, import_trace_for, write_trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TraceMode {
    /// Rule, previous and next state, plus the supporting neighbor states.
    Full,
    /// Rule, previous and next state only.
    RulesOnly,
    #[default]
    Off,
}

impl fmt::Display for TraceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceMode::Full => "full",
            TraceMode::RulesOnly => "rules_only",
            TraceMode::Off => "off",
        })
    }
}

impl FromStr for TraceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(TraceMode::Full),
            "rules_only" => Ok(TraceMode::RulesOnly),
            "off" => Ok(TraceMode::Off),
            other => Err(Error::config(format!(
                "unknown trace mode '{other}' (expected full, rules_only or off)"
            ))),
        }
    }
}

/// A neighbor whose state the fired rule read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SupportEntry {
    pub cell: Coord,
    pub state: StateId,
}

/// One cell's transition at one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionRecord {
    /// Iteration the new state belongs to; the first step produces iteration 1.
    pub iteration: u32,
    pub cell: Coord,
    pub prev: StateId,
    pub next: StateId,
    pub rule: RuleId,
    /// Empty in rules-only traces.
    pub support: Vec<SupportEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordBatch {
    pub iteration: u32,
    pub records: Vec<TransitionRecord>,
}

/// Recorded transitions of a run. State and rule ids index `states` / `rules`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub states: Vec<String>,
    pub rules: Vec<String>,
    pub mode: TraceMode,
    pub batches: Vec<RecordBatch>,
}

impl Trace {
    pub fn for_rules(rules: &RuleSet, mode: TraceMode) -> Self {
        Self {
            states: rules.states().names().to_vec(),
            rules: rules.rules().iter().map(|r| r.name.clone()).collect(),
            mode,
            batches: Vec::new(),
        }
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.index()]
    }

    pub fn rule_name(&self, id: RuleId) -> &str {
        &self.rules[id.index()]
    }

    pub fn records(&self) -> impl Iterator<Item = &TransitionRecord> {
        self.batches.iter().flat_map(|b| b.records.iter())
    }

    pub fn record_count(&self) -> usize {
        self.batches.iter().map(|b| b.records.len()).sum()
    }

    /// Maps this trace's state ids onto the lattice's state set, by name.
    fn state_map(&self, lattice: &Lattice) -> Result<Vec<StateId>> {
        self.states
            .iter()
            .map(|name| {
                lattice.states().id(name).ok_or_else(|| {
                    Error::config(format!("trace state '{name}' is not a state of the lattice"))
                })
            })
            .collect()
    }

    /// For every batch, the record index of each lattice cell. Fails on a
    /// missing, duplicated or out-of-lattice record, or a gap in iterations.
    fn index(&self, lattice: &Lattice) -> Result<Vec<Vec<usize>>> {
        let geometry = lattice.geometry();
        let n = geometry.cell_count();
        let mut out = Vec::with_capacity(self.batches.len());
        for (b, batch) in self.batches.iter().enumerate() {
            let expected = b as u32 + 1;
            if batch.iteration != expected {
                return Err(Error::TraceIntegrity {
                    iteration: expected,
                    row: 0,
                    col: 0,
                    message: format!("missing iteration (next batch is {})", batch.iteration),
                });
            }
            let mut slot = vec![usize::MAX; n];
            for (i, rec) in batch.records.iter().enumerate() {
                let integrity = |msg: &str| Error::TraceIntegrity {
                    iteration: batch.iteration,
                    row: rec.cell.row,
                    col: rec.cell.col,
                    message: msg.to_owned(),
                };
                if rec.iteration != batch.iteration {
                    return Err(integrity("record filed under the wrong iteration"));
                }
                let cell = geometry
                    .index(rec.cell)
                    .ok_or_else(|| integrity("cell is outside the lattice"))?;
                if slot[cell] != usize::MAX {
                    return Err(integrity("duplicate record"));
                }
                slot[cell] = i;
            }
            if let Some(missing) = slot.iter().position(|&s| s == usize::MAX) {
                let c = geometry.coord(missing);
                return Err(Error::TraceIntegrity {
                    iteration: batch.iteration,
                    row: c.row,
                    col: c.col,
                    message: "missing record".into(),
                });
            }
            out.push(slot);
        }
        Ok(out)
    }
}

/// Result of replaying a trace over an initial lattice.
#[derive(Debug, Clone)]
pub struct Replay {
    /// Digest of every generation, initial lattice first.
    pub digests: Vec<u64>,
    pub final_lattice: Lattice,
}

/// Rebuilds the trajectory from recorded next states alone.
pub fn replay(initial: &Lattice, trace: &Trace) -> Result<Replay> {
    let map = trace.state_map(initial)?;
    let index = trace.index(initial)?;
    let mut cells = initial.cells().to_vec();
    let mut digests = vec![initial.digest()];
    for (batch, slots) in trace.batches.iter().zip(&index) {
        let mut next = cells.clone();
        for (cell, &slot) in slots.iter().enumerate() {
            let rec = &batch.records[slot];
            if map[rec.prev.index()] != cells[cell] {
                return Err(Error::TraceIntegrity {
                    iteration: batch.iteration,
                    row: rec.cell.row,
                    col: rec.cell.col,
                    message: format!(
                        "recorded previous state {} does not match replayed state {}",
                        trace.state_name(rec.prev),
                        initial.states().name(cells[cell])
                    ),
                });
            }
            next[cell] = map[rec.next.index()];
        }
        cells = next;
        digests.push(initial.with_cells(cells.clone()).digest());
    }
    Ok(Replay {
        digests,
        final_lattice: initial.with_cells(cells),
    })
}

/// Re-evaluates the fired rule on the recorded support and previous state.
///
/// Holds for every record of a full trace produced with `rules`: the support
/// contains every neighbor in a state the rule counts, so the rule's counts
/// are exactly reconstructible from it.
pub fn check_record(rules: &RuleSet, record: &TransitionRecord) -> bool {
    let Some(rule) = rules.rules().get(record.rule.index()) else {
        return false;
    };
    let mask = rules.counted_states(record.rule);
    let mut counts = [0u16; crate::lattice::MAX_STATES];
    for entry in &record.support {
        if !mask.contains(entry.state) {
            return false;
        }
        counts[entry.state.index()] += 1;
    }
    rule.guard.eval(record.prev, &counts) && rule.target.resolve(record.prev) == record.next
}

#[cfg(test)]
mod tests;
