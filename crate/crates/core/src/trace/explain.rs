//! Causal chains: the recursive attribution of a cell's state to fired rules
//! and the neighbor states those rules read.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use super::{Trace, TraceMode};
use crate::error::{Error, Result};
use crate::lattice::{Coord, Lattice};

pub const DEFAULT_DEPTH: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cause {
    Transition {
        rule: String,
        prev: String,
        support: Vec<(Coord, String)>,
    },
    /// State at iteration 0; taken as given.
    Initial,
    /// The depth limit stopped the walk here.
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainNode {
    pub cell: Coord,
    pub iteration: u32,
    pub state: String,
    pub cause: Cause,
    /// Indices into [`CausalChain::nodes`] of the node's causes at the previous iteration.
    pub parents: Vec<usize>,
}

/// Causes of `(cell, iteration)`, down to `floor = max(0, iteration - depth)`.
///
/// Nodes are shared: each `(cell, iteration)` appears once even when several
/// children depend on it. `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CausalChain {
    pub cell: Coord,
    pub iteration: u32,
    pub depth: u32,
    pub floor: u32,
    pub nodes: Vec<ChainNode>,
}

impl CausalChain {
    pub fn root(&self) -> &ChainNode {
        &self.nodes[0]
    }

    /// Transition nodes only.
    pub fn transitions(&self) -> impl Iterator<Item = &ChainNode> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.cause, Cause::Transition { .. }))
    }

    /// True when no transition is involved, e.g. a query at iteration 0.
    pub fn is_empty(&self) -> bool {
        self.transitions().next().is_none()
    }

    /// Indented rendering; a node reached a second time is printed as a reference.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mut printed = vec![false; self.nodes.len()];
        self.render_node(0, 0, &mut printed, &mut out);
        out
    }

    fn render_node(&self, id: usize, indent: usize, printed: &mut [bool], out: &mut String) {
        let node = &self.nodes[id];
        let pad = "  ".repeat(indent);
        if printed[id] {
            let _ = writeln!(
                out,
                "{pad}#{id} [t={}] cell {} = {} (see above)",
                node.iteration, node.cell, node.state
            );
            return;
        }
        printed[id] = true;
        match &node.cause {
            Cause::Transition {
                rule,
                prev,
                support,
            } => {
                let support = if support.is_empty() {
                    "none".to_owned()
                } else {
                    support
                        .iter()
                        .map(|(c, s)| format!("{c}={s}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                let _ = writeln!(
                    out,
                    "{pad}#{id} [t={}] cell {} = {} by rule '{rule}' (was {prev}); support: {support}",
                    node.iteration, node.cell, node.state
                );
            }
            Cause::Initial => {
                let _ = writeln!(
                    out,
                    "{pad}#{id} [t=0] cell {} = {}: initial pattern (axiomatic)",
                    node.cell, node.state
                );
            }
            Cause::Horizon => {
                let _ = writeln!(
                    out,
                    "{pad}#{id} [t={}] cell {} = {}: depth limit reached",
                    node.iteration, node.cell, node.state
                );
            }
        }
        for &p in &node.parents {
            self.render_node(p, indent + 1, printed, out);
        }
    }

    /// Nested JSON mirroring [`render_text`](Self::render_text): a repeated node
    /// becomes `{"ref": id}`.
    pub fn to_json(&self) -> Value {
        let mut printed = vec![false; self.nodes.len()];
        let tree = self.json_node(0, &mut printed);
        json!({
            "cell": [self.cell.row, self.cell.col],
            "iteration": self.iteration,
            "depth": self.depth,
            "floor": self.floor,
            "root": tree,
        })
    }

    fn json_node(&self, id: usize, printed: &mut [bool]) -> Value {
        if printed[id] {
            return json!({ "ref": id });
        }
        printed[id] = true;
        let node = &self.nodes[id];
        let cause = match &node.cause {
            Cause::Transition {
                rule,
                prev,
                support,
            } => json!({
                "kind": "transition",
                "rule": rule,
                "prev": prev,
                "support": support
                    .iter()
                    .map(|(c, s)| json!({ "cell": [c.row, c.col], "state": s }))
                    .collect::<Vec<_>>(),
            }),
            Cause::Initial => json!({ "kind": "initial" }),
            Cause::Horizon => json!({ "kind": "horizon" }),
        };
        let parents: Vec<Value> = node
            .parents
            .iter()
            .map(|&p| self.json_node(p, printed))
            .collect();
        json!({
            "id": id,
            "cell": [node.cell.row, node.cell.col],
            "iteration": node.iteration,
            "state": node.state,
            "cause": cause,
            "parents": parents,
        })
    }
}

/// Builds the causal chain of `cell` at `iteration`, following at most `depth`
/// transitions back. Needs a full-mode trace.
pub fn explain(
    initial: &Lattice,
    trace: &Trace,
    cell: Coord,
    iteration: u32,
    depth: u32,
) -> Result<CausalChain> {
    if trace.mode != TraceMode::Full {
        return Err(Error::Unsupported(format!(
            "explanations require a full trace (this trace is {})",
            trace.mode
        )));
    }
    let geometry = initial.geometry();
    if !geometry.contains(cell) {
        return Err(Error::config(format!(
            "cell {cell} is outside the {}x{} lattice",
            geometry.width, geometry.height
        )));
    }
    let last = trace.batches.len() as u32;
    if iteration > last {
        return Err(Error::config(format!(
            "iteration {iteration} is beyond the end of the trace ({last})"
        )));
    }
    let index = trace.index(initial)?;
    let floor = iteration.saturating_sub(depth);

    let state_at = |c: Coord, t: u32| -> String {
        if t == 0 {
            initial.states().name(initial.get(c).expect("inside")).to_owned()
        } else {
            let batch = &trace.batches[t as usize - 1];
            let rec = &batch.records[index[t as usize - 1][geometry.index(c).expect("inside")]];
            trace.state_name(rec.next).to_owned()
        }
    };

    let mut nodes: Vec<ChainNode> = Vec::new();
    let mut ids: HashMap<(Coord, u32), usize> = HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    let mut add = |c: Coord, t: u32, nodes: &mut Vec<ChainNode>, queue: &mut std::collections::VecDeque<usize>| {
        *ids.entry((c, t)).or_insert_with(|| {
            nodes.push(ChainNode {
                cell: c,
                iteration: t,
                state: state_at(c, t),
                cause: Cause::Horizon,
                parents: Vec::new(),
            });
            queue.push_back(nodes.len() - 1);
            nodes.len() - 1
        })
    };
    add(cell, iteration, &mut nodes, &mut queue);

    while let Some(id) = queue.pop_front() {
        let (c, t) = (nodes[id].cell, nodes[id].iteration);
        if t == 0 {
            nodes[id].cause = Cause::Initial;
            continue;
        }
        if t <= floor {
            continue;
        }
        let rec = &trace.batches[t as usize - 1].records[index[t as usize - 1][geometry.index(c).expect("inside")]];
        let mut parent_cells = vec![c];
        for s in &rec.support {
            if geometry.contains(s.cell) && !parent_cells.contains(&s.cell) {
                parent_cells.push(s.cell);
            }
        }
        let parents: Vec<usize> = parent_cells
            .into_iter()
            .map(|p| add(p, t - 1, &mut nodes, &mut queue))
            .collect();
        nodes[id].cause = Cause::Transition {
            rule: trace.rule_name(rec.rule).to_owned(),
            prev: trace.state_name(rec.prev).to_owned(),
            support: rec
                .support
                .iter()
                .map(|s| (s.cell, trace.state_name(s.state).to_owned()))
                .collect(),
        };
        nodes[id].parents = parents;
    }

    Ok(CausalChain {
        cell,
        iteration,
        depth,
        floor,
        nodes,
    })
}
