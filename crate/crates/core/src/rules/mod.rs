//! Rule data model, the `.car` rule language, and first-match evaluation.
//!
//! A ruleset is an ordered decision list. For every cell the rules are tried in
//! order and the first one whose guard holds decides the next state. The last
//! rule must be the catch-all `true`, so every configuration is covered.

mod lexer;
mod parser;
mod validate;
mod write;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Neighborhood, StateId, StateSet, MAX_STATES};

pub use parser::parse_ruleset;
pub use validate::{validate, Diagnostic, Severity};

/// Deepest guard nesting the language accepts.
pub const MAX_GUARD_DEPTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    #[inline]
    pub fn apply(self, a: u32, b: u32) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountTerm {
    /// Number of neighbors in a state.
    Count(StateId),
    Literal(u32),
}

/// Sum of count terms and literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountExpr(pub Vec<CountTerm>);

impl CountExpr {
    #[inline]
    pub fn eval(&self, counts: &[u16]) -> u32 {
        self.0
            .iter()
            .map(|t| match *t {
                CountTerm::Count(s) => counts[s.index()] as u32,
                CountTerm::Literal(v) => v,
            })
            .fold(0u32, u32::saturating_add)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    SelfIs(StateId),
    SelfIn(Vec<StateId>),
    Compare {
        lhs: CountExpr,
        op: CmpOp,
        rhs: CountExpr,
    },
    Not(Box<Guard>),
    And(Vec<Guard>),
    Or(Vec<Guard>),
}

impl Guard {
    /// `counts` is indexed by state id and holds neighbor counts.
    pub fn eval(&self, current: StateId, counts: &[u16]) -> bool {
        match self {
            Guard::True => true,
            Guard::SelfIs(s) => current == *s,
            Guard::SelfIn(set) => set.contains(&current),
            Guard::Compare { lhs, op, rhs } => op.apply(lhs.eval(counts), rhs.eval(counts)),
            Guard::Not(g) => !g.eval(current, counts),
            Guard::And(gs) => gs.iter().all(|g| g.eval(current, counts)),
            Guard::Or(gs) => gs.iter().any(|g| g.eval(current, counts)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Guard::Not(g) => 1 + g.depth(),
            Guard::And(gs) | Guard::Or(gs) => 1 + gs.iter().map(Guard::depth).max().unwrap_or(0),
            _ => 1,
        }
    }

    /// Calls `f` on every state id the guard mentions.
    pub fn visit_states(&self, f: &mut impl FnMut(StateId)) {
        match self {
            Guard::True => {}
            Guard::SelfIs(s) => f(*s),
            Guard::SelfIn(set) => set.iter().copied().for_each(f),
            Guard::Compare { lhs, rhs, .. } => {
                for t in lhs.0.iter().chain(&rhs.0) {
                    if let CountTerm::Count(s) = t {
                        f(*s)
                    }
                }
            }
            Guard::Not(g) => g.visit_states(f),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().for_each(|g| g.visit_states(f)),
        }
    }

    /// States that appear inside a `count(...)` term.
    pub fn counted_states(&self) -> StateMask {
        let mut mask = StateMask::default();
        self.visit_counts(&mut |s| mask.insert(s));
        mask
    }

    fn visit_counts(&self, f: &mut impl FnMut(StateId)) {
        match self {
            Guard::Compare { lhs, rhs, .. } => {
                for t in lhs.0.iter().chain(&rhs.0) {
                    if let CountTerm::Count(s) = t {
                        f(*s)
                    }
                }
            }
            Guard::Not(g) => g.visit_counts(f),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().for_each(|g| g.visit_counts(f)),
            _ => {}
        }
    }
}

/// Bit set over the 256 possible state ids.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct StateMask([u64; 4]);

impl StateMask {
    pub fn insert(&mut self, s: StateId) {
        self.0[s.index() >> 6] |= 1 << (s.index() & 63);
    }

    #[inline]
    pub fn contains(&self, s: StateId) -> bool {
        self.0[s.index() >> 6] & (1 << (s.index() & 63)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    State(StateId),
    /// Keep the current state.
    Keep,
}

impl Target {
    #[inline]
    pub fn resolve(self, current: StateId) -> StateId {
        match self {
            Target::State(s) => s,
            Target::Keep => current,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: String,
    pub guard: Guard,
    pub target: Target,
}

/// Index of a rule within its ruleset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub u16);

impl RuleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Result of one first-match evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub target: StateId,
    pub rule: RuleId,
}

/// A validated, immutable decision list.
#[derive(Debug, Clone)]
pub struct RuleSet {
    name: String,
    states: Arc<StateSet>,
    neighborhood: Neighborhood,
    rules: Vec<Rule>,
    counted: Vec<StateMask>,
}

impl PartialEq for RuleSet {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.states == other.states
            && self.neighborhood == other.neighborhood
            && self.rules == other.rules
    }
}

impl Eq for RuleSet {}

impl RuleSet {
    /// Builds a ruleset, rejecting it if [`validate`] reports any error.
    pub fn new(
        name: impl Into<String>,
        states: Arc<StateSet>,
        neighborhood: Neighborhood,
        rules: Vec<Rule>,
    ) -> Result<Self> {
        let set = Self::new_unchecked(name.into(), states, neighborhood, rules);
        let errors: Vec<String> = validate(&set)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        if !errors.is_empty() {
            return Err(Error::config(errors.join("; ")));
        }
        Ok(set)
    }

    pub(crate) fn new_unchecked(
        name: String,
        states: Arc<StateSet>,
        neighborhood: Neighborhood,
        rules: Vec<Rule>,
    ) -> Self {
        let counted = rules.iter().map(|r| r.guard.counted_states()).collect();
        Self {
            name,
            states,
            neighborhood,
            rules,
            counted,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &Arc<StateSet> {
        &self.states
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.index()]
    }

    pub fn rule_id(&self, name: &str) -> Option<RuleId> {
        self.rules
            .iter()
            .position(|r| r.name == name)
            .map(|i| RuleId(i as u16))
    }

    /// States read through `count(...)` by the given rule.
    pub fn counted_states(&self, id: RuleId) -> &StateMask {
        &self.counted[id.index()]
    }

    /// First-match evaluation over precomputed neighbor counts.
    #[inline]
    pub fn evaluate_counts(&self, current: StateId, counts: &[u16]) -> Evaluation {
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.guard.eval(current, counts) {
                return Evaluation {
                    target: rule.target.resolve(current),
                    rule: RuleId(i as u16),
                };
            }
        }
        unreachable!("ruleset '{}' has no catch-all rule", self.name)
    }

    /// Canonical `.car` text.
    pub fn to_text(&self) -> String {
        write::serialize(self)
    }
}

/// Next state of a cell from its own state and its ordered neighbor states.
pub fn evaluate(rule_set: &RuleSet, current: StateId, neighbors: &[StateId]) -> Evaluation {
    debug_assert_eq!(neighbors.len(), rule_set.neighborhood.size());
    let mut counts = [0u16; MAX_STATES];
    for s in neighbors {
        counts[s.index()] += 1;
    }
    rule_set.evaluate_counts(current, &counts)
}

#[cfg(test)]
mod tests;
