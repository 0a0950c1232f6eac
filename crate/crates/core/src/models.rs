//! Built-in rulesets and initial-pattern generators.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Coord, Geometry, Lattice, Neighborhood, StateId, StateSet};
use crate::rules::{parse_ruleset, RuleSet};

pub const MAX_SPECIES: usize = 8;
pub const MAX_REGENERATION: u32 = 64;

pub fn game_of_life_text() -> String {
    "ruleset life;\n\
     states { DEAD, ALIVE };\n\
     neighborhood moore(1);\n\
     rule survive: self == ALIVE and (count(ALIVE) == 2 or count(ALIVE) == 3) -> ALIVE;\n\
     rule birth: self == DEAD and count(ALIVE) == 3 -> ALIVE;\n\
     rule default: true -> DEAD;\n"
        .to_owned()
}

/// Conway's Life: `DEAD`/`ALIVE` on `moore(1)`.
pub fn game_of_life_ruleset() -> RuleSet {
    parse_ruleset(&game_of_life_text()).expect("built-in life ruleset parses")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcosystemParams {
    pub species: usize,
    /// Iterations a vacated site spends regenerating before it is free again.
    pub regeneration: u32,
    pub neighborhood: Neighborhood,
    /// Species numbers (1-based), highest priority first; breaks count ties.
    pub priority: Vec<usize>,
}

impl EcosystemParams {
    pub fn new(species: usize, regeneration: u32, neighborhood: Neighborhood) -> Self {
        Self {
            species,
            regeneration,
            neighborhood,
            priority: (1..=species).collect(),
        }
    }

    pub fn with_priority(mut self, priority: Vec<usize>) -> Self {
        self.priority = priority;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.species == 0 || self.species > MAX_SPECIES {
            return Err(Error::config(format!(
                "species count must be in 1..={MAX_SPECIES}, got {}",
                self.species
            )));
        }
        if self.regeneration > MAX_REGENERATION {
            return Err(Error::config(format!(
                "regeneration time must be at most {MAX_REGENERATION}, got {}",
                self.regeneration
            )));
        }
        let mut sorted = self.priority.clone();
        sorted.sort_unstable();
        if sorted != (1..=self.species).collect::<Vec<_>>() {
            return Err(Error::config(format!(
                "priority {:?} is not a permutation of species 1..={}",
                self.priority, self.species
            )));
        }
        self.neighborhood.validate()
    }

    pub fn state_names(&self) -> Vec<String> {
        let mut names = vec!["FREE".to_owned()];
        names.extend((1..=self.regeneration).map(|k| format!("REGEN_{k}")));
        names.extend((1..=self.species).map(|s| format!("OCC_{s}")));
        names
    }

    pub fn occupied(&self, species: usize) -> StateId {
        StateId((self.regeneration as usize + species) as u8)
    }
}

pub fn ecosystem_text(params: &EcosystemParams) -> Result<String> {
    params.validate()?;
    let r = params.regeneration;
    let n = params.species;
    let mut out = String::new();
    let _ = writeln!(out, "ruleset ecosystem_n{n}_r{r};");
    let _ = writeln!(out, "states {{ {} }};", params.state_names().join(", "));
    let _ = writeln!(out, "neighborhood {};", params.neighborhood);
    for k in 1..r {
        let _ = writeln!(out, "rule regen_{k}: self == REGEN_{k} -> REGEN_{};", k + 1);
    }
    if r >= 1 {
        let _ = writeln!(out, "rule recover: self == REGEN_{r} -> FREE;");
    }
    let vacated = if r >= 1 { "REGEN_1" } else { "FREE" };
    for s in 1..=n {
        let _ = writeln!(out, "rule death_{s}: self == OCC_{s} -> {vacated};");
    }
    for (i, &s) in params.priority.iter().enumerate() {
        let mut guard = format!("self == FREE and count(OCC_{s}) >= 1");
        for &t in &params.priority[i + 1..] {
            let _ = write!(guard, " and count(OCC_{s}) >= count(OCC_{t})");
        }
        let _ = writeln!(out, "rule birth_{s}: {guard} -> OCC_{s};");
    }
    out.push_str("rule stay: true -> self;\n");
    Ok(out)
}

/// Immobile single-site individuals living one iteration, reproducing into free
/// neighbors, and leaving a regenerating site behind.
pub fn ecosystem_ruleset(params: &EcosystemParams) -> Result<RuleSet> {
    parse_ruleset(&ecosystem_text(params)?)
}

/// Initial patterns over a background of state 0. States are named.
#[derive(Debug, Clone, PartialEq)]
pub enum SeededPattern {
    /// Nothing but the background.
    Empty,
    Single { state: String, cell: Coord },
    /// Filled rectangle with top-left corner `origin`.
    Block {
        state: String,
        origin: Coord,
        height: usize,
        width: usize,
    },
    Cells { state: String, cells: Vec<Coord> },
    /// Individual cells, each with its own state.
    Points(Vec<(String, Coord)>),
    /// Independent draw per cell; the remainder goes to the background.
    Random { fractions: Vec<(String, f64)>, seed: u64 },
    /// Vertical stripes of `width` columns cycling through `states`.
    Stripes { states: Vec<String>, width: usize },
}

/// splitmix64 with increment `0x9E3779B97F4B7C15`; one output word per call.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4B_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn generate_pattern(
    geometry: Geometry,
    boundary: Boundary,
    states: Arc<StateSet>,
    pattern: &SeededPattern,
) -> Result<Lattice> {
    let mut lattice = Lattice::filled(geometry, boundary, Arc::clone(&states), StateId(0))?;
    let state_id = |name: &str| {
        states
            .id(name)
            .ok_or_else(|| Error::config(format!("pattern state '{name}' is not declared")))
    };
    let check = |c: Coord| {
        if geometry.contains(c) {
            Ok(c)
        } else {
            Err(Error::config(format!(
                "pattern cell {c} is outside the {}x{} lattice",
                geometry.width, geometry.height
            )))
        }
    };
    match pattern {
        SeededPattern::Empty => {}
        SeededPattern::Single { state, cell } => {
            lattice.set(check(*cell)?, state_id(state)?)?;
        }
        SeededPattern::Block {
            state,
            origin,
            height,
            width,
        } => {
            let s = state_id(state)?;
            if *height == 0 || *width == 0 {
                return Err(Error::config("pattern block must be non-empty"));
            }
            check(*origin)?;
            check(Coord::new(
                origin.row + *height as i64 - 1,
                origin.col + *width as i64 - 1,
            ))?;
            for r in 0..*height as i64 {
                for c in 0..*width as i64 {
                    lattice.set(Coord::new(origin.row + r, origin.col + c), s)?;
                }
            }
        }
        SeededPattern::Cells { state, cells } => {
            let s = state_id(state)?;
            for &c in cells {
                lattice.set(check(c)?, s)?;
            }
        }
        SeededPattern::Points(points) => {
            for (state, c) in points {
                lattice.set(check(*c)?, state_id(state)?)?;
            }
        }
        SeededPattern::Random { fractions, seed } => {
            let mut thresholds = Vec::with_capacity(fractions.len());
            let mut total = 0.0;
            for (name, f) in fractions {
                if !(0.0..=1.0).contains(f) {
                    return Err(Error::config(format!(
                        "fraction for '{name}' must be in [0, 1], got {f}"
                    )));
                }
                total += f;
                thresholds.push((total, state_id(name)?));
            }
            if total > 1.0 + 1e-9 {
                return Err(Error::config(format!("pattern fractions sum to {total} > 1")));
            }
            let mut rng = SplitMix64::new(*seed);
            let cells: Vec<StateId> = (0..geometry.cell_count())
                .map(|_| {
                    let x = rng.next_f64();
                    thresholds
                        .iter()
                        .find(|(t, _)| x < *t)
                        .map_or(StateId(0), |&(_, s)| s)
                })
                .collect();
            lattice = Lattice::from_cells(geometry, boundary, states, cells)?;
        }
        SeededPattern::Stripes {
            states: names,
            width,
        } => {
            if names.is_empty() || *width == 0 {
                return Err(Error::config("stripes need at least one state and a positive width"));
            }
            let ids = names.iter().map(|n| state_id(n)).collect::<Result<Vec<_>>>()?;
            for r in 0..geometry.height as i64 {
                for c in 0..geometry.width {
                    let s = ids[(c / width) % ids.len()];
                    lattice.set(Coord::new(r, c as i64), s)?;
                }
            }
        }
    }
    Ok(lattice)
}
