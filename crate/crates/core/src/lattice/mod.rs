//! Lattice geometry, boundary handling, neighborhoods and the per-generation state grid.

mod neighborhood;
mod snapshot;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use neighborhood::{check_compatible, neighbors, Neighbor, Neighborhood, MAX_RADIUS};
pub(crate) use neighborhood::Topology;

/// Most states a [`StateSet`] can hold; ids are stored as one byte.
pub const MAX_STATES: usize = 256;

/// Identifier of a cell state within its [`StateSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct StateId(pub u8);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered set of named states; ids follow declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    names: Vec<String>,
}

impl StateSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::config("a state set needs at least two states"));
        }
        if names.len() > MAX_STATES {
            return Err(Error::config(format!(
                "a state set holds at most {MAX_STATES} states, got {}",
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !is_identifier(name) {
                return Err(Error::config(format!("invalid state name '{name}'")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::config(format!("duplicate state name '{name}'")));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: StateId) -> &str {
        &self.names[id.index()]
    }

    pub fn get_name(&self, id: StateId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<StateId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u8))
    }

    pub fn contains(&self, id: StateId) -> bool {
        id.index() < self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.names.len()).map(|i| StateId(i as u8))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridKind {
    Square,
    Hex,
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridKind::Square => "square",
            GridKind::Hex => "hex",
        })
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "square" => Ok(GridKind::Square),
            "hex" => Ok(GridKind::Hex),
            other => Err(Error::config(format!(
                "unknown geometry '{other}' (expected square or hex)"
            ))),
        }
    }
}

/// Row/column address of a site. Signed so that positions just outside a fixed
/// boundary can be named.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub row: i64,
    pub col: i64,
}

impl Coord {
    pub const fn new(row: i64, col: i64) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

impl FromStr for Coord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("invalid cell '{s}' (expected row,col)"));
        let (r, c) = s.trim().split_once(',').ok_or_else(bad)?;
        Ok(Coord::new(
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub kind: GridKind,
    pub width: usize,
    pub height: usize,
}

impl Geometry {
    pub fn new(kind: GridKind, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config(format!(
                "lattice dimensions must be positive, got {width}x{height}"
            )));
        }
        if width > u32::MAX as usize || height > u32::MAX as usize {
            return Err(Error::config("lattice dimensions exceed 32 bits"));
        }
        Ok(Self {
            kind,
            width,
            height,
        })
    }

    pub fn square(width: usize, height: usize) -> Result<Self> {
        Self::new(GridKind::Square, width, height)
    }

    pub fn hex(width: usize, height: usize) -> Result<Self> {
        Self::new(GridKind::Hex, width, height)
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.row >= 0 && c.col >= 0 && (c.row as usize) < self.height && (c.col as usize) < self.width
    }

    pub fn index(&self, c: Coord) -> Option<usize> {
        self.contains(c)
            .then(|| c.row as usize * self.width + c.col as usize)
    }

    pub fn coord(&self, index: usize) -> Coord {
        Coord::new((index / self.width) as i64, (index % self.width) as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Everything outside the lattice reads as this state.
    Fixed(StateId),
}

/// One generation: geometry, boundary and a dense row-major state array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    geometry: Geometry,
    boundary: Boundary,
    states: Arc<StateSet>,
    cells: Vec<StateId>,
}

impl Lattice {
    pub fn filled(
        geometry: Geometry,
        boundary: Boundary,
        states: Arc<StateSet>,
        fill: StateId,
    ) -> Result<Self> {
        Self::from_cells(
            geometry,
            boundary,
            states,
            vec![fill; geometry.cell_count()],
        )
    }

    pub fn from_cells(
        geometry: Geometry,
        boundary: Boundary,
        states: Arc<StateSet>,
        cells: Vec<StateId>,
    ) -> Result<Self> {
        if cells.len() != geometry.cell_count() {
            return Err(Error::config(format!(
                "expected {} cells, got {}",
                geometry.cell_count(),
                cells.len()
            )));
        }
        if let Boundary::Fixed(s) = boundary {
            if !states.contains(s) {
                return Err(Error::config(format!("fixed boundary state {s} is not declared")));
            }
        }
        if let Some(bad) = cells.iter().find(|s| !states.contains(**s)) {
            return Err(Error::config(format!("cell state {bad} is not declared")));
        }
        Ok(Self {
            geometry,
            boundary,
            states,
            cells,
        })
    }

    pub(crate) fn into_cells(self) -> Vec<StateId> {
        self.cells
    }

    /// Builds a lattice sharing this one's metadata; `cells` must already be valid.
    pub(crate) fn with_cells(&self, cells: Vec<StateId>) -> Self {
        debug_assert_eq!(cells.len(), self.cells.len());
        Self {
            geometry: self.geometry,
            boundary: self.boundary,
            states: Arc::clone(&self.states),
            cells,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn states(&self) -> &Arc<StateSet> {
        &self.states
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn cells(&self) -> &[StateId] {
        &self.cells
    }

    pub fn get(&self, c: Coord) -> Option<StateId> {
        self.geometry.index(c).map(|i| self.cells[i])
    }

    /// State read at `c`, honouring the boundary for coordinates outside the lattice.
    pub fn read(&self, c: Coord) -> StateId {
        match neighborhood::resolve(&self.geometry, &self.boundary, c.row, c.col) {
            Neighbor::Inside(c) => self.cells[self.geometry.index(c).expect("resolved inside")],
            Neighbor::Outside(_) => match self.boundary {
                Boundary::Fixed(s) => s,
                Boundary::Periodic => unreachable!("periodic lattices have no outside"),
            },
        }
    }

    pub fn set(&mut self, c: Coord, state: StateId) -> Result<()> {
        if !self.states.contains(state) {
            return Err(Error::config(format!("state {state} is not declared")));
        }
        let i = self.geometry.index(c).ok_or_else(|| {
            Error::config(format!(
                "cell {c} is outside the {}x{} lattice",
                self.width(),
                self.height()
            ))
        })?;
        self.cells[i] = state;
        Ok(())
    }

    /// Count of cells per state id; the vector is indexed by id and sums to the cell count.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.states.len()];
        for s in &self.cells {
            h[s.index()] += 1;
        }
        h
    }

    pub fn count(&self, state: StateId) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    /// FNV-1a over width and height (u32 little endian) followed by one byte per cell.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&(self.width() as u32).to_le_bytes());
        h.write(&(self.height() as u32).to_le_bytes());
        for s in &self.cells {
            h.write(&[s.0]);
        }
        h.finish()
    }
}

/// Histogram of a lattice, indexed by state id.
pub fn state_histogram(lattice: &Lattice) -> Vec<usize> {
    lattice.histogram()
}

pub fn lattice_digest(lattice: &Lattice) -> u64 {
    lattice.digest()
}

/// 64-bit FNV-1a.
#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Fnv1a {
    pub const OFFSET_BASIS: u64 = 0xcbf29ce484222325;
    pub const PRIME: u64 = 0x100000001b3;

    pub fn new() -> Self {
        Self(Self::OFFSET_BASIS)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }

    pub fn hash(bytes: &[u8]) -> u64 {
        let mut h = Self::new();
        h.write(bytes);
        h.finish()
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests;
