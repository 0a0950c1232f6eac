use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Boundary, Coord, Geometry, GridKind};
use crate::error::{Error, Result};

/// Largest radius accepted for Moore and von Neumann neighborhoods.
pub const MAX_RADIUS: u32 = 4;

/// Which cells around a site feed its transition. The site itself is never a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Neighborhood {
    Moore(u32),
    VonNeumann(u32),
    /// Hexagonal rings on an odd-r offset layout; 1 or 2 layers.
    Hex(u32),
}

impl Neighborhood {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Neighborhood::Moore(r) | Neighborhood::VonNeumann(r) => {
                if r == 0 || r > MAX_RADIUS {
                    return Err(Error::config(format!(
                        "neighborhood {self}: radius must be in 1..={MAX_RADIUS}"
                    )));
                }
            }
            Neighborhood::Hex(k) => {
                if k != 1 && k != 2 {
                    return Err(Error::config(format!(
                        "neighborhood {self}: hex layers must be 1 or 2"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nominal number of neighbors, independent of lattice size.
    pub fn size(&self) -> usize {
        match *self {
            Neighborhood::Moore(r) => {
                let side = 2 * r as usize + 1;
                side * side - 1
            }
            Neighborhood::VonNeumann(r) => {
                let r = r as usize;
                2 * r * (r + 1)
            }
            Neighborhood::Hex(k) => {
                let k = k as usize;
                3 * k * (k + 1)
            }
        }
    }

    pub fn radius(&self) -> u32 {
        match *self {
            Neighborhood::Moore(r) | Neighborhood::VonNeumann(r) | Neighborhood::Hex(r) => r,
        }
    }

    pub fn requires(&self) -> GridKind {
        match self {
            Neighborhood::Hex(_) => GridKind::Hex,
            _ => GridKind::Square,
        }
    }

    /// Offsets `(row delta, col delta)` in canonical order (sorted by row delta, then
    /// column delta). On hex grids the set depends on the parity of the center row.
    pub fn offsets(&self, row_parity: usize) -> Vec<(i32, i32)> {
        let mut out = Vec::with_capacity(self.size());
        match *self {
            Neighborhood::Moore(r) => {
                let r = r as i32;
                for dr in -r..=r {
                    for dc in -r..=r {
                        if (dr, dc) != (0, 0) {
                            out.push((dr, dc));
                        }
                    }
                }
            }
            Neighborhood::VonNeumann(r) => {
                let r = r as i32;
                for dr in -r..=r {
                    for dc in -r..=r {
                        if (dr, dc) != (0, 0) && dr.abs() + dc.abs() <= r {
                            out.push((dr, dc));
                        }
                    }
                }
            }
            Neighborhood::Hex(k) => {
                let k = k as i32;
                let row0 = (row_parity & 1) as i32;
                let (q0, r0) = odd_r_to_axial(row0, 0);
                for dr in -k..=k {
                    for dc in -(k + 1)..=(k + 1) {
                        let (q, r) = odd_r_to_axial(row0 + dr, dc);
                        let d = hex_distance(q - q0, r - r0);
                        if d >= 1 && d <= k {
                            out.push((dr, dc));
                        }
                    }
                }
            }
        }
        out
    }
}

fn odd_r_to_axial(row: i32, col: i32) -> (i32, i32) {
    (col - (row - (row & 1)) / 2, row)
}

fn hex_distance(dq: i32, dr: i32) -> i32 {
    (dq.abs() + dr.abs() + (dq + dr).abs()) / 2
}

impl fmt::Display for Neighborhood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Neighborhood::Moore(r) => write!(f, "moore({r})"),
            Neighborhood::VonNeumann(r) => write!(f, "von_neumann({r})"),
            Neighborhood::Hex(k) => write!(f, "hex({k})"),
        }
    }
}

impl FromStr for Neighborhood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::config(format!("invalid neighborhood '{s}'"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let kind = s[..open].trim();
        let arg: u32 = s[open + 1..s.len() - 1].trim().parse().map_err(|_| bad())?;
        let n = match kind {
            "moore" => Neighborhood::Moore(arg),
            "von_neumann" => Neighborhood::VonNeumann(arg),
            "hex" => Neighborhood::Hex(arg),
            _ => return Err(bad()),
        };
        n.validate()?;
        Ok(n)
    }
}

/// One entry of a neighbor list. Under a fixed boundary, offsets that leave the
/// lattice yield `Outside` with the unwrapped coordinate; such entries read as the
/// boundary's fixed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Neighbor {
    Inside(Coord),
    Outside(Coord),
}

impl Neighbor {
    pub fn coord(&self) -> Coord {
        match *self {
            Neighbor::Inside(c) | Neighbor::Outside(c) => c,
        }
    }

    pub fn is_inside(&self) -> bool {
        matches!(self, Neighbor::Inside(_))
    }
}

/// Checks that a neighborhood can be used on a geometry under a boundary.
pub fn check_compatible(
    geometry: &Geometry,
    boundary: &Boundary,
    spec: &Neighborhood,
) -> Result<()> {
    spec.validate()?;
    if spec.requires() != geometry.kind {
        return Err(Error::config(format!(
            "neighborhood {spec} cannot be used on a {} lattice",
            geometry.kind
        )));
    }
    if geometry.kind == GridKind::Hex
        && matches!(boundary, Boundary::Periodic)
        && !geometry.height.is_multiple_of(2)
    {
        return Err(Error::config(format!(
            "periodic hex lattice needs an even height, got {}",
            geometry.height
        )));
    }
    Ok(())
}

/// Ordered neighbor list of `cell`.
pub fn neighbors(
    geometry: &Geometry,
    boundary: &Boundary,
    spec: &Neighborhood,
    cell: Coord,
) -> Result<Vec<Neighbor>> {
    check_compatible(geometry, boundary, spec)?;
    if !geometry.contains(cell) {
        return Err(Error::config(format!(
            "cell {cell} is outside the {}x{} lattice",
            geometry.width, geometry.height
        )));
    }
    let offsets = spec.offsets(cell.row as usize);
    Ok(offsets
        .into_iter()
        .map(|(dr, dc)| resolve(geometry, boundary, cell.row + dr as i64, cell.col + dc as i64))
        .collect())
}

pub(crate) fn resolve(geometry: &Geometry, boundary: &Boundary, row: i64, col: i64) -> Neighbor {
    let (h, w) = (geometry.height as i64, geometry.width as i64);
    match boundary {
        Boundary::Periodic => Neighbor::Inside(Coord::new(row.rem_euclid(h), col.rem_euclid(w))),
        Boundary::Fixed(_) => {
            let c = Coord::new(row, col);
            if geometry.contains(c) {
                Neighbor::Inside(c)
            } else {
                Neighbor::Outside(c)
            }
        }
    }
}

/// Precomputed row and column lookups for the hot update loop.
#[derive(Debug, Clone)]
pub(crate) struct Topology {
    pub geometry: Geometry,
    pub boundary: Boundary,
    /// Offsets for even and odd center rows.
    pub offsets: [Vec<(i32, i32)>; 2],
    pad: i64,
    /// Column index for `col + pad`, or -1 when outside a fixed boundary.
    col_lookup: Vec<i64>,
}

impl Topology {
    pub fn new(geometry: Geometry, boundary: Boundary, spec: Neighborhood) -> Result<Self> {
        check_compatible(&geometry, &boundary, &spec)?;
        let offsets = [spec.offsets(0), spec.offsets(1)];
        let pad = offsets
            .iter()
            .flatten()
            .map(|&(_, dc)| dc.unsigned_abs() as i64)
            .max()
            .unwrap_or(0);
        let w = geometry.width as i64;
        let col_lookup = (-pad..w + pad)
            .map(|c| match boundary {
                Boundary::Periodic => c.rem_euclid(w),
                Boundary::Fixed(_) if (0..w).contains(&c) => c,
                Boundary::Fixed(_) => -1,
            })
            .collect();
        Ok(Self {
            geometry,
            boundary,
            offsets,
            pad,
            col_lookup,
        })
    }

    pub fn offsets_for_row(&self, row: usize) -> &[(i32, i32)] {
        &self.offsets[row & 1]
    }

    /// Wrapped row index, or -1 when outside a fixed boundary.
    #[inline]
    pub fn row_index(&self, row: i64) -> i64 {
        let h = self.geometry.height as i64;
        match self.boundary {
            Boundary::Periodic => row.rem_euclid(h),
            Boundary::Fixed(_) if (0..h).contains(&row) => row,
            Boundary::Fixed(_) => -1,
        }
    }

    #[inline]
    pub fn col_index(&self, col: i64) -> i64 {
        self.col_lookup[(col + self.pad) as usize]
    }

    pub fn resolve(&self, row: i64, col: i64) -> Neighbor {
        resolve(&self.geometry, &self.boundary, row, col)
    }
}
