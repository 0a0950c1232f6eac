//! Text and PGM snapshots of a single generation.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{Boundary, Geometry, GridKind, Lattice, StateSet};
use crate::error::{Error, Position, Result};

impl Lattice {
    /// `<width> <height>` followed by one line of space-separated state names per row.
    pub fn to_snapshot_text(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 6 + 16);
        let _ = writeln!(out, "{} {}", self.width(), self.height());
        for row in self.cells.chunks(self.width()) {
            for (i, s) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(self.states.name(*s));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot_text(
        text: &str,
        kind: GridKind,
        boundary: Boundary,
        states: Arc<StateSet>,
    ) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(Position::new(1, 1), "empty snapshot"))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::parse(Position::new(1, 1), format!("invalid dimension '{s}'")))
        };
        if dims.len() != 2 {
            return Err(Error::parse(
                Position::new(1, 1),
                "header must be '<width> <height>'",
            ));
        }
        let geometry = Geometry::new(kind, parse_dim(dims[0])?, parse_dim(dims[1])?)?;
        let mut cells = Vec::with_capacity(geometry.cell_count());
        let mut rows = 0;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i + 1;
            if rows == geometry.height {
                return Err(Error::parse(
                    Position::new(line_no, 1),
                    format!("more than {} rows", geometry.height),
                ));
            }
            let before = cells.len();
            for (column, token) in tokens_with_columns(line) {
                let id = states.id(token).ok_or_else(|| {
                    Error::parse(
                        Position::new(line_no, column),
                        format!("unknown state '{token}'"),
                    )
                })?;
                cells.push(id);
            }
            if cells.len() - before != geometry.width {
                return Err(Error::parse(
                    Position::new(line_no, 1),
                    format!(
                        "row has {} cells, expected {}",
                        cells.len() - before,
                        geometry.width
                    ),
                ));
            }
            rows += 1;
        }
        if rows != geometry.height {
            return Err(Error::parse(
                Position::new(text.lines().count().max(1), 1),
                format!("expected {} rows, found {rows}", geometry.height),
            ));
        }
        Lattice::from_cells(geometry, boundary, states, cells)
    }

    /// Plain PGM (P2); state id `i` maps to gray level `i * floor(255 / (n - 1))`.
    pub fn to_pgm(&self) -> String {
        let step = 255 / (self.states.len() - 1).max(1);
        let mut out = String::with_capacity(self.cells.len() * 4 + 32);
        let _ = writeln!(out, "P2\n{} {}\n255", self.width(), self.height());
        for row in self.cells.chunks(self.width()) {
            let line: Vec<String> = row.iter().map(|s| (s.index() * step).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Whitespace-separated tokens with their 1-based starting column.
pub(crate) fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((line[..s].chars().count() + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((line[..s].chars().count() + 1, &line[s..]));
    }
    out
}
