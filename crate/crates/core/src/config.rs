//! INI-style run configuration.
//!
//! ```ini
//! [model]
//! builtin = ecosystem        # or: rules = path/to/file.car
//! species = 2
//! regeneration = 1
//! neighborhood = von_neumann(1)
//! priority = 1, 2
//!
//! [lattice]
//! grid = square
//! width = 40
//! height = 40
//! boundary = periodic        # or: fixed:FREE
//!
//! [pattern]
//! kind = random
//! fractions = OCC_1:0.1, OCC_2:0.1
//! seed = 7
//!
//! [run]
//! iterations = 100
//! trace = full
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Position, Result};
use crate::lattice::{Boundary, Coord, Geometry, GridKind, Lattice, Neighborhood};
use crate::models::{ecosystem_ruleset, game_of_life_ruleset, generate_pattern, EcosystemParams, SeededPattern};
use crate::rules::{parse_ruleset, RuleSet};
use crate::trace::TraceMode;

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    /// Column of the first character of the value.
    column: usize,
    used: std::cell::Cell<bool>,
}

#[derive(Debug, Clone, Default)]
struct Ini {
    sections: Vec<(String, usize, Vec<Entry>)>,
}

const SECTIONS: [&str; 5] = ["model", "lattice", "pattern", "run", "output"];

impl Ini {
    fn parse(text: &str) -> Result<Self> {
        let mut ini = Ini::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    Error::parse(Position::new(line, indent + 1), "unterminated section header")
                })?;
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::parse(
                        Position::new(line, indent + 2),
                        format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")),
                    ));
                }
                if ini.sections.iter().any(|(n, _, _)| n == name) {
                    return Err(Error::parse(Position::new(line, indent + 1), format!("duplicate section [{name}]")));
                }
                ini.sections.push((name.to_owned(), line, Vec::new()));
                continue;
            }
            let eq = content.find('=').ok_or_else(|| {
                Error::parse(Position::new(line, indent + 1), "expected 'key = value'")
            })?;
            let (key, value) = (&content[..eq], &content[eq + 1..]);
            let Some((_, _, entries)) = ini.sections.last_mut() else {
                return Err(Error::parse(Position::new(line, indent + 1), "key outside of any section"));
            };
            let key = key.trim();
            if entries.iter().any(|e| e.key == key) {
                return Err(Error::parse(Position::new(line, indent + 1), format!("duplicate key '{key}'")));
            }
            let column = eq + 1 + (value.len() - value.trim_start().len()) + 1;
            entries.push(Entry {
                key: key.to_owned(),
                value: value.trim().to_owned(),
                line,
                column,
                used: std::cell::Cell::new(false),
            });
        }
        Ok(ini)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        let e = self
            .sections
            .iter()
            .find(|(n, _, _)| n == section)?
            .2
            .iter()
            .find(|e| e.key == key)?;
        e.used.set(true);
        Some(e)
    }

    /// Fails on the first key no reader asked for.
    fn check_unused(&self) -> Result<()> {
        for (name, _, entries) in &self.sections {
            if let Some(e) = entries.iter().find(|e| !e.used.get()) {
                return Err(Error::parse(
                    Position::new(e.line, 1),
                    format!("unknown key '{}' in [{name}]", e.key),
                ));
            }
        }
        Ok(())
    }
}

/// Reads typed values and attaches `[section] key` and a position to errors.
struct Reader<'a> {
    ini: &'a Ini,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&Entry> {
        self.ini.entry(section, key)
    }

    fn fail(e: &Entry, section: &str, msg: impl std::fmt::Display) -> Error {
        Error::parse(Position::new(e.line, e.column), format!("[{section}] {}: {msg}", e.key))
    }

    fn get<T, F>(&self, section: &str, key: &str, parse: F) -> Result<Option<T>>
    where
        F: FnOnce(&str) -> Result<T>,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|err| Self::fail(e, section, err)),
        }
    }

    fn require<T, F>(&self, section: &str, key: &str, parse: F) -> Result<T>
    where
        F: FnOnce(&str) -> Result<T>,
    {
        self.get(section, key, parse)?.ok_or_else(|| {
            Error::config(format!("[{section}] {key} is required"))
        })
    }

    fn number<T: std::str::FromStr>(s: &str) -> Result<T> {
        s.parse().map_err(|_| Error::config(format!("'{s}' is not a valid number")))
    }

    fn message(e: Error) -> Error {
        match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Life,
    Ecosystem(EcosystemParams),
    /// `.car` file, with its text as read.
    File { path: PathBuf, text: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternSource {
    Generated(SeededPattern),
    /// Snapshot file in the text snapshot format.
    Snapshot { path: PathBuf, text: String },
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSource,
    pub geometry: Geometry,
    pub boundary_text: String,
    pub pattern: PatternSource,
    pub iterations: u32,
    pub trace_mode: TraceMode,
    pub workers: usize,
    pub snapshot_every: u32,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::parse(text)?;
        let r = Reader { ini: &ini };
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_owned()
            } else {
                base.join(p)
            }
        };

        let builtin = r.get("model", "builtin", |s| Ok(s.to_owned()))?;
        let rules_path = r.get("model", "rules", |s| Ok(resolve(s)))?;
        let model = match (builtin.as_deref(), rules_path) {
            (Some(_), Some(_)) => {
                return Err(Error::config("[model] builtin and rules are mutually exclusive"))
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::config(format!("[model] rules: cannot read {}: {e}", path.display()))
                })?;
                ModelSource::File { path, text }
            }
            (Some("life"), None) => ModelSource::Life,
            (Some("ecosystem"), None) => {
                let species: usize = r.get("model", "species", Reader::number)?.unwrap_or(1);
                let regeneration: u32 = r.get("model", "regeneration", Reader::number)?.unwrap_or(1);
                let neighborhood = r
                    .get("model", "neighborhood", |s| s.parse::<Neighborhood>().map_err(Reader::message))?
                    .unwrap_or(Neighborhood::VonNeumann(1));
                let mut params = EcosystemParams::new(species, regeneration, neighborhood);
                if let Some(p) = r.get("model", "priority", |s| {
                    s.split(',').map(|x| Reader::number::<usize>(x.trim())).collect::<Result<Vec<_>>>()
                })? {
                    params = params.with_priority(p);
                }
                params.validate()?;
                ModelSource::Ecosystem(params)
            }
            (Some(other), None) => {
                let e = ini.entry("model", "builtin").expect("present");
                return Err(Reader::fail(e, "model", format!("unknown model '{other}' (expected life or ecosystem)")));
            }
            (None, None) => return Err(Error::config("[model] needs either builtin or rules")),
        };

        let kind = r
            .get("lattice", "grid", |s| s.parse::<GridKind>().map_err(Reader::message))?
            .unwrap_or(GridKind::Square);
        let width: usize = r.require("lattice", "width", Reader::number)?;
        let height: usize = r.require("lattice", "height", Reader::number)?;
        let geometry = Geometry::new(kind, width, height)?;
        let boundary_text = r
            .get("lattice", "boundary", |s| {
                if s == "periodic" || s.strip_prefix("fixed:").is_some_and(|x| !x.trim().is_empty()) {
                    Ok(s.replace(' ', ""))
                } else {
                    Err(Error::config(format!("'{s}' is not periodic or fixed:<STATE>")))
                }
            })?
            .unwrap_or_else(|| "periodic".to_owned());

        let pattern = Self::pattern(&r, &resolve)?;

        let iterations: u32 = r.require("run", "iterations", Reader::number)?;
        let trace_mode = r
            .get("run", "trace", |s| s.parse::<TraceMode>().map_err(Reader::message))?
            .unwrap_or(TraceMode::Off);
        let workers = r.get("run", "workers", Reader::number)?.unwrap_or(0);
        let snapshot_every = r.get("run", "snapshot_every", Reader::number)?.unwrap_or(0);
        let output_dir = r.get("output", "dir", |s| Ok(resolve(s)))?.unwrap_or_else(|| base.join("out"));
        ini.check_unused()?;

        let config = Self {
            model,
            geometry,
            boundary_text,
            pattern,
            iterations,
            trace_mode,
            workers,
            snapshot_every,
            output_dir,
        };
        // Surface state-name and file errors at load time, with positions.
        config.build_with(&ini)?;
        Ok(config)
    }

    fn pattern(r: &Reader<'_>, resolve: &dyn Fn(&str) -> PathBuf) -> Result<PatternSource> {
        let kind = r.get("pattern", "kind", |s| Ok(s.to_owned()))?.unwrap_or_else(|| "empty".into());
        let state = || r.require("pattern", "state", |s| Ok(s.to_owned()));
        let coord = |s: &str| s.parse::<Coord>().map_err(Reader::message);
        let pattern = match kind.as_str() {
            "empty" => SeededPattern::Empty,
            "single" => SeededPattern::Single {
                state: state()?,
                cell: r.require("pattern", "cell", coord)?,
            },
            "block" => SeededPattern::Block {
                state: state()?,
                origin: r.require("pattern", "origin", coord)?,
                height: r.require("pattern", "rows", Reader::number)?,
                width: r.require("pattern", "cols", Reader::number)?,
            },
            "cells" => SeededPattern::Cells {
                state: state()?,
                cells: r.require("pattern", "cells", |s| {
                    s.split(';').map(|c| coord(c.trim())).collect()
                })?,
            },
            "points" => SeededPattern::Points(r.require("pattern", "points", |s| {
                s.split(';')
                    .map(|p| {
                        let (name, c) = p.trim().split_once('@').ok_or_else(|| {
                            Error::config(format!("'{}' is not STATE@row,col", p.trim()))
                        })?;
                        Ok((name.trim().to_owned(), coord(c.trim())?))
                    })
                    .collect()
            })?),
            "random" => {
                let fractions = r.require("pattern", "fractions", |s| {
                    s.split(',')
                        .map(|f| {
                            let (name, x) = f.trim().split_once(':').ok_or_else(|| {
                                Error::config(format!("'{}' is not STATE:fraction", f.trim()))
                            })?;
                            let x: f64 = Reader::number(x.trim())?;
                            Ok((name.trim().to_owned(), x))
                        })
                        .collect()
                })?;
                let seed = r.get("pattern", "seed", Reader::number)?.ok_or_else(|| {
                    Error::config("[pattern] seed is required for random patterns")
                })?;
                SeededPattern::Random { fractions, seed }
            }
            "stripes" => SeededPattern::Stripes {
                states: r.require("pattern", "states", |s| {
                    Ok(s.split(',').map(|x| x.trim().to_owned()).collect())
                })?,
                width: r.get("pattern", "stripe_width", Reader::number)?.unwrap_or(1),
            },
            "file" => {
                let path = r.require("pattern", "path", |s| Ok(resolve(s)))?;
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::config(format!("[pattern] path: cannot read {}: {e}", path.display()))
                })?;
                return Ok(PatternSource::Snapshot { path, text });
            }
            other => {
                let e = r.raw("pattern", "kind").expect("present");
                return Err(Reader::fail(
                    e,
                    "pattern",
                    format!("unknown pattern kind '{other}' (expected empty, single, block, cells, points, random, stripes or file)"),
                ));
            }
        };
        Ok(PatternSource::Generated(pattern))
    }

    pub fn rule_set(&self) -> Result<RuleSet> {
        match &self.model {
            ModelSource::Life => Ok(game_of_life_ruleset()),
            ModelSource::Ecosystem(p) => ecosystem_ruleset(p),
            ModelSource::File { text, .. } => parse_ruleset(text),
        }
    }

    /// Builds the ruleset and initial lattice.
    pub fn build(&self) -> Result<(Arc<RuleSet>, Lattice)> {
        self.build_with(&Ini::default())
    }

    fn build_with(&self, ini: &Ini) -> Result<(Arc<RuleSet>, Lattice)> {
        let rules = Arc::new(self.rule_set().map_err(|e| match (&self.model, e) {
            (ModelSource::File { path, .. }, Error::Parse { position, message }) => Error::Parse {
                position,
                message: format!("{}: {message}", path.display()),
            },
            (_, e) => e,
        })?);
        let states = Arc::clone(rules.states());
        let at = |section: &str, key: &str, e: Error| match ini.entry(section, key) {
            Some(entry) => Reader::fail(entry, section, Reader::message(e)),
            None => e,
        };
        let boundary = match self.boundary_text.strip_prefix("fixed:") {
            None => Boundary::Periodic,
            Some(name) => Boundary::Fixed(states.id(name).ok_or_else(|| {
                at("lattice", "boundary", Error::config(format!("unknown state '{name}'")))
            })?),
        };
        let lattice = match &self.pattern {
            PatternSource::Generated(p) => {
                generate_pattern(self.geometry, boundary, Arc::clone(&states), p).map_err(|e| {
                    let key = match p {
                        SeededPattern::Random { .. } => "fractions",
                        SeededPattern::Stripes { .. } => "states",
                        SeededPattern::Points(_) => "points",
                        _ if e.to_string().contains("outside") => match p {
                            SeededPattern::Single { .. } => "cell",
                            SeededPattern::Block { .. } => "origin",
                            _ => "cells",
                        },
                        _ => "state",
                    };
                    at("pattern", key, e)
                })?
            }
            PatternSource::Snapshot { path, text } => {
                let l = Lattice::from_snapshot_text(text, self.geometry.kind, boundary, Arc::clone(&states))
                    .map_err(|e| match e {
                        Error::Parse { position, message } => Error::Parse {
                            position,
                            message: format!("{}: {message}", path.display()),
                        },
                        e => e,
                    })?;
                if l.width() != self.geometry.width || l.height() != self.geometry.height {
                    return Err(Error::config(format!(
                        "snapshot {} is {}x{} but [lattice] says {}x{}",
                        path.display(),
                        l.width(),
                        l.height(),
                        self.geometry.width,
                        self.geometry.height
                    )));
                }
                l
            }
        };
        crate::lattice::check_compatible(&self.geometry, &boundary, &rules.neighborhood())?;
        Ok((rules, lattice))
    }

    /// Every effective parameter, one `key = value` per line, in a fixed order.
    pub fn resolved_text(&self) -> String {
        let mut out = String::from("[model]\n");
        match &self.model {
            ModelSource::Life => out.push_str("builtin = life\n"),
            ModelSource::Ecosystem(p) => {
                out.push_str("builtin = ecosystem\n");
                out.push_str(&format!("species = {}\n", p.species));
                out.push_str(&format!("regeneration = {}\n", p.regeneration));
                out.push_str(&format!("neighborhood = {}\n", p.neighborhood));
                let prio: Vec<String> = p.priority.iter().map(|s| s.to_string()).collect();
                out.push_str(&format!("priority = {}\n", prio.join(", ")));
            }
            ModelSource::File { text, .. } => {
                let canonical = parse_ruleset(text).map(|r| r.to_text()).unwrap_or_else(|_| text.clone());
                out.push_str(&format!(
                    "rules_digest = {:016x}\n",
                    crate::lattice::Fnv1a::hash(canonical.as_bytes())
                ));
            }
        }
        out.push_str("\n[lattice]\n");
        out.push_str(&format!("grid = {}\n", self.geometry.kind));
        out.push_str(&format!("width = {}\n", self.geometry.width));
        out.push_str(&format!("height = {}\n", self.geometry.height));
        out.push_str(&format!("boundary = {}\n", self.boundary_text));
        out.push_str("\n[pattern]\n");
        match &self.pattern {
            PatternSource::Snapshot { text, .. } => {
                out.push_str("kind = file\n");
                out.push_str(&format!("snapshot_digest = {:016x}\n", crate::lattice::Fnv1a::hash(text.as_bytes())));
            }
            PatternSource::Generated(p) => out.push_str(&pattern_text(p)),
        }
        out.push_str("\n[run]\n");
        out.push_str(&format!("iterations = {}\n", self.iterations));
        out.push_str(&format!("trace = {}\n", self.trace_mode));
        out
    }

    /// FNV-1a of [`resolved_text`](Self::resolved_text). Paths, worker counts
    /// and output settings are excluded, so identical inputs hash equally anywhere.
    pub fn config_hash(&self) -> u64 {
        crate::lattice::Fnv1a::hash(self.resolved_text().as_bytes())
    }
}

fn pattern_text(p: &SeededPattern) -> String {
    let coords = |cs: &[Coord]| cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ");
    match p {
        SeededPattern::Empty => "kind = empty\n".into(),
        SeededPattern::Single { state, cell } => format!("kind = single\nstate = {state}\ncell = {cell}\n"),
        SeededPattern::Block {
            state,
            origin,
            height,
            width,
        } => format!("kind = block\nstate = {state}\norigin = {origin}\nrows = {height}\ncols = {width}\n"),
        SeededPattern::Cells { state, cells } => {
            format!("kind = cells\nstate = {state}\ncells = {}\n", coords(cells))
        }
        SeededPattern::Points(points) => {
            let list: Vec<String> = points.iter().map(|(s, c)| format!("{s}@{c}")).collect();
            format!("kind = points\npoints = {}\n", list.join("; "))
        }
        SeededPattern::Random { fractions, seed } => {
            let list: Vec<String> = fractions.iter().map(|(s, f)| format!("{s}:{f}")).collect();
            format!("kind = random\nfractions = {}\nseed = {seed}\n", list.join(", "))
        }
        SeededPattern::Stripes { states, width } => {
            format!("kind = stripes\nstates = {}\nstripe_width = {width}\n", states.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLINKER: &str = "\
[model]
builtin = life

[lattice]
width = 5
height = 5

[pattern]
kind = cells
state = ALIVE
cells = 1,2; 2,2; 3,2

[run]
iterations = 4
trace = full
";

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/tmp"))
    }

    fn position(text: &str) -> (usize, usize, String) {
        match parse(text) {
            Err(Error::Parse { position, message }) => (position.line, position.column, message),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn blinker_config() {
        let c = parse(BLINKER).unwrap();
        assert_eq!(c.model, ModelSource::Life);
        assert_eq!(c.iterations, 4);
        assert_eq!(c.trace_mode, TraceMode::Full);
        assert_eq!(c.output_dir, Path::new("/tmp/out"));
        let (_, l) = c.build().unwrap();
        assert_eq!(l.histogram(), vec![22, 3]);
    }

    #[test]
    fn unknown_state_cites_field() {
        let (line, col, msg) = position(&BLINKER.replace("state = ALIVE", "state = ZOMBIE"));
        assert_eq!((line, col), (10, 9));
        assert!(msg.contains("[pattern] state"), "{msg}");
        assert!(msg.contains("ZOMBIE"), "{msg}");
    }

    #[test]
    fn positioned_errors() {
        let (line, col, _) = position(&BLINKER.replace("width = 5", "width = five"));
        assert_eq!((line, col), (5, 9));
        let (line, _, msg) = position(&BLINKER.replace("[run]", "[runn]"));
        assert_eq!(line, 13);
        assert!(msg.contains("unknown section"));
        let (line, _, msg) = position(&format!("{BLINKER}colour = red\n"));
        assert_eq!(line, 16);
        assert!(msg.contains("unknown key 'colour'"));
        let (line, _, _) = position(&BLINKER.replace("height = 5", "height 5"));
        assert_eq!(line, 6);
        let (line, col, _) = position(&BLINKER.replace("cells = 1,2;", "cells = 9,2;"));
        assert_eq!((line, col), (11, 9));
    }

    #[test]
    fn random_needs_seed() {
        let text = BLINKER.replace(
            "kind = cells\nstate = ALIVE\ncells = 1,2; 2,2; 3,2",
            "kind = random\nfractions = ALIVE:0.5",
        );
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("seed is required"), "{err}");
        assert!(parse(&format!("{text}\n")).is_err());
        let with_seed = text.replace("fractions = ALIVE:0.5", "fractions = ALIVE:0.5\nseed = 42");
        assert!(parse(&with_seed).is_ok());
    }

    #[test]
    fn hash_is_stable() {
        let a = parse(BLINKER).unwrap();
        let b = RunConfig::parse(&BLINKER.replace("iterations = 4", "iterations = 4  # four"), Path::new("/elsewhere")).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c = parse(&BLINKER.replace("iterations = 4", "iterations = 5")).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
        assert!(a.resolved_text().contains("boundary = periodic\n"));
    }

    #[test]
    fn ecosystem_config() {
        let text = "\
[model]
builtin = ecosystem
species = 2
regeneration = 0
priority = 2, 1
[lattice]
width = 10
height = 10
boundary = fixed:FREE
[pattern]
kind = points
points = OCC_1@2,2; OCC_2@7,7
[run]
iterations = 10
";
        let c = parse(text).unwrap();
        let (rules, l) = c.build().unwrap();
        assert_eq!(rules.rules()[2].name, "birth_2");
        assert_eq!(l.histogram(), vec![98, 1, 1]);
        assert_eq!(*l.boundary(), Boundary::Fixed(crate::lattice::StateId(0)));
        let err = parse(&text.replace("priority = 2, 1", "priority = 2, 2")).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains("permutation"));
    }
}
