//! Line-oriented trace files.
//!
//! ```text
//! t=1 cell=2,1 prev=DEAD next=ALIVE rule=birth support=1,2:ALIVE;2,2:ALIVE;3,2:ALIVE
//! ```
//!
//! Rules-only traces omit the `support=` field.

use std::collections::HashMap;
use std::io::{self, Write};

use super::{RecordBatch, SupportEntry, Trace, TraceMode, TransitionRecord};
use crate::error::{Error, Position, Result};
use crate::lattice::{Coord, StateId, MAX_STATES};
use crate::rules::{RuleId, RuleSet};

pub fn export_trace<W: Write>(trace: &Trace, sink: &mut W) -> io::Result<()> {
    let mut w = io::BufWriter::new(sink);
    let mut line = String::with_capacity(128);
    for rec in trace.records() {
        line.clear();
        format_record(trace, rec, &mut line);
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.record_count() * 64);
    for rec in trace.records() {
        format_record(trace, rec, &mut out);
    }
    out
}

fn format_record(trace: &Trace, rec: &TransitionRecord, out: &mut String) {
    use std::fmt::Write as _;
    let _ = write!(
        out,
        "t={} cell={} prev={} next={} rule={}",
        rec.iteration,
        rec.cell,
        trace.state_name(rec.prev),
        trace.state_name(rec.next),
        trace.rule_name(rec.rule)
    );
    if trace.mode == TraceMode::Full {
        out.push_str(" support=");
        for (i, s) in rec.support.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            let _ = write!(out, "{}:{}", s.cell, trace.state_name(s.state));
        }
    }
    out.push('\n');
}

/// Parses a trace, building the state and rule vocabulary from first appearance.
pub fn import_trace(text: &str) -> Result<Trace> {
    Importer::open().run(text)
}

/// Parses a trace whose names must all belong to `rules`; ids match the ruleset's.
pub fn import_trace_for(text: &str, rules: &RuleSet) -> Result<Trace> {
    let states = rules.states().names().to_vec();
    let rule_names: Vec<String> = rules.rules().iter().map(|r| r.name.clone()).collect();
    Importer::pinned(states, rule_names).run(text)
}

struct Vocab {
    names: Vec<String>,
    ids: HashMap<String, usize>,
    open: bool,
    limit: usize,
}

impl Vocab {
    fn new(names: Vec<String>, open: bool, limit: usize) -> Self {
        let ids = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self {
            names,
            ids,
            open,
            limit,
        }
    }

    fn id(&mut self, name: &str) -> Option<usize> {
        if let Some(&i) = self.ids.get(name) {
            return Some(i);
        }
        if !self.open || self.names.len() >= self.limit || !crate::lattice::is_identifier(name) {
            return None;
        }
        self.ids.insert(name.to_owned(), self.names.len());
        self.names.push(name.to_owned());
        Some(self.names.len() - 1)
    }
}

struct Importer {
    states: Vocab,
    rules: Vocab,
}

impl Importer {
    fn open() -> Self {
        Self {
            states: Vocab::new(Vec::new(), true, MAX_STATES),
            rules: Vocab::new(Vec::new(), true, u16::MAX as usize),
        }
    }

    fn pinned(states: Vec<String>, rules: Vec<String>) -> Self {
        Self {
            states: Vocab::new(states, false, MAX_STATES),
            rules: Vocab::new(rules, false, u16::MAX as usize),
        }
    }

    fn run(mut self, text: &str) -> Result<Trace> {
        let mut batches: Vec<RecordBatch> = Vec::new();
        let mut mode: Option<TraceMode> = None;
        let body = text.strip_suffix('\n').unwrap_or(text);
        let lines = if body.is_empty() { None } else { Some(body.split('\n')) };
        for (i, line) in lines.into_iter().flatten().enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                return Err(Error::parse(Position::new(line_no, 1), "empty line in trace"));
            }
            let (rec, line_mode) = self.record(line, line_no)?;
            match mode {
                None => mode = Some(line_mode),
                Some(m) if m != line_mode => {
                    return Err(Error::parse(
                        Position::new(line_no, 1),
                        "trace mixes records with and without support",
                    ))
                }
                _ => {}
            }
            match batches.last_mut() {
                Some(b) if b.iteration == rec.iteration => b.records.push(rec),
                Some(b) if b.iteration > rec.iteration => {
                    return Err(Error::parse(
                        Position::new(line_no, 1),
                        format!("iteration {} after iteration {}", rec.iteration, b.iteration),
                    ))
                }
                _ => batches.push(RecordBatch {
                    iteration: rec.iteration,
                    records: vec![rec],
                }),
            }
        }
        Ok(Trace {
            states: self.states.names,
            rules: self.rules.names,
            mode: mode.unwrap_or(TraceMode::Full),
            batches,
        })
    }

    fn record(&mut self, line: &str, line_no: usize) -> Result<(TransitionRecord, TraceMode)> {
        let mut fields = Vec::new();
        let mut col = 1;
        for part in line.split(' ') {
            fields.push((col, part));
            col += part.chars().count() + 1;
        }
        let keys = ["t", "cell", "prev", "next", "rule", "support"];
        if fields.len() < 5 || fields.len() > 6 {
            return Err(Error::parse(
                Position::new(line_no, 1),
                format!("expected 5 or 6 fields, found {}", fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for (k, &(col, part)) in fields.iter().enumerate() {
            let at = Position::new(line_no, col);
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(at, format!("expected '{}=...'", keys[k])))?;
            if key != keys[k] {
                return Err(Error::parse(at, format!("expected field '{}', found '{key}'", keys[k])));
            }
            values.push((Position::new(line_no, col + key.len() + 1), value));
        }

        let (at, t) = values[0];
        let iteration: u32 = t
            .parse()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| Error::parse(at, format!("invalid iteration '{t}'")))?;
        let (at, cell) = values[1];
        let cell = parse_coord(cell).ok_or_else(|| Error::parse(at, format!("invalid cell '{cell}'")))?;
        let prev = self.state(values[2])?;
        let next = self.state(values[3])?;
        let (at, rule) = values[4];
        let rule = self
            .rules
            .id(rule)
            .map(|i| RuleId(i as u16))
            .ok_or_else(|| Error::parse(at, format!("unknown rule '{rule}'")))?;

        let (support, mode) = match values.get(5) {
            None => (Vec::new(), TraceMode::RulesOnly),
            Some(&(_, "")) => (Vec::new(), TraceMode::Full),
            Some(&(at, list)) => {
                let mut support = Vec::new();
                let mut offset = 0;
                for item in list.split(';') {
                    let pos = Position::new(at.line, at.column + offset);
                    offset += item.chars().count() + 1;
                    let (c, s) = item
                        .rsplit_once(':')
                        .ok_or_else(|| Error::parse(pos, format!("invalid support entry '{item}'")))?;
                    let cell = parse_coord(c)
                        .ok_or_else(|| Error::parse(pos, format!("invalid support cell '{c}'")))?;
                    let state_pos = Position::new(pos.line, pos.column + c.chars().count() + 1);
                    let state = self.state((state_pos, s))?;
                    support.push(SupportEntry { cell, state });
                }
                (support, TraceMode::Full)
            }
        };
        Ok((
            TransitionRecord {
                iteration,
                cell,
                prev,
                next,
                rule,
                support,
            },
            mode,
        ))
    }

    fn state(&mut self, (at, name): (Position, &str)) -> Result<StateId> {
        self.states
            .id(name)
            .map(|i| StateId(i as u8))
            .ok_or_else(|| Error::parse(at, format!("unknown state '{name}'")))
    }
}

fn parse_coord(s: &str) -> Option<Coord> {
    let (r, c) = s.split_once(',')?;
    Some(Coord::new(r.parse().ok()?, c.parse().ok()?))
}
