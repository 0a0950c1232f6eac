use std::collections::HashMap;
use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use super::{CmpOp, CountExpr, CountTerm, Guard, Rule, RuleSet, Target, MAX_GUARD_DEPTH};
use crate::error::{Error, Position, Result};
use crate::lattice::{Neighborhood, StateId, StateSet, MAX_STATES};

pub(crate) const KEYWORDS: &[&str] = &[
    "ruleset",
    "states",
    "neighborhood",
    "rule",
    "self",
    "true",
    "and",
    "or",
    "not",
    "in",
    "count",
];

/// Parenthesis / `not` nesting beyond this is rejected before it can exhaust the stack.
const MAX_NESTING: usize = 256;

/// Parses `.car` text into a validated ruleset. Every error carries a line and column.
pub fn parse_ruleset(text: &str) -> Result<RuleSet> {
    let tokens = tokenize(text)?;
    Parser {
        tokens,
        at: 0,
        states: HashMap::new(),
        nesting: 0,
    }
    .ruleset()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    states: HashMap<String, StateId>,
    nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn unexpected(&self, expected: &str) -> Error {
        let t = self.peek();
        Error::parse(t.pos, format!("expected {expected}, found {}", t.tok))
    }

    fn expect(&mut self, tok: Tok) -> Result<Position> {
        if self.peek().tok == tok {
            Ok(self.next().pos)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Position> {
        if self.is_keyword(kw) {
            Ok(self.next().pos)
        } else {
            Err(self.unexpected(&format!("'{kw}'")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Position)> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.next().pos))
            }
            Tok::Ident(s) => Err(Error::parse(
                self.peek().pos,
                format!("'{s}' is a reserved word and cannot be used as {what}"),
            )),
            _ => Err(self.unexpected(what)),
        }
    }

    fn int(&mut self) -> Result<(u64, Position)> {
        match self.peek().tok {
            Tok::Int(v) => Ok((v, self.next().pos)),
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn state(&mut self) -> Result<StateId> {
        let (name, pos) = self.ident("a state name")?;
        self.states
            .get(&name)
            .copied()
            .ok_or_else(|| Error::parse(pos, format!("unknown state '{name}'")))
    }

    fn ruleset(mut self) -> Result<RuleSet> {
        self.keyword("ruleset")?;
        let (name, name_pos) = self.ident("a ruleset name")?;
        self.expect(Tok::Semi)?;

        self.keyword("states")?;
        self.expect(Tok::LBrace)?;
        let mut names = Vec::new();
        loop {
            let (s, pos) = self.ident("a state name")?;
            if self.states.contains_key(&s) {
                return Err(Error::parse(pos, format!("duplicate state '{s}'")));
            }
            if names.len() == MAX_STATES {
                return Err(Error::parse(pos, format!("more than {MAX_STATES} states")));
            }
            self.states.insert(s.clone(), StateId(names.len() as u8));
            names.push(s);
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        let close = self.expect(Tok::RBrace)?;
        if names.len() < 2 {
            return Err(Error::parse(close, "a ruleset needs at least two states"));
        }
        self.expect(Tok::Semi)?;
        let states = Arc::new(StateSet::new(names).map_err(|e| Error::parse(close, e.to_string()))?);

        self.keyword("neighborhood")?;
        let neighborhood = self.neighborhood()?;
        self.expect(Tok::Semi)?;

        let mut rules = Vec::new();
        let mut rule_pos: HashMap<String, Position> = HashMap::new();
        let mut last_guard_pos = None;
        while self.is_keyword("rule") {
            self.next();
            let (rname, rpos) = self.ident("a rule name")?;
            if let Some(first) = rule_pos.get(&rname) {
                return Err(Error::parse(
                    rpos,
                    format!("duplicate rule name '{rname}' (first defined at {first})"),
                ));
            }
            rule_pos.insert(rname.clone(), rpos);
            self.expect(Tok::Colon)?;
            let guard_pos = self.peek().pos;
            let guard = self.guard()?;
            if guard.depth() > MAX_GUARD_DEPTH {
                return Err(Error::parse(
                    guard_pos,
                    format!("guard of rule '{rname}' is nested deeper than {MAX_GUARD_DEPTH}"),
                ));
            }
            self.expect(Tok::Arrow)?;
            let target = if self.is_keyword("self") {
                self.next();
                Target::Keep
            } else {
                Target::State(self.state()?)
            };
            self.expect(Tok::Semi)?;
            last_guard_pos = Some(guard_pos);
            rules.push(Rule {
                name: rname,
                guard,
                target,
            });
        }
        if self.peek().tok != Tok::Eof {
            return Err(self.unexpected("'rule' or end of input"));
        }
        match (rules.last(), last_guard_pos) {
            (Some(rule), Some(pos)) if rule.guard != Guard::True => {
                return Err(Error::parse(
                    pos,
                    format!(
                        "ruleset '{name}' is not total: the last rule '{}' must have the guard `true`",
                        rule.name
                    ),
                ))
            }
            (None, _) => {
                return Err(Error::parse(
                    self.peek().pos,
                    format!("ruleset '{name}' has no rules; it needs a final `true` rule"),
                ))
            }
            _ => {}
        }
        RuleSet::new(name, states, neighborhood, rules).map_err(|e| match e {
            Error::Config(msg) => Error::parse(name_pos, msg),
            other => other,
        })
    }

    fn neighborhood(&mut self) -> Result<Neighborhood> {
        let pos = self.peek().pos;
        let kind = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("a neighborhood (moore, von_neumann or hex)")),
        };
        self.next();
        self.expect(Tok::LParen)?;
        let (arg, arg_pos) = self.int()?;
        self.expect(Tok::RParen)?;
        let arg = u32::try_from(arg).map_err(|_| Error::parse(arg_pos, "radius is too large"))?;
        let n = match kind.as_str() {
            "moore" => Neighborhood::Moore(arg),
            "von_neumann" => Neighborhood::VonNeumann(arg),
            "hex" => Neighborhood::Hex(arg),
            other => {
                return Err(Error::parse(
                    pos,
                    format!("unknown neighborhood '{other}' (expected moore, von_neumann or hex)"),
                ))
            }
        };
        n.validate().map_err(|e| Error::parse(arg_pos, e.to_string()))?;
        Ok(n)
    }

    fn enter(&mut self) -> Result<()> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(Error::parse(self.peek().pos, "guard is nested too deeply"));
        }
        Ok(())
    }

    fn guard(&mut self) -> Result<Guard> {
        self.enter()?;
        let mut items = vec![self.conjunction()?];
        while self.is_keyword("or") {
            self.next();
            items.push(self.conjunction()?);
        }
        self.nesting -= 1;
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Guard::Or(items)
        })
    }

    fn conjunction(&mut self) -> Result<Guard> {
        let mut items = vec![self.unary()?];
        while self.is_keyword("and") {
            self.next();
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Guard::And(items)
        })
    }

    fn unary(&mut self) -> Result<Guard> {
        if self.is_keyword("not") {
            self.next();
            self.enter()?;
            let inner = self.unary()?;
            self.nesting -= 1;
            return Ok(Guard::Not(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Guard> {
        if self.is_keyword("true") {
            self.next();
            return Ok(Guard::True);
        }
        if self.peek().tok == Tok::LParen {
            self.next();
            let g = self.guard()?;
            self.expect(Tok::RParen)?;
            return Ok(g);
        }
        if self.is_keyword("self") {
            self.next();
            if self.peek().tok == Tok::EqEq {
                self.next();
                return Ok(Guard::SelfIs(self.state()?));
            }
            if self.is_keyword("in") {
                self.next();
                self.expect(Tok::LBrace)?;
                let mut set = vec![self.state()?];
                while self.peek().tok == Tok::Comma {
                    self.next();
                    set.push(self.state()?);
                }
                self.expect(Tok::RBrace)?;
                return Ok(Guard::SelfIn(set));
            }
            return Err(self.unexpected("'==' or 'in' after 'self'"));
        }
        let lhs = self.count_expr()?;
        let op = match self.peek().tok {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.next();
        let rhs = self.count_expr()?;
        Ok(Guard::Compare { lhs, op, rhs })
    }

    fn count_expr(&mut self) -> Result<CountExpr> {
        let mut terms = vec![self.count_term()?];
        while self.peek().tok == Tok::Plus {
            self.next();
            terms.push(self.count_term()?);
        }
        Ok(CountExpr(terms))
    }

    fn count_term(&mut self) -> Result<CountTerm> {
        if let Tok::Int(_) = self.peek().tok {
            let (v, pos) = self.int()?;
            let v = u32::try_from(v).map_err(|_| Error::parse(pos, "integer literal is too large"))?;
            return Ok(CountTerm::Literal(v));
        }
        if self.is_keyword("count") {
            self.next();
            self.expect(Tok::LParen)?;
            let s = self.state()?;
            self.expect(Tok::RParen)?;
            return Ok(CountTerm::Count(s));
        }
        Err(self.unexpected("a guard"))
    }
}
