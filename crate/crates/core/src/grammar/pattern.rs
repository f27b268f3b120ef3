//! Regular patterns over the two-letter stance alphabet.
//!
//! Supported syntax: the symbols `[Pro]`, `[Con]` and the class `[Pro|Con]`,
//! grouping with parentheses, concatenation, and the postfix operators `*`
//! and `+`. Whitespace between tokens is ignored.
//!
//! Patterns are compiled through a position (Glushkov) automaton into a DFA,
//! so matching is a single left-to-right pass.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::tree::Stance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("pattern syntax error at byte {position}: {message}")]
pub struct PatternError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolClass {
    Pro,
    Con,
    Any,
}

impl SymbolClass {
    fn accepts(self, s: Stance) -> bool {
        matches!(
            (self, s),
            (SymbolClass::Any, _) | (SymbolClass::Pro, Stance::Pro) | (SymbolClass::Con, Stance::Con)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternExpr {
    Symbol(SymbolClass),
    Concat(Vec<PatternExpr>),
    Star(Box<PatternExpr>),
    Plus(Box<PatternExpr>),
}

impl fmt::Display for PatternExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternExpr::Symbol(SymbolClass::Pro) => f.write_str("[Pro]"),
            PatternExpr::Symbol(SymbolClass::Con) => f.write_str("[Con]"),
            PatternExpr::Symbol(SymbolClass::Any) => f.write_str("[Pro|Con]"),
            PatternExpr::Concat(parts) => parts.iter().try_for_each(|p| write!(f, "{p}")),
            PatternExpr::Star(inner) => write_postfix(f, inner, '*'),
            PatternExpr::Plus(inner) => write_postfix(f, inner, '+'),
        }
    }
}

fn write_postfix(f: &mut fmt::Formatter<'_>, inner: &PatternExpr, op: char) -> fmt::Result {
    match inner {
        PatternExpr::Concat(parts) if parts.len() > 1 => write!(f, "({inner}){op}"),
        _ => write!(f, "{inner}{op}"),
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> PatternError {
        PatternError { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn sequence(&mut self) -> Result<PatternExpr, PatternError> {
        let mut parts = Vec::new();
        while let Some(c) = self.peek() {
            if c == ')' {
                break;
            }
            parts.push(self.postfix()?);
        }
        if parts.is_empty() {
            return Err(self.err("expected a stance symbol or group"));
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { PatternExpr::Concat(parts) })
    }

    fn postfix(&mut self) -> Result<PatternExpr, PatternError> {
        let mut expr = self.atom()?;
        loop {
            match self.peek() {
                Some('*') => expr = PatternExpr::Star(Box::new(expr)),
                Some('+') => expr = PatternExpr::Plus(Box::new(expr)),
                _ => return Ok(expr),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<PatternExpr, PatternError> {
        match self.peek() {
            Some('[') => {
                let start = self.pos;
                let Some(close) = self.src[start..].find(']') else {
                    return Err(self.err("unclosed `[`"));
                };
                let body: String = self.src[start + 1..start + close]
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .collect();
                let class = match body.as_str() {
                    "Pro" => SymbolClass::Pro,
                    "Con" => SymbolClass::Con,
                    "Pro|Con" | "Con|Pro" => SymbolClass::Any,
                    other => return Err(self.err(format!("unknown stance class `[{other}]`"))),
                };
                self.pos = start + close + 1;
                Ok(PatternExpr::Symbol(class))
            }
            Some('(') => {
                self.pos += 1;
                if self.peek() == Some(')') {
                    return Err(self.err("empty group"));
                }
                let inner = self.sequence()?;
                if self.peek() != Some(')') {
                    return Err(self.err("unclosed `(`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c @ ('*' | '+')) => Err(self.err(format!("`{c}` has nothing to repeat"))),
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
            None => Err(self.err("unexpected end of pattern")),
        }
    }
}

fn parse(src: &str) -> Result<PatternExpr, PatternError> {
    let mut p = Parser { src, pos: 0 };
    let expr = p.sequence()?;
    match p.peek() {
        None => Ok(expr),
        Some(c) => Err(p.err(format!("unexpected `{c}`"))),
    }
}

/// Glushkov construction: each symbol occurrence becomes a position.
#[derive(Default)]
struct Positions {
    classes: Vec<SymbolClass>,
    follow: Vec<BTreeSet<usize>>,
}

struct Summary {
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
}

impl Positions {
    fn visit(&mut self, e: &PatternExpr) -> Summary {
        match e {
            PatternExpr::Symbol(c) => {
                let p = self.classes.len();
                self.classes.push(*c);
                self.follow.push(BTreeSet::new());
                Summary { nullable: false, first: [p].into(), last: [p].into() }
            }
            PatternExpr::Concat(parts) => {
                let mut acc = Summary { nullable: true, first: BTreeSet::new(), last: BTreeSet::new() };
                for part in parts {
                    let s = self.visit(part);
                    for &l in &acc.last {
                        self.follow[l].extend(s.first.iter().copied());
                    }
                    if acc.nullable {
                        acc.first.extend(s.first.iter().copied());
                    }
                    if s.nullable {
                        acc.last.extend(s.last);
                    } else {
                        acc.last = s.last;
                    }
                    acc.nullable &= s.nullable;
                }
                acc
            }
            PatternExpr::Star(inner) | PatternExpr::Plus(inner) => {
                let s = self.visit(inner);
                for &l in &s.last {
                    self.follow[l].extend(s.first.iter().copied());
                }
                let nullable = matches!(e, PatternExpr::Star(_)) || s.nullable;
                Summary { nullable, ..s }
            }
        }
    }
}

const DEAD: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Dfa {
    accepting: Vec<bool>,
    /// `next[state][stance]`, `DEAD` when no continuation can match.
    next: Vec<[usize; 2]>,
}

fn stance_index(s: Stance) -> usize {
    match s {
        Stance::Pro => 0,
        Stance::Con => 1,
    }
}

fn determinize(expr: &PatternExpr) -> Dfa {
    let mut pos = Positions::default();
    let summary = pos.visit(expr);

    // NFA state `None` is the start state; `Some(p)` means "just read position p".
    let mut ids: BTreeMap<BTreeSet<Option<usize>>, usize> = BTreeMap::new();
    let mut sets: Vec<BTreeSet<Option<usize>>> = Vec::new();
    let mut dfa = Dfa { accepting: Vec::new(), next: Vec::new() };

    let start: BTreeSet<Option<usize>> = [None].into();
    ids.insert(start.clone(), 0);
    sets.push(start);
    let mut i = 0;
    while i < sets.len() {
        let set = sets[i].clone();
        dfa.accepting.push(set.iter().any(|s| match s {
            None => summary.nullable,
            Some(p) => summary.last.contains(p),
        }));
        let mut row = [DEAD; 2];
        for stance in Stance::ALL {
            let target: BTreeSet<Option<usize>> = set
                .iter()
                .flat_map(|s| match s {
                    None => summary.first.iter(),
                    Some(p) => pos.follow[*p].iter(),
                })
                .filter(|&&q| pos.classes[q].accepts(stance))
                .map(|&q| Some(q))
                .collect();
            if target.is_empty() {
                continue;
            }
            let id = *ids.entry(target.clone()).or_insert_with(|| {
                sets.push(target);
                sets.len() - 1
            });
            row[stance_index(stance)] = id;
        }
        dfa.next.push(row);
        i += 1;
    }
    dfa
}

/// A compiled stance pattern.
#[derive(Debug, Clone)]
pub struct StancePattern {
    source: String,
    expr: PatternExpr,
    dfa: Dfa,
}

impl PartialEq for StancePattern {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

impl Eq for StancePattern {}

impl fmt::Display for StancePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for StancePattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StancePattern::compile(s)
    }
}

/// Position of a partial match inside a [`StancePattern`]'s automaton.
/// `None` from [`StancePattern::step`] means no extension can match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchState(usize);

impl StancePattern {
    pub fn compile(source: &str) -> Result<Self, PatternError> {
        let expr = parse(source)?;
        let dfa = determinize(&expr);
        Ok(StancePattern { source: source.to_string(), expr, dfa })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &PatternExpr {
        &self.expr
    }

    pub fn matches(&self, seq: &[Stance]) -> bool {
        let mut state = Some(self.start());
        for &s in seq {
            state = state.and_then(|st| self.step(st, s));
        }
        state.is_some_and(|st| self.is_accepting(st))
    }

    pub fn start(&self) -> MatchState {
        MatchState(0)
    }

    pub fn step(&self, state: MatchState, stance: Stance) -> Option<MatchState> {
        match self.dfa.next[state.0][stance_index(stance)] {
            DEAD => None,
            n => Some(MatchState(n)),
        }
    }

    pub fn is_accepting(&self, state: MatchState) -> bool {
        self.dfa.accepting[state.0]
    }

    /// Number of live DFA states.
    pub fn state_count(&self) -> usize {
        self.dfa.next.len()
    }
}

pub fn compile_stance_pattern(source: &str) -> Result<StancePattern, PatternError> {
    StancePattern::compile(source)
}

pub fn pattern_matches(pattern: &StancePattern, seq: &[Stance]) -> bool {
    pattern.matches(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Stance::{Con as C, Pro as P};

    fn pat(s: &str) -> StancePattern {
        StancePattern::compile(s).unwrap()
    }

    #[test]
    fn contradicting_response() {
        let p = pat("[Con][Pro]*");
        assert!(p.matches(&[C]));
        assert!(p.matches(&[C, P]));
        assert!(p.matches(&[C, P, P]));
        assert!(!p.matches(&[P]));
        assert!(!p.matches(&[P, C]));
        assert!(!p.matches(&[]));
    }

    #[test]
    fn plus_needs_one() {
        let p = pat("[Pro]+");
        assert!(!p.matches(&[]));
        assert!(p.matches(&[P]));
        assert!(p.matches(&[P, P, P]));
        assert!(!p.matches(&[P, C]));
    }

    #[test]
    fn multi_turn_prompt() {
        let p = pat("[Pro|Con][Pro]*([Con][Pro]*)*");
        assert!(p.matches(&[P, C, P, C]));
        assert!(p.matches(&[C, C, C]));
        assert!(!p.matches(&[]));
    }

    #[test]
    fn nested_groups_and_whitespace() {
        let p = pat(" ( [Pro] ([Con] [Pro|Con])+ )* ");
        assert!(p.matches(&[]));
        assert!(p.matches(&[P, C, C]));
        assert!(p.matches(&[P, C, P, C, C, P, C, P]));
        assert!(!p.matches(&[P]));
        assert!(!p.matches(&[P, P, C]));
    }

    #[test]
    fn star_of_star() {
        let p = pat("[Pro]**");
        assert!(p.matches(&[]));
        assert!(p.matches(&[P, P]));
    }

    #[test]
    fn display_round_trips() {
        for src in ["[Pro|Con][Pro]*([Con][Pro]*)*", "[Pro]+", "([Pro][Con])+[Con]"] {
            let p = pat(src);
            assert_eq!(p.expr().to_string(), src);
            assert_eq!(pat(&p.expr().to_string()), p);
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let cases = [
            ("", 0),
            ("   ", 3),
            ("*[Pro]", 0),
            ("[Pro", 0),
            ("[Maybe]", 0),
            ("[Pro](", 6),
            ("[Pro]()", 6),
            ("[Pro])", 5),
            ("[Pro]x", 5),
            ("([Pro]", 6),
        ];
        for (src, position) in cases {
            let err = StancePattern::compile(src).unwrap_err();
            assert_eq!(err.position, position, "{src:?}: {err}");
        }
    }

    #[test]
    fn dfa_is_small() {
        // four symbol positions plus the start state
        assert!(pat("[Pro|Con][Pro]*([Con][Pro]*)*").state_count() <= 5);
    }
}
