use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pattern::MatchState;
use super::{turn_starts, ParsingStrategy, StrategyKind};
use crate::tree::{DebateTree, Stance};

pub const DEFAULT_MAX_LEN: usize = 20;

/// Where a debate path may start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    /// Any non-root argument.
    #[default]
    AnyNode,
    /// Only direct children of the thesis.
    RootChildren,
}

impl FromStr for Anchor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "any" | "any-node" => Ok(Anchor::AnyNode),
            "root" | "root-children" => Ok(Anchor::RootChildren),
            other => Err(format!("unknown anchor `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLimits {
    pub max_len: usize,
    pub anchor: Anchor,
}

impl Default for PathLimits {
    fn default() -> Self {
        PathLimits { max_len: DEFAULT_MAX_LEN, anchor: Anchor::AnyNode }
    }
}

/// A matched chain of arguments with its prompt/response split.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DebatePath {
    pub tree_id: String,
    /// Parent-to-child chain, thesis excluded.
    pub node_ids: Vec<String>,
    /// Index of the first response argument.
    pub split_index: usize,
    pub turn_starts: Vec<usize>,
}

impl DebatePath {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn prompt_ids(&self) -> &[String] {
        &self.node_ids[..self.split_index]
    }

    pub fn response_ids(&self) -> &[String] {
        &self.node_ids[self.split_index..]
    }
}

struct Walker<'a> {
    tree: &'a DebateTree,
    strategy: &'a ParsingStrategy,
    children: HashMap<&'a str, Vec<&'a str>>,
    max_len: usize,
    path: Vec<&'a str>,
    stances: Vec<Stance>,
    out: Vec<DebatePath>,
}

impl<'a> Walker<'a> {
    /// Appends `id` and recurses. `prompt` is the prompt automaton after the
    /// current path; `open` holds `(split, response state)` for every split
    /// whose prompt side matched and whose response side is still alive.
    fn visit(&mut self, id: &'a str, prompt: Option<MatchState>, open: &[(usize, MatchState)]) {
        let Some(stance) = self.tree.nodes.get(id).and_then(|n| n.stance) else {
            return;
        };
        let pos = self.path.len();
        let response = &self.strategy.response;

        let mut next_open: Vec<(usize, MatchState)> = open
            .iter()
            .filter_map(|&(split, st)| response.step(st, stance).map(|n| (split, n)))
            .collect();
        if pos >= 1 && prompt.is_some_and(|st| self.strategy.prompt.is_accepting(st)) {
            if let Some(st) = response.step(response.start(), stance) {
                next_open.push((pos, st));
            }
        }
        let next_prompt = prompt.and_then(|st| self.strategy.prompt.step(st, stance));

        self.path.push(id);
        self.stances.push(stance);

        if self.path.len() >= 2 {
            let mut splits: Vec<usize> = next_open
                .iter()
                .filter(|(_, st)| response.is_accepting(*st))
                .map(|&(split, _)| split)
                .collect();
            splits.sort_unstable();
            for split in splits {
                self.out.push(DebatePath {
                    tree_id: self.tree.tree_id.clone(),
                    node_ids: self.path.iter().map(|s| s.to_string()).collect(),
                    split_index: split,
                    turn_starts: turn_starts(&self.stances),
                });
            }
        }

        let alive = next_prompt.is_some() || !next_open.is_empty();
        if alive && self.path.len() < self.max_len {
            let kids = self.children.get(id).cloned().unwrap_or_default();
            for kid in kids {
                self.visit(kid, next_prompt, &next_open);
            }
        }

        self.path.pop();
        self.stances.pop();
    }
}

/// Every (chain, split) pair in `tree` accepted by `strategy`, ordered by
/// start node id, then length, then chain, then split.
pub fn enumerate_debate_paths(tree: &DebateTree, strategy: &ParsingStrategy, limits: PathLimits) -> Vec<DebatePath> {
    let mut walker = Walker {
        tree,
        strategy,
        children: tree.children(),
        max_len: limits.max_len,
        path: Vec::new(),
        stances: Vec::new(),
        out: Vec::new(),
    };
    let starts: Vec<&str> = tree
        .nodes
        .values()
        .filter(|n| match (&n.parent_id, limits.anchor) {
            (None, _) => false,
            (Some(_), Anchor::AnyNode) => true,
            (Some(p), Anchor::RootChildren) => tree.nodes.get(p).is_some_and(|p| p.is_root()),
        })
        .map(|n| n.id.as_str())
        .collect();
    for start in starts {
        walker.visit(start, Some(strategy.prompt.start()), &[]);
    }
    let mut out = walker.out;
    out.sort_by(|a, b| {
        a.node_ids[0]
            .cmp(&b.node_ids[0])
            .then(a.len().cmp(&b.len()))
            .then_with(|| a.node_ids.cmp(&b.node_ids))
            .then(a.split_index.cmp(&b.split_index))
    });
    debug_assert!(
        strategy.kind != StrategyKind::MultiTurn || out.iter().all(|p| p.turn_starts.contains(&p.split_index))
    );
    out
}
