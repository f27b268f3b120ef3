#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use debate_forge::grammar::{Anchor, ParsingStrategy, PathLimits};
use debate_forge::tree::{kialo::slug, read_tree_file, read_trees, ArgumentNode, DebateTree, Stance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn f1() -> DebateTree {
    read_tree_file(&fixture("f1.txt")).unwrap()
}

pub fn fixture_trees() -> Vec<DebateTree> {
    read_trees(&fixture("trees")).unwrap()
}

const WORDS: [&str; 16] = [
    "cats", "dogs", "are", "better", "worse", "because", "people", "should", "never", "always", "money", "time",
    "school", "power", "work", "free",
];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(2..8);
    let words: Vec<&str> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
    let mut s = words.join(" ");
    s[..1].make_ascii_uppercase();
    s.push('.');
    s
}

/// A random valid tree with Kialo-style dotted ids and up to `max_args`
/// arguments. A few arguments are references to earlier ones.
pub fn random_tree(seed: u64, max_args: usize) -> DebateTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let title = format!("Random debate {seed}");
    let mut tree = DebateTree::new(slug(&title), title);
    let mut root_text = sentence(&mut rng);
    if rng.random_bool(0.5) {
        root_text = tree.title.clone();
    }
    tree.insert(ArgumentNode::root("1", root_text));
    let mut parents: Vec<(String, usize)> = vec![("1".into(), 0)];
    let mut arguments: Vec<String> = Vec::new();
    let n = rng.random_range(1..=max_args);
    for _ in 0..n {
        let pi = rng.random_range(0..parents.len());
        parents[pi].1 += 1;
        let (parent, k) = parents[pi].clone();
        let id = format!("{parent}.{k}");
        let stance = if rng.random_bool(0.5) { Stance::Pro } else { Stance::Con };
        if !arguments.is_empty() && rng.random_bool(0.05) {
            let target = arguments[rng.random_range(0..arguments.len())].clone();
            let mut node = ArgumentNode::argument(id, parent, stance, "");
            node.ref_target = Some(target);
            tree.insert(node);
        } else {
            tree.insert(ArgumentNode::argument(id.clone(), parent, stance, sentence(&mut rng)));
            parents.push((id.clone(), 0));
            arguments.push(id);
        }
    }
    tree
}

fn to_regex(pattern: &str) -> Regex {
    let body = pattern.replace(' ', "").replace("[Pro|Con]", "[PC]").replace("[Con|Pro]", "[PC]").replace("[Pro]", "P").replace("[Con]", "C");
    Regex::new(&format!("^(?:{body})$")).unwrap()
}

pub fn stance_string(stances: &[Stance]) -> String {
    stances.iter().map(|s| if *s == Stance::Pro { 'P' } else { 'C' }).collect()
}

/// Reference semantics of a stance pattern via the `regex` crate.
pub struct RegexOracle {
    prompt: Regex,
    response: Regex,
}

impl RegexOracle {
    pub fn new(strategy: &ParsingStrategy) -> Self {
        RegexOracle { prompt: to_regex(strategy.prompt.source()), response: to_regex(strategy.response.source()) }
    }

    pub fn single(pattern: &str) -> Regex {
        to_regex(pattern)
    }
}

/// Every (chain, split) pair, found by listing all chains and testing every
/// split against the regex oracle.
pub fn brute_force_paths(tree: &DebateTree, strategy: &ParsingStrategy, limits: PathLimits) -> BTreeSet<(Vec<String>, usize)> {
    let oracle = RegexOracle::new(strategy);
    let children = tree.children();
    let mut out = BTreeSet::new();
    let starts = tree.nodes.values().filter(|n| match (&n.parent_id, limits.anchor) {
        (None, _) => false,
        (Some(_), Anchor::AnyNode) => true,
        (Some(p), Anchor::RootChildren) => tree.nodes[p].parent_id.is_none(),
    });
    for start in starts {
        let mut stack = vec![vec![start.id.clone()]];
        while let Some(chain) = stack.pop() {
            let stances = stance_string(&tree.stances(&chain).unwrap());
            for split in 1..chain.len() {
                if oracle.prompt.is_match(&stances[..split]) && oracle.response.is_match(&stances[split..]) {
                    out.insert((chain.clone(), split));
                }
            }
            if chain.len() < limits.max_len {
                for kid in children.get(chain.last().unwrap().as_str()).into_iter().flatten() {
                    let mut next = chain.clone();
                    next.push(kid.to_string());
                    stack.push(next);
                }
            }
        }
    }
    out
}
