//! Stance-annotated debate trees.
//!
//! A [`DebateTree`] holds one stance-less root (the thesis) and any number of
//! arguments, each of which either supports (`Pro`) or refutes (`Con`) its
//! parent. Trees are read from two formats: the numbered plain-text export
//! used by Kialo and a canonical JSON form (see [`kialo`] and [`json`]).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod english;
pub mod json;
pub mod kialo;

pub use english::{default_stopwords, english_score, is_english, LanguageScorer, StopwordScorer, DEFAULT_ENGLISH_THRESHOLD};

/// Whether an argument supports or refutes its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Pro,
    Con,
}

impl Stance {
    pub const ALL: [Stance; 2] = [Stance::Pro, Stance::Con];

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Pro => "Pro",
            Stance::Con => "Con",
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stance {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pro" => Ok(Stance::Pro),
            "con" => Ok(Stance::Con),
            other => Err(TreeError::Schema(format!("unknown stance `{other}`"))),
        }
    }
}

/// One argument (or the thesis) in a debate tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgumentNode {
    pub id: String,
    pub parent_id: Option<String>,
    pub stance: Option<Stance>,
    pub text: String,
    /// Set when the node's content is a pointer to another node.
    pub ref_target: Option<String>,
}

impl ArgumentNode {
    pub fn root(id: impl Into<String>, text: impl Into<String>) -> Self {
        ArgumentNode {
            id: id.into(),
            parent_id: None,
            stance: None,
            text: text.into(),
            ref_target: None,
        }
    }

    pub fn argument(
        id: impl Into<String>,
        parent_id: impl Into<String>,
        stance: Stance,
        text: impl Into<String>,
    ) -> Self {
        ArgumentNode {
            id: id.into(),
            parent_id: Some(parent_id.into()),
            stance: Some(stance),
            text: text.into(),
            ref_target: None,
        }
    }

    pub fn is_root(&self) -> bool {
        self.parent_id.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DebateTree {
    pub tree_id: String,
    /// The thesis text.
    pub title: String,
    pub nodes: BTreeMap<String, ArgumentNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    Cycle,
    /// Root count is not exactly one.
    MultipleRoots,
    Orphan,
    MissingStance,
    DanglingReference,
    EmptyText,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeViolation {
    pub kind: ViolationKind,
    pub node_id: Option<String>,
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node_id {
            Some(id) => write!(f, "{:?} at node `{id}`", self.kind),
            None => write!(f, "{:?}", self.kind),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeFormat {
    KialoExport,
    CanonicalJson,
}

impl FromStr for TreeFormat {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kialo" | "txt" => Ok(TreeFormat::KialoExport),
            "json" => Ok(TreeFormat::CanonicalJson),
            other => Err(TreeError::Schema(format!("unknown tree format `{other}`"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("line {line}: malformed numbering: {reason}")]
    MalformedNumbering { line: usize, reason: String },
    #[error("line {line}: argument `{id}` lacks a `Pro:`/`Con:` prefix")]
    MissingStancePrefix { line: usize, id: String },
    #[error("input is not valid UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("node `{node}` references missing node `{target}`")]
    DanglingReference { node: String, target: String },
    #[error("reference chain starting at `{0}` revisits a node")]
    ReferenceCycle(String),
    #[error("tree has no tokens to score")]
    EmptyTree,
    #[error("stopword set is empty")]
    EmptyStopwords,
    #[error("tree is structurally invalid: {}", join_violations(.0))]
    Invalid(Vec<TreeViolation>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: Box<TreeError> },
}

fn join_violations(v: &[TreeViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl DebateTree {
    pub fn new(tree_id: impl Into<String>, title: impl Into<String>) -> Self {
        DebateTree {
            tree_id: tree_id.into(),
            title: title.into(),
            nodes: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, node: ArgumentNode) -> Option<ArgumentNode> {
        self.nodes.insert(node.id.clone(), node)
    }

    pub fn node(&self, id: &str) -> Option<&ArgumentNode> {
        self.nodes.get(id)
    }

    pub fn root(&self) -> Option<&ArgumentNode> {
        self.nodes.values().find(|n| n.is_root())
    }

    /// Number of non-root arguments.
    pub fn argument_count(&self) -> usize {
        self.nodes.values().filter(|n| !n.is_root()).count()
    }

    /// Child ids per node, in id order.
    pub fn children(&self) -> HashMap<&str, Vec<&str>> {
        let mut map: HashMap<&str, Vec<&str>> = HashMap::new();
        for node in self.nodes.values() {
            if let Some(parent) = &node.parent_id {
                map.entry(parent.as_str()).or_default().push(node.id.as_str());
            }
        }
        map
    }

    /// Stance of every node on the chain, or `None` if any node lacks one.
    pub fn stances<S: AsRef<str>>(&self, ids: &[S]) -> Option<Vec<Stance>> {
        ids.iter()
            .map(|id| self.nodes.get(id.as_ref()).and_then(|n| n.stance))
            .collect()
    }

    pub fn load(bytes: &[u8], format: TreeFormat) -> Result<Self, TreeError> {
        load_tree(bytes, format)
    }

    pub fn save(&self, format: TreeFormat) -> Vec<u8> {
        save_tree(self, format)
    }
}

/// Parses a tree and rejects anything that fails [`validate_tree`].
pub fn load_tree(bytes: &[u8], format: TreeFormat) -> Result<DebateTree, TreeError> {
    let text = std::str::from_utf8(bytes)?;
    let tree = match format {
        TreeFormat::KialoExport => kialo::parse(text)?,
        TreeFormat::CanonicalJson => json::parse(text)?,
    };
    for node in tree.nodes.values() {
        if let Some(target) = &node.ref_target {
            if !tree.nodes.contains_key(target) {
                return Err(TreeError::DanglingReference {
                    node: node.id.clone(),
                    target: target.clone(),
                });
            }
        }
    }
    let violations = validate_tree(&tree);
    if violations.is_empty() {
        Ok(tree)
    } else {
        Err(TreeError::Invalid(violations))
    }
}

impl TreeFormat {
    /// `.json` is canonical JSON; anything else is read as a Kialo export.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => TreeFormat::CanonicalJson,
            _ => TreeFormat::KialoExport,
        }
    }
}

/// Loads one tree, choosing the format by extension.
pub fn read_tree_file(path: &Path) -> Result<DebateTree, TreeError> {
    let bytes = std::fs::read(path).map_err(|source| TreeError::Io { path: path.into(), source })?;
    load_tree(&bytes, TreeFormat::from_path(path))
        .map_err(|e| TreeError::File { path: path.into(), source: Box::new(e) })
}

/// Every `.txt` and `.json` file directly inside `dir`, in file-name order.
pub fn tree_files(dir: &Path) -> Result<Vec<PathBuf>, TreeError> {
    let io = |source| TreeError::Io { path: dir.into(), source };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && matches!(path.extension().and_then(|e| e.to_str()), Some("txt" | "json")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// A single file, or every tree file in a directory.
pub fn read_trees(path: &Path) -> Result<Vec<DebateTree>, TreeError> {
    if path.is_dir() {
        tree_files(path)?.iter().map(|p| read_tree_file(p)).collect()
    } else {
        Ok(vec![read_tree_file(path)?])
    }
}

pub fn save_tree(tree: &DebateTree, format: TreeFormat) -> Vec<u8> {
    match format {
        TreeFormat::KialoExport => kialo::render(tree).into_bytes(),
        TreeFormat::CanonicalJson => json::render(tree),
    }
}

/// Checks every structural invariant. Violations come back sorted; an empty
/// list means the tree is well formed.
///
/// A reference node may carry empty text: it gets its text from
/// [`resolve_references`].
pub fn validate_tree(tree: &DebateTree) -> Vec<TreeViolation> {
    let mut out = BTreeSet::new();
    let mut push = |kind, id: Option<&str>| {
        out.insert(TreeViolation {
            kind,
            node_id: id.map(str::to_string),
        });
    };

    let roots: Vec<&ArgumentNode> = tree
        .nodes
        .values()
        .filter(|n| n.parent_id.is_none() && n.stance.is_none())
        .collect();
    if roots.len() > 1 {
        for r in &roots {
            push(ViolationKind::MultipleRoots, Some(&r.id));
        }
    } else if roots.is_empty() {
        push(ViolationKind::MultipleRoots, None);
    }

    for node in tree.nodes.values() {
        match &node.parent_id {
            None if node.stance.is_some() => push(ViolationKind::Orphan, Some(&node.id)),
            None => {}
            Some(parent) => {
                if !tree.nodes.contains_key(parent) {
                    push(ViolationKind::Orphan, Some(&node.id));
                }
                if node.stance.is_none() {
                    push(ViolationKind::MissingStance, Some(&node.id));
                }
            }
        }
        match &node.ref_target {
            Some(target) if !tree.nodes.contains_key(target) => {
                push(ViolationKind::DanglingReference, Some(&node.id))
            }
            Some(_) => {}
            None if node.text.trim().is_empty() => push(ViolationKind::EmptyText, Some(&node.id)),
            None => {}
        }
    }

    // Walk parent links; any node whose walk revisits a node sits on or above a cycle.
    let mut on_cycle = BTreeSet::new();
    for start in tree.nodes.keys() {
        let mut seen = Vec::new();
        let mut cur = Some(start.as_str());
        while let Some(id) = cur {
            if let Some(pos) = seen.iter().position(|s| *s == id) {
                on_cycle.extend(seen[pos..].iter().map(|s: &&str| s.to_string()));
                break;
            }
            seen.push(id);
            cur = tree.nodes.get(id).and_then(|n| n.parent_id.as_deref());
        }
    }
    for id in on_cycle {
        push(ViolationKind::Cycle, Some(&id));
    }

    out.into_iter().collect()
}

/// Copies referenced text into every referring node, following chains of
/// references to their end. Idempotent; `ref_target` is kept as provenance.
pub fn resolve_references(tree: &DebateTree) -> Result<DebateTree, TreeError> {
    let mut resolved = tree.clone();
    for node in tree.nodes.values() {
        if node.ref_target.is_none() {
            continue;
        }
        let mut visited = vec![node.id.as_str()];
        let mut cur = node;
        while let Some(target) = &cur.ref_target {
            // A reference whose text was already filled in is resolved.
            if !std::ptr::eq(cur, node) && !cur.text.is_empty() {
                break;
            }
            let next = tree.nodes.get(target).ok_or_else(|| TreeError::DanglingReference {
                node: cur.id.clone(),
                target: target.clone(),
            })?;
            if visited.contains(&next.id.as_str()) {
                return Err(TreeError::ReferenceCycle(node.id.clone()));
            }
            visited.push(&next.id);
            cur = next;
        }
        let text = cur.text.clone();
        if let Some(out) = resolved.nodes.get_mut(&node.id) {
            out.text = text;
        }
    }
    Ok(resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fixture_f1() -> DebateTree {
        let mut t = DebateTree::new("f1", "Homework should be banned.");
        t.insert(ArgumentNode::root("R", "Homework should be banned."));
        t.insert(ArgumentNode::argument("A", "R", Stance::Pro, "Kids need the evening to rest."));
        t.insert(ArgumentNode::argument("B", "A", Stance::Con, "Rest is not the same as idleness."));
        t.insert(ArgumentNode::argument("C", "A", Stance::Pro, "Sleep matters for learning."));
        t.insert(ArgumentNode::argument("D", "B", Stance::Pro, "Idle time is when the mind wanders."));
        t.insert(ArgumentNode::argument("E", "D", Stance::Con, "A wandering mind is not a rested one."));
        t
    }

    #[test]
    fn valid_fixture_has_no_violations() {
        assert!(validate_tree(&fixture_f1()).is_empty());
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let mut t = fixture_f1();
        t.nodes.get_mut("C").unwrap().parent_id = Some("C".into());
        assert_eq!(
            validate_tree(&t),
            vec![TreeViolation { kind: ViolationKind::Cycle, node_id: Some("C".into()) }]
        );
    }

    #[test]
    fn missing_stance_is_reported() {
        let mut t = fixture_f1();
        t.nodes.get_mut("D").unwrap().stance = None;
        assert_eq!(
            validate_tree(&t),
            vec![TreeViolation { kind: ViolationKind::MissingStance, node_id: Some("D".into()) }]
        );
    }

    #[test]
    fn orphan_dangling_and_empty_text() {
        let mut t = fixture_f1();
        t.nodes.get_mut("E").unwrap().parent_id = Some("nope".into());
        t.nodes.get_mut("C").unwrap().ref_target = Some("missing".into());
        t.nodes.get_mut("B").unwrap().text = "  ".into();
        let kinds: Vec<_> = validate_tree(&t).into_iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![ViolationKind::Orphan, ViolationKind::DanglingReference, ViolationKind::EmptyText]
        );
    }

    #[test]
    fn two_roots_and_no_roots() {
        let mut t = fixture_f1();
        t.insert(ArgumentNode::root("R2", "Another thesis."));
        let v = validate_tree(&t);
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|v| v.kind == ViolationKind::MultipleRoots));

        let empty = DebateTree::new("x", "x");
        assert_eq!(
            validate_tree(&empty),
            vec![TreeViolation { kind: ViolationKind::MultipleRoots, node_id: None }]
        );
    }

    #[test]
    fn reference_copies_text() {
        let mut t = fixture_f1();
        let c = t.nodes.get_mut("C").unwrap();
        c.text.clear();
        c.ref_target = Some("B".into());
        let r = resolve_references(&t).unwrap();
        assert_eq!(r.nodes["C"].text, "Rest is not the same as idleness.");
        assert_eq!(r.nodes["C"].ref_target.as_deref(), Some("B"));
    }

    #[test]
    fn reference_chain_and_cycle() {
        let mut t = fixture_f1();
        for (id, target) in [("C", "B"), ("B", "D")] {
            let n = t.nodes.get_mut(id).unwrap();
            n.text.clear();
            n.ref_target = Some(target.into());
        }
        let r = resolve_references(&t).unwrap();
        assert_eq!(r.nodes["C"].text, r.nodes["D"].text);
        assert_eq!(r.nodes["B"].text, r.nodes["D"].text);

        t.nodes.get_mut("D").unwrap().text.clear();
        t.nodes.get_mut("D").unwrap().ref_target = Some("C".into());
        assert!(matches!(resolve_references(&t), Err(TreeError::ReferenceCycle(_))));
    }

    #[test]
    fn dangling_reference_errors() {
        let mut t = fixture_f1();
        t.nodes.get_mut("C").unwrap().ref_target = Some("zzz".into());
        assert!(matches!(
            resolve_references(&t),
            Err(TreeError::DanglingReference { .. })
        ));
    }
}
