//! Kialo plain-text export.
//!
//! ```text
//! Discussion Title: Cats are the best pets.
//!
//! 1. Cats are the best pets.
//! 1.1. Pro: They purr.
//! 1.1.1. Con: Purring annoys some
//! people at night.
//! 1.2. Con: -> See 1.1.1.
//! ```
//!
//! Dotted numbering encodes parentage. Lines that do not start with a
//! numbering continue the previous argument. An argument whose whole text is
//! `-> See <numbering>.` is a reference to that node.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use regex::Regex;

use super::{ArgumentNode, DebateTree, Stance, TreeError};

const TITLE_PREFIX: &str = "Discussion Title:";

fn node_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(\d+(?:\.\d+)*)\.\s+(Pro:|Con:)?\s*(.*)$").unwrap())
}

fn reference_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^-> See (\d+(?:\.\d+)*)\.$").unwrap())
}

/// Parent numbering of a dotted id, `None` for a single component.
fn parent_of(id: &str) -> Option<&str> {
    id.rfind('.').map(|i| &id[..i])
}

fn numbering_key(id: &str) -> Vec<u64> {
    id.split('.').map(|c| c.parse().unwrap_or(u64::MAX)).collect()
}

pub(crate) fn cmp_numbering(a: &str, b: &str) -> Ordering {
    numbering_key(a).cmp(&numbering_key(b)).then_with(|| a.cmp(b))
}

fn is_numbering(id: &str) -> bool {
    !id.is_empty() && id.split('.').all(|c| !c.is_empty() && c.bytes().all(|b| b.is_ascii_digit()))
}

/// Lowercase alphanumeric slug used as the tree id of a Kialo export.
pub fn slug(title: &str) -> String {
    let mut out = String::new();
    for c in title.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
        if out.chars().count() >= 64 {
            break;
        }
    }
    let out = out.trim_end_matches('-').to_string();
    if out.is_empty() {
        "debate".to_string()
    } else {
        out
    }
}

struct PendingNode {
    id: String,
    stance: Option<Stance>,
    text: String,
}

pub(crate) fn parse(input: &str) -> Result<DebateTree, TreeError> {
    let mut title: Option<String> = None;
    let mut pending: Vec<PendingNode> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut root: Option<String> = None;
    let mut seen_content = false;

    for (i, raw) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if let Some(rest) = line.strip_prefix(TITLE_PREFIX) {
                title = Some(rest.trim().to_string());
                continue;
            }
        }
        let Some(caps) = node_line().captures(line) else {
            let Some(last) = pending.last_mut() else {
                return Err(TreeError::MalformedNumbering {
                    line: line_no,
                    reason: "text before the first numbered line".into(),
                });
            };
            if !last.text.is_empty() {
                last.text.push(' ');
            }
            last.text.push_str(line);
            continue;
        };

        let id = caps[1].to_string();
        if index.contains_key(&id) {
            return Err(TreeError::MalformedNumbering {
                line: line_no,
                reason: format!("duplicate numbering `{id}`"),
            });
        }
        let prefix = caps.get(2).map(|m| m.as_str());
        let body = caps[3].trim();
        let node = match parent_of(&id) {
            None => {
                if let Some(existing) = &root {
                    return Err(TreeError::MalformedNumbering {
                        line: line_no,
                        reason: format!("second thesis `{id}` after `{existing}`"),
                    });
                }
                root = Some(id.clone());
                // The thesis has no stance; keep whatever follows the numbering.
                let text = line[caps.get(1).unwrap().end() + 1..].trim().to_string();
                PendingNode { id: id.clone(), stance: None, text }
            }
            Some(parent) => {
                if !index.contains_key(parent) {
                    return Err(TreeError::MalformedNumbering {
                        line: line_no,
                        reason: format!("`{id}` appears before its parent `{parent}`"),
                    });
                }
                let stance = match prefix {
                    Some("Pro:") => Stance::Pro,
                    Some("Con:") => Stance::Con,
                    _ => return Err(TreeError::MissingStancePrefix { line: line_no, id }),
                };
                PendingNode { id: id.clone(), stance: Some(stance), text: body.to_string() }
            }
        };
        index.insert(id, pending.len());
        pending.push(node);
    }

    let Some(root_id) = root else {
        return Err(TreeError::MalformedNumbering { line: 0, reason: "no thesis line".into() });
    };
    let root_text = pending[index[&root_id]].text.clone();
    let title = title.unwrap_or(root_text);
    let mut tree = DebateTree::new(slug(&title), title);
    for p in pending {
        let mut node = ArgumentNode {
            id: p.id.clone(),
            parent_id: parent_of(&p.id).map(str::to_string),
            stance: p.stance,
            text: p.text,
            ref_target: None,
        };
        if let Some(caps) = reference_marker().captures(&node.text) {
            let target = caps[1].to_string();
            if !index.contains_key(&target) {
                return Err(TreeError::DanglingReference { node: node.id, target });
            }
            node.ref_target = Some(target);
            node.text.clear();
        }
        tree.insert(node);
    }
    Ok(tree)
}

/// Maps node ids to the numbering they are written under. Ids that already
/// form a consistent numbering are kept; otherwise the tree is renumbered in
/// id order.
fn numbering(tree: &DebateTree) -> BTreeMap<String, String> {
    let consistent = tree.nodes.values().all(|n| {
        is_numbering(&n.id)
            && match &n.parent_id {
                None => !n.id.contains('.'),
                Some(p) => parent_of(&n.id) == Some(p.as_str()),
            }
    });
    if consistent {
        return tree.nodes.keys().map(|k| (k.clone(), k.clone())).collect();
    }

    let children = tree.children();
    let mut out = BTreeMap::new();
    let mut stack: Vec<(String, String)> = tree
        .root()
        .map(|r| vec![(r.id.clone(), "1".to_string())])
        .unwrap_or_default();
    while let Some((id, number)) = stack.pop() {
        if let Some(kids) = children.get(id.as_str()) {
            for (k, kid) in kids.iter().enumerate() {
                stack.push((kid.to_string(), format!("{number}.{}", k + 1)));
            }
        }
        out.insert(id, number);
    }
    out
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub(crate) fn render(tree: &DebateTree) -> String {
    let ids = numbering(tree);
    let mut by_number: Vec<(&String, &ArgumentNode)> = tree
        .nodes
        .values()
        .filter_map(|n| ids.get(&n.id).map(|num| (num, n)))
        .collect();
    by_number.sort_by(|a, b| cmp_numbering(a.0, b.0));

    let mut out = format!("{TITLE_PREFIX} {}\n\n", one_line(&tree.title));
    for (number, node) in by_number {
        out.push_str(number);
        out.push_str(". ");
        if let Some(stance) = node.stance {
            out.push_str(stance.as_str());
            out.push_str(": ");
        }
        match node.ref_target.as_ref().and_then(|t| ids.get(t)) {
            Some(target) => {
                out.push_str("-> See ");
                out.push_str(target);
                out.push('.');
            }
            None => out.push_str(&one_line(&node.text)),
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{load_tree, TreeFormat};

    fn load(s: &str) -> Result<DebateTree, TreeError> {
        load_tree(s.as_bytes(), TreeFormat::KialoExport)
    }

    #[test]
    fn three_level_export() {
        let t = load("1. Cats are best.\n1.1. Pro: They purr.\n1.1.1. Con: Purring annoys some.").unwrap();
        assert_eq!(t.nodes.len(), 3);
        assert!(t.nodes["1"].is_root());
        assert_eq!(t.nodes["1.1"].stance, Some(Stance::Pro));
        assert_eq!(t.nodes["1.1"].parent_id.as_deref(), Some("1"));
        assert_eq!(t.nodes["1.1.1"].stance, Some(Stance::Con));
        assert_eq!(t.nodes["1.1.1"].parent_id.as_deref(), Some("1.1"));
        assert_eq!(t.title, "Cats are best.");
        assert_eq!(t.tree_id, "cats-are-best");
    }

    #[test]
    fn thesis_only() {
        let t = load("1. Thesis.").unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.argument_count(), 0);
    }

    #[test]
    fn reference_marker_line() {
        let t = load("1. T.\n1.1. Pro: -> See 1.2.\n1.2. Con: Real text.").unwrap();
        assert_eq!(t.nodes["1.1"].ref_target.as_deref(), Some("1.2"));
        assert_eq!(t.nodes["1.1"].text, "");
        let again = load(std::str::from_utf8(&render(&t).into_bytes()).unwrap()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn near_miss_markers_are_literal() {
        let t = load("1. T.\n1.1. Pro: -> See 1.2\n1.2. Con: -> see 1.1.").unwrap();
        assert!(t.nodes["1.1"].ref_target.is_none());
        assert_eq!(t.nodes["1.1"].text, "-> See 1.2");
        assert!(t.nodes["1.2"].ref_target.is_none());
    }

    #[test]
    fn continuation_lines_join_with_one_space() {
        let t = load("Discussion Title: Topic\n\n1. Thesis\n  spans lines.  \n1.1. Con: First\n\n   second  ").unwrap();
        assert_eq!(t.title, "Topic");
        assert_eq!(t.nodes["1"].text, "Thesis spans lines.");
        assert_eq!(t.nodes["1.1"].text, "First second");
    }

    #[test]
    fn numbering_errors() {
        assert!(matches!(
            load("1. T.\n1.1.1. Pro: early."),
            Err(TreeError::MalformedNumbering { line: 2, .. })
        ));
        assert!(matches!(
            load("1. T.\n2. Another."),
            Err(TreeError::MalformedNumbering { line: 2, .. })
        ));
        assert!(matches!(
            load("1. T.\n1.1. Pro: a\n1.1. Con: b"),
            Err(TreeError::MalformedNumbering { line: 3, .. })
        ));
        assert!(matches!(load("stray\n1. T."), Err(TreeError::MalformedNumbering { line: 1, .. })));
        assert!(matches!(load(""), Err(TreeError::MalformedNumbering { .. })));
    }

    #[test]
    fn missing_prefix() {
        assert!(matches!(
            load("1. T.\n1.1. No prefix here."),
            Err(TreeError::MissingStancePrefix { line: 2, .. })
        ));
    }

    #[test]
    fn dangling_marker_rejected() {
        assert!(matches!(
            load("1. T.\n1.1. Pro: -> See 1.9."),
            Err(TreeError::DanglingReference { .. })
        ));
    }

    #[test]
    fn invalid_utf8() {
        assert!(matches!(
            load_tree(&[0x31, 0x2e, 0x20, 0xff], TreeFormat::KialoExport),
            Err(TreeError::Encoding(_))
        ));
    }

    #[test]
    fn numeric_sibling_order() {
        let mut src = String::from("1. T.\n");
        for i in 1..=11 {
            src.push_str(&format!("1.{i}. Pro: arg {i}\n"));
        }
        let t = load(&src).unwrap();
        let out = render(&t);
        let lines: Vec<&str> = out.lines().skip(2).collect();
        assert_eq!(lines[2], "1.2. Pro: arg 2");
        assert_eq!(lines[11], "1.11. Pro: arg 11");
    }

    #[test]
    fn free_form_ids_are_renumbered() {
        let mut t = DebateTree::new("x", "T");
        t.insert(ArgumentNode::root("root", "T"));
        t.insert(ArgumentNode::argument("b", "root", Stance::Pro, "second"));
        t.insert(ArgumentNode::argument("a", "root", Stance::Con, "first"));
        let mut r = ArgumentNode::argument("c", "a", Stance::Pro, "");
        r.ref_target = Some("b".into());
        t.insert(r);
        let out = render(&t);
        assert_eq!(
            out,
            "Discussion Title: T\n\n1. T\n1.1. Con: first\n1.1.1. Pro: -> See 1.2.\n1.2. Pro: second\n"
        );
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Cats are best."), "cats-are-best");
        assert_eq!(slug("  ?? "), "debate");
    }
}
