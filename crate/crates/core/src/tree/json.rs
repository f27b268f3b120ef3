//! Canonical JSON form of a debate tree. Output is deterministic: nodes are
//! sorted by id and absent optional fields are omitted.

use serde::{Deserialize, Serialize};

use super::{ArgumentNode, DebateTree, Stance, TreeError};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    tree_id: String,
    title: String,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stance: Option<Stance>,
    text: String,
    #[serde(default, rename = "ref", skip_serializing_if = "Option::is_none")]
    ref_target: Option<String>,
}

pub(crate) fn parse(input: &str) -> Result<DebateTree, TreeError> {
    let doc: TreeDoc = serde_json::from_str(input).map_err(|e| TreeError::Schema(e.to_string()))?;
    let mut tree = DebateTree::new(doc.tree_id, doc.title);
    for n in doc.nodes {
        let id = n.id.clone();
        let node = ArgumentNode {
            id: n.id,
            parent_id: n.parent,
            stance: n.stance,
            text: n.text,
            ref_target: n.ref_target,
        };
        if tree.insert(node).is_some() {
            return Err(TreeError::Schema(format!("duplicate node id `{id}`")));
        }
    }
    Ok(tree)
}

pub(crate) fn render(tree: &DebateTree) -> Vec<u8> {
    let doc = TreeDoc {
        tree_id: tree.tree_id.clone(),
        title: tree.title.clone(),
        nodes: tree
            .nodes
            .values()
            .map(|n| NodeDoc {
                id: n.id.clone(),
                parent: n.parent_id.clone(),
                stance: n.stance,
                text: n.text.clone(),
                ref_target: n.ref_target.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("tree serializes");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{load_tree, save_tree, TreeFormat};

    #[test]
    fn root_only_tree_has_no_stance_field() {
        let mut t = DebateTree::new("t", "Thesis");
        t.insert(ArgumentNode::root("r", "Thesis"));
        let out = String::from_utf8(save_tree(&t, TreeFormat::CanonicalJson)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let nodes = v["nodes"].as_array().unwrap();
        assert_eq!(nodes.len(), 1);
        assert!(nodes[0].get("stance").is_none());
        assert!(nodes[0].get("parent").is_none());
    }

    #[test]
    fn explicit_nulls_are_accepted() {
        let src = r#"{"tree_id":"t","title":"T","nodes":[
            {"id":"r","parent":null,"stance":null,"text":"T","ref":null},
            {"id":"a","parent":"r","stance":"con","text":"no","ref":null}]}"#;
        let t = load_tree(src.as_bytes(), TreeFormat::CanonicalJson).unwrap();
        assert_eq!(t.nodes["a"].stance, Some(Stance::Con));
    }

    #[test]
    fn schema_errors() {
        for bad in [
            "{}",
            r#"{"tree_id":"t","title":"T","nodes":[{"id":"r","text":"T","colour":"red"}]}"#,
            r#"{"tree_id":"t","title":"T","nodes":[{"id":"r","text":"T"},{"id":"r","text":"U"}]}"#,
            r#"{"tree_id":"t","title":"T","nodes":[{"id":"r","text":"T","stance":"maybe"}]}"#,
        ] {
            assert!(
                matches!(load_tree(bad.as_bytes(), TreeFormat::CanonicalJson), Err(TreeError::Schema(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn structural_problems_surface_as_invalid() {
        let src = r#"{"tree_id":"t","title":"T","nodes":[
            {"id":"r","text":"T"},{"id":"a","parent":"r","text":"no stance"}]}"#;
        assert!(matches!(
            load_tree(src.as_bytes(), TreeFormat::CanonicalJson),
            Err(TreeError::Invalid(_))
        ));
    }
}
