//! Load a Kialo export, resolve references, validate, and print it as JSON.
//!
//!     cargo run --example trees [path]

use std::path::PathBuf;

use debate_forge::tree::{read_tree_file, resolve_references, save_tree, validate_tree, TreeFormat};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/trees/cats.txt"));
    let tree = read_tree_file(&path)?;
    println!("{} ({} nodes)", tree.title, tree.nodes.len());
    for v in validate_tree(&tree) {
        println!("violation: {v:?}");
    }
    let resolved = resolve_references(&tree)?;
    print!("{}", String::from_utf8(save_tree(&resolved, TreeFormat::CanonicalJson))?);
    Ok(())
}
