//! Compile a stance grammar and list the prompt/response paths it finds.
//!
//!     cargo run --example stance_paths

use std::path::PathBuf;

use debate_forge::grammar::{compile_stance_pattern, enumerate_debate_paths, ParsingStrategy, PathLimits};
use debate_forge::tree::{read_tree_file, Stance};

fn main() -> anyhow::Result<()> {
    let pattern = compile_stance_pattern("[Con][Pro]*")?;
    for seq in [vec![Stance::Con], vec![Stance::Con, Stance::Pro, Stance::Pro], vec![Stance::Pro]] {
        println!("{:<20} {}", format!("{seq:?}"), pattern.matches(&seq));
    }

    let tree = read_tree_file(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/f1.txt"))?;
    for strategy in ParsingStrategy::all_builtin() {
        let paths = enumerate_debate_paths(&tree, &strategy, PathLimits::default());
        println!("\n{:?}: {} pairs", strategy.kind, paths.len());
        for p in paths {
            let (prompt, response) = p.node_ids.split_at(p.split_index);
            println!("  {} => {}", prompt.join(" "), response.join(" "));
        }
    }

    let custom: ParsingStrategy = "custom:[Pro]/[Con][Con]".parse()?;
    println!("\ncustom: {} pairs", enumerate_debate_paths(&tree, &custom, PathLimits::default()).len());
    Ok(())
}
