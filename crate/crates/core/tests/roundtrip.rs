mod common;

use common::{fixture, random_tree};
use debate_forge::tree::{load_tree, resolve_references, save_tree, tree_files, TreeFormat};

#[test]
fn fixture_files_are_fixed_points() {
    let mut files = tree_files(&fixture("trees")).unwrap();
    files.push(fixture("f1.txt"));
    for file in files {
        let bytes = std::fs::read(&file).unwrap();
        let tree = load_tree(&bytes, TreeFormat::KialoExport).unwrap();
        assert_eq!(save_tree(&tree, TreeFormat::KialoExport), bytes, "{}", file.display());
        let json = save_tree(&tree, TreeFormat::CanonicalJson);
        let back = load_tree(&json, TreeFormat::CanonicalJson).unwrap();
        assert_eq!(back, tree);
        assert_eq!(save_tree(&back, TreeFormat::CanonicalJson), json);
    }
}

#[test]
fn random_trees_round_trip() {
    for seed in 0..100 {
        let tree = random_tree(seed, 40);
        for format in [TreeFormat::KialoExport, TreeFormat::CanonicalJson] {
            let bytes = save_tree(&tree, format);
            let back = load_tree(&bytes, format).unwrap_or_else(|e| panic!("seed {seed} {format:?}: {e}"));
            assert_eq!(back, tree, "seed {seed} {format:?}");
            assert_eq!(save_tree(&back, format), bytes);
        }
    }
}

#[test]
fn references_resolve_in_fixtures() {
    let tree = load_tree(&std::fs::read(fixture("trees/cats.txt")).unwrap(), TreeFormat::KialoExport).unwrap();
    let reference = &tree.nodes["1.4.3"];
    assert_eq!(reference.ref_target.as_deref(), Some("1.1.1"));
    assert!(reference.text.is_empty());
    let resolved = resolve_references(&tree).unwrap();
    assert_eq!(resolved.nodes["1.4.3"].text, tree.nodes["1.1.1"].text);
}
