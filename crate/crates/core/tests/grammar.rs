mod common;

use common::{stance_string, RegexOracle};
use debate_forge::grammar::{compile_stance_pattern, pattern_matches, ParsingStrategy};
use debate_forge::tree::Stance;
use proptest::prelude::*;

fn all_sequences(max_len: usize) -> Vec<Vec<Stance>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s: &Vec<Stance>| {
                Stance::ALL.map(|x| {
                    let mut n = s.clone();
                    n.push(x);
                    n
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

#[test]
fn builtin_patterns_agree_with_regex() {
    let seqs = all_sequences(10);
    assert_eq!(seqs.len(), 2047);
    for strategy in ParsingStrategy::all_builtin() {
        for pattern in [&strategy.prompt, &strategy.response] {
            let re = RegexOracle::single(pattern.source());
            for s in &seqs {
                assert_eq!(pattern.matches(s), re.is_match(&stance_string(s)), "{} on {:?}", pattern.source(), s);
            }
        }
    }
}

#[test]
fn empty_sequence_never_matches_builtins() {
    for strategy in ParsingStrategy::all_builtin() {
        assert!(!strategy.prompt.matches(&[]));
        assert!(!strategy.response.matches(&[]));
    }
}

fn pattern_source() -> impl Strategy<Value = String> {
    let atom = prop_oneof![Just("[Pro]".to_string()), Just("[Con]".to_string()), Just("[Pro|Con]".to_string())];
    atom.prop_recursive(4, 16, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(|v| v.concat()),
            inner.clone().prop_map(|s| format!("({s})*")),
            inner.clone().prop_map(|s| format!("({s})+")),
            inner.prop_map(|s| format!("({s})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_patterns_agree_with_regex(src in pattern_source(), seq in prop::collection::vec(prop::bool::ANY, 0..12)) {
        let stances: Vec<Stance> = seq.iter().map(|&b| if b { Stance::Pro } else { Stance::Con }).collect();
        let re = RegexOracle::single(&src);
        prop_assert_eq!(pattern_matches(&compile_stance_pattern(&src).unwrap(), &stances), re.is_match(&stance_string(&stances)), "{}", src);
    }

    #[test]
    fn starred_atoms_compile(src in pattern_source()) {
        let starred = format!("({src})*");
        let p = compile_stance_pattern(&starred).unwrap();
        prop_assert!(p.matches(&[]));
    }
}

#[test]
fn malformed_patterns_report_position() {
    for bad in ["", "[Pro", "[Maybe]", "([Pro]", "[Pro])", "*", "[Pro|]"] {
        assert!(compile_stance_pattern(bad).is_err(), "{bad:?} should not compile");
    }
}
