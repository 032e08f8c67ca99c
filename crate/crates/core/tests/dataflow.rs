mod common;

use asap::analysis::{build_dfg, tag_identifiers, EdgeKind};
use asap::corpus::Language;
use common::DFG_FIXTURES;

#[test]
fn hand_derived_fixtures() {
    for f in DFG_FIXTURES {
        let got: Vec<(usize, EdgeKind, Vec<usize>)> = build_dfg(f.code, f.language)
            .unwrap()
            .into_iter()
            .map(|e| (e.target_index, e.kind, e.source_indices))
            .collect();
        let want: Vec<(usize, EdgeKind, Vec<usize>)> = f.edges.iter().map(|(t, k, s)| (*t, *k, s.to_vec())).collect();
        assert_eq!(got, want, "{}", f.name);
    }
}

#[test]
fn go_short_declaration() {
    let code = "func f(a int) int {\n\tb := a + 1\n\treturn b\n}";
    let got: Vec<(usize, EdgeKind, Vec<usize>)> = build_dfg(code, Language::Go)
        .unwrap()
        .into_iter()
        .map(|e| (e.target_index, e.kind, e.source_indices))
        .collect();
    assert_eq!(
        got,
        vec![
            (4, EdgeKind::ComputedFrom, vec![5]),
            (5, EdgeKind::ComesFrom, vec![1]),
            (6, EdgeKind::ComesFrom, vec![4]),
        ]
    );
}

#[test]
fn edge_invariants_hold_on_synthetic_corpora() {
    for (i, lang) in Language::ALL.into_iter().enumerate() {
        for s in asap::synth::pool(lang, 40, i as u64).samples() {
            let idents = tag_identifiers(&s.code, lang).unwrap();
            let edges = build_dfg(&s.code, lang).unwrap();
            let mut last = None;
            for e in &edges {
                let key = (e.target_index, e.kind);
                assert!(last.is_none_or(|l| l < key), "{}: edges unsorted or duplicated", s.id);
                last = Some(key);
                assert_eq!(idents[e.target_index].name, e.target_name);
                assert!(!e.source_indices.is_empty());
                for (&src, name) in e.source_indices.iter().zip(&e.source_names) {
                    assert_eq!(&idents[src].name, name);
                    if e.kind == EdgeKind::ComesFrom {
                        assert!(src < e.target_index, "{}: comes_from points forward", s.id);
                    }
                }
            }
        }
    }
}
