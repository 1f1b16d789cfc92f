mod common;
#[path = "common/dot.rs"]
mod dot;

use std::collections::BTreeSet;
use std::path::PathBuf;

use common::{fixture_ids, fixture_store, id, random_release};
use proptest::prelude::*;
use sctbrowse_core::{neighborhood, neighborhood_diagram, Neighborhood, NeighborhoodEdge};

fn golden_path(c: u64) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/concept_{c}.dot"))
}

#[test]
fn fixture_diagrams_match_goldens() {
    let store = fixture_store();
    let update = std::env::var_os("UPDATE_GOLDENS").is_some();
    for c in fixture_ids() {
        let dot = neighborhood_diagram(&neighborhood(&store, c, false).unwrap());
        let path = golden_path(c.get());
        if update && !path.exists() {
            std::fs::write(&path, dot.as_str()).unwrap();
        }
        let golden = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {path:?}"));
        assert_eq!(dot.as_str(), golden, "concept {c}");
    }
}

fn check_document(n: &Neighborhood) {
    let text = neighborhood_diagram(n).into_string();
    assert!(text.starts_with("digraph"));
    assert!(text.ends_with("}\n") && !text.contains('\r'));
    let g = dot::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(g.name, format!("concept_{}", n.concept_id));
    assert_eq!(g.settings, vec![("rankdir".to_string(), "LR".to_string())]);

    // Node set = center plus every other end, no duplicates.
    let ids: Vec<&str> = g.nodes.iter().map(|(id, _)| id.as_str()).collect();
    let unique: BTreeSet<&str> = ids.iter().copied().collect();
    assert_eq!(ids.len(), unique.len());
    let mut expected: BTreeSet<String> = n.outbound.iter().chain(&n.inbound).map(|e| e.other_id.to_string()).collect();
    expected.insert(n.concept_id.to_string());
    assert_eq!(unique.into_iter().map(str::to_owned).collect::<BTreeSet<_>>(), expected);
    assert!(g.nodes.iter().all(|(id, _)| id.bytes().all(|b| b.is_ascii_digit())));

    // Only the center is yellow; labels decode back to the terms.
    for (node, attrs) in &g.nodes {
        let is_center = *node == n.concept_id.to_string();
        assert_eq!(attrs.get("fillcolor").map(String::as_str) == Some("yellow"), is_center);
    }
    assert_eq!(g.nodes[0].1["label"], n.preferred_term);

    // Edges: outbound then inbound, red iff hierarchy.
    let edges: Vec<&NeighborhoodEdge> = n.outbound.iter().chain(&n.inbound).collect();
    assert_eq!(g.edges.len(), edges.len());
    for (i, ((from, to, attrs), e)) in g.edges.iter().zip(edges).enumerate() {
        let (f, t) = if i < n.outbound.len() {
            (n.concept_id, e.other_id)
        } else {
            (e.other_id, n.concept_id)
        };
        assert_eq!((from.as_str(), to.as_str()), (f.to_string().as_str(), t.to_string().as_str()));
        assert_eq!(attrs["label"], e.type_term);
        assert_eq!(attrs.get("color").map(String::as_str) == Some("red"), e.is_hierarchy);
    }
    let lines: Vec<&str> = text.lines().collect();
    for line in &lines {
        if line.contains("->") {
            continue;
        }
        assert_eq!(line.contains("fillcolor=yellow"), line.starts_with(&format!("  \"{}\" ", n.concept_id)));
    }
}

#[test]
fn fixture_diagrams_are_well_formed() {
    let store = fixture_store();
    for c in fixture_ids() {
        for all in [false, true] {
            check_document(&neighborhood(&store, c, all).unwrap());
        }
    }
    let d = neighborhood_diagram(&neighborhood(&store, id(1000041), false).unwrap());
    let red = d.as_str().lines().filter(|l| l.contains("->") && l.contains("color=red")).count();
    assert_eq!(red, 2);
}

#[test]
fn deterministic() {
    let store = fixture_store();
    let n = neighborhood(&store, id(1000051), true).unwrap();
    assert_eq!(neighborhood_diagram(&n), neighborhood_diagram(&n.clone()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Random terms include quotes, backslashes and non-ASCII letters.
    #[test]
    fn random_neighborhoods_parse(seed in any::<u64>(), all in any::<bool>()) {
        let store = random_release(seed, 40, 160).store();
        for c in store.concepts() {
            check_document(&neighborhood(&store, c.id, all).unwrap());
        }
    }
}
