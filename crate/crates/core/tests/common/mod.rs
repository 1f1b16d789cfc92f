//! Test support shared by the integration suites: fixture loading, seeded
//! random bundles and brute-force reference implementations.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sctbrowse_core::{
    Concept, ConceptId, Description, DescriptionKind, ReleaseBundle, Relationship, SctId, TerminologyStore,
};

pub const ISA: u64 = 1000081;

pub fn id(v: u64) -> ConceptId {
    SctId::new(v).unwrap()
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny-ct")
}

pub fn fixture_bundle() -> ReleaseBundle {
    ReleaseBundle::read_dir(&fixture_dir()).expect("fixture parses")
}

pub fn fixture_store() -> TerminologyStore {
    fixture_bundle().build_store(id(ISA)).expect("fixture builds")
}

pub fn fixture_ids() -> Vec<ConceptId> {
    (0..10).map(|i| id(1000011 + 10 * i)).collect()
}

const SYLLABLES: [&str; 12] = ["ab", "Ab", "ba", "cd", "x", "É", "é", "ma", "a\"b", "q\\", "zz", " "];

pub fn random_term(rng: &mut impl Rng) -> String {
    loop {
        let n = rng.random_range(1..=4);
        let t: String = (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect();
        if !t.trim().is_empty() {
            return t;
        }
    }
}

pub struct RandomRelease {
    pub concepts: Vec<Concept>,
    pub descriptions: Vec<Description>,
    pub relationships: Vec<Relationship>,
    pub isa: ConceptId,
}

impl RandomRelease {
    pub fn store(&self) -> TerminologyStore {
        sctbrowse_core::build_store(
            self.concepts.clone(),
            self.descriptions.clone(),
            self.relationships.clone(),
            self.isa,
        )
        .expect("random release is well formed")
    }

    pub fn bundle(&self) -> ReleaseBundle {
        ReleaseBundle {
            concepts: self.concepts.clone(),
            descriptions: self.descriptions.clone(),
            relationships: self.relationships.clone(),
            ..Default::default()
        }
    }
}

/// A referentially sound release with up to `max_concepts` concepts and
/// `max_relationships` relationships, including inactive rows, inactive
/// concepts, parallel edges and inactive self-loops.
pub fn random_release(seed: u64, max_concepts: usize, max_relationships: usize) -> RandomRelease {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_concepts.max(2));
    let mut ids: Vec<u64> = (0..n).map(|i| 100_000 + 7 * i as u64).collect();
    // Present rows in arbitrary order.
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.random_range(0..=i));
    }
    let concepts: Vec<Concept> = ids
        .iter()
        .map(|&v| Concept { id: id(v), active: rng.random_bool(0.9) })
        .collect();
    let pick = |rng: &mut ChaCha8Rng| concepts[rng.random_range(0..concepts.len())].id;
    let types: Vec<ConceptId> = (0..3).map(|_| pick(&mut rng)).collect();
    let isa = types[0];

    let mut descriptions = Vec::new();
    for c in &concepts {
        for _ in 0..rng.random_range(0..=3) {
            descriptions.push(Description {
                id: id(5_000_000 + descriptions.len() as u64),
                concept_id: c.id,
                term: random_term(&mut rng),
                kind: if rng.random_bool(0.5) { DescriptionKind::Fsn } else { DescriptionKind::Syn },
                active: rng.random_bool(0.85),
            });
        }
    }

    let m = rng.random_range(0..=max_relationships);
    let mut relationships = Vec::with_capacity(m);
    for k in 0..m {
        let source = pick(&mut rng);
        let destination = pick(&mut rng);
        let active = source != destination && rng.random_bool(0.85);
        relationships.push(Relationship {
            id: id(9_000_000 + 3 * k as u64),
            source_id: source,
            type_id: types[rng.random_range(0..types.len())],
            destination_id: destination,
            group: rng.random_range(0..3),
            active,
        });
    }
    for i in (1..relationships.len()).rev() {
        relationships.swap(i, rng.random_range(0..=i));
    }
    RandomRelease { concepts, descriptions, relationships, isa }
}

/// Whether a relationship shows in active-only views, by direct lookup.
pub fn visible(concepts: &[Concept], r: &Relationship) -> bool {
    let active = |c: ConceptId| concepts.iter().find(|x| x.id == c).is_some_and(|x| x.active);
    r.active && active(r.source_id) && active(r.destination_id)
}

/// Reference search: full scan, explicit tiering, BTreeMap grouping.
pub fn naive_search(
    concepts: &[Concept],
    descriptions: &[Description],
    query: &str,
    limit: usize,
) -> Vec<(ConceptId, String, u8)> {
    let q = query.trim().to_lowercase();
    let active: BTreeMap<ConceptId, bool> = concepts.iter().map(|c| (c.id, c.active)).collect();
    let mut best: BTreeMap<ConceptId, (u8, usize, SctId, String)> = BTreeMap::new();
    for d in descriptions {
        if !d.active || !active[&d.concept_id] {
            continue;
        }
        let t = d.term.to_lowercase();
        let rank = if t == q {
            0
        } else if t.starts_with(&q) {
            1
        } else if t.contains(&q) {
            2
        } else {
            continue;
        };
        let key = (rank, d.term.chars().count(), d.id, d.term.clone());
        let slot = best.entry(d.concept_id).or_insert_with(|| key.clone());
        if (key.0, key.1, key.2) < (slot.0, slot.1, slot.2) {
            *slot = key;
        }
    }
    let mut hits: Vec<_> = best.into_iter().collect();
    hits.sort_by_key(|(c, (rank, len, _, _))| (*rank, *len, *c));
    hits.into_iter()
        .take(limit)
        .map(|(c, (rank, _, _, term))| (c, term, rank))
        .collect()
}

/// Asserts two stores answer every query identically: lookups, both
/// adjacency directions in both modes, terms, hierarchy, neighborhoods and
/// the given searches.
pub fn assert_same_answers(a: &TerminologyStore, b: &TerminologyStore, queries: &[&str]) {
    use sctbrowse_core::{neighborhood, search};
    assert_eq!(a.isa_type_id(), b.isa_type_id());
    assert_eq!(a.concepts(), b.concepts());
    for c in a.concepts() {
        let id = c.id;
        assert_eq!(a.concept(id), b.concept(id));
        for all in [false, true] {
            assert!(a.outbound(id, all).eq(b.outbound(id, all)));
            assert!(a.inbound(id, all).eq(b.inbound(id, all)));
            assert_eq!(neighborhood(a, id, all), neighborhood(b, id, all));
        }
        assert_eq!(a.preferred_term(id), b.preferred_term(id));
        assert_eq!(a.fsn(id), b.fsn(id));
        assert_eq!(a.parents(id), b.parents(id));
        assert_eq!(a.children(id), b.children(id));
    }
    for q in queries {
        assert_eq!(search(a, q, 25), search(b, q, 25), "query {q:?}");
    }
}
