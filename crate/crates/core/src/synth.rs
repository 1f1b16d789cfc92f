//! Seeded synthetic releases for stress runs.
//!
//! A release over `n` concepts is a rooted is-a tree (every concept but the
//! root has exactly one parent chosen among earlier concepts) plus `n / 2`
//! attribute relationships drawn from a small pool of attribute types. Each
//! concept gets one FSN and one synonym built from pronounceable syllables.
//! All identifiers carry valid Verhoeff check digits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::id::{ConceptId, SctId};
use crate::ingest::ReleaseBundle;
use crate::model::{Concept, Description, DescriptionKind, Relationship};
use crate::verhoeff::with_check_digit;

const CONCEPT_BASE: u64 = 1_000_000;
const DESCRIPTION_BASE: u64 = 5_000_000;
const RELATIONSHIP_BASE: u64 = 9_000_000;
/// Concept positions `2..ATTRIBUTE_POOL_END` are attribute types.
const ATTRIBUTE_POOL_END: usize = 10;

const TAGS: [&str; 6] = ["disorder", "finding", "procedure", "body structure", "substance", "organism"];
const ONSETS: [&str; 16] = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "th", "pr", "st"];
const VOWELS: [&str; 7] = ["a", "e", "i", "o", "u", "ia", "ou"];
const CODAS: [&str; 6] = ["", "", "n", "r", "s", "l"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticRelease {
    pub bundle: ReleaseBundle,
    pub isa_type_id: ConceptId,
}

fn sctid(base: u64, index: usize) -> SctId {
    SctId::new(with_check_digit(base + index as u64)).expect("synthetic id in range")
}

fn word(rng: &mut impl Rng) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
        w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
        w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
    }
    w
}

fn phrase(rng: &mut impl Rng) -> String {
    let words = rng.random_range(1..=3);
    let mut p = (0..words).map(|_| word(rng)).collect::<Vec<_>>().join(" ");
    p[..1].make_ascii_uppercase();
    p
}

/// Generates a release over `concepts` concepts. Returns `None` when
/// `concepts` is zero.
pub fn generate(concepts: usize, seed: u64) -> Option<SyntheticRelease> {
    if concepts == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = concepts;
    let isa_pos = 1.min(n - 1);
    let attributes = 2.min(n)..ATTRIBUTE_POOL_END.min(n);

    let concept_rows: Vec<Concept> = (0..n).map(|i| Concept { id: sctid(CONCEPT_BASE, i), active: true }).collect();
    let mut descriptions = Vec::with_capacity(2 * n);
    for (i, c) in concept_rows.iter().enumerate() {
        let (name, tag) = if i == 0 {
            ("Synthetic root".to_owned(), "metadata")
        } else if i == isa_pos {
            ("Is a".to_owned(), "attribute")
        } else if attributes.contains(&i) {
            (format!("Has {}", word(&mut rng)), "attribute")
        } else {
            (phrase(&mut rng), TAGS[rng.random_range(0..TAGS.len())])
        };
        for (kind, term) in [
            (DescriptionKind::Fsn, format!("{name} ({tag})")),
            (DescriptionKind::Syn, name),
        ] {
            descriptions.push(Description {
                id: sctid(DESCRIPTION_BASE, descriptions.len()),
                concept_id: c.id,
                term,
                kind,
                active: true,
            });
        }
    }

    let mut relationships = Vec::with_capacity(n + n / 2);
    let mut push = |source: usize, type_pos: usize, destination: usize, group: u32| {
        relationships.push(Relationship {
            id: sctid(RELATIONSHIP_BASE, relationships.len()),
            source_id: concept_rows[source].id,
            type_id: concept_rows[type_pos].id,
            destination_id: concept_rows[destination].id,
            group,
            active: true,
        });
    };
    for i in 1..n {
        let parent = rng.random_range(0..i);
        push(i, isa_pos, parent, 0);
    }
    if !attributes.is_empty() {
        for _ in 0..n / 2 {
            let source = rng.random_range(0..n);
            let mut destination = rng.random_range(0..n - 1);
            if destination >= source {
                destination += 1;
            }
            let type_pos = rng.random_range(attributes.clone());
            push(source, type_pos, destination, rng.random_range(1..=3));
        }
    }

    Some(SyntheticRelease {
        isa_type_id: concept_rows[isa_pos].id,
        bundle: ReleaseBundle {
            concepts: concept_rows,
            descriptions,
            relationships,
            ..Default::default()
        },
    })
}
