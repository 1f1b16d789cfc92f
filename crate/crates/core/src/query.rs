//! Browsing queries: concept neighborhoods and term search.

use std::collections::HashSet;

use crate::id::{ConceptId, SctId};
use crate::model::{QueryError, Relationship, TerminologyStore};
use crate::term_index::MatchTier;

/// One edge of a neighborhood, seen from the center concept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodEdge {
    pub relationship_id: SctId,
    pub type_id: ConceptId,
    pub type_term: String,
    /// Target for outbound edges, source for inbound edges.
    pub other_id: ConceptId,
    pub other_term: String,
    pub group: u32,
    pub is_hierarchy: bool,
    pub active: bool,
}

/// A concept together with every edge that refers to it or that it refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub concept_id: ConceptId,
    pub preferred_term: String,
    pub fsn: Option<String>,
    pub active: bool,
    /// Referring concepts.
    pub inbound: Vec<NeighborhoodEdge>,
    /// Referred concepts.
    pub outbound: Vec<NeighborhoodEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchHit {
    pub concept_id: ConceptId,
    pub matched_term: String,
    pub preferred_term: String,
    pub rank: MatchTier,
}

fn term(store: &TerminologyStore, id: ConceptId) -> String {
    store.preferred_term(id).expect("relationship endpoints resolve in a built store")
}

fn edge(store: &TerminologyStore, r: &Relationship, other: ConceptId) -> NeighborhoodEdge {
    NeighborhoodEdge {
        relationship_id: r.id,
        type_id: r.type_id,
        type_term: term(store, r.type_id),
        other_id: other,
        other_term: term(store, other),
        group: r.group,
        is_hierarchy: r.type_id == store.isa_type_id(),
        active: r.active,
    }
}

/// Assembles the neighborhood of `id`. Self-loops never appear in it.
pub fn neighborhood(
    store: &TerminologyStore,
    id: ConceptId,
    include_inactive: bool,
) -> Result<Neighborhood, QueryError> {
    let concept = store.concept(id).ok_or(QueryError::UnknownConcept(id))?;
    let outbound = store
        .outbound(id, include_inactive)
        .filter(|r| r.destination_id != id)
        .map(|r| edge(store, r, r.destination_id))
        .collect();
    let inbound = store
        .inbound(id, include_inactive)
        .filter(|r| r.source_id != id)
        .map(|r| edge(store, r, r.source_id))
        .collect();
    Ok(Neighborhood {
        concept_id: id,
        preferred_term: store.preferred_term(id)?,
        fsn: store.fsn(id)?.map(str::to_owned),
        active: concept.active,
        inbound,
        outbound,
    })
}

/// Case-insensitive substring search over active descriptions of active
/// concepts.
///
/// Hits are tiered exact, prefix, substring; within a tier shorter terms
/// (in characters) come first, then lower concept ids. Each concept is
/// reported once, with its best matching term; ties between a concept's own
/// terms go to the lower description id.
pub fn search(store: &TerminologyStore, query: &str, limit: usize) -> Result<Vec<SearchHit>, QueryError> {
    let needle = query.trim();
    if needle.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    let needle = needle.to_lowercase();
    let descriptions = store.descriptions();

    let mut candidates: Vec<(MatchTier, usize, ConceptId, SctId, u32)> = store
        .term_index()
        .find(&needle)
        .into_iter()
        .map(|m| {
            let d = &descriptions[m.description as usize];
            (m.tier, d.term.chars().count(), d.concept_id, d.id, m.description)
        })
        .collect();
    candidates.sort_unstable();

    // Sorted by (tier, length, concept, description): the first row seen for
    // a concept is its best term.
    let mut seen = HashSet::new();
    let mut hits = Vec::new();
    for (tier, _, concept_id, _, desc) in candidates {
        if hits.len() == limit {
            break;
        }
        if !seen.insert(concept_id) {
            continue;
        }
        hits.push(SearchHit {
            concept_id,
            matched_term: descriptions[desc as usize].term.clone(),
            preferred_term: term(store, concept_id),
            rank: tier,
        });
    }
    Ok(hits)
}
