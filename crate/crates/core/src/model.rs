//! Terminology rows and the immutable graph store built from them.
//!
//! A [`TerminologyStore`] keeps concepts sorted by id, descriptions in their
//! original order, and two compressed adjacency indexes over relationships:
//! outbound edges keyed by source, inbound edges keyed by destination. Both
//! indexes reference every relationship exactly once.

use std::cmp::Ordering;

use thiserror::Error;

use crate::id::{ConceptId, SctId};
use crate::term_index::TermIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Concept {
    pub id: ConceptId,
    pub active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DescriptionKind {
    /// Fully specified name.
    Fsn,
    /// Synonym.
    Syn,
}

impl DescriptionKind {
    pub fn token(self) -> &'static str {
        match self {
            DescriptionKind::Fsn => "FSN",
            DescriptionKind::Syn => "SYN",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "FSN" => Some(DescriptionKind::Fsn),
            "SYN" => Some(DescriptionKind::Syn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Description {
    pub id: SctId,
    pub concept_id: ConceptId,
    pub term: String,
    pub kind: DescriptionKind,
    pub active: bool,
}

/// A typed directed edge `source --type--> destination`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Relationship {
    pub id: SctId,
    pub source_id: ConceptId,
    pub type_id: ConceptId,
    pub destination_id: ConceptId,
    pub group: u32,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("duplicate concept {0}")]
    DuplicateConcept(ConceptId),
    #[error("duplicate description {0}")]
    DuplicateDescription(SctId),
    #[error("duplicate relationship {0}")]
    DuplicateRelationship(SctId),
    #[error("row {row} references missing concept {missing}")]
    DanglingReference { row: SctId, missing: ConceptId },
    #[error("is-a type {0} is not a concept of the store")]
    UnknownIsaType(ConceptId),
    #[error("active relationship {0} is a self-loop")]
    SelfLoop(SctId),
    #[error("description {0} has an empty term or one containing a tab or line break")]
    InvalidTerm(SctId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("query is empty")]
    EmptyQuery,
}

/// Compressed sparse rows: `offsets[i]..offsets[i + 1]` indexes into `items`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Csr {
    pub(crate) offsets: Vec<u32>,
    pub(crate) items: Vec<u32>,
}

impl Csr {
    fn row(&self, i: usize) -> &[u32] {
        &self.items[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// Groups `items` by `key` (a dense row index below `rows`), keeping the
    /// relative order of `items`.
    fn group(rows: usize, items: impl IntoIterator<Item = u32>, key: impl Fn(u32) -> usize) -> Csr {
        let items: Vec<u32> = items.into_iter().collect();
        let mut offsets = vec![0u32; rows + 1];
        for &it in &items {
            offsets[key(it) + 1] += 1;
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut out = vec![0u32; items.len()];
        for it in items {
            let k = key(it);
            out[cursor[k] as usize] = it;
            cursor[k] += 1;
        }
        Csr { offsets, items: out }
    }

    /// Checks shape against `rows` and that items are in `0..limit`.
    pub(crate) fn well_formed(&self, rows: usize, limit: usize) -> bool {
        self.offsets.len() == rows + 1
            && self.offsets.first() == Some(&0)
            && self.offsets.windows(2).all(|w| w[0] <= w[1])
            && *self.offsets.last().unwrap() as usize == self.items.len()
            && self.items.iter().all(|&i| (i as usize) < limit)
    }
}

/// Immutable, indexed terminology graph.
#[derive(Debug, Clone)]
pub struct TerminologyStore {
    pub(crate) isa_type_id: ConceptId,
    /// Sorted by id.
    pub(crate) concepts: Vec<Concept>,
    /// Input order.
    pub(crate) descriptions: Vec<Description>,
    /// Sorted by id.
    pub(crate) relationships: Vec<Relationship>,
    /// Descriptions per concept position, input order.
    pub(crate) by_concept: Csr,
    /// Relationships per source position, ordered by (type, destination, id).
    pub(crate) out_index: Csr,
    /// Relationships per destination position, ordered by (source, type, id).
    pub(crate) in_index: Csr,
    /// Per relationship: shown in active-only views.
    pub(crate) visible: Vec<bool>,
    pub(crate) terms: TermIndex,
}

impl PartialEq for TerminologyStore {
    fn eq(&self, other: &Self) -> bool {
        self.isa_type_id == other.isa_type_id
            && self.concepts == other.concepts
            && self.descriptions == other.descriptions
            && self.relationships == other.relationships
            && self.by_concept == other.by_concept
            && self.out_index == other.out_index
            && self.in_index == other.in_index
            && self.terms == other.terms
    }
}

impl Eq for TerminologyStore {}

fn out_order(a: &Relationship, b: &Relationship) -> Ordering {
    (a.type_id, a.destination_id, a.id).cmp(&(b.type_id, b.destination_id, b.id))
}

fn in_order(a: &Relationship, b: &Relationship) -> Ordering {
    (a.source_id, a.type_id, a.id).cmp(&(b.source_id, b.type_id, b.id))
}

fn valid_term(term: &str) -> bool {
    !term.trim().is_empty() && !term.contains(['\t', '\n', '\r'])
}

/// Builds the store and both adjacency indexes.
///
/// Concepts and relationships are normalized to id order, so the result does
/// not depend on the order of those inputs. Descriptions keep their order,
/// which decides the preferred term.
pub fn build_store(
    mut concepts: Vec<Concept>,
    descriptions: Vec<Description>,
    mut relationships: Vec<Relationship>,
    isa_type_id: ConceptId,
) -> Result<TerminologyStore, StoreError> {
    concepts.sort_unstable_by_key(|c| c.id);
    if let Some(w) = concepts.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(StoreError::DuplicateConcept(w[0].id));
    }
    let position = |id: ConceptId| concepts.binary_search_by_key(&id, |c| c.id).ok();
    if position(isa_type_id).is_none() {
        return Err(StoreError::UnknownIsaType(isa_type_id));
    }

    let mut desc_ids: Vec<SctId> = descriptions.iter().map(|d| d.id).collect();
    desc_ids.sort_unstable();
    if let Some(w) = desc_ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(StoreError::DuplicateDescription(w[0]));
    }
    let mut desc_pos = Vec::with_capacity(descriptions.len());
    for d in &descriptions {
        if !valid_term(&d.term) {
            return Err(StoreError::InvalidTerm(d.id));
        }
        let pos = position(d.concept_id).ok_or(StoreError::DanglingReference {
            row: d.id,
            missing: d.concept_id,
        })?;
        desc_pos.push(pos);
    }

    relationships.sort_unstable_by_key(|r| r.id);
    if let Some(w) = relationships.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(StoreError::DuplicateRelationship(w[0].id));
    }
    let mut ends = Vec::with_capacity(relationships.len());
    let mut visible = Vec::with_capacity(relationships.len());
    for r in &relationships {
        let resolve = |id: ConceptId| {
            position(id).ok_or(StoreError::DanglingReference { row: r.id, missing: id })
        };
        let src = resolve(r.source_id)?;
        resolve(r.type_id)?;
        let dst = resolve(r.destination_id)?;
        if r.active && src == dst {
            return Err(StoreError::SelfLoop(r.id));
        }
        ends.push((src, dst));
        visible.push(r.active && concepts[src].active && concepts[dst].active);
    }

    let n = concepts.len();
    let by_concept = Csr::group(n, 0..descriptions.len() as u32, |i| desc_pos[i as usize]);

    let mut order: Vec<u32> = (0..relationships.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| out_order(&relationships[a as usize], &relationships[b as usize]));
    let out_index = Csr::group(n, order.iter().copied(), |i| ends[i as usize].0);
    order.sort_unstable_by(|&a, &b| in_order(&relationships[a as usize], &relationships[b as usize]));
    let in_index = Csr::group(n, order, |i| ends[i as usize].1);

    let terms = TermIndex::build(&concepts, &descriptions, &desc_pos);
    Ok(TerminologyStore {
        isa_type_id,
        concepts,
        descriptions,
        relationships,
        by_concept,
        out_index,
        in_index,
        visible,
        terms,
    })
}

impl TerminologyStore {
    pub fn isa_type_id(&self) -> ConceptId {
        self.isa_type_id
    }

    /// All concepts in ascending id order.
    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    /// All descriptions in ingest order.
    pub fn descriptions(&self) -> &[Description] {
        &self.descriptions
    }

    /// All relationships in ascending id order.
    pub fn relationships(&self) -> &[Relationship] {
        &self.relationships
    }

    pub(crate) fn position(&self, id: ConceptId) -> Option<usize> {
        self.concepts.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn concept(&self, id: ConceptId) -> Option<&Concept> {
        self.position(id).map(|p| &self.concepts[p])
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.position(id).is_some()
    }

    /// Descriptions of `id` in ingest order; empty for unknown ids.
    pub fn descriptions_of(&self, id: ConceptId) -> impl Iterator<Item = &Description> + '_ {
        let rows = self.position(id).map(|p| self.by_concept.row(p)).unwrap_or(&[]);
        rows.iter().map(|&i| &self.descriptions[i as usize])
    }

    fn edges<'a>(
        &'a self,
        index: &'a Csr,
        id: ConceptId,
        include_inactive: bool,
    ) -> impl Iterator<Item = &'a Relationship> + 'a {
        let rows = self.position(id).map(|p| index.row(p)).unwrap_or(&[]);
        rows.iter()
            .filter(move |&&i| include_inactive || self.visible[i as usize])
            .map(|&i| &self.relationships[i as usize])
    }

    /// Relationships with `source_id == id`, ordered by (type, destination, id).
    ///
    /// Without `include_inactive`, only active rows between active concepts
    /// are returned.
    pub fn outbound(
        &self,
        id: ConceptId,
        include_inactive: bool,
    ) -> impl Iterator<Item = &Relationship> + '_ {
        self.edges(&self.out_index, id, include_inactive)
    }

    /// Relationships with `destination_id == id`, ordered by (source, type, id).
    pub fn inbound(
        &self,
        id: ConceptId,
        include_inactive: bool,
    ) -> impl Iterator<Item = &Relationship> + '_ {
        self.edges(&self.in_index, id, include_inactive)
    }

    /// First active synonym, else the active FSN, else the decimal id.
    pub fn preferred_term(&self, id: ConceptId) -> Result<String, QueryError> {
        let p = self.position(id).ok_or(QueryError::UnknownConcept(id))?;
        Ok(self.preferred_term_at(p).map_or_else(|| id.to_string(), str::to_owned))
    }

    pub(crate) fn preferred_term_at(&self, pos: usize) -> Option<&str> {
        let mut fsn = None;
        for &i in self.by_concept.row(pos) {
            let d = &self.descriptions[i as usize];
            if !d.active {
                continue;
            }
            match d.kind {
                DescriptionKind::Syn => return Some(&d.term),
                DescriptionKind::Fsn if fsn.is_none() => fsn = Some(d.term.as_str()),
                DescriptionKind::Fsn => {}
            }
        }
        fsn
    }

    /// The first active fully specified name, if any.
    pub fn fsn(&self, id: ConceptId) -> Result<Option<&str>, QueryError> {
        let p = self.position(id).ok_or(QueryError::UnknownConcept(id))?;
        Ok(self
            .by_concept
            .row(p)
            .iter()
            .map(|&i| &self.descriptions[i as usize])
            .find(|d| d.active && d.kind == DescriptionKind::Fsn)
            .map(|d| d.term.as_str()))
    }

    /// Destinations of visible outbound is-a edges, ascending.
    pub fn parents(&self, id: ConceptId) -> Vec<ConceptId> {
        let mut ids: Vec<_> = self
            .outbound(id, false)
            .filter(|r| r.type_id == self.isa_type_id)
            .map(|r| r.destination_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Sources of visible inbound is-a edges, ascending.
    pub fn children(&self, id: ConceptId) -> Vec<ConceptId> {
        let mut ids: Vec<_> = self
            .inbound(id, false)
            .filter(|r| r.type_id == self.isa_type_id)
            .map(|r| r.source_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub(crate) fn term_index(&self) -> &TermIndex {
        &self.terms
    }
}
