//! Core of the terminology browser.
//!
//! Release files are parsed by [`ingest`], assembled into an immutable
//! [`TerminologyStore`] with forward and reverse adjacency, persisted by
//! [`index`], and browsed through [`query`] and [`diagram`].

pub mod diagram;
pub mod id;
pub mod index;
pub mod ingest;
pub mod model;
pub mod query;
pub mod synth;
mod term_index;
pub mod verhoeff;

pub use diagram::{neighborhood_diagram, render_external, DotDocument, ImageFormat, RenderError};
pub use id::{ConceptId, IdError, SctId};
pub use index::{load_index, save_index, IndexError};
pub use ingest::{validate_bundle, BadHeader, IngestError, IssueKind, ParseIssue, ReleaseBundle, ReleaseFile};
pub use model::{
    build_store, Concept, Description, DescriptionKind, QueryError, Relationship, StoreError, TerminologyStore,
};
pub use query::{neighborhood, search, Neighborhood, NeighborhoodEdge, SearchHit};
pub use term_index::MatchTier;
pub use verhoeff::verhoeff_valid;
