//! Routes, JSON shapes and the Digest gate.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use sctbrowse_core::{
    neighborhood, neighborhood_diagram, render_external, search, ConceptId, DotDocument, ImageFormat, Neighborhood,
    NeighborhoodEdge, QueryError, SearchHit, TerminologyStore,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::digest::{AuthResult, Authenticator};

pub const DOT_MEDIA_TYPE: &str = "text/vnd.graphviz";
pub const DEFAULT_SEARCH_LIMIT: usize = 20;
pub const MAX_SEARCH_LIMIT: usize = 1000;
const RENDER_SLOTS: usize = 4;

/// Shared, read-only state plus the nonce table inside the authenticator.
#[derive(Debug)]
pub struct AppState {
    pub store: TerminologyStore,
    pub auth: Authenticator,
    pub include_inactive: bool,
    pub renderer: Option<PathBuf>,
    render_slots: Semaphore,
}

impl AppState {
    pub fn new(store: TerminologyStore, auth: Authenticator, include_inactive: bool, renderer: Option<PathBuf>) -> Self {
        AppState { store, auth, include_inactive, renderer, render_slots: Semaphore::new(RENDER_SLOTS) }
    }
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    pub error: &'static str,
    pub detail: String,
}

/// An error reply: status plus the JSON `{error, detail}` body.
#[derive(Debug)]
pub struct Failure {
    status: StatusCode,
    code: &'static str,
    detail: String,
}

fn failure(status: StatusCode, code: &'static str, detail: impl Into<String>) -> Failure {
    Failure { status, code, detail: detail.into() }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.status, Json(ApiError { error: self.code, detail: self.detail })).into_response()
    }
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::UnknownConcept(_) => failure(StatusCode::NOT_FOUND, "UNKNOWN_CONCEPT", e.to_string()),
            QueryError::EmptyQuery => failure(StatusCode::BAD_REQUEST, "EMPTY_QUERY", e.to_string()),
        }
    }
}

fn parse_id(raw: &str) -> Result<ConceptId, Failure> {
    raw.parse().map_err(|e: sctbrowse_core::IdError| failure(StatusCode::BAD_REQUEST, "BAD_ID", e.to_string()))
}

fn error(status: StatusCode, code: &'static str, detail: impl Into<String>) -> Response {
    failure(status, code, detail).into_response()
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConceptJson {
    pub id: String,
    pub preferred_term: String,
    pub fsn: Option<String>,
    pub active: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OutboundJson {
    pub relationship_id: String,
    pub type_id: String,
    pub type_term: String,
    pub target_id: String,
    pub target_term: String,
    pub group: u32,
    pub is_hierarchy: bool,
    pub active: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InboundJson {
    pub relationship_id: String,
    pub type_id: String,
    pub type_term: String,
    pub source_id: String,
    pub source_term: String,
    pub group: u32,
    pub is_hierarchy: bool,
    pub active: bool,
}

#[derive(Debug, Serialize)]
pub struct NeighborhoodJson {
    pub concept: ConceptJson,
    pub outbound: Vec<OutboundJson>,
    pub inbound: Vec<InboundJson>,
}

impl From<&NeighborhoodEdge> for OutboundJson {
    fn from(e: &NeighborhoodEdge) -> Self {
        OutboundJson {
            relationship_id: e.relationship_id.to_string(),
            type_id: e.type_id.to_string(),
            type_term: e.type_term.clone(),
            target_id: e.other_id.to_string(),
            target_term: e.other_term.clone(),
            group: e.group,
            is_hierarchy: e.is_hierarchy,
            active: e.active,
        }
    }
}

impl From<&NeighborhoodEdge> for InboundJson {
    fn from(e: &NeighborhoodEdge) -> Self {
        InboundJson {
            relationship_id: e.relationship_id.to_string(),
            type_id: e.type_id.to_string(),
            type_term: e.type_term.clone(),
            source_id: e.other_id.to_string(),
            source_term: e.other_term.clone(),
            group: e.group,
            is_hierarchy: e.is_hierarchy,
            active: e.active,
        }
    }
}

impl From<&Neighborhood> for NeighborhoodJson {
    fn from(n: &Neighborhood) -> Self {
        NeighborhoodJson {
            concept: ConceptJson {
                id: n.concept_id.to_string(),
                preferred_term: n.preferred_term.clone(),
                fsn: n.fsn.clone(),
                active: n.active,
            },
            outbound: n.outbound.iter().map(Into::into).collect(),
            inbound: n.inbound.iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HitJson {
    pub concept_id: String,
    pub matched_term: String,
    pub preferred_term: String,
    pub rank: u8,
}

#[derive(Debug, Serialize)]
pub struct SearchJson {
    pub query: String,
    pub hits: Vec<HitJson>,
}

impl From<&SearchHit> for HitJson {
    fn from(h: &SearchHit) -> Self {
        HitJson {
            concept_id: h.concept_id.to_string(),
            matched_term: h.matched_term.clone(),
            preferred_term: h.preferred_term.clone(),
            rank: h.rank as u8,
        }
    }
}

/// The document served at `diagram.dot`.
pub fn concept_diagram(
    store: &TerminologyStore,
    id: ConceptId,
    include_inactive: bool,
) -> Result<DotDocument, QueryError> {
    Ok(neighborhood_diagram(&neighborhood(store, id, include_inactive)?))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn get_concept(State(state): State<Arc<AppState>>, Path(raw): Path<String>) -> Result<Response, Failure> {
    let n = neighborhood(&state.store, parse_id(&raw)?, state.include_inactive)?;
    Ok(Json(NeighborhoodJson::from(&n)).into_response())
}

async fn get_dot(State(state): State<Arc<AppState>>, Path(raw): Path<String>) -> Result<Response, Failure> {
    let doc = concept_diagram(&state.store, parse_id(&raw)?, state.include_inactive)?;
    Ok(([(header::CONTENT_TYPE, DOT_MEDIA_TYPE)], doc.into_string()).into_response())
}

async fn get_svg(State(state): State<Arc<AppState>>, Path(raw): Path<String>) -> Result<Response, Failure> {
    let doc = concept_diagram(&state.store, parse_id(&raw)?, state.include_inactive)?;
    let Some(renderer) = state.renderer.clone() else {
        return Err(failure(StatusCode::NOT_IMPLEMENTED, "RENDERER_NOT_CONFIGURED", "no diagram renderer is configured"));
    };
    let _slot = state
        .render_slots
        .acquire()
        .await
        .map_err(|_| failure(StatusCode::SERVICE_UNAVAILABLE, "SHUTTING_DOWN", "renderer pool closed"))?;
    let rendered = tokio::task::spawn_blocking(move || render_external(&doc, ImageFormat::Svg, &renderer))
        .await
        .map_err(|e| failure(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?;
    match rendered {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, "image/svg+xml")], bytes).into_response()),
        Err(e) => {
            tracing::warn!(error = %e, "diagram renderer failed");
            Err(failure(StatusCode::BAD_GATEWAY, "RENDER_FAILED", e.to_string()))
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    q: Option<String>,
    limit: Option<String>,
}

async fn get_search(State(state): State<Arc<AppState>>, Query(params): Query<SearchParams>) -> Result<Response, Failure> {
    let q = params.q.unwrap_or_default();
    let limit = match params.limit.as_deref() {
        None => DEFAULT_SEARCH_LIMIT,
        Some(raw) => raw.parse::<usize>().ok().filter(|n| (1..=MAX_SEARCH_LIMIT).contains(n)).ok_or_else(|| {
            failure(StatusCode::BAD_REQUEST, "BAD_LIMIT", format!("limit must be an integer in 1..={MAX_SEARCH_LIMIT}"))
        })?,
    };
    let hits = search(&state.store, &q, limit)?;
    Ok(Json(SearchJson { query: q, hits: hits.iter().map(Into::into).collect() }).into_response())
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route")
}

fn challenge(state: &AppState, stale: bool, detail: &str) -> Response {
    let value = state.auth.issue_challenge(stale, Instant::now());
    let mut response = error(StatusCode::UNAUTHORIZED, "UNAUTHORIZED", detail);
    response.headers_mut().insert(
        header::WWW_AUTHENTICATE,
        HeaderValue::from_str(&value).expect("challenge is a valid header value"),
    );
    response
}

async fn require_digest(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    let Some(raw) = req.headers().get(header::AUTHORIZATION) else {
        return challenge(&state, false, "authentication required");
    };
    let Ok(header_text) = raw.to_str() else {
        return error(StatusCode::BAD_REQUEST, "MALFORMED_AUTHORIZATION", "Authorization header is not ASCII");
    };
    let target = req.uri().path_and_query().map_or_else(|| req.uri().path(), |pq| pq.as_str());
    match state.auth.verify_request(header_text, req.method().as_str(), target, Instant::now()) {
        Err(e) => error(StatusCode::BAD_REQUEST, "MALFORMED_AUTHORIZATION", e.to_string()),
        Ok(AuthResult::Ok(user)) => {
            tracing::debug!(%user, uri = target, "authenticated");
            next.run(req).await
        }
        Ok(AuthResult::Stale) => challenge(&state, true, "nonce is stale"),
        Ok(AuthResult::Rejected(reason)) => {
            tracing::debug!(%reason, uri = target, "authentication rejected");
            challenge(&state, false, "authentication failed")
        }
    }
}

/// Every route path the router serves, as registered.
pub const PROTECTED_ROUTES: [&str; 4] = [
    "/api/concepts/{id}",
    "/api/concepts/{id}/diagram.dot",
    "/api/concepts/{id}/diagram.svg",
    "/api/search",
];
pub const PUBLIC_ROUTES: [&str; 1] = ["/api/health"];

pub fn router(state: Arc<AppState>) -> Router {
    let protected = Router::new()
        .route(PROTECTED_ROUTES[0], get(get_concept))
        .route(PROTECTED_ROUTES[1], get(get_dot))
        .route(PROTECTED_ROUTES[2], get(get_svg))
        .route(PROTECTED_ROUTES[3], get(get_search))
        .fallback(not_found)
        .layer(middleware::from_fn_with_state(state.clone(), require_digest));
    Router::new()
        .route(PUBLIC_ROUTES[0], get(health))
        .merge(protected)
        .with_state(state)
}

/// Drains a body into bytes. Convenience for tests and tools.
pub async fn body_bytes(body: Body) -> Vec<u8> {
    axum::body::to_bytes(body, usize::MAX).await.map(|b| b.to_vec()).unwrap_or_default()
}
