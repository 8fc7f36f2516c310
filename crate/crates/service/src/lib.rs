//! HTTP/JSON backend for the annotation UI.
//!
//! Reads are served from the last committed project. Writes go through
//! [`ProjectStore::apply`], so they are serialized, re-validated and
//! persisted before the response is sent. Every response carries the
//! project revision as its `ETag`; a write whose `If-Match` names an older
//! revision gets `409 stale_revision`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use shiftkit_core::corpus::{SentenceKey, Token};
use shiftkit_core::extraction::{PairId, SentencePair};
use shiftkit_core::pas::{
    GroupId, InstanceId, NewPredicateType, PasError, PasList, PredicateClass, PredicateGroup, PredicateType,
    PredicateTypeId, Span,
};
use shiftkit_core::project::{Advisory, AlignError, AlignmentRequest, Coverage, EditError, Project, ProjectStore};
use shiftkit_core::report::{shift_counts, GroupBy, ShiftReport};
use shiftkit_core::shift::{AlignmentId, Side, TransemeAlignment, TransemeKind, TransemeRef};

/// Error body shared by every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
            details: Value::Null,
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        let status = match &e {
            EditError::StaleRevision { .. } => StatusCode::CONFLICT,
            EditError::Align(AlignError::UnknownPair(_)) | EditError::Align(AlignError::UnknownAlignment(_)) => {
                StatusCode::NOT_FOUND
            }
            EditError::Pas(PasError::UnknownInstance(_)) => StatusCode::NOT_FOUND,
            EditError::Persist(_) | EditError::Integrity(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let details = match &e {
            EditError::Align(AlignError::Violations(v)) => json!({ "violations": v }),
            EditError::StaleRevision { expected, current } => {
                json!({ "expected": expected, "current": current })
            }
            EditError::Integrity(issues) => json!({ "issues": issues }),
            _ => Value::Null,
        };
        ApiError {
            details,
            ..ApiError::new(status, e.code(), e.to_string())
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn with_etag(status: StatusCode, revision: u64, body: impl Serialize) -> Response {
    let mut response = (status, Json(body)).into_response();
    if let Ok(v) = HeaderValue::from_str(&format!("\"{revision}\"")) {
        response.headers_mut().insert(header::ETAG, v);
    }
    response
}

fn expected_revision(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    let Some(raw) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    let text = raw
        .to_str()
        .map_err(|_| ApiError::bad_request("invalid_revision", "If-Match is not ASCII"))?
        .trim();
    let text = text.strip_prefix("W/").unwrap_or(text).trim_matches('"');
    text.parse()
        .map(Some)
        .map_err(|_| ApiError::bad_request("invalid_revision", format!("If-Match {text:?} is not a revision")))
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

fn parse_id(raw: &str, what: &str) -> Result<u64, ApiError> {
    let digits = raw.rsplit('#').next().unwrap_or(raw);
    digits
        .parse()
        .map_err(|_| ApiError::bad_request("invalid_id", format!("{raw:?} is not a valid {what} id")))
}

pub type SharedStore = Arc<ProjectStore>;

pub fn router(store: SharedStore, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/pairs", get(list_pairs))
        .route("/api/pairs/{id}", get(get_pair))
        .route("/api/pairs/{id}/pas", post(create_pas))
        .route("/api/pairs/{id}/pas/{instance}", delete(delete_pas))
        .route("/api/pairs/{id}/alignments", post(create_alignment))
        .route("/api/pairs/{id}/alignments/{alignment}", delete(delete_alignment))
        .route("/api/registry", get(registry))
        .route("/api/reports/shifts", get(report))
        .with_state(store);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::not_found("no such endpoint") }),
    }
}

/// Serves on an already bound listener until the task is dropped.
pub async fn serve_on(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

pub async fn serve(store: SharedStore, addr: SocketAddr, assets: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, router(store, assets)).await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairSummary {
    pub id: PairId,
    pub direction: String,
    pub source_document: String,
    pub target_document: String,
    pub source_sentence: String,
    pub target_sentence: String,
    pub source_preview: String,
    pub target_preview: String,
    #[serde(default)]
    pub genre: Option<String>,
    pub coverage_percent: f64,
}

const PREVIEW_CHARS: usize = 60;

fn preview(p: &Project, key: &SentenceKey) -> String {
    let text = p.sentence(key).map(|s| s.text()).unwrap_or_default();
    match text.char_indices().nth(PREVIEW_CHARS) {
        Some((cut, _)) => format!("{}…", &text[..cut]),
        None => text,
    }
}

async fn list_pairs(State(store): State<SharedStore>) -> ApiResult {
    store.read(|p| {
        let summaries: Vec<PairSummary> = p
            .pairs
            .iter()
            .map(|pair| PairSummary {
                id: pair.id.clone(),
                direction: pair.direction.to_string(),
                source_document: pair.source.document.clone(),
                target_document: pair.target.document.clone(),
                source_sentence: pair.source.sentence.clone(),
                target_sentence: pair.target.sentence.clone(),
                source_preview: preview(p, &pair.source),
                target_preview: preview(p, &pair.target),
                genre: pair.genre.clone(),
                coverage_percent: p.coverage_report(&pair.id).map(|c| c.percent()).unwrap_or(0.0),
            })
            .collect();
        Ok(with_etag(StatusCode::OK, p.revision, summaries))
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SentenceView {
    pub key: SentenceKey,
    #[serde(default)]
    pub speaker_name: Option<String>,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SidePas {
    pub source: PasList,
    pub target: PasList,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CoverageView {
    #[serde(flatten)]
    pub coverage: Coverage,
    pub percent: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairView {
    pub pair: SentencePair,
    pub source: SentenceView,
    pub target: SentenceView,
    pub pas: SidePas,
    pub alignments: Vec<TransemeAlignment>,
    pub coverage: CoverageView,
    pub advisories: Vec<Advisory>,
    pub revision: u64,
}

fn lookup_pair(p: &Project, id: &str) -> Result<SentencePair, ApiError> {
    p.pair(&PairId(id.to_string()))
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown sentence pair {id}")))
}

fn coverage_view(p: &Project, id: &PairId) -> CoverageView {
    let coverage = p.coverage_report(id).unwrap_or_default();
    CoverageView {
        percent: coverage.percent(),
        coverage,
    }
}

fn pair_view(p: &Project, pair: SentencePair) -> PairView {
    let sentence = |key: &SentenceKey| {
        let s = p.sentence(key);
        SentenceView {
            key: key.clone(),
            speaker_name: s.and_then(|s| s.speaker_name.clone()),
            tokens: s.map(|s| s.tokens.clone()).unwrap_or_default(),
        }
    };
    let pas = |key: &SentenceKey| p.pas(key).cloned().unwrap_or_else(|| PasList::new(key.clone()));
    PairView {
        source: sentence(&pair.source),
        target: sentence(&pair.target),
        pas: SidePas {
            source: pas(&pair.source),
            target: pas(&pair.target),
        },
        alignments: p.alignments_of(&pair.id).cloned().collect(),
        coverage: coverage_view(p, &pair.id),
        advisories: p.advisories(&pair.id).unwrap_or_default(),
        revision: p.revision,
        pair,
    }
}

async fn get_pair(State(store): State<SharedStore>, Path(id): Path<String>) -> ApiResult {
    store.read(|p| {
        let pair = lookup_pair(p, &id)?;
        Ok(with_etag(StatusCode::OK, p.revision, pair_view(p, pair)))
    })
}

/// A predicate type to register as part of a batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewTypeSpec {
    pub lemma: String,
    pub class: PredicateClass,
    #[serde(default)]
    pub sense: Option<u32>,
    #[serde(default)]
    pub group: Option<GroupId>,
    #[serde(default)]
    pub description: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgumentSpec {
    /// Parent predicate; implied for arguments nested under a predicate.
    #[serde(default)]
    pub parent: Option<InstanceId>,
    pub span: Span,
    pub role: String,
    #[serde(default)]
    pub antecedent_span: Option<Span>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateSpec {
    pub side: Side,
    pub span: Span,
    #[serde(default)]
    pub predicate_type: Option<PredicateTypeId>,
    #[serde(default)]
    pub new_type: Option<NewTypeSpec>,
    #[serde(default)]
    pub realization_tags: Vec<String>,
    #[serde(default)]
    pub arguments: Vec<ArgumentSpec>,
}

/// Transactional batch: either every instance is created or none is.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PasBatch {
    #[serde(default)]
    pub predicates: Vec<PredicateSpec>,
    #[serde(default)]
    pub arguments: Vec<ArgumentSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub created: Vec<TransemeRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub registered_types: Vec<PredicateTypeId>,
    pub revision: u64,
}

fn side_of(pair: &SentencePair, key: &SentenceKey) -> Option<Side> {
    if key == &pair.source {
        Some(Side::Source)
    } else if key == &pair.target {
        Some(Side::Target)
    } else {
        None
    }
}

fn side_ref(side: Side, kind: TransemeKind, id: InstanceId) -> TransemeRef {
    TransemeRef {
        side,
        kind,
        instance: id,
    }
}

fn apply_batch(
    p: &mut Project,
    pair: &SentencePair,
    batch: PasBatch,
) -> Result<(Vec<TransemeRef>, Vec<PredicateTypeId>), EditError> {
    let mut created = Vec::new();
    let mut registered = Vec::new();
    let argument =
        |p: &mut Project, side: Side, parent: InstanceId, a: &ArgumentSpec| -> Result<TransemeRef, EditError> {
            let id = p.annotate_argument(parent, a.span.clone(), &a.role, a.antecedent_span.clone())?;
            Ok(side_ref(side, TransemeKind::Argument, id))
        };
    for spec in batch.predicates {
        let key = match spec.side {
            Side::Source => &pair.source,
            Side::Target => &pair.target,
        };
        let ty = match (spec.predicate_type, spec.new_type) {
            (Some(id), None) => id,
            (None, Some(new)) => {
                let mut req = NewPredicateType::new(key.lang.clone(), &new.lemma, new.class);
                if let Some(sense) = new.sense {
                    req = req.sense(sense);
                }
                if let Some(group) = new.group {
                    req = req.in_group(group);
                }
                req.description = new.description;
                let id = p.register_predicate_type(req)?;
                registered.push(id);
                id
            }
            _ => {
                return Err(EditError::Invalid(
                    "each predicate needs exactly one of predicate_type and new_type".into(),
                ))
            }
        };
        let tags: Vec<&str> = spec.realization_tags.iter().map(String::as_str).collect();
        let pred = p.annotate_predicate(key, spec.span, ty, &tags)?;
        created.push(side_ref(spec.side, TransemeKind::Predicate, pred));
        for a in &spec.arguments {
            if a.parent.is_some_and(|given| given != pred) {
                return Err(EditError::Invalid(
                    "nested arguments take their parent from the enclosing predicate".into(),
                ));
            }
            created.push(argument(p, spec.side, pred, a)?);
        }
    }
    for a in &batch.arguments {
        let parent = a
            .parent
            .ok_or_else(|| EditError::Invalid("top-level arguments need a parent".into()))?;
        let side = p
            .instance_sentence(parent)
            .and_then(|key| side_of(pair, key))
            .ok_or(PasError::UnknownPredicateInstance(parent))?;
        created.push(argument(p, side, parent, a)?);
    }
    if created.is_empty() {
        return Err(EditError::Invalid("empty batch".into()));
    }
    Ok((created, registered))
}

async fn create_pas(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let expected = expected_revision(&headers)?;
    let batch: PasBatch = parse_body(&body)?;
    let pair = store.read(|p| lookup_pair(p, &id))?;
    let ((created, registered_types), revision) = store.apply(expected, |p| apply_batch(p, &pair, batch))?;
    Ok(with_etag(
        StatusCode::CREATED,
        revision,
        Created {
            created,
            registered_types,
            revision,
        },
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Deleted {
    pub revision: u64,
}

async fn delete_pas(
    State(store): State<SharedStore>,
    Path((id, instance)): Path<(String, String)>,
    headers: HeaderMap,
) -> ApiResult {
    let expected = expected_revision(&headers)?;
    let instance = InstanceId(parse_id(&instance, "instance")?);
    let pair = store.read(|p| lookup_pair(p, &id))?;
    let ((), revision) = store.apply(expected, |p| {
        p.instance_sentence(instance)
            .and_then(|key| side_of(&pair, key))
            .ok_or(PasError::UnknownInstance(instance))?;
        p.remove_instance(instance)
    })?;
    Ok(with_etag(StatusCode::OK, revision, Deleted { revision }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlignmentCreated {
    pub alignment: TransemeAlignment,
    pub coverage: CoverageView,
    pub advisories: Vec<Advisory>,
    pub revision: u64,
}

async fn create_alignment(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let expected = expected_revision(&headers)?;
    let request: AlignmentRequest = parse_body(&body)?;
    let pair = store.read(|p| lookup_pair(p, &id))?;
    let (aid, revision) = store.apply(expected, |p| p.align(&pair.id, request))?;
    store.read(|p| {
        let alignment = p
            .alignments
            .iter()
            .find(|a| a.id == aid)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("alignment {aid}")))?;
        let body = AlignmentCreated {
            alignment,
            coverage: coverage_view(p, &pair.id),
            advisories: p.advisories(&pair.id).unwrap_or_default(),
            revision,
        };
        Ok(with_etag(StatusCode::CREATED, revision, body))
    })
}

async fn delete_alignment(
    State(store): State<SharedStore>,
    Path((id, alignment)): Path<(String, String)>,
    headers: HeaderMap,
) -> ApiResult {
    let expected = expected_revision(&headers)?;
    let aid = AlignmentId(parse_id(&alignment, "alignment")?);
    let pair = store.read(|p| lookup_pair(p, &id))?;
    let (_, revision) = store.apply(expected, |p| {
        if !p.alignments_of(&pair.id).any(|a| a.id == aid) {
            return Err(AlignError::UnknownAlignment(aid).into());
        }
        p.remove_alignment(aid)
    })?;
    Ok(with_etag(StatusCode::OK, revision, Deleted { revision }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RegistryView {
    pub types: Vec<PredicateType>,
    pub groups: Vec<PredicateGroup>,
    /// Roles ranked by usage, keyed by predicate type id.
    pub role_suggestions: BTreeMap<String, Vec<String>>,
    pub tag_inventory: Vec<String>,
    pub revision: u64,
}

async fn registry(State(store): State<SharedStore>) -> ApiResult {
    store.read(|p| {
        let role_suggestions = p
            .registry
            .types
            .iter()
            .map(|t| (t.id.0.to_string(), p.suggest_roles(t.id).unwrap_or_default()))
            .collect();
        let view = RegistryView {
            types: p.registry.types.clone(),
            groups: p.registry.groups.clone(),
            role_suggestions,
            tag_inventory: p.config.tag_inventory.iter().cloned().collect(),
            revision: p.revision,
        };
        Ok(with_etag(StatusCode::OK, p.revision, view))
    })
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    group_by: Option<String>,
}

async fn report(State(store): State<SharedStore>, Query(q): Query<ReportQuery>) -> ApiResult {
    let group_by: GroupBy = match q.group_by.as_deref() {
        None | Some("") => GroupBy::None,
        Some(raw) => raw
            .parse()
            .map_err(|e: String| ApiError::bad_request("invalid_group_by", e))?,
    };
    store.read(|p| {
        let report: ShiftReport = shift_counts(p, group_by);
        Ok(with_etag(StatusCode::OK, p.revision, report))
    })
}
