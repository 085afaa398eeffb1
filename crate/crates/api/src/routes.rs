use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, Method};
use axum::middleware::{self, Next};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::services::{ServeDir, ServeFile};
use trl_core::analytics::ReportParams;
use trl_core::card::{CardAmendment, CardVersion, PanelMember, TrlCard};
use trl_core::lifecycle::{GraduationProposal, ReviewOutcome};
use trl_core::policy::PolicyOverlay;
use trl_core::risk::{NewRisk, Requirement, RiskEntry, ScoreInput, Scorecard};
use trl_core::store::EventStore;
use trl_core::views::{self, TechnologyDetail, TechnologySummary};
use trl_core::{
    Engine, ForkRequest, NewTechnology, ProposalId, ReviewId, ReviewResult, RiskId, RiskView, TechId, TechKind,
    Transitioned, TrlLevel,
};

use crate::{ApiError, AppState};

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs `f` against the engine after picking up writes made by other
/// processes on the same workspace.
fn with_engine<T>(
    state: &AppState,
    f: impl FnOnce(&mut Engine<Box<dyn EventStore>>) -> Result<T, ApiError>,
) -> ApiResult<T> {
    let mut engine = state.engine.lock().unwrap_or_else(|p| p.into_inner());
    engine.refresh()?;
    f(&mut engine).map(Json)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(ApiError::from)
}

fn query<T>(params: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    params.map(|Query(v)| v).map_err(ApiError::from)
}

fn parse_id<T: std::str::FromStr>(raw: &str, what: &str) -> Result<T, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::bad_request(format!("'{raw}' is not a {what} id")))
}

fn parse_level(raw: &str) -> Result<TrlLevel, ApiError> {
    raw.parse::<TrlLevel>().map_err(|e| ApiError::from(trl_core::Error::from(e)))
}

fn parse_time(raw: &str) -> Result<DateTime<Utc>, ApiError> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| ApiError::bad_request(format!("'{raw}' is not an RFC 3339 timestamp: {e}")))
}

pub fn build(state: AppState, dashboard_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/technologies", get(list_technologies).post(register_technology))
        .route("/technologies/:id", get(technology_detail))
        .route("/technologies/:id/card", get(card_history).post(amend_card))
        .route("/technologies/:id/proposals", post(propose))
        .route("/technologies/:id/regress", post(regress))
        .route("/technologies/:id/fork", post(fork))
        .route("/technologies/:id/archive", post(archive))
        .route("/technologies/:id/requirements", get(list_requirements).post(add_requirement))
        .route("/technologies/:id/risks", get(list_risks).post(add_risk))
        .route("/technologies/:id/scorecards", get(list_scorecards).post(add_scorecard))
        .route("/proposals", get(list_proposals))
        .route("/proposals/:id/review", post(review))
        .route("/reviews/:id/postmortem", post(postmortem))
        .route("/risks/:id/mitigation", post(mitigate))
        .route("/policy", get(policy))
        .route("/analytics", get(list_reports))
        .route("/analytics/:name", get(analytics))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state);

    let app = Router::new().nest("/api/v1", api);
    match dashboard_dir {
        Some(dir) => {
            let index = ServeFile::new(dir.join("index.html"));
            app.fallback_service(ServeDir::new(dir).fallback(index))
        }
        None => app.route("/", get(placeholder)),
    }
}

async fn require_token(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let reads = [Method::GET, Method::HEAD, Method::OPTIONS];
    if let Some(token) = &state.token {
        if !reads.contains(request.method()) {
            let presented = request
                .headers()
                .get(header::AUTHORIZATION)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.strip_prefix("Bearer "));
            if presented != Some(token.as_ref()) {
                return ApiError::unauthorized().into_response();
            }
        }
    }
    next.run(request).await
}

async fn placeholder() -> Html<&'static str> {
    Html(include_str!("placeholder.html"))
}

// ---- technologies ----

#[derive(Deserialize)]
struct ListParams {
    level: Option<String>,
    kind: Option<String>,
}

async fn list_technologies(
    State(state): State<AppState>,
    params: Result<Query<ListParams>, QueryRejection>,
) -> ApiResult<Vec<TechnologySummary>> {
    let params = query(params)?;
    let level = params.level.as_deref().filter(|s| !s.is_empty()).map(parse_level).transpose()?;
    let kind = params
        .kind
        .as_deref()
        .filter(|s| !s.is_empty())
        .map(|k| k.parse::<TechKind>().map_err(|e| ApiError::from(trl_core::Error::from(e))))
        .transpose()?;
    with_engine(&state, |e| Ok(views::list(e.state(), level, kind)))
}

async fn register_technology(
    State(state): State<AppState>,
    payload: Result<Json<NewTechnology>, JsonRejection>,
) -> ApiResult<Transitioned> {
    let request = body(payload)?;
    with_engine(&state, |e| Ok(e.register_technology(request)?))
}

async fn technology_detail(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<TechnologyDetail> {
    with_engine(&state, |e| Ok(views::detail(e.state(), &TechId::new(id), e.gates())?))
}

#[derive(Deserialize)]
struct CardParams {
    version: Option<u32>,
}

/// The full card history, or one version with `?version=N`.
async fn card_history(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<CardParams>, QueryRejection>,
) -> Result<Response, ApiError> {
    let params = query(params)?;
    let id = TechId::new(id);
    let mut engine = state.engine.lock().unwrap_or_else(|p| p.into_inner());
    engine.refresh()?;
    let portfolio = engine.state();
    Ok(match params.version {
        Some(n) => Json::<CardVersion>(views::card_version(portfolio, &id, Some(n))?.clone()).into_response(),
        None => Json::<TrlCard>(portfolio.card(&id)?.clone()).into_response(),
    })
}

async fn amend_card(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<CardAmendment>, JsonRejection>,
) -> ApiResult<CardVersion> {
    let amendment = body(payload)?;
    with_engine(&state, |e| Ok(e.amend_card(&TechId::new(id), amendment)?))
}

#[derive(Deserialize, Default)]
struct ProposeBody {
    #[serde(default)]
    to_level: Option<TrlLevel>,
}

/// Body is optional; `{"to_level": N}` checks an explicit target.
async fn propose(State(state): State<AppState>, Path(id): Path<String>, raw: Bytes) -> ApiResult<GraduationProposal> {
    let request: ProposeBody = if raw.iter().all(u8::is_ascii_whitespace) {
        ProposeBody::default()
    } else {
        serde_json::from_slice(&raw).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    with_engine(&state, |e| Ok(e.propose_graduation(&TechId::new(id), request.to_level)?))
}

#[derive(Deserialize)]
struct RegressBody {
    to_level: TrlLevel,
    #[serde(default)]
    rationale: String,
    #[serde(default)]
    review_ref: Option<ReviewId>,
}

async fn regress(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<RegressBody>, JsonRejection>,
) -> ApiResult<Transitioned> {
    let request = body(payload)?;
    let id = TechId::new(id);
    with_engine(&state, |e| {
        let event = e.regress(&id, request.to_level, &request.rationale, request.review_ref)?;
        Ok(Transitioned {
            technology: e.state().technology(&id)?.clone(),
            event,
        })
    })
}

async fn fork(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ForkRequest>, JsonRejection>,
) -> ApiResult<Transitioned> {
    let request = body(payload)?;
    with_engine(&state, |e| Ok(e.fork_technology(&TechId::new(id), request)?))
}

#[derive(Deserialize)]
struct ArchiveBody {
    #[serde(default)]
    rationale: String,
}

async fn archive(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ArchiveBody>, JsonRejection>,
) -> ApiResult<trl_core::Technology> {
    let request = body(payload)?;
    with_engine(&state, |e| Ok(e.archive(&TechId::new(id), &request.rationale)?))
}

// ---- risk register ----

#[derive(Deserialize)]
struct RequirementBody {
    description: String,
    #[serde(default)]
    verification: String,
    #[serde(default)]
    validation: String,
}

async fn add_requirement(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<RequirementBody>, JsonRejection>,
) -> ApiResult<Requirement> {
    let r = body(payload)?;
    with_engine(&state, |e| {
        Ok(e.add_requirement(&TechId::new(id), &r.description, &r.verification, &r.validation)?)
    })
}

async fn list_requirements(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<Requirement>> {
    let id = TechId::new(id);
    with_engine(&state, |e| {
        e.state().technology(&id)?;
        Ok(e.state().register.requirements_of(&id).cloned().collect())
    })
}

/// The requirement must belong to the technology in the path.
async fn add_risk(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<NewRisk>, JsonRejection>,
) -> ApiResult<RiskView> {
    let input = body(payload)?;
    let id = TechId::new(id);
    with_engine(&state, |e| {
        e.state().technology(&id)?;
        let owner = e
            .state()
            .register
            .requirement(input.requirement_id)
            .map_err(|err| ApiError::from(trl_core::Error::from(err)))?;
        if owner.tech_id != id {
            return Err(trl_core::Error::from(trl_core::error::RiskError::RequirementNotFound(input.requirement_id)).into());
        }
        Ok(e.add_risk(input)?)
    })
}

#[derive(Deserialize)]
struct RiskParams {
    #[serde(default)]
    flagged: bool,
    threshold: Option<f64>,
}

async fn list_risks(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<RiskParams>, QueryRejection>,
) -> ApiResult<Vec<RiskView>> {
    let params = query(params)?;
    with_engine(&state, |e| {
        Ok(views::risks(e.state(), &TechId::new(id), params.flagged, params.threshold)?)
    })
}

#[derive(Deserialize)]
struct MitigationBody {
    #[serde(default)]
    mitigation: String,
    #[serde(default)]
    test_strategy: Option<String>,
}

async fn mitigate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<MitigationBody>, JsonRejection>,
) -> ApiResult<RiskEntry> {
    let request = body(payload)?;
    let risk: RiskId = parse_id(&id, "risk")?;
    with_engine(&state, |e| {
        Ok(e.mitigate_risk(risk, &request.mitigation, request.test_strategy.as_deref())?)
    })
}

#[derive(Deserialize)]
struct ScorecardBody {
    items: Vec<ScoreInput>,
}

async fn add_scorecard(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ScorecardBody>, JsonRejection>,
) -> ApiResult<Scorecard> {
    let request = body(payload)?;
    with_engine(&state, |e| Ok(e.score_card(&TechId::new(id), &request.items)?))
}

async fn list_scorecards(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<Scorecard>> {
    let id = TechId::new(id);
    with_engine(&state, |e| {
        e.state().technology(&id)?;
        Ok(e.state().register.scorecards_of(&id).cloned().collect())
    })
}

// ---- reviews ----

async fn list_proposals(State(state): State<AppState>) -> ApiResult<Vec<GraduationProposal>> {
    with_engine(&state, |e| Ok(e.state().pending_proposals().cloned().collect()))
}

#[derive(Deserialize)]
struct ReviewBody {
    #[serde(default)]
    panel: Vec<PanelMember>,
    #[serde(flatten)]
    outcome: ReviewOutcome,
    #[serde(default)]
    notes: String,
}

async fn review(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ReviewBody>, JsonRejection>,
) -> ApiResult<ReviewResult> {
    let request = body(payload)?;
    let proposal: ProposalId = parse_id(&id, "proposal")?;
    with_engine(&state, |e| {
        Ok(e.record_review(proposal, request.panel, request.outcome, &request.notes)?)
    })
}

#[derive(Deserialize)]
struct PostmortemBody {
    #[serde(default)]
    notes: String,
}

async fn postmortem(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<PostmortemBody>, JsonRejection>,
) -> ApiResult<trl_core::lifecycle::ReviewRecord> {
    let request = body(payload)?;
    let review: ReviewId = parse_id(&id, "review")?;
    with_engine(&state, |e| Ok(e.record_postmortem(review, &request.notes)?))
}

// ---- policy and analytics ----

async fn policy(State(state): State<AppState>) -> ApiResult<PolicyOverlay> {
    with_engine(&state, |e| Ok(e.policy().to_overlay()))
}

#[derive(Serialize)]
struct ReportInfo {
    name: &'static str,
    description: &'static str,
}

async fn list_reports(State(state): State<AppState>) -> ApiResult<Vec<ReportInfo>> {
    Ok(Json(
        state
            .reports
            .names()
            .filter_map(|name| state.reports.get(name))
            .map(|r| ReportInfo {
                name: r.name(),
                description: r.describe(),
            })
            .collect(),
    ))
}

#[derive(Deserialize)]
struct AnalyticsParams {
    n: Option<usize>,
    tech: Option<String>,
    target: Option<String>,
    deadline: Option<String>,
    now: Option<String>,
}

/// Report data as JSON. `now` defaults to the newest event so repeated
/// reads return identical bodies.
async fn analytics(
    State(state): State<AppState>,
    Path(name): Path<String>,
    params: Result<Query<AnalyticsParams>, QueryRejection>,
) -> ApiResult<Value> {
    let params = query(params)?;
    let target = params.target.as_deref().map(parse_level).transpose()?;
    let deadline = params.deadline.as_deref().map(parse_time).transpose()?;
    let now = params.now.as_deref().map(parse_time).transpose()?;
    let reports = state.reports.clone();
    with_engine(&state, |e| {
        let report_params = ReportParams {
            now: now.unwrap_or_else(|| e.as_of()),
            n: params.n,
            tech: params.tech.map(TechId::new),
            target,
            deadline,
        };
        Ok(reports.run(&name, e.state(), &report_params)?.data)
    })
}
