//! HTTP+JSON play service.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use sabotage_core::atl::parse_formula;
use sabotage_core::session::{parse_agents_json, Hint, MoveOutcome, Session, SessionConfig, SessionStore};
use sabotage_core::{Action, Agent};

use crate::api::{self, ApiError, CheckRequest, MincutRequest};

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    /// Sessions are written here after every change when set.
    pub snapshot: Option<PathBuf>,
}

impl AppState {
    pub fn new(store: SessionStore, snapshot: Option<PathBuf>) -> Self {
        AppState {
            store: Arc::new(store),
            snapshot,
        }
    }

    fn persist(&self) -> Result<(), ApiError> {
        if let Some(path) = &self.snapshot {
            self.store.save(path)?;
        }
        Ok(())
    }
}

pub struct AppError {
    status: StatusCode,
    body: Value,
}

impl From<ApiError> for AppError {
    fn from(e: ApiError) -> Self {
        let status = match e.code() {
            "not_found" => StatusCode::NOT_FOUND,
            "conflict" | "wrong_turn" | "game_over" => StatusCode::CONFLICT,
            "illegal_move" | "unsupported" | "resource_limit" => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        AppError {
            status,
            body: e.to_json(),
        }
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Reply = Result<(StatusCode, Json<Value>), AppError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, AppError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| AppError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({ "error": "internal", "detail": { "message": e.to_string() } }),
        })?
        .map_err(AppError::from)
}

fn ok(v: Value) -> Reply {
    Ok((StatusCode::OK, Json(v)))
}

/// JSON body extraction with errors in the service's error shape.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: serde::de::DeserializeOwned> axum::extract::FromRequest<S> for Body<T> {
    type Rejection = AppError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(rejection) => Err(AppError {
                status: rejection.status(),
                body: json!({ "error": "bad_request", "detail": { "message": rejection.body_text() } }),
            }),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/moves", get(session_moves))
        .route("/sessions/{id}/move", post(session_move))
        .route("/sessions/{id}/solver-move", post(solver_move))
        .route("/sessions/{id}/hint", get(session_hint))
        .route("/sessions/{id}/eval", post(session_eval))
        .route("/check", post(check))
        .route("/mincut", post(mincut))
        .with_state(state)
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub graph: Value,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub goal: Option<String>,
    #[serde(default = "default_human")]
    pub human: Value,
    #[serde(default)]
    pub objective: Option<String>,
    #[serde(default)]
    pub relations: Option<Value>,
    #[serde(default)]
    pub seed: u64,
}

fn default_kind() -> String {
    "tb".into()
}

fn default_human() -> Value {
    json!(["r"])
}

/// Builds a session configuration from a creation request.
pub fn session_config(req: &CreateRequest) -> Result<SessionConfig, ApiError> {
    let graph = api::graph_from_value(&req.graph)?;
    let model = api::build_model(graph, &req.kind, req.goal.as_deref())?;
    let relations = api::relations_from_value(&model.arena, req.relations.as_ref())?;
    let objective = req.objective.as_deref().map(parse_formula).transpose()?;
    Ok(SessionConfig {
        kind: model.kind(),
        graph: model.arena.graph().clone(),
        goal: model.goal,
        human: parse_agents_json(&req.human)?,
        objective,
        relations,
        seed: req.seed,
    })
}

async fn create_session(State(app): State<AppState>, Body(req): Body<CreateRequest>) -> Reply {
    let view = blocking(move || {
        let view = app.store.create(session_config(&req)?)?;
        app.persist()?;
        Ok(view)
    })
    .await?;
    tracing::info!(id = %view["id"], "session created");
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Reply {
    ok(app.store.with(&id, |s| Ok::<_, ApiError>(s.to_json()))?)
}

pub fn moves_json(s: &Session) -> Result<Value, ApiError> {
    let arena = s.arena();
    let moves: serde_json::Map<String, Value> = s
        .legal_moves()?
        .into_iter()
        .map(|(a, acts)| {
            let list: Vec<Value> = acts.iter().map(|x| arena.action_to_json(*x)).collect();
            (a.symbol().to_string(), Value::Array(list))
        })
        .collect();
    Ok(json!({
        "token": s.token,
        "acting": s.acting_agents().iter().map(|a| a.symbol()).collect::<Vec<_>>(),
        "over": s.is_over(),
        "moves": moves,
    }))
}

async fn session_moves(State(app): State<AppState>, Path(id): Path<String>) -> Reply {
    ok(app.store.with(&id, |s| moves_json(s))?)
}

#[derive(Debug, Default, Deserialize)]
pub struct MoveRequest {
    #[serde(default)]
    pub token: Option<u64>,
    /// Per-agent choices: `{"r": ["u","v"], "d": "skip"}`.
    #[serde(default)]
    pub choice: Option<BTreeMap<String, Value>>,
    /// Shorthand for the single acting human agent.
    #[serde(default)]
    pub action: Option<Value>,
}

pub fn parse_choice(s: &Session, req: &MoveRequest) -> Result<BTreeMap<Agent, Action>, ApiError> {
    let arena = s.arena();
    let mut out = BTreeMap::new();
    if let Some(map) = &req.choice {
        for (k, v) in map {
            out.insert(k.parse::<Agent>()?, arena.action_from_json(v)?);
        }
    }
    if let Some(v) = &req.action {
        let humans: Vec<Agent> = s.acting_agents().intersection(s.human).iter().collect();
        let [agent] = humans.as_slice() else {
            return Err(ApiError::BadRequest(
                "\"action\" needs exactly one acting human agent; use \"choice\"".into(),
            ));
        };
        out.insert(*agent, arena.action_from_json(v)?);
    }
    Ok(out)
}

pub fn outcome_json(s: &Session, out: &MoveOutcome) -> Value {
    let arena = s.arena();
    json!({
        "profile": arena.profile_to_json(&out.profile),
        "state": arena.state_to_json(&out.state),
        "state_text": arena.format_state(&out.state),
        "random": out.random,
        "token": out.token,
        "session": s.to_json(),
    })
}

async fn session_move(State(app): State<AppState>, Path(id): Path<String>, Body(req): Body<MoveRequest>) -> Reply {
    let v = blocking(move || {
        let v = app.store.with(&id, |s| {
            let choice = parse_choice(s, &req)?;
            let out = s.human_move(req.token, &choice)?;
            Ok::<_, ApiError>(outcome_json(s, &out))
        })?;
        app.persist()?;
        Ok(v)
    })
    .await?;
    ok(v)
}

#[derive(Debug, Default, Deserialize)]
pub struct TokenRequest {
    #[serde(default)]
    pub token: Option<u64>,
}

async fn solver_move(State(app): State<AppState>, Path(id): Path<String>, body: Option<Json<TokenRequest>>) -> Reply {
    let token = body.and_then(|Json(b)| b.token);
    let v = blocking(move || {
        let v = app.store.with(&id, |s| {
            let out = s.solver_move(token)?;
            Ok::<_, ApiError>(outcome_json(s, &out))
        })?;
        app.persist()?;
        Ok(v)
    })
    .await?;
    ok(v)
}

pub fn hints_json(s: &Session, formula: &str, hints: &[Hint]) -> Value {
    let arena = s.arena();
    let rows: Vec<Value> = hints
        .iter()
        .map(|h| {
            let choice: serde_json::Map<String, Value> = h
                .choice
                .iter()
                .map(|(a, x)| (a.symbol().to_string(), arena.action_to_json(*x)))
                .collect();
            let outcomes: Vec<Value> = h
                .outcomes
                .iter()
                .map(|(st, v)| json!({ "state": arena.state_to_json(st), "state_text": arena.format_state(st), "verdict": v }))
                .collect();
            json!({ "choice": choice, "verdict": h.verdict, "outcomes": outcomes })
        })
        .collect();
    json!({ "formula": formula, "token": s.token, "hints": rows })
}

async fn session_hint(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Reply {
    let v = blocking(move || {
        let formula = q.get("formula").map(|t| parse_formula(t)).transpose()?;
        app.store.with(&id, |s| {
            let hints = s.hint(formula.as_ref())?;
            let shown = match &formula {
                Some(f) => f.to_string(),
                None => sabotage_core::session::default_objective(s.human, s.model.goal.is_some()).to_string(),
            };
            Ok(hints_json(s, &shown, &hints))
        })
    })
    .await?;
    ok(v)
}

#[derive(Debug, Deserialize)]
pub struct EvalRequest {
    pub formula: String,
}

async fn session_eval(State(app): State<AppState>, Path(id): Path<String>, Body(req): Body<EvalRequest>) -> Reply {
    let v = blocking(move || {
        let f = parse_formula(&req.formula)?;
        app.store.with(&id, |s| {
            let verdict = s.eval(&f)?;
            Ok(json!({ "formula": f.to_string(), "verdict": verdict, "token": s.token }))
        })
    })
    .await?;
    ok(v)
}

async fn check(Body(req): Body<CheckRequest>) -> Reply {
    ok(blocking(move || api::run_check(&req).map(|(_, v)| v)).await?)
}

async fn mincut(Body(req): Body<MincutRequest>) -> Reply {
    ok(blocking(move || api::run_mincut(&req)).await?)
}
