//! Request handling shared by the command line and the HTTP service.

use std::time::Instant;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use sabotage_core::atl::{
    brute_force_check, check_state_with, parse_formula, AtlError, GameModel, StateSpace, DEFAULT_BUDGET,
};
use sabotage_core::epistemic::{check_imp, Relations};
use sabotage_core::mincut::{dynamic_min_cut, static_min_cut, MincutError};
use sabotage_core::session::SessionError;
use sabotage_core::sml::{eval_sml, model_of, parse_sml, SmlError};
use sabotage_core::{Arena, GameError, Graph, GraphError, State, StructureKind};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Atl(#[from] AtlError),
    #[error(transparent)]
    Sml(#[from] SmlError),
    #[error(transparent)]
    Mincut(#[from] MincutError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

impl ApiError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) | ApiError::Graph(_) | ApiError::Sml(_) => "bad_request",
            ApiError::Game(GameError::IllegalAction { .. }) => "illegal_move",
            ApiError::Game(_) => "bad_request",
            ApiError::Atl(AtlError::Resource { .. }) => "resource_limit",
            ApiError::Atl(e) if is_input_error(e) => "bad_request",
            ApiError::Atl(AtlError::Game(GameError::IllegalAction { .. })) => "illegal_move",
            ApiError::Atl(_) => "unsupported",
            ApiError::Mincut(MincutError::Atl(AtlError::Resource { .. })) => "resource_limit",
            ApiError::Mincut(_) => "bad_request",
            ApiError::Session(e) => match e {
                SessionError::NotFound(_) => "not_found",
                SessionError::Conflict { .. } => "conflict",
                SessionError::Game(GameError::IllegalAction { .. }) => "illegal_move",
                SessionError::NotYourTurn | SessionError::HumanTurn => "wrong_turn",
                SessionError::GameOver => "game_over",
                SessionError::NotHuman(_) | SessionError::NotActing(_) | SessionError::MissingChoice(_) => {
                    "illegal_move"
                }
                SessionError::Atl(AtlError::Resource { .. }) => "resource_limit",
                SessionError::Atl(e) if is_input_error(e) => "bad_request",
                SessionError::Atl(_) => "unsupported",
                SessionError::Game(_) | SessionError::Invalid(_) => "bad_request",
            },
        }
    }

    /// Structured detail: the message, plus the legal set for illegal moves.
    pub fn detail(&self) -> Value {
        let illegal = match self {
            ApiError::Game(e) | ApiError::Session(SessionError::Game(e)) | ApiError::Atl(AtlError::Game(e)) => Some(e),
            _ => None,
        };
        match illegal {
            Some(GameError::IllegalAction { agent, action, legal }) => json!({
                "message": self.to_string(),
                "agent": agent.symbol(),
                "action": action,
                "legal": legal,
            }),
            _ => json!({ "message": self.to_string() }),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": self.code(), "detail": self.detail() })
    }
}

fn is_input_error(e: &AtlError) -> bool {
    matches!(
        e,
        AtlError::Syntax { .. }
            | AtlError::UnknownAgent(_)
            | AtlError::UnknownVertex(_)
            | AtlError::UnknownEdge(..)
            | AtlError::CoalitionNotInStructure { .. }
            | AtlError::MissingRelation(_)
            | AtlError::Game(_)
    )
}

pub type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    #[default]
    Standard,
    Imp,
}

/// A model-checking query.
#[derive(Debug, Clone, Deserialize)]
pub struct CheckRequest {
    pub graph: Value,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub goal: Option<String>,
    #[serde(default)]
    pub state: Option<Value>,
    pub formula: String,
    #[serde(default)]
    pub semantics: Semantics,
    #[serde(default)]
    pub relations: Option<Value>,
    /// Evaluate `formula` as a sabotage modal logic formula at the runner's world.
    #[serde(default)]
    pub sml: bool,
    #[serde(default)]
    pub oracle: bool,
}

fn default_kind() -> String {
    "tb".into()
}

#[derive(Debug, Clone, Deserialize)]
pub struct MincutRequest {
    pub graph: Value,
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub dynamic: bool,
}

/// Parses a graph given as a JSON document or as JSON text.
pub fn graph_from_value(v: &Value) -> ApiResult<Graph> {
    let text = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    Ok(Graph::parse(&text)?)
}

/// Builds the model with an optional goal override.
pub fn build_model(graph: Graph, kind: &str, goal: Option<&str>) -> ApiResult<GameModel> {
    let kind: StructureKind = kind.parse()?;
    let goal = match goal {
        Some(name) => Some(graph.vertex(name)?),
        None => graph.goal(),
    };
    let arena = Arena::new(kind, graph.with_endpoints(graph.start(), goal))?;
    Ok(GameModel::new(arena, goal))
}

/// A state in text form (`((E,u),r)`) or JSON form; the initial state when absent.
pub fn state_from_value(arena: &Arena, v: Option<&Value>) -> ApiResult<State> {
    Ok(match v {
        None | Some(Value::Null) => arena.initial_state(),
        Some(Value::String(text)) => arena.parse_state(text)?,
        Some(other) => arena.state_from_json(other)?,
    })
}

pub fn relations_from_value(arena: &Arena, v: Option<&Value>) -> ApiResult<Option<Relations>> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(text)) => {
            let parsed: Value =
                serde_json::from_str(text).map_err(|e| ApiError::BadRequest(format!("relations: {e}")))?;
            Ok(Some(Relations::from_json(arena, &parsed)?))
        }
        Some(other) => Ok(Some(Relations::from_json(arena, other)?)),
    }
}

/// Runs a check and returns the verdict with its report.
pub fn run_check(req: &CheckRequest) -> ApiResult<(bool, Value)> {
    let started = Instant::now();
    let graph = graph_from_value(&req.graph)?;
    let model = build_model(graph, &req.kind, req.goal.as_deref())?;
    let arena = &model.arena;
    let state = state_from_value(arena, req.state.as_ref())?;
    if req.sml {
        let f = parse_sml(&req.formula)?;
        let verdict = eval_sml(&model_of(arena.graph(), &state, model.goal), state.position, &f)?;
        let report = json!({
            "verdict": verdict,
            "formula": f.to_string(),
            "logic": "sml",
            "state": arena.state_to_json(&state),
            "elapsed_ms": started.elapsed().as_secs_f64() * 1e3,
        });
        return Ok((verdict, report));
    }
    let formula = parse_formula(&req.formula)?;
    let relations = relations_from_value(arena, req.relations.as_ref())?;
    let mut report = json!({});
    let verdict = match req.semantics {
        Semantics::Standard => {
            let out = check_state_with(&model, relations.as_ref(), &state, &formula)?;
            report["normalized"] = json!(out.normalized.to_string());
            report["states"] = json!(out.states);
            report["witness"] = out.witness.map(|w| w.to_json(arena)).unwrap_or(Value::Null);
            out.verdict
        }
        Semantics::Imp => {
            let rel = relations.unwrap_or_default();
            let v = check_imp(&model, &rel, &state, &formula)?;
            report["states"] = json!(StateSpace::full(arena)?.len());
            v
        }
    };
    if req.oracle {
        report["oracle"] = match brute_force_check(&model, &state, &formula, DEFAULT_BUDGET) {
            Ok(v) => json!({ "verdict": v, "agrees": v == verdict }),
            Err(e) => json!({ "verdict": null, "inconclusive": e.to_string() }),
        };
    }
    let mut out = json!({
        "verdict": verdict,
        "formula": formula.to_string(),
        "kind": arena.kind().as_str(),
        "semantics": match req.semantics { Semantics::Standard => "standard", Semantics::Imp => "imp" },
        "state": arena.state_to_json(&state),
    });
    for (k, v) in report.as_object().cloned().unwrap_or_default() {
        out[k] = v;
    }
    out["elapsed_ms"] = json!(started.elapsed().as_secs_f64() * 1e3);
    Ok((verdict, out))
}

/// Static or dynamic cut report. A dynamic query without a cut reports `demon_moves: null`.
pub fn run_mincut(req: &MincutRequest) -> ApiResult<Value> {
    let graph = graph_from_value(&req.graph)?;
    let from = graph.vertex(&req.from)?;
    let to = graph.vertex(&req.to)?;
    if !req.dynamic {
        return Ok(static_min_cut(&graph, from, to)?.to_json(&graph));
    }
    let report = match dynamic_min_cut(&graph, from, to)? {
        Some(cut) => {
            let arena = Arena::new(StructureKind::Tb, graph.with_endpoints(from, Some(to)))?;
            let mut v = cut.to_json(&arena);
            v["from"] = json!(req.from);
            v["to"] = json!(req.to);
            v
        }
        None => json!({ "from": req.from, "to": req.to, "demon_moves": null }),
    };
    Ok(report)
}

/// The witness strategy for a coalition formula, if it holds.
pub fn run_solve(req: &CheckRequest) -> ApiResult<(bool, Value)> {
    let graph = graph_from_value(&req.graph)?;
    let model = build_model(graph, &req.kind, req.goal.as_deref())?;
    let state = state_from_value(&model.arena, req.state.as_ref())?;
    let formula = parse_formula(&req.formula)?;
    let relations = relations_from_value(&model.arena, req.relations.as_ref())?;
    let out = check_state_with(&model, relations.as_ref(), &state, &formula)?;
    let witness = out.witness.map(|w| w.to_json(&model.arena));
    Ok((
        out.verdict,
        json!({
            "verdict": out.verdict,
            "normalized": out.normalized.to_string(),
            "strategy": witness,
        }),
    ))
}
