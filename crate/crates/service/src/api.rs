//! Route table, handlers and the movement lock.

use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path as UrlPath, Request, State};
use axum::http::{Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put, MethodRouter};
use axum::{Json, Router};
use cablebot_core::controller::{Axis, Controller, RobotStatus, SavedPosition, Sign};
use cablebot_core::kinematics::{InterDistanceSet, Point3, StepOrder, Trilateration};
use cablebot_core::winchsim::{CoilId, Direction, FaultKind, SimulatedWinches};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::{ApiError, ErrorCode};
use crate::persist::{ConfigStore, PersistedConfig, SCHEMA_VERSION};

/// How a route interacts with the movement lock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockPolicy {
    /// Never touches the lock.
    Read,
    /// Acquires the lock or answers `busy` at once.
    Movement,
    /// Simulator fault injection; must work while a movement is running.
    TestHook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteSpec {
    pub method: &'static str,
    pub path: &'static str,
    pub policy: LockPolicy,
}

const fn route(method: &'static str, path: &'static str, policy: LockPolicy) -> RouteSpec {
    RouteSpec {
        method,
        path,
        policy,
    }
}

/// Every API route. The router is built from this table.
pub const ROUTES: &[RouteSpec] = &[
    route("GET", "/api/status", LockPolicy::Read),
    route("POST", "/api/coil/{id}/half-turn", LockPolicy::Movement),
    route("POST", "/api/coil/{id}/jog", LockPolicy::Movement),
    route("POST", "/api/coil/{id}/stop", LockPolicy::Movement),
    route("POST", "/api/coil/{id}/zero", LockPolicy::Movement),
    route("POST", "/api/coil/{id}/fault", LockPolicy::TestHook),
    route("DELETE", "/api/coil/{id}/fault", LockPolicy::TestHook),
    route("POST", "/api/move/axis", LockPolicy::Movement),
    route("POST", "/api/move/goto", LockPolicy::Movement),
    route("GET", "/api/positions", LockPolicy::Read),
    route("POST", "/api/positions", LockPolicy::Movement),
    route("POST", "/api/positions/{id}/goto", LockPolicy::Movement),
    route("DELETE", "/api/positions/{id}", LockPolicy::Movement),
    route("POST", "/api/trilateration/solve", LockPolicy::Movement),
    route("POST", "/api/trilateration/commit", LockPolicy::Movement),
    route("GET", "/api/config", LockPolicy::Read),
    route("PUT", "/api/config", LockPolicy::Movement),
];

#[derive(Clone)]
pub struct AppState {
    controller: Arc<Controller>,
    simulator: Arc<SimulatedWinches>,
    store: Arc<ConfigStore>,
    movement: Arc<tokio::sync::Mutex<()>>,
}

impl AppState {
    /// `controller` must drive `simulator` and persist through `store`.
    pub fn new(
        controller: Arc<Controller>,
        simulator: Arc<SimulatedWinches>,
        store: Arc<ConfigStore>,
    ) -> Self {
        AppState {
            controller,
            simulator,
            store,
            movement: Arc::new(tokio::sync::Mutex::new(())),
        }
    }

    pub fn controller(&self) -> &Arc<Controller> {
        &self.controller
    }

    pub fn simulator(&self) -> &Arc<SimulatedWinches> {
        &self.simulator
    }

    pub fn store(&self) -> &Arc<ConfigStore> {
        &self.store
    }

    pub fn movement_lock(&self) -> &Arc<tokio::sync::Mutex<()>> {
        &self.movement
    }

    pub fn persisted_config(&self) -> PersistedConfig {
        self.store.snapshot(self.controller.config())
    }
}

/// Builds the router; UI assets are served from `static_dir` at `/`.
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let mut app = Router::new();
    for entry in ROUTES {
        let mut handler = handler_for(entry);
        if entry.policy == LockPolicy::Movement {
            handler =
                handler.route_layer(middleware::from_fn_with_state(state.clone(), movement_lock));
        }
        app = app.route(entry.path, handler);
    }
    if let Some(dir) = static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.with_state(state)
}

fn handler_for(entry: &RouteSpec) -> MethodRouter<AppState> {
    match (entry.method, entry.path) {
        ("GET", "/api/status") => get(status),
        ("POST", "/api/coil/{id}/half-turn") => post(half_turn),
        ("POST", "/api/coil/{id}/jog") => post(start_jog),
        ("POST", "/api/coil/{id}/stop") => post(stop_jog),
        ("POST", "/api/coil/{id}/zero") => post(save_zero),
        ("POST", "/api/coil/{id}/fault") => post(inject_fault),
        ("DELETE", "/api/coil/{id}/fault") => delete(clear_fault),
        ("POST", "/api/move/axis") => post(move_axis),
        ("POST", "/api/move/goto") => post(move_goto),
        ("GET", "/api/positions") => get(list_positions),
        ("POST", "/api/positions") => post(save_position),
        ("POST", "/api/positions/{id}/goto") => post(recall_position),
        ("DELETE", "/api/positions/{id}") => delete(delete_position),
        ("POST", "/api/trilateration/solve") => post(trilateration_solve),
        ("POST", "/api/trilateration/commit") => post(trilateration_commit),
        ("GET", "/api/config") => get(get_config),
        ("PUT", "/api/config") => put(put_config),
        _ => unreachable!("no handler for {} {}", entry.method, entry.path),
    }
}

async fn movement_lock(State(state): State<AppState>, req: Request, next: Next) -> Response {
    match state.movement.clone().try_lock_owned() {
        Ok(guard) => {
            let response = next.run(req).await;
            drop(guard);
            response
        }
        Err(_) => {
            tracing::debug!(method = %req.method(), uri = %req.uri(), "rejected: busy");
            ApiError::busy().into_response()
        }
    }
}

/// `Json` with errors reported as `bad_request` bodies.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| ApiJson(v))
            .map_err(|r| ApiError::bad_request(r.body_text()))
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs a controller call on the blocking pool; moves may sleep.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?
}

fn parse_coil(state: &AppState, raw: &str) -> Result<CoilId, ApiError> {
    raw.parse::<CoilId>()
        .ok()
        .filter(|c| c.index() < state.controller.driver().coil_count())
        .ok_or_else(|| ApiError::new(ErrorCode::UnknownCoil, format!("no coil {raw:?}")))
}

fn parse_id(raw: &str) -> Result<u64, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::bad_request(format!("invalid position id {raw:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveResponse {
    pub orders: Vec<StepOrder>,
    pub status: RobotStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopResponse {
    pub steps: i64,
    pub status: RobotStatus,
}

#[derive(Debug, Deserialize)]
pub struct DirectionBody {
    pub direction: Direction,
}

#[derive(Debug, Deserialize)]
pub struct FaultBody {
    pub kind: FaultKind,
}

#[derive(Debug, Deserialize)]
pub struct AxisBody {
    pub axis: Axis,
    pub sign: Sign,
}

#[derive(Debug, Deserialize)]
pub struct GotoBody {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default)]
    pub relative: bool,
}

#[derive(Debug, Default, Deserialize)]
pub struct SaveBody {
    #[serde(default)]
    pub label: String,
}

async fn status(State(state): State<AppState>) -> Json<RobotStatus> {
    Json(state.controller.status())
}

async fn half_turn(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    ApiJson(body): ApiJson<DirectionBody>,
) -> ApiResult<MoveResponse> {
    let coil = parse_coil(&state, &id)?;
    let c = Arc::clone(&state.controller);
    blocking(move || {
        let order = c.coil_half_turn(coil, body.direction)?;
        let mut orders = vec![StepOrder::ZERO; c.driver().coil_count()];
        orders[coil.index()] = order;
        Ok(Json(MoveResponse {
            orders,
            status: c.status(),
        }))
    })
    .await
}

async fn start_jog(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    ApiJson(body): ApiJson<DirectionBody>,
) -> ApiResult<RobotStatus> {
    let coil = parse_coil(&state, &id)?;
    state
        .controller
        .calibration_start_jog(coil, body.direction)?;
    Ok(Json(state.controller.status()))
}

async fn stop_jog(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<StopResponse> {
    let coil = parse_coil(&state, &id)?;
    let steps = state.controller.calibration_stop(coil)?;
    Ok(Json(StopResponse {
        steps,
        status: state.controller.status(),
    }))
}

async fn save_zero(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<RobotStatus> {
    let coil = parse_coil(&state, &id)?;
    state.controller.calibration_save_zero(coil)?;
    Ok(Json(state.controller.status()))
}

async fn inject_fault(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    ApiJson(body): ApiJson<FaultBody>,
) -> ApiResult<RobotStatus> {
    let coil = parse_coil(&state, &id)?;
    state.simulator.inject_fault(coil, body.kind)?;
    Ok(Json(state.controller.status()))
}

async fn clear_fault(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<RobotStatus> {
    let coil = parse_coil(&state, &id)?;
    state.simulator.clear_fault(coil)?;
    Ok(Json(state.controller.status()))
}

async fn move_axis(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<AxisBody>,
) -> ApiResult<MoveResponse> {
    let c = Arc::clone(&state.controller);
    blocking(move || {
        let orders = c.axis_jog(body.axis, body.sign)?;
        Ok(Json(MoveResponse {
            orders,
            status: c.status(),
        }))
    })
    .await
}

async fn move_goto(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<GotoBody>,
) -> ApiResult<MoveResponse> {
    let point = Point3::new(body.x, body.y, body.z);
    if !point.is_finite() {
        return Err(ApiError::bad_request("coordinates must be finite"));
    }
    let c = Arc::clone(&state.controller);
    blocking(move || {
        let orders = if body.relative {
            c.shift_relative(point)?
        } else {
            c.goto_absolute(point)?
        };
        Ok(Json(MoveResponse {
            orders,
            status: c.status(),
        }))
    })
    .await
}

async fn list_positions(State(state): State<AppState>) -> Json<Vec<SavedPosition>> {
    Json(state.controller.list_positions())
}

async fn save_position(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<SavedPosition>), ApiError> {
    let body: SaveBody = if body.iter().all(u8::is_ascii_whitespace) {
        SaveBody::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    let c = Arc::clone(&state.controller);
    let saved = blocking(move || Ok(c.save_current_position(&body.label)?)).await?;
    Ok((StatusCode::CREATED, Json(saved)))
}

async fn recall_position(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<MoveResponse> {
    let id = parse_id(&id)?;
    let c = Arc::clone(&state.controller);
    blocking(move || {
        let orders = c.recall_position(id)?;
        Ok(Json(MoveResponse {
            orders,
            status: c.status(),
        }))
    })
    .await
}

async fn delete_position(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<StatusCode, ApiError> {
    let id = parse_id(&id)?;
    let c = Arc::clone(&state.controller);
    blocking(move || Ok(c.delete_position(id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn trilateration_solve(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<InterDistanceSet>,
) -> ApiResult<Trilateration> {
    Ok(Json(state.controller.apply_trilateration(&body)?))
}

async fn trilateration_commit(State(state): State<AppState>) -> ApiResult<Trilateration> {
    let c = Arc::clone(&state.controller);
    blocking(move || Ok(Json(c.commit_trilateration()?))).await
}

async fn get_config(State(state): State<AppState>) -> Json<PersistedConfig> {
    Json(state.persisted_config())
}

async fn put_config(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<PersistedConfig>,
) -> ApiResult<PersistedConfig> {
    if body.schema_version != SCHEMA_VERSION {
        return Err(ApiError::new(
            ErrorCode::InvalidConfig,
            format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                body.schema_version
            ),
        ));
    }
    let s = state.clone();
    blocking(move || {
        let previous = s.store.language();
        s.store.set_language(body.ui_default_language);
        if let Err(e) = s.controller.replace_config(body.robot) {
            s.store.set_language(previous);
            return Err(e.into());
        }
        Ok(Json(s.persisted_config()))
    })
    .await
}

/// Methods in the table, for tests that walk it.
pub fn method_of(entry: &RouteSpec) -> Method {
    entry.method.parse().expect("valid method in route table")
}
