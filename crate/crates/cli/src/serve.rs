//! HTTP routing service.
//!
//! `POST /route` accepts `{"query": "..."}`, `{"queries": [...]}` or, for
//! models trained on precomputed embeddings, `{"vector": [...]}`.
//! `GET /healthz` reports the model id and uptime.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use tracing::{error, info};

use qroute_core::cost::CostModel;
use qroute_core::routing::{load_model, route, LoadedModel, RouteInput, RouteResponse};
use qroute_core::Error;

use crate::config::Settings;
use crate::CliError;

pub const DEFAULT_BATCH_CAP: usize = 256;
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

pub struct AppState {
    pub model: LoadedModel,
    pub cost: CostModel,
    pub batch_cap: usize,
    pub started: Instant,
}

impl AppState {
    pub fn new(model: LoadedModel, cost: CostModel, batch_cap: usize) -> Self {
        AppState {
            model,
            cost,
            batch_cap,
            started: Instant::now(),
        }
    }
}

/// Labels attached to a response for the access log.
#[derive(Clone)]
struct Routed(String);

struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(m: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: m.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    let id = uuid::Uuid::new_v4().simple().to_string();
    error!(error_id = %id, error = %e, "request failed");
    ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: format!("internal error (id {id})"),
    }
}

enum Shape {
    One(RouteInput),
    Many(Vec<RouteInput>),
}

fn parse_request(body: &[u8], cap: usize) -> Result<Shape, ApiError> {
    let v: Value = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| ApiError::bad_request("request body must be a JSON object"))?;
    let text = |v: &Value| -> Result<RouteInput, ApiError> {
        match v.as_str() {
            Some(s) if !s.trim().is_empty() => Ok(RouteInput::Text(s.to_string())),
            Some(_) => Err(ApiError::bad_request("query is empty")),
            None => Err(ApiError::bad_request("query must be a string")),
        }
    };
    if let Some(q) = obj.get("query") {
        return Ok(Shape::One(text(q)?));
    }
    if let Some(qs) = obj.get("queries") {
        let arr = qs
            .as_array()
            .ok_or_else(|| ApiError::bad_request("queries must be an array of strings"))?;
        if arr.is_empty() {
            return Err(ApiError::bad_request("queries is empty"));
        }
        if arr.len() > cap {
            return Err(ApiError {
                status: StatusCode::PAYLOAD_TOO_LARGE,
                message: format!("batch of {} exceeds the cap of {cap}", arr.len()),
            });
        }
        return Ok(Shape::Many(arr.iter().map(text).collect::<Result<_, _>>()?));
    }
    if let Some(vec) = obj.get("vector") {
        let v: Vec<f64> = serde_json::from_value(vec.clone())
            .map_err(|_| ApiError::bad_request("vector must be an array of numbers"))?;
        return Ok(Shape::One(RouteInput::Vector(v)));
    }
    Err(ApiError::bad_request("missing `query`, `queries` or `vector`"))
}

async fn route_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let shape = parse_request(&body, state.batch_cap)?;
    let (inputs, single) = match shape {
        Shape::One(i) => (vec![i], true),
        Shape::Many(v) => (v, false),
    };
    let st = state.clone();
    let result = tokio::task::spawn_blocking(move || route(&st.model, &st.cost, &inputs))
        .await
        .map_err(internal)?;
    let responses: Vec<RouteResponse> = match result {
        Ok(r) => r,
        Err(e @ (Error::InvalidInput(_) | Error::DimensionMismatch { .. })) => {
            return Err(ApiError::bad_request(e.to_string()))
        }
        Err(e) => return Err(internal(e)),
    };
    let labels = responses.iter().map(|r| r.label.as_str()).collect::<Vec<_>>().join(",");
    let mut resp = if single {
        Json(&responses[0]).into_response()
    } else {
        Json(&responses).into_response()
    };
    resp.extensions_mut().insert(Routed(labels));
    Ok(resp)
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "model_id": state.model.model_id,
        "uptime_secs": state.started.elapsed().as_secs_f64(),
    }))
}

async fn access_log(req: Request, next: Next) -> Response {
    let start = Instant::now();
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let resp = next.run(req).await;
    let label = resp.extensions().get::<Routed>().map(|r| r.0.clone()).unwrap_or_default();
    info!(
        target: "qroute::access",
        %method,
        path,
        status = resp.status().as_u16(),
        latency_ms = start.elapsed().as_secs_f64() * 1e3,
        label,
        "request"
    );
    resp
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/route", post(route_handler))
        .route("/healthz", get(healthz))
        .layer(middleware::from_fn(access_log))
        .with_state(state)
}

/// Serve on an already-bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

pub fn run(s: &Settings) -> Result<(), CliError> {
    let model_path = s.existing_path("model")?;
    let bind = s.str("bind")?.unwrap_or_else(|| DEFAULT_BIND.into());
    let addr: SocketAddr = bind
        .parse()
        .map_err(|_| CliError::Usage(format!("bind must be host:port, got {bind:?}")))?;
    let cap = s.u64("batch_cap")?.map_or(DEFAULT_BATCH_CAP, |v| v as usize);
    if cap == 0 {
        return Err(CliError::Usage("batch_cap must be positive".into()));
    }
    let cost = s.cost_model()?;
    let model = load_model(&model_path)?;
    let state = Arc::new(AppState::new(model, cost, cap));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start runtime: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
        info!(model_id = %state.model.model_id, %local, "serving");
        println!("listening on {local}");
        use std::io::Write as _;
        let _ = std::io::stdout().flush();
        serve_on(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Runtime(format!("server error: {e}")))
    })
}
