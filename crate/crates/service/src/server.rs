use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;

use crate::protocol::*;
use crate::session::{ServiceError, SessionManager};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Delay between streamed frames; zero streams as fast as the socket allows.
    pub tick: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            tick: Duration::from_millis(100),
        }
    }
}

#[derive(Clone)]
struct AppState {
    manager: Arc<SessionManager>,
    config: ServerConfig,
}

struct ApiError(ErrorResponse);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e.to_response())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(ErrorResponse {
            v: PROTOCOL_VERSION,
            code: ErrorCode::BadRequest,
            message: e.body_text(),
        })
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Routes, all under `/v1`:
///
/// | method | path | body | response |
/// |---|---|---|---|
/// | POST | `/sessions` | [`CreateSessionRequest`] | [`SessionCreated`] |
/// | POST | `/sessions/{id}/next-trial` | none | [`TrialStarted`] |
/// | GET | `/sessions/{id}/stream` | WebSocket | [`StreamMessage`]s |
/// | GET | `/sessions/{id}/frames` | none | [`FrameBatch`] |
/// | POST | `/sessions/{id}/ranking` | [`SubmitRankingRequest`] | [`RankingAccepted`] |
/// | GET | `/sessions/{id}/results` | none | [`ResultsResponse`] |
/// | GET | `/sessions/{id}/export` | none | CSV |
///
/// Errors are [`ErrorResponse`] bodies with a status derived from the code.
pub fn router(manager: Arc<SessionManager>, config: ServerConfig) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/next-trial", post(next_trial))
        .route("/v1/sessions/{id}/stream", get(stream))
        .route("/v1/sessions/{id}/frames", get(frames))
        .route("/v1/sessions/{id}/ranking", post(submit_ranking))
        .route("/v1/sessions/{id}/results", get(results))
        .route("/v1/sessions/{id}/export", get(export))
        .with_state(AppState { manager, config })
}

pub async fn serve(listener: TcpListener, manager: Arc<SessionManager>, config: ServerConfig) -> std::io::Result<()> {
    axum::serve(listener, router(manager, config)).await
}

/// Binds `addr` and serves until the process stops.
pub async fn bind_and_serve(addr: SocketAddr, manager: Arc<SessionManager>, config: ServerConfig) -> std::io::Result<()> {
    serve(TcpListener::bind(addr).await?, manager, config).await
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> ApiResult<SessionCreated> {
    let Json(req) = body?;
    Ok(Json(app.manager.create_session(&req)?))
}

async fn next_trial(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<TrialStarted> {
    Ok(Json(app.manager.next_trial(&id)?))
}

async fn frames(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<FrameBatch> {
    Ok(Json(app.manager.drain_frames(&id)?))
}

async fn submit_ranking(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SubmitRankingRequest>, JsonRejection>,
) -> ApiResult<RankingAccepted> {
    let Json(req) = body?;
    Ok(Json(app.manager.submit_ranking(&id, &req)?))
}

async fn results(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<ResultsResponse> {
    Ok(Json(app.manager.results(&id)?))
}

async fn export(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let csv = app.manager.export_csv(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}

async fn stream(State(app): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| push_frames(socket, app, id))
}

async fn send(socket: &mut WebSocket, msg: &StreamMessage) -> bool {
    let text = serde_json::to_string(msg).expect("stream messages serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

/// Streams the active trial's remaining frames, then closes the socket.
async fn push_frames(mut socket: WebSocket, app: AppState, id: String) {
    loop {
        match app.manager.pull_frame(&id) {
            Ok(Some(packet)) => {
                let last = packet.phase == FramePhase::AwaitingRanking;
                if !send(&mut socket, &StreamMessage::Frame(Box::new(packet))).await || last {
                    break;
                }
                if !app.config.tick.is_zero() {
                    tokio::time::sleep(app.config.tick).await;
                }
            }
            Ok(None) => break,
            Err(e) => {
                send(&mut socket, &StreamMessage::Error(e.to_response())).await;
                break;
            }
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}
