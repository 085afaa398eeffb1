//! HTTP adapter over the lifecycle engine. Every handler parses its input,
//! calls one engine operation or query, and serializes the result.

mod error;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::Router;
use trl_core::analytics::ReportRegistry;
use trl_core::store::EventStore;
use trl_core::Engine;

pub use error::{status_for, ApiError};

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Default)]
pub struct Config {
    /// Bearer token required on mutating requests; `None` leaves them open.
    pub token: Option<String>,
    /// Directory of built dashboard assets served at `/`.
    pub dashboard_dir: Option<PathBuf>,
}

impl Config {
    /// Reads `TRL_TOKEN` and `TRL_DASHBOARD_DIR`.
    pub fn from_env() -> Self {
        let non_empty = |key| std::env::var(key).ok().filter(|v: &String| !v.is_empty());
        Config {
            token: non_empty("TRL_TOKEN"),
            dashboard_dir: non_empty("TRL_DASHBOARD_DIR").map(PathBuf::from),
        }
    }
}

/// Listen address from `TRL_ADDR`, falling back to [`DEFAULT_ADDR`].
pub fn addr_from_env() -> String {
    std::env::var("TRL_ADDR").unwrap_or_else(|_| DEFAULT_ADDR.to_string())
}

pub type SharedEngine = Arc<Mutex<Engine<Box<dyn EventStore>>>>;

#[derive(Clone)]
pub struct AppState {
    pub engine: SharedEngine,
    pub reports: Arc<ReportRegistry>,
    pub token: Option<Arc<str>>,
}

pub fn router<S: EventStore + 'static>(engine: Engine<S>, config: Config) -> Router {
    let state = AppState {
        engine: Arc::new(Mutex::new(engine.boxed())),
        reports: Arc::new(ReportRegistry::builtin()),
        token: config.token.map(Arc::from),
    };
    routes::build(state, config.dashboard_dir)
}

pub async fn serve<S: EventStore + 'static>(engine: Engine<S>, config: Config, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    if config.token.is_none() {
        tracing::warn!("TRL_TOKEN is not set; mutating endpoints are open");
    }
    axum::serve(listener, router(engine, config)).await
}
