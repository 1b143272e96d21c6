//! Live trial conduct over HTTP, backed by per-trial append-only event logs.
//!
//! Endpoints: `POST /trials`, `POST /trials/{id}/outcomes`, `GET /trials/{id}`,
//! `GET /trials/{id}/recommendation`, `GET /healthz`.

mod api;
mod error;
pub mod store;
pub mod view;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::{router, settings_of, AppState};
pub use error::{ApiError, ErrorEnvelope};

use aaa_core::sim::McmcProfile;

/// Serves `data_dir` on `addr` until the process stops.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf, profile: McmcProfile) -> Result<(), ApiError> {
    let state = AppState::load(store::Store::open(data_dir)?, profile)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(state))).await?;
    Ok(())
}
