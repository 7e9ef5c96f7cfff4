//! Turn-based session server: the engine, an AI opponent, situation-model
//! predictions and gaze ingestion over JSON endpoints plus a per-session
//! event stream.

pub mod api;
pub mod error;
pub mod routes;
pub mod session;

pub use api::*;
pub use error::ServiceError;
pub use routes::{router, serve, AppState, ServiceConfig};
pub use session::{parse_log, replay_log, ParamStore, Session, StreamMsg, LOG_FORMAT, PARAMS_DIR_ENV};
