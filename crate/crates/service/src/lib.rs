//! HTTP remote control for the cable robot: a JSON API over the controller,
//! a process-wide movement lock, and configuration persistence.

pub mod api;
pub mod cli;
pub mod error;
pub mod persist;

pub use api::{router, AppState, LockPolicy, RouteSpec, ROUTES};
pub use error::{ApiError, ErrorCode};
pub use persist::{load_config, save_config, ConfigStore, Language, PersistedConfig};
