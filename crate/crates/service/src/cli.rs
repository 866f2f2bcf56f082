//! Command line and startup.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use cablebot_core::controller::{Controller, ControllerError};
use cablebot_core::winchsim::{ClockMode, SimClock, SimulatedWinches, SimulatorConfig};
use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::api::{router, AppState};
use crate::persist::{load_config, save_config, ConfigStore, PersistError, PersistedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    Realtime,
    Manual,
}

impl From<ClockArg> for ClockMode {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::Realtime => ClockMode::Realtime,
            ClockArg::Manual => ClockMode::Manual,
        }
    }
}

/// `instant`, or a positive number of steps per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate(pub Option<f64>);

impl std::str::FromStr for Rate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("instant") {
            return Ok(Rate(None));
        }
        match s.parse::<f64>() {
            Ok(r) if r.is_finite() && r > 0.0 => Ok(Rate(Some(r))),
            _ => Err(format!(
                "expected `instant` or a positive step rate, got {s:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "cablebotd", version, about = "Cable robot control server")]
pub struct Args {
    /// TCP port to listen on (0 picks a free port).
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Configuration file; created with defaults if absent.
    #[arg(long, default_value = "./cablebot.json")]
    pub config: PathBuf,
    /// Directory of UI assets served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Simulator clock.
    #[arg(long, value_enum, default_value_t = ClockArg::Realtime)]
    pub clock: ClockArg,
    /// Simulated winch speed in steps per second, or `instant`.
    #[arg(long, default_value = "instant")]
    pub rate: Rate,
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] PersistError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

/// Loads the configuration, or writes the defaults if the file is absent.
/// A file that exists but does not load is left untouched.
pub fn load_or_init(path: &std::path::Path) -> Result<PersistedConfig, PersistError> {
    match std::fs::metadata(path) {
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let config = PersistedConfig::default();
            save_config(path, &config)?;
            tracing::info!(path = %path.display(), "wrote default configuration");
            Ok(config)
        }
        _ => load_config(path),
    }
}

/// Builds the simulator, controller and store behind the HTTP API.
pub fn open(
    config_path: PathBuf,
    clock: ClockMode,
    rate: Option<f64>,
) -> Result<AppState, StartupError> {
    let persisted = load_or_init(&config_path)?;
    let store = Arc::new(ConfigStore::new(config_path, persisted.ui_default_language));
    let simulator = Arc::new(SimulatedWinches::new(
        SimulatorConfig::new(persisted.robot.winch_params.clone()).with_rate(rate),
        Arc::new(SimClock::new(clock)),
    ));
    let controller = Controller::new(persisted.robot, simulator.clone())?.with_sink(store.clone());
    Ok(AppState::new(Arc::new(controller), simulator, store))
}

pub async fn run(args: Args) -> anyhow::Result<()> {
    let state = open(args.config.clone(), args.clock.into(), args.rate.0)
        .with_context(|| format!("cannot start with configuration {}", args.config.display()))?;
    let addr = SocketAddr::from(([0, 0, 0, 0], args.port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot listen on port {}", args.port))?;
    let local = listener.local_addr()?;
    println!("cablebotd listening on http://{local}");
    tracing::info!(%local, config = %args.config.display(), "serving");
    let app = router(state, args.static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
