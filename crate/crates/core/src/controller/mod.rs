//! Geometric layer: Cartesian intents in, per-coil step orders out.
//!
//! The controller never measures anything. Cable lengths are dead-reckoned
//! from the driver's step counters and the platform position is the forward
//! kinematics solution of those lengths.

mod config;

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    cable_lengths_for_position, length_for_steps, solve_platform_position_with, steps_for_length,
    trilaterate_anchors, workspace_contains, CableLengths, FkOptions, InterDistanceSet,
    KinematicsError, Point3, PositionSolution, StepOrder, Trilateration,
};
use crate::winchsim::{CoilId, Direction, FaultKind, WinchDriver, WinchError, WinchState};

pub use config::{Axis, CoilStatus, RobotConfig, RobotStatus, SavedPosition, Sign};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("another movement command is in progress")]
    Busy,
    #[error("coils not zeroed: {}", list_coils(.0))]
    NotZeroed(Vec<CoilId>),
    #[error("coil {coil} is faulted ({kind:?}); {applied} steps applied")]
    Faulted {
        coil: CoilId,
        kind: FaultKind,
        applied: i64,
    },
    #[error("target {0} is outside the workspace")]
    OutOfWorkspace(Point3),
    #[error("order would drive the cable of coil {coil} to a negative length")]
    Range { coil: CoilId, steps: i64 },
    #[error("no saved position with id {0}")]
    UnknownId(u64),
    #[error("no trilateration has been solved since the last commit")]
    NothingToCommit,
    #[error("no coil {0}")]
    UnknownCoil(CoilId),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Winch(WinchError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("could not persist configuration: {0}")]
    Persistence(String),
}

fn list_coils(coils: &[CoilId]) -> String {
    coils.iter().map(|c| c.label()).collect()
}

impl From<WinchError> for ControllerError {
    fn from(e: WinchError) -> Self {
        match e {
            WinchError::Faulted {
                coil,
                kind,
                applied,
            } => ControllerError::Faulted {
                coil,
                kind,
                applied,
            },
            WinchError::Range { coil, steps } => ControllerError::Range { coil, steps },
            WinchError::UnknownCoil(c) => ControllerError::UnknownCoil(c),
            other => ControllerError::Winch(other),
        }
    }
}

/// Receives every committed configuration change.
pub trait ConfigSink: Send + Sync {
    fn persist(&self, config: &RobotConfig) -> Result<(), String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoveCommand {
    GotoAbsolute { target: Point3 },
    ShiftRelative { delta: Point3 },
    AxisJog { axis: Axis, sign: Sign },
    CoilHalfTurn { coil: CoilId, direction: Direction },
}

/// Clears the in-progress flag on drop.
struct MutationGuard<'a>(&'a AtomicBool);

impl Drop for MutationGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

pub struct Controller {
    driver: Arc<dyn WinchDriver>,
    config: RwLock<RobotConfig>,
    pending: Mutex<Option<Trilateration>>,
    mutating: AtomicBool,
    next_position_id: AtomicU64,
    sink: Option<Arc<dyn ConfigSink>>,
    fk: FkOptions,
}

impl Controller {
    pub fn new(config: RobotConfig, driver: Arc<dyn WinchDriver>) -> Result<Self, ControllerError> {
        config.validate()?;
        if driver.coil_count() != config.anchors.len() {
            return Err(ControllerError::InvalidConfig(format!(
                "driver has {} coils but {} anchors are configured",
                driver.coil_count(),
                config.anchors.len()
            )));
        }
        driver.set_params(&config.winch_params);
        let next_id = next_id_after(&config);
        Ok(Controller {
            driver,
            config: RwLock::new(config),
            pending: Mutex::new(None),
            mutating: AtomicBool::new(false),
            next_position_id: AtomicU64::new(next_id),
            sink: None,
            fk: FkOptions::default(),
        })
    }

    pub fn with_sink(mut self, sink: Arc<dyn ConfigSink>) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn driver(&self) -> &Arc<dyn WinchDriver> {
        &self.driver
    }

    pub fn config(&self) -> RobotConfig {
        self.config.read().clone()
    }

    /// Fails fast with `Busy` if another mutating call is running.
    fn begin_mutation(&self) -> Result<MutationGuard<'_>, ControllerError> {
        self.mutating
            .compare_exchange(false, true, Ordering::Acquire, Ordering::Relaxed)
            .map(|_| MutationGuard(&self.mutating))
            .map_err(|_| ControllerError::Busy)
    }

    // ---------------------------------------------------------------------
    // Status

    /// Side-effect free snapshot: step counters, lengths and solved pose.
    pub fn status(&self) -> RobotStatus {
        let config = self.config.read().clone();
        let states = self.driver.states();
        let lengths = reported_lengths(&config, &states);
        let position = self.solve(&config, &lengths);
        let coils = states
            .iter()
            .map(|s| CoilStatus {
                coil: s.coil,
                color: s.color(),
                zeroed: s.zeroed,
                fault: s.fault,
                jogging: s.jog.is_some(),
                step_count: s.step_count,
            })
            .collect();
        RobotStatus {
            lengths,
            position,
            all_zeroed: states.iter().all(|s| s.zeroed),
            coils,
        }
    }

    fn solve(&self, config: &RobotConfig, lengths: &CableLengths) -> PositionSolution {
        match solve_platform_position_with(lengths, &config.anchors, None, &self.fk) {
            Ok(s) | Err(KinematicsError::NotConverged { solution: s }) => s,
            Err(e) => {
                // Unreachable with a validated config: counts always match.
                tracing::error!("forward kinematics failed: {e}");
                PositionSolution {
                    position: config.anchors.centroid(),
                    residual: f64::MAX,
                    converged: false,
                }
            }
        }
    }

    fn current_position(&self, config: &RobotConfig) -> Point3 {
        let lengths = reported_lengths(config, &self.driver.states());
        self.solve(config, &lengths).position
    }

    // ---------------------------------------------------------------------
    // Cartesian movements

    pub fn execute(&self, command: MoveCommand) -> Result<Vec<StepOrder>, ControllerError> {
        match command {
            MoveCommand::GotoAbsolute { target } => self.goto_absolute(target),
            MoveCommand::ShiftRelative { delta } => self.shift_relative(delta),
            MoveCommand::AxisJog { axis, sign } => self.axis_jog(axis, sign),
            MoveCommand::CoilHalfTurn { coil, direction } => {
                let order = self.coil_half_turn(coil, direction)?;
                let mut orders = vec![StepOrder::ZERO; self.driver.coil_count()];
                orders[coil.0] = order;
                Ok(orders)
            }
        }
    }

    pub fn goto_absolute(&self, target: Point3) -> Result<Vec<StepOrder>, ControllerError> {
        let _guard = self.begin_mutation()?;
        let config = self.config.read().clone();
        self.move_to(&config, target)
    }

    pub fn shift_relative(&self, delta: Point3) -> Result<Vec<StepOrder>, ControllerError> {
        let _guard = self.begin_mutation()?;
        let config = self.config.read().clone();
        let target = self.current_position(&config) + delta;
        self.move_to(&config, target)
    }

    pub fn axis_jog(&self, axis: Axis, sign: Sign) -> Result<Vec<StepOrder>, ControllerError> {
        let step = self.config.read().jog_axis_step;
        self.shift_relative(axis.unit() * (sign.factor() * step))
    }

    /// Checks every precondition, then executes all orders as one atomic
    /// driver movement.
    fn move_to(
        &self,
        config: &RobotConfig,
        target: Point3,
    ) -> Result<Vec<StepOrder>, ControllerError> {
        let states = self.driver.states();
        check_movable(&states)?;
        if !workspace_contains(&target, &config.anchors) {
            return Err(ControllerError::OutOfWorkspace(target));
        }
        let targets = cable_lengths_for_position(&target, &config.anchors);
        let orders = states
            .iter()
            .zip(targets.as_slice())
            .zip(&config.winch_params)
            .map(|((s, &t), params)| {
                steps_for_length(t, length_for_steps(s.step_count, params), params)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let batch: Vec<(CoilId, StepOrder)> = states
            .iter()
            .map(|s| s.coil)
            .zip(orders.iter().copied())
            .collect();
        self.driver.execute_orders(&batch)?;
        tracing::debug!(%target, ?orders, "moved");
        Ok(orders)
    }

    /// Manual per-coil command; works before calibration.
    pub fn coil_half_turn(
        &self,
        coil: CoilId,
        direction: Direction,
    ) -> Result<StepOrder, ControllerError> {
        let _guard = self.begin_mutation()?;
        let half_turn = self.config.read().half_turn_steps;
        let order = StepOrder(direction.sign() * half_turn);
        self.driver.execute_steps(coil, order)?;
        Ok(order)
    }

    // ---------------------------------------------------------------------
    // Calibration

    pub fn calibration_start_jog(
        &self,
        coil: CoilId,
        direction: Direction,
    ) -> Result<(), ControllerError> {
        let _guard = self.begin_mutation()?;
        let speed = self.config.read().jog_speed;
        Ok(self.driver.start_jog(coil, direction, speed)?)
    }

    /// Returns the signed steps accrued by the jog.
    pub fn calibration_stop(&self, coil: CoilId) -> Result<i64, ControllerError> {
        let _guard = self.begin_mutation()?;
        Ok(self.driver.stop_jog(coil)?)
    }

    pub fn calibration_save_zero(&self, coil: CoilId) -> Result<(), ControllerError> {
        let _guard = self.begin_mutation()?;
        Ok(self.driver.save_zero(coil)?)
    }

    // ---------------------------------------------------------------------
    // Saved positions

    pub fn save_current_position(&self, label: &str) -> Result<SavedPosition, ControllerError> {
        let _guard = self.begin_mutation()?;
        let position = self.status().position.position;
        let saved = SavedPosition {
            id: self.next_position_id.fetch_add(1, Ordering::Relaxed),
            label: label.to_string(),
            position,
        };
        self.update_config(|c| {
            c.saved_positions.push(saved.clone());
            Ok(())
        })?;
        Ok(saved)
    }

    /// Saved positions in insertion order.
    pub fn list_positions(&self) -> Vec<SavedPosition> {
        self.config.read().saved_positions.clone()
    }

    pub fn recall_position(&self, id: u64) -> Result<Vec<StepOrder>, ControllerError> {
        let _guard = self.begin_mutation()?;
        let config = self.config.read().clone();
        let target = config
            .saved_position(id)
            .ok_or(ControllerError::UnknownId(id))?
            .position;
        self.move_to(&config, target)
    }

    pub fn delete_position(&self, id: u64) -> Result<(), ControllerError> {
        let _guard = self.begin_mutation()?;
        self.update_config(|c| {
            let before = c.saved_positions.len();
            c.saved_positions.retain(|s| s.id != id);
            if c.saved_positions.len() == before {
                return Err(ControllerError::UnknownId(id));
            }
            Ok(())
        })
    }

    // ---------------------------------------------------------------------
    // Trilateration

    /// Solves for the coil coordinates without touching the configuration.
    /// The result is kept until [`Controller::commit_trilateration`].
    pub fn apply_trilateration(
        &self,
        distances: &InterDistanceSet,
    ) -> Result<Trilateration, ControllerError> {
        let _guard = self.begin_mutation()?;
        let solved = trilaterate_anchors(distances)?;
        if solved.anchors.len() != self.driver.coil_count() {
            return Err(ControllerError::InvalidConfig(format!(
                "trilateration places {} coils but the robot has {}",
                solved.anchors.len(),
                self.driver.coil_count()
            )));
        }
        *self.pending.lock() = Some(solved.clone());
        Ok(solved)
    }

    /// Writes the last solved coordinates into the configuration.
    pub fn commit_trilateration(&self) -> Result<Trilateration, ControllerError> {
        let _guard = self.begin_mutation()?;
        let mut pending = self.pending.lock();
        let solved = pending.clone().ok_or(ControllerError::NothingToCommit)?;
        self.update_config(|c| {
            c.anchors = solved.anchors.clone();
            Ok(())
        })?;
        *pending = None;
        Ok(solved)
    }

    // ---------------------------------------------------------------------
    // Whole configuration

    pub fn replace_config(&self, new: RobotConfig) -> Result<(), ControllerError> {
        let _guard = self.begin_mutation()?;
        if new.anchors.len() != self.driver.coil_count() {
            return Err(ControllerError::InvalidConfig(format!(
                "{} anchors given but the robot has {} coils",
                new.anchors.len(),
                self.driver.coil_count()
            )));
        }
        self.update_config(|c| {
            *c = new;
            Ok(())
        })?;
        let config = self.config.read();
        self.driver.set_params(&config.winch_params);
        self.next_position_id
            .fetch_max(next_id_after(&config), Ordering::Relaxed);
        Ok(())
    }

    /// Applies `edit` to a copy, validates and persists it, then publishes.
    fn update_config(
        &self,
        edit: impl FnOnce(&mut RobotConfig) -> Result<(), ControllerError>,
    ) -> Result<(), ControllerError> {
        let mut next = self.config.read().clone();
        edit(&mut next)?;
        next.validate()?;
        if let Some(sink) = &self.sink {
            sink.persist(&next).map_err(ControllerError::Persistence)?;
        }
        *self.config.write() = next;
        Ok(())
    }
}

fn next_id_after(config: &RobotConfig) -> u64 {
    config
        .saved_positions
        .iter()
        .map(|s| s.id + 1)
        .max()
        .unwrap_or(1)
}

fn reported_lengths(config: &RobotConfig, states: &[WinchState]) -> CableLengths {
    let lengths = states
        .iter()
        .zip(&config.winch_params)
        .map(|(s, p)| length_for_steps(s.step_count, p).max(0.0))
        .collect();
    CableLengths::new(lengths).expect("clamped finite lengths")
}

fn check_movable(states: &[WinchState]) -> Result<(), ControllerError> {
    if let Some(s) = states.iter().find(|s| s.fault.is_some()) {
        return Err(ControllerError::Faulted {
            coil: s.coil,
            kind: s.fault.expect("checked"),
            applied: 0,
        });
    }
    if let Some(s) = states.iter().find(|s| s.jog.is_some()) {
        return Err(ControllerError::Winch(WinchError::Busy(s.coil)));
    }
    let not_zeroed: Vec<CoilId> = states
        .iter()
        .filter(|s| !s.zeroed)
        .map(|s| s.coil)
        .collect();
    if !not_zeroed.is_empty() {
        return Err(ControllerError::NotZeroed(not_zeroed));
    }
    Ok(())
}
