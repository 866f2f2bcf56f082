//! Stepper-driven coiling systems behind the [`WinchDriver`] abstraction.
//!
//! The controller only ever talks to a `WinchDriver`. [`SimulatedWinches`] is
//! the deterministic implementation used in place of real motor boards.

mod clock;
mod simulator;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{coil_label, StepOrder, WinchParams};

pub use clock::{ClockMode, SimClock};
pub use simulator::{SimulatedWinches, SimulatorConfig, DEFAULT_JOG_SPEED};

/// Index of a coil; displayed and parsed as a letter (`A`, `B`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoilId(pub usize);

impl CoilId {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn label(self) -> char {
        coil_label(self.0)
    }
}

impl fmt::Display for CoilId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid coil name {0:?}")]
pub struct ParseCoilError(String);

impl FromStr for CoilId {
    type Err = ParseCoilError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_alphabetic() => {
                Ok(CoilId((c.to_ascii_uppercase() as u8 - b'A') as usize))
            }
            _ => Err(ParseCoilError(s.to_string())),
        }
    }
}

impl Serialize for CoilId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CoilId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// The motor board cannot be found.
    NotDetected,
    /// The board is present but does not answer.
    CommFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Shorten the cable (negative steps).
    Wind,
    /// Lengthen the cable (positive steps).
    Unwind,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Wind => -1,
            Direction::Unwind => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusColor {
    Green,
    Orange,
    Red,
}

impl StatusColor {
    pub fn of(zeroed: bool, fault: Option<FaultKind>) -> Self {
        match (fault, zeroed) {
            (Some(_), _) => StatusColor::Red,
            (None, false) => StatusColor::Orange,
            (None, true) => StatusColor::Green,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JogState {
    pub direction: Direction,
    /// Steps per second.
    pub speed: f64,
    /// Clock reading when the jog started, in seconds.
    pub started_at: f64,
}

/// Snapshot of one coil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WinchState {
    pub coil: CoilId,
    /// Signed steps from home, including the accrual of a running jog.
    pub step_count: i64,
    pub zeroed: bool,
    pub fault: Option<FaultKind>,
    pub jog: Option<JogState>,
}

impl WinchState {
    pub fn color(&self) -> StatusColor {
        StatusColor::of(self.zeroed, self.fault)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WinchError {
    #[error("no coil {0}")]
    UnknownCoil(CoilId),
    #[error("coil {coil} is faulted ({kind:?}); {applied} steps applied")]
    Faulted {
        coil: CoilId,
        kind: FaultKind,
        applied: i64,
    },
    #[error("coil {0} is jogging")]
    Busy(CoilId),
    #[error("coil {0} is already jogging")]
    AlreadyJogging(CoilId),
    #[error("coil {0} is not jogging")]
    NotJogging(CoilId),
    #[error(
        "order would drive the cable of coil {coil} to a negative length ({steps} steps from home)"
    )]
    Range { coil: CoilId, steps: i64 },
    #[error("jog speed must be positive and finite")]
    InvalidSpeed,
}

/// Capability set of a set of stepper-driven coils.
///
/// Mutating calls are serialized by the implementation; snapshot reads never
/// wait for a movement in flight.
pub trait WinchDriver: Send + Sync {
    fn coil_count(&self) -> usize;

    /// Applies all orders as one atomic movement: either every coil moves or
    /// none does. Returns the new step counts, in order.
    fn execute_orders(&self, orders: &[(CoilId, StepOrder)]) -> Result<Vec<i64>, WinchError>;

    fn execute_steps(&self, coil: CoilId, order: StepOrder) -> Result<i64, WinchError> {
        self.execute_orders(&[(coil, order)])
            .map(|counts| counts[0])
    }

    fn start_jog(&self, coil: CoilId, direction: Direction, speed: f64) -> Result<(), WinchError>;

    /// Ends a jog and returns the signed steps it accrued.
    fn stop_jog(&self, coil: CoilId) -> Result<i64, WinchError>;

    /// Declares the current position to be home.
    fn save_zero(&self, coil: CoilId) -> Result<(), WinchError>;

    fn probe(&self, coil: CoilId) -> Result<StatusColor, WinchError>;

    fn state(&self, coil: CoilId) -> Result<WinchState, WinchError>;

    fn states(&self) -> Vec<WinchState>;

    /// Updates the drum geometry used to reject orders that would need a
    /// negative cable length.
    fn set_params(&self, params: &[WinchParams]);
}
