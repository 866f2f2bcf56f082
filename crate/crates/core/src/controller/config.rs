use serde::{Deserialize, Serialize};

use crate::kinematics::{AnchorSet, CableLengths, Point3, PositionSolution, WinchParams};
use crate::winchsim::{CoilId, FaultKind, StatusColor, DEFAULT_JOG_SPEED};

use super::ControllerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SavedPosition {
    pub id: u64,
    pub label: String,
    pub position: Point3,
}

/// Everything the controller needs to know about the rig.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RobotConfig {
    pub anchors: AnchorSet,
    /// One entry per coil, index-aligned with `anchors`.
    pub winch_params: Vec<WinchParams>,
    pub saved_positions: Vec<SavedPosition>,
    /// Distance moved by one per-axis jog, cm.
    pub jog_axis_step: f64,
    /// Steps executed by one per-coil wind/unwind click.
    pub half_turn_steps: i64,
    /// Speed of calibration jogs, steps per second.
    pub jog_speed: f64,
}

impl Default for RobotConfig {
    /// A 120 cm square of coils 150 cm above the floor. With the 100 cm home
    /// mark on every cable the platform then hangs about 53 cm under the
    /// center of the square.
    fn default() -> Self {
        let params = WinchParams::default();
        RobotConfig {
            anchors: AnchorSet::square(120.0, 150.0),
            winch_params: vec![params; 4],
            saved_positions: Vec::new(),
            jog_axis_step: 5.0,
            half_turn_steps: params.half_turn_steps(),
            jog_speed: DEFAULT_JOG_SPEED,
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let invalid = |msg: String| Err(ControllerError::InvalidConfig(msg));
        if self.winch_params.len() != self.anchors.len() {
            return invalid(format!(
                "{} winch parameter sets for {} anchors",
                self.winch_params.len(),
                self.anchors.len()
            ));
        }
        for (i, p) in self.winch_params.iter().enumerate() {
            if let Err(e) = p.validate() {
                return invalid(format!("coil {}: {e}", CoilId(i)));
            }
        }
        for (i, s) in self.saved_positions.iter().enumerate() {
            if self.saved_positions[..i].iter().any(|o| o.id == s.id) {
                return invalid(format!("duplicate saved position id {}", s.id));
            }
            if !s.position.is_finite() {
                return invalid(format!("saved position {} is not finite", s.id));
            }
        }
        if !(self.jog_axis_step.is_finite() && self.jog_axis_step > 0.0) {
            return invalid("jogAxisStep must be positive".into());
        }
        if self.half_turn_steps <= 0 {
            return invalid("halfTurnSteps must be positive".into());
        }
        if !(self.jog_speed.is_finite() && self.jog_speed > 0.0) {
            return invalid("jogSpeed must be positive".into());
        }
        Ok(())
    }

    pub fn saved_position(&self, id: u64) -> Option<&SavedPosition> {
        self.saved_positions.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoilStatus {
    pub coil: CoilId,
    pub color: StatusColor,
    pub zeroed: bool,
    pub fault: Option<FaultKind>,
    pub jogging: bool,
    pub step_count: i64,
}

/// Payload of every status poll.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RobotStatus {
    /// Dead-reckoned from the step counters, clamped at zero.
    pub lengths: CableLengths,
    pub position: PositionSolution,
    pub coils: Vec<CoilStatus>,
    pub all_zeroed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl Axis {
    pub fn unit(self) -> Point3 {
        match self {
            Axis::X => Point3::new(1.0, 0.0, 0.0),
            Axis::Y => Point3::new(0.0, 1.0, 0.0),
            Axis::Z => Point3::new(0.0, 0.0, 1.0),
        }
    }
}
