//! Conversion between cable lengths and stepper motor step counts.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::KinematicsError;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

/// Drum geometry and home length of one coiling system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WinchParams {
    /// Unwound cable length at the home position, in cm.
    pub home_length: f64,
    /// Drum radius in cm.
    pub drum_radius: f64,
    pub steps_per_turn: u32,
    /// Largest step order accepted for a single command.
    #[serde(default = "default_step_cap")]
    pub step_cap: u64,
}

fn default_step_cap() -> u64 {
    DEFAULT_STEP_CAP
}

impl Default for WinchParams {
    /// 100 cm home mark, 200 full steps per turn, and a drum whose half-turn
    /// coils 3.5 cm of cable.
    fn default() -> Self {
        WinchParams {
            home_length: 100.0,
            drum_radius: 3.5 / PI,
            steps_per_turn: 200,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

impl WinchParams {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.home_length.is_finite() && self.home_length > 0.0) {
            return Err(KinematicsError::InvalidParams(
                "home length must be positive",
            ));
        }
        if !(self.drum_radius.is_finite() && self.drum_radius > 0.0) {
            return Err(KinematicsError::InvalidParams(
                "drum radius must be positive",
            ));
        }
        if self.steps_per_turn == 0 {
            return Err(KinematicsError::InvalidParams(
                "steps per turn must be at least 1",
            ));
        }
        Ok(())
    }

    /// Cable length coiled by one full drum turn, `2πr`.
    pub fn turn_length(&self) -> f64 {
        2.0 * PI * self.drum_radius
    }

    /// Cable length per motor step.
    pub fn step_length(&self) -> f64 {
        self.turn_length() / self.steps_per_turn as f64
    }

    /// Worst-case length error of a rounded step order, `πr / N`.
    pub fn quantization_bound(&self) -> f64 {
        PI * self.drum_radius / self.steps_per_turn as f64
    }

    pub fn half_turn_steps(&self) -> i64 {
        (self.steps_per_turn / 2) as i64
    }
}

/// Signed step order; positive unwinds (lengthens) the cable.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct StepOrder(pub i64);

impl StepOrder {
    pub const ZERO: StepOrder = StepOrder(0);

    pub fn steps(self) -> i64 {
        self.0
    }
}

/// Motor order taking a cable from `current_length` to `target_length`:
/// `(target − current) / (2πr) · N`, rounded half away from zero.
pub fn steps_for_length(
    target_length: f64,
    current_length: f64,
    params: &WinchParams,
) -> Result<StepOrder, KinematicsError> {
    if !target_length.is_finite() || !current_length.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    if target_length < 0.0 {
        return Err(KinematicsError::NegativeLength {
            index: 0,
            value: target_length,
        });
    }
    let exact =
        (target_length - current_length) / params.turn_length() * params.steps_per_turn as f64;
    // f64::round rounds half away from zero.
    let rounded = exact.round();
    if rounded.abs() > params.step_cap as f64 {
        return Err(KinematicsError::CapExceeded {
            steps: rounded.clamp(i64::MIN as f64, i64::MAX as f64) as i64,
            cap: params.step_cap,
        });
    }
    Ok(StepOrder(rounded as i64))
}

/// Cable length after `step_count` steps from home: `l₀ + steps · 2πr / N`.
pub fn length_for_steps(step_count: i64, params: &WinchParams) -> f64 {
    params.home_length + step_count as f64 * params.step_length()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_zero_steps() {
        let p = WinchParams::default();
        assert_eq!(steps_for_length(123.4, 123.4, &p).unwrap(), StepOrder(0));
    }

    #[test]
    fn half_and_full_turn() {
        let p = WinchParams::default();
        assert_eq!(steps_for_length(103.5, 100.0, &p).unwrap(), StepOrder(100));
        assert_eq!(steps_for_length(107.0, 100.0, &p).unwrap(), StepOrder(200));
        assert_eq!(steps_for_length(96.5, 100.0, &p).unwrap(), StepOrder(-100));
    }

    #[test]
    fn rounding_is_symmetric() {
        let p = WinchParams {
            home_length: 100.0,
            drum_radius: 1.0 / (2.0 * PI),
            steps_per_turn: 4,
            step_cap: DEFAULT_STEP_CAP,
        };
        // One step is 0.25 cm; 0.125 cm is exactly half a step.
        assert_eq!(steps_for_length(10.125, 10.0, &p).unwrap(), StepOrder(1));
        assert_eq!(steps_for_length(9.875, 10.0, &p).unwrap(), StepOrder(-1));
    }

    #[test]
    fn lengths_from_steps() {
        let p = WinchParams::default();
        assert_relative_eq!(length_for_steps(0, &p), 100.0);
        assert_relative_eq!(length_for_steps(100, &p), 103.5, epsilon = 1e-12);
        assert_relative_eq!(length_for_steps(-200, &p), 93.0, epsilon = 1e-12);
        assert_eq!(
            steps_for_length(length_for_steps(-200, &p), 100.0, &p).unwrap(),
            StepOrder(-200)
        );
    }

    #[test]
    fn cap_and_negative_target() {
        let p = WinchParams::default();
        assert!(matches!(
            steps_for_length(1.0e6, 0.0, &p),
            Err(KinematicsError::CapExceeded {
                cap: DEFAULT_STEP_CAP,
                ..
            })
        ));
        assert!(matches!(
            steps_for_length(-1.0, 0.0, &p),
            Err(KinematicsError::NegativeLength { .. })
        ));
    }

    #[test]
    fn param_validation() {
        assert!(WinchParams::default().validate().is_ok());
        let bad = WinchParams {
            steps_per_turn: 0,
            ..WinchParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = WinchParams {
            drum_radius: 0.0,
            ..WinchParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn default_quantization_bound() {
        let p = WinchParams::default();
        assert_relative_eq!(p.quantization_bound(), 0.0175, epsilon = 1e-12);
        assert_eq!(p.half_turn_steps(), 100);
    }
}
