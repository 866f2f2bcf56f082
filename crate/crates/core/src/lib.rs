//! Control stack for a four-cable parallel robot.
//!
//! * [`kinematics`]: stateless geometry (cable lengths, forward kinematics,
//!   step conversion, coil trilateration, workspace membership).
//! * [`winchsim`]: deterministic simulator behind the [`winchsim::WinchDriver`]
//!   abstraction.
//! * [`controller`]: turns Cartesian and per-coil commands into step orders
//!   and keeps the pose estimate, calibration and saved positions.

pub mod controller;
pub mod kinematics;
pub mod winchsim;
