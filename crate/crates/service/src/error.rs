//! The closed list of error codes returned by the API.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cablebot_core::controller::ControllerError;
use cablebot_core::kinematics::KinematicsError;
use cablebot_core::winchsim::WinchError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Another movement holds the lock.
    Busy,
    /// A Cartesian move was requested before every coil was zeroed.
    NotZeroed,
    /// A coil reported a fault; the body says how many steps were applied.
    Faulted,
    /// A Cartesian move was requested while a calibration jog is running.
    CoilJogging,
    AlreadyJogging,
    NotJogging,
    NothingToCommit,
    OutOfWorkspace,
    /// An order would drive a cable below zero length.
    RangeError,
    StepCapExceeded,
    NotConverged,
    InconsistentDistances,
    DegenerateGeometry,
    InvalidConfig,
    UnknownId,
    UnknownCoil,
    BadRequest,
    PersistenceFailed,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 19] = [
        ErrorCode::Busy,
        ErrorCode::NotZeroed,
        ErrorCode::Faulted,
        ErrorCode::CoilJogging,
        ErrorCode::AlreadyJogging,
        ErrorCode::NotJogging,
        ErrorCode::NothingToCommit,
        ErrorCode::OutOfWorkspace,
        ErrorCode::RangeError,
        ErrorCode::StepCapExceeded,
        ErrorCode::NotConverged,
        ErrorCode::InconsistentDistances,
        ErrorCode::DegenerateGeometry,
        ErrorCode::InvalidConfig,
        ErrorCode::UnknownId,
        ErrorCode::UnknownCoil,
        ErrorCode::BadRequest,
        ErrorCode::PersistenceFailed,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Busy => "busy",
            ErrorCode::NotZeroed => "not_zeroed",
            ErrorCode::Faulted => "faulted",
            ErrorCode::CoilJogging => "coil_jogging",
            ErrorCode::AlreadyJogging => "already_jogging",
            ErrorCode::NotJogging => "not_jogging",
            ErrorCode::NothingToCommit => "nothing_to_commit",
            ErrorCode::OutOfWorkspace => "out_of_workspace",
            ErrorCode::RangeError => "range_error",
            ErrorCode::StepCapExceeded => "step_cap_exceeded",
            ErrorCode::NotConverged => "not_converged",
            ErrorCode::InconsistentDistances => "inconsistent_distances",
            ErrorCode::DegenerateGeometry => "degenerate_geometry",
            ErrorCode::InvalidConfig => "invalid_config",
            ErrorCode::UnknownId => "unknown_id",
            ErrorCode::UnknownCoil => "unknown_coil",
            ErrorCode::BadRequest => "bad_request",
            ErrorCode::PersistenceFailed => "persistence_failed",
            ErrorCode::Internal => "internal",
        }
    }

    pub fn http_status(self) -> StatusCode {
        use ErrorCode::*;
        match self {
            Busy | NotZeroed | Faulted | CoilJogging | AlreadyJogging | NotJogging
            | NothingToCommit => StatusCode::CONFLICT,
            OutOfWorkspace
            | RangeError
            | StepCapExceeded
            | NotConverged
            | InconsistentDistances
            | DegenerateGeometry
            | InvalidConfig => StatusCode::UNPROCESSABLE_ENTITY,
            UnknownId | UnknownCoil => StatusCode::NOT_FOUND,
            BadRequest => StatusCode::BAD_REQUEST,
            PersistenceFailed | Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
        }
    }

    pub fn busy() -> Self {
        ApiError::new(ErrorCode::Busy, "another movement command is in progress")
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::BadRequest, message)
    }

    pub fn http_status(&self) -> StatusCode {
        self.code.http_status()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.http_status(), Json(self)).into_response()
    }
}

fn kinematics_code(e: &KinematicsError) -> ErrorCode {
    match e {
        KinematicsError::NotConverged { .. } => ErrorCode::NotConverged,
        KinematicsError::CapExceeded { .. } => ErrorCode::StepCapExceeded,
        KinematicsError::Inconsistent(_) => ErrorCode::InconsistentDistances,
        KinematicsError::Degenerate(_)
        | KinematicsError::SingularGeometry
        | KinematicsError::CoincidentAnchors { .. }
        | KinematicsError::TooFewAnchors { .. } => ErrorCode::DegenerateGeometry,
        KinematicsError::InvalidParams(_) => ErrorCode::InvalidConfig,
        KinematicsError::NonFinite
        | KinematicsError::LengthCountMismatch { .. }
        | KinematicsError::NegativeLength { .. } => ErrorCode::BadRequest,
    }
}

fn winch_code(e: &WinchError) -> ErrorCode {
    match e {
        WinchError::UnknownCoil(_) => ErrorCode::UnknownCoil,
        WinchError::Faulted { .. } => ErrorCode::Faulted,
        WinchError::Busy(_) => ErrorCode::CoilJogging,
        WinchError::AlreadyJogging(_) => ErrorCode::AlreadyJogging,
        WinchError::NotJogging(_) => ErrorCode::NotJogging,
        WinchError::Range { .. } => ErrorCode::RangeError,
        WinchError::InvalidSpeed => ErrorCode::InvalidConfig,
    }
}

pub fn controller_code(e: &ControllerError) -> ErrorCode {
    match e {
        ControllerError::Busy => ErrorCode::Busy,
        ControllerError::NotZeroed(_) => ErrorCode::NotZeroed,
        ControllerError::Faulted { .. } => ErrorCode::Faulted,
        ControllerError::OutOfWorkspace(_) => ErrorCode::OutOfWorkspace,
        ControllerError::Range { .. } => ErrorCode::RangeError,
        ControllerError::UnknownId(_) => ErrorCode::UnknownId,
        ControllerError::NothingToCommit => ErrorCode::NothingToCommit,
        ControllerError::UnknownCoil(_) => ErrorCode::UnknownCoil,
        ControllerError::Kinematics(k) => kinematics_code(k),
        ControllerError::Winch(w) => winch_code(w),
        ControllerError::InvalidConfig(_) => ErrorCode::InvalidConfig,
        ControllerError::Persistence(_) => ErrorCode::PersistenceFailed,
    }
}

impl From<ControllerError> for ApiError {
    fn from(e: ControllerError) -> Self {
        ApiError::new(controller_code(&e), e.to_string())
    }
}

impl From<WinchError> for ApiError {
    fn from(e: WinchError) -> Self {
        ApiError::new(winch_code(&e), e.to_string())
    }
}
