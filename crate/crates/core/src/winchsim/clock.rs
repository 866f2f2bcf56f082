use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    Realtime,
    /// Time only moves through [`SimClock::advance`].
    Manual,
}

/// Monotonic time source for the simulator.
#[derive(Debug)]
pub struct SimClock {
    inner: Inner,
}

#[derive(Debug)]
enum Inner {
    Realtime(Instant),
    Manual(Mutex<Duration>),
}

impl SimClock {
    pub fn new(mode: ClockMode) -> Self {
        let inner = match mode {
            ClockMode::Realtime => Inner::Realtime(Instant::now()),
            ClockMode::Manual => Inner::Manual(Mutex::new(Duration::ZERO)),
        };
        SimClock { inner }
    }

    pub fn realtime() -> Self {
        Self::new(ClockMode::Realtime)
    }

    pub fn manual() -> Self {
        Self::new(ClockMode::Manual)
    }

    pub fn mode(&self) -> ClockMode {
        match self.inner {
            Inner::Realtime(_) => ClockMode::Realtime,
            Inner::Manual(_) => ClockMode::Manual,
        }
    }

    /// Time since the clock was created.
    pub fn now(&self) -> Duration {
        match &self.inner {
            Inner::Realtime(origin) => origin.elapsed(),
            Inner::Manual(now) => *now.lock(),
        }
    }

    /// Moves a manual clock forward. Has no effect on a realtime clock.
    pub fn advance(&self, by: Duration) {
        match &self.inner {
            Inner::Realtime(_) => tracing::debug!("advance() ignored on a realtime clock"),
            Inner::Manual(now) => *now.lock() += by,
        }
    }
}
