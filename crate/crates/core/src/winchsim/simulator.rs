use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, FairMutex, Mutex};

use super::{
    ClockMode, CoilId, Direction, FaultKind, JogState, SimClock, StatusColor, WinchDriver,
    WinchError, WinchState,
};
use crate::kinematics::{length_for_steps, StepOrder, WinchParams};

/// Jog speed used when the caller has no preference: 50 steps/s, about
/// 1.75 cm/s with the default drum.
pub const DEFAULT_JOG_SPEED: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorConfig {
    pub params: Vec<WinchParams>,
    /// Motor speed for discrete orders, in steps per second. `None` applies
    /// orders instantly. Only honored with a realtime clock.
    pub rate: Option<f64>,
}

impl SimulatorConfig {
    pub fn new(params: Vec<WinchParams>) -> Self {
        SimulatorConfig { params, rate: None }
    }

    pub fn with_rate(mut self, rate: Option<f64>) -> Self {
        self.rate = rate;
        self
    }
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig::new(vec![WinchParams::default(); 4])
    }
}

#[derive(Debug, Clone)]
struct Coil {
    committed: i64,
    zeroed: bool,
    fault: Option<FaultKind>,
    jog: Option<Jog>,
    params: WinchParams,
}

#[derive(Debug, Clone, Copy)]
struct Jog {
    direction: Direction,
    speed: f64,
    started_at: Duration,
}

impl Jog {
    fn accrued(&self, now: Duration) -> i64 {
        let elapsed = now.saturating_sub(self.started_at).as_secs_f64();
        // The epsilon keeps exact products such as 100 × 2.0 from landing
        // one ulp short of the integer.
        self.direction.sign() * (self.speed * elapsed + 1e-9).floor() as i64
    }
}

/// Deterministic stand-in for the motor boards.
///
/// Mutating calls queue on a fair (FIFO) executor lock. Coil state lives
/// behind a separate short-lived lock, so snapshots never wait for a
/// rate-limited movement to finish.
pub struct SimulatedWinches {
    clock: Arc<SimClock>,
    rate: Option<f64>,
    executor: FairMutex<()>,
    coils: Mutex<Vec<Coil>>,
    fault_raised: Condvar,
}

impl SimulatedWinches {
    pub fn new(config: SimulatorConfig, clock: Arc<SimClock>) -> Self {
        let coils = config
            .params
            .into_iter()
            .map(|params| Coil {
                committed: 0,
                zeroed: false,
                fault: None,
                jog: None,
                params,
            })
            .collect();
        SimulatedWinches {
            clock,
            rate: config.rate.filter(|r| r.is_finite() && *r > 0.0),
            executor: FairMutex::new(()),
            coils: Mutex::new(coils),
            fault_raised: Condvar::new(),
        }
    }

    pub fn clock(&self) -> &Arc<SimClock> {
        &self.clock
    }

    /// Test hook: the coil stops answering. A running jog is frozen at its
    /// current accrual and an in-flight movement on this coil fails.
    pub fn inject_fault(&self, coil: CoilId, kind: FaultKind) -> Result<(), WinchError> {
        let now = self.clock.now();
        let mut coils = self.coils.lock();
        let c = coils.get_mut(coil.0).ok_or(WinchError::UnknownCoil(coil))?;
        if let Some(jog) = c.jog.take() {
            c.committed += jog.accrued(now);
        }
        c.fault = Some(kind);
        self.fault_raised.notify_all();
        tracing::info!(%coil, ?kind, "fault injected");
        Ok(())
    }

    pub fn clear_fault(&self, coil: CoilId) -> Result<(), WinchError> {
        let mut coils = self.coils.lock();
        let c = coils.get_mut(coil.0).ok_or(WinchError::UnknownCoil(coil))?;
        c.fault = None;
        Ok(())
    }

    fn snapshot(&self, index: usize, c: &Coil, now: Duration) -> WinchState {
        WinchState {
            coil: CoilId(index),
            step_count: c.committed + c.jog.map_or(0, |j| j.accrued(now)),
            zeroed: c.zeroed,
            fault: c.fault,
            jog: c.jog.map(|j| JogState {
                direction: j.direction,
                speed: j.speed,
                started_at: j.started_at.as_secs_f64(),
            }),
        }
    }

    fn movement_duration(&self, orders: &[(CoilId, StepOrder)]) -> Option<Duration> {
        let rate = self.rate?;
        if self.clock.mode() != ClockMode::Realtime {
            return None;
        }
        let longest = orders.iter().map(|(_, o)| o.0.unsigned_abs()).max()?;
        (longest > 0).then(|| Duration::from_secs_f64(longest as f64 / rate))
    }
}

fn usable(coils: &mut [Coil], coil: CoilId) -> Result<&mut Coil, WinchError> {
    let c = coils.get_mut(coil.0).ok_or(WinchError::UnknownCoil(coil))?;
    if let Some(kind) = c.fault {
        return Err(WinchError::Faulted {
            coil,
            kind,
            applied: 0,
        });
    }
    Ok(c)
}

impl WinchDriver for SimulatedWinches {
    fn coil_count(&self) -> usize {
        self.coils.lock().len()
    }

    fn execute_orders(&self, orders: &[(CoilId, StepOrder)]) -> Result<Vec<i64>, WinchError> {
        let _turn = self.executor.lock();
        let mut coils = self.coils.lock();

        let mut targets: Vec<i64> = coils.iter().map(|c| c.committed).collect();
        for &(coil, order) in orders {
            let c = usable(&mut coils, coil)?;
            if c.jog.is_some() {
                return Err(WinchError::Busy(coil));
            }
            targets[coil.0] += order.0;
        }
        for &(coil, _) in orders {
            if length_for_steps(targets[coil.0], &coils[coil.0].params) < 0.0 {
                return Err(WinchError::Range {
                    coil,
                    steps: targets[coil.0],
                });
            }
        }

        if let Some(duration) = self.movement_duration(orders) {
            let deadline = Instant::now() + duration;
            loop {
                if let Some((coil, kind)) = orders
                    .iter()
                    .find_map(|&(coil, _)| coils[coil.0].fault.map(|k| (coil, k)))
                {
                    return Err(WinchError::Faulted {
                        coil,
                        kind,
                        applied: 0,
                    });
                }
                if Instant::now() >= deadline {
                    break;
                }
                self.fault_raised.wait_until(&mut coils, deadline);
            }
        }

        for &(coil, _) in orders {
            coils[coil.0].committed = targets[coil.0];
        }
        Ok(orders.iter().map(|(coil, _)| targets[coil.0]).collect())
    }

    fn start_jog(&self, coil: CoilId, direction: Direction, speed: f64) -> Result<(), WinchError> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(WinchError::InvalidSpeed);
        }
        let _turn = self.executor.lock();
        let now = self.clock.now();
        let mut coils = self.coils.lock();
        let c = usable(&mut coils, coil)?;
        if c.jog.is_some() {
            return Err(WinchError::AlreadyJogging(coil));
        }
        c.jog = Some(Jog {
            direction,
            speed,
            started_at: now,
        });
        Ok(())
    }

    fn stop_jog(&self, coil: CoilId) -> Result<i64, WinchError> {
        let _turn = self.executor.lock();
        let now = self.clock.now();
        let mut coils = self.coils.lock();
        let c = usable(&mut coils, coil)?;
        let jog = c.jog.take().ok_or(WinchError::NotJogging(coil))?;
        let accrued = jog.accrued(now);
        c.committed += accrued;
        Ok(accrued)
    }

    fn save_zero(&self, coil: CoilId) -> Result<(), WinchError> {
        let _turn = self.executor.lock();
        let mut coils = self.coils.lock();
        let c = usable(&mut coils, coil)?;
        if c.jog.is_some() {
            return Err(WinchError::Busy(coil));
        }
        c.committed = 0;
        c.zeroed = true;
        Ok(())
    }

    fn probe(&self, coil: CoilId) -> Result<StatusColor, WinchError> {
        self.state(coil).map(|s| s.color())
    }

    fn state(&self, coil: CoilId) -> Result<WinchState, WinchError> {
        let now = self.clock.now();
        let coils = self.coils.lock();
        let c = coils.get(coil.0).ok_or(WinchError::UnknownCoil(coil))?;
        Ok(self.snapshot(coil.0, c, now))
    }

    fn states(&self) -> Vec<WinchState> {
        let now = self.clock.now();
        let coils = self.coils.lock();
        coils
            .iter()
            .enumerate()
            .map(|(i, c)| self.snapshot(i, c, now))
            .collect()
    }

    fn set_params(&self, params: &[WinchParams]) {
        let mut coils = self.coils.lock();
        for (c, p) in coils.iter_mut().zip(params) {
            c.params = *p;
        }
    }
}
