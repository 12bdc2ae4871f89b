//! Latency-emulating backend.
//!
//! Predictions come from the reference map; latencies come from a
//! [`SimulatedLatency`] profile realized on a shared [`Pacer`]. The pacer keeps
//! a virtual schedule anchored at its start instant: each emulated stage adds
//! its scaled duration to the schedule and then waits until the schedule's
//! deadline on the monotonic clock. Real work done between stages therefore
//! counts against the modeled time instead of adding to it, and sleep jitter
//! never accumulates. A run only exceeds the model when real work outgrows it.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::reference::ReferenceWeights;
use super::{Backend, BackendKind, ClassifierError, Invocation, Tensor};

/// Per-stage latencies in model seconds (before time scaling).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulatedLatency {
    /// Realized once per backend load.
    pub load_s: f64,
    /// Fixed cost of an [`Invocation::Single`] call.
    pub single_call_s: f64,
    /// Fixed cost of an [`Invocation::Batch`] call.
    pub batch_call_s: f64,
    /// Fixed cost of an [`Invocation::Activity`] call.
    pub activity_s: f64,
    /// Cost per image in any call.
    pub infer_s: f64,
}

impl SimulatedLatency {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("load_s", self.load_s),
            ("single_call_s", self.single_call_s),
            ("batch_call_s", self.batch_call_s),
            ("activity_s", self.activity_s),
            ("infer_s", self.infer_s),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        Ok(())
    }

    pub fn call_s(&self, invocation: Invocation, images: usize) -> f64 {
        let fixed = match invocation {
            Invocation::Single => self.single_call_s,
            Invocation::Batch => self.batch_call_s,
            Invocation::Activity => self.activity_s,
        };
        fixed + images as f64 * self.infer_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayStrategy {
    #[default]
    Sleep,
    BusyWait,
}

#[derive(Debug)]
struct PacerState {
    origin: Instant,
    planned: Duration,
}

/// Shared virtual clock for emulated latencies.
#[derive(Debug)]
pub struct Pacer {
    time_scale: f64,
    strategy: DelayStrategy,
    state: Mutex<PacerState>,
}

impl Pacer {
    pub fn new(time_scale: f64, strategy: DelayStrategy) -> Self {
        Self {
            time_scale,
            strategy,
            state: Mutex::new(PacerState {
                origin: Instant::now(),
                planned: Duration::ZERO,
            }),
        }
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// Re-anchor the schedule at `origin` and clear it.
    pub fn restart(&self, origin: Instant) {
        let mut st = self.state.lock().unwrap();
        st.origin = origin;
        st.planned = Duration::ZERO;
    }

    /// Total scheduled time so far, in scaled (wall) seconds.
    pub fn planned(&self) -> Duration {
        self.state.lock().unwrap().planned
    }

    /// Extend the schedule by `model_s · time_scale` and wait for its deadline.
    pub fn advance(&self, model_s: f64) {
        let deadline = {
            let mut st = self.state.lock().unwrap();
            st.planned += Duration::from_secs_f64((model_s * self.time_scale).max(0.0));
            st.origin + st.planned
        };
        wait_until(deadline, self.strategy);
    }
}

fn wait_until(deadline: Instant, strategy: DelayStrategy) {
    match strategy {
        DelayStrategy::Sleep => {
            let now = Instant::now();
            if deadline > now {
                std::thread::sleep(deadline - now);
            }
        }
        DelayStrategy::BusyWait => {
            while Instant::now() < deadline {
                std::hint::spin_loop();
            }
        }
    }
}

/// Everything needed to load a [`SimulatedBackend`].
#[derive(Debug, Clone)]
pub struct SimulatedSpec {
    pub latency: SimulatedLatency,
    pub pacer: Arc<Pacer>,
}

pub struct SimulatedBackend {
    weights: Arc<ReferenceWeights>,
    latency: SimulatedLatency,
    pacer: Arc<Pacer>,
}

impl SimulatedBackend {
    pub fn load(spec: &SimulatedSpec, weights: Arc<ReferenceWeights>) -> Result<Self, ClassifierError> {
        spec.latency.validate().map_err(ClassifierError::LoadFailure)?;
        if !(spec.pacer.time_scale() >= 0.0) || !spec.pacer.time_scale().is_finite() {
            return Err(ClassifierError::LoadFailure(format!(
                "time scale must be non-negative, got {}",
                spec.pacer.time_scale()
            )));
        }
        spec.pacer.advance(spec.latency.load_s);
        Ok(Self {
            weights,
            latency: spec.latency,
            pacer: spec.pacer.clone(),
        })
    }
}

impl Backend for SimulatedBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Simulated
    }

    fn predict(&self, batch: &[Tensor], invocation: Invocation) -> Result<Vec<Vec<f64>>, String> {
        let out = batch.iter().map(|t| self.weights.probabilities(t)).collect();
        self.pacer.advance(self.latency.call_s(invocation, batch.len()));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_accumulates_without_drift() {
        let pacer = Pacer::new(0.001, DelayStrategy::Sleep);
        let start = Instant::now();
        pacer.restart(start);
        for _ in 0..20 {
            pacer.advance(1.0);
        }
        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed >= 0.020, "{elapsed}");
        assert!(elapsed < 0.030, "{elapsed}");
        assert!((pacer.planned().as_secs_f64() - 0.020).abs() < 1e-9);
    }

    #[test]
    fn busy_wait_reaches_deadline() {
        let pacer = Pacer::new(1.0, DelayStrategy::BusyWait);
        let start = Instant::now();
        pacer.restart(start);
        pacer.advance(0.002);
        assert!(start.elapsed() >= Duration::from_millis(2));
    }

    #[test]
    fn call_cost_by_invocation() {
        let l = SimulatedLatency {
            load_s: 0.4,
            single_call_s: 0.2,
            batch_call_s: 0.01,
            activity_s: 2.0,
            infer_s: 0.05,
        };
        assert!((l.call_s(Invocation::Batch, 31) - 1.56).abs() < 1e-12);
        assert!((l.call_s(Invocation::Single, 1) - 0.25).abs() < 1e-12);
        assert!((l.call_s(Invocation::Activity, 1) - 2.05).abs() < 1e-12);
        assert!(SimulatedLatency { infer_s: -1.0, ..l }.validate().is_err());
    }
}
