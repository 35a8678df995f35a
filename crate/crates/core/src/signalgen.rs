//! Probing and validation signals.
//!
//! The probing signal is a logarithmic square chirp whose two levels walk
//! up the voltage range one partition at a time. Each partition gets a
//! fresh sweep from `f0` to `f1` lasting the dwell time, so a run with
//! `n` partitions lasts `n * dwell` seconds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency sweep of one partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpSpec {
    /// Start frequency, Hz.
    pub f0: f64,
    /// End frequency, Hz.
    pub f1: f64,
    /// Sweep duration, s. Equals the per-partition dwell time.
    pub duration: f64,
    /// Starting phase, rad.
    pub phase0: f64,
    /// Samples per second.
    pub sample_rate: f64,
}

impl Default for ChirpSpec {
    fn default() -> Self {
        Self {
            f0: 1.0,
            f1: 32.0,
            duration: 6.0,
            phase0: 0.0,
            sample_rate: 1000.0,
        }
    }
}

impl ChirpSpec {
    pub fn new(f0: f64, f1: f64, duration: f64, phase0: f64, sample_rate: f64) -> Result<Self> {
        let spec = Self {
            f0,
            f1,
            duration,
            phase0,
            sample_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.f0,
            self.f1,
            self.duration,
            self.phase0,
            self.sample_rate,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("chirp spec"));
        }
        if self.f0 <= 0.0 || self.f1 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "chirp frequencies must be positive (f0 = {}, f1 = {})",
                self.f0, self.f1
            )));
        }
        if self.duration <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "chirp duration must be positive, got {}",
                self.duration
            )));
        }
        let nyquist = 2.0 * self.f0.max(self.f1);
        if self.sample_rate <= nyquist {
            return Err(Error::InvalidArgument(format!(
                "sample rate {} Hz does not exceed Nyquist rate {} Hz",
                self.sample_rate, nyquist
            )));
        }
        Ok(())
    }

    /// Number of samples in one sweep. The dwell must be a whole number of samples.
    pub fn samples_per_sweep(&self) -> Result<usize> {
        let exact = self.duration * self.sample_rate;
        let rounded = exact.round();
        if (exact - rounded).abs() > 1e-6 || rounded < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "dwell {} s is not a whole number of samples at {} Hz",
                self.duration, self.sample_rate
            )));
        }
        Ok(rounded as usize)
    }

    /// Instantaneous phase `phase0 + 2*pi * integral_0^t f(tau) dtau`, in closed form.
    pub fn phase(&self, t: f64) -> f64 {
        let ratio = self.f1 / self.f0;
        let cycles = if (ratio - 1.0).abs() < 1e-12 {
            self.f0 * t
        } else {
            let ln_r = ratio.ln();
            self.f0 * self.duration * ((ln_r * t / self.duration).exp() - 1.0) / ln_r
        };
        self.phase0 + 2.0 * PI * cycles
    }
}

/// Amplitude partitioning of the voltage range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub v_low: f64,
    pub v_max: f64,
    pub n_partitions: usize,
    /// Time spent in each partition, s.
    pub dwell_time: f64,
}

impl PartitionPlan {
    pub fn new(v_low: f64, v_max: f64, n_partitions: usize, dwell_time: f64) -> Result<Self> {
        let plan = Self {
            v_low,
            v_max,
            n_partitions,
            dwell_time,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_low.is_finite() && self.v_max.is_finite() && self.dwell_time.is_finite()) {
            return Err(Error::NonFinite("partition plan"));
        }
        if self.v_low >= self.v_max {
            return Err(Error::InvalidArgument(format!(
                "v_low {} must be below v_max {}",
                self.v_low, self.v_max
            )));
        }
        if self.n_partitions == 0 {
            return Err(Error::InvalidArgument("need at least one partition".into()));
        }
        if self.dwell_time <= 0.0 {
            return Err(Error::InvalidArgument("dwell time must be positive".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.v_max - self.v_low) / self.n_partitions as f64
    }

    pub fn run_time(&self) -> f64 {
        self.dwell_time * self.n_partitions as f64
    }

    /// Voltage levels of partition `k`. Adjacent partitions share their
    /// endpoint bit-for-bit and the last one ends exactly at `v_max`.
    pub fn bounds_of(&self, k: usize) -> (f64, f64) {
        let dv = self.step();
        let mut v1 = self.v_low + k as f64 * dv;
        let mut v2 = if k + 1 >= self.n_partitions {
            self.v_max
        } else {
            self.v_low + (k + 1) as f64 * dv
        };
        if v2 > self.v_max {
            v1 = self.v_max - dv;
            v2 = self.v_max;
        }
        (v1, v2)
    }

    /// All partition edges, `n_partitions + 1` values from `v_low` to `v_max`.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = (0..self.n_partitions)
            .map(|k| self.bounds_of(k).0)
            .collect();
        edges.push(self.v_max);
        edges
    }
}

/// Uniformly sampled time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    t0: f64,
    sample_rate: f64,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(t0: f64, sample_rate: f64, values: Vec<f64>) -> Result<Self> {
        if !(t0.is_finite() && sample_rate.is_finite()) || sample_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bad time base (t0 = {t0}, rate = {sample_rate})"
            )));
        }
        Ok(Self {
            t0,
            sample_rate,
            values,
        })
    }

    pub fn constant(value: f64, len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(0.0, sample_rate, vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.time(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate
    }
}

/// Logarithmic sweep `f0 * (f1/f0)^(t/T)`.
pub fn chirp_frequency(t: f64, spec: &ChirpSpec) -> Result<f64> {
    if !(0.0..=spec.duration).contains(&t) {
        return Err(Error::OutOfDomain {
            what: "t",
            value: t,
            lo: 0.0,
            hi: spec.duration,
        });
    }
    if t == spec.duration {
        return Ok(spec.f1);
    }
    Ok(spec.f0 * (spec.f1 / spec.f0).powf(t / spec.duration))
}

/// Two-level square chirp: `v2` while the cosine of the integrated phase is
/// non-negative, `v1` otherwise.
pub fn square_chirp_sample(t: f64, spec: &ChirpSpec, v1: f64, v2: f64) -> Result<f64> {
    if v1 >= v2 {
        return Err(Error::InvalidArgument(format!(
            "square chirp levels must satisfy v1 < v2 (got {v1}, {v2})"
        )));
    }
    if !(0.0..=spec.duration).contains(&t) {
        return Err(Error::OutOfDomain {
            what: "t",
            value: t,
            lo: 0.0,
            hi: spec.duration,
        });
    }
    Ok(square_level(spec.phase(t), v1, v2))
}

#[inline]
fn square_level(phase: f64, v1: f64, v2: f64) -> f64 {
    if phase.cos() >= 0.0 {
        v2
    } else {
        v1
    }
}

/// Levels `(v1, v2)` active at time `t` of the run.
pub fn partition_bounds(t: f64, plan: &PartitionPlan) -> Result<(f64, f64)> {
    let run = plan.run_time();
    if !(0.0..run).contains(&t) {
        return Err(Error::OutOfDomain {
            what: "t",
            value: t,
            lo: 0.0,
            hi: run,
        });
    }
    let k = ((t / plan.dwell_time).floor() as usize).min(plan.n_partitions - 1);
    Ok(plan.bounds_of(k))
}

pub fn generate_probing_signal(plan: &PartitionPlan, spec: &ChirpSpec) -> Result<Signal> {
    plan.validate()?;
    spec.validate()?;
    if (plan.dwell_time - spec.duration).abs() > 1e-9 * plan.dwell_time {
        return Err(Error::InvalidArgument(format!(
            "dwell time {} s differs from sweep duration {} s",
            plan.dwell_time, spec.duration
        )));
    }
    let per_sweep = spec.samples_per_sweep()?;
    let mut values = Vec::with_capacity(per_sweep * plan.n_partitions);
    for k in 0..plan.n_partitions {
        let (v1, v2) = plan.bounds_of(k);
        for i in 0..per_sweep {
            let local_t = i as f64 / spec.sample_rate;
            values.push(square_level(spec.phase(local_t), v1, v2));
        }
    }
    Signal::new(0.0, spec.sample_rate, values)
}

/// Piecewise-constant signal visiting `(level, seconds)` pairs in order.
pub fn generate_step_signal(levels: &[(f64, f64)], sample_rate: f64) -> Result<Signal> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("step signal needs levels".into()));
    }
    if levels.len() < 2 {
        return Err(Error::InvalidArgument(
            "step signal needs at least two levels".into(),
        ));
    }
    let mut values = Vec::new();
    for &(level, seconds) in levels {
        if !(level.is_finite() && seconds.is_finite()) || seconds <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bad step level ({level}, {seconds} s)"
            )));
        }
        let n = (seconds * sample_rate).round() as usize;
        values.extend(std::iter::repeat_n(level, n));
    }
    Signal::new(0.0, sample_rate, values)
}
