use num_complex::Complex64;

use super::FeederCase;
use crate::error::{Error, Result};

pub(crate) const SWEEP_TOL: f64 = 1e-8;
pub(crate) const MAX_SWEEPS: usize = 100;

/// Converged network state. Voltages are complex p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub secondary: Complex64,
    pub taps: Vec<Complex64>,
    pub houses: Vec<Complex64>,
    /// Complex power drawn from the regulated source, p.u.
    pub source_power: Complex64,
    /// Series losses, p.u.
    pub losses: Complex64,
    pub sweeps: usize,
}

impl NetworkSolution {
    pub fn house_magnitudes(&self) -> Vec<f64> {
        self.houses.iter().map(|v| v.norm()).collect()
    }
}

/// Precomputed ladder impedances for repeated solves.
#[derive(Debug, Clone)]
pub(crate) struct Ladder {
    source: Complex64,
    z_transformer: Option<Complex64>,
    z_span: Vec<Complex64>,
    z_drop: Vec<Complex64>,
    tap_of: Vec<usize>,
    s_base: f64,
    // scratch
    currents: Vec<Complex64>,
    tap_current: Vec<Complex64>,
    span_current: Vec<Complex64>,
    taps: Vec<Complex64>,
}

impl Ladder {
    pub(crate) fn new(case: &FeederCase) -> Result<Self> {
        case.validate()?;
        let n_taps = case.n_taps();
        Ok(Self {
            source: Complex64::new(case.source_voltage, 0.0),
            z_transformer: case.transformer_in_series.then(|| case.transformer_pu()),
            z_span: case.backbone.iter().map(|s| case.segment_pu(s)).collect(),
            z_drop: case
                .houses
                .iter()
                .map(|h| case.segment_pu(&h.drop))
                .collect(),
            tap_of: case.houses.iter().map(|h| h.tap).collect(),
            s_base: case.s_base,
            currents: vec![Complex64::new(0.0, 0.0); case.houses.len()],
            tap_current: vec![Complex64::new(0.0, 0.0); n_taps],
            span_current: vec![Complex64::new(0.0, 0.0); n_taps - 1],
            taps: vec![Complex64::new(0.0, 0.0); n_taps],
        })
    }

    pub(crate) fn flat_start(&self) -> Vec<Complex64> {
        vec![self.source; self.z_drop.len()]
    }

    /// Sweep until house voltages settle. `injections` are net injections
    /// into the grid in kW/kVAr; `v` holds the initial guess and receives
    /// the solution.
    pub(crate) fn solve(
        &mut self,
        injections: &[(f64, f64)],
        v: &mut [Complex64],
    ) -> Result<usize> {
        if injections.len() != v.len() || v.len() != self.z_drop.len() {
            return Err(Error::InvalidArgument(format!(
                "{} injections for {} houses",
                injections.len(),
                self.z_drop.len()
            )));
        }
        if injections
            .iter()
            .any(|(p, q)| !(p.is_finite() && q.is_finite()))
        {
            return Err(Error::NonFinite("network injections"));
        }
        let inv_base = 1.0 / self.s_base;
        let mut mismatch = f64::INFINITY;
        for sweep in 1..=MAX_SWEEPS {
            self.tap_current.fill(Complex64::new(0.0, 0.0));
            for (h, (&(p, q), vh)) in injections.iter().zip(v.iter()).enumerate() {
                let s = Complex64::new(p * inv_base, q * inv_base);
                let i = (s / vh).conj();
                self.currents[h] = i;
                self.tap_current[self.tap_of[h]] += i;
            }
            // backward: current flowing toward the source through each span
            let mut acc = Complex64::new(0.0, 0.0);
            for t in (1..self.taps.len()).rev() {
                acc += self.tap_current[t];
                self.span_current[t - 1] = acc;
            }
            let total = acc + self.tap_current[0];
            // forward
            let secondary = match self.z_transformer {
                Some(z) => self.source + z * total,
                None => self.source,
            };
            self.taps[0] = secondary;
            for t in 1..self.taps.len() {
                self.taps[t] = self.taps[t - 1] + self.z_span[t - 1] * self.span_current[t - 1];
            }
            mismatch = 0.0;
            for (h, vh) in v.iter_mut().enumerate() {
                let next = self.taps[self.tap_of[h]] + self.z_drop[h] * self.currents[h];
                mismatch = f64::max(mismatch, (next - *vh).norm());
                *vh = next;
            }
            if !mismatch.is_finite() {
                break;
            }
            if mismatch < SWEEP_TOL {
                return Ok(sweep);
            }
        }
        Err(Error::Divergence {
            iterations: MAX_SWEEPS,
            mismatch,
            time: None,
        })
    }

    pub(crate) fn secondary(&self) -> Complex64 {
        self.taps[0]
    }

    fn summary(&self, houses: &[Complex64], sweeps: usize) -> NetworkSolution {
        let mut losses = Complex64::new(0.0, 0.0);
        for (h, i) in self.currents.iter().enumerate() {
            losses += self.z_drop[h] * i.norm_sqr();
        }
        for (z, i) in self.z_span.iter().zip(&self.span_current) {
            losses += z * i.norm_sqr();
        }
        let total: Complex64 = self.tap_current.iter().sum();
        if let Some(z) = self.z_transformer {
            losses += z * total.norm_sqr();
        }
        NetworkSolution {
            secondary: self.taps[0],
            taps: self.taps.clone(),
            houses: houses.to_vec(),
            source_power: self.source * (-total).conj(),
            losses,
            sweeps,
        }
    }
}

/// Backward/forward sweep power flow for fixed injections (kW, kVAr; positive
/// into the grid), from a flat start at the source voltage.
pub fn solve_network(case: &FeederCase, injections: &[(f64, f64)]) -> Result<NetworkSolution> {
    let mut ladder = Ladder::new(case)?;
    let mut v = ladder.flat_start();
    let sweeps = ladder.solve(injections, &mut v)?;
    Ok(ladder.summary(&v, sweeps))
}
