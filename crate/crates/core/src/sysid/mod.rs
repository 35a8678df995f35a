//! Discrete-time transfer-function identification.
//!
//! Models are ARX difference equations
//!
//! ```text
//! y(k) + a1 y(k-1) + ... + an y(k-n) = b0 u(k) + b1 u(k-1) + ... + bm u(k-m)
//! ```
//!
//! fitted by ordinary least squares (the equation-error form is linear in the
//! coefficients) and judged by free-run simulation on held-out data.

mod arx;
mod metrics;
mod select;

pub use arx::fit_arx;
pub use metrics::{score, FitReport};
pub use select::{select_order, CandidateScore, LocalModel, OrderSelection, SelectOptions};

pub(crate) use metrics::fit_report_with_spread;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input/output record with a uniform sampling time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// Sampling time, s.
    pub ts: f64,
}

impl Dataset {
    pub const MIN_LEN: usize = 10;

    pub fn new(u: Vec<f64>, y: Vec<f64>, ts: f64) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "input has {} samples, output {}",
                u.len(),
                y.len()
            )));
        }
        if u.len() < Self::MIN_LEN {
            return Err(Error::InsufficientData {
                needed: Self::MIN_LEN - 1,
                got: u.len(),
            });
        }
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sampling time {ts} must be positive"
            )));
        }
        crate::error::ensure_finite("dataset input", &u)?;
        crate::error::ensure_finite("dataset output", &y)?;
        Ok(Self { u, y, ts })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// `B(z^-1) / A(z^-1)` with monic denominator; `a` holds `a1..an`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTransferFunction {
    /// Numerator `b0..bm`.
    pub b: Vec<f64>,
    /// Denominator `a1..an`; the leading 1 is implicit.
    pub a: Vec<f64>,
    /// Sampling time, s.
    pub ts: f64,
}

impl DiscreteTransferFunction {
    pub fn new(b: Vec<f64>, a: Vec<f64>, ts: f64) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::InvalidArgument("numerator needs at least b0".into()));
        }
        if b.len() > a.len() + 1 && !a.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "numerator order {} exceeds denominator order {}",
                b.len() - 1,
                a.len()
            )));
        }
        crate::error::ensure_finite("numerator", &b)?;
        crate::error::ensure_finite("denominator", &a)?;
        if !(ts > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling time {ts} must be positive"
            )));
        }
        Ok(Self { b, a, ts })
    }

    /// Denominator order `n`.
    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Numerator order `m`.
    pub fn m(&self) -> usize {
        self.b.len() - 1
    }

    /// Free coefficients, `m + n + 1`.
    pub fn n_params(&self) -> usize {
        self.a.len() + self.b.len()
    }

    /// Roots of `z^n + a1 z^(n-1) + ... + an`.
    pub fn poles(&self) -> Vec<Complex64> {
        let n = self.a.len();
        match n {
            0 => Vec::new(),
            1 => vec![Complex64::new(-self.a[0], 0.0)],
            _ => {
                let mut companion = DMatrix::<f64>::zeros(n, n);
                for (j, &aj) in self.a.iter().enumerate() {
                    companion[(0, j)] = -aj;
                }
                for i in 1..n {
                    companion[(i, i - 1)] = 1.0;
                }
                companion.complex_eigenvalues().iter().copied().collect()
            }
        }
    }

    /// Largest pole modulus; zero for a pure FIR model.
    pub fn pole_radius(&self) -> f64 {
        self.poles().iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.pole_radius() < 1.0
    }

    /// Steady-state gain `B(1)/A(1)`.
    pub fn dc_gain(&self) -> f64 {
        let num: f64 = self.b.iter().sum();
        let den: f64 = 1.0 + self.a.iter().sum::<f64>();
        num / den
    }
}

/// Streaming evaluator of a transfer function's difference equation.
#[derive(Debug, Clone)]
pub struct TfFilter {
    b: Vec<f64>,
    a: Vec<f64>,
    /// `u(k)..u(k-m)` after a step; newest first. The last slot is
    /// dropped by the next shift.
    u_hist: Vec<f64>,
    /// `y(k-1)..y(k-n)`; newest first.
    y_hist: Vec<f64>,
}

impl TfFilter {
    pub fn new(tf: &DiscreteTransferFunction) -> Self {
        Self {
            b: tf.b.clone(),
            a: tf.a.clone(),
            u_hist: vec![0.0; tf.b.len()],
            y_hist: vec![0.0; tf.a.len()],
        }
    }

    /// Set the histories. `past_y[0]` is the most recent output and
    /// `past_u[0]` the most recent input; missing entries are zero.
    pub fn set_history(&mut self, past_y: &[f64], past_u: &[f64]) {
        for (i, slot) in self.y_hist.iter_mut().enumerate() {
            *slot = past_y.get(i).copied().unwrap_or(0.0);
        }
        // step() shifts before inserting, so slot 0 holds u(k-1) here
        for (i, slot) in self.u_hist.iter_mut().enumerate() {
            *slot = past_u.get(i).copied().unwrap_or(0.0);
        }
    }

    /// Put the filter at rest for a constant input.
    pub fn settle(&mut self, u: f64) {
        let num: f64 = self.b.iter().sum();
        let den: f64 = 1.0 + self.a.iter().sum::<f64>();
        let y = if den.abs() > 1e-300 {
            num / den * u
        } else {
            0.0
        };
        self.y_hist.fill(y);
        self.u_hist.fill(u);
    }

    #[inline]
    pub fn step(&mut self, u: f64) -> f64 {
        if !self.u_hist.is_empty() {
            shift_in(&mut self.u_hist, u);
        }
        let mut y = 0.0;
        for (b, u) in self.b.iter().zip(&self.u_hist) {
            y += b * u;
        }
        for (a, yp) in self.a.iter().zip(&self.y_hist) {
            y -= a * yp;
        }
        if !self.y_hist.is_empty() {
            shift_in(&mut self.y_hist, y);
        }
        y
    }
}

/// Push `x` onto a newest-first history, dropping the oldest entry.
#[inline(always)]
pub(crate) fn shift_in(hist: &mut [f64], x: f64) {
    for i in (1..hist.len()).rev() {
        hist[i] = hist[i - 1];
    }
    hist[0] = x;
}

/// Free-run simulation: each output is computed from past simulated
/// outputs, never from measurements. `y_init` holds `y(-1), y(-2), ...`.
pub fn simulate_tf(
    tf: &DiscreteTransferFunction,
    u: &[f64],
    y_init: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let mut filter = TfFilter::new(tf);
    if let Some(init) = y_init {
        if init.len() != tf.n() {
            return Err(Error::InvalidArgument(format!(
                "expected {} initial outputs, got {}",
                tf.n(),
                init.len()
            )));
        }
        filter.set_history(init, &[]);
    }
    let y: Vec<f64> = u.iter().map(|&uk| filter.step(uk)).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericBlowUp {
            pole_radius: tf.pole_radius(),
        });
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_gain_passes_input() {
        let tf = DiscreteTransferFunction::new(vec![1.0], vec![], 1.0).unwrap();
        let u = [0.3, -1.0, 2.5, 7.0];
        assert_eq!(simulate_tf(&tf, &u, None).unwrap(), u.to_vec());
    }

    #[test]
    fn first_order_step_converges_to_dc_gain() {
        let tf = DiscreteTransferFunction::new(vec![0.0, 1.0], vec![-0.5], 1.0).unwrap();
        let y = simulate_tf(&tf, &[1.0; 80], None).unwrap();
        assert_eq!(y[0], 0.0);
        assert_eq!(y[1], 1.0);
        assert_eq!(y[2], 1.5);
        assert_abs_diff_eq!(*y.last().unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tf.dc_gain(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_in_zero_out() {
        let tf = DiscreteTransferFunction::new(vec![0.2, 0.1, 0.05], vec![-1.2, 0.4], 1.0).unwrap();
        let y = simulate_tf(&tf, &[0.0; 100], Some(&[0.0, 0.0])).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blow_up_reports_pole_radius() {
        let tf = DiscreteTransferFunction::new(vec![1.0], vec![-3.0], 1.0).unwrap();
        match simulate_tf(&tf, &[1.0; 2000], None) {
            Err(Error::NumericBlowUp { pole_radius }) => assert_abs_diff_eq!(pole_radius, 3.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn poles_of_second_order() {
        // (1 - 0.5 z^-1)(1 - 0.8 z^-1) = 1 - 1.3 z^-1 + 0.4 z^-2
        let tf = DiscreteTransferFunction::new(vec![1.0], vec![-1.3, 0.4], 1.0).unwrap();
        let mut radii: Vec<f64> = tf.poles().iter().map(|p| p.norm()).collect();
        radii.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(radii[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(radii[1], 0.8, epsilon = 1e-12);
        assert!(tf.is_stable());
        let complex = DiscreteTransferFunction::new(vec![1.0], vec![0.0, 1.21], 1.0).unwrap();
        assert_abs_diff_eq!(complex.pole_radius(), 1.1, epsilon = 1e-12);
        assert!(!complex.is_stable());
    }

    #[test]
    fn initial_conditions_length_checked() {
        let tf = DiscreteTransferFunction::new(vec![1.0], vec![-0.5], 1.0).unwrap();
        assert!(simulate_tf(&tf, &[1.0], Some(&[0.0, 0.0])).is_err());
        let y = simulate_tf(&tf, &[0.0, 0.0], Some(&[4.0])).unwrap();
        assert_eq!(y, vec![2.0, 1.0]);
    }

    #[test]
    fn settle_holds_equilibrium() {
        let tf = DiscreteTransferFunction::new(vec![0.0, 0.3, 0.1], vec![-1.1, 0.3], 1.0).unwrap();
        let mut f = TfFilter::new(&tf);
        f.settle(2.0);
        let expect = tf.dc_gain() * 2.0;
        for _ in 0..10 {
            assert_abs_diff_eq!(f.step(2.0), expect, epsilon = 1e-12);
        }
    }
}
