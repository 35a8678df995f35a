use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arx::fit_arx_affine;
use super::{fit_report_with_spread, Dataset, DiscreteTransferFunction, FitReport, TfFilter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectOptions {
    pub max_n: usize,
    pub max_m: usize,
    /// Fraction of samples used for training; the rest is held out.
    pub split: f64,
    /// Absolute output spread (in output units) below which a segment is
    /// treated as flat when normalizing errors.
    pub output_floor: f64,
    /// Fits within this many percentage points of the best are ranked by
    /// the information criteria instead.
    pub tie_tolerance: f64,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            max_n: 4,
            max_m: 4,
            split: 0.7,
            output_floor: 0.0,
            tie_tolerance: 0.05,
        }
    }
}

impl SelectOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_n < 1 {
            return Err(Error::InvalidArgument("max_n must be at least 1".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::OutOfDomain {
                what: "split",
                value: self.split,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !(self.output_floor >= 0.0) || !(self.tie_tolerance >= 0.0) {
            return Err(Error::InvalidArgument(
                "floor and tie tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A transfer function acting on deviations from an operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    pub tf: DiscreteTransferFunction,
    pub u_offset: f64,
    pub y_offset: f64,
}

impl LocalModel {
    /// Free-run from the given history (absolute units, newest first).
    pub fn simulate(&self, u: &[f64], past_y: &[f64], past_u: &[f64]) -> Result<Vec<f64>> {
        let mut filter = TfFilter::new(&self.tf);
        let py: Vec<f64> = past_y.iter().map(|v| v - self.y_offset).collect();
        let pu: Vec<f64> = past_u.iter().map(|v| v - self.u_offset).collect();
        filter.set_history(&py, &pu);
        let out: Vec<f64> = u
            .iter()
            .map(|&uk| filter.step(uk - self.u_offset) + self.y_offset)
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericBlowUp {
                pole_radius: self.tf.pole_radius(),
            });
        }
        Ok(out)
    }

    /// Output at rest for a constant input.
    pub fn steady_state(&self, u: f64) -> f64 {
        let den = 1.0 + self.tf.a.iter().sum::<f64>();
        let num: f64 = self.tf.b.iter().sum();
        if den.abs() < 1e-300 {
            return self.y_offset;
        }
        num / den * (u - self.u_offset) + self.y_offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub n: usize,
    pub m: usize,
    pub report: Option<FitReport>,
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    pub model: LocalModel,
    /// Held-out report of the chosen model.
    pub report: FitReport,
    pub candidates: Vec<CandidateScore>,
    pub n_train: usize,
    /// Held-out measured and simulated outputs.
    pub y_test: Vec<f64>,
    pub y_hat: Vec<f64>,
}

/// Fit every `(n, m)` with `m <= n`, train on the leading `split` fraction
/// and rank by held-out free-run fit.
pub fn select_order(data: &Dataset, opts: &SelectOptions) -> Result<OrderSelection> {
    opts.validate()?;
    let len = data.len();
    let n_train = (opts.split * len as f64 + 1e-9).floor() as usize;
    if n_train < 2 || len - n_train < 2 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: len,
        });
    }
    let (u_train, u_test) = data.u.split_at(n_train);
    let (y_train, y_test) = data.y.split_at(n_train);
    let u_off = mean(u_train);
    let y_off = mean(y_train);

    let (lo, hi) = data
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if hi - lo <= opts.output_floor {
        return Ok(flat_model(data, n_train, opts));
    }

    let train = Dataset {
        u: u_train.iter().map(|v| v - u_off).collect(),
        y: y_train.iter().map(|v| v - y_off).collect(),
        ts: data.ts,
    };
    let orders: Vec<(usize, usize)> = (1..=opts.max_n)
        .flat_map(|n| (0..=n.min(opts.max_m)).map(move |m| (n, m)))
        .collect();

    #[allow(clippy::type_complexity)]
    let results: Vec<(CandidateScore, Option<(LocalModel, Vec<f64>)>)> = orders
        .par_iter()
        .map(|&(n, m)| {
            let outcome = fit_arx_affine(&train, n, m).and_then(|(tf, c)| {
                let radius = tf.pole_radius();
                if !(radius < 1.0) {
                    return Err(Error::NumericBlowUp {
                        pole_radius: radius,
                    });
                }
                // fold the equation-error constant into the operating point
                let y_offset = y_off + c / (1.0 + tf.a.iter().sum::<f64>());
                let model = LocalModel {
                    tf,
                    u_offset: u_off,
                    y_offset,
                };
                let past_y: Vec<f64> = y_train.iter().rev().take(n).copied().collect();
                let past_u: Vec<f64> = u_train.iter().rev().take(m).copied().collect();
                let y_hat = model.simulate(u_test, &past_y, &past_u)?;
                let report =
                    fit_report_with_spread(y_test, &y_hat, model.tf.n_params(), opts.output_floor)?;
                Ok((model, y_hat, report))
            });
            match outcome {
                Ok((model, y_hat, report)) => (
                    CandidateScore {
                        n,
                        m,
                        report: Some(report),
                        rejected: None,
                    },
                    Some((model, y_hat)),
                ),
                Err(e) => (
                    CandidateScore {
                        n,
                        m,
                        report: None,
                        rejected: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let best = rank(
        &results.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>(),
        opts.tie_tolerance,
    )
    .ok_or(Error::NoModel {
        candidates: orders.len(),
    })?;
    let report = results[best]
        .0
        .report
        .expect("ranked candidate has a report");
    let (model, y_hat) = results[best]
        .1
        .clone()
        .expect("ranked candidate has a model");
    Ok(OrderSelection {
        model,
        report,
        candidates: results.into_iter().map(|(c, _)| c).collect(),
        n_train,
        y_test: y_test.to_vec(),
        y_hat,
    })
}

/// Index of the winning candidate: highest fit, near-ties settled by AICc,
/// then BIC, then total order.
pub(crate) fn rank(candidates: &[CandidateScore], tie_tolerance: f64) -> Option<usize> {
    let best_fit = candidates
        .iter()
        .filter_map(|c| c.report.map(|r| r.fit_percent))
        .fold(f64::NEG_INFINITY, f64::max);
    if best_fit == f64::NEG_INFINITY {
        return None;
    }
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.report
                .is_some_and(|r| r.fit_percent >= best_fit - tie_tolerance)
        })
        .min_by(|(_, x), (_, y)| {
            let (rx, ry) = (x.report.unwrap(), y.report.unwrap());
            rx.aicc
                .total_cmp(&ry.aicc)
                .then(rx.bic.total_cmp(&ry.bic))
                .then((x.n + x.m).cmp(&(y.n + y.m)))
        })
        .map(|(i, _)| i)
}

fn flat_model(data: &Dataset, n_train: usize, opts: &SelectOptions) -> OrderSelection {
    let level = mean(&data.y);
    let tf = DiscreteTransferFunction {
        b: vec![0.0],
        a: vec![0.0],
        ts: data.ts,
    };
    let y_test = data.y[n_train..].to_vec();
    let y_hat = vec![level; y_test.len()];
    let floor = opts.output_floor.max(f64::MIN_POSITIVE);
    let report =
        fit_report_with_spread(&y_test, &y_hat, tf.n_params(), floor).unwrap_or(FitReport {
            fit_percent: 100.0,
            nrmse: 0.0,
            adj_r2: 1.0,
            aicc: f64::NEG_INFINITY,
            bic: f64::NEG_INFINITY,
            n_params: tf.n_params(),
            n_points: y_test.len(),
        });
    OrderSelection {
        model: LocalModel {
            tf,
            u_offset: mean(&data.u),
            y_offset: level,
        },
        report,
        candidates: Vec::new(),
        n_train,
        y_test,
        y_hat,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysid::simulate_tf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn first_order_data(len: usize) -> Dataset {
        let truth = DiscreteTransferFunction::new(vec![0.0, 0.4], vec![-0.6], 0.001).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..len).map(|_| rng.random_range(0.9..1.1)).collect();
        let y = simulate_tf(&truth, &u, None).unwrap();
        Dataset::new(u, y, 0.001).unwrap()
    }

    #[test]
    fn split_arithmetic() {
        let sel = select_order(&first_order_data(1000), &SelectOptions::default()).unwrap();
        assert_eq!(sel.n_train, 700);
        assert_eq!(sel.y_test.len(), 300);
    }

    #[test]
    fn first_order_system_selects_first_order() {
        let sel = select_order(&first_order_data(1000), &SelectOptions::default()).unwrap();
        assert_eq!(sel.model.tf.n(), 1);
        assert!(
            sel.report.fit_percent > 99.999,
            "{:?} {:?}",
            sel.report,
            sel.candidates
        );
        let c = sel.candidates.iter().filter(|c| c.report.is_some()).count();
        assert!(c > 1);
    }

    #[test]
    fn choice_is_never_worst() {
        let sel = select_order(&first_order_data(600), &SelectOptions::default()).unwrap();
        let fits: Vec<f64> = sel
            .candidates
            .iter()
            .filter_map(|c| c.report.map(|r| r.fit_percent))
            .collect();
        let best = fits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(sel.report.fit_percent >= best - 0.05);
    }

    #[test]
    fn tie_goes_to_fewer_parameters() {
        let rep = |d: usize, aicc: f64| FitReport {
            fit_percent: 90.0,
            nrmse: 0.1,
            adj_r2: 0.9,
            aicc,
            bic: aicc,
            n_params: d,
            n_points: 100,
        };
        let c = vec![
            CandidateScore {
                n: 2,
                m: 2,
                report: Some(rep(5, -10.0)),
                rejected: None,
            },
            CandidateScore {
                n: 1,
                m: 1,
                report: Some(rep(3, -14.0)),
                rejected: None,
            },
        ];
        assert_eq!(rank(&c, 0.05), Some(1));
        assert_eq!(rank(&[], 0.05), None);
    }

    #[test]
    fn flat_output_gives_constant_model() {
        let u: Vec<f64> = (0..200)
            .map(|i| 1.0 + 0.01 * ((i / 7) % 2) as f64)
            .collect();
        let data = Dataset::new(u, vec![3.0; 200], 0.001).unwrap();
        let sel = select_order(&data, &SelectOptions::default()).unwrap();
        assert_eq!(sel.report.fit_percent, 100.0);
        assert_eq!(sel.model.steady_state(1.0), 3.0);
    }

    #[test]
    fn unidentifiable_everywhere_is_no_model() {
        // output varies but input is constant
        let y: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let data = Dataset::new(vec![1.0; 200], y, 0.001).unwrap();
        assert!(matches!(
            select_order(&data, &SelectOptions::default()),
            Err(Error::NoModel { .. })
        ));
    }
}
