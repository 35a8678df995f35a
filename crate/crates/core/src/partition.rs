//! Voltage-range partitioning: per-range local models, the bisection over
//! the number of ranges, and switched simulation of the aggregate.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{simulate_plant, OutputChannel, PlantParams};
use crate::signalgen::{generate_probing_signal, ChirpSpec, PartitionPlan, Signal};
use crate::sysid::{
    fit_report_with_spread, select_order, shift_in, Dataset, FitReport, LocalModel, SelectOptions,
    TfFilter,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Required overall fit, percent.
    pub fit_req: f64,
    pub v_limits: (f64, f64),
    /// `(max_n, max_m)` for the per-range order search.
    pub order_limits: (usize, usize),
    pub split: f64,
    pub chirp: ChirpSpec,
    /// Available PV power during probing, kW.
    pub p_avail: f64,
    /// Plant integration step, s.
    pub plant_dt: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: 22,
            fit_req: 99.0,
            v_limits: (0.88, 1.10),
            order_limits: (4, 4),
            split: 0.7,
            chirp: ChirpSpec::default(),
            p_avail: 0.0,
            plant_dt: 1e-3,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_min >= self.n_max {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= n_min < n_max, got [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        if !(self.fit_req > 0.0 && self.fit_req <= 100.0) {
            return Err(Error::OutOfDomain {
                what: "fit_req",
                value: self.fit_req,
                lo: 0.0,
                hi: 100.0,
            });
        }
        if !(self.v_limits.0 < self.v_limits.1) {
            return Err(Error::InvalidArgument("v_limits must be increasing".into()));
        }
        self.select_options(0.0).validate()?;
        self.chirp.validate()
    }

    pub(crate) fn select_options(&self, output_floor: f64) -> SelectOptions {
        SelectOptions {
            max_n: self.order_limits.0,
            max_m: self.order_limits.1,
            split: self.split,
            output_floor,
            ..SelectOptions::default()
        }
    }
}

/// One voltage range and its local model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeModel {
    pub v_lo: f64,
    pub v_hi: f64,
    pub model: LocalModel,
    /// Held-out report from identification.
    pub report: FitReport,
}

/// Local models switched by the instantaneous input level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedModel {
    pub ranges: Vec<RangeModel>,
    /// Fit over the concatenated held-out segments, percent.
    pub overall_fit: f64,
    pub ts: f64,
}

impl PartitionedModel {
    pub fn new(ranges: Vec<RangeModel>, overall_fit: f64) -> Result<Self> {
        let first = ranges
            .first()
            .ok_or_else(|| Error::InvalidArgument("partitioned model needs a range".into()))?;
        let ts = first.model.tf.ts;
        for w in ranges.windows(2) {
            if w[0].v_hi != w[1].v_lo {
                return Err(Error::InvalidArgument(format!(
                    "ranges do not tile: {} then {}",
                    w[0].v_hi, w[1].v_lo
                )));
            }
        }
        if ranges
            .iter()
            .any(|r| !(r.v_lo < r.v_hi) || r.model.tf.ts != ts)
        {
            return Err(Error::InvalidArgument(
                "ranges must be non-empty and share one sampling time".into(),
            ));
        }
        Ok(Self {
            ranges,
            overall_fit,
            ts,
        })
    }

    pub fn limits(&self) -> (f64, f64) {
        (self.ranges[0].v_lo, self.ranges[self.ranges.len() - 1].v_hi)
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Range owning `v`: shared edges go to the lower range and values
    /// outside the limits clamp to the end ranges.
    pub fn range_index(&self, v: f64) -> usize {
        let idx = self.ranges.partition_point(|r| r.v_hi < v);
        idx.min(self.ranges.len() - 1)
    }

    /// Largest model order; the history depth needed for warm starts.
    pub fn max_order(&self) -> usize {
        self.ranges
            .iter()
            .map(|r| r.model.tf.n().max(r.model.tf.m() + 1))
            .max()
            .unwrap_or(1)
    }
}

/// Streaming simulator of a [`PartitionedModel`].
#[derive(Debug, Clone)]
pub struct PartitionedFilter<'a> {
    model: &'a PartitionedModel,
    filters: Vec<TfFilter>,
    active: usize,
    /// Aggregate outputs and inputs, newest first.
    y_hist: Vec<f64>,
    u_hist: Vec<f64>,
    scratch_y: Vec<f64>,
    scratch_u: Vec<f64>,
    switches: usize,
}

impl<'a> PartitionedFilter<'a> {
    /// Start at rest for a constant input `u0`.
    pub fn new(model: &'a PartitionedModel, u0: f64) -> Self {
        let depth = model.max_order().max(1);
        let active = model.range_index(u0);
        let local = &model.ranges[active].model;
        let y0 = local.steady_state(u0);
        let mut filters: Vec<TfFilter> = model
            .ranges
            .iter()
            .map(|r| TfFilter::new(&r.model.tf))
            .collect();
        filters[active].settle(u0 - local.u_offset);
        Self {
            model,
            filters,
            active,
            y_hist: vec![y0; depth],
            u_hist: vec![u0; depth],
            scratch_y: vec![0.0; depth],
            scratch_u: vec![0.0; depth],
            switches: 0,
        }
    }

    /// Output for the next input sample.
    #[inline]
    pub fn step(&mut self, u: f64) -> f64 {
        let idx = self.model.range_index(u);
        if idx != self.active {
            let local = &self.model.ranges[idx].model;
            for (dst, src) in self.scratch_y.iter_mut().zip(&self.y_hist) {
                *dst = src - local.y_offset;
            }
            for (dst, src) in self.scratch_u.iter_mut().zip(&self.u_hist) {
                *dst = src - local.u_offset;
            }
            self.filters[idx].set_history(&self.scratch_y, &self.scratch_u);
            self.active = idx;
            self.switches += 1;
        }
        let local = &self.model.ranges[self.active].model;
        let y = self.filters[self.active].step(u - local.u_offset) + local.y_offset;
        shift_in(&mut self.y_hist, y);
        shift_in(&mut self.u_hist, u);
        y
    }

    /// Hold `u` for `steps` samples and return the last output. Same result
    /// as calling [`step`](Self::step) repeatedly.
    pub fn step_hold(&mut self, u: f64, steps: usize) -> f64 {
        let depth = self.y_hist.len();
        if steps <= depth + 1 {
            let mut y = self.y_hist[0];
            for _ in 0..steps {
                y = self.step(u);
            }
            return y;
        }
        // the first sample may switch ranges; afterwards the range is fixed
        self.step(u);
        let model = self.model;
        let local = &model.ranges[self.active].model;
        let filter = &mut self.filters[self.active];
        let du = u - local.u_offset;
        for _ in 0..steps - 1 - depth {
            filter.step(du);
        }
        for _ in 0..depth {
            let y = filter.step(du) + local.y_offset;
            shift_in(&mut self.y_hist, y);
        }
        self.u_hist.fill(u);
        self.y_hist[0]
    }

    pub fn active_range(&self) -> usize {
        self.active
    }

    pub fn switches(&self) -> usize {
        self.switches
    }
}

/// Run the partitioned model over a voltage signal, starting at rest.
pub fn simulate_partitioned(model: &PartitionedModel, v_input: &Signal) -> Result<Signal> {
    if v_input.is_empty() {
        return Err(Error::InvalidArgument("empty input signal".into()));
    }
    crate::error::ensure_finite("partitioned input", v_input.values())?;
    let mut filter = PartitionedFilter::new(model, v_input.values()[0]);
    let out: Vec<f64> = v_input.values().iter().map(|&v| filter.step(v)).collect();
    if out.iter().any(|y| !y.is_finite()) {
        let radius = model
            .ranges
            .iter()
            .map(|r| r.model.tf.pole_radius())
            .fold(0.0, f64::max);
        return Err(Error::NumericBlowUp {
            pole_radius: radius,
        });
    }
    Signal::new(v_input.start(), v_input.sample_rate(), out)
}

/// Model and held-out data for one partition count.
#[derive(Debug, Clone)]
pub struct PartitionEvaluation {
    pub n: usize,
    pub model: PartitionedModel,
    pub overall_fit: f64,
    /// Concatenated held-out measurements and free-run predictions.
    pub y_test: Vec<f64>,
    pub y_hat: Vec<f64>,
}

/// Probe, simulate, split by dwell interval and identify every range.
pub fn evaluate_partition_count(
    n: usize,
    cfg: &SearchConfig,
    plant: &PlantParams,
) -> Result<PartitionEvaluation> {
    cfg.chirp.validate()?;
    let plan = PartitionPlan::new(cfg.v_limits.0, cfg.v_limits.1, n, cfg.chirp.duration)?;
    let input = generate_probing_signal(&plan, &cfg.chirp)?;
    let mut params = *plant;
    params.output = OutputChannel::Reactive;
    let p_profile = Signal::constant(cfg.p_avail, input.len(), input.sample_rate())?;
    let response = simulate_plant(&input, &p_profile, &params, cfg.plant_dt)?.output;
    identify_ranges(&plan, &input, &response, cfg)
}

/// Identify one local model per dwell interval of an existing experiment.
pub fn identify_ranges(
    plan: &PartitionPlan,
    input: &Signal,
    response: &Signal,
    cfg: &SearchConfig,
) -> Result<PartitionEvaluation> {
    let sps = cfg.chirp.samples_per_sweep()?;
    let n = plan.n_partitions;
    if input.len() != sps * n || response.len() != input.len() {
        return Err(Error::InvalidArgument(format!(
            "experiment has {} input and {} output samples, plan needs {}",
            input.len(),
            response.len(),
            sps * n
        )));
    }
    let y = response.values();
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let floor = (1e-9 * (hi - lo)).max(1e-12);
    let opts = cfg.select_options(floor);
    let ts = 1.0 / input.sample_rate();

    #[allow(clippy::type_complexity)]
    let fitted: Vec<Result<(RangeModel, Vec<f64>, Vec<f64>)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (v_lo, v_hi) = plan.bounds_of(k);
            let span = k * sps..(k + 1) * sps;
            let data = Dataset::new(input.values()[span.clone()].to_vec(), y[span].to_vec(), ts)?;
            let sel = select_order(&data, &opts).map_err(|e| Error::PartitionFailure {
                v_lo,
                v_hi,
                source: Box::new(e),
            })?;
            Ok((
                RangeModel {
                    v_lo,
                    v_hi,
                    model: sel.model,
                    report: sel.report,
                },
                sel.y_test,
                sel.y_hat,
            ))
        })
        .collect();

    let mut ranges = Vec::with_capacity(n);
    let mut y_test = Vec::new();
    let mut y_hat = Vec::new();
    for item in fitted {
        let (range, t, h) = item?;
        ranges.push(range);
        y_test.extend(t);
        y_hat.extend(h);
    }
    let d = ranges
        .iter()
        .map(|r| r.model.tf.n_params())
        .max()
        .unwrap_or(1);
    let overall = fit_report_with_spread(&y_test, &y_hat, d, floor)?;
    let model = PartitionedModel::new(ranges, overall.fit_percent)?;
    Ok(PartitionEvaluation {
        n,
        overall_fit: overall.fit_percent,
        model,
        y_test,
        y_hat,
    })
}

/// One evaluated partition count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: usize,
    pub fit: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectOutcome {
    pub n_star: usize,
    /// False when the loop stopped because the fit condition failed.
    pub check: bool,
    /// Distinct evaluations in call order.
    pub trace: Vec<TracePoint>,
}

/// Bisection over the partition count.
///
/// `eval` is called at most once per count. The two endpoints are
/// evaluated concurrently.
pub fn bisect<F>(n_min: usize, n_max: usize, fit_req: f64, eval: F) -> Result<BisectOutcome>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    if n_min < 1 || n_min >= n_max {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_min < n_max, got [{n_min}, {n_max}]"
        )));
    }
    let memo: Mutex<BTreeMap<usize, f64>> = Mutex::new(BTreeMap::new());
    let trace: Mutex<Vec<TracePoint>> = Mutex::new(Vec::new());
    let fit_of = |n: usize| -> Result<f64> {
        if let Some(&f) = memo.lock().expect("memo lock").get(&n) {
            return Ok(f);
        }
        let start = Instant::now();
        let f = eval(n)?;
        let wall = start.elapsed().as_secs_f64();
        memo.lock().expect("memo lock").insert(n, f);
        trace.lock().expect("trace lock").push(TracePoint {
            n,
            fit: f,
            wall_time_s: wall,
        });
        Ok(f)
    };

    let (lo, hi) = rayon::join(|| fit_of(n_min), || fit_of(n_max));
    let (mut fit_min, mut fit_max) = (lo?, hi?);
    let (mut n_lo, mut n_hi) = (n_min, n_max);
    let mut check = true;
    while n_hi - n_lo > 1 {
        if fit_max > fit_min && fit_max > fit_req {
            let mid = n_lo + (n_hi - n_lo) / 2;
            let fit_mid = fit_of(mid)?;
            if fit_mid >= fit_req {
                n_hi = mid;
                fit_max = fit_mid;
            } else {
                n_lo = mid;
                fit_min = fit_mid;
            }
        } else {
            check = false;
            break;
        }
    }
    let n_star = if check { n_hi } else { n_lo };
    let mut trace = trace.into_inner().expect("trace lock");
    // endpoint order depends on thread timing; keep the record stable
    if trace.len() >= 2 && trace[0].n > trace[1].n {
        trace.swap(0, 1);
    }
    let pairs: Vec<(usize, f64)> = trace.iter().map(|t| (t.n, t.fit)).collect();
    let mut sorted = pairs.clone();
    sorted.sort_by_key(|p| p.0);
    let monotone = sorted.windows(2).all(|w| w[0].1 <= w[1].1);
    if !check || !monotone {
        warn!("partition search stopped with check = {check}; evaluated (n, fit): {pairs:?}");
    }
    Ok(BisectOutcome {
        n_star,
        check,
        trace,
    })
}

/// Upper bound on distinct evaluations made by [`bisect`].
pub fn max_evaluations(n_min: usize, n_max: usize) -> usize {
    let span = (n_max - n_min) as f64;
    2 + span.log2().ceil() as usize
}

#[derive(Debug, Clone)]
pub struct PartitionSearch {
    pub n_star: usize,
    pub check: bool,
    pub model: PartitionedModel,
    pub trace: Vec<TracePoint>,
    pub evaluation: PartitionEvaluation,
}

/// Full search: bisect over the partition count with the plant in the loop.
pub fn binary_search_partitions(
    cfg: &SearchConfig,
    plant: &PlantParams,
) -> Result<PartitionSearch> {
    cfg.validate()?;
    let models: Mutex<BTreeMap<usize, PartitionEvaluation>> = Mutex::new(BTreeMap::new());
    let outcome = bisect(cfg.n_min, cfg.n_max, cfg.fit_req, |n| {
        let ev = evaluate_partition_count(n, cfg, plant)?;
        let fit = ev.overall_fit;
        log::info!("partitions = {n}: overall fit {fit:.4} %");
        models.lock().expect("model lock").insert(n, ev);
        Ok(fit)
    })?;
    let evaluation = models
        .into_inner()
        .expect("model lock")
        .remove(&outcome.n_star)
        .expect("returned count was evaluated");
    Ok(PartitionSearch {
        n_star: outcome.n_star,
        check: outcome.check,
        model: evaluation.model.clone(),
        trace: outcome.trace,
        evaluation,
    })
}

pub fn write_search_trace<P: AsRef<Path>>(path: P, trace: &[TracePoint]) -> Result<()> {
    let n: Vec<f64> = trace.iter().map(|t| t.n as f64).collect();
    let fit: Vec<f64> = trace.iter().map(|t| t.fit).collect();
    let wall: Vec<f64> = trace.iter().map(|t| t.wall_time_s).collect();
    crate::io::write_columns(
        path,
        &["n", "overall_fit_percent", "wall_time_s"],
        &[&n, &fit, &wall],
    )
}

/// Identify the active-power channel: a square chirp on the available
/// power over `[0, S]` at nominal voltage. Input and output are in kW; the
/// output is `i_d * V_base / 1000`.
pub fn identify_active_channel(
    cfg: &SearchConfig,
    plant: &PlantParams,
) -> Result<PartitionedModel> {
    let plan = PartitionPlan::new(0.0, plant.s_rating, 1, cfg.chirp.duration)?;
    let p_input = generate_probing_signal(&plan, &cfg.chirp)?;
    let v = Signal::constant(1.0, p_input.len(), p_input.sample_rate())?;
    let mut params = *plant;
    params.output = OutputChannel::Active;
    params.noise = None;
    let run = simulate_plant(&v, &p_input, &params, cfg.plant_dt)?;
    let kw: Vec<f64> = run
        .output
        .values()
        .iter()
        .map(|i| i * plant.v_base / 1000.0)
        .collect();
    let response = Signal::new(0.0, p_input.sample_rate(), kw)?;
    Ok(identify_ranges(&plan, &p_input, &response, cfg)?.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysid::DiscreteTransferFunction;
    use approx::assert_abs_diff_eq;

    fn linear_profile(n: usize) -> Result<f64> {
        Ok(90.0 + 0.5 * n as f64)
    }

    #[test]
    fn bisect_matches_hand_trace() {
        let out = bisect(1, 22, 97.0, linear_profile).unwrap();
        assert_eq!(out.n_star, 14);
        assert!(out.check);
        let order: Vec<usize> = out.trace.iter().map(|t| t.n).collect();
        assert_eq!(order, vec![1, 22, 11, 16, 13, 14]);
        assert!(out.trace.len() <= max_evaluations(1, 22));
    }

    #[test]
    fn decreasing_profile_returns_n_min() {
        let out = bisect(1, 22, 50.0, |n| Ok(100.0 - n as f64)).unwrap();
        assert_eq!(out.n_star, 1);
        assert!(!out.check);
        assert_eq!(out.trace.len(), 2);
    }

    #[test]
    fn constant_profile_below_requirement() {
        let out = bisect(1, 22, 97.0, |_| Ok(80.0)).unwrap();
        assert_eq!(out.n_star, 1);
        assert!(!out.check);
    }

    #[test]
    fn unreachable_requirement_takes_else_path() {
        let out = bisect(1, 22, 99.0, |n| Ok(90.0 + 0.1 * n as f64)).unwrap();
        assert_eq!(out.n_star, 1);
        assert!(!out.check);
    }

    #[test]
    fn evaluation_errors_propagate() {
        let r = bisect(1, 4, 90.0, |n| {
            if n == 4 {
                Err(Error::NoModel { candidates: 0 })
            } else {
                Ok(50.0)
            }
        });
        assert!(r.is_err());
        assert!(bisect(3, 3, 90.0, linear_profile).is_err());
    }

    #[test]
    fn evaluation_bound() {
        assert_eq!(max_evaluations(1, 22), 7);
        assert_eq!(max_evaluations(1, 2), 2);
    }

    fn gain_model(lo: f64, hi: f64, gain: f64, offset: f64) -> RangeModel {
        RangeModel {
            v_lo: lo,
            v_hi: hi,
            model: LocalModel {
                tf: DiscreteTransferFunction::new(vec![0.0, 0.1 * gain], vec![-0.9], 1e-3).unwrap(),
                u_offset: lo,
                y_offset: offset,
            },
            report: FitReport {
                fit_percent: 100.0,
                nrmse: 0.0,
                adj_r2: 1.0,
                aicc: 0.0,
                bic: 0.0,
                n_params: 3,
                n_points: 10,
            },
        }
    }

    fn two_range_model() -> PartitionedModel {
        // one linear system y = 10 (u - 0.9), written about two operating points
        PartitionedModel::new(
            vec![
                gain_model(0.9, 1.0, 10.0, 0.0),
                gain_model(1.0, 1.1, 10.0, 1.0),
            ],
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn range_lookup_boundaries_and_clamp() {
        let m = two_range_model();
        assert_eq!(m.range_index(0.5), 0);
        assert_eq!(m.range_index(0.95), 0);
        assert_eq!(m.range_index(1.0), 0);
        assert_eq!(m.range_index(1.0 + 1e-12), 1);
        assert_eq!(m.range_index(2.0), 1);
        assert_eq!(m.limits(), (0.9, 1.1));
    }

    #[test]
    fn tiling_is_enforced() {
        let r = PartitionedModel::new(
            vec![
                gain_model(0.9, 1.0, 1.0, 0.0),
                gain_model(1.01, 1.1, 1.0, 0.0),
            ],
            0.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn constant_input_matches_single_model() {
        let m = two_range_model();
        let sig = Signal::new(0.0, 1000.0, vec![0.95; 50]).unwrap();
        let out = simulate_partitioned(&m, &sig).unwrap();
        let expect = m.ranges[0].model.steady_state(0.95);
        assert_abs_diff_eq!(expect, 0.5, epsilon = 1e-12);
        for y in out.values() {
            assert_abs_diff_eq!(*y, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn warm_start_reproduces_the_underlying_system() {
        let m = two_range_model();
        let v: Vec<f64> = (0..600)
            .map(|k| if (k / 40) % 2 == 0 { 0.95 } else { 1.07 })
            .collect();
        let out = simulate_partitioned(&m, &Signal::new(0.0, 1000.0, v.clone()).unwrap()).unwrap();
        let single = PartitionedModel::new(vec![gain_model(0.9, 1.1, 10.0, 0.0)], 100.0).unwrap();
        let reference =
            simulate_partitioned(&single, &Signal::new(0.0, 1000.0, v).unwrap()).unwrap();
        for (a, b) in out.values().iter().zip(reference.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn switching_is_continuous() {
        let m = two_range_model();
        let mut v = vec![0.95; 200];
        v.extend(vec![1.05; 400]);
        let out = simulate_partitioned(&m, &Signal::new(0.0, 1000.0, v).unwrap()).unwrap();
        let y = out.values();
        let total = (y[599] - y[0]).abs();
        assert_abs_diff_eq!(y[599], 1.5, epsilon = 1e-6);
        let max_jump = y
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        // a pole at 0.9 moves 10 % of the way on the first sample
        assert!(max_jump <= 0.1 * total + 1e-9, "{max_jump} vs {total}");
    }

    #[test]
    fn held_input_matches_sample_stepping() {
        let m = two_range_model();
        let mut a = PartitionedFilter::new(&m, 0.95);
        let mut b = PartitionedFilter::new(&m, 0.95);
        for (k, &u) in [1.07, 0.93, 0.99, 1.05, 1.05, 0.91].iter().enumerate() {
            let steps = [1, 2, 37, 250][k % 4];
            let held = a.step_hold(u, steps);
            let mut last = 0.0;
            for _ in 0..steps {
                last = b.step(u);
            }
            assert_abs_diff_eq!(held, last, epsilon = 1e-12);
            assert_eq!(a.active_range(), b.active_range());
        }
    }

    #[test]
    fn trace_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let out = bisect(1, 22, 97.0, linear_profile).unwrap();
        write_search_trace(&path, &out.trace).unwrap();
        let t = crate::io::read_table(&path).unwrap();
        assert_eq!(t.headers, vec!["n", "overall_fit_percent", "wall_time_s"]);
        assert_eq!(t.rows(), out.trace.len());
    }
}
