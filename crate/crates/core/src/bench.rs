//! Detailed-versus-partitioned comparisons: single-house validation, the
//! step suite, the feeder runs and the load-sweep report.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feeder::{
    load_sweep, run_timeseries, write_load_sweep, Binding, DeviceModels, FeederCase, GsfMode,
    LoadSweep, Profiles, TimeseriesOptions, TimeseriesResult,
};
use crate::io::write_columns;
use crate::partition::{
    binary_search_partitions, simulate_partitioned, PartitionSearch, PartitionedModel, SearchConfig,
};
use crate::plant::{simulate_plant, OutputChannel, PlantParams};
use crate::signalgen::{generate_probing_signal, generate_step_signal, PartitionPlan, Signal};
use crate::sysid::fit_report_with_spread;

/// Voltage steps `(from, to)` in p.u., one per operating region of the
/// default curve.
pub const STEP_SUITE: [(f64, f64); 5] = [
    (0.88, 0.92),
    (0.92, 0.98),
    (0.98, 1.02),
    (1.02, 1.08),
    (1.08, 1.10),
];

/// Seconds held at each level of a step case.
pub const STEP_DWELL: f64 = 1.0;

/// Share of rated current used as the smallest response amplitude when
/// normalising step errors and jumps.
pub const AMPLITUDE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub scenario: String,
    pub nrmse_percent: f64,
    pub fit_percent: f64,
    pub wall_time_detailed: f64,
    pub wall_time_partitioned: f64,
    pub speedup: f64,
}

impl BenchResult {
    fn new(
        scenario: impl Into<String>,
        nrmse_percent: f64,
        detailed: f64,
        partitioned: f64,
    ) -> Result<Self> {
        if !(detailed > 0.0 && partitioned > 0.0) {
            return Err(Error::InvalidArgument("wall times must be positive".into()));
        }
        Ok(Self {
            scenario: scenario.into(),
            nrmse_percent,
            fit_percent: 100.0 - nrmse_percent,
            wall_time_detailed: detailed,
            wall_time_partitioned: partitioned,
            speedup: detailed / partitioned,
        })
    }
}

/// One step of the suite, both models driven by the same input.
#[derive(Debug, Clone)]
pub struct StepCase {
    pub v_from: f64,
    pub v_to: f64,
    pub input: Signal,
    pub detailed: Vec<f64>,
    pub partitioned: Vec<f64>,
    /// `max(|Δ detailed|, floor)`, A.
    pub amplitude: f64,
    pub nrmse_percent: f64,
    /// Largest single-sample change of the partitioned output over `amplitude`.
    pub max_jump_fraction: f64,
}

/// Run both models through one voltage step from rest.
pub fn run_step_case(
    model: &PartitionedModel,
    plant: &PlantParams,
    plant_dt: f64,
    v_from: f64,
    v_to: f64,
) -> Result<StepCase> {
    let rate = 1.0 / model.ts;
    let input = generate_step_signal(&[(v_from, STEP_DWELL), (v_to, STEP_DWELL)], rate)?;
    let mut params = *plant;
    params.output = OutputChannel::Reactive;
    params.noise = None;
    let p = Signal::constant(0.0, input.len(), rate)?;
    let detailed = simulate_plant(&input, &p, &params, plant_dt)?
        .output
        .into_values();
    let partitioned = simulate_partitioned(model, &input)?.into_values();
    let floor = AMPLITUDE_FLOOR * plant.rated_current();
    let amplitude = (detailed[detailed.len() - 1] - detailed[0])
        .abs()
        .max(floor);
    let report = fit_report_with_spread(&detailed, &partitioned, 1, floor)?;
    let max_jump = partitioned
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    Ok(StepCase {
        v_from,
        v_to,
        input,
        detailed,
        partitioned,
        amplitude,
        nrmse_percent: 100.0 * report.nrmse,
        max_jump_fraction: max_jump / amplitude,
    })
}

pub fn run_step_suite(
    model: &PartitionedModel,
    plant: &PlantParams,
    plant_dt: f64,
) -> Result<Vec<StepCase>> {
    STEP_SUITE
        .iter()
        .map(|&(a, b)| run_step_case(model, plant, plant_dt, a, b))
        .collect()
}

/// Overlay CSV: time, input, detailed and partitioned outputs.
pub fn write_step_case<P: AsRef<Path>>(path: P, case: &StepCase) -> Result<()> {
    let t: Vec<f64> = case.input.timestamps().collect();
    write_columns(
        path,
        &["time_s", "v_pu", "i_detailed_A", "i_partitioned_A"],
        &[&t, case.input.values(), &case.detailed, &case.partitioned],
    )
}

#[derive(Debug, Clone)]
pub struct SingleHouseValidation {
    /// Held-out fit and replay timing.
    pub result: BenchResult,
    pub search: PartitionSearch,
    /// Fit of the partitioned model replaying the whole probing signal.
    pub replay_fit: f64,
    pub input: Signal,
    pub detailed: Vec<f64>,
    pub partitioned: Vec<f64>,
    pub steps: Vec<StepCase>,
}

impl SingleHouseValidation {
    /// Overlay, search trace and step-suite files.
    pub fn write_traces<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        let t: Vec<f64> = self.input.timestamps().collect();
        write_columns(
            dir.join("chirp_overlay.csv"),
            &["time_s", "v_pu", "i_detailed_A", "i_partitioned_A"],
            &[&t, self.input.values(), &self.detailed, &self.partitioned],
        )?;
        crate::partition::write_search_trace(dir.join("search_trace.csv"), &self.search.trace)?;
        for (k, case) in self.steps.iter().enumerate() {
            write_step_case(dir.join(format!("step_{}.csv", k + 1)), case)?;
        }
        Ok(())
    }
}

/// Probe, search, then replay the final probing signal through both models.
pub fn run_single_house_validation(
    cfg: &SearchConfig,
    plant: &PlantParams,
) -> Result<SingleHouseValidation> {
    let search = binary_search_partitions(cfg, plant)?;
    let plan = PartitionPlan::new(
        cfg.v_limits.0,
        cfg.v_limits.1,
        search.n_star,
        cfg.chirp.duration,
    )?;
    let input = generate_probing_signal(&plan, &cfg.chirp)?;
    let mut params = *plant;
    params.output = OutputChannel::Reactive;
    params.noise = None;
    let p = Signal::constant(cfg.p_avail, input.len(), input.sample_rate())?;

    let started = Instant::now();
    let detailed = simulate_plant(&input, &p, &params, cfg.plant_dt)?
        .output
        .into_values();
    let t_detailed = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let partitioned = simulate_partitioned(&search.model, &input)?.into_values();
    let t_partitioned = started.elapsed().as_secs_f64();

    let floor = AMPLITUDE_FLOOR * plant.rated_current();
    let replay = fit_report_with_spread(&detailed, &partitioned, search.model.max_order(), floor)?;
    let steps = run_step_suite(&search.model, plant, cfg.plant_dt)?;
    let held_out = search.evaluation.overall_fit;
    Ok(SingleHouseValidation {
        result: BenchResult::new(
            "single_house",
            100.0 - held_out,
            t_detailed.max(f64::MIN_POSITIVE),
            t_partitioned.max(f64::MIN_POSITIVE),
        )?,
        replay_fit: replay.fit_percent,
        search,
        input,
        detailed,
        partitioned,
        steps,
    })
}

#[derive(Debug, Clone)]
pub struct FeederComparison {
    pub mode: GsfMode,
    /// Mean per-house current NRMSE and median wall times.
    pub result: BenchResult,
    pub per_house_nrmse_percent: Vec<f64>,
    pub detailed: TimeseriesResult,
    pub partitioned: TimeseriesResult,
    pub detailed_times: Vec<f64>,
    pub partitioned_times: Vec<f64>,
}

impl FeederComparison {
    /// Per-house current traces from both bindings.
    pub fn write_traces<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        for (name, run) in [
            ("detailed", &self.detailed),
            ("partitioned", &self.partitioned),
        ] {
            let n = run.current.len();
            let names: Vec<String> = (1..=n).map(|h| format!("h{h}_i_A")).collect();
            let mut headers = vec!["time_s"];
            headers.extend(names.iter().map(String::as_str));
            let mut cols: Vec<&[f64]> = vec![&run.time];
            cols.extend(run.current.iter().map(Vec::as_slice));
            write_columns(
                dir.join(format!("current_{}_{name}.csv", self.mode)),
                &headers,
                &cols,
            )?;
        }
        Ok(())
    }
}

/// Per-house current NRMSE in percent, partitioned against detailed.
pub fn current_nrmse(
    detailed: &TimeseriesResult,
    partitioned: &TimeseriesResult,
    floor: f64,
) -> Result<Vec<f64>> {
    detailed
        .current
        .iter()
        .zip(&partitioned.current)
        .map(|(y, y_hat)| Ok(100.0 * fit_report_with_spread(y, y_hat, 1, floor)?.nrmse))
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Run both bindings `repeats` times, alternating, and compare currents.
pub fn run_feeder_comparison(
    case: &FeederCase,
    profiles: &Profiles,
    models: &DeviceModels,
    base: &TimeseriesOptions,
    repeats: usize,
) -> Result<FeederComparison> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("need at least one repeat".into()));
    }
    let with = |binding| TimeseriesOptions { binding, ..*base };
    let mut detailed = None;
    let mut partitioned = None;
    let mut td = Vec::with_capacity(repeats);
    let mut tp = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let d = run_timeseries(case, profiles, &with(Binding::Detailed), None)?;
        td.push(d.wall_time_s);
        detailed.get_or_insert(d);
        let p = run_timeseries(case, profiles, &with(Binding::Partitioned), Some(models))?;
        tp.push(p.wall_time_s);
        partitioned.get_or_insert(p);
    }
    let (detailed, partitioned) = (detailed.expect("ran once"), partitioned.expect("ran once"));
    let floor = AMPLITUDE_FLOOR * base.plant.rated_current();
    let per_house = current_nrmse(&detailed, &partitioned, floor)?;
    let mean = per_house.iter().sum::<f64>() / per_house.len() as f64;
    Ok(FeederComparison {
        mode: base.mode,
        result: BenchResult::new(
            format!("feeder_{}", base.mode),
            mean,
            median(&td),
            median(&tp),
        )?,
        per_house_nrmse_percent: per_house,
        detailed,
        partitioned,
        detailed_times: td,
        partitioned_times: tp,
    })
}

/// Full-range net load sweep written as CSV.
pub fn run_load_sweep_report<P: AsRef<Path>>(case: &FeederCase, path: P) -> Result<LoadSweep> {
    let sweep = load_sweep(case, (-75.0, 75.0), 31)?;
    write_load_sweep(path, &sweep)?;
    Ok(sweep)
}

pub fn write_bench_csv<P: AsRef<Path>>(path: P, results: &[BenchResult]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table for terminal output.
pub fn format_summary(results: &[BenchResult]) -> String {
    let mut s = format!(
        "{:<20} {:>10} {:>10} {:>12} {:>12} {:>8}\n",
        "scenario", "nrmse_%", "fit_%", "detailed_s", "partition_s", "speedup"
    );
    for r in results {
        let _ = writeln!(
            s,
            "{:<20} {:>10.4} {:>10.4} {:>12.3} {:>12.3} {:>8.2}",
            r.scenario,
            r.nrmse_percent,
            r.fit_percent,
            r.wall_time_detailed,
            r.wall_time_partitioned,
            r.speedup
        );
    }
    s
}
