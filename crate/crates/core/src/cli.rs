//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::bench::{
    format_summary, run_feeder_comparison, run_load_sweep_report, run_single_house_validation,
    run_step_suite, write_bench_csv, write_step_case, AMPLITUDE_FLOOR,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::feeder::{run_timeseries, Binding, DeviceModels, GsfMode};
use crate::io::{read_signal_csv, write_columns, write_signal_csv};
use crate::partition::{
    binary_search_partitions, identify_active_channel, identify_ranges, simulate_partitioned,
    write_search_trace, PartitionedModel,
};
use crate::plant::{simulate_plant, OutputChannel};
use crate::signalgen::{generate_probing_signal, PartitionPlan, Signal};
use crate::store::ModelStore;
use crate::sysid::fit_report_with_spread;

pub const THREADS_ENV: &str = "GRIDFIT_THREADS";

const REACTIVE: &str = "reactive";
const ACTIVE: &str = "active";

#[derive(Debug, Parser)]
#[command(
    name = "gridfit",
    version,
    about = "Partitioned transfer-function models of Volt-VAr inverters"
)]
pub struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for the measurement-noise injector.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "no_gsf")]
    NoGsf,
    #[value(name = "volt_var")]
    VoltVar,
}

impl From<ModeArg> for GsfMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::NoGsf => GsfMode::NoGsf,
            ModeArg::VoltVar => GsfMode::VoltVar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BindingArg {
    Detailed,
    Partitioned,
}

impl From<BindingArg> for Binding {
    fn from(b: BindingArg) -> Self {
        match b {
            BindingArg::Detailed => Binding::Detailed,
            BindingArg::Partitioned => Binding::Partitioned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Chirp,
    Steps,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the probing signal and the plant response.
    Probe,
    /// Identify a partitioned model and write the model store.
    Fit {
        /// Recorded probing signal; skips the search and fits its ranges.
        #[arg(long, requires = "response")]
        input: Option<PathBuf>,
        /// Recorded plant response matching `--input`.
        #[arg(long, requires = "input")]
        response: Option<PathBuf>,
    },
    /// Compare a stored model with the plant.
    Validate {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "steps")]
        scenario: Scenario,
    },
    /// Run the feeder over the configured profiles.
    Simulate {
        #[arg(long, value_enum, default_value = "volt_var")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "detailed")]
        binding: BindingArg,
        /// Model store for the partitioned binding; identified afresh if omitted.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Net load sweep of the feeder without control.
    Sweep,
    /// Single-house validation, feeder comparisons and load sweep.
    Bench {
        /// Timed runs per binding; the median is reported.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize =
        raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            Error::Config(format!("{THREADS_ENV}={raw:?} is not a positive integer"))
        })?;
    // a pool may already exist when called twice in one process
    if rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_err()
    {
        warn!("thread pool already initialised; {THREADS_ENV} ignored");
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    if !out.exists() {
        warn!(
            "output directory {} does not exist; creating it",
            out.display()
        );
        std::fs::create_dir_all(&out)?;
    }
    Ok((cfg, out))
}

pub fn run(cli: &Cli) -> Result<()> {
    let (cfg, out) = load_config(cli)?;
    match &cli.command {
        Command::Probe => probe(&cfg, &out),
        Command::Fit { input, response } => {
            fit(&cfg, &out, input.as_deref().zip(response.as_deref()))
        }
        Command::Validate { model, scenario } => validate(&cfg, &out, model, *scenario),
        Command::Simulate {
            mode,
            binding,
            model,
        } => simulate(
            &cfg,
            &out,
            (*mode).into(),
            (*binding).into(),
            model.as_deref(),
        ),
        Command::Sweep => sweep(&cfg, &out),
        Command::Bench { repeats } => bench(&cfg, &out, *repeats),
    }
}

fn probing_experiment(cfg: &RunConfig, n: usize) -> Result<(PartitionPlan, Signal, Signal)> {
    let s = &cfg.search;
    let plan = PartitionPlan::new(s.v_limits.0, s.v_limits.1, n, s.chirp.duration)?;
    let input = generate_probing_signal(&plan, &s.chirp)?;
    let mut params = cfg.plant_params();
    params.output = OutputChannel::Reactive;
    let p = Signal::constant(s.p_avail, input.len(), input.sample_rate())?;
    let response = simulate_plant(&input, &p, &params, s.plant_dt)?.output;
    Ok((plan, input, response))
}

fn probe(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (_, input, response) = probing_experiment(cfg, cfg.search.n_max)?;
    write_signal_csv(out.join("probe_input.csv"), &input, "value_pu")?;
    write_signal_csv(out.join("probe_response.csv"), &response, "i_out_A")?;
    println!(
        "probe: {} partitions, {:.1} s, {} samples -> {}",
        cfg.search.n_max,
        input.duration(),
        input.len(),
        out.display()
    );
    Ok(())
}

fn fit(cfg: &RunConfig, out: &Path, files: Option<(&Path, &Path)>) -> Result<()> {
    let plant = cfg.plant_params();
    let model = match files {
        Some((input_path, response_path)) => {
            let input = read_signal_csv(input_path)?;
            let response = read_signal_csv(response_path)?;
            let sps = cfg.search.chirp.samples_per_sweep()?;
            if input.is_empty() || input.len() % sps != 0 {
                return Err(Error::InvalidArgument(format!(
                    "{} samples is not a whole number of {sps}-sample sweeps",
                    input.len()
                )));
            }
            let n = input.len() / sps;
            let s = &cfg.search;
            let plan = PartitionPlan::new(s.v_limits.0, s.v_limits.1, n, s.chirp.duration)?;
            let ev = identify_ranges(&plan, &input, &response, s)?;
            println!(
                "fit: {n} ranges from recorded data, held-out fit {:.4} %",
                ev.overall_fit
            );
            ev.model
        }
        None => {
            let search = binary_search_partitions(&cfg.search, &plant)?;
            write_search_trace(out.join("search_trace.csv"), &search.trace)?;
            println!(
                "fit: {} ranges after {} evaluations, held-out fit {:.4} %{}",
                search.n_star,
                search.trace.len(),
                search.model.overall_fit,
                if search.check {
                    ""
                } else {
                    " (requirement not met)"
                }
            );
            search.model
        }
    };
    let active = identify_active_channel(&cfg.search, &plant)?;
    for (k, r) in model.ranges.iter().enumerate() {
        info!(
            "range {:>2} [{:.4}, {:.4}]: n = {}, m = {}, fit {:.3} %",
            k + 1,
            r.v_lo,
            r.v_hi,
            r.model.tf.n(),
            r.model.tf.m(),
            r.report.fit_percent
        );
    }
    let store = ModelStore::new(cfg.digest(), &[(REACTIVE, &model), (ACTIVE, &active)]);
    let path = out.join("model.json");
    store.save(&path)?;
    println!("model store -> {}", path.display());
    Ok(())
}

fn stored_reactive(cfg: &RunConfig, path: &Path) -> Result<PartitionedModel> {
    let model = ModelStore::load(path)?.get(REACTIVE)?;
    let (lo, hi) = cfg.search.v_limits;
    let (model_lo, model_hi) = model.limits();
    if (model_lo - lo).abs() > 1e-12 || (model_hi - hi).abs() > 1e-12 {
        return Err(Error::LimitMismatch {
            model_lo,
            model_hi,
            lo,
            hi,
        });
    }
    Ok(model)
}

fn validate(cfg: &RunConfig, out: &Path, model_path: &Path, scenario: Scenario) -> Result<()> {
    let model = stored_reactive(cfg, model_path)?;
    let plant = cfg.plant_params();
    match scenario {
        Scenario::Steps => {
            let cases = run_step_suite(&model, &plant, cfg.search.plant_dt)?;
            let mut from = Vec::new();
            let mut to = Vec::new();
            let mut nrmse = Vec::new();
            let mut jump = Vec::new();
            for (k, c) in cases.iter().enumerate() {
                write_step_case(out.join(format!("step_{}.csv", k + 1)), c)?;
                println!(
                    "step {} {:.2} -> {:.2} p.u.: nrmse {:.3} %, largest jump {:.2} % of amplitude",
                    k + 1,
                    c.v_from,
                    c.v_to,
                    c.nrmse_percent,
                    100.0 * c.max_jump_fraction
                );
                from.push(c.v_from);
                to.push(c.v_to);
                nrmse.push(c.nrmse_percent);
                jump.push(100.0 * c.max_jump_fraction);
            }
            write_columns(
                out.join("validate_steps.csv"),
                &["v_from_pu", "v_to_pu", "nrmse_percent", "max_jump_percent"],
                &[&from, &to, &nrmse, &jump],
            )
        }
        Scenario::Chirp => {
            let (_, input, response) = probing_experiment(cfg, model.len())?;
            let replay = simulate_partitioned(&model, &input)?;
            let floor = AMPLITUDE_FLOOR * plant.rated_current();
            let report = fit_report_with_spread(
                response.values(),
                replay.values(),
                model.max_order(),
                floor,
            )?;
            let t: Vec<f64> = input.timestamps().collect();
            write_columns(
                out.join("chirp_overlay.csv"),
                &["time_s", "v_pu", "i_detailed_A", "i_partitioned_A"],
                &[&t, input.values(), response.values(), replay.values()],
            )?;
            println!(
                "chirp replay: fit {:.4} % (stored held-out fit {:.4} %), nrmse {:.6}, adj R2 {:.6}, AICc {:.3}, BIC {:.3}",
                report.fit_percent, model.overall_fit, report.nrmse, report.adj_r2, report.aicc, report.bic
            );
            Ok(())
        }
    }
}

fn device_models(cfg: &RunConfig, store: Option<&Path>) -> Result<DeviceModels> {
    match store {
        Some(path) => {
            let store = ModelStore::load(path)?;
            Ok(DeviceModels {
                reactive: stored_reactive(cfg, path)?,
                active: store.get(ACTIVE)?,
            })
        }
        None => {
            info!("no model store given; identifying device models");
            let plant = cfg.plant_params();
            Ok(DeviceModels {
                reactive: binary_search_partitions(&cfg.search, &plant)?.model,
                active: identify_active_channel(&cfg.search, &plant)?,
            })
        }
    }
}

fn simulate(
    cfg: &RunConfig,
    out: &Path,
    mode: GsfMode,
    binding: Binding,
    store: Option<&Path>,
) -> Result<()> {
    let case = cfg.feeder.to_case()?;
    let profiles = cfg.load_profiles()?;
    let models = match binding {
        Binding::Partitioned => Some(device_models(cfg, store)?),
        Binding::Detailed => None,
    };
    let opts = cfg.timeseries_options(mode, binding);
    let result = run_timeseries(&case, &profiles, &opts, models.as_ref())?;
    let dir = out.join(format!("{mode}_{binding}"));
    result.write_csv(&dir)?;
    let far = case.houses.len() - 1;
    let (v, t) = result.peak_voltage(far);
    println!(
        "simulate {mode}/{binding}: {} steps in {:.2} s, H{} peak {:.5} p.u. at {:.0} s -> {}",
        result.time.len(),
        result.wall_time_s,
        far + 1,
        v,
        t,
        dir.display()
    );
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let case = cfg.feeder.to_case()?;
    let path = out.join("load_sweep.csv");
    let s = run_load_sweep_report(&case, &path)?;
    let first = &s.voltages[0];
    println!(
        "sweep: {} points, at {} kW the far house sits at {:.4} p.u. -> {}",
        s.net_load.len(),
        s.net_load[0],
        first[first.len() - 1],
        path.display()
    );
    Ok(())
}

fn bench(cfg: &RunConfig, out: &Path, repeats: usize) -> Result<()> {
    let plant = cfg.plant_params();
    let single = run_single_house_validation(&cfg.search, &plant)?;
    single.write_traces(out.join("single_house"))?;
    let models = DeviceModels {
        reactive: single.search.model.clone(),
        active: identify_active_channel(&cfg.search, &plant)?,
    };
    let case = cfg.feeder.to_case()?;
    let profiles = cfg.load_profiles()?;
    let mut results = vec![single.result.clone()];
    for mode in [GsfMode::NoGsf, GsfMode::VoltVar] {
        let opts = cfg.timeseries_options(mode, Binding::Detailed);
        let cmp = run_feeder_comparison(&case, &profiles, &models, &opts, repeats)?;
        cmp.write_traces(out.join("feeder"))?;
        results.push(cmp.result);
    }
    run_load_sweep_report(&case, out.join("load_sweep.csv"))?;
    write_bench_csv(out.join("bench.csv"), &results)?;
    print!("{}", format_summary(&results));
    println!(
        "replay fit of the probing signal: {:.4} %",
        single.replay_fit
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(
            main_with_args(["gridfit", "simulate", "--mode", "volt-var"]),
            ExitCode::from(2)
        );
        assert_eq!(main_with_args(["gridfit", "frobnicate"]), ExitCode::from(2));
        assert_eq!(main_with_args(["gridfit", "--help"]), ExitCode::SUCCESS);
    }

    #[test]
    fn config_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        std::fs::write(&cfg, "[search]\nn_min = 9\nn_max = 3\n").unwrap();
        let code = main_with_args([
            "gridfit".as_ref(),
            "sweep".as_ref(),
            "--config".as_ref(),
            cfg.as_os_str(),
            "--out".as_ref(),
            dir.path().as_os_str(),
        ]);
        assert_eq!(code, ExitCode::from(2));
    }

    #[test]
    fn sweep_writes_thirteen_columns() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("fresh");
        let code = main_with_args([
            "gridfit".as_ref(),
            "sweep".as_ref(),
            "--out".as_ref(),
            out.as_os_str(),
        ]);
        assert_eq!(code, ExitCode::SUCCESS);
        let t = crate::io::read_table(out.join("load_sweep.csv")).unwrap();
        assert_eq!(t.headers.len(), 13);
    }

    #[test]
    fn modes_parse() {
        let cli = Cli::try_parse_from([
            "gridfit",
            "simulate",
            "--mode",
            "no_gsf",
            "--binding",
            "partitioned",
        ])
        .unwrap();
        match cli.command {
            Command::Simulate { mode, binding, .. } => {
                assert_eq!(GsfMode::from(mode), GsfMode::NoGsf);
                assert_eq!(Binding::from(binding), Binding::Partitioned);
            }
            other => panic!("{other:?}"),
        }
    }
}
