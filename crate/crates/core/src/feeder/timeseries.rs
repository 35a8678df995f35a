use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::network::Ladder;
use super::profiles::{pv_available_power, Profiles};
use super::zip::{zip_power, ZipLoad};
use super::FeederCase;
use crate::error::{Error, Result};
use crate::partition::{PartitionedFilter, PartitionedModel};
use crate::plant::{Plant, PlantParams, PlantState};

/// Grid support function applied by every inverter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GsfMode {
    NoGsf,
    #[default]
    VoltVar,
}

impl FromStr for GsfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_gsf" => Ok(Self::NoGsf),
            "volt_var" => Ok(Self::VoltVar),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected no_gsf or volt_var)"
            ))),
        }
    }
}

impl fmt::Display for GsfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoGsf => "no_gsf",
            Self::VoltVar => "volt_var",
        })
    }
}

/// Which inverter model each house runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    #[default]
    Detailed,
    Partitioned,
}

impl FromStr for Binding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detailed" => Ok(Self::Detailed),
            "partitioned" => Ok(Self::Partitioned),
            other => Err(Error::Config(format!(
                "unknown binding {other:?} (expected detailed or partitioned)"
            ))),
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Detailed => "detailed",
            Self::Partitioned => "partitioned",
        })
    }
}

/// Reduced models used by the partitioned binding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModels {
    /// Terminal voltage (p.u.) to reactive current (A).
    pub reactive: PartitionedModel,
    /// Available power (kW) to delivered active power (kW) at nominal voltage.
    pub active: PartitionedModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesOptions {
    pub mode: GsfMode,
    pub binding: Binding,
    /// Inverter parameters shared by all houses; `volt_var` is set from `mode`.
    pub plant: PlantParams,
    /// Device integration step for the detailed binding, s.
    pub plant_dt: f64,
    /// Load power factor (lagging).
    pub load_power_factor: f64,
    pub max_iterations: usize,
    /// Voltage change that ends the device/network iteration, p.u.
    pub tolerance: f64,
}

impl Default for TimeseriesOptions {
    fn default() -> Self {
        Self {
            mode: GsfMode::VoltVar,
            binding: Binding::Detailed,
            plant: PlantParams::default(),
            plant_dt: 1e-3,
            load_power_factor: 0.95,
            max_iterations: 10,
            tolerance: 1e-6,
        }
    }
}

/// Per-house traces, one sample per coupling step; `x[house][step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesResult {
    pub time: Vec<f64>,
    pub voltage: Vec<Vec<f64>>,
    /// Inverter current magnitude, A.
    pub current: Vec<Vec<f64>>,
    /// Inverter active power, kW.
    pub p_kw: Vec<Vec<f64>>,
    /// Inverter reactive power, kVAr (positive = injecting).
    pub q_kvar: Vec<Vec<f64>>,
    pub secondary: Vec<f64>,
    /// Steps whose device/network iteration hit the cap.
    pub unconverged_steps: usize,
    /// Device stepping plus network solves, s.
    pub wall_time_s: f64,
}

impl TimeseriesResult {
    /// Largest voltage of house `h` and the time it occurs.
    pub fn peak_voltage(&self, h: usize) -> (f64, f64) {
        self.voltage[h]
            .iter()
            .zip(&self.time)
            .fold((f64::NEG_INFINITY, 0.0), |acc, (&v, &t)| {
                if v > acc.0 {
                    (v, t)
                } else {
                    acc
                }
            })
    }

    /// Write voltage, current and reactive power traces, one file each.
    pub fn write_csv<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        let n = self.voltage.len();
        for (name, unit, data) in [
            ("voltage.csv", "v_pu", &self.voltage),
            ("current.csv", "i_A", &self.current),
            ("reactive.csv", "q_kvar", &self.q_kvar),
        ] {
            let names: Vec<String> = (1..=n).map(|h| format!("h{h}_{unit}")).collect();
            let mut headers = vec!["time_s"];
            headers.extend(names.iter().map(String::as_str));
            let mut cols: Vec<&[f64]> = vec![&self.time];
            cols.extend(data.iter().map(Vec::as_slice));
            crate::io::write_columns(dir.join(name), &headers, &cols)?;
        }
        Ok(())
    }
}

#[allow(clippy::large_enum_variant)]
enum Device<'a> {
    Detailed {
        plant: &'a Plant,
        state: PlantState,
    },
    Partitioned {
        reactive: Option<PartitionedFilter<'a>>,
        active: PartitionedFilter<'a>,
    },
}

/// Inverter currents (A) after one coupling step.
struct Currents {
    i_d: f64,
    i_q: f64,
}

impl Device<'_> {
    fn advance(
        &mut self,
        v: f64,
        p_avail: f64,
        substeps: usize,
        s_rating: f64,
        v_base: f64,
    ) -> Currents {
        match self {
            Device::Detailed { plant, state } => {
                plant.advance(state, v, p_avail, substeps);
                Currents {
                    i_d: state.i_d,
                    i_q: state.i_q,
                }
            }
            Device::Partitioned { reactive, active } => {
                let per_volt = 1000.0 / (v * v_base);
                let p = active.step_hold(p_avail, substeps).clamp(0.0, s_rating);
                let i_q = match reactive {
                    Some(f) => {
                        let cap = (s_rating * s_rating - p * p).max(0.0).sqrt() * per_volt;
                        f.step_hold(v, substeps).clamp(-cap, cap)
                    }
                    None => 0.0,
                };
                Currents {
                    i_d: p * per_volt,
                    i_q,
                }
            }
        }
    }
}

fn substeps(step: f64, dt: f64) -> Result<usize> {
    let ratio = step / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-6 * ratio {
        return Err(Error::InvalidArgument(format!(
            "coupling step {step} s is not a whole number of device steps of {dt} s"
        )));
    }
    Ok(n as usize)
}

/// Quasi-static run over the profiles: each coupling step advances every
/// inverter with the previous step's voltage, then iterates injections and
/// the network solve until the voltages settle.
pub fn run_timeseries(
    case: &FeederCase,
    profiles: &Profiles,
    opts: &TimeseriesOptions,
    models: Option<&DeviceModels>,
) -> Result<TimeseriesResult> {
    profiles.validate()?;
    let n_houses = case.houses.len();
    if profiles.loads.len() != n_houses {
        return Err(Error::Coverage(format!(
            "{} load series for {} houses",
            profiles.loads.len(),
            n_houses
        )));
    }
    if !(opts.load_power_factor > 0.0 && opts.load_power_factor <= 1.0) {
        return Err(Error::InvalidArgument(
            "load power factor must be in (0, 1]".into(),
        ));
    }
    if opts.max_iterations == 0 || !(opts.tolerance > 0.0) {
        return Err(Error::InvalidArgument(
            "need at least one iteration and a positive tolerance".into(),
        ));
    }
    let mut params = opts.plant;
    params.volt_var = opts.mode == GsfMode::VoltVar;
    params.noise = None;
    params.validate()?;

    let mut ladder = Ladder::new(case)?;
    let step = profiles.dt;
    let q_ratio = opts.load_power_factor.acos().tan();
    let loads = |h: usize, k: usize| -> ZipLoad {
        let p0 = profiles.loads[h][k];
        ZipLoad {
            p0,
            q0: p0 * q_ratio,
            coeffs: case.houses[h].zip,
            v0: 1.0,
        }
    };
    let p_avail = |h: usize, k: usize| -> f64 {
        let house = &case.houses[h];
        pv_available_power(profiles.irradiance[k], house.pv_efficiency, house.pv_area)
    };

    let plant = Plant::new(params, opts.plant_dt)?;
    let v0 = case.source_voltage;
    let (sub, mut devices): (usize, Vec<Device>) = match opts.binding {
        Binding::Detailed => (
            substeps(step, opts.plant_dt)?,
            (0..n_houses)
                .map(|h| Device::Detailed {
                    plant: &plant,
                    state: PlantState::equilibrium(v0, p_avail(h, 0), &params),
                })
                .collect(),
        ),
        Binding::Partitioned => {
            let m = models.ok_or_else(|| {
                Error::InvalidArgument("partitioned binding needs device models".into())
            })?;
            if (m.reactive.ts - m.active.ts).abs() > 1e-12 {
                return Err(Error::InvalidArgument(
                    "device models differ in sampling time".into(),
                ));
            }
            (
                substeps(step, m.active.ts)?,
                (0..n_houses)
                    .map(|h| Device::Partitioned {
                        reactive: params
                            .volt_var
                            .then(|| PartitionedFilter::new(&m.reactive, v0)),
                        active: PartitionedFilter::new(&m.active, p_avail(h, 0)),
                    })
                    .collect(),
            )
        }
    };

    let len = profiles.len();
    let mut out = TimeseriesResult {
        time: (0..len).map(|k| profiles.t0 + k as f64 * step).collect(),
        voltage: vec![Vec::with_capacity(len); n_houses],
        current: vec![Vec::with_capacity(len); n_houses],
        p_kw: vec![Vec::with_capacity(len); n_houses],
        q_kvar: vec![Vec::with_capacity(len); n_houses],
        secondary: Vec::with_capacity(len),
        unconverged_steps: 0,
        wall_time_s: 0.0,
    };

    let mut v: Vec<Complex64> = ladder.flat_start();
    let mut v_prev: Vec<f64> = vec![v0; n_houses];
    let mut currents: Vec<Currents> = Vec::with_capacity(n_houses);
    let mut inj = vec![(0.0, 0.0); n_houses];
    let (s_rating, v_base) = (params.s_rating, params.v_base);
    let started = Instant::now();
    for k in 0..len {
        currents.clear();
        for (h, dev) in devices.iter_mut().enumerate() {
            currents.push(dev.advance(v_prev[h], p_avail(h, k), sub, s_rating, v_base));
        }
        let mut settled = false;
        for _ in 0..opts.max_iterations {
            for (h, c) in currents.iter().enumerate() {
                let mag = v[h].norm();
                let (pl, ql) = zip_power(&loads(h, k), mag);
                let scale = mag * v_base / 1000.0;
                inj[h] = (c.i_d * scale - pl, c.i_q * scale - ql);
            }
            let before: Vec<f64> = v.iter().map(|z| z.norm()).collect();
            ladder.solve(&inj, &mut v).map_err(|e| match e {
                Error::Divergence {
                    iterations,
                    mismatch,
                    ..
                } => Error::Divergence {
                    iterations,
                    mismatch,
                    time: Some(out.time[k]),
                },
                other => other,
            })?;
            let change = v
                .iter()
                .zip(&before)
                .map(|(z, b)| (z.norm() - b).abs())
                .fold(0.0, f64::max);
            if change < opts.tolerance {
                settled = true;
                break;
            }
        }
        if !settled {
            out.unconverged_steps += 1;
        }
        for (h, c) in currents.iter().enumerate() {
            let mag = v[h].norm();
            let scale = mag * v_base / 1000.0;
            out.voltage[h].push(mag);
            out.current[h].push(c.i_d.hypot(c.i_q));
            out.p_kw[h].push(c.i_d * scale);
            out.q_kvar[h].push(c.i_q * scale);
            v_prev[h] = mag;
        }
        out.secondary.push(ladder.secondary().norm());
    }
    out.wall_time_s = started.elapsed().as_secs_f64();
    if out.unconverged_steps > 0 {
        log::warn!(
            "{} of {len} steps reached the {}-iteration cap",
            out.unconverged_steps,
            opts.max_iterations
        );
    }
    Ok(out)
}
