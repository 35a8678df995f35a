use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::io::{read_table, write_columns, Table};

/// Available PV power in kW for irradiance in W/m².
#[inline]
pub fn pv_available_power(irradiance: f64, efficiency: f64, area: f64) -> f64 {
    efficiency * irradiance.max(0.0) * area / 1000.0
}

/// Uniformly sampled load and irradiance series starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub t0: f64,
    pub dt: f64,
    /// W/m².
    pub irradiance: Vec<f64>,
    /// Per-house demand, kW; `loads[h][k]`.
    pub loads: Vec<Vec<f64>>,
}

impl Profiles {
    pub fn len(&self) -> usize {
        self.irradiance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irradiance.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.len().saturating_sub(1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.is_empty() {
            return Err(Error::InvalidArgument(
                "profiles need a positive step and at least one sample".into(),
            ));
        }
        if self.loads.iter().any(|l| l.len() != self.len()) {
            return Err(Error::Coverage(
                "load and irradiance series differ in length".into(),
            ));
        }
        crate::error::ensure_finite("irradiance profile", &self.irradiance)?;
        for l in &self.loads {
            crate::error::ensure_finite("load profile", l)?;
        }
        Ok(())
    }

    /// Linear resampling onto a new step over the same horizon.
    pub fn resample(&self, target_dt: f64) -> Result<Self> {
        self.validate()?;
        let times: Vec<f64> = (0..self.len())
            .map(|k| self.t0 + k as f64 * self.dt)
            .collect();
        let t1 = times[times.len() - 1];
        let grid = grid(self.t0, t1, target_dt)?;
        Ok(Self {
            t0: self.t0,
            dt: target_dt,
            irradiance: interpolate(&times, &self.irradiance, &grid),
            loads: self
                .loads
                .iter()
                .map(|l| interpolate(&times, l, &grid))
                .collect(),
        })
    }
}

fn grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target step {dt} must be positive"
        )));
    }
    let n = ((t1 - t0) / dt + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| t0 + k as f64 * dt).collect())
}

/// Piecewise-linear interpolation of `(xs, ys)` at sorted `query` points
/// inside `[xs[0], xs[last]]`.
fn interpolate(xs: &[f64], ys: &[f64], query: &[f64]) -> Vec<f64> {
    let mut j = 0;
    query
        .iter()
        .map(|&t| {
            while j + 2 < xs.len() && xs[j + 1] <= t {
                j += 1;
            }
            if xs.len() == 1 {
                return ys[0];
            }
            let (x0, x1) = (xs[j], xs[j + 1]);
            let w = ((t - x0) / (x1 - x0)).clamp(0.0, 1.0);
            ys[j] + w * (ys[j + 1] - ys[j])
        })
        .collect()
}

fn check_times(path: &Path, table: &Table) -> Result<Vec<f64>> {
    let t = table.columns[0].clone();
    if t.is_empty() {
        return Err(Error::Coverage(format!("{} has no rows", path.display())));
    }
    for (i, w) in t.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Parse {
                path: path.to_owned(),
                // header is line 1, first data row line 2
                line: i as u64 + 3,
                msg: format!("timestamps must increase ({} then {})", w[0], w[1]),
            });
        }
    }
    Ok(t)
}

/// Read a load file (`time_s` then one kW column per house) and an
/// irradiance file (`time_s`, W/m²), and resample both to `target_dt` over
/// the load file's horizon. The irradiance file must cover that horizon.
pub fn ingest_profiles<P: AsRef<Path>, Q: AsRef<Path>>(
    load_csv: P,
    irradiance_csv: Q,
    target_dt: f64,
) -> Result<Profiles> {
    let (load_path, irr_path) = (load_csv.as_ref(), irradiance_csv.as_ref());
    let loads = read_table(load_path)?;
    let irr = read_table(irr_path)?;
    if loads.headers.len() < 2 {
        return Err(Error::Parse {
            path: load_path.to_owned(),
            line: 1,
            msg: "need a time column and at least one load column".into(),
        });
    }
    if irr.headers.len() != 2 {
        return Err(Error::Parse {
            path: irr_path.to_owned(),
            line: 1,
            msg: format!("expected 2 columns, found {}", irr.headers.len()),
        });
    }
    let t_load = check_times(load_path, &loads)?;
    let t_irr = check_times(irr_path, &irr)?;
    let (t0, t1) = (t_load[0], t_load[t_load.len() - 1]);
    let tol = 1e-9 * t1.abs().max(1.0);
    if t_irr[0] > t0 + tol || t_irr[t_irr.len() - 1] < t1 - tol {
        return Err(Error::Coverage(format!(
            "irradiance spans [{}, {}] s but loads span [{t0}, {t1}] s",
            t_irr[0],
            t_irr[t_irr.len() - 1]
        )));
    }
    let mut irradiance = irr.columns[1].clone();
    let negatives = irradiance.iter().filter(|v| **v < 0.0).count();
    if negatives > 0 {
        warn!(
            "{}: {negatives} negative irradiance values clamped to 0",
            irr_path.display()
        );
        for v in irradiance.iter_mut() {
            *v = v.max(0.0);
        }
    }
    let grid = grid(t0, t1, target_dt)?;
    Ok(Profiles {
        t0,
        dt: target_dt,
        irradiance: interpolate(&t_irr, &irradiance, &grid),
        loads: loads.columns[1..]
            .iter()
            .map(|l| interpolate(&t_load, l, &grid))
            .collect(),
    })
}

/// Write profiles in the format read by [`ingest_profiles`].
pub fn write_profiles<P: AsRef<Path>, Q: AsRef<Path>>(
    profiles: &Profiles,
    load_csv: P,
    irradiance_csv: Q,
) -> Result<()> {
    profiles.validate()?;
    let t: Vec<f64> = (0..profiles.len())
        .map(|k| profiles.t0 + k as f64 * profiles.dt)
        .collect();
    write_columns(
        irradiance_csv,
        &["time_s", "irradiance_w_m2"],
        &[&t, &profiles.irradiance],
    )?;
    let names: Vec<String> = (1..=profiles.loads.len())
        .map(|h| format!("h{h}_kw"))
        .collect();
    let mut headers = vec!["time_s"];
    headers.extend(names.iter().map(String::as_str));
    let mut cols: Vec<&[f64]> = vec![&t];
    cols.extend(profiles.loads.iter().map(Vec::as_slice));
    write_columns(load_csv, &headers, &cols)
}

/// Hourly clear-sky irradiance and residential demand for `houses` houses
/// over one day (25 samples, midnight to midnight).
pub fn synthetic_day(houses: usize) -> Profiles {
    const PEAK: f64 = 950.0;
    const SUNRISE: f64 = 5.5;
    const SUNSET: f64 = 19.5;
    // kW per house, hours 0..=24
    const DEMAND: [f64; 25] = [
        0.28, 0.25, 0.24, 0.23, 0.23, 0.26, 0.34, 0.45, 0.42, 0.33, 0.29, 0.27, 0.26, 0.26, 0.27,
        0.29, 0.36, 0.48, 0.60, 0.66, 0.62, 0.53, 0.43, 0.34, 0.28,
    ];
    const SHARE: [f64; 6] = [1.10, 0.90, 1.05, 0.95, 1.00, 1.00];
    let irradiance = (0..25)
        .map(|h| {
            let h = h as f64;
            if h <= SUNRISE || h >= SUNSET {
                0.0
            } else {
                PEAK * (std::f64::consts::PI * (h - SUNRISE) / (SUNSET - SUNRISE))
                    .sin()
                    .powf(1.2)
            }
        })
        .collect();
    let loads = (0..houses)
        .map(|h| DEMAND.iter().map(|d| d * SHARE[h % SHARE.len()]).collect())
        .collect();
    Profiles {
        t0: 0.0,
        dt: 3600.0,
        irradiance,
        loads,
    }
}
