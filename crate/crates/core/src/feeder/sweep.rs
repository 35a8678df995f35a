use std::path::Path;

use super::network::Ladder;
use super::FeederCase;
use crate::error::{Error, Result};

/// House voltages against total net load (kW, positive = consumption).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSweep {
    pub net_load: Vec<f64>,
    /// `voltages[step][house]`, p.u.
    pub voltages: Vec<Vec<f64>>,
}

impl LoadSweep {
    /// Voltage trace of one house across the sweep.
    pub fn house(&self, h: usize) -> Vec<f64> {
        self.voltages.iter().map(|row| row[h]).collect()
    }
}

/// Spread a total net load evenly over the houses at unity power factor and
/// solve each point. No device control is applied.
pub fn load_sweep(case: &FeederCase, p_range: (f64, f64), steps: usize) -> Result<LoadSweep> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 sweep points, got {steps}"
        )));
    }
    let (lo, hi) = p_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "bad load range [{lo}, {hi}]"
        )));
    }
    let mut ladder = Ladder::new(case)?;
    let n = case.houses.len();
    let mut net_load = Vec::with_capacity(steps);
    let mut voltages = Vec::with_capacity(steps);
    for k in 0..steps {
        let total = if k == steps - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (steps - 1) as f64
        };
        let inj = vec![(-total / n as f64, 0.0); n];
        let mut v = ladder.flat_start();
        ladder.solve(&inj, &mut v)?;
        net_load.push(total);
        voltages.push(v.iter().map(|z| z.norm()).collect());
    }
    Ok(LoadSweep { net_load, voltages })
}

/// One row per sweep point: net load then one voltage column per house.
pub fn write_load_sweep<P: AsRef<Path>>(path: P, sweep: &LoadSweep) -> Result<()> {
    let n = sweep.voltages.first().map_or(0, Vec::len);
    let names: Vec<String> = (1..=n).map(|h| format!("h{h}_v_pu")).collect();
    let mut headers = vec!["net_load_kw"];
    headers.extend(names.iter().map(String::as_str));
    let cols: Vec<Vec<f64>> = (0..n).map(|h| sweep.house(h)).collect();
    let mut refs: Vec<&[f64]> = vec![&sweep.net_load];
    refs.extend(cols.iter().map(Vec::as_slice));
    crate::io::write_columns(path, &headers, &refs)
}
