//! Quasi-static simulation of a radial low-voltage feeder with PV inverters.
//!
//! The network is a phasor ladder solved by backward/forward sweep; the
//! inverters are dynamic devices sub-stepped between network solves.

mod network;
mod profiles;
mod sweep;
mod timeseries;
mod zip;

pub use network::{solve_network, NetworkSolution};
pub use profiles::{ingest_profiles, pv_available_power, synthetic_day, write_profiles, Profiles};
pub use sweep::{load_sweep, write_load_sweep, LoadSweep};
pub use timeseries::{
    run_timeseries, Binding, DeviceModels, GsfMode, TimeseriesOptions, TimeseriesResult,
};
pub use zip::{zip_power, Stratum, ZipCoefficients, ZipLoad};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Backbone,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    /// km.
    pub length: f64,
    /// Ω/km.
    pub r: f64,
    /// mH/km.
    pub l: f64,
    /// µF/km; carried for completeness, not used by the solver.
    pub c: f64,
    pub kind: LineKind,
}

impl LineSegment {
    pub fn backbone(length_km: f64) -> Self {
        Self {
            length: length_km,
            r: 0.346,
            l: 0.24,
            c: 0.072,
            kind: LineKind::Backbone,
        }
    }

    pub fn drop_line(length_km: f64) -> Self {
        Self {
            length: length_km,
            r: 0.549,
            l: 0.23,
            c: 0.055,
            kind: LineKind::Drop,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !(self.r >= 0.0) || !(self.l >= 0.0) || !(self.c >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad line segment {self:?}")));
        }
        Ok(())
    }

    /// Series impedance in ohms of one conductor.
    pub fn impedance_ohm(&self, freq_hz: f64) -> Complex64 {
        let x = 2.0 * std::f64::consts::PI * freq_hz * self.l * 1e-3;
        Complex64::new(self.r, x) * self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformerModel {
    /// kVA.
    pub rating: f64,
    /// kV.
    pub v_primary: f64,
    /// V.
    pub v_secondary: f64,
    pub r1: f64,
    pub x1: f64,
    pub r2: f64,
    pub x2: f64,
    pub rm: f64,
    pub xm: f64,
}

impl Default for TransformerModel {
    fn default() -> Self {
        Self {
            rating: 75.0,
            v_primary: 14.4,
            v_secondary: 240.0,
            r1: 0.06,
            x1: 0.020,
            r2: 0.0264,
            x2: 0.0550,
            rm: 500.0,
            xm: 500.0,
        }
    }
}

impl TransformerModel {
    pub fn validate(&self) -> Result<()> {
        let z = [self.r1, self.x1, self.r2, self.x2, self.rm, self.xm];
        if !(self.rating > 0.0) || z.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("bad transformer {self:?}")));
        }
        Ok(())
    }

    /// Series impedance on the transformer's own base.
    pub fn series_pu(&self) -> Complex64 {
        Complex64::new(self.r1 + self.r2, self.x1 + self.x2)
    }
}

/// One customer connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct House {
    /// Backbone tap index; tap 0 is the transformer secondary.
    pub tap: usize,
    pub drop: LineSegment,
    pub zip: ZipCoefficients,
    /// PV array area, m².
    pub pv_area: f64,
    /// PV conversion efficiency.
    pub pv_efficiency: f64,
}

/// Network data for a feeder run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederCase {
    pub transformer: TransformerModel,
    /// Spans between consecutive taps; span `i` joins tap `i` to `i + 1`.
    pub backbone: Vec<LineSegment>,
    pub houses: Vec<House>,
    /// Regulated voltage, p.u.
    pub source_voltage: f64,
    /// Put the transformer series impedance between the regulated source
    /// and the secondary bus.
    pub transformer_in_series: bool,
    /// Conductor count in the current loop of a 240 V service.
    pub loop_factor: f64,
    /// kVA.
    pub s_base: f64,
    /// V.
    pub v_base: f64,
    pub frequency: f64,
}

impl FeederCase {
    /// Twelve houses in pairs on six taps, 20 m spans and drops.
    pub fn twelve_house() -> Self {
        let zip = Stratum::D.coefficients();
        let houses = (0..12)
            .map(|h| House {
                tap: h / 2,
                drop: LineSegment::drop_line(0.02),
                zip,
                pv_area: 50.2605,
                pv_efficiency: 0.167,
            })
            .collect();
        Self {
            transformer: TransformerModel::default(),
            backbone: vec![LineSegment::backbone(0.02); 5],
            houses,
            source_voltage: 1.02,
            transformer_in_series: false,
            loop_factor: 2.0,
            s_base: 75.0,
            v_base: 240.0,
            frequency: 60.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.transformer.validate()?;
        for seg in &self.backbone {
            seg.validate()?;
        }
        if self.houses.is_empty() {
            return Err(Error::InvalidArgument("feeder has no houses".into()));
        }
        for (i, h) in self.houses.iter().enumerate() {
            h.drop.validate()?;
            h.zip.validate()?;
            if h.tap > self.backbone.len() {
                return Err(Error::InvalidArgument(format!(
                    "house {} on tap {} but only {} taps exist",
                    i + 1,
                    h.tap,
                    self.backbone.len() + 1
                )));
            }
            if !(h.pv_area >= 0.0 && h.pv_efficiency >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "house {} PV data invalid",
                    i + 1
                )));
            }
        }
        if !(self.source_voltage > 0.0
            && self.s_base > 0.0
            && self.v_base > 0.0
            && self.frequency > 0.0)
        {
            return Err(Error::InvalidArgument(
                "source voltage and bases must be positive".into(),
            ));
        }
        if !(self.loop_factor > 0.0) {
            return Err(Error::InvalidArgument(
                "loop factor must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn z_base(&self) -> f64 {
        self.v_base * self.v_base / (self.s_base * 1000.0)
    }

    pub(crate) fn segment_pu(&self, seg: &LineSegment) -> Complex64 {
        seg.impedance_ohm(self.frequency) * self.loop_factor / self.z_base()
    }

    /// Transformer series impedance on the case base.
    pub(crate) fn transformer_pu(&self) -> Complex64 {
        self.transformer.series_pu() * (self.s_base / self.transformer.rating)
    }

    pub fn n_taps(&self) -> usize {
        self.backbone.len() + 1
    }
}
