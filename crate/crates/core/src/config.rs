//! Run configuration read from a TOML document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::feeder::{
    ingest_profiles, synthetic_day, Binding, FeederCase, GsfMode, House, LineSegment, Profiles,
    Stratum, TimeseriesOptions, TransformerModel, ZipCoefficients,
};
use crate::partition::SearchConfig;
use crate::plant::PlantParams;

/// Feeder geometry and loading in compact form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeederConfig {
    pub houses: usize,
    pub houses_per_tap: usize,
    /// Backbone span between taps, m.
    pub span_m: f64,
    /// Service drop length, m.
    pub drop_m: f64,
    pub source_voltage: f64,
    pub transformer_in_series: bool,
    pub loop_factor: f64,
    pub s_base: f64,
    pub v_base: f64,
    pub frequency: f64,
    pub stratum: Stratum,
    /// Overrides the stratum coefficients when present.
    pub zip: Option<ZipCoefficients>,
    pub pv_area: f64,
    pub pv_efficiency: f64,
    pub transformer: TransformerModel,
    pub load_power_factor: f64,
    /// Network coupling step, s.
    pub coupling_step: f64,
}

impl Default for FeederConfig {
    fn default() -> Self {
        Self {
            houses: 12,
            houses_per_tap: 2,
            span_m: 20.0,
            drop_m: 20.0,
            source_voltage: 1.02,
            transformer_in_series: false,
            loop_factor: 2.0,
            s_base: 75.0,
            v_base: 240.0,
            frequency: 60.0,
            stratum: Stratum::D,
            zip: None,
            pv_area: 50.2605,
            pv_efficiency: 0.167,
            transformer: TransformerModel::default(),
            load_power_factor: 0.95,
            coupling_step: 1.0,
        }
    }
}

impl FeederConfig {
    pub fn to_case(&self) -> Result<FeederCase> {
        if self.houses == 0 || self.houses_per_tap == 0 {
            return Err(Error::Config(
                "houses and houses_per_tap must be positive".into(),
            ));
        }
        let taps = self.houses.div_ceil(self.houses_per_tap);
        let zip = self.zip.unwrap_or_else(|| self.stratum.coefficients());
        let case = FeederCase {
            transformer: self.transformer,
            backbone: vec![LineSegment::backbone(self.span_m / 1000.0); taps - 1],
            houses: (0..self.houses)
                .map(|h| House {
                    tap: h / self.houses_per_tap,
                    drop: LineSegment::drop_line(self.drop_m / 1000.0),
                    zip,
                    pv_area: self.pv_area,
                    pv_efficiency: self.pv_efficiency,
                })
                .collect(),
            source_voltage: self.source_voltage,
            transformer_in_series: self.transformer_in_series,
            loop_factor: self.loop_factor,
            s_base: self.s_base,
            v_base: self.v_base,
            frequency: self.frequency,
        };
        case.validate()
            .map_err(|e| Error::Config(format!("feeder: {e}")))?;
        Ok(case)
    }
}

/// Load and irradiance files. When both are absent a built-in clear-sky
/// day is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilePaths {
    pub load: Option<PathBuf>,
    pub irradiance: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub plant: PlantParams,
    pub search: SearchConfig,
    pub feeder: FeederConfig,
    pub profiles: ProfilePaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            plant: PlantParams::default(),
            search: SearchConfig::default(),
            feeder: FeederConfig::default(),
            profiles: ProfilePaths::default(),
        }
    }
}

impl RunConfig {
    /// Parse and validate; relative profile paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in [&mut cfg.profiles.load, &mut cfg.profiles.irradiance]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |what: &str, e: Error| Error::Config(format!("{what}: {e}"));
        self.plant.validate().map_err(|e| wrap("plant", e))?;
        self.search.validate().map_err(|e| wrap("search", e))?;
        self.feeder.to_case()?;
        let f = &self.feeder;
        if !(f.load_power_factor > 0.0 && f.load_power_factor <= 1.0) {
            return Err(Error::Config(
                "feeder.load_power_factor must be in (0, 1]".into(),
            ));
        }
        if !(f.coupling_step > 0.0) {
            return Err(Error::Config(
                "feeder.coupling_step must be positive".into(),
            ));
        }
        match (&self.profiles.load, &self.profiles.irradiance) {
            (None, None) => {}
            (Some(l), Some(i)) => {
                for p in [l, i] {
                    if !p.exists() {
                        return Err(Error::Config(format!(
                            "profile file {} does not exist",
                            p.display()
                        )));
                    }
                }
            }
            _ => return Err(Error::Config("give both profile files or neither".into())),
        }
        Ok(())
    }

    /// Plant parameters with the run seed applied to the noise injector.
    pub fn plant_params(&self) -> PlantParams {
        let mut p = self.plant;
        if let Some(noise) = p.noise.as_mut() {
            noise.seed = self.seed;
        }
        p
    }

    /// Profiles at the coupling step.
    pub fn load_profiles(&self) -> Result<Profiles> {
        let dt = self.feeder.coupling_step;
        match (&self.profiles.load, &self.profiles.irradiance) {
            (Some(l), Some(i)) => ingest_profiles(l, i, dt),
            _ => synthetic_day(self.feeder.houses).resample(dt),
        }
    }

    pub fn timeseries_options(&self, mode: GsfMode, binding: Binding) -> TimeseriesOptions {
        TimeseriesOptions {
            mode,
            binding,
            plant: self.plant_params(),
            plant_dt: self.search.plant_dt,
            load_power_factor: self.feeder.load_power_factor,
            ..TimeseriesOptions::default()
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_toml_str("", Path::new(".")).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.feeder.to_case().unwrap(), FeederCase::twelve_house());
    }

    #[test]
    fn partial_tables_and_overrides() {
        let text = r#"
            seed = 7
            [plant]
            s_rating = 10.0
            noise = { amplitude = 0.1, seed = 1 }
            [plant.curve]
            q1 = 5.0
            q4 = -5.0
            [search]
            n_max = 8
            v_limits = [0.9, 1.1]
            [search.chirp]
            f1 = 16.0
            [feeder]
            stratum = "B"
        "#;
        let cfg = RunConfig::from_toml_str(text, Path::new(".")).unwrap();
        assert_eq!(cfg.plant.s_rating, 10.0);
        assert_eq!(cfg.plant.curve.v3, 1.02);
        assert_eq!(cfg.search.chirp.f1, 16.0);
        assert_eq!(cfg.search.v_limits, (0.9, 1.1));
        assert_eq!(cfg.plant_params().noise.unwrap().seed, 7);
        assert_eq!(
            cfg.feeder.to_case().unwrap().houses[0].zip,
            Stratum::B.coefficients()
        );
    }

    #[test]
    fn invalid_documents_are_config_errors() {
        for text in [
            "bogus = 1",
            "[search]\nn_min = 5\nn_max = 2",
            "[plant.curve]\nv1 = 1.5",
            "[feeder]\nstratum = \"A\"",
            "[profiles]\nload = \"missing.csv\"\nirradiance = \"missing.csv\"",
            "[profiles]\nload = \"missing.csv\"",
            "seed = \"x\"",
        ] {
            assert!(
                matches!(
                    RunConfig::from_toml_str(text, Path::new(".")),
                    Err(Error::Config(_))
                ),
                "{text}"
            );
        }
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
