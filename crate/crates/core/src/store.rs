//! Versioned JSON store for fitted partitioned models.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! document that is loaded and saved again is byte-identical.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{PartitionedModel, RangeModel};
use crate::sysid::{DiscreteTransferFunction, FitReport, LocalModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// SHA-256 of the run configuration.
    pub config_sha256: String,
    /// Seconds since the Unix epoch.
    pub created_unix_s: u64,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredRange {
    pub v_lo: f64,
    pub v_hi: f64,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub u_offset: f64,
    pub y_offset: f64,
    pub ts: f64,
    pub fit_percent: f64,
    pub nrmse: f64,
    #[serde(with = "lenient")]
    pub aicc: f64,
    #[serde(with = "lenient")]
    pub bic: f64,
    #[serde(with = "lenient")]
    pub adj_r2: f64,
    pub n_params: usize,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredModel {
    pub name: String,
    pub limits: (f64, f64),
    pub overall_fit: f64,
    pub ts: f64,
    pub ranges: Vec<StoredRange>,
}

impl StoredModel {
    pub fn from_model(name: &str, model: &PartitionedModel) -> Self {
        Self {
            name: name.to_owned(),
            limits: model.limits(),
            overall_fit: model.overall_fit,
            ts: model.ts,
            ranges: model
                .ranges
                .iter()
                .map(|r| StoredRange {
                    v_lo: r.v_lo,
                    v_hi: r.v_hi,
                    b: r.model.tf.b.clone(),
                    a: r.model.tf.a.clone(),
                    u_offset: r.model.u_offset,
                    y_offset: r.model.y_offset,
                    ts: r.model.tf.ts,
                    fit_percent: r.report.fit_percent,
                    nrmse: r.report.nrmse,
                    aicc: r.report.aicc,
                    bic: r.report.bic,
                    adj_r2: r.report.adj_r2,
                    n_params: r.report.n_params,
                    n_points: r.report.n_points,
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<PartitionedModel> {
        let ranges = self
            .ranges
            .iter()
            .map(|r| {
                Ok(RangeModel {
                    v_lo: r.v_lo,
                    v_hi: r.v_hi,
                    model: LocalModel {
                        tf: DiscreteTransferFunction::new(r.b.clone(), r.a.clone(), r.ts)?,
                        u_offset: r.u_offset,
                        y_offset: r.y_offset,
                    },
                    report: FitReport {
                        fit_percent: r.fit_percent,
                        nrmse: r.nrmse,
                        adj_r2: r.adj_r2,
                        aicc: r.aicc,
                        bic: r.bic,
                        n_params: r.n_params,
                        n_points: r.n_points,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = PartitionedModel::new(ranges, self.overall_fit)?;
        if model.limits() != self.limits {
            return Err(Error::InvalidArgument(format!(
                "model {:?} declares limits {:?} but its ranges span {:?}",
                self.name,
                self.limits,
                model.limits()
            )));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelStore {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub models: Vec<StoredModel>,
}

impl ModelStore {
    pub fn new(config_sha256: impl Into<String>, models: &[(&str, &PartitionedModel)]) -> Self {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            schema_version: SCHEMA_VERSION,
            provenance: Provenance {
                config_sha256: config_sha256.into(),
                created_unix_s: created,
                generator: concat!("gridfit ", env!("CARGO_PKG_VERSION")).to_owned(),
            },
            models: models
                .iter()
                .map(|(n, m)| StoredModel::from_model(n, m))
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Result<PartitionedModel> {
        self.models
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("store has no model named {name:?}")))?
            .to_model()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let store: ModelStore = serde_json::from_str(text)?;
        if store.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "store schema version {} is not supported (expected {SCHEMA_VERSION})",
                store.schema_version
            )));
        }
        for m in &store.models {
            m.to_model()?;
        }
        Ok(store)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Finite floats as numbers, the rest as strings (`"inf"`, `"-inf"`, `"nan"`).
mod lenient {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_model() -> PartitionedModel {
        let range = |lo: f64, hi: f64, aicc: f64| RangeModel {
            v_lo: lo,
            v_hi: hi,
            model: LocalModel {
                tf: DiscreteTransferFunction::new(
                    vec![0.0, 0.1 / 3.0, 1e-17],
                    vec![-0.9123456789012345, 0.01],
                    1e-3,
                )
                .unwrap(),
                u_offset: lo,
                y_offset: 0.1 + 0.2,
            },
            report: FitReport {
                fit_percent: 99.12345678901234,
                nrmse: 0.0087654321,
                adj_r2: 0.999,
                aicc,
                bic: -1234.5,
                n_params: 5,
                n_points: 1800,
            },
        };
        PartitionedModel::new(
            vec![
                range(0.88, 0.99, -4321.0),
                range(0.99, 1.10, f64::NEG_INFINITY),
            ],
            98.7,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let model = sample_model();
        let store = ModelStore::new("ab".repeat(32), &[("reactive", &model)]);
        let first = store.to_json().unwrap();
        let back = ModelStore::from_json(&first).unwrap();
        assert_eq!(back.to_json().unwrap(), first);
        let restored = back.get("reactive").unwrap();
        assert_eq!(restored.ranges[0].model, model.ranges[0].model);
        assert_eq!(restored.ranges[1].report.aicc, f64::NEG_INFINITY);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("model.json");
        let store = ModelStore::new("00", &[("reactive", &sample_model())]);
        store.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        ModelStore::load(&path).unwrap().save(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn rejects_bad_documents() {
        let store = ModelStore::new("00", &[("reactive", &sample_model())]);
        let text = store.to_json().unwrap();
        assert!(ModelStore::from_json(
            &text.replace("\"schema_version\": 1", "\"schema_version\": 9")
        )
        .is_err());
        assert!(ModelStore::from_json(&text.replace("\"v_hi\": 0.99", "\"v_hi\": 0.98")).is_err());
        assert!(ModelStore::from_json("{").is_err());
        assert!(store.get("active").is_err());
    }
}
