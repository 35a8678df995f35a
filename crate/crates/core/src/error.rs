use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("infeasible operating point: {0}")]
    Infeasible(String),

    #[error("step size {dt} s exceeds stability limit {limit} s")]
    StepSize { dt: f64, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("insufficient data: need more than {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("simulation blew up (largest pole radius {pole_radius:.6})")]
    NumericBlowUp { pole_radius: f64 },

    #[error("no admissible model among {candidates} candidates")]
    NoModel { candidates: usize },

    #[error("partition [{v_lo:.4}, {v_hi:.4}] p.u. failed: {source}")]
    PartitionFailure {
        v_lo: f64,
        v_hi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("network solve diverged after {iterations} sweeps (worst mismatch {mismatch:.3e} p.u.){}", at_time(*.time))]
    Divergence {
        iterations: usize,
        mismatch: f64,
        time: Option<f64>,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("profile coverage: {0}")]
    Coverage(String),

    #[error("voltage limits mismatch: model covers [{model_lo}, {model_hi}], scenario needs [{lo}, {hi}]")]
    LimitMismatch {
        model_lo: f64,
        model_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn at_time(time: Option<f64>) -> String {
    match time {
        Some(t) => format!(" at t = {t} s"),
        None => String::new(),
    }
}

pub(crate) fn ensure_finite(what: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
