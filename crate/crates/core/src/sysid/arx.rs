use nalgebra::{DMatrix, DVector};

use super::{Dataset, DiscreteTransferFunction};
use crate::error::{Error, Result};

/// Singular-value ratio below which the regressor counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Least-squares ARX fit of order `(n, m)`.
///
/// Rows start at `k = n`, so no pre-sample values are needed. Columns are
/// scaled to unit norm before the SVD to keep the rank test meaningful when
/// input and output differ by orders of magnitude.
pub fn fit_arx(data: &Dataset, n: usize, m: usize) -> Result<DiscreteTransferFunction> {
    fit(data, n, m, false).map(|(tf, _)| tf)
}

/// ARX fit with an extra constant regressor. Returns the model and the
/// equation-error constant `c`, i.e. `A(q) y = B(q) u + c`.
pub(crate) fn fit_arx_affine(
    data: &Dataset,
    n: usize,
    m: usize,
) -> Result<(DiscreteTransferFunction, f64)> {
    fit(data, n, m, true)
}

fn fit(
    data: &Dataset,
    n: usize,
    m: usize,
    intercept: bool,
) -> Result<(DiscreteTransferFunction, f64)> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "denominator order must be at least 1".into(),
        ));
    }
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "numerator order {m} exceeds {n}"
        )));
    }
    let d = n + m + 1;
    let len = data.len();
    if len <= 10 * d {
        return Err(Error::InsufficientData {
            needed: 10 * d,
            got: len,
        });
    }
    let rows = len - n;
    let cols = d + usize::from(intercept);
    let mut phi = DMatrix::<f64>::zeros(rows, cols);
    let mut target = DVector::<f64>::zeros(rows);
    for r in 0..rows {
        let k = r + n;
        for i in 0..n {
            phi[(r, i)] = -data.y[k - 1 - i];
        }
        for j in 0..=m {
            phi[(r, n + j)] = data.u[k - j];
        }
        if intercept {
            phi[(r, d)] = 1.0;
        }
        target[r] = data.y[k];
    }

    let mut scale = vec![1.0; cols];
    for (c, s) in scale.iter_mut().enumerate() {
        let norm = phi.column(c).norm();
        if norm == 0.0 {
            return Err(Error::Unidentifiable(format!(
                "regressor column {c} is identically zero"
            )));
        }
        *s = norm;
        phi.column_mut(c).scale_mut(1.0 / norm);
    }

    let svd = phi.svd(true, true);
    let sv = &svd.singular_values;
    let s_max = sv.max();
    let s_min = sv.min();
    if !(s_max > 0.0) || s_min / s_max < RANK_TOL {
        return Err(Error::Unidentifiable(format!(
            "regressor rank deficient (condition ratio {:.3e})",
            if s_max > 0.0 { s_min / s_max } else { 0.0 }
        )));
    }
    let theta = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Unidentifiable(e.to_string()))?;

    let a: Vec<f64> = (0..n).map(|i| theta[i] / scale[i]).collect();
    let b: Vec<f64> = (0..=m).map(|j| theta[n + j] / scale[n + j]).collect();
    let c = if intercept { theta[d] / scale[d] } else { 0.0 };
    Ok((DiscreteTransferFunction::new(b, a, data.ts)?, c))
}
