use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant-impedance, constant-current and constant-power shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipCoefficients {
    pub zp: f64,
    pub ip: f64,
    pub pp: f64,
    pub zq: f64,
    pub iq: f64,
    pub pq: f64,
}

impl ZipCoefficients {
    pub const SUM_TOL: f64 = 1e-9;

    pub fn p_sum(&self) -> f64 {
        self.zp + self.ip + self.pp
    }

    pub fn q_sum(&self) -> f64 {
        self.zq + self.iq + self.pq
    }

    pub fn validate(&self) -> Result<()> {
        let (p, q) = (self.p_sum(), self.q_sum());
        if (p - 1.0).abs() > Self::SUM_TOL || (q - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "ZIP shares must sum to 1 (P: {p}, Q: {q})"
            )));
        }
        Ok(())
    }

    /// Close both sums by adjusting the constant-power share.
    pub fn normalized(&self) -> Self {
        Self {
            pp: 1.0 - self.zp - self.ip,
            pq: 1.0 - self.zq - self.iq,
            ..*self
        }
    }
}

/// Residential consumer strata with published ZIP fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Stratum {
    A,
    B,
    C,
    #[default]
    D,
    E,
    F,
}

impl Stratum {
    pub const ALL: [Stratum; 6] = [
        Stratum::A,
        Stratum::B,
        Stratum::C,
        Stratum::D,
        Stratum::E,
        Stratum::F,
    ];

    /// Coefficients as tabulated (two decimals, so rows may not close).
    // 6.28 below is a tabulated share, not 2π
    #[allow(clippy::approx_constant)]
    pub fn coefficients(self) -> ZipCoefficients {
        let [zp, ip, pp, zq, iq, pq] = match self {
            Stratum::A => [1.5, -2.31, 1.81, 7.41, -11.97, 5.55],
            Stratum::B => [1.57, -2.48, 1.91, 9.28, -15.29, 7.01],
            Stratum::C => [1.56, -2.49, 1.93, 10.1, -16.75, 7.65],
            Stratum::D => [1.31, -1.94, 1.63, 9.20, -15.27, 7.07],
            Stratum::E => [0.96, -1.17, 1.21, 6.28, -10.16, 4.88],
            Stratum::F => [1.18, -1.64, 1.47, 8.29, -13.67, 6.38],
        };
        ZipCoefficients {
            zp,
            ip,
            pp,
            zq,
            iq,
            pq,
        }
    }
}

/// Voltage-dependent load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipLoad {
    /// kW at `v0`.
    pub p0: f64,
    /// kVAr at `v0`.
    pub q0: f64,
    pub coeffs: ZipCoefficients,
    /// Reference voltage, p.u.
    pub v0: f64,
}

impl ZipLoad {
    pub fn new(p0: f64, q0: f64, coeffs: ZipCoefficients, v0: f64) -> Result<Self> {
        coeffs.validate()?;
        if !(v0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference voltage {v0} must be positive"
            )));
        }
        Ok(Self { p0, q0, coeffs, v0 })
    }
}

/// Load `(P kW, Q kVAr)` at voltage `v`.
#[inline]
pub fn zip_power(load: &ZipLoad, v: f64) -> (f64, f64) {
    let r = v / load.v0;
    let r2 = r * r;
    let c = &load.coeffs;
    (
        load.p0 * (c.zp * r2 + c.ip * r + c.pp),
        load.q0 * (c.zq * r2 + c.iq * r + c.pq),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stratum_d_hand_values() {
        let load = ZipLoad::new(1.0, 1.0, Stratum::D.coefficients(), 1.0).unwrap();
        let (p, q) = zip_power(&load, 0.95);
        assert_abs_diff_eq!(p, 0.969275, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 0.8665, epsilon = 1e-12);
    }

    #[test]
    fn reference_voltage_returns_nominal() {
        let load = ZipLoad::new(2.5, 0.8, Stratum::D.coefficients(), 1.0).unwrap();
        let (p, q) = zip_power(&load, 1.0);
        assert_abs_diff_eq!(p, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_rows_that_do_not_close_are_rejected() {
        assert!(Stratum::A.coefficients().validate().is_err());
        assert!(Stratum::F.coefficients().validate().is_err());
        for s in Stratum::ALL {
            assert!(s.coefficients().normalized().validate().is_ok());
        }
    }
}
