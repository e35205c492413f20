//! Spherical caps on the unit `n`-sphere.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// `Pr[<Psi, mu> >= tau]` for `Psi` uniform on the unit `n`-sphere and a fixed
/// unit vector `mu`, i.e. the area fraction of the cap of half-angle
/// `arccos tau`. Uses `1/2 I_{1 - tau^2}((n - 1) / 2, 1/2)`.
pub fn cap_ratio(n: usize, tau: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("tau must lie in [0, 1], got {tau}")));
    }
    if tau == 1.0 {
        return Ok(0.0);
    }
    Ok(0.5 * beta_reg((n as f64 - 1.0) / 2.0, 0.5, 1.0 - tau * tau))
}

/// Area fraction of the cap of half-angle `theta` in `[0, pi]`.
pub fn cap_fraction(n: usize, theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain(format!(
            "theta must lie in [0, pi], got {theta}"
        )));
    }
    let c = theta.cos();
    if c >= 0.0 {
        cap_ratio(n, c.min(1.0))
    } else {
        Ok(1.0 - cap_ratio(n, (-c).min(1.0))?)
    }
}

/// Exponential decay rate of [`cap_ratio`] in `n`: `1/2 log2(1 - tau^2)`.
pub fn cap_exponent(tau: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::Domain(format!("tau must lie in [0, 1), got {tau}")));
    }
    Ok(0.5 * (1.0 - tau * tau).log2())
}
