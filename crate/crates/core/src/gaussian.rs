//! Quadratic Gaussian case: `Y = X + U` with independent zero-mean Gaussians
//! and squared-error distortions.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `max(log2 v, 0)`.
pub fn log_plus(v: f64) -> f64 {
    v.log2().max(0.0)
}

/// Source variance, noise variance and the two distortion targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProblem {
    pub var_x: f64,
    pub var_u: f64,
    pub dd: f64,
    pub de: f64,
}

impl GaussianProblem {
    pub fn new(var_x: f64, var_u: f64, dd: f64, de: f64) -> Result<Self> {
        let p = GaussianProblem {
            var_x,
            var_u,
            dd,
            de,
        };
        p.validate()?;
        Ok(p)
    }

    /// Side information `Y = xi X + U`, rescaled to unit gain by dividing the
    /// noise variance by `xi^2`.
    pub fn with_gain(var_x: f64, var_u: f64, dd: f64, de: f64, xi: f64) -> Result<Self> {
        if !(xi.is_finite() && xi != 0.0) {
            return Err(Error::Domain(
                "side-information gain must be finite and nonzero".into(),
            ));
        }
        Self::new(var_x, var_u / (xi * xi), dd, de)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.var_x.is_finite()
            && self.var_x > 0.0
            && self.var_u.is_finite()
            && self.var_u > 0.0
            && self.dd.is_finite()
            && self.dd > 0.0
            && self.de.is_finite()
            && self.de >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "need var_x > 0, var_u > 0, dd > 0, de >= 0; got ({}, {}, {}, {})",
                self.var_x, self.var_u, self.dd, self.de
            )))
        }
    }

    /// MMSE of `X` given `Y`.
    pub fn mmse(&self) -> f64 {
        self.var_x * self.var_u / (self.var_x + self.var_u)
    }

    /// `sqrt(D_e var_u)`, the quantity compared against `min(D_d, mmse)`.
    fn encoder_reach(&self) -> f64 {
        (self.de * self.var_u).sqrt()
    }

    /// Right-hand side of the case-2 threshold on `D_d`.
    fn estimate_threshold(&self) -> f64 {
        let s = 1.0 - (self.de / self.var_u).sqrt();
        self.var_x * s * s + self.de
    }
}

fn check_pair(var_x: f64, var_u: f64, dd: f64) -> Result<()> {
    GaussianProblem::new(var_x, var_u, dd, 0.0).map(|_| ())
}

/// Wyner-Ziv rate `1/2 log+ (mmse / D_d)`.
pub fn r_wz_gaussian(var_x: f64, var_u: f64, dd: f64) -> Result<f64> {
    check_pair(var_x, var_u, dd)?;
    Ok(0.5 * log_plus(var_x * var_u / ((var_x + var_u) * dd)))
}

/// Common-reconstruction rate `1/2 log+ (var_x (var_u + D_d) / ((var_x + var_u) D_d))`.
pub fn r_cr_gaussian(var_x: f64, var_u: f64, dd: f64) -> Result<f64> {
    check_pair(var_x, var_u, dd)?;
    Ok(0.5 * log_plus(var_x * (var_u + dd) / ((var_x + var_u) * dd)))
}

/// The second-branch ratio, before `log+`.
fn second_branch_ratio(p: &GaussianProblem) -> Result<f64> {
    if p.dd <= p.de {
        return Err(Error::Numerical(format!(
            "second branch requires D_d > D_e, got {} <= {}",
            p.dd, p.de
        )));
    }
    // Same operation order as `r_cr_gaussian`, so `D_e = 0` agrees bit for bit.
    Ok(
        p.var_x * (p.var_u + p.dd - 2.0 * p.encoder_reach())
            / ((p.var_x + p.var_u) * (p.dd - p.de)),
    )
}

/// Whether the encoder constraint is loose enough that the rate equals the
/// Wyner-Ziv rate by the first branch.
fn first_branch(p: &GaussianProblem) -> bool {
    p.encoder_reach() >= p.dd.min(p.mmse())
}

/// The rate-distortions function in bits.
pub fn r_gaussian(p: &GaussianProblem) -> Result<f64> {
    p.validate()?;
    if first_branch(p) {
        Ok(0.5 * log_plus(p.mmse() / p.dd))
    } else {
        Ok(0.5 * log_plus(second_branch_ratio(p)?))
    }
}

/// Both branch formulas evaluated regardless of which applies, as
/// `(first, second)`. Used to check continuity across the branch boundary.
pub fn r_gaussian_branches(p: &GaussianProblem) -> Result<(f64, f64)> {
    p.validate()?;
    Ok((
        0.5 * log_plus(p.mmse() / p.dd),
        0.5 * log_plus(second_branch_ratio(p)?),
    ))
}

/// Region of the `(D_d, D_e)` plane, 1 to 4. Cases 1 and 2 need no coding.
/// A point on the closure of several regions goes to the lowest number.
pub fn classify_case(p: &GaussianProblem) -> Result<u8> {
    p.validate()?;
    let reach = p.encoder_reach();
    let limit = p.dd.min(p.mmse());
    Ok(if reach >= limit && p.dd >= p.mmse() {
        1
    } else if reach <= limit && p.dd >= p.estimate_threshold() {
        2
    } else if reach >= limit && p.dd <= p.mmse() {
        3
    } else {
        4
    })
}

/// Parameters of the coding scheme. The auxiliary is `Z = a (X + W)` with
/// `W ~ N(0, var_w)`; the encoder estimates `Z + b X` and the decoder outputs
/// `Z + b Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub a: f64,
    pub b: f64,
    pub var_w: f64,
    pub case_id: u8,
}

impl SchemeParams {
    /// Decoder distortion `(1-a-b)^2 var_x + a^2 var_w + b^2 var_u`.
    pub fn decoder_distortion(&self, var_x: f64, var_u: f64) -> f64 {
        let c = 1.0 - self.a - self.b;
        c * c * var_x + self.a * self.a * self.var_w + self.b * self.b * var_u
    }

    /// Encoder-estimate distortion `b^2 var_u`.
    pub fn encoder_distortion(&self, var_u: f64) -> f64 {
        self.b * self.b * var_u
    }

    /// Variance of the codewords, `a^2 (var_w + var_x)`.
    pub fn codeword_variance(&self, var_x: f64) -> f64 {
        self.a * self.a * (self.var_w + var_x)
    }
}

/// Outcome of [`scheme_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    /// Both sides scale their own observation by `scale`; rate zero.
    NoCoding {
        case_id: u8,
        scale: f64,
    },
    Coding(SchemeParams),
}

pub fn scheme_params(p: &GaussianProblem) -> Result<Scheme> {
    let case_id = classify_case(p)?;
    Ok(match case_id {
        1 => Scheme::NoCoding {
            case_id,
            scale: p.var_x / (p.var_x + p.var_u),
        },
        2 => Scheme::NoCoding {
            case_id,
            scale: (p.de / p.var_u).sqrt(),
        },
        3 => {
            let var_w = p.dd / (1.0 - p.dd * (p.var_x + p.var_u) / (p.var_x * p.var_u));
            Scheme::Coding(SchemeParams {
                a: p.dd / var_w,
                b: p.dd / p.var_u,
                var_w,
                case_id,
            })
        }
        _ => {
            let b = (p.de / p.var_u).sqrt();
            let var_w = p.var_x * (p.dd - p.de) / (p.var_x * (1.0 - b) * (1.0 - b) + p.de - p.dd);
            Scheme::Coding(SchemeParams {
                a: p.var_x * (1.0 - b) / (p.var_x + var_w),
                b,
                var_w,
                case_id,
            })
        }
    })
}

/// Rate of the scheme,
/// `1/2 log2 ((vx vu + vx vw + vu vw) / ((vx + vu) vw))`.
pub fn scheme_rate(params: &SchemeParams, var_x: f64, var_u: f64) -> Result<f64> {
    if !(params.var_w > 0.0) {
        return Err(Error::Domain(format!(
            "var_w must be positive, got {}",
            params.var_w
        )));
    }
    check_pair(var_x, var_u, 1.0)?;
    let w = params.var_w;
    if w.is_infinite() {
        return Ok(0.0);
    }
    Ok(0.5 * ((var_x * var_u + var_x * w + var_u * w) / ((var_x + var_u) * w)).log2())
}

/// `h(X|Y)` in bits.
pub fn conditional_differential_entropy(var_x: f64, var_u: f64) -> f64 {
    0.5 * (2.0 * PI * E * var_x * var_u / (var_x + var_u)).log2()
}

/// The converse bound `Gamma` at the optimal correlation
/// `kappa = -sqrt(D_e var_u)`, in bits. Requires the second branch; points on
/// the branch boundary are accepted.
pub fn converse_gamma(p: &GaussianProblem) -> Result<f64> {
    p.validate()?;
    let limit = p.dd.min(p.mmse());
    if p.encoder_reach() > limit * (1.0 + 1e-12) {
        return Err(Error::Domain(
            "converse bound applies only when sqrt(D_e var_u) < min(D_d, mmse)".into(),
        ));
    }
    let kappa = -p.encoder_reach();
    Ok(0.5
        * (2.0 * PI * E * (p.dd * p.var_u - kappa * kappa) / (p.dd + p.var_u + 2.0 * kappa)).log2())
}
