//! Objective and constraint evaluation for a fixed test channel.

use crate::error::{Error, Result};
use crate::info::mutual_information;
use crate::model::{induced_distribution, DistortionSpec, JointSource, TestChannel};

/// `I(X;Z) - I(Y;Z)` in bits under the induced law. Since `Z` depends on `X`
/// only, this is `I(X;Z|Y)` and never negative; round-off is clamped.
pub fn rate_objective(src: &JointSource, ch: &TestChannel) -> Result<f64> {
    if ch.pz_given_x.iter().any(|r| r.len() != ch.z_size) {
        return Err(Error::Dimension(
            "channel rows must have z_size entries".into(),
        ));
    }
    rate_from_rows(src, &ch.pz_given_x)
}

/// Same objective from the rows of `P(z|x)` alone.
pub fn rate_from_rows(src: &JointSource, pz_given_x: &[Vec<f64>]) -> Result<f64> {
    src.ensure_valid()?;
    let nz = pz_given_x.first().map_or(0, Vec::len);
    if pz_given_x.len() != src.x_size || nz == 0 || pz_given_x.iter().any(|r| r.len() != nz) {
        return Err(Error::Dimension(format!(
            "P(z|x) must have {} rows of equal nonzero length",
            src.x_size
        )));
    }
    let px = src.px();
    let pxz: Vec<Vec<f64>> = (0..src.x_size)
        .map(|x| pz_given_x[x].iter().map(|q| px[x] * q).collect())
        .collect();
    let pyz: Vec<Vec<f64>> = (0..src.y_size)
        .map(|y| {
            (0..nz)
                .map(|z| {
                    (0..src.x_size)
                        .map(|x| src.pxy[x][y] * pz_given_x[x][z])
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok((mutual_information(&pxz) - mutual_information(&pyz)).max(0.0))
}

/// `(E d_d(X, phi(Y,Z)), E d_e(phi(Y,Z), psi(X,Z)))`.
pub fn expected_distortions(
    src: &JointSource,
    spec: &DistortionSpec,
    ch: &TestChannel,
) -> Result<(f64, f64)> {
    spec.check_source(src)?;
    ch.validate(src, spec.xhat_size)?;
    let law = induced_distribution(src, ch)?;
    let (mut dd, mut de) = (0.0, 0.0);
    for x in 0..src.x_size {
        for y in 0..src.y_size {
            for z in 0..ch.z_size {
                let (p, xd, xe) = law.atom(x, y, z);
                if p > 0.0 {
                    dd += p * spec.dd[x][xd];
                    de += p * spec.de[xd][xe];
                }
            }
        }
    }
    Ok((dd, de))
}

pub(crate) fn check_targets(targets: &[f64]) -> Result<()> {
    if targets.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Domain(
            "distortion targets must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}
