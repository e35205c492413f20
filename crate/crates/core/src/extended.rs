//! The K-constraint problem: distortions `d_k(x, xhat_d, xhat_e)` with the
//! encoder's estimate also allowed to depend on a private auxiliary `U`.
//!
//! Channels are kept in factored form `P(z|x) P(u|x,z)`, so the objective,
//! which only sees `Z`, is untouched by anything done to `U`.

use serde::{Deserialize, Serialize};

use crate::caratheodory::reduce_aux_u;
use crate::error::{Error, Result};
use crate::model::{check_extended_assumption, ExtendedInstance, JointSource};
use crate::solver::types::{all_columns, TypeProblem};
use crate::solver::{check_targets, Diagnostics, SolveConfig};

/// Controls for [`solve_rate_ext`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtSolveConfig {
    /// Auxiliary `U` alphabet size. `None` means `K`, lowered to the number
    /// of constraints that actually depend on the encoder estimate.
    pub u_size: Option<usize>,
    /// `solve.z_size = None` means `|X| |U| + K + 1`.
    pub solve: SolveConfig,
}

impl Default for ExtSolveConfig {
    fn default() -> Self {
        ExtSolveConfig {
            u_size: None,
            solve: SolveConfig::default(),
        }
    }
}

/// Test channel for the extended problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtChannel {
    pub z_size: usize,
    pub u_size: usize,
    /// `pz_given_x[x][z]`.
    pub pz_given_x: Vec<Vec<f64>>,
    /// `pu_given_xz[x][z][u]`.
    pub pu_given_xz: Vec<Vec<Vec<f64>>>,
    /// `phi[y][z]`.
    pub phi: Vec<Vec<usize>>,
    /// `psi[x][z][u]`.
    pub psi: Vec<Vec<Vec<usize>>>,
}

impl ExtChannel {
    pub fn validate(&self, src: &JointSource, ext: &ExtendedInstance) -> Result<()> {
        let (nx, nz, nu) = (src.x_size, self.z_size, self.u_size);
        let ok = nz > 0
            && nu > 0
            && self.pz_given_x.len() == nx
            && self.pz_given_x.iter().all(|r| r.len() == nz)
            && self.pu_given_xz.len() == nx
            && self
                .pu_given_xz
                .iter()
                .all(|r| r.len() == nz && r.iter().all(|c| c.len() == nu))
            && self.phi.len() == src.y_size
            && self.phi.iter().all(|r| r.len() == nz)
            && self.psi.len() == nx
            && self
                .psi
                .iter()
                .all(|r| r.len() == nz && r.iter().all(|c| c.len() == nu));
        if !ok {
            return Err(Error::Dimension(format!(
                "channel tables must match |X| = {nx}, |Y| = {}, |Z| = {nz}, |U| = {nu}",
                src.y_size
            )));
        }
        let rows = self
            .pz_given_x
            .iter()
            .chain(self.pu_given_xz.iter().flatten());
        for r in rows {
            if r.iter().any(|p| !p.is_finite() || *p < 0.0)
                || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(Error::Domain("channel rows must be distributions".into()));
            }
        }
        if self.phi.iter().flatten().any(|&v| v >= ext.xhat_d_size)
            || self
                .psi
                .iter()
                .flatten()
                .flatten()
                .any(|&v| v >= ext.xhat_e_size)
        {
            return Err(Error::Domain(
                "reconstruction index outside its alphabet".into(),
            ));
        }
        Ok(())
    }
}

/// `I(X;Z) - I(Y;Z)` in bits; `U` plays no part.
pub fn ext_rate_objective(src: &JointSource, ch: &ExtChannel) -> Result<f64> {
    if ch.pz_given_x.len() != src.x_size {
        return Err(Error::Dimension(
            "channel must have one row per source symbol".into(),
        ));
    }
    crate::solver::rate_from_rows(src, &ch.pz_given_x)
}

/// `E d_k(X, phi(Y, Z), psi(X, Z, U))`.
pub fn ext_expected_distortion_k(
    src: &JointSource,
    ext: &ExtendedInstance,
    ch: &ExtChannel,
    k: usize,
) -> Result<f64> {
    ext.validate(src.x_size)?;
    ch.validate(src, ext)?;
    if k >= ext.k {
        return Err(Error::Dimension(format!(
            "constraint {k} out of range 0..{}",
            ext.k
        )));
    }
    let mut total = 0.0;
    for x in 0..src.x_size {
        for y in 0..src.y_size {
            let pxy = src.pxy[x][y];
            if pxy == 0.0 {
                continue;
            }
            for z in 0..ch.z_size {
                let pz = ch.pz_given_x[x][z];
                for u in 0..ch.u_size {
                    let p = pxy * pz * ch.pu_given_xz[x][z][u];
                    if p > 0.0 {
                        total += p * ext.dk[k][x][ch.phi[y][z]][ch.psi[x][z][u]];
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Solution of the extended problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtRatePoint {
    pub targets: Vec<f64>,
    pub rate: f64,
    pub witness: ExtChannel,
    pub achieved: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Whether `d_k` changes with the encoder estimate for some `(x, xhat_d)`.
fn depends_on_estimate(table: &[Vec<Vec<f64>>]) -> bool {
    table
        .iter()
        .flatten()
        .any(|row| row.iter().any(|v| *v != row[0]))
}

/// Size of `U` used by [`solve_rate_ext`].
pub fn effective_u_size(ext: &ExtendedInstance, cfg: &ExtSolveConfig) -> usize {
    cfg.u_size.unwrap_or_else(|| {
        let needed = ext.dk.iter().filter(|t| depends_on_estimate(t)).count();
        needed.clamp(1, ext.k)
    })
}

pub fn solve_rate_ext(
    src: &JointSource,
    ext: &ExtendedInstance,
    cfg: &ExtSolveConfig,
) -> Result<ExtRatePoint> {
    src.ensure_valid()?;
    ext.validate(src.x_size)?;
    cfg.solve.validate()?;
    check_targets(&ext.targets)?;
    if cfg.u_size == Some(0) {
        return Err(Error::Domain("u_size must be at least 1".into()));
    }
    if !check_extended_assumption(ext, src.x_size) {
        return Err(Error::Assumption(
            "some source symbol has no reconstruction pair with all distortions zero".into(),
        ));
    }
    let u = effective_u_size(ext, cfg);
    let bound = src.x_size * u + ext.k + 1;
    let z_size = cfg.solve.z_size.unwrap_or(bound);
    let dist = |k: usize, x: usize, xd: usize, xe: usize| ext.dk[k][x][xd][xe];
    let problem = TypeProblem {
        pxy: &src.pxy,
        py_given_x: src.py_given_x(),
        phi_cols: all_columns(src.y_size, ext.xhat_d_size)?,
        xhat_e_size: ext.xhat_e_size,
        n_costs: ext.k,
        dist: &dist,
        options: u,
        targets: ext.targets.clone(),
        z_slots: z_size,
        prune: cfg.solve.prune_dominated,
        enumeration_cap: cfg.solve.enumeration_cap,
        settings: cfg.solve.settings(),
    };
    let sol = problem.solve()?.ok_or_else(|| {
        Error::Infeasible(format!("no test channel meets targets {:?}", ext.targets))
    })?;

    let (nx, ny) = (src.x_size, src.y_size);
    let mut pz_given_x = vec![vec![0.0; z_size]; nx];
    let mut pu_given_xz = vec![vec![vec![0.0; u]; z_size]; nx];
    let mut phi = vec![vec![0; z_size]; ny];
    let mut psi = vec![vec![vec![0; u]; z_size]; nx];
    for (g, t) in sol.types.iter().enumerate() {
        for y in 0..ny {
            phi[y][g] = t.phi[y];
        }
        for x in 0..nx {
            let opts = &t.enc[x];
            for o in 0..u {
                // Short option lists repeat their last entry.
                let real = o.min(opts.len() - 1);
                psi[x][g][o] = opts[real];
                pu_given_xz[x][g][real] += sol.q[x][g * u + o];
            }
            let mass: f64 = pu_given_xz[x][g].iter().sum();
            pz_given_x[x][g] = mass;
            if mass > 0.0 {
                pu_given_xz[x][g].iter_mut().for_each(|p| *p /= mass);
            } else {
                pu_given_xz[x][g][0] = 1.0;
            }
        }
    }
    for x in 0..nx {
        for g in sol.types.len()..z_size {
            pu_given_xz[x][g][0] = 1.0;
        }
    }
    let witness = ExtChannel {
        z_size,
        u_size: u,
        pz_given_x,
        pu_given_xz,
        phi,
        psi,
    };
    let achieved = (0..ext.k)
        .map(|k| ext_expected_distortion_k(src, ext, &witness, k))
        .collect::<Result<_>>()?;
    let rate = if sol.types.len() == 1 {
        0.0
    } else {
        ext_rate_objective(src, &witness)?
    };
    Ok(ExtRatePoint {
        targets: ext.targets.clone(),
        rate,
        witness,
        achieved,
        diagnostics: Diagnostics {
            iterations: sol.iterations,
            gap: sol.gap,
            converged: sol.converged,
            column_types: sol.n_types,
            candidates: sol.n_candidates,
            unconverged_candidates: sol.unconverged,
            upper_bound: z_size < bound && sol.truncated,
        },
    })
}

/// Outcome of [`verify_u_reduction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UReductionReport {
    pub ok: bool,
    pub reduced: ExtChannel,
    pub rate_before: f64,
    pub rate_after: f64,
    pub distortions_before: Vec<f64>,
    pub distortions_after: Vec<f64>,
}

/// Reduces `U` to at most `K` values and checks that the result meets every
/// target (within `1e-9`) and leaves the rate unchanged.
pub fn verify_u_reduction(
    src: &JointSource,
    ext: &ExtendedInstance,
    ch: &ExtChannel,
) -> Result<UReductionReport> {
    ch.validate(src, ext)?;
    let red = reduce_aux_u(src, ext, &ch.pz_given_x, &ch.pu_given_xz, &ch.phi, &ch.psi)?;
    let reduced = ExtChannel {
        u_size: red.pu_given_xz[0][0].len(),
        pu_given_xz: red.pu_given_xz,
        psi: red.psi,
        ..ch.clone()
    };
    let distortions_before: Vec<f64> = (0..ext.k)
        .map(|k| ext_expected_distortion_k(src, ext, ch, k))
        .collect::<Result<_>>()?;
    let distortions_after: Vec<f64> = (0..ext.k)
        .map(|k| ext_expected_distortion_k(src, ext, &reduced, k))
        .collect::<Result<_>>()?;
    let rate_before = ext_rate_objective(src, ch)?;
    let rate_after = ext_rate_objective(src, &reduced)?;
    let ok = reduced.u_size <= ext.k
        && rate_before == rate_after
        && distortions_after
            .iter()
            .zip(&ext.targets)
            .all(|(d, t)| *d <= t + 1e-9);
    Ok(UReductionReport {
        ok,
        reduced,
        rate_before,
        rate_after,
        distortions_before,
        distortions_after,
    })
}
