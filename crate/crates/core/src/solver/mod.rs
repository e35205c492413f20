//! Discrete rate-distortions solver.
//!
//! The rate for targets `(D_d, D_e)` is the minimum of `I(X;Z|Y)` over test
//! channels `P(z|x)` and reconstruction rules `phi(y, z)`, `psi(x, z)` meeting
//! both expected-distortion constraints. Rules are enumerated (see
//! [`types`]); for fixed rules the problem is convex in the channel and is
//! solved by a barrier method.

pub(crate) mod barrier;
mod objective;
mod oracle;
pub(crate) mod types;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub(crate) use objective::check_targets;
pub use objective::{expected_distortions, rate_from_rows, rate_objective};
pub use oracle::brute_force_oracle;

use crate::error::{Error, Result};
use crate::model::{check_zero_distortion_assumption, DistortionSpec, JointSource, TestChannel};
use barrier::{BarrierSettings, GroupedProblem, InnerResult};
use types::{all_columns, TypeProblem, TypeSolution};

/// Solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Auxiliary alphabet size. `None` selects the cardinality bound of the
    /// problem being solved.
    pub z_size: Option<usize>,
    /// Cap on Newton steps per inner problem.
    pub inner_max_iters: usize,
    /// Target optimality gap of each inner problem, in bits.
    pub inner_tolerance: f64,
    /// Cap on enumerated column types and on candidate rule sets.
    pub enumeration_cap: usize,
    /// Grid resolution of the brute-force oracle.
    pub grid_resolution: usize,
    /// Drop rule columns dominated by another column before enumerating.
    pub prune_dominated: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            z_size: None,
            inner_max_iters: 1000,
            inner_tolerance: 1e-9,
            enumeration_cap: 200_000,
            grid_resolution: 20,
            prune_dominated: true,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.z_size == Some(0) {
            return Err(Error::Domain("z_size must be at least 1".into()));
        }
        if !(self.inner_tolerance > 0.0 && self.inner_tolerance.is_finite()) {
            return Err(Error::Domain("inner_tolerance must be positive".into()));
        }
        if self.inner_max_iters == 0 || self.enumeration_cap == 0 || self.grid_resolution == 0 {
            return Err(Error::Domain(
                "iteration, enumeration and grid limits must be positive".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn settings(&self) -> BarrierSettings {
        BarrierSettings {
            max_newton: self.inner_max_iters,
            tolerance: self.inner_tolerance,
        }
    }
}

/// Solver bookkeeping attached to every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Newton steps spent on the winning candidate.
    pub iterations: usize,
    /// Certified optimality gap of the winning candidate, in bits.
    pub gap: f64,
    pub converged: bool,
    pub column_types: usize,
    pub candidates: usize,
    pub unconverged_candidates: usize,
    /// True when `z_size` is below the cardinality bound and the enumeration
    /// could not cover every rule set; the rate is then only an upper bound.
    pub upper_bound: bool,
}

/// Solution of the rate-distortions problem at one pair of targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub dd_target: f64,
    pub de_target: f64,
    /// Bits per source symbol.
    pub rate: f64,
    pub witness: TestChannel,
    pub achieved_dd: f64,
    pub achieved_de: f64,
    pub diagnostics: Diagnostics,
}

/// Solution of a single-constraint baseline (Wyner-Ziv or common
/// reconstruction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub dd_target: f64,
    pub rate: f64,
    /// The encoder rule of the witness is unused and set to zero.
    pub witness: TestChannel,
    pub achieved_dd: f64,
    pub diagnostics: Diagnostics,
}

/// Result of [`inner_minimize`].
#[derive(Debug, Clone, PartialEq)]
pub enum InnerOutcome {
    Infeasible,
    Solved {
        pz_given_x: Vec<Vec<f64>>,
        rate: f64,
        gap: f64,
        iterations: usize,
        converged: bool,
    },
}

fn check_cfg_and_targets(cfg: &SolveConfig, targets: &[f64]) -> Result<()> {
    cfg.validate()?;
    check_targets(targets)
}

fn diagnostics(sol: &TypeSolution, z_size: usize, bound: usize) -> Diagnostics {
    Diagnostics {
        iterations: sol.iterations,
        gap: sol.gap,
        converged: sol.converged,
        column_types: sol.n_types,
        candidates: sol.n_candidates,
        unconverged_candidates: sol.unconverged,
        upper_bound: z_size < bound && sol.truncated,
    }
}

/// Lays a single-option type solution out as a test channel with `z_size`
/// symbols; unused symbols get zero mass.
fn witness_from(sol: &TypeSolution, x_size: usize, y_size: usize, z_size: usize) -> TestChannel {
    let used = sol.types.len();
    let mut pz_given_x = vec![vec![0.0; z_size]; x_size];
    let mut phi = vec![vec![0; z_size]; y_size];
    let mut psi = vec![vec![0; z_size]; x_size];
    for (g, t) in sol.types.iter().enumerate() {
        for y in 0..y_size {
            phi[y][g] = t.phi[y];
        }
        for x in 0..x_size {
            psi[x][g] = t.enc[x][0];
        }
    }
    for x in 0..x_size {
        pz_given_x[x][..used].copy_from_slice(&sol.q[x][..used]);
    }
    TestChannel {
        z_size,
        pz_given_x,
        phi,
        psi,
    }
}

/// Minimizes `I(X;Z|Y)` over `P(z|x)` with the rules `phi[y][z]` and
/// `psi[x][z]` held fixed. The auxiliary alphabet size is taken from the rule
/// tables.
pub fn inner_minimize(
    src: &JointSource,
    spec: &DistortionSpec,
    dd_target: f64,
    de_target: f64,
    phi: &[Vec<usize>],
    psi: &[Vec<usize>],
    cfg: &SolveConfig,
) -> Result<InnerOutcome> {
    src.ensure_valid()?;
    spec.validate()?;
    spec.check_source(src)?;
    check_cfg_and_targets(cfg, &[dd_target, de_target])?;
    let z_size = phi.first().map_or(0, Vec::len);
    let probe = TestChannel {
        z_size,
        pz_given_x: vec![vec![1.0 / z_size.max(1) as f64; z_size]; src.x_size],
        phi: phi.to_vec(),
        psi: psi.to_vec(),
    };
    probe.validate(src, spec.xhat_size)?;
    let pyx = src.py_given_x();
    let cost_d = (0..src.x_size)
        .map(|x| {
            (0..z_size)
                .map(|z| {
                    (0..src.y_size)
                        .map(|y| pyx[x][y] * spec.dd[x][phi[y][z]])
                        .sum()
                })
                .collect()
        })
        .collect();
    let cost_e = (0..src.x_size)
        .map(|x| {
            (0..z_size)
                .map(|z| {
                    (0..src.y_size)
                        .map(|y| pyx[x][y] * spec.de[phi[y][z]][psi[x][z]])
                        .sum()
                })
                .collect()
        })
        .collect();
    let problem = GroupedProblem {
        pxy: &src.pxy,
        n_cols: z_size,
        group: (0..z_size).collect(),
        n_groups: z_size,
        cost: vec![cost_d, cost_e],
        targets: vec![dd_target, de_target],
    };
    Ok(match barrier::minimize(&problem, &cfg.settings())? {
        InnerResult::Infeasible => InnerOutcome::Infeasible,
        InnerResult::Solved(s) => {
            let ch = TestChannel {
                pz_given_x: s.q.clone(),
                ..probe
            };
            InnerOutcome::Solved {
                rate: rate_objective(src, &ch)?,
                pz_given_x: s.q,
                gap: s.gap,
                iterations: s.iterations,
                converged: s.converged,
            }
        }
    })
}

/// Computes the rate-distortions function at `(dd_target, de_target)`.
pub fn solve_rate(
    src: &JointSource,
    spec: &DistortionSpec,
    dd_target: f64,
    de_target: f64,
    cfg: &SolveConfig,
) -> Result<RatePoint> {
    src.ensure_valid()?;
    spec.validate()?;
    spec.check_source(src)?;
    check_cfg_and_targets(cfg, &[dd_target, de_target])?;
    if !check_zero_distortion_assumption(spec) {
        return Err(Error::Assumption(
            "some source symbol has no zero-distortion reconstruction pair".into(),
        ));
    }
    let bound = src.x_size + 3;
    let z_size = cfg.z_size.unwrap_or(bound);
    let dist = |k: usize, x: usize, xd: usize, xe: usize| {
        if k == 0 {
            spec.dd[x][xd]
        } else {
            spec.de[xd][xe]
        }
    };
    let problem = TypeProblem {
        pxy: &src.pxy,
        py_given_x: src.py_given_x(),
        phi_cols: all_columns(src.y_size, spec.xhat_size)?,
        xhat_e_size: spec.xhat_size,
        n_costs: 2,
        dist: &dist,
        options: 1,
        targets: vec![dd_target, de_target],
        z_slots: z_size,
        prune: cfg.prune_dominated,
        enumeration_cap: cfg.enumeration_cap,
        settings: cfg.settings(),
    };
    let sol = problem.solve()?.ok_or_else(|| {
        Error::Infeasible(format!(
            "no test channel meets D_d = {dd_target}, D_e = {de_target}"
        ))
    })?;
    let witness = witness_from(&sol, src.x_size, src.y_size, z_size);
    let (achieved_dd, achieved_de) = expected_distortions(src, spec, &witness)?;
    Ok(RatePoint {
        dd_target,
        de_target,
        rate: finished_rate(src, &witness, &sol)?,
        witness,
        achieved_dd,
        achieved_de,
        diagnostics: diagnostics(&sol, z_size, bound),
    })
}

/// A witness whose winning candidate is a single column type has `Z`
/// independent of `X`, hence rate exactly zero.
fn finished_rate(src: &JointSource, witness: &TestChannel, sol: &TypeSolution) -> Result<f64> {
    if sol.types.len() == 1 {
        Ok(0.0)
    } else {
        rate_objective(src, witness)
    }
}

fn check_dd_table(src: &JointSource, dd: &[Vec<f64>]) -> Result<usize> {
    let xhat_size = dd.first().map_or(0, Vec::len);
    if dd.len() != src.x_size || xhat_size == 0 || dd.iter().any(|r| r.len() != xhat_size) {
        return Err(Error::Dimension(format!(
            "dd must be {}x(nonzero), rectangular",
            src.x_size
        )));
    }
    if dd.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain(
            "distortions must be finite and nonnegative".into(),
        ));
    }
    if !dd.iter().all(|r| r.iter().any(|&v| v == 0.0)) {
        return Err(Error::Assumption(
            "some source symbol has no zero-distortion reconstruction".into(),
        ));
    }
    Ok(xhat_size)
}

fn baseline(
    src: &JointSource,
    dd: &[Vec<f64>],
    dd_target: f64,
    cfg: &SolveConfig,
    phi_cols: Vec<Vec<usize>>,
    z_size: usize,
    bound: usize,
) -> Result<BaselinePoint> {
    let dist = |_: usize, x: usize, xd: usize, _: usize| dd[x][xd];
    let problem = TypeProblem {
        pxy: &src.pxy,
        py_given_x: src.py_given_x(),
        phi_cols,
        xhat_e_size: 1,
        n_costs: 1,
        dist: &dist,
        options: 1,
        targets: vec![dd_target],
        z_slots: z_size,
        prune: cfg.prune_dominated,
        enumeration_cap: cfg.enumeration_cap,
        settings: cfg.settings(),
    };
    let sol = problem
        .solve()?
        .ok_or_else(|| Error::Infeasible(format!("no test channel meets D_d = {dd_target}")))?;
    let witness = witness_from(&sol, src.x_size, src.y_size, z_size);
    let mut achieved_dd = 0.0;
    for x in 0..src.x_size {
        for y in 0..src.y_size {
            for z in 0..z_size {
                achieved_dd += src.pxy[x][y] * witness.pz_given_x[x][z] * dd[x][witness.phi[y][z]];
            }
        }
    }
    Ok(BaselinePoint {
        dd_target,
        rate: finished_rate(src, &witness, &sol)?,
        witness,
        achieved_dd,
        diagnostics: diagnostics(&sol, z_size, bound),
    })
}

/// Wyner-Ziv rate-distortion function: the decoder constraint alone.
pub fn r_wz(
    src: &JointSource,
    dd: &[Vec<f64>],
    dd_target: f64,
    cfg: &SolveConfig,
) -> Result<BaselinePoint> {
    src.ensure_valid()?;
    check_cfg_and_targets(cfg, &[dd_target])?;
    let xhat_size = check_dd_table(src, dd)?;
    let bound = src.x_size + 1;
    let z_size = cfg.z_size.unwrap_or(bound);
    baseline(
        src,
        dd,
        dd_target,
        cfg,
        all_columns(src.y_size, xhat_size)?,
        z_size,
        bound,
    )
}

/// Common-reconstruction rate: `min I(X;Xhat) - I(Y;Xhat)` subject to the
/// decoder constraint. The reconstruction is the auxiliary itself, so `z_size`
/// is fixed to the reconstruction alphabet and the config value is ignored.
pub fn r_cr(
    src: &JointSource,
    dd: &[Vec<f64>],
    dd_target: f64,
    cfg: &SolveConfig,
) -> Result<BaselinePoint> {
    src.ensure_valid()?;
    check_cfg_and_targets(cfg, &[dd_target])?;
    let xhat_size = check_dd_table(src, dd)?;
    let constant = (0..xhat_size).map(|v| vec![v; src.y_size]).collect();
    baseline(src, dd, dd_target, cfg, constant, xhat_size, xhat_size)
}

/// Solves every cell of `dd_grid x de_grid`; cell `[i][j]` holds the result
/// for `(dd_grid[i], de_grid[j])`.
pub fn tradeoff_sweep(
    src: &JointSource,
    spec: &DistortionSpec,
    dd_grid: &[f64],
    de_grid: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<Vec<Result<RatePoint>>>> {
    for grid in [dd_grid, de_grid] {
        if grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Domain("sweep grids must be sorted ascending".into()));
        }
    }
    let cells: Vec<Result<RatePoint>> = (0..dd_grid.len() * de_grid.len())
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / de_grid.len(), c % de_grid.len());
            solve_rate(src, spec, dd_grid[i], de_grid[j], cfg)
        })
        .collect();
    let mut it = cells.into_iter();
    Ok((0..dd_grid.len())
        .map(|_| it.by_ref().take(de_grid.len()).collect())
        .collect())
}
