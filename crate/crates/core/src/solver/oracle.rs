//! Exhaustive grid search, used as an independent check on the solver.

use crate::error::{Error, Result};
use crate::info::entropy;
use crate::model::{DistortionSpec, JointSource};

const MAX_GRID_POINTS: f64 = 5e6;
const MAX_RULE_COLUMNS: f64 = 1e5;

/// All ways to write `total` as an ordered sum of `parts` nonnegative
/// integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .rev()
        .flat_map(|first| {
            compositions(total - first, parts - 1)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

/// Keeps the pairs not dominated by another pair.
fn pareto(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if out.last().map_or(true, |l| p.1 < l.1) {
            out.push(p);
        }
    }
    out
}

/// Minimum of `I(X;Z) - I(Y;Z)` over channels whose rows lie on the grid
/// `{k / grid_resolution}` and over all rules, subject to both constraints.
/// The value upper-bounds the true rate for this `z_size` and decreases as
/// the grid is refined.
pub fn brute_force_oracle(
    src: &JointSource,
    spec: &DistortionSpec,
    dd_target: f64,
    de_target: f64,
    z_size: usize,
    grid_resolution: usize,
) -> Result<f64> {
    src.ensure_valid()?;
    spec.validate()?;
    spec.check_source(src)?;
    super::check_targets(&[dd_target, de_target])?;
    if z_size == 0 || grid_resolution == 0 {
        return Err(Error::Domain(
            "z_size and grid_resolution must be positive".into(),
        ));
    }
    let (nx, ny, nh) = (src.x_size, src.y_size, spec.xhat_size);
    let rows = compositions(grid_resolution, z_size);
    let points = (rows.len() as f64).powi(nx as i32);
    let columns = (nh as f64).powi((nx + ny) as i32);
    if points > MAX_GRID_POINTS || columns > MAX_RULE_COLUMNS {
        return Err(Error::ResourceCap(format!(
            "{points} grid points and {columns} rule columns exceed the oracle limits"
        )));
    }
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|k| k as f64 / grid_resolution as f64)
                .collect()
        })
        .collect();

    // Per rule column (phi(., z), psi(., z)), the per-x weights whose dot
    // product with the channel column gives that column's contribution to
    // the two expected distortions.
    let mut weights: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for code in 0..columns as usize {
        let mut c = code;
        let mut digit = || {
            let d = c % nh;
            c /= nh;
            d
        };
        let phi: Vec<usize> = (0..ny).map(|_| digit()).collect();
        let psi: Vec<usize> = (0..nx).map(|_| digit()).collect();
        let wd = (0..nx)
            .map(|x| (0..ny).map(|y| src.pxy[x][y] * spec.dd[x][phi[y]]).sum())
            .collect();
        let we = (0..nx)
            .map(|x| {
                (0..ny)
                    .map(|y| src.pxy[x][y] * spec.de[phi[y]][psi[x]])
                    .sum()
            })
            .collect();
        weights.push((wd, we));
    }

    let px = src.px();
    let py = src.py();
    let h_x = entropy(px.iter().copied());
    let h_y = entropy(py.iter().copied());
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; nx];
    loop {
        let q: Vec<&Vec<f64>> = idx.iter().map(|&i| &rows[i]).collect();
        let value = if idx.iter().all(|&i| i == idx[0]) {
            0.0
        } else {
            let pz: Vec<f64> = (0..z_size)
                .map(|z| (0..nx).map(|x| px[x] * q[x][z]).sum())
                .collect();
            let h_z = entropy(pz.iter().copied());
            let h_xz = entropy(
                (0..nx)
                    .flat_map(|x| (0..z_size).map(move |z| (x, z)))
                    .map(|(x, z)| px[x] * q[x][z]),
            );
            let h_yz = entropy(
                (0..ny)
                    .flat_map(|y| (0..z_size).map(move |z| (y, z)))
                    .map(|(y, z)| (0..nx).map(|x| src.pxy[x][y] * q[x][z]).sum::<f64>()),
            );
            ((h_x + h_z - h_xz) - (h_y + h_z - h_yz)).max(0.0)
        };
        if value < best && feasible(&q, &weights, z_size, dd_target, de_target) {
            best = value;
        }
        let mut d = nx;
        loop {
            if d == 0 {
                return if best.is_finite() {
                    Ok(best)
                } else {
                    Err(Error::Infeasible("no grid point meets the targets".into()))
                };
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < rows.len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn feasible(
    q: &[&Vec<f64>],
    weights: &[(Vec<f64>, Vec<f64>)],
    z_size: usize,
    dd: f64,
    de: f64,
) -> bool {
    let mut front = vec![(0.0, 0.0)];
    for z in 0..z_size {
        let col: Vec<(f64, f64)> = pareto(
            weights
                .iter()
                .map(|(wd, we)| {
                    let a: f64 = q.iter().zip(wd).map(|(r, w)| r[z] * w).sum();
                    let b: f64 = q.iter().zip(we).map(|(r, w)| r[z] * w).sum();
                    (a, b)
                })
                .collect(),
        );
        let mut next = Vec::with_capacity(front.len() * col.len());
        for f in &front {
            for c in &col {
                next.push((f.0 + c.0, f.1 + c.1));
            }
        }
        front = pareto(next);
    }
    front
        .iter()
        .any(|&(a, b)| a <= dd + 1e-12 && b <= de + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_count() {
        assert_eq!(compositions(4, 3).len(), 15);
        assert!(compositions(5, 2)
            .iter()
            .all(|c| c.iter().sum::<usize>() == 5));
    }

    #[test]
    fn pareto_front() {
        let f = pareto(vec![
            (1.0, 1.0),
            (0.5, 2.0),
            (2.0, 0.5),
            (1.5, 1.5),
            (1.0, 1.2),
        ]);
        assert_eq!(f, vec![(0.5, 2.0), (1.0, 1.0), (2.0, 0.5)]);
    }

    #[test]
    fn guessing_suffices_at_half() {
        let src = JointSource::doubly_symmetric_binary(0.5);
        let spec = DistortionSpec::hamming(2);
        assert_eq!(
            brute_force_oracle(&src, &spec, 0.5, 0.0, 2, 4).unwrap(),
            0.0
        );
    }
}
