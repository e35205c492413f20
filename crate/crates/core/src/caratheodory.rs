//! Support reduction for convex combinations, and its use to shrink the
//! encoder's private auxiliary alphabet in the K-constraint problem.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram};
use crate::model::{ExtendedInstance, JointSource};

/// Face-membership tolerance.
const FACE_TOL: f64 = 1e-9;

/// Points in `R^d` with convex weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexCombination {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ConvexCombination {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let c = ConvexCombination { points, weights };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.points.len() != self.weights.len() {
            return Err(Error::Dimension(
                "need as many weights as points, and at least one point".into(),
            ));
        }
        let d = self.points[0].len();
        if self
            .points
            .iter()
            .any(|p| p.len() != d || p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Dimension(
                "points must be finite and share a dimension".into(),
            ));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("weights sum to {s}, not 1")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Number of points with positive weight.
    pub fn support(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// `sum_i w_i p_i`.
    pub fn target(&self) -> Vec<f64> {
        weighted_sum(&self.points, &self.weights)
    }
}

fn weighted_sum(points: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; points.first().map_or(0, Vec::len)];
    for (p, &w) in points.iter().zip(weights) {
        for (ti, pi) in t.iter_mut().zip(p) {
            *ti += w * pi;
        }
    }
    t
}

/// A nonzero `alpha` with `sum alpha_i p_i = 0` and `sum alpha_i = 0`, for
/// exactly `d + 2` points: the eigenvector of the smallest eigenvalue of
/// `A^T A` with `A = [points; 1]`.
fn affine_dependence(points: &[&Vec<f64>]) -> DVector<f64> {
    let d = points[0].len();
    let m = points.len();
    let a = DMatrix::from_fn(d + 1, m, |r, c| if r < d { points[c][r] } else { 1.0 });
    let eig = (a.transpose() * &a).symmetric_eigen();
    let (i, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty");
    eig.eigenvectors.column(i).into_owned()
}

/// Reduces to at most `d + 1` indices into `points`, with weights.
fn reduce_indices(points: &[Vec<f64>], weights: &[f64]) -> Vec<(usize, f64)> {
    let d = points.first().map_or(0, Vec::len);
    let mut live: Vec<(usize, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, &w)| (i, w))
        .collect();
    while live.len() > d + 1 {
        let head = &live[..d + 2];
        let pts: Vec<&Vec<f64>> = head.iter().map(|(i, _)| &points[*i]).collect();
        let mut alpha = affine_dependence(&pts);
        if alpha.iter().all(|a| *a <= 0.0) {
            alpha = -alpha;
        }
        // Largest step keeping all weights nonnegative; on ties the point
        // with the largest index leaves.
        let mut step = f64::INFINITY;
        let mut out = 0;
        for (j, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                let r = head[j].1 / a;
                if r <= step {
                    step = r;
                    out = j;
                }
            }
        }
        for (j, &a) in alpha.iter().enumerate() {
            live[j].1 -= step * a;
        }
        live[out].1 = 0.0;
        live.retain(|(_, w)| *w > 0.0);
    }
    let s: f64 = live.iter().map(|(_, w)| w).sum();
    live.iter().map(|&(i, w)| (i, w / s)).collect()
}

fn from_indices(points: &[Vec<f64>], picked: &[(usize, f64)]) -> ConvexCombination {
    ConvexCombination {
        points: picked.iter().map(|(i, _)| points[*i].clone()).collect(),
        weights: picked.iter().map(|(_, w)| *w).collect(),
    }
}

/// Rewrites the combination over at most `d + 1` of its points, keeping the
/// represented point.
pub fn caratheodory_reduce(comb: &ConvexCombination) -> Result<ConvexCombination> {
    comb.validate()?;
    Ok(from_indices(
        &comb.points,
        &reduce_indices(&comb.points, &comb.weights),
    ))
}

/// Orthonormal basis of the complement of `c`.
fn complement_basis(c: &[f64]) -> Vec<Vec<f64>> {
    let d = c.len();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![c.iter().map(|v| v / norm).collect()];
    for e in 0..d {
        let mut v: Vec<f64> = (0..d).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Writes `target`, a point of the hull of `points` maximizing `normal . p`,
/// as a combination of at most `d` points of the supporting face.
pub fn boundary_reduce(
    points: &[Vec<f64>],
    target: &[f64],
    normal: &[f64],
) -> Result<ConvexCombination> {
    let d = target.len();
    if points.is_empty() || points.iter().any(|p| p.len() != d) || normal.len() != d || d == 0 {
        return Err(Error::Dimension(
            "points, target and normal must share a dimension".into(),
        ));
    }
    if normal.iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("normal must be nonzero".into()));
    }
    let dotc = |p: &[f64]| p.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>();
    let level = dotc(target);
    let scale = 1.0 + level.abs();
    if points.iter().any(|p| dotc(p) > level + FACE_TOL * scale) {
        return Err(Error::Domain(
            "normal does not support the hull at the target".into(),
        ));
    }
    let face: Vec<usize> = (0..points.len())
        .filter(|&i| dotc(&points[i]) >= level - FACE_TOL * scale)
        .collect();

    let mut lp = LinearProgram::maximize();
    let w: Vec<usize> = face.iter().map(|_| lp.var(0.0, 0.0, 1.0)).collect();
    lp.constraint(w.iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
    for k in 0..d {
        let terms = face
            .iter()
            .zip(&w)
            .map(|(&i, &v)| (v, points[i][k]))
            .collect();
        lp.constraint(terms, Cmp::Eq, target[k]);
    }
    let Some((_, sol)) = lp.solve()? else {
        return Err(Error::Domain("target is not in the supporting face".into()));
    };
    let weights: Vec<f64> = w.iter().map(|&v| sol[v].max(0.0)).collect();
    let s: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|v| v / s).collect();

    // Face coordinates relative to the target, in the hyperplane.
    let basis = complement_basis(normal);
    let projected: Vec<Vec<f64>> = face
        .iter()
        .map(|&i| {
            basis
                .iter()
                .map(|b| {
                    b.iter()
                        .zip(&points[i])
                        .zip(target)
                        .map(|((bk, p), t)| bk * (p - t))
                        .sum()
                })
                .collect()
        })
        .collect();
    let picked: Vec<(usize, f64)> = if basis.is_empty() {
        // One-dimensional space: the face is a single level, any point works.
        let j = (0..face.len())
            .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
            .expect("nonempty face");
        vec![(face[j], 1.0)]
    } else {
        reduce_indices(&projected, &weights)
            .into_iter()
            .map(|(j, wt)| (face[j], wt))
            .collect()
    };
    Ok(from_indices(points, &picked))
}

/// Result of [`reduce_aux_u`]: `pu_given_xz[x][z][j]` and `psi[x][z][j]` with
/// `j < K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxReduction {
    pub pu_given_xz: Vec<Vec<Vec<f64>>>,
    pub psi: Vec<Vec<Vec<usize>>>,
}

/// Per-`(x, z)` conditional distortion vectors `h(u)`, for `u` in `0..|U|`.
pub fn conditional_costs(
    py_given_x: &[f64],
    ext: &ExtendedInstance,
    x: usize,
    phi_z: &[usize],
    psi_xz: &[usize],
) -> Vec<Vec<f64>> {
    psi_xz
        .iter()
        .map(|&xe| {
            (0..ext.k)
                .map(|k| {
                    phi_z
                        .iter()
                        .zip(py_given_x)
                        .map(|(&xd, &p)| p * ext.dk[k][x][xd][xe])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Unit null vector of the rows of `m` (`rows x cols`), or `None` when the
/// null space is not one-dimensional.
fn null_vector(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let g = m.transpose() * m;
    let scale = g.diagonal().amax().max(1.0);
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let second = order.get(1).map_or(f64::INFINITY, |&i| eig.eigenvalues[i]);
    (second > 1e-10 * scale).then(|| eig.eigenvectors.column(order[0]).into_owned())
}

/// Outward normal of a hull facet through `s`, a point on the boundary of the
/// hull of `points`. Facets are enumerated as hyperplanes through `d`
/// affinely independent points; the one passing closest to `s` wins, the
/// first in lexicographic order on ties. A hull of dimension below `d` is
/// all boundary, and any normal of its affine span is returned.
fn supporting_normal(points: &[Vec<f64>], s: &[f64]) -> Result<Vec<f64>> {
    let d = s.len();
    let scale = 1.0 + points.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-10 * scale;
    let dot = |c: &[f64], p: &[f64]| c.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut any_full = false;
    let mut subset: Vec<usize> = (0..d).collect();
    if points.len() >= d {
        loop {
            let m = DMatrix::from_fn(
                d,
                d + 1,
                |r, c| if c < d { points[subset[r]][c] } else { -1.0 },
            );
            if let Some(v) = null_vector(&m) {
                any_full = true;
                let mut c: Vec<f64> = v.iter().take(d).copied().collect();
                let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    c.iter_mut().for_each(|x| *x /= norm);
                    let b = dot(&c, &points[subset[0]]);
                    let levels: Vec<f64> = points.iter().map(|p| dot(&c, p) - b).collect();
                    let above = levels.iter().any(|l| *l > tol);
                    let below = levels.iter().any(|l| *l < -tol);
                    if !(above && below) {
                        if above {
                            c.iter_mut().for_each(|x| *x = -*x);
                        }
                        let miss = (dot(&c, s) - dot(&c, &points[subset[0]])).abs();
                        if best.as_ref().map_or(true, |(m, _)| miss < *m) {
                            best = Some((miss, c));
                        }
                    }
                }
            }
            // Next d-subset in lexicographic order.
            let Some(i) = (0..d).rev().find(|&i| subset[i] < points.len() - d + i) else {
                break;
            };
            subset[i] += 1;
            for j in i + 1..d {
                subset[j] = subset[j - 1] + 1;
            }
        }
    }
    if let Some((miss, c)) = best {
        if miss <= 1e-7 * scale {
            return Ok(c);
        }
        if any_full {
            return Err(Error::Numerical(format!(
                "boundary point is {miss} away from every facet"
            )));
        }
    }
    // Flat hull: a normal of the affine span of all points.
    let diffs = DMatrix::from_fn(points.len().max(2) - 1, d, |r, c| {
        points.get(r + 1).map_or(0.0, |p| p[c] - points[0][c])
    });
    let g = diffs.transpose() * diffs;
    let eig = g.symmetric_eigen();
    let (i, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    Ok(eig.eigenvectors.column(i).iter().copied().collect())
}

fn reduce_cell(
    costs: &[Vec<f64>],
    pu: &[f64],
    psi: &[usize],
    kk: usize,
) -> Result<(Vec<f64>, Vec<usize>)> {
    // Distinct cost vectors, each tagged with its lowest preimage.
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut first_u: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (u, h) in costs.iter().enumerate() {
        match points.iter().position(|p| p == h) {
            Some(i) => weights[i] += pu[u],
            None => {
                points.push(h.clone());
                first_u.push(u);
                weights.push(pu[u]);
            }
        }
    }
    let avg = weighted_sum(&points, &weights);

    // Slide from the average along -(1, ..., 1) to the hull boundary.
    let mut lp = LinearProgram::maximize();
    let w: Vec<usize> = points.iter().map(|_| lp.var(0.0, 0.0, 1.0)).collect();
    let t = lp.var(1.0, 0.0, f64::INFINITY);
    lp.constraint(w.iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
    for k in 0..kk {
        let mut terms: Vec<(usize, f64)> = points.iter().zip(&w).map(|(p, &v)| (v, p[k])).collect();
        terms.push((t, 1.0));
        lp.constraint(terms, Cmp::Eq, avg[k]);
    }
    let (t_star, _) = lp
        .solve()?
        .ok_or_else(|| Error::Numerical("average is outside its own hull".into()))?;
    let boundary: Vec<f64> = avg.iter().map(|a| a - t_star).collect();

    let normal = supporting_normal(&points, &boundary)?;

    let comb = boundary_reduce(&points, &boundary, &normal)?;
    let mut new_pu = vec![0.0; kk];
    let mut new_psi = vec![0; kk];
    for (j, (p, &wt)) in comb.points.iter().zip(&comb.weights).enumerate() {
        let i = points
            .iter()
            .position(|q| q == p)
            .expect("point comes from the set");
        new_pu[j] = wt;
        new_psi[j] = psi[first_u[i]];
    }
    for j in comb.points.len()..kk {
        new_psi[j] = new_psi[0];
    }
    Ok((new_pu, new_psi))
}

/// Replaces the auxiliary `U` (given `(X, Z)`) by one with at most `K`
/// values without raising any per-`(x, z)` conditional distortion.
///
/// `pz_given_x[x][z]`, `pu_given_xz[x][z][u]`, `phi[y][z]`, `psi[x][z][u]`.
/// When `|U| <= K` the input is returned unchanged.
pub fn reduce_aux_u(
    src: &JointSource,
    ext: &ExtendedInstance,
    pz_given_x: &[Vec<f64>],
    pu_given_xz: &[Vec<Vec<f64>>],
    phi: &[Vec<usize>],
    psi: &[Vec<Vec<usize>>],
) -> Result<AuxReduction> {
    src.ensure_valid()?;
    ext.validate(src.x_size)?;
    let z_size = pz_given_x.first().map_or(0, Vec::len);
    let u_size = pu_given_xz
        .first()
        .and_then(|r| r.first())
        .map_or(0, Vec::len);
    let shapes = pz_given_x.len() == src.x_size
        && pu_given_xz.len() == src.x_size
        && psi.len() == src.x_size
        && phi.len() == src.y_size
        && z_size > 0
        && u_size > 0
        && phi.iter().all(|r| r.len() == z_size)
        && pu_given_xz.iter().zip(psi).all(|(pr, sr)| {
            pr.len() == z_size
                && sr.len() == z_size
                && pr.iter().all(|c| c.len() == u_size)
                && sr.iter().all(|c| c.len() == u_size)
        });
    if !shapes {
        return Err(Error::Dimension(
            "witness tables have inconsistent shapes".into(),
        ));
    }
    if phi.iter().flatten().any(|&v| v >= ext.xhat_d_size)
        || psi
            .iter()
            .flatten()
            .flatten()
            .any(|&v| v >= ext.xhat_e_size)
    {
        return Err(Error::Domain(
            "reconstruction index outside its alphabet".into(),
        ));
    }
    if pu_given_xz.iter().flatten().any(|c| {
        c.iter().any(|p| !p.is_finite() || *p < 0.0) || (c.iter().sum::<f64>() - 1.0).abs() > 1e-9
    }) {
        return Err(Error::Domain(
            "each P(u | x, z) must be a distribution".into(),
        ));
    }
    if u_size <= ext.k {
        return Ok(AuxReduction {
            pu_given_xz: pu_given_xz.to_vec(),
            psi: psi.to_vec(),
        });
    }
    let pyx = src.py_given_x();
    let cells: Vec<(Vec<f64>, Vec<usize>)> = (0..src.x_size * z_size)
        .into_par_iter()
        .map(|c| {
            let (x, z) = (c / z_size, c % z_size);
            let phi_z: Vec<usize> = phi.iter().map(|r| r[z]).collect();
            let costs = conditional_costs(&pyx[x], ext, x, &phi_z, &psi[x][z]);
            reduce_cell(&costs, &pu_given_xz[x][z], &psi[x][z], ext.k)
                .map_err(|e| Error::Numerical(format!("cell (x = {x}, z = {z}): {e}")))
        })
        .collect::<Result<_>>()?;
    let mut it = cells.into_iter();
    let mut out_pu = Vec::with_capacity(src.x_size);
    let mut out_psi = Vec::with_capacity(src.x_size);
    for _ in 0..src.x_size {
        let (pu, ps): (Vec<_>, Vec<_>) = it.by_ref().take(z_size).unzip();
        out_pu.push(pu);
        out_psi.push(ps);
    }
    Ok(AuxReduction {
        pu_given_xz: out_pu,
        psi: out_psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_kept() {
        let c = ConvexCombination::new(vec![vec![0.3, 0.7]], vec![1.0]).unwrap();
        assert_eq!(caratheodory_reduce(&c).unwrap(), c);
    }

    #[test]
    fn square_center() {
        let c = ConvexCombination::new(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
            vec![0.25; 4],
        )
        .unwrap();
        let r = caratheodory_reduce(&c).unwrap();
        assert!(r.points.len() <= 3);
        let t = r.target();
        assert!((t[0] - 0.5).abs() < 1e-12 && (t[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn square_edge_and_vertex() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let r = boundary_reduce(&pts, &[1.0, 0.5], &[1.0, 0.0]).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.weights.iter().all(|w| (w - 0.5).abs() < 1e-12));

        let r = boundary_reduce(&pts, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.points, vec![vec![1.0, 1.0]]);
        assert_eq!(r.weights, vec![1.0]);

        assert!(boundary_reduce(&pts, &[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(ConvexCombination::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.6]).is_err());
        assert!(ConvexCombination::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
    }
}
