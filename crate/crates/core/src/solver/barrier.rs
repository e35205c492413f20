//! Log-barrier Newton method for the inner problem: minimize `I(X;Z|Y)` over a
//! test channel subject to linear expected-distortion constraints.
//!
//! Channel columns are grouped: every column belongs to one `z` symbol and the
//! objective only sees the per-group sums. The plain case has one column per
//! group; the extended case has one column per `(z, u)` pair.
//!
//! The objective, in nats, is
//! `f(Q) = sum_x p(x) sum_z G(x,z) ln G(x,z) - sum_y p(y) sum_z R(y,z) ln R(y,z)`
//! with `G` the grouped channel and `R(y,z) = sum_x p(x|y) G(x,z)`. It is
//! convex in `Q`, and its Hessian is block diagonal over `z`.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram};

/// One inner problem instance.
#[derive(Debug, Clone)]
pub(crate) struct GroupedProblem<'a> {
    pub pxy: &'a [Vec<f64>],
    pub n_cols: usize,
    /// `group[c]` is the `z` symbol of column `c`.
    pub group: Vec<usize>,
    pub n_groups: usize,
    /// `cost[k][x][c] = E[d_k | X = x, column c]`.
    pub cost: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierSettings {
    pub max_newton: usize,
    /// Target duality gap, in bits.
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum InnerResult {
    Infeasible,
    Solved(InnerSolution),
}

#[derive(Debug, Clone)]
pub(crate) struct InnerSolution {
    /// `q[x][c]`; rows of zero-mass source symbols put all mass on column 0.
    pub q: Vec<Vec<f64>>,
    pub objective: f64,
    /// Certified suboptimality bound in bits (valid when `converged`).
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Prepared {
    /// Active source symbols (positive mass), as original indices.
    xs: Vec<usize>,
    px: Vec<f64>,
    /// `pxy_a[i][j]` over active x and active y.
    pxy_a: Vec<Vec<f64>>,
    py: Vec<f64>,
    /// Free variables as `(active row, column)`.
    vars: Vec<(usize, usize)>,
    group: Vec<usize>,
    n_groups: usize,
    /// Kept inequality constraints: coefficients over `vars` and right-hand side.
    rows: Vec<(Vec<f64>, f64)>,
}

impl Prepared {
    fn n(&self) -> usize {
        self.vars.len()
    }

    fn grouped(&self, q: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nx = self.xs.len();
        let mut g = vec![vec![0.0; self.n_groups]; nx];
        for (v, &(i, c)) in self.vars.iter().enumerate() {
            g[i][self.group[c]] += q[v];
        }
        let r = (0..self.py.len())
            .map(|j| {
                (0..self.n_groups)
                    .map(|z| (0..nx).map(|i| self.pxy_a[i][j] * g[i][z]).sum::<f64>() / self.py[j])
                    .collect()
            })
            .collect();
        (g, r)
    }

    /// Objective in nats.
    fn objective(&self, q: &[f64]) -> f64 {
        let (g, r) = self.grouped(q);
        let mut f = 0.0;
        for (i, row) in g.iter().enumerate() {
            for &v in row {
                if v > 0.0 {
                    f += self.px[i] * v * v.ln();
                }
            }
        }
        for (j, row) in r.iter().enumerate() {
            for &v in row {
                if v > 0.0 {
                    f -= self.py[j] * v * v.ln();
                }
            }
        }
        f
    }

    fn slacks(&self, q: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(a, b)| b - a.iter().zip(q).map(|(x, y)| x * y).sum::<f64>())
            .collect()
    }

    /// Barrier value `t f - sum ln q - sum ln s`, or `None` outside the domain.
    fn barrier(&self, q: &[f64], t: f64) -> Option<f64> {
        if q.iter().any(|&v| v <= 0.0) {
            return None;
        }
        let s = self.slacks(q);
        if s.iter().any(|&v| v <= 0.0) {
            return None;
        }
        Some(
            t * self.objective(q)
                - q.iter().map(|v| v.ln()).sum::<f64>()
                - s.iter().map(|v| v.ln()).sum::<f64>(),
        )
    }

    fn gradient_hessian(&self, q: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let (g, r) = self.grouped(q);
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for (v, &(i, c)) in self.vars.iter().enumerate() {
            let z = self.group[c];
            let mut d = self.px[i] * g[i][z].ln();
            for (j, rj) in r.iter().enumerate() {
                let w = self.pxy_a[i][j];
                if w > 0.0 {
                    d -= w * rj[z].ln();
                }
            }
            grad[v] = t * d - 1.0 / q[v];
        }
        for (v, &(i, c)) in self.vars.iter().enumerate() {
            let z = self.group[c];
            for (w, &(i2, c2)) in self.vars.iter().enumerate().skip(v) {
                if self.group[c2] != z {
                    continue;
                }
                let mut h = 0.0;
                if i == i2 {
                    h += self.px[i] / g[i][z];
                }
                for (j, rj) in r.iter().enumerate() {
                    let a = self.pxy_a[i][j] * self.pxy_a[i2][j];
                    if a > 0.0 {
                        h -= a / (self.py[j] * rj[z]);
                    }
                }
                hess[(v, w)] += t * h;
                if v != w {
                    hess[(w, v)] += t * h;
                }
            }
            hess[(v, v)] += 1.0 / (q[v] * q[v]);
        }
        let s = self.slacks(q);
        for ((a, _), sk) in self.rows.iter().zip(&s) {
            for v in 0..n {
                if a[v] == 0.0 {
                    continue;
                }
                grad[v] += a[v] / sk;
                for w in 0..n {
                    hess[(v, w)] += a[v] * a[w] / (sk * sk);
                }
            }
        }
        (grad, hess)
    }

    /// Newton direction for the equality-constrained barrier subproblem,
    /// computed in the null space of the row-sum constraints: each row keeps
    /// its last variable as the slack of the others. Steps then leave the
    /// row sums untouched up to round-off, however badly conditioned the
    /// Hessian gets (the objective is flat within a group).
    fn newton_step(&self, grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
        let n = self.n();
        let mut last = vec![usize::MAX; self.xs.len()];
        for (v, &(i, _)) in self.vars.iter().enumerate() {
            last[i] = v;
        }
        let free: Vec<usize> = (0..n).filter(|&v| last[self.vars[v].0] != v).collect();
        if free.is_empty() {
            return Some(DVector::zeros(n));
        }
        let mut z = DMatrix::zeros(n, free.len());
        for (j, &v) in free.iter().enumerate() {
            z[(v, j)] = 1.0;
            z[(last[self.vars[v].0], j)] = -1.0;
        }
        let zt = z.transpose();
        let h = &zt * hess * &z;
        let g = -(&zt * grad);
        let d = match h.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => h.lu().solve(&g)?,
        };
        let step = z * d;
        step.iter().all(|v| v.is_finite()).then_some(step)
    }
}

fn prepare(p: &GroupedProblem) -> Result<Option<Prepared>> {
    let x_size = p.pxy.len();
    let px_all: Vec<f64> = p.pxy.iter().map(|r| r.iter().sum()).collect();
    let xs: Vec<usize> = (0..x_size).filter(|&x| px_all[x] > 0.0).collect();
    let y_size = p.pxy.first().map_or(0, Vec::len);
    let py_all: Vec<f64> = (0..y_size)
        .map(|y| xs.iter().map(|&x| p.pxy[x][y]).sum())
        .collect();
    let ys: Vec<usize> = (0..y_size).filter(|&y| py_all[y] > 0.0).collect();
    let px: Vec<f64> = xs.iter().map(|&x| px_all[x]).collect();
    let pxy_a: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| p.pxy[x][y]).collect())
        .collect();
    let py: Vec<f64> = ys.iter().map(|&y| py_all[y]).collect();

    if p.targets.iter().any(|&b| b < 0.0 || !b.is_finite()) {
        return Err(Error::Domain(
            "distortion targets must be finite and nonnegative".into(),
        ));
    }
    // Variables with positive cost under a zero target are pinned at zero.
    let mut vars = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let before = vars.len();
        for c in 0..p.n_cols {
            let pinned = p
                .targets
                .iter()
                .zip(&p.cost)
                .any(|(&b, cost)| b == 0.0 && cost[x][c] > 0.0);
            if !pinned {
                vars.push((i, c));
            }
        }
        if vars.len() == before {
            return Ok(None);
        }
    }
    let mut rows = Vec::new();
    for (k, &b) in p.targets.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let a: Vec<f64> = vars
            .iter()
            .map(|&(i, c)| px[i] * p.cost[k][xs[i]][c])
            .collect();
        let worst: f64 = (0..xs.len())
            .map(|i| {
                vars.iter()
                    .zip(&a)
                    .filter(|((r, _), _)| *r == i)
                    .map(|(_, &v)| v)
                    .fold(0.0, f64::max)
            })
            .sum();
        if worst > b {
            rows.push((a, b));
        }
    }
    Ok(Some(Prepared {
        xs,
        px,
        pxy_a,
        py,
        vars,
        group: p.group.clone(),
        n_groups: p.n_groups,
        rows,
    }))
}

/// Finds a strictly feasible starting point by maximizing a common relative
/// margin, together with the amount the targets had to be widened by (zero
/// unless the feasible set has no interior). Returns `None` when the
/// constraint set is empty.
fn interior_point(prep: &Prepared, relax: f64) -> Result<Option<(Vec<f64>, f64)>> {
    let n = prep.n();
    let row_len: Vec<usize> = (0..prep.xs.len())
        .map(|i| prep.vars.iter().filter(|(r, _)| *r == i).count())
        .collect();
    let attempt = |extra: f64| -> Result<Option<(f64, Vec<f64>)>> {
        let mut lp = LinearProgram::maximize();
        let q: Vec<usize> = (0..n).map(|_| lp.var(0.0, 0.0, 1.0)).collect();
        let s = lp.var(1.0, -1.0, 1.0);
        for i in 0..prep.xs.len() {
            let terms = prep
                .vars
                .iter()
                .enumerate()
                .filter(|(_, (r, _))| *r == i)
                .map(|(v, _)| (q[v], 1.0))
                .collect();
            lp.constraint(terms, Cmp::Eq, 1.0);
        }
        for (v, &(i, _)) in prep.vars.iter().enumerate() {
            lp.constraint(
                vec![(q[v], 1.0), (s, -1.0 / row_len[i] as f64)],
                Cmp::Ge,
                0.0,
            );
        }
        for (a, b) in &prep.rows {
            let b = b + extra;
            let mut terms: Vec<(usize, f64)> =
                a.iter().enumerate().map(|(v, &c)| (q[v], c)).collect();
            terms.push((s, b));
            lp.constraint(terms, Cmp::Le, b);
        }
        let Some((obj, vals)) = lp.solve()? else {
            return Ok(None);
        };
        // The LP solution meets the row sums only to its own tolerance;
        // Newton steps preserve whatever residual the start has.
        let mut q: Vec<f64> = q.iter().map(|&v| vals[v]).collect();
        let mut sums = vec![0.0; prep.xs.len()];
        for (v, &(i, _)) in prep.vars.iter().enumerate() {
            sums[i] += q[v];
        }
        for (v, &(i, _)) in prep.vars.iter().enumerate() {
            q[v] /= sums[i];
        }
        Ok(Some((obj, q)))
    };
    let interior = |q: &[f64], extra: f64| {
        q.iter().all(|&v| v > 0.0)
            && prep
                .rows
                .iter()
                .all(|(a, b)| b + extra - a.iter().zip(q).map(|(x, y)| x * y).sum::<f64>() > 0.0)
    };
    match attempt(0.0)? {
        None => Ok(None),
        Some((s, _)) if s < -1e-9 => Ok(None),
        Some((s, q)) if s > 1e-9 && interior(&q, 0.0) => Ok(Some((q, 0.0))),
        Some(_) => {
            // Feasible set without interior: widen the targets slightly.
            let mut extra = relax;
            for _ in 0..4 {
                if let Some((s, q)) = attempt(extra)? {
                    if s > 0.0 && interior(&q, extra) {
                        return Ok(Some((q, extra)));
                    }
                }
                extra *= 10.0;
            }
            Err(Error::Numerical(
                "could not find an interior starting point".into(),
            ))
        }
    }
}

/// Minimizes the grouped objective. Targets at exactly zero are handled by
/// pinning variables; a feasible set without interior is widened by
/// `tolerance / 2` per constraint, or by up to a thousand times that when the
/// LP's round-off leaves no strictly interior point at the smaller widening.
pub(crate) fn minimize(p: &GroupedProblem, settings: &BarrierSettings) -> Result<InnerResult> {
    let Some(mut prep) = prepare(p)? else {
        return Ok(InnerResult::Infeasible);
    };
    let relax = 0.5 * settings.tolerance;
    let Some((mut q, extra)) = interior_point(&prep, relax)? else {
        return Ok(InnerResult::Infeasible);
    };
    for row in &mut prep.rows {
        row.1 += extra;
    }

    let n = prep.n();
    let m_ineq = (n + prep.rows.len()) as f64;
    let tol_nats = settings.tolerance * LN_2;
    let mut t = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    'outer: loop {
        // Centering.
        loop {
            if iterations >= settings.max_newton {
                break 'outer;
            }
            iterations += 1;
            let (grad, hess) = prep.gradient_hessian(&q, t);
            let Some(step) = prep.newton_step(&grad, &hess) else {
                break;
            };
            let decrement = -grad.dot(&step);
            let phi0 = prep.barrier(&q, t).unwrap_or(f64::INFINITY);
            // Late in the run the barrier value is large and its round-off
            // exceeds the absolute threshold; the relative one bounds the
            // objective error by about 1e-13 |phi| / t.
            if decrement / 2.0 <= 1e-10 || decrement / 2.0 <= 1e-13 * phi0.abs() {
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let cand: Vec<f64> = q
                    .iter()
                    .zip(step.iter())
                    .map(|(a, d)| a + alpha * d)
                    .collect();
                if let Some(phi) = prep.barrier(&cand, t) {
                    if phi <= phi0 - 0.25 * alpha * decrement {
                        q = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        gap = m_ineq / t;
        if gap < tol_nats {
            converged = true;
            break;
        }
        t *= 8.0;
    }

    let objective = (prep.objective(&q) / LN_2).max(0.0);
    let mut full = vec![vec![0.0; p.n_cols]; p.pxy.len()];
    for (x, row) in full.iter_mut().enumerate() {
        if !prep.xs.contains(&x) {
            row[0] = 1.0;
        }
    }
    for (v, &(i, c)) in prep.vars.iter().enumerate() {
        full[prep.xs[i]][c] = q[v];
    }
    // Renormalize away round-off so rows sum to one.
    for row in &mut full {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    Ok(InnerResult::Solved(InnerSolution {
        q: full,
        objective,
        gap: gap / LN_2,
        iterations,
        converged,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;

    fn settings() -> BarrierSettings {
        BarrierSettings {
            max_newton: 2000,
            tolerance: 1e-9,
        }
    }

    fn solved(r: InnerResult) -> InnerSolution {
        match r {
            InnerResult::Solved(s) => s,
            InnerResult::Infeasible => panic!("unexpectedly infeasible"),
        }
    }

    #[test]
    fn binary_rate_distortion_with_useless_side_information() {
        // Uniform X, Y independent: columns decode to 0 and 1; the optimum is
        // the classical 1 - h(D).
        let pxy = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
        let cost = vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]];
        for &d in &[0.05, 0.2, 0.35] {
            let p = GroupedProblem {
                pxy: &pxy,
                n_cols: 2,
                group: vec![0, 1],
                n_groups: 2,
                cost: cost.clone(),
                targets: vec![d],
            };
            let s = solved(minimize(&p, &settings()).unwrap());
            assert!(s.converged);
            let want = 1.0 - binary_entropy(d);
            assert!(
                (s.objective - want).abs() < 1e-7,
                "{d}: {} vs {want}",
                s.objective
            );
        }
    }

    #[test]
    fn zero_target_pins_columns() {
        let pxy = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
        let cost = vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]];
        let p = GroupedProblem {
            pxy: &pxy,
            n_cols: 2,
            group: vec![0, 1],
            n_groups: 2,
            cost,
            targets: vec![0.0],
        };
        let s = solved(minimize(&p, &settings()).unwrap());
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert_eq!(s.q[0][1], 0.0);
    }

    #[test]
    fn infeasible_targets() {
        let pxy = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        let cost = vec![vec![vec![0.5, 0.6], vec![0.7, 0.5]]];
        let p = GroupedProblem {
            pxy: &pxy,
            n_cols: 2,
            group: vec![0, 1],
            n_groups: 2,
            cost,
            targets: vec![0.4],
        };
        assert!(matches!(
            minimize(&p, &settings()).unwrap(),
            InnerResult::Infeasible
        ));
    }
}
