//! Outer enumeration over reconstruction rules.
//!
//! For a fixed `z`, the decoder rule `phi(., z)` and the encoder choices for
//! that `z` determine a per-`x` list of cost vectors, one per channel column in
//! the group of `z`. We call that bundle a column type. The objective only
//! depends on how much mass each `x` puts on each group, so:
//!
//! * relabeling `z` does not change anything, and a candidate is a set of
//!   types rather than a sequence;
//! * two groups with the same type can be merged without raising the
//!   objective, so the types in a candidate are distinct;
//! * a candidate can always be enlarged with unused types, so it suffices to
//!   try sets of exactly `min(z_size, #types)` types;
//! * a type whose every column is matched by a column of another type with
//!   no larger costs can be replaced by that type.

use rayon::prelude::*;

use super::barrier::{self, BarrierSettings, GroupedProblem, InnerResult, InnerSolution};
use crate::error::{Error, Result};

/// Distortion `d_k(x, xhat_d, xhat_e)`.
pub(crate) type DistFn<'a> = dyn Fn(usize, usize, usize, usize) -> f64 + Sync + 'a;

pub(crate) struct TypeProblem<'a> {
    pub pxy: &'a [Vec<f64>],
    pub py_given_x: Vec<Vec<f64>>,
    /// Admissible decoder columns `y -> xhat_d`.
    pub phi_cols: Vec<Vec<usize>>,
    pub xhat_e_size: usize,
    pub n_costs: usize,
    pub dist: &'a DistFn<'a>,
    /// Encoder choices available per `x` inside one group.
    pub options: usize,
    pub targets: Vec<f64>,
    pub z_slots: usize,
    pub prune: bool,
    pub enumeration_cap: usize,
    pub settings: BarrierSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ColumnType {
    pub phi: Vec<usize>,
    /// `enc[x][o]`: encoder reconstruction for option `o`.
    pub enc: Vec<Vec<usize>>,
    /// `cost[x][o][k]`.
    pub cost: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub(crate) struct TypeSolution {
    pub types: Vec<ColumnType>,
    /// `q[x][g * options + o]`.
    pub q: Vec<Vec<f64>>,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_types: usize,
    pub n_candidates: usize,
    pub unconverged: usize,
    /// Whether the enumeration left some type combinations unexplored
    /// because `z_slots` is smaller than the number of types.
    pub truncated: bool,
}

/// All decoder columns `y -> xhat`, lexicographic.
pub(crate) fn all_columns(y_size: usize, xhat_size: usize) -> Result<Vec<Vec<usize>>> {
    let count = (xhat_size as f64).powi(y_size as i32);
    if count > 1e7 {
        return Err(Error::ResourceCap(format!(
            "{count} decoder columns; reduce the alphabets"
        )));
    }
    let mut out = vec![Vec::new()];
    for _ in 0..y_size {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..xhat_size).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        while i > 0 && c[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        c[i - 1] += 1;
        for j in i..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// `a` dominates `b` when every column of `b` is matched, for every active
/// `x`, by a column of `a` with no larger costs.
fn dominates(a: &ColumnType, b: &ColumnType, active: &[usize]) -> bool {
    active.iter().all(|&x| {
        b.cost[x]
            .iter()
            .all(|cb| a.cost[x].iter().any(|ca| leq(ca, cb)))
    })
}

impl TypeProblem<'_> {
    fn x_size(&self) -> usize {
        self.pxy.len()
    }

    fn active(&self) -> Vec<usize> {
        (0..self.x_size())
            .filter(|&x| self.pxy[x].iter().sum::<f64>() > 0.0)
            .collect()
    }

    /// `cost[x][xe][k]` for one decoder column.
    fn column_costs(&self, phi: &[usize]) -> Vec<Vec<Vec<f64>>> {
        (0..self.x_size())
            .map(|x| {
                (0..self.xhat_e_size)
                    .map(|xe| {
                        (0..self.n_costs)
                            .map(|k| {
                                phi.iter()
                                    .enumerate()
                                    .map(|(y, &xd)| {
                                        let w = self.py_given_x[x][y];
                                        if w > 0.0 {
                                            w * (self.dist)(k, x, xd, xe)
                                        } else {
                                            0.0
                                        }
                                    })
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Encoder option sets available to one source symbol.
    fn encoder_sets(&self, costs: &[Vec<f64>]) -> Vec<Vec<usize>> {
        let mut pool: Vec<usize> = (0..self.xhat_e_size).collect();
        if self.prune {
            // Keep the Pareto-minimal estimates, lowest index among equals.
            pool.retain(|&e| {
                !(0..self.xhat_e_size)
                    .any(|f| f != e && leq(&costs[f], &costs[e]) && (costs[f] != costs[e] || f < e))
            });
        }
        let size = self.options.min(pool.len());
        combinations(pool.len(), size)
            .into_iter()
            .map(|c| c.into_iter().map(|i| pool[i]).collect())
            .collect()
    }

    pub(crate) fn build_types(&self) -> Result<Vec<ColumnType>> {
        let x_size = self.x_size();
        let mut types = Vec::new();
        for phi in &self.phi_cols {
            let costs = self.column_costs(phi);
            let sets: Vec<Vec<Vec<usize>>> =
                (0..x_size).map(|x| self.encoder_sets(&costs[x])).collect();
            let count: f64 = sets.iter().map(|s| s.len() as f64).product();
            if types.len() as f64 + count > self.enumeration_cap as f64 {
                return Err(Error::ResourceCap(format!(
                    "more than {} column types; lower z_size or the alphabets",
                    self.enumeration_cap
                )));
            }
            for t in 0..count as usize {
                // Mixed-radix digits, last source symbol fastest.
                let mut rest = t;
                let mut idx = vec![0usize; x_size];
                for x in (0..x_size).rev() {
                    idx[x] = rest % sets[x].len();
                    rest /= sets[x].len();
                }
                let enc: Vec<Vec<usize>> = (0..x_size).map(|x| sets[x][idx[x]].clone()).collect();
                let cost = enc
                    .iter()
                    .enumerate()
                    .map(|(x, es)| es.iter().map(|&e| costs[x][e].clone()).collect())
                    .collect();
                types.push(ColumnType {
                    phi: phi.clone(),
                    enc,
                    cost,
                });
            }
        }
        if self.prune {
            let active = self.active();
            let keep: Vec<bool> = (0..types.len())
                .into_par_iter()
                .map(|b| {
                    !(0..types.len()).any(|a| {
                        a != b
                            && dominates(&types[a], &types[b], &active)
                            && (a < b || !dominates(&types[b], &types[a], &active))
                    })
                })
                .collect();
            let mut i = 0;
            types.retain(|_| {
                i += 1;
                keep[i - 1]
            });
        }
        Ok(types)
    }

    fn grouped<'s>(&'s self, chosen: &[&ColumnType]) -> GroupedProblem<'s> {
        let o = self.options;
        let n_groups = chosen.len();
        let cost = (0..self.n_costs)
            .map(|k| {
                (0..self.x_size())
                    .map(|x| {
                        (0..n_groups * o)
                            .map(|c| {
                                let col = &chosen[c / o].cost[x];
                                // Short option lists repeat their last entry.
                                col[(c % o).min(col.len() - 1)][k]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GroupedProblem {
            pxy: self.pxy,
            n_cols: n_groups * o,
            group: (0..n_groups * o).map(|c| c / o).collect(),
            n_groups,
            cost,
            targets: self.targets.clone(),
        }
    }

    /// Minimizes over all candidates; `Ok(None)` when every candidate is
    /// infeasible.
    pub(crate) fn solve(&self) -> Result<Option<TypeSolution>> {
        let types = self.build_types()?;
        // One group means Z is independent of X: rate exactly zero.
        let single: Vec<Option<InnerSolution>> = types
            .par_iter()
            .map(
                |t| match barrier::minimize(&self.grouped(&[t]), &self.settings)? {
                    InnerResult::Infeasible => Ok(None),
                    InnerResult::Solved(s) => Ok(Some(s)),
                },
            )
            .collect::<Result<_>>()?;
        if let Some(i) = single.iter().position(Option::is_some) {
            let sol = single[i].clone().expect("checked above");
            return Ok(Some(TypeSolution {
                types: vec![types[i].clone()],
                q: sol.q,
                gap: 0.0,
                iterations: sol.iterations,
                converged: true,
                n_types: types.len(),
                n_candidates: types.len(),
                unconverged: 0,
                truncated: false,
            }));
        }
        let k = self.z_slots.min(types.len());
        let n_candidates = binomial(types.len(), k);
        if n_candidates > self.enumeration_cap as f64 {
            return Err(Error::ResourceCap(format!(
                "{n_candidates} candidate rule sets exceed the enumeration cap of {}; \
                 lower z_size",
                self.enumeration_cap
            )));
        }
        let candidates = combinations(types.len(), k);
        let results: Vec<Option<InnerSolution>> = candidates
            .par_iter()
            .map(|cand| {
                let chosen: Vec<&ColumnType> = cand.iter().map(|&i| &types[i]).collect();
                match barrier::minimize(&self.grouped(&chosen), &self.settings)? {
                    InnerResult::Infeasible => Ok(None),
                    InnerResult::Solved(s) => Ok(Some(s)),
                }
            })
            .collect::<Result<_>>()?;
        let unconverged = results.iter().flatten().filter(|s| !s.converged).count();
        let mut best: Option<usize> = None;
        for (i, r) in results.iter().enumerate() {
            if let Some(s) = r {
                let better = match best {
                    None => true,
                    Some(b) => {
                        s.objective
                            < results[b].as_ref().map_or(f64::INFINITY, |t| t.objective) - 1e-12
                    }
                };
                if better {
                    best = Some(i);
                }
            }
        }
        let Some(b) = best else {
            return Ok(None);
        };
        let sol = results[b].clone().expect("best candidate is solved");
        Ok(Some(TypeSolution {
            types: candidates[b].iter().map(|&i| types[i].clone()).collect(),
            q: sol.q,
            gap: sol.gap,
            iterations: sol.iterations,
            converged: sol.converged,
            n_types: types.len(),
            n_candidates: candidates.len(),
            unconverged,
            truncated: k < types.len(),
        }))
    }
}
