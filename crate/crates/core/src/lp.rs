//! Small dense linear programs, backed by `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cmp {
    Le,
    Ge,
    Eq,
}

/// A linear program in the form `opt c.x` subject to row constraints and box
/// bounds on every variable.
#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    maximize: bool,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

impl LinearProgram {
    pub fn maximize() -> Self {
        LinearProgram {
            maximize: true,
            objective: Vec::new(),
            bounds: Vec::new(),
            rows: Vec::new(),
        }
    }

    #[cfg(test)]
    pub fn minimize() -> Self {
        LinearProgram {
            maximize: false,
            ..Self::maximize()
        }
    }

    pub fn var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn constraint(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push((terms, cmp, rhs));
    }

    /// Returns `Ok(None)` when the program is infeasible.
    pub fn solve(&self) -> Result<Option<(f64, Vec<f64>)>> {
        let dir = if self.maximize {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        };
        let mut p = Problem::new(dir);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| p.add_var(c, b))
            .collect();
        for (terms, cmp, rhs) in &self.rows {
            let expr: Vec<_> = terms
                .iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|&(i, c)| (vars[i], c))
                .collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(expr.as_slice(), op, *rhs);
        }
        match p.solve() {
            Ok(outcome) => {
                let sol = outcome
                    .into_solution()
                    .map_err(|_| Error::Numerical("linear program interrupted".into()))?;
                let values = vars.iter().map(|&v| sol.var_value(v)).collect();
                Ok(Some((sol.objective(), values)))
            }
            Err(microlp::Error::Infeasible) => Ok(None),
            Err(e) => Err(Error::Numerical(format!("linear program failed: {e:?}"))),
        }
    }
}
