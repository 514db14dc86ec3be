//! Thin wrapper over the `minilp` simplex solver.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// A dense-row linear program `opt cᵀx` subject to row constraints and box
/// bounds on each variable.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    maximize: bool,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<(usize, f64)>, Sense, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    pub fn minimize() -> Self {
        Self {
            maximize: false,
            objective: Vec::new(),
            bounds: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn maximize() -> Self {
        Self {
            maximize: true,
            ..Self::minimize()
        }
    }

    /// Adds a variable and returns its index.
    pub fn var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds `Σ coef·x_var (sense) rhs`; zero coefficients are skipped.
    pub fn constraint(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let terms = terms.iter().copied().filter(|(_, c)| *c != 0.0).collect();
        self.rows.push((terms, sense, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let dir = if self.maximize {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        };
        let mut problem = Problem::new(dir);
        let vars: Vec<Variable> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(c, b)| problem.add_var(*c, *b))
            .collect();
        for (terms, sense, rhs) in &self.rows {
            let expr: Vec<(Variable, f64)> = terms.iter().map(|(i, c)| (vars[*i], *c)).collect();
            let op = match sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Eq => ComparisonOp::Eq,
                Sense::Ge => ComparisonOp::Ge,
            };
            problem.add_constraint(expr.as_slice(), op, *rhs);
        }
        match problem.solve() {
            // minilp can report an unbounded ray as an infinite optimum
            Ok(sol) if !sol.objective().is_finite() => Err(LpError::Unbounded),
            Ok(sol) => Ok(LpSolution {
                objective: sol.objective(),
                x: vars.iter().map(|v| sol[*v]).collect(),
            }),
            Err(minilp::Error::Infeasible) => Err(LpError::Infeasible),
            Err(minilp::Error::Unbounded) => Err(LpError::Unbounded),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_programs() {
        // max x + y, x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::maximize();
        let x = lp.var(1.0, 0.0, f64::INFINITY);
        let y = lp.var(1.0, 0.0, f64::INFINITY);
        lp.constraint(&[(x, 1.0), (y, 2.0)], Sense::Le, 4.0);
        lp.constraint(&[(x, 3.0), (y, 1.0)], Sense::Le, 6.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.8).abs() < 1e-9);
        assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);

        let mut lp = LinearProgram::minimize();
        let x = lp.var(1.0, 0.0, 1.0);
        lp.constraint(&[(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);

        let mut lp = LinearProgram::minimize();
        let x = lp.var(-1.0, 0.0, f64::INFINITY);
        lp.constraint(&[(x, 1.0)], Sense::Ge, 0.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }
}
