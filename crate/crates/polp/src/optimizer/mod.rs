//! Constrained nonlinear optimization of compiled problems.
//!
//! The solver is a sequential quadratic programming method: at each iterate
//! it minimizes a quadratic model of the objective subject to linearized
//! constraints, globalized by an ℓ1 merit line search, with quasi-Newton
//! curvature estimates. See [`SqpSolver`] for the entry point; the quadratic
//! subproblems are handled by a primal active-set method in [`qp`].

mod qp;
mod sqp;

pub use sqp::SqpSolver;

use std::fmt;

use crate::symbolic::{CompiledExpr, QueryPolynomial};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

/// A smooth problem over the optimizable probabilities: minimize or maximize
/// `objective(x)` subject to `constraints[i](x) <= 0`.
#[derive(Clone, Debug)]
pub struct OptProblem {
    pub objective: CompiledExpr,
    pub direction: Direction,
    /// Residuals in `g(x) <= 0` form; the variable bounds are encoded here
    /// as two rows per variable.
    pub constraints: Vec<CompiledExpr>,
    /// Per-variable `[lo, hi]` box, used for start points and restoration.
    pub bounds: Vec<(f64, f64)>,
    /// Polynomials referenced by `Poly` nodes of the expressions.
    pub polys: Vec<QueryPolynomial>,
}

impl OptProblem {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// +1 for minimization, −1 for maximization; the solver always descends.
    fn sign(&self) -> f64 {
        match self.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        }
    }

    /// Objective in the user's direction.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x, &self.polys)
    }

    /// Objective value and gradient in minimization sense.
    fn minimized(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (v, mut g) = self.objective.value_grad(x, &self.polys);
        let s = self.sign();
        for gi in &mut g {
            *gi *= s;
        }
        (s * v, g)
    }

    fn minimized_value(&self, x: &[f64]) -> f64 {
        self.sign() * self.objective.value(x, &self.polys)
    }

    /// Residual values and their Jacobian rows.
    fn residuals(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut values = Vec::with_capacity(self.constraints.len());
        let mut rows = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let (v, g) = c.value_grad(x, &self.polys);
            values.push(v);
            rows.push(g);
        }
        (values, rows)
    }

    fn residual_values(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.value(x, &self.polys))
            .collect()
    }

    /// Largest constraint violation; 0 when feasible.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(x, &self.polys))
            .fold(0.0, f64::max)
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    fn clamp(&self, x: &mut [f64]) {
        for (xi, &(lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *xi = xi.clamp(lo, hi);
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Feasibility and stationarity tolerance.
    pub tol: f64,
    /// Iteration budget per start point.
    pub max_iters: usize,
    /// Number of start points: the box midpoint, then seeded uniform draws.
    pub multistart: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-5,
            max_iters: 1000,
            multistart: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    /// Objective in the user's direction.
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// ∞-norm of the Lagrangian gradient at the final iterate.
    pub kkt_residual: f64,
    pub max_violation: f64,
}

/// One outer iteration of the best run, for tracing and invariant checks.
#[derive(Clone, Debug)]
pub struct IterRecord {
    pub x: Vec<f64>,
    /// Objective in the user's direction.
    pub objective: f64,
    pub violation: f64,
    pub step_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}
