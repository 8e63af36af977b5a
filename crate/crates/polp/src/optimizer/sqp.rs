//! Sequential quadratic programming with an elastic fallback for infeasible
//! iterates, an ℓ1 merit line search, damped quasi-Newton updates, and a
//! projected-gradient restoration phase.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::qp::{solve_qp, Qp, QpSolution};
use super::{dot, inf_norm, IterRecord, OptProblem, Solution, SolveStatus, SolverConfig};
use crate::error::{Error, Result};

pub struct SqpSolver;

impl SqpSolver {
    pub fn solve(problem: &OptProblem, config: &SolverConfig) -> Result<Solution> {
        Ok(Self::solve_traced(problem, config)?.0)
    }

    /// Solve from every start point and return the best run with its
    /// iterate trace. Runs are ranked converged first, then feasible, then
    /// by violation, objective, stationarity, and lexicographic iterate, so
    /// the result is deterministic for a fixed seed.
    pub fn solve_traced(
        problem: &OptProblem,
        config: &SolverConfig,
    ) -> Result<(Solution, Vec<IterRecord>)> {
        if problem.dim() == 0 {
            return Err(Error::Solver("problem has no decision variables".into()));
        }
        if problem
            .bounds
            .iter()
            .any(|&(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi)
        {
            return Err(Error::Solver(
                "variable bounds must satisfy lo <= hi".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let starts = config.multistart.max(1);
        let mut best: Option<(Solution, Vec<IterRecord>)> = None;
        for k in 0..starts {
            let x0: Vec<f64> = if k == 0 {
                problem.midpoint()
            } else {
                problem
                    .bounds
                    .iter()
                    .map(|&(lo, hi)| rng.random_range(lo..=hi))
                    .collect()
            };
            let candidate = run_from(problem, config, x0);
            best = Some(match best.take() {
                None => candidate,
                Some(cur) => {
                    if prefer(problem, &candidate.0, &cur.0, config.tol) {
                        candidate
                    } else {
                        cur
                    }
                }
            });
        }
        Ok(best.expect("at least one start"))
    }
}

/// Does solution `a` beat solution `b`?
fn prefer(problem: &OptProblem, a: &Solution, b: &Solution, tol: f64) -> bool {
    fn class(s: &Solution, tol: f64) -> u8 {
        if s.status == SolveStatus::Converged {
            0
        } else if s.max_violation <= tol {
            1
        } else {
            2
        }
    }
    let (ca, cb) = (class(a, tol), class(b, tol));
    if ca != cb {
        return ca < cb;
    }
    if ca == 2 && a.max_violation != b.max_violation {
        return a.max_violation < b.max_violation;
    }
    let (fa, fb) = (problem.sign() * a.objective, problem.sign() * b.objective);
    if fa != fb {
        return fa < fb;
    }
    if a.kkt_residual != b.kkt_residual {
        return a.kkt_residual < b.kkt_residual;
    }
    a.x < b.x
}

fn run_from(
    problem: &OptProblem,
    config: &SolverConfig,
    mut x: Vec<f64>,
) -> (Solution, Vec<IterRecord>) {
    let n = problem.dim();
    let m = problem.constraints.len();
    let tol = config.tol;
    problem.clamp(&mut x);
    let mut hess = identity(n);
    let mut lambda = vec![0.0; m];
    let mut mu = 1.0_f64;
    let mut prev_f = f64::INFINITY;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut status = SolveStatus::MaxIters;
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;

    while iterations < config.max_iters.max(1) {
        iterations += 1;
        let (f, grad) = problem.minimized(&x);
        let (g, jac) = problem.residuals(&x);
        let viol = g.iter().fold(0.0f64, |a, &v| a.max(v));
        kkt = kkt_residual(&grad, &jac, &lambda);
        trace.push(IterRecord {
            x: x.clone(),
            objective: problem.sign() * f,
            violation: viol,
            step_norm: 0.0,
        });

        if viol <= tol && ((f - prev_f).abs() < tol || kkt < tol) {
            status = SolveStatus::Converged;
            break;
        }
        prev_f = f;

        let qp_sol = if viol <= tol {
            hard_step(&hess, &grad, &g, &jac)
        } else {
            elastic_step(&hess, &grad, &g, &jac)
        };
        if !qp_sol.converged {
            log::debug!("iter {iterations}: quadratic subproblem hit its iteration cap");
        }
        let d = &qp_sol.x[..n];
        lambda = qp_sol.lambda[..m].to_vec();
        mu = mu.max(1.5 * inf_norm(&lambda) + 1e-4);

        if inf_norm(d) <= 1e-12 * (1.0 + inf_norm(&x)) {
            if viol <= tol {
                // stationary for the subproblem at a feasible point
                kkt = kkt_residual(&grad, &jac, &lambda);
                status = if kkt < tol {
                    SolveStatus::Converged
                } else {
                    SolveStatus::MaxIters
                };
                break;
            }
            // infeasible and the step has collapsed: try pure restoration
            if restore(problem, &mut x, tol) {
                hess = identity(n);
                lambda = vec![0.0; m];
                prev_f = f64::INFINITY;
                continue;
            }
            status = infeasible_or_stalled(problem, &x, tol);
            break;
        }

        // ℓ1 merit line search; after the first feasible iterate a step may
        // not reintroduce violation beyond the tolerance
        let l1 = |g: &[f64]| g.iter().map(|&v| v.max(0.0)).sum::<f64>();
        let merit0 = f + mu * l1(&g);
        // the model only sheds the violation the linearized rows actually
        // drop along d; relaxed rows keep theirs, so don't promise it
        let lin_after: f64 = g
            .iter()
            .zip(&jac)
            .map(|(&gi, ji)| (gi + dot(ji, d)).max(0.0))
            .sum();
        let mut deriv = dot(&grad, d) - mu * (l1(&g) - lin_after);
        if deriv >= 0.0 {
            deriv = -dot(d, d);
        }
        let mut alpha = 1.0f64;
        let mut accepted = None;
        for _ in 0..30 {
            // elastic steps may point outside the box; project trial points
            // back so every iterate stays inside it
            let mut xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
            problem.clamp(&mut xt);
            let ft = problem.minimized_value(&xt);
            let gt = problem.residual_values(&xt);
            let violt = gt.iter().fold(0.0f64, |a, &v| a.max(v));
            let merit_ok = ft + mu * l1(&gt) <= merit0 + 0.1 * alpha * deriv;
            let monotone_ok = viol > tol || violt <= tol;
            if merit_ok && monotone_ok {
                accepted = Some(xt);
                break;
            }
            alpha *= 0.5;
        }
        let Some(x_new) = accepted else {
            if viol > tol {
                if restore(problem, &mut x, tol) {
                    hess = identity(n);
                    lambda = vec![0.0; m];
                    prev_f = f64::INFINITY;
                    continue;
                }
                status = infeasible_or_stalled(problem, &x, tol);
                break;
            }
            // feasible with no acceptable step: converged when stationarity
            // holds or the certified progress rate is below the tolerance
            status = if kkt < tol || -deriv < tol {
                SolveStatus::Converged
            } else {
                SolveStatus::MaxIters
            };
            break;
        };

        // damped quasi-Newton update from the Lagrangian gradient change
        let (_, grad_new) = problem.minimized(&x_new);
        let (_, jac_new) = problem.residuals(&x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let lg_new = lagrangian_grad(&grad_new, &jac_new, &lambda);
        let lg_old = lagrangian_grad(&grad, &jac, &lambda);
        let y: Vec<f64> = lg_new.iter().zip(&lg_old).map(|(a, b)| a - b).collect();
        bfgs_update(&mut hess, &s, &y);
        if let Some(last) = trace.last_mut() {
            last.step_norm = inf_norm(&s);
        }
        x = x_new;
    }

    let solution = Solution {
        objective: problem.objective_value(&x),
        max_violation: problem.max_violation(&x),
        x,
        status,
        iterations,
        kkt_residual: kkt,
    };
    (solution, trace)
}

fn infeasible_or_stalled(problem: &OptProblem, x: &[f64], tol: f64) -> SolveStatus {
    if problem.max_violation(x) > tol.max(1e-6) {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIters
    }
}

/// Quadratic step at a feasible iterate: minimize ½dᵀBd + ∇fᵀd subject to
/// the linearized residuals staying nonpositive.
fn hard_step(hess: &[Vec<f64>], grad: &[f64], g: &[f64], jac: &[Vec<f64>]) -> QpSolution {
    // relax by the current residual so that d = 0 is always admissible
    let rhs: Vec<f64> = g.iter().map(|&gi| (-gi).max(0.0)).collect();
    solve_qp(
        &Qp {
            h: hess,
            c: grad,
            rows: jac,
            rhs: &rhs,
        },
        vec![0.0; grad.len()],
    )
}

/// Quadratic step at an infeasible iterate: one shared elastic variable `t`
/// absorbs what the linearization cannot satisfy, at a steep linear price,
/// so the subproblem is always feasible.
fn elastic_step(hess: &[Vec<f64>], grad: &[f64], g: &[f64], jac: &[Vec<f64>]) -> QpSolution {
    let n = grad.len();
    let m = g.len();
    let weight = 1e4 * (1.0 + inf_norm(grad));
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        h[i][..n].copy_from_slice(&hess[i]);
    }
    h[n][n] = 1e-6 * weight;
    let mut c = grad.to_vec();
    c.push(weight);
    let mut rows = Vec::with_capacity(m + 1);
    let mut rhs = Vec::with_capacity(m + 1);
    for (row, &gi) in jac.iter().zip(g) {
        let mut r = row.clone();
        r.push(-1.0);
        rows.push(r);
        rhs.push(-gi);
    }
    let mut t_row = vec![0.0; n + 1];
    t_row[n] = -1.0;
    rows.push(t_row);
    rhs.push(0.0);
    let viol = g.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut x0 = vec![0.0; n + 1];
    x0[n] = viol + 1.0;
    solve_qp(
        &Qp {
            h: &h,
            c: &c,
            rows: &rows,
            rhs: &rhs,
        },
        x0,
    )
}

/// Projected gradient descent on ½·Σ max(0, gᵢ)², clamped to the box; true
/// once the violation is inside the tolerance.
fn restore(problem: &OptProblem, x: &mut Vec<f64>, tol: f64) -> bool {
    for _ in 0..200 {
        let (g, jac) = problem.residuals(x);
        if g.iter().fold(0.0f64, |a, &v| a.max(v)) <= tol {
            return true;
        }
        let value = 0.5 * g.iter().map(|&v| v.max(0.0).powi(2)).sum::<f64>();
        let mut grad = vec![0.0; x.len()];
        for (row, &gi) in jac.iter().zip(&g) {
            if gi > 0.0 {
                for (o, r) in grad.iter_mut().zip(row) {
                    *o += gi * r;
                }
            }
        }
        let mut eta = 1.0f64;
        let mut moved = false;
        for _ in 0..40 {
            let mut xt: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - eta * gi).collect();
            problem.clamp(&mut xt);
            let vt = 0.5
                * problem
                    .residual_values(&xt)
                    .iter()
                    .map(|&v| v.max(0.0).powi(2))
                    .sum::<f64>();
            if vt < value * (1.0 - 1e-12) {
                moved = x.iter().zip(&xt).any(|(a, b)| (a - b).abs() > 1e-15);
                *x = xt;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            return false;
        }
    }
    problem.max_violation(x) <= tol
}

fn kkt_residual(grad: &[f64], jac: &[Vec<f64>], lambda: &[f64]) -> f64 {
    inf_norm(&lagrangian_grad(grad, jac, lambda))
}

fn lagrangian_grad(grad: &[f64], jac: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut out = grad.to_vec();
    for (row, &l) in jac.iter().zip(lambda) {
        if l != 0.0 {
            for (o, r) in out.iter_mut().zip(row) {
                *o += l * r;
            }
        }
    }
    out
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

/// BFGS with Powell damping, so the approximation stays positive definite
/// even when the sampled curvature is negative.
fn bfgs_update(hess: &mut [Vec<f64>], s: &[f64], y: &[f64]) {
    let n = s.len();
    if inf_norm(s) <= 1e-15 {
        return;
    }
    let bs: Vec<f64> = (0..n).map(|i| dot(&hess[i], s)).collect();
    let sbs = dot(s, &bs);
    if sbs <= 1e-16 {
        return;
    }
    let sy = dot(s, y);
    let yhat: Vec<f64> = if sy < 0.2 * sbs {
        let theta = 0.8 * sbs / (sbs - sy);
        y.iter()
            .zip(&bs)
            .map(|(yi, bi)| theta * yi + (1.0 - theta) * bi)
            .collect()
    } else {
        y.to_vec()
    };
    let syh = dot(s, &yhat);
    if syh <= 1e-16 {
        return;
    }
    for i in 0..n {
        for j in 0..n {
            hess[i][j] += yhat[i] * yhat[j] / syh - bs[i] * bs[j] / sbs;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Direction;
    use crate::symbolic::CompiledExpr as E;

    fn bx(e: E) -> Box<E> {
        Box::new(e)
    }

    /// lo − x ≤ 0 and x − hi ≤ 0 rows for one variable.
    fn box_rows(i: usize, lo: f64, hi: f64) -> Vec<E> {
        vec![
            E::Sub(bx(E::Const(lo)), bx(E::Opt(i))),
            E::Sub(bx(E::Opt(i)), bx(E::Const(hi))),
        ]
    }

    #[test]
    fn converges_on_a_curved_constraint() {
        // minimize x + y subject to x² + y² ≤ 1
        let objective = E::Add(bx(E::Opt(0)), bx(E::Opt(1)));
        let x2 = E::Mul(bx(E::Opt(0)), bx(E::Opt(0)));
        let y2 = E::Mul(bx(E::Opt(1)), bx(E::Opt(1)));
        let circle = E::Sub(bx(E::Add(bx(x2), bx(y2))), bx(E::Const(1.0)));
        let problem = OptProblem {
            objective,
            direction: Direction::Minimize,
            constraints: vec![circle],
            bounds: vec![(-2.0, 2.0); 2],
            polys: vec![],
        };
        let (sol, trace) = SqpSolver::solve_traced(&problem, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        let r = -(0.5f64).sqrt();
        assert!((sol.x[0] - r).abs() < 1e-4, "{:?}", sol.x);
        assert!((sol.x[1] - r).abs() < 1e-4, "{:?}", sol.x);
        assert!(sol.max_violation <= 1e-5);
        assert!(sol.kkt_residual < 1e-4, "kkt {}", sol.kkt_residual);

        // the start is feasible, so no iterate may leave the feasible region
        assert!(trace[0].violation <= 1e-5);
        assert!(
            trace.iter().all(|r| r.violation <= 1e-5),
            "feasibility regressed"
        );
    }

    #[test]
    fn solves_a_one_variable_linear_program() {
        // minimize x subject to 0.72·x ≥ 0.6, x in [0.001, 0.999]
        let mut constraints = vec![E::Sub(
            bx(E::Const(0.6)),
            bx(E::Mul(bx(E::Const(0.72)), bx(E::Opt(0)))),
        )];
        constraints.extend(box_rows(0, 0.001, 0.999));
        let problem = OptProblem {
            objective: E::Opt(0),
            direction: Direction::Minimize,
            constraints,
            bounds: vec![(0.001, 0.999)],
            polys: vec![],
        };
        let sol = SqpSolver::solve(&problem, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.x[0] - 0.6 / 0.72).abs() < 1e-5, "{:?}", sol.x);
    }

    fn two_route_query() -> E {
        // q = 0.27·x + 0.72·y − 0.216·x·y, increasing in both on [0.3, 0.8]²
        let t1 = E::Mul(bx(E::Const(0.27)), bx(E::Opt(0)));
        let t2 = E::Mul(bx(E::Const(0.72)), bx(E::Opt(1)));
        let t3 = E::Mul(
            bx(E::Const(0.216)),
            bx(E::Mul(bx(E::Opt(0)), bx(E::Opt(1)))),
        );
        E::Sub(bx(E::Add(bx(t1), bx(t2))), bx(t3))
    }

    #[test]
    fn maximize_mirrors_minimizing_the_negation() {
        let mut constraints = box_rows(0, 0.3, 0.8);
        constraints.extend(box_rows(1, 0.3, 0.8));
        let config = SolverConfig {
            multistart: 3,
            seed: 9,
            ..Default::default()
        };
        let max_problem = OptProblem {
            objective: two_route_query(),
            direction: Direction::Maximize,
            constraints: constraints.clone(),
            bounds: vec![(0.3, 0.8); 2],
            polys: vec![],
        };
        let min_problem = OptProblem {
            objective: E::Neg(bx(two_route_query())),
            direction: Direction::Minimize,
            ..max_problem.clone()
        };
        let a = SqpSolver::solve(&max_problem, &config).unwrap();
        let b = SqpSolver::solve(&min_problem, &config).unwrap();
        assert_eq!(a.x, b.x, "direction flip changed the iterates");
        assert_eq!(a.objective, -b.objective);
        // q is increasing in both variables: the top corner wins
        assert!((a.x[0] - 0.8).abs() < 1e-4, "{:?}", a.x);
        assert!((a.x[1] - 0.8).abs() < 1e-4);
        assert!((a.objective - 0.65376).abs() < 1e-4);
    }

    #[test]
    fn contradictory_constraints_are_reported_infeasible() {
        // x ≤ 0.2 and x ≥ 0.8 cannot both hold
        let mut constraints = vec![
            E::Sub(bx(E::Opt(0)), bx(E::Const(0.2))),
            E::Sub(bx(E::Const(0.8)), bx(E::Opt(0))),
        ];
        constraints.extend(box_rows(0, 0.0, 1.0));
        let problem = OptProblem {
            objective: E::Opt(0),
            direction: Direction::Minimize,
            constraints,
            bounds: vec![(0.0, 1.0)],
            polys: vec![],
        };
        let sol = SqpSolver::solve(&problem, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.max_violation > 0.25, "violation {}", sol.max_violation);
    }

    #[test]
    fn multistart_escapes_a_local_minimum() {
        // f(x) = (x − 0.05)²·((x − 0.6)² + 0.02): global minimum at 0.05,
        // a local one near 0.557 whose basin contains the midpoint start
        let d1 = E::Sub(bx(E::Opt(0)), bx(E::Const(0.05)));
        let d2 = E::Sub(bx(E::Opt(0)), bx(E::Const(0.6)));
        let sq1 = E::Mul(bx(d1.clone()), bx(d1));
        let sq2 = E::Mul(bx(d2.clone()), bx(d2));
        let objective = E::Mul(bx(sq1), bx(E::Add(bx(sq2), bx(E::Const(0.02)))));
        let problem = OptProblem {
            objective,
            direction: Direction::Minimize,
            constraints: box_rows(0, 0.0, 1.0),
            bounds: vec![(0.0, 1.0)],
            polys: vec![],
        };

        let single = SqpSolver::solve(&problem, &SolverConfig::default()).unwrap();
        assert!(
            single.x[0] > 0.4,
            "midpoint start should fall into the local basin"
        );
        assert!(single.objective > 4e-3);

        let config = SolverConfig {
            multistart: 12,
            seed: 7,
            ..Default::default()
        };
        let multi = SqpSolver::solve(&problem, &config).unwrap();
        assert!((multi.x[0] - 0.05).abs() < 1e-3, "{:?}", multi.x);
        assert!(multi.objective < 1e-6);
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let mut constraints = box_rows(0, 0.3, 0.8);
        constraints.extend(box_rows(1, 0.3, 0.8));
        let problem = OptProblem {
            objective: two_route_query(),
            direction: Direction::Maximize,
            constraints,
            bounds: vec![(0.3, 0.8); 2],
            polys: vec![],
        };
        let config = SolverConfig {
            multistart: 4,
            seed: 11,
            ..Default::default()
        };
        let a = SqpSolver::solve(&problem, &config).unwrap();
        let b = SqpSolver::solve(&problem, &config).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn rejects_empty_problems() {
        let problem = OptProblem {
            objective: E::Const(0.0),
            direction: Direction::Minimize,
            constraints: vec![],
            bounds: vec![],
            polys: vec![],
        };
        let err = SqpSolver::solve(&problem, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Solver(_)), "{err}");
    }
}
