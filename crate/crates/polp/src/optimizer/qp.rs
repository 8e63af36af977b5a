//! Primal active-set method for inequality-constrained convex QPs:
//! minimize ½·xᵀHx + cᵀx subject to rows·x ≤ rhs, H positive definite.
//!
//! Starting from a feasible point with an empty working set, each step
//! solves the equality-constrained subproblem on the working set through its
//! KKT system, walks until a constraint blocks, and drops working rows whose
//! multiplier turns negative. Blocking rows are always independent of the
//! working set (a dependent row satisfies `aᵀp = 0` along any working-set
//! step), so with a positive definite H the KKT matrix stays nonsingular.

use super::{dot, inf_norm};

pub(super) struct Qp<'a> {
    pub h: &'a [Vec<f64>],
    pub c: &'a [f64],
    pub rows: &'a [Vec<f64>],
    pub rhs: &'a [f64],
}

pub(super) struct QpSolution {
    pub x: Vec<f64>,
    /// One multiplier per row; zero for inactive rows.
    pub lambda: Vec<f64>,
    pub converged: bool,
}

/// `x0` must satisfy every row. The working set starts empty.
pub(super) fn solve_qp(qp: &Qp, x0: Vec<f64>) -> QpSolution {
    let n = qp.c.len();
    let m = qp.rows.len();
    debug_assert!(
        qp.rows
            .iter()
            .zip(qp.rhs)
            .all(|(a, &b)| dot(a, &x0) <= b + 1e-7),
        "infeasible start point"
    );
    let mut x = x0;
    let mut working: Vec<usize> = Vec::new();
    let mut lambda = vec![0.0; m];

    for _ in 0..50 * (n + m) + 50 {
        // KKT system for the step p and working-set multipliers:
        //   [H  Aᵀ][p]   [-(Hx + c)]
        //   [A  0 ][λ] = [    0    ]
        let g: Vec<f64> = (0..n).map(|i| dot(&qp.h[i], &x) + qp.c[i]).collect();
        let dim = n + working.len();
        let mut k = vec![vec![0.0; dim]; dim];
        let mut b = vec![0.0; dim];
        for i in 0..n {
            k[i][..n].copy_from_slice(&qp.h[i]);
            b[i] = -g[i];
        }
        for (j, &row) in working.iter().enumerate() {
            k[n + j][..n].copy_from_slice(&qp.rows[row]);
            for (i, &coeff) in qp.rows[row].iter().enumerate() {
                k[i][n + j] = coeff;
            }
        }
        let Some(sol) = lu_solve(k, b) else {
            return QpSolution {
                x,
                lambda,
                converged: false,
            };
        };
        let p = &sol[..n];
        let lam = &sol[n..];

        if inf_norm(p) <= 1e-12 * (1.0 + inf_norm(&x)) {
            lambda = vec![0.0; m];
            for (j, &row) in working.iter().enumerate() {
                lambda[row] = lam[j];
            }
            let most_negative = lam
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .filter(|(_, &v)| v < -1e-9);
            match most_negative {
                Some((j, _)) => {
                    working.remove(j);
                }
                None => {
                    return QpSolution {
                        x,
                        lambda,
                        converged: true,
                    }
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocker = None;
        for i in 0..m {
            if working.contains(&i) {
                continue;
            }
            let ap = dot(&qp.rows[i], p);
            if ap > 1e-12 {
                let ratio = ((qp.rhs[i] - dot(&qp.rows[i], &x)) / ap).max(0.0);
                if ratio < alpha {
                    alpha = ratio;
                    blocker = Some(i);
                }
            }
        }
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += alpha * pi;
        }
        if let Some(i) = blocker {
            working.push(i);
        }
    }
    QpSolution {
        x,
        lambda,
        converged: false,
    }
}

/// Dense LU with partial pivoting; `None` on a numerically singular matrix.
fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(1.0f64, |acc, &v| acc.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let (head, tail) = a.split_at_mut(row);
            let pivot_row = &head[col];
            let target = &mut tail[0];
            let factor = target[col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (t, &p) in target[col..].iter_mut().zip(&pivot_row[col..]) {
                *t -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col][k] * b[k];
        }
        b[col] = v / a[col][col];
    }
    Some(b)
}
