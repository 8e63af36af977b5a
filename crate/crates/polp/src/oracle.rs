//! Brute-force reference implementations used to validate the fast paths:
//! world enumeration instead of decision diagrams, grid search instead of
//! the solver, finite differences instead of analytic gradients.
//!
//! Everything here trades speed for being obviously correct, and none of it
//! touches the diagram machinery it is checking.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grounder::GroundProgram;
use crate::parser::Atom;

/// Enumeration walks all `2^n` worlds; refuse beyond this many facts.
pub const MAX_ENUM_VARS: usize = 20;

/// Query probability by summing the weight of every world where the query
/// holds; the fixpoint per world is a plain set-based derivation.
pub fn enumerate_query_prob(g: &GroundProgram, x: &[f64], query: &Atom) -> Result<f64> {
    let n = g.facts.len();
    if n > MAX_ENUM_VARS {
        return Err(Error::Oracle(format!(
            "{n} facts would mean {} worlds; enumeration stops at {MAX_ENUM_VARS} facts",
            (n as f64).exp2()
        )));
    }
    let probs = g.world_probs(x);
    let mut total = 0.0;
    for mask in 0..1u64 << n {
        let mut weight = 1.0;
        for (i, p) in probs.iter().enumerate() {
            weight *= if mask >> i & 1 == 1 { *p } else { 1.0 - *p };
        }
        if weight > 0.0 && world_satisfies(g, mask, query) {
            total += weight;
        }
    }
    Ok(total)
}

fn world_satisfies(g: &GroundProgram, mask: u64, query: &Atom) -> bool {
    let mut truths: HashSet<&Atom> = g
        .facts
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, f)| &f.atom)
        .collect();
    loop {
        let mut changed = false;
        for rule in &g.rules {
            if !truths.contains(&rule.head) && rule.body.iter().all(|b| truths.contains(b)) {
                truths.insert(&rule.head);
                changed = true;
            }
        }
        if !changed {
            return truths.contains(query);
        }
    }
}

/// Best grid point of an objective under a feasibility predicate, ties
/// broken toward the lexicographically smallest point. `steps` subdivisions
/// per axis, endpoints included. `None` when no grid point is feasible.
#[derive(Clone, Debug, PartialEq)]
pub struct GridBest {
    pub x: Vec<f64>,
    pub objective: f64,
}

pub fn grid_search(
    bounds: &[(f64, f64)],
    steps: usize,
    feasible: impl Fn(&[f64]) -> bool,
    objective: impl Fn(&[f64]) -> f64,
    maximize: bool,
) -> Option<GridBest> {
    let n = bounds.len();
    assert!(n <= 3, "grid search is meant for at most 3 variables");
    assert!(steps >= 1);
    let mut counters = vec![0usize; n];
    let mut best: Option<GridBest> = None;
    loop {
        let x: Vec<f64> = counters
            .iter()
            .zip(bounds)
            .map(|(&k, &(lo, hi))| lo + (hi - lo) * k as f64 / steps as f64)
            .collect();
        if feasible(&x) {
            let value = objective(&x);
            let replace = match &best {
                None => true,
                Some(b) => {
                    let better = if maximize {
                        value > b.objective
                    } else {
                        value < b.objective
                    };
                    better || (value == b.objective && x < b.x)
                }
            };
            if replace {
                best = Some(GridBest {
                    x,
                    objective: value,
                });
            }
        }

        let mut pos = n;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] <= steps {
                break;
            }
            counters[pos] = 0;
        }
    }
}

/// Central finite-difference gradient with step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[i] += h;
            lo[i] -= h;
            (f(&hi) - f(&lo)) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ON_TIME_PROGRAM, ROUTE_PROGRAM};
    use crate::parser::Program;

    fn route() -> GroundProgram {
        let program = Program::parse(ROUTE_PROGRAM).unwrap();
        GroundProgram::ground(&program, &[]).unwrap()
    }

    #[test]
    fn enumeration_matches_the_closed_form() {
        // two independent routes a-b-c-e and a-b-d-e share edge(a,b):
        // q = 0.9·(0.3·bc + 0.8·bd − 0.24·bc·bd)
        let g = route();
        let query: Atom = "path(a,e)".parse().unwrap();
        for &(bc, bd) in &[(0.3, 0.8), (0.8, 0.3), (0.5, 0.5), (0.0, 1.0), (1.0, 1.0)] {
            let expect = 0.9 * (0.3 * bc + 0.8 * bd - 0.24 * bc * bd);
            let got = enumerate_query_prob(&g, &[bc, bd], &query).unwrap();
            assert!(
                (got - expect).abs() < 1e-12,
                "({bc},{bd}): {got} vs {expect}"
            );
        }
    }

    #[test]
    fn enumeration_is_exact_on_a_conjunction() {
        let program = Program::parse(ON_TIME_PROGRAM).unwrap();
        let g = GroundProgram::ground(&program, &[]).unwrap();
        let query: Atom = "on_time".parse().unwrap();
        assert_eq!(enumerate_query_prob(&g, &[], &query).unwrap(), 0.45);
    }

    #[test]
    fn enumeration_refuses_large_programs() {
        let mut text = String::new();
        for i in 0..21 {
            text.push_str(&format!("0.5::f(c{i}).\n"));
        }
        text.push_str("any :- f(c0).\n");
        let program = Program::parse(&text).unwrap();
        let g = GroundProgram::ground(&program, &[]).unwrap();
        let err = enumerate_query_prob(&g, &[], &"any".parse().unwrap()).unwrap_err();
        assert!(matches!(err, Error::Oracle(_)), "{err}");
    }

    #[test]
    fn grid_search_finds_constrained_optima() {
        let best = grid_search(
            &[(0.0, 1.0)],
            10,
            |x| x[0] >= 0.55,
            |x| (x[0] - 0.3) * (x[0] - 0.3),
            false,
        )
        .unwrap();
        assert_eq!(best.x, vec![0.6]);

        let best = grid_search(
            &[(0.0, 1.0), (0.0, 1.0)],
            4,
            |x| x[0] + x[1] <= 1.0,
            |x| x[0] * x[1],
            true,
        )
        .unwrap();
        assert_eq!(best.x, vec![0.5, 0.5]);
        assert_eq!(best.objective, 0.25);

        assert_eq!(
            grid_search(&[(0.0, 1.0)], 4, |_| false, |x| x[0], false),
            None
        );
    }

    #[test]
    fn grid_search_breaks_ties_lexicographically() {
        let best = grid_search(&[(0.0, 1.0), (0.0, 1.0)], 2, |_| true, |_| 7.0, false).unwrap();
        assert_eq!(best.x, vec![0.0, 0.0]);
    }

    #[test]
    fn central_differences_approximate_gradients() {
        let f = |x: &[f64]| 3.0 * x[0] + 2.0 * x[0] * x[1];
        let grad = central_diff(f, &[0.4, 0.7], 1e-6);
        assert!((grad[0] - 4.4).abs() < 1e-6);
        assert!((grad[1] - 0.8).abs() < 1e-6);
    }
}
