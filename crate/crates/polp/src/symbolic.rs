//! The query equation: a canonical multilinear polynomial in the optimizable
//! probabilities, expanded from the weighted path terms of a query diagram.
//!
//! Each path term `c · Π x_i · Π (1−x_j)` is multiplied out into monomials
//! over sorted variable sets, and like monomials are merged, so algebraically
//! equal queries expand to the identical polynomial no matter how the diagram
//! was built. Evaluation and exact partial derivatives then cost one pass
//! over the monomials, which is what makes the optimization loop cheap: the
//! diagram is walked once per query, not once per solver iteration.

use std::collections::{BTreeMap, HashMap};

use crate::bdd::{PathTerm, VarId};
use crate::error::{Error, Result};
use crate::parser::{Atom, Expr};

/// Monomials with a smaller magnitude are dropped after merging: they are
/// expansion round-off, not signal.
pub const COEFF_EPSILON: f64 = 1e-15;

/// Default ceiling on distinct monomials before expansion gives up.
pub const DEFAULT_MONOMIAL_CAP: usize = 1_000_000;

/// Multilinear polynomial over optimizable variables, keyed by sorted sets
/// of variable indices; the empty set is the constant term.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryPolynomial {
    terms: BTreeMap<Vec<usize>, f64>,
}

impl QueryPolynomial {
    /// Expand path terms into canonical form. `opt_index` maps a diagram
    /// variable to its dense optimizable index.
    pub fn from_paths(paths: &[PathTerm], opt_index: &HashMap<VarId, usize>) -> Result<Self> {
        Self::from_paths_capped(paths, opt_index, DEFAULT_MONOMIAL_CAP)
    }

    pub fn from_paths_capped(
        paths: &[PathTerm],
        opt_index: &HashMap<VarId, usize>,
        cap: usize,
    ) -> Result<Self> {
        let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for path in paths {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for &(v, sign) in &path.literals {
                let i = *opt_index.get(&v).ok_or_else(|| {
                    Error::Symbolic(format!(
                        "path literal over variable {} which is not optimizable",
                        v.index()
                    ))
                })?;
                if sign {
                    pos.push(i);
                } else {
                    neg.push(i);
                }
            }
            pos.sort_unstable();
            // multiply the (1 - x) factors out one at a time
            let mut local = vec![(pos, path.coefficient)];
            for &n in &neg {
                let mut next = Vec::with_capacity(local.len() * 2);
                for (key, c) in local {
                    let mut with = key.clone();
                    let slot = with.binary_search(&n).unwrap_err();
                    with.insert(slot, n);
                    next.push((key, c));
                    next.push((with, -c));
                }
                local = next;
                if local.len() > cap {
                    return Err(monomial_overflow(cap));
                }
            }
            for (key, c) in local {
                *acc.entry(key).or_insert(0.0) += c;
            }
            if acc.len() > cap {
                return Err(monomial_overflow(cap));
            }
        }
        acc.retain(|_, c| c.abs() >= COEFF_EPSILON);
        Ok(QueryPolynomial { terms: acc })
    }

    /// Coefficient of the monomial over exactly `vars` (sorted), 0 if absent.
    pub fn coefficient(&self, vars: &[usize]) -> f64 {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        self.terms.get(vars).copied().unwrap_or(0.0)
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no monomial mentions a variable.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|k| k.is_empty())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        sum(self
            .terms
            .iter()
            .map(|(key, c)| c * key.iter().map(|&i| x[i]).product::<f64>()))
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize, x: &[f64]) -> f64 {
        sum(self
            .terms
            .iter()
            .filter(|(key, _)| key.contains(&var))
            .map(|(key, c)| {
                c * key
                    .iter()
                    .filter(|&&i| i != var)
                    .map(|&i| x[i])
                    .product::<f64>()
            }))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.partial(i, x)).collect()
    }

    /// Multiplications and additions needed to evaluate the canonical form.
    pub fn operation_count(&self) -> usize {
        let mults: usize = self.terms.keys().map(Vec::len).sum();
        mults + self.terms.len().saturating_sub(1)
    }

    /// Render with `names` indexed by optimizable variable.
    pub fn pretty(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (key, c)) in self.terms.iter().enumerate() {
            if i == 0 {
                if *c < 0.0 {
                    s.push('-');
                }
            } else {
                s.push_str(if *c < 0.0 { " - " } else { " + " });
            }
            s.push_str(&format_float(c.abs()));
            for &v in key {
                s.push('*');
                s.push_str(&names[v]);
            }
        }
        s
    }
}

fn monomial_overflow(cap: usize) -> Error {
    Error::Resource(format!("query equation exceeded {cap} monomials"))
}

/// Evaluate raw path terms at probabilities indexed by diagram variable.
pub fn path_sum(paths: &[PathTerm], probs_by_var: &[f64]) -> f64 {
    sum(paths.iter().map(|t| t.evaluate(probs_by_var)))
}

/// Arithmetic cost of evaluating the raw path form: one multiplication per
/// literal, one subtraction per negated literal, and the final additions.
pub fn path_operation_count(paths: &[PathTerm]) -> usize {
    let per_term: usize = paths
        .iter()
        .map(|t| t.literals.len() + t.literals.iter().filter(|&&(_, sign)| !sign).count())
        .sum();
    per_term + paths.len().saturating_sub(1)
}

#[cfg(not(feature = "kahan"))]
fn sum(values: impl Iterator<Item = f64>) -> f64 {
    values.sum()
}

/// Kahan–Babuška compensated summation; the branch keeps the compensation
/// valid even when an addend dominates the running sum.
#[cfg(feature = "kahan")]
fn sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() {
            (s - t) + v
        } else {
            (v - t) + s
        };
        s = t;
    }
    s + c
}

fn format_float(v: f64) -> String {
    let mut s = format!("{v:.10}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

/// An objective or constraint side with query atoms resolved to polynomials,
/// ready for repeated evaluation inside the solver.
#[derive(Clone, Debug)]
pub enum CompiledExpr {
    Const(f64),
    /// Optimizable variable by dense index.
    Opt(usize),
    /// Query polynomial by index into the compiled table.
    Poly(usize),
    Add(Box<CompiledExpr>, Box<CompiledExpr>),
    Sub(Box<CompiledExpr>, Box<CompiledExpr>),
    Mul(Box<CompiledExpr>, Box<CompiledExpr>),
    Neg(Box<CompiledExpr>),
}

impl CompiledExpr {
    /// Rewrite a parsed expression, mapping each query atom through
    /// `poly_index` into the polynomial table.
    pub fn compile(expr: &Expr, poly_index: &HashMap<Atom, usize>) -> Result<Self> {
        Ok(match expr {
            Expr::Const(c) => CompiledExpr::Const(*c),
            Expr::Opt(i) => CompiledExpr::Opt(*i),
            Expr::Query(atom) => {
                let i = *poly_index.get(atom).ok_or_else(|| {
                    Error::Symbolic(format!("no compiled polynomial for query `{atom}`"))
                })?;
                CompiledExpr::Poly(i)
            }
            Expr::Add(a, b) => CompiledExpr::Add(
                Box::new(Self::compile(a, poly_index)?),
                Box::new(Self::compile(b, poly_index)?),
            ),
            Expr::Sub(a, b) => CompiledExpr::Sub(
                Box::new(Self::compile(a, poly_index)?),
                Box::new(Self::compile(b, poly_index)?),
            ),
            Expr::Mul(a, b) => CompiledExpr::Mul(
                Box::new(Self::compile(a, poly_index)?),
                Box::new(Self::compile(b, poly_index)?),
            ),
            Expr::Neg(a) => CompiledExpr::Neg(Box::new(Self::compile(a, poly_index)?)),
        })
    }

    pub fn value(&self, x: &[f64], polys: &[QueryPolynomial]) -> f64 {
        match self {
            CompiledExpr::Const(c) => *c,
            CompiledExpr::Opt(i) => x[*i],
            CompiledExpr::Poly(p) => polys[*p].evaluate(x),
            CompiledExpr::Add(a, b) => a.value(x, polys) + b.value(x, polys),
            CompiledExpr::Sub(a, b) => a.value(x, polys) - b.value(x, polys),
            CompiledExpr::Mul(a, b) => a.value(x, polys) * b.value(x, polys),
            CompiledExpr::Neg(a) => -a.value(x, polys),
        }
    }

    /// Value and exact gradient in one recursion.
    pub fn value_grad(&self, x: &[f64], polys: &[QueryPolynomial]) -> (f64, Vec<f64>) {
        match self {
            CompiledExpr::Const(c) => (*c, vec![0.0; x.len()]),
            CompiledExpr::Opt(i) => {
                let mut g = vec![0.0; x.len()];
                g[*i] = 1.0;
                (x[*i], g)
            }
            CompiledExpr::Poly(p) => (polys[*p].evaluate(x), polys[*p].gradient(x)),
            CompiledExpr::Add(a, b) => {
                let (va, mut ga) = a.value_grad(x, polys);
                let (vb, gb) = b.value_grad(x, polys);
                for (gi, bi) in ga.iter_mut().zip(&gb) {
                    *gi += bi;
                }
                (va + vb, ga)
            }
            CompiledExpr::Sub(a, b) => {
                let (va, mut ga) = a.value_grad(x, polys);
                let (vb, gb) = b.value_grad(x, polys);
                for (gi, bi) in ga.iter_mut().zip(&gb) {
                    *gi -= bi;
                }
                (va - vb, ga)
            }
            CompiledExpr::Mul(a, b) => {
                let (va, mut ga) = a.value_grad(x, polys);
                let (vb, gb) = b.value_grad(x, polys);
                for (gi, bi) in ga.iter_mut().zip(&gb) {
                    *gi = *gi * vb + va * bi;
                }
                (va * vb, ga)
            }
            CompiledExpr::Neg(a) => {
                let (va, mut ga) = a.value_grad(x, polys);
                for gi in ga.iter_mut() {
                    *gi = -*gi;
                }
                (-va, ga)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vid(i: u32) -> VarId {
        VarId(i)
    }

    /// Path terms of the two-route query, literals innermost-first, with
    /// diagram variables 1 and 2 mapping to optimizable indices 0 and 1.
    fn fig_paths() -> (Vec<PathTerm>, HashMap<VarId, usize>) {
        let terms = vec![
            PathTerm {
                coefficient: 0.774,
                literals: vec![(vid(2), true), (vid(1), true)],
            },
            PathTerm {
                coefficient: 0.27,
                literals: vec![(vid(2), false), (vid(1), true)],
            },
            PathTerm {
                coefficient: 0.72,
                literals: vec![(vid(2), true), (vid(1), false)],
            },
        ];
        let map = HashMap::from([(vid(1), 0), (vid(2), 1)]);
        (terms, map)
    }

    #[test]
    fn expands_route_paths_to_canonical_form() {
        let (paths, map) = fig_paths();
        let q = QueryPolynomial::from_paths(&paths, &map).unwrap();
        assert_eq!(q.len(), 3);
        assert!((q.coefficient(&[0]) - 0.27).abs() < 1e-12);
        assert!((q.coefficient(&[1]) - 0.72).abs() < 1e-12);
        assert!((q.coefficient(&[0, 1]) + 0.216).abs() < 1e-12);
        assert_eq!(q.coefficient(&[]), 0.0);

        assert_eq!(q.operation_count(), 6);
        assert_eq!(path_operation_count(&paths), 10);
    }

    #[test]
    fn canonical_and_raw_forms_agree() {
        let (paths, map) = fig_paths();
        let q = QueryPolynomial::from_paths(&paths, &map).unwrap();
        for &(x, y) in &[
            (0.3, 0.3),
            (0.3, 0.8),
            (0.6352, 0.7352),
            (0.5, 0.5),
            (0.8, 0.8),
        ] {
            let canonical = q.evaluate(&[x, y]);
            // raw path form indexes by diagram variable
            let raw = path_sum(&paths, &[0.0, x, y]);
            assert!(
                (canonical - raw).abs() < 1e-12,
                "({x},{y}): {canonical} vs {raw}"
            );
        }
        assert!((q.evaluate(&[0.6352, 0.7352]) - 0.6).abs() < 1e-3);
    }

    #[test]
    fn partials_are_exact() {
        let (paths, map) = fig_paths();
        let q = QueryPolynomial::from_paths(&paths, &map).unwrap();
        let x = [0.6352, 0.7352];
        let dx = q.coefficient(&[0]) + q.coefficient(&[0, 1]) * x[1];
        let dy = q.coefficient(&[1]) + q.coefficient(&[0, 1]) * x[0];
        assert!((q.partial(0, &x) - dx).abs() < 1e-15);
        assert!((q.partial(1, &x) - dy).abs() < 1e-15);
        assert_eq!(q.gradient(&x), vec![q.partial(0, &x), q.partial(1, &x)]);
    }

    #[test]
    fn cancellation_collapses_to_a_constant() {
        // x + (1 - x) = 1
        let paths = vec![
            PathTerm {
                coefficient: 1.0,
                literals: vec![(vid(0), true)],
            },
            PathTerm {
                coefficient: 1.0,
                literals: vec![(vid(0), false)],
            },
        ];
        let map = HashMap::from([(vid(0), 0)]);
        let q = QueryPolynomial::from_paths(&paths, &map).unwrap();
        assert!(q.is_constant());
        assert_eq!(q.len(), 1);
        assert_eq!(q.coefficient(&[]), 1.0);
        assert_eq!(q.evaluate(&[0.37]), 1.0);
    }

    #[test]
    fn monomial_cap_stops_the_expansion() {
        let literals: Vec<(VarId, bool)> = (0..6).map(|i| (vid(i), false)).collect();
        let paths = vec![PathTerm {
            coefficient: 1.0,
            literals,
        }];
        let map: HashMap<VarId, usize> = (0..6).map(|i| (vid(i), i as usize)).collect();
        let err = QueryPolynomial::from_paths_capped(&paths, &map, 8).unwrap_err();
        assert!(matches!(err, Error::Resource(_)), "{err}");
        assert!(QueryPolynomial::from_paths_capped(&paths, &map, 64).is_ok());
    }

    #[test]
    fn unmapped_literals_are_rejected() {
        let paths = vec![PathTerm {
            coefficient: 0.5,
            literals: vec![(vid(7), true)],
        }];
        let err = QueryPolynomial::from_paths(&paths, &HashMap::new()).unwrap_err();
        assert!(matches!(err, Error::Symbolic(_)), "{err}");
    }

    #[test]
    fn pretty_prints_sorted_monomials() {
        let (paths, map) = fig_paths();
        let q = QueryPolynomial::from_paths(&paths, &map).unwrap();
        let names = vec!["bc".to_string(), "bd".to_string()];
        assert_eq!(q.pretty(&names), "0.27*bc - 0.216*bc*bd + 0.72*bd");
        assert_eq!(QueryPolynomial::default().pretty(&names), "0");
    }

    #[test]
    fn compiled_expressions_take_gradients_through_products() {
        let (paths, map) = fig_paths();
        let polys = vec![QueryPolynomial::from_paths(&paths, &map).unwrap()];
        let q_atom: Atom = "q".parse().unwrap();
        let poly_index = HashMap::from([(q_atom.clone(), 0usize)]);

        let expr = Expr::Sub(
            Box::new(Expr::Query(q_atom.clone())),
            Box::new(Expr::Const(0.8)),
        );
        let compiled = CompiledExpr::compile(&expr, &poly_index).unwrap();
        let x = [0.5, 0.5];
        let (v, g) = compiled.value_grad(&x, &polys);
        assert!((v - (0.441 - 0.8)).abs() < 1e-12);
        assert!((g[0] - 0.162).abs() < 1e-12);
        assert!((g[1] - 0.612).abs() < 1e-12);
        assert_eq!(compiled.value(&x, &polys), v);

        // product rule: d/dx0 (x0 * q) = q + x0 * dq/dx0
        let product = Expr::Mul(
            Box::new(Expr::Opt(0)),
            Box::new(Expr::Query(q_atom.clone())),
        );
        let compiled = CompiledExpr::compile(&product, &poly_index).unwrap();
        let (v, g) = compiled.value_grad(&x, &polys);
        assert!((v - 0.2205).abs() < 1e-12);
        assert!((g[0] - (0.441 + 0.5 * 0.162)).abs() < 1e-12);
        assert!((g[1] - 0.5 * 0.612).abs() < 1e-12);

        let neg = Expr::Neg(Box::new(Expr::Query(q_atom)));
        let compiled = CompiledExpr::compile(&neg, &poly_index).unwrap();
        let (v, g) = compiled.value_grad(&x, &polys);
        assert!((v + 0.441).abs() < 1e-12);
        assert!((g[0] + 0.162).abs() < 1e-12);
    }

    #[test]
    fn unknown_query_atoms_fail_compilation() {
        let expr = Expr::Query("mystery(a)".parse().unwrap());
        let err = CompiledExpr::compile(&expr, &HashMap::new()).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }
}
