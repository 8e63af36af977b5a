//! Path extraction: rewrite a query function as a weighted sum of products
//! over the optimizable variables.
//!
//! With every optimizable variable ordered above every fixed one, each path
//! from the root through the optimizable prefix ends at a "frontier"
//! reference — a fixed-variable node or a terminal — whose probability is an
//! ordinary constant. The query probability is then
//! `Σ coefficient · Π literal` with one term per frontier path, a multilinear
//! expression in the optimizable probabilities.
//!
//! Complement marks carry through the recursion as a parity bit, so a shared
//! node reached under both parities contributes two memo entries at most;
//! the number of expansions is bounded by twice the reachable node count.

use std::collections::HashMap;

use super::{BddManager, NodeRef, VarId, VarKind};
use crate::error::Result;

/// One product term: `coefficient · Π literal`, with `(v, true)` standing for
/// the probability of `v` and `(v, false)` for one minus it. Literals appear
/// innermost-first: the root variable of the diagram comes last.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTerm {
    pub coefficient: f64,
    pub literals: Vec<(VarId, bool)>,
}

impl PathTerm {
    /// Value of the term under an assignment indexed by variable id.
    pub fn evaluate(&self, assignment: &[f64]) -> f64 {
        let product: f64 = self
            .literals
            .iter()
            .map(|&(v, sign)| {
                if sign {
                    assignment[v.index()]
                } else {
                    1.0 - assignment[v.index()]
                }
            })
            .product();
        self.coefficient * product
    }
}

/// Counters from one extraction run.
#[derive(Clone, Copy, Debug, Default)]
pub struct PathsStats {
    /// Adjacent-level swaps spent restoring the optimizable-first order.
    pub swaps: usize,
    /// Distinct `(node, parity)` expansions; at most twice the node count.
    pub visits: usize,
    /// Terms returned after pruning zero coefficients.
    pub terms: usize,
}

impl BddManager {
    /// Extract the weighted path terms of `f` over the optimizable variables,
    /// reordering the manager optimizable-first if needed.
    pub fn paths_prob(&mut self, f: NodeRef) -> Result<Vec<PathTerm>> {
        Ok(self.paths_prob_traced(f)?.0)
    }

    /// Like [`paths_prob`](Self::paths_prob), also reporting counters.
    pub fn paths_prob_traced(&mut self, f: NodeRef) -> Result<(Vec<PathTerm>, PathsStats)> {
        let mut stats = PathsStats {
            swaps: self.reorder_optimizable_first(),
            ..Default::default()
        };
        let mut memo = HashMap::new();
        let mut probs = HashMap::new();
        let terms = self.paths_rec(
            f.index(),
            f.is_complement(),
            &mut memo,
            &mut probs,
            &mut stats,
        )?;
        stats.terms = terms.len();
        Ok((terms, stats))
    }

    fn paths_rec(
        &self,
        idx: usize,
        comp: bool,
        memo: &mut HashMap<(usize, bool), Vec<PathTerm>>,
        probs: &mut HashMap<usize, f64>,
        stats: &mut PathsStats,
    ) -> Result<Vec<PathTerm>> {
        if let Some(hit) = memo.get(&(idx, comp)) {
            return Ok(hit.clone());
        }
        stats.visits += 1;
        let frontier = idx == 0
            || matches!(
                self.vars[self.nodes[idx].var as usize].kind,
                VarKind::Fixed(_)
            );
        let result = if frontier {
            let p = self.prob_rec(idx, probs)?;
            let p = if comp { 1.0 - p } else { p };
            if p > 0.0 {
                vec![PathTerm {
                    coefficient: p,
                    literals: Vec::new(),
                }]
            } else {
                Vec::new()
            }
        } else {
            let n = self.nodes[idx];
            let var = VarId(n.var);
            let mut out = Vec::new();
            // 1-edges are never complemented, so the parity passes through
            for mut term in self.paths_rec(n.hi.index(), comp, memo, probs, stats)? {
                term.literals.push((var, true));
                out.push(term);
            }
            let lo_comp = comp ^ n.lo.is_complement();
            for mut term in self.paths_rec(n.lo.index(), lo_comp, memo, probs, stats)? {
                term.literals.push((var, false));
                out.push(term);
            }
            out
        };
        memo.insert((idx, comp), result.clone());
        Ok(result)
    }
}
