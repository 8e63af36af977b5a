//! Dynamic variable reordering by in-place adjacent-level swaps.
//!
//! A swap rewrites every node at the upper level whose function depends on
//! the lower variable, mutating the node in place so that every outstanding
//! [`NodeRef`](super::NodeRef) keeps denoting the same boolean function. The
//! rebuilt 1-edges come out regular automatically because cofactors of a
//! regular edge are regular, so the complement convention survives without a
//! normalization pass.

use super::{BddManager, VarKind};

impl BddManager {
    /// Swap the variables at `level` and `level + 1` without invalidating any
    /// external reference.
    pub fn swap_adjacent(&mut self, level: usize) {
        assert!(
            level + 1 < self.order.len(),
            "swap level {level} out of range"
        );
        let x = self.order[level];
        let y = self.order[level + 1];

        // Nodes testing x that skip y are untouched by the swap; only those
        // with a y-topped child change shape.
        let affected: Vec<u32> = (1..self.nodes.len() as u32)
            .filter(|&i| {
                let n = self.nodes[i as usize];
                n.var == x && (self.top_var(n.hi) == Some(y) || self.top_var(n.lo) == Some(y))
            })
            .collect();

        // Swap the bookkeeping first so nodes rebuilt below sit at x's new
        // level.
        self.order.swap(level, level + 1);
        self.level[x as usize] = level as u32 + 1;
        self.level[y as usize] = level as u32;

        for idx in affected {
            let n = self.nodes[idx as usize];
            self.unique.remove(&(n.var, n.hi, n.lo));
            // Grandchildren by (x, y) assignment: t* under x=1, e* under x=0.
            let (t1, t0) = self.cofactors_for(n.hi, y);
            let (e1, e0) = self.cofactors_for(n.lo, y);
            let hi_new = self.mk(x, t1, e1);
            let lo_new = self.mk(x, t0, e0);
            debug_assert!(!hi_new.is_complement());
            debug_assert_ne!(
                hi_new, lo_new,
                "affected node did not depend on both variables"
            );
            let node = &mut self.nodes[idx as usize];
            node.var = y;
            node.hi = hi_new;
            node.lo = lo_new;
            self.unique.insert((y, hi_new, lo_new), idx);
        }
        self.and_cache.clear();
    }

    /// Bubble every optimizable variable above every fixed one, keeping the
    /// relative order inside each class. Returns the number of adjacent swaps
    /// performed; zero means the order was already partitioned.
    pub fn reorder_optimizable_first(&mut self) -> usize {
        let mut swaps = 0;
        loop {
            let mut moved = false;
            for level in 0..self.order.len().saturating_sub(1) {
                let upper = self.vars[self.order[level] as usize].kind;
                let lower = self.vars[self.order[level + 1] as usize].kind;
                if matches!(upper, VarKind::Fixed(_)) && lower == VarKind::Optimizable {
                    self.swap_adjacent(level);
                    swaps += 1;
                    moved = true;
                }
            }
            if !moved {
                return swaps;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{random_function, truth_table};
    use super::super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn swaps_preserve_functions_and_invariants() {
        let mut rng = StdRng::seed_from_u64(42);
        for round in 0..25 {
            let mut m = BddManager::new();
            let nvars = rng.random_range(3..=7);
            for i in 0..nvars {
                m.add_var(format!("v{i}"), VarKind::Fixed(rng.random_range(0.1..0.9)));
            }
            let f = random_function(&mut m, &mut rng, 14);
            let g = random_function(&mut m, &mut rng, 14);
            let tf = truth_table(&m, f);
            let tg = truth_table(&m, g);
            let pf = m.prob(f).unwrap();
            for _ in 0..12 {
                m.swap_adjacent(rng.random_range(0..nvars - 1));
                m.assert_valid();
            }
            assert_eq!(truth_table(&m, f), tf, "f changed in round {round}");
            assert_eq!(truth_table(&m, g), tg, "g changed in round {round}");
            assert!((m.prob(f).unwrap() - pf).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_handles_shared_subgraphs() {
        let mut m = BddManager::new();
        let a = m.add_var("a", VarKind::Fixed(0.5));
        let b = m.add_var("b", VarKind::Fixed(0.5));
        let c = m.add_var("c", VarKind::Fixed(0.5));
        let (va, vb, vc) = (m.var(a), m.var(b), m.var(c));
        // both branches of the root share the c-node
        let ac = m.and(va, vc);
        let bc = m.and(vb, vc);
        let f = m.or(ac, bc);
        let before = truth_table(&m, f);
        m.swap_adjacent(0);
        m.assert_valid();
        m.swap_adjacent(1);
        m.assert_valid();
        assert_eq!(truth_table(&m, f), before);
    }

    #[test]
    fn reorder_partitions_stably() {
        let mut m = BddManager::new();
        let kinds = [
            VarKind::Fixed(0.2),
            VarKind::Optimizable,
            VarKind::Fixed(0.7),
            VarKind::Optimizable,
            VarKind::Fixed(0.4),
            VarKind::Optimizable,
        ];
        for (i, k) in kinds.iter().enumerate() {
            m.add_var(format!("v{i}"), *k);
        }
        let mut rng = StdRng::seed_from_u64(3);
        let f = random_function(&mut m, &mut rng, 20);
        let before = truth_table(&m, f);

        let swaps = m.reorder_optimizable_first();
        assert!(swaps > 0);
        m.assert_valid();
        assert_eq!(truth_table(&m, f), before);

        // optimizable variables first, original relative order kept in both
        // classes
        let order: Vec<usize> = m.var_order().iter().map(|v| v.index()).collect();
        assert_eq!(order, vec![1, 3, 5, 0, 2, 4]);

        // already partitioned: a second pass is a no-op
        assert_eq!(m.reorder_optimizable_first(), 0);
    }

    #[test]
    fn reorder_mixed_random_functions() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..20 {
            let mut m = BddManager::new();
            let nvars = rng.random_range(2..=8);
            for i in 0..nvars {
                let kind = if rng.random_bool(0.5) {
                    VarKind::Optimizable
                } else {
                    VarKind::Fixed(rng.random_range(0.1..0.9))
                };
                m.add_var(format!("v{i}"), kind);
            }
            let f = random_function(&mut m, &mut rng, 16);
            let before = truth_table(&m, f);
            m.reorder_optimizable_first();
            m.assert_valid();
            assert_eq!(truth_table(&m, f), before);
            let order = m.var_order();
            let first_fixed = order
                .iter()
                .position(|&v| matches!(m.var_kind(v), VarKind::Fixed(_)))
                .unwrap_or(order.len());
            assert!(order[first_fixed..]
                .iter()
                .all(|&v| matches!(m.var_kind(v), VarKind::Fixed(_))));
        }
    }
}
