//! Reduced ordered binary decision diagrams with complemented 0-edges.
//!
//! Only the TRUE terminal is stored; FALSE is its complemented reference, so
//! negation is a bit flip. Complement marks are allowed on 0-edges and on
//! external references but never on 1-edges, which makes every boolean
//! function canonical: two references are equal iff their functions are.
//!
//! Variables carry either a fixed probability or an "optimizable" mark.
//! [`BddManager::prob`] folds fixed probabilities bottom-up;
//! [`BddManager::paths_prob`] (see [`paths`]) first moves optimizable
//! variables to the top of the order and then reads one weighted product
//! term per path through the optimizable prefix.

mod paths;
mod reorder;

pub use paths::{PathTerm, PathsStats};

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Reference to a node, with the complement mark in the low bit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(u32);

impl NodeRef {
    pub const TRUE: NodeRef = NodeRef(0);
    pub const FALSE: NodeRef = NodeRef(1);

    fn new(index: u32, complement: bool) -> Self {
        NodeRef(index << 1 | complement as u32)
    }

    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_complement(self) -> bool {
        self.0 & 1 == 1
    }

    /// Negation; free thanks to complement edges.
    pub fn complement(self) -> NodeRef {
        NodeRef(self.0 ^ 1)
    }

    pub fn is_terminal(self) -> bool {
        self.index() == 0
    }
}

impl fmt::Debug for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (*self, self.is_complement()) {
            (NodeRef::TRUE, _) => write!(f, "T"),
            (NodeRef::FALSE, _) => write!(f, "F"),
            (_, false) => write!(f, "@{}", self.index()),
            (_, true) => write!(f, "~@{}", self.index()),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VarKind {
    Fixed(f64),
    Optimizable,
}

#[derive(Clone, Debug)]
struct VarInfo {
    name: String,
    kind: VarKind,
}

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
struct Node {
    var: u32,
    /// 1-edge; by invariant never complemented.
    hi: NodeRef,
    /// 0-edge; may be complemented.
    lo: NodeRef,
}

pub struct BddManager {
    nodes: Vec<Node>,
    unique: HashMap<(u32, NodeRef, NodeRef), u32>,
    and_cache: HashMap<(NodeRef, NodeRef), NodeRef>,
    vars: Vec<VarInfo>,
    /// level → variable
    order: Vec<u32>,
    /// variable → level
    level: Vec<u32>,
}

impl Default for BddManager {
    fn default() -> Self {
        Self::new()
    }
}

impl BddManager {
    pub fn new() -> Self {
        BddManager {
            nodes: vec![Node {
                var: TERMINAL_VAR,
                hi: NodeRef::TRUE,
                lo: NodeRef::TRUE,
            }],
            unique: HashMap::new(),
            and_cache: HashMap::new(),
            vars: Vec::new(),
            order: Vec::new(),
            level: Vec::new(),
        }
    }

    /// Register a variable at the bottom of the current order.
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind) -> VarId {
        let id = self.vars.len() as u32;
        self.vars.push(VarInfo {
            name: name.into(),
            kind,
        });
        self.order.push(id);
        self.level.push(id);
        VarId(id)
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn var_kind(&self, v: VarId) -> VarKind {
        self.vars[v.index()].kind
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    /// Current order, outermost variable first.
    pub fn var_order(&self) -> Vec<VarId> {
        self.order.iter().map(|&v| VarId(v)).collect()
    }

    /// Total nodes ever allocated (including the terminal).
    pub fn allocated(&self) -> usize {
        self.nodes.len()
    }

    /// The function "v is true".
    pub fn var(&mut self, v: VarId) -> NodeRef {
        self.mk(v.0, NodeRef::TRUE, NodeRef::FALSE)
    }

    fn node(&self, r: NodeRef) -> Node {
        self.nodes[r.index()]
    }

    fn top_var(&self, r: NodeRef) -> Option<u32> {
        if r.is_terminal() {
            None
        } else {
            Some(self.node(r).var)
        }
    }

    fn ref_level(&self, r: NodeRef) -> u32 {
        match self.top_var(r) {
            Some(v) => self.level[v as usize],
            None => u32::MAX,
        }
    }

    /// Hash-consed node constructor; maintains the reduced form and the
    /// "1-edge never complemented" convention.
    fn mk(&mut self, var: u32, hi: NodeRef, lo: NodeRef) -> NodeRef {
        if hi == lo {
            return hi;
        }
        if hi.is_complement() {
            return self.mk(var, hi.complement(), lo.complement()).complement();
        }
        debug_assert!(self.level[var as usize] < self.ref_level(hi));
        debug_assert!(self.level[var as usize] < self.ref_level(lo));
        let key = (var, hi, lo);
        if let Some(&idx) = self.unique.get(&key) {
            return NodeRef::new(idx, false);
        }
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node { var, hi, lo });
        self.unique.insert(key, idx);
        NodeRef::new(idx, false)
    }

    /// Cofactors of `r` with respect to `var`; identity if `r` does not test
    /// `var` at its root.
    fn cofactors_for(&self, r: NodeRef, var: u32) -> (NodeRef, NodeRef) {
        if self.top_var(r) != Some(var) {
            return (r, r);
        }
        let n = self.node(r);
        if r.is_complement() {
            (n.hi.complement(), n.lo.complement())
        } else {
            (n.hi, n.lo)
        }
    }

    pub fn and(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        if a == NodeRef::TRUE {
            return b;
        }
        if b == NodeRef::TRUE {
            return a;
        }
        if a == NodeRef::FALSE || b == NodeRef::FALSE {
            return NodeRef::FALSE;
        }
        if a == b {
            return a;
        }
        if a == b.complement() {
            return NodeRef::FALSE;
        }
        let key = if a.0 <= b.0 { (a, b) } else { (b, a) };
        if let Some(&r) = self.and_cache.get(&key) {
            return r;
        }
        let level = self.ref_level(a).min(self.ref_level(b));
        let var = self.order[level as usize];
        let (a1, a0) = self.cofactors_for(a, var);
        let (b1, b0) = self.cofactors_for(b, var);
        let hi = self.and(a1, b1);
        let lo = self.and(a0, b0);
        let r = self.mk(var, hi, lo);
        self.and_cache.insert(key, r);
        r
    }

    pub fn or(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        self.and(a.complement(), b.complement()).complement()
    }

    /// Evaluate under a total assignment indexed by variable id.
    pub fn eval(&self, f: NodeRef, values: &[bool]) -> bool {
        let mut cur = f;
        let mut parity = false;
        loop {
            parity ^= cur.is_complement();
            if cur.is_terminal() {
                return !parity;
            }
            let n = self.node(cur);
            cur = if values[n.var as usize] { n.hi } else { n.lo };
        }
    }

    /// Probability of `f` when every reachable variable has a fixed
    /// probability; errors if an optimizable variable is encountered.
    pub fn prob(&self, f: NodeRef) -> Result<f64> {
        let mut memo = HashMap::new();
        let p = self.prob_rec(f.index(), &mut memo)?;
        Ok(if f.is_complement() { 1.0 - p } else { p })
    }

    /// Probability of the regular function rooted at a node index.
    fn prob_rec(&self, idx: usize, memo: &mut HashMap<usize, f64>) -> Result<f64> {
        if idx == 0 {
            return Ok(1.0);
        }
        if let Some(&p) = memo.get(&idx) {
            return Ok(p);
        }
        let n = self.nodes[idx];
        let pi = match self.vars[n.var as usize].kind {
            VarKind::Fixed(p) => p,
            VarKind::Optimizable => {
                return Err(Error::Bdd(format!(
                    "probability requested over the optimizable variable `{}`",
                    self.vars[n.var as usize].name
                )))
            }
        };
        let p1 = self.prob_rec(n.hi.index(), memo)?;
        let mut p0 = self.prob_rec(n.lo.index(), memo)?;
        if n.lo.is_complement() {
            p0 = 1.0 - p0;
        }
        let res = p1 * pi + p0 * (1.0 - pi);
        memo.insert(idx, res);
        Ok(res)
    }

    /// Distinct nodes reachable from `f`, the terminal included.
    pub fn node_count(&self, f: NodeRef) -> usize {
        self.reachable(f).len()
    }

    fn reachable(&self, f: NodeRef) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![f.index()];
        let mut out = Vec::new();
        while let Some(idx) = stack.pop() {
            if seen[idx] {
                continue;
            }
            seen[idx] = true;
            out.push(idx);
            if idx != 0 {
                let n = self.nodes[idx];
                stack.push(n.hi.index());
                stack.push(n.lo.index());
            }
        }
        out.sort_unstable();
        out
    }

    /// Graphviz rendering: solid 1-edges, dashed 0-edges, dotted complemented
    /// 0-edges. The root reference enters through a point node.
    pub fn to_dot(&self, f: NodeRef, graph_name: &str) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "digraph {graph_name} {{").unwrap();
        writeln!(s, "  root [shape=point];").unwrap();
        if f.is_complement() {
            writeln!(s, "  root -> n{} [style=dotted];", f.index()).unwrap();
        } else {
            writeln!(s, "  root -> n{};", f.index()).unwrap();
        }
        for idx in self.reachable(f) {
            if idx == 0 {
                writeln!(s, "  n0 [shape=box label=\"1\"];").unwrap();
                continue;
            }
            let n = self.nodes[idx];
            writeln!(
                s,
                "  n{idx} [label=\"{}\"];",
                self.vars[n.var as usize].name
            )
            .unwrap();
            writeln!(s, "  n{idx} -> n{} [style=solid];", n.hi.index()).unwrap();
            let style = if n.lo.is_complement() {
                "dotted"
            } else {
                "dashed"
            };
            writeln!(s, "  n{idx} -> n{} [style={style}];", n.lo.index()).unwrap();
        }
        writeln!(s, "}}").unwrap();
        s
    }

    /// Check structural invariants; used by tests and after reorders.
    #[allow(dead_code)]
    pub(crate) fn assert_valid(&self) {
        assert_eq!(
            self.unique.len(),
            self.nodes.len() - 1,
            "unique table is not a bijection"
        );
        for (idx, n) in self.nodes.iter().enumerate().skip(1) {
            assert!(!n.hi.is_complement(), "complemented 1-edge at node {idx}");
            assert_ne!(n.hi, n.lo, "unreduced node {idx}");
            let lv = self.level[n.var as usize];
            assert!(lv < self.ref_level(n.hi), "order violated at node {idx}");
            assert!(lv < self.ref_level(n.lo), "order violated at node {idx}");
            assert_eq!(self.unique.get(&(n.var, n.hi, n.lo)), Some(&(idx as u32)));
        }
        let mut order_seen = vec![false; self.vars.len()];
        for &v in &self.order {
            assert!(!order_seen[v as usize], "variable repeated in order");
            order_seen[v as usize] = true;
        }
        for (v, &lv) in self.level.iter().enumerate() {
            assert_eq!(self.order[lv as usize] as usize, v, "level map out of sync");
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::rngs::StdRng;
    use rand::Rng;

    /// Build a random function over the manager's variables by combining
    /// literals with and/or/not.
    pub fn random_function(m: &mut BddManager, rng: &mut StdRng, ops: usize) -> NodeRef {
        let nvars = m.var_count();
        let mut f = {
            let v = VarId(rng.random_range(0..nvars) as u32);
            m.var(v)
        };
        for _ in 0..ops {
            let v = VarId(rng.random_range(0..nvars) as u32);
            let mut g = m.var(v);
            if rng.random_bool(0.5) {
                g = g.complement();
            }
            f = match rng.random_range(0..3) {
                0 => m.and(f, g),
                1 => m.or(f, g),
                _ => {
                    let h = m.and(f, g);
                    h.complement()
                }
            };
        }
        f
    }

    /// Truth table of `f` over all `2^var_count` assignments; bit `i` of the
    /// row index gives the value of variable `i`.
    pub fn truth_table(m: &BddManager, f: NodeRef) -> Vec<bool> {
        let n = m.var_count();
        assert!(n <= 16, "truth table would be too large");
        (0..1usize << n)
            .map(|mask| {
                let values: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                m.eval(f, &values)
            })
            .collect()
    }
}
