//! Grounding to propositional rule instances, and query compilation by a
//! least-fixpoint over decision diagrams.
//!
//! Every rule is instantiated over the constant universe (query constants
//! included, so a query like `path(z,z)` can still hit an instance of
//! `path(X,X).`). Instances with a body atom that is neither a declared fact
//! nor headed by any rule predicate are dropped — they can never fire.
//!
//! [`GroundProgram::compile_queries`] then assigns one diagram variable per
//! fact and runs a work-list fixpoint: an instance is re-evaluated only when
//! the definition of one of its body atoms grows, and each head accumulates
//! the disjunction of its firing instances. The result maps the query to the
//! boolean function "the query holds in this world" over the fact variables.

use std::collections::{HashMap, HashSet, VecDeque};
use std::time::Instant;

use crate::bdd::{BddManager, NodeRef, VarId, VarKind};
use crate::error::{Error, Result};
use crate::parser::{Atom, Program, Rule, Term};

/// How a ground fact's probability is determined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactKind {
    Fixed(f64),
    /// A decision variable; `opt_index` is its position among the
    /// optimizable facts in declaration order.
    Optimizable {
        lower: f64,
        upper: f64,
        opt_index: usize,
    },
}

#[derive(Clone, Debug)]
pub struct FactInfo {
    pub atom: Atom,
    pub kind: FactKind,
}

/// A fully instantiated rule; head and body are ground.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundRule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

/// Caps on the grounding work, to fail fast on runaway instantiation.
#[derive(Clone, Copy, Debug)]
pub struct GroundLimits {
    pub max_instantiations: usize,
}

impl Default for GroundLimits {
    fn default() -> Self {
        GroundLimits {
            max_instantiations: 10_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundProgram {
    /// One entry per program fact, in declaration order; the fact at index
    /// `i` is diagram variable `i`.
    pub facts: Vec<FactInfo>,
    pub rules: Vec<GroundRule>,
    /// Constants in first-occurrence order, query constants last.
    pub universe: Vec<String>,
    pub fact_vars: HashMap<Atom, VarId>,
    pub fact_preds: HashSet<(String, usize)>,
    pub head_preds: HashSet<(String, usize)>,
}

impl GroundProgram {
    pub fn ground(program: &Program, queries: &[Atom]) -> Result<GroundProgram> {
        Self::ground_with(program, queries, &GroundLimits::default())
    }

    pub fn ground_with(
        program: &Program,
        queries: &[Atom],
        limits: &GroundLimits,
    ) -> Result<GroundProgram> {
        let mut facts: Vec<Option<FactInfo>> = vec![None; program.fact_count()];
        for f in &program.prob_facts {
            facts[f.decl] = Some(FactInfo {
                atom: f.atom.clone(),
                kind: FactKind::Fixed(f.prob),
            });
        }
        for (opt_index, f) in program.opt_facts.iter().enumerate() {
            facts[f.decl] = Some(FactInfo {
                atom: f.atom.clone(),
                kind: FactKind::Optimizable {
                    lower: f.lower,
                    upper: f.upper,
                    opt_index,
                },
            });
        }
        let facts: Vec<FactInfo> = facts.into_iter().map(|f| f.expect("fact slot")).collect();

        let mut universe: Vec<String> = Vec::new();
        let note = |term: &Term, universe: &mut Vec<String>| {
            if let Term::Const(c) = term {
                if !universe.iter().any(|u| u == c) {
                    universe.push(c.clone());
                }
            }
        };
        for f in &facts {
            f.atom.args.iter().for_each(|t| note(t, &mut universe));
        }
        for r in &program.rules {
            for atom in std::iter::once(&r.head).chain(r.body.iter()) {
                atom.args.iter().for_each(|t| note(t, &mut universe));
            }
        }
        for q in queries {
            q.args.iter().for_each(|t| note(t, &mut universe));
        }

        let mut fact_vars = HashMap::new();
        let mut fact_preds = HashSet::new();
        for (i, f) in facts.iter().enumerate() {
            fact_vars.insert(f.atom.clone(), VarId(i as u32));
            fact_preds.insert((f.atom.predicate.clone(), f.atom.arity()));
        }
        let head_preds: HashSet<(String, usize)> = program
            .rules
            .iter()
            .map(|r| (r.head.predicate.clone(), r.head.arity()))
            .collect();

        let mut rules = Vec::new();
        let mut attempted = 0usize;
        for rule in &program.rules {
            instantiate_rule(
                rule,
                &universe,
                &fact_vars,
                &head_preds,
                limits,
                &mut attempted,
                &mut rules,
            )?;
        }

        Ok(GroundProgram {
            facts,
            rules,
            universe,
            fact_vars,
            fact_preds,
            head_preds,
        })
    }

    /// Fresh manager with one variable per fact, in declaration order.
    pub fn new_manager(&self) -> BddManager {
        let mut m = BddManager::new();
        for f in &self.facts {
            let kind = match f.kind {
                FactKind::Fixed(p) => VarKind::Fixed(p),
                FactKind::Optimizable { .. } => VarKind::Optimizable,
            };
            m.add_var(f.atom.to_string(), kind);
        }
        m
    }

    /// Diagram variables of the optimizable facts, in declaration order.
    pub fn opt_vars(&self) -> Vec<VarId> {
        self.facts
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f.kind, FactKind::Optimizable { .. }))
            .map(|(i, _)| VarId(i as u32))
            .collect()
    }

    /// Probability ranges of the optimizable facts, in declaration order.
    pub fn opt_bounds(&self) -> Vec<(f64, f64)> {
        self.facts
            .iter()
            .filter_map(|f| match f.kind {
                FactKind::Optimizable { lower, upper, .. } => Some((lower, upper)),
                FactKind::Fixed(_) => None,
            })
            .collect()
    }

    pub fn opt_atoms(&self) -> Vec<&Atom> {
        self.facts
            .iter()
            .filter(|f| matches!(f.kind, FactKind::Optimizable { .. }))
            .map(|f| &f.atom)
            .collect()
    }

    /// Per-fact probabilities with the optimizable ones taken from `x`
    /// (indexed by `opt_index`), dense by diagram variable id.
    pub fn world_probs(&self, x: &[f64]) -> Vec<f64> {
        self.facts
            .iter()
            .map(|f| match f.kind {
                FactKind::Fixed(p) => p,
                FactKind::Optimizable { opt_index, .. } => x[opt_index],
            })
            .collect()
    }

    pub fn compile_query(
        &self,
        manager: &mut BddManager,
        query: &Atom,
        deadline: Option<Instant>,
    ) -> Result<NodeRef> {
        Ok(self.compile_queries(manager, std::slice::from_ref(query), deadline)?[0])
    }

    /// Run the fixpoint once and resolve every query against it. The manager
    /// must come from [`new_manager`](Self::new_manager) so fact variables
    /// line up.
    pub fn compile_queries(
        &self,
        manager: &mut BddManager,
        queries: &[Atom],
        deadline: Option<Instant>,
    ) -> Result<Vec<NodeRef>> {
        debug_assert_eq!(manager.var_count(), self.facts.len());
        let mut defs: HashMap<&Atom, NodeRef> = HashMap::new();
        for (i, f) in self.facts.iter().enumerate() {
            let var = manager.var(VarId(i as u32));
            defs.insert(&f.atom, var);
        }

        let mut by_body: HashMap<&Atom, Vec<usize>> = HashMap::new();
        for (i, rule) in self.rules.iter().enumerate() {
            for b in &rule.body {
                by_body.entry(b).or_default().push(i);
            }
        }

        let mut queue: VecDeque<usize> = (0..self.rules.len()).collect();
        let mut queued = vec![true; self.rules.len()];
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            if let Some(d) = deadline {
                if Instant::now() >= d {
                    return Err(Error::Resource(
                        "query compilation ran past its deadline".into(),
                    ));
                }
            }
            let rule = &self.rules[i];
            let mut conj = NodeRef::TRUE;
            for b in &rule.body {
                conj = match defs.get(b) {
                    Some(&r) => manager.and(conj, r),
                    None => NodeRef::FALSE,
                };
                if conj == NodeRef::FALSE {
                    break;
                }
            }
            if conj == NodeRef::FALSE {
                continue;
            }
            let old = defs.get(&rule.head).copied().unwrap_or(NodeRef::FALSE);
            let new = manager.or(old, conj);
            if new == old {
                continue;
            }
            defs.insert(&rule.head, new);
            if let Some(deps) = by_body.get(&rule.head) {
                for &j in deps {
                    if !queued[j] {
                        queued[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }

        queries
            .iter()
            .map(|q| {
                if let Some(&r) = defs.get(q) {
                    Ok(r)
                } else {
                    let key = (q.predicate.clone(), q.arity());
                    if self.fact_preds.contains(&key) || self.head_preds.contains(&key) {
                        Ok(NodeRef::FALSE)
                    } else {
                        Err(Error::Ground(format!(
                            "unknown predicate `{}/{}`",
                            q.predicate,
                            q.arity()
                        )))
                    }
                }
            })
            .collect()
    }
}

fn rule_vars(rule: &Rule) -> Vec<&str> {
    let mut out = Vec::new();
    for atom in std::iter::once(&rule.head).chain(rule.body.iter()) {
        for v in atom.vars() {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

fn apply(atom: &Atom, vars: &[&str], values: &[&String]) -> Atom {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Term::Const(c.clone()),
            Term::Var(v) => {
                let i = vars
                    .iter()
                    .position(|name| name == v)
                    .expect("bound variable");
                Term::Const(values[i].clone())
            }
        })
        .collect();
    Atom {
        predicate: atom.predicate.clone(),
        args,
    }
}

#[allow(clippy::too_many_arguments)]
fn instantiate_rule(
    rule: &Rule,
    universe: &[String],
    fact_vars: &HashMap<Atom, VarId>,
    head_preds: &HashSet<(String, usize)>,
    limits: &GroundLimits,
    attempted: &mut usize,
    out: &mut Vec<GroundRule>,
) -> Result<()> {
    let vars = rule_vars(rule);
    if !vars.is_empty() && universe.is_empty() {
        return Ok(());
    }
    let mut counters = vec![0usize; vars.len()];
    'subst: loop {
        *attempted += 1;
        if *attempted > limits.max_instantiations {
            return Err(Error::Resource(format!(
                "grounding exceeded {} rule instantiations",
                limits.max_instantiations
            )));
        }
        let values: Vec<&String> = counters.iter().map(|&i| &universe[i]).collect();
        let head = apply(&rule.head, &vars, &values);
        debug_assert!(head.is_ground());
        let mut body = Vec::with_capacity(rule.body.len());
        let mut supported = true;
        for b in &rule.body {
            let gb = apply(b, &vars, &values);
            if fact_vars.contains_key(&gb)
                || head_preds.contains(&(gb.predicate.clone(), gb.arity()))
            {
                body.push(gb);
            } else {
                supported = false;
                break;
            }
        }
        if supported {
            out.push(GroundRule { head, body });
        }

        let mut pos = counters.len();
        loop {
            if pos == 0 {
                break 'subst;
            }
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] < universe.len() {
                continue 'subst;
            }
            counters[pos] = 0;
        }
    }
    Ok(())
}
