//! End-to-end driver: ground the program, compile the query atoms to
//! decision diagrams, reorder, read the diagrams back out as multilinear
//! polynomials, and either report a probability (pure inference) or hand the
//! polynomials to the constrained solver.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bdd::{BddManager, NodeRef, VarId};
use crate::error::{Error, Result};
use crate::grounder::{GroundLimits, GroundProgram};
use crate::optimizer::{OptProblem, SolveStatus, SolverConfig, SqpSolver};
use crate::parser::{Atom, Cmp, ConstraintSpec, ProblemSpec, Program};
use crate::symbolic::{CompiledExpr, QueryPolynomial};

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub solver: SolverConfig,
    pub limits: GroundLimits,
    /// Fail with a resource error once a query polynomial exceeds this many
    /// monomials (dense diagrams can blow up exponentially).
    pub monomial_cap: usize,
    /// Per-phase wall-clock limit for query compilation.
    pub compile_timeout: Option<Duration>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            solver: SolverConfig::default(),
            limits: GroundLimits::default(),
            monomial_cap: 1_000_000,
            compile_timeout: None,
        }
    }
}

/// Wall-clock milliseconds per phase.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub grounding_ms: f64,
    pub compile_ms: f64,
    pub reorder_ms: f64,
    pub extract_ms: f64,
    pub solve_ms: f64,
}

/// Size counters for the main query's compiled artifacts.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct BddStats {
    pub nodes: usize,
    pub path_terms: usize,
    pub monomials: usize,
    pub swaps: usize,
}

/// Result of a full run, ready for reporting.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: SolveStatus,
    /// Optimizable atom → chosen probability; empty in pure inference.
    pub assignment: BTreeMap<String, f64>,
    /// `None` in pure inference mode.
    pub objective_value: Option<f64>,
    /// P(query) at the final assignment, clamped to [0,1] for reporting.
    pub query_probability: f64,
    /// Every query atom that appeared in the problem, at the assignment.
    pub query_probs: BTreeMap<String, f64>,
    /// Pretty-printed query equation.
    pub polynomial: String,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub max_violation: f64,
    pub stats: BddStats,
    pub timings: Timings,
}

/// A grounded program with compiled diagrams for a set of query atoms.
pub struct Compiled {
    pub ground: GroundProgram,
    pub manager: BddManager,
    pub queries: Vec<Atom>,
    pub roots: Vec<NodeRef>,
}

pub fn compile_program(
    program: &Program,
    queries: &[Atom],
    config: &PipelineConfig,
) -> Result<Compiled> {
    let ground = GroundProgram::ground_with(program, queries, &config.limits)?;
    let mut manager = ground.new_manager();
    let deadline = config.compile_timeout.map(|d| Instant::now() + d);
    let roots = ground.compile_queries(&mut manager, queries, deadline)?;
    Ok(Compiled {
        ground,
        manager,
        queries: queries.to_vec(),
        roots,
    })
}

/// Run the whole pipeline for one problem spec.
pub fn optimize_prob(
    program: &Program,
    spec: &ProblemSpec,
    config: &PipelineConfig,
) -> Result<Outcome> {
    // the main query first, then every query atom constraints mention
    let mut queries: Vec<Atom> = vec![spec.query.clone()];
    let mut refs: Vec<&Atom> = Vec::new();
    if let Some(obj) = &spec.objective {
        obj.query_atoms(&mut refs);
    }
    for c in &spec.constraints {
        c.lhs.query_atoms(&mut refs);
        c.rhs.query_atoms(&mut refs);
    }
    for a in refs {
        if !queries.contains(a) {
            queries.push(a.clone());
        }
    }

    let t = Instant::now();
    let ground = GroundProgram::ground_with(program, &queries, &config.limits)?;
    let grounding_ms = ms(t);

    if spec.objective.is_some() && ground.opt_bounds().is_empty() {
        return Err(Error::Problem(
            "the objective needs optimizable facts, but the program declares none".into(),
        ));
    }

    let t = Instant::now();
    let mut manager = ground.new_manager();
    let deadline = config.compile_timeout.map(|d| Instant::now() + d);
    let roots = ground.compile_queries(&mut manager, &queries, deadline)?;
    let compile_ms = ms(t);
    let nodes = manager.node_count(roots[0]);

    let t = Instant::now();
    let swaps = manager.reorder_optimizable_first();
    let reorder_ms = ms(t);

    let t = Instant::now();
    let opt_index: HashMap<VarId, usize> = ground
        .opt_vars()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let mut polys = Vec::with_capacity(roots.len());
    let mut path_terms = 0;
    for (i, &root) in roots.iter().enumerate() {
        let paths = manager.paths_prob(root)?;
        if i == 0 {
            path_terms = paths.len();
        }
        polys.push(QueryPolynomial::from_paths_capped(
            &paths,
            &opt_index,
            config.monomial_cap,
        )?);
    }
    let extract_ms = ms(t);

    let names: Vec<String> = ground.opt_atoms().iter().map(|a| a.to_string()).collect();
    let polynomial = polys[0].pretty(&names);
    let stats = BddStats {
        nodes,
        path_terms,
        monomials: polys[0].len(),
        swaps,
    };
    let mut timings = Timings {
        grounding_ms,
        compile_ms,
        reorder_ms,
        extract_ms,
        solve_ms: 0.0,
    };

    let Some(objective_expr) = &spec.objective else {
        // pure inference: constraints are rejected upstream without an
        // objective, so the main query is the only compiled atom
        let poly = &polys[0];
        if !poly.is_constant() {
            return Err(Error::Problem(
                "the query probability depends on optimizable facts; \
                 add an objective to choose their values"
                    .into(),
            ));
        }
        let p = poly.coefficient(&[]).clamp(0.0, 1.0);
        return Ok(Outcome {
            status: SolveStatus::Converged,
            assignment: BTreeMap::new(),
            objective_value: None,
            query_probability: p,
            query_probs: BTreeMap::from([(spec.query.to_string(), p)]),
            polynomial,
            iterations: 0,
            kkt_residual: 0.0,
            max_violation: 0.0,
            stats,
            timings,
        });
    };

    let t = Instant::now();
    let poly_index: HashMap<Atom, usize> = queries
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let objective = CompiledExpr::compile(objective_expr, &poly_index)?;
    let mut constraints = Vec::with_capacity(spec.constraints.len());
    for c in &spec.constraints {
        constraints.push(residual_expr(c, spec.strict_eps, &poly_index)?);
    }
    let problem = OptProblem {
        objective,
        direction: spec.direction,
        constraints,
        bounds: ground.opt_bounds(),
        polys,
    };
    let sol = SqpSolver::solve(&problem, &config.solver)?;
    timings.solve_ms = ms(t);

    let assignment: BTreeMap<String, f64> =
        names.iter().cloned().zip(sol.x.iter().copied()).collect();
    let query_probs: BTreeMap<String, f64> = queries
        .iter()
        .zip(&problem.polys)
        .map(|(q, p)| (q.to_string(), p.evaluate(&sol.x).clamp(0.0, 1.0)))
        .collect();
    let query_probability = query_probs[&spec.query.to_string()];
    Ok(Outcome {
        status: sol.status,
        assignment,
        objective_value: Some(sol.objective),
        query_probability,
        query_probs,
        polynomial,
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
        max_violation: sol.max_violation,
        stats,
        timings,
    })
}

/// Turn `lhs cmp rhs` into a residual that must be ≤ 0, folding the strict
/// slack into `<` and `>`.
fn residual_expr(
    c: &ConstraintSpec,
    strict_eps: f64,
    poly_index: &HashMap<Atom, usize>,
) -> Result<CompiledExpr> {
    let lhs = CompiledExpr::compile(&c.lhs, poly_index)?;
    let rhs = CompiledExpr::compile(&c.rhs, poly_index)?;
    let base = match c.cmp {
        Cmp::Lt | Cmp::Le => CompiledExpr::Sub(Box::new(lhs), Box::new(rhs)),
        Cmp::Gt | Cmp::Ge => CompiledExpr::Sub(Box::new(rhs), Box::new(lhs)),
    };
    Ok(if matches!(c.cmp, Cmp::Lt | Cmp::Gt) && strict_eps > 0.0 {
        CompiledExpr::Add(Box::new(base), Box::new(CompiledExpr::Const(strict_eps)))
    } else {
        base
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ON_TIME_PROGRAM, ROUTE_PROGRAM};
    use crate::parser::{parse_problem, ProblemInputs};

    fn route_spec(constraints: &[&str], objective: Option<&str>) -> (Program, ProblemSpec) {
        let program = Program::parse(ROUTE_PROGRAM).unwrap();
        let inputs = ProblemInputs {
            query: "path(a,e)".into(),
            objective: objective.map(str::to_owned),
            constraints: constraints.iter().map(|s| s.to_string()).collect(),
            maximize: false,
            strict_eps: 0.0,
        };
        let spec = parse_problem(&program, &inputs).unwrap();
        (program, spec)
    }

    #[test]
    fn route_problem_end_to_end() {
        let (program, spec) = route_spec(
            &[
                "path(a,e)>0.6",
                "edge(b,c)-edge(b,d)<0.1",
                "edge(b,d)-edge(b,c)<0.1",
            ],
            Some("edge(b,c)+edge(b,d)"),
        );
        let out = optimize_prob(&program, &spec, &PipelineConfig::default()).unwrap();

        assert_eq!(out.status, SolveStatus::Converged);
        let objective = out.objective_value.unwrap();
        assert!((objective - 1.3704).abs() < 5e-3, "objective {objective}");
        assert!(
            (out.query_probability - 0.6).abs() < 1e-3,
            "prob {}",
            out.query_probability
        );

        let keys: Vec<&String> = out.assignment.keys().collect();
        assert_eq!(keys, ["edge(b,c)", "edge(b,d)"]);
        for (&(lo, hi), v) in [(0.3, 0.8), (0.3, 0.8)].iter().zip(out.assignment.values()) {
            assert!(
                (lo - 1e-9..=hi + 1e-9).contains(v),
                "assignment {v} outside bounds"
            );
        }

        assert_eq!(out.stats.path_terms, 3);
        assert_eq!(out.stats.monomials, 3);
        assert!(out.stats.nodes > 0);
        assert!(out.stats.swaps >= 1, "optimizable variables already first?");
        assert!(
            out.polynomial.contains("0.27*edge(b,c)"),
            "{}",
            out.polynomial
        );
        assert!(
            out.polynomial.contains("0.72*edge(b,d)"),
            "{}",
            out.polynomial
        );
        assert!(
            out.polynomial.contains("0.216*edge(b,c)*edge(b,d)"),
            "{}",
            out.polynomial
        );
    }

    #[test]
    fn pure_inference_reports_the_probability() {
        let program = Program::parse(ON_TIME_PROGRAM).unwrap();
        let inputs = ProblemInputs {
            query: "on_time".into(),
            ..Default::default()
        };
        let spec = parse_problem(&program, &inputs).unwrap();
        let out = optimize_prob(&program, &spec, &PipelineConfig::default()).unwrap();

        assert_eq!(out.status, SolveStatus::Converged);
        assert_eq!(out.query_probability, 0.45);
        assert!(out.assignment.is_empty());
        assert_eq!(out.objective_value, None);
        assert_eq!(out.polynomial, "0.45");
        assert_eq!(out.stats.monomials, 1);
        assert_eq!(out.stats.path_terms, 1);
    }

    #[test]
    fn unreachable_probability_is_reported_infeasible() {
        let (program, spec) = route_spec(&["path(a,e)>0.999"], Some("edge(b,c)+edge(b,d)"));
        let out = optimize_prob(&program, &spec, &PipelineConfig::default()).unwrap();

        assert_eq!(out.status, SolveStatus::Infeasible);
        // most-feasible point: both probabilities pushed to their ceilings
        for v in out.assignment.values() {
            assert!((v - 0.8).abs() < 1e-9, "assignment {v}");
        }
        assert!((out.query_probability - 0.65376).abs() < 1e-9);
        assert!(out.max_violation > 0.3);
    }

    #[test]
    fn optimizable_query_needs_an_objective() {
        let (program, spec) = route_spec(&[], None);
        let err = optimize_prob(&program, &spec, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Problem(_)), "{err}");
        assert!(err.to_string().contains("objective"), "{err}");
    }

    #[test]
    fn objective_requires_optimizable_facts() {
        let program = Program::parse(ON_TIME_PROGRAM).unwrap();
        let inputs = ProblemInputs {
            query: "on_time".into(),
            objective: Some("0.5".into()),
            ..Default::default()
        };
        let spec = parse_problem(&program, &inputs).unwrap();
        let err = optimize_prob(&program, &spec, &PipelineConfig::default()).unwrap_err();
        assert!(err.to_string().contains("declares none"), "{err}");
    }

    #[test]
    fn compile_timeout_is_enforced() {
        let (program, spec) = route_spec(&[], Some("edge(b,c)"));
        let config = PipelineConfig {
            compile_timeout: Some(Duration::ZERO),
            ..Default::default()
        };
        let err = optimize_prob(&program, &spec, &config).unwrap_err();
        assert!(matches!(err, Error::Resource(_)), "{err}");
    }

    #[test]
    fn compile_program_exposes_the_diagram() {
        let (program, spec) = route_spec(&[], Some("edge(b,c)"));
        let compiled = compile_program(
            &program,
            std::slice::from_ref(&spec.query),
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(compiled.roots.len(), 1);
        assert!(compiled.manager.node_count(compiled.roots[0]) > 1);
        assert_eq!(compiled.ground.universe.len(), 5);
    }
}
