//! The slow way agrees with the fast way: enumerate every possible world to
//! check the compiled query equation, then sweep a fine grid to check the
//! constrained solver.
//!
//!     cargo run --example brute_force_check

use std::collections::HashMap;

use polp::bdd::VarId;
use polp::grounder::GroundProgram;
use polp::oracle::{enumerate_query_prob, grid_search};
use polp::parser::{parse_ground_atom, parse_problem, ProblemInputs, Program};
use polp::pipeline::{optimize_prob, PipelineConfig};
use polp::symbolic::QueryPolynomial;

const PROGRAM: &str = "\
0.9::edge(a,b).
optimizable [0.3,0.8]::edge(b,c).
optimizable [0.3,0.8]::edge(b,d).
0.3::edge(c,e).
0.8::edge(d,e).
path(X,X).
path(X,Y) :- path(X,Z), edge(Z,Y).
";

fn main() -> polp::Result<()> {
    let program = Program::parse(PROGRAM)?;
    let query = parse_ground_atom(&program, "path(a,e)")?;
    let ground = GroundProgram::ground(&program, std::slice::from_ref(&query))?;
    let mut manager = ground.new_manager();
    let root = ground.compile_query(&mut manager, &query, None)?;
    let paths = manager.paths_prob(root)?;
    let opt_index: HashMap<VarId, usize> = ground
        .opt_vars()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let poly = QueryPolynomial::from_paths(&paths, &opt_index)?;

    println!("── equation vs world enumeration (2^5 worlds) ──");
    let mut worst: f64 = 0.0;
    for x in [
        [0.3, 0.3],
        [0.3, 0.8],
        [0.55, 0.61],
        [0.8, 0.8],
        [0.42, 0.77],
    ] {
        let fast = poly.evaluate(&x);
        let slow = enumerate_query_prob(&ground, &x, &query)?;
        worst = worst.max((fast - slow).abs());
        println!("x = {x:?}: equation {fast:.9}, enumeration {slow:.9}");
    }
    println!("largest gap {worst:.3e}");

    println!("\n── solver vs grid search (1001 points per axis) ──");
    let inputs = ProblemInputs {
        query: "path(a,e)".into(),
        objective: Some("edge(b,c)+edge(b,d)".into()),
        constraints: vec![
            "path(a,e)>0.6".into(),
            "edge(b,c)-edge(b,d)<0.1".into(),
            "edge(b,d)-edge(b,c)<0.1".into(),
        ],
        maximize: false,
        strict_eps: 0.0,
    };
    let spec = parse_problem(&program, &inputs)?;
    let out = optimize_prob(&program, &spec, &PipelineConfig::default())?;

    let best = grid_search(
        &ground.opt_bounds(),
        1000,
        |x| poly.evaluate(x) >= 0.6 && (x[0] - x[1]) <= 0.1 && (x[1] - x[0]) <= 0.1,
        |x| x.iter().sum(),
        false,
    )
    .expect("the grid contains feasible points");

    println!(
        "solver   x = {:?}, objective {:.6}",
        out.assignment,
        out.objective_value.unwrap()
    );
    println!("grid     x = {:?}, objective {:.6}", best.x, best.objective);
    println!(
        "objective gap {:.2e} (grid resolution 5e-4 per axis)",
        (out.objective_value.unwrap() - best.objective).abs()
    );
    Ok(())
}
