//! From diagram to closed form: extract the weighted path terms of a query,
//! expand them into the canonical multilinear equation, and differentiate it
//! exactly.
//!
//!     cargo run --example query_equation

use std::collections::HashMap;

use polp::bdd::VarId;
use polp::grounder::GroundProgram;
use polp::parser::{parse_ground_atom, Program};
use polp::symbolic::{path_operation_count, path_sum, QueryPolynomial};

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

    let (paths, stats) = manager.paths_prob_traced(root)?;
    println!(
        "── path terms ({}, {} swaps, {} visits) ──",
        paths.len(),
        stats.swaps,
        stats.visits
    );
    for term in &paths {
        let mut line = format!("{:+.4}", term.coefficient);
        for &(v, sign) in term.literals.iter().rev() {
            let name = manager.var_name(v);
            if sign {
                line.push_str(&format!(" · {name}"));
            } else {
                line.push_str(&format!(" · (1 − {name})"));
            }
        }
        println!("{line}");
    }

    let opt_index: HashMap<VarId, usize> = ground
        .opt_vars()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let poly = QueryPolynomial::from_paths(&paths, &opt_index)?;
    let names: Vec<String> = ground.opt_atoms().iter().map(|a| a.to_string()).collect();

    println!("\n── canonical equation ──");
    println!("P(path(a,e)) = {}", poly.pretty(&names));
    println!(
        "{} operations per evaluation, against {} for the raw path sum",
        poly.operation_count(),
        path_operation_count(&paths)
    );

    let x = [0.5, 0.7];
    // the raw path sum indexes by diagram variable, the equation by
    // optimizable index; line the two assignments up
    let mut by_var = vec![0.0; manager.var_count()];
    for (&v, &i) in &opt_index {
        by_var[v.index()] = x[i];
    }
    println!("\n── at edge(b,c)={}, edge(b,d)={} ──", x[0], x[1]);
    println!("equation value {:.6}", poly.evaluate(&x));
    println!("path sum       {:.6}", path_sum(&paths, &by_var));
    let grad = poly.gradient(&x);
    for (name, g) in names.iter().zip(&grad) {
        println!("∂P/∂{name} = {g:.6}");
    }
    Ok(())
}
