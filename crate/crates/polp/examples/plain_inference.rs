//! Pure inference: with no optimizable facts the query probability is a
//! single number. Compute it twice — through the full pipeline and by
//! traversing the compiled diagram directly.
//!
//!     cargo run --example plain_inference

use polp::parser::{parse_ground_atom, parse_problem, ProblemInputs, Program};
use polp::pipeline::{compile_program, optimize_prob, PipelineConfig};

const PROGRAM: &str = "\
0.5::no_traffic.
0.9::no_accidents.
on_time :- no_traffic, no_accidents.
";

fn main() -> polp::Result<()> {
    println!("── program ──");
    print!("{PROGRAM}");

    let program = Program::parse(PROGRAM)?;
    let config = PipelineConfig::default();

    println!("\n── via the pipeline ──");
    let inputs = ProblemInputs {
        query: "on_time".into(),
        ..Default::default()
    };
    let spec = parse_problem(&program, &inputs)?;
    let out = optimize_prob(&program, &spec, &config)?;
    println!("P(on_time) = {}", out.query_probability);
    println!("equation   = {}", out.polynomial);

    println!("\n── via the diagram ──");
    let query = parse_ground_atom(&program, "on_time")?;
    let compiled = compile_program(&program, std::slice::from_ref(&query), &config)?;
    let root = compiled.roots[0];
    println!(
        "{} nodes reachable from the root",
        compiled.manager.node_count(root)
    );
    println!("P(on_time) = {}", compiled.manager.prob(root)?);
    Ok(())
}
