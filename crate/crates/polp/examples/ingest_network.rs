//! Edge list in, program out: a seeded half of the edges become decision
//! variables, reachability rules are appended, and the generated program is
//! immediately optimized.
//!
//!     cargo run --example ingest_network

use polp::cli::ingest_edgelist;
use polp::parser::{parse_problem, ProblemInputs, Program};
use polp::pipeline::{optimize_prob, PipelineConfig};

const EDGES: &str = "\
a b
b c
b d
c e
d e
";

fn main() -> polp::Result<()> {
    println!("── edge list ──");
    print!("{EDGES}");

    let text = ingest_edgelist(EDGES, 0.4, 11, 0.5, (0.001, 0.999))?;
    println!("\n── generated program ──");
    print!("{text}");

    let program = Program::parse(&text)?;
    let objective: String = program
        .opt_facts
        .iter()
        .map(|f| f.atom.to_string())
        .collect::<Vec<_>>()
        .join("+");
    println!("\n── minimize {objective} with P(path(a,e)) > 0.3 ──");

    let inputs = ProblemInputs {
        query: "path(a,e)".into(),
        objective: Some(objective),
        constraints: vec!["path(a,e)>0.3".into()],
        maximize: false,
        strict_eps: 0.0,
    };
    let spec = parse_problem(&program, &inputs)?;
    let out = optimize_prob(&program, &spec, &PipelineConfig::default())?;
    println!("status {}", out.status);
    for (atom, p) in &out.assignment {
        println!("{atom} = {p:.5}");
    }
    println!("P(path(a,e)) = {:.5}", out.query_probability);
    Ok(())
}
