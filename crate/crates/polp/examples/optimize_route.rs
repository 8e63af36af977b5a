//! End to end: two legs of a route are decision variables; pick their
//! probabilities so the route stays reliable at the least total cost.
//!
//!     cargo run --example optimize_route

use polp::parser::{parse_problem, ProblemInputs, Program};
use polp::pipeline::{optimize_prob, PipelineConfig};

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
    println!("── program ──");
    print!("{PROGRAM}");

    let program = Program::parse(PROGRAM)?;
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

    println!("\n── problem ──");
    println!("minimize    edge(b,c) + edge(b,d)");
    println!("subject to  path(a,e) > 0.6");
    println!("            |edge(b,c) - edge(b,d)| < 0.1");

    let out = optimize_prob(&program, &spec, &PipelineConfig::default())?;

    println!("\n── solution ({}) ──", out.status);
    for (atom, p) in &out.assignment {
        println!("{atom} = {p:.5}");
    }
    println!(
        "objective       {:.5}",
        out.objective_value.expect("an objective was given")
    );
    println!("P(path(a,e))    {:.5}", out.query_probability);
    println!("query equation  {}", out.polynomial);
    println!(
        "{} iterations, kkt residual {:.1e}, constraint violation {:.1e}",
        out.iterations, out.kkt_residual, out.max_violation
    );
    let t = out.timings;
    println!(
        "timings ms      ground {:.2} | compile {:.2} | reorder {:.2} | extract {:.2} | solve {:.2}",
        t.grounding_ms, t.compile_ms, t.reorder_ms, t.extract_ms, t.solve_ms
    );
    Ok(())
}
