//! Regenerate the complete-graph suite: for each K_N, half the edges are
//! optimizable, the target is P(path(1,N)) > 0.8, and the solver minimizes
//! the total probability mass it spends getting there.
//!
//!     cargo run --release --example complete_graph_bench

use polp::cli::{bench_complete, render_bench_csv};
use polp::pipeline::PipelineConfig;

fn main() -> polp::Result<()> {
    println!("── K_1 .. K_5, seed 1 ──");
    let rows = bench_complete(1, 5, 1, &PipelineConfig::default())?;
    print!("{}", render_bench_csv(&rows));

    println!("\nevery converged row should sit at probability ≈ 0.8: the");
    println!("constraint is active because raising any edge costs objective");
    Ok(())
}
