//! Variable order and DOT export: adjacent-level swaps bubble every
//! optimizable variable above the fixed ones without rebuilding the diagram,
//! so each root-to-frontier path splits into a decision prefix and a
//! fixed-probability tail.
//!
//!     cargo run --example reorder_and_export

use polp::bdd::VarKind;
use polp::grounder::GroundProgram;
use polp::parser::{parse_ground_atom, Program};

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

    let show_order = |m: &polp::bdd::BddManager| {
        for v in m.var_order() {
            let tag = match m.var_kind(v) {
                VarKind::Optimizable => "optimizable".to_string(),
                VarKind::Fixed(p) => format!("fixed {p}"),
            };
            println!("  {} ({tag})", m.var_name(v));
        }
    };

    println!("── order as declared ──");
    show_order(&manager);
    println!("  {} nodes", manager.node_count(root));

    let swaps = manager.reorder_optimizable_first();
    println!("\n── after {swaps} adjacent swaps ──");
    show_order(&manager);
    println!("  {} nodes", manager.node_count(root));

    println!("\n── graphviz ──");
    print!("{}", manager.to_dot(root, "route_query"));
    println!("(solid = 1-edge, dashed = 0-edge, dotted = complemented 0-edge)");
    Ok(())
}
