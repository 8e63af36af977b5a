//! Command-line front end: `run` drives the full pipeline on one program,
//! `ingest` turns a plain edge list into a program file, and `bench
//! complete` regenerates the complete-graph reachability suite.
//!
//! Exit codes: 0 converged (or pure inference), 2 infeasible, 1 any error or
//! iteration limit.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{SolveStatus, SolverConfig};
use crate::parser::{extract_directives, parse_problem, ProblemInputs, Program};
use crate::pipeline::{compile_program, optimize_prob, BddStats, Outcome, PipelineConfig, Timings};

#[derive(Debug, Parser)]
#[command(
    name = "polp",
    version,
    about = "Optimize fact probabilities in logic programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a query and optimize the program's optimizable facts
    Run(RunArgs),
    /// Convert a whitespace-separated edge list into a program file
    Ingest(IngestArgs),
    /// Reproducible benchmark suites
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Reachability on complete graphs of growing size
    Complete(BenchCompleteArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Program file; may embed the problem in `% polp:` directives
    #[arg(long)]
    pub program: PathBuf,
    /// Ground query atom, e.g. `path(a,e)`
    #[arg(long)]
    pub query: Option<String>,
    /// Objective over optimizable facts, e.g. `edge(b,c)+edge(b,d)`
    #[arg(long)]
    pub objective: Option<String>,
    /// Inequality over facts and query atoms; repeatable
    #[arg(long = "constraint")]
    pub constraints: Vec<String>,
    /// Maximize the objective instead of minimizing it
    #[arg(long)]
    pub maximize: bool,
    /// Convergence tolerance on objective change, violation, and stationarity
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Solver restarts: first from the box midpoint, the rest seeded
    #[arg(long, default_value_t = 1)]
    pub multistart: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Slack folded into strict `<`/`>` constraints
    #[arg(long, default_value_t = 0.0)]
    pub strict_eps: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Also write the query's decision diagram in DOT form
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Wall-clock limit for query compilation
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Edge list file: one `u v` pair per line
    #[arg(long)]
    pub edges: PathBuf,
    /// Fraction of edges made optimizable (rounded to a count)
    #[arg(long, default_value_t = 0.5)]
    pub opt_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Probability given to the non-optimizable edges
    #[arg(long, default_value_t = 0.5)]
    pub fixed_prob: f64,
    #[arg(long, default_value_t = 0.001)]
    pub opt_lower: f64,
    #[arg(long, default_value_t = 0.999)]
    pub opt_upper: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BenchCompleteArgs {
    #[arg(long, default_value_t = 1)]
    pub min_n: usize,
    #[arg(long)]
    pub max_n: usize,
    /// Refuse graph sizes above this without explicit consent
    #[arg(long, default_value_t = 7)]
    pub cap: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-instance compile deadline
    #[arg(long, default_value_t = 300)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
    Csv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Text => "text",
            OutputFormat::Csv => "csv",
        })
    }
}

/// Machine-readable record of one `run`; field set is versioned by `schema`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub program: String,
    pub query: String,
    pub status: String,
    pub assignment: std::collections::BTreeMap<String, f64>,
    pub objective_value: Option<f64>,
    pub query_probability: f64,
    pub query_probs: std::collections::BTreeMap<String, f64>,
    pub polynomial: String,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub max_violation: f64,
    pub bdd_stats: BddStats,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(program: impl Into<String>, query: impl Into<String>, out: &Outcome) -> Self {
        RunReport {
            schema: 1,
            program: program.into(),
            query: query.into(),
            status: out.status.to_string(),
            assignment: out.assignment.clone(),
            objective_value: out.objective_value,
            query_probability: out.query_probability,
            query_probs: out.query_probs.clone(),
            polynomial: out.polynomial.clone(),
            iterations: out.iterations,
            kkt_residual: out.kkt_residual,
            max_violation: out.max_violation,
            bdd_stats: out.stats,
            timings: out.timings,
        }
    }
}

/// Parse the process arguments, run, print, and return the exit code.
pub fn run_main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("POLP_LOG", "warn"))
        .format_timestamp(None)
        .try_init()
        .ok();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let (report, code) = run_command(&args)?;
            println!("{}", render_report(&report, args.format)?);
            Ok(code)
        }
        Command::Ingest(args) => {
            let edges = read_file(&args.edges)?;
            let text = ingest_edgelist(
                &edges,
                args.opt_fraction,
                args.seed,
                args.fixed_prob,
                (args.opt_lower, args.opt_upper),
            )?;
            write_file(&args.out, &text)?;
            println!("wrote {}", args.out.display());
            Ok(0)
        }
        Command::Bench(BenchCommand::Complete(args)) => {
            if args.max_n > args.cap {
                return Err(Error::Problem(format!(
                    "--max-n {} exceeds the cap {}; raise --cap if you mean it",
                    args.max_n, args.cap
                )));
            }
            let config = PipelineConfig {
                solver: SolverConfig {
                    tol: args.tol,
                    seed: args.seed,
                    ..Default::default()
                },
                compile_timeout: Some(Duration::from_secs(args.timeout_secs)),
                ..Default::default()
            };
            let rows = bench_complete(args.min_n, args.max_n, args.seed, &config)?;
            let csv = render_bench_csv(&rows);
            write_file(&args.out, &csv)?;
            print!("{csv}");
            Ok(0)
        }
    }
}

/// Run one program. The problem comes from flags when any problem flag is
/// given, and from `% polp:` directives otherwise — never a mix.
pub fn run_command(args: &RunArgs) -> Result<(RunReport, i32)> {
    let source = read_file(&args.program)?;
    let program = Program::parse(&source)?;
    let directives = extract_directives(&source)?;
    let flags_given = args.query.is_some()
        || args.objective.is_some()
        || !args.constraints.is_empty()
        || args.maximize;
    let inputs = if flags_given {
        let query = args.query.clone().ok_or_else(|| {
            Error::Problem(
                "when any of --query/--objective/--constraint/--maximize is given, \
                 the whole problem must come from flags; add --query"
                    .into(),
            )
        })?;
        ProblemInputs {
            query,
            objective: args.objective.clone(),
            constraints: args.constraints.clone(),
            maximize: args.maximize,
            strict_eps: args.strict_eps,
        }
    } else {
        let query = directives.query.clone().ok_or_else(|| {
            Error::Problem(
                "no query given: pass --query or add a `% polp: query=...` directive".into(),
            )
        })?;
        ProblemInputs {
            query,
            objective: directives.objective.clone(),
            constraints: directives.constraints.clone(),
            maximize: directives.direction.as_deref() == Some("maximize"),
            strict_eps: args.strict_eps,
        }
    };
    let spec = parse_problem(&program, &inputs)?;
    let config = PipelineConfig {
        solver: SolverConfig {
            tol: args.tol,
            max_iters: args.max_iters,
            multistart: args.multistart,
            seed: args.seed,
        },
        compile_timeout: args.timeout_secs.map(Duration::from_secs),
        ..Default::default()
    };
    let outcome = optimize_prob(&program, &spec, &config)?;
    if let Some(path) = &args.dot {
        let compiled = compile_program(&program, std::slice::from_ref(&spec.query), &config)?;
        write_file(path, &compiled.manager.to_dot(compiled.roots[0], "query"))?;
    }
    let code = exit_code(outcome.status);
    let report = RunReport::new(
        args.program.display().to_string(),
        spec.query.to_string(),
        &outcome,
    );
    Ok((report, code))
}

pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::Infeasible => 2,
        SolveStatus::MaxIters => 1,
    }
}

pub fn render_report(report: &RunReport, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Json => serde_json::to_string_pretty(report)
            .map_err(|e| Error::Problem(format!("cannot serialize report: {e}")))?,
        OutputFormat::Text => render_text(report),
        OutputFormat::Csv => render_run_csv(report),
    })
}

fn render_text(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "query {}: {}", r.query, r.status);
    let _ = writeln!(out, "  probability   {:.6}", r.query_probability);
    if let Some(v) = r.objective_value {
        let _ = writeln!(out, "  objective     {v:.6}");
    }
    if !r.assignment.is_empty() {
        let _ = writeln!(out, "  assignment");
        for (atom, v) in &r.assignment {
            let _ = writeln!(out, "    {atom} = {v:.6}");
        }
    }
    if r.query_probs.len() > 1 {
        let _ = writeln!(out, "  query probabilities");
        for (atom, v) in &r.query_probs {
            let _ = writeln!(out, "    {atom} = {v:.6}");
        }
    }
    let _ = writeln!(out, "  equation      {}", r.polynomial);
    let _ = writeln!(
        out,
        "  iterations    {} (kkt {:.2e}, violation {:.2e})",
        r.iterations, r.kkt_residual, r.max_violation
    );
    let s = r.bdd_stats;
    let _ = writeln!(
        out,
        "  diagram       {} nodes, {} paths, {} monomials, {} swaps",
        s.nodes, s.path_terms, s.monomials, s.swaps
    );
    let t = r.timings;
    let _ = write!(
        out,
        "  timings ms    ground {:.2} | compile {:.2} | reorder {:.2} | extract {:.2} | solve {:.2}",
        t.grounding_ms, t.compile_ms, t.reorder_ms, t.extract_ms, t.solve_ms
    );
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_run_csv(r: &RunReport) -> String {
    let assignment = r
        .assignment
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";");
    let objective = r.objective_value.map(|v| v.to_string()).unwrap_or_default();
    let s = r.bdd_stats;
    let t = r.timings;
    format!(
        "program,query,status,objective_value,query_probability,iterations,kkt_residual,\
         max_violation,nodes,path_terms,monomials,swaps,grounding_ms,compile_ms,reorder_ms,\
         extract_ms,solve_ms,assignment\n{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        csv_field(&r.program),
        csv_field(&r.query),
        r.status,
        objective,
        r.query_probability,
        r.iterations,
        r.kkt_residual,
        r.max_violation,
        s.nodes,
        s.path_terms,
        s.monomials,
        s.swaps,
        t.grounding_ms,
        t.compile_ms,
        t.reorder_ms,
        t.extract_ms,
        t.solve_ms,
        csv_field(&assignment),
    )
}

/// Turn an edge list into a program: a seeded half of the edges become
/// optimizable facts, the rest fixed, plus the two reachability rules.
pub fn ingest_edgelist(
    edges: &str,
    opt_fraction: f64,
    seed: u64,
    fixed_prob: f64,
    opt_range: (f64, f64),
) -> Result<String> {
    if !(0.0..=1.0).contains(&opt_fraction) {
        return Err(Error::Problem("opt-fraction must be in [0,1]".into()));
    }
    if !(0.0..=1.0).contains(&fixed_prob) {
        return Err(Error::Problem("fixed-prob must be in [0,1]".into()));
    }
    let (lo, hi) = opt_range;
    if !(0.0 < lo && lo <= hi && hi < 1.0) {
        return Err(Error::Problem(format!(
            "optimizable range [{lo},{hi}] must satisfy 0 < lo <= hi < 1"
        )));
    }

    let mut parsed: Vec<(String, String)> = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (i, raw) in edges.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let &[u, v] = &toks[..] else {
            return Err(Error::Problem(format!(
                "line {}: expected `u v`, found `{line}`",
                i + 1
            )));
        };
        for t in [u, v] {
            if !valid_node(t) {
                return Err(Error::Problem(format!(
                    "line {}: node `{t}` must be a lowercase identifier or an integer",
                    i + 1
                )));
            }
        }
        if !seen.insert((u.to_string(), v.to_string())) {
            return Err(Error::Problem(format!(
                "line {}: duplicate edge `{u} {v}`",
                i + 1
            )));
        }
        parsed.push((u.to_string(), v.to_string()));
    }
    if parsed.is_empty() {
        return Err(Error::Problem("edge file contains no edges".into()));
    }

    let n_opt = (opt_fraction * parsed.len() as f64).round() as usize;
    let mut idx: Vec<usize> = (0..parsed.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let opt_set: HashSet<usize> = idx.into_iter().take(n_opt).collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "% {} edges, {} optimizable (seed {seed})",
        parsed.len(),
        n_opt
    );
    for (i, (u, v)) in parsed.iter().enumerate() {
        let _ = if opt_set.contains(&i) {
            writeln!(out, "optimizable [{lo},{hi}]::edge({u},{v}).")
        } else {
            writeln!(out, "{fixed_prob}::edge({u},{v}).")
        };
    }
    out.push_str("path(X,X).\npath(X,Y) :- path(X,Z), edge(Z,Y).\n");
    Ok(out)
}

fn valid_node(tok: &str) -> bool {
    let mut chars = tok.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        Some(c) if c.is_ascii_digit() => chars.all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

/// Edge list of the complete graph on nodes 1..=n, one `i j` pair per line
/// with i < j.
pub fn complete_graph_edges(n: usize) -> String {
    let mut out = String::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let _ = writeln!(out, "{i} {j}");
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub status: String,
    pub query_probability: f64,
    pub objective_value: Option<f64>,
    pub stats: BddStats,
    pub timings: Timings,
    pub total_ms: f64,
}

/// For each N: build K_N with half the edges optimizable, require
/// `path(1,N) > 0.8`, and minimize the sum of all optimizable probabilities.
pub fn bench_complete(
    min_n: usize,
    max_n: usize,
    seed: u64,
    config: &PipelineConfig,
) -> Result<Vec<BenchRow>> {
    if min_n == 0 || min_n > max_n {
        return Err(Error::Problem("need 1 <= min-n <= max-n".into()));
    }
    (min_n..=max_n)
        .map(|n| bench_instance(n, seed, config))
        .collect()
}

fn bench_instance(n: usize, seed: u64, config: &PipelineConfig) -> Result<BenchRow> {
    let program_text = if n == 1 {
        "path(X,X).\npath(X,Y) :- path(X,Z), edge(Z,Y).\n".to_string()
    } else {
        ingest_edgelist(
            &complete_graph_edges(n),
            0.5,
            seed.wrapping_add(n as u64),
            0.5,
            (0.001, 0.999),
        )?
    };
    let program = Program::parse(&program_text)?;
    let opt_atoms: Vec<String> = program
        .opt_facts
        .iter()
        .map(|f| f.atom.to_string())
        .collect();
    let query = format!("path(1,{n})");
    let inputs = if opt_atoms.is_empty() {
        ProblemInputs {
            query: query.clone(),
            ..Default::default()
        }
    } else {
        ProblemInputs {
            query: query.clone(),
            objective: Some(opt_atoms.join("+")),
            constraints: vec![format!("{query}>0.8")],
            maximize: false,
            strict_eps: 0.0,
        }
    };
    let spec = parse_problem(&program, &inputs)?;
    let t = Instant::now();
    let out = optimize_prob(&program, &spec, config)?;
    let total_ms = t.elapsed().as_secs_f64() * 1e3;
    log::info!(
        "bench n={n}: {} prob {:.4} in {:.1} ms",
        out.status,
        out.query_probability,
        total_ms
    );
    Ok(BenchRow {
        n,
        status: out.status.to_string(),
        query_probability: out.query_probability,
        objective_value: out.objective_value,
        stats: out.stats,
        timings: out.timings,
        total_ms,
    })
}

pub fn render_bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "n,status,query_probability,objective_value,nodes,path_terms,monomials,swaps,\
         grounding_ms,compile_ms,reorder_ms,extract_ms,solve_ms,total_ms\n",
    );
    for r in rows {
        let objective = r.objective_value.map(|v| v.to_string()).unwrap_or_default();
        let s = r.stats;
        let t = r.timings;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.status,
            r.query_probability,
            objective,
            s.nodes,
            s.path_terms,
            s.monomials,
            s.swaps,
            t.grounding_ms,
            t.compile_ms,
            t.reorder_ms,
            t.extract_ms,
            t.solve_ms,
            r.total_ms,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ROUTE_PROGRAM;

    fn run_args(program: PathBuf) -> RunArgs {
        RunArgs {
            program,
            query: None,
            objective: None,
            constraints: vec![],
            maximize: false,
            tol: 1e-5,
            max_iters: 1000,
            multistart: 1,
            seed: 0,
            strict_eps: 0.0,
            format: OutputFormat::Json,
            dot: None,
            timeout_secs: None,
        }
    }

    #[test]
    fn ingest_partitions_deterministically() {
        let text = ingest_edgelist("a b\nb c\n", 0.5, 7, 0.5, (0.001, 0.999)).unwrap();
        let again = ingest_edgelist("a b\nb c\n", 0.5, 7, 0.5, (0.001, 0.999)).unwrap();
        assert_eq!(text, again);

        let program = Program::parse(&text).unwrap();
        assert_eq!(program.opt_facts.len(), 1);
        assert_eq!(program.prob_facts.len(), 1);
        assert_eq!(program.rules.len(), 2);
    }

    #[test]
    fn ingest_complete_graph_counts() {
        let edges = complete_graph_edges(4);
        assert_eq!(edges.lines().count(), 6);
        let program =
            Program::parse(&ingest_edgelist(&edges, 0.5, 1, 0.5, (0.001, 0.999)).unwrap()).unwrap();
        assert_eq!(program.opt_facts.len(), 3);
        assert_eq!(program.prob_facts.len(), 3);
    }

    #[test]
    fn ingest_rejects_bad_input() {
        let err = ingest_edgelist("a\n", 0.5, 0, 0.5, (0.001, 0.999)).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");

        let err = ingest_edgelist("", 0.5, 0, 0.5, (0.001, 0.999)).unwrap_err();
        assert!(err.to_string().contains("no edges"), "{err}");

        let err = ingest_edgelist("Foo b\n", 0.5, 0, 0.5, (0.001, 0.999)).unwrap_err();
        assert!(err.to_string().contains("`Foo`"), "{err}");

        let err = ingest_edgelist("a b\na b\n", 0.5, 0, 0.5, (0.001, 0.999)).unwrap_err();
        assert!(err.to_string().contains("duplicate edge"), "{err}");

        let err = ingest_edgelist("a b\n", 1.5, 0, 0.5, (0.001, 0.999)).unwrap_err();
        assert!(err.to_string().contains("opt-fraction"), "{err}");
    }

    #[test]
    fn report_round_trips_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("route.pl");
        std::fs::write(&path, ROUTE_PROGRAM).unwrap();
        let args = RunArgs {
            query: Some("path(a,e)".into()),
            objective: Some("edge(b,c)+edge(b,d)".into()),
            constraints: vec![
                "path(a,e)>0.6".into(),
                "edge(b,c)-edge(b,d)<0.1".into(),
                "edge(b,d)-edge(b,c)<0.1".into(),
            ],
            ..run_args(path)
        };
        let (report, code) = run_command(&args).unwrap();
        assert_eq!(code, 0);
        assert_eq!(report.schema, 1);

        let json = render_report(&report, OutputFormat::Json).unwrap();
        let parsed: RunReport = serde_json::from_str(&json).unwrap();
        let json_again = render_report(&parsed, OutputFormat::Json).unwrap();
        assert_eq!(json, json_again);

        // floats whose shortest decimal form needs exact (not fast-path)
        // parsing to land on the same bits again
        let mut adversarial = report;
        adversarial.timings.reorder_ms = 0.021790999999999998;
        adversarial.timings.solve_ms = 0.1 + 0.2;
        adversarial.kkt_residual = 2.220446049250313e-16;
        let json = render_report(&adversarial, OutputFormat::Json).unwrap();
        let parsed: RunReport = serde_json::from_str(&json).unwrap();
        let json_again = render_report(&parsed, OutputFormat::Json).unwrap();
        assert_eq!(json, json_again);
    }

    #[test]
    fn directives_drive_the_run_when_flags_are_absent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("directive.pl");
        let source = format!(
            "% polp: query=path(a,e) objective=edge(b,c)+edge(b,d)\n\
             % polp: constraint=path(a,e)>0.999\n{ROUTE_PROGRAM}"
        );
        std::fs::write(&path, source).unwrap();

        // directives ask for an unreachable probability
        let (report, code) = run_command(&run_args(path.clone())).unwrap();
        assert_eq!(code, 2, "status {}", report.status);
        assert_eq!(report.status, "infeasible");

        // any problem flag switches the whole problem over to the flags
        let args = RunArgs {
            query: Some("path(a,e)".into()),
            objective: Some("edge(b,c)+edge(b,d)".into()),
            constraints: vec!["path(a,e)>0.6".into()],
            ..run_args(path.clone())
        };
        let (report, code) = run_command(&args).unwrap();
        assert_eq!(code, 0, "status {}", report.status);

        // problem flags without --query are rejected rather than mixed
        let args = RunArgs {
            objective: Some("edge(b,c)".into()),
            ..run_args(path)
        };
        let err = run_command(&args).unwrap_err();
        assert!(err.to_string().contains("add --query"), "{err}");
    }

    #[test]
    fn dot_export_writes_a_diagram() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("route.pl");
        std::fs::write(&path, ROUTE_PROGRAM).unwrap();
        let dot_path = dir.path().join("query.dot");
        let args = RunArgs {
            query: Some("path(a,e)".into()),
            objective: Some("edge(b,c)+edge(b,d)".into()),
            dot: Some(dot_path.clone()),
            ..run_args(path)
        };
        run_command(&args).unwrap();
        let dot = std::fs::read_to_string(&dot_path).unwrap();
        assert!(dot.starts_with("digraph"), "{dot}");
        assert!(dot.contains("edge(b,c)"), "{dot}");
    }

    #[test]
    fn bench_rows_hit_the_target_probability() {
        let rows = bench_complete(1, 3, 1, &PipelineConfig::default()).unwrap();
        assert_eq!(rows.len(), 3);

        assert_eq!(rows[0].n, 1);
        assert_eq!(rows[0].query_probability, 1.0);
        assert_eq!(rows[0].objective_value, None);
        assert_eq!(rows[0].status, "converged");

        for row in &rows[1..] {
            assert_eq!(row.status, "converged", "n={}", row.n);
            assert!(
                (row.query_probability - 0.8).abs() < 5e-3,
                "n={} prob {}",
                row.n,
                row.query_probability
            );
        }
    }

    #[test]
    fn csv_outputs_quote_commas() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("route.pl");
        std::fs::write(&path, ROUTE_PROGRAM).unwrap();
        let args = RunArgs {
            query: Some("path(a,e)".into()),
            objective: Some("edge(b,c)+edge(b,d)".into()),
            format: OutputFormat::Csv,
            ..run_args(path)
        };
        let (report, _) = run_command(&args).unwrap();
        let csv = render_report(&report, OutputFormat::Csv).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        let row = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 18);
        assert!(row.contains("\"path(a,e)\""), "{row}");

        let text = render_report(&report, OutputFormat::Text).unwrap();
        assert!(text.contains("assignment"), "{text}");

        let bench_csv = render_bench_csv(&[BenchRow {
            n: 1,
            status: "converged".into(),
            query_probability: 1.0,
            objective_value: None,
            stats: BddStats::default(),
            timings: Timings::default(),
            total_ms: 0.5,
        }]);
        assert!(bench_csv.starts_with("n,status"), "{bench_csv}");
        assert!(
            bench_csv
                .lines()
                .nth(1)
                .unwrap()
                .starts_with("1,converged,1,"),
            "{bench_csv}"
        );
    }
}
