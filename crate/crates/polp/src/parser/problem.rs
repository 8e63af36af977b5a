//! The optimization problem attached to a program: a ground query, an
//! objective over optimizable facts, and inequality constraints that may mix
//! optimizable facts with query probabilities.
//!
//! A problem spec can be given on the command line or embedded in the
//! program as directive comments:
//!
//! ```text
//! % polp: query=path(a,e) objective=edge(b,c)+edge(b,d)
//! % polp: constraint=path(a,e)>0.6 constraint=edge(b,c)-edge(b,d)<0.1
//! ```

use std::fmt;

use super::lex::{self, Cursor, Tok};
use super::{parse_atom, Atom, Program};
use crate::error::{Error, Result};
use crate::optimizer::Direction;

/// Arithmetic over constants, optimizable-fact probabilities, and query
/// probabilities. Division is deliberately absent.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Index into [`Program::opt_facts`].
    Opt(usize),
    /// Ground atom whose probability is substituted at compile time.
    Query(Atom),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    /// True if the expression only references optimizable facts and constants.
    pub fn is_opt_only(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Opt(_) => true,
            Expr::Query(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.is_opt_only() && b.is_opt_only()
            }
            Expr::Neg(a) => a.is_opt_only(),
        }
    }

    /// Ground query atoms referenced anywhere in the expression.
    pub fn query_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Expr::Const(_) | Expr::Opt(_) => {}
            Expr::Query(a) => out.push(a),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.query_atoms(out);
                b.query_atoms(out);
            }
            Expr::Neg(a) => a.query_atoms(out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOrigin {
    User,
    /// Added automatically from an optimizable fact's probability range.
    ImplicitBound,
}

#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    pub lhs: Expr,
    pub cmp: Cmp,
    pub rhs: Expr,
    pub origin: ConstraintOrigin,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub query: Atom,
    /// `None` means pure inference: just report the query probability.
    pub objective: Option<Expr>,
    pub direction: Direction,
    /// User constraints first, then one lower and one upper bound per
    /// optimizable fact.
    pub constraints: Vec<ConstraintSpec>,
    /// Slack subtracted when mapping strict `<`/`>` onto `<=`/`>=`.
    pub strict_eps: f64,
}

/// Raw textual inputs for [`parse_problem`].
#[derive(Debug, Clone, Default)]
pub struct ProblemInputs {
    pub query: String,
    pub objective: Option<String>,
    pub constraints: Vec<String>,
    pub maximize: bool,
    pub strict_eps: f64,
}

/// Problem fields collected from `% polp:` directive comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectiveBlock {
    pub query: Option<String>,
    pub objective: Option<String>,
    pub constraints: Vec<String>,
    pub direction: Option<String>,
}

impl DirectiveBlock {
    pub fn is_empty(&self) -> bool {
        self == &DirectiveBlock::default()
    }
}

/// Collect `% polp:` directives from program source. Each directive line
/// holds space-separated `key=value` entries; values may contain spaces and
/// run until the next recognized key.
pub fn extract_directives(src: &str) -> Result<DirectiveBlock> {
    let mut block = DirectiveBlock::default();
    for (lineno, line) in src.lines().enumerate() {
        let Some(raw) = line
            .trim_start()
            .strip_prefix('%')
            .map(|rest| rest.trim_start())
            .and_then(|rest| rest.strip_prefix("polp:"))
        else {
            continue;
        };
        let mut entries: Vec<(String, String)> = Vec::new();
        for word in raw.split_whitespace() {
            let known = ["query", "objective", "constraint", "direction"]
                .iter()
                .find_map(|k| word.strip_prefix(&format!("{k}=")).map(|v| (*k, v)));
            match known {
                Some((key, value)) => entries.push((key.into(), value.into())),
                None => match entries.last_mut() {
                    Some((_, value)) => {
                        value.push(' ');
                        value.push_str(word);
                    }
                    None => {
                        return Err(Error::Problem(format!(
                            "line {}: directive must start with key=value, found `{word}`",
                            lineno + 1
                        )))
                    }
                },
            }
        }
        for (key, value) in entries {
            let slot = match key.as_str() {
                "query" => &mut block.query,
                "objective" => &mut block.objective,
                "direction" => &mut block.direction,
                "constraint" => {
                    block.constraints.push(value);
                    continue;
                }
                _ => unreachable!(),
            };
            if slot.is_some() {
                return Err(Error::Problem(format!(
                    "line {}: duplicate directive key `{key}`",
                    lineno + 1
                )));
            }
            *slot = Some(value);
        }
    }
    if let Some(dir) = &block.direction {
        if dir != "minimize" && dir != "maximize" {
            return Err(Error::Problem(format!(
                "direction must be `minimize` or `maximize`, found `{dir}`"
            )));
        }
    }
    Ok(block)
}

/// Parse a ground atom such as `path(a,e)` and check its predicate is known.
pub fn parse_ground_atom(program: &Program, text: &str) -> Result<Atom> {
    resolve_query_atom(program, text.parse()?)
}

fn resolve_query_atom(program: &Program, atom: Atom) -> Result<Atom> {
    if !atom.is_ground() {
        return Err(Error::Problem(format!(
            "query atom `{atom}` must be ground"
        )));
    }
    let key = (atom.predicate.clone(), atom.arity());
    if !program.known_predicates().contains(&key) {
        return Err(Error::Problem(format!(
            "unknown predicate `{}/{}` in `{atom}`",
            key.0, key.1
        )));
    }
    Ok(atom)
}

/// Resolve textual query/objective/constraints against a program.
///
/// Strict comparisons are kept as written; the solver folds `strict_eps`
/// into their residuals. The result always carries exactly one lower and one
/// upper implicit bound constraint per optimizable fact.
pub fn parse_problem(program: &Program, inputs: &ProblemInputs) -> Result<ProblemSpec> {
    let query = parse_ground_atom(program, &inputs.query)?;

    let objective = match &inputs.objective {
        Some(text) => {
            let expr = parse_objective(program, text)?;
            if !expr.is_opt_only() {
                return Err(Error::Problem(
                    "objective may only reference optimizable facts and constants".into(),
                ));
            }
            Some(expr)
        }
        None => None,
    };
    if objective.is_none() && !inputs.constraints.is_empty() {
        return Err(Error::Problem(
            "constraints were given without an objective; nothing to optimize".into(),
        ));
    }

    let mut constraints = Vec::new();
    for text in &inputs.constraints {
        constraints.push(parse_constraint(program, text)?);
    }
    for (i, f) in program.opt_facts.iter().enumerate() {
        constraints.push(ConstraintSpec {
            lhs: Expr::Opt(i),
            cmp: Cmp::Ge,
            rhs: Expr::Const(f.lower),
            origin: ConstraintOrigin::ImplicitBound,
        });
        constraints.push(ConstraintSpec {
            lhs: Expr::Opt(i),
            cmp: Cmp::Le,
            rhs: Expr::Const(f.upper),
            origin: ConstraintOrigin::ImplicitBound,
        });
    }

    if inputs.strict_eps < 0.0 {
        return Err(Error::Problem("strict_eps must be non-negative".into()));
    }

    Ok(ProblemSpec {
        query,
        objective,
        direction: if inputs.maximize {
            Direction::Maximize
        } else {
            Direction::Minimize
        },
        constraints,
        strict_eps: inputs.strict_eps,
    })
}

/// An objective may be wrapped in brackets (`[expr]`) as a degenerate list.
fn parse_objective(program: &Program, text: &str) -> Result<Expr> {
    let trimmed = text.trim();
    let inner = match trimmed.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        Some(inner) => inner,
        None => trimmed,
    };
    let mut cur = Cursor::new(lex::tokenize(inner)?);
    let expr = parse_expr(program, &mut cur)?;
    if !cur.done() {
        return Err(cur.error("trailing input after objective; exactly one expression is accepted"));
    }
    Ok(expr)
}

fn parse_constraint(program: &Program, text: &str) -> Result<ConstraintSpec> {
    let mut cur = Cursor::new(lex::tokenize(text)?);
    let lhs = parse_expr(program, &mut cur)?;
    let cmp = match cur.next().map(|t| t.tok) {
        Some(Tok::Lt) => Cmp::Lt,
        Some(Tok::Le) => Cmp::Le,
        Some(Tok::Gt) => Cmp::Gt,
        Some(Tok::Ge) => Cmp::Ge,
        _ => {
            return Err(Error::Problem(format!(
                "constraint `{text}` must contain a comparison (<, <=, >, >=)"
            )))
        }
    };
    let rhs = parse_expr(program, &mut cur)?;
    if !cur.done() {
        return Err(cur.error(format!("trailing input after constraint `{text}`")));
    }
    Ok(ConstraintSpec {
        lhs,
        cmp,
        rhs,
        origin: ConstraintOrigin::User,
    })
}

// expr := term (('+'|'-') term)* ; term := unary ('*' unary)* ;
// unary := '-' unary | NUM | atom | '(' expr ')'
fn parse_expr(program: &Program, cur: &mut Cursor) -> Result<Expr> {
    let mut lhs = parse_term(program, cur)?;
    loop {
        match cur.peek() {
            Some(Tok::Plus) => {
                cur.next();
                let rhs = parse_term(program, cur)?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            }
            Some(Tok::Minus) => {
                cur.next();
                let rhs = parse_term(program, cur)?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            }
            _ => return Ok(lhs),
        }
    }
}

fn parse_term(program: &Program, cur: &mut Cursor) -> Result<Expr> {
    let mut lhs = parse_unary(program, cur)?;
    while cur.peek() == Some(&Tok::Star) {
        cur.next();
        let rhs = parse_unary(program, cur)?;
        lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_unary(program: &Program, cur: &mut Cursor) -> Result<Expr> {
    match cur.peek() {
        Some(Tok::Minus) => {
            cur.next();
            Ok(Expr::Neg(Box::new(parse_unary(program, cur)?)))
        }
        Some(Tok::Num(_)) => {
            let Some(Tok::Num(raw)) = cur.next().map(|t| t.tok) else {
                unreachable!()
            };
            raw.parse::<f64>()
                .map(Expr::Const)
                .map_err(|_| cur.error(format!("invalid number `{raw}`")))
        }
        Some(Tok::LParen) => {
            cur.next();
            let e = parse_expr(program, cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(e)
        }
        Some(Tok::Lower(_)) => {
            let atom = parse_atom(cur)?;
            match program.find_opt_fact(&atom) {
                Some(i) => Ok(Expr::Opt(i)),
                None => Ok(Expr::Query(resolve_query_atom(program, atom)?)),
            }
        }
        Some(other) => Err(cur.error(format!(
            "expected an expression, found {}",
            other.describe()
        ))),
        None => Err(cur.error("expected an expression")),
    }
}
