//! Program syntax: probabilistic facts, optimizable facts, definite rules.
//!
//! ```text
//! 0.9::edge(a,b).                      % fact that holds with probability 0.9
//! optimizable [0.3,0.8]::edge(b,c).    % fact whose probability is a decision variable
//! path(X,X).
//! path(X,Y) :- path(X,Z), edge(Z,Y).
//! ```
//!
//! `%` starts a comment. Comment lines of the form `% polp: query=...` carry
//! an embedded problem spec; see [`extract_directives`].

mod lex;
mod problem;

pub use problem::{
    extract_directives, parse_ground_atom, parse_problem, Cmp, ConstraintOrigin, ConstraintSpec,
    DirectiveBlock, Expr, ProblemInputs, ProblemSpec,
};

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use lex::{Cursor, Tok};

/// Probability range assumed for `optimizable::f.` when no `[lo,hi]` is given.
pub const DEFAULT_OPT_RANGE: (f64, f64) = (0.001, 0.999);

/// Source position of a clause, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    Var(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(s) | Term::Var(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    /// Distinct variable names in first-occurrence order.
    pub fn vars(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for t in &self.args {
            if let Term::Var(v) = t {
                if !seen.contains(&v.as_str()) {
                    seen.push(v.as_str());
                }
            }
        }
        seen
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Atom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Atom> {
        let mut cur = Cursor::new(lex::tokenize(s)?);
        let atom = parse_atom(&mut cur)?;
        if !cur.done() {
            return Err(cur.error(format!("trailing input after atom `{atom}`")));
        }
        Ok(atom)
    }
}

/// `p::atom.` — a ground fact that holds with fixed probability `p`.
#[derive(Debug, Clone)]
pub struct ProbFact {
    pub prob: f64,
    pub atom: Atom,
    pub span: Span,
    /// Position among all facts, in declaration order.
    pub decl: usize,
}

/// `optimizable [lo,hi]::atom.` — a ground fact whose probability is a
/// decision variable constrained to `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct OptFact {
    pub lower: f64,
    pub upper: f64,
    pub atom: Atom,
    pub span: Span,
    pub decl: usize,
}

/// Definite rule. An empty body is a deterministic fact schema like
/// `path(X,X).`, instantiated over every constant in the program.
#[derive(Debug, Clone)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub span: Span,
}

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub prob_facts: Vec<ProbFact>,
    pub opt_facts: Vec<OptFact>,
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn parse(text: &str) -> Result<Self> {
        parse_program(text)
    }

    pub fn fact_count(&self) -> usize {
        self.prob_facts.len() + self.opt_facts.len()
    }

    /// Index into `opt_facts` of the optimizable fact with this exact atom.
    pub fn find_opt_fact(&self, atom: &Atom) -> Option<usize> {
        self.opt_facts.iter().position(|f| &f.atom == atom)
    }

    /// Predicates that can appear in queries: fact predicates and rule heads.
    pub fn known_predicates(&self) -> HashSet<(String, usize)> {
        let mut set = HashSet::new();
        for f in &self.prob_facts {
            set.insert((f.atom.predicate.clone(), f.atom.arity()));
        }
        for f in &self.opt_facts {
            set.insert((f.atom.predicate.clone(), f.atom.arity()));
        }
        for r in &self.rules {
            set.insert((r.head.predicate.clone(), r.head.arity()));
        }
        set
    }

    /// Render the program back to its concrete syntax. Parsing the result
    /// yields a structurally identical program.
    pub fn text_form(&self) -> String {
        let mut facts: Vec<(usize, String)> = Vec::with_capacity(self.fact_count());
        for f in &self.prob_facts {
            facts.push((f.decl, format!("{}::{}.", f.prob, f.atom)));
        }
        for f in &self.opt_facts {
            facts.push((
                f.decl,
                format!("optimizable [{},{}]::{}.", f.lower, f.upper, f.atom),
            ));
        }
        facts.sort_by_key(|(decl, _)| *decl);

        let mut out = String::new();
        for (_, line) in facts {
            out.push_str(&line);
            out.push('\n');
        }
        for r in &self.rules {
            out.push_str(&r.head.to_string());
            if !r.body.is_empty() {
                out.push_str(" :- ");
                for (i, b) in r.body.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&b.to_string());
                }
            }
            out.push_str(".\n");
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let clause_err = |span: Span, msg: String| Error::Parse {
            line: span.line,
            col: span.col,
            msg,
        };

        let mut seen_atoms: HashSet<&Atom> = HashSet::new();
        let fact_atoms: Vec<(&Atom, Span)> = self
            .prob_facts
            .iter()
            .map(|f| (&f.atom, f.span))
            .chain(self.opt_facts.iter().map(|f| (&f.atom, f.span)))
            .collect();

        for f in &self.prob_facts {
            if !(0.0..=1.0).contains(&f.prob) {
                return Err(clause_err(
                    f.span,
                    format!("probability {} of `{}` is outside [0,1]", f.prob, f.atom),
                ));
            }
        }
        for f in &self.opt_facts {
            if !(f.lower > 0.0 && f.lower <= f.upper && f.upper < 1.0) {
                return Err(clause_err(
                    f.span,
                    format!(
                        "optimizable range [{},{}] of `{}` must satisfy 0 < lo <= hi < 1",
                        f.lower, f.upper, f.atom
                    ),
                ));
            }
        }
        for (atom, span) in &fact_atoms {
            if !atom.is_ground() {
                return Err(clause_err(*span, format!("fact `{atom}` must be ground")));
            }
            if !seen_atoms.insert(atom) {
                return Err(clause_err(
                    *span,
                    format!("fact `{atom}` is declared twice"),
                ));
            }
        }

        for r in &self.rules {
            for (atom, _) in &fact_atoms {
                if unifies_with_pattern(atom, &r.head) {
                    return Err(clause_err(
                        r.span,
                        format!(
                            "rule head `{}` unifies with the fact `{atom}`; a predicate \
                             cannot be both probabilistic and derived for the same atom",
                            r.head
                        ),
                    ));
                }
            }
            if !r.body.is_empty() {
                let body_vars: HashSet<&str> = r.body.iter().flat_map(|a| a.vars()).collect();
                for v in r.head.vars() {
                    if !body_vars.contains(v) {
                        return Err(clause_err(
                            r.span,
                            format!(
                                "variable `{v}` in the head of `{}` does not occur in the body",
                                r.head
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Does the ground atom match the (possibly non-ground) pattern under some
/// consistent variable binding?
fn unifies_with_pattern(ground: &Atom, pattern: &Atom) -> bool {
    if ground.predicate != pattern.predicate || ground.arity() != pattern.arity() {
        return false;
    }
    let mut binding: Vec<(&str, &str)> = Vec::new();
    for (g, p) in ground.args.iter().zip(&pattern.args) {
        let gc = match g {
            Term::Const(c) => c.as_str(),
            Term::Var(_) => return false,
        };
        match p {
            Term::Const(c) => {
                if c != gc {
                    return false;
                }
            }
            Term::Var(v) => match binding.iter().find(|(name, _)| *name == v) {
                Some((_, bound)) if *bound != gc => return false,
                Some(_) => {}
                None => binding.push((v, gc)),
            },
        }
    }
    true
}

pub fn parse_program(text: &str) -> Result<Program> {
    let mut cur = Cursor::new(lex::tokenize(text)?);
    let mut program = Program::default();
    let mut decl = 0;

    while !cur.done() {
        let span = {
            let p = cur.pos();
            Span {
                line: p.line,
                col: p.col,
            }
        };
        match cur.peek() {
            Some(Tok::Num(_)) => {
                let prob = parse_number(&mut cur)?;
                cur.expect(&Tok::ColonColon)?;
                let atom = parse_atom(&mut cur)?;
                cur.expect(&Tok::Dot)?;
                program.prob_facts.push(ProbFact {
                    prob,
                    atom,
                    span,
                    decl,
                });
                decl += 1;
            }
            Some(Tok::Lower(kw))
                if kw == "optimizable"
                    && matches!(cur.peek2(), Some(Tok::LBracket | Tok::ColonColon)) =>
            {
                cur.next();
                let (lower, upper) = if cur.peek() == Some(&Tok::LBracket) {
                    cur.next();
                    let lo = parse_number(&mut cur)?;
                    cur.expect(&Tok::Comma)?;
                    let hi = parse_number(&mut cur)?;
                    cur.expect(&Tok::RBracket)?;
                    (lo, hi)
                } else {
                    DEFAULT_OPT_RANGE
                };
                cur.expect(&Tok::ColonColon)?;
                let atom = parse_atom(&mut cur)?;
                cur.expect(&Tok::Dot)?;
                program.opt_facts.push(OptFact {
                    lower,
                    upper,
                    atom,
                    span,
                    decl,
                });
                decl += 1;
            }
            Some(Tok::Lower(_)) => {
                let head = parse_atom(&mut cur)?;
                let mut body = Vec::new();
                if cur.peek() == Some(&Tok::ColonDash) {
                    cur.next();
                    loop {
                        body.push(parse_atom(&mut cur)?);
                        if cur.peek() == Some(&Tok::Comma) {
                            cur.next();
                        } else {
                            break;
                        }
                    }
                }
                cur.expect(&Tok::Dot)?;
                program.rules.push(Rule { head, body, span });
            }
            Some(other) => {
                return Err(cur.error(format!(
                    "expected a fact or rule, found {}",
                    other.describe()
                )))
            }
            None => break,
        }
    }

    program.validate()?;
    Ok(program)
}

fn parse_number(cur: &mut Cursor) -> Result<f64> {
    match cur.next() {
        Some(t) => match t.tok {
            Tok::Num(raw) => raw.parse::<f64>().map_err(|_| Error::Parse {
                line: t.pos.line,
                col: t.pos.col,
                msg: format!("invalid number `{raw}`"),
            }),
            other => Err(Error::Parse {
                line: t.pos.line,
                col: t.pos.col,
                msg: format!("expected a number, found {}", other.describe()),
            }),
        },
        None => Err(cur.error("expected a number")),
    }
}

pub(crate) fn parse_atom(cur: &mut Cursor) -> Result<Atom> {
    let predicate = match cur.next() {
        Some(t) => match t.tok {
            Tok::Lower(name) => name,
            other => {
                return Err(Error::Parse {
                    line: t.pos.line,
                    col: t.pos.col,
                    msg: format!("expected a predicate name, found {}", other.describe()),
                })
            }
        },
        None => return Err(cur.error("expected a predicate name")),
    };
    let mut args = Vec::new();
    if cur.peek() == Some(&Tok::LParen) {
        cur.next();
        loop {
            let term = match cur.next() {
                Some(t) => match t.tok {
                    Tok::Lower(c) => Term::Const(c),
                    Tok::Upper(v) => Term::Var(v),
                    Tok::Num(n) if !n.contains('.') => Term::Const(n),
                    Tok::Num(n) => {
                        return Err(Error::Parse {
                            line: t.pos.line,
                            col: t.pos.col,
                            msg: format!("non-integer constant `{n}` in argument position"),
                        })
                    }
                    other => {
                        return Err(Error::Parse {
                            line: t.pos.line,
                            col: t.pos.col,
                            msg: format!("expected a term, found {}", other.describe()),
                        })
                    }
                },
                None => return Err(cur.error("expected a term")),
            };
            args.push(term);
            if cur.peek() == Some(&Tok::Comma) {
                cur.next();
            } else {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    }
    Ok(Atom { predicate, args })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ROUTE_PROGRAM as FIG_PROGRAM;

    fn atom(pred: &str, args: &[&str]) -> Atom {
        Atom {
            predicate: pred.into(),
            args: args
                .iter()
                .map(|a| {
                    if a.chars().next().unwrap().is_ascii_uppercase() {
                        Term::Var(a.to_string())
                    } else {
                        Term::Const(a.to_string())
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn parses_route_program() {
        let p = Program::parse(FIG_PROGRAM).unwrap();
        assert_eq!(p.prob_facts.len(), 3);
        assert_eq!(p.opt_facts.len(), 2);
        assert_eq!(p.rules.len(), 2);
        assert_eq!(p.prob_facts[0].prob, 0.9);
        assert_eq!(p.prob_facts[0].atom, atom("edge", &["a", "b"]));
        assert_eq!(p.opt_facts[0].lower, 0.3);
        assert_eq!(p.opt_facts[0].upper, 0.8);
        assert_eq!(p.opt_facts[1].atom, atom("edge", &["b", "d"]));
        // declaration order interleaves fixed and optimizable facts
        assert_eq!(
            p.prob_facts.iter().map(|f| f.decl).collect::<Vec<_>>(),
            vec![0, 3, 4]
        );
        assert_eq!(
            p.opt_facts.iter().map(|f| f.decl).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert!(p.rules[0].body.is_empty());
        assert_eq!(p.rules[1].body.len(), 2);
    }

    #[test]
    fn optimizable_range_defaults() {
        let p = Program::parse("optimizable::f.").unwrap();
        assert_eq!(p.opt_facts[0].lower, DEFAULT_OPT_RANGE.0);
        assert_eq!(p.opt_facts[0].upper, DEFAULT_OPT_RANGE.1);
    }

    #[test]
    fn integer_constants_allowed() {
        let p = Program::parse("0.5::edge(1,2).\npath(X,X).").unwrap();
        assert_eq!(p.prob_facts[0].atom, atom("edge", &["1", "2"]));
    }

    #[test]
    fn propositional_atoms() {
        let p = Program::parse("0.5::rain.\nwet :- rain.").unwrap();
        assert_eq!(p.prob_facts[0].atom.arity(), 0);
        assert_eq!(p.rules[0].head, atom("wet", &[]));
    }

    #[test]
    fn error_positions_are_reported() {
        let err = Program::parse("0.9:edge(a,b).").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("parser: 1:4"), "{msg}");

        let err = Program::parse("0.9::edge(a,b).\n1.5::f.").unwrap_err();
        assert!(err.to_string().contains("outside [0,1]"), "{err}");
    }

    #[test]
    fn rejects_nonground_and_duplicate_facts() {
        let err = Program::parse("0.9::edge(a,X).").unwrap_err();
        assert!(err.to_string().contains("must be ground"), "{err}");

        let err = Program::parse("0.9::f.\n0.2::f.").unwrap_err();
        assert!(err.to_string().contains("declared twice"), "{err}");

        let err = Program::parse("optimizable [0.2,0.1]::f.").unwrap_err();
        assert!(err.to_string().contains("0 < lo <= hi < 1"), "{err}");
    }

    #[test]
    fn rejects_fact_unifying_with_rule_head() {
        let err = Program::parse("0.9::p(a).\np(X) :- q(X).\n0.1::q(a).").unwrap_err();
        assert!(err.to_string().contains("unifies with the fact"), "{err}");
        // non-unifiable head constant is fine
        Program::parse("0.9::p(a).\np(b) :- q(b).\n0.1::q(b).").unwrap();
    }

    #[test]
    fn rejects_unbound_head_variable() {
        let err = Program::parse("0.5::q(a).\np(X,Y) :- q(X).").unwrap_err();
        assert!(
            err.to_string().contains("does not occur in the body"),
            "{err}"
        );
        // ...but a bodyless schema may use any variables
        Program::parse("0.5::q(a).\np(X,X).").unwrap();
    }

    #[test]
    fn text_form_round_trips() {
        let p = Program::parse(FIG_PROGRAM).unwrap();
        let printed = p.text_form();
        let reparsed = Program::parse(&printed).unwrap();
        assert_eq!(printed, reparsed.text_form());
        assert_eq!(p.prob_facts.len(), reparsed.prob_facts.len());
        assert_eq!(p.opt_facts.len(), reparsed.opt_facts.len());
        assert_eq!(p.rules.len(), reparsed.rules.len());
        for (a, b) in p.prob_facts.iter().zip(&reparsed.prob_facts) {
            assert_eq!(a.prob, b.prob);
            assert_eq!(a.atom, b.atom);
            assert_eq!(a.decl, b.decl);
        }
        for (a, b) in p.opt_facts.iter().zip(&reparsed.opt_facts) {
            assert_eq!((a.lower, a.upper), (b.lower, b.upper));
            assert_eq!(a.atom, b.atom);
        }
        for (a, b) in p.rules.iter().zip(&reparsed.rules) {
            assert_eq!(a.head, b.head);
            assert_eq!(a.body, b.body);
        }
    }

    #[test]
    fn atom_named_optimizable_is_still_a_rule() {
        let p = Program::parse("optimizable(a) :- q(a).\n0.1::q(a).").unwrap();
        assert_eq!(p.rules[0].head.predicate, "optimizable");
    }
}
