//! Probabilistic logic programs with optimizable facts.
//!
//! A program mixes fixed-probability facts (`0.9::edge(a,b).`), optimizable
//! facts whose probability is a bounded decision variable
//! (`optimizable [0.3,0.8]::edge(b,c).`), and definite rules. A ground query
//! compiles to a binary decision diagram with complemented 0-edges; reading
//! the diagram back out turns the query probability into a closed-form
//! multilinear polynomial in the optimizable probabilities, which a small
//! constrained solver then minimizes or maximizes subject to user
//! constraints on probabilities and on the variables themselves.
//!
//! Stage by stage: [`parser`] → [`grounder`] → [`bdd`] → [`symbolic`] →
//! [`optimizer`], glued together by [`pipeline::optimize_prob`] and exposed
//! on the command line through the `polp` binary (see [`cli`]).
//!
//! The `examples/` directory is the guided tour; start with
//! `cargo run --example optimize_route`.

pub mod bdd;
pub mod cli;
pub mod error;
pub mod grounder;
pub mod optimizer;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod symbolic;

pub use error::{Error, Result};
