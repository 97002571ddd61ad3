//! Proof-script visualisation: replays Coq-style proofs and typesets each
//! step next to the resulting proof state as a LaTeX table.
//!
//! The pipeline runs [`script::tokenize_sentences`], then
//! [`forest::build_proof_trees`], then [`forest::linearize`] and finally
//! [`latex::render_rows`]. [`trace`] supplies proof states from JSON instead
//! of the built-in kernel, and [`cli`] is the `psv-forge` binary.

pub mod analyze;
pub mod cli;
pub mod focus;
pub mod forest;
pub mod formula;
pub mod latex;
pub mod script;
pub mod tactic;
pub mod trace;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/sentences.md")]
    struct Sentences;
    #[doc = include_str!("../../../book/src/formulas.md")]
    struct Formulas;
    #[doc = include_str!("../../../book/src/tactics.md")]
    struct Tactics;
    #[doc = include_str!("../../../book/src/focusing.md")]
    struct Focusing;
    #[doc = include_str!("../../../book/src/trees.md")]
    struct Trees;
    #[doc = include_str!("../../../book/src/condensation.md")]
    struct Condensation;
    #[doc = include_str!("../../../book/src/latex.md")]
    struct Latex;
    #[doc = include_str!("../../../book/src/traces.md")]
    struct Traces;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
