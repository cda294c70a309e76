//! Engine and learner for logic programs with annotated disjunctions.
//!
//! The pipeline: parse a theory, a language bias and mega-examples
//! ([`logic`]); find a query's explanations by SLD derivation
//! ([`semantics`]); turn them into a reduced ordered binary decision
//! diagram and read probabilities and expected counts off it ([`bdd`],
//! [`infer`]); fit annotations by EM ([`em`]); learn whole theories by
//! beam search over clauses plus greedy theory construction ([`search`]);
//! and evaluate with PR/ROC areas under cross-validation ([`eval`]).

pub mod bdd;
pub mod em;
pub mod eval;
pub mod infer;
pub mod logic;
pub mod search;
pub mod semantics;
pub mod symbol;

pub use logic::{
    parse_bias, parse_examples, parse_theory, serialize_theory, Atom, Clause, Literal,
    MegaExample, ModeDeclaration, Pred, PredSet, Substitution, Term, Theory,
};
pub use semantics::SemanticsMode;
pub use symbol::Symbol;
