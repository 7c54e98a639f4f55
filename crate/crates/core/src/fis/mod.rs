//! Generic Mamdani inference kernel.
//!
//! Inputs are fuzzified against piecewise-linear terms, rules fire with min
//! conjunction, consequents are clipped with min implication, clipped sets
//! merge by max and the result is reduced to a crisp value by the centroid
//! of the sampled set. Everything here is immutable after construction and
//! free of hydroponic assumptions.

mod definition;
mod inference;
mod mf;
mod rule;
mod variable;

use alloc::string::String;

pub use definition::{Defuzzifier, FisDefinition, InferenceSettings, SNorm, TNorm};
pub use inference::{aggregate, defuzzify_centroid, AggregatedSet, Inference, EMPTY_AREA};
pub use mf::{PiecewiseLinearMF, Shape};
pub use rule::{fire_rule, Clause, Rule};
pub use variable::{Fuzzified, LinguisticVariable, Term, Universe, VarKind};

/// Errors raised while building or evaluating a fuzzy system.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FisError {
    #[error("invalid breakpoints: {0}")]
    InvalidBreakpoints(&'static str),
    #[error("invalid shape: {0}")]
    InvalidShape(&'static str),
    #[error("invalid universe [{lo}, {hi}] with resolution {resolution}")]
    InvalidUniverse { lo: f64, hi: f64, resolution: f64 },
    #[error("variable `{0}` has no terms")]
    EmptyTermSet(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate term `{term}` in variable `{variable}`")]
    DuplicateTerm { variable: String, term: String },
    #[error("term `{term}` of `{variable}` has breakpoints outside the universe")]
    TermOutsideUniverse { variable: String, term: String },
    #[error("definition has no input variables")]
    NoInputs,
    #[error("rule has an empty antecedent")]
    EmptyAntecedent,
    #[error("rule has an empty consequent")]
    EmptyConsequent,
    #[error("variable `{0}` appears twice on one side of a rule")]
    RepeatedVariable(String),
    #[error("rule {rule}: unknown variable `{variable}`")]
    RuleUnknownVariable { rule: usize, variable: String },
    #[error("rule {rule}: unknown term `{term}` for variable `{variable}`")]
    RuleUnknownTerm { rule: usize, variable: String, term: String },
    #[error("rule {rule}: variable `{variable}` is not an {}", expected.as_str())]
    RuleWrongKind { rule: usize, variable: String, expected: VarKind },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown term `{term}` for variable `{variable}`")]
    UnknownTerm { variable: String, term: String },
    #[error("`{0}` is not an input variable")]
    NotAnInput(String),
    #[error("missing input `{0}`")]
    MissingInput(String),
    #[error("input `{0}` given more than once")]
    DuplicateInput(String),
    #[error("expected {expected} inputs, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("non-finite value {value} for input `{variable}`")]
    NonFiniteInput { variable: String, value: f64 },
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
}
