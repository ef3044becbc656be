// SPDX-License-Identifier: Apache-2.0

//! A small PDDL subset: `:typing`, `:negative-preconditions` and
//! `:durative-actions` with flat types.
//!
//! Durative actions are executed one after another. At-start conditions are
//! checked against the state before the step, then at-start effects apply,
//! then at-end effects. Within one time point deletes apply before adds.

mod domain;
mod plan;
mod problem;
mod search;
mod sexpr;
mod validate;

use alloc::string::String;

pub use domain::{parse_domain, DurativeAction, LiftedAtom, Literal, PddlDomain, PredicateSig, Term, TypedName};
pub use plan::{parse_plan, GroundAction, Plan, PlanSyntaxError, Provenance};
pub use problem::{parse_problem, parse_problem_unchecked, GroundFact, PddlProblem};
pub use search::{brute_force_plan, SearchError, MAX_GROUND_ACTIONS};
pub use sexpr::{parse_sexpr, LexError, SExpr};
pub use validate::{validate_plan, GroundOp, ValidateError, ValidationReport};

/// Implicit root type, accepted everywhere a type is expected.
pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undeclared type `{ty}` used by {used_by}")]
    Type { ty: String, used_by: String },
    #[error("`{predicate}` expects {expected} argument(s), got {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("undeclared predicate `{0}`")]
    UnknownPredicate(String),
    #[error("undeclared object `{0}`")]
    UnknownObject(String),
    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("variable `{var}` in action `{action}` is not a parameter")]
    UnboundVariable { action: String, var: String },
    #[error("problem targets domain `{found}`, not `{expected}`")]
    DomainMismatch { expected: String, found: String },
}

pub(crate) fn syntax(msg: impl Into<String>) -> PddlError {
    PddlError::Syntax(msg.into())
}
