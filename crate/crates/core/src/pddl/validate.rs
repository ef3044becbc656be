// SPDX-License-Identifier: Apache-2.0

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::domain::{DurativeAction, Literal, PddlDomain, Term};
use super::plan::{GroundAction, Plan};
use super::problem::{GroundFact, PddlProblem};
use super::OBJECT_TYPE;

pub type State = BTreeSet<GroundFact>;

/// A fully instantiated durative action.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundOp {
    pub action: GroundAction,
    pub duration: f64,
    /// `(fact, must_hold)` in declaration order.
    pub conditions: Vec<(GroundFact, bool)>,
    pub start_del: Vec<GroundFact>,
    pub start_add: Vec<GroundFact>,
    pub end_del: Vec<GroundFact>,
    pub end_add: Vec<GroundFact>,
}

fn ground_literal(lit: &Literal, binding: &BTreeMap<&str, &str>) -> GroundFact {
    GroundFact {
        predicate: lit.atom.predicate.clone(),
        args: lit
            .atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding[v.as_str()].to_string(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

fn render_condition(fact: &GroundFact, must_hold: bool) -> String {
    if must_hold {
        fact.to_string()
    } else {
        alloc::format!("(not {fact})")
    }
}

impl GroundOp {
    /// Binds `action`'s parameters to `args` positionally. Arity must match.
    pub fn instantiate(action: &DurativeAction, args: &[String]) -> Self {
        assert_eq!(action.params.len(), args.len(), "arity checked by caller");
        let binding: BTreeMap<&str, &str> = action
            .params
            .iter()
            .zip(args)
            .map(|(p, a)| (p.name.as_str(), a.as_str()))
            .collect();
        let split = |lits: &[Literal]| {
            let mut add = Vec::new();
            let mut del = Vec::new();
            for lit in lits {
                let fact = ground_literal(lit, &binding);
                if lit.positive {
                    add.push(fact);
                } else {
                    del.push(fact);
                }
            }
            (del, add)
        };
        let (start_del, start_add) = split(&action.at_start_effects);
        let (end_del, end_add) = split(&action.at_end_effects);
        Self {
            action: GroundAction {
                name: action.name.clone(),
                args: args.to_vec(),
            },
            duration: action.duration,
            conditions: action
                .at_start_conditions
                .iter()
                .map(|l| (ground_literal(l, &binding), l.positive))
                .collect(),
            start_del,
            start_add,
            end_del,
            end_add,
        }
    }

    /// First condition that does not hold in `state`, rendered as a literal.
    pub fn unmet_condition(&self, state: &State) -> Option<String> {
        self.conditions
            .iter()
            .find(|(fact, must_hold)| state.contains(fact) != *must_hold)
            .map(|(fact, must_hold)| render_condition(fact, *must_hold))
    }

    /// Applies effects: at-start deletes, at-start adds, at-end deletes,
    /// at-end adds.
    pub fn apply(&self, state: &mut State) {
        for f in &self.start_del {
            state.remove(f);
        }
        state.extend(self.start_add.iter().cloned());
        for f in &self.end_del {
            state.remove(f);
        }
        state.extend(self.end_add.iter().cloned());
    }
}

/// Outcome of plan validation, serialized as
/// `{valid, makespan, failing_step, unmet_literal}`.
///
/// A failure with `failing_step: None` is a goal failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub makespan: Option<f64>,
    pub failing_step: Option<usize>,
    pub unmet_literal: Option<String>,
}

impl ValidationReport {
    fn valid(makespan: f64) -> Self {
        Self {
            valid: true,
            makespan: Some(makespan),
            failing_step: None,
            unmet_literal: None,
        }
    }

    fn invalid(failing_step: Option<usize>, unmet: String) -> Self {
        Self {
            valid: false,
            makespan: None,
            failing_step,
            unmet_literal: Some(unmet),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidateError {
    #[error("step {step}: unknown action `{name}`")]
    UnknownAction { step: usize, name: String },
    #[error("step {step}: unknown object `{name}`")]
    UnknownObject { step: usize, name: String },
    #[error("step {step}: `{action}` takes {expected} argument(s), got {found}")]
    Arity {
        step: usize,
        action: String,
        expected: usize,
        found: usize,
    },
    #[error("step {step}: `{object}` is a {found}, `{action}` expects a {expected}")]
    TypeMismatch {
        step: usize,
        action: String,
        object: String,
        expected: String,
        found: String,
    },
}

pub(crate) fn resolve_step(
    domain: &PddlDomain,
    problem: &PddlProblem,
    index: usize,
    step: &GroundAction,
) -> Result<GroundOp, ValidateError> {
    let action = domain
        .action(&step.name)
        .ok_or_else(|| ValidateError::UnknownAction {
            step: index,
            name: step.name.clone(),
        })?;
    if action.params.len() != step.args.len() {
        return Err(ValidateError::Arity {
            step: index,
            action: step.name.clone(),
            expected: action.params.len(),
            found: step.args.len(),
        });
    }
    for (param, arg) in action.params.iter().zip(&step.args) {
        let ty = problem
            .object_type(arg)
            .ok_or_else(|| ValidateError::UnknownObject {
                step: index,
                name: arg.clone(),
            })?;
        if param.ty != OBJECT_TYPE && param.ty != ty {
            return Err(ValidateError::TypeMismatch {
                step: index,
                action: step.name.clone(),
                object: arg.clone(),
                expected: param.ty.clone(),
                found: ty.into(),
            });
        }
    }
    Ok(GroundOp::instantiate(action, &step.args))
}

/// Executes `plan` sequentially from the problem's initial state.
///
/// Returns `Err` only for plans that cannot be interpreted at all (unknown
/// names, wrong arity, wrong object types). A plan that is well-formed but
/// inapplicable or misses the goal yields an invalid report.
pub fn validate_plan(
    domain: &PddlDomain,
    problem: &PddlProblem,
    plan: &Plan,
) -> Result<ValidationReport, ValidateError> {
    let ops = plan
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| resolve_step(domain, problem, i, s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut state = problem.init.clone();
    let mut makespan = 0.0;
    for (i, op) in ops.iter().enumerate() {
        if let Some(unmet) = op.unmet_condition(&state) {
            return Ok(ValidationReport::invalid(Some(i), unmet));
        }
        op.apply(&mut state);
        makespan += op.duration;
    }
    if let Some(missing) = problem.goal.iter().find(|g| !state.contains(*g)) {
        return Ok(ValidationReport::invalid(None, missing.to_string()));
    }
    Ok(ValidationReport::valid(makespan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_plan, parse_problem, Provenance};

    const DOMAIN: &str = "(define (domain lamp)
        (:requirements :typing :negative-preconditions :durative-actions)
        (:types lamp)
        (:predicates (on ?l - lamp) (broken ?l - lamp))
        (:durative-action switch_on :parameters (?l - lamp) :duration (= ?duration 2)
          :condition (and (at start (not (on ?l))) (at start (not (broken ?l))))
          :effect (at end (on ?l)))
        (:durative-action switch_off :parameters (?l - lamp) :duration (= ?duration 1.5)
          :condition (at start (on ?l))
          :effect (at start (not (on ?l)))))";

    fn run(plan: &str, init: &str) -> Result<ValidationReport, ValidateError> {
        let d = parse_domain(DOMAIN).unwrap();
        let p = parse_problem(
            &alloc::format!(
                "(define (problem p) (:domain lamp) (:objects a b - lamp) (:init {init}) (:goal (on a)))"
            ),
            &d,
        )
        .unwrap();
        validate_plan(&d, &p, &parse_plan(plan, Provenance::Human).unwrap())
    }

    #[test]
    fn negative_precondition() {
        let r = run("switch_on a", "").unwrap();
        assert!(r.valid);
        assert_eq!(r.makespan, Some(2.0));
        let r = run("switch_on a", "(broken a)").unwrap();
        assert_eq!(r.failing_step, Some(0));
        assert_eq!(r.unmet_literal.as_deref(), Some("(not (broken a))"));
    }

    #[test]
    fn delete_then_readd() {
        let r = run("switch_off a\nswitch_on a", "(on a)").unwrap();
        assert!(r.valid);
        assert_eq!(r.makespan, Some(3.5));
    }

    #[test]
    fn goal_failure_has_no_step() {
        let r = run("switch_on b", "").unwrap();
        assert!(!r.valid);
        assert_eq!(r.failing_step, None);
        assert_eq!(r.unmet_literal.as_deref(), Some("(on a)"));
        assert_eq!(r.makespan, None);
    }

    #[test]
    fn uninterpretable_steps() {
        assert!(matches!(run("fly a", ""), Err(ValidateError::UnknownAction { step: 0, .. })));
        assert!(matches!(run("switch_on z", ""), Err(ValidateError::UnknownObject { .. })));
        assert!(matches!(run("switch_on a b", ""), Err(ValidateError::Arity { expected: 1, found: 2, .. })));
    }
}
