// SPDX-License-Identifier: Apache-2.0

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::domain::{atom_of, define_header, list_of, typed_list, PddlDomain, TypedName};
use super::sexpr::{parse_sexpr, SExpr};
use super::{syntax, PddlError};

/// A predicate applied to object names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundFact {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundFact {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.iter().map(|a| (*a).into()).collect(),
        }
    }
}

impl fmt::Display for GroundFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PddlProblem {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: BTreeSet<GroundFact>,
    /// Conjunction of positive facts.
    pub goal: Vec<GroundFact>,
}

impl PddlProblem {
    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.ty.as_str())
    }

    /// Checks the problem against its domain: name, object types, and the
    /// predicates and arities used by init and goal facts.
    pub fn check_against(&self, domain: &PddlDomain) -> Result<(), PddlError> {
        if self.domain_name != domain.name {
            return Err(PddlError::DomainMismatch {
                expected: domain.name.clone(),
                found: self.domain_name.clone(),
            });
        }
        for o in &self.objects {
            if !domain.has_type(&o.ty) {
                return Err(PddlError::Type {
                    ty: o.ty.clone(),
                    used_by: format!("object `{}`", o.name),
                });
            }
        }
        for fact in self.init.iter().chain(&self.goal) {
            let sig = domain
                .predicate(&fact.predicate)
                .ok_or_else(|| PddlError::UnknownPredicate(fact.predicate.clone()))?;
            if sig.arity() != fact.args.len() {
                return Err(PddlError::Arity {
                    predicate: fact.predicate.clone(),
                    expected: sig.arity(),
                    found: fact.args.len(),
                });
            }
            for arg in &fact.args {
                if self.object_type(arg).is_none() {
                    return Err(PddlError::UnknownObject(arg.clone()));
                }
            }
        }
        Ok(())
    }
}

fn ground_fact(e: &SExpr, ctx: &str) -> Result<GroundFact, PddlError> {
    let items = list_of(e, ctx)?;
    let (head, args) = items
        .split_first()
        .ok_or_else(|| syntax(format!("empty fact in {ctx}")))?;
    let predicate = atom_of(head, ctx)?;
    if predicate == "not" {
        return Err(syntax(format!("negative facts are not supported in {ctx}")));
    }
    if predicate == "=" {
        return Err(syntax(format!("numeric fluents are not supported in {ctx}")));
    }
    let args = args
        .iter()
        .map(|a| atom_of(a, ctx).map(String::from))
        .collect::<Result<_, _>>()?;
    Ok(GroundFact {
        predicate: predicate.into(),
        args,
    })
}

/// Parses a problem without consulting a domain.
pub fn parse_problem_unchecked(text: &str) -> Result<PddlProblem, PddlError> {
    let root = parse_sexpr(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut domain_name = None;
    let mut objects = Vec::new();
    let mut init = BTreeSet::new();
    let mut goal = None;

    for section in sections {
        let items = list_of(section, "problem body")?;
        let keyword = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| syntax(format!("expected a section keyword, found `{section}`")))?;
        let body = &items[1..];
        match keyword {
            ":domain" => match body {
                [SExpr::Atom(d)] => domain_name = Some(d.clone()),
                _ => return Err(syntax("expected `(:domain <name>)`")),
            },
            ":objects" => {
                objects = typed_list(body, ":objects")?;
                let mut seen = BTreeSet::new();
                for o in &objects {
                    if !seen.insert(o.name.as_str()) {
                        return Err(PddlError::Duplicate {
                            what: "object",
                            name: o.name.clone(),
                        });
                    }
                }
            }
            ":init" => {
                for f in body {
                    init.insert(ground_fact(f, ":init")?);
                }
            }
            ":goal" => {
                let [g] = body else {
                    return Err(syntax("expected exactly one goal formula"));
                };
                let facts = match g.head() {
                    Some("and") => &g.as_list().expect("has head")[1..],
                    _ => core::slice::from_ref(g),
                };
                goal = Some(
                    facts
                        .iter()
                        .map(|f| ground_fact(f, ":goal"))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            other => return Err(syntax(format!("unknown problem section `{other}`"))),
        }
    }

    Ok(PddlProblem {
        name,
        domain_name: domain_name.ok_or_else(|| syntax("missing (:domain ...)"))?,
        objects,
        init,
        goal: goal.ok_or_else(|| syntax("missing (:goal ...)"))?,
    })
}

/// Parses a problem and checks it against `domain`.
pub fn parse_problem(text: &str, domain: &PddlDomain) -> Result<PddlProblem, PddlError> {
    let problem = parse_problem_unchecked(text)?;
    problem.check_against(domain)?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parse_domain;

    const DOMAIN: &str = "(define (domain d) (:types door wp)
        (:predicates (door_checked ?d - door) (at ?w - wp)))";

    #[test]
    fn empty_init() {
        let p = parse_problem_unchecked(
            "(define (problem p) (:domain d) (:objects a - wp) (:init) (:goal (at a)))",
        )
        .unwrap();
        assert!(p.init.is_empty());
        assert_eq!(p.goal, [GroundFact::new("at", &["a"])]);
    }

    #[test]
    fn missing_goal_argument() {
        let d = parse_domain(DOMAIN).unwrap();
        let err = parse_problem(
            "(define (problem p) (:domain d) (:objects x - door) (:init) (:goal (and (door_checked))))",
            &d,
        )
        .unwrap_err();
        assert_eq!(
            err,
            PddlError::Arity {
                predicate: "door_checked".into(),
                expected: 1,
                found: 0
            }
        );
    }

    #[test]
    fn link_errors() {
        let d = parse_domain(DOMAIN).unwrap();
        let wrong_domain =
            parse_problem("(define (problem p) (:domain other) (:init) (:goal (and)))", &d);
        assert!(matches!(wrong_domain, Err(PddlError::DomainMismatch { .. })));
        let bad_type = parse_problem(
            "(define (problem p) (:domain d) (:objects x - robot) (:init) (:goal (and)))",
            &d,
        );
        assert!(matches!(bad_type, Err(PddlError::Type { .. })));
        let unknown_obj = parse_problem(
            "(define (problem p) (:domain d) (:objects) (:init (at nowhere)) (:goal (and)))",
            &d,
        );
        assert_eq!(unknown_obj, Err(PddlError::UnknownObject("nowhere".into())));
    }

    #[test]
    fn negative_goal_rejected() {
        let err = parse_problem_unchecked(
            "(define (problem p) (:domain d) (:init) (:goal (not (at a))))",
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Syntax(_)));
    }

    #[test]
    fn fact_display() {
        assert_eq!(
            GroundFact::new("door_at", &["door_entrance", "livingroom"]).to_string(),
            "(door_at door_entrance livingroom)"
        );
    }
}
