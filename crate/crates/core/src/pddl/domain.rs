// SPDX-License-Identifier: Apache-2.0

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::sexpr::{parse_sexpr, SExpr};
use super::{syntax, PddlError, OBJECT_TYPE};

const SUPPORTED_REQUIREMENTS: [&str; 4] = [
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":durative-actions",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSig {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl PredicateSig {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

/// Predicate applied to variables and/or constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedAtom {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub positive: bool,
    pub atom: LiftedAtom,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("(not ")?;
        }
        write!(f, "({}", self.atom.predicate)?;
        for a in &self.atom.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")?;
        if !self.positive {
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurativeAction {
    pub name: String,
    pub params: Vec<TypedName>,
    pub duration: f64,
    pub at_start_conditions: Vec<Literal>,
    pub at_start_effects: Vec<Literal>,
    pub at_end_effects: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PddlDomain {
    pub name: String,
    pub requirements: BTreeSet<String>,
    /// Declared types. `object` is implicit and not listed.
    pub types: BTreeSet<String>,
    pub predicates: Vec<PredicateSig>,
    pub actions: Vec<DurativeAction>,
}

impl PddlDomain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSig> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&DurativeAction> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.contains(ty)
    }
}

pub(crate) fn atom_of<'a>(e: &'a SExpr, ctx: &str) -> Result<&'a str, PddlError> {
    e.as_atom()
        .ok_or_else(|| syntax(format!("expected a name in {ctx}, found `{e}`")))
}

pub(crate) fn list_of<'a>(e: &'a SExpr, ctx: &str) -> Result<&'a [SExpr], PddlError> {
    e.as_list()
        .ok_or_else(|| syntax(format!("expected a list in {ctx}, found `{e}`")))
}

/// Parses `(define (<kind> <name>) sections...)`, returning the name and
/// the section list.
pub(crate) fn define_header<'a>(root: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = list_of(root, "define")?;
    if items.first().and_then(SExpr::as_atom) != Some("define") {
        return Err(syntax("expected `(define ...)`"));
    }
    let header = items
        .get(1)
        .and_then(SExpr::as_list)
        .ok_or_else(|| syntax(format!("expected `({kind} <name>)` after define")))?;
    match header {
        [SExpr::Atom(k), SExpr::Atom(name)] if k == kind => Ok((name.clone(), &items[2..])),
        _ => Err(syntax(format!("expected `({kind} <name>)` after define"))),
    }
}

/// Expands `a b - t c` into `a:t b:t c:object`.
pub(crate) fn typed_list(items: &[SExpr], ctx: &str) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut iter = items.iter();
    while let Some(item) = iter.next() {
        let name = atom_of(item, ctx)?;
        if name == "-" {
            let ty = iter
                .next()
                .ok_or_else(|| syntax(format!("missing type after `-` in {ctx}")))?;
            let ty = match ty {
                SExpr::Atom(t) => t.clone(),
                SExpr::List(_) => {
                    return Err(syntax(format!("`either` types are not supported ({ctx})")))
                }
            };
            if pending.is_empty() {
                return Err(syntax(format!("`- {ty}` with no names before it in {ctx}")));
            }
            out.extend(pending.drain(..).map(|name| TypedName {
                name,
                ty: ty.clone(),
            }));
        } else {
            pending.push(name.into());
        }
    }
    out.extend(pending.into_iter().map(|name| TypedName {
        name,
        ty: OBJECT_TYPE.into(),
    }));
    Ok(out)
}

fn parse_lifted(e: &SExpr, ctx: &str) -> Result<LiftedAtom, PddlError> {
    let items = list_of(e, ctx)?;
    let (head, args) = items
        .split_first()
        .ok_or_else(|| syntax(format!("empty atom in {ctx}")))?;
    let predicate = atom_of(head, ctx)?;
    let args = args
        .iter()
        .map(|a| {
            let a = atom_of(a, ctx)?;
            Ok(if a.starts_with('?') {
                Term::Var(a.into())
            } else {
                Term::Const(a.into())
            })
        })
        .collect::<Result<_, PddlError>>()?;
    Ok(LiftedAtom {
        predicate: predicate.into(),
        args,
    })
}

fn parse_literal(e: &SExpr, ctx: &str) -> Result<Literal, PddlError> {
    if e.head() == Some("not") {
        let items = list_of(e, ctx)?;
        if items.len() != 2 {
            return Err(syntax(format!("`not` takes one atom in {ctx}")));
        }
        return Ok(Literal {
            positive: false,
            atom: parse_lifted(&items[1], ctx)?,
        });
    }
    Ok(Literal {
        positive: true,
        atom: parse_lifted(e, ctx)?,
    })
}

/// Splits `(and x y)` into `[x, y]`; a bare `x` becomes `[x]`; `()` is empty.
fn conjuncts(e: &SExpr) -> &[SExpr] {
    match e {
        SExpr::List(items) if items.is_empty() => &[],
        SExpr::List(items) if e.head() == Some("and") => &items[1..],
        other => core::slice::from_ref(other),
    }
}

/// `(at start L)` / `(at end L)` → (is_start, literal).
fn timed_literal(e: &SExpr, ctx: &str) -> Result<(bool, Literal), PddlError> {
    let items = list_of(e, ctx)?;
    match items {
        [SExpr::Atom(at), SExpr::Atom(when), lit] if at == "at" => {
            let start = match when.as_str() {
                "start" => true,
                "end" => false,
                other => return Err(syntax(format!("unknown time specifier `at {other}` in {ctx}"))),
            };
            Ok((start, parse_literal(lit, ctx)?))
        }
        [SExpr::Atom(over), SExpr::Atom(all), _] if over == "over" && all == "all" => {
            Err(syntax(format!("`over all` conditions are not supported ({ctx})")))
        }
        _ => Err(syntax(format!("expected `(at start ...)` or `(at end ...)` in {ctx}, found `{e}`"))),
    }
}

fn parse_duration(e: &SExpr, ctx: &str) -> Result<f64, PddlError> {
    match list_of(e, ctx)? {
        [SExpr::Atom(eq), SExpr::Atom(var), SExpr::Atom(value)] if eq == "=" && var == "?duration" => {
            let d: f64 = value
                .parse()
                .map_err(|_| syntax(format!("duration `{value}` is not a number in {ctx}")))?;
            if !(d >= 0.0 && d.is_finite()) {
                return Err(syntax(format!("duration must be a nonnegative number in {ctx}")));
            }
            Ok(d)
        }
        _ => Err(syntax(format!("expected `(= ?duration N)` in {ctx}"))),
    }
}

fn parse_action(items: &[SExpr]) -> Result<DurativeAction, PddlError> {
    let name = items
        .get(1)
        .and_then(SExpr::as_atom)
        .ok_or_else(|| syntax("durative action without a name"))?
        .to_string();
    let ctx = format!("action `{name}`");
    let mut params = Vec::new();
    let mut duration = None;
    let mut at_start_conditions = Vec::new();
    let mut at_start_effects = Vec::new();
    let mut at_end_effects = Vec::new();

    let mut rest = items[2..].iter();
    while let Some(key) = rest.next() {
        let key = atom_of(key, &ctx)?;
        let value = rest
            .next()
            .ok_or_else(|| syntax(format!("`{key}` without a value in {ctx}")))?;
        match key {
            ":parameters" => params = typed_list(list_of(value, &ctx)?, &ctx)?,
            ":duration" => duration = Some(parse_duration(value, &ctx)?),
            ":condition" => {
                for c in conjuncts(value) {
                    match timed_literal(c, &ctx)? {
                        (true, lit) => at_start_conditions.push(lit),
                        (false, _) => {
                            return Err(syntax(format!("`at end` conditions are not supported ({ctx})")))
                        }
                    }
                }
            }
            ":effect" => {
                for e in conjuncts(value) {
                    match timed_literal(e, &ctx)? {
                        (true, lit) => at_start_effects.push(lit),
                        (false, lit) => at_end_effects.push(lit),
                    }
                }
            }
            other => return Err(syntax(format!("unknown key `{other}` in {ctx}"))),
        }
    }
    Ok(DurativeAction {
        name,
        params,
        duration: duration.ok_or_else(|| syntax(format!("missing :duration in {ctx}")))?,
        at_start_conditions,
        at_start_effects,
        at_end_effects,
    })
}

/// Parses and checks a domain definition.
pub fn parse_domain(text: &str) -> Result<PddlDomain, PddlError> {
    let root = parse_sexpr(text)?;
    let (name, sections) = define_header(&root, "domain")?;
    let mut domain = PddlDomain {
        name,
        requirements: BTreeSet::new(),
        types: BTreeSet::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };

    for section in sections {
        let items = list_of(section, "domain body")?;
        let keyword = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| syntax(format!("expected a section keyword, found `{section}`")))?;
        match keyword {
            ":requirements" => {
                for r in &items[1..] {
                    let r = atom_of(r, ":requirements")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(syntax(format!("unsupported requirement `{r}`")));
                    }
                    domain.requirements.insert(r.into());
                }
            }
            ":types" => {
                for t in typed_list(&items[1..], ":types")? {
                    if t.ty != OBJECT_TYPE {
                        return Err(syntax(format!(
                            "type hierarchies are not supported (`{} - {}`)",
                            t.name, t.ty
                        )));
                    }
                    domain.types.insert(t.name);
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let p_items = list_of(p, ":predicates")?;
                    let (head, params) = p_items
                        .split_first()
                        .ok_or_else(|| syntax("empty predicate declaration"))?;
                    let name = atom_of(head, ":predicates")?;
                    if domain.predicate(name).is_some() {
                        return Err(PddlError::Duplicate {
                            what: "predicate",
                            name: name.into(),
                        });
                    }
                    domain.predicates.push(PredicateSig {
                        name: name.into(),
                        params: typed_list(params, ":predicates")?,
                    });
                }
            }
            ":durative-action" => {
                let action = parse_action(items)?;
                if domain.action(&action.name).is_some() {
                    return Err(PddlError::Duplicate {
                        what: "action",
                        name: action.name,
                    });
                }
                domain.actions.push(action);
            }
            other => return Err(syntax(format!("unknown domain section `{other}`"))),
        }
    }
    check_domain(&domain)?;
    Ok(domain)
}

fn check_domain(d: &PddlDomain) -> Result<(), PddlError> {
    for p in &d.predicates {
        for param in &p.params {
            if !d.has_type(&param.ty) {
                return Err(PddlError::Type {
                    ty: param.ty.clone(),
                    used_by: format!("predicate `{}`", p.name),
                });
            }
        }
    }
    for a in &d.actions {
        for param in &a.params {
            if !d.has_type(&param.ty) {
                return Err(PddlError::Type {
                    ty: param.ty.clone(),
                    used_by: format!("action `{}`", a.name),
                });
            }
        }
        let literals = a
            .at_start_conditions
            .iter()
            .chain(&a.at_start_effects)
            .chain(&a.at_end_effects);
        for lit in literals {
            let sig = d
                .predicate(&lit.atom.predicate)
                .ok_or_else(|| PddlError::UnknownPredicate(lit.atom.predicate.clone()))?;
            if sig.arity() != lit.atom.args.len() {
                return Err(PddlError::Arity {
                    predicate: sig.name.clone(),
                    expected: sig.arity(),
                    found: lit.atom.args.len(),
                });
            }
            for arg in &lit.atom.args {
                if let Term::Var(v) = arg {
                    if !a.params.iter().any(|p| &p.name == v) {
                        return Err(PddlError::UnboundVariable {
                            action: a.name.clone(),
                            var: v.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}
