// SPDX-License-Identifier: Apache-2.0

//! Plan files: one step per line, either `action(a, b)` or `action a b`.
//! A leading `N:` step index, a `(action a b)` wrapper, blank lines and
//! `;` comments are tolerated.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
}

impl GroundAction {
    pub fn new(name: &str, args: &[&str]) -> Self {
        Self {
            name: name.into(),
            args: args.iter().map(|a| (*a).into()).collect(),
        }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Human,
    /// Proposed by a language model; carries the backend id.
    LlmAnswer(String),
    /// Found by [`brute_force_plan`](super::brute_force_plan).
    Search,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
    pub provenance: Provenance,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Renders in the `action(a, b)` form, one step per line.
impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            writeln!(f, "{step}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("plan line {line}: {reason}")]
pub struct PlanSyntaxError {
    pub line: usize,
    pub reason: &'static str,
}

fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-'))
}

fn parse_step(line: &str) -> Result<Option<GroundAction>, &'static str> {
    let mut s = line.split(';').next().unwrap_or_default().trim();
    if s.is_empty() {
        return Ok(None);
    }
    if let Some((idx, rest)) = s.split_once(':') {
        if !idx.is_empty() && idx.trim().chars().all(|c| c.is_ascii_digit()) {
            s = rest.trim();
        }
    }
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        s = inner.trim();
    }

    let (name, args): (&str, Vec<&str>) = match s.find('(') {
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or("missing `)` after arguments")?;
            let args = inner
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .collect();
            (s[..open].trim(), args)
        }
        None => {
            let mut words = s.split_whitespace();
            let name = words.next().ok_or("empty step")?;
            (name, words.collect())
        }
    };
    if !is_name(name) {
        return Err("invalid action name");
    }
    if !args.iter().all(|a| is_name(a)) {
        return Err("invalid object name");
    }
    Ok(Some(GroundAction {
        name: name.into(),
        args: args.into_iter().map(String::from).collect(),
    }))
}

pub fn parse_plan(text: &str, provenance: Provenance) -> Result<Plan, PlanSyntaxError> {
    let mut steps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_step(line) {
            Ok(Some(step)) => steps.push(step),
            Ok(None) => {}
            Err(reason) => return Err(PlanSyntaxError { line: i + 1, reason }),
        }
    }
    Ok(Plan { steps, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn both_forms() {
        let plan = parse_plan(
            "navigation(livingroom, entrance)\n\ncheck_door entrance door_entrance\n",
            Provenance::Human,
        )
        .unwrap();
        assert_eq!(
            plan.steps,
            [
                GroundAction::new("navigation", &["livingroom", "entrance"]),
                GroundAction::new("check_door", &["entrance", "door_entrance"]),
            ]
        );
    }

    #[test]
    fn tolerated_decorations() {
        let plan = parse_plan(
            "0: check_door livingroom door_entrance\n1: (navigation livingroom entrance) ; go\nnoop()\n",
            Provenance::LlmAnswer("gpt-3.5".into()),
        )
        .unwrap();
        assert_eq!(plan.steps[0], GroundAction::new("check_door", &["livingroom", "door_entrance"]));
        assert_eq!(plan.steps[1], GroundAction::new("navigation", &["livingroom", "entrance"]));
        assert_eq!(plan.steps[2], GroundAction::new("noop", &[]));
    }

    #[test]
    fn syntax_errors() {
        let err = parse_plan("a(b, c\n", Provenance::Human).unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_plan("ok x\nbad! y\n", Provenance::Human).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn display_round_trips() {
        let plan = parse_plan("a x y\nb\n", Provenance::Human).unwrap();
        assert_eq!(plan.to_string(), "a(x, y)\nb()\n");
        assert_eq!(parse_plan(&plan.to_string(), Provenance::Human).unwrap(), plan);
    }
}
