// SPDX-License-Identifier: Apache-2.0

//! Human verdicts per (model, log category, question), rendered as a
//! Markdown grid with one column per category and model.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::LogCategory;
use crate::interrogate::find_question;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
    #[default]
    NA,
}

impl Verdict {
    /// Table cell text. NA renders as an en dash.
    pub fn cell(self) -> &'static str {
        match self {
            Self::Yes => "Yes",
            Self::No => "No",
            Self::NA => "–",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Yes => "Yes",
            Self::No => "No",
            Self::NA => "NA",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown verdict `{0}` (expected yes, no or na)")]
pub struct UnknownVerdict(pub String);

impl FromStr for Verdict {
    type Err = UnknownVerdict;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(Self::Yes),
            "no" | "n" => Ok(Self::No),
            "na" | "n/a" | "-" | "–" => Ok(Self::NA),
            _ => Err(UnknownVerdict(s.into())),
        }
    }
}

/// Categories that can be assessed. `Other` segments are never assessed.
pub const ASSESSED_CATEGORIES: [LogCategory; 3] = [LogCategory::StartUp, LogCategory::WarningError, LogCategory::Pddl];

pub const DEFAULT_MODELS: [&str; 3] = ["GPT 4.0", "GPT 3.5", "Alpaca"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub model: String,
    pub category: LogCategory,
    /// Canonical catalog id, e.g. `Q2`.
    pub question: String,
}

impl CellKey {
    pub fn new(model: &str, category: LogCategory, question: &str) -> Self {
        Self {
            model: model.into(),
            category,
            question: question.into(),
        }
    }
}

/// An overwritten verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub verdict: Verdict,
    pub assessor: String,
    pub answer_ref: Option<u64>,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub verdict: Verdict,
    pub assessor: String,
    pub answer_ref: Option<u64>,
    pub note: String,
    pub audit: Vec<AuditEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UnknownKey {
    #[error("unknown model `{0}`")]
    Model(String),
    #[error("category {0} is not assessed")]
    Category(LogCategory),
    #[error("unknown question `{0}`")]
    Question(String),
}

/// Verdict grid. Cells that were never set read as [`Verdict::NA`].
///
/// JSON form: `{models: [...], cells: [{model, category, question, verdict,
/// assessor, answer_ref, note, audit}]}`. `models` may be omitted, in which
/// case the default three models are assumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct AssessmentMatrix {
    models: Vec<String>,
    cells: BTreeMap<CellKey, Cell>,
}

impl Default for AssessmentMatrix {
    fn default() -> Self {
        Self::new(DEFAULT_MODELS.iter().map(|m| m.to_string()).collect())
    }
}

impl AssessmentMatrix {
    pub fn new(models: Vec<String>) -> Self {
        Self {
            models,
            cells: BTreeMap::new(),
        }
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    /// Validates and canonicalizes a key (`Q.2` becomes `Q2`).
    pub fn key(&self, model: &str, category: LogCategory, question: &str) -> Result<CellKey, UnknownKey> {
        if !self.models.iter().any(|m| m == model) {
            return Err(UnknownKey::Model(model.into()));
        }
        if !ASSESSED_CATEGORIES.contains(&category) {
            return Err(UnknownKey::Category(category));
        }
        let q = find_question(question).ok_or_else(|| UnknownKey::Question(question.into()))?;
        Ok(CellKey::new(model, category, q.id))
    }

    pub fn cell(&self, key: &CellKey) -> Option<&Cell> {
        self.cells.get(key)
    }

    pub fn verdict(&self, key: &CellKey) -> Verdict {
        self.cells.get(key).map(|c| c.verdict).unwrap_or_default()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &Cell)> {
        self.cells.iter()
    }

    /// Upserts a cell. An existing value moves into the cell's audit list.
    pub fn record_verdict(
        &mut self,
        key: CellKey,
        verdict: Verdict,
        assessor: &str,
        answer_ref: Option<u64>,
    ) -> Result<(), UnknownKey> {
        let key = self.key(&key.model, key.category, &key.question)?;
        let cell = self.cells.entry(key).or_insert_with(|| Cell {
            verdict: Verdict::NA,
            ..Cell::default()
        });
        if !cell.assessor.is_empty() || cell.verdict != Verdict::NA || !cell.audit.is_empty() {
            let prev = AuditEntry {
                verdict: cell.verdict,
                assessor: core::mem::take(&mut cell.assessor),
                answer_ref: cell.answer_ref,
                note: core::mem::take(&mut cell.note),
            };
            cell.audit.push(prev);
        }
        cell.verdict = verdict;
        cell.assessor = assessor.into();
        cell.answer_ref = answer_ref;
        Ok(())
    }

    /// Sets the free-text note of an existing or new cell.
    pub fn set_note(&mut self, key: &CellKey, note: &str) -> Result<(), UnknownKey> {
        let key = self.key(&key.model, key.category, &key.question)?;
        self.cells.entry(key).or_default().note = note.into();
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CellRow {
    model: String,
    category: LogCategory,
    question: String,
    verdict: Verdict,
    #[serde(default)]
    assessor: String,
    #[serde(default)]
    answer_ref: Option<u64>,
    #[serde(default)]
    note: String,
    #[serde(default)]
    audit: Vec<AuditEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    models: Option<Vec<String>>,
    cells: Vec<CellRow>,
}

impl From<AssessmentMatrix> for MatrixFile {
    fn from(m: AssessmentMatrix) -> Self {
        Self {
            models: Some(m.models),
            cells: m
                .cells
                .into_iter()
                .map(|(k, c)| CellRow {
                    model: k.model,
                    category: k.category,
                    question: k.question,
                    verdict: c.verdict,
                    assessor: c.assessor,
                    answer_ref: c.answer_ref,
                    note: c.note,
                    audit: c.audit,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixFileError {
    #[error(transparent)]
    Key(#[from] UnknownKey),
    #[error("duplicate cell {model} / {category} / {question}")]
    Duplicate {
        model: String,
        category: LogCategory,
        question: String,
    },
}

impl TryFrom<MatrixFile> for AssessmentMatrix {
    type Error = MatrixFileError;

    fn try_from(file: MatrixFile) -> Result<Self, Self::Error> {
        let mut m = match file.models {
            Some(models) => Self::new(models),
            None => Self::default(),
        };
        for row in file.cells {
            let key = m.key(&row.model, row.category, &row.question)?;
            if m.cells.contains_key(&key) {
                return Err(MatrixFileError::Duplicate {
                    model: key.model,
                    category: key.category,
                    question: key.question,
                });
            }
            m.cells.insert(
                key,
                Cell {
                    verdict: row.verdict,
                    assessor: row.assessor,
                    answer_ref: row.answer_ref,
                    note: row.note,
                    audit: row.audit,
                },
            );
        }
        Ok(m)
    }
}

fn category_heading(c: LogCategory) -> &'static str {
    match c {
        LogCategory::StartUp => "StartUp logs",
        LogCategory::WarningError => "Warning logs",
        LogCategory::Pddl => "PDDL logs",
        LogCategory::Other => "Other logs",
    }
}

/// Markdown table: one row per question, one column per (category, model)
/// with categories outermost. Question ids are rendered as `Q.n`.
pub fn render_table(m: &AssessmentMatrix, models: &[String], questions: &[String]) -> String {
    let mut out = String::from("| Question |");
    for cat in ASSESSED_CATEGORIES {
        for model in models {
            out.push_str(&alloc::format!(" {}: {} |", category_heading(cat), model));
        }
    }
    out.push_str("\n|---|");
    for _ in 0..ASSESSED_CATEGORIES.len() * models.len() {
        out.push_str("---|");
    }
    out.push('\n');
    for q in questions {
        let (id, label) = match find_question(q) {
            Some(found) => (found.id.to_string(), found.label()),
            None => (q.clone(), q.clone()),
        };
        out.push_str(&alloc::format!("| {label} |"));
        for cat in ASSESSED_CATEGORIES {
            for model in models {
                let v = m.verdict(&CellKey::new(model, cat, &id));
                out.push_str(&alloc::format!(" {} |", v.cell()));
            }
        }
        out.push('\n');
    }
    out
}
