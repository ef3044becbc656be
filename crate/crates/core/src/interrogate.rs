// SPDX-License-Identifier: Apache-2.0

//! Question catalog, audiences, and single-shot prompt rendering.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chunk::{ByteRatio, Chunk, TokenBudget, TokenEstimator};
use crate::classify::LogCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActorRole {
    #[serde(rename = "DEV")]
    Developer,
    #[serde(rename = "FU")]
    FinalUser,
    #[serde(rename = "PMR")]
    PolicyMaker,
}

impl ActorRole {
    pub const ALL: [ActorRole; 3] = [Self::Developer, Self::FinalUser, Self::PolicyMaker];

    pub fn code(self) -> &'static str {
        match self {
            Self::Developer => "DEV",
            Self::FinalUser => "FU",
            Self::PolicyMaker => "PMR",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Self::Developer => "Developers",
            Self::FinalUser => "Final users",
            Self::PolicyMaker => "Policy makers and regulators",
        }
    }
}

impl fmt::Display for ActorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown actor `{0}` (expected DEV, FU or PMR)")]
pub struct UnknownActor(pub String);

impl FromStr for ActorRole {
    type Err = UnknownActor;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DEV" => Ok(Self::Developer),
            "FU" => Ok(Self::FinalUser),
            "PMR" => Ok(Self::PolicyMaker),
            _ => Err(UnknownActor(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuestionSet {
    /// The six general explainable-AI questions.
    Xai,
    /// Questions for explainable autonomous robots.
    Sakai,
    /// Questions derived for the trustworthy-flow actors.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Question {
    pub id: &'static str,
    pub set: QuestionSet,
    pub text: &'static str,
    /// Audience tags. Empty for untagged questions.
    pub actors: &'static [ActorRole],
}

impl Question {
    /// Untagged questions are open to every role.
    pub fn permits(&self, actor: ActorRole) -> bool {
        self.actors.is_empty() || self.actors.contains(&actor)
    }

    /// Table label, e.g. `Q.2` for `Q2`.
    pub fn label(&self) -> String {
        match self.id.strip_prefix('Q') {
            Some(n) if self.set == QuestionSet::Derived => alloc::format!("Q.{n}"),
            _ => self.id.into(),
        }
    }
}

use ActorRole::{Developer as DEV, FinalUser as FU, PolicyMaker as PMR};

static CATALOG: [Question; 17] = [
    Question { id: "XAI1", set: QuestionSet::Xai, text: "Why did you do that?", actors: &[] },
    Question { id: "XAI2", set: QuestionSet::Xai, text: "Why not something else?", actors: &[] },
    Question { id: "XAI3", set: QuestionSet::Xai, text: "When do you succeed?", actors: &[] },
    Question { id: "XAI4", set: QuestionSet::Xai, text: "When do you fail?", actors: &[] },
    Question { id: "XAI5", set: QuestionSet::Xai, text: "When can I trust you?", actors: &[] },
    Question { id: "XAI6", set: QuestionSet::Xai, text: "How do I correct an error?", actors: &[] },
    Question { id: "SAK1", set: QuestionSet::Sakai, text: "What are you doing now?", actors: &[] },
    Question { id: "SAK2", set: QuestionSet::Sakai, text: "How can this be achieved?", actors: &[] },
    Question { id: "SAK3", set: QuestionSet::Sakai, text: "Why are you taking this action?", actors: &[] },
    Question {
        id: "Q1",
        set: QuestionSet::Derived,
        text: "What is the purpose of the robot, and what are the intended outcomes of its actions?",
        actors: &[DEV, FU],
    },
    Question {
        id: "Q2",
        set: QuestionSet::Derived,
        text: "How does the robot make decisions, and why and what factors does it take into account?",
        actors: &[DEV, FU],
    },
    Question {
        id: "Q3",
        set: QuestionSet::Derived,
        text: "What data sources does the robot use to make decisions, and how is this data collected and processed?",
        actors: &[DEV, FU],
    },
    Question {
        id: "Q4",
        set: QuestionSet::Derived,
        text: "How does the robot's behavior change over time, and what factors influence this change?",
        actors: &[DEV, FU],
    },
    Question {
        id: "Q5",
        set: QuestionSet::Derived,
        text: "How can the robot's behavior be monitored and evaluated over time, and what metrics should be used?",
        actors: &[DEV, FU],
    },
    Question {
        id: "Q6",
        set: QuestionSet::Derived,
        text: "How can the robot's behavior be modified or improved in response to feedback or changing circumstances?",
        actors: &[DEV, FU],
    },
    Question {
        id: "Q7",
        set: QuestionSet::Derived,
        text: "What are the ethical implications of the robot's design and current behavior, and how can these be addressed?",
        actors: &[PMR],
    },
    Question {
        id: "Q8",
        set: QuestionSet::Derived,
        text: "How can the robot's behavior be explained to non-experts, and what level of detail is necessary?",
        actors: &[DEV, PMR],
    },
];

pub fn question_catalog() -> &'static [Question] {
    &CATALOG
}

/// Looks up by id. `Q.2` is accepted as an alias of `Q2`.
pub fn find_question(id: &str) -> Option<&'static Question> {
    let id = id.replace('.', "");
    CATALOG.iter().find(|q| q.id.eq_ignore_ascii_case(&id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Role,
    Category,
    Chunk,
    Question,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(Slot),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template `{template}`: unknown placeholder `{{{{{name}}}}}`")]
    UnknownPlaceholder { template: String, name: String },
    #[error("template `{template}`: unterminated or nested `{{{{` at byte {at}")]
    Malformed { template: String, at: usize },
    #[error("template `{template}` has no `{{{{{name}}}}}` placeholder")]
    MissingPlaceholder { template: String, name: &'static str },
}

/// A prompt template with `{{role}}`, `{{category}}`, `{{chunk}}` and
/// `{{question}}` placeholders. No other `{{...}}` is allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    id: String,
    pieces: Vec<Piece>,
}

pub const DEFAULT_TEMPLATE_ID: &str = "default";
pub const DEFAULT_TEMPLATE: &str = include_str!("../templates/default.txt");

pub const LOG_START_MARKER: &str = "---LOG START---";
pub const LOG_END_MARKER: &str = "---LOG END---";

impl Template {
    pub fn parse(id: &str, body: &str) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut rest = body;
        let mut offset = 0;
        while let Some(open) = rest.find("{{") {
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].into()));
            }
            let after = &rest[open + 2..];
            let close = after.find("}}").ok_or(TemplateError::Malformed {
                template: id.into(),
                at: offset + open,
            })?;
            let name = &after[..close];
            if name.contains("{{") {
                return Err(TemplateError::Malformed {
                    template: id.into(),
                    at: offset + open,
                });
            }
            let slot = match name.trim() {
                "role" => Slot::Role,
                "category" => Slot::Category,
                "chunk" => Slot::Chunk,
                "question" => Slot::Question,
                other => {
                    return Err(TemplateError::UnknownPlaceholder {
                        template: id.into(),
                        name: other.into(),
                    })
                }
            };
            pieces.push(Piece::Slot(slot));
            let consumed = open + 2 + close + 2;
            offset += consumed;
            rest = &rest[consumed..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.into()));
        }
        for (slot, name) in [(Slot::Chunk, "chunk"), (Slot::Question, "question")] {
            if !pieces.contains(&Piece::Slot(slot)) {
                return Err(TemplateError::MissingPlaceholder {
                    template: id.into(),
                    name,
                });
            }
        }
        Ok(Self {
            id: id.into(),
            pieces,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Single pass: substituted values are never re-scanned for placeholders.
    fn fill(&self, role: &str, category: &str, chunk: &str, question: &str) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            out.push_str(match piece {
                Piece::Text(t) => t,
                Piece::Slot(Slot::Role) => role,
                Piece::Slot(Slot::Category) => category,
                Piece::Slot(Slot::Chunk) => chunk,
                Piece::Slot(Slot::Question) => question,
            });
        }
        out
    }

    /// Worst-case tokens used by everything except the chunk.
    pub fn overhead(&self, estimator: &dyn TokenEstimator) -> usize {
        let longest = |it: &mut dyn Iterator<Item = &'static str>| it.max_by_key(|s| s.len()).unwrap_or("");
        let role = longest(&mut ActorRole::ALL.iter().map(|r| r.display_name()));
        let category = longest(&mut LogCategory::ALL.iter().map(|c| c.label()));
        let question = longest(&mut CATALOG.iter().map(|q| q.text));
        estimator.estimate(&self.fill(role, category, "", question))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, Template>,
}

impl Default for TemplateSet {
    /// Contains only the built-in `default` template.
    fn default() -> Self {
        let mut set = Self {
            templates: BTreeMap::new(),
        };
        set.insert(Template::parse(DEFAULT_TEMPLATE_ID, DEFAULT_TEMPLATE).expect("built-in template"));
        set
    }
}

impl TemplateSet {
    /// Adds or replaces a template.
    pub fn insert(&mut self, template: Template) {
        self.templates.insert(template.id.clone(), template);
    }

    pub fn get(&self, id: &str) -> Option<&Template> {
        self.templates.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Checks that `budget.reserved_tokens` covers every template's overhead.
    pub fn check_reserve(&self, budget: &TokenBudget, estimator: &dyn TokenEstimator) -> Result<(), RenderError> {
        for t in self.templates.values() {
            let needed = t.overhead(estimator);
            if needed > budget.reserved_tokens() {
                return Err(RenderError::ReserveTooSmall {
                    template: t.id.clone(),
                    needed,
                    reserved: budget.reserved_tokens(),
                });
            }
        }
        Ok(())
    }
}

/// Everything needed to render one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptJob {
    pub question: String,
    pub actor: ActorRole,
    pub category: LogCategory,
    pub chunk: Chunk,
    pub backend: String,
    pub template_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("question {question} is not addressed to {actor}")]
    ActorNotPermitted { question: String, actor: ActorRole },
    #[error("rendered prompt needs {tokens} tokens, over max_prompt_tokens {max}")]
    OverBudget { tokens: usize, max: usize },
    #[error("template `{template}` needs {needed} reserved tokens, budget reserves {reserved}")]
    ReserveTooSmall {
        template: String,
        needed: usize,
        reserved: usize,
    },
}

/// Renders `job` with the default estimator.
pub fn render_prompt(job: &PromptJob, templates: &TemplateSet, budget: &TokenBudget) -> Result<String, RenderError> {
    render_prompt_with(job, templates, budget, &ByteRatio::default())
}

pub fn render_prompt_with(
    job: &PromptJob,
    templates: &TemplateSet,
    budget: &TokenBudget,
    estimator: &dyn TokenEstimator,
) -> Result<String, RenderError> {
    let template = templates
        .get(&job.template_id)
        .ok_or_else(|| RenderError::UnknownTemplate(job.template_id.clone()))?;
    let question = find_question(&job.question).ok_or_else(|| RenderError::UnknownQuestion(job.question.clone()))?;
    if !question.permits(job.actor) {
        return Err(RenderError::ActorNotPermitted {
            question: question.id.to_string(),
            actor: job.actor,
        });
    }
    let chunk = job.chunk.text.strip_suffix('\n').unwrap_or(&job.chunk.text);
    let prompt = template.fill(job.actor.display_name(), job.category.label(), chunk, question.text);
    let tokens = estimator.estimate(&prompt);
    if tokens > budget.max_prompt_tokens() {
        return Err(RenderError::OverBudget {
            tokens,
            max: budget.max_prompt_tokens(),
        });
    }
    Ok(prompt)
}
