// SPDX-License-Identifier: Apache-2.0

//! Record categorization and segmentation.
//!
//! Rules are evaluated in priority order, first match wins:
//!
//! 1. `Pddl`: an open PDDL block for the record's process, or a message
//!    containing `(define (domain` / `(define (problem`.
//! 2. `WarningError`: WARN/ERROR/FATAL severity, or a warning pattern hit.
//! 3. `StartUp`: launch-framework lines and known startup chatter.
//! 4. `Other`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::log::{LogRecord, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LogCategory {
    StartUp,
    WarningError,
    Pddl,
    Other,
}

impl LogCategory {
    pub const ALL: [LogCategory; 4] = [
        LogCategory::StartUp,
        LogCategory::WarningError,
        LogCategory::Pddl,
        LogCategory::Other,
    ];

    /// Human-facing label used in prompts and reports.
    pub fn label(self) -> &'static str {
        match self {
            Self::StartUp => "StartUp",
            Self::WarningError => "Warning/Error",
            Self::Pddl => "PDDL",
            Self::Other => "Other",
        }
    }
}

impl fmt::Display for LogCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown log category `{0}` (expected startup, warning, pddl or other)")]
pub struct UnknownCategory(pub String);

impl FromStr for LogCategory {
    type Err = UnknownCategory;

    /// Case-insensitive; accepts the variant names and short CLI forms.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "startup" => Ok(Self::StartUp),
            "warning" | "warningerror" | "warning/error" | "warn" | "error" => {
                Ok(Self::WarningError)
            }
            "pddl" => Ok(Self::Pddl),
            "other" => Ok(Self::Other),
            _ => Err(UnknownCategory(s.into())),
        }
    }
}

pub const DEFAULT_WARNING_PATTERNS: [&str; 9] = [
    "Could not load dynamic library",
    "warnings.warn",
    "deprecated",
    "ALSA lib",
    "Cannot open device",
    "TF-TRT Warning",
    "failed call to",
    "Invalid field",
    "unable to open slave",
];

pub const STARTUP_PATTERNS: [&str; 3] = [
    "process started with pid",
    "Default logging verbosity",
    "RCUTILS_CONSOLE_STDOUT_LINE_BUFFERED is now ignored",
];

const PDDL_OPENERS: [&str; 2] = ["(define (domain", "(define (problem"];

/// Substring patterns that mark a record as a warning. Case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifierRules {
    pub warning_patterns: Vec<String>,
}

impl Default for ClassifierRules {
    fn default() -> Self {
        Self {
            warning_patterns: DEFAULT_WARNING_PATTERNS.iter().map(|p| (*p).into()).collect(),
        }
    }
}

/// Open PDDL blocks, keyed by process tag, with their running paren balance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassifierState {
    open: BTreeMap<String, i64>,
}

impl ClassifierState {
    pub fn has_open_block(&self, process_tag: &str) -> bool {
        self.open.contains_key(process_tag)
    }
}

/// Net `(` minus `)` count.
pub(crate) fn paren_delta(text: &str) -> i64 {
    text.bytes().fold(0, |acc, b| match b {
        b'(' => acc + 1,
        b')' => acc - 1,
        _ => acc,
    })
}

pub(crate) fn pddl_opener(message: &str) -> Option<usize> {
    PDDL_OPENERS.iter().filter_map(|p| message.find(p)).min()
}

/// Classifies one record, updating `state`. Records must be fed in file order.
pub fn classify_record(
    record: &LogRecord,
    rules: &ClassifierRules,
    state: &mut ClassifierState,
) -> LogCategory {
    let tag = record.process_tag.as_str();
    if let Some(balance) = state.open.get_mut(tag) {
        *balance += paren_delta(&record.message);
        if *balance <= 0 {
            state.open.remove(tag);
        }
        return LogCategory::Pddl;
    }
    if let Some(at) = pddl_opener(&record.message) {
        let balance = paren_delta(&record.message[at..]);
        if balance > 0 {
            state.open.insert(tag.into(), balance);
        }
        return LogCategory::Pddl;
    }

    let msg = record.message.as_str();
    if record.severity.is_some_and(|s| s.is_problem())
        || rules.warning_patterns.iter().any(|p| msg.contains(p.as_str()))
    {
        return LogCategory::WarningError;
    }
    if record.origin == Origin::LaunchFramework || STARTUP_PATTERNS.iter().any(|p| msg.contains(p)) {
        return LogCategory::StartUp;
    }
    LogCategory::Other
}

/// Categories for every record, in order.
pub fn classify_all(records: &[LogRecord], rules: &ClassifierRules) -> Vec<LogCategory> {
    let mut state = ClassifierState::default();
    records
        .iter()
        .map(|r| classify_record(r, rules, &mut state))
        .collect()
}

/// A maximal run of same-category records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub category: LogCategory,
    pub records: Vec<LogRecord>,
}

impl Segment {
    /// `(first line_no, last line_no)`.
    pub fn span(&self) -> (usize, usize) {
        (
            self.records.first().map_or(0, |r| r.line_no),
            self.records.last().map_or(0, |r| r.line_no),
        )
    }

    pub fn summary(&self) -> SegmentSummary {
        let (first_line, last_line) = self.span();
        SegmentSummary {
            category: self.category,
            first_line,
            last_line,
            record_count: self.records.len(),
        }
    }
}

/// Serialized form of a segment in `classify` output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub category: LogCategory,
    pub first_line: usize,
    pub last_line: usize,
    pub record_count: usize,
}

/// Greedy run-length grouping over the classifier output.
pub fn segment_log(records: &[LogRecord], rules: &ClassifierRules) -> Vec<Segment> {
    let categories = classify_all(records, rules);
    let mut segments: Vec<Segment> = Vec::new();
    for (record, category) in records.iter().zip(categories) {
        match segments.last_mut() {
            Some(seg) if seg.category == category => seg.records.push(record.clone()),
            _ => segments.push(Segment {
                category,
                records: alloc::vec![record.clone()],
            }),
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::parse_file;

    fn classify_lines(src: &str) -> Vec<LogCategory> {
        classify_all(&parse_file(src).records, &ClassifierRules::default())
    }

    #[test]
    fn rule_examples() {
        let cats = classify_lines(concat!(
            "1678884558.4071975 [INFO] [waypoint_navigation_node-1]: process started with pid [116636]\n",
            "1678884561.5278707 [sound_recognition_node-2] 2023-03-15 13:49:21.527592: W x.cc:64] Could not load dynamic library 'libcudart.so.11.0'; dlerror\n",
            "1678884566.9175122 [sound_recognition_node-2] [INFO] [1678884566.917240165] [sound_recognition.sound_recognition_node]: music\n",
            "1678884559.4909811 [tts_node-4] RCUTILS_CONSOLE_STDOUT_LINE_BUFFERED is now ignored. Please set\n",
        ));
        assert_eq!(
            cats,
            [
                LogCategory::StartUp,
                LogCategory::WarningError,
                LogCategory::Other,
                LogCategory::StartUp
            ]
        );
    }

    #[test]
    fn severity_drives_warning() {
        let cats = classify_lines("1.0 [p-1] [ERROR] [1.0] [a.b]: boom\n2.0 [WARN] [launch]: hm\n");
        assert_eq!(cats, [LogCategory::WarningError, LogCategory::WarningError]);
    }

    #[test]
    fn pddl_block_wins_over_warning_keyword() {
        let cats = classify_lines(concat!(
            "1.0 [exec-8] [INFO] [1.0] [m.e]: (define (problem p)\n",
            "1.1 [exec-8] (:objects deprecated - thing)\n",
            "1.2 [exec-8] )\n",
            "1.3 [exec-8] deprecated\n",
        ));
        assert_eq!(
            cats,
            [
                LogCategory::Pddl,
                LogCategory::Pddl,
                LogCategory::Pddl,
                LogCategory::WarningError
            ]
        );
    }

    #[test]
    fn pddl_state_is_per_process() {
        let cats = classify_lines(concat!(
            "1.0 [exec-8] [INFO] [1.0] [m.e]: (define (domain d)\n",
            "1.1 [sound-2] music\n",
            "1.2 [exec-8] (:types a)\n",
            "1.3 [exec-8] )\n",
            "1.4 [exec-8] after\n",
        ));
        assert_eq!(
            cats,
            [
                LogCategory::Pddl,
                LogCategory::Other,
                LogCategory::Pddl,
                LogCategory::Pddl,
                LogCategory::Other
            ]
        );
    }

    #[test]
    fn custom_patterns_replace_defaults() {
        let rules = ClassifierRules {
            warning_patterns: alloc::vec!["music".into()],
        };
        let log = parse_file("1.0 [s-2] music\n2.0 [s-2] ALSA lib x\n");
        assert_eq!(
            classify_all(&log.records, &rules),
            [LogCategory::WarningError, LogCategory::Other]
        );
    }

    #[test]
    fn segmentation_groups_runs() {
        assert!(segment_log(&[], &ClassifierRules::default()).is_empty());
        let mut src = alloc::string::String::new();
        for i in 1..=13 {
            src.push_str(&alloc::format!(
                "1.{i} [INFO] [node-{i}]: process started with pid [{i}]\n"
            ));
        }
        src.push_str("2.0 [s-2] ALSA lib foo\n");
        let log = parse_file(&src);
        let segs = segment_log(&log.records, &ClassifierRules::default());
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].records.len(), 13);
        assert_eq!(segs[0].span(), (1, 13));
        assert_eq!(segs[1].category, LogCategory::WarningError);
    }

    #[test]
    fn category_names_parse() {
        assert_eq!("PDDL".parse::<LogCategory>(), Ok(LogCategory::Pddl));
        assert_eq!("warning".parse::<LogCategory>(), Ok(LogCategory::WarningError));
        assert_eq!("StartUp".parse::<LogCategory>(), Ok(LogCategory::StartUp));
        assert!("nope".parse::<LogCategory>().is_err());
    }
}
