// SPDX-License-Identifier: Apache-2.0

//! Reassembly of PDDL text dumped line-by-line into the log.
//!
//! The planner's executor prints each domain and problem as one log record
//! per source line. A block starts at a `(define (domain` or
//! `(define (problem` opener and ends on the line where the parenthesis
//! balance returns to zero. Blocks from different processes never merge.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::pddl_opener;
use crate::log::LogRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    DomainText,
    ProblemText,
}

impl BlockKind {
    /// File-name infix: `domain` or `problem`.
    pub fn file_tag(self) -> &'static str {
        match self {
            Self::DomainText => "domain",
            Self::ProblemText => "problem",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PddlBlock {
    pub kind: BlockKind,
    /// Domain or problem name from the `define` header.
    pub name: String,
    /// Source lines joined with `\n`.
    pub text: String,
    /// `(first line_no, last line_no)`.
    pub source_span: (usize, usize),
    pub process_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Imbalance {
    /// Records ran out before the block closed.
    Unclosed,
    /// A `)` would have taken the balance below zero.
    StrayClose,
}

impl fmt::Display for Imbalance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unclosed => "block never closed",
            Self::StrayClose => "stray `)`",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unbalanced PDDL block from {process_tag} (lines {}-{}): {imbalance}", span.0, span.1)]
pub struct UnbalancedBlock {
    pub imbalance: Imbalance,
    pub process_tag: String,
    pub span: (usize, usize),
    pub partial_text: String,
}

/// The PDDL payload of a record: its message with the log prefix removed
/// (already done by the parser). Indentation is kept.
pub fn strip_prefix(record: &LogRecord) -> &str {
    &record.message
}

struct OpenBlock {
    kind: BlockKind,
    name: String,
    lines: Vec<String>,
    first_line: usize,
    last_line: usize,
    balance: i64,
}

impl OpenBlock {
    fn fail(self, imbalance: Imbalance, process_tag: &str) -> UnbalancedBlock {
        UnbalancedBlock {
            imbalance,
            process_tag: process_tag.into(),
            span: (self.first_line, self.last_line),
            partial_text: self.lines.join("\n"),
        }
    }
}

fn header(text: &str) -> (BlockKind, String) {
    let kind = if text.starts_with("(define (domain") {
        BlockKind::DomainText
    } else {
        BlockKind::ProblemText
    };
    let rest = &text["(define (".len()..];
    let rest = rest
        .trim_start_matches(|c: char| c.is_ascii_alphabetic())
        .trim_start();
    let name = rest
        .split(|c: char| c.is_whitespace() || c == ')' || c == '(')
        .next()
        .unwrap_or_default();
    (kind, name.into())
}

/// Reconstructs every PDDL block in `records` (one file's PDDL records, in
/// order). Output is ordered by the block's first line.
pub fn reconstruct_blocks(records: &[LogRecord]) -> Result<Vec<PddlBlock>, UnbalancedBlock> {
    let mut open: BTreeMap<&str, OpenBlock> = BTreeMap::new();
    let mut done = Vec::new();

    for record in records {
        let tag = record.process_tag.as_str();
        let payload = strip_prefix(record);
        let line = match open.get(tag) {
            Some(_) => payload,
            None => match pddl_opener(payload) {
                Some(at) => {
                    let line = &payload[at..];
                    let (kind, name) = header(line);
                    open.insert(
                        tag,
                        OpenBlock {
                            kind,
                            name,
                            lines: Vec::new(),
                            first_line: record.line_no,
                            last_line: record.line_no,
                            balance: 0,
                        },
                    );
                    line
                }
                None => continue,
            },
        };

        let block = open.get_mut(tag).expect("opened above");
        block.lines.push(line.into());
        block.last_line = record.line_no;
        for b in line.bytes() {
            match b {
                b'(' => block.balance += 1,
                b')' => block.balance -= 1,
                _ => {}
            }
            if block.balance < 0 {
                let block = open.remove(tag).expect("present");
                return Err(block.fail(Imbalance::StrayClose, tag));
            }
        }
        if block.balance == 0 {
            let block = open.remove(tag).expect("present");
            done.push(PddlBlock {
                kind: block.kind,
                name: block.name,
                text: block.lines.join("\n"),
                source_span: (block.first_line, block.last_line),
                process_tag: tag.into(),
            });
        }
    }

    if let Some((tag, block)) = open.into_iter().min_by_key(|(_, b)| b.first_line) {
        return Err(block.fail(Imbalance::Unclosed, tag));
    }
    done.sort_by_key(|b| b.source_span.0);
    Ok(done)
}
