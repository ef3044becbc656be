// SPDX-License-Identifier: Apache-2.0

//! Greedy packing of segments into prompt-sized chunks.
//!
//! A record's text is its raw line plus `\n`; chunks never split a record,
//! and concatenating a segment's chunks reproduces its records' text.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classify::Segment;

/// Smallest usable `max_prompt_tokens - reserved_tokens`.
pub const MIN_EFFECTIVE_TOKENS: usize = 64;

pub trait TokenEstimator {
    fn estimate(&self, text: &str) -> usize;
}

/// `ceil(bytes / bytes_per_token)`. With the default of 4 this over-counts
/// for typical English and log text, which is the safe direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteRatio {
    pub bytes_per_token: usize,
}

impl Default for ByteRatio {
    fn default() -> Self {
        Self { bytes_per_token: 4 }
    }
}

impl TokenEstimator for ByteRatio {
    fn estimate(&self, text: &str) -> usize {
        text.len().div_ceil(self.bytes_per_token.max(1))
    }
}

/// Token estimate with the default 4-bytes-per-token heuristic.
pub fn estimate_tokens(text: &str) -> usize {
    ByteRatio::default().estimate(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum BudgetError {
    #[error("reserved_tokens ({reserved}) exceeds max_prompt_tokens ({max})")]
    ReserveTooLarge { max: usize, reserved: usize },
    #[error("effective budget {effective} is below the minimum of {MIN_EFFECTIVE_TOKENS}")]
    TooSmall { effective: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    max_prompt_tokens: usize,
    reserved_tokens: usize,
}

impl TokenBudget {
    pub fn new(max_prompt_tokens: usize, reserved_tokens: usize) -> Result<Self, BudgetError> {
        let effective = max_prompt_tokens.checked_sub(reserved_tokens).ok_or(
            BudgetError::ReserveTooLarge {
                max: max_prompt_tokens,
                reserved: reserved_tokens,
            },
        )?;
        if effective < MIN_EFFECTIVE_TOKENS {
            return Err(BudgetError::TooSmall { effective });
        }
        Ok(Self {
            max_prompt_tokens,
            reserved_tokens,
        })
    }

    pub fn max_prompt_tokens(&self) -> usize {
        self.max_prompt_tokens
    }

    pub fn reserved_tokens(&self) -> usize {
        self.reserved_tokens
    }

    /// Tokens available for log text.
    pub fn effective(&self) -> usize {
        self.max_prompt_tokens - self.reserved_tokens
    }
}

impl Default for TokenBudget {
    fn default() -> Self {
        Self {
            max_prompt_tokens: 4096,
            reserved_tokens: 512,
        }
    }
}

/// Identifies a segment: which file, and its index in that file's segment list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub file_id: String,
    pub segment_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub segment_ref: SegmentRef,
    /// 1-based part number.
    pub part: usize,
    pub parts: usize,
    pub first_line: usize,
    pub last_line: usize,
    pub text: String,
    pub est_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("record at line {line_no} needs {tokens} tokens, over the budget of {budget}")]
pub struct OversizeRecord {
    pub line_no: usize,
    pub tokens: usize,
    pub budget: usize,
}

/// Splits with the default estimator.
pub fn chunk_segment(
    segment: &Segment,
    segment_ref: SegmentRef,
    budget: &TokenBudget,
) -> Result<Vec<Chunk>, OversizeRecord> {
    chunk_segment_with(segment, segment_ref, budget, &ByteRatio::default())
}

pub fn chunk_segment_with(
    segment: &Segment,
    segment_ref: SegmentRef,
    budget: &TokenBudget,
    estimator: &dyn TokenEstimator,
) -> Result<Vec<Chunk>, OversizeRecord> {
    let limit = budget.effective();
    // (text, first_line, last_line)
    let mut packed: Vec<(String, usize, usize)> = Vec::new();
    let mut current: Option<(String, usize, usize)> = None;

    for record in &segment.records {
        let mut piece = String::with_capacity(record.raw().len() + 1);
        piece.push_str(record.raw());
        piece.push('\n');
        let tokens = estimator.estimate(&piece);
        if tokens > limit {
            return Err(OversizeRecord {
                line_no: record.line_no,
                tokens,
                budget: limit,
            });
        }
        match current.as_mut() {
            Some((text, _, last)) => {
                let before = text.len();
                text.push_str(&piece);
                if estimator.estimate(text) <= limit {
                    *last = record.line_no;
                } else {
                    text.truncate(before);
                    packed.extend(current.take());
                    current = Some((piece, record.line_no, record.line_no));
                }
            }
            None => current = Some((piece, record.line_no, record.line_no)),
        }
    }
    packed.extend(current);

    let parts = packed.len();
    Ok(packed
        .into_iter()
        .enumerate()
        .map(|(i, (text, first_line, last_line))| Chunk {
            segment_ref: segment_ref.clone(),
            part: i + 1,
            parts,
            first_line,
            last_line,
            est_tokens: estimator.estimate(&text),
            text,
        })
        .collect())
}
