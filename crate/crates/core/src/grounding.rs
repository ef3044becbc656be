// SPDX-License-Identifier: Apache-2.0

//! Checks whether the terms an answer uses actually appear in the log
//! excerpt it was asked about. The report is advisory; it never sets a
//! verdict.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Fixed English stop-word list. Stop words are dropped before bigrams are
/// formed and break the word chain they sit in.
pub const STOP_WORDS: [&str; 50] = [
    "a", "an", "the", "and", "or", "but", "if", "then", "of", "to", //
    "in", "on", "at", "by", "for", "with", "from", "as", "is", "are", //
    "was", "were", "be", "been", "being", "has", "have", "had", "do", "does", //
    "did", "it", "its", "this", "that", "these", "those", "which", "who", "what", //
    "not", "no", "own", "can", "will", "would", "should", "there", "their", "they",
];

fn is_stop_word(w: &str) -> bool {
    STOP_WORDS.contains(&w)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Candidate terms of `answer`, lowercased:
/// identifier-like tokens containing `_`, and bigrams of adjacent alphabetic
/// non-stop words. Anything other than whitespace between two words
/// (punctuation, a stop word, a number, an identifier) breaks the chain, so
/// every bigram occurs verbatim in the lowercased answer modulo spacing.
pub fn extract_terms(answer: &str) -> BTreeSet<String> {
    let lower = answer.to_lowercase();
    let mut terms = BTreeSet::new();
    let mut prev: Option<&str> = None;
    let mut rest = lower.as_str();

    while !rest.is_empty() {
        let start = rest.find(is_word_char).unwrap_or(rest.len());
        if !rest[..start].chars().all(char::is_whitespace) {
            prev = None;
        }
        rest = &rest[start..];
        if rest.is_empty() {
            break;
        }
        let end = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
        let word = &rest[..end];
        rest = &rest[end..];

        if word.contains('_') {
            if word.chars().any(char::is_alphanumeric) {
                terms.insert(String::from(word));
            }
            prev = None;
        } else if word.chars().all(char::is_alphabetic) && !is_stop_word(word) {
            if let Some(p) = prev {
                let mut bigram = String::with_capacity(p.len() + 1 + word.len());
                bigram.push_str(p);
                bigram.push(' ');
                bigram.push_str(word);
                terms.insert(bigram);
            }
            prev = Some(word);
        } else {
            prev = None;
        }
    }
    terms
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingReport {
    /// Transcript receipt the answer came from, when known.
    pub answer_ref: Option<u64>,
    pub grounded_terms: BTreeSet<String>,
    pub ungrounded_terms: BTreeSet<String>,
    pub grounding_ratio: f64,
}

impl GroundingReport {
    pub fn with_answer_ref(mut self, receipt: u64) -> Self {
        self.answer_ref = Some(receipt);
        self
    }
}

/// A term is grounded when its lowercase form is a substring of the
/// lowercased source chunk.
pub fn ground_answer(answer: &str, source_chunk: &str) -> GroundingReport {
    let haystack = source_chunk.to_lowercase();
    let (grounded, ungrounded): (Vec<String>, Vec<String>) =
        extract_terms(answer).into_iter().partition(|t| haystack.contains(t.as_str()));
    let total = grounded.len() + ungrounded.len();
    let grounding_ratio = if total == 0 {
        1.0
    } else {
        grounded.len() as f64 / total as f64
    };
    GroundingReport {
        answer_ref: None,
        grounded_terms: grounded.into_iter().collect(),
        ungrounded_terms: ungrounded.into_iter().collect(),
        grounding_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(s: &str) -> Vec<String> {
        extract_terms(s).into_iter().collect()
    }

    #[test]
    fn stop_list_is_fifty_distinct_words() {
        let set: BTreeSet<_> = STOP_WORDS.iter().collect();
        assert_eq!(set.len(), 50);
    }

    #[test]
    fn identifiers() {
        assert!(extract_terms("The robot has listened to the sound tubular_bells").contains("tubular_bells"));
        assert_eq!(terms("Node merlin2_executor_node started."), ["merlin2_executor_node"]);
    }

    #[test]
    fn bigrams() {
        assert!(extract_terms("sound played by its own robotic arm").contains("robotic arm"));
        assert_eq!(terms("sound played by its own robotic arm"), ["robotic arm", "sound played"]);
        // punctuation breaks the chain
        assert_eq!(terms("door, open"), Vec::<String>::new());
        assert_eq!(terms("Front Door"), ["front door"]);
    }

    #[test]
    fn empty() {
        assert!(extract_terms("").is_empty());
        let r = ground_answer("", "anything");
        assert_eq!(r.grounding_ratio, 1.0);
        assert!(r.grounded_terms.is_empty() && r.ungrounded_terms.is_empty());
    }

    #[test]
    fn substring_grounding() {
        let r = ground_answer(
            "Checked door_entrance, then the robotic arm moved.",
            "1.0 [exec-1] (door_at door_entrance livingroom)",
        );
        assert!(r.grounded_terms.contains("door_entrance"));
        assert!(r.ungrounded_terms.contains("robotic arm"));
        assert!(r.grounding_ratio > 0.0 && r.grounding_ratio < 1.0);
    }
}
