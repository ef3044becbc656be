// SPDX-License-Identifier: Apache-2.0

//! Append-only JSON Lines transcript of gateway exchanges.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::gateway::ChatExchange;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub receipt: u64,
    #[serde(flatten)]
    pub exchange: ChatExchange,
}

/// Receipt ids continue from the number of lines already in the file.
pub struct Transcript {
    path: PathBuf,
    inner: Mutex<(File, u64)>,
}

impl Transcript {
    pub fn open(path: &Path) -> io::Result<Self> {
        let existing = match File::open(path) {
            Ok(f) => BufReader::new(f).lines().try_fold(0u64, |n, l| l.map(|_| n + 1))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => 0,
            Err(e) => return Err(e),
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: Mutex::new((file, existing)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one line and returns its receipt id.
    pub fn record(&self, exchange: &ChatExchange) -> io::Result<u64> {
        let mut guard = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let receipt = guard.1 + 1;
        let mut line = serde_json::to_string(&TranscriptLine {
            receipt,
            exchange: exchange.clone(),
        })
        .map_err(io::Error::other)?;
        line.push('\n');
        guard.0.write_all(line.as_bytes())?;
        guard.0.flush()?;
        guard.1 = receipt;
        Ok(receipt)
    }
}

/// Reads every line back.
pub fn read_transcript(path: &Path) -> io::Result<Vec<TranscriptLine>> {
    let f = File::open(path)?;
    BufReader::new(f)
        .lines()
        .map(|l| serde_json::from_str(&l?).map_err(io::Error::other))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ChatRequest, ChatResponse};

    fn exchange(content: &str) -> ChatExchange {
        ChatExchange {
            backend: "stub".into(),
            request: ChatRequest {
                model_name: "m".into(),
                messages: vec![],
                max_tokens: 1,
                temperature: 0.0,
            },
            response: Some(ChatResponse {
                content: content.into(),
                finish_reason: "stop".into(),
                latency: 0.0,
                attempts: 1,
            }),
            error: None,
            timestamp: "2024-01-01T00:00:00.000Z".into(),
        }
    }

    #[test]
    fn numbering_continues_after_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let t = Transcript::open(&path).unwrap();
        assert_eq!(t.record(&exchange("a")).unwrap(), 1);
        assert_eq!(t.record(&exchange("b")).unwrap(), 2);
        drop(t);
        let t = Transcript::open(&path).unwrap();
        assert_eq!(t.record(&exchange("c")).unwrap(), 3);
        let lines = read_transcript(&path).unwrap();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2].exchange.response.as_ref().unwrap().content, "c");
        assert_eq!(lines[0].exchange, exchange("a"));
    }
}
