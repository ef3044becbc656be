// SPDX-License-Identifier: Apache-2.0

//! Parser for ROS 2 launch output.
//!
//! Three line shapes occur in launch captures:
//!
//! ```text
//! <t> [<SEV>] [<entity>]: <msg>                                launch system
//! <t> [<proc>] [<SEV>] [<stamp>] [<logger>]: <msg>             node logger
//! <t> [<proc>] <msg>                                           raw stdout/stderr
//! ```
//!
//! Lines without a leading epoch timestamp are continuations of the previous
//! record (multi-line prints such as Keras progress bars) and are folded into
//! its message.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Debug,
    Info,
    Warn,
    Error,
    Fatal,
}

impl Severity {
    /// Case-sensitive token lookup. `WARNING` maps to [`Severity::Warn`].
    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "DEBUG" => Some(Self::Debug),
            "INFO" => Some(Self::Info),
            "WARN" | "WARNING" => Some(Self::Warn),
            "ERROR" => Some(Self::Error),
            "FATAL" => Some(Self::Fatal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Debug => "DEBUG",
            Self::Info => "INFO",
            Self::Warn => "WARN",
            Self::Error => "ERROR",
            Self::Fatal => "FATAL",
        }
    }

    /// WARN, ERROR or FATAL.
    pub fn is_problem(self) -> bool {
        matches!(self, Self::Warn | Self::Error | Self::Fatal)
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("not a severity token")]
pub struct NotASeverity;

impl FromStr for Severity {
    type Err = NotASeverity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_token(s).ok_or(NotASeverity)
    }
}

/// Seconds since the Unix epoch, kept as the exact decimal text from the log.
///
/// A binary `f64` cannot hold seven fractional digits at epoch magnitudes,
/// so the text is authoritative and [`Timestamp::seconds`] is derived.
#[derive(Debug, Clone)]
pub struct Timestamp {
    text: String,
    seconds: f64,
}

impl Timestamp {
    /// Accepts `digits` or `digits.digits`.
    pub fn parse(text: &str) -> Option<Self> {
        if decimal_len(text) != Some(text.len()) {
            return None;
        }
        let seconds = text.parse().ok()?;
        Some(Self {
            text: text.into(),
            seconds,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn seconds(&self) -> f64 {
        self.seconds
    }
}

impl PartialEq for Timestamp {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Timestamp {}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

/// Length of the `digits[.digits]` prefix of `s`, if any.
fn decimal_len(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let int = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
    if int == 0 {
        return None;
    }
    if bytes.get(int) != Some(&b'.') {
        return Some(int);
    }
    let frac = bytes[int + 1..]
        .iter()
        .take_while(|b| b.is_ascii_digit())
        .count();
    if frac == 0 {
        return None;
    }
    Some(int + 1 + frac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    /// The launch system reporting about a process it manages.
    LaunchFramework,
    /// Output produced by the process itself.
    Process,
}

/// One parsed log line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogRecord {
    pub wall_time: Timestamp,
    pub origin: Origin,
    /// Process identifier with ordinal suffix, e.g. `executor_node-8`. For
    /// launch-framework lines this is the entity being reported on.
    pub process_tag: String,
    pub severity: Option<Severity>,
    pub inner_stamp: Option<Timestamp>,
    pub logger_name: Option<String>,
    /// Everything after the prefix separator, verbatim. Continuation lines
    /// are appended after a `\n`.
    pub message: String,
    pub line_no: usize,
    #[serde(skip)]
    raw: String,
}

impl LogRecord {
    /// The original first physical line, byte-exact.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    fn fold_continuation(&mut self, line: &str) {
        self.message.push('\n');
        self.message.push_str(line);
    }
}

/// Returns the original line of `record`; `parse_line` of the result yields
/// an equal record (continuations aside).
pub fn serialize_record(record: &LogRecord) -> &str {
    record.raw()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Line {
    Record(LogRecord),
    Blank,
    /// No leading timestamp: belongs to the previous record.
    Continuation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingBracket,
    UnclosedBracket,
    EmptyBracket,
    MissingSeparator,
    OrphanContinuation,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MissingBracket => "expected `[` after timestamp",
            Self::UnclosedBracket => "unclosed `[`",
            Self::EmptyBracket => "empty bracket",
            Self::MissingSeparator => "expected `: ` after launch entity",
            Self::OrphanContinuation => "continuation line with no preceding record",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line_no}: {kind}")]
pub struct ParseError {
    pub line_no: usize,
    pub kind: ParseErrorKind,
    pub raw: String,
}

/// Byte cursor over one line.
struct Cursor<'a> {
    line: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// Reads `[...]` and returns the inner text.
    fn bracket(&mut self) -> Result<&'a str, ParseErrorKind> {
        if !self.eat("[") {
            return Err(ParseErrorKind::MissingBracket);
        }
        let rest = self.rest();
        let end = rest.find(']').ok_or(ParseErrorKind::UnclosedBracket)?;
        let inner = &rest[..end];
        // `[a [b]` : the first bracket was never closed.
        if inner.contains('[') {
            return Err(ParseErrorKind::UnclosedBracket);
        }
        if inner.is_empty() {
            return Err(ParseErrorKind::EmptyBracket);
        }
        self.pos += end + 1;
        Ok(inner)
    }
}

/// Parses one physical line (without its newline). `line_no` is 1-based.
pub fn parse_line(line: &str, line_no: usize) -> Result<Line, ParseError> {
    if line.trim().is_empty() {
        return Ok(Line::Blank);
    }
    let stamp_len = match decimal_len(line) {
        Some(n) if n == line.len() || line.as_bytes()[n] == b' ' => n,
        _ => return Ok(Line::Continuation(line.into())),
    };
    let err = |kind| ParseError {
        line_no,
        kind,
        raw: line.into(),
    };
    let wall_time = Timestamp::parse(&line[..stamp_len]).expect("decimal prefix");
    let mut cur = Cursor {
        line,
        pos: stamp_len,
    };
    if !cur.eat(" ") {
        return Err(err(ParseErrorKind::MissingBracket));
    }
    let first = cur.bracket().map_err(err)?;

    if let Some(severity) = Severity::from_token(first) {
        if !cur.eat(" ") {
            return Err(err(ParseErrorKind::MissingBracket));
        }
        let entity = cur.bracket().map_err(err)?;
        if !cur.eat(":") {
            return Err(err(ParseErrorKind::MissingSeparator));
        }
        cur.eat(" ");
        return Ok(Line::Record(LogRecord {
            wall_time,
            origin: Origin::LaunchFramework,
            process_tag: entity.into(),
            severity: Some(severity),
            inner_stamp: None,
            logger_name: None,
            message: cur.rest().into(),
            line_no,
            raw: line.into(),
        }));
    }

    let process_tag = first.into();
    let body = if cur.rest().is_empty() {
        ""
    } else if cur.eat(" ") {
        cur.rest()
    } else {
        return Err(err(ParseErrorKind::MissingSeparator));
    };

    let mut record = LogRecord {
        wall_time,
        origin: Origin::Process,
        process_tag,
        severity: None,
        inner_stamp: None,
        logger_name: None,
        message: body.into(),
        line_no,
        raw: line.into(),
    };
    if let Some((severity, stamp, logger, message)) = node_logger_prefix(body) {
        record.severity = Some(severity);
        record.inner_stamp = Some(stamp);
        record.logger_name = Some(logger.into());
        record.message = message.into();
    }
    Ok(Line::Record(record))
}

/// Matches `[SEV] [stamp] [logger]: msg`. Anything short of the full prefix
/// is treated as plain process output.
fn node_logger_prefix(body: &str) -> Option<(Severity, Timestamp, &str, &str)> {
    let mut cur = Cursor { line: body, pos: 0 };
    let severity = Severity::from_token(cur.bracket().ok()?)?;
    if !cur.eat(" ") {
        return None;
    }
    let stamp = Timestamp::parse(cur.bracket().ok()?)?;
    if !cur.eat(" ") {
        return None;
    }
    let logger = cur.bracket().ok()?;
    if !cur.eat(":") {
        return None;
    }
    cur.eat(" ");
    Some((severity, stamp, logger, cur.rest()))
}

/// Result of parsing a whole file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub records: Vec<LogRecord>,
    pub errors: Vec<ParseError>,
    /// Blank lines plus continuation lines folded into a record.
    pub skipped: usize,
}

impl ParsedLog {
    pub fn physical_lines(&self) -> usize {
        self.records.len() + self.errors.len() + self.skipped
    }
}

/// Parses a whole log. Errors are collected per line and never abort.
///
/// Lines end at `\n`; a trailing `\r` is dropped.
pub fn parse_file(source: &str) -> ParsedLog {
    let mut out = ParsedLog::default();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        match parse_line(line, line_no) {
            Ok(Line::Record(record)) => out.records.push(record),
            Ok(Line::Blank) => out.skipped += 1,
            Ok(Line::Continuation(text)) => match out.records.last_mut() {
                Some(prev) => {
                    prev.fold_continuation(&text);
                    out.skipped += 1;
                }
                None => out.errors.push(ParseError {
                    line_no,
                    kind: ParseErrorKind::OrphanContinuation,
                    raw: text,
                }),
            },
            Err(e) => out.errors.push(e),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(line: &str) -> LogRecord {
        match parse_line(line, 1).unwrap() {
            Line::Record(r) => r,
            other => panic!("expected record, got {other:?}"),
        }
    }

    #[test]
    fn launch_line() {
        let r = record(
            "1678884558.4071975 [INFO] [waypoint_navigation_node-1]: process started with pid [116636]",
        );
        assert_eq!(r.origin, Origin::LaunchFramework);
        assert_eq!(r.severity, Some(Severity::Info));
        assert_eq!(r.process_tag, "waypoint_navigation_node-1");
        assert_eq!(r.message, "process started with pid [116636]");
        assert_eq!(r.inner_stamp, None);
        assert_eq!(r.wall_time.as_str(), "1678884558.4071975");
    }

    #[test]
    fn node_logger_line() {
        let r = record(
            "1678884561.2024031 [merlin2_demo3_node-12] [INFO] [1678884561.202155833] [merlin2.merlin2_demo3_node]: Waiting for doorbell...",
        );
        assert_eq!(r.origin, Origin::Process);
        assert_eq!(r.process_tag, "merlin2_demo3_node-12");
        assert_eq!(r.severity, Some(Severity::Info));
        assert_eq!(r.inner_stamp.as_ref().unwrap().as_str(), "1678884561.202155833");
        assert_eq!(r.logger_name.as_deref(), Some("merlin2.merlin2_demo3_node"));
        assert_eq!(r.message, "Waiting for doorbell...");
    }

    #[test]
    fn plain_process_line() {
        let r = record(
            "1678884559.4909811 [tts_node-4] RCUTILS_CONSOLE_STDOUT_LINE_BUFFERED is now ignored. Please set RCUTILS_LOGGING_USE_STDOUT",
        );
        assert_eq!(r.origin, Origin::Process);
        assert_eq!(r.severity, None);
        assert_eq!(r.logger_name, None);
        assert!(r
            .message
            .starts_with("RCUTILS_CONSOLE_STDOUT_LINE_BUFFERED is now ignored"));
    }

    #[test]
    fn indentation_survives() {
        let r = record("1678884577.7255585 [executor_node-8] \tboiling - sound");
        assert_eq!(r.message, "\tboiling - sound");
        let r = record("1678884560.4768608 [waypoint_navigation_node-1]   warnings.warn(");
        assert_eq!(r.message, "  warnings.warn(");
    }

    #[test]
    fn empty_message() {
        assert_eq!(record("1678884577.7251461 [executor_node-8] ").message, "");
        assert_eq!(record("1678884577.7251461 [executor_node-8]").message, "");
    }

    #[test]
    fn blank_and_continuation() {
        assert_eq!(parse_line("", 1).unwrap(), Line::Blank);
        assert_eq!(parse_line("   \t", 1).unwrap(), Line::Blank);
        assert_eq!(
            parse_line("1/1 [==============================] - ETA: 0s", 3).unwrap(),
            Line::Continuation("1/1 [==============================] - ETA: 0s".into())
        );
    }

    #[test]
    fn broken_brackets() {
        let e = parse_line("1678884558.4 [INFO [x]: y", 7).unwrap_err();
        assert_eq!(e.line_no, 7);
        assert_eq!(e.kind, ParseErrorKind::UnclosedBracket);
        assert_eq!(
            parse_line("1678884558.4 hello", 1).unwrap_err().kind,
            ParseErrorKind::MissingBracket
        );
        assert_eq!(
            parse_line("1678884558.4 [INFO] [launch] no colon", 1)
                .unwrap_err()
                .kind,
            ParseErrorKind::MissingSeparator
        );
        assert_eq!(
            parse_line("1678884558.4 [] x", 1).unwrap_err().kind,
            ParseErrorKind::EmptyBracket
        );
    }

    #[test]
    fn partial_node_prefix_is_plain_output() {
        let r = record("1.5 [proc-1] [WARN] something odd");
        assert_eq!(r.severity, None);
        assert_eq!(r.message, "[WARN] something odd");
    }

    #[test]
    fn warning_token_normalizes() {
        assert_eq!("WARNING".parse::<Severity>(), Ok(Severity::Warn));
        assert_eq!("warn".parse::<Severity>(), Err(NotASeverity));
        assert_eq!(record("2 [WARNING] [launch]: x").severity, Some(Severity::Warn));
    }

    #[test]
    fn fraction_digits_preserved() {
        let r = record("1678884557.6391342 [INFO] [launch]: x");
        assert_eq!(r.wall_time.as_str(), "1678884557.6391342");
        assert!((r.wall_time.seconds() - 1_678_884_557.639_134_2).abs() < 1e-6);
    }

    #[test]
    fn parse_file_folds_continuations() {
        let src = "1.0 [sound-2] \n1/1 [===] - ETA: 0s\n\n2.0 [sound-2] [INFO] [2.0] [s.n]: music\n";
        let log = parse_file(src);
        assert!(log.errors.is_empty());
        assert_eq!(log.records.len(), 2);
        assert_eq!(log.records[0].message, "\n1/1 [===] - ETA: 0s");
        assert_eq!(log.records[0].raw(), "1.0 [sound-2] ");
        assert_eq!(log.skipped, 2);
        assert_eq!(log.physical_lines(), 4);
    }

    #[test]
    fn parse_file_edge_cases() {
        assert_eq!(parse_file(""), ParsedLog::default());
        let log = parse_file("garbage");
        assert!(log.records.is_empty());
        assert_eq!(log.errors.len(), 1);
        assert_eq!(log.errors[0].line_no, 1);
        assert_eq!(log.errors[0].kind, ParseErrorKind::OrphanContinuation);
    }

    #[test]
    fn crlf_is_stripped() {
        let log = parse_file("1.0 [p-1] a\r\n2.0 [p-1] b\r\n");
        assert_eq!(log.records[0].raw(), "1.0 [p-1] a");
        assert_eq!(log.records[1].line_no, 2);
    }
}
