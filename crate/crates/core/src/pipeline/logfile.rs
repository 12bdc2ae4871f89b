//! Append-only prediction log.
//!
//! One record per line, tab-separated, fields in this order:
//!
//! ```text
//! ts_iso8601  image_id  event  predicted_label  confidence  elapsed_ms  attempt  error
//! ```
//!
//! `event` is `predicted`, `retry` or `dead_letter`. `confidence` has four
//! decimals, `elapsed_ms` three. Absent values are written as `-`. Image
//! ids are pseudonymous tokens; file paths are never written.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogEvent {
    Predicted,
    Retry,
    DeadLetter,
}

impl LogEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Predicted => "predicted",
            Self::Retry => "retry",
            Self::DeadLetter => "dead_letter",
        }
    }

    /// Predicted and dead-letter entries end an image's processing.
    pub fn is_terminal(self) -> bool {
        !matches!(self, Self::Retry)
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "predicted" => Self::Predicted,
            "retry" => Self::Retry,
            "dead_letter" => Self::DeadLetter,
            _ => return None,
        })
    }
}

impl fmt::Display for LogEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub ts: String,
    pub image_id: String,
    pub event: LogEvent,
    pub predicted_label: Option<String>,
    pub confidence: Option<f64>,
    pub elapsed_ms: f64,
    pub attempt: u32,
    pub error: Option<String>,
}

const ABSENT: &str = "-";

impl LogEntry {
    pub fn now(image_id: &str, event: LogEvent, elapsed_ms: f64, attempt: u32) -> Self {
        Self {
            ts: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            image_id: image_id.to_string(),
            event,
            predicted_label: None,
            confidence: None,
            elapsed_ms,
            attempt,
            error: None,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.3}\t{}\t{}",
            self.ts,
            self.image_id,
            self.event,
            self.predicted_label.as_deref().unwrap_or(ABSENT),
            self.confidence
                .map(|c| format!("{c:.4}"))
                .unwrap_or_else(|| ABSENT.to_string()),
            self.elapsed_ms,
            self.attempt,
            self.error.as_deref().unwrap_or(ABSENT),
        )
    }

    pub fn parse_line(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return None;
        }
        let opt = |s: &str| (s != ABSENT).then(|| s.to_string());
        Some(Self {
            ts: f[0].to_string(),
            image_id: f[1].to_string(),
            event: LogEvent::parse(f[2])?,
            predicted_label: opt(f[3]),
            confidence: match f[4] {
                ABSENT => None,
                s => Some(s.parse().ok()?),
            },
            elapsed_ms: f[5].parse().ok()?,
            attempt: f[6].parse().ok()?,
            error: opt(f[7]),
        })
    }
}

/// Line-buffered writer; each entry is flushed before `append` returns.
pub struct PredictionLog {
    path: PathBuf,
    file: File,
}

impl PredictionLog {
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, entry: &LogEntry) -> io::Result<()> {
        let mut line = entry.to_line();
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

pub fn read_log(path: &Path) -> io::Result<Vec<LogEntry>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            LogEntry::parse_line(l)
                .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "malformed log line"))
        })
        .collect()
}
