//! The JSONL interaction log: one tagged object per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::eval::EvalRecord;
use crate::error::{Error, Result};
use crate::learning::InteractionRecord;

pub const LOG_FORMAT: &str = "refgame-log v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub master_seed: u64,
    pub rounds: u32,
    pub bootstrap_resamples: usize,
    pub variants: Vec<String>,
    pub marked_words: Vec<String>,
    /// Name of the corpus similarity used for language comparisons.
    pub corpus_divergence: String,
    pub note: String,
}

/// Comprehension outcome of an offline-trained model on a held-out game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineRecord {
    pub round: u32,
    pub system: String,
    pub game: u64,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogLine {
    Header(LogHeader),
    Interaction { record: InteractionRecord, words: Vec<String> },
    Eval(EvalRecord),
    Offline(OfflineRecord),
}

pub fn write_lines<W: Write>(lines: &[LogLine], mut out: W) -> Result<()> {
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_lines<R: BufRead>(input: R) -> Result<Vec<LogLine>> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        lines.push(parsed);
    }
    Ok(lines)
}
