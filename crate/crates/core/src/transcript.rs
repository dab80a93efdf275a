//! JSON-lines transcripts shared by learning runs and human sessions.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Move,
    /// A piece was picked up but not dropped into a bucket.
    FingerSlip,
    Guess,
    EpisodeEnd,
}

/// One transcript line. Episodes and moves are numbered from 1; `move`
/// counts moves within the episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub run_id: String,
    pub episode: u32,
    #[serde(rename = "move")]
    pub move_index: u32,
    pub event: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cum_errors: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_ms: Option<u64>,
}

impl TranscriptRecord {
    pub fn event(run_id: &str, episode: u32, move_index: u32, event: EventKind) -> Self {
        Self {
            run_id: run_id.to_string(),
            episode,
            move_index,
            event,
            row: None,
            col: None,
            bucket: None,
            accepted: None,
            epsilon: None,
            cum_errors: None,
            text: None,
            status: None,
            time_ms: None,
        }
    }

    pub fn is_move(&self) -> bool {
        self.event == EventKind::Move
    }
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[TranscriptRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(records: &[TranscriptRecord]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Reads records, skipping blank lines.
pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Vec<TranscriptRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Correctness flags of the move events in play order, with the episode
/// each belongs to. Finger slips, guesses and episode markers are dropped.
pub fn move_flags(records: &[TranscriptRecord]) -> Vec<(u32, bool)> {
    records
        .iter()
        .filter(|r| r.is_move())
        .map(|r| (r.episode, r.accepted.unwrap_or(false)))
        .collect()
}
