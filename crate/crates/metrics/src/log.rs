//! Per-player and per-run summaries: m*, TCE and convergence.

use gohr_core::transcript::TranscriptRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("run has {episodes} episodes, the convergence window needs {window}")]
    RunTooShort { episodes: usize, window: usize },
    #[error("per-episode error and move counts differ in length ({errors} vs {moves})")]
    LengthMismatch { errors: usize, moves: usize },
    #[error("episode {episode} has {errors} errors but only {moves} moves")]
    TooManyErrors { episode: usize, errors: u32, moves: u32 },
}

/// Correctness flags in play order across all episodes of one rule, with
/// the episode each move belongs to.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveLog {
    flags: Vec<bool>,
    episodes: Vec<u32>,
}

impl MoveLog {
    /// A single-episode log.
    pub fn from_flags(flags: &[bool]) -> Self {
        Self { flags: flags.to_vec(), episodes: vec![1; flags.len()] }
    }

    /// Builds the log from transcript records. Only move events count, so
    /// finger slips never shift move indices.
    pub fn from_records(records: &[TranscriptRecord]) -> Self {
        let mut log = Self::default();
        for (ep, ok) in gohr_core::transcript::move_flags(records) {
            log.push(ep, ok);
        }
        log
    }

    pub fn push(&mut self, episode: u32, accepted: bool) {
        self.flags.push(accepted);
        self.episodes.push(episode);
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn errors(&self) -> usize {
        self.flags.iter().filter(|&&f| !f).count()
    }

    /// `(errors, moves)` per episode in first-seen order.
    pub fn episode_tallies(&self) -> (Vec<u32>, Vec<u32>) {
        let (mut errors, mut moves) = (Vec::new(), Vec::new());
        let mut current = None;
        for (&ep, &ok) in self.episodes.iter().zip(&self.flags) {
            if current != Some(ep) {
                current = Some(ep);
                errors.push(0);
                moves.push(0);
            }
            *moves.last_mut().unwrap() += 1;
            if !ok {
                *errors.last_mut().unwrap() += 1;
            }
        }
        (errors, moves)
    }

    pub fn m_star(&self) -> Option<usize> {
        m_star(&self.flags, crate::STREAK_LEN)
    }
}

/// 1-based index of the first move of the first run of at least
/// `streak_len` consecutive correct moves, or `None` if there is none.
/// Streaks may span episode boundaries.
pub fn m_star(flags: &[bool], streak_len: usize) -> Option<usize> {
    let mut run = 0;
    for (i, &ok) in flags.iter().enumerate() {
        if ok {
            run += 1;
            if run >= streak_len.max(1) {
                return Some(i + 2 - run);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Probability that a given window of `streak_len` moves is all correct
/// when each move is correct with probability `p_correct`.
pub fn streak_false_positive(p_correct: f64, streak_len: u32) -> f64 {
    p_correct.powi(streak_len as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tce {
    pub tce: u64,
    pub converged: bool,
    pub window_errors: u64,
    pub window_moves: u64,
}

/// Terminal cumulative error of a run, with convergence judged on the
/// error rate over the final `window` episodes.
pub fn tce(episode_errors: &[u32], episode_moves: &[u32], window: usize, threshold: f64) -> Result<Tce, MetricError> {
    if episode_errors.len() != episode_moves.len() {
        return Err(MetricError::LengthMismatch { errors: episode_errors.len(), moves: episode_moves.len() });
    }
    for (i, (&e, &m)) in episode_errors.iter().zip(episode_moves).enumerate() {
        if e > m {
            return Err(MetricError::TooManyErrors { episode: i + 1, errors: e, moves: m });
        }
    }
    let n = episode_errors.len();
    if n < window || n == 0 {
        return Err(MetricError::RunTooShort { episodes: n, window });
    }
    let total: u64 = episode_errors.iter().map(|&e| e as u64).sum();
    let window_errors: u64 = episode_errors[n - window..].iter().map(|&e| e as u64).sum();
    let window_moves: u64 = episode_moves[n - window..].iter().map(|&m| m as u64).sum();
    let rate = if window_moves == 0 { 0.0 } else { window_errors as f64 / window_moves as f64 };
    Ok(Tce { tce: total, converged: rate < threshold, window_errors, window_moves })
}

/// One player or run, reduced to the value that enters comparisons.
/// `value` is `None` for Never (m*) or did-not-converge (TCE); such
/// entries receive a placeholder at comparison time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub value: Option<f64>,
    pub episodes: usize,
    pub total_moves: u64,
}

impl RunSummary {
    pub fn is_placeholder(&self) -> bool {
        self.value.is_none()
    }

    pub fn from_m_star(run_id: &str, log: &MoveLog) -> Self {
        let (_, moves) = log.episode_tallies();
        Self {
            run_id: run_id.to_string(),
            value: log.m_star().map(|m| m as f64),
            episodes: moves.len(),
            total_moves: log.len() as u64,
        }
    }

    pub fn from_tce(run_id: &str, t: &Tce, episodes: usize, total_moves: u64) -> Self {
        Self {
            run_id: run_id.to_string(),
            value: t.converged.then_some(t.tce as f64),
            episodes,
            total_moves,
        }
    }
}
