//! Session state machine: boards, adjudication, the guess step and the
//! episode flow, independent of HTTP.

use std::time::Instant;

use gohr_core::boardgen::{generate, GenParams};
use gohr_core::engine::RuleState;
use gohr_core::geometry::{row_col, Move};
use gohr_core::transcript::{EventKind, TranscriptRecord};
use gohr_core::{builtin_rule, Board, Engine, EpisodeStatus, SplitMix64};
use gohr_metrics::{m_star, STREAK_LEN};
use serde::{Deserialize, Serialize};

/// Episodes that must be played on a rule before moving on.
pub const MIN_EPISODES: u32 = 3;
/// Hard cap on episodes per rule.
pub const MAX_EPISODES: u32 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Moves are accepted.
    Playing,
    /// The board is finished; a guess must be submitted.
    AwaitingGuess,
    /// At least the mandatory episodes are done; the player may start a
    /// bonus episode (below the cap) or go to the next rule.
    Choosing,
    /// Every rule of the session is done.
    Finished,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionError {
    UnknownRule(String),
    NoRules,
    BadGenParams(String),
    OutOfRange(String),
    /// The request does not fit the current phase.
    Conflict(String),
}

impl std::fmt::Display for SessionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SessionError::UnknownRule(r) => write!(f, "unknown rule `{r}`"),
            SessionError::NoRules => write!(f, "a session needs at least one rule"),
            SessionError::BadGenParams(m) => write!(f, "invalid board parameters: {m}"),
            SessionError::OutOfRange(m) => write!(f, "{m}"),
            SessionError::Conflict(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPiece {
    pub row: u8,
    pub col: u8,
    pub shape: String,
    pub color: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub row: u8,
    pub col: u8,
}

/// What the client renders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub session_id: String,
    pub rule: String,
    pub rule_index: usize,
    pub rules: Vec<String>,
    pub episode: u32,
    pub phase: Phase,
    pub episode_status: EpisodeStatus,
    pub board_state: Vec<CellPiece>,
    /// Cells cleared so far this episode, in clearing order.
    pub cleared_cells: Vec<CellRef>,
    pub moves_this_episode: u32,
    pub can_continue: bool,
    pub has_next_rule: bool,
    /// First-streak index over the current rule's moves so far.
    pub m_star: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MoveResult {
    pub accepted: bool,
    #[serde(flatten)]
    pub view: SessionView,
}

struct RulePlay {
    name: String,
    engine: Engine,
    params: GenParams,
    rng: SplitMix64,
    state: RuleState,
    board: Board,
    status: EpisodeStatus,
    episode: u32,
    moves: u32,
    cleared: Vec<u8>,
    flags: Vec<bool>,
}

impl RulePlay {
    fn new(name: &str, params: Option<&GenParams>, seed: u64, index: usize) -> Result<Self, SessionError> {
        let program = builtin_rule(name).map_err(|_| SessionError::UnknownRule(name.to_string()))?;
        let params =
            params.cloned().unwrap_or_else(|| GenParams::human_default(&program.palette, program.is_stationary()));
        params.validate(&program.palette).map_err(|e| SessionError::BadGenParams(e.to_string()))?;
        let engine = Engine::new(program);
        let state = engine.initial_state();
        let mut play = Self {
            name: name.to_string(),
            rng: SplitMix64::stream(seed, 1 + index as u64),
            engine,
            params,
            state,
            board: Board::empty(),
            status: EpisodeStatus::InPlay,
            episode: 0,
            moves: 0,
            cleared: Vec::new(),
            flags: Vec::new(),
        };
        play.next_board()?;
        Ok(play)
    }

    /// Deals the next board, keeping the rule state so that sequences carry
    /// over between boards.
    fn next_board(&mut self) -> Result<(), SessionError> {
        let palette = &self.engine.program().palette;
        self.board =
            generate(&self.params, palette, &mut self.rng).map_err(|e| SessionError::BadGenParams(e.to_string()))?;
        self.episode += 1;
        self.moves = 0;
        self.cleared.clear();
        self.status = match self.engine.ensure_playable(&self.state, &self.board) {
            Ok(s) => {
                self.state = s;
                EpisodeStatus::InPlay
            }
            Err(_) => EpisodeStatus::Stalemate,
        };
        Ok(())
    }
}

pub struct Session {
    id: String,
    rules: Vec<String>,
    seed: u64,
    params: Option<GenParams>,
    rule_index: usize,
    play: RulePlay,
    phase: Phase,
    started: Instant,
    transcript: Vec<TranscriptRecord>,
}

fn check_cell(row: i64, col: i64) -> Result<(u8, u8), SessionError> {
    if !(1..=6).contains(&row) {
        return Err(SessionError::OutOfRange(format!("row {row} out of range 1..=6")));
    }
    if !(1..=6).contains(&col) {
        return Err(SessionError::OutOfRange(format!("column {col} out of range 1..=6")));
    }
    Ok((row as u8, col as u8))
}

impl Session {
    pub fn new(id: String, rules: Vec<String>, params: Option<GenParams>, seed: u64) -> Result<Self, SessionError> {
        let first = rules.first().ok_or(SessionError::NoRules)?;
        for r in &rules {
            builtin_rule(r).map_err(|_| SessionError::UnknownRule(r.clone()))?;
        }
        let play = RulePlay::new(first, params.as_ref(), seed, 0)?;
        let mut s = Self {
            id,
            rules,
            seed,
            params,
            rule_index: 0,
            play,
            phase: Phase::Playing,
            started: Instant::now(),
            transcript: Vec::new(),
        };
        s.settle_phase();
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.transcript
    }

    /// Run id used in transcript records of the current rule.
    pub fn run_id(&self) -> String {
        format!("{}/{}", self.id, self.play.name)
    }

    fn record(&mut self, kind: EventKind) -> &mut TranscriptRecord {
        let mut r = TranscriptRecord::event(&self.run_id(), self.play.episode, self.play.moves, kind);
        r.time_ms = Some(self.started.elapsed().as_millis() as u64);
        self.transcript.push(r);
        self.transcript.last_mut().unwrap()
    }

    /// A board with no legal move ends like a cleared one.
    fn settle_phase(&mut self) {
        if self.phase == Phase::Playing && self.play.status.is_terminal() {
            self.phase = Phase::AwaitingGuess;
            let status = serde_json::to_value(self.play.status).expect("status serializes");
            self.record(EventKind::EpisodeEnd).status = status.as_str().map(str::to_string);
        }
    }

    fn require(&self, phase: Phase, what: &str) -> Result<(), SessionError> {
        if self.phase != phase {
            return Err(SessionError::Conflict(format!("cannot {what} while {:?}", self.phase)));
        }
        Ok(())
    }

    /// Adjudicates a move and returns whether it was accepted.
    pub fn play_move(&mut self, row: i64, col: i64, bucket: i64) -> Result<bool, SessionError> {
        let (row, col) = check_cell(row, col)?;
        if !(0..=3).contains(&bucket) {
            return Err(SessionError::OutOfRange(format!("bucket {bucket} out of range 0..=3")));
        }
        self.require(Phase::Playing, "move")?;
        let mv = Move::new(row, col, bucket as u8).map_err(|e| SessionError::OutOfRange(e.to_string()))?;
        let adj = self.play.engine.adjudicate(&self.play.state, &self.play.board, mv);
        let play = &mut self.play;
        play.moves += 1;
        play.flags.push(adj.accepted);
        if adj.accepted {
            play.state = adj.state;
            play.board = adj.board;
            play.status = adj.status;
            play.cleared.push(mv.cell());
        }
        let cum = play.flags.iter().filter(|&&f| !f).count() as u64;
        let r = self.record(EventKind::Move);
        r.row = Some(row);
        r.col = Some(col);
        r.bucket = Some(bucket as u8);
        r.accepted = Some(adj.accepted);
        r.cum_errors = Some(cum);
        self.settle_phase();
        Ok(adj.accepted)
    }

    /// A piece was picked up but not delivered to a bucket.
    pub fn finger_slip(&mut self, row: i64, col: i64) -> Result<(), SessionError> {
        let (row, col) = check_cell(row, col)?;
        self.require(Phase::Playing, "record a finger slip")?;
        let r = self.record(EventKind::FingerSlip);
        r.row = Some(row);
        r.col = Some(col);
        Ok(())
    }

    /// Stores the guess for the finished board and moves the flow on: the
    /// mandatory episodes follow automatically, later ones wait for a choice.
    pub fn guess(&mut self, text: &str) -> Result<(), SessionError> {
        self.require(Phase::AwaitingGuess, "guess")?;
        self.record(EventKind::Guess).text = Some(text.to_string());
        if self.play.episode < MIN_EPISODES {
            self.start_episode()?;
        } else {
            self.phase = Phase::Choosing;
        }
        Ok(())
    }

    fn start_episode(&mut self) -> Result<(), SessionError> {
        self.play.next_board()?;
        self.phase = Phase::Playing;
        self.settle_phase();
        Ok(())
    }

    /// Starts a bonus episode on the current rule.
    pub fn continue_rule(&mut self) -> Result<(), SessionError> {
        self.require(Phase::Choosing, "start another episode")?;
        if self.play.episode >= MAX_EPISODES {
            return Err(SessionError::Conflict(format!("all {MAX_EPISODES} episodes of this rule are played")));
        }
        self.start_episode()
    }

    /// Moves to the next rule of the session, or finishes the session.
    pub fn next_rule(&mut self) -> Result<(), SessionError> {
        self.require(Phase::Choosing, "change rule")?;
        if self.rule_index + 1 >= self.rules.len() {
            self.phase = Phase::Finished;
            return Ok(());
        }
        self.rule_index += 1;
        self.play = RulePlay::new(&self.rules[self.rule_index], self.params.as_ref(), self.seed, self.rule_index)?;
        self.phase = Phase::Playing;
        self.settle_phase();
        Ok(())
    }

    pub fn view(&self) -> SessionView {
        let palette = &self.play.engine.program().palette;
        let board_state = self
            .play
            .board
            .pieces()
            .map(|(cell, p)| {
                let (row, col) = row_col(cell).expect("board cells are in range");
                CellPiece {
                    row,
                    col,
                    shape: palette.shape_name(p.shape).to_string(),
                    color: palette.color_name(p.color).to_string(),
                }
            })
            .collect();
        let cleared_cells = self
            .play
            .cleared
            .iter()
            .map(|&c| {
                let (row, col) = row_col(c).expect("board cells are in range");
                CellRef { row, col }
            })
            .collect();
        SessionView {
            session_id: self.id.clone(),
            rule: self.play.name.clone(),
            rule_index: self.rule_index,
            rules: self.rules.clone(),
            episode: self.play.episode,
            phase: self.phase,
            episode_status: self.play.status,
            board_state,
            cleared_cells,
            moves_this_episode: self.play.moves,
            can_continue: self.phase == Phase::Choosing && self.play.episode < MAX_EPISODES,
            has_next_rule: self.rule_index + 1 < self.rules.len(),
            m_star: m_star(&self.play.flags, STREAK_LEN),
        }
    }
}
