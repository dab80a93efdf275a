//! Rule execution: move adjudication and rule-state bookkeeping.
//!
//! Two kinds of line advance exist. A line whose count reaches zero hands
//! over to the next line immediately after the move that exhausted it.
//! A line that merely has no acceptable move left (exhausted atoms, or no
//! matching pieces) is advanced lazily by [`Engine::ensure_playable`],
//! which runs after every accepted move and when an episode starts.
//! Activating a line, including wrap-around to the first line, resets all
//! of its atom counts and its line count.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::board::{Board, Piece};
use crate::geometry::{nearest_bucket, remotest_bucket, ActionSet, Move, NUM_BUCKETS};
use crate::rule::{BucketSpec, MemoryVar, RuleProgram};

/// Live interpreter state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuleState {
    pub active_line: usize,
    /// Remaining count of each atom on the active line; `None` = unbounded.
    pub atom_remaining: Vec<Option<u32>>,
    /// Remaining count of the active line; `None` = unmetered.
    pub line_remaining: Option<u32>,
    pub p: Option<u8>,
    /// Indexed by palette color.
    pub pc: Vec<Option<u8>>,
    /// Indexed by palette shape.
    pub ps: Vec<Option<u8>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeStatus {
    InPlay,
    Cleared,
    MoveLimitReached,
    Stalemate,
}

impl EpisodeStatus {
    pub fn is_terminal(self) -> bool {
        self != EpisodeStatus::InPlay
    }
}

/// No line of the rule accepts any (piece, bucket) on the current board.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stalemate;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjudication {
    pub accepted: bool,
    pub state: RuleState,
    pub board: Board,
    pub status: EpisodeStatus,
    /// The piece taken off the board, when accepted.
    pub removed: Option<Piece>,
}

/// Per-atom matching data precomputed from the AST.
#[derive(Clone, Debug)]
struct CompiledAtom {
    count: Option<u32>,
    shape_mask: u32,
    color_mask: u32,
    cell_mask: u64,
    buckets: BucketSpec,
}

fn index_mask(items: &Option<Vec<u8>>) -> u32 {
    items.as_ref().map_or(u32::MAX, |v| v.iter().fold(0, |m, &i| m | 1 << i))
}

/// A rule program prepared for execution.
#[derive(Clone, Debug)]
pub struct Engine {
    program: Arc<RuleProgram>,
    lines: Vec<(Option<u32>, Vec<CompiledAtom>)>,
}

impl Engine {
    pub fn new(program: RuleProgram) -> Self {
        let lines = program
            .lines
            .iter()
            .map(|line| {
                let atoms = line
                    .atoms
                    .iter()
                    .map(|a| CompiledAtom {
                        count: a.count,
                        shape_mask: index_mask(&a.shapes),
                        color_mask: index_mask(&a.colors),
                        cell_mask: a.position_mask(),
                        buckets: a.buckets,
                    })
                    .collect();
                (line.count, atoms)
            })
            .collect();
        Self { program: Arc::new(program), lines }
    }

    pub fn program(&self) -> &RuleProgram {
        &self.program
    }

    /// State at the start of play: first line active with fresh counts and
    /// no remembered buckets.
    pub fn initial_state(&self) -> RuleState {
        let mut s = RuleState {
            active_line: 0,
            atom_remaining: Vec::new(),
            line_remaining: None,
            p: None,
            pc: vec![None; self.program.palette.num_colors()],
            ps: vec![None; self.program.palette.num_shapes()],
        };
        self.activate(&mut s, 0);
        s
    }

    fn activate(&self, state: &mut RuleState, line: usize) {
        let (count, atoms) = &self.lines[line];
        state.active_line = line;
        state.line_remaining = *count;
        state.atom_remaining.clear();
        state.atom_remaining.extend(atoms.iter().map(|a| a.count));
    }

    fn advance(&self, state: &mut RuleState) {
        let next = (state.active_line + 1) % self.lines.len();
        self.activate(state, next);
    }

    /// 4-bit mask of the buckets `spec` names for this piece.
    fn resolve_bucket(spec: BucketSpec, piece: Piece, cell: u8, state: &RuleState) -> u8 {
        match spec {
            BucketSpec::Any => 0b1111,
            BucketSpec::Set(set) => set.bits(),
            BucketSpec::Nearby => 1 << nearest_bucket(cell),
            BucketSpec::Remotest => 1 << remotest_bucket(cell),
            BucketSpec::Expr { var, offset } => {
                let base = match var {
                    MemoryVar::P => state.p,
                    MemoryVar::Pc => state.pc.get(piece.color as usize).copied().flatten(),
                    MemoryVar::Ps => state.ps.get(piece.shape as usize).copied().flatten(),
                };
                match base {
                    // Undefined memory: the atom accepts nothing.
                    None => 0,
                    Some(b) => {
                        let v = (b as i64 + offset as i64).rem_euclid(NUM_BUCKETS as i64);
                        1 << v
                    }
                }
            }
        }
    }

    /// Whether atom `atom` of the active line accepts `piece` at `cell`
    /// into `bucket` under `state`.
    pub fn atom_accepts(&self, atom: usize, piece: Piece, cell: u8, bucket: u8, state: &RuleState) -> bool {
        self.accepting_buckets(atom, piece, cell, state) & (1 << bucket) != 0
    }

    /// 4-bit mask of buckets atom `atom` accepts for this piece right now.
    fn accepting_buckets(&self, atom: usize, piece: Piece, cell: u8, state: &RuleState) -> u8 {
        let a = &self.lines[state.active_line].1[atom];
        if state.atom_remaining[atom] == Some(0) {
            return 0;
        }
        if a.shape_mask & (1 << piece.shape) == 0
            || a.color_mask & (1 << piece.color) == 0
            || a.cell_mask & (1 << (cell - 1)) == 0
        {
            return 0;
        }
        Self::resolve_bucket(a.buckets, piece, cell, state)
    }

    fn piece_buckets(&self, piece: Piece, cell: u8, state: &RuleState) -> u8 {
        (0..self.lines[state.active_line].1.len()).fold(0, |m, i| m | self.accepting_buckets(i, piece, cell, state))
    }

    fn has_move(&self, state: &RuleState, board: &Board) -> bool {
        board.pieces().any(|(cell, piece)| self.piece_buckets(piece, cell, state) != 0)
    }

    /// Advances past lines with no acceptable move. Returns the (possibly
    /// advanced) state, or [`Stalemate`] when a full cycle of freshly reset
    /// lines finds nothing to accept.
    pub fn ensure_playable(&self, state: &RuleState, board: &Board) -> Result<RuleState, Stalemate> {
        let mut s = state.clone();
        self.ensure_playable_in_place(&mut s, board)?;
        Ok(s)
    }

    /// On stalemate `state` is left as it was.
    fn ensure_playable_in_place(&self, state: &mut RuleState, board: &Board) -> Result<(), Stalemate> {
        if self.has_move(state, board) {
            return Ok(());
        }
        let original = state.clone();
        for _ in 0..self.lines.len() {
            self.advance(state);
            if self.has_move(state, board) {
                return Ok(());
            }
        }
        *state = original;
        Err(Stalemate)
    }

    /// Every move that would be accepted right now. Does not advance lines;
    /// `state` is expected to be playable already.
    pub fn permitted_moves(&self, state: &RuleState, board: &Board) -> ActionSet {
        let mut set = ActionSet::empty();
        for (cell, piece) in board.pieces() {
            let m = self.piece_buckets(piece, cell, state);
            for b in 0..NUM_BUCKETS as u8 {
                if m & (1 << b) != 0 {
                    set.insert_index((cell as usize - 1) * NUM_BUCKETS + b as usize);
                }
            }
        }
        set
    }

    /// Judges `mv`. Rejected moves (including moves aimed at an empty cell)
    /// leave state and board untouched. `state` must already be playable.
    pub fn adjudicate(&self, state: &RuleState, board: &Board, mv: Move) -> Adjudication {
        let mut state = state.clone();
        let mut board = *board;
        let (accepted, removed, status) = self.adjudicate_in_place(&mut state, &mut board, mv);
        Adjudication { accepted, state, board, status, removed }
    }

    fn adjudicate_in_place(
        &self,
        state: &mut RuleState,
        board: &mut Board,
        mv: Move,
    ) -> (bool, Option<Piece>, EpisodeStatus) {
        let cell = mv.cell();
        let Some(piece) = board.get(cell) else {
            return (false, None, EpisodeStatus::InPlay);
        };
        let n_atoms = self.lines[state.active_line].1.len();
        let satisfied: Vec<usize> = (0..n_atoms)
            .filter(|&i| self.atom_accepts(i, piece, cell, mv.bucket, state))
            .collect();
        if satisfied.is_empty() {
            return (false, None, EpisodeStatus::InPlay);
        }

        board.remove(cell);
        for i in satisfied {
            if let Some(n) = state.atom_remaining[i].as_mut() {
                *n -= 1;
            }
        }
        state.p = Some(mv.bucket);
        state.pc[piece.color as usize] = Some(mv.bucket);
        state.ps[piece.shape as usize] = Some(mv.bucket);
        if let Some(n) = state.line_remaining.as_mut() {
            *n -= 1;
            if *n == 0 {
                self.advance(state);
            }
        }

        let status = if board.is_empty() {
            EpisodeStatus::Cleared
        } else if self.ensure_playable_in_place(state, board).is_err() {
            EpisodeStatus::Stalemate
        } else {
            EpisodeStatus::InPlay
        };
        (true, Some(piece), status)
    }
}

/// Result of one [`Episode::step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub removed: Option<Piece>,
    pub status: EpisodeStatus,
}

/// One board played under a rule, with an optional move limit.
#[derive(Clone, Debug)]
pub struct Episode<'e> {
    engine: &'e Engine,
    state: RuleState,
    board: Board,
    status: EpisodeStatus,
    moves: u32,
    move_limit: Option<u32>,
}

impl<'e> Episode<'e> {
    /// Starts from the rule's initial state.
    pub fn new(engine: &'e Engine, board: Board, move_limit: Option<u32>) -> Self {
        Self::resume(engine, engine.initial_state(), board, move_limit)
    }

    /// Starts a new board while keeping an existing rule state, as when a
    /// sequence carries over from a previous board.
    pub fn resume(engine: &'e Engine, state: RuleState, board: Board, move_limit: Option<u32>) -> Self {
        let mut ep = Self { engine, state, board, status: EpisodeStatus::InPlay, moves: 0, move_limit };
        if ep.board.is_empty() {
            ep.status = EpisodeStatus::Cleared;
        } else if engine.ensure_playable_in_place(&mut ep.state, &ep.board).is_err() {
            ep.status = EpisodeStatus::Stalemate;
        }
        ep
    }

    pub fn state(&self) -> &RuleState {
        &self.state
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn moves(&self) -> u32 {
        self.moves
    }

    pub fn engine(&self) -> &'e Engine {
        self.engine
    }

    pub fn permitted_moves(&self) -> ActionSet {
        if self.status.is_terminal() {
            return ActionSet::empty();
        }
        self.engine.permitted_moves(&self.state, &self.board)
    }

    /// Plays `mv`. Terminal episodes ignore further moves.
    pub fn step(&mut self, mv: Move) -> StepOutcome {
        if self.status.is_terminal() {
            return StepOutcome { accepted: false, removed: None, status: self.status };
        }
        let (accepted, removed, status) = self.engine.adjudicate_in_place(&mut self.state, &mut self.board, mv);
        self.moves += 1;
        self.status = status;
        if !self.status.is_terminal() && self.move_limit.is_some_and(|l| self.moves >= l) {
            self.status = EpisodeStatus::MoveLimitReached;
        }
        StepOutcome { accepted, removed, status: self.status }
    }

    pub fn into_state(self) -> RuleState {
        self.state
    }
}
