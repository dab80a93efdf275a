//! A deliberately naive second interpreter for cross-checking [`Engine`].
//!
//! It shares only the AST with the engine. Pieces are kept by name and
//! (row, column), bucket distances are measured in floating point from
//! cell centres to the board corners, meters live in a map, and line
//! advancement is done lazily whenever the interpreter is queried.
//!
//! [`Engine`]: crate::engine::Engine

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::board::Board;
use crate::boardgen::{generate, GenParams};
use crate::engine::{Engine, EpisodeStatus, Episode};
use crate::geometry::Move;
use crate::palette::Palette;
use crate::rng::SplitMix64;
use crate::rule::{Atom, BucketSet, BucketSpec, MemoryVar, Position, RuleLine, RuleProgram};

#[derive(Clone, Debug, PartialEq)]
struct NamedPiece {
    shape: String,
    color: String,
}

/// Corner coordinates of buckets 0..=3 with the board spanning [0,6]x[0,6]
/// and y growing upwards.
const CORNERS: [(f64, f64); 4] = [(0.0, 6.0), (6.0, 6.0), (6.0, 0.0), (0.0, 0.0)];

fn distances(row: u8, col: u8) -> [f64; 4] {
    let x = col as f64 - 0.5;
    let y = row as f64 - 0.5;
    CORNERS.map(|(cx, cy)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
}

fn closest(row: u8, col: u8) -> u8 {
    let d = distances(row, col);
    let mut best = 0;
    for b in 1..4 {
        if d[b] < d[best] {
            best = b;
        }
    }
    best as u8
}

fn farthest(row: u8, col: u8) -> u8 {
    let d = distances(row, col);
    let mut best = 0;
    for b in 1..4 {
        if d[b] > d[best] {
            best = b;
        }
    }
    best as u8
}

/// Brute-force interpreter state for one rule.
#[derive(Clone, Debug)]
pub struct ReferenceGame {
    lines: Vec<RuleLine>,
    palette: Palette,
    board: BTreeMap<(u8, u8), NamedPiece>,
    line: usize,
    /// Remaining uses keyed by atom position on the current line; absent
    /// means unlimited.
    atom_left: HashMap<usize, u32>,
    line_left: Option<u32>,
    last_any: Option<u8>,
    last_by_color: HashMap<String, u8>,
    last_by_shape: HashMap<String, u8>,
}

impl ReferenceGame {
    pub fn new(program: &RuleProgram, board: &Board) -> Self {
        let mut g = Self {
            lines: program.lines.clone(),
            palette: program.palette.clone(),
            board: BTreeMap::new(),
            line: 0,
            atom_left: HashMap::new(),
            line_left: None,
            last_any: None,
            last_by_color: HashMap::new(),
            last_by_shape: HashMap::new(),
        };
        g.enter_line(0);
        g.set_board(board);
        g
    }

    /// Replaces the pieces on the board; rule memory and meters persist.
    pub fn set_board(&mut self, board: &Board) {
        self.board.clear();
        for (cell, p) in board.pieces() {
            let row = (cell - 1) / 6 + 1;
            let col = (cell - 1) % 6 + 1;
            self.board.insert(
                (row, col),
                NamedPiece {
                    shape: self.palette.shape_name(p.shape).to_string(),
                    color: self.palette.color_name(p.color).to_string(),
                },
            );
        }
    }

    fn enter_line(&mut self, line: usize) {
        self.line = line;
        self.atom_left.clear();
        for (i, atom) in self.lines[line].atoms.iter().enumerate() {
            if let Some(n) = atom.count {
                self.atom_left.insert(i, n);
            }
        }
        self.line_left = self.lines[line].count;
    }

    fn buckets_for(&self, atom: &Atom, piece: &NamedPiece, row: u8, col: u8) -> BTreeSet<u8> {
        let all: BTreeSet<u8> = (0..4).collect();
        match atom.buckets {
            BucketSpec::Any => all,
            BucketSpec::Set(set) => set.iter().collect(),
            BucketSpec::Nearby => [closest(row, col)].into(),
            BucketSpec::Remotest => [farthest(row, col)].into(),
            BucketSpec::Expr { var, offset } => {
                let base = match var {
                    MemoryVar::P => self.last_any,
                    MemoryVar::Pc => self.last_by_color.get(&piece.color).copied(),
                    MemoryVar::Ps => self.last_by_shape.get(&piece.shape).copied(),
                };
                match base {
                    None => BTreeSet::new(),
                    Some(b) => {
                        let mut v = (b as i64 + offset as i64) % 4;
                        if v < 0 {
                            v += 4;
                        }
                        [v as u8].into()
                    }
                }
            }
        }
    }

    fn atom_takes(&self, index: usize, piece: &NamedPiece, row: u8, col: u8, bucket: u8) -> bool {
        let atom = &self.lines[self.line].atoms[index];
        if self.atom_left.get(&index) == Some(&0) {
            return false;
        }
        if let Some(shapes) = &atom.shapes {
            if !shapes.iter().any(|&s| self.palette.shape_name(s) == piece.shape) {
                return false;
            }
        }
        if let Some(colors) = &atom.colors {
            if !colors.iter().any(|&c| self.palette.color_name(c) == piece.color) {
                return false;
            }
        }
        if let Some(positions) = &atom.positions {
            let cell = (row - 1) * 6 + col;
            let hit = positions.iter().any(|p| match *p {
                Position::Cell(c) => c == cell,
                Position::Row(r) => r == row,
            });
            if !hit {
                return false;
            }
        }
        self.buckets_for(atom, piece, row, col).contains(&bucket)
    }

    fn current_options(&self) -> Vec<(u8, u8, u8)> {
        let mut out = Vec::new();
        for (&(row, col), piece) in &self.board {
            for bucket in 0..4 {
                let ok = (0..self.lines[self.line].atoms.len()).any(|i| self.atom_takes(i, piece, row, col, bucket));
                if ok {
                    out.push((row, col, bucket));
                }
            }
        }
        out
    }

    /// Moves on to the next line until one has something to accept.
    /// Returns false if none does.
    fn settle(&mut self) -> bool {
        if self.board.is_empty() {
            return true;
        }
        let saved = (self.line, self.atom_left.clone(), self.line_left);
        let mut tries = 0;
        while self.current_options().is_empty() {
            if tries == self.lines.len() {
                (self.line, self.atom_left, self.line_left) = saved;
                return false;
            }
            let next = (self.line + 1) % self.lines.len();
            self.enter_line(next);
            tries += 1;
        }
        true
    }

    /// Accepted (row, col, bucket) triples, sorted.
    pub fn permitted(&mut self) -> Vec<(u8, u8, u8)> {
        if self.board.is_empty() || !self.settle() {
            return Vec::new();
        }
        self.current_options()
    }

    pub fn status(&mut self) -> EpisodeStatus {
        if self.board.is_empty() {
            EpisodeStatus::Cleared
        } else if self.settle() {
            EpisodeStatus::InPlay
        } else {
            EpisodeStatus::Stalemate
        }
    }

    /// Plays a move; returns whether it was accepted.
    pub fn play(&mut self, row: u8, col: u8, bucket: u8) -> bool {
        if self.status() != EpisodeStatus::InPlay {
            return false;
        }
        let Some(piece) = self.board.get(&(row, col)).cloned() else {
            return false;
        };
        let takers: Vec<usize> = (0..self.lines[self.line].atoms.len())
            .filter(|&i| self.atom_takes(i, &piece, row, col, bucket))
            .collect();
        if takers.is_empty() {
            return false;
        }
        self.board.remove(&(row, col));
        for i in takers {
            if let Some(n) = self.atom_left.get_mut(&i) {
                *n -= 1;
            }
        }
        self.last_any = Some(bucket);
        self.last_by_color.insert(piece.color, bucket);
        self.last_by_shape.insert(piece.shape, bucket);
        if let Some(n) = self.line_left {
            if n == 1 {
                let next = (self.line + 1) % self.lines.len();
                self.enter_line(next);
            } else {
                self.line_left = Some(n - 1);
            }
        }
        true
    }
}

/// A random rule over `palette`, exercising every syntactic feature.
pub fn random_program(rng: &mut SplitMix64, palette: &Palette) -> RuleProgram {
    let n_lines = rng.range_inclusive(1, 3) as usize;
    let lines = (0..n_lines)
        .map(|_| {
            let count = if rng.below(3) == 0 { Some(rng.range_inclusive(1, 4) as u32) } else { None };
            let n_atoms = rng.range_inclusive(1, 3) as usize;
            let atoms = (0..n_atoms).map(|_| random_atom(rng, palette)).collect();
            RuleLine { count, atoms }
        })
        .collect();
    RuleProgram::new(lines, palette.clone())
}

fn random_subset(rng: &mut SplitMix64, n: usize) -> Option<Vec<u8>> {
    if rng.below(2) == 0 {
        return None;
    }
    let k = rng.range_inclusive(1, n as u64) as usize;
    let mut v: Vec<u8> = rng.sample_distinct(n, k).into_iter().map(|i| i as u8).collect();
    v.sort_unstable();
    Some(v)
}

fn random_atom(rng: &mut SplitMix64, palette: &Palette) -> Atom {
    let count = if rng.below(3) == 0 { Some(rng.range_inclusive(1, 3) as u32) } else { None };
    let shapes = random_subset(rng, palette.num_shapes());
    let colors = random_subset(rng, palette.num_colors());
    let positions = if rng.below(3) == 0 {
        let k = rng.range_inclusive(1, 20) as usize;
        let mut v: Vec<Position> = (0..k)
            .map(|_| {
                if rng.below(4) == 0 {
                    Position::Row(rng.range_inclusive(1, 6) as u8)
                } else {
                    Position::Cell(rng.range_inclusive(1, 36) as u8)
                }
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        Some(v)
    } else {
        None
    };
    let buckets = match rng.below(6) {
        0 => BucketSpec::Any,
        1 | 2 => {
            let k = rng.range_inclusive(1, 4) as usize;
            BucketSpec::Set(BucketSet::from_buckets(rng.sample_distinct(4, k).into_iter().map(|b| b as u8)))
        }
        3 => {
            let var = [MemoryVar::P, MemoryVar::Pc, MemoryVar::Ps][rng.index(3)];
            BucketSpec::Expr { var, offset: rng.range_inclusive(0, 12) as i32 - 6 }
        }
        4 => BucketSpec::Nearby,
        _ => BucketSpec::Remotest,
    };
    Atom { count, shapes, colors, positions, buckets }
}

/// Outcome of comparing the engine with the reference interpreter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProbeReport {
    pub probes: u64,
    pub disagreements: Vec<String>,
}

impl ProbeReport {
    pub fn merge(&mut self, other: ProbeReport) {
        self.probes += other.probes;
        self.disagreements.extend(other.disagreements);
    }
}

/// Keeps at most this many disagreement descriptions.
const MAX_REPORTED: usize = 20;

fn random_board_params(rng: &mut SplitMix64, palette: &Palette) -> GenParams {
    let max_pieces = rng.range_inclusive(1, 36) as usize;
    let min_pieces = rng.range_inclusive(1, max_pieces as u64) as usize;
    let max_shapes = rng.range_inclusive(1, palette.num_shapes() as u64) as usize;
    let max_colors = rng.range_inclusive(1, palette.num_colors() as u64) as usize;
    GenParams {
        min_pieces,
        max_pieces,
        min_shapes: 1,
        max_shapes,
        min_colors: 1,
        max_colors,
        cover_all: false,
    }
}

/// Plays random games of `program` side by side in the engine and the
/// reference interpreter. Every probe compares the full permitted-move set
/// and episode status in the current state, then plays one move (a permitted
/// one half of the time) and compares the acceptance verdicts. Boards are
/// sometimes swapped mid-rule so that state carried across boards is probed
/// too.
pub fn compare_with_engine(program: &RuleProgram, probes: u64, seed: u64) -> ProbeReport {
    let engine = Engine::new(program.clone());
    let palette = &program.palette;
    let mut rng = SplitMix64::new(seed);
    let mut report = ProbeReport::default();
    let disagree = |report: &mut ProbeReport, msg: String| {
        if report.disagreements.len() < MAX_REPORTED {
            report.disagreements.push(msg);
        }
    };

    let mut params = random_board_params(&mut rng, palette);
    let board = generate(&params, palette, &mut rng).expect("feasible params");
    let mut episode = Episode::new(&engine, board, None);
    let mut reference = ReferenceGame::new(program, &board);
    let mut history: Vec<Move> = Vec::new();

    while report.probes < probes {
        report.probes += 1;
        let expected = reference.permitted();
        let got: Vec<(u8, u8, u8)> = episode.permitted_moves().moves().map(|m| (m.row, m.col, m.bucket)).collect();
        let ref_status = reference.status();
        if expected != got || ref_status != episode.status() {
            disagree(
                &mut report,
                format!(
                    "rule `{}` after moves {:?}: engine {:?} {:?}, reference {:?} {:?}",
                    program,
                    history.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                    episode.status(),
                    got,
                    ref_status,
                    expected
                ),
            );
            // Resynchronise on a fresh board.
            history.clear();
            let board = generate(&params, palette, &mut rng).expect("feasible params");
            episode = Episode::new(&engine, board, None);
            reference = ReferenceGame::new(program, &board);
            continue;
        }

        if episode.status().is_terminal() {
            history.clear();
            if rng.below(4) == 0 {
                params = random_board_params(&mut rng, palette);
            }
            let board = generate(&params, palette, &mut rng).expect("feasible params");
            if rng.below(2) == 0 {
                // Carry rule state over to the next board.
                let state = episode.into_state();
                episode = Episode::resume(&engine, state, board, None);
                reference.set_board(&board);
            } else {
                episode = Episode::new(&engine, board, None);
                reference = ReferenceGame::new(program, &board);
            }
            continue;
        }

        let mv = if !got.is_empty() && rng.below(2) == 0 {
            let (r, c, b) = got[rng.index(got.len())];
            Move::new(r, c, b).expect("in range")
        } else {
            Move::from_action_index(rng.index(144)).expect("in range")
        };
        history.push(mv);
        let accepted = episode.step(mv).accepted;
        let ref_accepted = reference.play(mv.row, mv.col, mv.bucket);
        if accepted != ref_accepted {
            disagree(
                &mut report,
                format!("rule `{program}` move {mv}: engine accepted={accepted}, reference accepted={ref_accepted}"),
            );
        }
    }
    report
}
