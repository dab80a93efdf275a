//! The hidden-rule language: AST, parser, printer and the built-in corpus.
//!
//! A rule is one or more lines; a line is an optional count followed by
//! one or more atoms `(count, shapes, colors, positions, buckets)`.
//!
//! ```text
//! # clockwise, starting at bucket 0
//! (1,*,*,*, 0)
//! (*,*,*,*, p+1)
//! ```
//!
//! Newlines inside parentheses or brackets do not end a line, `#` starts a
//! comment that runs to the end of the physical line, and keywords are
//! case-insensitive.

mod builtin;
mod lexer;
mod parser;
mod print;

use std::fmt;

use crate::geometry::NUM_BUCKETS;
use crate::palette::Palette;

pub use builtin::{builtin_rule, builtin_source, UnknownRule, BUILTIN_NAMES};
pub use parser::{parse_rule, ParseError, ParseErrorKind};
pub use print::print_rule;

/// A position selector: a single cell or a whole row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Cell(u8),
    Row(u8),
}

impl Position {
    /// Bitmask over cells (bit `c - 1` = cell `c`).
    pub fn cell_mask(self) -> u64 {
        match self {
            Position::Cell(c) => 1 << (c - 1),
            Position::Row(r) => 0b11_1111 << ((r as u64 - 1) * 6),
        }
    }
}

/// Variable holding the bucket of a previous successful move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MemoryVar {
    /// Last bucket that accepted any piece.
    P,
    /// Last bucket that accepted a piece of the moved piece's color.
    Pc,
    /// Last bucket that accepted a piece of the moved piece's shape.
    Ps,
}

impl MemoryVar {
    pub fn keyword(self) -> &'static str {
        match self {
            MemoryVar::P => "p",
            MemoryVar::Pc => "pc",
            MemoryVar::Ps => "ps",
        }
    }
}

/// Set of bucket indices as a 4-bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BucketSet(u8);

impl BucketSet {
    pub fn from_buckets(buckets: impl IntoIterator<Item = u8>) -> Self {
        Self(buckets.into_iter().fold(0, |m, b| m | 1 << b))
    }

    pub fn contains(self, bucket: u8) -> bool {
        (bucket as usize) < NUM_BUCKETS && self.0 & (1 << bucket) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..NUM_BUCKETS as u8).filter(move |&b| self.contains(b))
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BucketSpec {
    Any,
    Set(BucketSet),
    /// `var + offset`, taken mod 4 at evaluation time.
    Expr { var: MemoryVar, offset: i32 },
    Nearby,
    Remotest,
}

/// `(count, shapes, colors, positions, buckets)`; `None` is the wildcard.
///
/// Shapes and colors are palette indices, kept sorted and deduplicated so
/// that structurally equal rules compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub count: Option<u32>,
    pub shapes: Option<Vec<u8>>,
    pub colors: Option<Vec<u8>>,
    pub positions: Option<Vec<Position>>,
    pub buckets: BucketSpec,
}

impl Atom {
    /// Union of the cells selected by `positions`, or all cells.
    pub fn position_mask(&self) -> u64 {
        match &self.positions {
            None => (1 << 36) - 1,
            Some(ps) => ps.iter().fold(0, |m, p| m | p.cell_mask()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuleLine {
    /// Line meter; `None` means the line is unmetered.
    pub count: Option<u32>,
    pub atoms: Vec<Atom>,
}

/// A parsed hidden rule together with the palette it was validated against.
#[derive(Clone)]
pub struct RuleProgram {
    pub lines: Vec<RuleLine>,
    pub palette: Palette,
    /// Text the program was parsed from (empty for constructed programs).
    pub source: String,
}

impl RuleProgram {
    pub fn new(lines: Vec<RuleLine>, palette: Palette) -> Self {
        Self { lines, palette, source: String::new() }
    }

    pub fn atom_count(&self) -> usize {
        self.lines.iter().map(|l| l.atoms.len()).sum()
    }

    /// True when acceptance can never depend on history: one unmetered line
    /// of unmetered atoms that do not reference p/pc/ps.
    pub fn is_stationary(&self) -> bool {
        self.lines.len() == 1
            && self.lines[0].count.is_none()
            && self.lines[0]
                .atoms
                .iter()
                .all(|a| a.count.is_none() && !matches!(a.buckets, BucketSpec::Expr { .. }))
    }
}

impl PartialEq for RuleProgram {
    fn eq(&self, other: &Self) -> bool {
        self.lines == other.lines && self.palette == other.palette
    }
}

impl Eq for RuleProgram {}

impl fmt::Debug for RuleProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RuleProgram").field("lines", &self.lines).finish()
    }
}

impl fmt::Display for RuleProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_rule(self))
    }
}
