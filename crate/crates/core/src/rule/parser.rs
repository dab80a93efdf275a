use std::fmt;

use thiserror::Error;

use super::lexer::{tokenize, Spanned, Tok};
use super::{Atom, BucketSet, BucketSpec, MemoryVar, Position, RuleLine, RuleProgram};
use crate::geometry::{NUM_BUCKETS, NUM_CELLS, ROWS};
use crate::palette::Palette;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("rule text is empty")]
    Empty,
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unbalanced `{0}`")]
    Unbalanced(char),
    #[error("unclosed bracket or parenthesis")]
    UnclosedBracket,
    #[error("integer literal too large")]
    IntegerTooLarge,
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("atom has {0} fields, expected 5")]
    Arity(usize),
    #[error("a rule line needs at least one atom")]
    EmptyLine,
    #[error("empty bracket list")]
    EmptyList,
    #[error("count must be a positive integer or `*`, got {0}")]
    BadCount(u64),
    #[error("cell id {0} out of range 1..=36")]
    CellOutOfRange(u64),
    #[error("bucket {0} out of range 0..=3")]
    BucketOutOfRange(u64),
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("unknown color `{0}`")]
    UnknownColor(String),
    #[error("unknown keyword `{0}`")]
    UnknownKeyword(String),
    #[error("bucket lists may not mix literals with expressions")]
    MixedBucketList,
}

/// A parse or validation failure at a 1-based line/column.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        Self { line, column, kind }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.kind)
    }
}

/// Parses and validates rule text against `palette`.
pub fn parse_rule(text: &str, palette: &Palette) -> Result<RuleProgram, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { toks: &tokens, pos: 0, palette };
    let mut lines = Vec::new();
    loop {
        while p.peek().tok == Tok::Newline {
            p.pos += 1;
        }
        if p.peek().tok == Tok::Eof {
            break;
        }
        lines.push(p.line()?);
    }
    if lines.is_empty() {
        let t = p.peek();
        return Err(ParseError::new(t.line, t.column, ParseErrorKind::Empty));
    }
    Ok(RuleProgram { lines, palette: palette.clone(), source: text.to_string() })
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    palette: &'a Palette,
}

/// One element of a bucket field before it is classified.
enum BucketItem {
    Literal(u8),
    Other(BucketSpec),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> &'a Spanned {
        let t = &self.toks[self.pos];
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Spanned, kind: ParseErrorKind) -> ParseError {
        ParseError::new(t.line, t.column, kind)
    }

    fn unexpected(t: &Spanned, expected: &str) -> ParseError {
        Self::err_at(t, ParseErrorKind::Unexpected { expected: expected.into(), found: t.tok.describe() })
    }

    fn line(&mut self) -> Result<RuleLine, ParseError> {
        let start = self.peek();
        let count = match start.tok {
            Tok::Int(n) => {
                self.bump();
                if n == 0 || n > u32::MAX as u64 {
                    return Err(Self::err_at(start, ParseErrorKind::BadCount(n)));
                }
                Some(n as u32)
            }
            _ => None,
        };
        let mut atoms = Vec::new();
        loop {
            let t = self.peek();
            match t.tok {
                Tok::LParen => atoms.push(self.atom()?),
                Tok::Newline | Tok::Eof => break,
                _ => return Err(Self::unexpected(t, "`(` or end of line")),
            }
        }
        if atoms.is_empty() {
            return Err(Self::err_at(start, ParseErrorKind::EmptyLine));
        }
        Ok(RuleLine { count, atoms })
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let open = self.bump();
        debug_assert_eq!(open.tok, Tok::LParen);
        let count = self.count_field()?;
        self.field_sep(1, open)?;
        let shapes = self.name_field(true)?;
        self.field_sep(2, open)?;
        let colors = self.name_field(false)?;
        self.field_sep(3, open)?;
        let positions = self.position_field()?;
        self.field_sep(4, open)?;
        let buckets = self.bucket_field()?;
        let t = self.bump();
        match t.tok {
            Tok::RParen => Ok(Atom { count, shapes, colors, positions, buckets }),
            Tok::Comma => {
                // Count how many fields the atom really has.
                let mut fields = 6;
                let mut depth = 0;
                loop {
                    match self.bump().tok {
                        Tok::LBracket => depth += 1,
                        Tok::RBracket => depth -= 1,
                        Tok::Comma if depth == 0 => fields += 1,
                        Tok::RParen | Tok::Eof => break,
                        _ => {}
                    }
                }
                Err(Self::err_at(open, ParseErrorKind::Arity(fields)))
            }
            _ => Err(Self::unexpected(t, "`)`")),
        }
    }

    /// Consumes the comma after field number `done`; a `)` here means the
    /// atom is too short.
    fn field_sep(&mut self, done: usize, open: &Spanned) -> Result<(), ParseError> {
        let t = self.peek();
        match t.tok {
            Tok::Comma => {
                self.bump();
                Ok(())
            }
            Tok::RParen => Err(Self::err_at(open, ParseErrorKind::Arity(done))),
            _ => Err(Self::unexpected(t, "`,`")),
        }
    }

    fn count_field(&mut self) -> Result<Option<u32>, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Star => Ok(None),
            Tok::Int(n) if n >= 1 && n <= u32::MAX as u64 => Ok(Some(n as u32)),
            Tok::Int(n) => Err(Self::err_at(t, ParseErrorKind::BadCount(n))),
            _ => Err(Self::unexpected(t, "count (`*` or a positive integer)")),
        }
    }

    /// Parses `*`, a single item, or a non-empty bracket list of items.
    fn list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseError>,
    ) -> Result<Option<Vec<T>>, ParseError> {
        match self.peek().tok {
            Tok::Star => {
                self.bump();
                Ok(None)
            }
            Tok::LBracket => {
                let open = self.bump();
                if self.peek().tok == Tok::RBracket {
                    return Err(Self::err_at(open, ParseErrorKind::EmptyList));
                }
                let mut items = vec![item(self)?];
                loop {
                    let t = self.bump();
                    match t.tok {
                        Tok::Comma => items.push(item(self)?),
                        Tok::RBracket => break,
                        _ => return Err(Self::unexpected(t, "`,` or `]`")),
                    }
                }
                Ok(Some(items))
            }
            _ => Ok(Some(vec![item(self)?])),
        }
    }

    fn name_field(&mut self, shapes: bool) -> Result<Option<Vec<u8>>, ParseError> {
        let palette = self.palette;
        let items = self.list(|p| {
            let t = p.bump();
            let Tok::Ident(name) = &t.tok else {
                return Err(Self::unexpected(t, if shapes { "shape name" } else { "color name" }));
            };
            if shapes {
                palette
                    .shape_index(name)
                    .ok_or_else(|| Self::err_at(t, ParseErrorKind::UnknownShape(name.clone())))
            } else {
                palette
                    .color_index(name)
                    .ok_or_else(|| Self::err_at(t, ParseErrorKind::UnknownColor(name.clone())))
            }
        })?;
        Ok(items.map(|mut v| {
            v.sort_unstable();
            v.dedup();
            v
        }))
    }

    fn position_field(&mut self) -> Result<Option<Vec<Position>>, ParseError> {
        let items = self.list(|p| {
            let t = p.bump();
            match &t.tok {
                Tok::Int(n) if (1..=NUM_CELLS as u64).contains(n) => Ok(Position::Cell(*n as u8)),
                Tok::Int(n) => Err(Self::err_at(t, ParseErrorKind::CellOutOfRange(*n))),
                Tok::Ident(s) => parse_row(s).ok_or_else(|| Self::err_at(t, ParseErrorKind::UnknownKeyword(s.clone()))),
                _ => Err(Self::unexpected(t, "cell id or row selector")),
            }
        })?;
        Ok(items.map(|mut v| {
            v.sort_unstable();
            v.dedup();
            v
        }))
    }

    fn bucket_item(&mut self) -> Result<BucketItem, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Int(n) if (*n as usize) < NUM_BUCKETS => Ok(BucketItem::Literal(*n as u8)),
            Tok::Int(n) => Err(Self::err_at(t, ParseErrorKind::BucketOutOfRange(*n))),
            Tok::Ident(s) => {
                let var = match s.as_str() {
                    "nearby" => return Ok(BucketItem::Other(BucketSpec::Nearby)),
                    "remotest" => return Ok(BucketItem::Other(BucketSpec::Remotest)),
                    "p" => MemoryVar::P,
                    "pc" => MemoryVar::Pc,
                    "ps" => MemoryVar::Ps,
                    _ => return Err(Self::err_at(t, ParseErrorKind::UnknownKeyword(s.clone()))),
                };
                let sign = match self.peek().tok {
                    Tok::Plus => 1,
                    Tok::Minus => -1,
                    _ => return Ok(BucketItem::Other(BucketSpec::Expr { var, offset: 0 })),
                };
                self.bump();
                let n = self.bump();
                match n.tok {
                    Tok::Int(v) if v <= i32::MAX as u64 => {
                        Ok(BucketItem::Other(BucketSpec::Expr { var, offset: sign * v as i32 }))
                    }
                    Tok::Int(_) => Err(Self::err_at(n, ParseErrorKind::IntegerTooLarge)),
                    _ => Err(Self::unexpected(n, "integer offset")),
                }
            }
            _ => Err(Self::unexpected(t, "bucket")),
        }
    }

    fn bucket_field(&mut self) -> Result<BucketSpec, ParseError> {
        let at = self.peek();
        let Some(items) = self.list(|p| p.bucket_item())? else {
            return Ok(BucketSpec::Any);
        };
        if let [BucketItem::Other(spec)] = items.as_slice() {
            return Ok(*spec);
        }
        let mut literals = Vec::with_capacity(items.len());
        for item in items {
            match item {
                BucketItem::Literal(b) => literals.push(b),
                BucketItem::Other(_) => return Err(Self::err_at(at, ParseErrorKind::MixedBucketList)),
            }
        }
        Ok(BucketSpec::Set(BucketSet::from_buckets(literals)))
    }
}

fn parse_row(s: &str) -> Option<Position> {
    let r: u8 = s.strip_prefix('r')?.parse().ok()?;
    (1..=ROWS).contains(&r).then_some(Position::Row(r))
}
