use super::parser::{ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Star,
    Plus,
    Minus,
    Int(u64),
    /// Lower-cased identifier.
    Ident(String),
    /// End of a logical rule line (a newline outside any bracket).
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut depth: i32 = 0;
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: tl, column: tc });
        match c {
            '\n' => {
                chars.next();
                if depth == 0 {
                    push(&mut out, Tok::Newline);
                }
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
                continue;
            }
            '(' | '[' => {
                depth += 1;
                push(&mut out, if c == '(' { Tok::LParen } else { Tok::LBracket });
            }
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(ParseError::new(tl, tc, ParseErrorKind::Unbalanced(c)));
                }
                push(&mut out, if c == ')' { Tok::RParen } else { Tok::RBracket });
            }
            ',' => push(&mut out, Tok::Comma),
            '*' => push(&mut out, Tok::Star),
            '+' => push(&mut out, Tok::Plus),
            '-' => push(&mut out, Tok::Minus),
            c if c.is_ascii_digit() => {
                let mut n: u64 = 0;
                while let Some(&d) = chars.peek() {
                    let Some(v) = d.to_digit(10) else { break };
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(v as u64))
                        .ok_or_else(|| ParseError::new(tl, tc, ParseErrorKind::IntegerTooLarge))?;
                    chars.next();
                    col += 1;
                }
                push(&mut out, Tok::Int(n));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if !(d.is_ascii_alphanumeric() || d == '_') {
                        break;
                    }
                    s.push(d.to_ascii_lowercase());
                    chars.next();
                    col += 1;
                }
                push(&mut out, Tok::Ident(s));
                continue;
            }
            other => return Err(ParseError::new(tl, tc, ParseErrorKind::UnexpectedChar(other))),
        }
        chars.next();
        col += 1;
    }
    if depth != 0 {
        return Err(ParseError::new(line, col, ParseErrorKind::UnclosedBracket));
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn newline_inside_parens_is_insignificant() {
        let toks = kinds("(1,\n*)\n(2)");
        assert_eq!(
            toks,
            vec![
                Tok::LParen,
                Tok::Int(1),
                Tok::Comma,
                Tok::Star,
                Tok::RParen,
                Tok::Newline,
                Tok::LParen,
                Tok::Int(2),
                Tok::RParen,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_case() {
        assert_eq!(kinds("# hi\nNearby # tail"), vec![Tok::Newline, Tok::Ident("nearby".into()), Tok::Eof]);
    }

    #[test]
    fn unbalanced() {
        assert!(tokenize("())").is_err());
        assert!(tokenize("(()").is_err());
        assert!(tokenize("(1 \\ 2)").is_err());
    }
}
