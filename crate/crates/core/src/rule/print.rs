use std::fmt::Write;

use super::{Atom, BucketSpec, Position, RuleProgram};
use crate::palette::Palette;

/// Canonical text of a program: one line per rule line, atoms separated by
/// a single space, fields by `", "`.
pub fn print_rule(program: &RuleProgram) -> String {
    let mut out = String::new();
    for (i, line) in program.lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(n) = line.count {
            write!(out, "{n} ").unwrap();
        }
        let atoms: Vec<String> = line.atoms.iter().map(|a| print_atom(a, &program.palette)).collect();
        out.push_str(&atoms.join(" "));
    }
    out
}

fn list<T>(items: &Option<Vec<T>>, f: impl Fn(&T) -> String) -> String {
    match items {
        None => "*".into(),
        Some(v) if v.len() == 1 => f(&v[0]),
        Some(v) => format!("[{}]", v.iter().map(f).collect::<Vec<_>>().join(",")),
    }
}

fn print_atom(atom: &Atom, palette: &Palette) -> String {
    let count = atom.count.map_or("*".to_string(), |n| n.to_string());
    let shapes = list(&atom.shapes, |&s| palette.shape_name(s).to_string());
    let colors = list(&atom.colors, |&c| palette.color_name(c).to_string());
    let positions = list(&atom.positions, |p| match p {
        Position::Cell(c) => c.to_string(),
        Position::Row(r) => format!("R{r}"),
    });
    let buckets = match atom.buckets {
        BucketSpec::Any => "*".to_string(),
        BucketSpec::Set(set) => {
            let v: Vec<String> = set.iter().map(|b| b.to_string()).collect();
            if v.len() == 1 {
                v[0].clone()
            } else {
                format!("[{}]", v.join(","))
            }
        }
        BucketSpec::Expr { var, offset } => match offset {
            0 => var.keyword().to_string(),
            o if o > 0 => format!("{}+{o}", var.keyword()),
            o => format!("{}-{}", var.keyword(), (o as i64).abs()),
        },
        BucketSpec::Nearby => "Nearby".to_string(),
        BucketSpec::Remotest => "Remotest".to_string(),
    };
    format!("({count}, {shapes}, {colors}, {positions}, {buckets})")
}

#[cfg(test)]
mod tests {
    use crate::palette::Palette;
    use crate::rule::{builtin_rule, parse_rule};

    use super::*;

    #[test]
    fn shape_match_prints_on_one_line() {
        let text = print_rule(&builtin_rule("SM").unwrap());
        assert_eq!(
            text,
            "(*, star, *, *, 0) (*, triangle, *, *, 1) (*, square, *, *, 2) (*, circle, *, *, 3)"
        );
    }

    #[test]
    fn negative_offsets_and_rows() {
        let p = Palette::default();
        let prog = parse_rule("2 (3, [circle, star], red, [R2, 7], pc-2)", &p).unwrap();
        assert_eq!(print_rule(&prog), "2 (3, [star,circle], red, [7,R2], pc-2)");
        assert_eq!(parse_rule(&print_rule(&prog), &p).unwrap(), prog);
    }
}
