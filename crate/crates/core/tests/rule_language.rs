use gohr_core::reference::random_program;
use gohr_core::rule::{builtin_source, ParseErrorKind, BUILTIN_NAMES};
use gohr_core::{builtin_rule, parse_rule, print_rule, Palette, SplitMix64};
use proptest::prelude::*;

#[test]
fn corpus_round_trips() {
    let pal = Palette::default();
    for name in BUILTIN_NAMES {
        let prog = builtin_rule(name).unwrap();
        let printed = print_rule(&prog);
        let again = parse_rule(&printed, &pal).unwrap();
        assert_eq!(again, prog, "{name}");
        assert_eq!(print_rule(&again), printed, "{name}");
    }
}

#[test]
fn parsing_is_deterministic() {
    let pal = Palette::default();
    for name in BUILTIN_NAMES {
        let src = builtin_source(name).unwrap();
        assert_eq!(parse_rule(src, &pal).unwrap(), parse_rule(src, &pal).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn generated_programs_round_trip(seed in any::<u64>()) {
        let pal = Palette::default();
        let prog = random_program(&mut SplitMix64::new(seed), &pal);
        let text = print_rule(&prog);
        let parsed = parse_rule(&text, &pal).unwrap();
        prop_assert_eq!(parsed, prog);
    }

    #[test]
    fn classic_palette_round_trip(seed in any::<u64>()) {
        let pal = Palette::classic();
        let prog = random_program(&mut SplitMix64::new(seed), &pal);
        let parsed = parse_rule(&print_rule(&prog), &pal).unwrap();
        prop_assert_eq!(parsed, prog);
    }
}

/// Byte spans `(open, close)` of every top-level parenthesised atom.
fn atom_spans(src: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut open = None;
    for (i, ch) in src.char_indices() {
        match ch {
            '(' => open = Some(i),
            ')' => spans.push((open.take().unwrap(), i)),
            _ => {}
        }
    }
    spans
}

/// Splits atom contents on commas outside brackets.
fn fields(inner: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut depth = 0;
    for ch in inner.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(String::new());
                continue;
            }
            _ => {}
        }
        out.last_mut().unwrap().push(ch);
    }
    out
}

fn replace_atom(src: &str, span: (usize, usize), new_fields: &[String]) -> String {
    format!("{}({}){}", &src[..span.0], new_fields.join(","), &src[span.1 + 1..])
}

fn mutations(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    for span in atom_spans(src) {
        let f = fields(&src[span.0 + 1..span.1]);
        assert_eq!(f.len(), 5);
        for drop in 0..5 {
            let mut g = f.clone();
            g.remove(drop);
            out.push(replace_atom(src, span, &g));
        }
        let mut extra = f.clone();
        extra.push("*".into());
        out.push(replace_atom(src, span, &extra));
        for bad_cell in ["0", "37", "[1,0]", "[36,37]"] {
            let mut g = f.clone();
            g[3] = bad_cell.into();
            out.push(replace_atom(src, span, &g));
        }
        for bad_bucket in ["4", "[0,4]", "[]"] {
            let mut g = f.clone();
            g[4] = bad_bucket.into();
            out.push(replace_atom(src, span, &g));
        }
        // Bracket imbalance.
        out.push(format!("{}{}", &src[..span.1], &src[span.1 + 1..]));
        out.push(format!("{}({}", &src[..span.0], &src[span.0..]));
    }
    for (i, ch) in src.char_indices() {
        if ch == ']' {
            out.push(format!("{}{}", &src[..i], &src[i + 1..]));
        }
        if ch == '[' {
            out.push(format!("{}{}", &src[..i], &src[i + 1..]));
        }
    }
    out
}

#[test]
fn malformed_mutations_are_rejected() {
    let pal = Palette::default();
    let mut checked = 0;
    for name in BUILTIN_NAMES {
        for m in mutations(builtin_source(name).unwrap()) {
            assert!(parse_rule(&m, &pal).is_err(), "{name}: mutation parsed: {m}");
            checked += 1;
        }
    }
    assert!(checked > 500);
}

#[test]
fn errors_carry_positions() {
    let pal = Palette::default();
    let e = parse_rule("(*, star, *, *, 0)\n(*, star, *, 37, 0)", &pal).unwrap_err();
    assert_eq!(e.line, 2);
    assert_eq!(e.kind, ParseErrorKind::CellOutOfRange(37));
    let e = parse_rule("(*, pentagon, *, *, 0)", &pal).unwrap_err();
    assert_eq!((e.line, e.column), (1, 5));
    assert!(e.to_string().contains("pentagon"));
    let e = parse_rule("(*, star, *, *)", &pal).unwrap_err();
    assert!(matches!(e.kind, ParseErrorKind::Arity(4)));
}
