use thiserror::Error;

use super::{parse_rule, RuleProgram};
use crate::palette::Palette;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown built-in rule `{0}`")]
pub struct UnknownRule(pub String);

const BUILTINS: &[(&str, &str)] = &[
    ("SM", "(*, star, *, *, 0) (*, triangle, *, *, 1) (*, square, *, *, 2) (*, circle, *, *, 3)"),
    ("SM1F", "(*, star, *, *, [0,1,2,3]) (*, triangle, *, *, 1) (*, square, *, *, 2) (*, circle, *, *, 3)"),
    ("SM2O", "(*, star, *, *, [1,3]) (*, triangle, *, *, [0,2]) (*, square, *, *, [1,3]) (*, circle, *, *, [0,2])"),
    ("CM", "(*, *, green, *, 0) (*, *, yellow, *, 1) (*, *, red, *, 2) (*, *, blue, *, 3)"),
    ("CM1F", "(*, *, green, *, 0) (*, *, yellow, *, 1) (*, *, red, *, [0,1,2,3]) (*, *, blue, *, 3)"),
    ("CM2O", "(*, *, green, *, [1,3]) (*, *, yellow, *, [0,2]) (*, *, red, *, [1,3]) (*, *, blue, *, [0,2])"),
    ("QN", "(*,*,*,*,Nearby)"),
    (
        "QN2F",
        "(*,*,*,[19,20,21,22,23,24,25,26,27,28,29,30,31,32,33,34,35,36],Nearby) \
         (*,*,*,[1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18],[0,1,2,3])",
    ),
    ("BLTR", "(1,*,*,*,[3])\n(1,*,*,*,[1])"),
    ("BT", "(1,*,*,*,[2,3])\n(1,*,*,*,[0,1])"),
    ("CW", "(1,*,*,*, 0)\n(*,*,*,*, p+1)"),
    ("CWAF", "(1,*,*,*,0)\n(1,*,*,*,[0,1,2,3])\n(1,*,*,*,2)\n(1,*,*,*,[0,1,2,3])"),
    ("CW2F", "(1,*,*,*, 0)\n(1,*,*,*, 1)\n(2,*,*,*, [0,1,2,3])"),
    ("StrictAlternation", "(1, *, *, *, [0,1])\n(1, *, *, *, [2,3])"),
    ("AmbiguousAlternation", "(1, *, *, *, [0,1]) (1, *, *, *, [2,3])"),
    ("RedThenBlue", "(*, *, red, *, 1)\n(*, *, blue, *, 2)"),
];

/// Names accepted by [`builtin_rule`], in corpus order.
pub const BUILTIN_NAMES: [&str; 16] = [
    "SM",
    "SM1F",
    "SM2O",
    "CM",
    "CM1F",
    "CM2O",
    "QN",
    "QN2F",
    "BLTR",
    "BT",
    "CW",
    "CWAF",
    "CW2F",
    "StrictAlternation",
    "AmbiguousAlternation",
    "RedThenBlue",
];

/// Source text of a built-in rule (name matched case-insensitively).
pub fn builtin_source(name: &str) -> Result<&'static str, UnknownRule> {
    BUILTINS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, src)| *src)
        .ok_or_else(|| UnknownRule(name.to_string()))
}

/// A built-in rule parsed against the default palette.
pub fn builtin_rule(name: &str) -> Result<RuleProgram, UnknownRule> {
    let src = builtin_source(name)?;
    Ok(parse_rule(src, &Palette::default()).expect("built-in rules parse"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{BucketSet, BucketSpec};

    #[test]
    fn every_builtin_parses() {
        assert_eq!(BUILTINS.len(), BUILTIN_NAMES.len());
        for name in BUILTIN_NAMES {
            let p = builtin_rule(name).unwrap();
            assert!(p.atom_count() >= 1, "{name}");
        }
    }

    #[test]
    fn quadrant_nearby() {
        let p = builtin_rule("QN").unwrap();
        assert_eq!(p.lines.len(), 1);
        assert_eq!(p.lines[0].atoms.len(), 1);
        let a = &p.lines[0].atoms[0];
        assert!(a.count.is_none() && a.shapes.is_none() && a.colors.is_none() && a.positions.is_none());
        assert_eq!(a.buckets, BucketSpec::Nearby);
    }

    #[test]
    fn bottom_then_top() {
        let p = builtin_rule("bt").unwrap();
        assert_eq!(p.lines.len(), 2);
        assert_eq!(p.lines[0].atoms[0].count, Some(1));
        assert_eq!(p.lines[0].atoms[0].buckets, BucketSpec::Set(BucketSet::from_buckets([2, 3])));
        assert_eq!(p.lines[1].atoms[0].buckets, BucketSpec::Set(BucketSet::from_buckets([0, 1])));
    }

    #[test]
    fn red_then_blue() {
        let p = builtin_rule("RedThenBlue").unwrap();
        assert_eq!(p.lines.len(), 2);
        assert!(p.lines.iter().all(|l| l.count.is_none() && l.atoms[0].count.is_none()));
        assert_eq!(p.lines[0].atoms[0].colors, Some(vec![0]));
        assert_eq!(p.lines[1].atoms[0].colors, Some(vec![1]));
    }

    #[test]
    fn stationarity() {
        for (name, stationary) in [("SM", true), ("QN", true), ("QN2F", true), ("CW", false), ("BLTR", false)] {
            assert_eq!(builtin_rule(name).unwrap().is_stationary(), stationary, "{name}");
        }
    }

    #[test]
    fn unknown_name() {
        assert_eq!(builtin_rule("XYZ").unwrap_err(), UnknownRule("XYZ".into()));
    }
}
