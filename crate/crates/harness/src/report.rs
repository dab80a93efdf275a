//! Metric artifacts for a finished experiment: strip, ECDF and learning
//! curve CSVs plus pairwise U-test tables.

use std::collections::BTreeMap;
use std::path::Path;

use gohr_metrics::{
    bonferroni, ecdf, mann_whitney, median_curve, with_placeholders, Alternative, Method, UTest,
};
use serde::{Deserialize, Serialize};

use crate::config::{Comparison, ExperimentConfig};
use crate::runner::{load_summaries, write_atomic, CellSummary, CONFIG_FILE};
use crate::HarnessError;

pub const METRICS_DIR: &str = "metrics";
pub const BOOTSTRAPS: usize = 500;
pub const CI_LEVEL: f64 = 0.95;
pub const BONFERRONI_ALPHA: f64 = 0.05;
const BOOTSTRAP_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleStats {
    pub rule: String,
    pub runs: usize,
    pub converged: usize,
    /// Median of the raw TCE values, converged or not.
    pub median_tce: f64,
    pub tce: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairTest {
    pub a: String,
    pub b: String,
    pub alternative: Alternative,
    pub u: f64,
    pub p: f64,
    pub method: Method,
    /// Significant at 0.05 after Bonferroni over the tests of its table.
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupReport {
    pub agent: String,
    pub feature_spec: String,
    pub rules: Vec<RuleStats>,
    /// Two-sided tests between every pair of rules.
    pub pairwise: Vec<PairTest>,
    /// One-sided "general rule is harder" tests.
    pub generality: Vec<PairTest>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub groups: Vec<GroupReport>,
}

impl MetricsReport {
    pub fn group(&self, agent: &str, feature_spec: &str) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.agent == agent && g.feature_spec == feature_spec)
    }
}

impl GroupReport {
    pub fn rule(&self, rule: &str) -> Option<&RuleStats> {
        self.rules.iter().find(|r| r.rule == rule)
    }

    pub fn generality_test(&self, general: &str, base: &str) -> Option<&PairTest> {
        self.generality.iter().find(|t| t.a == general && t.b == base)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// TCE of converged runs; `None` marks a run that did not converge.
fn comparison_values(runs: &[&CellSummary]) -> Vec<Option<f64>> {
    runs.iter().map(|s| s.converged.then_some(s.tce as f64)).collect()
}

fn u_test(a: &str, b: &str, ra: &[&CellSummary], rb: &[&CellSummary], alt: Alternative) -> (PairTest, UTest) {
    let (va, vb) = with_placeholders(&comparison_values(ra), &comparison_values(rb));
    let t = mann_whitney(&va, &vb, alt);
    let pair =
        PairTest { a: a.into(), b: b.into(), alternative: alt, u: t.u, p: t.p, method: t.method, significant: false };
    (pair, t)
}

fn flag(tests: &mut [PairTest]) {
    let ps: Vec<f64> = tests.iter().map(|t| t.p).collect();
    for (t, sig) in tests.iter_mut().zip(bonferroni(&ps, BONFERRONI_ALPHA)) {
        t.significant = sig;
    }
}

/// Builds the report from cell summaries. Rules keep the order in which
/// they first appear in `rule_order`, then alphabetical.
pub fn build_report(summaries: &[CellSummary], rule_order: &[String], comparisons: &[Comparison]) -> MetricsReport {
    let mut groups: BTreeMap<(String, String), BTreeMap<String, Vec<&CellSummary>>> = BTreeMap::new();
    for s in summaries {
        groups
            .entry((s.agent.clone(), s.feature_spec.clone()))
            .or_default()
            .entry(s.rule.clone())
            .or_default()
            .push(s);
    }
    let rank = |r: &str| rule_order.iter().position(|x| x == r).unwrap_or(usize::MAX);
    let mut report = MetricsReport::default();
    for ((agent, feature_spec), by_rule) in groups {
        let mut names: Vec<&String> = by_rule.keys().collect();
        names.sort_by_key(|r| (rank(r), (*r).clone()));
        let rules = names
            .iter()
            .map(|r| {
                let runs = &by_rule[*r];
                let tces: Vec<f64> = runs.iter().map(|s| s.tce as f64).collect();
                RuleStats {
                    rule: (*r).clone(),
                    runs: runs.len(),
                    converged: runs.iter().filter(|s| s.converged).count(),
                    median_tce: median(&tces),
                    tce: runs.iter().map(|s| s.tce).collect(),
                }
            })
            .collect();
        let mut pairwise = Vec::new();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                pairwise.push(u_test(a, b, &by_rule[*a], &by_rule[*b], Alternative::TwoSided).0);
            }
        }
        flag(&mut pairwise);
        let mut generality: Vec<PairTest> = comparisons
            .iter()
            .filter(|c| by_rule.contains_key(&c.general) && by_rule.contains_key(&c.base))
            .map(|c| u_test(&c.general, &c.base, &by_rule[&c.general], &by_rule[&c.base], Alternative::AGreater).0)
            .collect();
        flag(&mut generality);
        report.groups.push(GroupReport { agent, feature_spec, rules, pairwise, generality });
    }
    report
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Config(format!("{}: {e}", path.display()))
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    write_atomic(path, &bytes).map_err(|e| HarnessError::io(path, e))
}

/// Reads the summaries under `root` and writes `metrics/strip.csv`,
/// `ecdf.csv`, `curve.csv` and `summary.json`.
pub fn write_metrics(root: &Path) -> Result<MetricsReport, HarnessError> {
    let summaries = load_summaries(root)?;
    let cfg: Option<ExperimentConfig> =
        std::fs::read_to_string(root.join(CONFIG_FILE)).ok().and_then(|t| serde_json::from_str(&t).ok());
    let (order, comparisons) = match &cfg {
        Some(c) => (c.rules.iter().map(|r| crate::config::rule_label(r)).collect(), c.comparisons.clone()),
        None => (Vec::new(), Vec::new()),
    };
    let report = build_report(&summaries, &order, &comparisons);
    let dir = root.join(METRICS_DIR);

    let mut strip = Vec::new();
    let mut ecdf_rows = Vec::new();
    let mut curve_rows = Vec::new();
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&CellSummary>> = BTreeMap::new();
    for s in &summaries {
        groups.entry((&s.agent, &s.feature_spec, &s.rule)).or_default().push(s);
        strip.push(vec![
            s.agent.clone(),
            s.feature_spec.clone(),
            s.rule.clone(),
            s.run_id.clone(),
            s.tce.to_string(),
            s.converged.to_string(),
        ]);
    }
    for ((agent, fs, rule), runs) in &groups {
        for p in ecdf(&comparison_values(runs)) {
            ecdf_rows.push(vec![agent.to_string(), fs.to_string(), rule.to_string(), p.value.to_string(), p.fraction.to_string()]);
        }
        let cumulative: Vec<Vec<f64>> = runs
            .iter()
            .map(|s| {
                s.episode_errors
                    .iter()
                    .scan(0u64, |acc, &e| {
                        *acc += e as u64;
                        Some(*acc as f64)
                    })
                    .collect()
            })
            .collect();
        for p in median_curve(&cumulative, BOOTSTRAPS, CI_LEVEL, BOOTSTRAP_SEED) {
            curve_rows.push(vec![
                agent.to_string(),
                fs.to_string(),
                rule.to_string(),
                p.episode.to_string(),
                p.median.to_string(),
                p.lo.to_string(),
                p.hi.to_string(),
            ]);
        }
    }
    write_csv(&dir.join("strip.csv"), &["agent", "features", "rule", "run_id", "tce", "converged"], strip)?;
    write_csv(&dir.join("ecdf.csv"), &["agent", "features", "rule", "value", "fraction"], ecdf_rows)?;
    write_csv(&dir.join("curve.csv"), &["agent", "features", "rule", "episode", "median", "lo", "hi"], curve_rows)?;
    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
    json.push(b'\n');
    write_atomic(&dir.join("summary.json"), &json).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(rule: &str, run: u32, tce: u64, converged: bool) -> CellSummary {
        CellSummary {
            run_id: format!("{rule}/a/f/run-{run:03}"),
            rule: rule.into(),
            agent: "a".into(),
            feature_spec: "f".into(),
            run_index: run,
            seed: 0,
            episodes: 2,
            tce,
            converged,
            window_errors: 0,
            window_moves: 0,
            total_moves: 0,
            episode_errors: vec![tce as u32, 0],
            episode_moves: vec![9, 9],
            move_limit_episodes: 0,
            fingerprint: String::new(),
        }
    }

    #[test]
    fn report_tables() {
        let mut s = Vec::new();
        for i in 0..4 {
            s.push(summary("X", i, 10 + i as u64, true));
            s.push(summary("Y", i, 100 + i as u64, i != 0));
        }
        let cmp = [Comparison { general: "X".into(), base: "Y".into() }];
        let r = build_report(&s, &["Y".into(), "X".into()], &cmp);
        let g = r.group("a", "f").unwrap();
        assert_eq!(g.rules[0].rule, "Y");
        assert_eq!(g.rule("X").unwrap().median_tce, 11.5);
        assert_eq!(g.rule("Y").unwrap().converged, 3);
        assert_eq!(g.pairwise.len(), 1);
        let t = g.generality_test("X", "Y").unwrap();
        assert_eq!(t.u, 0.0);
        assert!((t.p - 1.0).abs() < 1e-12);
    }
}
