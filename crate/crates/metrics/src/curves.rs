//! Plot data: ECDF steps, strip points and bootstrapped median curves.

use gohr_core::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::log::Tce;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub value: f64,
    pub fraction: f64,
}

/// Right-continuous empirical CDF as its jump points. Missing values count
/// in the denominator but never jump, so the final height is the fraction
/// of finite values.
pub fn ecdf(values: &[Option<f64>]) -> Vec<EcdfPoint> {
    let n = values.len() as f64;
    let mut finite: Vec<f64> = values.iter().flatten().copied().collect();
    finite.sort_by(f64::total_cmp);
    let mut out: Vec<EcdfPoint> = Vec::new();
    for (i, &v) in finite.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.value == v => last.fraction = fraction,
            _ => out.push(EcdfPoint { value: v, fraction }),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripPoint {
    pub rule: String,
    pub run_id: String,
    pub tce: u64,
    pub converged: bool,
}

pub fn strip_data(rule: &str, runs: &[(String, Tce)]) -> Vec<StripPoint> {
    runs.iter()
        .map(|(id, t)| StripPoint { rule: rule.to_string(), run_id: id.clone(), tce: t.tce, converged: t.converged })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// 1-based episode index.
    pub episode: usize,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Median cumulative-error curve over runs, with a percentile bootstrap
/// band at `level` obtained by resampling whole runs. Runs are truncated to
/// the shortest one.
///
/// # Panics
/// If `runs` is empty or `bootstraps` is zero.
pub fn median_curve(runs: &[Vec<f64>], bootstraps: usize, level: f64, seed: u64) -> Vec<CurvePoint> {
    assert!(!runs.is_empty() && bootstraps > 0);
    let len = runs.iter().map(Vec::len).min().unwrap_or(0);
    let k = runs.len();
    let mut rng = SplitMix64::new(seed);
    let picks: Vec<Vec<usize>> = (0..bootstraps).map(|_| (0..k).map(|_| rng.index(k)).collect()).collect();
    let alpha = (1.0 - level) / 2.0;
    let mut column = vec![0.0; k];
    let mut resampled = vec![0.0; k];
    let mut medians = vec![0.0; bootstraps];
    (0..len)
        .map(|t| {
            for (c, r) in column.iter_mut().zip(runs) {
                *c = r[t];
            }
            for (m, pick) in medians.iter_mut().zip(&picks) {
                for (s, &i) in resampled.iter_mut().zip(pick) {
                    *s = column[i];
                }
                resampled.sort_by(f64::total_cmp);
                *m = median(&resampled);
            }
            medians.sort_by(f64::total_cmp);
            let mut sorted = column.clone();
            sorted.sort_by(f64::total_cmp);
            CurvePoint {
                episode: t + 1,
                median: median(&sorted),
                lo: quantile(&medians, alpha),
                hi: quantile(&medians, 1.0 - alpha),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_heights() {
        let all = ecdf(&[Some(3.0), Some(1.0), Some(3.0), Some(2.0)]);
        assert_eq!(all.last().unwrap().fraction, 1.0);
        assert_eq!(all.len(), 3);
        assert_eq!(all[2], EcdfPoint { value: 3.0, fraction: 1.0 });
        let half = ecdf(&[Some(1.0), None, Some(4.0), None]);
        assert_eq!(half.last().unwrap().fraction, 0.5);
        assert!(ecdf(&[None, None]).is_empty());
    }

    #[test]
    fn single_run_band_collapses() {
        let run: Vec<f64> = (0..50).map(|i| (i / 3) as f64).collect();
        for p in median_curve(&[run.clone()], 500, 0.95, 1) {
            assert_eq!(p.median, run[p.episode - 1]);
            assert_eq!((p.lo, p.hi), (p.median, p.median));
        }
    }

    #[test]
    fn band_brackets_median() {
        let runs: Vec<Vec<f64>> =
            (0..7).map(|k| (0..30).map(|i| (i * (k + 1)) as f64).collect()).collect();
        let curve = median_curve(&runs, 500, 0.95, 9);
        assert_eq!(curve.len(), 30);
        for p in &curve {
            assert!(p.lo <= p.median && p.median <= p.hi, "{p:?}");
        }
        assert_eq!(curve[10].median, 40.0);
        assert_eq!(curve, median_curve(&runs, 500, 0.95, 9));
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
    }
}
