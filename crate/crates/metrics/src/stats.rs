//! Mann-Whitney U tests with placeholder handling, and Bonferroni flags.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Pooled size at or below which p-values are computed exactly.
pub const EXACT_CUTOFF: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    /// Sample A tends to take larger values than B.
    AGreater,
    /// Sample A tends to take smaller values than B.
    ALess,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UTest {
    /// U statistic of sample A: pairs (a, b) with a > b, ties counting half.
    pub u: f64,
    pub p: f64,
    pub method: Method,
    pub n_a: usize,
    pub n_b: usize,
}

/// Replaces missing values (Never, did not converge) with one more than the
/// largest finite value in the pooled samples.
pub fn with_placeholders(a: &[Option<f64>], b: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    let max = a.iter().chain(b).flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let placeholder = if max.is_finite() { max + 1.0 } else { 0.0 };
    let fill = |s: &[Option<f64>]| s.iter().map(|v| v.unwrap_or(placeholder)).collect();
    (fill(a), fill(b))
}

/// Midranks of the pooled values (1-based), and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Mann-Whitney U test, exact when the pooled size is at most
/// [`EXACT_CUTOFF`] and normal-approximated otherwise.
pub fn mann_whitney(a: &[f64], b: &[f64], alt: Alternative) -> UTest {
    let method = if a.len() + b.len() <= EXACT_CUTOFF { Method::Exact } else { Method::Normal };
    mann_whitney_with(a, b, alt, method)
}

/// Mann-Whitney U test with an explicit p-value method. The exact method
/// enumerates every split of the pooled midranks, so it stays exact under
/// ties; its cost grows as C(nA+nB, nA).
///
/// # Panics
/// If either sample is empty.
pub fn mann_whitney_with(a: &[f64], b: &[f64], alt: Alternative, method: Method) -> UTest {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be non-empty");
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let offset = (na * (na + 1)) as f64 / 2.0;
    let u = ranks[..na].iter().sum::<f64>() - offset;
    let mean = (na * nb) as f64 / 2.0;
    let p = match method {
        Method::Exact => exact_p(&ranks, na, u, mean, offset, alt),
        Method::Normal => normal_p(na, nb, &ties, u, mean, lattice_step(&ranks) / 2.0, alt),
    };
    UTest { u, p, method, n_a: na, n_b: nb }
}

fn exact_p(ranks: &[f64], na: usize, u: f64, mean: f64, offset: f64, alt: Alternative) -> f64 {
    const TOL: f64 = 1e-9;
    let mut total = 0u64;
    let mut hits = 0u64;
    let mut visit = |rank_sum: f64| {
        let v = rank_sum - offset;
        let extreme = match alt {
            Alternative::TwoSided => (v - mean).abs() >= (u - mean).abs() - TOL,
            Alternative::AGreater => v >= u - TOL,
            Alternative::ALess => v <= u + TOL,
        };
        total += 1;
        hits += extreme as u64;
    };
    combinations(ranks, na, 0, 0.0, &mut visit);
    hits as f64 / total as f64
}

fn combinations(ranks: &[f64], k: usize, start: usize, sum: f64, visit: &mut impl FnMut(f64)) {
    if k == 0 {
        visit(sum);
        return;
    }
    for i in start..=ranks.len() - k {
        combinations(ranks, k - 1, i + 1, sum + ranks[i], visit);
    }
}

/// Spacing of the values U can take given the pooled midranks: the gcd of
/// the gaps between distinct midranks. It is 1 without ties and can drop to
/// 1/2 when an even-sized tie group produces half-integer midranks.
fn lattice_step(ranks: &[f64]) -> f64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut halves: Vec<u64> = ranks.iter().map(|r| (r * 2.0).round() as u64).collect();
    halves.sort_unstable();
    halves.dedup();
    let g = halves.windows(2).fold(0, |g, w| gcd(g, w[1] - w[0]));
    if g == 0 {
        1.0
    } else {
        g as f64 / 2.0
    }
}

/// Normal approximation with tie-corrected variance and a continuity
/// correction of `cc`.
fn normal_p(na: usize, nb: usize, ties: &[usize], u: f64, mean: f64, cc: f64, alt: Alternative) -> f64 {
    let n = (na + nb) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let std_normal = Normal::standard();
    let p = match alt {
        Alternative::TwoSided => {
            let z = ((u - mean).abs() - cc).max(0.0) / sd;
            2.0 * std_normal.sf(z)
        }
        Alternative::AGreater => std_normal.sf((u - mean - cc) / sd),
        Alternative::ALess => std_normal.cdf((u - mean + cc) / sd),
    };
    p.min(1.0)
}

/// Significance flags under a Bonferroni correction over all given tests.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let k = p_values.len().max(1) as f64;
    p_values.iter().map(|&p| p < alpha / k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_example() {
        let t = mann_whitney(&[1.0, 2.0], &[3.0, 4.0], Alternative::TwoSided);
        assert_eq!(t.method, Method::Exact);
        assert_eq!(t.u, 0.0);
        assert!((t.p - 1.0 / 3.0).abs() < 1e-12);
        let t = mann_whitney(&[1.0, 2.0], &[3.0, 4.0], Alternative::ALess);
        assert!((t.p - 1.0 / 6.0).abs() < 1e-12);
        let t = mann_whitney(&[1.0, 2.0], &[3.0, 4.0], Alternative::AGreater);
        assert!((t.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let s = [3.0, 5.0, 5.0, 9.0];
        for method in [Method::Exact, Method::Normal] {
            let t = mann_whitney_with(&s, &s, Alternative::TwoSided, method);
            assert_eq!(t.p, 1.0, "{method:?}");
        }
        let big: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert_eq!(mann_whitney(&big, &big, Alternative::TwoSided).p, 1.0);
    }

    #[test]
    fn all_tied_is_uninformative() {
        let t = mann_whitney_with(&[1.0; 10], &[1.0; 10], Alternative::AGreater, Method::Normal);
        assert_eq!(t.p, 1.0);
    }

    #[test]
    fn lattice_steps() {
        assert_eq!(lattice_step(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(lattice_step(&[1.5, 1.5, 3.0]), 1.5);
        assert_eq!(lattice_step(&[1.5, 1.5, 3.0, 4.0]), 0.5);
        assert_eq!(lattice_step(&[2.0, 2.0, 2.0, 5.0, 5.0, 5.0]), 3.0);
        assert_eq!(lattice_step(&[1.0]), 1.0);
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni(&[0.004, 0.01, 0.5, 0.5, 0.5, 0.5], 0.05), vec![true, false, false, false, false, false]);
        assert_eq!(bonferroni(&[0.04], 0.05), vec![true]);
    }

    #[test]
    fn placeholders_sit_above_the_pool() {
        let (a, b) = with_placeholders(&[Some(3.0), None], &[Some(7.0)]);
        assert_eq!(a, vec![3.0, 8.0]);
        assert_eq!(b, vec![7.0]);
    }
}
