//! Paired significance tests and multiple-comparison correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of nonzero differences for which the Wilcoxon null
/// distribution is enumerated exactly.
pub const WILCOXON_EXACT_MAX_N: usize = 25;
/// Largest number of discordant pairs for the exact McNemar test.
pub const MCNEMAR_EXACT_MAX_N: u64 = 200;
pub const WILCOXON_MIN_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    WilcoxonOneSided,
    Mcnemar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Approximate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: Method,
}

/// Mid-ranks of `values` (1-based), plus the tie-group sizes.
fn mid_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Upper tail `P(W+ >= w)` under the null, by counting sign patterns.
/// Mid-ranks are doubled so every rank sum is an integer.
fn exact_upper_tail(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let threshold = (w * 2.0).round() as usize;
    let hits: f64 = counts[threshold.min(total + 1)..].iter().sum();
    hits / 2f64.powi(ranks.len() as i32)
}

fn normal_upper_tail(n: usize, ties: &[usize], w: f64) -> f64 {
    let n = n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return if w > mean { 0.0 } else { 1.0 };
    }
    let z = (w - mean - 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    1.0 - normal.cdf(z)
}

/// One-sided Wilcoxon signed-rank test of `a > b`.
///
/// ```
/// let a = [1.0, 2.0, 3.0, 4.0, 5.0];
/// let r = asap::stats::wilcoxon_one_sided(&a, &[0.0; 5]).unwrap();
/// assert_eq!(r.p_value, 0.03125);
/// ```
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<PairedTestResult> {
    wilcoxon_with_method(a, b, None)
}

/// As [`wilcoxon_one_sided`], optionally forcing the exact or the normal
/// path regardless of `n`.
pub fn wilcoxon_with_method(a: &[f64], b: &[f64], force: Option<Method>) -> Result<PairedTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n < WILCOXON_MIN_N {
        return Err(Error::InsufficientData { required: WILCOXON_MIN_N, found: n });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = mid_ranks(&magnitudes);
    let w: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let method = force.unwrap_or(if n <= WILCOXON_EXACT_MAX_N { Method::Exact } else { Method::Approximate });
    let p = match method {
        Method::Exact => exact_upper_tail(&ranks, w),
        Method::Approximate => normal_upper_tail(n, &ties, w),
    };
    Ok(PairedTestResult {
        test: TestKind::WilcoxonOneSided,
        statistic: w,
        p_value: p.clamp(0.0, 1.0),
        n_effective: n,
        method,
    })
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
///
/// ```
/// let adj = asap::stats::benjamini_hochberg(&[0.01, 0.02, 0.03]);
/// assert!(adj.iter().all(|p| (p - 0.03).abs() < 1e-12));
/// ```
pub fn benjamini_hochberg(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut adjusted = vec![0.0; m];
    let mut running = f64::INFINITY;
    for (pos, &i) in order.iter().enumerate().rev() {
        let rank = (pos + 1) as f64;
        // m / rank >= 1; the max guards against p * m / m rounding below p.
        running = running.min((p_values[i] * m as f64 / rank).max(p_values[i]));
        adjusted[i] = running.min(1.0);
    }
    adjusted
}

/// McNemar test on discordant counts: `b` pairs where only the baseline
/// succeeded, `c` where only the treatment did. Two-sided.
///
/// ```
/// let r = asap::stats::mcnemar(10, 2).unwrap();
/// assert!((r.p_value - 158.0 / 4096.0).abs() < 1e-12);
/// ```
pub fn mcnemar(b: u64, c: u64) -> Result<PairedTestResult> {
    let n = b + c;
    if n == 0 {
        return Err(Error::NoDiscordantPairs);
    }
    if n <= MCNEMAR_EXACT_MAX_N {
        let k = b.min(c);
        let mut term = 0.5f64.powi(n as i32);
        let mut tail = 0.0;
        for i in 0..=k {
            tail += term;
            term *= (n - i) as f64 / (i + 1) as f64;
        }
        return Ok(PairedTestResult {
            test: TestKind::Mcnemar,
            statistic: k as f64,
            p_value: (2.0 * tail).min(1.0),
            n_effective: n as usize,
            method: Method::Exact,
        });
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    let stat = diff.max(0.0).powi(2) / n as f64;
    let chi = ChiSquared::new(1.0).expect("one degree of freedom");
    Ok(PairedTestResult {
        test: TestKind::Mcnemar,
        statistic: stat,
        p_value: (1.0 - chi.cdf(stat)).clamp(0.0, 1.0),
        n_effective: n as usize,
        method: Method::Approximate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilcoxon_errors() {
        let a = [1.0; 6];
        assert!(matches!(wilcoxon_one_sided(&a, &a), Err(Error::InsufficientData { found: 0, .. })));
        assert!(matches!(wilcoxon_one_sided(&a, &a[..5]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn ties_get_mid_ranks() {
        let (ranks, ties) = mid_ranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(ranks, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(ties, vec![1, 1, 2]);
    }

    #[test]
    fn antisymmetry_under_swap() {
        let a = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0];
        let b = [2.0, 1.5, 1.0, 1.0, 3.0, 5.0, 3.0, 5.0];
        let fwd = wilcoxon_one_sided(&a, &b).unwrap();
        let rev = wilcoxon_one_sided(&b, &a).unwrap();
        // P(W = w) from the exact distribution.
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
        let (ranks, _) = mid_ranks(&diffs);
        let point = exact_upper_tail(&ranks, fwd.statistic) - exact_upper_tail(&ranks, fwd.statistic + 0.5);
        assert!((rev.p_value - (1.0 - fwd.p_value + point)).abs() < 1e-12);
    }

    #[test]
    fn bh_properties() {
        assert_eq!(benjamini_hochberg(&[0.2]), vec![0.2]);
        assert_eq!(benjamini_hochberg(&[0.04, 0.04, 0.04]), vec![0.04, 0.04, 0.04]);
        assert_eq!(benjamini_hochberg(&[0.9, 0.5]), vec![0.9, 0.9]);
        assert!(benjamini_hochberg(&[]).is_empty());
    }

    #[test]
    fn mcnemar_cases() {
        assert!(mcnemar(7, 7).unwrap().p_value >= 0.5);
        assert!(matches!(mcnemar(0, 0), Err(Error::NoDiscordantPairs)));
        assert_eq!(mcnemar(3, 9).unwrap().p_value, mcnemar(9, 3).unwrap().p_value);
        let big = mcnemar(150, 100).unwrap();
        assert_eq!(big.method, Method::Approximate);
        assert!(big.p_value < 0.01);
    }
}
