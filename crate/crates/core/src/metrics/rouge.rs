use super::{reference_tokens, tokenize_summary};
use crate::error::Result;

pub const ROUGE_BETA: f64 = 1.2;

/// Longest common subsequence length, O(|a|·|b|) time, O(|b|) memory.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L F-measure with recall weighted by [`ROUGE_BETA`].
pub fn rouge_l_tokens(candidate: &[String], reference: &[String]) -> f64 {
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    100.0 * (1.0 + b2) * p * r / (r + b2 * p)
}

pub fn rouge_l(candidate: &str, reference: &str) -> Result<f64> {
    let r = reference_tokens(reference)?;
    Ok(rouge_l_tokens(&tokenize_summary(candidate), &r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcs_basics() {
        assert_eq!(lcs_len(b"abc", b"acd"), 2);
        assert_eq!(lcs_len::<u8>(b"", b"abc"), 0);
        assert_eq!(lcs_len(b"abcbdab", b"bdcaba"), 4);
    }

    #[test]
    fn rouge_values() {
        assert!((rouge_l("a b c", "a b c").unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(rouge_l("x y", "a b").unwrap(), 0.0);
        let p: f64 = 2.0 / 3.0;
        let r: f64 = 2.0 / 3.0;
        let want = 100.0 * (1.0 + 1.44) * p * r / (r + 1.44 * p);
        assert!((rouge_l("a b c", "a c d").unwrap() - want).abs() < 1e-12);
    }
}
