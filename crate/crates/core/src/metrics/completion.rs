/// Trims and collapses every whitespace run to one space.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn exact_match(candidate: &str, reference: &str) -> f64 {
    if normalize_whitespace(candidate) == normalize_whitespace(reference) {
        100.0
    } else {
        0.0
    }
}

/// Character-level Levenshtein distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if ca == cb { diag } else { 1 + diag.min(up).min(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// `100 * (1 - lev / max_len)` on whitespace-normalized text.
///
/// ```
/// let es = asap::metrics::edit_similarity("abc", "axc");
/// assert!((es - 200.0 / 3.0).abs() < 1e-9);
/// ```
pub fn edit_similarity(candidate: &str, reference: &str) -> f64 {
    let c = normalize_whitespace(candidate);
    let r = normalize_whitespace(reference);
    let longest = c.chars().count().max(r.chars().count());
    if longest == 0 {
        return 100.0;
    }
    100.0 * (1.0 - levenshtein(&c, &r) as f64 / longest as f64)
}
