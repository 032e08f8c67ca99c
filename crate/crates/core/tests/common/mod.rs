//! Shared fixtures and brute-force oracles for the integration tests.
//!
//! The oracles are written from the metric definitions directly, with no
//! code shared with the library: n-gram counts by nested scans, LCS and
//! Levenshtein by full tables, METEOR by enumerating every alignment.

#![allow(dead_code)]

use std::path::Path;

use asap::analysis::EdgeKind;
use asap::corpus::{Language, Sample, SamplePool};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_stemmers::{Algorithm, Stemmer};

// ---------------------------------------------------------------- BLEU

fn count_in(tokens: &[String], gram: &[String]) -> usize {
    if tokens.len() < gram.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len()).filter(|&i| &tokens[i..i + gram.len()] == gram).count()
}

/// (clipped matches, candidate n-gram count), by scanning every position.
pub fn clipped(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    if candidate.len() < n {
        return (0, 0);
    }
    let mut seen: Vec<&[String]> = Vec::new();
    let mut matches = 0;
    for i in 0..=candidate.len() - n {
        let gram = &candidate[i..i + n];
        if seen.contains(&gram) {
            continue;
        }
        seen.push(gram);
        matches += count_in(candidate, gram).min(count_in(reference, gram));
    }
    (matches, candidate.len() - n + 1)
}

pub fn oracle_bleu_cn(c: &[String], r: &[String]) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    if clipped(c, r, 1).0 == 0 {
        return 0.0;
    }
    let mut product = 1.0f64;
    for n in 1..=4 {
        let (m, g) = clipped(c, r, n);
        let s = if n == 1 { 0.0 } else { 1.0 };
        product *= (m as f64 + s) / (g as f64 + s);
    }
    let geo = product.powf(0.25);
    let bp = (1.0 - (r.len() as f64 + 1.0) / (c.len() as f64 + 1.0)).min(0.0).exp();
    (100.0 * geo * bp).min(100.0)
}

/// Chen and Cherry method 4 as the NLTK reference implementation does it.
pub fn oracle_bleu_dc(c: &[String], r: &[String]) -> f64 {
    let stats: Vec<(usize, usize)> = (1..=4).map(|n| clipped(c, r, n)).collect();
    if stats[0].0 == 0 {
        return 0.0;
    }
    let hyp_len = c.len() as f64;
    let mut p: Vec<f64> = Vec::new();
    let mut incvnt = 1;
    for &(m, g) in &stats {
        let denom = g.max(1) as f64;
        if m == 0 && c.len() > 1 {
            let numerator = 1.0 / (2f64.powi(incvnt) * 5.0 / hyp_len.ln());
            p.push(numerator / denom);
            incvnt += 1;
        } else {
            p.push(m as f64 / denom);
        }
    }
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|x| 0.25 * x.ln()).sum();
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / hyp_len).exp() };
    100.0 * bp * s.exp()
}

// ---------------------------------------------------------------- ROUGE-L

pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

pub fn oracle_rouge_l(c: &[String], r: &[String]) -> f64 {
    let l = oracle_lcs(c, r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
    let beta2 = 1.2f64 * 1.2;
    100.0 * ((1.0 + beta2) * p * rec) / (rec + beta2 * p)
}

// ---------------------------------------------------------------- METEOR

struct Enumerator<'a> {
    c: &'a [String],
    r: &'a [String],
    c_stem: Vec<String>,
    r_stem: Vec<String>,
    used: Vec<bool>,
    pairs: Vec<(usize, usize)>,
    /// Best (exact, total, -chunks).
    best: Option<(usize, usize, i64)>,
}

fn chunks_of(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if k == 0 || !(pairs[k - 1].0 + 1 == i && pairs[k - 1].1 + 1 == j) {
            chunks += 1;
        }
    }
    chunks
}

impl Enumerator<'_> {
    fn go(&mut self, i: usize) {
        if i == self.c.len() {
            let exact = self.pairs.iter().filter(|&&(a, b)| self.c[a] == self.r[b]).count();
            let key = (exact, self.pairs.len(), -(chunks_of(&self.pairs) as i64));
            if self.best.is_none_or(|b| key > b) {
                self.best = Some(key);
            }
            return;
        }
        self.go(i + 1);
        for j in 0..self.r.len() {
            if self.used[j] || (self.c[i] != self.r[j] && self.c_stem[i] != self.r_stem[j]) {
                continue;
            }
            self.used[j] = true;
            self.pairs.push((i, j));
            self.go(i + 1);
            self.pairs.pop();
            self.used[j] = false;
        }
    }
}

/// METEOR over every possible alignment: most exact matches, then most
/// matches, then fewest chunks.
pub fn oracle_meteor(c: &[String], r: &[String]) -> f64 {
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let stemmer = Stemmer::create(Algorithm::English);
    let stem = |ts: &[String]| ts.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let mut e = Enumerator {
        c,
        r,
        c_stem: stem(c),
        r_stem: stem(r),
        used: vec![false; r.len()],
        pairs: Vec::new(),
        best: None,
    };
    e.go(0);
    let (_, m, neg_chunks) = e.best.expect("the empty alignment always exists");
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    let p = m / c.len() as f64;
    let rec = m / r.len() as f64;
    let fmean = 10.0 * p * rec / (rec + 9.0 * p);
    let frag = (-neg_chunks) as f64 / m;
    100.0 * fmean * (1.0 - 0.5 * frag.powi(3))
}

// ---------------------------------------------------------------- ES

pub fn oracle_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in t[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t[a.len()][b.len()]
}

pub fn oracle_es(c: &str, r: &str) -> f64 {
    let c = c.split_whitespace().collect::<Vec<_>>().join(" ");
    let r = r.split_whitespace().collect::<Vec<_>>().join(" ");
    let longest = c.chars().count().max(r.chars().count());
    if longest == 0 {
        return 100.0;
    }
    100.0 * (1.0 - oracle_levenshtein(&c, &r) as f64 / longest as f64)
}

// ---------------------------------------------------------------- inputs

const WORDS: &[&str] = &[
    "the", "a", "of", "to", "tensor", "tensors", "round", "rounds", "rounding", "value", "values", "return", "returns",
    "returned", "list", "lists", "integer", "start", "starts", "driver", "process", ".", ",",
];

fn phrase(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let n = rng.gen_range(1..=max_len);
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

/// Candidate/reference summary pairs over a small vocabulary with shared
/// stems, so exact, stem and chunk effects all occur.
pub fn summary_pairs(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (phrase(&mut rng, 9), phrase(&mut rng, 9))).collect()
}

const CODE_CHARS: &[char] = &['a', 'b', 'x', 'y', '_', '(', ')', '=', ' ', ' ', '.', ';', '1', 'é', '→'];

pub fn code_pairs(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let line = |rng: &mut ChaCha8Rng| -> String {
        let len = rng.gen_range(0..30);
        (0..len).map(|_| *CODE_CHARS.choose(rng).expect("non-empty")).collect()
    };
    (0..n).map(|_| (line(&mut rng), line(&mut rng))).collect()
}

// ---------------------------------------------------------------- DFG

pub struct DfgFixture {
    pub name: &'static str,
    pub language: Language,
    pub code: &'static str,
    pub edges: &'static [(usize, EdgeKind, &'static [usize])],
}

use EdgeKind::{ComesFrom as CF, ComputedFrom as CP};

/// Snippets with edge sets derived by hand from reaching definitions.
pub const DFG_FIXTURES: &[DfgFixture] = &[
    DfgFixture {
        name: "assignment then use",
        language: Language::Python,
        code: "x = a + b; return x",
        edges: &[(0, CP, &[1, 2]), (3, CF, &[0])],
    },
    DfgFixture {
        name: "redefinition kills the first def",
        language: Language::Python,
        code: "x=1; x=2; y=x",
        edges: &[(2, CP, &[3]), (3, CF, &[1])],
    },
    DfgFixture {
        name: "if/else join",
        language: Language::Python,
        code: "def f(c):\n    if c:\n        x = 1\n    else:\n        x = 2\n    return x\n",
        edges: &[(2, CF, &[1]), (5, CF, &[3, 4])],
    },
    DfgFixture {
        name: "if without else keeps the entry def",
        language: Language::Python,
        code: "def f(c):\n    x = 0\n    if c:\n        x = 1\n    return x\n",
        edges: &[(3, CF, &[1]), (5, CF, &[2, 4])],
    },
    DfgFixture {
        name: "call arguments",
        language: Language::Python,
        code: "def f(a):\n    y = g(a, 1)\n    return h(y)\n",
        edges: &[(2, CP, &[4]), (4, CF, &[1]), (6, CF, &[2])],
    },
    DfgFixture {
        name: "augmented assignment",
        language: Language::Python,
        code: "def f(n):\n    s = 0\n    s += n\n    return s\n",
        edges: &[(3, CF, &[2]), (3, CP, &[4]), (4, CF, &[1]), (5, CF, &[3])],
    },
    DfgFixture {
        name: "for loop body is optional",
        language: Language::Python,
        code: "def f(xs):\n    t = 0\n    for x in xs:\n        t = t + x\n    return t\n",
        edges: &[(3, CP, &[4]), (4, CF, &[1]), (5, CP, &[6, 7]), (6, CF, &[2]), (7, CF, &[3]), (8, CF, &[2, 5])],
    },
    DfgFixture {
        name: "java declarator and increment",
        language: Language::Java,
        code: "int f(int a) {\n  int b = a * 2;\n  b++;\n  return b;\n}",
        edges: &[(2, CP, &[3]), (3, CF, &[1]), (4, CF, &[2]), (5, CF, &[4])],
    },
    DfgFixture {
        name: "javascript conditional reassignment",
        language: Language::Javascript,
        code: "function f(a) {\n  let x = a;\n  if (a > 0) { x = 1; }\n  return x;\n}",
        edges: &[(2, CP, &[3]), (3, CF, &[1]), (4, CF, &[1]), (6, CF, &[2, 5])],
    },
    DfgFixture {
        name: "try/except join",
        language: Language::Python,
        code: "def f(p):\n    try:\n        v = load(p)\n    except E:\n        v = None\n    return v\n",
        edges: &[(2, CP, &[4]), (4, CF, &[1]), (7, CF, &[2, 6])],
    },
];

// ---------------------------------------------------------------- harness fixture

pub const MOCK_EMPTY_ID: &str = "fixture-empty";
pub const OVERSIZE_ID: &str = "fixture-oversize";

fn fixture_sample(id: &str, func: &str, code: String, summary: &str) -> Sample {
    Sample {
        id: id.into(),
        repo: "fixture-org/fixture".into(),
        path: format!("src/{func}.java"),
        func_name: func.into(),
        code,
        summary: summary.into(),
        language: Language::Java,
        created_at: None,
    }
}

/// A Java body that is about `bytes` long and full of `marker` tokens.
fn bulky_body(name: &str, marker: &str, bytes: usize) -> String {
    let mut code = format!("public void {name}(int {marker}) {{\n");
    let mut i = 0;
    while code.len() < bytes {
        code.push_str(&format!("    int {marker}{i} = {marker} + {i};\n"));
        i += 1;
    }
    code.push('}');
    code
}

/// 50 Java samples: synthetic ones, one target whose nearest exemplars are
/// too large for a three-shot prompt, and one whose mock response stays
/// empty until four exemplars are present.
pub fn e2e_fixture() -> SamplePool {
    let mut samples: Vec<Sample> = asap::synth::pool(Language::Java, 44, 11).samples().to_vec();
    for k in 0..3 {
        samples.push(fixture_sample(
            &format!("fixture-bulky-{k}"),
            &format!("bulky{k}"),
            bulky_body(&format!("bulky{k}"), "zqoversize", 5200),
            &format!("Initializes bulky block number {k}."),
        ));
    }
    samples.push(fixture_sample(
        OVERSIZE_ID,
        "oversized",
        bulky_body("oversized", "zqoversize", 600),
        "Initializes the oversize target.",
    ));
    samples.push(fixture_sample(
        MOCK_EMPTY_ID,
        "quiet",
        format!(
            "public int quiet(int count) {{\n    // {}4\n    int total = count + 1;\n    return total;\n}}",
            asap::llm::MOCK_EMPTY_MARKER
        ),
        "Returns the count plus one.",
    ));
    samples.push(fixture_sample(
        "fixture-plain",
        "plain",
        "public int plain(int count) {\n    return count;\n}".into(),
        "Returns the count.",
    ));
    assert_eq!(samples.len(), 50);
    SamplePool::new(Language::Java, samples, Default::default()).expect("fixture pool is valid")
}

pub fn write_pool(pool: &SamplePool, path: &Path) {
    pool.write_jsonl(path).expect("pool writes");
}

pub fn tokens(s: &str) -> Vec<String> {
    asap::metrics::tokenize_summary(s)
}
