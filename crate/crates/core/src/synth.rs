//! Deterministic synthetic corpora.
//!
//! Small template-generated functions with plausible identifiers, control
//! flow and summaries. They exist so the pipeline can be exercised end to end
//! without a real dataset; every output is a pure function of the seed.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Language, Provenance, Sample, SamplePool};

const REPOS: &[&str] = &[
    "tony19/logback-android",
    "apache/parquet-mr",
    "ngageoint/geopackage-android",
    "apache/airflow",
    "pallets/flask",
    "real-logic/aeron",
    "boazsegev/tensor_stream",
    "spring-projects/spring-boot",
];

const VERBS: &[&str] = &[
    "load", "parse", "compute", "update", "build", "read", "write", "merge", "check", "resolve", "render", "scale",
    "filter", "encode", "collect",
];

const NOUNS: &[&str] = &[
    "config", "buffer", "tensor", "record", "header", "index", "message", "payload", "entry", "schema", "token",
    "value", "segment", "frame", "row",
];

const QUALIFIERS: &[&str] =
    &["from the given", "for the current", "into a new", "using the provided", "with the cached"];

struct Words {
    verb: &'static str,
    noun: &'static str,
    other: &'static str,
    qualifier: &'static str,
}

fn camel(parts: &[&str]) -> String {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i == 0 {
            out.push_str(p);
        } else {
            let mut c = p.chars();
            if let Some(first) = c.next() {
                out.extend(first.to_uppercase());
                out.push_str(c.as_str());
            }
        }
    }
    out
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty word list")
}

fn python_body(rng: &mut ChaCha8Rng, w: &Words, name: &str, params: &[String]) -> String {
    let p0 = params.first().cloned().unwrap_or_else(|| "self".to_string());
    let mut lines = vec![format!("def {name}({}):", params.join(", "))];
    let result = format!("{}_{}", w.noun, pick(rng, &["out", "result", "acc"]));
    lines.push(format!("    {result} = {}({p0})", camel(&["make", w.noun]).to_lowercase()));
    let shape = rng.gen_range(0..4);
    match shape {
        0 => {
            lines.push(format!("    for item in {p0}:"));
            lines.push(format!("        {result} = {result} + item.{}", w.other));
        }
        1 => {
            lines.push(format!("    if {p0} is None:"));
            lines.push(format!("        {result} = {}_default", w.noun));
            lines.push("    else:".to_string());
            lines.push(format!("        {result} = {}({result}, {p0})", w.verb));
        }
        2 => {
            lines.push(format!("    count = len({p0})"));
            lines.push("    while count > 0:".to_string());
            lines.push("        count -= 1".to_string());
            lines.push(format!("        {result}.append({p0}[count])"));
        }
        _ => {
            lines.push(format!("    # {} the {}", w.verb, w.noun));
            lines.push(format!("    {}_{} = {result}.{}()", w.other, w.noun, w.verb));
            lines.push(format!("    {result} = {}_{}", w.other, w.noun));
        }
    }
    if params.len() > 1 {
        lines.push(format!("    {result} = {result}.with_{}({})", w.other, params[1]));
    }
    lines.push(format!("    return {result}"));
    lines.join("\n")
}

fn java_body(rng: &mut ChaCha8Rng, w: &Words, name: &str, params: &[String]) -> String {
    let ty = camel(&[w.noun]);
    let ty = format!("{}{}", ty[..1].to_uppercase(), &ty[1..]);
    let decl: Vec<String> = params.iter().map(|p| format!("{ty} {p}")).collect();
    let p0 = params.first().cloned().unwrap_or_else(|| "this.state".to_string());
    let result = camel(&[w.noun, pick(rng, &["out", "result", "acc"])]);
    let mut lines = vec![format!("public {ty} {name}({}) {{", decl.join(", "))];
    lines.push(format!("    {ty} {result} = new {ty}({p0});"));
    match rng.gen_range(0..4) {
        0 => {
            lines.push(format!("    for ({ty} item : {p0}.items()) {{"));
            lines.push(format!("        {result} = {result}.{}(item);", w.verb));
            lines.push("    }".to_string());
        }
        1 => {
            lines.push(format!("    if ({p0} == null) {{"));
            lines.push(format!("        {result} = {ty}.empty();"));
            lines.push("    } else {".to_string());
            lines.push(format!("        {result} = {}({result}, {p0});", w.verb));
            lines.push("    }".to_string());
        }
        2 => {
            lines.push(format!("    int count = {p0}.size();"));
            lines.push("    while (count > 0) {".to_string());
            lines.push("        count--;".to_string());
            lines.push(format!("        {result}.add({p0}.get(count));"));
            lines.push("    }".to_string());
        }
        _ => {
            lines.push(format!("    // {} the {}", w.verb, w.noun));
            lines.push(format!("    {ty} {} = {result}.{}();", camel(&[w.other, w.noun]), w.verb));
            lines.push(format!("    {result} = {};", camel(&[w.other, w.noun])));
        }
    }
    if params.len() > 1 {
        lines.push(format!("    {result}.{}({});", camel(&["with", w.other]), params[1]));
    }
    lines.push(format!("    return {result};"));
    lines.push("}".to_string());
    lines.join("\n")
}

/// Generates one sample. Languages other than Java use the Python template.
pub fn sample(language: Language, index: usize, rng: &mut ChaCha8Rng) -> Sample {
    let w = Words {
        verb: pick(rng, VERBS),
        noun: pick(rng, NOUNS),
        other: pick(rng, NOUNS),
        qualifier: pick(rng, QUALIFIERS),
    };
    let repo = pick(rng, REPOS).to_string();
    let n_params = rng.gen_range(0..=3);
    let params: Vec<String> = (0..n_params)
        .map(|i| match language {
            Language::Java => camel(&[pick(rng, NOUNS), ["a", "b", "c"][i]]),
            _ => format!("{}_{}", pick(rng, NOUNS), ["a", "b", "c"][i]),
        })
        .collect();

    let (name, code, path) = match language {
        Language::Java => {
            let name = camel(&[w.verb, w.noun]);
            let code = java_body(rng, &w, &name, &params);
            let class = format!("{}{}", w.noun[..1].to_uppercase(), &w.noun[1..]);
            let path = format!("src/main/java/org/{}/{}Util.java", repo.split('/').next().unwrap(), class);
            (name, code, path)
        }
        _ => {
            let name = format!("{}_{}", w.verb, w.noun);
            let code = python_body(rng, &w, &name, &params);
            let path = format!("{}/{}.py", repo.split('/').nth(1).unwrap().replace('-', "_"), w.noun);
            (name, code, path)
        }
    };
    let summary = match params.first() {
        Some(p) => format!(
            "{}{} the {} {} {}.",
            w.verb[..1].to_uppercase(),
            &w.verb[1..],
            w.noun,
            w.qualifier,
            p.replace('_', " ")
        ),
        None => format!("{}{} the {} {} {}.", w.verb[..1].to_uppercase(), &w.verb[1..], w.noun, w.qualifier, w.other),
    };
    let func_name = format!("{}.{}", path.rsplit('/').next().unwrap().split('.').next().unwrap(), name);
    let base = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    let created_at = Some(base + Duration::hours(rng.gen_range(0..24 * 365 * 6)));
    Sample { id: format!("{}-{:05}", language, index), repo, path, func_name, code, summary, language, created_at }
}

/// A pool of `n` synthetic samples; identical for identical arguments.
pub fn pool(language: Language, n: usize, seed: u64) -> SamplePool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n).map(|i| sample(language, i, &mut rng)).collect();
    let provenance = Provenance {
        source: format!("synthetic:{language}:{n}:{seed}").into(),
        derivation: vec!["synth::pool".to_string()],
        skipped_records: 0,
    };
    SamplePool::new(language, samples, provenance).expect("synthetic ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(pool(Language::Python, 30, 5), pool(Language::Python, 30, 5));
        assert_ne!(pool(Language::Python, 30, 5), pool(Language::Python, 30, 6));
    }

    #[test]
    fn samples_are_multi_line() {
        for lang in [Language::Python, Language::Java] {
            for s in pool(lang, 50, 2).samples() {
                assert!(s.code.lines().count() >= 4, "{}", s.code);
                assert!(!s.summary.is_empty());
            }
        }
    }
}
