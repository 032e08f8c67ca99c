//! Retrieval-augmented few-shot prompting for code summarization and line
//! completion, with the semantic facts (repository, tagged identifiers,
//! dataflow) attached to every exemplar, and the evaluation harness around it.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod llm;
pub mod metrics;
pub mod prompt;
pub mod retrieval;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/prompts.md")]
    mod prompts {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
