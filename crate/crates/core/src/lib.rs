//! Measure how much of an author's sensitive attributes leak through their
//! comments: balanced cohorts per (subreddit, trait), lightweight probes over
//! text embeddings, and macro-F1 lift over a majority-class guess.

pub mod classify;
pub mod cohort;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod evaluate;
pub mod hashing;
pub mod io;
pub mod report;
pub mod search;
pub mod synth;

pub use classify::{ProbeHyper, ProbeKind};
pub use cohort::{build_cohort, Cohort, CohortSpec, Pairing};
pub use corpus::{Corpus, LabeledComment, Trait, TraitVector};
pub use embed::{Embedder, EmbeddingVector, HashedNgramEmbedder, PrecomputedStore};
pub use error::{Error, Result};
pub use evaluate::{evaluate_pairing, evaluate_probes, EvaluationResult};
