#![allow(dead_code)]

use leakscope::classify::ProbeKind;
use leakscope::corpus::{join_labeled, read_author_profiles, CommentReader, LabeledComment, Trait};
use leakscope::evaluate::EvaluationResult;
use leakscope::synth::{generate, SynthConfig};

/// Generate a synthetic corpus in memory and run it through ingest + join.
pub fn labeled_from(cfg: &SynthConfig) -> Vec<LabeledComment> {
    let corpus = generate(cfg).expect("valid synth config");
    let profiles = read_author_profiles(corpus.profiles_csv.as_bytes()).unwrap();
    let comments = CommentReader::new(corpus.comments_csv.as_bytes(), None).unwrap();
    join_labeled(comments, &profiles.profiles).0
}

/// A result record carrying only a lift, for report fixtures.
pub fn lift_record(subreddit: &str, trait_: Trait, lift: f64) -> EvaluationResult {
    EvaluationResult {
        subreddit: subreddit.into(),
        trait_,
        probe: ProbeKind::Logistic,
        accuracy: 0.0,
        f1_true: 0.0,
        f1_false: 0.0,
        macro_f1: 1.0 / 3.0 + lift,
        baseline_macro_f1: 1.0 / 3.0,
        macro_f1_lift: lift,
        n_train: 0,
        n_test: 0,
        seed: 0,
    }
}

/// Published per-trait mean lifts, highest first.
pub const TRAIT_LIFTS: [(Trait, f64); 7] = [
    (Trait::IsFemale, 0.254325),
    (Trait::CountryUs, 0.247760),
    (Trait::AgeUnder25, 0.241801),
    (Trait::Perceiving, 0.226335),
    (Trait::Thinking, 0.225098),
    (Trait::Introverted, 0.224533),
    (Trait::Intuitive, 0.204034),
];

/// Published pairwise grid: (trait, ftm, vegan).
pub const FTM_VEGAN: [(Trait, f64, f64); 3] = [
    (Trait::Perceiving, 0.337657, 0.382776),
    (Trait::AgeUnder25, 0.262881, 0.154686),
    (Trait::Thinking, 0.024375, 0.113626),
];
