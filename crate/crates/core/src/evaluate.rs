//! Confusion counts, macro F1, the majority-class baseline and macro-F1 lift.

use serde::{Deserialize, Serialize};

use crate::classify::{train_probe, FeatureMatrix, Probe, ProbeHyper, ProbeKind};
use crate::cohort::Cohort;
use crate::corpus::Trait;
use crate::embed::Embedder;
use crate::error::{Error, MetricError};

/// Counts with `true` as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// F1 of the `true` class, `2tp / (2tp + fp + fn)`, with 0/0 = 0.
    pub fn f1_true(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    /// F1 of the `false` class, `2tn / (2tn + fn + fp)`, with 0/0 = 0.
    pub fn f1_false(&self) -> f64 {
        ratio(2 * self.tn, 2 * self.tn + self.fp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(predictions: &[bool], truth: &[bool]) -> Result<ConfusionMatrix, MetricError> {
    if predictions.len() != truth.len() {
        return Err(MetricError::LengthMismatch(predictions.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Unweighted mean of the two per-class F1 scores.
///
/// Evaluated as a single integer ratio,
/// `(2tp * D_f + 2tn * D_t) / (2 * D_t * D_f)` where `D_t` and `D_f` are the
/// per-class F1 denominators, so the result is the correctly rounded value of
/// the exact rational while both products stay below 2^53.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let d_true = u128::from(2 * cm.tp + cm.fp + cm.fn_);
    let d_false = u128::from(2 * cm.tn + cm.fp + cm.fn_);
    let (n_true, n_false) = (u128::from(2 * cm.tp), u128::from(2 * cm.tn));
    match (d_true, d_false) {
        (0, 0) => 0.0,
        (0, d) => n_false as f64 / (2 * d) as f64,
        (d, 0) => n_true as f64 / (2 * d) as f64,
        (dt, df) => (n_true * df + n_false * dt) as f64 / (2 * dt * df) as f64,
    }
}

/// The constant classifier that always predicts the majority training label.
/// An exact tie predicts `false`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaiveBaseline {
    pub label: bool,
}

impl NaiveBaseline {
    pub fn predict(&self, n: usize) -> Vec<bool> {
        vec![self.label; n]
    }
}

pub fn naive_baseline(train_labels: &[bool]) -> Result<NaiveBaseline, MetricError> {
    if train_labels.is_empty() {
        return Err(MetricError::Empty);
    }
    let trues = train_labels.iter().filter(|&&b| b).count();
    Ok(NaiveBaseline {
        label: 2 * trues > train_labels.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub subreddit: String,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub probe: ProbeKind,
    pub accuracy: f64,
    pub f1_true: f64,
    pub f1_false: f64,
    pub macro_f1: f64,
    pub baseline_macro_f1: f64,
    pub macro_f1_lift: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl EvaluationResult {
    /// Fill in every metric from the probe's and the baseline's confusion
    /// matrices on the same test set.
    pub fn from_confusion(
        subreddit: &str,
        trait_: Trait,
        probe: ProbeKind,
        probe_cm: &ConfusionMatrix,
        baseline_cm: &ConfusionMatrix,
        n_train: usize,
        seed: u64,
    ) -> Self {
        let probe_macro = macro_f1(probe_cm);
        let baseline_macro_f1 = macro_f1(baseline_cm);
        EvaluationResult {
            subreddit: subreddit.to_string(),
            trait_,
            probe,
            accuracy: probe_cm.accuracy(),
            f1_true: probe_cm.f1_true(),
            f1_false: probe_cm.f1_false(),
            macro_f1: probe_macro,
            baseline_macro_f1,
            macro_f1_lift: probe_macro - baseline_macro_f1,
            n_train,
            n_test: probe_cm.total() as usize,
            seed,
        }
    }
}

/// Train each requested probe on the cohort's train side and score it and
/// the majority baseline on the identical test side. Members are embedded
/// once and shared across probes.
pub fn evaluate_probes(
    cohort: &Cohort,
    embedder: &dyn Embedder,
    probes: &[ProbeKind],
    hyper: &ProbeHyper,
    seed: u64,
) -> Result<Vec<EvaluationResult>, Error> {
    let mut train_vecs = Vec::new();
    let mut train_y = Vec::new();
    let mut test_vecs = Vec::new();
    let mut test_y = Vec::new();
    for m in cohort.train() {
        train_vecs.push(embedder.embed_comment(&m.comment)?);
        train_y.push(cohort.label(m));
    }
    for m in cohort.test() {
        test_vecs.push(embedder.embed_comment(&m.comment)?);
        test_y.push(cohort.label(m));
    }
    let x_train = FeatureMatrix::from_embeddings(&train_vecs)?;
    let x_test = FeatureMatrix::from_embeddings(&test_vecs)?;

    let baseline = naive_baseline(&train_y)?;
    let baseline_cm = confusion(&baseline.predict(test_y.len()), &test_y)?;

    probes
        .iter()
        .map(|&kind| {
            let model = train_probe(kind, &x_train, &train_y, hyper)?;
            let predictions = x_test
                .iter_rows()
                .map(|row| model.classify(row))
                .collect::<Result<Vec<_>, _>>()?;
            let cm = confusion(&predictions, &test_y)?;
            Ok(EvaluationResult::from_confusion(
                &cohort.pairing.subreddit,
                cohort.pairing.trait_,
                kind,
                &cm,
                &baseline_cm,
                train_y.len(),
                seed,
            ))
        })
        .collect()
}

pub fn evaluate_pairing(
    cohort: &Cohort,
    embedder: &dyn Embedder,
    probe: ProbeKind,
    hyper: &ProbeHyper,
    seed: u64,
) -> Result<EvaluationResult, Error> {
    Ok(evaluate_probes(cohort, embedder, &[probe], hyper, seed)?.remove(0))
}
