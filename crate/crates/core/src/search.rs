//! Iterative pairing search: screen every eligible (subreddit, trait) pairing
//! on progressively larger nested cohorts and fully evaluate the survivors.

use std::collections::{BTreeMap, HashMap};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{ProbeHyper, ProbeKind};
use crate::cohort::{build_cohort, CohortSpec, Pairing};
use crate::corpus::{LabeledComment, Trait};
use crate::embed::Embedder;
use crate::error::{CohortError, Error};
use crate::evaluate::{evaluate_probes, EvaluationResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Comments per class at each screening stage, strictly ascending.
    /// Survivors of the last stage are evaluated on the full cohort.
    pub stage_sizes: Vec<usize>,
    /// Minimum interim lift needed to advance.
    pub promote_threshold: f64,
    /// No new candidates are issued once this many are promoted.
    pub max_pairings: usize,
    pub min_per_class: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            stage_sizes: vec![500, 5000],
            promote_threshold: 0.05,
            max_pairings: 100,
            min_per_class: 25,
            test_fraction: crate::cohort::DEFAULT_TEST_FRACTION,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        if self.stage_sizes.is_empty() || self.stage_sizes.contains(&0) {
            return bad("stage_sizes must be a non-empty list of positive sizes".into());
        }
        if self.stage_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("stage_sizes {:?} must be strictly ascending", self.stage_sizes));
        }
        if self.promote_threshold.is_nan() || self.promote_threshold < 0.0 {
            return bad("promote_threshold must be non-negative".into());
        }
        if self.max_pairings == 0 {
            return bad("max_pairings must be positive".into());
        }
        if self.min_per_class < 2 {
            return bad("min_per_class must be at least 2".into());
        }
        if self.stage_sizes[0] < self.min_per_class {
            return bad("the first stage must hold at least min_per_class comments per class".into());
        }
        Ok(())
    }

    fn spec(&self, pairing: &Pairing, per_class: Option<usize>) -> CohortSpec {
        CohortSpec {
            subreddit: pairing.subreddit.clone(),
            trait_: pairing.trait_,
            max_size: per_class.map_or(usize::MAX, |n| n.saturating_mul(2)),
            min_per_class: self.min_per_class,
            test_fraction: self.test_fraction,
            seed: self.seed,
        }
    }
}

/// `(n_true, n_false)` per pairing over comments with the trait set.
pub fn pairing_counts(labeled: &[LabeledComment]) -> BTreeMap<Pairing, (usize, usize)> {
    let mut counts = BTreeMap::new();
    for lc in labeled {
        for t in Trait::ALL {
            if let Some(v) = lc.traits.get(t) {
                let entry: &mut (usize, usize) = counts.entry(Pairing::new(&lc.comment.subreddit, t)).or_default();
                if v {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
    }
    counts
}

/// Pairings where both classes reach `min_per_class`, ordered by subreddit
/// then by the fixed trait order.
pub fn enumerate_pairings(counts: &BTreeMap<Pairing, (usize, usize)>, min_per_class: usize) -> Vec<Pairing> {
    counts
        .iter()
        .filter(|(_, &(t, f))| t >= min_per_class && f >= min_per_class)
        .map(|(p, _)| p.clone())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Promoted,
    Pruned,
    SkippedInsufficient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingOutcome {
    #[serde(flatten)]
    pub pairing: Pairing,
    pub status: OutcomeStatus,
    /// Screening stages evaluated; equals `interim_lifts.len()`.
    pub stage_reached: usize,
    pub interim_lifts: Vec<f64>,
    /// Full-cohort results, one per probe; present iff promoted.
    #[serde(rename = "final")]
    pub final_results: Option<Vec<EvaluationResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// What one search needs besides the corpus.
pub struct SearchContext<'a> {
    pub config: &'a SearchConfig,
    pub embedder: &'a dyn Embedder,
    pub probes: &'a [ProbeKind],
    pub hyper: &'a ProbeHyper,
}

fn mean_lift(results: &[EvaluationResult]) -> f64 {
    results.iter().map(|r| r.macro_f1_lift).sum::<f64>() / results.len() as f64
}

/// Screen one pairing through every stage, then evaluate it in full if it
/// survives. Cohort failures end the pairing as `skipped_insufficient`.
pub fn screen_pairing(
    labeled: &[LabeledComment],
    pairing: &Pairing,
    ctx: &SearchContext,
) -> Result<PairingOutcome, Error> {
    let mut outcome = PairingOutcome {
        pairing: pairing.clone(),
        status: OutcomeStatus::Pruned,
        stage_reached: 0,
        interim_lifts: Vec::new(),
        final_results: None,
        reason: None,
    };
    let cfg = ctx.config;
    let stages = cfg.stage_sizes.iter().map(|&s| Some(s)).chain(std::iter::once(None));
    for per_class in stages {
        let cohort = match build_cohort(labeled, &cfg.spec(pairing, per_class)) {
            Ok(c) => c,
            Err(e @ (CohortError::InsufficientClass { .. } | CohortError::DegenerateSplit(_))) => {
                outcome.status = OutcomeStatus::SkippedInsufficient;
                outcome.reason = Some(e.to_string());
                return Ok(outcome);
            }
            Err(e) => return Err(e.into()),
        };
        let results = evaluate_probes(&cohort, ctx.embedder, ctx.probes, ctx.hyper, cfg.seed)?;
        if per_class.is_none() {
            outcome.status = OutcomeStatus::Promoted;
            outcome.final_results = Some(results);
            return Ok(outcome);
        }
        let lift = mean_lift(&results);
        outcome.interim_lifts.push(lift);
        outcome.stage_reached += 1;
        if lift < cfg.promote_threshold {
            outcome.status = OutcomeStatus::Pruned;
            return Ok(outcome);
        }
    }
    unreachable!("the full-cohort stage always returns")
}

#[cfg(feature = "parallel")]
fn screen_batch(
    labeled: &[LabeledComment],
    batch: &[Pairing],
    ctx: &SearchContext,
    workers: usize,
) -> Result<Vec<PairingOutcome>, Error> {
    use rayon::prelude::*;
    if workers <= 1 {
        return batch.iter().map(|p| screen_pairing(labeled, p, ctx)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| batch.par_iter().map(|p| screen_pairing(labeled, p, ctx)).collect())
}

#[cfg(not(feature = "parallel"))]
fn screen_batch(
    labeled: &[LabeledComment],
    batch: &[Pairing],
    ctx: &SearchContext,
    _workers: usize,
) -> Result<Vec<PairingOutcome>, Error> {
    batch.iter().map(|p| screen_pairing(labeled, p, ctx)).collect()
}

/// Run the search over every eligible pairing.
///
/// Candidates are screened in batches of `workers`; outcomes are accepted
/// in candidate order, so the result is the same for any worker count.
/// Pairings already in `previous` are reused rather than recomputed, and
/// `on_outcome` sees each accepted outcome in order.
pub fn run_search_with(
    labeled: &[LabeledComment],
    ctx: &SearchContext,
    workers: usize,
    previous: &[PairingOutcome],
    mut on_outcome: impl FnMut(&PairingOutcome, bool) -> Result<(), Error>,
) -> Result<Vec<PairingOutcome>, Error> {
    ctx.config.validate()?;
    if ctx.probes.is_empty() {
        return Err(Error::Config("at least one probe is required".into()));
    }
    let candidates = enumerate_pairings(&pairing_counts(labeled), ctx.config.min_per_class);
    let known: HashMap<&Pairing, &PairingOutcome> = previous.iter().map(|o| (&o.pairing, o)).collect();
    let workers = workers.max(1);

    let mut outcomes = Vec::new();
    let mut promoted = 0;
    let mut pending = candidates.iter().peekable();
    while pending.peek().is_some() && promoted < ctx.config.max_pairings {
        // At most `workers` fresh pairings per batch; reused ones ride along.
        let mut batch = Vec::new();
        let mut fresh = Vec::new();
        while let Some(p) = pending.peek() {
            if !known.contains_key(p) {
                if fresh.len() == workers {
                    break;
                }
                fresh.push((*p).clone());
            }
            batch.push(*p);
            pending.next();
        }
        let mut computed = screen_batch(labeled, &fresh, ctx, workers)?.into_iter();
        for p in batch {
            let (outcome, reused) = match known.get(p) {
                Some(o) => ((*o).clone(), true),
                None => (computed.next().expect("one outcome per fresh pairing"), false),
            };
            if promoted >= ctx.config.max_pairings {
                break;
            }
            if outcome.status == OutcomeStatus::Promoted {
                promoted += 1;
            }
            on_outcome(&outcome, reused)?;
            outcomes.push(outcome);
        }
    }
    Ok(outcomes)
}

pub fn run_search(
    labeled: &[LabeledComment],
    ctx: &SearchContext,
    workers: usize,
) -> Result<Vec<PairingOutcome>, Error> {
    run_search_with(labeled, ctx, workers, &[], |_, _| Ok(()))
}

/// Resumable search: outcomes already recorded in `trace` are skipped and
/// new ones are appended to it as they are accepted.
pub fn run_search_resumable(
    labeled: &[LabeledComment],
    ctx: &SearchContext,
    workers: usize,
    trace: &Path,
) -> Result<Vec<PairingOutcome>, Error> {
    let previous: Vec<PairingOutcome> = if trace.exists() {
        crate::io::read_jsonl(trace)?
    } else {
        Vec::new()
    };
    let mut file = OpenOptions::new().create(true).append(true).open(trace)?;
    run_search_with(labeled, ctx, workers, &previous, |outcome, reused| {
        if !reused {
            writeln!(file, "{}", serde_json::to_string(outcome)?)?;
            file.flush()?;
        }
        Ok(())
    })
}

/// Final results of every promoted pairing, in outcome order.
pub fn promoted_results(outcomes: &[PairingOutcome]) -> Vec<EvaluationResult> {
    outcomes
        .iter()
        .filter_map(|o| o.final_results.as_ref())
        .flatten()
        .cloned()
        .collect()
}
