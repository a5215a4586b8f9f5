//! Balanced, seeded, author-disjoint cohorts for one (subreddit, trait) pairing.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledComment, Trait};
use crate::error::CohortError;
use crate::hashing::rng_for;

pub const DEFAULT_TEST_FRACTION: f64 = 0.25;

/// One audit unit. Subreddit names are compared case-insensitively and
/// stored lowercased.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pub subreddit: String,
    #[serde(rename = "trait")]
    pub trait_: Trait,
}

impl Pairing {
    pub fn new(subreddit: &str, trait_: Trait) -> Self {
        Pairing {
            subreddit: subreddit.trim().to_lowercase(),
            trait_,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub subreddit: String,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    /// Upper bound on cohort size in comments (both classes together).
    pub max_size: usize,
    pub min_per_class: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), CohortError> {
        if self.min_per_class < 2 {
            return Err(CohortError::InvalidSpec("min_per_class must be at least 2".into()));
        }
        if self.max_size < 2 * self.min_per_class {
            return Err(CohortError::InvalidSpec(format!(
                "max_size {} is below 2 * min_per_class ({})",
                self.max_size,
                2 * self.min_per_class
            )));
        }
        check_fraction(self.test_fraction)
    }

    pub fn pairing(&self) -> Pairing {
        Pairing::new(&self.subreddit, self.trait_)
    }
}

fn check_fraction(f: f64) -> Result<(), CohortError> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(CohortError::InvalidSpec(format!(
            "test_fraction {f} must lie in (0, 1)"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    pub pairing: Pairing,
    pub seed: u64,
    /// Selected comments, in input order.
    pub members: Vec<LabeledComment>,
    pub n_true: usize,
    pub n_false: usize,
    pub split: BTreeMap<String, Side>,
}

impl Cohort {
    pub fn label(&self, member: &LabeledComment) -> bool {
        member
            .traits
            .get(self.pairing.trait_)
            .expect("cohort members always carry the target trait")
    }

    pub fn side(&self, member: &LabeledComment) -> Side {
        self.split[&member.comment.comment_id]
    }

    pub fn train(&self) -> impl Iterator<Item = &LabeledComment> {
        self.members.iter().filter(|m| self.side(m) == Side::Train)
    }

    pub fn test(&self) -> impl Iterator<Item = &LabeledComment> {
        self.members.iter().filter(|m| self.side(m) == Side::Test)
    }

    pub fn manifest(&self) -> CohortManifest {
        let ids = |side| {
            self.members
                .iter()
                .filter(|m| self.side(m) == side)
                .map(|m| m.comment.comment_id.clone())
                .collect()
        };
        CohortManifest {
            subreddit: self.pairing.subreddit.clone(),
            trait_: self.pairing.trait_,
            seed: self.seed,
            n_true: self.n_true,
            n_false: self.n_false,
            train_ids: ids(Side::Train),
            test_ids: ids(Side::Test),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub subreddit: String,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub seed: u64,
    pub n_true: usize,
    pub n_false: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Indices of comments in `pairing`'s subreddit whose target trait is set,
/// split by class: `(true_indices, false_indices)`.
fn class_indices(labeled: &[LabeledComment], pairing: &Pairing) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, lc) in labeled.iter().enumerate() {
        if !lc.comment.subreddit.eq_ignore_ascii_case(&pairing.subreddit) {
            continue;
        }
        match lc.traits.get(pairing.trait_) {
            Some(true) => pos.push(i),
            Some(false) => neg.push(i),
            None => {}
        }
    }
    (pos, neg)
}

/// Build the balanced cohort for `spec`.
///
/// Each class is shuffled once with an RNG derived from
/// `(seed, subreddit, trait)` and the first `n` of each is kept, where
/// `n = min(minority count, max_size / 2)`. Because the shuffle does not
/// depend on `max_size`, cohorts for growing `max_size` are nested.
/// The balanced subsample of a cohort, before splitting: the first `n` of each
/// class after a seeded shuffle, returned in input order. Each class's draw is
/// a prefix of the same permutation, so cohorts at growing `max_size` nest.
pub fn sample_members(labeled: &[LabeledComment], spec: &CohortSpec) -> Result<Vec<LabeledComment>, CohortError> {
    spec.validate()?;
    let pairing = spec.pairing();
    let (mut pos, mut neg) = class_indices(labeled, &pairing);
    if pos.len() < spec.min_per_class || neg.len() < spec.min_per_class {
        return Err(CohortError::InsufficientClass {
            subreddit: pairing.subreddit,
            trait_: pairing.trait_,
            n_true: pos.len(),
            n_false: neg.len(),
            min_per_class: spec.min_per_class,
        });
    }
    let n = pos.len().min(neg.len()).min(spec.max_size / 2);
    let mut rng = rng_for(spec.seed, &["cohort", &pairing.subreddit, pairing.trait_.name()]);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut chosen: Vec<usize> = pos[..n].iter().chain(&neg[..n]).copied().collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| labeled[i].clone()).collect())
}

pub fn build_cohort(labeled: &[LabeledComment], spec: &CohortSpec) -> Result<Cohort, CohortError> {
    let members = sample_members(labeled, spec)?;
    let pairing = spec.pairing();
    let n = members.len() / 2;
    let split = assign_by_author(&members, &pairing, spec.test_fraction, spec.seed)?;
    Ok(Cohort {
        pairing,
        seed: spec.seed,
        members,
        n_true: n,
        n_false: n,
        split,
    })
}

/// Train/test comment ids of a cohort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitSets {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Re-split a cohort by author with a given fraction and seed.
pub fn split_by_author(cohort: &Cohort, test_fraction: f64, seed: u64) -> Result<SplitSets, CohortError> {
    let assignment = assign_by_author(&cohort.members, &cohort.pairing, test_fraction, seed)?;
    let mut sets = SplitSets {
        train: Vec::new(),
        test: Vec::new(),
    };
    for m in &cohort.members {
        let id = m.comment.comment_id.clone();
        match assignment[&id] {
            Side::Train => sets.train.push(id),
            Side::Test => sets.test.push(id),
        }
    }
    Ok(sets)
}

/// Shuffle authors (sorted first, so member order does not matter) and move
/// them to the test side until it holds at least `test_fraction` of the
/// comments. The author that crosses the target goes to test.
fn assign_by_author(
    members: &[LabeledComment],
    pairing: &Pairing,
    test_fraction: f64,
    seed: u64,
) -> Result<BTreeMap<String, Side>, CohortError> {
    check_fraction(test_fraction)?;
    if members.is_empty() {
        return Err(CohortError::DegenerateSplit("empty cohort".into()));
    }
    let mut per_author: BTreeMap<&str, usize> = BTreeMap::new();
    for m in members {
        *per_author.entry(m.comment.username.as_str()).or_default() += 1;
    }
    let mut authors: Vec<&str> = per_author.keys().copied().collect();
    let mut rng = rng_for(seed, &["split", &pairing.subreddit, pairing.trait_.name()]);
    authors.shuffle(&mut rng);

    let target = test_fraction * members.len() as f64;
    let mut test_count = 0usize;
    let mut side_of: HashMap<&str, Side> = HashMap::with_capacity(authors.len());
    for author in authors {
        if (test_count as f64) < target {
            test_count += per_author[author];
            side_of.insert(author, Side::Test);
        } else {
            side_of.insert(author, Side::Train);
        }
    }

    // [train_false, train_true, test_false, test_true]
    let mut seen = [false; 4];
    let mut split = BTreeMap::new();
    for m in members {
        let side = side_of[m.comment.username.as_str()];
        let label = m.traits.get(pairing.trait_).unwrap_or(false);
        seen[(side == Side::Test) as usize * 2 + label as usize] = true;
        split.insert(m.comment.comment_id.clone(), side);
    }
    if !seen.iter().all(|&s| s) {
        let missing: Vec<&str> = ["train/false", "train/true", "test/false", "test/true"]
            .iter()
            .zip(seen)
            .filter(|(_, s)| !s)
            .map(|(n, _)| *n)
            .collect();
        return Err(CohortError::DegenerateSplit(format!(
            "({}, {}) has no members in {}",
            pairing.subreddit,
            pairing.trait_,
            missing.join(", ")
        )));
    }
    Ok(split)
}
