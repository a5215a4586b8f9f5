//! Synthetic corpora with planted attribute signals.
//!
//! Authors draw each trait from its prior; every comment is a bag of
//! uniformly drawn base-vocabulary words. For each configured marker, a
//! comment by a trait-true author in the marker's scope gets the marker token
//! appended with probability `p`. The optimal detector, "true iff the marker
//! is present", then has accuracy `(1 + p) / 2` on a balanced population.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Trait;
use crate::error::Error;
use crate::hashing::rng_for;
use crate::io::atomic_write;

pub const PROFILES_FILE: &str = "author_profiles.csv";
pub const COMMENTS_FILE: &str = "comments.csv";

const CONSONANTS: &[u8] = b"bcdfghklmnprstvw";
const VOWELS: &[u8] = b"aeiou";
const NON_US: [&str; 4] = ["Canada", "UK", "Germany", "Australia"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub token: String,
    /// Injection probability per in-scope comment of a trait-true author.
    pub p: f64,
    /// Subreddits where the marker may appear; `None` means all of them.
    #[serde(default)]
    pub subreddits: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_authors: usize,
    pub comments_per_author: usize,
    pub subreddits: Vec<String>,
    pub base_vocab_size: usize,
    pub tokens_per_comment: usize,
    pub trait_markers: BTreeMap<Trait, Marker>,
    /// Probability an author is trait-true; missing traits default to 0.5.
    pub trait_priors: BTreeMap<Trait, f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_authors: 200,
            comments_per_author: 10,
            subreddits: vec!["alpha".into()],
            base_vocab_size: 1000,
            tokens_per_comment: 12,
            trait_markers: BTreeMap::new(),
            trait_priors: BTreeMap::new(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// A single marker for `trait_` in `subreddit` at rate `p`.
    pub fn planted(trait_: Trait, subreddit: &str, p: f64) -> Self {
        let mut cfg = SynthConfig::default();
        cfg.trait_markers.insert(
            trait_,
            Marker {
                token: default_marker(trait_),
                p,
                subreddits: Some(vec![subreddit.to_string()]),
            },
        );
        cfg
    }

    pub fn prior(&self, t: Trait) -> f64 {
        self.trait_priors.get(&t).copied().unwrap_or(0.5)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_authors == 0 || self.comments_per_author == 0 || self.tokens_per_comment == 0 {
            return bad("n_authors, comments_per_author and tokens_per_comment must be positive".into());
        }
        if self.subreddits.is_empty() || self.subreddits.iter().any(|s| s.trim().is_empty()) {
            return bad("at least one non-empty subreddit name is required".into());
        }
        if self.base_vocab_size == 0 || self.base_vocab_size > vocab_capacity() {
            return bad(format!("base_vocab_size must lie in 1..={}", vocab_capacity()));
        }
        for (t, &p) in &self.trait_priors {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("prior for {t} is outside [0, 1]"));
            }
        }
        let vocab: HashSet<String> = (0..self.base_vocab_size).map(vocab_word).collect();
        let mut tokens = HashSet::new();
        for (t, m) in &self.trait_markers {
            if !(0.0..=1.0).contains(&m.p) {
                return bad(format!("marker probability for {t} is outside [0, 1]"));
            }
            if m.token.is_empty() || !m.token.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()) {
                return bad(format!(
                    "marker `{}` must be a single lowercase alphanumeric token",
                    m.token
                ));
            }
            if vocab.contains(&m.token) {
                return bad(format!("marker `{}` collides with the base vocabulary", m.token));
            }
            if !tokens.insert(m.token.as_str()) {
                return bad(format!("marker `{}` is used for more than one trait", m.token));
            }
        }
        Ok(())
    }
}

/// Marker tokens contain digits, which base-vocabulary words never do.
pub fn default_marker(t: Trait) -> String {
    format!("zq{}x{}", t.name().replace('_', ""), t as u8)
}

fn vocab_capacity() -> usize {
    (CONSONANTS.len() * VOWELS.len()).pow(3)
}

/// The `i`-th base word: three consonant-vowel syllables.
pub fn vocab_word(i: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut n = i;
    let mut w = String::with_capacity(6);
    for _ in 0..3 {
        let s = n % base;
        n /= base;
        w.push(CONSONANTS[s / VOWELS.len()] as char);
        w.push(VOWELS[s % VOWELS.len()] as char);
    }
    w
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthCorpus {
    pub profiles_csv: String,
    pub comments_csv: String,
}

impl SynthCorpus {
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        atomic_write(dir.join(PROFILES_FILE), self.profiles_csv.as_bytes())?;
        atomic_write(dir.join(COMMENTS_FILE), self.comments_csv.as_bytes())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus, Error> {
    config.validate()?;
    let mut rng = rng_for(config.seed, &["synth"]);
    let vocab: Vec<String> = (0..config.base_vocab_size).map(vocab_word).collect();
    let in_scope = |m: &Marker, sub: &str| {
        m.subreddits
            .as_ref()
            .is_none_or(|subs| subs.iter().any(|s| s.eq_ignore_ascii_case(sub)))
    };

    let mut profiles = csv::Writer::from_writer(Vec::new());
    profiles
        .write_record(["username", "mbti", "gender", "age", "country"])
        .map_err(csv_err)?;
    let mut comments = csv::Writer::from_writer(Vec::new());
    comments
        .write_record(["comment_id", "username", "subreddit", "created", "body"])
        .map_err(csv_err)?;

    let mut comment_no = 0u64;
    for a in 0..config.n_authors {
        let username = format!("user{a:05}");
        let mut has = BTreeMap::new();
        for t in Trait::ALL {
            has.insert(t, rng.gen_bool(config.prior(t)));
        }
        let mbti: String = [
            if has[&Trait::Introverted] { 'I' } else { 'E' },
            if has[&Trait::Intuitive] { 'N' } else { 'S' },
            if has[&Trait::Thinking] { 'T' } else { 'F' },
            if has[&Trait::Perceiving] { 'P' } else { 'J' },
        ]
        .iter()
        .collect();
        let gender = if has[&Trait::IsFemale] { "f" } else { "m" };
        let age = if has[&Trait::AgeUnder25] {
            rng.gen_range(16..25)
        } else {
            rng.gen_range(25..70)
        };
        let country = if has[&Trait::CountryUs] {
            "US"
        } else {
            NON_US[rng.gen_range(0..NON_US.len())]
        };
        profiles
            .write_record([username.as_str(), &mbti, gender, &age.to_string(), country])
            .map_err(csv_err)?;

        for _ in 0..config.comments_per_author {
            let sub = &config.subreddits[rng.gen_range(0..config.subreddits.len())];
            let mut words: Vec<&str> = (0..config.tokens_per_comment)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
                .collect();
            for (t, m) in &config.trait_markers {
                // Draw for every in-scope comment so the stream does not depend on trait values.
                if in_scope(m, sub) && rng.gen_bool(m.p) && has[t] {
                    words.push(&m.token);
                }
            }
            let id = format!("c{comment_no:07}");
            let created = (1_500_000_000 + comment_no * 60).to_string();
            comments
                .write_record([id.as_str(), &username, sub, &created, &words.join(" ")])
                .map_err(csv_err)?;
            comment_no += 1;
        }
    }

    let into_string = |w: csv::Writer<Vec<u8>>| -> Result<String, Error> {
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("generated csv is utf-8"))
    };
    Ok(SynthCorpus {
        profiles_csv: into_string(profiles)?,
        comments_csv: into_string(comments)?,
    })
}

/// Accuracy of "predict true iff the marker is present" on a balanced
/// population with injection rate `p`.
pub fn bayes_accuracy(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    (1.0 + p) / 2.0
}
