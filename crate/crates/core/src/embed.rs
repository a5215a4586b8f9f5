//! Text embedders: a stateless signed feature-hashing embedder and a store of
//! precomputed vectors imported from an external sentence encoder.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Comment;
use crate::error::EmbedError;
use crate::hashing::{bucket_hash, sign_hash};

pub const DEFAULT_HASHED_DIM: usize = 512;
pub const MIN_HASHED_DIM: usize = 16;

/// Fixed-dimension representation of one comment. Nonzero vectors are unit
/// length; the zero vector marks degenerate (empty) input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// L2-normalize `values`; a zero input stays zero.
    pub fn normalized(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let values = if norm > 0.0 {
            values.iter().map(|v| (v / norm) as f32).collect()
        } else {
            values.iter().map(|_| 0.0).collect()
        };
        EmbeddingVector { values }
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f64::from(a) * f64::from(b))
            .sum()
    }

    /// Keep the first `dim` coordinates and re-normalize.
    pub fn truncate(&self, dim: usize) -> Result<EmbeddingVector, EmbedError> {
        if dim == 0 || dim > self.dim() {
            return Err(EmbedError::Dimension(format!(
                "cannot truncate a {}-dimensional vector to {dim}",
                self.dim()
            )));
        }
        if dim == self.dim() {
            return Ok(self.clone());
        }
        Ok(EmbeddingVector::normalized(
            self.values[..dim].iter().map(|&v| f64::from(v)).collect(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderDescriptor {
    pub name: String,
    pub dim: usize,
    pub deterministic: bool,
}

/// Anything that can produce an embedding for a comment.
pub trait Embedder: Send + Sync {
    fn descriptor(&self) -> EmbedderDescriptor;
    fn embed_comment(&self, comment: &Comment) -> Result<EmbeddingVector, EmbedError>;
}

/// Signed feature hashing over lowercased word unigrams and per-word
/// character trigrams.
///
/// Each feature string is prefixed with its kind (`w:` or `c:`), placed at
/// bucket `bucket_hash(f) % dim` and added with sign `-1` when the top bit
/// of `sign_hash(f)` is set, `+1` otherwise. Counts accumulate and the
/// result is L2-normalized.
#[derive(Clone, Debug)]
pub struct HashedNgramEmbedder {
    dim: usize,
}

impl HashedNgramEmbedder {
    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        if dim < MIN_HASHED_DIM {
            return Err(EmbedError::Dimension(format!(
                "hashed embedder needs dim >= {MIN_HASHED_DIM}, got {dim}"
            )));
        }
        Ok(HashedNgramEmbedder { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dim];
        for feature in features(text) {
            let (idx, sign) = self.slot(&feature);
            acc[idx] += sign;
        }
        EmbeddingVector::normalized(acc)
    }

    /// Bucket index and sign of one feature string.
    pub fn slot(&self, feature: &str) -> (usize, f64) {
        let idx = (bucket_hash(feature) % self.dim as u64) as usize;
        let sign = if sign_hash(feature) >> 63 == 1 { -1.0 } else { 1.0 };
        (idx, sign)
    }
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        HashedNgramEmbedder {
            dim: DEFAULT_HASHED_DIM,
        }
    }
}

impl Embedder for HashedNgramEmbedder {
    fn descriptor(&self) -> EmbedderDescriptor {
        EmbedderDescriptor {
            name: "hashed-ngram".into(),
            dim: self.dim,
            deterministic: true,
        }
    }

    fn embed_comment(&self, comment: &Comment) -> Result<EmbeddingVector, EmbedError> {
        Ok(self.embed(&comment.body))
    }
}

/// Feature strings of `text`, with repetition: one `w:<token>` per token and
/// one `c:<trigram>` per character trigram inside each token.
pub fn features(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        out.push(format!("w:{token}"));
        let chars: Vec<char> = token.chars().collect();
        for tri in chars.windows(3) {
            let mut f = String::with_capacity(2 + 12);
            f.push_str("c:");
            f.extend(tri);
            out.push(f);
        }
    }
    out
}

/// Vectors produced elsewhere, keyed by comment id.
#[derive(Clone, Debug, Default)]
pub struct PrecomputedStore {
    dim: usize,
    vectors: HashMap<String, EmbeddingVector>,
}

impl PrecomputedStore {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        Self::read(File::open(path)?)
    }

    /// Parse the line format: a `#dim=<d>` header, then
    /// `comment_id<TAB>v1<TAB>...<TAB>vd` rows. Blank lines are ignored.
    /// Rows are L2-normalized on load.
    pub fn read<R: Read>(reader: R) -> Result<Self, EmbedError> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines.next().transpose()?.ok_or(EmbedError::Format {
            line: 1,
            message: "missing #dim header".into(),
        })?;
        let dim: usize = header
            .trim()
            .strip_prefix("#dim=")
            .and_then(|d| d.trim().parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| EmbedError::Format {
                line: 1,
                message: format!("expected `#dim=<d>`, got `{header}`"),
            })?;

        let mut vectors = HashMap::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fail = |message: String| EmbedError::Format { line: line_no, message };
            let mut fields = line.split('\t');
            let id = fields
                .next()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| fail("empty comment id".into()))?;
            let values = fields
                .map(|f| match f.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(fail(format!("bad value `{f}`"))),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if values.len() != dim {
                return Err(fail(format!("expected {dim} values, found {}", values.len())));
            }
            if vectors
                .insert(id.to_string(), EmbeddingVector::normalized(values))
                .is_some()
            {
                return Err(fail(format!("duplicate comment id `{id}`")));
            }
        }
        Ok(PrecomputedStore { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn lookup(&self, comment_id: &str) -> Result<&EmbeddingVector, EmbedError> {
        self.vectors
            .get(comment_id)
            .ok_or_else(|| EmbedError::MissingId(comment_id.to_string()))
    }
}

impl Embedder for PrecomputedStore {
    fn descriptor(&self) -> EmbedderDescriptor {
        EmbedderDescriptor {
            name: "precomputed".into(),
            dim: self.dim,
            deterministic: true,
        }
    }

    fn embed_comment(&self, comment: &Comment) -> Result<EmbeddingVector, EmbedError> {
        self.lookup(&comment.comment_id).cloned()
    }
}

/// Wraps another embedder and keeps only the leading `dim` coordinates.
pub struct Truncated<E> {
    inner: E,
    dim: usize,
}

impl<E: Embedder> Truncated<E> {
    pub fn new(inner: E, dim: usize) -> Result<Self, EmbedError> {
        let full = inner.descriptor().dim;
        if dim == 0 || dim > full {
            return Err(EmbedError::Dimension(format!("cannot truncate {full} to {dim}")));
        }
        Ok(Truncated { inner, dim })
    }
}

impl<E: Embedder> Embedder for Truncated<E> {
    fn descriptor(&self) -> EmbedderDescriptor {
        let inner = self.inner.descriptor();
        EmbedderDescriptor {
            name: format!("{}[..{}]", inner.name, self.dim),
            dim: self.dim,
            deterministic: inner.deterministic,
        }
    }

    fn embed_comment(&self, comment: &Comment) -> Result<EmbeddingVector, EmbedError> {
        self.inner.embed_comment(comment)?.truncate(self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_is_zero_vector() {
        let e = HashedNgramEmbedder::default();
        let v = e.embed("");
        assert_eq!(v.dim(), 512);
        assert!(v.is_degenerate());
        assert_eq!(v.norm(), 0.0);
        assert!(e.embed(" ,.! ").is_degenerate());
    }

    #[test]
    fn dim_below_minimum_is_rejected() {
        assert!(HashedNgramEmbedder::new(15).is_err());
        assert!(HashedNgramEmbedder::new(16).is_ok());
    }

    #[test]
    fn case_is_ignored() {
        let e = HashedNgramEmbedder::new(64).unwrap();
        assert_eq!(e.embed("Hello WORLD"), e.embed("hello world"));
    }

    #[test]
    fn repetition_keeps_direction() {
        let e = HashedNgramEmbedder::default();
        assert_eq!(e.embed("aaaa aaaa"), e.embed("aaaa"));
    }

    #[test]
    fn feature_extraction() {
        assert_eq!(features("Hi, abcd!"), ["w:hi", "w:abcd", "c:abc", "c:bcd"]);
    }

    #[test]
    fn disjoint_features_without_collisions_are_orthogonal() {
        let e = HashedNgramEmbedder::new(1 << 20).unwrap();
        let (a, b) = ("purple elephants dance", "quick brown fox");
        // Oracle: enumerate every bucket each text touches.
        let buckets =
            |t: &str| -> std::collections::HashSet<usize> { features(t).iter().map(|f| e.slot(f).0).collect() };
        assert!(buckets(a).is_disjoint(&buckets(b)));
        assert_eq!(e.embed(a).dot(&e.embed(b)), 0.0);
    }

    #[test]
    fn frozen_bucket_layout() {
        // Pinned so any change to hash constants is caught.
        let e = HashedNgramEmbedder::new(512).unwrap();
        let v = e.embed("hello");
        let nonzero: Vec<usize> = v
            .values()
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, _)| i)
            .collect();
        let expected: Vec<usize> = {
            let mut idx: Vec<usize> = features("hello").iter().map(|f| e.slot(f).0).collect();
            idx.sort_unstable();
            idx.dedup();
            idx
        };
        assert_eq!(nonzero, expected);
        assert_eq!(e.slot("w:hello").0, 500); // fnv1a64("w:hello") = 0xb4f3fb0f6425b9f4
    }

    #[test]
    fn truncate_rules() {
        let e = HashedNgramEmbedder::new(32).unwrap();
        let v = e.embed("the quick brown fox jumps over the lazy dog");
        assert_eq!(v.truncate(32).unwrap(), v);
        assert!(v.truncate(33).is_err());
        assert!(v.truncate(0).is_err());
        let t = v.truncate(20).unwrap();
        assert!(t.is_degenerate() || (t.norm() - 1.0).abs() < 1e-6);
        assert!(EmbeddingVector::zeros(8).truncate(4).unwrap().is_degenerate());
    }

    #[test]
    fn precomputed_store() {
        let dim = 384;
        let row = |id: &str, n: usize| {
            let vals: Vec<String> = (0..n).map(|i| format!("{}", (i as f64) * 0.01)).collect();
            format!("{id}\t{}\n", vals.join("\t"))
        };
        let text = format!("#dim={dim}\n{}{}", row("a", dim), row("b", dim));
        let store = PrecomputedStore::read(text.as_bytes()).unwrap();
        assert_eq!(store.len(), 2);
        assert!((store.lookup("a").unwrap().norm() - 1.0).abs() < 1e-6);
        assert!(matches!(store.lookup("absent"), Err(EmbedError::MissingId(_))));

        let bad = format!("#dim={dim}\n{}", row("a", 383));
        assert!(matches!(
            PrecomputedStore::read(bad.as_bytes()),
            Err(EmbedError::Format { line: 2, .. })
        ));
        assert!(PrecomputedStore::read("dim=3\n".as_bytes()).is_err());

        let zero = "#dim=2\nz\t0\t0\n";
        let store = PrecomputedStore::read(zero.as_bytes()).unwrap();
        assert!(store.lookup("z").unwrap().is_degenerate());
    }

    proptest! {
        #[test]
        fn nonempty_embeddings_are_unit_norm(text in "[a-zA-Z0-9 ]{0,80}", dim in 16usize..600) {
            let e = HashedNgramEmbedder::new(dim).unwrap();
            let v = e.embed(&text);
            prop_assert_eq!(v.dim(), dim);
            prop_assert!(v.values().iter().all(|x| x.is_finite()));
            prop_assert_eq!(&v, &e.embed(&text));
            if !v.is_degenerate() {
                prop_assert!((v.norm() - 1.0).abs() < 1e-6);
                prop_assert!((v.dot(&v) - 1.0).abs() < 1e-6);
            }
        }

        #[test]
        fn truncation_composes(text in "[a-z ]{1,60}", a in 1usize..64, b in 1usize..64) {
            let (a, b) = if b <= a { (a, b) } else { (b, a) };
            let v = HashedNgramEmbedder::new(64).unwrap().embed(&text);
            let twice = v.truncate(a).unwrap().truncate(b).unwrap();
            let once = v.truncate(b).unwrap();
            for (x, y) in twice.values().iter().zip(once.values()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
