//! The two lightweight probes: binary logistic regression and a CART tree.

mod logistic;
mod tree;

pub use logistic::{gradient_check, loss_and_gradient, train_logistic, LogisticHyper, LogisticModel};
pub use tree::{train_tree, TreeHyper, TreeModel, TreeNode};

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingVector;
use crate::error::ClassifyError;

/// Dense row-major design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    dim: usize,
}

impl FeatureMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ClassifyError> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(ClassifyError::InvalidData(format!(
                    "row {i} has {} features, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix {
            data,
            rows: rows.len(),
            dim,
        })
    }

    pub fn from_embeddings(vectors: &[EmbeddingVector]) -> Result<Self, ClassifyError> {
        let dim = vectors.first().map_or(0, EmbeddingVector::dim);
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for (i, v) in vectors.iter().enumerate() {
            if v.dim() != dim {
                return Err(ClassifyError::InvalidData(format!(
                    "embedding {i} has dim {}, expected {dim}",
                    v.dim()
                )));
            }
            data.extend(v.values().iter().map(|&x| f64::from(x)));
        }
        Ok(FeatureMatrix {
            data,
            rows: vectors.len(),
            dim,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }
}

pub(crate) fn check_training_data(x: &FeatureMatrix, y: &[bool]) -> Result<(), ClassifyError> {
    if x.rows() != y.len() {
        return Err(ClassifyError::InvalidData(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(ClassifyError::InvalidData("need at least two training points".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Logistic,
    Tree,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 2] = [ProbeKind::Logistic, ProbeKind::Tree];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Logistic => "logistic",
            ProbeKind::Tree => "tree",
        }
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "logistic" => Ok(ProbeKind::Logistic),
            "tree" => Ok(ProbeKind::Tree),
            other => Err(format!("unknown probe `{other}` (expected logistic or tree)")),
        }
    }
}

/// A trained probe. Probabilities of exactly 0.5 classify as `false`.
pub trait Probe {
    fn predict_proba(&self, x: &[f64]) -> Result<f64, ClassifyError>;

    fn classify(&self, x: &[f64]) -> Result<bool, ClassifyError> {
        Ok(self.predict_proba(x)? > 0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum TrainedProbe {
    Logistic(LogisticModel),
    Tree(TreeModel),
}

impl Probe for TrainedProbe {
    fn predict_proba(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        match self {
            TrainedProbe::Logistic(m) => m.predict_proba(x),
            TrainedProbe::Tree(m) => m.predict_proba(x),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeHyper {
    pub logistic: LogisticHyper,
    pub tree: TreeHyper,
}

pub fn train_probe(
    kind: ProbeKind,
    x: &FeatureMatrix,
    y: &[bool],
    hyper: &ProbeHyper,
) -> Result<TrainedProbe, ClassifyError> {
    Ok(match kind {
        ProbeKind::Logistic => TrainedProbe::Logistic(train_logistic(x, y, &hyper.logistic)?),
        ProbeKind::Tree => TrainedProbe::Tree(train_tree(x, y, &hyper.tree)?),
    })
}
