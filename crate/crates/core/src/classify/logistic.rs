use serde::{Deserialize, Serialize};

use super::{check_training_data, FeatureMatrix, Probe};
use crate::error::ClassifyError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticHyper {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub max_epochs: usize,
    /// Training stops once the largest gradient component falls below this.
    pub grad_tolerance: f64,
    /// Recorded for the manifest; training starts from zero and is seed-free.
    pub seed: u64,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        LogisticHyper {
            learning_rate: 0.5,
            l2_lambda: 1e-3,
            max_epochs: 500,
            grad_tolerance: 1e-4,
            seed: 0,
        }
    }
}

impl LogisticHyper {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::InvalidHyper(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be non-negative");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.grad_tolerance.is_nan() || self.grad_tolerance <= 0.0 {
            return bad("grad_tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: LogisticHyper,
    pub epochs_run: usize,
    pub converged: bool,
    /// Regularized training loss before each update, plus the final value.
    #[serde(default, skip_serializing)]
    pub loss_history: Vec<f64>,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        LogisticModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            hyper: LogisticHyper::default(),
            epochs_run: 0,
            converged: false,
            loss_history: Vec::new(),
        }
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        if x.len() != self.weights.len() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

impl Probe for LogisticModel {
    fn predict_proba(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        Ok(sigmoid(self.decision(x)?))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean log-loss plus `(l2_lambda / 2) * |w|^2`, with its gradient
/// `(d/dw, d/db)`. The bias is not regularized.
pub fn loss_and_gradient(
    x: &FeatureMatrix,
    y: &[bool],
    weights: &[f64],
    bias: f64,
    l2_lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (row, &label) in x.iter_rows().zip(y) {
        let z = dot(weights, row) + bias;
        let target = if label { 1.0 } else { 0.0 };
        loss += softplus(z) - target * z;
        let residual = sigmoid(z) - target;
        grad_b += residual;
        if residual != 0.0 {
            for (g, &xi) in grad_w.iter_mut().zip(row) {
                *g += residual * xi;
            }
        }
    }
    let sq_norm: f64 = weights.iter().map(|w| w * w).sum();
    loss = loss / n + 0.5 * l2_lambda * sq_norm;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2_lambda * w;
    }
    (loss, grad_w, grad_b / n)
}

/// Full-batch gradient descent from zero weights and bias.
pub fn train_logistic(x: &FeatureMatrix, y: &[bool], hyper: &LogisticHyper) -> Result<LogisticModel, ClassifyError> {
    check_training_data(x, y)?;
    hyper.validate()?;
    let mut weights = vec![0.0; x.dim()];
    let mut bias = 0.0;
    let mut history = Vec::with_capacity(hyper.max_epochs + 1);
    let mut epochs_run = 0;
    let mut converged = false;
    loop {
        let (loss, grad_w, grad_b) = loss_and_gradient(x, y, &weights, bias, hyper.l2_lambda);
        if !loss.is_finite() {
            return Err(ClassifyError::NonFiniteLoss(epochs_run));
        }
        history.push(loss);
        let max_grad = grad_w.iter().fold(grad_b.abs(), |m, g| m.max(g.abs()));
        if max_grad < hyper.grad_tolerance {
            converged = true;
            break;
        }
        if epochs_run == hyper.max_epochs {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= hyper.learning_rate * g;
        }
        bias -= hyper.learning_rate * grad_b;
        epochs_run += 1;
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(ClassifyError::NonFiniteLoss(epochs_run));
    }
    Ok(LogisticModel {
        weights,
        bias,
        hyper: hyper.clone(),
        epochs_run,
        converged,
        loss_history: history,
    })
}

/// Largest componentwise relative error between the analytic gradient and
/// central finite differences at `(weights, bias)`. Denominators are floored
/// at `1e-8` so components that are both near zero compare absolutely.
pub fn gradient_check(x: &FeatureMatrix, y: &[bool], weights: &[f64], bias: f64, l2_lambda: f64, epsilon: f64) -> f64 {
    assert!((1e-8..=1e-3).contains(&epsilon), "epsilon must lie in [1e-8, 1e-3]");
    let (_, grad_w, grad_b) = loss_and_gradient(x, y, weights, bias, l2_lambda);
    let loss_at = |w: &[f64], b: f64| loss_and_gradient(x, y, w, b, l2_lambda).0;
    let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);

    let mut worst = {
        let numeric = (loss_at(weights, bias + epsilon) - loss_at(weights, bias - epsilon)) / (2.0 * epsilon);
        rel(grad_b, numeric)
    };
    let mut probe = weights.to_vec();
    for j in 0..weights.len() {
        probe[j] = weights[j] + epsilon;
        let up = loss_at(&probe, bias);
        probe[j] = weights[j] - epsilon;
        let down = loss_at(&probe, bias);
        probe[j] = weights[j];
        worst = worst.max(rel(grad_w[j], (up - down) / (2.0 * epsilon)));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn all_true_labels_learn_positive_bias() {
        let x = matrix(&[vec![0.1, 0.2], vec![-0.3, 0.5], vec![0.7, -0.1]]);
        let y = [true; 3];
        let m = train_logistic(&x, &y, &LogisticHyper::default()).unwrap();
        for row in x.iter_rows() {
            assert!(m.predict_proba(row).unwrap() > 0.5);
        }
    }

    #[test]
    fn one_dimensional_separable() {
        let x = matrix(&[vec![-1.0], vec![1.0]]);
        let y = [false, true];
        // At w = b = 0: dL/dw = mean((0.5 - y) x) = (0.5 * -1 + -0.5 * 1) / 2 = -0.5.
        let (_, gw, gb) = loss_and_gradient(&x, &y, &[0.0], 0.0, 0.0);
        assert_eq!(gw, vec![-0.5]);
        assert_eq!(gb, 0.0);
        let m = train_logistic(&x, &y, &LogisticHyper::default()).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(!m.classify(&[-1.0]).unwrap());
        assert!(m.classify(&[1.0]).unwrap());
    }

    #[test]
    fn zero_init_bias_gradient_vanishes_on_balanced_labels() {
        let x = matrix(&[vec![0.3, 1.0], vec![-2.0, 0.5], vec![0.9, 0.9], vec![1.0, -1.0]]);
        let y = [true, false, false, true];
        let (_, _, gb) = loss_and_gradient(&x, &y, &[0.0, 0.0], 0.0, 1e-3);
        assert!(gb.abs() <= 1e-12);
    }

    #[test]
    fn l2_term_alone() {
        // With every point at the origin and b chosen so sigma(b) = mean(y) = 0.5,
        // the data term has zero gradient and only l2_lambda * w remains.
        let x = matrix(&[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]);
        let y = [true, false];
        let w = [0.5, -2.0, 3.0];
        let (_, gw, _) = loss_and_gradient(&x, &y, &w, 0.0, 0.1);
        assert_eq!(gw, vec![0.1 * 0.5, 0.1 * -2.0, 0.1 * 3.0]);
    }

    #[test]
    fn prediction_rules() {
        let m = LogisticModel::zeros(3);
        assert_eq!(m.predict_proba(&[5.0, -1.0, 2.0]).unwrap(), 0.5);
        assert!(!m.classify(&[5.0, -1.0, 2.0]).unwrap());
        assert!(matches!(
            m.predict_proba(&[1.0]),
            Err(ClassifyError::DimensionMismatch { .. })
        ));
        let mut m = LogisticModel::zeros(1);
        m.weights[0] = 1.0;
        let ps: Vec<f64> = [-3.0, -1.0, 0.0, 1.0, 3.0]
            .iter()
            .map(|&v| m.predict_proba(&[v]).unwrap())
            .collect();
        assert!(ps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn divergent_learning_rate_is_reported() {
        let x = matrix(&[vec![1e200], vec![-1e200]]);
        let y = [true, false];
        let hyper = LogisticHyper {
            learning_rate: 1e200,
            ..Default::default()
        };
        assert!(matches!(
            train_logistic(&x, &y, &hyper),
            Err(ClassifyError::NonFiniteLoss(_))
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = matrix(&[vec![1.0]]);
        assert!(train_logistic(&x, &[true], &LogisticHyper::default()).is_err());
        let x = matrix(&[vec![1.0], vec![2.0]]);
        assert!(train_logistic(&x, &[true], &LogisticHyper::default()).is_err());
        let hyper = LogisticHyper {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(train_logistic(&x, &[true, false], &hyper).is_err());
    }

    #[test]
    fn loss_never_increases_at_defaults() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                let v: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter().map(|a| a / n).collect()
            })
            .collect();
        let y: Vec<bool> = rows.iter().map(|r| r[0] + 0.3 * r[1] > 0.0).collect();
        let m = train_logistic(&matrix(&rows), &y, &LogisticHyper::default()).unwrap();
        assert!(m.epochs_run <= 500);
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn duplicating_data_keeps_decision_function() {
        let rows = vec![vec![0.2, 0.9], vec![-0.4, 0.1], vec![0.8, -0.6], vec![-0.5, -0.5]];
        let y = vec![true, false, true, false];
        let mut rows2 = rows.clone();
        rows2.extend(rows.clone());
        let mut y2 = y.clone();
        y2.extend(y.clone());
        let a = train_logistic(&matrix(&rows), &y, &LogisticHyper::default()).unwrap();
        let b = train_logistic(&matrix(&rows2), &y2, &LogisticHyper::default()).unwrap();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa - wb).abs() < 1e-9);
        }
        assert!((a.bias - b.bias).abs() < 1e-9);
    }

    #[test]
    fn serializes_without_history() {
        let m = train_logistic(
            &matrix(&[vec![-1.0], vec![1.0]]),
            &[false, true],
            &LogisticHyper::default(),
        )
        .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(!json.contains("loss_history"));
        let back: LogisticModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back.weights, m.weights);
    }
}
