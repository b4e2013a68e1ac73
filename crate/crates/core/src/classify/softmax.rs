//! Multinomial logistic regression trained by mini-batch gradient descent.
//!
//! Objective: mean cross-entropy over the batch plus `l2 / 2 * |W|^2`, with
//! `W` the `C x (F + 1)` weight matrix whose last column is the bias.
//! Weights start at zero. Each epoch reshuffles the training pixels with a
//! SplitMix64 stream seeded from `seed` and walks them in consecutive
//! batches; gradients within a batch accumulate in batch order.

use serde::{Deserialize, Serialize};

use crate::classify::{training_rows, FeatureMatrix, PixelClassifier};
use crate::error::{Error, Result};
use crate::raster::{LabelMap, PixelMask};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for SoftmaxHyper {
    fn default() -> Self {
        Self { learning_rate: 0.001, epochs: 40, batch_size: 16, l2: 1e-4, seed: 0 }
    }
}

impl SoftmaxHyper {
    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidConfig { what: "softmax", reason });
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be non-negative, got {}", self.l2));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    num_classes: u16,
    num_features: usize,
    weights: Vec<f32>,
    pub hyper: SoftmaxHyper,
}

impl SoftmaxModel {
    pub fn from_weights(num_classes: u16, num_features: usize, weights: Vec<f32>, hyper: SoftmaxHyper) -> Result<Self> {
        let expected = num_classes as usize * (num_features + 1);
        if weights.len() != expected || num_classes == 0 {
            return Err(Error::DimensionMismatch {
                what: "softmax weights".into(),
                expected: expected.to_string(),
                found: weights.len().to_string(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteValue {
                field: "softmax weights",
                location: "model".into(),
                value: weights.iter().copied().find(|w| !w.is_finite()).unwrap_or(f32::NAN),
            });
        }
        Ok(Self { num_classes, num_features, weights, hyper })
    }

    /// Row-major `C x (F + 1)`, bias last.
    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn logits(&self, row: &[f32]) -> Vec<f64> {
        let stride = self.num_features + 1;
        self.weights
            .chunks_exact(stride)
            .map(|w| {
                w[..self.num_features].iter().zip(row).map(|(&a, &x)| a as f64 * x as f64).sum::<f64>()
                    + w[self.num_features] as f64
            })
            .collect()
    }

    pub fn probabilities(&self, row: &[f32]) -> Vec<f64> {
        let mut z = self.logits(row);
        softmax_in_place(&mut z);
        z
    }
}

impl PixelClassifier for SoftmaxModel {
    fn num_classes(&self) -> u16 {
        self.num_classes
    }

    fn num_features(&self) -> usize {
        self.num_features
    }

    /// Largest logit; ties go to the smaller class id.
    fn classify_row(&self, row: &[f32]) -> u16 {
        let mut best = (f64::NEG_INFINITY, 1u16);
        for (i, z) in self.logits(row).into_iter().enumerate() {
            if z > best.0 {
                best = (z, i as u16 + 1);
            }
        }
        best.1
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Objective and its gradient for weights `w` (`C x (F + 1)`, f64) over the
/// `samples` given as `(row, class)` pairs.
pub fn loss_and_gradient(
    w: &[f64],
    num_classes: usize,
    features: &FeatureMatrix,
    samples: &[(usize, u16)],
    l2: f64,
) -> (f64, Vec<f64>) {
    let f = features.cols();
    let stride = f + 1;
    debug_assert_eq!(w.len(), num_classes * stride);
    let mut grad = vec![0.0; w.len()];
    let mut loss = 0.0;
    let mut z = vec![0.0; num_classes];
    let scale = 1.0 / samples.len().max(1) as f64;
    for &(p, class) in samples {
        let x = features.row(p);
        for (c, zc) in z.iter_mut().enumerate() {
            let wc = &w[c * stride..(c + 1) * stride];
            *zc = wc[..f].iter().zip(x).map(|(&a, &b)| a * b as f64).sum::<f64>() + wc[f];
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        let target = class as usize - 1;
        loss += (log_sum - z[target]) * scale;
        for c in 0..num_classes {
            let residual = ((z[c] - log_sum).exp() - if c == target { 1.0 } else { 0.0 }) * scale;
            let g = &mut grad[c * stride..(c + 1) * stride];
            for (gi, &xi) in g[..f].iter_mut().zip(x) {
                *gi += residual * xi as f64;
            }
            g[f] += residual;
        }
    }
    if l2 > 0.0 {
        loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        for (g, &v) in grad.iter_mut().zip(w) {
            *g += l2 * v;
        }
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Full training objective before the first epoch and after each epoch.
    pub losses: Vec<f64>,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }
}

pub fn train_softmax(
    features: &FeatureMatrix,
    labels: &LabelMap,
    train: &PixelMask,
    hyper: &SoftmaxHyper,
) -> Result<(SoftmaxModel, TrainReport)> {
    hyper.validate()?;
    let samples = training_rows(features, labels, train)?;
    let num_classes = labels.num_classes() as usize;
    let mut counts = vec![0usize; num_classes];
    for &(_, c) in &samples {
        counts[c as usize - 1] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass { class: c as u16 + 1 });
    }

    let f = features.cols();
    let mut w = vec![0.0f64; num_classes * (f + 1)];
    let mut losses = vec![loss_and_gradient(&w, num_classes, features, &samples, hyper.l2).0];
    let mut order = samples.clone();
    let mut rng = SplitMix64::new(hyper.seed);
    for epoch in 0..hyper.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(hyper.batch_size) {
            let (_, grad) = loss_and_gradient(&w, num_classes, features, batch, hyper.l2);
            for (wi, gi) in w.iter_mut().zip(&grad) {
                *wi -= hyper.learning_rate * gi;
            }
        }
        let loss = loss_and_gradient(&w, num_classes, features, &samples, hyper.l2).0;
        if !loss.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        losses.push(loss);
    }

    let weights = w.into_iter().map(|v| v as f32).collect();
    let model = SoftmaxModel::from_weights(num_classes as u16, f, weights, *hyper)?;
    Ok((model, TrainReport { losses }))
}
