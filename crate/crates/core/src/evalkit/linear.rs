use rand::seq::SliceRandom;

use super::LabeledInstances;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{dot, Scalar};
use crate::transition::sigmoid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// Linear SVM.
    Hinge,
    /// Logistic regression.
    Logistic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearConfig<T> {
    pub loss: LossKind,
    pub l2: T,
    pub epochs: usize,
    /// Initial step size.
    pub lr: T,
}

impl<T: Scalar> LinearConfig<T> {
    pub fn svm() -> Self {
        LinearConfig {
            loss: LossKind::Hinge,
            l2: T::of(1e-4),
            epochs: 50,
            lr: T::of(0.1),
        }
    }

    pub fn logistic() -> Self {
        LinearConfig {
            loss: LossKind::Logistic,
            ..Self::svm()
        }
    }
}

/// Linear classifier on standardized features. Binary problems keep one
/// weight vector (class 1 vs class 0); otherwise one per class.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel<T> {
    pub loss: LossKind,
    pub classes: usize,
    pub mean: Vec<T>,
    pub scale: Vec<T>,
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearModel<T> {
    fn standardize(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend(x.iter().zip(&self.mean).zip(&self.scale).map(|((&v, &m), &s)| (v - m) / s));
    }

    fn raw_scores(&self, x: &[T]) -> Vec<T> {
        let mut z = Vec::with_capacity(x.len());
        self.standardize(x, &mut z);
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| dot(w, &z) + b)
            .collect()
    }

    /// Binary margin (positive favours class 1). Multi-class models return
    /// the class-1 score.
    pub fn decision(&self, x: &[T]) -> T {
        let s = self.raw_scores(x);
        if s.len() == 1 {
            s[0]
        } else {
            s[1]
        }
    }

    /// Probability of class 1 for binary models.
    pub fn probability(&self, x: &[T]) -> T {
        sigmoid(self.decision(x))
    }

    pub fn predict(&self, x: &[T]) -> usize {
        let s = self.raw_scores(x);
        if s.len() == 1 {
            return usize::from(sigmoid(s[0]) > T::of(0.5));
        }
        let mut best = 0;
        for (k, &v) in s.iter().enumerate().skip(1) {
            if v > s[best] {
                best = k;
            }
        }
        best
    }
}

/// One-vs-rest SGD with L2 regularization. Features are standardized with
/// training-set moments stored in the model.
pub fn train_linear<T: Scalar>(data: &LabeledInstances<T>, config: &LinearConfig<T>, seed: u64) -> Result<LinearModel<T>> {
    if data.is_empty() {
        return Err(Error::invalid("no training instances"));
    }
    let first = data.labels[0];
    if data.labels.iter().all(|&l| l == first) {
        return Err(Error::invalid("training data contains a single class"));
    }
    if config.epochs < 1 || config.lr.is_nan() || config.lr <= T::zero() || config.l2 < T::zero() {
        return Err(Error::param("linear model needs epochs >= 1, lr > 0, l2 >= 0"));
    }
    let d = data.features[0].len();
    if let Some(bad) = data.features.iter().find(|f| f.len() != d) {
        return Err(Error::LengthMismatch(bad.len(), d));
    }

    let n = T::from_usize(data.len()).expect("count fits in scalar");
    let mut mean = vec![T::zero(); d];
    for f in &data.features {
        for (m, &v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut scale = vec![T::zero(); d];
    for f in &data.features {
        for ((s, &v), &m) in scale.iter_mut().zip(f).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut scale {
        *s = (*s / n).sqrt();
        if *s <= T::epsilon() {
            *s = T::one();
        }
    }
    let mut model = LinearModel {
        loss: config.loss,
        classes: data.classes,
        mean,
        scale,
        weights: Vec::new(),
        bias: Vec::new(),
    };
    let z: Vec<Vec<T>> = data
        .features
        .iter()
        .map(|f| {
            let mut out = Vec::with_capacity(d);
            model.standardize(f, &mut out);
            out
        })
        .collect();

    let targets: Vec<usize> = if data.classes == 2 { vec![1] } else { (0..data.classes).collect() };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epochs_order = Vec::with_capacity(config.epochs);
    let mut rng = rng::stream(seed, &[]);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        epochs_order.push(order.clone());
    }

    for &target in &targets {
        let mut w = vec![T::zero(); d];
        let mut b = T::zero();
        let mut t = 0usize;
        for order in &epochs_order {
            for &i in order {
                let lr = config.lr / (T::one() + config.lr * config.l2 * T::of(t as f64));
                t += 1;
                let x = &z[i];
                let positive = data.labels[i] == target;
                let s = dot(&w, x) + b;
                let shrink = T::one() - lr * config.l2;
                w.iter_mut().for_each(|wk| *wk *= shrink);
                let g = match config.loss {
                    LossKind::Hinge => {
                        let y = if positive { T::one() } else { -T::one() };
                        if y * s < T::one() {
                            y
                        } else {
                            T::zero()
                        }
                    }
                    LossKind::Logistic => {
                        let y = if positive { T::one() } else { T::zero() };
                        y - sigmoid(s)
                    }
                };
                if g != T::zero() {
                    for (wk, &xk) in w.iter_mut().zip(x) {
                        *wk += lr * g * xk;
                    }
                    b += lr * g;
                }
            }
        }
        model.weights.push(w);
        model.bias.push(b);
    }
    Ok(model)
}
