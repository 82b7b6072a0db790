//! Linear cost regressors over hashed feature vectors.
//!
//! Weights live in one flat table per role, laid out as
//! `index * classes + class`, so all classes of one feature share a cache
//! line. Scores are accumulated in f64; storage is f32.

use crate::error::{Error, Result};

#[inline]
fn flat(index: u32, class: usize, classes: usize) -> usize {
    index as usize * classes + class
}

/// Plain stochastic gradient descent on squared loss, one independent
/// regressor per class.
#[derive(Clone, Debug)]
pub(crate) struct LinearTable {
    pub(crate) classes: usize,
    pub(crate) weights: Vec<f32>,
}

impl LinearTable {
    pub(crate) fn new(bits: u8, classes: usize) -> Self {
        LinearTable {
            classes,
            weights: vec![0.0; (1usize << bits) * classes],
        }
    }

    pub(crate) fn score(&self, feats: &[(u32, f32)], class: usize) -> f64 {
        debug_assert!(class < self.classes);
        let mut acc = 0.0f64;
        for &(i, x) in feats {
            acc += f64::from(self.weights[flat(i, class, self.classes)]) * f64::from(x);
        }
        acc
    }

    pub(crate) fn update(
        &mut self,
        feats: &[(u32, f32)],
        costs: &[(u32, f64)],
        lr: f32,
        role: usize,
    ) -> Result<()> {
        for &(class, target) in costs {
            let c = class as usize;
            let g = self.score(feats, c) - target;
            if g == 0.0 {
                continue;
            }
            for &(i, x) in feats {
                let grad = g * f64::from(x);
                let coordinate = flat(i, c, self.classes) as u64;
                if !grad.is_finite() {
                    return Err(Error::Numeric {
                        role,
                        coordinate,
                        detail: format!("gradient {grad} on a linear weight"),
                    });
                }
                self.weights[flat(i, c, self.classes)] -= (f64::from(lr) * grad) as f32;
            }
        }
        Ok(())
    }
}

/// SGD with per-coordinate adaptive steps and scale normalization: squared
/// gradients accumulate per weight, feature scales are tracked per index
/// (shared by all classes, with weights rescaled when a scale grows), and
/// the step size is chosen so the prediction moves toward the target by
/// exactly `1 - exp(-h)` of the gap, which cannot overshoot.
#[derive(Clone, Debug)]
pub(crate) struct AdaptiveTable {
    pub(crate) classes: usize,
    pub(crate) weights: Vec<f32>,
    pub(crate) grad_squares: Vec<f32>,
    pub(crate) scales: Vec<f32>,
}

impl AdaptiveTable {
    pub(crate) fn new(bits: u8, classes: usize) -> Self {
        let table = 1usize << bits;
        AdaptiveTable {
            classes,
            weights: vec![0.0; table * classes],
            grad_squares: vec![0.0; table * classes],
            scales: vec![0.0; table],
        }
    }

    pub(crate) fn score(&self, feats: &[(u32, f32)], class: usize) -> f64 {
        debug_assert!(class < self.classes);
        let mut acc = 0.0f64;
        for &(i, x) in feats {
            acc += f64::from(self.weights[flat(i, class, self.classes)]) * f64::from(x);
        }
        acc
    }

    pub(crate) fn update(
        &mut self,
        feats: &[(u32, f32)],
        costs: &[(u32, f64)],
        lr: f32,
        role: usize,
    ) -> Result<()> {
        // Settle scales first. A grown scale rescales the weights of every
        // class at that index, keeping their implied normalization.
        for &(i, x) in feats {
            let ax = x.abs();
            let s = self.scales[i as usize];
            if ax > s {
                let factor = (s / ax) * (s / ax);
                for c in 0..self.classes {
                    self.weights[flat(i, c, self.classes)] *= factor;
                }
                self.scales[i as usize] = ax;
            }
        }

        let lr = f64::from(lr);
        for &(class, target) in costs {
            let c = class as usize;
            let pred = self.score(feats, c);
            let g = pred - target;
            if g == 0.0 {
                continue;
            }
            // Accumulate squared gradients, then measure how far one unit
            // of update scalar would move the prediction.
            let mut h = 0.0f64;
            for &(i, x) in feats {
                if x == 0.0 {
                    continue;
                }
                let x = f64::from(x);
                let grad = g * x;
                let gi = flat(i, c, self.classes);
                if !grad.is_finite() {
                    return Err(Error::Numeric {
                        role,
                        coordinate: gi as u64,
                        detail: format!("gradient {grad} on an adaptive weight"),
                    });
                }
                self.grad_squares[gi] += (grad * grad) as f32;
                let s = f64::from(self.scales[i as usize]);
                h += x * x / (f64::from(self.grad_squares[gi]).sqrt() * s * s);
            }
            h *= lr;
            if h == 0.0 {
                continue;
            }
            let scalar = (target - pred) * (1.0 - (-h).exp()) / h;
            for &(i, x) in feats {
                if x == 0.0 {
                    continue;
                }
                let x = f64::from(x);
                let gi = flat(i, c, self.classes);
                let s = f64::from(self.scales[i as usize]);
                let denom = f64::from(self.grad_squares[gi]).sqrt() * s * s;
                self.weights[gi] += (scalar * lr * x / denom) as f32;
            }
        }
        Ok(())
    }
}
