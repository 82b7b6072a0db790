//! A single-hidden-layer cost regressor, an FTRL-proximal coordinate rule,
//! and a one-against-all logistic classifier.
//!
//! Net arithmetic is f64 throughout so analytic gradients survive a
//! central-difference check at tight tolerance. The flat logistic table
//! stores f32 like the linear learners.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// tanh hidden layer over the hashed input, linear output per class.
/// Input weights start small and random to break hidden-unit symmetry;
/// everything downstream starts at zero.
#[derive(Clone, Debug)]
pub(crate) struct Net {
    pub(crate) hidden: usize,
    pub(crate) classes: usize,
    /// `index * hidden + unit`.
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    /// `unit * classes + class`.
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
}

/// Gradients of one example's squared loss. The input layer is sparse
/// (touched coordinates only, duplicates possible); the rest is dense.
#[derive(Clone, Debug, Default)]
pub(crate) struct NetGradients {
    pub(crate) w1: Vec<(usize, f64)>,
    pub(crate) b1: Vec<f64>,
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
}

impl Net {
    pub(crate) fn new(bits: u8, hidden: usize, classes: usize, rng: &mut ChaCha8Rng) -> Self {
        let inputs = 1usize << bits;
        let w1 = (0..inputs * hidden).map(|_| rng.gen_range(-0.1..0.1)).collect();
        Net {
            hidden,
            classes,
            w1,
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * classes],
            b2: vec![0.0; classes],
        }
    }

    /// Pre-activations are scaled by 1/sqrt(active count) so the hidden
    /// layer sits in tanh's useful range whether a tier fires 30 features
    /// or 300.
    fn input_scale(feats: &[(u32, f32)]) -> f64 {
        (feats.len().max(1) as f64).sqrt().recip()
    }

    /// Hidden activations, then all class scores.
    pub(crate) fn forward(&self, feats: &[(u32, f32)]) -> (Vec<f64>, Vec<f64>) {
        let scale = Self::input_scale(feats);
        let mut acts = self.b1.clone();
        for &(i, x) in feats {
            let base = i as usize * self.hidden;
            let x = f64::from(x) * scale;
            for (act, w) in acts.iter_mut().zip(&self.w1[base..base + self.hidden]) {
                *act += w * x;
            }
        }
        for a in &mut acts {
            *a = a.tanh();
        }
        let mut scores = self.b2.clone();
        for (h, &a) in acts.iter().enumerate() {
            let base = h * self.classes;
            for (s, w) in scores.iter_mut().zip(&self.w2[base..base + self.classes]) {
                *s += w * a;
            }
        }
        (acts, scores)
    }

    /// Half squared error summed over the listed classes.
    pub(crate) fn loss(&self, feats: &[(u32, f32)], targets: &[(u32, f64)]) -> f64 {
        let (_, scores) = self.forward(feats);
        targets
            .iter()
            .map(|&(c, y)| {
                let d = scores[c as usize] - y;
                0.5 * d * d
            })
            .sum()
    }

    /// Backprop for one example; all listed classes at once off a single
    /// forward pass.
    pub(crate) fn gradients(
        &self,
        feats: &[(u32, f32)],
        targets: &[(u32, f64)],
        role: usize,
    ) -> Result<NetGradients> {
        let (acts, scores) = self.forward(feats);
        let mut gout = vec![0.0f64; self.classes];
        for &(c, y) in targets {
            let g = scores[c as usize] - y;
            if !g.is_finite() {
                return Err(Error::Numeric {
                    role,
                    coordinate: u64::from(c),
                    detail: format!("output gradient {g}"),
                });
            }
            gout[c as usize] += g;
        }

        let mut grads = NetGradients {
            w1: Vec::with_capacity(feats.len() * self.hidden),
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.hidden * self.classes],
            b2: gout.clone(),
        };
        for (h, &a) in acts.iter().enumerate() {
            let mut back = 0.0;
            let base = h * self.classes;
            for (c, &g) in gout.iter().enumerate() {
                grads.w2[base + c] = g * a;
                back += g * self.w2[base + c];
            }
            grads.b1[h] = back * (1.0 - a * a);
        }
        let scale = Self::input_scale(feats);
        for &(i, x) in feats {
            let base = i as usize * self.hidden;
            let x = f64::from(x) * scale;
            for (h, &gb) in grads.b1.iter().enumerate() {
                grads.w1.push((base + h, gb * x));
            }
        }
        Ok(grads)
    }

    /// Plain gradient step at rate `lr`.
    pub(crate) fn sgd_update(
        &mut self,
        feats: &[(u32, f32)],
        targets: &[(u32, f64)],
        lr: f32,
        role: usize,
    ) -> Result<()> {
        let lr = f64::from(lr);
        let grads = self.gradients(feats, targets, role)?;
        for &(i, g) in &grads.w1 {
            self.w1[i] -= lr * g;
        }
        for (w, g) in self.b1.iter_mut().zip(&grads.b1) {
            *w -= lr * g;
        }
        for (w, g) in self.w2.iter_mut().zip(&grads.w2) {
            *w -= lr * g;
        }
        for (w, g) in self.b2.iter_mut().zip(&grads.b2) {
            *w -= lr * g;
        }
        Ok(())
    }
}

/// FTRL-proximal hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct FtrlParams {
    pub(crate) alpha: f64,
    pub(crate) beta: f64,
    pub(crate) l1: f64,
    pub(crate) l2: f64,
}

/// One FTRL-proximal coordinate step: fold the gradient into the
/// accumulators, then recompute the weight in closed form. The L1 ball
/// pins small-evidence weights at exactly zero.
#[inline]
pub(crate) fn ftrl_step(w: f64, z: &mut f64, n: &mut f64, g: f64, p: &FtrlParams) -> f64 {
    let n_new = *n + g * g;
    let sigma = (n_new.sqrt() - n.sqrt()) / p.alpha;
    *z += g - sigma * w;
    *n = n_new;
    if z.abs() <= p.l1 {
        0.0
    } else {
        -(*z - z.signum() * p.l1) / ((p.beta + n.sqrt()) / p.alpha + p.l2)
    }
}

/// The net again, with every coordinate driven by FTRL instead of a plain
/// gradient step. The accumulators are seeded so the closed form reproduces
/// the random input init at n = 0; otherwise the first touch of a coordinate
/// would snap it back to zero and re-collapse the hidden units.
#[derive(Clone, Debug)]
pub(crate) struct NetFtrl {
    pub(crate) net: Net,
    pub(crate) params: FtrlParams,
    pub(crate) z1: Vec<f64>,
    pub(crate) n1: Vec<f64>,
    pub(crate) zb1: Vec<f64>,
    pub(crate) nb1: Vec<f64>,
    pub(crate) z2: Vec<f64>,
    pub(crate) n2: Vec<f64>,
    pub(crate) zb2: Vec<f64>,
    pub(crate) nb2: Vec<f64>,
}

impl NetFtrl {
    pub(crate) fn new(
        bits: u8,
        hidden: usize,
        classes: usize,
        params: FtrlParams,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self::warm_start(Net::new(bits, hidden, classes, rng), params)
    }

    /// Wraps existing weights with accumulators chosen so the closed form
    /// reproduces them at n = 0: w = -z * alpha / beta.
    pub(crate) fn warm_start(net: Net, params: FtrlParams) -> Self {
        let seed = |ws: &[f64]| -> Vec<f64> {
            if params.alpha > 0.0 {
                ws.iter().map(|w| -w * params.beta / params.alpha).collect()
            } else {
                vec![0.0; ws.len()]
            }
        };
        NetFtrl {
            z1: seed(&net.w1),
            n1: vec![0.0; net.w1.len()],
            zb1: seed(&net.b1),
            nb1: vec![0.0; net.b1.len()],
            z2: seed(&net.w2),
            n2: vec![0.0; net.w2.len()],
            zb2: seed(&net.b2),
            nb2: vec![0.0; net.b2.len()],
            net,
            params,
        }
    }

    pub(crate) fn update(
        &mut self,
        feats: &[(u32, f32)],
        targets: &[(u32, f64)],
        role: usize,
    ) -> Result<()> {
        let grads = self.net.gradients(feats, targets, role)?;
        let p = self.params;
        for &(i, g) in &grads.w1 {
            self.net.w1[i] = ftrl_step(self.net.w1[i], &mut self.z1[i], &mut self.n1[i], g, &p);
        }
        for (h, &g) in grads.b1.iter().enumerate() {
            self.net.b1[h] = ftrl_step(self.net.b1[h], &mut self.zb1[h], &mut self.nb1[h], g, &p);
        }
        for (i, &g) in grads.w2.iter().enumerate() {
            self.net.w2[i] = ftrl_step(self.net.w2[i], &mut self.z2[i], &mut self.n2[i], g, &p);
        }
        for (c, &g) in grads.b2.iter().enumerate() {
            self.net.b2[c] = ftrl_step(self.net.b2[c], &mut self.zb2[c], &mut self.nb2[c], g, &p);
        }
        Ok(())
    }
}

/// One-against-all logistic classifier with FTRL coordinates. The class
/// with the lowest cost is the positive example; every other listed class
/// is negative. Prediction is the score argmax.
#[derive(Clone, Debug)]
pub(crate) struct FtrlTable {
    pub(crate) classes: usize,
    pub(crate) params: FtrlParams,
    pub(crate) weights: Vec<f32>,
    pub(crate) z: Vec<f32>,
    pub(crate) n: Vec<f32>,
}

impl FtrlTable {
    pub(crate) fn new(bits: u8, classes: usize, params: FtrlParams) -> Self {
        let len = (1usize << bits) * classes;
        FtrlTable {
            classes,
            params,
            weights: vec![0.0; len],
            z: vec![0.0; len],
            n: vec![0.0; len],
        }
    }

    /// Same n = 0 accumulator seeding as the net, for reloaded weights.
    pub(crate) fn warm_start(classes: usize, params: FtrlParams, weights: Vec<f32>) -> Self {
        let z = if params.alpha > 0.0 {
            let scale = (params.beta / params.alpha) as f32;
            weights.iter().map(|w| -w * scale).collect()
        } else {
            vec![0.0; weights.len()]
        };
        FtrlTable {
            classes,
            params,
            n: vec![0.0; weights.len()],
            weights,
            z,
        }
    }

    pub(crate) fn score(&self, feats: &[(u32, f32)], class: usize) -> f64 {
        debug_assert!(class < self.classes);
        let mut acc = 0.0f64;
        for &(i, x) in feats {
            acc += f64::from(self.weights[i as usize * self.classes + class]) * f64::from(x);
        }
        acc
    }

    pub(crate) fn update(
        &mut self,
        feats: &[(u32, f32)],
        costs: &[(u32, f64)],
        role: usize,
    ) -> Result<()> {
        let mut positive: Option<(f64, u32)> = None;
        for &(class, cost) in costs {
            if !cost.is_finite() {
                return Err(Error::Numeric {
                    role,
                    coordinate: u64::from(class),
                    detail: format!("cost {cost} in a classification example"),
                });
            }
            let better = match positive {
                None => true,
                // Lowest cost wins; equal costs go to the smallest tag.
                Some((best, at)) => cost < best || (cost == best && class < at),
            };
            if better {
                positive = Some((cost, class));
            }
        }
        let Some((_, positive)) = positive else {
            return Ok(());
        };

        let p = self.params;
        for &(class, _) in costs {
            let c = class as usize;
            let t = if class == positive { 1.0 } else { -1.0 };
            let pred = self.score(feats, c);
            let dl = -t / (1.0 + (t * pred).exp());
            for &(i, x) in feats {
                let g = dl * f64::from(x);
                let gi = i as usize * self.classes + c;
                if !g.is_finite() {
                    return Err(Error::Numeric {
                        role,
                        coordinate: gi as u64,
                        detail: format!("gradient {g} on a logistic weight"),
                    });
                }
                let mut z = f64::from(self.z[gi]);
                let mut n = f64::from(self.n[gi]);
                let w = ftrl_step(f64::from(self.weights[gi]), &mut z, &mut n, g, &p);
                self.weights[gi] = w as f32;
                self.z[gi] = z as f32;
                self.n[gi] = n as f32;
            }
        }
        Ok(())
    }
}
