use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::LstmCell;
use super::{ForecastError, TrainingExample, HORIZON, LONG_WINDOW, SHORT_WINDOW};
use crate::hashing::combine;

pub const HIDDEN: usize = 32;

/// Two LSTM encoders over the trailing 4 h and 12 h, fused with the
/// climatology of the target day by one affine layer.
///
/// Inputs and outputs are divided by `scale` inside the net; callers pass raw
/// densities.
#[derive(Debug, Clone, PartialEq)]
pub struct DualNet {
    pub short: LstmCell,
    pub long: LstmCell,
    /// Row-major `HORIZON × (2·hidden + HORIZON)`.
    pub fusion_w: Vec<f64>,
    pub fusion_b: Vec<f64>,
    pub scale: f64,
}

impl DualNet {
    pub fn fusion_inputs(&self) -> usize {
        self.short.hidden() + self.long.hidden() + HORIZON
    }

    /// Random encoders; the fusion layer starts as the identity on the
    /// climatology block, so an untrained net predicts climatology.
    pub fn new(scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(combine(&[seed, 0x4E45_54]));
        let short = LstmCell::random(HIDDEN, &mut rng);
        let long = LstmCell::random(HIDDEN, &mut rng);
        let mut net = DualNet {
            short,
            long,
            fusion_w: vec![],
            fusion_b: vec![0.0; HORIZON],
            scale: if scale > 0.0 && scale.is_finite() { scale } else { 1.0 },
        };
        let cols = net.fusion_inputs();
        net.fusion_w = vec![0.0; HORIZON * cols];
        for h in 0..HORIZON {
            net.fusion_w[h * cols + 2 * HIDDEN + h] = 1.0;
        }
        net
    }

    /// All-zero parameters of the same shape; used for gradients and momentum.
    pub fn zeros_like(&self) -> Self {
        DualNet {
            short: LstmCell::zeros(self.short.hidden()),
            long: LstmCell::zeros(self.long.hidden()),
            fusion_w: vec![0.0; self.fusion_w.len()],
            fusion_b: vec![0.0; self.fusion_b.len()],
            scale: self.scale,
        }
    }

    pub const TENSOR_NAMES: [&'static str; 8] = [
        "short.w_in",
        "short.w_rec",
        "short.bias",
        "long.w_in",
        "long.w_rec",
        "long.bias",
        "fusion.w",
        "fusion.b",
    ];

    /// Parameter tensors in declared order.
    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            &self.short.w_in,
            &self.short.w_rec,
            &self.short.bias,
            &self.long.w_in,
            &self.long.w_rec,
            &self.long.bias,
            &self.fusion_w,
            &self.fusion_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.short.w_in,
            &mut self.short.w_rec,
            &mut self.short.bias,
            &mut self.long.w_in,
            &mut self.long.w_rec,
            &mut self.long.bias,
            &mut self.fusion_w,
            &mut self.fusion_b,
        ]
    }

    fn check(&self, ex: &TrainingExample) -> Result<(), ForecastError> {
        let ok = ex.short.len() == SHORT_WINDOW
            && ex.long.len() == LONG_WINDOW
            && ex.climatology.len() == HORIZON
            && (ex.target.is_empty() || ex.target.len() == HORIZON)
            && self.fusion_w.len() == HORIZON * self.fusion_inputs();
        if ok {
            Ok(())
        } else {
            Err(ForecastError::ShapeMismatch)
        }
    }

    fn normalized(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x / self.scale).collect()
    }

    fn fuse(&self, features: &[f64]) -> Vec<f64> {
        let cols = features.len();
        (0..HORIZON)
            .map(|h| {
                self.fusion_b[h]
                    + self.fusion_w[h * cols..(h + 1) * cols]
                        .iter()
                        .zip(features)
                        .map(|(w, f)| w * f)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Next-24 h prediction in raw units, clamped at zero.
    pub fn forward(&self, ex: &TrainingExample) -> Result<Vec<f64>, ForecastError> {
        self.check(ex)?;
        let mut features = self.short.forward(&self.normalized(&ex.short));
        features.extend(self.long.forward(&self.normalized(&ex.long)));
        features.extend(self.normalized(&ex.climatology));
        Ok(self.fuse(&features).into_iter().map(|y| (y * self.scale).max(0.0)).collect())
    }

    /// Mean squared error on normalized targets, and, when `grad` is given,
    /// its gradient accumulated there.
    pub fn loss(&self, batch: &[TrainingExample], mut grad: Option<&mut DualNet>) -> Result<f64, ForecastError> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let denom = (batch.len() * HORIZON) as f64;
        let mut total = 0.0;
        for ex in batch {
            self.check(ex)?;
            if ex.target.len() != HORIZON {
                return Err(ForecastError::ShapeMismatch);
            }
            let t_short = self.short.forward_trace(&self.normalized(&ex.short));
            let t_long = self.long.forward_trace(&self.normalized(&ex.long));
            let mut features = t_short.hidden.clone();
            features.extend_from_slice(&t_long.hidden);
            features.extend(self.normalized(&ex.climatology));
            let y = self.fuse(&features);
            let dy: Vec<f64> = y
                .iter()
                .zip(&ex.target)
                .map(|(yv, t)| {
                    let e = yv - t / self.scale;
                    total += e * e;
                    2.0 * e / denom
                })
                .collect();
            if let Some(g) = grad.as_deref_mut() {
                let cols = features.len();
                let mut d_features = vec![0.0; cols];
                for (h, &d) in dy.iter().enumerate() {
                    g.fusion_b[h] += d;
                    let row = h * cols..(h + 1) * cols;
                    for ((gw, w), (f, df)) in g.fusion_w[row.clone()]
                        .iter_mut()
                        .zip(&self.fusion_w[row])
                        .zip(features.iter().zip(d_features.iter_mut()))
                    {
                        *gw += d * f;
                        *df += d * w;
                    }
                }
                let hs = self.short.hidden();
                let hl = self.long.hidden();
                self.short.backward(&t_short, &d_features[..hs], &mut g.short);
                self.long.backward(&t_long, &d_features[hs..hs + hl], &mut g.long);
            }
        }
        Ok(total / denom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub gradient_clip: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Whole weeks at the end of the training range held out for validation.
    pub validation_weeks: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.01,
            momentum: 0.9,
            gradient_clip: 5.0,
            batch_size: 16,
            seed: 17,
            validation_weeks: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(ForecastError::Config("learning rate must be > 0 and momentum in [0, 1)".into()));
        }
        if self.batch_size == 0 || !(self.gradient_clip > 0.0) {
            return Err(ForecastError::Config("batch size and clip norm must be positive".into()));
        }
        Ok(())
    }
}

/// Per-epoch mean losses; index 0 is the untrained net.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
    /// Epoch whose parameters were kept (lowest validation loss).
    pub best_epoch: usize,
}

/// Momentum SGD with global-norm clipping. Returns the parameters with the
/// lowest validation loss seen, the untrained ones included.
pub fn train(
    net: &DualNet,
    train_set: &[TrainingExample],
    validation: &[TrainingExample],
    cfg: &TrainConfig,
) -> Result<(DualNet, LossCurve), ForecastError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(ForecastError::InsufficientHistory { needed_weeks: 1, available_weeks: 0 });
    }
    let held_out = if validation.is_empty() { train_set } else { validation };
    let mut net = net.clone();
    let mut velocity = net.zeros_like();
    let mut curve = LossCurve {
        train: vec![net.loss(train_set, None)?],
        validation: vec![net.loss(held_out, None)?],
        best_epoch: 0,
    };
    let mut best = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(combine(&[cfg.seed, 0x5452_4E]));
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<TrainingExample> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let mut grad = net.zeros_like();
            let loss = net.loss(&batch, Some(&mut grad))?;
            if !loss.is_finite() {
                return Err(ForecastError::Diverged { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            let norm = grad.tensors().iter().flat_map(|t| t.iter()).map(|g| g * g).sum::<f64>().sqrt();
            let shrink = if norm > cfg.gradient_clip { cfg.gradient_clip / norm } else { 1.0 };
            for ((p, v), g) in net
                .tensors_mut()
                .into_iter()
                .zip(velocity.tensors_mut())
                .zip(grad.tensors())
            {
                for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = cfg.momentum * *vi - cfg.learning_rate * shrink * gi;
                    *pi += *vi;
                }
            }
        }
        let val = net.loss(held_out, None)?;
        if !val.is_finite() {
            return Err(ForecastError::Diverged { epoch });
        }
        curve.train.push(epoch_loss / train_set.len() as f64);
        curve.validation.push(val);
        if val < curve.validation[curve.best_epoch] {
            curve.best_epoch = epoch;
            best = net.clone();
        }
    }
    Ok((best, curve))
}
