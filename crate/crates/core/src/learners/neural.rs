//! Softmax regression and a one-hidden-layer ReLU network trained by plain
//! minibatch gradient descent on mean cross-entropy plus an L2 penalty on
//! weights (biases are not penalized).
//!
//! Parameters live in one flat vector. Layout, all row-major with the input
//! index as the row:
//!
//! - logistic: `W (d x c) | b (c)`
//! - MLP: `W1 (d x h) | b1 (h) | W2 (h x c) | b2 (c)`

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{HpValue, Hyperparameters, LearnerKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NeuralArch {
    pub d_in: usize,
    /// `None` for softmax regression.
    pub hidden: Option<usize>,
    pub n_classes: usize,
}

impl NeuralArch {
    pub fn logistic(d_in: usize, n_classes: usize) -> Self {
        NeuralArch {
            d_in,
            hidden: None,
            n_classes,
        }
    }

    pub fn mlp(d_in: usize, hidden: usize, n_classes: usize) -> Self {
        NeuralArch {
            d_in,
            hidden: Some(hidden),
            n_classes,
        }
    }

    pub fn param_count(&self) -> usize {
        let (d, c) = (self.d_in, self.n_classes);
        match self.hidden {
            None => d * c + c,
            Some(h) => d * h + h + h * c + c,
        }
    }

    /// Index ranges of the weight blocks (the L2-penalized entries).
    fn weight_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let (d, c) = (self.d_in, self.n_classes);
        match self.hidden {
            None => vec![0..d * c],
            Some(h) => {
                let w2 = d * h + h;
                vec![0..d * h, w2..w2 + h * c]
            }
        }
    }
}

/// Scratch buffers for one row's forward/backward pass.
struct Scratch {
    hidden: Vec<f64>,
    logits: Vec<f64>,
    dhidden: Vec<f64>,
}

impl Scratch {
    fn new(arch: &NeuralArch) -> Self {
        let h = arch.hidden.unwrap_or(0);
        Scratch {
            hidden: vec![0.0; h],
            logits: vec![0.0; arch.n_classes],
            dhidden: vec![0.0; h],
        }
    }
}

/// Writes raw logits into `s.logits`.
fn forward(arch: &NeuralArch, params: &[f64], x: &[f64], s: &mut Scratch) {
    let (d, c) = (arch.d_in, arch.n_classes);
    match arch.hidden {
        None => {
            s.logits.copy_from_slice(&params[d * c..d * c + c]);
            for (i, &xi) in x.iter().enumerate() {
                let w = &params[i * c..(i + 1) * c];
                for (z, &wij) in s.logits.iter_mut().zip(w) {
                    *z += xi * wij;
                }
            }
        }
        Some(h) => {
            let b1 = d * h;
            let w2 = b1 + h;
            let b2 = w2 + h * c;
            s.hidden.copy_from_slice(&params[b1..b1 + h]);
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let w = &params[i * h..(i + 1) * h];
                for (a, &wij) in s.hidden.iter_mut().zip(w) {
                    *a += xi * wij;
                }
            }
            for a in s.hidden.iter_mut() {
                *a = a.max(0.0);
            }
            s.logits.copy_from_slice(&params[b2..b2 + c]);
            for (j, &aj) in s.hidden.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                let w = &params[w2 + j * c..w2 + (j + 1) * c];
                for (z, &wjk) in s.logits.iter_mut().zip(w) {
                    *z += aj * wjk;
                }
            }
        }
    }
}

/// Softmax in place; returns the log-sum-exp of the input.
fn softmax(z: &mut [f64]) -> f64 {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

/// Accumulates `grad += d(-log p_y)/d(params)` given the forward state
/// (with `s.logits` holding probabilities).
fn backward(
    arch: &NeuralArch,
    params: &[f64],
    x: &[f64],
    y: usize,
    s: &mut Scratch,
    grad: &mut [f64],
) {
    let (d, c) = (arch.d_in, arch.n_classes);
    // dL/dz = p - onehot(y), stored in place.
    s.logits[y] -= 1.0;
    match arch.hidden {
        None => {
            for (i, &xi) in x.iter().enumerate() {
                let g = &mut grad[i * c..(i + 1) * c];
                for (gij, &dz) in g.iter_mut().zip(&s.logits) {
                    *gij += xi * dz;
                }
            }
            for (gb, &dz) in grad[d * c..d * c + c].iter_mut().zip(&s.logits) {
                *gb += dz;
            }
        }
        Some(h) => {
            let b1 = d * h;
            let w2 = b1 + h;
            let b2 = w2 + h * c;
            for j in 0..h {
                let aj = s.hidden[j];
                let w = &params[w2 + j * c..w2 + (j + 1) * c];
                let mut back = 0.0;
                for (&wjk, &dz) in w.iter().zip(&s.logits) {
                    back += wjk * dz;
                }
                s.dhidden[j] = if aj > 0.0 { back } else { 0.0 };
                if aj != 0.0 {
                    let g = &mut grad[w2 + j * c..w2 + (j + 1) * c];
                    for (gjk, &dz) in g.iter_mut().zip(&s.logits) {
                        *gjk += aj * dz;
                    }
                }
            }
            for (gb, &dz) in grad[b2..b2 + c].iter_mut().zip(&s.logits) {
                *gb += dz;
            }
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let g = &mut grad[i * h..(i + 1) * h];
                for (gij, &dh) in g.iter_mut().zip(&s.dhidden) {
                    *gij += xi * dh;
                }
            }
            for (gb, &dh) in grad[b1..b1 + h].iter_mut().zip(&s.dhidden) {
                *gb += dh;
            }
        }
    }
}

/// Mean cross-entropy over `rows` plus `l2/2 * |W|^2`; writes the gradient
/// into `grad` (overwriting it).
fn batch_loss_grad(
    arch: &NeuralArch,
    params: &[f64],
    x: &Matrix,
    y: &[usize],
    rows: &[usize],
    l2: f64,
    grad: &mut [f64],
    s: &mut Scratch,
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for &r in rows {
        let row = x.row(r);
        forward(arch, params, row, s);
        let z_y = s.logits[y[r]];
        loss += softmax(&mut s.logits) - z_y;
        backward(arch, params, row, y[r], s, grad);
    }
    let inv = 1.0 / rows.len() as f64;
    loss *= inv;
    grad.iter_mut().for_each(|g| *g *= inv);
    if l2 > 0.0 {
        for range in arch.weight_ranges() {
            for i in range {
                loss += 0.5 * l2 * params[i] * params[i];
                grad[i] += l2 * params[i];
            }
        }
    }
    loss
}

/// Training objective and its gradient at `params`, over all rows of `x`.
pub fn loss_and_gradient(
    arch: &NeuralArch,
    params: &[f64],
    x: &Matrix,
    y: &[usize],
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    if params.len() != arch.param_count() {
        return Err(Error::Dimension {
            expected: arch.param_count(),
            got: params.len(),
        });
    }
    x.check_cols(arch.d_in)?;
    if x.rows() != y.len() || y.is_empty() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= arch.n_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} >= {}",
            arch.n_classes
        )));
    }
    if l2 < 0.0 {
        return Err(Error::InvalidArgument(format!("l2 = {l2} < 0")));
    }
    let rows: Vec<usize> = (0..x.rows()).collect();
    let mut grad = vec![0.0; params.len()];
    let mut s = Scratch::new(arch);
    let loss = batch_loss_grad(arch, params, x, y, &rows, l2, &mut grad, &mut s);
    Ok((loss, grad))
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct TrainConfig {
    pub hidden: Option<usize>,
    pub lr: f64,
    pub epochs: usize,
    /// `None` trains full-batch.
    pub batch: Option<usize>,
    pub l2: f64,
}

impl TrainConfig {
    pub fn from_hp(kind: LearnerKind, hp: &Hyperparameters) -> Result<Self> {
        let lr = hp.real("lr")?;
        if lr <= 0.0 {
            return Err(Error::Hyperparameter(format!("'lr' must be > 0, got {lr}")));
        }
        let epochs = hp.int("epochs")?;
        if epochs < 0 {
            return Err(Error::Hyperparameter(format!(
                "'epochs' must be >= 0, got {epochs}"
            )));
        }
        let batch = match hp.get("batch") {
            Some(HpValue::Cat(s)) if s == "full" => None,
            Some(HpValue::Int(b)) if *b >= 1 => Some(*b as usize),
            other => {
                return Err(Error::Hyperparameter(format!(
                    "'batch' must be a positive integer or \"full\", got {other:?}"
                )))
            }
        };
        let l2 = hp.real("l2")?;
        if l2 < 0.0 {
            return Err(Error::Hyperparameter(format!(
                "'l2' must be >= 0, got {l2}"
            )));
        }
        let hidden = match kind {
            LearnerKind::MlpNN => Some(hp.positive_int("hidden")?),
            _ => None,
        };
        Ok(TrainConfig {
            hidden,
            lr,
            epochs: epochs as usize,
            batch,
            l2,
        })
    }
}

#[derive(Clone, Debug)]
pub(super) struct Network {
    arch: NeuralArch,
    params: Vec<f64>,
}

impl Network {
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.arch.n_classes);
        let mut s = Scratch::new(&self.arch);
        for i in 0..x.rows() {
            forward(&self.arch, &self.params, x.row(i), &mut s);
            softmax(&mut s.logits);
            out.row_mut(i).copy_from_slice(&s.logits);
        }
        out
    }
}

/// Zeros for softmax regression; Glorot-uniform weights and zero biases for
/// the MLP.
fn init_params(arch: &NeuralArch, rng: &mut impl Rng) -> Vec<f64> {
    let mut p = vec![0.0; arch.param_count()];
    if let Some(h) = arch.hidden {
        let (d, c) = (arch.d_in, arch.n_classes);
        let a1 = (6.0 / (d + h) as f64).sqrt();
        for w in &mut p[..d * h] {
            *w = rng.random_range(-a1..=a1);
        }
        let a2 = (6.0 / (h + c) as f64).sqrt();
        let w2 = d * h + h;
        for w in &mut p[w2..w2 + h * c] {
            *w = rng.random_range(-a2..=a2);
        }
    }
    p
}

pub(super) fn train(
    cfg: &TrainConfig,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<Network> {
    let arch = NeuralArch {
        d_in: x.cols(),
        hidden: cfg.hidden,
        n_classes,
    };
    let mut rng = seed::rng(seed);
    let mut params = init_params(&arch, &mut rng);
    let mut grad = vec![0.0; params.len()];
    let mut s = Scratch::new(&arch);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let batch = cfg.batch.unwrap_or(order.len()).min(order.len());

    for epoch in 0..cfg.epochs {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Timeout);
        }
        order.shuffle(&mut rng);
        for rows in order.chunks(batch) {
            let loss = batch_loss_grad(&arch, &params, x, y, rows, cfg.l2, &mut grad, &mut s);
            if !loss.is_finite() {
                return Err(Error::FitFailure(format!(
                    "non-finite loss in epoch {epoch}"
                )));
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= cfg.lr * g;
            }
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::FitFailure(
            "non-finite parameters after training".into(),
        ));
    }
    Ok(Network { arch, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lr_hp(lr: f64, epochs: i64) -> Hyperparameters {
        Hyperparameters::new()
            .with("batch", HpValue::Cat("full".into()))
            .with("epochs", HpValue::Int(epochs))
            .with("l2", HpValue::Real(0.0))
            .with("lr", HpValue::Real(lr))
    }

    #[test]
    fn parameter_counts() {
        // 4*8 + 8 + 8*2 + 2 = 58
        assert_eq!(NeuralArch::mlp(4, 8, 2).param_count(), 58);
        assert_eq!(NeuralArch::logistic(4, 3).param_count(), 15);
    }

    #[test]
    fn zero_params_give_ln2_on_balanced_binary() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [-2.0, 1.0]]).unwrap();
        let arch = NeuralArch::logistic(2, 2);
        let (loss, _) = loss_and_gradient(&arch, &[0.0; 6], &x, &[0, 1, 0, 1], 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn penalty_strictly_increases_loss() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0]]).unwrap();
        let arch = NeuralArch::mlp(2, 3, 2);
        let params: Vec<f64> = (0..arch.param_count())
            .map(|i| (i as f64 * 0.37).sin())
            .collect();
        let (a, _) = loss_and_gradient(&arch, &params, &x, &[0, 1], 0.0).unwrap();
        let (b, _) = loss_and_gradient(&arch, &params, &x, &[0, 1], 0.1).unwrap();
        assert!(b > a);
    }

    #[test]
    fn wrong_length_rejected() {
        let x = Matrix::zeros(2, 2);
        assert!(
            loss_and_gradient(&NeuralArch::logistic(2, 2), &[0.0; 5], &x, &[0, 1], 0.0).is_err()
        );
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let cfg = TrainConfig::from_hp(LearnerKind::LogisticRegressionNN, &lr_hp(0.1, 0)).unwrap();
        let net = train(&cfg, &x, &[0, 1, 2], 3, 1, None).unwrap();
        assert!(net.params().iter().all(|&p| p == 0.0));
        for r in net.predict_proba(&x).iter_rows() {
            for &p in r {
                assert!((p - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn divergence_is_a_fit_failure() {
        let x = Matrix::from_rows(&[[1e200], [-1e200]]).unwrap();
        let cfg = TrainConfig::from_hp(LearnerKind::LogisticRegressionNN, &lr_hp(0.1, 5)).unwrap();
        assert!(matches!(
            train(&cfg, &x, &[0, 1], 2, 0, None),
            Err(Error::FitFailure(_))
        ));
    }
}
