//! Feed-forward regression network: `input → hidden (ELU) → hidden (ELU) → 1
//! (linear)`, trained by plain gradient descent on mean squared error.
//!
//! Parameters are kept in one flat buffer during training, laid out as
//! `w1` (row-major, `input × hidden`), `b1`, `w2` (`hidden × hidden`), `b2`,
//! `w3` (`hidden`), `b3`. Initialization draws `w1`, `w2`, `w3` in that order
//! from the seeded splitmix64 stream; biases start at zero and consume no draws.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};
use crate::par::Exec;

/// Rows per gradient chunk. Chunks are reduced in index order, so the summed
/// gradient does not depend on how many workers computed them.
const GRAD_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// One step on the mean loss over all rows per epoch.
    FullBatch,
    /// One step per row, in frame order, per epoch.
    #[default]
    PerSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FFNetConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub batch_mode: BatchMode,
}

impl FFNetConfig {
    /// 12 inputs, two 12-unit ELU layers, α = 1, per-sample updates.
    pub fn canonical(learning_rate: f64, epochs: usize, seed: u64) -> Self {
        Self {
            input_dim: 12,
            hidden_dim: 12,
            learning_rate,
            epochs,
            alpha: 1.0,
            seed,
            batch_mode: BatchMode::PerSample,
        }
    }

    pub const CANONICAL_LEARNING_RATES: [f64; 2] = [0.001, 0.0001];
    pub const CANONICAL_EPOCHS: [usize; 3] = [100, 150, 200];

    /// A learning rate of exactly zero is accepted (it freezes the weights).
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidParameter(
                "layer sizes must be at least 1".into(),
            ));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter(
                "learning rate must be finite and non-negative".into(),
            ));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("ELU alpha must be positive".into()));
        }
        Ok(())
    }
}

/// ELU: `x` for `x > 0`, `α(eˣ − 1)` otherwise.
#[inline]
pub fn elu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * x.exp_m1()
    }
}

#[inline]
pub fn elu_prime(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        alpha * x.exp()
    }
}

pub fn loss_mse(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::dims(format!(
            "{} predictions for {} targets",
            y_hat.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(y_hat
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64)
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    input: usize,
    hidden: usize,
}

impl Layout {
    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        self.input * self.hidden
    }
    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }
    fn b2(&self) -> usize {
        self.w2() + self.hidden * self.hidden
    }
    fn w3(&self) -> usize {
        self.b2() + self.hidden
    }
    fn b3(&self) -> usize {
        self.w3() + self.hidden
    }
    fn len(&self) -> usize {
        self.b3() + 1
    }
}

/// Pre- and post-activation values of both hidden layers for one input row.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCache {
    pub z1: Vec<f64>,
    pub a1: Vec<f64>,
    pub z2: Vec<f64>,
    pub a2: Vec<f64>,
}

fn forward_flat(p: &[f64], lay: Layout, alpha: f64, x: &[f64]) -> (f64, LayerCache) {
    let h = lay.hidden;
    let mut z1 = p[lay.b1()..lay.b1() + h].to_vec();
    for (i, &xi) in x.iter().enumerate() {
        let w = &p[lay.w1() + i * h..lay.w1() + (i + 1) * h];
        for (z, wij) in z1.iter_mut().zip(w) {
            *z += xi * wij;
        }
    }
    let a1: Vec<f64> = z1.iter().map(|&z| elu(z, alpha)).collect();
    let mut z2 = p[lay.b2()..lay.b2() + h].to_vec();
    for (j, &aj) in a1.iter().enumerate() {
        let w = &p[lay.w2() + j * h..lay.w2() + (j + 1) * h];
        for (z, wjk) in z2.iter_mut().zip(w) {
            *z += aj * wjk;
        }
    }
    let a2: Vec<f64> = z2.iter().map(|&z| elu(z, alpha)).collect();
    let w3 = &p[lay.w3()..lay.w3() + h];
    let y = p[lay.b3()] + a2.iter().zip(w3).map(|(a, w)| a * w).sum::<f64>();
    (y, LayerCache { z1, a1, z2, a2 })
}

/// Adds `upstream · ∂ŷ/∂params` for one row into `grad`.
fn backprop_flat(
    p: &[f64],
    lay: Layout,
    alpha: f64,
    x: &[f64],
    cache: &LayerCache,
    upstream: f64,
    grad: &mut [f64],
) {
    let h = lay.hidden;
    grad[lay.b3()] += upstream;
    let mut dz2 = vec![0.0; h];
    for k in 0..h {
        grad[lay.w3() + k] += upstream * cache.a2[k];
        dz2[k] = upstream * p[lay.w3() + k] * elu_prime(cache.z2[k], alpha);
        grad[lay.b2() + k] += dz2[k];
    }
    let mut dz1 = vec![0.0; h];
    for j in 0..h {
        let row = lay.w2() + j * h;
        let mut da1 = 0.0;
        for k in 0..h {
            grad[row + k] += cache.a1[j] * dz2[k];
            da1 += p[row + k] * dz2[k];
        }
        dz1[j] = da1 * elu_prime(cache.z1[j], alpha);
        grad[lay.b1() + j] += dz1[j];
    }
    for (i, &xi) in x.iter().enumerate() {
        let row = lay.w1() + i * h;
        for j in 0..h {
            grad[row + j] += xi * dz1[j];
        }
    }
}

/// Gradient of the mean squared error over all rows of `x`.
fn batch_gradient_flat(
    p: &[f64],
    lay: Layout,
    alpha: f64,
    x: &Matrix,
    y: &[f64],
    exec: Exec,
) -> Vec<f64> {
    let n = x.rows();
    let scale = 2.0 / n as f64;
    let chunks = n.div_ceil(GRAD_CHUNK);
    let partials = exec.map_indexed(chunks, |c| {
        let mut g = vec![0.0; lay.len()];
        #[allow(clippy::needless_range_loop)]
        for r in c * GRAD_CHUNK..((c + 1) * GRAD_CHUNK).min(n) {
            let (y_hat, cache) = forward_flat(p, lay, alpha, x.row(r));
            backprop_flat(
                p,
                lay,
                alpha,
                x.row(r),
                &cache,
                scale * (y_hat - y[r]),
                &mut g,
            );
        }
        g
    });
    let mut total = vec![0.0; lay.len()];
    for g in partials {
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    total
}

fn predict_flat(p: &[f64], lay: Layout, alpha: f64, x: &Matrix) -> Vec<f64> {
    x.row_iter()
        .map(|row| forward_flat(p, lay, alpha, row).0)
        .collect()
}

/// Gradient bundle, same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: f64,
}

impl Gradients {
    /// Flattened in the same order as [`FFNetModel::params`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.w1.data().to_vec();
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(self.w2.data());
        v.extend_from_slice(&self.b2);
        v.extend_from_slice(self.w3.data());
        v.push(self.b3);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FFNetModel {
    pub config: FFNetConfig,
    /// `input_dim × hidden_dim`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `hidden_dim × hidden_dim`
    pub w2: Matrix,
    pub b2: Vec<f64>,
    /// `hidden_dim × 1`
    pub w3: Matrix,
    pub b3: f64,
    /// Training-set MSE at the end of each completed epoch.
    pub train_loss_history: Vec<f64>,
}

impl FFNetModel {
    /// Glorot-uniform weights on `[-r, r]`, `r = √(6 / (fan_in + fan_out))`,
    /// zero biases.
    pub fn init(config: FFNetConfig) -> Result<Self> {
        config.validate()?;
        let (n_in, h) = (config.input_dim, config.hidden_dim);
        let mut rng = Rng::new(config.seed);
        let mut layer = |rows: usize, cols: usize| -> Result<Matrix> {
            let r = (6.0 / (rows + cols) as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.next_uniform(-r, r))
                .collect::<Result<Vec<f64>>>()?;
            Matrix::new(rows, cols, data)
        };
        let w1 = layer(n_in, h)?;
        let w2 = layer(h, h)?;
        let w3 = layer(h, 1)?;
        Ok(Self {
            config,
            w1,
            b1: vec![0.0; h],
            w2,
            b2: vec![0.0; h],
            w3,
            b3: 0.0,
            train_loss_history: Vec::new(),
        })
    }

    fn layout(&self) -> Layout {
        Layout {
            input: self.config.input_dim,
            hidden: self.config.hidden_dim,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().len()
    }

    /// All weights and biases as one vector (`w1, b1, w2, b2, w3, b3`).
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(self.w1.data());
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(self.w2.data());
        v.extend_from_slice(&self.b2);
        v.extend_from_slice(self.w3.data());
        v.push(self.b3);
        v
    }

    /// Copy of the model with parameters replaced from a flat vector.
    pub fn with_params(&self, p: &[f64]) -> Result<Self> {
        let lay = self.layout();
        if p.len() != lay.len() {
            return Err(Error::dims(format!(
                "{} parameters, model has {}",
                p.len(),
                lay.len()
            )));
        }
        let (n_in, h) = (lay.input, lay.hidden);
        Ok(Self {
            config: self.config,
            w1: Matrix::new(n_in, h, p[lay.w1()..lay.b1()].to_vec())?,
            b1: p[lay.b1()..lay.w2()].to_vec(),
            w2: Matrix::new(h, h, p[lay.w2()..lay.b2()].to_vec())?,
            b2: p[lay.b2()..lay.w3()].to_vec(),
            w3: Matrix::new(h, 1, p[lay.w3()..lay.b3()].to_vec())?,
            b3: p[lay.b3()],
            train_loss_history: self.train_loss_history.clone(),
        })
    }

    /// Checks parameter shapes against the stored configuration.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let (n_in, h) = (self.config.input_dim, self.config.hidden_dim);
        let ok = self.w1.shape() == (n_in, h)
            && self.b1.len() == h
            && self.w2.shape() == (h, h)
            && self.b2.len() == h
            && self.w3.shape() == (h, 1);
        if !ok {
            return Err(Error::dims(
                "parameter shapes do not match the configuration",
            ));
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.config.input_dim {
            return Err(Error::dims(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    fn check_batch(&self, x: &Matrix, y: &[f64]) -> Result<()> {
        self.check_input(x)?;
        if x.rows() != y.len() {
            return Err(Error::dims(format!(
                "{} input rows, {} targets",
                x.rows(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(())
    }

    pub fn forward(&self, x_row: &[f64]) -> Result<(f64, LayerCache)> {
        if x_row.len() != self.config.input_dim {
            return Err(Error::dims(format!(
                "input row has {} entries, network expects {}",
                x_row.len(),
                self.config.input_dim
            )));
        }
        Ok(forward_flat(
            &self.params(),
            self.layout(),
            self.config.alpha,
            x_row,
        ))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(predict_flat(
            &self.params(),
            self.layout(),
            self.config.alpha,
            x,
        ))
    }

    /// Exact gradient of the mean squared error over the batch.
    pub fn gradients(&self, x: &Matrix, y: &[f64]) -> Result<Gradients> {
        self.gradients_with(x, y, Exec::default())
    }

    pub fn gradients_with(&self, x: &Matrix, y: &[f64], exec: Exec) -> Result<Gradients> {
        self.check_batch(x, y)?;
        let flat =
            batch_gradient_flat(&self.params(), self.layout(), self.config.alpha, x, y, exec);
        let g = self.with_params(&flat)?;
        Ok(Gradients {
            w1: g.w1,
            b1: g.b1,
            w2: g.w2,
            b2: g.b2,
            w3: g.w3,
            b3: g.b3,
        })
    }

    /// Mean squared error of the current parameters on `(x, y)`.
    pub fn loss(&self, x: &Matrix, y: &[f64]) -> Result<f64> {
        self.check_batch(x, y)?;
        loss_mse(&self.predict(x)?, y)
    }

    /// Runs `config.epochs` epochs and returns the trained copy; loss history
    /// entries are appended to any existing history.
    pub fn train(&self, x: &Matrix, y: &[f64]) -> Result<Self> {
        self.train_with(x, y, Exec::default())
    }

    pub fn train_with(&self, x: &Matrix, y: &[f64], exec: Exec) -> Result<Self> {
        self.validate()?;
        self.check_batch(x, y)?;
        let lay = self.layout();
        let alpha = self.config.alpha;
        let lr = self.config.learning_rate;
        let mut p = self.params();
        let mut history = self.train_loss_history.clone();
        let mut grad = vec![0.0; lay.len()];

        for epoch in 1..=self.config.epochs {
            match self.config.batch_mode {
                BatchMode::FullBatch => {
                    let g = batch_gradient_flat(&p, lay, alpha, x, y, exec);
                    for (w, gi) in p.iter_mut().zip(&g) {
                        *w -= lr * gi;
                    }
                }
                BatchMode::PerSample => {
                    for (r, row) in x.row_iter().enumerate() {
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        let (y_hat, cache) = forward_flat(&p, lay, alpha, row);
                        backprop_flat(&p, lay, alpha, row, &cache, 2.0 * (y_hat - y[r]), &mut grad);
                        for (w, gi) in p.iter_mut().zip(&grad) {
                            *w -= lr * gi;
                        }
                    }
                }
            }
            let loss = loss_mse(&predict_flat(&p, lay, alpha, x), y)?;
            if !loss.is_finite() || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::DivergedToNonFinite { epoch });
            }
            history.push(loss);
        }
        let mut trained = self.with_params(&p)?;
        trained.train_loss_history = history;
        Ok(trained)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Every canonical configuration (2 learning rates × 3 epoch counts), in grid order.
pub fn canonical_configs(seed: u64) -> Vec<FFNetConfig> {
    FFNetConfig::CANONICAL_LEARNING_RATES
        .iter()
        .flat_map(|&lr| {
            FFNetConfig::CANONICAL_EPOCHS
                .iter()
                .map(move |&e| FFNetConfig::canonical(lr, e, seed))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_diff_gradient;

    fn small_config(seed: u64) -> FFNetConfig {
        FFNetConfig {
            input_dim: 3,
            hidden_dim: 4,
            learning_rate: 0.01,
            epochs: 5,
            alpha: 1.0,
            seed,
            batch_mode: BatchMode::FullBatch,
        }
    }

    fn random_batch(rng: &mut Rng, rows: usize, cols: usize) -> (Matrix, Vec<f64>) {
        let data = (0..rows * cols)
            .map(|_| rng.next_uniform(-1.0, 1.0).unwrap())
            .collect();
        let y = (0..rows)
            .map(|_| rng.next_uniform(-2.0, 2.0).unwrap())
            .collect();
        (Matrix::new(rows, cols, data).unwrap(), y)
    }

    /// Forward pass written out directly from the layer formula, independent
    /// of the flat-buffer code.
    fn reference_forward(m: &FFNetModel, x: &[f64]) -> f64 {
        let h = m.config.hidden_dim;
        let a = m.config.alpha;
        let act = |v: f64| if v > 0.0 { v } else { a * (v.exp() - 1.0) };
        let h1: Vec<f64> = (0..h)
            .map(|j| act((0..x.len()).map(|i| m.w1.get(i, j) * x[i]).sum::<f64>() + m.b1[j]))
            .collect();
        let h2: Vec<f64> = (0..h)
            .map(|k| act((0..h).map(|j| m.w2.get(j, k) * h1[j]).sum::<f64>() + m.b2[k]))
            .collect();
        (0..h).map(|k| m.w3.get(k, 0) * h2[k]).sum::<f64>() + m.b3
    }

    #[test]
    fn elu_examples() {
        assert_eq!(elu(0.0, 1.0), 0.0);
        assert_eq!(elu(2.0, 1.0), 2.0);
        assert!((elu(-1.0, 1.0) - (-0.6321205588285577)).abs() < 1e-15);
        assert_eq!(elu_prime(5.0, 1.0), 1.0);
        assert_eq!(elu_prime(0.0, 1.0), 1.0);
        assert!((elu_prime(-1.0, 1.0) - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[0.0], &[3.0]).unwrap(), 9.0);
        assert!((loss_mse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 5.0]).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            loss_mse(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(loss_mse(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn init_determinism_and_range() {
        let a = FFNetModel::init(FFNetConfig::canonical(0.001, 100, 7)).unwrap();
        let b = FFNetModel::init(FFNetConfig::canonical(0.001, 100, 7)).unwrap();
        assert_eq!(a, b);
        let r1 = (6.0_f64 / 24.0).sqrt();
        let r3 = (6.0_f64 / 13.0).sqrt();
        assert!(a.w1.data().iter().chain(a.w2.data()).all(|w| w.abs() <= r1));
        assert!(a.w3.data().iter().all(|w| w.abs() <= r3));
        assert!(a.b1.iter().chain(&a.b2).all(|&b| b == 0.0) && a.b3 == 0.0);
    }

    #[test]
    fn init_first_weight_replays_stream() {
        // splitmix64(7) first draw mapped onto [-0.5, 0.5)
        let m = FFNetModel::init(FFNetConfig::canonical(0.001, 100, 7)).unwrap();
        assert_eq!(m.w1.get(0, 0), -0.11017025160872851);
    }

    #[test]
    fn forward_examples() {
        let mut m = FFNetModel::init(small_config(1)).unwrap();
        let zero = m.with_params(&vec![0.0; m.param_count()]).unwrap();
        assert_eq!(zero.forward(&[3.0, -1.0, 2.0]).unwrap().0, 0.0);

        let mut p = vec![0.0; m.param_count()];
        *p.last_mut().unwrap() = 4.5;
        let head = m.with_params(&p).unwrap();
        assert_eq!(head.forward(&[9.0, 9.0, 9.0]).unwrap().0, 4.5);

        m = FFNetModel::init(FFNetConfig::canonical(0.001, 100, 123)).unwrap();
        let mut rng = Rng::new(9);
        m.b1.iter_mut()
            .for_each(|b| *b = rng.next_uniform(-0.5, 0.5).unwrap());
        m.b3 = 0.25;
        let x: Vec<f64> = (0..12)
            .map(|_| rng.next_uniform(-2.0, 2.0).unwrap())
            .collect();
        let (y, cache) = m.forward(&x).unwrap();
        assert!((y - reference_forward(&m, &x)).abs() < 1e-12);
        assert_eq!(cache.z1.len(), 12);
        assert!(matches!(
            m.forward(&[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_network_has_zero_gradient() {
        let m = FFNetModel::init(small_config(2)).unwrap();
        let zero = m.with_params(&vec![0.0; m.param_count()]).unwrap();
        let mut rng = Rng::new(4);
        let (x, _) = random_batch(&mut rng, 8, 3);
        let g = zero.gradients(&x, &[0.0; 8]).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_bias_gradient_is_mean_residual() {
        let m = FFNetModel::init(small_config(3)).unwrap();
        let mut rng = Rng::new(5);
        let (x, y) = random_batch(&mut rng, 10, 3);
        let y_hat = m.predict(&x).unwrap();
        let expected = y_hat
            .iter()
            .zip(&y)
            .map(|(a, b)| 2.0 * (a - b))
            .sum::<f64>()
            / 10.0;
        let g = m.gradients(&x, &y).unwrap();
        assert!((g.b3 - expected).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(77);
        for seed in 0..3 {
            let m = FFNetModel::init(small_config(seed)).unwrap();
            let (x, y) = random_batch(&mut rng, 16, 3);
            let analytic = m.gradients(&x, &y).unwrap().to_flat();
            let numeric = finite_diff_gradient(
                |p| m.with_params(p).unwrap().loss(&x, &y).unwrap(),
                &m.params(),
                1e-6,
            )
            .unwrap();
            for (a, n) in analytic.iter().zip(&numeric) {
                assert!((a - n).abs() <= (1e-5 * n.abs()).max(1e-8), "{a} vs {n}");
            }
        }
    }

    #[test]
    fn gradient_reduction_is_execution_independent() {
        let m = FFNetModel::init(FFNetConfig::canonical(0.001, 1, 8)).unwrap();
        let mut rng = Rng::new(6);
        let (x, y) = random_batch(&mut rng, 200, 12);
        let s = m.gradients_with(&x, &y, Exec::Sequential).unwrap();
        let p = crate::par::with_threads(Some(3), || {
            m.gradients_with(&x, &y, Exec::Parallel).unwrap()
        });
        assert_eq!(s, p);
    }

    #[test]
    fn zero_learning_rate_freezes_weights() {
        let mut cfg = small_config(4);
        cfg.learning_rate = 0.0;
        cfg.batch_mode = BatchMode::PerSample;
        let m = FFNetModel::init(cfg).unwrap();
        let mut rng = Rng::new(1);
        let (x, y) = random_batch(&mut rng, 6, 3);
        let t = m.train(&x, &y).unwrap();
        assert_eq!(t.params(), m.params());
        assert_eq!(t.train_loss_history.len(), 5);
        assert!(t.train_loss_history.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn single_point_full_batch_loss_is_non_increasing() {
        let mut cfg = small_config(5);
        cfg.epochs = 200;
        cfg.learning_rate = 1e-3;
        let m = FFNetModel::init(cfg).unwrap();
        let x = Matrix::new(1, 3, vec![0.3, -0.7, 0.9]).unwrap();
        let t = m.train(&x, &[2.0]).unwrap();
        assert_eq!(t.train_loss_history.len(), 200);
        assert!(t.train_loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(t.train_loss_history[199] < t.train_loss_history[0]);
    }

    #[test]
    fn training_is_deterministic_and_replays() {
        let cfg = FFNetConfig::canonical(1e-3, 20, 21);
        let m = FFNetModel::init(cfg).unwrap();
        let mut rng = Rng::new(2);
        let (x, y) = random_batch(&mut rng, 40, 12);
        let a = m.train(&x, &y).unwrap();
        let b = m.train(&x, &y).unwrap();
        assert_eq!(a, b);
        let fitted = a.predict(&x).unwrap();
        assert_eq!(
            loss_mse(&fitted, &y).unwrap(),
            *a.train_loss_history.last().unwrap()
        );
    }

    #[test]
    fn divergence_is_reported() {
        let mut cfg = small_config(6);
        cfg.learning_rate = 10.0;
        cfg.epochs = 50;
        cfg.batch_mode = BatchMode::PerSample;
        let m = FFNetModel::init(cfg).unwrap();
        let x = Matrix::new(3, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        assert!(matches!(
            m.train(&x, &[1e3, 2e3, 3e3]),
            Err(Error::DivergedToNonFinite { .. })
        ));
    }

    #[test]
    fn predict_edge_cases() {
        let m = FFNetModel::init(small_config(7)).unwrap();
        assert!(m.predict(&Matrix::zeros(0, 3)).unwrap().is_empty());
        let x = Matrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![-1.0, 0.5, 0.0]]).unwrap();
        let swapped = Matrix::from_rows(&[vec![-1.0, 0.5, 0.0], vec![1.0, 0.0, 2.0]]).unwrap();
        let a = m.predict(&x).unwrap();
        let b = m.predict(&swapped).unwrap();
        assert_eq!((a[0], a[1]), (b[1], b[0]));
        assert!(matches!(
            m.predict(&Matrix::zeros(2, 4)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config(0);
        cfg.epochs = 0;
        assert!(FFNetModel::init(cfg).is_err());
        let mut cfg = small_config(0);
        cfg.learning_rate = -1.0;
        assert!(cfg.validate().is_err());
        assert_eq!(canonical_configs(1).len(), 6);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = FFNetModel::init(FFNetConfig::canonical(1e-4, 150, 99)).unwrap();
        let mut rng = Rng::new(3);
        let (x, y) = random_batch(&mut rng, 10, 12);
        let mut cfg = m.config;
        cfg.epochs = 3;
        let t = FFNetModel { config: cfg, ..m }.train(&x, &y).unwrap();
        let back = FFNetModel::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(back
            .params()
            .iter()
            .zip(t.params())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
