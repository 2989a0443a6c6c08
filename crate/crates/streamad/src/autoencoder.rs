//! A small fully-connected autoencoder trained with Adam on binary
//! cross-entropy, in plain f64 arithmetic.
//!
//! The encoder layer sizes are given by the config; the decoder mirrors
//! them, so `hidden_dims = [64, 8]` on 2-dimensional input yields the
//! chain 2 -> 64 -> 8 -> 64 -> 2. Hidden layers use leaky ReLU, the output
//! layer uses a sigmoid so reconstructions stay in (0, 1).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Clamp applied to reconstructions before taking logs.
pub const BCE_EPSILON: f64 = 1e-7;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

/// Training-time configuration of the autoencoder.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AeConfig {
    pub input_dim: usize,
    /// Encoder layer widths; the decoder mirrors them.
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub epochs: usize,
    /// Negative-side slope of the leaky ReLU used on hidden layers.
    pub hidden_activation: f64,
    pub seed: u64,
}

impl AeConfig {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>) -> Self {
        Self {
            input_dim,
            hidden_dims,
            learning_rate: 0.001,
            minibatch_size: 128,
            epochs: 10,
            hidden_activation: 0.01,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if self.hidden_dims.is_empty() {
            return Err(Error::Config("hidden_dims must be non-empty".into()));
        }
        if self.hidden_dims.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if *self.hidden_dims.last().unwrap() >= self.input_dim {
            return Err(Error::Config(format!(
                "bottleneck width {} must be smaller than input_dim {}",
                self.hidden_dims.last().unwrap(),
                self.input_dim
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.minibatch_size == 0 {
            return Err(Error::Config("minibatch_size must be positive".into()));
        }
        Ok(())
    }

    /// Full layer-width chain: input, encoder, mirrored decoder, output.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(2 * self.hidden_dims.len() + 1);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        for &h in self.hidden_dims[..self.hidden_dims.len() - 1].iter().rev() {
            dims.push(h);
        }
        dims.push(self.input_dim);
        dims
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Activation {
    LeakyRelu(f64),
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => {
                let s = self.apply(z);
                s * (1.0 - s)
            }
        }
    }
}

/// One dense layer; weights are row-major `[out_dim x in_dim]`.
#[derive(Debug, Clone)]
struct Layer {
    weights: Vec<f64>,
    biases: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
}

impl Layer {
    fn forward_into(&self, input: &[f64], z_out: &mut Vec<f64>, a_out: &mut Vec<f64>) {
        z_out.clear();
        a_out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut z = self.biases[o];
            for (w, a) in row.iter().zip(input) {
                z += w * a;
            }
            z_out.push(z);
            a_out.push(self.activation.apply(z));
        }
    }
}

/// Per-layer gradients, shaped exactly like the parameters.
#[derive(Debug, Clone)]
pub struct Gradient {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Gradient {
    fn zeros_like(layers: &[Layer]) -> Self {
        Self {
            weights: layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn scale(&mut self, factor: f64) {
        for g in self.weights.iter_mut().flatten() {
            *g *= factor;
        }
        for g in self.biases.iter_mut().flatten() {
            *g *= factor;
        }
    }

    /// Flattened, layer by layer, weights before biases within a layer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            flat.extend_from_slice(w);
            flat.extend_from_slice(b);
        }
        flat
    }
}

#[derive(Debug, Clone)]
struct AdamState {
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    fn zeros_like(layers: &[Layer]) -> Self {
        let w = |_: &()| layers.iter().map(|l| vec![0.0; l.weights.len()]).collect::<Vec<_>>();
        let b = |_: &()| layers.iter().map(|l| vec![0.0; l.biases.len()]).collect::<Vec<_>>();
        Self {
            m_weights: w(&()),
            v_weights: w(&()),
            m_biases: b(&()),
            v_biases: b(&()),
            step: 0,
        }
    }
}

/// Fully-connected autoencoder with He-normal init and Adam updates.
#[derive(Debug, Clone)]
pub struct Autoencoder {
    layers: Vec<Layer>,
    adam: AdamState,
    config: AeConfig,
    rng: ChaCha8Rng,
}

impl Autoencoder {
    /// Build a freshly initialised model. Two calls with an equal config
    /// (seed included) produce bit-identical weights.
    pub fn new(config: AeConfig) -> Result<Self> {
        config.validate()?;
        let dims = config.layer_dims();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n_layers = dims.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (in_dim, out_dim) = (dims[l], dims[l + 1]);
            let std = (2.0 / in_dim as f64).sqrt();
            let dist = Normal::new(0.0, std)
                .map_err(|e| Error::Config(format!("he-normal init: {e}")))?;
            let weights = (0..in_dim * out_dim).map(|_| dist.sample(&mut rng)).collect();
            let activation = if l + 1 == n_layers {
                Activation::Sigmoid
            } else {
                Activation::LeakyRelu(config.hidden_activation)
            };
            layers.push(Layer {
                weights,
                biases: vec![0.0; out_dim],
                in_dim,
                out_dim,
                activation,
            });
        }
        let adam = AdamState::zeros_like(&layers);
        Ok(Self { layers, adam, config, rng })
    }

    pub fn config(&self) -> &AeConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    /// Forward pass. Pure; the reconstruction lies strictly inside (0, 1)^d.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let (_, mut acts) = self.forward_trace(x);
        Ok(acts.pop().expect("network has at least one layer"))
    }

    /// Reconstruction loss of one instance under the current weights.
    pub fn instance_loss(&self, x: &[f64]) -> Result<f64> {
        let x_hat = self.reconstruct(x)?;
        bce_loss(x, &x_hat)
    }

    /// Mean reconstruction loss over `batch`; the cost minimised by training.
    pub fn batch_cost(&self, batch: &[Vec<f64>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Input("batch must be non-empty".into()));
        }
        let mut total = 0.0;
        for x in batch {
            total += self.instance_loss(x)?;
        }
        Ok(total / batch.len() as f64)
    }

    /// Analytic gradient of [`batch_cost`](Self::batch_cost) with respect to
    /// every weight and bias. Exposed so it can be checked against finite
    /// differences.
    pub fn gradient(&self, batch: &[Vec<f64>]) -> Result<Gradient> {
        if batch.is_empty() {
            return Err(Error::Input("batch must be non-empty".into()));
        }
        let mut grad = Gradient::zeros_like(&self.layers);
        for x in batch {
            self.check_dim(x)?;
            self.accumulate_instance(x, &mut grad);
        }
        grad.scale(1.0 / batch.len() as f64);
        Ok(grad)
    }

    /// Train for the configured number of epochs on `window` and return the
    /// final mean window cost.
    pub fn train_window(&mut self, window: &[Vec<f64>]) -> Result<f64> {
        self.train_epochs(window, self.config.epochs)
    }

    /// Train for an explicit number of epochs. Each epoch shuffles the
    /// window with the model's own seeded RNG and applies one Adam update
    /// per mini-batch of the mean batch loss.
    pub fn train_epochs(&mut self, window: &[Vec<f64>], epochs: usize) -> Result<f64> {
        if window.is_empty() {
            return Err(Error::Input("training window must be non-empty".into()));
        }
        let batch_size = self.config.minibatch_size.min(window.len());
        let mut order: Vec<usize> = (0..window.len()).collect();
        let mut batch: Vec<Vec<f64>> = Vec::with_capacity(batch_size);
        for _ in 0..epochs {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(batch_size) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| window[i].clone()));
                let grad = self.gradient(&batch)?;
                self.adam_update(&grad);
            }
        }
        self.check_finite()?;
        self.batch_cost(window)
    }

    /// One Adam step with bias correction; the step counter advances once
    /// per call.
    fn adam_update(&mut self, grad: &Gradient) {
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let bias1 = 1.0 - ADAM_BETA1.powi(t);
        let bias2 = 1.0 - ADAM_BETA2.powi(t);
        let lr = self.config.learning_rate;
        for (l, layer) in self.layers.iter_mut().enumerate() {
            update_params(
                &mut layer.weights,
                &grad.weights[l],
                &mut self.adam.m_weights[l],
                &mut self.adam.v_weights[l],
                lr,
                bias1,
                bias2,
            );
            update_params(
                &mut layer.biases,
                &grad.biases[l],
                &mut self.adam.m_biases[l],
                &mut self.adam.v_biases[l],
                lr,
                bias1,
                bias2,
            );
        }
    }

    /// Adam mini-batch updates applied so far.
    pub fn adam_steps(&self) -> u64 {
        self.adam.step
    }

    /// All parameters flattened layer by layer, weights before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for layer in &self.layers {
            flat.extend_from_slice(&layer.weights);
            flat.extend_from_slice(&layer.biases);
        }
        flat
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let expected: usize = self
            .layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum();
        if flat.len() != expected {
            return Err(Error::Input(format!(
                "expected {expected} parameters, got {}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            layer.weights.copy_from_slice(&flat[offset..offset + layer.weights.len()]);
            offset += layer.weights.len();
            layer.biases.copy_from_slice(&flat[offset..offset + layer.biases.len()]);
            offset += layer.biases.len();
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim {
            return Err(Error::Input(format!(
                "expected {}-dimensional input, got {}",
                self.config.input_dim,
                x.len()
            )));
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        for layer in &self.layers {
            if layer.weights.iter().chain(&layer.biases).any(|p| !p.is_finite()) {
                return Err(Error::Numeric(
                    "non-finite parameter after update; lower the learning rate".into(),
                ));
            }
        }
        Ok(())
    }

    /// Pre-activations and activations for every layer, input first.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let mut z = Vec::new();
            let mut a = Vec::new();
            layer.forward_into(acts.last().unwrap(), &mut z, &mut a);
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    /// Backprop for one instance, adding into `grad`.
    ///
    /// The output delta is the derivative of the clipped BCE: `s - x` while
    /// the sigmoid output is inside the clamp range, zero once the clamp
    /// saturates (the loss is constant in the parameter there).
    fn accumulate_instance(&self, x: &[f64], grad: &mut Gradient) {
        let (zs, acts) = self.forward_trace(x);
        let last = self.layers.len() - 1;
        let mut delta: Vec<f64> = acts[last + 1]
            .iter()
            .zip(x)
            .map(|(&s, &xd)| {
                if s < BCE_EPSILON || s > 1.0 - BCE_EPSILON {
                    0.0
                } else {
                    s - xd
                }
            })
            .collect();
        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            let input = &acts[l];
            let gw = &mut grad.weights[l];
            for (o, &d) in delta.iter().enumerate() {
                grad.biases[l][o] += d;
                let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let prev = &self.layers[l - 1];
                let mut next_delta = vec![0.0; layer.in_dim];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (nd, w) in next_delta.iter_mut().zip(row) {
                        *nd += w * d;
                    }
                }
                for (nd, &z) in next_delta.iter_mut().zip(&zs[l - 1]) {
                    *nd *= prev.activation.derivative(z);
                }
                delta = next_delta;
            }
        }
    }
}

fn update_params(
    params: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        let g = grad[i];
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
}

/// Binary cross-entropy between an input in [0,1]^d and a reconstruction,
/// summed over dimensions. The reconstruction is clamped to
/// `[BCE_EPSILON, 1 - BCE_EPSILON]` before the logs.
pub fn bce_loss(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            x_hat.len()
        )));
    }
    let mut loss = 0.0;
    for (&xd, &hd) in x.iter().zip(x_hat) {
        let c = hd.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        loss -= xd * c.ln() + (1.0 - xd) * (1.0 - c).ln();
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> AeConfig {
        let mut cfg = AeConfig::new(2, vec![3]);
        cfg.seed = 7;
        cfg
    }

    #[test]
    fn layer_dims_mirror_encoder() {
        assert_eq!(AeConfig::new(2, vec![8]).layer_dims(), vec![2, 8, 2]);
        assert_eq!(
            AeConfig::new(784, vec![512, 256]).layer_dims(),
            vec![784, 512, 256, 512, 784]
        );
        assert_eq!(AeConfig::new(2, vec![64, 8]).layer_dims(), vec![2, 64, 8, 64, 2]);
    }

    #[test]
    fn rejects_missing_bottleneck() {
        let cfg = AeConfig::new(2, vec![2]);
        assert!(cfg.validate().is_err());
        assert!(AeConfig::new(2, vec![]).validate().is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let a = Autoencoder::new(small_config()).unwrap();
        let b = Autoencoder::new(small_config()).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
    }

    #[test]
    fn reconstruction_stays_in_open_unit_interval() {
        let model = Autoencoder::new(small_config()).unwrap();
        let x_hat = model.reconstruct(&[0.3, 0.9]).unwrap();
        assert!(x_hat.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn zero_parameters_reconstruct_to_half() {
        let mut model = Autoencoder::new(small_config()).unwrap();
        let n = model.flat_params().len();
        model.set_flat_params(&vec![0.0; n]).unwrap();
        let x_hat = model.reconstruct(&[0.1, 0.8]).unwrap();
        assert_eq!(x_hat, vec![0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        let model = Autoencoder::new(small_config()).unwrap();
        assert!(model.reconstruct(&[0.1]).is_err());
    }

    #[test]
    fn bce_of_perfect_binary_reconstruction_is_tiny() {
        let loss = bce_loss(&[1.0, 0.0], &[1.0 - BCE_EPSILON, BCE_EPSILON]).unwrap();
        assert!(loss >= 0.0 && loss < 1e-6, "loss = {loss}");
    }

    #[test]
    fn bce_matches_hand_values() {
        let loss = bce_loss(&[1.0], &[0.5]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        // Minimum over x_hat for x = 0.5 is still ln 2, not zero.
        let loss = bce_loss(&[0.5], &[0.5]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn training_reduces_cost_on_repeated_vector() {
        let mut cfg = AeConfig::new(2, vec![4, 1]);
        cfg.seed = 3;
        cfg.epochs = 10;
        cfg.learning_rate = 0.01;
        let mut model = Autoencoder::new(cfg).unwrap();
        let window = vec![vec![0.25, 0.75]; 100];
        let before = model.batch_cost(&window).unwrap();
        let after = model.train_window(&window).unwrap();
        assert!(after < before, "cost did not decrease: {before} -> {after}");
    }

    #[test]
    fn zero_epochs_leaves_model_unchanged() {
        let mut model = Autoencoder::new(small_config()).unwrap();
        let before = model.flat_params();
        model.train_epochs(&[vec![0.2, 0.4]], 0).unwrap();
        assert_eq!(model.flat_params(), before);
        assert_eq!(model.adam_steps(), 0);
    }

    #[test]
    fn batch_size_clamps_to_window_length() {
        let mut model = Autoencoder::new(small_config()).unwrap();
        model.train_epochs(&[vec![0.2, 0.4]], 2).unwrap();
        assert_eq!(model.adam_steps(), 2);
    }

    #[test]
    fn identical_batch_matches_single_instance_gradient() {
        let model = Autoencoder::new(small_config()).unwrap();
        let x = vec![0.3, 0.6];
        let single = model.gradient(&[x.clone()]).unwrap().to_flat();
        let batch = model.gradient(&vec![x; 4]).unwrap().to_flat();
        for (a, b) in single.iter().zip(&batch) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn saturated_output_has_zero_gradient() {
        let mut cfg = AeConfig::new(2, vec![1]);
        cfg.seed = 1;
        let mut model = Autoencoder::new(cfg).unwrap();
        let n = model.flat_params().len();
        let mut flat = vec![0.0; n];
        // Last two entries are the output biases; drive them deep into
        // the sigmoid tails so the loss clamp saturates.
        flat[n - 2] = 40.0;
        flat[n - 1] = -40.0;
        model.set_flat_params(&flat).unwrap();
        let grad = model.gradient(&[vec![1.0, 0.0]]).unwrap().to_flat();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences_spot_check() {
        let mut cfg = AeConfig::new(2, vec![3, 1]);
        cfg.seed = 11;
        let mut model = Autoencoder::new(cfg).unwrap();
        let batch = vec![vec![0.2, 0.7], vec![0.9, 0.1], vec![0.5, 0.5]];
        let analytic = model.gradient(&batch).unwrap().to_flat();
        let params = model.flat_params();
        let h = 1e-5;
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = params.clone();
            plus[i] += h;
            model.set_flat_params(&plus).unwrap();
            let up = model.batch_cost(&batch).unwrap();
            let mut minus = params.clone();
            minus[i] -= h;
            model.set_flat_params(&minus).unwrap();
            let down = model.batch_cost(&batch).unwrap();
            let numeric = (up - down) / (2.0 * h);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            assert!(err < 1e-4, "param {i}: analytic {a} vs numeric {numeric}");
        }
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let run = || {
            let mut cfg = AeConfig::new(2, vec![3]);
            cfg.seed = 21;
            cfg.epochs = 3;
            let mut model = Autoencoder::new(cfg).unwrap();
            let window: Vec<Vec<f64>> =
                (0..50).map(|i| vec![(i % 10) as f64 / 10.0, (i % 7) as f64 / 7.0]).collect();
            model.train_window(&window).unwrap();
            model.flat_params()
        };
        assert_eq!(run(), run());
    }
}
