//! Feed-forward network with optional batch normalization on hidden layers.
//!
//! Hidden layer `l` computes `relu(bn(x·Wₗᵀ + bₗ))` (the norm only when enabled
//! for that layer); the output layer computes `act(x·Wᵀ + b)` with a linear or
//! tanh activation. Weights are row-major `(out, in)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{accumulate_weight_grad, affine, input_grad, Matrix};
use crate::error::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Linear,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Network topology.
///
/// `layer_sizes[0]` is the input width and the last entry the output width.
/// The output width may be zero for heads that grow later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
    /// One flag per hidden layer.
    pub batch_norm: Vec<bool>,
}

impl MlpSpec {
    pub fn new(
        input: usize,
        hidden: &[usize],
        output: usize,
        output_activation: OutputActivation,
        batch_norm: bool,
    ) -> Self {
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(output);
        Self {
            layer_sizes,
            hidden_activation: HiddenActivation::Relu,
            output_activation,
            batch_norm: vec![batch_norm; hidden.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.layer_sizes.len();
        if n < 3 {
            return Err(Error::InvalidConfig("an MLP needs at least one hidden layer".into()));
        }
        if self.layer_sizes[..n - 1].contains(&0) {
            return Err(Error::InvalidConfig("input and hidden widths must be positive".into()));
        }
        if self.batch_norm.len() != n - 2 {
            return Err(Error::InvalidConfig(format!(
                "{} batch-norm flags for {} hidden layers",
                self.batch_norm.len(),
                n - 2
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }

    fn uses_batch_norm(&self) -> bool {
        self.batch_norm.iter().any(|&b| b)
    }
}

/// How fresh parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Init {
    /// Overrides the fan-in bound for the output layer, e.g. `3e-3` for actors.
    pub final_layer_bound: Option<f64>,
}


#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        Self {
            scale: vec![1.0; width],
            shift: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            momentum: BN_MOMENTUM,
        }
    }
}

/// Parameters of one network (online or target).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Dense>,
    norms: Vec<Option<BatchNorm>>,
}

/// Gradients in the same tensor order as [`Mlp::trainable`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn global_norm(&self) -> f64 {
        self.0.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        self.0.iter_mut().flatten().for_each(|g| *g *= k);
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&g| g == 0.0)
    }
}

struct BnCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
    mode: Mode,
}

struct LayerCache {
    input: Matrix,
    bn: Option<BnCache>,
    /// Post-activation output of the layer.
    output: Matrix,
}

/// Activations recorded by [`Mlp::forward_tape`] for a later backward pass.
pub struct Tape {
    layers: Vec<LayerCache>,
}

impl Tape {
    pub fn output(&self) -> &Matrix {
        &self.layers.last().expect("non-empty tape").output
    }

    /// Post-activation output of layer `l`, if the network has that many layers.
    pub fn layer_output(&self, l: usize) -> Option<&Matrix> {
        self.layers.get(l).map(|c| &c.output)
    }
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, init: Init, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let n_layers = spec.layer_sizes.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
            let bound = match init.final_layer_bound {
                Some(b) if l == n_layers - 1 => b,
                _ => 1.0 / (fan_in as f64).sqrt(),
            };
            let mut draw = |n: usize| -> Vec<f64> {
                (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
            };
            let weights = draw(fan_in * fan_out);
            let bias = draw(fan_out);
            layers.push(Dense { inputs: fan_in, outputs: fan_out, weights, bias });
        }
        let norms = spec
            .batch_norm
            .iter()
            .enumerate()
            .map(|(l, &on)| on.then(|| BatchNorm::new(spec.layer_sizes[l + 1])))
            .collect();
        Ok(Self { spec, layers, norms })
    }

    /// All parameters zero; batch-norm tensors at their identity defaults.
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| Dense {
                inputs: w[0],
                outputs: w[1],
                weights: vec![0.0; w[0] * w[1]],
                bias: vec![0.0; w[1]],
            })
            .collect();
        let norms = spec
            .batch_norm
            .iter()
            .enumerate()
            .map(|(l, &on)| on.then(|| BatchNorm::new(spec.layer_sizes[l + 1])))
            .collect();
        Ok(Self { spec, layers, norms })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn norms(&self) -> &[Option<BatchNorm>] {
        &self.norms
    }

    pub fn norms_mut(&mut self) -> &mut [Option<BatchNorm>] {
        &mut self.norms
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    /// Trainable tensors: per layer weights, biases, then batch-norm scale and shift.
    pub fn trainable(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push(layer.weights.as_slice());
            out.push(layer.bias.as_slice());
            if let Some(Some(bn)) = self.norms.get(l) {
                out.push(bn.scale.as_slice());
                out.push(bn.shift.as_slice());
            }
        }
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        let mut norms = self.norms.iter_mut();
        for layer in self.layers.iter_mut() {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
            if let Some(Some(bn)) = norms.next() {
                out.push(bn.scale.as_mut_slice());
                out.push(bn.shift.as_mut_slice());
            }
        }
        out
    }

    /// Every stored tensor in serialization order: per layer weights, biases,
    /// then scale, shift, running mean and running variance.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push(layer.weights.as_slice());
            out.push(layer.bias.as_slice());
            if let Some(Some(bn)) = self.norms.get(l) {
                out.push(bn.scale.as_slice());
                out.push(bn.shift.as_slice());
                out.push(bn.running_mean.as_slice());
                out.push(bn.running_var.as_slice());
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        let mut norms = self.norms.iter_mut();
        for layer in self.layers.iter_mut() {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
            if let Some(Some(bn)) = norms.next() {
                out.push(bn.scale.as_mut_slice());
                out.push(bn.shift.as_mut_slice());
                out.push(bn.running_mean.as_mut_slice());
                out.push(bn.running_var.as_mut_slice());
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients(self.trainable().iter().map(|t| vec![0.0; t.len()]).collect())
    }

    fn check_input(&self, input: &Matrix, mode: Mode) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input width {} but network expects {}",
                input.cols(),
                self.input_dim()
            )));
        }
        if input.rows() == 0 {
            return Err(Error::InvalidBatch("empty batch".into()));
        }
        if mode == Mode::Train && self.spec.uses_batch_norm() && input.rows() < 2 {
            return Err(Error::InvalidBatch(
                "train-mode batch normalization needs at least 2 rows".into(),
            ));
        }
        Ok(())
    }

    /// Eval-mode forward pass; a pure function of parameters and input.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input, Mode::Eval)?;
        let mut x = input.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = affine(&x, &layer.weights, &layer.bias, layer.outputs);
            if l < last {
                if let Some(bn) = &self.norms[l] {
                    for r in 0..z.rows() {
                        for (j, v) in z.row_mut(r).iter_mut().enumerate() {
                            let inv = 1.0 / (bn.running_var[j] + BN_EPSILON).sqrt();
                            *v = bn.scale[j] * (*v - bn.running_mean[j]) * inv + bn.shift[j];
                        }
                    }
                }
                relu_in_place(&mut z);
            } else {
                self.apply_output(&mut z);
            }
            x = z;
        }
        Ok(x)
    }

    /// Single-sample eval-mode convenience.
    pub fn predict_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict(&Matrix::row_vector(input))?.into_vec())
    }

    /// Forward pass. Train mode normalizes with batch statistics and updates
    /// the running estimates.
    pub fn forward(&mut self, input: &Matrix, mode: Mode) -> Result<Matrix> {
        match mode {
            Mode::Eval => self.predict(input),
            Mode::Train => Ok(self.forward_tape(input, mode)?.output().clone()),
        }
    }

    /// Forward pass that records what [`Mlp::backward`] needs. Train mode
    /// also folds the batch statistics into the running estimates.
    pub fn forward_tape(&mut self, input: &Matrix, mode: Mode) -> Result<Tape> {
        let (tape, stats) = self.record(input, mode)?;
        for (bn, batch) in self.norms.iter_mut().zip(stats) {
            if let (Some(bn), Some((mean, var))) = (bn.as_mut(), batch) {
                for j in 0..mean.len() {
                    bn.running_mean[j] = bn.momentum * bn.running_mean[j] + (1.0 - bn.momentum) * mean[j];
                    bn.running_var[j] = bn.momentum * bn.running_var[j] + (1.0 - bn.momentum) * var[j];
                }
            }
        }
        Ok(tape)
    }

    /// Eval-mode tape without mutable access.
    pub fn eval_tape(&self, input: &Matrix) -> Result<Tape> {
        Ok(self.record(input, Mode::Eval)?.0)
    }

    #[allow(clippy::type_complexity)]
    fn record(&self, input: &Matrix, mode: Mode) -> Result<(Tape, Vec<Option<(Vec<f64>, Vec<f64>)>>)> {
        self.check_input(input, mode)?;
        let last = self.layers.len() - 1;
        let mut caches: Vec<LayerCache> = Vec::with_capacity(self.layers.len());
        let mut stats = vec![None; self.norms.len()];
        let mut x = input.clone();
        #[allow(clippy::needless_range_loop)]
        for l in 0..self.layers.len() {
            let layer = &self.layers[l];
            let mut z = affine(&x, &layer.weights, &layer.bias, layer.outputs);
            let mut bn_cache = None;
            if l < last {
                if let Some(bn) = self.norms[l].as_ref() {
                    let (cache, batch) = batch_norm_forward(bn, &mut z, mode);
                    bn_cache = Some(cache);
                    stats[l] = batch;
                }
                relu_in_place(&mut z);
            } else {
                self.apply_output(&mut z);
            }
            let output = z;
            caches.push(LayerCache { input: x, bn: bn_cache, output: output.clone() });
            x = output;
        }
        Ok((Tape { layers: caches }, stats))
    }

    /// Reverse-mode gradients of `Σ ⟨upstream, output⟩` over the batch with
    /// respect to every trainable tensor and the input.
    pub fn backward(&self, tape: &Tape, upstream: &Matrix) -> Result<(Gradients, Matrix)> {
        let out = tape.output();
        if upstream.rows() != out.rows() || upstream.cols() != out.cols() {
            return Err(Error::Shape(format!(
                "upstream gradient is {}x{}, output is {}x{}",
                upstream.rows(),
                upstream.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let mut grads = self.zero_gradients();
        let last = self.layers.len() - 1;
        let mut g = upstream.clone();

        // Tensor offsets per layer in `trainable()` order.
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut idx = 0;
        for l in 0..self.layers.len() {
            offsets.push(idx);
            idx += 2;
            if l < last && self.norms[l].is_some() {
                idx += 2;
            }
        }

        for l in (0..self.layers.len()).rev() {
            let cache = &tape.layers[l];
            let layer = &self.layers[l];
            if l == last {
                if self.spec.output_activation == OutputActivation::Tanh {
                    for (gv, y) in g.as_mut_slice().iter_mut().zip(cache.output.as_slice()) {
                        *gv *= 1.0 - y * y;
                    }
                }
            } else {
                for (gv, y) in g.as_mut_slice().iter_mut().zip(cache.output.as_slice()) {
                    if *y <= 0.0 {
                        *gv = 0.0;
                    }
                }
                if let (Some(bn), Some(bc)) = (&self.norms[l], &cache.bn) {
                    let base = offsets[l] + 2;
                    let (dscale, dshift) = {
                        let (a, b) = grads.0.split_at_mut(base + 1);
                        (&mut a[base], &mut b[0])
                    };
                    g = batch_norm_backward(bn, bc, &g, dscale, dshift);
                }
            }
            let o = offsets[l];
            accumulate_weight_grad(&g, &cache.input, &mut grads.0[o]);
            let db = &mut grads.0[o + 1];
            for r in 0..g.rows() {
                for (d, v) in db.iter_mut().zip(g.row(r)) {
                    *d += v;
                }
            }
            g = input_grad(&g, &layer.weights, layer.inputs);
        }
        Ok((grads, g))
    }

    /// Blends every tensor (running statistics included) toward `online`:
    /// `self ← τ·online + (1−τ)·self`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) -> Result<()> {
        if self.spec != online.spec {
            return Err(Error::Shape("soft update between differently shaped networks".into()));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Contract(format!("soft-update rate {tau} outside (0, 1]")));
        }
        let src = online.tensors();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            if tau == 1.0 {
                dst.copy_from_slice(src);
            } else {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = tau * s + (1.0 - tau) * *d;
                }
            }
        }
        Ok(())
    }

    /// Appends one output unit with the given incoming weights and bias.
    /// Existing parameters are untouched.
    pub fn push_output_unit(&mut self, weights: &[f64], bias: f64) -> Result<()> {
        let layer = self.layers.last_mut().expect("validated spec");
        if weights.len() != layer.inputs {
            return Err(Error::Shape(format!(
                "new output row has {} weights, layer has {} inputs",
                weights.len(),
                layer.inputs
            )));
        }
        layer.weights.extend_from_slice(weights);
        layer.bias.push(bias);
        layer.outputs += 1;
        *self.spec.layer_sizes.last_mut().expect("validated spec") += 1;
        Ok(())
    }

    fn apply_output(&self, z: &mut Matrix) {
        if self.spec.output_activation == OutputActivation::Tanh {
            z.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh());
        }
    }
}

fn relu_in_place(z: &mut Matrix) {
    z.as_mut_slice().iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0
        }
    });
}

/// Normalizes `z` in place. In train mode also returns the batch mean and
/// (biased) variance for the running estimates.
#[allow(clippy::type_complexity)]
fn batch_norm_forward(bn: &BatchNorm, z: &mut Matrix, mode: Mode) -> (BnCache, Option<(Vec<f64>, Vec<f64>)>) {
    let (b, w) = (z.rows(), z.cols());
    let (mean, var) = match mode {
        Mode::Train => {
            let mut mean = vec![0.0; w];
            for r in 0..b {
                for (m, v) in mean.iter_mut().zip(z.row(r)) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= b as f64);
            let mut var = vec![0.0; w];
            for r in 0..b {
                for ((s, v), m) in var.iter_mut().zip(z.row(r)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= b as f64);
            (mean, var)
        }
        Mode::Eval => (bn.running_mean.clone(), bn.running_var.clone()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
    let mut normalized = Matrix::zeros(b, w);
    for r in 0..b {
        let zr = z.row_mut(r);
        let nr = normalized.row_mut(r);
        for j in 0..w {
            let xhat = (zr[j] - mean[j]) * inv_std[j];
            nr[j] = xhat;
            zr[j] = bn.scale[j] * xhat + bn.shift[j];
        }
    }
    let batch = (mode == Mode::Train).then_some((mean, var));
    (BnCache { normalized, inv_std, mode }, batch)
}

fn batch_norm_backward(
    bn: &BatchNorm,
    cache: &BnCache,
    g: &Matrix,
    dscale: &mut [f64],
    dshift: &mut [f64],
) -> Matrix {
    let (b, w) = (g.rows(), g.cols());
    let xhat = &cache.normalized;
    for r in 0..b {
        for j in 0..w {
            dscale[j] += g.get(r, j) * xhat.get(r, j);
            dshift[j] += g.get(r, j);
        }
    }
    let mut dz = Matrix::zeros(b, w);
    match cache.mode {
        Mode::Eval => {
            for r in 0..b {
                for j in 0..w {
                    dz.set(r, j, g.get(r, j) * bn.scale[j] * cache.inv_std[j]);
                }
            }
        }
        Mode::Train => {
            let n = b as f64;
            for j in 0..w {
                let mut sum = 0.0;
                let mut sum_x = 0.0;
                for r in 0..b {
                    let dx = g.get(r, j) * bn.scale[j];
                    sum += dx;
                    sum_x += dx * xhat.get(r, j);
                }
                for r in 0..b {
                    let dx = g.get(r, j) * bn.scale[j];
                    let v = cache.inv_std[j] / n * (n * dx - sum - xhat.get(r, j) * sum_x);
                    dz.set(r, j, v);
                }
            }
        }
    }
    dz
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear_unit(w: f64, b: f64) -> Mlp {
        // 1 -> 1 (hidden, identity via relu on positive inputs) -> 1
        let spec = MlpSpec::new(1, &[1], 1, OutputActivation::Linear, false);
        let mut net = Mlp::zeros(spec).unwrap();
        net.layers[0].weights[0] = 1.0;
        net.layers[1].weights[0] = w;
        net.layers[1].bias[0] = b;
        net
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = MlpSpec::new(3, &[5, 4], 2, OutputActivation::Linear, false);
        let net = Mlp::zeros(spec).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0], vec![0.3, 0.2, 0.1]]).unwrap();
        assert!(net.predict(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn affine_evaluation() {
        let net = linear_unit(2.0, 1.0);
        assert_eq!(net.predict_one(&[3.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn tanh_saturates() {
        let spec = MlpSpec::new(1, &[1], 1, OutputActivation::Tanh, false);
        let mut net = Mlp::zeros(spec).unwrap();
        net.layers[1].bias[0] = 20.0;
        let y = net.predict_one(&[0.0]).unwrap()[0];
        assert!((y - 1.0).abs() < 1e-6 && y <= 1.0);
    }

    #[test]
    fn batch_norm_on_identical_rows_yields_shift() {
        let spec = MlpSpec::new(2, &[3], 3, OutputActivation::Linear, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Mlp::new(spec, Init::default(), &mut rng).unwrap();
        let shift = [0.25, -0.5, 1.5];
        net.norms[0].as_mut().unwrap().shift.copy_from_slice(&shift);
        let x = Matrix::from_rows(&vec![vec![0.4, -1.2]; 4]).unwrap();
        let tape = net.forward_tape(&x, Mode::Train).unwrap();
        let bn = tape.layers[0].bn.as_ref().unwrap();
        assert!(bn.normalized.as_slice().iter().all(|&v| v == 0.0));
        for r in 0..4 {
            let hidden = tape.layers[0].output.row(r);
            for j in 0..3 {
                assert_eq!(hidden[j], shift[j].max(0.0));
            }
        }
    }

    #[test]
    fn train_mode_batch_norm_rejects_single_row() {
        let spec = MlpSpec::new(2, &[3], 1, OutputActivation::Linear, true);
        let mut net = Mlp::zeros(spec).unwrap();
        let err = net.forward(&Matrix::row_vector(&[1.0, 2.0]), Mode::Train).unwrap_err();
        assert!(matches!(err, Error::InvalidBatch(_)));
        assert!(net.forward(&Matrix::row_vector(&[1.0, 2.0]), Mode::Eval).is_ok());
    }

    #[test]
    fn wrong_input_width_is_a_shape_error() {
        let net = linear_unit(1.0, 0.0);
        assert!(matches!(net.predict_one(&[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn single_affine_weight_gradient() {
        // y = w·h + b with h = relu(x) = x for x = 3 → ∂y/∂w = 3.
        let mut net = linear_unit(0.5, 0.0);
        let tape = net.forward_tape(&Matrix::row_vector(&[3.0]), Mode::Train).unwrap();
        let (grads, dx) = net.backward(&tape, &Matrix::row_vector(&[1.0])).unwrap();
        assert_eq!(grads.0[2], vec![3.0]);
        assert_eq!(grads.0[3], vec![1.0]);
        assert_eq!(dx.as_slice(), &[0.5]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let spec = MlpSpec::new(4, &[8, 8], 2, OutputActivation::Tanh, true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(spec, Init::default(), &mut rng).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, 0.2, 0.3, 0.4], vec![-0.3, 0.1, 0.9, 0.0]]).unwrap();
        let tape = net.forward_tape(&x, Mode::Train).unwrap();
        let (grads, dx) = net.backward(&tape, &Matrix::zeros(2, 2)).unwrap();
        assert!(grads.is_zero());
        assert!(dx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn soft_update_with_unit_rate_copies() {
        let spec = MlpSpec::new(3, &[4], 2, OutputActivation::Linear, true);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let online = Mlp::new(spec.clone(), Init::default(), &mut rng).unwrap();
        let mut target = Mlp::new(spec, Init::default(), &mut rng).unwrap();
        target.soft_update_from(&online, 1.0).unwrap();
        assert_eq!(target, online);
    }

    #[test]
    fn soft_update_direct_value() {
        let mut target = linear_unit(0.0, 0.0);
        let online = linear_unit(1.0, 0.0);
        target.soft_update_from(&online, 0.01).unwrap();
        assert_eq!(target.layers[1].weights[0], 0.01);
    }

    #[test]
    fn growing_output_keeps_existing_units() {
        let spec = MlpSpec::new(3, &[4], 0, OutputActivation::Linear, false);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::new(spec, Init::default(), &mut rng).unwrap();
        assert_eq!(net.output_dim(), 0);
        net.push_output_unit(&[0.1, 0.2, 0.3, 0.4], 0.0).unwrap();
        let before = net.predict_one(&[1.0, 2.0, 3.0]).unwrap();
        net.push_output_unit(&[0.0; 4], 1.0).unwrap();
        let after = net.predict_one(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(after.len(), 2);
        assert_eq!(after[0], before[0]);
        assert_eq!(after[1], 1.0);
    }
}
