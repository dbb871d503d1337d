//! Feed-forward networks with rectifier hidden layers and hand-written backprop.
//!
//! Two code paths share the same parameters: a single-sample path returning
//! [`RealVector`]s (used by the theory estimators) and a batched path over
//! row-major [`RealMatrix`] minibatches (used by the trainer).

use rand::Rng;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::linalg::{gemm, Op, RealMatrix, RealVector};

/// Hidden width used by every network in the reference configuration.
pub const HIDDEN_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Identity,
    /// `scale * tanh(z)`, mapping onto the symmetric box `[-scale, scale]`.
    Squash { scale: f64 },
}

impl OutputActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Identity => z,
            OutputActivation::Squash { scale } => scale * z.tanh(),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            OutputActivation::Identity => 1.0,
            OutputActivation::Squash { scale } => {
                let t = z.tanh();
                scale * (1.0 - t * t)
            }
        }
    }
}

/// Weights and biases of a multilayer perceptron.
///
/// `weights[i]` maps layer `i` to layer `i + 1` and has shape
/// `layer_sizes[i + 1] x layer_sizes[i]`. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    weights: Vec<RealMatrix>,
    biases: Vec<RealVector>,
    output: OutputActivation,
}

/// Per-layer values recorded by [`MlpParams::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
}

/// Per-layer values recorded by [`MlpParams::forward_batch`].
#[derive(Debug, Clone)]
pub struct BatchCache {
    /// Input to each layer; hidden entries are post-rectifier, so their sign
    /// pattern doubles as the rectifier derivative.
    inputs: Vec<RealMatrix>,
    /// Pre-activation of the output layer.
    last_pre: RealMatrix,
    output: RealMatrix,
}

impl BatchCache {
    pub fn output(&self) -> &RealMatrix {
        &self.output
    }
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

fn relu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

impl MlpParams {
    /// All-zero network.
    pub fn zeros(layer_sizes: &[usize], output: OutputActivation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes must list at least two positive widths, got {layer_sizes:?}"
            )));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|w| RealMatrix::zeros(w[1], w[0]))
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| RealVector::zeros(n)).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            output,
        })
    }

    /// Weights and biases drawn uniformly from `±1/sqrt(fan_in)`.
    pub fn random<R: Rng + ?Sized>(layer_sizes: &[usize], output: OutputActivation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, output)?;
        for (w, b) in net.weights.iter_mut().zip(net.biases.iter_mut()) {
            let bound = 1.0 / (w.cols() as f64).sqrt();
            for v in w.as_mut_slice() {
                *v = rng.random_range(-bound..bound);
            }
            for v in b.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    /// Two hidden layers of width 64, the configuration every trained network uses.
    pub fn two_hidden<R: Rng + ?Sized>(input: usize, output_dim: usize, output: OutputActivation, rng: &mut R) -> Result<Self> {
        Self::random(&[input, HIDDEN_WIDTH, HIDDEN_WIDTH, output_dim], output, rng)
    }

    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<RealMatrix>,
        biases: Vec<RealVector>,
        output: OutputActivation,
    ) -> Result<Self> {
        let template = Self::zeros(&layer_sizes, output)?;
        ensure_dim("layer count", template.weights.len(), weights.len())?;
        ensure_dim("bias count", template.biases.len(), biases.len())?;
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.shape() != (layer_sizes[i + 1], layer_sizes[i]) {
                return Err(Error::InvalidConfig(format!(
                    "layer {i} weight shape {:?}, expected {:?}",
                    w.shape(),
                    (layer_sizes[i + 1], layer_sizes[i])
                )));
            }
            ensure_dim("bias length", layer_sizes[i + 1], b.dim())?;
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            output,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn weights(&self) -> &[RealMatrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [RealMatrix] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[RealVector] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [RealVector] {
        &mut self.biases
    }

    pub fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter blocks in a fixed order: `w0, b0, w1, b1, ...`.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), &b[..]])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), &mut b[..]])
            .collect()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        ensure_dim("flat parameters", self.num_params(), flat.len())?;
        let mut offset = 0;
        for block in self.param_slices_mut() {
            let n = block.len();
            block.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// A zero network with the same shape, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.layer_sizes, self.output).expect("shape already validated")
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layer_sizes == other.layer_sizes
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: f64, other: &MlpParams) -> Result<()> {
        self.check_shape(other)?;
        for (dst, src) in self.param_slices_mut().into_iter().zip(other.param_slices()) {
            crate::linalg::axpy(dst, c, src);
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for block in self.param_slices_mut() {
            block.iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.param_slices()
            .iter()
            .map(|s| crate::linalg::dot(s, s))
            .sum()
    }

    pub(crate) fn check_shape(&self, other: &MlpParams) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "network shapes differ: {:?} vs {:?}",
                self.layer_sizes, other.layer_sizes
            )))
        }
    }

    fn layers(&self) -> usize {
        self.weights.len()
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<(RealVector, ForwardCache)> {
        ensure_dim("mlp input", self.input_dim(), x.len())?;
        let last = self.layers() - 1;
        let mut inputs = Vec::with_capacity(self.layers());
        let mut pre = Vec::with_capacity(self.layers());
        let mut h = x.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.matvec(&h)?.into_inner();
            z.iter_mut().zip(b.iter()).for_each(|(zi, bi)| *zi += bi);
            let next: Vec<f64> = if l == last {
                z.iter().map(|&v| self.output.apply(v)).collect()
            } else {
                z.iter().map(|&v| relu(v)).collect()
            };
            inputs.push(h);
            pre.push(z);
            h = next;
        }
        Ok((RealVector::new(h), ForwardCache { inputs, pre }))
    }

    /// Forward pass without keeping the cache.
    pub fn predict(&self, x: &[f64]) -> Result<RealVector> {
        Ok(self.forward(x)?.0)
    }

    /// Backpropagates `upstream` to the deltas of every layer (pre-activation gradients).
    fn deltas(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Vec<Vec<f64>>> {
        ensure_dim("mlp upstream", self.output_dim(), upstream.len())?;
        let last = self.layers() - 1;
        let mut deltas = vec![Vec::new(); self.layers()];
        let mut delta: Vec<f64> = upstream
            .iter()
            .zip(&cache.pre[last])
            .map(|(u, &z)| u * self.output.derivative(z))
            .collect();
        for l in (0..self.layers()).rev() {
            let prev = if l > 0 {
                let mut back = self.weights[l].matvec_transposed(&delta)?.into_inner();
                back.iter_mut()
                    .zip(&cache.pre[l - 1])
                    .for_each(|(g, &z)| *g *= relu_grad(z));
                Some(back)
            } else {
                None
            };
            deltas[l] = std::mem::replace(&mut delta, prev.unwrap_or_default());
        }
        Ok(deltas)
    }

    /// Gradient of `upstream · y` with respect to every parameter.
    pub fn grad_params(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<MlpParams> {
        let deltas = self.deltas(cache, upstream)?;
        let mut grad = self.zeros_like();
        for l in 0..self.layers() {
            let gw = &mut grad.weights[l];
            for (i, d) in deltas[l].iter().enumerate() {
                if *d != 0.0 {
                    crate::linalg::axpy(gw.row_mut(i), *d, &cache.inputs[l]);
                }
            }
            grad.biases[l].copy_from_slice(&deltas[l]);
        }
        Ok(grad)
    }

    /// Gradient of `upstream · y` with respect to the input.
    pub fn grad_input(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<RealVector> {
        let deltas = self.deltas(cache, upstream)?;
        self.weights[0].matvec_transposed(&deltas[0])
    }

    /// Jacobian `∂y/∂x` (output_dim x input_dim) at `x`.
    pub fn input_jacobian(&self, x: &[f64]) -> Result<RealMatrix> {
        let (_, cache) = self.forward(x)?;
        let mut jac = RealMatrix::zeros(self.output_dim(), self.input_dim());
        let mut e = vec![0.0; self.output_dim()];
        for k in 0..self.output_dim() {
            e[k] = 1.0;
            let row = self.grad_input(&cache, &e)?;
            jac.row_mut(k).copy_from_slice(&row);
            e[k] = 0.0;
        }
        Ok(jac)
    }

    /// Batched forward pass; each row of `x` is one sample.
    pub fn forward_batch(&self, x: &RealMatrix) -> Result<BatchCache> {
        ensure_dim("mlp batch input", self.input_dim(), x.cols())?;
        let n = x.rows();
        let last = self.layers() - 1;
        let mut inputs = Vec::with_capacity(self.layers());
        let mut h = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = RealMatrix::zeros(n, w.rows());
            for i in 0..n {
                z.row_mut(i).copy_from_slice(b);
            }
            gemm(1.0, &h, Op::N, w, Op::T, 1.0, &mut z)?;
            inputs.push(h);
            if l == last {
                let mut out = z.clone();
                out.as_mut_slice().iter_mut().for_each(|v| *v = self.output.apply(*v));
                return Ok(BatchCache {
                    inputs,
                    last_pre: z,
                    output: out,
                });
            }
            z.as_mut_slice().iter_mut().for_each(|v| *v = relu(*v));
            h = z;
        }
        unreachable!("networks have at least one layer")
    }

    /// Batched backward pass for `Σ_rows upstream_row · y_row`.
    ///
    /// Returns the parameter gradient summed over the batch when
    /// `want_params` is set, and the per-row input gradient when
    /// `want_input` is set.
    pub fn backward_batch(
        &self,
        cache: &BatchCache,
        upstream: &RealMatrix,
        want_params: bool,
        want_input: bool,
    ) -> Result<(Option<MlpParams>, Option<RealMatrix>)> {
        ensure_dim("batch upstream rows", cache.output.rows(), upstream.rows())?;
        ensure_dim("batch upstream cols", self.output_dim(), upstream.cols())?;
        let n = upstream.rows();
        let mut delta = upstream.clone();
        if let OutputActivation::Squash { .. } = self.output {
            for (d, &z) in delta.as_mut_slice().iter_mut().zip(cache.last_pre.as_slice()) {
                *d *= self.output.derivative(z);
            }
        }
        let mut grad = want_params.then(|| self.zeros_like());
        let mut input_grad = None;
        for l in (0..self.layers()).rev() {
            if let Some(g) = grad.as_mut() {
                gemm(1.0, &delta, Op::T, &cache.inputs[l], Op::N, 0.0, &mut g.weights[l])?;
                let gb = &mut g.biases[l];
                for i in 0..n {
                    crate::linalg::axpy(gb, 1.0, delta.row(i));
                }
            }
            if l == 0 && !want_input {
                break;
            }
            let mut back = RealMatrix::zeros(n, self.layer_sizes[l]);
            gemm(1.0, &delta, Op::N, &self.weights[l], Op::N, 0.0, &mut back)?;
            if l == 0 {
                input_grad = Some(back);
            } else {
                for (g, &h) in back.as_mut_slice().iter_mut().zip(cache.inputs[l].as_slice()) {
                    if h <= 0.0 {
                        *g = 0.0;
                    }
                }
                delta = back;
            }
        }
        if let Some(g) = grad.as_ref() {
            for s in g.param_slices() {
                ensure_finite("network gradient", s)?;
            }
        }
        Ok((grad, input_grad))
    }

    /// Convenience: batched forward returning only outputs.
    pub fn predict_batch(&self, x: &RealMatrix) -> Result<RealMatrix> {
        Ok(self.forward_batch(x)?.output)
    }
}

/// Row-wise concatenation `[a | b]`, used to feed `(s, a)` pairs to critics.
pub fn hconcat(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    ensure_dim("hconcat rows", a.rows(), b.rows())?;
    let cols = a.cols() + b.cols();
    let mut data = Vec::with_capacity(a.rows() * cols);
    for i in 0..a.rows() {
        data.extend_from_slice(a.row(i));
        data.extend_from_slice(b.row(i));
    }
    RealMatrix::from_vec(a.rows(), cols, data)
}
