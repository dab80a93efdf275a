//! A small fully connected network with manual backpropagation.
//!
//! Inputs can be dense rows or binary rows given as their one-positions;
//! the binary path skips the zero entries in the first layer, which is
//! where almost all of the work would otherwise go for the sparse feature
//! maps.

use std::fs;
use std::path::Path;

use gohr_core::SplitMix64;
use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("input has dimension {got}, network expects {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("softmax over an empty set of actions")]
    EmptyMask,
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Linear,
}

impl Activation {
    pub const LEAKY_SLOPE: f64 = 0.01;

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    Self::LEAKY_SLOPE * z
                }
            }
            Activation::Linear => z,
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    Self::LEAKY_SLOPE
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenLayer {
    pub width: usize,
    pub activation: Activation,
}

/// Shape of a network. The output layer is always linear.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<HiddenLayer>,
    pub output_dim: usize,
    pub init_seed: u64,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: &[(usize, Activation)], output_dim: usize, init_seed: u64) -> Self {
        Self {
            input_dim,
            hidden: hidden.iter().map(|&(width, activation)| HiddenLayer { width, activation }).collect(),
            output_dim,
            init_seed,
        }
    }

    fn layer_shapes(&self) -> Vec<(usize, usize, Activation)> {
        let mut dims = vec![self.input_dim];
        dims.extend(self.hidden.iter().map(|h| h.width));
        dims.push(self.output_dim);
        let mut acts: Vec<Activation> = self.hidden.iter().map(|h| h.activation).collect();
        acts.push(Activation::Linear);
        dims.windows(2).zip(acts).map(|(w, a)| (w[0], w[1], a)).collect()
    }
}

/// One affine layer; `weights` is `inputs x outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// A batch of network inputs.
#[derive(Clone, Copy, Debug)]
pub enum Input<'a> {
    Dense(ArrayView2<'a, f64>),
    /// Binary rows listed by the positions of their ones.
    Binary(&'a [&'a [u32]]),
}

impl Input<'_> {
    pub fn rows(&self) -> usize {
        match self {
            Input::Dense(x) => x.nrows(),
            Input::Binary(rows) => rows.len(),
        }
    }
}

/// Pre-activations and activations of every layer for one batch.
#[derive(Clone, Debug)]
pub struct Forward {
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl Forward {
    /// `batch x outputs`.
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().expect("at least one layer")
    }
}

/// Parameter gradients, laid out like the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    /// Flattened in the same order as [`Mlp::params`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b.iter()).copied()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Dense>,
}

impl Mlp {
    /// Weights uniform in ±sqrt(6 / (fan_in + fan_out)), zero biases.
    pub fn new(spec: MlpSpec) -> Self {
        let mut rng = SplitMix64::new(spec.init_seed);
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(i, o, activation)| {
                let limit = (6.0 / (i + o) as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((i, o), || (2.0 * rng.next_f64() - 1.0) * limit);
                Dense { weights, bias: Array1::zeros(o), activation }
            })
            .collect();
        Self { spec, layers }
    }

    /// All weights and biases zero.
    pub fn zeros(spec: MlpSpec) -> Self {
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(i, o, activation)| Dense { weights: Array2::zeros((i, o)), bias: Array1::zeros(o), activation })
            .collect();
        Self { spec, layers }
    }

    pub fn from_layers(spec: MlpSpec, layers: Vec<Dense>) -> Result<Self, NnError> {
        let shapes = spec.layer_shapes();
        let ok = shapes.len() == layers.len()
            && shapes.iter().zip(&layers).all(|(&(i, o, a), l)| {
                l.weights.dim() == (i, o) && l.bias.len() == o && l.activation == a
            });
        if !ok {
            return Err(NnError::Checkpoint("layer shapes do not match the network spec".into()));
        }
        Ok(Self { spec, layers })
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

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Every parameter, layer by layer, weights (row-major) before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied()).collect()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    fn first_layer(&self, input: Input) -> Result<Array2<f64>, NnError> {
        let l = &self.layers[0];
        match input {
            Input::Dense(x) => {
                if x.ncols() != self.spec.input_dim {
                    return Err(NnError::DimMismatch { expected: self.spec.input_dim, got: x.ncols() });
                }
                Ok(x.dot(&l.weights) + &l.bias)
            }
            Input::Binary(rows) => {
                let mut z = Array2::zeros((rows.len(), l.bias.len()));
                for (mut zr, ones) in z.axis_iter_mut(Axis(0)).zip(rows) {
                    zr.assign(&l.bias);
                    for &i in *ones {
                        let i = i as usize;
                        if i >= self.spec.input_dim {
                            return Err(NnError::DimMismatch { expected: self.spec.input_dim, got: i + 1 });
                        }
                        zr += &l.weights.row(i);
                    }
                }
                Ok(z)
            }
        }
    }

    pub fn forward(&self, input: Input) -> Result<Forward, NnError> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut z = self.first_layer(input)?;
        for (k, l) in self.layers.iter().enumerate() {
            if k > 0 {
                let prev: &Array2<f64> = &post[k - 1];
                z = prev.dot(&l.weights) + &l.bias;
            }
            let act = l.activation;
            let a = if act == Activation::Linear { z.clone() } else { z.mapv(|v| act.apply(v)) };
            pre.push(z.clone());
            post.push(a);
        }
        Ok(Forward { pre, post })
    }

    /// Outputs for one binary input row.
    pub fn predict_binary(&self, ones: &[u32]) -> Result<Array1<f64>, NnError> {
        let rows = [ones];
        let f = self.forward(Input::Binary(&rows))?;
        Ok(f.output().row(0).to_owned())
    }

    /// Outputs for one dense input row.
    pub fn predict_dense(&self, x: &[f64]) -> Result<Array1<f64>, NnError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("one row");
        let f = self.forward(Input::Dense(view))?;
        Ok(f.output().row(0).to_owned())
    }

    /// Gradients of a loss whose derivative with respect to the outputs is
    /// `grad_out` (`batch x outputs`), summed over the batch.
    pub fn backward(&self, input: Input, fwd: &Forward, grad_out: ArrayView2<f64>) -> Gradients {
        let n = self.layers.len();
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(n);
        let mut delta = grad_out.to_owned();
        for k in (0..n).rev() {
            let l = &self.layers[k];
            if l.activation != Activation::Linear {
                let act = l.activation;
                Zip::from(&mut delta).and(&fwd.pre[k]).for_each(|d, &z| *d *= act.derivative(z));
            }
            let db = delta.sum_axis(Axis(0));
            let dw = if k > 0 {
                fwd.post[k - 1].t().dot(&delta)
            } else {
                match input {
                    Input::Dense(x) => x.t().dot(&delta),
                    Input::Binary(rows) => {
                        let mut dw = Array2::zeros(l.weights.dim());
                        for (d, ones) in delta.axis_iter(Axis(0)).zip(rows) {
                            for &i in *ones {
                                let mut r = dw.row_mut(i as usize);
                                r += &d;
                            }
                        }
                        dw
                    }
                }
            };
            if k > 0 {
                delta = delta.dot(&l.weights.t());
            }
            grads.push((dw, db));
        }
        grads.reverse();
        Gradients { layers: grads }
    }

    /// Copies all parameters from `other`, which must have the same shape.
    pub fn copy_from(&mut self, other: &Mlp) {
        assert_eq!(self.spec.layer_shapes(), other.spec.layer_shapes());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.assign(&b.weights);
            a.bias.assign(&b.bias);
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            spec: self.spec.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.weights.nrows(),
                    outputs: l.weights.ncols(),
                    activation: l.activation,
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self, NnError> {
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!("unsupported format {} v{}", c.format, c.version)));
        }
        let layers = c
            .layers
            .into_iter()
            .map(|r| {
                let weights = Array2::from_shape_vec((r.inputs, r.outputs), r.weights)
                    .map_err(|e| NnError::Checkpoint(e.to_string()))?;
                Ok(Dense { weights, bias: Array1::from(r.bias), activation: r.activation })
            })
            .collect::<Result<Vec<_>, NnError>>()?;
        Self::from_layers(c.spec, layers)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let json = serde_json::to_string(&self.to_checkpoint()).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = fs::read_to_string(path)?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(c)
    }
}

pub const CHECKPOINT_FORMAT: &str = "gohr-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON checkpoint: the spec plus each layer's weights in row-major
/// (input-major) order and its biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub spec: MlpSpec,
    pub layers: Vec<LayerRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// RMSprop: `v <- rho v + (1 - rho) g^2`, `w <- w - lr g / sqrt(v + eps)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    v: Vec<(Array2<f64>, Array1<f64>)>,
}

impl RmsProp {
    pub const RHO: f64 = 0.99;
    pub const EPS: f64 = 1e-8;

    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self::with_constants(net, lr, Self::RHO, Self::EPS)
    }

    pub fn with_constants(net: &Mlp, lr: f64, rho: f64, eps: f64) -> Self {
        let v = net.layers.iter().map(|l| (Array2::zeros(l.weights.dim()), Array1::zeros(l.bias.len()))).collect();
        Self { lr, rho, eps, v }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        let (lr, rho, eps) = (self.lr, self.rho, self.eps);
        let update = |w: &mut f64, v: &mut f64, &g: &f64| {
            *v = rho * *v + (1.0 - rho) * g * g;
            *w -= lr * g / (*v + eps).sqrt();
        };
        for ((layer, (vw, vb)), (gw, gb)) in net.layers.iter_mut().zip(&mut self.v).zip(&grads.layers) {
            Zip::from(&mut layer.weights).and(vw).and(gw).for_each(update);
            Zip::from(&mut layer.bias).and(vb).and(gb).for_each(update);
        }
    }

    /// Running squared-gradient averages, flattened like [`Mlp::params`].
    pub fn averages(&self) -> Vec<f64> {
        self.v.iter().flat_map(|(w, b)| w.iter().chain(b.iter()).copied()).collect()
    }
}

/// Huber loss with threshold 1 and its derivative with respect to
/// `prediction`.
pub fn huber(prediction: f64, target: f64) -> (f64, f64) {
    let e = prediction - target;
    if e.abs() <= 1.0 {
        (0.5 * e * e, e)
    } else {
        (e.abs() - 0.5, e.signum())
    }
}

/// Softmax restricted to `valid`; every other entry is exactly zero.
pub fn masked_softmax(logits: &[f64], valid: &[usize]) -> Result<Vec<f64>, NnError> {
    if valid.is_empty() {
        return Err(NnError::EmptyMask);
    }
    let max = valid.iter().map(|&i| logits[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut p = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for &i in valid {
        let e = (logits[i] - max).exp();
        p[i] = e;
        sum += e;
    }
    for &i in valid {
        p[i] /= sum;
    }
    Ok(p)
}
