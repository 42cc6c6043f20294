//! Dense feedforward networks: a composition of affine layers with an
//! elementwise hidden activation and an identity output. The default shape is
//! 2-64-64-32-1. Parameters have one canonical flat ordering used everywhere:
//! layer-major, each layer's weights row-major, then that layer's biases.

use crate::autodiff::{Scalar, Tape, Var};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation \"{other}\", expected relu or tanh"
            ))),
        }
    }

    #[inline]
    fn apply<S: Scalar>(self, v: S) -> S {
        match self {
            Activation::Relu => v.relu(),
            Activation::Tanh => v.tanh(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    /// Uniform on [-b, b) with b = sqrt(6 / (fan_in + fan_out)), biases zero.
    GlorotUniform,
}

/// Everything needed to build a network deterministically.
#[derive(Clone, Debug)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub seed: u64,
    pub init: InitScheme,
    pub hidden_activation: Activation,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, seed: u64) -> Self {
        NetworkSpec {
            input_dim,
            hidden_dims,
            seed,
            init: InitScheme::GlorotUniform,
            hidden_activation: Activation::Relu,
        }
    }

    pub fn with_activation(mut self, act: Activation) -> Self {
        self.hidden_activation = act;
        self
    }
}

impl Default for NetworkSpec {
    /// The headline architecture: two inputs, hidden layers 64-64-32, one output.
    fn default() -> Self {
        NetworkSpec::new(2, vec![64, 64, 32], 42)
    }
}

/// A built network. The output layer always has a single unit with identity
/// activation; displacement scaling is handled by the caller, not the net.
#[derive(Clone, Debug)]
pub struct DenseNetwork {
    layer_sizes: Vec<usize>,
    /// weights[l] is row-major (out x in) for the affine map from layer l.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    hidden_activation: Activation,
    seed: u64,
}

/// Reusable buffers for allocation-free forward passes in hot loops.
#[derive(Default)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Sign pattern of every hidden pre-activation, one bit per unit. Two forward
/// passes with equal patterns stayed on the same linear piece of a ReLU net,
/// which is what makes a finite-difference probe trustworthy near a kink.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ActivationPattern {
    bits: [u64; 4],
}

impl ActivationPattern {
    pub fn clear(&mut self) {
        self.bits = [0; 4];
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }
}

impl DenseNetwork {
    /// Deterministic Glorot-uniform build; the same spec and seed always
    /// produce bitwise-identical parameters.
    pub fn build(spec: &NetworkSpec) -> Result<Self> {
        if spec.input_dim == 0 {
            return Err(Error::InvalidArgument(
                "network input dimension must be at least 1".into(),
            ));
        }
        if spec.hidden_dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "hidden layer dimensions must be at least 1".into(),
            ));
        }
        let mut layer_sizes = Vec::with_capacity(spec.hidden_dims.len() + 2);
        layer_sizes.push(spec.input_dim);
        layer_sizes.extend_from_slice(&spec.hidden_dims);
        layer_sizes.push(1);

        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let bound = match spec.init {
                InitScheme::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(DenseNetwork {
            layer_sizes,
            weights,
            biases,
            hidden_activation: spec.hidden_activation,
            seed: spec.seed,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hidden_unit_count(&self) -> usize {
        self.layer_sizes[1..self.layer_sizes.len() - 1].iter().sum()
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Plain forward pass; validates the input length.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut scratch = Scratch::default();
        Ok(self.forward_scratch(x, &mut scratch))
    }

    /// Forward pass using caller-owned buffers; no validation, no allocation
    /// after warm-up. The finite-difference oracle lives on this path, which
    /// shares no code with the tape evaluation it is used to check.
    pub fn forward_scratch(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        debug_assert_eq!(x.len(), self.input_dim());
        scratch.a.clear();
        scratch.a.extend_from_slice(x);
        let last = self.layer_sizes.len() - 2;
        for l in 0..=last {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.weights[l];
            scratch.b.clear();
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let mut acc = self.biases[l][j];
                for (wk, xk) in row.iter().zip(scratch.a.iter()) {
                    acc += wk * xk;
                }
                if l < last {
                    acc = self.hidden_activation.apply(acc);
                }
                scratch.b.push(acc);
            }
            std::mem::swap(&mut scratch.a, &mut scratch.b);
        }
        scratch.a[0]
    }

    /// Forward pass that also records the hidden pre-activation sign pattern.
    /// Supports up to 256 hidden units.
    pub fn forward_pattern(
        &self,
        x: &[f64],
        scratch: &mut Scratch,
        pattern: &mut ActivationPattern,
    ) -> f64 {
        debug_assert!(self.hidden_unit_count() <= 256);
        pattern.clear();
        scratch.a.clear();
        scratch.a.extend_from_slice(x);
        let last = self.layer_sizes.len() - 2;
        let mut unit = 0usize;
        for l in 0..=last {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.weights[l];
            scratch.b.clear();
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let mut acc = self.biases[l][j];
                for (wk, xk) in row.iter().zip(scratch.a.iter()) {
                    acc += wk * xk;
                }
                if l < last {
                    if acc > 0.0 {
                        pattern.set(unit);
                    }
                    unit += 1;
                    acc = self.hidden_activation.apply(acc);
                }
                scratch.b.push(acc);
            }
            std::mem::swap(&mut scratch.a, &mut scratch.b);
        }
        scratch.a[0]
    }

    /// Forward pass in any scalar algebra, reading parameters from stored
    /// weights. Used for jet-valued field evaluation.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> S {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut cur: Vec<S> = x.to_vec();
        let last = self.layer_sizes.len() - 2;
        let mut next: Vec<S> = Vec::new();
        for l in 0..=last {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.weights[l];
            next.clear();
            for j in 0..n_out {
                let mut acc = S::from_f64(self.biases[l][j]);
                for (k, xk) in cur.iter().enumerate() {
                    acc = acc + S::from_f64(w[j * n_in + k]) * *xk;
                }
                if l < last {
                    acc = self.hidden_activation.apply(acc);
                }
                next.push(acc);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Forward pass on a tape, reading parameters from `params` (canonical
    /// order) rather than from stored weights, so the reverse sweep reaches
    /// every parameter leaf. Inputs are recorded as constant leaves.
    pub fn tape_forward<'t, S: Scalar>(
        &self,
        tape: &'t Tape<S>,
        params: &[Var<'t, S>],
        x: &[S],
    ) -> Var<'t, S> {
        debug_assert_eq!(params.len(), self.param_count());
        debug_assert_eq!(x.len(), self.input_dim());
        let mut cur: Vec<Var<'t, S>> = x.iter().map(|&v| tape.leaf(v)).collect();
        let mut next: Vec<Var<'t, S>> = Vec::new();
        let last = self.layer_sizes.len() - 2;
        let mut off = 0usize;
        for l in 0..=last {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w_off = off;
            let b_off = off + n_in * n_out;
            next.clear();
            for j in 0..n_out {
                let mut acc = params[b_off + j];
                for (k, xk) in cur.iter().enumerate() {
                    acc = params[w_off + j * n_in + k].mul_add(*xk, acc);
                }
                if l < last {
                    acc = match self.hidden_activation {
                        Activation::Relu => acc.relu(),
                        Activation::Tanh => acc.tanh(),
                    };
                }
                next.push(acc);
            }
            std::mem::swap(&mut cur, &mut next);
            off = b_off + n_out;
        }
        cur[0]
    }

    /// Flat parameters in canonical order.
    pub fn get_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.weights.len() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    /// Write back flat parameters; rejects a wrong length.
    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                what: "parameter vector",
                left: self.param_count(),
                right: flat.len(),
            });
        }
        let mut off = 0;
        for l in 0..self.weights.len() {
            let nw = self.weights[l].len();
            self.weights[l].copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = self.biases[l].len();
            self.biases[l].copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            layer_sizes: self.layer_sizes.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
            activation: self.hidden_activation.as_str().to_string(),
            seed: self.seed,
            format_version: CHECKPOINT_VERSION,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &self.to_checkpoint())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ck: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        ck.into_network()
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk network format. JSON with full-precision numbers; round-trips
/// bit-exactly for finite values.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: String,
    pub seed: u64,
    pub format_version: u32,
}

impl Checkpoint {
    pub fn into_network(self) -> Result<DenseNetwork> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported checkpoint format_version {}",
                self.format_version
            )));
        }
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::InvalidArgument(
                "checkpoint layer_sizes must list at least input and output, all positive".into(),
            ));
        }
        let n_layers = self.layer_sizes.len() - 1;
        if self.weights.len() != n_layers || self.biases.len() != n_layers {
            return Err(Error::InvalidArgument(
                "checkpoint weights/biases do not match layer_sizes".into(),
            ));
        }
        for l in 0..n_layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if self.weights[l].len() != n_in * n_out {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint weights[{l}] has {} entries, expected {}",
                    self.weights[l].len(),
                    n_in * n_out
                )));
            }
            if self.biases[l].len() != n_out {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint biases[{l}] has {} entries, expected {n_out}",
                    self.biases[l].len()
                )));
            }
        }
        Ok(DenseNetwork {
            hidden_activation: Activation::parse(&self.activation)?,
            layer_sizes: self.layer_sizes,
            weights: self.weights,
            biases: self.biases,
            seed: self.seed,
        })
    }
}
