//! Fully connected network with hand-written reverse pass.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::params::{InrParams, ParamLayout};
use crate::error::{param_err, size_err, Result};
use crate::rng::SeededRng;
use crate::scalar::{axpy, dot, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Activation {
    #[default]
    Relu,
    Gelu,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Gelu => {
                let v = x.as_f64();
                T::of(0.5 * v * (1.0 + libm::erf(v * core::f64::consts::FRAC_1_SQRT_2)))
            }
        }
    }

    #[inline]
    pub fn derivative<T: Real>(self, x: T) -> T {
        match self {
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Gelu => {
                let v = x.as_f64();
                let cdf = 0.5 * (1.0 + libm::erf(v * core::f64::consts::FRAC_1_SQRT_2));
                let pdf = libm::exp(-0.5 * v * v) / libm::sqrt(2.0 * core::f64::consts::PI);
                T::of(cdf + v * pdf)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
    pub output_dim: usize,
}

impl MlpConfig {
    pub fn new(output_dim: usize) -> Self {
        Self { hidden_layers: 2, hidden_width: 64, activation: Activation::Relu, output_dim }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_dim == 0 || (self.hidden_layers > 0 && self.hidden_width == 0) {
            return Err(param_err!("MLP widths must be at least 1: {self:?}"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Layer {
    w: usize,
    b: usize,
    inputs: usize,
    outputs: usize,
}

#[derive(Clone, Debug)]
pub struct Mlp {
    cfg: MlpConfig,
    input_dim: usize,
    layers: Vec<Layer>,
}

/// Reusable buffers for one forward/backward evaluation.
#[derive(Clone, Debug, Default)]
pub struct MlpScratch<T> {
    a: Vec<T>,
    b: Vec<T>,
    c: Vec<T>,
}

impl Mlp {
    /// Register weight and bias blocks `{prefix}.w{i}`, `{prefix}.b{i}`.
    pub fn new(cfg: MlpConfig, input_dim: usize, layout: &mut ParamLayout, prefix: &str) -> Result<Self> {
        cfg.validate()?;
        if input_dim == 0 {
            return Err(param_err!("MLP input dimension must be at least 1"));
        }
        let mut layers = Vec::with_capacity(cfg.hidden_layers + 1);
        let mut inputs = input_dim;
        for i in 0..=cfg.hidden_layers {
            let outputs = if i == cfg.hidden_layers { cfg.output_dim } else { cfg.hidden_width };
            let w = layout.push(format!("{prefix}.w{i}"), inputs * outputs).start;
            let b = layout.push(format!("{prefix}.b{i}"), outputs).start;
            layers.push(Layer { w, b, inputs, outputs });
            inputs = outputs;
        }
        Ok(Self { cfg, input_dim, layers })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.cfg
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.cfg.output_dim
    }

    /// Values saved per evaluation: the pre-activations of every hidden layer.
    pub fn tape_len(&self) -> usize {
        self.cfg.hidden_layers * self.cfg.hidden_width
    }

    fn widest(&self) -> usize {
        self.layers.iter().map(|l| l.inputs.max(l.outputs)).max().unwrap_or(0)
    }

    /// Uniform `±1/sqrt(fan_in)` weights and zero biases.
    pub fn init<T: Real>(&self, params: &mut InrParams<T>, rng: &mut SeededRng) {
        for l in &self.layers {
            let bound = 1.0 / libm::sqrt(l.inputs as f64);
            for v in &mut params.values[l.w..l.w + l.inputs * l.outputs] {
                *v = T::of(rng.uniform(-bound, bound));
            }
            params.values[l.b..l.b + l.outputs].fill(T::zero());
        }
    }

    pub(crate) fn zero_last_layer<T: Real>(&self, params: &mut InrParams<T>) {
        let l = self.layers[self.layers.len() - 1];
        params.values[l.w..l.w + l.inputs * l.outputs].fill(T::zero());
        params.values[l.b..l.b + l.outputs].fill(T::zero());
    }

    pub(crate) fn set_last_bias<T: Real>(&self, params: &mut InrParams<T>, value: T) {
        let l = self.layers[self.layers.len() - 1];
        params.values[l.b..l.b + l.outputs].fill(value);
    }

    /// Evaluate at `x`, writing hidden pre-activations into `tape`.
    pub fn forward<T: Real>(&self, params: &[T], x: &[T], tape: &mut [T], out: &mut [T], s: &mut MlpScratch<T>) {
        let width = self.widest();
        s.a.resize(width, T::zero());
        s.a[..x.len()].copy_from_slice(x);
        let hw = self.cfg.hidden_width;
        for (i, l) in self.layers.iter().enumerate() {
            let last = i + 1 == self.layers.len();
            let w = &params[l.w..l.w + l.inputs * l.outputs];
            let b = &params[l.b..l.b + l.outputs];
            for o in 0..l.outputs {
                let z = b[o] + dot(&w[o * l.inputs..(o + 1) * l.inputs], &s.a[..l.inputs]);
                if last {
                    out[o] = z;
                } else {
                    tape[i * hw + o] = z;
                }
            }
            if !last {
                for o in 0..l.outputs {
                    s.a[o] = self.cfg.activation.apply(tape[i * hw + o]);
                }
            }
        }
    }

    /// Accumulate parameter gradients for one evaluation; optionally return `dL/dx`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<T: Real>(
        &self,
        params: &[T],
        x: &[T],
        tape: &[T],
        grad_out: &[T],
        grad: &mut [T],
        mut grad_x: Option<&mut [T]>,
        s: &mut MlpScratch<T>,
    ) {
        let width = self.widest();
        let hw = self.cfg.hidden_width;
        let act = self.cfg.activation;
        let MlpScratch { a: cur, b: below, c: input } = s;
        cur.resize(width, T::zero());
        below.resize(width, T::zero());
        input.resize(width, T::zero());
        cur[..grad_out.len()].copy_from_slice(grad_out);
        for i in (0..self.layers.len()).rev() {
            let l = self.layers[i];
            if i == 0 {
                input[..l.inputs].copy_from_slice(x);
            } else {
                for k in 0..l.inputs {
                    input[k] = act.apply(tape[(i - 1) * hw + k]);
                }
            }
            below[..l.inputs].fill(T::zero());
            for o in 0..l.outputs {
                let g = cur[o];
                if g == T::zero() {
                    continue;
                }
                grad[l.b + o] += g;
                let row = l.w + o * l.inputs;
                axpy(g, &input[..l.inputs], &mut grad[row..row + l.inputs]);
                axpy(g, &params[row..row + l.inputs], &mut below[..l.inputs]);
            }
            if i > 0 {
                for k in 0..l.inputs {
                    below[k] *= act.derivative(tape[(i - 1) * hw + k]);
                }
                core::mem::swap(cur, below);
            } else if let Some(gx) = grad_x.as_deref_mut() {
                gx.copy_from_slice(&below[..l.inputs]);
            }
        }
    }
}

/// Evaluate the network on a batch of feature vectors.
pub fn mlp_forward<T: Real>(mlp: &Mlp, features: &[Vec<T>], params: &InrParams<T>) -> Result<Vec<Vec<T>>> {
    params.check()?;
    let mut tape = vec![T::zero(); mlp.tape_len()];
    let mut s = MlpScratch::default();
    features
        .iter()
        .map(|f| {
            if f.len() != mlp.input_dim {
                return Err(size_err!("MLP expects {} inputs, got {}", mlp.input_dim, f.len()));
            }
            let mut out = vec![T::zero(); mlp.output_dim()];
            mlp.forward(&params.values, f, &mut tape, &mut out, &mut s);
            Ok(out)
        })
        .collect()
}
