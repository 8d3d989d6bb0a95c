//! Image head: hash grid + MLP evaluated at every pixel centre.

use alloc::vec;
use alloc::vec::Vec;

use super::hashgrid::{HashEncoder, HashGridConfig};
use super::mlp::{Mlp, MlpConfig, MlpScratch};
use super::params::{InrParams, ParamLayout};
use crate::error::{param_err, size_err, Error, Result};
use crate::grid::{Grid, RealImage};
use crate::rng::SeededRng;
use crate::scalar::Real;

pub const OUTPUT_MIN: f64 = 0.0;
pub const OUTPUT_MAX: f64 = 1.5;
pub const INITIAL_BIAS: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeartifactConfig {
    pub grid: HashGridConfig,
    pub mlp: MlpConfig,
}

impl Default for DeartifactConfig {
    fn default() -> Self {
        Self { grid: HashGridConfig::default(), mlp: MlpConfig::new(1) }
    }
}

/// Normalized coordinate `(x, y)` of pixel `(r, c)`; x follows columns.
#[inline]
pub fn pixel_coord(r: usize, c: usize, height: usize, width: usize) -> [f64; 2] {
    [(c as f64 + 0.5) / width as f64 * 2.0 - 1.0, (r as f64 + 0.5) / height as f64 * 2.0 - 1.0]
}

#[derive(Clone, Debug)]
pub struct DeartifactNet {
    encoder: HashEncoder,
    mlp: Mlp,
}

/// Saved per-pixel state of one forward pass.
#[derive(Clone, Debug)]
pub struct DeartifactTape<T> {
    height: usize,
    width: usize,
    features: Vec<T>,
    hidden: Vec<T>,
    raw: Vec<T>,
}

impl DeartifactNet {
    pub fn new(cfg: DeartifactConfig, layout: &mut ParamLayout, prefix: &str) -> Result<Self> {
        if cfg.mlp.output_dim != 1 {
            return Err(param_err!("image head has one output, config asks for {}", cfg.mlp.output_dim));
        }
        let encoder = HashEncoder::new(cfg.grid, 2, layout, &alloc::format!("{prefix}.grid"))?;
        let mlp = Mlp::new(cfg.mlp, encoder.output_dim(), layout, &alloc::format!("{prefix}.mlp"))?;
        Ok(Self { encoder, mlp })
    }

    pub fn encoder(&self) -> &HashEncoder {
        &self.encoder
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn init<T: Real>(&self, params: &mut InrParams<T>, rng: &mut SeededRng) {
        self.encoder.init(params, rng);
        self.mlp.init(params, rng);
        self.mlp.set_last_bias(params, T::of(INITIAL_BIAS));
    }

    /// Unclamped network value at one coordinate.
    pub fn eval_point<T: Real>(&self, params: &[T], point: [f64; 2]) -> T {
        let mut feat = vec![T::zero(); self.encoder.output_dim()];
        let mut hidden = vec![T::zero(); self.mlp.tape_len()];
        let mut out = [T::zero()];
        self.encoder.encode(params, &point, &mut feat);
        self.mlp.forward(params, &feat, &mut hidden, &mut out, &mut MlpScratch::default());
        out[0]
    }

    pub fn forward<T: Real>(&self, params: &[T], height: usize, width: usize) -> (RealImage<T>, DeartifactTape<T>) {
        let n = height * width;
        let fd = self.encoder.output_dim();
        let hl = self.mlp.tape_len();
        let mut tape = DeartifactTape {
            height,
            width,
            features: vec![T::zero(); n * fd],
            hidden: vec![T::zero(); n * hl],
            raw: vec![T::zero(); n],
        };
        let mut s = MlpScratch::default();
        let mut out = [T::zero()];
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                let feat = &mut tape.features[i * fd..(i + 1) * fd];
                self.encoder.encode(params, &pixel_coord(r, c, height, width), feat);
                self.mlp.forward(params, feat, &mut tape.hidden[i * hl..(i + 1) * hl], &mut out, &mut s);
                tape.raw[i] = out[0];
            }
        }
        let (lo, hi) = (T::of(OUTPUT_MIN), T::of(OUTPUT_MAX));
        let img = Grid::from_vec(height, width, tape.raw.iter().map(|&v| v.max(lo).min(hi)).collect())
            .expect("sized by construction");
        (img, tape)
    }

    /// Accumulate parameter gradients from `dL/d image`; clamped pixels pass nothing.
    pub fn backward<T: Real>(&self, params: &[T], tape: &DeartifactTape<T>, grad_img: &RealImage<T>, grad: &mut [T]) -> Result<()> {
        grad_img.check_shape((tape.height, tape.width))?;
        let fd = self.encoder.output_dim();
        let hl = self.mlp.tape_len();
        let (lo, hi) = (T::of(OUTPUT_MIN), T::of(OUTPUT_MAX));
        let mut s = MlpScratch::default();
        let mut gfeat = vec![T::zero(); fd];
        for r in 0..tape.height {
            for c in 0..tape.width {
                let i = r * tape.width + c;
                let g = grad_img.data()[i];
                let raw = tape.raw[i];
                if g == T::zero() || raw < lo || raw > hi {
                    continue;
                }
                let feat = &tape.features[i * fd..(i + 1) * fd];
                self.mlp.backward(params, feat, &tape.hidden[i * hl..(i + 1) * hl], &[g], grad, Some(&mut gfeat), &mut s);
                self.encoder.backward(&pixel_coord(r, c, tape.height, tape.width), &gfeat, grad);
            }
        }
        Ok(())
    }
}

/// Render the image head at every pixel centre, clamped to `[0, 1.5]`.
pub fn deartifact_forward<T: Real>(net: &DeartifactNet, params: &InrParams<T>, height: usize, width: usize) -> Result<RealImage<T>> {
    params.check()?;
    if height == 0 || width == 0 {
        return Err(size_err!("image must be non-empty, got {height}x{width}"));
    }
    if !params.all_finite() {
        return Err(Error::Numeric("parameters contain non-finite values".into()));
    }
    Ok(net.forward(&params.values, height, width).0)
}
