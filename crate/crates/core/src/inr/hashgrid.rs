//! Multiresolution hash-grid encoding over `[-1, 1]^d`, `d` = 1 or 2.

use alloc::format;
use alloc::vec::Vec;

use super::params::{InrParams, ParamLayout};
use crate::error::{param_err, size_err, Result};
use crate::rng::SeededRng;
use crate::scalar::Real;

const PRIMES: [u64; 2] = [1, 2_654_435_761];
pub const TABLE_INIT_BOUND: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HashGridConfig {
    pub levels: usize,
    pub base_resolution: usize,
    pub growth: f64,
    pub features_per_level: usize,
    pub table_size_log2: u32,
}

impl Default for HashGridConfig {
    fn default() -> Self {
        Self { levels: 8, base_resolution: 16, growth: 1.5, features_per_level: 2, table_size_log2: 14 }
    }
}

impl HashGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.base_resolution == 0 || self.features_per_level == 0 {
            return Err(param_err!("hash grid counts must be at least 1: {self:?}"));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(param_err!("hash grid growth must be > 1, got {}", self.growth));
        }
        if !(1..=30).contains(&self.table_size_log2) {
            return Err(param_err!("table_size_log2 must lie in 1..=30, got {}", self.table_size_log2));
        }
        for l in 1..self.levels {
            if self.resolution(l) <= self.resolution(l - 1) {
                return Err(param_err!("level resolutions must strictly increase (level {l})"));
            }
        }
        Ok(())
    }

    /// Cells per axis at `level`.
    pub fn resolution(&self, level: usize) -> usize {
        libm::floor(self.base_resolution as f64 * libm::pow(self.growth, level as f64)) as usize
    }

    pub fn feature_dim(&self) -> usize {
        self.levels * self.features_per_level
    }

    fn vertices(&self, level: usize, dim: usize) -> usize {
        (self.resolution(level) + 1).saturating_pow(dim as u32)
    }

    /// Entries in the table of `level`; equal to the vertex count when it fits.
    pub fn table_len(&self, level: usize, dim: usize) -> usize {
        self.vertices(level, dim).min(1 << self.table_size_log2)
    }

    pub fn is_dense(&self, level: usize, dim: usize) -> bool {
        self.vertices(level, dim) <= 1 << self.table_size_log2
    }

    pub fn param_count(&self, dim: usize) -> usize {
        (0..self.levels).map(|l| self.table_len(l, dim) * self.features_per_level).sum()
    }
}

#[derive(Clone, Copy, Debug)]
struct Level {
    offset: usize,
    resolution: usize,
    entries: usize,
    dense: bool,
}

/// Corners touched by one point at one level: table offsets and weights.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Corners<T> {
    pub idx: [usize; 4],
    pub w: [T; 4],
    pub n: usize,
}

#[derive(Clone, Debug)]
pub struct HashEncoder {
    cfg: HashGridConfig,
    dim: usize,
    levels: Vec<Level>,
}

impl HashEncoder {
    /// Register one table block per level under `prefix` in `layout`.
    pub fn new(cfg: HashGridConfig, dim: usize, layout: &mut ParamLayout, prefix: &str) -> Result<Self> {
        cfg.validate()?;
        if !(1..=2).contains(&dim) {
            return Err(param_err!("hash grid dimension must be 1 or 2, got {dim}"));
        }
        let levels = (0..cfg.levels)
            .map(|l| {
                let entries = cfg.table_len(l, dim);
                let r = layout.push(format!("{prefix}.level{l}"), entries * cfg.features_per_level);
                Level { offset: r.start, resolution: cfg.resolution(l), entries, dense: cfg.is_dense(l, dim) }
            })
            .collect();
        Ok(Self { cfg, dim, levels })
    }

    pub fn config(&self) -> &HashGridConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn output_dim(&self) -> usize {
        self.cfg.feature_dim()
    }

    pub fn init<T: Real>(&self, params: &mut InrParams<T>, rng: &mut SeededRng) {
        let f = self.cfg.features_per_level;
        for lv in &self.levels {
            for v in &mut params.values[lv.offset..lv.offset + lv.entries * f] {
                *v = T::of(rng.uniform(-TABLE_INIT_BOUND, TABLE_INIT_BOUND));
            }
        }
    }

    fn index(&self, level: &Level, v: [usize; 2]) -> usize {
        let local = if level.dense {
            let side = level.resolution + 1;
            v[0] + if self.dim == 2 { v[1] * side } else { 0 }
        } else {
            let mut h = 0u64;
            for (k, &c) in v.iter().enumerate().take(self.dim) {
                h ^= (c as u64).wrapping_mul(PRIMES[k]);
            }
            (h % level.entries as u64) as usize
        };
        level.offset + local * self.cfg.features_per_level
    }

    pub(crate) fn corners<T: Real>(&self, level: usize, point: &[f64]) -> Corners<T> {
        let lv = &self.levels[level];
        let r = lv.resolution;
        let mut base = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for k in 0..self.dim {
            let u = (point[k].clamp(-1.0, 1.0) + 1.0) * 0.5 * r as f64;
            let i = (libm::floor(u) as usize).min(r - 1);
            base[k] = i;
            frac[k] = u - i as f64;
        }
        let mut out = Corners { n: 1 << self.dim, ..Default::default() };
        for bits in 0..out.n {
            let mut v = base;
            let mut w = 1.0;
            for k in 0..self.dim {
                if bits >> k & 1 == 1 {
                    v[k] += 1;
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            out.idx[bits] = self.index(lv, v);
            out.w[bits] = T::of(w);
        }
        out
    }

    /// Features of `point` (coordinates in `[-1, 1]`, clamped) into `out`.
    pub fn encode<T: Real>(&self, params: &[T], point: &[f64], out: &mut [T]) {
        let f = self.cfg.features_per_level;
        for l in 0..self.cfg.levels {
            let c = self.corners::<T>(l, point);
            let dst = &mut out[l * f..(l + 1) * f];
            dst.fill(T::zero());
            for j in 0..c.n {
                let src = &params[c.idx[j]..c.idx[j] + f];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c.w[j] * *s;
                }
            }
        }
    }

    /// Accumulate `d loss / d table` given `d loss / d features` at `point`.
    pub fn backward<T: Real>(&self, point: &[f64], grad_features: &[T], grad: &mut [T]) {
        let f = self.cfg.features_per_level;
        for l in 0..self.cfg.levels {
            let c = self.corners::<T>(l, point);
            let g = &grad_features[l * f..(l + 1) * f];
            for j in 0..c.n {
                let dst = &mut grad[c.idx[j]..c.idx[j] + f];
                for (d, s) in dst.iter_mut().zip(g) {
                    *d += c.w[j] * *s;
                }
            }
        }
    }
}

/// Encode a batch of points; one feature vector per point.
pub fn hash_encode<T: Real>(encoder: &HashEncoder, coords: &[[f64; 2]], params: &InrParams<T>) -> Result<Vec<Vec<T>>> {
    params.check()?;
    let last = encoder.levels.last().map_or(0, |l| l.offset + l.entries * encoder.cfg.features_per_level);
    if last > params.len() {
        return Err(size_err!("parameter vector too short for this encoder"));
    }
    Ok(coords
        .iter()
        .map(|p| {
            let mut out = alloc::vec![T::zero(); encoder.output_dim()];
            encoder.encode(&params.values, &p[..encoder.dim], &mut out);
            out
        })
        .collect())
}
