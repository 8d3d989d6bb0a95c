//! Pose head: a 1D hash grid over segment index feeding an MLP that emits
//! one bounded rigid transform per segment.

use alloc::vec;
use alloc::vec::Vec;

use super::hashgrid::{HashEncoder, HashGridConfig};
use super::mlp::{Activation, Mlp, MlpConfig, MlpScratch};
use super::params::{InrParams, ParamLayout};
use crate::error::{param_err, Result};
use crate::motion::RigidTransform2D;
use crate::rng::SeededRng;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovementConfig {
    pub grid: HashGridConfig,
    pub mlp: MlpConfig,
    /// Radians.
    pub max_rotation: f64,
    /// Pixels.
    pub max_translation: f64,
}

impl Default for MovementConfig {
    fn default() -> Self {
        Self {
            grid: HashGridConfig { levels: 4, base_resolution: 4, growth: 2.0, features_per_level: 2, table_size_log2: 8 },
            mlp: MlpConfig { hidden_layers: 1, hidden_width: 32, activation: Activation::Relu, output_dim: 3 },
            max_rotation: 15f64.to_radians(),
            max_translation: 15.0,
        }
    }
}

impl MovementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mlp.output_dim != 3 {
            return Err(param_err!("pose head has three outputs, config asks for {}", self.mlp.output_dim));
        }
        if !(self.max_rotation > 0.0 && self.max_rotation <= core::f64::consts::PI) {
            return Err(param_err!("max rotation must lie in (0, pi], got {}", self.max_rotation));
        }
        if !(self.max_translation > 0.0 && self.max_translation.is_finite()) {
            return Err(param_err!("max translation must be positive, got {}", self.max_translation));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MovementNet {
    cfg: MovementConfig,
    encoder: HashEncoder,
    mlp: Mlp,
}

#[derive(Clone, Debug)]
pub struct MovementTape<T> {
    segments: usize,
    features: Vec<T>,
    hidden: Vec<T>,
    raw: Vec<T>,
}

/// Coordinate in `[-1, 1]` of segment `s` out of `count`.
#[inline]
pub fn segment_coord(s: usize, count: usize) -> f64 {
    (s as f64 + 0.5) / count as f64 * 2.0 - 1.0
}

impl MovementNet {
    pub fn new(cfg: MovementConfig, layout: &mut ParamLayout, prefix: &str) -> Result<Self> {
        cfg.validate()?;
        let encoder = HashEncoder::new(cfg.grid, 1, layout, &alloc::format!("{prefix}.grid"))?;
        let mlp = Mlp::new(cfg.mlp, encoder.output_dim(), layout, &alloc::format!("{prefix}.mlp"))?;
        Ok(Self { cfg, encoder, mlp })
    }

    pub fn config(&self) -> &MovementConfig {
        &self.cfg
    }

    /// Random hidden layers, zero output layer: every segment starts at the identity.
    pub fn init<T: Real>(&self, params: &mut InrParams<T>, rng: &mut SeededRng) {
        self.encoder.init(params, rng);
        self.mlp.init(params, rng);
        self.mlp.zero_last_layer(params);
    }

    pub fn forward<T: Real>(&self, params: &[T], segment_count: usize) -> (Vec<RigidTransform2D>, MovementTape<T>) {
        let fd = self.encoder.output_dim();
        let hl = self.mlp.tape_len();
        let mut tape = MovementTape {
            segments: segment_count,
            features: vec![T::zero(); segment_count * fd],
            hidden: vec![T::zero(); segment_count * hl],
            raw: vec![T::zero(); segment_count * 3],
        };
        let mut s = MlpScratch::default();
        let mut poses = Vec::with_capacity(segment_count);
        poses.push(RigidTransform2D::IDENTITY);
        for seg in 1..segment_count {
            let feat = &mut tape.features[seg * fd..(seg + 1) * fd];
            self.encoder.encode(params, &[segment_coord(seg, segment_count)], feat);
            let raw = &mut tape.raw[seg * 3..seg * 3 + 3];
            self.mlp.forward(params, feat, &mut tape.hidden[seg * hl..(seg + 1) * hl], raw, &mut s);
            let t = |k: usize| libm::tanh(raw[k].as_f64());
            poses.push(RigidTransform2D::new(
                self.cfg.max_rotation * t(0),
                self.cfg.max_translation * t(1),
                self.cfg.max_translation * t(2),
            ));
        }
        (poses, tape)
    }

    /// Accumulate parameter gradients from `(dL/dtheta, dL/dtx, dL/dty)` per segment.
    pub fn backward<T: Real>(&self, params: &[T], tape: &MovementTape<T>, pose_grads: &[[f64; 3]], grad: &mut [T]) -> Result<()> {
        if pose_grads.len() != tape.segments {
            return Err(param_err!("{} pose gradients for {} segments", pose_grads.len(), tape.segments));
        }
        let fd = self.encoder.output_dim();
        let hl = self.mlp.tape_len();
        let scale = [self.cfg.max_rotation, self.cfg.max_translation, self.cfg.max_translation];
        let mut s = MlpScratch::default();
        let mut gfeat = vec![T::zero(); fd];
        for seg in 1..tape.segments {
            let mut graw = [T::zero(); 3];
            for k in 0..3 {
                let th = libm::tanh(tape.raw[seg * 3 + k].as_f64());
                graw[k] = T::of(pose_grads[seg][k] * scale[k] * (1.0 - th * th));
            }
            if graw.iter().all(|g| *g == T::zero()) {
                continue;
            }
            let feat = &tape.features[seg * fd..(seg + 1) * fd];
            self.mlp.backward(params, feat, &tape.hidden[seg * hl..(seg + 1) * hl], &graw, grad, Some(&mut gfeat), &mut s);
            self.encoder.backward(&[segment_coord(seg, tape.segments)], &gfeat, grad);
        }
        Ok(())
    }
}

/// One bounded pose per segment; segment 0 is always the identity.
pub fn movement_forward<T: Real>(net: &MovementNet, params: &InrParams<T>, segment_count: usize) -> Result<Vec<RigidTransform2D>> {
    params.check()?;
    if segment_count == 0 {
        return Err(param_err!("segment count must be at least 1"));
    }
    Ok(net.forward(&params.values, segment_count).0)
}
