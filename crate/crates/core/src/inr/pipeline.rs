//! Both heads plus the motion renderer, with a recorded tape for one
//! forward/backward cycle.

use alloc::vec::Vec;

use super::deartifact::{DeartifactConfig, DeartifactNet, DeartifactTape};
use super::movement::{MovementConfig, MovementNet, MovementTape};
use super::params::{GradVector, InrParams, ParamLayout};
use super::render::{render_backward, render_motion_kspace, RenderTape};
use crate::error::{size_err, Error, Result};
use crate::grid::{ComplexGrid, LineAxis, RealImage};
use crate::mask::LinePartition;
use crate::motion::RigidTransform2D;
use crate::rng::SeededRng;
use crate::scalar::Real;
use crate::spectral::Fft2Plan;

/// The two networks and the layout of their shared parameter vector.
#[derive(Clone, Debug)]
pub struct InrModel {
    pub deartifact: DeartifactNet,
    pub movement: MovementNet,
    layout: ParamLayout,
}

impl InrModel {
    pub fn new(deartifact: DeartifactConfig, movement: MovementConfig) -> Result<Self> {
        let mut layout = ParamLayout::new();
        let deartifact = DeartifactNet::new(deartifact, &mut layout, "deartifact")?;
        let movement = MovementNet::new(movement, &mut layout, "movement")?;
        Ok(Self { deartifact, movement, layout })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.total()
    }

    /// Deterministic initialization from `seed`.
    pub fn init_params<T: Real>(&self, seed: u64) -> InrParams<T> {
        let mut p = InrParams::zeros(self.layout.clone());
        let mut rng = SeededRng::new(seed);
        self.deartifact.init(&mut p, &mut rng);
        self.movement.init(&mut p, &mut rng);
        p
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput<T: Real> {
    /// Clamped image head output `i_d`.
    pub image: RealImage<T>,
    pub poses: Vec<RigidTransform2D>,
    /// Spectrum of `i_d` rendered under the per-segment poses.
    pub motion_kspace: ComplexGrid<T>,
}

#[derive(Clone, Debug)]
struct Tape<T: Real> {
    image: RealImage<T>,
    deartifact: DeartifactTape<T>,
    movement: MovementTape<T>,
    render: RenderTape<T>,
}

#[derive(Clone, Debug)]
pub struct Pipeline<T: Real> {
    model: InrModel,
    plan: Fft2Plan,
    partition: LinePartition,
    axis: LineAxis,
    tape: Option<Tape<T>>,
}

impl<T: Real> Pipeline<T> {
    pub fn new(model: InrModel, height: usize, width: usize, partition: LinePartition, axis: LineAxis) -> Result<Self> {
        let plan = Fft2Plan::new(height, width)?;
        let lines = axis.line_count(height, width);
        if partition.n_lines() != lines {
            return Err(size_err!("partition covers {} lines, grid has {lines}", partition.n_lines()));
        }
        Ok(Self { model, plan, partition, axis, tape: None })
    }

    pub fn model(&self) -> &InrModel {
        &self.model
    }

    pub fn plan(&self) -> &Fft2Plan {
        &self.plan
    }

    pub fn partition(&self) -> &LinePartition {
        &self.partition
    }

    pub fn shape(&self) -> (usize, usize) {
        self.plan.shape()
    }

    fn check_params(&self, params: &InrParams<T>) -> Result<()> {
        params.check()?;
        if params.layout != self.model.layout {
            return Err(Error::State("parameter layout does not match the model".into()));
        }
        Ok(())
    }

    /// Evaluate both heads and the renderer, recording a tape.
    pub fn forward(&mut self, params: &InrParams<T>) -> Result<PipelineOutput<T>> {
        self.check_params(params)?;
        let (h, w) = self.shape();
        let (image, de_tape) = self.model.deartifact.forward(&params.values, h, w);
        let (poses, mv_tape) = self.model.movement.forward(&params.values, self.partition.segment_count());
        let (motion_kspace, render_tape) = render_motion_kspace(&self.plan, &image, &poses, &self.partition, self.axis)?;
        self.tape = Some(Tape { image: image.clone(), deartifact: de_tape, movement: mv_tape, render: render_tape });
        Ok(PipelineOutput { image, poses, motion_kspace })
    }

    /// Exact parameter gradient given the loss gradient at both outputs.
    ///
    /// `grad_image` is `dL/d i_d` along paths that bypass the renderer;
    /// `grad_kspace` is `dL/dRe + i dL/dIm` of the rendered spectrum. Consumes the tape.
    pub fn backward(&mut self, params: &InrParams<T>, grad_image: &RealImage<T>, grad_kspace: &ComplexGrid<T>) -> Result<GradVector<T>> {
        self.check_params(params)?;
        let tape = self.tape.take().ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        grad_image.check_shape(self.shape())?;
        grad_kspace.check_shape(self.shape())?;
        let (mut g_img, pose_grads) = render_backward(&self.plan, &tape.image, &tape.render, &self.partition, grad_kspace)?;
        for (a, b) in g_img.data_mut().iter_mut().zip(grad_image.data()) {
            *a += *b;
        }
        let mut grad = GradVector::zeros(params.len());
        self.model.deartifact.backward(&params.values, &tape.deartifact, &g_img, &mut grad.values)?;
        self.model.movement.backward(&params.values, &tape.movement, &pose_grads, &mut grad.values)?;
        Ok(grad)
    }

    pub fn has_tape(&self) -> bool {
        self.tape.is_some()
    }
}
