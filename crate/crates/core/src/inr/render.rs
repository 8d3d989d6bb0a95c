//! Motion-corrupted spectrum of the current image estimate.

use alloc::vec::Vec;

use crate::error::{param_err, size_err, Result};
use crate::grid::{ComplexGrid, Grid, LineAxis, RealImage};
use crate::mask::LinePartition;
use crate::motion::{rigid_kspace, rigid_kspace_backward, RigidTape, RigidTransform2D};
use crate::scalar::Real;
use crate::spectral::Fft2Plan;

#[derive(Clone, Debug)]
pub struct RenderTape<T: Real> {
    axis: LineAxis,
    segments: Vec<RigidTape<T>>,
}

fn check(plan: &Fft2Plan, img_shape: (usize, usize), partition: &LinePartition, axis: LineAxis) -> Result<()> {
    if plan.shape() != img_shape {
        return Err(size_err!("plan is {:?}, image is {:?}", plan.shape(), img_shape));
    }
    let lines = axis.line_count(img_shape.0, img_shape.1);
    if partition.n_lines() != lines {
        return Err(size_err!("partition covers {} lines, grid has {lines}", partition.n_lines()));
    }
    Ok(())
}

/// Lines of segment `s` come from the spectrum of `i_d` moved into `poses[s]`.
pub fn render_motion_kspace<T: Real>(
    plan: &Fft2Plan,
    i_d: &RealImage<T>,
    poses: &[RigidTransform2D],
    partition: &LinePartition,
    axis: LineAxis,
) -> Result<(ComplexGrid<T>, RenderTape<T>)> {
    check(plan, i_d.shape(), partition, axis)?;
    if poses.len() != partition.segment_count() {
        return Err(param_err!("{} poses for {} segments", poses.len(), partition.segment_count()));
    }
    let (h, w) = i_d.shape();
    let mut out = ComplexGrid::<T>::zeros(h, w);
    let mut segments = Vec::with_capacity(poses.len());
    for (s, pose) in poses.iter().enumerate() {
        let (k, tape) = rigid_kspace(plan, i_d, pose)?;
        for r in 0..h {
            for c in 0..w {
                if partition.label(axis.line_of(r, c)) == s {
                    out.set(r, c, k.get(r, c));
                }
            }
        }
        segments.push(tape);
    }
    Ok((out, RenderTape { axis, segments }))
}

/// Image gradient and per-segment pose gradients of a loss on the rendered spectrum.
pub fn render_backward<T: Real>(
    plan: &Fft2Plan,
    i_d: &RealImage<T>,
    tape: &RenderTape<T>,
    partition: &LinePartition,
    grad_out: &ComplexGrid<T>,
) -> Result<(RealImage<T>, Vec<[f64; 3]>)> {
    check(plan, i_d.shape(), partition, tape.axis)?;
    grad_out.check_shape(i_d.shape())?;
    let (h, w) = i_d.shape();
    let mut grad_img = Grid::<T>::zeros(h, w);
    let mut pose_grads = Vec::with_capacity(tape.segments.len());
    for (s, seg) in tape.segments.iter().enumerate() {
        let g = Grid::from_fn(h, w, |r, c| {
            if partition.label(tape.axis.line_of(r, c)) == s {
                grad_out.get(r, c)
            } else {
                Default::default()
            }
        });
        let (gi, gp) = rigid_kspace_backward(plan, i_d, seg, &g)?;
        for (a, b) in grad_img.data_mut().iter_mut().zip(gi.data()) {
            *a += *b;
        }
        pose_grads.push(gp);
    }
    Ok((grad_img, pose_grads))
}
