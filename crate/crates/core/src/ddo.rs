//! Dual-domain optimization: spectrum composition, reorganization, losses
//! with the linear weight schedule, Adam, and the per-image fitting loop.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param_err, size_err, Error, Result};
use crate::grid::{Complex, ComplexGrid, Grid, KLineMask, LineAxis, RealImage};
use crate::inr::{DeartifactConfig, GradVector, InrModel, InrParams, MovementConfig, Pipeline};
use crate::mask::LinePartition;
use crate::motion::RigidTransform2D;
use crate::scalar::Real;
use crate::spectral::{Fft2Plan, LowpassWindow};

pub const DEFAULT_EPOCHS: usize = 250;
pub const DEFAULT_LR: f64 = 5e-4;
pub const DEFAULT_LOWPASS_FRACTION: f64 = 0.125;
pub const DIVERGENCE_FACTOR: f64 = 10.0;

fn check_pair<A: Copy, B: Copy>(a: &Grid<A>, b: &Grid<B>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(size_err!("shapes differ: {:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&omega) {
        return Err(param_err!("omega must lie in [0, 0.5], got {omega}"));
    }
    Ok(())
}

/// Masked lines from `f_m`, the rest from `k_d` (the spectrum of `i_d`).
fn merge<T: Real>(k_d: &ComplexGrid<T>, f_m: &ComplexGrid<T>, mask: &KLineMask) -> Result<ComplexGrid<T>> {
    check_pair(k_d, f_m)?;
    mask.check_grid(k_d.height(), k_d.width())?;
    Ok(Grid::from_fn(k_d.height(), k_d.width(), |r, c| if mask.covers(r, c) { f_m.get(r, c) } else { k_d.get(r, c) }))
}

/// `fft2c(i_d) * (1 - M) + f_m * M`
pub fn compose_fc<T: Real>(i_d: &RealImage<T>, f_m: &ComplexGrid<T>, mask: &KLineMask) -> Result<ComplexGrid<T>> {
    check_pair(i_d, f_m)?;
    let plan = Fft2Plan::new(i_d.height(), i_d.width())?;
    merge(&plan.forward_real(i_d)?, f_m, mask)
}

/// Low band and masked high band from `f_c`, unmasked high band from `f_o`.
pub fn reorganize<T: Real>(f_c: &ComplexGrid<T>, f_o: &ComplexGrid<T>, mask: &KLineMask, fraction: f64) -> Result<ComplexGrid<T>> {
    check_pair(f_c, f_o)?;
    mask.check_grid(f_c.height(), f_c.width())?;
    let window = LowpassWindow::new(f_c.height(), f_c.width(), fraction)?;
    Ok(Grid::from_fn(f_c.height(), f_c.width(), |r, c| {
        if window.contains(r, c) || mask.covers(r, c) {
            f_c.get(r, c)
        } else {
            f_o.get(r, c)
        }
    }))
}

/// Loss weight at epoch `t` of `total`: falls linearly from 0.5 to 0.
pub fn omega(t: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(param_err!("schedule length must be at least 1"));
    }
    if t > total {
        return Err(param_err!("epoch {t} beyond schedule length {total}"));
    }
    Ok(0.5 - t as f64 / (2.0 * total as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleState {
    pub t: usize,
    pub total: usize,
    pub omega: f64,
}

impl ScheduleState {
    pub fn new(t: usize, total: usize) -> Result<Self> {
        Ok(Self { t, total, omega: omega(t, total)? })
    }
}

/// Mean squared complex modulus and the per-element error map.
pub fn loss_freq<T: Real>(pred: &ComplexGrid<T>, target: &ComplexGrid<T>) -> Result<(f64, Grid<f64>)> {
    check_pair(pred, target)?;
    let map = pred.zip_map(target, |a, b| {
        let d = Complex::new(a.re.as_f64() - b.re.as_f64(), a.im.as_f64() - b.im.as_f64());
        d.norm_sqr()
    })?;
    let mean = map.data().iter().sum::<f64>() / map.len() as f64;
    Ok((mean, map))
}

/// Mean squared difference of two images.
pub fn loss_pixel<T: Real>(pred: &RealImage<T>, target: &RealImage<T>) -> Result<f64> {
    check_pair(pred, target)?;
    let sum: f64 = pred.data().iter().zip(target.data()).map(|(a, b)| {
        let d = a.as_f64() - b.as_f64();
        d * d
    }).sum();
    Ok(sum / pred.len() as f64)
}

/// `omega * mean(e * M) + (1 - omega) * mean(e * (1 - M))`, both means over all elements.
pub fn weighted_freq_loss(error_map: &Grid<f64>, mask: &KLineMask, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    mask.check_grid(error_map.height(), error_map.width())?;
    let (mut on, mut off) = (0.0, 0.0);
    for r in 0..error_map.height() {
        for c in 0..error_map.width() {
            if mask.covers(r, c) {
                on += error_map.get(r, c);
            } else {
                off += error_map.get(r, c);
            }
        }
    }
    let n = error_map.len() as f64;
    Ok(omega * (on / n) + (1.0 - omega) * (off / n))
}

pub fn total_loss(loss_w_freq: f64, loss_pixel: f64, omega: f64) -> f64 {
    omega * loss_w_freq + (1.0 - omega) * loss_pixel
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub loss_freq: f64,
    pub loss_pixel: f64,
    pub loss_w_freq: f64,
    pub total: f64,
    pub n_freq: usize,
    pub n_pixel: usize,
}

impl LossTerms {
    pub fn all_finite(&self) -> bool {
        [self.loss_freq, self.loss_pixel, self.loss_w_freq, self.total].iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize, lr: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(param_err!("learning rate must be positive, got {lr}"));
        }
        Ok(Self {
            step: 0,
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        })
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() || params.len() != state.second_moment.len() {
        return Err(size_err!(
            "Adam lengths disagree: params {}, grads {}, moments {}",
            params.len(),
            grads.len(),
            state.first_moment.len()
        ));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(alloc::format!("non-finite gradient at index {i} (step {})", state.step)));
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2) = (T::of(state.beta1), T::of(state.beta2));
    let (c1, c2) = (T::one() - b1, T::one() - b2);
    let bc1 = T::of(1.0 - libm::pow(state.beta1, t));
    let bc2 = T::of(1.0 - libm::pow(state.beta2, t));
    let lr = T::of(state.lr);
    let eps = T::of(state.eps);
    for i in 0..params.len() {
        let g = grads[i];
        let m = b1 * state.first_moment[i] + c1 * g;
        let v = b2 * state.second_moment[i] + c2 * g * g;
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        params[i] -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MaskMode {
    #[default]
    Oracle,
    Detector,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconConfig {
    pub epochs: usize,
    pub lr: f64,
    pub lowpass_fraction: f64,
    pub mask_mode: MaskMode,
    pub seed: u64,
    pub deartifact: DeartifactConfig,
    pub movement: MovementConfig,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_LR,
            lowpass_fraction: DEFAULT_LOWPASS_FRACTION,
            mask_mode: MaskMode::Oracle,
            seed: 0,
            deartifact: DeartifactConfig::default(),
            movement: MovementConfig::default(),
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(param_err!("epochs must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(param_err!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.lowpass_fraction > 0.0 && self.lowpass_fraction <= 1.0) {
            return Err(param_err!("low-pass fraction must lie in (0, 1], got {}", self.lowpass_fraction));
        }
        self.movement.validate()?;
        self.deartifact.grid.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub omega: f64,
    pub terms: LossTerms,
}

#[derive(Clone, Debug)]
pub struct Reconstruction<T: Real> {
    /// `|ifft2c(f_ic)|` of the reorganized spectrum: the corrected image.
    pub image: RealImage<T>,
    /// Image head output `i_d` at the final parameters.
    pub deartifact: RealImage<T>,
    pub poses: Vec<RigidTransform2D>,
    pub log: Vec<EpochRecord>,
    /// Final parameters, or the last good ones when `abort` is set.
    pub params: InrParams<T>,
    pub lr: f64,
    /// Why the loop stopped early, if it did.
    pub abort: Option<Error>,
}

/// Per-epoch evaluation: loss terms and, optionally, the parameter gradient.
pub struct Objective<T: Real> {
    pipeline: Pipeline<T>,
    f_o: ComplexGrid<T>,
    i_o: RealImage<T>,
    mask: KLineMask,
}

/// Everything one evaluation of the objective produces.
pub struct Evaluation<T: Real> {
    pub terms: LossTerms,
    pub image: RealImage<T>,
    pub poses: Vec<RigidTransform2D>,
    pub f_c: ComplexGrid<T>,
    pub grad: Option<GradVector<T>>,
}

impl<T: Real> Objective<T> {
    pub fn new(model: InrModel, f_o: &ComplexGrid<T>, mask: &KLineMask, partition: LinePartition) -> Result<Self> {
        let (h, w) = f_o.shape();
        mask.check_grid(h, w)?;
        let axis: LineAxis = mask.axis();
        let pipeline = Pipeline::new(model, h, w, partition, axis)?;
        let i_o = pipeline.plan().inverse(f_o)?.magnitude();
        Ok(Self { pipeline, f_o: f_o.clone(), i_o, mask: mask.clone() })
    }

    pub fn pipeline(&self) -> &Pipeline<T> {
        &self.pipeline
    }

    /// Loss terms at `params` for weight `omega`; the gradient of `total` when asked.
    pub fn evaluate(&mut self, params: &InrParams<T>, omega: f64, with_grad: bool) -> Result<Evaluation<T>> {
        check_omega(omega)?;
        let out = self.pipeline.forward(params)?;
        let plan = self.pipeline.plan();
        let (h, w) = plan.shape();
        let n = (h * w) as f64;
        let k_d = plan.forward_real(&out.image)?;
        let f_c = merge(&k_d, &out.motion_kspace, &self.mask)?;
        let (lf, err) = loss_freq(&f_c, &self.f_o)?;
        let lwf = weighted_freq_loss(&err, &self.mask, omega)?;
        let z = plan.inverse(&f_c)?;
        let i_c = z.magnitude();
        let lp = loss_pixel(&i_c, &self.i_o)?;
        let terms = LossTerms {
            loss_freq: lf,
            loss_pixel: lp,
            loss_w_freq: lwf,
            total: total_loss(lwf, lp, omega),
            n_freq: h * w,
            n_pixel: h * w,
        };
        let grad = if with_grad {
            // d total / d z through the magnitude, z = ifft2c(f_c)
            let gz = Grid::from_fn(h, w, |r, c| {
                let v = z.get(r, c);
                let m = i_c.get(r, c).as_f64();
                if m == 0.0 {
                    return Complex::new(T::zero(), T::zero());
                }
                let s = (1.0 - omega) * 2.0 * (m - self.i_o.get(r, c).as_f64()) / n / m;
                Complex::new(T::of(s * v.re.as_f64()), T::of(s * v.im.as_f64()))
            });
            let mut g_fc = plan.forward(&gz)?;
            for r in 0..h {
                for c in 0..w {
                    let wgt = if self.mask.covers(r, c) { omega } else { 1.0 - omega };
                    let d = f_c.get(r, c) - self.f_o.get(r, c);
                    let s = T::of(omega * wgt * 2.0 / n);
                    let g = g_fc.get(r, c) + d * s;
                    g_fc.set(r, c, g);
                }
            }
            let zero = Complex::new(T::zero(), T::zero());
            let g_fm = Grid::from_fn(h, w, |r, c| if self.mask.covers(r, c) { g_fc.get(r, c) } else { zero });
            let g_kd = Grid::from_fn(h, w, |r, c| if self.mask.covers(r, c) { zero } else { g_fc.get(r, c) });
            let g_img = plan.inverse(&g_kd)?.real_part();
            Some(self.pipeline.backward(params, &g_img, &g_fm)?)
        } else {
            None
        };
        Ok(Evaluation { terms, image: out.image, poses: out.poses, f_c, grad })
    }
}

fn check_inputs<T: Real>(f_o: &ComplexGrid<T>, mask: &KLineMask, partition: &LinePartition) -> Result<()> {
    let (h, w) = f_o.shape();
    mask.check_grid(h, w)?;
    if partition.n_lines() != mask.len() {
        return Err(size_err!("partition covers {} lines, mask has {}", partition.n_lines(), mask.len()));
    }
    if !f_o.all_finite() {
        return Err(Error::Numeric("observed k-space contains non-finite values".into()));
    }
    Ok(())
}

/// Fit both networks to `f_o`, with segments taken from the mask runs.
pub fn reconstruct<T: Real>(f_o: &ComplexGrid<T>, mask: &KLineMask, cfg: &ReconConfig) -> Result<Reconstruction<T>> {
    reconstruct_with_partition(f_o, mask, &LinePartition::from_mask_runs(mask), cfg)
}

/// Fit both networks to `f_o` with an explicit line partition for the pose head.
pub fn reconstruct_with_partition<T: Real>(
    f_o: &ComplexGrid<T>,
    mask: &KLineMask,
    partition: &LinePartition,
    cfg: &ReconConfig,
) -> Result<Reconstruction<T>> {
    reconstruct_observed(f_o, mask, partition, cfg, |_| {})
}

/// As [`reconstruct_with_partition`], calling `observe` after every epoch.
pub fn reconstruct_observed<T: Real>(
    f_o: &ComplexGrid<T>,
    mask: &KLineMask,
    partition: &LinePartition,
    cfg: &ReconConfig,
    mut observe: impl FnMut(&EpochRecord),
) -> Result<Reconstruction<T>> {
    cfg.validate()?;
    check_inputs(f_o, mask, partition)?;
    let model = InrModel::new(cfg.deartifact, cfg.movement)?;
    let mut params = model.init_params::<T>(cfg.seed);
    let mut objective = Objective::new(model, f_o, mask, partition.clone())?;
    let mut adam = AdamState::new(params.len(), cfg.lr)?;
    let span = cfg.epochs.saturating_sub(1).max(1);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut last_good = params.clone();
    let mut initial_total = None;
    let mut halved = false;
    let mut abort = None;

    for t in 0..cfg.epochs {
        let w = omega(t, span)?;
        let eval = match objective.evaluate(&params, w, true) {
            Ok(e) => e,
            Err(e @ Error::Numeric(_)) => {
                abort = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let record = EpochRecord { epoch: t, omega: w, terms: eval.terms };
        if !eval.terms.all_finite() {
            abort = Some(Error::Numeric(alloc::format!("non-finite loss at epoch {t}")));
            break;
        }
        let first = *initial_total.get_or_insert(eval.terms.total);
        if eval.terms.total > DIVERGENCE_FACTOR * first {
            if halved {
                abort = Some(Error::Numeric(alloc::format!(
                    "loss diverged at epoch {t}: {} > {DIVERGENCE_FACTOR} x {first}",
                    eval.terms.total
                )));
                break;
            }
            halved = true;
            adam.lr *= 0.5;
        } else {
            last_good.values.copy_from_slice(&params.values);
        }
        log.push(record);
        observe(&record);
        let grad = eval.grad.expect("requested");
        if let Err(e) = adam_step(&mut params.values, &grad.values, &mut adam) {
            abort = Some(e);
            break;
        }
    }
    if abort.is_some() {
        params = last_good;
    }
    let fin = objective.evaluate(&params, 0.0, false)?;
    let f_ic = reorganize(&fin.f_c, f_o, mask, cfg.lowpass_fraction)?;
    let image = objective.pipeline().plan().inverse(&f_ic)?.magnitude();
    Ok(Reconstruction { image, deartifact: fin.image, poses: fin.poses, log, params, lr: adam.lr, abort })
}
