//! Central finite-difference check of analytic gradients.

use alloc::vec::Vec;

use super::params::{GradVector, InrParams};
use crate::error::{size_err, Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradcheckOptions {
    /// Central difference half-step.
    pub step: f64,
    pub tolerance: f64,
    /// Coordinates checked; all of them when the vector is shorter.
    pub samples: usize,
    pub seed: u64,
    /// Lower bound on the relative-error denominator, as a fraction of the
    /// largest analytic gradient magnitude. Keeps coordinates whose gradient is
    /// at the level of finite-difference roundoff from dominating the report.
    pub floor: f64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self { step: 1e-6, tolerance: 1e-5, samples: 64, seed: 0, floor: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub worst_index: usize,
    pub tolerance: f64,
    pub passed: bool,
}

fn sample_indices(len: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    if count >= len {
        return idx;
    }
    let mut rng = SeededRng::new(seed);
    for i in 0..count {
        let j = i + rng.below((len - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

fn analytic_once<T: Real>(
    params: &InrParams<T>,
    f: &mut impl FnMut(&InrParams<T>) -> Result<(f64, GradVector<T>)>,
) -> Result<Vec<f64>> {
    let (l1, g1) = f(params)?;
    let (l2, g2) = f(params)?;
    if l1.to_bits() != l2.to_bits() || g1 != g2 {
        return Err(Error::Contract("loss closure is not deterministic".into()));
    }
    if g1.len() != params.len() {
        return Err(size_err!("gradient has {} entries for {} parameters", g1.len(), params.len()));
    }
    Ok(g1.values.iter().map(|v| v.as_f64()).collect())
}

fn compare(analytic: &[f64], idx: &[usize], mut numeric: impl FnMut(usize) -> Result<f64>, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut worst = idx.first().copied().unwrap_or(0);
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let floor = (opts.floor * scale).max(f64::MIN_POSITIVE);
    for &i in idx {
        let n = numeric(i)?;
        let a = analytic[i];
        let rel = libm::fabs(a - n) / libm::fabs(a).max(libm::fabs(n)).max(floor);
        if !(rel <= max) {
            max = rel;
            worst = i;
        }
        sum += rel;
    }
    let checked = idx.len();
    Ok(GradcheckReport {
        checked,
        max_rel_error: max,
        mean_rel_error: if checked > 0 { sum / checked as f64 } else { 0.0 },
        worst_index: worst,
        tolerance: opts.tolerance,
        passed: max <= opts.tolerance,
    })
}

/// Compare the gradient returned by `f` against central differences of its loss.
///
/// `f` returns `(loss, gradient)`; it is called twice up front and must agree
/// with itself bit for bit.
pub fn gradcheck<T: Real>(
    params: &InrParams<T>,
    mut f: impl FnMut(&InrParams<T>) -> Result<(f64, GradVector<T>)>,
    opts: &GradcheckOptions,
) -> Result<GradcheckReport> {
    let analytic = analytic_once(params, &mut f)?;
    let idx = sample_indices(params.len(), opts.samples, opts.seed);
    let mut p = params.clone();
    compare(
        &analytic,
        &idx,
        |i| {
            let orig = p.values[i];
            p.values[i] = T::of(orig.as_f64() + opts.step);
            let hi = f(&p)?.0;
            p.values[i] = T::of(orig.as_f64() - opts.step);
            let lo = f(&p)?.0;
            p.values[i] = orig;
            Ok((hi - lo) / (2.0 * opts.step))
        },
        opts,
    )
}

/// Like [`gradcheck`], but the finite differences come from `reference`, a
/// double-precision evaluation of the same loss. Used to check single-precision
/// gradients without single-precision differencing noise.
pub fn gradcheck_against<T: Real>(
    params: &InrParams<T>,
    mut f: impl FnMut(&InrParams<T>) -> Result<(f64, GradVector<T>)>,
    mut reference: impl FnMut(&InrParams<f64>) -> Result<f64>,
    opts: &GradcheckOptions,
) -> Result<GradcheckReport> {
    let analytic = analytic_once(params, &mut f)?;
    let idx = sample_indices(params.len(), opts.samples, opts.seed);
    let mut p = params.cast::<f64>();
    compare(
        &analytic,
        &idx,
        |i| {
            let orig = p.values[i];
            p.values[i] = orig + opts.step;
            let hi = reference(&p)?;
            p.values[i] = orig - opts.step;
            let lo = reference(&p)?;
            p.values[i] = orig;
            Ok((hi - lo) / (2.0 * opts.step))
        },
        opts,
    )
}
