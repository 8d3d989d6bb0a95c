//! Inter-shot rigid-motion simulation for Cartesian acquisitions.
//!
//! Lines are acquired in index order. A [`MotionTrace`] cuts the lines into
//! contiguous segments, each acquired under one constant pose; the first
//! segment is the reference (identity) pose. Corrupted k-space takes every
//! line from the spectrum of the image moved into that line's pose.
//!
//! A pose rotates about the image centre with bilinear resampling (zero fill)
//! and then translates by a linear phase ramp in k-space. On even-length axes
//! the Nyquist sample gets the real factor `cos(pi*t)` so a real image stays
//! real after a sub-pixel shift.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{param_err, size_err, Result};
use crate::grid::{Complex, ComplexGrid, Grid, KLineMask, LineAxis, RealImage};
use crate::rng::SeededRng;
use crate::scalar::Real;
use crate::spectral::Fft2Plan;

/// Rotation (radians, about the image centre) followed by a translation in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RigidTransform2D {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl RigidTransform2D {
    pub const IDENTITY: Self = Self { theta: 0.0, tx: 0.0, ty: 0.0 };

    pub fn new(theta: f64, tx: f64, ty: f64) -> Self {
        Self { theta, tx, ty }
    }

    pub fn is_identity(&self) -> bool {
        self.theta == 0.0 && self.tx == 0.0 && self.ty == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.tx.is_finite() && self.ty.is_finite()) {
            return Err(param_err!("non-finite rigid transform {self:?}"));
        }
        if self.theta.abs() > PI {
            return Err(param_err!("rotation {} exceeds pi", self.theta));
        }
        Ok(())
    }
}

/// A run of lines `[start, end)` acquired under one pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub pose: RigidTransform2D,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionTrace {
    n_lines: usize,
    segments: Vec<Segment>,
}

impl MotionTrace {
    /// Validates that the segments tile `[0, n_lines)` in order and that the
    /// first pose is the identity.
    pub fn new(n_lines: usize, segments: Vec<Segment>) -> Result<Self> {
        let first = segments.first().ok_or_else(|| param_err!("motion trace has no segments"))?;
        if !first.pose.is_identity() {
            return Err(param_err!("first segment must use the identity pose"));
        }
        let mut cursor = 0;
        for s in &segments {
            if s.start != cursor || s.end <= s.start {
                return Err(param_err!(
                    "segment [{}, {}) does not continue the partition at line {cursor}",
                    s.start,
                    s.end
                ));
            }
            s.pose.validate()?;
            cursor = s.end;
        }
        if cursor != n_lines {
            return Err(param_err!("segments cover {cursor} lines, trace has {n_lines}"));
        }
        Ok(Self { n_lines, segments })
    }

    /// A single identity segment: no motion.
    pub fn still(n_lines: usize) -> Self {
        Self { n_lines, segments: alloc::vec![Segment { start: 0, end: n_lines, pose: RigidTransform2D::IDENTITY }] }
    }

    #[inline]
    pub fn n_lines(&self) -> usize {
        self.n_lines
    }

    #[inline]
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn event_count(&self) -> usize {
        self.segments.len() - 1
    }

    /// Ground-truth corrupted-line mask: lines whose pose is not the identity.
    pub fn line_mask(&self, axis: LineAxis) -> KLineMask {
        let mut bits = alloc::vec![false; self.n_lines];
        for s in &self.segments {
            if !s.pose.is_identity() {
                bits[s.start..s.end].iter_mut().for_each(|b| *b = true);
            }
        }
        KLineMask::new(axis, bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Light,
    Heavy,
}

/// Motion-event count range and pose bounds for one severity level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeverityPreset {
    pub severity: Severity,
    pub event_range: (u32, u32),
    /// Pixels.
    pub max_translation: f64,
    /// Radians.
    pub max_rotation: f64,
}

pub const MAX_TRANSLATION_MM: f64 = 10.0;
pub const DEFAULT_MAX_ROTATION_DEG: f64 = 10.0;
pub const DEFAULT_MM_PER_PIXEL: f64 = 1.0;

impl SeverityPreset {
    pub fn new(severity: Severity, mm_per_px: f64, max_rotation_deg: f64) -> Result<Self> {
        if !(mm_per_px > 0.0 && mm_per_px.is_finite()) {
            return Err(param_err!("mm per pixel must be positive, got {mm_per_px}"));
        }
        if !(0.0..=180.0).contains(&max_rotation_deg) {
            return Err(param_err!("max rotation must be within [0, 180] degrees, got {max_rotation_deg}"));
        }
        let event_range = match severity {
            Severity::Light => (6, 10),
            Severity::Heavy => (16, 20),
        };
        Ok(Self {
            severity,
            event_range,
            max_translation: MAX_TRANSLATION_MM / mm_per_px,
            max_rotation: max_rotation_deg.to_radians(),
        })
    }

    pub fn light() -> Self {
        Self::new(Severity::Light, DEFAULT_MM_PER_PIXEL, DEFAULT_MAX_ROTATION_DEG).expect("valid defaults")
    }

    pub fn heavy() -> Self {
        Self::new(Severity::Heavy, DEFAULT_MM_PER_PIXEL, DEFAULT_MAX_ROTATION_DEG).expect("valid defaults")
    }
}

/// Draw a random trace.
///
/// Draw order: event count, then event lines (partial Fisher-Yates over
/// `1..n_lines`, sorted), then `theta, tx, ty` for each post-event segment.
pub fn sample_motion(preset: &SeverityPreset, n_lines: usize, seed: u64) -> Result<MotionTrace> {
    let (lo, hi) = preset.event_range;
    if n_lines < hi as usize + 2 {
        return Err(param_err!("{n_lines} lines cannot hold up to {hi} motion events"));
    }
    let mut rng = SeededRng::new(seed);
    let events = rng.range_inclusive(lo as u64, hi as u64) as usize;
    let mut candidates: Vec<usize> = (1..n_lines).collect();
    for i in 0..events {
        let j = i + rng.below((candidates.len() - i) as u64) as usize;
        candidates.swap(i, j);
    }
    let mut cuts: Vec<usize> = candidates[..events].to_vec();
    cuts.sort_unstable();

    let mut segments = Vec::with_capacity(events + 1);
    let mut start = 0;
    let mut pose = RigidTransform2D::IDENTITY;
    for &cut in &cuts {
        segments.push(Segment { start, end: cut, pose });
        pose = RigidTransform2D {
            theta: rng.uniform(-preset.max_rotation, preset.max_rotation),
            tx: rng.uniform(-preset.max_translation, preset.max_translation),
            ty: rng.uniform(-preset.max_translation, preset.max_translation),
        };
        start = cut;
    }
    segments.push(Segment { start, end: n_lines, pose });
    MotionTrace::new(n_lines, segments)
}

#[inline]
fn centre(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}

/// Out-of-bounds samples read as zero.
#[inline]
fn pixel<T: Real>(img: &RealImage<T>, r: isize, c: isize) -> T {
    if r < 0 || c < 0 || r >= img.height() as isize || c >= img.width() as isize {
        T::zero()
    } else {
        img.get(r as usize, c as usize)
    }
}

#[inline]
fn sample_point(r: usize, c: usize, cy: f64, cx: f64, cos: f64, sin: f64) -> (f64, f64) {
    let (dx, dy) = (c as f64 - cx, r as f64 - cy);
    (cos * dx + sin * dy + cx, -sin * dx + cos * dy + cy)
}

/// Rotate by `theta` about the image centre with bilinear resampling.
pub fn rotate<T: Real>(img: &RealImage<T>, theta: f64) -> RealImage<T> {
    if theta == 0.0 {
        return img.clone();
    }
    let (h, w) = img.shape();
    let (cy, cx) = (centre(h), centre(w));
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    Grid::from_fn(h, w, |r, c| {
        let (sx, sy) = sample_point(r, c, cy, cx, cos, sin);
        let (x0, y0) = (libm::floor(sx), libm::floor(sy));
        let (fx, fy) = (T::of(sx - x0), T::of(sy - y0));
        let (x0, y0) = (x0 as isize, y0 as isize);
        let one = T::one();
        pixel(img, y0, x0) * (one - fx) * (one - fy)
            + pixel(img, y0, x0 + 1) * fx * (one - fy)
            + pixel(img, y0 + 1, x0) * (one - fx) * fy
            + pixel(img, y0 + 1, x0 + 1) * fx * fy
    })
}

/// Adjoint of [`rotate`]: gradient with respect to the input image and to `theta`.
///
/// At `theta == 0` the slope is the one-sided (forward) bilinear difference.
pub fn rotate_backward<T: Real>(img: &RealImage<T>, theta: f64, grad_out: &RealImage<T>) -> (RealImage<T>, f64) {
    let (h, w) = img.shape();
    let (cy, cx) = (centre(h), centre(w));
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    let mut grad_in = RealImage::<T>::zeros(h, w);
    let mut grad_theta = 0.0f64;
    let mut scatter = |r: isize, c: isize, v: T| {
        if r >= 0 && c >= 0 && r < h as isize && c < w as isize {
            let (r, c) = (r as usize, c as usize);
            let cur = grad_in.get(r, c);
            grad_in.set(r, c, cur + v);
        }
    };
    for r in 0..h {
        for c in 0..w {
            let g = grad_out.get(r, c);
            if g == T::zero() {
                continue;
            }
            let (sx, sy) = sample_point(r, c, cy, cx, cos, sin);
            let (x0f, y0f) = (libm::floor(sx), libm::floor(sy));
            let (fx, fy) = (sx - x0f, sy - y0f);
            let (x0, y0) = (x0f as isize, y0f as isize);
            let (tfx, tfy) = (T::of(fx), T::of(fy));
            let one = T::one();
            scatter(y0, x0, g * (one - tfx) * (one - tfy));
            scatter(y0, x0 + 1, g * tfx * (one - tfy));
            scatter(y0 + 1, x0, g * (one - tfx) * tfy);
            scatter(y0 + 1, x0 + 1, g * tfx * tfy);

            let i00 = pixel(img, y0, x0).as_f64();
            let i01 = pixel(img, y0, x0 + 1).as_f64();
            let i10 = pixel(img, y0 + 1, x0).as_f64();
            let i11 = pixel(img, y0 + 1, x0 + 1).as_f64();
            let dvdx = (1.0 - fy) * (i01 - i00) + fy * (i11 - i10);
            let dvdy = (1.0 - fx) * (i10 - i00) + fx * (i11 - i01);
            let (dx, dy) = (c as f64 - cx, r as f64 - cy);
            let dsx = -sin * dx + cos * dy;
            let dsy = -cos * dx - sin * dy;
            grad_theta += g.as_f64() * (dvdx * dsx + dvdy * dsy);
        }
    }
    (grad_in, grad_theta)
}

/// Per-axis factor of the translation phase ramp at centered index `j`, and
/// its derivative with respect to the shift.
#[inline]
fn ramp_factor(j: usize, n: usize, shift: f64) -> (Complex<f64>, Complex<f64>) {
    let k = j as f64 - (n / 2) as f64;
    if n.is_multiple_of(2) && j == 0 {
        let a = PI * shift;
        return (Complex::new(libm::cos(a), 0.0), Complex::new(-PI * libm::sin(a), 0.0));
    }
    let a = -2.0 * PI * k * shift / n as f64;
    let f = Complex::new(libm::cos(a), libm::sin(a));
    let df = f * Complex::new(0.0, -2.0 * PI * k / n as f64);
    (f, df)
}

/// Saved intermediate of [`rigid_kspace`]: the spectrum before the phase ramp.
#[derive(Clone, Debug)]
pub struct RigidTape<T: Real> {
    pub pose: RigidTransform2D,
    spectrum: ComplexGrid<T>,
}

/// Spectrum of `img` moved into `pose`: `ramp(tx, ty) * fft2c(rotate(img, theta))`.
pub fn rigid_kspace<T: Real>(
    plan: &Fft2Plan,
    img: &RealImage<T>,
    pose: &RigidTransform2D,
) -> Result<(ComplexGrid<T>, RigidTape<T>)> {
    pose.validate()?;
    let rotated = rotate(img, pose.theta);
    let spectrum = plan.forward_real(&rotated)?;
    let out = if pose.tx == 0.0 && pose.ty == 0.0 {
        spectrum.clone()
    } else {
        let (h, w) = img.shape();
        let rows: Vec<_> = (0..h).map(|r| ramp_factor(r, h, pose.ty).0).collect();
        let cols: Vec<_> = (0..w).map(|c| ramp_factor(c, w, pose.tx).0).collect();
        Grid::from_fn(h, w, |r, c| {
            let f = rows[r] * cols[c];
            spectrum.get(r, c) * Complex::new(T::of(f.re), T::of(f.im))
        })
    };
    Ok((out, RigidTape { pose: *pose, spectrum }))
}

/// Gradient of a real loss through [`rigid_kspace`].
///
/// `grad_out` holds `dL/dRe + i dL/dIm` per element. Returns the image
/// gradient and `(dL/dtheta, dL/dtx, dL/dty)`.
pub fn rigid_kspace_backward<T: Real>(
    plan: &Fft2Plan,
    img: &RealImage<T>,
    tape: &RigidTape<T>,
    grad_out: &ComplexGrid<T>,
) -> Result<(RealImage<T>, [f64; 3])> {
    let (h, w) = img.shape();
    let pose = tape.pose;
    let rows: Vec<_> = (0..h).map(|r| ramp_factor(r, h, pose.ty)).collect();
    let cols: Vec<_> = (0..w).map(|c| ramp_factor(c, w, pose.tx)).collect();
    let mut g_tx = 0.0;
    let mut g_ty = 0.0;
    let mut grad_spec = ComplexGrid::<T>::zeros(h, w);
    for r in 0..h {
        let (fr, dfr) = rows[r];
        for c in 0..w {
            let g = grad_out.get(r, c);
            if g.re == T::zero() && g.im == T::zero() {
                continue;
            }
            let g = Complex::new(g.re.as_f64(), g.im.as_f64());
            let a = tape.spectrum.get(r, c);
            let a = Complex::new(a.re.as_f64(), a.im.as_f64());
            let (fc, dfc) = cols[c];
            g_tx += (g.conj() * a * fr * dfc).re;
            g_ty += (g.conj() * a * dfr * fc).re;
            let ga = (fr * fc).conj() * g;
            grad_spec.set(r, c, Complex::new(T::of(ga.re), T::of(ga.im)));
        }
    }
    let grad_rot = plan.inverse(&grad_spec)?.real_part();
    let (grad_img, g_theta) = rotate_backward(img, pose.theta, &grad_rot);
    Ok((grad_img, [g_theta, g_tx, g_ty]))
}

/// Move an image into `pose`. The translation is applied through the phase
/// ramp, so sub-pixel shifts are exact for band-limited content.
pub fn apply_rigid<T: Real>(img: &RealImage<T>, pose: &RigidTransform2D) -> Result<RealImage<T>> {
    pose.validate()?;
    if pose.tx == 0.0 && pose.ty == 0.0 {
        return Ok(rotate(img, pose.theta));
    }
    let plan = Fft2Plan::new(img.height(), img.width())?;
    let (k, _) = rigid_kspace(&plan, img, pose)?;
    Ok(plan.inverse(&k)?.real_part())
}

/// Simulate a motion-corrupted acquisition of `clean` along the row axis.
pub fn corrupt<T: Real>(clean: &RealImage<T>, trace: &MotionTrace) -> Result<(ComplexGrid<T>, KLineMask)> {
    let (h, w) = clean.shape();
    if trace.n_lines() != h {
        return Err(size_err!("trace has {} lines, image has {h} rows", trace.n_lines()));
    }
    let plan = Fft2Plan::new(h, w)?;
    let still = plan.forward_real(clean)?;
    let mut out = still.clone();
    for seg in trace.segments() {
        if seg.pose.is_identity() {
            continue;
        }
        let (moved, _) = rigid_kspace(&plan, clean, &seg.pose)?;
        for r in seg.start..seg.end {
            out.row_mut(r).copy_from_slice(moved.row(r));
        }
    }
    Ok((out, trace.line_mask(LineAxis::Rows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_phantom, PhantomKind, PhantomSpec};
    use crate::spectral::fft2c;

    fn smooth(n: usize, seed: u64) -> RealImage<f64> {
        generate_phantom(&PhantomSpec { kind: PhantomKind::SmoothRandom, size: n, seed }).unwrap()
    }

    #[test]
    fn event_counts_follow_presets() {
        for seed in 0..50 {
            let light = sample_motion(&SeverityPreset::light(), 320, seed).unwrap();
            assert!((6..=10).contains(&light.event_count()), "{}", light.event_count());
            let heavy = sample_motion(&SeverityPreset::heavy(), 320, seed).unwrap();
            assert!((16..=20).contains(&heavy.event_count()));
            for s in &heavy.segments()[1..] {
                assert!(s.pose.tx.abs() <= 10.0 && s.pose.ty.abs() <= 10.0);
                assert!(s.pose.theta.abs() <= 10f64.to_radians());
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_motion(&SeverityPreset::heavy(), 128, 7).unwrap();
        let b = sample_motion(&SeverityPreset::heavy(), 128, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_motion(&SeverityPreset::heavy(), 128, 8).unwrap());
    }

    #[test]
    fn too_few_lines_rejected() {
        assert!(matches!(sample_motion(&SeverityPreset::heavy(), 21, 0), Err(crate::Error::Parameter(_))));
        assert!(sample_motion(&SeverityPreset::heavy(), 22, 0).is_ok());
    }

    #[test]
    fn trace_validation() {
        let id = RigidTransform2D::IDENTITY;
        let p = RigidTransform2D::new(0.1, 1.0, 0.0);
        assert!(MotionTrace::new(10, alloc::vec![Segment { start: 0, end: 4, pose: id }, Segment { start: 4, end: 10, pose: p }]).is_ok());
        assert!(MotionTrace::new(10, alloc::vec![Segment { start: 0, end: 4, pose: p }]).is_err());
        assert!(MotionTrace::new(10, alloc::vec![Segment { start: 0, end: 4, pose: id }, Segment { start: 5, end: 10, pose: p }]).is_err());
        assert!(MotionTrace::new(9, alloc::vec![Segment { start: 0, end: 10, pose: id }]).is_err());
    }

    #[test]
    fn identity_is_exact() {
        let img = smooth(32, 1);
        assert_eq!(apply_rigid(&img, &RigidTransform2D::IDENTITY).unwrap(), img);
        assert_eq!(rotate(&img, 0.0), img);
        let tiny = apply_rigid(&img, &RigidTransform2D::new(0.0, 1e-300, 0.0)).unwrap();
        let err = img.data().iter().zip(tiny.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6);
    }

    #[test]
    fn integer_shift_moves_impulse() {
        let mut img = RealImage::<f64>::zeros(16, 16);
        img.set(8, 5, 1.0);
        let moved = apply_rigid(&img, &RigidTransform2D::new(0.0, 3.0, 0.0)).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let expected = if (r, c) == (8, 8) { 1.0 } else { 0.0 };
                assert!((moved.get(r, c).abs() - expected).abs() <= 1e-6, "({r},{c}) {}", moved.get(r, c));
            }
        }
        let down = apply_rigid(&img, &RigidTransform2D::new(0.0, 0.0, -2.0)).unwrap();
        assert!((down.get(6, 5) - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn subpixel_shift_keeps_real_image_real() {
        let img = smooth(32, 4);
        let plan = Fft2Plan::new(32, 32).unwrap();
        let (k, _) = rigid_kspace(&plan, &img, &RigidTransform2D::new(0.05, 1.37, -2.6)).unwrap();
        let back = plan.inverse(&k).unwrap();
        assert!(back.data().iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn rotation_round_trip_keeps_interior() {
        let n = 64;
        let img = smooth(n, 2);
        let back = rotate(&rotate(&img, 0.2), -0.2);
        let c = centre(n);
        let radius = n as f64 / 2.0 - 3.0;
        let mut se = 0.0;
        let mut count = 0;
        for r in 0..n {
            for col in 0..n {
                if ((r as f64 - c).powi(2) + (col as f64 - c).powi(2)).sqrt() <= radius {
                    se += (img.get(r, col) - back.get(r, col)).powi(2);
                    count += 1;
                }
            }
        }
        let psnr = 10.0 * (1.0 / (se / count as f64)).log10();
        assert!(psnr >= 40.0, "psnr {psnr}");
    }

    #[test]
    fn rotation_backward_matches_finite_differences() {
        let img = smooth(32, 3).map(|v| v - 0.3);
        let weights = smooth(32, 9);
        let loss = |im: &RealImage<f64>, th: f64| -> f64 {
            rotate(im, th).data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
        };
        let theta = 0.137;
        let (g_img, g_theta) = rotate_backward(&img, theta, &weights);
        let h = 1e-6;
        let fd = (loss(&img, theta + h) - loss(&img, theta - h)) / (2.0 * h);
        assert!((fd - g_theta).abs() <= 1e-5 * fd.abs().max(1.0), "{fd} vs {g_theta}");
        // linear in the image: adjoint identity <R x, w> = <x, R^T w>
        let lhs = loss(&img, theta);
        let rhs: f64 = img.data().iter().zip(g_img.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn rigid_kspace_pose_gradients() {
        let n = 16;
        let img = smooth(32, 5);
        let img = Grid::from_fn(n, n, |r, c| img.get(r + 8, c + 8));
        let plan = Fft2Plan::new(n, n).unwrap();
        let target = fft2c(&smooth(32, 6).map(|v| v * 0.5)).unwrap();
        let target = Grid::from_fn(n, n, |r, c| target.get(r, c));
        let loss = |p: &RigidTransform2D| -> f64 {
            let (k, _) = rigid_kspace(&plan, &img, p).unwrap();
            k.data().iter().zip(target.data()).map(|(a, b)| (a - b).norm_sqr()).sum()
        };
        let pose = RigidTransform2D::new(0.07, 0.8, -1.3);
        let (k, tape) = rigid_kspace(&plan, &img, &pose).unwrap();
        let grad_k = k.zip_map(&target, |a, b| (a - b) * 2.0).unwrap();
        let (_, g) = rigid_kspace_backward(&plan, &img, &tape, &grad_k).unwrap();
        let h = 1e-6;
        let bump = |i: usize, d: f64| {
            let mut p = pose;
            match i {
                0 => p.theta += d,
                1 => p.tx += d,
                _ => p.ty += d,
            }
            p
        };
        for i in 0..3 {
            let fd = (loss(&bump(i, h)) - loss(&bump(i, -h))) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * fd.abs().max(1e-3), "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn zero_motion_corruption_is_exact() {
        let img = smooth(32, 1);
        let (f, mask) = corrupt(&img, &MotionTrace::still(32)).unwrap();
        assert_eq!(f, fft2c(&img).unwrap());
        assert_eq!(mask.popcount(), 0);
        let id = RigidTransform2D::IDENTITY;
        let trace = MotionTrace::new(32, alloc::vec![Segment { start: 0, end: 10, pose: id }, Segment { start: 10, end: 32, pose: id }]).unwrap();
        let (f2, m2) = corrupt(&img, &trace).unwrap();
        assert_eq!(f2, f);
        assert_eq!(m2.popcount(), 0);
    }

    #[test]
    fn two_segment_rows_match_recomputation() {
        let img = smooth(32, 1);
        let pose = RigidTransform2D::new(-0.1, 2.5, 1.0);
        let trace = MotionTrace::new(
            32,
            alloc::vec![
                Segment { start: 0, end: 12, pose: RigidTransform2D::IDENTITY },
                Segment { start: 12, end: 32, pose },
            ],
        )
        .unwrap();
        let (f, mask) = corrupt(&img, &trace).unwrap();
        let still = fft2c(&img).unwrap();
        let moved = fft2c(&apply_rigid(&img, &pose).unwrap()).unwrap();
        for r in 0..32 {
            let reference = if r < 12 { &still } else { &moved };
            for c in 0..32 {
                assert!((f.get(r, c) - reference.get(r, c)).norm() < 1e-10);
            }
            assert_eq!(mask.is_flagged(r), r >= 12);
        }
        assert_eq!(mask.popcount(), 20);
        assert!(corrupt(&img, &MotionTrace::still(31)).is_err());
    }

    #[test]
    fn corruption_is_linear() {
        let x = smooth(32, 1);
        let y = smooth(32, 2);
        let trace = sample_motion(&SeverityPreset::light(), 32, 3).unwrap();
        let combo = x.zip_map(&y, |a, b| 0.7 * a - 1.5 * b).unwrap();
        let (fc, _) = corrupt(&combo, &trace).unwrap();
        let (fx, _) = corrupt(&x, &trace).unwrap();
        let (fy, _) = corrupt(&y, &trace).unwrap();
        for i in 0..fc.len() {
            let expected = fx.data()[i] * 0.7 - fy.data()[i] * 1.5;
            assert!((fc.data()[i] - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn heavy_flags_more_lines_than_light() {
        let (mut light, mut heavy) = (0usize, 0usize);
        for seed in 0..20 {
            light += sample_motion(&SeverityPreset::light(), 128, seed).unwrap().line_mask(LineAxis::Rows).popcount();
            heavy += sample_motion(&SeverityPreset::heavy(), 128, seed).unwrap().line_mask(LineAxis::Rows).popcount();
        }
        assert!(heavy >= light, "heavy {heavy} light {light}");
    }

    #[test]
    fn non_finite_pose_rejected() {
        let img = smooth(32, 1);
        assert!(matches!(apply_rigid(&img, &RigidTransform2D::new(f64::NAN, 0.0, 0.0)), Err(crate::Error::Parameter(_))));
        assert!(apply_rigid(&img, &RigidTransform2D::new(0.0, f64::INFINITY, 0.0)).is_err());
    }
}
