//! Analytic and random ground-truth test images.

use crate::error::{param_err, Result};
use crate::grid::{Complex, Grid, RealImage};
use crate::rng::SeededRng;
use crate::scalar::Real;
use crate::spectral::Fft2Plan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhantomKind {
    /// Ten-ellipse head phantom with the high-contrast (Toft) intensities.
    SheppLogan,
    /// Gaussian low-passed white noise, min-max normalized.
    SmoothRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub size: usize,
    pub seed: u64,
}

pub const MIN_PHANTOM_SIZE: usize = 32;

/// `(intensity, semi-axis x, semi-axis y, centre x, centre y, tilt in degrees)`
pub const SHEPP_LOGAN_ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Normalized coordinate of pixel centre `i` on an `n`-pixel axis.
#[inline]
pub fn pixel_center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64 * 2.0 - 1.0
}

/// Phantom value at `(x, y)` in `[-1, 1]^2`, y pointing up.
pub fn shepp_logan_at(x: f64, y: f64) -> f64 {
    let mut v = 0.0;
    for &(a, ax, ay, x0, y0, deg) in &SHEPP_LOGAN_ELLIPSES {
        let phi = deg.to_radians();
        let (s, c) = (libm::sin(phi), libm::cos(phi));
        let (dx, dy) = (x - x0, y - y0);
        let u = dx * c + dy * s;
        let w = -dx * s + dy * c;
        if (u * u) / (ax * ax) + (w * w) / (ay * ay) <= 1.0 {
            v += a;
        }
    }
    v.clamp(0.0, 1.0)
}

pub fn generate_phantom<T: Real>(spec: &PhantomSpec) -> Result<RealImage<T>> {
    let n = spec.size;
    if n < MIN_PHANTOM_SIZE {
        return Err(param_err!("phantom size must be at least {MIN_PHANTOM_SIZE}, got {n}"));
    }
    match spec.kind {
        PhantomKind::SheppLogan => Ok(Grid::from_fn(n, n, |r, c| {
            T::of(shepp_logan_at(pixel_center(c, n), -pixel_center(r, n)))
        })),
        PhantomKind::SmoothRandom => smooth_random(n, spec.seed),
    }
}

fn smooth_random<T: Real>(n: usize, seed: u64) -> Result<RealImage<T>> {
    let mut rng = SeededRng::new(seed);
    let noise: Grid<Complex<f64>> = Grid::from_fn(n, n, |_, _| Complex::new(rng.uniform(-1.0, 1.0), 0.0));
    let plan = Fft2Plan::new(n, n)?;
    let mut k = plan.forward(&noise)?;
    let sigma = n as f64 / 16.0;
    let c = (n / 2) as f64;
    for r in 0..n {
        for col in 0..n {
            let (dy, dx) = (r as f64 - c, col as f64 - c);
            let g = libm::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            let v = k.get(r, col) * g;
            k.set(r, col, v);
        }
    }
    let img = plan.inverse(&k)?.real_part();
    let (lo, hi) = (img.min_value(), img.max_value());
    let span = if hi > lo { hi - lo } else { 1.0 };
    Ok(img.map(|&v| T::of(((v - lo) / span).clamp(0.0, 1.0))))
}
