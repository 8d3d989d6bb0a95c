//! Centered, unitary 2D discrete Fourier transform and the complementary
//! low/high-frequency split of k-space.
//!
//! Zero frequency sits at `(H/2, W/2)` (integer division). Both directions
//! scale by `1/sqrt(H*W)`, so the pair preserves energy and pixel-domain and
//! frequency-domain mean squared errors are directly comparable.
//!
//! Transforms run in double precision internally regardless of the grid's
//! element type. Power-of-two lengths use an iterative radix-2 kernel; other
//! lengths go through Bluestein's chirp-z algorithm.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{param_err, size_err, Result};
use crate::grid::{Complex, ComplexGrid, Grid, RealImage};
use crate::scalar::Real;

type C64 = Complex<f64>;

#[derive(Clone, Debug)]
struct Radix2 {
    n: usize,
    twiddles: Vec<C64>,
    bitrev: Vec<u32>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                C64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Self { n, twiddles, bitrev }
    }

    fn forward(&self, buf: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Clone, Debug)]
struct Bluestein {
    n: usize,
    inner: Radix2,
    /// `exp(i*pi*k^2/n)` for `k < n`.
    chirp: Vec<C64>,
    /// Forward transform of the wrapped chirp, pre-divided by the inner length.
    kernel: Vec<C64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        let two_n = 2 * n as u64;
        let chirp: Vec<C64> = (0..n as u64)
            .map(|k| {
                let a = PI * ((k * k) % two_n) as f64 / n as f64;
                C64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let mut kernel = vec![C64::new(0.0, 0.0); m];
        kernel[0] = chirp[0];
        for k in 1..n {
            kernel[k] = chirp[k];
            kernel[m - k] = chirp[k];
        }
        inner.forward(&mut kernel);
        let inv_m = 1.0 / m as f64;
        for v in kernel.iter_mut() {
            *v *= inv_m;
        }
        Self { n, inner, chirp, kernel }
    }

    fn forward(&self, buf: &mut [C64], scratch: &mut Vec<C64>) {
        let m = self.inner.n;
        scratch.clear();
        scratch.resize(m, C64::new(0.0, 0.0));
        for k in 0..self.n {
            scratch[k] = buf[k] * self.chirp[k].conj();
        }
        self.inner.forward(scratch);
        for (s, k) in scratch.iter_mut().zip(&self.kernel) {
            *s *= *k;
        }
        // inverse transform through conjugation
        for s in scratch.iter_mut() {
            *s = s.conj();
        }
        self.inner.forward(scratch);
        for k in 0..self.n {
            buf[k] = scratch[k].conj() * self.chirp[k].conj();
        }
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// Precomputed 1D transform of a fixed length.
#[derive(Clone, Debug)]
struct Fft1d {
    n: usize,
    kernel: Kernel,
}

impl Fft1d {
    fn new(n: usize) -> Self {
        let kernel = if n.is_power_of_two() {
            Kernel::Radix2(Radix2::new(n))
        } else {
            Kernel::Bluestein(Bluestein::new(n))
        };
        Self { n, kernel }
    }

    fn forward(&self, buf: &mut [C64], scratch: &mut Vec<C64>) {
        match &self.kernel {
            Kernel::Radix2(k) => k.forward(buf),
            Kernel::Bluestein(k) => k.forward(buf, scratch),
        }
    }

    /// Centered transform of `line` in place: inverse shift, DFT, forward shift.
    fn centered(&self, line: &mut [C64], tmp: &mut Vec<C64>, scratch: &mut Vec<C64>, inverse: bool) {
        let n = self.n;
        let c = n / 2;
        tmp.clear();
        tmp.extend((0..n).map(|m| {
            let v = line[(m + c) % n];
            if inverse {
                v.conj()
            } else {
                v
            }
        }));
        self.forward(tmp, scratch);
        for k in 0..n {
            let v = tmp[(k + n - c) % n];
            line[k] = if inverse { v.conj() } else { v };
        }
    }
}

/// Reusable centered unitary 2D transform for one grid size.
///
/// Read-only after construction; share freely between jobs of the same size.
#[derive(Clone, Debug)]
pub struct Fft2Plan {
    height: usize,
    width: usize,
    rows: Fft1d,
    cols: Fft1d,
}

impl Fft2Plan {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(size_err!("transform needs at least 2x2 samples, got {height}x{width}"));
        }
        Ok(Self { height, width, rows: Fft1d::new(width), cols: Fft1d::new(height) })
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn forward<T: Real>(&self, g: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
        self.run(g.data().iter().map(|z| C64::new(z.re.as_f64(), z.im.as_f64())), g.shape(), false)
    }

    pub fn forward_real<T: Real>(&self, img: &RealImage<T>) -> Result<ComplexGrid<T>> {
        self.run(img.data().iter().map(|v| C64::new(v.as_f64(), 0.0)), img.shape(), false)
    }

    pub fn inverse<T: Real>(&self, g: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
        self.run(g.data().iter().map(|z| C64::new(z.re.as_f64(), z.im.as_f64())), g.shape(), true)
    }

    fn run<T: Real>(
        &self,
        input: impl Iterator<Item = C64>,
        shape: (usize, usize),
        inverse: bool,
    ) -> Result<ComplexGrid<T>> {
        if shape != (self.height, self.width) {
            return Err(size_err!(
                "plan is {}x{} but grid is {}x{}",
                self.height,
                self.width,
                shape.0,
                shape.1
            ));
        }
        let (h, w) = shape;
        let mut buf: Vec<C64> = input.collect();
        let mut tmp = Vec::with_capacity(h.max(w));
        let mut scratch = Vec::new();
        for row in buf.chunks_exact_mut(w) {
            self.rows.centered(row, &mut tmp, &mut scratch, inverse);
        }
        let mut col = vec![C64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                col[r] = buf[r * w + c];
            }
            self.cols.centered(&mut col, &mut tmp, &mut scratch, inverse);
            for r in 0..h {
                buf[r * w + c] = col[r];
            }
        }
        let scale = 1.0 / libm::sqrt((h * w) as f64);
        let data = buf.iter().map(|z| Complex::new(T::of(z.re * scale), T::of(z.im * scale))).collect();
        Grid::from_vec(h, w, data)
    }
}

/// Grids accepted by the forward transform.
pub trait SpectralInput<T: Real> {
    fn forward_with(&self, plan: &Fft2Plan) -> Result<ComplexGrid<T>>;
    fn grid_shape(&self) -> (usize, usize);
}

impl<T: Real> SpectralInput<T> for RealImage<T> {
    fn forward_with(&self, plan: &Fft2Plan) -> Result<ComplexGrid<T>> {
        plan.forward_real(self)
    }
    fn grid_shape(&self) -> (usize, usize) {
        self.shape()
    }
}

impl<T: Real> SpectralInput<T> for ComplexGrid<T> {
    fn forward_with(&self, plan: &Fft2Plan) -> Result<ComplexGrid<T>> {
        plan.forward(self)
    }
    fn grid_shape(&self) -> (usize, usize) {
        self.shape()
    }
}

/// Centered unitary forward transform.
pub fn fft2c<T: Real, G: SpectralInput<T>>(g: &G) -> Result<ComplexGrid<T>> {
    let (h, w) = g.grid_shape();
    g.forward_with(&Fft2Plan::new(h, w)?)
}

/// Exact inverse of [`fft2c`].
pub fn ifft2c<T: Real>(f: &ComplexGrid<T>) -> Result<ComplexGrid<T>> {
    Fft2Plan::new(f.height(), f.width())?.inverse(f)
}

/// Hard centered rectangular window selecting the low-frequency block of k-space.
#[derive(Clone, Debug, PartialEq)]
pub struct LowpassWindow {
    height: usize,
    width: usize,
    fraction: f64,
    row_range: (usize, usize),
    col_range: (usize, usize),
}

fn centered_span(n: usize, fraction: f64) -> (usize, usize) {
    let size = (libm::round(fraction * n as f64) as usize).clamp(1, n);
    let start = (n / 2).saturating_sub(size / 2).min(n - size);
    (start, start + size)
}

impl LowpassWindow {
    /// `fraction` of each axis is kept; must lie in `(0, 1]`.
    pub fn new(height: usize, width: usize, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(param_err!("low-pass fraction must be in (0, 1], got {fraction}"));
        }
        Ok(Self {
            height,
            width,
            fraction,
            row_range: centered_span(height, fraction),
            col_range: centered_span(width, fraction),
        })
    }

    #[inline]
    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    #[inline]
    pub fn contains(&self, r: usize, c: usize) -> bool {
        (self.row_range.0..self.row_range.1).contains(&r) && (self.col_range.0..self.col_range.1).contains(&c)
    }

    /// The window as a 0/1 grid.
    pub fn to_grid<T: Real>(&self) -> RealImage<T> {
        Grid::from_fn(self.height, self.width, |r, c| if self.contains(r, c) { T::one() } else { T::zero() })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Complementary split into the windowed low band and the remainder.
pub fn split_low_high<T: Real>(
    f: &ComplexGrid<T>,
    fraction: f64,
) -> Result<(ComplexGrid<T>, ComplexGrid<T>)> {
    let window = LowpassWindow::new(f.height(), f.width(), fraction)?;
    Ok(split_with(f, &window))
}

pub(crate) fn split_with<T: Real>(f: &ComplexGrid<T>, window: &LowpassWindow) -> (ComplexGrid<T>, ComplexGrid<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let low = Grid::from_fn(f.height(), f.width(), |r, c| if window.contains(r, c) { f.get(r, c) } else { zero });
    let high = Grid::from_fn(f.height(), f.width(), |r, c| if window.contains(r, c) { zero } else { f.get(r, c) });
    (low, high)
}
