//! Full-reference image quality: PSNR, SSIM, HaarPSI and pixel-domain VIF.
//!
//! All metrics compute in f64 regardless of the image precision.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param_err, size_err, Result};
use crate::grid::RealImage;
use crate::scalar::Real;

pub const PSNR_CAP_DB: f64 = 200.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const HAARPSI_C: f64 = 30.0;
pub const HAARPSI_ALPHA: f64 = 4.2;
pub const HAARPSI_MIN_SIDE: usize = 8;
pub const VIF_SIGMA_NSQ: f64 = 2.0;
pub const VIF_MIN_SIDE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub haarpsi: f64,
    /// Pixel-domain VIF.
    pub vif: f64,
    pub data_range: f64,
}

impl MetricReport {
    pub fn compute<T: Real>(x: &RealImage<T>, reference: &RealImage<T>, data_range: f64) -> Result<Self> {
        Ok(Self {
            psnr: psnr(x, reference, data_range)?,
            ssim: ssim(x, reference, data_range)?,
            haarpsi: haarpsi(x, reference, data_range)?,
            vif: vif(x, reference, data_range)?,
            data_range,
        })
    }
}

/// Row-major f64 plane.
#[derive(Clone, Debug)]
struct Plane {
    h: usize,
    w: usize,
    v: Vec<f64>,
}

impl Plane {
    fn of<T: Real>(img: &RealImage<T>, scale: f64) -> Self {
        Self { h: img.height(), w: img.width(), v: img.data().iter().map(|x| x.as_f64() * scale).collect() }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.v[r * self.w + c]
    }

    fn zip(&self, o: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        Plane { h: self.h, w: self.w, v: self.v.iter().zip(&o.v).map(|(a, b)| f(*a, *b)).collect() }
    }

    /// Separable correlation with `k` along both axes, keeping only full overlaps.
    fn filter_valid(&self, k: &[f64]) -> Plane {
        let n = k.len();
        let (h, w) = (self.h + 1 - n, self.w + 1 - n);
        let mut tmp = vec![0.0; self.h * w];
        for r in 0..self.h {
            let row = &self.v[r * self.w..(r + 1) * self.w];
            for c in 0..w {
                tmp[r * w + c] = k.iter().zip(&row[c..c + n]).map(|(a, b)| a * b).sum();
            }
        }
        let mut v = vec![0.0; h * w];
        for r in 0..h {
            for c in 0..w {
                v[r * w + c] = (0..n).map(|i| k[i] * tmp[(r + i) * w + c]).sum();
            }
        }
        Plane { h, w, v }
    }

    /// Zero-filled convolution with `col[i] * row[j]`, cropped to the input size
    /// with the full-output offset `(len - 1) / 2`.
    fn convolve_same(&self, col: &[f64], row: &[f64]) -> Plane {
        let conv1 = |get: &dyn Fn(isize) -> f64, n: usize, k: &[f64], i: usize| -> f64 {
            let off = (k.len() - 1) / 2;
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                let src = (i + off) as isize - j as isize;
                if src >= 0 && (src as usize) < n {
                    acc += kj * get(src);
                }
            }
            acc
        };
        let mut tmp = vec![0.0; self.h * self.w];
        for r in 0..self.h {
            for c in 0..self.w {
                tmp[r * self.w + c] = conv1(&|s| self.v[r * self.w + s as usize], self.w, row, c);
            }
        }
        let mut v = vec![0.0; self.h * self.w];
        for r in 0..self.h {
            for c in 0..self.w {
                v[r * self.w + c] = conv1(&|s| tmp[s as usize * self.w + c], self.h, col, r);
            }
        }
        Plane { h: self.h, w: self.w, v }
    }

    fn decimate(&self) -> Plane {
        let (h, w) = (self.h.div_ceil(2), self.w.div_ceil(2));
        let mut v = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                v.push(self.at(2 * r, 2 * c));
            }
        }
        Plane { h, w, v }
    }
}

fn check_pair<T: Real>(x: &RealImage<T>, reference: &RealImage<T>, min_side: usize) -> Result<()> {
    x.check_shape(reference.shape())?;
    if x.height().min(x.width()) < min_side {
        return Err(size_err!("images are {}x{}, need at least {min_side} per side", x.height(), x.width()));
    }
    Ok(())
}

fn check_range(range: f64) -> Result<()> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(param_err!("data range must be positive, got {range}"));
    }
    Ok(())
}

/// Normalized 1D Gaussian of length `n`.
fn gaussian(n: usize, sigma: f64) -> Vec<f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    let k: Vec<f64> = (0..n).map(|i| {
        let d = i as f64 - mid;
        libm::exp(-d * d / (2.0 * sigma * sigma))
    }).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// `10 log10(range^2 / mse)`, capped at 200 dB.
pub fn psnr<T: Real>(x: &RealImage<T>, reference: &RealImage<T>, range: f64) -> Result<f64> {
    x.check_shape(reference.shape())?;
    check_range(range)?;
    let mse = x.data().iter().zip(reference.data()).map(|(a, b)| {
        let d = a.as_f64() - b.as_f64();
        d * d
    }).sum::<f64>() / x.len() as f64;
    if mse < range * range * 1e-20 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * libm::log10(range * range / mse)).min(PSNR_CAP_DB))
}

/// Mean local SSIM over all full 11x11 Gaussian windows.
pub fn ssim<T: Real>(x: &RealImage<T>, reference: &RealImage<T>, range: f64) -> Result<f64> {
    check_pair(x, reference, SSIM_WINDOW)?;
    check_range(range)?;
    let k = gaussian(SSIM_WINDOW, SSIM_SIGMA);
    let a = Plane::of(x, 1.0);
    let b = Plane::of(reference, 1.0);
    let mu_a = a.filter_valid(&k);
    let mu_b = b.filter_valid(&k);
    let aa = a.zip(&a, |p, q| p * q).filter_valid(&k);
    let bb = b.zip(&b, |p, q| p * q).filter_valid(&k);
    let ab = a.zip(&b, |p, q| p * q).filter_valid(&k);
    let c1 = (SSIM_K1 * range) * (SSIM_K1 * range);
    let c2 = (SSIM_K2 * range) * (SSIM_K2 * range);
    let mut total = 0.0;
    for i in 0..mu_a.v.len() {
        let (ma, mb) = (mu_a.v[i], mu_b.v[i]);
        let va = aa.v[i] - ma * ma;
        let vb = bb.v[i] - mb * mb;
        let cov = ab.v[i] - ma * mb;
        let num = (2.0 * (ma * mb) + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        total += num / den;
    }
    Ok(total / mu_a.v.len() as f64)
}

fn haar_decompose(p: &Plane, scales: usize) -> Vec<Plane> {
    let mut out = Vec::with_capacity(2 * scales);
    let mut vertical = Vec::with_capacity(scales);
    for k in 1..=scales {
        let n = 1usize << k;
        let amp = libm::pow(2.0, -(k as f64));
        let signed: Vec<f64> = (0..n).map(|i| if i < n / 2 { -amp } else { amp }).collect();
        let ones = vec![1.0; n];
        out.push(p.convolve_same(&signed, &ones));
        vertical.push(p.convolve_same(&ones, &signed));
    }
    out.extend(vertical);
    out
}

fn sigmoid(x: f64, a: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-a * x))
}

fn logit(x: f64, a: f64) -> f64 {
    libm::log(x / (1.0 - x)) / a
}

/// Haar-wavelet perceptual similarity (grayscale form), computed on the
/// 0-255 scale after a 2x2 mean-and-decimate step.
pub fn haarpsi<T: Real>(x: &RealImage<T>, reference: &RealImage<T>, range: f64) -> Result<f64> {
    check_pair(x, reference, HAARPSI_MIN_SIDE)?;
    check_range(range)?;
    let scale = 255.0 / range;
    let quarter = [0.5, 0.5];
    let r = Plane::of(reference, scale).convolve_same(&quarter, &quarter).decimate();
    let d = Plane::of(x, scale).convolve_same(&quarter, &quarter).decimate();
    const SCALES: usize = 3;
    let cr = haar_decompose(&r, SCALES);
    let cd = haar_decompose(&d, SCALES);
    let (mut num, mut den) = (0.0, 0.0);
    for ori in 0..2 {
        let base = ori * SCALES;
        for i in 0..r.v.len() {
            let weight = cr[base + 2].v[i].abs().max(cd[base + 2].v[i].abs());
            let mut local = 0.0;
            for s in 0..2 {
                let (a, b) = (cr[base + s].v[i].abs(), cd[base + s].v[i].abs());
                local += (2.0 * a * b + HAARPSI_C) / (a * a + b * b + HAARPSI_C);
            }
            num += sigmoid(local / 2.0, HAARPSI_ALPHA) * weight;
            den += weight;
        }
    }
    if den == 0.0 {
        return Ok(1.0);
    }
    let v = logit(num / den, HAARPSI_ALPHA);
    Ok(v * v)
}

/// Pixel-domain visual information fidelity over a four-level Gaussian
/// pyramid (windows 17, 9, 5, 3 with sigma = size / 5). Levels whose valid
/// region is empty contribute nothing.
pub fn vif<T: Real>(x: &RealImage<T>, reference: &RealImage<T>, range: f64) -> Result<f64> {
    check_pair(x, reference, VIF_MIN_SIDE)?;
    check_range(range)?;
    let scale = 255.0 / range;
    let mut r = Plane::of(reference, scale);
    let mut d = Plane::of(x, scale);
    let (mut num, mut den) = (0.0, 0.0);
    for level in 1..=4u32 {
        let n = (1usize << (5 - level)) + 1;
        let k = gaussian(n, n as f64 / 5.0);
        if level > 1 {
            if r.h < n || r.w < n {
                break;
            }
            r = r.filter_valid(&k).decimate();
            d = d.filter_valid(&k).decimate();
        }
        if r.h < n || r.w < n {
            break;
        }
        let mu1 = r.filter_valid(&k);
        let mu2 = d.filter_valid(&k);
        let s11 = r.zip(&r, |a, b| a * b).filter_valid(&k);
        let s22 = d.zip(&d, |a, b| a * b).filter_valid(&k);
        let s12 = r.zip(&d, |a, b| a * b).filter_valid(&k);
        for i in 0..mu1.v.len() {
            let (m1, m2) = (mu1.v[i], mu2.v[i]);
            let mut sigma1 = (s11.v[i] - m1 * m1).max(0.0);
            let sigma2 = (s22.v[i] - m2 * m2).max(0.0);
            let sigma12 = s12.v[i] - m1 * m2;
            let mut g = sigma12 / (sigma1 + 1e-10);
            let mut sv = sigma2 - g * sigma12;
            if sigma1 < 1e-10 {
                g = 0.0;
                sv = sigma2;
                sigma1 = 0.0;
            }
            if sigma2 < 1e-10 {
                g = 0.0;
                sv = 0.0;
            }
            if g < 0.0 {
                sv = sigma2;
                g = 0.0;
            }
            if sv <= 1e-10 {
                sv = 1e-10;
            }
            num += libm::log10(1.0 + g * g * sigma1 / (sv + VIF_SIGMA_NSQ));
            den += libm::log10(1.0 + sigma1 / VIF_SIGMA_NSQ);
        }
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(num / den)
}
