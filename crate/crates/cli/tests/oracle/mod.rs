//! Direct, unoptimized reference formulas for the acceptance suite. Nothing
//! here calls into the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use kmoco_core::{Complex, ComplexGrid, Grid, RealImage};

/// O(N^4) centered unitary DFT.
pub fn dft2c(g: &ComplexGrid<f64>) -> ComplexGrid<f64> {
    let (h, w) = g.shape();
    let (ch, cw) = ((h / 2) as f64, (w / 2) as f64);
    let scale = 1.0 / ((h * w) as f64).sqrt();
    Grid::from_fn(h, w, |kr, kc| {
        let mut acc = Complex::new(0.0, 0.0);
        for r in 0..h {
            for c in 0..w {
                let ph = -2.0 * PI * ((kr as f64 - ch) * (r as f64 - ch) / h as f64 + (kc as f64 - cw) * (c as f64 - cw) / w as f64);
                acc += g.get(r, c) * Complex::new(ph.cos(), ph.sin());
            }
        }
        acc * scale
    })
}

fn rows(img: &RealImage<f64>, scale: f64) -> Vec<Vec<f64>> {
    (0..img.height()).map(|r| img.row(r).iter().map(|v| v * scale).collect()).collect()
}

fn gauss2(n: usize, sigma: f64) -> Vec<Vec<f64>> {
    let mid = (n as f64 - 1.0) / 2.0;
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (-((i as f64 - mid).powi(2) + (j as f64 - mid).powi(2)) / (2.0 * sigma * sigma)).exp()).collect())
        .collect();
    let s: f64 = raw.iter().flatten().sum();
    raw.into_iter().map(|r| r.into_iter().map(|v| v / s).collect()).collect()
}

/// Weighted means, variances and covariance over the window at `(r, c)`.
fn moments(a: &[Vec<f64>], b: &[Vec<f64>], k: &[Vec<f64>], r: usize, c: usize) -> [f64; 5] {
    let mut m = [0.0; 5];
    for i in 0..k.len() {
        for j in 0..k.len() {
            let (p, q, w) = (a[r + i][c + j], b[r + i][c + j], k[i][j]);
            m[0] += w * p;
            m[1] += w * q;
            m[2] += w * p * p;
            m[3] += w * q * q;
            m[4] += w * p * q;
        }
    }
    [m[0], m[1], m[2] - m[0] * m[0], m[3] - m[1] * m[1], m[4] - m[0] * m[1]]
}

pub fn ssim(x: &RealImage<f64>, y: &RealImage<f64>, range: f64) -> f64 {
    let (a, b) = (rows(x, 1.0), rows(y, 1.0));
    let k = gauss2(11, 1.5);
    let (c1, c2) = ((0.01 * range).powi(2), (0.03 * range).powi(2));
    let (h, w) = (a.len() - 10, a[0].len() - 10);
    let mut acc = 0.0;
    for r in 0..h {
        for c in 0..w {
            let [ma, mb, va, vb, cov] = moments(&a, &b, &k, r, c);
            acc += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    acc / (h * w) as f64
}

/// Zero-filled 2D convolution cropped to the input size, offset (k-1)/2.
fn conv_same(img: &[Vec<f64>], k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (h, w) = (img.len() as isize, img[0].len() as isize);
    let (kh, kw) = (k.len() as isize, k[0].len() as isize);
    let (oh, ow) = ((kh - 1) / 2, (kw - 1) / 2);
    (0..h)
        .map(|r| {
            (0..w)
                .map(|c| {
                    let mut acc = 0.0;
                    for i in 0..kh {
                        for j in 0..kw {
                            let (sr, sc) = (r + oh - i, c + ow - j);
                            if (0..h).contains(&sr) && (0..w).contains(&sc) {
                                acc += k[i as usize][j as usize] * img[sr as usize][sc as usize];
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn haarpsi(x: &RealImage<f64>, y: &RealImage<f64>, range: f64) -> f64 {
    let prep = |img: &RealImage<f64>| -> Vec<Vec<f64>> {
        let f = conv_same(&rows(img, 255.0 / range), &[vec![0.25, 0.25], vec![0.25, 0.25]]);
        f.iter().step_by(2).map(|row| row.iter().step_by(2).copied().collect()).collect()
    };
    let (d, r) = (prep(x), prep(y));
    let coeffs = |img: &Vec<Vec<f64>>| {
        let mut out = Vec::new();
        for transpose in [false, true] {
            for s in 1..=3 {
                let n = 1usize << s;
                let k: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|j| if (if transpose { j } else { i }) < n / 2 { -1.0 } else { 1.0 } / n as f64).collect())
                    .collect();
                out.push(conv_same(img, &k));
            }
        }
        out
    };
    let (cr, cd) = (coeffs(&r), coeffs(&d));
    let sig = |v: f64| 1.0 / (1.0 + (-4.2 * v).exp());
    let (mut num, mut den) = (0.0, 0.0);
    for o in 0..2 {
        for i in 0..r.len() {
            for j in 0..r[0].len() {
                let wgt = cr[3 * o + 2][i][j].abs().max(cd[3 * o + 2][i][j].abs());
                let mut ls = 0.0;
                for s in 0..2 {
                    let (a, b) = (cr[3 * o + s][i][j].abs(), cd[3 * o + s][i][j].abs());
                    ls += (2.0 * a * b + 30.0) / (a * a + b * b + 30.0) / 2.0;
                }
                num += sig(ls) * wgt;
                den += wgt;
            }
        }
    }
    let p = num / den;
    ((p / (1.0 - p)).ln() / 4.2).powi(2)
}

pub fn vif(x: &RealImage<f64>, y: &RealImage<f64>, range: f64) -> f64 {
    let valid = |img: &Vec<Vec<f64>>, k: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let n = k.len();
        (0..img.len() + 1 - n)
            .map(|r| (0..img[0].len() + 1 - n).map(|c| (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| k[i][j] * img[r + i][c + j]).sum()).collect())
            .collect()
    };
    let dec = |img: Vec<Vec<f64>>| -> Vec<Vec<f64>> { img.iter().step_by(2).map(|row| row.iter().step_by(2).copied().collect()).collect() };
    let (mut r, mut d) = (rows(y, 255.0 / range), rows(x, 255.0 / range));
    let (mut num, mut den) = (0.0, 0.0);
    for level in 1..=4 {
        let n = (1usize << (5 - level)) + 1;
        let k = gauss2(n, n as f64 / 5.0);
        if level > 1 {
            if r.len() < n || r[0].len() < n {
                break;
            }
            r = dec(valid(&r, &k));
            d = dec(valid(&d, &k));
        }
        if r.len() < n || r[0].len() < n {
            break;
        }
        for i in 0..r.len() + 1 - n {
            for j in 0..r[0].len() + 1 - n {
                let [_, _, s1, s2, s12] = moments(&r, &d, &k, i, j);
                let (mut s1, s2) = (s1.max(0.0), s2.max(0.0));
                let mut g = s12 / (s1 + 1e-10);
                let mut sv = s2 - g * s12;
                if s1 < 1e-10 {
                    g = 0.0;
                    sv = s2;
                    s1 = 0.0;
                }
                if s2 < 1e-10 {
                    g = 0.0;
                    sv = 0.0;
                }
                if g < 0.0 {
                    sv = s2;
                    g = 0.0;
                }
                let sv = sv.max(1e-10);
                num += (1.0 + g * g * s1 / (sv + 2.0)).log10();
                den += (1.0 + s1 / 2.0).log10();
            }
        }
    }
    num / den
}
