//! Dense row-major 2D grids for image intensities and k-space samples, and
//! the per-line binary mask that selects motion-corrupted acquisition lines.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

pub use num_complex::Complex;

use crate::error::{size_err, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<E> {
    height: usize,
    width: usize,
    data: Vec<E>,
}

/// Image-domain intensities, nominally in `[0, 1]`.
pub type RealImage<T> = Grid<T>;
/// Centered k-space samples.
pub type ComplexGrid<T> = Grid<Complex<T>>;

impl<E: Copy> Grid<E> {
    pub fn from_vec(height: usize, width: usize, data: Vec<E>) -> Result<Self> {
        if data.len() != height * width {
            return Err(size_err!(
                "grid data has {} elements, expected {}x{}",
                data.len(),
                height,
                width
            ));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: E) -> Self {
        Self { height, width, data: vec![value; height * width] }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[E] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> E {
        self.data[r * self.width + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: E) {
        self.data[r * self.width + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[E] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [E] {
        &mut self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn map<F: Copy>(&self, f: impl FnMut(&E) -> F) -> Grid<F> {
        Grid { height: self.height, width: self.width, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<B: Copy, F: Copy>(
        &self,
        other: &Grid<B>,
        mut f: impl FnMut(E, B) -> F,
    ) -> Result<Grid<F>> {
        self.check_shape(other.shape())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Grid { height: self.height, width: self.width, data })
    }

    pub fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(size_err!(
                "grid shape {}x{} does not match {}x{}",
                self.height,
                self.width,
                shape.0,
                shape.1
            ));
        }
        Ok(())
    }
}

impl<T: Real> Grid<T> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, T::zero())
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self::filled(height, width, T::one())
    }

    pub fn to_complex(&self) -> ComplexGrid<T> {
        self.map(|&v| Complex::new(v, T::zero()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn cast<U: Real>(&self) -> Grid<U> {
        self.map(|&v| U::of(v.as_f64()))
    }
}

impl<T: Real> Grid<Complex<T>> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, Complex::new(T::zero(), T::zero()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Per-element complex modulus.
    pub fn magnitude(&self) -> RealImage<T> {
        self.map(|z| z.norm())
    }

    pub fn real_part(&self) -> RealImage<T> {
        self.map(|z| z.re)
    }

    pub fn cast<U: Real>(&self) -> Grid<Complex<U>> {
        self.map(|z| Complex::new(U::of(z.re.as_f64()), U::of(z.im.as_f64())))
    }

    /// Sum of squared moduli.
    pub fn energy(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Binary elementwise operations on grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementOp {
    Add,
    Sub,
    Mul,
}

pub trait GridElement: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {}
impl<E: Copy + Add<Output = E> + Sub<Output = E> + Mul<Output = E>> GridElement for E {}

#[inline]
fn apply<E: GridElement>(op: ElementOp, a: E, b: E) -> E {
    match op {
        ElementOp::Add => a + b,
        ElementOp::Sub => a - b,
        ElementOp::Mul => a * b,
    }
}

/// Same-type elementwise arithmetic; shapes must agree.
pub fn elementwise<E: GridElement>(op: ElementOp, a: &Grid<E>, b: &Grid<E>) -> Result<Grid<E>> {
    a.zip_map(b, |x, y| apply(op, x, y))
}

/// Complex-by-real elementwise arithmetic with the real operand promoted.
///
/// Multiplication scales both components, so multiplying by a 0/1 mask is exact.
pub fn elementwise_mixed<T: Real>(
    op: ElementOp,
    a: &ComplexGrid<T>,
    b: &RealImage<T>,
) -> Result<ComplexGrid<T>> {
    a.zip_map(b, |z, r| match op {
        ElementOp::Add => Complex::new(z.re + r, z.im),
        ElementOp::Sub => Complex::new(z.re - r, z.im),
        ElementOp::Mul => Complex::new(z.re * r, z.im * r),
    })
}

/// Which grid axis indexes acquisition lines.
///
/// `Rows` means every k-space row is one phase-encode line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LineAxis {
    #[default]
    Rows,
    Cols,
}

impl LineAxis {
    /// Number of lines a `height x width` grid has along this axis.
    pub fn line_count(self, height: usize, width: usize) -> usize {
        match self {
            LineAxis::Rows => height,
            LineAxis::Cols => width,
        }
    }

    /// Length of each line.
    pub fn line_length(self, height: usize, width: usize) -> usize {
        match self {
            LineAxis::Rows => width,
            LineAxis::Cols => height,
        }
    }

    #[inline]
    pub fn line_of(self, r: usize, c: usize) -> usize {
        match self {
            LineAxis::Rows => r,
            LineAxis::Cols => c,
        }
    }

    #[inline]
    pub(crate) fn index(self, width: usize, line: usize, pos: usize) -> usize {
        match self {
            LineAxis::Rows => line * width + pos,
            LineAxis::Cols => pos * width + line,
        }
    }
}

/// One bit per acquisition line; `true` marks a motion-corrupted line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KLineMask {
    axis: LineAxis,
    bits: Vec<bool>,
}

impl KLineMask {
    pub fn new(axis: LineAxis, bits: Vec<bool>) -> Self {
        Self { axis, bits }
    }

    pub fn empty(axis: LineAxis, len: usize) -> Self {
        Self { axis, bits: vec![false; len] }
    }

    pub fn full(axis: LineAxis, len: usize) -> Self {
        Self { axis, bits: vec![true; len] }
    }

    pub fn from_fn(axis: LineAxis, len: usize, f: impl FnMut(usize) -> bool) -> Self {
        Self { axis, bits: (0..len).map(f).collect() }
    }

    #[inline]
    pub fn axis(&self) -> LineAxis {
        self.axis
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn is_flagged(&self, line: usize) -> bool {
        self.bits[line]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Bitwise complement on the same axis.
    pub fn complement(&self) -> Self {
        Self { axis: self.axis, bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Errors unless the mask has one bit per line of a `height x width` grid.
    pub fn check_grid(&self, height: usize, width: usize) -> Result<()> {
        let expected = self.axis.line_count(height, width);
        if self.bits.len() != expected {
            return Err(size_err!(
                "mask has {} lines but a {}x{} grid has {} along {:?}",
                self.bits.len(),
                height,
                width,
                expected,
                self.axis
            ));
        }
        Ok(())
    }

    /// Whether the element at `(r, c)` lies on a flagged line.
    #[inline]
    pub fn covers(&self, r: usize, c: usize) -> bool {
        self.bits[self.axis.line_of(r, c)]
    }
}

/// Expand a line mask to a full 0/1 grid.
pub fn broadcast_mask<T: Real>(mask: &KLineMask, height: usize, width: usize) -> Result<RealImage<T>> {
    mask.check_grid(height, width)?;
    Ok(Grid::from_fn(height, width, |r, c| if mask.covers(r, c) { T::one() } else { T::zero() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn broadcast_empty_and_full() {
        let z: RealImage<f64> = broadcast_mask(&KLineMask::empty(LineAxis::Rows, 4), 4, 4).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let o: RealImage<f64> = broadcast_mask(&KLineMask::full(LineAxis::Rows, 4), 4, 4).unwrap();
        assert!(o.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn broadcast_rows_pattern() {
        let mask = KLineMask::new(LineAxis::Rows, alloc::vec![false, true, false, true]);
        let g: RealImage<f64> = broadcast_mask(&mask, 4, 3).unwrap();
        for r in 0..4 {
            for c in 0..3 {
                let expected = if r == 1 || r == 3 { 1.0 } else { 0.0 };
                assert_eq!(g.get(r, c), expected);
            }
        }
    }

    #[test]
    fn broadcast_cols_pattern() {
        let mask = KLineMask::new(LineAxis::Cols, alloc::vec![true, false, false]);
        let g: RealImage<f32> = broadcast_mask(&mask, 2, 3).unwrap();
        assert_eq!(g.data(), &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn broadcast_rejects_wrong_length() {
        let mask = KLineMask::empty(LineAxis::Rows, 3);
        assert!(matches!(broadcast_mask::<f64>(&mask, 4, 4), Err(crate::Error::Size(_))));
    }

    #[test]
    fn elementwise_shape_mismatch() {
        let a = RealImage::<f64>::zeros(2, 3);
        let b = RealImage::<f64>::zeros(3, 2);
        assert!(elementwise(ElementOp::Add, &a, &b).is_err());
    }

    #[test]
    fn magnitude_of_three_four() {
        let g = ComplexGrid::<f64>::filled(3, 3, Complex::new(3.0, 4.0));
        assert!(g.magnitude().data().iter().all(|&v| v == 5.0));
        assert!(ComplexGrid::<f64>::zeros(2, 2).magnitude().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn magnitude_matches_scalar_oracle() {
        let g = ComplexGrid::<f64>::from_fn(7, 5, |r, c| {
            Complex::new((r as f64 * 0.37).sin() * 3.0, (c as f64 * 1.3 - r as f64).cos() * 2.0)
        });
        let m = g.magnitude();
        for (z, v) in g.data().iter().zip(m.data()) {
            let oracle = (z.re * z.re + z.im * z.im).sqrt();
            assert!((oracle - v).abs() <= 1e-12);
        }
    }

    fn grid_strategy() -> impl Strategy<Value = (ComplexGrid<f64>, KLineMask)> {
        (1usize..9, 1usize..9).prop_flat_map(|(h, w)| {
            (
                proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), h * w),
                proptest::collection::vec(any::<bool>(), h),
            )
                .prop_map(move |(vals, bits)| {
                    let data = vals.into_iter().map(|(a, b)| Complex::new(a, b)).collect();
                    (Grid::from_vec(h, w, data).unwrap(), KLineMask::new(LineAxis::Rows, bits))
                })
        })
    }

    proptest! {
        #[test]
        fn mask_partition_identity((f, m) in grid_strategy()) {
            let (h, w) = f.shape();
            let mm: RealImage<f64> = broadcast_mask(&m, h, w).unwrap();
            let inv: RealImage<f64> = broadcast_mask(&m.complement(), h, w).unwrap();
            let a = elementwise_mixed(ElementOp::Mul, &f, &mm).unwrap();
            let b = elementwise_mixed(ElementOp::Mul, &f, &inv).unwrap();
            let sum = elementwise(ElementOp::Add, &a, &b).unwrap();
            prop_assert_eq!(sum, f);
            prop_assert!(mm.data().iter().all(|&v| v == 0.0 || v == 1.0));
        }

        #[test]
        fn elementwise_identities(vals in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let x = Grid::from_vec(3, 4, vals).unwrap();
            let ones = RealImage::<f64>::ones(3, 4);
            prop_assert_eq!(elementwise(ElementOp::Mul, &x, &ones).unwrap(), x.clone());
            let diff = elementwise(ElementOp::Sub, &x, &x).unwrap();
            prop_assert!(diff.data().iter().all(|&v| v == 0.0));
            let y = x.map(|v| v * 0.5 - 3.0);
            prop_assert_eq!(
                elementwise(ElementOp::Add, &x, &y).unwrap(),
                elementwise(ElementOp::Add, &y, &x).unwrap()
            );
        }
    }
}
