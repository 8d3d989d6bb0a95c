use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{param_err, size_err, Error, Result};
use crate::scalar::Real;

/// A named contiguous range of the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

impl ParamBlock {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Ordered, gap-free list of parameter blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamLayout {
    blocks: Vec<ParamBlock>,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild from blocks read back from a checkpoint; they must tile `0..total`.
    pub fn from_blocks(blocks: Vec<ParamBlock>) -> Result<Self> {
        let mut at = 0;
        for b in &blocks {
            if b.offset != at {
                return Err(param_err!("block `{}` starts at {} but {} was expected", b.name, b.offset, at));
            }
            at += b.len;
        }
        let mut names: Vec<&str> = blocks.iter().map(|b| b.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(param_err!("duplicate block names in layout"));
        }
        Ok(Self { blocks })
    }

    /// Append a block and return its range.
    pub fn push(&mut self, name: impl Into<String>, len: usize) -> Range<usize> {
        let offset = self.total();
        self.blocks.push(ParamBlock { name: name.into(), offset, len });
        offset..offset + len
    }

    pub fn total(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len)
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn get(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub(crate) fn range(&self, name: &str) -> Result<Range<usize>> {
        self.get(name)
            .map(ParamBlock::range)
            .ok_or_else(|| Error::State(alloc::format!("layout has no block `{name}`")))
    }
}

/// Flat learnable state of both networks.
#[derive(Clone, Debug, PartialEq)]
pub struct InrParams<T> {
    pub layout: ParamLayout,
    pub values: Vec<T>,
}

impl<T: Real> InrParams<T> {
    pub fn zeros(layout: ParamLayout) -> Self {
        let values = vec![T::zero(); layout.total()];
        Self { layout, values }
    }

    pub fn from_values(layout: ParamLayout, values: Vec<T>) -> Result<Self> {
        if values.len() != layout.total() {
            return Err(size_err!("layout expects {} values, got {}", layout.total(), values.len()));
        }
        Ok(Self { layout, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.values.len() != self.layout.total() || self.layout.total() == 0 {
            return Err(Error::State(alloc::format!(
                "parameters not initialized: {} values for a layout of {}",
                self.values.len(),
                self.layout.total()
            )));
        }
        Ok(())
    }

    pub fn block(&self, name: &str) -> Result<&[T]> {
        Ok(&self.values[self.layout.range(name)?])
    }

    pub fn block_mut(&mut self, name: &str) -> Result<&mut [T]> {
        let r = self.layout.range(name)?;
        Ok(&mut self.values[r])
    }

    pub fn cast<U: Real>(&self) -> InrParams<U> {
        InrParams { layout: self.layout.clone(), values: self.values.iter().map(|v| U::of(v.as_f64())).collect() }
    }
}

/// Gradient of a scalar loss, aligned with an [`InrParams`] layout.
#[derive(Clone, Debug, PartialEq)]
pub struct GradVector<T> {
    pub values: Vec<T>,
}

impl<T: Real> GradVector<T> {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![T::zero(); len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}
