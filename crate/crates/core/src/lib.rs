//! Correction of rigid-motion artifacts in 2D Cartesian MR k-space by
//! per-image fitting of coordinate networks under a dual-domain loss.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command-line
//! driver live in the companion `kmoco` crate.

#![no_std]
#![cfg_attr(docsrs, feature(doc_cfg))]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

mod error;
pub mod grid;
pub mod rng;
mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{
    broadcast_mask, elementwise, elementwise_mixed, Complex, ComplexGrid, ElementOp, Grid, KLineMask,
    LineAxis, RealImage,
};
pub use scalar::Real;
pub use spectral::{fft2c, ifft2c, split_low_high, Fft2Plan, LowpassWindow};
pub mod motion;
pub mod phantom;
pub mod mask;
pub mod inr;
pub mod ddo;
pub mod metrics;
