//! `DDT1` tensor files: magic, dtype byte (0 real f32, 1 complex f32 pairs),
//! little-endian u32 height and width, then row-major little-endian payload.

use std::fs;
use std::path::Path;

use kmoco_core::{Complex, ComplexGrid, Grid, KLineMask, LineAxis, RealImage};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"DDT1";
const HEADER_LEN: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    Real = 0,
    Complex = 1,
}

impl DType {
    fn bytes_per_value(self) -> usize {
        match self {
            DType::Real => 4,
            DType::Complex => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tensor {
    Real(RealImage<f32>),
    Complex(ComplexGrid<f32>),
}

impl Tensor {
    pub fn dtype(&self) -> DType {
        match self {
            Tensor::Real(_) => DType::Real,
            Tensor::Complex(_) => DType::Complex,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Tensor::Real(g) => g.shape(),
            Tensor::Complex(g) => g.shape(),
        }
    }
}

pub fn encode(t: &Tensor) -> Vec<u8> {
    let (h, w) = t.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + h * w * t.dtype().bytes_per_value());
    out.extend_from_slice(MAGIC);
    out.push(t.dtype() as u8);
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    match t {
        Tensor::Real(g) => g.data().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Tensor::Complex(g) => g.data().iter().for_each(|z| {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }),
    }
    out
}

/// Parse a DDT buffer; `origin` only labels errors.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<Tensor> {
    let bad = |msg: String| CliError::format(origin, msg);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the DDT header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing DDT1 magic".into()));
    }
    let dtype = match bytes[4] {
        0 => DType::Real,
        1 => DType::Complex,
        d => return Err(bad(format!("unknown dtype byte {d}"))),
    };
    let h = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let want = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(dtype.bytes_per_value()))
        .ok_or_else(|| bad(format!("shape {h}x{w} overflows")))?;
    if payload.len() != want {
        return Err(bad(format!("payload is {} bytes, {h}x{w} {dtype:?} needs {want}", payload.len())));
    }
    let floats: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(match dtype {
        DType::Real => Tensor::Real(Grid::from_vec(h, w, floats)?),
        DType::Complex => {
            let data = floats.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect();
            Tensor::Complex(Grid::from_vec(h, w, data)?)
        }
    })
}

pub fn write(path: &Path, t: &Tensor) -> Result<()> {
    fs::write(path, encode(t)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes, path)
}

pub fn read_real(path: &Path) -> Result<RealImage<f32>> {
    match read(path)? {
        Tensor::Real(g) => Ok(g),
        Tensor::Complex(_) => Err(CliError::format(path, "expected a real tensor, found complex")),
    }
}

pub fn read_complex(path: &Path) -> Result<ComplexGrid<f32>> {
    match read(path)? {
        Tensor::Complex(g) => Ok(g),
        Tensor::Real(_) => Err(CliError::format(path, "expected a complex tensor, found real")),
    }
}

/// Line mask as a 1 x L real tensor of 0/1.
pub fn mask_tensor(mask: &KLineMask) -> Tensor {
    let bits = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Tensor::Real(Grid::from_vec(1, mask.len(), bits).expect("1 x L"))
}

pub fn read_mask(path: &Path, axis: LineAxis) -> Result<KLineMask> {
    let g = read_real(path)?;
    if g.height() != 1 {
        return Err(CliError::format(path, format!("mask must be 1 x L, found {}x{}", g.height(), g.width())));
    }
    let mut bits = Vec::with_capacity(g.width());
    for &v in g.data() {
        bits.push(match v {
            0.0 => false,
            1.0 => true,
            _ => return Err(CliError::format(path, format!("mask entries must be 0 or 1, found {v}"))),
        });
    }
    Ok(KLineMask::new(axis, bits))
}
