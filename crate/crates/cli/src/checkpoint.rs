//! Checkpoints: u32 LE length of the layout JSON, the JSON, then the
//! parameter vector as f32 LE.

use std::fs;
use std::path::Path;

use kmoco_core::inr::{InrParams, ParamBlock, ParamLayout};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Serialize, Deserialize)]
struct BlockJson {
    name: String,
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct LayoutJson {
    total: usize,
    blocks: Vec<BlockJson>,
}

pub fn encode(params: &InrParams<f32>) -> Vec<u8> {
    let layout = LayoutJson {
        total: params.layout.total(),
        blocks: params
            .layout
            .blocks()
            .iter()
            .map(|b| BlockJson { name: b.name.clone(), offset: b.offset, len: b.len })
            .collect(),
    };
    let json = serde_json::to_vec(&layout).expect("plain data");
    let mut out = Vec::with_capacity(4 + json.len() + 4 * params.len());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    params.values.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    out
}

pub fn decode(bytes: &[u8], origin: &Path) -> Result<InrParams<f32>> {
    let bad = |msg: String| CliError::format(origin, msg);
    if bytes.len() < 4 {
        return Err(bad("truncated checkpoint header".into()));
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    let json = bytes.get(4..4 + n).ok_or_else(|| bad("truncated layout descriptor".into()))?;
    let desc: LayoutJson = serde_json::from_slice(json).map_err(|e| bad(e.to_string()))?;
    let blocks = desc.blocks.into_iter().map(|b| ParamBlock { name: b.name, offset: b.offset, len: b.len }).collect();
    let layout = ParamLayout::from_blocks(blocks).map_err(|e| bad(e.to_string()))?;
    if layout.total() != desc.total {
        return Err(bad(format!("layout total {} disagrees with its blocks ({})", desc.total, layout.total())));
    }
    let payload = &bytes[4 + n..];
    if payload.len() != 4 * layout.total() {
        return Err(bad(format!("payload is {} bytes, layout needs {}", payload.len(), 4 * layout.total())));
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    InrParams::from_values(layout, values).map_err(|e| bad(e.to_string()))
}

pub fn write(path: &Path, params: &InrParams<f32>) -> Result<()> {
    fs::write(path, encode(params)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<InrParams<f32>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kmoco_core::inr::{DeartifactConfig, InrModel, MovementConfig};

    #[test]
    fn roundtrip() {
        let model = InrModel::new(DeartifactConfig::default(), MovementConfig::default()).unwrap();
        let p = model.init_params::<f32>(11);
        let bytes = encode(&p);
        let back = decode(&bytes, Path::new("c")).unwrap();
        assert_eq!(back, p);
        assert!(decode(&bytes[..bytes.len() - 4], Path::new("c")).is_err());
        assert!(decode(&bytes[..3], Path::new("c")).is_err());
    }
}
