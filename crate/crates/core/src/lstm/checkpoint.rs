//! Checkpoint format: one JSON header line, then the raw parameter arrays as
//! little-endian 32-bit floats in a fixed order (embeddings, the four gate
//! matrices, head weight, head bias).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "gatescope-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub state_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vocab_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_config: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epoch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<serde_json::Value>,
}

impl CheckpointHeader {
    pub fn new(params: &ModelParams) -> Self {
        CheckpointHeader {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            vocab_size: params.vocab_size,
            embed_dim: params.embed_dim,
            state_dim: params.state_dim,
            scenario: None,
            vocab_sha256: None,
            train_config: None,
            epoch: None,
            metrics: None,
        }
    }
}

pub fn save(path: &Path, params: &ModelParams, header: &CheckpointHeader) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for slice in params.flat() {
        let mut bytes = Vec::with_capacity(slice.len() * 4);
        for &v in slice {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(ModelParams, CheckpointHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = r.read(&mut byte)?;
        if n == 0 {
            return Err(Error::invalid("checkpoint ended before the header line"));
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(Error::invalid(format!(
            "not a checkpoint file (format {:?})",
            header.format
        )));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::invalid(format!(
            "unsupported checkpoint version {}",
            header.version
        )));
    }

    let (v, e, d) = (header.vocab_size, header.embed_dim, header.state_dim);
    let m = e + 2 * d + 1;
    let mut read_array = |rows: usize, cols: usize| -> Result<Array2<f64>> {
        let mut bytes = vec![0u8; rows * cols * 4];
        r.read_exact(&mut bytes).map_err(|_| {
            Error::invalid("checkpoint is truncated: parameter payload too short")
        })?;
        let data: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Array2::from_shape_vec((rows, cols), data).expect("shape matches payload"))
    };

    let embed = read_array(v, e)?;
    let w_forget = read_array(d, m)?;
    let w_update_gate = read_array(d, m)?;
    let w_update_cand = read_array(d, m)?;
    let w_output_gate = read_array(d, m)?;
    let w_head = read_array(v, d)?;
    let b_head: Array1<f64> = read_array(v, 1)?.column(0).to_owned();

    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::invalid(format!(
            "checkpoint has {} trailing bytes",
            rest.len()
        )));
    }

    Ok((
        ModelParams {
            vocab_size: v,
            embed_dim: e,
            state_dim: d,
            embed,
            w_forget,
            w_update_gate,
            w_update_cand,
            w_output_gate,
            w_head,
            b_head,
        },
        header,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trips_at_single_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let params = ModelParams::init(7, 4, 3, 5);
        let header = CheckpointHeader::new(&params);
        save(&path, &params, &header).unwrap();

        let (loaded, h2) = load(&path).unwrap();
        assert_eq!(h2.vocab_size, 7);
        // Values round to f32 on disk; a second save must be byte-identical.
        save(&dir.path().join("model2.ckpt"), &loaded, &h2).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(dir.path().join("model2.ckpt")).unwrap();
        assert_eq!(a, b);
        for (x, y) in params.flat().iter().zip(loaded.flat().iter()) {
            for (p, q) in x.iter().zip(y.iter()) {
                assert_eq!(*p as f32, *q as f32);
            }
        }
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let params = ModelParams::init(5, 3, 2, 1);
        save(&path, &params, &CheckpointHeader::new(&params)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(load(&path).is_err());
    }
}
