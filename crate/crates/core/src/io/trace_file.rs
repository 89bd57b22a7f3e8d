//! Gate-trace binary format: a JSON header line, then per-sentence records
//! of little-endian 32-bit floats (forget, update, context, output per step).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{GateRecord, Trace};

pub const TRACE_FORMAT: &str = "gatescope-trace";

/// Stored contexts must satisfy c = f*c_prev + u to this tolerance; the
/// vectors are single precision.
pub const TRACE_RECURRENCE_TOL: f32 = 1e-5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub state_dim: usize,
    pub sentence_count: usize,
    pub precision: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vocab_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checkpoint_sha256: Option<String>,
}

impl TraceHeader {
    pub fn new(state_dim: usize, sentence_count: usize) -> Self {
        TraceHeader {
            format: TRACE_FORMAT.to_string(),
            version: 1,
            state_dim,
            sentence_count,
            precision: "f32".to_string(),
            vocab_sha256: None,
            checkpoint_sha256: None,
        }
    }
}

/// Write traces after checking the recurrence invariant on every sentence.
pub fn write_traces(path: &Path, traces: &[Trace], mut header: TraceHeader) -> Result<()> {
    header.sentence_count = traces.len();
    for t in traces {
        let residual = t.recurrence_residual();
        if residual > TRACE_RECURRENCE_TOL {
            return Err(Error::numeric(
                None,
                format!(
                    "trace for sentence {} violates the context recurrence (residual {residual})",
                    t.sentence_id
                ),
            ));
        }
    }

    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for t in traces {
        w.write_all(&(t.sentence_id as u32).to_le_bytes())?;
        w.write_all(&(t.records.len() as u32).to_le_bytes())?;
        for &id in &t.token_ids {
            w.write_all(&id.to_le_bytes())?;
        }
        for rec in &t.records {
            for part in [&rec.forget, &rec.update, &rec.context, &rec.output] {
                for &v in part.iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_traces(path: &Path) -> Result<(Vec<Trace>, TraceHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::invalid("trace file ended before the header line"));
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: TraceHeader = serde_json::from_slice(&header_bytes)?;
    if header.format != TRACE_FORMAT {
        return Err(Error::invalid(format!(
            "not a trace file (format {:?})",
            header.format
        )));
    }
    let d = header.state_dim;

    let read_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)
            .map_err(|_| Error::invalid("trace file is truncated"))?;
        Ok(u32::from_le_bytes(b))
    };

    let mut traces = Vec::with_capacity(header.sentence_count);
    for _ in 0..header.sentence_count {
        let sentence_id = read_u32(&mut r)? as usize;
        let steps = read_u32(&mut r)? as usize;
        let mut token_ids = Vec::with_capacity(steps);
        for _ in 0..steps {
            token_ids.push(read_u32(&mut r)?);
        }
        let mut float_bytes = vec![0u8; steps * 4 * d * 4];
        r.read_exact(&mut float_bytes)
            .map_err(|_| Error::invalid("trace file is truncated"))?;
        let mut floats = float_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        let mut records = Vec::with_capacity(steps);
        for _ in 0..steps {
            let mut take = |n: usize| -> Vec<f32> { (0..n).map(|_| floats.next().unwrap()).collect() };
            records.push(GateRecord {
                forget: take(d),
                update: take(d),
                context: take(d),
                output: take(d),
            });
        }
        traces.push(Trace {
            sentence_id,
            token_ids,
            records,
        });
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::invalid(format!(
            "trace file has {} trailing bytes",
            rest.len()
        )));
    }
    Ok((traces, header))
}

/// Lossy long-format CSV for inspection: one row per step and vector.
pub fn traces_to_csv(traces: &[Trace]) -> String {
    let mut out = String::from("sentence,step,token,vector,values\n");
    for t in traces {
        for (step, rec) in t.records.iter().enumerate() {
            for (name, values) in [
                ("forget", &rec.forget),
                ("update", &rec.update),
                ("context", &rec.context),
                ("output", &rec.output),
            ] {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    t.sentence_id,
                    step,
                    t.token_ids[step],
                    name,
                    values
                        .iter()
                        .map(|v| format!("{v}"))
                        .collect::<Vec<_>>()
                        .join(";")
                ));
            }
        }
    }
    out
}
