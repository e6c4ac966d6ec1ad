//! Versioned flat-file format for trained generators.
//!
//! Layout (little endian): magic `SFGEN\0`, `u32` format version, `u64`
//! metadata length, UTF-8 JSON metadata (encoding/normalizer parameters,
//! spans, condition layout, config, loss trace), `u32` layer count, then per
//! layer `u32 rows`, `u32 cols`, `rows·cols` weight `f64`s and `cols` bias `f64`s.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ctgan::CondSampler;
use super::gan::{Encoding, GanConfig, GenerativeMethod, GeneratorModel, LossRecord};
use super::mode::Span;
use super::net::{Dense, FeedforwardNet, OutputActivation};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &[u8; 6] = b"SFGEN\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Meta {
    method: GenerativeMethod,
    encoding: Encoding,
    spans: Vec<Span>,
    cond: Option<CondSampler>,
    config: GanConfig,
    d: usize,
    output: OutputActivation,
    loss_trace: Vec<LossRecord>,
}

pub fn write_model(model: &GeneratorModel, mut w: impl Write) -> Result<()> {
    let meta = Meta {
        method: model.method,
        encoding: model.encoding.clone(),
        spans: model.spans.clone(),
        cond: model.cond.clone(),
        config: model.config.clone(),
        d: model.d,
        output: model.generator.output_activation(),
        loss_trace: model.loss_trace.clone(),
    };
    let json = serde_json::to_vec(&meta).map_err(|e| Error::ModelFile(e.to_string()))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    let layers = model.generator.layers();
    buf.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for l in layers {
        buf.extend_from_slice(&(l.weights.rows() as u32).to_le_bytes());
        buf.extend_from_slice(&(l.weights.cols() as u32).to_le_bytes());
        for v in l.weights.as_slice().iter().chain(&l.bias) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(|e| Error::ModelFile(e.to_string()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::ModelFile("truncated model file".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::ModelFile("overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn read_model(mut r: impl Read) -> Result<GeneratorModel> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::ModelFile(e.to_string()))?;
    let mut c = Cursor { bytes: &bytes, at: 0 };
    if c.take(MAGIC.len())? != MAGIC {
        return Err(Error::ModelFile("bad magic; not a generator model".into()));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFile(format!("unsupported format version {version}")));
    }
    let meta_len = c.u64()? as usize;
    let meta: Meta =
        serde_json::from_slice(c.take(meta_len)?).map_err(|e| Error::ModelFile(format!("metadata: {e}")))?;
    let n_layers = c.u32()? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let rows = c.u32()? as usize;
        let cols = c.u32()? as usize;
        let weights = Matrix::from_vec(rows, cols, c.f64s(rows * cols)?)?;
        let bias = c.f64s(cols)?;
        layers.push(Dense { weights, bias });
    }
    if c.at != bytes.len() {
        return Err(Error::ModelFile("trailing bytes after parameters".into()));
    }
    let generator = FeedforwardNet::from_layers(layers, meta.output)?;
    Ok(GeneratorModel {
        method: meta.method,
        encoding: meta.encoding,
        spans: meta.spans,
        cond: meta.cond,
        generator,
        loss_trace: meta.loss_trace,
        config: meta.config,
        d: meta.d,
    })
}

pub fn save_model(model: &GeneratorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(model, std::io::BufWriter::new(f))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GeneratorModel> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(std::io::BufReader::new(f))
}

/// `epoch,d_loss,g_loss,value` rows.
pub fn write_loss_trace(trace: &[LossRecord], mut w: impl Write) -> Result<()> {
    let mut out = String::from("epoch,d_loss,g_loss,value\n");
    for r in trace {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.d_loss, r.g_loss, r.value));
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::ModelFile(e.to_string()))
}
