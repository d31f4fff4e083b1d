//! Binary checkpoint container.
//!
//! ```text
//! magic        4 bytes  "SBCK"
//! version      u32 LE   (1)
//! header_len   u32 LE
//! header       UTF-8 JSON {"layers": [LayerSpec...], "meta": <caller data>}
//! tensor_count u32 LE
//! per tensor:  ndim u32 LE, ndim x dim u32 LE, prod(dims) x f32 LE (row-major)
//! ```
//!
//! Tensors appear in layer order: conv weight then bias (if any); batchnorm
//! gamma, beta, running mean, running variance; dense weight then bias.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

use super::{Layer, LayerSpec, Scalar, Sequential, Tensor};

pub const MAGIC: &[u8; 4] = b"SBCK";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    layers: Vec<LayerSpec>,
    meta: Value,
}

fn layer_tensors<T: Scalar>(layer: &Layer<T>) -> Vec<(Vec<usize>, Vec<f64>)> {
    let t = |x: &Tensor<T>| (x.shape().to_vec(), x.data().iter().map(|v| v.as_f64()).collect());
    let v = |x: &[T]| (vec![x.len()], x.iter().map(|v| v.as_f64()).collect());
    match layer {
        Layer::Conv2d(c) => {
            let mut out = vec![t(&c.weight.value)];
            out.extend(c.bias.as_ref().map(|b| t(&b.value)));
            out
        }
        Layer::BatchNorm(b) => {
            vec![t(&b.gamma.value), t(&b.beta.value), v(&b.running_mean), v(&b.running_var)]
        }
        Layer::Dense(d) => vec![t(&d.weight.value), t(&d.bias.value)],
        _ => Vec::new(),
    }
}

pub fn write_checkpoint<T: Scalar>(net: &Sequential<T>, dropout_seed: u64, meta: Value) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header { layers: net.specs(dropout_seed), meta })
        .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let tensors: Vec<_> = net.layers.iter().flat_map(layer_tensors).collect();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (shape, data) in tensors {
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for x in data {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("checkpoint truncated at byte {} (need {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Reads a checkpoint written by [`write_checkpoint`], returning the network and caller metadata.
pub fn read_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<(Sequential<T>, Value)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let hlen = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(hlen)?)
        .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let mut layers = header.layers.iter().map(LayerSpec::build::<T>).collect::<Result<Vec<_>>>()?;
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
        let data: Vec<T> =
            raw.chunks_exact(4).map(|c| T::of(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)).collect();
        tensors.push(Tensor::from_vec(&shape, data)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after checkpoint", bytes.len() - r.pos)));
    }

    let mut it = tensors.into_iter();
    let mut next = |expect: &[usize]| -> Result<Tensor<T>> {
        let t = it.next().ok_or_else(|| Error::Format("checkpoint has too few tensors".into()))?;
        if t.shape() != expect {
            return Err(Error::Format(format!("tensor shape {:?}, architecture expects {expect:?}", t.shape())));
        }
        Ok(t)
    };
    for layer in &mut layers {
        match layer {
            Layer::Conv2d(c) => {
                c.weight.value = next(c.weight.value.shape())?;
                if let Some(b) = &mut c.bias {
                    b.value = next(b.value.shape())?;
                }
            }
            Layer::BatchNorm(b) => {
                let f = b.features();
                b.gamma.value = next(&[f])?;
                b.beta.value = next(&[f])?;
                b.running_mean = next(&[f])?.into_data();
                b.running_var = next(&[f])?.into_data();
            }
            Layer::Dense(d) => {
                d.weight.value = next(d.weight.value.shape())?;
                d.bias.value = next(d.bias.value.shape())?;
            }
            _ => {}
        }
    }
    if it.next().is_some() {
        return Err(Error::Format("checkpoint has more tensors than its architecture".into()));
    }
    Ok((Sequential::new(layers), header.meta))
}
