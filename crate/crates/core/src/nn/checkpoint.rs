//! Versioned binary key→tensor checkpoint files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "NAVMORL-CKPT\n"  magic
//! u32               format version
//! u32               number of metadata entries, then per entry:
//!                   u32 key length, key bytes, u32 value length, value bytes
//! u32               number of tensors, then per tensor:
//!                   u32 name length, name bytes, u32 rank, u64 × rank dims,
//!                   f64 × product(dims) values
//! ```
//!
//! Entries are written in key order so identical contents produce identical
//! bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, Dense, Matrix, Mlp, NnError};

pub const MAGIC: &[u8] = b"NAVMORL-CKPT\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub tensors: BTreeMap<String, Tensor>,
}

fn corrupt(msg: impl Into<String>) -> NnError {
    NnError::Checkpoint(msg.into())
}

fn write_bytes<W: Write>(w: &mut W, b: &[u8]) -> Result<(), NnError> {
    let len = u32::try_from(b.len()).map_err(|_| corrupt("entry too long"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(b)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NnError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NnError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_string<R: Read>(r: &mut R) -> Result<String, NnError> {
    let len = read_u32(r)? as usize;
    if len > 1 << 24 {
        return Err(corrupt("string length out of range"));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| corrupt("non-UTF-8 string"))
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    pub fn meta(&self, key: &str) -> Result<&str, NnError> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| corrupt(format!("missing metadata `{key}`")))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), NnError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.meta.len() as u32).to_le_bytes())?;
        for (k, v) in &self.meta {
            write_bytes(w, k.as_bytes())?;
            write_bytes(w, v.as_bytes())?;
        }
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(corrupt(format!("tensor `{name}` shape does not match its data")));
            }
            write_bytes(w, name.as_bytes())?;
            w.write_all(&(t.shape.len() as u32).to_le_bytes())?;
            for d in &t.shape {
                w.write_all(&(*d as u64).to_le_bytes())?;
            }
            for x in &t.data {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, NnError> {
        let mut magic = vec![0u8; MAGIC.len()];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(corrupt("not a checkpoint file (bad magic)"));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(corrupt(format!("unsupported checkpoint version {version}")));
        }
        let mut ck = Checkpoint::new();
        for _ in 0..read_u32(r)? {
            let k = read_string(r)?;
            let v = read_string(r)?;
            ck.meta.insert(k, v);
        }
        for _ in 0..read_u32(r)? {
            let name = read_string(r)?;
            let rank = read_u32(r)? as usize;
            if rank > 8 {
                return Err(corrupt(format!("tensor `{name}` has rank {rank}")));
            }
            let shape = (0..rank)
                .map(|_| read_u64(r).map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            let n = shape
                .iter()
                .try_fold(1usize, |acc, d| acc.checked_mul(*d))
                .filter(|n| *n <= 1 << 28)
                .ok_or_else(|| corrupt(format!("tensor `{name}` is too large")))?;
            let mut data = Vec::with_capacity(n);
            let mut buf = [0u8; 8];
            for _ in 0..n {
                r.read_exact(&mut buf)?;
                data.push(f64::from_le_bytes(buf));
            }
            ck.tensors.insert(name, Tensor { shape, data });
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    /// Stores `net` as `{prefix}.{i}.weight` / `{prefix}.{i}.bias` plus an
    /// activation list in `{prefix}.activations`.
    pub fn insert_mlp(&mut self, prefix: &str, net: &Mlp) {
        let acts: Vec<&str> = net.layers().iter().map(|l| l.activation.as_str()).collect();
        self.set_meta(format!("{prefix}.activations"), acts.join(","));
        for (i, l) in net.layers().iter().enumerate() {
            self.tensors.insert(
                format!("{prefix}.{i}.weight"),
                Tensor {
                    shape: vec![l.weights.rows(), l.weights.cols()],
                    data: l.weights.as_slice().to_vec(),
                },
            );
            self.tensors.insert(
                format!("{prefix}.{i}.bias"),
                Tensor {
                    shape: vec![l.biases.len()],
                    data: l.biases.clone(),
                },
            );
        }
    }

    pub fn extract_mlp(&self, prefix: &str) -> Result<Mlp, NnError> {
        let acts = self.meta(&format!("{prefix}.activations"))?;
        let mut layers = Vec::new();
        for (i, a) in acts.split(',').enumerate() {
            let act: Activation = a.parse()?;
            let w = self
                .tensors
                .get(&format!("{prefix}.{i}.weight"))
                .ok_or_else(|| corrupt(format!("missing `{prefix}.{i}.weight`")))?;
            let b = self
                .tensors
                .get(&format!("{prefix}.{i}.bias"))
                .ok_or_else(|| corrupt(format!("missing `{prefix}.{i}.bias`")))?;
            if w.shape.len() != 2 || b.shape.len() != 1 {
                return Err(corrupt(format!("layer {prefix}.{i} has malformed tensors")));
            }
            let weights = Matrix::from_vec(w.shape[0], w.shape[1], w.data.clone())?;
            layers.push(Dense::new(weights, b.data.clone(), act)?);
        }
        Mlp::from_layers(layers)
    }
}
