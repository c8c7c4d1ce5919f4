//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//! `"DROB"`, u32 version, u32 tensor count, then per tensor a u16 name
//! length, the name bytes, a u8 rank, one u32 per dimension and the f32
//! payload; finally a u32 length and a UTF-8 JSON blob holding
//! [`CheckpointMeta`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::corpus::{CorpusSpec, Vocab};
use crate::error::{Error, Result};
use crate::model::{AutoencoderState, EncoderParams, AE_TENSOR_NAMES};
use crate::numkit::Tensor;

pub const MAGIC: &[u8; 4] = b"DROB";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub config: RunConfig,
    pub seed: u64,
    pub step: u64,
    pub vocab: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_spec: Option<CorpusSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Tensor<f32>)>,
    pub meta: CheckpointMeta,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

impl Checkpoint {
    pub fn new(
        encoder: &EncoderParams,
        autoencoder: Option<&AutoencoderState>,
        meta: CheckpointMeta,
    ) -> Self {
        let mut tensors: Vec<(String, Tensor<f32>)> = EncoderParams::<f32>::names(encoder.config())
            .into_iter()
            .zip(encoder.tensors().iter().cloned())
            .collect();
        if let Some(ae) = autoencoder {
            tensors.extend(AE_TENSOR_NAMES.iter().map(|n| n.to_string()).zip(ae.tensors().iter().cloned()));
        }
        Self { tensors, meta }
    }

    pub fn vocab(&self) -> Result<Vocab> {
        Vocab::from_tokens(&self.meta.vocab)
    }

    pub fn encoder(&self) -> Result<EncoderParams> {
        let cfg = self.meta.config.model;
        let names = EncoderParams::<f32>::names(&cfg);
        if self.tensors.len() < names.len() {
            return Err(Error::Checkpoint("missing encoder tensors".into()));
        }
        for (want, (got, _)) in names.iter().zip(&self.tensors) {
            if want != got {
                return Err(Error::Checkpoint(format!("expected tensor `{want}`, found `{got}`")));
            }
        }
        let tensors = self.tensors[..names.len()].iter().map(|(_, t)| t.clone()).collect();
        EncoderParams::from_tensors(cfg, tensors).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    /// The grouping autoencoder, when the run trained one.
    pub fn autoencoder(&self) -> Result<Option<AutoencoderState>> {
        let start = EncoderParams::<f32>::names(&self.meta.config.model).len();
        let rest = &self.tensors[start.min(self.tensors.len())..];
        if rest.is_empty() {
            return Ok(None);
        }
        if rest.len() != AE_TENSOR_NAMES.len() || rest.iter().zip(AE_TENSOR_NAMES).any(|((n, _), w)| n != w) {
            return Err(Error::Checkpoint("unexpected tensors after the encoder".into()));
        }
        let tensors = rest.iter().map(|(_, t)| t.clone()).collect();
        AutoencoderState::from_tensors(self.meta.config.autoencoder, self.meta.config.model.d_model, tensors)
            .map(Some)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            let len = u16::try_from(name.len()).map_err(|_| Error::Checkpoint(format!("tensor name too long: {name}")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            let rank = u8::try_from(t.shape().len()).map_err(|_| Error::Checkpoint("rank above 255".into()))?;
            out.push(rank);
            for &d in t.shape() {
                let d = u32::try_from(d).map_err(|_| Error::Checkpoint("dimension above u32".into()))?;
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let blob = serde_json::to_vec(&self.meta)?;
        out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
        out.extend_from_slice(&blob);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
                .to_string();
            let rank = r.u8()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let n = n
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` is too large")))?;
            let data = r
                .take(n)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            tensors.push((name, Tensor::new(shape, data)?));
        }
        let blob_len = r.u32()? as usize;
        let meta: CheckpointMeta = serde_json::from_slice(r.take(blob_len)?)
            .map_err(|e| Error::Checkpoint(format!("metadata: {e}")))?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after metadata".into()));
        }
        Ok(Self { tensors, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }
}
