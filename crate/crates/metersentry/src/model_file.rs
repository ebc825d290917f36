//! Binary model file.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `MSAE` | 4 bytes |
//! | format version | u32 |
//! | window length | u32 |
//! | layer count | u32 |
//! | per layer: kind, activation | u8, u8 |
//! | per layer: in, out, kernel, stride | 4 × u32 |
//! | normalization mean, std | 2 × f64 |
//! | per layer: trainable values, then running statistics | f64 each |
//! | SHA-256 of everything above | 32 bytes |
//!
//! Convolutions store weights `[k][in][out]` followed by the bias; batch
//! norms store γ, β, running mean, running variance.

use metersentry_core::nn::{Activation, ConvAutoencoder, LayerKind, LayerSpec, Normalization};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"MSAE";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{0}: file not found")]
    NotFound(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error("model file truncated")]
    Truncated,
    #[error("checksum mismatch: file is corrupt")]
    Checksum,
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("{0} trailing bytes after parameters")]
    Trailing(usize),
}

pub fn encode(model: &ConvAutoencoder) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * (model.params().len() + model.buffers().len()));
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, model.window_len() as u32);
    put_u32(&mut out, model.layers().len() as u32);
    for l in model.layers() {
        out.push(match l.kind {
            LayerKind::Conv1d => 0,
            LayerKind::Conv1dTranspose => 1,
            LayerKind::BatchNorm => 2,
        });
        out.push(match l.activation {
            Activation::None => 0,
            Activation::Relu => 1,
        });
        for v in [l.in_channels, l.out_channels, l.kernel_size, l.stride] {
            put_u32(&mut out, v as u32);
        }
    }
    let norm = model.normalization();
    put_f64(&mut out, norm.mean);
    put_f64(&mut out, norm.std);
    for i in 0..model.layers().len() {
        for &v in model.layer_params(i).iter().chain(model.layer_buffers(i)) {
            put_f64(&mut out, v);
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode(bytes: &[u8]) -> Result<ConvAutoencoder, ModelFileError> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(if bytes.len() < 4 { ModelFileError::Truncated } else { ModelFileError::BadMagic });
    }
    if bytes.len() < 4 + 4 + DIGEST_LEN {
        return Err(ModelFileError::Truncated);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    let mut r = Reader { bytes: body, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(ModelFileError::Version(version));
    }
    if Sha256::digest(body).as_slice() != digest {
        return Err(ModelFileError::Checksum);
    }
    let window_len = r.u32()? as usize;
    let n_layers = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let kind = r.u8()?;
        let act = match r.u8()? {
            0 => Activation::None,
            1 => Activation::Relu,
            a => return Err(ModelFileError::Architecture(format!("unknown activation {a}"))),
        };
        let (i, o, k, s) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        layers.push(match kind {
            0 => LayerSpec::conv(i, o, k, s, act),
            1 => LayerSpec::conv_transpose(i, o, k, s, act),
            2 => LayerSpec::batch_norm(i),
            k => return Err(ModelFileError::Architecture(format!("unknown layer kind {k}"))),
        });
    }
    let norm = Normalization { mean: r.f64()?, std: r.f64()? };
    let mut model =
        ConvAutoencoder::from_layers(layers.clone(), window_len).map_err(|e| ModelFileError::Architecture(e.to_string()))?;
    let mut params = Vec::with_capacity(model.params().len());
    let mut buffers = Vec::with_capacity(model.buffers().len());
    for l in &layers {
        for _ in 0..l.trainable_count() {
            params.push(r.f64()?);
        }
        for _ in 0..l.buffer_count() {
            buffers.push(r.f64()?);
        }
    }
    if r.pos != body.len() {
        return Err(ModelFileError::Trailing(body.len() - r.pos));
    }
    model.params_mut().copy_from_slice(&params);
    model.buffers_mut().copy_from_slice(&buffers);
    model.set_normalization(norm);
    Ok(model)
}

pub fn save(path: &Path, model: &ConvAutoencoder) -> std::io::Result<()> {
    std::fs::write(path, encode(model))
}

pub fn load(path: &Path) -> Result<ConvAutoencoder, ModelFileError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ModelFileError::NotFound(path.display().to_string()),
        _ => ModelFileError::Io(e),
    })?;
    decode(&bytes)
}

/// SHA-256 of the file contents, hex encoded.
pub fn checksum_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ModelFileError> {
        let end = self.pos.checked_add(N).filter(|&e| e <= self.bytes.len()).ok_or(ModelFileError::Truncated)?;
        let out = self.bytes[self.pos..end].try_into().expect("length checked");
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, ModelFileError> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, ModelFileError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}
