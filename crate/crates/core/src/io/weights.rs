//! Weight files: a TOML manifest next to raw little-endian row-major tensors.
//!
//! ```toml
//! format_version = 1
//! kind = "rbm"
//! precision = "f64"
//! n = 16
//! alpha = 2
//!
//! [[tensors]]
//! name = "w"
//! file = "rbm.w.bin"
//! shape = [32, 16]
//! crc32 = 123456789
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::error::{Error, Result};
use crate::ref_models::{Activation, DenseLayer, MlpParams, RbmParams};

const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    fn width(self) -> u64 {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rbm,
    Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Rbm(RbmParams),
    Mlp(MlpParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Rbm(_) => ModelKind::Rbm,
            ModelParams::Mlp(_) => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    kind: ModelKind,
    precision: Precision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    activation: Option<Activation>,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    file: String,
    shape: Vec<usize>,
    crc32: u32,
}

fn encode(values: &[f64], precision: Precision) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * precision.width() as usize);
    for &v in values {
        match precision {
            Precision::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    out
}

fn decode(bytes: &[u8], precision: Precision) -> Vec<f64> {
    match precision {
        Precision::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
            .collect(),
        Precision::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
    }
}

fn named_tensors(params: &ModelParams) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    match params {
        ModelParams::Rbm(p) => vec![
            ("w".into(), vec![p.w.nrows(), p.w.ncols()], p.w.iter().copied().collect()),
            ("b".into(), vec![p.b.len()], p.b.to_vec()),
        ],
        ModelParams::Mlp(p) => p
            .layers
            .iter()
            .enumerate()
            .flat_map(|(k, l)| {
                [
                    (
                        format!("layer{k}.weights"),
                        vec![l.weights.nrows(), l.weights.ncols()],
                        l.weights.iter().copied().collect(),
                    ),
                    (format!("layer{k}.bias"), vec![l.bias.len()], l.bias.to_vec()),
                ]
            })
            .collect(),
    }
}

fn tensor_file_name(manifest: &Path, tensor: &str) -> String {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "weights".into());
    format!("{stem}.{tensor}.bin")
}

/// Writes `params` as a manifest at `path` plus one raw file per tensor in
/// the same directory. Output bytes depend only on `params` and `precision`.
pub fn save_weights(params: &ModelParams, path: &Path, precision: Precision) -> Result<PathBuf> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (name, shape, values) in named_tensors(params) {
        let bytes = encode(&values, precision);
        let file = tensor_file_name(path, &name);
        atomic_write(&dir.join(&file), &bytes)?;
        entries.push(TensorEntry {
            name,
            file,
            shape,
            crc32: crc32fast::hash(&bytes),
        });
    }
    let mut manifest = Manifest {
        format_version: MANIFEST_VERSION,
        kind: params.kind(),
        precision,
        n: None,
        alpha: None,
        dims: None,
        activation: None,
        tensors: entries,
    };
    match params {
        ModelParams::Rbm(p) => {
            manifest.n = Some(p.n);
            manifest.alpha = Some(p.alpha);
        }
        ModelParams::Mlp(p) => {
            let mut dims = vec![p.input_dim()];
            dims.extend(p.layers.iter().map(|l| l.out_dim()));
            manifest.dims = Some(dims);
            manifest.activation = Some(p.hidden_activation);
        }
    }
    let text = toml::to_string(&manifest).map_err(|e| Error::format(path, e.to_string()))?;
    atomic_write(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

fn read_tensor(dir: &Path, entry: &TensorEntry, precision: Precision, expected_shape: &[usize]) -> Result<Vec<f64>> {
    if entry.shape != expected_shape {
        return Err(Error::InvalidArgument(format!(
            "tensor {} has shape {:?}, expected {:?}",
            entry.name, entry.shape, expected_shape
        )));
    }
    let bytes = fs::read(dir.join(&entry.file))?;
    let count: u64 = entry.shape.iter().map(|&d| d as u64).product();
    let expected = count * precision.width();
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            tensor: entry.name.clone(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let actual = crc32fast::hash(&bytes);
    if actual != entry.crc32 {
        return Err(Error::Checksum {
            tensor: entry.name.clone(),
            expected: entry.crc32,
            actual,
        });
    }
    Ok(decode(&bytes, precision))
}

fn take<'a>(m: &'a Manifest, name: &str, path: &Path) -> Result<&'a TensorEntry> {
    m.tensors
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::format(path, format!("missing tensor {name}")))
}

fn require<T: Copy>(value: Option<T>, key: &str, path: &Path) -> Result<T> {
    value.ok_or_else(|| Error::format(path, format!("missing key {key}")))
}

fn shaped(values: Vec<f64>, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), values).expect("shape validated against byte count")
}

/// Loads the model described by the manifest at `path`.
pub fn load_weights(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path)?;
    let m: Manifest = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if m.format_version != MANIFEST_VERSION {
        return Err(Error::UnsupportedVersion(m.format_version));
    }
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    match m.kind {
        ModelKind::Rbm => {
            let n = require(m.n, "n", path)?;
            let alpha = require(m.alpha, "alpha", path)?;
            let hidden = alpha * n;
            let w = read_tensor(dir, take(&m, "w", path)?, m.precision, &[hidden, n])?;
            let b = read_tensor(dir, take(&m, "b", path)?, m.precision, &[hidden])?;
            Ok(ModelParams::Rbm(RbmParams::new(shaped(w, hidden, n), Array1::from(b), alpha, n)?))
        }
        ModelKind::Mlp => {
            let dims = m
                .dims
                .clone()
                .ok_or_else(|| Error::format(path, "missing key dims"))?;
            if dims.len() < 2 {
                return Err(Error::format(path, "dims needs at least an input and an output"));
            }
            let activation = require(m.activation, "activation", path)?;
            let mut layers = Vec::with_capacity(dims.len() - 1);
            for (k, pair) in dims.windows(2).enumerate() {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let w = read_tensor(dir, take(&m, &format!("layer{k}.weights"), path)?, m.precision, &[fan_out, fan_in])?;
                let b = read_tensor(dir, take(&m, &format!("layer{k}.bias"), path)?, m.precision, &[fan_out])?;
                layers.push(DenseLayer {
                    weights: shaped(w, fan_out, fan_in),
                    bias: Array1::from(b),
                });
            }
            Ok(ModelParams::Mlp(MlpParams::new(layers, activation)?))
        }
    }
}

pub fn load_rbm(path: &Path) -> Result<RbmParams> {
    match load_weights(path)? {
        ModelParams::Rbm(p) => Ok(p),
        ModelParams::Mlp(_) => Err(Error::format(path, "expected an rbm manifest, found mlp")),
    }
}

pub fn load_mlp(path: &Path) -> Result<MlpParams> {
    match load_weights(path)? {
        ModelParams::Mlp(p) => Ok(p),
        ModelParams::Rbm(_) => Err(Error::format(path, "expected an mlp manifest, found rbm")),
    }
}
