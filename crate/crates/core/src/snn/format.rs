//! Model files: JSON topology next to a raw little-endian `f32` weight blob.
//! See `docs/weights-format.md` for the byte layout.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::layer::{LayerKind, LayerSpec, Shape3};
use super::network::{Mode, NetworkSpec};

pub const FORMAT_NAME: &str = "tripwire-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    #[serde(flatten)]
    pub kind: LayerKind,
    pub threshold: f32,
    /// First weight of this layer, counted in `f32` elements from the start
    /// of the blob.
    pub offset: usize,
    pub count: usize,
}

/// The JSON half of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub mode: Mode,
    pub input: Shape3,
    pub layers: Vec<LayerEntry>,
    /// Blob path relative to the JSON file.
    pub weights_file: String,
}

fn blob_path(json: &Path) -> PathBuf {
    json.with_extension("bin")
}

/// Writes `path` (topology) and `path` with extension `.bin` (weights).
pub fn save_model(spec: &NetworkSpec, path: &Path) -> Result<()> {
    let bin = blob_path(path);
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut blob = Vec::new();
    let mut offset = 0;
    for l in &spec.layers {
        layers.push(LayerEntry {
            kind: l.kind,
            threshold: l.threshold,
            offset,
            count: l.weights.len(),
        });
        offset += l.weights.len();
        for w in &l.weights {
            blob.extend_from_slice(&w.to_le_bytes());
        }
    }
    let file = ModelFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        mode: spec.mode,
        input: spec.input,
        layers,
        weights_file: bin
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
    fs::write(&bin, blob)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<NetworkSpec> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.format != FORMAT_NAME || file.version != FORMAT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported model format {} v{}",
            file.format, file.version
        )));
    }
    let bin = path
        .parent()
        .unwrap_or(Path::new("."))
        .join(&file.weights_file);
    if !bin.exists() {
        return Err(Error::MissingInput(bin));
    }
    let bytes = fs::read(&bin)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Shape(format!(
            "weight blob has {} bytes, not a multiple of 4",
            bytes.len()
        )));
    }
    let all: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, e) in file.layers.iter().enumerate() {
        if e.count != e.kind.weight_count() || e.offset + e.count > all.len() {
            return Err(Error::Shape(format!(
                "layer {i}: {} weights at offset {} do not fit the layer or the {}-weight blob",
                e.count,
                e.offset,
                all.len()
            )));
        }
        layers.push(LayerSpec {
            kind: e.kind,
            weights: all[e.offset..e.offset + e.count].to_vec(),
            threshold: e.threshold,
        });
    }
    Ok(NetworkSpec {
        input: file.input,
        layers,
        mode: file.mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let spec = NetworkSpec::default_architecture(Mode::Spiking, 16, 16).kaiming_init(9, 1.0);
        let p = dir.path().join("model.json");
        save_model(&spec, &p).unwrap();
        assert!(dir.path().join("model.bin").exists());
        let back = load_model(&p).unwrap();
        assert_eq!(back, spec);
        let json = fs::read_to_string(&p).unwrap();
        assert!(json.contains("\"kind\": \"conv\""));
    }

    #[test]
    fn missing_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        assert!(matches!(load_model(&p), Err(Error::MissingInput(_))));
        let spec = NetworkSpec::default_architecture(Mode::Relu, 8, 8);
        save_model(&spec, &p).unwrap();
        let bin = dir.path().join("m.bin");
        let mut bytes = fs::read(&bin).unwrap();
        bytes.truncate(bytes.len() - 4);
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(load_model(&p), Err(Error::Shape(_))));
    }
}
