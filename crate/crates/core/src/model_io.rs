//! Model file format.
//!
//! A trained network serializes to a single JSON document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "parameter": "voltage",
//!   "direction": "discharge",
//!   "widths": [128, 64, 128],
//!   "activation": "relu",
//!   "seed": 42,
//!   "trained_epochs": 400,
//!   "norm_stats": {"input": {"min": 2.7, "max": 4.2},
//!                  "output": {"min": 2.7, "max": 4.2}},
//!   "layers": [{"W": [[...], ...], "b": [...]}, ...]
//! }
//! ```
//!
//! `W` is the row-major `d_in x d_out` weight matrix as a 2-D array. Floats
//! are written with shortest-round-trip precision, so loading reproduces
//! every finite double bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Direction, Parameter};
use crate::error::{Error, Result};
use crate::nn::{Activation, Architecture, LayerWeights, ModelWeights, NormStatsPair};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerFile {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    parameter: Parameter,
    direction: Direction,
    widths: Vec<usize>,
    activation: Activation,
    seed: u64,
    trained_epochs: u32,
    norm_stats: NormStatsPair,
    layers: Vec<LayerFile>,
}

pub fn to_json(model: &ModelWeights) -> Result<String> {
    let widths = model.arch.widths();
    let layers = model
        .layers
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let d_out = widths[i + 1];
            LayerFile {
                w: layer.w.chunks(d_out).map(|row| row.to_vec()).collect(),
                b: layer.b.clone(),
            }
        })
        .collect();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        parameter: model.parameter,
        direction: model.direction,
        widths: widths.to_vec(),
        activation: model.arch.activation,
        seed: model.seed,
        trained_epochs: model.trained_epochs,
        norm_stats: model.norm_stats,
        layers,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(data: &str) -> Result<ModelWeights> {
    let file: ModelFile = serde_json::from_str(data)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(file.format_version));
    }
    let arch = Architecture::new(file.widths.clone(), file.activation)?;
    if file.layers.len() != arch.weight_layers() {
        return Err(Error::Data(format!(
            "model file has {} layers, widths imply {}",
            file.layers.len(),
            arch.weight_layers()
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, layer) in file.layers.into_iter().enumerate() {
        let (d_in, d_out) = (file.widths[i], file.widths[i + 1]);
        if layer.w.len() != d_in || layer.w.iter().any(|row| row.len() != d_out) {
            return Err(Error::Data(format!(
                "layer {i} weight matrix does not match widths {d_in}x{d_out}"
            )));
        }
        if layer.b.len() != d_out {
            return Err(Error::Data(format!(
                "layer {i} bias length {} does not match width {d_out}",
                layer.b.len()
            )));
        }
        layers.push(LayerWeights {
            w: layer.w.into_iter().flatten().collect(),
            b: layer.b,
        });
    }
    let model = ModelWeights {
        arch,
        layers,
        parameter: file.parameter,
        direction: file.direction,
        norm_stats: file.norm_stats,
        seed: file.seed,
        trained_epochs: file.trained_epochs,
    };
    if !model.is_finite() {
        return Err(Error::Data("model file contains non-finite weights".into()));
    }
    Ok(model)
}

/// Write a file atomically: contents go to a sibling temp file which is
/// renamed into place, so readers never observe a truncated document.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_model(model: &ModelWeights, path: &Path) -> Result<()> {
    write_atomic(path, to_json(model)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelWeights> {
    from_json(&fs::read_to_string(path)?)
}

/// A bare architecture selection, as emitted by tuning and consumed by
/// training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchitectureFile {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

pub fn save_architecture(arch: &Architecture, path: &Path) -> Result<()> {
    let file = ArchitectureFile {
        widths: arch.widths().to_vec(),
        activation: arch.activation,
    };
    write_atomic(path, serde_json::to_string_pretty(&file)?.as_bytes())
}

pub fn load_architecture(path: &Path) -> Result<Architecture> {
    let file: ArchitectureFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    Architecture::new(file.widths, file.activation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NormStats;

    fn sample_model() -> ModelWeights {
        let stats = NormStatsPair {
            input: NormStats { min: 2.7, max: 4.2 },
            output: NormStats {
                min: 2.6999999999999997,
                max: 4.200000000000001,
            },
        };
        let mut model = ModelWeights::initialize(
            Architecture::new(vec![3, 5, 2], Activation::Tanh).unwrap(),
            Parameter::Voltage,
            Direction::ToCharge,
            stats,
            1234,
        );
        model.trained_epochs = 400;
        // awkward doubles on purpose
        model.layers[0].w[0] = 0.1 + 0.2;
        model.layers[1].b[1] = -1.0 / 3.0;
        model
    }

    #[test]
    fn round_trip_is_value_exact() {
        let model = sample_model();
        let json = to_json(&model).unwrap();
        let back = from_json(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = sample_model();
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
        // no temp file left behind
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn schema_fields_present() {
        let json = to_json(&sample_model()).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for field in [
            "format_version",
            "parameter",
            "direction",
            "widths",
            "activation",
            "seed",
            "trained_epochs",
            "norm_stats",
            "layers",
        ] {
            assert!(value.get(field).is_some(), "missing field {field}");
        }
        assert_eq!(value["parameter"], "voltage");
        assert_eq!(value["direction"], "charge");
        assert_eq!(value["activation"], "tanh");
        assert!(value["layers"][0].get("W").is_some());
        assert!(value["layers"][0].get("b").is_some());
        assert_eq!(value["layers"][0]["W"].as_array().unwrap().len(), 3);
        assert_eq!(value["layers"][0]["W"][0].as_array().unwrap().len(), 5);
    }

    #[test]
    fn wrong_version_rejected() {
        let json = to_json(&sample_model())
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(matches!(from_json(&json), Err(Error::FormatVersion(99))));
    }

    #[test]
    fn bad_shapes_rejected() {
        let model = sample_model();
        let json = to_json(&model).unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
        value["layers"][0]["b"] = serde_json::json!([1.0, 2.0]);
        assert!(from_json(&value.to_string()).is_err());
    }
}
