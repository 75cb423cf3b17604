//! `tagger-ckpt v1`: one JSON manifest line, then one base64 line per
//! parameter holding its little-endian f32 values in row-major order.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::layout;
use super::{Param, TaggerConfig, TaggerModel, PARAMETER_COUNT_FORMULA};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: &str = "tagger-ckpt v1";

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: String,
    config: TaggerConfig,
    parameters: Vec<ParamEntry>,
    parameter_count: usize,
    parameter_count_formula: String,
    checksum: String,
}

fn block_bytes(data: &[f64]) -> Vec<u8> {
    data.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn model_to_bytes(model: &TaggerModel) -> Result<Vec<u8>> {
    let blocks: Vec<Vec<u8>> = model.params().iter().map(|p| block_bytes(&p.data)).collect();
    let mut hasher = Sha256::new();
    blocks.iter().for_each(|b| hasher.update(b));
    let manifest = Manifest {
        version: CHECKPOINT_VERSION.to_string(),
        config: model.config().clone(),
        parameters: model
            .params()
            .iter()
            .map(|p| ParamEntry {
                name: p.name.clone(),
                shape: p.shape.clone(),
            })
            .collect(),
        parameter_count: model.parameter_count(),
        parameter_count_formula: PARAMETER_COUNT_FORMULA.to_string(),
        checksum: format!("sha256:{:x}", hasher.finalize()),
    };
    let mut out = serde_json::to_vec(&manifest)?;
    out.push(b'\n');
    for b in &blocks {
        out.extend_from_slice(STANDARD.encode(b).as_bytes());
        out.push(b'\n');
    }
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<TaggerModel> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Checkpoint("not UTF-8 text".into()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Checkpoint("empty file".into()))?;
    let manifest: Manifest =
        serde_json::from_str(header).map_err(|e| Error::Checkpoint(format!("bad manifest: {e}")))?;
    if manifest.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "version {:?}, expected {CHECKPOINT_VERSION:?}",
            manifest.version
        )));
    }
    manifest
        .config
        .validate()
        .map_err(|e| Error::Checkpoint(format!("manifest config: {e}")))?;
    let expected = layout(&manifest.config);
    let shapes_match = expected.len() == manifest.parameters.len()
        && expected
            .iter()
            .zip(&manifest.parameters)
            .all(|((n, s), e)| *n == e.name && *s == e.shape);
    if !shapes_match || manifest.parameter_count != manifest.config.parameter_count() {
        return Err(Error::Checkpoint(
            "config mismatch: manifest parameters do not follow from its config".into(),
        ));
    }

    let mut hasher = Sha256::new();
    let mut params = Vec::with_capacity(expected.len());
    for entry in manifest.parameters {
        let raw = match lines.next().map(|l| STANDARD.decode(l.trim_end())) {
            Some(Ok(raw)) => raw,
            Some(Err(_)) | None => {
                return Err(Error::Checkpoint(format!(
                    "checksum failure: block for {} missing or corrupt",
                    entry.name
                )))
            }
        };
        let n: usize = entry.shape.iter().product();
        if raw.len() != 4 * n {
            return Err(Error::Checkpoint(format!(
                "checksum failure: block for {} has {} bytes, shape {:?} needs {}",
                entry.name,
                raw.len(),
                entry.shape,
                4 * n
            )));
        }
        hasher.update(&raw);
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        params.push(Param {
            name: entry.name,
            shape: entry.shape,
            data,
        });
    }
    let digest = format!("sha256:{:x}", hasher.finalize());
    if digest != manifest.checksum {
        return Err(Error::Checkpoint(format!(
            "checksum failure: computed {digest}, manifest has {}",
            manifest.checksum
        )));
    }
    TaggerModel::from_params(manifest.config, params).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_model(model: &TaggerModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TaggerModel> {
    model_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> TaggerModel {
        let c = TaggerConfig {
            hidden_dim: 5,
            layers: 2,
            seed: 12,
            class_weights: [[8.0, 1.6, 4.0 / 9.0], [2.0, 1.0, 0.5]],
            ..TaggerConfig::new(7)
        };
        TaggerModel::init(&c).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = model();
        let bytes = model_to_bytes(&m).unwrap();
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(back.config(), m.config());
        for (a, b) in m.params().iter().zip(back.params()) {
            assert_eq!(a.name, b.name);
            let bits = |p: &Param| p.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        let header = bytes.split(|&b| b == b'\n').next().unwrap();
        let manifest: serde_json::Value = serde_json::from_slice(header).unwrap();
        assert_eq!(manifest["version"], CHECKPOINT_VERSION);
        assert_eq!(manifest["parameter_count"], m.parameter_count());
    }

    #[test]
    fn save_and_load_through_a_file() {
        let m = model();
        let dir = std::env::temp_dir().join(format!("ckpt-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.ckpt");
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.params(), m.params());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let bytes = model_to_bytes(&model()).unwrap();
        for cut in [bytes.len() - 10, bytes.len() * 2 / 3] {
            let err = model_from_bytes(&bytes[..cut]).unwrap_err().to_string();
            assert!(err.contains("checksum"), "{err}");
        }
    }

    #[test]
    fn flipped_value_fails_checksum() {
        let m = model();
        let mut other = m.clone();
        other.params_mut()[3].data[0] += 0.5;
        let good = String::from_utf8(model_to_bytes(&m).unwrap()).unwrap();
        let bad = String::from_utf8(model_to_bytes(&other).unwrap()).unwrap();
        let mut lines: Vec<&str> = good.lines().collect();
        lines[4] = bad.lines().nth(4).unwrap();
        let err = model_from_bytes(lines.join("\n").as_bytes()).unwrap_err().to_string();
        assert!(err.contains("checksum"), "{err}");
    }

    #[test]
    fn config_mismatch_and_version() {
        let text = String::from_utf8(model_to_bytes(&model()).unwrap()).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut manifest: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
        manifest["config"]["hidden_dim"] = 6.into();
        lines[0] = manifest.to_string();
        let err = model_from_bytes(lines.join("\n").as_bytes()).unwrap_err().to_string();
        assert!(err.contains("config mismatch"), "{err}");

        let mut manifest: serde_json::Value = serde_json::from_str(&text.lines().next().unwrap()).unwrap();
        manifest["version"] = "tagger-ckpt v0".into();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[0] = manifest.to_string();
        let err = model_from_bytes(lines.join("\n").as_bytes()).unwrap_err().to_string();
        assert!(err.contains("version"), "{err}");
    }
}
