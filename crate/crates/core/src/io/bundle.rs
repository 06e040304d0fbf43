//! Weight bundles: a directory holding one tensor file per parameter and a
//! `manifest.json` naming them.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tensor_file::{read_tensor, write_tensor, DType};
use crate::error::{Error, Result};
use crate::sam::{SamConfig, SamWeights};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub config: SamConfig,
    /// Parameter name to file name, relative to the bundle directory.
    pub params: BTreeMap<String, String>,
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<(SamConfig, SamWeights)> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    let mut named = HashMap::new();
    for (name, file) in &manifest.params {
        if Path::new(file).is_absolute() || file.split(['/', '\\']).any(|c| c == "..") {
            return Err(Error::Weights(format!("{name}: file {file:?} escapes the bundle")));
        }
        let (t, _) = read_tensor(dir.join(file))?;
        named.insert(name.clone(), t);
    }
    let weights = SamWeights::from_named(named, &manifest.config)?;
    Ok((manifest.config, weights))
}

/// Writes every parameter as `<name>.tspt` plus the manifest.
pub fn save_bundle(dir: impl AsRef<Path>, cfg: &SamConfig, weights: &SamWeights, dtype: DType) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut params = BTreeMap::new();
    for (name, t) in weights.named() {
        let file = format!("{name}.tspt");
        write_tensor(dir.join(&file), t, dtype)?;
        params.insert(name.to_string(), file);
    }
    let manifest = Manifest { config: *cfg, params };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn cfg() -> SamConfig {
        SamConfig {
            map_h: 2,
            map_w: 3,
            in_channels: 2,
            channels: 2,
            hidden: 3,
            attn_dim: 2,
            embed_dim: 2,
            num_classes: 5,
            max_steps: 4,
            beam_k: 2,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = SamWeights::random(&cfg(), 3).unwrap();
        save_bundle(dir.path(), &cfg(), &w, DType::F64).unwrap();
        let (c, back) = load_bundle(dir.path()).unwrap();
        assert_eq!(c, cfg());
        assert_eq!(back, w);
    }

    #[test]
    fn rejects_inconsistent_bundles() {
        let dir = tempfile::tempdir().unwrap();
        let w = SamWeights::random(&cfg(), 3).unwrap();
        save_bundle(dir.path(), &cfg(), &w, DType::F32).unwrap();
        write_tensor(dir.path().join("out.b_o.tspt"), &Tensor::zeros(&[4]).unwrap(), DType::F32).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Weights(_))));

        std::fs::remove_file(dir.path().join("out.b_o.tspt")).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Io { .. })));

        std::fs::write(dir.path().join(MANIFEST_FILE), "{\"params\": 3}").unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Schema { .. })));

        std::fs::write(dir.path().join(MANIFEST_FILE), r#"{"params": {"attn.b": "../x.tspt"}}"#).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Weights(_))));
    }
}
