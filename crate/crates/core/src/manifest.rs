//! Dataset manifest: one JSON object per line linking an image id to its
//! feature container, optional ground-truth depth file and scene class.
//!
//! ```text
//! {"image_id": "bathroom_0001", "features_path": "feat/bathroom_0001.dce", "gt_path": "gt/bathroom_0001.dpm", "scene_class": "bathroom"}
//! ```
//!
//! Relative paths resolve against the manifest's directory. Blank lines and
//! lines starting with `#` are skipped.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::container::read_feature_map;
use crate::io::depth_file::read_depth_map;
use crate::model::{DepthMap, FeatureMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub image_id: String,
    pub features_path: PathBuf,
    #[serde(default)]
    pub gt_path: Option<PathBuf>,
    #[serde(default)]
    pub scene_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    root: PathBuf,
    records: Vec<ManifestRecord>,
}

/// A manifest record with its feature map and ground truth loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub image_id: String,
    pub scene_class: Option<String>,
    pub features: FeatureMap,
    pub gt: Option<DepthMap>,
}

/// Ground truth only, for consumers that never look at features.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRecord {
    pub image_id: String,
    pub scene_class: Option<String>,
    pub gt: DepthMap,
}

impl Manifest {
    /// Builds a manifest whose relative paths resolve against `root`.
    pub fn from_records(records: Vec<ManifestRecord>, root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::Manifest {
                    path: root.clone(),
                    line: i + 1,
                    message: format!("duplicate image_id {:?}", r.image_id),
                });
            }
        }
        Ok(Self { root, records })
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let root = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Manifest {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let record: ManifestRecord =
                serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            if !seen.insert(record.image_id.clone()) {
                return Err(err(format!("duplicate image_id {:?}", record.image_id)));
            }
            records.push(record);
        }
        Ok(Self { root, records })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    /// Loads every record's feature map and ground truth, in manifest order.
    pub fn load_records(&self) -> Result<Vec<EvalRecord>> {
        self.records
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                let load = || -> Result<EvalRecord> {
                    let features = read_feature_map(self.resolve(&r.features_path))?;
                    let gt = r
                        .gt_path
                        .as_ref()
                        .map(|p| read_depth_map(self.resolve(p)))
                        .transpose()?;
                    Ok(EvalRecord {
                        image_id: r.image_id.clone(),
                        scene_class: r.scene_class.clone(),
                        features,
                        gt,
                    })
                };
                load().map_err(|e| e.at_image(i))
            })
            .collect()
    }

    /// Loads ground truth for every record; records without a `gt_path` are an error.
    pub fn load_ground_truth(&self) -> Result<Vec<GroundTruthRecord>> {
        self.records
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                let path = r
                    .gt_path
                    .as_ref()
                    .ok_or_else(|| Error::MissingGroundTruth(r.image_id.clone()).at_image(i))?;
                Ok(GroundTruthRecord {
                    image_id: r.image_id.clone(),
                    scene_class: r.scene_class.clone(),
                    gt: read_depth_map(self.resolve(path)).map_err(|e| e.at_image(i))?,
                })
            })
            .collect()
    }
}
