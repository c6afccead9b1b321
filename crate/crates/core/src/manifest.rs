//! Persisted description of a categorized iris-pair dataset.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Component, Path};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{CircleParams, Generator, Side, Source};

pub const SCHEMA_VERSION: &str = "1.0";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read dataset root {path}: {source}")]
    Root { path: String, source: io::Error },
    #[error("manifest I/O: {0}")]
    Io(#[from] io::Error),
    #[error("manifest parse: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// A value recorded for each eye.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerSide<T> {
    pub left: T,
    pub right: T,
}

impl<T: Copy> PerSide<T> {
    pub fn get(&self, side: Side) -> T {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub face_id: String,
    pub source: Source,
    pub generator: Generator,
    pub split: Split,
    /// Crop paths relative to the manifest root.
    pub left_path: String,
    pub right_path: String,
    pub left_circle: CircleParams,
    pub right_circle: CircleParams,
    pub occlusion_fractions: PerSide<f64>,
    pub reconstructed: PerSide<bool>,
    #[serde(default)]
    pub padded: PerSide<bool>,
    #[serde(default)]
    pub inpaint_nonconverged: PerSide<bool>,
}

impl ManifestEntry {
    pub fn path(&self, side: Side) -> &str {
        match side {
            Side::Left => &self.left_path,
            Side::Right => &self.right_path,
        }
    }

    pub fn circle(&self, side: Side) -> CircleParams {
        match side {
            Side::Left => self.left_circle,
            Side::Right => self.right_circle,
        }
    }
}

/// Ingestion bookkeeping carried alongside the entries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub attempted: usize,
    pub extraction_failed: usize,
    pub too_occluded: usize,
    pub reconstructed_crops: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: String,
    pub crop_size: usize,
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub stats: IngestStats,
}

impl DatasetManifest {
    pub fn new(crop_size: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            crop_size,
            entries: Vec::new(),
            stats: IngestStats::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest is always serializable");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    SchemaVersion,
    UniqueFaceId,
    PathResolves(Side),
    SourceGenerator,
    PositiveRadius(Side),
    OcclusionRange(Side),
    ReconstructedImpliesOcclusion(Side),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::SchemaVersion => write!(f, "schema version supported"),
            Rule::UniqueFaceId => write!(f, "face_id unique"),
            Rule::PathResolves(s) => write!(f, "{s} path resolves"),
            Rule::SourceGenerator => write!(f, "source/generator consistent"),
            Rule::PositiveRadius(s) => write!(f, "{s} circle radius positive"),
            Rule::OcclusionRange(s) => write!(f, "{s} occlusion fraction in [0,1]"),
            Rule::ReconstructedImpliesOcclusion(s) => {
                write!(f, "{s} reconstructed implies occlusion > 0")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// `None` for manifest-level rules.
    pub face_id: Option<String>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.face_id {
            Some(id) => write!(f, "{id}: {}", self.rule),
            None => write!(f, "manifest: {}", self.rule),
        }
    }
}

/// Checks every manifest invariant against the files under `root`.
///
/// An unreadable `root` is an error, not a violation.
pub fn validate_manifest(
    manifest: &DatasetManifest,
    root: &Path,
) -> Result<Vec<Violation>, ManifestError> {
    fs::read_dir(root).map_err(|source| ManifestError::Root {
        path: root.display().to_string(),
        source,
    })?;

    let mut violations = Vec::new();
    if manifest.schema_version != SCHEMA_VERSION {
        violations.push(Violation {
            face_id: None,
            rule: Rule::SchemaVersion,
        });
    }

    let mut seen = HashSet::new();
    for entry in &manifest.entries {
        let mut flag = |rule| {
            violations.push(Violation {
                face_id: Some(entry.face_id.clone()),
                rule,
            })
        };
        if !seen.insert(entry.face_id.as_str()) {
            flag(Rule::UniqueFaceId);
        }
        if !entry.source.is_consistent_with(entry.generator) {
            flag(Rule::SourceGenerator);
        }
        for side in [Side::Left, Side::Right] {
            if !resolves_under(root, entry.path(side)) {
                flag(Rule::PathResolves(side));
            }
            if !(entry.circle(side).r > 0.0) {
                flag(Rule::PositiveRadius(side));
            }
            let occ = entry.occlusion_fractions.get(side);
            if !(0.0..=1.0).contains(&occ) {
                flag(Rule::OcclusionRange(side));
            }
            if entry.reconstructed.get(side) && !(occ > 0.0) {
                flag(Rule::ReconstructedImpliesOcclusion(side));
            }
        }
    }
    Ok(violations)
}

fn resolves_under(root: &Path, rel: &str) -> bool {
    let rel = Path::new(rel);
    let contained = rel
        .components()
        .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
    contained && root.join(rel).is_file()
}
