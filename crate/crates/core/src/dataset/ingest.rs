use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DatasetError;
use crate::extraction::{extract_pair, ExtractionConfig, FaceMeta, Landmarks};
use crate::image::ImageBuffer;
use crate::manifest::{DatasetManifest, ManifestEntry, PerSide, Split, MANIFEST_FILE};
use crate::reconstruction::{reconstruct_iris, InpaintConfig};
use crate::types::{Generator, IrisCrop, IrisPair, PairLabel, Side, Source};

pub const INGEST_LOG_FILE: &str = "ingest_log.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusGroup {
    pub source: Source,
    pub generator: Generator,
    /// Glob relative to the corpus root, e.g. `real/*.png`.
    pub pattern: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(*p > 0.0)) {
            return Err(DatasetError::InvalidSpec("split fractions must be positive".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidSpec("split fractions must sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub root: PathBuf,
    pub groups: Vec<CorpusGroup>,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default)]
    pub split_seed: u64,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.split.validate()?;
        if let Some(g) = self
            .groups
            .iter()
            .find(|g| !g.source.is_consistent_with(g.generator))
        {
            return Err(DatasetError::InvalidSpec(format!(
                "group {:?} pairs source {:?} with generator {:?}",
                g.pattern, g.source, g.generator
            )));
        }
        Ok(())
    }
}

/// A face that did not make it into the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub face_id: String,
    pub path: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IngestOutcome {
    pub manifest: DatasetManifest,
    pub failures: Vec<FailureRecord>,
}

/// Split from a seeded SHA-256 of the face id, independent of enumeration order.
pub fn assign_split(face_id: &str, seed: u64, fractions: &SplitFractions) -> Split {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(face_id.as_bytes());
    let digest = hasher.finalize();
    let word = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    let u = (word >> 11) as f64 / (1u64 << 53) as f64;
    if u < fractions.train {
        Split::Train
    } else if u < fractions.train + fractions.val {
        Split::Val
    } else {
        Split::Test
    }
}

fn crop_rel_path(source: Source, generator: Generator, side: Side, face_id: &str) -> String {
    format!(
        "{}/{}/{}/{}.png",
        source.dir_name(),
        generator.dir_name(),
        side.dir_name(),
        face_id
    )
}

fn write_crops(
    out_root: &Path,
    pair: &IrisPair,
    split: Split,
    nonconverged: PerSide<bool>,
) -> Result<ManifestEntry, DatasetError> {
    let mut paths = Vec::with_capacity(2);
    for side in [Side::Left, Side::Right] {
        let rel = crop_rel_path(pair.source, pair.generator, side, &pair.face_id);
        let abs = out_root.join(&rel);
        if let Some(parent) = abs.parent() {
            fs::create_dir_all(parent)?;
        }
        pair.crop(side).image.save_png(&abs)?;
        paths.push(rel);
    }
    let right_path = paths.pop().unwrap();
    let left_path = paths.pop().unwrap();
    Ok(ManifestEntry {
        face_id: pair.face_id.clone(),
        source: pair.source,
        generator: pair.generator,
        split,
        left_path,
        right_path,
        left_circle: pair.left.circle,
        right_circle: pair.right.circle,
        occlusion_fractions: PerSide {
            left: pair.left.occlusion_fraction,
            right: pair.right.occlusion_fraction,
        },
        reconstructed: PerSide {
            left: pair.left.reconstructed,
            right: pair.right.reconstructed,
        },
        padded: PerSide {
            left: pair.left.padded,
            right: pair.right.padded,
        },
        inpaint_nonconverged: nonconverged,
    })
}

/// Writes already-built pairs in the dataset layout and returns their manifest.
pub fn write_dataset(
    pairs: &[IrisPair],
    out_root: &Path,
    split: &SplitFractions,
    split_seed: u64,
) -> Result<DatasetManifest, DatasetError> {
    split.validate()?;
    let crop_size = pairs.first().map_or(0, |p| p.left.size());
    let mut manifest = DatasetManifest::new(crop_size);
    fs::create_dir_all(out_root)?;
    for pair in pairs {
        let assigned = assign_split(&pair.face_id, split_seed, split);
        manifest
            .entries
            .push(write_crops(out_root, pair, assigned, PerSide::default())?);
        manifest.stats.reconstructed_crops +=
            usize::from(pair.left.reconstructed) + usize::from(pair.right.reconstructed);
    }
    manifest.stats.attempted = pairs.len();
    manifest.save(&out_root.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn face_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Runs extraction and reconstruction over every face in the corpus and
/// persists the categorized crops, manifest and failure log under `out_root`.
///
/// Faces listed in `landmarks` use their own eye regions.
pub fn ingest(
    spec: &CorpusSpec,
    out_root: &Path,
    ext_cfg: &ExtractionConfig,
    inpaint_cfg: &InpaintConfig,
    landmarks: Option<&Landmarks>,
) -> Result<IngestOutcome, DatasetError> {
    spec.validate()?;
    ext_cfg
        .validate()
        .map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
    inpaint_cfg
        .validate()
        .map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
    if !spec.root.is_dir() {
        return Err(DatasetError::InvalidSpec(format!(
            "corpus root {} is not a directory",
            spec.root.display()
        )));
    }
    fs::create_dir_all(out_root)?;
    let mut manifest = DatasetManifest::new(ext_cfg.crop_size);
    let mut failures = Vec::new();
    let mut seen = HashSet::new();

    for group in &spec.groups {
        let pattern = spec.root.join(&group.pattern);
        let mut paths: Vec<PathBuf> = glob::glob(&pattern.to_string_lossy())?
            .filter_map(Result::ok)
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        for path in paths {
            manifest.stats.attempted += 1;
            let face_id = face_id_of(&path);
            let shown = path.display().to_string();
            let mut fail = |reason: String| {
                log::warn!("{face_id}: {reason}");
                failures.push(FailureRecord {
                    face_id: face_id.clone(),
                    path: shown.clone(),
                    reason,
                });
            };
            if !seen.insert(face_id.clone()) {
                fail("duplicate face_id".into());
                continue;
            }
            let face = match ImageBuffer::load(&path) {
                Ok(img) => img,
                Err(e) => {
                    fail(format!("unreadable image: {e}"));
                    continue;
                }
            };
            let meta = FaceMeta {
                face_id: face_id.clone(),
                source: group.source,
                generator: group.generator,
                provenance_path: shown.clone(),
            };
            let face_cfg = match landmarks {
                Some(lm) => lm.config_for(&face_id, ext_cfg),
                None => ext_cfg.clone(),
            };
            let pair = match extract_pair(&face, &face_cfg, &meta) {
                Ok(pair) => pair,
                Err(e) => {
                    manifest.stats.extraction_failed += 1;
                    fail(e.to_string());
                    continue;
                }
            };
            let left = reconstruct_iris(&pair.left, inpaint_cfg);
            let right = reconstruct_iris(&pair.right, inpaint_cfg);
            let (left, right) = match (left, right) {
                (Ok(l), Ok(r)) => (l, r),
                (Err(e), _) | (_, Err(e)) => {
                    manifest.stats.too_occluded += 1;
                    fail(e.to_string());
                    continue;
                }
            };
            let nonconverged = PerSide {
                left: left.nonconverged,
                right: right.nonconverged,
            };
            let pair = IrisPair {
                left: left.crop,
                right: right.crop,
                ..pair
            };
            manifest.stats.reconstructed_crops +=
                usize::from(pair.left.reconstructed) + usize::from(pair.right.reconstructed);
            let split = assign_split(&face_id, spec.split_seed, &spec.split);
            manifest
                .entries
                .push(write_crops(out_root, &pair, split, nonconverged)?);
        }
    }

    let mut log = fs::File::create(out_root.join(INGEST_LOG_FILE))?;
    for f in &failures {
        writeln!(log, "{}\t{}\t{}", f.face_id, f.path, f.reason)?;
    }
    if manifest.entries.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    manifest.save(&out_root.join(MANIFEST_FILE))?;
    Ok(IngestOutcome { manifest, failures })
}

fn load_crop(root: &Path, entry: &ManifestEntry, side: Side) -> Result<IrisCrop, DatasetError> {
    let path = root.join(entry.path(side));
    let image = ImageBuffer::load(&path)?;
    Ok(IrisCrop {
        image,
        circle: entry.circle(side),
        occlusion_fraction: entry.occlusion_fractions.get(side),
        reconstructed: entry.reconstructed.get(side),
        padded: entry.padded.get(side),
    })
}

/// Reads labelled pairs back from disk, optionally restricted to one split.
pub fn load_pairs(
    manifest: &DatasetManifest,
    root: &Path,
    split: Option<Split>,
) -> Result<Vec<(IrisPair, PairLabel)>, DatasetError> {
    manifest
        .entries
        .iter()
        .filter(|e| split.is_none_or(|s| e.split == s))
        .map(|e| {
            let left = load_crop(root, e, Side::Left)?;
            let right = load_crop(root, e, Side::Right)?;
            let pair = IrisPair::new(
                e.face_id.clone(),
                left,
                right,
                e.source,
                e.generator,
                e.path(Side::Left).to_string(),
            )
            .map_err(|err| DatasetError::Crop {
                path: e.face_id.clone(),
                reason: err.to_string(),
            })?;
            Ok((pair, e.source.label()))
        })
        .collect()
}
