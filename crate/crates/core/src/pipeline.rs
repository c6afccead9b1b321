//! Pipeline stages behind the command-line tool, plus their shared configuration.
//!
//! Configuration is one TOML document (every field optional) refined by
//! dotted `key=value` overrides such as `extraction.r_max=48`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    generate_toy_corpus, ingest, load_pairs, write_dataset, CorpusGroup, CorpusSpec,
    DatasetError, IngestOutcome, SplitFractions, ToyCorpusConfig, TOY_CROP_SIZE,
};
use crate::extraction::{extract_pair, ExtractionConfig, ExtractionError, FaceMeta, Landmarks};
use crate::image::{ImageBuffer, ImageError};
use crate::manifest::{DatasetManifest, ManifestError, Split, MANIFEST_FILE};
use crate::reconstruction::{occlusion_mask, reconstruct_iris, InpaintConfig, ReconstructionError};
use crate::report::{render_report, EmptyReport};
use crate::types::{CircleParams, Generator, IrisCrop, IrisPair, PairLabel, Source};
use crate::verifier::{
    evaluate_dataset, load_checkpoint, save_checkpoint, select_threshold, train, Architecture,
    EncoderState, EpochStats, EvalReport, LossConfig, TrainOutcome, TrainingSummary,
    VerifierError,
};

pub const CHECKPOINT_FILE: &str = "model.json";
pub const TRAINING_FILE: &str = "training.json";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const DATASET_DIR: &str = "dataset";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error(transparent)]
    Report(#[from] EmptyReport),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl PipelineError {
    /// 2 for bad configuration, arguments or unreadable inputs; 1 for
    /// failures of the data itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Io { .. }
            | PipelineError::Image(_)
            | PipelineError::Manifest(_)
            | PipelineError::Extraction(ExtractionError::InvalidConfig(_))
            | PipelineError::Reconstruction(ReconstructionError::InvalidConfig(_))
            | PipelineError::Dataset(
                DatasetError::InvalidSpec(_)
                | DatasetError::Pattern(_)
                | DatasetError::Io(_)
                | DatasetError::Image(_)
                | DatasetError::Manifest(_),
            )
            | PipelineError::Verifier(
                VerifierError::Config(_)
                | VerifierError::Architecture(_)
                | VerifierError::Io(_)
                | VerifierError::Format(_),
            ) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Config(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub widths: Vec<usize>,
    pub embed_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let arch = Architecture::small_conv(TOY_CROP_SIZE, 128);
        Self {
            name: arch.name,
            widths: arch.widths,
            embed_dim: arch.embed_dim,
        }
    }
}

impl ModelConfig {
    pub fn architecture(&self, input_size: usize) -> Architecture {
        Architecture::custom(self.name.clone(), input_size, self.widths.clone(), self.embed_dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub root: Option<PathBuf>,
    pub groups: Vec<CorpusGroup>,
    /// JSON object of per-face eye regions.
    pub landmarks: Option<PathBuf>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        let group = |source, generator, pattern: &str| CorpusGroup {
            source,
            generator,
            pattern: pattern.to_string(),
        };
        Self {
            root: None,
            groups: vec![
                group(Source::Real, Generator::None, "real/*.png"),
                group(Source::Gan, Generator::Progan, "progan/*.png"),
                group(Source::Gan, Generator::Stylegan, "stylegan/*.png"),
            ],
            landmarks: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub n_real: usize,
    pub n_gan: usize,
    pub asymmetry: f64,
    pub noise: f64,
    pub crop_size: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n_real: 200,
            n_gan: 200,
            asymmetry: 0.5,
            noise: 0.02,
            crop_size: TOY_CROP_SIZE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub extraction: ExtractionConfig,
    pub inpaint: InpaintConfig,
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub split: SplitFractions,
    pub corpus: CorpusConfig,
    pub toy: ToyConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            extraction: ExtractionConfig::default(),
            inpaint: InpaintConfig::default(),
            model: ModelConfig::default(),
            loss: LossConfig {
                epochs: 3,
                batch_size: 16,
                ..LossConfig::default()
            },
            split: SplitFractions::default(),
            corpus: CorpusConfig::default(),
            toy: ToyConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::from_toml(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    /// Applies `key=value` overrides; values are read as TOML literals and
    /// fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self, PipelineError> {
        let mut doc = toml::Value::try_from(&self).map_err(|e| PipelineError::Config(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("override {item:?} is not key=value")))?;
            let value = parse_literal(raw.trim());
            set_dotted(&mut doc, key.trim(), value)?;
        }
        let cfg: Self = doc
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.extraction.validate()?;
        self.inpaint.validate()?;
        self.loss.validate()?;
        self.split.validate()?;
        self.model.architecture(self.toy.crop_size).validate()?;
        if !(0.0..=1.0).contains(&self.toy.asymmetry) || !(self.toy.noise >= 0.0) {
            return Err(PipelineError::Config(
                "toy.asymmetry must lie in [0, 1] and toy.noise must be >= 0".into(),
            ));
        }
        if self.toy.n_real == 0 || self.toy.n_gan == 0 || self.toy.crop_size < 8 {
            return Err(PipelineError::Config(
                "toy corpus needs pairs of both kinds and crop_size >= 8".into(),
            ));
        }
        Ok(())
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(doc: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), PipelineError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(PipelineError::Config(format!("bad override key {key:?}")));
    }
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| PipelineError::Config(format!("{key}: {part} is not a table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| PipelineError::Config(format!("{key}: parent is not a table")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Result of extracting one face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractRecord {
    pub face_id: String,
    pub left_path: String,
    pub right_path: String,
    pub left_circle: CircleParams,
    pub right_circle: CircleParams,
    pub left_padded: bool,
    pub right_padded: bool,
}

pub fn extract_face(
    cfg: &PipelineConfig,
    input: &Path,
    face_id: Option<&str>,
    source: Source,
    generator: Generator,
    out: &Path,
) -> Result<ExtractRecord, PipelineError> {
    let face = ImageBuffer::load(input)?;
    let face_id = face_id.map(str::to_string).unwrap_or_else(|| {
        input
            .file_stem()
            .map_or_else(|| "face".to_string(), |s| s.to_string_lossy().into_owned())
    });
    let ext_cfg = match &cfg.corpus.landmarks {
        Some(path) => Landmarks::load(path)?.config_for(&face_id, &cfg.extraction),
        None => cfg.extraction.clone(),
    };
    let meta = FaceMeta {
        face_id: face_id.clone(),
        source,
        generator,
        provenance_path: input.display().to_string(),
    };
    let pair = extract_pair(&face, &ext_cfg, &meta)?;
    let left_path = format!("{face_id}_left.png");
    let right_path = format!("{face_id}_right.png");
    pair.left.image.save_png(&out.join(&left_path))?;
    pair.right.image.save_png(&out.join(&right_path))?;
    let record = ExtractRecord {
        face_id: face_id.clone(),
        left_path,
        right_path,
        left_circle: pair.left.circle,
        right_circle: pair.right.circle,
        left_padded: pair.left.padded,
        right_padded: pair.right.padded,
    };
    write_json(&out.join(format!("{face_id}_pair.json")), &record)?;
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructRecord {
    pub occlusion_fraction: f64,
    pub reconstructed: bool,
    pub nonconverged: bool,
    pub output_path: String,
    pub mask_path: String,
}

/// Reconstructs a single iris crop whose limbus is the crop's inscribed
/// circle of radius `size / 2.2`, the geometry produced by extraction.
pub fn reconstruct_file(
    cfg: &PipelineConfig,
    input: &Path,
    out: &Path,
) -> Result<ReconstructRecord, PipelineError> {
    let image = ImageBuffer::load(input)?;
    if image.width() != image.height() {
        return Err(PipelineError::Config(format!(
            "{} is not square ({}x{})",
            input.display(),
            image.width(),
            image.height()
        )));
    }
    let size = image.width();
    let mid = (size as f64 - 1.0) / 2.0;
    let crop = IrisCrop {
        image,
        circle: CircleParams::new(mid, mid, size as f64 / 2.2)
            .map_err(|e| PipelineError::Config(e.to_string()))?,
        occlusion_fraction: 0.0,
        reconstructed: false,
        padded: false,
    };
    let stem = input
        .file_stem()
        .map_or_else(|| "crop".to_string(), |s| s.to_string_lossy().into_owned());
    let mask = occlusion_mask(&crop, &cfg.inpaint);
    let result = reconstruct_iris(&crop, &cfg.inpaint)?;
    let output_path = format!("{stem}_reconstructed.png");
    let mask_path = format!("{stem}_mask.png");
    result.crop.image.save_png(&out.join(&output_path))?;
    let mask_img = ImageBuffer::from_clamped(
        size,
        size,
        1,
        mask.as_slice().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
    );
    mask_img.save_png(&out.join(&mask_path))?;
    let record = ReconstructRecord {
        occlusion_fraction: result.crop.occlusion_fraction,
        reconstructed: result.crop.reconstructed,
        nonconverged: result.nonconverged,
        output_path,
        mask_path,
    };
    write_json(&out.join(format!("{stem}_reconstruction.json")), &record)?;
    Ok(record)
}

/// Ingests `corpus.root` (or `root_override`) into a dataset under `out`.
pub fn build_dataset(
    cfg: &PipelineConfig,
    root_override: Option<&Path>,
    out: &Path,
) -> Result<IngestOutcome, PipelineError> {
    let root = root_override
        .map(Path::to_path_buf)
        .or_else(|| cfg.corpus.root.clone())
        .ok_or_else(|| PipelineError::Config("no corpus root given (corpus.root or --input)".into()))?;
    let landmarks = cfg.corpus.landmarks.as_deref().map(Landmarks::load).transpose()?;
    let spec = CorpusSpec {
        root,
        groups: cfg.corpus.groups.clone(),
        split: cfg.split,
        split_seed: cfg.seed,
    };
    Ok(ingest(&spec, out, &cfg.extraction, &cfg.inpaint, landmarks.as_ref())?)
}

/// Training-side record kept next to a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub history: Vec<EpochStats>,
    pub loss: f64,
    pub accuracy: f64,
    pub minutes: f64,
    pub threshold: f64,
    pub train_pairs: usize,
    pub validation_pairs: usize,
}

impl TrainingRecord {
    pub fn summary(&self) -> TrainingSummary {
        TrainingSummary {
            loss: self.loss,
            accuracy: self.accuracy,
            minutes: self.minutes,
        }
    }
}

fn both_classes(pairs: &[(IrisPair, PairLabel)]) -> bool {
    let genuine = pairs.iter().filter(|(_, y)| y.is_genuine()).count();
    genuine > 0 && genuine < pairs.len()
}

/// Trains on `train_pairs` and picks the decision threshold on
/// `validation` when it holds both labels, else on the last training epoch.
/// With `deterministic`, wall-clock fields are stored as zero.
pub fn fit(
    cfg: &PipelineConfig,
    input_size: usize,
    train_pairs: &[(IrisPair, PairLabel)],
    validation: &[(IrisPair, PairLabel)],
    deterministic: bool,
) -> Result<(TrainOutcome, TrainingRecord), PipelineError> {
    let outcome = train(cfg.model.architecture(input_size), train_pairs, &cfg.loss, cfg.seed)?;
    let last_threshold = outcome.history.last().map(|e| e.threshold);
    let threshold = if both_classes(validation) {
        select_threshold(&outcome.state, validation)?
    } else {
        log::warn!("validation split lacks one label; using the training threshold");
        last_threshold.unwrap_or(50.0)
    };
    let mut summary = TrainingSummary::from_outcome(&outcome);
    if deterministic {
        summary.minutes = 0.0;
    }
    let record = TrainingRecord {
        history: outcome.history.clone(),
        loss: summary.loss,
        accuracy: summary.accuracy,
        minutes: summary.minutes,
        threshold,
        train_pairs: train_pairs.len(),
        validation_pairs: validation.len(),
    };
    Ok((outcome, record))
}

fn load_dataset(dir: &Path) -> Result<DatasetManifest, PipelineError> {
    Ok(DatasetManifest::load(&dir.join(MANIFEST_FILE))?)
}

pub fn train_model(
    cfg: &PipelineConfig,
    dataset: &Path,
    out: &Path,
    deterministic: bool,
) -> Result<TrainingRecord, PipelineError> {
    let manifest = load_dataset(dataset)?;
    let train_pairs = load_pairs(&manifest, dataset, Some(Split::Train))?;
    if train_pairs.is_empty() {
        return Err(DatasetError::EmptyCorpus.into());
    }
    let validation = load_pairs(&manifest, dataset, Some(Split::Val))?;
    let (outcome, record) = fit(cfg, manifest.crop_size, &train_pairs, &validation, deterministic)?;
    save_checkpoint(&out.join(CHECKPOINT_FILE), &outcome.state, Some(record.threshold))?;
    write_json(&out.join(TRAINING_FILE), &record)?;
    Ok(record)
}

fn finish_report(
    mut report: EvalReport,
    deterministic: bool,
    out: &Path,
) -> Result<(EvalReport, String), PipelineError> {
    if deterministic {
        report.compute_minutes = 0.0;
    }
    let table = render_report(std::slice::from_ref(&report))?;
    write_json(&out.join(REPORT_JSON_FILE), &report)?;
    fs::write(out.join(REPORT_TEXT_FILE), &table).map_err(io_err(out))?;
    Ok((report, table))
}

/// Scores the test split with a saved checkpoint. Training figures come from
/// the `training.json` beside the checkpoint when present.
pub fn evaluate_model(
    cfg: &PipelineConfig,
    dataset: &Path,
    checkpoint: &Path,
    out: &Path,
    deterministic: bool,
) -> Result<(EvalReport, String), PipelineError> {
    let (state, threshold) = load_checkpoint(checkpoint)?;
    let manifest = load_dataset(dataset)?;
    let test = load_pairs(&manifest, dataset, Some(Split::Test))?;
    if test.is_empty() {
        return Err(DatasetError::EmptyCorpus.into());
    }
    let sidecar = checkpoint.with_file_name(TRAINING_FILE);
    let training = if sidecar.is_file() {
        read_json::<TrainingRecord>(&sidecar)?.summary()
    } else {
        TrainingSummary::default()
    };
    let threshold = threshold.unwrap_or_else(|| {
        log::warn!("checkpoint carries no threshold; using 50");
        50.0
    });
    let report = evaluate_dataset(&state, &test, threshold, &cfg.loss, &training)?;
    finish_report(report, deterministic, out)
}

/// Collects rows from JSON files holding one report or an array of them.
pub fn report_files(inputs: &[PathBuf], out: &Path) -> Result<String, PipelineError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Rows {
        One(EvalReport),
        Many(Vec<EvalReport>),
    }
    let mut rows = Vec::new();
    for path in inputs {
        match read_json::<Rows>(path)? {
            Rows::One(r) => rows.push(r),
            Rows::Many(rs) => rows.extend(rs),
        }
    }
    let table = render_report(&rows)?;
    fs::write(out.join(REPORT_TEXT_FILE), &table).map_err(io_err(out))?;
    Ok(table)
}

/// Everything a toy run produces.
#[derive(Clone, Debug)]
pub struct ToyRun {
    pub state: EncoderState,
    pub training: TrainingRecord,
    pub report: EvalReport,
    pub manifest: DatasetManifest,
    pub table: String,
}

fn split_pairs(
    pairs: Vec<(IrisPair, PairLabel)>,
    manifest: &DatasetManifest,
) -> [Vec<(IrisPair, PairLabel)>; 3] {
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for ((pair, y), entry) in pairs.into_iter().zip(&manifest.entries) {
        let slot = match entry.split {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        };
        out[slot].push((pair, y));
    }
    out
}

/// Toy corpus → dataset on disk → train → validate threshold → test report.
pub fn toy_demo(
    cfg: &PipelineConfig,
    out: &Path,
    deterministic: bool,
) -> Result<ToyRun, PipelineError> {
    cfg.validate()?;
    let toy_cfg = ToyCorpusConfig {
        n_real: cfg.toy.n_real,
        n_gan: cfg.toy.n_gan,
        asymmetry: cfg.toy.asymmetry,
        noise: cfg.toy.noise,
        seed: cfg.seed,
        crop_size: cfg.toy.crop_size,
    };
    let pairs = generate_toy_corpus(&toy_cfg);
    let crops: Vec<IrisPair> = pairs.iter().map(|(p, _)| p.clone()).collect();
    let manifest = write_dataset(&crops, &out.join(DATASET_DIR), &cfg.split, cfg.seed)?;
    let [train_pairs, validation, test] = split_pairs(pairs, &manifest);
    if test.is_empty() {
        return Err(DatasetError::EmptyCorpus.into());
    }
    let (outcome, training) = fit(cfg, cfg.toy.crop_size, &train_pairs, &validation, deterministic)?;
    save_checkpoint(&out.join(CHECKPOINT_FILE), &outcome.state, Some(training.threshold))?;
    write_json(&out.join(TRAINING_FILE), &training)?;
    let report = evaluate_dataset(
        &outcome.state,
        &test,
        training.threshold,
        &cfg.loss,
        &training.summary(),
    )?;
    let (report, table) = finish_report(report, deterministic, out)?;
    Ok(ToyRun {
        state: outcome.state,
        training,
        report,
        manifest,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(PipelineConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn dotted_overrides() {
        let cfg = PipelineConfig::default()
            .with_overrides(&[
                "extraction.r_max=48",
                "seed = 9",
                "extraction.contour_arcs=[[-60, 60], [120, 240]]",
                "corpus.root=/data/faces",
                "loss.optimizer=SGD",
            ])
            .unwrap();
        assert_eq!(cfg.extraction.r_max, 48.0);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.extraction.contour_arcs, vec![(-60.0, 60.0), (120.0, 240.0)]);
        assert_eq!(cfg.corpus.root, Some(PathBuf::from("/data/faces")));
        assert_eq!(cfg.loss.optimizer, crate::verifier::Optimizer::Sgd);
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        for bad in ["nokey", "extraction.bogus=1", "seed=abc", "extraction..r_max=1", "seed.x=1"] {
            let err = PipelineConfig::default().with_overrides(&[bad]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(PipelineError::from(DatasetError::EmptyCorpus).exit_code(), 1);
        assert_eq!(PipelineError::from(VerifierError::SingleClass).exit_code(), 1);
        assert_eq!(PipelineError::from(EmptyReport).exit_code(), 1);
        assert_eq!(
            PipelineError::from(ExtractionError::InvalidConfig("x".into())).exit_code(),
            2
        );
    }

    #[test]
    fn toy_demo_small() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::default()
            .with_overrides(&[
                "toy.n_real=12",
                "toy.n_gan=12",
                "toy.crop_size=16",
                "model.widths=[4, 4]",
                "model.embed_dim=8",
                "loss.epochs=2",
            ])
            .unwrap();
        let run = toy_demo(&cfg, dir.path(), true).unwrap();
        assert_eq!(run.manifest.entries.len(), 24);
        assert_eq!(run.report.compute_minutes, 0.0);
        for f in [CHECKPOINT_FILE, TRAINING_FILE, REPORT_JSON_FILE, REPORT_TEXT_FILE] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        assert!(dir.path().join(DATASET_DIR).join(MANIFEST_FILE).is_file());
        assert!(run.table.lines().nth(2).unwrap().starts_with("SmallConv"));
    }
}
