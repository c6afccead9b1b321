//! Corpus ingestion, on-disk dataset layout, quality metrics and toy corpora.
//!
//! Crops live at `<root>/<source>/<generator>/<side>/<face_id>.png` next to
//! `<root>/manifest.json` and `<root>/ingest_log.txt`.

mod ingest;
mod quality;
mod toy;

pub use ingest::{
    assign_split, ingest, load_pairs, write_dataset, CorpusGroup, CorpusSpec, FailureRecord,
    IngestOutcome, SplitFractions, INGEST_LOG_FILE,
};
pub use quality::{image_quality_metrics, psnr, ssim, QualityMetrics, SSIM_WINDOW};
pub use toy::{
    generate_toy_corpus, generate_toy_pairs, render_synthetic_face, FaceFixture, ToyCorpusConfig,
    TOY_CROP_SIZE,
};

use thiserror::Error;

use crate::image::ImageError;
use crate::manifest::ManifestError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no face produced a usable iris pair")]
    EmptyCorpus,
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error("bad glob pattern: {0}")]
    Pattern(#[from] glob::PatternError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("crop {path}: {reason}")]
    Crop { path: String, reason: String },
}
