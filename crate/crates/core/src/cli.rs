//! Command-line front end. [`run`] parses arguments, runs one stage and
//! returns the process exit code: 0 on success, 1 when the data defeats the
//! stage, 2 for usage and configuration errors.
//!
//! Every invocation that gets as far as creating `--out` leaves a `run.json`
//! there describing the configuration, seed, timing and outcome.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::pipeline::{
    build_dataset, evaluate_model, extract_face, reconstruct_file, report_files, toy_demo,
    train_model, PipelineConfig, PipelineError,
};
use crate::types::{Generator, Source};

pub const RUN_METADATA_FILE: &str = "run.json";

#[derive(Debug, Parser)]
#[command(name = "iris-forensics", version, about = "Left/right iris consistency checks for face images")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Dotted configuration override, e.g. `--set extraction.r_max=48`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single worker and zeroed wall-clock fields in persisted artifacts.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Debug, Args, Default)]
struct ExtractionFlags {
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    crop_size: Option<usize>,
    /// Contour arc in degrees as `START:END`; repeat for several arcs.
    #[arg(long = "arc", value_name = "START:END", allow_hyphen_values = true)]
    arcs: Vec<String>,
    /// JSON file of per-face eye regions.
    #[arg(long)]
    landmarks: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct InpaintFlags {
    #[arg(long)]
    mad_k: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    occlusion_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Real,
    Gan,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeneratorArg {
    None,
    Progan,
    Stylegan,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Localize and crop both irises of one face image.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        face_id: Option<String>,
        #[arg(long, value_enum, default_value = "real")]
        source: SourceArg,
        #[arg(long, value_enum, default_value = "none")]
        generator: GeneratorArg,
        #[command(flatten)]
        extraction: ExtractionFlags,
    },
    /// Mask and inpaint one iris crop.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        inpaint: InpaintFlags,
    },
    /// Ingest a face corpus into a categorized iris dataset.
    Build {
        /// Corpus root; defaults to `corpus.root` from the configuration.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        extraction: ExtractionFlags,
        #[command(flatten)]
        inpaint: InpaintFlags,
    },
    /// Train the siamese encoder on a dataset's train split.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Score a dataset's test split with a checkpoint.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Render report rows from JSON files as a table.
    Report { inputs: Vec<PathBuf> },
    /// Toy corpus end to end: dataset, training, evaluation, table.
    ToyDemo,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Extract { .. } => "extract",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Build { .. } => "build",
            Command::Train { .. } => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Report { .. } => "report",
            Command::ToyDemo => "toy-demo",
        }
    }
}

fn extraction_overrides(flags: &ExtractionFlags, out: &mut Vec<String>) -> Result<(), PipelineError> {
    if let Some(v) = flags.r_min {
        out.push(format!("extraction.r_min={v:?}"));
    }
    if let Some(v) = flags.r_max {
        out.push(format!("extraction.r_max={v:?}"));
    }
    if let Some(v) = flags.crop_size {
        out.push(format!("extraction.crop_size={v}"));
    }
    if !flags.arcs.is_empty() {
        let arcs = flags
            .arcs
            .iter()
            .map(|a| {
                let (s, e) = a
                    .split_once(':')
                    .ok_or_else(|| PipelineError::Config(format!("arc {a:?} is not START:END")))?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| PipelineError::Config(format!("arc {a:?}: bad angle {t:?}")))
                };
                Ok(format!("[{:?}, {:?}]", parse(s)?, parse(e)?))
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        out.push(format!("extraction.contour_arcs=[{}]", arcs.join(", ")));
    }
    if let Some(p) = &flags.landmarks {
        out.push(format!("corpus.landmarks={:?}", p.display().to_string()));
    }
    Ok(())
}

fn inpaint_overrides(flags: &InpaintFlags, out: &mut Vec<String>) {
    if let Some(v) = flags.mad_k {
        out.push(format!("inpaint.mad_k={v:?}"));
    }
    if let Some(v) = flags.tol {
        out.push(format!("inpaint.tol={v:?}"));
    }
    if let Some(v) = flags.max_iters {
        out.push(format!("inpaint.max_iters={v}"));
    }
    if let Some(v) = flags.occlusion_threshold {
        out.push(format!("inpaint.occlusion_reject_threshold={v:?}"));
    }
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let base = match &cli.common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let mut overrides = cli.common.overrides.clone();
    match &cli.command {
        Command::Extract { extraction, .. } => extraction_overrides(extraction, &mut overrides)?,
        Command::Reconstruct { inpaint, .. } => inpaint_overrides(inpaint, &mut overrides),
        Command::Build {
            extraction,
            inpaint,
            input: _,
        } => {
            extraction_overrides(extraction, &mut overrides)?;
            inpaint_overrides(inpaint, &mut overrides);
        }
        _ => {}
    }
    let mut cfg = base.with_overrides(&overrides)?;
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let out = &cli.common.out;
    let deterministic = cli.common.deterministic;
    match &cli.command {
        Command::Extract {
            input,
            face_id,
            source,
            generator,
            ..
        } => {
            let source = match source {
                SourceArg::Real => Source::Real,
                SourceArg::Gan => Source::Gan,
            };
            let generator = match generator {
                GeneratorArg::None => Generator::None,
                GeneratorArg::Progan => Generator::Progan,
                GeneratorArg::Stylegan => Generator::Stylegan,
            };
            let rec = extract_face(cfg, input, face_id.as_deref(), source, generator, out)?;
            println!(
                "{}: left ({:.1}, {:.1}, r {:.1}), right ({:.1}, {:.1}, r {:.1})",
                rec.face_id,
                rec.left_circle.cx,
                rec.left_circle.cy,
                rec.left_circle.r,
                rec.right_circle.cx,
                rec.right_circle.cy,
                rec.right_circle.r
            );
        }
        Command::Reconstruct { input, .. } => {
            let rec = reconstruct_file(cfg, input, out)?;
            println!(
                "occlusion {:.4}, reconstructed {}, converged {}",
                rec.occlusion_fraction, rec.reconstructed, !rec.nonconverged
            );
        }
        Command::Build { input, .. } => {
            let outcome = build_dataset(cfg, input.as_deref(), out)?;
            let s = &outcome.manifest.stats;
            println!(
                "{} entries from {} faces ({} extraction failures, {} too occluded, {} crops reconstructed)",
                outcome.manifest.entries.len(),
                s.attempted,
                s.extraction_failed,
                s.too_occluded,
                s.reconstructed_crops
            );
        }
        Command::Train { dataset } => {
            let rec = train_model(cfg, dataset, out, deterministic)?;
            println!(
                "trained on {} pairs: loss {:.4}, accuracy {:.4}, threshold {:.4}",
                rec.train_pairs, rec.loss, rec.accuracy, rec.threshold
            );
        }
        Command::Evaluate {
            dataset,
            checkpoint,
        } => {
            let (_, table) = evaluate_model(cfg, dataset, checkpoint, out, deterministic)?;
            print!("{table}");
        }
        Command::Report { inputs } => print!("{}", report_files(inputs, out)?),
        Command::ToyDemo => print!("{}", toy_demo(cfg, out, deterministic)?.table),
    }
    Ok(())
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    arguments: Vec<String>,
    config: Option<&'a PipelineConfig>,
    seed: Option<u64>,
    deterministic: bool,
    workers: usize,
    version: &'static str,
    started_unix: f64,
    wall_clock_secs: f64,
    exit_code: i32,
    error: Option<String>,
    /// Set when the run failed after writing some outputs.
    partial: bool,
    artifacts: Vec<String>,
}

fn list_artifacts(out: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(out)
        .map(|it| {
            it.filter_map(Result::ok)
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n != RUN_METADATA_FILE)
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64());
    let out = &cli.common.out;
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return 2;
    }

    let config = resolve_config(&cli);
    let result = match &config {
        Ok(cfg) => dispatch(&cli, cfg),
        Err(_) => Ok(()),
    };
    let error = match (&config, &result) {
        (Err(e), _) | (Ok(_), Err(e)) => Some((e.exit_code(), e.to_string())),
        _ => None,
    };
    let exit_code = error.as_ref().map_or(0, |(code, _)| *code);
    if let Some((_, msg)) = &error {
        eprintln!("error: {msg}");
    }
    let artifacts = list_artifacts(out);
    let meta = RunMetadata {
        command: cli.command.name(),
        arguments: args.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        config: config.as_ref().ok(),
        seed: config.as_ref().ok().map(|c| c.seed),
        deterministic: cli.common.deterministic,
        workers: 1,
        version: env!("CARGO_PKG_VERSION"),
        started_unix,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        exit_code,
        error: error.map(|(_, msg)| msg),
        partial: exit_code != 0 && !artifacts.is_empty(),
        artifacts,
    };
    let path = out.join(RUN_METADATA_FILE);
    match serde_json::to_string_pretty(&meta) {
        Ok(text) => {
            if let Err(e) = fs::write(&path, text + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
        }
        Err(e) => eprintln!("error: run metadata: {e}"),
    }
    exit_code
}
