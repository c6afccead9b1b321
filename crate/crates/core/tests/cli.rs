mod common;

use std::fs;
use std::path::Path;

use common::{small_face_overrides, write_face_corpus, FACE_SIDE};
use iris_forensics::cli::{run, RUN_METADATA_FILE};
use iris_forensics::dataset::{render_synthetic_face, FaceFixture};
use iris_forensics::image::ImageBuffer;
use iris_forensics::manifest::{DatasetManifest, MANIFEST_FILE};
use iris_forensics::verifier::EvalReport;

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn with_sets(mut args: Vec<String>, sets: &[String]) -> Vec<String> {
    for kv in sets {
        args.push("--set".into());
        args.push(kv.clone());
    }
    args
}

fn metadata(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join(RUN_METADATA_FILE)).unwrap()).unwrap()
}

const TINY_MODEL: [&str; 5] = [
    "model.widths=[4, 4]",
    "model.embed_dim=8",
    "loss.epochs=2",
    "loss.batch_size=4",
    "split.train=0.5",
];

#[test]
fn build_train_evaluate_report() {
    let corpus = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    write_face_corpus(corpus.path(), 6, &[]);
    let mut sets = small_face_overrides();
    sets.extend(TINY_MODEL.iter().map(|s| s.to_string()));
    sets.extend(["split.val=0.25".to_string(), "split.test=0.25".to_string()]);
    let data = work.path().join("data");
    let model = work.path().join("model");
    let eval = work.path().join("eval");
    let table = work.path().join("table");

    let build = vec![
        "iris-forensics".to_string(),
        "build".into(),
        "--input".into(),
        s(corpus.path()),
        "--out".into(),
        s(&data),
        "--seed".into(),
        "3".into(),
    ];
    assert_eq!(run(with_sets(build, &sets)), 0);
    let manifest = DatasetManifest::load(&data.join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.entries.len(), 18);
    assert_eq!(metadata(&data)["exit_code"], 0);

    let train = vec![
        "iris-forensics".to_string(),
        "train".into(),
        "--dataset".into(),
        s(&data),
        "--out".into(),
        s(&model),
        "--seed".into(),
        "3".into(),
        "--deterministic".into(),
    ];
    assert_eq!(run(with_sets(train, &sets)), 0);
    assert!(model.join("model.json").is_file());

    let evaluate = vec![
        "iris-forensics".to_string(),
        "evaluate".into(),
        "--dataset".into(),
        s(&data),
        "--checkpoint".into(),
        s(&model.join("model.json")),
        "--out".into(),
        s(&eval),
    ];
    assert_eq!(run(with_sets(evaluate, &sets)), 0);
    let report: EvalReport =
        serde_json::from_str(&fs::read_to_string(eval.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.model_name, "SmallConv");
    assert!((0.0..=1.0).contains(&report.test_accuracy));

    let rows = vec![s(&eval.join("report.json")), s(&eval.join("report.json"))];
    let mut args = vec!["iris-forensics".to_string(), "report".into(), "--out".into(), s(&table)];
    args.extend(rows);
    assert_eq!(run(args), 0);
    let text = fs::read_to_string(table.join("report.txt")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn evaluate_on_empty_manifest_exits_one() {
    let work = tempfile::tempdir().unwrap();
    let data = work.path().join("data");
    fs::create_dir_all(&data).unwrap();
    DatasetManifest::new(32).save(&data.join(MANIFEST_FILE)).unwrap();
    // a valid checkpoint so the failure comes from the data
    let model_dir = work.path().join("m");
    fs::create_dir_all(&model_dir).unwrap();
    let state = iris_forensics::verifier::EncoderState::init(
        iris_forensics::verifier::Architecture::custom("SmallConv", 32, vec![4], 4),
        1,
    )
    .unwrap();
    iris_forensics::verifier::save_checkpoint(&model_dir.join("model.json"), &state, None).unwrap();
    let out = work.path().join("out");
    let code = run([
        "iris-forensics",
        "evaluate",
        "--dataset",
        &s(&data),
        "--checkpoint",
        &s(&model_dir.join("model.json")),
        "--out",
        &s(&out),
    ]);
    assert_eq!(code, 1);
    let meta = metadata(&out);
    assert_eq!(meta["exit_code"], 1);
    assert!(meta["error"].as_str().unwrap().contains("no face"));
}

#[test]
fn usage_errors_exit_two() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run(["iris-forensics", "frobnicate"]), 2);
    assert_eq!(run(["iris-forensics", "train", "--out", &s(out.path())]), 2);
    assert_eq!(
        run(["iris-forensics", "toy-demo", "--out", &s(out.path()), "--set", "loss.margin=3"]),
        2
    );
    assert_eq!(
        run([
            "iris-forensics",
            "toy-demo",
            "--out",
            &s(out.path()),
            "--config",
            &s(&out.path().join("missing.toml"))
        ]),
        2
    );
    assert_eq!(metadata(out.path())["exit_code"], 2);
}

#[test]
fn extract_and_reconstruct_single_files() {
    let work = tempfile::tempdir().unwrap();
    let face = work.path().join("f1.png");
    render_synthetic_face(&FaceFixture::aligned(FACE_SIDE, 20.0))
        .save_png(&face)
        .unwrap();
    let blank = work.path().join("blank.png");
    ImageBuffer::filled(FACE_SIDE, FACE_SIDE, 3, 0.6).save_png(&blank).unwrap();
    let out = work.path().join("out");
    let sets = small_face_overrides();
    let base = |input: &Path| {
        with_sets(
            vec![
                "iris-forensics".to_string(),
                "extract".into(),
                "--input".into(),
                s(input),
                "--out".into(),
                s(&out),
                "--r-max".into(),
                "30".into(),
                "--arc".into(),
                "-40:40".into(),
                "--arc".into(),
                "140:220".into(),
            ],
            &sets,
        )
    };
    assert_eq!(run(base(&face)), 0);
    assert!(out.join("f1_left.png").is_file() && out.join("f1_right.png").is_file());
    let meta = metadata(&out);
    assert_eq!(meta["config"]["extraction"]["contour_arcs"][0][0], -40.0);
    assert_eq!(run(base(&blank)), 1);
    assert_eq!(metadata(&out)["exit_code"], 1);

    let recon = work.path().join("recon");
    let code = run([
        "iris-forensics",
        "reconstruct",
        "--input",
        &s(&out.join("f1_left.png")),
        "--out",
        &s(&recon),
        "--mad-k",
        "2.5",
        "--tol",
        "1e-5",
    ]);
    assert_eq!(code, 0);
    assert!(recon.join("f1_left_reconstructed.png").is_file());
    assert!(recon.join("f1_left_mask.png").is_file());
}

#[test]
fn config_file_and_seed_flag() {
    let work = tempfile::tempdir().unwrap();
    let cfg = work.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 11\n[toy]\nn_real = 10\nn_gan = 10\ncrop_size = 16\n[model]\nwidths = [4, 4]\nembed_dim = 8\n[loss]\nepochs = 1\n",
    )
    .unwrap();
    let out = work.path().join("out");
    let code = run([
        "iris-forensics",
        "toy-demo",
        "--config",
        &s(&cfg),
        "--seed",
        "12",
        "--out",
        &s(&out),
    ]);
    assert_eq!(code, 0);
    let meta = metadata(&out);
    assert_eq!(meta["seed"], 12);
    assert_eq!(meta["config"]["toy"]["n_real"], 10);
    let manifest = DatasetManifest::load(&out.join("dataset").join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.entries.len(), 20);
    assert_eq!(manifest.crop_size, 16);
}
