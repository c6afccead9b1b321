//! Writes a small face corpus to a temporary directory and ingests it.

use std::fs;

use iris_forensics::dataset::{render_synthetic_face, FaceFixture};
use iris_forensics::image::ImageBuffer;
use iris_forensics::pipeline::{build_dataset, PipelineConfig};

fn main() {
    let root = std::env::temp_dir().join(format!("iris-forensics-build-{}", std::process::id()));
    let corpus = root.join("corpus");
    for (dir, n) in [("real", 4), ("progan", 2), ("stylegan", 2)] {
        fs::create_dir_all(corpus.join(dir)).unwrap();
        for i in 0..n {
            let face = if dir == "real" && i == 3 {
                ImageBuffer::filled(512, 512, 3, 0.7)
            } else {
                render_synthetic_face(&FaceFixture::aligned(512, 18.0 + i as f64))
            };
            face.save_png(&corpus.join(dir).join(format!("{dir}{i}.png"))).unwrap();
        }
    }
    let cfg = PipelineConfig::default()
        .with_overrides(&["extraction.r_min=10", "extraction.r_max=30", "extraction.crop_size=32"])
        .unwrap();
    let out = build_dataset(&cfg, Some(&corpus), &root.join("dataset")).expect("ingest");
    let m = &out.manifest;
    println!(
        "{} of {} faces kept, {} crops inpainted",
        m.entries.len(),
        m.stats.attempted,
        m.stats.reconstructed_crops
    );
    for e in &m.entries {
        println!("  {:<10} {:?}/{:?} {:?}  {}", e.face_id, e.source, e.generator, e.split, e.left_path);
    }
    for f in &out.failures {
        println!("  skipped {}: {}", f.face_id, f.reason);
    }
    fs::remove_dir_all(&root).ok();
}
