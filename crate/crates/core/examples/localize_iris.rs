//! Finds both irises on a rendered face and prints the fitted circles.
//!
//! ```text
//! cargo run --release --example localize_iris
//! ```

use iris_forensics::dataset::{render_synthetic_face, FaceFixture};
use iris_forensics::extraction::{daugman_localize, locate_eyes, ExtractionConfig};

fn main() {
    let fixture = FaceFixture::aligned(768, 30.0);
    let face = render_synthetic_face(&fixture).to_gray();
    let cfg = ExtractionConfig::default();
    let (left, right) = locate_eyes(&face, &cfg).expect("eye regions fit the image");
    for (name, roi, planted) in [("left", left, fixture.left_eye), ("right", right, fixture.right_eye)] {
        let region = face.sub_image(roi.x, roi.y, roi.width, roi.height);
        let (c, response) = daugman_localize(&region, &cfg).expect("iris found");
        println!(
            "{name:<5} planted ({:.1}, {:.1}) r={:.1}  found ({:.1}, {:.1}) r={:.1}  response {response:.4}",
            planted.cx,
            planted.cy,
            planted.r,
            c.cx + roi.x as f64,
            c.cy + roi.y as f64,
            c.r
        );
    }
}
