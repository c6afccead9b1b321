//! Domain value types shared across stages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::ImageBuffer;

/// Default side length of an iris crop.
pub const DEFAULT_CROP_SIZE: usize = 128;

#[derive(Debug, Error, PartialEq)]
pub enum TypeError {
    #[error("circle radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("crop must be square with side {expected}, got {width}x{height}")]
    CropShape {
        expected: usize,
        width: usize,
        height: usize,
    },
    #[error("occlusion fraction {0} outside [0, 1]")]
    OcclusionRange(f64),
    #[error("source {0:?} is inconsistent with generator {1:?}")]
    SourceGenerator(Source, Generator),
    #[error("left crop side {left} differs from right crop side {right}")]
    SideMismatch { left: usize, right: usize },
    #[error("pair label must be 0 or 1, got {0}")]
    BadLabel(u8),
}

/// Iris boundary hypothesis in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl CircleParams {
    pub fn new(cx: f64, cy: f64, r: f64) -> Result<Self, TypeError> {
        if !(r > 0.0) {
            return Err(TypeError::NonPositiveRadius(r));
        }
        Ok(Self { cx, cy, r })
    }

    /// True when the circle grown by `margin` lies inside `[0, w-1] x [0, h-1]`.
    pub fn fits_within(&self, width: usize, height: usize, margin: f64) -> bool {
        let reach = self.r + margin;
        self.cx - reach >= 0.0
            && self.cy - reach >= 0.0
            && self.cx + reach <= (width - 1) as f64
            && self.cy + reach <= (height - 1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Real,
    Gan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Generator {
    None,
    Progan,
    Stylegan,
}

impl Source {
    pub fn dir_name(self) -> &'static str {
        match self {
            Source::Real => "real",
            Source::Gan => "gan",
        }
    }

    pub fn is_consistent_with(self, generator: Generator) -> bool {
        match self {
            Source::Real => generator == Generator::None,
            Source::Gan => generator != Generator::None,
        }
    }

    /// Training label implied by the source.
    pub fn label(self) -> PairLabel {
        match self {
            Source::Real => PairLabel::GENUINE,
            Source::Gan => PairLabel::SYNTHETIC,
        }
    }
}

impl Generator {
    pub fn dir_name(self) -> &'static str {
        match self {
            Generator::None => "none",
            Generator::Progan => "progan",
            Generator::Stylegan => "stylegan",
        }
    }
}

/// Which eye of the subject a crop came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn dir_name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.dir_name())
    }
}

/// Fixed-size square iris crop.
#[derive(Clone, Debug, PartialEq)]
pub struct IrisCrop {
    pub image: ImageBuffer,
    /// Circle in crop coordinates.
    pub circle: CircleParams,
    pub occlusion_fraction: f64,
    pub reconstructed: bool,
    /// Crop window extended past the source image and was edge-padded.
    pub padded: bool,
}

impl IrisCrop {
    pub fn size(&self) -> usize {
        self.image.width()
    }

    pub fn validate(&self, crop_size: usize) -> Result<(), TypeError> {
        if self.image.width() != crop_size || self.image.height() != crop_size {
            return Err(TypeError::CropShape {
                expected: crop_size,
                width: self.image.width(),
                height: self.image.height(),
            });
        }
        if !(0.0..=1.0).contains(&self.occlusion_fraction) {
            return Err(TypeError::OcclusionRange(self.occlusion_fraction));
        }
        if self.circle.r <= 0.0 {
            return Err(TypeError::NonPositiveRadius(self.circle.r));
        }
        Ok(())
    }
}

/// Left/right iris crops from one face.
#[derive(Clone, Debug, PartialEq)]
pub struct IrisPair {
    pub face_id: String,
    pub left: IrisCrop,
    pub right: IrisCrop,
    pub source: Source,
    pub generator: Generator,
    pub provenance_path: String,
}

impl IrisPair {
    pub fn new(
        face_id: impl Into<String>,
        left: IrisCrop,
        right: IrisCrop,
        source: Source,
        generator: Generator,
        provenance_path: impl Into<String>,
    ) -> Result<Self, TypeError> {
        if !source.is_consistent_with(generator) {
            return Err(TypeError::SourceGenerator(source, generator));
        }
        if left.size() != right.size() {
            return Err(TypeError::SideMismatch {
                left: left.size(),
                right: right.size(),
            });
        }
        left.validate(left.size())?;
        right.validate(right.size())?;
        Ok(Self {
            face_id: face_id.into(),
            left,
            right,
            source,
            generator,
            provenance_path: provenance_path.into(),
        })
    }

    pub fn crop(&self, side: Side) -> &IrisCrop {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// The same pair with left and right exchanged.
    pub fn swapped(&self) -> IrisPair {
        IrisPair {
            left: self.right.clone(),
            right: self.left.clone(),
            ..self.clone()
        }
    }
}

/// 1 for a genuine-source pair, 0 for a synthetic-source pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairLabel(u8);

impl PairLabel {
    pub const GENUINE: PairLabel = PairLabel(1);
    pub const SYNTHETIC: PairLabel = PairLabel(0);

    pub fn new(y: u8) -> Result<Self, TypeError> {
        match y {
            0 | 1 => Ok(PairLabel(y)),
            other => Err(TypeError::BadLabel(other)),
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_genuine(self) -> bool {
        self.0 == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crop(size: usize) -> IrisCrop {
        IrisCrop {
            image: ImageBuffer::filled(size, size, 1, 0.5),
            circle: CircleParams::new(size as f64 / 2.0, size as f64 / 2.0, 10.0).unwrap(),
            occlusion_fraction: 0.0,
            reconstructed: false,
            padded: false,
        }
    }

    #[test]
    fn circle_requires_positive_radius() {
        assert!(CircleParams::new(0.0, 0.0, 0.0).is_err());
        assert!(CircleParams::new(0.0, 0.0, -1.0).is_err());
        assert!(CircleParams::new(0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn pair_enforces_source_generator_rule() {
        let err = IrisPair::new("a", crop(8), crop(8), Source::Real, Generator::Progan, "");
        assert!(matches!(err, Err(TypeError::SourceGenerator(..))));
        let err = IrisPair::new("a", crop(8), crop(8), Source::Gan, Generator::None, "");
        assert!(matches!(err, Err(TypeError::SourceGenerator(..))));
        assert!(IrisPair::new("a", crop(8), crop(8), Source::Gan, Generator::Stylegan, "").is_ok());
    }

    #[test]
    fn pair_requires_equal_crop_sizes() {
        let err = IrisPair::new("a", crop(8), crop(16), Source::Real, Generator::None, "");
        assert_eq!(err.unwrap_err(), TypeError::SideMismatch { left: 8, right: 16 });
    }

    #[test]
    fn labels() {
        assert!(PairLabel::new(2).is_err());
        assert_eq!(Source::Real.label(), PairLabel::GENUINE);
        assert_eq!(Source::Gan.label().value(), 0);
    }
}
