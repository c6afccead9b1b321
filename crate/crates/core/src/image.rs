//! Floating-point raster used by every pipeline stage.
//!
//! Intensities are normalized to `[0, 1]` at ingestion. Pixel `(x, y)` sits at
//! the continuous coordinate `(x, y)`, so an image of width `w` spans `[0, w - 1]`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("channels must be 1 or 3, got {0}")]
    BadChannels(usize),
    #[error("data length {got} does not match {width}x{height}x{channels}")]
    BadLength {
        got: usize,
        width: usize,
        height: usize,
        channels: usize,
    },
    #[error("intensity {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("image I/O: {0}")]
    Io(#[from] ::image::ImageError),
}

/// Row-major, channel-interleaved raster with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadChannels(channels));
        }
        if data.len() != width * height * channels {
            return Err(ImageError::BadLength {
                got: data.len(),
                width,
                height,
                channels,
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImageError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image from unchecked values, clamping each into `[0, 1]`.
    pub fn from_clamped(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert!(channels == 1 || channels == 3);
        assert_eq!(data.len(), width * height * channels);
        let data = data
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self::from_clamped(width, height, channels, vec![value; width * height * channels])
    }

    /// Single-channel image from a function of pixel coordinates.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_clamped(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access for in-place fills; callers keep values inside `[0, 1]`.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Writes a value, clamped into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let idx = (y * self.width + x) * self.channels + c;
        self.data[idx] = v.clamp(0.0, 1.0);
    }

    /// Luminance as the mean of the color planes.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px.iter().sum::<f64>() / self.channels as f64)
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Bilinear sample with edge replication outside the raster.
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0, c) * (1.0 - fx) + self.get(x1, y0, c) * fx;
        let bottom = self.get(x0, y1, c) * (1.0 - fx) + self.get(x1, y1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Horizontal mirror.
    pub fn flip_horizontal(&self) -> ImageBuffer {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                let base = (y * self.width + x) * self.channels;
                data.extend_from_slice(&self.data[base..base + self.channels]);
            }
        }
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }

    /// Copies the rectangle `[x, x + w) x [y, y + h)`, which must lie inside the image.
    pub fn sub_image(&self, x: usize, y: usize, w: usize, h: usize) -> ImageBuffer {
        assert!(x + w <= self.width && y + h <= self.height);
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        ImageBuffer {
            width: w,
            height: h,
            channels: self.channels,
            data,
        }
    }

    /// Copies one channel out as a single-plane image.
    pub fn channel(&self, c: usize) -> ImageBuffer {
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Loads any supported lossless image, normalizing to `[0, 1]`.
    pub fn load(path: &Path) -> Result<Self, ImageError> {
        let img = ::image::open(path)?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        let has_color = img.color().has_color();
        if has_color {
            let rgb = img.into_rgb16();
            let data = rgb.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect();
            Ok(Self::from_clamped(width, height, 3, data))
        } else {
            let gray = img.into_luma16();
            let data = gray.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect();
            Ok(Self::from_clamped(width, height, 1, data))
        }
    }

    /// Writes a 16-bit PNG.
    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let raw: Vec<u16> = self
            .data
            .iter()
            .map(|v| (v * 65535.0).round() as u16)
            .collect();
        let (w, h) = (self.width as u32, self.height as u32);
        if self.channels == 1 {
            let buf = ::image::ImageBuffer::<::image::Luma<u16>, _>::from_raw(w, h, raw)
                .expect("length checked at construction");
            buf.save_with_format(path, ::image::ImageFormat::Png)?;
        } else {
            let buf = ::image::ImageBuffer::<::image::Rgb<u16>, _>::from_raw(w, h, raw)
                .expect("length checked at construction");
            buf.save_with_format(path, ::image::ImageFormat::Png)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(
            ImageBuffer::new(2, 2, 2, vec![0.0; 8]),
            Err(ImageError::BadChannels(2))
        ));
        assert!(matches!(
            ImageBuffer::new(2, 2, 1, vec![0.0; 3]),
            Err(ImageError::BadLength { .. })
        ));
        assert!(matches!(
            ImageBuffer::new(1, 1, 1, vec![1.5]),
            Err(ImageError::OutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn bilinear_interpolates_and_replicates_edges() {
        let img = ImageBuffer::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        assert!((img.sample_bilinear(0.25, 0.0, 0) - 0.25).abs() < 1e-12);
        assert_eq!(img.sample_bilinear(-3.0, 0.0, 0), 0.0);
        assert_eq!(img.sample_bilinear(7.0, 2.0, 0), 1.0);
    }

    #[test]
    fn gray_is_channel_mean() {
        let img = ImageBuffer::new(1, 1, 3, vec![0.3, 0.6, 0.9]).unwrap();
        assert!((img.to_gray().get(0, 0, 0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn png_round_trip_is_close() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = ImageBuffer::from_fn(5, 4, |x, y| (x + y) as f64 / 8.0);
        img.save_png(&path).unwrap();
        let back = ImageBuffer::load(&path).unwrap();
        assert_eq!(back.width(), 5);
        assert_eq!(back.channels(), 1);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1.0 / 65535.0);
        }
    }
}
