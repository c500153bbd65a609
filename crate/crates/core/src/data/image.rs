use serde::{Deserialize, Serialize};

use super::DataError;

/// A `height x width x channels` image with intensities in `[0, 1]`.
///
/// Pixels are stored row-major with interleaved channels, so the value of
/// channel `c` at row `y`, column `x` lives at `(y * width + x) * channels + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        pixels: Vec<f64>,
    ) -> Result<Self, DataError> {
        if width == 0 || height == 0 {
            return Err(DataError::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(DataError::InvalidImage(format!(
                "unsupported channel count {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(DataError::InvalidImage(format!(
                "pixel buffer has {} values, expected {}",
                pixels.len(),
                width * height * channels
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite()) {
            return Err(DataError::NonFinite(format!("image pixel ({bad})")));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DataError::InvalidImage(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self, DataError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a single-channel image from `f(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, DataError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(y, x));
            }
        }
        Self::new(width, height, 1, pixels)
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

    /// `(width, height, channels)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    /// Rounds every intensity to the nearest multiple of 1/255, i.e. the value
    /// the image takes after an 8-bit save/load cycle.
    pub fn quantized(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            pixels: self
                .pixels
                .iter()
                .map(|&v| f64::from(to_byte(v)) / 255.0)
                .collect(),
        }
    }

    pub(crate) fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| to_byte(v)).collect()
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// One system execution: frames at discrete times `0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StTrajectory {
    frames: Vec<Image>,
}

impl StTrajectory {
    pub fn new(frames: Vec<Image>) -> Result<Self, DataError> {
        let first = frames.first().ok_or(DataError::EmptyTrajectory)?.shape();
        for (k, frame) in frames.iter().enumerate() {
            if frame.shape() != first {
                return Err(DataError::ShapeMismatch {
                    frame: k,
                    expected: first,
                    found: frame.shape(),
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    /// Index `T` of the last frame.
    pub fn horizon(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_shape(&self) -> (usize, usize, usize) {
        self.frames[0].shape()
    }

    /// The trajectory restricted to times `0..=last`.
    pub fn prefix(&self, last: usize) -> StTrajectory {
        StTrajectory {
            frames: self.frames[..=last.min(self.horizon())].to_vec(),
        }
    }
}
