use rustfft::num_complex::Complex;
use rustfft::FftPlannerScalar;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{FeatureError, FeatureExtractor, FeatureVector};
use crate::data::Image;

/// Block-statistics + radial-spectrum descriptor.
///
/// Layout of the output vector (`m = 2 * g^2 * C + bins`):
/// per-block per-channel means, per-block per-channel standard deviations,
/// then radially binned spectrum magnitudes of the channel-mean image.
/// Blocks are row-major, channels inner. Each section is mapped by a fixed
/// affine calibration so that extraction never depends on the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuiltinConfig {
    pub block_grid: usize,
    pub spectral_bins: usize,
    pub channels: usize,
    /// Block means are mapped to `(mean - mean_offset) * mean_scale`.
    pub mean_offset: f64,
    pub mean_scale: f64,
    pub std_scale: f64,
    /// Bin magnitudes are normalized by the pixel count, then multiplied by this.
    pub spectral_scale: f64,
}

impl Default for BuiltinConfig {
    fn default() -> Self {
        Self {
            block_grid: 4,
            spectral_bins: 8,
            channels: 1,
            mean_offset: 0.5,
            mean_scale: 2.0,
            std_scale: 4.0,
            spectral_scale: 20.0,
        }
    }
}

impl BuiltinConfig {
    pub fn dim(&self) -> usize {
        2 * self.block_grid * self.block_grid * self.channels + self.spectral_bins
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinDescriptor {
    config: BuiltinConfig,
    id: String,
}

impl BuiltinDescriptor {
    pub fn new(config: BuiltinConfig) -> Result<Self, FeatureError> {
        if config.block_grid == 0 {
            return Err(FeatureError::Config("block grid must be >= 1".into()));
        }
        if config.channels != 1 && config.channels != 3 {
            return Err(FeatureError::Config(format!(
                "unsupported channel count {}",
                config.channels
            )));
        }
        let calibration = [
            config.mean_offset,
            config.mean_scale,
            config.std_scale,
            config.spectral_scale,
        ];
        if calibration.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::Config("non-finite calibration constant".into()));
        }
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&config).expect("config serializes"));
        let digest = hex::encode(hasher.finalize());
        let id = format!(
            "builtin-g{}-s{}-c{}-{}",
            config.block_grid,
            config.spectral_bins,
            config.channels,
            &digest[..8]
        );
        Ok(Self { config, id })
    }

    pub fn config(&self) -> &BuiltinConfig {
        &self.config
    }

    /// Uncalibrated sections `(means, stddevs, spectrum)`.
    pub fn raw_sections(&self, image: &Image) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), FeatureError> {
        let c = image.channels();
        if c != self.config.channels {
            return Err(FeatureError::ChannelMismatch {
                expected: self.config.channels,
                found: c,
            });
        }
        let g = self.config.block_grid;
        let height = image.height().div_ceil(g) * g;
        let width = image.width().div_ceil(g) * g;
        let (bh, bw) = (height / g, width / g);
        let n = (bh * bw) as f64;
        let mut means = vec![0.0; g * g * c];
        let mut stds = vec![0.0; g * g * c];
        for by in 0..g {
            for bx in 0..g {
                for ch in 0..c {
                    // offsets from the block's first pixel keep flat blocks exactly flat
                    let at = |y: usize, x: usize| image.get(reflect(y, image.height()), reflect(x, image.width()), ch);
                    let origin = at(by * bh, bx * bw);
                    let mut sum = 0.0;
                    for y in by * bh..(by + 1) * bh {
                        for x in bx * bw..(bx + 1) * bw {
                            sum += at(y, x) - origin;
                        }
                    }
                    let shift = sum / n;
                    let mut sq = 0.0;
                    for y in by * bh..(by + 1) * bh {
                        for x in bx * bw..(bx + 1) * bw {
                            let d = at(y, x) - origin - shift;
                            sq += d * d;
                        }
                    }
                    let slot = (by * g + bx) * c + ch;
                    means[slot] = origin + shift;
                    stds[slot] = (sq / n).sqrt();
                }
            }
        }
        Ok((means, stds, radial_spectrum(image, self.config.spectral_bins)))
    }
}

impl FeatureExtractor for BuiltinDescriptor {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.config.dim()
    }

    fn extract(&self, image: &Image) -> Result<FeatureVector, FeatureError> {
        let (means, stds, spectrum) = self.raw_sections(image)?;
        let cfg = &self.config;
        let values = means
            .iter()
            .map(|m| (m - cfg.mean_offset) * cfg.mean_scale)
            .chain(stds.iter().map(|s| s * cfg.std_scale))
            .chain(spectrum.iter().map(|e| e * cfg.spectral_scale))
            .collect();
        FeatureVector::new(values, self.id.clone())
    }
}

/// Mirror index `i` into `0..n` without repeating the edge sample.
fn reflect(i: usize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let i = i % period;
    if i < n {
        i
    } else {
        period - i
    }
}

/// Mean DFT magnitude per radial frequency band, normalized by the pixel
/// count. The DC term is excluded so intensity offsets never reach this section.
fn radial_spectrum(image: &Image, bins: usize) -> Vec<f64> {
    if bins == 0 {
        return Vec::new();
    }
    let (w, h, c) = image.shape();
    let mut buf: Vec<Complex<f64>> = (0..h * w)
        .map(|i| {
            let s: f64 = (0..c).map(|ch| image.pixels()[i * c + ch]).sum();
            Complex::new(s / c as f64, 0.0)
        })
        .collect();
    // scalar planner: identical results regardless of the host's SIMD support
    let mut planner = FftPlannerScalar::new();
    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
    let freq = |k: usize, n: usize| {
        let k = k as f64;
        let n = n as f64;
        if k < n / 2.0 {
            k / n
        } else {
            k / n - 1.0
        }
    };
    let r_max = 0.5f64.sqrt();
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for y in 0..h {
        for x in 0..w {
            if x == 0 && y == 0 {
                continue;
            }
            let r = freq(x, w).hypot(freq(y, h));
            let b = ((r / r_max * bins as f64) as usize).min(bins - 1);
            sums[b] += buf[y * w + x].norm();
            counts[b] += 1;
        }
    }
    let pixels = (w * h) as f64;
    sums.iter()
        .zip(&counts)
        .map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 / pixels })
        .collect()
}
