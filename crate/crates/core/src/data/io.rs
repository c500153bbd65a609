//! On-disk formats.
//!
//! * Trajectory: a directory of `frame_0000.pgm` .. `frame_NNNN.pgm` (or `.ppm`
//!   / `.png`) plus a `trajectory.txt` manifest of `key=value` lines. The
//!   manifest is written last and marks the directory as complete.
//! * Signal: `# t, h_1, ..., h_n` header followed by comma-separated rows.
//! * Dataset manifest: `path,label` lines, paths relative to the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ExtendedColorType};

use super::{DataError, Image, StSignal, StTrajectory};

pub const TRAJECTORY_MANIFEST: &str = "trajectory.txt";

pub fn load_image(path: &Path) -> Result<Image, DataError> {
    let dynamic = image::open(path).map_err(|e| DataError::Codec {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let gray = !dynamic.color().has_color();
    let pixels: Vec<f64> = match (&dynamic, gray) {
        (DynamicImage::ImageLuma8(buf), _) => buf.as_raw().iter().map(|&b| f64::from(b) / 255.0).collect(),
        (DynamicImage::ImageRgb8(buf), _) => buf.as_raw().iter().map(|&b| f64::from(b) / 255.0).collect(),
        (_, true) => dynamic
            .to_luma16()
            .as_raw()
            .iter()
            .map(|&v| f64::from(v) / 65535.0)
            .collect(),
        (_, false) => dynamic
            .to_rgb16()
            .as_raw()
            .iter()
            .map(|&v| f64::from(v) / 65535.0)
            .collect(),
    };
    Image::new(w, h, if gray { 1 } else { 3 }, pixels)
}

/// Writes an 8-bit image; the format follows the file extension.
pub fn save_image(image: &Image, path: &Path) -> Result<(), DataError> {
    let color = if image.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    image::save_buffer(
        path,
        &image.to_bytes(),
        image.width() as u32,
        image.height() as u32,
        color,
    )
    .map_err(|e| DataError::Codec {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

fn frame_index(name: &str) -> Option<usize> {
    let rest = name.strip_prefix("frame_")?;
    let (digits, ext) = rest.split_once('.')?;
    if !matches!(ext, "pgm" | "ppm" | "png") || digits.is_empty() {
        return None;
    }
    digits.parse().ok()
}

/// Loads a trajectory directory, validating index contiguity and frame shapes.
pub fn load_trajectory(dir: &Path) -> Result<StTrajectory, DataError> {
    let mut frames: BTreeMap<usize, PathBuf> = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| DataError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| DataError::io(dir, e))?;
        let name = entry.file_name();
        if let Some(k) = name.to_str().and_then(frame_index) {
            frames.insert(k, entry.path());
        }
    }
    if frames.is_empty() {
        return Err(DataError::EmptyTrajectory);
    }
    for (expected, &k) in frames.keys().enumerate() {
        if k != expected {
            return Err(DataError::FrameGap {
                dir: dir.to_path_buf(),
                index: expected,
            });
        }
    }
    let manifest = dir.join(TRAJECTORY_MANIFEST);
    if manifest.exists() {
        let meta = read_manifest(&manifest)?;
        if let Some(n) = meta.get("frames") {
            let n: usize = n.parse().map_err(|_| DataError::Parse {
                path: manifest.clone(),
                line: 0,
                msg: format!("bad frame count {n:?}"),
            })?;
            if n > frames.len() {
                return Err(DataError::FrameGap {
                    dir: dir.to_path_buf(),
                    index: frames.len(),
                });
            }
        }
    }
    let images = frames
        .values()
        .map(|p| load_image(p))
        .collect::<Result<Vec<_>, _>>()?;
    StTrajectory::new(images)
}

pub fn save_trajectory(
    trajectory: &StTrajectory,
    dir: &Path,
    meta: &BTreeMap<String, String>,
) -> Result<(), DataError> {
    fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
    let ext = if trajectory.frame_shape().2 == 1 { "pgm" } else { "ppm" };
    for (k, frame) in trajectory.frames().iter().enumerate() {
        save_image(frame, &dir.join(format!("frame_{k:04}.{ext}")))?;
    }
    let (w, h, c) = trajectory.frame_shape();
    let mut text = format!(
        "frames={}\nwidth={w}\nheight={h}\nchannels={c}\n",
        trajectory.len()
    );
    for (k, v) in meta {
        text.push_str(&format!("{k}={v}\n"));
    }
    let path = dir.join(TRAJECTORY_MANIFEST);
    fs::write(&path, text).map_err(|e| DataError::io(path, e))
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| DataError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected key=value".into(),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn signal_to_string(signal: &StSignal) -> String {
    let mut out = String::from("# t");
    for l in signal.labels() {
        out.push_str(", ");
        out.push_str(l);
    }
    out.push('\n');
    for (k, row) in signal.rows().iter().enumerate() {
        out.push_str(&k.to_string());
        for v in row {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_signal(signal: &StSignal, path: &Path) -> Result<(), DataError> {
    fs::write(path, signal_to_string(signal)).map_err(|e| DataError::io(path, e))
}

pub fn parse_signal(text: &str, path: &Path) -> Result<StSignal, DataError> {
    let perr = |line: usize, msg: String| DataError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty signal file".into()))?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| perr(1, "header must start with '#'".into()))?;
    let mut fields = header.split(',').map(str::trim);
    if fields.next() != Some("t") {
        return Err(perr(1, "first header column must be 't'".into()));
    }
    let labels: Vec<String> = fields.map(str::to_string).collect();
    if labels.is_empty() || labels.iter().any(String::is_empty) {
        return Err(perr(1, "header declares no signal dimensions".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != labels.len() + 1 {
            return Err(perr(
                i + 1,
                format!(
                    "row has {} values, header declares {}",
                    cells.len() - 1,
                    labels.len()
                ),
            ));
        }
        let t: usize = cells[0]
            .parse()
            .map_err(|_| perr(i + 1, format!("bad time index {:?}", cells[0])))?;
        if t != rows.len() {
            return Err(perr(i + 1, format!("time index {t}, expected {}", rows.len())));
        }
        let row = cells[1..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| perr(i + 1, format!("bad value {c:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(perr(1, "signal has no rows".into()));
    }
    StSignal::with_labels(rows, labels)
}

pub fn load_signal(path: &Path) -> Result<StSignal, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_signal(&text, path)
}

/// Reads a `path,label` manifest. Relative paths resolve against the manifest's directory.
pub fn load_dataset_manifest(path: &Path) -> Result<Vec<(PathBuf, i32)>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (p, l) = line.rsplit_once(',').ok_or_else(|| DataError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected path,label".into(),
        })?;
        let label: i32 = l.trim().parse().map_err(|_| DataError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("bad label {l:?}"),
        })?;
        out.push((base.join(p.trim()), label));
    }
    Ok(out)
}

pub fn save_dataset_manifest(entries: &[(String, i32)], path: &Path) -> Result<(), DataError> {
    let mut text = String::from("# path,label\n");
    for (p, l) in entries {
        text.push_str(&format!("{p},{l}\n"));
    }
    fs::write(path, text).map_err(|e| DataError::io(path, e))
}
