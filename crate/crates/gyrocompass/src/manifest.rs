//! Dataset manifest (JSON) and sample files (one JSON object per line).

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use gyrocompass_core::dataset::{AugmentConfig, Sample, SplitRatios};
use gyrocompass_core::frames::RAD_S_TO_DEG_HR;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const FORMAT: &str = "gyrocompass-dataset";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub sequence_units: String,
    /// Factor applied to raw rad/s gyro means.
    pub rad_s_to_deg_hr: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self { sequence_units: "deg/hr".into(), rad_s_to_deg_hr: RAD_S_TO_DEG_HR }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    /// Directory holding the recording files, as given on the command line.
    pub recordings_dir: String,
    /// Recording stems in index order; split lists refer to these.
    pub recordings: Vec<String>,
    pub split_seed: u64,
    pub augment_seed: u64,
    pub ratios: SplitRatios,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub model_rate: f64,
    pub windows: Vec<f64>,
    pub augment: AugmentConfig,
    pub normalization: Normalization,
    /// Sample file names relative to the manifest.
    pub train_samples: String,
    pub validation_samples: String,
    pub train_sample_count: usize,
    pub validation_sample_count: usize,
}

impl DatasetManifest {
    pub fn recording_path(&self, name: &str) -> PathBuf {
        Path::new(&self.recordings_dir).join(format!("{name}.csv"))
    }

    pub fn validate(&self, path: &Path) -> Result<()> {
        if self.format != FORMAT {
            return Err(AppError::schema(path, format!("not a dataset manifest (format {:?})", self.format)));
        }
        if self.version != VERSION {
            return Err(AppError::schema(path, format!("unsupported manifest version {}", self.version)));
        }
        for name in self.train.iter().chain(&self.validation).chain(&self.test) {
            if !self.recordings.contains(name) {
                return Err(AppError::schema(path, format!("split lists unknown recording {name}")));
            }
        }
        Ok(())
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::parse(path, e.line(), e.to_string()))
}

pub fn save_manifest(m: &DatasetManifest, path: &Path) -> Result<()> {
    write_json(m, path)
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let m: DatasetManifest = read_json(path)?;
    m.validate(path)?;
    Ok(m)
}

pub fn save_samples(samples: &[Sample], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        serde_json::to_writer(&mut w, s).expect("plain data serializes");
        w.write_all(b"\n").map_err(|e| AppError::io(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn load_samples(path: &Path) -> Result<Vec<Sample>> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line).map_err(|e| AppError::parse(path, i + 1, e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}
