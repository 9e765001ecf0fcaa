//! Model-ready samples: windowing, block-mean downsampling, rotation
//! augmentation and recording-level splits.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::align::{heading_simplified, window_len};
use crate::error::{invalid, Error, Result};
use crate::frames::{mean, wrap_deg, Vec3, RAD_S_TO_DEG_HR};
use crate::sensor::{ImuRecording, SensorSpec};

/// Windows reported in the comparison tables, s.
pub const REPORT_WINDOWS: [f64; 5] = [10.0, 20.0, 30.0, 60.0, 240.0];

/// Fewest recordings [`split_indices`] accepts.
pub const MIN_RECORDINGS: usize = 10;

/// One gyro sequence in deg/hr with its heading label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sequence: Vec<Vec3>,
    /// deg in [0, 360)
    pub label: f64,
    pub source_id: String,
    pub window_s: f64,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// Block-mean downsample the first `window_s` seconds of gyro data to
/// `model_rate` and convert to deg/hr.
pub fn make_sample(
    rec: &ImuRecording,
    source_id: &str,
    window_s: f64,
    model_rate: f64,
) -> Result<Sample> {
    rec.validate()?;
    if !(model_rate.is_finite() && model_rate > 0.0) || model_rate > rec.sample_rate {
        return Err(invalid("model rate must be positive and at most the sample rate"));
    }
    let ratio = rec.sample_rate / model_rate;
    let block = ratio.round();
    if (ratio - block).abs() > 1e-9 * ratio {
        return Err(Error::IndivisibleRate { sample_rate: rec.sample_rate, model_rate });
    }
    let block = block as usize;
    let m = window_len(window_s, rec.sample_rate, rec.len())?;
    let steps = m / block;
    if steps == 0 || steps * block != m {
        return Err(invalid("window must cover a whole number of model steps"));
    }
    let sequence = rec.gyro[..m]
        .chunks_exact(block)
        .map(|c| {
            let w = mean(c).expect("non-empty block");
            [w[0] * RAD_S_TO_DEG_HR, w[1] * RAD_S_TO_DEG_HR, w[2] * RAD_S_TO_DEG_HR]
        })
        .collect();
    Ok(Sample {
        sequence,
        label: rec.truth_yaw_deg(),
        source_id: source_id.into(),
        window_s,
    })
}

/// Level-platform gyrocompass heading of a sample (deg).
pub fn sample_heading(sample: &Sample) -> Result<f64> {
    let w = mean(&sample.sequence).ok_or(Error::Empty("sample has no steps"))?;
    heading_simplified(w)
}

/// Rotation grid, AWGN and random bias for training-set augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// deg
    pub psi_min: f64,
    /// deg, inclusive
    pub psi_max: f64,
    /// deg
    pub delta_psi: f64,
    /// Per-step white noise std, deg/hr.
    pub awgn_std: f64,
    /// Half-width of the uniform per-axis bias, deg/hr.
    pub bias_range: f64,
}

impl AugmentConfig {
    /// Full-circle grid in 5 deg steps. Noise matches the sensor's white
    /// noise at `model_rate`; the bias half-width is 1 deg/hr.
    pub fn for_sensor(spec: &SensorSpec, model_rate: f64) -> Self {
        Self {
            psi_min: 0.0,
            psi_max: 355.0,
            delta_psi: 5.0,
            awgn_std: spec.arw * 60.0 * model_rate.sqrt(),
            bias_range: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.psi_min, self.psi_max, self.delta_psi, self.awgn_std, self.bias_range];
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("augmentation values must be finite"));
        }
        if self.delta_psi <= 0.0 || self.psi_max < self.psi_min {
            return Err(invalid("augmentation grid needs delta_psi > 0 and psi_max >= psi_min"));
        }
        if self.awgn_std < 0.0 || self.bias_range < 0.0 {
            return Err(invalid("augmentation noise magnitudes must be non-negative"));
        }
        if self.grid().len() > 100_000 {
            return Err(invalid("augmentation grid is too dense"));
        }
        Ok(())
    }

    /// Angles `psi_min, psi_min + delta, ...` up to `psi_max` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.psi_max - self.psi_min) / self.delta_psi + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.psi_min + k as f64 * self.delta_psi).collect()
    }
}

/// Rotate planar gyro components so the level-platform heading grows by `psi_deg`.
pub fn rotate_heading(w: Vec3, psi_deg: f64) -> Vec3 {
    let (s, c) = psi_deg.to_radians().sin_cos();
    [w[0] * c + w[1] * s, -w[0] * s + w[1] * c, w[2]]
}

/// Expand every sample over the rotation grid. Output order is sample-major.
pub fn augment(samples: &[Sample], cfg: &AugmentConfig, seed: u64) -> Result<Vec<Sample>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Empty("no samples to augment"));
    }
    let grid = cfg.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples.len() * grid.len());
    for s in samples {
        for &psi in &grid {
            let mut bias = [0.0; 3];
            for b in bias.iter_mut() {
                let u: f64 = rng.random();
                *b = (2.0 * u - 1.0) * cfg.bias_range;
            }
            let sequence = s
                .sequence
                .iter()
                .map(|&w| {
                    let r = rotate_heading(w, psi);
                    let mut o = [0.0; 3];
                    for j in 0..3 {
                        let n: f64 = if cfg.awgn_std > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                        o[j] = r[j] + cfg.awgn_std * n + bias[j];
                    }
                    o
                })
                .collect();
            out.push(Sample {
                sequence,
                label: wrap_deg(s.label + psi),
                source_id: s.source_id.clone(),
                window_s: s.window_s,
            });
        }
    }
    Ok(out)
}

/// Fractions of recordings assigned to train and validation; test gets the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.7, validation: 0.1 }
    }
}

/// Recording indices per partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffle `n` recordings and cut them `round(r_train n) / round(r_val n) / rest`.
pub fn split_indices(n: usize, ratios: SplitRatios, seed: u64) -> Result<SplitIndices> {
    if n < MIN_RECORDINGS {
        return Err(Error::TooFewRecordings { available: n, required: MIN_RECORDINGS });
    }
    let SplitRatios { train, validation } = ratios;
    if !(train > 0.0 && validation > 0.0 && train + validation < 1.0) {
        return Err(invalid("split ratios must be positive and leave room for a test set"));
    }
    let n_train = (train * n as f64).round() as usize;
    let n_val = (validation * n as f64).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(Error::TooFewRecordings { available: n, required: MIN_RECORDINGS });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let part = |range: core::ops::Range<usize>| {
        let mut v = idx[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(SplitIndices {
        train: part(0..n_train),
        validation: part(n_train..n_train + n_val),
        test: part(n_train + n_val..n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
    pub split_seed: u64,
}

/// Split per-recording sample groups at recording granularity.
pub fn split_dataset(
    samples_by_recording: Vec<Vec<Sample>>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit> {
    let idx = split_indices(samples_by_recording.len(), ratios, seed)?;
    let mut groups: Vec<Option<Vec<Sample>>> = samples_by_recording.into_iter().map(Some).collect();
    let mut take = |ids: &[usize]| -> Vec<Sample> {
        ids.iter().flat_map(|&i| groups[i].take().unwrap_or_default()).collect()
    };
    let split = DatasetSplit {
        train: take(&idx.train),
        validation: take(&idx.validation),
        test: take(&idx.test),
        split_seed: seed,
    };
    check_no_leakage(&split)?;
    Ok(split)
}

/// Fails if any source id appears in more than one partition.
pub fn check_no_leakage(split: &DatasetSplit) -> Result<()> {
    fn ids(v: &[Sample]) -> BTreeSet<&str> {
        v.iter().map(|s| s.source_id.as_str()).collect()
    }
    let (tr, va, te) = (ids(&split.train), ids(&split.validation), ids(&split.test));
    let shared = tr.intersection(&va).chain(tr.intersection(&te)).chain(va.intersection(&te)).next();
    match shared {
        Some(id) => Err(invalid(alloc::format!("recording {id} appears in two partitions"))),
        None => Ok(()),
    }
}

/// Union of a log-spaced grid over `[lo, hi]` with the report windows inside
/// that range, rounded to whole seconds, ascending.
pub fn training_windows(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo >= 1.0 && hi > lo && points >= 2) {
        return Err(invalid("window grid needs 1 <= lo < hi and at least two points"));
    }
    let mut w: Vec<f64> = (0..points)
        .map(|k| {
            let t = k as f64 / (points - 1) as f64;
            (lo.ln() + t * (hi.ln() - lo.ln())).exp().round()
        })
        .chain(REPORT_WINDOWS.iter().copied().filter(|&r| r >= lo && r <= hi))
        .collect();
    w.sort_by(f64::total_cmp);
    w.dedup();
    Ok(w)
}
