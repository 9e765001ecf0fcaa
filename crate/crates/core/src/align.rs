//! Classical coarse alignment: leveling from accelerometers, gyrocompassing
//! from the Earth-rate projection, the averaging baseline, first-order error
//! propagation and the CRLB of the sample mean.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frames::{
    earth_rate_ned, norm, wrap_deg, wrap_signed_deg, EarthConstants, Vec3, RAD_S_TO_DEG_HR,
};
use crate::sensor::ImuRecording;

/// Alignment refuses latitudes beyond this (deg); the heading error grows as sec(lat).
pub const MAX_LATITUDE_DEG: f64 = 89.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Learned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelingEstimate {
    pub roll: f64,
    pub pitch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadingEstimate {
    /// Degrees in [0, 360).
    pub yaw: f64,
    pub window_s: f64,
    pub n_samples: usize,
    pub method: Method,
    /// Cyclic estimate-minus-truth difference in [-180, 180), when truth is known.
    pub error_deg: Option<f64>,
}

/// Cyclic difference `estimate - truth` in degrees, wrapped to [-180, 180).
pub fn cyclic_error_deg(truth_deg: f64, estimate_deg: f64) -> f64 {
    wrap_signed_deg(estimate_deg - truth_deg)
}

/// Roll and pitch from a mean specific-force vector.
pub fn level_from_accel(mean_f: Vec3) -> Result<LevelingEstimate> {
    if mean_f.iter().any(|v| !v.is_finite()) {
        return Err(invalid("specific force must be finite"));
    }
    if norm(mean_f) == 0.0 {
        return Err(Error::DegenerateInput("zero specific force".into()));
    }
    let [fx, fy, fz] = mean_f;
    // nose straight up or down: roll is undefined, report zero
    let roll = if fy == 0.0 && fz == 0.0 { 0.0 } else { (-fy).atan2(-fz) };
    let roll = if roll >= PI { roll - 2.0 * PI } else { roll };
    let pitch = (fx / fy.hypot(fz)).atan();
    Ok(LevelingEstimate { roll, pitch })
}

/// Gyrocompass heading (deg in [0, 360)) from a mean rate and a leveling solution.
pub fn heading_from_gyro(mean_w: Vec3, lv: LevelingEstimate) -> Result<f64> {
    if mean_w.iter().any(|v| !v.is_finite()) || !lv.roll.is_finite() || !lv.pitch.is_finite() {
        return Err(invalid("gyro mean and attitude must be finite"));
    }
    let [wx, wy, wz] = mean_w;
    let (sr, cr) = lv.roll.sin_cos();
    let (sp, cp) = lv.pitch.sin_cos();
    let s = -wy * cr + wz * sr;
    let c = wx * cp + wy * sr * sp + wz * cr * sp;
    if s == 0.0 && c == 0.0 {
        return Err(Error::IndeterminateHeading);
    }
    Ok(wrap_deg(s.atan2(c).to_degrees()))
}

/// Heading of an already-levelled platform.
pub fn heading_simplified(mean_w: Vec3) -> Result<f64> {
    if mean_w[0].is_nan() || mean_w[1].is_nan() {
        return Err(invalid("gyro mean must be finite"));
    }
    if mean_w[0] == 0.0 && mean_w[1] == 0.0 {
        return Err(Error::IndeterminateHeading);
    }
    Ok(wrap_deg((-mean_w[1]).atan2(mean_w[0]).to_degrees()))
}

/// Level then gyrocompass on raw sample slices. Returns heading in degrees.
pub fn baseline_heading(gyro: &[Vec3], accel: &[Vec3]) -> Result<f64> {
    let mean_w = crate::frames::mean(gyro).ok_or(Error::Empty("no gyro samples"))?;
    let mean_f = crate::frames::mean(accel).ok_or(Error::Empty("no accel samples"))?;
    heading_from_gyro(mean_w, level_from_accel(mean_f)?)
}

pub(crate) fn window_len(window_s: f64, sample_rate: f64, available: usize) -> Result<usize> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(invalid("window must be positive"));
    }
    let m = (window_s * sample_rate).round();
    if m < 1.0 {
        return Err(invalid("window shorter than one sample"));
    }
    let m = m as usize;
    if m > available {
        return Err(Error::WindowTooLong { requested: m, available });
    }
    Ok(m)
}

pub(crate) fn check_latitude(latitude: f64) -> Result<()> {
    let deg = latitude.to_degrees();
    if deg.abs() > MAX_LATITUDE_DEG {
        return Err(Error::PoleSingularity { latitude_deg: deg });
    }
    Ok(())
}

/// Averaging baseline over the first `window_s` seconds of a recording.
pub fn baseline_estimate(rec: &ImuRecording, window_s: f64) -> Result<HeadingEstimate> {
    rec.validate()?;
    check_latitude(rec.geo.latitude)?;
    let m = window_len(window_s, rec.sample_rate, rec.len())?;
    let yaw = baseline_heading(&rec.gyro[..m], &rec.accel[..m])?;
    Ok(HeadingEstimate {
        yaw,
        window_s,
        n_samples: m,
        method: Method::Baseline,
        error_deg: Some(cyclic_error_deg(rec.truth_yaw_deg(), yaw)),
    })
}

/// Running RMS of the cumulative gyro means: `(t [s], mu [deg/hr])` per sample.
pub fn running_rms(rec: &ImuRecording) -> Result<Vec<(f64, f64)>> {
    if rec.gyro.is_empty() {
        return Err(Error::Empty("recording has no samples"));
    }
    let mut out = Vec::with_capacity(rec.len());
    let mut mean = [0.0; 3];
    let mut sum_sq = 0.0;
    for (k, w) in rec.gyro.iter().enumerate() {
        let n = (k + 1) as f64;
        for j in 0..3 {
            mean[j] += (w[j] - mean[j]) / n;
        }
        let m = norm(mean) * RAD_S_TO_DEG_HR;
        sum_sq += m * m;
        out.push((n / rec.sample_rate, (sum_sq / n).sqrt()));
    }
    Ok(out)
}

/// SNR of the sample mean in dB for given averaging times.
///
/// Signal is the horizontal Earth-rate magnitude at `latitude`; noise is the
/// per-sample std reduced by `sqrt(t * rate)`.
pub fn snr_db(latitude: f64, sigma_sample: f64, sample_rate: f64, times: &[f64]) -> Vec<(f64, f64)> {
    let ned = earth_rate_ned(latitude, &EarthConstants::default());
    let signal = ned[0].hypot(ned[1]);
    times
        .iter()
        .map(|&t| {
            let sigma_mean = sigma_sample / (t * sample_rate).sqrt();
            (t, 20.0 * (signal / sigma_mean).log10())
        })
        .collect()
}

/// SNR curve of a recording at every sample, using the empirical per-sample
/// gyro std (averaged over the three axes).
pub fn snr_curve(rec: &ImuRecording) -> Result<Vec<(f64, f64)>> {
    if rec.len() < 2 {
        return Err(Error::Empty("need at least two samples for a noise estimate"));
    }
    let mean = crate::frames::mean(&rec.gyro).ok_or(Error::Empty("no samples"))?;
    let mut var = 0.0;
    for w in &rec.gyro {
        for j in 0..3 {
            let d = w[j] - mean[j];
            var += d * d;
        }
    }
    let sigma = (var / (3.0 * (rec.len() - 1) as f64)).sqrt();
    let times: Vec<f64> = (1..=rec.len()).map(|k| k as f64 / rec.sample_rate).collect();
    Ok(snr_db(rec.geo.latitude, sigma, rec.sample_rate, &times))
}

/// First-order attitude corrections (`truth - estimate`, rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelingError {
    pub roll: f64,
    pub pitch: f64,
}

/// Near-level leveling error caused by an accelerometer error `delta_f`,
/// expressed as the correction `truth - estimate`.
///
/// Roll picks up `delta_f_y / g`; pitch picks up `-delta_f_x / g`.
pub fn leveling_error_firstorder(delta_f: Vec3, gravity: f64) -> LevelingError {
    LevelingError { roll: delta_f[1] / gravity, pitch: -delta_f[0] / gravity }
}

/// Heading error (rad) from an East-axis accelerometer error and an East-axis
/// gyro error at `latitude`, as the correction `truth - estimate`. The body y
/// axis is taken as East, i.e. a level platform facing North.
pub fn heading_error_firstorder(
    delta_f_y: f64,
    delta_w_y: f64,
    latitude: f64,
    c: &EarthConstants,
) -> Result<f64> {
    if !(latitude.is_finite() && latitude.abs() <= FRAC_PI_2) {
        return Err(invalid("latitude out of range"));
    }
    check_latitude(latitude)?;
    Ok(-(delta_f_y / c.gravity) * latitude.tan() + (delta_w_y / c.earth_rate) / latitude.cos())
}

/// Cramer-Rao bound on the variance of an unbiased mean of `n` samples.
pub fn crlb_mean_variance(sigma_sample: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Empty("need at least one sample"));
    }
    if !(sigma_sample.is_finite() && sigma_sample > 0.0) {
        return Err(invalid("sample std must be positive"));
    }
    Ok(sigma_sample * sigma_sample / n as f64)
}
