//! Recording CSV: `# key=value` metadata lines, then
//! `t_s,gx,gy,gz,ax,ay,az` rows in SI units.
//!
//! Angles are written in degrees for people and again in radians so a
//! save/load round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gyrocompass_core::frames::{EulerAngles, GeoLocation, Vec3};
use gyrocompass_core::sensor::{ImuRecording, SensorSpec};

use crate::error::{AppError, Result};

pub const FORMAT: &str = "gyrocompass-recording";
pub const VERSION: u32 = 1;
const COLUMNS: [&str; 7] = ["t_s", "gx", "gy", "gz", "ax", "ay", "az"];

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn to_csv_string(rec: &ImuRecording) -> String {
    let e = rec.truth_euler;
    let s = &rec.spec;
    let mut out = String::new();
    let mut meta = |k: &str, v: String| {
        let _ = writeln!(out, "# {k}={v}");
    };
    meta("format", FORMAT.into());
    meta("version", VERSION.to_string());
    meta("sample_rate", rec.sample_rate.to_string());
    meta("n_samples", rec.len().to_string());
    meta("truth_euler_deg", join(&e.to_degrees()));
    meta("truth_euler_rad", join(&[e.roll, e.pitch, e.yaw]));
    meta("lat_deg", rec.geo.latitude.to_degrees().to_string());
    meta("lon_deg", rec.geo.longitude.to_degrees().to_string());
    meta("lat_rad", rec.geo.latitude.to_string());
    meta("lon_rad", rec.geo.longitude.to_string());
    meta("seed", rec.seed.to_string());
    meta("spec.arw", s.arw.to_string());
    meta("spec.bias_instability", s.bias_instability.to_string());
    meta("spec.rrw", s.rrw.to_string());
    meta("spec.gm_correlation_time", s.gm_correlation_time.to_string());
    meta("spec.initial_bias_range", s.initial_bias_range.to_string());
    meta("spec.fixed_bias", join(&s.fixed_bias));
    meta("spec.scale_factor_error", join(s.scale_factor_error.as_flattened()));
    meta("spec.accel_noise_density", s.accel_noise_density.to_string());
    meta("spec.accel_bias_range", s.accel_bias_range.to_string());
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for (k, (g, a)) in rec.gyro.iter().zip(&rec.accel).enumerate() {
        let t = k as f64 / rec.sample_rate;
        let _ = writeln!(out, "{t},{},{},{},{},{},{}", g[0], g[1], g[2], a[0], a[1], a[2]);
    }
    out
}

pub fn save_recording(rec: &ImuRecording, path: &Path) -> Result<()> {
    rec.validate()?;
    fs::write(path, to_csv_string(rec)).map_err(|e| AppError::io(path, e))
}

pub fn load_recording(path: &Path) -> Result<ImuRecording> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_recording(&text, path)
}

struct Meta<'a> {
    entries: Vec<(&'a str, &'a str, usize)>,
    path: &'a Path,
}

impl Meta<'_> {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.iter().rev().find(|(k, _, _)| *k == key).map(|(_, v, l)| (*v, *l))
    }

    fn floats(&self, key: &str, n: usize) -> Result<Option<Vec<f64>>> {
        let Some((v, line)) = self.raw(key) else { return Ok(None) };
        let vals = v
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AppError::parse(self.path, line, format!("{key}: {e}")))?;
        if vals.len() != n {
            return Err(AppError::parse(self.path, line, format!("{key}: expected {n} values, got {}", vals.len())));
        }
        Ok(Some(vals))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        Ok(self.floats(key, 1)?.map(|v| v[0]))
    }

    fn float_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.float(key)?.unwrap_or(default))
    }
}

pub fn parse_recording(text: &str, path: &Path) -> Result<ImuRecording> {
    let mut entries = Vec::new();
    let mut body_start = 0;
    let mut header_lines = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        header_lines += 1;
        body_start += line.len();
        let rest = rest.trim();
        if rest.is_empty() {
            continue;
        }
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| AppError::parse(path, header_lines, "metadata line is not key=value"))?;
        entries.push((k.trim(), v.trim(), header_lines));
    }
    let meta = Meta { entries, path };
    if let Some((f, line)) = meta.raw("format") {
        if f != FORMAT {
            return Err(AppError::parse(path, line, format!("unknown format {f:?}")));
        }
    }
    if let Some((v, line)) = meta.raw("version") {
        if v != VERSION.to_string() {
            return Err(AppError::parse(path, line, format!("unsupported version {v}")));
        }
    }
    let missing = |k: &str| AppError::schema(path, format!("missing metadata key {k}"));
    let sample_rate = meta.float("sample_rate")?.ok_or_else(|| missing("sample_rate"))?;
    let truth = match meta.floats("truth_euler_rad", 3)? {
        Some(r) => EulerAngles::new(r[0], r[1], r[2]),
        None => {
            let d = meta.floats("truth_euler_deg", 3)?.ok_or_else(|| missing("truth_euler_deg"))?;
            EulerAngles::from_degrees(d[0], d[1], d[2])
        }
    };
    let lat = match meta.float("lat_rad")? {
        Some(r) => r,
        None => meta.float("lat_deg")?.ok_or_else(|| missing("lat_deg"))?.to_radians(),
    };
    let lon = match meta.float("lon_rad")? {
        Some(r) => r,
        None => meta.float_or("lon_deg", 0.0)?.to_radians(),
    };
    let geo = GeoLocation::new(lat, lon).map_err(|e| AppError::schema(path, e.to_string()))?;
    let seed = match meta.raw("seed") {
        Some((v, line)) => v.parse::<u64>().map_err(|e| AppError::parse(path, line, format!("seed: {e}")))?,
        None => 0,
    };
    let d = SensorSpec::noise_free(sample_rate);
    let fixed = meta.floats("spec.fixed_bias", 3)?.map_or(d.fixed_bias, |v| [v[0], v[1], v[2]]);
    let m = meta
        .floats("spec.scale_factor_error", 9)?
        .map_or(d.scale_factor_error, |v| [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]);
    let spec = SensorSpec {
        sample_rate,
        arw: meta.float_or("spec.arw", d.arw)?,
        bias_instability: meta.float_or("spec.bias_instability", d.bias_instability)?,
        rrw: meta.float_or("spec.rrw", d.rrw)?,
        gm_correlation_time: meta.float_or("spec.gm_correlation_time", d.gm_correlation_time)?,
        initial_bias_range: meta.float_or("spec.initial_bias_range", d.initial_bias_range)?,
        fixed_bias: fixed,
        scale_factor_error: m,
        accel_noise_density: meta.float_or("spec.accel_noise_density", d.accel_noise_density)?,
        accel_bias_range: meta.float_or("spec.accel_bias_range", d.accel_bias_range)?,
    };
    spec.validate().map_err(|e| AppError::schema(path, e.to_string()))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text[body_start..].as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| AppError::parse(path, header_lines + 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(AppError::parse(path, header_lines + 1, format!("expected columns {}", COLUMNS.join(","))));
    }
    let mut gyro: Vec<Vec3> = Vec::new();
    let mut accel: Vec<Vec3> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = header_lines + 2 + i;
        let row = row.map_err(|e| AppError::parse(path, line, e.to_string()))?;
        let mut v = [0.0; 7];
        for (j, field) in row.iter().enumerate() {
            v[j] = field
                .parse::<f64>()
                .map_err(|e| AppError::parse(path, line, format!("column {}: {e}", COLUMNS[j])))?;
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(AppError::parse(path, line, "non-finite value"));
        }
        gyro.push([v[1], v[2], v[3]]);
        accel.push([v[4], v[5], v[6]]);
    }
    if let Some((n, line)) = meta.raw("n_samples") {
        let n: usize = n.parse().map_err(|e| AppError::parse(path, line, format!("n_samples: {e}")))?;
        if n != gyro.len() {
            return Err(AppError::parse(
                path,
                header_lines + 1 + gyro.len(),
                format!("expected {n} rows, found {}; file is truncated or padded", gyro.len()),
            ));
        }
    }
    let rec = ImuRecording { gyro, accel, sample_rate, truth_euler: truth, geo, seed, spec };
    rec.validate().map_err(|e| AppError::schema(path, e.to_string()))?;
    Ok(rec)
}
