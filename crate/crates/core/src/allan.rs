//! Overlapping Allan variance and noise-term identification.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Regime, Result};
use crate::frames::RAD_S_TO_DEG_HR;
use crate::sensor::ImuRecording;

pub const POINTS_PER_DECADE: usize = 20;

/// Points whose cluster count `n / m` falls below this are too noisy for
/// slope classification and are skipped by [`identify_noise_params`].
pub const MIN_CLUSTERS: f64 = 40.0;

/// Tolerance around the nominal slope when labelling a curve point.
pub const SLOPE_TOLERANCE: f64 = 0.15;

/// Flicker-floor divisor relating the Allan minimum to bias instability.
pub const BI_SCALE: f64 = 0.664;

/// Half-width (points) of the local log-log slope fit.
const SLOPE_HALF_WINDOW: usize = 3;

/// Shortest run of consistently labelled points accepted as a regime.
const MIN_RUN: usize = 4;

/// Allan deviation samples of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllanCurve {
    /// Averaging times, s.
    pub taus: Vec<f64>,
    /// deg/hr
    pub adev: Vec<f64>,
    /// Cluster size in samples for each tau.
    pub cluster_sizes: Vec<usize>,
    pub sample_rate: f64,
    pub n_samples: usize,
}

/// Tau range (s) a regime was fitted over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub tau_min: f64,
    pub tau_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindows {
    pub arw: FitWindow,
    pub bias_instability: Option<FitWindow>,
    pub rrw: Option<FitWindow>,
}

/// Noise terms read off an Allan deviation curve. Absent regimes are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// deg/sqrt(hr)
    pub arw: f64,
    /// deg/hr
    pub bias_instability: Option<f64>,
    /// deg/hr/sqrt(hr)
    pub rrw: Option<f64>,
    pub fit_windows: FitWindows,
}

/// Log-spaced cluster sizes from 1 up to `min(n / 3, (n - 1) / 2)` samples.
pub fn log_tau_grid(n: usize, points_per_decade: usize) -> Vec<usize> {
    let max_m = (n / 3).min(n.saturating_sub(1) / 2);
    let mut out: Vec<usize> = Vec::new();
    if max_m == 0 || points_per_decade == 0 {
        return out;
    }
    let decades = (max_m as f64).log10();
    let steps = (decades * points_per_decade as f64).floor() as usize;
    for k in 0..=steps {
        let m = 10f64.powf(k as f64 / points_per_decade as f64).round() as usize;
        let m = m.clamp(1, max_m);
        if out.last() != Some(&m) {
            out.push(m);
        }
    }
    if out.last() != Some(&max_m) {
        out.push(max_m);
    }
    out
}

/// Overlapping Allan deviation of a rate series (rad/s) at cluster sizes `taus`.
///
/// The series is demeaned and integrated to phase; each point uses every
/// admissible second difference `x[i+2m] - 2 x[i+m] + x[i]`.
pub fn allan_variance(series: &[f64], rate: f64, taus: &[usize]) -> Result<AllanCurve> {
    let n = series.len();
    if n < 3 {
        return Err(invalid("Allan variance needs at least 3 samples"));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(invalid("sample rate must be positive"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(invalid("series must be finite"));
    }
    if taus.is_empty() {
        return Err(Error::Empty("no cluster sizes"));
    }
    let mut prev = 0;
    for &m in taus {
        if m == 0 || m > (n - 1) / 2 {
            return Err(Error::TauOutOfRange { m, n });
        }
        if m <= prev {
            return Err(invalid("cluster sizes must be strictly increasing"));
        }
        prev = m;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dt = 1.0 / rate;
    // phase has n + 1 points starting from zero
    let mut phase = Vec::with_capacity(n + 1);
    phase.push(0.0);
    let mut acc = 0.0;
    for v in series {
        acc += (v - mean) * dt;
        phase.push(acc);
    }
    let big_n = phase.len();
    let mut curve = AllanCurve {
        taus: Vec::with_capacity(taus.len()),
        adev: Vec::with_capacity(taus.len()),
        cluster_sizes: taus.to_vec(),
        sample_rate: rate,
        n_samples: n,
    };
    for &m in taus {
        let tau = m as f64 * dt;
        let terms = big_n - 2 * m;
        let mut sum = 0.0;
        for i in 0..terms {
            let d = phase[i + 2 * m] - 2.0 * phase[i + m] + phase[i];
            sum += d * d;
        }
        let avar = sum / (2.0 * tau * tau * terms as f64);
        curve.taus.push(tau);
        curve.adev.push(avar.sqrt() * RAD_S_TO_DEG_HR);
    }
    Ok(curve)
}

/// Allan deviation of each gyro axis on the default log grid.
pub fn gyro_allan_curves(rec: &ImuRecording) -> Result<[AllanCurve; 3]> {
    rec.validate()?;
    let grid = log_tau_grid(rec.len(), POINTS_PER_DECADE);
    let axis = |j: usize| {
        let s: Vec<f64> = rec.gyro.iter().map(|w| w[j]).collect();
        allan_variance(&s, rec.sample_rate, &grid)
    };
    Ok([axis(0)?, axis(1)?, axis(2)?])
}

/// Largest tau (s) with at least [`MIN_CLUSTERS`] clusters, if any.
pub fn reliable_tau_max(curve: &AllanCurve) -> Option<f64> {
    curve
        .taus
        .iter()
        .zip(&curve.cluster_sizes)
        .filter(|(_, &m)| m > 0 && curve.n_samples as f64 / m as f64 >= MIN_CLUSTERS)
        .map(|(t, _)| *t)
        .last()
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares log-log slope of the curve over `[tau_lo, tau_hi]` seconds.
pub fn fit_slope(curve: &AllanCurve, tau_lo: f64, tau_hi: f64) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .taus
        .iter()
        .zip(&curve.adev)
        .filter(|(t, a)| **t >= tau_lo && **t <= tau_hi && **a > 0.0)
        .map(|(t, a)| (t.log10(), a.log10()))
        .unzip();
    if xs.len() < 2 {
        return Err(invalid("fewer than two curve points inside the fit range"));
    }
    Ok(least_squares(&xs, &ys).0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Label {
    Arw,
    Flat,
    Rrw,
}

fn label(slope: f64) -> Option<Label> {
    if (slope + 0.5).abs() <= SLOPE_TOLERANCE {
        Some(Label::Arw)
    } else if slope.abs() <= SLOPE_TOLERANCE {
        Some(Label::Flat)
    } else if (slope - 0.5).abs() <= SLOPE_TOLERANCE {
        Some(Label::Rrw)
    } else {
        None
    }
}

/// Maximal runs `[start, end)` of points carrying label `want`.
fn runs(labels: &[Option<Label>], want: Label) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, l) in labels.iter().enumerate() {
        match (*l == Some(want), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, labels.len()));
    }
    out.retain(|(s, e)| e - s >= MIN_RUN);
    out
}

/// Mean of `log10(adev) - k * log10(tau)` over a run: the intercept of a
/// fixed-slope line.
fn fixed_slope_intercept(lt: &[f64], la: &[f64], k: f64) -> f64 {
    lt.iter().zip(la).map(|(t, a)| a - k * t).sum::<f64>() / lt.len() as f64
}

/// Classify curve points by local slope and read off ARW, BI and RRW.
///
/// ARW is the -1/2 line evaluated at 1 s, BI the curve minimum over the
/// widest flat run divided by [`BI_SCALE`], and RRW the +1/2 line evaluated
/// at 3 h.
pub fn identify_noise_params(curve: &AllanCurve) -> Result<NoiseParams> {
    if curve.taus.len() != curve.adev.len() || curve.taus.is_empty() {
        return Err(Error::ShapeMismatch("tau and adev lengths differ or are empty".into()));
    }
    let usable: Vec<usize> = (0..curve.taus.len())
        .filter(|&i| {
            let m = curve.cluster_sizes.get(i).copied().unwrap_or(0) as f64;
            curve.adev[i] > 0.0 && m > 0.0 && curve.n_samples as f64 / m >= MIN_CLUSTERS
        })
        .collect();
    if usable.len() < 2 {
        return Err(Error::RegimeNotFound(Regime::AngleRandomWalk));
    }
    let lt: Vec<f64> = usable.iter().map(|&i| curve.taus[i].log10()).collect();
    let la: Vec<f64> = usable.iter().map(|&i| curve.adev[i].log10()).collect();
    if lt[lt.len() - 1] - lt[0] < 2.0 - 1e-9 {
        return Err(invalid("curve must span at least two decades of tau"));
    }
    let labels: Vec<Option<Label>> = (0..lt.len())
        .map(|i| {
            let lo = i.saturating_sub(SLOPE_HALF_WINDOW);
            let hi = (i + SLOPE_HALF_WINDOW + 1).min(lt.len());
            if hi - lo < 3 {
                return None;
            }
            label(least_squares(&lt[lo..hi], &la[lo..hi]).0)
        })
        .collect();
    let window = |(s, e): (usize, usize)| FitWindow {
        tau_min: 10f64.powf(lt[s]),
        tau_max: 10f64.powf(lt[e - 1]),
    };

    // white noise dominates the shortest taus
    let arw_run = *runs(&labels, Label::Arw)
        .first()
        .ok_or(Error::RegimeNotFound(Regime::AngleRandomWalk))?;
    let c = fixed_slope_intercept(&lt[arw_run.0..arw_run.1], &la[arw_run.0..arw_run.1], -0.5);
    let arw = 10f64.powf(c) / 60.0;

    let flat = runs(&labels, Label::Flat).into_iter().max_by_key(|(s, e)| e - s);
    let bias_instability = flat.map(|(s, e)| {
        let min = la[s..e].iter().cloned().fold(f64::INFINITY, f64::min);
        10f64.powf(min) / BI_SCALE
    });

    // rate random walk dominates the longest taus
    let rrw_run = runs(&labels, Label::Rrw).into_iter().last();
    let rrw = rrw_run.map(|(s, e)| {
        let c = fixed_slope_intercept(&lt[s..e], &la[s..e], 0.5);
        10f64.powf(c + 0.5 * 10800f64.log10())
    });

    Ok(NoiseParams {
        arw,
        bias_instability,
        rrw,
        fit_windows: FitWindows {
            arw: window(arw_run),
            bias_instability: flat.map(window),
            rrw: rrw_run.map(window),
        },
    })
}
