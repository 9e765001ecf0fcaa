//! Baseline-vs-model comparison: window sweeps, quartile tables,
//! time-to-accuracy and single-recording traces.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::align::{baseline_heading, check_latitude, cyclic_error_deg, window_len};
use crate::dataset::make_sample;
use crate::error::{invalid, Error, Result};
use crate::frames::Vec3;
use crate::learn::BiLstmModel;
use crate::sensor::ImuRecording;

/// Thresholds of the time-to-accuracy table, deg.
pub const TTA_THRESHOLDS: [f64; 6] = [4.0, 3.5, 3.0, 2.5, 2.0, 1.5];

/// Everything a predictor may look at. Carries no truth.
#[derive(Debug, Clone, Copy)]
pub struct PredictorInput<'a> {
    /// Model-rate gyro sequence, deg/hr.
    pub sequence: &'a [Vec3],
    /// Raw gyro over the window, rad/s.
    pub gyro: &'a [Vec3],
    /// Raw accel over the window, m/s^2.
    pub accel: &'a [Vec3],
    pub sample_rate: f64,
    pub window_s: f64,
}

pub trait HeadingPredictor {
    fn name(&self) -> &str;
    /// Heading in degrees; wrapping is left to the caller.
    fn predict(&mut self, input: &PredictorInput<'_>) -> Result<f64>;
}

/// Levelling plus gyrocompassing on the window average.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselinePredictor;

impl HeadingPredictor for BaselinePredictor {
    fn name(&self) -> &str {
        "baseline"
    }

    fn predict(&mut self, input: &PredictorInput<'_>) -> Result<f64> {
        baseline_heading(input.gyro, input.accel)
    }
}

#[derive(Debug, Clone)]
pub struct ModelPredictor<'m> {
    pub model: &'m BiLstmModel,
}

impl HeadingPredictor for ModelPredictor<'_> {
    fn name(&self) -> &str {
        "model"
    }

    fn predict(&mut self, input: &PredictorInput<'_>) -> Result<f64> {
        self.model.predict_deg(input.sequence)
    }
}

/// A test recording with a stable identifier.
#[derive(Debug, Clone, Copy)]
pub struct TestCase<'a> {
    pub id: &'a str,
    pub recording: &'a ImuRecording,
}

/// Absolute cyclic errors per window, in test-case order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowErrors {
    pub window_s: f64,
    pub baseline: Vec<f64>,
    pub model: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub case_ids: Vec<String>,
    pub windows: Vec<WindowErrors>,
}

fn check_windows(windows: &[f64]) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::Empty("no evaluation windows"));
    }
    if windows.iter().any(|w| !(w.is_finite() && *w > 0.0)) || windows.windows(2).any(|p| p[0] >= p[1]) {
        return Err(invalid("windows must be positive and strictly increasing"));
    }
    Ok(())
}

fn predict_window(
    rec: &ImuRecording,
    predictor: &mut dyn HeadingPredictor,
    window_s: f64,
    model_rate: f64,
) -> Result<f64> {
    let m = window_len(window_s, rec.sample_rate, rec.len())?;
    let sample = make_sample(rec, "", window_s, model_rate)?;
    let input = PredictorInput {
        sequence: &sample.sequence,
        gyro: &rec.gyro[..m],
        accel: &rec.accel[..m],
        sample_rate: rec.sample_rate,
        window_s,
    };
    predictor.predict(&input)
}

/// Run both predictors on every case and window. Truth is read only after
/// each prediction returns.
pub fn evaluate_batch(
    cases: &[TestCase<'_>],
    baseline: &mut dyn HeadingPredictor,
    model: &mut dyn HeadingPredictor,
    windows: &[f64],
    model_rate: f64,
) -> Result<Evaluation> {
    if cases.is_empty() {
        return Err(Error::Empty("empty test set"));
    }
    check_windows(windows)?;
    let mut out: Vec<WindowErrors> = windows
        .iter()
        .map(|&w| WindowErrors { window_s: w, baseline: Vec::new(), model: Vec::new() })
        .collect();
    for case in cases {
        let rec = case.recording;
        rec.validate()?;
        check_latitude(rec.geo.latitude)?;
        for row in out.iter_mut() {
            let b = predict_window(rec, baseline, row.window_s, model_rate)?;
            let m = predict_window(rec, model, row.window_s, model_rate)?;
            let truth = rec.truth_yaw_deg();
            row.baseline.push(cyclic_error_deg(truth, b).abs());
            row.model.push(cyclic_error_deg(truth, m).abs());
        }
    }
    Ok(Evaluation { case_ids: cases.iter().map(|c| c.id.into()).collect(), windows: out })
}

/// Linear-interpolation quantile of ascending data (the "inclusive" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("no values"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid("values must not be NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn median(values: &[f64]) -> Result<f64> {
    Ok(quantile_sorted(&sorted(values)?, 0.5))
}

/// `100 (baseline - model) / baseline`; zero when both are zero.
pub fn improvement_pct(baseline: f64, model: f64) -> f64 {
    if baseline == 0.0 && model == 0.0 {
        0.0
    } else {
        100.0 * (baseline - model) / baseline
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Smallest value not below `q1 - 1.5 IQR`.
    pub whisker_low: f64,
    /// Largest value not above `q3 + 1.5 IQR`.
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxplotStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn boxplot(values: &[f64]) -> Result<BoxplotStats> {
    let v = sorted(values)?;
    let q1 = quantile_sorted(&v, 0.25);
    let q3 = quantile_sorted(&v, 0.75);
    let fence = 1.5 * (q3 - q1);
    let (lo, hi) = (q1 - fence, q3 + fence);
    let inside = v.iter().copied().filter(|x| *x >= lo && *x <= hi);
    let whisker_low = inside.clone().next().unwrap_or(q1);
    let whisker_high = inside.last().unwrap_or(q3);
    Ok(BoxplotStats {
        q1,
        median: quantile_sorted(&v, 0.5),
        q3,
        whisker_low,
        whisker_high,
        outliers: v.into_iter().filter(|x| *x < lo || *x > hi).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub window_s: f64,
    pub baseline_median: f64,
    pub baseline_iqr: f64,
    pub model_median: f64,
    pub model_iqr: f64,
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Per-window boxplots, `(window_s, baseline, model)`.
pub type BoxplotTable = Vec<(f64, BoxplotStats, BoxplotStats)>;

pub fn comparison_table(ev: &Evaluation) -> Result<(ComparisonTable, BoxplotTable)> {
    let mut rows = Vec::with_capacity(ev.windows.len());
    let mut boxes = Vec::with_capacity(ev.windows.len());
    for w in &ev.windows {
        let b = boxplot(&w.baseline)?;
        let m = boxplot(&w.model)?;
        rows.push(ComparisonRow {
            window_s: w.window_s,
            baseline_median: b.median,
            baseline_iqr: b.iqr(),
            model_median: m.median,
            model_iqr: m.iqr(),
            improvement_pct: improvement_pct(b.median, m.median),
        });
        boxes.push((w.window_s, b, m));
    }
    Ok((ComparisonTable { rows }, boxes))
}

/// When a median-error curve first reaches a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Reach {
    /// Reached and stays reached; seconds, interpolated in log-window.
    Reached { seconds: f64 },
    /// First reached between two windows, but the curve rises above the
    /// threshold again later.
    Bracketed { lo: f64, hi: f64 },
    Unreachable,
}

impl Reach {
    pub fn seconds(&self) -> Option<f64> {
        match self {
            Reach::Reached { seconds } => Some(*seconds),
            _ => None,
        }
    }
}

/// Earliest window at which `curve` (ascending windows, median errors) is at
/// or below `threshold`.
pub fn time_to_reach(curve: &[(f64, f64)], threshold: f64) -> Result<Reach> {
    if curve.is_empty() {
        return Err(Error::Empty("empty error curve"));
    }
    let Some(k) = curve.iter().position(|(_, e)| *e <= threshold) else {
        return Ok(Reach::Unreachable);
    };
    let relapses = curve[k..].iter().any(|(_, e)| *e > threshold);
    if k == 0 {
        return Ok(if relapses {
            Reach::Bracketed { lo: curve[0].0, hi: curve[0].0 }
        } else {
            Reach::Reached { seconds: curve[0].0 }
        });
    }
    let (w0, e0) = curve[k - 1];
    let (w1, e1) = curve[k];
    if relapses {
        return Ok(Reach::Bracketed { lo: w0, hi: w1 });
    }
    let f = (e0 - threshold) / (e0 - e1);
    let seconds = (w0.ln() + f * (w1.ln() - w0.ln())).exp();
    Ok(Reach::Reached { seconds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeToAccuracyRow {
    pub threshold_deg: f64,
    pub baseline: Reach,
    pub model: Reach,
    /// Relative time saving when both are reached.
    pub improvement_pct: Option<f64>,
}

pub fn time_to_accuracy(ev: &Evaluation, thresholds: &[f64]) -> Result<Vec<TimeToAccuracyRow>> {
    let mut base = Vec::with_capacity(ev.windows.len());
    let mut model = Vec::with_capacity(ev.windows.len());
    for w in &ev.windows {
        base.push((w.window_s, median(&w.baseline)?));
        model.push((w.window_s, median(&w.model)?));
    }
    thresholds
        .iter()
        .map(|&t| {
            let b = time_to_reach(&base, t)?;
            let m = time_to_reach(&model, t)?;
            let improvement_pct = match (b.seconds(), m.seconds()) {
                (Some(tb), Some(tm)) => Some(improvement_pct(tb, tm)),
                _ => None,
            };
            Ok(TimeToAccuracyRow { threshold_deg: t, baseline: b, model: m, improvement_pct })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t_s: f64,
    pub yaw_deg: f64,
}

/// Headings of one recording: the baseline at every whole second and the
/// model at selected windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRunTrace {
    pub truth_deg: f64,
    pub baseline: Vec<TracePoint>,
    pub model: Vec<TracePoint>,
}

pub fn single_run_trace(
    rec: &ImuRecording,
    model: &mut dyn HeadingPredictor,
    windows: &[f64],
    model_rate: f64,
) -> Result<SingleRunTrace> {
    rec.validate()?;
    check_windows(windows)?;
    let seconds = rec.duration_s().floor() as usize;
    let mut baseline = Vec::with_capacity(seconds);
    let mut bp = BaselinePredictor;
    for s in 1..=seconds {
        let t = s as f64;
        baseline.push(TracePoint { t_s: t, yaw_deg: predict_window(rec, &mut bp, t, model_rate)? });
    }
    let model = windows
        .iter()
        .map(|&w| Ok(TracePoint { t_s: w, yaw_deg: predict_window(rec, model, w, model_rate)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SingleRunTrace { truth_deg: rec.truth_yaw_deg(), baseline, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_inclusive() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.75), 3.25);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn boxplot_whiskers_and_outliers() {
        let b = boxplot(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.whisker_low, 1.0);
        assert_eq!(b.whisker_high, 4.0);
        assert_eq!(b.outliers, [100.0]);
    }

    #[test]
    fn improvement_cases() {
        assert_eq!(improvement_pct(4.0, 2.0), 50.0);
        assert_eq!(improvement_pct(0.0, 0.0), 0.0);
        assert_eq!(improvement_pct(2.0, 2.0), 0.0);
    }

    #[test]
    fn reach_rules() {
        let curve = [(10.0, 5.0), (20.0, 3.0), (40.0, 1.0)];
        assert_eq!(time_to_reach(&curve, 6.0).unwrap(), Reach::Reached { seconds: 10.0 });
        assert_eq!(time_to_reach(&curve, 0.5).unwrap(), Reach::Unreachable);
        let Reach::Reached { seconds } = time_to_reach(&curve, 4.0).unwrap() else { panic!() };
        assert!((seconds - 200f64.sqrt()).abs() < 1e-9);
        let bumpy = [(10.0, 5.0), (20.0, 3.0), (40.0, 3.5)];
        assert_eq!(time_to_reach(&bumpy, 3.2).unwrap(), Reach::Bracketed { lo: 10.0, hi: 20.0 });
    }
}
