//! Plot-data and table CSVs. Degrees and seconds throughout.

use std::fs;
use std::path::Path;

use gyrocompass_core::allan::AllanCurve;
use gyrocompass_core::eval::{BoxplotTable, ComparisonTable, Evaluation, Reach, SingleRunTrace, TimeToAccuracyRow};
use gyrocompass_core::learn::TrainReport;

use crate::error::{AppError, Result};

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn comparison_csv(t: &ComparisonTable) -> String {
    let rows = t.rows.iter().flat_map(|r| {
        [
            vec![num(r.window_s), "baseline".into(), num(r.baseline_median), num(r.baseline_iqr), num(r.improvement_pct)],
            vec![num(r.window_s), "model".into(), num(r.model_median), num(r.model_iqr), num(r.improvement_pct)],
        ]
    });
    csv_string(&["window_s", "method", "median_deg", "iqr_deg", "improvement_pct"], rows)
}

pub fn boxplot_csv(b: &BoxplotTable) -> String {
    let rows = b.iter().flat_map(|(w, base, model)| {
        [("baseline", base), ("model", model)].map(|(name, s)| {
            vec![
                num(*w),
                name.into(),
                num(s.q1),
                num(s.median),
                num(s.q3),
                num(s.whisker_low),
                num(s.whisker_high),
                s.outliers.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(";"),
            ]
        })
    });
    csv_string(
        &["window_s", "method", "q1_deg", "median_deg", "q3_deg", "whisker_low_deg", "whisker_high_deg", "outliers_deg"],
        rows,
    )
}

/// Per-recording absolute errors.
pub fn errors_csv(ev: &Evaluation) -> String {
    let rows = ev.windows.iter().flat_map(|w| {
        ev.case_ids
            .iter()
            .zip(w.baseline.iter().zip(&w.model))
            .map(|(id, (b, m))| vec![id.clone(), num(w.window_s), num(*b), num(*m)])
    });
    csv_string(&["recording", "window_s", "baseline_abs_err_deg", "model_abs_err_deg"], rows)
}

fn reach_cells(r: &Reach) -> [String; 2] {
    match r {
        Reach::Reached { seconds } => [num(*seconds), "reached".into()],
        Reach::Bracketed { lo, hi } => ["NA".into(), format!("bracketed {lo}..{hi}")],
        Reach::Unreachable => ["NA".into(), "unreachable".into()],
    }
}

pub fn time_to_accuracy_csv(rows: &[TimeToAccuracyRow]) -> String {
    let rows = rows.iter().map(|r| {
        let [bs, bn] = reach_cells(&r.baseline);
        let [ms, mn] = reach_cells(&r.model);
        let imp = r.improvement_pct.map_or("NA".into(), num);
        vec![num(r.threshold_deg), bs, bn, ms, mn, imp]
    });
    csv_string(&["threshold_deg", "baseline_s", "baseline_status", "model_s", "model_status", "improvement_pct"], rows)
}

pub fn allan_csv(curves: &[AllanCurve; 3]) -> String {
    let rows = (0..curves[0].taus.len()).map(|i| {
        vec![num(curves[0].taus[i]), num(curves[0].adev[i]), num(curves[1].adev[i]), num(curves[2].adev[i])]
    });
    csv_string(&["tau_s", "adev_x_deg_hr", "adev_y_deg_hr", "adev_z_deg_hr"], rows)
}

pub fn train_report_csv(r: &TrainReport) -> String {
    let mut best = f64::INFINITY;
    let rows = r.train_crmse.iter().zip(&r.val_crmse).enumerate().map(|(i, (t, v))| {
        best = best.min(*v);
        vec![(i + 1).to_string(), num(*t), num(*v), num(best)]
    });
    csv_string(&["epoch", "train_crmse_deg", "val_crmse_deg", "best_val_crmse_deg"], rows.collect::<Vec<_>>())
}

pub fn trace_csv(t: &SingleRunTrace) -> String {
    let b = t.baseline.iter().map(|p| vec!["baseline".into(), num(p.t_s), num(p.yaw_deg), num(t.truth_deg)]);
    let m = t.model.iter().map(|p| vec!["model".into(), num(p.t_s), num(p.yaw_deg), num(t.truth_deg)]);
    csv_string(&["series", "t_s", "yaw_deg", "truth_deg"], b.chain(m))
}
