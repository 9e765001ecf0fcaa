//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gyrocompass_core::align::{baseline_estimate, cyclic_error_deg, heading_error_firstorder, heading_from_gyro, level_from_accel};
use gyrocompass_core::allan::{fit_slope, gyro_allan_curves, identify_noise_params, reliable_tau_max};
use gyrocompass_core::dataset::{augment, make_sample, sample_heading, training_windows, AugmentConfig, SplitRatios, REPORT_WINDOWS};
use gyrocompass_core::eval::{comparison_table, evaluate_batch, improvement_pct, median, BaselinePredictor, ModelPredictor, TestCase};
use gyrocompass_core::experiment::{prepare_dataset, recording_name, simulate_plan, DatasetPlan, SimulationPlan};
use gyrocompass_core::frames::*;
use gyrocompass_core::learn::{cmse_gradient, cmse_loss, train, BiLstmModel, ModelShape, TrainConfig, Workspace};
use gyrocompass_core::sensor::{sample_mean_residual, simulate_stationary, SensorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let spec = SensorSpec::noise_free(10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_level, mut worst_heading) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let truth = EulerAngles::from_degrees(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0), rng.random_range(0.0..360.0));
        let geo = GeoLocation::from_degrees(rng.random_range(-85.0..=85.0), rng.random_range(-180.0..180.0)).unwrap();
        let rec = simulate_stationary(&spec, truth, geo, 1.0, i).unwrap();
        let lv = level_from_accel(mean(&rec.accel).unwrap()).unwrap();
        worst_level = worst_level.max((lv.roll - truth.roll).abs()).max((lv.pitch - truth.pitch).abs());
        worst_heading = worst_heading.max(baseline_estimate(&rec, 1.0).unwrap().error_deg.unwrap().abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_level < 1e-9 && worst_heading < 1e-9 && secs < 1.0;
    (pass, format!("max leveling error {worst_level:.1e} rad, max heading error {worst_heading:.1e} deg, {secs:.3} s"))
}

fn criterion_2() -> Outcome {
    let geo = GeoLocation::from_degrees(32.76, 35.02).unwrap();
    let rec = simulate_stationary(&SensorSpec::noise_free(1.0), EulerAngles::level(1.0), geo, 1.0, 0).unwrap();
    let w = rec.gyro[0];
    let planar = w[0].hypot(w[1]).to_degrees();
    let rel_3 = (planar - 0.00351).abs() / 0.00351;
    let rel_2 = (planar - 0.0035).abs() / 0.0035;
    (rel_3 < 0.005 && rel_2 < 0.005, format!("planar Earth rate {planar:.6} deg/s ({:.2}% from 0.0035)", 100.0 * rel_2))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut spec = SensorSpec::noise_free(100.0);
    spec.arw = 0.5;
    let geo = GeoLocation::from_degrees(32.76, 0.0).unwrap();
    let sigma = spec.gyro_sample_std();
    let mut ratios = Vec::new();
    for n in [100usize, 10_000] {
        let means: Vec<f64> = (0..1000u64)
            .map(|t| {
                let rec = simulate_stationary(&spec, EulerAngles::level(0.7), geo, n as f64 / spec.sample_rate, 10_000 * n as u64 + t).unwrap();
                sample_mean_residual(&rec).unwrap().1[0]
            })
            .collect();
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        ratios.push(var / (sigma * sigma / n as f64));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = ratios.iter().all(|r| (0.9..=1.15).contains(r)) && secs < 30.0;
    (pass, format!("efficiency ratio n=1e2: {:.3}, n=1e4: {:.3}, {secs:.1} s", ratios[0], ratios[1]))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let geo = GeoLocation::from_degrees(32.76, 0.0).unwrap();

    let mut arw_spec = SensorSpec::noise_free(100.0);
    arw_spec.arw = 0.02;
    let rec = simulate_stationary(&arw_spec, EulerAngles::level(0.0), geo, 2000.0, 11).unwrap();
    let curve = &gyro_allan_curves(&rec).unwrap()[0];
    let arw = identify_noise_params(curve).map(|p| p.arw).unwrap_or(f64::NAN);
    let arw_slope = fit_slope(curve, 0.1, 10.0).unwrap_or(f64::NAN);
    let arw_ok = ((arw - 0.02) / 0.02).abs() < 0.1 && (arw_slope + 0.5).abs() <= 0.05 && rec.len() >= 100_000;

    let mut bi_spec = SensorSpec::noise_free(10.0);
    bi_spec.arw = 0.02;
    bi_spec.bias_instability = 1.0;
    bi_spec.gm_correlation_time = 20.0;
    let rec = simulate_stationary(&bi_spec, EulerAngles::level(0.0), geo, 20_000.0, 12).unwrap();
    let bis: Vec<f64> = gyro_allan_curves(&rec)
        .unwrap()
        .iter()
        .map(|c| identify_noise_params(c).ok().and_then(|p| p.bias_instability).unwrap_or(f64::NAN))
        .collect();
    let bi_ok = bis.iter().all(|b| (b - 1.0).abs() < 0.2) && rec.len() >= 100_000;

    let mut rrw_spec = SensorSpec::noise_free(10.0);
    rrw_spec.rrw = 1.0;
    let rec = simulate_stationary(&rrw_spec, EulerAngles::level(0.0), geo, 20_000.0, 13).unwrap();
    let curve = &gyro_allan_curves(&rec).unwrap()[0];
    let tmax = reliable_tau_max(curve).unwrap_or(f64::NAN);
    let rrw_slope = fit_slope(curve, tmax / 10.0, tmax).unwrap_or(f64::NAN);
    let rrw_ok = (rrw_slope - 0.5).abs() <= 0.1 && rec.len() >= 100_000;

    let secs = start.elapsed().as_secs_f64();
    let pass = arw_ok && bi_ok && rrw_ok && secs < 60.0;
    (
        pass,
        format!(
            "ARW {arw:.4} (slope {arw_slope:.3}), BI per axis {:.3}/{:.3}/{:.3}, RRW slope {rrw_slope:.3}, {secs:.1} s",
            bis[0], bis[1], bis[2]
        ),
    )
}

fn exact_heading_correction(lat_deg: f64, dfy: f64, dwy: f64) -> f64 {
    let c = EarthConstants::default();
    let e = EulerAngles::level(0.0);
    let mut w = earth_rate_body(lat_deg.to_radians(), e, &c).unwrap();
    let mut f = gravity_body(e, &c);
    f[1] += dfy;
    w[1] += dwy;
    let est = heading_from_gyro(w, level_from_accel(f).unwrap()).unwrap();
    -cyclic_error_deg(0.0, est).to_radians()
}

fn criterion_5() -> Outcome {
    let c = EarthConstants::default();
    let mut worst = 0.0f64;
    let mut pass = true;
    for lat in [0.0f64, 32.76, 60.0] {
        for (dfy, dwy) in [(1e-4 * c.gravity, 0.0), (0.0, 1e-4 * c.earth_rate), (-2e-4 * c.gravity, 3e-4 * c.earth_rate)] {
            let predicted = heading_error_firstorder(dfy, dwy, lat.to_radians(), &c).unwrap();
            let exact = exact_heading_correction(lat, dfy, dwy);
            if predicted == 0.0 {
                // the tilt term vanishes at the equator
                pass &= exact.abs() < 1e-12;
            } else {
                let rel = ((exact - predicted) / predicted).abs();
                worst = worst.max(rel);
                pass &= rel < 0.01;
            }
        }
    }
    (pass, format!("worst relative deviation {:.3}% over latitudes 0, 32.76, 60", 100.0 * worst))
}

fn criterion_6() -> Outcome {
    let model = BiLstmModel::new(ModelShape::new(1, 8), 21).unwrap();
    let seq: Vec<Vec3> = (0..5).map(|t| {
        let t = t as f64;
        [12.0 * (0.7 * t).sin(), -9.0 * (1.3 * t + 0.2).cos(), 4.0 * t - 8.0]
    }).collect();
    let y = 123.0;
    let loss = |m: &BiLstmModel| cmse_loss(&[y], &[m.forward(&seq).unwrap()]).unwrap();
    let mut ws = Workspace::default();
    let y_hat = model.forward_ws(&seq, &mut ws).unwrap();
    let mut analytic = vec![0.0; model.parameter_count()];
    model.backward_ws(cmse_gradient(&[y], &[y_hat]).unwrap()[0], &mut ws, &mut analytic).unwrap();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for (i, a) in analytic.iter().enumerate() {
        let mut plus = model.clone();
        plus.params_mut()[i] += eps;
        let mut minus = model.clone();
        minus.params_mut()[i] -= eps;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
    }
    (worst < 1e-4, format!("{} parameters, max relative deviation {worst:.2e}", analytic.len()))
}

fn criterion_7() -> Outcome {
    let l = |y: f64, h: f64| cmse_loss(&[y], &[h]).unwrap();
    let mut pass = l(359.0, 1.0) == 4.0 && l(1.0, 359.0) == 4.0 && l(0.0, 180.0) == 32400.0;
    for yi in (-720..=720).step_by(7) {
        for hi in (-720..=720).step_by(11) {
            // quarter-degree grid keeps every shift exact
            let (y, h) = (yi as f64 / 4.0, hi as f64 / 4.0);
            let base = l(y, h);
            pass &= base == l(h, y) && base == l(y + 360.0, h) && base == l(y, h - 720.0) && base <= 32400.0;
        }
    }
    (pass, format!("L(359, 1) = {}, L(0, 180) = {}", l(359.0, 1.0), l(0.0, 180.0)))
}

fn criterion_8() -> Outcome {
    let geo = GeoLocation::from_degrees(32.76, 0.0).unwrap();
    let cfg = AugmentConfig { psi_min: 0.0, psi_max: 355.0, delta_psi: 5.0, awgn_std: 0.0, bias_range: 0.0 };
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k, yaw) in [0.0, 17.3, 145.0, 270.9, 359.5].into_iter().enumerate() {
        let rec = simulate_stationary(&SensorSpec::noise_free(10.0), EulerAngles::from_degrees(0.0, 0.0, yaw), geo, 10.0, k as u64).unwrap();
        let s = make_sample(&rec, "r", 10.0, 1.0).unwrap();
        let base = sample_heading(&s).unwrap();
        let out = augment(std::slice::from_ref(&s), &cfg, k as u64).unwrap();
        count = out.len();
        for (i, a) in out.iter().enumerate() {
            let want = wrap_deg(base + 5.0 * i as f64);
            worst = worst.max(cyclic_error_deg(want, sample_heading(a).unwrap()).abs());
        }
    }
    (count == 72 && worst < 1e-9, format!("{count}-point grid, max deviation {worst:.1e} deg"))
}

/// Per-window medians for the learning experiment.
struct LearningResult {
    windows: Vec<f64>,
    baseline: Vec<f64>,
    /// `[seed][window]`
    model: Vec<Vec<f64>>,
    seconds: f64,
}

fn learning_experiment() -> LearningResult {
    let start = Instant::now();
    let spec = SensorSpec::drifting(50.0);
    let recs = simulate_plan(&SimulationPlan::new(spec.clone(), 80, 2024)).unwrap();
    let named: Vec<(String, _)> = recs.into_iter().enumerate().map(|(i, r)| (recording_name(i), r)).collect();
    let plan = DatasetPlan {
        split_seed: 7,
        augment_seed: 3,
        ratios: SplitRatios::default(),
        model_rate: 1.0,
        windows: training_windows(5.0, 240.0, 8).unwrap(),
        augment: AugmentConfig { psi_min: -10.0, psi_max: 10.0, delta_psi: 5.0, ..AugmentConfig::for_sensor(&spec, 1.0) },
    };
    let data = prepare_dataset(&named, &plan).unwrap();
    let cases: Vec<TestCase> = data.split.test.iter().map(|&i| TestCase { id: &named[i].0, recording: &named[i].1 }).collect();
    let mut baseline = Vec::new();
    let mut model = Vec::new();
    for seed in 1..=3u64 {
        let init = BiLstmModel::new(ModelShape::new(2, 16), seed).unwrap();
        let cfg = TrainConfig { epochs: 100, batch_size: 32, learning_rate: 0.005, lr_decay: 0.97, seed, ..Default::default() };
        let (best, _) = train(&init, &data.train, &data.validation, &cfg).unwrap();
        let ev = evaluate_batch(&cases, &mut BaselinePredictor, &mut ModelPredictor { model: &best }, &REPORT_WINDOWS, 1.0).unwrap();
        let (table, _) = comparison_table(&ev).unwrap();
        baseline = table.rows.iter().map(|r| r.baseline_median).collect();
        model.push(table.rows.iter().map(|r| r.model_median).collect());
    }
    LearningResult { windows: REPORT_WINDOWS.to_vec(), baseline, model, seconds: start.elapsed().as_secs_f64() }
}

fn criterion_9(r: &LearningResult) -> Outcome {
    let mut pass = r.seconds < 1800.0;
    let mut parts = Vec::new();
    for (k, &w) in r.windows.iter().enumerate() {
        let b = r.baseline[k];
        pass &= r.model.iter().all(|m| m[k] < b);
        let imp = median(&r.model.iter().map(|m| improvement_pct(b, m[k])).collect::<Vec<_>>()).unwrap();
        if w >= 30.0 {
            pass &= imp >= 20.0;
        }
        parts.push(format!("{w} s: {b:.2} -> {:.2} deg ({imp:.0}%)", median(&r.model.iter().map(|m| m[k]).collect::<Vec<_>>()).unwrap()));
    }
    (pass, format!("{}; {:.0} s", parts.join(", "), r.seconds))
}

fn criterion_10(r: &LearningResult) -> Outcome {
    let last = r.windows.len() - 1;
    let b240 = r.baseline[last];
    let earlier_min = r.baseline[..last].iter().copied().fold(f64::INFINITY, f64::min);
    let floor = earlier_min.min(b240);
    let m240 = median(&r.model.iter().map(|m| m[last]).collect::<Vec<_>>()).unwrap();
    let pass = b240 >= 0.9 * earlier_min && m240 < floor;
    (pass, format!("baseline 240 s {b240:.2} vs earlier minimum {earlier_min:.2}; model 240 s {m240:.2} vs floor {floor:.2}"))
}

fn run_cli(cwd: &Path, args: &[&str]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_gyrocompass")).current_dir(cwd).args(args).output().unwrap();
    if !out.status.success() {
        eprintln!("{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            collect_files(root, &p, out);
        } else if p.file_name().is_some_and(|n| n != "train_timing.json") {
            out.insert(p.strip_prefix(root).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
        }
    }
}

fn criterion_11() -> Outcome {
    let chain: [&[&str]; 6] = [
        &["simulate", "--out", "recs", "--count", "12", "--preset", "drifting", "--rate", "10", "--duration", "60", "--seed", "5"],
        &["allan", "--recording", "recs/rec_0003.csv", "--out", "allan"],
        &["dataset", "--recordings", "recs", "--out", "ds", "--split-seed", "1", "--augment-seed", "2", "--window-max", "60", "--window-points", "5"],
        &["train", "--manifest", "ds/manifest.json", "--out", "model", "--hidden", "4", "--epochs", "3", "--batch-size", "16", "--lr", "0.005", "--seed", "3", "--init-seed", "4", "--quiet"],
        &["evaluate", "--checkpoint", "model/checkpoint.json", "--manifest", "ds/manifest.json", "--out", "eval", "--windows", "10,20,30,60"],
        &["compare", "--checkpoint", "model/checkpoint.json", "--manifest", "ds/manifest.json", "--out", "compare"],
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        if !chain.iter().all(|args| run_cli(dir.path(), args)) {
            return (false, "CLI chain failed".into());
        }
        let mut files = BTreeMap::new();
        collect_files(dir.path(), dir.path(), &mut files);
        runs.push(files);
    }
    let differing: Vec<&String> = runs[0].iter().filter(|(k, v)| runs[1].get(*k) != Some(v)).map(|(k, _)| k).collect();
    let pass = differing.is_empty() && runs[0].len() == runs[1].len() && runs[0].len() > 20;
    (pass, format!("{} files compared, {} differ {:?}", runs[0].len(), differing.len(), differing))
}

fn main() {
    let descriptions = [
        "noise-free alignment exactness",
        "Earth-rate magnitude at 32.76 deg",
        "sample-mean efficiency against the Cramer-Rao bound",
        "Allan regime recovery",
        "first-order heading error vs finite differences",
        "BPTT gradient correctness",
        "CMSE properties",
        "augmentation equivariance",
        "end-to-end learning benefit",
        "baseline saturation and model floor",
        "pipeline determinism",
    ];
    let mut learning: Option<LearningResult> = None;
    let mut failed = 0;
    for (i, desc) in descriptions.iter().enumerate() {
        let (pass, detail) = match i + 1 {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(learning.get_or_insert_with(learning_experiment)),
            10 => criterion_10(learning.get_or_insert_with(learning_experiment)),
            _ => criterion_11(),
        };
        println!("criterion {:>2} {} {desc}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    println!("acceptance: {} passed, {failed} failed", descriptions.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
