use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gyrocompass_core::allan::{gyro_allan_curves, identify_noise_params};
use gyrocompass_core::dataset::{training_windows, AugmentConfig, SplitRatios, REPORT_WINDOWS};
use gyrocompass_core::eval::{
    comparison_table, evaluate_batch, median, single_run_trace, time_to_accuracy, BaselinePredictor, ModelPredictor,
    TestCase, TTA_THRESHOLDS,
};
use gyrocompass_core::experiment::{prepare_dataset, recording_name, simulate_plan, DatasetPlan, SimulationPlan};
use gyrocompass_core::learn::{train_with_progress, BiLstmModel, ModelShape, OptimizerKind, TrainConfig};
use gyrocompass_core::sensor::{ImuRecording, SensorSpec};
use serde_json::json;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::error::{AppError, Result};
use crate::manifest::{
    load_manifest, load_samples, read_json, save_manifest, save_samples, write_json, DatasetManifest, Normalization,
};
use crate::recording_io::{load_recording, save_recording};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "gyrocompass", version, about = "Stationary IMU alignment, noise analysis and learned gyrocompassing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate stationary recordings into a directory
    Simulate(SimulateArgs),
    /// Allan deviation and noise terms of one recording
    Allan(AllanArgs),
    /// Split recordings, cut windows and augment the training set
    Dataset(DatasetArgs),
    /// Train a Bi-LSTM on a dataset manifest
    Train(TrainArgs),
    /// Baseline vs model errors at fixed windows
    Evaluate(EvaluateArgs),
    /// Full comparison: windows, time-to-accuracy and a single-run trace
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    NoiseFree,
    Datasheet,
    Empirical,
    Drifting,
}

impl Preset {
    fn spec(self, rate: f64) -> SensorSpec {
        match self {
            Preset::NoiseFree => SensorSpec::noise_free(rate),
            Preset::Datasheet => SensorSpec::datasheet(rate),
            Preset::Empirical => SensorSpec::empirical(rate),
            Preset::Drifting => SensorSpec::drifting(rate),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 80)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Preset::Datasheet)]
    pub preset: Preset,
    /// Sensor spec JSON; replaces the preset
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    /// Hz
    #[arg(long, default_value_t = 50.0)]
    pub rate: f64,
    /// s
    #[arg(long, default_value_t = 240.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 32.76, allow_negative_numbers = true)]
    pub lat: f64,
    #[arg(long, default_value_t = 35.02, allow_negative_numbers = true)]
    pub lon: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub roll: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub pitch: f64,
    /// Fixed heading in degrees; when omitted, headings are jittered within equal sectors of the circle
    #[arg(long, allow_negative_numbers = true)]
    pub yaw: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AllanArgs {
    #[arg(long)]
    pub recording: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub recordings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub augment_seed: u64,
    /// Hz
    #[arg(long, default_value_t = 1.0)]
    pub model_rate: f64,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub psi_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub psi_max: f64,
    #[arg(long, default_value_t = 5.0)]
    pub delta_psi: f64,
    /// deg/hr; defaults to the sensor's white noise at the model rate
    #[arg(long)]
    pub awgn_std: Option<f64>,
    /// deg/hr
    #[arg(long, default_value_t = 1.0)]
    pub bias_range: f64,
    #[arg(long, default_value_t = 5.0)]
    pub window_min: f64,
    #[arg(long, default_value_t = 240.0)]
    pub window_max: f64,
    #[arg(long, default_value_t = 8)]
    pub window_points: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Optim {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 24)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.0015)]
    pub lr: f64,
    /// Per-epoch learning-rate multiplier
    #[arg(long, default_value_t = 1.0)]
    pub lr_decay: f64,
    #[arg(long, value_enum, default_value_t = Optim::Adam)]
    pub optimizer: Optim,
    /// Shuffle seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub init_seed: u64,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, default_value_t = 5.0)]
    pub clip_norm: f64,
    /// Print nothing per epoch
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated windows in seconds
    #[arg(long, value_delimiter = ',', default_values_t = REPORT_WINDOWS.to_vec())]
    pub windows: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Points of the log-spaced window grid used for time-to-accuracy
    #[arg(long, default_value_t = 16)]
    pub grid_points: usize,
    #[arg(long, value_delimiter = ',', default_values_t = TTA_THRESHOLDS.to_vec())]
    pub thresholds: Vec<f64>,
    /// Test recording to trace; the first test recording when omitted
    #[arg(long)]
    pub trace: Option<String>,
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("invalid usage").trim_start_matches("error: ").to_string();
            eprintln!("{}", AppError::Usage(first).to_json_line());
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(&a),
        Command::Allan(a) => allan(&a),
        Command::Dataset(a) => dataset(&a),
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Compare(a) => compare(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let spec = match &a.spec_file {
        Some(p) => read_json::<SensorSpec>(p)?,
        None => a.preset.spec(a.rate),
    };
    let plan = SimulationPlan {
        spec,
        count: a.count,
        seed: a.seed,
        duration_s: a.duration,
        latitude_deg: a.lat,
        longitude_deg: a.lon,
        roll_deg: a.roll,
        pitch_deg: a.pitch,
        yaw_deg: a.yaw,
    };
    let recs = simulate_plan(&plan)?;
    create_dir(&a.out)?;
    for (i, rec) in recs.iter().enumerate() {
        save_recording(rec, &a.out.join(format!("{}.csv", recording_name(i))))?;
    }
    write_json(&plan, &a.out.join("simulation.json"))?;
    println!("wrote {} recordings to {}", recs.len(), a.out.display());
    Ok(())
}

pub fn allan(a: &AllanArgs) -> Result<()> {
    let rec = load_recording(&a.recording)?;
    let curves = gyro_allan_curves(&rec)?;
    create_dir(&a.out)?;
    report::write_text(&report::allan_csv(&curves), &a.out.join("allan.csv"))?;
    let axes: Vec<_> = curves
        .iter()
        .zip(["x", "y", "z"])
        .map(|(c, axis)| match identify_noise_params(c) {
            Ok(p) => json!({ "axis": axis, "params": p }),
            Err(e) => json!({ "axis": axis, "error": e.to_string() }),
        })
        .collect();
    write_json(&json!({ "units": { "arw": "deg/sqrt(hr)", "bias_instability": "deg/hr", "rrw": "deg/hr/sqrt(hr)" }, "axes": axes }), &a.out.join("noise_params.json"))?;
    println!("wrote allan.csv and noise_params.json to {}", a.out.display());
    Ok(())
}

/// `(stem, recording)` for every `*.csv` in `dir`, sorted by file name.
pub fn load_recording_dir(dir: &Path) -> Result<Vec<(String, ImuRecording)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| AppError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(AppError::schema(dir, "no recording files (*.csv)"));
    }
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((stem, load_recording(p)?))
        })
        .collect()
}

pub fn dataset(a: &DatasetArgs) -> Result<()> {
    let recs = load_recording_dir(&a.recordings)?;
    let awgn_std = a.awgn_std.unwrap_or_else(|| AugmentConfig::for_sensor(&recs[0].1.spec, a.model_rate).awgn_std);
    let plan = DatasetPlan {
        split_seed: a.split_seed,
        augment_seed: a.augment_seed,
        ratios: SplitRatios::default(),
        model_rate: a.model_rate,
        windows: training_windows(a.window_min, a.window_max, a.window_points)?,
        augment: AugmentConfig {
            psi_min: a.psi_min,
            psi_max: a.psi_max,
            delta_psi: a.delta_psi,
            awgn_std,
            bias_range: a.bias_range,
        },
    };
    let prepared = prepare_dataset(&recs, &plan)?;
    create_dir(&a.out)?;
    let names = |ids: &[usize]| ids.iter().map(|&i| recs[i].0.clone()).collect::<Vec<_>>();
    let manifest = DatasetManifest {
        format: crate::manifest::FORMAT.into(),
        version: crate::manifest::VERSION,
        recordings_dir: a.recordings.to_string_lossy().into_owned(),
        recordings: recs.iter().map(|(n, _)| n.clone()).collect(),
        split_seed: plan.split_seed,
        augment_seed: plan.augment_seed,
        ratios: plan.ratios,
        train: names(&prepared.split.train),
        validation: names(&prepared.split.validation),
        test: names(&prepared.split.test),
        model_rate: plan.model_rate,
        windows: plan.windows.clone(),
        augment: plan.augment.clone(),
        normalization: Normalization::default(),
        train_samples: "train_samples.jsonl".into(),
        validation_samples: "validation_samples.jsonl".into(),
        train_sample_count: prepared.train.len(),
        validation_sample_count: prepared.validation.len(),
    };
    save_samples(&prepared.train, &a.out.join(&manifest.train_samples))?;
    save_samples(&prepared.validation, &a.out.join(&manifest.validation_samples))?;
    save_manifest(&manifest, &a.out.join("manifest.json"))?;
    println!(
        "split {}/{}/{} recordings, {} training samples, {} validation samples",
        manifest.train.len(),
        manifest.validation.len(),
        manifest.test.len(),
        prepared.train.len(),
        prepared.validation.len()
    );
    Ok(())
}

fn manifest_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let dir = manifest_dir(&a.manifest);
    let train_set = load_samples(&dir.join(&manifest.train_samples))?;
    let validation = load_samples(&dir.join(&manifest.validation_samples))?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        optimizer: match a.optimizer {
            Optim::Adam => OptimizerKind::Adam,
            Optim::Sgd => OptimizerKind::Sgd,
        },
        seed: a.seed,
        patience: a.patience,
        clip_norm: Some(a.clip_norm),
        lr_decay: a.lr_decay,
    };
    let model = BiLstmModel::new(ModelShape::new(a.layers, a.hidden), a.init_seed)?;
    let start = Instant::now();
    let quiet = a.quiet;
    let (best, rep) = train_with_progress(&model, &train_set, &validation, &cfg, &mut |s| {
        if !quiet {
            eprintln!(
                "epoch {:>4}  train {:>8.3}  val {:>8.3}  best {:>8.3}",
                s.epoch, s.train_crmse, s.val_crmse, s.best_val_crmse
            );
        }
    })?;
    let wall = start.elapsed().as_secs_f64();
    create_dir(&a.out)?;
    save_checkpoint(&best, manifest.model_rate, &a.out.join("checkpoint.json"))?;
    report::write_text(&report::train_report_csv(&rep), &a.out.join("train_report.csv"))?;
    write_json(
        &json!({
            "config": cfg,
            "parameter_count": best.parameter_count(),
            "epochs_run": rep.epochs_run(),
            "best_epoch": rep.best_epoch,
            "best_val_crmse_deg": rep.best_val_crmse,
            "stopped_early": rep.stopped_early,
        }),
        &a.out.join("train_summary.json"),
    )?;
    let latency_ms = inference_latency_ms(&best, 240.0 * manifest.model_rate);
    write_json(
        &json!({ "wall_time_s": wall, "inference_latency_ms_240_steps": latency_ms }),
        &a.out.join("train_timing.json"),
    )?;
    println!(
        "best epoch {} of {}, validation CRMSE {:.3} deg, {} parameters",
        rep.best_epoch,
        rep.epochs_run(),
        rep.best_val_crmse,
        best.parameter_count()
    );
    Ok(())
}

/// Median single-sequence forward time over a few runs.
pub fn inference_latency_ms(model: &BiLstmModel, steps: f64) -> f64 {
    let seq = vec![[10.0, -5.0, -8.0]; steps.max(1.0) as usize];
    let mut times: Vec<f64> = (0..5)
        .map(|_| {
            let t = Instant::now();
            let _ = model.predict_deg(&seq);
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    median(&times).unwrap_or_else(|_| times.pop().unwrap_or(0.0))
}

fn load_test_set(manifest: &DatasetManifest) -> Result<Vec<(String, ImuRecording)>> {
    manifest
        .test
        .iter()
        .map(|n| Ok((n.clone(), load_recording(&manifest.recording_path(n))?)))
        .collect()
}

fn load_eval_inputs(checkpoint: &Path, manifest_path: &Path) -> Result<(BiLstmModel, DatasetManifest, Vec<(String, ImuRecording)>)> {
    let manifest = load_manifest(manifest_path)?;
    let (model, model_rate) = load_checkpoint(checkpoint, None)?;
    if model_rate != manifest.model_rate {
        return Err(AppError::schema(
            checkpoint,
            format!("checkpoint model rate {model_rate} Hz differs from the manifest's {} Hz", manifest.model_rate),
        ));
    }
    let test = load_test_set(&manifest)?;
    Ok((model, manifest, test))
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (model, manifest, test) = load_eval_inputs(&a.checkpoint, &a.manifest)?;
    let cases: Vec<TestCase> = test.iter().map(|(id, r)| TestCase { id, recording: r }).collect();
    let ev = evaluate_batch(&cases, &mut BaselinePredictor, &mut ModelPredictor { model: &model }, &a.windows, manifest.model_rate)?;
    let (table, boxes) = comparison_table(&ev)?;
    create_dir(&a.out)?;
    report::write_text(&report::comparison_csv(&table), &a.out.join("comparison.csv"))?;
    report::write_text(&report::boxplot_csv(&boxes), &a.out.join("boxplot.csv"))?;
    report::write_text(&report::errors_csv(&ev), &a.out.join("errors.csv"))?;
    write_json(&table, &a.out.join("comparison.json"))?;
    print_table(&table);
    Ok(())
}

fn print_table(t: &gyrocompass_core::eval::ComparisonTable) {
    println!("{:>8} {:>14} {:>14} {:>12}", "window", "baseline_med", "model_med", "improve_%");
    for r in &t.rows {
        println!("{:>8} {:>14.3} {:>14.3} {:>12.1}", r.window_s, r.baseline_median, r.model_median, r.improvement_pct);
    }
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let (model, manifest, test) = load_eval_inputs(&a.checkpoint, &a.manifest)?;
    let cases: Vec<TestCase> = test.iter().map(|(id, r)| TestCase { id, recording: r }).collect();
    let shortest = test.iter().map(|(_, r)| r.duration_s()).fold(f64::INFINITY, f64::min);
    let report_windows: Vec<f64> = REPORT_WINDOWS.iter().copied().filter(|w| *w <= shortest).collect();
    let hi = shortest.min(240.0).floor();
    let dense = training_windows(5.0_f64.min(hi - 1.0), hi, a.grid_points)?;

    let mut base = BaselinePredictor;
    let mut learned = ModelPredictor { model: &model };
    let ev = evaluate_batch(&cases, &mut base, &mut learned, &report_windows, manifest.model_rate)?;
    let (table, boxes) = comparison_table(&ev)?;
    let dense_ev = evaluate_batch(&cases, &mut base, &mut learned, &dense, manifest.model_rate)?;
    let tta = time_to_accuracy(&dense_ev, &a.thresholds)?;
    let (dense_table, _) = comparison_table(&dense_ev)?;

    let trace_id = a.trace.clone().or_else(|| manifest.test.first().cloned()).unwrap_or_default();
    let trace_rec = test
        .iter()
        .find(|(id, _)| *id == trace_id)
        .map(|(_, r)| r)
        .ok_or_else(|| AppError::Usage(format!("{trace_id} is not a test recording")))?;
    let trace = single_run_trace(trace_rec, &mut learned, &report_windows, manifest.model_rate)?;

    create_dir(&a.out)?;
    report::write_text(&report::comparison_csv(&table), &a.out.join("comparison.csv"))?;
    report::write_text(&report::boxplot_csv(&boxes), &a.out.join("boxplot.csv"))?;
    report::write_text(&report::errors_csv(&ev), &a.out.join("errors.csv"))?;
    report::write_text(&report::comparison_csv(&dense_table), &a.out.join("dense_curve.csv"))?;
    report::write_text(&report::time_to_accuracy_csv(&tta), &a.out.join("time_to_accuracy.csv"))?;
    report::write_text(&report::trace_csv(&trace), &a.out.join("trace.csv"))?;
    write_json(
        &json!({ "comparison": table, "time_to_accuracy": tta, "trace_recording": trace_id }),
        &a.out.join("summary.json"),
    )?;
    print_table(&table);
    Ok(())
}
