//! Stationary IMU simulation with a linearized error model.
//!
//! Gyro output is `(I + M_g) w + b_g[k] + w_g[k]`. The bias is the sum of a
//! fixed sensor bias, a per-recording turn-on draw, a first-order
//! Gauss-Markov process (bias instability) and an integrated white noise
//! (rate random walk). Accelerometers get white noise plus a turn-on bias.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frames::{
    add, earth_rate_body, gravity_body, mean, sub, EarthConstants, EulerAngles, GeoLocation, Vec3,
};

const DEG_HR_TO_RAD_S: f64 = PI / 180.0 / 3600.0;

/// deg/sqrt(hr) -> rad/sqrt(s)
pub fn arw_to_rad_per_sqrt_s(arw: f64) -> f64 {
    arw / 60.0 * PI / 180.0
}

/// deg/hr -> rad/s
pub fn deg_hr_to_rad_s(rate: f64) -> f64 {
    rate * DEG_HR_TO_RAD_S
}

/// deg/hr/sqrt(hr) -> rad/s/sqrt(s)
pub fn rrw_to_rad_per_s_sqrt_s(rrw: f64) -> f64 {
    rrw * DEG_HR_TO_RAD_S / 60.0
}

/// Stochastic and systematic error parameters of one IMU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Hz
    pub sample_rate: f64,
    /// Gyro angle random walk, deg/sqrt(hr).
    pub arw: f64,
    /// Steady-state std of the Gauss-Markov bias, deg/hr.
    pub bias_instability: f64,
    /// Rate random walk, deg/hr/sqrt(hr).
    pub rrw: f64,
    /// Gauss-Markov time constant, s.
    pub gm_correlation_time: f64,
    /// Half-width of the uniform per-axis turn-on bias, deg/hr.
    pub initial_bias_range: f64,
    /// Systematic gyro bias shared by every recording of this sensor, deg/hr.
    pub fixed_bias: Vec3,
    /// Gyro scale-factor and misalignment matrix `M_g`, row-major.
    pub scale_factor_error: [[f64; 3]; 3],
    /// mg/sqrt(Hz)
    pub accel_noise_density: f64,
    /// Half-width of the uniform per-axis accelerometer turn-on bias, mg.
    pub accel_bias_range: f64,
}

impl SensorSpec {
    /// A perfect sensor.
    pub fn noise_free(sample_rate: f64) -> Self {
        Self {
            sample_rate,
            arw: 0.0,
            bias_instability: 0.0,
            rrw: 0.0,
            gm_correlation_time: 250.0,
            initial_bias_range: 0.0,
            fixed_bias: [0.0; 3],
            scale_factor_error: [[0.0; 3]; 3],
            accel_noise_density: 0.0,
            accel_bias_range: 0.0,
        }
    }

    /// Datasheet-grade MEMS gyro: ARW 0.02 deg/sqrt(hr), BI 1 deg/hr.
    pub fn datasheet(sample_rate: f64) -> Self {
        Self {
            arw: 0.02,
            bias_instability: 1.0,
            rrw: 0.1,
            accel_noise_density: 0.02,
            accel_bias_range: 1.0,
            ..Self::noise_free(sample_rate)
        }
    }

    /// Values read off a real unit: ARW 0.03 deg/sqrt(hr), BI 0.2 deg/hr.
    pub fn empirical(sample_rate: f64) -> Self {
        Self { arw: 0.03, bias_instability: 0.2, ..Self::datasheet(sample_rate) }
    }

    /// Empirical noise plus a deg/hr-scale systematic bias, small
    /// misalignments and a noticeable rate random walk. Averaging saturates
    /// on this sensor.
    pub fn drifting(sample_rate: f64) -> Self {
        Self {
            rrw: 1.0,
            initial_bias_range: 0.05,
            fixed_bias: [0.7, -0.6, 0.3],
            scale_factor_error: [[0.004, -0.012, 0.002], [0.015, -0.003, 0.001], [0.0, 0.0, 0.0]],
            ..Self::empirical(sample_rate)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.sample_rate,
            self.arw,
            self.bias_instability,
            self.rrw,
            self.gm_correlation_time,
            self.initial_bias_range,
            self.accel_noise_density,
            self.accel_bias_range,
        ];
        let all_finite = scalars.iter().all(|v| v.is_finite())
            && self.fixed_bias.iter().all(|v| v.is_finite())
            && self.scale_factor_error.iter().flatten().all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("sensor spec values must be finite"));
        }
        if scalars.iter().any(|v| *v < 0.0) {
            return Err(invalid("sensor spec magnitudes must be non-negative"));
        }
        if self.sample_rate <= 0.0 || self.gm_correlation_time <= 0.0 {
            return Err(invalid("sample rate and correlation time must be positive"));
        }
        Ok(())
    }

    /// Per-sample white gyro noise std, rad/s.
    pub fn gyro_sample_std(&self) -> f64 {
        arw_to_rad_per_sqrt_s(self.arw) * self.sample_rate.sqrt()
    }
}

/// A labeled stationary recording. Gyro in rad/s, accel in m/s^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuRecording {
    pub gyro: Vec<Vec3>,
    pub accel: Vec<Vec3>,
    pub sample_rate: f64,
    pub truth_euler: EulerAngles,
    pub geo: GeoLocation,
    pub seed: u64,
    pub spec: SensorSpec,
}

impl ImuRecording {
    pub fn len(&self) -> usize {
        self.gyro.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gyro.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn truth_yaw_deg(&self) -> f64 {
        self.truth_euler.yaw_deg()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gyro.is_empty() {
            return Err(Error::Empty("recording has no samples"));
        }
        if self.gyro.len() != self.accel.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} gyro rows vs {} accel rows",
                self.gyro.len(),
                self.accel.len()
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(invalid("sample rate must be positive"));
        }
        if self.sample_rate != self.spec.sample_rate {
            return Err(invalid("recording sample rate differs from its sensor spec"));
        }
        self.geo.validate()
    }
}

/// Simulate `duration` seconds of stationary output at attitude `truth`.
pub fn simulate_stationary(
    spec: &SensorSpec,
    truth: EulerAngles,
    geo: GeoLocation,
    duration: f64,
    seed: u64,
) -> Result<ImuRecording> {
    spec.validate()?;
    geo.validate()?;
    if !truth.is_finite() {
        return Err(invalid("truth attitude must be finite"));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid("duration must be positive"));
    }
    let n = (duration * spec.sample_rate + 1e-9).floor() as usize;
    if n == 0 {
        return Err(Error::Empty("duration shorter than one sample period"));
    }

    let consts = EarthConstants::default();
    let omega = earth_rate_body(geo.latitude, truth, &consts)?;
    let m = &spec.scale_factor_error;
    let misprojection = [
        m[0][0] * omega[0] + m[0][1] * omega[1] + m[0][2] * omega[2],
        m[1][0] * omega[0] + m[1][1] * omega[1] + m[1][2] * omega[2],
        m[2][0] * omega[0] + m[2][1] * omega[1] + m[2][2] * omega[2],
    ];
    let gyro_signal = add(omega, misprojection);
    let accel_signal = gravity_body(truth, &consts);

    let dt = 1.0 / spec.sample_rate;
    let white = spec.gyro_sample_std();
    let gm_sigma = deg_hr_to_rad_s(spec.bias_instability);
    let gm_decay = (-dt / spec.gm_correlation_time).exp();
    let gm_drive = gm_sigma * (1.0 - gm_decay * gm_decay).sqrt();
    let rrw_step = rrw_to_rad_per_s_sqrt_s(spec.rrw) * dt.sqrt();
    let accel_white = spec.accel_noise_density * 1e-3 * consts.gravity * spec.sample_rate.sqrt();
    let accel_half_width = spec.accel_bias_range * 1e-3 * consts.gravity;
    let turn_on_half_width = deg_hr_to_rad_s(spec.initial_bias_range);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng, half: f64| -> f64 {
        let u: f64 = rng.random();
        (2.0 * u - 1.0) * half
    };
    let mut gyro_bias = [0.0; 3];
    let mut accel_bias = [0.0; 3];
    for k in 0..3 {
        gyro_bias[k] = deg_hr_to_rad_s(spec.fixed_bias[k]) + uniform(&mut rng, turn_on_half_width);
        accel_bias[k] = uniform(&mut rng, accel_half_width);
    }
    let mut gm = [0.0; 3];
    for g in gm.iter_mut() {
        *g = gm_sigma * normal(&mut rng);
    }
    let mut walk = [0.0; 3];

    let mut gyro = Vec::with_capacity(n);
    let mut accel = Vec::with_capacity(n);
    for _ in 0..n {
        let mut g = [0.0; 3];
        let mut a = [0.0; 3];
        for k in 0..3 {
            g[k] = gyro_signal[k] + (gyro_bias[k] + gm[k] + walk[k]) + white * normal(&mut rng);
            a[k] = accel_signal[k] + accel_bias[k] + accel_white * normal(&mut rng);
        }
        gyro.push(g);
        accel.push(a);
        for k in 0..3 {
            gm[k] = gm_decay * gm[k] + gm_drive * normal(&mut rng);
            walk[k] += rrw_step * normal(&mut rng);
        }
    }

    Ok(ImuRecording {
        gyro,
        accel,
        sample_rate: spec.sample_rate,
        truth_euler: truth,
        geo,
        seed,
        spec: spec.clone(),
    })
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Mean measurement minus the true stationary signal: `(delta_f, delta_omega)`.
pub fn sample_mean_residual(rec: &ImuRecording) -> Result<(Vec3, Vec3)> {
    let consts = EarthConstants::default();
    let mean_f = mean(&rec.accel).ok_or(Error::Empty("recording has no samples"))?;
    let mean_w = mean(&rec.gyro).ok_or(Error::Empty("recording has no samples"))?;
    let true_f = gravity_body(rec.truth_euler, &consts);
    let true_w = earth_rate_body(rec.geo.latitude, rec.truth_euler, &consts)?;
    Ok((sub(mean_f, true_f), sub(mean_w, true_w)))
}
