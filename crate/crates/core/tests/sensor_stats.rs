use gyrocompass_core::frames::*;
use gyrocompass_core::sensor::*;

fn geo() -> GeoLocation {
    GeoLocation::from_degrees(32.76, 35.02).unwrap()
}

fn residual_axis(rec: &ImuRecording, axis: usize) -> Vec<f64> {
    let c = EarthConstants::default();
    let w = earth_rate_body(rec.geo.latitude, rec.truth_euler, &c).unwrap();
    rec.gyro.iter().map(|g| g[axis] - w[axis]).collect()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64)
}

#[test]
fn white_noise_level_follows_arw_and_rate() {
    for rate in [10.0, 100.0] {
        let mut spec = SensorSpec::noise_free(rate);
        spec.arw = 0.3;
        let rec = simulate_stationary(&spec, EulerAngles::level(0.0), geo(), 2000.0, 4).unwrap();
        let want = arw_to_rad_per_sqrt_s(0.3) * rate.sqrt();
        assert!((spec.gyro_sample_std() - want).abs() < 1e-18);
        for axis in 0..3 {
            let (m, v) = mean_var(&residual_axis(&rec, axis));
            assert!((v.sqrt() / want - 1.0).abs() < 0.02, "rate {rate} axis {axis}");
            assert!(m.abs() < 4.0 * want / (rec.len() as f64).sqrt());
        }
    }
}

#[test]
fn gauss_markov_bias_has_its_steady_state_spread() {
    let mut spec = SensorSpec::noise_free(1.0);
    spec.bias_instability = 2.0;
    spec.gm_correlation_time = 5.0;
    let rec = simulate_stationary(&spec, EulerAngles::level(0.0), geo(), 100_000.0, 8).unwrap();
    let (_, v) = mean_var(&residual_axis(&rec, 1));
    assert!((v.sqrt() / deg_hr_to_rad_s(2.0) - 1.0).abs() < 0.05);
}

#[test]
fn turn_on_and_fixed_biases_stay_in_range() {
    let mut spec = SensorSpec::noise_free(10.0);
    spec.initial_bias_range = 0.5;
    spec.fixed_bias = [1.0, -2.0, 0.25];
    for seed in 0..20 {
        let rec = simulate_stationary(&spec, EulerAngles::level(2.0), geo(), 1.0, seed).unwrap();
        let (_, dw) = sample_mean_residual(&rec).unwrap();
        for k in 0..3 {
            let off = dw[k] - deg_hr_to_rad_s(spec.fixed_bias[k]);
            assert!(off.abs() <= deg_hr_to_rad_s(0.5) + 1e-18);
        }
    }
}

#[test]
fn misalignment_projects_the_earth_rate() {
    let mut spec = SensorSpec::noise_free(10.0);
    spec.scale_factor_error = [[0.01, 0.0, 0.0], [0.02, 0.0, 0.0], [0.0, 0.0, 0.0]];
    let rec = simulate_stationary(&spec, EulerAngles::level(0.0), geo(), 1.0, 0).unwrap();
    let (_, dw) = sample_mean_residual(&rec).unwrap();
    let north = EARTH_RATE * 32.76f64.to_radians().cos();
    assert!((dw[0] - 0.01 * north).abs() < 1e-18);
    assert!((dw[1] - 0.02 * north).abs() < 1e-18);
}

#[test]
fn accelerometer_white_noise_density() {
    let mut spec = SensorSpec::noise_free(100.0);
    spec.accel_noise_density = 0.05;
    let rec = simulate_stationary(&spec, EulerAngles::level(0.0), geo(), 200.0, 2).unwrap();
    let c = EarthConstants::default();
    let want = 0.05e-3 * c.gravity * 10.0;
    let xs: Vec<f64> = rec.accel.iter().map(|a| a[0]).collect();
    let (_, v) = mean_var(&xs);
    assert!((v.sqrt() / want - 1.0).abs() < 0.03);
}
