//! Coordinate frames, Euler angles and direction cosine matrices.
//!
//! Navigation frame is North-East-Down, body frame is forward-right-down.
//! Euler angles follow the z-y-x (yaw, pitch, roll) sequence. Everything in
//! here works in radians and SI units; degrees only appear in [`wrap_deg`] and
//! the explicit `*_deg` helpers.

use core::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Vec3 = [f64; 3];

/// Earth rotation rate, rad/s (15.041 deg/hr).
pub const EARTH_RATE: f64 = 7.292_115e-5;
/// Standard gravity, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.806_65;
/// Multiply a rate in rad/s by this to get deg/hr.
pub const RAD_S_TO_DEG_HR: f64 = 180.0 / PI * 3600.0;
/// Earth rotation rate in deg/hr.
pub const EARTH_RATE_DEG_HR: f64 = EARTH_RATE * RAD_S_TO_DEG_HR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub const fn level(yaw: f64) -> Self {
        Self::new(0.0, 0.0, yaw)
    }

    pub fn from_degrees(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
    }

    /// `[roll, pitch, yaw]` in degrees.
    pub fn to_degrees(&self) -> [f64; 3] {
        [self.roll.to_degrees(), self.pitch.to_degrees(), self.yaw.to_degrees()]
    }

    pub fn yaw_deg(&self) -> f64 {
        wrap_deg(self.yaw.to_degrees())
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }

    /// Roll into [-pi, pi) and yaw into [0, 2pi). Pitch is left untouched.
    pub fn normalized(&self) -> Self {
        Self::new(wrap_signed_rad(self.roll), self.pitch, wrap_rad(self.yaw))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoLocation {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoLocation {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        let geo = Self { latitude, longitude };
        geo.validate()?;
        Ok(geo)
    }

    pub fn from_degrees(latitude: f64, longitude: f64) -> Result<Self> {
        Self::new(latitude.to_radians(), longitude.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latitude.is_finite() && self.latitude.abs() <= FRAC_PI_2) {
            return Err(invalid("latitude must lie in [-90, 90] deg"));
        }
        if !(self.longitude.is_finite() && (-PI..PI).contains(&self.longitude)) {
            return Err(invalid("longitude must lie in [-180, 180) deg"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthConstants {
    /// Rotation rate, rad/s.
    pub earth_rate: f64,
    /// Gravity magnitude, m/s^2.
    pub gravity: f64,
}

impl Default for EarthConstants {
    fn default() -> Self {
        Self { earth_rate: EARTH_RATE, gravity: STANDARD_GRAVITY }
    }
}

impl EarthConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.earth_rate > 0.0 && self.gravity > 0.0)
            || !self.earth_rate.is_finite()
            || !self.gravity.is_finite()
        {
            return Err(invalid("earth constants must be finite and strictly positive"));
        }
        Ok(())
    }
}

/// Rotation matrix, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dcm(pub [[f64; 3]; 3]);

impl Dcm {
    pub const IDENTITY: Dcm = Dcm([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Checked constructor: rows must form a proper rotation within 1e-9.
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self> {
        let dcm = Dcm(rows);
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("direction cosines must be finite"));
        }
        if dcm.orthonormality_error() > 1e-9 || (dcm.determinant() - 1.0).abs() > 1e-9 {
            return Err(invalid("matrix is not a proper rotation"));
        }
        Ok(dcm)
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn transpose(&self) -> Dcm {
        let m = &self.0;
        Dcm([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
    }

    pub fn compose(&self, rhs: &Dcm) -> Dcm {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Dcm(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `T^T T - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.transpose().compose(self);
        let mut worst = 0.0_f64;
        for (i, row) in p.0.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

/// Body-to-NED rotation `T_b^n` for z-y-x Euler angles.
pub fn dcm_from_euler(e: EulerAngles) -> Result<Dcm> {
    if !e.is_finite() {
        return Err(invalid("Euler angles must be finite"));
    }
    let (sr, cr) = e.roll.sin_cos();
    let (sp, cp) = e.pitch.sin_cos();
    let (sy, cy) = e.yaw.sin_cos();
    Ok(Dcm([
        [cp * cy, sr * sp * cy - cr * sy, cr * sp * cy + sr * sy],
        [cp * sy, sr * sp * sy + cr * cy, cr * sp * sy - sr * cy],
        [-sp, sr * cp, cr * cp],
    ]))
}

/// Inverse of [`dcm_from_euler`], with roll in [-pi, pi) and yaw in [0, 2pi).
pub fn euler_from_dcm(t: &Dcm) -> Result<EulerAngles> {
    let m = &t.0;
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("direction cosines must be finite"));
    }
    if m[2][0].abs() > 1.0 - 1e-9 {
        return Err(Error::DegenerateAttitude(m[2][0].abs()));
    }
    let pitch = (-m[2][0]).asin();
    let roll = m[2][1].atan2(m[2][2]);
    let yaw = m[1][0].atan2(m[0][0]);
    Ok(EulerAngles::new(roll, pitch, yaw).normalized())
}

/// Specific force sensed by a stationary accelerometer triad, m/s^2.
pub fn gravity_body(e: EulerAngles, c: &EarthConstants) -> Vec3 {
    let (sr, cr) = e.roll.sin_cos();
    let (sp, cp) = e.pitch.sin_cos();
    [c.gravity * sp, -c.gravity * sr * cp, -c.gravity * cr * cp]
}

/// ECEF-to-NED rotation `T_e^n`.
pub fn dcm_ecef_to_ned(geo: &GeoLocation) -> Dcm {
    let (sl, cl) = geo.latitude.sin_cos();
    let (so, co) = geo.longitude.sin_cos();
    Dcm([[-sl * co, -sl * so, cl], [-so, co, 0.0], [-cl * co, -cl * so, -sl]])
}

/// Earth rotation resolved in NED. There is never an East component.
pub fn earth_rate_ned(latitude: f64, c: &EarthConstants) -> Vec3 {
    let (s, co) = latitude.sin_cos();
    [c.earth_rate * co, 0.0, -c.earth_rate * s]
}

/// Earth rotation as seen by a stationary gyro triad: `T_n^b T_e^n w_ie^e`.
pub fn earth_rate_body(latitude: f64, e: EulerAngles, c: &EarthConstants) -> Result<Vec3> {
    Ok(dcm_from_euler(e)?.transpose().apply(earth_rate_ned(latitude, c)))
}

/// Wrap degrees into [0, 360).
pub fn wrap_deg(angle: f64) -> f64 {
    wrap_period(angle, 360.0)
}

/// Wrap degrees into [-180, 180).
pub fn wrap_signed_deg(angle: f64) -> f64 {
    let w = wrap_deg(angle);
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub fn wrap_rad(angle: f64) -> f64 {
    wrap_period(angle, TAU)
}

pub fn wrap_signed_rad(angle: f64) -> f64 {
    let w = wrap_rad(angle);
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

fn wrap_period(angle: f64, period: f64) -> f64 {
    let mut r = angle % period;
    if r < 0.0 {
        r += period;
    }
    // tiny negatives round up to exactly one period
    if r >= period {
        r -= period;
    }
    r
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

/// Arithmetic mean of a slice of vectors. Running update, so a constant
/// input reproduces the constant bit for bit.
pub fn mean(rows: &[Vec3]) -> Option<Vec3> {
    if rows.is_empty() {
        return None;
    }
    let mut m = rows[0];
    for (k, r) in rows.iter().enumerate().skip(1) {
        let w = 1.0 / (k + 1) as f64;
        for j in 0..3 {
            m[j] += (r[j] - m[j]) * w;
        }
    }
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_from_zero_angles() {
        assert_eq!(dcm_from_euler(EulerAngles::new(0.0, 0.0, 0.0)).unwrap(), Dcm::IDENTITY);
    }

    #[test]
    fn quarter_turn_yaw_permutes_axes() {
        let t = dcm_from_euler(EulerAngles::level(FRAC_PI_2)).unwrap();
        assert!(t.0[0][0].abs() < 1e-16);
        assert!((t.0[1][0] - 1.0).abs() < 1e-16);
        assert!((t.0[0][1] + 1.0).abs() < 1e-16);
    }

    #[test]
    fn non_finite_angles_rejected() {
        assert!(matches!(
            dcm_from_euler(EulerAngles::new(f64::NAN, 0.0, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn euler_round_trip() {
        let e = EulerAngles::new(0.1, 0.2, 0.3);
        let back = euler_from_dcm(&dcm_from_euler(e).unwrap()).unwrap();
        assert!((back.roll - 0.1).abs() < 1e-12);
        assert!((back.pitch - 0.2).abs() < 1e-12);
        assert!((back.yaw - 0.3).abs() < 1e-12);
        assert_eq!(euler_from_dcm(&Dcm::IDENTITY).unwrap(), EulerAngles::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn gimbal_lock_is_degenerate() {
        // pitch = +90 deg: T31 = -1
        let t = Dcm([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert!(matches!(euler_from_dcm(&t), Err(Error::DegenerateAttitude(_))));
    }

    #[test]
    fn checked_constructor_rejects_shear() {
        assert!(Dcm::new([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
        assert!(Dcm::new([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
        assert!(Dcm::new(Dcm::IDENTITY.0).is_ok());
    }

    #[test]
    fn gravity_special_cases() {
        let c = EarthConstants::default();
        assert_eq!(gravity_body(EulerAngles::level(2.0), &c), [0.0, -0.0, -STANDARD_GRAVITY]);
        let up = gravity_body(EulerAngles::new(0.0, FRAC_PI_2, 0.0), &c);
        assert!((up[0] - STANDARD_GRAVITY).abs() < 1e-15);
        assert!(up[1].abs() < 1e-15 && up[2].abs() < 1e-15);
    }

    #[test]
    fn gravity_matches_matrix_route() {
        let c = EarthConstants::default();
        let e = EulerAngles::new(0.3, -0.2, 1.1);
        let via_matrix =
            scale(dcm_from_euler(e).unwrap().transpose().apply([0.0, 0.0, c.gravity]), -1.0);
        let direct = gravity_body(e, &c);
        for k in 0..3 {
            assert!((via_matrix[k] - direct[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn earth_rate_special_latitudes() {
        let c = EarthConstants::default();
        assert_eq!(earth_rate_ned(0.0, &c), [EARTH_RATE, 0.0, -0.0]);
        let pole = earth_rate_ned(FRAC_PI_2, &c);
        assert!(pole[0].abs() < 1e-20);
        assert_eq!(pole[2], -EARTH_RATE);
        // 32.76 deg N: planar magnitude ~0.0035 deg/s
        let ned = earth_rate_ned(32.76_f64.to_radians(), &c);
        let planar = ned[0].hypot(ned[1]).to_degrees();
        assert!((planar - 0.0035).abs() < 0.00002, "{planar}");
    }

    #[test]
    fn ecef_chain_matches_ned_projection() {
        let c = EarthConstants::default();
        for (lat, lon) in [(0.0, 0.0), (32.76, 35.0), (-60.0, -120.0), (89.0, 179.0)] {
            let geo = GeoLocation::from_degrees(lat, lon).unwrap();
            let chain = dcm_ecef_to_ned(&geo).apply([0.0, 0.0, c.earth_rate]);
            let direct = earth_rate_ned(geo.latitude, &c);
            for k in 0..3 {
                assert!((chain[k] - direct[k]).abs() < 1e-19);
            }
        }
    }

    #[test]
    fn earth_rate_body_cases() {
        let c = EarthConstants::default();
        let north = earth_rate_body(0.0, EulerAngles::level(0.0), &c).unwrap();
        assert_eq!(north, [EARTH_RATE, 0.0, 0.0]);
        let east = earth_rate_body(0.0, EulerAngles::level(FRAC_PI_2), &c).unwrap();
        assert!(east[0].abs() < 1e-20);
        assert!((east[1] + EARTH_RATE).abs() < 1e-20);
    }

    #[test]
    fn wrap_deg_cases() {
        assert_eq!(wrap_deg(360.0), 0.0);
        assert_eq!(wrap_deg(-10.0), 350.0);
        assert_eq!(wrap_deg(725.0), 5.0);
        assert_eq!(wrap_deg(-1e-18), 0.0);
        assert_eq!(wrap_signed_deg(180.0), -180.0);
        assert_eq!(wrap_signed_deg(-181.0), 179.0);
    }

    #[test]
    fn geolocation_bounds() {
        assert!(GeoLocation::from_degrees(91.0, 0.0).is_err());
        assert!(GeoLocation::from_degrees(0.0, 180.0).is_err());
        assert!(GeoLocation::from_degrees(-90.0, -180.0).is_ok());
    }
}
