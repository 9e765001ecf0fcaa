use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// `a - b` folded into [-180, 180] degrees.
///
/// Exactly antisymmetric, and exactly periodic whenever the shifted inputs
/// are themselves exact.
pub fn cyclic_diff_deg(a: f64, b: f64) -> f64 {
    let r = (a - b) % 360.0;
    if r > 180.0 {
        r - 360.0
    } else if r < -180.0 {
        r + 360.0
    } else {
        r
    }
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Empty("empty batch"));
    }
    if y.len() != y_hat.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{} labels vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.iter().chain(y_hat).any(|v| !v.is_finite()) {
        return Err(invalid("loss inputs must be finite"));
    }
    Ok(())
}

/// Cyclic mean squared error in deg^2.
pub fn cmse_loss(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    let sum: f64 = y.iter().zip(y_hat).map(|(a, b)| cyclic_diff_deg(*a, *b).powi(2)).sum();
    Ok(sum / y.len() as f64)
}

/// d(cmse)/d(y_hat) per element: `-2 e / B` with `e` the wrapped error in degrees.
pub fn cmse_gradient(y: &[f64], y_hat: &[f64]) -> Result<Vec<f64>> {
    check(y, y_hat)?;
    let b = y.len() as f64;
    Ok(y.iter().zip(y_hat).map(|(a, p)| -2.0 * cyclic_diff_deg(*a, *p) / b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(cmse_loss(&[10.0, 250.0], &[10.0, 250.0]).unwrap(), 0.0);
        assert_eq!(cmse_loss(&[359.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(cmse_loss(&[0.0], &[180.0]).unwrap(), 32400.0);
        assert!(cmse_loss(&[], &[]).is_err());
        assert!(cmse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn gradient_sign_at_wrap() {
        // y = 359, y_hat = 1: moving y_hat down shortens the 2 deg gap
        let g = cmse_gradient(&[359.0], &[1.0]).unwrap();
        assert_eq!(g[0], 4.0);
        assert_eq!(cmse_gradient(&[5.0], &[5.0]).unwrap()[0], 0.0);
    }
}
