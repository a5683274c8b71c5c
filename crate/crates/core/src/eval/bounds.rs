//! Closed-form upper bounds.

use super::EvalError;

pub fn phi(x: f64) -> f64 {
    x * (1.0 - x)
}

/// `((C + 1)^2 / C) / k * phi(mu)`.
pub fn analytic_upper_bound(c: f64, k: u32, mu: f64) -> Result<f64, EvalError> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(EvalError::Domain(format!("C = {c}")));
    }
    if k < 1 {
        return Err(EvalError::Domain("k = 0".into()));
    }
    check_unit(mu)?;
    Ok((c + 1.0).powi(2) / c / f64::from(k) * phi(mu))
}

/// `(4 / h) phi(mu) + 4 / k`.
pub fn separation_bound(k: u64, h: u32, mu: f64) -> Result<f64, EvalError> {
    if k < 2 || h < 1 {
        return Err(EvalError::Domain(format!("k = {k}, h = {h}")));
    }
    check_unit(mu)?;
    Ok(4.0 / f64::from(h) * phi(mu) + 4.0 / k as f64)
}

fn check_unit(mu: f64) -> Result<(), EvalError> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(EvalError::Domain(format!("mu = {mu}")));
    }
    Ok(())
}

/// `phi` of a two-part mixture minus its decomposition into the parts'
/// `phi` and the between-part term; zero for all inputs.
pub fn mixing_identity_residual(mu1: f64, mu2: f64, c: f64) -> f64 {
    let s = 1.0 + c;
    let mixed = phi((mu1 + c * mu2) / s);
    let parts = phi(mu1) / s + c * phi(mu2) / s + c * (mu1 - mu2).powi(2) / (s * s);
    mixed - parts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_bound_values() {
        assert_eq!(analytic_upper_bound(1.0, 1, 0.5).unwrap(), 1.0);
        assert!((analytic_upper_bound(2.0, 3, 0.5).unwrap() - 0.375).abs() < 1e-15);
        for c in [1.0, 2.0, 7.5] {
            for k in 1..5 {
                assert_eq!(analytic_upper_bound(c, k, 0.0).unwrap(), 0.0);
                assert_eq!(analytic_upper_bound(c, k, 1.0).unwrap(), 0.0);
            }
        }
        assert!(analytic_upper_bound(0.5, 1, 0.5).is_err());
        assert!(analytic_upper_bound(1.0, 0, 0.5).is_err());
        assert!(analytic_upper_bound(1.0, 1, 1.5).is_err());
    }

    #[test]
    fn separation_bound_values() {
        assert_eq!(separation_bound(2, 1, 0.5).unwrap(), 3.0);
        assert_eq!(separation_bound(8, 8, 0.5).unwrap(), 0.625);
        assert_eq!(separation_bound(5, 3, 0.0).unwrap(), 0.8);
        assert!(separation_bound(1, 1, 0.5).is_err());
        assert!(separation_bound(2, 0, 0.5).is_err());
    }

    #[test]
    fn mixing_identity_on_a_grid() {
        for i in 0..=10 {
            for j in 0..=10 {
                for c in [0.01, 0.5, 1.0, 3.0, 100.0] {
                    let r = mixing_identity_residual(f64::from(i) / 10.0, f64::from(j) / 10.0, c);
                    assert!(r.abs() < 1e-12);
                }
            }
        }
    }
}
