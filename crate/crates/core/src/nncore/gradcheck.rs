//! Central finite-difference gradient checking.

/// Denominator floor, so coordinates whose true gradient is ~0 are judged
/// on absolute error.
const FLOOR: f64 = 1e-6;

/// `|a − n| / max(|a| + |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(FLOOR)
}

/// Compares `analytic` with `(f(θ + eps·eᵢ) − f(θ − eps·eᵢ)) / 2eps` for
/// every coordinate and returns the largest [`relative_error`] (NaN if any
/// evaluation is NaN).
///
/// `f` receives a perturbed copy of `theta`.
pub fn gradient_check(theta: &[f64], analytic: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(theta.len(), analytic.len(), "gradient length differs from parameter length");
    assert!(eps > 0.0, "eps must be positive");
    let mut probe = theta.to_vec();
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        probe[i] = theta[i] + eps;
        let up = f(&probe);
        probe[i] = theta[i] - eps;
        let down = f(&probe);
        probe[i] = theta[i];
        let err = relative_error(analytic[i], (up - down) / (2.0 * eps));
        if err.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(err);
    }
    worst
}
