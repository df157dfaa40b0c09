//! Behaviour of the Kähler potential at infinity: the flat chart, the decay
//! of `H − ¼‖z‖²`, and the Ricci-flat criterion.
//!
//! The chart is normalised at infinity, so every correction factor tends to 1
//! and the decaying part of the potential is obtained from tail integrals and
//! `expm1` without subtracting large quantities.

use std::fmt::Write as _;

use serde::Serialize;

use crate::ansatz::AnsatzData;
use crate::quad::{integrate, integrate_to_infinity, QuadOptions};
use crate::report::VerificationReport;
use crate::verify::linear_fit;
use crate::weights::GroupedWeights;
use crate::{rat_string, to_f64, Error, Result};

/// Image of a point under the chart at infinity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatImage {
    /// `T_k = ∫_{ξ_ℓ}^∞ (at+b)/((t−α_k)F_ℓ(t)) dt`.
    pub exponents: Vec<f64>,
    /// `x_k∘Φ = e^{T_k} x_k`.
    pub moments: Vec<f64>,
    /// `‖z‖² = 2 Σ_k (c/a_k)(x_k∘Φ)`.
    pub norm_sq: f64,
}

fn tail_options() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 4000 }
}

/// Moments of the flat model at `ξ`; for flat data this is the identity.
pub fn flat_image_moments(data: &AnsatzData, xi: &[f64]) -> Result<FlatImage> {
    data.check_xi(xi)?;
    let (a, b) = data.deformation_f64();
    let x = data.xi_to_x(xi);
    let top = xi[data.ell - 1];
    let exponents = data
        .alpha_f64()
        .iter()
        .map(|&ak| {
            if a == 0.0 && b == 0.0 {
                return Ok(0.0);
            }
            let f = |t: f64| (a * t + b) / ((t - ak) * data.f_ell_f64(t));
            Ok(integrate_to_infinity(f, top, tail_options())?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let moments: Vec<f64> = x.iter().zip(&exponents).map(|(xk, t)| xk * t.exp()).collect();
    let norm_sq = 2.0
        * data
            .alpha_f64()
            .iter()
            .zip(&moments)
            .map(|(ak, mk)| -ak * mk)
            .sum::<f64>();
    Ok(FlatImage { exponents, moments, norm_sq })
}

/// One sample along a ray to infinity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayPoint {
    pub xi_ell: f64,
    pub norm_sq: f64,
    /// Kähler potential with base point `λ`.
    pub potential: f64,
    /// `H − ¼‖z‖²`.
    pub deviation: f64,
    /// The deviation with its limiting constant removed (`m ≥ 3`); equal to
    /// the deviation when `m = 2`.
    pub decaying: f64,
}

/// Evaluates the potential and its deviation from the flat model at `ξ`.
pub fn ray_point(data: &AnsatzData, xi: &[f64], lambda: f64) -> Result<RayPoint> {
    let img = flat_image_moments(data, xi)?;
    let (a, b) = data.deformation_f64();
    let x = data.xi_to_x(xi);
    let top = xi[data.ell - 1];
    let kernel = |t: f64| (a * t + b) / data.f_ell_f64(t);
    // −½ Σ_k (c/a_k) x_k (e^{T_k} − 1)
    let chart_part: f64 = -0.5
        * data
            .alpha_f64()
            .iter()
            .zip(&x)
            .zip(&img.exponents)
            .map(|((ak, xk), t)| -ak * xk * t.exp_m1())
            .sum::<f64>();
    let flat_data = a == 0.0 && b == 0.0;
    let (deviation, decaying) = if flat_data {
        (0.0, 0.0)
    } else if data.m >= 3 {
        let tail = integrate_to_infinity(kernel, top, tail_options())?.value;
        let total = integrate_to_infinity(kernel, lambda, tail_options())?.value;
        let decaying = chart_part + 0.5 * tail;
        (decaying - 0.5 * total, decaying)
    } else {
        let v = chart_part - 0.5 * integrate(kernel, lambda, top, tail_options())?.value;
        (v, v)
    };
    let potential = if flat_data {
        data.flat_kahler_potential(xi)
    } else {
        data.kahler_potential(xi, lambda, tail_options())?
    };
    Ok(RayPoint { xi_ell: top, norm_sq: img.norm_sq, potential, deviation, decaying })
}

/// Sampling of a ray `ξ_ℓ → ∞` with the other coordinates fixed at interval midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct RayConfig {
    pub points: usize,
    /// Range of `ξ_ℓ` in units of `max|α_j|`.
    pub lo: f64,
    pub hi: f64,
    pub lambda: f64,
}

impl Default for RayConfig {
    fn default() -> Self {
        RayConfig { points: 20, lo: 1e2, hi: 1e6, lambda: 1.0 }
    }
}

/// Points of the ray, `ξ_ℓ` logarithmically spaced.
pub fn ray(data: &AnsatzData, cfg: &RayConfig) -> Result<Vec<RayPoint>> {
    if cfg.points < 4 || !(cfg.lo > 0.0 && cfg.hi > cfg.lo) {
        return Err(Error::Config(format!("bad ray: {} points on [{}, {}]", cfg.points, cfg.lo, cfg.hi)));
    }
    let scale = data.alpha_f64().iter().fold(1.0f64, |s, a| s.max(a.abs()));
    let mut xi: Vec<f64> = (0..data.ell - 1)
        .map(|j| match data.interval(j) {
            (lo, Some(hi)) => 0.5 * (lo + hi),
            (lo, None) => lo + 1.0,
        })
        .collect();
    xi.push(0.0);
    let (l0, l1) = (cfg.lo.ln(), cfg.hi.ln());
    (0..cfg.points)
        .map(|i| {
            let u = i as f64 / (cfg.points - 1) as f64;
            *xi.last_mut().expect("ℓ ≥ 1") = scale * (l0 + u * (l1 - l0)).exp();
            ray_point(data, &xi, cfg.lambda)
        })
        .collect()
}

/// CSV dump `xi_ell,norm_sq,H,H_minus_quarter_norm_sq`.
pub fn ray_csv(points: &[RayPoint]) -> String {
    let mut out = String::from("xi_ell,norm_sq,H,H_minus_quarter_norm_sq\n");
    for p in points {
        let _ = writeln!(out, "{:e},{:e},{:e},{:e}", p.xi_ell, p.norm_sq, p.potential, p.deviation);
    }
    out
}

/// Fitted and predicted expansion `H = ¼‖z‖² + C + A‖z‖^{4−2m} + …`
/// (or `+ K log‖z‖²` when `m = 2`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AleExpansion {
    pub m: usize,
    /// `a = 2b_0 − p′(0)`, exact.
    pub linear_coefficient: String,
    /// `2^{m−4}a/((m−2)(m−1))`, or `−a/4` for the logarithm when `m = 2`.
    pub closed_coefficient: f64,
    /// Decay exponent from the log-log fit (`m ≥ 3` only).
    pub fitted_exponent: Option<f64>,
    pub expected_exponent: Option<f64>,
    /// Coefficient of `‖z‖^{4−2m}` (or of `log‖z‖²`) with the exponent held fixed.
    pub fitted_coefficient: f64,
    /// RMS residual of the coefficient fit, relative to the data.
    pub fit_residual: f64,
    /// Size `A` would have with linear coefficient `p′(0)`; the Ricci-flat
    /// threshold is `1e−3` of this.
    pub noise_scale: f64,
    pub ricci_flat_exact: bool,
    pub ricci_flat_fit: bool,
}

pub const RICCI_FLAT_THRESHOLD: f64 = 1e-3;

impl AleExpansion {
    pub fn coefficient_relative_error(&self) -> f64 {
        (self.fitted_coefficient - self.closed_coefficient).abs() / self.closed_coefficient.abs().max(1e-9)
    }

    pub fn exponent_relative_error(&self) -> Option<f64> {
        Some((self.fitted_exponent? - self.expected_exponent?).abs() / self.expected_exponent?.abs())
    }
}

/// Linear least squares with the given basis columns (via SVD).
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = rows.len();
    let k = rows[0].len();
    let a = nalgebra::DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(y);
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numeric(format!("least squares failed: {e}")))?;
    let resid = (&a * &sol - &b).norm() / (n as f64).sqrt();
    Ok((sol.iter().cloned().collect(), resid))
}

/// `2^{m−4}·v/((m−2)(m−1))` for `m ≥ 3`, `−v/4` for `m = 2`.
fn closed_form(m: usize, v: f64) -> f64 {
    if m == 2 {
        -v / 4.0
    } else {
        2f64.powi(m as i32 - 4) * v / (((m - 2) * (m - 1)) as f64)
    }
}

/// Fits the decay of `H − ¼‖z‖²` along a ray.
pub fn decay_fit(data: &AnsatzData, cfg: &RayConfig) -> Result<AleExpansion> {
    let pts = ray(data, cfg)?;
    let m = data.m;
    let exact_a = if data.flat { num_rational::BigRational::from_integer(0.into()) } else { data.lin_a.clone() };
    let a = to_f64(&exact_a);
    let dp0 = to_f64(&data.p.derivative().eval(&num_rational::BigRational::from_integer(0.into())));
    let z2: Vec<f64> = pts.iter().map(|p| p.norm_sq).collect();
    let (fitted_exponent, expected_exponent, fitted_coefficient, fit_residual) = if m == 2 {
        let rows: Vec<Vec<f64>> = z2.iter().map(|&s| vec![1.0, s.ln(), 1.0 / s, 1.0 / (s * s)]).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.decaying).collect();
        let (coef, resid) = least_squares(&rows, &y)?;
        let scale = y.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
        (None, None, coef[1], resid / scale)
    } else {
        let p = 4.0 - 2.0 * m as f64;
        // Coefficient with the exponent fixed: D/‖z‖^p = A + B‖z‖^{−2} + C‖z‖^{−4}.
        let rows: Vec<Vec<f64>> = z2.iter().map(|&s| vec![1.0, 1.0 / s, 1.0 / (s * s)]).collect();
        let y: Vec<f64> = pts.iter().zip(&z2).map(|(pt, &s)| pt.decaying / s.powf(0.5 * p)).collect();
        let (coef, resid) = least_squares(&rows, &y)?;
        let scale = y.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
        // Exponent: log|D| = log|A| + q log‖z‖ + k‖z‖^{−2}.
        let exponent = if pts.iter().all(|pt| pt.decaying != 0.0) {
            let rows: Vec<Vec<f64>> = z2.iter().map(|&s| vec![1.0, 0.5 * s.ln(), 1.0 / s]).collect();
            let y: Vec<f64> = pts.iter().map(|pt| pt.decaying.abs().ln()).collect();
            Some(least_squares(&rows, &y)?.0[1])
        } else {
            None
        };
        (exponent, Some(p), coef[0], resid / scale)
    };
    let noise_scale = closed_form(m, dp0).abs();
    Ok(AleExpansion {
        m,
        linear_coefficient: rat_string(&exact_a),
        closed_coefficient: closed_form(m, a),
        fitted_exponent,
        expected_exponent,
        fitted_coefficient,
        fit_residual,
        noise_scale,
        ricci_flat_exact: ricci_flat_test(&data.weights).ricci_flat,
        ricci_flat_fit: fitted_coefficient.abs() <= RICCI_FLAT_THRESHOLD * noise_scale,
    })
}

/// Exact Ricci-flat test and the quantities it compares.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RicciFlatCertificate {
    pub ricci_flat: bool,
    pub a0: i64,
    /// `Σ_j (n_j + 1) a_j`.
    pub weighted_sum: i64,
    pub two_b0: String,
    pub p_prime_zero: String,
    /// Whether `2b_0 = p′(0)` agrees with `a_0 = Σ(n_j+1)a_j`.
    pub consistent: bool,
}

pub fn ricci_flat_test(weights: &GroupedWeights) -> RicciFlatCertificate {
    let weighted_sum: i64 = weights.raw().iter().sum();
    let ricci_flat = weights.a0 == weighted_sum;
    let (two_b0, dp0, consistent) = match crate::ansatz::build_ansatz(weights, false) {
        Ok(d) => {
            let two_b0 = &d.b0 * crate::int(2);
            let dp0 = d.p.derivative().eval(&num_rational::BigRational::from_integer(0.into()));
            let ok = (two_b0 == dp0) == ricci_flat;
            (rat_string(&two_b0), rat_string(&dp0), ok)
        }
        Err(_) => (String::new(), String::new(), false),
    };
    RicciFlatCertificate { ricci_flat, a0: weights.a0, weighted_sum, two_b0, p_prime_zero: dp0, consistent }
}

/// `ξ_ℓ − ½‖z‖²` stays bounded along the ray: the fitted slope against `ξ_ℓ`
/// must be below `tol`.
pub fn xi_growth_check(data: &AnsatzData, points: &[RayPoint], tol: f64) -> VerificationReport {
    let xs: Vec<f64> = points.iter().map(|p| p.xi_ell).collect();
    let ds: Vec<f64> = points.iter().map(|p| p.xi_ell - 0.5 * p.norm_sq).collect();
    let slope = linear_fit(&xs, &ds).1;
    let max_abs = ds.iter().fold(0.0f64, |s, d| s.max(d.abs()));
    VerificationReport::new("xi_growth", slope.abs(), tol, points.len())
        .with_detail("max_abs_difference", max_abs)
        .with_detail("sigma1_alpha", data.sigma1_alpha())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_chart_is_identity() {
        let d = AnsatzData::new(5, &[2, 3], true).unwrap();
        let img = flat_image_moments(&d, &[-12.0, 5.0]).unwrap();
        assert_eq!(img.moments, d.xi_to_x(&[-12.0, 5.0]));
        // 2(σ_1 − σ_1^α) = 2(−7 + 25)
        assert!((img.norm_sq - 36.0).abs() < 1e-12);
    }

    #[test]
    fn correction_factors_positive_and_finite() {
        let d = AnsatzData::new(7, &[2, 3], false).unwrap();
        let img = flat_image_moments(&d, &[-18.0, 5.0]).unwrap();
        assert!(img.exponents.iter().all(|t| t.is_finite()));
        assert!(img.moments.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn ricci_flat_examples() {
        let g = |a0, w: &[i64]| GroupedWeights::group(a0, w).unwrap();
        assert!(ricci_flat_test(&g(5, &[2, 3])).ricci_flat);
        assert!(ricci_flat_test(&g(3, &[1, 1, 1])).ricci_flat);
        assert!(!ricci_flat_test(&g(7, &[2, 3])).ricci_flat);
        assert!(ricci_flat_test(&g(7, &[2, 3])).consistent);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form(3, 392.0), 98.0);
        assert_eq!(closed_form(2, 28.0), -7.0);
    }
}
