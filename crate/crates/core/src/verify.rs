//! Numerical checks of scalar-flatness, boundary behaviour, positivity and
//! the potential/metric consistency of the ansatz.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::ansatz::{AnsatzData, XiPoint};
use crate::polytope::{flat_cone, wps_polytope, LabelledPolytope};
use crate::quad::QuadOptions;
use crate::report::VerificationReport;
use crate::{Error, Result};

/// Tolerances and sample sizes for the checks.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    /// Finite-difference step as a fraction of the axial distance to the boundary.
    pub step_fraction: f64,
    pub min_step: f64,
    /// Minimum step for flat data, where the residual measures the roundoff floor.
    pub flat_min_step: f64,
    pub abreu_tol: f64,
    pub flat_noise_tol: f64,
    pub grid_per_dim: usize,
    pub boundary_slope_tol: f64,
    pub boundary_ratio_tol: f64,
    pub boundary_grad_tol: f64,
    pub boundary_levels: usize,
    pub positivity_points: usize,
    pub det_points: usize,
    pub det_variation_tol: f64,
    pub hessian_points: usize,
    pub hessian_tol: f64,
    pub seed: u64,
    pub timing: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            step_fraction: 1e-2,
            min_step: 1e-4,
            flat_min_step: 1e-3,
            abreu_tol: 1e-5,
            flat_noise_tol: 1e-8,
            grid_per_dim: 15,
            boundary_slope_tol: 0.2,
            boundary_ratio_tol: 0.2,
            boundary_grad_tol: 0.05,
            boundary_levels: 8,
            positivity_points: 200,
            det_points: 200,
            det_variation_tol: 0.1,
            hessian_points: 10,
            hessian_tol: 1e-6,
            seed: 0,
            timing: false,
        }
    }
}

// ----- sampling ------------------------------------------------------------

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `b` (Halton sequence component).
pub fn halton(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Maps `u ∈ (0,1)` into the interval of `ξ_j` (arctan-compactified when unbounded).
pub fn xi_from_unit(data: &AnsatzData, j: usize, u: f64) -> f64 {
    match data.interval(j) {
        (lo, Some(hi)) => lo + u * (hi - lo),
        (lo, None) => {
            let s = data.alpha_f64()[data.ell - 1].abs();
            lo + s * (FRAC_PI_2 * u).tan()
        }
    }
}

/// Stick-breaking map from the unit cube to the open simplex.
fn simplex_from_unit(us: &[f64]) -> Vec<f64> {
    let mut left = 1.0;
    us.iter()
        .map(|&u| {
            let v = left * (0.1 + 0.7 * u);
            left -= v;
            0.95 * v
        })
        .collect()
}

fn fibres_from_unit(data: &AnsatzData, us: &[f64]) -> Vec<Vec<f64>> {
    let mut off = 0;
    data.mult
        .iter()
        .map(|&n| {
            let f = simplex_from_unit(&us[off..off + n]);
            off += n;
            f
        })
        .collect()
}

/// Tensor grid of `n^ℓ` interior `ξ` points (cell midpoints), with fibre
/// coordinates taken from a Halton sequence.
pub fn xi_grid(data: &AnsatzData, n: usize) -> Vec<XiPoint> {
    let ell = data.ell;
    let fdim: usize = data.mult.iter().sum();
    let total = n.pow(ell as u32);
    (0..total)
        .map(|idx| {
            let mut rem = idx;
            let xi = (0..ell)
                .map(|j| {
                    let k = rem % n;
                    rem /= n;
                    xi_from_unit(data, j, (k as f64 + 0.5) / n as f64)
                })
                .collect();
            let us: Vec<f64> = (0..fdim).map(|d| halton(idx as u64 + 1, PRIMES[d % 12])).collect();
            XiPoint { xi, fibres: fibres_from_unit(data, &us) }
        })
        .collect()
}

/// Low-discrepancy interior points; `seed` offsets the Halton index.
pub fn quasi_random_points(data: &AnsatzData, count: usize, seed: u64) -> Vec<XiPoint> {
    let dim = data.m;
    (0..count as u64)
        .map(|i| {
            let idx = seed.wrapping_mul(7919).wrapping_add(i + 1);
            let us: Vec<f64> = (0..dim).map(|d| 0.02 + 0.96 * halton(idx, PRIMES[d % 12])).collect();
            let xi = (0..data.ell).map(|j| xi_from_unit(data, j, us[j])).collect();
            XiPoint { xi, fibres: fibres_from_unit(data, &us[data.ell..]) }
        })
        .collect()
}

/// Moment polytope of the data in `x̃` coordinates.
pub fn moment_polytope(data: &AnsatzData) -> Result<LabelledPolytope> {
    if data.flat { flat_cone(&data.weights) } else { wps_polytope(&data.weights) }
}

// ----- scalar curvature ----------------------------------------------------

fn abreu_at_step<G>(gram: &G, y: &[f64], h: &[f64]) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let m = y.len();
    let shift = |pairs: &[(usize, f64)]| {
        let mut z = y.to_vec();
        for &(i, s) in pairs {
            z[i] += s * h[i];
        }
        z
    };
    let g0 = gram(y)?;
    let mut s = 0.0;
    for u in 0..m {
        let gp = gram(&shift(&[(u, 1.0)]))?;
        let gm = gram(&shift(&[(u, -1.0)]))?;
        s += (gp[(u, u)] - 2.0 * g0[(u, u)] + gm[(u, u)]) / (h[u] * h[u]);
        for v in u + 1..m {
            let pp = gram(&shift(&[(u, 1.0), (v, 1.0)]))?[(u, v)];
            let pm = gram(&shift(&[(u, 1.0), (v, -1.0)]))?[(u, v)];
            let mp = gram(&shift(&[(u, -1.0), (v, 1.0)]))?[(u, v)];
            let mm = gram(&shift(&[(u, -1.0), (v, -1.0)]))?[(u, v)];
            s += 2.0 * (pp - pm - mp + mm) / (4.0 * h[u] * h[v]);
        }
    }
    Ok(-s)
}

/// Distance from `y` to the boundary along each coordinate axis of `y`,
/// measured in the facet functionals of `x̃ = L y`.
fn axis_margins(data: &AnsatzData, y: &[f64]) -> Vec<f64> {
    let l = data.xtilde_matrix();
    let (x, f) = data.split_momenta(y);
    let xt = data.x_to_xtilde(&x, &f);
    let sum_minus_one = xt.iter().sum::<f64>() - 1.0;
    (0..data.m)
        .map(|u| {
            let col = l.column(u);
            let mut d = f64::INFINITY;
            for (k, &v) in xt.iter().enumerate() {
                if col[k] != 0.0 {
                    d = d.min(v / col[k].abs());
                }
            }
            let s: f64 = col.iter().sum();
            if !data.flat && s != 0.0 {
                d = d.min(sum_minus_one / s.abs());
            }
            d
        })
        .collect()
}

/// Per-coordinate steps `h_u = max(min_step, fraction·d_u)`, where `d_u` is the
/// axial distance to the boundary; fails if the stencil `4h_u` does not fit.
fn steps(data: &AnsatzData, y: &[f64], fraction: f64, min_step: f64) -> Result<Vec<f64>> {
    axis_margins(data, y)
        .into_iter()
        .map(|d| {
            let h = (fraction * d).max(min_step);
            if 4.0 * h > d {
                Err(Error::Domain(format!("point too close to the boundary (margin {d:e})")))
            } else {
                Ok(h)
            }
        })
        .collect()
}

/// Scalar curvature `S = −Σ ∂²H_uv/∂y_u∂y_v` by central differences with one
/// Richardson level.
pub fn abreu_scalar(data: &AnsatzData, pt: &XiPoint, cfg: &VerifyConfig) -> Result<f64> {
    let y = data.momenta_of_point(pt);
    let h = steps(data, &y, cfg.step_fraction, cfg.min_step)?;
    abreu_from_gram(|z| data.full_gram(&data.point_from_momenta(z)?), &y, &h)
}

/// `−Σ ∂²H_uv/∂y_u∂y_v` for any Gram function of the momenta, with steps `h`
/// and one Richardson level.
pub fn abreu_from_gram<G>(gram: G, y: &[f64], h: &[f64]) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let coarse = abreu_at_step(&gram, y, h)?;
    let half: Vec<f64> = h.iter().map(|v| 0.5 * v).collect();
    let fine = abreu_at_step(&gram, y, &half)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

pub fn abreu_check(data: &AnsatzData, cfg: &VerifyConfig) -> VerificationReport {
    let start = Instant::now();
    let pts = xi_grid(data, cfg.grid_per_dim);
    let (tol, step_cfg) = if data.flat {
        (cfg.flat_noise_tol, VerifyConfig { min_step: cfg.flat_min_step, ..cfg.clone() })
    } else {
        (cfg.abreu_tol, cfg.clone())
    };
    let mut worst = 0.0f64;
    let mut skipped = 0usize;
    let mut errors = Vec::new();
    for pt in &pts {
        match abreu_scalar(data, pt, &step_cfg) {
            Ok(s) => worst = worst.max(if s.is_finite() { s.abs() } else { f64::INFINITY }),
            Err(Error::Domain(_)) => skipped += 1,
            Err(e) => errors.push(e.to_string()),
        }
    }
    let mut r = VerificationReport::new("abreu", worst, tol, pts.len() - skipped - errors.len())
        .with_detail("grid", format!("{}^{} in xi", cfg.grid_per_dim, data.ell))
        .with_detail("flat", data.flat)
        .with_detail("min_step", step_cfg.min_step);
    if skipped > 0 {
        r = r.with_detail("skipped_near_boundary", skipped);
    }
    if let Some(e) = errors.first() {
        r = r.fail_because(&format!("{} grid points failed, first: {e}", errors.len()));
    }
    r.timed(start, cfg.timing)
}

// ----- boundary conditions -------------------------------------------------

/// Outcome of approaching one facet.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryResidual {
    pub label: String,
    /// Fitted slope of `log‖H·u‖` against `log L`.
    pub slope: f64,
    /// Largest deviation of successive ratios `‖Hu‖(t)/‖Hu‖(t/2)` from 2.
    pub ratio_deviation: f64,
    /// `‖∇(uᵀHu) − 2u‖/‖2u‖` after extrapolation to the facet.
    pub gradient_error: f64,
}

/// Approaches the facet `{⟨u, z⟩ + c = 0}` from `base` (a point of the facet)
/// along `u/‖u‖²`, so the facet functional equals the approach parameter.
pub fn boundary_check<G>(gram: G, normal: &[f64], base: &[f64], t0: f64, levels: usize, label: &str) -> Result<BoundaryResidual>
where
    G: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let n = normal.len();
    let u = nalgebra::DVector::from_column_slice(normal);
    let un2 = u.norm_squared();
    let at = |t: f64| -> Vec<f64> { (0..n).map(|i| base[i] + t * normal[i] / un2).collect() };
    let ts: Vec<f64> = (0..levels).map(|k| t0 * 0.5f64.powi(k as i32)).collect();
    let mut norms = Vec::with_capacity(levels);
    for &t in &ts {
        norms.push((gram(&at(t))? * &u).norm());
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let slope = linear_fit(&lx, &ly).1;
    let ratio_deviation = norms
        .windows(2)
        .map(|w| (w[0] / w[1] - 2.0).abs())
        .fold(0.0, f64::max);
    let umax = normal.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let f = |z: &[f64]| -> Result<f64> {
        let g = gram(z)?;
        Ok((u.transpose() * g * &u)[(0, 0)])
    };
    let grad_at = |t: f64| -> Result<Vec<f64>> {
        let z = at(t);
        let h = t / (4.0 * umax.max(1.0)) * un2.sqrt().clamp(1e-3, 1.0);
        (0..n)
            .map(|i| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                Ok((f(&zp)? - f(&zm)?) / (2.0 * h))
            })
            .collect()
    };
    let tg = ts[levels / 2];
    let g1 = grad_at(tg)?;
    let g2 = grad_at(0.5 * tg)?;
    let extrap: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| 2.0 * b - a).collect();
    let err: f64 = extrap
        .iter()
        .zip(normal)
        .map(|(g, ui)| (g - 2.0 * ui).powi(2))
        .sum::<f64>()
        .sqrt()
        / (2.0 * un2.sqrt());
    Ok(BoundaryResidual { label: label.into(), slope, ratio_deviation, gradient_error: err })
}

/// Least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Gram matrix in `x̃` as a function of `x̃`.
pub fn xtilde_gram_at(data: &AnsatzData, xt: &[f64]) -> Result<DMatrix<f64>> {
    let (x, fibres) = data.xtilde_to_x(xt);
    let xi = data.x_to_xi(&x)?;
    data.xtilde_gram(&XiPoint { xi, fibres })
}

/// A point in the relative interior of facet `r` of the moment polytope.
pub fn facet_base_point(data: &AnsatzData, r: usize) -> Vec<f64> {
    let m = data.m;
    if r < m {
        let mut q = vec![1.5; m];
        q[r] = 0.0;
        q
    } else {
        vec![1.0 / m as f64; m]
    }
}

pub fn boundary_residuals(data: &AnsatzData, cfg: &VerifyConfig) -> Result<Vec<BoundaryResidual>> {
    let poly = moment_polytope(data)?;
    poly.facets
        .iter()
        .enumerate()
        .map(|(r, facet)| {
            let u = facet.normal_f64();
            let t0 = 0.05 * u.iter().map(|v| v * v).sum::<f64>().sqrt();
            boundary_check(
                |z| xtilde_gram_at(data, z),
                &u,
                &facet_base_point(data, r),
                t0,
                cfg.boundary_levels,
                &facet.label,
            )
        })
        .collect()
}

pub fn boundary_report(data: &AnsatzData, cfg: &VerifyConfig) -> VerificationReport {
    let start = Instant::now();
    match boundary_residuals(data, cfg) {
        Ok(res) => {
            let slope_dev = res.iter().map(|r| (r.slope - 1.0).abs()).fold(0.0, f64::max);
            let ratio_dev = res.iter().map(|r| r.ratio_deviation).fold(0.0, f64::max);
            let grad = res.iter().map(|r| r.gradient_error).fold(0.0, f64::max);
            // Normalise each criterion by its own tolerance so one residual summarises all.
            let worst = (slope_dev / cfg.boundary_slope_tol)
                .max(ratio_dev / cfg.boundary_ratio_tol)
                .max(grad / cfg.boundary_grad_tol);
            let mut r = VerificationReport::new("boundary", worst, 1.0, res.len() * cfg.boundary_levels)
                .with_detail("max_slope_deviation", slope_dev)
                .with_detail("max_ratio_deviation", ratio_dev)
                .with_detail("max_gradient_error", grad);
            for b in &res {
                r = r.with_detail(&format!("facet_{}", b.label), serde_json::json!({
                    "slope": b.slope, "ratio_deviation": b.ratio_deviation, "gradient_error": b.gradient_error
                }));
            }
            r.timed(start, cfg.timing)
        }
        Err(e) => VerificationReport::new("boundary", f64::INFINITY, 1.0, 0)
            .fail_because(&e.to_string())
            .timed(start, cfg.timing),
    }
}

// ----- positivity and determinant --------------------------------------------

pub fn positivity_check(data: &AnsatzData, cfg: &VerifyConfig) -> VerificationReport {
    let start = Instant::now();
    let pts = quasi_random_points(data, cfg.positivity_points, cfg.seed);
    let mut violations = 0usize;
    let mut min_rel = f64::INFINITY;
    for pt in &pts {
        let ok = data
            .vertical_weights(&pt.xi)
            .map(|w| w.iter().all(|v| *v > 0.0))
            .unwrap_or(false);
        let eig = data.full_gram(pt).map(|g| {
            let scale = g.norm();
            g.symmetric_eigenvalues().min() / scale
        });
        match eig {
            Ok(e) if ok && e > 0.0 => min_rel = min_rel.min(e),
            _ => violations += 1,
        }
    }
    VerificationReport::new("positivity", violations as f64, 0.0, pts.len())
        .with_detail("min_relative_eigenvalue", min_rel)
        .timed(start, cfg.timing)
}

/// `det(H̃) / [(Σx̃ − 1)∏x̃]` (without the first factor for flat data).
pub fn det_ratio(data: &AnsatzData, xt: &[f64]) -> Result<f64> {
    let g = xtilde_gram_at(data, xt)?;
    let mut denom: f64 = xt.iter().product();
    if !data.flat {
        denom *= xt.iter().sum::<f64>() - 1.0;
    }
    Ok(g.determinant() / denom)
}

pub fn det_factorization(data: &AnsatzData, cfg: &VerifyConfig) -> VerificationReport {
    let start = Instant::now();
    let pts = quasi_random_points(data, cfg.det_points, cfg.seed);
    let mut nonpositive = 0usize;
    for pt in &pts {
        let y = data.momenta_of_point(pt);
        let (x, f) = data.split_momenta(&y);
        match det_ratio(data, &data.x_to_xtilde(&x, &f)) {
            Ok(v) if v > 0.0 && v.is_finite() => {}
            _ => nonpositive += 1,
        }
    }
    // Relative variation of the ratio over shrinking neighbourhoods of each facet midpoint.
    let mut variation = 0.0f64;
    let poly = match moment_polytope(data) {
        Ok(p) => p,
        Err(e) => return VerificationReport::new("det", f64::INFINITY, cfg.det_variation_tol, 0).fail_because(&e.to_string()),
    };
    for (r, facet) in poly.facets.iter().enumerate() {
        let u = facet.normal_f64();
        let un2: f64 = u.iter().map(|v| v * v).sum();
        let base = facet_base_point(data, r);
        let vals: Vec<f64> = (3..8)
            .filter_map(|k| {
                let t = 0.05 * un2.sqrt() * 0.5f64.powi(k);
                let z: Vec<f64> = base.iter().zip(&u).map(|(b, ui)| b + t * ui / un2).collect();
                det_ratio(data, &z).ok()
            })
            .collect();
        if vals.len() < 5 {
            nonpositive += 1;
            continue;
        }
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        variation = variation.max((hi - lo) / hi.abs());
    }
    let mut r = VerificationReport::new("det", variation, cfg.det_variation_tol, pts.len())
        .with_detail("nonpositive_points", nonpositive);
    if nonpositive > 0 {
        r = r.fail_because("determinant ratio not positive everywhere");
    }
    r.timed(start, cfg.timing)
}

pub fn vandermonde_check(data: &AnsatzData) -> VerificationReport {
    let ok = data.vandermonde_holds();
    VerificationReport::new("vandermonde", if ok { 0.0 } else { 1.0 }, 0.0, data.ell)
}

// ----- potential vs metric ---------------------------------------------------

/// Hessian of `U_a` in `y = (x, x̂)` by fourth-order central differences.
pub fn potential_hessian(data: &AnsatzData, y: &[f64], h: &[f64], opts: QuadOptions) -> Result<DMatrix<f64>> {
    let m = data.m;
    let u = |z: &[f64]| data.symplectic_potential(z, opts);
    let shifted = |pairs: &[(usize, f64)]| {
        let mut z = y.to_vec();
        for &(i, s) in pairs {
            z[i] += s * h[i];
        }
        z
    };
    let u0 = u(y)?;
    let mut hess = DMatrix::zeros(m, m);
    for a in 0..m {
        let d = |s: f64| -> Result<f64> {
            Ok((u(&shifted(&[(a, s)]))? - 2.0 * u0 + u(&shifted(&[(a, -s)]))?) / (s * s * h[a] * h[a]))
        };
        hess[(a, a)] = (4.0 * d(1.0)? - d(2.0)?) / 3.0;
        for b in a + 1..m {
            let d = |s: f64| -> Result<f64> {
                let pp = u(&shifted(&[(a, s), (b, s)]))?;
                let pm = u(&shifted(&[(a, s), (b, -s)]))?;
                let mp = u(&shifted(&[(a, -s), (b, s)]))?;
                let mm = u(&shifted(&[(a, -s), (b, -s)]))?;
                Ok((pp - pm - mp + mm) / (4.0 * s * s * h[a] * h[b]))
            };
            let v = (4.0 * d(1.0)? - d(2.0)?) / 3.0;
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

/// Relative Frobenius distance between `Hess(U_a)^{-1}` and the assembled Gram.
pub fn hessian_consistency_at(data: &AnsatzData, pt: &XiPoint, cfg: &VerifyConfig) -> Result<(f64, f64)> {
    let y = data.momenta_of_point(pt);
    let h: Vec<f64> = steps(data, &y, cfg.step_fraction, cfg.min_step)?.iter().map(|v| v * 0.5).collect();
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-14, max_intervals: 20_000 };
    let hess = potential_hessian(data, &y, &h, opts)?;
    let inv = hess
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular finite-difference Hessian".into()))?;
    let g = data.full_gram(pt)?;
    let cond = {
        let ev = hess.symmetric_eigenvalues();
        ev.max().abs() / ev.min().abs()
    };
    Ok(((inv - &g).norm() / g.norm(), cond))
}

pub fn hessian_check(data: &AnsatzData, cfg: &VerifyConfig) -> VerificationReport {
    let start = Instant::now();
    let pts = quasi_random_points(data, cfg.hessian_points, cfg.seed.wrapping_add(17));
    let mut worst = 0.0f64;
    let mut worst_cond = 0.0f64;
    let mut failures = 0;
    for pt in &pts {
        match hessian_consistency_at(data, pt, cfg) {
            Ok((e, c)) => {
                worst = worst.max(e);
                worst_cond = worst_cond.max(c);
            }
            Err(_) => failures += 1,
        }
    }
    let mut r = VerificationReport::new("hessian", worst, cfg.hessian_tol, pts.len() - failures)
        .with_detail("max_condition_number", worst_cond);
    if worst_cond > 1e10 {
        r = r.with_detail("warning", "condition number above 1e10");
    }
    if failures > 0 {
        r = r.fail_because(&format!("{failures} points failed to evaluate"));
    }
    r.timed(start, cfg.timing)
}
