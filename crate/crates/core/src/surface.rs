//! Complex surfaces (`m = 2`): the orthotoric and Calabi-type metrics in
//! closed form, their conformally related Bochner-flat duals, and the
//! labelled simplices of the duals.
//!
//! A surface point is a pair of numbers whose meaning depends on the kind:
//! `(ξ_1, ξ_2)` for orthotoric data and `(z, y)` for Calabi-type data.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::json;

use crate::ansatz::{AnsatzData, Scalar};
use crate::poly::Poly;
use crate::polytope::{solve_exact, Facet, LabelledPolytope};
use crate::report::VerificationReport;
use crate::verify::{abreu_from_gram, boundary_check, BoundaryResidual};
use crate::{int, rat, rat_string, to_f64, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceKind {
    /// `a_1 < a_2`: `Θ_1(x) = 2(x + a_0a_1)(x + a_0a_2)`, `Θ_2(x) = 2x(x + a_0²)`.
    Orthotoric { theta1: Poly, theta2: Poly },
    /// `a_1 = a_2`: profile `Θ(z) = 2P(z)/(ℓz)` with
    /// `P(z) = z² + (ℓ−2)a z + (1−ℓ)a²`, `ℓ = a_0/a_1`, `a = a_1²`.
    Calabi { length: BigRational, alpha: BigRational, defining: Poly },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceData {
    pub a0: i64,
    pub a1: i64,
    pub a2: i64,
    pub kind: SurfaceKind,
    /// `a_0²a_1a_2` (orthotoric) or `1/a_1⁴` (Calabi).
    pub lambda_a: BigRational,
    /// The factor that multiplies `(a_0a_2, a_0a_1, a_1a_2)` in the dual normals.
    pub normal_scale: BigRational,
}

/// Conformal dual at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint<T> {
    pub sigma_tilde: [T; 2],
    pub h_tilde: [[T; 2]; 2],
    /// `σ̃_1²`, with `g̃ = σ̃_1² g`.
    pub conformal_factor: T,
}

fn eval<T: Scalar>(p: &Poly, t: &T) -> T {
    p.coeffs().iter().rev().fold(T::zero(), |acc, c| acc * t.clone() + T::from_rat(c))
}

fn two<T: Scalar>() -> T {
    T::one() + T::one()
}

impl SurfaceData {
    pub fn new(a0: i64, a1: i64, a2: i64) -> Result<Self> {
        if a0 <= 0 || a1 <= 0 || a2 <= 0 {
            return Err(Error::InvalidWeights(format!("({a0};{a1},{a2}) must be positive")));
        }
        let (a1, a2) = (a1.min(a2), a1.max(a2));
        let sq = |v: i64| int(v) * int(v);
        if a1 == a2 {
            let length = rat(a0, a1);
            let alpha = sq(a1);
            let defining = Poly::new(vec![
                (BigRational::one() - &length) * &alpha * &alpha,
                (&length - int(2)) * &alpha,
                BigRational::one(),
            ]);
            let lambda = BigRational::one() / (sq(a1) * sq(a1));
            Ok(SurfaceData {
                a0,
                a1,
                a2,
                kind: SurfaceKind::Calabi { length, alpha, defining },
                normal_scale: lambda.clone(),
                lambda_a: lambda,
            })
        } else {
            let two = int(2);
            let theta1 = Poly::from_roots(&[int(-a0 * a1), int(-a0 * a2)]).scale(&two);
            let theta2 = Poly::new(vec![int(0), &two * sq(a0), two]);
            let lambda = sq(a0) * int(a1) * int(a2);
            Ok(SurfaceData {
                a0,
                a1,
                a2,
                kind: SurfaceKind::Orthotoric { theta1, theta2 },
                normal_scale: BigRational::one() / &lambda,
                lambda_a: lambda,
            })
        }
    }

    pub fn is_orthotoric(&self) -> bool {
        matches!(self.kind, SurfaceKind::Orthotoric { .. })
    }

    /// Roots `α_1 < α_2` of `Θ_1` (orthotoric only).
    pub fn alphas(&self) -> Option<(BigRational, BigRational)> {
        self.is_orthotoric().then(|| (int(-self.a0 * self.a2), int(-self.a0 * self.a1)))
    }

    /// `(n_1, n_2, n_0) = (a_0a_2, a_0a_1, a_1a_2)`.
    fn normal_weights(&self) -> [BigRational; 3] {
        [int(self.a0 * self.a2), int(self.a0 * self.a1), int(self.a1 * self.a2)]
    }

    pub fn check_point<T: Scalar>(&self, pt: &[T; 2]) -> Result<()> {
        let ok = match &self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let (a1, a2) = self.alphas().expect("orthotoric");
                pt[0] > T::from_rat(&a1) && pt[0] < T::from_rat(&a2) && pt[1] > T::zero()
            }
            SurfaceKind::Calabi { length, alpha, .. } => {
                pt[0] > T::from_rat(alpha) && pt[1] > T::zero() && pt[1] < T::from_rat(length)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{pt:?} is outside the surface domain")))
        }
    }

    /// Gram matrix of the two Killing fields in the momentum basis.
    pub fn gram<T: Scalar>(&self, pt: &[T; 2]) -> Result<[[T; 2]; 2]> {
        self.check_point(pt)?;
        Ok(self.gram_unchecked(pt))
    }

    fn gram_unchecked<T: Scalar>(&self, pt: &[T; 2]) -> [[T; 2]; 2] {
        match &self.kind {
            SurfaceKind::Orthotoric { theta1, theta2 } => {
                let (x1, x2) = (pt[0].clone(), pt[1].clone());
                let t1 = eval(theta1, &x1);
                let t2 = eval(theta2, &x2);
                let d = x2.clone() - x1.clone();
                let h11 = (t2.clone() - t1.clone()) / d.clone();
                let h12 = (x1.clone() * t2.clone() - x2.clone() * t1.clone()) / d.clone();
                let h22 = (x1.clone() * x1 * t2 - x2.clone() * x2 * t1) / d;
                [[h11, h12.clone()], [h12, h22]]
            }
            SurfaceKind::Calabi { length, defining, .. } => {
                let (z, y) = (pt[0].clone(), pt[1].clone());
                let l = T::from_rat(length);
                let theta = two::<T>() * eval(defining, &z) / (l.clone() * z.clone());
                let theta_check = two::<T>() * y.clone() * (l.clone() - y.clone()) / l;
                [
                    [theta.clone(), y.clone() * theta.clone()],
                    [y.clone() * theta.clone(), y.clone() * y * theta + z * theta_check],
                ]
            }
        }
    }

    /// Momenta: `(ξ_1 + ξ_2, ξ_1ξ_2)` or `(z, zy)`.
    pub fn momenta<T: Scalar>(&self, pt: &[T; 2]) -> [T; 2] {
        match self.kind {
            SurfaceKind::Orthotoric { .. } => [pt[0].clone() + pt[1].clone(), pt[0].clone() * pt[1].clone()],
            SurfaceKind::Calabi { .. } => [pt[0].clone(), pt[0].clone() * pt[1].clone()],
        }
    }

    pub fn point_from_momenta(&self, s: &[f64]) -> Result<[f64; 2]> {
        let pt = match self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let disc = s[0] * s[0] - 4.0 * s[1];
                if disc <= 0.0 {
                    return Err(Error::Domain("momenta have no real preimage".into()));
                }
                let r = disc.sqrt();
                // Stable quadratic roots: ξ_1 < 0 < ξ_2 on the domain.
                let q = 0.5 * (s[0] + s[0].signum() * r);
                let (u, v) = if q != 0.0 { (q, s[1] / q) } else { (-0.5 * r, 0.5 * r) };
                [u.min(v), u.max(v)]
            }
            SurfaceKind::Calabi { .. } => [s[0], s[1] / s[0]],
        };
        self.check_point(&pt)?;
        Ok(pt)
    }

    /// `σ̃`, `H̃ = σ̃_1²H` and the conformal factor.
    pub fn bochner_dual<T: Scalar>(&self, pt: &[T; 2]) -> Result<DualPoint<T>> {
        let h = self.gram(pt)?;
        let sigma_tilde = match self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let d = pt[0].clone() - pt[1].clone();
                [
                    -(T::one() / d.clone()),
                    -((pt[0].clone() + pt[1].clone()) / (two::<T>() * d)),
                ]
            }
            SurfaceKind::Calabi { .. } => [T::one() / pt[0].clone(), pt[1].clone() / pt[0].clone()],
        };
        let f = sigma_tilde[0].clone() * sigma_tilde[0].clone();
        let h_tilde = [
            [f.clone() * h[0][0].clone(), f.clone() * h[0][1].clone()],
            [f.clone() * h[1][0].clone(), f.clone() * h[1][1].clone()],
        ];
        Ok(DualPoint { sigma_tilde, h_tilde, conformal_factor: f })
    }

    /// Inverse of the dual momenta map.
    pub fn point_from_dual<T: Scalar>(&self, st: &[T; 2]) -> [T; 2] {
        match self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let d = two::<T>() * st[0].clone();
                let s2 = two::<T>() * st[1].clone();
                [(s2.clone() - T::one()) / d.clone(), (s2 + T::one()) / d]
            }
            SurfaceKind::Calabi { .. } => [T::one() / st[0].clone(), st[1].clone() / st[0].clone()],
        }
    }

    /// Linear part `M` of the affine map `σ̃ ↦ x̃` onto the standard simplex.
    pub fn dual_jacobian(&self) -> [[BigRational; 2]; 2] {
        match &self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let (a1, a2) = self.alphas().expect("orthotoric");
                let k1 = &a2 / (&a1 - &a2);
                let k2 = &a1 / (&a1 - &a2);
                [[-(&k1 * &a1), k1], [&k2 * &a2, -k2]]
            }
            SurfaceKind::Calabi { length, alpha, .. } => {
                let k = alpha / length;
                [[&k * length, -k.clone()], [BigRational::zero(), k]]
            }
        }
    }

    fn dual_offset(&self) -> [BigRational; 2] {
        match &self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let (a1, a2) = self.alphas().expect("orthotoric");
                let half = rat(1, 2);
                [-(&a2 / (&a1 - &a2)) * &half, (&a1 / (&a1 - &a2)) * half]
            }
            SurfaceKind::Calabi { .. } => [BigRational::zero(), BigRational::zero()],
        }
    }

    pub fn dual_to_xtilde<T: Scalar>(&self, st: &[T; 2]) -> [T; 2] {
        let m = self.dual_jacobian();
        let o = self.dual_offset();
        let row = |i: usize| {
            T::from_rat(&m[i][0]) * st[0].clone() + T::from_rat(&m[i][1]) * st[1].clone() + T::from_rat(&o[i])
        };
        [row(0), row(1)]
    }

    pub fn xtilde_to_dual(&self, xt: &[f64]) -> [f64; 2] {
        let m = self.dual_jacobian().map(|r| r.map(|v| to_f64(&v)));
        let o = self.dual_offset().map(|v| to_f64(&v));
        let (b0, b1) = (xt[0] - o[0], xt[1] - o[1]);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [(m[1][1] * b0 - m[0][1] * b1) / det, (m[0][0] * b1 - m[1][0] * b0) / det]
    }

    /// `H̃` in the standard-simplex coordinates `x̃`: `M H̃ Mᵀ`.
    pub fn dual_gram_xtilde(&self, xt: &[f64]) -> Result<DMatrix<f64>> {
        let st = self.xtilde_to_dual(xt);
        let pt = self.point_from_dual(&st);
        let d = self.bochner_dual(&pt)?;
        let h = DMatrix::from_fn(2, 2, |i, j| d.h_tilde[i][j]);
        let m = self.dual_jacobian();
        let m = DMatrix::from_fn(2, 2, |i, j| to_f64(&m[i][j]));
        Ok(&m * h * m.transpose())
    }

    /// The dual simplex in `σ̃` and its image, the standard simplex in `x̃`,
    /// with the weighted normals `normal_scale·(a_0a_2, a_0a_1, a_1a_2)`.
    pub fn dual_polytope(&self) -> (LabelledPolytope, LabelledPolytope) {
        let z = BigRational::zero;
        let half = rat(1, 2);
        let sigma_facets = match &self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let (a1, a2) = self.alphas().expect("orthotoric");
                vec![
                    Facet { label: "L1".into(), normal: vec![-a1, int(1)], constant: -half.clone() },
                    Facet { label: "L2".into(), normal: vec![a2, int(-1)], constant: half.clone() },
                    Facet { label: "L0".into(), normal: vec![z(), int(1)], constant: half },
                ]
            }
            SurfaceKind::Calabi { length, alpha, .. } => vec![
                Facet { label: "y=l".into(), normal: vec![length.clone(), int(-1)], constant: z() },
                Facet { label: "y=0".into(), normal: vec![z(), int(1)], constant: z() },
                Facet { label: "z=a".into(), normal: vec![int(-1), z()], constant: BigRational::one() / alpha },
            ],
        };
        let [n1, n2, n0] = self.normal_weights();
        let s = &self.normal_scale;
        let third = rat(1, 3);
        let xt_point = [third.clone(), third];
        let interior_sigma = {
            let m = self.dual_jacobian();
            let o = self.dual_offset();
            let b0 = &xt_point[0] - &o[0];
            let b1 = &xt_point[1] - &o[1];
            let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
            vec![(&m[1][1] * &b0 - &m[0][1] * &b1) / &det, (&m[0][0] * &b1 - &m[1][0] * &b0) / det]
        };
        let sigma = LabelledPolytope { dim: 2, facets: sigma_facets, bounded: true, interior_point: interior_sigma };
        let standard = LabelledPolytope {
            dim: 2,
            facets: vec![
                Facet { label: "v1".into(), normal: vec![s * n1, z()], constant: z() },
                Facet { label: "v2".into(), normal: vec![z(), s * &n2], constant: z() },
                Facet { label: "v0".into(), normal: vec![-(s * &n0), -(s * &n0)], constant: s * n0 },
            ],
            bounded: true,
            interior_point: xt_point.to_vec(),
        };
        (sigma, standard)
    }

    /// Checks the dual boundary conditions on each facet of the standard
    /// simplex with the weighted normals of [`Self::dual_polytope`].
    pub fn dual_boundary_residuals(&self, levels: usize) -> Result<Vec<BoundaryResidual>> {
        self.dual_boundary_residuals_scaled(to_f64(&self.normal_scale), levels)
    }

    /// Same as [`Self::dual_boundary_residuals`], with normals
    /// `scale·(a_0a_2, a_0a_1, a_1a_2)` for an arbitrary `scale`.
    pub fn dual_boundary_residuals_scaled(&self, scale: f64, levels: usize) -> Result<Vec<BoundaryResidual>> {
        let [n1, n2, n0] = self.normal_weights().map(|v| scale * to_f64(&v));
        let facets = [("v1", [n1, 0.0], [0.0, 0.5]), ("v2", [0.0, n2], [0.5, 0.0]), ("v0", [-n0, -n0], [0.5, 0.5])];
        facets
            .iter()
            .map(|(label, u, base)| {
                let t0 = 0.05 * (u[0] * u[0] + u[1] * u[1]).sqrt();
                boundary_check(|x| self.dual_gram_xtilde(x), u, base, t0, levels, label)
            })
            .collect()
    }

    /// Scalar curvature of the surface metric at `pt`, from the closed-form Gram.
    pub fn scalar_curvature(&self, pt: &[f64; 2]) -> Result<f64> {
        self.check_point(pt)?;
        let s = self.momenta(pt);
        let gram = |m: &[f64]| -> Result<DMatrix<f64>> {
            let p = self.point_from_momenta(m)?;
            let g = self.gram_unchecked(&p);
            Ok(DMatrix::from_fn(2, 2, |i, j| g[i][j]))
        };
        let h = [1e-3 * s[0].abs().max(1.0), 1e-3 * s[1].abs().max(1.0)];
        abreu_from_gram(gram, &s, &h)
    }

    /// For orthotoric data: `Θ_1` and `Θ_2` coincide with the general
    /// construction's `Θ` and `F_ℓ`.
    pub fn matches_ansatz(&self) -> Result<Option<bool>> {
        match &self.kind {
            SurfaceKind::Orthotoric { theta1, theta2 } => {
                let d = AnsatzData::new(self.a0, &[self.a1, self.a2], false)?;
                Ok(Some(&d.theta == theta1 && &d.f_ell == theta2))
            }
            SurfaceKind::Calabi { .. } => Ok(None),
        }
    }

    /// Exact interior sample points: 30 rational points in general position.
    pub fn sample_points(&self) -> Vec<[BigRational; 2]> {
        let mut out = Vec::new();
        match &self.kind {
            SurfaceKind::Orthotoric { .. } => {
                let (a1, a2) = self.alphas().expect("orthotoric");
                let second = [rat(1, 3), int(1), rat(5, 2), int(7), int(20)];
                for i in 1..=6 {
                    let x1 = &a1 + (&a2 - &a1) * rat(i, 7);
                    for x2 in &second {
                        out.push([x1.clone(), x2.clone()]);
                    }
                }
            }
            SurfaceKind::Calabi { length, alpha, .. } => {
                for k in 1..=6 {
                    let z = alpha * (BigRational::one() + rat(k, 3));
                    for j in 1..=5 {
                        out.push([z.clone(), length * rat(j, 6)]);
                    }
                }
            }
        }
        out
    }
}

/// Monomials `σ̃_1^i σ̃_2^j` with `i + j ≤ degree`, ordered by degree.
pub fn monomial_exponents(degree: usize) -> Vec<(usize, usize)> {
    (0..=degree).flat_map(|d| (0..=d).rev().map(move |i| (i, d - i))).collect()
}

fn monomials(s: &[BigRational; 2], exps: &[(usize, usize)]) -> Vec<BigRational> {
    exps.iter()
        .map(|&(i, j)| {
            let p = |b: &BigRational, e: usize| (0..e).fold(BigRational::one(), |acc, _| acc * b);
            p(&s[0], i) * p(&s[1], j)
        })
        .collect()
}

/// Exact interpolation of the entries of `H̃` by polynomials in `σ̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialFit {
    pub degree: usize,
    pub exponents: Vec<(usize, usize)>,
    /// Coefficients for the entries `(1,1)`, `(1,2)`, `(2,2)`.
    pub coefficients: [Vec<BigRational>; 3],
    /// Sample points (fit and held-out) at which the polynomial misses `H̃`.
    pub mismatches: usize,
}

impl PolynomialFit {
    pub fn exact(&self) -> bool {
        self.mismatches == 0
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entry = |c: &Vec<BigRational>| -> serde_json::Value {
            self.exponents
                .iter()
                .zip(c)
                .filter(|(_, v)| !v.is_zero())
                .map(|(&(i, j), v)| (format!("s1^{i}*s2^{j}"), json!(rat_string(v))))
                .collect::<serde_json::Map<_, _>>()
                .into()
        };
        json!({
            "degree": self.degree,
            "exact": self.exact(),
            "h11": entry(&self.coefficients[0]),
            "h12": entry(&self.coefficients[1]),
            "h22": entry(&self.coefficients[2]),
        })
    }
}

/// Fits each entry of `H̃` on 20 exact points by least squares (normal
/// equations, exact) and counts mismatches at all 30 points.
pub fn polynomial_fit(data: &SurfaceData, degree: usize) -> Result<PolynomialFit> {
    let exps = monomial_exponents(degree);
    let samples: Vec<([BigRational; 2], [[BigRational; 2]; 2])> = data
        .sample_points()
        .iter()
        .map(|pt| data.bochner_dual(pt).map(|d| (d.sigma_tilde, d.h_tilde)))
        .collect::<Result<_>>()?;
    let (fit, _held_out) = samples.split_at(20);
    let rows: Vec<Vec<BigRational>> = fit.iter().map(|(s, _)| monomials(s, &exps)).collect();
    let k = exps.len();
    let normal: Vec<Vec<BigRational>> = (0..k)
        .map(|a| (0..k).map(|b| rows.iter().fold(BigRational::zero(), |acc, r| acc + &r[a] * &r[b])).collect())
        .collect();
    let entries = [(0, 0), (0, 1), (1, 1)];
    let mut coefficients: [Vec<BigRational>; 3] = Default::default();
    for (slot, &(i, j)) in entries.iter().enumerate() {
        let rhs: Vec<BigRational> = (0..k)
            .map(|a| rows.iter().zip(fit).fold(BigRational::zero(), |acc, (r, (_, h))| acc + &r[a] * &h[i][j]))
            .collect();
        coefficients[slot] = solve_exact(&normal, &rhs)
            .ok_or_else(|| Error::Numeric("rank-deficient interpolation grid; enlarge the sample".into()))?;
    }
    let mismatches = samples
        .iter()
        .filter(|(s, h)| {
            let mono = monomials(s, &exps);
            entries.iter().enumerate().any(|(slot, &(i, j))| {
                let v = mono.iter().zip(&coefficients[slot]).fold(BigRational::zero(), |acc, (m, c)| acc + m * c);
                v != h[i][j]
            })
        })
        .count();
    Ok(PolynomialFit { degree, exponents: exps, coefficients, mismatches })
}

/// Degree-3 fit must be exact; degree 2 must fail (the bound is sharp).
pub fn polynomiality_check(data: &SurfaceData) -> Result<VerificationReport> {
    let cubic = polynomial_fit(data, 3)?;
    let quadratic = polynomial_fit(data, 2)?;
    let mut r = VerificationReport::new("polynomiality", cubic.mismatches as f64, 0.0, data.sample_points().len())
        .with_detail("degree_2_mismatches", quadratic.mismatches)
        .with_detail("coefficients", cubic.to_json());
    if quadratic.exact() {
        r = r.fail_because("degree 2 already fits exactly; the cubic bound is not sharp on this data");
    }
    Ok(r)
}

/// Sign of the conformal factor in both of its forms and the conformal law
/// `H = H̃/σ̃_1²` on a float grid.
pub fn conformal_factor_check(data: &SurfaceData) -> Result<VerificationReport> {
    let mut max_law = 0.0f64;
    let mut sign_violations = 0usize;
    let mut form_mismatch = 0.0f64;
    let pts: Vec<[f64; 2]> = data.sample_points().iter().map(|p| [to_f64(&p[0]), to_f64(&p[1])]).collect();
    for pt in &pts {
        let h = data.gram(pt)?;
        let d = data.bochner_dual(pt)?;
        for i in 0..2 {
            for j in 0..2 {
                let back = d.h_tilde[i][j] / d.conformal_factor;
                max_law = max_law.max((back - h[i][j]).abs() / h[i][j].abs().max(1e-300));
            }
        }
        let xt = data.dual_to_xtilde(&d.sigma_tilde);
        let (xi_form, momentum_form) = match &data.kind {
            SurfaceKind::Orthotoric { .. } => {
                let a0 = data.a0 as f64;
                (d.sigma_tilde[0], -(xt[0] / (a0 * data.a1 as f64) + xt[1] / (a0 * data.a2 as f64)))
            }
            SurfaceKind::Calabi { alpha, .. } => (d.sigma_tilde[0], (xt[0] + xt[1]) / to_f64(alpha)),
        };
        let expected_sign = if data.is_orthotoric() { -1.0 } else { 1.0 };
        if !(xi_form > 0.0 && momentum_form * expected_sign > 0.0) {
            sign_violations += 1;
        }
        // The momentum form equals ±(ξ-form) after the orientation flip.
        form_mismatch = form_mismatch.max((momentum_form.abs() - xi_form).abs() / xi_form);
    }
    let mut r = VerificationReport::new("conformal_factor", max_law, 1e-12, pts.len())
        .with_detail("sign_violations", sign_violations)
        .with_detail("xi_form_sign", "positive")
        .with_detail("momentum_form_sign", if data.is_orthotoric() { "negative" } else { "positive" })
        .with_detail("form_mismatch", form_mismatch);
    if sign_violations > 0 || form_mismatch > 1e-12 {
        r = r.fail_because("conformal factor has the wrong sign or its two forms disagree");
    }
    Ok(r)
}

/// JSON summary: kind, `λ_a`, dual normals and the exact `H̃` coefficients.
pub fn surface_json(data: &SurfaceData) -> Result<serde_json::Value> {
    let (sigma, standard) = data.dual_polytope();
    let fit = polynomial_fit(data, 3)?;
    let kind = match &data.kind {
        SurfaceKind::Orthotoric { theta1, theta2 } => json!({
            "kind": "orthotoric",
            "theta1": theta1.coeffs().iter().map(rat_string).collect::<Vec<_>>(),
            "theta2": theta2.coeffs().iter().map(rat_string).collect::<Vec<_>>(),
        }),
        SurfaceKind::Calabi { length, alpha, defining } => json!({
            "kind": "calabi",
            "length": rat_string(length),
            "alpha": rat_string(alpha),
            "defining": defining.coeffs().iter().map(rat_string).collect::<Vec<_>>(),
        }),
    };
    Ok(json!({
        "weights": [data.a0, data.a1, data.a2],
        "structure": kind,
        "lambda_a": rat_string(&data.lambda_a),
        "normal_scale": rat_string(&data.normal_scale),
        "dual_simplex": sigma.to_json(),
        "standard_simplex": standard.to_json(),
        "h_tilde": fit.to_json(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_orthotoric_point() {
        let s = SurfaceData::new(7, 2, 3).unwrap();
        let pt = [int(-18), int(5)];
        assert_eq!(s.gram(&pt).unwrap()[0][0], rat(564, 23));
        let d = s.bochner_dual(&pt).unwrap();
        assert_eq!(d.sigma_tilde, [rat(1, 23), rat(-13, 46)]);
        assert_eq!(d.h_tilde[0][0], rat(564, 12167));
        assert_eq!(s.lambda_a, int(294));
        assert_eq!(s.matches_ansatz().unwrap(), Some(true));
    }

    #[test]
    fn calabi_lambda() {
        let s = SurfaceData::new(5, 2, 2).unwrap();
        assert_eq!(s.lambda_a, rat(1, 16));
        assert!(!s.is_orthotoric());
    }

    #[test]
    fn dual_maps_round_trip() {
        for s in [SurfaceData::new(7, 2, 3).unwrap(), SurfaceData::new(5, 2, 2).unwrap()] {
            let xt = [0.2, 0.3];
            let back = s.dual_to_xtilde(&s.xtilde_to_dual(&xt));
            assert!((back[0] - 0.2).abs() < 1e-14 && (back[1] - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn momenta_round_trip() {
        let s = SurfaceData::new(7, 2, 3).unwrap();
        let p = s.point_from_momenta(&s.momenta(&[-18.0, 5.0])).unwrap();
        assert!((p[0] + 18.0).abs() < 1e-13 && (p[1] - 5.0).abs() < 1e-13);
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomial_exponents(3).len(), 10);
        assert_eq!(monomial_exponents(2).len(), 6);
    }

    #[test]
    fn cubic_is_exact_and_sharp() {
        for (a0, a1, a2) in [(7, 2, 3), (5, 1, 2), (5, 2, 2), (3, 1, 1)] {
            let s = SurfaceData::new(a0, a1, a2).unwrap();
            assert!(polynomial_fit(&s, 3).unwrap().exact(), "{a0},{a1},{a2}");
            assert!(!polynomial_fit(&s, 2).unwrap().exact(), "{a0},{a1},{a2}");
            assert!(polynomiality_check(&s).unwrap().pass);
        }
    }

    #[test]
    fn conformal_factor_signs() {
        for (a0, a1, a2) in [(7, 2, 3), (5, 2, 2)] {
            let r = conformal_factor_check(&SurfaceData::new(a0, a1, a2).unwrap()).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn dual_boundary_with_weighted_normals() {
        for (a0, a1, a2) in [(7, 2, 3), (5, 2, 2), (3, 1, 2)] {
            let s = SurfaceData::new(a0, a1, a2).unwrap();
            for r in s.dual_boundary_residuals(8).unwrap() {
                eprintln!("{a0},{a1},{a2} {r:?}");
                assert!((r.slope - 1.0).abs() < 0.05, "{r:?}");
                assert!(r.gradient_error < 1e-3, "{r:?}");
            }
            if !s.is_orthotoric() {
                continue;
            }
            let printed = s.dual_boundary_residuals_scaled(to_f64(&s.lambda_a), 8).unwrap();
            assert!(printed.iter().any(|r| r.gradient_error > 0.5), "{printed:?}");
        }
    }

    #[test]
    fn calabi_scalar_flat() {
        let s = SurfaceData::new(5, 2, 2).unwrap();
        for pt in [[5.0, 0.7], [9.0, 1.3], [30.0, 2.0]] {
            let v = s.scalar_curvature(&pt).unwrap();
            eprintln!("{pt:?} {v}");
            assert!(v.abs() < 1e-6, "{v}");
        }
    }
}
