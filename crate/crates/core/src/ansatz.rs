//! Exact data of the order-ℓ ansatz and evaluation of coordinates, Gram
//! matrices and potentials at interior points.
//!
//! Coordinates used throughout:
//!
//! * `ξ = (ξ_1 < … < ξ_ℓ)` with `ξ_j ∈ (α_j, α_{j+1})` and `ξ_ℓ ∈ (0, ∞)`
//!   (`(α_ℓ, ∞)` for flat data);
//! * `σ`: elementary symmetric functions of `ξ`, the momenta of `K_1..K_ℓ`;
//! * `x ∈ P̊_ℓ`: momenta of the circle generators `X_1..X_ℓ`;
//! * `y = (x, x̂)`: momenta of `(X_j, X̂^j_k)`, where `x̂^j_k = κ_j x_j x^j_k`
//!   and `κ_j = c/(r_j a_j)`;
//! * `x̃ ∈ P̊_m`: the affine coordinates on the weighted projective space.

use std::fmt::Debug;
use std::ops::Neg;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};

use crate::poly::{elementary_symmetric, horner, Poly};
use crate::quad::{integrate, QuadOptions};
use crate::roots::brent;
use crate::weights::GroupedWeights;
use crate::{int, to_f64, Error, Result};

/// Scalars the generic evaluators run on: `f64` and exact rationals.
pub trait Scalar: Clone + Debug + Num + Neg<Output = Self> + PartialOrd {
    fn from_rat(q: &BigRational) -> Self;
}

impl Scalar for f64 {
    fn from_rat(q: &BigRational) -> Self {
        to_f64(q)
    }
}

impl Scalar for BigRational {
    fn from_rat(q: &BigRational) -> Self {
        q.clone()
    }
}

fn rpow(q: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        (0..e).fold(BigRational::one(), |acc, _| acc * q)
    } else {
        BigRational::one() / rpow(q, -e)
    }
}

/// An interior point: `ξ` plus a point `x^j` of each open fibre simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct XiPoint<T = f64> {
    pub xi: Vec<T>,
    pub fibres: Vec<Vec<T>>,
}

#[derive(Clone, Debug)]
pub struct AnsatzData {
    pub weights: GroupedWeights,
    pub flat: bool,
    pub ell: usize,
    pub m: usize,
    pub mult: Vec<usize>,
    pub c: BigRational,
    pub alpha: Vec<BigRational>,
    pub r: Vec<BigRational>,
    pub p: Poly,
    pub theta: Poly,
    pub f_ell: Poly,
    pub b0: BigRational,
    pub c0: BigRational,
    /// `a = 2b_0 − p′(0)`, the linear coefficient of `F_ℓ − p`.
    pub lin_a: BigRational,
    /// `b = −p(0)`.
    pub lin_b: BigRational,
    pub kappa: Vec<BigRational>,
    num: Numeric,
}

/// Float copies of the exact data, prepared once.
#[derive(Clone, Debug)]
struct Numeric {
    alpha: Vec<f64>,
    r: Vec<f64>,
    kappa: Vec<f64>,
    /// Coefficients of `F_ℓ(x)/x`.
    f_over_x: Vec<f64>,
    lin_a: f64,
    lin_b: f64,
    b: DMatrix<f64>,
}

/// Builds the ansatz data for `(a_0; a_1^{(n_1+1)}, …, a_ℓ^{(n_ℓ+1)})`.
pub fn build_ansatz(weights: &GroupedWeights, flat: bool) -> Result<AnsatzData> {
    let g = GroupedWeights::with_multiplicities(weights.a0, weights.distinct.clone(), weights.mult.clone())?;
    let ell = g.ell();
    let m = g.m();
    if m < 2 {
        return Err(Error::InvalidWeights(format!("{g}: complex dimension m = {m} < 2")));
    }
    let c = int(g.c());
    // α_j = −c/a_j, increasing because a_j is.
    let alpha: Vec<BigRational> = g.distinct.iter().map(|&a| -(&c / int(a))).collect();
    let cj: Vec<BigRational> = (0..ell)
        .map(|j| {
            let prod = (0..ell)
                .filter(|&k| k != j)
                .fold(BigRational::one(), |acc, k| acc * (&alpha[j] - &alpha[k]));
            BigRational::one() / prod
        })
        .collect();
    let r: Vec<BigRational> = cj
        .iter()
        .enumerate()
        .map(|(j, cj)| if (ell - 1 - j) % 2 == 0 { cj.clone() } else { -cj.clone() })
        .collect();
    if r.iter().any(|x| !x.is_positive()) {
        return Err(Error::Numeric(format!("{g}: non-positive r_j")));
    }
    let two = int(2);
    let mut p = Poly::constant(two.clone());
    let mut theta = Poly::constant(two.clone());
    for (a, &n) in alpha.iter().zip(&g.mult) {
        let lin = Poly::linear_root(a);
        p = &p * &lin.pow(n + 1);
        theta = &theta * &lin;
    }
    // b_0 = (−1)^{m−ℓ} ∏ α_j^{n_j} · a_0² c^{ℓ−2};  c_0 = 1/(a_0² c^{ℓ−2}).
    let a0 = int(g.a0);
    let c0 = BigRational::one() / (&a0 * &a0 * rpow(&c, ell as i64 - 2));
    let mut b0 = alpha
        .iter()
        .zip(&g.mult)
        .fold(BigRational::one(), |acc, (a, &n)| acc * rpow(a, n as i64))
        / &c0;
    if (m - ell) % 2 == 1 {
        b0 = -b0;
    }
    let p0 = p.eval(&BigRational::zero());
    let dp0 = p.derivative().eval(&BigRational::zero());
    let lin_a = &two * &b0 - &dp0;
    let lin_b = -p0.clone();
    let f_ell = if flat {
        p.clone()
    } else {
        &p + &Poly::new(vec![lin_b.clone(), lin_a.clone()])
    };
    let kappa: Vec<BigRational> = r
        .iter()
        .zip(&g.distinct)
        .map(|(rj, &a)| &c / (rj * int(a)))
        .collect();

    let alpha_f: Vec<f64> = alpha.iter().map(to_f64).collect();
    let mut b = DMatrix::zeros(ell, ell);
    for j in 0..ell {
        for s in 1..=ell {
            let v = rpow(&alpha[j], (ell - s) as i64) * &cj[j] / &alpha[j];
            b[(j, s - 1)] = if s % 2 == 0 { to_f64(&v) } else { -to_f64(&v) };
        }
    }
    let f_over_x = if flat {
        Vec::new()
    } else {
        f_ell
            .div_x()
            .ok_or_else(|| Error::Numeric("F_ℓ(0) ≠ 0".into()))?
            .to_f64_coeffs()
    };
    let num = Numeric {
        alpha: alpha_f,
        r: r.iter().map(to_f64).collect(),
        kappa: kappa.iter().map(to_f64).collect(),
        f_over_x,
        lin_a: to_f64(&lin_a),
        lin_b: to_f64(&lin_b),
        b,
    };
    Ok(AnsatzData {
        mult: g.mult.clone(),
        weights: g,
        flat,
        ell,
        m,
        c,
        alpha,
        r,
        p,
        theta,
        f_ell,
        b0,
        c0,
        lin_a,
        lin_b,
        kappa,
        num,
    })
}

impl AnsatzData {
    pub fn new(a0: i64, raw_weights: &[i64], flat: bool) -> Result<Self> {
        build_ansatz(&GroupedWeights::group(a0, raw_weights)?, flat)
    }

    /// The product expression `(−1)^{ℓ−j}(c/a_j)^{ℓ−2} a_0 ∏_{k≠j}(a_j − a_k)`,
    /// which equals `1/r_j`.
    pub fn rj_product_form(&self, j: usize) -> BigRational {
        let a = &self.weights.distinct;
        let cj = &self.c / int(a[j]);
        let prod = (0..self.ell)
            .filter(|&k| k != j)
            .fold(BigRational::one(), |acc, k| acc * int(a[j] - a[k]));
        let v = rpow(&cj, self.ell as i64 - 2) * int(self.weights.a0) * prod;
        if (self.ell - 1 - j).is_multiple_of(2) { v } else { -v }
    }

    /// `c_j = 1/∏_{k≠j}(α_j − α_k) = (−1)^{ℓ−j} r_j`.
    pub fn cj(&self, j: usize) -> BigRational {
        if (self.ell - 1 - j).is_multiple_of(2) { self.r[j].clone() } else { -self.r[j].clone() }
    }

    /// The exponent-`ℓ` variant `1/(a_0^ℓ c^{ℓ−2})`; agrees with [`Self::c0`] only for ℓ = 2.
    pub fn c0_alternative(&self) -> BigRational {
        BigRational::one() / (rpow(&int(self.weights.a0), self.ell as i64) * rpow(&self.c, self.ell as i64 - 2))
    }

    /// `2b_0 = p′(0)`.
    pub fn is_ricci_flat(&self) -> bool {
        self.lin_a.is_zero()
    }

    /// `a_0 = Σ (n_j + 1) a_j`.
    pub fn ricci_weight_condition(&self) -> bool {
        let s: i64 = self.weights.distinct.iter().zip(&self.mult).map(|(&a, &n)| (n as i64 + 1) * a).sum();
        s == self.weights.a0
    }

    /// Both Vandermonde identities, exactly.
    pub fn vandermonde_holds(&self) -> bool {
        let first = (1..=self.ell).all(|s| {
            let sum = (0..self.ell).fold(BigRational::zero(), |acc, j| {
                acc + rpow(&self.alpha[j], (self.ell - s) as i64) * self.cj(j)
            });
            sum == if s == 1 { BigRational::one() } else { BigRational::zero() }
        });
        let lhs = (0..self.ell).fold(BigRational::zero(), |acc, j| acc + self.cj(j) / &self.alpha[j]);
        let prod = self.alpha.iter().fold(BigRational::one(), |acc, a| acc * a);
        let sign = if self.ell % 2 == 1 { int(1) } else { int(-1) };
        first && lhs == sign / prod
    }

    pub fn alpha_f64(&self) -> &[f64] {
        &self.num.alpha
    }

    pub fn kappa_f64(&self) -> &[f64] {
        &self.num.kappa
    }

    pub fn r_f64(&self) -> &[f64] {
        &self.num.r
    }

    /// `F_ℓ(t)` in floating point.
    pub fn f_ell_f64(&self, t: f64) -> f64 {
        if self.flat {
            let a = &self.num.alpha;
            2.0 * a.iter().zip(&self.mult).map(|(ak, &n)| (t - ak).powi(n as i32 + 1)).product::<f64>()
        } else {
            t * horner(&self.num.f_over_x, t)
        }
    }

    /// The linear part `(a, b)` of `F_ℓ − p`, which is zero for flat data.
    pub fn deformation_f64(&self) -> (f64, f64) {
        if self.flat { (0.0, 0.0) } else { (self.num.lin_a, self.num.lin_b) }
    }

    pub fn lin_coeffs_f64(&self) -> (f64, f64) {
        (self.num.lin_a, self.num.lin_b)
    }

    /// Open interval of `ξ_j` (upper end `None` for the unbounded factor).
    pub fn interval(&self, j: usize) -> (f64, Option<f64>) {
        let a = &self.num.alpha;
        if j + 1 < self.ell {
            (a[j], Some(a[j + 1]))
        } else if self.flat {
            (a[j], None)
        } else {
            (0.0, None)
        }
    }

    fn interval_exact(&self, j: usize) -> (BigRational, Option<BigRational>) {
        if j + 1 < self.ell {
            (self.alpha[j].clone(), Some(self.alpha[j + 1].clone()))
        } else if self.flat {
            (self.alpha[j].clone(), None)
        } else {
            (BigRational::zero(), None)
        }
    }

    pub fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.ell {
            return Err(Error::Domain(format!("expected {} ξ values", self.ell)));
        }
        for (j, &x) in xi.iter().enumerate() {
            let (lo, hi) = self.interval(j);
            if !(x > lo && hi.is_none_or(|h| x < h)) || !x.is_finite() {
                return Err(Error::Domain(format!("ξ_{} = {x} outside its interval", j + 1)));
            }
        }
        Ok(())
    }

    pub fn check_xi_exact(&self, xi: &[BigRational]) -> Result<()> {
        if xi.len() != self.ell {
            return Err(Error::Domain(format!("expected {} ξ values", self.ell)));
        }
        for (j, x) in xi.iter().enumerate() {
            let (lo, hi) = self.interval_exact(j);
            if !(*x > lo && hi.is_none_or(|h| *x < h)) {
                return Err(Error::Domain(format!("ξ_{} outside its interval", j + 1)));
            }
        }
        Ok(())
    }

    // ----- coordinates ---------------------------------------------------

    /// `x_j = ((−1)^{ℓ−j} r_j/α_j) Σ_r (−1)^r σ_r α_j^{ℓ−r}` (with `σ_0 = 1`).
    pub fn sigma_to_x<T: Scalar>(&self, sigma: &[T]) -> Vec<T> {
        (0..self.ell)
            .map(|j| {
                let a = T::from_rat(&self.alpha[j]);
                let mut acc = T::zero();
                let mut pw = T::one();
                // Σ_r (−1)^r σ_r α^{ℓ−r}, accumulated from r = ℓ down to 0.
                for r in (0..=self.ell).rev() {
                    let s = if r == 0 { T::one() } else { sigma[r - 1].clone() };
                    let term = s * pw.clone();
                    acc = if r % 2 == 0 { acc + term } else { acc - term };
                    pw = pw * a.clone();
                }
                T::from_rat(&self.cj(j)) * acc / a
            })
            .collect()
    }

    /// Product form `c_j ∏_k (α_j − ξ_k)/α_j`.
    pub fn xi_to_x<T: Scalar>(&self, xi: &[T]) -> Vec<T> {
        (0..self.ell)
            .map(|j| {
                let a = T::from_rat(&self.alpha[j]);
                let prod = xi.iter().fold(T::one(), |acc, x| acc * (a.clone() - x.clone()));
                T::from_rat(&self.cj(j)) * prod / a
            })
            .collect()
    }

    /// Inverse of [`Self::sigma_to_x`] (exact linear algebra).
    pub fn x_to_sigma_exact(&self, x: &[BigRational]) -> Vec<BigRational> {
        // ∏_k(t − ξ_k) = ∏_k(t − α_k) + Σ_j x_j α_j ∏_{k≠j}(t − α_k): read σ off its coefficients.
        let mut poly = Poly::from_roots(&self.alpha);
        for j in 0..self.ell {
            let others: Vec<BigRational> =
                (0..self.ell).filter(|&k| k != j).map(|k| self.alpha[k].clone()).collect();
            poly = &poly + &Poly::from_roots(&others).scale(&(&x[j] * &self.alpha[j]));
        }
        (1..=self.ell)
            .map(|r| {
                let c = poly.coeff(self.ell - r);
                if r % 2 == 0 { c } else { -c }
            })
            .collect()
    }

    /// `P(t) = ∏_k(t − ξ_k)` evaluated from `x` in Lagrange form.
    fn p_of_x(&self, x: &[f64], t: f64) -> f64 {
        let a = &self.num.alpha;
        let diffs: Vec<f64> = a.iter().map(|ak| t - ak).collect();
        let mut total: f64 = diffs.iter().product();
        for j in 0..self.ell {
            let others: f64 = diffs.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, d)| d).product();
            total += x[j] * a[j] * others;
        }
        total
    }

    /// Recovers `ξ` from `x ∈ P̊_ℓ` (bracketed root finding per interval).
    pub fn x_to_xi(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ell || x.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Domain(format!("x = {x:?} outside the positive orthant")));
        }
        if !self.flat && !(x.iter().sum::<f64>() > 1.0) {
            return Err(Error::Domain(format!("x = {x:?} violates Σx > 1")));
        }
        let f = |t: f64| self.p_of_x(x, t);
        (0..self.ell)
            .map(|j| {
                let (lo, hi) = self.interval(j);
                let hi = match hi {
                    Some(h) => h,
                    None => {
                        let mut h = lo.abs().max(1.0);
                        while f(lo + h) <= 0.0 {
                            h *= 2.0;
                            if !h.is_finite() {
                                return Err(Error::Domain("unbounded root search".into()));
                            }
                        }
                        lo + h
                    }
                };
                brent(f, lo, hi)
            })
            .collect()
    }

    pub fn xi_to_sigma<T: Scalar>(&self, xi: &[T]) -> Vec<T> {
        elementary_symmetric(xi)[1..].to_vec()
    }

    /// Roots of `t^ℓ − σ_1 t^{ℓ−1} + … + (−1)^ℓ σ_ℓ`, one per interval.
    pub fn sigma_to_xi(&self, sigma: &[f64]) -> Result<Vec<f64>> {
        let mut coeffs = vec![0.0; self.ell + 1];
        coeffs[self.ell] = 1.0;
        for (r, s) in sigma.iter().enumerate() {
            let r = r + 1;
            coeffs[self.ell - r] = if r % 2 == 0 { *s } else { -*s };
        }
        let bound = 1.0 + sigma.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let f = |t: f64| horner(&coeffs, t);
        (0..self.ell)
            .map(|j| {
                let (lo, hi) = self.interval(j);
                brent(f, lo, hi.unwrap_or(bound.max(lo + 1.0)))
            })
            .collect()
    }

    // ----- fibred / affine coordinates -----------------------------------

    /// `y = (x, x̂)` from `(x, x^j)`.
    pub fn momenta(&self, x: &[f64], fibres: &[Vec<f64>]) -> Vec<f64> {
        let mut y = x.to_vec();
        for j in 0..self.ell {
            y.extend(fibres[j].iter().map(|v| self.num.kappa[j] * x[j] * v));
        }
        y
    }

    /// `(x, x^j)` from `y = (x, x̂)`.
    pub fn split_momenta(&self, y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let x = y[..self.ell].to_vec();
        let mut off = self.ell;
        let fibres = (0..self.ell)
            .map(|j| {
                let n = self.mult[j];
                let f = y[off..off + n].iter().map(|v| v / (self.num.kappa[j] * x[j])).collect();
                off += n;
                f
            })
            .collect();
        (x, fibres)
    }

    pub fn point_from_momenta(&self, y: &[f64]) -> Result<XiPoint> {
        let (x, fibres) = self.split_momenta(y);
        for f in &fibres {
            if f.iter().any(|v| !(*v > 0.0)) || !(f.iter().sum::<f64>() < 1.0) {
                return Err(Error::Domain(format!("fibre point {f:?} outside the open simplex")));
            }
        }
        Ok(XiPoint { xi: self.x_to_xi(&x)?, fibres })
    }

    pub fn momenta_of_point(&self, pt: &XiPoint) -> Vec<f64> {
        self.momenta(&self.xi_to_x(&pt.xi), &pt.fibres)
    }

    /// `x̃ = (x̃^0_1..x̃^0_ℓ, x̃^1_*, …)`.
    pub fn x_to_xtilde(&self, x: &[f64], fibres: &[Vec<f64>]) -> Vec<f64> {
        let mut base = Vec::with_capacity(self.m);
        let mut rest = Vec::new();
        for j in 0..self.ell {
            base.push(x[j] * (1.0 - fibres[j].iter().sum::<f64>()));
            rest.extend(fibres[j].iter().map(|v| x[j] * v));
        }
        base.extend(rest);
        base
    }

    pub fn xtilde_to_x(&self, xt: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut off = self.ell;
        let mut x = Vec::with_capacity(self.ell);
        let mut fibres = Vec::with_capacity(self.ell);
        for j in 0..self.ell {
            let block = &xt[off..off + self.mult[j]];
            off += self.mult[j];
            let xj = xt[j] + block.iter().sum::<f64>();
            fibres.push(block.iter().map(|v| v / xj).collect());
            x.push(xj);
        }
        (x, fibres)
    }

    /// Linear map `L` with `x̃ = L·y`.
    pub fn xtilde_matrix(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.m, self.m);
        let mut off = self.ell;
        for j in 0..self.ell {
            l[(j, j)] = 1.0;
            for k in 0..self.mult[j] {
                let inv = 1.0 / self.num.kappa[j];
                l[(off + k, off + k)] = inv;
                l[(j, off + k)] = -inv;
            }
            off += self.mult[j];
        }
        l
    }

    // ----- Gram matrices ------------------------------------------------

    fn f_ell_eval<T: Scalar>(&self, t: &T) -> T {
        let coeffs = self.f_ell.div_x().expect("F_ℓ(0) = 0 for non-flat data");
        let g = coeffs.coeffs().iter().rev().fold(T::zero(), |acc, c| acc * t.clone() + T::from_rat(c));
        g * t.clone()
    }

    /// `w_j = Θ(ξ_j)F_j(ξ_j)/(p(ξ_j)Δ_j)`.
    pub fn vertical_weights<T: Scalar>(&self, xi: &[T]) -> Result<Vec<T>> {
        let alpha: Vec<T> = self.alpha.iter().map(T::from_rat).collect();
        (0..self.ell)
            .map(|j| {
                let x = &xi[j];
                let delta = (0..self.ell)
                    .filter(|&k| k != j)
                    .fold(T::one(), |acc, k| acc * (x.clone() - xi[k].clone()));
                if delta.is_zero() {
                    return Err(Error::Domain("coincident ξ values".into()));
                }
                if j + 1 < self.ell || self.flat {
                    let theta = alpha.iter().fold(T::one() + T::one(), |acc, a| acc * (x.clone() - a.clone()));
                    Ok(theta / delta)
                } else {
                    let p_over_theta = alpha.iter().zip(&self.mult).fold(T::one(), |acc, (a, &n)| {
                        (0..n).fold(acc, |acc, _| acc * (x.clone() - a.clone()))
                    });
                    Ok(self.f_ell_eval(x) / (p_over_theta * delta))
                }
            })
            .collect()
    }

    /// `H_rs = Σ_j w_j σ_{r−1}(ξ̂_j) σ_{s−1}(ξ̂_j)` in the basis `K_1..K_ℓ`.
    pub fn vertical_gram<T: Scalar>(&self, xi: &[T]) -> Result<Vec<Vec<T>>> {
        let w = self.vertical_weights(xi)?;
        let mut h = vec![vec![T::zero(); self.ell]; self.ell];
        for j in 0..self.ell {
            let others: Vec<T> = (0..self.ell).filter(|&k| k != j).map(|k| xi[k].clone()).collect();
            let e = elementary_symmetric(&others);
            for r in 0..self.ell {
                for s in 0..self.ell {
                    h[r][s] = h[r][s].clone() + w[j].clone() * e[r].clone() * e[s].clone();
                }
            }
        }
        Ok(h)
    }

    /// Gram of `X_1..X_ℓ`, i.e. `B·H·Bᵀ`.
    ///
    /// Row `i` of `B` applied to `(σ_{r−1}(ξ̂_k))_r` is `−x_i/(α_i − ξ_k)`, so the
    /// sum is assembled from these products directly.
    pub fn gram_xx(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let w = self.vertical_weights(xi)?;
        let x = self.xi_to_x(xi);
        let a = &self.num.alpha;
        let mut g = DMatrix::zeros(self.ell, self.ell);
        for (k, wk) in w.iter().enumerate() {
            let u: Vec<f64> = (0..self.ell).map(|i| x[i] / (a[i] - xi[k])).collect();
            for i in 0..self.ell {
                for j in 0..self.ell {
                    g[(i, j)] += wk * u[i] * u[j];
                }
            }
        }
        Ok(g)
    }

    /// `B·H·Bᵀ` evaluated literally; agrees with [`Self::gram_xx`].
    pub fn gram_xx_matrix_form(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.vertical_gram(xi)?;
        let h = DMatrix::from_fn(self.ell, self.ell, |i, j| h[i][j]);
        Ok(&self.num.b * h * self.num.b.transpose())
    }

    /// Full `m×m` Gram matrix in the basis `(X_j, X̂^j_k)`.
    pub fn full_gram(&self, pt: &XiPoint) -> Result<DMatrix<f64>> {
        let gxx = self.gram_xx(&pt.xi)?;
        let x = self.xi_to_x(&pt.xi);
        let m = self.m;
        let ell = self.ell;
        let mut g = DMatrix::zeros(m, m);
        g.view_mut((0, 0), (ell, ell)).copy_from(&gxx);
        // Column index of each lifted field: (owner block j, fibre coordinate value).
        let mut lifted: Vec<(usize, usize)> = Vec::new();
        for j in 0..ell {
            for k in 0..self.mult[j] {
                lifted.push((j, k));
            }
        }
        let kap = &self.num.kappa;
        for (a, &(j, k)) in lifted.iter().enumerate() {
            let ua = kap[j] * pt.fibres[j][k];
            for i in 0..ell {
                let v = ua * gxx[(i, j)];
                g[(i, ell + a)] = v;
                g[(ell + a, i)] = v;
            }
            for (b, &(jp, p)) in lifted.iter().enumerate() {
                let ub = kap[jp] * pt.fibres[jp][p];
                let mut v = ua * ub * gxx[(j, jp)];
                if j == jp {
                    let xf = &pt.fibres[j];
                    let fs = (2.0 / self.num.r[j]) * (if k == p { xf[k] } else { 0.0 } - xf[k] * xf[p]);
                    v += kap[j] * x[j] * fs;
                }
                g[(ell + a, ell + b)] = v;
            }
        }
        Ok(g)
    }

    /// Gram matrix in the `x̃` coordinates: `L·G·Lᵀ`.
    pub fn xtilde_gram(&self, pt: &XiPoint) -> Result<DMatrix<f64>> {
        let l = self.xtilde_matrix();
        Ok(&l * self.full_gram(pt)? * l.transpose())
    }

    // ----- potentials ----------------------------------------------------

    /// `p(t)/(Θ(t)F_j(t))` for factor `j`.
    fn potential_kernel(&self, j: usize, t: f64) -> f64 {
        let a = &self.num.alpha;
        let theta: f64 = 2.0 * a.iter().map(|ak| t - ak).product::<f64>();
        if j + 1 < self.ell || self.flat {
            1.0 / theta
        } else {
            let p_over_theta: f64 = a.iter().zip(&self.mult).map(|(ak, &n)| (t - ak).powi(n as i32)).product();
            p_over_theta / (t * horner(&self.num.f_over_x, t))
        }
    }

    /// Base point of the potential integral on factor `j`.
    fn base_point(&self, j: usize) -> f64 {
        match self.interval(j) {
            (lo, Some(hi)) => 0.5 * (lo + hi),
            (lo, None) if self.flat => lo + 1.0,
            _ => 1.0,
        }
    }

    /// `Ũ^0(x) = −Σ_j ∫_{β_j}^{ξ_j} ∏_k(t − ξ_k) p(t)/(Θ(t)F_j(t)) dt`.
    pub fn base_potential(&self, xi: &[f64], opts: QuadOptions) -> Result<f64> {
        let mut total = 0.0;
        for j in 0..self.ell {
            let f = |t: f64| xi.iter().map(|x| t - x).product::<f64>() * self.potential_kernel(j, t);
            total -= integrate(f, self.base_point(j), xi[j], opts)?.value;
        }
        Ok(total)
    }

    /// `U^j = (r_j/2)(Σ x log x + (1 − Σx) log(1 − Σx))`.
    pub fn fibre_potential(&self, j: usize, xf: &[f64]) -> f64 {
        let xlogx = |v: f64| v * v.ln();
        let s: f64 = xf.iter().sum();
        0.5 * self.num.r[j] * (xf.iter().map(|&v| xlogx(v)).sum::<f64>() + xlogx(1.0 - s))
    }

    /// `U_a(y) = Ũ^0(x) + Σ_j κ_j x_j U^j(x^j)` in momenta `y = (x, x̂)`.
    pub fn symplectic_potential(&self, y: &[f64], opts: QuadOptions) -> Result<f64> {
        let pt = self.point_from_momenta(y)?;
        let mut u = self.base_potential(&pt.xi, opts)?;
        for j in 0..self.ell {
            if self.mult[j] > 0 {
                u += self.num.kappa[j] * y[j] * self.fibre_potential(j, &pt.fibres[j]);
            }
        }
        Ok(u)
    }

    /// `σ_1` at `ξ = α`, the vertex value used by the flat potential.
    pub fn sigma1_alpha(&self) -> f64 {
        self.num.alpha.iter().sum()
    }

    /// `H^f = ½(σ_1 − σ_1^α)`.
    pub fn flat_kahler_potential(&self, xi: &[f64]) -> f64 {
        0.5 * (xi.iter().sum::<f64>() - self.sigma1_alpha())
    }

    /// `H = H^f − ½∫_λ^{ξ_ℓ} (at + b)/F_ℓ(t) dt`.
    pub fn kahler_potential(&self, xi: &[f64], lambda: f64, opts: QuadOptions) -> Result<f64> {
        let hf = self.flat_kahler_potential(xi);
        if self.flat {
            return Ok(hf);
        }
        let (a, b) = (self.num.lin_a, self.num.lin_b);
        let f = |t: f64| (a * t + b) / (t * horner(&self.num.f_over_x, t));
        Ok(hf - 0.5 * integrate(f, lambda, xi[self.ell - 1], opts)?.value)
    }
}

/// The profile `Θ(ξ) = (2/r) P_α(ξ)/ξ^n` of the Calabi ansatz on `O(−r) → CP^n`.
#[derive(Clone, Debug)]
pub struct CalabiProfile {
    pub r: BigRational,
    pub n: usize,
    pub alpha: BigRational,
    /// `P_α(x) = x^{n+1} + (r−n−1)α^n x + (n−r)α^{n+1}`.
    pub defining: Poly,
}

pub fn calabi_profile(r: &BigRational, n: usize, alpha: &BigRational) -> CalabiProfile {
    let nn = int(n as i64);
    let an = rpow(alpha, n as i64);
    let mut coeffs = vec![BigRational::zero(); n + 2];
    coeffs[n + 1] = BigRational::one();
    coeffs[1] = &coeffs[1] + (r - &nn - int(1)) * &an;
    coeffs[0] = &coeffs[0] + (&nn - r) * &an * alpha;
    CalabiProfile { r: r.clone(), n, alpha: alpha.clone(), defining: Poly::new(coeffs) }
}

impl CalabiProfile {
    /// `ξ^n Θ(ξ) = (2/r) P_α(ξ)` as a polynomial.
    pub fn xi_n_theta(&self) -> Poly {
        self.defining.scale(&(int(2) / &self.r))
    }

    pub fn eval(&self, xi: &BigRational) -> BigRational {
        self.xi_n_theta().eval(xi) / rpow(xi, self.n as i64)
    }

    pub fn eval_f64(&self, xi: f64) -> f64 {
        self.xi_n_theta().eval_f64(xi) / xi.powi(self.n as i32)
    }

    pub fn derivative_at(&self, xi: &BigRational) -> BigRational {
        let num = self.xi_n_theta();
        let n = self.n as i64;
        (num.derivative().eval(xi) * xi - int(n) * num.eval(xi)) / rpow(xi, n + 1)
    }

    /// `ξ^n · Scal = š ξ^{n−1} − (ξ^n Θ)″` with `š = 2n(n+1)/r`, as an exact polynomial.
    pub fn scalar_curvature_numerator(&self) -> Poly {
        let n = self.n;
        let s = int((2 * n * (n + 1)) as i64) / &self.r;
        let lhs = Poly::monomial(s, n - 1);
        &lhs - &self.xi_n_theta().derivative().derivative()
    }

    /// `P_α(x)/(x − α) = Σ_{i=0}^{n−1} x^{n−i} α^i + (r − n) α^n`, exactly.
    pub fn factored_quotient(&self) -> Poly {
        let mut coeffs = vec![BigRational::zero(); self.n + 1];
        for i in 0..self.n {
            coeffs[self.n - i] = rpow(&self.alpha, i as i64);
        }
        coeffs[0] = (&self.r - int(self.n as i64)) * rpow(&self.alpha, self.n as i64);
        Poly::new(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn five_two_three_data() {
        let d = AnsatzData::new(5, &[2, 3], false).unwrap();
        assert_eq!(d.alpha, vec![int(-15), int(-10)]);
        assert_eq!(d.r, vec![rat(1, 5), rat(1, 5)]);
        assert_eq!(d.b0, int(25));
        assert_eq!(d.f_ell, Poly::new(vec![int(0), int(50), int(2)]));
        assert!(d.is_ricci_flat() && d.ricci_weight_condition());
        assert_eq!(d.lin_b, int(-300));
        for j in 0..2 {
            assert_eq!(d.rj_product_form(j), BigRational::one() / &d.r[j]);
        }
    }

    #[test]
    fn seven_two_three_data() {
        let d = AnsatzData::new(7, &[2, 3], false).unwrap();
        assert_eq!(d.alpha, vec![int(-21), int(-14)]);
        assert_eq!(d.b0, int(49));
        assert_eq!(d.f_ell, Poly::new(vec![int(0), int(98), int(2)]));
        assert_eq!(d.lin_a, int(28));
        assert!(!d.is_ricci_flat() && !d.ricci_weight_condition());
    }

    #[test]
    fn flat_calabi_case() {
        let d = AnsatzData::new(4, &[1, 1, 1], true).unwrap();
        assert_eq!(d.f_ell, Poly::linear_root(&int(-4)).pow(3).scale(&int(2)));
        assert_eq!(d.f_ell, d.p);
    }

    #[test]
    fn moment_coordinates_worked_point() {
        let d = AnsatzData::new(5, &[2, 3], false).unwrap();
        let xi = [int(-12), int(5)];
        let sigma = d.xi_to_sigma(&xi);
        assert_eq!(sigma, vec![int(-7), int(-60)]);
        let x = d.sigma_to_x(&sigma);
        assert_eq!(x, vec![rat(4, 5), rat(3, 5)]);
        assert_eq!(d.xi_to_x(&xi), x);
        assert_eq!(d.x_to_sigma_exact(&x), sigma);
        let back = d.sigma_to_xi(&[-7.0, -60.0]).unwrap();
        assert!((back[0] + 12.0).abs() < 1e-13 && (back[1] - 5.0).abs() < 1e-13);
        let back = d.x_to_xi(&[0.8, 0.6]).unwrap();
        assert!((back[0] + 12.0).abs() < 1e-13 && (back[1] - 5.0).abs() < 1e-13);
    }

    #[test]
    fn vertical_gram_worked_value() {
        let d = AnsatzData::new(7, &[2, 3], false).unwrap();
        let xi = [int(-18), int(5)];
        assert_eq!(d.vertical_weights(&xi).unwrap(), vec![rat(24, 23), rat(540, 23)]);
        assert_eq!(d.vertical_gram(&xi).unwrap()[0][0], rat(564, 23));
    }

    #[test]
    fn gram_product_form_matches_matrix_form() {
        for (a0, w, flat) in [(7, vec![2, 3], false), (7, vec![2, 2, 3], false), (4, vec![1, 2, 3], true)] {
            let d = AnsatzData::new(a0, &w, flat).unwrap();
            let xi: Vec<f64> = (0..d.ell)
                .map(|j| match d.interval(j) {
                    (lo, Some(hi)) => 0.3 * lo + 0.7 * hi,
                    (lo, None) => lo + 2.5,
                })
                .collect();
            let g = d.gram_xx(&xi).unwrap();
            let h = d.gram_xx_matrix_form(&xi).unwrap();
            assert!((&g - &h).norm() <= 1e-12 * g.norm(), "{g} vs {h}");
        }
    }

    #[test]
    fn kahler_potential_flat_value() {
        let d = AnsatzData::new(5, &[2, 3], false).unwrap();
        assert_eq!(d.flat_kahler_potential(&[-12.0, 5.0]), 9.0);
        let f = AnsatzData::new(5, &[2, 3], true).unwrap();
        assert_eq!(f.kahler_potential(&[-12.0, 5.0], 1.0, QuadOptions::default()).unwrap(), 9.0);
    }

    #[test]
    fn calabi_profile_boundary_values() {
        let prof = calabi_profile(&int(3), 2, &int(1));
        assert!(prof.eval(&int(1)).is_zero());
        assert_eq!(prof.derivative_at(&int(1)), int(2));
        assert!(prof.scalar_curvature_numerator().is_zero());
        let (q, rem) = prof.defining.div_rem(&Poly::linear_root(&int(1)));
        assert!(rem.is_zero());
        assert_eq!(q, prof.factored_quotient());
        let flat = calabi_profile(&int(3), 2, &int(0));
        assert_eq!(flat.eval(&int(6)), int(4));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(AnsatzData::new(5, &[1], false).is_err());
        assert!(AnsatzData::new(5, &[0, 2], false).is_err());
    }
}
