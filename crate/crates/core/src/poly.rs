//! Dense univariate polynomials with exact rational coefficients, plus the
//! elementary symmetric functions used for moment coordinates.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Polynomial stored as coefficients in increasing degree, without trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `c·x^k`.
    pub fn monomial(c: BigRational, k: usize) -> Self {
        let mut v = vec![BigRational::zero(); k + 1];
        v[k] = c;
        Poly::new(v)
    }

    /// `x - root`.
    pub fn linear_root(root: &BigRational) -> Self {
        Poly::new(vec![-root.clone(), BigRational::one()])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots<'a>(roots: impl IntoIterator<Item = &'a BigRational>) -> Self {
        roots
            .into_iter()
            .fold(Poly::constant(BigRational::one()), |acc, r| {
                &acc * &Poly::linear_root(r)
            })
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        horner(&self.to_f64_coeffs(), x)
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(crate::to_f64).collect()
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Poly::constant(BigRational::one()), |acc, _| &acc * self)
    }

    /// Exact division by `x` (requires a zero constant term).
    pub fn div_x(&self) -> Option<Self> {
        match self.coeffs.first() {
            None => Some(Poly::zero()),
            Some(c) if c.is_zero() => Some(Poly::new(self.coeffs[1..].to_vec())),
            Some(_) => None,
        }
    }

    /// Euclidean division; returns `(quotient, remainder)`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        let n = rem.len();
        if n <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); n - dd];
        for k in (0..n - dd).rev() {
            let c = &rem[k + dd] / &lead;
            for (i, dc) in d.coeffs.iter().enumerate() {
                rem[k + i] = &rem[k + i] - &c * dc;
            }
            q[k] = c;
        }
        (Poly::new(q), Poly::new(rem))
    }
}

/// Horner evaluation of float coefficients in increasing degree.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => crate::rat_string(c),
                1 => format!("{}*x", crate::rat_string(c)),
                _ => format!("{}*x^{}", crate::rat_string(c), k),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Elementary symmetric functions `e_0..e_n` of the inputs, generic over any
/// ring-like scalar.
pub fn elementary_symmetric<T>(xs: &[T]) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    let mut e = vec![T::zero(); xs.len() + 1];
    e[0] = T::one();
    for (i, x) in xs.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] = e[k].clone() + e[k - 1].clone() * x.clone();
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{int, rat};

    #[test]
    fn symmetric_functions_of_two_points() {
        let e = elementary_symmetric(&[-12.0, 5.0]);
        assert_eq!(e, vec![1.0, -7.0, -60.0]);
    }

    #[test]
    fn from_roots_and_eval() {
        let p = Poly::from_roots(&[int(-15), int(-10)]);
        assert_eq!(p.coeffs(), &[int(150), int(25), int(1)]);
        assert_eq!(p.eval(&int(-10)), int(0));
        assert_eq!(p.derivative().coeffs(), &[int(25), int(2)]);
    }

    #[test]
    fn division_recovers_factor() {
        let a = Poly::from_roots(&[int(1), int(2), rat(1, 3)]);
        let (q, r) = a.div_rem(&Poly::linear_root(&int(2)));
        assert!(r.is_zero());
        assert_eq!(q, Poly::from_roots(&[int(1), rat(1, 3)]));
    }

    #[test]
    fn display_is_readable() {
        let p = Poly::new(vec![int(0), rat(1, 2), int(3)]);
        assert_eq!(p.to_string(), "1/2*x + 3*x^2");
    }
}
