//! Weight vectors `(a_0; a_1, …, a_m)`, their congruence classes and the
//! cyclic groups and chart singularities they determine.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeightVector {
    pub a0: i64,
    pub rest: Vec<i64>,
}

impl WeightVector {
    pub fn new(a0: i64, rest: Vec<i64>) -> Self {
        WeightVector { a0, rest }
    }

    /// Builds from a flat tuple `(a_0, a_1, …, a_m)`.
    pub fn from_slice(all: &[i64]) -> Result<Self> {
        match all.split_first() {
            Some((&a0, rest)) if !rest.is_empty() => Ok(WeightVector::new(a0, rest.to_vec())),
            _ => Err(Error::InvalidWeights("need at least a0 and one weight".into())),
        }
    }

    pub fn m(&self) -> usize {
        self.rest.len()
    }

    /// Flat tuple `(a_0, a_1, …, a_m)`.
    pub fn to_vec(&self) -> Vec<i64> {
        std::iter::once(self.a0).chain(self.rest.iter().copied()).collect()
    }

    /// True for `(b_0, 1, …, 1)`: the quotient has a smooth resolution by a
    /// single non-compact weighted projective space.
    pub fn is_basic(&self) -> bool {
        self.rest.iter().all(|&x| x == 1)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rest: Vec<String> = self.rest.iter().map(|x| x.to_string()).collect();
        write!(f, "({};{})", self.a0, rest.join(","))
    }
}

/// Result of [`validate_weight_vector`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    pub positive: bool,
    pub gcd_one: bool,
    pub length_ok: bool,
    pub pairwise_coprime: bool,
    pub isolated: bool,
    pub smooth_total_space: bool,
}

impl Validity {
    /// A weight vector in the strict sense: positive entries, overall gcd 1, m ≥ 2.
    pub fn valid(&self) -> bool {
        self.positive && self.gcd_one && self.length_ok
    }
}

fn gcd_all(xs: &[i64]) -> i64 {
    xs.iter().fold(0i64, |g, &x| g.gcd(&x))
}

fn pairwise_coprime(xs: &[i64]) -> bool {
    xs.iter()
        .enumerate()
        .all(|(i, a)| xs[i + 1..].iter().all(|b| a.gcd(b) == 1))
}

pub fn validate_weight_vector(w: &WeightVector) -> Validity {
    let all = w.to_vec();
    Validity {
        positive: all.iter().all(|&x| x > 0),
        gcd_one: gcd_all(&all) == 1,
        length_ok: w.m() >= 2,
        pairwise_coprime: pairwise_coprime(&all),
        isolated: w.rest.iter().all(|x| x.gcd(&w.a0) == 1),
        smooth_total_space: w.is_basic(),
    }
}

/// Minimal positive residues `(b_0; r_1, …, r_m)` with `r_i ∈ [1, b_0]`.
pub fn residues(b: &WeightVector) -> Result<WeightVector> {
    if b.a0 <= 1 {
        return Err(Error::TrivialGroup);
    }
    let rest = b
        .rest
        .iter()
        .map(|&x| {
            let r = x.mod_floor(&b.a0);
            if r == 0 { b.a0 } else { r }
        })
        .collect();
    Ok(WeightVector::new(b.a0, rest))
}

/// Group of the orbifold chart at the point fixed by slot `i` (1-based):
/// `(a_i; −a_0, a_1, …, â_i, …, a_m)`.
pub fn chart_group(a: &WeightVector, i: usize) -> Result<WeightVector> {
    if i == 0 || i > a.m() {
        return Err(Error::SlotOutOfRange { slot: i, m: a.m() });
    }
    let mut rest = Vec::with_capacity(a.m());
    rest.push(-a.a0);
    rest.extend(
        a.rest
            .iter()
            .enumerate()
            .filter(|(k, _)| k + 1 != i)
            .map(|(_, &x)| x),
    );
    Ok(WeightVector::new(a.rest[i - 1], rest))
}

/// Singular points of `CP^m_{−a_0, a_1, …, a_m}`: one per slot with `a_i > 1`.
pub fn singular_points(a: &WeightVector) -> Result<Vec<(usize, WeightVector)>> {
    if !pairwise_coprime(&a.to_vec()) {
        return Err(Error::NotIsolated(format!("{a} is not pairwise coprime")));
    }
    (1..=a.m())
        .filter(|&i| a.rest[i - 1] > 1)
        .map(|i| chart_group(a, i).map(|c| (i, c)))
        .collect()
}

/// The cyclic group `Γ_a ⊂ U(m)` generated by `diag(ζ^{a_1}, …, ζ^{a_m})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicGroupSpec {
    pub order: i64,
    pub exponents: Vec<i64>,
}

impl CyclicGroupSpec {
    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    /// Fixed point set of every non-identity element is the origin.
    pub fn is_isolated(&self) -> bool {
        self.exponents.iter().all(|e| e.gcd(&self.order) == 1)
    }
}

pub fn gamma_group(a: &WeightVector) -> CyclicGroupSpec {
    let order = a.a0.max(1);
    CyclicGroupSpec {
        order,
        exponents: a.rest.iter().map(|x| x.mod_floor(&order)).collect(),
    }
}

/// Weights `(a_0; a_1 < … < a_ℓ)` with multiplicities `n_j`: weight `a_j`
/// occurs `n_j + 1` times in the raw list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupedWeights {
    pub a0: i64,
    pub distinct: Vec<i64>,
    pub mult: Vec<usize>,
}

impl GroupedWeights {
    /// Groups a raw weight list (any order, repeats allowed).
    pub fn group(a0: i64, raw: &[i64]) -> Result<Self> {
        if a0 <= 0 || raw.iter().any(|&x| x <= 0) {
            return Err(Error::InvalidWeights("weights must be positive".into()));
        }
        if raw.is_empty() {
            return Err(Error::InvalidWeights("at least one weight is required".into()));
        }
        let mut sorted = raw.to_vec();
        sorted.sort_unstable();
        let mut distinct: Vec<i64> = Vec::new();
        let mut mult: Vec<usize> = Vec::new();
        for x in sorted {
            if distinct.last() == Some(&x) {
                *mult.last_mut().unwrap() += 1;
            } else {
                distinct.push(x);
                mult.push(0);
            }
        }
        Ok(GroupedWeights { a0, distinct, mult })
    }

    /// Builds from distinct weights and explicit multiplicities.
    pub fn with_multiplicities(a0: i64, distinct: Vec<i64>, mult: Vec<usize>) -> Result<Self> {
        if distinct.len() != mult.len() {
            return Err(Error::InvalidWeights("one multiplicity per weight".into()));
        }
        if a0 <= 0 || distinct.iter().any(|&x| x <= 0) {
            return Err(Error::InvalidWeights("weights must be positive".into()));
        }
        if distinct.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidWeights("distinct weights must be strictly increasing".into()));
        }
        Ok(GroupedWeights { a0, distinct, mult })
    }

    pub fn ell(&self) -> usize {
        self.distinct.len()
    }

    /// Complex dimension `m = ℓ + Σ n_j`.
    pub fn m(&self) -> usize {
        self.ell() + self.mult.iter().sum::<usize>()
    }

    /// `c = a_0 a_1 ⋯ a_ℓ` over the distinct weights.
    pub fn c(&self) -> i64 {
        self.a0 * self.distinct.iter().product::<i64>()
    }

    /// The raw list with repeats, ascending.
    pub fn raw(&self) -> Vec<i64> {
        self.distinct
            .iter()
            .zip(&self.mult)
            .flat_map(|(&a, &n)| std::iter::repeat_n(a, n + 1))
            .collect()
    }

    pub fn weight_vector(&self) -> WeightVector {
        WeightVector::new(self.a0, self.raw())
    }
}

impl fmt::Display for GroupedWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.weight_vector())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(all: &[i64]) -> WeightVector {
        WeightVector::from_slice(all).unwrap()
    }

    #[test]
    fn validity_examples() {
        let v = validate_weight_vector(&w(&[5, 3, 2, 1]));
        assert!(v.valid() && v.pairwise_coprime && v.isolated && !v.smooth_total_space);
        assert!(validate_weight_vector(&w(&[7, 1, 1, 1])).smooth_total_space);
        assert!(!validate_weight_vector(&w(&[4, 2, 2])).valid());
    }

    #[test]
    fn residue_examples() {
        assert_eq!(residues(&w(&[2, -5, 3, 1])).unwrap(), w(&[2, 1, 1, 1]));
        assert_eq!(residues(&w(&[3, -5, 2, 1])).unwrap(), w(&[3, 1, 2, 1]));
        for k in -3..4 {
            assert_eq!(residues(&w(&[7, 7 * k + 2, 7 * k + 3])).unwrap(), w(&[7, 2, 3]));
        }
        assert_eq!(residues(&w(&[1, 2, 3])), Err(Error::TrivialGroup));
    }

    #[test]
    fn chart_examples() {
        let a = w(&[5, 3, 2, 1]);
        assert_eq!(chart_group(&a, 1).unwrap(), w(&[3, -5, 2, 1]));
        assert_eq!(chart_group(&a, 2).unwrap(), w(&[2, -5, 3, 1]));
        assert_eq!(chart_group(&w(&[4, 1, 1]), 2).unwrap().a0, 1);
        assert!(chart_group(&a, 4).is_err());
    }

    #[test]
    fn singular_point_examples() {
        let s = singular_points(&w(&[5, 3, 2, 1])).unwrap();
        assert_eq!(s, vec![(1, w(&[3, -5, 2, 1])), (2, w(&[2, -5, 3, 1]))]);
        assert_eq!(singular_points(&w(&[3, 1, 2, 1])).unwrap(), vec![(2, w(&[2, -3, 1, 1]))]);
        assert!(singular_points(&w(&[9, 1, 1, 1])).unwrap().is_empty());
        assert!(singular_points(&w(&[6, 2, 3])).is_err());
    }

    #[test]
    fn grouping() {
        let g = GroupedWeights::group(7, &[1, 1, 1]).unwrap();
        assert_eq!((g.ell(), g.m(), g.c()), (1, 3, 7));
        let g = GroupedWeights::group(5, &[3, 2]).unwrap();
        assert_eq!((g.distinct.clone(), g.mult.clone(), g.c()), (vec![2, 3], vec![0, 0], 30));
        assert_eq!(GroupedWeights::group(9, &[2, 3, 2]).unwrap().raw(), vec![2, 2, 3]);
        assert!(GroupedWeights::group(5, &[0, 2]).is_err());
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_group(&w(&[5, 2, 3]));
        assert_eq!((g.order, g.exponents.clone()), (5, vec![2, 3]));
        assert!(g.is_isolated());
        assert!(gamma_group(&w(&[2, 1, 1, 1])).is_isolated());
        assert!(gamma_group(&w(&[1, 1, 1])).is_trivial());
    }
}
