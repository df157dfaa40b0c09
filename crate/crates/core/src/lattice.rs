//! Integer lattices given by generators, Hermite normal form and indices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// A lattice in `Q^n` spanned by rational generator vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub dim: usize,
    pub generators: Vec<Vec<BigRational>>,
}

impl Lattice {
    pub fn new(dim: usize, generators: Vec<Vec<BigRational>>) -> Result<Self> {
        if generators.iter().any(|g| g.len() != dim) {
            return Err(Error::Lattice("generator of wrong length".into()));
        }
        Ok(Lattice { dim, generators })
    }

    pub fn from_integers(dim: usize, generators: &[Vec<i64>]) -> Result<Self> {
        Lattice::new(
            dim,
            generators
                .iter()
                .map(|g| g.iter().map(|&x| crate::int(x)).collect())
                .collect(),
        )
    }

    /// The standard lattice `Z^n`.
    pub fn standard(dim: usize) -> Self {
        let gens = (0..dim)
            .map(|i| (0..dim).map(|j| crate::int((i == j) as i64)).collect())
            .collect();
        Lattice { dim, generators: gens }
    }

    fn common_denominator(&self) -> BigInt {
        self.generators
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
    }
}

/// Row-style Hermite normal form of an integer matrix: returns the nonzero
/// rows (upper triangular, positive pivots, entries above pivots reduced).
pub fn hermite_normal_form(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut pivot_row = 0;
    for col in 0..ncols {
        if pivot_row >= a.len() {
            break;
        }
        // Repeated gcd elimination below the pivot.
        loop {
            let nz: Vec<usize> = (pivot_row..a.len()).filter(|&r| !a[r][col].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let best = *nz
                .iter()
                .min_by(|&&x, &&y| a[x][col].abs().cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(pivot_row, best);
            let mut done = true;
            for r in pivot_row + 1..a.len() {
                if a[r][col].is_zero() {
                    continue;
                }
                let q = a[r][col].div_floor(&a[pivot_row][col]);
                let pr = a[pivot_row].clone();
                for (x, p) in a[r].iter_mut().zip(pr.iter()) {
                    *x -= &q * p;
                }
                if !a[r][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[pivot_row][col].is_zero() {
            continue;
        }
        if a[pivot_row][col].is_negative() {
            for x in a[pivot_row].iter_mut() {
                *x = -x.clone();
            }
        }
        for r in 0..pivot_row {
            let q = a[r][col].div_floor(&a[pivot_row][col]);
            let pr = a[pivot_row].clone();
            for (x, p) in a[r].iter_mut().zip(pr.iter()) {
                *x -= &q * p;
            }
        }
        pivot_row += 1;
    }
    a.truncate(pivot_row);
    a
}

fn scaled_integer_rows(l: &Lattice, scale: &BigInt) -> Vec<Vec<BigInt>> {
    let s = BigRational::from_integer(scale.clone());
    l.generators
        .iter()
        .map(|g| g.iter().map(|q| (q * &s).to_integer()).collect())
        .collect()
}

/// Determinant of a square integer matrix (fraction-free Bareiss elimination).
pub fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Index `[super : sub]`, computed from Hermite normal forms of both lattices.
pub fn lattice_index(sub: &Lattice, sup: &Lattice) -> Result<BigInt> {
    if sub.dim != sup.dim {
        return Err(Error::Lattice("dimension mismatch".into()));
    }
    let n = sub.dim;
    let d = sub.common_denominator().lcm(&sup.common_denominator());
    let hs = hermite_normal_form(&scaled_integer_rows(sub, &d));
    let hp = hermite_normal_form(&scaled_integer_rows(sup, &d));
    if hs.len() != n || hp.len() != n {
        return Err(Error::Lattice(format!(
            "rank deficient generators (ranks {} and {}, ambient {n})",
            hs.len(),
            hp.len()
        )));
    }
    // Containment: every sub basis vector reduces to zero against the super HNF.
    for row in &hs {
        let mut v = row.clone();
        let mut col = 0;
        for prow in &hp {
            while prow[col].is_zero() {
                col += 1;
            }
            let (q, r) = v[col].div_rem(&prow[col]);
            if !r.is_zero() {
                return Err(Error::Lattice("sub is not contained in super".into()));
            }
            for (x, p) in v.iter_mut().zip(prow.iter()) {
                *x -= &q * p;
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            return Err(Error::Lattice("sub is not contained in super".into()));
        }
    }
    let det = |h: &Vec<Vec<BigInt>>| determinant(h).abs();
    Ok(det(&hs) / det(&hp))
}

/// Gcd of all maximal minors of an integer generator matrix (an independent
/// route to the index of the span inside `Z^n`).
pub fn maximal_minor_gcd(rows: &[Vec<BigInt>]) -> BigInt {
    fn walk(rows: &[Vec<BigInt>], n: usize, start: usize, chosen: &mut Vec<usize>, g: &mut BigInt) {
        if chosen.len() == n {
            let sub: Vec<Vec<BigInt>> = chosen.iter().map(|&i| rows[i].clone()).collect();
            *g = g.gcd(&determinant(&sub));
            return;
        }
        for i in start..rows.len() {
            chosen.push(i);
            walk(rows, n, i + 1, chosen, g);
            chosen.pop();
        }
    }
    let n = rows.first().map_or(0, |r| r.len());
    let mut g = BigInt::zero();
    walk(rows, n, 0, &mut Vec::new(), &mut g);
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn index_of_weighted_lattice() {
        let sub = Lattice::from_integers(2, &[vec![6, 6], vec![15, 0], vec![0, 10]]).unwrap();
        assert_eq!(lattice_index(&sub, &Lattice::standard(2)).unwrap(), BigInt::from(30));
        let g = maximal_minor_gcd(&bi(&[&[6, 6], &[15, 0], &[0, 10]]));
        assert_eq!(g, BigInt::from(30));
    }

    #[test]
    fn identity_index_is_one() {
        let l = Lattice::from_integers(2, &[vec![2, 1], vec![0, 3]]).unwrap();
        assert_eq!(lattice_index(&l, &l).unwrap(), BigInt::one());
    }

    #[test]
    fn detects_rank_deficiency_and_non_containment() {
        let flat = Lattice::from_integers(2, &[vec![1, 1], vec![2, 2]]).unwrap();
        assert!(lattice_index(&flat, &Lattice::standard(2)).is_err());
        let half = Lattice::new(2, vec![vec![crate::rat(1, 2), crate::int(0)], vec![crate::int(0), crate::int(1)]]).unwrap();
        assert!(lattice_index(&half, &Lattice::standard(2)).is_err());
        assert_eq!(lattice_index(&Lattice::standard(2), &half).unwrap(), BigInt::from(2));
    }

    #[test]
    fn bareiss_determinant() {
        assert_eq!(determinant(&bi(&[&[2, 0, 1], &[1, 3, 2], &[1, 1, 2]])), BigInt::from(6));
        assert_eq!(determinant(&bi(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
    }
}
