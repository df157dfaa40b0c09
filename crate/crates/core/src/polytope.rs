//! Exact labelled polytopes: the moment images of the spaces `M_a`, their
//! weighted inward normals, and the lattices those normals generate.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::lattice::Lattice;
use crate::weights::GroupedWeights;
use crate::{int, rat_string, Error, Result};

/// The affine functional `L(x) = ⟨normal, x⟩ + constant`, positive inside.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub label: String,
    pub normal: Vec<BigRational>,
    pub constant: BigRational,
}

impl Facet {
    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        self.normal
            .iter()
            .zip(x)
            .fold(self.constant.clone(), |acc, (u, xi)| acc + u * xi)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x)
            .fold(crate::to_f64(&self.constant), |acc, (u, xi)| acc + crate::to_f64(u) * xi)
    }

    pub fn normal_f64(&self) -> Vec<f64> {
        self.normal.iter().map(crate::to_f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelledPolytope {
    pub dim: usize,
    pub facets: Vec<Facet>,
    pub bounded: bool,
    pub interior_point: Vec<BigRational>,
}

fn unit(dim: usize, i: usize, scale: BigRational) -> Vec<BigRational> {
    (0..dim).map(|k| if k == i { scale.clone() } else { BigRational::zero() }).collect()
}

impl LabelledPolytope {
    fn checked(self) -> Result<Self> {
        if facet_distance(&self, &self.interior_point)?.iter().all(|v| v.is_positive()) {
            Ok(self)
        } else {
            Err(Error::Domain("interior point certificate failed".into()))
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct F<'a> {
            label: &'a str,
            normal: Vec<String>,
            constant: String,
        }
        serde_json::json!({
            "dim": self.dim,
            "bounded": self.bounded,
            "interior_point": self.interior_point.iter().map(rat_string).collect::<Vec<_>>(),
            "facets": self.facets.iter().map(|f| F {
                label: &f.label,
                normal: f.normal.iter().map(rat_string).collect(),
                constant: rat_string(&f.constant),
            }).collect::<Vec<_>>(),
        })
    }
}

/// The unbounded simplex `{x_i > 0, Σx_i > 1}` with unit normals.
pub fn standard_simplex(dim: usize) -> LabelledPolytope {
    let mut facets: Vec<Facet> = (0..dim)
        .map(|i| Facet {
            label: format!("x{}", i + 1),
            normal: unit(dim, i, BigRational::one()),
            constant: BigRational::zero(),
        })
        .collect();
    facets.push(Facet {
        label: "sum".into(),
        normal: vec![BigRational::one(); dim],
        constant: -BigRational::one(),
    });
    LabelledPolytope { dim, facets, bounded: false, interior_point: vec![BigRational::one(); dim] }
}

/// Labels of the `x̃` coordinates: `x0_j` for the base blocks, `x{j}_{k}` for fibres.
pub fn xtilde_labels(g: &GroupedWeights) -> Vec<String> {
    let mut out: Vec<String> = (1..=g.ell()).map(|j| format!("x0_{j}")).collect();
    for (j, &n) in g.mult.iter().enumerate() {
        out.extend((1..=n).map(|k| format!("x{}_{k}", j + 1)));
    }
    out
}

/// Weight `c/a` attached to each `x̃` coordinate (same order as [`xtilde_labels`]).
pub fn xtilde_weights(g: &GroupedWeights) -> Vec<BigRational> {
    let c = g.c();
    let mut out: Vec<BigRational> = g.distinct.iter().map(|&a| int(c) / int(a)).collect();
    for (&a, &n) in g.distinct.iter().zip(&g.mult) {
        out.extend(std::iter::repeat_n(int(c) / int(a), n));
    }
    out
}

fn fibred_polytope(g: &GroupedWeights, with_v0: bool) -> Result<LabelledPolytope> {
    let m = g.m();
    let labels = xtilde_labels(g);
    let mut facets: Vec<Facet> = xtilde_weights(g)
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (wt, label))| Facet { label, normal: unit(m, i, wt), constant: BigRational::zero() })
        .collect();
    if with_v0 {
        let s = int(g.c()) / int(g.a0);
        facets.push(Facet { label: "v0".into(), normal: vec![s.clone(); m], constant: -s });
    }
    // Σx̃ = 2 clears the v0 facet in every dimension, including m = 1.
    let interior_point = vec![int(2) / int(m as i64); m];
    LabelledPolytope { dim: m, facets, bounded: false, interior_point }.checked()
}

/// `P̊_m = {x̃ > 0, Σx̃ > 1}` with normals `(c/a_j)e^j_k` and `v_0 = (c/a_0)Σe`.
pub fn wps_polytope(g: &GroupedWeights) -> Result<LabelledPolytope> {
    fibred_polytope(g, true)
}

/// The cone `C̊_m` of the flat model: no `v_0` facet.
pub fn flat_cone(g: &GroupedWeights) -> Result<LabelledPolytope> {
    fibred_polytope(g, false)
}

/// The `ℓ`-dimensional base polytope `P̊_ℓ` of the distinct weights.
pub fn base_polytope(g: &GroupedWeights) -> Result<LabelledPolytope> {
    wps_polytope(&GroupedWeights::with_multiplicities(g.a0, g.distinct.clone(), vec![0; g.ell()])?)
}

/// Lattice `Λ_a ⊂ R^ℓ` spanned by the base normals `v_0, v_1, …, v_ℓ`.
pub fn wps_lattice(g: &GroupedWeights) -> Result<Lattice> {
    let p = base_polytope(g)?;
    Lattice::new(p.dim, p.facets.iter().map(|f| f.normal.clone()).collect())
}

pub fn facet_distance(p: &LabelledPolytope, x: &[BigRational]) -> Result<Vec<BigRational>> {
    if x.len() != p.dim {
        return Err(Error::Domain(format!("point of length {} in dimension {}", x.len(), p.dim)));
    }
    Ok(p.facets.iter().map(|f| f.eval(x)).collect())
}

pub fn facet_distance_f64(p: &LabelledPolytope, x: &[f64]) -> Vec<f64> {
    p.facets.iter().map(|f| f.eval_f64(x)).collect()
}

/// Solves a square exact linear system; `None` when singular.
pub fn solve_exact(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| row.iter().cloned().chain(std::iter::once(bi.clone())).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pr = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pr) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Exact rank of a rational matrix.
pub fn rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for col in 0..ncols {
        let Some(piv) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, piv);
        for i in r + 1..m.len() {
            let f = &m[i][col] / &m[r][col];
            let pr = m[r].clone();
            for (x, y) in m[i].iter_mut().zip(pr) {
                *x = &*x - &f * y;
            }
        }
        r += 1;
    }
    r
}

/// All vertices by brute force over `dim`-subsets of facets.
pub fn vertices(p: &LabelledPolytope) -> Vec<Vec<BigRational>> {
    fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            subsets(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut sets = Vec::new();
    subsets(p.facets.len(), p.dim, 0, &mut Vec::new(), &mut sets);
    let mut out: Vec<Vec<BigRational>> = Vec::new();
    for s in sets {
        let a: Vec<Vec<BigRational>> = s.iter().map(|&i| p.facets[i].normal.clone()).collect();
        let b: Vec<BigRational> = s.iter().map(|&i| -p.facets[i].constant.clone()).collect();
        if let Some(v) = solve_exact(&a, &b) {
            if p.facets.iter().all(|f| !f.eval(&v).is_negative()) && !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// Simple-polytope check: at each vertex exactly `dim` facets vanish and
/// their normals are independent.
pub fn is_simple(p: &LabelledPolytope) -> bool {
    vertices(p).iter().all(|v| {
        let active: Vec<Vec<BigRational>> = p
            .facets
            .iter()
            .filter(|f| f.eval(v).is_zero())
            .map(|f| f.normal.clone())
            .collect();
        active.len() == p.dim && rank(&active) == p.dim
    })
}

/// `(x, x^j) ↦ x̃` with `x̃^j_k = x_j x^j_k`, `x̃^0_j = x_j(1 − Σ_k x^j_k)`,
/// in exact arithmetic.
pub fn fibred_to_xtilde(x: &[BigRational], fibres: &[Vec<BigRational>]) -> Vec<BigRational> {
    let mut base = Vec::with_capacity(x.len());
    let mut rest = Vec::new();
    for (xj, f) in x.iter().zip(fibres) {
        let s: BigRational = f.iter().fold(BigRational::zero(), |a, b| a + b);
        base.push(xj * (BigRational::one() - s));
        rest.extend(f.iter().map(|y| xj * y));
    }
    base.extend(rest);
    base
}

/// Inverse of [`fibred_to_xtilde`] for the given multiplicities.
pub fn xtilde_to_fibred(xt: &[BigRational], mult: &[usize]) -> (Vec<BigRational>, Vec<Vec<BigRational>>) {
    let ell = mult.len();
    let mut offset = ell;
    let mut x = Vec::with_capacity(ell);
    let mut fibres = Vec::with_capacity(ell);
    for (j, &n) in mult.iter().enumerate() {
        let block = &xt[offset..offset + n];
        offset += n;
        let xj = block.iter().fold(xt[j].clone(), |a, b| a + b);
        fibres.push(block.iter().map(|y| y / &xj).collect());
        x.push(xj);
    }
    (x, fibres)
}
