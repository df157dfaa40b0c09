#![allow(clippy::needless_range_loop)]

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use toric_ale::ansatz::AnsatzData;
use toric_ale::lattice::{lattice_index, maximal_minor_gcd, Lattice};
use toric_ale::polytope::{base_polytope, facet_distance, fibred_to_xtilde, vertices, wps_polytope, xtilde_to_fibred};
use toric_ale::poly::Poly;
use toric_ale::surface::SurfaceData;
use toric_ale::typej::{classify, euclid_overestimated, ClassifierConfig};
use toric_ale::verify::quasi_random_points;
use toric_ale::weights::{chart_group, residues, GroupedWeights, WeightVector};
use toric_ale::{int, rat};

fn coprime_pair() -> impl Strategy<Value = (i64, i64)> {
    (2i64..=50, 1i64..50).prop_filter_map("coprime q > p", |(q, p)| (p < q && q.gcd(&p) == 1).then_some((q, p)))
}

fn surface_weights() -> impl Strategy<Value = (i64, i64, i64)> {
    (1i64..=12, 1i64..=12, 1i64..=12).prop_filter("gcd 1", |&(a, b, c)| a.gcd(&b).gcd(&c) == 1)
}

/// Grouped weights with one to three distinct values and small multiplicities.
fn grouped() -> impl Strategy<Value = GroupedWeights> {
    (prop::collection::btree_set(1i64..=9, 1..=3), prop::collection::vec(0usize..=2, 3), 1i64..=30)
        .prop_filter_map("valid weights", |(distinct, mult, a0)| {
            let distinct: Vec<i64> = distinct.into_iter().collect();
            let mult = mult[..distinct.len()].to_vec();
            GroupedWeights::with_multiplicities(a0, distinct, mult).ok()
        })
}

/// Positive rationals from numerator/denominator pairs.
fn positives(len: usize) -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((1i64..=40, 1i64..=40), len).prop_map(|v| v.into_iter().map(|(n, d)| rat(n, d)).collect())
}

fn sum(v: &[BigRational]) -> BigRational {
    v.iter().fold(BigRational::zero(), |a, b| a + b)
}

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((-20i64..=20, 1i64..=6), 0..5)
        .prop_map(|cs| Poly::new(cs.into_iter().map(|(n, d)| rat(n, d)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn chart_group_residue_step((q, p) in coprime_pair(), m in 2usize..=4) {
        let mut rest = vec![p];
        rest.extend(std::iter::repeat_n(1, m - 1));
        let a = WeightVector::new(q, rest);
        let chart = residues(&chart_group(&a, 1).unwrap());
        if q % p != 0 && p > 1 {
            let mut expected = vec![p - q % p];
            expected.extend(std::iter::repeat_n(1, m - 1));
            prop_assert_eq!(chart.unwrap(), WeightVector::new(p, expected));
        }
    }

    #[test]
    fn euclid_sequence_is_strictly_decreasing((q, p) in coprime_pair()) {
        let seq = euclid_overestimated(q, p).unwrap();
        prop_assert_eq!(seq[0], (q, p));
        prop_assert_eq!(seq.last().unwrap().1, 1);
        for w in seq.windows(2) {
            prop_assert!(w[1].1 < w[0].1);
            prop_assert_eq!(w[1].0, w[0].1);
        }
    }

    #[test]
    fn fibred_map_round_trips_interior_points(g in grouped(), raw in positives(12), shrink in 2i64..=9) {
        let ell = g.ell();
        // Base point: positive with Σx > 1; fibre points: positive with Σ < 1.
        let mut x = raw[..ell].to_vec();
        let s = sum(&x);
        if s <= BigRational::one() {
            x = x.iter().map(|v| v * int(2) / &s).collect();
        }
        let mut off = ell;
        let fibres: Vec<Vec<BigRational>> = g.mult.iter().map(|&n| {
            let f = raw[off..off + n].to_vec();
            off += n;
            let t = sum(&f) + BigRational::one() / int(shrink);
            f.iter().map(|v| v / &t).collect()
        }).collect();
        let base = base_polytope(&g).unwrap();
        prop_assert!(facet_distance(&base, &x).unwrap().iter().all(Signed::is_positive));
        let xt = fibred_to_xtilde(&x, &fibres);
        let p = wps_polytope(&g).unwrap();
        prop_assert!(facet_distance(&p, &xt).unwrap().iter().all(Signed::is_positive));
        prop_assert_eq!(xtilde_to_fibred(&xt, &g.mult), (x, fibres));

        // And from the other side: an arbitrary interior point of P̊_m.
        let m = g.m();
        let mut yt = raw[..m].to_vec();
        let s = sum(&yt);
        if s <= BigRational::one() {
            yt = yt.iter().map(|v| v * int(3) / &s).collect();
        }
        let (bx, bf) = xtilde_to_fibred(&yt, &g.mult);
        prop_assert!(facet_distance(&base, &bx).unwrap().iter().all(Signed::is_positive));
        for f in &bf {
            prop_assert!(f.iter().all(Signed::is_positive) && sum(f) < BigRational::one());
        }
        prop_assert_eq!(fibred_to_xtilde(&bx, &bf), yt);
    }

    #[test]
    fn fibred_map_matches_vertices(g in grouped()) {
        // Vertices of P̊_ℓ × ∏ closed simplices map onto the vertices of P̊_m.
        let mut images = Vec::new();
        for v in vertices(&base_polytope(&g).unwrap()) {
            let j = v.iter().position(|c| !c.is_zero()).unwrap();
            for k in 0..=g.mult[j] {
                let fibres: Vec<Vec<BigRational>> = g.mult.iter().enumerate().map(|(i, &n)| {
                    (1..=n).map(|q| if i == j && q == k { int(1) } else { int(0) }).collect()
                }).collect();
                let xt = fibred_to_xtilde(&v, &fibres);
                if !images.contains(&xt) {
                    images.push(xt);
                }
            }
        }
        let mut expected = vertices(&wps_polytope(&g).unwrap());
        images.sort();
        expected.sort();
        prop_assert_eq!(images, expected);
    }

    #[test]
    fn float_xtilde_round_trip(a0 in 1i64..=15, w in prop::collection::vec(1i64..=6, 2..=4), seed in 0u64..1000) {
        let Ok(d) = AnsatzData::new(a0, &w, false) else { return Ok(()) };
        for pt in quasi_random_points(&d, 5, seed) {
            let x = d.xi_to_x(&pt.xi);
            let xt = d.x_to_xtilde(&x, &pt.fibres);
            let (x2, f2) = d.xtilde_to_x(&xt);
            for (a, b) in x.iter().zip(&x2) {
                prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "{a} vs {b}");
            }
            for (fa, fb) in pt.fibres.iter().zip(&f2) {
                for (a, b) in fa.iter().zip(fb) {
                    prop_assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn polynomial_product_evaluates_pointwise(p in poly(), q in poly(), x in -30i64..=30, d in 1i64..=7) {
        let x = rat(x, d);
        prop_assert_eq!((&p * &q).eval(&x), p.eval(&x) * q.eval(&x));
        prop_assert_eq!((&p + &q).eval(&x), p.eval(&x) + q.eval(&x));
    }

    #[test]
    fn lattice_index_matches_minor_gcd(rows in prop::collection::vec(prop::collection::vec(-9i64..=9, 2), 2..=4)) {
        let big: Vec<Vec<num_bigint::BigInt>> = rows.iter().map(|r| r.iter().map(|&x| x.into()).collect()).collect();
        let g = maximal_minor_gcd(&big);
        prop_assume!(!g.is_zero());
        let sub = Lattice::from_integers(2, &rows).unwrap();
        prop_assert_eq!(lattice_index(&sub, &Lattice::standard(2)).unwrap(), g.abs());
    }

    #[test]
    fn conformal_law_is_exact((a0, a1, a2) in surface_weights(), u in 1i64..=9, v in 1i64..=50) {
        let s = SurfaceData::new(a0, a1, a2).unwrap();
        let pt = match s.alphas() {
            Some((lo, hi)) => [&lo + (&hi - &lo) * rat(u, 10), rat(v, 3)],
            None => {
                let SurfaceData { kind: toric_ale::surface::SurfaceKind::Calabi { length, alpha, .. }, .. } = &s else { unreachable!() };
                [alpha + rat(v, 3), length * rat(u, 10)]
            }
        };
        let h = s.gram(&pt).unwrap();
        let d = s.bochner_dual(&pt).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(&d.h_tilde[i][j] / &d.conformal_factor, h[i][j].clone());
            }
        }
        // Dual momenta land inside the dual simplex.
        let (sigma, _) = s.dual_polytope();
        for f in &sigma.facets {
            prop_assert!(f.eval(&d.sigma_tilde).is_positive(), "{} at {:?}", f.label, d.sigma_tilde);
        }
    }

    #[test]
    fn vertical_gram_symmetric_positive(a0 in 1i64..=9, w in prop::collection::vec(1i64..=9, 2..=3), u in prop::collection::vec(1i64..=9, 3)) {
        let d = AnsatzData::new(a0, &w, false).unwrap();
        let xi: Vec<BigRational> = (0..d.ell)
            .map(|j| {
                let t = rat(u[j], 10);
                if j + 1 < d.ell {
                    &d.alpha[j] + (&d.alpha[j + 1] - &d.alpha[j]) * t
                } else {
                    int(u[j])
                }
            })
            .collect();
        let g = d.vertical_gram(&xi).unwrap();
        for i in 0..d.ell {
            prop_assert!(g[i][i].is_positive());
            for j in 0..d.ell {
                prop_assert_eq!(&g[i][j], &g[j][i]);
            }
        }
        for w in d.vertical_weights(&xi).unwrap() {
            prop_assert!(w.is_positive());
        }
    }
}

/// Unknown verdicts run until the node budget is spent, so the search
/// properties use a small one to keep each case cheap.
fn small_budget() -> ClassifierConfig {
    ClassifierConfig { node_budget: 500, ..ClassifierConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn classify_ignores_weight_order(b0 in 2i64..=13, rest in prop::collection::vec(1i64..=13, 2..=3), seed in any::<u64>()) {
        prop_assume!(rest.iter().all(|r| r.gcd(&b0) == 1));
        let cfg = small_budget();
        let mut shuffled = rest.clone();
        let k = shuffled.len();
        shuffled.rotate_left((seed as usize) % k);
        let a = classify(&WeightVector::new(b0, rest), &cfg).unwrap();
        let b = classify(&WeightVector::new(b0, shuffled), &cfg).unwrap();
        prop_assert_eq!(a.is_yes(), b.is_yes());
    }

    #[test]
    fn memo_does_not_change_verdicts(b0 in 2i64..=12, rest in prop::collection::vec(1i64..=24, 2..=3)) {
        prop_assume!(rest.iter().all(|r| r.gcd(&b0) == 1));
        let b = WeightVector::new(b0, rest);
        let with = classify(&b, &small_budget()).unwrap();
        let without = classify(&b, &ClassifierConfig { memoize: false, ..small_budget() }).unwrap();
        prop_assert_eq!(with.is_yes(), without.is_yes());
        prop_assert_eq!(with.tree(), without.tree());
    }
}
