//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Requested accuracies below this multiple of `∫|f|` are not attainable in
/// double precision and are clamped to it.
const ROUNDOFF_FLOOR: f64 = 50.0 * f64::EPSILON;

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// `∫|f|` estimate, used for the roundoff floor.
    magnitude: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut kabs = fc.abs() * WGK[7];
    for i in 0..7 {
        let dx = h * XGK[i];
        let (fl, fr) = (f(c - dx), f(c + dx));
        let s = fl + fr;
        k += WGK[i] * s;
        kabs += WGK[i] * (fl.abs() + fr.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
        magnitude: (kabs * h).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!("non-finite limits [{a}, {b}]")));
    }
    if a > b {
        return integrate(f, b, a, opts).map(|r| QuadResult { value: -r.value, ..r });
    }
    let first = kronrod(&f, a, b);
    let mut total = first.value;
    let mut err = first.error;
    let mut magnitude = first.magnitude;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        if !total.is_finite() {
            return Err(Error::Numeric(format!(
                "quadrature produced a non-finite value on [{a}, {b}]"
            )));
        }
        let tol = opts
            .abs_tol
            .max(opts.rel_tol * total.abs())
            .max(ROUNDOFF_FLOOR * magnitude);
        if err <= tol {
            return Ok(QuadResult { value: total, error: err, intervals: heap.len() });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{a}, {b}]: estimate {total:e}, error {err:e} after {} panels",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Numeric(format!(
                "quadrature panel collapsed near {mid}; integrand may be singular"
            )));
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        magnitude += left.magnitude + right.magnitude - worst.magnitude;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically to stop drift in the running totals.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
            magnitude = heap.iter().map(|p| p.magnitude).sum();
        }
    }
}

/// Integrates `f` over `[a, ∞)` after the substitution `t = a + s(1-u)/u`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOptions) -> Result<QuadResult> {
    let s = a.abs().max(1.0);
    let g = |u: f64| {
        let t = a + s * (1.0 - u) / u;
        let v = f(t) * s / (u * u);
        if v.is_finite() { v } else { 0.0 }
    };
    integrate(g, 0.0, 1.0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn log_singularity_converges() {
        let r = integrate(|x| x.ln(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-10);
    }

    #[test]
    fn tail_integral() {
        let r = integrate_to_infinity(|t| 1.0 / (t * t * t), 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - 0.125).abs() < 1e-14);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = integrate(|x| x.exp(), 0.0, 1.0, QuadOptions::default()).unwrap().value;
        let b = integrate(|x| x.exp(), 1.0, 0.0, QuadOptions::default()).unwrap().value;
        assert!((a + b).abs() < 1e-15);
        let f = |x: f64| (x - 0.3).abs().sqrt();
        let c = integrate(f, 2.0, -1.0, QuadOptions::default()).unwrap().value;
        let d = integrate(f, -1.0, 2.0, QuadOptions::default()).unwrap().value;
        assert!((c + d).abs() < 1e-12);
    }
}
