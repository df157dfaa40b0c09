//! Scalar-flat toric Kähler ALE metrics on non-compact weighted projective
//! spaces.
//!
//! The crate is organised in layers:
//!
//! * exact integer/rational data: [`weights`], [`typej`], [`polytope`],
//!   [`poly`], [`lattice`];
//! * the metric ansatz and its numerical evaluation: [`ansatz`];
//! * checks of the geometric claims: [`verify`], [`asymptotics`], [`surface`];
//! * the command-line tool and its plumbing: [`cli`], [`config`], [`report`].

// Index loops mirror the matrix formulas; negated float comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod error;
pub mod lattice;
pub mod poly;
pub mod polytope;
pub mod quad;
pub mod report;
pub mod roots;
pub mod surface;
pub mod typej;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};

use num_bigint::BigInt;
use num_rational::BigRational;

/// Shorthand for an exact rational built from two machine integers.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational from a machine integer.
pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Lossy conversion used at the boundary between the exact and float layers.
pub fn to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// Formats an exact rational as `p/q` (or `p` when integral).
pub fn rat_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_formatting() {
        assert_eq!(rat_string(&rat(6, 3)), "2");
        assert_eq!(rat_string(&rat(-3, 9)), "-1/3");
        assert_eq!(rat_string(&int(294)), "294");
        assert_eq!(to_f64(&rat(1, 4)), 0.25);
    }
}
