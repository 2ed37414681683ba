//! Exact densities and Monte-Carlo estimates.
//!
//! Counts routinely overflow machine words (a level-5 layer on 40-vertex
//! parts already passes 2^64), so densities are stored as arbitrary-precision
//! rationals and floats are derived views only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact density: a nonnegative rational in [0, 1] kept in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Density {
    ratio: BigRational,
}

impl Density {
    pub fn from_counts(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let num = num.into();
        let den = den.into();
        if den <= BigInt::zero() {
            return Err(Error::OutOfRange(format!(
                "density denominator must be positive, got {den}"
            )));
        }
        if num.is_negative() || num > den {
            return Err(Error::OutOfRange(format!(
                "density must lie in [0,1], got {num}/{den}"
            )));
        }
        Ok(Density {
            ratio: BigRational::new(num, den),
        })
    }

    pub fn from_ratio(ratio: BigRational) -> Result<Self> {
        Self::from_counts(ratio.numer().clone(), ratio.denom().clone())
    }

    pub fn zero() -> Self {
        Density {
            ratio: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        Density {
            ratio: BigRational::new(1.into(), 1.into()),
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.ratio.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.ratio.denom()
    }

    pub fn ratio(&self) -> &BigRational {
        &self.ratio
    }

    /// Float view, correct to within one ulp of the exact value.
    pub fn as_f64(&self) -> f64 {
        ratio_to_f64(&self.ratio)
    }

    pub fn is_zero(&self) -> bool {
        self.ratio.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.ratio == BigRational::new(1.into(), 1.into())
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.ratio.numer(), self.ratio.denom())
    }
}

impl Serialize for Density {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Density", 3)?;
        s.serialize_field("num", &self.numer().to_string())?;
        s.serialize_field("den", &self.denom().to_string())?;
        s.serialize_field("float", &self.as_f64())?;
        s.end()
    }
}

/// Convert a rational to `f64` without the double rounding of
/// `numer as f64 / denom as f64` (which misbehaves past 2^53).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let negative = r.is_negative();
    let num = r.numer().abs();
    let den = r.denom().abs();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // Scale so the integer quotient carries ~55 significant bits.
    let shift = 55 - (nb - db);
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let mut v = q.to_f64().unwrap_or(f64::INFINITY);
    v = v * 2f64.powi(-shift as i32);
    if negative {
        -v
    } else {
        v
    }
}

/// A Monte-Carlo estimate: sample mean, standard error of the mean,
/// and the sample count that produced them.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / nf).sqrt(),
            samples: n,
        }
    }

    /// |mean - target| measured in standard errors (infinite when stderr is 0
    /// and the mean misses the target).
    pub fn sigmas_from(&self, target: f64) -> f64 {
        let dev = (self.mean - target).abs();
        if self.stderr == 0.0 {
            if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            dev / self.stderr
        }
    }
}

/// A numeric result tagged with its provenance: exact rational arithmetic or
/// a sampled estimate. Reports must never mix the two silently.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Value {
    Exact(Density),
    Estimate(Estimate),
}

impl Value {
    pub fn as_f64(&self) -> f64 {
        match self {
            Value::Exact(d) => d.as_f64(),
            Value::Estimate(e) => e.mean,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(Density::from_counts(3, 2).is_err());
        assert!(Density::from_counts(1, 0).is_err());
        assert!(Density::from_counts(-1, 2).is_err());
    }

    #[test]
    fn reduces_and_converts() {
        let d = Density::from_counts(6, 49).unwrap();
        assert_eq!(d.to_string(), "6/49");
        assert!((d.as_f64() - 6.0 / 49.0).abs() < 1e-15);
    }

    #[test]
    fn float_view_of_huge_ratio() {
        // 2^200 / (3 * 2^200) = 1/3 after reduction; force big operands instead.
        let num = BigInt::from(1u8) << 200;
        let den = (BigInt::from(3u8) << 200) + 1;
        let r = BigRational::new(num, den);
        assert!((ratio_to_f64(&r) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn estimate_sums() {
        let e = Estimate::from_sums(50.0, 50.0, 100);
        assert!((e.mean - 0.5).abs() < 1e-12);
        assert!(e.stderr > 0.0 && e.stderr < 0.1);
    }
}
