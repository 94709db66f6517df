use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{BranchSystem, Preimage};
use crate::error::{Error, Result};
use crate::scalar::gcd_u128;

/// The N-fold covering `x ↦ N·x mod 1` of the circle `[0, 1)`.
///
/// Branch `i` at `x` is `(x + i)/N`, labels ascending in `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Circle {
    degree: u32,
}

/// A point of `[0, 1)`.
///
/// Points built from rationals (every finite `f64` is one) stay exact as
/// `num/den` in `u128` arithmetic; an operation that would overflow falls
/// back to floating point.
#[derive(Clone, Copy)]
pub enum CirclePoint {
    Exact { num: u128, den: u128 },
    Float(f64),
}

impl CirclePoint {
    pub fn zero() -> Self {
        CirclePoint::Exact { num: 0, den: 1 }
    }

    /// `num/den` reduced modulo 1.
    pub fn rational(num: u128, den: u128) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidPoint("zero denominator".into()));
        }
        Ok(reduce(num % den, den))
    }

    /// Exact conversion when the float is a short enough dyadic rational.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || !(0.0..1.0).contains(&x) {
            return Err(Error::InvalidPoint(format!("circle coordinate {x} outside [0, 1)")));
        }
        if x == 0.0 {
            return Ok(CirclePoint::zero());
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e2) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        // x = mant · 2^e2 with e2 < 0
        let shift = -e2;
        if shift <= 120 {
            Ok(reduce(mant as u128, 1u128 << shift))
        } else {
            Ok(CirclePoint::Float(x))
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            CirclePoint::Exact { num, den } => ratio_to_f64(num, den),
            CirclePoint::Float(x) => x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, CirclePoint::Exact { .. })
    }

    /// Parse `p/q`, or a decimal coordinate.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((p, q)) = text.split_once('/') {
            let p = p.trim().parse::<u128>().map_err(|e| Error::InvalidPoint(format!("{text}: {e}")))?;
            let q = q.trim().parse::<u128>().map_err(|e| Error::InvalidPoint(format!("{text}: {e}")))?;
            if p >= q {
                return Err(Error::InvalidPoint(format!("{text} outside [0, 1)")));
            }
            return CirclePoint::rational(p, q);
        }
        let x: f64 = text.parse().map_err(|_| Error::InvalidPoint(text.to_string()))?;
        CirclePoint::from_f64(x)
    }
}

fn reduce(num: u128, den: u128) -> CirclePoint {
    let g = gcd_u128(num, den).max(1);
    CirclePoint::Exact { num: num / g, den: den / g }
}

fn ratio_to_f64(num: u128, den: u128) -> f64 {
    // both conversions round correctly; the quotient is within 1.5 ulp
    num as f64 / den as f64
}

impl PartialEq for CirclePoint {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CirclePoint::Exact { num: a, den: b }, CirclePoint::Exact { num: c, den: d }) => a == c && b == d,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl fmt::Debug for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CirclePoint::Exact { num, den } => write!(f, "{num}/{den}"),
            CirclePoint::Float(x) => write!(f, "{x:.16e}"),
        }
    }
}

impl Circle {
    pub fn new(degree: u32) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidInput(format!("circle degree must be at least 2, got {degree}")));
        }
        Ok(Circle { degree })
    }

    pub fn n(&self) -> u32 {
        self.degree
    }

    fn branch(&self, x: &CirclePoint, i: u32) -> CirclePoint {
        let n = self.degree as u128;
        if let CirclePoint::Exact { num, den } = *x {
            let top = (i as u128).checked_mul(den).and_then(|v| v.checked_add(num));
            let bottom = den.checked_mul(n);
            if let (Some(top), Some(bottom)) = (top, bottom) {
                // gcd(top, den) = gcd(num, den) = 1, so only factors of N cancel
                let g = gcd_u128(top % n, n).max(1);
                return CirclePoint::Exact { num: top / g, den: bottom / g };
            }
        }
        let y = (x.to_f64() + i as f64) / self.degree as f64;
        CirclePoint::Float(if y >= 1.0 { 0.0 } else { y })
    }
}

impl BranchSystem for Circle {
    type Point = CirclePoint;

    fn family(&self) -> &'static str {
        "circle"
    }

    fn degree(&self) -> usize {
        self.degree as usize
    }

    fn validate(&self, x: &CirclePoint) -> Result<()> {
        match *x {
            CirclePoint::Exact { num, den } if den > 0 && num < den => Ok(()),
            CirclePoint::Float(v) if v.is_finite() && (0.0..1.0).contains(&v) => Ok(()),
            _ => Err(Error::InvalidPoint(format!("circle coordinate {x:?} outside [0, 1)"))),
        }
    }

    fn forward(&self, x: &CirclePoint) -> Result<CirclePoint> {
        self.validate(x)?;
        let n = self.degree as u128;
        if let CirclePoint::Exact { num, den } = *x {
            if let Some(top) = num.checked_mul(n) {
                // gcd(N·num, den) = gcd(N, den) for reduced num/den
                let g = gcd_u128(n, den);
                return Ok(CirclePoint::Exact { num: (top % den) / g, den: den / g });
            }
        }
        let y = (self.degree as f64 * x.to_f64()).fract();
        Ok(CirclePoint::Float(y))
    }

    fn preimages(&self, x: &CirclePoint) -> Result<Vec<Preimage<CirclePoint>>> {
        self.validate(x)?;
        Ok((0..self.degree).map(|i| Preimage::simple(i as usize, self.branch(x, i))).collect())
    }

    fn branch_count(&self, _x: &CirclePoint) -> Result<usize> {
        Ok(self.degree as usize)
    }

    fn constant_branch_count(&self) -> Option<usize> {
        Some(self.degree as usize)
    }

    fn same_point(&self, a: &CirclePoint, b: &CirclePoint) -> bool {
        if a.is_exact() && b.is_exact() {
            return a == b;
        }
        let d = (a.to_f64() - b.to_f64()).abs();
        d.min(1.0 - d) <= 1e-12
    }

    fn sample_points(&self, count: usize, rng: &mut ChaCha20Rng) -> Vec<CirclePoint> {
        (0..count)
            .map(|_| CirclePoint::from_f64(rng.gen::<f64>()).expect("rng output lies in [0, 1)"))
            .collect()
    }

    fn grid_points(&self, count: usize) -> Vec<CirclePoint> {
        (0..count as u128).map(|k| reduce(k, count as u128)).collect()
    }
}
