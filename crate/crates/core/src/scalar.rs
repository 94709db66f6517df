//! Arithmetic backends.
//!
//! Everything that sums branch weights is generic over [`Scalar`]. `f64` is the
//! fast path; [`Surd`] is exact arithmetic in a real quadratic field
//! `Q(√d)` and is used for subshift bundles, where every mass and weight is a
//! finite combination of the Perron data of a small integer matrix.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A real field element usable as a weight, mass, or integral value.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact conversion for exact backends (every finite `f64` is a dyadic rational).
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Text form: 17 significant digits for floats, exact form otherwise.
    fn to_text(&self) -> String;
    /// True when arithmetic carries no rounding.
    fn is_exact() -> bool;
    /// Convert from the exact backend (rounding for floats).
    fn from_surd(v: &Surd) -> Self;
    /// Square root, when representable in this backend.
    fn sqrt_exact(&self) -> Option<Self>;

    /// Whether `self` and `other` can be combined arithmetically.
    fn compatible(&self, _other: &Self) -> bool {
        true
    }

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_text(&self) -> String {
        format_f64(*self)
    }
    fn is_exact() -> bool {
        false
    }
    fn from_surd(v: &Surd) -> Self {
        v.to_f64()
    }
    fn sqrt_exact(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
}

/// Round-trip safe text for a float (17 significant digits).
pub fn format_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Sum a sequence of scalars left to right.
pub fn sum_ordered<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}

/// Pairwise (tree) reduction; the result depends only on the input order.
pub fn sum_pairwise<S: Scalar>(mut items: Vec<S>) -> S {
    if items.is_empty() {
        return S::zero();
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop().unwrap()
}

/// Exact element `a + b·√d` of a real quadratic field.
///
/// `d` is square-free and greater than one, or zero when the value is rational.
/// Mixing two different radicands in one operation is a programming error and
/// panics; bundle construction checks that a scenario uses a single field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Surd {
    a: BigRational,
    b: BigRational,
    d: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SurdError {
    #[error("cannot parse exact scalar {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error("square root of a negative rational")]
    NegativeRadicand,
    #[error("radicand too large to factor: {0}")]
    Unfactorable(String),
    #[error("value {0} is not in a quadratic field with rational coefficients")]
    NotRationalArgument(String),
}

impl Surd {
    pub fn rational(q: BigRational) -> Self {
        Surd { a: q, b: BigRational::zero(), d: 0 }
    }

    pub fn integer(n: i64) -> Self {
        Surd::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Surd::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `a + b·√d`; `d` is reduced to its square-free part.
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Result<Self, SurdError> {
        let root = Surd::sqrt_rational(&BigRational::from_integer(BigInt::from(d)))?;
        Ok(Surd::rational(a) + Surd::rational(b) * root)
    }

    /// Exact square root of a nonnegative rational, as an element of `Q(√d)`.
    pub fn sqrt_rational(q: &BigRational) -> Result<Self, SurdError> {
        if q.is_negative() {
            return Err(SurdError::NegativeRadicand);
        }
        if q.is_zero() {
            return Ok(Surd::integer(0));
        }
        // sqrt(n/m) = sqrt(n·m)/m
        let n = q.numer().clone();
        let m = q.denom().clone();
        let prod = (&n * &m).to_biguint().expect("nonnegative");
        let (square, free) = split_square(&prod)?;
        let coeff = BigRational::new(BigInt::from(square), m);
        let free = free
            .to_u64()
            .ok_or_else(|| SurdError::Unfactorable(free.to_string()))?;
        if free == 1 {
            Ok(Surd::rational(coeff))
        } else {
            Ok(Surd { a: BigRational::zero(), b: coeff, d: free })
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.b
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// The rational value, when there is no surd part.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_rational().then_some(&self.a)
    }

    fn normalized(mut self) -> Self {
        if self.b.is_zero() {
            self.d = 0;
        }
        self
    }

    fn field(&self, other: &Surd) -> u64 {
        match (self.d, other.d) {
            (0, d) | (d, 0) => d,
            (d, e) if d == e => d,
            (d, e) => panic!("mixed quadratic fields Q(√{d}) and Q(√{e})"),
        }
    }

    fn conjugate(&self) -> Surd {
        Surd { a: self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    /// a² − d·b², the field norm.
    fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d))
    }

    fn signum(&self) -> i8 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        // opposite signs: compare a² with d·b²
        let aa = &self.a * &self.a;
        let bb = &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d));
        match aa.cmp(&bb) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }
}

fn sign_of(q: &BigRational) -> i8 {
    match q.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// n = s²·f with f square-free, by trial division.
fn split_square(n: &num_bigint::BigUint) -> Result<(num_bigint::BigUint, num_bigint::BigUint), SurdError> {
    use num_bigint::BigUint;
    let mut rest = n.clone();
    let mut square = BigUint::one();
    let mut free = BigUint::one();
    let mut p = BigUint::from(2u32);
    let limit = BigUint::from(2_000_000u32);
    while &p * &p <= rest {
        if p > limit {
            return Err(SurdError::Unfactorable(n.to_string()));
        }
        let mut count = 0u32;
        while (&rest % &p).is_zero() {
            rest /= &p;
            count += 1;
        }
        if count >= 2 {
            square *= p.pow(count / 2);
        }
        if count % 2 == 1 {
            free *= &p;
        }
        p += if p == BigUint::from(2u32) { 1u32 } else { 2u32 };
    }
    free *= rest;
    Ok((square, free))
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if !self.a.is_zero() {
            write!(f, "{}", self.a)?;
            if self.b.is_positive() {
                write!(f, "+")?;
            }
        }
        write!(f, "{}*sqrt({})", self.b, self.d)
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(self, rhs: Surd) -> Surd {
        let d = self.field(&rhs);
        Surd { a: self.a + rhs.a, b: self.b + rhs.b, d }.normalized()
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        self + (-rhs)
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { a: -self.a, b: -self.b, d: self.d }
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let d = self.field(&rhs);
        let dd = BigRational::from_integer(BigInt::from(d));
        let a = &self.a * &rhs.a + &self.b * &rhs.b * dd;
        let b = &self.a * &rhs.b + &self.b * &rhs.a;
        Surd { a, b, d }.normalized()
    }
}

impl Div for Surd {
    type Output = Surd;
    fn div(self, rhs: Surd) -> Surd {
        let norm = rhs.norm();
        assert!(!norm.is_zero(), "division by zero surd");
        let num = self * rhs.conjugate();
        Surd { a: num.a / &norm, b: num.b / &norm, d: num.d }.normalized()
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self.clone() - other.clone()).signum() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        })
    }
}

impl Sum for Surd {
    fn sum<I: Iterator<Item = Surd>>(iter: I) -> Surd {
        iter.fold(Surd::integer(0), |a, b| a + b)
    }
}

impl Scalar for Surd {
    fn zero() -> Self {
        Surd::integer(0)
    }
    fn one() -> Self {
        Surd::integer(1)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Surd::ratio(num, den)
    }
    fn from_f64(x: f64) -> Self {
        Surd::rational(BigRational::from_float(x).expect("finite float"))
    }
    fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        if self.b.is_zero() {
            return a;
        }
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * (self.d as f64).sqrt()
    }
    fn to_text(&self) -> String {
        self.to_string()
    }
    fn is_exact() -> bool {
        true
    }
    fn from_surd(v: &Surd) -> Self {
        v.clone()
    }
    fn sqrt_exact(&self) -> Option<Self> {
        Surd::sqrt_rational(self.as_rational()?).ok()
    }
    fn compatible(&self, other: &Self) -> bool {
        self.d == 0 || other.d == 0 || self.d == other.d
    }
}

impl FromStr for Surd {
    type Err = SurdError;

    /// Accepts rationals (`3/2`), decimals (`0.25`, `1e-3`), `sqrt(n)` and
    /// `+ - * /` with parentheses, e.g. `(1+sqrt(5))/2`.
    fn from_str(s: &str) -> Result<Self, SurdError> {
        let mut p = Parser { src: s, chars: s.char_indices().peekable() };
        let v = p.expr()?;
        p.skip_ws();
        if p.chars.peek().is_some() {
            return Err(p.err("trailing characters"));
        }
        Ok(v)
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl Parser<'_> {
    fn err(&self, reason: &str) -> SurdError {
        SurdError::Parse { text: self.src.to_string(), reason: reason.to_string() }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.peek().map(|&(_, c)| c)
    }

    fn expr(&mut self) -> Result<Surd, SurdError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.chars.next();
                    acc = acc + self.term()?;
                }
                '-' => {
                    self.chars.next();
                    acc = acc - self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Surd, SurdError> {
        let mut acc = self.factor()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.chars.next();
                    acc = acc * self.factor()?;
                }
                '/' => {
                    self.chars.next();
                    let den = self.factor()?;
                    if den.is_zero() {
                        return Err(self.err("division by zero"));
                    }
                    acc = acc / den;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Surd, SurdError> {
        match self.peek() {
            Some('-') => {
                self.chars.next();
                Ok(-self.factor()?)
            }
            Some('+') => {
                self.chars.next();
                self.factor()
            }
            Some('(') => {
                self.chars.next();
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("missing ')'"));
                }
                self.chars.next();
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('s') => {
                for expected in "sqrt".chars() {
                    match self.chars.next() {
                        Some((_, c)) if c == expected => {}
                        _ => return Err(self.err("expected sqrt")),
                    }
                }
                if self.peek() != Some('(') {
                    return Err(self.err("expected '(' after sqrt"));
                }
                self.chars.next();
                let arg = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("missing ')'"));
                }
                self.chars.next();
                let q = arg
                    .as_rational()
                    .ok_or_else(|| SurdError::NotRationalArgument(arg.to_string()))?
                    .clone();
                Surd::sqrt_rational(&q)
            }
            _ => Err(self.err("unexpected token")),
        }
    }

    fn number(&mut self) -> Result<Surd, SurdError> {
        let mut text = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            let exp_sign = (c == '-' || c == '+') && text.ends_with(['e', 'E']);
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                text.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        parse_decimal(&text).map(Surd::rational).ok_or_else(|| self.err("bad number"))
    }
}

/// Exact value of a decimal literal such as `0.125` or `25e-2`.
fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(n * ten.pow(scale as u32))
    } else {
        BigRational::new(n, ten.pow((-scale) as u32))
    })
}

/// Parse a scalar literal into any backend: exact backends parse exactly,
/// floats evaluate the same expression in double precision.
pub fn parse_scalar<S: Scalar>(text: &str) -> Result<S, SurdError> {
    let exact: Surd = text.parse()?;
    Ok(S::from_surd(&exact))
}

/// gcd on machine integers, used by the rational circle points.
pub(crate) fn gcd_u128(a: u128, b: u128) -> u128 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Surd {
        text.parse().unwrap()
    }

    #[test]
    fn golden_ratio_arithmetic() {
        let phi = s("(1+sqrt(5))/2");
        assert_eq!(phi.clone() * phi.clone(), phi.clone() + Surd::one());
        assert_eq!(Surd::one() / phi.clone(), phi.clone() - Surd::one());
        assert!((phi.to_f64() - 1.618_033_988_749_895).abs() < 1e-15);
    }

    #[test]
    fn ordering_of_surds() {
        assert!(s("sqrt(2)") > s("1.41421356"));
        assert!(s("sqrt(2)") < s("1.41421357"));
        assert!(s("1-sqrt(5)") < Surd::zero());
        assert!(s("3-sqrt(5)") > Surd::zero());
    }

    #[test]
    fn sqrt_extracts_square_part() {
        let r = s("sqrt(12)");
        assert_eq!(r.radicand(), 3);
        assert_eq!(r.surd_part(), &BigRational::from_integer(BigInt::from(2)));
        assert_eq!(s("sqrt(9/4)"), Surd::ratio(3, 2));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(s("0.1") * Surd::integer(10), Surd::one());
        assert_eq!(s("25e-2"), Surd::ratio(1, 4));
    }

    #[test]
    fn parse_errors() {
        assert!("1+".parse::<Surd>().is_err());
        assert!("sqrt(-1)".parse::<Surd>().is_err());
        assert!("1/0".parse::<Surd>().is_err());
    }

    #[test]
    fn float_backend_parses_expressions() {
        let x: f64 = parse_scalar("(1+sqrt(5))/2").unwrap();
        assert!((x - 1.618_033_988_749_895).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_matches_ordered_for_exact() {
        let items: Vec<Surd> = (1..20).map(|k| Surd::ratio(1, k)).collect();
        assert_eq!(sum_pairwise(items.clone()), sum_ordered(items));
    }
}
