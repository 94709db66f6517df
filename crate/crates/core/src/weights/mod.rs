//! The weight `V`, the branch transition density `Δ` derived from it, the
//! transfer operator `(R f)(x) = Σ_{r(y)=x} Δ(y) f(y)`, and its fixed point `h`.

mod delta;
mod hfunc;
mod perron;
mod transfer;

pub use delta::{DeltaMode, DeriveDelta, TransitionDensity, DELTA_SAMPLE_COUNT};
pub use hfunc::{fixed_point_h_circle, fixed_point_h_subshift, HFunction, HOptions, HStart, HTable};
pub use perron::{perron_data, PerronData, POWER_MAX_ITERS, POWER_TOL};
pub use transfer::{transfer_apply, transfer_power, transfer_power_many};

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::{BranchSystem, CirclePoint, Word};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Evaluation of a weight on the points of one family.
pub trait Weight<P, S>: Send + Sync {
    fn value(&self, x: &P) -> Result<S>;
    /// Declared upper bound, if known.
    fn bound(&self) -> Option<f64>;
}

/// `V : X → [0, ∞)`.
///
/// Which variants make sense depends on the point type: trigonometric and
/// filter weights live on the circle, symbol tables on subshifts (indexed by
/// the leading symbol), constants and callbacks everywhere.
pub enum WeightFunction<S, P> {
    Constant(S),
    /// `a₀ + Σ_k a_k cos 2πkx + b_k sin 2πkx`; `sin[0]` is ignored.
    TrigPolynomial { cos: Vec<f64>, sin: Vec<f64> },
    /// `|Σ_k m₀[k] e^{2πikx}|²` for a low-pass filter `m₀`.
    FilterSquared { taps: Vec<Complex64> },
    SymbolTable(Vec<S>),
    Pointwise { bound: f64, eval: Arc<dyn Fn(&P) -> S + Send + Sync> },
}

impl<S: Clone, P> Clone for WeightFunction<S, P> {
    fn clone(&self) -> Self {
        match self {
            WeightFunction::Constant(v) => WeightFunction::Constant(v.clone()),
            WeightFunction::TrigPolynomial { cos, sin } => {
                WeightFunction::TrigPolynomial { cos: cos.clone(), sin: sin.clone() }
            }
            WeightFunction::FilterSquared { taps } => WeightFunction::FilterSquared { taps: taps.clone() },
            WeightFunction::SymbolTable(t) => WeightFunction::SymbolTable(t.clone()),
            WeightFunction::Pointwise { bound, eval } => WeightFunction::Pointwise { bound: *bound, eval: eval.clone() },
        }
    }
}

impl<S: fmt::Debug, P> fmt::Debug for WeightFunction<S, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFunction::Constant(v) => write!(f, "Constant({v:?})"),
            WeightFunction::TrigPolynomial { cos, sin } => write!(f, "TrigPolynomial(cos={cos:?}, sin={sin:?})"),
            WeightFunction::FilterSquared { taps } => write!(f, "FilterSquared({taps:?})"),
            WeightFunction::SymbolTable(t) => write!(f, "SymbolTable({t:?})"),
            WeightFunction::Pointwise { bound, .. } => write!(f, "Pointwise(bound={bound})"),
        }
    }
}

impl<S, P> WeightFunction<S, P> {
    pub fn variant_name(&self) -> &'static str {
        match self {
            WeightFunction::Constant(_) => "constant",
            WeightFunction::TrigPolynomial { .. } => "trig",
            WeightFunction::FilterSquared { .. } => "filter",
            WeightFunction::SymbolTable(_) => "symbols",
            WeightFunction::Pointwise { .. } => "pointwise",
        }
    }

    /// The Haar low-pass filter `m₀ = (1 + z)/√2`, giving `V = 1 + cos 2πx`.
    pub fn haar() -> Self {
        let t = std::f64::consts::FRAC_1_SQRT_2;
        WeightFunction::FilterSquared { taps: vec![Complex64::new(t, 0.0), Complex64::new(t, 0.0)] }
    }

    /// The stretched Haar filter `m₀ = (1 + z³)/√2`.
    pub fn stretched_haar() -> Self {
        let t = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        WeightFunction::FilterSquared { taps: vec![Complex64::new(t, 0.0), z, z, Complex64::new(t, 0.0)] }
    }
}

fn trig_value(cos: &[f64], sin: &[f64], x: f64) -> f64 {
    let mut v = cos.first().copied().unwrap_or(0.0);
    for k in 1..cos.len().max(sin.len()) {
        let arg = TAU * k as f64 * x;
        if let Some(a) = cos.get(k) {
            v += a * arg.cos();
        }
        if let Some(b) = sin.get(k) {
            v += b * arg.sin();
        }
    }
    v
}

fn filter_value(taps: &[Complex64], x: f64) -> f64 {
    let m: Complex64 = taps
        .iter()
        .enumerate()
        .map(|(k, c)| c * Complex64::from_polar(1.0, TAU * k as f64 * x))
        .sum();
    m.norm_sqr()
}

impl<S: Scalar> Weight<Word, S> for WeightFunction<S, Word> {
    fn value(&self, x: &Word) -> Result<S> {
        match self {
            WeightFunction::Constant(v) => Ok(v.clone()),
            WeightFunction::SymbolTable(t) => {
                let lead = x.leading().ok_or(Error::WordTooShort { len: 0, needed: 1 })?;
                t.get(lead as usize)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("symbol table has no entry for symbol {lead}")))
            }
            WeightFunction::Pointwise { eval, .. } => Ok(eval(x)),
            other => Err(Error::WeightMismatch { variant: other.variant_name(), family: "subshift" }),
        }
    }

    fn bound(&self) -> Option<f64> {
        match self {
            WeightFunction::Constant(v) => Some(v.to_f64()),
            WeightFunction::SymbolTable(t) => t.iter().map(|v| v.to_f64()).reduce(f64::max),
            WeightFunction::Pointwise { bound, .. } => Some(*bound),
            _ => None,
        }
    }
}

impl Weight<CirclePoint, f64> for WeightFunction<f64, CirclePoint> {
    fn value(&self, x: &CirclePoint) -> Result<f64> {
        match self {
            WeightFunction::Constant(v) => Ok(*v),
            WeightFunction::TrigPolynomial { cos, sin } => Ok(trig_value(cos, sin, x.to_f64())),
            WeightFunction::FilterSquared { taps } => Ok(filter_value(taps, x.to_f64())),
            WeightFunction::Pointwise { eval, .. } => Ok(eval(x)),
            WeightFunction::SymbolTable(_) => Err(Error::WeightMismatch { variant: "symbols", family: "circle" }),
        }
    }

    fn bound(&self) -> Option<f64> {
        match self {
            WeightFunction::Constant(v) => Some(*v),
            WeightFunction::TrigPolynomial { cos, sin } => {
                Some(cos.iter().map(|a| a.abs()).sum::<f64>() + sin.iter().skip(1).map(|b| b.abs()).sum::<f64>())
            }
            WeightFunction::FilterSquared { taps } => Some(taps.iter().map(|c| c.norm()).sum::<f64>().powi(2)),
            WeightFunction::Pointwise { bound, .. } => Some(*bound),
            WeightFunction::SymbolTable(_) => None,
        }
    }
}

impl Weight<Complex64, f64> for WeightFunction<f64, Complex64> {
    fn value(&self, x: &Complex64) -> Result<f64> {
        match self {
            WeightFunction::Constant(v) => Ok(*v),
            WeightFunction::Pointwise { eval, .. } => Ok(eval(x)),
            other => Err(Error::WeightMismatch { variant: other.variant_name(), family: "julia" }),
        }
    }

    fn bound(&self) -> Option<f64> {
        match self {
            WeightFunction::Constant(v) => Some(*v),
            WeightFunction::Pointwise { bound, .. } => Some(*bound),
            _ => None,
        }
    }
}

/// Number of points at which weights are checked for sign and bound.
pub const WEIGHT_SAMPLE_COUNT: usize = 10_000;

/// Check `0 ≤ V ≤ bound` on a deterministic sample of points (plus, on the
/// circle, a uniform grid), reporting the first negative witness.
pub fn check_weight<D, S, W>(sys: &D, weight: &W) -> Result<()>
where
    D: BranchSystem,
    S: Scalar,
    W: Weight<D::Point, S>,
{
    let mut g = rng::stream(0x5eed_0001, 0);
    let mut points = sys.sample_points(WEIGHT_SAMPLE_COUNT, &mut g);
    points.extend(sys.grid_points(WEIGHT_SAMPLE_COUNT));
    let bound = weight.bound();
    for x in &points {
        let v = weight.value(x)?;
        if v < S::zero() {
            return Err(Error::NotNonnegative { at: format!("{x:?}"), value: v.to_f64() });
        }
        if let Some(b) = bound {
            if v.to_f64() > b * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "weight V({x:?}) = {} exceeds its declared bound {b}",
                    v.to_f64()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Circle, Subshift};

    #[test]
    fn haar_filter_is_one_plus_cosine() {
        let w: WeightFunction<f64, CirclePoint> = WeightFunction::haar();
        for k in 0..50 {
            let x = CirclePoint::rational(k, 50).unwrap();
            let expect = 1.0 + (TAU * x.to_f64()).cos();
            assert!((w.value(&x).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn symbol_table_uses_leading_symbol() {
        let w: WeightFunction<f64, Word> = WeightFunction::SymbolTable(vec![1.5, 0.5]);
        assert_eq!(w.value(&Word::new(vec![1, 0, 0])).unwrap(), 0.5);
        assert!(w.value(&Word::new(vec![])).is_err());
    }

    #[test]
    fn family_mismatch_is_an_error() {
        let w: WeightFunction<f64, CirclePoint> = WeightFunction::SymbolTable(vec![1.0]);
        assert!(matches!(w.value(&CirclePoint::zero()), Err(Error::WeightMismatch { .. })));
    }

    #[test]
    fn negative_trig_weight_is_caught_with_witness() {
        let sys = Circle::new(2).unwrap();
        let w: WeightFunction<f64, CirclePoint> = WeightFunction::TrigPolynomial { cos: vec![1.0, 2.0], sin: vec![] };
        match check_weight(&sys, &w) {
            Err(Error::NotNonnegative { value, .. }) => assert!(value < 0.0),
            other => panic!("expected NotNonnegative, got {other:?}"),
        }
        check_weight(&sys, &WeightFunction::<f64, CirclePoint>::haar()).unwrap();
    }

    #[test]
    fn negative_symbol_weight_is_caught() {
        let sys = Subshift::full(2);
        let w: WeightFunction<f64, Word> = WeightFunction::SymbolTable(vec![2.5, -0.5]);
        assert!(matches!(check_weight(&sys, &w), Err(Error::NotNonnegative { .. })));
    }
}
