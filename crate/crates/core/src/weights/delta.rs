use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::perron::{perron_data, PerronData};
use super::{check_weight, Weight, WeightFunction};
use crate::dynamics::{BranchSystem, Circle, CirclePoint, QuadraticJulia, Subshift, Word};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Points at which the QMF identity and explicit normalizations are checked.
pub const DELTA_SAMPLE_COUNT: usize = 1_000;

const QMF_TOL: f64 = 1e-9;
const EXPLICIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// `Δ(y) = V(y)/𝔠(r(y))` under the QMF identity.
    StronglyInvariant,
    /// First-symbol weights on a subshift, normalized by Perron data.
    SubshiftPerron,
    /// A user routine, validated on samples.
    Explicit,
}

type DeltaFn<P, S> = Arc<dyn Fn(&P) -> Result<S> + Send + Sync>;

/// Branch probabilities `Δ(y)` with `Σ_{r(y)=x} Δ(y) = 1`.
pub struct TransitionDensity<D: BranchSystem, S> {
    sys: D,
    mode: DeltaMode,
    eval: DeltaFn<D::Point, S>,
    perron: Option<PerronData<S>>,
    table: Option<Vec<Vec<S>>>,
}

impl<D: BranchSystem, S: Clone> Clone for TransitionDensity<D, S> {
    fn clone(&self) -> Self {
        TransitionDensity {
            sys: self.sys.clone(),
            mode: self.mode,
            eval: self.eval.clone(),
            perron: self.perron.clone(),
            table: self.table.clone(),
        }
    }
}

impl<D: BranchSystem, S: fmt::Debug> fmt::Debug for TransitionDensity<D, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionDensity")
            .field("sys", &self.sys)
            .field("mode", &self.mode)
            .field("table", &self.table)
            .finish_non_exhaustive()
    }
}

impl<D: BranchSystem, S: Scalar> TransitionDensity<D, S> {
    pub fn sys(&self) -> &D {
        &self.sys
    }

    pub fn mode(&self) -> DeltaMode {
        self.mode
    }

    pub fn perron(&self) -> Option<&PerronData<S>> {
        self.perron.as_ref()
    }

    /// `table[i][j] = Δ(prepend j | leading i)` in Perron mode.
    pub fn table(&self) -> Option<&[Vec<S>]> {
        self.table.as_deref()
    }

    /// `Δ(y)`.
    pub fn density(&self, y: &D::Point) -> Result<S> {
        (self.eval)(y)
    }

    /// `Σ_{r(y)=x} Δ(y)`, counting multiplicity.
    pub fn branch_sum(&self, x: &D::Point) -> Result<S> {
        let mut s = S::zero();
        for p in self.sys.preimages(x)? {
            s = s + S::from_usize(p.multiplicity as usize) * self.density(&p.point)?;
        }
        Ok(s)
    }

    /// `max |Σ Δ − 1|` over the given points.
    pub fn max_normalization_defect(&self, points: &[D::Point]) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in points {
            let d = (self.branch_sum(x)? - S::one()).abs().to_f64();
            worst = worst.max(d);
        }
        Ok(worst)
    }

    /// Δ(y) = V(y)/𝔠(r(y)), after checking the QMF identity
    /// `(1/𝔠(x)) Σ_{r(y)=x} V(y) = 1` on a deterministic sample.
    pub fn strongly_invariant<W>(sys: D, weight: W) -> Result<Self>
    where
        D: 'static,
        W: Weight<D::Point, S> + 'static,
    {
        check_weight(&sys, &weight)?;
        for x in qmf_points(&sys) {
            let mut s = S::zero();
            for p in sys.preimages(&x)? {
                s = s + S::from_usize(p.multiplicity as usize) * weight.value(&p.point)?;
            }
            let c = S::from_usize(sys.branch_count(&x)?);
            let dev = (s / c - S::one()).abs();
            let bad = if S::is_exact() { !dev.is_zero() } else { dev.to_f64() > QMF_TOL };
            if bad {
                return Err(Error::QmfViolation { deviation: dev.to_f64(), at: format!("{x:?}") });
            }
        }
        let s2 = sys.clone();
        let fixed = sys.constant_branch_count();
        let eval: DeltaFn<D::Point, S> = Arc::new(move |y| {
            let c = match fixed {
                Some(c) => c,
                None => s2.branch_count(&s2.forward(y)?)?,
            };
            Ok(weight.value(y)? / S::from_usize(c))
        });
        let out = TransitionDensity { sys, mode: DeltaMode::StronglyInvariant, eval, perron: None, table: None };
        out.check_range()?;
        Ok(out)
    }

    /// Wrap a user routine, checking `0 ≤ Δ ≤ 1` and normalization on samples
    /// (exactly for exact backends, otherwise to `1e-9`).
    pub fn explicit<F>(sys: D, f: F) -> Result<Self>
    where
        F: Fn(&D::Point) -> Result<S> + Send + Sync + 'static,
    {
        let out = TransitionDensity { sys, mode: DeltaMode::Explicit, eval: Arc::new(f), perron: None, table: None };
        for x in qmf_points(&out.sys) {
            let s = out.branch_sum(&x)?;
            let dev = (s.clone() - S::one()).abs();
            let bad = if S::is_exact() { !dev.is_zero() } else { dev.to_f64() > EXPLICIT_TOL };
            if bad {
                return Err(Error::NormalizationDefect { at: format!("{x:?}"), sum: s.to_f64() });
            }
        }
        out.check_range()?;
        Ok(out)
    }

    fn check_range(&self) -> Result<()> {
        let slack = if S::is_exact() { 0.0 } else { 1e-12 };
        for x in qmf_points(&self.sys) {
            for p in self.sys.preimages(&x)? {
                let d = self.density(&p.point)?.to_f64();
                if d < -slack || d > 1.0 + slack {
                    return Err(Error::InvalidInput(format!("Δ({:?}) = {d} outside [0, 1]", p.point)));
                }
            }
        }
        Ok(())
    }
}

fn qmf_points<D: BranchSystem>(sys: &D) -> Vec<D::Point> {
    let mut g = rng::stream(0x5eed_0002, 0);
    sys.sample_points(DELTA_SAMPLE_COUNT, &mut g)
}

impl<S: Scalar> TransitionDensity<Subshift, S> {
    /// `Δ(j·w) = V_j·T[j][w₀]·φ_j/(ρ(K)·φ_{w₀})` for first-symbol weights,
    /// requiring `ρ(K) = ρ(T)` (exactly for exact backends, else to `1e-9`).
    pub fn subshift_perron(sys: Subshift, weight: &WeightFunction<S, Word>) -> Result<Self> {
        let a = sys.alphabet();
        let v: Vec<S> = match weight {
            WeightFunction::Constant(c) => vec![c.clone(); a],
            WeightFunction::SymbolTable(t) if t.len() == a => t.clone(),
            WeightFunction::SymbolTable(t) => {
                return Err(Error::InvalidInput(format!("symbol table has {} entries for an alphabet of {a}", t.len())))
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "Perron mode needs a symbol-table or constant weight, got {}",
                    other.variant_name()
                )))
            }
        };
        if let Some(i) = v.iter().position(|x| *x < S::zero()) {
            return Err(Error::NotNonnegative { at: format!("symbol {i}"), value: v[i].to_f64() });
        }
        let t = sys.transition_matrix();
        let perron = perron_data(&t, &v)?;
        if !perron.is_normalized() {
            return Err(Error::EigenvalueNotOne {
                eigenvalue: perron.normalized_eigenvalue(),
                weighted: perron.eigenvalue.to_f64(),
                shift: perron.shift_eigenvalue.to_f64(),
            });
        }
        let phi = &perron.right;
        let lambda = &perron.eigenvalue;
        let table: Vec<Vec<S>> = (0..a)
            .map(|i| {
                (0..a)
                    .map(|j| {
                        if t[j][i] == 1 {
                            v[j].clone() * phi[j].clone() / (lambda.clone() * phi[i].clone())
                        } else {
                            S::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let lookup = table.clone();
        let eval: DeltaFn<Word, S> = Arc::new(move |y: &Word| {
            let s = y.symbols();
            if s.len() < 2 {
                return Err(Error::WordTooShort { len: s.len(), needed: 2 });
            }
            Ok(lookup[s[1] as usize][s[0] as usize].clone())
        });
        Ok(TransitionDensity { sys, mode: DeltaMode::SubshiftPerron, eval, perron: Some(perron), table: Some(table) })
    }
}

/// Construction of `Δ` from `(sys, V, mode)`.
pub trait DeriveDelta<S: Scalar>: BranchSystem + Sized {
    fn derive_delta(
        &self,
        weight: &WeightFunction<S, Self::Point>,
        mode: DeltaMode,
    ) -> Result<TransitionDensity<Self, S>>;
}

fn explicit_unsupported<T>() -> Result<T> {
    Err(Error::Unsupported("explicit densities are built with TransitionDensity::explicit".into()))
}

impl<S: Scalar> DeriveDelta<S> for Subshift {
    fn derive_delta(&self, weight: &WeightFunction<S, Word>, mode: DeltaMode) -> Result<TransitionDensity<Self, S>> {
        match mode {
            DeltaMode::StronglyInvariant => TransitionDensity::strongly_invariant(self.clone(), weight.clone()),
            DeltaMode::SubshiftPerron => TransitionDensity::subshift_perron(self.clone(), weight),
            DeltaMode::Explicit => explicit_unsupported(),
        }
    }
}

impl DeriveDelta<f64> for Circle {
    fn derive_delta(
        &self,
        weight: &WeightFunction<f64, CirclePoint>,
        mode: DeltaMode,
    ) -> Result<TransitionDensity<Self, f64>> {
        match mode {
            DeltaMode::StronglyInvariant => TransitionDensity::strongly_invariant(*self, weight.clone()),
            DeltaMode::SubshiftPerron => Err(Error::Unsupported("Perron mode needs a subshift".into())),
            DeltaMode::Explicit => explicit_unsupported(),
        }
    }
}

impl DeriveDelta<f64> for QuadraticJulia {
    fn derive_delta(
        &self,
        weight: &WeightFunction<f64, Complex64>,
        mode: DeltaMode,
    ) -> Result<TransitionDensity<Self, f64>> {
        match mode {
            DeltaMode::StronglyInvariant => TransitionDensity::strongly_invariant(*self, weight.clone()),
            DeltaMode::SubshiftPerron => Err(Error::Unsupported("Perron mode needs a subshift".into())),
            DeltaMode::Explicit => explicit_unsupported(),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;
    use crate::scalar::Surd;

    #[test]
    fn haar_delta_closed_form() {
        let sys = Circle::new(2).unwrap();
        let d = sys.derive_delta(&WeightFunction::haar(), DeltaMode::StronglyInvariant).unwrap();
        for k in 0..64u128 {
            let y = CirclePoint::rational(k, 64).unwrap();
            let expect = (1.0 + (TAU * y.to_f64()).cos()) / 2.0;
            assert!((d.density(&y).unwrap() - expect).abs() < 1e-15);
        }
        let x = CirclePoint::from_f64(0.3141).unwrap();
        assert!((d.branch_sum(&x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qmf_violation_is_reported() {
        let sys = Circle::new(2).unwrap();
        let w = WeightFunction::TrigPolynomial { cos: vec![1.0, 0.0, 0.5], sin: vec![] };
        assert!(matches!(
            sys.derive_delta(&w, DeltaMode::StronglyInvariant),
            Err(Error::QmfViolation { .. })
        ));
    }

    #[test]
    fn golden_mean_perron_delta() {
        // brute force: Δ(j|i) ∝ V_j T[j][i] φ_j with φ the Perron vector of K
        let sys = Subshift::golden_mean();
        let d = sys.derive_delta(&WeightFunction::Constant(1.0), DeltaMode::SubshiftPerron).unwrap();
        let t = d.table().unwrap();
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((t[0][0] - 1.0 / g).abs() < 1e-12);
        assert!((t[0][1] - 1.0 / (g * g)).abs() < 1e-12);
        assert!((t[1][0] - 1.0).abs() < 1e-12);
        assert_eq!(t[1][1], 0.0);
        for row in t {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_mean_perron_exact() {
        let sys = Subshift::golden_mean();
        let d = sys.derive_delta(&WeightFunction::Constant(Surd::integer(1)), DeltaMode::SubshiftPerron).unwrap();
        let lambda: Surd = "(1+sqrt(5))/2".parse().unwrap();
        let t = d.table().unwrap();
        assert_eq!(t[0][0], Surd::integer(1) / lambda.clone());
        assert_eq!(t[0][1], Surd::integer(1) / (lambda.clone() * lambda));
        assert_eq!(t[1][0], Surd::integer(1));
        let mut g = rng::stream(4, 0);
        let pts = sys.sample_points(200, &mut g);
        assert_eq!(d.max_normalization_defect(&pts).unwrap(), 0.0);
    }

    #[test]
    fn weighted_two_shift_is_word_independent() {
        let sys = Subshift::full(2);
        let w = WeightFunction::SymbolTable(vec![Surd::ratio(3, 2), Surd::ratio(1, 2)]);
        let d = sys.derive_delta(&w, DeltaMode::SubshiftPerron).unwrap();
        assert_eq!(d.perron().unwrap().normalized_eigenvalue(), 1.0);
        for x in sys.words(3) {
            let pre = sys.preimages(&x).unwrap();
            assert_eq!(d.density(&pre[0].point).unwrap(), Surd::ratio(3, 4));
            assert_eq!(d.density(&pre[1].point).unwrap(), Surd::ratio(1, 4));
        }
        // the same weight satisfies QMF, and the two modes agree
        let si = sys.derive_delta(&w, DeltaMode::StronglyInvariant).unwrap();
        for x in sys.words(4) {
            for p in sys.preimages(&x).unwrap() {
                assert_eq!(si.density(&p.point).unwrap(), d.density(&p.point).unwrap());
            }
        }
    }

    #[test]
    fn unnormalized_weight_reports_hint() {
        let sys = Subshift::full(2);
        let err = sys.derive_delta(&WeightFunction::Constant(2.0), DeltaMode::SubshiftPerron).unwrap_err();
        match err {
            Error::EigenvalueNotOne { eigenvalue, .. } => assert!((eigenvalue - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_mode_validates() {
        let sys = Circle::new(3).unwrap();
        assert!(TransitionDensity::explicit(sys, |_y: &CirclePoint| Ok(1.0 / 3.0)).is_ok());
        assert!(matches!(
            TransitionDensity::explicit(sys, |_y: &CirclePoint| Ok(0.5)),
            Err(Error::NormalizationDefect { .. })
        ));
    }

    #[test]
    fn julia_constant_weight() {
        let sys = QuadraticJulia::new(Complex64::new(0.0, 0.0));
        let d = sys.derive_delta(&WeightFunction::Constant(1.0), DeltaMode::StronglyInvariant).unwrap();
        assert_eq!(d.density(&Complex64::new(0.5, 0.5)).unwrap(), 0.5);
        // critical value: the double root carries both halves
        assert_eq!(d.branch_sum(&Complex64::new(0.0, 0.0)).unwrap(), 1.0);
    }
}
