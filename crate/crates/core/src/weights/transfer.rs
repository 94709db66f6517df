use super::TransitionDensity;
use crate::dynamics::{check_budget, BranchSystem};
use crate::error::Result;
use crate::scalar::Scalar;

/// `(R f)(x) = Σ_{r(y)=x} Δ(y)·f(y)`, counting multiplicity.
pub fn transfer_apply<D, S, F>(delta: &TransitionDensity<D, S>, f: F, x: &D::Point) -> Result<S>
where
    D: BranchSystem,
    S: Scalar,
    F: Fn(&D::Point) -> Result<S>,
{
    apply_dyn(delta, &f, x)
}

fn apply_dyn<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    f: &dyn Fn(&D::Point) -> Result<S>,
    x: &D::Point,
) -> Result<S> {
    let mut acc = S::zero();
    for p in delta.sys().preimages(x)? {
        let w = delta.density(&p.point)?;
        if w.is_zero() {
            continue;
        }
        acc = acc + S::from_usize(p.multiplicity as usize) * w * f(&p.point)?;
    }
    Ok(acc)
}

/// `(Rⁿ f)(x)`, computed as `n` nested applications of [`transfer_apply`].
pub fn transfer_power<D, S, F>(delta: &TransitionDensity<D, S>, f: F, x: &D::Point, n: usize, budget: u64) -> Result<S>
where
    D: BranchSystem,
    S: Scalar,
    F: Fn(&D::Point) -> Result<S>,
{
    check_budget(delta.sys().degree(), n, budget)?;
    power_dyn(delta, &f, x, n)
}

fn power_dyn<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    f: &dyn Fn(&D::Point) -> Result<S>,
    x: &D::Point,
    n: usize,
) -> Result<S> {
    if n == 0 {
        return f(x);
    }
    apply_dyn(delta, &|y: &D::Point| power_dyn(delta, f, y, n - 1), x)
}

/// `(Rⁿ f_i)(x)` for every component of a vector-valued `f`; entry `i` is
/// bit-identical to [`transfer_power`] of the `i`-th component.
pub fn transfer_power_many<D, S>(
    delta: &TransitionDensity<D, S>,
    f: &dyn Fn(&D::Point) -> Result<Vec<S>>,
    x: &D::Point,
    n: usize,
    budget: u64,
) -> Result<Vec<S>>
where
    D: BranchSystem,
    S: Scalar,
{
    check_budget(delta.sys().degree(), n, budget)?;
    power_many(delta, f, x, n)
}

fn power_many<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    f: &dyn Fn(&D::Point) -> Result<Vec<S>>,
    x: &D::Point,
    n: usize,
) -> Result<Vec<S>> {
    if n == 0 {
        return f(x);
    }
    let mut acc: Option<Vec<S>> = None;
    for p in delta.sys().preimages(x)? {
        let w = delta.density(&p.point)?;
        if w.is_zero() {
            continue;
        }
        let scale = S::from_usize(p.multiplicity as usize) * w;
        let inner = power_many(delta, f, &p.point, n - 1)?;
        let acc = acc.get_or_insert_with(|| vec![S::zero(); inner.len()]);
        for (a, v) in acc.iter_mut().zip(inner) {
            *a = a.clone() + scale.clone() * v;
        }
    }
    match acc {
        Some(v) => Ok(v),
        // every branch weight vanished: the width comes from one evaluation
        None => Ok(f(x)?.into_iter().map(|_| S::zero()).collect()),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use proptest::prelude::*;

    use super::*;
    use crate::dynamics::{Circle, CirclePoint, Subshift, Word, DEFAULT_NODE_BUDGET};
    use crate::scalar::Surd;
    use crate::weights::{DeltaMode, DeriveDelta, WeightFunction};

    fn haar() -> TransitionDensity<Circle, f64> {
        Circle::new(2).unwrap().derive_delta(&WeightFunction::haar(), DeltaMode::StronglyInvariant).unwrap()
    }

    fn weighted_shift() -> TransitionDensity<Subshift, Surd> {
        let w = WeightFunction::SymbolTable(vec![Surd::ratio(3, 2), Surd::ratio(1, 2)]);
        Subshift::full(2).derive_delta(&w, DeltaMode::SubshiftPerron).unwrap()
    }

    #[test]
    fn haar_constant_and_character() {
        let d = haar();
        let x = CirclePoint::from_f64(0.37).unwrap();
        assert!((transfer_apply(&d, |_| Ok(1.0), &x).unwrap() - 1.0).abs() < 1e-15);
        let zero = CirclePoint::zero();
        let re = transfer_apply(&d, |y| Ok((TAU * y.to_f64()).cos()), &zero).unwrap();
        let im = transfer_apply(&d, |y| Ok((TAU * y.to_f64()).sin()), &zero).unwrap();
        // (1/2)(1 + e^{2πix}) at x = 0; the branch at 1/2 carries no mass
        assert!((re - 1.0).abs() < 1e-15);
        assert!(im.abs() < 1e-15);
    }

    #[test]
    fn weighted_shift_indicator() {
        let d = weighted_shift();
        for x in Subshift::full(2).words(3) {
            let v = transfer_apply(&d, |y: &Word| Ok(Surd::integer((y.symbols()[0] == 0) as i64)), &x).unwrap();
            assert_eq!(v, Surd::ratio(3, 4));
            let ind00 = |y: &Word| Ok(Surd::integer((y.symbols()[..2] == [0, 0]) as i64));
            assert_eq!(transfer_power(&d, ind00, &x, 2, DEFAULT_NODE_BUDGET).unwrap(), Surd::ratio(9, 16));
        }
    }

    #[test]
    fn haar_power_telescopes() {
        let d = haar();
        let x = CirclePoint::from_f64(0.3).unwrap();
        let v = transfer_power(&d, |_| Ok(1.0), &x, 10, DEFAULT_NODE_BUDGET).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(transfer_power(&d, |y| Ok(y.to_f64()), &x, 0, DEFAULT_NODE_BUDGET).unwrap(), 0.3);
    }

    #[test]
    fn vector_power_matches_components() {
        let d = haar();
        let x = CirclePoint::from_f64(0.7).unwrap();
        let fa = |y: &CirclePoint| Ok((TAU * y.to_f64()).cos());
        let fb = |y: &CirclePoint| Ok(y.to_f64() * y.to_f64());
        let both = |y: &CirclePoint| Ok(vec![fa(y)?, fb(y)?]);
        let v = transfer_power_many(&d, &both, &x, 6, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(v[0].to_bits(), transfer_power(&d, fa, &x, 6, DEFAULT_NODE_BUDGET).unwrap().to_bits());
        assert_eq!(v[1].to_bits(), transfer_power(&d, fb, &x, 6, DEFAULT_NODE_BUDGET).unwrap().to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn power_composes(a in 0usize..4, b in 0usize..4, x in 0.0f64..1.0, k in 1u32..6) {
            let d = haar();
            let x = CirclePoint::from_f64(x).unwrap();
            let f = |y: &CirclePoint| Ok((TAU * k as f64 * y.to_f64()).sin() + 0.25);
            let direct = transfer_power(&d, f, &x, a + b, DEFAULT_NODE_BUDGET).unwrap();
            let inner = |y: &CirclePoint| transfer_power(&d, f, y, b, DEFAULT_NODE_BUDGET);
            let composed = transfer_power(&d, inner, &x, a, DEFAULT_NODE_BUDGET).unwrap();
            prop_assert!((direct - composed).abs() < 1e-12);
        }
    }
}
