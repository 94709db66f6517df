use serde::{Deserialize, Serialize};

use super::TransitionDensity;
use crate::dynamics::{BranchSystem, Circle, CirclePoint, Subshift, Word};
use crate::error::{Error, Result};
use crate::measures::{CylinderTable, GridDensity};
use crate::scalar::Scalar;

/// Starting vector of the power iteration `h ← R h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HStart {
    /// `h₀ ≡ 1`.
    #[default]
    Ones,
    /// `h₀(x) = Π_{k≥1} Δ(x̄/N^k)` with `x̄ ∈ [−1/2, 1/2)` the centered
    /// representative: the mass of the always-branch-0 path.
    Cascade,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HOptions {
    /// Grid size `M` (circle) or cylinder depth (subshift).
    pub grid: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub start: HStart,
}

impl Default for HOptions {
    fn default() -> Self {
        HOptions { grid: 4096, tol: 1e-10, max_iters: 10_000, start: HStart::Ones }
    }
}

/// `h` on the nodes `k/M`, evaluated elsewhere by periodic linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HFunction {
    pub values: Vec<f64>,
    /// `‖R h − h‖∞` of the returned iterate.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: HStart,
    /// The factor `h` was divided by to give μ₀-average 1, if a μ₀ was given.
    pub normalization: Option<f64>,
}

impl HFunction {
    pub fn grid(&self) -> usize {
        self.values.len()
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.values.len() as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.values, x)
    }

    /// `‖h − 1‖∞` over the nodes.
    pub fn distance_from_one(&self) -> f64 {
        self.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Power iteration for `R h = h` on a uniform circle grid.
///
/// Preimages `(k/M + i)/N` of node `k` sit at grid position `(k + iM)/N`;
/// the interpolation weights are exact integer fractions. NoConvergence is
/// reported through `converged = false`, not as an error.
pub fn fixed_point_h_circle(
    delta: &TransitionDensity<Circle, f64>,
    opts: &HOptions,
    mu0: Option<&GridDensity>,
) -> Result<HFunction> {
    let n = delta.sys().n() as usize;
    let m = opts.grid;
    if m == 0 || m % n != 0 {
        return Err(Error::GridIncompatible { grid: m, degree: n });
    }
    // (left node, right weight, Δ) per branch per node
    let mut taps: Vec<(usize, f64, f64)> = Vec::with_capacity(m * n);
    for k in 0..m {
        for i in 0..n {
            let pos = k + i * m;
            let lo = pos / n;
            let frac = (pos % n) as f64 / n as f64;
            let y = CirclePoint::rational(pos as u128, (n * m) as u128)?;
            taps.push((lo % m, frac, delta.density(&y)?));
        }
    }
    let apply = |h: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|k| {
                taps[k * n..(k + 1) * n]
                    .iter()
                    .map(|&(lo, t, d)| d * (h[lo] * (1.0 - t) + h[(lo + 1) % m] * t))
                    .sum()
            })
            .collect()
    };

    let mut h: Vec<f64> = match opts.start {
        HStart::Ones => vec![1.0; m],
        HStart::Cascade => (0..m).map(|k| cascade(delta, k as f64 / m as f64, n)).collect::<Result<_>>()?,
    };
    // μ₀-average of a grid function, by the same interpolation as `HFunction::eval`
    let average = |h: &[f64]| -> Option<f64> {
        mu0.map(|mu| {
            mu.nodes().iter().zip(mu.weights()).map(|(x, w)| w * interpolate(h, x.to_f64())).sum()
        })
    };
    // the stopping rule applies to the residual of the normalized function
    let scaled = |r: f64, h: &[f64]| match average(h) {
        Some(a) if a > 0.0 => r / a,
        _ => r,
    };
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let next = apply(&h);
        iterations += 1;
        residual = scaled(sup_diff(&next, &h), &next);
        h = next;
        if residual <= opts.tol {
            break;
        }
    }
    // residual of the returned iterate
    if iterations > 0 {
        residual = sup_diff(&apply(&h), &h);
    }
    let mut normalization = None;
    if let Some(avg) = average(&h) {
        if !(avg > 0.0) {
            return Err(Error::InvalidInput(format!("h has μ₀-average {avg}; cannot normalize")));
        }
        for v in &mut h {
            *v /= avg;
        }
        residual /= avg;
        normalization = Some(avg);
    }
    Ok(HFunction { values: h, residual, iterations, converged: residual <= opts.tol, start: opts.start, normalization })
}

fn cascade(delta: &TransitionDensity<Circle, f64>, x: f64, n: usize) -> Result<f64> {
    let mut y = if x >= 0.5 { x - 1.0 } else { x };
    let mut prod = 1.0;
    for _ in 0..64 {
        y /= n as f64;
        if y.abs() < 1e-18 {
            break;
        }
        let z = y.rem_euclid(1.0);
        prod *= delta.density(&CirclePoint::from_f64(if z >= 1.0 { 0.0 } else { z })?)?;
    }
    Ok(prod)
}

fn interpolate(values: &[f64], x: f64) -> f64 {
    let m = values.len();
    let pos = x.rem_euclid(1.0) * m as f64;
    let lo = (pos.floor() as usize).min(m - 1);
    let t = pos - lo as f64;
    values[lo] * (1.0 - t) + values[(lo + 1) % m] * t
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `h` on the admissible depth-`k` cylinders of a subshift.
#[derive(Debug, Clone, PartialEq)]
pub struct HTable<S> {
    pub words: Vec<Word>,
    pub values: Vec<S>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl<S: Scalar> HTable<S> {
    pub fn value(&self, w: &Word) -> Option<&S> {
        let k = self.words.first()?.len();
        let key = w.prefix(k);
        self.words.binary_search(&key).ok().map(|i| &self.values[i])
    }
}

/// Power iteration for `R h = h` on depth-`opts.grid` cylinders, from `h₀ ≡ 1`.
pub fn fixed_point_h_subshift<S: Scalar>(
    delta: &TransitionDensity<Subshift, S>,
    opts: &HOptions,
    mu0: Option<&CylinderTable<S>>,
) -> Result<HTable<S>> {
    let k = opts.grid.max(1);
    let sys = delta.sys();
    let words = sys.words(k);
    let mut values = vec![S::one(); words.len()];
    let index = |w: &Word| words.binary_search(&w.prefix(k)).expect("admissible prefix");
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let step = |h: &[S]| -> Result<Vec<S>> {
        words
            .iter()
            .map(|w| {
                let mut acc = S::zero();
                for p in sys.preimages(w)? {
                    acc = acc + delta.density(&p.point)? * h[index(&p.point)].clone();
                }
                Ok(acc)
            })
            .collect()
    };
    while iterations < opts.max_iters {
        let next = step(&values)?;
        iterations += 1;
        residual = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max);
        values = next;
        if residual <= opts.tol {
            break;
        }
    }
    if let Some(mu) = mu0 {
        let mut avg = S::zero();
        for (w, v) in words.iter().zip(&values) {
            avg = avg + mu.mass(w)? * v.clone();
        }
        values = values.into_iter().map(|v| v / avg.clone()).collect();
    }
    Ok(HTable { words, values, residual, iterations, converged: residual <= opts.tol })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;
    use crate::weights::{DeltaMode, DeriveDelta, WeightFunction};

    fn circle_delta(w: WeightFunction<f64, CirclePoint>, n: u32) -> TransitionDensity<Circle, f64> {
        Circle::new(n).unwrap().derive_delta(&w, DeltaMode::StronglyInvariant).unwrap()
    }

    #[test]
    fn haar_h_is_one_immediately() {
        let d = circle_delta(WeightFunction::haar(), 2);
        let h = fixed_point_h_circle(&d, &HOptions::default(), None).unwrap();
        assert_eq!(h.iterations, 1);
        assert!(h.distance_from_one() < 1e-12);
        assert!(h.residual < 1e-12);
    }

    #[test]
    fn uniform_weight_fixes_constants() {
        let d = circle_delta(WeightFunction::Constant(1.0), 3);
        let opts = HOptions { grid: 999, ..HOptions::default() };
        let h = fixed_point_h_circle(&d, &opts, Some(&GridDensity::lebesgue(999))).unwrap();
        assert!(h.distance_from_one() < 1e-12);
    }

    #[test]
    fn incompatible_grid() {
        let d = circle_delta(WeightFunction::haar(), 2);
        let opts = HOptions { grid: 4095, ..HOptions::default() };
        assert_eq!(fixed_point_h_circle(&d, &opts, None), Err(Error::GridIncompatible { grid: 4095, degree: 2 }));
    }

    #[test]
    fn stretched_haar_cascade_matches_trig_oracle() {
        // analytic fixed point reached from the cascade start
        let oracle = |x: f64| (3.0 + 4.0 * (TAU * x).cos() + 2.0 * (2.0 * TAU * x).cos()) / 9.0;
        let d = circle_delta(WeightFunction::stretched_haar(), 2);
        let opts = HOptions { grid: 3 * 4096, tol: 1e-9, max_iters: 5000, start: HStart::Cascade };
        let h = fixed_point_h_circle(&d, &opts, None).unwrap();
        assert!(h.converged, "residual {}", h.residual);
        let err = (0..h.grid()).map(|k| (h.values[k] - oracle(h.node(k))).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "max deviation from oracle {err}");
    }

    #[test]
    fn subshift_h_is_constant_for_normalized_delta() {
        let sys = Subshift::golden_mean();
        let d = sys.derive_delta(&WeightFunction::Constant(1.0), DeltaMode::SubshiftPerron).unwrap();
        let h = fixed_point_h_subshift(&d, &HOptions { grid: 3, ..HOptions::default() }, None).unwrap();
        assert!(h.converged);
        assert!(h.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((h.value(&Word::new(vec![0, 1, 0, 0])).unwrap() - 1.0).abs() < 1e-12);
    }
}
