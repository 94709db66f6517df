use std::collections::BTreeMap;

use super::{sum_terms, sum_terms_many, PointFunction, Quadrature};
use crate::dynamics::{Subshift, Word};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::{TransitionDensity, WeightFunction};
use crate::Summation;

/// Masses of all admissible cylinders `[w]` with `1 ≤ |w| ≤ depth`.
///
/// Masses refine forward: `μ([w]) = Σ_b μ([w b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderTable<S> {
    sys: Subshift,
    depth: usize,
    masses: BTreeMap<Word, S>,
}

impl<S: Scalar> CylinderTable<S> {
    /// Validates totals and forward refinement (exactly, or to `1e-12` for floats).
    pub fn from_masses(sys: Subshift, depth: usize, masses: BTreeMap<Word, S>) -> Result<Self> {
        let table = CylinderTable { sys, depth, masses };
        table.validate()?;
        Ok(table)
    }

    /// Product measure `μ([w]) = Π p_{w_t}` on a full shift.
    pub fn bernoulli(probs: Vec<S>, depth: usize) -> Result<Self> {
        let a = probs.len();
        let sys = Subshift::full(a);
        let forward = vec![probs.clone(); a];
        CylinderTable::markov(sys, probs, forward, depth)
    }

    /// Markov measure `μ([w]) = π_{w₀} Π P[w_t][w_{t+1}]`.
    pub fn markov(sys: Subshift, initial: Vec<S>, forward: Vec<Vec<S>>, depth: usize) -> Result<Self> {
        let a = sys.alphabet();
        if initial.len() != a || forward.len() != a || forward.iter().any(|r| r.len() != a) {
            return Err(Error::InvalidInput(format!("Markov data does not match the alphabet size {a}")));
        }
        let mut masses = BTreeMap::new();
        let mut level: Vec<(Word, S)> = (0..a as u8).map(|s| (Word::new(vec![s]), initial[s as usize].clone())).collect();
        for k in 1..=depth {
            if k > 1 {
                let mut next = Vec::new();
                for (w, m) in &level {
                    let last = *w.symbols().last().expect("nonempty");
                    for b in 0..a as u8 {
                        if sys.allowed(last, b) {
                            let mut v = w.symbols().to_vec();
                            v.push(b);
                            next.push((Word::new(v), m.clone() * forward[last as usize][b as usize].clone()));
                        }
                    }
                }
                level = next;
            }
            for (w, m) in &level {
                masses.insert(w.clone(), m.clone());
            }
        }
        CylinderTable::from_masses(sys, depth, masses)
    }

    pub fn sys(&self) -> &Subshift {
        &self.sys
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `μ([w])`; forbidden words have mass 0 and the empty word mass 1.
    pub fn mass(&self, w: &Word) -> Result<S> {
        if w.is_empty() {
            return Ok(S::one());
        }
        if w.len() > self.depth {
            return Err(Error::DepthMismatch { needed: w.len(), available: self.depth });
        }
        Ok(self.masses.get(w).cloned().unwrap_or_else(S::zero))
    }

    /// Entries in word order (shorter words first within a common prefix).
    pub fn entries(&self) -> impl Iterator<Item = (&Word, &S)> {
        self.masses.iter()
    }

    fn validate(&self) -> Result<()> {
        let tol = if S::is_exact() { 0.0 } else { 1e-12 };
        let close = |a: &S, b: &S| {
            let d = (a.clone() - b.clone()).abs();
            if tol == 0.0 { d.is_zero() } else { d.to_f64() <= tol }
        };
        if let Some((w, m)) = self.masses.iter().find(|(_, m)| **m < S::zero()) {
            return Err(Error::InvalidInput(format!("cylinder {w:?} has negative mass {}", m.to_text())));
        }
        let total = self.sys.words(1).iter().fold(S::zero(), |acc, w| acc + self.mass(w).unwrap_or_else(|_| S::zero()));
        if self.depth >= 1 && !close(&total, &S::one()) {
            return Err(Error::InvalidInput(format!("cylinder masses total {}", total.to_text())));
        }
        for k in 1..self.depth {
            for w in self.sys.words(k) {
                let m = self.mass(&w)?;
                let last = *w.symbols().last().expect("nonempty");
                let mut refined = S::zero();
                for b in 0..self.sys.alphabet() as u8 {
                    if self.sys.allowed(last, b) {
                        let mut v = w.symbols().to_vec();
                        v.push(b);
                        refined = refined + self.mass(&Word::new(v))?;
                    }
                }
                if !close(&m, &refined) {
                    return Err(Error::InvalidInput(format!(
                        "cylinder {w:?} has mass {} but its refinements sum to {}",
                        m.to_text(),
                        refined.to_text()
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<S: Scalar> Quadrature<Word, S> for CylinderTable<S> {
    /// Exact finite sum over the admissible words of length `max(f.depth, 1)`.
    fn integrate(&self, f: &PointFunction<Word, S>, summation: Summation) -> Result<S> {
        let k = f.depth().max(1);
        if k > self.depth {
            return Err(Error::DepthMismatch { needed: k, available: self.depth });
        }
        let words = self.sys.words(k);
        sum_terms(&words, summation, |w| {
            let m = self.mass(w)?;
            if m.is_zero() {
                return Ok(S::zero());
            }
            Ok(m * f.call(w)?)
        })
    }

    fn integrate_many(
        &self,
        depth: usize,
        width: usize,
        f: &(dyn Fn(&Word) -> Result<Vec<S>> + Sync),
        summation: Summation,
    ) -> Result<Vec<S>> {
        let k = depth.max(1);
        if k > self.depth {
            return Err(Error::DepthMismatch { needed: k, available: self.depth });
        }
        let words = self.sys.words(k);
        sum_terms_many(&words, width, summation, |w| {
            let m = self.mass(w)?;
            if m.is_zero() {
                return Ok(vec![S::zero(); width]);
            }
            Ok(f(w)?.into_iter().map(|v| m.clone() * v).collect())
        })
    }

    fn describe(&self) -> String {
        format!("cylinder table on {:?}, depth {}", self.sys, self.depth)
    }
}

/// The Markov measure with the fixed-point property for first-symbol weights:
/// `μ₀([w₀…w_k]) ∝ φ_{w₀}·u_{w_k}/ρ(T)^k`, with `φ` the Perron vector of
/// `K[i][j] = V_j T[j][i]` and `u` that of `T`.
///
/// Prepending `j` to `w` multiplies mass by `Δ(j·w)/V_j`.
pub fn perron_fixed_measure<S: Scalar>(
    sys: &Subshift,
    weight: &WeightFunction<S, Word>,
    depth: usize,
) -> Result<CylinderTable<S>> {
    let delta = TransitionDensity::subshift_perron(sys.clone(), weight)?;
    let perron = delta.perron().expect("Perron mode carries eigen-data");
    let a = sys.alphabet();
    let u = &perron.shift_right;
    let rho = &perron.shift_eigenvalue;
    let t = sys.transition_matrix();
    let forward: Vec<Vec<S>> = (0..a)
        .map(|i| {
            (0..a)
                .map(|j| {
                    if t[i][j] == 1 {
                        u[j].clone() / (rho.clone() * u[i].clone())
                    } else {
                        S::zero()
                    }
                })
                .collect()
        })
        .collect();
    CylinderTable::markov(sys.clone(), perron.marginal.clone(), forward, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::functions::cylinder_indicator;
    use crate::measures::{verify_fixed_point_property, TestFunctionSet};
    use crate::scalar::Surd;

    #[test]
    fn bernoulli_product_mass() {
        let mu = CylinderTable::bernoulli(vec![Surd::ratio(1, 2), Surd::ratio(1, 2)], 2).unwrap();
        let f = cylinder_indicator(&Word::new(vec![0, 0]));
        assert_eq!(mu.integrate(&f, Summation::Sequential).unwrap(), Surd::ratio(1, 4));
        let deep = cylinder_indicator::<Surd>(&Word::new(vec![0, 0, 0]));
        assert_eq!(
            mu.integrate(&deep, Summation::Sequential),
            Err(Error::DepthMismatch { needed: 3, available: 2 })
        );
    }

    #[test]
    fn inconsistent_table_rejected() {
        let mut masses = BTreeMap::new();
        masses.insert(Word::new(vec![0]), 0.5);
        masses.insert(Word::new(vec![1]), 0.5);
        masses.insert(Word::new(vec![0, 0]), 0.5);
        masses.insert(Word::new(vec![0, 1]), 0.25);
        masses.insert(Word::new(vec![1, 0]), 0.25);
        masses.insert(Word::new(vec![1, 1]), 0.25);
        assert!(CylinderTable::from_masses(Subshift::full(2), 2, masses).is_err());
    }

    #[test]
    fn weighted_two_shift_gives_uniform_bernoulli() {
        let w = WeightFunction::SymbolTable(vec![Surd::ratio(3, 2), Surd::ratio(1, 2)]);
        let mu = perron_fixed_measure(&Subshift::full(2), &w, 4).unwrap();
        for w in Subshift::full(2).words(4) {
            assert_eq!(mu.mass(&w).unwrap(), Surd::ratio(1, 16));
        }
        let tests = TestFunctionSet::cylinders(mu.sys(), 3);
        let r = verify_fixed_point_property(mu.sys(), &mu, &w, &tests, 0.0, Summation::Sequential).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_discrepancy, 0.0);
    }

    #[test]
    fn golden_mean_parry_marginal() {
        let sys = Subshift::golden_mean();
        let w = WeightFunction::Constant(Surd::integer(1));
        let mu = perron_fixed_measure(&sys, &w, 5).unwrap();
        let lambda: Surd = "(1+sqrt(5))/2".parse().unwrap();
        let l2 = lambda.clone() * lambda;
        assert_eq!(mu.mass(&Word::new(vec![0])).unwrap(), l2.clone() / (l2 + Surd::integer(1)));
        assert!((mu.mass(&Word::new(vec![0])).unwrap().to_f64() - 0.7236067977).abs() < 1e-10);
        // strictly positive exactly on admissible words
        assert!(mu.mass(&Word::new(vec![1, 1])).unwrap().is_zero());
        for k in 1..=5 {
            for w in sys.words(k) {
                assert!(mu.mass(&w).unwrap() > Surd::integer(0));
            }
        }
        let tests = TestFunctionSet::cylinders(&sys, 4);
        let r = verify_fixed_point_property(&sys, &mu, &w, &tests, 0.0, Summation::Parallel).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn prepending_scales_by_delta_over_weight() {
        let sys = Subshift::new(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]]).unwrap();
        let v = vec![0.5, 1.25, 0.75];
        let t = sys.transition_matrix();
        let perron = crate::weights::perron_data(&t, &v).unwrap();
        // rescale so ρ(K) = ρ(T)
        let scale = perron.shift_eigenvalue / perron.eigenvalue;
        let v: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let w = WeightFunction::SymbolTable(v.clone());
        let mu = perron_fixed_measure(&sys, &w, 4).unwrap();
        let delta = TransitionDensity::subshift_perron(sys.clone(), &w).unwrap();
        for x in sys.words(3) {
            for j in 0..3u8 {
                if sys.allowed(j, x.symbols()[0]) {
                    let y = x.prepend(j);
                    let ratio = mu.mass(&y).unwrap() / mu.mass(&x).unwrap();
                    assert!((ratio - delta.density(&y).unwrap() / v[j as usize]).abs() < 1e-12);
                }
            }
        }
        let tests = TestFunctionSet::cylinders(&sys, 3);
        assert!(verify_fixed_point_property(&sys, &mu, &w, &tests, 1e-12, Summation::Sequential).unwrap().pass);
    }
}
