//! The disintegration `∫ f dμ̂ = ∫∫ f dP_{x₀} dμ₀(x₀)` and the identities
//! around it, checked over a test family.
//!
//! `μ̂` exists only through the formula. Each check evaluates its two sides
//! through separate code paths: the left side integrates `V⁽ⁿ⁾·g` against
//! `μ₀`; the right side integrates fiber integrals over the weighted
//! preimage tree.

mod report;

pub use report::{CheckEntry, CheckReport, ExactValues};

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::BranchSystem;
use crate::error::{Error, Result};
use crate::measures::{verify_fixed_point_property, PointFunction, Quadrature, TestFunctionSet};
use crate::pathspace::{path_integral_many, CylinderFunctional};
use crate::scalar::Scalar;
use crate::weights::{transfer_power_many, TransitionDensity, Weight};
use crate::Summation;

impl<P, S, W: Weight<P, S> + ?Sized> Weight<P, S> for Arc<W> {
    fn value(&self, x: &P) -> Result<S> {
        (**self).value(x)
    }

    fn bound(&self) -> Option<f64> {
        (**self).bound()
    }
}

/// Per-check tolerances; 0 demands exact equality on exact backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub fixed_point: f64,
    pub disintegration: f64,
    pub quasi_invariance: f64,
    pub duality: f64,
    pub pushforward: f64,
    pub cross_oracle: f64,
}

impl Tolerances {
    pub fn uniform(t: f64) -> Self {
        Tolerances {
            fixed_point: t,
            disintegration: t,
            quasi_invariance: t,
            duality: t,
            pushforward: t.min(1e-15),
            cross_oracle: t,
        }
    }

    pub fn exact() -> Self {
        Tolerances::uniform(0.0)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::uniform(1e-8)
    }
}

/// `(X, r, V, Δ, μ₀)` with a test family; construction rejects a `μ₀`
/// without the fixed-point property.
pub struct ScenarioBundle<D: BranchSystem, S, M> {
    id: String,
    weight: Arc<dyn Weight<D::Point, S>>,
    delta: TransitionDensity<D, S>,
    mu0: M,
    tests: TestFunctionSet<D::Point, S>,
    tolerances: Tolerances,
    budget: u64,
    summation: Summation,
    fixed_point: CheckReport,
}

impl<D, S, M> ScenarioBundle<D, S, M>
where
    D: BranchSystem + 'static,
    S: Scalar,
    M: Quadrature<D::Point, S>,
{
    pub fn new<W>(
        id: &str,
        weight: W,
        delta: TransitionDensity<D, S>,
        mu0: M,
        tests: TestFunctionSet<D::Point, S>,
        tolerances: Tolerances,
        budget: u64,
        summation: Summation,
    ) -> Result<Self>
    where
        W: Weight<D::Point, S> + 'static,
    {
        let weight: Arc<dyn Weight<D::Point, S>> = Arc::new(weight);
        let fixed_point =
            verify_fixed_point_property(delta.sys(), &mu0, &weight, &tests, tolerances.fixed_point, summation)?
                .with_bundle(id);
        if !fixed_point.pass {
            return Err(Error::InvalidInput(format!(
                "μ₀ lacks the fixed-point property: max |∫V·(f∘r)dμ₀ − ∫f dμ₀| = {:e} > {:e}",
                fixed_point.max_discrepancy, tolerances.fixed_point
            )));
        }
        Ok(ScenarioBundle { id: id.to_string(), weight, delta, mu0, tests, tolerances, budget, summation, fixed_point })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sys(&self) -> &D {
        self.delta.sys()
    }

    pub fn delta(&self) -> &TransitionDensity<D, S> {
        &self.delta
    }

    pub fn mu0(&self) -> &M {
        &self.mu0
    }

    pub fn tests(&self) -> &TestFunctionSet<D::Point, S> {
        &self.tests
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// The fixed-point report computed at construction.
    pub fn fixed_point_report(&self) -> &CheckReport {
        &self.fixed_point
    }

    fn report(&self, check: &str, tol: f64) -> CheckReport {
        let mut r = CheckReport::new(check, tol).with_bundle(&self.id);
        r.echo("measure", self.mu0.describe());
        r.echo("tests", self.tests.family().describe());
        r.echo("budget", self.budget.to_string());
        r
    }

    /// `∫ V⁽ⁿ⁾·g dμ₀` with `V⁽ⁿ⁾ = V·V∘r·…·V∘r^{n−1}`: the value of `∫ g∘θₙ dμ̂`.
    pub fn lhs_integral(&self, g: &PointFunction<D::Point, S>, n: usize) -> Result<S> {
        Ok(self.lhs_many(std::slice::from_ref(g), n)?.remove(0))
    }

    /// `∫ (∫ g∘θₙ dP_{x₀}) dμ₀(x₀)`.
    pub fn rhs_integral(&self, g: &PointFunction<D::Point, S>, n: usize) -> Result<S> {
        Ok(self.rhs_many(std::slice::from_ref(g), n)?.remove(0))
    }

    /// [`Self::lhs_integral`] for tests of one common depth.
    fn lhs_many(&self, gs: &[PointFunction<D::Point, S>], n: usize) -> Result<Vec<S>> {
        let (sys, w) = (self.sys().clone(), self.weight.clone());
        let depth = common_depth(gs).max(n);
        let integrand = move |x: &D::Point| -> Result<Vec<S>> {
            let mut prod = S::one();
            let mut y = x.clone();
            for k in 0..n {
                prod = prod * w.value(&y)?;
                if prod.is_zero() {
                    return Ok(vec![prod; gs.len()]);
                }
                if k + 1 < n {
                    y = sys.forward(&y)?;
                }
            }
            gs.iter().map(|g| Ok(prod.clone() * g.call(x)?)).collect()
        };
        self.mu0.integrate_many(depth, gs.len(), &integrand, self.summation)
    }

    fn rhs_many(&self, gs: &[PointFunction<D::Point, S>], n: usize) -> Result<Vec<S>> {
        self.fiber_many(gs, n, None)
    }

    /// `∫ h(x₀)·(∫ g∘θₙ dP_{x₀}) dμ₀(x₀)` for each `g`, with `h = V` when a
    /// weight is given and `h ≡ 1` otherwise. The fiber integrals walk the
    /// preimage tree once for all tests.
    fn fiber_many(
        &self,
        gs: &[PointFunction<D::Point, S>],
        n: usize,
        weight: Option<Arc<dyn Weight<D::Point, S>>>,
    ) -> Result<Vec<S>> {
        let fs: Vec<CylinderFunctional<D::Point, S>> =
            gs.iter().map(|g| CylinderFunctional::coordinate(n, g.clone())).collect();
        let depth = common_depth(gs).saturating_sub(n).max(1);
        let integrand = |x0: &D::Point| -> Result<Vec<S>> {
            let v = match &weight {
                Some(w) => {
                    let v = w.value(x0)?;
                    if v.is_zero() {
                        return Ok(vec![v; fs.len()]);
                    }
                    v
                }
                None => S::one(),
            };
            let fiber = path_integral_many(&self.delta, x0, &fs, n, self.budget, Summation::Sequential)?;
            Ok(fiber.into_iter().map(|p| v.clone() * p).collect())
        };
        self.mu0.integrate_many(depth, gs.len(), &integrand, self.summation)
    }

    /// `∫ Rⁿ g dμ₀` for each `g`, by nested transfer operator applications.
    fn transfer_many(&self, gs: &[PointFunction<D::Point, S>], n: usize) -> Result<Vec<S>> {
        let depth = common_depth(gs).saturating_sub(n).max(1);
        let eval = |y: &D::Point| -> Result<Vec<S>> { gs.iter().map(|g| g.call(y)).collect() };
        let integrand = |x: &D::Point| transfer_power_many(&self.delta, &eval, x, n, self.budget);
        self.mu0.integrate_many(depth, gs.len(), &integrand, self.summation)
    }

    /// Test indices grouped by the depth they read, ascending within a group.
    fn depth_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, g) in self.tests.functions().iter().enumerate() {
            groups.entry(g.depth()).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Evaluates `side` on every (depth group, n) batch concurrently and
    /// pushes the entries in (test index, depth) order.
    fn run<F>(&self, mut report: CheckReport, depths: &[usize], tol: f64, side: F) -> Result<CheckReport>
    where
        F: Fn(&[PointFunction<D::Point, S>], usize) -> Result<(Vec<S>, Vec<S>)> + Sync,
    {
        let groups = self.depth_groups();
        let tasks: Vec<(usize, usize)> =
            (0..groups.len()).flat_map(|k| depths.iter().map(move |&n| (k, n))).collect();
        let all = self.tests.functions();
        let results = tasks
            .par_iter()
            .map(|&(k, n)| {
                let gs: Vec<PointFunction<D::Point, S>> = groups[k].iter().map(|&i| all[i].clone()).collect();
                let (l, r) = side(&gs, n)?;
                Ok(groups[k]
                    .iter()
                    .zip(l.iter().zip(&r))
                    .map(|(&i, (l, r))| ((i, n), CheckEntry::compare(all[i].label(), Some(n), l, r, tol)))
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut by_pair: BTreeMap<(usize, usize), CheckEntry> = results.into_iter().flatten().collect();
        for i in 0..all.len() {
            for &n in depths {
                if let Some(e) = by_pair.remove(&(i, n)) {
                    report.push(e);
                }
            }
        }
        Ok(report)
    }

    /// `lhs_integral(g, n) = rhs_integral(g, n)` for every test and depth.
    pub fn verify_disintegration(&self, depths: &[usize]) -> Result<CheckReport> {
        let tol = self.tolerances.disintegration;
        let mut report = self.report("disintegration", tol);
        report.echo("depths", format!("{depths:?}"));
        self.run(report, depths, tol, |gs, n| Ok((self.lhs_many(gs, n)?, self.rhs_many(gs, n)?)))
    }

    /// `∫ g∘θₙ dμ̂ = ∫ (V∘θ₀)·(g∘θ_{n−1}) dμ̂`, the quasi-invariance
    /// `d(μ̂∘r̂) = V∘θ₀ dμ̂` tested on `f = g∘θₙ` with `f∘r̂ = g∘θ_{n−1}`.
    ///
    /// Left: `lhs_integral(g, n)`. Right: `∫ V(x₀)·∫ g∘θ_{n−1} dP_{x₀} dμ₀`.
    pub fn verify_quasi_invariance(&self, depths: &[usize]) -> Result<CheckReport> {
        if depths.contains(&0) {
            return Err(Error::InvalidInput("quasi-invariance needs n ≥ 1".into()));
        }
        let tol = self.tolerances.quasi_invariance;
        let mut report = self.report("quasi-invariance", tol);
        report.echo("depths", format!("{depths:?}"));
        self.run(report, depths, tol, |gs, n| {
            Ok((self.lhs_many(gs, n)?, self.fiber_many(gs, n - 1, Some(self.weight.clone()))?))
        })
    }

    /// `∫ V·f dμ₀ = ∫ (R f) dμ₀` for every test `f`.
    pub fn verify_duality(&self) -> Result<CheckReport> {
        let tol = self.tolerances.duality;
        let report = self.report("duality", tol);
        self.run(report, &[0], tol, |gs, _| {
            // V·f as the depth-1 case of the left side, R f through one transfer step
            Ok((self.lhs_many(gs, 1)?, self.transfer_many(gs, 1)?))
        })
    }

    /// The `θ₀`-marginal of `μ̂` is `μ₀`: both sides at `n = 0` against `∫ g dμ₀`.
    pub fn verify_pushforward(&self) -> Result<CheckReport> {
        let tol = self.tolerances.pushforward;
        let mut report = self.report("pushforward", tol);
        let entries = (0..self.tests.len())
            .into_par_iter()
            .map(|i| {
                let g = &self.tests.functions()[i];
                let base = self.mu0.integrate(g, self.summation)?;
                let l = self.lhs_integral(g, 0)?;
                let r = self.rhs_integral(g, 0)?;
                Ok([
                    CheckEntry::compare(&format!("lhs {}", g.label()), Some(0), &l, &base, tol),
                    CheckEntry::compare(&format!("rhs {}", g.label()), Some(0), &r, &base, tol),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        for e in entries.into_iter().flatten() {
            report.push(e);
        }
        Ok(report)
    }

    /// `∫ V⁽ⁿ⁾·g dμ₀ = ∫ Rⁿ g dμ₀`, the second side through nested transfer
    /// operator applications rather than the path walk.
    pub fn verify_cross_oracle(&self, depths: &[usize]) -> Result<CheckReport> {
        let tol = self.tolerances.cross_oracle;
        let mut report = self.report("cross-oracle", tol);
        report.echo("depths", format!("{depths:?}"));
        self.run(report, depths, tol, |gs, n| Ok((self.lhs_many(gs, n)?, self.transfer_many(gs, n)?)))
    }
}

fn common_depth<P, S>(gs: &[PointFunction<P, S>]) -> usize {
    gs.iter().map(|g| g.depth()).max().unwrap_or(0)
}
