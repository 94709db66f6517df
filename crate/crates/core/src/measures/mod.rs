//! Representations of the base measure `μ₀`: exact cylinder tables on
//! subshifts, uniform-grid densities on the circle, and equal-weight sample
//! clouds (the Brolin measure on Julia sets).

mod cloud;
mod cylinder;
mod functions;
mod grid;

pub use cloud::{brolin_sample, BrolinOptions, EmpiricalCloud};
pub use cylinder::{perron_fixed_measure, CylinderTable};
pub use functions::{cylinder_indicator, PointFunction, TestFamily, TestFunctionSet};
pub use grid::GridDensity;

use rayon::prelude::*;

use crate::disintegration::{CheckEntry, CheckReport};
use crate::dynamics::BranchSystem;
use crate::error::Result;
use crate::scalar::{sum_pairwise, Scalar};
use crate::weights::Weight;
use crate::Summation;

/// A measure that integrates point functions by its own quadrature rule.
pub trait Quadrature<P, S: Scalar>: Send + Sync {
    /// `∫ f dμ`. Cylinder tables need `f.depth()` within the table depth.
    fn integrate(&self, f: &PointFunction<P, S>, summation: Summation) -> Result<S>;

    /// Componentwise `∫ f dμ` for an integrand with `width` components, each
    /// reading `depth` symbols. Component `i` is bit-identical to
    /// [`Quadrature::integrate`] of the `i`-th coordinate function.
    fn integrate_many(
        &self,
        depth: usize,
        width: usize,
        f: &(dyn Fn(&P) -> Result<Vec<S>> + Sync),
        summation: Summation,
    ) -> Result<Vec<S>>;

    /// Short description for report configuration echoes.
    fn describe(&self) -> String;
}

const CHUNK: usize = 1024;

/// `Σ_items f(item)`, either left to right or as in-order chunk sums combined
/// pairwise. Both orders are fixed, so results do not depend on thread count.
pub(crate) fn sum_terms<T, S, F>(items: &[T], summation: Summation, f: F) -> Result<S>
where
    T: Sync,
    S: Scalar,
    F: Fn(&T) -> Result<S> + Sync,
{
    match summation {
        Summation::Sequential => {
            let mut acc = S::zero();
            for it in items {
                acc = acc + f(it)?;
            }
            Ok(acc)
        }
        Summation::Parallel => {
            let sums = items
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut acc = S::zero();
                    for it in chunk {
                        acc = acc + f(it)?;
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<S>>>()?;
            Ok(sum_pairwise(sums))
        }
    }
}

/// [`sum_terms`] for vector-valued terms, in the same order per component.
pub(crate) fn sum_terms_many<T, S, F>(items: &[T], width: usize, summation: Summation, f: F) -> Result<Vec<S>>
where
    T: Sync,
    S: Scalar,
    F: Fn(&T) -> Result<Vec<S>> + Sync,
{
    let fold = |chunk: &[T]| -> Result<Vec<S>> {
        let mut acc = vec![S::zero(); width];
        for it in chunk {
            for (a, v) in acc.iter_mut().zip(f(it)?) {
                *a = a.clone() + v;
            }
        }
        Ok(acc)
    };
    match summation {
        Summation::Sequential => fold(items),
        Summation::Parallel => {
            let sums = items.par_chunks(CHUNK).map(fold).collect::<Result<Vec<Vec<S>>>>()?;
            let mut columns: Vec<Vec<S>> = vec![Vec::with_capacity(sums.len()); width];
            for row in sums {
                for (c, v) in columns.iter_mut().zip(row) {
                    c.push(v);
                }
            }
            Ok(columns.into_iter().map(sum_pairwise).collect())
        }
    }
}

/// For each test `f`: `∫ V·(f∘r) dμ₀` against `∫ f dμ₀`.
///
/// With `tol = 0` a test passes only on exact equality.
pub fn verify_fixed_point_property<D, S, M, W>(
    sys: &D,
    mu0: &M,
    weight: &W,
    tests: &TestFunctionSet<D::Point, S>,
    tol: f64,
    summation: Summation,
) -> Result<CheckReport>
where
    D: BranchSystem + 'static,
    S: Scalar,
    M: Quadrature<D::Point, S>,
    W: Weight<D::Point, S> + Clone + 'static,
{
    let mut report = CheckReport::new("fixed-point", tol);
    report.echo("measure", mu0.describe());
    report.echo("tests", tests.family().describe());
    for f in tests.functions() {
        let (s, w, g) = (sys.clone(), weight.clone(), f.clone());
        let pulled = PointFunction::new(format!("V·({})∘r", f.label()), f.depth() + 1, move |x: &D::Point| {
            Ok(w.value(x)? * g.call(&s.forward(x)?)?)
        });
        let lhs = mu0.integrate(&pulled, summation)?;
        let rhs = mu0.integrate(f, summation)?;
        report.push(CheckEntry::compare(f.label(), None, &lhs, &rhs, tol));
    }
    Ok(report)
}
