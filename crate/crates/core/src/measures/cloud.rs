use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{sum_terms, sum_terms_many, PointFunction, Quadrature};
use crate::dynamics::{BranchSystem, QuadraticJulia};
use crate::error::{Error, Result};
use crate::rng;
use crate::Summation;

/// Equal-weight sample points, with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCloud<P> {
    points: Vec<P>,
    seed: Option<u64>,
}

impl<P> EmpiricalCloud<P> {
    pub fn new(points: Vec<P>, seed: Option<u64>) -> Self {
        EmpiricalCloud { points, seed }
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl<P: Sync + Send> Quadrature<P, f64> for EmpiricalCloud<P> {
    /// Sample mean; an empty cloud integrates to 0.
    fn integrate(&self, f: &PointFunction<P, f64>, summation: Summation) -> Result<f64> {
        if self.points.is_empty() {
            return Ok(0.0);
        }
        let total = sum_terms(&self.points, summation, |x| f.call(x))?;
        Ok(total / self.points.len() as f64)
    }

    fn integrate_many(
        &self,
        _depth: usize,
        width: usize,
        f: &(dyn Fn(&P) -> Result<Vec<f64>> + Sync),
        summation: Summation,
    ) -> Result<Vec<f64>> {
        if self.points.is_empty() {
            return Ok(vec![0.0; width]);
        }
        let total = sum_terms_many(&self.points, width, summation, f)?;
        Ok(total.into_iter().map(|t| t / self.points.len() as f64).collect())
    }

    fn describe(&self) -> String {
        match self.seed {
            Some(s) => format!("empirical cloud, n = {}, seed {s}", self.points.len()),
            None => format!("empirical cloud, n = {}", self.points.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrolinOptions {
    pub burn: usize,
    pub samples: usize,
    pub seed: u64,
    /// Independent chains, chain `i` reading stream `(seed, i)`; outputs are
    /// concatenated in chain order.
    pub chains: usize,
    /// Keep every `thin`-th state of the chain.
    pub thin: usize,
    pub start: Complex64,
}

impl Default for BrolinOptions {
    fn default() -> Self {
        BrolinOptions { burn: 64, samples: 100_000, seed: 0, chains: 1, thin: 1, start: Complex64::new(1.0, 0.0) }
    }
}

/// Random backward orbit of `z ↦ z² + c`, each preimage taken with
/// probability 1/2 (the double root at the critical value with probability 1).
pub fn brolin_sample(sys: &QuadraticJulia, opts: &BrolinOptions) -> Result<EmpiricalCloud<Complex64>> {
    if opts.burn == 0 {
        return Err(Error::InvalidInput("burn-in must be at least 1".into()));
    }
    let chains = opts.chains.max(1);
    let thin = opts.thin.max(1);
    let per_chain: Vec<usize> =
        (0..chains).map(|i| opts.samples / chains + usize::from(i < opts.samples % chains)).collect();
    let parts = per_chain
        .par_iter()
        .enumerate()
        .map(|(chain, &count)| {
            let mut g = rng::stream(opts.seed, chain as u64);
            let mut z = opts.start;
            let mut out = Vec::with_capacity(count);
            let mut step = 0usize;
            while out.len() < count {
                let pre = sys.preimages(&z)?;
                let pick = if pre.len() == 1 { 0 } else { usize::from(g.gen::<bool>()) };
                z = pre[pick].point;
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NumericOverflow(format!("backward orbit left the representable range at step {step}")));
                }
                step += 1;
                if step > opts.burn && (step - opts.burn) % thin == 0 {
                    out.push(z);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalCloud::new(parts.concat(), Some(opts.seed)))
}
