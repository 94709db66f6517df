use super::{sum_terms, sum_terms_many, PointFunction, Quadrature};
use crate::dynamics::CirclePoint;
use crate::error::{Error, Result};
use crate::Summation;

/// A measure on `[0, 1)` given by nonnegative weights on grid nodes.
///
/// The uniform rule on midpoints `(k + ½)/M` integrates trigonometric
/// polynomials of degree below `M` exactly; tests at frequency `F` need
/// `F < M/2` so products like `V·(f∘r)` stay below that limit.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    nodes: Vec<CirclePoint>,
    weights: Vec<f64>,
}

impl GridDensity {
    /// Lebesgue measure: `M` midpoints with weight `1/M`.
    pub fn lebesgue(m: usize) -> Self {
        let den = 2 * m as u128;
        let nodes = (0..m as u128)
            .map(|k| CirclePoint::rational(2 * k + 1, den).expect("positive denominator"))
            .collect();
        GridDensity { nodes, weights: vec![1.0 / m as f64; m] }
    }

    /// Arbitrary nodes and weights; weights must be nonnegative and sum to 1 (to `1e-12`).
    pub fn from_weights(nodes: Vec<CirclePoint>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidInput("grid nodes and weights must be nonempty and of equal length".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidInput(format!("grid weight {w} is negative")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("grid weights sum to {total}")));
        }
        Ok(GridDensity { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[CirclePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Fails unless frequency `max_freq` test modes are below the Nyquist limit.
    pub fn check_nyquist(&self, max_freq: usize) -> Result<()> {
        if 2 * max_freq >= self.len() {
            return Err(Error::InvalidInput(format!(
                "test frequency {max_freq} needs a grid larger than {} (F < M/2)",
                2 * max_freq
            )));
        }
        Ok(())
    }
}

impl Quadrature<CirclePoint, f64> for GridDensity {
    fn integrate(&self, f: &PointFunction<CirclePoint, f64>, summation: Summation) -> Result<f64> {
        let idx: Vec<usize> = (0..self.nodes.len()).collect();
        sum_terms(&idx, summation, |&k| Ok(self.weights[k] * f.call(&self.nodes[k])?))
    }

    fn integrate_many(
        &self,
        _depth: usize,
        width: usize,
        f: &(dyn Fn(&CirclePoint) -> Result<Vec<f64>> + Sync),
        summation: Summation,
    ) -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..self.nodes.len()).collect();
        sum_terms_many(&idx, width, summation, |&k| {
            let w = self.weights[k];
            Ok(f(&self.nodes[k])?.into_iter().map(|v| w * v).collect())
        })
    }

    fn describe(&self) -> String {
        format!("grid density, M = {}", self.nodes.len())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;

    #[test]
    fn cosine_has_zero_mean() {
        let mu = GridDensity::lebesgue(4096);
        let f = PointFunction::new("cos", 0, |x: &CirclePoint| Ok((TAU * x.to_f64()).cos()));
        assert!(mu.integrate(&f, Summation::Sequential).unwrap().abs() < 1e-12);
        assert!(mu.integrate(&f, Summation::Parallel).unwrap().abs() < 1e-12);
    }

    #[test]
    fn parallel_sum_is_thread_independent() {
        let mu = GridDensity::lebesgue(10_000);
        let f = PointFunction::new("x", 0, |x: &CirclePoint| Ok(x.to_f64().powi(3)));
        let a = mu.integrate(&f, Summation::Parallel).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mu.integrate(&f, Summation::Parallel).unwrap());
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn weights_validated() {
        let nodes = vec![CirclePoint::zero(), CirclePoint::rational(1, 2).unwrap()];
        assert!(GridDensity::from_weights(nodes.clone(), vec![0.5, 0.4]).is_err());
        assert!(GridDensity::from_weights(nodes, vec![0.25, 0.75]).is_ok());
        assert!(GridDensity::lebesgue(16).check_nyquist(8).is_err());
    }
}
