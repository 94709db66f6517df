use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{BranchSystem, Preimage};
use crate::error::{Error, Result};

/// `z ↦ z² + c` on the complex plane.
///
/// Branch 0 at `x` is the principal square root of `x − c`, branch 1 its
/// negation. At the critical value `x = c` both coincide at `0`; that point is
/// reported once with multiplicity 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticJulia {
    c: Complex64,
}

impl QuadraticJulia {
    pub fn new(c: Complex64) -> Self {
        QuadraticJulia { c }
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    /// Radius `(1 + √(1 + 4|c|))/2` outside which orbits escape; the filled
    /// Julia set lies inside it.
    pub fn escape_radius(&self) -> f64 {
        (1.0 + (1.0 + 4.0 * self.c.norm()).sqrt()) / 2.0
    }
}

impl BranchSystem for QuadraticJulia {
    type Point = Complex64;

    fn family(&self) -> &'static str {
        "julia"
    }

    fn degree(&self) -> usize {
        2
    }

    fn validate(&self, x: &Complex64) -> Result<()> {
        if x.re.is_finite() && x.im.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidPoint(format!("non-finite complex point {x}")))
        }
    }

    fn forward(&self, x: &Complex64) -> Result<Complex64> {
        self.validate(x)?;
        let y = x * x + self.c;
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::NumericOverflow(format!("forward image of {x} is not finite")));
        }
        Ok(y)
    }

    fn preimages(&self, x: &Complex64) -> Result<Vec<Preimage<Complex64>>> {
        self.validate(x)?;
        let w = (x - self.c).sqrt();
        if w == Complex64::new(0.0, 0.0) {
            return Ok(vec![Preimage { label: 0, point: w, multiplicity: 2 }]);
        }
        Ok(vec![Preimage::simple(0, w), Preimage::simple(1, -w)])
    }

    fn branch_count(&self, _x: &Complex64) -> Result<usize> {
        Ok(2)
    }

    fn constant_branch_count(&self) -> Option<usize> {
        Some(2)
    }

    fn same_point(&self, a: &Complex64, b: &Complex64) -> bool {
        (a - b).norm() <= 1e-12 * a.norm().max(1.0)
    }

    /// Points of a backward orbit from `1`, after a burn-in, so they sit on the Julia set.
    fn sample_points(&self, count: usize, rng: &mut ChaCha20Rng) -> Vec<Complex64> {
        let mut z = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(count);
        for step in 0..count + 64 {
            let w = (z - self.c).sqrt();
            z = if rng.gen::<bool>() { w } else { -w };
            if step >= 64 {
                out.push(z);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn forward_of_i_is_minus_one() {
        let sys = QuadraticJulia::new(Complex64::new(0.0, 0.0));
        assert_eq!(sys.forward(&Complex64::new(0.0, 1.0)).unwrap(), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn square_roots_of_one() {
        let sys = QuadraticJulia::new(Complex64::new(0.0, 0.0));
        let pre = sys.preimages(&Complex64::new(1.0, 0.0)).unwrap();
        let got: Vec<_> = pre.iter().map(|p| (p.label, p.point)).collect();
        assert_eq!(got, vec![(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(-1.0, 0.0))]);
    }

    #[test]
    fn critical_value_has_one_double_preimage() {
        let c = Complex64::new(-0.5, 0.25);
        let sys = QuadraticJulia::new(c);
        let pre = sys.preimages(&c).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].multiplicity, 2);
        assert_eq!(sys.branch_count(&c).unwrap(), 2);
    }

    #[test]
    fn round_trip_relative() {
        let mut g = rng::stream(2, 0);
        for c in [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.28, 0.53)] {
            let sys = QuadraticJulia::new(c);
            let mut pts = sys.sample_points(100, &mut g);
            pts.push(Complex64::new(3.5, -2.0));
            for x in pts {
                for p in sys.preimages(&x).unwrap() {
                    let back = sys.forward(&p.point).unwrap();
                    assert!((back - x).norm() <= 1e-12 * x.norm().max(1.0), "{back} vs {x}");
                }
            }
        }
    }

    #[test]
    fn non_finite_rejected() {
        let sys = QuadraticJulia::new(Complex64::new(0.0, 0.0));
        assert!(sys.preimages(&Complex64::new(f64::NAN, 0.0)).is_err());
    }
}
