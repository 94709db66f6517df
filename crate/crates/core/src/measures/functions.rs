use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CirclePoint, Subshift, Word};
use crate::error::Result;
use crate::scalar::Scalar;

type Eval<P, S> = Arc<dyn Fn(&P) -> Result<S> + Send + Sync>;

/// A labeled function on points.
///
/// `depth` is the number of leading symbols the function reads on a subshift
/// (callers pass words at least that long); it is ignored elsewhere.
pub struct PointFunction<P, S> {
    label: String,
    depth: usize,
    eval: Eval<P, S>,
}

impl<P, S> Clone for PointFunction<P, S> {
    fn clone(&self) -> Self {
        PointFunction { label: self.label.clone(), depth: self.depth, eval: self.eval.clone() }
    }
}

impl<P, S> fmt::Debug for PointFunction<P, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointFunction({}, depth {})", self.label, self.depth)
    }
}

impl<P, S> PointFunction<P, S> {
    pub fn new<F>(label: impl Into<String>, depth: usize, f: F) -> Self
    where
        F: Fn(&P) -> Result<S> + Send + Sync + 'static,
    {
        PointFunction { label: label.into(), depth, eval: Arc::new(f) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn call(&self, x: &P) -> Result<S> {
        (self.eval)(x)
    }
}

impl<P: 'static, S: Scalar> PointFunction<P, S> {
    pub fn constant(value: S) -> Self {
        PointFunction::new("1", 0, move |_| Ok(value.clone()))
    }
}

/// Indicator of the cylinder `[w]`.
pub fn cylinder_indicator<S: Scalar>(w: &Word) -> PointFunction<Word, S> {
    let target = w.symbols().to_vec();
    let k = target.len();
    PointFunction::new(format!("[{w:?}]"), k, move |x: &Word| {
        let s = x.symbols();
        if s.len() < k {
            return Err(crate::Error::WordTooShort { len: s.len(), needed: k });
        }
        Ok(if s[..k] == target[..] { S::one() } else { S::zero() })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum TestFamily {
    /// `1, cos 2πkx, sin 2πkx` for `1 ≤ k ≤ max_freq`.
    Trig { max_freq: usize },
    /// Indicators of every admissible word of length `1..=max_depth`.
    Cylinders { max_depth: usize },
    /// Real and imaginary parts of `z^a z̄^b` for `a + b ≤ max_degree`.
    Moments { max_degree: usize },
}

impl TestFamily {
    pub fn describe(&self) -> String {
        match self {
            TestFamily::Trig { max_freq } => format!("trig F<={max_freq}"),
            TestFamily::Cylinders { max_depth } => format!("cylinders d<={max_depth}"),
            TestFamily::Moments { max_degree } => format!("moments p<={max_degree}"),
        }
    }
}

/// A finite, deterministically ordered family of test functions.
#[derive(Debug, Clone)]
pub struct TestFunctionSet<P, S> {
    family: TestFamily,
    functions: Vec<PointFunction<P, S>>,
}

impl<P, S> TestFunctionSet<P, S> {
    pub fn family(&self) -> TestFamily {
        self.family
    }

    pub fn functions(&self) -> &[PointFunction<P, S>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Highest depth any member reads.
    pub fn max_depth(&self) -> usize {
        self.functions.iter().map(|f| f.depth).max().unwrap_or(0)
    }
}

impl TestFunctionSet<CirclePoint, f64> {
    pub fn trig(max_freq: usize) -> Self {
        let mut functions = vec![PointFunction::constant(1.0)];
        for k in 1..=max_freq {
            let kf = k as f64;
            functions.push(PointFunction::new(format!("cos{k}"), 0, move |x: &CirclePoint| {
                Ok((TAU * kf * x.to_f64()).cos())
            }));
            functions.push(PointFunction::new(format!("sin{k}"), 0, move |x: &CirclePoint| {
                Ok((TAU * kf * x.to_f64()).sin())
            }));
        }
        TestFunctionSet { family: TestFamily::Trig { max_freq }, functions }
    }
}

impl<S: Scalar> TestFunctionSet<Word, S> {
    pub fn cylinders(sys: &Subshift, max_depth: usize) -> Self {
        let functions = (1..=max_depth).flat_map(|k| sys.words(k)).map(|w| cylinder_indicator(&w)).collect();
        TestFunctionSet { family: TestFamily::Cylinders { max_depth }, functions }
    }
}

impl TestFunctionSet<Complex64, f64> {
    pub fn moments(max_degree: usize) -> Self {
        let mut functions = Vec::new();
        for total in 0..=max_degree {
            for a in (0..=total).rev() {
                let b = total - a;
                let mono = move |z: &Complex64| z.powu(a as u32) * z.conj().powu(b as u32);
                functions.push(PointFunction::new(format!("re z^{a}zb^{b}"), 0, move |z: &Complex64| Ok(mono(z).re)));
                if a != b {
                    functions.push(PointFunction::new(format!("im z^{a}zb^{b}"), 0, move |z: &Complex64| {
                        Ok(mono(z).im)
                    }));
                }
            }
        }
        TestFunctionSet { family: TestFamily::Moments { max_degree }, functions }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_sizes() {
        assert_eq!(TestFunctionSet::trig(8).len(), 17);
        let gm = Subshift::golden_mean();
        assert_eq!(TestFunctionSet::<Word, f64>::cylinders(&gm, 3).len(), 2 + 3 + 5);
        // (0,0); (1,0),(0,1); (2,0),(1,1),(0,2) with Im dropped where a = b
        assert_eq!(TestFunctionSet::moments(2).len(), 1 + 4 + 5);
    }

    #[test]
    fn indicator_reads_prefix() {
        let f = cylinder_indicator::<f64>(&Word::new(vec![0, 1]));
        assert_eq!(f.call(&Word::new(vec![0, 1, 0])).unwrap(), 1.0);
        assert_eq!(f.call(&Word::new(vec![1, 0, 1])).unwrap(), 0.0);
        assert!(f.call(&Word::new(vec![0])).is_err());
    }
}
