//! Backward orbits and the path measures `P_x`.
//!
//! `P_x` is never materialized: it is represented by exact integrals of
//! cylinder functionals over the weighted preimage tree, and by a sampler
//! that walks the tree choosing branches with probability `Δ`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::disintegration::{CheckEntry, CheckReport};
use crate::dynamics::{check_budget, BranchSystem};
use crate::error::{Error, Result};
use crate::measures::PointFunction;
use crate::scalar::{sum_pairwise, Scalar};
use crate::weights::TransitionDensity;
use crate::Summation;

/// Defect in `Σ Δ` above which a visited point aborts sampling.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// `(x₀, x₁, …, xₙ)` with `r(x_{k+1}) = x_k`, and the labels `i₁…iₙ` of the
/// branches taken.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPrefix<P> {
    points: Vec<P>,
    labels: Vec<usize>,
}

impl<P: Clone> PathPrefix<P> {
    pub fn root(x0: P) -> Self {
        PathPrefix { points: vec![x0], labels: Vec::new() }
    }

    /// Checks `x_k = branch(i_k, x_{k−1})` against the system.
    pub fn from_parts<D>(sys: &D, points: Vec<P>, labels: Vec<usize>) -> Result<Self>
    where
        D: BranchSystem<Point = P>,
        P: fmt::Debug,
    {
        if points.len() != labels.len() + 1 {
            return Err(Error::InvalidInput("a path needs one more point than labels".into()));
        }
        for (k, &label) in labels.iter().enumerate() {
            let pre = sys.preimages(&points[k])?;
            let hit = pre.iter().find(|p| p.label == label);
            match hit {
                Some(p) if sys.same_point(&p.point, &points[k + 1]) => {}
                _ => {
                    return Err(Error::InvalidPoint(format!(
                        "{:?} is not branch {label} at {:?}",
                        points[k + 1], points[k]
                    )))
                }
            }
        }
        Ok(PathPrefix { points, labels })
    }

    pub fn depth(&self) -> usize {
        self.labels.len()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `x_k`.
    pub fn point(&self, k: usize) -> &P {
        &self.points[k]
    }

    pub fn last(&self) -> &P {
        self.points.last().expect("paths are nonempty")
    }

    fn push(&mut self, label: usize, point: P) {
        self.labels.push(label);
        self.points.push(point);
    }

    fn pop(&mut self) {
        self.labels.pop();
        self.points.pop();
    }
}

type PathFn<P, S> = Arc<dyn Fn(&PathPrefix<P>) -> Result<S> + Send + Sync>;

/// A bounded function on path space reading finitely many coordinates.
pub enum CylinderFunctional<P, S> {
    /// Reads `x₀…x_depth` and the first `depth` labels.
    Path { depth: usize, label: String, eval: PathFn<P, S> },
    /// `g(x_n)`, the form `g∘θₙ`.
    Coordinate { n: usize, g: PointFunction<P, S> },
}

impl<P, S> Clone for CylinderFunctional<P, S> {
    fn clone(&self) -> Self {
        match self {
            CylinderFunctional::Path { depth, label, eval } => {
                CylinderFunctional::Path { depth: *depth, label: label.clone(), eval: eval.clone() }
            }
            CylinderFunctional::Coordinate { n, g } => CylinderFunctional::Coordinate { n: *n, g: g.clone() },
        }
    }
}

impl<P: Clone, S> fmt::Debug for CylinderFunctional<P, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CylinderFunctional({}, depth {})", self.label(), self.depth())
    }
}

impl<P: Clone, S> CylinderFunctional<P, S> {
    pub fn path<F>(label: impl Into<String>, depth: usize, f: F) -> Self
    where
        F: Fn(&PathPrefix<P>) -> Result<S> + Send + Sync + 'static,
    {
        CylinderFunctional::Path { depth, label: label.into(), eval: Arc::new(f) }
    }

    /// `g∘θₙ`.
    pub fn coordinate(n: usize, g: PointFunction<P, S>) -> Self {
        CylinderFunctional::Coordinate { n, g }
    }

    pub fn depth(&self) -> usize {
        match self {
            CylinderFunctional::Path { depth, .. } => *depth,
            CylinderFunctional::Coordinate { n, .. } => *n,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CylinderFunctional::Path { label, .. } => label.clone(),
            CylinderFunctional::Coordinate { n, g } => format!("({})∘θ{n}", g.label()),
        }
    }

    pub fn eval(&self, path: &PathPrefix<P>) -> Result<S> {
        if path.depth() < self.depth() {
            return Err(Error::InvalidInput(format!(
                "functional of depth {} evaluated on a depth-{} path",
                self.depth(),
                path.depth()
            )));
        }
        match self {
            CylinderFunctional::Path { eval, .. } => eval(path),
            CylinderFunctional::Coordinate { n, g } => g.call(path.point(*n)),
        }
    }
}

impl<P: Clone + 'static, S: Scalar> CylinderFunctional<P, S> {
    /// `1` when the first labels of the path equal `labels`.
    pub fn label_indicator(labels: Vec<usize>) -> Self {
        let text: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        let k = labels.len();
        CylinderFunctional::path(format!("labels({})", text.join(",")), k, move |p: &PathPrefix<P>| {
            Ok(if p.labels()[..k] == labels[..] { S::one() } else { S::zero() })
        })
    }
}

/// `Δ⁽ⁿ⁾ = Π_{k=1..n} Δ(x_k)`; 1 on a depth-0 path.
pub fn cocycle_weight<D: BranchSystem, S: Scalar>(delta: &TransitionDensity<D, S>, path: &PathPrefix<D::Point>) -> Result<S> {
    let mut w = S::one();
    for x in &path.points()[1..] {
        w = w * delta.density(x)?;
    }
    Ok(w)
}

/// `∫ F dP_{x₀}` as the weighted sum over the depth-`n` preimage tree.
///
/// Zero-weight branches are skipped. In parallel mode the first-level
/// branches are summed concurrently and combined pairwise in label order.
pub fn path_integral<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    x0: &D::Point,
    f: &CylinderFunctional<D::Point, S>,
    n: usize,
    budget: u64,
    summation: Summation,
) -> Result<S> {
    if f.depth() > n {
        return Err(Error::InvalidInput(format!("functional depth {} exceeds the path depth {n}", f.depth())));
    }
    let sys = delta.sys();
    check_budget(sys.degree(), n, budget)?;
    sys.validate(x0)?;
    let mut root = PathPrefix::root(x0.clone());
    if n == 0 || summation == Summation::Sequential {
        return walk(delta, f, &mut root, S::one(), n);
    }
    let first = sys.preimages(x0)?;
    let parts = first
        .par_iter()
        .map(|p| {
            let w = S::from_usize(p.multiplicity as usize) * delta.density(&p.point)?;
            if w.is_zero() {
                return Ok(S::zero());
            }
            let mut path = root.clone();
            path.push(p.label, p.point.clone());
            walk(delta, f, &mut path, w, n)
        })
        .collect::<Result<Vec<S>>>()?;
    root.pop();
    Ok(sum_pairwise(parts))
}

fn walk<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    f: &CylinderFunctional<D::Point, S>,
    path: &mut PathPrefix<D::Point>,
    weight: S,
    n: usize,
) -> Result<S> {
    if path.depth() == n {
        return Ok(weight * f.eval(path)?);
    }
    let mut acc = S::zero();
    for p in delta.sys().preimages(path.last())? {
        let w = S::from_usize(p.multiplicity as usize) * delta.density(&p.point)?;
        if w.is_zero() {
            continue;
        }
        path.push(p.label, p.point);
        let term = walk(delta, f, path, weight.clone() * w, n);
        path.pop();
        acc = acc + term?;
    }
    Ok(acc)
}

/// [`path_integral`] of several functionals over one walk of the tree.
///
/// Entry `i` is bit-identical to `path_integral` of `fs[i]`.
pub fn path_integral_many<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    x0: &D::Point,
    fs: &[CylinderFunctional<D::Point, S>],
    n: usize,
    budget: u64,
    summation: Summation,
) -> Result<Vec<S>> {
    if let Some(f) = fs.iter().find(|f| f.depth() > n) {
        return Err(Error::InvalidInput(format!("functional depth {} exceeds the path depth {n}", f.depth())));
    }
    let sys = delta.sys();
    check_budget(sys.degree(), n, budget)?;
    sys.validate(x0)?;
    let mut root = PathPrefix::root(x0.clone());
    if n == 0 || summation == Summation::Sequential {
        return walk_many(delta, fs, &mut root, S::one(), n);
    }
    let first = sys.preimages(x0)?;
    let parts = first
        .par_iter()
        .map(|p| {
            let w = S::from_usize(p.multiplicity as usize) * delta.density(&p.point)?;
            if w.is_zero() {
                return Ok(vec![S::zero(); fs.len()]);
            }
            let mut path = root.clone();
            path.push(p.label, p.point.clone());
            walk_many(delta, fs, &mut path, w, n)
        })
        .collect::<Result<Vec<Vec<S>>>>()?;
    let mut columns: Vec<Vec<S>> = vec![Vec::with_capacity(parts.len()); fs.len()];
    for row in parts {
        for (c, v) in columns.iter_mut().zip(row) {
            c.push(v);
        }
    }
    Ok(columns.into_iter().map(sum_pairwise).collect())
}

fn walk_many<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    fs: &[CylinderFunctional<D::Point, S>],
    path: &mut PathPrefix<D::Point>,
    weight: S,
    n: usize,
) -> Result<Vec<S>> {
    if path.depth() == n {
        return fs.iter().map(|f| Ok(weight.clone() * f.eval(path)?)).collect();
    }
    let mut acc = vec![S::zero(); fs.len()];
    for p in delta.sys().preimages(path.last())? {
        let w = S::from_usize(p.multiplicity as usize) * delta.density(&p.point)?;
        if w.is_zero() {
            continue;
        }
        path.push(p.label, p.point);
        let term = walk_many(delta, fs, path, weight.clone() * w, n);
        path.pop();
        for (a, v) in acc.iter_mut().zip(term?) {
            *a = a.clone() + v;
        }
    }
    Ok(acc)
}

/// Kolmogorov consistency: `F` of depth `n` integrated at depths `n` and `n + 1`.
pub fn consistency_check<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    x0: &D::Point,
    f: &CylinderFunctional<D::Point, S>,
    tol: f64,
    budget: u64,
    summation: Summation,
) -> Result<CheckReport> {
    let n = f.depth();
    let a = path_integral(delta, x0, f, n, budget, summation)?;
    let b = path_integral(delta, x0, f, n + 1, budget, summation)?;
    let mut report = CheckReport::new("consistency", tol);
    report.echo("x0", format!("{x0:?}"));
    report.push(CheckEntry::compare(&f.label(), Some(n), &a, &b, tol));
    Ok(report)
}

/// Draws a depth-`n` path from `P_{x₀}`.
///
/// Defects in `Σ Δ` up to [`RENORMALIZE_TOL`] are renormalized away; larger
/// ones fail with the offending point.
pub fn sample_path<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    x0: &D::Point,
    n: usize,
    rng: &mut ChaCha20Rng,
) -> Result<PathPrefix<D::Point>> {
    let sys = delta.sys();
    sys.validate(x0)?;
    let mut path = PathPrefix::root(x0.clone());
    for _ in 0..n {
        let pre = sys.preimages(path.last())?;
        let weights: Vec<f64> = pre
            .iter()
            .map(|p| Ok(p.multiplicity as f64 * delta.density(&p.point)?.to_f64()))
            .collect::<Result<_>>()?;
        let total: f64 = weights.iter().sum();
        if !((total - 1.0).abs() <= RENORMALIZE_TOL) {
            return Err(Error::NormalizationDefect { at: format!("{:?}", path.last()), sum: total });
        }
        let u = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if *w > 0.0 && u < acc {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave u just above the last partial sum
        let i = pick.unwrap_or_else(|| weights.iter().rposition(|w| *w > 0.0).expect("positive total"));
        let chosen = pre.into_iter().nth(i).expect("index in range");
        path.push(chosen.label, chosen.point);
    }
    Ok(path)
}

/// `r̂`: `(x₀, …, xₙ) ↦ (r(x₀), x₀, …, xₙ)`.
pub fn shift_extend<D: BranchSystem>(sys: &D, path: &PathPrefix<D::Point>) -> Result<PathPrefix<D::Point>> {
    let x0 = path.point(0);
    let y = sys.forward(x0)?;
    let label = sys
        .preimages(&y)?
        .into_iter()
        .find(|p| sys.same_point(&p.point, x0))
        .map(|p| p.label)
        .ok_or_else(|| Error::InvalidPoint(format!("{x0:?} is not among the preimages of its image")))?;
    let mut points = Vec::with_capacity(path.points.len() + 1);
    points.push(y);
    points.extend(path.points.iter().cloned());
    let mut labels = Vec::with_capacity(path.labels.len() + 1);
    labels.push(label);
    labels.extend_from_slice(&path.labels);
    Ok(PathPrefix { points, labels })
}

/// Drops `x₀`.
pub fn shift_drop<P: Clone>(path: &PathPrefix<P>) -> Result<PathPrefix<P>> {
    if path.depth() == 0 {
        return Err(Error::EmptyPath);
    }
    Ok(PathPrefix { points: path.points[1..].to_vec(), labels: path.labels[1..].to_vec() })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;
    use crate::dynamics::{Circle, CirclePoint, Subshift, Word, DEFAULT_NODE_BUDGET};
    use crate::rng;
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
    fn cocycle_examples() {
        let d = haar();
        let zero = CirclePoint::zero();
        assert_eq!(cocycle_weight(&d, &PathPrefix::root(zero)).unwrap(), 1.0);
        let sys = *d.sys();
        let p = PathPrefix::from_parts(&sys, vec![zero; 3], vec![0, 0]).unwrap();
        assert!((cocycle_weight(&d, &p).unwrap() - 1.0).abs() < 1e-15);
        let half = CirclePoint::rational(1, 2).unwrap();
        let p = PathPrefix::from_parts(&sys, vec![zero, half], vec![1]).unwrap();
        assert!(cocycle_weight(&d, &p).unwrap().abs() < 1e-16);
        assert!(PathPrefix::from_parts(&sys, vec![zero, half], vec![0]).is_err());
    }

    #[test]
    fn path_integral_examples() {
        let d = weighted_shift();
        let x = Word::new(vec![1, 0]);
        let f = CylinderFunctional::label_indicator(vec![0, 0]);
        assert_eq!(path_integral(&d, &x, &f, 2, DEFAULT_NODE_BUDGET, Summation::Sequential).unwrap(), Surd::ratio(9, 16));
        let one = CylinderFunctional::coordinate(0, PointFunction::constant(Surd::integer(1)));
        assert_eq!(path_integral(&d, &x, &one, 4, DEFAULT_NODE_BUDGET, Summation::Parallel).unwrap(), Surd::integer(1));

        let h = haar();
        let at_zero = CylinderFunctional::coordinate(
            1,
            PointFunction::new("x=0", 0, |y: &CirclePoint| Ok(if *y == CirclePoint::zero() { 1.0 } else { 0.0 })),
        );
        let v = path_integral(&h, &CirclePoint::zero(), &at_zero, 1, DEFAULT_NODE_BUDGET, Summation::Sequential);
        assert!((v.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn batched_walk_matches_single_walks() {
        let h = haar();
        let x = CirclePoint::from_f64(0.3).unwrap();
        let fs: Vec<CylinderFunctional<CirclePoint, f64>> = (1..4)
            .map(|k| {
                let kf = k as f64;
                CylinderFunctional::coordinate(
                    5,
                    PointFunction::new(format!("cos{k}"), 0, move |y: &CirclePoint| Ok((TAU * kf * y.to_f64()).cos())),
                )
            })
            .collect();
        for sum in [Summation::Sequential, Summation::Parallel] {
            let many = path_integral_many(&h, &x, &fs, 5, DEFAULT_NODE_BUDGET, sum).unwrap();
            for (f, m) in fs.iter().zip(&many) {
                assert_eq!(path_integral(&h, &x, f, 5, DEFAULT_NODE_BUDGET, sum).unwrap().to_bits(), m.to_bits());
            }
        }
    }

    #[test]
    fn theta_zero_marginal_is_trivial() {
        let h = haar();
        let x = CirclePoint::from_f64(0.2).unwrap();
        let g = PointFunction::new("x", 0, |y: &CirclePoint| Ok(y.to_f64()));
        let f = CylinderFunctional::coordinate(0, g);
        for n in 0..5 {
            let v = path_integral(&h, &x, &f, n, DEFAULT_NODE_BUDGET, Summation::Sequential).unwrap();
            assert!((v - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn label_masses_match_cocycle_and_sum_to_one() {
        let sys = Subshift::golden_mean();
        let d = sys.derive_delta(&WeightFunction::Constant(Surd::integer(1)), DeltaMode::SubshiftPerron).unwrap();
        let x = Word::new(vec![0, 1]);
        let tree = crate::dynamics::preimage_tree(&sys, &x, 4, DEFAULT_NODE_BUDGET).unwrap();
        let mut total = Surd::integer(0);
        for node in tree {
            let f = CylinderFunctional::label_indicator(node.labels.clone());
            let m = path_integral(&d, &x, &f, 4, DEFAULT_NODE_BUDGET, Summation::Sequential).unwrap();
            let mut pts = vec![x.clone()];
            for k in 1..=4 {
                pts.push(Word::new(node.point.symbols()[4 - k..].to_vec()));
            }
            let path = PathPrefix::from_parts(&sys, pts, node.labels).unwrap();
            assert_eq!(m, cocycle_weight(&d, &path).unwrap());
            total = total + m;
        }
        assert_eq!(total, Surd::integer(1));
    }

    #[test]
    fn sampler_examples() {
        let h = haar();
        let mut g = rng::stream(1, 0);
        let p = sample_path(&h, &CirclePoint::zero(), 12, &mut g).unwrap();
        assert!(p.points().iter().all(|x| *x == CirclePoint::zero()));
        let p = sample_path(&h, &CirclePoint::zero(), 0, &mut g).unwrap();
        assert_eq!(p.depth(), 0);

        let bad = TransitionDensity::explicit(Circle::new(2).unwrap(), |_y: &CirclePoint| Ok(0.5)).unwrap();
        // a density that drifts off normalization away from the validated sample
        let drift = TransitionDensity::explicit(Circle::new(2).unwrap(), |y: &CirclePoint| {
            Ok(if y.to_f64() < 1e-6 { 0.6 } else { 0.5 })
        });
        assert!(sample_path(&bad, &CirclePoint::zero(), 3, &mut g).is_ok());
        if let Ok(drift) = drift {
            assert!(matches!(
                sample_path(&drift, &CirclePoint::zero(), 1, &mut g),
                Err(Error::NormalizationDefect { .. })
            ));
        }
    }

    #[test]
    fn shift_pair_inverts() {
        let sys = Circle::new(2).unwrap();
        let p = PathPrefix::root(CirclePoint::from_f64(0.75).unwrap());
        let e = shift_extend(&sys, &p).unwrap();
        assert_eq!(e.points(), &[CirclePoint::rational(1, 2).unwrap(), CirclePoint::rational(3, 4).unwrap()]);
        assert_eq!(shift_drop(&e).unwrap(), p);
        assert_eq!(shift_drop(&p), Err(Error::EmptyPath));

        let shift = Subshift::golden_mean();
        let w = PathPrefix::root(Word::new(vec![0, 1, 0]));
        let e = shift_extend(&shift, &w).unwrap();
        assert_eq!(e.points(), &[Word::new(vec![1, 0]), Word::new(vec![0, 1, 0])]);

        let h = haar();
        let mut g = rng::stream(5, 2);
        for _ in 0..20 {
            let x = CirclePoint::from_f64(g.gen::<f64>()).unwrap();
            let p = sample_path(&h, &x, 4, &mut g).unwrap();
            assert_eq!(shift_drop(&shift_extend(&sys, &p).unwrap()).unwrap(), p);
            let d = shift_drop(&p).unwrap();
            let back = shift_extend(&sys, &d).unwrap();
            assert_eq!(back.labels()[1..], p.labels()[1..]);
            assert!(sys.same_point(back.point(0), p.point(0)));
        }
    }
}
