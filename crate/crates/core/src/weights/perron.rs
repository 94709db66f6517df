use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sup-norm change in the eigenvector at which power iteration stops.
pub const POWER_TOL: f64 = 1e-14;
pub const POWER_MAX_ITERS: usize = 100_000;

/// Perron eigen-data of the weighted matrix `K[i][j] = V(j)·T[j][i]` and of
/// the transition matrix `T` itself.
///
/// Vectors are normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronData<S> {
    /// `ρ(K)`.
    pub eigenvalue: S,
    /// `φ` with `K φ = ρ(K) φ`.
    pub right: Vec<S>,
    /// `ψ` with `ψ K = ρ(K) ψ`.
    pub left: Vec<S>,
    /// `ρ(T)`.
    pub shift_eigenvalue: S,
    /// `u` with `T u = ρ(T) u`.
    pub shift_right: Vec<S>,
    /// Symbol marginal of the fixed measure, `π_a ∝ φ_a·u_a`.
    pub marginal: Vec<S>,
}

impl<S: Scalar> PerronData<S> {
    /// `ρ(K)/ρ(T)`; the fixed-point property needs exactly 1.
    pub fn normalized_eigenvalue(&self) -> f64 {
        self.eigenvalue.to_f64() / self.shift_eigenvalue.to_f64()
    }

    /// Exact test (float backends: within `1e-9`) of `ρ(K) = ρ(T)`.
    pub fn is_normalized(&self) -> bool {
        if S::is_exact() {
            self.eigenvalue.compatible(&self.shift_eigenvalue) && self.eigenvalue == self.shift_eigenvalue
        } else {
            (self.normalized_eigenvalue() - 1.0).abs() <= 1e-9
        }
    }
}

/// Perron data for a subshift with transition matrix `t` and per-symbol weights `v`.
pub fn perron_data<S: Scalar>(t: &[Vec<u8>], v: &[S]) -> Result<PerronData<S>> {
    let a = t.len();
    if v.len() != a {
        return Err(Error::InvalidInput(format!("weight table has {} entries for an alphabet of {a}", v.len())));
    }
    let k: Vec<Vec<S>> = (0..a)
        .map(|i| (0..a).map(|j| if t[j][i] == 1 { v[j].clone() } else { S::zero() }).collect())
        .collect();
    let tm: Vec<Vec<S>> = t.iter().map(|r| r.iter().map(|&b| S::from_usize(b as usize)).collect()).collect();

    let (eigenvalue, right) = perron_pair(&k, "K")?;
    let (_, left) = perron_pair(&transpose(&k), "Kᵀ")?;
    let (shift_eigenvalue, shift_right) = perron_pair(&tm, "T")?;
    let weights: Vec<S> = right.iter().zip(&shift_right).map(|(p, u)| p.clone() * u.clone()).collect();
    let marginal = normalize(weights);
    Ok(PerronData { eigenvalue, right, left, shift_eigenvalue, shift_right, marginal })
}

fn transpose<S: Clone>(m: &[Vec<S>]) -> Vec<Vec<S>> {
    (0..m.len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

fn normalize<S: Scalar>(v: Vec<S>) -> Vec<S> {
    let total = v.iter().cloned().fold(S::zero(), |acc, x| acc + x);
    v.into_iter().map(|x| x / total.clone()).collect()
}

fn perron_pair<S: Scalar>(m: &[Vec<S>], name: &str) -> Result<(S, Vec<S>)> {
    let mf: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
    let (lambda_f, vec_f) = power_iteration(&mf, name)?;
    if !S::is_exact() {
        return Ok((S::from_f64(lambda_f), vec_f.into_iter().map(S::from_f64).collect()));
    }
    let lambda = exact_root(m, lambda_f, name)?;
    let shifted: Vec<Vec<S>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, x)| if i == j { x.clone() - lambda.clone() } else { x.clone() })
                .collect()
        })
        .collect();
    let kernel = null_vector(shifted).ok_or_else(|| {
        Error::NotPositive(format!("the Perron eigenvalue of {name} is not simple"))
    })?;
    let v = normalize(kernel);
    if let Some(i) = v.iter().position(|x| *x <= S::zero()) {
        return Err(Error::NotPositive(format!("entry {i} of the Perron vector of {name} is {}", v[i].to_text())));
    }
    Ok((lambda, v))
}

/// Power iteration on `M + I` from the all-ones vector; the shift makes
/// periodic irreducible matrices aperiodic without moving the eigenvector.
fn power_iteration(m: &[Vec<f64>], name: &str) -> Result<(f64, Vec<f64>)> {
    let a = m.len();
    let mut x = vec![1.0; a];
    let mut mu = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let y: Vec<f64> = (0..a).map(|i| x[i] + (0..a).map(|j| m[i][j] * x[j]).sum::<f64>()).collect();
        mu = y.iter().cloned().fold(0.0, f64::max);
        if !(mu > 0.0) {
            return Err(Error::NotPositive(format!("{name} annihilates the iterate")));
        }
        let next: Vec<f64> = y.iter().map(|v| v / mu).collect();
        let change = next.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        x = next;
        if change <= POWER_TOL {
            let sum: f64 = x.iter().sum();
            let v: Vec<f64> = x.iter().map(|e| e / sum).collect();
            if let Some(i) = v.iter().position(|&e| e <= 1e-12) {
                return Err(Error::NotPositive(format!("entry {i} of the Perron vector of {name} is {:e}", v[i])));
            }
            return Ok((mu - 1.0, v));
        }
    }
    Err(Error::NotPositive(format!(
        "power iteration on {name} did not settle after {POWER_MAX_ITERS} steps (last growth {mu})"
    )))
}

/// The Perron root in exact arithmetic, located near the float estimate.
fn exact_root<S: Scalar>(m: &[Vec<S>], approx: f64, name: &str) -> Result<S> {
    match m.len() {
        1 => Ok(m[0][0].clone()),
        2 => {
            let tr = m[0][0].clone() + m[1][1].clone();
            let det = m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone();
            let disc = tr.clone() * tr.clone() - S::from_usize(4) * det;
            let root = disc.sqrt_exact().ok_or_else(|| {
                Error::Unsupported(format!("Perron root of {name} is not in a quadratic field; use float arithmetic"))
            })?;
            Ok((tr + root) / S::from_usize(2))
        }
        _ => {
            for (p, q) in convergents(approx, 1_000_000) {
                let cand = S::from_ratio(p, q);
                if (cand.to_f64() - approx).abs() > 1e-9 * approx.max(1.0) {
                    continue;
                }
                let shifted: Vec<Vec<S>> = m
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.iter()
                            .enumerate()
                            .map(|(j, x)| if i == j { x.clone() - cand.clone() } else { x.clone() })
                            .collect()
                    })
                    .collect();
                if null_vector(shifted).is_some() {
                    return Ok(cand);
                }
            }
            Err(Error::Unsupported(format!(
                "Perron root of {name} (≈ {approx}) is not a recognizable rational; use float arithmetic"
            )))
        }
    }
}

/// Continued-fraction convergents `p/q` of `x` with `q ≤ max_den`.
fn convergents(x: f64, max_den: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den {
            break;
        }
        out.push((p2, q2));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

/// A vector spanning the kernel, when the kernel is one-dimensional.
fn null_vector<S: Scalar>(mut m: Vec<Vec<S>>) -> Option<Vec<S>> {
    let n = m.len();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..n).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, p);
        let piv = m[row][col].clone();
        for c in col..n {
            m[row][c] = m[row][c].clone() / piv.clone();
        }
        for r in 0..n {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..n {
                    m[r][c] = m[r][c].clone() - f.clone() * m[row][c].clone();
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if pivots.len() + 1 != n {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut v = vec![S::zero(); n];
    v[free] = S::one();
    for (r, &c) in pivots.iter().enumerate() {
        v[c] = -m[r][free].clone();
    }
    Some(v)
}
