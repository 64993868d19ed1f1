//! Coefficient fields of the general elliptic system
//!
//! ```text
//! ∂_α(A^{αβ}_{ij} ∂_β u^j + B^α_{ij} u^j) + C^β_{ij} ∂_β u^j + D_{ij} u^j = 0
//! ```
//!
//! and the Lamé specialization `A^{αβ}_{ij} = C_{iαjβ}`.
//!
//! Fields are evaluated into flat row-major buffers:
//! `A[((α n + β) m + i) m + j]`, `B[(α m + i) m + j]`, `C[(β m + i) m + j]`,
//! `D[i m + j]`, with `α, β < n` and `i, j < m`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{halton, norm, sphere_directions, stream_rng, uniform_in_box};

pub type FieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Default number of point samples for the ellipticity check.
pub const DEFAULT_POINT_SAMPLES: usize = 10_000;
/// Default number of pair samples for the Hölder check.
pub const DEFAULT_PAIR_SAMPLES: usize = 10_000;

#[inline]
pub fn a_index(n: usize, m: usize, alpha: usize, beta: usize, i: usize, j: usize) -> usize {
    ((alpha * n + beta) * m + i) * m + j
}

#[inline]
pub fn b_index(m: usize, alpha: usize, i: usize, j: usize) -> usize {
    (alpha * m + i) * m + j
}

/// Lamé constants `(λ1, μ1)` with `μ1 > 0` and `λ1 + μ1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LameParameters {
    lambda1: f64,
    mu1: f64,
}

impl LameParameters {
    pub fn new(lambda1: f64, mu1: f64) -> Result<Self> {
        if !(mu1 > 0.0) || !(lambda1 + mu1 > 0.0) {
            return Err(Error::Coefficients(format!(
                "Lame constants violate mu1 > 0, lambda1 + mu1 > 0: ({lambda1}, {mu1})"
            )));
        }
        Ok(Self { lambda1, mu1 })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }
}

/// Rank-4 isotropic elastic tensor `C_{ijkl}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticTensor {
    n: usize,
    data: Vec<f64>,
}

impl ElasticTensor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }
}

/// `C_{ijkl} = λ1 δ_ij δ_kl + μ1 (δ_ik δ_jl + δ_il δ_jk)`.
pub fn lame_tensor(p: LameParameters, n: usize) -> ElasticTensor {
    let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    data[((i * n + j) * n + k) * n + l] = p.lambda1 * kd(i, j) * kd(k, l)
                        + p.mu1 * (kd(i, k) * kd(j, l) + kd(i, l) * kd(j, k));
                }
            }
        }
    }
    ElasticTensor { n, data }
}

/// Coefficient fields `A, B, C, D` together with the claimed structural
/// constants `λ` (ellipticity), `Λ` (sup bound) and `κ3` (Hölder norm bound).
#[derive(Clone)]
pub struct CoefficientSet {
    m: usize,
    n: usize,
    a: FieldFn,
    b: Option<FieldFn>,
    c: Option<FieldFn>,
    d: Option<FieldFn>,
    lambda: f64,
    big_lambda: f64,
    kappa3: f64,
    gamma: f64,
    kind: String,
    constant: bool,
    sample_lo: Vec<f64>,
    sample_hi: Vec<f64>,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("kind", &self.kind)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("lambda", &self.lambda)
            .field("Lambda", &self.big_lambda)
            .field("kappa3", &self.kappa3)
            .finish()
    }
}

impl CoefficientSet {
    /// `A^{αβ}_{ij} = δ^{αβ} δ_{ij}`, no lower-order terms.
    pub fn identity(m: usize, n: usize) -> Self {
        let mut a = vec![0.0; n * n * m * m];
        for al in 0..n {
            for i in 0..m {
                a[a_index(n, m, al, al, i, i)] = 1.0;
            }
        }
        Self::constant("identity", m, n, a, 1.0)
    }

    /// The Lamé system written as a general system: `A^{αβ}_{ij} = C_{iαjβ}`.
    pub fn lame(p: LameParameters, n: usize) -> Self {
        let t = lame_tensor(p, n);
        let m = n;
        let mut a = vec![0.0; n * n * m * m];
        for al in 0..n {
            for be in 0..n {
                for i in 0..m {
                    for j in 0..m {
                        a[a_index(n, m, al, be, i, j)] = t.get(i, al, j, be);
                    }
                }
            }
        }
        // rank-one form = μ|ξ|²|η|² + (λ+μ)(ξ·η)² ≥ μ|ξ|²|η|²
        Self::constant("lame", m, n, a, p.mu1)
    }

    fn constant(kind: &str, m: usize, n: usize, a: Vec<f64>, lambda: f64) -> Self {
        let big_lambda = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        Self {
            m,
            n,
            a: Arc::new(move |_| a.clone()),
            b: None,
            c: None,
            d: None,
            lambda,
            big_lambda,
            kappa3: big_lambda,
            gamma: 0.5,
            kind: kind.to_string(),
            constant: true,
            sample_lo: vec![-1.0; n],
            sample_hi: vec![1.0; n],
        }
    }

    /// `A^{αβ}_{ij}(x) = δ^{αβ} δ_{ij} (1 + |x|^γ / 2)`: a Hölder-continuous,
    /// non-smooth test field. Not taken from any reference problem.
    pub fn holder_demo(m: usize, n: usize, gamma: f64) -> Self {
        let lo = vec![-1.0; n];
        let hi = vec![1.0; n];
        let rmax = (n as f64).sqrt();
        let a: FieldFn = Arc::new(move |x: &[f64]| {
            let s = 1.0 + 0.5 * norm(x).powf(gamma);
            let mut out = vec![0.0; n * n * m * m];
            for al in 0..n {
                for i in 0..m {
                    out[a_index(n, m, al, al, i, i)] = s;
                }
            }
            out
        });
        let sup = 1.0 + 0.5 * rmax.powf(gamma);
        Self {
            m,
            n,
            a,
            b: None,
            c: None,
            d: None,
            lambda: 1.0,
            big_lambda: sup,
            kappa3: sup + 0.5,
            gamma,
            kind: "holder_demo".to_string(),
            constant: false,
            sample_lo: lo,
            sample_hi: hi,
        }
    }

    /// Arbitrary fields. `b`, `c`, `d` default to zero when `None`.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        m: usize,
        n: usize,
        a: FieldFn,
        b: Option<FieldFn>,
        c: Option<FieldFn>,
        d: Option<FieldFn>,
        lambda: f64,
        big_lambda: f64,
        kappa3: f64,
        gamma: f64,
    ) -> Self {
        Self {
            m,
            n,
            a,
            b,
            c,
            d,
            lambda,
            big_lambda,
            kappa3,
            gamma,
            kind: "custom".to_string(),
            constant: false,
            sample_lo: vec![-1.0; n],
            sample_hi: vec![1.0; n],
        }
    }

    /// Every field multiplied by `factor` (claimed constants scale too).
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |f: &FieldFn| -> FieldFn {
            let f = f.clone();
            Arc::new(move |x: &[f64]| f(x).into_iter().map(|v| v * factor).collect())
        };
        Self {
            a: scale(&self.a),
            b: self.b.as_ref().map(scale),
            c: self.c.as_ref().map(scale),
            d: self.d.as_ref().map(scale),
            lambda: self.lambda * factor,
            big_lambda: self.big_lambda * factor.abs(),
            kappa3: self.kappa3 * factor.abs(),
            kind: format!("{}*{factor}", self.kind),
            ..self.clone()
        }
    }

    /// Restricts sampling of the checks to the box `[lo, hi]`.
    pub fn with_sample_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), self.n);
        assert_eq!(hi.len(), self.n);
        self.sample_lo = lo;
        self.sample_hi = hi;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn kappa3(&self) -> f64 {
        self.kappa3
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn has_lower_order(&self) -> bool {
        self.b.is_some() || self.c.is_some() || self.d.is_some()
    }

    pub fn a_at(&self, x: &[f64]) -> Vec<f64> {
        (self.a)(x)
    }

    pub fn b_at(&self, x: &[f64]) -> Vec<f64> {
        self.b.as_ref().map_or_else(|| vec![0.0; self.n * self.m * self.m], |f| f(x))
    }

    pub fn c_at(&self, x: &[f64]) -> Vec<f64> {
        self.c.as_ref().map_or_else(|| vec![0.0; self.n * self.m * self.m], |f| f(x))
    }

    pub fn d_at(&self, x: &[f64]) -> Vec<f64> {
        self.d.as_ref().map_or_else(|| vec![0.0; self.m * self.m], |f| f(x))
    }

    pub(crate) fn b_fn(&self) -> Option<&FieldFn> {
        self.b.as_ref()
    }

    pub(crate) fn c_fn(&self) -> Option<&FieldFn> {
        self.c.as_ref()
    }

    pub(crate) fn d_fn(&self) -> Option<&FieldFn> {
        self.d.as_ref()
    }

    /// `true` when `A^{αβ}_{ij} = A^{βα}_{ji}` at `x` (symmetric bilinear form).
    pub fn is_symmetric_at(&self, x: &[f64], tol: f64) -> bool {
        let a = self.a_at(x);
        let (n, m) = (self.n, self.m);
        for al in 0..n {
            for be in 0..n {
                for i in 0..m {
                    for j in 0..m {
                        let d = a[a_index(n, m, al, be, i, j)] - a[a_index(n, m, be, al, j, i)];
                        if d.abs() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn sample_points(&self, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|k| {
                halton(k as u64, self.n)
                    .into_iter()
                    .zip(self.sample_lo.iter().zip(&self.sample_hi))
                    .map(|(u, (lo, hi))| lo + (hi - lo) * u)
                    .collect()
            })
            .collect()
    }
}

/// Smallest eigenvalue of a symmetric `m × m` matrix given row-major.
fn min_sym_eigenvalue(s: &[f64], m: usize) -> f64 {
    match m {
        1 => s[0],
        2 => {
            let (a, b, d) = (s[0], s[1], s[3]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            mean - rad
        }
        _ => jacobi_min_eigenvalue(s, m),
    }
}

fn jacobi_min_eigenvalue(s: &[f64], m: usize) -> f64 {
    let mut a = s.to_vec();
    for _sweep in 0..64 {
        let off: f64 = (0..m)
            .flat_map(|p| (0..m).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * m + q] * a[p * m + q])
            .sum();
        if off < 1e-28 {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q * m + q] - a[p * m + p]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - sn * akq;
                    a[k * m + q] = sn * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - sn * aqk;
                    a[q * m + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|k| a[k * m + k]).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityCheck {
    pub measured: f64,
    pub claimed: f64,
    pub meets_claim: bool,
    pub point_samples: usize,
    pub direction_samples: usize,
    /// Samples whose rank-one form lies within `1e-9` (relative) of the minimum.
    pub near_ties: usize,
}

/// Minimum of `Σ A^{αβ}_{ij}(x) ξ_α ξ_β η_i η_j` over sampled points and unit
/// directions. For each `ξ` the minimum over unit `η` is the smallest
/// eigenvalue of the symmetrized `m × m` matrix `Σ A^{αβ}_{ij} ξ_α ξ_β`.
pub fn check_ellipticity(cs: &CoefficientSet, samples: usize) -> Result<EllipticityCheck> {
    if samples == 0 {
        return Err(Error::domain("ellipticity check needs at least one sample"));
    }
    let (n, m) = (cs.n, cs.m);
    let dirs = sphere_directions(n, 64);
    let points = if cs.constant {
        cs.sample_points(1)
    } else {
        cs.sample_points(samples)
    };
    let values: Vec<f64> = points
        .par_iter()
        .flat_map_iter(|x| {
            let a = cs.a_at(x);
            dirs.iter()
                .map(|xi| {
                    let mut s = vec![0.0; m * m];
                    for i in 0..m {
                        for j in 0..m {
                            let mut acc = 0.0;
                            for al in 0..n {
                                for be in 0..n {
                                    acc += a[a_index(n, m, al, be, i, j)] * xi[al] * xi[be];
                                }
                            }
                            s[i * m + j] = acc;
                        }
                    }
                    for i in 0..m {
                        for j in (i + 1)..m {
                            let avg = 0.5 * (s[i * m + j] + s[j * m + i]);
                            s[i * m + j] = avg;
                            s[j * m + i] = avg;
                        }
                    }
                    min_sym_eigenvalue(&s, m)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let measured = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tie_tol = 1e-9 * measured.abs().max(1e-300);
    let near_ties = values.iter().filter(|v| (*v - measured).abs() <= tie_tol).count();
    if !(measured > 0.0) {
        return Err(Error::Ellipticity { measured });
    }
    Ok(EllipticityCheck {
        measured,
        claimed: cs.lambda,
        meets_claim: measured >= cs.lambda - 1e-9 * cs.lambda.abs().max(1.0),
        point_samples: points.len(),
        direction_samples: dirs.len(),
        near_ties,
    })
}

/// Generates the `k`-th sample pair in a box: plain uniform pairs mixed with
/// pairs at separations `{0.5, 0.1, 0.01}` times the box diameter.
pub(crate) fn box_pair(seed: u64, k: usize, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(seed, k as u64);
    let x = uniform_in_box(&mut rng, lo, hi);
    let diam = norm(&lo.iter().zip(hi).map(|(a, b)| b - a).collect::<Vec<_>>());
    let scale = match k % 4 {
        0 => return (x, uniform_in_box(&mut rng, lo, hi)),
        1 => 0.5,
        2 => 0.1,
        _ => 0.01,
    };
    for _ in 0..64 {
        let dir: Vec<f64> = (0..lo.len()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let r = norm(&dir);
        if r < 1e-6 || r > 1.0 {
            continue;
        }
        let y: Vec<f64> = x
            .iter()
            .zip(&dir)
            .map(|(xv, dv)| xv + scale * diam * dv / r)
            .collect();
        if y.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b) {
            return (x, y);
        }
    }
    let y = uniform_in_box(&mut rng, lo, hi);
    (x, y)
}

/// Largest sampled Hölder quotient `|f(x) - f(y)| / |x - y|^γ` of a scalar
/// function over `pairs` pairs drawn from the box `[lo, hi]`.
pub fn holder_quotient_in_box(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    gamma: f64,
    pairs: usize,
    lo: &[f64],
    hi: &[f64],
    seed: u64,
) -> f64 {
    (0..pairs)
        .into_par_iter()
        .map(|k| {
            let (x, y) = box_pair(seed, k, lo, hi);
            let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let r = norm(&d);
            if r == 0.0 {
                0.0
            } else {
                (f(&x) - f(&y)).abs() / r.powf(gamma)
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderCheck {
    /// `max over component fields of (sampled sup-norm + sampled Hölder quotient)`.
    pub measured: f64,
    pub max_sup_norm: f64,
    pub max_quotient: f64,
    pub claimed: f64,
    pub within_claim: bool,
    pub pair_samples: usize,
}

/// Sampled lower bound of the `C^γ` norm of the coefficient fields.
pub fn check_holder(cs: &CoefficientSet, pair_samples: usize, seed: u64) -> Result<HolderCheck> {
    if pair_samples == 0 {
        return Err(Error::domain("Holder check needs at least one pair"));
    }
    let gamma = cs.gamma;
    let eval_all = |x: &[f64]| -> Vec<f64> {
        let mut v = cs.a_at(x);
        if let Some(b) = &cs.b {
            v.extend(b(x));
        }
        if let Some(c) = &cs.c {
            v.extend(c(x));
        }
        if let Some(d) = &cs.d {
            v.extend(d(x));
        }
        v
    };
    let width = eval_all(&cs.sample_lo).len();
    let (sup, quot) = (0..pair_samples)
        .into_par_iter()
        .map(|k| {
            let (x, y) = box_pair(seed, k, &cs.sample_lo, &cs.sample_hi);
            let fx = eval_all(&x);
            let fy = eval_all(&y);
            let r = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
            let sup: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a.abs().max(b.abs())).collect();
            let quot: Vec<f64> = if r > 0.0 {
                fx.iter().zip(&fy).map(|(a, b)| (a - b).abs() / r.powf(gamma)).collect()
            } else {
                vec![0.0; fx.len()]
            };
            (sup, quot)
        })
        .reduce(
            || (vec![0.0; width], vec![0.0; width]),
            |(s1, q1), (s2, q2)| {
                (
                    s1.iter().zip(&s2).map(|(a, b)| a.max(*b)).collect(),
                    q1.iter().zip(&q2).map(|(a, b)| a.max(*b)).collect(),
                )
            },
        );
    let measured = sup.iter().zip(&quot).map(|(s, q)| s + q).fold(0.0, f64::max);
    Ok(HolderCheck {
        measured,
        max_sup_norm: sup.iter().copied().fold(0.0, f64::max),
        max_quotient: quot.iter().copied().fold(0.0, f64::max),
        claimed: cs.kappa3,
        within_claim: measured <= cs.kappa3 * (1.0 + 1e-12),
        pair_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LameParameters {
        LameParameters::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn lame_parameters_validation() {
        assert!(LameParameters::new(1.0, 0.0).is_err());
        assert!(LameParameters::new(-2.0, 1.0).is_err());
        assert!(LameParameters::new(-0.5, 1.0).is_ok());
    }

    #[test]
    fn lame_tensor_entries() {
        let t = lame_tensor(unit(), 2);
        assert_eq!(t.get(0, 0, 0, 0), 3.0);
        let p = LameParameters::new(2.5, 0.7).unwrap();
        let t = lame_tensor(p, 2);
        assert_eq!(t.get(0, 0, 1, 1), 2.5);
        assert_eq!(t.get(0, 1, 0, 1), 0.7);
        assert!((t.get(1, 1, 1, 1) - (2.5 + 1.4)).abs() < 1e-15);
    }

    #[test]
    fn lame_tensor_symmetries() {
        let t = lame_tensor(LameParameters::new(0.3, 1.9).unwrap(), 2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let v = t.get(i, j, k, l);
                        assert_eq!(v, t.get(j, i, k, l));
                        assert_eq!(v, t.get(k, l, i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn lame_as_general_entries() {
        let cs = CoefficientSet::lame(unit(), 2);
        let a = cs.a_at(&[0.3, -0.1]);
        // brute-force expansion A^{αβ}_{ij} = C_{iαjβ}
        let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for al in 0..2 {
            for be in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let c = kd(i, al) * kd(j, be) + kd(i, j) * kd(al, be) + kd(i, be) * kd(al, j);
                        assert_eq!(a[a_index(2, 2, al, be, i, j)], c);
                    }
                }
            }
        }
        assert_eq!(a[a_index(2, 2, 0, 0, 0, 0)], 3.0);
        assert_eq!(a[a_index(2, 2, 1, 1, 0, 0)], 1.0);
        assert_eq!(a[a_index(2, 2, 0, 1, 0, 1)], 1.0);
        assert_eq!(a[a_index(2, 2, 1, 0, 0, 1)], 1.0);
        assert!(cs.b_at(&[0.1, 0.2]).iter().all(|v| *v == 0.0));
        assert!(cs.c_at(&[0.1, 0.2]).iter().all(|v| *v == 0.0));
        assert!(cs.d_at(&[0.1, 0.2]).iter().all(|v| *v == 0.0));
        assert!(cs.is_symmetric_at(&[0.0, 0.0], 0.0));
    }

    #[test]
    fn identity_ellipticity_is_one() {
        let r = check_ellipticity(&CoefficientSet::identity(2, 2), 100).unwrap();
        assert!((r.measured - 1.0).abs() < 1e-9);
        assert!(r.meets_claim);
    }

    #[test]
    fn lame_ellipticity_matches_brute_force() {
        let cs = CoefficientSet::lame(unit(), 2);
        let r = check_ellipticity(&cs, 100).unwrap();
        // brute force over a grid of unit (ξ, η)
        let a = cs.a_at(&[0.0, 0.0]);
        let mut brute = f64::INFINITY;
        let k = 720;
        for s in 0..k {
            let th = std::f64::consts::PI * s as f64 / k as f64;
            let xi = [th.cos(), th.sin()];
            for t in 0..k {
                let ph = std::f64::consts::PI * t as f64 / k as f64;
                let eta = [ph.cos(), ph.sin()];
                let mut q = 0.0;
                for al in 0..2 {
                    for be in 0..2 {
                        for i in 0..2 {
                            for j in 0..2 {
                                q += a[a_index(2, 2, al, be, i, j)] * xi[al] * xi[be] * eta[i] * eta[j];
                            }
                        }
                    }
                }
                brute = brute.min(q);
            }
        }
        assert!((brute - 1.0).abs() < 1e-9);
        assert!((r.measured - brute).abs() < 1e-9);
        assert!(r.meets_claim);
    }

    #[test]
    fn ellipticity_is_homogeneous() {
        let cs = CoefficientSet::lame(LameParameters::new(0.5, 2.0).unwrap(), 2);
        let r1 = check_ellipticity(&cs, 10).unwrap().measured;
        let r2 = check_ellipticity(&cs.scaled(2.0), 10).unwrap().measured;
        assert!((r2 - 2.0 * r1).abs() < 1e-12);
    }

    #[test]
    fn ellipticity_violation_is_an_error() {
        let cs = CoefficientSet::identity(1, 2).scaled(-1.0);
        assert!(matches!(check_ellipticity(&cs, 5), Err(Error::Ellipticity { .. })));
    }

    #[test]
    fn jacobi_agrees_with_closed_form() {
        let s = [2.0, 0.5, 0.1, 0.5, 1.0, -0.3, 0.1, -0.3, 3.0];
        let lam = jacobi_min_eigenvalue(&s, 3);
        // check det(S - lam I) = 0
        let m = |i: usize, j: usize| s[i * 3 + j] - if i == j { lam } else { 0.0 };
        let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        assert!(det.abs() < 1e-10);
        assert!(lam < 1.0);
        let s2 = [2.0, 0.5, 0.5, 1.0];
        assert!((jacobi_min_eigenvalue(&s2, 2) - min_sym_eigenvalue(&s2, 2)).abs() < 1e-12);
    }

    #[test]
    fn constant_fields_have_zero_quotient() {
        let r = check_holder(&CoefficientSet::lame(unit(), 2), 500, 1).unwrap();
        assert_eq!(r.max_quotient, 0.0);
        assert_eq!(r.measured, 3.0);
        assert!(r.within_claim);
    }

    #[test]
    fn holder_demo_passes_both_checks() {
        let cs = CoefficientSet::holder_demo(2, 2, 0.5);
        let e = check_ellipticity(&cs, 2000).unwrap();
        assert!(e.measured >= 1.0 - 1e-12);
        let h = check_holder(&cs, 4000, 5).unwrap();
        assert!(h.measured.is_finite() && h.within_claim, "{h:?}");
        assert!(h.max_quotient <= 0.5 + 1e-12);
    }

    #[test]
    fn power_field_quotient_bounded_by_one() {
        let gamma = 0.5;
        let f = |x: &[f64]| norm(x).powf(gamma);
        let lo = [-1.0, -1.0];
        let hi = [1.0, 1.0];
        let q = holder_quotient_in_box(&f, gamma, 20_000, &lo, &hi, 9);
        assert!(q <= 1.0 + 1e-12);
        // pairs through the origin attain 1 exactly
        let through_origin = (f(&[0.4, 0.3]) - f(&[0.0, 0.0])) / 0.5f64.powf(gamma);
        assert!((through_origin - 1.0).abs() < 1e-12);
        assert!(q > 0.6, "sampled quotient {q}");
    }

    #[test]
    fn linear_field_quotient_bounded_by_diameter_power() {
        let gamma = 0.3;
        let f = |x: &[f64]| x[0];
        let lo = [-1.0, -0.05];
        let hi = [1.0, 0.05];
        let diam = (4.0f64 + 0.01).sqrt();
        let q = holder_quotient_in_box(&f, gamma, 10_000, &lo, &hi, 2);
        assert!(q <= diam.powf(1.0 - gamma));
        assert!(q > 0.5 * 2f64.powf(1.0 - gamma));
    }
}
