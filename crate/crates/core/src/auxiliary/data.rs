use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Rule `x' ↦ value` for data prescribed on a boundary graph, parameterized by
/// the tangential coordinate.
pub type DataFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Dirichlet data `φ` on `Γ_1^+` and `ψ` on `Γ_1^-`.
///
/// Both rules are parameterized by `x'`: `phi(x')` is the value at the
/// boundary point `(x', ε/2 + h1(x'))`. Derivative rules return the
/// `m × (n-1)` tangential Jacobian, row-major.
#[derive(Clone)]
pub struct BoundaryData {
    m: usize,
    dim_tangential: usize,
    phi: DataFn,
    psi: DataFn,
    dphi: DataFn,
    dpsi: DataFn,
    phi_norms: Vec<f64>,
    psi_norms: Vec<f64>,
    kind: String,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("kind", &self.kind)
            .field("m", &self.m)
            .field("phi_norms", &self.phi_norms)
            .field("psi_norms", &self.psi_norms)
            .finish()
    }
}

impl BoundaryData {
    /// Constant vectors on each side.
    pub fn constant(phi: Vec<f64>, psi: Vec<f64>, dim_tangential: usize) -> Result<Self> {
        if phi.len() != psi.len() || phi.is_empty() {
            return Err(Error::config("phi and psi must have the same nonzero length"));
        }
        let m = phi.len();
        let phi_norms: Vec<f64> = phi.iter().map(|v| v.abs()).collect();
        let psi_norms: Vec<f64> = psi.iter().map(|v| v.abs()).collect();
        let zeros = vec![0.0; m * dim_tangential];
        let z2 = zeros.clone();
        let (p, q) = (phi.clone(), psi.clone());
        Ok(Self {
            m,
            dim_tangential,
            phi: Arc::new(move |_| p.clone()),
            psi: Arc::new(move |_| q.clone()),
            dphi: Arc::new(move |_| zeros.clone()),
            dpsi: Arc::new(move |_| z2.clone()),
            phi_norms,
            psi_norms,
            kind: format!("constant_jump(phi={phi:?}, psi={psi:?})"),
        })
    }

    /// Polynomials in the scalar tangential coordinate (2-D only):
    /// `phi[l] = [a0, a1, ...]` means `φ^{(l)}(x') = a0 + a1 x' + ...`.
    pub fn polynomial(phi: Vec<Vec<f64>>, psi: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        if phi.len() != psi.len() || phi.is_empty() {
            return Err(Error::config("phi and psi must have the same nonzero number of components"));
        }
        if phi.iter().chain(&psi).any(|c| c.is_empty()) {
            return Err(Error::config("every polynomial component needs at least one coefficient"));
        }
        let m = phi.len();
        let eval = |coeffs: &Vec<Vec<f64>>| -> DataFn {
            let c = coeffs.clone();
            Arc::new(move |x: &[f64]| c.iter().map(|p| horner(p, x[0])).collect())
        };
        let deriv = |coeffs: &Vec<Vec<f64>>| -> DataFn {
            let c: Vec<Vec<f64>> = coeffs.iter().map(|p| differentiate(p)).collect();
            Arc::new(move |x: &[f64]| c.iter().map(|p| horner(p, x[0])).collect())
        };
        let phi_norms = phi.iter().map(|p| polynomial_c1gamma_norm(p, gamma)).collect();
        let psi_norms = psi.iter().map(|p| polynomial_c1gamma_norm(p, gamma)).collect();
        Ok(Self {
            m,
            dim_tangential: 1,
            phi: eval(&phi),
            psi: eval(&psi),
            dphi: deriv(&phi),
            dpsi: deriv(&psi),
            phi_norms,
            psi_norms,
            kind: format!("polynomial(phi={phi:?}, psi={psi:?})"),
        })
    }

    /// User-supplied rules with declared per-component `C^{1,γ}` norms.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        m: usize,
        dim_tangential: usize,
        phi: DataFn,
        psi: DataFn,
        dphi: DataFn,
        dpsi: DataFn,
        phi_norms: Vec<f64>,
        psi_norms: Vec<f64>,
    ) -> Self {
        Self {
            m,
            dim_tangential,
            phi,
            psi,
            dphi,
            dpsi,
            phi_norms,
            psi_norms,
            kind: "custom".to_string(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn phi(&self, xp: &[f64]) -> Vec<f64> {
        (self.phi)(xp)
    }

    pub fn psi(&self, xp: &[f64]) -> Vec<f64> {
        (self.psi)(xp)
    }

    pub fn dphi(&self, xp: &[f64]) -> Vec<f64> {
        (self.dphi)(xp)
    }

    pub fn dpsi(&self, xp: &[f64]) -> Vec<f64> {
        (self.dpsi)(xp)
    }

    /// Declared `‖φ^{(l)}‖_{C^{1,γ}(Γ_1^+)}`.
    pub fn phi_norm(&self, component: usize) -> f64 {
        self.phi_norms[component]
    }

    pub fn psi_norm(&self, component: usize) -> f64 {
        self.psi_norms[component]
    }

    /// Norm of the full vector data: per-component norms combined in `ℓ²`.
    pub fn phi_norm_total(&self) -> f64 {
        self.phi_norms.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn psi_norm_total(&self) -> f64 {
        self.psi_norms.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `|φ(x') - ψ(x')|` (Euclidean over components).
    pub fn jump(&self, xp: &[f64]) -> f64 {
        self.phi(xp)
            .iter()
            .zip(self.psi(xp))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `|φ^{(l)}(x') - ψ^{(l)}(x')|`.
    pub fn component_jump(&self, xp: &[f64], component: usize) -> f64 {
        (self.phi(xp)[component] - self.psi(xp)[component]).abs()
    }

    /// Keeps only component `l` of both rules (the data of the `l`-th
    /// single-component problem).
    pub fn single_component(&self, component: usize) -> Self {
        let m = self.m;
        let n1 = self.dim_tangential;
        let mask = move |f: DataFn, width: usize| -> DataFn {
            Arc::new(move |x: &[f64]| {
                let v = f(x);
                let mut out = vec![0.0; m * width];
                out[component * width..(component + 1) * width]
                    .copy_from_slice(&v[component * width..(component + 1) * width]);
                out
            })
        };
        let mut phi_norms = vec![0.0; m];
        let mut psi_norms = vec![0.0; m];
        phi_norms[component] = self.phi_norms[component];
        psi_norms[component] = self.psi_norms[component];
        Self {
            m,
            dim_tangential: n1,
            phi: mask(self.phi.clone(), 1),
            psi: mask(self.psi.clone(), 1),
            dphi: mask(self.dphi.clone(), n1),
            dpsi: mask(self.dpsi.clone(), n1),
            phi_norms,
            psi_norms,
            kind: format!("{}[component {component}]", self.kind),
        }
    }

    /// Max relative deviation of the derivative rules from central differences
    /// of the value rules, sampled on `|x'| ≤ 1`.
    pub fn derivative_rule_error(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let n1 = self.dim_tangential;
        for xp in crate::sampling::ball_points(n1, samples) {
            for (f, df) in [(&self.phi, &self.dphi), (&self.psi, &self.dpsi)] {
                let d = df(&xp);
                for k in 0..n1 {
                    let step = 1e-6;
                    let mut p = xp.clone();
                    let mut q = xp.clone();
                    p[k] += step;
                    q[k] -= step;
                    let fp = f(&p);
                    let fq = f(&q);
                    for c in 0..self.m {
                        let fd = (fp[c] - fq[c]) / (2.0 * step);
                        let exact = d[c * n1 + k];
                        let scale = exact.abs().max(1.0);
                        worst = worst.max((fd - exact).abs() / scale);
                    }
                }
            }
        }
        worst
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

/// `sup|p| + sup|p'| + [p']_γ` on `[-1, 1]`, measured on a dense grid.
fn polynomial_c1gamma_norm(coeffs: &[f64], gamma: f64) -> f64 {
    const N: usize = 401;
    let dp = differentiate(coeffs);
    let xs: Vec<f64> = (0..N).map(|k| -1.0 + 2.0 * k as f64 / (N - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| horner(coeffs, x)).collect();
    let ders: Vec<f64> = xs.iter().map(|&x| horner(&dp, x)).collect();
    let sup_v = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sup_d = ders.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut semi: f64 = 0.0;
    for i in 0..N {
        for j in (i + 1)..N {
            semi = semi.max((ders[i] - ders[j]).abs() / (xs[j] - xs[i]).powf(gamma));
        }
    }
    sup_v + sup_d + semi
}
