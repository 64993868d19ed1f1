//! Closed-form auxiliary functions of the narrow gap.
//!
//! `ū` interpolates linearly across the gap from 0 on the bottom graph to 1 on
//! the top graph; `ũ_ℓ` carries the `ℓ`-th component of the boundary data with
//! `ū` as the blending weight. Their gradients are given analytically.

mod data;
mod prop21;
mod seminorm;

pub use data::{BoundaryData, DataFn};
pub use prop21::{check_prop21, prop21_rhs, Prop21Config, Prop21Report, Prop21Sample};
pub use seminorm::{holder_seminorm, region_pair, sample_in_region};

use crate::error::{Error, Result};
use crate::geometry::GapGeometry;

fn closure_tol(x: &[f64]) -> f64 {
    1e-12 * x.iter().fold(1.0f64, |a, v| a.max(v.abs()))
}

fn check_in_closure(geom: &GapGeometry, x: &[f64]) -> Result<()> {
    if !geom.contains_closed(1.0, x, closure_tol(x)) {
        return Err(Error::domain(format!("point {x:?} outside the closure of Omega_1")));
    }
    Ok(())
}

/// `ū(x) = (x_n - h2(x') + ε/2) / δ(x')`.
pub fn bar_u(geom: &GapGeometry, x: &[f64]) -> Result<f64> {
    check_in_closure(geom, x)?;
    Ok(bar_u_unchecked(geom, x))
}

pub(crate) fn bar_u_unchecked(geom: &GapGeometry, x: &[f64]) -> f64 {
    let n1 = geom.dim() - 1;
    let xp = &x[..n1];
    (x[n1] - geom.bottom_profile().value(xp) + 0.5 * geom.epsilon()) / geom.delta_unchecked(xp)
}

/// The three tangential pieces of `∂_α ū` for each `α < n-1`:
///
/// ```text
/// Π1 = -∂_α h2 / δ,   Π2 = -x_n ∂_α δ / δ²,   Π3 = (h2 - ε/2) ∂_α δ / δ²
/// ```
pub fn pi_terms(geom: &GapGeometry, x: &[f64]) -> Vec<[f64; 3]> {
    let n1 = geom.dim() - 1;
    let xp = &x[..n1];
    let xn = x[n1];
    let d = geom.delta_unchecked(xp);
    let h2 = geom.bottom_profile().value(xp);
    let dh2 = geom.bottom_profile().gradient(xp);
    let dd = geom.delta_gradient(xp);
    (0..n1)
        .map(|a| {
            [
                -dh2[a] / d,
                -xn * dd[a] / (d * d),
                (h2 - 0.5 * geom.epsilon()) * dd[a] / (d * d),
            ]
        })
        .collect()
}

/// `∇ū(x)`; the normal component is exactly `1 / δ(x')`.
pub fn grad_bar_u(geom: &GapGeometry, x: &[f64]) -> Result<Vec<f64>> {
    check_in_closure(geom, x)?;
    Ok(grad_bar_u_unchecked(geom, x))
}

pub(crate) fn grad_bar_u_unchecked(geom: &GapGeometry, x: &[f64]) -> Vec<f64> {
    let n1 = geom.dim() - 1;
    let mut g: Vec<f64> = pi_terms(geom, x).iter().map(|p| p[0] + p[1] + p[2]).collect();
    g.push(1.0 / geom.delta_unchecked(&x[..n1]));
    g
}

/// The vector auxiliary function `ũ_ℓ` for one component `ℓ` (0-based).
#[derive(Debug, Clone)]
pub struct AuxiliaryField {
    geom: GapGeometry,
    data: BoundaryData,
    component: usize,
}

impl AuxiliaryField {
    pub fn new(geom: GapGeometry, data: BoundaryData, component: usize) -> Result<Self> {
        if component >= data.m() {
            return Err(Error::domain(format!(
                "component {component} out of range for m = {}",
                data.m()
            )));
        }
        Ok(Self {
            geom,
            data,
            component,
        })
    }

    pub fn geometry(&self) -> &GapGeometry {
        &self.geom
    }

    pub fn data(&self) -> &BoundaryData {
        &self.data
    }

    pub fn component(&self) -> usize {
        self.component
    }

    pub fn m(&self) -> usize {
        self.data.m()
    }

    /// `|φ^{(ℓ)}(x') - ψ^{(ℓ)}(x')|`.
    pub fn jump(&self, xp: &[f64]) -> f64 {
        self.data.component_jump(xp, self.component)
    }

    /// `ũ_ℓ(x)`: only component `ℓ` is nonzero.
    pub fn tilde_u(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_in_closure(&self.geom, x)?;
        Ok(self.tilde_u_unchecked(x))
    }

    pub(crate) fn tilde_u_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let n1 = self.geom.dim() - 1;
        let xp = &x[..n1];
        let l = self.component;
        let ub = bar_u_unchecked(&self.geom, x);
        let mut out = vec![0.0; self.m()];
        out[l] = self.data.phi(xp)[l] * ub + self.data.psi(xp)[l] * (1.0 - ub);
        out
    }

    /// `∇ũ_ℓ(x)` as an `m × n` row-major matrix (row `ℓ` is the only nonzero row).
    pub fn grad_tilde_u(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_in_closure(&self.geom, x)?;
        Ok(self.grad_tilde_u_unchecked(x))
    }

    pub(crate) fn grad_tilde_u_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let n = self.geom.dim();
        let n1 = n - 1;
        let xp = &x[..n1];
        let l = self.component;
        let ub = bar_u_unchecked(&self.geom, x);
        let gb = grad_bar_u_unchecked(&self.geom, x);
        let phi = self.data.phi(xp)[l];
        let psi = self.data.psi(xp)[l];
        let dphi = self.data.dphi(xp);
        let dpsi = self.data.dpsi(xp);
        let mut out = vec![0.0; self.m() * n];
        for a in 0..n1 {
            out[l * n + a] =
                dphi[l * n1 + a] * ub + dpsi[l * n1 + a] * (1.0 - ub) + (phi - psi) * gb[a];
        }
        out[l * n + n1] = (phi - psi) * gb[n1];
        out
    }
}

/// Sum over all components of `ũ_ℓ`: the auxiliary extension of the full data.
pub fn tilde_u_total(geom: &GapGeometry, data: &BoundaryData, x: &[f64]) -> Vec<f64> {
    let n1 = geom.dim() - 1;
    let xp = &x[..n1];
    let ub = bar_u_unchecked(geom, x);
    data.phi(xp)
        .iter()
        .zip(data.psi(xp))
        .map(|(p, q)| p * ub + q * (1.0 - ub))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Side;
    use crate::sampling::stream_rng;
    use rand::Rng;

    fn geom() -> GapGeometry {
        GapGeometry::power(0.02, 0.5, 2, 1.0, -0.6).unwrap()
    }

    fn interior_point<R: Rng>(g: &GapGeometry, rng: &mut R) -> [f64; 2] {
        let t: f64 = rng.random_range(-0.95..0.95);
        let s: f64 = rng.random_range(0.02..0.98);
        let b = g.bottom_height(&[t]);
        [t, b + s * g.delta(&[t]).unwrap()]
    }

    #[test]
    fn bar_u_boundary_values() {
        let g = geom();
        for t in [-0.9, -0.1, 0.0, 0.37, 1.0] {
            let top = g.boundary_point(Side::Top, &[t]).unwrap();
            let bot = g.boundary_point(Side::Bottom, &[t]).unwrap();
            assert!((bar_u(&g, &top).unwrap() - 1.0).abs() < 1e-12);
            assert!(bar_u(&g, &bot).unwrap().abs() < 1e-12);
        }
        assert_eq!(bar_u(&g, &[0.0, 0.0]).unwrap(), 0.5);
        assert!(bar_u(&g, &[0.0, 0.2]).is_err());
    }

    #[test]
    fn bar_u_matches_independent_recomputation() {
        let g = geom();
        let mut rng = stream_rng(1, 0);
        for _ in 0..500 {
            let x = interior_point(&g, &mut rng);
            let h1 = f64::abs(x[0]).powf(1.5);
            let h2 = -0.6 * f64::abs(x[0]).powf(1.5);
            let expect = (x[1] - h2 + 0.01) / (0.02 + h1 - h2);
            let v = bar_u(&g, &x).unwrap();
            assert!((v - expect).abs() < 1e-12);
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn normal_derivative_is_exactly_inverse_gap() {
        let g = geom();
        let mut rng = stream_rng(2, 0);
        for _ in 0..1000 {
            let x = interior_point(&g, &mut rng);
            let gb = grad_bar_u(&g, &x).unwrap();
            assert_eq!(gb[1], 1.0 / g.delta(&[x[0]]).unwrap());
        }
    }

    #[test]
    fn tangential_gradient_vanishes_on_axis() {
        let g = geom();
        for xn in [-0.009, 0.0, 0.004] {
            assert_eq!(grad_bar_u(&g, &[0.0, xn]).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn pi_decomposition_matches_finite_differences() {
        let g = geom();
        let mut rng = stream_rng(3, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let x = interior_point(&g, &mut rng);
            let d = g.delta(&[x[0]]).unwrap();
            let h = 1e-7 * d;
            let fd = (bar_u_unchecked(&g, &[x[0] + h, x[1]]) - bar_u_unchecked(&g, &[x[0] - h, x[1]]))
                / (2.0 * h);
            let pi = pi_terms(&g, &x)[0];
            let sum = pi[0] + pi[1] + pi[2];
            worst = worst.max((fd - sum).abs() / sum.abs().max(1.0 / d));
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn tilde_u_boundary_and_blend() {
        let g = geom();
        let data = BoundaryData::polynomial(vec![vec![1.0, 0.5], vec![2.0]], vec![vec![0.0, 0.0, 1.0], vec![-1.0]], 0.5)
            .unwrap();
        let f = AuxiliaryField::new(g.clone(), data.clone(), 0).unwrap();
        let t = 0.3;
        let top = g.boundary_point(Side::Top, &[t]).unwrap();
        let bot = g.boundary_point(Side::Bottom, &[t]).unwrap();
        let ut = f.tilde_u(&top).unwrap();
        let ub = f.tilde_u(&bot).unwrap();
        assert!((ut[0] - 1.15).abs() < 1e-12 && ut[1] == 0.0);
        assert!((ub[0] - 0.09).abs() < 1e-12 && ub[1] == 0.0);

        let d = BoundaryData::constant(vec![1.0], vec![0.0], 1).unwrap();
        let f = AuxiliaryField::new(g.clone(), d, 0).unwrap();
        let x = [0.2, 0.01];
        assert_eq!(f.tilde_u(&x).unwrap()[0], bar_u(&g, &x).unwrap());
    }

    #[test]
    fn grad_tilde_u_special_cases() {
        let g = geom();
        let d = BoundaryData::constant(vec![1.0, 0.0], vec![0.0, 0.0], 1).unwrap();
        let f = AuxiliaryField::new(g.clone(), d, 0).unwrap();
        let gr = f.grad_tilde_u(&[0.0, 0.0]).unwrap();
        assert!((gr[1] - 1.0 / 0.02).abs() < 1e-9);
        assert_eq!(&gr[2..], &[0.0, 0.0]);

        let same = BoundaryData::constant(vec![0.7, 0.0], vec![0.7, 0.0], 1).unwrap();
        let f = AuxiliaryField::new(g, same, 0).unwrap();
        assert_eq!(f.grad_tilde_u(&[0.3, 0.01]).unwrap()[1], 0.0);
    }

    #[test]
    fn grad_tilde_u_matches_finite_differences() {
        let g = geom();
        let data = BoundaryData::polynomial(
            vec![vec![1.0, 0.3, -0.2], vec![0.1]],
            vec![vec![0.0, 0.0, 0.5], vec![0.4, 1.0]],
            0.5,
        )
        .unwrap();
        let mut rng = stream_rng(4, 0);
        let mut worst: f64 = 0.0;
        for l in 0..2 {
            let f = AuxiliaryField::new(g.clone(), data.clone(), l).unwrap();
            for _ in 0..500 {
                let x = interior_point(&g, &mut rng);
                let h = 1e-7 * g.delta(&[x[0]]).unwrap();
                let gr = f.grad_tilde_u(&x).unwrap();
                let scale = gr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for k in 0..2 {
                    let mut p = x;
                    let mut q = x;
                    p[k] += h;
                    q[k] -= h;
                    let fp = f.tilde_u_unchecked(&p);
                    let fq = f.tilde_u_unchecked(&q);
                    for c in 0..2 {
                        let fd = (fp[c] - fq[c]) / (2.0 * h);
                        worst = worst.max((fd - gr[c * 2 + k]).abs() / scale);
                    }
                }
            }
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn component_out_of_range() {
        let d = BoundaryData::constant(vec![1.0], vec![0.0], 1).unwrap();
        assert!(AuxiliaryField::new(geom(), d, 1).is_err());
    }
}
