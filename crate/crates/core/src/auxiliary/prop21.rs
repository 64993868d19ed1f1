use serde::Serialize;

use super::AuxiliaryField;
use crate::error::{Error, Result};
use crate::geometry::LocalRegion;

use super::seminorm::holder_seminorm;

#[derive(Debug, Clone, Copy)]
pub struct Prop21Config {
    /// Largest admissible `s / δ(z')`.
    pub hyp_c: f64,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for Prop21Config {
    fn default() -> Self {
        Self {
            hyp_c: 1.0,
            pairs: 4000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop21Sample {
    pub z_prime: f64,
    pub s_fraction: f64,
    pub s: f64,
    pub delta: f64,
    pub seminorm: f64,
    pub rhs: f64,
    /// `seminorm / rhs`, 0 when both vanish.
    pub ratio: f64,
    /// `min δ(x')` over `|x' - z'| ≤ s`.
    pub delta_min: f64,
    /// `delta_min ≥ δ(z') / 2`, the comparability the bound relies on.
    pub comparable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop21Report {
    pub epsilon: f64,
    pub component: usize,
    pub samples: Vec<Prop21Sample>,
    /// Smallest `C` with `seminorm ≤ C · rhs` on every sample.
    pub fitted_c: f64,
}

/// Right-hand side of the seminorm bound, without its constant. `jump` is
/// `|φ^{(ℓ)} - ψ^{(ℓ)}|(z')`, `norms` the sum of the data norms.
///
/// ```text
/// jump  · (d^{-1-a} s^{1-γ} + d^{-γ-a})
/// norms · (d^{-1-a} s^{2-γ} + d^{-1} s^{1-γ} + d^{-γ-a} s + d^{-γ}),   a = 1/(1+γ)
/// ```
pub fn prop21_rhs(delta: f64, s: f64, gamma: f64, jump: f64, norms: f64) -> f64 {
    let a = 1.0 / (1.0 + gamma);
    let d = delta;
    let jump_group = d.powf(-1.0 - a) * s.powf(1.0 - gamma) + d.powf(-gamma - a);
    let norm_group = d.powf(-1.0 - a) * s.powf(2.0 - gamma)
        + d.powf(-1.0) * s.powf(1.0 - gamma)
        + d.powf(-gamma - a) * s
        + d.powf(-gamma);
    jump * jump_group + norms * norm_group
}

/// Samples `[∇ũ_ℓ]_{γ, Ω̂_s(z)}` for `z = (z', midline)` and every
/// `s = fraction · δ(z')`, and fits the single constant of the bound.
pub fn check_prop21(
    field: &AuxiliaryField,
    z_primes: &[f64],
    s_fractions: &[f64],
    config: &Prop21Config,
) -> Result<Prop21Report> {
    let geom = field.geometry();
    if geom.dim() != 2 {
        return Err(Error::Unsupported("seminorm check is implemented for n = 2".into()));
    }
    if let Some(f) = s_fractions.iter().find(|&&f| !(f > 0.0 && f <= config.hyp_c)) {
        return Err(Error::config(format!(
            "s fraction {f} violates 0 < s <= {} delta(z')",
            config.hyp_c
        )));
    }
    let gamma = geom.gamma();
    let l = field.component();
    let norms = field.data().phi_norm(l) + field.data().psi_norm(l);
    let grad = |x: &[f64]| field.grad_tilde_u_unchecked(x);
    let mut samples = Vec::new();
    for &zp in z_primes {
        let delta = geom.delta(&[zp])?;
        let jump = field.jump(&[zp]);
        for &frac in s_fractions {
            let s = frac * delta;
            let region = LocalRegion::on_midline(geom, &[zp], s)?;
            let seminorm = holder_seminorm(&grad, &region, gamma, config.pairs, config.seed)?;
            let rhs = prop21_rhs(delta, s, gamma, jump, norms);
            let ratio = if seminorm == 0.0 { 0.0 } else { seminorm / rhs };
            let delta_min = min_delta(geom, zp - s, zp + s);
            samples.push(Prop21Sample {
                z_prime: zp,
                s_fraction: frac,
                s,
                delta,
                seminorm,
                rhs,
                ratio,
                delta_min,
                comparable: delta_min >= 0.5 * delta,
            });
        }
    }
    let fitted_c = samples.iter().fold(0.0f64, |a, p| a.max(p.ratio));
    Ok(Prop21Report {
        epsilon: geom.epsilon(),
        component: l,
        samples,
        fitted_c,
    })
}

fn min_delta(geom: &crate::geometry::GapGeometry, lo: f64, hi: f64) -> f64 {
    const STEPS: usize = 512;
    let mut best = f64::INFINITY;
    for k in 0..=STEPS {
        let x = lo + (hi - lo) * k as f64 / STEPS as f64;
        best = best.min(geom.delta_unchecked(&[x]));
    }
    if lo < 0.0 && hi > 0.0 {
        best = best.min(geom.delta_unchecked(&[0.0]));
    }
    best
}

impl Prop21Report {
    /// Fitted constant restricted to samples with the given fraction.
    pub fn fitted_c_for_fraction(&self, fraction: f64) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.s_fraction == fraction)
            .fold(0.0, |a, p| a.max(p.ratio))
    }

    /// Fitted constant over samples whose region keeps `δ` comparable to `δ(z')`.
    pub fn fitted_c_comparable(&self) -> f64 {
        self.samples.iter().filter(|s| s.comparable).fold(0.0, |a, p| a.max(p.ratio))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auxiliary::BoundaryData;
    use crate::geometry::GapGeometry;

    #[test]
    fn rhs_at_neck_with_half_gap() {
        let (eps, g): (f64, f64) = (0.01, 0.5);
        let a = 1.0 / 1.5;
        let expect = eps.powf(-1.0 - a) * (eps / 2.0).powf(0.5) + eps.powf(-0.5 - a);
        assert!((prop21_rhs(eps, eps / 2.0, g, 1.0, 0.0) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn equal_constants_give_zero_seminorm() {
        let g = GapGeometry::symmetric(0.01, 0.5).unwrap();
        let d = BoundaryData::constant(vec![0.4], vec![0.4], 1).unwrap();
        let f = AuxiliaryField::new(g, d, 0).unwrap();
        let cfg = Prop21Config {
            pairs: 500,
            ..Default::default()
        };
        let r = check_prop21(&f, &[0.0, 0.25], &[0.5, 1.0], &cfg).unwrap();
        assert!(r.samples.iter().all(|s| s.seminorm == 0.0));
        assert!(r.samples.iter().any(|s| !s.comparable));
        assert!(r.samples.iter().filter(|s| s.z_prime == 0.0).all(|s| s.comparable));
        assert_eq!(r.fitted_c, 0.0);
    }

    #[test]
    fn hypothesis_violation_is_config_error() {
        let g = GapGeometry::symmetric(0.01, 0.5).unwrap();
        let d = BoundaryData::constant(vec![1.0], vec![0.0], 1).unwrap();
        let f = AuxiliaryField::new(g, d, 0).unwrap();
        let err = check_prop21(&f, &[0.0], &[1.5], &Prop21Config::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn fitted_constant_finite_for_jump() {
        let g = GapGeometry::symmetric(0.01, 0.5).unwrap();
        let d = BoundaryData::constant(vec![1.0], vec![0.0], 1).unwrap();
        let f = AuxiliaryField::new(g, d, 0).unwrap();
        let cfg = Prop21Config {
            pairs: 2000,
            ..Default::default()
        };
        let r = check_prop21(&f, &[0.0, 0.1, 0.25], &[0.25, 1.0], &cfg).unwrap();
        assert!(r.fitted_c.is_finite() && r.fitted_c > 0.0);
        assert_eq!(r.samples.len(), 6);
    }
}
