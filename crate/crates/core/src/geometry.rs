//! The narrow region between two nearly touching graph boundaries.
//!
//! The gap is parameterized over the tangential variable `x' ∈ B'_1 ⊂ R^{n-1}`:
//!
//! ```text
//! -ε/2 + h2(x') < x_n < ε/2 + h1(x'),     δ(x') = ε + h1(x') - h2(x')
//! ```
//!
//! All values are immutable after construction; every operation is a pure
//! function of its inputs.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{ball_points, norm};

pub type ProfileValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ProfileGradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Default number of quasi-uniform samples used by the sampled invariant checks.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Tolerance for the conditions `h(0) = 0`, `∇h(0) = 0`.
const ORIGIN_TOL: f64 = 1e-14;

#[derive(Clone)]
enum ProfileKind {
    /// `h(x') = c |x'|^{1+γ}`
    Power { amplitude: f64, gamma: f64 },
    Custom {
        value: ProfileValueFn,
        gradient: ProfileGradientFn,
        tag: String,
    },
}

/// One boundary graph `x' ↦ h(x')` together with its gradient rule.
#[derive(Clone)]
pub struct BoundaryProfile {
    kind: ProfileKind,
}

impl BoundaryProfile {
    /// `h(x') = amplitude · |x'|^{1+γ}`.
    pub fn power(amplitude: f64, gamma: f64) -> Self {
        Self {
            kind: ProfileKind::Power { amplitude, gamma },
        }
    }

    pub fn flat() -> Self {
        Self::power(0.0, 0.5)
    }

    /// A user-supplied profile. The gradient rule must be consistent with the
    /// value rule; [`BoundaryProfile::gradient_error`] checks this by sampling.
    pub fn custom(
        tag: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: ProfileKind::Custom {
                value: Arc::new(value),
                gradient: Arc::new(gradient),
                tag: tag.into(),
            },
        }
    }

    pub fn value(&self, xp: &[f64]) -> f64 {
        match &self.kind {
            ProfileKind::Power { amplitude, gamma } => {
                if *amplitude == 0.0 {
                    return 0.0;
                }
                amplitude * norm(xp).powf(1.0 + gamma)
            }
            ProfileKind::Custom { value, .. } => value(xp),
        }
    }

    pub fn gradient(&self, xp: &[f64]) -> Vec<f64> {
        match &self.kind {
            ProfileKind::Power { amplitude, gamma } => {
                let r = norm(xp);
                if r == 0.0 || *amplitude == 0.0 {
                    return vec![0.0; xp.len()];
                }
                let f = amplitude * (1.0 + gamma) * r.powf(gamma - 1.0);
                xp.iter().map(|v| f * v).collect()
            }
            ProfileKind::Custom { gradient, .. } => gradient(xp),
        }
    }

    /// The signed amplitude `c` of a built-in power profile.
    pub fn amplitude(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::Power { amplitude, .. } => Some(*amplitude),
            ProfileKind::Custom { .. } => None,
        }
    }

    pub fn tag(&self) -> String {
        match &self.kind {
            ProfileKind::Power { amplitude, gamma } => {
                format!("power(c={amplitude}, exponent={})", 1.0 + gamma)
            }
            ProfileKind::Custom { tag, .. } => tag.clone(),
        }
    }

    /// Maximum relative deviation between the gradient rule and central
    /// finite differences of the value rule, over samples with `|x'| ≥ 0.01`.
    pub fn gradient_error(&self, dim_tangential: usize, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for xp in ball_points(dim_tangential, samples) {
            let r = norm(&xp);
            if r < 0.01 {
                continue;
            }
            let g = self.gradient(&xp);
            let step = 1e-5 * r;
            let mut fd = vec![0.0; xp.len()];
            for k in 0..xp.len() {
                let mut p = xp.clone();
                let mut q = xp.clone();
                p[k] += step;
                q[k] -= step;
                fd[k] = (self.value(&p) - self.value(&q)) / (2.0 * step);
            }
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            let scale = norm(&g).max(norm(&fd));
            if scale > 1e-12 {
                worst = worst.max(norm(&diff) / scale);
            }
        }
        worst
    }
}

impl fmt::Debug for BoundaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundaryProfile({})", self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Top,
    Bottom,
}

/// The narrow region `Ω_1` and its defining data.
#[derive(Debug, Clone)]
pub struct GapGeometry {
    epsilon: f64,
    gamma: f64,
    dim: usize,
    top: BoundaryProfile,
    bottom: BoundaryProfile,
    kappa0: f64,
    kappa1: f64,
    kappa2: f64,
}

impl GapGeometry {
    /// Builds a geometry and checks the hard constraints: `ε > 0`,
    /// `γ ∈ (0,1)`, `n ≥ 2`, `h(0) = ∇h(0) = 0` and `δ > 0` on samples of `B'_1`.
    ///
    /// The envelope constants `κ0, κ1, κ2` are exact for built-in power
    /// profiles and measured on samples for custom ones.
    pub fn new(
        epsilon: f64,
        gamma: f64,
        dim: usize,
        top: BoundaryProfile,
        bottom: BoundaryProfile,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Geometry(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Geometry(format!("gamma must lie in (0,1), got {gamma}")));
        }
        if dim < 2 {
            return Err(Error::Geometry(format!("dimension must be at least 2, got {dim}")));
        }
        let origin = vec![0.0; dim - 1];
        for (name, p) in [("top", &top), ("bottom", &bottom)] {
            if p.value(&origin).abs() > ORIGIN_TOL || norm(&p.gradient(&origin)) > ORIGIN_TOL {
                return Err(Error::Geometry(format!(
                    "{name} profile must satisfy h(0) = 0 and grad h(0) = 0"
                )));
            }
        }
        let mut geom = Self {
            epsilon,
            gamma,
            dim,
            top,
            bottom,
            kappa0: 0.0,
            kappa1: 0.0,
            kappa2: 0.0,
        };
        for xp in ball_points(dim - 1, DEFAULT_SAMPLES) {
            let d = geom.delta_unchecked(&xp);
            if !(d > 0.0) {
                return Err(Error::Geometry(format!(
                    "gap closes: delta({xp:?}) = {d:e}"
                )));
            }
        }
        geom.set_kappas();
        Ok(geom)
    }

    /// Built-in family `h1 = c1 |x'|^{1+γ}`, `h2 = c2 |x'|^{1+γ}`.
    pub fn power(epsilon: f64, gamma: f64, dim: usize, c1: f64, c2: f64) -> Result<Self> {
        Self::new(
            epsilon,
            gamma,
            dim,
            BoundaryProfile::power(c1, gamma),
            BoundaryProfile::power(c2, gamma),
        )
    }

    /// The default symmetric 2-D gap, `c1 = -c2 = 1`.
    pub fn symmetric(epsilon: f64, gamma: f64) -> Result<Self> {
        Self::power(epsilon, gamma, 2, 1.0, -1.0)
    }

    /// Flat strip `|x_n| < ε/2` used by the exact-solution oracles. The
    /// gradient envelope does not hold here (`κ0 = 0`).
    pub fn flat(epsilon: f64, dim: usize) -> Result<Self> {
        Self::new(epsilon, 0.5, dim, BoundaryProfile::flat(), BoundaryProfile::flat())
    }

    fn set_kappas(&mut self) {
        let g = self.gamma;
        match (self.top.amplitude(), self.bottom.amplitude()) {
            (Some(c1), Some(c2)) => {
                let (a, b) = (c1.abs(), c2.abs());
                self.kappa0 = (1.0 + g) * a.min(b);
                self.kappa1 = (1.0 + g) * a.max(b);
                let norm_bound = |c: f64| c * (1.0 + (1.0 + g) + (1.0 + g) * 2f64.powf(1.0 - g));
                self.kappa2 = norm_bound(a).max(norm_bound(b));
            }
            _ => {
                let env = self.measured_envelope(DEFAULT_SAMPLES);
                self.kappa0 = env.0;
                self.kappa1 = env.1;
                self.kappa2 = self
                    .measured_c1gamma_norm(&self.top, 200)
                    .max(self.measured_c1gamma_norm(&self.bottom, 200));
            }
        }
    }

    /// Min and max over samples (and both profiles) of `|∇h(x')| / |x'|^γ`.
    fn measured_envelope(&self, samples: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for xp in ball_points(self.dim - 1, samples) {
            let r = norm(&xp);
            if r < 1e-9 {
                continue;
            }
            for p in [&self.top, &self.bottom] {
                let q = norm(&p.gradient(&xp)) / r.powf(self.gamma);
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        (lo, hi)
    }

    fn measured_c1gamma_norm(&self, p: &BoundaryProfile, samples: usize) -> f64 {
        let pts = ball_points(self.dim - 1, samples);
        let grads: Vec<Vec<f64>> = pts.iter().map(|x| p.gradient(x)).collect();
        let sup_h = pts.iter().map(|x| p.value(x).abs()).fold(0.0, f64::max);
        let sup_g = grads.iter().map(|g| norm(g)).fold(0.0, f64::max);
        let mut semi: f64 = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let dx: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect();
                let dg: Vec<f64> = grads[i].iter().zip(&grads[j]).map(|(a, b)| a - b).collect();
                let r = norm(&dx);
                if r > 0.0 {
                    semi = semi.max(norm(&dg) / r.powf(self.gamma));
                }
            }
        }
        sup_h + sup_g + semi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn top_profile(&self) -> &BoundaryProfile {
        &self.top
    }

    pub fn bottom_profile(&self) -> &BoundaryProfile {
        &self.bottom
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    /// A copy of this geometry with a different gap `ε` and the same profiles.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.gamma, self.dim, self.top.clone(), self.bottom.clone())
    }

    /// `x_n` of the top boundary over `x'`: `ε/2 + h1(x')`.
    pub fn top_height(&self, xp: &[f64]) -> f64 {
        0.5 * self.epsilon + self.top.value(xp)
    }

    /// `x_n` of the bottom boundary over `x'`: `-ε/2 + h2(x')`.
    pub fn bottom_height(&self, xp: &[f64]) -> f64 {
        -0.5 * self.epsilon + self.bottom.value(xp)
    }

    pub(crate) fn delta_unchecked(&self, xp: &[f64]) -> f64 {
        self.epsilon + self.top.value(xp) - self.bottom.value(xp)
    }

    /// Local gap width `δ(x') = ε + h1(x') - h2(x')`.
    pub fn delta(&self, xp: &[f64]) -> Result<f64> {
        self.check_tangential(xp)?;
        Ok(self.delta_unchecked(xp))
    }

    /// `∇_{x'} δ(x')`.
    pub fn delta_gradient(&self, xp: &[f64]) -> Vec<f64> {
        let g1 = self.top.gradient(xp);
        let g2 = self.bottom.gradient(xp);
        g1.iter().zip(&g2).map(|(a, b)| a - b).collect()
    }

    fn check_tangential(&self, xp: &[f64]) -> Result<()> {
        if xp.len() != self.dim - 1 {
            return Err(Error::domain(format!(
                "tangential point has {} coordinates, expected {}",
                xp.len(),
                self.dim - 1
            )));
        }
        let r = norm(xp);
        if !(r <= 1.0 + 1e-12) {
            return Err(Error::domain(format!("|x'| = {r} exceeds 1")));
        }
        Ok(())
    }

    /// Membership in `Ω_r`: `|x'| ≤ r` and strictly between the two graphs.
    pub fn contains(&self, r: f64, x: &[f64]) -> bool {
        if x.len() != self.dim {
            return false;
        }
        let (xp, xn) = x.split_at(self.dim - 1);
        let xn = xn[0];
        norm(xp) <= r && self.bottom_height(xp) < xn && xn < self.top_height(xp)
    }

    /// Membership in the closure of `Ω_r`, with absolute tolerance `tol`.
    pub fn contains_closed(&self, r: f64, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim {
            return false;
        }
        let (xp, xn) = x.split_at(self.dim - 1);
        let xn = xn[0];
        norm(xp) <= r + tol
            && self.bottom_height(xp) - tol <= xn
            && xn <= self.top_height(xp) + tol
    }

    /// The point `(x', ±ε/2 + h(x'))` on `Γ_1^±`.
    pub fn boundary_point(&self, side: Side, xp: &[f64]) -> Result<Vec<f64>> {
        self.check_tangential(xp)?;
        let xn = match side {
            Side::Top => self.top_height(xp),
            Side::Bottom => self.bottom_height(xp),
        };
        let mut x = xp.to_vec();
        x.push(xn);
        Ok(x)
    }

    /// Sampled verification of the structural conditions on the profiles.
    pub fn check_invariants(&self, samples: usize) -> GeometryReport {
        let n1 = self.dim - 1;
        let origin = vec![0.0; n1];
        let origin_residual = [&self.top, &self.bottom]
            .iter()
            .map(|p| p.value(&origin).abs().max(norm(&p.gradient(&origin))))
            .fold(0.0, f64::max);

        let mut min_delta = f64::INFINITY;
        let mut envelope_ok = self.kappa0 > 0.0;
        let mut envelope_lo = f64::INFINITY;
        let mut envelope_hi: f64 = 0.0;
        for xp in ball_points(n1, samples) {
            min_delta = min_delta.min(self.delta_unchecked(&xp));
            let r = norm(&xp);
            if r < 1e-9 {
                continue;
            }
            let rg = r.powf(self.gamma);
            for p in [&self.top, &self.bottom] {
                let g = norm(&p.gradient(&xp));
                envelope_lo = envelope_lo.min(g / rg);
                envelope_hi = envelope_hi.max(g / rg);
                let slack = 1e-12 * (1.0 + g);
                if g < self.kappa0 * rg - slack || g > self.kappa1 * rg + slack {
                    envelope_ok = false;
                }
            }
        }
        let gradient_error = self
            .top
            .gradient_error(n1, samples)
            .max(self.bottom.gradient_error(n1, samples));

        let origin_ok = origin_residual <= ORIGIN_TOL;
        let gap_ok = min_delta > 0.0;
        let gradient_rule_ok = gradient_error <= 1e-6;
        GeometryReport {
            samples,
            epsilon: self.epsilon,
            gamma: self.gamma,
            dim: self.dim,
            top: self.top.tag(),
            bottom: self.bottom.tag(),
            kappa0: self.kappa0,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            origin_residual,
            origin_ok,
            min_delta,
            gap_ok,
            envelope_min_ratio: envelope_lo,
            envelope_max_ratio: envelope_hi,
            envelope_ok,
            gradient_rule_error: gradient_error,
            gradient_rule_ok,
            passed: origin_ok && gap_ok && envelope_ok && gradient_rule_ok,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub samples: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub dim: usize,
    pub top: String,
    pub bottom: String,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub origin_residual: f64,
    pub origin_ok: bool,
    pub min_delta: f64,
    pub gap_ok: bool,
    /// Sampled range of `|∇h(x')| / |x'|^γ` over both profiles.
    pub envelope_min_ratio: f64,
    pub envelope_max_ratio: f64,
    pub envelope_ok: bool,
    pub gradient_rule_error: f64,
    pub gradient_rule_ok: bool,
    pub passed: bool,
}

/// The local cell `Ω̂_s(z) = { x in the gap : |x' - z'| < s }`.
#[derive(Debug, Clone)]
pub struct LocalRegion<'g> {
    geom: &'g GapGeometry,
    center: Vec<f64>,
    radius: f64,
}

impl<'g> LocalRegion<'g> {
    /// `center` must lie in the closure of `Ω_{1/2}`.
    pub fn new(geom: &'g GapGeometry, center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::domain(format!("region radius must be positive, got {radius}")));
        }
        if !geom.contains_closed(0.5, &center, 1e-12) {
            return Err(Error::domain(format!("region center {center:?} not in Omega_1/2")));
        }
        Ok(Self {
            geom,
            center,
            radius,
        })
    }

    /// The region `Ω̂_s(z)` centered on the gap midline over `z'`.
    pub fn on_midline(geom: &'g GapGeometry, zp: &[f64], radius: f64) -> Result<Self> {
        let mut z = zp.to_vec();
        z.push(0.5 * (geom.top_height(zp) + geom.bottom_height(zp)));
        Self::new(geom, z, radius)
    }

    pub fn geometry(&self) -> &'g GapGeometry {
        self.geom
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn center_tangential(&self) -> &[f64] {
        &self.center[..self.geom.dim - 1]
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `δ(z')` for the region's center.
    pub fn delta_center(&self) -> f64 {
        self.geom.delta_unchecked(self.center_tangential())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.geom.dim {
            return false;
        }
        let n1 = self.geom.dim - 1;
        let (xp, xn) = x.split_at(n1);
        let xn = xn[0];
        let dz: Vec<f64> = xp.iter().zip(self.center_tangential()).map(|(a, b)| a - b).collect();
        norm(&dz) < self.radius
            && norm(xp) <= 1.0
            && self.geom.bottom_height(xp) < xn
            && xn < self.geom.top_height(xp)
    }

    fn contains_closed(&self, x: &[f64], radius: f64, tol: f64) -> bool {
        let n1 = self.geom.dim - 1;
        let (xp, xn) = x.split_at(n1);
        let dz: Vec<f64> = xp.iter().zip(self.center_tangential()).map(|(a, b)| a - b).collect();
        norm(&dz) <= radius * (1.0 + tol)
            && self.geom.bottom_height(xp) - tol <= xn[0]
            && xn[0] <= self.geom.top_height(xp) + tol
    }

    /// Maps `x ∈ Ω̂_{δ(z')}(z)` to the nearly unit cell:
    /// `x' - z' = δ(z') y'`, `x_n = δ(z') y_n`.
    pub fn rescale_to_unit(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.geom.dim {
            return Err(Error::domain("point has wrong dimension"));
        }
        let d = self.delta_center();
        if !self.contains_closed(x, d, 1e-12) {
            return Err(Error::domain(format!("point {x:?} outside the local cell")));
        }
        let n1 = self.geom.dim - 1;
        let mut y: Vec<f64> = x[..n1]
            .iter()
            .zip(self.center_tangential())
            .map(|(a, b)| (a - b) / d)
            .collect();
        y.push(x[n1] / d);
        Ok(y)
    }

    /// Inverse of [`LocalRegion::rescale_to_unit`].
    pub fn unit_to_physical(&self, y: &[f64]) -> Vec<f64> {
        let d = self.delta_center();
        let n1 = self.geom.dim - 1;
        let mut x: Vec<f64> = y[..n1]
            .iter()
            .zip(self.center_tangential())
            .map(|(a, b)| b + d * a)
            .collect();
        x.push(d * y[n1]);
        x
    }

    /// Tangential extent of the region clipped to `|x'| ≤ 1` (2-D only).
    pub fn tangential_interval(&self) -> (f64, f64) {
        let z = self.center[0];
        ((z - self.radius).max(-1.0), (z + self.radius).min(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream_rng;
    use rand::Rng;

    fn geom() -> GapGeometry {
        GapGeometry::symmetric(0.1, 0.5).unwrap()
    }

    #[test]
    fn delta_at_origin_is_epsilon() {
        let g = geom();
        assert_eq!(g.delta(&[0.0]).unwrap(), 0.1);
    }

    #[test]
    fn delta_of_symmetric_family() {
        let g = geom();
        for t in [0.1, 0.3, -0.7, 1.0] {
            let expected = 0.1 + 2.0 * f64::abs(t).powf(1.5);
            assert!((g.delta(&[t]).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_matches_profile_recomputation() {
        let g = GapGeometry::power(0.03, 0.3, 2, 0.7, -1.3).unwrap();
        let mut rng = stream_rng(11, 0);
        for _ in 0..200 {
            let t: f64 = rng.random_range(-1.0..1.0);
            let h1 = g.top_profile().value(&[t]);
            let h2 = g.bottom_profile().value(&[t]);
            assert!((g.delta(&[t]).unwrap() - (0.03 + h1 - h2)).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_rejects_points_outside_unit_ball() {
        assert!(matches!(geom().delta(&[1.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn contains_midpoint_excludes_boundary() {
        let g = geom();
        assert!(g.contains(1.0, &[0.0, 0.0]));
        assert!(!g.contains(1.0, &[0.0, 0.05]));
        assert!(!g.contains(1.0, &[0.0, -0.05]));
    }

    #[test]
    fn contains_matches_rejection_oracle() {
        let g = GapGeometry::power(0.05, 0.5, 2, 1.0, -0.5).unwrap();
        let mut rng = stream_rng(3, 1);
        for _ in 0..10_000 {
            let x = [rng.random_range(-1.2..1.2), rng.random_range(-1.5..1.5)];
            let r = rng.random_range(0.1..1.0);
            // brute-force predicate written directly from the definition
            let top = 0.025 + f64::abs(x[0]).powf(1.5);
            let bottom = -0.025 - 0.5 * f64::abs(x[0]).powf(1.5);
            let oracle = x[0].abs() <= r && bottom < x[1] && x[1] < top;
            assert_eq!(g.contains(r, &x), oracle, "x = {x:?}, r = {r}");
        }
    }

    #[test]
    fn boundary_points() {
        let g = geom();
        assert_eq!(g.boundary_point(Side::Top, &[0.0]).unwrap(), vec![0.0, 0.05]);
        assert_eq!(g.boundary_point(Side::Bottom, &[0.0]).unwrap(), vec![0.0, -0.05]);
        let p = g.boundary_point(Side::Top, &[0.4]).unwrap();
        assert!((p[1] - (0.05 + 0.4f64.powf(1.5))).abs() < 1e-15);
        assert!(g.boundary_point(Side::Top, &[1.1]).is_err());
    }

    #[test]
    fn built_in_family_passes_invariants() {
        let report = geom().check_invariants(1000);
        assert!(report.passed, "{report:?}");
        assert!((report.kappa0 - 1.5).abs() < 1e-15);
        assert!((report.kappa1 - 1.5).abs() < 1e-15);
        assert!(report.envelope_min_ratio >= 1.5 - 1e-12);
        assert!(report.envelope_max_ratio <= 1.5 + 1e-12);
    }

    #[test]
    fn asymmetric_envelope_constants() {
        let g = GapGeometry::power(0.1, 0.4, 2, 2.0, -0.5).unwrap();
        assert!((g.kappa0() - 1.4 * 0.5).abs() < 1e-15);
        assert!((g.kappa1() - 1.4 * 2.0).abs() < 1e-15);
        assert!(g.check_invariants(500).passed);
    }

    #[test]
    fn flat_geometry_fails_envelope_only() {
        let report = GapGeometry::flat(0.2, 2).unwrap().check_invariants(100);
        assert!(report.gap_ok && report.origin_ok);
        assert!(!report.envelope_ok);
        assert!(!report.passed);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(GapGeometry::power(0.0, 0.5, 2, 1.0, -1.0).is_err());
        assert!(GapGeometry::power(0.1, 1.0, 2, 1.0, -1.0).is_err());
        assert!(GapGeometry::power(0.1, 0.5, 1, 1.0, -1.0).is_err());
        // h1 - h2 = -0.2 |x'|^{1.5} closes the gap before |x'| = 1
        assert!(GapGeometry::power(0.1, 0.5, 2, -0.1, 0.1).is_err());
        let kinked = BoundaryProfile::custom("abs", |x| x[0].abs(), |x| vec![x[0].signum()]);
        assert!(GapGeometry::new(0.1, 0.5, 2, kinked, BoundaryProfile::flat()).is_err());
    }

    #[test]
    fn custom_profile_measured_kappas() {
        let top = BoundaryProfile::custom(
            "quartic-ish",
            |x| 0.5 * f64::abs(x[0]).powf(1.5) + 0.1 * x[0].powi(4),
            |x| vec![0.75 * f64::abs(x[0]).sqrt() * x[0].signum() + 0.4 * x[0].powi(3)],
        );
        let g = GapGeometry::new(0.1, 0.5, 2, top, BoundaryProfile::power(-1.0, 0.5)).unwrap();
        let report = g.check_invariants(500);
        assert!(report.passed, "{report:?}");
        assert!(g.kappa0() >= 0.75 && g.kappa0() < 0.76, "{}", g.kappa0());
    }

    #[test]
    fn general_dimension_geometry() {
        let g = GapGeometry::power(0.05, 0.5, 3, 1.0, -1.0).unwrap();
        let xp = [0.3, 0.4];
        assert!((g.delta(&xp).unwrap() - (0.05 + 2.0 * 0.5f64.powf(1.5))).abs() < 1e-14);
        assert!(g.contains(1.0, &[0.3, 0.4, 0.0]));
        assert!(g.check_invariants(300).passed);
    }

    #[test]
    fn delta_is_even_and_bounded_below() {
        let g = geom();
        for t in [0.01, 0.2, 0.5, 0.99] {
            assert_eq!(g.delta(&[t]).unwrap(), g.delta(&[-t]).unwrap());
            assert!(g.delta(&[t]).unwrap() >= g.epsilon());
        }
    }

    #[test]
    fn rescale_center_and_round_trip() {
        let g = geom();
        let region = LocalRegion::new(&g, vec![0.1, 0.01], g.delta(&[0.1]).unwrap()).unwrap();
        let d = region.delta_center();
        let y = region.rescale_to_unit(&[0.1, 0.01]).unwrap();
        assert_eq!(y[0], 0.0);
        assert!((y[1] - 0.01 / d).abs() < 1e-15);
        let x = [0.1 + 0.3 * d, 0.02];
        let back = region.unit_to_physical(&region.rescale_to_unit(&x).unwrap());
        assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn rescale_corner_lands_on_unit_boundary() {
        let g = geom();
        let zp = 0.2;
        let region = LocalRegion::on_midline(&g, &[zp], 1.0).unwrap();
        let d = region.delta_center();
        let corner_x = zp + d;
        let corner = [corner_x, g.top_height(&[corner_x])];
        let y = region.rescale_to_unit(&corner).unwrap();
        assert!((y[0].abs() - 1.0).abs() < 1e-12);
        // just outside the cell in x' is rejected
        let outside = [zp + 1.01 * d, 0.5 * (g.top_height(&[zp + 1.01 * d]) + g.bottom_height(&[zp]))];
        assert!(region.rescale_to_unit(&outside).is_err());
    }

    #[test]
    fn local_region_membership() {
        let g = geom();
        let region = LocalRegion::on_midline(&g, &[0.0], 0.05).unwrap();
        assert!(region.contains(&[0.0, 0.0]));
        assert!(region.contains(&[0.049, 0.0]));
        assert!(!region.contains(&[0.05, 0.0]));
        assert!(!region.contains(&[0.0, 0.05]));
        assert!(LocalRegion::on_midline(&g, &[0.7], 0.1).is_err());
    }
}
