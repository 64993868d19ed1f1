//! Sweeps over the gap width and the pass/fail checks built on them.

mod checks;
mod fit;

pub use checks::*;
pub use fit::{fit_rate, RateFit};

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::auxiliary::{AuxiliaryField, BoundaryData};
use crate::coefficients::{CoefficientSet, LameParameters};
use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, LocalRegion};
use crate::mesh::{Grading, Mesh};
use crate::solver::{
    assemble, difference_w, solve_dirichlet, BoundaryAssignment, DiscreteSolution, LateralClosure, Quadrature,
    RightHandSide, SolutionKind,
};

/// Allowed deviation of a fitted exponent from its target.
pub const RHO_TOLERANCE: f64 = 0.15;
/// Largest accepted max/min ratio of a constant across the sweep.
pub const STABILITY_FACTOR: f64 = 3.0;
/// Largest accepted relative change of `M_center` under one refinement.
pub const RELIABILITY_THRESHOLD: f64 = 0.10;
/// Energies at or below this are treated as zero.
pub const DEGENERATE_ENERGY: f64 = 1e-16;
/// Centerline probes stay this fraction of `δ` away from the boundaries.
pub const CENTERLINE_OFFSET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshParams {
    pub layers: usize,
    pub aspect: f64,
    pub dxmax: f64,
    pub xrange: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            layers: 8,
            aspect: 2.0,
            dxmax: 0.02,
            xrange: 1.0,
        }
    }
}

impl MeshParams {
    /// Resolution used for local energies, which need the neck cell resolved
    /// by many stations.
    pub fn energy_default() -> Self {
        Self {
            layers: 16,
            aspect: 0.125,
            dxmax: 0.005,
            xrange: 1.0,
        }
    }

    pub fn grading(&self) -> Grading {
        Grading {
            aspect: self.aspect,
            dxmax: self.dxmax,
            xrange: self.xrange,
        }
    }

    pub fn build(&self, geom: &GapGeometry) -> Result<Arc<Mesh>> {
        Ok(Arc::new(Mesh::generate(geom, self.layers, self.grading())?))
    }
}

#[derive(Clone)]
pub struct SweepPlan {
    /// Strictly decreasing gap widths.
    pub epsilons: Vec<f64>,
    pub gamma: f64,
    /// Amplitudes of the top and bottom profiles `c |x'|^{1+γ}`.
    pub c1: f64,
    pub c2: f64,
    pub coefficients: CoefficientSet,
    pub data: BoundaryData,
    pub mesh: MeshParams,
    pub energy_mesh: MeshParams,
    pub centerline_samples: usize,
    pub profile_stations: usize,
    /// Profile stations cover `[-profile_range, profile_range]`.
    pub profile_range: f64,
    pub closure: LateralClosure,
    pub quadrature: Quadrature,
    pub reliability_gate: bool,
    pub seed: u64,
}

impl std::fmt::Debug for SweepPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.summary())
    }
}

impl Default for SweepPlan {
    /// Lamé `(1, 1)`, `γ = 0.5`, `φ = (1, 0)`, `ψ = 0`, five gap widths.
    fn default() -> Self {
        let lame = LameParameters::new(1.0, 1.0).expect("valid Lamé parameters");
        Self {
            epsilons: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            gamma: 0.5,
            c1: 1.0,
            c2: -1.0,
            coefficients: CoefficientSet::lame(lame, 2),
            data: BoundaryData::constant(vec![1.0, 0.0], vec![0.0, 0.0], 1).expect("valid data"),
            mesh: MeshParams::default(),
            energy_mesh: MeshParams::energy_default(),
            centerline_samples: 33,
            profile_stations: 65,
            profile_range: 0.5,
            closure: LateralClosure::Auxiliary,
            quadrature: Quadrature::ThreePoint,
            reliability_gate: true,
            seed: 0,
        }
    }
}

/// Serializable description of a plan, recorded next to every result.
#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub epsilons: Vec<f64>,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub system: String,
    pub m: usize,
    pub lambda: f64,
    pub big_lambda: f64,
    pub data: String,
    pub mesh: MeshParams,
    pub energy_mesh: MeshParams,
    pub centerline_samples: usize,
    pub profile_stations: usize,
    pub profile_range: f64,
    pub closure: LateralClosure,
    pub quadrature: Quadrature,
    pub reliability_gate: bool,
    pub seed: u64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.len() < 3 {
            return Err(Error::config(format!(
                "a rate fit needs at least 3 epsilon values, got {}",
                self.epsilons.len()
            )));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::config("epsilon values must lie in (0, 1)"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("epsilon values must be strictly decreasing"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.coefficients.n() != 2 {
            return Err(Error::Unsupported("sweeps are implemented for n = 2".into()));
        }
        if self.coefficients.m() != self.data.m() {
            return Err(Error::config(format!(
                "coefficients have m = {} but boundary data has m = {}",
                self.coefficients.m(),
                self.data.m()
            )));
        }
        if self.centerline_samples < 2 || self.profile_stations < 2 {
            return Err(Error::config("need at least 2 centerline samples and 2 profile stations"));
        }
        if !(self.profile_range > 0.0 && self.profile_range < self.mesh.xrange) {
            return Err(Error::config("profile range must lie inside the meshed interval"));
        }
        if self.mesh.layers < 4 || self.energy_mesh.layers < 4 {
            return Err(Error::config("meshes need at least 4 layers"));
        }
        for eps in &self.epsilons {
            self.geometry(*eps)?;
        }
        Ok(())
    }

    pub fn geometry(&self, eps: f64) -> Result<GapGeometry> {
        GapGeometry::power(eps, self.gamma, 2, self.c1, self.c2)
    }

    pub fn summary(&self) -> PlanSummary {
        PlanSummary {
            epsilons: self.epsilons.clone(),
            gamma: self.gamma,
            c1: self.c1,
            c2: self.c2,
            system: self.coefficients.kind().to_string(),
            m: self.coefficients.m(),
            lambda: self.coefficients.lambda(),
            big_lambda: self.coefficients.big_lambda(),
            data: self.data.kind().to_string(),
            mesh: self.mesh,
            energy_mesh: self.energy_mesh,
            centerline_samples: self.centerline_samples,
            profile_stations: self.profile_stations,
            profile_range: self.profile_range,
            closure: self.closure,
            quadrature: self.quadrature,
            reliability_gate: self.reliability_gate,
            seed: self.seed,
        }
    }

    /// Component with the largest `|φ^{(ℓ)}(0) - ψ^{(ℓ)}(0)|` (lowest index on ties).
    pub fn dominant_component(&self) -> usize {
        (0..self.data.m()).fold(0, |best, l| {
            if self.data.component_jump(&[0.0], l) > self.data.component_jump(&[0.0], best) {
                l
            } else {
                best
            }
        })
    }

    /// `‖φ‖ + ‖ψ‖`, the boundary part of the envelope's norm terms.
    pub fn data_norms(&self) -> f64 {
        self.data.phi_norm_total() + self.data.psi_norm_total()
    }
}

/// `|∇u|` at a point together with the envelope
/// `|φ - ψ|(x') / (ε + |x'|^{1+γ}) + ‖φ‖ + ‖ψ‖ + ‖u‖_{L²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub x: [f64; 2],
    pub grad_norm: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRecord {
    pub epsilon: f64,
    /// `|∇u|` at the midline point above `x' = 0`.
    pub m_center: f64,
    pub centerline_sup: f64,
    pub centerline_min: f64,
    pub centerline: Vec<Probe>,
    pub profile: Vec<Probe>,
    /// `|φ - ψ|(0)`.
    pub jump_center: f64,
    /// `‖φ‖ + ‖ψ‖ + ‖u‖_{L²}`.
    pub norm_terms: f64,
    pub u_l2: f64,
    pub c_upper: f64,
    /// `None` when `φ(0) = ψ(0)`.
    pub c_lower: Option<f64>,
    /// `∫ |∇w_ℓ|²` over the cell of radius `δ(0)` at the neck, on the energy mesh.
    pub energy_e0: f64,
    pub m_center_refined: Option<f64>,
    pub refinement_change: Option<f64>,
    pub reliable: bool,
    pub vertices: usize,
    pub triangles: usize,
    pub residual: f64,
    pub flags: Vec<String>,
}

impl EpsilonRecord {
    pub fn flags_string(&self) -> String {
        self.flags.join(";")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub plan: PlanSummary,
    pub records: Vec<EpsilonRecord>,
    pub fit: Option<RateFit>,
    /// `-slope` of `ln M_center` against `ln ε`.
    pub rho: Option<f64>,
    pub rho_half_width: Option<f64>,
    pub reliable: bool,
    /// `C_upper ≥ C_lower · J / (J + ε N)` for every `ε`.
    pub consistent: bool,
    pub flags: Vec<String>,
}

impl BlowupReport {
    pub fn empty(plan: &SweepPlan) -> Self {
        Self {
            plan: plan.summary(),
            records: Vec::new(),
            fit: None,
            rho: None,
            rho_half_width: None,
            reliable: true,
            consistent: true,
            flags: Vec::new(),
        }
    }

    pub fn record(&self, eps: f64) -> Option<&EpsilonRecord> {
        self.records.iter().find(|r| r.epsilon == eps)
    }

    /// Whether `ρ` lies within [`RHO_TOLERANCE`] of `target`.
    pub fn rho_within(&self, target: f64) -> bool {
        self.rho.is_some_and(|r| (r - target).abs() <= RHO_TOLERANCE)
    }
}

fn gradient_probe(u: &DiscreteSolution, x: [f64; 2]) -> Result<f64> {
    let g = u.gradient_norm_at(x)?;
    if !g.is_finite() {
        return Err(Error::SolveFailed { residual: f64::NAN });
    }
    Ok(g)
}

fn midline(geom: &GapGeometry, xp: f64) -> f64 {
    0.5 * (geom.top_height(&[xp]) + geom.bottom_height(&[xp]))
}

/// Centerline probe heights at `x' = 0`.
pub fn centerline_points(geom: &GapGeometry, samples: usize) -> Vec<[f64; 2]> {
    let (b, t) = (geom.bottom_height(&[0.0]), geom.top_height(&[0.0]));
    let d = t - b;
    let (lo, hi) = (b + CENTERLINE_OFFSET * d, t - CENTERLINE_OFFSET * d);
    (0..samples)
        .map(|k| [0.0, lo + (hi - lo) * k as f64 / (samples - 1) as f64])
        .collect()
}

/// Midline probes at evenly spaced stations in `[-range, range]`.
pub fn profile_points(geom: &GapGeometry, stations: usize, range: f64) -> Vec<[f64; 2]> {
    (0..stations)
        .map(|k| {
            let xp = -range + 2.0 * range * k as f64 / (stations - 1) as f64;
            [xp, midline(geom, xp)]
        })
        .collect()
}

/// `∫ |∇w_ℓ|²` over `Ω̂_{δ(z')}(z)` for each `z'`, with `w_ℓ` solved on
/// `params`.
pub fn local_energies(
    plan: &SweepPlan,
    eps: f64,
    params: &MeshParams,
    component: usize,
    z_primes: &[f64],
) -> Result<Vec<f64>> {
    let geom = plan.geometry(eps)?;
    let mesh = params.build(&geom)?;
    let v = crate::solver::solve_component(
        &mesh,
        &plan.coefficients,
        &plan.data,
        component,
        plan.closure,
        plan.quadrature,
    )?;
    let field = AuxiliaryField::new(geom.clone(), plan.data.clone(), component)?;
    let w = difference_w(&v, &field)?;
    z_primes
        .iter()
        .map(|&zp| {
            let region = LocalRegion::on_midline(&geom, &[zp], geom.delta(&[zp])?)?;
            Ok(w.energy_on(&region))
        })
        .collect()
}

/// The full problem on `mesh` with the plan's data and closure.
pub fn solve_full(plan: &SweepPlan, mesh: &Arc<Mesh>) -> Result<DiscreteSolution> {
    let system = assemble(mesh, &plan.coefficients, &RightHandSide::zero(), plan.quadrature)?;
    let bc = BoundaryAssignment::from_data(mesh, &plan.data, plan.closure);
    solve_dirichlet(system, &bc, SolutionKind::Full)
}

fn measure_m_center(plan: &SweepPlan, mesh: &Arc<Mesh>) -> Result<f64> {
    let u = solve_full(plan, mesh)?;
    gradient_probe(&u, [0.0, midline(mesh.geometry(), 0.0)])
}

fn measure(plan: &SweepPlan, eps: f64) -> Result<EpsilonRecord> {
    let geom = plan.geometry(eps)?;
    let mesh = plan.mesh.build(&geom)?;
    let u = solve_full(plan, &mesh)?;
    let gamma = plan.gamma;
    let u_l2 = u.l2_norm();
    let norm_terms = plan.data_norms() + u_l2;
    let jump_center = plan.data.jump(&[0.0]);
    let envelope = |x: [f64; 2]| plan.data.jump(&[x[0]]) / (eps + x[0].abs().powf(1.0 + gamma)) + norm_terms;
    let probe = |x: [f64; 2]| -> Result<Probe> {
        Ok(Probe {
            x,
            grad_norm: gradient_probe(&u, x)?,
            envelope: envelope(x),
        })
    };
    let centerline = centerline_points(&geom, plan.centerline_samples)
        .into_iter()
        .map(probe)
        .collect::<Result<Vec<_>>>()?;
    let profile = profile_points(&geom, plan.profile_stations, plan.profile_range)
        .into_iter()
        .map(probe)
        .collect::<Result<Vec<_>>>()?;
    let m_center = gradient_probe(&u, [0.0, midline(&geom, 0.0)])?;
    let centerline_sup = centerline.iter().fold(0.0f64, |a, p| a.max(p.grad_norm));
    let centerline_min = centerline.iter().fold(f64::INFINITY, |a, p| a.min(p.grad_norm));
    let c_upper = centerline
        .iter()
        .chain(&profile)
        .fold(0.0f64, |a, p| a.max(p.grad_norm / p.envelope));
    let c_lower = (jump_center > 0.0).then(|| centerline_min * eps / jump_center);

    let component = plan.dominant_component();
    let energy_e0 = local_energies(plan, eps, &plan.energy_mesh, component, &[0.0])?[0];

    let mut flags = Vec::new();
    let (m_center_refined, refinement_change, reliable) = if plan.reliability_gate {
        let fine = Arc::new(mesh.refine(2)?);
        let mf = measure_m_center(plan, &fine)?;
        let change = (mf - m_center).abs() / mf.abs().max(f64::MIN_POSITIVE);
        let ok = change < RELIABILITY_THRESHOLD;
        if !ok {
            flags.push("unreliable".to_string());
        }
        (Some(mf), Some(change), ok)
    } else {
        (None, None, true)
    };
    if jump_center == 0.0 {
        flags.push("no_jump".to_string());
    }
    if centerline_sup <= 1e-9 * norm_terms.max(1.0) {
        flags.push("degenerate".to_string());
    }
    Ok(EpsilonRecord {
        epsilon: eps,
        m_center,
        centerline_sup,
        centerline_min,
        centerline,
        profile,
        jump_center,
        norm_terms,
        u_l2,
        c_upper,
        c_lower,
        energy_e0,
        m_center_refined,
        refinement_change,
        reliable,
        vertices: mesh.vertices().len(),
        triangles: mesh.triangles().len(),
        residual: u.residual(),
        flags,
    })
}

/// Solves and probes every `ε` of the plan (in parallel) and fits
/// `ln M_center = -ρ ln ε + const`.
pub fn run_sweep(plan: &SweepPlan) -> Result<BlowupReport> {
    plan.validate()?;
    let records = plan
        .epsilons
        .par_iter()
        .map(|&eps| measure(plan, eps))
        .collect::<Result<Vec<_>>>()?;
    let mut report = BlowupReport::empty(plan);
    report.records = records;
    finish_report(&mut report);
    Ok(report)
}

/// Recomputes the sweep-level fields from the records.
pub fn finish_report(report: &mut BlowupReport) {
    let mut flags = Vec::new();
    let pairs: Vec<(f64, f64)> = report.records.iter().map(|r| (r.epsilon, r.m_center)).collect();
    report.fit = None;
    report.rho = None;
    report.rho_half_width = None;
    if !pairs.is_empty() {
        match fit_rate(&pairs) {
            Ok(f) => {
                report.fit = Some(f);
                report.rho = Some(-f.slope);
                report.rho_half_width = Some(f.half_width);
            }
            Err(_) => flags.push("fit_failed".to_string()),
        }
    }
    report.reliable = report.records.iter().all(|r| r.reliable);
    if !report.reliable {
        flags.push("unreliable".to_string());
    }
    if report.records.iter().any(|r| r.flags.iter().any(|f| f == "degenerate")) {
        flags.push("degenerate".to_string());
    }
    report.consistent = report.records.iter().all(|r| match r.c_lower {
        Some(cl) => {
            let j = r.jump_center;
            r.c_upper >= cl * j / (j + r.epsilon * r.norm_terms) * (1.0 - 1e-12)
        }
        None => true,
    });
    if !report.consistent {
        flags.push("inconsistent_constants".to_string());
    }
    report.flags = flags;
}

#[cfg(test)]
mod tests;
