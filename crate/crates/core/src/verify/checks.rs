use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    fit_rate, local_energies, profile_points, centerline_points, solve_full, BlowupReport, EpsilonRecord,
    RateFit, SweepPlan, DEGENERATE_ENERGY, STABILITY_FACTOR,
};
use crate::auxiliary::{
    check_prop21, grad_bar_u, holder_seminorm, AuxiliaryField, BoundaryData, Prop21Config, Prop21Report,
};
use crate::coefficients::{CoefficientSet, LameParameters};
use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, LocalRegion};
use crate::mesh::{Grading, Mesh};
use crate::oracle::{brute_force_seminorm, exact_affine_case, finite_difference_reference};
use crate::solver::{
    assemble, h1_error, l2_error, solve_all, solve_dirichlet, BoundaryAssignment, DiscreteSolution, LateralClosure,
    RightHandSide, SolutionKind, SOLVER_TOLERANCE,
};
use crate::sampling::stream_rng;

/// Tolerance on the energy exponents.
pub const ENERGY_TOLERANCE: f64 = 0.2;
/// Largest accepted relative gradient change between lateral closures.
pub const CLOSURE_TOLERANCE: f64 = 0.02;
/// Tolerance on manufactured-solution rates.
pub const RATE_TOLERANCE: f64 = 0.2;
/// Sampled seminorms must reach this fraction of the brute-force value.
pub const CALIBRATION_FRACTION: f64 = 0.8;

/// `max / min`, or infinity when a value is not positive and finite.
pub fn stability_ratio(values: &[f64]) -> f64 {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return f64::INFINITY;
    }
    let max = values.iter().fold(f64::MIN, |a, v| a.max(*v));
    let min = values.iter().fold(f64::MAX, |a, v| a.min(*v));
    max / min
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileCheck {
    pub epsilons: Vec<f64>,
    /// Smallest `C` with `|∇u| ≤ C · envelope` on each profile.
    pub constants: Vec<f64>,
    pub ratio: f64,
    pub passed: bool,
}

/// Smallest constant of the upper envelope over the midline profile of one record.
pub fn profile_constant(record: &EpsilonRecord) -> Result<f64> {
    if record.profile.is_empty() {
        return Err(Error::domain(format!("no profile recorded for epsilon = {}", record.epsilon)));
    }
    Ok(record.profile.iter().fold(0.0f64, |a, p| a.max(p.grad_norm / p.envelope)))
}

pub fn check_profile(report: &BlowupReport) -> Result<ProfileCheck> {
    let constants = report.records.iter().map(profile_constant).collect::<Result<Vec<_>>>()?;
    let ratio = stability_ratio(&constants);
    Ok(ProfileCheck {
        epsilons: report.records.iter().map(|r| r.epsilon).collect(),
        constants,
        ratio,
        passed: ratio < STABILITY_FACTOR,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundCheck {
    /// False when `φ(0) = ψ(0)`.
    pub applicable: bool,
    pub status: String,
    pub epsilons: Vec<f64>,
    pub constants: Vec<f64>,
    pub ratio: f64,
    pub passed: bool,
}

pub fn check_lower_bound(report: &BlowupReport) -> LowerBoundCheck {
    let epsilons: Vec<f64> = report.records.iter().map(|r| r.epsilon).collect();
    let lower: Option<Vec<f64>> = report.records.iter().map(|r| r.c_lower).collect();
    match lower {
        Some(constants) if !constants.is_empty() => {
            let ratio = stability_ratio(&constants);
            let passed = ratio < STABILITY_FACTOR;
            LowerBoundCheck {
                applicable: true,
                status: if passed { "pass" } else { "fail" }.into(),
                epsilons,
                constants,
                ratio,
                passed,
            }
        }
        _ => LowerBoundCheck {
            applicable: false,
            status: "not applicable".into(),
            epsilons,
            constants: Vec::new(),
            ratio: f64::NAN,
            passed: false,
        },
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergySample {
    pub epsilon: f64,
    pub z_prime: f64,
    pub radius: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyScalingReport {
    pub component: usize,
    pub center: Vec<EnergySample>,
    pub center_fit: Option<RateFit>,
    /// `2γ / (1 + γ)`.
    pub center_expected: f64,
    pub center_passed: bool,
    /// `E / ε^{2γ/(1+γ)}`: bounded when the upper bound holds.
    pub center_bound_ratios: Vec<f64>,
    pub outer_epsilon: f64,
    pub outer: Vec<EnergySample>,
    pub outer_fit: Option<RateFit>,
    /// `2γ`.
    pub outer_expected: f64,
    pub outer_passed: bool,
    /// `E / |z'|^{2γ}`.
    pub outer_bound_ratios: Vec<f64>,
    /// Every energy vanished; no exponent is fitted.
    pub degenerate: bool,
    pub passed: bool,
}

/// `∫|∇w_ℓ|²` over `Ω̂_{δ(z')}(z)`: at `z' = 0` across the sweep, and at the
/// positive `z'` values for the smallest `ε`.
pub fn check_energy_scaling(plan: &SweepPlan, z_primes: &[f64]) -> Result<EnergyScalingReport> {
    plan.validate()?;
    if !z_primes.contains(&0.0) {
        return Err(Error::config("energy scaling needs z' = 0 among the z' values"));
    }
    let eps_min = *plan.epsilons.last().expect("validated plan");
    let inner = eps_min.powf(1.0 / (1.0 + plan.gamma));
    let mut outer_z: Vec<f64> = z_primes.iter().map(|z| z.abs()).filter(|z| *z != 0.0).collect();
    outer_z.sort_by(f64::total_cmp);
    outer_z.dedup();
    if let Some(z) = outer_z.iter().find(|z| **z <= inner) {
        return Err(Error::config(format!(
            "outer z' = {z} is not beyond epsilon^(1/(1+gamma)) = {inner:.4}"
        )));
    }
    if outer_z.len() < 3 {
        return Err(Error::config(format!(
            "the outer fit needs at least 3 positive z' values, got {}",
            outer_z.len()
        )));
    }
    if let Some(z) = outer_z.iter().find(|z| **z + plan.geometry(eps_min).and_then(|g| g.delta(&[**z])).unwrap_or(f64::INFINITY) > plan.energy_mesh.xrange) {
        return Err(Error::config(format!("the cell at z' = {z} leaves the meshed interval")));
    }
    let component = plan.dominant_component();
    let last = plan.epsilons.len() - 1;
    let rows = plan
        .epsilons
        .par_iter()
        .enumerate()
        .map(|(k, &eps)| {
            let mut zs = vec![0.0];
            if k == last {
                zs.extend(&outer_z);
            }
            let e = local_energies(plan, eps, &plan.energy_mesh, component, &zs)?;
            let geom = plan.geometry(eps)?;
            zs.iter()
                .zip(e)
                .map(|(&z, energy)| {
                    Ok(EnergySample {
                        epsilon: eps,
                        z_prime: z,
                        radius: geom.delta(&[z])?,
                        energy,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let center: Vec<EnergySample> = rows.iter().map(|r| r[0]).collect();
    let outer: Vec<EnergySample> = rows[last][1..].to_vec();
    let degenerate = center.iter().chain(&outer).all(|s| s.energy <= DEGENERATE_ENERGY);
    let center_expected = 2.0 * plan.gamma / (1.0 + plan.gamma);
    let outer_expected = 2.0 * plan.gamma;
    let (center_fit, outer_fit) = if degenerate {
        (None, None)
    } else {
        (
            fit_rate(&center.iter().map(|s| (s.epsilon, s.energy)).collect::<Vec<_>>()).ok(),
            fit_rate(&outer.iter().map(|s| (s.z_prime, s.energy)).collect::<Vec<_>>()).ok(),
        )
    };
    let center_passed = center_fit.is_some_and(|f| f.contains(center_expected, ENERGY_TOLERANCE));
    let outer_passed = outer_fit.is_some_and(|f| f.contains(outer_expected, ENERGY_TOLERANCE));
    let center_bound_ratios = center.iter().map(|s| s.energy / s.epsilon.powf(center_expected)).collect();
    let outer_bound_ratios = outer.iter().map(|s| s.energy / s.z_prime.powf(outer_expected)).collect();
    Ok(EnergyScalingReport {
        component,
        center,
        center_fit,
        center_expected,
        center_passed,
        center_bound_ratios,
        outer_epsilon: eps_min,
        outer,
        outer_fit,
        outer_expected,
        outer_passed,
        outer_bound_ratios,
        degenerate,
        passed: center_passed && outer_passed,
    })
}

/// Default outer-regime points for the energy check.
pub fn default_outer_z_primes() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.4]
}

#[derive(Debug, Clone, Serialize)]
pub struct SeminormCalibration {
    pub epsilon: f64,
    pub z_prime: f64,
    pub radius: f64,
    pub sampled: f64,
    pub brute_force: f64,
    pub fraction: f64,
    pub passed: bool,
}

/// Sampled against exhaustive `[∇ũ_ℓ]_γ` on the neck cell of radius `δ(0)/2`.
pub fn seminorm_calibration(
    plan: &SweepPlan,
    eps: f64,
    pairs: usize,
    grid: usize,
    seed: u64,
) -> Result<SeminormCalibration> {
    let geom = plan.geometry(eps)?;
    let field = AuxiliaryField::new(geom.clone(), plan.data.clone(), plan.dominant_component())?;
    let radius = 0.5 * geom.delta(&[0.0])?;
    let region = LocalRegion::on_midline(&geom, &[0.0], radius)?;
    let f = |x: &[f64]| field.grad_tilde_u_unchecked(x);
    let sampled = holder_seminorm(&f, &region, plan.gamma, pairs, seed)?;
    let brute_force = brute_force_seminorm(&f, &region, plan.gamma, grid, grid)?;
    let fraction = if brute_force == 0.0 { 1.0 } else { sampled / brute_force };
    Ok(SeminormCalibration {
        epsilon: eps,
        z_prime: 0.0,
        radius,
        sampled,
        brute_force,
        fraction,
        passed: fraction >= CALIBRATION_FRACTION,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop21Sweep {
    pub s_fractions: Vec<f64>,
    pub reports: Vec<Prop21Report>,
    /// Fitted constant per `ε`.
    pub constants: Vec<f64>,
    pub ratio: f64,
    /// `(fraction, max/min across ε)` per fraction.
    pub fraction_ratios: Vec<(f64, f64)>,
    /// Ratio over samples whose cell keeps `δ` comparable to `δ(z')`.
    pub comparable_ratio: f64,
    pub calibration: SeminormCalibration,
    pub stable: bool,
    pub passed: bool,
}

/// The seminorm bound on `∇ũ_ℓ` at `z' ∈ {0, ε^{1/(1+γ)}, 0.25}` across the sweep.
pub fn run_prop21_sweep(plan: &SweepPlan, s_fractions: &[f64], config: &Prop21Config) -> Result<Prop21Sweep> {
    plan.validate()?;
    let component = plan.dominant_component();
    let reports = plan
        .epsilons
        .par_iter()
        .map(|&eps| {
            let field = AuxiliaryField::new(plan.geometry(eps)?, plan.data.clone(), component)?;
            let zs = [0.0, eps.powf(1.0 / (1.0 + plan.gamma)), 0.25];
            check_prop21(&field, &zs, s_fractions, config)
        })
        .collect::<Result<Vec<_>>>()?;
    let constants: Vec<f64> = reports.iter().map(|r| r.fitted_c).collect();
    let ratio = stability_ratio(&constants);
    let fraction_ratios = s_fractions
        .iter()
        .map(|&f| {
            let c: Vec<f64> = reports.iter().map(|r| r.fitted_c_for_fraction(f)).collect();
            (f, stability_ratio(&c))
        })
        .collect();
    let comparable: Vec<f64> = reports.iter().map(|r| r.fitted_c_comparable()).collect();
    let comparable_ratio = stability_ratio(&comparable);
    let cal_eps = plan.epsilons[plan.epsilons.len() / 2];
    let calibration = seminorm_calibration(plan, cal_eps, config.pairs, 100, config.seed)?;
    let stable = ratio < STABILITY_FACTOR && constants.iter().all(|c| c.is_finite());
    Ok(Prop21Sweep {
        s_fractions: s_fractions.to_vec(),
        reports,
        constants,
        ratio,
        fraction_ratios,
        comparable_ratio,
        passed: stable && calibration.passed,
        stable,
        calibration,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureSensitivity {
    pub epsilon: f64,
    pub probes: usize,
    pub max_relative_difference: f64,
    pub passed: bool,
}

/// Compares `|∇u|` at the probes with `|x'| ≤ 1/4` between the auxiliary and
/// the natural lateral closure.
pub fn check_lateral_closure(plan: &SweepPlan, eps: f64) -> Result<ClosureSensitivity> {
    let geom = plan.geometry(eps)?;
    let mesh = plan.mesh.build(&geom)?;
    let mut a = plan.clone();
    a.closure = LateralClosure::Auxiliary;
    let mut n = plan.clone();
    n.closure = LateralClosure::Natural;
    let ua = solve_full(&a, &mesh)?;
    let un = solve_full(&n, &mesh)?;
    let probes: Vec<[f64; 2]> = profile_points(&geom, plan.profile_stations, plan.profile_range)
        .into_iter()
        .chain(centerline_points(&geom, plan.centerline_samples))
        .filter(|p| p[0].abs() <= 0.25)
        .collect();
    let mut worst: f64 = 0.0;
    for p in &probes {
        let ga = ua.gradient_norm_at(*p)?;
        let gn = un.gradient_norm_at(*p)?;
        worst = worst.max((ga - gn).abs() / ga.max(f64::MIN_POSITIVE));
    }
    Ok(ClosureSensitivity {
        epsilon: eps,
        probes: probes.len(),
        max_relative_difference: worst,
        passed: worst <= CLOSURE_TOLERANCE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperpositionCheck {
    pub epsilon: f64,
    pub max_difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `‖u - Σ_ℓ v_ℓ‖_∞` at the nodes.
pub fn check_superposition(plan: &SweepPlan, eps: f64) -> Result<SuperpositionCheck> {
    let geom = plan.geometry(eps)?;
    let mesh = plan.mesh.build(&geom)?;
    let (u, parts) = solve_all(&mesh, &plan.coefficients, &plan.data, plan.closure, plan.quadrature)?;
    let sum = DiscreteSolution::sum(&parts)?;
    let max_difference = u.max_nodal_difference(&sum)?;
    let tolerance = 10.0 * SOLVER_TOLERANCE;
    Ok(SuperpositionCheck {
        epsilon: eps,
        max_difference,
        tolerance,
        passed: max_difference <= tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuxiliaryCheck {
    pub samples: usize,
    /// Largest `|∂_n ū - 1/δ(x')| · δ(x')`.
    pub normal_derivative_error: f64,
    /// Largest `|∇ũ_ℓ - FD| / max|∇ũ_ℓ|` over components and samples.
    pub gradient_fd_error: f64,
    pub passed: bool,
}

pub fn check_auxiliary_identities(
    geom: &GapGeometry,
    data: &BoundaryData,
    samples: usize,
    seed: u64,
) -> Result<AuxiliaryCheck> {
    if geom.dim() != 2 {
        return Err(Error::Unsupported("auxiliary identities are checked for n = 2".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let points: Vec<[f64; 2]> = (0..samples)
        .map(|_| {
            let t: f64 = rng.random_range(-0.95..0.95);
            let s: f64 = rng.random_range(0.02..0.98);
            [t, geom.bottom_height(&[t]) + s * geom.delta_unchecked(&[t])]
        })
        .collect();
    let mut normal_derivative_error: f64 = 0.0;
    for x in &points {
        let d = geom.delta(&[x[0]])?;
        let g = grad_bar_u(geom, x)?;
        normal_derivative_error = normal_derivative_error.max((g[1] - 1.0 / d).abs() * d);
    }
    let fields = (0..data.m())
        .map(|l| AuxiliaryField::new(geom.clone(), data.clone(), l))
        .collect::<Result<Vec<_>>>()?;
    let m = data.m();
    let mut gradient_fd_error: f64 = 0.0;
    for f in &fields {
        for x in &points {
            let h = 1e-7 * geom.delta_unchecked(&[x[0]]);
            let g = f.grad_tilde_u(x)?;
            let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if scale == 0.0 {
                continue;
            }
            for k in 0..2 {
                let (mut p, mut q) = (*x, *x);
                p[k] += h;
                q[k] -= h;
                let (fp, fq) = (f.tilde_u_unchecked(&p), f.tilde_u_unchecked(&q));
                for c in 0..m {
                    let fd = (fp[c] - fq[c]) / (2.0 * h);
                    gradient_fd_error = gradient_fd_error.max((fd - g[c * 2 + k]).abs() / scale);
                }
            }
        }
    }
    Ok(AuxiliaryCheck {
        samples,
        normal_derivative_error,
        gradient_fd_error,
        passed: normal_derivative_error <= f64::EPSILON && gradient_fd_error <= 1e-6,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub system: String,
    pub h: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    pub l2_rate: f64,
    pub h1_rate: f64,
    pub passed: bool,
}

type Exact = (fn(&[f64]) -> Vec<f64>, fn(&[f64]) -> Vec<f64>);

fn manufactured_field(m: usize) -> Result<Exact> {
    fn u1(x: &[f64]) -> Vec<f64> {
        vec![(2.0 * x[0]).sin() * x[1].cosh() + x[0] * x[1] * x[1]]
    }
    fn g1(x: &[f64]) -> Vec<f64> {
        vec![
            2.0 * (2.0 * x[0]).cos() * x[1].cosh() + x[1] * x[1],
            (2.0 * x[0]).sin() * x[1].sinh() + 2.0 * x[0] * x[1],
        ]
    }
    fn u2(x: &[f64]) -> Vec<f64> {
        let mut v = u1(x);
        v.push((x[0] + 2.0 * x[1]).cos() + x[0] * x[0] * x[1]);
        v
    }
    fn g2(x: &[f64]) -> Vec<f64> {
        let mut g = g1(x);
        let s = (x[0] + 2.0 * x[1]).sin();
        g.extend([-s + 2.0 * x[0] * x[1], -2.0 * s + x[0] * x[0]]);
        g
    }
    match m {
        1 => Ok((u1, g1)),
        2 => Ok((u2, g2)),
        _ => Err(Error::Unsupported(format!("manufactured fields exist for m = 1, 2, not {m}"))),
    }
}

/// Errors of the Galerkin solution for a smooth `u*` on the flat strip of
/// height 1/2 over `[-1/2, 1/2]`, with `F = A∇u*` and `u*` on the boundary,
/// at `levels` uniform refinements starting from `h = 1/8`.
pub fn manufactured_convergence(cs: &CoefficientSet, levels: usize) -> Result<ConvergenceStudy> {
    if cs.has_lower_order() || cs.n() != 2 {
        return Err(Error::Unsupported("manufactured study uses principal-part systems in 2-D".into()));
    }
    if levels < 3 {
        return Err(Error::config("need at least 3 refinement levels"));
    }
    let (exact, grad) = manufactured_field(cs.m())?;
    let geom = GapGeometry::flat(0.5, 2)?;
    let grading = Grading {
        aspect: 1.0,
        dxmax: 0.125,
        xrange: 0.5,
    };
    let mut mesh = Mesh::generate(&geom, 4, grading)?;
    let rhs = RightHandSide::manufactured(cs, Arc::new(grad));
    let (mut hs, mut l2, mut h1) = (Vec::new(), Vec::new(), Vec::new());
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.refine(2)?;
        }
        let mesh_arc = Arc::new(mesh.clone());
        let system = assemble(&mesh_arc, cs, &rhs, crate::solver::Quadrature::ThreePoint)?;
        let bc = BoundaryAssignment::from_fn(&mesh_arc, cs.m(), exact);
        let sol = solve_dirichlet(system, &bc, SolutionKind::Other)?;
        hs.push(0.125 / f64::powi(2.0, level as i32));
        l2.push(l2_error(&sol, exact));
        h1.push(h1_error(&sol, grad));
    }
    let l2_rate = fit_rate(&hs.iter().copied().zip(l2.iter().copied()).collect::<Vec<_>>())?.slope;
    let h1_rate = fit_rate(&hs.iter().copied().zip(h1.iter().copied()).collect::<Vec<_>>())?.slope;
    Ok(ConvergenceStudy {
        system: cs.kind().to_string(),
        h: hs,
        l2,
        h1,
        l2_rate,
        h1_rate,
        passed: (l2_rate - 2.0).abs() <= RATE_TOLERANCE && (h1_rate - 1.0).abs() <= RATE_TOLERANCE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineCheck {
    pub epsilon: f64,
    pub nodes: usize,
    pub max_error: f64,
    pub seconds: f64,
    pub passed: bool,
}

/// Scalar Laplace with `φ ≡ 1`, `ψ ≡ 0` on the flat strip against the exact
/// affine solution.
pub fn check_affine(eps: f64) -> Result<AffineCheck> {
    let start = Instant::now();
    let geom = GapGeometry::flat(eps, 2)?;
    let exact = exact_affine_case(&geom)?;
    let mesh = Arc::new(Mesh::generate(
        &geom,
        8,
        Grading {
            aspect: 2.0,
            dxmax: 0.02,
            xrange: 1.0,
        },
    )?);
    let data = BoundaryData::constant(vec![1.0], vec![0.0], 1)?;
    let cs = CoefficientSet::identity(1, 2);
    let system = assemble(&mesh, &cs, &RightHandSide::zero(), crate::solver::Quadrature::ThreePoint)?;
    let bc = BoundaryAssignment::from_data(&mesh, &data, LateralClosure::Auxiliary);
    let sol = solve_dirichlet(system, &bc, SolutionKind::Full)?;
    let max_error = mesh
        .vertices()
        .iter()
        .enumerate()
        .fold(0.0f64, |a, (k, v)| a.max((sol.node_value(k)[0] - exact.value(v)).abs()));
    Ok(AffineCheck {
        epsilon: eps,
        nodes: mesh.vertices().len(),
        max_error,
        seconds: start.elapsed().as_secs_f64(),
        passed: max_error <= 1e-10,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub system: String,
    pub nx: usize,
    pub ny: usize,
    pub max_difference: f64,
    pub scale: f64,
    pub relative: f64,
    pub passed: bool,
}

/// Finite elements against finite differences on `[-1/2, 1/2] × [-ε/2, ε/2]`
/// at the interior grid nodes.
pub fn fem_vs_fd(cs: &CoefficientSet, data: &BoundaryData, eps: f64, nx: usize, ny: usize) -> Result<CrossValidation> {
    let geom = GapGeometry::flat(eps, 2)?;
    let fd = finite_difference_reference(&geom, cs, data, 0.5, nx, ny)?;
    let grading = Grading {
        aspect: 1e6,
        dxmax: 1.0 / (nx - 1) as f64,
        xrange: 0.5,
    };
    let mesh = Arc::new(Mesh::generate(&geom, ny - 1, grading)?);
    let system = assemble(&mesh, cs, &RightHandSide::zero(), crate::solver::Quadrature::ThreePoint)?;
    let bc = BoundaryAssignment::from_data(&mesh, data, LateralClosure::Auxiliary);
    let fem = solve_dirichlet(system, &bc, SolutionKind::Full)?;
    let (mut diff, mut scale): (f64, f64) = (0.0, 0.0);
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let v = fem.value_at(fd.point(i, j))?;
            for (a, b) in v.iter().zip(fd.value(i, j)) {
                diff = diff.max((a - b).abs());
                scale = scale.max(b.abs());
            }
        }
    }
    let relative = diff / scale.max(f64::MIN_POSITIVE);
    Ok(CrossValidation {
        system: cs.kind().to_string(),
        nx,
        ny,
        max_difference: diff,
        scale,
        relative,
        passed: relative <= 0.01,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSuiteReport {
    pub affine: AffineCheck,
    pub fd_scalar: Vec<CrossValidation>,
    pub fd_lame: Vec<CrossValidation>,
    pub calibration: SeminormCalibration,
    pub convergence: Vec<ConvergenceStudy>,
    pub passed: bool,
}

/// Data used by the finite-difference cross-checks.
pub fn cross_check_data() -> Result<(BoundaryData, BoundaryData)> {
    let scalar = BoundaryData::polynomial(vec![vec![1.0, 0.0, 1.0]], vec![vec![0.0]], 0.5)?;
    let lame = BoundaryData::polynomial(vec![vec![1.0, 0.0, 1.0], vec![0.0, 0.5]], vec![vec![0.0], vec![0.0]], 0.5)?;
    Ok((scalar, lame))
}

pub fn oracle_suite(seed: u64) -> Result<OracleSuiteReport> {
    let affine = check_affine(0.1)?;
    let (scalar_data, lame_data) = cross_check_data()?;
    let identity = CoefficientSet::identity(1, 2);
    let lame = CoefficientSet::lame(LameParameters::new(1.0, 1.0)?, 2);
    let grids = [(41, 9), (81, 17)];
    let fd_scalar = grids
        .iter()
        .map(|&(nx, ny)| fem_vs_fd(&identity, &scalar_data, 0.2, nx, ny))
        .collect::<Result<Vec<_>>>()?;
    let fd_lame = grids
        .iter()
        .map(|&(nx, ny)| fem_vs_fd(&lame, &lame_data, 0.2, nx, ny))
        .collect::<Result<Vec<_>>>()?;
    let plan = SweepPlan::default();
    let calibration = seminorm_calibration(&plan, 1e-2, 4000, 100, seed)?;
    let convergence = vec![manufactured_convergence(&identity, 4)?, manufactured_convergence(&lame, 4)?];
    let passed = affine.passed
        && fd_scalar.last().is_some_and(|c| c.passed)
        && fd_lame.last().is_some_and(|c| c.passed)
        && calibration.passed
        && convergence.iter().all(|c| c.passed);
    Ok(OracleSuiteReport {
        affine,
        fd_scalar,
        fd_lame,
        calibration,
        convergence,
        passed,
    })
}
