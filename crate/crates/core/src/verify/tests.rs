use super::*;

fn quick_plan() -> SweepPlan {
    SweepPlan {
        epsilons: vec![1e-1, 1e-2, 1e-3],
        mesh: MeshParams {
            layers: 4,
            aspect: 4.0,
            dxmax: 0.05,
            xrange: 1.0,
        },
        energy_mesh: MeshParams {
            layers: 4,
            aspect: 1.0,
            dxmax: 0.05,
            xrange: 1.0,
        },
        centerline_samples: 9,
        profile_stations: 17,
        reliability_gate: false,
        ..SweepPlan::default()
    }
}

#[test]
fn plan_validation() {
    assert!(SweepPlan::default().validate().is_ok());
    let mut p = quick_plan();
    p.epsilons = vec![0.1, 0.01];
    assert!(matches!(p.validate(), Err(Error::Config(_))));
    p.epsilons = vec![0.1, 0.01, 0.01];
    assert!(matches!(p.validate(), Err(Error::Config(_))));
    p.epsilons = vec![0.1, 0.05, -0.01];
    assert!(p.validate().is_err());
    let mut p = quick_plan();
    p.data = BoundaryData::constant(vec![1.0], vec![0.0], 1).unwrap();
    assert!(matches!(p.validate(), Err(Error::Config(_))));
}

#[test]
fn dominant_component_and_probes() {
    let mut p = quick_plan();
    assert_eq!(p.dominant_component(), 0);
    p.data = BoundaryData::constant(vec![0.0, 2.0], vec![0.0, 0.5], 1).unwrap();
    assert_eq!(p.dominant_component(), 1);
    let g = p.geometry(0.1).unwrap();
    let c = centerline_points(&g, 33);
    assert_eq!(c.len(), 33);
    assert!((c[0][1] + 0.045).abs() < 1e-15 && (c[32][1] - 0.045).abs() < 1e-15);
    let prof = profile_points(&g, 65, 0.5);
    assert_eq!(prof[32], [0.0, 0.0]);
    assert_eq!(prof[0][0], -0.5);
}

#[test]
fn quick_sweep_is_deterministic_and_consistent() {
    let p = quick_plan();
    let a = run_sweep(&p).unwrap();
    let b = run_sweep(&p).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.records.len(), 3);
    assert!(a.consistent);
    assert!(a.rho.unwrap() > 0.5);
    for r in &a.records {
        assert!(r.m_center.is_finite() && r.m_center > 0.0);
        assert!(r.c_upper >= r.c_lower.unwrap() * r.jump_center / (r.jump_center + r.epsilon * r.norm_terms));
        assert_eq!(r.profile.len(), 17);
        assert_eq!(r.centerline.len(), 9);
        assert!(r.energy_e0 > 0.0);
    }
    assert!(check_profile(&a).unwrap().constants.iter().all(|c| c.is_finite() && *c > 0.0));
    assert!(check_lower_bound(&a).applicable);
}

#[test]
fn profile_check_detects_injected_blowup() {
    let mut report = run_sweep(&quick_plan()).unwrap();
    assert!(check_profile(&report).unwrap().passed);
    for r in &mut report.records {
        let f = r.epsilon.powf(-0.5);
        for p in &mut r.profile {
            p.grad_norm *= f;
        }
    }
    let c = check_profile(&report).unwrap();
    assert!(!c.passed, "ratio {}", c.ratio);
}

#[test]
fn profile_check_needs_profiles() {
    let mut report = run_sweep(&quick_plan()).unwrap();
    report.records[1].profile.clear();
    assert!(check_profile(&report).is_err());
}

#[test]
fn equal_constant_data_is_degenerate() {
    let mut p = quick_plan();
    p.data = BoundaryData::constant(vec![0.3, -0.2], vec![0.3, -0.2], 1).unwrap();
    let r = run_sweep(&p).unwrap();
    assert!(r.records.iter().all(|r| r.c_lower.is_none()));
    assert!(r.flags.iter().any(|f| f == "degenerate"));
    let lb = check_lower_bound(&r);
    assert!(!lb.applicable);
    assert_eq!(lb.status, "not applicable");
    let e = check_energy_scaling(&p, &[0.0, 0.5, 0.6, 0.7]);
    // the outer cells at these z' leave the unit interval
    assert!(e.is_err());
    let e = check_energy_scaling(&p, &[0.0, 0.3, 0.35, 0.4]).unwrap();
    assert!(e.degenerate);
    assert!(e.center_fit.is_none() && !e.passed);
}

#[test]
fn energy_scaling_argument_checks() {
    let p = quick_plan();
    assert!(matches!(check_energy_scaling(&p, &[0.3, 0.35, 0.4]), Err(Error::Config(_))));
    assert!(matches!(check_energy_scaling(&p, &[0.0, 0.3, 0.4]), Err(Error::Config(_))));
    // ε_min^{2/3} = 0.01
    assert!(matches!(check_energy_scaling(&p, &[0.0, 0.005, 0.3, 0.4]), Err(Error::Config(_))));
}

#[test]
fn empty_report_fields() {
    let mut r = BlowupReport::empty(&quick_plan());
    finish_report(&mut r);
    assert!(r.rho.is_none() && r.fit.is_none());
    assert!(r.flags.is_empty());
    assert!(check_profile(&r).unwrap().constants.is_empty());
}

#[test]
fn stability_ratio_edge_cases() {
    assert_eq!(stability_ratio(&[2.0, 1.0, 4.0]), 4.0);
    assert_eq!(stability_ratio(&[]), f64::INFINITY);
    assert_eq!(stability_ratio(&[1.0, 0.0]), f64::INFINITY);
    assert_eq!(stability_ratio(&[1.0, f64::NAN]), f64::INFINITY);
}

#[test]
fn superposition_on_quick_mesh() {
    let c = check_superposition(&quick_plan(), 0.05).unwrap();
    assert!(c.passed, "{}", c.max_difference);
}

#[test]
fn auxiliary_identities_hold() {
    let p = quick_plan();
    let data = BoundaryData::polynomial(vec![vec![1.0, 0.3, -0.2], vec![0.1]], vec![vec![0.0, 0.0, 0.5], vec![0.4, 1.0]], 0.5)
        .unwrap();
    let c = check_auxiliary_identities(&p.geometry(0.01).unwrap(), &data, 200, 3).unwrap();
    assert!(c.passed, "{c:?}");
}

#[test]
fn affine_oracle_exact() {
    let c = check_affine(0.1).unwrap();
    assert!(c.passed, "{}", c.max_error);
}
