//! Command-line front end: configuration, subcommands and output files.

mod config;
mod output;

pub use config::{Config, KEYS};
pub use output::{
    emit_energy_tables, emit_prop21_table, emit_tables, parse_sweep_csv, profile_file_name, sweep_csv, to_json,
    write_json, SweepRow, SWEEP_HEADER,
};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::coefficients::{check_ellipticity, check_holder, EllipticityCheck, HolderCheck};
use crate::error::{Error, Result};
use crate::geometry::GeometryReport;
use crate::mesh::{MeshReport, QUALITY_FLOOR};
use crate::solver::{solve_all, SOLVER_TOLERANCE};
use crate::verify::{
    centerline_points, check_energy_scaling, check_lower_bound, check_profile, oracle_suite, profile_points,
    run_prop21_sweep, run_sweep, BlowupReport, LowerBoundCheck, ProfileCheck,
};

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "THINGAP_OUT";
pub const DEFAULT_OUT: &str = "thingap-out";

#[derive(Debug, Parser)]
#[command(name = "thingap", version, about = "Gradient blow-up verification in narrow gaps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overridden by THINGAP_OUT).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the gap geometry invariants at `epsilon`.
    ValidateGeometry,
    /// Sample strong ellipticity and the Hölder norm of the coefficients.
    ValidateCoefficients,
    /// Solve once at `epsilon` and write the solution and gradient probes.
    Solve,
    /// Blow-up sweep over `epsilons`.
    Sweep,
    /// Sampled seminorm bound on the auxiliary field across the sweep.
    Prop21,
    /// Local energy exponents of the remainder `w`.
    EnergyScaling,
    /// Exact, finite-difference, seminorm and manufactured-solution references.
    OracleSuite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ValidateGeometry => "validate-geometry",
            Command::ValidateCoefficients => "validate-coefficients",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Prop21 => "prop21",
            Command::EnergyScaling => "energy-scaling",
            Command::OracleSuite => "oracle-suite",
        }
    }
}

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let out = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| cli.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("thingap: {e}");
            return EXIT_CONFIG;
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("thingap: cannot start {threads} threads: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| execute(cli.command, &config, &out)) {
        Ok(true) => {
            println!("{}: PASS ({})", cli.command.name(), out.display());
            EXIT_PASS
        }
        Ok(false) => {
            println!("{}: FAIL ({})", cli.command.name(), out.display());
            EXIT_FAIL
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("thingap: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("thingap: {e}");
            EXIT_FAIL
        }
    }
}

/// Defaults, then the config file, then `--set`, then `--seed`.
pub fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read config `{}`: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    for kv in &cli.set {
        cfg.apply_override(kv)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    Ok(cfg)
}

fn prepare(out: &Path, cfg: &Config) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    Ok(())
}

/// Runs one subcommand; `Ok(true)` when every check passed.
pub fn execute(command: Command, cfg: &Config, out: &Path) -> Result<bool> {
    match command {
        Command::ValidateGeometry => validate_geometry(cfg, out),
        Command::ValidateCoefficients => validate_coefficients(cfg, out),
        Command::Solve => solve(cfg, out),
        Command::Sweep => sweep(cfg, out),
        Command::Prop21 => prop21(cfg, out),
        Command::EnergyScaling => energy_scaling(cfg, out),
        Command::OracleSuite => {
            prepare(out, cfg)?;
            let r = oracle_suite(cfg.u64("seed")?)?;
            write_json(&out.join("oracle.json"), &r)?;
            Ok(r.passed)
        }
    }
}

fn validate_geometry(cfg: &Config, out: &Path) -> Result<bool> {
    let geom = cfg.geometry(cfg.f64("epsilon")?)?;
    prepare(out, cfg)?;
    let r: GeometryReport = geom.check_invariants(cfg.usize("validate.samples")?);
    write_json(&out.join("geometry.json"), &r)?;
    Ok(r.passed)
}

#[derive(Serialize)]
struct CoefficientReport {
    system: String,
    ellipticity: EllipticityCheck,
    holder: HolderCheck,
    passed: bool,
}

fn validate_coefficients(cfg: &Config, out: &Path) -> Result<bool> {
    let cs = cfg.coefficients()?;
    prepare(out, cfg)?;
    let ellipticity = check_ellipticity(&cs, cfg.usize("validate.point_samples")?)?;
    let holder = check_holder(&cs, cfg.usize("validate.pair_samples")?, cfg.u64("seed")?)?;
    let passed = ellipticity.meets_claim && holder.within_claim;
    let r = CoefficientReport {
        system: cs.kind().to_string(),
        ellipticity,
        holder,
        passed,
    };
    write_json(&out.join("coefficients.json"), &r)?;
    Ok(passed)
}

#[derive(Serialize)]
struct SolveReport {
    epsilon: f64,
    mesh: MeshReport,
    residual: f64,
    m_center: f64,
    centerline_sup: f64,
    u_l2: f64,
    superposition_error: f64,
    passed: bool,
}

fn solve(cfg: &Config, out: &Path) -> Result<bool> {
    let eps = cfg.f64("epsilon")?;
    let plan = cfg.plan()?;
    let geom = cfg.geometry(eps)?;
    if geom.dim() != 2 {
        return Err(Error::Unsupported("the solver is 2-D".into()));
    }
    prepare(out, cfg)?;
    let mesh = plan.mesh.build(&geom)?;
    let mesh_report = mesh.check_invariants(QUALITY_FLOOR);
    let (u, parts) = solve_all(&mesh, &plan.coefficients, &plan.data, plan.closure, plan.quadrature)?;
    let superposition_error = u.max_nodal_difference(&crate::solver::DiscreteSolution::sum(&parts)?)?;
    let centre = [0.0, 0.5 * (geom.top_height(&[0.0]) + geom.bottom_height(&[0.0]))];
    let probes: Vec<[f64; 2]> = centerline_points(&geom, plan.centerline_samples)
        .into_iter()
        .chain(profile_points(&geom, plan.profile_stations, plan.profile_range))
        .collect();
    let centerline_sup = centerline_points(&geom, plan.centerline_samples)
        .iter()
        .map(|p| u.gradient_norm_at(*p))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut f = fs::File::create(out.join("mesh.txt"))?;
    mesh.export(&mut f)?;
    let mut f = fs::File::create(out.join("solution.txt"))?;
    u.export(&mut f)?;
    let mut f = fs::File::create(out.join("probes.csv"))?;
    u.export_probes(&probes, &mut f)?;
    let passed = mesh_report.passed && u.residual() <= SOLVER_TOLERANCE;
    let r = SolveReport {
        epsilon: eps,
        residual: u.residual(),
        m_center: u.gradient_norm_at(centre)?,
        centerline_sup,
        u_l2: u.l2_norm(),
        superposition_error,
        mesh: mesh_report,
        passed,
    };
    write_json(&out.join("solve.json"), &r)?;
    Ok(passed)
}

/// `report.json` of the `sweep` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub report: BlowupReport,
    pub profile: ProfileCheck,
    pub lower_bound: LowerBoundCheck,
    /// 1 when the data jump at the neck, 0 otherwise.
    pub rho_expected: f64,
    pub rho_passed: bool,
    pub passed: bool,
}

pub fn sweep_output(report: BlowupReport) -> Result<SweepOutput> {
    let profile = check_profile(&report)?;
    let lower_bound = check_lower_bound(&report);
    let degenerate = report.flags.iter().any(|f| f == "degenerate");
    let rho_expected = if report.records.iter().any(|r| r.jump_center > 0.0) { 1.0 } else { 0.0 };
    let rho_passed = degenerate || report.rho_within(rho_expected);
    let passed = rho_passed
        && report.reliable
        && report.consistent
        && profile.passed
        && (lower_bound.passed || !lower_bound.applicable);
    Ok(SweepOutput {
        report,
        profile,
        lower_bound,
        rho_expected,
        rho_passed,
        passed,
    })
}

fn sweep(cfg: &Config, out: &Path) -> Result<bool> {
    let plan = cfg.plan()?;
    plan.validate()?;
    prepare(out, cfg)?;
    let r = sweep_output(run_sweep(&plan)?)?;
    write_json(&out.join("report.json"), &r)?;
    emit_tables(&r.report, out)?;
    Ok(r.passed)
}

fn prop21(cfg: &Config, out: &Path) -> Result<bool> {
    let plan = cfg.plan()?;
    let (fractions, pcfg) = cfg.prop21()?;
    plan.validate()?;
    prepare(out, cfg)?;
    let r = run_prop21_sweep(&plan, &fractions, &pcfg)?;
    write_json(&out.join("prop21.json"), &r)?;
    emit_prop21_table(&r, out)?;
    Ok(r.passed)
}

fn energy_scaling(cfg: &Config, out: &Path) -> Result<bool> {
    let plan = cfg.plan()?;
    let zs = cfg.f64_list("energy.z_primes")?;
    plan.validate()?;
    prepare(out, cfg)?;
    let r = check_energy_scaling(&plan, &zs)?;
    write_json(&out.join("energy.json"), &r)?;
    emit_energy_tables(&r, out)?;
    Ok(r.passed)
}
