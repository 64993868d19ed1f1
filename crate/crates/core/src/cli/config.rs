use std::collections::BTreeMap;

use crate::auxiliary::{BoundaryData, Prop21Config};
use crate::coefficients::{CoefficientSet, LameParameters};
use crate::error::{Error, Result};
use crate::geometry::GapGeometry;
use crate::solver::{LateralClosure, Quadrature};
use crate::verify::{MeshParams, SweepPlan};

/// `(key, default, meaning)`. The defaults reproduce the Lamé blow-up sweep.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("epsilon", "0.01", "gap width for solve and validate-geometry"),
    ("epsilons", "0.1, 0.03, 0.01, 0.003, 0.001", "strictly decreasing sweep widths"),
    ("gamma", "0.5", "Hölder exponent of the boundary profiles"),
    ("dim", "2", "space dimension n"),
    ("profile.kind", "power", "power | flat"),
    ("profile.c1", "1", "top profile amplitude, h1 = c1 |x'|^(1+gamma)"),
    ("profile.c2", "-1", "bottom profile amplitude, h2 = c2 |x'|^(1+gamma)"),
    ("system.kind", "lame", "lame | identity | holder_demo"),
    ("system.lambda1", "1", "Lamé lambda"),
    ("system.mu1", "1", "Lamé mu"),
    ("system.m", "2", "number of components (lame requires m = dim)"),
    ("bc.kind", "constant_jump", "constant_jump | polynomial"),
    ("bc.phi", "1, 0", "top data: values, or per-component coefficients separated by ';'"),
    ("bc.psi", "0, 0", "bottom data, same format as bc.phi"),
    ("mesh.layers", "8", "triangle layers across the gap"),
    ("mesh.aspect", "2", "station spacing relative to the local gap"),
    ("mesh.dxmax", "0.02", "largest station spacing"),
    ("mesh.xrange", "1", "meshed tangential half-width"),
    ("energy_mesh.layers", "16", "layers of the mesh used for local energies"),
    ("energy_mesh.aspect", "0.125", "aspect of the energy mesh"),
    ("energy_mesh.dxmax", "0.005", "dxmax of the energy mesh"),
    ("energy_mesh.xrange", "1", "xrange of the energy mesh"),
    ("energy.z_primes", "0, 0.05, 0.1, 0.2, 0.4", "cell centres for energy-scaling (0 plus outer points)"),
    ("sweep.centerline_samples", "33", "probes on x' = 0"),
    ("sweep.profile_stations", "65", "midline probes"),
    ("sweep.profile_range", "0.5", "midline probes cover [-range, range]"),
    ("sweep.reliability_gate", "true", "re-solve on a refined mesh and flag > 10% changes"),
    ("solver.closure", "auxiliary", "auxiliary | natural lateral closure"),
    ("solver.quadrature", "three_point", "one_point | three_point"),
    ("prop21.s_fractions", "0.25, 0.5, 1.0", "cell radii as fractions of delta(z')"),
    ("prop21.pairs", "4000", "sampled point pairs per seminorm"),
    ("prop21.hyp_c", "1", "largest admissible s / delta(z')"),
    ("validate.samples", "1000", "geometry invariant samples"),
    ("validate.point_samples", "10000", "ellipticity sample points"),
    ("validate.pair_samples", "10000", "Hölder sample pairs"),
    ("seed", "0", "random seed"),
];

/// Flat `key = value` configuration; `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<&'static str, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (*k, v.to_string())).collect(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (k, _, _) = KEYS
            .iter()
            .find(|(k, _, _)| *k == key)
            .ok_or_else(|| Error::config(format!("unknown key `{key}`")))?;
        self.values.insert(k, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    /// Every key with its effective value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, _, _) in KEYS {
            s.push_str(&format!("{k} = {}\n", self.get(k)));
        }
        s
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)
            .parse()
            .map_err(|_| Error::config(format!("`{key}` has invalid value `{}`", self.get(key))))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.parse_as(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse_as(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse_as(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.parse_as(key)
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(self.get(key)).map_err(|_| Error::config(format!("`{key}` is not a list of numbers")))
    }

    fn amplitudes(&self) -> Result<(f64, f64)> {
        match self.get("profile.kind") {
            "power" => Ok((self.f64("profile.c1")?, self.f64("profile.c2")?)),
            "flat" => Ok((0.0, 0.0)),
            other => Err(Error::config(format!("profile.kind `{other}` is not power or flat"))),
        }
    }

    pub fn geometry(&self, eps: f64) -> Result<GapGeometry> {
        let (c1, c2) = self.amplitudes()?;
        if self.get("profile.kind") == "flat" {
            return GapGeometry::flat(eps, self.usize("dim")?).map_err(as_config);
        }
        GapGeometry::power(eps, self.f64("gamma")?, self.usize("dim")?, c1, c2).map_err(as_config)
    }

    pub fn coefficients(&self) -> Result<CoefficientSet> {
        let n = self.usize("dim")?;
        let m = self.usize("system.m")?;
        match self.get("system.kind") {
            "lame" => {
                if m != n {
                    return Err(Error::config(format!("lame needs system.m = dim, got {m} and {n}")));
                }
                let p = LameParameters::new(self.f64("system.lambda1")?, self.f64("system.mu1")?).map_err(as_config)?;
                Ok(CoefficientSet::lame(p, n))
            }
            "identity" => Ok(CoefficientSet::identity(m, n)),
            "holder_demo" => Ok(CoefficientSet::holder_demo(m, n, self.f64("gamma")?)),
            "custom" => Err(Error::config("system.kind = custom is only available through the library API")),
            other => Err(Error::config(format!("unknown system.kind `{other}`"))),
        }
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        let dim_t = self.usize("dim")?.saturating_sub(1);
        match self.get("bc.kind") {
            "constant_jump" => BoundaryData::constant(self.f64_list("bc.phi")?, self.f64_list("bc.psi")?, dim_t)
                .map_err(as_config),
            "polynomial" => {
                let comps = |key: &str| -> Result<Vec<Vec<f64>>> {
                    self.get(key)
                        .split(';')
                        .map(|c| parse_list(c).map_err(|_| Error::config(format!("`{key}` is not a polynomial list"))))
                        .collect()
                };
                BoundaryData::polynomial(comps("bc.phi")?, comps("bc.psi")?, self.f64("gamma")?).map_err(as_config)
            }
            "custom" => Err(Error::config("bc.kind = custom is only available through the library API")),
            other => Err(Error::config(format!("unknown bc.kind `{other}`"))),
        }
    }

    fn mesh_params(&self, prefix: &str) -> Result<MeshParams> {
        Ok(MeshParams {
            layers: self.usize(&format!("{prefix}.layers"))?,
            aspect: self.f64(&format!("{prefix}.aspect"))?,
            dxmax: self.f64(&format!("{prefix}.dxmax"))?,
            xrange: self.f64(&format!("{prefix}.xrange"))?,
        })
    }

    pub fn plan(&self) -> Result<SweepPlan> {
        let (c1, c2) = self.amplitudes()?;
        let closure = match self.get("solver.closure") {
            "auxiliary" => LateralClosure::Auxiliary,
            "natural" => LateralClosure::Natural,
            other => return Err(Error::config(format!("unknown solver.closure `{other}`"))),
        };
        let quadrature = match self.get("solver.quadrature") {
            "one_point" => Quadrature::OnePoint,
            "three_point" => Quadrature::ThreePoint,
            other => return Err(Error::config(format!("unknown solver.quadrature `{other}`"))),
        };
        let plan = SweepPlan {
            epsilons: self.f64_list("epsilons")?,
            gamma: self.f64("gamma")?,
            c1,
            c2,
            coefficients: self.coefficients()?,
            data: self.boundary_data()?,
            mesh: self.mesh_params("mesh")?,
            energy_mesh: self.mesh_params("energy_mesh")?,
            centerline_samples: self.usize("sweep.centerline_samples")?,
            profile_stations: self.usize("sweep.profile_stations")?,
            profile_range: self.f64("sweep.profile_range")?,
            closure,
            quadrature,
            reliability_gate: self.bool("sweep.reliability_gate")?,
            seed: self.u64("seed")?,
        };
        Ok(plan)
    }

    pub fn prop21(&self) -> Result<(Vec<f64>, Prop21Config)> {
        Ok((
            self.f64_list("prop21.s_fractions")?,
            Prop21Config {
                hyp_c: self.f64("prop21.hyp_c")?,
                pairs: self.usize("prop21.pairs")?,
                seed: self.u64("seed")?,
            },
        ))
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(',').map(|v| v.trim().parse::<f64>()).collect()
}

/// Invalid values coming from a config file are configuration errors.
fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}
