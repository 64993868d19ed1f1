use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use super::{basis_gradients, triangle_points, Quadrature};
use crate::error::{Error, Result};
use crate::geometry::LocalRegion;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    /// `u` with the full boundary data.
    Full,
    /// `v_ℓ`.
    Component(usize),
    /// `w_ℓ = v_ℓ - ũ_ℓ`.
    Difference(usize),
    /// A nodal interpolant or any other field.
    Other,
}

/// Nodal P1 field with one constant `m × 2` gradient per triangle.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    mesh: Arc<Mesh>,
    m: usize,
    values: Vec<f64>,
    gradients: Vec<f64>,
    kind: SolutionKind,
    residual: f64,
}

impl DiscreteSolution {
    /// Builds the field from nodal values (`node · m + component`).
    pub fn from_nodal(mesh: Arc<Mesh>, m: usize, values: Vec<f64>, kind: SolutionKind) -> Result<Self> {
        if values.len() != mesh.vertices().len() * m {
            return Err(Error::MeshMismatch(format!(
                "{} nodal values for {} vertices and m = {m}",
                values.len(),
                mesh.vertices().len()
            )));
        }
        let mut gradients = vec![0.0; mesh.triangles().len() * m * 2];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let (g, _) = basis_gradients(triangle_points(&mesh, t));
            for i in 0..m {
                for d in 0..2 {
                    gradients[(t * m + i) * 2 + d] = (0..3).map(|a| values[tri[a] * m + i] * g[a][d]).sum();
                }
            }
        }
        Ok(Self {
            mesh,
            m,
            values,
            gradients,
            kind,
            residual: 0.0,
        })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, m: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let values = mesh.vertices().iter().flat_map(|v| f(v)).collect();
        Self::from_nodal(mesh, m, values, SolutionKind::Other)
    }

    pub(crate) fn with_residual(mut self, residual: f64) -> Self {
        self.residual = residual;
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> SolutionKind {
        self.kind
    }

    /// Relative residual of the linear solve (0 for interpolants).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_value(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    /// `m × 2` gradient of triangle `t`, row-major.
    pub fn triangle_gradient(&self, t: usize) -> &[f64] {
        &self.gradients[t * self.m * 2..(t + 1) * self.m * 2]
    }

    /// Gradient at `x`: that of the containing triangle (lowest index on ties).
    pub fn gradient_at(&self, x: [f64; 2]) -> Result<Vec<f64>> {
        let t = self.mesh.locate(x)?;
        Ok(self.triangle_gradient(t).to_vec())
    }

    /// Frobenius norm of the gradient at `x`.
    pub fn gradient_norm_at(&self, x: [f64; 2]) -> Result<f64> {
        Ok(self.gradient_at(x)?.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Value of the P1 field at `x`.
    pub fn value_at(&self, x: [f64; 2]) -> Result<Vec<f64>> {
        let t = self.mesh.locate(x)?;
        let lam = self.mesh.barycentric(t, x);
        Ok(self.value_in(t, &lam))
    }

    fn value_in(&self, t: usize, lam: &[f64; 3]) -> Vec<f64> {
        let tri = self.mesh.triangles()[t];
        (0..self.m)
            .map(|i| (0..3).map(|a| lam[a] * self.values[tri[a] * self.m + i]).sum())
            .collect()
    }

    /// `Σ area · |∇u|²` over triangles whose centroid lies in `region`.
    pub fn energy_on(&self, region: &LocalRegion<'_>) -> f64 {
        (0..self.mesh.triangles().len())
            .filter(|&t| region.contains(&self.mesh.centroid(t)))
            .map(|t| self.triangle_energy(t))
            .sum()
    }

    /// `∫ |∇u|²` over the whole mesh.
    pub fn energy_total(&self) -> f64 {
        (0..self.mesh.triangles().len()).map(|t| self.triangle_energy(t)).sum()
    }

    fn triangle_energy(&self, t: usize) -> f64 {
        self.mesh.signed_area(t) * self.triangle_gradient(t).iter().map(|v| v * v).sum::<f64>()
    }

    /// `‖u‖_{L²}` by the centroid rule.
    pub fn l2_norm(&self) -> f64 {
        let third = [1.0 / 3.0; 3];
        (0..self.mesh.triangles().len())
            .map(|t| {
                let v = self.value_in(t, &third);
                self.mesh.signed_area(t) * v.iter().map(|a| a * a).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest nodal difference to `other` on the same mesh.
    pub fn max_nodal_difference(&self, other: &Self) -> Result<f64> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) || self.m != other.m {
            return Err(Error::MeshMismatch("solutions live on different meshes".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs())))
    }

    /// Nodal sum of several solutions on the same mesh.
    pub fn sum(parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::domain("empty sum"))?;
        let mut values = vec![0.0; first.values.len()];
        for p in parts {
            if !Arc::ptr_eq(&p.mesh, &first.mesh) || p.m != first.m {
                return Err(Error::MeshMismatch("solutions live on different meshes".into()));
            }
            for (a, b) in values.iter_mut().zip(&p.values) {
                *a += b;
            }
        }
        Self::from_nodal(first.mesh.clone(), first.m, values, SolutionKind::Other)
    }

    /// Plain-text export: `vertices N m M`, then one line of `m` values per vertex.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "vertices {} m {}", self.mesh.vertices().len(), self.m)?;
        for node in 0..self.mesh.vertices().len() {
            let row: Vec<String> = self.node_value(node).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// Gradient probes as CSV rows `x,y,comp,dudx,dudy`.
    pub fn export_probes<W: Write>(&self, points: &[[f64; 2]], mut out: W) -> Result<()> {
        writeln!(out, "x,y,comp,dudx,dudy")?;
        for &p in points {
            let g = self.gradient_at(p)?;
            for i in 0..self.m {
                writeln!(
                    out,
                    "{:.16e},{:.16e},{i},{:.16e},{:.16e}",
                    p[0],
                    p[1],
                    g[2 * i],
                    g[2 * i + 1]
                )?;
            }
        }
        Ok(())
    }
}

/// `‖u_h - u*‖_{L²}` with the three-point rule on every triangle.
pub fn l2_error(sol: &DiscreteSolution, exact: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mesh = sol.mesh();
    let mut s = 0.0;
    for t in 0..mesh.triangles().len() {
        let p = triangle_points(mesh, t);
        let area = mesh.signed_area(t);
        for (lam, w) in Quadrature::ThreePoint.rule() {
            let x = super::at_barycentric(&p, lam);
            let uh = sol.value_in(t, lam);
            let ue = exact(&x);
            s += w * area * uh.iter().zip(&ue).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    s.sqrt()
}

/// `‖∇u_h - ∇u*‖_{L²}`; `exact_grad` returns `m × 2` row-major.
pub fn h1_error(sol: &DiscreteSolution, exact_grad: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mesh = sol.mesh();
    let mut s = 0.0;
    for t in 0..mesh.triangles().len() {
        let p = triangle_points(mesh, t);
        let area = mesh.signed_area(t);
        let gh = sol.triangle_gradient(t);
        for (lam, w) in Quadrature::ThreePoint.rule() {
            let x = super::at_barycentric(&p, lam);
            let ge = exact_grad(&x);
            s += w * area * gh.iter().zip(&ge).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    s.sqrt()
}
