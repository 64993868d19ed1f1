//! P1 finite elements for the weak form
//!
//! ```text
//! ∫ (A^{αβ}_{ij} ∂_β u^j + B^α_{ij} u^j) ∂_α φ^i - C^β_{ij} ∂_β u^j φ^i - D_{ij} u^j φ^i
//!     = ∫ H_i φ^i + F_i^α ∂_α φ^i
//! ```
//!
//! on a layered [`Mesh`], with Dirichlet data on the top and bottom graphs and
//! a selectable closure on the lateral ends.

mod banded;
mod solution;
mod sparse;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

pub use banded::BandedLu;
pub use solution::{h1_error, l2_error, DiscreteSolution, SolutionKind};
pub use sparse::CsrMatrix;

use crate::auxiliary::{tilde_u_total, AuxiliaryField, BoundaryData};
use crate::coefficients::{a_index, b_index, CoefficientSet, FieldFn};
use crate::error::{Error, Result};
use crate::geometry::LocalRegion;
use crate::mesh::{Mesh, VertexTag};

/// Relative residual every accepted solve must reach.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Centroid rule.
    OnePoint,
    /// Edge-interior rule at barycentric `(2/3, 1/6, 1/6)` and permutations.
    #[default]
    ThreePoint,
}

const ONE_POINT: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];
const THREE_POINT: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

impl Quadrature {
    /// Barycentric points with weights summing to one.
    pub fn rule(self) -> &'static [([f64; 3], f64)] {
        match self {
            Quadrature::OnePoint => &ONE_POINT,
            Quadrature::ThreePoint => &THREE_POINT,
        }
    }
}

/// Source terms `H` (an `m`-vector) and `F` (an `m × n` row-major matrix,
/// entry `[i n + α]` is `F_i^α`).
#[derive(Clone, Default)]
pub struct RightHandSide {
    h: Option<FieldFn>,
    f: Option<FieldFn>,
}

impl std::fmt::Debug for RightHandSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RightHandSide")
            .field("h", &self.h.is_some())
            .field("f", &self.f.is_some())
            .finish()
    }
}

impl RightHandSide {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Load `∫ H·φ + ∫ F:∇φ`.
    pub fn new(h: Option<FieldFn>, f: Option<FieldFn>) -> Self {
        Self { h, f }
    }

    /// Sources of the strong form `∂_α(A ∂u + B u) + C ∂u + D u = H - ∂_α F^α`.
    /// Integrating by parts flips both signs relative to [`RightHandSide::new`].
    pub fn from_system(h: Option<FieldFn>, f: Option<FieldFn>) -> Self {
        let neg = |g: FieldFn| -> FieldFn { Arc::new(move |x: &[f64]| g(x).into_iter().map(|v| -v).collect()) };
        Self {
            h: h.map(neg),
            f: f.map(neg),
        }
    }

    /// `F = A ∇u*`, for which `u*` satisfies the weak form of a problem
    /// with only the `A` term. `grad` returns `∇u*` as `m × n` row-major.
    pub fn manufactured(cs: &CoefficientSet, grad: FieldFn) -> Self {
        let cs = cs.clone();
        let (m, n) = (cs.m(), cs.n());
        let f: FieldFn = Arc::new(move |x: &[f64]| {
            let a = cs.a_at(x);
            let g = grad(x);
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                for al in 0..n {
                    let mut s = 0.0;
                    for j in 0..m {
                        for be in 0..n {
                            s += a[a_index(n, m, al, be, i, j)] * g[j * n + be];
                        }
                    }
                    out[i * n + al] = s;
                }
            }
            out
        });
        Self { h: None, f: Some(f) }
    }

    pub fn is_zero(&self) -> bool {
        self.h.is_none() && self.f.is_none()
    }
}

/// Assembled stiffness matrix and load vector. DOF `node · m + component`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    mesh: Arc<Mesh>,
    m: usize,
    matrix: CsrMatrix,
    load: Vec<f64>,
}

impl LinearSystem {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }
}

/// Gradients of the three P1 basis functions and the signed area.
pub(crate) fn basis_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let g = [
        [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
        [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
        [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
    ];
    (g, 0.5 * det)
}

fn triangle_points(mesh: &Mesh, t: usize) -> [[f64; 2]; 3] {
    let tri = mesh.triangles()[t];
    [mesh.vertices()[tri[0]], mesh.vertices()[tri[1]], mesh.vertices()[tri[2]]]
}

fn at_barycentric(p: &[[f64; 2]; 3], l: &[f64; 3]) -> [f64; 2] {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}

/// Element matrix (`3m × 3m`, local DOF `a m + i`) and element load.
fn element(
    p: [[f64; 2]; 3],
    index: usize,
    cs: &CoefficientSet,
    rhs: &RightHandSide,
    quad: Quadrature,
    constant_a: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (cs.m(), 2);
    let (g, area) = basis_gradients(p);
    if !(area > 0.0) {
        return Err(Error::SingularElement { index, area });
    }
    let size = 3 * m;
    let mut ke = vec![0.0; size * size];
    let mut fe = vec![0.0; size];
    for (lam, w) in quad.rule() {
        let x = at_barycentric(&p, lam);
        let wt = w * area;
        let a_owned;
        let a = match constant_a {
            Some(a) => a,
            None => {
                a_owned = cs.a_at(&x);
                &a_owned
            }
        };
        let b = cs.b_fn().map(|f| f(&x));
        let c = cs.c_fn().map(|f| f(&x));
        let d = cs.d_fn().map(|f| f(&x));
        for va in 0..3 {
            for i in 0..m {
                let row = va * m + i;
                for vb in 0..3 {
                    for j in 0..m {
                        let mut s = 0.0;
                        for al in 0..n {
                            for be in 0..n {
                                s += a[a_index(n, m, al, be, i, j)] * g[vb][be] * g[va][al];
                            }
                        }
                        if let Some(b) = &b {
                            for al in 0..n {
                                s += b[b_index(m, al, i, j)] * lam[vb] * g[va][al];
                            }
                        }
                        if let Some(c) = &c {
                            for be in 0..n {
                                s -= c[b_index(m, be, i, j)] * g[vb][be] * lam[va];
                            }
                        }
                        if let Some(d) = &d {
                            s -= d[i * m + j] * lam[vb] * lam[va];
                        }
                        ke[row * size + vb * m + j] += wt * s;
                    }
                }
            }
        }
        if let Some(h) = &rhs.h {
            let hv = h(&x);
            for va in 0..3 {
                for i in 0..m {
                    fe[va * m + i] += wt * hv[i] * lam[va];
                }
            }
        }
        if let Some(f) = &rhs.f {
            let fv = f(&x);
            for va in 0..3 {
                for i in 0..m {
                    fe[va * m + i] += wt * (fv[i * n] * g[va][0] + fv[i * n + 1] * g[va][1]);
                }
            }
        }
    }
    Ok((ke, fe))
}

/// Assembles the weak form over all triangles.
pub fn assemble(
    mesh: &Arc<Mesh>,
    cs: &CoefficientSet,
    rhs: &RightHandSide,
    quad: Quadrature,
) -> Result<LinearSystem> {
    if cs.n() != 2 {
        return Err(Error::Unsupported(format!("the solver is 2-D, coefficients have n = {}", cs.n())));
    }
    let m = cs.m();
    let constant_a = cs.is_constant().then(|| cs.a_at(&[0.0, 0.0]));
    let elements: Vec<(Vec<f64>, Vec<f64>)> = (0..mesh.triangles().len())
        .into_par_iter()
        .map(|t| element(triangle_points(mesh, t), t, cs, rhs, quad, constant_a.as_deref()))
        .collect::<Result<_>>()?;
    let ndof = mesh.vertices().len() * m;
    let size = 3 * m;
    let mut triplets = Vec::with_capacity(elements.len() * size * size);
    let mut load = vec![0.0; ndof];
    for (t, (ke, fe)) in elements.iter().enumerate() {
        let tri = mesh.triangles()[t];
        let dof = |k: usize| tri[k / m] * m + k % m;
        for r in 0..size {
            load[dof(r)] += fe[r];
            for c in 0..size {
                let v = ke[r * size + c];
                if v != 0.0 {
                    triplets.push((dof(r), dof(c), v));
                }
            }
        }
    }
    Ok(LinearSystem {
        mesh: mesh.clone(),
        m,
        matrix: CsrMatrix::from_triplets(ndof, ndof, &triplets),
        load,
    })
}

/// Treatment of the lateral ends `|x'| = xrange`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LateralClosure {
    /// Dirichlet data taken from the auxiliary extension `Σ_ℓ ũ_ℓ`.
    #[default]
    Auxiliary,
    /// No lateral constraint (natural boundary condition).
    Natural,
}

/// Prescribed values per node; `None` leaves the node free.
#[derive(Debug, Clone)]
pub struct BoundaryAssignment {
    m: usize,
    values: Vec<Option<Vec<f64>>>,
}

impl BoundaryAssignment {
    /// Top nodes take `φ`, bottom nodes `ψ`, lateral nodes follow `closure`.
    pub fn from_data(mesh: &Mesh, data: &BoundaryData, closure: LateralClosure) -> Self {
        let geom = mesh.geometry();
        let values = mesh
            .vertices()
            .iter()
            .zip(mesh.tags())
            .map(|(v, tag)| match tag {
                VertexTag::Top => Some(data.phi(&v[..1])),
                VertexTag::Bottom => Some(data.psi(&v[..1])),
                VertexTag::LateralLeft | VertexTag::LateralRight => match closure {
                    LateralClosure::Auxiliary => Some(tilde_u_total(geom, data, v)),
                    LateralClosure::Natural => None,
                },
                VertexTag::Interior => None,
            })
            .collect();
        Self { m: data.m(), values }
    }

    /// `f(x)` on every boundary node.
    pub fn from_fn(mesh: &Mesh, m: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let values = mesh
            .vertices()
            .iter()
            .zip(mesh.tags())
            .map(|(v, tag)| tag.is_boundary().then(|| f(v)))
            .collect();
        Self { m, values }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn value(&self, node: usize) -> Option<&[f64]> {
        self.values[node].as_deref()
    }

    fn same_nodes(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.is_some() == b.is_some())
    }
}

/// The free block of a system factored once for a fixed set of constrained
/// nodes; any number of Dirichlet data sets on those nodes can be solved.
#[derive(Debug)]
pub struct DirichletSolver {
    system: LinearSystem,
    pattern: BoundaryAssignment,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    free_matrix: CsrMatrix,
    lu: BandedLu,
}

impl DirichletSolver {
    pub fn new(system: LinearSystem, pattern: &BoundaryAssignment) -> Result<Self> {
        let m = system.m;
        if pattern.m != m || pattern.values.len() * m != system.load.len() {
            return Err(Error::MeshMismatch("boundary assignment does not match the system".into()));
        }
        let ndof = system.load.len();
        let mut free_index = vec![None; ndof];
        let mut free_dofs = Vec::new();
        for dof in 0..ndof {
            if pattern.values[dof / m].is_none() {
                free_index[dof] = Some(free_dofs.len());
                free_dofs.push(dof);
            }
        }
        let mut trip = Vec::new();
        for (fr, &dof) in free_dofs.iter().enumerate() {
            for (c, v) in system.matrix.row(dof) {
                if let Some(fc) = free_index[c] {
                    trip.push((fr, fc, v));
                }
            }
        }
        let free_matrix = CsrMatrix::from_triplets(free_dofs.len(), free_dofs.len(), &trip);
        let lu = BandedLu::factor(&free_matrix)?;
        Ok(Self {
            system,
            pattern: pattern.clone(),
            free_index,
            free_dofs,
            free_matrix,
            lu,
        })
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    /// Solves with the given Dirichlet values (same constrained nodes as the
    /// pattern) and the system's own load.
    pub fn solve(&self, bc: &BoundaryAssignment, kind: SolutionKind) -> Result<DiscreteSolution> {
        let m = self.system.m;
        if !bc.same_nodes(&self.pattern) || bc.m != m {
            return Err(Error::MeshMismatch("Dirichlet nodes differ from the factored pattern".into()));
        }
        let ndof = self.system.load.len();
        let mut u = vec![0.0; ndof];
        for (node, v) in bc.values.iter().enumerate() {
            if let Some(v) = v {
                u[node * m..(node + 1) * m].copy_from_slice(v);
            }
        }
        let b: Vec<f64> = self
            .free_dofs
            .iter()
            .map(|&dof| {
                let coupled: f64 = self
                    .system
                    .matrix
                    .row(dof)
                    .filter(|(c, _)| self.free_index[*c].is_none())
                    .map(|(c, v)| v * u[c])
                    .sum();
                self.system.load[dof] - coupled
            })
            .collect();
        let mut x = self.lu.solve(&b);
        let mut residual = self.relative_residual(&x, &b);
        if residual > SOLVER_TOLERANCE {
            let ax = self.free_matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = self.lu.solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            residual = self.relative_residual(&x, &b);
        }
        if !(residual <= SOLVER_TOLERANCE) {
            return Err(Error::SolveFailed { residual });
        }
        for (k, &dof) in self.free_dofs.iter().enumerate() {
            u[dof] = x[k];
        }
        Ok(DiscreteSolution::from_nodal(self.system.mesh.clone(), m, u, kind)?.with_residual(residual))
    }

    fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ax = self.free_matrix.mul_vec(x);
        let rn = b.iter().zip(&ax).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if bn == 0.0 {
            rn
        } else {
            rn / bn
        }
    }

    pub fn unknowns(&self) -> usize {
        self.free_dofs.len()
    }
}

/// Assemble-and-solve in one step.
pub fn solve_dirichlet(system: LinearSystem, bc: &BoundaryAssignment, kind: SolutionKind) -> Result<DiscreteSolution> {
    DirichletSolver::new(system, bc)?.solve(bc, kind)
}

/// The component problem: data `φ^{(ℓ)}`, `ψ^{(ℓ)}` in slot `ℓ`, zero elsewhere.
pub fn solve_component(
    mesh: &Arc<Mesh>,
    cs: &CoefficientSet,
    data: &BoundaryData,
    component: usize,
    closure: LateralClosure,
    quad: Quadrature,
) -> Result<DiscreteSolution> {
    if component >= data.m() || data.m() != cs.m() {
        return Err(Error::domain(format!(
            "component {component} invalid for m = {} (coefficients m = {})",
            data.m(),
            cs.m()
        )));
    }
    let system = assemble(mesh, cs, &RightHandSide::zero(), quad)?;
    let bc = BoundaryAssignment::from_data(mesh, &data.single_component(component), closure);
    solve_dirichlet(system, &bc, SolutionKind::Component(component))
}

/// The full problem and every component problem, sharing one factorization.
pub fn solve_all(
    mesh: &Arc<Mesh>,
    cs: &CoefficientSet,
    data: &BoundaryData,
    closure: LateralClosure,
    quad: Quadrature,
) -> Result<(DiscreteSolution, Vec<DiscreteSolution>)> {
    if data.m() != cs.m() {
        return Err(Error::domain("boundary data and coefficients disagree on m"));
    }
    let system = assemble(mesh, cs, &RightHandSide::zero(), quad)?;
    let full_bc = BoundaryAssignment::from_data(mesh, data, closure);
    let solver = DirichletSolver::new(system, &full_bc)?;
    let full = solver.solve(&full_bc, SolutionKind::Full)?;
    let parts = (0..data.m())
        .map(|l| {
            let bc = BoundaryAssignment::from_data(mesh, &data.single_component(l), closure);
            solver.solve(&bc, SolutionKind::Component(l))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((full, parts))
}

/// `w_ℓ = v_ℓ - ũ_ℓ` at the nodes.
pub fn difference_w(v: &DiscreteSolution, field: &AuxiliaryField) -> Result<DiscreteSolution> {
    let l = field.component();
    if v.kind() != SolutionKind::Component(l) {
        return Err(Error::MeshMismatch(format!(
            "expected the solution of component {l}, got {:?}",
            v.kind()
        )));
    }
    let mg = v.mesh().geometry();
    let fg = field.geometry();
    if v.m() != field.m() || mg.epsilon() != fg.epsilon() || mg.gamma() != fg.gamma() {
        return Err(Error::MeshMismatch("solution and auxiliary field live on different gaps".into()));
    }
    let m = v.m();
    let mut values = v.values().to_vec();
    for (node, x) in v.mesh().vertices().iter().enumerate() {
        let aux = field.tilde_u_unchecked(x);
        for i in 0..m {
            values[node * m + i] -= aux[i];
        }
    }
    DiscreteSolution::from_nodal(v.mesh().clone(), m, values, SolutionKind::Difference(l))
}

/// Region average of `Σ_{β,j} A^{αβ}_{ij} ∂_β ũ^{(j)}_ℓ` (an `m × n` matrix),
/// by centroid quadrature over the triangles whose centroid lies in `region`.
pub fn mean_flux(
    field: &AuxiliaryField,
    cs: &CoefficientSet,
    mesh: &Mesh,
    region: &LocalRegion<'_>,
) -> Result<Vec<f64>> {
    let (m, n) = (cs.m(), 2);
    let mut acc = vec![0.0; m * n];
    let mut total = 0.0;
    for t in 0..mesh.triangles().len() {
        let c = mesh.centroid(t);
        if !region.contains(&c) {
            continue;
        }
        let area = mesh.signed_area(t);
        let a = cs.a_at(&c);
        let g = field.grad_tilde_u_unchecked(&c);
        for i in 0..m {
            for al in 0..n {
                let mut s = 0.0;
                for j in 0..m {
                    for be in 0..n {
                        s += a[a_index(n, m, al, be, i, j)] * g[j * n + be];
                    }
                }
                acc[i * n + al] += area * s;
            }
        }
        total += area;
    }
    if total == 0.0 {
        return Err(Error::domain("region contains no triangle centroids"));
    }
    Ok(acc.into_iter().map(|v| v / total).collect())
}
