//! Structured layered triangulation of the 2-D gap.
//!
//! Vertices sit on vertical station lines `x' = x_i`; on each station the
//! `layers + 1` vertices split `[bottom(x_i), top(x_i)]` uniformly. Node
//! `(i, k)` has index `i (L + 1) + k`, and the quad between stations `i, i+1`
//! and layers `k, k+1` carries triangles `2q` and `2q + 1`, `q = i L + k`.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::GapGeometry;

/// Barycentric tolerance of point location.
const LOCATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexTag {
    Interior,
    Top,
    Bottom,
    LateralLeft,
    LateralRight,
}

impl VertexTag {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexTag::Interior => "interior",
            VertexTag::Top => "top",
            VertexTag::Bottom => "bottom",
            VertexTag::LateralLeft => "lateral_left",
            VertexTag::LateralRight => "lateral_right",
        }
    }

    pub fn is_boundary(self) -> bool {
        self != VertexTag::Interior
    }
}

/// Station spacing rule `Δx'(x') = min(aspect · δ(x'), dxmax)` on `[-xrange, xrange]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grading {
    pub aspect: f64,
    pub dxmax: f64,
    pub xrange: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Self {
            aspect: 2.0,
            dxmax: 0.02,
            xrange: 1.0,
        }
    }
}

impl Grading {
    fn validate(&self) -> Result<()> {
        if !(self.aspect > 0.0 && self.dxmax > 0.0) {
            return Err(Error::Mesh(format!(
                "grading needs aspect > 0 and dxmax > 0, got {} and {}",
                self.aspect, self.dxmax
            )));
        }
        if !(self.xrange > 0.0 && self.xrange <= 1.0) {
            return Err(Error::Mesh(format!("xrange must lie in (0, 1], got {}", self.xrange)));
        }
        Ok(())
    }

    fn spacing(&self, delta: f64) -> f64 {
        (self.aspect * delta).min(self.dxmax)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    geom: GapGeometry,
    grading: Grading,
    stations: Vec<f64>,
    layers: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<VertexTag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    pub vertices: usize,
    pub triangles: usize,
    pub min_signed_area: f64,
    /// Largest distance of a vertex outside the closed gap.
    pub max_containment_violation: f64,
    /// Largest `|x_n - graph(x')|` over top/bottom vertices.
    pub max_boundary_error: f64,
    pub conforming: bool,
    pub min_quality: f64,
    pub total_area: f64,
    pub exact_area: f64,
    pub area_relative_error: f64,
    pub passed: bool,
}

/// Default quality floor in the mapped frame.
pub const QUALITY_FLOOR: f64 = 0.05;

/// Stations on `[0, end]` (or `[end, 0]`) equidistributed for the spacing
/// density `1 / min(aspect δ, dxmax)`: the integrated density increases by one
/// between consecutive stations.
fn half_stations(geom: &GapGeometry, grading: &Grading, end: f64) -> Vec<f64> {
    let len = end.abs();
    let n = ((20.0 * len / geom.epsilon()).ceil() as usize).max(200_000);
    let h = end / n as f64;
    let density = |x: f64| 1.0 / grading.spacing(geom.delta_unchecked(&[x]));
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut prev = density(0.0);
    for j in 1..=n {
        let cur = density(j as f64 * h);
        let last = *cum.last().unwrap();
        cum.push(last + 0.5 * h.abs() * (prev + cur));
        prev = cur;
    }
    let total = cum[n];
    let count = total.floor() as usize;
    let mut out = vec![0.0];
    let mut j = 0;
    for k in 1..=count {
        let target = k as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let t = (target - cum[j]) / (cum[j + 1] - cum[j]);
        out.push((j as f64 + t) * h);
    }
    // close the range: snap to the end, merging a short final interval
    if total - count as f64 >= 0.5 || out.len() == 1 {
        out.push(end);
    } else {
        *out.last_mut().unwrap() = end;
    }
    out
}

impl Mesh {
    /// Layered mesh graded toward `x' = 0`.
    pub fn generate(geom: &GapGeometry, layers: usize, grading: Grading) -> Result<Self> {
        if geom.dim() != 2 {
            return Err(Error::Unsupported(format!("meshing needs n = 2, got {}", geom.dim())));
        }
        if layers < 4 {
            return Err(Error::Mesh(format!("at least 4 layers required, got {layers}")));
        }
        grading.validate()?;
        let x = grading.xrange;
        let right = half_stations(geom, &grading, x);
        let left = half_stations(geom, &grading, -x);
        let mut stations: Vec<f64> = left.iter().rev().copied().collect();
        stations.extend_from_slice(&right[1..]);
        Self::from_stations(geom, grading, stations, layers)
    }

    fn from_stations(
        geom: &GapGeometry,
        grading: Grading,
        stations: Vec<f64>,
        layers: usize,
    ) -> Result<Self> {
        let ns = stations.len();
        let mut vertices = Vec::with_capacity(ns * (layers + 1));
        let mut tags = Vec::with_capacity(ns * (layers + 1));
        for (i, &xs) in stations.iter().enumerate() {
            let bottom = geom.bottom_height(&[xs]);
            let top = geom.top_height(&[xs]);
            let d = geom.delta_unchecked(&[xs]);
            if !(d > 0.0) {
                return Err(Error::Geometry(format!("gap closes at x' = {xs}: delta = {d:e}")));
            }
            for k in 0..=layers {
                let y = if k == layers {
                    top
                } else {
                    bottom + (k as f64 / layers as f64) * d
                };
                vertices.push([xs, y]);
                tags.push(if k == 0 {
                    VertexTag::Bottom
                } else if k == layers {
                    VertexTag::Top
                } else if i == 0 {
                    VertexTag::LateralLeft
                } else if i == ns - 1 {
                    VertexTag::LateralRight
                } else {
                    VertexTag::Interior
                });
            }
        }
        let node = |i: usize, k: usize| i * (layers + 1) + k;
        let mut triangles = Vec::with_capacity(2 * (ns - 1) * layers);
        for i in 0..ns - 1 {
            for k in 0..layers {
                let (a, b, c, d) = (node(i, k), node(i + 1, k), node(i + 1, k + 1), node(i, k + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mesh = Self {
            geom: geom.clone(),
            grading,
            stations,
            layers,
            vertices,
            triangles,
            tags,
        };
        for t in 0..mesh.triangles.len() {
            let area = mesh.signed_area(t);
            if !(area > 0.0) {
                return Err(Error::SingularElement { index: t, area });
            }
        }
        Ok(mesh)
    }

    /// Uniform refinement: every station interval and every layer is split
    /// into `factor` parts; new vertices are placed on the exact graphs.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor != 2 && factor != 4 {
            return Err(Error::Mesh(format!("refinement factor must be 2 or 4, got {factor}")));
        }
        let mut stations = Vec::with_capacity((self.stations.len() - 1) * factor + 1);
        for w in self.stations.windows(2) {
            for j in 0..factor {
                stations.push(w[0] + (w[1] - w[0]) * (j as f64 / factor as f64));
            }
        }
        stations.push(*self.stations.last().unwrap());
        Self::from_stations(&self.geom, self.grading, stations, self.layers * factor)
    }

    pub fn geometry(&self) -> &GapGeometry {
        &self.geom
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tags(&self) -> &[VertexTag] {
        &self.tags
    }

    pub fn node(&self, station: usize, layer: usize) -> usize {
        station * (self.layers + 1) + layer
    }

    /// Stations with `|x'| < r`.
    pub fn stations_within(&self, r: f64) -> usize {
        self.stations.iter().filter(|x| x.abs() < r).count()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// `2 · inradius / longest edge` after mapping the triangle's column to a
    /// unit-width strip and the local layer height to one.
    pub fn mapped_quality(&self, t: usize) -> f64 {
        let col = t / (2 * self.layers);
        let sx = self.stations[col + 1] - self.stations[col];
        let xm = 0.5 * (self.stations[col + 1] + self.stations[col]);
        let sy = self.geom.delta_unchecked(&[xm]) / self.layers as f64;
        let p: Vec<[f64; 2]> = self.triangles[t]
            .iter()
            .map(|&v| [self.vertices[v][0] / sx, self.vertices[v][1] / sy])
            .collect();
        let edge = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let (e0, e1, e2) = (edge(p[1], p[2]), edge(p[0], p[2]), edge(p[0], p[1]));
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        let inradius = 2.0 * area / (e0 + e1 + e2);
        2.0 * inradius / e0.max(e1).max(e2)
    }

    /// `∫ δ(x') dx'` over the meshed range by composite Simpson.
    pub fn exact_area(&self) -> f64 {
        let (a, b) = (self.stations[0], *self.stations.last().unwrap());
        let n = 200_000;
        let h = (b - a) / n as f64;
        let f = |x: f64| self.geom.delta_unchecked(&[x]);
        let mut s = f(a) + f(b);
        for j in 1..n {
            s += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    pub fn check_invariants(&self, quality_floor: f64) -> MeshReport {
        let min_signed_area = (0..self.triangles.len())
            .map(|t| self.signed_area(t))
            .fold(f64::INFINITY, f64::min);
        let mut containment: f64 = 0.0;
        let mut boundary: f64 = 0.0;
        for (v, tag) in self.vertices.iter().zip(&self.tags) {
            let lo = self.geom.bottom_height(&[v[0]]);
            let hi = self.geom.top_height(&[v[0]]);
            containment = containment
                .max(lo - v[1])
                .max(v[1] - hi)
                .max(v[0].abs() - self.grading.xrange);
            match tag {
                VertexTag::Top => boundary = boundary.max((v[1] - hi).abs()),
                VertexTag::Bottom => boundary = boundary.max((v[1] - lo).abs()),
                _ => {}
            }
        }
        let conforming = self.is_conforming();
        let min_quality = (0..self.triangles.len())
            .map(|t| self.mapped_quality(t))
            .fold(f64::INFINITY, f64::min);
        let total_area = self.total_area();
        let exact_area = self.exact_area();
        let area_relative_error = (total_area - exact_area).abs() / exact_area;
        MeshReport {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            min_signed_area,
            max_containment_violation: containment,
            max_boundary_error: boundary,
            conforming,
            min_quality,
            total_area,
            exact_area,
            area_relative_error,
            passed: min_signed_area > 0.0
                && containment <= 1e-12
                && boundary <= 1e-12
                && conforming
                && min_quality >= quality_floor
                && area_relative_error < 5e-3,
        }
    }

    /// Every edge belongs to one or two triangles; edges with one triangle
    /// join boundary vertices, and their number matches the perimeter.
    fn is_conforming(&self) -> bool {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut boundary_edges = 0;
        for (&(a, b), &count) in &edges {
            match count {
                1 => {
                    if !(self.tags[a].is_boundary() && self.tags[b].is_boundary()) {
                        return false;
                    }
                    boundary_edges += 1;
                }
                2 => {}
                _ => return false,
            }
        }
        boundary_edges == 2 * (self.stations.len() - 1) + 2 * self.layers
    }

    /// Barycentric coordinates of `x` in triangle `t`.
    pub fn barycentric(&self, t: usize, x: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let det = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
        let l1 = ((x[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (x[1] - p[1])) / det;
        let l2 = ((q[0] - p[0]) * (x[1] - p[1]) - (x[0] - p[0]) * (q[1] - p[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Index of the triangle containing `x`; on shared edges and vertices the
    /// lowest index wins.
    pub fn locate(&self, x: [f64; 2]) -> Result<usize> {
        let ns = self.stations.len();
        let outside = || Error::domain(format!("point {x:?} outside the mesh"));
        let (x0, x1) = (self.stations[0], self.stations[ns - 1]);
        let span = x1 - x0;
        if x[0] < x0 - LOCATE_TOL * span || x[0] > x1 + LOCATE_TOL * span {
            return Err(outside());
        }
        let col = self.stations.partition_point(|&s| s <= x[0]).clamp(1, ns - 1) - 1;
        let mut best: Option<usize> = None;
        for c in col.saturating_sub(1)..=(col + 1).min(ns - 2) {
            let (xa, xb) = (self.stations[c], self.stations[c + 1]);
            let t = ((x[0] - xa) / (xb - xa)).clamp(0.0, 1.0);
            let height = |k: usize| {
                let ya = self.vertices[self.node(c, k)][1];
                let yb = self.vertices[self.node(c + 1, k)][1];
                ya + t * (yb - ya)
            };
            let k = (0..self.layers).rev().find(|&k| height(k) <= x[1]).unwrap_or(0);
            for kk in k.saturating_sub(1)..=(k + 1).min(self.layers - 1) {
                let q = c * self.layers + kk;
                for tri in [2 * q, 2 * q + 1] {
                    if best.is_some_and(|b| b <= tri) {
                        continue;
                    }
                    if self.barycentric(tri, x).iter().all(|&l| l >= -LOCATE_TOL) {
                        best = Some(tri);
                    }
                }
            }
        }
        best.ok_or_else(outside)
    }

    /// Plain-text export: `vertices N triangles M`, then `x y tag` rows, then
    /// `i j k` rows.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "vertices {} triangles {}", self.vertices.len(), self.triangles.len())?;
        for (v, tag) in self.vertices.iter().zip(&self.tags) {
            writeln!(out, "{:.16e} {:.16e} {}", v[0], v[1], tag.as_str())?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_grading() -> Grading {
        Grading {
            aspect: 1.0,
            dxmax: 0.25,
            xrange: 1.0,
        }
    }

    #[test]
    fn flat_rectangle_counts() {
        let g = GapGeometry::flat(0.1, 2).unwrap();
        let m = Mesh::generate(&g, 4, flat_grading()).unwrap();
        let ns = m.stations().len();
        assert_eq!(m.triangles().len(), 2 * (ns - 1) * 4);
        assert_eq!(m.vertices().len(), ns * 5);
        assert!(m.check_invariants(QUALITY_FLOOR).passed);
    }

    #[test]
    fn default_mesh_invariants() {
        let g = GapGeometry::symmetric(0.1, 0.5).unwrap();
        let m = Mesh::generate(&g, 8, Grading::default()).unwrap();
        let r = m.check_invariants(QUALITY_FLOOR);
        assert!(r.passed, "{r:?}");
        assert!(m.stations().contains(&0.0));
        assert_eq!(m.stations()[0], -1.0);
        assert_eq!(*m.stations().last().unwrap(), 1.0);
    }

    #[test]
    fn spacing_follows_gap_near_neck() {
        let g = GapGeometry::symmetric(1e-3, 0.5).unwrap();
        let gr = Grading::default();
        let m = Mesh::generate(&g, 4, gr).unwrap();
        let last = m.stations().len() - 2;
        for (i, w) in m.stations().windows(2).enumerate() {
            let outer = if w[0].abs() > w[1].abs() { w[0] } else { w[1] };
            // the closing interval may absorb up to half a spacing
            let slack = if i == 0 || i == last { 1.5 } else { 1.0 };
            let bound = slack * gr.spacing(g.delta(&[outer]).unwrap());
            assert!(w[1] - w[0] <= bound * (1.0 + 1e-6), "{w:?}");
        }
    }

    #[test]
    fn halving_aspect_doubles_neck_stations() {
        let g = GapGeometry::symmetric(1e-3, 0.5).unwrap();
        let r = 1e-3f64.powf(1.0 / 1.5);
        let coarse = Mesh::generate(&g, 4, Grading::default()).unwrap();
        let fine = Mesh::generate(
            &g,
            4,
            Grading {
                aspect: 1.0,
                ..Grading::default()
            },
        )
        .unwrap();
        let (c, f) = (coarse.stations_within(r), fine.stations_within(r));
        assert!(f >= 2 * c - 1 && (f - 1) >= 2 * (c - 1), "coarse {c}, fine {f}");
    }

    #[test]
    fn refinement_counts_and_projection() {
        let g = GapGeometry::symmetric(0.05, 0.5).unwrap();
        let m = Mesh::generate(&g, 4, Grading::default()).unwrap();
        let r = m.refine(2).unwrap();
        assert_eq!(r.triangles().len(), 4 * m.triangles().len());
        let rep = r.check_invariants(QUALITY_FLOOR);
        assert!(rep.passed, "{rep:?}");
        for (v, tag) in r.vertices().iter().zip(r.tags()) {
            if *tag == VertexTag::Top {
                assert!((v[1] - g.top_height(&[v[0]])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn two_halvings_equal_one_quartering() {
        let g = GapGeometry::symmetric(0.05, 0.5).unwrap();
        let m = Mesh::generate(&g, 4, Grading::default()).unwrap();
        let a = m.refine(2).unwrap().refine(2).unwrap();
        let b = m.refine(4).unwrap();
        assert_eq!(a.vertices().len(), b.vertices().len());
        let key = |v: &[f64; 2]| ((v[0] * 1e9).round() as i64, (v[1] * 1e9).round() as i64);
        let mut ka: Vec<_> = a.vertices().iter().map(key).collect();
        let mut kb: Vec<_> = b.vertices().iter().map(key).collect();
        ka.sort_unstable();
        kb.sort_unstable();
        assert_eq!(ka, kb);
        for (p, q) in a.vertices().iter().zip(b.vertices()) {
            assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = GapGeometry::symmetric(0.05, 0.5).unwrap();
        assert!(Mesh::generate(&g, 3, Grading::default()).is_err());
        let g3 = GapGeometry::power(0.05, 0.5, 3, 1.0, -1.0).unwrap();
        assert!(Mesh::generate(&g3, 4, Grading::default()).is_err());
        let m = Mesh::generate(&g, 4, Grading::default()).unwrap();
        assert!(m.refine(3).is_err());
    }

    #[test]
    fn locate_interior_edge_and_outside() {
        let g = GapGeometry::symmetric(0.05, 0.5).unwrap();
        let m = Mesh::generate(&g, 6, Grading::default()).unwrap();
        for t in [0, 17, 301, m.triangles().len() - 1] {
            assert_eq!(m.locate(m.centroid(t)).unwrap(), t);
        }
        // vertex shared by up to six triangles: lowest index
        let v = m.node(m.stations().len() / 2, 3);
        let p = m.vertices()[v];
        let owners: Vec<usize> = (0..m.triangles().len()).filter(|&t| m.triangles()[t].contains(&v)).collect();
        assert_eq!(m.locate(p).unwrap(), owners[0]);
        assert!(m.locate([0.0, 0.2]).is_err());
        assert!(m.locate([1.5, 0.0]).is_err());
    }

    #[test]
    fn export_format() {
        let g = GapGeometry::flat(0.1, 2).unwrap();
        let m = Mesh::generate(&g, 4, flat_grading()).unwrap();
        let mut buf = Vec::new();
        m.export(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            format!("vertices {} triangles {}", m.vertices().len(), m.triangles().len())
        );
        assert!(lines.next().unwrap().ends_with("bottom"));
        assert_eq!(text.lines().count(), 1 + m.vertices().len() + m.triangles().len());
    }
}
