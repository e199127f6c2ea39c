//! Degree-of-freedom layouts and local projector matrices for the three
//! discrete spaces: the Stokes-like velocity space, discontinuous polynomial
//! pressures, and the nodal magnetic space.
//!
//! Degrees k = 1 and k = 2 are supported. For both, every edge carries one
//! internal node (the midpoint, i.e. the internal Gauss–Lobatto node of the
//! 3-point rule): the velocity trace degree is `k̂ = max(2, k)` and the
//! magnetic trace degree is `k`.

mod element;

pub use element::{ElementSpaces, SpaceProjectors};

use crate::la::LaError;
use crate::mesh::{element_geometry, MeshError, Point2, PolygonalMesh};
use crate::poly::{poly_dim, PolyError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpacesError {
    #[error("unsupported polynomial degree k = {0} (supported: 1, 2)")]
    UnsupportedDegree(usize),
    #[error("element {cell} produced a singular local system: {source}")]
    ElementQuality { cell: usize, source: LaError },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Velocity,
    Pressure,
    Magnetic,
}

/// What a global degree of freedom measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofDescriptor {
    /// field component value at a mesh vertex
    VertexValue { vertex: usize, comp: u8 },
    /// field component value at an internal edge node
    EdgePoint { edge: usize, comp: u8 },
    /// magnetic interior moment `(1/|E|) ∫ m · e_c m_s`
    InteriorMoment { cell: usize, comp: u8, mono: usize },
    /// velocity divergence moment `(h_E/|E|) ∫ (div v) m_α`, α non-constant
    DivergenceMoment { cell: usize, mono: usize },
    /// pressure coefficient against the scaled monomial `m_α` on a cell
    PressureCoeff { cell: usize, mono: usize },
}

/// Global dof layout of one discrete space on a mesh.
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub kind: SpaceKind,
    pub k: usize,
    pub n_dofs: usize,
    /// per cell: local dof index -> global dof index
    pub cell_dofs: Vec<Vec<usize>>,
    pub descriptors: Vec<DofDescriptor>,
}

impl DofLayout {
    pub fn gather(&self, cell: usize, global: &[f64]) -> Vec<f64> {
        self.cell_dofs[cell].iter().map(|&g| global[g]).collect()
    }

    pub fn scatter_add(&self, cell: usize, local: &[f64], global: &mut [f64]) {
        for (&g, &v) in self.cell_dofs[cell].iter().zip(local) {
            global[g] += v;
        }
    }
}

/// Build the global dof layout for a space of degree `k` on `mesh`.
///
/// Velocity, per cell: 2 values per vertex, 2 per edge midpoint, and (k = 2)
/// the `dim(ℙ_{k-1}/ℝ)` divergence moments. The interior `𝒢_{k-2}^⊕` moments
/// are an empty set for k ≤ 2. Magnetic, per cell: 2 per vertex, 2 per edge
/// midpoint when k = 2, and `2 dim ℙ_{k-2}` interior moments. Pressure:
/// `dim ℙ_{k-1}` coefficients per cell, discontinuous.
pub fn build_layout(
    mesh: &PolygonalMesh,
    kind: SpaceKind,
    k: usize,
) -> Result<DofLayout, SpacesError> {
    if !(1..=2).contains(&k) {
        return Err(SpacesError::UnsupportedDegree(k));
    }
    let nv = mesh.n_vertices();
    let ne = mesh.n_edges();
    let nc = mesh.n_cells();

    let mut descriptors = Vec::new();
    let mut cell_dofs = vec![Vec::new(); nc];

    match kind {
        SpaceKind::Velocity | SpaceKind::Magnetic => {
            let edge_nodes = match kind {
                SpaceKind::Velocity => 1,          // k̂ - 1 with k̂ = max(2, k)
                SpaceKind::Magnetic => k - 1,      // 0 for k = 1
                SpaceKind::Pressure => unreachable!(),
            };
            for v in 0..nv {
                for comp in 0..2u8 {
                    descriptors.push(DofDescriptor::VertexValue { vertex: v, comp });
                }
            }
            let edge_base = 2 * nv;
            if edge_nodes == 1 {
                for e in 0..ne {
                    for comp in 0..2u8 {
                        descriptors.push(DofDescriptor::EdgePoint { edge: e, comp });
                    }
                }
            }
            let cell_base = descriptors.len();
            let per_cell = match kind {
                SpaceKind::Velocity => {
                    if k == 2 {
                        for c in 0..nc {
                            for mono in 1..poly_dim(k - 1) {
                                descriptors.push(DofDescriptor::DivergenceMoment { cell: c, mono });
                            }
                        }
                        poly_dim(k - 1) - 1
                    } else {
                        0
                    }
                }
                SpaceKind::Magnetic => {
                    if k == 2 {
                        for c in 0..nc {
                            for comp in 0..2u8 {
                                for mono in 0..poly_dim(k - 2) {
                                    descriptors.push(DofDescriptor::InteriorMoment { cell: c, comp, mono });
                                }
                            }
                        }
                        2 * poly_dim(k - 2)
                    } else {
                        0
                    }
                }
                SpaceKind::Pressure => unreachable!(),
            };
            for (c, slot) in cell_dofs.iter_mut().enumerate() {
                let loop_ = mesh.cell(c);
                let m = loop_.len();
                let mut dofs = Vec::with_capacity(4 * m + per_cell);
                for &v in loop_ {
                    dofs.push(2 * v);
                    dofs.push(2 * v + 1);
                }
                if edge_nodes == 1 {
                    for &e in mesh.cell_edge_ids(c) {
                        dofs.push(edge_base + 2 * e);
                        dofs.push(edge_base + 2 * e + 1);
                    }
                }
                for t in 0..per_cell {
                    dofs.push(cell_base + per_cell * c + t);
                }
                *slot = dofs;
            }
        }
        SpaceKind::Pressure => {
            let np = poly_dim(k - 1);
            for (c, slot) in cell_dofs.iter_mut().enumerate() {
                for mono in 0..np {
                    descriptors.push(DofDescriptor::PressureCoeff { cell: c, mono });
                }
                *slot = (np * c..np * (c + 1)).collect();
            }
        }
    }

    Ok(DofLayout { kind, k, n_dofs: descriptors.len(), cell_dofs, descriptors })
}

/// Global coefficient vector for one field.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector(pub Vec<f64>);

impl DofVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `self + s · other`
    pub fn axpy(&mut self, s: f64, other: &DofVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    /// `a · x + b · y`
    pub fn lin_comb(a: f64, x: &DofVector, b: f64, y: &DofVector) -> DofVector {
        DofVector(x.0.iter().zip(&y.0).map(|(xi, yi)| a * xi + b * yi).collect())
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Deref for DofVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for DofVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Everything the discrete operators need on one mesh: the three layouts and
/// the per-element projector matrices. Immutable once built.
#[derive(Debug)]
pub struct Discretization {
    mesh: PolygonalMesh,
    pub k: usize,
    pub velocity: DofLayout,
    pub magnetic: DofLayout,
    pub pressure: DofLayout,
    pub elements: Vec<ElementSpaces>,
}

impl Discretization {
    pub fn build(mesh: PolygonalMesh, k: usize) -> Result<Self, SpacesError> {
        if !(1..=2).contains(&k) {
            return Err(SpacesError::UnsupportedDegree(k));
        }
        let velocity = build_layout(&mesh, SpaceKind::Velocity, k)?;
        let magnetic = build_layout(&mesh, SpaceKind::Magnetic, k)?;
        let pressure = build_layout(&mesh, SpaceKind::Pressure, k)?;
        let mut elements = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            elements.push(ElementSpaces::build(&mesh, c, k)?);
        }
        Ok(Self { mesh, k, velocity, magnetic, pressure, elements })
    }

    pub fn mesh(&self) -> &PolygonalMesh {
        &self.mesh
    }

    pub fn layout(&self, kind: SpaceKind) -> &DofLayout {
        match kind {
            SpaceKind::Velocity => &self.velocity,
            SpaceKind::Magnetic => &self.magnetic,
            SpaceKind::Pressure => &self.pressure,
        }
    }

    /// Interpolate a smooth vector field into the velocity or magnetic dofs:
    /// point values at vertices and edge midpoints, moment dofs by quadrature.
    pub fn interpolate(
        &self,
        kind: SpaceKind,
        mut f: impl FnMut(Point2) -> (f64, f64),
    ) -> DofVector {
        let layout = self.layout(kind);
        let mut out = vec![0.0; layout.n_dofs];
        for (g, desc) in layout.descriptors.iter().enumerate() {
            match *desc {
                DofDescriptor::VertexValue { vertex, comp } => {
                    let val = f(self.mesh.vertex(vertex));
                    out[g] = if comp == 0 { val.0 } else { val.1 };
                }
                DofDescriptor::EdgePoint { edge, comp } => {
                    let e = self.mesh.edge(edge);
                    let (p, q) = (self.mesh.vertex(e.a), self.mesh.vertex(e.b));
                    let mid = Point2::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
                    let val = f(mid);
                    out[g] = if comp == 0 { val.0 } else { val.1 };
                }
                DofDescriptor::InteriorMoment { cell, comp, mono } => {
                    let el = &self.elements[cell];
                    let low = el.basis.with_degree(self.k - 2);
                    let mut s = 0.0;
                    for (&p, &w) in el.quad.points.iter().zip(&el.quad.weights) {
                        let val = f(p);
                        let v = if comp == 0 { val.0 } else { val.1 };
                        s += w * v * low.eval_all(p)[mono];
                    }
                    out[g] = s / el.geom.area;
                }
                DofDescriptor::DivergenceMoment { cell, mono } => {
                    // (h/|E|) ∫ (div f) m_α = (h/|E|) [ -∫ f·∇m_α + ∮ m_α f·n ]
                    let el = &self.elements[cell];
                    let low = el.basis.with_degree(self.k - 1);
                    let mut s = 0.0;
                    for (&p, &w) in el.quad.points.iter().zip(&el.quad.weights) {
                        let val = f(p);
                        let g_m = low.eval_grad_all(p)[mono];
                        s -= w * (val.0 * g_m.0 + val.1 * g_m.1);
                    }
                    let pts = self.mesh.cell_points(cell);
                    let n = pts.len();
                    for e in 0..n {
                        let rule = crate::poly::edge_quadrature(pts[e], pts[(e + 1) % n], 6);
                        let nrm = el.geom.edge_normals[e];
                        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
                            let val = f(p);
                            s += w * low.eval_all(p)[mono] * (val.0 * nrm.0 + val.1 * nrm.1);
                        }
                    }
                    out[g] = s * el.geom.diameter / el.geom.area;
                }
                DofDescriptor::PressureCoeff { .. } => unreachable!("vector interpolation"),
            }
        }
        DofVector(out)
    }

    /// L²-project a scalar field into the pressure space, cell by cell.
    pub fn interpolate_pressure(&self, mut f: impl FnMut(Point2) -> f64) -> DofVector {
        let np = poly_dim(self.k - 1);
        let mut out = vec![0.0; self.pressure.n_dofs];
        for (c, el) in self.elements.iter().enumerate() {
            let low = el.basis.with_degree(self.k - 1);
            let mut rhs = vec![0.0; np];
            for (&p, &w) in el.quad.points.iter().zip(&el.quad.weights) {
                let fv = f(p);
                for (r, m) in rhs.iter_mut().zip(low.eval_all(p)) {
                    *r += w * fv * m;
                }
            }
            let coeffs = el.mass_km1.solve_vec(&rhs).expect("pressure mass is SPD");
            out[np * c..np * (c + 1)].copy_from_slice(&coeffs);
        }
        DofVector(out)
    }

    /// Coefficients (in the degree k-1 scaled monomial basis of the cell) of
    /// `div v_h` on one cell, exact by construction.
    pub fn divergence_poly(&self, cell: usize, u: &DofVector) -> Vec<f64> {
        let local = self.velocity.gather(cell, u);
        self.elements[cell].velocity.div.matvec(&local)
    }

    /// `sqrt(Σ_E ‖div u_h‖²_{0,E})`.
    pub fn divergence_l2(&self, u: &DofVector) -> f64 {
        let mut total = 0.0;
        for c in 0..self.mesh.n_cells() {
            let d = self.divergence_poly(c, u);
            let md = self.elements[c].mass_km1.matvec(&d);
            total += d.iter().zip(&md).map(|(a, b)| a * b).sum::<f64>();
        }
        total.max(0.0).sqrt()
    }
}

/// Geometry sanity used by generators and tests.
pub fn check_cell_geometry(mesh: &PolygonalMesh) -> Result<(), MeshError> {
    for c in 0..mesh.n_cells() {
        element_geometry(mesh, c)?;
    }
    Ok(())
}
