//! Per-element projector matrices.
//!
//! Everything a virtual element computation needs is assembled here from dof
//! data alone: the H¹-seminorm projector `Π_k^∇`, the L² projector `Π_k^0`,
//! projected derivatives (gradient for the velocity space, curl and
//! divergence for the magnetic space), the exact divergence polynomial of
//! velocity fields, and the dof values of polynomials (for the dof-dof
//! stabilizer).
//!
//! The right-hand sides all reduce to edge integrals of the known boundary
//! traces plus interior moments carried by the dofs:
//!
//! * `(∇v, ∇q)_E = ∮ v·(∇q n) - (v, Δq)_E`, with `Δq ∈ [ℙ_{k-2}]²`;
//! * `(v, ∇p)_E = -(div v, p)_E + ∮ p (v·n)` for the velocity space, whose
//!   divergence is an exactly known ℙ_{k-1} polynomial;
//! * `(v, g^⊕)_E = (Π_k^∇ v, g^⊕)_E` for the enhancement directions;
//! * `(m, q)_E` for low-degree `q` directly from the magnetic moment dofs,
//!   higher degrees again via the enhancement property.

use crate::la::DMat;
use crate::mesh::{element_geometry, ElementGeometry, MeshError, Point2, PolygonalMesh};
use crate::poly::{
    divergence, edge_quadrature, exponent_index, gradient, polygon_quadrature, poly_dim,
    MonomialBasis, Quadrature, VectorBasisKind, VectorPolyBasis,
};

use super::SpacesError;

const EDGE_QUAD_ORDER: usize = 8;

/// Projector matrices of one discrete space on one element. All matrices act
/// on the local dof vector; polynomial outputs are coefficient vectors in the
/// element's scaled monomial bases.
#[derive(Debug, Clone)]
pub struct SpaceProjectors {
    pub n_dofs: usize,
    /// `Π_k^∇`: 2·dim ℙ_k × n
    pub pi_nabla: DMat,
    /// `Π_k^0`: 2·dim ℙ_k × n
    pub pi0: DMat,
    /// velocity only: `Π_{k-1}^0 ∇v` with row blocks `∂₁v₁, ∂₂v₁, ∂₁v₂, ∂₂v₂`
    pub grad: Option<DMat>,
    /// magnetic only: `Π_{k-1}^0 curl`
    pub curl: Option<DMat>,
    /// velocity: exact `div v_h ∈ ℙ_{k-1}`; magnetic: `Π_{k-1}^0 div`
    pub div: DMat,
    /// dof values of the `[ℙ_k]²` monomial basis members: n × 2·dim ℙ_k
    pub dof_of_poly: DMat,
}

/// Per-element bundle: geometry, quadrature, Gram matrices and the projectors
/// of both vector-valued spaces.
#[derive(Debug, Clone)]
pub struct ElementSpaces {
    pub cell: usize,
    pub geom: ElementGeometry,
    /// scaled monomial basis of degree k (centroid / diameter scaling)
    pub basis: MonomialBasis,
    /// polygon rule of order 2k+4, shared by all consistency integrals
    pub quad: Quadrature,
    /// scalar mass matrices `(m_i, m_j)_E`
    pub mass_k: DMat,
    pub mass_km1: DMat,
    /// `[ℙ_k]²` mass (block diagonal) and stiffness `(∇q_i : ∇q_j)_E`
    pub vmass: DMat,
    pub vstiff: DMat,
    pub velocity: SpaceProjectors,
    pub magnetic: SpaceProjectors,
}

/// Trace bookkeeping: node parameters on each loop edge and the local dofs
/// carrying the nodal values, per component.
struct Traces {
    rules: Vec<Quadrature>,
    params: Vec<Vec<f64>>,
    nodes_t: Vec<f64>,
    node_dofs: Vec<Vec<[usize; 2]>>,
}

impl Traces {
    /// `nodes_t` must list the endpoints first: `[0, 1]` or `[0, 1, 0.5]`.
    fn build(pts: &[Point2], nodes_t: Vec<f64>, edge_dof_base: usize) -> Self {
        let nv = pts.len();
        let mut rules = Vec::with_capacity(nv);
        let mut params = Vec::with_capacity(nv);
        let mut node_dofs = Vec::with_capacity(nv);
        for e in 0..nv {
            let p = pts[e];
            let q = pts[(e + 1) % nv];
            let rule = edge_quadrature(p, q, EDGE_QUAD_ORDER);
            let len = p.dist(q);
            params.push(rule.points.iter().map(|x| p.dist(*x) / len).collect());
            rules.push(rule);
            let mut nd = vec![
                [2 * e, 2 * e + 1],
                [2 * ((e + 1) % nv), 2 * ((e + 1) % nv) + 1],
            ];
            if nodes_t.len() == 3 {
                nd.push([edge_dof_base + 2 * e, edge_dof_base + 2 * e + 1]);
            }
            node_dofs.push(nd);
        }
        Self { rules, params, nodes_t, node_dofs }
    }
}

fn lagrange_at(nodes: &[f64], t: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let mut v = 1.0;
            for j in 0..n {
                if j != i {
                    v *= (t - nodes[j]) / (nodes[i] - nodes[j]);
                }
            }
            v
        })
        .collect()
}

/// Accumulate `out[row, dof] += ∮ (coef_x v_x + coef_y v_y) ds` over the
/// whole boundary, where the closure yields `(row, coef_x, coef_y)` terms at
/// each quadrature point of each loop edge.
fn accumulate_boundary(
    out: &mut DMat,
    traces: &Traces,
    mut integrand: impl FnMut(usize, Point2, &mut Vec<(usize, f64, f64)>),
) {
    let mut terms: Vec<(usize, f64, f64)> = Vec::new();
    for e in 0..traces.rules.len() {
        let rule = &traces.rules[e];
        for (qi, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let lag = lagrange_at(&traces.nodes_t, traces.params[e][qi]);
            terms.clear();
            integrand(e, p, &mut terms);
            for &(row, cx, cy) in &terms {
                for (node, &l) in lag.iter().enumerate() {
                    let [dx, dy] = traces.node_dofs[e][node];
                    out[(row, dx)] += w * l * cx;
                    out[(row, dy)] += w * l * cy;
                }
            }
        }
    }
}

fn scalar_mixed_gram(quad: &Quadrature, basis: &MonomialBasis, da: usize, db: usize) -> DMat {
    let ba = basis.with_degree(da);
    let bb = basis.with_degree(db);
    let (na, nb) = (poly_dim(da), poly_dim(db));
    let mut out = DMat::zeros(na, nb);
    for (&p, &w) in quad.points.iter().zip(&quad.weights) {
        let va = ba.eval_all(p);
        let vb = bb.eval_all(p);
        for i in 0..na {
            let wi = w * va[i];
            for j in 0..nb {
                out[(i, j)] += wi * vb[j];
            }
        }
    }
    out
}

fn scalar_stiffness(quad: &Quadrature, basis: &MonomialBasis) -> DMat {
    let n = basis.dim();
    let mut out = DMat::zeros(n, n);
    for (&p, &w) in quad.points.iter().zip(&quad.weights) {
        let g = basis.eval_grad_all(p);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += w * (g[i].0 * g[j].0 + g[i].1 * g[j].1);
            }
        }
    }
    out
}

fn block_diag2(m: &DMat) -> DMat {
    let n = m.nrows();
    let mut out = DMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = m[(i, j)];
            out[(n + i, n + j)] = m[(i, j)];
        }
    }
    out
}

/// Boundary integrals `∮ m_l ds` of the degree-k scalar monomials.
fn monomial_boundary_integrals(pts: &[Point2], basis: &MonomialBasis) -> Vec<f64> {
    let nv = pts.len();
    let mut out = vec![0.0; basis.dim()];
    for e in 0..nv {
        let rule = edge_quadrature(pts[e], pts[(e + 1) % nv], EDGE_QUAD_ORDER);
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            for (o, m) in out.iter_mut().zip(basis.eval_all(p)) {
                *o += w * m;
            }
        }
    }
    out
}

impl ElementSpaces {
    pub fn build(mesh: &PolygonalMesh, cell: usize, k: usize) -> Result<Self, SpacesError> {
        let pts = mesh.cell_points(cell);
        let geom = element_geometry(mesh, cell)?;
        let basis = MonomialBasis::new(k, geom.centroid, geom.diameter);
        let quad = polygon_quadrature(&pts, 2 * k + 4).map_err(|e| {
            SpacesError::Mesh(MeshError::DegenerateCell { cell, reason: e.to_string() })
        })?;

        let mass_k = scalar_mixed_gram(&quad, &basis, k, k);
        let mass_km1 = scalar_mixed_gram(&quad, &basis, k - 1, k - 1);
        let vmass = block_diag2(&mass_k);
        let vstiff = block_diag2(&scalar_stiffness(&quad, &basis));

        let shared = Shared { cell, pts: &pts, geom: &geom, basis: &basis, quad: &quad, k,
            mass_km1: &mass_km1, vmass: &vmass, vstiff: &vstiff };
        let velocity = velocity_projectors(&shared)?;
        let magnetic = magnetic_projectors(&shared)?;

        Ok(Self { cell, geom, basis, quad, mass_k, mass_km1, vmass, vstiff, velocity, magnetic })
    }

    /// Evaluate `Π_k^0 v` (both components) at a point, given local dofs.
    pub fn eval_pi0(&self, proj: &SpaceProjectors, local: &[f64], p: Point2) -> (f64, f64) {
        let c = proj.pi0.matvec(local);
        let nk = self.basis.dim();
        let m = self.basis.eval_all(p);
        let vx = (0..nk).map(|i| c[i] * m[i]).sum();
        let vy = (0..nk).map(|i| c[nk + i] * m[i]).sum();
        (vx, vy)
    }
}

struct Shared<'a> {
    cell: usize,
    pts: &'a [Point2],
    geom: &'a ElementGeometry,
    basis: &'a MonomialBasis,
    quad: &'a Quadrature,
    k: usize,
    mass_km1: &'a DMat,
    vmass: &'a DMat,
    vstiff: &'a DMat,
}

impl Shared<'_> {
    fn solve(&self, a: &DMat, b: &DMat) -> Result<DMat, SpacesError> {
        a.solve(b).map_err(|source| SpacesError::ElementQuality { cell: self.cell, source })
    }
}

fn velocity_projectors(sh: &Shared) -> Result<SpaceProjectors, SpacesError> {
    let k = sh.k;
    let nv = sh.pts.len();
    let nk = poly_dim(k);
    let n1 = poly_dim(k - 1);
    let n_div = if k == 2 { n1 - 1 } else { 0 };
    let n = 4 * nv + n_div;
    let div_dof_base = 4 * nv;

    let traces = Traces::build(sh.pts, vec![0.0, 1.0, 0.5], 2 * nv);
    let low = sh.basis.with_degree(k - 1);

    // exact divergence polynomial: mean part from ∮ v·n, higher moments from
    // the divergence dofs
    let mut div_moments = DMat::zeros(n1, n);
    accumulate_boundary(&mut div_moments, &traces, |e, _p, terms| {
        let nrm = sh.geom.edge_normals[e];
        terms.push((0, nrm.0, nrm.1));
    });
    for t in 0..n_div {
        div_moments[(1 + t, div_dof_base + t)] = sh.geom.area / sh.geom.diameter;
    }
    let div = sh.solve(sh.mass_km1, &div_moments)?;

    // moments (v, ∇m_p) for all monomials of degree ≤ k+1:
    //   (v, ∇m_p) = -(div v, m_p) + ∮ m_p (v·n)
    let nkp1 = poly_dim(k + 1);
    let up = sh.basis.with_degree(k + 1);
    let mut mom_grad = DMat::zeros(nkp1, n);
    accumulate_boundary(&mut mom_grad, &traces, |e, p, terms| {
        let nrm = sh.geom.edge_normals[e];
        for (row, m) in up.eval_all(p).into_iter().enumerate() {
            terms.push((row, m * nrm.0, m * nrm.1));
        }
    });
    let mg = scalar_mixed_gram(sh.quad, sh.basis, k + 1, k - 1);
    mom_grad.add_scaled(-1.0, &mg.matmul(&div));

    // Π_k^∇ right-hand side
    let mut b_nabla = DMat::zeros(2 * nk, n);
    accumulate_boundary(&mut b_nabla, &traces, |e, p, terms| {
        let nrm = sh.geom.edge_normals[e];
        for (s, g) in sh.basis.eval_grad_all(p).into_iter().enumerate() {
            let gn = g.0 * nrm.0 + g.1 * nrm.1;
            terms.push((s, gn, 0.0));
            terms.push((nk + s, 0.0, gn));
        }
    });
    if k == 2 {
        subtract_constant_laplacian_terms(sh, &mut b_nabla, &mom_grad);
    }
    let pi_nabla = solve_pi_nabla(sh, b_nabla, &traces, n)?;

    // Π_k^0 via the 𝒢 ⊕ 𝒢^⊕ decomposition
    let gk = VectorPolyBasis::new(VectorBasisKind::Gk, sh.basis.clone()).coeff_columns();
    let gko = VectorPolyBasis::new(VectorBasisKind::GkOplus, sh.basis.clone()).coeff_columns();
    let n_gk = gk.ncols();
    let n_gko = gko.ncols();
    debug_assert_eq!(n_gk + n_gko, 2 * nk);
    let mut t_mat = DMat::zeros(2 * nk, 2 * nk);
    for i in 0..2 * nk {
        for j in 0..n_gk {
            t_mat[(i, j)] = gk[(i, j)];
        }
        for j in 0..n_gko {
            t_mat[(i, n_gk + j)] = gko[(i, j)];
        }
    }
    let t_inv = sh.solve(&t_mat, &DMat::identity(2 * nk))?;

    let mut m_decomp = DMat::zeros(2 * nk, n);
    for j in 0..n_gk {
        // 𝒢_k member j is ∇m^{(k+1)}_{j+1}
        for i in 0..n {
            m_decomp[(j, i)] = mom_grad[(j + 1, i)];
        }
    }
    // enhancement: (v, g^⊕) = (Π_k^∇ v, g^⊕) (𝒢_{k-2}^⊕ is empty for k ≤ 2)
    for b in 0..n_gko {
        let col: Vec<f64> = (0..2 * nk).map(|i| gko[(i, b)]).collect();
        let w = sh.vmass.tr_matvec(&col); // vmass is symmetric
        let row = pi_nabla.tr_matvec(&w);
        for i in 0..n {
            m_decomp[(n_gk + b, i)] = row[i];
        }
    }
    let b0 = t_inv.tr_matmul(&m_decomp);
    let pi0 = sh.solve(sh.vmass, &b0)?;

    // projected gradient Π_{k-1}^0 ∇v, row blocks ∂₁v₁, ∂₂v₁, ∂₁v₂, ∂₂v₂:
    //   (∂_d v_c, m_α) = -(v_c, ∂_d m_α) + ∮ m_α v_c n_d
    let mut grad_blocks = DMat::zeros(4 * n1, n);
    for c in 0..2usize {
        for d in 0..2usize {
            let bi = 2 * c + d;
            let mut rows = DMat::zeros(n1, n);
            accumulate_boundary(&mut rows, &traces, |e, p, terms| {
                let nd = if d == 0 { sh.geom.edge_normals[e].0 } else { sh.geom.edge_normals[e].1 };
                for (a, m) in low.eval_all(p).into_iter().enumerate() {
                    let coef = m * nd;
                    terms.push((a, if c == 0 { coef } else { 0.0 }, if c == 1 { coef } else { 0.0 }));
                }
            });
            if k == 2 {
                // ∂_d m_α is constant for the linear monomials
                for a in 0..n1 {
                    let mut mono = vec![0.0; n1];
                    mono[a] = 1.0;
                    let [gx, gy] = gradient(&low, &mono).expect("sized");
                    let gamma = if d == 0 { gx[0] } else { gy[0] };
                    if gamma != 0.0 {
                        // (v, e_c) = h · (v, ∇(ξ or η))
                        let src = exponent_index(if c == 0 { 1 } else { 0 }, if c == 0 { 0 } else { 1 });
                        for i in 0..n {
                            let t = gamma * sh.basis.h * mom_grad[(src, i)];
                            rows[(a, i)] -= t;
                        }
                    }
                }
            }
            let solved = sh.solve(sh.mass_km1, &rows)?;
            for a in 0..n1 {
                for i in 0..n {
                    grad_blocks[(bi * n1 + a, i)] = solved[(a, i)];
                }
            }
        }
    }

    // dof values of the [ℙ_k]² monomial basis
    let mut dof_of_poly = DMat::zeros(n, 2 * nk);
    for (s_loc, &p) in sh.pts.iter().enumerate() {
        let m = sh.basis.eval_all(p);
        for s in 0..nk {
            dof_of_poly[(2 * s_loc, s)] = m[s];
            dof_of_poly[(2 * s_loc + 1, nk + s)] = m[s];
        }
    }
    for e in 0..nv {
        let p = sh.pts[e];
        let q = sh.pts[(e + 1) % nv];
        let mid = Point2::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
        let m = sh.basis.eval_all(mid);
        for s in 0..nk {
            dof_of_poly[(2 * nv + 2 * e, s)] = m[s];
            dof_of_poly[(2 * nv + 2 * e + 1, nk + s)] = m[s];
        }
    }
    for t in 0..n_div {
        for j in 0..2 * nk {
            let (comp, s) = if j < nk { (0, j) } else { (1, j - nk) };
            let mut mono = vec![0.0; nk];
            mono[s] = 1.0;
            let [gx, gy] = gradient(sh.basis, &mono).expect("sized");
            let dcoef = if comp == 0 { gx } else { gy };
            // (h/|E|) (div q_j, m_{1+t})
            let mut val = 0.0;
            for (g, c) in dcoef.iter().enumerate() {
                val += c * sh.mass_km1[(g, 1 + t)];
            }
            dof_of_poly[(div_dof_base + t, j)] = val * sh.geom.diameter / sh.geom.area;
        }
    }

    Ok(SpaceProjectors {
        n_dofs: n,
        pi_nabla,
        pi0,
        grad: Some(grad_blocks),
        curl: None,
        div,
        dof_of_poly,
    })
}

/// Subtract `(v, Δq_j)` from the Π^∇ right side when `Δq_j` is a constant
/// vector (k = 2). The constant `e_c` equals `h · ∇(ξ or η)`, so for the
/// velocity space the moment comes from `mom_grad` (the magnetic space reads
/// its interior dofs instead, handled inline by its builder).
fn subtract_constant_laplacian_terms(sh: &Shared, b_nabla: &mut DMat, mom_grad: &DMat) {
    let k = sh.k;
    let nk = poly_dim(k);
    let n = b_nabla.ncols();
    let glow = sh.basis.with_degree(k - 1);
    for j in 0..2 * nk {
        let (comp, s) = if j < nk { (0usize, j) } else { (1usize, j - nk) };
        let mut mono = vec![0.0; nk];
        mono[s] = 1.0;
        let [gx, gy] = gradient(sh.basis, &mono).expect("sized");
        let lap = divergence(&glow, &gx, &gy).expect("sized")[0]; // constant for k = 2
        if lap == 0.0 {
            continue;
        }
        let src = exponent_index(if comp == 0 { 1 } else { 0 }, if comp == 0 { 0 } else { 1 });
        for i in 0..n {
            let t = lap * sh.basis.h * mom_grad[(src, i)];
            b_nabla[(j, i)] -= t;
        }
    }
}

/// Replace the two zero rows of the vector stiffness matrix (the constant
/// basis members) with the boundary-mean constraint and solve for Π^∇.
fn solve_pi_nabla(
    sh: &Shared,
    mut b_nabla: DMat,
    traces: &Traces,
    n: usize,
) -> Result<DMat, SpacesError> {
    let nk = poly_dim(sh.k);
    let bm = monomial_boundary_integrals(sh.pts, sh.basis);
    let mut g_mod = sh.vstiff.clone();
    for l in 0..2 * nk {
        g_mod[(0, l)] = if l < nk { bm[l] } else { 0.0 };
        g_mod[(nk, l)] = if l >= nk { bm[l - nk] } else { 0.0 };
    }
    for i in 0..n {
        b_nabla[(0, i)] = 0.0;
        b_nabla[(nk, i)] = 0.0;
    }
    let mut constraint = DMat::zeros(2, n);
    accumulate_boundary(&mut constraint, traces, |_e, _p, terms| {
        terms.push((0, 1.0, 0.0));
        terms.push((1, 0.0, 1.0));
    });
    for i in 0..n {
        b_nabla[(0, i)] = constraint[(0, i)];
        b_nabla[(nk, i)] = constraint[(1, i)];
    }
    sh.solve(&g_mod, &b_nabla)
}

fn magnetic_projectors(sh: &Shared) -> Result<SpaceProjectors, SpacesError> {
    let k = sh.k;
    let nv = sh.pts.len();
    let nk = poly_dim(k);
    let n1 = poly_dim(k - 1);
    let n_edge = if k == 2 { 2 * nv } else { 0 };
    let n_low = if k >= 2 { poly_dim(k - 2) } else { 0 };
    let n = 2 * nv + n_edge + 2 * n_low;
    let int_dof = |comp: usize, mono: usize| 2 * nv + n_edge + comp * n_low + mono;

    let nodes_t = if k == 2 { vec![0.0, 1.0, 0.5] } else { vec![0.0, 1.0] };
    let traces = Traces::build(sh.pts, nodes_t, 2 * nv);
    let low = sh.basis.with_degree(k - 1);

    // Π_k^∇ right side: ∮ m·(∇q n) - (m, Δq)
    let mut b_nabla = DMat::zeros(2 * nk, n);
    accumulate_boundary(&mut b_nabla, &traces, |e, p, terms| {
        let nrm = sh.geom.edge_normals[e];
        for (s, g) in sh.basis.eval_grad_all(p).into_iter().enumerate() {
            let gn = g.0 * nrm.0 + g.1 * nrm.1;
            terms.push((s, gn, 0.0));
            terms.push((nk + s, 0.0, gn));
        }
    });
    if k == 2 {
        // (m, const·e_c) = |E| · interior moment dof
        for j in 0..2 * nk {
            let (comp, s) = if j < nk { (0usize, j) } else { (1usize, j - nk) };
            let mut mono = vec![0.0; nk];
            mono[s] = 1.0;
            let [gx, gy] = gradient(sh.basis, &mono).expect("sized");
            let lap = divergence(&low, &gx, &gy).expect("sized")[0];
            if lap != 0.0 {
                let t = lap * sh.geom.area;
                b_nabla[(j, int_dof(comp, 0))] -= t;
            }
        }
    }
    let pi_nabla = solve_pi_nabla(sh, b_nabla, &traces, n)?;

    // Π_k^0: moments of degree ≤ k-2 from dofs, the rest from enhancement
    let mut b0 = DMat::zeros(2 * nk, n);
    for j in 0..2 * nk {
        let (comp, s) = if j < nk { (0usize, j) } else { (1usize, j - nk) };
        if s < n_low {
            b0[(j, int_dof(comp, s))] = sh.geom.area;
        } else {
            let col: Vec<f64> = (0..2 * nk).map(|i| sh.vmass[(i, j)]).collect();
            let row = pi_nabla.tr_matvec(&col);
            for i in 0..n {
                b0[(j, i)] = row[i];
            }
        }
    }
    let pi0 = sh.solve(sh.vmass, &b0)?;

    // Π_{k-1}^0 curl: (curl m, m_α) = (m, rot m_α) + ∮ m_α (m·t)
    let mut curl_rows = DMat::zeros(n1, n);
    accumulate_boundary(&mut curl_rows, &traces, |e, p, terms| {
        let t = sh.geom.edge_tangents[e];
        for (a, m) in low.eval_all(p).into_iter().enumerate() {
            terms.push((a, m * t.0, m * t.1));
        }
    });
    if k == 2 {
        for a in 0..n1 {
            let mut mono = vec![0.0; n1];
            mono[a] = 1.0;
            let [gx, gy] = gradient(&low, &mono).expect("sized");
            // rot m_α = (∂₂ m_α, -∂₁ m_α), constant for linear monomials
            if gy[0] != 0.0 {
                curl_rows[(a, int_dof(0, 0))] += gy[0] * sh.geom.area;
            }
            if gx[0] != 0.0 {
                curl_rows[(a, int_dof(1, 0))] -= gx[0] * sh.geom.area;
            }
        }
    }
    let curl = sh.solve(sh.mass_km1, &curl_rows)?;

    // Π_{k-1}^0 div: (div m, m_α) = -(m, ∇m_α) + ∮ m_α (m·n)
    let mut div_rows = DMat::zeros(n1, n);
    accumulate_boundary(&mut div_rows, &traces, |e, p, terms| {
        let nrm = sh.geom.edge_normals[e];
        for (a, m) in low.eval_all(p).into_iter().enumerate() {
            terms.push((a, m * nrm.0, m * nrm.1));
        }
    });
    if k == 2 {
        for a in 0..n1 {
            let mut mono = vec![0.0; n1];
            mono[a] = 1.0;
            let [gx, gy] = gradient(&low, &mono).expect("sized");
            if gx[0] != 0.0 {
                div_rows[(a, int_dof(0, 0))] -= gx[0] * sh.geom.area;
            }
            if gy[0] != 0.0 {
                div_rows[(a, int_dof(1, 0))] -= gy[0] * sh.geom.area;
            }
        }
    }
    let div = sh.solve(sh.mass_km1, &div_rows)?;

    // dof values of the [ℙ_k]² monomials
    let mut dof_of_poly = DMat::zeros(n, 2 * nk);
    for (s_loc, &p) in sh.pts.iter().enumerate() {
        let m = sh.basis.eval_all(p);
        for s in 0..nk {
            dof_of_poly[(2 * s_loc, s)] = m[s];
            dof_of_poly[(2 * s_loc + 1, nk + s)] = m[s];
        }
    }
    if k == 2 {
        for e in 0..nv {
            let p = sh.pts[e];
            let q = sh.pts[(e + 1) % nv];
            let mid = Point2::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
            let m = sh.basis.eval_all(mid);
            for s in 0..nk {
                dof_of_poly[(2 * nv + 2 * e, s)] = m[s];
                dof_of_poly[(2 * nv + 2 * e + 1, nk + s)] = m[s];
            }
        }
        let mg = scalar_mixed_gram(sh.quad, sh.basis, k, k - 2);
        for comp in 0..2usize {
            for mono in 0..n_low {
                for s in 0..nk {
                    let j = comp * nk + s;
                    dof_of_poly[(int_dof(comp, mono), j)] = mg[(s, mono)] / sh.geom.area;
                }
            }
        }
    }

    Ok(SpaceProjectors {
        n_dofs: n,
        pi_nabla,
        pi0,
        grad: None,
        curl: Some(curl),
        div,
        dof_of_poly,
    })
}
