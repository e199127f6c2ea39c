//! Global constant-coefficient operators, boundary-condition elimination, and
//! cached direct factorizations.
//!
//! Each time scheme only ever solves systems of the form `a·M + b·A` with a
//! handful of `(a, b)` signatures, so every factorization is computed once
//! and reused across all time steps: the Stokes saddle-point operator gets a
//! sparse LU, the SPD magnetic operator a sparse Cholesky. The pressure
//! zero-mean condition is enforced by a single Lagrange multiplier row/column
//! holding the cell moments of the pressure basis.

use crate::forms::{assemble_bilinear, assemble_d, pressure_mean_row, FormTag, MhdParams};
use crate::spaces::{Discretization, DofDescriptor, DofVector, SpaceKind};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("dof {dof} constrained twice with conflicting values ({a} vs {b})")]
    ConstraintConflict { dof: usize, a: f64, b: f64 },
    #[error("failed to assemble sparse matrix: {0}")]
    Assembly(String),
    #[error("factorization failed for the {what} operator (a={a}, b={b})")]
    Factorization { what: &'static str, a: f64, b: f64 },
    #[error("solver breakdown: relative residual {residual:.3e}")]
    Solver { residual: f64 },
}

/// Fixed dofs with prescribed values, sorted by dof index.
#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(mut pairs: Vec<(usize, f64)>) -> Result<Self, SystemError> {
        pairs.sort_by_key(|&(d, _)| d);
        let mut dofs = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        for (d, v) in pairs {
            if dofs.last() == Some(&d) {
                let prev: f64 = *values.last().unwrap();
                if (prev - v).abs() > 1e-14 * (1.0 + prev.abs()) {
                    return Err(SystemError::ConstraintConflict { dof: d, a: prev, b: v });
                }
            } else {
                dofs.push(d);
                values.push(v);
            }
        }
        Ok(Self { dofs, values })
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }
}

fn to_mat(v: &[f64]) -> faer::Mat<f64> {
    faer::Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn from_mat(m: &faer::Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

fn build_sparse(
    n_rows: usize,
    n_cols: usize,
    triplets: &[(usize, usize, f64)],
) -> Result<SparseColMat<usize, f64>, SystemError> {
    let t: Vec<Triplet<usize, usize, f64>> =
        triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(n_rows, n_cols, &t)
        .map_err(|e| SystemError::Assembly(format!("{e:?}")))
}

/// sparse matrix-vector product
pub fn spmv(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    from_mat(&(a * to_mat(x)))
}

enum Factor {
    Lu(Box<faer::sparse::linalg::solvers::Lu<usize, f64>>),
    Llt(Box<faer::sparse::linalg::solvers::Llt<usize, f64>>),
}

impl Factor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = to_mat(rhs);
        let x = match self {
            Factor::Lu(f) => f.solve(&m),
            Factor::Llt(f) => f.solve(&m),
        };
        from_mat(&x)
    }
}

/// A matrix with fixed dofs eliminated: solves act on the free dofs, with
/// right-hand-side lifting for the prescribed values and re-expansion of the
/// solution to the full dof vector.
pub struct ReducedSystem {
    n_full: usize,
    full_of_free: Vec<usize>,
    fixed: Vec<usize>,
    reduced: SparseColMat<usize, f64>,
    coupling: SparseColMat<usize, f64>,
    factor: Factor,
}

impl ReducedSystem {
    /// Eliminate `fixed` rows/columns of the `n × n` operator given by
    /// `triplets` and factorize the remaining block (`spd` selects Cholesky).
    pub fn build(
        n: usize,
        triplets: &[(usize, usize, f64)],
        fixed: &[usize],
        spd: bool,
        what: &'static str,
        sig: (f64, f64),
    ) -> Result<Self, SystemError> {
        let mut fixed_pos = vec![usize::MAX; n];
        for (k, &d) in fixed.iter().enumerate() {
            fixed_pos[d] = k;
        }
        let mut free_of_full = vec![None; n];
        let mut full_of_free = Vec::with_capacity(n - fixed.len());
        for i in 0..n {
            if fixed_pos[i] == usize::MAX {
                free_of_full[i] = Some(full_of_free.len());
                full_of_free.push(i);
            }
        }
        let n_free = full_of_free.len();
        let mut red = Vec::with_capacity(triplets.len());
        let mut coup = Vec::new();
        for &(i, j, v) in triplets {
            match (free_of_full[i], free_of_full[j]) {
                (Some(ri), Some(rj)) => red.push((ri, rj, v)),
                (Some(ri), None) => coup.push((ri, fixed_pos[j], v)),
                _ => {}
            }
        }
        let reduced = build_sparse(n_free, n_free, &red)?;
        let coupling = build_sparse(n_free, fixed.len(), &coup)?;
        let factor = if spd {
            Factor::Llt(Box::new(
                reduced
                    .sp_cholesky(faer::Side::Lower)
                    .map_err(|_| SystemError::Factorization { what, a: sig.0, b: sig.1 })?,
            ))
        } else {
            Factor::Lu(Box::new(
                reduced
                    .sp_lu()
                    .map_err(|_| SystemError::Factorization { what, a: sig.0, b: sig.1 })?,
            ))
        };
        Ok(Self {
            n_full: n,
            full_of_free,
            fixed: fixed.to_vec(),
            reduced,
            coupling,
            factor,
        })
    }

    /// Solve with the given full-length right-hand side and prescribed values
    /// (aligned with the fixed dof list). Returns the full solution vector
    /// and the relative residual of the reduced solve.
    pub fn solve(&self, rhs_full: &[f64], fixed_values: &[f64]) -> Result<(Vec<f64>, f64), SystemError> {
        assert_eq!(rhs_full.len(), self.n_full);
        assert_eq!(fixed_values.len(), self.fixed.len());
        let mut rhs_red: Vec<f64> =
            self.full_of_free.iter().map(|&i| rhs_full[i]).collect();
        if !self.fixed.is_empty() {
            let lift = spmv(&self.coupling, fixed_values);
            for (r, l) in rhs_red.iter_mut().zip(&lift) {
                *r -= l;
            }
        }
        let x_red = self.factor.solve(&rhs_red);
        let ax = spmv(&self.reduced, &x_red);
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in ax.iter().zip(&rhs_red) {
            num += (a - b) * (a - b);
            den += b * b;
        }
        let residual = num.sqrt() / den.sqrt().max(1e-300);
        if !residual.is_finite() {
            return Err(SystemError::Solver { residual });
        }
        let mut full = vec![0.0; self.n_full];
        for (r, &i) in self.full_of_free.iter().enumerate() {
            full[i] = x_red[r];
        }
        for (k, &i) in self.fixed.iter().enumerate() {
            full[i] = fixed_values[k];
        }
        Ok((full, residual))
    }

    pub fn n_free(&self) -> usize {
        self.full_of_free.len()
    }

    /// `xᵀ A_red y` on full-length vectors restricted to the free dofs.
    pub fn reduced_bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let xr: Vec<f64> = self.full_of_free.iter().map(|&i| x[i]).collect();
        let yr: Vec<f64> = self.full_of_free.iter().map(|&i| y[i]).collect();
        let ay = spmv(&self.reduced, &yr);
        xr.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }
}

/// Assembled constant matrices of the discretization plus the factorization
/// cache. The signature of an operator is the exact bit pattern of its
/// `(mass, stiffness)` coefficients.
pub struct MhdOperators {
    pub n_u: usize,
    pub n_p: usize,
    pub n_m: usize,
    pub m0: SparseColMat<usize, f64>,
    pub a0: SparseColMat<usize, f64>,
    pub m1: SparseColMat<usize, f64>,
    pub a1: SparseColMat<usize, f64>,
    /// pressure rows × velocity columns
    pub d: SparseColMat<usize, f64>,
    pub mean_row: Vec<f64>,
    m0_triplets: Vec<(usize, usize, f64)>,
    a0_triplets: Vec<(usize, usize, f64)>,
    m1_triplets: Vec<(usize, usize, f64)>,
    a1_triplets: Vec<(usize, usize, f64)>,
    d_triplets: Vec<(usize, usize, f64)>,
    vel_fixed: Vec<usize>,
    mag_fixed: Vec<usize>,
    stokes_cache: Vec<((u64, u64), ReducedSystem)>,
    magnetic_cache: Vec<((u64, u64), ReducedSystem)>,
    pub n_factorizations: usize,
    pub n_solves: usize,
}

impl MhdOperators {
    pub fn new(
        disc: &Discretization,
        params: &MhdParams,
        vel_fixed: Vec<usize>,
        mag_fixed: Vec<usize>,
    ) -> Result<Self, SystemError> {
        let n_u = disc.velocity.n_dofs;
        let n_p = disc.pressure.n_dofs;
        let n_m = disc.magnetic.n_dofs;
        let m0_triplets = assemble_bilinear(disc, FormTag::M0h, params);
        let a0_triplets = assemble_bilinear(disc, FormTag::A0h, params);
        let m1_triplets = assemble_bilinear(disc, FormTag::M1h, params);
        let a1_triplets = assemble_bilinear(disc, FormTag::A1h, params);
        let d_triplets = assemble_d(disc);
        let m0 = build_sparse(n_u, n_u, &m0_triplets)?;
        let a0 = build_sparse(n_u, n_u, &a0_triplets)?;
        let m1 = build_sparse(n_m, n_m, &m1_triplets)?;
        let a1 = build_sparse(n_m, n_m, &a1_triplets)?;
        let d = build_sparse(n_p, n_u, &d_triplets)?;
        let mean_row = pressure_mean_row(disc);
        Ok(Self {
            n_u,
            n_p,
            n_m,
            m0,
            a0,
            m1,
            a1,
            d,
            mean_row,
            m0_triplets,
            a0_triplets,
            m1_triplets,
            a1_triplets,
            d_triplets,
            vel_fixed,
            mag_fixed,
            stokes_cache: Vec::new(),
            magnetic_cache: Vec::new(),
            n_factorizations: 0,
            n_solves: 0,
        })
    }

    /// Saddle-point dimension: velocity + pressure + 1 multiplier.
    pub fn stokes_dim(&self) -> usize {
        self.n_u + self.n_p + 1
    }

    fn stokes_entry(&mut self, a: f64, b: f64) -> Result<usize, SystemError> {
        debug_assert!(a > 0.0 && b >= 0.0, "mass coefficient must be positive");
        let key = (a.to_bits(), b.to_bits());
        if let Some(pos) = self.stokes_cache.iter().position(|(k, _)| *k == key) {
            return Ok(pos);
        }
        let n = self.stokes_dim();
        let mut triplets = Vec::with_capacity(
            self.m0_triplets.len() + self.a0_triplets.len() + 2 * self.d_triplets.len() + 2 * self.n_p,
        );
        for &(i, j, v) in &self.m0_triplets {
            triplets.push((i, j, a * v));
        }
        for &(i, j, v) in &self.a0_triplets {
            triplets.push((i, j, b * v));
        }
        for &(r, c, v) in &self.d_triplets {
            triplets.push((self.n_u + r, c, v));
            triplets.push((c, self.n_u + r, v));
        }
        let mult = self.n_u + self.n_p;
        for (r, &v) in self.mean_row.iter().enumerate() {
            if v != 0.0 {
                triplets.push((mult, self.n_u + r, v));
                triplets.push((self.n_u + r, mult, v));
            }
        }
        let sys = ReducedSystem::build(n, &triplets, &self.vel_fixed, false, "Stokes", (a, b))?;
        self.n_factorizations += 1;
        self.stokes_cache.push((key, sys));
        Ok(self.stokes_cache.len() - 1)
    }

    fn magnetic_entry(&mut self, a: f64, b: f64) -> Result<usize, SystemError> {
        debug_assert!(a > 0.0 && b >= 0.0, "mass coefficient must be positive");
        let key = (a.to_bits(), b.to_bits());
        if let Some(pos) = self.magnetic_cache.iter().position(|(k, _)| *k == key) {
            return Ok(pos);
        }
        let mut triplets =
            Vec::with_capacity(self.m1_triplets.len() + self.a1_triplets.len());
        for &(i, j, v) in &self.m1_triplets {
            triplets.push((i, j, a * v));
        }
        for &(i, j, v) in &self.a1_triplets {
            triplets.push((i, j, b * v));
        }
        let sys =
            ReducedSystem::build(self.n_m, &triplets, &self.mag_fixed, true, "magnetic", (a, b))?;
        self.n_factorizations += 1;
        self.magnetic_cache.push((key, sys));
        Ok(self.magnetic_cache.len() - 1)
    }

    /// Solve `[a·M₀ + b·A₀] u + Dᵀ p = rhs_u`, `D u + c λ = 0`, `cᵀ p = 0`
    /// with the velocity Dirichlet values prescribed. Returns `(u, p, λ)`.
    pub fn solve_stokes(
        &mut self,
        a: f64,
        b: f64,
        rhs_u: &[f64],
        vel_values: &[f64],
    ) -> Result<(DofVector, DofVector, f64), SystemError> {
        let pos = self.stokes_entry(a, b)?;
        let n = self.stokes_dim();
        let mut rhs = vec![0.0; n];
        rhs[..self.n_u].copy_from_slice(rhs_u);
        let (full, residual) = self.stokes_cache[pos].1.solve(&rhs, vel_values)?;
        self.n_solves += 1;
        if residual > 1e-9 {
            return Err(SystemError::Solver { residual });
        }
        let u = DofVector(full[..self.n_u].to_vec());
        let p = DofVector(full[self.n_u..self.n_u + self.n_p].to_vec());
        Ok((u, p, full[n - 1]))
    }

    /// Solve `[a·M₁ + b·A₁] b = rhs` with the magnetic constraints prescribed.
    pub fn solve_magnetic(
        &mut self,
        a: f64,
        b: f64,
        rhs: &[f64],
        mag_values: &[f64],
    ) -> Result<DofVector, SystemError> {
        let pos = self.magnetic_entry(a, b)?;
        let (full, residual) = self.magnetic_cache[pos].1.solve(rhs, mag_values)?;
        self.n_solves += 1;
        if residual > 1e-9 {
            return Err(SystemError::Solver { residual });
        }
        Ok(DofVector(full))
    }

    /// Quadratic forms of the assembled global matrices.
    pub fn quad_m0(&self, u: &[f64]) -> f64 {
        crate::forms::dot(&spmv(&self.m0, u), u)
    }

    pub fn quad_a0(&self, u: &[f64]) -> f64 {
        crate::forms::dot(&spmv(&self.a0, u), u)
    }

    pub fn quad_m1(&self, b: &[f64]) -> f64 {
        crate::forms::dot(&spmv(&self.m1, b), b)
    }

    pub fn quad_a1(&self, b: &[f64]) -> f64 {
        crate::forms::dot(&spmv(&self.a1, b), b)
    }

    pub fn vel_fixed(&self) -> &[usize] {
        &self.vel_fixed
    }

    pub fn mag_fixed(&self) -> &[usize] {
        &self.mag_fixed
    }
}

/// All velocity dofs on the domain boundary (Dirichlet everywhere).
pub fn boundary_velocity_dofs(disc: &Discretization) -> Vec<usize> {
    let mesh = disc.mesh();
    let mut out = Vec::new();
    for (g, desc) in disc.velocity.descriptors.iter().enumerate() {
        match *desc {
            DofDescriptor::VertexValue { vertex, .. } if mesh.is_boundary_vertex(vertex) => {
                out.push(g)
            }
            DofDescriptor::EdgePoint { edge, .. } if mesh.edge(edge).is_boundary() => out.push(g),
            _ => {}
        }
    }
    out
}

/// Magnetic dofs fixed by `b·n = 0` on an axis-aligned rectangle: the normal
/// component on each wall, both components at corners.
pub fn magnetic_normal_dofs(
    disc: &Discretization,
    bc: &crate::mesh::BoundaryClassification,
) -> Vec<usize> {
    use crate::mesh::Side;
    let mesh = disc.mesh();
    let mut out = Vec::new();
    for (g, desc) in disc.magnetic.descriptors.iter().enumerate() {
        match *desc {
            DofDescriptor::VertexValue { vertex, comp } if mesh.is_boundary_vertex(vertex) => {
                let sides = bc.vertex_sides[vertex];
                let normal_x = sides.contains(Side::Left) || sides.contains(Side::Right);
                let normal_y = sides.contains(Side::Bottom) || sides.contains(Side::Top);
                if (comp == 0 && normal_x) || (comp == 1 && normal_y) {
                    out.push(g);
                }
            }
            DofDescriptor::EdgePoint { edge, comp } if mesh.edge(edge).is_boundary() => {
                match bc.edge_sides[edge] {
                    Some(Side::Left) | Some(Side::Right) if comp == 0 => out.push(g),
                    Some(Side::Bottom) | Some(Side::Top) if comp == 1 => out.push(g),
                    _ => {}
                }
            }
            _ => {}
        }
    }
    out
}

/// Values (aligned with a fixed-dof list) from a boundary field.
pub fn constraint_values(
    disc: &Discretization,
    kind: SpaceKind,
    fixed: &[usize],
    mut f: impl FnMut(crate::mesh::Point2, u8) -> f64,
) -> Vec<f64> {
    let mesh = disc.mesh();
    let layout = disc.layout(kind);
    fixed
        .iter()
        .map(|&g| match layout.descriptors[g] {
            DofDescriptor::VertexValue { vertex, comp } => f(mesh.vertex(vertex), comp),
            DofDescriptor::EdgePoint { edge, comp } => {
                let e = mesh.edge(edge);
                let (p, q) = (mesh.vertex(e.a), mesh.vertex(e.b));
                f(crate::mesh::Point2::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y)), comp)
            }
            _ => 0.0,
        })
        .collect()
}
