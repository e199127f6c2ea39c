//! The decoupled implicit-explicit time integrator built around a scalar
//! auxiliary variable `q(t) = exp(-t/T)`.
//!
//! Each step splits the solution as `v = v₁ + ξ v₂` with `ξ = q_h/q`:
//! subproblem 1 carries the loads and history, subproblem 2 carries the
//! explicitly-evaluated nonlinear terms, and the scalar update is a closed
//! form whose denominator is provably positive (an identity this code checks
//! at runtime). One BDF1 bootstrap step with Crank-Nicolson-type averages is
//! followed by BDF2 steps with extrapolated nonlinear data. All linear
//! operators have constant coefficients, so each of the four distinct
//! factorizations in a run is computed exactly once.

use crate::forms::{c0h_force, c1h_force_magnetic, c1h_force_velocity, dot, load_vector, MhdParams};
use crate::mesh::{classify_boundary, MeshError, Point2, Rect, Side};
use crate::spaces::{Discretization, DofVector, SpaceKind, SpacesError};
use crate::system::{
    boundary_velocity_dofs, constraint_values, magnetic_normal_dofs, MhdOperators, SystemError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SavError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Spaces(#[from] SpacesError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("scheme parameters inconsistent: dt * n_steps = {got}, T = {expected}")]
    BadParams { got: f64, expected: f64 },
    #[error("step {step}: scalar update denominator {denominator:.6e} is not positive")]
    Solvability { step: usize, denominator: f64 },
    #[error("step {step}: positivity identity violated: trilinear side {lhs:.6e}, quadratic side {rhs:.6e}")]
    PositivityIdentity { step: usize, lhs: f64, rhs: f64 },
    #[error("step {step}: non-finite field values")]
    NonFinite { step: usize },
}

/// `q(t) = exp(-t/T)`.
pub fn q_exact(t: f64, t_final: f64) -> f64 {
    (-t / t_final).exp()
}

/// Time-scheme parameters: `dt · n_steps = T` with one BDF1 step followed by
/// `n_steps - 1` BDF2 steps.
#[derive(Debug, Clone, Copy)]
pub struct SchemeParams {
    pub physics: MhdParams,
    pub t_final: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl SchemeParams {
    pub fn new(physics: MhdParams, t_final: f64, n_steps: usize) -> Result<Self, SavError> {
        let dt = t_final / n_steps as f64;
        Ok(Self { physics, t_final, dt, n_steps })
    }

    /// The `Δt ≈ h` rule: `n_steps = ⌈T/h⌉`.
    pub fn from_mesh_size(physics: MhdParams, t_final: f64, h: f64) -> Result<Self, SavError> {
        let n = (t_final / h).ceil() as usize;
        Self::new(physics, t_final, n.max(2))
    }

    pub fn validate(&self) -> Result<(), SavError> {
        let got = self.dt * self.n_steps as f64;
        if (got - self.t_final).abs() > 1e-12 * self.t_final.abs().max(1.0) {
            return Err(SavError::BadParams { got, expected: self.t_final });
        }
        Ok(())
    }
}

/// One time level of the scheme, with the previous level retained for the
/// three-level BDF2 stencil.
#[derive(Debug, Clone)]
pub struct SavState {
    pub level: usize,
    pub u: DofVector,
    pub b: DofVector,
    pub p: DofVector,
    pub q: f64,
    pub prev_u: DofVector,
    pub prev_b: DofVector,
    pub prev_q: f64,
}

/// Discrete energies and dissipation rates of one state.
#[derive(Debug, Clone, Copy)]
pub struct EnergyRecord {
    /// `m0h(u, u)`
    pub kinetic: f64,
    /// `m1h(b, b)`
    pub magnetic: f64,
    /// `|q|²`
    pub q_sq: f64,
    /// `a0h(u, u)`
    pub diss_velocity: f64,
    /// `a1h(b, b)`
    pub diss_magnetic: f64,
    /// `‖div u_h‖₀`
    pub div_u: f64,
}

/// Boundary conditions of the supported problem classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryConditions {
    /// `u = 0` and `b·n = 0` on the whole boundary
    Homogeneous,
    /// unit lid: `u = (1,0)` on the top wall (side walls win at corners),
    /// `u = 0` elsewhere; `n × b = n × (1,0)` with `b·n = 0`
    Cavity,
}

/// Problem data for a run.
pub struct Problem {
    pub initial_u: Box<dyn Fn(Point2) -> (f64, f64)>,
    pub initial_b: Box<dyn Fn(Point2) -> (f64, f64)>,
    pub forcing_f: Box<dyn Fn(Point2, f64) -> (f64, f64)>,
    pub forcing_g: Box<dyn Fn(Point2, f64) -> (f64, f64)>,
    pub bcs: BoundaryConditions,
}

impl Problem {
    /// Zero data and homogeneous boundary conditions (free decay).
    pub fn decay(
        initial_u: impl Fn(Point2) -> (f64, f64) + 'static,
        initial_b: impl Fn(Point2) -> (f64, f64) + 'static,
    ) -> Self {
        Self {
            initial_u: Box::new(initial_u),
            initial_b: Box::new(initial_b),
            forcing_f: Box::new(|_, _| (0.0, 0.0)),
            forcing_g: Box::new(|_, _| (0.0, 0.0)),
            bcs: BoundaryConditions::Homogeneous,
        }
    }

    /// The manufactured decaying solution with synthesized forcings.
    pub fn manufactured(ms: std::sync::Arc<crate::analysis::ManufacturedSolution>) -> Self {
        let m0 = ms.clone();
        let m1 = ms.clone();
        let m2 = ms.clone();
        let m3 = ms;
        Self {
            initial_u: Box::new(move |x| (m0.u)(x, 0.0)),
            initial_b: Box::new(move |x| (m1.b)(x, 0.0)),
            forcing_f: Box::new(move |x, t| m2.forcing_f(x, t)),
            forcing_g: Box::new(move |x, t| m3.forcing_g(x, t)),
            bcs: BoundaryConditions::Homogeneous,
        }
    }

    /// The driven-cavity benchmark: zero initial data, zero forcing, lid and
    /// tangential-field boundary data.
    pub fn cavity() -> Self {
        Self {
            initial_u: Box::new(|_| (0.0, 0.0)),
            initial_b: Box::new(|_| (0.0, 0.0)),
            forcing_f: Box::new(|_, _| (0.0, 0.0)),
            forcing_g: Box::new(|_, _| (0.0, 0.0)),
            bcs: BoundaryConditions::Cavity,
        }
    }
}

/// Everything per-step diagnostics may observe.
pub struct StepInfo<'a> {
    pub step: usize,
    pub time: f64,
    pub state: &'a SavState,
    pub energy: &'a EnergyRecord,
}

/// Residuals of the unsplit coupled equations evaluated at a recombined
/// solution (the decoupling-correctness diagnostic).
#[derive(Debug, Clone, Copy)]
pub struct DecouplingResidual {
    pub momentum: f64,
    pub induction: f64,
    pub continuity: f64,
    pub scalar: f64,
}

impl DecouplingResidual {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.induction).max(self.continuity).max(self.scalar)
    }
}

pub struct Integrator<'d> {
    pub disc: &'d Discretization,
    pub scheme: SchemeParams,
    pub ops: MhdOperators,
    problem: Problem,
    vel_values: Vec<f64>,
    mag_values: Vec<f64>,
    vel_zeros: Vec<f64>,
    mag_zeros: Vec<f64>,
    /// residual of the unsplit equations, refreshed by each BDF2 step
    pub last_residual: Option<DecouplingResidual>,
}

impl<'d> Integrator<'d> {
    pub fn new(
        disc: &'d Discretization,
        scheme: SchemeParams,
        problem: Problem,
        domain: &Rect,
    ) -> Result<Self, SavError> {
        scheme.validate()?;
        let bc = classify_boundary(disc.mesh(), domain)?;
        let vel_fixed = boundary_velocity_dofs(disc);
        let (mag_fixed, mag_values) = match problem.bcs {
            BoundaryConditions::Homogeneous => {
                let fixed = magnetic_normal_dofs(disc, &bc);
                let values = vec![0.0; fixed.len()];
                (fixed, values)
            }
            BoundaryConditions::Cavity => {
                // every boundary magnetic dof is prescribed: (1,0) on the
                // horizontal walls, 0 on the vertical walls and corners
                let mesh = disc.mesh();
                let mut fixed = Vec::new();
                for (g, desc) in disc.magnetic.descriptors.iter().enumerate() {
                    match *desc {
                        crate::spaces::DofDescriptor::VertexValue { vertex, .. }
                            if mesh.is_boundary_vertex(vertex) =>
                        {
                            fixed.push(g)
                        }
                        crate::spaces::DofDescriptor::EdgePoint { edge, .. }
                            if mesh.edge(edge).is_boundary() =>
                        {
                            fixed.push(g)
                        }
                        _ => {}
                    }
                }
                let values = fixed
                    .iter()
                    .map(|&g| match disc.magnetic.descriptors[g] {
                        crate::spaces::DofDescriptor::VertexValue { vertex, comp } => {
                            let sides = bc.vertex_sides[vertex];
                            let on_vertical =
                                sides.contains(Side::Left) || sides.contains(Side::Right);
                            if comp == 0 && !on_vertical {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        crate::spaces::DofDescriptor::EdgePoint { edge, comp } => {
                            match bc.edge_sides[edge] {
                                Some(Side::Top) | Some(Side::Bottom) if comp == 0 => 1.0,
                                _ => 0.0,
                            }
                        }
                        _ => 0.0,
                    })
                    .collect();
                (fixed, values)
            }
        };
        let vel_values = match problem.bcs {
            BoundaryConditions::Homogeneous => vec![0.0; vel_fixed.len()],
            BoundaryConditions::Cavity => {
                constraint_values(disc, SpaceKind::Velocity, &vel_fixed, |p, comp| {
                    let sides = side_set_of(&bc, disc, p);
                    let lid_only = sides.contains(Side::Top)
                        && !sides.contains(Side::Left)
                        && !sides.contains(Side::Right);
                    if comp == 0 && lid_only {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
        };
        let vel_zeros = vec![0.0; vel_fixed.len()];
        let mag_zeros = vec![0.0; mag_fixed.len()];
        let ops = MhdOperators::new(disc, &scheme.physics, vel_fixed, mag_fixed)?;
        Ok(Self {
            disc,
            scheme,
            ops,
            problem,
            vel_values,
            mag_values,
            vel_zeros,
            mag_zeros,
            last_residual: None,
        })
    }

    /// Interpolated initial data with `q⁰ = q(0) = 1`.
    pub fn initial_state(&self) -> SavState {
        let u = self.disc.interpolate(SpaceKind::Velocity, &self.problem.initial_u);
        let b = self.disc.interpolate(SpaceKind::Magnetic, &self.problem.initial_b);
        let p = DofVector::zeros(self.disc.pressure.n_dofs);
        SavState {
            level: 0,
            prev_u: u.clone(),
            prev_b: b.clone(),
            prev_q: 1.0,
            u,
            b,
            p,
            q: 1.0,
        }
    }

    fn loads(&self, t: f64) -> (DofVector, DofVector) {
        let f = load_vector(self.disc, SpaceKind::Velocity, |x| (self.problem.forcing_f)(x, t));
        let g = load_vector(self.disc, SpaceKind::Magnetic, |x| (self.problem.forcing_g)(x, t));
        (f, g)
    }

    /// The bootstrap step: Crank-Nicolson-type averages with explicit
    /// nonlinear terms at level 0, split into two constant-coefficient
    /// subproblem pairs and a closed-form scalar update.
    pub fn bdf1_step(&mut self, state: &SavState) -> Result<SavState, SavError> {
        let dt = self.scheme.dt;
        let t1 = dt;
        let t_final = self.scheme.t_final;
        let (a, bcoef) = (1.0 / dt, 0.5);
        let (f1, g1) = self.loads(t1);

        // subproblem 1: loads and history
        let mut rhs_u = f1.0.clone();
        let m0_u0 = crate::system::spmv(&self.ops.m0, &state.u);
        let a0_u0 = crate::system::spmv(&self.ops.a0, &state.u);
        for i in 0..rhs_u.len() {
            rhs_u[i] += m0_u0[i] / dt - 0.5 * a0_u0[i];
        }
        let vel_values = self.vel_values.clone();
        let (u1, p1, _) = self.ops.solve_stokes(a, bcoef, &rhs_u, &vel_values)?;

        let mut rhs_b = g1.0.clone();
        let m1_b0 = crate::system::spmv(&self.ops.m1, &state.b);
        let a1_b0 = crate::system::spmv(&self.ops.a1, &state.b);
        for i in 0..rhs_b.len() {
            rhs_b[i] += m1_b0[i] / dt - 0.5 * a1_b0[i];
        }
        let mag_values = self.mag_values.clone();
        let b1 = self.ops.solve_magnetic(a, bcoef, &rhs_b, &mag_values)?;

        // subproblem 2: explicit nonlinear terms at level 0
        let physics = self.scheme.physics;
        let c0 = c0h_force(self.disc, &state.u, &state.u);
        let c1v = c1h_force_velocity(self.disc, &physics, &state.b, &state.b);
        let c1m = c1h_force_magnetic(self.disc, &physics, &state.b, &state.u);
        let mut rhs_u2 = c0.clone();
        rhs_u2.axpy(1.0, &c1v);
        let vel_zeros = self.vel_zeros.clone();
        let (u2, p2, _) = self.ops.solve_stokes(a, bcoef, &rhs_u2, &vel_zeros)?;
        let rhs_b2: Vec<f64> = c1m.iter().map(|v| -v).collect();
        let mag_zeros = self.mag_zeros.clone();
        let b2 = self.ops.solve_magnetic(a, bcoef, &rhs_b2, &mag_zeros)?;

        // scalar update
        let q1 = q_exact(t1, t_final);
        let den_tri = dot(&c0, &u2) + dot(&c1v, &u2) - dot(&c1m, &b2);
        let quad = (self.ops.quad_m0(&u2) + self.ops.quad_m1(&b2)) / dt
            + 0.5 * (self.ops.quad_a0(&u2) + self.ops.quad_a1(&b2));
        self.check_positivity(1, den_tri, quad)?;
        let denominator = (dt + t_final) / (t_final * dt) + den_tri / (q1 * q1);
        if denominator <= 0.0 {
            return Err(SavError::Solvability { step: 1, denominator });
        }
        let num_tri = dot(&c0, &u1) + dot(&c1v, &u1) - dot(&c1m, &b1);
        let qh1 = (state.q / dt - num_tri / q1) / denominator;
        let xi = qh1 / q1;

        let u = DofVector::lin_comb(1.0, &u1, xi, &u2);
        let b = DofVector::lin_comb(1.0, &b1, xi, &b2);
        let p = DofVector::lin_comb(1.0, &p1, xi, &p2);
        let next = SavState {
            level: 1,
            prev_u: state.u.clone(),
            prev_b: state.b.clone(),
            prev_q: state.q,
            u,
            b,
            p,
            q: qh1,
        };
        self.check_finite(1, &next)?;
        Ok(next)
    }

    /// One BDF2 step from level `n` (with history `n-1`) to `n+1`.
    pub fn bdf2_step(&mut self, state: &SavState) -> Result<SavState, SavError> {
        let dt = self.scheme.dt;
        let n1 = state.level + 1;
        let t = n1 as f64 * dt;
        let t_final = self.scheme.t_final;
        let (a, bcoef) = (1.5 / dt, 1.0);
        let (f, g) = self.loads(t);

        let ubar = DofVector::lin_comb(2.0, &state.u, -1.0, &state.prev_u);
        let bbar = DofVector::lin_comb(2.0, &state.b, -1.0, &state.prev_b);

        let hist_u = DofVector::lin_comb(4.0, &state.u, -1.0, &state.prev_u);
        let mut rhs_u = f.0.clone();
        let m0_h = crate::system::spmv(&self.ops.m0, &hist_u);
        for i in 0..rhs_u.len() {
            rhs_u[i] += m0_h[i] / (2.0 * dt);
        }
        let vel_values = self.vel_values.clone();
        let (u1, p1, _) = self.ops.solve_stokes(a, bcoef, &rhs_u, &vel_values)?;

        let hist_b = DofVector::lin_comb(4.0, &state.b, -1.0, &state.prev_b);
        let mut rhs_b = g.0.clone();
        let m1_h = crate::system::spmv(&self.ops.m1, &hist_b);
        for i in 0..rhs_b.len() {
            rhs_b[i] += m1_h[i] / (2.0 * dt);
        }
        let mag_values = self.mag_values.clone();
        let b1 = self.ops.solve_magnetic(a, bcoef, &rhs_b, &mag_values)?;

        let physics = self.scheme.physics;
        let c0 = c0h_force(self.disc, &ubar, &ubar);
        let c1v = c1h_force_velocity(self.disc, &physics, &bbar, &bbar);
        let c1m = c1h_force_magnetic(self.disc, &physics, &bbar, &ubar);
        let mut rhs_u2 = c0.clone();
        rhs_u2.axpy(1.0, &c1v);
        let vel_zeros = self.vel_zeros.clone();
        let (u2, p2, _) = self.ops.solve_stokes(a, bcoef, &rhs_u2, &vel_zeros)?;
        let rhs_b2: Vec<f64> = c1m.iter().map(|v| -v).collect();
        let mag_zeros = self.mag_zeros.clone();
        let b2 = self.ops.solve_magnetic(a, bcoef, &rhs_b2, &mag_zeros)?;

        let qn1 = q_exact(t, t_final);
        let den_tri = dot(&c0, &u2) + dot(&c1v, &u2) - dot(&c1m, &b2);
        let quad = 1.5 * (self.ops.quad_m0(&u2) + self.ops.quad_m1(&b2)) / dt
            + self.ops.quad_a0(&u2)
            + self.ops.quad_a1(&b2);
        self.check_positivity(n1, den_tri, quad)?;
        let denominator = 1.5 / dt + 1.0 / t_final + den_tri / (qn1 * qn1);
        if denominator <= 0.0 {
            return Err(SavError::Solvability { step: n1, denominator });
        }
        let num_tri = dot(&c0, &u1) + dot(&c1v, &u1) - dot(&c1m, &b1);
        let qh = ((4.0 * state.q - state.prev_q) / (2.0 * dt) - num_tri / qn1) / denominator;
        let xi = qh / qn1;

        let u = DofVector::lin_comb(1.0, &u1, xi, &u2);
        let b = DofVector::lin_comb(1.0, &b1, xi, &b2);
        let p = DofVector::lin_comb(1.0, &p1, xi, &p2);

        // decoupling-correctness residual of the unsplit system
        self.last_residual = Some(self.unsplit_residual(
            state, &u, &b, &p, qh, &c0, &c1v, &c1m, &f, &g, t,
        ));

        let next = SavState {
            level: n1,
            prev_u: state.u.clone(),
            prev_b: state.b.clone(),
            prev_q: state.q,
            u,
            b,
            p,
            q: qh,
        };
        self.check_finite(n1, &next)?;
        Ok(next)
    }

    fn check_positivity(&self, step: usize, lhs: f64, rhs: f64) -> Result<(), SavError> {
        let tol = 1e-9 * lhs.abs().max(rhs.abs()).max(1e-12);
        if (lhs - rhs).abs() > tol {
            return Err(SavError::PositivityIdentity { step, lhs, rhs });
        }
        Ok(())
    }

    fn check_finite(&self, step: usize, s: &SavState) -> Result<(), SavError> {
        if s.u.is_finite() && s.b.is_finite() && s.p.is_finite() && s.q.is_finite() {
            Ok(())
        } else {
            Err(SavError::NonFinite { step })
        }
    }

    /// Plug the recombined solution into the unsplit BDF2 equations and
    /// measure the relative residuals on the free dofs.
    #[allow(clippy::too_many_arguments)]
    fn unsplit_residual(
        &self,
        state: &SavState,
        u: &DofVector,
        b: &DofVector,
        p: &DofVector,
        qh: f64,
        c0: &DofVector,
        c1v: &DofVector,
        c1m: &DofVector,
        f: &DofVector,
        g: &DofVector,
        t: f64,
    ) -> DecouplingResidual {
        let dt = self.scheme.dt;
        let qn1 = q_exact(t, self.scheme.t_final);
        let xi = qh / qn1;
        // momentum: M0(3u - 4uⁿ + u^{n-1})/(2dt) + A0 u + Dᵀp - ξ(c0 + c1v) - f
        let bdf = DofVector::lin_comb(3.0, u, -4.0, &state.u);
        let bdf = DofVector::lin_comb(1.0, &bdf, 1.0, &state.prev_u);
        let r_u = crate::system::spmv(&self.ops.m0, &bdf);
        let a0u = crate::system::spmv(&self.ops.a0, u);
        // Dᵀ p: d lives as (pressure rows × velocity cols)
        let dtp = {
            // (Dᵀp)_j = Σ_r d[r, j] p_r over the stored columns of d
            // (columns are velocity dofs in the pressure-rows layout)
            let dp = &self.ops.d;
            let rows = dp.symbolic().row_idx();
            let vals = dp.val();
            let mut out = vec![0.0; self.ops.n_u];
            for (j, o) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for k in dp.col_range(j) {
                    s += vals[k] * p[rows[k]];
                }
                *o = s;
            }
            out
        };
        let scale_u = self.scheme.dt.recip();
        let mut num_u = 0.0;
        let mut den_u = 0.0;
        let vel_fixed: std::collections::HashSet<usize> =
            self.ops.vel_fixed().iter().copied().collect();
        for i in 0..self.ops.n_u {
            if vel_fixed.contains(&i) {
                continue;
            }
            let val = r_u[i] / (2.0 * dt) + a0u[i] + dtp[i] - xi * (c0[i] + c1v[i]) - f[i];
            num_u += val * val;
            den_u += (f[i].abs() + scale_u * r_u[i].abs() + a0u[i].abs()).powi(2);
        }

        // induction: M1(3b - 4bⁿ + b^{n-1})/(2dt) + A1 b + ξ c1m - g
        let bdfb = DofVector::lin_comb(3.0, b, -4.0, &state.b);
        let bdfb = DofVector::lin_comb(1.0, &bdfb, 1.0, &state.prev_b);
        let m1_bdf = crate::system::spmv(&self.ops.m1, &bdfb);
        let a1b = crate::system::spmv(&self.ops.a1, b);
        let mag_fixed: std::collections::HashSet<usize> =
            self.ops.mag_fixed().iter().copied().collect();
        let mut num_b = 0.0;
        let mut den_b = 0.0;
        for i in 0..self.ops.n_m {
            if mag_fixed.contains(&i) {
                continue;
            }
            let val = m1_bdf[i] / (2.0 * dt) + a1b[i] + xi * c1m[i] - g[i];
            num_b += val * val;
            den_b += (g[i].abs() + m1_bdf[i].abs() / (2.0 * dt) + a1b[i].abs()).powi(2);
        }

        // continuity residual: ‖D u‖ relative to ‖u‖ scale
        let du = crate::system::spmv(&self.ops.d, u);
        let num_c: f64 = du.iter().map(|v| v * v).sum::<f64>().sqrt();
        let den_c = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);

        // scalar equation residual
        let tri_new = dot(c0, u) + dot(c1v, u) - dot(c1m, b);
        let lhs = (3.0 * qh - 4.0 * state.q + state.prev_q) / (2.0 * dt);
        let rhs = -qh / self.scheme.t_final - tri_new / qn1;
        let scal_scale = lhs.abs().max(rhs.abs()).max(1e-12);

        DecouplingResidual {
            momentum: (num_u / den_u.max(1e-300)).sqrt(),
            induction: (num_b / den_b.max(1e-300)).sqrt(),
            continuity: num_c / den_c,
            scalar: (lhs - rhs).abs() / scal_scale,
        }
    }

    /// Discrete energies of a state.
    pub fn energy(&self, state: &SavState) -> EnergyRecord {
        EnergyRecord {
            kinetic: self.ops.quad_m0(&state.u),
            magnetic: self.ops.quad_m1(&state.b),
            q_sq: state.q * state.q,
            diss_velocity: self.ops.quad_a0(&state.u),
            diss_magnetic: self.ops.quad_a1(&state.b),
            div_u: self.disc.divergence_l2(&state.u),
        }
    }

    /// The telescoped stability quantity of a level-`n ≥ 1` state:
    /// `½[m0h(u,u) + m0h(ū,ū) + m1h(b,b) + m1h(b̄,b̄) + q² + q̄²]` with
    /// `v̄ = 2v - v_prev`.
    pub fn telescoped_energy(&self, state: &SavState) -> f64 {
        let ubar = DofVector::lin_comb(2.0, &state.u, -1.0, &state.prev_u);
        let bbar = DofVector::lin_comb(2.0, &state.b, -1.0, &state.prev_b);
        let qbar = 2.0 * state.q - state.prev_q;
        0.5 * (self.ops.quad_m0(&state.u)
            + self.ops.quad_m0(&ubar)
            + self.ops.quad_m1(&state.b)
            + self.ops.quad_m1(&bbar)
            + state.q * state.q
            + qbar * qbar)
    }

    /// Dissipation increment `2Δt [a0h(u,u) + a1h(b,b) + q²/T]` of a state.
    pub fn dissipation_increment(&self, state: &SavState) -> f64 {
        2.0 * self.scheme.dt
            * (self.ops.quad_a0(&state.u)
                + self.ops.quad_a1(&state.b)
                + state.q * state.q / self.scheme.t_final)
    }

    /// Run the whole scheme: interpolate initial data, one BDF1 step, then
    /// BDF2 steps to the final time. The observer sees every computed level.
    pub fn run(
        &mut self,
        mut observer: impl FnMut(StepInfo<'_>),
    ) -> Result<(SavState, Vec<EnergyRecord>), SavError> {
        let mut records = Vec::with_capacity(self.scheme.n_steps + 1);
        let state0 = self.initial_state();
        let e0 = self.energy(&state0);
        observer(StepInfo { step: 0, time: 0.0, state: &state0, energy: &e0 });
        records.push(e0);

        let mut state = self.bdf1_step(&state0)?;
        let e1 = self.energy(&state);
        observer(StepInfo { step: 1, time: self.scheme.dt, state: &state, energy: &e1 });
        records.push(e1);

        for n in 1..self.scheme.n_steps {
            state = self.bdf2_step(&state)?;
            let e = self.energy(&state);
            observer(StepInfo {
                step: n + 1,
                time: (n + 1) as f64 * self.scheme.dt,
                state: &state,
                energy: &e,
            });
            records.push(e);
        }
        Ok((state, records))
    }
}

fn side_set_of(
    bc: &crate::mesh::BoundaryClassification,
    disc: &Discretization,
    p: Point2,
) -> crate::mesh::SideSet {
    // recover the side set of a boundary point from the nearest tagged vertex
    // or edge; used only for constraint value assignment
    let mesh = disc.mesh();
    for &v in mesh.boundary_vertices() {
        if mesh.vertex(v).dist(p) < 1e-12 {
            return bc.vertex_sides[v];
        }
    }
    // edge midpoint: the two endpoint side sets share exactly the edge's side
    for &e in mesh.boundary_edges() {
        let edge = mesh.edge(e);
        let (a, b) = (mesh.vertex(edge.a), mesh.vertex(edge.b));
        let mid = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        if mid.dist(p) < 1e-12 {
            let mut s = crate::mesh::SideSet::default();
            if let Some(side) = bc.edge_sides[e] {
                s.insert(side);
            }
            return s;
        }
    }
    crate::mesh::SideSet::default()
}
