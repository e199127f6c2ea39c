//! Manufactured solutions, forcing synthesis, computable VEM error norms and
//! convergence rates.

use crate::forms::MhdParams;
use crate::mesh::Point2;
use crate::poly::{poly_dim, polygon_quadrature};
use crate::spaces::{Discretization, DofVector};
use std::f64::consts::PI;

/// A smooth space-time field with the derivatives the forcing synthesis and
/// error norms need.
pub struct ManufacturedSolution {
    pub params: MhdParams,
    pub t_final: f64,
    pub u: Box<dyn Fn(Point2, f64) -> (f64, f64) + Send + Sync>,
    pub u_t: Box<dyn Fn(Point2, f64) -> (f64, f64) + Send + Sync>,
    /// `[∂₁u₁, ∂₂u₁, ∂₁u₂, ∂₂u₂]`
    pub u_grad: Box<dyn Fn(Point2, f64) -> [f64; 4] + Send + Sync>,
    pub u_lap: Box<dyn Fn(Point2, f64) -> (f64, f64) + Send + Sync>,
    pub b: Box<dyn Fn(Point2, f64) -> (f64, f64) + Send + Sync>,
    pub b_t: Box<dyn Fn(Point2, f64) -> (f64, f64) + Send + Sync>,
    pub b_grad: Box<dyn Fn(Point2, f64) -> [f64; 4] + Send + Sync>,
    /// scalar `curl b = ∂₁b₂ - ∂₂b₁`
    pub b_curl: Box<dyn Fn(Point2, f64) -> f64 + Send + Sync>,
    pub b_curl_grad: Box<dyn Fn(Point2, f64) -> (f64, f64) + Send + Sync>,
    pub p: Box<dyn Fn(Point2, f64) -> f64 + Send + Sync>,
    pub p_grad: Box<dyn Fn(Point2, f64) -> (f64, f64) + Send + Sync>,
}

impl ManufacturedSolution {
    /// Momentum forcing `f = u_t - νΔu + (∇u)u + ∇p - μ (curl b) × b` with
    /// `s × b = s·(-b₂, b₁)`.
    pub fn forcing_f(&self, x: Point2, t: f64) -> (f64, f64) {
        let MhdParams { nu, mu, .. } = self.params;
        let ut = (self.u_t)(x, t);
        let lap = (self.u_lap)(x, t);
        let g = (self.u_grad)(x, t);
        let u = (self.u)(x, t);
        let conv = (g[0] * u.0 + g[1] * u.1, g[2] * u.0 + g[3] * u.1);
        let pg = (self.p_grad)(x, t);
        let s = (self.b_curl)(x, t);
        let b = (self.b)(x, t);
        let lorentz = (s * (-b.1), s * b.0);
        (
            ut.0 - nu * lap.0 + conv.0 + pg.0 - mu * lorentz.0,
            ut.1 - nu * lap.1 + conv.1 + pg.1 - mu * lorentz.1,
        )
    }

    /// Induction forcing `g = μ b_t + σ⁻¹ curl curl b - μ curl(u × b)`, where
    /// `u × b = u₁b₂ - u₂b₁` and `curl φ = (∂₂φ, -∂₁φ)` for scalars.
    pub fn forcing_g(&self, x: Point2, t: f64) -> (f64, f64) {
        let MhdParams { mu, sigma, .. } = self.params;
        let bt = (self.b_t)(x, t);
        let sg = (self.b_curl_grad)(x, t);
        let curl_curl = (sg.1, -sg.0);
        // ∂ᵢ(u×b) by the product rule
        let u = (self.u)(x, t);
        let b = (self.b)(x, t);
        let gu = (self.u_grad)(x, t);
        let gb = (self.b_grad)(x, t);
        let w1 = gu[0] * b.1 + u.0 * gb[2] - gu[2] * b.0 - u.1 * gb[0];
        let w2 = gu[1] * b.1 + u.0 * gb[3] - gu[3] * b.0 - u.1 * gb[1];
        (
            mu * bt.0 + curl_curl.0 / sigma - mu * w2,
            mu * bt.1 + curl_curl.1 / sigma - mu * (-w1),
        )
    }

}

fn decay(t: f64) -> f64 {
    (-t).exp() * t.cos()
}

fn decay_dt(t: f64) -> f64 {
    -(-t).exp() * (t.cos() + t.sin())
}

/// The decaying trigonometric solution on the unit square: a stream-function
/// velocity, a divergence-free magnetic field, and a cosine pressure, all
/// damped by `exp(-t) cos(t)`.
pub fn example1_solution() -> ManufacturedSolution {
    let u = |x: Point2, t: f64| {
        let tau = decay(t);
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        (PI * tau * sx * sx * sy * cy, -PI * tau * sx * cx * sy * sy)
    };
    let u_t = |x: Point2, t: f64| {
        let tau = decay_dt(t);
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        (PI * tau * sx * sx * sy * cy, -PI * tau * sx * cx * sy * sy)
    };
    let u_grad = |x: Point2, t: f64| {
        let tau = decay(t);
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let c2x = (2.0 * PI * x.x).cos();
        let c2y = (2.0 * PI * x.y).cos();
        [
            2.0 * PI * PI * tau * sx * cx * sy * cy,
            PI * PI * tau * sx * sx * c2y,
            -PI * PI * tau * c2x * sy * sy,
            -2.0 * PI * PI * tau * sx * cx * sy * cy,
        ]
    };
    let u_lap = |x: Point2, t: f64| {
        let tau = decay(t);
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let s2y = (2.0 * PI * x.y).sin();
        let s2x = (2.0 * PI * x.x).sin();
        let c2x = (2.0 * PI * x.x).cos();
        let c2y = (2.0 * PI * x.y).cos();
        (
            2.0 * PI * PI * PI * tau * (c2x * sy * cy - sx * sx * s2y),
            2.0 * PI * PI * PI * tau * (s2x * sy * sy - sx * cx * c2y),
        )
    };
    let b = |x: Point2, t: f64| {
        let tau = decay(t);
        (
            tau * (PI * x.x).sin() * (PI * x.y).cos(),
            -tau * (PI * x.x).cos() * (PI * x.y).sin(),
        )
    };
    let b_t = |x: Point2, t: f64| {
        let tau = decay_dt(t);
        (
            tau * (PI * x.x).sin() * (PI * x.y).cos(),
            -tau * (PI * x.x).cos() * (PI * x.y).sin(),
        )
    };
    let b_grad = |x: Point2, t: f64| {
        let tau = decay(t);
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        [
            PI * tau * cx * cy,
            -PI * tau * sx * sy,
            PI * tau * sx * sy,
            -PI * tau * cx * cy,
        ]
    };
    let b_curl = |x: Point2, t: f64| {
        2.0 * PI * decay(t) * (PI * x.x).sin() * (PI * x.y).sin()
    };
    let b_curl_grad = |x: Point2, t: f64| {
        let tau = decay(t);
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        (2.0 * PI * PI * tau * cx * sy, 2.0 * PI * PI * tau * sx * cy)
    };
    let p = |x: Point2, t: f64| decay(t) * (PI * x.x).cos() * (PI * x.y).cos();
    let p_grad = |x: Point2, t: f64| {
        let tau = decay(t);
        (
            -PI * tau * (PI * x.x).sin() * (PI * x.y).cos(),
            -PI * tau * (PI * x.x).cos() * (PI * x.y).sin(),
        )
    };

    ManufacturedSolution {
        params: MhdParams::default(),
        t_final: 1.0,
        u: Box::new(u),
        u_t: Box::new(u_t),
        u_grad: Box::new(u_grad),
        u_lap: Box::new(u_lap),
        b: Box::new(b),
        b_t: Box::new(b_t),
        b_grad: Box::new(b_grad),
        b_curl: Box::new(b_curl),
        b_curl_grad: Box::new(b_curl_grad),
        p: Box::new(p),
        p_grad: Box::new(p_grad),
    }
}

/// Computable error quantities of one run at the final time.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub level: u32,
    pub h: f64,
    pub err_u_l2: f64,
    pub err_u_h1: f64,
    pub err_b_l2: f64,
    pub err_b_h1: f64,
    pub err_p_l2: f64,
    pub err_q: f64,
    pub div_u: f64,
}

/// Compute the VEM error norms against the exact solution at time `t`:
/// `Π⁰` projections for L² errors, `Π^∇` for the H¹-type errors (the
/// velocity uses the H¹ seminorm, the magnetic field the full H¹ norm), the
/// mean-adjusted pressure difference, and `|q(t) - q_h|`.
#[allow(clippy::too_many_arguments)]
pub fn compute_errors(
    disc: &Discretization,
    exact: &ManufacturedSolution,
    t: f64,
    u_h: &DofVector,
    b_h: &DofVector,
    p_h: &DofVector,
    q_h: f64,
    level: u32,
    h: f64,
) -> ErrorReport {
    let k = disc.k;
    let nk = poly_dim(k);
    let np = poly_dim(k - 1);
    let order = 2 * k + 5;

    // exact-pressure mean over the domain
    let mut p_mean = 0.0;
    let mut area = 0.0;
    for c in 0..disc.mesh().n_cells() {
        let pts = disc.mesh().cell_points(c);
        let quad = polygon_quadrature(&pts, order).expect("valid cell");
        p_mean += quad.integrate(|x| (exact.p)(x, t));
        area += quad.total_weight();
    }
    p_mean /= area;

    let mut e_u_l2 = 0.0;
    let mut e_u_h1 = 0.0;
    let mut e_b_l2 = 0.0;
    let mut e_b_h1 = 0.0;
    let mut e_p = 0.0;
    for (c, el) in disc.elements.iter().enumerate() {
        let pts = disc.mesh().cell_points(c);
        let quad = polygon_quadrature(&pts, order).expect("valid cell");
        let u_loc = disc.velocity.gather(c, u_h);
        let b_loc = disc.magnetic.gather(c, b_h);
        let u0 = el.velocity.pi0.matvec(&u_loc);
        let un = el.velocity.pi_nabla.matvec(&u_loc);
        let b0 = el.magnetic.pi0.matvec(&b_loc);
        let bn = el.magnetic.pi_nabla.matvec(&b_loc);
        let p_loc = disc.pressure.gather(c, p_h);
        let low = el.basis.with_degree(k - 1);

        for (&x, &w) in quad.points.iter().zip(&quad.weights) {
            let m = el.basis.eval_all(x);
            let g = el.basis.eval_grad_all(x);
            let eval = |coef: &[f64]| -> (f64, f64) {
                let mut vx = 0.0;
                let mut vy = 0.0;
                for i in 0..nk {
                    vx += coef[i] * m[i];
                    vy += coef[nk + i] * m[i];
                }
                (vx, vy)
            };
            let eval_grad = |coef: &[f64]| -> [f64; 4] {
                let mut out = [0.0; 4];
                for i in 0..nk {
                    out[0] += coef[i] * g[i].0;
                    out[1] += coef[i] * g[i].1;
                    out[2] += coef[nk + i] * g[i].0;
                    out[3] += coef[nk + i] * g[i].1;
                }
                out
            };

            let ue = (exact.u)(x, t);
            let uge = (exact.u_grad)(x, t);
            let (ux, uy) = eval(&u0);
            e_u_l2 += w * ((ue.0 - ux).powi(2) + (ue.1 - uy).powi(2));
            let ugn = eval_grad(&un);
            for i in 0..4 {
                e_u_h1 += w * (uge[i] - ugn[i]).powi(2);
            }

            let be = (exact.b)(x, t);
            let bge = (exact.b_grad)(x, t);
            let (bx, by) = eval(&b0);
            e_b_l2 += w * ((be.0 - bx).powi(2) + (be.1 - by).powi(2));
            let (bnx, bny) = eval(&bn);
            e_b_h1 += w * ((be.0 - bnx).powi(2) + (be.1 - bny).powi(2));
            let bgn = eval_grad(&bn);
            for i in 0..4 {
                e_b_h1 += w * (bge[i] - bgn[i]).powi(2);
            }

            let pe = (exact.p)(x, t) - p_mean;
            let ml = low.eval_all(x);
            let ph: f64 = (0..np).map(|i| p_loc[i] * ml[i]).sum();
            e_p += w * (pe - ph).powi(2);
        }
    }

    ErrorReport {
        level,
        h,
        err_u_l2: e_u_l2.sqrt(),
        err_u_h1: e_u_h1.sqrt(),
        err_b_l2: e_b_l2.sqrt(),
        err_b_h1: e_b_h1.sqrt(),
        err_p_l2: e_p.sqrt(),
        err_q: (crate::sav::q_exact(t, exact.t_final) - q_h).abs(),
        div_u: disc.divergence_l2(u_h),
    }
}

/// `rate = log(e_l / e_{l+1}) / log(h_l / h_{l+1})`; `None` when either error
/// vanishes.
pub fn convergence_rates(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(errors.len(), hs.len());
    let mut out = Vec::new();
    for i in 1..errors.len() {
        if errors[i - 1] <= 0.0 || errors[i] <= 0.0 {
            out.push(None);
        } else {
            out.push(Some((errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_points() -> Vec<(Point2, f64)> {
        let mut out = Vec::new();
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            out.push((Point2::new(0.05 + 0.9 * next(), 0.05 + 0.9 * next()), next()));
        }
        out
    }

    #[test]
    fn divergence_free_at_random_points() {
        let ms = example1_solution();
        for (x, t) in sample_points() {
            let g = (ms.u_grad)(x, t);
            assert!((g[0] + g[3]).abs() < 1e-12, "div u at ({}, {}): {}", x.x, x.y, g[0] + g[3]);
            let gb = (ms.b_grad)(x, t);
            assert!((gb[0] + gb[3]).abs() < 1e-12, "div b");
        }
    }

    #[test]
    fn plug_in_values() {
        let ms = example1_solution();
        // b(0.5, 0.5, 0) = (sin(π/2)cos(π/2), -cos(π/2)sin(π/2)) = (0, 0)
        let b = (ms.b)(Point2::new(0.5, 0.5), 0.0);
        assert!(b.0.abs() < 1e-15 && b.1.abs() < 1e-15);
        // q(0) = 1, q(T) = 1/e
        assert_eq!(crate::sav::q_exact(0.0, 1.0), 1.0);
        assert!((crate::sav::q_exact(1.0, 1.0) - (-1.0_f64).exp()).abs() < 1e-15);
        assert!((crate::sav::q_exact(0.5, 1.0) - (-0.5_f64).exp()).abs() < 1e-15);
    }

    /// Fourth-order finite differences of the bare field closures reproduce
    /// the hand-coded derivatives and the synthesized forcings.
    #[test]
    fn finite_difference_cross_check() {
        let ms = example1_solution();
        let eps = 1e-3;
        let d1 = |f: &dyn Fn(f64) -> f64, x: f64| {
            (f(x - 2.0 * eps) - 8.0 * f(x - eps) + 8.0 * f(x + eps) - f(x + 2.0 * eps))
                / (12.0 * eps)
        };
        let d2 = |f: &dyn Fn(f64) -> f64, x: f64| {
            (-f(x - 2.0 * eps) + 16.0 * f(x - eps) - 30.0 * f(x) + 16.0 * f(x + eps)
                - f(x + 2.0 * eps))
                / (12.0 * eps * eps)
        };
        for (x, t) in sample_points() {
            // u_t
            let ut = (ms.u_t)(x, t);
            let fd_ut0 = d1(&|s| (ms.u)(x, s).0, t);
            let fd_ut1 = d1(&|s| (ms.u)(x, s).1, t);
            assert!((ut.0 - fd_ut0).abs() < 1e-7 && (ut.1 - fd_ut1).abs() < 1e-7);

            // gradient entries
            let g = (ms.u_grad)(x, t);
            let fd = [
                d1(&|s| (ms.u)(Point2::new(s, x.y), t).0, x.x),
                d1(&|s| (ms.u)(Point2::new(x.x, s), t).0, x.y),
                d1(&|s| (ms.u)(Point2::new(s, x.y), t).1, x.x),
                d1(&|s| (ms.u)(Point2::new(x.x, s), t).1, x.y),
            ];
            for i in 0..4 {
                assert!((g[i] - fd[i]).abs() < 1e-6, "u_grad[{i}]: {} vs {}", g[i], fd[i]);
            }

            // laplacian
            let lap = (ms.u_lap)(x, t);
            let fd_lap0 = d2(&|s| (ms.u)(Point2::new(s, x.y), t).0, x.x)
                + d2(&|s| (ms.u)(Point2::new(x.x, s), t).0, x.y);
            let fd_lap1 = d2(&|s| (ms.u)(Point2::new(s, x.y), t).1, x.x)
                + d2(&|s| (ms.u)(Point2::new(x.x, s), t).1, x.y);
            assert!((lap.0 - fd_lap0).abs() < 1e-5, "{} vs {fd_lap0}", lap.0);
            assert!((lap.1 - fd_lap1).abs() < 1e-5);

            // curl b and its gradient
            let s = (ms.b_curl)(x, t);
            let fd_s = d1(&|z| (ms.b)(Point2::new(z, x.y), t).1, x.x)
                - d1(&|z| (ms.b)(Point2::new(x.x, z), t).0, x.y);
            assert!((s - fd_s).abs() < 1e-6);
            let sg = (ms.b_curl_grad)(x, t);
            let fd_sgx = d1(&|z| (ms.b_curl)(Point2::new(z, x.y), t), x.x);
            let fd_sgy = d1(&|z| (ms.b_curl)(Point2::new(x.x, z), t), x.y);
            assert!((sg.0 - fd_sgx).abs() < 1e-6 && (sg.1 - fd_sgy).abs() < 1e-6);

            // forcing synthesis against a fully finite-difference route
            let f = ms.forcing_f(x, t);
            let nu = ms.params.nu;
            let mu = ms.params.mu;
            let u = (ms.u)(x, t);
            let conv = (fd[0] * u.0 + fd[1] * u.1, fd[2] * u.0 + fd[3] * u.1);
            let pgx = d1(&|z| (ms.p)(Point2::new(z, x.y), t), x.x);
            let pgy = d1(&|z| (ms.p)(Point2::new(x.x, z), t), x.y);
            let b = (ms.b)(x, t);
            let f_fd = (
                fd_ut0 - nu * fd_lap0 + conv.0 + pgx - mu * fd_s * (-b.1),
                fd_ut1 - nu * fd_lap1 + conv.1 + pgy - mu * fd_s * b.0,
            );
            assert!(
                (f.0 - f_fd.0).abs() < 1e-5 && (f.1 - f_fd.1).abs() < 1e-5,
                "f: ({}, {}) vs ({}, {})",
                f.0,
                f.1,
                f_fd.0,
                f_fd.1
            );

            // induction forcing
            let gfn = ms.forcing_g(x, t);
            let sigma = ms.params.sigma;
            let bt = (
                d1(&|z| (ms.b)(x, z).0, t),
                d1(&|z| (ms.b)(x, z).1, t),
            );
            let w = |pt: Point2| {
                let uu = (ms.u)(pt, t);
                let bb = (ms.b)(pt, t);
                uu.0 * bb.1 - uu.1 * bb.0
            };
            let wgx = d1(&|z| w(Point2::new(z, x.y)), x.x);
            let wgy = d1(&|z| w(Point2::new(x.x, z)), x.y);
            let g_fd = (
                mu * bt.0 + fd_sgy / sigma - mu * wgy,
                mu * bt.1 - fd_sgx / sigma + mu * wgx,
            );
            assert!(
                (gfn.0 - g_fd.0).abs() < 1e-5 && (gfn.1 - g_fd.1).abs() < 1e-5,
                "g: ({}, {}) vs ({}, {})",
                gfn.0,
                gfn.1,
                g_fd.0,
                g_fd.1
            );
        }
    }

    #[test]
    fn rate_arithmetic() {
        let r = convergence_rates(&[4.0, 1.0], &[2.0, 1.0]);
        assert!((r[0].unwrap() - 2.0).abs() < 1e-14);
        let r = convergence_rates(&[1.0, 1.0], &[2.0, 1.0]);
        assert!(r[0].unwrap().abs() < 1e-14);
        let r = convergence_rates(&[0.0, 1.0], &[2.0, 1.0]);
        assert!(r[0].is_none());
        // Table-style pair: 1.5820e-2 -> 3.8417e-3 over one halving
        let r = convergence_rates(&[1.5820e-2, 3.8417e-3], &[0.1414, 0.0707]);
        assert!((r[0].unwrap() - 2.04).abs() < 5e-3, "{:?}", r[0]);
    }
}
