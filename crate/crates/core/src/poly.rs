//! Scaled monomial bases on elements, exact polynomial calculus, and
//! quadrature on segments and polygons.
//!
//! All element-local polynomials are expressed in the scaled monomial basis
//! `m_α(x) = ((x - x_E)/h_E)^α`, ordered degree-lexicographically:
//! `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), …` so that a degree-k
//! coefficient vector is a prefix of a degree-(k+1) one.

use crate::la::DMat;
use crate::mesh::Point2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("operation needs polynomial degree {needed} but the cap is {cap}")]
    DegreeOverflow { needed: usize, cap: usize },
    #[error("coefficient vector has length {got}, expected {expected} for degree {degree}")]
    BadCoeffLen { got: usize, expected: usize, degree: usize },
    #[error("cannot triangulate polygon: {0}")]
    Triangulation(String),
    #[error("quadrature order must be at least 0")]
    BadOrder,
}

/// dim ℙ_k in two variables.
pub fn poly_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponent pairs `(a, b)` with `a + b <= k` in the canonical order.
pub fn exponents(k: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(poly_dim(k));
    for d in 0..=k as u32 {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

/// Index of exponent `(a, b)` in the canonical order.
pub fn exponent_index(a: u32, b: u32) -> usize {
    let d = (a + b) as usize;
    d * (d + 1) / 2 + (d as u32 - a) as usize
}

/// Scaled monomial basis of ℙ_k(E).
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub degree: usize,
    pub centroid: Point2,
    pub h: f64,
}

impl MonomialBasis {
    pub fn new(degree: usize, centroid: Point2, h: f64) -> Self {
        Self { degree, centroid, h }
    }

    pub fn dim(&self) -> usize {
        poly_dim(self.degree)
    }

    /// Same scaling, different degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        Self { degree, ..*self }
    }

    fn local(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.centroid.x) / self.h, (p.y - self.centroid.y) / self.h)
    }

    /// Values of all basis monomials at `p`.
    pub fn eval_all(&self, p: Point2) -> Vec<f64> {
        let (xi, eta) = self.local(p);
        let k = self.degree;
        // powers up front, then gather
        let mut xp = vec![1.0; k + 1];
        let mut yp = vec![1.0; k + 1];
        for i in 1..=k {
            xp[i] = xp[i - 1] * xi;
            yp[i] = yp[i - 1] * eta;
        }
        exponents(k).iter().map(|&(a, b)| xp[a as usize] * yp[b as usize]).collect()
    }

    /// Gradients of all basis monomials at `p`.
    pub fn eval_grad_all(&self, p: Point2) -> Vec<(f64, f64)> {
        let (xi, eta) = self.local(p);
        let k = self.degree;
        let mut xp = vec![1.0; k + 1];
        let mut yp = vec![1.0; k + 1];
        for i in 1..=k {
            xp[i] = xp[i - 1] * xi;
            yp[i] = yp[i - 1] * eta;
        }
        exponents(k)
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (a as usize, b as usize);
                let gx = if a > 0 { a as f64 / self.h * xp[a - 1] * yp[b] } else { 0.0 };
                let gy = if b > 0 { b as f64 / self.h * xp[a] * yp[b - 1] } else { 0.0 };
                (gx, gy)
            })
            .collect()
    }

    pub fn eval_poly(&self, coeffs: &[f64], p: Point2) -> f64 {
        self.eval_all(p).iter().zip(coeffs).map(|(m, c)| m * c).sum()
    }

    pub fn eval_poly_grad(&self, coeffs: &[f64], p: Point2) -> (f64, f64) {
        let g = self.eval_grad_all(p);
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (gi, c) in g.iter().zip(coeffs) {
            gx += gi.0 * c;
            gy += gi.1 * c;
        }
        (gx, gy)
    }
}

fn check_len(coeffs: &[f64], degree: usize) -> Result<(), PolyError> {
    let expected = poly_dim(degree);
    if coeffs.len() != expected {
        return Err(PolyError::BadCoeffLen { got: coeffs.len(), expected, degree });
    }
    Ok(())
}

/// Coefficients of `∇p` for scalar `p` ∈ ℙ_k: two coefficient vectors of
/// degree `k-1` (degree saturates at 0 for constants).
pub fn gradient(basis: &MonomialBasis, coeffs: &[f64]) -> Result<[Vec<f64>; 2], PolyError> {
    let k = basis.degree;
    check_len(coeffs, k)?;
    let out_deg = k.saturating_sub(1);
    let n_out = poly_dim(out_deg);
    let mut gx = vec![0.0; n_out];
    let mut gy = vec![0.0; n_out];
    for (idx, &(a, b)) in exponents(k).iter().enumerate() {
        let c = coeffs[idx];
        if c == 0.0 {
            continue;
        }
        if a > 0 {
            gx[exponent_index(a - 1, b)] += c * a as f64 / basis.h;
        }
        if b > 0 {
            gy[exponent_index(a, b - 1)] += c * b as f64 / basis.h;
        }
    }
    Ok([gx, gy])
}

/// Coefficients of `div v` for vector `v` ∈ [ℙ_k]².
pub fn divergence(basis: &MonomialBasis, vx: &[f64], vy: &[f64]) -> Result<Vec<f64>, PolyError> {
    let k = basis.degree;
    check_len(vx, k)?;
    check_len(vy, k)?;
    let out_deg = k.saturating_sub(1);
    let mut out = vec![0.0; poly_dim(out_deg)];
    for (idx, &(a, b)) in exponents(k).iter().enumerate() {
        if a > 0 && vx[idx] != 0.0 {
            out[exponent_index(a - 1, b)] += vx[idx] * a as f64 / basis.h;
        }
        if b > 0 && vy[idx] != 0.0 {
            out[exponent_index(a, b - 1)] += vy[idx] * b as f64 / basis.h;
        }
    }
    Ok(out)
}

/// Scalar curl of a vector field: `curl v = ∂₁v₂ - ∂₂v₁`.
pub fn curl_vector(basis: &MonomialBasis, vx: &[f64], vy: &[f64]) -> Result<Vec<f64>, PolyError> {
    let k = basis.degree;
    check_len(vx, k)?;
    check_len(vy, k)?;
    let out_deg = k.saturating_sub(1);
    let mut out = vec![0.0; poly_dim(out_deg)];
    for (idx, &(a, b)) in exponents(k).iter().enumerate() {
        if a > 0 && vy[idx] != 0.0 {
            out[exponent_index(a - 1, b)] += vy[idx] * a as f64 / basis.h;
        }
        if b > 0 && vx[idx] != 0.0 {
            out[exponent_index(a, b - 1)] -= vx[idx] * b as f64 / basis.h;
        }
    }
    Ok(out)
}

/// Vector curl of a scalar field: `curl φ = (∂₂φ, -∂₁φ)`.
pub fn curl_scalar(basis: &MonomialBasis, coeffs: &[f64]) -> Result<[Vec<f64>; 2], PolyError> {
    let [gx, gy] = gradient(basis, coeffs)?;
    let neg: Vec<f64> = gx.iter().map(|v| -v).collect();
    Ok([gy, neg])
}

/// `x̂^⊥ p` with `x̂^⊥ = (-(x₂-x_{E,2}), (x₁-x_{E,1}))/h_E`, raising degree by
/// one. `cap` limits the target degree; exceeding it is an explicit error.
pub fn xperp_mul(
    basis: &MonomialBasis,
    coeffs: &[f64],
    cap: usize,
) -> Result<[Vec<f64>; 2], PolyError> {
    let k = basis.degree;
    check_len(coeffs, k)?;
    let needed = k + 1;
    if needed > cap {
        return Err(PolyError::DegreeOverflow { needed, cap });
    }
    let n_out = poly_dim(needed);
    let mut vx = vec![0.0; n_out];
    let mut vy = vec![0.0; n_out];
    for (idx, &(a, b)) in exponents(k).iter().enumerate() {
        let c = coeffs[idx];
        if c == 0.0 {
            continue;
        }
        vx[exponent_index(a, b + 1)] -= c;
        vy[exponent_index(a + 1, b)] += c;
    }
    Ok([vx, vy])
}

/// Kinds of vector polynomial bases used by the discrete spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorBasisKind {
    /// `[ℙ_k]²`, dimension `2 dim ℙ_k`
    Pk2,
    /// `𝒢_k = ∇ℙ_{k+1}`, dimension `dim ℙ_{k+1} - 1`
    Gk,
    /// `𝒢_k^⊕ = x̂^⊥ ℙ_{k-1}`, dimension `dim ℙ_{k-1}` (empty for k = 0)
    GkOplus,
}

/// A vector polynomial basis tied to a scalar monomial basis of degree `k`.
#[derive(Debug, Clone)]
pub struct VectorPolyBasis {
    pub kind: VectorBasisKind,
    pub scalar: MonomialBasis,
}

impl VectorPolyBasis {
    pub fn new(kind: VectorBasisKind, scalar: MonomialBasis) -> Self {
        Self { kind, scalar }
    }

    pub fn dim(&self) -> usize {
        let k = self.scalar.degree;
        match self.kind {
            VectorBasisKind::Pk2 => 2 * poly_dim(k),
            VectorBasisKind::Gk => poly_dim(k + 1) - 1,
            VectorBasisKind::GkOplus => {
                if k == 0 {
                    0
                } else {
                    poly_dim(k - 1)
                }
            }
        }
    }

    /// Columns = coefficients of each basis member in the `[ℙ_k]²` monomial
    /// basis (x-component coefficients stacked over y-component).
    pub fn coeff_columns(&self) -> DMat {
        let k = self.scalar.degree;
        let nk = poly_dim(k);
        let dim = self.dim();
        let mut cols = DMat::zeros(2 * nk, dim);
        match self.kind {
            VectorBasisKind::Pk2 => {
                for j in 0..dim {
                    cols[(j, j)] = 1.0;
                }
            }
            VectorBasisKind::Gk => {
                let up = self.scalar.with_degree(k + 1);
                for (j, &(a, b)) in exponents(k + 1).iter().enumerate().skip(1) {
                    let mut mono = vec![0.0; poly_dim(k + 1)];
                    mono[exponent_index(a, b)] = 1.0;
                    let [gx, gy] = gradient(&up, &mono).expect("sized");
                    for (i, &v) in gx.iter().enumerate() {
                        cols[(i, j - 1)] = v;
                    }
                    for (i, &v) in gy.iter().enumerate() {
                        cols[(nk + i, j - 1)] = v;
                    }
                }
            }
            VectorBasisKind::GkOplus => {
                let low = self.scalar.with_degree(k - 1);
                for j in 0..dim {
                    let mut mono = vec![0.0; poly_dim(k - 1)];
                    mono[j] = 1.0;
                    let [vx, vy] = xperp_mul(&low, &mono, k).expect("degree fits");
                    for (i, &v) in vx.iter().enumerate() {
                        cols[(i, j)] = v;
                    }
                    for (i, &v) in vy.iter().enumerate() {
                        cols[(nk + i, j)] = v;
                    }
                }
            }
        }
        cols
    }
}

/// Points and weights of a quadrature rule (area weights on polygons, length
/// weights on edges). Weights sum to the measure of the domain.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn integrate(&self, mut f: impl FnMut(Point2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], found by Newton iteration on
/// the Legendre polynomial.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let dpn = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = pn / dpn;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // recompute derivative at the converged node
        let (mut p0, mut p1) = (1.0_f64, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dpn = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dpn * dpn);
    }
    (nodes, weights)
}

/// Gauss rule on the segment `p → q`, exact for polynomials (of the arc-length
/// parameter) up to the given total order.
pub fn edge_quadrature(p: Point2, q: Point2, order: usize) -> Quadrature {
    let n = order / 2 + 1;
    let (nodes, ws) = gauss_legendre(n);
    let len = p.dist(q);
    let points = nodes
        .iter()
        .map(|&t| {
            let s = 0.5 * (t + 1.0);
            Point2::new(p.x + s * (q.x - p.x), p.y + s * (q.y - p.y))
        })
        .collect();
    let weights = ws.iter().map(|&w| 0.5 * len * w).collect();
    Quadrature { points, weights }
}

/// Triangulate a simple polygon: fan from the centroid when the centroid lies
/// in the kernel, otherwise ear clipping.
pub fn triangulate(pts: &[Point2]) -> Result<Vec<[Point2; 3]>, PolyError> {
    let n = pts.len();
    if n < 3 {
        return Err(PolyError::Triangulation(format!("{n} vertices")));
    }
    let c = centroid_of(pts);
    let fan_ok = (0..n).all(|i| {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        // strictly positive area unless the edge is degenerate
        (q.x - p.x) * (c.y - p.y) - (q.y - p.y) * (c.x - p.x) > 0.0
    });
    if fan_ok {
        return Ok((0..n)
            .map(|i| [c, pts[i], pts[(i + 1) % n]])
            .collect());
    }
    ear_clip(pts)
}

fn centroid_of(pts: &[Point2]) -> Point2 {
    let n = pts.len();
    let mut area = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let w = p.x * q.y - q.x * p.y;
        area += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    area *= 0.5;
    Point2::new(cx / (6.0 * area), cy / (6.0 * area))
}

fn ear_clip(pts: &[Point2]) -> Result<Vec<[Point2; 3]>, PolyError> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut tris = Vec::with_capacity(pts.len() - 2);
    let cross = |o: Point2, a: Point2, b: Point2| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut guard = 0usize;
    while idx.len() > 3 {
        guard += 1;
        if guard > 10 * pts.len() * pts.len() {
            return Err(PolyError::Triangulation("no ear found (non-simple polygon?)".into()));
        }
        let m = idx.len();
        let mut clipped = false;
        for i in 0..m {
            let (ia, ib, ic) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if cross(a, b, c) <= 0.0 {
                continue; // reflex or degenerate corner
            }
            // is any other vertex inside triangle a-b-c?
            let mut ear = true;
            for &j in &idx {
                if j == ia || j == ib || j == ic {
                    continue;
                }
                let p = pts[j];
                let d1 = cross(a, b, p);
                let d2 = cross(b, c, p);
                let d3 = cross(c, a, p);
                if d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0 {
                    ear = false;
                    break;
                }
            }
            if ear {
                tris.push([a, b, c]);
                idx.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(PolyError::Triangulation("no ear found".into()));
        }
    }
    tris.push([pts[idx[0]], pts[idx[1]], pts[idx[2]]]);
    Ok(tris)
}

/// Quadrature on a simple polygon, exact for ℙ_order: sub-triangulate, then a
/// collapsed tensor Gauss rule per triangle.
pub fn polygon_quadrature(pts: &[Point2], order: usize) -> Result<Quadrature, PolyError> {
    let tris = triangulate(pts)?;
    let mu = order / 2 + 2; // u picks up one extra degree from the Jacobian
    let mv = order / 2 + 1;
    let (nu, wu) = gauss_legendre(mu);
    let (nv, wv) = gauss_legendre(mv);
    let mut points = Vec::with_capacity(tris.len() * mu * mv);
    let mut weights = Vec::with_capacity(tris.len() * mu * mv);
    for [a, b, c] in &tris {
        let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); // 2·signed area
        for (&tu, &wu_i) in nu.iter().zip(&wu) {
            let u = 0.5 * (tu + 1.0);
            for (&tv, &wv_j) in nv.iter().zip(&wv) {
                let v = 0.5 * (tv + 1.0);
                // x = a(1-u) + b·u(1-v) + c·uv, |J| = u · area2
                let x = a.x * (1.0 - u) + b.x * u * (1.0 - v) + c.x * u * v;
                let y = a.y * (1.0 - u) + b.y * u * (1.0 - v) + c.y * u * v;
                points.push(Point2::new(x, y));
                weights.push(0.25 * wu_i * wv_j * u * area2);
            }
        }
    }
    Ok(Quadrature { points, weights })
}

/// Exact integrals `∫_E m_α dE` of all scaled monomials of degree ≤ k over a
/// simple polygon, via the divergence theorem and exact edge quadrature.
/// Independent of [`polygon_quadrature`]; used as an oracle and for exact
/// geometric moments.
pub fn monomial_integrals_green(basis: &MonomialBasis, pts: &[Point2], k: usize) -> Vec<f64> {
    let exps = exponents(k);
    let mut out = vec![0.0; exps.len()];
    let n = pts.len();
    for (idx, &(a, b)) in exps.iter().enumerate() {
        // ∫ ξ^a η^b dE = h/(a+1) ∮ ξ^{a+1} η^b n_x ds
        let mut s = 0.0;
        for e in 0..n {
            let p = pts[e];
            let q = pts[(e + 1) % n];
            let len = p.dist(q);
            if len == 0.0 {
                continue;
            }
            let nx = (q.y - p.y) / len; // outward normal x-component for CCW loops
            if nx == 0.0 {
                continue;
            }
            let rule = edge_quadrature(p, q, (a + b + 1) as usize);
            s += nx
                * rule.integrate(|x| {
                    let (xi, eta) = (
                        (x.x - basis.centroid.x) / basis.h,
                        (x.y - basis.centroid.y) / basis.h,
                    );
                    xi.powi(a as i32 + 1) * eta.powi(b as i32)
                });
        }
        out[idx] = s * basis.h / (a as f64 + 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn dims_and_order() {
        assert_eq!(poly_dim(0), 1);
        assert_eq!(poly_dim(1), 3);
        assert_eq!(poly_dim(2), 6);
        assert_eq!(exponents(2), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        for (i, &(a, b)) in exponents(3).iter().enumerate() {
            assert_eq!(exponent_index(a, b), i);
        }
    }

    #[test]
    fn complementary_space_dimensions() {
        // dim 𝒢_k + dim 𝒢_k^⊕ = 2 dim ℙ_k for all k ≤ 3
        let basis = MonomialBasis::new(0, Point2::new(0.0, 0.0), 1.0);
        for k in 0..=3usize {
            let b = basis.with_degree(k);
            let gk = VectorPolyBasis::new(VectorBasisKind::Gk, b.clone()).dim();
            let gko = VectorPolyBasis::new(VectorBasisKind::GkOplus, b.clone()).dim();
            assert_eq!(gk + gko, 2 * poly_dim(k), "k = {k}");
        }
    }

    #[test]
    fn unit_square_quadrature_examples() {
        let sq = unit_square();
        let q2 = polygon_quadrature(&sq, 2).unwrap();
        let ix2 = q2.integrate(|p| p.x * p.x);
        assert!((ix2 - 1.0 / 3.0).abs() < 1e-14, "got {ix2}");
        let q0 = polygon_quadrature(&sq, 0).unwrap();
        assert!((q0.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn edge_quadrature_examples() {
        let r = edge_quadrature(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 1);
        assert!((r.integrate(|p| p.x) - 0.5).abs() < 1e-15);
        assert!((r.total_weight() - 1.0).abs() < 1e-15);
        let r3 = edge_quadrature(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 3);
        assert!((r3.integrate(|p| p.x.powi(3)) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn pentagon_high_order_vs_subdivision_oracle() {
        // regular pentagon, f = x² y², order-4 rule vs refined-subdivision oracle
        let pts: Vec<Point2> = (0..5)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
                Point2::new(t.cos(), t.sin())
            })
            .collect();
        let f = |p: Point2| p.x * p.x * p.y * p.y;
        let got = polygon_quadrature(&pts, 4).unwrap().integrate(f);
        // oracle: uniform 4-way refinement of the fan triangles
        let tris = triangulate(&pts).unwrap();
        let mut fine = tris;
        for _ in 0..4 {
            let mut next = Vec::with_capacity(fine.len() * 4);
            for [a, b, c] in &fine {
                let ab = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
                let bc = Point2::new(0.5 * (b.x + c.x), 0.5 * (b.y + c.y));
                let ca = Point2::new(0.5 * (c.x + a.x), 0.5 * (c.y + a.y));
                next.push([*a, ab, ca]);
                next.push([ab, *b, bc]);
                next.push([ca, bc, *c]);
                next.push([ab, bc, ca]);
            }
            fine = next;
        }
        let mut oracle = 0.0;
        for [a, b, c] in &fine {
            let poly = vec![*a, *b, *c];
            oracle += polygon_quadrature(&poly, 4).unwrap().integrate(f);
        }
        assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
    }

    #[test]
    fn calculus_examples() {
        let basis = MonomialBasis::new(2, Point2::new(0.25, 0.5), 0.5);
        // m = ξ² -> ∂x m = (2/h)·ξ
        let mut c = vec![0.0; 6];
        c[exponent_index(2, 0)] = 1.0;
        let [gx, gy] = gradient(&basis, &c).unwrap();
        assert_eq!(gx[exponent_index(1, 0)], 2.0 / 0.5);
        assert!(gy.iter().all(|&v| v == 0.0));

        // div (x, y) = 2: x = xE + h·ξ -> coeffs on ξ are h
        let b1 = basis.with_degree(1);
        let vx = vec![basis.centroid.x, basis.h, 0.0];
        let vy = vec![basis.centroid.y, 0.0, basis.h];
        let d = divergence(&b1, &vx, &vy).unwrap();
        assert_eq!(d, vec![2.0]);

        // curl grad φ = 0 for φ = xy (expressed in scaled coordinates)
        let mut phi = vec![0.0; 6];
        phi[exponent_index(0, 0)] = basis.centroid.x * basis.centroid.y;
        phi[exponent_index(1, 0)] = basis.h * basis.centroid.y;
        phi[exponent_index(0, 1)] = basis.h * basis.centroid.x;
        phi[exponent_index(1, 1)] = basis.h * basis.h;
        let [px, py] = gradient(&basis, &phi).unwrap();
        let b1 = basis.with_degree(1);
        let curl = curl_vector(&b1, &px, &py).unwrap();
        assert!(curl.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn degree_overflow_is_an_error() {
        let basis = MonomialBasis::new(1, Point2::new(0.0, 0.0), 1.0);
        let c = vec![1.0, 0.0, 0.0];
        assert!(matches!(
            xperp_mul(&basis, &c, 1),
            Err(PolyError::DegreeOverflow { needed: 2, cap: 1 })
        ));
        assert!(xperp_mul(&basis, &c, 2).is_ok());
    }

    #[test]
    fn green_integrals_match_quadrature() {
        // random-ish simple polygons: perturbed regular n-gons
        let polys: Vec<Vec<Point2>> = vec![
            unit_square(),
            (0..7)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / 7.0;
                    let r = 1.0 + 0.3 * ((3 * k + 1) as f64).sin();
                    Point2::new(0.3 + r * t.cos(), -0.2 + r * t.sin())
                })
                .collect(),
        ];
        for pts in &polys {
            let g = crate::mesh::signed_area(pts);
            assert!(g > 0.0);
            let c = centroid_of(pts);
            let h = pts
                .iter()
                .flat_map(|p| pts.iter().map(move |q| p.dist(*q)))
                .fold(0.0, f64::max);
            let basis = MonomialBasis::new(4, c, h);
            let green = monomial_integrals_green(&basis, pts, 4);
            let quad = polygon_quadrature(pts, 4).unwrap();
            let vals: Vec<f64> = {
                let mut acc = vec![0.0; poly_dim(4)];
                for (&p, &w) in quad.points.iter().zip(&quad.weights) {
                    for (a, m) in acc.iter_mut().zip(basis.eval_all(p)) {
                        *a += w * m;
                    }
                }
                acc
            };
            for (i, (g, q)) in green.iter().zip(&vals).enumerate() {
                assert!((g - q).abs() < 1e-12 * (1.0 + g.abs()), "monomial {i}: {g} vs {q}");
            }
        }
    }

    #[test]
    fn gram_conditioning_square_family() {
        // scaled-monomial mass matrix stays well-conditioned under refinement
        for level in 1..=4u32 {
            let s = 1.0 / (5.0 * (1 << (level - 1)) as f64);
            let pts = vec![
                Point2::new(0.0, 0.0),
                Point2::new(s, 0.0),
                Point2::new(s, s),
                Point2::new(0.0, s),
            ];
            let c = centroid_of(&pts);
            let h = s * 2.0_f64.sqrt();
            let basis = MonomialBasis::new(2, c, h);
            let quad = polygon_quadrature(&pts, 4).unwrap();
            let n = basis.dim();
            let mut gram = DMat::zeros(n, n);
            for (&p, &w) in quad.points.iter().zip(&quad.weights) {
                let m = basis.eval_all(p);
                for i in 0..n {
                    for j in 0..n {
                        gram[(i, j)] += w * m[i] * m[j];
                    }
                }
            }
            gram.scale(1.0 / (s * s)); // normalize out |E| so eigenvalues are O(1)
            let cond = crate::la::spd_condition(&gram);
            assert!(cond < 1e3, "level {level}: cond = {cond}");
        }
    }

    #[test]
    fn ear_clipping_nonconvex() {
        // L-shape is star-shaped but fan from centroid works; force ear_clip
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 4.0),
            Point2::new(0.0, 4.0),
        ];
        let tris = ear_clip(&pts).unwrap();
        let area: f64 = tris
            .iter()
            .map(|[a, b, c]| 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)))
            .sum();
        assert!((area - 7.0).abs() < 1e-12, "area {area}");
    }
}
