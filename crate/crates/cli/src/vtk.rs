//! VTK legacy 3.0 ASCII writer for field snapshots.
//!
//! Cells are written as `VTK_POLYGON` (type 7). Point data holds the velocity
//! and magnetic vectors sampled from the elementwise `Π⁰` projections and
//! averaged at shared vertices; cell data holds the pressure at the centroid
//! and the RMS of the exactly-known divergence polynomial.

use polymhd::sav::SavState;
use polymhd::spaces::Discretization;
use std::fmt::Write as _;

pub fn write_fields(disc: &Discretization, state: &SavState, title: &str) -> String {
    let mesh = disc.mesh();
    let nv = mesh.n_vertices();
    let nc = mesh.n_cells();

    // vertex samples of the Π⁰ projections, averaged over incident cells
    let mut vel = vec![(0.0, 0.0); nv];
    let mut mag = vec![(0.0, 0.0); nv];
    let mut count = vec![0usize; nv];
    for (c, el) in disc.elements.iter().enumerate() {
        let u_loc = disc.velocity.gather(c, &state.u);
        let b_loc = disc.magnetic.gather(c, &state.b);
        for &v in mesh.cell(c) {
            let p = mesh.vertex(v);
            let uv = el.eval_pi0(&el.velocity, &u_loc, p);
            let bv = el.eval_pi0(&el.magnetic, &b_loc, p);
            vel[v].0 += uv.0;
            vel[v].1 += uv.1;
            mag[v].0 += bv.0;
            mag[v].1 += bv.1;
            count[v] += 1;
        }
    }
    for v in 0..nv {
        let n = count[v].max(1) as f64;
        vel[v].0 /= n;
        vel[v].1 /= n;
        mag[v].0 /= n;
        mag[v].1 /= n;
    }

    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{title}");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.9e} {:.9e} 0", p.x, p.y);
    }
    let total: usize = (0..nc).map(|c| mesh.cell(c).len() + 1).sum();
    let _ = writeln!(s, "CELLS {nc} {total}");
    for c in 0..nc {
        let loop_ = mesh.cell(c);
        let _ = write!(s, "{}", loop_.len());
        for &v in loop_ {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("7\n");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    s.push_str("VECTORS velocity double\n");
    for &(x, y) in &vel {
        let _ = writeln!(s, "{x:.9e} {y:.9e} 0");
    }
    s.push_str("VECTORS magnetic double\n");
    for &(x, y) in &mag {
        let _ = writeln!(s, "{x:.9e} {y:.9e} 0");
    }
    let _ = writeln!(s, "CELL_DATA {nc}");
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for (c, el) in disc.elements.iter().enumerate() {
        let p_loc = disc.pressure.gather(c, &state.p);
        let low = el.basis.with_degree(disc.k - 1);
        let val = low.eval_poly(&p_loc, el.geom.centroid);
        let _ = writeln!(s, "{val:.9e}");
    }
    s.push_str("SCALARS div_u double 1\nLOOKUP_TABLE default\n");
    for (c, el) in disc.elements.iter().enumerate() {
        let d = disc.divergence_poly(c, &state.u);
        let md = el.mass_km1.matvec(&d);
        let sq: f64 = d.iter().zip(&md).map(|(a, b)| a * b).sum();
        let rms = (sq.max(0.0) / el.geom.area).sqrt();
        let _ = writeln!(s, "{rms:.9e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use polymhd::mesh::{build_mesh, MeshFamily, Rect};
    use polymhd::spaces::DofVector;

    #[test]
    fn zero_state_structure() {
        let mesh = build_mesh(MeshFamily::Square, 1, Rect::UNIT).unwrap();
        let disc = Discretization::build(mesh, 1).unwrap();
        let state = SavState {
            level: 0,
            u: DofVector::zeros(disc.velocity.n_dofs),
            b: DofVector::zeros(disc.magnetic.n_dofs),
            p: DofVector::zeros(disc.pressure.n_dofs),
            q: 1.0,
            prev_u: DofVector::zeros(disc.velocity.n_dofs),
            prev_b: DofVector::zeros(disc.magnetic.n_dofs),
            prev_q: 1.0,
        };
        let text = write_fields(&disc, &state, "test");
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 36 double"));
        assert!(text.contains("CELLS 25 125"));
        assert!(text.contains("CELL_TYPES 25"));
        assert!(text.contains("POINT_DATA 36"));
        assert!(text.contains("VECTORS velocity double"));
        assert!(text.contains("SCALARS div_u double 1"));
        // zero fields: every vector line is zeros
        let after = text.split("VECTORS velocity double\n").nth(1).unwrap();
        let first = after.lines().next().unwrap();
        assert_eq!(first, "0.000000000e0 0.000000000e0 0");
        // deterministic byte-for-byte
        let again = write_fields(&disc, &state, "test");
        assert_eq!(text, again);
    }
}
