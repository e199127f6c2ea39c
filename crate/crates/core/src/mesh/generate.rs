//! Built-in mesh families on axis-aligned rectangles.
//!
//! * `Square`: `(5·2^(l-1))²` congruent squares.
//! * `Nonconvex`: every square block is cut into a small square and a
//!   nonconvex octagon (one reflex corner), conforming across blocks.
//! * `Voronoi`: centroidal-Voronoi-like tessellation from a jittered seed
//!   grid relaxed by Lloyd iterations; fully deterministic per level.

use super::{clip_halfplane, signed_area, MeshError, Point2, PolygonalMesh, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFamily {
    Square,
    Nonconvex,
    Voronoi,
}

impl std::str::FromStr for MeshFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "square" => Ok(MeshFamily::Square),
            "nonconvex" => Ok(MeshFamily::Nonconvex),
            "voronoi" => Ok(MeshFamily::Voronoi),
            other => Err(format!("unknown mesh family '{other}'")),
        }
    }
}

impl std::fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeshFamily::Square => "square",
            MeshFamily::Nonconvex => "nonconvex",
            MeshFamily::Voronoi => "voronoi",
        })
    }
}

/// Number of blocks per side at a refinement level.
pub fn blocks_per_side(level: u32) -> usize {
    5 * (1 << (level - 1))
}

/// Build a mesh of the given family and level on `domain`.
///
/// Deterministic: identical inputs give bit-identical meshes.
pub fn build_mesh(family: MeshFamily, level: u32, domain: Rect) -> Result<PolygonalMesh, MeshError> {
    if !(1..=6).contains(&level) {
        return Err(MeshError::SizeOutOfRange(level));
    }
    let mesh = match family {
        MeshFamily::Square => square_mesh(level, domain)?,
        MeshFamily::Nonconvex => nonconvex_mesh(level, domain)?,
        MeshFamily::Voronoi => voronoi_mesh(level, domain)?,
    };
    mesh.check_partition(&domain)?;
    Ok(mesh)
}

fn square_mesh(level: u32, domain: Rect) -> Result<PolygonalMesh, MeshError> {
    let n = blocks_per_side(level);
    let coord = |i: usize, lo: f64, width: f64| lo + width * (i as f64 / n as f64);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(
                coord(i, domain.x0, domain.width()),
                coord(j, domain.y0, domain.height()),
            ));
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    PolygonalMesh::from_parts(vertices, cells)
}

fn nonconvex_mesh(level: u32, domain: Rect) -> Result<PolygonalMesh, MeshError> {
    let n = blocks_per_side(level);
    let m = 2 * n; // fine grid subdivisions per side
    let coord = |i: usize, lo: f64, width: f64| lo + width * (i as f64 / m as f64);
    let mut vertices = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            vertices.push(Point2::new(
                coord(i, domain.x0, domain.width()),
                coord(j, domain.y0, domain.height()),
            ));
        }
    }
    let vid = |i: usize, j: usize| j * (m + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for bj in 0..n {
        for bi in 0..n {
            let (i, j) = (2 * bi, 2 * bj);
            // octagon: the block minus its top-left quadrant, with collinear
            // vertices on the bottom and right sides for conformity
            cells.push(vec![
                vid(i, j),
                vid(i + 1, j),
                vid(i + 2, j),
                vid(i + 2, j + 1),
                vid(i + 2, j + 2),
                vid(i + 1, j + 2),
                vid(i + 1, j + 1),
                vid(i, j + 1),
            ]);
            // the cut-off small square (top-left quadrant)
            cells.push(vec![vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j + 2), vid(i, j + 2)]);
        }
    }
    PolygonalMesh::from_parts(vertices, cells)
}

/// splitmix64: tiny deterministic PRNG, stable across platforms.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// uniform in [0, 1)
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

const LLOYD_ITERATIONS: usize = 50;

fn voronoi_mesh(level: u32, domain: Rect) -> Result<PolygonalMesh, MeshError> {
    let g = blocks_per_side(level);
    let mut rng = SplitMix64(0x706f6c796d6864 ^ (level as u64) << 32);
    let (w, h) = (domain.width(), domain.height());

    // jittered grid of g*g seeds
    let mut seeds: Vec<Point2> = Vec::with_capacity(g * g);
    for j in 0..g {
        for i in 0..g {
            let jx = (rng.next_f64() - 0.5) * 0.5;
            let jy = (rng.next_f64() - 0.5) * 0.5;
            seeds.push(Point2::new(
                domain.x0 + w * ((i as f64 + 0.5 + jx) / g as f64),
                domain.y0 + h * ((j as f64 + 0.5 + jy) / g as f64),
            ));
        }
    }

    let mut cells_pts: Vec<Vec<Point2>> = Vec::new();
    for iter in 0..=LLOYD_ITERATIONS {
        cells_pts = voronoi_cells(&seeds, &domain, g);
        if iter == LLOYD_ITERATIONS {
            break;
        }
        for (s, cell) in seeds.iter_mut().zip(&cells_pts) {
            *s = polygon_centroid(cell);
        }
    }

    assemble_voronoi(&cells_pts, &domain)
}

/// Clip the domain rectangle by the bisector of every nearby seed, bucketed
/// on a g×g grid with a security-radius stopping rule.
fn voronoi_cells(seeds: &[Point2], domain: &Rect, g: usize) -> Vec<Vec<Point2>> {
    let (w, h) = (domain.width(), domain.height());
    let bucket_of = |p: Point2| -> (usize, usize) {
        let bx = (((p.x - domain.x0) / w * g as f64) as isize).clamp(0, g as isize - 1) as usize;
        let by = (((p.y - domain.y0) / h * g as f64) as isize).clamp(0, g as isize - 1) as usize;
        (bx, by)
    };
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); g * g];
    for (k, &s) in seeds.iter().enumerate() {
        let (bx, by) = bucket_of(s);
        buckets[by * g + bx].push(k);
    }
    let bucket_size = (w / g as f64).min(h / g as f64);

    let rect_poly = vec![
        Point2::new(domain.x0, domain.y0),
        Point2::new(domain.x1, domain.y0),
        Point2::new(domain.x1, domain.y1),
        Point2::new(domain.x0, domain.y1),
    ];

    let mut out = Vec::with_capacity(seeds.len());
    for (k, &s) in seeds.iter().enumerate() {
        let (bx, by) = bucket_of(s);
        let mut cell = rect_poly.clone();
        let mut ring = 0usize;
        loop {
            // security radius: a seed farther than 2R cannot cut the cell
            let r_cell = cell.iter().map(|p| p.dist(s)).fold(0.0, f64::max);
            let ring_min_dist = (ring as f64 - 1.0).max(0.0) * bucket_size;
            if ring > 0 && ring_min_dist > 2.0 * r_cell {
                break;
            }
            if ring > 2 * g {
                break;
            }
            let lo_x = bx as isize - ring as isize;
            let hi_x = bx as isize + ring as isize;
            let lo_y = by as isize - ring as isize;
            let hi_y = by as isize + ring as isize;
            let mut any_bucket = false;
            for byy in lo_y..=hi_y {
                for bxx in lo_x..=hi_x {
                    // ring shell only
                    if ring > 0
                        && bxx != lo_x
                        && bxx != hi_x
                        && byy != lo_y
                        && byy != hi_y
                    {
                        continue;
                    }
                    if bxx < 0 || byy < 0 || bxx >= g as isize || byy >= g as isize {
                        continue;
                    }
                    any_bucket = true;
                    for &j in &buckets[byy as usize * g + bxx as usize] {
                        if j == k {
                            continue;
                        }
                        let t = seeds[j];
                        // keep |x-s|^2 <= |x-t|^2
                        let n = (t.x - s.x, t.y - s.y);
                        let c = 0.5 * (t.x * t.x + t.y * t.y - s.x * s.x - s.y * s.y);
                        cell = clip_halfplane(&cell, n, c);
                        if cell.len() < 3 {
                            break;
                        }
                    }
                }
            }
            if !any_bucket && ring > g {
                break;
            }
            ring += 1;
        }
        out.push(cell);
    }
    out
}

fn polygon_centroid(pts: &[Point2]) -> Point2 {
    let area = signed_area(pts);
    let n = pts.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Point2::new(cx / (6.0 * area), cy / (6.0 * area))
}

/// Merge per-cell vertex coordinates into a conforming mesh: quantize to a
/// fine grid (merging the numerically-identical corners adjacent cells
/// computed independently), snap near-boundary vertices exactly onto the
/// rectangle, and drop degenerate loop entries.
fn assemble_voronoi(cells_pts: &[Vec<Point2>], domain: &Rect) -> Result<PolygonalMesh, MeshError> {
    const QUANT: f64 = 1e-7;
    let snap_tol = 1e-6 * domain.width().max(domain.height());

    let mut key_of = std::collections::HashMap::<(i64, i64), usize>::new();
    let mut vertices: Vec<Point2> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::with_capacity(cells_pts.len());

    let mut intern = |p: Point2| -> usize {
        let mut q = p;
        if (q.x - domain.x0).abs() < snap_tol {
            q.x = domain.x0;
        }
        if (q.x - domain.x1).abs() < snap_tol {
            q.x = domain.x1;
        }
        if (q.y - domain.y0).abs() < snap_tol {
            q.y = domain.y0;
        }
        if (q.y - domain.y1).abs() < snap_tol {
            q.y = domain.y1;
        }
        let kx = (q.x / QUANT).round() as i64;
        let ky = (q.y / QUANT).round() as i64;
        // probe neighboring quantization keys so that values straddling a
        // rounding boundary still merge
        for dx in -1..=1_i64 {
            for dy in -1..=1_i64 {
                if let Some(&id) = key_of.get(&(kx + dx, ky + dy)) {
                    if vertices[id].dist(q) < QUANT {
                        return id;
                    }
                }
            }
        }
        let id = vertices.len();
        vertices.push(q);
        key_of.insert((kx, ky), id);
        id
    };

    for pts in cells_pts {
        let mut loop_: Vec<usize> = pts.iter().map(|&p| intern(p)).collect();
        loop_.dedup();
        while loop_.len() > 1 && loop_.first() == loop_.last() {
            loop_.pop();
        }
        cells.push(loop_);
    }
    PolygonalMesh::from_parts(vertices, cells)
}
