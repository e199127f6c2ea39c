//! Polygonal meshes: representation, generators, geometric queries and
//! regularity checks.
//!
//! A mesh is an immutable partition of an axis-aligned rectangle into simple,
//! counterclockwise polygons. Edges are derived from the cell loops, never
//! stored in inputs, so there is a single source of truth for connectivity.

mod generate;

pub use generate::{build_mesh, MeshFamily};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("refinement level {0} out of range (supported: 1..=6)")]
    SizeOutOfRange(u32),
    #[error("cell {cell} is degenerate: {reason}")]
    DegenerateCell { cell: usize, reason: String },
    #[error("cell {cell} loop is not counterclockwise (signed area {area:.3e})")]
    NotCounterclockwise { cell: usize, area: f64 },
    #[error("cell {cell} loop is self-intersecting")]
    SelfIntersecting { cell: usize },
    #[error("edge ({0}, {1}) is shared by more than two cells")]
    NonManifoldEdge(usize, usize),
    #[error("cell areas sum to {sum} but the domain area is {expected}")]
    NotAPartition { sum: f64, expected: f64 },
    #[error("boundary entity does not lie on the domain boundary: vertex {vertex} at ({x}, {y})")]
    NotOnBoundary { vertex: usize, x: f64, y: f64 },
    #[error("mesh text parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("vertex index {index} out of range ({nv} vertices)")]
    VertexOutOfRange { index: usize, nv: usize },
}

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// An edge of the mesh, directed so that `left_cell` traverses `a → b` in its
/// counterclockwise loop. `right_cell` is `None` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub left_cell: usize,
    pub right_cell: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right_cell.is_none()
    }
}

/// Conforming polygonal mesh. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<usize>>,
    boundary_edges: Vec<usize>,
    boundary_vertices: Vec<usize>,
}

impl PolygonalMesh {
    /// Build a mesh from vertex coordinates and counterclockwise cell loops,
    /// deriving edges and validating the cell geometry.
    pub fn from_parts(vertices: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (c, loop_) in cells.iter().enumerate() {
            if loop_.len() < 3 {
                return Err(MeshError::DegenerateCell {
                    cell: c,
                    reason: format!("only {} vertices", loop_.len()),
                });
            }
            for &i in loop_ {
                if i >= nv {
                    return Err(MeshError::VertexOutOfRange { index: i, nv });
                }
            }
            let pts: Vec<Point2> = loop_.iter().map(|&i| vertices[i]).collect();
            let area = signed_area(&pts);
            if area <= 0.0 {
                return Err(MeshError::NotCounterclockwise { cell: c, area });
            }
            if !is_simple_polygon(&pts) {
                return Err(MeshError::SelfIntersecting { cell: c });
            }
        }

        // Derive edges. Key by (min, max) vertex pair; first traversal becomes
        // the left cell.
        let mut edge_of: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        for (c, loop_) in cells.iter().enumerate() {
            let n = loop_.len();
            let mut ce = Vec::with_capacity(n);
            for k in 0..n {
                let a = loop_[k];
                let b = loop_[(k + 1) % n];
                let key = (a.min(b), a.max(b));
                match edge_of.get(&key) {
                    None => {
                        let id = edges.len();
                        edges.push(Edge { a, b, left_cell: c, right_cell: None });
                        edge_of.insert(key, id);
                        ce.push(id);
                    }
                    Some(&id) => {
                        if edges[id].right_cell.is_some() {
                            return Err(MeshError::NonManifoldEdge(key.0, key.1));
                        }
                        edges[id].right_cell = Some(c);
                        ce.push(id);
                    }
                }
            }
            cell_edges.push(ce);
        }

        let boundary_edges: Vec<usize> =
            (0..edges.len()).filter(|&e| edges[e].is_boundary()).collect();
        let mut bv: Vec<usize> = boundary_edges
            .iter()
            .flat_map(|&e| [edges[e].a, edges[e].b])
            .collect();
        bv.sort_unstable();
        bv.dedup();

        Ok(Self { vertices, cells, edges, cell_edges, boundary_edges, boundary_vertices: bv })
    }

    /// Check that the cells tile `domain`: cell areas must sum to the domain
    /// area within 1e-12 relative.
    pub fn check_partition(&self, domain: &Rect) -> Result<(), MeshError> {
        let sum: f64 = (0..self.n_cells()).map(|c| signed_area(&self.cell_points(c))).sum();
        let expected = domain.area();
        if (sum - expected).abs() > 1e-12 * expected.abs() {
            return Err(MeshError::NotAPartition { sum, expected });
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids along the loop of cell `c`; entry `k` joins loop vertices
    /// `k` and `k+1`.
    pub fn cell_edge_ids(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertices.binary_search(&v).is_ok()
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point2> {
        self.cells[c].iter().map(|&i| self.vertices[i]).collect()
    }

    /// Serialize in the plain text format:
    /// line 1 `nv nc`; `nv` lines `x y`; `nc` lines `m i1 ... im`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{} {}\n", self.n_vertices(), self.n_cells()));
        for p in &self.vertices {
            s.push_str(&format!("{} {}\n", p.x, p.y));
        }
        for c in &self.cells {
            s.push_str(&format!("{}", c.len()));
            for &i in c {
                s.push_str(&format!(" {}", i));
            }
            s.push('\n');
        }
        s
    }

    /// Parse the text format produced by [`PolygonalMesh::to_text`].
    pub fn from_text(text: &str) -> Result<Self, MeshError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines
            .next()
            .ok_or(MeshError::Parse { line: 1, reason: "empty input".into() })?;
        let mut it = header.split_whitespace();
        let nv: usize = parse_tok(&mut it, ln, "nv")?;
        let nc: usize = parse_tok(&mut it, ln, "nc")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, line) = lines.next().ok_or(MeshError::Parse {
                line: 0,
                reason: "unexpected end of input in vertex list".into(),
            })?;
            let mut it = line.split_whitespace();
            let x: f64 = parse_tok(&mut it, ln, "x")?;
            let y: f64 = parse_tok(&mut it, ln, "y")?;
            if !x.is_finite() || !y.is_finite() {
                return Err(MeshError::Parse { line: ln + 1, reason: "non-finite coordinate".into() });
            }
            vertices.push(Point2::new(x, y));
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, line) = lines.next().ok_or(MeshError::Parse {
                line: 0,
                reason: "unexpected end of input in cell list".into(),
            })?;
            let mut it = line.split_whitespace();
            let m: usize = parse_tok(&mut it, ln, "m")?;
            let mut loop_ = Vec::with_capacity(m);
            for _ in 0..m {
                loop_.push(parse_tok(&mut it, ln, "vertex index")?);
            }
            cells.push(loop_);
        }
        Self::from_parts(vertices, cells)
    }
}

fn parse_tok<T: std::str::FromStr>(
    it: &mut std::str::SplitWhitespace<'_>,
    line: usize,
    what: &str,
) -> Result<T, MeshError> {
    it.next()
        .ok_or_else(|| MeshError::Parse { line: line + 1, reason: format!("missing {what}") })?
        .parse()
        .map_err(|_| MeshError::Parse { line: line + 1, reason: format!("invalid {what}") })
}

/// Shoelace signed area; positive for counterclockwise loops.
pub fn signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

fn is_simple_polygon(pts: &[Point2]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let (a1, a2) = (pts[i], pts[(i + 1) % n]);
        for j in i + 1..n {
            // skip adjacent edges (they share a vertex)
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (pts[j], pts[(j + 1) % n]);
            if segments_properly_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

fn segments_properly_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Per-element geometric data.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point2,
    /// Per loop edge: length, unit outward normal, unit tangent (loop direction).
    pub edge_lengths: Vec<f64>,
    pub edge_normals: Vec<(f64, f64)>,
    pub edge_tangents: Vec<(f64, f64)>,
}

/// Geometry of cell `c`: shoelace area, max pairwise vertex distance for the
/// diameter, area centroid, and per-edge frames.
pub fn element_geometry(mesh: &PolygonalMesh, c: usize) -> Result<ElementGeometry, MeshError> {
    let pts = mesh.cell_points(c);
    element_geometry_of(&pts).map_err(|reason| MeshError::DegenerateCell { cell: c, reason })
}

pub(crate) fn element_geometry_of(pts: &[Point2]) -> Result<ElementGeometry, String> {
    let n = pts.len();
    let area = signed_area(pts);
    if area <= 0.0 || !area.is_finite() {
        return Err(format!("area {area:.3e} is not positive"));
    }
    let mut diameter = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            diameter = diameter.max(pts[i].dist(pts[j]));
        }
    }
    // area centroid from the shoelace decomposition
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    let centroid = Point2::new(cx / (6.0 * area), cy / (6.0 * area));

    let mut edge_lengths = Vec::with_capacity(n);
    let mut edge_normals = Vec::with_capacity(n);
    let mut edge_tangents = Vec::with_capacity(n);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let len = p.dist(q);
        if len == 0.0 {
            return Err(format!("zero-length edge at loop position {i}"));
        }
        let t = ((q.x - p.x) / len, (q.y - p.y) / len);
        edge_lengths.push(len);
        edge_tangents.push(t);
        // interior is left of the loop direction, so outward = tangent rotated -90°
        edge_normals.push((t.1, -t.0));
    }
    Ok(ElementGeometry { diameter, area, centroid, edge_lengths, edge_normals, edge_tangents })
}

/// Mesh size `h = max h_E`.
pub fn mesh_size(mesh: &PolygonalMesh) -> f64 {
    (0..mesh.n_cells())
        .map(|c| element_geometry(mesh, c).map(|g| g.diameter).unwrap_or(0.0))
        .fold(0.0, f64::max)
}

/// Shape-regularity report for assumptions (A1)/(A2).
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// min over cells of (min pairwise vertex distance / h_E)
    pub min_vertex_separation_ratio: f64,
    /// per-cell: star-shaped kernel nonempty
    pub star_shaped_flags: Vec<bool>,
    pub varrho_used: f64,
    /// cells violating (A2): min pairwise vertex distance < varrho · h_E
    pub a2_violations: Vec<usize>,
    /// cells with empty kernel (never star-shaped)
    pub a1_violations: Vec<usize>,
}

/// Check (A1) star-shapedness (exact half-plane kernel intersection) and
/// (A2) vertex separation for every cell. Report-only, never fails.
pub fn check_regularity(mesh: &PolygonalMesh, varrho: f64) -> RegularityReport {
    let mut min_ratio = f64::INFINITY;
    let mut star_flags = Vec::with_capacity(mesh.n_cells());
    let mut a2 = Vec::new();
    let mut a1 = Vec::new();
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        let geom = element_geometry_of(&pts).expect("valid cell");
        let n = pts.len();
        let mut min_sep = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                min_sep = min_sep.min(pts[i].dist(pts[j]));
            }
        }
        let ratio = min_sep / geom.diameter;
        min_ratio = min_ratio.min(ratio);
        if ratio < varrho {
            a2.push(c);
        }
        let star = star_kernel(&pts).is_some();
        if !star {
            a1.push(c);
        }
        star_flags.push(star);
    }
    RegularityReport {
        min_vertex_separation_ratio: min_ratio,
        star_shaped_flags: star_flags,
        varrho_used: varrho,
        a2_violations: a2,
        a1_violations: a1,
    }
}

/// Kernel of a polygon (the set of points seeing all of it) by intersecting
/// the inner half-planes of all edges. Returns `None` when empty.
pub fn star_kernel(pts: &[Point2]) -> Option<Vec<Point2>> {
    // start from the bounding box, then clip by each edge's inner half-plane
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let mut kernel = vec![
        Point2::new(x0, y0),
        Point2::new(x1, y0),
        Point2::new(x1, y1),
        Point2::new(x0, y1),
    ];
    let n = pts.len();
    let scale = (x1 - x0).max(y1 - y0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        // inner half-plane: cross(q-p, x-p) >= 0 for CCW loops
        let nx = -(q.y - p.y);
        let ny = q.x - p.x;
        // keep nx*(x-p.x) + ny*(y-p.y) >= 0  <=>  -nx*x - ny*y <= -nx*p.x - ny*p.y
        kernel = clip_halfplane(&kernel, (-nx, -ny), -(nx * p.x + ny * p.y));
        if kernel.len() < 3 {
            return None;
        }
    }
    let area = signed_area(&kernel);
    if area > 1e-14 * scale * scale {
        Some(kernel)
    } else {
        None
    }
}

/// Clip a convex polygon against `n · x <= c` (Sutherland–Hodgman step).
pub(crate) fn clip_halfplane(poly: &[Point2], n: (f64, f64), c: f64) -> Vec<Point2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let len = poly.len();
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let dp = n.0 * p.x + n.1 * p.y - c;
        let dq = n.0 * q.x + n.1 * q.y - c;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push(Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
        }
    }
    out
}

/// Which rectangle side a boundary entity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn outward_normal(self) -> (f64, f64) {
        match self {
            Side::Left => (-1.0, 0.0),
            Side::Right => (1.0, 0.0),
            Side::Bottom => (0.0, -1.0),
            Side::Top => (0.0, 1.0),
        }
    }
}

/// Set of sides a boundary vertex lies on (two at corners).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SideSet(u8);

impl SideSet {
    pub fn insert(&mut self, s: Side) {
        self.0 |= 1 << s as u8;
    }

    pub fn contains(&self, s: Side) -> bool {
        self.0 & (1 << s as u8) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn is_corner(&self) -> bool {
        self.0.count_ones() >= 2
    }

    pub fn iter(&self) -> impl Iterator<Item = Side> + '_ {
        [Side::Left, Side::Right, Side::Bottom, Side::Top]
            .into_iter()
            .filter(|&s| self.contains(s))
    }
}

/// Boundary tags for a mesh conforming to a rectangle.
#[derive(Debug, Clone)]
pub struct BoundaryClassification {
    /// per vertex: sides it lies on (empty for interior vertices)
    pub vertex_sides: Vec<SideSet>,
    /// per edge: the side a boundary edge lies on (`None` for interior edges)
    pub edge_sides: Vec<Option<Side>>,
}

/// Tag every boundary vertex and edge with the rectangle side(s) it lies on;
/// corners receive both incident sides. Errors if a boundary entity is not on
/// the rectangle boundary within 1e-12 of the domain scale.
pub fn classify_boundary(
    mesh: &PolygonalMesh,
    domain: &Rect,
) -> Result<BoundaryClassification, MeshError> {
    let tol = 1e-12 * domain.width().max(domain.height()).max(1.0);
    let side_of_point = |p: Point2| -> SideSet {
        let mut s = SideSet::default();
        if (p.x - domain.x0).abs() <= tol {
            s.insert(Side::Left);
        }
        if (p.x - domain.x1).abs() <= tol {
            s.insert(Side::Right);
        }
        if (p.y - domain.y0).abs() <= tol {
            s.insert(Side::Bottom);
        }
        if (p.y - domain.y1).abs() <= tol {
            s.insert(Side::Top);
        }
        s
    };

    let mut vertex_sides = vec![SideSet::default(); mesh.n_vertices()];
    for &v in mesh.boundary_vertices() {
        let s = side_of_point(mesh.vertex(v));
        if s.is_empty() {
            let p = mesh.vertex(v);
            return Err(MeshError::NotOnBoundary { vertex: v, x: p.x, y: p.y });
        }
        vertex_sides[v] = s;
    }

    let mut edge_sides = vec![None; mesh.n_edges()];
    for &e in mesh.boundary_edges() {
        let edge = mesh.edge(e);
        let sa = vertex_sides[edge.a];
        let sb = vertex_sides[edge.b];
        let shared: Vec<Side> = sa.iter().filter(|&s| sb.contains(s)).collect();
        match shared.as_slice() {
            [s] => edge_sides[e] = Some(*s),
            [] => {
                let p = mesh.vertex(edge.a);
                return Err(MeshError::NotOnBoundary { vertex: edge.a, x: p.x, y: p.y });
            }
            _ => {
                // degenerate rectangle side sharing; cannot happen for nonempty rectangles
                edge_sides[e] = Some(shared[0]);
            }
        }
    }
    Ok(BoundaryClassification { vertex_sides, edge_sides })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_cell() -> PolygonalMesh {
        PolygonalMesh::from_parts(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_geometry() {
        let mesh = unit_square_cell();
        let g = element_geometry(&mesh, 0).unwrap();
        assert!((g.area - 1.0).abs() < 1e-15);
        assert!((g.diameter - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((g.centroid.x - 0.5).abs() < 1e-15);
        assert!((g.centroid.y - 0.5).abs() < 1e-15);
        // outward normals: bottom, right, top, left
        assert_eq!(g.edge_normals[0], (0.0, -1.0));
        assert_eq!(g.edge_normals[1], (1.0, 0.0));
        assert_eq!(g.edge_normals[2], (0.0, 1.0));
        assert_eq!(g.edge_normals[3], (-1.0, 0.0));
    }

    #[test]
    fn right_triangle_geometry() {
        let mesh = PolygonalMesh::from_parts(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let g = element_geometry(&mesh, 0).unwrap();
        assert!((g.area - 0.5).abs() < 1e-15);
        assert!((g.diameter - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn regular_hexagon_area() {
        // closed-form polygon area oracle: circumradius-1 regular hexagon has
        // area 3*sqrt(3)/2
        let pts: Vec<Point2> = (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64;
                Point2::new(t.cos(), t.sin())
            })
            .collect();
        let mesh = PolygonalMesh::from_parts(pts, vec![vec![0, 1, 2, 3, 4, 5]]).unwrap();
        let g = element_geometry(&mesh, 0).unwrap();
        assert!((g.area - 1.5 * 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn clockwise_cell_rejected() {
        let r = PolygonalMesh::from_parts(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)],
            vec![vec![0, 2, 1]],
        );
        assert!(matches!(r, Err(MeshError::NotCounterclockwise { .. })));
    }

    #[test]
    fn self_intersecting_cell_rejected() {
        // positive signed area, but edges (1,2) and (3,0) cross
        let r = PolygonalMesh::from_parts(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(4.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(2.0, 3.0),
            ],
            vec![vec![0, 1, 2, 3]],
        );
        assert!(matches!(r, Err(MeshError::SelfIntersecting { .. })));
    }

    #[test]
    fn degenerate_cell_rejected() {
        let mesh = PolygonalMesh::from_parts(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(2.0, 0.0),
            ],
            vec![vec![0, 1, 2]],
        );
        // collinear -> zero signed area -> not CCW
        assert!(mesh.is_err());
    }

    #[test]
    fn closed_polygon_normal_identity() {
        let mesh = unit_square_cell();
        let g = element_geometry(&mesh, 0).unwrap();
        let mut sx = 0.0;
        let mut sy = 0.0;
        for (len, n) in g.edge_lengths.iter().zip(&g.edge_normals) {
            sx += len * n.0;
            sy += len * n.1;
        }
        assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
    }

    #[test]
    fn star_kernel_of_l_shape() {
        // L-shape: unit block minus top-left quadrant. Kernel is the square
        // [0.5,1] x [0,0.5] (derived by intersecting the edge half-planes).
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.5, 1.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.0, 0.5),
        ];
        let kernel = star_kernel(&pts).expect("L-shape is star-shaped");
        let area = signed_area(&kernel);
        assert!((area - 0.25).abs() < 1e-12, "kernel area {area}");
        for p in &kernel {
            assert!(p.x >= 0.5 - 1e-12 && p.x <= 1.0 + 1e-12);
            assert!(p.y >= -1e-12 && p.y <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn star_kernel_empty_for_plus_shape() {
        // a spiral-ish nonconvex polygon with empty kernel
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(1.0, 4.0),
            Point2::new(1.0, 2.0),
            Point2::new(3.0, 2.0),
            Point2::new(3.0, 1.0),
            Point2::new(0.5, 1.0),
            Point2::new(0.5, 3.0),
            Point2::new(0.0, 3.0),
        ];
        assert!(signed_area(&pts) > 0.0);
        assert!(star_kernel(&pts).is_none());
    }

    #[test]
    fn regularity_flags_close_vertices() {
        let mesh = PolygonalMesh::from_parts(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(1e-9, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3, 4]],
        )
        .unwrap();
        let rep = check_regularity(&mesh, 0.1);
        assert_eq!(rep.a2_violations, vec![0]);
        assert!(rep.star_shaped_flags[0]);
        assert!(rep.min_vertex_separation_ratio < 1e-8);
    }

    #[test]
    fn boundary_classification_unit_square() {
        let mesh = unit_square_cell();
        let bc = classify_boundary(&mesh, &Rect::UNIT).unwrap();
        // vertex (0,0) is a corner: left + bottom
        assert!(bc.vertex_sides[0].contains(Side::Left));
        assert!(bc.vertex_sides[0].contains(Side::Bottom));
        assert!(bc.vertex_sides[0].is_corner());
        // vertex (1,1): right + top
        assert!(bc.vertex_sides[2].contains(Side::Right));
        assert!(bc.vertex_sides[2].contains(Side::Top));
        // edge 2 is the top edge
        assert_eq!(bc.edge_sides[2], Some(Side::Top));
        assert_eq!(Side::Top.outward_normal(), (0.0, 1.0));
        assert_eq!(Side::Left.outward_normal(), (-1.0, 0.0));
    }

    #[test]
    fn nonconforming_boundary_errors() {
        let mesh = PolygonalMesh::from_parts(
            vec![
                Point2::new(0.2, 0.2),
                Point2::new(0.8, 0.2),
                Point2::new(0.8, 0.8),
                Point2::new(0.2, 0.8),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        assert!(matches!(
            classify_boundary(&mesh, &Rect::UNIT),
            Err(MeshError::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn text_format_round_trip() {
        let mesh = unit_square_cell();
        let text = mesh.to_text();
        let back = PolygonalMesh::from_text(&text).unwrap();
        assert_eq!(back.n_vertices(), 4);
        assert_eq!(back.n_cells(), 1);
        for i in 0..4 {
            assert_eq!(back.vertex(i), mesh.vertex(i));
        }
        assert_eq!(back.cell(0), mesh.cell(0));
    }
}
