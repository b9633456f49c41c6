//! Conforming triangulations of convex polygons.
//!
//! Boundary nodes are sampled along every facet, interior nodes come from an
//! equilateral lattice clipped away from the boundary, and the result is
//! made Delaunay by edge flips and cleaned up by circumcenter insertion until
//! every angle is at least [`QUALITY_ANGLE_DEG`]. Every boundary edge knows
//! the facet id of the polygon edge it lies on.

mod delaunay;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{cross, metrics, Polygon, Vec2};
use delaunay::{min_angle_deg, Builder};

/// Smallest angle guaranteed by the generator.
pub const MIN_ANGLE_DEG: f64 = 20.0;
/// Threshold used during refinement (a little above the guarantee).
const QUALITY_ANGLE_DEG: f64 = 21.0;
/// Interior edges are kept at or below this multiple of `target_h`.
pub const MAX_EDGE_FACTOR: f64 = 1.5;
pub const DEFAULT_MAX_NODES: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub target_h: f64,
    /// Boundary spacing `target_h / 2` instead of `target_h`.
    pub graded: bool,
    pub max_nodes: usize,
}

impl MeshOptions {
    pub fn new(target_h: f64) -> Self {
        MeshOptions {
            target_h,
            graded: true,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }

    pub fn ungraded(mut self) -> Self {
        self.graded = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Nodes in counterclockwise boundary order.
    pub a: usize,
    pub b: usize,
    /// Facet id of the polygon edge this edge lies on.
    pub facet: usize,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    on_boundary: Vec<bool>,
    target_h: f64,
    polygon: Polygon,
}

impl TriMesh {
    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    /// The polygon this mesh discretizes.
    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        (self.nodes[e.b] - self.nodes[e.a]).norm()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * cross(self.nodes[b] - self.nodes[a], self.nodes[c] - self.nodes[a])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    fn from_parts(
        nodes: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
        target_h: f64,
        polygon: Polygon,
    ) -> Self {
        let mut on_boundary = vec![false; nodes.len()];
        for e in &boundary {
            on_boundary[e.a] = true;
            on_boundary[e.b] = true;
        }
        TriMesh {
            nodes,
            triangles,
            boundary,
            on_boundary,
            target_h,
            polygon,
        }
    }
}

/// Index of the polygon edge whose supporting line passes closest to `x`.
fn nearest_edge(p: &Polygon, x: Vec2) -> usize {
    (0..p.len())
        .min_by(|&i, &j| {
            let di = (p.normals()[i].dot(x - p.vertices()[i])).abs();
            let dj = (p.normals()[j].dot(x - p.vertices()[j])).abs();
            di.total_cmp(&dj)
        })
        .unwrap()
}

/// Triangulates `p` with the default (graded) options.
pub fn triangulate(p: &Polygon, target_h: f64) -> Result<TriMesh> {
    triangulate_with(p, &MeshOptions::new(target_h))
}

pub fn triangulate_with(p: &Polygon, opts: &MeshOptions) -> Result<TriMesh> {
    let h = opts.target_h;
    let m = metrics(p);
    if !(h > 0.0 && h < m.inradius) {
        return Err(Error::MeshPrecondition(format!(
            "target_h = {h} must lie in (0, inradius = {})",
            m.inradius
        )));
    }
    let hb = if opts.graded { 0.5 * h } else { h };
    let lattice_estimate = m.area / (0.5 * 3f64.sqrt() * h * h);
    let boundary_estimate = p.perimeter() / hb;
    let needed = (lattice_estimate + boundary_estimate) as usize;
    if needed > opts.max_nodes {
        return Err(Error::MeshTooFine {
            needed,
            cap: opts.max_nodes,
        });
    }

    let mut boundary = Vec::new();
    // one row of near-equilateral triangles along every facet
    let mut layer: Vec<Vec2> = Vec::new();
    let mut layer_depth: f64 = 0.0;
    for k in 0..p.len() {
        let (a, b) = p.edge(k);
        let pieces = ((b - a).norm() / hb).ceil().max(1.0) as usize;
        let step = (b - a).norm() / pieces as f64;
        let offset = 0.5 * 3f64.sqrt() * step;
        layer_depth = layer_depth.max(offset);
        let inward = -p.normals()[k].vec();
        for j in 0..pieces {
            boundary.push(a + (b - a) * (j as f64 / pieces as f64));
            let x = a + (b - a) * ((j as f64 + 0.5) / pieces as f64) + inward * offset;
            if p.depth(x) >= 0.9 * offset
                && layer.iter().all(|y| (x - y).norm() >= 0.75 * step)
            {
                layer.push(x);
            }
        }
    }
    let hub = m.incenter;
    let mut builder = Builder::fan(boundary, hub, h, opts.max_nodes);
    builder.make_delaunay();
    for &x in &layer {
        if (x - hub).norm() > 0.5 * h {
            builder.insert(x)?;
        }
    }

    // equilateral lattice through the hub, kept clear of the boundary layer
    let margin = layer_depth + 0.75 * h;
    let dy = 0.5 * 3f64.sqrt() * h;
    let (mut lo, mut hi) = (p.vertices()[0], p.vertices()[0]);
    for v in p.vertices() {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let j0 = ((lo.y - hub.y) / dy).floor() as i64;
    let j1 = ((hi.y - hub.y) / dy).ceil() as i64;
    for j in j0..=j1 {
        let y = hub.y + j as f64 * dy;
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        let i0 = ((lo.x - hub.x - shift) / h).floor() as i64;
        let i1 = ((hi.x - hub.x - shift) / h).ceil() as i64;
        for i in i0..=i1 {
            let x = Vec2::new(hub.x + shift + i as f64 * h, y);
            if p.depth(x) >= margin {
                builder.insert(x)?;
            }
        }
    }

    let cap = 10 * builder.pts.len() + 1000;
    builder.refine_quality(QUALITY_ANGLE_DEG, 0.97 * MAX_EDGE_FACTOR * h, cap)?;

    let nodes = builder.pts;
    let triangles = builder.tris;
    let mut edges: Vec<BoundaryEdge> = builder
        .hull
        .iter()
        .map(|&(a, b)| {
            let mid = 0.5 * (nodes[a] + nodes[b]);
            BoundaryEdge {
                a,
                b,
                facet: p.facet_ids()[nearest_edge(p, mid)],
            }
        })
        .collect();
    order_boundary(&mut edges);
    Ok(TriMesh::from_parts(nodes, triangles, edges, h, p.clone()))
}

/// Sorts boundary edges into one ccw chain.
fn order_boundary(edges: &mut Vec<BoundaryEdge>) {
    if edges.is_empty() {
        return;
    }
    let next: HashMap<usize, BoundaryEdge> = edges.iter().map(|e| (e.a, *e)).collect();
    let start = *edges.iter().min_by_key(|e| e.a).unwrap();
    let mut out = Vec::with_capacity(edges.len());
    let mut cur = start;
    loop {
        out.push(cur);
        match next.get(&cur.b) {
            Some(e) if e.a != start.a && out.len() < edges.len() => cur = *e,
            _ => break,
        }
    }
    if out.len() == edges.len() {
        *edges = out;
    }
}

/// Uniform red refinement: every triangle is split into four.
pub fn refine(m: &TriMesh) -> Result<TriMesh> {
    refine_capped(m, DEFAULT_MAX_NODES)
}

pub fn refine_capped(m: &TriMesh, max_nodes: usize) -> Result<TriMesh> {
    let mut nodes = m.nodes.clone();
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Vec2>| -> usize {
        let key = (a.min(b), a.max(b));
        *mids.entry(key).or_insert_with(|| {
            nodes.push(0.5 * (nodes[a] + nodes[b]));
            nodes.len() - 1
        })
    };
    let edge_count = (3 * m.triangles.len() + m.boundary.len()) / 2;
    if m.nodes.len() + edge_count > max_nodes {
        return Err(Error::MeshTooFine {
            needed: m.nodes.len() + edge_count,
            cap: max_nodes,
        });
    }
    let mut triangles = Vec::with_capacity(4 * m.triangles.len());
    for &[a, b, c] in &m.triangles {
        let ab = midpoint(a, b, &mut nodes);
        let bc = midpoint(b, c, &mut nodes);
        let ca = midpoint(c, a, &mut nodes);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary = Vec::with_capacity(2 * m.boundary.len());
    for e in &m.boundary {
        let mid = midpoint(e.a, e.b, &mut nodes);
        boundary.push(BoundaryEdge {
            a: e.a,
            b: mid,
            facet: e.facet,
        });
        boundary.push(BoundaryEdge {
            a: mid,
            b: e.b,
            facet: e.facet,
        });
    }
    Ok(TriMesh::from_parts(
        nodes,
        triangles,
        boundary,
        0.5 * m.target_h,
        m.polygon.clone(),
    ))
}

/// Summary statistics from [`check_mesh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub max_boundary_edge: f64,
    /// `|Σ triangle areas - polygon area| / polygon area`.
    pub area_defect: f64,
}

/// Verifies the mesh invariants: orientation, conformity, facet partition of
/// the boundary and the minimum-angle bound.
pub fn check_mesh(m: &TriMesh) -> std::result::Result<MeshQuality, String> {
    let mut min_angle = f64::INFINITY;
    let mut max_edge: f64 = 0.0;
    let mut uses: HashMap<(usize, usize), i32> = HashMap::new();
    for (t, &[a, b, c]) in m.triangles.iter().enumerate() {
        if m.triangle_area(t) <= 0.0 {
            return Err(format!("triangle {t} is not positively oriented"));
        }
        let (pa, pb, pc) = (m.nodes[a], m.nodes[b], m.nodes[c]);
        min_angle = min_angle.min(min_angle_deg(pa, pb, pc));
        for (u, v) in [(a, b), (b, c), (c, a)] {
            max_edge = max_edge.max((m.nodes[u] - m.nodes[v]).norm());
            *uses.entry((u, v)).or_default() += 1;
        }
    }
    let mut boundary_count = 0usize;
    for (&(u, v), &count) in &uses {
        if count != 1 {
            return Err(format!("directed edge ({u}, {v}) used {count} times"));
        }
        if !uses.contains_key(&(v, u)) {
            boundary_count += 1;
        }
    }
    if boundary_count != m.boundary.len() {
        return Err(format!(
            "{} unpaired edges but {} boundary edges recorded",
            boundary_count,
            m.boundary.len()
        ));
    }
    let p = &m.polygon;
    let ids = p.facet_ids();
    let mut per_facet: HashMap<usize, f64> = HashMap::new();
    let mut max_boundary_edge: f64 = 0.0;
    for e in &m.boundary {
        if !uses.contains_key(&(e.a, e.b)) || uses.contains_key(&(e.b, e.a)) {
            return Err(format!("({}, {}) is not a boundary edge", e.a, e.b));
        }
        let k = ids
            .iter()
            .position(|&id| id == e.facet)
            .ok_or_else(|| format!("facet {} not in polygon", e.facet))?;
        let n = p.normals()[k];
        let off = n.dot(p.vertices()[k]);
        for x in [m.nodes[e.a], m.nodes[e.b]] {
            if (n.dot(x) - off).abs() > 1e-9 * p.diameter().max(1.0) {
                return Err(format!("boundary edge ({}, {}) leaves facet {}", e.a, e.b, e.facet));
            }
        }
        let l = m.edge_length(e);
        max_boundary_edge = max_boundary_edge.max(l);
        *per_facet.entry(e.facet).or_default() += l;
    }
    for (k, &id) in ids.iter().enumerate() {
        let got = per_facet.get(&id).copied().unwrap_or(0.0);
        if (got - p.lengths()[k]).abs() > 1e-9 * p.lengths()[k].max(1.0) {
            return Err(format!(
                "facet {id}: boundary edges sum to {got}, facet length {}",
                p.lengths()[k]
            ));
        }
    }
    if min_angle < MIN_ANGLE_DEG {
        return Err(format!("minimum angle {min_angle:.3}° below {MIN_ANGLE_DEG}°"));
    }
    let area = p.area();
    Ok(MeshQuality {
        min_angle_deg: min_angle,
        max_edge,
        max_boundary_edge,
        area_defect: (m.total_area() - area).abs() / area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_polytope, SupportSpec};

    fn square() -> Polygon {
        Polygon::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn square_half_spacing() {
        let m = triangulate(&square(), 0.5).unwrap();
        assert!(m.triangles().len() >= 32);
        let q = check_mesh(&m).unwrap();
        assert!(q.area_defect < 1e-10);
        assert!(q.max_edge <= 1.5 * 0.5);
        assert!(q.max_boundary_edge <= 0.5);
    }

    #[test]
    fn precondition_on_target_h() {
        let tri = Polygon::regular(3, 1.0, 0.0).unwrap();
        assert!(matches!(triangulate(&tri, 0.5), Err(Error::MeshPrecondition(_))));
        assert!(matches!(triangulate(&tri, 0.0), Err(Error::MeshPrecondition(_))));
    }

    #[test]
    fn node_cap() {
        let opts = MeshOptions {
            max_nodes: 100,
            ..MeshOptions::new(0.05)
        };
        assert!(matches!(
            triangulate_with(&square(), &opts),
            Err(Error::MeshTooFine { .. })
        ));
        let m = triangulate(&square(), 0.5).unwrap();
        assert!(matches!(refine_capped(&m, 10), Err(Error::MeshTooFine { .. })));
    }

    #[test]
    fn refine_quadruples_and_preserves_area() {
        let m = triangulate(&Polygon::regular(5, 1.0, 0.3).unwrap(), 0.2).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.triangles().len(), 4 * m.triangles().len());
        assert!((r.total_area() - m.total_area()).abs() < 1e-12);
        let rr = refine(&r).unwrap();
        assert!((rr.target_h() - m.target_h() / 4.0).abs() < 1e-15);
        check_mesh(&rr).unwrap();
    }

    #[test]
    fn facet_ids_follow_support_spec() {
        let spec = SupportSpec::from_degrees(&[0.0, 45.0, 90.0, 180.0, 270.0], 1.0)
            .unwrap()
            .with_values(vec![1.0, 5.0, 1.0, 1.0, 1.0])
            .unwrap();
        let p = build_polytope(&spec).unwrap();
        let m = triangulate(&p, 0.2).unwrap();
        check_mesh(&m).unwrap();
        assert!(m.boundary_edges().iter().all(|e| e.facet != 1));
    }

    #[test]
    fn ungraded_boundary_spacing() {
        let m = triangulate_with(&square(), &MeshOptions::new(0.25).ungraded()).unwrap();
        let q = check_mesh(&m).unwrap();
        assert!(q.max_boundary_edge <= 0.25 + 1e-12);
    }
}
