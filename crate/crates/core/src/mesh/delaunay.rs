//! Incremental Delaunay triangulation of a convex region with Lawson flips
//! and circumcenter (Ruppert-style) quality refinement.
//!
//! The region is convex and its boundary is the hull of the point set, so
//! the only constrained edges are hull edges: exactly the triangle edges
//! without a neighbor. Flips never touch them.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geometry::{cross, Vec2};

pub(crate) const NONE: usize = usize::MAX;

#[inline]
fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross(b - a, c - a)
}

/// Positive when `d` lies inside the circumcircle of the ccw triangle `abc`.
fn incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    let (ax, ay) = (a.x - d.x, a.y - d.y);
    let (bx, by) = (b.x - d.x, b.y - d.y);
    let (cx, cy) = (c.x - d.x, c.y - d.y);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}

pub(crate) fn circumcenter(a: Vec2, b: Vec2, c: Vec2) -> Vec2 {
    let ba = b - a;
    let ca = c - a;
    let d = 2.0 * cross(ba, ca);
    let b2 = ba.norm_squared();
    let c2 = ca.norm_squared();
    a + Vec2::new(ca.y * b2 - ba.y * c2, ba.x * c2 - ca.x * b2) / d
}

/// Smallest interior angle of a triangle, in degrees.
pub(crate) fn min_angle_deg(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let ang = |p: Vec2, q: Vec2, r: Vec2| {
        let u = q - p;
        let v = r - p;
        cross(u, v).abs().atan2(u.dot(&v))
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b)).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Loc {
    Inside(usize),
    /// On edge `k` (opposite local vertex `k`) of the triangle.
    Edge(usize, usize),
    Vertex(usize),
    /// Beyond hull edge `k` of the triangle.
    Outside(usize, usize),
}

pub(crate) struct Builder {
    pub pts: Vec<Vec2>,
    pub tris: Vec<[usize; 3]>,
    pub adj: Vec<[usize; 3]>,
    /// Directed ccw hull edges.
    pub hull: HashSet<(usize, usize)>,
    last: usize,
    /// Length tolerance for on-edge / coincidence decisions.
    eps: f64,
    /// Incircle tolerance, scaled by the fourth power of the mesh size.
    in_eps: f64,
    rng: u64,
    pub max_nodes: usize,
}

impl Builder {
    /// Fan triangulation of a ccw boundary loop around an interior hub.
    pub fn fan(boundary: Vec<Vec2>, hub: Vec2, h: f64, max_nodes: usize) -> Self {
        let nb = boundary.len();
        let mut pts = boundary;
        pts.push(hub);
        let tris: Vec<[usize; 3]> = (0..nb).map(|i| [i, (i + 1) % nb, nb]).collect();
        let hull = (0..nb).map(|i| (i, (i + 1) % nb)).collect();
        let mut b = Builder {
            pts,
            adj: vec![[NONE; 3]; tris.len()],
            tris,
            hull,
            last: 0,
            eps: 1e-9 * h,
            in_eps: 1e-12 * h.powi(4),
            rng: 0x9e3779b97f4a7c15,
            max_nodes,
        };
        b.rebuild_adjacency();
        b
    }

    fn rebuild_adjacency(&mut self) {
        let mut owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.tris.len());
        for (t, tri) in self.tris.iter().enumerate() {
            for k in 0..3 {
                owner.insert((tri[(k + 1) % 3], tri[(k + 2) % 3]), t);
            }
        }
        for t in 0..self.tris.len() {
            let tri = self.tris[t];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                self.adj[t][k] = owner.get(&(b, a)).copied().unwrap_or(NONE);
            }
        }
    }

    fn next_rand(&mut self) -> u64 {
        // xorshift64
        let mut x = self.rng;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.rng = x;
        x
    }

    fn classify(&self, t: usize, p: Vec2) -> Option<Loc> {
        let v = self.tris[t];
        for &i in &v {
            if (self.pts[i] - p).norm() <= self.eps {
                return Some(Loc::Vertex(i));
            }
        }
        let mut zeros = [false; 3];
        for k in 0..3 {
            let a = self.pts[v[(k + 1) % 3]];
            let b = self.pts[v[(k + 2) % 3]];
            let d = orient(a, b, p) / (b - a).norm();
            if d < -self.eps {
                return None;
            }
            zeros[k] = d.abs() <= self.eps;
        }
        match zeros.iter().filter(|z| **z).count() {
            0 => Some(Loc::Inside(t)),
            1 => Some(Loc::Edge(t, zeros.iter().position(|z| *z).unwrap())),
            _ => {
                let k = zeros.iter().position(|z| !*z).unwrap_or(0);
                Some(Loc::Vertex(v[k]))
            }
        }
    }

    fn locate(&mut self, p: Vec2) -> Loc {
        let mut t = if self.last < self.tris.len() { self.last } else { 0 };
        let cap = 4 * self.tris.len() + 64;
        'walk: for _ in 0..cap {
            let v = self.tris[t];
            let k0 = (self.next_rand() % 3) as usize;
            for kk in 0..3 {
                let k = (k0 + kk) % 3;
                let a = self.pts[v[(k + 1) % 3]];
                let b = self.pts[v[(k + 2) % 3]];
                if orient(a, b, p) / (b - a).norm() < -self.eps {
                    let n = self.adj[t][k];
                    if n == NONE {
                        return Loc::Outside(t, k);
                    }
                    t = n;
                    continue 'walk;
                }
            }
            if let Some(loc) = self.classify(t, p) {
                return loc;
            }
        }
        // walk failed to settle (should not happen on a valid triangulation)
        for t in 0..self.tris.len() {
            if let Some(loc) = self.classify(t, p) {
                return loc;
            }
        }
        Loc::Outside(0, 0)
    }

    /// Replaces the triangles `old` by `new` (at least as many), repairing
    /// adjacency on shared and external edges. Returns the new slots.
    fn replace(&mut self, old: &[usize], new: &[[usize; 3]]) -> Vec<usize> {
        debug_assert!(new.len() >= old.len());
        let mut ext: Vec<((usize, usize), usize)> = Vec::with_capacity(3 * old.len());
        for &t in old {
            for k in 0..3 {
                let n = self.adj[t][k];
                if n != NONE && !old.contains(&n) {
                    let tri = self.tris[t];
                    ext.push(((tri[(k + 1) % 3], tri[(k + 2) % 3]), n));
                }
            }
        }
        let mut slots = old.to_vec();
        while slots.len() < new.len() {
            self.tris.push([NONE; 3]);
            self.adj.push([NONE; 3]);
            slots.push(self.tris.len() - 1);
        }
        for (i, tri) in new.iter().enumerate() {
            self.tris[slots[i]] = *tri;
            self.adj[slots[i]] = [NONE; 3];
        }
        for (i, tri) in new.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let internal = new.iter().enumerate().find(|(j, other)| {
                    *j != i && (0..3).any(|m| other[(m + 1) % 3] == b && other[(m + 2) % 3] == a)
                });
                if let Some((j, _)) = internal {
                    self.adj[slots[i]][k] = slots[j];
                } else if let Some(&(_, n)) = ext.iter().find(|(e, _)| *e == (a, b)) {
                    self.adj[slots[i]][k] = n;
                    let ntri = self.tris[n];
                    for m in 0..3 {
                        if ntri[(m + 1) % 3] == b && ntri[(m + 2) % 3] == a {
                            self.adj[n][m] = slots[i];
                        }
                    }
                }
            }
        }
        self.last = slots[0];
        slots
    }

    fn third_vertex(&self, t: usize, a: usize, b: usize) -> usize {
        *self.tris[t]
            .iter()
            .find(|&&v| v != a && v != b)
            .expect("triangle has a third vertex")
    }

    /// Flips edges opposite `p` in the stacked triangles until locally Delaunay.
    fn legalize(&mut self, p: usize, mut stack: Vec<usize>) {
        while let Some(t) = stack.pop() {
            let tri = self.tris[t];
            let Some(k) = tri.iter().position(|&v| v == p) else {
                continue;
            };
            let n = self.adj[t][k];
            if n == NONE {
                continue;
            }
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let d = self.third_vertex(n, a, b);
            let (pp, pa, pb, pd) = (self.pts[p], self.pts[a], self.pts[b], self.pts[d]);
            if incircle(pp, pa, pb, pd) > self.in_eps
                && orient(pp, pa, pd) > 0.0
                && orient(pp, pd, pb) > 0.0
            {
                let slots = self.replace(&[t, n], &[[p, a, d], [p, d, b]]);
                stack.push(slots[0]);
                stack.push(slots[1]);
            }
        }
    }

    /// Flips every interior edge until the triangulation is Delaunay.
    pub fn make_delaunay(&mut self) {
        let mut changed = true;
        let mut sweeps = 0;
        while changed && sweeps < 1000 {
            changed = false;
            sweeps += 1;
            for t in 0..self.tris.len() {
                for k in 0..3 {
                    let n = self.adj[t][k];
                    if n == NONE || n < t {
                        continue;
                    }
                    let tri = self.tris[t];
                    let (p, a, b) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    let d = self.third_vertex(n, a, b);
                    let (pp, pa, pb, pd) = (self.pts[p], self.pts[a], self.pts[b], self.pts[d]);
                    if incircle(pp, pa, pb, pd) > self.in_eps
                        && orient(pp, pa, pd) > 0.0
                        && orient(pp, pd, pb) > 0.0
                    {
                        self.replace(&[t, n], &[[p, a, d], [p, d, b]]);
                        changed = true;
                        break;
                    }
                }
            }
        }
    }

    fn push_point(&mut self, p: Vec2) -> Result<usize> {
        if self.pts.len() >= self.max_nodes {
            return Err(Error::MeshTooFine {
                needed: self.pts.len() + 1,
                cap: self.max_nodes,
            });
        }
        self.pts.push(p);
        Ok(self.pts.len() - 1)
    }

    /// Splits hull edge `k` of triangle `t` at its midpoint.
    fn split_hull_edge(&mut self, t: usize, k: usize) -> Result<usize> {
        let tri = self.tris[t];
        let (c, a, b) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
        debug_assert_eq!(self.adj[t][k], NONE);
        let m = self.push_point(0.5 * (self.pts[a] + self.pts[b]))?;
        let slots = self.replace(&[t], &[[c, a, m], [c, m, b]]);
        self.hull.remove(&(a, b));
        self.hull.insert((a, m));
        self.hull.insert((m, b));
        self.legalize(m, slots);
        Ok(m)
    }

    /// Inserts an interior point. Returns `None` when it coincides with an
    /// existing node or falls outside the hull.
    pub fn insert(&mut self, p: Vec2) -> Result<Option<usize>> {
        match self.locate(p) {
            Loc::Vertex(_) | Loc::Outside(..) => Ok(None),
            Loc::Inside(t) => {
                let [a, b, c] = self.tris[t];
                let i = self.push_point(p)?;
                let slots = self.replace(&[t], &[[a, b, i], [b, c, i], [c, a, i]]);
                self.legalize(i, slots);
                Ok(Some(i))
            }
            Loc::Edge(t, k) => {
                let n = self.adj[t][k];
                if n == NONE {
                    // boundary points are only created by explicit splits
                    return Ok(None);
                }
                let tri = self.tris[t];
                let (c, a, b) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let d = self.third_vertex(n, a, b);
                let i = self.push_point(p)?;
                let slots = self.replace(&[t, n], &[[c, a, i], [c, i, b], [d, b, i], [d, i, a]]);
                self.legalize(i, slots);
                Ok(Some(i))
            }
        }
    }

    fn hull_edge_slot(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        match self.locate(0.5 * (self.pts[a] + self.pts[b])) {
            Loc::Edge(t, k) if self.adj[t][k] == NONE => Some((t, k)),
            _ => {
                // fall back to a scan
                (0..self.tris.len()).find_map(|t| {
                    let tri = self.tris[t];
                    (0..3)
                        .find(|&k| tri[(k + 1) % 3] == a && tri[(k + 2) % 3] == b)
                        .map(|k| (t, k))
                })
            }
        }
    }

    fn is_bad(&self, t: usize, min_angle: f64, max_edge: f64) -> bool {
        let [a, b, c] = self.tris[t];
        let (pa, pb, pc) = (self.pts[a], self.pts[b], self.pts[c]);
        let longest = (pa - pb).norm().max((pb - pc).norm()).max((pc - pa).norm());
        longest > max_edge || min_angle_deg(pa, pb, pc) < min_angle
    }

    /// Inserts circumcenters of triangles with an angle below `min_angle`
    /// (degrees) or an edge longer than `max_edge`, splitting hull edges
    /// they encroach instead.
    pub fn refine_quality(&mut self, min_angle: f64, max_edge: f64, max_insertions: usize) -> Result<()> {
        let mut insertions = 0usize;
        loop {
            let bad: Vec<usize> = (0..self.tris.len())
                .filter(|&t| self.is_bad(t, min_angle, max_edge))
                .collect();
            if bad.is_empty() {
                return Ok(());
            }
            for t in bad {
                if t >= self.tris.len() || !self.is_bad(t, min_angle, max_edge) {
                    continue;
                }
                insertions += 1;
                if insertions > max_insertions {
                    return Err(Error::MeshQuality(max_insertions));
                }
                let [a, b, c] = self.tris[t];
                let cc = circumcenter(self.pts[a], self.pts[b], self.pts[c]);
                let encroached: Vec<(usize, usize)> = self
                    .hull
                    .iter()
                    .filter(|&&(u, v)| (self.pts[u] - cc).dot(&(self.pts[v] - cc)) < 0.0)
                    .copied()
                    .collect();
                if !encroached.is_empty() {
                    for (u, v) in encroached {
                        if self.hull.contains(&(u, v)) {
                            if let Some((s, k)) = self.hull_edge_slot(u, v) {
                                self.split_hull_edge(s, k)?;
                            }
                        }
                    }
                    continue;
                }
                match self.locate(cc) {
                    Loc::Outside(s, k) => {
                        self.split_hull_edge(s, k)?;
                    }
                    Loc::Vertex(_) => {}
                    _ => {
                        self.insert(cc)?;
                    }
                }
            }
        }
    }
}
