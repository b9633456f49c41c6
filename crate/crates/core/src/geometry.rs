//! Convex-polygon calculus over support numbers.
//!
//! A body is described either by its vertex cycle ([`Polygon`]) or by a fixed
//! fan of outward normals plus one support number per normal ([`SupportSpec`]).
//! [`build_polytope`] turns the second description into the first by
//! intersecting the halfplanes `<x, X_i> <= h_i`.
//!
//! Every polygon edge carries a *facet id*. For polygons built from a
//! `SupportSpec` the id is the index of the generating normal, so per-facet
//! quantities can be reported index-aligned with the spec even when some
//! halfplanes are inactive.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;

/// Absolute tolerance on cross products and lengths.
pub const GEOM_EPS: f64 = 1e-10;

/// Minimum angular separation between two normals of a `SupportSpec`.
pub const MIN_NORMAL_GAP: f64 = 1e-9;

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A unit vector on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vec2);

impl Direction {
    /// Requires `x² + y² = 1` within 1e-12.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let n2 = x * x + y * y;
        if !n2.is_finite() || (n2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvariantViolation(format!(
                "direction ({x}, {y}) is not a unit vector"
            )));
        }
        Ok(Direction(Vec2::new(x, y)))
    }

    /// Normalizes any finite nonzero vector.
    pub fn normalize(v: Vec2) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n <= 1e-300 {
            return Err(Error::InvariantViolation(format!(
                "cannot normalize vector ({}, {})",
                v.x, v.y
            )));
        }
        Ok(Direction(v / n))
    }

    pub fn from_angle(theta: f64) -> Self {
        Direction(Vec2::new(theta.cos(), theta.sin()))
    }

    pub fn from_degrees(deg: f64) -> Self {
        // exact axis directions for multiples of 90°
        let r = deg.rem_euclid(360.0);
        if r == 0.0 {
            return Direction(Vec2::new(1.0, 0.0));
        } else if r == 90.0 {
            return Direction(Vec2::new(0.0, 1.0));
        } else if r == 180.0 {
            return Direction(Vec2::new(-1.0, 0.0));
        } else if r == 270.0 {
            return Direction(Vec2::new(0.0, -1.0));
        }
        Self::from_angle(deg.to_radians())
    }

    #[inline]
    pub fn vec(&self) -> Vec2 {
        self.0
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.0.y
    }

    /// Angle in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        let a = self.0.y.atan2(self.0.x);
        if a < 0.0 {
            let w = a + TAU;
            if w >= TAU {
                0.0
            } else {
                w
            }
        } else {
            a
        }
    }

    /// Counterclockwise tangent (the direction of travel along a facet with
    /// this outward normal when the boundary is traversed counterclockwise).
    #[inline]
    pub fn tangent(&self) -> Vec2 {
        Vec2::new(-self.0.y, self.0.x)
    }

    #[inline]
    pub fn dot(&self, v: Vec2) -> f64 {
        self.0.dot(&v)
    }
}

/// Largest angular gap between cyclically consecutive sorted angles.
fn max_angular_gap(sorted_angles: &[f64]) -> f64 {
    let n = sorted_angles.len();
    if n == 0 {
        return TAU;
    }
    let mut gap: f64 = sorted_angles[0] + TAU - sorted_angles[n - 1];
    for w in sorted_angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// Checks the fan invariants shared by `SupportSpec` and target measures:
/// strictly increasing angles with gaps of at least [`MIN_NORMAL_GAP`] and
/// positive spanning.
pub(crate) fn validate_fan(normals: &[Direction]) -> Result<()> {
    let angles: Vec<f64> = normals.iter().map(Direction::angle).collect();
    for i in 0..angles.len() {
        let j = (i + 1) % angles.len();
        if angles.len() < 2 {
            break;
        }
        let gap = if j == 0 {
            angles[0] + TAU - angles[i]
        } else {
            angles[j] - angles[i]
        };
        if j != 0 && gap <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "normals are not sorted by angle at index {i}"
            )));
        }
        if gap < MIN_NORMAL_GAP {
            return Err(Error::DegenerateNormals(i, j));
        }
    }
    if max_angular_gap(&angles) >= PI - 1e-12 {
        return Err(Error::UnboundedBody);
    }
    Ok(())
}

/// Fixed outward normals (sorted by angle) with one support number each.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSpec {
    normals: Vec<Direction>,
    values: Vec<f64>,
}

impl SupportSpec {
    pub fn new(normals: Vec<Direction>, values: Vec<f64>) -> Result<Self> {
        if normals.len() != values.len() {
            return Err(Error::InvariantViolation(format!(
                "{} normals but {} support values",
                normals.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(
                "support values must be finite".into(),
            ));
        }
        validate_fan(&normals)?;
        Ok(SupportSpec { normals, values })
    }

    /// Sorts `(normal, value)` pairs by angle before validating.
    pub fn from_unsorted(mut pairs: Vec<(Direction, f64)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.angle().total_cmp(&b.0.angle()));
        let (normals, values) = pairs.into_iter().unzip();
        Self::new(normals, values)
    }

    /// Normals at the given angles (degrees), all support numbers equal.
    pub fn from_degrees(angles_deg: &[f64], value: f64) -> Result<Self> {
        Self::from_unsorted(
            angles_deg
                .iter()
                .map(|&a| (Direction::from_degrees(a), value))
                .collect(),
        )
    }

    /// `n` equally spaced normals starting at angle 0.
    pub fn regular(n: usize, value: f64) -> Result<Self> {
        let normals = (0..n)
            .map(|k| Direction::from_angle(TAU * k as f64 / n as f64))
            .collect();
        Self::new(normals, vec![value; n])
    }

    /// The facet normals and support numbers of a polygon.
    pub fn of_polygon(p: &Polygon) -> Self {
        let mut pairs: Vec<(Direction, f64)> = p
            .normals
            .iter()
            .zip(&p.vertices)
            .map(|(n, v)| (*n, n.dot(*v)))
            .collect();
        pairs.sort_by(|a, b| a.0.angle().total_cmp(&b.0.angle()));
        let (normals, values) = pairs.into_iter().unzip();
        SupportSpec { normals, values }
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn normals(&self) -> &[Direction] {
        &self.normals
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same normals, new support numbers.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.normals.len() {
            return Err(Error::InvariantViolation(format!(
                "expected {} support values, got {}",
                self.normals.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(
                "support values must be finite".into(),
            ));
        }
        Ok(SupportSpec {
            normals: self.normals.clone(),
            values,
        })
    }

    /// Support numbers of `p` on this fan.
    pub fn sample(&self, p: &Polygon) -> Self {
        SupportSpec {
            normals: self.normals.clone(),
            values: self.normals.iter().map(|d| support_function(p, *d)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SupportSpec {
            normals: self.normals.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Support numbers of the body translated by `t`.
    pub fn translated(&self, t: Vec2) -> Self {
        SupportSpec {
            normals: self.normals.clone(),
            values: self
                .normals
                .iter()
                .zip(&self.values)
                .map(|(n, v)| v + n.dot(t))
                .collect(),
        }
    }
}

/// Strictly convex counterclockwise polygon.
///
/// Edge `k` runs from `vertices[k]` to `vertices[k + 1]` and has outward
/// normal `normals[k]`, length `lengths[k]` and facet id `facet_ids[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    normals: Vec<Direction>,
    lengths: Vec<f64>,
    facet_ids: Vec<usize>,
}

impl Polygon {
    /// Builds a polygon from a counterclockwise vertex cycle. Collinear and
    /// repeated vertices are dropped; reflex turns are rejected.
    pub fn from_vertices(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        let ids = (0..n).collect();
        Self::from_labelled(vertices, ids)
    }

    /// Like [`Polygon::from_vertices`], with an explicit facet id for the
    /// edge leaving each vertex.
    pub(crate) fn from_labelled(vertices: Vec<Vec2>, ids: Vec<usize>) -> Result<Self> {
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvariantViolation("non-finite vertex".into()));
        }
        let mut vs = vertices;
        let mut ids = ids;
        // drop repeated and collinear vertices until stable
        loop {
            let n = vs.len();
            if n < 3 {
                return Err(Error::EmptyInterior);
            }
            let mut keep = vec![true; n];
            let mut changed = false;
            for i in 0..n {
                let prev = vs[(i + n - 1) % n];
                let cur = vs[i];
                let next = vs[(i + 1) % n];
                if (cur - prev).norm() <= GEOM_EPS {
                    keep[i] = false;
                    changed = true;
                    break;
                }
                let c = cross(cur - prev, next - cur);
                if c.abs() <= GEOM_EPS * (cur - prev).norm().max(1.0) * (next - cur).norm().max(1.0)
                {
                    keep[i] = false;
                    changed = true;
                    break;
                }
            }
            if !changed {
                break;
            }
            // the edge leaving a dropped vertex merges into the previous edge
            let mut nv = Vec::with_capacity(n - 1);
            let mut ni = Vec::with_capacity(n - 1);
            for i in 0..n {
                if keep[i] {
                    nv.push(vs[i]);
                    ni.push(ids[i]);
                }
            }
            vs = nv;
            ids = ni;
        }
        let n = vs.len();
        for i in 0..n {
            let a = vs[i];
            let b = vs[(i + 1) % n];
            let c = vs[(i + 2) % n];
            if cross(b - a, c - b) <= 0.0 {
                return Err(Error::InvariantViolation(
                    "vertex cycle is not strictly convex and counterclockwise".into(),
                ));
            }
        }
        let mut normals = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        for i in 0..n {
            let e = vs[(i + 1) % n] - vs[i];
            lengths.push(e.norm());
            normals.push(Direction::normalize(Vec2::new(e.y, -e.x))?);
        }
        let p = Polygon {
            vertices: vs,
            normals,
            lengths,
            facet_ids: ids,
        };
        if p.area() <= 0.0 {
            return Err(Error::EmptyInterior);
        }
        Ok(p)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::from_vertices(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` about the
    /// origin, first vertex at angle `phase`.
    pub fn regular(n: usize, r: f64, phase: f64) -> Result<Self> {
        Self::from_vertices(
            (0..n)
                .map(|k| {
                    let a = phase + TAU * k as f64 / n as f64;
                    Vec2::new(r * a.cos(), r * a.sin())
                })
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn normals(&self) -> &[Direction] {
        &self.normals
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn facet_ids(&self) -> &[usize] {
        &self.facet_ids
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, k: usize) -> (Vec2, Vec2) {
        (self.vertices[k], self.vertices[(k + 1) % self.len()])
    }

    pub fn area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let n = self.len();
        // shift to the first vertex for conditioning
        let o = self.vertices[0];
        let mut c = Vec2::zeros();
        let mut a2 = 0.0;
        for i in 0..n {
            let p = self.vertices[i] - o;
            let q = self.vertices[(i + 1) % n] - o;
            let w = cross(p, q);
            a2 += w;
            c += (p + q) * w;
        }
        o + c / (3.0 * a2)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Signed distance from `x` to the boundary, positive inside.
    pub fn depth(&self, x: Vec2) -> f64 {
        self.normals
            .iter()
            .zip(&self.vertices)
            .map(|(n, v)| n.dot(*v) - n.dot(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.depth(x) >= -GEOM_EPS
    }

    pub fn translate(&self, t: Vec2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| v + t).collect(),
            ..self.clone()
        }
    }

    /// Steiner point: vertices weighted by their exterior angles.
    pub fn steiner_point(&self) -> Vec2 {
        let n = self.len();
        let mut s = Vec2::zeros();
        for k in 0..n {
            let before = self.normals[(k + n - 1) % n].angle();
            let after = self.normals[k].angle();
            let ext = (after - before).rem_euclid(TAU);
            s += self.vertices[k] * ext;
        }
        s / TAU
    }

    /// Facet lengths aggregated by facet id into `n` slots (zero for ids not
    /// present).
    pub fn facet_lengths_aligned(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (id, l) in self.facet_ids.iter().zip(&self.lengths) {
            if *id < n {
                out[*id] += l;
            }
        }
        out
    }
}

/// Intersection of the halfplanes `<x, X_i> <= h_i`.
///
/// Each constraint line is clipped against all the others; lines whose
/// surviving segment is shorter than [`GEOM_EPS`] are inactive and do not
/// appear in the polygon.
pub fn build_polytope(spec: &SupportSpec) -> Result<Polygon> {
    let n = spec.len();
    if n < 3 {
        return Err(Error::UnboundedBody);
    }
    let normals = spec.normals();
    let h = spec.values();
    let mut starts = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let xi = normals[i];
        let t = xi.tangent();
        let p0 = xi.vec() * h[i];
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut feasible = true;
        for j in 0..n {
            if j == i {
                continue;
            }
            let a = normals[j].dot(t);
            let b = h[j] - normals[j].dot(p0);
            if a.abs() < 1e-15 {
                if b < -GEOM_EPS {
                    feasible = false;
                    break;
                }
            } else if a > 0.0 {
                hi = hi.min(b / a);
            } else {
                lo = lo.max(b / a);
            }
        }
        if !feasible {
            continue;
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::UnboundedBody);
        }
        if hi - lo > GEOM_EPS {
            starts.push(p0 + t * lo);
            ids.push(i);
        }
    }
    if starts.len() < 3 {
        return Err(Error::EmptyInterior);
    }
    Polygon::from_labelled(starts, ids).map_err(|e| match e {
        Error::InvariantViolation(_) => Error::EmptyInterior,
        other => other,
    })
}

/// `max_v <d, v>` over the vertices.
pub fn support_function(p: &Polygon, d: Direction) -> f64 {
    p.vertices
        .iter()
        .map(|v| d.dot(*v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Rotates a ccw cycle so it starts at the lowest (then leftmost) vertex.
fn from_bottom(vs: &[Vec2]) -> Vec<Vec2> {
    let k = (0..vs.len())
        .min_by(|&a, &b| {
            vs[a].y
                .total_cmp(&vs[b].y)
                .then(vs[a].x.total_cmp(&vs[b].x))
        })
        .unwrap_or(0);
    vs[k..].iter().chain(&vs[..k]).copied().collect()
}

/// Minkowski sum of two convex ccw vertex cycles by angular edge merge.
/// Either cycle may be a single point.
pub(crate) fn sum_cycles(a: &[Vec2], b: &[Vec2]) -> Vec<Vec2> {
    let p = from_bottom(a);
    let q = from_bottom(b);
    let (n, m) = (p.len(), q.len());
    // a single point contributes no edges
    let ne = if n > 1 { n } else { 0 };
    let me = if m > 1 { m } else { 0 };
    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < ne || j < me {
        out.push(p[i % n] + q[j % m]);
        if i == ne {
            j += 1;
            continue;
        }
        if j == me {
            i += 1;
            continue;
        }
        let ep = p[(i + 1) % n] - p[i % n];
        let eq = q[(j + 1) % m] - q[j % m];
        let c = cross(ep, eq);
        if c > 0.0 {
            i += 1;
        } else if c < 0.0 {
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    if out.is_empty() {
        out.push(p[0] + q[0]);
    }
    out
}

pub fn minkowski_sum(p: &Polygon, q: &Polygon) -> Polygon {
    Polygon::from_vertices(sum_cycles(&p.vertices, &q.vertices))
        .expect("sum of two valid convex polygons is a valid convex polygon")
}

/// Dilation about the origin.
pub fn scale(p: &Polygon, s: f64) -> Result<Polygon> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeScale(s));
    }
    if s == 0.0 {
        return Err(Error::EmptyInterior);
    }
    Ok(Polygon {
        vertices: p.vertices.iter().map(|v| v * s).collect(),
        normals: p.normals.clone(),
        lengths: p.lengths.iter().map(|l| l * s).collect(),
        facet_ids: p.facet_ids.clone(),
    })
}

/// `(1 - t) p0 + t p1`.
pub fn minkowski_combination(p0: &Polygon, p1: &Polygon, t: f64) -> Result<Polygon> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvariantViolation(format!(
            "combination parameter {t} outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(p0.clone());
    }
    if t == 1.0 {
        return Ok(p1.clone());
    }
    Ok(minkowski_sum(&scale(p0, 1.0 - t)?, &scale(p1, t)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub diameter: f64,
    pub inradius: f64,
    /// Center of a largest inscribed disk.
    pub incenter: Vec2,
    /// About the area centroid.
    pub circumradius: f64,
    pub centroid: Vec2,
    pub area: f64,
}

/// Largest inscribed disk.
///
/// Solves `max r` subject to `<x, n_k> + r <= h_k` by enumerating the vertices
/// of the feasible set in `(x, r)`: every optimum is attained where three
/// constraints are active. With several optimal vertices the center is their
/// mean.
pub fn inscribed_disk(p: &Polygon) -> (f64, Vec2) {
    let spec = SupportSpec::of_polygon(p);
    let (n, h) = (spec.normals(), spec.values());
    let tol = 1e-12 * (1.0 + h.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let mut candidates = Vec::new();
    for i in 0..n.len() {
        for j in i + 1..n.len() {
            let a = n[i].vec() - n[j].vec();
            for k in j + 1..n.len() {
                let b = n[i].vec() - n[k].vec();
                let det = cross(a, b);
                if det.abs() < 1e-14 {
                    continue;
                }
                let (ra, rb) = (h[i] - h[j], h[i] - h[k]);
                let x = Vec2::new(ra * b.y - rb * a.y, a.x * rb - b.x * ra) / det;
                candidates.push((h[i] - n[i].dot(x), x));
            }
        }
    }
    candidates.sort_by(|u, v| v.0.total_cmp(&u.0));
    let feasible = |r: f64, x: Vec2| n.iter().zip(h).all(|(nk, hk)| nk.dot(x) + r <= hk + tol);
    let mut best: Option<f64> = None;
    let (mut sum, mut count) = (Vec2::zeros(), 0usize);
    for (r, x) in candidates {
        if let Some(b) = best {
            if r < b - tol {
                break;
            }
        }
        if feasible(r, x) {
            best.get_or_insert(r);
            sum += x;
            count += 1;
        }
    }
    match best {
        Some(r) => (r, sum / count as f64),
        None => (0.0, p.centroid()),
    }
}

pub fn metrics(p: &Polygon) -> Metrics {
    let centroid = p.centroid();
    let circumradius = p
        .vertices
        .iter()
        .map(|v| (v - centroid).norm())
        .fold(0.0, f64::max);
    let (inradius, incenter) = inscribed_disk(p);
    Metrics {
        diameter: p.diameter(),
        inradius,
        incenter,
        circumradius,
        centroid,
        area: p.area(),
    }
}

/// Hausdorff distance as the sup-norm of the support-function difference.
///
/// On each arc between consecutive normals of the merged fan both maximizing
/// vertices are fixed, so the difference is `<v - w, u>` there; its extrema
/// sit at the arc ends or at `u = ±(v - w)/|v - w|`.
pub fn hausdorff_distance(p: &Polygon, q: &Polygon) -> f64 {
    let mut angles: Vec<f64> = p
        .normals
        .iter()
        .chain(&q.normals)
        .map(Direction::angle)
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let gap = |u: Direction| (support_function(p, u) - support_function(q, u)).abs();
    let argmax = |poly: &Polygon, u: Direction| {
        poly.vertices
            .iter()
            .copied()
            .max_by(|a, b| u.dot(*a).total_cmp(&u.dot(*b)))
            .unwrap()
    };
    let mut best: f64 = 0.0;
    let m = angles.len();
    for k in 0..m {
        let a0 = angles[k];
        let a1 = if k + 1 < m { angles[k + 1] } else { angles[0] + TAU };
        best = best.max(gap(Direction::from_angle(a0)));
        let mid = Direction::from_angle(0.5 * (a0 + a1));
        let d = argmax(p, mid) - argmax(q, mid);
        if d.norm() > 0.0 {
            let base = d.y.atan2(d.x);
            for cand in [base, base + PI] {
                let mut c = cand.rem_euclid(TAU);
                if c < a0 {
                    c += TAU;
                }
                if c > a0 && c < a1 {
                    best = best.max(gap(Direction::from_angle(c)));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn axis_spec(values: [f64; 4]) -> SupportSpec {
        SupportSpec::from_degrees(&[0.0, 90.0, 180.0, 270.0], 0.0)
            .unwrap()
            .with_values(values.to_vec())
            .unwrap()
    }

    fn square(half: f64) -> Polygon {
        Polygon::rectangle(-half, -half, half, half).unwrap()
    }

    fn same_vertex_set(p: &Polygon, q: &Polygon, tol: f64) -> bool {
        p.len() == q.len()
            && p.vertices()
                .iter()
                .all(|v| q.vertices().iter().any(|w| (v - w).norm() < tol))
    }

    #[test]
    fn square_from_axis_normals() {
        let p = build_polytope(&axis_spec([1.0; 4])).unwrap();
        assert!(same_vertex_set(&p, &square(1.0), 1e-12));
        assert_relative_eq!(p.area(), 4.0, epsilon = 1e-12);
        assert_eq!(p.facet_ids(), &[0, 1, 2, 3]);
    }

    #[test]
    fn plane_through_origin_gives_rectangle() {
        let p = build_polytope(&axis_spec([1.0, 1.0, 1.0, 0.0])).unwrap();
        let r = Polygon::rectangle(-1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(same_vertex_set(&p, &r, 1e-12));
    }

    #[test]
    fn two_normals_is_unbounded() {
        let err = SupportSpec::from_degrees(&[0.0, 90.0], 1.0).unwrap_err();
        assert_eq!(err, Error::UnboundedBody);
        // half-turn gap is still unbounded
        let err = SupportSpec::from_degrees(&[0.0, 90.0, 180.0], 1.0).unwrap_err();
        assert_eq!(err, Error::UnboundedBody);
    }

    #[test]
    fn near_parallel_normals_rejected() {
        let n = vec![
            Direction::from_angle(0.0),
            Direction::from_angle(1e-11),
            Direction::from_angle(2.0),
            Direction::from_angle(4.0),
        ];
        assert!(matches!(
            SupportSpec::new(n, vec![1.0; 4]),
            Err(Error::DegenerateNormals(0, 1))
        ));
    }

    #[test]
    fn inactive_facet_is_dropped_but_indexed() {
        // the 45° constraint at distance 2 never touches the unit square
        let spec = SupportSpec::from_unsorted(vec![
            (Direction::from_degrees(0.0), 1.0),
            (Direction::from_degrees(45.0), 2.0),
            (Direction::from_degrees(90.0), 1.0),
            (Direction::from_degrees(180.0), 1.0),
            (Direction::from_degrees(270.0), 1.0),
        ])
        .unwrap();
        let p = build_polytope(&spec).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.facet_ids(), &[0, 2, 3, 4]);
        let l = p.facet_lengths_aligned(5);
        assert_eq!(l[1], 0.0);
        assert_relative_eq!(l[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_intersection() {
        let spec = axis_spec([1.0, 1.0, -1.5, 1.0]);
        assert_eq!(build_polytope(&spec).unwrap_err(), Error::EmptyInterior);
        let spec = axis_spec([1.0, 1.0, -1.0, 1.0]);
        assert_eq!(build_polytope(&spec).unwrap_err(), Error::EmptyInterior);
    }

    #[test]
    fn support_function_examples() {
        let s = square(1.0);
        assert_eq!(support_function(&s, Direction::from_degrees(0.0)), 1.0);
        let diag = Direction::normalize(Vec2::new(1.0, 1.0)).unwrap();
        assert_relative_eq!(support_function(&s, diag), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn minkowski_examples() {
        let s = square(1.0);
        assert!(same_vertex_set(&minkowski_sum(&s, &s), &square(2.0), 1e-12));
        let t = Vec2::new(0.3, -2.0);
        let shifted = Polygon::from_vertices(sum_cycles(s.vertices(), &[t])).unwrap();
        assert!(same_vertex_set(&shifted, &s.translate(t), 1e-12));

        let oct = Polygon::regular(8, 1.0, PI / 8.0).unwrap();
        let sum = minkowski_sum(&s, &oct);
        assert!(sum.len() <= 8);
        for n in oct.normals() {
            assert_relative_eq!(
                support_function(&sum, *n),
                support_function(&s, *n) + support_function(&oct, *n),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn scale_examples() {
        let s = square(1.0);
        assert!(same_vertex_set(&scale(&s, 2.0).unwrap(), &square(2.0), 1e-12));
        assert_eq!(scale(&s, 1.0).unwrap(), s);
        assert_eq!(scale(&s, 0.0).unwrap_err(), Error::EmptyInterior);
        assert!(matches!(scale(&s, -1.0), Err(Error::NegativeScale(_))));
    }

    #[test]
    fn metrics_examples() {
        let m = metrics(&square(1.0));
        assert_relative_eq!(m.diameter, 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(m.inradius, 1.0, epsilon = 1e-10);
        assert_relative_eq!(m.area, 4.0, epsilon = 1e-12);
        assert!(m.centroid.norm() < 1e-12);
        assert_relative_eq!(m.circumradius, 2f64.sqrt(), epsilon = 1e-12);

        let m = metrics(&Polygon::rectangle(-2.0, -1.0, 2.0, 1.0).unwrap());
        assert_relative_eq!(m.inradius, 1.0, epsilon = 1e-10);
        assert_relative_eq!(m.diameter, 2.0 * 5f64.sqrt(), epsilon = 1e-12);

        let m = metrics(&Polygon::regular(6, 1.0, 0.0).unwrap());
        assert_relative_eq!(m.inradius, 3f64.sqrt() / 2.0, epsilon = 1e-10);
        assert!(m.incenter.norm() < 1e-8);
    }

    /// Brute-force Hausdorff distance between densely sampled boundaries.
    fn sampled_hausdorff(p: &Polygon, q: &Polygon, per_edge: usize) -> f64 {
        let sample = |poly: &Polygon| {
            let mut pts = Vec::new();
            for k in 0..poly.len() {
                let (a, b) = poly.edge(k);
                for s in 0..per_edge {
                    pts.push(a + (b - a) * (s as f64 / per_edge as f64));
                }
            }
            pts
        };
        // distance from a point to a convex body (zero inside)
        let dist_to_body = |x: Vec2, poly: &Polygon| {
            if poly.contains(x) {
                return 0.0;
            }
            (0..poly.len())
                .map(|k| {
                    let (a, b) = poly.edge(k);
                    let t = ((x - a).dot(&(b - a)) / (b - a).norm_squared()).clamp(0.0, 1.0);
                    (x - (a + (b - a) * t)).norm()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let one = |a: &Polygon, b: &Polygon| {
            sample(a)
                .into_iter()
                .map(|x| dist_to_body(x, b))
                .fold(0.0, f64::max)
        };
        one(p, q).max(one(q, p))
    }

    #[test]
    fn hausdorff_examples() {
        let s1 = square(1.0);
        let s2 = square(2.0);
        assert_eq!(hausdorff_distance(&s1, &s1), 0.0);
        let oracle = sampled_hausdorff(&s1, &s2, 400);
        assert_relative_eq!(oracle, 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(hausdorff_distance(&s1, &s2), oracle, epsilon = 1e-12);

        let t = Vec2::new(0.3, 0.4);
        assert_relative_eq!(hausdorff_distance(&s1, &s1.translate(t)), 0.5, epsilon = 1e-12);

        let hex = Polygon::regular(6, 1.3, 0.2).unwrap();
        let tri = Polygon::regular(3, 0.9, 1.0).unwrap().translate(Vec2::new(0.2, -0.1));
        let exact = hausdorff_distance(&hex, &tri);
        let sampled = sampled_hausdorff(&hex, &tri, 2000);
        assert!((exact - sampled).abs() < 1e-3, "{exact} vs {sampled}");
    }

    #[test]
    fn steiner_point_of_symmetric_body_is_center() {
        let p = Polygon::regular(7, 2.0, 0.3).unwrap().translate(Vec2::new(1.0, -3.0));
        assert!((p.steiner_point() - Vec2::new(1.0, -3.0)).norm() < 1e-12);
    }

    #[test]
    fn roundtrip_through_own_support_numbers() {
        let p = Polygon::regular(9, 1.7, 0.1).unwrap();
        let rebuilt = build_polytope(&SupportSpec::of_polygon(&p)).unwrap();
        assert!(hausdorff_distance(&p, &rebuilt) < 1e-9);
    }

    #[test]
    fn unsorted_normals_rejected() {
        let n = vec![
            Direction::from_degrees(90.0),
            Direction::from_degrees(0.0),
            Direction::from_degrees(200.0),
        ];
        assert!(matches!(
            SupportSpec::new(n, vec![1.0; 3]),
            Err(Error::InvariantViolation(_))
        ));
    }
}
