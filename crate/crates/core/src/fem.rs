//! Piecewise-linear finite elements for `Δu = -2` in Ω, `u = 0` on ∂Ω.
//!
//! The torsional rigidity is reported as the Dirichlet energy `∫|∇u|²`
//! (`tau_energy`); `tau_mass = 2∫u` is kept as a consistency check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Polygon, Vec2};
use crate::mesh::{triangulate_with, MeshOptions, TriMesh};
use crate::sparse::{pcg, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub target_h: f64,
    pub linear_tol: f64,
    pub max_cg_iters: usize,
}

impl SolverOptions {
    pub fn new(target_h: f64) -> Self {
        SolverOptions {
            target_h,
            linear_tol: 1e-10,
            max_cg_iters: 50_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_h > 0.0) {
            return Err(Error::InvariantViolation(format!(
                "target_h must be positive, got {}",
                self.target_h
            )));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol <= 1e-4) {
            return Err(Error::InvariantViolation(format!(
                "linear_tol must lie in (0, 1e-4], got {}",
                self.linear_tol
            )));
        }
        Ok(())
    }
}

/// Gradients of the three barycentric coordinates and the area.
pub(crate) fn shape_gradients(m: &TriMesh, t: usize) -> ([Vec2; 3], f64) {
    let [a, b, c] = m.triangles()[t];
    let nodes = m.nodes();
    let (pa, pb, pc) = (nodes[a], nodes[b], nodes[c]);
    let area = m.triangle_area(t);
    let g = |p: Vec2, q: Vec2| Vec2::new(p.y - q.y, q.x - p.x) / (2.0 * area);
    ([g(pb, pc), g(pc, pa), g(pa, pb)], area)
}

/// Uniform bucket grid over the mesh bounding box for point location.
#[derive(Debug, Clone)]
struct Locator {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(m: &TriMesh) -> Self {
        let nodes = m.nodes();
        let (mut lo, mut hi) = (nodes[0], nodes[0]);
        for v in nodes {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let cell = 2.0 * m.target_h();
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let idx = |v: f64, o: f64, n: usize| (((v - o) / cell).floor().max(0.0) as usize).min(n - 1);
        for (t, tri) in m.triangles().iter().enumerate() {
            let (mut tl, mut th) = (nodes[tri[0]], nodes[tri[0]]);
            for &i in &tri[1..] {
                tl = tl.inf(&nodes[i]);
                th = th.sup(&nodes[i]);
            }
            for iy in idx(tl.y, lo.y, ny)..=idx(th.y, lo.y, ny) {
                for ix in idx(tl.x, lo.x, nx)..=idx(th.x, lo.x, nx) {
                    buckets[iy * nx + ix].push(t);
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn find(&self, m: &TriMesh, x: Vec2) -> Option<(usize, [f64; 3])> {
        let fx = (x.x - self.origin.x) / self.cell;
        let fy = (x.y - self.origin.y) / self.cell;
        if fx < -1e-9 || fy < -1e-9 {
            return None;
        }
        let ix = (fx.max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.max(0.0) as usize).min(self.ny - 1);
        let nodes = m.nodes();
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[iy * self.nx + ix] {
            let [a, b, c] = m.triangles()[t];
            let (pa, pb, pc) = (nodes[a], nodes[b], nodes[c]);
            let det = crate::geometry::cross(pb - pa, pc - pa);
            let la = crate::geometry::cross(pc - pb, x - pb) / det;
            let lb = crate::geometry::cross(pa - pc, x - pc) / det;
            let lc = 1.0 - la - lb;
            let worst = la.min(lb).min(lc);
            if best.map_or(true, |(_, _, w)| worst > w) {
                best = Some((t, [la, lb, lc], worst));
            }
        }
        best.filter(|(_, _, w)| *w >= -1e-9).map(|(t, l, _)| (t, l))
    }
}

#[derive(Debug, Clone)]
pub struct TorsionField {
    mesh: TriMesh,
    u: Vec<f64>,
    tau_energy: f64,
    tau_mass: f64,
    cg_iterations: usize,
    locator: Locator,
}

impl TorsionField {
    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Nodal values.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn tau_energy(&self) -> f64 {
        self.tau_energy
    }

    pub fn tau_mass(&self) -> f64 {
        self.tau_mass
    }

    /// `|tau_energy - tau_mass| / tau_energy`.
    pub fn relative_gap(&self) -> f64 {
        (self.tau_energy - self.tau_mass).abs() / self.tau_energy
    }

    pub fn cg_iterations(&self) -> usize {
        self.cg_iterations
    }

    /// Constant gradient on triangle `t`.
    pub fn triangle_gradient(&self, t: usize) -> Vec2 {
        let (g, _) = shape_gradients(&self.mesh, t);
        let tri = self.mesh.triangles()[t];
        g[0] * self.u[tri[0]] + g[1] * self.u[tri[1]] + g[2] * self.u[tri[2]]
    }

    pub fn max_gradient_norm(&self) -> f64 {
        (0..self.mesh.triangles().len())
            .map(|t| self.triangle_gradient(t).norm())
            .fold(0.0, f64::max)
    }

    /// Piecewise-linear interpolant at `x`.
    pub fn value_at(&self, x: Vec2) -> Result<f64> {
        let (t, l) = self
            .locator
            .find(&self.mesh, x)
            .ok_or(Error::PointOutside(x.x, x.y))?;
        let tri = self.mesh.triangles()[t];
        Ok(l[0] * self.u[tri[0]] + l[1] * self.u[tri[1]] + l[2] * self.u[tri[2]])
    }
}

/// Torsional rigidity `∫|∇u|²` of the discrete solution.
pub fn torsional_rigidity(f: &TorsionField) -> f64 {
    f.tau_energy
}

/// Gradient of the containing triangle.
pub fn gradient_at(f: &TorsionField, x: Vec2) -> Result<Vec2> {
    if f.mesh.polygon().depth(x) <= 0.0 {
        return Err(Error::PointOutside(x.x, x.y));
    }
    let (t, _) = f
        .locator
        .find(&f.mesh, x)
        .ok_or(Error::PointOutside(x.x, x.y))?;
    Ok(f.triangle_gradient(t))
}

pub fn solve_torsion(mesh: TriMesh, opts: &SolverOptions) -> Result<TorsionField> {
    opts.validate()?;
    let n = mesh.nodes().len();
    let mut dof = vec![usize::MAX; n];
    let mut ndof = 0;
    for (i, d) in dof.iter_mut().enumerate() {
        if !mesh.is_boundary_node(i) {
            *d = ndof;
            ndof += 1;
        }
    }
    let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
    let mut load = vec![0.0; ndof];
    for t in 0..mesh.triangles().len() {
        let (g, area) = shape_gradients(&mesh, t);
        let tri = mesh.triangles()[t];
        for i in 0..3 {
            let di = dof[tri[i]];
            if di == usize::MAX {
                continue;
            }
            // one-point rule for the constant source 2
            load[di] += 2.0 * area / 3.0;
            for j in 0..3 {
                let dj = dof[tri[j]];
                if dj != usize::MAX {
                    triplets.push((di, dj, area * g[i].dot(&g[j])));
                }
            }
        }
    }
    let k = CsrMatrix::from_triplets(ndof, triplets);
    let mut x = vec![0.0; ndof];
    let outcome = pcg(&k, &load, &mut x, opts.linear_tol, opts.max_cg_iters)?;
    let mut u = vec![0.0; n];
    for i in 0..n {
        if dof[i] != usize::MAX {
            u[i] = x[dof[i]];
            if u[i] <= 0.0 {
                return Err(Error::MaximumPrincipleViolation { node: i, value: u[i] });
            }
        }
    }
    let mut tau_energy = 0.0;
    let mut tau_mass = 0.0;
    for t in 0..mesh.triangles().len() {
        let (g, area) = shape_gradients(&mesh, t);
        let tri = mesh.triangles()[t];
        let grad = g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]];
        tau_energy += area * grad.norm_squared();
        tau_mass += 2.0 * area * (u[tri[0]] + u[tri[1]] + u[tri[2]]) / 3.0;
    }
    let locator = Locator::new(&mesh);
    Ok(TorsionField {
        mesh,
        u,
        tau_energy,
        tau_mass,
        cg_iterations: outcome.iterations,
        locator,
    })
}

/// Meshes `p` (graded boundary) at `opts.target_h` and solves.
pub fn solve_polygon(p: &Polygon, opts: &SolverOptions) -> Result<TorsionField> {
    opts.validate()?;
    let mesh = triangulate_with(p, &MeshOptions::new(opts.target_h))?;
    solve_torsion(mesh, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub trials: usize,
    pub violations: usize,
    /// Smallest `√u(mid) - (√u(a) + √u(b))/2` seen; negative values are
    /// allowed down to `-epsilon`.
    pub worst_margin: f64,
    pub epsilon: f64,
}

impl ConcavityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Midpoint test of `√u` on random interior segments, with tolerance
/// `0.02 · max √u`.
pub fn check_sqrt_concavity(f: &TorsionField, trials: usize, seed: u64) -> ConcavityReport {
    let p = f.mesh.polygon();
    let (mut lo, mut hi) = (p.vertices()[0], p.vertices()[0]);
    for v in p.vertices() {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let max_sqrt = f.u.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
    let epsilon = 0.02 * max_sqrt;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| loop {
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if p.depth(x) > 1e-9 {
            return x;
        }
    };
    let root = |x: Vec2| f.value_at(x).map(|v| v.max(0.0).sqrt()).unwrap_or(0.0);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let a = sample(&mut rng);
        let b = sample(&mut rng);
        let margin = segment_margin(&root, a, b);
        worst = worst.min(margin);
        if margin < -epsilon {
            violations += 1;
        }
    }
    ConcavityReport {
        trials,
        violations,
        worst_margin: if trials == 0 { 0.0 } else { worst },
        epsilon,
    }
}

fn segment_margin(root: &impl Fn(Vec2) -> f64, a: Vec2, b: Vec2) -> f64 {
    root(0.5 * (a + b)) - 0.5 * (root(a) + root(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disk() -> TorsionField {
        solve_polygon(&Polygon::regular(64, 1.0, 0.0).unwrap(), &SolverOptions::new(0.04)).unwrap()
    }

    #[test]
    fn options_validation() {
        let mut o = SolverOptions::new(0.1);
        o.linear_tol = 1e-3;
        assert!(o.validate().is_err());
        o.linear_tol = 1e-8;
        o.target_h = 0.0;
        assert!(o.validate().is_err());
    }

    #[test]
    fn disk_interior_behaviour() {
        let f = disk();
        assert!((f.tau_energy() - PI / 2.0).abs() / (PI / 2.0) < 0.01);
        assert!(f.relative_gap() < 1e-6);
        for (i, &u) in f.u().iter().enumerate() {
            if f.mesh().is_boundary_node(i) {
                assert_eq!(u, 0.0);
            } else {
                assert!(u > 0.0);
            }
        }
        assert!(gradient_at(&f, Vec2::zeros()).unwrap().norm() < 0.05);
        let g = gradient_at(&f, Vec2::new(0.5, 0.0)).unwrap();
        assert!((g - Vec2::new(-0.5, 0.0)).norm() < 0.025);
        assert!(matches!(
            gradient_at(&f, Vec2::new(1.5, 0.0)),
            Err(Error::PointOutside(..))
        ));
        // analytic u = (1 - |x|²)/2 at the center
        assert!((f.value_at(Vec2::zeros()).unwrap() - 0.5).abs() < 5e-3);
    }

    #[test]
    fn degenerate_segment_has_zero_margin() {
        let f = disk();
        let root = |x: Vec2| f.value_at(x).unwrap().sqrt();
        let a = Vec2::new(0.1, 0.2);
        assert_eq!(segment_margin(&root, a, a), 0.0);
        let r = check_sqrt_concavity(&f, 0, 1);
        assert_eq!(r.worst_margin, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut o = SolverOptions::new(0.05);
        o.max_cg_iters = 2;
        let m = crate::mesh::triangulate(&Polygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap(), 0.05).unwrap();
        assert!(matches!(solve_torsion(m, &o), Err(Error::LinearSolveFailure { .. })));
    }
}
