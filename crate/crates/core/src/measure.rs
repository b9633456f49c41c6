//! Boundary flux of the torsion function and the torsion measure.
//!
//! The normal derivative is recovered variationally: for every boundary hat
//! function `φ_j`, `∫_{∂Ω} g φ_j = (K u)_j - (F)_j` with the full
//! (unconstrained) stiffness `K` and load `F`. This is a tridiagonal cyclic
//! system with the boundary mass matrix on the left. On a flat facet the
//! tangential derivative of `u` vanishes, so `|∇u|² = g²` there, and the
//! measure of facet `i` is the trapezoidal integral of `g²` over it.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{shape_gradients, solve_polygon, SolverOptions, TorsionField};
use crate::geometry::{
    build_polytope, metrics, minkowski_sum, scale, support_function, Direction, Polygon,
    SupportSpec,
};
use crate::sparse::{pcg, CsrMatrix};

/// Mesh resolution, either absolute or as a fraction of the circumradius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshSize {
    Absolute(f64),
    Relative(f64),
}

impl MeshSize {
    pub fn resolve(&self, p: &Polygon) -> f64 {
        match *self {
            MeshSize::Absolute(h) => h,
            MeshSize::Relative(r) => r * metrics(p).circumradius,
        }
    }
}

/// Anything with a support function on the circle.
pub trait SupportEvaluable {
    fn support(&self, d: Direction) -> f64;
}

impl SupportEvaluable for Polygon {
    fn support(&self, d: Direction) -> f64 {
        support_function(self, d)
    }
}

/// Disk of the given radius centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk(pub f64);

impl SupportEvaluable for Disk {
    fn support(&self, _d: Direction) -> f64 {
        self.0
    }
}

/// Atomic measure on the circle: one weight per normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMeasure {
    pub normals: Vec<Direction>,
    pub weights: Vec<f64>,
}

impl SurfaceMeasure {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `|Σ μ_i X_i|`.
    pub fn closure_defect(&self) -> f64 {
        self.normals
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| n.vec() * *w)
            .sum::<crate::geometry::Vec2>()
            .norm()
    }

    pub fn relative_closure_defect(&self) -> f64 {
        self.closure_defect() / self.total()
    }

    pub fn scaled(&self, s: f64) -> SurfaceMeasure {
        SurfaceMeasure {
            normals: self.normals.clone(),
            weights: self.weights.iter().map(|w| w * s).collect(),
        }
    }
}

/// Boundary flux `|∂u/∂ν|`.
///
/// A corner node carries one value per adjacent facet; `values` holds the
/// per-node mean.
#[derive(Debug, Clone)]
pub struct BoundaryFlux {
    /// Boundary node ids in the order used by `values`.
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
    index: HashMap<usize, usize>,
    sides: Vec<f64>,
    side_index: HashMap<(usize, usize), usize>,
}

impl BoundaryFlux {
    pub fn at_node(&self, node: usize) -> Option<f64> {
        self.index.get(&node).map(|&k| self.values[k])
    }

    /// Value at `node` as seen from `facet`.
    pub fn on_facet(&self, node: usize, facet: usize) -> Option<f64> {
        self.side_index.get(&(node, facet)).map(|&k| self.sides[k])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| a.max(b))
    }
}

pub fn boundary_flux(f: &TorsionField) -> Result<BoundaryFlux> {
    let m = f.mesh();
    let u = f.u();
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut side_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut side_node = Vec::new();
    let mut multiplicity: Vec<usize> = Vec::new();
    for e in m.boundary_edges() {
        for v in [e.a, e.b] {
            let k = *index.entry(v).or_insert_with(|| {
                nodes.push(v);
                multiplicity.push(0);
                nodes.len() - 1
            });
            side_index.entry((v, e.facet)).or_insert_with(|| {
                side_node.push(k);
                multiplicity[k] += 1;
                side_node.len() - 1
            });
        }
    }
    let mut residual = vec![0.0; nodes.len()];
    for t in 0..m.triangles().len() {
        let tri = m.triangles()[t];
        if !tri.iter().any(|&v| m.is_boundary_node(v)) {
            continue;
        }
        let (g, area) = shape_gradients(m, t);
        let grad = g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]];
        for i in 0..3 {
            if let Some(&k) = index.get(&tri[i]) {
                residual[k] += area * grad.dot(&g[i]) - 2.0 * area / 3.0;
            }
        }
    }
    let ns = side_node.len();
    let rhs: Vec<f64> = side_node
        .iter()
        .map(|&k| residual[k] / multiplicity[k] as f64)
        .collect();
    let mut triplets = Vec::with_capacity(4 * m.boundary_edges().len());
    for e in m.boundary_edges() {
        let l = m.edge_length(e);
        let (a, b) = (side_index[&(e.a, e.facet)], side_index[&(e.b, e.facet)]);
        triplets.push((a, a, l / 3.0));
        triplets.push((b, b, l / 3.0));
        triplets.push((a, b, l / 6.0));
        triplets.push((b, a, l / 6.0));
    }
    let mass = CsrMatrix::from_triplets(ns, triplets);
    let mut g = vec![0.0; ns];
    match pcg(&mass, &rhs, &mut g, 1e-13, 10 * ns + 100) {
        Ok(_) => {}
        Err(Error::LinearSolveFailure { residual, .. }) => {
            return Err(Error::FluxSolveFailure(residual))
        }
        Err(e) => return Err(e),
    }
    let sides: Vec<f64> = g.into_iter().map(f64::abs).collect();
    let mut values = vec![0.0; nodes.len()];
    for (s, &k) in side_node.iter().enumerate() {
        values[k] += sides[s] / multiplicity[k] as f64;
    }
    Ok(BoundaryFlux {
        nodes,
        values,
        index,
        sides,
        side_index,
    })
}

/// Measure aggregated into `slots` by facet id.
fn aggregate(f: &TorsionField, flux: &BoundaryFlux, slots: usize, slot_of: impl Fn(usize) -> Option<usize>) -> Result<Vec<f64>> {
    let m = f.mesh();
    let mut w = vec![0.0; slots];
    for e in m.boundary_edges() {
        let k = slot_of(e.facet).ok_or(Error::FacetAttributionMissing {
            facet: e.facet,
            available: slots,
        })?;
        let ga = flux.sides[flux.side_index[&(e.a, e.facet)]];
        let gb = flux.sides[flux.side_index[&(e.b, e.facet)]];
        w[k] += 0.5 * m.edge_length(e) * (ga * ga + gb * gb);
    }
    Ok(w)
}

/// Torsion measure index-aligned with `spec` (zero on inactive facets).
pub fn torsion_measure(f: &TorsionField, spec: &SupportSpec) -> Result<SurfaceMeasure> {
    let p = f.mesh().polygon();
    for (id, n) in p.facet_ids().iter().zip(p.normals()) {
        let Some(sn) = spec.normals().get(*id) else {
            return Err(Error::FacetAttributionMissing {
                facet: *id,
                available: spec.len(),
            });
        };
        if (sn.vec() - n.vec()).norm() > 1e-8 {
            return Err(Error::InvariantViolation(format!(
                "mesh facet {id} does not match the support spec normal"
            )));
        }
    }
    let flux = boundary_flux(f)?;
    let n = spec.len();
    let weights = aggregate(f, &flux, n, |id| (id < n).then_some(id))?;
    Ok(SurfaceMeasure {
        normals: spec.normals().to_vec(),
        weights,
    })
}

/// Torsion measure on the edges of the meshed polygon itself.
pub fn polygon_measure(f: &TorsionField) -> Result<SurfaceMeasure> {
    let p = f.mesh().polygon();
    let slot: HashMap<usize, usize> = p.facet_ids().iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let flux = boundary_flux(f)?;
    let weights = aggregate(f, &flux, p.len(), |id| slot.get(&id).copied())?;
    Ok(SurfaceMeasure {
        normals: p.normals().to_vec(),
        weights,
    })
}

/// `τ₁ = Σ h'(X_i) μ_i`.
pub fn mixed_torsion(mu: &SurfaceMeasure, h_prime: &impl SupportEvaluable) -> f64 {
    mu.normals
        .iter()
        .zip(&mu.weights)
        .map(|(n, w)| h_prime.support(*n) * w)
        .sum()
}

/// `|τ - (1/4) Σ h_i μ_i| / τ`.
pub fn representation_residual(f: &TorsionField, spec: &SupportSpec, mu: &SurfaceMeasure) -> f64 {
    let tau = f.tau_energy();
    let pairing: f64 = spec.values().iter().zip(&mu.weights).map(|(h, w)| h * w).sum();
    (tau - 0.25 * pairing).abs() / tau
}

/// Solve on a polygon and measure its own edges.
pub fn analyze_polygon(p: &Polygon, size: MeshSize) -> Result<(TorsionField, SurfaceMeasure)> {
    let f = solve_polygon(p, &SolverOptions::new(size.resolve(p)))?;
    let mu = polygon_measure(&f)?;
    Ok((f, mu))
}

/// Build `B[h]`, solve, and measure index-aligned with `spec`.
pub fn analyze_spec(spec: &SupportSpec, size: MeshSize) -> Result<(TorsionField, SurfaceMeasure)> {
    let p = build_polytope(spec)?;
    let f = solve_polygon(&p, &SolverOptions::new(size.resolve(&p)))?;
    let mu = torsion_measure(&f, spec)?;
    Ok((f, mu))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HadamardRow {
    pub s: f64,
    pub tau: f64,
    pub quotient: f64,
    /// `|quotient - τ₁| / τ₁`.
    pub mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HadamardReport {
    pub tau: f64,
    /// Predicted slope `τ₁(Ω, Ω')`.
    pub predicted: f64,
    pub rows: Vec<HadamardRow>,
    /// Richardson estimate `2 q(s_min) - q(2 s_min)` from the two smallest steps.
    pub extrapolated: f64,
    pub extrapolated_mismatch: f64,
}

impl HadamardReport {
    /// Mismatch shrinks from the second-smallest to the smallest step.
    pub fn converging(&self) -> bool {
        let n = self.rows.len();
        n < 2 || self.rows[n - 1].mismatch < self.rows[n - 2].mismatch
    }
}

/// Compares `(τ(Ω + sΩ') - τ(Ω)) / s` with `τ₁(Ω, Ω')`.
///
/// All bodies are meshed at the absolute size resolved on Ω.
pub fn hadamard_fd_check(
    spec: &SupportSpec,
    spec_prime: &SupportSpec,
    s_values: &[f64],
    size: MeshSize,
) -> Result<HadamardReport> {
    if s_values.is_empty() || s_values.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvariantViolation("s values must be positive".into()));
    }
    if s_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvariantViolation("s values must be decreasing".into()));
    }
    let omega = build_polytope(spec)?;
    let omega_prime = build_polytope(spec_prime)?;
    let opts = SolverOptions::new(size.resolve(&omega));
    let f = solve_polygon(&omega, &opts)?;
    let mu = torsion_measure(&f, spec)?;
    let tau = f.tau_energy();
    let predicted = mixed_torsion(&mu, &omega_prime);
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let body = minkowski_sum(&omega, &scale(&omega_prime, s)?);
        let tau_s = solve_polygon(&body, &opts)?.tau_energy();
        let quotient = (tau_s - tau) / s;
        rows.push(HadamardRow {
            s,
            tau: tau_s,
            quotient,
            mismatch: (quotient - predicted).abs() / predicted.abs(),
        });
    }
    let (extrapolated, extrapolated_mismatch) = match rows.len() {
        0 | 1 => (rows[0].quotient, rows[0].mismatch),
        n => {
            let (a, b) = (&rows[n - 2], &rows[n - 1]);
            // linear remainder in s
            let e = (a.s * b.quotient - b.s * a.quotient) / (a.s - b.s);
            (e, (e - predicted).abs() / predicted.abs())
        }
    };
    Ok(HadamardReport {
        tau,
        predicted,
        rows,
        extrapolated,
        extrapolated_mismatch,
    })
}
