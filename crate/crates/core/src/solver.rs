//! Inverse problem: support numbers whose torsion measure matches a target.
//!
//! Minimizes the scale-invariant `J(h) = Φ(h) τ(B[h])^{-1/4}` with
//! `Φ = Σ c_i h_i`, whose gradient is `c τ^{-1/4} - (Φ/4) τ^{-5/4} μ`.
//! A stationary point has `μ = (4τ/Φ) c`, so a final dilation by
//! `(Φ/(4τ))^{1/3}` makes the measure equal to `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{solve_polygon, SolverOptions};
use crate::geometry::{
    build_polytope, hausdorff_distance, metrics, validate_fan, Direction, Polygon, SupportSpec,
    Vec2,
};
use crate::measure::{torsion_measure, MeshSize, SurfaceMeasure};

/// Largest relative weight change `project_balance` may apply.
pub const BALANCE_BUDGET: f64 = 0.05;
/// Relative imbalance accepted without projection.
pub const BALANCE_TOL: f64 = 1e-9;
/// A-priori bounds are this factor around the first iterate.
pub const APRIORI_FACTOR: f64 = 10.0;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

/// Balanced positive weights on a positively spanning set of normals.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMeasure {
    normals: Vec<Direction>,
    weights: Vec<f64>,
}

impl TargetMeasure {
    pub fn new(normals: Vec<Direction>, weights: Vec<f64>) -> Result<Self> {
        check_shape(&normals, &weights)?;
        let t = TargetMeasure { normals, weights };
        let defect = t.imbalance();
        if defect > BALANCE_TOL {
            return Err(Error::UnbalanceableMeasure(format!(
                "relative imbalance {defect:.3e} exceeds {BALANCE_TOL:e}"
            )));
        }
        Ok(t)
    }

    /// Equal weights on `n` equally spaced normals starting at angle 0.
    pub fn regular(n: usize, weight: f64) -> Result<Self> {
        let spec = SupportSpec::regular(n, 1.0)?;
        project_balance(&vec![weight; n], spec.normals())
    }

    pub fn normals(&self) -> &[Direction] {
        &self.normals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `|Σ c_i X_i| / Σ c_i`.
    pub fn imbalance(&self) -> f64 {
        let s: Vec2 = self
            .normals
            .iter()
            .zip(&self.weights)
            .map(|(n, c)| n.vec() * *c)
            .sum();
        s.norm() / self.total()
    }

    /// Target scaled by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        TargetMeasure::new(self.normals.clone(), self.weights.iter().map(|c| c * s).collect())
    }

    pub fn as_measure(&self) -> SurfaceMeasure {
        SurfaceMeasure {
            normals: self.normals.clone(),
            weights: self.weights.clone(),
        }
    }
}

fn check_shape(normals: &[Direction], weights: &[f64]) -> Result<()> {
    if normals.len() != weights.len() {
        return Err(Error::InvariantViolation(format!(
            "{} normals but {} weights",
            normals.len(),
            weights.len()
        )));
    }
    if normals.len() < 3 {
        return Err(Error::UnbalanceableMeasure(
            "fewer than three normals cannot positively span the plane".into(),
        ));
    }
    if let Some(c) = weights.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::InvariantViolation(format!(
            "weights must be positive, got {c}"
        )));
    }
    validate_fan(normals).map_err(|e| match e {
        Error::UnboundedBody => Error::UnbalanceableMeasure(
            "normals do not positively span the plane".into(),
        ),
        other => other,
    })
}

/// Least-squares correction of `c_raw` so that `Σ c_i X_i = 0`.
pub fn project_balance(c_raw: &[f64], normals: &[Direction]) -> Result<TargetMeasure> {
    check_shape(normals, c_raw)?;
    let total: f64 = c_raw.iter().sum();
    let mut r = Vec2::zeros();
    let mut gram = nalgebra::Matrix2::zeros();
    for (n, c) in normals.iter().zip(c_raw) {
        r += n.vec() * *c;
        gram += n.vec() * n.vec().transpose();
    }
    if r.norm() <= BALANCE_TOL * total {
        return TargetMeasure::new(normals.to_vec(), c_raw.to_vec());
    }
    let Some(inv) = gram.try_inverse() else {
        return Err(Error::UnbalanceableMeasure("normals do not span the plane".into()));
    };
    let lambda = inv * r;
    let mut weights = Vec::with_capacity(c_raw.len());
    for (n, c) in normals.iter().zip(c_raw) {
        let delta = -n.vec().dot(&lambda);
        if delta.abs() > BALANCE_BUDGET * c {
            return Err(Error::UnbalanceableMeasure(format!(
                "balancing needs a change of {:.1}% on a weight of {c}",
                100.0 * delta.abs() / c
            )));
        }
        weights.push(c + delta);
    }
    TargetMeasure::new(normals.to_vec(), weights)
}

/// Value and gradient of `J` at one support vector.
#[derive(Debug, Clone)]
pub struct Objective {
    pub j: f64,
    pub grad: Vec<f64>,
    pub tau: f64,
    pub phi: f64,
    pub mu: SurfaceMeasure,
    pub polygon: Polygon,
}

impl Objective {
    /// `λ = Φ / (4τ)`, the dilation factor cubed that matches `μ` to `c`.
    pub fn lambda(&self) -> f64 {
        self.phi / (4.0 * self.tau)
    }

    /// `‖λμ - c‖₁ / ‖c‖₁`.
    pub fn residual(&self, target: &TargetMeasure) -> f64 {
        let l = self.lambda();
        let num: f64 = self
            .mu
            .weights
            .iter()
            .zip(target.weights())
            .map(|(m, c)| (l * m - c).abs())
            .sum();
        num / target.total()
    }
}

fn check_aligned(h: &SupportSpec, target: &TargetMeasure) -> Result<()> {
    let same = h.len() == target.len()
        && h
            .normals()
            .iter()
            .zip(target.normals())
            .all(|(a, b)| (a.vec() - b.vec()).norm() < 1e-12);
    if same {
        Ok(())
    } else {
        Err(Error::InvariantViolation(
            "support vector and target use different normals".into(),
        ))
    }
}

pub fn objective(h: &SupportSpec, target: &TargetMeasure, mesh: MeshSize) -> Result<Objective> {
    check_aligned(h, target)?;
    let polygon = build_polytope(h)?;
    let f = solve_polygon(&polygon, &SolverOptions::new(mesh.resolve(&polygon)))?;
    let mu = torsion_measure(&f, h)?;
    let tau = f.tau_energy();
    let phi: f64 = target.weights().iter().zip(h.values()).map(|(c, v)| c * v).sum();
    let t4 = tau.powf(-0.25);
    let grad = target
        .weights()
        .iter()
        .zip(&mu.weights)
        .map(|(c, m)| c * t4 - 0.25 * phi * t4 / tau * m)
        .collect();
    Ok(Objective {
        j: phi * t4,
        grad,
        tau,
        phi,
        mu,
        polygon,
    })
}

/// Analytic against central-difference gradient in one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSample {
    pub index: usize,
    pub analytic: f64,
    pub finite_difference: f64,
}

impl GradientSample {
    /// `|fd - an| / max(|an|, floor)`.
    pub fn relative_error(&self, floor: f64) -> f64 {
        (self.finite_difference - self.analytic).abs() / self.analytic.abs().max(floor)
    }
}

/// Central differences of `J` with step `eps` in the given coordinates.
///
/// A relative mesh size is resolved once on `B[h]` so every evaluation uses
/// the same absolute resolution.
pub fn gradient_check(
    h: &SupportSpec,
    target: &TargetMeasure,
    coords: &[usize],
    eps: f64,
    mesh: MeshSize,
) -> Result<(Objective, Vec<GradientSample>)> {
    if let Some(i) = coords.iter().find(|&&i| i >= h.len()) {
        return Err(Error::InvariantViolation(format!("coordinate {i} out of range")));
    }
    let mesh = MeshSize::Absolute(mesh.resolve(&build_polytope(h)?));
    let base = objective(h, target, mesh)?;
    let mut out = Vec::with_capacity(coords.len());
    for &i in coords {
        let shifted = |d: f64| -> Result<f64> {
            let mut v = h.values().to_vec();
            v[i] += d;
            Ok(objective(&h.with_values(v)?, target, mesh)?.j)
        };
        let fd = (shifted(eps)? - shifted(-eps)?) / (2.0 * eps);
        out.push(GradientSample {
            index: i,
            analytic: base.grad[i],
            finite_difference: fd,
        });
    }
    Ok((base, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiOptions {
    pub mesh_h: MeshSize,
    /// Relative measure residual at which the solve stops.
    pub tol: f64,
    pub max_iters: usize,
    /// `None` starts from `h = 1`; otherwise support numbers in `[0.5, 1.5]`.
    pub seed: Option<u64>,
    /// Iterate at twice the mesh size until the residual is below `2 tol`.
    pub continuation: bool,
}

impl Default for MinkowskiOptions {
    fn default() -> Self {
        MinkowskiOptions {
            mesh_h: MeshSize::Relative(0.02),
            tol: 1e-2,
            max_iters: 500,
            seed: None,
            continuation: false,
        }
    }
}

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub j: f64,
    pub residual: f64,
    pub tau: f64,
    pub inradius: f64,
    pub circumradius: f64,
    pub diameter: f64,
    /// Step length that produced this iterate (0 for the first).
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub h_final: SupportSpec,
    pub polygon: Polygon,
    pub mu_final: SurfaceMeasure,
    pub objective_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    /// `J` at the optimum.
    pub multiplier_m: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖μ_final - c‖₁ / ‖c‖₁` on the rescaled body.
    pub residual: f64,
    pub diagnostics: Vec<IterateRecord>,
}

pub fn initial_support(target: &TargetMeasure, seed: Option<u64>) -> Result<SupportSpec> {
    let values = match seed {
        None => vec![1.0; target.len()],
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..target.len()).map(|_| rng.gen_range(0.5..1.5)).collect()
        }
    };
    SupportSpec::new(target.normals().to_vec(), values)
}

/// Translate so the Steiner point sits at the origin and rescale to `Φ = phi`.
fn normalize(h: &SupportSpec, target: &TargetMeasure, phi: f64) -> Result<SupportSpec> {
    let s = build_polytope(h)?.steiner_point();
    let centred = h.translated(-s);
    let cur: f64 = target.weights().iter().zip(centred.values()).map(|(c, v)| c * v).sum();
    if !(cur > 0.0) {
        return Err(Error::EmptyInterior);
    }
    Ok(centred.scaled(phi / cur))
}

fn axpy(h: &SupportSpec, t: f64, d: &[f64]) -> Result<SupportSpec> {
    h.with_values(h.values().iter().zip(d).map(|(v, di)| v + t * di).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn record(iter: usize, obj: &Objective, target: &TargetMeasure, step: f64) -> IterateRecord {
    let m = metrics(&obj.polygon);
    IterateRecord {
        iter,
        j: obj.j,
        residual: obj.residual(target),
        tau: obj.tau,
        inradius: m.inradius,
        circumradius: m.circumradius,
        diameter: m.diameter,
        step,
    }
}

/// Runs the descent and returns the report whether or not it converged.
pub fn run_minkowski(target: &TargetMeasure, opts: &MinkowskiOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvariantViolation("tol must be positive".into()));
    }
    let start = initial_support(target, opts.seed)?;
    let phi0: f64 = dot(target.weights(), start.values());
    let mut h = normalize(&start, target, phi0)?;

    let coarse = match opts.mesh_h {
        MeshSize::Absolute(x) => MeshSize::Absolute(2.0 * x),
        MeshSize::Relative(x) => MeshSize::Relative(2.0 * x),
    };
    let mut mesh = if opts.continuation { coarse } else { opts.mesh_h };
    let mut fine = !opts.continuation;

    let mut obj = objective(&h, target, mesh)?;
    let mut diagnostics = vec![record(0, &obj, target, 0.0)];
    let first = &diagnostics[0];
    let (r_lo, r_hi) = (first.inradius / APRIORI_FACTOR, first.circumradius * APRIORI_FACTOR);

    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let residual = diagnostics.last().unwrap().residual;
        if !fine && residual <= 2.0 * opts.tol {
            mesh = opts.mesh_h;
            fine = true;
            prev = None;
            obj = objective(&h, target, mesh)?;
            diagnostics.push(record(iterations, &obj, target, 0.0));
            continue;
        }
        if fine && residual <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }
        iterations += 1;

        let g = obj.grad.clone();
        let gg = dot(&g, &g);
        let d: Vec<f64> = g.iter().map(|x| -x).collect();
        let big = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if big == 0.0 {
            break;
        }
        let inradius = diagnostics.last().unwrap().inradius;
        let cap = inradius / (2.0 * big);
        let mut t = match &prev {
            Some((hp, gp)) => {
                let s: Vec<f64> = h.values().iter().zip(hp).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 0.0 {
                    dot(&s, &s) / sy
                } else {
                    cap
                }
            }
            None => cap,
        }
        .min(cap);

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = axpy(&h, t, &d).and_then(|x| normalize(&x, target, phi0));
            if let Ok(cand) = trial {
                if let Ok(o) = objective(&cand, target, mesh) {
                    if o.j <= obj.j - ARMIJO * t * gg {
                        accepted = Some((cand, o));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((cand, o)) = accepted else {
            break;
        };
        prev = Some((h.values().to_vec(), g));
        h = cand;
        obj = o;
        let rec = record(iterations, &obj, target, t);
        if rec.inradius < r_lo || rec.circumradius > r_hi {
            return Err(Error::AprioriBoundViolation(format!(
                "iterate {iterations}: inradius {:.4e}, circumradius {:.4e} outside [{r_lo:.4e}, {r_hi:.4e}]",
                rec.inradius, rec.circumradius
            )));
        }
        diagnostics.push(rec);
    }

    let s = obj.lambda().cbrt();
    let h_final = h.scaled(s);
    let polygon = build_polytope(&h_final)?;
    let f = solve_polygon(&polygon, &SolverOptions::new(opts.mesh_h.resolve(&polygon)))?;
    let mu_final = torsion_measure(&f, &h_final)?;
    let residual = mu_final
        .weights
        .iter()
        .zip(target.weights())
        .map(|(m, c)| (m - c).abs())
        .sum::<f64>()
        / target.total();
    Ok(SolveReport {
        h_final,
        polygon,
        mu_final,
        objective_history: diagnostics.iter().map(|r| r.j).collect(),
        residual_history: diagnostics.iter().map(|r| r.residual).collect(),
        multiplier_m: obj.j,
        iterations,
        converged,
        residual,
        diagnostics,
    })
}

/// Like [`run_minkowski`], but an unconverged run is an error.
pub fn solve_minkowski(target: &TargetMeasure, opts: &MinkowskiOptions) -> Result<SolveReport> {
    let report = run_minkowski(target, opts)?;
    if report.converged {
        Ok(report)
    } else {
        Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: report.residual_history.last().copied().unwrap_or(f64::NAN),
        })
    }
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// Solutions with their Steiner point moved to the origin.
    pub solutions: Vec<Polygon>,
    /// `(i, j, d_H / mean circumradius)`.
    pub pairwise: Vec<(usize, usize, f64)>,
    pub mean_circumradius: f64,
    pub tolerance: f64,
}

impl UniquenessReport {
    pub fn max_distance(&self) -> f64 {
        self.pairwise.iter().fold(0.0, |a, p| a.max(p.2))
    }

    pub fn passed(&self) -> bool {
        self.max_distance() <= self.tolerance
    }
}

/// Solves from one random start per seed and compares the recentred solutions.
pub fn uniqueness_probe(
    target: &TargetMeasure,
    seeds: &[u64],
    opts: &MinkowskiOptions,
) -> Result<UniquenessReport> {
    let mut solutions = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let o = MinkowskiOptions {
            seed: Some(seed),
            ..opts.clone()
        };
        let p = solve_minkowski(target, &o)?.polygon;
        let s = p.steiner_point();
        solutions.push(p.translate(-s));
    }
    let mean_circumradius = if solutions.is_empty() {
        0.0
    } else {
        solutions.iter().map(|p| metrics(p).circumradius).sum::<f64>() / solutions.len() as f64
    };
    let mut pairwise = Vec::new();
    for i in 0..solutions.len() {
        for j in i + 1..solutions.len() {
            let d = hausdorff_distance(&solutions[i], &solutions[j]);
            pairwise.push((i, j, d / mean_circumradius));
        }
    }
    Ok(UniquenessReport {
        solutions,
        pairwise,
        mean_circumradius,
        tolerance: 0.03,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirs(deg: &[f64]) -> Vec<Direction> {
        deg.iter().map(|d| Direction::from_degrees(*d)).collect()
    }

    #[test]
    fn balance_examples() {
        let t = project_balance(&[1.0; 4], &dirs(&[0.0, 90.0, 180.0, 270.0])).unwrap();
        assert_eq!(t.weights(), &[1.0; 4]);
        let t = project_balance(&[2.0; 3], &dirs(&[0.0, 120.0, 240.0])).unwrap();
        for w in t.weights() {
            assert!((w - 2.0).abs() < 1e-12);
        }
        assert!(matches!(
            project_balance(&[1.0; 2], &dirs(&[0.0, 180.0])),
            Err(Error::UnbalanceableMeasure(_))
        ));
        assert!(matches!(
            project_balance(&[1.0, 1.0, 1.0], &dirs(&[0.0, 90.0, 180.0])),
            Err(Error::UnbalanceableMeasure(_))
        ));
    }

    #[test]
    fn small_imbalance_is_projected() {
        let raw = [1.0, 1.02, 0.99, 1.0];
        let t = project_balance(&raw, &dirs(&[0.0, 90.0, 180.0, 270.0])).unwrap();
        assert!(t.imbalance() < 1e-12);
        for (a, b) in raw.iter().zip(t.weights()) {
            assert!((a - b).abs() <= 0.05 * a);
        }
        let far = [1.0, 1.5, 1.0, 1.0];
        assert!(project_balance(&far, &dirs(&[0.0, 90.0, 180.0, 270.0])).is_err());
    }

    #[test]
    fn unbalanced_target_rejected() {
        assert!(TargetMeasure::new(dirs(&[0.0, 90.0, 180.0, 270.0]), vec![1.0, 2.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn seeded_start_is_reproducible() {
        let t = TargetMeasure::regular(5, 1.0).unwrap();
        let a = initial_support(&t, Some(3)).unwrap();
        let b = initial_support(&t, Some(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| (0.5..1.5).contains(v)));
        assert_eq!(initial_support(&t, None).unwrap().values(), &[1.0; 5]);
    }
}
