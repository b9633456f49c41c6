//! Batch property checks on random convex polygons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{check_sqrt_concavity, solve_polygon, SolverOptions, TorsionField};
use crate::geometry::{
    build_polytope, hausdorff_distance, metrics, minkowski_combination, scale, Direction, Polygon,
    SupportSpec, Vec2,
};
use crate::measure::{
    mixed_torsion, representation_residual, torsion_measure, MeshSize, SurfaceMeasure,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    /// Nonnegative when the trial passes.
    pub margin: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub details: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            trials: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            details: Vec::new(),
            note: None,
        }
    }

    pub fn push(&mut self, margin: f64, value: f64) {
        let index = self.details.len();
        self.details.push(TrialRecord {
            index,
            margin,
            value,
        });
        self.trials += 1;
        if !(margin >= 0.0) {
            self.failures += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    /// Appends the trials of `other`, renumbering them.
    pub fn merge(&mut self, other: CheckReport) {
        for d in other.details {
            self.push(d.margin, d.value);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Tolerances for the checks; they depend on the mesh size.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub corpus_size: usize,
    pub mesh: MeshSize,
    /// Allowed relative shortfall in the Brunn-Minkowski inequality.
    pub bm_slack: f64,
    /// Allowed relative defect in the equality case.
    pub bm_equality_tol: f64,
    pub bm_pairs: usize,
    pub bm_t: Vec<f64>,
    /// `L = lipschitz_factor · τ₁(p) / inradius(p)`.
    pub lipschitz_factor: f64,
    /// Support perturbation as a fraction of the inradius.
    pub continuity_scale: f64,
    pub continuity_trials: usize,
    pub homogeneity_tol: f64,
    pub homogeneity_scales: Vec<f64>,
    pub representation_tol: f64,
    pub closure_tol: f64,
    pub gradient_factor: f64,
    pub concavity_segments: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            corpus_size: 50,
            mesh: MeshSize::Relative(0.02),
            bm_slack: 0.005,
            bm_equality_tol: 0.01,
            bm_pairs: 100,
            bm_t: vec![0.25, 0.5, 0.75],
            lipschitz_factor: 10.0,
            continuity_scale: 0.02,
            continuity_trials: 2,
            homogeneity_tol: 0.01,
            homogeneity_scales: vec![2.0, 0.5],
            representation_tol: 0.01,
            closure_tol: 0.02,
            gradient_factor: 1.02,
            concavity_segments: 10_000,
        }
    }
}

/// Unit disk stand-in used as the second body of `τ₁`.
pub fn unit_disk_polygon() -> Polygon {
    Polygon::regular(64, 1.0, 0.0).expect("regular 64-gon")
}

/// Random convex polygon with 3 to 10 edges, centroid at the origin and
/// circumradius 1.
///
/// Normals are sorted random angles with gaps at most 135°; edge lengths are
/// random, then corrected by least squares so the edge vectors close up.
pub fn random_polygon(rng: &mut impl Rng) -> Polygon {
    loop {
        if let Some(p) = try_random_polygon(rng) {
            return p;
        }
    }
}

fn try_random_polygon(rng: &mut impl Rng) -> Option<Polygon> {
    let n = rng.gen_range(3..=10);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..360.0)).collect();
    angles.sort_by(f64::total_cmp);
    let gaps = (0..n).map(|i| {
        let j = (i + 1) % n;
        (angles[j] - angles[i]).rem_euclid(360.0)
    });
    let (min_gap, max_gap) = gaps.fold((360.0f64, 0.0f64), |(a, b), g| (a.min(g), b.max(g)));
    if max_gap > 135.0 || min_gap < 5.0 {
        return None;
    }
    let tangents: Vec<Vec2> = angles
        .iter()
        .map(|a| Direction::from_degrees(*a).tangent())
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut gram = nalgebra::Matrix2::zeros();
    let mut r = Vec2::zeros();
    for (t, l) in tangents.iter().zip(&raw) {
        gram += t * t.transpose();
        r += t * *l;
    }
    let lambda = gram.try_inverse()? * r;
    let lengths: Vec<f64> = tangents.iter().zip(&raw).map(|(t, l)| l - t.dot(&lambda)).collect();
    if lengths.iter().any(|&l| l < 0.2) {
        return None;
    }
    let mut vertices = Vec::with_capacity(n);
    let mut x = Vec2::zeros();
    for (t, l) in tangents.iter().zip(&lengths) {
        vertices.push(x);
        x += t * *l;
    }
    let p = Polygon::from_vertices(vertices).ok()?;
    let m = metrics(&p);
    if m.circumradius > 4.0 * m.inradius {
        return None;
    }
    let centred = p.translate(-m.centroid);
    scale(&centred, 1.0 / m.circumradius).ok()
}

/// The seeded corpus of `size` random polygons.
pub fn corpus(seed: u64, size: usize) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|_| random_polygon(&mut rng)).collect()
}

fn tau(p: &Polygon, mesh: MeshSize) -> Result<f64> {
    Ok(solve_polygon(p, &SolverOptions::new(mesh.resolve(p)))?.tau_energy())
}

/// Field and measure of `p` against its own support spec.
pub fn field_and_measure(p: &Polygon, h: f64) -> Result<(SupportSpec, TorsionField, SurfaceMeasure)> {
    let spec = SupportSpec::of_polygon(p);
    let body = build_polytope(&spec)?;
    let f = solve_polygon(&body, &SolverOptions::new(h))?;
    let mu = torsion_measure(&f, &spec)?;
    Ok((spec, f, mu))
}

/// `τ^{1/4}` of `(1-t)p0 + t p1` against the linear interpolation.
///
/// Margin per `t` is `lhs/rhs - 1 + slack`; with `equality` set, the margin
/// is also bounded by `equality_tol - |lhs/rhs - 1|`.
pub fn brunn_minkowski_check(
    p0: &Polygon,
    p1: &Polygon,
    t_grid: &[f64],
    mesh: MeshSize,
    slack: f64,
    equality: Option<f64>,
) -> Result<CheckReport> {
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::InvariantViolation(format!("t = {t} outside (0, 1)")));
    }
    let r0 = tau(p0, mesh)?.powf(0.25);
    let r1 = tau(p1, mesh)?.powf(0.25);
    let mut report = CheckReport::new("brunn_minkowski");
    for &t in t_grid {
        let body = minkowski_combination(p0, p1, t)?;
        let lhs = tau(&body, mesh)?.powf(0.25);
        let rhs = (1.0 - t) * r0 + t * r1;
        let rel = lhs / rhs - 1.0;
        let mut margin = rel + slack;
        if let Some(tol) = equality {
            margin = margin.min(tol - rel.abs());
        }
        report.push(margin, rel);
    }
    Ok(report)
}

/// `|Δτ₁| ≤ L d_H` under random support perturbations, with `τ₁` taken
/// against [`unit_disk_polygon`].
///
/// The margin is `1 - |Δτ₁| / (L d_H)` and the recorded value is `|Δτ₁|`.
/// The constant `L` is an empirical budget, not a proven modulus.
pub fn continuity_check(
    p: &Polygon,
    perturbation: f64,
    trials: usize,
    mesh: MeshSize,
    seed: u64,
    lipschitz_factor: f64,
) -> Result<CheckReport> {
    let m = metrics(p);
    if !(perturbation >= 0.0 && perturbation < 0.1 * m.inradius) {
        return Err(Error::InvariantViolation(format!(
            "perturbation {perturbation} must lie in [0, 0.1 · inradius = {})",
            0.1 * m.inradius
        )));
    }
    let h = mesh.resolve(p);
    let disk = unit_disk_polygon();
    let (spec, _, mu) = field_and_measure(p, h)?;
    let t1 = mixed_torsion(&mu, &disk);
    let lipschitz = lipschitz_factor * t1 / m.inradius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("continuity")
        .with_note("Lipschitz budget is an empirical surrogate for continuity");
    for _ in 0..trials {
        let values = spec
            .values()
            .iter()
            .map(|v| {
                if perturbation > 0.0 {
                    v + rng.gen_range(-perturbation..perturbation)
                } else {
                    *v
                }
            })
            .collect();
        let q_spec = spec.with_values(values)?;
        let q = build_polytope(&q_spec)?;
        let f = solve_polygon(&q, &SolverOptions::new(h))?;
        let tq = mixed_torsion(&torsion_measure(&f, &q_spec)?, &disk);
        let delta = (tq - t1).abs();
        let d = hausdorff_distance(p, &q);
        let ratio = if d > 0.0 {
            delta / (lipschitz * d)
        } else if delta == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        report.push(1.0 - ratio, delta);
    }
    Ok(report)
}

/// `τ(sp) = s⁴ τ(p)` and `τ₁(sp, D) = s³ τ₁(p, D)`; every body is meshed at
/// the absolute size resolved on `p`.
pub fn homogeneity_check(p: &Polygon, scales: &[f64], mesh: MeshSize, tol: f64) -> Result<CheckReport> {
    let h = mesh.resolve(p);
    let disk = unit_disk_polygon();
    let (_, f, mu) = field_and_measure(p, h)?;
    let (tau0, t10) = (f.tau_energy(), mixed_torsion(&mu, &disk));
    let mut report = CheckReport::new("homogeneity");
    for &s in scales {
        let sp = scale(p, s)?;
        let (_, fs, mus) = field_and_measure(&sp, h)?;
        let e_tau = (fs.tau_energy() / (s.powi(4) * tau0) - 1.0).abs();
        let e_t1 = (mixed_torsion(&mus, &disk) / (s.powi(3) * t10) - 1.0).abs();
        let worst = e_tau.max(e_t1);
        report.push(tol - worst, worst);
    }
    Ok(report)
}

/// All corpus checks, one report per property.
pub fn run_corpus(cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let bodies = corpus(cfg.seed, cfg.corpus_size);
    let mut representation = CheckReport::new("representation");
    let mut closure = CheckReport::new("closure");
    let mut gradient = CheckReport::new("gradient_bound");
    let mut concavity = CheckReport::new("sqrt_concavity");
    let mut continuity = CheckReport::new("continuity")
        .with_note("Lipschitz budget is an empirical surrogate for continuity");
    let mut homogeneity = CheckReport::new("homogeneity");
    let mut taus = Vec::with_capacity(bodies.len());
    for (k, p) in bodies.iter().enumerate() {
        let h = cfg.mesh.resolve(p);
        let (spec, f, mu) = field_and_measure(p, h)?;
        taus.push(f.tau_energy());
        let res = representation_residual(&f, &spec, &mu);
        representation.push(cfg.representation_tol - res, res);
        let cd = mu.relative_closure_defect();
        closure.push(cfg.closure_tol - cd, cd);
        let ratio = f.max_gradient_norm() / metrics(p).diameter;
        gradient.push(cfg.gradient_factor - ratio, ratio);
        let c = check_sqrt_concavity(&f, cfg.concavity_segments, cfg.seed.wrapping_add(k as u64));
        concavity.push(c.worst_margin + c.epsilon, c.violations as f64);
        let inr = metrics(p).inradius;
        continuity.merge(continuity_check(
            p,
            cfg.continuity_scale * inr,
            cfg.continuity_trials,
            cfg.mesh,
            cfg.seed.wrapping_add(1000 + k as u64),
            cfg.lipschitz_factor,
        )?);
        homogeneity.merge(homogeneity_check(p, &cfg.homogeneity_scales, cfg.mesh, cfg.homogeneity_tol)?);
    }
    let mut bm = CheckReport::new("brunn_minkowski");
    let n = bodies.len();
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(7));
        for _ in 0..cfg.bm_pairs {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let (r0, r1) = (taus[i].powf(0.25), taus[j].powf(0.25));
            for &t in &cfg.bm_t {
                let body = minkowski_combination(&bodies[i], &bodies[j], t)?;
                let lhs = tau(&body, cfg.mesh)?.powf(0.25);
                let rel = lhs / ((1.0 - t) * r0 + t * r1) - 1.0;
                bm.push(rel + cfg.bm_slack, rel);
            }
        }
    }
    Ok(vec![
        representation,
        closure,
        gradient,
        concavity,
        continuity,
        homogeneity,
        bm,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_reproducible_and_in_envelope() {
        let a = corpus(42, 20);
        let b = corpus(42, 20);
        assert_eq!(a, b);
        for p in &a {
            let m = metrics(p);
            assert!((3..=10).contains(&p.len()));
            assert!((m.circumradius - 1.0).abs() < 1e-12);
            assert!(m.circumradius <= 4.0 * m.inradius);
            assert!(m.centroid.norm() < 1e-12);
        }
        assert_ne!(corpus(43, 20), a);
    }

    #[test]
    fn report_bookkeeping() {
        let mut r = CheckReport::new("x");
        r.push(0.5, 1.0);
        r.push(-0.1, 2.0);
        assert_eq!((r.trials, r.failures), (2, 1));
        assert_eq!(r.worst_margin, -0.1);
        assert!(!r.passed());
        let mut s = CheckReport::new("y");
        s.merge(r);
        assert_eq!(s.details[1].index, 1);
        assert_eq!(s.failures, 1);
    }

    #[test]
    fn argument_checks() {
        let sq = Polygon::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap();
        let m = MeshSize::Relative(0.1);
        assert!(brunn_minkowski_check(&sq, &sq, &[1.0], m, 0.005, None).is_err());
        assert!(continuity_check(&sq, 0.5, 1, m, 0, 10.0).is_err());
    }

    #[test]
    fn zero_perturbation_is_exact() {
        let sq = Polygon::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap();
        let r = continuity_check(&sq, 0.0, 2, MeshSize::Relative(0.05), 1, 10.0).unwrap();
        assert!(r.details.iter().all(|d| d.value == 0.0));
        assert!(r.passed());
    }
}
