use torsion_minkowski::fem::{solve_polygon, SolverOptions};
use torsion_minkowski::geometry::{build_polytope, scale, Polygon, SupportSpec, Vec2};
use torsion_minkowski::measure::MeshSize;
use torsion_minkowski::verify::*;

const MESH: MeshSize = MeshSize::Relative(0.02);

fn square() -> Polygon {
    Polygon::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap()
}

#[test]
fn bm_equality_for_translates_and_dilates() {
    let sq = square();
    let moved = sq.translate(Vec2::new(3.0, 0.0));
    let r = brunn_minkowski_check(&sq, &moved, &[0.5], MESH, 0.005, Some(0.01)).unwrap();
    assert!(r.passed(), "{r:?}");
    let big = scale(&sq, 2.0).unwrap();
    let r = brunn_minkowski_check(&sq, &big, &[0.25, 0.5, 0.75], MESH, 0.005, Some(0.01)).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.details.iter().all(|d| d.value.abs() < 0.01));
}

#[test]
fn bm_strict_for_square_and_hexagon() {
    let hex = Polygon::regular(6, 1.2, 0.3).unwrap();
    let r = brunn_minkowski_check(&square(), &hex, &[0.25, 0.5, 0.75], MESH, 0.0, None).unwrap();
    assert!(r.passed() && r.worst_margin > 0.0, "{r:?}");
}

#[test]
fn continuity_examples() {
    let sq = square();
    let r = continuity_check(&sq, 0.01, 4, MESH, 5, 10.0).unwrap();
    assert!(r.passed(), "{r:?}");
    let half = continuity_check(&sq, 0.005, 4, MESH, 5, 10.0).unwrap();
    let worst = |r: &CheckReport| r.details.iter().fold(0.0f64, |a, d| a.max(d.value));
    assert!(worst(&half) <= 0.6 * worst(&r), "{} vs {}", worst(&half), worst(&r));

    // τ moves by well under 5% at this perturbation size
    let tau = solve_polygon(&sq, &SolverOptions::new(0.04)).unwrap().tau_energy();
    let spec = SupportSpec::of_polygon(&sq);
    let moved = spec.with_values(spec.values().iter().zip([1.0, -1.0, 0.5, -0.5]).map(|(v, s)| v + 0.01 * s).collect()).unwrap();
    let q = build_polytope(&moved).unwrap();
    let tq = solve_polygon(&q, &SolverOptions::new(0.04)).unwrap().tau_energy();
    assert!((tq - tau).abs() / tau < 0.05);
}

#[test]
fn homogeneity_examples() {
    let r = homogeneity_check(&square(), &[1.0, 2.0], MESH, 0.01).unwrap();
    assert!(r.details[0].value < 1e-12, "{r:?}");
    assert!(r.passed(), "{r:?}");
    let hex = Polygon::regular(6, 1.0, 0.0).unwrap();
    let r = homogeneity_check(&hex, &[0.5], MESH, 0.01).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn small_corpus_passes() {
    let cfg = VerifyConfig {
        corpus_size: 4,
        bm_pairs: 4,
        concavity_segments: 500,
        ..VerifyConfig::default()
    };
    let reports = run_corpus(&cfg).unwrap();
    assert_eq!(reports.len(), 7);
    for r in &reports {
        assert!(r.passed(), "{r:?}");
        assert!(r.failures <= r.trials);
    }
}
