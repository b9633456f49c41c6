use torsion_minkowski::geometry::{hausdorff_distance, metrics, SupportSpec, Vec2};
use torsion_minkowski::measure::{analyze_spec, MeshSize};
use torsion_minkowski::solver::*;
use torsion_minkowski::Error;

fn square_target() -> TargetMeasure {
    TargetMeasure::regular(4, 0.28113).unwrap()
}

fn irregular_target() -> (SupportSpec, TargetMeasure) {
    let spec = SupportSpec::from_degrees(&[0.0, 50.0, 130.0, 180.0, 230.0, 310.0], 1.0)
        .unwrap()
        .with_values(vec![1.0, 0.6, 1.4, 0.8, 1.1, 0.9])
        .unwrap();
    let (_, mu) = analyze_spec(&spec, MeshSize::Relative(0.02)).unwrap();
    let t = project_balance(&mu.weights, spec.normals()).unwrap();
    (spec, t)
}

#[test]
fn square_solution_is_stationary() {
    let t = square_target();
    let h = SupportSpec::regular(4, 0.5).unwrap();
    let o = objective(&h, &t, MeshSize::Absolute(0.02)).unwrap();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    // the gradient carries a τ^{-1/4} factor relative to c
    let scaled = norm(&o.grad) / o.tau.powf(-0.25);
    assert!(scaled < 0.03 * norm(t.weights()), "{scaled}");
}

#[test]
fn objective_is_scale_and_translation_invariant() {
    let (spec, t) = irregular_target();
    let size = MeshSize::Relative(0.02);
    let j = objective(&spec, &t, size).unwrap().j;
    for s in [0.5, 2.0] {
        let js = objective(&spec.scaled(s), &t, size).unwrap().j;
        assert!((js - j).abs() / j < 0.005, "{s}: {js} vs {j}");
    }
    let moved = spec.translated(Vec2::new(0.3, -0.2));
    let jt = objective(&moved, &t, size).unwrap();
    // Φ is exactly invariant; τ only up to the mesh
    let phi0: f64 = t.weights().iter().zip(spec.values()).map(|(c, h)| c * h).sum();
    assert!((jt.phi - phi0).abs() / phi0 < 1e-9);
    assert!((jt.j - j).abs() / j < 1e-3);
}

#[test]
fn recovers_generating_polygon() {
    let (spec, t) = irregular_target();
    let report = solve_minkowski(&t, &MinkowskiOptions::default()).unwrap();
    assert!(report.converged && report.residual < 0.02);
    assert!(report.objective_history.windows(2).all(|w| w[1] < w[0]));
    let truth = torsion_minkowski::geometry::build_polytope(&spec).unwrap();
    let truth = truth.translate(-truth.steiner_point());
    let got = report.polygon.translate(-report.polygon.steiner_point());
    let d = hausdorff_distance(&truth, &got) / metrics(&truth).circumradius;
    assert!(d < 0.03, "{d}");
}

#[test]
fn scale_equivariance() {
    let (_, t) = irregular_target();
    let opts = MinkowskiOptions::default();
    let a = solve_minkowski(&t, &opts).unwrap();
    let b = solve_minkowski(&t.scaled(8.0).unwrap(), &opts).unwrap();
    for (x, y) in a.h_final.values().iter().zip(b.h_final.values()) {
        assert!((y - 2.0 * x).abs() <= 0.02 * 2.0 * metrics(&a.polygon).circumradius);
    }
}

#[test]
fn gradient_matches_differences() {
    let (_, t) = irregular_target();
    let h = initial_support(&t, None).unwrap();
    let (base, samples) = gradient_check(&h, &t, &[0, 1, 2, 3, 4, 5], 1e-2, MeshSize::Relative(0.02)).unwrap();
    let gmax = base.grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    for s in samples {
        assert!(s.relative_error(0.05 * gmax) < 0.02, "{s:?}");
    }
}

#[test]
fn unconverged_run_reports_partial_state() {
    let (_, t) = irregular_target();
    let opts = MinkowskiOptions {
        max_iters: 1,
        tol: 1e-6,
        ..Default::default()
    };
    let report = run_minkowski(&t, &opts).unwrap();
    assert!(!report.converged);
    assert_eq!(report.iterations, 1);
    assert!(matches!(
        solve_minkowski(&t, &opts),
        Err(Error::NoConvergence { iterations: 1, .. })
    ));
}

#[test]
fn continuation_reaches_the_same_body() {
    let (_, t) = irregular_target();
    let plain = solve_minkowski(&t, &MinkowskiOptions::default()).unwrap();
    let cont = solve_minkowski(
        &t,
        &MinkowskiOptions {
            continuation: true,
            ..Default::default()
        },
    )
    .unwrap();
    let d = hausdorff_distance(&plain.polygon, &cont.polygon) / metrics(&plain.polygon).circumradius;
    assert!(d < 0.03, "{d}");
}

#[test]
fn uniqueness_probe_examples() {
    let opts = MinkowskiOptions::default();
    let single = uniqueness_probe(&square_target(), &[5], &opts).unwrap();
    assert!(single.pairwise.is_empty() && single.passed());
    let hex = uniqueness_probe(&TargetMeasure::regular(6, 1.0).unwrap(), &[1, 2, 3], &opts).unwrap();
    assert_eq!(hex.pairwise.len(), 3);
    assert!(hex.passed(), "{:?}", hex.pairwise);
}
