use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use torsion_minkowski::fem::{solve_polygon, SolverOptions};
use torsion_minkowski::geometry::{metrics, scale};
use torsion_minkowski::mesh::{check_mesh, triangulate, MIN_ANGLE_DEG};
use torsion_minkowski::verify::random_polygon;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn meshes_are_valid(a in any::<u64>(), h in 0.03f64..0.2) {
        let p = random_polygon(&mut ChaCha8Rng::seed_from_u64(a));
        let m = triangulate(&p, h).unwrap();
        let q = check_mesh(&m).unwrap();
        prop_assert!(q.min_angle_deg >= MIN_ANGLE_DEG);
        prop_assert!((m.total_area() - p.area()).abs() < 1e-9 * p.area());
    }

    #[test]
    fn torsion_scales_quartically(a in any::<u64>(), s in 0.5f64..2.0) {
        let p = random_polygon(&mut ChaCha8Rng::seed_from_u64(a));
        let h = 0.05 * metrics(&p).circumradius;
        let f = solve_polygon(&p, &SolverOptions::new(h)).unwrap();
        let g = solve_polygon(&scale(&p, s).unwrap(), &SolverOptions::new(s * h)).unwrap();
        let ratio = g.tau_energy() / f.tau_energy();
        // identical meshes up to scale; the gap is the iterative solve tolerance
        prop_assert!((ratio / s.powi(4) - 1.0).abs() < 1e-6, "{}", ratio);
        prop_assert!(f.u().iter().all(|&u| u >= -1e-12));
    }
}
