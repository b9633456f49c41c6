use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use torsion_minkowski::geometry::{
    build_polytope, hausdorff_distance, metrics, minkowski_combination, minkowski_sum, scale,
    support_function, Direction, Polygon, SupportSpec, Vec2,
};
use torsion_minkowski::verify::random_polygon;

fn body(seed: u64) -> Polygon {
    random_polygon(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_is_additive(a in any::<u64>(), b in any::<u64>(), theta in 0.0..std::f64::consts::TAU) {
        let (p, q) = (body(a), body(b));
        let u = Direction::from_angle(theta);
        let lhs = support_function(&minkowski_sum(&p, &q), u);
        let rhs = support_function(&p, u) + support_function(&q, u);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn scaling_laws(a in any::<u64>(), s in 0.1f64..10.0) {
        let p = body(a);
        let q = scale(&p, s).unwrap();
        prop_assert!((q.area() - s * s * p.area()).abs() < 1e-12 * q.area());
        prop_assert!((q.diameter() - s * p.diameter()).abs() < 1e-12 * q.diameter());
        let (m, n) = (metrics(&p), metrics(&q));
        // the bisection resolves the inradius to an absolute tolerance
        prop_assert!((n.inradius - s * m.inradius).abs() < 1e-8, "{} vs {}", n.inradius, s * m.inradius);
    }

    #[test]
    fn hausdorff_is_a_metric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (p, q, r) = (body(a), body(b), body(c));
        let pq = hausdorff_distance(&p, &q);
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - hausdorff_distance(&q, &p)).abs() < 1e-12);
        prop_assert!(hausdorff_distance(&p, &p) < 1e-12);
        prop_assert!(pq <= hausdorff_distance(&p, &r) + hausdorff_distance(&r, &q) + 1e-12);
    }

    #[test]
    fn build_round_trip(a in any::<u64>(), shift in (-3.0f64..3.0, -3.0f64..3.0)) {
        let p = body(a).translate(Vec2::new(shift.0, shift.1));
        let q = build_polytope(&SupportSpec::of_polygon(&p)).unwrap();
        prop_assert!(hausdorff_distance(&p, &q) < 1e-9);
        prop_assert_eq!(p.len(), q.len());
    }

    #[test]
    fn translation_shifts_support(a in any::<u64>(), t in (-2.0f64..2.0, -2.0f64..2.0), theta in 0.0..std::f64::consts::TAU) {
        let p = body(a);
        let t = Vec2::new(t.0, t.1);
        let u = Direction::from_angle(theta);
        let moved = support_function(&p.translate(t), u);
        prop_assert!((moved - support_function(&p, u) - u.dot(t)).abs() < 1e-12);
    }

    #[test]
    fn radii_are_ordered(a in any::<u64>()) {
        let p = body(a);
        let m = metrics(&p);
        prop_assert!(0.0 < m.inradius && m.inradius <= m.circumradius);
        prop_assert!(m.circumradius <= m.diameter + 1e-12);
        prop_assert!(p.depth(m.incenter) >= m.inradius * (1.0 - 1e-9));
    }

    #[test]
    fn combination_area_is_concave_in_sqrt(a in any::<u64>(), b in any::<u64>(), t in 0.05f64..0.95) {
        let (p, q) = (body(a), body(b));
        let c = minkowski_combination(&p, &q, t).unwrap();
        let rhs = (1.0 - t) * p.area().sqrt() + t * q.area().sqrt();
        prop_assert!(c.area().sqrt() >= rhs * (1.0 - 1e-12));
    }
}
