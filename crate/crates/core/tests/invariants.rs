use std::f64::consts::PI;

use isoquant::geom2d::{
    circle_boundary_trace, disk_intersection_area, disk_intersection_area_generic, symmetric_difference_area,
    ArcShape, Point,
};
use isoquant::isoperimetry::{asymmetry, deficit};
use isoquant::quotients::{q_m_value, QuotientSpec};
use isoquant::shapes::{make_biscuit, make_disk, make_oval, make_pk};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = ArcShape> {
    prop_oneof![
        Just(make_disk()),
        (0.05..0.95f64).prop_filter_map("infeasible oval", |b| make_oval(b).ok().map(|r| r.1)),
        (3usize..=5, 0.05..0.25f64).prop_filter_map("infeasible P(k)", |(k, b)| make_pk(k, b).ok().map(|r| r.1)),
        (0.0..2.0f64).prop_map(|l| make_biscuit(l).unwrap().1),
    ]
}

fn placed(s: ArcShape, theta: f64, scale: f64, dx: f64, dy: f64) -> ArcShape {
    s.rotate(theta).scale(scale).translate(Point::new(dx, dy))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn functionals_survive_similarities(
        s in shape(),
        theta in 0.0..(2.0 * PI),
        scale in 0.1..10.0f64,
        dx in -5.0..5.0f64,
        dy in -5.0..5.0f64,
    ) {
        let t = placed(s.clone(), theta, scale, dx, dy);
        prop_assert!((deficit(&t) - deficit(&s)).abs() < 1e-9);
        prop_assert!((asymmetry(&t).unwrap().alpha - asymmetry(&s).unwrap().alpha).abs() < 1e-6);
    }

    #[test]
    fn quotient_stays_above_the_mask_value(s in shape()) {
        let a = asymmetry(&s).unwrap().alpha;
        prop_assume!(a > 1e-3);
        let q = q_m_value(&QuotientSpec::new(2), deficit(&s), a).unwrap();
        prop_assert!(q >= 0.3931 - 1e-4, "q2 = {q}");
        prop_assert!((0.0..=2.0).contains(&a));
        prop_assert!(deficit(&s) >= -1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_difference_is_a_metric(
        a in shape(),
        b in shape(),
        c in shape(),
        shifts in prop::array::uniform6(-0.6..0.6f64),
    ) {
        let a = a.translate(Point::new(shifts[0], shifts[1]));
        let b = b.rotate(shifts[2]).translate(Point::new(shifts[3], 0.0));
        let c = c.translate(Point::new(shifts[4], shifts[5]));
        let ab = symmetric_difference_area(&a, &b).unwrap();
        let ba = symmetric_difference_area(&b, &a).unwrap();
        let bc = symmetric_difference_area(&b, &c).unwrap();
        let ac = symmetric_difference_area(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab), "{ab} vs {ba}");
        prop_assert!(ab >= 0.0);
        prop_assert!(ac <= ab + bc + 1e-8);
        let aa = symmetric_difference_area(&a, &a).unwrap();
        prop_assert!(aa < 1e-9, "{aa}");
    }

    #[test]
    fn disk_intersection_paths_agree(s in shape(), cx in -1.0..1.0f64, cy in -1.0..1.0f64, r in 0.2..1.8f64) {
        let exact = disk_intersection_area(&s, Point::new(cx, cy), r);
        let generic = disk_intersection_area_generic(&s, Point::new(cx, cy), r).unwrap();
        prop_assert!((exact - generic).abs() <= 1e-8 * PI, "{exact} vs {generic}");
    }

    /// d/dr |E ∩ B_r(x)| equals the length of ∂B_r(x) inside E.
    #[test]
    fn coarea_formula(s in shape(), cx in -0.8..0.8f64, cy in -0.8..0.8f64, r in 0.2..1.6f64) {
        let c = Point::new(cx, cy);
        let h = 1e-5;
        let derivative = (disk_intersection_area(&s, c, r + h) - disk_intersection_area(&s, c, r - h)) / (2.0 * h);
        let trace = circle_boundary_trace(&s, c, r);
        prop_assume!(!trace.degenerate_contact);
        let length = r * trace.total_angle();
        prop_assert!((derivative - length).abs() <= 1e-5 * (1.0 + length), "{derivative} vs {length}");
    }
}
