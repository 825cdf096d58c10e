use std::f64::consts::{LN_2, PI};

use horoflow::fuchsian::{enumerate_elements, genus2_kernel_cover, genus2_octagon_group, DirichletReducer, GroupSpec};
use horoflow::hyperbolic::{
    affine_act, busemann, geodesic_flow, horocycle_flow, hyp_distance, BoundaryPoint, Frame, HPoint, Moebius,
};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = HPoint> {
    (-4.0..4.0f64, -2.5..2.5f64).prop_map(|(x, ly)| HPoint::new(x, ly.exp()).unwrap())
}

fn isometry() -> impl Strategy<Value = Moebius> {
    (0.3..3.0f64, any::<bool>(), -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, neg, b, c)| {
        let a = if neg { -a } else { a };
        Moebius::new(a, b, c, (1.0 + b * c) / a).unwrap()
    })
}

fn boundary() -> impl Strategy<Value = BoundaryPoint> {
    prop_oneof![1 => Just(BoundaryPoint::Infinity), 9 => (-4.0..4.0f64).prop_map(BoundaryPoint::Finite)]
}

fn frame() -> impl Strategy<Value = Frame> {
    (point(), 0.0..2.0 * PI).prop_map(|(z, th)| Frame::at(z, th))
}

proptest! {
    #[test]
    fn compose_keeps_unit_determinant(g in isometry(), h in isometry()) {
        prop_assert!((g.compose(&h).det() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distance_is_isometry_invariant(p in point(), q in point(), g in isometry()) {
        let d = hyp_distance(p, q);
        prop_assert!((hyp_distance(g.apply(p), g.apply(q)) - d).abs() <= 1e-8 * d.max(1.0));
    }

    #[test]
    fn busemann_cocycle_and_bound(xi in boundary(), x in point(), y in point(), z in point()) {
        let bxy = busemann(xi, x, y);
        prop_assert!((bxy + busemann(xi, y, z) - busemann(xi, x, z)).abs() < 1e-8);
        prop_assert!(bxy.abs() <= hyp_distance(x, y) + 1e-8);
    }

    #[test]
    fn busemann_is_isometry_invariant(xi in boundary(), x in point(), y in point(), g in isometry()) {
        let moved = busemann(g.apply_boundary(xi), g.apply(x), g.apply(y));
        prop_assert!((moved - busemann(xi, x, y)).abs() < 1e-8);
    }

    #[test]
    fn flows_are_one_parameter_groups(u in frame(), t in -3.0..3.0f64, s in -3.0..3.0f64) {
        let g = geodesic_flow(&geodesic_flow(&u, t), s);
        prop_assert!(g.matrix().approx_eq(geodesic_flow(&u, t + s).matrix(), 1e-12 * 50.0));
        let h = horocycle_flow(&horocycle_flow(&u, t), s);
        prop_assert!(h.matrix().approx_eq(horocycle_flow(&u, t + s).matrix(), 1e-12 * 50.0));
    }

    #[test]
    fn geodesic_flow_moves_base_by_t(u in frame(), t in -5.0..5.0f64) {
        prop_assert!((hyp_distance(u.base(), geodesic_flow(&u, t).base()) - t.abs()).abs() < 1e-8);
    }

    #[test]
    fn horocycle_flow_preserves_busemann_level(u in frame(), s in -5.0..5.0f64) {
        let v = horocycle_flow(&u, s);
        prop_assert!(v.forward().approx_eq(&u.forward(), 1e-9));
        prop_assert!(busemann(u.forward(), u.base(), v.base()).abs() < 1e-8);
    }

    #[test]
    fn affine_at_unit_scale_is_horocycle(u in frame(), b in -3.0..3.0f64) {
        let v = affine_act(&u, 1.0, b).unwrap();
        prop_assert!(v.matrix().approx_eq(horocycle_flow(&u, b).matrix(), 1e-12));
    }

    #[test]
    fn right_angle_triangles_lose_at_most_ln2(c in point(), phi in 0.0..2.0 * PI, th in 0.5 * PI..PI,
                                             r1 in 0.05..8.0f64, r2 in 0.05..8.0f64) {
        let a = geodesic_flow(&Frame::at(c, phi), r1).base();
        let b = geodesic_flow(&Frame::at(c, phi + th), r2).base();
        prop_assert!(hyp_distance(a, b) >= hyp_distance(a, c) + hyp_distance(c, b) - LN_2 - 1e-9);
    }

    #[test]
    fn reduction_is_idempotent(u in frame()) {
        let g = genus2_octagon_group();
        let r = DirichletReducer::new(&g);
        let once = r.reduce(&u).unwrap();
        prop_assert!(r.is_reduced(once.frame.base()));
        let twice = r.reduce(&once.frame).unwrap();
        prop_assert!(twice.steps.is_empty());
        // The recorded element really carries the input onto the output.
        let mapped = Frame::new(once.applied_element().matrix.compose(u.matrix()));
        prop_assert!(mapped.matrix().approx_eq(once.frame.matrix(), 1e-7));
    }
}

#[test]
fn words_evaluate_to_their_matrices() {
    let g = genus2_octagon_group();
    for e in enumerate_elements(&g, 3).unwrap() {
        assert!(g.evaluate(&e.word).approx_eq(&e.matrix, 1e-9));
    }
}

#[test]
fn element_counts_grow_like_a_free_group_at_short_lengths() {
    let g = genus2_octagon_group();
    assert_eq!(enumerate_elements(&g, 1).unwrap().len(), 8);
    assert_eq!(enumerate_elements(&g, 2).unwrap().len(), 8 + 8 * 7);
}

#[test]
fn kernel_is_closed_under_products_and_inverses() {
    let g = genus2_kernel_cover();
    let filter = horoflow::fuchsian::kernel_filter(&g, g.kernel_weights().unwrap()).unwrap();
    let kernel: Vec<_> = enumerate_elements(&g, 3).unwrap().into_iter().filter(|e| filter.accepts(e)).collect();
    assert!(kernel.len() > 10);
    for a in kernel.iter().take(40) {
        assert!(filter.accepts(&a.inverse()));
        for b in kernel.iter().take(40) {
            assert!(filter.accepts(&a.compose(b)));
        }
    }
}

#[test]
fn group_spec_round_trips() {
    for g in [genus2_octagon_group(), genus2_kernel_cover()] {
        let spec = GroupSpec::from_presentation(&g);
        let back = GroupSpec::parse(&spec.to_toml()).unwrap();
        assert_eq!(back, spec);
        let rebuilt = back.build(false).unwrap();
        assert_eq!(rebuilt.rank(), g.rank());
        assert_eq!(rebuilt.kernel_weights(), g.kernel_weights());
    }
}
