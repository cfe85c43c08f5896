mod common;

use channelfj::brownian::to_channel_coords;
use channelfj::{
    deff_ellipse_closed, deff_focal, deff_quadrature, deff_rectangle_closed, deff_second_order, deff_series, Channel, Curve,
    Section, Twist,
};
use common::{rel, with_offsets};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
enum Shape {
    Ellipse(f64, f64),
    Rectangle(f64, f64),
    Cardioid(f64),
}

impl Shape {
    fn section(self) -> Section {
        match self {
            Shape::Ellipse(a, b) => Section::ellipse(a, b),
            Shape::Rectangle(a, b) => Section::rectangle(a, b),
            Shape::Cardioid(r) => Section::cardioid(r),
        }
        .unwrap()
    }
}

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0.01..0.15f64, 0.01..0.15f64).prop_map(|(a, b)| Shape::Ellipse(a, b)),
        (0.02..0.25f64, 0.02..0.25f64).prop_map(|(a, b)| Shape::Rectangle(a, b)),
        (0.005..0.05f64).prop_map(Shape::Cardioid),
    ]
}

fn curve() -> impl Strategy<Value = Curve> {
    prop_oneof![
        (0.2..1.0f64, 0.0..0.5f64).prop_map(|(a, b)| Curve::helix(a, b).unwrap()),
        (0.2..1.0f64).prop_map(|r| Curve::circle(r).unwrap()),
    ]
}

/// A channel, a point `u` in its domain, and its reach `κ·max|η|` below 0.8.
fn channel() -> impl Strategy<Value = (Channel, f64)> {
    (curve(), shape(), -6.0..6.0f64, 0.0..1.0f64)
        .prop_map(|(c, s, omega, t)| {
            let ch = Channel::new(c, s.section(), Twist::twist(omega), 1.0).unwrap();
            let (a, b) = ch.domain();
            let u = a + t * (b - a);
            (ch, u)
        })
        .prop_filter("too close to the focal line", |(ch, u)| ch.max_kappa_eta(*u).unwrap() < 0.8)
}

fn closed(ch: &Channel, u: f64) -> Option<f64> {
    deff_ellipse_closed(ch, u).or_else(|_| deff_rectangle_closed(ch, u)).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn binormal_offset_leaves_deff_unchanged((ch, u) in channel(), q0 in -0.05..0.05f64, q1 in -0.1..0.1f64) {
        let shifted = with_offsets(&ch, vec![0.0], vec![q0, q1]);
        let a = deff_quadrature(&ch, u, 1e-10).unwrap();
        let b = deff_quadrature(&shifted, u, 1e-10).unwrap();
        prop_assert!(rel(b, a) <= 1e-10);
        let a = deff_series(&ch, u, 4, 1e-12).unwrap();
        let b = deff_series(&shifted, u, 4, 1e-12).unwrap();
        prop_assert!(rel(b, a) <= 1e-10);
        let a = deff_second_order(&ch, u).unwrap();
        let b = deff_second_order(&shifted, u).unwrap();
        prop_assert!(rel(b, a) <= 1e-10);
        if let Some(a) = closed(&ch, u) {
            prop_assert!(rel(closed(&shifted, u).unwrap(), a) <= 1e-10);
        }
    }

    /// Odd-order partial sums leave a tail `⟨(κη)^{n+1}/(1 − κη)⟩ ≥ 0`; with
    /// central symmetry the odd moments vanish and every order qualifies.
    #[test]
    fn series_partial_sums_increase_to_the_quadrature((ch, u) in channel()) {
        let full = deff_quadrature(&ch, u, 1e-12).unwrap();
        let symmetric = !matches!(ch.section().shape(), channelfj::SectionShape::Cardioid { .. });
        let orders: Vec<usize> = if symmetric { (0..=8).collect() } else { vec![1, 3, 5, 7, 9] };
        let mut last = 0.0;
        for order in orders {
            let s = deff_series(&ch, u, order, 1e-12).unwrap();
            prop_assert!(s >= last - 1e-12, "order {order}: {s} < {last}");
            prop_assert!(s <= full * (1.0 + 1e-10), "order {order}: {s} > {full}");
            last = s;
        }
    }

    #[test]
    fn centered_channels_diffuse_no_slower_than_bulk((ch, u) in channel()) {
        prop_assert!(deff_quadrature(&ch, u, 1e-10).unwrap() >= 1.0);
    }

    #[test]
    fn focal_form_matches_quadrature((ch, u) in channel()) {
        let a = deff_quadrature(&ch, u, 1e-12).unwrap();
        let b = deff_focal(&ch, u, 1e-12).unwrap();
        prop_assert!(rel(b, a) <= 1e-10, "{b} vs {a}");
    }

    #[test]
    fn closed_forms_match_quadrature((ch, u) in channel(), p in -0.3..0.3f64) {
        let width = ch.section().min_width();
        let ch = with_offsets(&ch, vec![p * width], vec![0.0]);
        prop_assume!(ch.max_kappa_eta(u).unwrap() < 0.8);
        if let Some(c) = closed(&ch, u) {
            let q = deff_quadrature(&ch, u, 1e-10).unwrap();
            prop_assert!(rel(c, q) <= 1e-8, "{c} vs {q}");
        }
    }

    #[test]
    fn second_moment_identity((ch, u) in channel(), p0 in -0.02..0.02f64, p1 in -0.02..0.02f64) {
        let ch = with_offsets(&ch, vec![p0, p1], vec![0.01]);
        let m = ch.moments(u, 2, 1e-12).unwrap();
        let (c, s) = (m.theta.cos(), m.theta.sin());
        let rhs = m.eta_mean.powi(2) + (m.s1 / 2.0).powi(2) * c * c + (m.s2 / 2.0).powi(2) * s * s;
        prop_assert!(rel(m.eta_moments[2], rhs) <= 1e-8);
        let p = p0 + p1 * u;
        prop_assert!((m.eta_mean - p).abs() <= 1e-8 * ch.section().min_width().max(p.abs()));
    }

    #[test]
    fn area_ignores_twist_and_offsets((ch, u) in channel(), omega in -8.0..8.0f64, p in -0.01..0.01f64) {
        let moved = ch.with_transport(Twist::new(omega, channelfj::Polynomial::constant(p), channelfj::Polynomial::constant(-p)));
        let a = ch.moments(u, 2, 1e-12).unwrap();
        let b = moved.moments(u, 2, 1e-12).unwrap();
        prop_assert!(rel(b.area, a.area) <= 1e-12);
        prop_assert!((b.s1 - a.s1).abs() <= 1e-10 * a.s1 && (b.s2 - a.s2).abs() <= 1e-10 * a.s1);
    }

    #[test]
    fn frames_are_orthonormal(c in curve(), t in 0.0..1.0f64) {
        let (a, b) = c.domain();
        let f = c.frame_at(a + t * (b - a)).unwrap();
        for (x, y, e) in [
            (f.tangent, f.tangent, 1.0),
            (f.normal, f.normal, 1.0),
            (f.binormal, f.binormal, 1.0),
            (f.tangent, f.normal, 0.0),
            (f.tangent, f.binormal, 0.0),
            (f.normal, f.binormal, 0.0),
        ] {
            prop_assert!((x.dot(y) - e).abs() <= 1e-10);
        }
    }

    #[test]
    fn frenet_equations_hold(c in curve(), t in 0.1..0.9f64) {
        let (a, b) = c.domain();
        let u = a + t * (b - a);
        let f = c.frame_at(u).unwrap();
        let residual = |h: f64| {
            let (m, p) = (c.frame_at(u - h).unwrap(), c.frame_at(u + h).unwrap());
            let dt = (p.tangent - m.tangent) * (0.5 / h);
            let dn = (p.normal - m.normal) * (0.5 / h);
            let db = (p.binormal - m.binormal) * (0.5 / h);
            let r1 = (dt - f.normal * f.kappa).norm();
            let r2 = (dn - (f.binormal * f.tau - f.tangent * f.kappa)).norm();
            let r3 = (db + f.normal * f.tau).norm();
            r1.max(r2).max(r3)
        };
        let scale = f.kappa.powi(3) + f.tau.powi(3) + f.kappa * f.tau.powi(2) + f.tau * f.kappa.powi(2);
        for h in [1e-2, 3e-3, 1e-3] {
            prop_assert!(residual(h) <= scale * h * h + 1e-9, "h = {h}: {}", residual(h));
        }
    }

    #[test]
    fn coordinates_reconstruct_points((ch, u) in channel(), v in 0.0..1.0f64, w in 0.0..1.0f64) {
        let (v0, v1) = ch.section().v_range();
        let (w0, w1) = ch.section().w_range();
        let (v, w) = (v0 + v * (v1 - v0), w0 + w * (w1 - w0));
        let x = ch.point(u, v, w).unwrap();
        let c = to_channel_coords(&ch, x, Some(u + 1e-3)).unwrap();
        let (eta, beta) = ch.eta_beta(u, v, w);
        prop_assert!((c.u - u).abs() <= 1e-8);
        prop_assert!((c.eta - eta).abs() <= 1e-8 && (c.beta - beta).abs() <= 1e-8);
        let f = ch.frame(c.u).unwrap();
        prop_assert!((f.point(c.eta, c.beta) - x).norm() <= 1e-8);
    }
}

#[test]
fn helix_curvature_and_torsion() {
    for (a, b) in [(0.25, 1.0 / 6.0), (1.0, 0.3), (0.4, 2.0)] {
        let c = Curve::helix(a, b).unwrap();
        let (u0, u1) = c.domain();
        let s = a * a + b * b;
        for i in 0..100 {
            let f = c.frame_at(u0 + (u1 - u0) * i as f64 / 99.0).unwrap();
            assert!((f.kappa - a / s).abs() <= 1e-8);
            assert!((f.tau - b / s).abs() <= 1e-8);
        }
    }
}

#[test]
fn reparametrized_custom_curve_matches_helix() {
    let (a, b) = (0.25, 1.0 / 6.0);
    let c = Curve::custom(move |t: f64| channelfj::Vec3::new(a * t.cos(), a * t.sin(), b * t), 0.0, 2.0, false)
        .unwrap()
        .reparametrize_arclength(1e-12)
        .unwrap();
    let s = a * a + b * b;
    let (u0, u1) = c.domain();
    assert!(u0.abs() < 1e-12 && (u1 - 2.0 * s.sqrt()).abs() < 1e-9);
    for i in 1..20 {
        let f = c.frame_at(u1 * i as f64 / 20.0).unwrap();
        assert!((f.kappa - a / s).abs() < 1e-5, "{}", f.kappa);
        assert!((f.tau - b / s).abs() < 1e-4, "{}", f.tau);
    }
}
