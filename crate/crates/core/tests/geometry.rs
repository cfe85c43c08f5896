mod common;

use std::f64::consts::PI;

use channelfj::brownian::{inside_coords, to_channel_coords};
use channelfj::{
    volume, volume_density, Channel, Channel32, Curve, Curve32, Polynomial, Section, Section32, Twist, Twist32, Vec3,
};
use common::{fig3, rel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn builtin_areas_by_quadrature() {
    for s in [
        Section::ellipse(1.0 / 6.0, 0.1).unwrap(),
        Section::rectangle(1.0 / 6.0, 0.1).unwrap(),
        Section::cardioid(0.05).unwrap(),
        Section::cardioid(1.0 / 15.0).unwrap(),
    ] {
        let (a, e, b) = s.area_and_centroid(1e-13).unwrap();
        let exact = s.analytic_area().unwrap();
        assert!(rel(a, exact) <= 1e-10, "{s:?}: {a} vs {exact}");
        let (w, h) = s.analytic_sizes().unwrap();
        assert!(e.abs() <= 1e-10 * w.max(h) && b.abs() <= 1e-10 * w.max(h), "{s:?}: centroid ({e}, {b})");
    }
}

fn hit_or_miss(s: &Section, n: usize, seed: u64) -> (f64, f64) {
    let (lo0, hi0) = (-s.support((-1.0, 0.0)), s.support((1.0, 0.0)));
    let (lo1, hi1) = (-s.support((0.0, -1.0)), s.support((0.0, 1.0)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..n).filter(|_| s.contains(rng.random_range(lo0..hi0), rng.random_range(lo1..hi1))).count();
    let f = hits as f64 / n as f64;
    let boxed = (hi0 - lo0) * (hi1 - lo1);
    (f * boxed, boxed * (f * (1.0 - f) / n as f64).sqrt())
}

#[test]
fn membership_agrees_with_area() {
    for (i, s) in [Section::ellipse(0.3, 0.1).unwrap(), Section::rectangle(0.2, 0.5).unwrap(), Section::cardioid(0.1).unwrap()]
        .iter()
        .enumerate()
    {
        let (a, err) = hit_or_miss(s, 1_000_000, 11 + i as u64);
        let exact = s.analytic_area().unwrap();
        assert!((a - exact).abs() <= 4.0 * err + 1e-12 * exact, "{s:?}: {a} ± {err} vs {exact}");
    }
}

#[test]
fn torus_volume_follows_pappus() {
    let radius = 0.25;
    let s = Section::ellipse(0.1, 0.06).unwrap();
    let area = s.analytic_area().unwrap();
    for p in [0.0, 0.05, -0.08] {
        let t = Twist::new(3.0, Polynomial::constant(p), Polynomial::constant(0.02));
        let ch = Channel::new(Curve::circle(radius).unwrap(), s.clone(), t, 1.0).unwrap();
        let (_, end) = ch.domain();
        let v = volume(&ch, end, 1e-13).unwrap();
        let centroid_path = 2.0 * PI * (radius - p);
        assert!(rel(v, area * centroid_path) <= 1e-12, "p = {p}: {v}");
    }
}

/// Arc length of the point on the helix `(a cos t, a sin t, b t)` nearest in
/// height to `x` among the turns through its polar angle.
fn helix_guess(x: Vec3<f64>, a: f64, b: f64) -> f64 {
    let phi = x.y.atan2(x.x);
    let turns = ((b * (x.z / b - phi)) / (2.0 * PI * b)).round();
    (phi + 2.0 * PI * turns) * (a * a + b * b).sqrt()
}

#[test]
fn helix_volume_matches_hit_or_miss() {
    let (a, b) = (common::A, common::B);
    let ch = common::with_offsets(&fig3(), vec![0.05], vec![0.0]);
    let (u0, u1) = ch.domain();
    let exact = volume(&ch, u1, 1e-13).unwrap();
    let kappa = a / (a * a + b * b);
    assert!(rel(exact, ch.area() * (1.0 - kappa * 0.05) * (u1 - u0)) <= 1e-12);

    let reach = 0.05 + 1.0 / 6.0 + 1e-3;
    let lo = Vec3::new(-a - reach, -a - reach, -reach);
    let hi = Vec3::new(a + reach, a + reach, 2.0 * PI * b + reach);
    let boxed = (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z);
    let (chunks, per) = (32, 400_000);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(2026);
            rng.set_stream(k);
            (0..per)
                .filter(|_| {
                    let x = Vec3::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y), rng.random_range(lo.z..hi.z));
                    match to_channel_coords(&ch, x, Some(helix_guess(x, a, b))) {
                        Ok(c) => c.u >= u0 && c.u <= u1 && 1.0 - kappa * c.eta > 0.0 && inside_coords(&ch, &c),
                        Err(_) => false,
                    }
                })
                .count()
        })
        .sum();
    let n = (chunks * per as u64) as f64;
    let f = hits as f64 / n;
    let estimate = f * boxed;
    let sigma = boxed * (f * (1.0 - f) / n).sqrt();
    assert!(rel(estimate, exact) < 0.005, "{estimate} ± {sigma} vs {exact}");
    assert!((estimate - exact).abs() < 4.0 * sigma);
}

#[test]
fn single_precision_channel() {
    let ch = Channel32::new(
        Curve32::helix(0.25, 1.0 / 6.0).unwrap(),
        Section32::ellipse(1.0 / 6.0, 0.1).unwrap(),
        Twist32::twist(4.0),
        1.0,
    )
    .unwrap();
    let wide = fig3();
    for i in 0..16 {
        let u = i as f32 * 0.1;
        let c = channelfj::deff_ellipse_closed(&ch, u).unwrap();
        let q = channelfj::deff_quadrature(&ch, u, 1e-5).unwrap();
        let exact = channelfj::deff_ellipse_closed(&wide, u as f64).unwrap();
        assert!(rel(c as f64, exact) < 1e-5, "{c} vs {exact}");
        assert!(rel(q as f64, exact) < 1e-4, "{q} vs {exact}");
        let w = volume_density(&ch, u).unwrap();
        assert!(rel(w as f64, wide.area()) < 1e-6);
    }
}
