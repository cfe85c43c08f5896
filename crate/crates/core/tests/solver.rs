mod common;

use channelfj::quadrature::integrate_1d;
use channelfj::solver::{assemble, steady_flux, Boundary, FjOperator, Grid1D, InitialCondition, SolverConfig, SolverState};
use channelfj::{Error, Method, QuadOptions, Section};
use common::{fig3, rel, straight};
use proptest::prelude::*;

const CLOSED: Method = Method::ClosedFormEllipse;
const FIXED0: Boundary<f64> = Boundary::FixedDensity { value: 0.0 };

fn fig3_operator(n: usize) -> FjOperator<f64> {
    let ch = fig3();
    assemble(&ch, &Grid1D::over(&ch, n).unwrap(), CLOSED).unwrap()
}

fn ratio_range(op: &FjOperator<f64>, p: &[f64]) -> (f64, f64) {
    p.iter()
        .zip(op.omega_cell())
        .map(|(p, w)| p / w)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn no_flux_steps_conserve_mass(p in prop::collection::vec(0.0..1.0f64, 64), theta in prop::sample::select(vec![0.5, 1.0]), dt in 1e-4..1.0f64) {
        let op = fig3_operator(64);
        let cfg = SolverConfig { theta, ..SolverConfig::implicit(dt) };
        let mut s = SolverState { t: 0.0, p };
        let m0 = op.mass(&s.p);
        for _ in 0..20 {
            let before = op.mass(&s.p);
            op.step_in_place(&mut s, &cfg).unwrap();
            prop_assert!(rel(op.mass(&s.p), before) < 1e-12);
        }
        prop_assert!(rel(op.mass(&s.p), m0) < 1e-12 * 20.0);
    }

    #[test]
    fn implicit_steps_obey_maximum_principle(p in prop::collection::vec(0.0..1.0f64, 64), dt in 1e-4..1.0f64) {
        let op = fig3_operator(64);
        let cfg = SolverConfig::implicit(dt);
        let mut s = SolverState { t: 0.0, p };
        let (mut lo, mut hi) = ratio_range(&op, &s.p);
        for _ in 0..10 {
            op.step_in_place(&mut s, &cfg).unwrap();
            let (l, h) = ratio_range(&op, &s.p);
            prop_assert!(l >= lo - 1e-12 && h <= hi + 1e-12);
            (lo, hi) = (l, h);
        }
    }
}

#[test]
fn equilibrium_is_stationary() {
    let op = fig3_operator(256);
    let eq = InitialCondition::Equilibrium.state(&op).unwrap();
    let (wl, wr) = (op.omega_face()[0], op.omega_face()[256]);
    for (left, right) in [
        (Boundary::NoFlux, Boundary::NoFlux),
        (Boundary::FixedDensity { value: 2.0 * wl }, Boundary::FixedDensity { value: 2.0 * wr }),
    ] {
        let scale = if left == Boundary::NoFlux { 1.0 } else { 2.0 };
        let mut s = SolverState { t: 0.0, p: eq.p.iter().map(|p| p * scale).collect() };
        for theta in [1.0, 0.5, 0.0] {
            let cfg = SolverConfig { theta, ..SolverConfig::implicit(1e-3) }.with_boundaries(left, right);
            let before = s.p.clone();
            op.step_in_place(&mut s, &cfg).unwrap();
            for (a, b) in s.p.iter().zip(&before) {
                assert!(rel(*a, *b) < 1e-12);
            }
        }
    }
}

/// Independent `K = 𝒟ω` for a centered ellipse on the Fig. 3 helix.
fn k_oracle(u: f64) -> f64 {
    let (a, b) = (common::A, common::B);
    let (r1, r2) = (1.0 / 6.0, 0.1);
    let kappa = a / (a * a + b * b);
    let (s, c) = (4.0 * u).sin_cos();
    let k = kappa * (r1 * r1 * c * c + r2 * r2 * s * s).sqrt();
    2.0 * std::f64::consts::PI * r1 * r2 / (1.0 + (1.0 - k * k).sqrt())
}

#[test]
fn steady_profile_converges_at_second_order() {
    let ch = fig3();
    let (u0, u1) = (0.0, std::f64::consts::FRAC_PI_2);
    let area = ch.area();
    let opts = QuadOptions::with_tol(1e-14);
    let total = integrate_1d(|s| 1.0 / k_oracle(s), u0, u1, opts).unwrap();
    let mut errors = Vec::new();
    for n in [128, 256, 512] {
        let grid = Grid1D::new(u0, u1, n).unwrap();
        let op = assemble(&ch, &grid, CLOSED).unwrap();
        let cfg = SolverConfig::implicit(1e12).with_boundaries(Boundary::FixedDensity { value: area }, FIXED0);
        let mut s = SolverState { t: 0.0, p: vec![0.0; n] };
        op.run(&mut s, &cfg, 2).unwrap();
        let err = grid
            .centers()
            .iter()
            .zip(&s.p)
            .map(|(&u, &p)| {
                let exact = 1.0 - integrate_1d(|s| 1.0 / k_oracle(s), u0, u, opts).unwrap() / total;
                (p / area - exact).abs()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors[2] > 1e-11, "error below round-off: {errors:?}");
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "observed order {order} from {errors:?}");
    }
}

#[test]
fn gaussian_variance_grows_linearly() {
    let ch = straight(Section::ellipse(0.05, 0.05).unwrap(), 4.0, 1.5);
    let grid = Grid1D::over(&ch, 800).unwrap();
    let op = assemble(&ch, &grid, Method::Quadrature { tol: 1e-10 }).unwrap();
    let mut s = InitialCondition::Gaussian { mu: 2.0, sigma: 0.1 }.state(&op).unwrap();
    let variance = |p: &[f64]| {
        let m: f64 = p.iter().sum();
        let mean = grid.centers().iter().zip(p).map(|(u, p)| u * p).sum::<f64>() / m;
        grid.centers().iter().zip(p).map(|(u, p)| (u - mean).powi(2) * p).sum::<f64>() / m
    };
    let v0 = variance(&s.p);
    op.run(&mut s, &SolverConfig::implicit(1e-4), 200).unwrap();
    let grown = variance(&s.p) - v0;
    assert!(rel(grown, 2.0 * 1.5 * s.t) < 0.01, "{grown} vs {}", 3.0 * s.t);
}

#[test]
fn time_stepped_flux_matches_resistance_integral() {
    let ch = fig3();
    let grid = Grid1D::new(0.0, std::f64::consts::FRAC_PI_2, 4096).unwrap();
    let op = assemble(&ch, &grid, CLOSED).unwrap();
    let pl = ch.area();
    let left = Boundary::FixedDensity { value: pl };
    let cfg = SolverConfig::implicit(10.0).with_boundaries(left, FIXED0);
    let mut s = InitialCondition::Uniform.state(&op).unwrap();
    op.run(&mut s, &cfg, 60).unwrap();
    let j = op.face_fluxes(&s.p, left, FIXED0);
    let (lo, hi) = j.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / hi < 1e-10, "flux not uniform: {lo}..{hi}");
    let resistance = steady_flux(&ch, &grid, pl, 0.0, CLOSED).unwrap();
    assert!(rel(j[0], resistance) < 1e-6, "{} vs {resistance}", j[0]);
    assert!(rel(j[0], op.discrete_steady_flux(pl, 0.0)) < 1e-10);

    let doubled = ch.with_bulk_d(2.0).unwrap();
    let twice = steady_flux(&doubled, &grid, pl, 0.0, CLOSED).unwrap();
    assert!(rel(twice, 2.0 * resistance) < 1e-14);
}

#[test]
fn non_finite_state_is_a_solver_failure() {
    let op = fig3_operator(16);
    let mut s = InitialCondition::Uniform.state(&op).unwrap();
    s.p[3] = f64::INFINITY;
    let e = op.step_in_place(&mut s, &SolverConfig::implicit(1e-3)).unwrap_err();
    assert!(matches!(e, Error::SolverFailure(_)), "{e:?}");
    assert!(Grid1D::new(0.0, 1.0, 3).is_err());
    assert!(matches!(SolverConfig::implicit(-1.0).validate(), Err(Error::InvalidParameter(_))));
}
