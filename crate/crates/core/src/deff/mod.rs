//! Effective diffusion coefficient `𝒟(u)` and volume density `ω(u)`.
//!
//! `𝒟(u) = D ⟨(1 − κη)⁻¹⟩_u / (1 − κ⟨η⟩_u)` is available by direct
//! quadrature, by its moment series, at second order, and in closed form
//! for elliptical and rectangular sections.

mod closed;

pub use closed::{
    box_average_inverse, deff_ellipse_closed, deff_rectangle_closed, ellipse_closed_terms, rectangle_closed_terms, EllipseTerms,
    RectangleTerms,
};

use rayon::prelude::*;

use crate::channel::ChannelSpec;
use crate::curve::focal_distance;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, integrate_2d_vec, QuadOptions};
use crate::Real;

/// Margin kept between `sup κη` and the focal line for quadrature.
const FOCAL_MARGIN: f64 = 1e-9;

/// Tolerance for moments feeding the series and second-order forms.
const MOMENT_TOL: f64 = 1e-12;

/// How `𝒟(u)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeffMethod<T> {
    Quadrature { tol: T },
    Series { order: usize },
    SecondOrder,
    ClosedFormEllipse,
    ClosedFormRectangle,
}

impl<T: Real> DeffMethod<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Quadrature { .. } => "quadrature",
            Self::Series { .. } => "series",
            Self::SecondOrder => "second_order",
            Self::ClosedFormEllipse => "closed_ellipse",
            Self::ClosedFormRectangle => "closed_rectangle",
        }
    }

    /// Evaluates `𝒟(u)` with this method.
    pub fn eval(&self, channel: &ChannelSpec<T>, u: T) -> Result<T> {
        match *self {
            Self::Quadrature { tol } => deff_quadrature(channel, u, tol),
            Self::Series { order } => deff_series(channel, u, order, T::lit(MOMENT_TOL)),
            Self::SecondOrder => deff_second_order(channel, u),
            Self::ClosedFormEllipse => deff_ellipse_closed(channel, u),
            Self::ClosedFormRectangle => deff_rectangle_closed(channel, u),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Quadrature { tol } if !(tol > T::zero()) => {
                Err(Error::InvalidParameter(format!("quadrature tolerance must be positive, got {tol}")))
            }
            _ => Ok(()),
        }
    }
}

/// `𝒟(u)` by adaptive 2D quadrature of `ω_S/(1 − κη)` over the section.
pub fn deff_quadrature<T: Real>(channel: &ChannelSpec<T>, u: T, tol: T) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let kappa = channel.kappa(u)?;
    if kappa == T::zero() {
        return Ok(channel.bulk_d());
    }
    channel.check_narrow(u, T::lit(FOCAL_MARGIN))?;
    let section = channel.section();
    let [area, inv, eta] = integrate_2d_vec(
        |v, w| {
            let d = channel.area_density(u, v, w);
            let (e, _) = channel.eta_beta(u, v, w);
            [d, d / (T::one() - kappa * e), d * e]
        },
        section.v_range(),
        section.w_range(),
        section.quad_options(tol),
    )?;
    Ok(channel.bulk_d() * (inv / area) / (T::one() - kappa * eta / area))
}

/// Partial sum `(D/(1 − κ⟨η⟩)) Σ_{i ≤ order} ⟨η^i⟩ κ^i`.
pub fn deff_series<T: Real>(channel: &ChannelSpec<T>, u: T, order: usize, tol: T) -> Result<T> {
    let kappa = channel.kappa(u)?;
    if kappa == T::zero() {
        return Ok(channel.bulk_d());
    }
    let reach = channel.max_kappa_eta(u)?;
    let (lo, hi) = channel.eta_extent(u);
    let radius = kappa * lo.abs().max(hi.abs());
    if !(reach < T::one()) {
        return Err(Error::FocalContact { u: u.as_f64(), max_kappa_eta: reach.as_f64() });
    }
    if radius >= T::lit(0.9) {
        log::warn!("moment series near its convergence radius at u = {u}: κ·max|η| = {radius}");
    }
    let m = channel.moments(u, order.max(2), tol)?;
    let mut sum = T::zero();
    let mut kp = T::one();
    for i in 0..=order {
        sum = sum + m.eta_moments[i] * kp;
        kp = kp * kappa;
    }
    Ok(channel.bulk_d() * sum / (T::one() - kappa * m.eta_mean))
}

/// Second-order form `D(1 + ⟨η⟩κ + (⟨η⟩² + (s1/2)² cos²θ + (s2/2)² sin²θ)κ²)/(1 − κ⟨η⟩)`.
pub fn deff_second_order<T: Real>(channel: &ChannelSpec<T>, u: T) -> Result<T> {
    let kappa = channel.kappa(u)?;
    if kappa == T::zero() {
        return Ok(channel.bulk_d());
    }
    channel.check_narrow(u, T::zero())?;
    let m = channel.moments(u, 2, T::lit(MOMENT_TOL))?;
    let half = T::lit(0.5);
    let (c, s) = (m.theta.cos(), m.theta.sin());
    let spread = (m.s1 * half).powi(2) * c * c + (m.s2 * half).powi(2) * s * s;
    let e = m.eta_mean;
    let num = T::one() + e * kappa + (e * e + spread) * kappa * kappa;
    Ok(channel.bulk_d() * num / (T::one() - kappa * e))
}

/// Focal form `𝒟 = D/(A κ (1 − κ⟨η⟩)) ⟨⟨1/d_f⟩⟩`, with `⟨⟨·⟩⟩` the
/// unnormalized `ω_S`-weighted section integral and `d_f` the focal distance.
pub fn deff_focal<T: Real>(channel: &ChannelSpec<T>, u: T, tol: T) -> Result<T> {
    let frame = channel.frame(u)?;
    if frame.kappa == T::zero() {
        return Ok(channel.bulk_d());
    }
    channel.check_narrow(u, T::lit(FOCAL_MARGIN))?;
    let section = channel.section();
    let [area, inv, eta] = integrate_2d_vec(
        |v, w| {
            let d = channel.area_density(u, v, w);
            let (e, _) = channel.eta_beta(u, v, w);
            let df = focal_distance(&frame, e).unwrap_or(T::infinity());
            [d, d / df, d * e]
        },
        section.v_range(),
        section.w_range(),
        section.quad_options(tol),
    )?;
    let k = frame.kappa;
    Ok(channel.bulk_d() * inv / (area * k * (T::one() - k * eta / area)))
}

/// `ω(u) = A (1 − κ⟨η⟩_u)`. For a centered section under rigid
/// transport `⟨η⟩_u = p(u)`.
pub fn volume_density<T: Real>(channel: &ChannelSpec<T>, u: T) -> Result<T> {
    let kappa = channel.kappa(u)?;
    let eta_mean = channel.transport().p.eval(u);
    Ok(channel.area() * (T::one() - kappa * eta_mean))
}

/// `V(u) = ∫_{u1}^{u} ω(s) ds`.
pub fn volume<T: Real>(channel: &ChannelSpec<T>, u: T, tol: T) -> Result<T> {
    let (u0, _) = channel.domain();
    if u == u0 {
        return Ok(T::zero());
    }
    // frame failures surface as NaN; re-evaluate to report them
    let v = integrate_1d(|s| volume_density(channel, s).unwrap_or(T::nan()), u0, u, QuadOptions::with_tol(tol));
    match v {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => {
            let n = 64;
            for i in 0..=n {
                let s = u0 + (u - u0) * T::from_count(i) / T::from_count(n);
                volume_density(channel, s)?;
            }
            Err(Error::QuadratureFailure { tol: tol.as_f64(), estimate: f64::NAN, evaluations: 0 })
        }
        Err(e) => Err(e),
    }
}

/// `𝒟`, `ω` and `A` sampled on a grid.
#[derive(Debug, Clone)]
pub struct DeffProfile<'a, T> {
    pub u_grid: Vec<T>,
    pub deff: Vec<T>,
    pub omega_vol: Vec<T>,
    pub area: Vec<T>,
    pub method: DeffMethod<T>,
    pub channel: &'a ChannelSpec<T>,
}

impl<T: Real> DeffProfile<'_, T> {
    pub fn len(&self) -> usize {
        self.u_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_grid.is_empty()
    }

    /// `𝒟(u)/D`.
    pub fn ratio(&self) -> Vec<T> {
        let d = self.channel.bulk_d();
        self.deff.iter().map(|&x| x / d).collect()
    }
}

/// Evaluates `method` on every grid point in parallel. Errors carry the
/// offending `u`; the first failing point in grid order is reported.
pub fn deff_profile<'a, T: Real>(channel: &'a ChannelSpec<T>, u_grid: &[T], method: DeffMethod<T>) -> Result<DeffProfile<'a, T>> {
    method.validate()?;
    if u_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("profile grid must be strictly increasing".into()));
    }
    let (lo, hi) = channel.domain();
    if let Some(&u) = u_grid.iter().find(|&&u| u < lo || u > hi) {
        return Err(Error::InvalidParameter(format!("grid point {u} outside domain [{lo}, {hi}]")));
    }
    let rows: Vec<Result<(T, T)>> = u_grid
        .par_iter()
        .map(|&u| {
            let d = method.eval(channel, u).map_err(|e| e.at(u.as_f64()))?;
            let w = volume_density(channel, u).map_err(|e| e.at(u.as_f64()))?;
            Ok((d, w))
        })
        .collect();
    let mut deff = Vec::with_capacity(rows.len());
    let mut omega_vol = Vec::with_capacity(rows.len());
    for r in rows {
        let (d, w) = r?;
        deff.push(d);
        omega_vol.push(w);
    }
    Ok(DeffProfile { u_grid: u_grid.to_vec(), deff, omega_vol, area: vec![channel.area(); u_grid.len()], method, channel })
}

/// `n` evenly spaced points on `[a, b]`, endpoints included.
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * T::from_count(i) / T::from_count(n - 1)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use crate::section::{Polynomial, SectionMap, TwistOffset};
    use std::f64::consts::PI;

    fn circle_channel(section: SectionMap<f64>, omega: f64, p: f64) -> ChannelSpec<f64> {
        let tr = TwistOffset::new(omega, Polynomial::constant(p), Polynomial::zero());
        ChannelSpec::new(CurveSpec::circle(0.25).unwrap(), section, tr, 1.0).unwrap()
    }

    #[test]
    fn no_gyration_ellipse() {
        let ch = circle_channel(SectionMap::ellipse(1.0 / 6.0, 0.1).unwrap(), 0.0, 0.0);
        let r1k: f64 = 4.0 / 6.0;
        let expect = 2.0 * (1.0 - (1.0 - r1k * r1k).sqrt()) / (r1k * r1k);
        let q = deff_quadrature(&ch, 0.3, 1e-12).unwrap();
        assert!((q - expect).abs() < 1e-11 * expect);
        assert!((deff_ellipse_closed(&ch, 0.3).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 1.1458).abs() < 1e-4);
    }

    #[test]
    fn ogawa_by_quadrature() {
        let ch = circle_channel(SectionMap::rectangle(1.0 / 6.0, 0.1).unwrap(), 0.0, 0.0);
        let q = deff_quadrature(&ch, 0.0, 1e-13).unwrap();
        assert!((q - 1.5 * 2f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn straight_line_returns_bulk() {
        let ch = ChannelSpec::new(
            CurveSpec::line(Some(crate::Vec3::new(0.0, 1.0, 0.0))),
            SectionMap::cardioid(0.1).unwrap(),
            TwistOffset::twist(3.0),
            2.5,
        )
        .unwrap();
        for m in [DeffMethod::Quadrature { tol: 1e-10 }, DeffMethod::Series { order: 4 }, DeffMethod::SecondOrder] {
            assert_eq!(m.eval(&ch, 0.4).unwrap(), 2.5);
        }
    }

    #[test]
    fn second_order_equals_series_two() {
        let ch = circle_channel(SectionMap::cardioid(0.05).unwrap(), 4.0, 0.01);
        for u in [0.1, 0.7, 1.3] {
            let a = deff_second_order(&ch, u).unwrap();
            let b = deff_series(&ch, u, 2, 1e-13).unwrap();
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn circular_second_order_is_angle_free() {
        let r = 0.1;
        let ch = circle_channel(SectionMap::ellipse(r, r).unwrap(), 4.0, 0.0);
        let expect = 1.0 + r * r * 16.0 / 4.0;
        for u in [0.0, 0.3, 1.1] {
            assert!((deff_second_order(&ch, u).unwrap() - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn focal_form_matches_quadrature() {
        let ch = circle_channel(SectionMap::cardioid(0.05).unwrap(), 4.0, 0.0);
        for u in [0.2, 0.9] {
            let a = deff_focal(&ch, u, 1e-12).unwrap();
            let b = deff_quadrature(&ch, u, 1e-12).unwrap();
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn volume_density_with_offset() {
        let ch = circle_channel(SectionMap::ellipse(1.0 / 6.0, 0.1).unwrap(), 0.0, 0.05);
        let w = volume_density(&ch, 0.5).unwrap();
        assert!((w - PI / 60.0 * 0.8).abs() < 1e-14);
    }

    #[test]
    fn pappus_volume() {
        let ch = circle_channel(SectionMap::ellipse(0.1, 0.05).unwrap(), 2.0, 0.0);
        let (_, u1) = ch.domain();
        let v = volume(&ch, u1, 1e-12).unwrap();
        assert!((v - PI * 0.005 * 2.0 * PI * 0.25).abs() < 1e-13);
        assert_eq!(volume(&ch, 0.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn focal_contact_reported_with_u() {
        let ch = circle_channel(SectionMap::ellipse(0.3, 0.1).unwrap(), 0.0, 0.0);
        let grid = linspace(0.0, 1.0, 5);
        let err = deff_profile(&ch, &grid, DeffMethod::Quadrature { tol: 1e-10 }).unwrap_err();
        match err {
            Error::AtPoint { u, source } => {
                assert_eq!(u, 0.0);
                assert!(matches!(*source, Error::FocalContact { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn profile_keeps_grid_order() {
        let ch = circle_channel(SectionMap::ellipse(1.0 / 6.0, 0.1).unwrap(), 4.0, 0.0);
        let grid = linspace(0.0, 1.0, 33);
        let p = deff_profile(&ch, &grid, DeffMethod::ClosedFormEllipse).unwrap();
        for (u, d) in grid.iter().zip(&p.deff) {
            assert_eq!(*d, deff_ellipse_closed(&ch, *u).unwrap());
        }
    }
}
