//! Channels swept along a curve: normal-plane coordinates, section averages
//! and geometric moments.

use crate::curve::{CurveSpec, FrameSample};
use crate::error::{Error, Result};
use crate::quadrature::integrate_2d_vec;
use crate::section::{SectionMap, SectionShape, TwistOffset};
use crate::vec3::Vec3;
use crate::Real;

/// Relative tolerance used when characterizing the fixed section once.
const SECTION_TOL: f64 = 1e-13;

/// Centroid offsets below this fraction of the section diameter count as centered.
const CENTROID_TOL: f64 = 1e-8;

/// Curve, section, transport and bulk diffusivity of one channel.
#[derive(Debug, Clone)]
pub struct ChannelSpec<T> {
    curve: CurveSpec<T>,
    section: SectionMap<T>,
    transport: TwistOffset<T>,
    bulk_d: T,
    area: T,
}

/// Area, η/β means, raw η-moments and second central moments at one `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary<T> {
    pub u: T,
    pub area: T,
    pub eta_mean: T,
    pub beta_mean: T,
    /// `⟨η^i⟩` for `i = 0..=max_order`.
    pub eta_moments: Vec<T>,
    pub a: T,
    pub b: T,
    pub c: T,
    pub lambda1: T,
    pub lambda2: T,
    pub s1: T,
    pub s2: T,
    /// Angle in `[0, π)` between N̂ and the major principal direction.
    pub theta: T,
}

/// Closed-form eigen-decomposition of the symmetric matrix `[[a, c], [c, b]]`.
/// Returns `(λ1, λ2, θ)` with `λ1 ≥ λ2` and θ the angle of the λ1
/// eigenvector from the first axis, in `[0, π)`; θ = 0 when `λ1 = λ2`.
pub fn principal_axes<T: Real>(a: T, b: T, c: T) -> (T, T, T) {
    let half = T::lit(0.5);
    let mean = (a + b) * half;
    let diff = (a - b) * half;
    let disc = (diff * diff + c * c).sqrt();
    let l1 = mean + disc;
    let l2 = (mean - disc).max(T::zero());
    let scale = mean.abs().max(T::min_positive_value());
    if disc <= T::lit(1e-12) * scale {
        return (l1, l2, T::zero());
    }
    let mut theta = half * (c + c).atan2(a - b);
    if theta < T::zero() {
        theta = theta + T::PI();
    }
    if theta >= T::PI() {
        theta = theta - T::PI();
    }
    (l1, l2, theta)
}

impl<T: Real> ChannelSpec<T> {
    /// Builds a channel. The section must be centered (declared and verified);
    /// use [`ChannelSpec::new_auto_center`] to recenter instead.
    pub fn new(curve: CurveSpec<T>, section: SectionMap<T>, transport: TwistOffset<T>, bulk_d: T) -> Result<Self> {
        Self::build(curve, section, transport, bulk_d, false)
    }

    /// Like [`ChannelSpec::new`] but subtracts the computed centroid.
    pub fn new_auto_center(curve: CurveSpec<T>, section: SectionMap<T>, transport: TwistOffset<T>, bulk_d: T) -> Result<Self> {
        Self::build(curve, section, transport, bulk_d, true)
    }

    fn build(
        curve: CurveSpec<T>,
        section: SectionMap<T>,
        transport: TwistOffset<T>,
        bulk_d: T,
        auto_center: bool,
    ) -> Result<Self> {
        if !(bulk_d > T::zero()) || !bulk_d.is_finite() {
            return Err(Error::InvalidParameter(format!("bulk diffusion coefficient must be positive, got {bulk_d}")));
        }
        if !curve.is_arclength() {
            return Err(Error::InvalidParameter("channel curve must be arc-length parametrized".into()));
        }
        let (area, e0, b0) = section.area_and_centroid(T::lit(SECTION_TOL))?;
        let diameter = section.support((T::one(), T::zero())) + section.support((-T::one(), T::zero()));
        let off = (e0 * e0 + b0 * b0).sqrt();
        let centered = off <= T::lit(CENTROID_TOL) * diameter;
        let section = if auto_center {
            if centered {
                section
            } else {
                section.recentered((e0, b0))
            }
        } else if !section.centroid_zero() || !centered {
            return Err(Error::NonCenteredSection { eta0: e0.as_f64(), beta0: b0.as_f64() });
        } else {
            section
        };
        Ok(Self { curve, section, transport, bulk_d, area })
    }

    pub fn curve(&self) -> &CurveSpec<T> {
        &self.curve
    }

    pub fn section(&self) -> &SectionMap<T> {
        &self.section
    }

    pub fn transport(&self) -> &TwistOffset<T> {
        &self.transport
    }

    pub fn bulk_d(&self) -> T {
        self.bulk_d
    }

    /// Copy of this channel with a different bulk diffusivity.
    pub fn with_bulk_d(&self, bulk_d: T) -> Result<Self> {
        if !(bulk_d > T::zero()) {
            return Err(Error::InvalidParameter("bulk diffusion coefficient must be positive".into()));
        }
        Ok(Self { bulk_d, ..self.clone() })
    }

    /// Copy with a different transport (twist and offsets).
    pub fn with_transport(&self, transport: TwistOffset<T>) -> Self {
        Self { transport, ..self.clone() }
    }

    /// Cross-section area; rigid transport leaves it independent of `u`.
    pub fn area(&self) -> T {
        self.area
    }

    pub fn domain(&self) -> (T, T) {
        self.curve.domain()
    }

    pub fn frame(&self, u: T) -> Result<FrameSample<T>> {
        self.curve.frame_at(u)
    }

    pub fn kappa(&self, u: T) -> Result<T> {
        Ok(self.frame(u)?.kappa)
    }

    /// Normal-plane coordinates `(η, β)` of parameter point `(v, w)` at `u`.
    pub fn eta_beta(&self, u: T, v: T, w: T) -> (T, T) {
        let (e0, b0) = self.section.map(v, w);
        self.transport.apply(u, e0, b0)
    }

    /// Area density `ω_S(u, v, w)`; rigid transport does not change it.
    pub fn area_density(&self, _u: T, v: T, w: T) -> T {
        self.section.area_density(v, w)
    }

    /// Point `φ(u, v, w)` in 3-space.
    pub fn point(&self, u: T, v: T, w: T) -> Result<Vec3<T>> {
        let f = self.frame(u)?;
        let (e, b) = self.eta_beta(u, v, w);
        Ok(f.point(e, b))
    }

    /// Largest and smallest η over the section at `u`.
    pub fn eta_extent(&self, u: T) -> (T, T) {
        let (s, c) = self.transport.angle(u).sin_cos();
        let p = self.transport.p.eval(u);
        let hi = self.section.support((c, -s));
        let lo = self.section.support((-c, s));
        (p - lo, p + hi)
    }

    /// `sup κη` over the section at `u`, with the frame's curvature.
    pub fn max_kappa_eta(&self, u: T) -> Result<T> {
        let k = self.kappa(u)?;
        let (lo, hi) = self.eta_extent(u);
        Ok((k * hi).max(k * lo))
    }

    /// Checks `sup κη < 1 − margin` at `u`.
    pub fn check_narrow(&self, u: T, margin: T) -> Result<T> {
        let m = self.max_kappa_eta(u)?;
        if !(m < T::one() - margin) {
            return Err(Error::FocalContact { u: u.as_f64(), max_kappa_eta: m.as_f64() });
        }
        Ok(m)
    }

    /// Narrowness on `n` evenly spaced points of the domain.
    pub fn validate(&self, n: usize) -> Result<()> {
        let (u0, u1) = self.domain();
        let n = n.max(2);
        for i in 0..n {
            let u = u0 + (u1 - u0) * T::from_count(i) / T::from_count(n - 1);
            self.check_narrow(u, T::zero())?;
        }
        Ok(())
    }

    /// `A(u) = ∬ ω_S dv dw` by adaptive quadrature.
    pub fn section_area(&self, u: T, tol: T) -> Result<T> {
        let [a] = integrate_2d_vec(
            |v, w| [self.area_density(u, v, w)],
            self.section.v_range(),
            self.section.w_range(),
            self.section.quad_options(tol),
        )?;
        Ok(a)
    }

    /// `⟨f⟩_u = (1/A) ∬ f ω_S dv dw`.
    pub fn section_average<F>(&self, u: T, f: F, tol: T) -> Result<T>
    where
        F: Fn(T, T) -> T,
    {
        let [a, i] = integrate_2d_vec(
            |v, w| {
                let d = self.area_density(u, v, w);
                [d, d * f(v, w)]
            },
            self.section.v_range(),
            self.section.w_range(),
            self.section.quad_options(tol),
        )?;
        Ok(i / a)
    }

    /// Geometric moments of the section at `u`.
    pub fn moments(&self, u: T, max_order: usize, tol: T) -> Result<MomentSummary<T>> {
        if max_order < 2 {
            return Err(Error::InvalidParameter("moments need max_order >= 2".into()));
        }
        let opts = self.section.quad_options(tol);
        let vr = self.section.v_range();
        let wr = self.section.w_range();
        // first pass: area, means and raw η powers, in chunks of fixed width
        const CHUNK: usize = 4;
        let [area, e_sum, b_sum] = integrate_2d_vec(
            |v, w| {
                let d = self.area_density(u, v, w);
                let (e, b) = self.eta_beta(u, v, w);
                [d, d * e, d * b]
            },
            vr,
            wr,
            opts,
        )?;
        let eta_mean = e_sum / area;
        let beta_mean = b_sum / area;
        let mut eta_moments = vec![T::one(), eta_mean];
        let mut k = 2;
        while k <= max_order {
            let base = k;
            let chunk: [T; CHUNK] = integrate_2d_vec(
                |v, w| {
                    let d = self.area_density(u, v, w);
                    let (e, _) = self.eta_beta(u, v, w);
                    let mut out = [T::zero(); CHUNK];
                    let mut pw = e.powi(base as i32);
                    for o in out.iter_mut() {
                        *o = d * pw;
                        pw = pw * e;
                    }
                    out
                },
                vr,
                wr,
                opts,
            )?;
            for (j, val) in chunk.iter().enumerate() {
                if base + j <= max_order {
                    eta_moments.push(*val / area);
                }
            }
            k += CHUNK;
        }
        // second pass: central second moments
        let [ma, mb, mc] = integrate_2d_vec(
            |v, w| {
                let d = self.area_density(u, v, w);
                let (e, b) = self.eta_beta(u, v, w);
                let (de, db) = (e - eta_mean, b - beta_mean);
                [d * de * de, d * db * db, d * de * db]
            },
            vr,
            wr,
            opts,
        )?;
        let (a, b, c) = (ma / area, mb / area, mc / area);
        let (lambda1, lambda2, theta) = principal_axes(a, b, c);
        let two = T::lit(2.0);
        Ok(MomentSummary {
            u,
            area,
            eta_mean,
            beta_mean,
            eta_moments,
            a,
            b,
            c,
            lambda1,
            lambda2,
            s1: two * lambda1.sqrt(),
            s2: two * lambda2.sqrt(),
            theta,
        })
    }

    /// Section shape parameters for the ellipse closed form, if applicable.
    pub(crate) fn ellipse_radii(&self) -> Option<(T, T)> {
        match self.section.shape() {
            SectionShape::Ellipse { r1, r2 } if self.section.shift() == (T::zero(), T::zero()) => Some((*r1, *r2)),
            _ => None,
        }
    }

    pub(crate) fn rectangle_sides(&self) -> Option<(T, T)> {
        match self.section.shape() {
            SectionShape::Rectangle { d1, d2 } if self.section.shift() == (T::zero(), T::zero()) => Some((*d1, *d2)),
            _ => None,
        }
    }
}
