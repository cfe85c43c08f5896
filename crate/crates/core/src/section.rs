//! Planar regions `(v, w) ↦ (η0, β0)` and their rigid transport along a curve.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d_vec, QuadOptions};
use crate::Real;

/// Parametrization map of a user-defined region.
pub type SectionFn<T> = Arc<dyn Fn(T, T) -> (T, T) + Send + Sync>;
/// Point-in-region predicate in `(η0, β0)` coordinates.
pub type MembershipFn<T> = Arc<dyn Fn(T, T) -> bool + Send + Sync>;

/// Polynomial `c0 + c1 u + c2 u² + …` used for the offsets `p(u)`, `q(u)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn eval(&self, u: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * u + c)
    }

    pub fn derivative(&self) -> Self {
        Self { coeffs: self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * T::from_count(k)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == T::zero())
    }
}

/// Twist rate and normal/binormal offsets applied to a planar region.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwistOffset<T> {
    /// Rotation rate in radians per unit arc length.
    pub omega: T,
    pub p: Polynomial<T>,
    pub q: Polynomial<T>,
}

impl<T: Real> TwistOffset<T> {
    pub fn new(omega: T, p: Polynomial<T>, q: Polynomial<T>) -> Self {
        Self { omega, p, q }
    }

    /// Pure twist with no offsets.
    pub fn twist(omega: T) -> Self {
        Self { omega, p: Polynomial::zero(), q: Polynomial::zero() }
    }

    pub fn identity() -> Self {
        Self::twist(T::zero())
    }

    pub fn angle(&self, u: T) -> T {
        self.omega * u
    }

    /// `Rot(ωu)·(η0, β0) + (p(u), q(u))`.
    pub fn apply(&self, u: T, eta0: T, beta0: T) -> (T, T) {
        let (s, c) = self.angle(u).sin_cos();
        (c * eta0 - s * beta0 + self.p.eval(u), s * eta0 + c * beta0 + self.q.eval(u))
    }

    /// Inverse of [`TwistOffset::apply`].
    pub fn untwist(&self, u: T, eta: T, beta: T) -> (T, T) {
        let (s, c) = self.angle(u).sin_cos();
        let de = eta - self.p.eval(u);
        let db = beta - self.q.eval(u);
        (c * de + s * db, -s * de + c * db)
    }
}

/// A user-defined region: map, rectangular parameter domain and membership.
#[derive(Clone)]
pub struct CustomSection<T> {
    pub map: SectionFn<T>,
    pub v_range: (T, T),
    pub w_range: (T, T),
    pub membership: MembershipFn<T>,
}

/// Shape of the fixed planar region.
#[derive(Clone)]
pub enum SectionShape<T> {
    /// `η0 = v r1 cos w`, `β0 = v r2 sin w`, `v ∈ [0,1]`, `w ∈ [−π, π]`.
    Ellipse {
        r1: T,
        r2: T,
    },
    /// `η0 = v`, `β0 = w` on `[−d1/2, d1/2] × [−d2/2, d2/2]`.
    Rectangle {
        d1: T,
        d2: T,
    },
    /// `η0 = v r (2 sin w − sin 2w)`, `β0 = v r (2 cos w − cos 2w) + 2r/3`.
    Cardioid {
        r: T,
    },
    Custom(CustomSection<T>),
}

impl<T: fmt::Debug> fmt::Debug for SectionShape<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionShape::Ellipse { r1, r2 } => f.debug_struct("Ellipse").field("r1", r1).field("r2", r2).finish(),
            SectionShape::Rectangle { d1, d2 } => f.debug_struct("Rectangle").field("d1", d1).field("d2", d2).finish(),
            SectionShape::Cardioid { r } => f.debug_struct("Cardioid").field("r", r).finish(),
            SectionShape::Custom(c) => {
                f.debug_struct("Custom").field("v_range", &c.v_range).field("w_range", &c.w_range).finish()
            }
        }
    }
}

/// Planar region `R0` in normal-plane coordinates, with an optional
/// recentering shift subtracted from the map.
#[derive(Debug, Clone)]
pub struct SectionMap<T> {
    shape: SectionShape<T>,
    shift: (T, T),
    centroid_zero: bool,
}

fn positive<T: Real>(name: &str, x: T) -> Result<T> {
    if x > T::zero() && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

impl<T: Real> SectionMap<T> {
    /// Solid ellipse with semi-axes `r1` (along N̂ at zero twist) and `r2`.
    pub fn ellipse(r1: T, r2: T) -> Result<Self> {
        Ok(Self {
            shape: SectionShape::Ellipse { r1: positive("r1", r1)?, r2: positive("r2", r2)? },
            shift: (T::zero(), T::zero()),
            centroid_zero: true,
        })
    }

    /// Solid rectangle with sides `d1` (along N̂ at zero twist) and `d2`.
    pub fn rectangle(d1: T, d2: T) -> Result<Self> {
        Ok(Self {
            shape: SectionShape::Rectangle { d1: positive("d1", d1)?, d2: positive("d2", d2)? },
            shift: (T::zero(), T::zero()),
            centroid_zero: true,
        })
    }

    /// Solid cardioid built from a circle of radius `r`, shifted so that its
    /// centroid sits at the origin.
    pub fn cardioid(r: T) -> Result<Self> {
        Ok(Self { shape: SectionShape::Cardioid { r: positive("r", r)? }, shift: (T::zero(), T::zero()), centroid_zero: true })
    }

    /// A user-defined region. `centroid_zero` declares that the centroid is at
    /// the origin; the channel verifies the claim.
    pub fn custom(section: CustomSection<T>, centroid_zero: bool) -> Result<Self> {
        if !(section.v_range.0 < section.v_range.1) || !(section.w_range.0 < section.w_range.1) {
            return Err(Error::InvalidParameter("section parameter domain is empty".into()));
        }
        Ok(Self { shape: SectionShape::Custom(section), shift: (T::zero(), T::zero()), centroid_zero })
    }

    pub fn shape(&self) -> &SectionShape<T> {
        &self.shape
    }

    pub fn centroid_zero(&self) -> bool {
        self.centroid_zero
    }

    /// Recentering shift currently subtracted from the map.
    pub fn shift(&self) -> (T, T) {
        self.shift
    }

    pub(crate) fn recentered(mut self, centroid: (T, T)) -> Self {
        self.shift = (self.shift.0 + centroid.0, self.shift.1 + centroid.1);
        self.centroid_zero = true;
        self
    }

    pub fn v_range(&self) -> (T, T) {
        match &self.shape {
            SectionShape::Ellipse { .. } | SectionShape::Cardioid { .. } => (T::zero(), T::one()),
            SectionShape::Rectangle { d1, .. } => {
                let h = *d1 * T::lit(0.5);
                (-h, h)
            }
            SectionShape::Custom(c) => c.v_range,
        }
    }

    pub fn w_range(&self) -> (T, T) {
        match &self.shape {
            SectionShape::Ellipse { .. } | SectionShape::Cardioid { .. } => (-T::PI(), T::PI()),
            SectionShape::Rectangle { d2, .. } => {
                let h = *d2 * T::lit(0.5);
                (-h, h)
            }
            SectionShape::Custom(c) => c.w_range,
        }
    }

    /// `(η0, β0)` at parameters `(v, w)`.
    pub fn map(&self, v: T, w: T) -> (T, T) {
        let (e, b) = match &self.shape {
            SectionShape::Ellipse { r1, r2 } => {
                let (s, c) = w.sin_cos();
                (v * *r1 * c, v * *r2 * s)
            }
            SectionShape::Rectangle { .. } => (v, w),
            SectionShape::Cardioid { r } => {
                let two = T::lit(2.0);
                let (s, c) = w.sin_cos();
                let (s2, c2) = (two * w).sin_cos();
                (v * *r * (two * s - s2), v * *r * (two * c - c2) + two * *r / T::lit(3.0))
            }
            SectionShape::Custom(c) => (c.map)(v, w),
        };
        (e - self.shift.0, b - self.shift.1)
    }

    /// Signed Jacobian `∂η0/∂v ∂β0/∂w − ∂η0/∂w ∂β0/∂v`.
    pub fn jacobian(&self, v: T, w: T) -> T {
        match &self.shape {
            SectionShape::Ellipse { r1, r2 } => *r1 * *r2 * v,
            SectionShape::Rectangle { .. } => T::one(),
            SectionShape::Cardioid { r } => -T::lit(6.0) * v * *r * *r * (T::one() - w.cos()),
            SectionShape::Custom(c) => {
                let step = T::epsilon().powf(T::lit(0.2));
                let hv = step * (c.v_range.1 - c.v_range.0);
                let hw = step * (c.w_range.1 - c.w_range.0);
                let d = |f: &dyn Fn(T) -> (T, T), h: T| {
                    let (a2, b2) = f(T::lit(2.0) * h);
                    let (a1, b1) = f(h);
                    let (a0, b0) = f(-h);
                    let (am, bm) = f(-T::lit(2.0) * h);
                    let k = T::lit(12.0) * h;
                    ((am - T::lit(8.0) * a0 + T::lit(8.0) * a1 - a2) / k, (bm - T::lit(8.0) * b0 + T::lit(8.0) * b1 - b2) / k)
                };
                let (ev, bv) = d(&|h| (c.map)(v + h, w), hv);
                let (ew, bw) = d(&|h| (c.map)(v, w + h), hw);
                ev * bw - ew * bv
            }
        }
    }

    /// Area density `|ω_S0(v, w)|`. The region's orientation is consistent,
    /// so the absolute value only normalizes clockwise parametrizations.
    pub fn area_density(&self, v: T, w: T) -> T {
        self.jacobian(v, w).abs()
    }

    /// Membership test in `(η0, β0)` coordinates (after recentering).
    pub fn contains(&self, eta0: T, beta0: T) -> bool {
        let e = eta0 + self.shift.0;
        let b = beta0 + self.shift.1;
        match &self.shape {
            SectionShape::Ellipse { r1, r2 } => {
                let x = e / *r1;
                let y = b / *r2;
                x * x + y * y <= T::one()
            }
            SectionShape::Rectangle { d1, d2 } => {
                let h = T::lit(0.5);
                e.abs() <= *d1 * h && b.abs() <= *d2 * h
            }
            SectionShape::Cardioid { r } => {
                // polar about the cusp: ρ ≤ 2(1 − cos φ) in units of r
                let x = b / *r - T::lit(5.0 / 3.0);
                let y = e / *r;
                let rho = (x * x + y * y).sqrt();
                rho * rho + T::lit(2.0) * x <= T::lit(2.0) * rho
            }
            SectionShape::Custom(c) => (c.membership)(e, b),
        }
    }

    /// Closed-form area where one exists.
    pub fn analytic_area(&self) -> Option<T> {
        match &self.shape {
            SectionShape::Ellipse { r1, r2 } => Some(T::PI() * *r1 * *r2),
            SectionShape::Rectangle { d1, d2 } => Some(*d1 * *d2),
            SectionShape::Cardioid { r } => Some(T::lit(6.0) * T::PI() * *r * *r),
            SectionShape::Custom(_) => None,
        }
    }

    /// Closed-form `(s1, s2)` at zero twist where one exists.
    pub fn analytic_sizes(&self) -> Option<(T, T)> {
        let sqrt3 = T::lit(3.0).sqrt();
        match &self.shape {
            SectionShape::Ellipse { r1, r2 } => Some((r1.max(*r2), r1.min(*r2))),
            SectionShape::Rectangle { d1, d2 } => Some((d1.max(*d2) / sqrt3, d1.min(*d2) / sqrt3)),
            SectionShape::Cardioid { r } => Some((T::lit(7.0).sqrt() * *r, T::lit(47.0).sqrt() / T::lit(3.0) * *r)),
            SectionShape::Custom(_) => None,
        }
    }

    /// Support function `max over R0 of (η0, β0)·dir`.
    pub fn support(&self, dir: (T, T)) -> T {
        let (dx, dy) = dir;
        let half = T::lit(0.5);
        let raw = match &self.shape {
            SectionShape::Ellipse { r1, r2 } => ((*r1 * dx).powi(2) + (*r2 * dy).powi(2)).sqrt(),
            SectionShape::Rectangle { d1, d2 } => dx.abs() * *d1 * half + dy.abs() * *d2 * half,
            _ => return self.sampled_support(dir),
        };
        raw - (dx * self.shift.0 + dy * self.shift.1)
    }

    /// Boundary sampling of the parameter rectangle's image followed by
    /// golden-section refinement around the best sample.
    fn sampled_support(&self, dir: (T, T)) -> T {
        let (v0, v1) = self.v_range();
        let (w0, w1) = self.w_range();
        let h = |v: T, w: T| {
            let (e, b) = self.map(v, w);
            e * dir.0 + b * dir.1
        };
        let n = 1024usize;
        let mut best = T::neg_infinity();
        let edges: [(bool, T); 4] = [(true, v0), (true, v1), (false, w0), (false, w1)];
        for (along_w, fixed) in edges {
            let (a, b) = if along_w { (w0, w1) } else { (v0, v1) };
            let g = |t: T| if along_w { h(fixed, t) } else { h(t, fixed) };
            let step = (b - a) / T::from_count(n);
            let mut arg = a;
            let mut val = T::neg_infinity();
            for i in 0..=n {
                let t = a + step * T::from_count(i);
                let y = g(t);
                if y > val {
                    val = y;
                    arg = t;
                }
            }
            let mut lo = (arg - step).max(a);
            let mut hi = (arg + step).min(b);
            let ratio = T::lit(0.618_033_988_749_894_8);
            for _ in 0..80 {
                let m1 = hi - ratio * (hi - lo);
                let m2 = lo + ratio * (hi - lo);
                if g(m1) < g(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            val = val.max(g((lo + hi) * T::lit(0.5)));
            best = best.max(val);
        }
        best
    }

    /// Smallest width over sampled directions.
    pub fn min_width(&self) -> T {
        (0..180)
            .map(|k| {
                let a = T::PI() * T::from_count(k) / T::lit(180.0);
                let (s, c) = a.sin_cos();
                self.support((c, s)) + self.support((-c, -s))
            })
            .fold(T::infinity(), T::min)
    }

    /// Quadrature options for integrands built on [`SectionMap::area_density`].
    /// Custom sections differentiate their map numerically, which bounds the
    /// attainable relative accuracy.
    pub fn quad_options(&self, tol: T) -> QuadOptions<T> {
        let floor = match self.shape {
            SectionShape::Custom(_) => T::lit(1e-11).max(T::epsilon() * T::lit(100.0)),
            _ => T::zero(),
        };
        QuadOptions::with_tol(tol.max(floor))
    }

    /// Area and centroid `(A, ⟨η0⟩, ⟨β0⟩)` by adaptive quadrature.
    pub fn area_and_centroid(&self, tol: T) -> Result<(T, T, T)> {
        let [a, e, b] = integrate_2d_vec(
            |v, w| {
                let d = self.area_density(v, w);
                let (e, b) = self.map(v, w);
                [d, d * e, d * b]
            },
            self.v_range(),
            self.w_range(),
            self.quad_options(tol),
        )?;
        Ok((a, e / a, b / a))
    }
}

/// Ellipse, rectangle and cardioid sections sharing the same second-order
/// geometry (average sizes and orientation) for cardioid radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedParameters<T> {
    pub r1: T,
    pub r2: T,
    pub d1: T,
    pub d2: T,
}

pub fn matched_parameters<T: Real>(r: T) -> Result<MatchedParameters<T>> {
    let r = positive("r", r)?;
    let three = T::lit(3.0);
    Ok(MatchedParameters {
        r1: T::lit(7.0).sqrt() * r,
        r2: T::lit(47.0).sqrt() / three * r,
        d1: T::lit(21.0).sqrt() * r,
        d2: (T::lit(47.0) / three).sqrt() * r,
    })
}
