//! Arc-length space curves and their Frenet-Serret frames.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, GaussLegendre, QuadOptions};
use crate::vec3::Vec3;
use crate::Real;

/// Curvature below which a curve is treated as straight (1/length units).
pub const STRAIGHT_KAPPA: f64 = 1e-10;

/// Speed below which a parametrization is rejected as degenerate.
const DEGENERATE_SPEED: f64 = 1e-12;

/// Point map `s ↦ α(s)` of a user-supplied curve.
pub type CurveMap<T> = Arc<dyn Fn(T) -> Vec3<T> + Send + Sync>;

/// Geometry behind a [`CurveSpec`].
#[derive(Clone)]
pub enum CurveKind<T> {
    /// `u ↦ origin + u·direction` with a unit direction.
    Line { origin: Vec3<T>, direction: Vec3<T> },
    /// Circle of the given radius in the xy-plane centered at the origin.
    Circle { radius: T },
    /// Helix of radius `a` and pitch `b` about the z-axis.
    Helix { a: T, b: T },
    /// Arbitrary C² map; `table` is present once reparametrized by arc length.
    Custom { map: CurveMap<T>, table: Option<Arc<ArcLengthTable<T>>> },
}

impl<T: fmt::Debug> fmt::Debug for CurveKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveKind::Line { origin, direction } => {
                f.debug_struct("Line").field("origin", origin).field("direction", direction).finish()
            }
            CurveKind::Circle { radius } => f.debug_struct("Circle").field("radius", radius).finish(),
            CurveKind::Helix { a, b } => f.debug_struct("Helix").field("a", a).field("b", b).finish(),
            CurveKind::Custom { table, .. } => f.debug_struct("Custom").field("arclength_table", &table.is_some()).finish(),
        }
    }
}

/// A space curve on a parameter interval `[s1, s2]`.
#[derive(Debug, Clone)]
pub struct CurveSpec<T> {
    kind: CurveKind<T>,
    domain: (T, T),
    is_arclength: bool,
    fallback_normal: Option<Vec3<T>>,
}

/// Frenet-Serret frame with curvature and torsion at arc length `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample<T> {
    pub u: T,
    pub position: Vec3<T>,
    pub tangent: Vec3<T>,
    pub normal: Vec3<T>,
    pub binormal: Vec3<T>,
    pub kappa: T,
    pub tau: T,
}

impl<T: Real> FrameSample<T> {
    /// Maps normal-plane coordinates to 3-space: `α(u) + η N̂ + β B̂`.
    pub fn point(&self, eta: T, beta: T) -> Vec3<T> {
        self.position + self.normal * eta + self.binormal * beta
    }
}

/// Cumulative length table used to invert `s ↦ length(α[s1, s])`.
#[derive(Debug, Clone)]
pub struct ArcLengthTable<T> {
    s: Vec<T>,
    len: Vec<T>,
    speed: Vec<T>,
}

fn speed_rule<T: Real>() -> GaussLegendre<T> {
    GaussLegendre::new(16)
}

impl<T: Real> CurveSpec<T> {
    /// Straight line along +x through the origin. `fallback_normal` supplies
    /// N̂ since the Frenet normal is undefined on a line.
    pub fn line(fallback_normal: Option<Vec3<T>>) -> Self {
        Self {
            kind: CurveKind::Line { origin: Vec3::zero(), direction: Vec3::new(T::one(), T::zero(), T::zero()) },
            domain: (T::zero(), T::one()),
            is_arclength: true,
            fallback_normal,
        }
    }

    /// Circle of radius `radius` in the xy-plane, one full turn.
    pub fn circle(radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Self {
            kind: CurveKind::Circle { radius },
            domain: (T::zero(), T::TAU() * radius),
            is_arclength: true,
            fallback_normal: None,
        })
    }

    /// Helix `(a cos t, a sin t, b t)` reparametrized by arc length
    /// `u = t·√(a² + b²)`, one full turn.
    pub fn helix(a: T, b: T) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("helix radius must be positive, got {a}")));
        }
        if !(b >= T::zero()) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("helix pitch must be non-negative, got {b}")));
        }
        let c = (a * a + b * b).sqrt();
        Ok(Self { kind: CurveKind::Helix { a, b }, domain: (T::zero(), T::TAU() * c), is_arclength: true, fallback_normal: None })
    }

    /// A user-supplied map on `[s1, s2]`. Set `is_arclength` only if `|α'| ≡ 1`.
    pub fn custom<F>(map: F, s1: T, s2: T, is_arclength: bool) -> Result<Self>
    where
        F: Fn(T) -> Vec3<T> + Send + Sync + 'static,
    {
        if !(s1 < s2) {
            return Err(Error::InvalidParameter(format!("curve domain [{s1}, {s2}] is empty")));
        }
        Ok(Self {
            kind: CurveKind::Custom { map: Arc::new(map), table: None },
            domain: (s1, s2),
            is_arclength,
            fallback_normal: None,
        })
    }

    /// Restricts or extends the parameter interval.
    pub fn with_domain(mut self, s1: T, s2: T) -> Result<Self> {
        if !(s1 < s2) {
            return Err(Error::InvalidParameter(format!("curve domain [{s1}, {s2}] is empty")));
        }
        if let CurveKind::Custom { table: Some(_), .. } = self.kind {
            return Err(Error::InvalidParameter("cannot change the domain of a reparametrized curve".into()));
        }
        self.domain = (s1, s2);
        Ok(self)
    }

    /// Sets the normal used wherever the curvature vanishes. It is
    /// orthogonalized against the tangent on use.
    pub fn with_fallback_normal(mut self, n: Vec3<T>) -> Result<Self> {
        let n = n.normalized().ok_or_else(|| Error::InvalidParameter("fallback normal must be non-zero".into()))?;
        self.fallback_normal = Some(n);
        Ok(self)
    }

    pub fn kind(&self) -> &CurveKind<T> {
        &self.kind
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    pub fn is_arclength(&self) -> bool {
        self.is_arclength
    }

    pub fn fallback_normal(&self) -> Option<Vec3<T>> {
        self.fallback_normal
    }

    /// Closed-form curves remain valid outside their nominal domain.
    pub fn is_analytic(&self) -> bool {
        !matches!(self.kind, CurveKind::Custom { .. })
    }

    /// Domain length; for arc-length curves this is the curve length.
    pub fn span(&self) -> T {
        self.domain.1 - self.domain.0
    }

    fn fd_step(&self) -> T {
        T::lit(1e-3) * self.span().min(T::one())
    }

    /// Position `α(s)` in the curve's own parameter.
    pub fn position(&self, s: T) -> Vec3<T> {
        match &self.kind {
            CurveKind::Line { origin, direction } => *origin + *direction * s,
            CurveKind::Circle { radius } => {
                let t = s / *radius;
                Vec3::new(*radius * t.cos(), *radius * t.sin(), T::zero())
            }
            CurveKind::Helix { a, b } => {
                let c = (*a * *a + *b * *b).sqrt();
                let t = s / c;
                Vec3::new(*a * t.cos(), *a * t.sin(), *b * t)
            }
            CurveKind::Custom { map, table: None } => map(s),
            CurveKind::Custom { map, table: Some(table) } => map(table.parameter_at(map.as_ref(), s, self.fd_step())),
        }
    }

    /// Derivative of the raw custom map by a 5-point central stencil.
    fn raw_velocity(map: &(dyn Fn(T) -> Vec3<T> + Send + Sync), s: T, h: T) -> Vec3<T> {
        let two = T::lit(2.0);
        let eight = T::lit(8.0);
        let twelve_h = T::lit(12.0) * h;
        (map(s - two * h) - map(s - h) * eight + map(s + h) * eight - map(s + two * h)) * twelve_h.recip()
    }

    /// Returns an arc-length reparametrization of this curve. Total length
    /// is preserved to within `tol` (relative).
    pub fn reparametrize_arclength(&self, tol: T) -> Result<Self> {
        if !(tol > T::zero()) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.is_arclength {
            return Ok(self.clone());
        }
        let CurveKind::Custom { map, .. } = &self.kind else {
            return Ok(self.clone());
        };
        let (s1, s2) = self.domain;
        let h = self.fd_step();
        let speed = |s: T| Self::raw_velocity(map.as_ref(), s, h).norm();
        let n_seg = 256usize;
        let ds = (s2 - s1) / T::from_count(n_seg);
        let mut s_nodes = Vec::with_capacity(n_seg + 1);
        let mut len = Vec::with_capacity(n_seg + 1);
        let mut speeds = Vec::with_capacity(n_seg + 1);
        let mut acc = T::zero();
        let opts = QuadOptions { tol, order: 10, max_panels: 10_000 };
        for i in 0..=n_seg {
            let s = if i == n_seg { s2 } else { s1 + ds * T::from_count(i) };
            let v = speed(s);
            if !(v.as_f64() >= DEGENERATE_SPEED) {
                return Err(Error::DegenerateCurve { s: s.as_f64(), speed: v.as_f64() });
            }
            if i > 0 {
                let prev = s_nodes[i - 1];
                acc = acc + integrate_1d(speed, prev, s, opts)?;
            }
            s_nodes.push(s);
            len.push(acc);
            speeds.push(v);
        }
        // interior degeneracy between nodes
        let probe = GaussLegendre::<T>::new(8);
        for w in s_nodes.windows(2) {
            let half = (w[1] - w[0]) * T::lit(0.5);
            for &x in probe.nodes() {
                let s = w[0] + half * (x + T::one());
                let v = speed(s);
                if !(v.as_f64() >= DEGENERATE_SPEED) {
                    return Err(Error::DegenerateCurve { s: s.as_f64(), speed: v.as_f64() });
                }
            }
        }
        let table = ArcLengthTable { s: s_nodes, len, speed: speeds };
        Ok(Self {
            kind: CurveKind::Custom { map: map.clone(), table: Some(Arc::new(table)) },
            domain: (T::zero(), acc),
            is_arclength: true,
            fallback_normal: self.fallback_normal,
        })
    }

    /// Frenet-Serret frame at arc length `u`.
    pub fn frame_at(&self, u: T) -> Result<FrameSample<T>> {
        if !self.is_arclength {
            return Err(Error::InvalidParameter("frame_at requires an arc-length curve; reparametrize first".into()));
        }
        match &self.kind {
            CurveKind::Line { origin, direction } => {
                let position = *origin + *direction * u;
                self.straight_frame(u, position, *direction)
            }
            CurveKind::Circle { radius } => Ok(helix_frame(*radius, T::zero(), u)),
            CurveKind::Helix { a, b } => Ok(helix_frame(*a, *b, u)),
            CurveKind::Custom { .. } => self.numeric_frame(u),
        }
    }

    fn straight_frame(&self, u: T, position: Vec3<T>, tangent: Vec3<T>) -> Result<FrameSample<T>> {
        let fallback = self.fallback_normal.ok_or(Error::UndefinedNormal { u: u.as_f64() })?;
        let normal = (fallback - tangent * fallback.dot(tangent))
            .normalized()
            .ok_or_else(|| Error::InvalidParameter("fallback normal is parallel to the tangent".into()))?;
        let binormal = tangent.cross(normal);
        Ok(FrameSample { u, position, tangent, normal, binormal, kappa: T::zero(), tau: T::zero() })
    }

    fn numeric_frame(&self, u: T) -> Result<FrameSample<T>> {
        let h = self.fd_step() * T::lit(2.0);
        let p = |k: i32| self.position(u + h * T::lit(k as f64));
        let (m3, m2, m1, p0, p1, p2, p3) = (p(-3), p(-2), p(-1), p(0), p(1), p(2), p(3));
        let twelve = T::lit(12.0);
        let eight = T::lit(8.0);
        let d1 = (m2 - m1 * eight + p1 * eight - p2) * (twelve * h).recip();
        let d2 = ((-m2) + m1 * T::lit(16.0) - p0 * T::lit(30.0) + p1 * T::lit(16.0) - p2) * (twelve * h * h).recip();
        let d3 = (m3 - m2 * eight + m1 * T::lit(13.0) - p1 * T::lit(13.0) + p2 * eight - p3) * (T::lit(8.0) * h * h * h).recip();
        let speed = d1.norm();
        if !(speed.as_f64() >= DEGENERATE_SPEED) {
            return Err(Error::DegenerateCurve { s: u.as_f64(), speed: speed.as_f64() });
        }
        let tangent = d1 * speed.recip();
        let cross = d1.cross(d2);
        let kappa = cross.norm() / (speed * speed * speed);
        if kappa.as_f64() < STRAIGHT_KAPPA {
            return self.straight_frame(u, p0, tangent);
        }
        let normal = (d2 - tangent * d2.dot(tangent)).normalized().ok_or(Error::UndefinedNormal { u: u.as_f64() })?;
        let binormal = tangent.cross(normal);
        let tau = cross.dot(d3) / cross.dot(cross);
        Ok(FrameSample { u, position: p0, tangent, normal, binormal, kappa, tau })
    }
}

fn helix_frame<T: Real>(a: T, b: T, u: T) -> FrameSample<T> {
    let c2 = a * a + b * b;
    let c = c2.sqrt();
    let t = u / c;
    let (st, ct) = t.sin_cos();
    let position = Vec3::new(a * ct, a * st, b * t);
    let tangent = Vec3::new(-a * st / c, a * ct / c, b / c);
    let normal = Vec3::new(-ct, -st, T::zero());
    let binormal = Vec3::new(b * st / c, -b * ct / c, a / c);
    FrameSample { u, position, tangent, normal, binormal, kappa: a / c2, tau: b / c2 }
}

impl<T: Real> ArcLengthTable<T> {
    /// Raw parameter `s` at arc length `u`: monotone cubic Hermite guess
    /// followed by Newton polishing on the exact segment length.
    fn parameter_at(&self, map: &(dyn Fn(T) -> Vec3<T> + Send + Sync), u: T, h: T) -> T {
        let n = self.s.len();
        let i = match self.len.binary_search_by(|l| l.partial_cmp(&u).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => return self.s[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let (l0, l1) = (self.len[i], self.len[i + 1]);
        let (s0, s1) = (self.s[i], self.s[i + 1]);
        let dl = l1 - l0;
        let t = (u - l0) / dl;
        // slopes ds/du at the nodes, Fritsch-Carlson limited against the secant
        let secant = (s1 - s0) / dl;
        let lim = T::lit(3.0) * secant;
        let m0 = self.speed[i].recip().min(lim);
        let m1 = self.speed[i + 1].recip().min(lim);
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = -two * t3 + three * t2;
        let h11 = t3 - t2;
        let mut s = h00 * s0 + h10 * dl * m0 + h01 * s1 + h11 * dl * m1;
        let rule = speed_rule::<T>();
        let speed = |x: T| CurveSpec::raw_velocity(map, x, h).norm();
        for _ in 0..4 {
            let g = l0 + rule.integrate(speed, s0, s) - u;
            let step = g / speed(s);
            s = s - step;
            if step.abs() <= T::epsilon() * (T::one() + s.abs()) {
                break;
            }
        }
        s
    }
}

/// Distance from normal-plane coordinate `eta` to the focal line,
/// `(1 − κη)/κ`. Positive on the near side.
pub fn focal_distance<T: Real>(frame: &FrameSample<T>, eta: T) -> Result<T> {
    if !(frame.kappa > T::zero()) {
        return Err(Error::InfiniteFocalDistance);
    }
    Ok((T::one() - frame.kappa * eta) / frame.kappa)
}
