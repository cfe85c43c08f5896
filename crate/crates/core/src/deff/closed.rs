//! Closed forms for twisted elliptical and rectangular channels, with the
//! mixed antiderivatives `H(v, w)` behind them.

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::Real;

/// `ln(1 − x·y) / y`, continuous through `y = 0`.
fn log1m_over<T: Real>(x: T, y: T) -> T {
    if y.abs() < T::lit(1e-8) {
        -x - x * x * y * T::lit(0.5)
    } else {
        (-(x * y)).ln_1p() / y
    }
}

/// Continuous branch of `arctan(m·tan(x))`, equal to `x` at `m = 1`.
fn unwrapped_atan_tan<T: Real>(m: T, x: T) -> T {
    let n = (x / T::PI()).round();
    let r = x - n * T::PI();
    n * T::PI() + (m * r.tan()).atan()
}

/// Terms of the elliptical-section integrand at one `u`.
///
/// With `θ = w + φ` the normal coordinate is `η = p + v R cos θ`, so
/// `Ω = r1 r2 v / (c − k v cos θ)` with `c = 1 − κp` and `k = κR`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseTerms<T> {
    pub r1: T,
    pub r2: T,
    pub kappa: T,
    /// `p(u)`
    pub p: T,
    /// `R(u) = √(r1² cos² ωu + r2² sin² ωu)`
    pub r: T,
    /// Phase `φ` of `r1 cos ωu cos w − r2 sin ωu sin w = R cos(w + φ)`.
    pub phi: T,
    /// `1 − κ p`
    pub c: T,
    /// `κ R`
    pub k: T,
}

impl<T: Real> EllipseTerms<T> {
    pub fn new(r1: T, r2: T, kappa: T, p: T, twist_angle: T) -> Self {
        let (s, co) = twist_angle.sin_cos();
        let x = r1 * co;
        let y = r2 * s;
        let r = x.hypot(y);
        Self { r1, r2, kappa, p, r, phi: y.atan2(x), c: T::one() - kappa * p, k: kappa * r }
    }

    /// Integrand `Ω(v, w) = ω_S / (1 − κη)`.
    pub fn omega(&self, v: T, w: T) -> T {
        self.r1 * self.r2 * v / (self.c - self.k * v * (w + self.phi).cos())
    }

    /// `Q(v) = √(c² − k² v²)`.
    pub fn q(&self, v: T) -> T {
        (self.c * self.c - self.k * self.k * v * v).sqrt()
    }

    /// `T(v, w) = √((c + kv)/(c − kv))·tan(θ/2)`.
    pub fn t(&self, v: T, w: T) -> T {
        let m = ((self.c + self.k * v) / (self.c - self.k * v)).sqrt();
        m * ((w + self.phi) * T::lit(0.5)).tan()
    }

    /// `S(w) = sin θ`.
    pub fn s(&self, w: T) -> T {
        (w + self.phi).sin()
    }

    /// Mixed antiderivative with `∂²H/∂v∂w = Ω`, continuous in `w`:
    ///
    /// `H = −(r1 r2 / k²)·[2 Q(v)·atan(T(v, w)) + c·sin θ·ln(1 − (kv/c) cos θ)/cos θ]`
    ///
    /// where the arctangent follows the branch that is continuous in `w`.
    /// At `w = ±π` this yields the one-sided limits from inside the domain.
    /// Requires `k > 0`.
    pub fn h(&self, v: T, w: T) -> T {
        let theta = w + self.phi;
        let m = ((self.c + self.k * v) / (self.c - self.k * v)).sqrt();
        let arc = unwrapped_atan_tan(m, theta * T::lit(0.5));
        let k2 = self.k * self.k;
        let log_term = theta.sin() * log1m_over(self.k * v / self.c, theta.cos());
        -(self.r1 * self.r2 / k2) * (T::lit(2.0) * self.q(v) * arc + self.c * log_term)
    }

    /// `Σ (−1)^{i+j} H(v_i, w_j)` over the corners of `[0,1] × [−π, π]`.
    pub fn corner_sum(&self) -> T {
        let pi = T::PI();
        self.h(T::zero(), -pi) - self.h(T::zero(), pi) - self.h(T::one(), -pi) + self.h(T::one(), pi)
    }

    /// `𝒟/D` assembled from the antiderivative corner sum.
    pub fn ratio_from_antiderivative(&self) -> T {
        self.corner_sum() / (T::PI() * self.r1 * self.r2 * self.c)
    }

    /// `𝒟/D = (2/k²)(1 − √(c² − k²)/c)`, evaluated in the rationalized form
    /// `2 / (c (c + √(c² − k²)))`, which has no cancellation as `k → 0`.
    pub fn ratio(&self) -> T {
        let root = (self.c * self.c - self.k * self.k).sqrt();
        T::lit(2.0) / (self.c * (self.c + root))
    }
}

/// Terms of the rectangular-section integrand at one `u`.
///
/// `γ_i = 1 − κ(p − (cos ωu, sin ωu)·z_i)` with `z_i` the half-diagonal
/// corner vectors `(d1, d2)/2`, `(d1, −d2)/2`, `(−d1, −d2)/2`, `(−d1, d2)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleTerms<T> {
    pub d1: T,
    pub d2: T,
    pub kappa: T,
    pub p: T,
    pub cos: T,
    pub sin: T,
    pub c: T,
    pub corners: [(T, T); 4],
    pub gamma: [T; 4],
}

impl<T: Real> RectangleTerms<T> {
    pub fn new(d1: T, d2: T, kappa: T, p: T, twist_angle: T) -> Self {
        let (sin, cos) = twist_angle.sin_cos();
        let h = T::lit(0.5);
        let corners = [(d1 * h, d2 * h), (d1 * h, -d2 * h), (-d1 * h, -d2 * h), (-d1 * h, d2 * h)];
        let gamma = corners.map(|(x, y)| T::one() - kappa * (p - (cos * x + sin * y)));
        Self { d1, d2, kappa, p, cos, sin, c: T::one() - kappa * p, corners, gamma }
    }

    /// `g(v, w) = 1 − κη` at section coordinates `(v, w)`.
    pub fn g(&self, v: T, w: T) -> T {
        self.c - self.kappa * (self.cos * v - self.sin * w)
    }

    /// Integrand `Ω = 1/(1 − κη)`.
    pub fn omega(&self, v: T, w: T) -> T {
        self.g(v, w).recip()
    }

    /// Mixed antiderivative `H = −g ln g / (κ² cos ωu sin ωu)`; singular when
    /// the twist angle is a multiple of π/2.
    pub fn h(&self, v: T, w: T) -> T {
        let g = self.g(v, w);
        -g * g.ln() / (self.kappa * self.kappa * self.cos * self.sin)
    }

    /// `Σ (−1)^{i+1} γ_i ln γ_i`.
    pub fn alternating_sum(&self) -> T {
        let f = |g: T| g * g.ln();
        f(self.gamma[0]) - f(self.gamma[1]) + f(self.gamma[2]) - f(self.gamma[3])
    }

    /// `𝒟/D` by the four-corner formula with prefactor `1/(d1 d2 κ² (1 − κp) cos sin)`.
    /// Loses accuracy near `sin ωu cos ωu = 0`; see [`RectangleTerms::ratio`].
    pub fn ratio_corner_formula(&self) -> T {
        self.alternating_sum() / (self.d1 * self.d2 * self.kappa * self.kappa * self.c * self.cos * self.sin)
    }

    /// Half-extents of `κ·(η − p)` along the two rectangle axes.
    fn half_extents(&self) -> (T, T) {
        let h = T::lit(0.5);
        ((self.kappa * self.cos * self.d1 * h).abs(), (self.kappa * self.sin * self.d2 * h).abs())
    }

    pub fn min_gamma(&self) -> T {
        self.gamma.iter().copied().fold(T::infinity(), T::min)
    }

    /// `𝒟/D` evaluated stably for every twist angle.
    pub fn ratio(&self) -> T {
        let (a, b) = self.half_extents();
        box_average_inverse(self.c, a, b) / self.c
    }
}

/// Average of `1/(c + x + y)` over `|x| ≤ a`, `|y| ≤ b`, for `c > a + b`.
///
/// Uses the four-corner `z ln z` form when both extents are appreciable and
/// exact series where one or both extents are small relative to the gap.
pub fn box_average_inverse<T: Real>(c: T, a: T, b: T) -> T {
    let (a, b) = if a.abs() >= b.abs() { (a.abs(), b.abs()) } else { (b.abs(), a.abs()) };
    let small = T::lit(1e-3);
    let eps = T::epsilon();
    if a <= small * c {
        // both small: expand 1/(c + s) in s = x + y
        let mut sum = T::zero();
        for m in (0..=40).step_by(2) {
            let mut moment = T::zero();
            for j in (0..=m).step_by(2) {
                let binom = binomial::<T>(m, j);
                moment =
                    moment + binom * a.powi(j as i32) / T::from_count(j + 1) * b.powi((m - j) as i32) / T::from_count(m - j + 1);
            }
            let term = moment / c.powi(m as i32);
            sum = sum + term;
            if term <= eps * sum {
                break;
            }
        }
        return sum / c;
    }
    if b <= small * (c - a) {
        // series in b with exact x-averages of (c + x)^{-n}
        let m1 = (a / c).atanh() / a;
        let mut sum = m1;
        let lo = c - a;
        let hi = c + a;
        for k in 1..60 {
            let n = 2 * k + 1;
            let mn = (lo.powi(1 - n as i32) - hi.powi(1 - n as i32)) / (T::lit(2.0) * a * T::from_count(n - 1));
            let term = b.powi(2 * k as i32) / T::from_count(n) * mn;
            sum = sum + term;
            if term <= eps * sum {
                break;
            }
        }
        return sum;
    }
    // f(z) = z ln(z/c): its linear part cancels in the mixed difference
    let f = |z: T| z * ((z - c) / c).ln_1p();
    (f(c + a + b) - f(c + a - b) - f(c - a + b) + f(c - a - b)) / (T::lit(4.0) * a * b)
}

fn binomial<T: Real>(n: usize, k: usize) -> T {
    let mut r = T::one();
    for i in 0..k {
        r = r * T::from_count(n - i) / T::from_count(i + 1);
    }
    r
}

fn ellipse_terms<T: Real>(channel: &ChannelSpec<T>, u: T) -> Result<Option<EllipseTerms<T>>> {
    let (r1, r2) = channel.ellipse_radii().ok_or(Error::UnsupportedSection { expected: "centered elliptical" })?;
    let kappa = channel.kappa(u)?;
    if kappa == T::zero() {
        return Ok(None);
    }
    let tr = channel.transport();
    Ok(Some(EllipseTerms::new(r1, r2, kappa, tr.p.eval(u), tr.angle(u))))
}

/// Elliptical closed form for `𝒟(u)`.
pub fn deff_ellipse_closed<T: Real>(channel: &ChannelSpec<T>, u: T) -> Result<T> {
    let Some(t) = ellipse_terms(channel, u)? else {
        return Ok(channel.bulk_d());
    };
    if !(t.c > t.k) {
        return Err(Error::FocalContact { u: u.as_f64(), max_kappa_eta: (T::one() - t.c + t.k).as_f64() });
    }
    Ok(channel.bulk_d() * t.ratio())
}

/// Antiderivative terms of the elliptical channel at `u` (`None` when κ = 0).
pub fn ellipse_closed_terms<T: Real>(channel: &ChannelSpec<T>, u: T) -> Result<Option<EllipseTerms<T>>> {
    ellipse_terms(channel, u)
}

/// Rectangular closed form for `𝒟(u)`.
pub fn deff_rectangle_closed<T: Real>(channel: &ChannelSpec<T>, u: T) -> Result<T> {
    let Some(t) = rectangle_closed_terms(channel, u)? else {
        return Ok(channel.bulk_d());
    };
    let min_gamma = t.min_gamma();
    if !(min_gamma > T::zero()) {
        return Err(Error::FocalContact { u: u.as_f64(), max_kappa_eta: (T::one() - min_gamma).as_f64() });
    }
    Ok(channel.bulk_d() * t.ratio())
}

/// Corner terms of the rectangular channel at `u` (`None` when κ = 0).
pub fn rectangle_closed_terms<T: Real>(channel: &ChannelSpec<T>, u: T) -> Result<Option<RectangleTerms<T>>> {
    let (d1, d2) = channel.rectangle_sides().ok_or(Error::UnsupportedSection { expected: "centered rectangular" })?;
    let kappa = channel.kappa(u)?;
    if kappa == T::zero() {
        return Ok(None);
    }
    let tr = channel.transport();
    Ok(Some(RectangleTerms::new(d1, d2, kappa, tr.p.eval(u), tr.angle(u))))
}
