//! Reflected Brownian motion in the full 3D channel region, used to check
//! the one-dimensional reduction.
//!
//! Moves that leave the region are rejected and the particle stays put.
//! Each particle draws from its own ChaCha stream, so results do not depend
//! on how the work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use crate::Real;

/// Step length must stay below this fraction of the smallest section width.
const RESOLUTION: f64 = 0.2;

/// Largest accepted `|Δu|` per step, in units of the step length.
const CONTINUITY: f64 = 5.0;

/// Number of batches for the batch-means error bar.
const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig<T> {
    pub n_particles: usize,
    pub dt: T,
    pub t_final: T,
    pub seed: u64,
    pub bulk_d: T,
    /// Number of MSD sample times.
    pub n_records: usize,
    /// Arc-length window for the initial positions; the channel domain if `None`.
    pub start_range: Option<(T, T)>,
    /// Keep `(u, η, β)` of every particle at every record time.
    pub keep_trajectories: bool,
}

impl<T: Real> WalkConfig<T> {
    pub fn new(n_particles: usize, dt: T, t_final: T, seed: u64, bulk_d: T) -> Self {
        Self { n_particles, dt, t_final, seed, bulk_d, n_records: 50, start_range: None, keep_trajectories: false }
    }

    /// `√(2 D dt)`.
    pub fn step_length(&self) -> T {
        (T::lit(2.0) * self.bulk_d * self.dt).sqrt()
    }

    pub fn validate(&self, channel: &ChannelSpec<T>) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidParameter("need at least one particle".into()));
        }
        if !(self.dt > T::zero()) || !(self.t_final > T::zero()) || !(self.bulk_d > T::zero()) {
            return Err(Error::InvalidParameter("dt, t_final and bulk_D must be positive".into()));
        }
        if self.n_records < 2 {
            return Err(Error::InvalidParameter("need at least two record times".into()));
        }
        let limit = T::lit(RESOLUTION) * channel.section().min_width();
        let step = self.step_length();
        if !(step < limit) {
            return Err(Error::StepTooLarge { step: step.as_f64(), limit: limit.as_f64() });
        }
        Ok(())
    }
}

/// Arc length and normal-plane coordinates of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCoords<T> {
    pub u: T,
    pub eta: T,
    pub beta: T,
}

/// MSD curve and effective coefficient estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkStatistics<T> {
    pub times: Vec<T>,
    /// `⟨(u(t) − u(0))²⟩` at each record time.
    pub msd: Vec<T>,
    /// Half the MSD slope over the later half of the record times.
    pub estimate: T,
    /// Batch-means standard error of `estimate`.
    pub stderr: T,
    /// Fraction of proposed moves that were accepted.
    pub acceptance: T,
    /// Per particle, the coordinates at each record time.
    pub trajectories: Option<Vec<Vec<ChannelCoords<T>>>>,
}

/// Newton solve of `(x − α(u))·T̂(u) = 0` from `u0`. Stops once the update
/// is below `√ε` relative, where the next one would vanish in rounding.
fn project<T: Real>(channel: &ChannelSpec<T>, x: Vec3<T>, u0: T, max_jump: T) -> Result<ChannelCoords<T>> {
    let mut u = u0;
    let tol = T::epsilon().sqrt() * T::lit(1e-2) * (T::one() + u0.abs());
    for _ in 0..50 {
        let f = channel.frame(u)?;
        let d = x - f.position;
        let eta = d.dot(f.normal);
        let g = T::one() - f.kappa * eta;
        if !(g > T::zero()) {
            return Err(Error::FocalAmbiguity { u: u.as_f64() });
        }
        let du = d.dot(f.tangent) / g;
        if du.abs() <= tol {
            // first-order update of the normal-plane coordinates
            let beta = d.dot(f.binormal);
            let tau = f.tau * du;
            return Ok(ChannelCoords { u: u + du, eta: eta + tau * beta, beta: beta - tau * eta });
        }
        u = u + if du.abs() > max_jump { max_jump * du.signum() } else { du };
    }
    Err(Error::OutsideDomain)
}

/// Local coordinates of `x`, warm-started from `guess` when given, otherwise
/// located by scanning the domain.
pub fn to_channel_coords<T: Real>(channel: &ChannelSpec<T>, x: Vec3<T>, guess: Option<T>) -> Result<ChannelCoords<T>> {
    let (lo, hi) = channel.domain();
    let span = hi - lo;
    let in_domain = |u: T| {
        let slack = T::lit(1e-9) * span;
        u >= lo - slack && u <= hi + slack
    };
    if let Some(u0) = guess {
        let c = project(channel, x, u0, span)?;
        if !channel.curve().is_analytic() && !in_domain(c.u) {
            return Err(Error::OutsideDomain);
        }
        return Ok(c);
    }
    let n = 512;
    let samples: Vec<(T, T)> = (0..=n)
        .map(|i| {
            let u = lo + span * T::from_count(i) / T::from_count(n);
            let dist = channel.frame(u).map(|f| (x - f.position).norm()).unwrap_or(T::infinity());
            (u, dist)
        })
        .collect();
    let mut roots: Vec<(T, ChannelCoords<T>)> = Vec::new();
    for i in 0..=n {
        let here = samples[i].1;
        let left = if i > 0 { samples[i - 1].1 } else { T::infinity() };
        let right = if i < n { samples[i + 1].1 } else { T::infinity() };
        if !(here <= left && here <= right) {
            continue;
        }
        let step = span / T::from_count(n);
        if let Ok(c) = project(channel, x, samples[i].0, step * T::lit(2.0)) {
            if !in_domain(c.u) {
                continue;
            }
            let f = channel.frame(c.u)?;
            if !(T::one() - f.kappa * c.eta > T::zero()) {
                continue;
            }
            let dist = (x - f.position).norm();
            if !roots.iter().any(|(_, r)| (r.u - c.u).abs() <= T::lit(1e-9) * span) {
                roots.push((dist, c));
            }
        }
    }
    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    match roots.as_slice() {
        [] => Err(Error::OutsideDomain),
        [(_, c)] => Ok(*c),
        [(d0, c), (d1, _), ..] => {
            if (*d1 - *d0) <= T::lit(1e-12) * (T::one() + *d0) {
                Err(Error::FocalAmbiguity { u: c.u.as_f64() })
            } else {
                Ok(*c)
            }
        }
    }
}

/// Whether local coordinates fall inside the channel region. Channels on
/// analytic curves continue past the ends of the domain.
pub fn inside_coords<T: Real>(channel: &ChannelSpec<T>, c: &ChannelCoords<T>) -> bool {
    if !channel.curve().is_analytic() {
        let (lo, hi) = channel.domain();
        if c.u < lo || c.u > hi {
            return false;
        }
    }
    let (e0, b0) = channel.transport().untwist(c.u, c.eta, c.beta);
    channel.section().contains(e0, b0)
}

/// Whether `x` lies in the channel region between the domain ends.
pub fn inside<T: Real>(channel: &ChannelSpec<T>, x: Vec3<T>) -> bool {
    match to_channel_coords(channel, x, None) {
        Ok(c) => inside_coords(channel, &c),
        Err(_) => false,
    }
}

struct Sampler<T> {
    lo: (T, T),
    hi: (T, T),
}

impl<T: Real> Sampler<T> {
    fn new(channel: &ChannelSpec<T>) -> Self {
        let s = channel.section();
        let one = T::one();
        let zero = T::zero();
        Self { lo: (-s.support((-one, zero)), -s.support((zero, -one))), hi: (s.support((one, zero)), s.support((zero, one))) }
    }

    fn uniform(rng: &mut ChaCha8Rng, a: T, b: T) -> T {
        a + (b - a) * T::lit(rng.random::<f64>())
    }

    /// Point uniformly distributed by volume in the channel between `u_range`.
    fn initial(
        &self,
        channel: &ChannelSpec<T>,
        rng: &mut ChaCha8Rng,
        u_range: (T, T),
        kmax: T,
    ) -> Result<(Vec3<T>, ChannelCoords<T>)> {
        let (hi_eta, lo_eta) = (self.hi.0.max(-self.lo.0), self.hi.1.max(-self.lo.1));
        let reach = hi_eta.hypot(lo_eta);
        let bound = T::one() + kmax * reach;
        for _ in 0..100_000 {
            let u = Self::uniform(rng, u_range.0, u_range.1);
            let e0 = Self::uniform(rng, self.lo.0, self.hi.0);
            let b0 = Self::uniform(rng, self.lo.1, self.hi.1);
            if !channel.section().contains(e0, b0) {
                continue;
            }
            let (eta, beta) = channel.transport().apply(u, e0, b0);
            let f = channel.frame(u)?;
            let weight = T::one() - f.kappa * eta;
            if T::lit(rng.random::<f64>()) * bound > weight {
                continue;
            }
            return Ok((f.point(eta, beta), ChannelCoords { u, eta, beta }));
        }
        Err(Error::SolverFailure("could not place a particle inside the channel".into()))
    }
}

struct ParticleRun<T> {
    disp2: Vec<T>,
    accepted: u64,
    proposed: u64,
    path: Option<Vec<ChannelCoords<T>>>,
}

/// Runs the walk and estimates the effective axial coefficient.
pub fn simulate<T: Real>(channel: &ChannelSpec<T>, config: &WalkConfig<T>) -> Result<WalkStatistics<T>> {
    config.validate(channel)?;
    let n_steps = (config.t_final / config.dt).round().to_usize().unwrap_or(0).max(1);
    let stride = (n_steps / config.n_records).max(1);
    let n_rec = n_steps / stride;
    let times: Vec<T> = (1..=n_rec).map(|k| config.dt * T::from_count(k * stride)).collect();
    let u_range = config.start_range.unwrap_or_else(|| channel.domain());
    let sampler = Sampler::new(channel);
    let kmax = {
        let n = 64;
        let mut k = T::zero();
        for i in 0..=n {
            let u = u_range.0 + (u_range.1 - u_range.0) * T::from_count(i) / T::from_count(n);
            k = k.max(channel.kappa(u)?);
        }
        k
    };
    let sigma = config.step_length();
    let guard = T::lit(CONTINUITY) * sigma;

    let run = |index: usize| -> Result<ParticleRun<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);
        let (mut x, mut c) = sampler.initial(channel, &mut rng, u_range, kmax)?;
        let u0 = c.u;
        let mut disp2 = Vec::with_capacity(n_rec);
        let mut path = config.keep_trajectories.then(|| Vec::with_capacity(n_rec));
        let mut accepted = 0u64;
        for step in 1..=n_rec * stride {
            let xi = Vec3::new(
                T::lit(rng.sample::<f64, _>(StandardNormal)),
                T::lit(rng.sample::<f64, _>(StandardNormal)),
                T::lit(rng.sample::<f64, _>(StandardNormal)),
            );
            let y = x + xi * sigma;
            let focal_room = T::one() - kmax * c.eta.abs();
            let limit = guard / focal_room.max(T::lit(0.05));
            if let Ok(next) = project(channel, y, c.u, limit) {
                if (next.u - c.u).abs() < limit && inside_coords(channel, &next) {
                    x = y;
                    c = next;
                    accepted += 1;
                }
            }
            if step % stride == 0 {
                let du = c.u - u0;
                disp2.push(du * du);
                if let Some(p) = path.as_mut() {
                    p.push(c);
                }
            }
        }
        debug_assert!(inside_coords(channel, &c));
        Ok(ParticleRun { disp2, accepted, proposed: (n_rec * stride) as u64, path })
    };

    let runs: Vec<Result<ParticleRun<T>>> = (0..config.n_particles).into_par_iter().map(run).collect();
    let runs: Vec<ParticleRun<T>> = runs.into_iter().collect::<Result<_>>()?;

    let msd_of = |chunk: &[ParticleRun<T>]| -> Vec<T> {
        let n = T::from_count(chunk.len());
        (0..n_rec).map(|k| chunk.iter().map(|r| r.disp2[k]).sum::<T>() / n).collect()
    };
    let msd = msd_of(&runs);
    let estimate = half_slope(&times, &msd);
    let batches = BATCHES.min(runs.len());
    let stderr = if batches >= 2 {
        let size = runs.len() / batches;
        let est: Vec<T> = (0..batches).map(|b| half_slope(&times, &msd_of(&runs[b * size..(b + 1) * size]))).collect();
        let nb = T::from_count(batches);
        let mean = est.iter().copied().sum::<T>() / nb;
        let var = est.iter().map(|&e| (e - mean) * (e - mean)).sum::<T>() / (nb - T::one());
        (var / nb).sqrt()
    } else {
        T::nan()
    };
    let accepted: u64 = runs.iter().map(|r| r.accepted).sum();
    let proposed: u64 = runs.iter().map(|r| r.proposed).sum();
    let trajectories = config.keep_trajectories.then(|| runs.into_iter().filter_map(|r| r.path).collect());
    Ok(WalkStatistics { times, msd, estimate, stderr, acceptance: T::lit(accepted as f64 / proposed as f64), trajectories })
}

/// Half the slope of the least-squares line through the origin fitted to
/// the later half of `(t, msd)`.
fn half_slope<T: Real>(times: &[T], msd: &[T]) -> T {
    let start = times.len() / 2;
    let (mut num, mut den) = (T::zero(), T::zero());
    for (t, m) in times[start..].iter().zip(&msd[start..]) {
        num = num + *t * *m;
        den = den + *t * *t;
    }
    num / den / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use crate::section::{Polynomial, SectionMap, TwistOffset};

    fn helix_channel() -> ChannelSpec<f64> {
        ChannelSpec::new(
            CurveSpec::helix(0.25, 1.0 / 6.0).unwrap(),
            SectionMap::ellipse(1.0 / 6.0, 0.1).unwrap(),
            TwistOffset::twist(4.0),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn coordinates_of_curve_points() {
        let ch = helix_channel();
        let f = ch.frame(0.7).unwrap();
        let c = to_channel_coords(&ch, f.position, None).unwrap();
        assert!((c.u - 0.7).abs() < 1e-10 && c.eta.abs() < 1e-12 && c.beta.abs() < 1e-12);
        let c = to_channel_coords(&ch, f.position + f.normal * 0.05, None).unwrap();
        assert!((c.u - 0.7).abs() < 1e-10 && (c.eta - 0.05).abs() < 1e-12 && c.beta.abs() < 1e-12);
    }

    #[test]
    fn round_trip_interior_points() {
        let ch = helix_channel();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let u = rng.random_range(0.1..1.7);
            let (e, b) = (rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15));
            let x = ch.frame(u).unwrap().point(e, b);
            let c = to_channel_coords(&ch, x, Some(u + 0.01)).unwrap();
            let back = ch.frame(c.u).unwrap().point(c.eta, c.beta);
            assert!((back - x).norm() < 1e-8);
            assert!((c.u - u).abs() < 1e-9);
        }
    }

    #[test]
    fn center_inside_far_point_outside() {
        let tr = TwistOffset::new(4.0, Polynomial::constant(0.01), Polynomial::constant(0.02));
        for s in [SectionMap::ellipse(0.1, 0.06), SectionMap::rectangle(0.12, 0.08), SectionMap::cardioid(0.03)] {
            let ch = ChannelSpec::new(CurveSpec::circle(0.25).unwrap(), s.unwrap(), tr.clone(), 1.0).unwrap();
            let f = ch.frame(0.5).unwrap();
            assert!(inside(&ch, f.point(0.01, 0.02)));
            assert!(!inside(&ch, f.point(0.01, 0.5)));
        }
    }

    #[test]
    fn step_too_large() {
        let ch = helix_channel();
        let cfg = WalkConfig::new(10, 1e-3, 0.01, 1, 1.0);
        assert!(matches!(simulate(&ch, &cfg), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn seeded_runs_repeat() {
        let ch = helix_channel();
        let mut cfg = WalkConfig::new(40, 1e-5, 2e-3, 99, 1.0);
        cfg.n_records = 10;
        let a = simulate(&ch, &cfg).unwrap();
        let b = simulate(&ch, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 100;
        assert_ne!(simulate(&ch, &cfg).unwrap().msd, a.msd);
    }
}
