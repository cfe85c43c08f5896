//! Gauss-Legendre rules and globally adaptive 1D/2D quadrature.
//!
//! Both drivers keep a priority queue of panels. Each panel carries a coarse
//! estimate (one Gauss-Legendre rule on the panel) and a fine estimate (the
//! same rule on its children); their difference is the panel's error
//! estimate and the fine value is what gets accumulated. The panel with the
//! largest normalized error is split until every component satisfies
//! `error <= tol * ∫|f|`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::Real;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the rule by Newton iteration on the Legendre polynomial P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton in f64; the rule is converted once.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Fixed-rule estimate of ∫_a^b f.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<T>() * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let dpn = n as f64 * (x * pn - p0) / (x * x - 1.0);
    (pn, dpn)
}

/// Controls for the adaptive drivers.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    /// Relative tolerance, measured against ∫|f| per component; floored at 100ε.
    pub tol: T,
    /// Gauss-Legendre points per panel (per direction in 2D).
    pub order: usize,
    /// Upper bound on live panels before giving up.
    pub max_panels: usize,
}

impl<T: Real> QuadOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), order: 12, max_panels: 200_000 }
    }
}

struct Panel<T, const N: usize, const D: usize> {
    lo: [T; D],
    hi: [T; D],
    fine: [T; N],
    fine_abs: [T; N],
    error: [T; N],
    /// Coarse estimates of the children, reused when this panel is split.
    children: Vec<([T; N], [T; N])>,
    priority: f64,
}

impl<T, const N: usize, const D: usize> PartialEq for Panel<T, N, D> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<T, const N: usize, const D: usize> Eq for Panel<T, N, D> {}
impl<T, const N: usize, const D: usize> PartialOrd for Panel<T, N, D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T, const N: usize, const D: usize> Ord for Panel<T, N, D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn split_box<T: Real, const D: usize>(lo: [T; D], hi: [T; D]) -> Vec<([T; D], [T; D])> {
    let half = T::lit(0.5);
    let mut out = vec![(lo, hi)];
    for axis in 0..D {
        let mut next = Vec::with_capacity(out.len() * 2);
        for (l, h) in out {
            let mid = (l[axis] + h[axis]) * half;
            let mut h1 = h;
            h1[axis] = mid;
            let mut l2 = l;
            l2[axis] = mid;
            next.push((l, h1));
            next.push((l2, h));
        }
        out = next;
    }
    out
}

fn box_rule<T: Real, const N: usize, const D: usize, F>(
    f: &F,
    rule: &GaussLegendre<T>,
    lo: [T; D],
    hi: [T; D],
) -> ([T; N], [T; N])
where
    F: Fn([T; D]) -> [T; N],
{
    let half = T::lit(0.5);
    let mut jac = T::one();
    let mut mid = [T::zero(); D];
    let mut rad = [T::zero(); D];
    for k in 0..D {
        rad[k] = (hi[k] - lo[k]) * half;
        mid[k] = (hi[k] + lo[k]) * half;
        jac = jac * rad[k];
    }
    let n = rule.len();
    let mut val = [T::zero(); N];
    let mut abs = [T::zero(); N];
    let mut idx = [0usize; D];
    let total = n.pow(D as u32);
    for _ in 0..total {
        let mut x = [T::zero(); D];
        let mut w = T::one();
        for k in 0..D {
            x[k] = mid[k] + rad[k] * rule.nodes()[idx[k]];
            w = w * rule.weights()[idx[k]];
        }
        let fx = f(x);
        for c in 0..N {
            val[c] = val[c] + w * fx[c];
            abs[c] = abs[c] + w * fx[c].abs();
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i < n {
                break;
            }
            *i = 0;
        }
    }
    for c in 0..N {
        val[c] = val[c] * jac;
        abs[c] = abs[c] * jac;
    }
    (val, abs)
}

fn adaptive<T, const N: usize, const D: usize, F>(f: F, lo: [T; D], hi: [T; D], opts: QuadOptions<T>) -> Result<[T; N]>
where
    T: Real,
    F: Fn([T; D]) -> [T; N],
{
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    for k in 0..D {
        if !(hi[k] >= lo[k]) {
            return Err(Error::InvalidParameter("quadrature bounds must be ordered".into()));
        }
    }
    if (0..D).any(|k| hi[k] == lo[k]) {
        return Ok([T::zero(); N]);
    }
    let tol = opts.tol.max(T::epsilon() * T::lit(100.0));
    let rule = GaussLegendre::<T>::new(opts.order.max(2));
    let make_panel = |lo: [T; D], hi: [T; D], coarse: [T; N]| -> Panel<T, N, D> {
        let children: Vec<_> = split_box(lo, hi).into_iter().map(|(l, h)| box_rule(&f, &rule, l, h)).collect();
        let mut fine = [T::zero(); N];
        let mut fine_abs = [T::zero(); N];
        let mut error = [T::zero(); N];
        for (v, a) in &children {
            for c in 0..N {
                fine[c] = fine[c] + v[c];
                fine_abs[c] = fine_abs[c] + a[c];
            }
        }
        for c in 0..N {
            error[c] = (fine[c] - coarse[c]).abs();
        }
        Panel { lo, hi, fine, fine_abs, error, children, priority: 0.0 }
    };

    let mut heap = BinaryHeap::new();
    let mut total = [T::zero(); N];
    let mut total_abs = [T::zero(); N];
    let mut total_err = [T::zero(); N];
    for (l, h) in split_box(lo, hi) {
        let (coarse, _) = box_rule(&f, &rule, l, h);
        let p = make_panel(l, h, coarse);
        for c in 0..N {
            total[c] = total[c] + p.fine[c];
            total_abs[c] = total_abs[c] + p.fine_abs[c];
            total_err[c] = total_err[c] + p.error[c];
        }
        heap.push(p);
    }
    // Priorities are set relative to the scale known at insertion time; the
    // scale only stabilizes, so stale priorities merely reorder work.
    let priority = |p: &Panel<T, N, D>, scale: &[T; N]| -> f64 {
        (0..N)
            .map(|c| {
                let s = scale[c].as_f64();
                if s > 0.0 {
                    p.error[c].as_f64() / s
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    let mut panels: Vec<Panel<T, N, D>> = heap
        .into_vec()
        .into_iter()
        .map(|mut p| {
            p.priority = priority(&p, &total_abs);
            p
        })
        .collect();
    let mut heap: BinaryHeap<_> = panels.drain(..).collect();

    let converged = |err: &[T; N], abs: &[T; N]| (0..N).all(|c| err[c] <= tol * abs[c]);
    while !converged(&total_err, &total_abs) {
        if heap.len() >= opts.max_panels {
            let worst = (0..N)
                .map(|c| if total_abs[c] > T::zero() { (total_err[c] / total_abs[c]).as_f64() } else { 0.0 })
                .fold(0.0, f64::max);
            return Err(Error::QuadratureFailure { tol: tol.as_f64(), estimate: worst, evaluations: heap.len() });
        }
        let Some(worst) = heap.pop() else { break };
        if worst.priority == 0.0 {
            // Nothing left to refine; all remaining error is in zero-scale components.
            heap.push(worst);
            break;
        }
        for c in 0..N {
            total[c] = total[c] - worst.fine[c];
            total_abs[c] = total_abs[c] - worst.fine_abs[c];
            total_err[c] = total_err[c] - worst.error[c];
        }
        let boxes = split_box(worst.lo, worst.hi);
        for ((l, h), (coarse, _)) in boxes.into_iter().zip(worst.children) {
            let mut p = make_panel(l, h, coarse);
            for c in 0..N {
                total[c] = total[c] + p.fine[c];
                total_abs[c] = total_abs[c] + p.fine_abs[c];
                total_err[c] = total_err[c] + p.error[c];
            }
            p.priority = priority(&p, &total_abs);
            heap.push(p);
        }
    }
    // Re-sum exactly; the running totals accumulate rounding from removals.
    let mut out = [T::zero(); N];
    for p in heap.iter() {
        for (o, f) in out.iter_mut().zip(&p.fine) {
            *o = *o + *f;
        }
    }
    Ok(out)
}

/// Adaptive ∫_a^b f for a vector-valued integrand.
pub fn integrate_1d_vec<T, const N: usize, F>(f: F, a: T, b: T, opts: QuadOptions<T>) -> Result<[T; N]>
where
    T: Real,
    F: Fn(T) -> [T; N],
{
    if a > b {
        let r = adaptive(|x: [T; 1]| f(x[0]), [b], [a], opts)?;
        return Ok(r.map(|v| -v));
    }
    adaptive(|x: [T; 1]| f(x[0]), [a], [b], opts)
}

/// Adaptive ∫_a^b f. Reversed bounds give the negated integral.
pub fn integrate_1d<T, F>(f: F, a: T, b: T, opts: QuadOptions<T>) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    integrate_1d_vec(|x| [f(x)], a, b, opts).map(|r| r[0])
}

/// Adaptive ∬ f(x, y) dx dy over `[x0, x1] × [y0, y1]` for a vector-valued integrand.
pub fn integrate_2d_vec<T, const N: usize, F>(f: F, x: (T, T), y: (T, T), opts: QuadOptions<T>) -> Result<[T; N]>
where
    T: Real,
    F: Fn(T, T) -> [T; N],
{
    adaptive(|p: [T; 2]| f(p[0], p[1]), [x.0, y.0], [x.1, y.1], opts)
}

/// Adaptive ∬ f(x, y) dx dy over a rectangle.
pub fn integrate_2d<T, F>(f: F, x: (T, T), y: (T, T), opts: QuadOptions<T>) -> Result<T>
where
    T: Real,
    F: Fn(T, T) -> T,
{
    integrate_2d_vec(|a, b| [f(a, b)], x, y, opts).map(|r| r[0])
}
