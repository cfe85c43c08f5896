//! Conservative finite-volume solver for the reduced equation
//! `∂p/∂t = ∂/∂u(𝒟 ω ∂/∂u(p/ω))`.
//!
//! Unknowns are cell averages of `p`; fluxes act on `p/ω` with face
//! coefficients `K = 𝒟ω` evaluated at the faces. Time stepping is the
//! θ-scheme with a tridiagonal solve.

use crate::channel::ChannelSpec;
use crate::deff::{volume_density, DeffMethod};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, QuadOptions};
use crate::Real;

/// Uniform cell-centered grid on `[u_min, u_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    u_min: T,
    u_max: T,
    n_cells: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(u_min: T, u_max: T, n_cells: usize) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::InvalidParameter(format!("grid needs at least 4 cells, got {n_cells}")));
        }
        if !(u_max > u_min) || !u_min.is_finite() || !u_max.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid grid interval [{u_min}, {u_max}]")));
        }
        Ok(Self { u_min, u_max, n_cells })
    }

    /// Grid spanning the channel's whole domain.
    pub fn over(channel: &ChannelSpec<T>, n_cells: usize) -> Result<Self> {
        let (a, b) = channel.domain();
        Self::new(a, b, n_cells)
    }

    pub fn u_min(&self) -> T {
        self.u_min
    }

    pub fn u_max(&self) -> T {
        self.u_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn du(&self) -> T {
        (self.u_max - self.u_min) / T::from_count(self.n_cells)
    }

    pub fn center(&self, i: usize) -> T {
        self.u_min + self.du() * (T::from_count(i) + T::lit(0.5))
    }

    /// Face `i` sits at `u_min + i Δu`, `i = 0..=n_cells`.
    pub fn face(&self, i: usize) -> T {
        if i == self.n_cells {
            return self.u_max;
        }
        self.u_min + self.du() * T::from_count(i)
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn faces(&self) -> Vec<T> {
        (0..=self.n_cells).map(|i| self.face(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary<T> {
    NoFlux,
    /// Prescribed effective density `p` at the boundary.
    FixedDensity {
        value: T,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// 1 is implicit Euler, 0.5 trapezoidal.
    pub theta: T,
    pub dt: T,
    pub bc_left: Boundary<T>,
    pub bc_right: Boundary<T>,
}

impl<T: Real> SolverConfig<T> {
    pub fn implicit(dt: T) -> Self {
        Self { theta: T::one(), dt, bc_left: Boundary::NoFlux, bc_right: Boundary::NoFlux }
    }

    pub fn with_boundaries(mut self, left: Boundary<T>, right: Boundary<T>) -> Self {
        self.bc_left = left;
        self.bc_right = right;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.theta >= T::zero() && self.theta <= T::one()) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        Ok(())
    }
}

/// Face coefficients and cell volume densities of the discrete operator.
#[derive(Debug, Clone)]
pub struct FjOperator<T> {
    grid: Grid1D<T>,
    /// `K = 𝒟ω` at the `n + 1` faces.
    k_face: Vec<T>,
    omega_cell: Vec<T>,
    omega_face: Vec<T>,
}

/// Time and per-cell effective density.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    pub t: T,
    pub p: Vec<T>,
}

/// Tridiagonal matrix rows `lower[i] x[i−1] + diag[i] x[i] + upper[i] x[i+1]`.
#[derive(Debug, Clone)]
struct Tridiagonal<T> {
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
}

/// Assembles the discrete operator, evaluating `𝒟` with `method` at faces.
pub fn assemble<T: Real>(channel: &ChannelSpec<T>, grid: &Grid1D<T>, method: DeffMethod<T>) -> Result<FjOperator<T>> {
    let faces = grid.faces();
    let mut k_face = Vec::with_capacity(faces.len());
    let mut omega_face = Vec::with_capacity(faces.len());
    for &u in &faces {
        let d = method.eval(channel, u).map_err(|e| e.at(u.as_f64()))?;
        let w = volume_density(channel, u).map_err(|e| e.at(u.as_f64()))?;
        k_face.push(d * w);
        omega_face.push(w);
    }
    let omega_cell = grid
        .centers()
        .into_iter()
        .map(|u| volume_density(channel, u).map_err(|e| e.at(u.as_f64())))
        .collect::<Result<Vec<_>>>()?;
    FjOperator::from_coefficients(*grid, k_face, omega_cell, omega_face)
}

impl<T: Real> FjOperator<T> {
    /// Operator with given face coefficients `K`, cell `ω` and face `ω`.
    pub fn from_coefficients(grid: Grid1D<T>, k_face: Vec<T>, omega_cell: Vec<T>, omega_face: Vec<T>) -> Result<Self> {
        let n = grid.n_cells();
        if k_face.len() != n + 1 || omega_face.len() != n + 1 || omega_cell.len() != n {
            return Err(Error::InvalidParameter("coefficient lengths do not match the grid".into()));
        }
        if k_face.iter().chain(&omega_cell).chain(&omega_face).any(|&x| !(x > T::zero()) || !x.is_finite()) {
            return Err(Error::InvalidParameter("operator coefficients must be positive and finite".into()));
        }
        Ok(Self { grid, k_face, omega_cell, omega_face })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn k_face(&self) -> &[T] {
        &self.k_face
    }

    pub fn omega_cell(&self) -> &[T] {
        &self.omega_cell
    }

    pub fn omega_face(&self) -> &[T] {
        &self.omega_face
    }

    /// `L` as a tridiagonal matrix plus the constant boundary source.
    fn matrix(&self, left: Boundary<T>, right: Boundary<T>) -> (Tridiagonal<T>, Vec<T>) {
        let n = self.grid.n_cells();
        let h2 = self.grid.du() * self.grid.du();
        let two = T::lit(2.0);
        let mut lower = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut upper = vec![T::zero(); n];
        let mut source = vec![T::zero(); n];
        for i in 0..n.saturating_sub(1) {
            let k = self.k_face[i + 1] / h2;
            diag[i] = diag[i] - k / self.omega_cell[i];
            upper[i] = k / self.omega_cell[i + 1];
            lower[i + 1] = k / self.omega_cell[i];
            diag[i + 1] = diag[i + 1] - k / self.omega_cell[i + 1];
        }
        if let Boundary::FixedDensity { value } = left {
            let k = two * self.k_face[0] / h2;
            diag[0] = diag[0] - k / self.omega_cell[0];
            source[0] = k * value / self.omega_face[0];
        }
        if let Boundary::FixedDensity { value } = right {
            let k = two * self.k_face[n] / h2;
            diag[n - 1] = diag[n - 1] - k / self.omega_cell[n - 1];
            source[n - 1] = k * value / self.omega_face[n];
        }
        (Tridiagonal { lower, diag, upper }, source)
    }

    /// `L p` including boundary sources.
    pub fn apply(&self, p: &[T], left: Boundary<T>, right: Boundary<T>) -> Vec<T> {
        let (m, s) = self.matrix(left, right);
        m.mul(p).into_iter().zip(s).map(|(a, b)| a + b).collect()
    }

    /// Fluxes `j` at the `n + 1` faces.
    pub fn face_fluxes(&self, p: &[T], left: Boundary<T>, right: Boundary<T>) -> Vec<T> {
        let n = self.grid.n_cells();
        let du = self.grid.du();
        let x: Vec<T> = p.iter().zip(&self.omega_cell).map(|(&p, &w)| p / w).collect();
        let mut j = vec![T::zero(); n + 1];
        for i in 1..n {
            j[i] = -self.k_face[i] * (x[i] - x[i - 1]) / du;
        }
        let half = du * T::lit(0.5);
        if let Boundary::FixedDensity { value } = left {
            j[0] = -self.k_face[0] * (x[0] - value / self.omega_face[0]) / half;
        }
        if let Boundary::FixedDensity { value } = right {
            j[n] = -self.k_face[n] * (value / self.omega_face[n] - x[n - 1]) / half;
        }
        j
    }

    /// Exact steady flux of the discrete system between fixed densities.
    pub fn discrete_steady_flux(&self, p_left: T, p_right: T) -> T {
        let n = self.grid.n_cells();
        let du = self.grid.du();
        let half = du * T::lit(0.5);
        let mut resistance = half / self.k_face[0] + half / self.k_face[n];
        for k in &self.k_face[1..n] {
            resistance = resistance + du / *k;
        }
        -(p_right / self.omega_face[n] - p_left / self.omega_face[0]) / resistance
    }

    /// Total amount `Σ p Δu`.
    pub fn mass(&self, p: &[T]) -> T {
        p.iter().copied().sum::<T>() * self.grid.du()
    }

    /// Advances `state` by one θ-step.
    pub fn step(&self, state: &SolverState<T>, config: &SolverConfig<T>) -> Result<SolverState<T>> {
        let mut next = state.clone();
        self.step_in_place(&mut next, config)?;
        Ok(next)
    }

    /// Advances `state` by one θ-step without allocating a new state.
    pub fn step_in_place(&self, state: &mut SolverState<T>, config: &SolverConfig<T>) -> Result<()> {
        config.validate()?;
        let n = self.grid.n_cells();
        if state.p.len() != n {
            return Err(Error::InvalidParameter(format!("state has {} cells, grid has {n}", state.p.len())));
        }
        let (m, source) = self.matrix(config.bc_left, config.bc_right);
        let dt = config.dt;
        let explicit = (T::one() - config.theta) * dt;
        let lp = m.mul(&state.p);
        let rhs: Vec<T> = (0..n).map(|i| state.p[i] + explicit * lp[i] + dt * source[i]).collect();
        let implicit = config.theta * dt;
        let lhs = Tridiagonal {
            lower: m.lower.iter().map(|&a| -implicit * a).collect(),
            diag: m.diag.iter().map(|&a| T::one() - implicit * a).collect(),
            upper: m.upper.iter().map(|&a| -implicit * a).collect(),
        };
        state.p = lhs.solve(&rhs)?;
        state.t = state.t + dt;
        Ok(())
    }

    /// Runs `steps` θ-steps.
    pub fn run(&self, state: &mut SolverState<T>, config: &SolverConfig<T>, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step_in_place(state, config)?;
        }
        Ok(())
    }
}

/// Advances `state` by one θ-step with `operator`.
pub fn step<T: Real>(state: &SolverState<T>, config: &SolverConfig<T>, operator: &FjOperator<T>) -> Result<SolverState<T>> {
    operator.step(state, config)
}

impl<T: Real> Tridiagonal<T> {
    fn mul(&self, x: &[T]) -> Vec<T> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y = y + self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y = y + self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Thomas algorithm.
    fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = rhs.len();
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let tiny = T::min_positive_value();
        let mut denom = self.diag[0];
        if !(denom.abs() > tiny) {
            return Err(Error::SolverFailure("singular tridiagonal system at row 0".into()));
        }
        c[0] = self.upper[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            if !(denom.abs() > tiny) || !denom.is_finite() {
                return Err(Error::SolverFailure(format!("singular tridiagonal system at row {i}")));
            }
            c[i] = self.upper[i] / denom;
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] = d[i] - c[i] * d[i + 1];
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::SolverFailure("non-finite solution".into()));
        }
        Ok(d)
    }
}

/// Steady flux between fixed densities from the resistance integral
/// `j = −Δ(p/ω) / ∫ du/(𝒟ω)` over the grid interval.
pub fn steady_flux<T: Real>(
    channel: &ChannelSpec<T>,
    grid: &Grid1D<T>,
    p_left: T,
    p_right: T,
    method: DeffMethod<T>,
) -> Result<T> {
    let (a, b) = (grid.u_min(), grid.u_max());
    let failure = std::cell::Cell::new(None);
    let integrand = |u: T| match method.eval(channel, u).and_then(|d| Ok(d * volume_density(channel, u)?)) {
        Ok(k) => k.recip(),
        Err(e) => {
            let first = failure.take();
            failure.set(first.or(Some(e.at(u.as_f64()))));
            T::nan()
        }
    };
    let resistance = integrate_1d(integrand, a, b, QuadOptions::with_tol(T::lit(1e-12)));
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let resistance = resistance?;
    let xl = p_left / volume_density(channel, a)?;
    let xr = p_right / volume_density(channel, b)?;
    Ok(-(xr - xl) / resistance)
}

/// Initial effective density profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition<T> {
    /// Normalized Gaussian in `u`.
    Gaussian {
        mu: T,
        sigma: T,
    },
    Uniform,
    /// `p = ω(u)`: unit concentration everywhere.
    Equilibrium,
}

impl<T: Real> InitialCondition<T> {
    pub fn state(&self, op: &FjOperator<T>) -> Result<SolverState<T>> {
        let grid = op.grid();
        let p = match *self {
            Self::Gaussian { mu, sigma } => {
                if !(sigma > T::zero()) {
                    return Err(Error::InvalidParameter(format!("gaussian sigma must be positive, got {sigma}")));
                }
                let norm = (T::lit(2.0) * T::PI()).sqrt() * sigma;
                grid.centers()
                    .into_iter()
                    .map(|u| {
                        let z = (u - mu) / sigma;
                        (-(z * z) * T::lit(0.5)).exp() / norm
                    })
                    .collect()
            }
            Self::Uniform => vec![T::one(); grid.n_cells()],
            Self::Equilibrium => op.omega_cell().to_vec(),
        };
        Ok(SolverState { t: T::zero(), p })
    }
}
