//! Subcommand implementations.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use channelfj::brownian::{simulate, WalkConfig};
use channelfj::solver::{assemble, steady_flux, Boundary, Grid1D, InitialCondition, SolverConfig};
use channelfj::{deff_profile, linspace, matched_parameters, Channel, DeffMethod, Method};

use crate::config::{ChannelConfig, ConfigError, CurveConfig, GridConfig, PolyConfig, SectionConfig, TwistConfig};
use crate::output::{open, Csv, Field};
use crate::{Cli, Command};

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// 1 implicit Euler, 0.5 trapezoidal.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// gaussian(mu,sigma) | uniform | equilibrium
    #[arg(long, default_value = "equilibrium")]
    init: String,
    /// Output every N steps (default: ten snapshots).
    #[arg(long)]
    every: Option<usize>,
    /// noflux | fixed:VALUE
    #[arg(long, default_value = "noflux")]
    left: String,
    #[arg(long, default_value = "noflux")]
    right: String,
    #[arg(long, default_value = "auto")]
    method: String,
    /// Report steady fluxes between fixed densities instead of snapshots.
    #[arg(long)]
    steady: bool,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, default_value_t = 10_000)]
    particles: usize,
    #[arg(long, default_value_t = 1e-6)]
    dt: f64,
    #[arg(long, default_value_t = 0.01)]
    t_final: f64,
    #[arg(long, default_value_t = 50)]
    records: usize,
    /// Writes per-particle (u, η, β) at every record time to this file.
    #[arg(long)]
    trajectories: Option<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<()> {
    if !(cli.tol > 0.0) {
        bail!(ConfigError("--tol must be positive".into()));
    }
    match &cli.command {
        Command::Figures { which } => figures(cli, which),
        Command::Deff { methods } => {
            let (cfg, ch) = load(cli)?;
            deff(cli, &cfg, &ch, methods)
        }
        Command::Moments { max_order } => {
            let (cfg, ch) = load(cli)?;
            moments(cli, &cfg, &ch, *max_order)
        }
        Command::Solve(args) => {
            let (cfg, ch) = load(cli)?;
            solve(cli, &cfg, &ch, args)
        }
        Command::Mc(args) => {
            let (cfg, ch) = load(cli)?;
            mc(cli, &cfg, &ch, args)
        }
        Command::Validate { points } => {
            let (cfg, ch) = load(cli)?;
            validate(cli, &cfg, &ch, *points)
        }
    }
}

fn load(cli: &Cli) -> Result<(ChannelConfig, Channel)> {
    let path = cli.config.as_deref().ok_or_else(|| ConfigError("--config is required".into()))?;
    let cfg = ChannelConfig::load(path)?;
    let ch = cfg.channel().map_err(|e| ConfigError(e.to_string()))?;
    Ok((cfg, ch))
}

fn parse_method(name: &str, cfg: &ChannelConfig, tol: f64) -> Result<Method> {
    let closed = match cfg.section {
        SectionConfig::Ellipse { .. } => Some(DeffMethod::ClosedFormEllipse),
        SectionConfig::Rectangle { .. } => Some(DeffMethod::ClosedFormRectangle),
        SectionConfig::Cardioid { .. } => None,
    };
    let name = name.trim();
    Ok(match name {
        "quadrature" => DeffMethod::Quadrature { tol },
        "second_order" => DeffMethod::SecondOrder,
        "series" => DeffMethod::Series { order: 4 },
        "auto" => closed.unwrap_or(DeffMethod::Quadrature { tol }),
        "closed" => match closed {
            Some(m) => m,
            None => bail!(ConfigError("no closed form for this section; use quadrature".into())),
        },
        _ => match name.strip_prefix("series:").map(str::parse::<usize>) {
            Some(Ok(order)) => DeffMethod::Series { order },
            _ => bail!(ConfigError(format!("unknown method `{name}`"))),
        },
    })
}

fn method_label(m: &Method) -> String {
    match m {
        DeffMethod::Series { order } => format!("series{order}"),
        other => other.name().to_string(),
    }
}

fn grid_points(cfg: &ChannelConfig, ch: &Channel) -> Vec<f64> {
    let (a, b, n) = cfg.grid(ch);
    linspace(a, b, n)
}

fn deff(cli: &Cli, cfg: &ChannelConfig, ch: &Channel, methods: &[String]) -> Result<()> {
    let mut list: Vec<Method> = Vec::new();
    for name in methods {
        let m = parse_method(name, cfg, cli.tol)?;
        if !list.contains(&m) {
            list.push(m);
        }
    }
    let grid = grid_points(cfg, ch);
    let profiles = list.iter().map(|m| deff_profile(ch, &grid, *m).map_err(anyhow::Error::from)).collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(open(cli.out.as_deref())?);
    csv.banner("deff")?;
    csv.config(None, cfg)?;
    let labels: Vec<String> = list.iter().map(method_label).collect();
    csv.meta("methods", labels.join(" "))?;
    csv.meta("tol", format!("{:e}", cli.tol))?;
    csv.columns(&["u", "deff", "deff_over_D", "omega_vol", "area", "method"])?;
    for (p, label) in profiles.iter().zip(&labels) {
        for i in 0..p.len() {
            csv.row(&[
                Field::Num(p.u_grid[i]),
                Field::Num(p.deff[i]),
                Field::Num(p.deff[i] / ch.bulk_d()),
                Field::Num(p.omega_vol[i]),
                Field::Num(p.area[i]),
                Field::Text(label),
            ])?;
        }
    }
    csv.finish()?;
    Ok(())
}

fn moments(cli: &Cli, cfg: &ChannelConfig, ch: &Channel, max_order: usize) -> Result<()> {
    if max_order < 2 {
        bail!(ConfigError("--max-order must be at least 2".into()));
    }
    let grid = grid_points(cfg, ch);
    let mut csv = Csv::new(open(cli.out.as_deref())?);
    csv.banner("moments")?;
    csv.config(None, cfg)?;
    let mut names: Vec<String> = vec!["u".into(), "A".into()];
    names.extend((1..=max_order).map(|k| format!("eta{k}")));
    names.extend(["s1", "s2", "theta"].map(String::from));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    csv.columns(&refs)?;
    for &u in &grid {
        let m = ch.moments(u, max_order, cli.tol).map_err(|e| e.at(u))?;
        let mut row = vec![Field::Num(u), Field::Num(m.area)];
        row.extend(m.eta_moments[1..].iter().map(|&x| Field::Num(x)));
        row.extend([Field::Num(m.s1), Field::Num(m.s2), Field::Num(m.theta)]);
        csv.row(&row)?;
    }
    csv.finish()?;
    Ok(())
}

fn parse_boundary(s: &str) -> Result<Boundary<f64>> {
    if s == "noflux" {
        return Ok(Boundary::NoFlux);
    }
    match s.strip_prefix("fixed:").map(str::parse::<f64>) {
        Some(Ok(value)) => Ok(Boundary::FixedDensity { value }),
        _ => bail!(ConfigError(format!("boundary must be `noflux` or `fixed:VALUE`, got `{s}`"))),
    }
}

fn parse_init(s: &str) -> Result<InitialCondition<f64>> {
    match s.trim() {
        "uniform" => return Ok(InitialCondition::Uniform),
        "equilibrium" => return Ok(InitialCondition::Equilibrium),
        _ => {}
    }
    let inner = s.trim().strip_prefix("gaussian(").and_then(|r| r.strip_suffix(')'));
    if let Some(args) = inner {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if let [mu, sigma] = parts.as_slice() {
            if let (Ok(mu), Ok(sigma)) = (mu.parse(), sigma.parse()) {
                return Ok(InitialCondition::Gaussian { mu, sigma });
            }
        }
    }
    bail!(ConfigError(format!("initial condition must be gaussian(mu,sigma), uniform or equilibrium, got `{s}`")))
}

fn solve(cli: &Cli, cfg: &ChannelConfig, ch: &Channel, args: &SolveArgs) -> Result<()> {
    let method = parse_method(&args.method, cfg, cli.tol)?;
    let (a, b, n) = cfg.grid(ch);
    let grid = Grid1D::new(a, b, n).map_err(|e| ConfigError(e.to_string()))?;
    let op = assemble(ch, &grid, method)?;
    let config = SolverConfig {
        theta: args.theta,
        dt: args.dt,
        bc_left: parse_boundary(&args.left)?,
        bc_right: parse_boundary(&args.right)?,
    };
    config.validate().map_err(|e| ConfigError(e.to_string()))?;
    let mut csv = Csv::new(open(cli.out.as_deref())?);
    csv.banner("solve")?;
    csv.config(None, cfg)?;
    csv.meta("method", method_label(&method))?;
    csv.meta("scheme", format!("theta={} dt={} steps={} cells={n}", args.theta, args.dt, args.steps))?;
    if args.steady {
        let (Boundary::FixedDensity { value: pl }, Boundary::FixedDensity { value: pr }) = (config.bc_left, config.bc_right)
        else {
            bail!(ConfigError("--steady needs fixed:VALUE on both ends".into()));
        };
        let resist = steady_flux(ch, &grid, pl, pr, method)?;
        let discrete = op.discrete_steady_flux(pl, pr);
        let mut state = InitialCondition::Uniform.state(&op)?;
        op.run(&mut state, &config, args.steps)?;
        let j = op.face_fluxes(&state.p, config.bc_left, config.bc_right);
        let stepped = j.iter().sum::<f64>() / j.len() as f64;
        csv.columns(&["j_resistance", "j_discrete", "j_timestepped"])?;
        csv.row(&[Field::Num(resist), Field::Num(discrete), Field::Num(stepped)])?;
        csv.finish()?;
        return Ok(());
    }
    let mut state = parse_init(&args.init)?.state(&op)?;
    csv.meta("init", &args.init)?;
    csv.columns(&["t", "u", "p", "p_over_omega", "j"])?;
    let every = args.every.unwrap_or((args.steps / 10).max(1)).max(1);
    let centers = grid.centers();
    let snapshot = |csv: &mut Csv<_>, state: &channelfj::solver::SolverState<f64>| -> Result<()> {
        let j = op.face_fluxes(&state.p, config.bc_left, config.bc_right);
        for i in 0..n {
            csv.row(&[
                Field::Num(state.t),
                Field::Num(centers[i]),
                Field::Num(state.p[i]),
                Field::Num(state.p[i] / op.omega_cell()[i]),
                Field::Num(0.5 * (j[i] + j[i + 1])),
            ])?;
        }
        Ok(())
    };
    snapshot(&mut csv, &state)?;
    for k in 1..=args.steps {
        op.step_in_place(&mut state, &config)?;
        if k % every == 0 || k == args.steps {
            snapshot(&mut csv, &state)?;
        }
    }
    csv.finish()?;
    Ok(())
}

fn mc(cli: &Cli, cfg: &ChannelConfig, ch: &Channel, args: &McArgs) -> Result<()> {
    let mut walk = WalkConfig::new(args.particles, args.dt, args.t_final, cli.seed, ch.bulk_d());
    walk.n_records = args.records;
    walk.keep_trajectories = args.trajectories.is_some();
    if let Some(g) = cfg.grid {
        let (a, b) = ch.domain();
        walk.start_range = Some((g.u_min.unwrap_or(a), g.u_max.unwrap_or(b)));
    }
    let stats = simulate(ch, &walk)?;
    let mut csv = Csv::new(open(cli.out.as_deref())?);
    csv.banner("mc")?;
    csv.config(None, cfg)?;
    csv.meta("walk", format!("particles={} dt={} t_final={} seed={}", args.particles, args.dt, args.t_final, cli.seed))?;
    csv.meta("acceptance", stats.acceptance)?;
    csv.columns(&["t", "msd_u", "estimate", "stderr"])?;
    for (t, m) in stats.times.iter().zip(&stats.msd) {
        csv.row(&[Field::Num(*t), Field::Num(*m), Field::Num(stats.estimate), Field::Num(stats.stderr)])?;
    }
    csv.finish()?;
    if let (Some(path), Some(traj)) = (&args.trajectories, &stats.trajectories) {
        let mut dump = Csv::new(open(Some(path))?);
        dump.banner("mc trajectories")?;
        dump.columns(&["particle", "t", "u", "eta", "beta"])?;
        for (i, path) in traj.iter().enumerate() {
            for (t, c) in stats.times.iter().zip(path) {
                dump.row(&[Field::Int(i), Field::Num(*t), Field::Num(c.u), Field::Num(c.eta), Field::Num(c.beta)])?;
            }
        }
        dump.finish()?;
    }
    Ok(())
}

fn validate(cli: &Cli, cfg: &ChannelConfig, ch: &Channel, points: usize) -> Result<()> {
    ch.validate(points)?;
    let (a, b) = ch.domain();
    let worst = linspace(a, b, points.max(2))
        .into_iter()
        .map(|u| ch.max_kappa_eta(u))
        .collect::<channelfj::Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut csv = Csv::new(open(cli.out.as_deref())?);
    csv.banner("validate")?;
    csv.config(None, cfg)?;
    csv.columns(&["status", "points", "max_kappa_eta", "area", "u_min", "u_max"])?;
    csv.row(&[Field::Text("ok"), Field::Int(points), Field::Num(worst), Field::Num(ch.area()), Field::Num(a), Field::Num(b)])?;
    csv.finish()?;
    Ok(())
}

/// Fig. 3 channel (helix, twisted ellipse) with the given section.
pub fn helix_config(section: SectionConfig) -> ChannelConfig {
    ChannelConfig {
        curve: CurveConfig::Helix { a: 0.25, b: 1.0 / 6.0, domain: None },
        section,
        twist: TwistConfig { omega: 4.0, p: PolyConfig::Constant(0.0), q: PolyConfig::Constant(0.0) },
        bulk_d: 1.0,
        grid: Some(GridConfig { u_min: Some(0.0), u_max: Some(FRAC_PI_2), n: 512 }),
    }
}

/// Circle of radius 1/4 with twist 4, as in the section comparisons.
pub fn circle_config(section: SectionConfig) -> ChannelConfig {
    ChannelConfig {
        curve: CurveConfig::Circle { radius: 0.25, domain: None },
        section,
        twist: TwistConfig { omega: 4.0, p: PolyConfig::Constant(0.0), q: PolyConfig::Constant(0.0) },
        bulk_d: 1.0,
        grid: Some(GridConfig { u_min: Some(0.0), u_max: Some(FRAC_PI_2), n: 512 }),
    }
}

fn write_columns(
    path: &Path,
    command: &str,
    configs: &[(&str, &ChannelConfig)],
    names: &[&str],
    cols: &[Vec<f64>],
) -> Result<()> {
    let mut csv = Csv::new(open(Some(path)).with_context(|| format!("cannot create {}", path.display()))?);
    csv.banner(command)?;
    for (label, cfg) in configs {
        csv.config(Some(label), cfg)?;
    }
    csv.columns(names)?;
    for i in 0..cols[0].len() {
        let row: Vec<Field> = cols.iter().map(|c| Field::Num(c[i])).collect();
        csv.row(&row)?;
    }
    csv.finish()?;
    Ok(())
}

fn profile(cfg: &ChannelConfig, method: Method) -> Result<(Vec<f64>, Vec<f64>)> {
    let ch = cfg.channel()?;
    let grid = grid_points(cfg, &ch);
    let p = deff_profile(&ch, &grid, method)?;
    Ok((grid, p.deff))
}

fn figures(cli: &Cli, which: &[u8]) -> Result<()> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let all = [3u8, 4, 5, 6, 7];
    let list: &[u8] = if which.is_empty() { &all } else { which };
    let quad = DeffMethod::Quadrature { tol: cli.tol };
    for &fig in list {
        let path = dir.join(format!("fig{fig}.csv"));
        match fig {
            3 => {
                let cfg = helix_config(SectionConfig::Ellipse { r1: 1.0 / 6.0, r2: 0.1 });
                let (u, closed) = profile(&cfg, DeffMethod::ClosedFormEllipse)?;
                let (_, q) = profile(&cfg, quad)?;
                write_columns(
                    &path,
                    "figures 3",
                    &[("ellipse", &cfg)],
                    &["u", "deff_closed", "deff_quadrature"],
                    &[u, closed, q],
                )?;
            }
            4 => {
                let cfg = helix_config(SectionConfig::Ellipse { r1: 1.0 / 6.0, r2: 0.1 });
                let (u, s2) = profile(&cfg, DeffMethod::Series { order: 2 })?;
                let (_, s4) = profile(&cfg, DeffMethod::Series { order: 4 })?;
                let (_, closed) = profile(&cfg, DeffMethod::ClosedFormEllipse)?;
                write_columns(
                    &path,
                    "figures 4",
                    &[("ellipse", &cfg)],
                    &["u", "series2", "series4", "closed"],
                    &[u, s2, s4, closed],
                )?;
            }
            5 => {
                let cfg = helix_config(SectionConfig::Rectangle { d1: 1.0 / 6.0, d2: 0.1 });
                let (u, closed) = profile(&cfg, DeffMethod::ClosedFormRectangle)?;
                let (_, q) = profile(&cfg, quad)?;
                write_columns(
                    &path,
                    "figures 5",
                    &[("rectangle", &cfg)],
                    &["u", "deff_closed", "deff_quadrature"],
                    &[u, closed, q],
                )?;
            }
            6 | 7 => {
                let r = if fig == 6 { 1.0 / 20.0 } else { 1.0 / 15.0 };
                let m = matched_parameters(r)?;
                let e = circle_config(SectionConfig::Ellipse { r1: m.r1, r2: m.r2 });
                let rect = circle_config(SectionConfig::Rectangle { d1: m.d1, d2: m.d2 });
                let card = circle_config(SectionConfig::Cardioid { r });
                let (u, de) = profile(&e, DeffMethod::ClosedFormEllipse)?;
                let (_, dr) = profile(&rect, DeffMethod::ClosedFormRectangle)?;
                let (_, dc) = profile(&card, quad)?;
                write_columns(
                    &path,
                    &format!("figures {fig}"),
                    &[("ellipse", &e), ("rectangle", &rect), ("cardioid", &card)],
                    &["u", "ellipse", "rectangle", "cardioid"],
                    &[u, de, dr, dc],
                )?;
            }
            other => bail!(ConfigError(format!("no figure {other}; choose from 3, 4, 5, 6, 7"))),
        }
        log::info!("wrote {}", path.display());
    }
    Ok(())
}
