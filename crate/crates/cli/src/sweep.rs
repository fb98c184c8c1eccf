//! Grid sweeps and rate solves, evaluated on a worker pool and emitted in
//! grid order.

use std::str::FromStr;

use muxdt_core::simulate::{estimate_dtf, McConfig, Routing};
use muxdt_core::solve::{rate_at_dtf, DtfModel, DtfPoint, Engine, Family, Mode};
use muxdt_core::{CwSource, DetectorPool, PulsedSource, RandomStream, Source};
use rayon::prelude::*;

use crate::args::{EngineArg, FamilyArg, ModeArg, RunArgs, SystemArgs};
use crate::error::CliError;
use crate::table::{Cell, Table};

pub const SEED_ENV: &str = "MUXDT_SEED";

pub const CURVE_COLUMNS: [&str; 11] = [
    "mode",
    "family",
    "n_detectors",
    "deadtime_s",
    "rate_or_p",
    "nu_hz",
    "engine",
    "dtf",
    "std_err",
    "n_events",
    "seed",
];

pub const RATE_COLUMNS: [&str; 7] = [
    "mode",
    "family",
    "n_detectors",
    "target_dtf",
    "rate",
    "speedup",
    "iterations",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Log,
    Lin,
}

/// Axis definition `log:START:STOP:POINTS` or `lin:START:STOP:POINTS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub scale: Scale,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::usage(format!("invalid grid '{s}': {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [scale, start, stop, points] = parts[..] else {
            return Err(bad("expected log|lin:START:STOP:POINTS"));
        };
        let scale = match scale {
            "log" => Scale::Log,
            "lin" => Scale::Lin,
            _ => return Err(bad("scale must be 'log' or 'lin'")),
        };
        let start: f64 = start.parse().map_err(|_| bad("START is not a number"))?;
        let stop: f64 = stop.parse().map_err(|_| bad("STOP is not a number"))?;
        let points: usize = points
            .parse()
            .map_err(|_| bad("POINTS is not an integer"))?;
        Grid::new(scale, start, stop, points).map_err(|e| match e {
            CliError::Usage(why) => bad(&why),
            other => other,
        })
    }
}

impl Grid {
    pub fn new(scale: Scale, start: f64, stop: f64, points: usize) -> Result<Self, CliError> {
        if points < 2 {
            return Err(CliError::usage("grid needs at least 2 points"));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(CliError::usage("grid endpoints must be finite"));
        }
        if scale == Scale::Log && !(start > 0.0 && stop > 0.0) {
            return Err(CliError::usage("log grid needs positive endpoints"));
        }
        Ok(Self {
            scale,
            start,
            stop,
            points,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == self.points - 1 {
                    return self.stop;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Lin => self.start + t * (self.stop - self.start),
                    Scale::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

/// A fully resolved source and detector configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub mode: Mode,
    pub family: Family,
    pub n: usize,
    pub deadtime: f64,
    /// Heterogeneous pool; overrides `n` and `deadtime` when set.
    pub deadtimes: Option<Vec<f64>>,
}

impl System {
    pub fn homogeneous(mode: Mode, family: Family, deadtime: f64, n: usize) -> Self {
        Self {
            mode,
            family,
            n,
            deadtime,
            deadtimes: None,
        }
    }

    pub fn from_args(args: &SystemArgs) -> Result<Self, CliError> {
        let mode = match (args.mode, args.nu) {
            (ModeArg::Cw, None) => Mode::Cw,
            (ModeArg::Cw, Some(_)) => {
                return Err(CliError::usage("--nu only applies to --mode pulsed"))
            }
            (ModeArg::Pulsed, Some(nu)) => Mode::Pulsed { rep_rate: nu },
            (ModeArg::Pulsed, None) => {
                return Err(CliError::usage(
                    "--mode pulsed needs --nu (repetition rate in Hz)",
                ))
            }
        };
        let family = match args.family {
            FamilyArg::Multiplexed => Family::Multiplexed,
            FamilyArg::Tree => Family::Tree,
            FamilyArg::Reduced => Family::Reduced,
            FamilyArg::Single => Family::Single,
        };
        if args.n == 0 {
            return Err(CliError::usage("--n must be >= 1"));
        }
        let deadtimes = match &args.deadtimes {
            None => None,
            Some(list) => {
                if family != Family::Multiplexed {
                    return Err(CliError::usage("--deadtimes needs --family multiplexed"));
                }
                let parsed: Result<Vec<f64>, _> =
                    list.split(',').map(|s| s.trim().parse::<f64>()).collect();
                let parsed = parsed
                    .map_err(|_| CliError::usage(format!("--deadtimes: cannot parse '{list}'")))?;
                DetectorPool::new(parsed.clone())?;
                Some(parsed)
            }
        };
        let n = match (&deadtimes, family) {
            (Some(d), _) => d.len(),
            (None, Family::Single) => 1,
            (None, _) => args.n,
        };
        Ok(Self {
            mode,
            family,
            n,
            deadtime: args.deadtime,
            deadtimes,
        })
    }

    pub fn with_detectors(&self, n: usize) -> Self {
        Self {
            n,
            deadtimes: None,
            ..self.clone()
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Cw => "cw",
            Mode::Pulsed { .. } => "pulsed",
        }
    }

    fn nu(&self) -> Option<f64> {
        match self.mode {
            Mode::Cw => None,
            Mode::Pulsed { rep_rate } => Some(rep_rate),
        }
    }

    /// Deadtime column value: the common deadtime, or the first entry of a
    /// heterogeneous pool.
    fn deadtime_cell(&self) -> f64 {
        match &self.deadtimes {
            Some(d) => d[0],
            None => self.deadtime,
        }
    }

    fn model(&self, engine: Engine) -> DtfModel {
        DtfModel {
            engine,
            ..DtfModel::analytic(self.mode, self.family, self.deadtime, self.n)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Analytic,
    MonteCarlo,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Analytic => "analytic",
            EngineKind::MonteCarlo => "montecarlo",
        }
    }
}

/// Engine, Monte Carlo budget, seed and parallelism for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub engines: Vec<EngineKind>,
    pub n_events: u64,
    pub batches: u64,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl RunSettings {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let engines = match args.engine {
            EngineArg::Analytic => vec![EngineKind::Analytic],
            EngineArg::Montecarlo => vec![EngineKind::MonteCarlo],
            EngineArg::Both => vec![EngineKind::Analytic, EngineKind::MonteCarlo],
        };
        if args.n_events == 0 {
            return Err(CliError::usage("--n-events must be >= 1"));
        }
        if args.batches == 0 || args.batches > args.n_events {
            return Err(CliError::usage("--batches must lie in [1, n-events]"));
        }
        if args.workers == Some(0) {
            return Err(CliError::usage("--workers must be >= 1"));
        }
        Ok(Self {
            engines,
            n_events: args.n_events,
            batches: args.batches,
            seed: resolve_seed(args.seed)?,
            workers: args.workers,
        })
    }

    /// The single engine of a rate solve; `both` has no meaning there.
    pub fn single_engine(&self) -> Result<EngineKind, CliError> {
        match self.engines[..] {
            [e] => Ok(e),
            _ => Err(CliError::usage(
                "--engine both is only supported for DTF curves; pick analytic or montecarlo",
            )),
        }
    }

    fn engine(&self, kind: EngineKind, stream_id: u64) -> Engine {
        match kind {
            EngineKind::Analytic => Engine::Analytic,
            EngineKind::MonteCarlo => Engine::MonteCarlo {
                n_events: self.n_events,
                batches: self.batches,
                stream: RandomStream::new(self.seed, stream_id),
            },
        }
    }

    /// Runs `f` on a pool sized by `--workers`.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.unwrap_or(0))
            .build()
            .map_err(|e| CliError::usage(format!("worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// DTF of `system` at `x` (rate or p), with stream `stream_id` for Monte Carlo.
pub fn eval_point(
    system: &System,
    kind: EngineKind,
    settings: &RunSettings,
    x: f64,
    stream_id: u64,
) -> Result<DtfPoint, CliError> {
    if let (Some(deadtimes), EngineKind::MonteCarlo) = (&system.deadtimes, kind) {
        let source = match system.mode {
            Mode::Cw => Source::Cw(CwSource::new(x)?),
            Mode::Pulsed { rep_rate } => Source::Pulsed(PulsedSource::new(rep_rate, x)?),
        };
        let config = McConfig {
            source,
            pool: DetectorPool::new(deadtimes.clone())?,
            n_events: settings.n_events,
            batches: settings.batches,
            routing: Routing::FirstLive,
        };
        let est = estimate_dtf(&config, RandomStream::new(settings.seed, stream_id).fork(0))?;
        return Ok(DtfPoint {
            dtf: est.dtf,
            std_err: est.std_err,
            n_events: est.total_events,
        });
    }
    if system.deadtimes.is_some() {
        return Err(CliError::usage(
            "heterogeneous --deadtimes pools are only supported by --engine montecarlo",
        ));
    }
    Ok(system
        .model(settings.engine(kind, stream_id))
        .dtf_at(x, 0)?)
}

/// One curve: a system evaluated over a list of abscissae.
#[derive(Debug, Clone)]
pub struct Curve {
    pub system: System,
    pub xs: Vec<f64>,
}

/// Evaluates every (curve, point, engine) and returns rows in input order.
/// Point `j` of the flattened list uses random stream `j`, so output does not
/// depend on the worker count.
pub fn curve_table(curves: &[Curve], settings: &RunSettings) -> Result<Table, CliError> {
    let jobs: Vec<(&System, f64)> = curves
        .iter()
        .flat_map(|c| c.xs.iter().map(move |&x| (&c.system, x)))
        .collect();
    let rows: Vec<Result<Vec<Vec<Cell>>, CliError>> = settings.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(j, &(system, x))| {
                settings
                    .engines
                    .iter()
                    .map(|&kind| {
                        let point = eval_point(system, kind, settings, x, j as u64)?;
                        Ok(curve_row(system, kind, settings, x, &point))
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut table = Table::new(&CURVE_COLUMNS);
    for group in rows {
        for row in group? {
            table.push(row);
        }
    }
    Ok(table)
}

fn curve_row(
    system: &System,
    kind: EngineKind,
    settings: &RunSettings,
    x: f64,
    point: &DtfPoint,
) -> Vec<Cell> {
    let mc = kind == EngineKind::MonteCarlo;
    vec![
        system.mode_name().into(),
        system.family.name().into(),
        system.n.into(),
        system.deadtime_cell().into(),
        x.into(),
        system.nu().into(),
        kind.name().into(),
        point.dtf.into(),
        mc.then_some(point.std_err).into(),
        mc.then_some(point.n_events).into(),
        mc.then_some(settings.seed).into(),
    ]
}

/// Solved rate for one system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solved {
    /// Photons/s; for pulsed sources the event rate `p * nu`.
    pub rate: f64,
    /// `None` when a closed form was used or the target is unreachable.
    pub iterations: Option<u32>,
}

/// Solves R(DTF = target) for each system in parallel (stream `j` for job
/// `j`). With `unreachable_inf`, a target the model never reaches yields an
/// infinite rate instead of an error.
pub fn solve_rates(
    systems: &[System],
    target: f64,
    bracket: Option<(f64, f64)>,
    kind: EngineKind,
    settings: &RunSettings,
    unreachable_inf: bool,
) -> Result<Vec<Solved>, CliError> {
    let results: Vec<Result<Solved, CliError>> = settings.install(|| {
        systems
            .par_iter()
            .enumerate()
            .map(|(j, system)| {
                solve_one(
                    system,
                    target,
                    bracket,
                    kind,
                    settings,
                    j as u64,
                    unreachable_inf,
                )
            })
            .collect()
    })?;
    results.into_iter().collect()
}

fn solve_one(
    system: &System,
    target: f64,
    bracket: Option<(f64, f64)>,
    kind: EngineKind,
    settings: &RunSettings,
    stream_id: u64,
    unreachable_inf: bool,
) -> Result<Solved, CliError> {
    if system.deadtimes.is_some() {
        return Err(CliError::usage(
            "rate solves need a homogeneous pool (--n, --deadtime)",
        ));
    }
    let model = system.model(settings.engine(kind, stream_id));
    let scale = system.nu().unwrap_or(1.0);
    if kind == EngineKind::Analytic && bracket.is_none() && target > 0.0 && target < 1.0 {
        if let Some(rate) = model.closed_form_rate(target) {
            return Ok(Solved {
                rate,
                iterations: None,
            });
        }
    }
    match rate_at_dtf(&model, target, bracket) {
        Ok(r) => Ok(Solved {
            rate: r.rate * scale,
            iterations: Some(r.iterations),
        }),
        Err(muxdt_core::Error::NotBracketed { .. }) if unreachable_inf => Ok(Solved {
            rate: f64::INFINITY,
            iterations: None,
        }),
        Err(e) => Err(e.into()),
    }
}

pub fn rate_row(system: &System, target: f64, solved: Solved, base_rate: f64) -> Vec<Cell> {
    vec![
        system.mode_name().into(),
        system.family.name().into(),
        system.n.into(),
        target.into(),
        solved.rate.into(),
        (solved.rate / base_rate).into(),
        solved.iterations.map(u64::from).into(),
    ]
}

/// Parses `LO:HI`.
pub fn parse_bracket(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::usage(format!("invalid bracket '{s}': expected LO:HI"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}
