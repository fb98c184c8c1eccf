//! Inverse problems on DTF curves: the incident rate at which a
//! configuration reaches a target DTF, speedup over a single detector, and a
//! quadratic fit of rate versus pool size.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{invalid, Error, Result};
use crate::simulate::{estimate_dtf, McConfig, Routing};
use crate::types::{dead_pulse_count, CwSource, DetectorPool, PulsedSource, RandomStream, Source};

/// Detector arrangement being modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// One detector with the full deadtime.
    Single,
    /// N detectors behind an active first-live switch.
    Multiplexed,
    /// N detectors behind a passive splitter tree.
    Tree,
    /// One detector with deadtime divided by N.
    Reduced,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Single => "single",
            Family::Multiplexed => "multiplexed",
            Family::Tree => "tree",
            Family::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Family::Single),
            "multiplexed" => Ok(Family::Multiplexed),
            "tree" => Ok(Family::Tree),
            "reduced" => Ok(Family::Reduced),
            other => Err(invalid(format!(
                "unknown family '{other}' (expected single, multiplexed, tree or reduced)"
            ))),
        }
    }
}

/// Source kind; the independent variable is the photon rate for CW and the
/// per-pulse event probability for pulsed sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    Cw,
    Pulsed { rep_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    Analytic,
    MonteCarlo {
        n_events: u64,
        batches: u64,
        stream: RandomStream,
    },
}

/// A DTF curve as a function of rate (CW) or p (pulsed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtfModel {
    pub mode: Mode,
    pub family: Family,
    pub deadtime: f64,
    pub n_detectors: usize,
    pub engine: Engine,
}

/// One evaluated point of a DTF curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtfPoint {
    pub dtf: f64,
    pub std_err: f64,
    /// Simulated events (0 for analytic evaluation).
    pub n_events: u64,
}

impl DtfModel {
    pub fn analytic(mode: Mode, family: Family, deadtime: f64, n_detectors: usize) -> Self {
        Self {
            mode,
            family,
            deadtime,
            n_detectors,
            engine: Engine::Analytic,
        }
    }

    pub fn with_detectors(mut self, n: usize) -> Self {
        self.n_detectors = n;
        self
    }

    /// Evaluates the curve at `x`. Monte Carlo models draw from
    /// `stream.fork(probe)` so every probe is independent.
    pub fn dtf_at(&self, x: f64, probe: u64) -> Result<DtfPoint> {
        match self.engine {
            Engine::Analytic => Ok(DtfPoint {
                dtf: self.analytic_dtf(x)?,
                std_err: 0.0,
                n_events: 0,
            }),
            Engine::MonteCarlo {
                n_events,
                batches,
                stream,
            } => {
                let config = self.mc_config(x, n_events, batches)?;
                let est = estimate_dtf(&config, stream.fork(probe))?;
                Ok(DtfPoint {
                    dtf: est.dtf,
                    std_err: est.std_err,
                    n_events: est.total_events,
                })
            }
        }
    }

    fn analytic_dtf(&self, x: f64) -> Result<f64> {
        let (td, n) = (self.deadtime, self.n_detectors);
        match self.mode {
            Mode::Cw => match self.family {
                Family::Single => analytic::cw_single_dtf(x, td),
                Family::Multiplexed => Ok(analytic::cw_multiplexed_dtf(x, td, n)?.dtf),
                Family::Tree => analytic::cw_tree_dtf(x, td, n),
                Family::Reduced => analytic::cw_reduced_dtf(x, td, n),
            },
            Mode::Pulsed { rep_rate } => {
                let nd = dead_pulse_count(rep_rate, td)?;
                match self.family {
                    Family::Single => analytic::pulsed_single_dtf(x, nd),
                    Family::Multiplexed => Ok(analytic::pulsed_multiplexed_dtf(x, nd, n)?.dtf),
                    Family::Tree => analytic::pulsed_tree_dtf(x, nd, n),
                    Family::Reduced => analytic::pulsed_reduced_dtf(x, rep_rate, td, n),
                }
            }
        }
    }

    fn mc_config(&self, x: f64, n_events: u64, batches: u64) -> Result<McConfig> {
        let (td, n) = (self.deadtime, self.n_detectors);
        let (pool, routing) = match self.family {
            Family::Single => (DetectorPool::homogeneous(td, 1)?, Routing::FirstLive),
            Family::Multiplexed => (DetectorPool::homogeneous(td, n)?, Routing::FirstLive),
            Family::Tree => (DetectorPool::homogeneous(td, n)?, Routing::PassiveSplit),
            Family::Reduced => {
                if n == 0 {
                    return Err(invalid("detector count must be >= 1"));
                }
                (
                    DetectorPool::homogeneous(td / n as f64, 1)?,
                    Routing::FirstLive,
                )
            }
        };
        let source = match self.mode {
            Mode::Cw => Source::Cw(CwSource::new(x)?),
            Mode::Pulsed { rep_rate } => Source::Pulsed(PulsedSource::new(rep_rate, x)?),
        };
        Ok(McConfig {
            source,
            pool,
            n_events,
            batches,
            routing,
        })
    }

    fn default_bracket(&self) -> (f64, f64) {
        match self.mode {
            Mode::Cw => (1.0, 1e12),
            Mode::Pulsed { .. } => (0.0, 1.0),
        }
    }

    /// Closed-form inverse where one exists (CW single, tree and reduced).
    pub fn closed_form_rate(&self, target: f64) -> Option<f64> {
        let load = target / (1.0 - target);
        match (self.mode, self.family) {
            (Mode::Cw, Family::Single) => Some(load / self.deadtime),
            (Mode::Cw, Family::Tree | Family::Reduced) => {
                Some(self.n_detectors as f64 * load / self.deadtime)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateAtDtfResult {
    /// Photon rate (CW) or event probability (pulsed) at the target DTF.
    pub rate: f64,
    pub target_dtf: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// Bisection steps, not counting bracket probes.
    pub iterations: u32,
    /// Model DTF at `rate`.
    pub dtf: f64,
}

const REL_TOL: f64 = 1e-6;
const MAX_BISECTIONS: u32 = 200;

/// Finds where the (non-decreasing) DTF curve crosses `target` by bisection.
///
/// Without an explicit bracket, CW models start from `[1, 1e12]` photons/s
/// and walk up from the low end by doubling until the target is crossed;
/// pulsed models search `p` in `[0, 1]`. Analytic models stop at 1e-6
/// relative width. Monte Carlo models also stop once the DTF difference
/// across the bracket falls below the larger endpoint standard error.
pub fn rate_at_dtf(
    model: &DtfModel,
    target: f64,
    bracket: Option<(f64, f64)>,
) -> Result<RateAtDtfResult> {
    if !(target > 0.0 && target < 1.0) {
        return Err(invalid(format!(
            "target DTF must lie in (0, 1), got {target}"
        )));
    }
    let (mut lo, mut hi) = bracket.unwrap_or_else(|| model.default_bracket());
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(invalid(format!("invalid bracket [{lo}, {hi}]")));
    }
    let mut probe = 0u64;
    let mut eval = |x: f64| -> Result<DtfPoint> {
        let point = model.dtf_at(x, probe)?;
        probe += 1;
        Ok(point)
    };

    let mut at_lo = eval(lo)?;
    let mut at_hi = eval(hi)?;
    if !(at_lo.dtf <= target && target <= at_hi.dtf) {
        return Err(Error::NotBracketed {
            target,
            lo,
            hi,
            dtf_lo: at_lo.dtf,
            dtf_hi: at_hi.dtf,
        });
    }

    let log_scale = matches!(model.mode, Mode::Cw) && lo > 0.0;
    if log_scale && bracket.is_none() {
        // doubling walk from the low end
        let mut x = lo;
        let mut at_x = at_lo;
        while x * 2.0 < hi {
            let next = x * 2.0;
            let at_next = eval(next)?;
            if at_next.dtf >= target {
                lo = x;
                at_lo = at_x;
                hi = next;
                at_hi = at_next;
                break;
            }
            x = next;
            at_x = at_next;
        }
        if hi > 2.0 * lo {
            lo = x;
            at_lo = at_x;
        }
    }

    let noisy = matches!(model.engine, Engine::MonteCarlo { .. });
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && (hi - lo) > REL_TOL * hi {
        if noisy && (at_hi.dtf - at_lo.dtf) < at_lo.std_err.max(at_hi.std_err) {
            break;
        }
        let mid = if log_scale {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if !(mid > lo && mid < hi) {
            break;
        }
        let at_mid = eval(mid)?;
        iterations += 1;
        let slack = if noisy {
            3.0 * at_lo.std_err.max(at_hi.std_err).max(at_mid.std_err)
        } else {
            0.0
        };
        if at_mid.dtf < at_lo.dtf - slack || at_mid.dtf > at_hi.dtf + slack {
            return Err(Error::NonMonotone {
                at: mid,
                dtf: at_mid.dtf,
                dtf_lo: at_lo.dtf,
                dtf_hi: at_hi.dtf,
            });
        }
        if at_mid.dtf < target {
            lo = mid;
            at_lo = at_mid;
        } else {
            hi = mid;
            at_hi = at_mid;
        }
    }
    let rate = if log_scale {
        (lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    };
    let dtf = if noisy {
        // interpolate the bracket instead of spending another noisy probe
        let w = if at_hi.dtf > at_lo.dtf {
            ((target - at_lo.dtf) / (at_hi.dtf - at_lo.dtf)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        at_lo.dtf + w * (at_hi.dtf - at_lo.dtf)
    } else {
        model.dtf_at(rate, 0)?.dtf
    };
    Ok(RateAtDtfResult {
        rate,
        target_dtf: target,
        bracket: (lo, hi),
        iterations,
        dtf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupPoint {
    pub n_detectors: usize,
    pub rate: f64,
    /// `rate / rate(N = 1)` for the same family.
    pub speedup: f64,
    pub iterations: u32,
}

/// Rate at the target DTF for `N = 1..=n_max`. Families with a closed-form
/// inverse use it directly, so tree and reduced speedups are exactly `N`.
pub fn speedup_curve(model: &DtfModel, target: f64, n_max: usize) -> Result<Vec<SpeedupPoint>> {
    if n_max < 1 {
        return Err(invalid("n_max must be >= 1"));
    }
    let solve_for = |n: usize| -> Result<(f64, u32)> {
        let m = model.with_detectors(n);
        match (m.engine, m.closed_form_rate(target)) {
            (Engine::Analytic, Some(rate)) => Ok((rate, 0)),
            _ => rate_at_dtf(&m, target, None).map(|r| (r.rate, r.iterations)),
        }
    };
    let (base, base_iter) = solve_for(1)?;
    let mut out = vec![SpeedupPoint {
        n_detectors: 1,
        rate: base,
        speedup: 1.0,
        iterations: base_iter,
    }];
    for n in 2..=n_max {
        let (rate, iterations) = solve_for(n)?;
        out.push(SpeedupPoint {
            n_detectors: n,
            rate,
            speedup: rate / base,
            iterations,
        });
    }
    Ok(out)
}

/// Least-squares quadratic `c0 + c1 x + c2 x^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyFit2 {
    pub coefficients: [f64; 3],
    pub r_squared: f64,
    /// Fewer than three distinct abscissae: fell back to a line, `c2 = 0`.
    pub degenerate: bool,
}

impl PolyFit2 {
    pub fn eval(&self, x: f64) -> f64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + x * (c1 + x * c2)
    }
}

pub fn fit_poly2(points: &[(f64, f64)]) -> Result<PolyFit2> {
    if points.len() < 3 {
        return Err(invalid(format!(
            "quadratic fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(invalid("fit points must be finite"));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let degenerate = xs.len() < 3;
    let degree = if degenerate {
        xs.len().saturating_sub(1)
    } else {
        2
    };

    let design = DMatrix::from_fn(points.len(), degree + 1, |r, c| points[r].0.powi(c as i32));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let solved = design
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| invalid(e.to_string()))?;
    let mut coefficients = [0.0; 3];
    for (c, v) in coefficients.iter_mut().zip(solved.iter()) {
        *c = *v;
    }
    let mut fit = PolyFit2 {
        coefficients,
        r_squared: 0.0,
        degenerate,
    };
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|&(x, v)| (v - fit.eval(x)).powi(2)).sum();
    fit.r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= f64::EPSILON * mean.abs().max(1.0) {
        1.0
    } else {
        0.0
    };
    Ok(fit)
}
