//! Closed-form DTF for single, multiplexed, tree and reduced-deadtime
//! configurations.
//!
//! The multiplexed result chains per-detector mean counts: detector `i` is
//! only offered photons while detectors `1..i` are all dead, and its own
//! deadtime is discounted by overlap with the earlier detectors' dead
//! intervals. The discounted ("effective") deadtimes follow the recursions in
//! [`cw_effective_deadtimes`] and [`pulsed_effective_deadtimes`].

use serde::{Deserialize, Serialize};

use crate::dist::{cw_interarrival_densities, pulsed_interarrival_pmfs};
use crate::error::{invalid, Result};
use crate::types::{check_probability, dead_pulse_count, DeadPulseCount};

/// Effective deadtime per detector position; entry 0 is the physical
/// deadtime. Seconds for CW, (fractional) pulses for pulsed sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDeadtimeTable {
    values: Vec<f64>,
}

impl EffectiveDeadtimeTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Effective deadtime of detector `i`, 1-based.
    pub fn get(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|k| self.values.get(k).copied())
    }
}

/// Mean counts per detector over the measurement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountBreakdown {
    pub mean_counts: Vec<f64>,
    pub total: f64,
}

impl CountBreakdown {
    fn new(mean_counts: Vec<f64>) -> Self {
        let total = mean_counts.iter().sum();
        Self { mean_counts, total }
    }

    /// Rescales to a different window length.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.mean_counts.iter().map(|m| m * factor).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplexedDtf {
    pub dtf: f64,
    pub counts: CountBreakdown,
}

/// Overlap geometry of two consecutive detections.
///
/// Case (a): D1's next count comes after D2 has recovered, so the pair is
/// dead for `T_d - delta`. Case (b): D1 recovers and fires again while D2 is
/// still dead, adding a second dead stretch. `mean_a` is the conditional
/// mean of the overlap gap `delta` in case (a); `mean_b` the conditional mean
/// of D1's inter-count gap `Delta` in case (b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseProbabilities {
    pub p_a: f64,
    pub p_b: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

impl CaseProbabilities {
    /// `p_a (T_d - E_a) + p_b (2 T_d - E_b)`: the mean effective deadtime of
    /// the second detector, rebuilt from the case split.
    pub fn mean_effective_deadtime(&self, deadtime: f64) -> f64 {
        let case_b = if self.p_b > 0.0 {
            self.p_b * (2.0 * deadtime - self.mean_b)
        } else {
            0.0
        };
        self.p_a * (deadtime - self.mean_a) + case_b
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(invalid(format!("rate must be finite and >= 0, got {rate}")));
    }
    Ok(())
}

fn check_deadtime(deadtime: f64) -> Result<()> {
    if !deadtime.is_finite() || deadtime <= 0.0 {
        return Err(invalid(format!(
            "deadtime must be finite and > 0, got {deadtime}"
        )));
    }
    Ok(())
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("detector count must be >= 1"));
    }
    Ok(())
}

/// `1 - 1/(1 + x)`, written as `x / (1 + x)` to keep small losses accurate.
fn saturation(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        x / (1.0 + x)
    }
}

/// `1 - 1/(1 + rate * T_d)` for a single non-extending detector.
pub fn cw_single_dtf(rate: f64, deadtime: f64) -> Result<f64> {
    check_rate(rate)?;
    check_deadtime(deadtime)?;
    Ok(saturation(rate * deadtime))
}

pub fn cw_case_probabilities(rate: f64, deadtime: f64) -> Result<CaseProbabilities> {
    // validates rate > 0, deadtime > 0
    cw_interarrival_densities(rate, deadtime)?;
    let u = rate * deadtime;
    let e1 = (-u).exp();
    let e2 = (-2.0 * u).exp();
    // 1 - e^{-u}, 1 - e^{-2u}
    let z1 = -(-u).exp_m1();
    let z2 = -(-2.0 * u).exp_m1();

    let p_a = (1.0 + e1) / 2.0;
    let p_b = z1 / 2.0;

    // E[delta | a] = (1 - e^{-2u}(1 + 2u)) / (2 rate (1 - e^{-2u}))
    let mean_a = gamma2_tail(2.0 * u) / (2.0 * rate * z2);

    // E[Delta | b] = T_d + E[X; X < delta] / p_b with X ~ Exp(rate) the wait
    // past recovery.
    let mean_b = if p_b > 0.0 {
        let partial = 1.0 / rate - (3.0 * z2 - 2.0 * u * e2) / (4.0 * rate * z1);
        deadtime + partial.max(0.0) / p_b
    } else {
        deadtime
    };
    Ok(CaseProbabilities {
        p_a,
        p_b,
        mean_a,
        mean_b,
    })
}

/// `1 - e^{-x}(1 + x)`, accurate for small `x`.
fn gamma2_tail(x: f64) -> f64 {
    if x < 1e-3 {
        // x^2/2 - x^3/3 + x^4/8
        x * x * (0.5 - x / 3.0 + x * x / 8.0)
    } else {
        1.0 - (-x).exp() * (1.0 + x)
    }
}

/// Effective deadtimes `T(1) = T_d`, `T(i) = T(i-1) - (1 - e^{-rate T(i-1)}) / (2 rate)`.
pub fn cw_effective_deadtimes(
    rate: f64,
    deadtime: f64,
    n: usize,
) -> Result<EffectiveDeadtimeTable> {
    check_deadtime(deadtime)?;
    check_count(n)?;
    if !rate.is_finite() || rate <= 0.0 {
        return Err(invalid(format!(
            "effective deadtimes need a finite rate > 0, got {rate}"
        )));
    }
    let mut values = Vec::with_capacity(n);
    values.push(deadtime);
    for _ in 1..n {
        let prev = *values.last().unwrap();
        values.push(prev + (-rate * prev).exp_m1() / (2.0 * rate));
    }
    Ok(EffectiveDeadtimeTable { values })
}

/// Chains per-detector mean counts. `offered` is the mean number of events
/// in the window, `intensity` converts a deadtime entry into mean events per
/// deadtime (rate for CW, p for pulsed).
///
/// Detector `i` registers the fraction `f_i = f_{i-1} x_{i-1} / (1 + x_i)` of
/// the offered events, with `x_i = intensity * T(i)` and `f_1 = 1/(1 + x_1)`.
/// The loss `1 - sum f_i` telescopes to `prod x_i / (1 + x_i)`; the DTF is
/// taken from the product, which stays accurate when the loss is far below
/// machine epsilon, and is exactly zero once a table entry hits zero.
fn chain_counts(offered: f64, intensity: f64, table: &[f64]) -> MultiplexedDtf {
    let mut fractions = Vec::with_capacity(table.len());
    let mut prev_load = 0.0;
    for (i, &dead) in table.iter().enumerate() {
        let load = intensity * dead;
        let f = if i == 0 {
            1.0 / (1.0 + load)
        } else {
            fractions[i - 1] * prev_load / (1.0 + load)
        };
        fractions.push(f);
        prev_load = load;
    }
    // one division keeps integer loads exact (p = 1 gives 4/5 * 3/4 = 0.6)
    let (num, den) = table.iter().fold((1.0, 1.0), |(n, d), &t| {
        (n * intensity * t, d * (1.0 + intensity * t))
    });
    let dtf = if num.is_finite() && den.is_finite() {
        num / den
    } else {
        table
            .iter()
            .map(|&t| saturation(intensity * t))
            .product::<f64>()
    }
    .clamp(0.0, 1.0);
    let counts = CountBreakdown::new(fractions.iter().map(|f| f * offered).collect());
    MultiplexedDtf { dtf, counts }
}

/// Multiplexed DTF with mean counts over a 1 s window.
pub fn cw_multiplexed_dtf(rate: f64, deadtime: f64, n: usize) -> Result<MultiplexedDtf> {
    check_rate(rate)?;
    check_deadtime(deadtime)?;
    check_count(n)?;
    if rate == 0.0 {
        return Ok(MultiplexedDtf {
            dtf: 0.0,
            counts: CountBreakdown::new(vec![0.0; n]),
        });
    }
    let table = cw_effective_deadtimes(rate, deadtime, n)?;
    Ok(chain_counts(rate, rate, table.values()))
}

/// Passive 1-to-N splitter: each detector sees `rate / n`.
pub fn cw_tree_dtf(rate: f64, deadtime: f64, n: usize) -> Result<f64> {
    check_rate(rate)?;
    check_deadtime(deadtime)?;
    check_count(n)?;
    Ok(saturation(rate * deadtime / n as f64))
}

/// One detector whose deadtime is divided by `n`. Same closed form as the tree.
pub fn cw_reduced_dtf(rate: f64, deadtime: f64, n: usize) -> Result<f64> {
    check_rate(rate)?;
    check_deadtime(deadtime)?;
    check_count(n)?;
    Ok(saturation(rate * deadtime / n as f64))
}

/// `1 - 1/(1 + p N_d)`.
pub fn pulsed_single_dtf(p: f64, dead_pulses: DeadPulseCount) -> Result<f64> {
    check_probability(p)?;
    Ok(saturation(p * f64::from(dead_pulses)))
}

/// Case split for the pulsed source. Inner sums over the unbounded
/// next-count gap are closed-form geometric tails; the outer sums over the
/// overlap gap and the finite case-(b) region are summed directly.
pub fn pulsed_case_probabilities(p: f64, dead_pulses: DeadPulseCount) -> Result<CaseProbabilities> {
    let g = pulsed_interarrival_pmfs(p, dead_pulses)?;
    let nd = dead_pulses.get();

    let mut p_a = 0.0;
    let mut sum_a = 0.0;
    let mut p_b = 0.0;
    let mut sum_b = 0.0;
    for m in 1..=nd {
        let w = g.overlap(m);
        if w == 0.0 {
            continue;
        }
        // case (a): next count at or after m + N_d
        let tail = g.next_count_tail(m + nd);
        p_a += w * tail;
        sum_a += m as f64 * w * tail;
        // case (b): N_d + 1 <= next count <= m + N_d - 1
        for n in nd + 1..m + nd {
            let joint = w * g.next_count(n);
            p_b += joint;
            sum_b += n as f64 * joint;
        }
    }
    let mean_a = if p_a > 0.0 { sum_a / p_a } else { 0.0 };
    let mean_b = if p_b > 0.0 { sum_b / p_b } else { 0.0 };
    Ok(CaseProbabilities {
        p_a,
        p_b,
        mean_a,
        mean_b,
    })
}

/// Effective dead-pulse counts `N(1) = N_d`,
/// `N(i) = N(i-1) - (1 - (1-p)^{N(i-1)+1}) / ((2-p) p)`, floored at zero.
/// Once an entry reaches zero the remaining detectors add no deadtime.
pub fn pulsed_effective_deadtimes(
    p: f64,
    dead_pulses: DeadPulseCount,
    n: usize,
) -> Result<EffectiveDeadtimeTable> {
    check_probability(p)?;
    check_count(n)?;
    if p == 0.0 {
        return Err(invalid("pulsed effective deadtimes need p > 0"));
    }
    if dead_pulses.get() == 0 {
        return Err(invalid("pulsed effective deadtimes need N_d >= 1"));
    }
    let nd = f64::from(dead_pulses);
    let mut values = Vec::with_capacity(n);
    values.push(nd);
    let scale = (2.0 - p) * p;
    for _ in 1..n {
        let prev = *values.last().unwrap();
        let next = if prev > 0.0 {
            prev - survival_real(p, prev + 1.0) / scale
        } else {
            0.0
        };
        // N_d = 1 lands on zero analytically; rounding leaves ~1e-17
        values.push(if next <= ZERO_SNAP * nd { 0.0 } else { next });
    }
    Ok(EffectiveDeadtimeTable { values })
}

const ZERO_SNAP: f64 = 1e-12;

/// `1 - (1-p)^x` for real `x`.
fn survival_real(p: f64, x: f64) -> f64 {
    if p >= 1.0 {
        1.0
    } else {
        -(x * (-p).ln_1p()).exp_m1()
    }
}

/// Multiplexed DTF for a pulsed source. Mean counts are per pulse of the
/// incident train; multiply by `nu * T` (see [`CountBreakdown::scaled`]) for
/// a window of `T` seconds.
pub fn pulsed_multiplexed_dtf(
    p: f64,
    dead_pulses: DeadPulseCount,
    n: usize,
) -> Result<MultiplexedDtf> {
    check_probability(p)?;
    check_count(n)?;
    if p == 0.0 || dead_pulses.get() == 0 {
        let mut counts = vec![0.0; n];
        counts[0] = p;
        return Ok(MultiplexedDtf {
            dtf: 0.0,
            counts: CountBreakdown::new(counts),
        });
    }
    let table = pulsed_effective_deadtimes(p, dead_pulses, n)?;
    Ok(chain_counts(p, p, table.values()))
}

/// Passive splitter: `1 - 1/(1 + p N_d / n)`.
pub fn pulsed_tree_dtf(p: f64, dead_pulses: DeadPulseCount, n: usize) -> Result<f64> {
    check_probability(p)?;
    check_count(n)?;
    Ok(saturation(p * f64::from(dead_pulses) / n as f64))
}

/// Single detector with deadtime `t_d / n`: `1 - 1/(1 + p Int(nu t_d / n))`.
/// Exactly zero once `t_d / n` drops below the pulse period.
pub fn pulsed_reduced_dtf(p: f64, nu: f64, deadtime: f64, n: usize) -> Result<f64> {
    check_probability(p)?;
    check_deadtime(deadtime)?;
    check_count(n)?;
    let reduced = dead_pulse_count(nu, deadtime / n as f64)?;
    pulsed_single_dtf(p, reduced)
}
