//! Probability laws behind the analytic engine and the pulsed simulator:
//! binomial counts, geometric waiting times (plain and generalized), and the
//! inter-arrival laws of consecutive detections in CW and pulsed operation.

use statrs::function::factorial::ln_binomial;

use crate::error::{invalid, Result};
use crate::types::{check_probability, DeadPulseCount};

/// `C(trials, n) p^n (1-p)^(trials-n)`, evaluated in log space.
pub fn binomial_pmf(n: u64, trials: u64, p: f64) -> Result<f64> {
    check_probability(p)?;
    if n > trials {
        return Err(invalid(format!(
            "binomial: n = {n} exceeds trials = {trials}"
        )));
    }
    if p == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if n == trials { 1.0 } else { 0.0 });
    }
    let ln = ln_binomial(trials, n) + n as f64 * p.ln() + (trials - n) as f64 * (-p).ln_1p();
    Ok(ln.exp())
}

fn check_positive_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("probability must lie in (0, 1], got {p}")));
    }
    Ok(())
}

/// Probability that the first event lands on pulse `n` (n >= 1).
pub fn geometric_wait_pmf(n: u64, p: f64) -> Result<f64> {
    check_positive_probability(p)?;
    if n < 1 {
        return Err(invalid("geometric wait: n must be >= 1"));
    }
    Ok(p * powi_u64(1.0 - p, n - 1))
}

/// Probability that the `k`-th event lands on pulse `n`: `p * B(k-1 | n-1, p)`.
pub fn generalized_geometric_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    check_positive_probability(p)?;
    if k < 1 {
        return Err(invalid("generalized geometric: k must be >= 1"));
    }
    if n < k {
        return Err(invalid(format!("generalized geometric: n = {n} < k = {k}")));
    }
    Ok(p * binomial_pmf(k - 1, n - 1, p)?)
}

/// `[sum_{n=k}^{N} T_k(n) - sum_{n=k+1}^{N} T_{k+1}(n)] - B(k | N, p)`.
///
/// The difference of "at least k" and "at least k+1" events in `N` pulses is
/// exactly k events, so this is zero up to rounding.
pub fn geometric_binomial_identity_residual(k: u64, n_pulses: u64, p: f64) -> Result<f64> {
    if k < 1 || k > n_pulses {
        return Err(invalid(format!(
            "identity residual needs 1 <= k <= N, got k = {k}, N = {n_pulses}"
        )));
    }
    let at_least_k: f64 = (k..=n_pulses)
        .map(|n| generalized_geometric_pmf(n, k, p))
        .sum::<Result<f64>>()?;
    let at_least_next: f64 = (k + 1..=n_pulses)
        .map(|n| generalized_geometric_pmf(n, k + 1, p))
        .sum::<Result<f64>>()?;
    Ok(at_least_k - at_least_next - binomial_pmf(k, n_pulses, p)?)
}

fn powi_u64(base: f64, exp: u64) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exp as f64),
    }
}

/// Densities of the two intervals that follow a detection by D1 under a
/// Poisson source with rate `rate` and deadtime `deadtime`:
///
/// * `next_count`: time to D1's next count, which happens at the first
///   arrival after recovery, `f(x) = rate * exp(-rate (x - T_d))` for `x > T_d`;
/// * `overlap`: time to the first arrival inside D1's deadtime (the one D2
///   takes), an exponential truncated to `(0, T_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwGapDensities {
    rate: f64,
    deadtime: f64,
    overlap_norm: f64,
}

pub fn cw_interarrival_densities(rate: f64, deadtime: f64) -> Result<CwGapDensities> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(invalid(format!("rate must be finite and > 0, got {rate}")));
    }
    if !deadtime.is_finite() || deadtime <= 0.0 {
        return Err(invalid(format!(
            "deadtime must be finite and > 0, got {deadtime}"
        )));
    }
    Ok(CwGapDensities {
        rate,
        deadtime,
        overlap_norm: -(-rate * deadtime).exp_m1(),
    })
}

impl CwGapDensities {
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn deadtime(&self) -> f64 {
        self.deadtime
    }

    pub fn next_count(&self, x: f64) -> f64 {
        if x > self.deadtime {
            self.rate * (-self.rate * (x - self.deadtime)).exp()
        } else {
            0.0
        }
    }

    pub fn overlap(&self, x: f64) -> f64 {
        if x > 0.0 && x < self.deadtime {
            self.rate * (-self.rate * x).exp() / self.overlap_norm
        } else {
            0.0
        }
    }
}

/// Pulsed counterparts of [`CwGapDensities`], counted in pulses. `next_count`
/// is supported on `n >= N_d + 1`, `overlap` on `1 <= n <= N_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsedGapPmfs {
    p: f64,
    dead_pulses: u64,
    overlap_norm: f64,
}

pub fn pulsed_interarrival_pmfs(p: f64, dead_pulses: DeadPulseCount) -> Result<PulsedGapPmfs> {
    check_positive_probability(p)?;
    if dead_pulses.get() == 0 {
        return Err(invalid(
            "pulsed gap laws need at least one dead pulse (no overlap interval otherwise)",
        ));
    }
    Ok(PulsedGapPmfs {
        p,
        dead_pulses: dead_pulses.get(),
        overlap_norm: survival(p, dead_pulses.get()),
    })
}

/// `1 - (1-p)^n` without cancellation at small `p`.
fn survival(p: f64, n: u64) -> f64 {
    if p >= 1.0 {
        1.0
    } else {
        -(n as f64 * (-p).ln_1p()).exp_m1()
    }
}

impl PulsedGapPmfs {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dead_pulses(&self) -> u64 {
        self.dead_pulses
    }

    pub fn next_count(&self, n: u64) -> f64 {
        if n > self.dead_pulses {
            self.p * powi_u64(1.0 - self.p, n - self.dead_pulses - 1)
        } else {
            0.0
        }
    }

    pub fn overlap(&self, n: u64) -> f64 {
        if (1..=self.dead_pulses).contains(&n) {
            self.p * powi_u64(1.0 - self.p, n - 1) / self.overlap_norm
        } else {
            0.0
        }
    }

    /// Mass of `next_count` on `n >= from`, by geometric series.
    pub fn next_count_tail(&self, from: u64) -> f64 {
        let start = from.max(self.dead_pulses + 1);
        powi_u64(1.0 - self.p, start - self.dead_pulses - 1)
    }

    /// Total mass of `next_count`; 1 by construction.
    pub fn next_count_mass(&self) -> f64 {
        self.next_count_tail(self.dead_pulses + 1)
    }

    /// Total mass of `overlap`, as the closed-form finite geometric sum.
    pub fn overlap_mass(&self) -> f64 {
        survival(self.p, self.dead_pulses) / self.overlap_norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn binomial_examples() {
        assert_abs_diff_eq!(binomial_pmf(2, 3, 0.5).unwrap(), 0.375, epsilon = 1e-15);
        assert_eq!(binomial_pmf(0, 7, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(7, 7, 1.0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(3, 7, 1.0).unwrap(), 0.0);
        assert!(binomial_pmf(4, 3, 0.5).is_err());
        assert!(binomial_pmf(1, 3, 1.5).is_err());
    }

    #[test]
    fn binomial_large_trials_stays_finite() {
        let total: f64 = (0..=5000)
            .map(|n| binomial_pmf(n, 5000, 0.3).unwrap())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn geometric_examples() {
        assert_eq!(geometric_wait_pmf(1, 0.37).unwrap(), 0.37);
        assert_abs_diff_eq!(geometric_wait_pmf(3, 0.5).unwrap(), 0.125, epsilon = 1e-15);
        assert_eq!(geometric_wait_pmf(1, 1.0).unwrap(), 1.0);
        assert_eq!(geometric_wait_pmf(4, 1.0).unwrap(), 0.0);
        assert!(geometric_wait_pmf(0, 0.5).is_err());
        assert!(geometric_wait_pmf(2, 0.0).is_err());
    }

    #[test]
    fn generalized_geometric_examples() {
        for n in 1..20 {
            for p in [0.1, 0.5, 0.9, 1.0] {
                assert_abs_diff_eq!(
                    generalized_geometric_pmf(n, 1, p).unwrap(),
                    geometric_wait_pmf(n, p).unwrap(),
                    epsilon = 1e-15
                );
            }
        }
        assert_abs_diff_eq!(
            generalized_geometric_pmf(3, 2, 0.5).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            generalized_geometric_pmf(2, 2, 0.5).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(generalized_geometric_pmf(2, 3, 0.5).is_err());
    }

    #[test]
    fn identity_residual_examples() {
        assert!(
            geometric_binomial_identity_residual(2, 3, 0.5)
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(
            geometric_binomial_identity_residual(1, 5, 0.3)
                .unwrap()
                .abs()
                < 1e-12
        );
        for n in 1..=6 {
            for k in 1..=n {
                assert_eq!(
                    geometric_binomial_identity_residual(k, n, 1.0).unwrap(),
                    0.0
                );
            }
        }
        assert!(geometric_binomial_identity_residual(0, 3, 0.5).is_err());
        assert!(geometric_binomial_identity_residual(4, 3, 0.5).is_err());
    }

    #[test]
    fn cw_density_support() {
        let f = cw_interarrival_densities(2e6, 50e-9).unwrap();
        assert_eq!(f.next_count(50e-9), 0.0);
        assert_eq!(f.next_count(10e-9), 0.0);
        assert!(f.next_count(50.0001e-9) > 0.0);
        assert_eq!(f.overlap(0.0), 0.0);
        assert_eq!(f.overlap(50e-9), 0.0);
        assert_eq!(f.overlap(60e-9), 0.0);
        assert!(cw_interarrival_densities(0.0, 50e-9).is_err());
        assert!(cw_interarrival_densities(1.0, 0.0).is_err());
    }

    #[test]
    fn pulsed_pmf_normalization() {
        for p in [0.01, 0.3, 0.5, 0.99, 1.0] {
            for nd in [1, 4, 20] {
                let g = pulsed_interarrival_pmfs(p, DeadPulseCount::new(nd)).unwrap();
                assert_abs_diff_eq!(g.next_count_mass(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(g.overlap_mass(), 1.0, epsilon = 1e-12);
                let direct: f64 = (1..=nd).map(|n| g.overlap(n)).sum();
                assert_abs_diff_eq!(direct, 1.0, epsilon = 1e-12);
                assert_eq!(g.next_count(nd), 0.0);
                assert_eq!(g.overlap(nd + 1), 0.0);
            }
        }
        let g = pulsed_interarrival_pmfs(1.0, DeadPulseCount::new(4)).unwrap();
        assert_eq!(g.next_count(5), 1.0);
        assert_eq!(g.next_count(6), 0.0);
        assert!(pulsed_interarrival_pmfs(0.5, DeadPulseCount::new(0)).is_err());
        assert!(pulsed_interarrival_pmfs(0.0, DeadPulseCount::new(4)).is_err());
    }
}
