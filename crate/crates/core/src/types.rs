//! Domain types shared by the analytic engine, the simulators and the solver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Poisson (CW) photon source with mean rate in photons/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwSource {
    rate: f64,
}

impl CwSource {
    pub fn new(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(invalid(format!(
                "photon rate must be finite and >= 0, got {rate}"
            )));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Pulsed source: repetition rate in Hz and the probability that a live
/// detector fires on any one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsedSource {
    rep_rate: f64,
    p_event: f64,
}

impl PulsedSource {
    pub fn new(rep_rate: f64, p_event: f64) -> Result<Self> {
        if !rep_rate.is_finite() || rep_rate <= 0.0 {
            return Err(invalid(format!(
                "repetition rate must be > 0, got {rep_rate}"
            )));
        }
        check_probability(p_event)?;
        Ok(Self { rep_rate, p_event })
    }

    pub fn rep_rate(&self) -> f64 {
        self.rep_rate
    }

    pub fn p_event(&self) -> f64 {
        self.p_event
    }

    /// Mean incident event rate `p * nu` in events/s.
    pub fn event_rate(&self) -> f64 {
        self.p_event * self.rep_rate
    }

    pub fn dead_pulses(&self, deadtime: f64) -> Result<DeadPulseCount> {
        dead_pulse_count(self.rep_rate, deadtime)
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Incident light: CW Poisson or pulsed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Cw(CwSource),
    Pulsed(PulsedSource),
}

/// How the switch picks a detector for the next photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SwitchPolicy {
    /// Always the lowest-index live detector.
    #[default]
    SequentialPriority,
}

/// Ordered pool of detectors behind the switch. Deadtimes are non-extending
/// and given in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorPool {
    deadtimes: Vec<f64>,
    policy: SwitchPolicy,
}

impl DetectorPool {
    pub fn new(deadtimes: Vec<f64>) -> Result<Self> {
        if deadtimes.is_empty() {
            return Err(invalid("detector pool must contain at least one detector"));
        }
        if let Some(bad) = deadtimes.iter().find(|t| !t.is_finite() || **t <= 0.0) {
            return Err(invalid(format!(
                "every deadtime must be finite and > 0, got {bad}"
            )));
        }
        Ok(Self {
            deadtimes,
            policy: SwitchPolicy::SequentialPriority,
        })
    }

    /// `n` identical detectors with deadtime `deadtime`.
    pub fn homogeneous(deadtime: f64, n: usize) -> Result<Self> {
        Self::new(vec![deadtime; n])
    }

    pub fn deadtimes(&self) -> &[f64] {
        &self.deadtimes
    }

    pub fn policy(&self) -> SwitchPolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.deadtimes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deadtimes.is_empty()
    }

    /// The common deadtime if all detectors share it.
    pub fn common_deadtime(&self) -> Option<f64> {
        let first = self.deadtimes[0];
        self.deadtimes.iter().all(|&t| t == first).then_some(first)
    }
}

/// Number of pulses a detector stays dead after firing, `Int(nu * T_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeadPulseCount(u64);

impl DeadPulseCount {
    pub const fn new(n: u64) -> Self {
        Self(n)
    }

    pub const fn get(self) -> u64 {
        self.0
    }
}

impl From<DeadPulseCount> for f64 {
    fn from(n: DeadPulseCount) -> f64 {
        n.0 as f64
    }
}

const INTEGER_SNAP: f64 = 1e-9;

/// Integer part of `nu * t_d`. Products within 1e-9 (relative) of an integer
/// snap to it first, so `1e8 * 50e-9` is 5 and not 4.
pub fn dead_pulse_count(nu: f64, t_d: f64) -> Result<DeadPulseCount> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(invalid(format!(
            "repetition rate must be finite and > 0, got {nu}"
        )));
    }
    if !t_d.is_finite() || t_d <= 0.0 {
        return Err(invalid(format!(
            "deadtime must be finite and > 0, got {t_d}"
        )));
    }
    let x = nu * t_d;
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(invalid(format!("nu * t_d = {x} overflows a pulse count")));
    }
    let nearest = x.round();
    let n = if nearest > 0.0 && (x - nearest).abs() <= INTEGER_SNAP * nearest {
        nearest
    } else {
        x.floor()
    };
    Ok(DeadPulseCount(n as u64))
}

/// Monte Carlo DTF with batch error bar and per-detector counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtfEstimate {
    pub dtf: f64,
    pub std_err: f64,
    pub total_events: u64,
    pub missed_events: u64,
    pub per_detector_counts: Vec<u64>,
}

impl DtfEstimate {
    /// Builds an estimate from raw counts; `std_err` is left at zero.
    /// An empty run reports a DTF of 0 with `total_events == 0`.
    pub fn from_counts(per_detector_counts: Vec<u64>, missed_events: u64) -> Self {
        let total_events = per_detector_counts.iter().sum::<u64>() + missed_events;
        let dtf = if total_events == 0 {
            0.0
        } else {
            missed_events as f64 / total_events as f64
        };
        Self {
            dtf,
            std_err: 0.0,
            total_events,
            missed_events,
            per_detector_counts,
        }
    }

    pub fn detected_events(&self) -> u64 {
        self.total_events - self.missed_events
    }

    pub fn is_empty(&self) -> bool {
        self.total_events == 0
    }
}

/// Reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id mapped onto the cipher's stream
/// counter, so distinct ids give independent sequences and the same pair
/// reproduces the same sequence on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream for sub-task `index` (a batch, a solver probe). The
    /// child key mixes both parent fields, so children of different parents
    /// never coincide with each other or with ordinary `(seed, id)` pairs.
    pub fn fork(&self, index: u64) -> Self {
        let key = splitmix64(
            splitmix64(self.seed) ^ self.stream_id.rotate_left(32) ^ 0xA076_1D64_78BD_642F,
        );
        Self::new(key, index)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
