//! Monte Carlo engines: draw an event stream, route it through the detector
//! pool, count what is lost.
//!
//! Two equivalent routings are provided. [`multipass_cascade`] filters the
//! whole event list detector by detector: D1 takes what it can, the skipped
//! events form D2's input, and so on; whatever survives the last detector is
//! missed. [`OnlineCascade`] routes each event on arrival to the lowest-index
//! live detector. The online form is the production path; the multi-pass
//! form is kept as a cross-check.

use std::ops::Add;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{
    check_probability, dead_pulse_count, DetectorPool, DtfEstimate, RandomStream, Source,
};

/// Photon arrival times in seconds, strictly increasing, starting after 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwEventStream {
    pub arrival_times: Vec<f64>,
    /// Time of the last arrival.
    pub window: f64,
}

/// Indices of pulses that carry an event, strictly increasing, all below
/// `n_pulses`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulsedEventStream {
    pub event_pulse_indices: Vec<u64>,
    pub n_pulses: u64,
}

/// Endless Poisson arrival process: cumulative sums of exponential gaps.
#[derive(Debug, Clone)]
pub struct CwArrivals {
    rng: ChaCha8Rng,
    gaps: Exp<f64>,
    now: f64,
}

impl CwArrivals {
    pub fn new(rate: f64, stream: RandomStream) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(invalid(format!(
                "photon rate must be finite and > 0, got {rate}"
            )));
        }
        let gaps = Exp::new(rate).map_err(|e| invalid(e.to_string()))?;
        Ok(Self {
            rng: stream.rng(),
            gaps,
            now: 0.0,
        })
    }
}

impl Iterator for CwArrivals {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        loop {
            let next = self.now + self.gaps.sample(&mut self.rng);
            // a gap below one ulp of the clock would repeat a timestamp
            if next > self.now {
                self.now = next;
                return Some(next);
            }
        }
    }
}

/// Event pulses of a pulsed source: each pulse independently carries an
/// event with probability `p`, drawn as geometric gaps between events.
#[derive(Debug, Clone)]
pub struct PulsedEvents {
    rng: ChaCha8Rng,
    gaps: Option<Geometric>,
    cursor: u64,
    n_pulses: u64,
}

impl PulsedEvents {
    pub fn new(p: f64, n_pulses: u64, stream: RandomStream) -> Result<Self> {
        check_probability(p)?;
        let gaps = if p > 0.0 {
            Some(Geometric::new(p).map_err(|e| invalid(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            rng: stream.rng(),
            gaps,
            cursor: 0,
            n_pulses,
        })
    }
}

impl Iterator for PulsedEvents {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let gaps = self.gaps.as_ref()?;
        if self.cursor >= self.n_pulses {
            return None;
        }
        let index = self.cursor.saturating_add(gaps.sample(&mut self.rng));
        if index >= self.n_pulses {
            self.cursor = self.n_pulses;
            return None;
        }
        self.cursor = index + 1;
        Some(index)
    }
}

pub fn gen_cw_stream(rate: f64, n_photons: usize, stream: RandomStream) -> Result<CwEventStream> {
    if n_photons == 0 {
        return Err(invalid("need at least one photon"));
    }
    let arrival_times: Vec<f64> = CwArrivals::new(rate, stream)?.take(n_photons).collect();
    let window = *arrival_times.last().unwrap();
    Ok(CwEventStream {
        arrival_times,
        window,
    })
}

pub fn gen_pulsed_stream(p: f64, n_pulses: u64, stream: RandomStream) -> Result<PulsedEventStream> {
    if n_pulses == 0 {
        return Err(invalid("need at least one pulse"));
    }
    Ok(PulsedEventStream {
        event_pulse_indices: PulsedEvents::new(p, n_pulses, stream)?.collect(),
        n_pulses,
    })
}

/// Clock type for the cascades: seconds (`f64`) or pulse indices (`u64`).
pub trait Tick: Copy + PartialOrd + Add<Output = Self> + Default {}

impl Tick for f64 {}
impl Tick for u64 {}

/// Switch that hands each event to the lowest-index live detector.
///
/// `holds[i]` is how long detector `i` stays unavailable after firing: its
/// deadtime for CW, `N_d + 1` pulses for pulsed sources (a detector firing
/// at pulse `k` is live again at pulse `k + N_d + 1`). All detectors start
/// live. Events must be offered in non-decreasing order.
#[derive(Debug, Clone)]
pub struct OnlineCascade<T> {
    holds: Vec<T>,
    next_free: Vec<T>,
    counts: Vec<u64>,
    missed: u64,
}

impl<T: Tick> OnlineCascade<T> {
    pub fn new(holds: Vec<T>) -> Self {
        let n = holds.len();
        Self {
            holds,
            next_free: vec![T::default(); n],
            counts: vec![0; n],
            missed: 0,
        }
    }

    /// Routes one event; returns the detector that registered it, if any.
    pub fn offer(&mut self, at: T) -> Option<usize> {
        for (i, free) in self.next_free.iter_mut().enumerate() {
            if at >= *free {
                *free = at + self.holds[i];
                self.counts[i] += 1;
                return Some(i);
            }
        }
        self.missed += 1;
        None
    }

    pub fn offer_all(&mut self, events: impl IntoIterator<Item = T>) {
        for t in events {
            self.offer(t);
        }
    }

    pub fn estimate(&self) -> DtfEstimate {
        DtfEstimate::from_counts(self.counts.clone(), self.missed)
    }
}

/// List-filtering form of the cascade: each detector in turn scans the
/// events the previous detectors skipped.
pub fn multipass_cascade<T: Tick>(events: &[T], holds: &[T]) -> DtfEstimate {
    let mut remaining = events.to_vec();
    let mut counts = Vec::with_capacity(holds.len());
    for &hold in holds {
        let mut skipped = Vec::new();
        let mut free: Option<T> = None;
        let mut detected = 0u64;
        for &t in &remaining {
            if free.is_none_or(|f| t >= f) {
                free = Some(t + hold);
                detected += 1;
            } else {
                skipped.push(t);
            }
        }
        counts.push(detected);
        remaining = skipped;
    }
    DtfEstimate::from_counts(counts, remaining.len() as u64)
}

/// Passive 1-to-N splitter: each event goes to a uniformly random detector
/// and is lost if that detector is dead.
pub fn passive_split<T: Tick, R: Rng>(
    events: impl IntoIterator<Item = T>,
    holds: &[T],
    rng: &mut R,
) -> DtfEstimate {
    let mut next_free = vec![T::default(); holds.len()];
    let mut counts = vec![0u64; holds.len()];
    let mut missed = 0u64;
    for t in events {
        let i = rng.random_range(0..holds.len());
        if t >= next_free[i] {
            next_free[i] = t + holds[i];
            counts[i] += 1;
        } else {
            missed += 1;
        }
    }
    DtfEstimate::from_counts(counts, missed)
}

fn pulse_holds(pool: &DetectorPool, nu: f64) -> Result<Vec<u64>> {
    pool.deadtimes()
        .iter()
        .map(|&t| dead_pulse_count(nu, t).map(|n| n.get() + 1))
        .collect()
}

/// Routes a CW stream through the pool (first-live switching).
pub fn cascade_cw(stream: &CwEventStream, pool: &DetectorPool) -> DtfEstimate {
    let mut cascade = OnlineCascade::new(pool.deadtimes().to_vec());
    cascade.offer_all(stream.arrival_times.iter().copied());
    cascade.estimate()
}

/// Routes a pulsed stream through the pool. Each detector's dead window is
/// `Int(nu * T_d)` pulses, so heterogeneous pools are allowed.
pub fn cascade_pulsed(
    stream: &PulsedEventStream,
    pool: &DetectorPool,
    nu: f64,
) -> Result<DtfEstimate> {
    let mut cascade = OnlineCascade::new(pulse_holds(pool, nu)?);
    cascade.offer_all(stream.event_pulse_indices.iter().copied());
    Ok(cascade.estimate())
}

/// How events reach the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Routing {
    /// Active switch, lowest-index live detector first.
    #[default]
    FirstLive,
    /// Passive beamsplitter tree.
    PassiveSplit,
}

/// One Monte Carlo run. `n_events` counts photons for CW sources and pulses
/// for pulsed sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub source: Source,
    pub pool: DetectorPool,
    pub n_events: u64,
    pub batches: u64,
    pub routing: Routing,
}

/// Runs `batches` independent sub-runs (fresh detectors, sub-stream
/// `stream.fork(b)`), pools their counts and reports the standard error of
/// the mean batch DTF.
pub fn estimate_dtf(config: &McConfig, stream: RandomStream) -> Result<DtfEstimate> {
    if config.batches < 2 {
        return Err(invalid("need at least two batches for an error bar"));
    }
    if config.n_events < config.batches {
        return Err(invalid(format!(
            "n_events = {} is smaller than batches = {}",
            config.n_events, config.batches
        )));
    }
    let n = config.pool.len();
    let mut counts = vec![0u64; n];
    let mut missed = 0u64;
    let mut batch_dtfs = Vec::with_capacity(config.batches as usize);
    let base = config.n_events / config.batches;
    let extra = config.n_events % config.batches;
    for b in 0..config.batches {
        let size = base + u64::from(b < extra);
        let run = run_batch(config, size, stream.fork(b))?;
        for (acc, c) in counts.iter_mut().zip(&run.per_detector_counts) {
            *acc += c;
        }
        missed += run.missed_events;
        batch_dtfs.push(run.dtf);
    }
    let mut estimate = DtfEstimate::from_counts(counts, missed);
    estimate.std_err = standard_error(&batch_dtfs);
    Ok(estimate)
}

fn run_batch(config: &McConfig, size: u64, stream: RandomStream) -> Result<DtfEstimate> {
    match config.source {
        Source::Cw(src) => {
            if src.rate() == 0.0 {
                return Ok(DtfEstimate::from_counts(vec![0; config.pool.len()], 0));
            }
            let arrivals = CwArrivals::new(src.rate(), stream)?.take(size as usize);
            let holds = config.pool.deadtimes().to_vec();
            Ok(route(config.routing, arrivals, holds, stream))
        }
        Source::Pulsed(src) => {
            let events = PulsedEvents::new(src.p_event(), size, stream)?;
            let holds = pulse_holds(&config.pool, src.rep_rate())?;
            Ok(route(config.routing, events, holds, stream))
        }
    }
}

fn route<T: Tick>(
    routing: Routing,
    events: impl Iterator<Item = T>,
    holds: Vec<T>,
    stream: RandomStream,
) -> DtfEstimate {
    match routing {
        Routing::FirstLive => {
            let mut cascade = OnlineCascade::new(holds);
            cascade.offer_all(events);
            cascade.estimate()
        }
        Routing::PassiveSplit => {
            // routing choices draw from their own sub-stream
            let mut rng = stream.fork(u64::MAX).rng();
            passive_split(events, &holds, &mut rng)
        }
    }
}

fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{CwSource, PulsedSource};

    const TD: f64 = 50e-9;

    #[test]
    fn cw_stream_is_deterministic_and_increasing() {
        let s = RandomStream::new(11, 3);
        let a = gen_cw_stream(1e6, 1000, s).unwrap();
        let b = gen_cw_stream(1e6, 1000, s).unwrap();
        assert_eq!(a, b);
        assert!(a.arrival_times.windows(2).all(|w| w[0] < w[1]));
        assert!(a.arrival_times[0] > 0.0);
        assert_eq!(a.window, *a.arrival_times.last().unwrap());
        assert_ne!(
            a,
            gen_cw_stream(1e6, 1000, RandomStream::new(11, 4)).unwrap()
        );
        assert!(gen_cw_stream(0.0, 10, s).is_err());
        assert!(gen_cw_stream(1.0, 0, s).is_err());
    }

    #[test]
    fn pulsed_stream_edges() {
        let s = RandomStream::new(5, 0);
        let all = gen_pulsed_stream(1.0, 100, s).unwrap();
        assert_eq!(all.event_pulse_indices, (0..100).collect::<Vec<_>>());
        assert!(gen_pulsed_stream(0.0, 100, s)
            .unwrap()
            .event_pulse_indices
            .is_empty());
        let half = gen_pulsed_stream(0.5, 1000, s).unwrap();
        assert!(half.event_pulse_indices.windows(2).all(|w| w[0] < w[1]));
        assert!(half.event_pulse_indices.iter().all(|&i| i < 1000));
        assert!(gen_pulsed_stream(1.5, 10, s).is_err());
    }

    #[test]
    fn cascade_small_cases() {
        let pool1 = DetectorPool::homogeneous(TD, 1).unwrap();
        let pool3 = DetectorPool::homogeneous(TD, 3).unwrap();
        let single = CwEventStream {
            arrival_times: vec![1e-6],
            window: 1e-6,
        };
        assert_eq!(cascade_cw(&single, &pool3).dtf, 0.0);
        let pair = CwEventStream {
            arrival_times: vec![1e-6, 1e-6 + 10e-9],
            window: 1e-6 + 10e-9,
        };
        assert_eq!(cascade_cw(&pair, &pool1).dtf, 0.5);
        assert_eq!(cascade_cw(&pair, &pool3).dtf, 0.0);
        // arrival exactly one deadtime later is detected
        let edge = CwEventStream {
            arrival_times: vec![0.5, 1.0],
            window: 1.0,
        };
        let half = DetectorPool::homogeneous(0.5, 1).unwrap();
        assert_eq!(cascade_cw(&edge, &half).missed_events, 0);
        let empty = CwEventStream {
            arrival_times: vec![],
            window: 0.0,
        };
        let e = cascade_cw(&empty, &pool1);
        assert!(e.is_empty());
        assert_eq!(e.dtf, 0.0);
    }

    #[test]
    fn pulsed_periodic_orbits() {
        let every = PulsedEventStream {
            event_pulse_indices: (0..1000).collect(),
            n_pulses: 1000,
        };
        let nu = 82e6;
        for (n, expected) in [(1, 0.8), (2, 0.6), (3, 0.4), (4, 0.2), (5, 0.0), (6, 0.0)] {
            let pool = DetectorPool::homogeneous(TD, n).unwrap();
            let est = cascade_pulsed(&every, &pool, nu).unwrap();
            assert_eq!(est.dtf, expected, "N = {n}");
        }
    }

    #[test]
    fn heterogeneous_pulsed_pool() {
        // N_d = 1 and N_d = 0: the fast detector never needs help at p = 1
        let pool = DetectorPool::new(vec![12.5e-9, 5e-9]).unwrap();
        let every = PulsedEventStream {
            event_pulse_indices: (0..100).collect(),
            n_pulses: 100,
        };
        let est = cascade_pulsed(&every, &pool, 82e6).unwrap();
        assert_eq!(est.missed_events, 0);
        assert_eq!(est.per_detector_counts, vec![50, 50]);
    }

    #[test]
    fn streaming_matches_batch() {
        let s = gen_cw_stream(2e7, 5000, RandomStream::new(1, 1)).unwrap();
        let pool = DetectorPool::homogeneous(TD, 3).unwrap();
        let whole = cascade_cw(&s, &pool);
        let mut online = OnlineCascade::new(pool.deadtimes().to_vec());
        let (head, tail) = s.arrival_times.split_at(1234);
        online.offer_all(head.iter().copied());
        let resumed = online.clone();
        let mut online = resumed;
        online.offer_all(tail.iter().copied());
        assert_eq!(online.estimate(), whole);
    }

    #[test]
    fn estimate_is_deterministic() {
        let cfg = McConfig {
            source: Source::Cw(CwSource::new(2e7).unwrap()),
            pool: DetectorPool::homogeneous(TD, 2).unwrap(),
            n_events: 20_000,
            batches: 4,
            routing: Routing::FirstLive,
        };
        let s = RandomStream::new(9, 2);
        let a = estimate_dtf(&cfg, s).unwrap();
        assert_eq!(a, estimate_dtf(&cfg, s).unwrap());
        assert_eq!(a.total_events, 20_000);
        assert_eq!(
            a.per_detector_counts.iter().sum::<u64>() + a.missed_events,
            a.total_events
        );
        assert!(a.std_err > 0.0);
    }

    #[test]
    fn estimate_rejects_bad_config() {
        let mut cfg = McConfig {
            source: Source::Pulsed(PulsedSource::new(82e6, 0.5).unwrap()),
            pool: DetectorPool::homogeneous(TD, 2).unwrap(),
            n_events: 10,
            batches: 1,
            routing: Routing::FirstLive,
        };
        assert!(estimate_dtf(&cfg, RandomStream::new(0, 0)).is_err());
        cfg.batches = 20;
        assert!(estimate_dtf(&cfg, RandomStream::new(0, 0)).is_err());
    }

    #[test]
    fn zero_probability_pulsed_estimate() {
        let cfg = McConfig {
            source: Source::Pulsed(PulsedSource::new(82e6, 0.0).unwrap()),
            pool: DetectorPool::homogeneous(TD, 2).unwrap(),
            n_events: 10_000,
            batches: 5,
            routing: Routing::FirstLive,
        };
        let e = estimate_dtf(&cfg, RandomStream::new(3, 0)).unwrap();
        assert_eq!(e.dtf, 0.0);
        assert_eq!(e.std_err, 0.0);
    }
}
