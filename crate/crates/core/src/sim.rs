//! Exact event-driven simulation of the `N`-walk Fleming-Viot system.
//!
//! Events arrive on one aggregate exponential clock of rate `N` (each walk
//! carries a unit-rate clock). At each event a walk is drawn uniformly and
//! steps right with probability `p`, left otherwise. A left step from site 1
//! is resolved inside the same event: the walk is placed on the current site
//! of one of the other `N - 1` walks, drawn uniformly. Site 0 is never
//! observable.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Configuration, RngStream, Schedule, WalkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StepRight,
    StepLeft,
    SelectionJump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub walk: usize,
    pub kind: EventKind,
    /// Walk whose site was copied, for selection jumps.
    pub target: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Right,
    Left,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// SHA-256 over the binary encoding of every event.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.events {
            h.update(e.time.to_bits().to_le_bytes());
            h.update((e.walk as u64).to_le_bytes());
            h.update([e.kind as u8]);
            h.update(e.target.map_or(u64::MAX, |t| t as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Strictly increasing times, and selection targets distinct from the
    /// jumping walk.
    pub fn is_well_formed(&self) -> bool {
        self.events.windows(2).all(|w| w[0].time < w[1].time)
            && self.events.iter().all(|e| match e.kind {
                EventKind::SelectionJump => e.target.is_some_and(|t| t != e.walk),
                _ => e.target.is_none(),
            })
    }
}

/// Histogram of occupied sites, giving O(1) updates of the maximum under
/// nearest-neighbour moves and selection jumps onto occupied sites.
#[derive(Debug, Clone)]
struct MaxTracker {
    counts: Vec<u32>,
    max: i64,
}

impl MaxTracker {
    fn new(positions: &[i64]) -> Self {
        let max = *positions.iter().max().expect("non-empty");
        let mut counts = vec![0u32; max as usize + 2];
        for &x in positions {
            counts[x as usize] += 1;
        }
        Self { counts, max }
    }

    fn add(&mut self, x: i64) {
        let i = x as usize;
        if i >= self.counts.len() {
            self.counts.resize((i + 1).max(2 * self.counts.len()), 0);
        }
        self.counts[i] += 1;
        if x > self.max {
            self.max = x;
        }
    }

    fn remove(&mut self, x: i64) {
        self.counts[x as usize] -= 1;
        while self.counts[self.max as usize] == 0 {
            self.max -= 1;
        }
    }
}

/// One Fleming-Viot replica. Strictly sequential; owns its random stream.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: WalkParams,
    positions: Vec<i64>,
    time: f64,
    rng: ChaCha8Rng,
    tracker: Option<MaxTracker>,
    jump_counts: Vec<u64>,
    events: u64,
    selection: bool,
}

impl Simulator {
    pub fn new(config: Configuration, params: WalkParams, stream: RngStream) -> Self {
        let positions = config.into_positions();
        Self {
            params,
            tracker: Some(MaxTracker::new(&positions)),
            jump_counts: vec![0; positions.len()],
            positions,
            time: 0.0,
            rng: stream.rng(),
            events: 0,
            selection: true,
        }
    }

    /// Independent walks on Z: left steps from 1 go to 0 and below.
    #[cfg(test)]
    pub(crate) fn without_selection(config: Configuration, params: WalkParams, stream: RngStream) -> Self {
        let mut sim = Self::new(config, params, stream);
        sim.selection = false;
        sim.tracker = None;
        sim
    }

    pub fn params(&self) -> &WalkParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::from_raw(self.positions.clone())
    }

    /// Rightmost position `M(t)`.
    pub fn max(&self) -> i64 {
        match &self.tracker {
            Some(t) => t.max,
            None => *self.positions.iter().max().expect("n >= 2"),
        }
    }

    pub fn jump_counts(&self) -> &[u64] {
        &self.jump_counts
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    /// Restart the clock at 0. Exact by memorylessness; keeps times small so
    /// long runs retain resolution.
    pub fn reset_clock(&mut self) {
        self.time = 0.0;
    }

    /// Apply one move to `walk` at the current time.
    pub fn apply_move(&mut self, walk: usize, mv: Move) -> Event {
        let from = self.positions[walk];
        self.jump_counts[walk] += 1;
        self.events += 1;
        let (to, kind, target) = match mv {
            Move::Right => (from + 1, EventKind::StepRight, None),
            Move::Left if from == 1 && self.selection => {
                let n = self.positions.len();
                let mut j = self.rng.random_range(0..n - 1);
                if j >= walk {
                    j += 1;
                }
                (self.positions[j], EventKind::SelectionJump, Some(j))
            }
            Move::Left => (from - 1, EventKind::StepLeft, None),
        };
        if let Some(t) = &mut self.tracker {
            t.add(to);
            t.remove(from);
        }
        self.positions[walk] = to;
        Event { time: self.time, walk, kind, target }
    }

    fn draw_move(&mut self) -> (usize, Move) {
        let walk = self.rng.random_range(0..self.positions.len());
        let mv = if self.rng.random::<f64>() < self.params.p() {
            Move::Right
        } else {
            Move::Left
        };
        (walk, mv)
    }

    /// Time of the next event after the current one.
    fn draw_next_time(&mut self) -> f64 {
        let rate = self.positions.len() as f64;
        loop {
            let dt: f64 = self.rng.sample::<f64, _>(Exp1) / rate;
            let next = self.time + dt;
            // gaps below the f64 resolution of `time` are redrawn
            if next > self.time {
                return next;
            }
        }
    }

    /// Next event if it falls at or before `horizon`; otherwise park the
    /// clock at `horizon` and return `None`.
    pub fn next_event_before(&mut self, horizon: f64) -> Option<Event> {
        let next = self.draw_next_time();
        if next > horizon {
            self.time = horizon;
            return None;
        }
        self.time = next;
        let (walk, mv) = self.draw_move();
        Some(self.apply_move(walk, mv))
    }

    pub fn next_event(&mut self) -> Event {
        self.next_event_before(f64::INFINITY).expect("unbounded horizon")
    }

    /// Run until `horizon`; returns the number of events.
    pub fn advance_to(&mut self, horizon: f64) -> u64 {
        let start = self.events;
        while self.next_event_before(horizon).is_some() {}
        self.events - start
    }

    /// Run for `duration` time units in chunks of at most `chunk`, resetting
    /// the clock between chunks.
    pub fn advance_by(&mut self, duration: f64, chunk: f64) -> u64 {
        let mut left = duration;
        let mut events = 0;
        while left > 0.0 {
            let step = left.min(chunk);
            self.reset_clock();
            events += self.advance_to(step);
            left -= step;
        }
        events
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    /// Change points of the right-continuous path `t -> M(t)`.
    pub max_path: Vec<(f64, i64)>,
    pub jump_counts: Vec<u64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub config: Configuration,
    pub stats: TrajectoryStats,
    pub log: EventLog,
}

/// Simulate to `horizon`, recording the event log and the path of `M(t)`.
pub fn simulate(
    config: Configuration,
    params: WalkParams,
    horizon: f64,
    stream: RngStream,
) -> Result<SimulationOutcome> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(format!("horizon > 0 required, got {horizon}")));
    }
    let started = Instant::now();
    let mut sim = Simulator::new(config, params, stream);
    let mut log = EventLog::default();
    let mut max_path = vec![(0.0, sim.max())];
    while let Some(e) = sim.next_event_before(horizon) {
        log.push(e);
        let m = sim.max();
        if m != max_path.last().expect("non-empty").1 {
            max_path.push((e.time, m));
        }
    }
    Ok(SimulationOutcome {
        config: sim.configuration(),
        stats: TrajectoryStats {
            max_path,
            jump_counts: sim.jump_counts().to_vec(),
            wall_time: started.elapsed().as_secs_f64(),
        },
        log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarySample {
    pub configs: Vec<Configuration>,
    pub burn_in: f64,
    pub thinning: f64,
}

impl StationarySample {
    pub fn maxima(&self) -> Vec<i64> {
        self.configs.iter().map(Configuration::max).collect()
    }
}

/// Snapshots of the chain after `burn_in_multiplier * T`, spaced `T` apart.
/// Starts from all walks at 1 unless `initial` is given.
pub fn sample_stationary(
    params: WalkParams,
    schedule: &Schedule,
    burn_in_multiplier: f64,
    n_samples: usize,
    initial: Option<Configuration>,
    stream: RngStream,
) -> Result<StationarySample> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples >= 1 required"));
    }
    if !(burn_in_multiplier >= 0.0 && burn_in_multiplier.is_finite()) {
        return Err(Error::invalid("burn-in multiplier must be finite and >= 0"));
    }
    let config = match initial {
        Some(c) => {
            if c.n() != schedule.n_walks {
                return Err(Error::invalid("initial configuration size differs from schedule"));
            }
            c
        }
        None => Configuration::all_at(schedule.n_walks, 1)?,
    };
    let t = schedule.t_horizon;
    let burn_in = burn_in_multiplier * t;
    let mut sim = Simulator::new(config, params, stream);
    sim.advance_by(burn_in, t);
    let configs = (0..n_samples)
        .map(|_| {
            sim.advance_by(t, t);
            sim.configuration()
        })
        .collect();
    Ok(StationarySample { configs, burn_in, thinning: t })
}

/// Normalised occupation measure over sites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    pub mass: BTreeMap<i64, f64>,
}

impl EmpiricalMeasure {
    pub fn get(&self, site: i64) -> f64 {
        self.mass.get(&site).copied().unwrap_or(0.0)
    }
}

/// Pooled histogram of all walks over all snapshots.
pub fn empirical_measure(sample: &StationarySample) -> Result<EmpiricalMeasure> {
    if sample.configs.is_empty() {
        return Err(Error::invalid("empty stationary sample"));
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for c in &sample.configs {
        for &x in c.positions() {
            *counts.entry(x).or_default() += 1;
            total += 1;
        }
    }
    let mass = counts
        .into_iter()
        .map(|(x, k)| (x, k as f64 / total as f64))
        .collect();
    Ok(EmpiricalMeasure { mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square_gof, MeanAccumulator};
    use statrs::distribution::{Discrete, Poisson};

    fn params() -> WalkParams {
        WalkParams::new(0.3).unwrap()
    }

    fn sim(pos: Vec<i64>, seed: u64) -> Simulator {
        Simulator::new(Configuration::new(pos).unwrap(), params(), RngStream::new(seed, 0))
    }

    #[test]
    fn forced_left_from_one_copies_only_other_walk() {
        let mut s = sim(vec![1, 5], 1);
        let e = s.apply_move(0, Move::Left);
        assert_eq!(e.kind, EventKind::SelectionJump);
        assert_eq!(e.target, Some(1));
        assert_eq!(s.positions(), &[5, 5]);
        assert_eq!(s.max(), 5);
    }

    #[test]
    fn forced_left_onto_site_one() {
        let mut s = sim(vec![1, 1], 2);
        s.apply_move(1, Move::Left);
        assert_eq!(s.positions(), &[1, 1]);
    }

    #[test]
    fn single_step_is_nearest_neighbour() {
        for seed in 0..50 {
            let mut s = sim(vec![2, 2, 2], seed);
            s.next_event();
            let mut p = s.positions().to_vec();
            p.sort_unstable();
            assert!(p == [1, 2, 2] || p == [2, 2, 3], "{p:?}");
        }
    }

    #[test]
    fn selection_targets_are_uniform() {
        let mut hits = [0u64; 4];
        for seed in 0..4000 {
            let mut s = sim(vec![1, 2, 3, 4], seed);
            let e = s.apply_move(0, Move::Left);
            hits[e.target.unwrap()] += 1;
        }
        assert_eq!(hits[0], 0);
        let r = chi_square_gof(&hits[1..], &[4000.0 / 3.0; 3], 0).unwrap();
        assert!(r.p_value > 0.001, "{hits:?}");
    }

    #[test]
    fn max_tracker_agrees_with_scan() {
        let mut s = sim(vec![1, 3, 3, 7, 2], 11);
        for _ in 0..20_000 {
            s.next_event();
            assert_eq!(s.max(), *s.positions().iter().max().unwrap());
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let c = Configuration::all_at(2, 1).unwrap();
        let a = simulate(c.clone(), params(), 50.0, RngStream::new(7, 3)).unwrap();
        let b = simulate(c.clone(), params(), 50.0, RngStream::new(7, 3)).unwrap();
        assert_eq!(a.log.digest(), b.log.digest());
        assert_eq!(a.config, b.config);
        let d = simulate(c, params(), 50.0, RngStream::new(7, 4)).unwrap();
        assert_ne!(a.log.digest(), d.log.digest());
    }

    #[test]
    fn simulate_log_and_path_invariants() {
        let c = Configuration::all_at(2, 1).unwrap();
        for seed in 0..20 {
            let out = simulate(c.clone(), params(), 100.0, RngStream::new(seed, 0)).unwrap();
            assert!(out.log.is_well_formed());
            assert!(out.stats.max_path.iter().all(|&(_, m)| m >= 1));
            assert!(out.stats.max_path.windows(2).all(|w| w[0].0 < w[1].0 || w[0].0 == 0.0));
            assert!(out.stats.max_path.windows(2).all(|w| w[0].1 != w[1].1));
            let total: u64 = out.stats.jump_counts.iter().sum();
            assert_eq!(total as usize, out.log.len());
        }
        assert!(simulate(c, params(), 0.0, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn mean_event_count_is_n_times_horizon() {
        // N = 50, horizon 10: total events ~ Poisson(500)
        let c = Configuration::all_at(50, 1).unwrap();
        let base = RngStream::new(2024, 0);
        let acc: MeanAccumulator = (0..10_000u64)
            .map(|i| {
                let mut s = Simulator::new(c.clone(), params(), base.replica(i));
                s.advance_to(10.0) as f64
            })
            .collect();
        let sem = (500.0f64 / 10_000.0).sqrt();
        assert!((acc.mean() - 500.0).abs() < 3.0 * sem, "mean {}", acc.mean());
    }

    #[test]
    fn per_walk_clock_is_poisson() {
        let horizon = 10.0;
        let c = Configuration::all_at(5, 3).unwrap();
        let base = RngStream::new(77, 0);
        let counts: Vec<u64> = (0..10_000u64)
            .map(|i| {
                let mut s = Simulator::new(c.clone(), params(), base.replica(i));
                s.advance_to(horizon);
                s.jump_counts()[0]
            })
            .collect();
        // bins: <=4, 5..=15 individually, >=16
        let pois = Poisson::new(horizon).unwrap();
        let mut observed = vec![0u64; 13];
        let mut expected = vec![0f64; 13];
        for &k in &counts {
            let b = if k <= 4 { 0 } else if k >= 16 { 12 } else { (k - 4) as usize };
            observed[b] += 1;
        }
        for k in 0..60u64 {
            let b = if k <= 4 { 0 } else if k >= 16 { 12 } else { (k - 4) as usize };
            expected[b] += 10_000.0 * pois.pmf(k);
        }
        let r = chi_square_gof(&observed, &expected, 0).unwrap();
        assert!(r.p_value > 0.01, "chi2 p = {}", r.p_value);
    }

    #[test]
    fn free_walk_has_drift_minus_v() {
        let horizon = 20.0;
        let base = RngStream::new(5, 0);
        let acc: MeanAccumulator = (0..10_000u64)
            .map(|i| {
                let c = Configuration::all_at(2, 1).unwrap();
                let mut s = Simulator::without_selection(c, params(), base.replica(i));
                s.advance_to(horizon);
                (s.positions()[0] - 1) as f64
            })
            .collect();
        let target = -params().v() * horizon;
        assert!((acc.mean() - target).abs() < 3.0 * acc.std_err(), "{} vs {target}", acc.mean());
    }

    #[test]
    fn chunked_advance_preserves_event_rate() {
        let c = Configuration::all_at(10, 1).unwrap();
        let base = RngStream::new(8, 0);
        let acc: MeanAccumulator = (0..2000u64)
            .map(|i| {
                let mut s = Simulator::new(c.clone(), params(), base.replica(i));
                s.advance_by(10.0, 0.7) as f64
            })
            .collect();
        assert!((acc.mean() - 100.0).abs() < 3.0 * acc.std_err());
    }

    #[test]
    fn empirical_measure_examples() {
        let one = StationarySample {
            configs: vec![Configuration::new(vec![3, 3]).unwrap()],
            burn_in: 0.0,
            thinning: 1.0,
        };
        let m = empirical_measure(&one).unwrap();
        assert_eq!(m.mass.len(), 1);
        assert_eq!(m.get(3), 1.0);
        let two = StationarySample {
            configs: vec![
                Configuration::new(vec![1, 2]).unwrap(),
                Configuration::new(vec![2, 3]).unwrap(),
            ],
            burn_in: 0.0,
            thinning: 1.0,
        };
        let m = empirical_measure(&two).unwrap();
        assert_eq!((m.get(1), m.get(2), m.get(3)), (0.25, 0.5, 0.25));
        let empty = StationarySample { configs: vec![], burn_in: 0.0, thinning: 1.0 };
        assert!(empirical_measure(&empty).is_err());
    }

    #[test]
    fn stationary_sample_shape() {
        let w = params();
        let s = Schedule::with_big_a(&w, 5, 100.0).unwrap();
        assert!(sample_stationary(w, &s, 1.0, 0, None, RngStream::new(1, 0)).is_err());
        let sample = sample_stationary(w, &s, 1.0, 10, None, RngStream::new(1, 0)).unwrap();
        assert_eq!(sample.configs.len(), 10);
        assert_eq!(sample.thinning, s.t_horizon);
        assert!(sample.configs.iter().all(|c| c.n() == 5 && c.positions().iter().all(|&x| x >= 1)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn conservation_and_positivity(
                start in proptest::collection::vec(1i64..6, 2..8),
                seed in any::<u64>(),
                p in 0.05f64..0.49,
            ) {
                let n = start.len();
                let w = WalkParams::new(p).unwrap();
                let mut s = Simulator::new(Configuration::new(start).unwrap(), w, RngStream::new(seed, 0));
                let mut last = 0.0;
                for _ in 0..500 {
                    let e = s.next_event();
                    prop_assert!(e.time > last);
                    last = e.time;
                    prop_assert_eq!(s.n(), n);
                    prop_assert!(s.positions().iter().all(|&x| x >= 1));
                    if let Some(t) = e.target {
                        prop_assert_ne!(t, e.walk);
                    }
                }
            }
        }
    }
}
