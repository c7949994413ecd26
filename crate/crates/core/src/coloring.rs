//! Black/red/green decomposition of a Fleming-Viot run and the bad-set
//! estimators built on it.
//!
//! Walks starting below `L` are black, the rest red. A black whose selection
//! jump lands on a red becomes red. Every red carries a green shadow on Z
//! that copies the red's steps but ignores the origin: where the red makes a
//! selection jump, the green just steps to the left. When a black turns red
//! by copying red `j`, the green of `j` branches and the child shadows the
//! new red. Until the first time `R0` a red walk hits the origin, red and
//! green positions coincide.

use std::f64::consts::E;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Configuration, RngStream, Schedule, WalkParams};
use crate::replicas;
use crate::sim::{EventKind, Simulator};
use crate::stats::{ks_two_sample, KsResult, MeanAccumulator, MeanSummary, Proportion};

const FV_TAG: u64 = 11;
const COIN_TAG: u64 = 12;
const REFERENCE_TAG: u64 = 13;

/// Minimum replica counts for the bad-set and green-law estimators.
pub const MIN_BAD_SET_REPLICAS: usize = 1_000;
pub const MIN_GREEN_REPLICAS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Black,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GreenShadow {
    pub id: usize,
    pub position: i64,
    /// Initial site of the root green, so `position - origin` is the lineage
    /// displacement.
    pub origin: i64,
    pub linked_red: usize,
    pub parent: Option<usize>,
}

impl GreenShadow {
    pub fn displacement(&self) -> i64 {
        self.position - self.origin
    }
}

/// A black walk copied red `red_target`; green `parent_green` branched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenBranchEvent {
    pub time: f64,
    pub black_walk: usize,
    pub red_target: usize,
    pub parent_green: usize,
    pub child_green: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColoredState {
    pub fv_positions: Configuration,
    pub colors: Vec<Color>,
    pub green_shadows: Vec<GreenShadow>,
    /// First time a red walk hit the origin.
    pub r0: Option<f64>,
    pub green_branches: Vec<GreenBranchEvent>,
    pub initial_reds: usize,
}

impl ColoredState {
    pub fn red_positions(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self
            .colors
            .iter()
            .zip(self.fv_positions.positions())
            .filter(|(c, _)| **c == Color::Red)
            .map(|(_, &x)| x)
            .collect();
        v.sort_unstable();
        v
    }

    pub fn green_positions(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.green_shadows.iter().map(|g| g.position).collect();
        v.sort_unstable();
        v
    }

    /// On `{R0 > T}` the sorted red and green positions must agree.
    pub fn coupling_holds(&self, horizon: f64) -> bool {
        match self.r0 {
            Some(t) if t <= horizon => true,
            _ => self.red_positions() == self.green_positions(),
        }
    }

    pub fn black_count(&self) -> usize {
        self.colors.iter().filter(|c| **c == Color::Black).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BadSetReport {
    pub horizon: f64,
    pub l_threshold: f64,
    pub event_red_hits_zero: bool,
    pub event_black_travels_l: bool,
    pub event_green_max_high: bool,
    pub bad: bool,
    /// `max_g (S_g(T) - S_g(0))` over greens, `None` when there are none.
    pub green_max_displacement: Option<i64>,
    /// `max_v (S_v(T) - S_v(0))` over the Fleming-Viot walks, measured from
    /// each walk's lineage origin.
    pub walk_max_displacement: i64,
    /// `M(T) - M(0)`.
    pub max_increment: i64,
}

impl BadSetReport {
    /// `-v T / (2e)`.
    pub fn green_threshold(params: &WalkParams, horizon: f64) -> f64 {
        -params.v() * horizon / (2.0 * E)
    }

    /// Off the bad set, both `max_v (S_v(T) - S_v(0))` and `M(T) - M(0)` lie
    /// below `-vT/(2e)`. Meant for starts without black walks.
    pub fn good_event_consistent(&self, params: &WalkParams) -> bool {
        let thr = Self::green_threshold(params, self.horizon);
        self.bad || ((self.walk_max_displacement as f64) < thr && (self.max_increment as f64) < thr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColoredRun {
    pub state: ColoredState,
    pub report: BadSetReport,
}

struct World {
    sim: Simulator,
    colors: Vec<Color>,
    /// Lineage origin of each walk: for blacks it follows black-on-black
    /// selections, for reds it is the origin of the linked green.
    origin: Vec<i64>,
    green_of: Vec<Option<usize>>,
    greens: Vec<GreenShadow>,
    branches: Vec<GreenBranchEvent>,
    r0: Option<f64>,
    black_travel: bool,
    l_threshold: f64,
    initial_reds: usize,
}

impl World {
    fn new(initial: &Configuration, params: WalkParams, l_threshold: f64, stream: RngStream) -> Self {
        let n = initial.n();
        let mut colors = Vec::with_capacity(n);
        let mut green_of = vec![None; n];
        let mut greens = Vec::new();
        for (i, &x) in initial.positions().iter().enumerate() {
            // a start exactly at L counts as red
            if x as f64 >= l_threshold {
                colors.push(Color::Red);
                green_of[i] = Some(greens.len());
                greens.push(GreenShadow {
                    id: greens.len(),
                    position: x,
                    origin: x,
                    linked_red: i,
                    parent: None,
                });
            } else {
                colors.push(Color::Black);
            }
        }
        let initial_reds = greens.len();
        Self {
            sim: Simulator::new(initial.clone(), params, stream),
            colors,
            origin: initial.positions().to_vec(),
            green_of,
            greens,
            branches: Vec::new(),
            r0: None,
            black_travel: false,
            l_threshold,
            initial_reds,
        }
    }

    /// Run one event; returns the branch event if a green branched.
    fn step(&mut self, horizon: f64) -> Option<Option<GreenBranchEvent>> {
        let ev = self.sim.next_event_before(horizon)?;
        let w = ev.walk;
        let pos = self.sim.positions()[w];
        let mut branch = None;
        match self.colors[w] {
            Color::Red => {
                let g = self.green_of[w].expect("red walk has a green");
                match ev.kind {
                    EventKind::StepRight => self.greens[g].position += 1,
                    EventKind::StepLeft => self.greens[g].position -= 1,
                    EventKind::SelectionJump => {
                        self.greens[g].position -= 1;
                        self.r0.get_or_insert(ev.time);
                    }
                }
            }
            Color::Black => match ev.kind {
                EventKind::StepRight => {
                    if (pos - self.origin[w]) as f64 >= self.l_threshold {
                        self.black_travel = true;
                    }
                }
                EventKind::StepLeft => {}
                EventKind::SelectionJump => {
                    let j = ev.target.expect("selection has a target");
                    match self.colors[j] {
                        Color::Black => self.origin[w] = self.origin[j],
                        Color::Red => {
                            let parent = self.green_of[j].expect("red walk has a green");
                            let child = self.greens.len();
                            let src = self.greens[parent];
                            self.greens.push(GreenShadow {
                                id: child,
                                position: src.position,
                                origin: src.origin,
                                linked_red: w,
                                parent: Some(parent),
                            });
                            self.colors[w] = Color::Red;
                            self.green_of[w] = Some(child);
                            let b = GreenBranchEvent {
                                time: ev.time,
                                black_walk: w,
                                red_target: j,
                                parent_green: parent,
                                child_green: child,
                            };
                            self.branches.push(b);
                            branch = Some(b);
                        }
                    }
                }
            },
        }
        Some(branch)
    }

    fn finish(self, params: &WalkParams, initial: &Configuration, horizon: f64) -> ColoredRun {
        let positions = self.sim.positions();
        let walk_origin: Vec<i64> = (0..positions.len())
            .map(|i| match self.green_of[i] {
                Some(g) => self.greens[g].origin,
                None => self.origin[i],
            })
            .collect();
        let walk_max_displacement = positions
            .iter()
            .zip(&walk_origin)
            .map(|(x, o)| x - o)
            .max()
            .expect("n >= 2");
        let green_max_displacement = self.greens.iter().map(GreenShadow::displacement).max();
        let red = self.r0.is_some_and(|t| t <= horizon);
        let thr = BadSetReport::green_threshold(params, horizon);
        let green_high = green_max_displacement.is_some_and(|d| d as f64 > thr);
        let report = BadSetReport {
            horizon,
            l_threshold: self.l_threshold,
            event_red_hits_zero: red,
            event_black_travels_l: self.black_travel,
            event_green_max_high: green_high,
            bad: red || self.black_travel || green_high,
            green_max_displacement,
            walk_max_displacement,
            max_increment: self.sim.max() - initial.max(),
        };
        ColoredRun {
            state: ColoredState {
                fv_positions: self.sim.configuration(),
                colors: self.colors,
                green_shadows: self.greens,
                r0: self.r0,
                green_branches: self.branches,
                initial_reds: self.initial_reds,
            },
            report,
        }
    }
}

fn check_schedule(initial: &Configuration, schedule: &Schedule) -> Result<()> {
    if initial.n() != schedule.n_walks {
        return Err(Error::invalid(format!(
            "configuration has {} walks, schedule was built for {}",
            initial.n(),
            schedule.n_walks
        )));
    }
    Ok(())
}

/// Colored Fleming-Viot run on `[0, T]` with the three bad events recorded.
pub fn simulate_colored(
    initial: &Configuration,
    params: WalkParams,
    schedule: &Schedule,
    stream: RngStream,
) -> Result<ColoredRun> {
    check_schedule(initial, schedule)?;
    Ok(run_colored(initial, params, schedule.t_horizon, schedule.l_threshold, stream))
}

fn run_colored(initial: &Configuration, params: WalkParams, horizon: f64, l: f64, stream: RngStream) -> ColoredRun {
    let mut world = World::new(initial, params, l, stream.fork(FV_TAG));
    while world.step(horizon).is_some() {}
    world.finish(&params, initial, horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub event: String,
    pub proportion: Proportion,
    pub bound: f64,
}

impl EventRow {
    fn new(event: &str, successes: u64, trials: u64, bound: f64) -> Self {
        Self {
            event: event.to_string(),
            proportion: Proportion::new(successes, trials),
            bound,
        }
    }

    /// Upper Wilson limit at or below the bound.
    pub fn holds(&self) -> bool {
        self.proportion.ci_high <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadSetEstimate {
    pub schedule: Schedule,
    pub kappa_t: f64,
    /// Union row, bound `4 exp(-kappa T)`.
    pub union: EventRow,
    /// Red hits zero and black travels `L` against `exp(-kappa T)`, green
    /// maximum against `2 exp(-kappa T)`.
    pub events: Vec<EventRow>,
    /// `4 exp(-kappa T) >= 1`: the union bound says nothing.
    pub vacuous: bool,
    pub coupling_violations: u64,
    pub good_event_violations: u64,
}

impl BadSetEstimate {
    /// Sum of the per-event frequencies dominates the union frequency.
    pub fn union_bound_direction(&self) -> bool {
        let sum: f64 = self.events.iter().map(|r| r.proportion.frequency).sum();
        sum >= self.union.proportion.frequency
    }

    pub fn per_event_holds(&self) -> bool {
        self.events.iter().all(EventRow::holds)
    }
}

pub const EVENT_RED: &str = "red_hits_zero";
pub const EVENT_BLACK: &str = "black_travels_l";
pub const EVENT_GREEN: &str = "green_max_high";
pub const EVENT_UNION: &str = "bad_union";

/// Monte-Carlo `P(B(T, L))` and its three constituents.
pub fn estimate_bad_probability(
    initial: &Configuration,
    params: WalkParams,
    schedule: &Schedule,
    replicas: usize,
    stream: RngStream,
) -> Result<BadSetEstimate> {
    check_schedule(initial, schedule)?;
    if replicas < MIN_BAD_SET_REPLICAS {
        return Err(Error::invalid(format!(
            "at least {MIN_BAD_SET_REPLICAS} replicas required, got {replicas}"
        )));
    }
    Ok(bad_estimate(initial, params, schedule, replicas, stream))
}

/// Same runs as [`estimate_bad_probability`], read per event.
pub fn estimate_event_rates(
    initial: &Configuration,
    params: WalkParams,
    schedule: &Schedule,
    replicas: usize,
    stream: RngStream,
) -> Result<Vec<EventRow>> {
    let est = estimate_bad_probability(initial, params, schedule, replicas, stream)?;
    let mut rows = est.events;
    rows.push(est.union);
    Ok(rows)
}

fn bad_estimate(
    initial: &Configuration,
    params: WalkParams,
    schedule: &Schedule,
    replicas: usize,
    stream: RngStream,
) -> BadSetEstimate {
    let all_red = initial.positions().iter().all(|&x| x as f64 >= schedule.l_threshold);
    let runs = replicas::run(replicas, stream, |_, s| {
        let run = run_colored(initial, params, schedule.t_horizon, schedule.l_threshold, s);
        let good_ok = !all_red || run.report.good_event_consistent(&params);
        (run.report, run.state.coupling_holds(schedule.t_horizon), good_ok)
    });
    let n = replicas as u64;
    let count = |f: fn(&BadSetReport) -> bool| runs.iter().filter(|r| f(&r.0)).count() as u64;
    let unit = (-schedule.kappa * schedule.t_horizon).exp();
    BadSetEstimate {
        schedule: *schedule,
        kappa_t: schedule.kappa * schedule.t_horizon,
        union: EventRow::new(EVENT_UNION, count(|r| r.bad), n, 4.0 * unit),
        events: vec![
            EventRow::new(EVENT_RED, count(|r| r.event_red_hits_zero), n, unit),
            EventRow::new(EVENT_BLACK, count(|r| r.event_black_travels_l), n, unit),
            EventRow::new(EVENT_GREEN, count(|r| r.event_green_max_high), n, 2.0 * unit),
        ],
        vacuous: 4.0 * unit >= 1.0,
        coupling_violations: runs.iter().filter(|r| !r.1).count() as u64,
        good_event_violations: runs.iter().filter(|r| !r.2).count() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenIdentityReport {
    pub horizon: f64,
    pub ks: KsResult,
    pub passed: bool,
    pub lineage: MeanSummary,
    pub reference: MeanSummary,
    /// `-v T`.
    pub expected_mean: f64,
    pub mean_within_3se: bool,
    /// Branch events met along the tracked lineages.
    pub lineage_branchings: u64,
}

/// Displacement of one green lineage, following a fair coin at each branch
/// of the tracked green. Starts from the first red walk's green.
pub fn tracked_green_displacement(
    initial: &Configuration,
    params: WalkParams,
    horizon: f64,
    l_threshold: f64,
    stream: RngStream,
) -> Result<(i64, u64)> {
    let mut world = World::new(initial, params, l_threshold, stream.fork(FV_TAG));
    if world.greens.is_empty() {
        return Err(Error::invalid("no red walk to track: every start is below L"));
    }
    let mut coin = stream.fork(COIN_TAG).rng();
    let mut tracked = 0;
    let mut hits = 0;
    while let Some(branch) = world.step(horizon) {
        if let Some(b) = branch {
            if b.parent_green == tracked {
                hits += 1;
                if coin.random::<bool>() {
                    tracked = b.child_green;
                }
            }
        }
    }
    Ok((world.greens[tracked].displacement(), hits))
}

/// `sum_{i <= N_T} X_i` with `N_T ~ Poisson(T)` and `X_i = +-1` with
/// probabilities `p`, `q`.
pub fn compound_poisson_displacement(params: &WalkParams, horizon: f64, rng: &mut ChaCha8Rng) -> i64 {
    let jumps = if horizon > 0.0 {
        Poisson::new(horizon).expect("positive mean").sample(rng) as u64
    } else {
        0
    };
    let right = Binomial::new(jumps, params.p()).expect("p in (0, 1)").sample(rng) as i64;
    2 * right - jumps as i64
}

/// Lineage displacement of a single walk that branches at the given times,
/// following parent or child with a fair coin at each one.
pub fn forced_branch_displacement(params: &WalkParams, horizon: f64, branch_times: &[f64], stream: RngStream) -> i64 {
    let mut coin = stream.fork(COIN_TAG).rng();
    let mut rng = stream.fork(0).rng();
    let mut pos = 0i64;
    let mut t = 0.0;
    let mut cuts: Vec<f64> = branch_times.iter().copied().filter(|&b| b > 0.0 && b < horizon).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.push(horizon);
    for (k, &end) in cuts.iter().enumerate() {
        loop {
            let next = t + rng.sample::<f64, _>(Exp1);
            if next > end {
                t = end;
                break;
            }
            t = next;
            pos += if rng.random::<f64>() < params.p() { 1 } else { -1 };
        }
        if k + 1 < cuts.len() && coin.random::<bool>() {
            // follow the child, which moves on its own increments
            rng = stream.fork(k as u64 + 1).rng();
        }
    }
    pos
}

/// Law of a tracked green lineage's displacement against an independent
/// compound-Poisson(T) sample: two-sample KS at level 0.01 and mean `-vT`.
pub fn check_green_identity(
    initial: &Configuration,
    params: WalkParams,
    schedule: &Schedule,
    replicas: usize,
    stream: RngStream,
) -> Result<GreenIdentityReport> {
    check_schedule(initial, schedule)?;
    if replicas < MIN_GREEN_REPLICAS {
        return Err(Error::invalid(format!(
            "at least {MIN_GREEN_REPLICAS} replicas required, got {replicas}"
        )));
    }
    green_identity(initial, params, schedule.t_horizon, schedule.l_threshold, replicas, stream)
}

fn green_identity(
    initial: &Configuration,
    params: WalkParams,
    horizon: f64,
    l: f64,
    replicas: usize,
    stream: RngStream,
) -> Result<GreenIdentityReport> {
    let lineage = replicas::run(replicas, stream, |_, s| tracked_green_displacement(initial, params, horizon, l, s))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let reference_stream = stream.fork(REFERENCE_TAG);
    let reference = replicas::run(replicas, reference_stream, |_, s| {
        compound_poisson_displacement(&params, horizon, &mut s.rng()) as f64
    });
    let sample: Vec<f64> = lineage.iter().map(|l| l.0 as f64).collect();
    let ks = ks_two_sample(&sample, &reference)?;
    let lineage_summary = sample.iter().copied().collect::<MeanAccumulator>().summary();
    let expected_mean = -params.v() * horizon;
    Ok(GreenIdentityReport {
        horizon,
        ks,
        passed: ks.p_value > 0.01,
        lineage: lineage_summary,
        reference: reference.into_iter().collect::<MeanAccumulator>().summary(),
        expected_mean,
        mean_within_3se: lineage_summary.within(expected_mean, 3.0),
        lineage_branchings: lineage.iter().map(|l| l.1).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> WalkParams {
        WalkParams::new(0.3).unwrap()
    }

    fn config(v: Vec<i64>) -> Configuration {
        Configuration::new(v).unwrap()
    }

    #[test]
    fn initial_colors_split_at_l() {
        let w = World::new(&config(vec![1, 9, 10, 11]), params(), 10.0, RngStream::new(0, 0));
        assert_eq!(w.colors, vec![Color::Black, Color::Black, Color::Red, Color::Red]);
        assert_eq!(w.greens.len(), 2);
        assert_eq!(w.green_of, vec![None, None, Some(0), Some(1)]);
    }

    #[test]
    fn all_red_start_has_no_branching() {
        let c = Configuration::all_at(5, 50).unwrap();
        for seed in 0..20 {
            let run = run_colored(&c, params(), 30.0, 20.0, RngStream::new(seed, 0));
            assert!(run.state.green_branches.is_empty());
            assert_eq!(run.state.black_count(), 0);
            assert!(!run.report.event_black_travels_l);
            assert!(run.state.coupling_holds(30.0));
            assert!(run.report.good_event_consistent(&params()));
        }
    }

    #[test]
    fn all_black_start_has_empty_red_events() {
        let c = Configuration::all_at(5, 1).unwrap();
        for seed in 0..20 {
            let run = run_colored(&c, params(), 30.0, 1000.0, RngStream::new(seed, 0));
            assert!(run.state.green_shadows.is_empty());
            assert!(!run.report.event_red_hits_zero);
            assert!(!run.report.event_green_max_high);
            assert_eq!(run.report.green_max_displacement, None);
        }
    }

    #[test]
    fn mixed_runs_conserve_colors_and_couple() {
        let c = config(vec![1, 1, 2, 3, 6, 8, 8, 12]);
        let mut branched = 0;
        let mut broken = 0;
        for seed in 0..300 {
            let run = run_colored(&c, params(), 25.0, 6.0, RngStream::new(seed, 0));
            let s = &run.state;
            let reds = s.colors.iter().filter(|c| **c == Color::Red).count();
            assert_eq!(reds + s.black_count(), 8);
            assert_eq!(s.green_shadows.len(), reds);
            assert_eq!(reds, s.initial_reds + s.green_branches.len());
            assert_eq!(s.initial_reds, 4);
            for b in &s.green_branches {
                assert_eq!(s.green_shadows[b.child_green].parent, Some(b.parent_green));
                assert_eq!(s.green_shadows[b.child_green].linked_red, b.black_walk);
            }
            assert!(s.fv_positions.positions().iter().all(|&x| x >= 1));
            assert!(s.coupling_holds(25.0));
            branched += s.green_branches.len();
            broken += usize::from(s.r0.is_some());
        }
        assert!(branched > 0);
        // short L so that both sides of R0 are exercised
        assert!(broken > 0);
    }

    #[test]
    fn red_hit_breaks_coupling_sometimes() {
        let c = config(vec![2, 2, 2]);
        let mut differs = false;
        for seed in 0..200 {
            let run = run_colored(&c, params(), 30.0, 2.0, RngStream::new(seed, 0));
            if run.state.r0.is_some() {
                assert!(run.report.event_red_hits_zero);
                differs |= run.state.red_positions() != run.state.green_positions();
            }
        }
        assert!(differs);
    }

    #[test]
    fn schedule_size_must_match() {
        let w = params();
        let s = Schedule::minimal(&w, 10, 0.01).unwrap();
        let c = Configuration::all_at(5, 1).unwrap();
        assert!(simulate_colored(&c, w, &s, RngStream::new(0, 0)).is_err());
        let c = Configuration::all_at(10, 1).unwrap();
        assert!(estimate_bad_probability(&c, w, &s, 10, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn vacuous_flag_and_union_direction() {
        let w = params();
        let s = Schedule::minimal(&w, 2, 0.01).unwrap();
        assert!(s.kappa * s.t_horizon < 4f64.ln());
        let c = config(vec![1, (3.0 * s.l_threshold).ceil() as i64]);
        let est = estimate_bad_probability(&c, w, &s, 1000, RngStream::new(2, 0)).unwrap();
        assert!(est.vacuous);
        assert!(est.union_bound_direction());
        assert_eq!(est.coupling_violations, 0);
    }

    #[test]
    fn forced_branches_keep_compound_poisson_law() {
        let w = params();
        let t = 20.0;
        let none: Vec<f64> = (0..4000).map(|i| forced_branch_displacement(&w, t, &[], RngStream::new(5, i)) as f64).collect();
        let two: Vec<f64> = (0..4000)
            .map(|i| forced_branch_displacement(&w, t, &[4.0, 13.0], RngStream::new(6, i)) as f64)
            .collect();
        let reference: Vec<f64> = (0..4000)
            .map(|i| compound_poisson_displacement(&w, t, &mut RngStream::new(7, i).rng()) as f64)
            .collect();
        assert!(ks_two_sample(&none, &reference).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&two, &reference).unwrap().p_value > 0.01);
        let m = two.iter().copied().collect::<MeanAccumulator>().summary();
        assert!(m.within(-w.v() * t, 3.0), "{m:?}");
    }

    #[test]
    fn tracked_lineage_small_instance() {
        let w = params();
        let c = config(vec![1, 1, 2, 2, 40, 40]);
        let rep = green_identity(&c, w, 20.0, 30.0, 4000, RngStream::new(8, 0)).unwrap();
        assert!(rep.lineage_branchings > 0);
        assert!(rep.passed, "{rep:?}");
        assert!(rep.mean_within_3se, "{rep:?}");
    }
}
