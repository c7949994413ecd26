//! Multitype branching random walk dominating the Fleming-Viot system.
//!
//! There is one type per initial walk. Type `i` owns an exponential clock of
//! intensity `q`; each ring carries a mark `j != i` drawn uniformly, and at
//! that instant every individual of type `j` splits into a type-`i` and a
//! type-`j` child sitting on the parent's site. Individuals move as
//! independent rate-1 walks on Z with no boundary, so branching times are a
//! function of the clocks alone and the expected population grows like
//! `N e^{qT}`.
//!
//! Clock rings are drawn first from their own stream; motion between rings
//! comes from a second stream.

use std::f64::consts::E;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Configuration, RngStream, WalkParams};
use crate::replicas;
use crate::sim::Simulator;
use crate::stats::{wilson_interval, MeanAccumulator, MeanSummary, Proportion, Z95};

const CLOCK_TAG: u64 = 1;
const MOTION_TAG: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Individual {
    pub id: usize,
    pub type_label: usize,
    pub position: i64,
    /// Starting site of the root ancestor, so `position - origin` is the
    /// displacement `S_v(T) - S_v(0)` along the whole lineage.
    pub origin: i64,
    pub birth_time: f64,
    pub parent: Option<usize>,
    /// Jumps along the lineage, ancestors included.
    pub lineage_jumps: u64,
    /// `(time, site)` after birth and after every jump, when recorded.
    pub path: Option<Vec<(f64, i64)>>,
}

impl Individual {
    pub fn displacement(&self) -> i64 {
        self.position - self.origin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockRing {
    pub time: f64,
    pub clock: usize,
    pub mark: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Aborted when a split would push the population past the cap.
    CapExceeded { time: f64, population: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct BranchingOptions {
    pub cap: usize,
    pub record_paths: bool,
}

impl Default for BranchingOptions {
    fn default() -> Self {
        Self { cap: 1_000_000, record_paths: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchingPopulation {
    pub individuals: Vec<Individual>,
    pub rings: Vec<ClockRing>,
    pub horizon: f64,
    pub status: RunStatus,
    #[serde(skip)]
    by_type: Vec<Vec<usize>>,
}

impl BranchingPopulation {
    pub fn size(&self) -> usize {
        self.individuals.len()
    }

    pub fn completed(&self) -> bool {
        matches!(self.status, RunStatus::Completed)
    }

    pub fn type_counts(&self) -> Vec<usize> {
        self.by_type.iter().map(Vec::len).collect()
    }

    /// `max_v (S_v(T) - S_v(0))`.
    pub fn max_displacement(&self) -> i64 {
        self.individuals
            .iter()
            .map(Individual::displacement)
            .max()
            .expect("population never empty")
    }

    /// Root ancestor of `id`, following parent pointers.
    pub fn lineage_root(&self, mut id: usize) -> usize {
        while let Some(p) = self.individuals[id].parent {
            id = p;
        }
        id
    }
}

pub fn simulate_branching(
    n_types: usize,
    params: WalkParams,
    horizon: f64,
    stream: RngStream,
    opts: &BranchingOptions,
) -> Result<BranchingPopulation> {
    simulate_branching_from(&vec![0; n_types], params, horizon, stream, opts)
}

pub fn simulate_branching_from(
    initial: &[i64],
    params: WalkParams,
    horizon: f64,
    stream: RngStream,
    opts: &BranchingOptions,
) -> Result<BranchingPopulation> {
    simulate_branching_split(initial, params, horizon, stream.fork(CLOCK_TAG), stream.fork(MOTION_TAG), opts)
}

/// Branching run with the clock and motion sources given separately.
pub fn simulate_branching_split(
    initial: &[i64],
    params: WalkParams,
    horizon: f64,
    clock: RngStream,
    motion: RngStream,
    opts: &BranchingOptions,
) -> Result<BranchingPopulation> {
    run(initial, params, params.q(), horizon, clock, motion, opts)
}

fn run(
    initial: &[i64],
    params: WalkParams,
    branch_rate: f64,
    horizon: f64,
    clock: RngStream,
    motion: RngStream,
    opts: &BranchingOptions,
) -> Result<BranchingPopulation> {
    let n = initial.len();
    if n < 2 {
        return Err(Error::invalid(format!("n_types >= 2 required, got {n}")));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let expected = n as f64 * (branch_rate * horizon).exp();
    if expected > opts.cap as f64 {
        return Err(Error::invalid(format!(
            "expected population {expected:.3e} exceeds cap {}",
            opts.cap
        )));
    }

    let rings = draw_rings(n, branch_rate, horizon, &mut clock.rng());
    let mut pop = BranchingPopulation {
        individuals: initial
            .iter()
            .enumerate()
            .map(|(i, &x)| Individual {
                id: i,
                type_label: i,
                position: x,
                origin: x,
                birth_time: 0.0,
                parent: None,
                lineage_jumps: 0,
                path: opts.record_paths.then(|| vec![(0.0, x)]),
            })
            .collect(),
        rings: Vec::with_capacity(rings.len()),
        horizon,
        status: RunStatus::Completed,
        by_type: (0..n).map(|i| vec![i]).collect(),
    };

    let mut rng = motion.rng();
    let mut now = 0.0;
    for ring in rings {
        move_until(&mut pop, &mut now, ring.time, params.p(), &mut rng, opts.record_paths);
        let parents = pop.by_type[ring.mark].len();
        if pop.individuals.len() + parents > opts.cap {
            pop.status = RunStatus::CapExceeded {
                time: ring.time,
                population: pop.individuals.len(),
            };
            return Ok(pop);
        }
        for k in 0..parents {
            let parent = pop.by_type[ring.mark][k];
            let src = &pop.individuals[parent];
            let child = Individual {
                id: pop.individuals.len(),
                type_label: ring.clock,
                position: src.position,
                origin: src.origin,
                birth_time: ring.time,
                parent: Some(parent),
                lineage_jumps: src.lineage_jumps,
                path: opts.record_paths.then(|| vec![(ring.time, src.position)]),
            };
            pop.by_type[ring.clock].push(child.id);
            pop.individuals.push(child);
        }
        pop.rings.push(ring);
    }
    move_until(&mut pop, &mut now, horizon, params.p(), &mut rng, opts.record_paths);
    Ok(pop)
}

fn draw_rings(n: usize, rate: f64, horizon: f64, rng: &mut ChaCha8Rng) -> Vec<ClockRing> {
    let mut rings = Vec::new();
    if rate <= 0.0 {
        return rings;
    }
    let total = n as f64 * rate;
    let mut t = 0.0;
    loop {
        t += rng.sample::<f64, _>(Exp1) / total;
        if t > horizon {
            return rings;
        }
        let clock = rng.random_range(0..n);
        let mut mark = rng.random_range(0..n - 1);
        if mark >= clock {
            mark += 1;
        }
        rings.push(ClockRing { time: t, clock, mark });
    }
}

/// Gillespie over the unit-rate walks until `until`; the population is fixed
/// in between rings.
fn move_until(pop: &mut BranchingPopulation, now: &mut f64, until: f64, p: f64, rng: &mut ChaCha8Rng, record: bool) {
    let rate = pop.individuals.len() as f64;
    loop {
        let next = *now + rng.sample::<f64, _>(Exp1) / rate;
        if next > until {
            *now = until;
            return;
        }
        *now = next;
        let idx = rng.random_range(0..pop.individuals.len());
        let step = if rng.random::<f64>() < p { 1 } else { -1 };
        let ind = &mut pop.individuals[idx];
        ind.position += step;
        ind.lineage_jumps += 1;
        if record {
            if let Some(path) = ind.path.as_mut() {
                path.push((next, ind.position));
            }
        }
    }
}

/// Empirical mean population against `n e^{qT}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationMeanCheck {
    pub horizon: f64,
    pub expected: f64,
    pub summary: MeanSummary,
    pub within_3se: bool,
}

pub fn population_mean(
    n_types: usize,
    params: WalkParams,
    horizon: f64,
    replicas: usize,
    stream: RngStream,
) -> Result<PopulationMeanCheck> {
    let sizes = replicas::run(replicas, stream, |_, s| {
        simulate_branching(n_types, params, horizon, s, &BranchingOptions::default()).map(|p| p.size() as f64)
    });
    let acc: MeanAccumulator = sizes.into_iter().collect::<Result<Vec<_>>>()?.into_iter().collect();
    let summary = acc.summary();
    let expected = n_types as f64 * (params.q() * horizon).exp();
    Ok(PopulationMeanCheck {
        horizon,
        expected,
        summary,
        within_3se: summary.within(expected, 3.0),
    })
}

/// Smallest `T` with `1 - q - log(N) / T > margin`, the hypothesis under
/// which `N e^{qT} P(N_T > eT + chi) <= e^{-chi}`.
pub fn lemma_horizon(params: &WalkParams, n: usize, margin: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("n >= 2 required, got {n}")));
    }
    let gap = 1.0 - params.q() - margin;
    if !(margin >= 0.0) || gap <= 0.0 {
        return Err(Error::invalid(format!("margin must lie in [0, p), got {margin}")));
    }
    let ln_n = (n as f64).ln();
    let mut t = ln_n / gap;
    while !(1.0 - params.q() - ln_n / t > margin) {
        t = t.next_up();
    }
    Ok(t)
}

fn check_lemma_hypothesis(params: &WalkParams, n: usize, horizon: f64) -> Result<()> {
    if !((1.0 - params.q()) * horizon > (n as f64).ln()) {
        return Err(Error::invalid(format!(
            "(1 - q) T > log N fails: (1 - q) T = {}, log N = {}",
            (1.0 - params.q()) * horizon,
            (n as f64).ln()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too few replicas to resolve the bound.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub chi: f64,
    pub empirical_tail: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub replicas: u64,
    pub exceedances: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailLemmaReport {
    pub n_types: usize,
    pub horizon: f64,
    pub threshold_base: f64,
    pub rows: Vec<TailRow>,
    pub capped_replicas: u64,
    /// No individual ever displaced further than its lineage jump count.
    pub displacement_within_jumps: bool,
}

impl TailLemmaReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }
}

/// Exceedance frequency of `max_v (S_v(T) - S_v(0)) > eT + chi` against
/// `e^{-chi}`.
pub fn check_tail_lemma(
    n_types: usize,
    params: WalkParams,
    horizon: f64,
    chi_grid: &[f64],
    replicas: usize,
    stream: RngStream,
) -> Result<TailLemmaReport> {
    check_lemma_hypothesis(&params, n_types, horizon)?;
    if replicas == 0 {
        return Err(Error::invalid("replicas >= 1 required"));
    }
    let opts = BranchingOptions::default();
    let outcomes = replicas::run(replicas, stream, |_, s| {
        let pop = simulate_branching(n_types, params, horizon, s, &opts)?;
        let within = pop
            .individuals
            .iter()
            .all(|ind| ind.displacement().unsigned_abs() <= ind.lineage_jumps);
        Ok::<_, Error>((pop.max_displacement(), pop.completed(), within))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let capped = outcomes.iter().filter(|o| !o.1).count() as u64;
    let base = E * horizon;
    let n = replicas as u64;
    let (_, zero_hit_high) = wilson_interval(0, n, Z95);
    let rows = chi_grid
        .iter()
        .map(|&chi| {
            let exceed = outcomes.iter().filter(|o| o.0 as f64 > base + chi).count() as u64;
            let prop = Proportion::new(exceed, n);
            let bound = (-chi).exp();
            let verdict = if prop.ci_high <= bound && capped == 0 {
                Verdict::Pass
            } else if zero_hit_high > bound || (capped > 0 && prop.ci_low <= bound) {
                Verdict::Inconclusive
            } else if prop.ci_high <= bound {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            TailRow {
                chi,
                empirical_tail: prop.frequency,
                ci_low: prop.ci_low,
                ci_high: prop.ci_high,
                bound,
                replicas: n,
                exceedances: exceed,
                verdict,
            }
        })
        .collect();
    Ok(TailLemmaReport {
        n_types,
        horizon,
        threshold_base: base,
        rows,
        capped_replicas: capped,
        displacement_within_jumps: outcomes.iter().all(|o| o.2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMomentCheck {
    pub delta: f64,
    pub horizon: f64,
    /// Sample of `exp(delta (M_T - M_0))`.
    pub estimate: MeanSummary,
    /// `log(e^{delta e T} / (1 - delta))`.
    pub log_bound: f64,
    pub holds: bool,
}

impl ExpMomentCheck {
    pub fn bound(&self) -> f64 {
        self.log_bound.exp()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("0 < delta < 1 required, got {delta}")));
    }
    Ok(())
}

/// Monte-Carlo `E[exp(delta (M_T - M_0))]` for the Fleming-Viot system
/// against `e^{delta e T} / (1 - delta)`.
pub fn check_exp_moment_lemma(
    initial: &Configuration,
    params: WalkParams,
    horizon: f64,
    delta: f64,
    replicas: usize,
    stream: RngStream,
) -> Result<ExpMomentCheck> {
    check_delta(delta)?;
    check_lemma_hypothesis(&params, initial.n(), horizon)?;
    let m0 = initial.max();
    let values = replicas::run(replicas, stream, |_, s| {
        let mut sim = Simulator::new(initial.clone(), params, s);
        sim.advance_to(horizon);
        (delta * (sim.max() - m0) as f64).exp()
    });
    let estimate = values.into_iter().collect::<MeanAccumulator>().summary();
    let log_bound = delta * E * horizon - (1.0 - delta).ln();
    Ok(ExpMomentCheck {
        delta,
        horizon,
        estimate,
        log_bound,
        holds: estimate.ci_high.ln() <= log_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationCheck {
    pub delta: f64,
    pub horizon: f64,
    pub fleming_viot: MeanSummary,
    pub branching: MeanSummary,
    pub holds: bool,
}

/// `E[exp(delta (M_T - M_0))]` for Fleming-Viot next to
/// `E[exp(delta max_v (S_v(T) - S_v(0)))]` for the branching system, each
/// replica driving both from the same stream.
pub fn check_domination(
    initial: &Configuration,
    params: WalkParams,
    horizon: f64,
    delta: f64,
    replicas: usize,
    stream: RngStream,
) -> Result<DominationCheck> {
    check_delta(delta)?;
    check_lemma_hypothesis(&params, initial.n(), horizon)?;
    let m0 = initial.max();
    let opts = BranchingOptions::default();
    let pairs = replicas::run(replicas, stream, |_, s| {
        let mut sim = Simulator::new(initial.clone(), params, s.fork(MOTION_TAG));
        sim.advance_to(horizon);
        let fv = (delta * (sim.max() - m0) as f64).exp();
        let pop = simulate_branching_from(initial.positions(), params, horizon, s, &opts)?;
        Ok::<_, Error>((fv, (delta * pop.max_displacement() as f64).exp()))
    });
    let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;
    let fleming_viot = pairs.iter().map(|p| p.0).collect::<MeanAccumulator>().summary();
    let branching = pairs.iter().map(|p| p.1).collect::<MeanAccumulator>().summary();
    let slack = 3.0 * fleming_viot.std_err.hypot(branching.std_err);
    Ok(DominationCheck {
        delta,
        horizon,
        fleming_viot,
        branching,
        holds: fleming_viot.mean <= branching.mean + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    fn params() -> WalkParams {
        WalkParams::new(0.3).unwrap()
    }

    #[test]
    fn zero_horizon_is_initial_population() {
        let pop = simulate_branching(5, params(), 0.0, RngStream::new(1, 0), &BranchingOptions::default()).unwrap();
        assert_eq!(pop.size(), 5);
        assert!(pop.rings.is_empty());
        assert_eq!(pop.max_displacement(), 0);
    }

    #[test]
    fn no_branching_without_clock_rate() {
        let opts = BranchingOptions::default();
        let pop = run(&[0; 4], params(), 0.0, 50.0, RngStream::new(1, 1), RngStream::new(1, 2), &opts).unwrap();
        assert_eq!(pop.size(), 4);
        assert!(pop.rings.is_empty());
    }

    #[test]
    fn splits_follow_marks() {
        let opts = BranchingOptions { record_paths: true, ..Default::default() };
        for seed in 0..30 {
            let pop = simulate_branching(4, params(), 2.0, RngStream::new(seed, 0), &opts).unwrap();
            let mut counts = vec![1usize; 4];
            for r in &pop.rings {
                assert_ne!(r.clock, r.mark);
                counts[r.clock] += counts[r.mark];
            }
            assert_eq!(counts, pop.type_counts());
            for ind in &pop.individuals {
                let root = pop.lineage_root(ind.id);
                assert!(root < 4);
                assert_eq!(pop.individuals[root].parent, None);
                if let Some(parent) = ind.parent {
                    assert!(parent < ind.id);
                    let ring = pop.rings.iter().find(|r| r.time == ind.birth_time).unwrap();
                    assert_eq!(ring.clock, ind.type_label);
                    assert_eq!(ring.mark, pop.individuals[parent].type_label);
                }
                let path = ind.path.as_ref().unwrap();
                assert!(path.windows(2).all(|w| (w[1].1 - w[0].1).abs() == 1 && w[1].0 > w[0].0));
                assert_eq!(path.last().unwrap().1, ind.position);
                assert!(ind.displacement().unsigned_abs() <= ind.lineage_jumps);
            }
        }
    }

    #[test]
    fn children_start_on_parent_site() {
        let opts = BranchingOptions { record_paths: true, ..Default::default() };
        let pop = simulate_branching_from(&[3, 8, 13], params(), 3.0, RngStream::new(4, 0), &opts).unwrap();
        for ind in pop.individuals.iter().filter(|i| i.parent.is_some()) {
            let parent = &pop.individuals[ind.parent.unwrap()];
            let parent_path = parent.path.as_ref().unwrap();
            let at_birth = parent_path.iter().take_while(|(t, _)| *t <= ind.birth_time).last().unwrap().1;
            assert_eq!(ind.path.as_ref().unwrap()[0].1, at_birth);
            assert_eq!(ind.origin, parent.origin);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let tight = BranchingOptions { cap: 10, record_paths: false };
        assert!(simulate_branching(5, params(), 5.0, RngStream::new(0, 0), &tight).is_err());
        let loose_precheck = BranchingOptions { cap: 12, record_paths: false };
        let mut hit = false;
        for seed in 0..50 {
            let pop = simulate_branching(5, params(), 1.0, RngStream::new(seed, 0), &loose_precheck).unwrap();
            assert!(pop.size() <= 12);
            hit |= matches!(pop.status, RunStatus::CapExceeded { .. });
        }
        assert!(hit);
    }

    #[test]
    fn branch_times_ignore_motion_stream() {
        let clock = RngStream::new(10, 0);
        let a = simulate_branching_split(&[0; 5], params(), 2.0, clock, RngStream::new(20, 0), &Default::default()).unwrap();
        let b = simulate_branching_split(&[0; 5], params(), 2.0, clock, RngStream::new(99, 7), &Default::default()).unwrap();
        assert_eq!(a.rings, b.rings);
        assert_ne!(
            a.individuals.iter().map(|i| i.position).collect::<Vec<_>>(),
            b.individuals.iter().map(|i| i.position).collect::<Vec<_>>()
        );
    }

    #[test]
    fn branch_time_law_across_motion_streams() {
        let times = |clock_seed: u64, motion_seed: u64| -> Vec<f64> {
            (0..2000u64)
                .flat_map(|i| {
                    let pop = simulate_branching_split(
                        &[0; 3],
                        params(),
                        2.0,
                        RngStream::new(clock_seed, i),
                        RngStream::new(motion_seed, i),
                        &Default::default(),
                    )
                    .unwrap();
                    pop.rings.into_iter().map(|r| r.time)
                })
                .collect()
        };
        let ks = ks_two_sample(&times(1, 2), &times(3, 4)).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn lemma_horizon_meets_hypothesis() {
        let w = params();
        let t = lemma_horizon(&w, 5, 0.01).unwrap();
        assert!(1.0 - w.q() - 5f64.ln() / t > 0.01);
        assert!((t - 5f64.ln() / 0.29).abs() < 1e-9);
        assert!(check_tail_lemma(5, w, 1.0, &[1.0], 10, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn tail_rows_and_trivial_chi() {
        let w = params();
        let t = lemma_horizon(&w, 3, 0.01).unwrap();
        let rep = check_tail_lemma(3, w, t, &[0.0, 2.0], 500, RngStream::new(3, 0)).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert_eq!(rep.rows[0].bound, 1.0);
        assert_eq!(rep.rows[0].verdict, Verdict::Pass);
        assert!(rep.displacement_within_jumps);
        // 500 replicas cannot resolve e^{-8}
        let rep = check_tail_lemma(3, w, t, &[8.0], 500, RngStream::new(3, 0)).unwrap();
        assert_eq!(rep.rows[0].verdict, Verdict::Inconclusive);
    }

    #[test]
    fn exp_moment_small_delta_tends_to_one() {
        let w = params();
        let c = Configuration::all_at(4, 5).unwrap();
        let t = lemma_horizon(&w, 4, 0.01).unwrap();
        let r = check_exp_moment_lemma(&c, w, t, 1e-9, 200, RngStream::new(1, 0)).unwrap();
        assert!((r.estimate.mean - 1.0).abs() < 1e-6);
        assert!(r.bound() > 1.0 && r.bound() < 1.0 + 1e-6);
        assert!(r.holds);
        assert!(check_exp_moment_lemma(&c, w, t, 1.0, 10, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn domination_small_instance() {
        let w = params();
        let c = Configuration::all_at(4, 5).unwrap();
        let t = lemma_horizon(&w, 4, 0.01).unwrap();
        let r = check_domination(&c, w, t, 0.3, 2000, RngStream::new(6, 0)).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.fleming_viot.mean < r.branching.mean);
    }
}
