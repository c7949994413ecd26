use fvlab::branching::{check_domination, lemma_horizon, simulate_branching, BranchingOptions};
use fvlab::coloring::simulate_colored;
use fvlab::model::DEFAULT_MARGIN;
use fvlab::sim::{simulate, EventKind};
use fvlab::{Configuration, RngStream, Schedule, WalkParams};
use proptest::prelude::*;

fn w() -> WalkParams {
    WalkParams::new(0.3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn walks_stay_on_positive_sites(
        positions in prop::collection::vec(1i64..40, 2..12),
        seed in any::<u64>(),
        horizon in 0.5f64..30.0,
    ) {
        let n = positions.len();
        let out = simulate(Configuration::new(positions).unwrap(), w(), horizon, RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(out.config.n(), n);
        prop_assert!(out.config.positions().iter().all(|&x| x >= 1));
        prop_assert!(out.log.is_well_formed());
        prop_assert_eq!(out.log.len() as u64, out.stats.jump_counts.iter().sum::<u64>());
        for e in out.log.events().iter().filter(|e| matches!(e.kind, EventKind::SelectionJump)) {
            prop_assert!(e.target.is_some_and(|t| t != e.walk));
        }
    }

    #[test]
    fn same_stream_same_path(seed in any::<u64>(), stream_id in 0u64..8) {
        let c = Configuration::new(vec![1, 4, 9]).unwrap();
        let a = simulate(c.clone(), w(), 15.0, RngStream::new(seed, stream_id)).unwrap();
        let b = simulate(c, w(), 15.0, RngStream::new(seed, stream_id)).unwrap();
        prop_assert_eq!(a.log.digest(), b.log.digest());
        prop_assert_eq!(a.stats.max_path, b.stats.max_path);
    }
}

#[test]
fn branching_population_never_shrinks() {
    for seed in 0..20 {
        let pop = simulate_branching(4, w(), 3.0, RngStream::new(seed, 1), &BranchingOptions::default()).unwrap();
        assert!(pop.completed());
        assert!(pop.size() >= 4);
        assert_eq!(pop.type_counts().iter().sum::<usize>(), pop.size());
    }
}

#[test]
fn fleming_viot_moment_dominated_by_branching() {
    let horizon = lemma_horizon(&w(), 4, DEFAULT_MARGIN).unwrap();
    let c = check_domination(&Configuration::all_at(4, 3).unwrap(), w(), horizon, 0.1, 2000, RngStream::new(5, 0)).unwrap();
    assert!(c.holds, "{c:?}");
    assert!(c.fleming_viot.mean <= c.branching.mean);
}

#[test]
fn colored_run_preserves_walk_count() {
    let schedule = Schedule::minimal(&w(), 8, DEFAULT_MARGIN).unwrap();
    let l = schedule.l_threshold.ceil() as i64;
    let initial = Configuration::new(vec![1, 2, 3, 4, l, l, l + 5, 2 * l]).unwrap();
    for seed in 0..10 {
        let run = simulate_colored(&initial, w(), &schedule, RngStream::new(seed, 2)).unwrap();
        let s = &run.state;
        assert_eq!(s.colors.len(), 8);
        assert_eq!(s.fv_positions.n(), 8);
        assert!(s.green_shadows.len() <= 8);
        assert!(s.coupling_holds(schedule.t_horizon));
        assert_eq!(s.red_positions().len() + s.black_count(), 8);
    }
}
