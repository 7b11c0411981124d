mod common;

use common::{gantry_plane_scenario, gantry_wall_scenario, q, WallClock, FAR_ROWS};
use surfreach::atlas::check_transition;
use surfreach::clock::{Clock, NullClock};
use surfreach::collision::{CollisionWorld, Cuboid, Primitive};
use surfreach::constraint::{ambient_distance, AlignmentSign, ExtendedConfig};
use surfreach::coverage::{cell_index, coverage_fraction, exhaustive_baseline, BaselineSet};
use surfreach::explore::{init_root, run, Algorithm, Budget, ExplorerParams, RunOutcome};
use surfreach::nalgebra::{DMatrix, DVector, Point3, Vector3};
use surfreach::scenario::Scenario;
use surfreach::Error;

const ALGORITHMS: [Algorithm; 2] = [Algorithm::Rrt, Algorithm::Biased];

fn params(seed: u64, samples: u64) -> ExplorerParams {
    ExplorerParams {
        seed,
        budget: Budget::samples(samples),
        ..ExplorerParams::default()
    }
}

struct Recorded {
    outcome: RunOutcome,
    edges: Vec<(ExtendedConfig, ExtendedConfig, u64)>,
}

fn recorded(scenario: &Scenario, algorithm: Algorithm, p: &ExplorerParams) -> Recorded {
    let mut edges = Vec::new();
    let mut observe = |e: &surfreach::explore::AcceptedEdge<'_>| {
        edges.push((e.parent.clone(), e.state.clone(), e.iteration));
    };
    let outcome = run(scenario, algorithm, p, &WallClock::start(), Some(&mut observe)).unwrap();
    Recorded { outcome, edges }
}

#[test]
fn root_of_an_on_surface_start_is_the_start() {
    let sys = common::gantry_plane();
    let root = init_root(&sys, &CollisionWorld::empty(), &q(&[0.2, -0.1, 0.0, 0.0, 0.0, 0.0])).unwrap();
    assert!((root.q.clone() - q(&[0.2, -0.1, 0.0, 0.0, 0.0, 0.0])).amax() < 1e-15);
    assert!((root.u - 0.2).abs() < 1e-15 && (root.v + 0.1).abs() < 1e-15);
}

#[test]
fn hovering_start_takes_the_least_squares_step() {
    let sys = common::gantry_plane();
    let q0 = q(&[0.1, 0.05, 0.05, 0.2, 0.0, 0.0]);
    let root = init_root(&sys, &CollisionWorld::empty(), &q0).unwrap();
    // the system is linear here, so one pseudo-inverse step is exact
    let x0 = ExtendedConfig::new(q0, 0.1, 0.05);
    let j = sys.constraint_jacobian(&x0).unwrap();
    let j = DMatrix::from_iterator(5, 8, j.iter().copied());
    let c = DVector::from_iterator(5, sys.constraint(&x0).unwrap().iter().copied());
    let expected = x0.ambient() - j.pseudo_inverse(1e-12).unwrap() * c;
    assert!((root.ambient() - expected).amax() < 1e-12, "{}", root.ambient());
    assert!(root.q[2].abs() < 1e-12);
}

#[test]
fn colliding_or_flipped_starts_are_rejected() {
    let sys = common::gantry_plane();
    let blocker = CollisionWorld::new(
        vec![Primitive::Cuboid(Cuboid::new(Point3::origin(), Vector3::new(0.05, 0.05, 0.05)))],
        0.0,
    )
    .unwrap();
    let e = init_root(&sys, &blocker, &q(&[0.0; 6])).unwrap_err();
    assert!(matches!(e, Error::Initialization(_)), "{e}");
    let flipped = q(&[0.0, 0.0, 0.0, 0.0, std::f64::consts::PI, 0.0]);
    assert!(init_root(&sys, &CollisionWorld::empty(), &flipped).is_err());
    assert!(init_root(&sys, &CollisionWorld::empty(), &q(&[0.0; 5])).is_err());
}

#[test]
fn zero_budget_records_only_the_root() {
    let s = gantry_plane_scenario();
    for a in ALGORITHMS {
        let o = run(&s, a, &params(1, 0), &NullClock, None).unwrap();
        assert_eq!(o.covered(), 1);
        assert_eq!((o.samples, o.accepted, o.last_iteration), (0, 0, 1));
        assert_eq!(o.series.len(), 1);
    }
}

#[test]
fn biased_covers_the_open_plane() {
    let o = run(&gantry_plane_scenario(), Algorithm::Biased, &params(1, 5000), &NullClock, None).unwrap();
    assert_eq!(o.covered(), 256);
}

#[test]
fn wall_keeps_explorers_on_the_near_side() {
    let s = gantry_wall_scenario();
    for a in ALGORITHMS {
        for seed in 1..=3 {
            let o = run(&s, a, &params(seed, 20_000), &NullClock, None).unwrap();
            let far = FAR_ROWS.flat_map(|i| (0..16).map(move |j| (i, j))).filter(|&(i, j)| o.coverage.is_covered(i, j)).count();
            assert_eq!(far, 0, "{} seed {seed}", a.name());
            assert!(o.covered() > 100);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    for s in [gantry_plane_scenario(), gantry_wall_scenario()] {
        for a in ALGORITHMS {
            let p = params(5, 3000);
            let x = run(&s, a, &p, &WallClock::start(), None).unwrap();
            let y = run(&s, a, &p, &WallClock::start(), None).unwrap();
            assert_eq!(x.coverage, y.coverage);
            assert_eq!((x.accepted, x.rejections, x.samples), (y.accepted, y.rejections, y.samples));
            assert_eq!((x.stored_states, x.occupied_cells, x.charts), (y.stored_states, y.occupied_cells, y.charts));
            let strip = |o: &RunOutcome| o.series.iter().map(|p| (p.iteration, p.covered)).collect::<Vec<_>>();
            assert_eq!(strip(&x), strip(&y));
            assert_eq!(x.root.ambient(), y.root.ambient());
        }
    }
}

#[test]
fn accepted_states_are_sound() {
    let s = gantry_wall_scenario();
    let sys = &s.system;
    for a in ALGORITHMS {
        let p = params(2, 4000);
        let r = recorded(&s, a, &p);
        let o = &r.outcome;
        assert_eq!(r.edges.len() as u64, o.accepted);

        // series: strictly increasing iterations, monotone coverage, final entry
        assert!(o.series.windows(2).all(|w| w[0].iteration < w[1].iteration && w[0].covered <= w[1].covered));
        let last = o.series.last().unwrap();
        assert_eq!((last.iteration, last.covered), (o.last_iteration, o.covered()));

        let mut cells = std::collections::BTreeSet::new();
        cells.insert(cell_index(sys.surface().domain(), 16, o.root.u, o.root.v));
        for (parent, state, _) in &r.edges {
            assert!(sys.constraint(state).unwrap().amax() <= 1e-6);
            assert!(s.world.state_valid(sys, state));
            assert_eq!(sys.alignment_sign(state).unwrap(), AlignmentSign::Aligned);
            if a == Algorithm::Rrt {
                assert!(ambient_distance(parent, state) <= p.d_max + 1e-6);
            }
            cells.insert(cell_index(sys.surface().domain(), 16, state.u, state.v));
        }
        let covered: std::collections::BTreeSet<_> = o.coverage.covered_cells().into_iter().collect();
        assert_eq!(cells, covered);

        // edges re-validate after the run
        for (parent, state, _) in r.edges.iter().step_by(25) {
            assert!(check_transition(sys, &p.atlas, parent, state, p.delta_check, |x| s.world.state_valid(sys, x)));
        }
    }
}

#[test]
fn covered_cells_are_point_reachable() {
    let s = gantry_wall_scenario();
    for a in ALGORITHMS {
        let o = run(&s, a, &params(3, 2000), &NullClock, None).unwrap();
        // at least 10x the accepted count; slivers beside the wall need more draws
        let baseline = exhaustive_baseline(&s.system, &s.world, 16, (10 * o.accepted).max(200_000), 1);
        for (i, j) in o.coverage.covered_cells() {
            assert!(baseline.is_reachable(i, j), "cell ({i}, {j})");
        }
        // coverage fraction never drops along the run's visit order
        let mut stamps: Vec<u64> = o.coverage.order().iter().copied().filter(|&t| t > 0).collect();
        stamps.sort_unstable();
        let mut last = 0.0;
        for (k, _) in stamps.iter().enumerate() {
            let f = (k + 1) as f64 / baseline.reachable_count() as f64;
            assert!(f >= last);
            last = f;
        }
        assert!((coverage_fraction(&o.coverage, &baseline).unwrap() - 100.0 * last).abs() < 1e-9);
    }
}

#[test]
fn baseline_examples() {
    let s = gantry_plane_scenario();
    let empty = exhaustive_baseline(&s.system, &s.world, 16, 0, 1);
    assert_eq!(empty.reachable_count(), 0);
    assert_eq!(empty, BaselineSet::empty(16));
    let full = exhaustive_baseline(&s.system, &s.world, 16, 100_000, 1);
    assert_eq!(full.reachable_count(), 256);

    let w = gantry_wall_scenario();
    let a = exhaustive_baseline(&w.system, &w.world, 16, 50_000, 4);
    let b = exhaustive_baseline(&w.system, &w.world, 16, 50_000, 4);
    assert_eq!(a, b);
    let far = FAR_ROWS.flat_map(|i| (0..16).map(move |j| (i, j))).filter(|&(i, j)| a.is_reachable(i, j)).count();
    assert!(far >= 20, "far cells marked: {far}");
}

#[test]
fn time_limit_ends_a_run() {
    let s = gantry_plane_scenario();
    let p = ExplorerParams {
        budget: Budget {
            samples: None,
            time_limit: Some(0.2),
        },
        ..ExplorerParams::default()
    };
    let clock = WallClock::start();
    let o = run(&s, Algorithm::Biased, &p, &clock, None).unwrap();
    assert!(o.samples > 0);
    assert!(clock.elapsed() < 2.0);
}

#[test]
fn seeded_rng_streams_differ() {
    let s = gantry_plane_scenario();
    let a = run(&s, Algorithm::Rrt, &params(1, 500), &NullClock, None).unwrap();
    let b = run(&s, Algorithm::Rrt, &params(2, 500), &NullClock, None).unwrap();
    assert_ne!(a.coverage.visit_counts(), b.coverage.visit_counts());
}
