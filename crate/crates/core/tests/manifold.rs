mod common;

use common::{on_manifold, q, systems};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfreach::atlas::{check_transition, geodesic_interpolate, null_basis, walk, Atlas, AtlasParams, Chart};
use surfreach::collision::CollisionWorld;
use surfreach::constraint::{ambient_distance, ConstraintSystem, ExtendedConfig};
use surfreach::nalgebra::{DMatrix, DVector};

fn residual(sys: &ConstraintSystem, x: &ExtendedConfig) -> f64 {
    sys.constraint(x).unwrap().amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobian_matches_central_differences(k in 0usize..7, seed in any::<u64>()) {
        let (_, sys, center) = &systems()[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = common::jittered(sys, center, 0.5, &mut rng);
        let j = sys.constraint_jacobian(&x).unwrap();
        let base = x.ambient();
        let h = 1e-6;
        let mut fd = DMatrix::zeros(5, base.len());
        for c in 0..base.len() {
            let mut p = base.clone();
            let mut m = base.clone();
            p[c] += h;
            m[c] -= h;
            let cp = sys.constraint(&ExtendedConfig::from_ambient(&p)).unwrap();
            let cm = sys.constraint(&ExtendedConfig::from_ambient(&m)).unwrap();
            fd.set_column(c, &((cp - cm) / (2.0 * h)));
        }
        let err = (DMatrix::from_iterator(5, base.len(), j.iter().copied()) - &fd).amax() / fd.amax();
        prop_assert!(err <= 1e-4, "relative error {err:e}");
    }

    #[test]
    fn projection_lands_and_is_idempotent(k in 0usize..7, seed in any::<u64>()) {
        let (_, sys, center) = &systems()[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = common::jittered(sys, center, 0.3, &mut rng);
        if let Ok(p) = sys.project(&x) {
            prop_assert!(residual(sys, &p) <= 1e-6);
            let pp = sys.project(&p.clone().unprojected()).unwrap();
            prop_assert!(ambient_distance(&p, &pp) <= 1e-9);
        }
    }

    #[test]
    fn chart_bases_span_the_null_space(k in 0usize..7, seed in any::<u64>()) {
        let (_, sys, center) = &systems()[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = on_manifold(sys, center, 0.3, &mut rng);
        let b = null_basis(sys, &x).unwrap();
        prop_assert_eq!(b.ncols(), sys.robot().dof() - 3);
        let j = sys.constraint_jacobian(&x).unwrap();
        let jb = DMatrix::from_iterator(5, b.nrows(), j.iter().copied()) * &b;
        prop_assert!(jb.amax() <= 1e-7);
        let gram = b.transpose() * &b;
        prop_assert!((gram - DMatrix::identity(b.ncols(), b.ncols())).amax() <= 1e-9);
    }

    #[test]
    fn transitions_take_short_steps(seed in any::<u64>()) {
        let sys = common::gantry_paraboloid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = q(&[0.0, 0.0, 0.0, 0.3, 0.0, 0.0]);
        let a = on_manifold(&sys, &center, 0.3, &mut rng);
        let b = on_manifold(&sys, &center, 0.3, &mut rng);
        let params = AtlasParams::default();
        let delta = 0.01;
        let world = CollisionWorld::empty();
        let ok = check_transition(&sys, &params, &a, &b, delta, |x| world.state_valid(&sys, x));
        let w = walk(&sys, &params, &a, &b, delta, None, |x| world.state_valid(&sys, x));
        prop_assert_eq!(ok, w.reached());
        for s in &w.states {
            prop_assert!(residual(&sys, s) <= 1e-6);
        }
        if ok {
            for pair in w.states.windows(2) {
                prop_assert!(ambient_distance(&pair[0], &pair[1]) <= 2.0 * delta);
            }
        }
    }
}

#[test]
fn flat_interpolation_is_linear() {
    let sys = common::gantry_plane();
    let params = AtlasParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // exact manifold points: tool on the plane, pitch and roll zero
    let mut exact = || {
        let (x, y, yaw) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        sys.project(&ExtendedConfig::new(q(&[x, y, 0.0, yaw, 0.0, 0.0]), x, y)).unwrap()
    };
    for _ in 0..20 {
        let a = exact();
        let b = exact();
        for t in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let x = geodesic_interpolate(&sys, &params, &a, &b, t).unwrap();
            let lin = a.ambient() * (1.0 - t) + b.ambient() * t;
            assert!((x.ambient() - &lin).amax() <= 1e-9, "t = {t}: {} vs {}", x.ambient(), lin);
        }
    }
}

#[test]
fn curved_interpolation_reaches_the_goal() {
    let sys = common::gantry_paraboloid();
    let params = AtlasParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let center = q(&[0.0, 0.0, 0.0, 0.3, 0.0, 0.0]);
    for _ in 0..20 {
        let a = on_manifold(&sys, &center, 0.3, &mut rng);
        let b = on_manifold(&sys, &center, 0.3, &mut rng);
        let end = geodesic_interpolate(&sys, &params, &a, &b, 1.0).unwrap();
        assert!(ambient_distance(&end, &b) <= 1e-3);
        let mid = geodesic_interpolate(&sys, &params, &a, &b, 0.5).unwrap();
        assert!(residual(&sys, &mid) <= 1e-6);
    }
}

#[test]
fn paraboloid_chart_round_trip() {
    let sys = common::gantry_paraboloid();
    let rho = AtlasParams::default().rho;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let anchor = on_manifold(&sys, &q(&[0.0, 0.0, 0.0, 0.3, 0.0, 0.0]), 0.2, &mut rng);
    let chart = Chart::new(&sys, anchor.clone(), 0, rho).unwrap();
    assert!(chart.to_chart(&anchor).amax() == 0.0);
    for _ in 0..200 {
        let y = surfreach::atlas::uniform_ball(chart.dim(), rho, &mut rng);
        let x = chart.to_ambient(&sys, &y).unwrap();
        assert!(residual(&sys, &x) <= 1e-6);
        assert!((chart.to_chart(&x) - &y).amax() <= 1e-3);
    }
}

#[test]
fn flat_chart_samples_stay_within_radius() {
    let sys = common::gantry_plane();
    let params = AtlasParams::default();
    let mut atlas = Atlas::new(params);
    let anchor = sys.project(&ExtendedConfig::new(q(&[0.0; 6]), 0.0, 0.0)).unwrap();
    atlas.create_chart(&sys, anchor.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let (x, id) = atlas.sample_uniform(&sys, &mut rng).unwrap();
        assert_eq!(id, 0);
        assert!(ambient_distance(&x, &anchor) <= params.rho + 1e-12);
        assert!(residual(&sys, &x) <= 1e-6);
    }
}

#[test]
fn uniform_sampling_picks_charts_evenly() {
    let sys = common::gantry_plane();
    let mut atlas = Atlas::new(AtlasParams::default());
    for (x, y) in [(-0.15, 0.0), (0.15, 0.0)] {
        let a = sys.project(&ExtendedConfig::new(q(&[x, y, 0.0, 0.0, 0.0, 0.0]), x, y)).unwrap();
        atlas.create_chart(&sys, a).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 10_000;
    let first = (0..draws)
        .filter(|_| atlas.sample_uniform(&sys, &mut rng).unwrap().1 == 0)
        .count();
    let share = first as f64 / draws as f64;
    assert!((share - 0.5).abs() <= 0.03, "share {share}");
}

#[test]
fn gaussian_samples_have_nominal_spread() {
    let sys = common::gantry_plane();
    let mut atlas = Atlas::new(AtlasParams::default());
    let x = sys.project(&ExtendedConfig::new(q(&[0.0; 6]), 0.0, 0.0)).unwrap();
    let id = atlas.create_chart(&sys, x.clone()).unwrap();
    let basis = atlas.chart(id).basis().clone();
    let sigma = 0.04;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draws = 10_000;
    let mut sum = DVector::zeros(basis.ncols());
    let mut sq = DVector::zeros(basis.ncols());
    for _ in 0..draws {
        let (s, _) = atlas.sample_gaussian_near(&sys, &x, Some(id), sigma, &mut rng).unwrap();
        assert!(residual(&sys, &s) <= 1e-6);
        let d = s.ambient() - x.ambient();
        // flat manifold: the offset has no normal component
        assert!((&d - &basis * (basis.transpose() * &d)).amax() <= 1e-9);
        let c = basis.transpose() * d;
        sum += &c;
        sq += c.component_mul(&c);
    }
    for k in 0..basis.ncols() {
        let mean = sum[k] / draws as f64;
        let sd = (sq[k] / draws as f64 - mean * mean).sqrt();
        assert!((sd / sigma - 1.0).abs() <= 0.05, "axis {k}: sd {sd}");
    }
}

#[test]
fn transition_examples() {
    let sys = common::gantry_plane();
    let params = AtlasParams::default();
    let empty = CollisionWorld::empty();
    let wall = common::wall();
    let at = |x: f64, y: f64, yaw: f64| {
        sys.project(&ExtendedConfig::new(q(&[x, y, 0.0, yaw, 0.0, 0.0]), x, y)).unwrap()
    };
    let a = at(0.0, 0.0, 0.0);
    assert!(check_transition(&sys, &params, &a, &a, 0.01, |_| true));
    let (near, far) = (at(0.05, 0.0, 0.0), at(0.22, 0.05, 0.0));
    assert!(empty.state_valid(&sys, &near) && wall.state_valid(&sys, &far));
    assert!(!check_transition(&sys, &params, &near, &far, 0.01, |x| wall.state_valid(&sys, x)));
    // dense sampling of the straight segment hits the wall
    assert!((0..=1000).any(|k| {
        let t = k as f64 / 1000.0;
        let x = ExtendedConfig::from_ambient(&(near.ambient() * (1.0 - t) + far.ambient() * t));
        !wall.state_valid(&sys, &x)
    }));

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let center = q(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let mut checked = 0;
    while checked < 50 {
        let a = on_manifold(&sys, &center, 0.3, &mut rng);
        let b = on_manifold(&sys, &center, 0.3, &mut rng);
        if ambient_distance(&a, &b) > 0.5 {
            continue;
        }
        assert!(check_transition(&sys, &params, &a, &b, 0.01, |x| empty.state_valid(&sys, x)));
        checked += 1;
    }
}
