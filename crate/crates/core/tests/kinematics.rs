mod common;

use common::q;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;
use surfreach::kinematics::{rotation_delta, RobotModel};
use surfreach::nalgebra::{DVector, Matrix3, Vector3};

fn robots() -> Vec<RobotModel> {
    vec![RobotModel::gantry6(), RobotModel::articulated6(), RobotModel::articulated7()]
}

fn joints_within(robot: &RobotModel, unit: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        robot.dof(),
        robot.limits().iter().zip(unit).map(|(&(lo, hi), &t)| lo + t * (hi - lo)),
    )
}

#[test]
fn articulated6_home_position_is_sum_of_offsets() {
    // at q = 0 every rotation is the identity, so offsets simply add up
    let offsets = [
        [0.0, 0.0, 0.4],
        [0.025, 0.0, 0.0],
        [0.0, 0.0, 0.455],
        [0.1, 0.0, 0.035],
        [0.32, 0.0, 0.0],
        [0.08, 0.0, 0.0],
        [0.1, 0.0, 0.0],
    ];
    let mut expected = Vector3::zeros();
    for o in offsets {
        expected += Vector3::from(o);
    }
    let pose = RobotModel::articulated6().fk_pose(&DVector::zeros(6));
    assert!((pose.position - expected).amax() < 1e-12, "{}", pose.position);
    // tool z is the flange x axis
    assert!((pose.rotation * Vector3::z() - Vector3::x()).amax() < 1e-12);
}

#[test]
fn gantry_examples() {
    let g = RobotModel::gantry6();
    let pose = g.fk_pose(&q(&[0.2, -0.1, 0.3, 0.0, 0.0, 0.0]));
    assert!((pose.position - Vector3::new(0.2, -0.1, 0.3)).amax() < 1e-15);
    assert!((pose.rotation.matrix() - Matrix3::identity()).amax() < 1e-15);
    let a = g.tool_axis(&q(&[0.0, 0.0, 0.0, FRAC_PI_2, FRAC_PI_2, 0.0]));
    assert!((a - Vector3::y()).amax() < 1e-12, "{a}");
    let j = g.geometric_jacobian(&q(&[0.3, -0.2, 0.1, 0.4, -0.7, 1.1]));
    for c in 3..6 {
        assert!(j.fixed_view::<3, 1>(0, c).amax() < 1e-15);
    }
}

#[test]
fn articulated6_jacobian_matches_finite_differences() {
    let robot = RobotModel::articulated6();
    let h = 1e-6;
    let mut rng = 0x2545f4914f6cdd1du64;
    let mut next = || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        (rng >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..20 {
        let unit: Vec<f64> = (0..6).map(|_| next()).collect();
        let x = joints_within(&robot, &unit);
        let j = robot.geometric_jacobian(&x);
        for k in 0..6 {
            let mut p = x.clone();
            let mut m = x.clone();
            p[k] += h;
            m[k] -= h;
            let (fp, fm) = (robot.fk_pose(&p), robot.fk_pose(&m));
            let lin = (fp.position - fm.position) / (2.0 * h);
            let ang = rotation_delta(&fm.rotation, &fp.rotation) / (2.0 * h);
            for r in 0..3 {
                assert!((j[(r, k)] - lin[r]).abs() <= 1e-5);
                assert!((j[(r + 3, k)] - ang[r]).abs() <= 1e-5);
            }
        }
    }
}

proptest! {
    #[test]
    fn rotations_are_proper(r in 0usize..3, unit in prop::collection::vec(0.0..=1.0f64, 7)) {
        let robot = &robots()[r];
        let x = joints_within(robot, &unit);
        let rot = robot.fk_pose(&x).rotation;
        let m = rot.matrix();
        prop_assert!((m.transpose() * m - Matrix3::identity()).amax() <= 1e-9);
        prop_assert!((m.determinant() - 1.0).abs() <= 1e-9);
        prop_assert!((robot.tool_axis(&x).norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn jacobian_vector_products_match_finite_differences(
        r in 0usize..3,
        unit in prop::collection::vec(0.05..=0.95f64, 7),
        dir in prop::collection::vec(-1.0..=1.0f64, 7),
    ) {
        let robot = &robots()[r];
        let n = robot.dof();
        let x = joints_within(robot, &unit);
        let mut d = DVector::from_column_slice(&dir[..n]);
        prop_assume!(d.norm() > 1e-3);
        d /= d.norm();
        let h = 1e-6;
        let (fp, fm) = (robot.fk_pose(&(&x + &d * h)), robot.fk_pose(&(&x - &d * h)));
        let jd = robot.geometric_jacobian(&x) * &d;
        let lin = (fp.position - fm.position) / (2.0 * h);
        let ang = rotation_delta(&fm.rotation, &fp.rotation) / (2.0 * h);
        for k in 0..3 {
            prop_assert!((jd[k] - lin[k]).abs() <= 1e-5, "linear {} vs {}", jd[k], lin[k]);
            prop_assert!((jd[k + 3] - ang[k]).abs() <= 1e-5, "angular {} vs {}", jd[k + 3], ang[k]);
        }
    }
}
