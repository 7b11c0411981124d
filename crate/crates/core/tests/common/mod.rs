#![allow(dead_code)]

use std::time::Instant;

use surfreach::clock::Clock;
use surfreach::collision::{CollisionWorld, Cuboid, Primitive};
use surfreach::constraint::ConstraintSystem;
use surfreach::explore::ExplorerParams;
use surfreach::kinematics::RobotModel;
use surfreach::nalgebra::{DVector, Isometry3, Point3, Vector3};
use surfreach::scenario::Scenario;
use surfreach::surface::{Domain, Surface, SurfaceKind};

pub struct WallClock(pub Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub fn q(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}

pub fn square(h: f64) -> Domain {
    Domain::new(-h, h, -h, h).unwrap()
}

pub fn xy_plane(h: f64) -> Surface {
    Surface::new(
        SurfaceKind::Plane {
            origin: Vector3::zeros(),
            span_u: Vector3::x(),
            span_v: Vector3::y(),
        },
        square(h),
    )
    .unwrap()
}

pub fn gantry_plane() -> ConstraintSystem {
    ConstraintSystem::new(RobotModel::gantry6(), xy_plane(0.3))
}

pub fn gantry_paraboloid() -> ConstraintSystem {
    ConstraintSystem::new(
        RobotModel::gantry6(),
        Surface::new(SurfaceKind::Paraboloid { a: 0.5, b: 0.5 }, square(0.3)).unwrap(),
    )
}

pub fn gantry_sinusoid() -> ConstraintSystem {
    ConstraintSystem::new(
        RobotModel::gantry6(),
        Surface::new(
            SurfaceKind::Sinusoid {
                amplitude: 0.03,
                frequency: 8.0,
            },
            square(0.3),
        )
        .unwrap(),
    )
}

pub fn gantry_bezier() -> ConstraintSystem {
    let control = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let z = if i == 1 && j == 1 { 0.1 } else { 0.0 };
                    Vector3::new(-0.3 + 0.3 * i as f64, -0.3 + 0.3 * j as f64, z)
                })
                .collect()
        })
        .collect();
    ConstraintSystem::new(
        RobotModel::gantry6(),
        Surface::new(SurfaceKind::BezierPatch { control }, Domain::new(0.0, 1.0, 0.0, 1.0).unwrap()).unwrap(),
    )
}

/// Face-down plane in front of an arm (normal -z).
pub fn arm_plane(robot: RobotModel, origin: Vector3<f64>) -> ConstraintSystem {
    let plane = Surface::new(
        SurfaceKind::Plane {
            origin,
            span_u: Vector3::y(),
            span_v: Vector3::x(),
        },
        Domain::new(-0.3, 0.3, -0.2, 0.2).unwrap(),
    )
    .unwrap();
    ConstraintSystem::new(robot, plane)
}

pub fn articulated6_plane() -> ConstraintSystem {
    arm_plane(RobotModel::articulated6(), Vector3::new(0.6, 0.0, 0.2))
}

pub fn articulated6_q0() -> DVector<f64> {
    q(&[0.0, 0.768, 0.283, 0.0, 0.519, 0.0])
}

pub fn articulated7_plane() -> ConstraintSystem {
    arm_plane(RobotModel::articulated7(), Vector3::new(0.5, 0.0, 0.15))
}

pub fn articulated7_q0() -> DVector<f64> {
    q(&[0.0, 0.475, 0.0, 1.899, 0.0, 0.767, 0.0])
}

/// Face-down wavy sheet in front of the 6R arm.
pub fn articulated6_sinusoid() -> ConstraintSystem {
    let sheet = Surface::placed(
        SurfaceKind::Sinusoid {
            amplitude: 0.03,
            frequency: 8.0,
        },
        square(0.25),
        Isometry3::new(Vector3::new(0.6, 0.0, 0.2), Vector3::x() * std::f64::consts::PI),
    )
    .unwrap();
    ConstraintSystem::new(RobotModel::articulated6(), sheet)
}

/// Box wall over x in [0.10, 0.15] crossing the whole plane.
pub fn wall() -> CollisionWorld {
    CollisionWorld::new(
        vec![Primitive::Cuboid(Cuboid::new(
            Point3::new(0.125, 0.0, 0.0),
            Vector3::new(0.025, 0.5, 0.5),
        ))],
        0.0,
    )
    .unwrap()
}

pub fn gantry_plane_scenario() -> Scenario {
    Scenario::new(
        "gantry_plane",
        gantry_plane(),
        CollisionWorld::empty(),
        q(&[0.0, 0.0, 0.1, 0.0, 0.0, 0.0]),
        16,
        ExplorerParams::default(),
    )
    .unwrap()
}

pub fn gantry_wall_scenario() -> Scenario {
    Scenario::new(
        "gantry_wall",
        gantry_plane(),
        wall(),
        q(&[-0.2, 0.0, 0.0, 0.0, 0.0, 0.0]),
        16,
        ExplorerParams::default(),
    )
    .unwrap()
}

/// Grid rows at or beyond the far face of [`wall`] for a 16 grid over ±0.3.
pub const FAR_ROWS: std::ops::Range<usize> = 12..16;

use rand::Rng;
use surfreach::constraint::ExtendedConfig;

/// Joint vector `center` jittered by up to `spread` per joint, paired with a
/// uniform domain point. Not projected.
pub fn jittered<R: Rng>(sys: &ConstraintSystem, center: &DVector<f64>, spread: f64, rng: &mut R) -> ExtendedConfig {
    let robot = sys.robot();
    let qv = DVector::from_iterator(
        robot.dof(),
        center.iter().zip(robot.limits()).map(|(&c, &(lo, hi))| {
            (c + rng.random_range(-spread..=spread)).clamp(lo, hi)
        }),
    );
    let d = sys.surface().domain();
    ExtendedConfig::new(
        qv,
        rng.random_range(d.u_min..=d.u_max),
        rng.random_range(d.v_min..=d.v_max),
    )
}

/// A projected state near `center` inside limits and domain.
pub fn on_manifold<R: Rng>(sys: &ConstraintSystem, center: &DVector<f64>, spread: f64, rng: &mut R) -> ExtendedConfig {
    for _ in 0..1000 {
        let x = jittered(sys, center, spread, rng);
        if let Ok(p) = sys.project(&x) {
            if sys.robot().within_limits(&p.q) && sys.surface().in_domain(p.u, p.v) {
                return p;
            }
        }
    }
    panic!("no on-manifold state near {center}");
}

/// Test systems with a start configuration each.
pub fn systems() -> Vec<(&'static str, ConstraintSystem, DVector<f64>)> {
    let g = q(&[0.0, 0.0, 0.0, 0.3, 0.0, 0.0]);
    vec![
        ("gantry_plane", gantry_plane(), g.clone()),
        ("gantry_paraboloid", gantry_paraboloid(), g.clone()),
        ("gantry_sinusoid", gantry_sinusoid(), g.clone()),
        ("gantry_bezier", gantry_bezier(), g),
        ("articulated6_plane", articulated6_plane(), articulated6_q0()),
        ("articulated6_sinusoid", articulated6_sinusoid(), articulated6_q0()),
        ("articulated7_plane", articulated7_plane(), articulated7_q0()),
    ]
}
