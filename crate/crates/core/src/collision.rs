//! Analytic collision primitives and configuration validity.
//!
//! Obstacles are static spheres, capsules and axis-aligned boxes. Robot links
//! are capsules attached to joint frames. All distances are signed: a negative
//! value is the penetration depth.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;
use nalgebra::{DVector, Isometry3, Point3, Vector3};

use crate::constraint::{ConstraintSystem, ExtendedConfig};
use crate::kinematics::RobotModel;

#[derive(Clone, Debug, PartialEq)]
pub struct Sphere {
    pub center: Point3<f64>,
    pub radius: f64,
}

/// A segment swept by a ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Capsule {
    pub p0: Point3<f64>,
    pub p1: Point3<f64>,
    pub radius: f64,
}

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct Cuboid {
    pub center: Point3<f64>,
    pub half_extents: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Sphere(Sphere),
    Capsule(Capsule),
    Cuboid(Cuboid),
}

impl Sphere {
    pub fn new(center: Point3<f64>, radius: f64) -> Self {
        Self { center, radius }
    }
}

impl Capsule {
    pub fn new(p0: Point3<f64>, p1: Point3<f64>, radius: f64) -> Self {
        Self { p0, p1, radius }
    }

    pub fn transformed(&self, frame: &Isometry3<f64>) -> Self {
        Self {
            p0: frame * self.p0,
            p1: frame * self.p1,
            radius: self.radius,
        }
    }
}

impl Cuboid {
    pub fn new(center: Point3<f64>, half_extents: Vector3<f64>) -> Self {
        Self {
            center,
            half_extents,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    fn inflated(mut self, by: f64) -> Self {
        self.min -= Vector3::repeat(by);
        self.max += Vector3::repeat(by);
        self
    }

    /// Closed overlap test, touching boxes overlap.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }
}

impl Primitive {
    pub fn aabb(&self) -> Aabb {
        match self {
            Primitive::Sphere(s) => Aabb {
                min: s.center - Vector3::repeat(s.radius),
                max: s.center + Vector3::repeat(s.radius),
            },
            Primitive::Capsule(c) => Aabb {
                min: c.p0.inf(&c.p1) - Vector3::repeat(c.radius),
                max: c.p0.sup(&c.p1) + Vector3::repeat(c.radius),
            },
            Primitive::Cuboid(b) => Aabb {
                min: b.center - b.half_extents,
                max: b.center + b.half_extents,
            },
        }
    }

    fn is_well_formed(&self) -> bool {
        match self {
            Primitive::Sphere(s) => s.radius > 0.0,
            Primitive::Capsule(c) => c.radius > 0.0,
            Primitive::Cuboid(b) => b.half_extents.iter().all(|h| *h > 0.0),
        }
    }
}

fn point_segment_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Closest distance between segments `p1q1` and `p2q2`.
fn segment_segment_distance(
    p1: &Point3<f64>,
    q1: &Point3<f64>,
    p2: &Point3<f64>,
    q2: &Point3<f64>,
) -> f64 {
    const EPS: f64 = 1e-15;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);

    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

fn point_box_signed_distance(p: &Point3<f64>, b: &Cuboid) -> f64 {
    let d = (p - b.center).abs() - b.half_extents;
    let outside = d.sup(&Vector3::zeros()).norm();
    let inside = d.max().min(0.0);
    outside + inside
}

/// Minimum of the (convex) box signed distance along a segment.
fn segment_box_signed_distance(a: &Point3<f64>, b: &Point3<f64>, cuboid: &Cuboid) -> f64 {
    let f = |t: f64| point_box_signed_distance(&(a + (b - a) * t), cuboid);
    let inv_phi = (5.0.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    f(0.0).min(f(1.0)).min(f1).min(f2)
}

fn box_box_signed_distance(a: &Cuboid, b: &Cuboid) -> f64 {
    let gap = (a.center - b.center).abs() - a.half_extents - b.half_extents;
    if gap.iter().any(|g| *g > 0.0) {
        gap.sup(&Vector3::zeros()).norm()
    } else {
        gap.max()
    }
}

/// Signed separation distance between two primitives.
pub fn primitive_distance(a: &Primitive, b: &Primitive) -> f64 {
    use Primitive::*;
    match (a, b) {
        (Sphere(s1), Sphere(s2)) => (s1.center - s2.center).norm() - s1.radius - s2.radius,
        (Sphere(s), Capsule(c)) | (Capsule(c), Sphere(s)) => {
            point_segment_distance(&s.center, &c.p0, &c.p1) - s.radius - c.radius
        }
        (Capsule(c1), Capsule(c2)) => {
            segment_segment_distance(&c1.p0, &c1.p1, &c2.p0, &c2.p1) - c1.radius - c2.radius
        }
        (Sphere(s), Cuboid(b)) | (Cuboid(b), Sphere(s)) => {
            point_box_signed_distance(&s.center, b) - s.radius
        }
        (Capsule(c), Cuboid(b)) | (Cuboid(b), Capsule(c)) => {
            segment_box_signed_distance(&c.p0, &c.p1, b) - c.radius
        }
        (Cuboid(b1), Cuboid(b2)) => box_box_signed_distance(b1, b2),
    }
}

/// Static obstacle set.
#[derive(Clone, Debug, Default)]
pub struct CollisionWorld {
    obstacles: Vec<Primitive>,
    bounds: Vec<Aabb>,
    margin: f64,
}

impl CollisionWorld {
    pub fn new(obstacles: Vec<Primitive>, margin: f64) -> crate::Result<Self> {
        if let Some(bad) = obstacles.iter().position(|o| !o.is_well_formed()) {
            return Err(crate::Error::InvalidModel(alloc::format!(
                "obstacle {bad} has a non-positive radius or half extent"
            )));
        }
        if !(margin >= 0.0) {
            return Err(crate::Error::InvalidModel("negative collision margin".into()));
        }
        let bounds = obstacles.iter().map(Primitive::aabb).collect();
        Ok(Self {
            obstacles,
            bounds,
            margin,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn obstacles(&self) -> &[Primitive] {
        &self.obstacles
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// True iff the primitive comes within `margin` of any obstacle.
    /// Contact at exactly the margin counts as collision.
    pub fn primitive_in_collision(&self, shape: &Primitive) -> bool {
        let bound = shape.aabb().inflated(self.margin);
        self.obstacles
            .iter()
            .zip(&self.bounds)
            .filter(|(_, b)| b.overlaps(&bound))
            .any(|(o, _)| primitive_distance(shape, o) <= self.margin)
    }

    /// True iff any world-transformed link capsule of `robot` at `q` touches
    /// an obstacle. Self collisions are not considered.
    pub fn config_in_collision(&self, robot: &RobotModel, q: &DVector<f64>) -> bool {
        if self.obstacles.is_empty() {
            return false;
        }
        let frames = robot.link_frames(q);
        robot
            .link_geometry()
            .iter()
            .zip(&frames)
            .flat_map(|(capsules, frame)| capsules.iter().map(move |c| c.transformed(frame)))
            .any(|c| self.primitive_in_collision(&Primitive::Capsule(c)))
    }

    /// Joint limits, surface domain and collision freedom.
    pub fn state_valid(&self, sys: &ConstraintSystem, x: &ExtendedConfig) -> bool {
        sys.robot().within_limits(&x.q)
            && sys.surface().in_domain(x.u, x.v)
            && !self.config_in_collision(sys.robot(), &x.q)
    }
}
