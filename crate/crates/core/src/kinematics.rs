//! Serial robot arms: forward kinematics, geometric Jacobian, joint limits.
//!
//! A joint is described by a fixed origin transform (relative to the previous
//! joint frame) followed by its motion about/along a unit axis expressed in
//! that origin frame. The tool frame is the last joint frame composed with a
//! fixed tool offset.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{
    DVector, Isometry3, Matrix6xX, Point3, Rotation3, Translation3, UnitQuaternion, Vector3,
};

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::collision::Capsule;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    pub axis: Vector3<f64>,
    pub origin: Isometry3<f64>,
}

impl Joint {
    pub fn revolute(axis: Vector3<f64>, origin: Isometry3<f64>) -> Self {
        Self {
            kind: JointKind::Revolute,
            axis,
            origin,
        }
    }

    pub fn prismatic(axis: Vector3<f64>, origin: Isometry3<f64>) -> Self {
        Self {
            kind: JointKind::Prismatic,
            axis,
            origin,
        }
    }

    fn motion(&self, value: f64) -> Isometry3<f64> {
        match self.kind {
            JointKind::Revolute => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_scaled_axis(self.axis * value),
            ),
            JointKind::Prismatic => Isometry3::translation(
                self.axis.x * value,
                self.axis.y * value,
                self.axis.z * value,
            ),
        }
    }
}

/// Tool position and orientation in the world frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ToolPose {
    pub position: Vector3<f64>,
    pub rotation: Rotation3<f64>,
}

impl ToolPose {
    /// The tool approach direction (rotated z axis).
    pub fn axis(&self) -> Vector3<f64> {
        self.rotation.matrix().column(2).into_owned()
    }
}

/// Immutable description of a serial arm.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    name: alloc::string::String,
    joints: Vec<Joint>,
    tool_offset: Isometry3<f64>,
    limits: Vec<(f64, f64)>,
    links: Vec<Vec<Capsule>>,
}

/// Everything a single forward pass yields.
#[derive(Clone, Debug)]
pub struct ForwardKinematics {
    /// Frame of each link, i.e. after the motion of its joint.
    pub link_frames: Vec<Isometry3<f64>>,
    pub joint_positions: Vec<Vector3<f64>>,
    pub joint_axes: Vec<Vector3<f64>>,
    pub tool: Isometry3<f64>,
}

impl ForwardKinematics {
    pub fn pose(&self) -> ToolPose {
        ToolPose {
            position: self.tool.translation.vector,
            rotation: self.tool.rotation.to_rotation_matrix(),
        }
    }
}

impl RobotModel {
    pub fn new(
        name: impl Into<alloc::string::String>,
        joints: Vec<Joint>,
        tool_offset: Isometry3<f64>,
        limits: Vec<(f64, f64)>,
        links: Vec<Vec<Capsule>>,
    ) -> Result<Self> {
        let n = joints.len();
        if n < 4 {
            return Err(Error::InvalidModel(format!(
                "robot needs at least 4 joints, got {n}"
            )));
        }
        if let Some(i) = joints
            .iter()
            .position(|j| (j.axis.norm() - 1.0).abs() > 1e-9)
        {
            return Err(Error::InvalidModel(format!("joint {i} axis is not unit length")));
        }
        if limits.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} joint limits for {n} joints",
                limits.len()
            )));
        }
        if let Some(i) = limits.iter().position(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidModel(format!("joint {i} limits are empty")));
        }
        if links.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} link geometry entries for {n} joints",
                links.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            joints,
            tool_offset,
            limits,
            links,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn tool_offset(&self) -> &Isometry3<f64> {
        &self.tool_offset
    }

    pub fn limits(&self) -> &[(f64, f64)] {
        &self.limits
    }

    pub fn link_geometry(&self) -> &[Vec<Capsule>] {
        &self.links
    }

    /// # Panics
    /// If `q` does not have one entry per joint.
    pub fn forward(&self, q: &DVector<f64>) -> ForwardKinematics {
        assert_eq!(q.len(), self.dof(), "joint vector length mismatch");
        let n = self.dof();
        let mut link_frames = Vec::with_capacity(n);
        let mut joint_positions = Vec::with_capacity(n);
        let mut joint_axes = Vec::with_capacity(n);
        let mut frame = Isometry3::identity();
        for (joint, &value) in self.joints.iter().zip(q.iter()) {
            let at_joint = frame * joint.origin;
            joint_positions.push(at_joint.translation.vector);
            joint_axes.push(at_joint.rotation * joint.axis);
            frame = at_joint * joint.motion(value);
            link_frames.push(frame);
        }
        ForwardKinematics {
            tool: frame * self.tool_offset,
            link_frames,
            joint_positions,
            joint_axes,
        }
    }

    pub fn fk_pose(&self, q: &DVector<f64>) -> ToolPose {
        self.forward(q).pose()
    }

    pub fn tool_axis(&self, q: &DVector<f64>) -> Vector3<f64> {
        self.fk_pose(q).axis()
    }

    pub fn link_frames(&self, q: &DVector<f64>) -> Vec<Isometry3<f64>> {
        self.forward(q).link_frames
    }

    /// World-frame geometric Jacobian at the tool point: rows 0..3 linear
    /// velocity, rows 3..6 spatial angular velocity.
    pub fn geometric_jacobian(&self, q: &DVector<f64>) -> Matrix6xX<f64> {
        self.jacobian_from(&self.forward(q))
    }

    pub fn jacobian_from(&self, fk: &ForwardKinematics) -> Matrix6xX<f64> {
        let tool = fk.tool.translation.vector;
        let mut jac = Matrix6xX::zeros(self.dof());
        for (i, joint) in self.joints.iter().enumerate() {
            let axis = fk.joint_axes[i];
            let mut col = jac.column_mut(i);
            match joint.kind {
                JointKind::Revolute => {
                    let lin = axis.cross(&(tool - fk.joint_positions[i]));
                    col.fixed_rows_mut::<3>(0).copy_from(&lin);
                    col.fixed_rows_mut::<3>(3).copy_from(&axis);
                }
                JointKind::Prismatic => {
                    col.fixed_rows_mut::<3>(0).copy_from(&axis);
                }
            }
        }
        jac
    }

    /// Closed-interval joint limit test.
    pub fn within_limits(&self, q: &DVector<f64>) -> bool {
        q.len() == self.dof()
            && q
                .iter()
                .zip(&self.limits)
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    /// Three prismatic axes along x, y, z followed by a Z-Y-X wrist with
    /// coincident axes at the tool point. Analytically invertible.
    pub fn gantry6() -> Self {
        let id = Isometry3::identity();
        let joints = vec![
            Joint::prismatic(Vector3::x(), id),
            Joint::prismatic(Vector3::y(), id),
            Joint::prismatic(Vector3::z(), id),
            Joint::revolute(Vector3::z(), id),
            Joint::revolute(Vector3::y(), id),
            Joint::revolute(Vector3::x(), id),
        ];
        let limits = vec![
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-PI, PI),
            (-PI, PI),
            (-PI, PI),
        ];
        // only the tool body, which trails the tool point along -z
        let mut links = vec![Vec::new(); 6];
        links[5].push(Capsule::new(
            Point3::new(0.0, 0.0, -0.3),
            Point3::origin(),
            0.02,
        ));
        Self::new("gantry6", joints, id, limits, links).expect("valid built-in robot")
    }

    /// Six revolute joints in the common industrial layout (offset shoulder,
    /// spherical wrist). The tool z axis points along the flange x axis.
    pub fn articulated6() -> Self {
        let at = |x: f64, y: f64, z: f64| Isometry3::translation(x, y, z);
        let joints = vec![
            Joint::revolute(Vector3::z(), at(0.0, 0.0, 0.4)),
            Joint::revolute(Vector3::y(), at(0.025, 0.0, 0.0)),
            Joint::revolute(Vector3::y(), at(0.0, 0.0, 0.455)),
            Joint::revolute(Vector3::x(), at(0.1, 0.0, 0.035)),
            Joint::revolute(Vector3::y(), at(0.32, 0.0, 0.0)),
            Joint::revolute(Vector3::x(), at(0.08, 0.0, 0.0)),
        ];
        let tool = Isometry3::from_parts(
            Translation3::new(0.1, 0.0, 0.0),
            UnitQuaternion::from_scaled_axis(Vector3::y() * FRAC_PI_2),
        );
        let limits = vec![
            (-2.97, 2.97),
            (-2.5, 2.5),
            (-2.5, 2.5),
            (-3.05, 3.05),
            (-2.09, 2.09),
            (-3.05, 3.05),
        ];
        let p = Point3::new;
        let links = vec![
            vec![Capsule::new(p(0.0, 0.0, -0.4), p(0.0, 0.0, 0.0), 0.08)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.0, 0.0, 0.455), 0.06)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.1, 0.0, 0.035), 0.05)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.32, 0.0, 0.0), 0.045)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.06, 0.0, 0.0), 0.04)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.1, 0.0, 0.0), 0.02)],
        ];
        Self::new("articulated6", joints, tool, limits, links).expect("valid built-in robot")
    }

    /// Seven revolute joints alternating z/y axes with elbow offsets.
    pub fn articulated7() -> Self {
        let at = |x: f64, y: f64, z: f64| Isometry3::translation(x, y, z);
        let joints = vec![
            Joint::revolute(Vector3::z(), at(0.0, 0.0, 0.333)),
            Joint::revolute(Vector3::y(), at(0.0, 0.0, 0.0)),
            Joint::revolute(Vector3::z(), at(0.0, 0.0, 0.316)),
            Joint::revolute(Vector3::y(), at(0.0825, 0.0, 0.0)),
            Joint::revolute(Vector3::z(), at(-0.0825, 0.0, 0.384)),
            Joint::revolute(Vector3::y(), at(0.0, 0.0, 0.0)),
            Joint::revolute(Vector3::z(), at(0.088, 0.0, 0.0)),
        ];
        let tool = Isometry3::translation(0.0, 0.0, 0.207);
        let limits = vec![
            (-2.9, 2.9),
            (-1.76, 1.76),
            (-2.9, 2.9),
            (-3.07, 3.07),
            (-2.9, 2.9),
            (-3.75, 3.75),
            (-2.9, 2.9),
        ];
        let p = Point3::new;
        let links = vec![
            vec![Capsule::new(p(0.0, 0.0, -0.333), p(0.0, 0.0, 0.0), 0.07)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.0, 0.0, 0.316), 0.06)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.0825, 0.0, 0.0), 0.05)],
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(-0.0825, 0.0, 0.384), 0.05)],
            Vec::new(),
            vec![Capsule::new(p(0.0, 0.0, 0.0), p(0.088, 0.0, 0.0), 0.04)],
            vec![
                Capsule::new(p(0.0, 0.0, 0.0), p(0.0, 0.0, 0.1), 0.04),
                Capsule::new(p(0.0, 0.0, 0.1), p(0.0, 0.0, 0.207), 0.02),
            ],
        ];
        Self::new("articulated7", joints, tool, limits, links).expect("valid built-in robot")
    }

    /// Looks up one of the built-in robots by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "gantry6" => Some(Self::gantry6()),
            "articulated6" => Some(Self::articulated6()),
            "articulated7" => Some(Self::articulated7()),
            _ => None,
        }
    }
}

/// Axis-angle vector of the relative rotation `to * from^T` (world frame).
///
/// The angle comes from `atan2` of the skew and symmetric parts, which stays
/// accurate for the tiny rotations of finite differences where `acos` of the
/// trace does not.
pub fn rotation_delta(from: &Rotation3<f64>, to: &Rotation3<f64>) -> Vector3<f64> {
    let m = (to * from.inverse()).into_inner();
    let s = 0.5 * Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let sin = s.norm();
    let cos = 0.5 * (m.trace() - 1.0);
    if sin < 1e-300 {
        // identity, or a half turn whose axis the skew part cannot give
        return if cos > 0.0 {
            Vector3::zeros()
        } else {
            (to * from.inverse()).scaled_axis()
        };
    }
    s * (sin.atan2(cos) / sin)
}
