//! The extended configuration space `(q, u, v)` and the five tool
//! constraints that cut the manifold of surface-constrained motions out of it.
//!
//! Rows 0..3 of the constraint pin the tool point to `S(u, v)`; rows 3..5 are
//! the first two components of the unit surface normal expressed in the tool
//! frame, which vanish when the tool z axis is colinear with the normal.

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;
use nalgebra::{DVector, Dyn, OMatrix, Vector3, Vector5, SVD, U5};

use crate::kinematics::{RobotModel, ToolPose};
use crate::surface::Surface;
use crate::{Error, Result};

/// Number of scalar constraints.
pub const CODIMENSION: usize = 5;

/// Smallest admissible singular value of the constraint Jacobian during
/// projection.
pub const SINGULAR_VALUE_FLOOR: f64 = 1e-9;

pub type ConstraintJacobian = OMatrix<f64, U5, Dyn>;

/// A point `(q, u, v)` of the ambient space, optionally carrying the data
/// cached by a successful projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedConfig {
    pub q: DVector<f64>,
    pub u: f64,
    pub v: f64,
    projection: Option<ProjectionCache>,
}

#[derive(Clone, Debug, PartialEq)]
struct ProjectionCache {
    residual: f64,
    pose: ToolPose,
}

impl ExtendedConfig {
    pub fn new(q: DVector<f64>, u: f64, v: f64) -> Self {
        Self {
            q,
            u,
            v,
            projection: None,
        }
    }

    /// Splits an `n + 2` vector into joints and surface coordinates.
    pub fn from_ambient(x: &DVector<f64>) -> Self {
        let n = x.len() - 2;
        Self::new(x.rows(0, n).into_owned(), x[n], x[n + 1])
    }

    pub fn ambient(&self) -> DVector<f64> {
        let n = self.q.len();
        let mut x = DVector::zeros(n + 2);
        x.rows_mut(0, n).copy_from(&self.q);
        x[n] = self.u;
        x[n + 1] = self.v;
        x
    }

    pub fn ambient_dim(&self) -> usize {
        self.q.len() + 2
    }

    /// Infinity norm of the constraint at the time of projection.
    pub fn residual(&self) -> Option<f64> {
        self.projection.as_ref().map(|p| p.residual)
    }

    pub fn pose(&self) -> Option<&ToolPose> {
        self.projection.as_ref().map(|p| &p.pose)
    }

    pub fn is_on_manifold(&self) -> bool {
        self.projection.is_some()
    }

    /// Drops the projection cache, e.g. after editing coordinates.
    pub fn unprojected(mut self) -> Self {
        self.projection = None;
        self
    }
}

/// Euclidean distance over the concatenated `(q, u, v)` vectors, unit weights.
pub fn ambient_distance(a: &ExtendedConfig, b: &ExtendedConfig) -> f64 {
    let dq = (&a.q - &b.q).norm_squared();
    let du = a.u - b.u;
    let dv = a.v - b.v;
    (dq + du * du + dv * dv).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionSettings {
    /// Infinity-norm tolerance on the constraint.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 50,
        }
    }
}

/// Orientation of the tool axis relative to the surface normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlignmentSign {
    Aligned,
    Flipped,
}

impl AlignmentSign {
    pub fn value(self) -> i8 {
        match self {
            AlignmentSign::Aligned => 1,
            AlignmentSign::Flipped => -1,
        }
    }
}

/// Constraint value and Jacobian at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: Vector5<f64>,
    pub jacobian: ConstraintJacobian,
    pub pose: ToolPose,
}

/// Robot plus surface: the constraint function, its Jacobian and the Newton
/// projection onto its zero set.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    robot: RobotModel,
    surface: Surface,
    settings: ProjectionSettings,
}

impl ConstraintSystem {
    pub fn new(robot: RobotModel, surface: Surface) -> Self {
        Self::with_settings(robot, surface, ProjectionSettings::default())
    }

    pub fn with_settings(robot: RobotModel, surface: Surface, settings: ProjectionSettings) -> Self {
        Self {
            robot,
            surface,
            settings,
        }
    }

    pub fn robot(&self) -> &RobotModel {
        &self.robot
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn settings(&self) -> &ProjectionSettings {
        &self.settings
    }

    pub fn ambient_dim(&self) -> usize {
        self.robot.dof() + 2
    }

    pub fn manifold_dim(&self) -> usize {
        self.robot.dof() - 3
    }

    pub fn constraint(&self, x: &ExtendedConfig) -> Result<Vector5<f64>> {
        let pose = self.robot.fk_pose(&x.q);
        let normal = self.surface.normal(x.u, x.v)?.unit;
        Ok(Self::residual_vector(&pose, &self.surface.eval(x.u, x.v), &normal))
    }

    fn residual_vector(pose: &ToolPose, point: &Vector3<f64>, normal: &Vector3<f64>) -> Vector5<f64> {
        let m = pose.rotation.matrix();
        let dp = pose.position - point;
        Vector5::new(
            dp.x,
            dp.y,
            dp.z,
            m.column(0).dot(normal),
            m.column(1).dot(normal),
        )
    }

    pub fn constraint_jacobian(&self, x: &ExtendedConfig) -> Result<ConstraintJacobian> {
        Ok(self.evaluate(x)?.jacobian)
    }

    /// Constraint value and Jacobian sharing one forward-kinematics pass.
    pub fn evaluate(&self, x: &ExtendedConfig) -> Result<Evaluation> {
        let n = self.robot.dof();
        let fk = self.robot.forward(&x.q);
        let pose = fk.pose();
        let normal = self.surface.normal(x.u, x.v)?.unit;
        let (dn_du, dn_dv) = self.surface.unit_normal_partials(x.u, x.v)?;
        let partials = self.surface.partials(x.u, x.v);
        let value = Self::residual_vector(&pose, &self.surface.eval(x.u, x.v), &normal);

        let rot = pose.rotation.matrix();
        let (tx, ty) = (rot.column(0), rot.column(1));
        let geometric = self.robot.jacobian_from(&fk);
        let mut jacobian = ConstraintJacobian::zeros(n + 2);
        for i in 0..n {
            let col = geometric.column(i);
            let omega = Vector3::new(col[3], col[4], col[5]);
            let turn = omega.cross(&normal);
            jacobian[(0, i)] = col[0];
            jacobian[(1, i)] = col[1];
            jacobian[(2, i)] = col[2];
            jacobian[(3, i)] = -tx.dot(&turn);
            jacobian[(4, i)] = -ty.dot(&turn);
        }
        for (k, (ds, dn)) in [(partials.du, dn_du), (partials.dv, dn_dv)].iter().enumerate() {
            let c = n + k;
            jacobian[(0, c)] = -ds.x;
            jacobian[(1, c)] = -ds.y;
            jacobian[(2, c)] = -ds.z;
            jacobian[(3, c)] = tx.dot(dn);
            jacobian[(4, c)] = ty.dot(dn);
        }
        Ok(Evaluation {
            value,
            jacobian,
            pose,
        })
    }

    /// Newton projection onto the manifold with minimum-norm (pseudo-inverse)
    /// updates. A step is halved up to four times while it fails to reduce the
    /// residual.
    pub fn project(&self, x: &ExtendedConfig) -> Result<ExtendedConfig> {
        let tol = self.settings.tolerance;
        let mut current = x.clone().unprojected();
        let mut eval = self.evaluate(&current)?;
        for _ in 0..self.settings.max_iterations {
            let residual = eval.value.amax();
            if residual <= tol {
                current.projection = Some(ProjectionCache {
                    residual,
                    pose: eval.pose,
                });
                return Ok(current);
            }
            let step = minimum_norm_step(eval.jacobian, &eval.value)?;
            let base = current.ambient();
            let merit = eval.value.norm();
            let mut scale = 1.0;
            let mut halvings = 0;
            loop {
                let trial = ExtendedConfig::from_ambient(&(&base - &step * scale));
                let trial_eval = self.evaluate(&trial)?;
                if trial_eval.value.norm() < merit || halvings == 4 {
                    current = trial;
                    eval = trial_eval;
                    break;
                }
                scale *= 0.5;
                halvings += 1;
            }
        }
        let residual = eval.value.amax();
        if residual <= tol {
            current.projection = Some(ProjectionCache {
                residual,
                pose: eval.pose,
            });
            return Ok(current);
        }
        Err(Error::ProjectionFailed {
            iterations: self.settings.max_iterations,
            residual,
        })
    }

    /// Sign of `tool_axis · n̂` on an on-manifold state.
    pub fn alignment_sign(&self, x: &ExtendedConfig) -> Result<AlignmentSign> {
        let axis = match x.pose() {
            Some(pose) => pose.axis(),
            None => self.robot.tool_axis(&x.q),
        };
        let dot = axis.dot(&self.surface.normal(x.u, x.v)?.unit);
        if dot.abs() < 0.5 {
            return Err(Error::Misaligned { dot });
        }
        Ok(if dot > 0.0 {
            AlignmentSign::Aligned
        } else {
            AlignmentSign::Flipped
        })
    }
}

/// `J⁺·c` through a singular value decomposition of `J`.
fn minimum_norm_step(jacobian: ConstraintJacobian, c: &Vector5<f64>) -> Result<DVector<f64>> {
    let svd = SVD::new(jacobian, true, true);
    let sigma_min = svd.singular_values.min();
    if sigma_min < SINGULAR_VALUE_FLOOR {
        return Err(Error::Singular { sigma_min });
    }
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let mut coeffs = u.transpose() * c;
    for (k, s) in svd.singular_values.iter().enumerate() {
        coeffs[k] /= *s;
    }
    Ok(v_t.transpose() * coeffs)
}

/// Singular values of a constraint Jacobian, in descending order.
pub fn singular_values(jacobian: &ConstraintJacobian) -> alloc::vec::Vec<f64> {
    let mut values: alloc::vec::Vec<f64> = jacobian.clone().singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}
