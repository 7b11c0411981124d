//! JSON scenario files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use surfreach::atlas::AtlasParams;
use surfreach::collision::{Capsule, CollisionWorld, Cuboid, Primitive, Sphere};
use surfreach::constraint::{ConstraintSystem, ProjectionSettings};
use surfreach::explore::{Budget, ExplorerParams};
use surfreach::kinematics::{Joint, RobotModel};
use surfreach::nalgebra::{DVector, Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use surfreach::scenario::Scenario;
use surfreach::surface::{Domain, Surface, SurfaceKind};

/// Default sample budget when neither the file nor the command gives one.
pub const DEFAULT_SAMPLES: u64 = 10_000;

/// Default draw count of exhaustive baselines.
pub const DEFAULT_BASELINE_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub robot: RobotSpec,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub world: WorldSpec,
    pub q0: Vec<f64>,
    pub n_grid: usize,
    #[serde(default)]
    pub params: ParamsSpec,
    /// Free-form notes, ignored.
    #[serde(default)]
    pub notes: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RobotSpec {
    Builtin(String),
    Inline(InlineRobot),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineRobot {
    pub name: String,
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub tool_offset: TransformSpec,
    pub limits: Vec<[f64; 2]>,
    pub links: Vec<Vec<CapsuleSpec>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKindSpec {
    Revolute,
    Prismatic,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub kind: JointKindSpec,
    pub axis: [f64; 3],
    #[serde(default)]
    pub origin: TransformSpec,
}

/// Translation plus roll-pitch-yaw rotation (radians, applied as
/// `Rz(yaw) Ry(pitch) Rx(roll)`).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl TransformSpec {
    fn isometry(&self) -> Isometry3<f64> {
        let [x, y, z] = self.translation;
        let [r, p, w] = self.rpy;
        Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::from_euler_angles(r, p, w))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsuleSpec {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
}

impl CapsuleSpec {
    fn capsule(&self) -> Capsule {
        Capsule::new(point(self.a), point(self.b), self.radius)
    }
}

#[derive(Debug, Deserialize)]
pub struct SurfaceSpec {
    #[serde(flatten)]
    pub shape: ShapeSpec,
    /// `[u_min, u_max, v_min, v_max]`; defaults to the unit square.
    #[serde(default)]
    pub domain: Option<[f64; 4]>,
    #[serde(default)]
    pub placement: Option<TransformSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeSpec {
    Plane {
        origin: [f64; 3],
        span_u: [f64; 3],
        span_v: [f64; 3],
    },
    Paraboloid {
        a: f64,
        b: f64,
    },
    Sinusoid {
        amplitude: f64,
        frequency: f64,
    },
    Bezier {
        control: Vec<Vec<[f64; 3]>>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub maze: Option<MazeSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    Sphere { center: [f64; 3], radius: f64 },
    Capsule { a: [f64; 3], b: [f64; 3], radius: f64 },
    Box { center: [f64; 3], half_extents: [f64; 3] },
}

/// A character bitmap laid out in the world xy plane: row `r`, column `c`
/// of a `#` becomes an axis-aligned box over
/// `[x0 + c·cell, x0 + (c+1)·cell] × [y0 + r·cell, y0 + (r+1)·cell] × [z_lo, z_hi]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSpec {
    pub rows: Vec<String>,
    pub origin: [f64; 2],
    pub cell: f64,
    pub z: [f64; 2],
}

impl MazeSpec {
    pub fn boxes(&self) -> Result<Vec<Primitive>> {
        if !(self.cell > 0.0) || !(self.z[1] > self.z[0]) {
            bail!("maze needs a positive cell size and z[0] < z[1]");
        }
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '#' => out.push(Primitive::Cuboid(Cuboid::new(
                        Point3::new(
                            self.origin[0] + (c as f64 + 0.5) * self.cell,
                            self.origin[1] + (r as f64 + 0.5) * self.cell,
                            0.5 * (self.z[0] + self.z[1]),
                        ),
                        Vector3::new(0.5 * self.cell, 0.5 * self.cell, 0.5 * (self.z[1] - self.z[0])),
                    ))),
                    '.' | ' ' => {}
                    other => bail!("maze row {r} has unexpected character {other:?}"),
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub d_max: Option<f64>,
    pub sigma_sample: Option<f64>,
    pub delta_check: Option<f64>,
    pub exterior_bias: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub geodesic_step: Option<f64>,
    pub projection_tolerance: Option<f64>,
    pub max_newton_iterations: Option<usize>,
    pub samples: Option<u64>,
    pub time_limit: Option<f64>,
    pub baseline_samples: Option<u64>,
}

/// A validated scenario with the file-level extras the commands need.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub baseline_samples: u64,
}

fn point(p: [f64; 3]) -> Point3<f64> {
    Point3::new(p[0], p[1], p[2])
}

fn vector(p: [f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

impl RobotSpec {
    fn build(&self) -> Result<RobotModel> {
        match self {
            RobotSpec::Builtin(name) => RobotModel::builtin(name)
                .with_context(|| format!("unknown built-in robot {name:?} (gantry6, articulated6, articulated7)")),
            RobotSpec::Inline(r) => {
                let joints = r
                    .joints
                    .iter()
                    .map(|j| {
                        let axis = vector(j.axis);
                        match j.kind {
                            JointKindSpec::Revolute => Joint::revolute(axis, j.origin.isometry()),
                            JointKindSpec::Prismatic => Joint::prismatic(axis, j.origin.isometry()),
                        }
                    })
                    .collect();
                let limits = r.limits.iter().map(|l| (l[0], l[1])).collect();
                let links = r
                    .links
                    .iter()
                    .map(|caps| caps.iter().map(CapsuleSpec::capsule).collect())
                    .collect();
                Ok(RobotModel::new(&r.name, joints, r.tool_offset.isometry(), limits, links)?)
            }
        }
    }
}

impl SurfaceSpec {
    fn build(&self) -> Result<Surface> {
        let kind = match &self.shape {
            ShapeSpec::Plane { origin, span_u, span_v } => SurfaceKind::Plane {
                origin: vector(*origin),
                span_u: vector(*span_u),
                span_v: vector(*span_v),
            },
            ShapeSpec::Paraboloid { a, b } => SurfaceKind::Paraboloid { a: *a, b: *b },
            ShapeSpec::Sinusoid { amplitude, frequency } => SurfaceKind::Sinusoid {
                amplitude: *amplitude,
                frequency: *frequency,
            },
            ShapeSpec::Bezier { control } => SurfaceKind::BezierPatch {
                control: control.iter().map(|row| row.iter().map(|p| vector(*p)).collect()).collect(),
            },
        };
        let [u0, u1, v0, v1] = self.domain.unwrap_or([0.0, 1.0, 0.0, 1.0]);
        let domain = Domain::new(u0, u1, v0, v1)?;
        let placement = self.placement.as_ref().map(TransformSpec::isometry).unwrap_or_else(Isometry3::identity);
        Ok(Surface::placed(kind, domain, placement)?)
    }
}

impl WorldSpec {
    fn build(&self) -> Result<CollisionWorld> {
        let mut obstacles: Vec<Primitive> = self
            .obstacles
            .iter()
            .map(|o| match o {
                ObstacleSpec::Sphere { center, radius } => Primitive::Sphere(Sphere::new(point(*center), *radius)),
                ObstacleSpec::Capsule { a, b, radius } => {
                    Primitive::Capsule(Capsule::new(point(*a), point(*b), *radius))
                }
                ObstacleSpec::Box { center, half_extents } => {
                    Primitive::Cuboid(Cuboid::new(point(*center), vector(*half_extents)))
                }
            })
            .collect();
        if let Some(maze) = &self.maze {
            obstacles.extend(maze.boxes()?);
        }
        Ok(CollisionWorld::new(obstacles, self.margin)?)
    }
}

impl ParamsSpec {
    fn explorer_params(&self) -> ExplorerParams {
        let d = ExplorerParams::default();
        let a = AtlasParams::default();
        ExplorerParams {
            d_max: self.d_max.unwrap_or(d.d_max),
            sigma_sample: self.sigma_sample.unwrap_or(d.sigma_sample),
            delta_check: self.delta_check.unwrap_or(d.delta_check),
            exterior_bias: self.exterior_bias.unwrap_or(d.exterior_bias),
            atlas: AtlasParams {
                rho: self.rho.unwrap_or(a.rho),
                epsilon: self.epsilon.unwrap_or(a.epsilon),
                alpha: self.alpha.unwrap_or(a.alpha),
                geodesic_step: self.geodesic_step.unwrap_or(a.geodesic_step),
            },
            budget: Budget {
                samples: Some(self.samples.unwrap_or(DEFAULT_SAMPLES)),
                time_limit: self.time_limit,
            },
            seed: d.seed,
        }
    }

    fn projection(&self) -> ProjectionSettings {
        let d = ProjectionSettings::default();
        ProjectionSettings {
            tolerance: self.projection_tolerance.unwrap_or(d.tolerance),
            max_iterations: self.max_newton_iterations.unwrap_or(d.max_iterations),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the scenario and checks that its start yields a valid root.
    pub fn build(&self) -> Result<LoadedScenario> {
        let robot = self.robot.build().context("robot")?;
        let surface = self.surface.build().context("surface")?;
        let world = self.world.build().context("world")?;
        let system = ConstraintSystem::with_settings(robot, surface, self.params.projection());
        let scenario = Scenario::new(
            &self.name,
            system,
            world,
            DVector::from_column_slice(&self.q0),
            self.n_grid,
            self.params.explorer_params(),
        )?;
        Ok(LoadedScenario {
            scenario,
            baseline_samples: self.params.baseline_samples.unwrap_or(DEFAULT_BASELINE_SAMPLES),
        })
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = ScenarioFile::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.build()
        .with_context(|| format!("scenario {} ({}) failed validation", file.name, path.display()))
}
