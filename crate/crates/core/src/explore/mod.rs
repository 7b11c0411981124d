//! Exploration of the constraint manifold from a root state: uniform-atlas
//! RRT and grid-biased Gaussian expansion.

mod biased;
mod rrt;

pub use biased::{importance, BiasGrid, BiasedExplorer, Cell, GridState, CELL_CAPACITY, SCORE_FLOOR};
pub use rrt::{ExplorationTree, RrtExplorer, TreeNode};

use alloc::vec::Vec;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atlas::{check_transition, AtlasParams};
use crate::clock::Clock;
use crate::collision::CollisionWorld;
use crate::constraint::{AlignmentSign, ConstraintSystem, ExtendedConfig};
use crate::coverage::CoverageGrid;
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Run length limits; whichever is hit first ends the run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    /// Number of sample attempts.
    pub samples: Option<u64>,
    /// Wall-clock seconds.
    pub time_limit: Option<f64>,
}

impl Budget {
    pub fn samples(n: u64) -> Self {
        Self {
            samples: Some(n),
            time_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplorerParams {
    /// RRT extension clamp.
    pub d_max: f64,
    /// Standard deviation of biased Gaussian sampling.
    pub sigma_sample: f64,
    /// Step length of transition checks.
    pub delta_check: f64,
    /// Probability of expanding an exterior cell.
    pub exterior_bias: f64,
    pub atlas: AtlasParams,
    pub budget: Budget,
    pub seed: u64,
}

impl Default for ExplorerParams {
    fn default() -> Self {
        Self {
            d_max: 0.07,
            sigma_sample: 0.04,
            delta_check: 0.01,
            exterior_bias: 0.75,
            atlas: AtlasParams::default(),
            budget: Budget::samples(10_000),
            seed: 1,
        }
    }
}

impl ExplorerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_max", self.d_max),
            ("sigma_sample", self.sigma_sample),
            ("delta_check", self.delta_check),
            ("rho", self.atlas.rho),
            ("epsilon", self.atlas.epsilon),
            ("alpha", self.atlas.alpha),
            ("geodesic_step", self.atlas.geodesic_step),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidModel(alloc::format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.exterior_bias > 0.0 && self.exterior_bias < 1.0) {
            return Err(Error::InvalidModel(alloc::format!(
                "exterior_bias must lie in (0, 1), got {}",
                self.exterior_bias
            )));
        }
        if let Some(t) = self.budget.time_limit {
            if !(t > 0.0) {
                return Err(Error::InvalidModel(alloc::format!("time limit must be positive, got {t}")));
            }
        }
        if self.budget.samples.is_none() && self.budget.time_limit.is_none() {
            return Err(Error::InvalidModel("budget needs a sample count or a time limit".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Rrt,
    Biased,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rrt => "rrt",
            Algorithm::Biased => "biased",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rrt" => Some(Algorithm::Rrt),
            "biased" => Some(Algorithm::Biased),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rejection {
    /// No sample could be produced (projection failure).
    SampleFailure,
    /// The sample violates joint limits or collides.
    InvalidState,
    /// The geodesic to the sample is blocked or could not be walked.
    TransitionFailure,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rejections {
    pub sample_failure: u64,
    pub invalid_state: u64,
    pub transition_failure: u64,
}

impl Rejections {
    pub fn count(&mut self, r: Rejection) {
        match r {
            Rejection::SampleFailure => self.sample_failure += 1,
            Rejection::InvalidState => self.invalid_state += 1,
            Rejection::TransitionFailure => self.transition_failure += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.sample_failure + self.invalid_state + self.transition_failure
    }
}

/// Result of one exploration iteration.
#[derive(Clone, Debug)]
pub enum Step {
    Accepted {
        parent: ExtendedConfig,
        state: ExtendedConfig,
    },
    Rejected(Rejection),
}

/// An accepted transition as reported to run observers.
#[derive(Clone, Copy, Debug)]
pub struct AcceptedEdge<'a> {
    pub parent: &'a ExtendedConfig,
    pub state: &'a ExtendedConfig,
    pub iteration: u64,
}

/// Shared read-only context of one run.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub system: &'a ConstraintSystem,
    pub world: &'a CollisionWorld,
    pub params: &'a ExplorerParams,
}

impl Context<'_> {
    pub fn valid(&self, x: &ExtendedConfig) -> bool {
        self.world.state_valid(self.system, x)
    }

    pub fn transition(&self, a: &ExtendedConfig, b: &ExtendedConfig) -> bool {
        check_transition(
            self.system,
            &self.params.atlas,
            a,
            b,
            self.params.delta_check,
            |x| self.valid(x),
        )
    }
}

/// Coverage count after a given iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPoint {
    pub iteration: u64,
    pub elapsed_s: f64,
    pub covered: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub params: ExplorerParams,
    pub root: ExtendedConfig,
    pub coverage: CoverageGrid,
    pub accepted: u64,
    pub rejections: Rejections,
    /// Sample attempts made.
    pub samples: u64,
    /// Final iteration stamp; the root is stamped 1.
    pub last_iteration: u64,
    pub elapsed_s: f64,
    /// Strictly increasing in iteration, one entry per coverage change plus
    /// the final iteration.
    pub series: Vec<SeriesPoint>,
    /// Tree nodes or stored grid states.
    pub stored_states: usize,
    /// Occupied bias-grid cells; zero for RRT.
    pub occupied_cells: usize,
    pub charts: usize,
}

impl RunOutcome {
    pub fn covered(&self) -> usize {
        self.coverage.covered_count()
    }

    pub fn samples_per_second(&self) -> f64 {
        if self.elapsed_s > 0.0 {
            self.accepted as f64 / self.elapsed_s
        } else {
            0.0
        }
    }
}

/// Iteration stamp of the root state.
pub const ROOT_ITERATION: u64 = 1;

/// Closest surface point to the start pose, then projection. The result must
/// be valid and aligned with the surface normal.
pub fn init_root(sys: &ConstraintSystem, world: &CollisionWorld, q0: &DVector<f64>) -> Result<ExtendedConfig> {
    let robot = sys.robot();
    if q0.len() != robot.dof() {
        return Err(Error::Initialization(alloc::format!(
            "start has {} joints, robot has {}",
            q0.len(),
            robot.dof()
        )));
    }
    if !robot.within_limits(q0) {
        return Err(Error::Initialization("start configuration violates joint limits".into()));
    }
    let (u0, v0) = sys.surface().closest_point(&robot.fk_pose(q0).position);
    let root = sys
        .project(&ExtendedConfig::new(q0.clone(), u0, v0))
        .map_err(|e| Error::Initialization(alloc::format!("projecting the start failed: {e}")))?;
    if !sys.robot().within_limits(&root.q) {
        return Err(Error::Initialization("projected start violates joint limits".into()));
    }
    if !sys.surface().in_domain(root.u, root.v) {
        return Err(Error::Initialization("projected start leaves the surface domain".into()));
    }
    if world.config_in_collision(robot, &root.q) {
        return Err(Error::Initialization("projected start is in collision".into()));
    }
    match sys.alignment_sign(&root) {
        Ok(AlignmentSign::Aligned) => Ok(root),
        Ok(AlignmentSign::Flipped) => Err(Error::Initialization(
            "projected start has the tool axis against the surface normal".into(),
        )),
        Err(e) => Err(Error::Initialization(alloc::format!("{e}"))),
    }
}

trait Explorer {
    fn step(&mut self, ctx: &Context<'_>, iteration: u64, rng: &mut ChaCha8Rng) -> Step;
    fn stored_states(&self) -> usize;
    fn occupied_cells(&self) -> usize;
    fn charts(&self) -> usize;
}

pub type Observer<'o> = &'o mut dyn FnMut(&AcceptedEdge<'_>);

/// Runs one exploration with `params` (which carry the seed and budget).
pub fn run(
    scenario: &Scenario,
    algorithm: Algorithm,
    params: &ExplorerParams,
    clock: &dyn Clock,
    observer: Option<Observer<'_>>,
) -> Result<RunOutcome> {
    params.validate()?;
    let ctx = Context {
        system: &scenario.system,
        world: &scenario.world,
        params,
    };
    let root = init_root(ctx.system, ctx.world, &scenario.q0)?;
    let domain = *ctx.system.surface().domain();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut explorer: alloc::boxed::Box<dyn Explorer> = match algorithm {
        Algorithm::Rrt => alloc::boxed::Box::new(RrtExplorer::new(&ctx, root.clone())?),
        Algorithm::Biased => alloc::boxed::Box::new(BiasedExplorer::new(&ctx, root.clone(), domain, scenario.n_grid)),
    };
    drive(&ctx, algorithm, scenario.n_grid, root, explorer.as_mut(), &mut rng, clock, observer)
}

pub fn run_rrt(scenario: &Scenario, params: &ExplorerParams, clock: &dyn Clock) -> Result<RunOutcome> {
    run(scenario, Algorithm::Rrt, params, clock, None)
}

pub fn run_biased(scenario: &Scenario, params: &ExplorerParams, clock: &dyn Clock) -> Result<RunOutcome> {
    run(scenario, Algorithm::Biased, params, clock, None)
}

#[allow(clippy::too_many_arguments)]
fn drive(
    ctx: &Context<'_>,
    algorithm: Algorithm,
    n_grid: usize,
    root: ExtendedConfig,
    explorer: &mut dyn Explorer,
    rng: &mut ChaCha8Rng,
    clock: &dyn Clock,
    mut observer: Option<Observer<'_>>,
) -> Result<RunOutcome> {
    let budget = ctx.params.budget;
    let mut coverage = CoverageGrid::new(*ctx.system.surface().domain(), n_grid);
    coverage.record_visit(&root, ROOT_ITERATION);
    let mut series = alloc::vec![SeriesPoint {
        iteration: ROOT_ITERATION,
        elapsed_s: clock.elapsed(),
        covered: 1,
    }];
    let mut iteration = ROOT_ITERATION;
    let mut accepted = 0;
    let mut rejections = Rejections::default();
    loop {
        let samples = iteration - ROOT_ITERATION;
        if budget.samples.is_some_and(|n| samples >= n) {
            break;
        }
        if budget.time_limit.is_some_and(|t| clock.elapsed() >= t) {
            break;
        }
        iteration += 1;
        match explorer.step(ctx, iteration, rng) {
            Step::Accepted { parent, state } => {
                accepted += 1;
                if coverage.record_visit(&state, iteration) {
                    series.push(SeriesPoint {
                        iteration,
                        elapsed_s: clock.elapsed(),
                        covered: coverage.covered_count(),
                    });
                }
                if let Some(obs) = observer.as_mut() {
                    obs(&AcceptedEdge {
                        parent: &parent,
                        state: &state,
                        iteration,
                    });
                }
            }
            Step::Rejected(reason) => rejections.count(reason),
        }
    }
    let elapsed_s = clock.elapsed();
    if series.last().map(|p| p.iteration) != Some(iteration) {
        series.push(SeriesPoint {
            iteration,
            elapsed_s,
            covered: coverage.covered_count(),
        });
    }
    Ok(RunOutcome {
        algorithm,
        params: *ctx.params,
        root,
        coverage,
        accepted,
        rejections,
        samples: iteration - ROOT_ITERATION,
        last_iteration: iteration,
        elapsed_s,
        series,
        stored_states: explorer.stored_states(),
        occupied_cells: explorer.occupied_cells(),
        charts: explorer.charts(),
    })
}
