//! A complete exploration problem: robot, surface, obstacles, start and
//! default parameters.

use alloc::string::String;

use nalgebra::DVector;

use crate::collision::CollisionWorld;
use crate::constraint::{ConstraintSystem, ExtendedConfig};
use crate::explore::{init_root, ExplorerParams};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub system: ConstraintSystem,
    pub world: CollisionWorld,
    pub q0: DVector<f64>,
    pub n_grid: usize,
    pub params: ExplorerParams,
}

impl Scenario {
    /// Validates the parameters and that the start projects to a valid root.
    pub fn new(
        name: impl Into<String>,
        system: ConstraintSystem,
        world: CollisionWorld,
        q0: DVector<f64>,
        n_grid: usize,
        params: ExplorerParams,
    ) -> Result<Self> {
        if n_grid == 0 {
            return Err(Error::InvalidModel("n_grid must be positive".into()));
        }
        params.validate()?;
        init_root(&system, &world, &q0)?;
        Ok(Self {
            name: name.into(),
            system,
            world,
            q0,
            n_grid,
            params,
        })
    }

    pub fn root(&self) -> Result<ExtendedConfig> {
        init_root(&self.system, &self.world, &self.q0)
    }
}
