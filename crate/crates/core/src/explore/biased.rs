use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Context, Explorer, Rejection, Step, ROOT_ITERATION};
use crate::atlas::Atlas;
use crate::constraint::ExtendedConfig;
use crate::coverage::cell_index;
use crate::surface::Domain;

/// States kept per cell; further states replace stored ones by reservoir
/// sampling.
pub const CELL_CAPACITY: usize = 256;

/// Lower bound of a cell's progress score.
pub const SCORE_FLOOR: f64 = 1e-4;

/// Cell importance `ln(I) * score / (max(S, 1) * (1 + neighbours) * coverage)`.
pub fn importance(first_visit: u64, score: f64, expansions: u64, neighbors: u32, coverage: u64) -> f64 {
    (first_visit as f64).ln() * score / (expansions.max(1) as f64 * (1 + neighbors) as f64 * coverage as f64)
}

#[derive(Clone, Debug)]
pub struct GridState {
    pub state: ExtendedConfig,
    /// Chart last used to sample around this state.
    pub chart: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub states: Vec<GridState>,
    /// Iteration stamp of the first state; the root cell has stamp 1.
    pub first_iteration: u64,
    pub score: f64,
    /// Times the cell was selected for expansion.
    pub expansions: u64,
    /// Existing von Neumann neighbours.
    pub neighbors: u32,
    /// States ever added, including ones evicted from `states`.
    pub coverage: u64,
}

impl Cell {
    /// Rank `I` entering the importance, offset so that the root cell has
    /// `I = 2` and a positive logarithm.
    pub fn rank(&self) -> u64 {
        self.first_iteration + 1
    }

    pub fn importance(&self) -> f64 {
        importance(self.rank(), self.score, self.expansions, self.neighbors, self.coverage)
    }

    pub fn is_interior(&self) -> bool {
        self.neighbors == 4
    }

    pub fn penalize(&mut self) {
        self.score = (self.score * 0.5).max(SCORE_FLOOR);
    }
}

/// Explored states bucketed by surface cell with per-cell statistics.
#[derive(Clone, Debug)]
pub struct BiasGrid {
    n: usize,
    domain: Domain,
    cells: BTreeMap<(usize, usize), Cell>,
}

impl BiasGrid {
    pub fn new(domain: Domain, n: usize) -> Self {
        assert!(n > 0);
        Self {
            n,
            domain,
            cells: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &BTreeMap<(usize, usize), Cell> {
        &self.cells
    }

    pub fn cell(&self, key: (usize, usize)) -> Option<&Cell> {
        self.cells.get(&key)
    }

    pub fn cell_mut(&mut self, key: (usize, usize)) -> Option<&mut Cell> {
        self.cells.get_mut(&key)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn stored_states(&self) -> usize {
        self.cells.values().map(|c| c.states.len()).sum()
    }

    fn neighbor_keys(&self, (i, j): (usize, usize)) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ]
        .into_iter()
        .filter(move |&(a, b)| a < n && b < n)
    }

    /// Adds `state` to the cell of its own `(u, v)`. Returns the cell key and
    /// whether the cell is new.
    pub fn insert<R: Rng + ?Sized>(
        &mut self,
        state: ExtendedConfig,
        chart: Option<usize>,
        iteration: u64,
        rng: &mut R,
    ) -> ((usize, usize), bool) {
        self.add(state, chart, iteration, |count| rng.random_range(0..count))
    }

    fn add(
        &mut self,
        state: ExtendedConfig,
        chart: Option<usize>,
        iteration: u64,
        reservoir_slot: impl FnOnce(u64) -> u64,
    ) -> ((usize, usize), bool) {
        let key = cell_index(&self.domain, self.n, state.u, state.v);
        let entry = GridState { state, chart };
        if let Some(cell) = self.cells.get_mut(&key) {
            cell.coverage += 1;
            if cell.states.len() < CELL_CAPACITY {
                cell.states.push(entry);
            } else {
                let slot = reservoir_slot(cell.coverage) as usize;
                if slot < CELL_CAPACITY {
                    cell.states[slot] = entry;
                }
            }
            return (key, false);
        }
        let neighbors: Vec<_> = self.neighbor_keys(key).filter(|k| self.cells.contains_key(k)).collect();
        for k in &neighbors {
            self.cells.get_mut(k).expect("present").neighbors += 1;
        }
        self.cells.insert(
            key,
            Cell {
                states: alloc::vec![entry],
                first_iteration: iteration,
                score: 1.0,
                expansions: 0,
                neighbors: neighbors.len() as u32,
                coverage: 1,
            },
        );
        (key, true)
    }

    /// Picks the exterior set with probability `exterior_bias` (falling back
    /// to the other set when empty), the most important cell of that set
    /// (earliest cell on ties) and a uniformly random state of it.
    pub fn select<R: Rng + ?Sized>(&self, exterior_bias: f64, rng: &mut R) -> ((usize, usize), usize) {
        assert!(!self.cells.is_empty(), "selecting from an empty grid");
        let want_exterior = rng.random::<f64>() < exterior_bias;
        let has = |exterior: bool| self.cells.values().any(|c| c.is_interior() != exterior);
        let exterior = if has(want_exterior) { want_exterior } else { !want_exterior };
        let mut best: Option<((usize, usize), f64, u64)> = None;
        for (&key, cell) in self.cells.iter().filter(|(_, c)| c.is_interior() != exterior) {
            let imp = cell.importance();
            let better = match best {
                None => true,
                Some((_, b, first)) => imp > b || (imp == b && cell.first_iteration < first),
            };
            if better {
                best = Some((key, imp, cell.first_iteration));
            }
        }
        let key = best.expect("non-empty set").0;
        let idx = rng.random_range(0..self.cells[&key].states.len());
        (key, idx)
    }
}

/// Importance-ranked cell selection with exterior bias, Gaussian
/// sampling around a stored state, transition check.
pub struct BiasedExplorer {
    grid: BiasGrid,
    atlas: Atlas,
}

impl BiasedExplorer {
    pub fn new(ctx: &Context<'_>, root: ExtendedConfig, domain: Domain, n: usize) -> Self {
        let mut grid = BiasGrid::new(domain, n);
        grid.add(root, None, ROOT_ITERATION, |_| unreachable!("fresh grid"));
        Self {
            grid,
            atlas: Atlas::new(ctx.params.atlas),
        }
    }

    pub fn grid(&self) -> &BiasGrid {
        &self.grid
    }

    pub fn step(&mut self, ctx: &Context<'_>, iteration: u64, rng: &mut ChaCha8Rng) -> Step {
        let (key, idx) = self.grid.select(ctx.params.exterior_bias, rng);
        let cell = self.grid.cell_mut(key).expect("selected");
        cell.expansions += 1;
        let source = cell.states[idx].state.clone();
        let hint = cell.states[idx].chart;
        let sampled = self
            .atlas
            .sample_gaussian_near(ctx.system, &source, hint, ctx.params.sigma_sample, rng);
        let cell = self.grid.cell_mut(key).expect("selected");
        let (sample, chart) = match sampled {
            Ok((s, chart)) => {
                cell.states[idx].chart = Some(chart);
                (s, chart)
            }
            Err(_) => {
                cell.penalize();
                return Step::Rejected(Rejection::SampleFailure);
            }
        };
        let reject = if !ctx.system.surface().in_domain(sample.u, sample.v) {
            Some(Rejection::TransitionFailure)
        } else if !ctx.valid(&sample) {
            Some(Rejection::InvalidState)
        } else if !ctx.transition(&source, &sample) {
            Some(Rejection::TransitionFailure)
        } else {
            None
        };
        if let Some(reason) = reject {
            cell.penalize();
            return Step::Rejected(reason);
        }
        let (_, fresh) = self.grid.insert(sample.clone(), Some(chart), iteration, rng);
        if !fresh {
            self.grid.cell_mut(key).expect("selected").penalize();
        }
        Step::Accepted {
            parent: source,
            state: sample,
        }
    }
}

impl Explorer for BiasedExplorer {
    fn step(&mut self, ctx: &Context<'_>, iteration: u64, rng: &mut ChaCha8Rng) -> Step {
        BiasedExplorer::step(self, ctx, iteration, rng)
    }

    fn stored_states(&self) -> usize {
        self.grid.stored_states()
    }

    fn occupied_cells(&self) -> usize {
        self.grid.len()
    }

    fn charts(&self) -> usize {
        self.atlas.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_10;
    use nalgebra::DVector;
    use rand::SeedableRng;

    #[test]
    fn importance_examples() {
        assert!((importance(10, 1.0, 2, 3, 5) - LN_10 / 40.0).abs() < 1e-12);
        let base = importance(10, 1.0, 2, 3, 5);
        assert!((importance(10, 1.0, 2, 3, 10) - base / 2.0).abs() < 1e-15);
        assert_eq!(importance(7, 0.5, 0, 2, 4), importance(7, 0.5, 1, 2, 4));
        assert!((importance(7, 0.5, 0, 2, 4) - 7f64.ln() * 0.5 / 12.0).abs() < 1e-15);
    }

    fn state_at(u: f64, v: f64) -> ExtendedConfig {
        ExtendedConfig::new(DVector::zeros(6), u, v)
    }

    fn grid() -> BiasGrid {
        BiasGrid::new(Domain::new(0.0, 1.0, 0.0, 1.0).unwrap(), 4)
    }

    #[test]
    fn neighbours_and_interior() {
        let mut g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let centers = [(1, 1), (0, 1), (2, 1), (1, 0), (1, 2)];
        for (k, (i, j)) in centers.iter().enumerate() {
            let (key, fresh) = g.insert(state_at(0.125 + 0.25 * *i as f64, 0.125 + 0.25 * *j as f64), None, k as u64 + 1, &mut rng);
            assert_eq!(key, (*i, *j));
            assert!(fresh);
        }
        assert!(g.cell((1, 1)).unwrap().is_interior());
        assert_eq!(g.cell((0, 1)).unwrap().neighbors, 1);
        let (_, fresh) = g.insert(state_at(0.3, 0.3), None, 9, &mut rng);
        assert!(!fresh);
        assert_eq!(g.cell((1, 1)).unwrap().coverage, 2);
    }

    #[test]
    fn reservoir_caps_storage_but_counts_everything() {
        let mut g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..1000 {
            g.insert(state_at(0.1, 0.1), None, k + 1, &mut rng);
        }
        let c = g.cell((0, 0)).unwrap();
        assert_eq!(c.states.len(), CELL_CAPACITY);
        assert_eq!(c.coverage, 1000);
    }

    #[test]
    fn argmax_selection() {
        let mut g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        g.insert(state_at(0.1, 0.1), None, 1, &mut rng);
        g.insert(state_at(0.9, 0.9), None, 5, &mut rng);
        for _ in 0..100 {
            assert_eq!(g.select(0.75, &mut rng).0, (3, 3));
        }
        g.cell_mut((3, 3)).unwrap().score = 1e-3;
        assert_eq!(g.select(0.75, &mut rng).0, (0, 0));
    }

    #[test]
    fn penalty_floor() {
        let mut g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        g.insert(state_at(0.1, 0.1), None, 1, &mut rng);
        let c = g.cell_mut((0, 0)).unwrap();
        for _ in 0..40 {
            c.penalize();
        }
        assert_eq!(c.score, SCORE_FLOOR);
    }
}
