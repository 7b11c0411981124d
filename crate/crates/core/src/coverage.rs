//! Visit accounting over an `n × n` discretisation of the surface domain and
//! the point-reachability baseline it is compared against.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::CollisionWorld;
use crate::constraint::{AlignmentSign, ConstraintSystem, ExtendedConfig};
use crate::surface::Domain;
use crate::{Error, Result};

/// Samples drawn per independently seeded baseline chunk.
pub const BASELINE_CHUNK: u64 = 4096;

/// Cell `(i, j)` holding `(u, v)`; `i` indexes `u`. The upper domain edge
/// belongs to the last cell.
///
/// # Panics
/// If `(u, v)` lies outside the domain.
pub fn cell_index(domain: &Domain, n: usize, u: f64, v: f64) -> (usize, usize) {
    assert!(domain.contains(u, v), "({u}, {v}) outside the surface domain");
    let bin = |x: f64, lo: f64, span: f64| (((x - lo) / span * n as f64) as usize).min(n - 1);
    (
        bin(u, domain.u_min, domain.width()),
        bin(v, domain.v_min, domain.height()),
    )
}

/// Per-cell visit counts and first-visit iteration stamps (0 = never).
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageGrid {
    n: usize,
    domain: Domain,
    visits: Vec<u64>,
    first_visit: Vec<u64>,
}

impl CoverageGrid {
    pub fn new(domain: Domain, n: usize) -> Self {
        assert!(n > 0, "empty coverage grid");
        Self {
            n,
            domain,
            visits: vec![0; n * n],
            first_visit: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn cell_of(&self, u: f64, v: f64) -> (usize, usize) {
        cell_index(&self.domain, self.n, u, v)
    }

    /// Counts a visit of the cell holding `x`. Returns true if the cell was
    /// previously unvisited. `iteration` must be positive.
    pub fn record_visit(&mut self, x: &ExtendedConfig, iteration: u64) -> bool {
        let (i, j) = self.cell_of(x.u, x.v);
        self.record_cell(i, j, iteration)
    }

    pub fn record_cell(&mut self, i: usize, j: usize, iteration: u64) -> bool {
        assert!(iteration > 0, "iteration stamps start at 1");
        let k = i * self.n + j;
        self.visits[k] += 1;
        let fresh = self.first_visit[k] == 0;
        if fresh {
            self.first_visit[k] = iteration;
        }
        fresh
    }

    pub fn visits(&self, i: usize, j: usize) -> u64 {
        self.visits[i * self.n + j]
    }

    pub fn first_visit(&self, i: usize, j: usize) -> u64 {
        self.first_visit[i * self.n + j]
    }

    /// Row-major visit counts, rows indexed by `i`.
    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    /// Row-major first-visit stamps, rows indexed by `i`.
    pub fn order(&self) -> &[u64] {
        &self.first_visit
    }

    pub fn is_covered(&self, i: usize, j: usize) -> bool {
        self.visits(i, j) >= 1
    }

    pub fn covered_cells(&self) -> Vec<(usize, usize)> {
        (0..self.n * self.n)
            .filter(|&k| self.visits[k] >= 1)
            .map(|k| (k / self.n, k % self.n))
            .collect()
    }

    pub fn covered_count(&self) -> usize {
        self.visits.iter().filter(|&&c| c >= 1).count()
    }

    /// Folds another grid over the same discretisation into this one.
    pub fn merge(&mut self, other: &CoverageGrid) -> Result<()> {
        if other.n != self.n {
            return Err(Error::GridMismatch(self.n, other.n));
        }
        for k in 0..self.visits.len() {
            self.visits[k] += other.visits[k];
            self.first_visit[k] = match (self.first_visit[k], other.first_visit[k]) {
                (0, b) => b,
                (a, 0) => a,
                (a, b) => a.min(b),
            };
        }
        Ok(())
    }

    /// Rebuilds a grid from row-major matrices, e.g. read back from disk.
    pub fn from_parts(domain: Domain, n: usize, visits: Vec<u64>, first_visit: Vec<u64>) -> Result<Self> {
        if visits.len() != n * n || first_visit.len() != n * n {
            return Err(Error::GridMismatch(n * n, visits.len().max(first_visit.len())));
        }
        Ok(Self {
            n,
            domain,
            visits,
            first_visit,
        })
    }
}

/// Cells in which some valid, aligned on-manifold state was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaselineSet {
    n: usize,
    reachable: Vec<bool>,
    sample_count: u64,
}

impl BaselineSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            reachable: vec![false; n * n],
            sample_count: 0,
        }
    }

    pub fn from_matrix(n: usize, reachable: Vec<bool>, sample_count: u64) -> Result<Self> {
        if reachable.len() != n * n {
            return Err(Error::GridMismatch(n * n, reachable.len()));
        }
        Ok(Self {
            n,
            reachable,
            sample_count,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn is_reachable(&self, i: usize, j: usize) -> bool {
        self.reachable[i * self.n + j]
    }

    /// Row-major reachability flags.
    pub fn matrix(&self) -> &[bool] {
        &self.reachable
    }

    pub fn reachable_count(&self) -> usize {
        self.reachable.iter().filter(|&&r| r).count()
    }

    pub fn union(&mut self, other: &BaselineSet) -> Result<()> {
        if other.n != self.n {
            return Err(Error::GridMismatch(self.n, other.n));
        }
        for (a, b) in self.reachable.iter_mut().zip(&other.reachable) {
            *a |= *b;
        }
        self.sample_count += other.sample_count;
        Ok(())
    }
}

/// Baseline contribution of chunk `chunk` of a run with `samples` draws in
/// total. Chunks are independently seeded so they can be evaluated in any
/// order or in parallel and unioned.
pub fn baseline_chunk(
    sys: &ConstraintSystem,
    world: &CollisionWorld,
    n: usize,
    samples: u64,
    seed: u64,
    chunk: u64,
) -> BaselineSet {
    let start = chunk * BASELINE_CHUNK;
    let count = samples.saturating_sub(start).min(BASELINE_CHUNK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let robot = sys.robot();
    let domain = *sys.surface().domain();
    let mut out = BaselineSet::empty(n);
    out.sample_count = count;
    for _ in 0..count {
        let q = DVector::from_iterator(
            robot.dof(),
            robot.limits().iter().map(|&(lo, hi)| rng.random_range(lo..=hi)),
        );
        let u = rng.random_range(domain.u_min..=domain.u_max);
        let v = rng.random_range(domain.v_min..=domain.v_max);
        let Ok(x) = sys.project(&ExtendedConfig::new(q, u, v)) else {
            continue;
        };
        if !world.state_valid(sys, &x) || sys.alignment_sign(&x).ok() != Some(AlignmentSign::Aligned) {
            continue;
        }
        let (i, j) = cell_index(&domain, n, x.u, x.v);
        out.reachable[i * n + j] = true;
    }
    out
}

pub fn baseline_chunks(samples: u64) -> u64 {
    samples.div_ceil(BASELINE_CHUNK)
}

/// Point reachability by exhaustive random projection: `samples` draws of `q`
/// uniform in the joint limits and `(u, v)` uniform in the domain, each
/// projected onto the manifold and kept if valid and aligned.
pub fn exhaustive_baseline(
    sys: &ConstraintSystem,
    world: &CollisionWorld,
    n: usize,
    samples: u64,
    seed: u64,
) -> BaselineSet {
    let mut out = BaselineSet::empty(n);
    for chunk in 0..baseline_chunks(samples) {
        out.union(&baseline_chunk(sys, world, n, samples, seed, chunk))
            .expect("same resolution");
    }
    out
}

/// Percentage of baseline cells that are covered.
pub fn coverage_fraction(grid: &CoverageGrid, baseline: &BaselineSet) -> Result<f64> {
    if grid.n() != baseline.n() {
        return Err(Error::GridMismatch(grid.n(), baseline.n()));
    }
    visits_fraction(grid.visit_counts(), baseline)
}

/// [`coverage_fraction`] over a row-major visit matrix of the baseline's size.
pub fn visits_fraction(visits: &[u64], baseline: &BaselineSet) -> Result<f64> {
    if visits.len() != baseline.matrix().len() {
        return Err(Error::GridMismatch(visits.len(), baseline.matrix().len()));
    }
    let reachable = baseline.reachable_count();
    if reachable == 0 {
        return Err(Error::EmptyBaseline);
    }
    let hit = visits
        .iter()
        .zip(baseline.matrix())
        .filter(|(&c, &r)| c >= 1 && r)
        .count();
    Ok(hit as f64 / reachable as f64 * 100.0)
}
