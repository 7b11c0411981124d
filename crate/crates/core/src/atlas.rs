//! Tangent-space charts over the constraint manifold, on-manifold sampling
//! and the discrete geodesic walk used for interpolation and transition
//! checks.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_8;

use nalgebra::{DMatrix, DVector, SVD};
#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constraint::{ambient_distance, ConstraintSystem, ExtendedConfig, CODIMENSION};
use crate::{Error, Result};

/// Attempts made by [`Atlas::sample_uniform`] before giving up.
pub const SAMPLE_RETRIES: usize = 10;

/// Consecutive non-progress steps after which a walk is declared stalled.
pub const STALL_LIMIT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtlasParams {
    /// Chart validity radius in tangent coordinates.
    pub rho: f64,
    /// Maximum distance of a state from its chart's tangent plane.
    pub epsilon: f64,
    /// Maximum angle between a chart and the tangent space it is used at.
    pub alpha: f64,
    /// Step length of geodesic interpolation.
    pub geodesic_step: f64,
}

impl Default for AtlasParams {
    fn default() -> Self {
        Self {
            rho: 0.1,
            epsilon: 0.05,
            alpha: FRAC_PI_8,
            geodesic_step: 0.01,
        }
    }
}

/// Orthonormal basis of the null space of the constraint Jacobian at `x`.
///
/// Fails when fewer than five singular values exceed `1e-6 * sigma_max`.
pub fn null_basis(sys: &ConstraintSystem, x: &ExtendedConfig) -> Result<DMatrix<f64>> {
    let jac = sys.constraint_jacobian(x)?;
    let m = jac.ncols();
    let mut padded = DMatrix::zeros(m, m);
    padded.rows_mut(0, CODIMENSION).copy_from(&jac);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("V^T requested");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma_max = svd.singular_values[order[0]];
    let rank = order
        .iter()
        .filter(|&&k| svd.singular_values[k] > 1e-6 * sigma_max)
        .count();
    if rank < CODIMENSION {
        return Err(Error::Singular {
            sigma_min: svd.singular_values[order[CODIMENSION - 1]],
        });
    }
    let k = m - CODIMENSION;
    let mut basis = DMatrix::zeros(m, k);
    for (c, &row) in order[CODIMENSION..].iter().enumerate() {
        basis.set_column(c, &v_t.row(row).transpose());
    }
    Ok(basis)
}

/// Sine of the largest principal angle between `span(basis)` and the tangent
/// space at `x`.
pub fn tangent_misalignment(sys: &ConstraintSystem, basis: &DMatrix<f64>, x: &ExtendedConfig) -> Result<f64> {
    let jac = sys.constraint_jacobian(x)?;
    let rows = jac.transpose().qr().q();
    let overlap = rows.transpose() * basis;
    Ok(overlap.singular_values().max().min(1.0))
}

/// A local linear parametrisation of the manifold around `anchor`.
#[derive(Clone, Debug)]
pub struct Chart {
    id: usize,
    anchor: ExtendedConfig,
    anchor_vec: DVector<f64>,
    basis: DMatrix<f64>,
    radius: f64,
}

impl Chart {
    pub fn new(sys: &ConstraintSystem, anchor: ExtendedConfig, id: usize, radius: f64) -> Result<Self> {
        let basis = null_basis(sys, &anchor)?;
        let anchor_vec = anchor.ambient();
        Ok(Self {
            id,
            anchor,
            anchor_vec,
            basis,
            radius,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn anchor(&self) -> &ExtendedConfig {
        &self.anchor
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Tangent step followed by projection.
    pub fn to_ambient(&self, sys: &ConstraintSystem, y: &DVector<f64>) -> Result<ExtendedConfig> {
        if y.iter().all(|&c| c == 0.0) {
            return Ok(self.anchor.clone());
        }
        let raw = &self.anchor_vec + &self.basis * y;
        sys.project(&ExtendedConfig::from_ambient(&raw))
    }

    pub fn to_chart(&self, x: &ExtendedConfig) -> DVector<f64> {
        self.basis.tr_mul(&(x.ambient() - &self.anchor_vec))
    }

    /// Distance from `x` to the chart's tangent plane.
    pub fn deviation(&self, x: &ExtendedConfig) -> f64 {
        let d = x.ambient() - &self.anchor_vec;
        let along = self.basis.tr_mul(&d).norm_squared();
        (d.norm_squared() - along).max(0.0).sqrt()
    }

    /// Whether `x` may be parametrised by this chart: inside the radius and
    /// close to the tangent plane.
    pub fn covers(&self, x: &ExtendedConfig, epsilon: f64) -> bool {
        self.to_chart(x).norm() <= self.radius && self.deviation(x) <= epsilon
    }
}

/// Append-only collection of charts.
#[derive(Clone, Debug, Default)]
pub struct Atlas {
    params: AtlasParams,
    charts: Vec<Chart>,
}

impl Atlas {
    pub fn new(params: AtlasParams) -> Self {
        Self {
            params,
            charts: Vec::new(),
        }
    }

    pub fn params(&self) -> &AtlasParams {
        &self.params
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, id: usize) -> &Chart {
        &self.charts[id]
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    /// Creates a chart at `anchor` and returns its id.
    pub fn create_chart(&mut self, sys: &ConstraintSystem, anchor: ExtendedConfig) -> Result<usize> {
        let id = self.charts.len();
        self.charts.push(Chart::new(sys, anchor, id, self.params.rho)?);
        Ok(id)
    }

    /// Returns `hint` if that chart still covers `x`, otherwise a new chart
    /// anchored at `x`.
    pub fn chart_for(&mut self, sys: &ConstraintSystem, x: &ExtendedConfig, hint: Option<usize>) -> Result<usize> {
        match hint {
            Some(id) if self.charts[id].deviation(x) <= self.params.epsilon => Ok(id),
            _ => self.create_chart(sys, x.clone()),
        }
    }

    /// Uniform chart, then a uniform point of its radius-`rho` ball, projected.
    /// Returns the sample and the id of the chart it came from.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, sys: &ConstraintSystem, rng: &mut R) -> Result<(ExtendedConfig, usize)> {
        assert!(!self.charts.is_empty(), "sampling from an empty atlas");
        for _ in 0..SAMPLE_RETRIES {
            let id = rng.random_range(0..self.charts.len());
            let chart = &self.charts[id];
            let y = uniform_ball(chart.dim(), chart.radius, rng);
            if let Ok(x) = chart.to_ambient(sys, &y) {
                return Ok((x, id));
            }
        }
        Err(Error::SampleFailed {
            attempts: SAMPLE_RETRIES,
        })
    }

    /// Isotropic Gaussian step of standard deviation `sigma` in the tangent
    /// space of `x`'s chart, projected back onto the manifold. The chart is
    /// `hint` when it still covers `x`, else a new one anchored at `x`; its id
    /// is returned alongside the sample.
    pub fn sample_gaussian_near<R: Rng + ?Sized>(
        &mut self,
        sys: &ConstraintSystem,
        x: &ExtendedConfig,
        hint: Option<usize>,
        sigma: f64,
        rng: &mut R,
    ) -> Result<(ExtendedConfig, usize)> {
        let id = self.chart_for(sys, x, hint)?;
        let basis = &self.charts[id].basis;
        let eps = DVector::from_fn(basis.ncols(), |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        });
        if sigma == 0.0 {
            return Ok((x.clone(), id));
        }
        let raw = x.ambient() + basis * eps;
        let sample = sys
            .project(&ExtendedConfig::from_ambient(&raw))
            .map_err(|_| Error::SampleFailed { attempts: 1 })?;
        Ok((sample, id))
    }
}

/// Uniform point in the `dim`-ball of the given radius.
pub fn uniform_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> DVector<f64> {
    loop {
        let dir = DVector::<f64>::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let norm = dir.norm();
        if norm > 1e-12 {
            let r: f64 = rng.random::<f64>();
            return dir * (radius * r.powf(1.0 / dim as f64) / norm);
        }
    }
}

/// How a geodesic walk ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkEnd {
    /// The goal was appended as the final state.
    Reached,
    /// The path length budget was used up before the goal.
    Truncated,
    /// The validity predicate rejected a state, which is not included.
    Blocked,
    /// Projection failure, an oversized hop or a stall.
    Failed,
}

#[derive(Clone, Debug)]
pub struct Walk {
    /// Visited states starting with the origin.
    pub states: Vec<ExtendedConfig>,
    /// Sum of ambient distances between consecutive states.
    pub length: f64,
    pub end: WalkEnd,
}

impl Walk {
    pub fn reached(&self) -> bool {
        self.end == WalkEnd::Reached
    }

    pub fn last(&self) -> &ExtendedConfig {
        self.states.last().expect("walk starts at its origin")
    }
}

/// Discrete on-manifold traversal from `a` toward `b`.
///
/// Each step moves `step` in the current chart toward `b` and projects. The
/// chart is re-anchored at the current state when the state leaves its
/// radius, drifts more than `epsilon` from its tangent plane or the tangent
/// spaces differ by more than `alpha`. A hop longer than `2 * step` or three
/// steps without getting closer to `b` end the walk as failed. When
/// `max_length` is given the walk stops once that much path length has been
/// travelled. `valid` sees every new state and may veto it.
///
/// The result depends on `a`, `b`, the parameters and `valid` only.
pub fn walk<F>(
    sys: &ConstraintSystem,
    params: &AtlasParams,
    a: &ExtendedConfig,
    b: &ExtendedConfig,
    step: f64,
    max_length: Option<f64>,
    mut valid: F,
) -> Walk
where
    F: FnMut(&ExtendedConfig) -> bool,
{
    let mut out = Walk {
        states: alloc::vec![a.clone()],
        length: 0.0,
        end: WalkEnd::Failed,
    };
    let total = ambient_distance(a, b);
    if total == 0.0 {
        out.end = WalkEnd::Reached;
        return out;
    }
    let budget = max_length.unwrap_or(f64::INFINITY);
    let mut chart = match Chart::new(sys, a.clone(), 0, params.rho) {
        Ok(c) => c,
        Err(_) => return out,
    };
    let mut goal = chart.to_chart(b);
    let mut current = a.clone();
    let mut dist = total;
    let mut stalls = 0;
    let max_steps = 20 + (4.0 * total.min(budget) / step).ceil() as usize;

    for _ in 0..max_steps {
        let remaining = budget - out.length;
        if remaining <= 1e-12 {
            out.end = WalkEnd::Truncated;
            return out;
        }
        if dist <= step && dist <= remaining {
            if !valid(b) {
                out.end = WalkEnd::Blocked;
                return out;
            }
            out.length += dist;
            out.states.push(b.clone());
            out.end = WalkEnd::Reached;
            return out;
        }
        let here = chart.to_chart(&current);
        let dir = &goal - &here;
        let dir_norm = dir.norm();
        if dir_norm < 1e-12 {
            return out;
        }
        let mut h = step.min(remaining);
        let mut next = None;
        for _ in 0..2 {
            let y = &here + &dir * (h / dir_norm);
            let Ok(candidate) = chart.to_ambient(sys, &y) else {
                return out;
            };
            let hop = ambient_distance(&current, &candidate);
            if hop > 2.0 * step {
                return out;
            }
            if hop <= remaining + 1e-9 {
                next = Some((candidate, hop));
                break;
            }
            // the projection stretched the final partial step; shrink it
            h *= remaining / hop * 0.999;
        }
        let Some((candidate, hop)) = next else {
            out.end = WalkEnd::Truncated;
            return out;
        };
        if !valid(&candidate) {
            out.end = WalkEnd::Blocked;
            return out;
        }
        let new_dist = ambient_distance(&candidate, b);
        if new_dist < dist - 1e-12 {
            stalls = 0;
        } else {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                return out;
            }
        }
        out.length += hop;
        out.states.push(candidate.clone());
        current = candidate;
        dist = new_dist;

        let stale = chart.to_chart(&current).norm() > chart.radius
            || chart.deviation(&current) > params.epsilon
            || match tangent_misalignment(sys, &chart.basis, &current) {
                Ok(s) => s > params.alpha.sin(),
                Err(_) => return out,
            };
        if stale {
            chart = match Chart::new(sys, current.clone(), 0, params.rho) {
                Ok(c) => c,
                Err(_) => return out,
            };
            goal = chart.to_chart(b);
        }
    }
    out
}

/// State at fraction `t` of the path length of the geodesic from `a` to `b`.
pub fn geodesic_interpolate(
    sys: &ConstraintSystem,
    params: &AtlasParams,
    a: &ExtendedConfig,
    b: &ExtendedConfig,
    t: f64,
) -> Result<ExtendedConfig> {
    assert!((0.0..=1.0).contains(&t), "interpolation fraction {t} outside [0, 1]");
    if t == 0.0 {
        return Ok(a.clone());
    }
    let path = walk(sys, params, a, b, params.geodesic_step, None, |_| true);
    if !path.reached() {
        return Err(Error::InterpolationFailed {
            steps: path.states.len() - 1,
        });
    }
    point_along(sys, &path, t * path.length)
}

/// The state at path length `s` along a walk, interpolating linearly inside
/// the bracketing segment and projecting.
pub fn point_along(sys: &ConstraintSystem, path: &Walk, s: f64) -> Result<ExtendedConfig> {
    let mut travelled = 0.0;
    for pair in path.states.windows(2) {
        let hop = ambient_distance(&pair[0], &pair[1]);
        if travelled + hop >= s {
            let f = if hop > 0.0 { (s - travelled) / hop } else { 0.0 };
            if f <= 0.0 {
                return Ok(pair[0].clone());
            }
            if f >= 1.0 {
                return Ok(pair[1].clone());
            }
            let x = pair[0].ambient() * (1.0 - f) + pair[1].ambient() * f;
            return sys.project(&ExtendedConfig::from_ambient(&x));
        }
        travelled += hop;
    }
    Ok(path.last().clone())
}

/// True iff the geodesic walk from `a` reaches `b` in steps of at most
/// `delta` with every visited state accepted by `valid`.
pub fn check_transition<F>(
    sys: &ConstraintSystem,
    params: &AtlasParams,
    a: &ExtendedConfig,
    b: &ExtendedConfig,
    delta: f64,
    valid: F,
) -> bool
where
    F: FnMut(&ExtendedConfig) -> bool,
{
    walk(sys, params, a, b, delta, None, valid).reached()
}
