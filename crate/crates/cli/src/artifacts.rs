//! Run, baseline and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use surfreach::coverage::{BaselineSet, CoverageGrid};
use surfreach::explore::{RunOutcome, SeriesPoint};

pub const SUMMARY: &str = "summary.json";
pub const SERIES: &str = "series.csv";
pub const VISITS: &str = "visits.csv";
pub const ORDER: &str = "order.csv";
pub const VISITS_PGM: &str = "visits.pgm";
pub const ORDER_PGM: &str = "order.pgm";
pub const BASELINE: &str = "baseline.csv";
pub const BASELINE_SUMMARY: &str = "baseline.json";
pub const REPORT: &str = "report.json";
pub const SWEEP: &str = "sweep.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub d_max: f64,
    pub sigma_sample: f64,
    pub delta_check: f64,
    pub exterior_bias: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub geodesic_step: f64,
    pub sample_budget: Option<u64>,
    pub time_limit_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub sample_failure: u64,
    pub invalid_state: u64,
    pub transition_failure: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootRecord {
    pub q: Vec<f64>,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub params: ParamsRecord,
    pub n_grid: usize,
    pub samples: u64,
    pub accepted: u64,
    pub rejected: RejectionRecord,
    pub covered_cells: usize,
    pub wall_s: f64,
    pub samples_per_second: f64,
    pub stored_states: usize,
    pub occupied_cells: usize,
    pub charts: usize,
    pub root: RootRecord,
}

impl RunSummary {
    pub fn new(scenario: &str, outcome: &RunOutcome) -> Self {
        let p = &outcome.params;
        Self {
            scenario: scenario.to_string(),
            algorithm: outcome.algorithm.name().to_string(),
            seed: p.seed,
            params: ParamsRecord {
                d_max: p.d_max,
                sigma_sample: p.sigma_sample,
                delta_check: p.delta_check,
                exterior_bias: p.exterior_bias,
                rho: p.atlas.rho,
                epsilon: p.atlas.epsilon,
                alpha: p.atlas.alpha,
                geodesic_step: p.atlas.geodesic_step,
                sample_budget: p.budget.samples,
                time_limit_s: p.budget.time_limit,
            },
            n_grid: outcome.coverage.n(),
            samples: outcome.samples,
            accepted: outcome.accepted,
            rejected: RejectionRecord {
                sample_failure: outcome.rejections.sample_failure,
                invalid_state: outcome.rejections.invalid_state,
                transition_failure: outcome.rejections.transition_failure,
            },
            covered_cells: outcome.covered(),
            wall_s: outcome.elapsed_s,
            samples_per_second: outcome.samples_per_second(),
            stored_states: outcome.stored_states,
            occupied_cells: outcome.occupied_cells,
            charts: outcome.charts,
            root: RootRecord {
                q: outcome.root.q.iter().copied().collect(),
                u: outcome.root.u,
                v: outcome.root.v,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub scenario: String,
    pub seed: u64,
    pub samples: u64,
    pub n_grid: usize,
    pub reachable_cells: usize,
    pub wall_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub n_grid: usize,
    pub coverage_pct: f64,
    pub covered_cells: usize,
    pub reachable_cells: usize,
    /// Covered cells the baseline missed; nonzero values suggest the
    /// baseline needs more samples.
    pub covered_outside_baseline: usize,
    pub samples: u64,
    pub accepted: u64,
    pub wall_s: f64,
    pub samples_per_second: f64,
    pub rejected: RejectionRecord,
}

/// Row-major integer matrix, one line per row.
pub fn matrix_csv<T: std::fmt::Display>(n: usize, values: &[T]) -> String {
    let mut out = String::new();
    for row in values.chunks(n) {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a string");
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<(usize, Vec<u64>)> {
    let rows: Vec<Vec<u64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(r, line)| {
            line.split(',')
                .map(|c| c.trim().parse::<u64>().with_context(|| format!("row {r}: bad entry {c:?}")))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        bail!("expected a square matrix, got {n} rows");
    }
    Ok((n, rows.into_iter().flatten().collect()))
}

pub fn series_csv(series: &[SeriesPoint]) -> String {
    let mut out = String::from("iteration,elapsed_s,covered_cells\n");
    for p in series {
        writeln!(out, "{},{:.6},{}", p.iteration, p.elapsed_s, p.covered).expect("writing to a string");
    }
    out
}

/// Binary 16-bit greyscale image scaled so the largest value maps to 65535.
pub fn pgm16(n: usize, values: &[u64]) -> Vec<u8> {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut out = format!("P5\n{n} {n}\n65535\n").into_bytes();
    for &v in values {
        let level = if max == 0 {
            0
        } else {
            ((v as u128 * 65535 + max as u128 / 2) / max as u128) as u16
        };
        out.extend_from_slice(&level.to_be_bytes());
    }
    out
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_grid(dir: &Path, grid: &CoverageGrid) -> Result<()> {
    let n = grid.n();
    write(dir, VISITS, matrix_csv(n, grid.visit_counts()))?;
    write(dir, ORDER, matrix_csv(n, grid.order()))?;
    write(dir, VISITS_PGM, pgm16(n, grid.visit_counts()))?;
    write(dir, ORDER_PGM, pgm16(n, grid.order()))
}

pub fn write_run(dir: &Path, scenario: &str, outcome: &RunOutcome) -> Result<RunSummary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let summary = RunSummary::new(scenario, outcome);
    write_grid(dir, &outcome.coverage)?;
    write(dir, SERIES, series_csv(&outcome.series))?;
    write_json(dir, SUMMARY, &summary)?;
    Ok(summary)
}

pub fn write_baseline(dir: &Path, baseline: &BaselineSet, summary: &BaselineSummary) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let flags: Vec<u8> = baseline.matrix().iter().map(|&r| r as u8).collect();
    write(dir, BASELINE, matrix_csv(baseline.n(), &flags))?;
    write_json(dir, BASELINE_SUMMARY, summary)
}

pub fn read_baseline(dir: &Path) -> Result<BaselineSet> {
    let path = dir.join(BASELINE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let (n, flags) = parse_matrix_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
    if flags.iter().any(|&f| f > 1) {
        bail!("{} must contain only 0 and 1", path.display());
    }
    let samples = read_json::<BaselineSummary>(dir, BASELINE_SUMMARY)
        .map(|s| s.samples)
        .unwrap_or(0);
    Ok(BaselineSet::from_matrix(n, flags.into_iter().map(|f| f == 1).collect(), samples)?)
}

/// Visit counts of a run directory.
pub fn read_visits(dir: &Path) -> Result<(usize, Vec<u64>)> {
    let path = dir.join(VISITS);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    parse_matrix_csv(&text).with_context(|| format!("parsing {}", path.display()))
}
