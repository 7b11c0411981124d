//! The experiment commands behind the command-line interface.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use surfreach::clock::Clock;
use surfreach::coverage::{baseline_chunk, baseline_chunks, coverage_fraction, visits_fraction, BaselineSet};
use surfreach::explore::{run, Algorithm, ExplorerParams, RunOutcome};
use surfreach::scenario::Scenario;

use crate::artifacts::{self, BaselineSummary, Report, RunSummary};
use crate::scenario::{load_scenario, LoadedScenario};

/// Monotonic wall clock started at construction.
#[derive(Clone, Copy, Debug)]
pub struct InstantClock(Instant);

impl InstantClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for InstantClock {
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub fn default_jobs() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs `work` for every index in `0..count` on up to `jobs` threads and
/// returns the results in index order.
pub fn parallel_map<T, F>(count: usize, jobs: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..jobs.clamp(1, count.max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= count {
                    break;
                }
                let value = work(k);
                results.lock().expect("no poisoned workers")[k] = Some(value);
            });
        }
    });
    results
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every index ran"))
        .collect()
}

/// Overrides applied on top of a scenario's parameters.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParamOverrides {
    pub samples: Option<u64>,
    pub time_limit: Option<f64>,
    pub d_max: Option<f64>,
    pub sigma_sample: Option<f64>,
    pub delta_check: Option<f64>,
    pub exterior_bias: Option<f64>,
}

impl ParamOverrides {
    pub fn apply(&self, base: &ExplorerParams, seed: u64) -> ExplorerParams {
        let mut p = *base;
        if self.samples.is_some() || self.time_limit.is_some() {
            p.budget.samples = self.samples;
            p.budget.time_limit = self.time_limit;
        }
        p.d_max = self.d_max.unwrap_or(p.d_max);
        p.sigma_sample = self.sigma_sample.unwrap_or(p.sigma_sample);
        p.delta_check = self.delta_check.unwrap_or(p.delta_check);
        p.exterior_bias = self.exterior_bias.unwrap_or(p.exterior_bias);
        p.seed = seed;
        p
    }
}

pub fn explore_once(scenario: &Scenario, algorithm: Algorithm, params: &ExplorerParams) -> Result<RunOutcome> {
    Ok(run(scenario, algorithm, params, &InstantClock::start(), None)?)
}

/// `explore`: one run per seed, artifacts in `out` (or `out/seed-K` when
/// several seeds are given).
pub fn cmd_explore(
    scenario_path: &Path,
    algorithm: Algorithm,
    overrides: &ParamOverrides,
    seeds: &[u64],
    out: &Path,
) -> Result<Vec<RunSummary>> {
    let loaded = load_scenario(scenario_path)?;
    let scenario = &loaded.scenario;
    let mut summaries = Vec::new();
    for &seed in seeds {
        let params = overrides.apply(&scenario.params, seed);
        let outcome = explore_once(scenario, algorithm, &params)?;
        let dir = if seeds.len() == 1 {
            out.to_path_buf()
        } else {
            out.join(format!("seed-{seed}"))
        };
        let summary = artifacts::write_run(&dir, &scenario.name, &outcome)?;
        println!(
            "{} on {} seed {}: {} samples, {} accepted, {} cells covered in {:.2} s ({:.0} accepted/s)",
            summary.algorithm,
            summary.scenario,
            seed,
            summary.samples,
            summary.accepted,
            summary.covered_cells,
            summary.wall_s,
            summary.samples_per_second
        );
        summaries.push(summary);
    }
    Ok(summaries)
}

/// Exhaustive point-reachability baseline, chunked over `jobs` threads.
/// The result depends on `samples` and `seed` only.
pub fn compute_baseline(loaded: &LoadedScenario, samples: u64, seed: u64, jobs: usize) -> BaselineSet {
    let sc = &loaded.scenario;
    let chunks = baseline_chunks(samples) as usize;
    let parts = parallel_map(chunks, jobs, |c| {
        baseline_chunk(&sc.system, &sc.world, sc.n_grid, samples, seed, c as u64)
    });
    let mut out = BaselineSet::empty(sc.n_grid);
    for part in &parts {
        out.union(part).expect("same resolution");
    }
    out
}

pub fn cmd_baseline(scenario_path: &Path, samples: Option<u64>, seed: u64, jobs: usize, out: &Path) -> Result<BaselineSummary> {
    let loaded = load_scenario(scenario_path)?;
    let samples = samples.unwrap_or(loaded.baseline_samples);
    let clock = InstantClock::start();
    let baseline = compute_baseline(&loaded, samples, seed, jobs);
    let summary = BaselineSummary {
        scenario: loaded.scenario.name.clone(),
        seed,
        samples,
        n_grid: baseline.n(),
        reachable_cells: baseline.reachable_count(),
        wall_s: clock.elapsed(),
    };
    artifacts::write_baseline(out, &baseline, &summary)?;
    println!(
        "baseline of {}: {} of {} cells point-reachable from {} samples in {:.2} s",
        summary.scenario,
        summary.reachable_cells,
        summary.n_grid * summary.n_grid,
        samples,
        summary.wall_s
    );
    Ok(summary)
}

pub fn build_report(summary: &RunSummary, n: usize, visits: &[u64], baseline: &BaselineSet) -> Result<Report> {
    if n != baseline.n() || n != summary.n_grid {
        bail!(
            "grid size mismatch: run has {}x{} cells ({} in its summary), baseline has {}x{}",
            n,
            n,
            summary.n_grid,
            baseline.n(),
            baseline.n()
        );
    }
    let coverage_pct = visits_fraction(visits, baseline)?;
    let outside = (0..n * n).filter(|&k| visits[k] > 0 && !baseline.matrix()[k]).count();
    Ok(Report {
        scenario: summary.scenario.clone(),
        algorithm: summary.algorithm.clone(),
        seed: summary.seed,
        n_grid: n,
        coverage_pct,
        covered_cells: visits.iter().filter(|&&v| v > 0).count(),
        reachable_cells: baseline.reachable_count(),
        covered_outside_baseline: outside,
        samples: summary.samples,
        accepted: summary.accepted,
        wall_s: summary.wall_s,
        samples_per_second: summary.samples_per_second,
        rejected: summary.rejected.clone(),
    })
}

pub fn cmd_report(run_dir: &Path, baseline_dir: &Path) -> Result<Report> {
    let summary: RunSummary = artifacts::read_json(run_dir, artifacts::SUMMARY)?;
    let (n, visits) = artifacts::read_visits(run_dir)?;
    let baseline = artifacts::read_baseline(baseline_dir)?;
    let report = build_report(&summary, n, &visits, &baseline)?;
    artifacts::write_json(run_dir, artifacts::REPORT, &report)?;
    println!(
        "{} on {} seed {}: {:.1}% of {} reachable cells covered, {} accepted of {} samples in {:.2} s",
        report.algorithm,
        report.scenario,
        report.seed,
        report.coverage_pct,
        report.reachable_cells,
        report.accepted,
        report.samples,
        report.wall_s
    );
    Ok(report)
}

/// Explorer parameters a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    DMax,
    SigmaSample,
    DeltaCheck,
    ExteriorBias,
}

impl SweepParam {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "d_max" => SweepParam::DMax,
            "sigma_sample" | "sigma" => SweepParam::SigmaSample,
            "delta_check" | "delta_q_check" => SweepParam::DeltaCheck,
            "exterior_bias" => SweepParam::ExteriorBias,
            other => bail!("unknown sweep parameter {other:?} (d_max, sigma_sample, delta_check, exterior_bias)"),
        })
    }

    pub fn set(self, params: &mut ExplorerParams, value: f64) {
        match self {
            SweepParam::DMax => params.d_max = value,
            SweepParam::SigmaSample => params.sigma_sample = value,
            SweepParam::DeltaCheck => params.delta_check = value,
            SweepParam::ExteriorBias => params.exterior_bias = value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub coverage_pct: f64,
    pub wall_s: f64,
    pub samples: u64,
    pub accepted: u64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param_value,seed,coverage_pct,wall_s,samples,accepted\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.6},{},{}\n",
            r.value, r.seed, r.coverage_pct, r.wall_s, r.samples, r.accepted
        ));
    }
    out
}

/// Runs seeds `1..=repeats` for every value; rows come out ordered by value
/// then seed regardless of `jobs`.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    loaded: &LoadedScenario,
    algorithm: Algorithm,
    param: SweepParam,
    values: &[f64],
    repeats: u64,
    overrides: &ParamOverrides,
    baseline: &BaselineSet,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if repeats == 0 {
        bail!("repeats must be at least 1");
    }
    let sc = &loaded.scenario;
    let plan: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| (1..=repeats).map(move |s| (v, s)))
        .collect();
    let results = parallel_map(plan.len(), jobs, |k| -> Result<SweepRow> {
        let (value, seed) = plan[k];
        let mut params = overrides.apply(&sc.params, seed);
        param.set(&mut params, value);
        let outcome = explore_once(sc, algorithm, &params)?;
        Ok(SweepRow {
            value,
            seed,
            coverage_pct: coverage_fraction(&outcome.coverage, baseline)?,
            wall_s: outcome.elapsed_s,
            samples: outcome.samples,
            accepted: outcome.accepted,
        })
    });
    results.into_iter().collect()
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_sweep(
    scenario_path: &Path,
    algorithm: Algorithm,
    param: &str,
    values: &[f64],
    repeats: u64,
    jobs: usize,
    overrides: &ParamOverrides,
    baseline_dir: Option<&Path>,
    baseline_samples: Option<u64>,
    out: &Path,
) -> Result<Vec<SweepRow>> {
    let param = SweepParam::parse(param)?;
    if values.is_empty() {
        bail!("no sweep values given");
    }
    let loaded = load_scenario(scenario_path)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let baseline = match baseline_dir {
        Some(dir) => artifacts::read_baseline(dir)?,
        None => {
            let samples = baseline_samples.unwrap_or(loaded.baseline_samples);
            let clock = InstantClock::start();
            let b = compute_baseline(&loaded, samples, 0, jobs);
            let summary = BaselineSummary {
                scenario: loaded.scenario.name.clone(),
                seed: 0,
                samples,
                n_grid: b.n(),
                reachable_cells: b.reachable_count(),
                wall_s: clock.elapsed(),
            };
            artifacts::write_baseline(out, &b, &summary)?;
            b
        }
    };
    let rows = run_sweep(&loaded, algorithm, param, values, repeats, overrides, &baseline, jobs)?;
    let path: PathBuf = out.join(artifacts::SWEEP);
    std::fs::write(&path, sweep_csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "sweep of {} on {}: {} runs written to {}",
        algorithm.name(),
        loaded.scenario.name,
        rows.len(),
        path.display()
    );
    Ok(rows)
}
