//! Four-way comparisons, metric tables and experiment sweeps.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use relaynet::mission::{compute_metrics, run_mission, Metrics, Mode, Noise, Scenario};
use relaynet::{Error, Result};

use crate::generator::{generate_scenario, GeneratorConfig};
use crate::render::{plan_coverage, render_svg};

/// Replans allowed per run before giving up.
pub const REPLAN_BUDGET: usize = 5;

/// Outcome of one mode on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub mode: Mode,
    pub outcome: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub metrics: Metrics,
    pub replans: usize,
}

/// Plans and executes one mode.
pub fn run_summary(scenario: &Scenario, mode: Mode, noise: Noise) -> Result<RunSummary> {
    let outcome = run_mission(scenario, mode, noise, REPLAN_BUDGET)?;
    Ok(RunSummary {
        metrics: compute_metrics(&outcome.trace)?,
        replans: outcome.replans,
    })
}

/// Runs every mode in `modes`; failures are kept as messages.
pub fn compare_modes(scenario: &Scenario, modes: &[Mode], noise: Noise) -> Vec<ModeResult> {
    modes
        .iter()
        .map(|&mode| ModeResult {
            mode,
            outcome: run_summary(scenario, mode, noise).map_err(|e| {
                log::warn!("{mode} failed: {e}");
                e.to_string()
            }),
        })
        .collect()
}

pub const METRIC_HEADER: [&str; 8] = ["d_max", "d_tot", "T", "C_mean", "C_min", "O_mean", "R", "replans"];
pub const NORM_HEADER: [&str; 4] = ["T_norm", "C_mean_norm", "C_min_norm", "O_mean_norm"];

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn metric_fields(s: &RunSummary) -> Vec<String> {
    let m = &s.metrics;
    vec![
        num(m.d_max),
        num(m.d_tot),
        m.t.to_string(),
        num(m.c_mean),
        num(m.c_min),
        num(m.o_mean),
        m.r.to_string(),
        s.replans.to_string(),
    ]
}

/// `T`, `C_mean`, `C_min` and `O_mean` divided by their maximum over the
/// successful rows. A zero maximum normalizes to zero.
pub fn normalized(results: &[ModeResult]) -> Vec<Option<[f64; 4]>> {
    let pick = |m: &Metrics| [m.t as f64, m.c_mean, m.c_min, m.o_mean];
    let mut max = [0.0f64; 4];
    for r in results {
        if let Ok(s) = &r.outcome {
            for (k, v) in pick(&s.metrics).into_iter().enumerate() {
                max[k] = max[k].max(v);
            }
        }
    }
    results
        .iter()
        .map(|r| {
            r.outcome.as_ref().ok().map(|s| {
                let v = pick(&s.metrics);
                std::array::from_fn(|k| if max[k] > 0.0 { v[k] / max[k] } else { 0.0 })
            })
        })
        .collect()
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Scenario(format!("csv: {other:?}")),
    }
}

/// Rows with `prefix` columns prepended, the status, raw metrics and the
/// normalized columns. Failed modes get `N/A` metrics and the error text.
fn comparison_rows(prefix: &[String], results: &[ModeResult]) -> Vec<Vec<String>> {
    let norms = normalized(results);
    results
        .iter()
        .zip(norms)
        .map(|(r, norm)| {
            let mut row = prefix.to_vec();
            row.push(r.mode.as_str().to_string());
            match (&r.outcome, norm) {
                (Ok(s), Some(n)) => {
                    row.push("ok".into());
                    row.extend(metric_fields(s));
                    row.extend(n.iter().map(|&v| num(v)));
                    row.push(String::new());
                }
                _ => {
                    row.push("failed".into());
                    row.extend(std::iter::repeat_n("N/A".to_string(), METRIC_HEADER.len() + NORM_HEADER.len()));
                    row.push(r.outcome.as_ref().err().cloned().unwrap_or_default());
                }
            }
            row
        })
        .collect()
}

fn header(prefix: &[&str]) -> Vec<String> {
    prefix
        .iter()
        .chain(["mode", "status"].iter())
        .chain(METRIC_HEADER.iter())
        .chain(NORM_HEADER.iter())
        .chain(["error"].iter())
        .map(|s| s.to_string())
        .collect()
}

/// The comparison table as CSV text.
pub fn comparison_csv(results: &[ModeResult]) -> Result<String> {
    let mut rows = vec![header(&[])];
    rows.extend(comparison_rows(&[], results));
    csv_string(rows)
}

/// Single-run metrics row keyed by scenario, mode and seed.
pub fn metrics_csv(scenario_name: &str, mode: Mode, seed: Option<u64>, summary: &RunSummary) -> Result<String> {
    let mut head: Vec<String> = ["scenario", "mode", "seed"].iter().map(|s| s.to_string()).collect();
    head.extend(METRIC_HEADER.iter().map(|s| s.to_string()));
    let mut row = vec![
        scenario_name.to_string(),
        mode.as_str().to_string(),
        seed.map_or(String::new(), |s| s.to_string()),
    ];
    row.extend(metric_fields(summary));
    csv_string(vec![head, row])
}

/// Runs all four modes and writes `comparison.csv` plus one SVG per
/// successfully planned mode into `out_dir`.
pub fn compare_to_dir(scenario: &Scenario, noise: Noise, out_dir: &Path) -> Result<Vec<ModeResult>> {
    fs::create_dir_all(out_dir)?;
    let results = compare_modes(scenario, &Mode::ALL, noise);
    fs::write(out_dir.join("comparison.csv"), comparison_csv(&results)?)?;
    for mode in Mode::ALL {
        if let Ok(plan) = relaynet::mission::plan_deployment(scenario, mode) {
            let cov = plan_coverage(scenario, Some(&plan))?;
            let svg = render_svg(scenario, Some(&plan), Some(&cov));
            fs::write(out_dir.join(format!("{}.svg", mode.as_str())), svg)?;
        }
    }
    Ok(results)
}

/// Batch of random scenarios compared across modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub generator: GeneratorConfig,
    pub goal_counts: Vec<usize>,
    pub trials: usize,
    #[serde(default = "all_modes")]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub seed_base: u64,
    /// Executes with multipath draws from this seed when present.
    #[serde(default)]
    pub noise_seed: Option<u64>,
    /// Also writes an SVG of every generated scenario.
    #[serde(default)]
    pub render: bool,
}

fn all_modes() -> Vec<Mode> {
    Mode::ALL.to_vec()
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Scenario("trials must be at least 1".into()));
        }
        if self.goal_counts.is_empty() || self.goal_counts.contains(&0) {
            return Err(Error::Scenario("goal counts must be a non-empty list of positive values".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Scenario("no modes to compare".into()));
        }
        self.generator.validate()
    }

    /// Seed of trial `trial` for `goals` goals.
    pub fn trial_seed(&self, goals: usize, trial: usize) -> u64 {
        self.seed_base
            .wrapping_add((goals as u64).wrapping_mul(1_000_003))
            .wrapping_add(trial as u64)
    }

    fn noise(&self) -> Noise {
        self.noise_seed.map_or(Noise::Off, Noise::Seeded)
    }
}

/// One trial of a sweep; `results` is empty when the generator gave up.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub goals: usize,
    pub trial: usize,
    pub seed: u64,
    pub scenario: Option<Scenario>,
    pub results: Vec<ModeResult>,
}

/// Runs every trial, in parallel, returning them in (goal count, trial)
/// order.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<Trial>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .goal_counts
        .iter()
        .flat_map(|&g| (0..spec.trials).map(move |t| (g, t)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(goals, trial)| {
            let seed = spec.trial_seed(goals, trial);
            match generate_scenario(&spec.generator, goals, seed) {
                Ok(scenario) => Trial {
                    goals,
                    trial,
                    seed,
                    results: compare_modes(&scenario, &spec.modes, spec.noise()),
                    scenario: Some(scenario),
                },
                Err(e) => {
                    log::warn!("goals {goals}, trial {trial}: skipped after resampling: {e}");
                    Trial {
                        goals,
                        trial,
                        seed,
                        scenario: None,
                        results: Vec::new(),
                    }
                }
            }
        })
        .collect())
}

/// Per-trial table.
pub fn trials_csv(trials: &[Trial]) -> Result<String> {
    let mut rows = vec![header(&["goals", "trial", "seed"])];
    for t in trials {
        let prefix = [t.goals.to_string(), t.trial.to_string(), t.seed.to_string()];
        rows.extend(comparison_rows(&prefix, &t.results));
    }
    csv_string(rows)
}

/// Means over successful trials keyed by (goal count, mode).
pub fn aggregate_csv(spec: &ExperimentSpec, trials: &[Trial]) -> Result<String> {
    let mut head: Vec<String> = ["goals", "mode", "runs", "failures"].iter().map(|s| s.to_string()).collect();
    head.extend(METRIC_HEADER.iter().map(|s| s.to_string()));
    head.extend(NORM_HEADER.iter().map(|s| s.to_string()));
    let mut rows = vec![head];
    for &goals in &spec.goal_counts {
        let group: Vec<&Trial> = trials.iter().filter(|t| t.goals == goals).collect();
        for &mode in &spec.modes {
            let mut sums = [0.0f64; 12];
            let (mut runs, mut failures) = (0usize, 0usize);
            for t in &group {
                let norms = normalized(&t.results);
                for (r, n) in t.results.iter().zip(norms) {
                    if r.mode != mode {
                        continue;
                    }
                    match (&r.outcome, n) {
                        (Ok(s), Some(n)) => {
                            runs += 1;
                            let m = &s.metrics;
                            let v = [
                                m.d_max,
                                m.d_tot,
                                m.t as f64,
                                m.c_mean,
                                m.c_min,
                                m.o_mean,
                                m.r as f64,
                                s.replans as f64,
                                n[0],
                                n[1],
                                n[2],
                                n[3],
                            ];
                            for k in 0..12 {
                                sums[k] += v[k];
                            }
                        }
                        _ => failures += 1,
                    }
                }
            }
            let mut row = vec![goals.to_string(), mode.as_str().to_string(), runs.to_string(), failures.to_string()];
            if runs == 0 {
                row.extend(std::iter::repeat_n("N/A".to_string(), 12));
            } else {
                row.extend(sums.iter().map(|&s| num(s / runs as f64)));
            }
            rows.push(row);
        }
    }
    csv_string(rows)
}

/// Runs a sweep and writes `trials.csv`, `aggregate.csv` and, when asked,
/// `scenarios/g{goals}_t{trial}.svg`.
pub fn sweep_to_dir(spec: &ExperimentSpec, out_dir: &Path) -> Result<Vec<Trial>> {
    fs::create_dir_all(out_dir)?;
    let trials = run_sweep(spec)?;
    fs::write(out_dir.join("trials.csv"), trials_csv(&trials)?)?;
    fs::write(out_dir.join("aggregate.csv"), aggregate_csv(spec, &trials)?)?;
    if spec.render {
        let dir = out_dir.join("scenarios");
        fs::create_dir_all(&dir)?;
        for t in &trials {
            if let Some(s) = &t.scenario {
                fs::write(dir.join(format!("g{}_t{}.svg", t.goals, t.trial)), render_svg(s, None, None))?;
            }
        }
    }
    Ok(trials)
}
