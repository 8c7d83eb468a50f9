use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaynet::mission::{compute_metrics, plan_deployment, run_mission, DeploymentPlan, Mode, Noise, Scenario};
use relaynet::{Error, ErrorClass, Result};
use relaynet_cli::render::{plan_coverage, render_svg};
use relaynet_cli::report::{compare_to_dir, metrics_csv, sweep_to_dir, ExperimentSpec, RunSummary, REPLAN_BUDGET};
use relaynet_cli::scenario_file::{check_nonempty, load_scenario};

/// Communication-aware deployment planner for robot teams.
#[derive(Parser)]
#[command(name = "relaynet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a deployment and write the plan JSON plus an SVG render.
    Plan {
        scenario: PathBuf,
        #[arg(long, default_value = "dpa")]
        mode: Mode,
        /// Plan file; the render goes next to it with an `.svg` extension.
        #[arg(long, default_value = "plan.json")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Plan, execute and write the trace, plans and a metrics row.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "dpa")]
        mode: Mode,
        /// Execute with multipath draws from this seed and replan on lost
        /// goal links.
        #[arg(long)]
        noise_seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run all four modes and write a comparison table and renders.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        noise_seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare modes over seeded random scenarios.
    Sweep {
        experiment: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render a scenario, optionally with a plan.
    Render {
        scenario: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value = "scenario.svg")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Seed for shadowing and multipath draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Coverage weight in the velocity field.
    #[arg(long)]
    w_c: Option<f64>,
    /// Fading margin multiplier.
    #[arg(long)]
    margin_k: Option<f64>,
}

impl Overrides {
    fn load(&self, path: &Path) -> Result<Scenario> {
        let mut s = load_scenario(path)?;
        if let Some(seed) = self.seed {
            s.radio.seed = seed;
        }
        if let Some(w) = self.w_c {
            s.w_c = w;
        }
        if let Some(k) = self.margin_k {
            s.radio.margin_k = k;
        }
        s.validate()?;
        check_nonempty(&s)?;
        Ok(s)
    }
}

fn noise(seed: Option<u64>) -> Noise {
    seed.map_or(Noise::Off, Noise::Seeded)
}

fn write_plan(scenario: &Scenario, plan: &DeploymentPlan, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, plan.to_json()?)?;
    let cov = plan_coverage(scenario, Some(plan))?;
    fs::write(out.with_extension("svg"), render_svg(scenario, Some(plan), Some(&cov)))?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan {
            scenario,
            mode,
            out,
            overrides,
        } => {
            let s = overrides.load(&scenario)?;
            let plan = plan_deployment(&s, mode)?;
            write_plan(&s, &plan, &out)?;
            println!("{mode}: {} robots used, {} relays", plan.robots_used, plan.relays.len());
        }
        Command::Run {
            scenario,
            mode,
            noise_seed,
            out,
            overrides,
        } => {
            let s = overrides.load(&scenario)?;
            let outcome = run_mission(&s, mode, noise(noise_seed), REPLAN_BUDGET)?;
            fs::create_dir_all(&out)?;
            for (i, plan) in outcome.plans.iter().enumerate() {
                let name = if i == 0 { "plan.json".to_string() } else { format!("plan_replan{i}.json") };
                write_plan(&s, plan, &out.join(name))?;
            }
            fs::write(out.join("trace.json"), outcome.trace.to_json()?)?;
            let summary = RunSummary {
                metrics: compute_metrics(&outcome.trace)?,
                replans: outcome.replans,
            };
            let name = scenario.file_stem().map_or(String::new(), |n| n.to_string_lossy().into_owned());
            let csv = metrics_csv(&name, mode, noise_seed, &summary)?;
            fs::write(out.join("metrics.csv"), &csv)?;
            print!("{csv}");
        }
        Command::Compare {
            scenario,
            noise_seed,
            out,
            overrides,
        } => {
            let s = overrides.load(&scenario)?;
            let results = compare_to_dir(&s, noise(noise_seed), &out)?;
            for r in &results {
                match &r.outcome {
                    Ok(sum) => println!(
                        "{:8} d_tot {:.2} T {} C_min {:.3} R {}",
                        r.mode.as_str(),
                        sum.metrics.d_tot,
                        sum.metrics.t,
                        sum.metrics.c_min,
                        sum.metrics.r
                    ),
                    Err(e) => println!("{:8} N/A ({e})", r.mode.as_str()),
                }
            }
        }
        Command::Sweep { experiment, out } => {
            let spec = ExperimentSpec::from_json(&fs::read_to_string(&experiment)?)?;
            let trials = sweep_to_dir(&spec, &out)?;
            let skipped = trials.iter().filter(|t| t.scenario.is_none()).count();
            println!("{} trials, {skipped} skipped", trials.len());
        }
        Command::Render {
            scenario,
            plan,
            out,
            overrides,
        } => {
            let s = overrides.load(&scenario)?;
            let plan = plan
                .map(|p| fs::read_to_string(p).map_err(Error::from).and_then(|t| DeploymentPlan::from_json(&t)))
                .transpose()?;
            let cov = plan_coverage(&s, plan.as_ref())?;
            fs::write(&out, render_svg(&s, plan.as_ref(), Some(&cov)))?;
        }
    }
    Ok(())
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Schema => 2,
        ErrorClass::Infeasible => 3,
        ErrorClass::Runtime => 4,
        ErrorClass::Io => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RELAYNET_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Infeasible(report) = &e {
                if let Ok(text) = serde_json::to_string_pretty(report) {
                    eprintln!("{text}");
                }
            }
            ExitCode::from(exit_code(e.class()))
        }
    }
}
