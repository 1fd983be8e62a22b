use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use skillchain::harness::{
    self, report, restore_decision, run_test, save_episodes, train, Method, ReportOptions, RunConfig, RunSummary,
    EPISODES_FILE,
};
use skillchain::library::Library;

#[derive(Parser)]
#[command(name = "skillchain", version, about = "Motion-primitive learning for intersection driving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    FlatDdpg,
    TabularQ,
}

#[derive(Subcommand)]
enum Command {
    /// Offline curriculum (and the test phase, if configured) of the motion-primitive method.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Epoch multiplier in (0, 1].
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixed test with a saved library.
    Test {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// A flat learner through the same schedule.
    Baseline {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learning curves, success table and plot from run directories.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        ema: f64,
        #[arg(long, default_value_t = 200)]
        window: usize,
        #[arg(long)]
        svg: bool,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Self-checks on the toy tasks.
    Verify,
}

fn load_config(path: Option<&Path>, scale: Option<f64>) -> anyhow::Result<RunConfig> {
    let mut config = match path {
        Some(p) => RunConfig::from_json_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = scale {
        config.scale = s;
    }
    config.validate()?;
    Ok(config)
}

fn run_dir(config: &RunConfig, out: Option<PathBuf>, method: Method, seed: u64) -> PathBuf {
    out.unwrap_or_else(|| config.output_dir.join(format!("{}_s{seed}", method.name())))
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Train { config, seed, scale, out } => {
            let config = load_config(config.as_deref(), scale)?;
            let seed = seed.unwrap_or(config.seeds[0]);
            let out = run_dir(&config, out, Method::Mp, seed);
            let (offline, test) = train(&config, seed, &out)?;
            println!(
                "{} primitives ({}), {} offline + {} test episodes -> {}",
                offline.library.len(),
                offline.library.subtasks().join(", "),
                offline.logs.len(),
                test.logs.len(),
                out.display()
            );
        }
        Command::Test { library, config, episodes, seed, out } => {
            let config = load_config(config.as_deref(), None)?;
            let seed = seed.unwrap_or(config.seeds[0]);
            let loaded = Library::load_with_decision(&library)
                .with_context(|| format!("loading library {}", library.display()))?;
            let mut decision = restore_decision(&config, loaded.decision, loaded.library.len(), seed)?;
            if config.test_phases().next().is_none() {
                bail!("the configuration has no mixed_test phase");
            }
            let result = run_test(&config, &loaded.library, &mut decision, seed, episodes)?;
            save_episodes(&result.logs, &out.join(EPISODES_FILE))?;
            let mut summary = RunSummary::new(Method::Mp, seed, result.logs.len());
            summary.primitives = loaded.library.len();
            summary.subtasks = loaded.library.subtasks();
            summary.stats = result.stats;
            summary.save(&out)?;
            let goals = result.logs.iter().filter(|l| l.goal).count();
            println!("{goals}/{} episodes reached the goal -> {}", result.logs.len(), out.display());
        }
        Command::Baseline { algo, config, seed, scale, out } => {
            let config = load_config(config.as_deref(), scale)?;
            let seed = seed.unwrap_or(config.seeds[0]);
            let method = match algo {
                Algo::FlatDdpg => Method::FlatDdpg,
                Algo::TabularQ => Method::TabularQ,
            };
            let out = run_dir(&config, out, method, seed);
            let logs = harness::baseline(&config, method, seed, &out)?;
            println!("{} episodes -> {}", logs.len(), out.display());
        }
        Command::Report { runs, ema, window, svg, out } => {
            let result = report(&runs, &ReportOptions { ema_weight: ema, window, svg, out })?;
            println!("{}", std::fs::read_to_string(&result.success_table)?.trim_end());
            for p in result.learning_curves.iter().chain([&result.success_table]).chain(result.svg.as_ref()) {
                println!("wrote {}", p.display());
            }
        }
        Command::Verify => {
            let checks = harness::verify::run_suite(|c| {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            })?;
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
