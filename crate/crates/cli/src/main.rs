use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wcb_core::metrics::output::emit_outputs;
use wcb_core::sim::dataset::save_dataset;
use wcb_core::sim::generator::TemplateSource;
use wcb_core::{
    calibrate_threshold, compare_policies, run_experiment, validate_world, Comparison, PolicyName, SimulationConfig,
    WcbError,
};

const SEED_VAR: &str = "WCB_SEED";

#[derive(Parser)]
#[command(name = "wcb", version, about = "Volunteer assignment and retention experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic tasks.csv / volunteers.csv pair.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 250)]
        tasks: usize,
        #[arg(long, default_value_t = 3750)]
        volunteers: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Generator moments and time horizon; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every replication of one policy and write its outputs.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        policy: Option<PolicyName>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive a drop threshold from a run without retention decisions.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        offset: f64,
    },
    /// Run all four policies on paired arrivals and compare them.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<SimulationConfig, WcbError> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| WcbError::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            SimulationConfig::from_json(&text)?
        }
        None => SimulationConfig::default(),
    };
    if let Some(seed) = env_seed()? {
        info!("{SEED_VAR} overrides rng_seed with {seed}");
        config.rng_seed = seed;
    }
    Ok(config)
}

fn env_seed() -> Result<Option<u64>, WcbError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| WcbError::Config(format!("{SEED_VAR}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn gen(out: &Path, n_tasks: usize, n_volunteers: usize, seed: Option<u64>, config: &SimulationConfig) -> Result<(), WcbError> {
    let seed = match seed {
        Some(s) => s,
        None => config.rng_seed,
    };
    let source = TemplateSource::synthetic(config.synthetic.clone())?;
    let span = f64::from(config.rounds) * config.round_length;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stamps = |n: usize, rng: &mut ChaCha8Rng| {
        let mut s: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * span).collect();
        s.sort_by(f64::total_cmp);
        s
    };
    let task_stamps = stamps(n_tasks, &mut rng);
    let volunteer_stamps = stamps(n_volunteers, &mut rng);
    let tasks: Vec<_> = task_stamps
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| source.sample_task(i, t, &mut rng))
        .collect();
    let volunteers: Vec<_> = volunteer_stamps
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| source.sample_volunteer(i, t, &mut rng))
        .collect();
    let violations = validate_world(source.catalog(), &tasks, &volunteers);
    if !violations.is_empty() {
        return Err(WcbError::Validation(violations));
    }
    save_dataset(out, &tasks, &volunteers)?;
    println!("wrote {} tasks and {} volunteers to {}", tasks.len(), volunteers.len(), out.display());
    Ok(())
}

fn print_comparison(c: &Comparison) {
    println!("policy      reps  satisfaction  retained  completed  avg_remuneration");
    for a in &c.aggregates {
        println!(
            "{:<10} {:>5}  {:>12.4}  {:>8.2}  {:>9.2}  {:>16.2}",
            a.policy.as_str(),
            a.replications,
            a.satisfaction.mean,
            a.retained.mean,
            a.completed_tasks.mean,
            a.avg_remuneration.mean
        );
    }
    let fmt = |x: Option<f64>| x.map_or_else(|| "null".to_string(), |x| format!("{x:.4}"));
    for p in &c.pairwise {
        println!(
            "{} vs {}: satisfaction x{}, remuneration overhead {}%, retention delta {:.2}, completion delta {:.2}",
            p.subject,
            p.reference,
            fmt(p.satisfaction_ratio),
            fmt(p.remuneration_overhead_pct),
            p.retention_delta,
            p.completion_delta
        );
    }
    for b in &c.bands {
        println!("[{}] {}: {}", if b.passed { "pass" } else { "FAIL" }, b.name, b.observed);
    }
}

fn execute(cli: Cli) -> Result<(), WcbError> {
    match cli.command {
        Command::Gen {
            out,
            tasks,
            volunteers,
            seed,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            gen(&out, tasks, volunteers, seed.or(env_seed()?), &config)
        }
        Command::Run { config, policy, out } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(p) = policy {
                config.policy = p;
            }
            let bundle = run_experiment(&config)?;
            let written = emit_outputs(&config, std::slice::from_ref(&bundle), None, &out)?;
            let agg = wcb_core::metrics::aggregate::aggregate(&bundle);
            println!(
                "{}: {} replications, satisfaction {:.4}, retained {:.2}, completed {:.2}, avg remuneration {:.2}",
                config.policy,
                agg.replications,
                agg.satisfaction.mean,
                agg.retained.mean,
                agg.completed_tasks.mean,
                agg.avg_remuneration.mean
            );
            println!("wrote {} files to {}", written.len(), out.display());
            Ok(())
        }
        Command::Calibrate { config, offset } => {
            let config = load_config(config.as_deref())?;
            let c = calibrate_threshold(&config, offset)?;
            println!(
                "threshold {} (median {} - offset {}), iqr {}, pool {}",
                c.threshold, c.median, c.offset, c.iqr, c.pool_size
            );
            Ok(())
        }
        Command::Compare { config, out } => {
            let config = load_config(config.as_deref())?;
            let (bundles, comparison) = compare_policies(&config)?;
            emit_outputs(&config, &bundles, Some(&comparison), &out)?;
            print_comparison(&comparison);
            println!("wrote outputs to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors count as validation failures; 2 is reserved for I/O.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
