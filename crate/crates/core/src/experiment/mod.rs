//! Batch experiments: configuration, execution and result files.
//!
//! `execute` is what the `obslab` binary calls. Exit codes: 0 all checks
//! pass, 1 a check failed, 2 configuration or output-directory problem,
//! 3 a numerical guard fired (its name goes to stderr).

pub mod config;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use runner::{run_experiment, Check, Outcome, RunError};

/// Command-line level options that sit on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overrides: Vec<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
    pub threads: Option<usize>,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

/// Text printed by `obslab list`.
pub fn list_text() -> String {
    let mut s = String::new();
    for k in ExperimentKind::ALL {
        s.push_str(&format!("{:<20} {}\n{:<20} [{}]\n", k.name(), k.description(), "", k.anchor()));
    }
    s
}

/// Parse `OBSLAB_THREADS`.
pub fn threads_from_env(value: Option<&str>) -> Result<Option<usize>, ConfigError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError(format!("OBSLAB_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

/// Load, run and persist one experiment; returns the process exit code.
pub fn execute(config_path: &Path, opts: &RunOptions) -> i32 {
    let mut config = match load_config(config_path, &opts.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let dir = opts
        .output_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("output").join(config.experiment.name()));

    let outcome = match opts.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run_experiment(&config)),
            Err(e) => {
                eprintln!("config error: cannot start {n} threads: {e}");
                return EXIT_CONFIG;
            }
        },
        None => run_experiment(&config),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
        Err(RunError::Guard(e)) => {
            eprintln!("guard {}: {e}", e.guard_name());
            return EXIT_GUARD;
        }
    };

    let echo = serde_json::to_value(&config).expect("config serializes");
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let result = output::result_json(&outcome, &echo, config.experiment.name(), config.seed, timestamp);
    if let Err(e) = output::write_outcome(&dir, &outcome, &result) {
        eprintln!("config error: cannot write to {}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    if !opts.quiet {
        for c in &outcome.checks {
            println!(
                "{} {} = {} ({} {})",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                output::fmt_f64(c.value),
                c.relation.symbol(),
                output::fmt_f64(c.threshold)
            );
        }
        println!("results in {}", dir.display());
    }
    if outcome.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}
