//! Configuration files, training logs, graph files and the command line.

pub mod cli;
mod config;
mod dot;
mod log;

pub use config::{load_config, ConfigError, RunConfig};
pub use dot::{export_dot, import_dot, parse_program_label, program_label, DotError};
pub use log::{read_log, CsvLogger, GenerationLogRow};

use crate::environments::LearningEnvironment;
use crate::evolution::EvolutionParams;
use crate::graph::{GraphError, TeamId, TpgGraph};
use crate::parallel::{evaluate_policy, Rng};
use crate::program::Executor;

/// Version written into config, DOT and CSV files.
pub const FORMAT_VERSION: u32 = 1;

/// Environment variable read when neither the command line nor the config
/// sets a thread count.
pub const THREADS_ENV: &str = "TPG_THREADS";

/// Thread count from, in order: `flag`, `config`, `TPG_THREADS`, the hardware.
pub fn resolve_threads(flag: Option<usize>, config: Option<usize>) -> usize {
    flag.or(config)
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0))
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
}

/// Plays `episodes` episodes of the policy rooted at `root`, episode resets
/// seeded from `seed`. Returns the final score of every episode.
pub fn play_episodes(
    graph: &TpgGraph,
    root: TeamId,
    env: &mut dyn LearningEnvironment,
    episodes: usize,
    seed: u64,
    max_steps: Option<usize>,
) -> Result<Vec<f64>, GraphError> {
    let params = EvolutionParams {
        nb_iterations_per_policy_evaluation: episodes,
        max_steps_per_evaluation: max_steps,
        archiving_probability: 0.0,
        ..Default::default()
    };
    let mut executor = Executor::for_context(graph.context());
    let trace = evaluate_policy(graph, root, env, &mut executor, &params, &mut Rng::new(seed))?;
    Ok(trace.scores)
}
