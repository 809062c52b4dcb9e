//! Learning environments: the clonable, seed-deterministic contract plus the
//! built-in pendulum and tic-tac-toe environments.

mod pendulum;
mod tictactoe;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::data::{Snapshot, StateSource};

pub use pendulum::{PendulumConfig, PendulumEnv};
pub use tictactoe::{Cell, TicTacToeEnv};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("step called on a terminal state")]
    Terminal,
    #[error("action {action} out of range ({count} actions)")]
    InvalidAction { action: usize, count: usize },
    #[error("unknown environment `{0}`")]
    Unknown(String),
    #[error("{0}")]
    Other(String),
}

/// A reinforcement-learning environment driven by discrete actions.
///
/// Implementations must be deterministic: equal reset seeds followed by equal
/// action sequences yield bit-identical states, scores, and terminal flags.
/// Clones must share no mutable state with the original.
pub trait LearningEnvironment: Send {
    fn name(&self) -> &str;

    fn action_count(&self) -> usize;

    fn reset(&mut self, seed: u64);

    fn step(&mut self, action: usize) -> Result<(), EnvError>;

    /// Score accumulated since the last reset.
    fn score(&self) -> f64;

    fn is_terminal(&self) -> bool;

    /// Read-only views of the current state, in a fixed order.
    fn data_sources(&self) -> &[StateSource];

    fn clone_env(&self) -> Box<dyn LearningEnvironment>;

    /// Maximum number of steps in an episode.
    fn horizon(&self) -> usize;

    /// Lowest score an episode can end with; used for failed episodes.
    fn min_score(&self) -> f64;

    fn snapshot(&self) -> Snapshot {
        self.data_sources().to_vec()
    }
}

impl Clone for Box<dyn LearningEnvironment> {
    fn clone(&self) -> Self {
        self.clone_env()
    }
}

type EnvFactory = Box<dyn Fn() -> Box<dyn LearningEnvironment> + Send + Sync>;

/// Environments selectable by name.
pub struct EnvironmentRegistry {
    factories: BTreeMap<String, EnvFactory>,
}

impl Default for EnvironmentRegistry {
    fn default() -> Self {
        let mut registry = Self {
            factories: BTreeMap::new(),
        };
        registry.register("pendulum", || Box::new(PendulumEnv::default()));
        registry.register("tictactoe", || Box::new(TicTacToeEnv::new()));
        registry
    }
}

impl EnvironmentRegistry {
    pub fn register(
        &mut self,
        name: impl Into<String>,
        factory: impl Fn() -> Box<dyn LearningEnvironment> + Send + Sync + 'static,
    ) {
        self.factories.insert(name.into(), Box::new(factory));
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn LearningEnvironment>, EnvError> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| EnvError::Unknown(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}
