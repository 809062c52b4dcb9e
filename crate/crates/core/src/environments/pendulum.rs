use std::f64::consts::PI;

use crate::data::{NativeData, NativeShape, StateSource};
use crate::parallel::Rng;

use super::{EnvError, LearningEnvironment};

/// Physical constants and episode settings of the pendulum.
#[derive(Clone, Debug, PartialEq)]
pub struct PendulumConfig {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub torques: Vec<f64>,
    pub horizon: usize,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            mass: 1.0,
            length: 1.0,
            dt: 0.05,
            max_speed: 8.0,
            torques: vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
            horizon: 500,
        }
    }
}

impl PendulumConfig {
    fn max_torque(&self) -> f64 {
        self.torques.iter().fold(0.0, |m: f64, t| m.max(t.abs()))
    }

    /// Most negative reward a single step can give.
    pub fn min_step_reward(&self) -> f64 {
        -(PI * PI + 0.1 * self.max_speed * self.max_speed + 0.001 * self.max_torque().powi(2))
    }
}

/// Frictionless pendulum swing-up. Angle 0 is upright; angles are wrapped to
/// `(-π, π]` and the angular velocity is clamped to `±max_speed`.
///
/// Each step pays `-(θ² + 0.1·θ̇² + 0.001·τ²)` measured on the state the
/// torque is applied to.
#[derive(Clone, Debug)]
pub struct PendulumEnv {
    config: PendulumConfig,
    theta: f64,
    theta_dot: f64,
    steps: usize,
    score: f64,
    sources: Vec<StateSource>,
}

impl Default for PendulumEnv {
    fn default() -> Self {
        Self::new(PendulumConfig::default())
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

impl PendulumEnv {
    pub fn new(config: PendulumConfig) -> Self {
        let sources = vec![StateSource::new(NativeShape::Flat(2), NativeData::F64(vec![0.0, 0.0]))
            .expect("two-element state")];
        Self {
            config,
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
            score: 0.0,
            sources,
        }
    }

    pub fn config(&self) -> &PendulumConfig {
        &self.config
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_dot(&self) -> f64 {
        self.theta_dot
    }

    /// Places the pendulum in a given state and clears the episode.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = wrap_angle(theta);
        self.theta_dot = theta_dot.clamp(-self.config.max_speed, self.config.max_speed);
        self.steps = 0;
        self.score = 0.0;
        self.publish();
    }

    fn publish(&mut self) {
        if let NativeData::F64(v) = self.sources[0].native_mut() {
            v[0] = self.theta;
            v[1] = self.theta_dot;
        }
    }
}

impl LearningEnvironment for PendulumEnv {
    fn name(&self) -> &str {
        "pendulum"
    }

    fn action_count(&self) -> usize {
        self.config.torques.len()
    }

    fn reset(&mut self, seed: u64) {
        let mut rng = Rng::new(seed);
        let theta = rng.uniform(-PI, PI);
        let theta_dot = rng.uniform(-1.0, 1.0);
        self.set_state(theta, theta_dot);
    }

    fn step(&mut self, action: usize) -> Result<(), EnvError> {
        if self.is_terminal() {
            return Err(EnvError::Terminal);
        }
        let c = &self.config;
        let torque = *c.torques.get(action).ok_or(EnvError::InvalidAction {
            action,
            count: c.torques.len(),
        })?;
        let reward = -(self.theta * self.theta
            + 0.1 * self.theta_dot * self.theta_dot
            + 0.001 * torque * torque);
        let acceleration = 3.0 * c.gravity / (2.0 * c.length) * self.theta.sin()
            + 3.0 * torque / (c.mass * c.length * c.length);
        self.theta_dot = (self.theta_dot + acceleration * c.dt).clamp(-c.max_speed, c.max_speed);
        self.theta = wrap_angle(self.theta + self.theta_dot * c.dt);
        self.score += reward;
        self.steps += 1;
        self.publish();
        Ok(())
    }

    fn score(&self) -> f64 {
        self.score
    }

    fn is_terminal(&self) -> bool {
        self.steps >= self.config.horizon
    }

    fn data_sources(&self) -> &[StateSource] {
        &self.sources
    }

    fn clone_env(&self) -> Box<dyn LearningEnvironment> {
        Box::new(self.clone())
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn min_score(&self) -> f64 {
        self.config.min_step_reward() * self.config.horizon as f64
    }
}
