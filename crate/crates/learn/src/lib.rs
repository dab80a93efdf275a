//! Function approximation and the learning agents: a feedforward network
//! with RMSprop, masked DQN, masked REINFORCE and a random baseline.

pub mod agent;
pub mod dqn;
pub mod nn;
pub mod reinforce;
pub mod run;

pub use agent::{Agent, Observation, RandomAgent, Transition};
pub use dqn::{DqnAgent, DqnConfig};
pub use reinforce::{ReinforceAgent, ReinforceConfig};
pub use run::{run_learning, AgentConfig, RunResult, RunSpec};
