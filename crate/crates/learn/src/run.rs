//! Serial play of one agent on one rule: a learning run.

use gohr_core::boardgen::{generate, GenParams};
use gohr_core::error::GenError;
use gohr_core::features::{encode, HistoryWindow};
use gohr_core::geometry::ActionSet;
use gohr_core::rng::mix64;
use gohr_core::transcript::{EventKind, TranscriptRecord};
use gohr_core::{Engine, Episode, EpisodeStatus, FeatureSpec, RuleProgram, SplitMix64};
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, Observation, RandomAgent, Transition};
use crate::dqn::{DqnAgent, DqnConfig};
use crate::reinforce::{ReinforceAgent, ReinforceConfig};

/// Stream labels separating board generation from agent randomness.
pub const BOARD_STREAM: u64 = 1;
pub const AGENT_STREAM: u64 = 2;
pub const INIT_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AgentConfig {
    Dqn(DqnConfig),
    Reinforce(ReinforceConfig),
    Random {
        #[serde(default = "default_move_limit")]
        move_limit: u32,
    },
}

fn default_move_limit() -> u32 {
    100
}

impl AgentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AgentConfig::Dqn(_) => "dqn",
            AgentConfig::Reinforce(_) => "reinforce",
            AgentConfig::Random { .. } => "random",
        }
    }

    pub fn move_limit(&self) -> u32 {
        match self {
            AgentConfig::Dqn(c) => c.move_limit,
            AgentConfig::Reinforce(c) => c.move_limit,
            AgentConfig::Random { move_limit } => *move_limit,
        }
    }

    pub fn build(&self, input_dim: usize, agent_seed: u64) -> Box<dyn Agent> {
        let rng = SplitMix64::stream(agent_seed, AGENT_STREAM);
        let init = mix64(agent_seed ^ mix64(INIT_STREAM));
        match self {
            AgentConfig::Dqn(c) => Box::new(DqnAgent::new(c.clone(), input_dim, init, rng)),
            AgentConfig::Reinforce(c) => Box::new(ReinforceAgent::new(c.clone(), input_dim, init, rng)),
            AgentConfig::Random { .. } => Box::new(RandomAgent::new(rng)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub run_id: String,
    pub rule: RuleProgram,
    pub agent: AgentConfig,
    pub features: FeatureSpec,
    pub boards: GenParams,
    pub episodes: u32,
    pub board_seed: u64,
    pub agent_seed: u64,
    pub record_transcript: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunResult {
    pub transcript: Vec<TranscriptRecord>,
    /// Rejected moves per episode.
    pub episode_errors: Vec<u32>,
    /// Moves per episode.
    pub episode_moves: Vec<u32>,
    pub episode_status: Vec<EpisodeStatus>,
}

impl RunResult {
    pub fn total_errors(&self) -> u64 {
        self.episode_errors.iter().map(|&e| e as u64).sum()
    }

    pub fn total_moves(&self) -> u64 {
        self.episode_moves.iter().map(|&m| m as u64).sum()
    }
}

/// Plays `spec.episodes` fresh boards in order, letting the agent learn as
/// it goes. Reward is 0 for an accepted move and -1 otherwise. History
/// windows and failed-move sets start empty on every board.
pub fn run_learning(spec: &RunSpec) -> Result<RunResult, GenError> {
    let engine = Engine::new(spec.rule.clone());
    let palette = &spec.rule.palette;
    let mut board_rng = SplitMix64::stream(spec.board_seed, BOARD_STREAM);
    let mut agent = spec.agent.build(spec.features.len(), spec.agent_seed);
    let limit = spec.agent.move_limit();
    let mut result = RunResult::default();
    let mut cum_errors = 0u64;

    for ep_index in 1..=spec.episodes {
        let board = generate(&spec.boards, palette, &mut board_rng)?;
        let mut episode = Episode::new(&engine, board, Some(limit));
        let mut window = HistoryWindow::new(spec.features.memory);
        let mut failed = ActionSet::empty();
        let mut phi = encode(&spec.features, episode.board(), &window, palette).expect("palette checked by spec");
        let (mut errors, mut moves) = (0u32, 0u32);
        agent.begin_episode();

        while !episode.status().is_terminal() {
            let before = *episode.board();
            let mv = agent.act(&Observation { features: &phi, board: &before, failed: &failed });
            let eps = agent.epsilon();
            let out = episode.step(mv);
            moves += 1;
            if out.accepted {
                window.push(before, mv);
                failed = ActionSet::empty();
            } else {
                failed.insert(mv);
                errors += 1;
                cum_errors += 1;
            }
            let next_phi = if out.accepted {
                encode(&spec.features, episode.board(), &window, palette).expect("palette checked by spec")
            } else {
                phi.clone()
            };
            let terminal = matches!(out.status, EpisodeStatus::Cleared | EpisodeStatus::Stalemate);
            agent.observe(&Transition {
                state: &phi,
                action: mv,
                reward: if out.accepted { 0.0 } else { -1.0 },
                next_state: &next_phi,
                next_board: episode.board(),
                terminal,
            });
            if spec.record_transcript {
                let mut r = TranscriptRecord::event(&spec.run_id, ep_index, moves, EventKind::Move);
                r.row = Some(mv.row);
                r.col = Some(mv.col);
                r.bucket = Some(mv.bucket);
                r.accepted = Some(out.accepted);
                r.epsilon = eps;
                r.cum_errors = Some(cum_errors);
                result.transcript.push(r);
            }
            phi = next_phi;
        }
        agent.end_episode();
        result.episode_errors.push(errors);
        result.episode_moves.push(moves);
        result.episode_status.push(episode.status());
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gohr_core::{builtin_rule, FeatureMap, Palette};

    fn spec(agent: AgentConfig, rule: &str, episodes: u32) -> RunSpec {
        RunSpec {
            run_id: "t".into(),
            rule: builtin_rule(rule).unwrap(),
            agent,
            features: FeatureSpec::new(FeatureMap::BdAd, 2).unwrap(),
            boards: GenParams::rl_default(&Palette::default()),
            episodes,
            board_seed: 1,
            agent_seed: 2,
            record_transcript: true,
        }
    }

    #[test]
    fn random_agent_counts() {
        let r = run_learning(&spec(AgentConfig::Random { move_limit: 100 }, "SM", 20)).unwrap();
        assert_eq!(r.episode_errors.len(), 20);
        assert_eq!(r.transcript.len() as u64, r.total_moves());
        assert_eq!(r.transcript.last().unwrap().cum_errors, Some(r.total_errors()));
        let mut last = 0;
        for rec in &r.transcript {
            assert!(rec.cum_errors.unwrap() >= last);
            last = rec.cum_errors.unwrap();
        }
    }

    #[test]
    fn move_limit_truncates() {
        let r = run_learning(&spec(AgentConfig::Random { move_limit: 5 }, "CW", 10)).unwrap();
        assert!(r.episode_moves.iter().all(|&m| m <= 5));
    }

    #[test]
    fn small_dqn_runs_are_reproducible() {
        let cfg = DqnConfig { hidden: vec![16], batch_size: 8, replay_capacity: 100, ..DqnConfig::default() };
        let a = run_learning(&spec(AgentConfig::Dqn(cfg.clone()), "BLTR", 15)).unwrap();
        let b = run_learning(&spec(AgentConfig::Dqn(cfg), "BLTR", 15)).unwrap();
        assert_eq!(a, b);
        assert!(a.transcript.iter().all(|r| r.epsilon.is_some()));
    }

    #[test]
    fn config_json_defaults() {
        let c: AgentConfig = serde_json::from_str(r#"{"kind": "dqn", "hidden": [64]}"#).unwrap();
        match c {
            AgentConfig::Dqn(d) => {
                assert_eq!(d.hidden, vec![64]);
                assert_eq!(d.batch_size, 256);
            }
            _ => panic!(),
        }
        let c: AgentConfig = serde_json::from_str(r#"{"kind": "random"}"#).unwrap();
        assert_eq!(c.move_limit(), 100);
    }
}
