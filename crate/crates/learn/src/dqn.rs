//! Deep Q-learning with experience replay, a target network and an
//! action mask over occupied cells minus recently failed actions.

use gohr_core::geometry::{ActionSet, Move, NUM_ACTIONS};
use gohr_core::SplitMix64;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::agent::{dqn_mask, Agent, Observation, Transition};
use crate::nn::{huber, Activation, Input, Mlp, MlpSpec, RmsProp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub gamma: f64,
    pub hidden: Vec<usize>,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Negative time constant of the exponential decay, in moves.
    pub eps_decay: f64,
    /// Target network refresh period, in moves.
    pub sync_every: u64,
    pub move_limit: u32,
    /// Keep the initial weights (no training).
    pub frozen: bool,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.001,
            hidden: vec![700, 700],
            replay_capacity: 30_000,
            batch_size: 256,
            lr: 0.0001,
            eps_start: 0.99,
            eps_end: 0.0001,
            eps_decay: -200.0,
            sync_every: 100,
            move_limit: 100,
            frozen: false,
        }
    }
}

impl DqnConfig {
    /// Exploration rate at global move `m` (0-based over the whole run).
    pub fn epsilon(&self, m: u64) -> f64 {
        self.eps_end + (self.eps_start - self.eps_end) * (m as f64 / self.eps_decay).exp()
    }

    pub fn net_spec(&self, input_dim: usize, init_seed: u64) -> MlpSpec {
        let hidden: Vec<(usize, Activation)> = self.hidden.iter().map(|&w| (w, Activation::Relu)).collect();
        MlpSpec::new(input_dim, &hidden, NUM_ACTIONS, init_seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub state: Vec<u32>,
    pub action: u16,
    pub reward: f64,
    pub next_state: Vec<u32>,
    pub terminal: bool,
    /// Occupied-cell bitmask of the next board.
    pub next_occupied: u64,
}

/// Fixed-capacity FIFO of experiences.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), next: 0 }
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.next] = e;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `k` distinct entries chosen uniformly.
    pub fn sample(&self, rng: &mut SplitMix64, k: usize) -> Vec<&Experience> {
        rng.sample_distinct(self.items.len(), k).into_iter().map(|i| &self.items[i]).collect()
    }
}

/// TD target `r + (1 - terminal) * gamma * max_a' Q_target(s', a')`.
pub fn td_target(reward: f64, terminal: bool, gamma: f64, next_max: f64) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * next_max
    }
}

/// Greedy choice: outputs outside `mask` are pushed below the smallest
/// valid output, then the first maximum wins.
pub fn masked_argmax(q: &[f64], mask: &ActionSet) -> usize {
    let min_valid = mask.indices().map(|i| q[i]).fold(f64::INFINITY, f64::min);
    let floor = min_valid - 1.0;
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in q.iter().enumerate() {
        let v = if mask.contains_index(i) { v } else { floor };
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

pub struct DqnAgent {
    cfg: DqnConfig,
    policy: Mlp,
    target: Mlp,
    opt: RmsProp,
    replay: ReplayBuffer,
    rng: SplitMix64,
    moves: u64,
    last_eps: f64,
    updates: u64,
}

impl DqnAgent {
    pub fn new(cfg: DqnConfig, input_dim: usize, init_seed: u64, rng: SplitMix64) -> Self {
        let policy = Mlp::new(cfg.net_spec(input_dim, init_seed));
        Self::with_network(cfg, policy, rng)
    }

    pub fn with_network(cfg: DqnConfig, policy: Mlp, rng: SplitMix64) -> Self {
        let target = policy.clone();
        let opt = RmsProp::new(&policy, cfg.lr);
        let replay = ReplayBuffer::new(cfg.replay_capacity);
        Self { cfg, policy, target, opt, replay, rng, moves: 0, last_eps: f64::NAN, updates: 0 }
    }

    pub fn policy(&self) -> &Mlp {
        &self.policy
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// One gradient step on a uniformly sampled batch.
    pub fn train_step(&mut self) {
        let b = self.cfg.batch_size;
        let batch = self.replay.sample(&mut self.rng, b);
        let states: Vec<&[u32]> = batch.iter().map(|e| e.state.as_slice()).collect();
        let nexts: Vec<&[u32]> = batch.iter().map(|e| e.next_state.as_slice()).collect();
        let fwd = self.policy.forward(Input::Binary(&states)).expect("feature width matches network");
        let next_q = self.target.forward(Input::Binary(&nexts)).expect("feature width matches network");
        let q = fwd.output();
        let nq = next_q.output();
        let mut grad = Array2::zeros((b, NUM_ACTIONS));
        for (j, e) in batch.iter().enumerate() {
            let next_max = if e.terminal || e.next_occupied == 0 {
                0.0
            } else {
                ActionSet::from_cell_mask(e.next_occupied)
                    .indices()
                    .map(|a| nq[[j, a]])
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let y = td_target(e.reward, e.terminal, self.cfg.gamma, next_max);
            let a = e.action as usize;
            let (_, d) = huber(q[[j, a]], y);
            grad[[j, a]] = d / b as f64;
        }
        let grads = self.policy.backward(Input::Binary(&states), &fwd, grad.view());
        self.opt.step(&mut self.policy, &grads);
        self.updates += 1;
    }
}

impl Agent for DqnAgent {
    fn act(&mut self, obs: &Observation) -> Move {
        let eps = self.cfg.epsilon(self.moves);
        self.last_eps = eps;
        let mask = dqn_mask(obs.board, obs.failed);
        let index = if self.rng.next_f64() < eps {
            let valid: Vec<usize> = mask.indices().collect();
            valid[self.rng.index(valid.len())]
        } else {
            let q = self.policy.predict_binary(obs.features.ones()).expect("feature width matches network");
            masked_argmax(q.as_slice().expect("contiguous"), &mask)
        };
        Move::from_action_index(index).expect("valid action index")
    }

    fn observe(&mut self, t: &Transition) {
        self.moves += 1;
        if self.cfg.frozen {
            return;
        }
        self.replay.push(Experience {
            state: t.state.ones().to_vec(),
            action: t.action.action_index() as u16,
            reward: t.reward,
            next_state: t.next_state.ones().to_vec(),
            terminal: t.terminal,
            next_occupied: t.next_board.occupied_mask(),
        });
        if self.replay.len() >= self.cfg.batch_size {
            self.train_step();
        }
        if self.moves % self.cfg.sync_every == 0 {
            self.target.copy_from(&self.policy);
        }
    }

    fn epsilon(&self) -> Option<f64> {
        Some(self.last_eps)
    }
}
