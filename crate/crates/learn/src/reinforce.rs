//! Episodic policy gradient with an average-return baseline. The policy is
//! a softmax over the actions of occupied cells; failed actions stay
//! available.

use gohr_core::geometry::{Move, NUM_ACTIONS};
use gohr_core::SplitMix64;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::agent::{occupied_actions, Agent, Observation, Transition};
use crate::nn::{masked_softmax, Activation, Input, Mlp, MlpSpec, RmsProp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReinforceConfig {
    pub gamma: f64,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub move_limit: u32,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self { gamma: 0.001, hidden: vec![1000], lr: 0.0007, move_limit: 100 }
    }
}

impl ReinforceConfig {
    pub fn net_spec(&self, input_dim: usize, init_seed: u64) -> MlpSpec {
        let hidden: Vec<(usize, Activation)> = self.hidden.iter().map(|&w| (w, Activation::LeakyRelu)).collect();
        MlpSpec::new(input_dim, &hidden, NUM_ACTIONS, init_seed)
    }
}

/// `G_t = sum_k gamma^(k-t) r_k`, computed backwards.
pub fn returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut g = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        g[t] = acc;
    }
    g
}

/// Advantages `G_t - mean(G)`.
pub fn advantages(returns: &[f64]) -> Vec<f64> {
    if returns.is_empty() {
        return Vec::new();
    }
    let baseline = returns.iter().sum::<f64>() / returns.len() as f64;
    returns.iter().map(|g| g - baseline).collect()
}

struct Step {
    state: Vec<u32>,
    valid: Vec<usize>,
    action: usize,
    reward: f64,
}

pub struct ReinforceAgent {
    cfg: ReinforceConfig,
    net: Mlp,
    opt: RmsProp,
    rng: SplitMix64,
    episode: Vec<Step>,
}

impl ReinforceAgent {
    pub fn new(cfg: ReinforceConfig, input_dim: usize, init_seed: u64, rng: SplitMix64) -> Self {
        let net = Mlp::new(cfg.net_spec(input_dim, init_seed));
        Self::with_network(cfg, net, rng)
    }

    pub fn with_network(cfg: ReinforceConfig, net: Mlp, rng: SplitMix64) -> Self {
        let opt = RmsProp::new(&net, cfg.lr);
        Self { cfg, net, opt, rng, episode: Vec::new() }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    fn policy(&self, state: &[u32], valid: &[usize]) -> Vec<f64> {
        let logits = self.net.predict_binary(state).expect("feature width matches network");
        masked_softmax(logits.as_slice().expect("contiguous"), valid).expect("occupied board")
    }

    /// One RMSprop step on `sum_t A_t ln pi(a_t | s_t)` over the episode,
    /// with every term taken at the weights the episode was played with.
    fn update(&mut self, steps: &[Step], advantages: &[f64]) {
        if steps.is_empty() {
            return;
        }
        let rows: Vec<&[u32]> = steps.iter().map(|s| s.state.as_slice()).collect();
        let fwd = self.net.forward(Input::Binary(&rows)).expect("feature width matches network");
        // d(-A ln pi_a)/d logits = A (pi - onehot(a)), zero outside the mask.
        let mut grad = Array2::zeros((steps.len(), NUM_ACTIONS));
        for (t, (s, &adv)) in steps.iter().zip(advantages).enumerate() {
            let logits = fwd.output().row(t);
            let pi = masked_softmax(logits.as_slice().expect("contiguous"), &s.valid).expect("occupied board");
            for &i in &s.valid {
                grad[[t, i]] = adv * pi[i];
            }
            grad[[t, s.action]] -= adv;
        }
        let grads = self.net.backward(Input::Binary(&rows), &fwd, grad.view());
        self.opt.step(&mut self.net, &grads);
    }
}

impl Agent for ReinforceAgent {
    fn begin_episode(&mut self) {
        self.episode.clear();
    }

    fn act(&mut self, obs: &Observation) -> Move {
        let valid: Vec<usize> = occupied_actions(obs.board).indices().collect();
        let pi = self.policy(obs.features.ones(), &valid);
        let u = self.rng.next_f64();
        let mut acc = 0.0;
        let mut chosen = *valid.last().expect("occupied board");
        for &i in &valid {
            acc += pi[i];
            if u < acc {
                chosen = i;
                break;
            }
        }
        self.episode.push(Step { state: obs.features.ones().to_vec(), valid, action: chosen, reward: 0.0 });
        Move::from_action_index(chosen).expect("valid action index")
    }

    fn observe(&mut self, t: &Transition) {
        let step = self.episode.last_mut().expect("observe follows act");
        debug_assert_eq!(step.action, t.action.action_index());
        step.reward = t.reward;
    }

    fn end_episode(&mut self) {
        let steps = std::mem::take(&mut self.episode);
        let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
        let adv = advantages(&returns(&rewards, self.cfg.gamma));
        self.update(&steps, &adv);
    }
}
