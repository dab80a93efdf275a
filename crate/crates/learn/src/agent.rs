//! The agent interface and the uniform-random baseline.

use gohr_core::geometry::{ActionSet, Move};
use gohr_core::{Board, FeatureVector, SplitMix64};

/// What an agent sees before choosing a move.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub features: &'a FeatureVector,
    pub board: &'a Board,
    /// Actions rejected since the last accepted move of this episode.
    pub failed: &'a ActionSet,
}

/// One environment step, reported back to the agent.
#[derive(Clone, Copy, Debug)]
pub struct Transition<'a> {
    pub state: &'a FeatureVector,
    pub action: Move,
    pub reward: f64,
    pub next_state: &'a FeatureVector,
    pub next_board: &'a Board,
    /// Board cleared (or no move possible): no bootstrapping from `next_state`.
    pub terminal: bool,
}

pub trait Agent {
    fn begin_episode(&mut self) {}

    fn act(&mut self, obs: &Observation) -> Move;

    fn observe(&mut self, _t: &Transition) {}

    fn end_episode(&mut self) {}

    /// Exploration rate in effect for the most recent [`Agent::act`], if
    /// the agent has one.
    fn epsilon(&self) -> Option<f64> {
        None
    }
}

/// All four buckets of every occupied cell.
pub fn occupied_actions(board: &Board) -> ActionSet {
    ActionSet::from_cell_mask(board.occupied_mask())
}

/// Occupied-cell actions minus those that failed since the last success.
/// Falls back to all occupied-cell actions if that leaves nothing.
pub fn dqn_mask(board: &Board, failed: &ActionSet) -> ActionSet {
    let occupied = occupied_actions(board);
    let mask = occupied.difference(failed);
    if mask.is_empty() {
        occupied
    } else {
        mask
    }
}

/// Picks uniformly among the occupied-cell actions.
#[derive(Clone, Debug)]
pub struct RandomAgent {
    rng: SplitMix64,
}

impl RandomAgent {
    pub fn new(rng: SplitMix64) -> Self {
        Self { rng }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, obs: &Observation) -> Move {
        let valid: Vec<usize> = occupied_actions(obs.board).indices().collect();
        Move::from_action_index(valid[self.rng.index(valid.len())]).expect("valid action index")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gohr_core::boardgen::{generate, GenParams};
    use gohr_core::Palette;

    #[test]
    fn nine_pieces_thirty_six_actions() {
        let pal = Palette::default();
        let b = generate(&GenParams::rl_default(&pal), &pal, &mut SplitMix64::new(1)).unwrap();
        assert_eq!(dqn_mask(&b, &ActionSet::empty()).len(), 36);
        let (cell, _) = b.pieces().next().unwrap();
        let mut failed = ActionSet::empty();
        failed.insert(Move::from_cell(cell, 2).unwrap());
        let m = dqn_mask(&b, &failed);
        assert_eq!(m.len(), 35);
        assert!(!m.contains(Move::from_cell(cell, 2).unwrap()));
    }

    #[test]
    fn exhausted_mask_falls_back() {
        let mut b = Board::empty();
        b.place(5, gohr_core::Piece { shape: 0, color: 0 }).unwrap();
        let failed: ActionSet = (0..4).map(|k| Move::from_cell(5, k).unwrap()).collect();
        assert_eq!(dqn_mask(&b, &failed).len(), 4);
    }
}
