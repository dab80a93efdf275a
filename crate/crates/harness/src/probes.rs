//! Quick engine probes: random-policy error rates and rule dominance.

use gohr_core::boardgen::{generate, GenParams};
use gohr_core::{Engine, Episode, Move, RuleProgram, SplitMix64};
use serde::Serialize;

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RandomProbe {
    pub moves: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub boards: u64,
}

fn random_occupied_move(episode: &Episode, rng: &mut SplitMix64) -> Move {
    let cells: Vec<(u8, _)> = episode.board().pieces().collect();
    let (cell, _) = cells[rng.index(cells.len())];
    Move::from_cell(cell, rng.below(4) as u8).expect("occupied cell")
}

/// Plays `moves` uniform-random moves over occupied cells on 9-piece boards,
/// carrying the rule state from board to board.
pub fn random_error_rate(program: &RuleProgram, moves: u64, seed: u64) -> Result<RandomProbe, HarnessError> {
    let engine = Engine::new(program.clone());
    let params = GenParams::rl_default(&program.palette);
    let mut board_rng = SplitMix64::stream(seed, 0);
    let mut rng = SplitMix64::stream(seed, 1);
    let next_board =
        |rng: &mut SplitMix64| generate(&params, &program.palette, rng).map_err(|e| HarnessError::Run(e.to_string()));
    let mut episode = Episode::new(&engine, next_board(&mut board_rng)?, None);
    let (mut errors, mut boards) = (0, 1);
    for _ in 0..moves {
        while episode.status().is_terminal() {
            let state = episode.into_state();
            episode = Episode::resume(&engine, state, next_board(&mut board_rng)?, None);
            boards += 1;
        }
        let mv = random_occupied_move(&episode, &mut rng);
        if !episode.step(mv).accepted {
            errors += 1;
        }
    }
    Ok(RandomProbe { moves, errors, error_rate: errors as f64 / moves.max(1) as f64, boards })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceProbe {
    pub episodes: u64,
    pub base_accepted: u64,
    pub violations: u64,
}

/// Feeds one random move sequence per episode to both rules on identical
/// 9-piece boards. A move the base rule accepts is applied to both, so the
/// boards stay equal; every such move the general rule rejects is a
/// violation.
pub fn dominance(base: &RuleProgram, general: &RuleProgram, episodes: u64, seed: u64) -> Result<DominanceProbe, HarnessError> {
    let (eb, eg) = (Engine::new(base.clone()), Engine::new(general.clone()));
    let params = GenParams::rl_default(&base.palette);
    let mut out = DominanceProbe { episodes, base_accepted: 0, violations: 0 };
    for ep in 0..episodes {
        let mut rng = SplitMix64::stream(seed, ep);
        let board = generate(&params, &base.palette, &mut rng).map_err(|e| HarnessError::Run(e.to_string()))?;
        let mut b = Episode::new(&eb, board, None);
        let mut g = Episode::new(&eg, board, None);
        while !b.status().is_terminal() {
            let mv = random_occupied_move(&b, &mut rng);
            if b.step(mv).accepted {
                out.base_accepted += 1;
                if !g.step(mv).accepted {
                    out.violations += 1;
                    break;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gohr_core::builtin_rule;

    #[test]
    fn rule_is_dominated_by_itself_and_a_free_rule() {
        let sm = builtin_rule("SM").unwrap();
        let p = dominance(&sm, &sm, 50, 3).unwrap();
        assert_eq!(p.violations, 0);
        assert!(p.base_accepted >= 50 * 9);
        let cm = builtin_rule("CM").unwrap();
        assert!(dominance(&sm, &cm, 50, 3).unwrap().violations > 0);
    }

    #[test]
    fn random_rate_is_deterministic() {
        let qn = builtin_rule("QN").unwrap();
        assert_eq!(random_error_rate(&qn, 500, 1).unwrap(), random_error_rate(&qn, 500, 1).unwrap());
    }
}
