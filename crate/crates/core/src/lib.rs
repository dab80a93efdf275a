//! Game of Hidden Rules: the rule language, the game engine, board
//! generation, state featurization and transcripts.

pub mod board;
pub mod boardgen;
pub mod engine;
pub mod error;
pub mod features;
pub mod geometry;
pub mod palette;
pub mod reference;
pub mod rng;
pub mod rule;
pub mod transcript;

pub use board::{Board, Piece};
pub use engine::{Engine, Episode, EpisodeStatus, RuleState};
pub use features::{FeatureMap, FeatureSpec, FeatureVector, HistoryWindow};
pub use geometry::{ActionSet, Move};
pub use palette::Palette;
pub use rng::SplitMix64;
pub use rule::{builtin_rule, parse_rule, print_rule, RuleProgram};
