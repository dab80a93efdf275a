use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("row {0} out of range 1..=6")]
    Row(i64),
    #[error("column {0} out of range 1..=6")]
    Col(i64),
    #[error("cell {0} out of range 1..=36")]
    Cell(i64),
    #[error("bucket {0} out of range 0..=3")]
    Bucket(i64),
    #[error("action index {0} out of range 0..144")]
    Action(i64),
}

#[derive(Debug, Error)]
pub enum BoardError {
    #[error("board {board}: cell {cell} used twice")]
    DuplicateCell { board: usize, cell: u8 },
    #[error("board {board}: {source}")]
    Range {
        board: usize,
        #[source]
        source: RangeError,
    },
    #[error("board {board}: unknown shape `{name}`")]
    UnknownShape { board: usize, name: String },
    #[error("board {board}: unknown color `{name}`")]
    UnknownColor { board: usize, name: String },
    #[error("board file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("infeasible generation parameters: {0}")]
    Infeasible(String),
    #[error("could not satisfy the cover-all constraint in {0} attempts")]
    CoverAllExhausted(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("feature maps need a 4-shape, 4-color palette (got {shapes} shapes, {colors} colors)")]
    PaletteSize { shapes: usize, colors: usize },
    #[error("history window holds {got} entries but the feature spec remembers only {memory}")]
    WindowTooLong { got: usize, memory: usize },
    #[error("unknown feature map `{0}` (expected BD-AD, BD-AS, BS-AD, BS-AS or BSD-ASD)")]
    UnknownMap(String),
    #[error("memory depth {0} not in {{2, 4, 6, 8}}")]
    Memory(usize),
}
