use serde::{Deserialize, Serialize};

/// The shape and color vocabulary of an experiment.
///
/// Pieces store palette indices; the order here fixes the plane order used
/// by the feature maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Palette {
    pub shapes: Vec<String>,
    pub colors: Vec<String>,
}

impl Palette {
    pub fn new<S: Into<String>>(shapes: Vec<S>, colors: Vec<S>) -> Self {
        Self {
            shapes: shapes.into_iter().map(|s| s.into().to_ascii_lowercase()).collect(),
            colors: colors.into_iter().map(|s| s.into().to_ascii_lowercase()).collect(),
        }
    }

    /// Four shapes and the red/blue/yellow/black color set.
    pub fn classic() -> Self {
        Self::new(
            vec!["star", "triangle", "square", "circle"],
            vec!["red", "blue", "yellow", "black"],
        )
    }

    pub fn shape_index(&self, name: &str) -> Option<u8> {
        self.shapes
            .iter()
            .position(|s| s.eq_ignore_ascii_case(name))
            .map(|i| i as u8)
    }

    pub fn color_index(&self, name: &str) -> Option<u8> {
        self.colors
            .iter()
            .position(|s| s.eq_ignore_ascii_case(name))
            .map(|i| i as u8)
    }

    pub fn shape_name(&self, idx: u8) -> &str {
        &self.shapes[idx as usize]
    }

    pub fn color_name(&self, idx: u8) -> &str {
        &self.colors[idx as usize]
    }

    pub fn num_shapes(&self) -> usize {
        self.shapes.len()
    }

    pub fn num_colors(&self) -> usize {
        self.colors.len()
    }
}

impl Default for Palette {
    /// Four shapes and the red/blue/yellow/green color set, so every
    /// built-in rule validates as written.
    fn default() -> Self {
        Self::new(
            vec!["star", "triangle", "square", "circle"],
            vec!["red", "blue", "yellow", "green"],
        )
    }
}
