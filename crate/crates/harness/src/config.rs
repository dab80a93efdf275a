//! Experiment configuration, shipped presets and per-cell seeds.

use std::path::{Path, PathBuf};

use gohr_core::boardgen::GenParams;
use gohr_core::rng::{fnv1a64, mix64};
use gohr_core::{builtin_rule, parse_rule, FeatureSpec, Palette, RuleProgram};
use gohr_learn::AgentConfig;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Prefix selecting a shipped preset instead of a config file.
pub const PRESET_PREFIX: &str = "preset:";

const PRESETS: &[(&str, &str)] = &[
    ("base-rules-desk", include_str!("../../../configs/base-rules-desk.json")),
    ("generality-desk", include_str!("../../../configs/generality-desk.json")),
];

/// How run seeds are derived from the base seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedScope {
    /// Every (rule, agent, features, run) cell gets its own seed.
    #[default]
    Cell,
    /// Run `i` uses the same seed under every rule, agent and feature map,
    /// so that rules are compared on identical boards and initialisations.
    Run,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    /// Name used in paths and reports; defaults to the agent kind.
    #[serde(default)]
    pub label: Option<String>,
    pub agent: AgentConfig,
}

impl AgentEntry {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.agent.name().to_string())
    }
}

/// One-sided test of "the general rule is harder than the base rule".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub general: String,
    pub base: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Built-in rule names or paths to rule files.
    pub rules: Vec<String>,
    pub agents: Vec<AgentEntry>,
    /// Feature specs such as `BD-AD-n6`.
    pub feature_specs: Vec<String>,
    pub runs_per_cell: u32,
    pub episodes: u32,
    pub seed_base: u64,
    #[serde(default)]
    pub seed_scope: SeedScope,
    /// Board generation; the learning default (9 pieces) when absent.
    #[serde(default)]
    pub gen_params: Option<GenParams>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub record_transcripts: bool,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// Loads `preset:<name>` or a JSON file.
    pub fn load(source: &str) -> Result<Self, HarnessError> {
        if let Some(name) = source.strip_prefix(PRESET_PREFIX) {
            return preset(name);
        }
        let text = std::fs::read_to_string(source).map_err(|e| HarnessError::io(source, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{source}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(format!("{}: {m}", self.name)));
        if self.rules.is_empty() || self.agents.is_empty() || self.feature_specs.is_empty() {
            return bad("rules, agents and featureSpecs must all be non-empty");
        }
        if self.runs_per_cell == 0 || self.episodes == 0 {
            return bad("runsPerCell and episodes must be positive");
        }
        for r in &self.rules {
            resolve_rule(r)?;
        }
        for f in &self.feature_specs {
            f.parse::<FeatureSpec>().map_err(|e| HarnessError::Config(format!("feature spec `{f}`: {e}")))?;
        }
        let mut labels: Vec<String> = self.agents.iter().map(AgentEntry::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.agents.len() {
            return bad("agent labels must be distinct");
        }
        for c in &self.comparisons {
            for r in [&c.general, &c.base] {
                if !self.rules.iter().any(|x| rule_label(x) == *r) {
                    return bad(&format!("comparison names rule `{r}` that is not in the experiment"));
                }
            }
        }
        if let Some(g) = &self.gen_params {
            g.validate(&Palette::default()).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Every cell of the experiment in a fixed order.
    pub fn cells(&self) -> Result<Vec<Cell>, HarnessError> {
        let mut out = Vec::new();
        for rule in &self.rules {
            let program = resolve_rule(rule)?;
            for agent in &self.agents {
                for f in &self.feature_specs {
                    let features: FeatureSpec =
                        f.parse().map_err(|e| HarnessError::Config(format!("feature spec `{f}`: {e}")))?;
                    for run in 0..self.runs_per_cell {
                        let mut cell = Cell {
                            rule: rule_label(rule),
                            program: program.clone(),
                            agent_label: agent.label(),
                            agent: agent.agent.clone(),
                            features,
                            run_index: run,
                            seed: 0,
                        };
                        cell.seed = self.cell_seed(&cell);
                        out.push(cell);
                    }
                }
            }
        }
        Ok(out)
    }

    fn cell_seed(&self, cell: &Cell) -> u64 {
        let key = match self.seed_scope {
            SeedScope::Cell => format!("{}|{}|{}|{}", cell.rule, cell.agent_label, cell.features, cell.run_index),
            SeedScope::Run => format!("run|{}", cell.run_index),
        };
        mix64(self.seed_base ^ fnv1a64(key.as_bytes()))
    }

    pub fn gen_params(&self) -> GenParams {
        self.gen_params.clone().unwrap_or_else(|| GenParams::rl_default(&Palette::default()))
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, HarnessError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| HarnessError::Config(format!("unknown preset `{name}`")))?;
    let cfg: ExperimentConfig = serde_json::from_str(text).expect("shipped presets parse");
    cfg.validate()?;
    Ok(cfg)
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// The name a rule goes by in paths and reports: a built-in name as given,
/// or a rule file's stem.
pub fn rule_label(rule: &str) -> String {
    if builtin_rule(rule).is_ok() {
        return rule.to_string();
    }
    Path::new(rule).file_stem().map_or_else(|| rule.to_string(), |s| s.to_string_lossy().into_owned())
}

/// A built-in rule by name, or a rule file parsed over the default palette.
pub fn resolve_rule(rule: &str) -> Result<RuleProgram, HarnessError> {
    if let Ok(p) = builtin_rule(rule) {
        return Ok(p);
    }
    let text = std::fs::read_to_string(rule)
        .map_err(|_| HarnessError::Config(format!("`{rule}` is neither a built-in rule nor a readable file")))?;
    parse_rule(&text, &Palette::default()).map_err(|e| HarnessError::Rule { path: rule.to_string(), source: e })
}

/// One learning run of the experiment grid.
#[derive(Clone, Debug)]
pub struct Cell {
    pub rule: String,
    pub program: RuleProgram,
    pub agent_label: String,
    pub agent: AgentConfig,
    pub features: FeatureSpec,
    pub run_index: u32,
    pub seed: u64,
}

impl Cell {
    pub fn run_id(&self) -> String {
        format!("{}/{}/{}/run-{:03}", self.rule, self.agent_label, self.features, self.run_index)
    }

    /// Output directory of the cell below the experiment root.
    pub fn dir(&self, root: &Path) -> PathBuf {
        root.join("cells")
            .join(&self.rule)
            .join(&self.agent_label)
            .join(self.features.to_string())
            .join(format!("run-{:03}", self.run_index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            assert!(!cfg.cells().unwrap().is_empty());
        }
        let base = preset("base-rules-desk").unwrap();
        assert_eq!(base.runs_per_cell, 5);
        assert_eq!(base.episodes, 1500);
        assert_eq!(base.feature_specs, vec!["BD-AD-n6"]);
        let gen = preset("generality-desk").unwrap();
        assert_eq!(gen.runs_per_cell, 10);
        assert_eq!(gen.comparisons.len(), 3);
    }

    #[test]
    fn cell_product_and_seed_scopes() {
        let mut cfg = preset("base-rules-desk").unwrap();
        cfg.rules = vec!["SM".into(), "CM".into()];
        cfg.runs_per_cell = 3;
        let cells = cfg.cells().unwrap();
        assert_eq!(cells.len(), 6);
        cfg.seed_scope = SeedScope::Run;
        let cells = cfg.cells().unwrap();
        assert_eq!(cells[0].seed, cells[3].seed);
        assert_ne!(cells[0].seed, cells[1].seed);
        cfg.seed_scope = SeedScope::Cell;
        let cells = cfg.cells().unwrap();
        assert_ne!(cells[0].seed, cells[3].seed);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = preset("base-rules-desk").unwrap();
        cfg.rules.push("NoSuchRule".into());
        assert!(cfg.validate().is_err());
        let mut cfg = preset("generality-desk").unwrap();
        cfg.comparisons.push(Comparison { general: "SM1F".into(), base: "SM".into() });
        assert!(cfg.validate().is_err());
        let text = r#"{"name": "x", "rules": ["SM"], "agents": [], "featureSpecs": ["BD-AD-n2"],
                      "runsPerCell": 1, "episodes": 1, "seedBase": 0, "typo": 1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }
}
