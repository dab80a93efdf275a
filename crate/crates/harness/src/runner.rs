//! Cell scheduling, resumable execution and atomic output files.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use gohr_core::boardgen::GenParams;
use gohr_core::rng::fnv1a64;
use gohr_core::transcript::write_jsonl;
use gohr_core::{print_rule, EpisodeStatus};
use gohr_learn::{run_learning, RunSpec};
use gohr_metrics::{tce, CONVERGENCE_WINDOW, RATE_THRESHOLD};
use serde::{Deserialize, Serialize};

use crate::config::{Cell, ExperimentConfig};
use crate::HarnessError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const CONFIG_FILE: &str = "config.json";
pub const FAILURES_FILE: &str = "failures.json";

/// Outcome of one learning run, as stored in its `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellSummary {
    pub run_id: String,
    pub rule: String,
    pub agent: String,
    pub feature_spec: String,
    pub run_index: u32,
    pub seed: u64,
    pub episodes: u32,
    pub tce: u64,
    pub converged: bool,
    pub window_errors: u64,
    pub window_moves: u64,
    pub total_moves: u64,
    pub episode_errors: Vec<u32>,
    pub episode_moves: Vec<u32>,
    pub move_limit_episodes: u32,
    /// Hash of everything that determines the run; a summary whose
    /// fingerprint differs from the current config is recomputed.
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellFailure {
    pub run_id: String,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; machine parallelism when `None`.
    pub jobs: Option<usize>,
    /// Progress lines on stderr.
    pub verbose: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutcome {
    pub summaries: Vec<CellSummary>,
    pub failures: Vec<CellFailure>,
    /// Cells computed in this invocation (the rest were already on disk).
    pub executed: usize,
}

fn fingerprint(cell: &Cell, cfg: &ExperimentConfig, gen: &GenParams) -> String {
    let doc = serde_json::json!({
        "rule": print_rule(&cell.program),
        "palette": cell.program.palette,
        "agent": cell.agent,
        "features": cell.features.to_string(),
        "episodes": cfg.episodes,
        "seed": cell.seed,
        "gen": gen,
        "transcript": cfg.record_transcripts,
    });
    format!("{:016x}", fnv1a64(doc.to_string().as_bytes()))
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().expect("output files live in a directory");
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{}.tmp", path.file_name().unwrap().to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

fn load_summary(path: &Path) -> Option<CellSummary> {
    serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
}

fn run_cell(cell: &Cell, cfg: &ExperimentConfig, gen: &GenParams, root: &Path) -> Result<CellSummary, HarnessError> {
    let spec = RunSpec {
        run_id: cell.run_id(),
        rule: cell.program.clone(),
        agent: cell.agent.clone(),
        features: cell.features,
        boards: gen.clone(),
        episodes: cfg.episodes,
        board_seed: cell.seed,
        agent_seed: cell.seed,
        record_transcript: cfg.record_transcripts,
    };
    let result = run_learning(&spec).map_err(|e| HarnessError::Run(e.to_string()))?;
    let window = CONVERGENCE_WINDOW.min(result.episode_errors.len());
    let t = tce(&result.episode_errors, &result.episode_moves, window, RATE_THRESHOLD)
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    let dir = cell.dir(root);
    if cfg.record_transcripts {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &result.transcript).map_err(|e| HarnessError::io(&dir, e))?;
        write_atomic(&dir.join(TRANSCRIPT_FILE), &buf).map_err(|e| HarnessError::io(&dir, e))?;
    }
    let summary = CellSummary {
        run_id: cell.run_id(),
        rule: cell.rule.clone(),
        agent: cell.agent_label.clone(),
        feature_spec: cell.features.to_string(),
        run_index: cell.run_index,
        seed: cell.seed,
        episodes: cfg.episodes,
        tce: t.tce,
        converged: t.converged,
        window_errors: t.window_errors,
        window_moves: t.window_moves,
        total_moves: result.total_moves(),
        move_limit_episodes: result.episode_status.iter().filter(|&&s| s == EpisodeStatus::MoveLimitReached).count()
            as u32,
        episode_errors: result.episode_errors,
        episode_moves: result.episode_moves,
        fingerprint: fingerprint(cell, cfg, gen),
    };
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    write_atomic(&dir.join(SUMMARY_FILE), &json).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(summary)
}

/// Output root: `GOHR_OUT` if set, else the config's `output`, else
/// `runs/<name>`.
pub fn output_root(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os("GOHR_OUT") {
        return PathBuf::from(dir);
    }
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name))
}

/// Runs every cell not already summarized under `root`, in parallel over
/// cells. A failing cell is recorded and the others proceed.
pub fn run_experiment(cfg: &ExperimentConfig, root: &Path, opts: &RunOptions) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let cells = cfg.cells()?;
    let gen = cfg.gen_params();
    let mut cfg_json = serde_json::to_vec_pretty(cfg).expect("config serializes");
    cfg_json.push(b'\n');
    write_atomic(&root.join(CONFIG_FILE), &cfg_json).map_err(|e| HarnessError::io(root, e))?;

    let mut slots: Vec<Option<CellSummary>> = Vec::with_capacity(cells.len());
    let mut todo = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let existing = load_summary(&cell.dir(root).join(SUMMARY_FILE))
            .filter(|s| s.fingerprint == fingerprint(cell, cfg, &gen));
        if existing.is_none() {
            todo.push(i);
        }
        slots.push(existing);
    }

    let jobs = opts
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, todo.len().max(1));
    let next = AtomicUsize::new(0);
    let done = Mutex::new(Vec::new());
    let failures = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&i) = todo.get(k) else { break };
                let cell = &cells[i];
                let outcome = catch_unwind(AssertUnwindSafe(|| run_cell(cell, cfg, &gen, root)));
                match outcome {
                    Ok(Ok(s)) => {
                        if opts.verbose {
                            eprintln!(
                                "[{}/{}] {} tce={} converged={}",
                                k + 1,
                                todo.len(),
                                s.run_id,
                                s.tce,
                                s.converged
                            );
                        }
                        done.lock().unwrap().push((i, s));
                    }
                    Ok(Err(e)) => failures.lock().unwrap().push(CellFailure { run_id: cell.run_id(), message: e.to_string() }),
                    Err(panic) => {
                        let message = panic
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "panic".into());
                        failures.lock().unwrap().push(CellFailure { run_id: cell.run_id(), message });
                    }
                }
            });
        }
    });

    let done = done.into_inner().unwrap();
    let executed = done.len();
    for (i, s) in done {
        slots[i] = Some(s);
    }
    let mut failures = failures.into_inner().unwrap();
    failures.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let failures_path = root.join(FAILURES_FILE);
    if failures.is_empty() {
        let _ = std::fs::remove_file(&failures_path);
    } else {
        let json = serde_json::to_vec_pretty(&failures).expect("failures serialize");
        write_atomic(&failures_path, &json).map_err(|e| HarnessError::io(root, e))?;
    }
    Ok(ExperimentOutcome { summaries: slots.into_iter().flatten().collect(), failures, executed })
}

/// Every `summary.json` below `root/cells`, ordered by run id.
pub fn load_summaries(root: &Path) -> Result<Vec<CellSummary>, HarnessError> {
    let mut out = Vec::new();
    let mut stack = vec![root.join("cells")];
    while let Some(dir) = stack.pop() {
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
            Err(e) => return Err(HarnessError::io(&dir, e)),
        };
        for entry in entries {
            let path = entry.map_err(|e| HarnessError::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == SUMMARY_FILE) {
                let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                let s = serde_json::from_str(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                out.push(s);
            }
        }
    }
    out.sort_by(|a: &CellSummary, b| a.run_id.cmp(&b.run_id));
    Ok(out)
}
