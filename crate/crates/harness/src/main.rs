use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gohr_core::reference::compare_with_engine;
use gohr_core::{parse_rule, print_rule, Palette};
use gohr_harness::config::resolve_rule;
use gohr_harness::probes::random_error_rate;
use gohr_harness::{output_root, run_experiment, write_metrics, ExperimentConfig, HarnessError, RunOptions};
use gohr_play::AppState;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gohr", version, about = "Hidden-rule game: engine probes, learning experiments and the play service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a rule file and print its canonical form.
    ValidateRule { file: PathBuf },
    /// Error rate of a uniform-random policy over occupied cells.
    PlayRandom {
        rule: String,
        #[arg(long, default_value_t = 10_000)]
        moves: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an experiment from a config file or `preset:<name>`, then write its metrics.
    Train {
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<u32>,
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Recompute metric artifacts for an experiment directory.
    Metrics { dir: PathBuf },
    /// Run the play service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory for per-session transcript files.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Built web client to serve at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Compare the engine against the reference interpreter.
    OracleCheck {
        rule: String,
        #[arg(long, default_value_t = 100_000)]
        probes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value"));
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::ValidateRule { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| HarnessError::io(&file, e))?;
            let program = parse_rule(&text, &Palette::default())
                .map_err(|e| HarnessError::Rule { path: file.display().to_string(), source: e })?;
            println!("{}", print_rule(&program));
        }
        Command::PlayRandom { rule, moves, seed } => {
            let program = resolve_rule(&rule)?;
            let p = random_error_rate(&program, moves, seed)?;
            print_json(&json!({"rule": rule, "seed": seed, "moves": p.moves, "errors": p.errors,
                "errorRate": p.error_rate, "boards": p.boards}));
        }
        Command::Train { config, seed, episodes, runs, jobs, out, quiet } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed_base = s;
            }
            if let Some(e) = episodes {
                cfg.episodes = e;
            }
            if let Some(r) = runs {
                cfg.runs_per_cell = r;
            }
            let root = out.unwrap_or_else(|| output_root(&cfg));
            let outcome = run_experiment(&cfg, &root, &RunOptions { jobs, verbose: !quiet })?;
            let report = write_metrics(&root)?;
            print_json(&json!({
                "output": root,
                "cells": outcome.summaries.len() + outcome.failures.len(),
                "executed": outcome.executed,
                "failures": outcome.failures.len(),
                "report": report,
            }));
            if !outcome.failures.is_empty() {
                return Err(HarnessError::Run(format!("{} cells failed; see failures.json", outcome.failures.len())));
            }
        }
        Command::Metrics { dir } => {
            let report = write_metrics(&dir)?;
            print_json(&serde_json::to_value(report).expect("report serializes"));
        }
        Command::Serve { port, host, data, static_dir } => {
            let addr: SocketAddr =
                format!("{host}:{port}").parse().map_err(|e| HarnessError::Config(format!("address: {e}")))?;
            let state = match data {
                Some(d) => AppState::with_data_dir(&d).map_err(|e| HarnessError::io(&d, e))?,
                None => AppState::in_memory(),
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| HarnessError::io("tokio runtime", e))?;
            eprintln!("listening on http://{addr}");
            rt.block_on(gohr_play::serve(addr, state, static_dir)).map_err(|e| HarnessError::io(addr.to_string(), e))?;
        }
        Command::OracleCheck { rule, probes, seed } => {
            let program = resolve_rule(&rule)?;
            let report = compare_with_engine(&program, probes, seed);
            print_json(&json!({"rule": rule, "probes": report.probes,
                "disagreements": report.disagreements.len(), "examples": report.disagreements}));
            if !report.disagreements.is_empty() {
                return Err(HarnessError::Run(format!("{} disagreements", report.disagreements.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprintln!("{}", json!({"error": "usage", "message": e.render().to_string().trim_end()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
