//! Acceptance checks, one PASS/FAIL line each. Learning experiments are
//! cached under `GOHR_ACCEPTANCE_DIR` (default: cargo's per-target temp
//! directory) and only missing or stale cells are recomputed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use gohr_core::boardgen::GenParams;
use gohr_core::features::FeatureMap;
use gohr_core::reference::compare_with_engine;
use gohr_core::rule::BUILTIN_NAMES;
use gohr_core::transcript::to_jsonl;
use gohr_core::{builtin_rule, FeatureSpec, Palette, SplitMix64};
use gohr_harness::probes::{dominance, random_error_rate};
use gohr_harness::{preset, run_experiment, write_metrics, ExperimentConfig, MetricsReport, RunOptions};
use gohr_learn::nn::{huber, Activation, Input, Mlp, MlpSpec};
use gohr_learn::{run_learning, AgentConfig, DqnConfig, ReinforceConfig, RunSpec};
use gohr_metrics::{m_star, mann_whitney, streak_false_positive, tce, Alternative};
use ndarray::Array2;

type Outcome = (bool, String);

fn cache_root() -> PathBuf {
    std::env::var_os("GOHR_ACCEPTANCE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance"))
}

fn run_cached(cfg: &ExperimentConfig) -> Result<MetricsReport, String> {
    let root = cache_root().join(&cfg.name);
    let start = Instant::now();
    let outcome = run_experiment(cfg, &root, &RunOptions { jobs: None, verbose: true }).map_err(|e| e.to_string())?;
    if !outcome.failures.is_empty() {
        return Err(format!("{} cells failed: {:?}", outcome.failures.len(), outcome.failures));
    }
    eprintln!(
        "{}: {} cells ({} computed) in {:.0}s under {}",
        cfg.name,
        outcome.summaries.len(),
        outcome.executed,
        start.elapsed().as_secs_f64(),
        root.display()
    );
    write_metrics(&root).map_err(|e| e.to_string())
}

fn oracle() -> Outcome {
    let per_rule = 100_000u64.div_ceil(BUILTIN_NAMES.len() as u64);
    let start = Instant::now();
    let (mut probes, mut disagreements) = (0, Vec::new());
    for (i, name) in BUILTIN_NAMES.iter().enumerate() {
        let report = compare_with_engine(&builtin_rule(name).unwrap(), per_rule, 1000 + i as u64);
        probes += report.probes;
        disagreements.extend(report.disagreements.into_iter().map(|d| format!("{name}: {d}")));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = probes >= 100_000 && disagreements.is_empty() && secs < 300.0;
    let first = disagreements.first().cloned().unwrap_or_default();
    (
        pass,
        format!(
            "{probes} probes over {} rules, {} disagreements, {secs:.1}s {first}",
            BUILTIN_NAMES.len(),
            disagreements.len()
        ),
    )
}

fn random_chance() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["SM", "CM", "QN", "BLTR", "CW"] {
        let p = random_error_rate(&builtin_rule(name).unwrap(), 10_000, 7).unwrap();
        pass &= (p.error_rate - 0.75).abs() <= 0.02;
        parts.push(format!("{name} {:.4}", p.error_rate));
    }
    (pass, format!("error rates over 10000 moves: {}", parts.join(", ")))
}

fn dominance_check() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (base, general) in [("CW", "CWAF"), ("CW", "CW2F"), ("BLTR", "BT"), ("SM", "SM1F")] {
        let p = dominance(&builtin_rule(base).unwrap(), &builtin_rule(general).unwrap(), 1000, 11).unwrap();
        pass &= p.violations == 0 && p.base_accepted > 0;
        parts.push(format!("{base}->{general} {} violations/{} accepted", p.violations, p.base_accepted));
    }
    (pass, format!("1000 episodes each: {}", parts.join(", ")))
}

/// Board: 36 cells x (4 shapes + 4 colors). Dense board slot: shape and
/// color of the removed piece. Dense action: row, column, bucket one-hots.
fn closed_form_len(map: FeatureMap, n: usize) -> usize {
    let board = 36 * (4 + 4);
    let (dense_board, sparse_board) = (4 + 4, board);
    let (dense_action, sparse_action) = (6 + 6 + 4, 36 * 4);
    let slot = match map {
        FeatureMap::BdAd => dense_board + dense_action,
        FeatureMap::BdAs => dense_board + sparse_action,
        FeatureMap::BsAd => sparse_board + dense_action,
        FeatureMap::BsAs => sparse_board + sparse_action,
        FeatureMap::BsdAsd => dense_board + sparse_board + dense_action + sparse_action,
    };
    board + n * slot
}

fn feature_lengths() -> Outcome {
    let specs: Vec<FeatureSpec> = FeatureSpec::all().collect();
    let bad: Vec<String> = specs
        .iter()
        .filter(|s| s.len() != closed_form_len(s.map, s.memory))
        .map(|s| format!("{s}: {} vs {}", s.len(), closed_form_len(s.map, s.memory)))
        .collect();
    let bdad6: FeatureSpec = "BD-AD-n6".parse().unwrap();
    let bsd8: FeatureSpec = "BSD-ASD-n8".parse().unwrap();
    let pass = specs.len() == 20 && bad.is_empty() && bdad6.len() == 432 && bsd8.len() == 3936;
    (pass, format!("{} specs, BD-AD-n6 {}, BSD-ASD-n8 {}, mismatches {:?}", specs.len(), bdad6.len(), bsd8.len(), bad))
}

fn random_net(rng: &mut SplitMix64, seed: u64) -> Mlp {
    let hidden: Vec<(usize, Activation)> = (0..1 + rng.index(2))
        .map(|_| (3 + rng.index(6), if rng.below(2) == 0 { Activation::Relu } else { Activation::LeakyRelu }))
        .collect();
    let mut net = Mlp::new(MlpSpec::new(10, &hidden, 4 + rng.index(5), seed));
    for l in net.layers_mut() {
        l.bias.mapv_inplace(|_| rng.next_f64() - 0.5);
    }
    net
}

fn huber_loss(net: &Mlp, x: &Array2<f64>, t: &Array2<f64>) -> f64 {
    let f = net.forward(Input::Dense(x.view())).unwrap();
    f.output().iter().zip(t.iter()).map(|(&p, &t)| huber(p, t).0).sum()
}

fn gradient_check() -> Outcome {
    let mut rng = SplitMix64::new(2024);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let net = random_net(&mut rng, seed);
        let x = Array2::from_shape_simple_fn((3, 10), || 2.0 * rng.next_f64() - 1.0);
        let t = Array2::from_shape_simple_fn((3, net.spec().output_dim), || 3.0 * rng.next_f64() - 1.5);
        let f = net.forward(Input::Dense(x.view())).unwrap();
        let mut g = f.output().clone();
        g.zip_mut_with(&t, |p, &t| *p = huber(*p, t).1);
        let analytic = net.backward(Input::Dense(x.view()), &f, g.view()).flat();
        for (k, a) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            *plus.params_mut().nth(k).unwrap() += h;
            let mut minus = net.clone();
            *minus.params_mut().nth(k).unwrap() -= h;
            let numeric = (huber_loss(&plus, &x, &t) - huber_loss(&minus, &x, &t)) / (2.0 * h);
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
        }
    }
    (worst < 1e-4, format!("20 nets, max relative error {worst:.2e}"))
}

fn metric_suite() -> Outcome {
    let mut checks: Vec<(&str, bool)> = Vec::new();
    let mut three_errors = vec![false; 3];
    three_errors.extend([true; 10]);
    checks.push(("m* perfect play = 1", m_star(&[true; 10], 10) == Some(1)));
    checks.push(("m* three errors = 4", m_star(&three_errors, 10) == Some(4)));
    checks.push(("m* no streak", m_star(&[true; 9], 10).is_none()));

    let moves = vec![9u32; 300];
    let mut errs = vec![0u32; 300];
    errs[0] = 5;
    errs[200] = 3;
    let t3 = tce(&errs, &moves, 150, 0.0025).unwrap();
    errs[201] = 1;
    let t4 = tce(&errs, &moves, 150, 0.0025).unwrap();
    checks.push(("TCE total", t3.tce == 8 && t4.tce == 9));
    checks.push(("3 errors in final 150 converge", t3.converged));
    checks.push(("4 errors in final 150 do not", !t4.converged));

    let cfg = DqnConfig::default();
    let formula = |m: f64| 0.0001 + (0.99 - 0.0001) * (m / -200.0).exp();
    let eps200 = cfg.epsilon(200);
    checks.push(("eps(0) = 0.99", (cfg.epsilon(0) - 0.99).abs() < 1e-12));
    checks.push(("eps(200) matches schedule formula", (eps200 - formula(200.0)).abs() < 1e-5));

    let streak = streak_false_positive(0.25, 10);
    checks.push(("(1/4)^10", (streak - 9.5367431640625e-7).abs() < 1e-18 && (streak - 9.537e-7).abs() < 5e-11));
    let u = mann_whitney(&[1.0, 2.0], &[3.0, 4.0], Alternative::TwoSided);
    checks.push(("U exact p = 1/3", (u.p - 1.0 / 3.0).abs() < 1e-12));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    (
        failed.is_empty(),
        format!(
            "{} checks; eps(200) = {eps200:.6} (quoted 0.36424, formula {:.6}); (1/4)^10 = {streak:.4e}; failed {failed:?}",
            checks.len(),
            formula(200.0)
        ),
    )
}

fn median_of(report: &MetricsReport, rule: &str) -> Option<f64> {
    report.groups.first()?.rule(rule).map(|r| r.median_tce)
}

fn desk_ordering(report: &Result<MetricsReport, String>) -> Outcome {
    let report = match report {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let m = |r| median_of(report, r).unwrap_or(f64::NAN);
    let (qn, bltr, cw, sm) = (m("QN"), m("BLTR"), m("CW"), m("SM"));
    (qn < bltr && bltr < cw && sm > qn, format!("median TCE QN {qn}, BLTR {bltr}, CW {cw}, SM {sm}, CM {}", m("CM")))
}

fn sm_vs_cm(report: &Result<MetricsReport, String>) -> Outcome {
    let report = match report {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let Some(g) = report.groups.first() else { return (false, "no results".into()) };
    let Some(t) = g.pairwise.iter().find(|t| [&t.a, &t.b] == [&"SM".to_string(), &"CM".to_string()]) else {
        return (false, "no SM/CM test".into());
    };
    let conv = |r: &str| g.rule(r).map_or(0, |s| s.converged);
    (
        t.p > 0.3,
        format!("two-sided p = {:.4}; TCE SM {:?} ({} converged), CM {:?} ({} converged)",
            t.p, g.rule("SM").map(|s| &s.tce), conv("SM"), g.rule("CM").map(|s| &s.tce), conv("CM")),
    )
}

fn reinforce_smoke() -> Result<(bool, String), String> {
    let cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
        "name": "reinforce-smoke",
        "rules": ["BLTR"],
        "agents": [{"agent": {"kind": "reinforce"}}],
        "featureSpecs": ["BD-AD-n6"],
        "runsPerCell": 3,
        "episodes": 2000,
        "seedBase": 31,
        "recordTranscripts": false
    }))
    .map_err(|e| e.to_string())?;
    let root = cache_root().join(&cfg.name);
    let outcome = run_experiment(&cfg, &root, &RunOptions { jobs: None, verbose: true }).map_err(|e| e.to_string())?;
    if outcome.summaries.len() != 3 {
        return Err(format!("{} of 3 runs finished: {:?}", outcome.summaries.len(), outcome.failures));
    }
    let rate = |e: &[u32], m: &[u32]| {
        e.iter().map(|&x| x as f64).sum::<f64>() / m.iter().map(|&x| x as f64).sum::<f64>().max(1.0)
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for s in &outcome.summaries {
        let n = s.episode_errors.len();
        let first = rate(&s.episode_errors[..500], &s.episode_moves[..500]);
        let last = rate(&s.episode_errors[n - 500..], &s.episode_moves[n - 500..]);
        pass &= last < first;
        parts.push(format!("{:.3}->{:.3}", first, last));
    }
    Ok((pass, format!("REINFORCE BLTR error rate first/last 500 episodes: {}", parts.join(", "))))
}

fn generality(report: &Result<MetricsReport, String>) -> Outcome {
    let report = match report {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let Some(g) = report.groups.first() else { return (false, "no results".into()) };
    let mut pass = true;
    let mut parts = Vec::new();
    for (general, base) in [("BT", "BLTR"), ("CWAF", "CW"), ("CW2F", "CW")] {
        match g.generality_test(general, base) {
            Some(t) => {
                pass &= t.p > 0.95;
                let med = |r: &str| g.rule(r).map_or(f64::NAN, |s| s.median_tce);
                parts.push(format!("{general}>{base} p = {:.4} (medians {} vs {})", t.p, med(general), med(base)));
            }
            None => {
                pass = false;
                parts.push(format!("{general}>{base} missing"));
            }
        }
    }
    let (smoke_pass, smoke) = reinforce_smoke().unwrap_or_else(|e| (false, e));
    (pass && smoke_pass, format!("{}; {smoke}", parts.join(", ")))
}

fn determinism() -> Outcome {
    let rule = builtin_rule("CW").unwrap();
    let features: FeatureSpec = "BD-AD-n6".parse().unwrap();
    let agents = [
        AgentConfig::Dqn(DqnConfig { hidden: vec![32, 32], batch_size: 16, ..DqnConfig::default() }),
        AgentConfig::Reinforce(ReinforceConfig { hidden: vec![64], ..ReinforceConfig::default() }),
        AgentConfig::Random { move_limit: 100 },
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for agent in agents {
        let spec = RunSpec {
            run_id: "determinism".into(),
            rule: rule.clone(),
            agent: agent.clone(),
            features,
            boards: GenParams::rl_default(&Palette::default()),
            episodes: 60,
            board_seed: 5,
            agent_seed: 6,
            record_transcript: true,
        };
        let a = to_jsonl(&run_learning(&spec).unwrap().transcript);
        let b = to_jsonl(&run_learning(&spec).unwrap().transcript);
        pass &= a == b && !a.is_empty();
        parts.push(format!("{} {} bytes {}", agent.name(), a.len(), if a == b { "identical" } else { "DIFFERENT" }));
    }
    (pass, format!("repeated 60-episode runs: {}", parts.join(", ")))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let (pass, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !pass {
            failed += 1;
        }
        println!("{} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    };

    report("rule-semantics oracle", &oracle);
    report("random-chance calibration", &random_chance);
    report("dominance", &dominance_check);
    report("feature lengths", &feature_lengths);
    report("gradient check", &gradient_check);
    report("metric unit suite", &metric_suite);
    report("determinism", &determinism);

    let base = preset("base-rules-desk").map_err(|e| e.to_string()).and_then(|c| run_cached(&c));
    report("desk-scale ordering", &|| desk_ordering(&base));
    report("logical equivalence SM/CM", &|| sm_vs_cm(&base));
    let general = preset("generality-desk").map_err(|e| e.to_string()).and_then(|c| run_cached(&c));
    report("desk-scale generality", &|| generality(&general));

    println!("acceptance: {} failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
