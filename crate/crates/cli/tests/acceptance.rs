//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use assistfair::decisions::{
    blind_conjugate_pair, decide_assisted_aware_conjugate, grid_blind_pair, grid_posterior_aware,
};
use assistfair::mc::replicate_rules;
use assistfair::metrics::disparity;
use assistfair::model::{ExampleParams, GridCell, WeightedValue};
use assistfair::oracle::{delta_threshold_example, example_closed_forms, xi_threshold_general, Regime};
use assistfair::rng::substream_rng;
use assistfair::verify::{verify_consistency, verify_example_tradeoff, verify_machine_regimes};
use assistfair::{CellPair, ConjugateNormalPrior, GridPrior, Group, ProblemSpec, RuleKind, TrainingConfig};
use rand::Rng;
use serde_json::Value;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cli(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_assistfair"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("ASSISTFAIR_THREADS", n.to_string()),
        None => cmd.env_remove("ASSISTFAIR_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn example(delta_mu: f64, delta: f64, n: u64) -> ExampleParams {
    ExampleParams { sigma_sq: 1.0, tau_sq: 1.0, n, delta, delta_mu, beta_bar: 0.0, mu_bar: 0.0 }
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn standard_example_reproduction(tmp: &Path) -> Verdict {
    let out = tmp.join("c1");
    let start = Instant::now();
    let run = cli(
        &["simulate", "--config", configs().join("standard_example.json").to_str().unwrap(), "--reps", "200000", "--out", out.to_str().unwrap()],
        Some(1),
    );
    let secs = start.elapsed().as_secs_f64();
    check(run.status.success(), format!("simulate exited {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr)))?;
    check(secs <= 60.0, format!("runtime {secs:.1}s exceeds 60s"))?;
    let json = read_json(&out.join("metrics.json"))?;
    let published_disparity = [0.0, 0.0, 1.0, 1.0, 0.2];
    let published_risk = [1.125, 1.25, 1.25, 1.33, 1.17];
    let order = [RuleKind::FMinus, RuleKind::FPlus, RuleKind::D0, RuleKind::DMinus, RuleKind::DPlus];
    let table = example_closed_forms(&example(0.0, 1.0, 8)).map_err(|e| e.to_string())?;
    let mut worst_z: f64 = 0.0;
    let mut worst_se: f64 = 0.0;
    for (i, kind) in order.iter().enumerate() {
        let m = json["report"]["rules"]
            .as_array()
            .and_then(|rs| rs.iter().find(|r| r["rule"] == kind.as_str()))
            .ok_or(format!("{kind} missing from metrics.json"))?;
        let row = table.row(*kind);
        check((row.expected_disparity - published_disparity[i]).abs() < 1e-12, format!("{kind} closed-form disparity"))?;
        check((row.expected_risk - published_risk[i]).abs() < 1e-12, format!("{kind} closed-form risk"))?;
        for (field, target) in [("avg_disparity", published_disparity[i]), ("expected_risk", published_risk[i])] {
            let mean = m[field]["mean"].as_f64().ok_or("mean")?;
            let se = m[field]["se"].as_f64().ok_or(format!("{kind} {field}: SE unavailable"))?;
            check(se < 0.01, format!("{kind} {field}: SE {se} >= 0.01"))?;
            let diff = (mean - target).abs();
            check(diff <= 3.0 * se + 1e-12, format!("{kind} {field}: {mean} vs {target} (se {se})"))?;
            worst_se = worst_se.max(se);
            if se > 0.0 {
                worst_z = worst_z.max(diff / se);
            }
        }
    }
    Ok(format!("10/10 within 3 SE (max z {worst_z:.2}, max SE {worst_se:.4}), {secs:.1}s on one thread"))
}

fn exact_invariants() -> Verdict {
    let s = example(0.0, 1.0, 8).scenario(1).map_err(|e| e.to_string())?;
    let reps = 10_000;
    let draws = replicate_rules(&s.spec, &s.prior, &s.training, &[RuleKind::FMinus, RuleKind::D0, RuleKind::DMinus], reps)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (rep, rules) in draws.iter().enumerate() {
        let f = disparity(&rules[0], 0).unwrap();
        check(f == 0.0, format!("replication {rep}: Δ_f̂₋ = {f}"))?;
        for r in &rules[1..] {
            let d = disparity(r, 0).unwrap();
            worst = worst.max((d - 1.0).abs());
            check((d - 1.0).abs() <= 1e-12, format!("replication {rep}: Δ_{} = {d}", r.kind))?;
        }
    }
    Ok(format!("{reps} replications, max |Δ - δ| = {worst:.1e}"))
}

fn conjugate_grid_equivalence() -> Verdict {
    let mut rng = substream_rng(31, 0, 0);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let tau_sq = rng.random_range(0.25..4.0);
        let sigma_sq = rng.random_range(0.25..4.0);
        let n1: u64 = rng.random_range(1..=50);
        let n0: u64 = rng.random_range(1..=50);
        let beta = CellPair::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let z: f64 = rng.random_range(-2.0..2.0);
        let conj = ConjugateNormalPrior { beta: vec![beta], tau_sq };
        let grid = GridPrior::discretize(&conj, 8.0, 2001);
        let f = beta.g1 + z * (tau_sq + sigma_sq / n1 as f64).sqrt();
        let exact = decide_assisted_aware_conjugate(&conj, f, n1, sigma_sq, 0, Group::One).unwrap();
        let approx = grid_posterior_aware(&grid, f, n1, sigma_sq, 0, Group::One).unwrap();
        worst = worst.max((exact - approx).abs());
        check((exact - approx).abs() < 1e-6, format!("tuple {i}: d̂₊ {exact} vs {approx}"))?;
        let counts = CellPair::new(n1, n0);
        let exact = blind_conjugate_pair(&conj, f, counts, sigma_sq, 0).unwrap();
        let approx = grid_blind_pair(&grid, f, counts, sigma_sq, 0).unwrap();
        for g in Group::BOTH {
            worst = worst.max((exact.get(g) - approx.get(g)).abs());
            check((exact.get(g) - approx.get(g)).abs() < 1e-6, format!("tuple {i}: d̂₋ {exact:?} vs {approx:?}"))?;
        }
    }
    Ok(format!("20 tuples, max deviation {worst:.1e}"))
}

fn write_config(tmp: &Path, base: &str, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v = read_json(&configs().join(base)).unwrap();
    edit(&mut v);
    let path = tmp.join(name);
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn verify_fraction(tmp: &Path, claim: &str, config: &Path, tag: &str) -> Result<(Option<i32>, f64), String> {
    let out = tmp.join(tag);
    let run = cli(&["verify", claim, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    let json = read_json(&out.join(format!("verify_{claim}.json")))
        .map_err(|e| format!("{e}; stderr: {}", String::from_utf8_lossy(&run.stderr)))?;
    Ok((run.status.code(), json["success_fraction"].as_f64().ok_or("success_fraction")?))
}

fn disparity_reversal(tmp: &Path) -> Verdict {
    let (code, big) = verify_fraction(tmp, "thm1", &configs().join("thm1.json"), "c4a")?;
    check(code == Some(0), format!("exit {code:?}"))?;
    check(big >= 0.95, format!("success_fraction {big} < 0.95"))?;
    let one = write_config(tmp, "thm1.json", "thm1_n1.json", |v| v["counts"] = serde_json::json!([{"g1": 1, "g0": 1}]));
    let (_, small) = verify_fraction(tmp, "thm1", &one, "c4b")?;
    check(small < big, format!("n=1/group fraction {small} not below {big}"))?;
    Ok(format!("n=200/group {big:.3} (exit 0), n=1/group {small:.3}"))
}

fn reordering(tmp: &Path) -> Verdict {
    let (code, f) = verify_fraction(tmp, "cor1", &configs().join("thm1.json"), "c5")?;
    check(code == Some(0) && f >= 0.95, format!("exit {code:?}, success_fraction {f}"))?;
    Ok(format!("success_fraction {f:.3} (exit 0)"))
}

fn tradeoff_reversal(tmp: &Path) -> Verdict {
    let (code, f) = verify_fraction(tmp, "thm2", &configs().join("thm2.json"), "c6")?;
    check(code == Some(0) && f >= 0.95, format!("exit {code:?}, success_fraction {f}"))?;
    Ok(format!("success_fraction {f:.3} (exit 0)"))
}

fn machine_regimes() -> Verdict {
    let config = TrainingConfig::balanced(8, 2718);
    let spec_at = |dmu: f64| ProblemSpec::single_covariate(CellPair::new(dmu / 2.0, -dmu / 2.0), 1.0);
    let xi = xi_threshold_general(&spec_at(0.0), &config, 0).map_err(|e| e.to_string())?;
    check(xi == 0.5, format!("ξ = {xi}"))?;
    let mut detail = vec![];
    for (dmu, regime, risks) in [(0.8, Regime::TradeOff, (1.125, 1.2225)), (0.2, Regime::Dominance, (1.125, 1.0725))] {
        let out = verify_machine_regimes(&spec_at(dmu), &config, 0, 20_000).map_err(|e| e.to_string())?;
        let r = out.regime.as_ref().unwrap();
        check(r.regime == regime, format!("Δμ={dmu}: regime {:?}", r.regime))?;
        check(
            (r.machine_risks.aware - risks.0).abs() < 1e-12 && (r.machine_risks.blind - risks.1).abs() < 1e-12,
            format!("Δμ={dmu}: oracle risks {:?}", r.machine_risks),
        )?;
        for e in &out.estimates {
            check(e.passed, format!("Δμ={dmu}: {} {:?} vs {}", e.name, e.estimate, e.oracle))?;
        }
        detail.push(format!("Δμ={dmu} {regime:?}"));
    }
    Ok(format!("ξ = 0.5; {}", detail.join(", ")))
}

fn delta_threshold() -> Verdict {
    let t = delta_threshold_example(1.0, 1.0, 12.0, 0.0).map_err(|e| e.to_string())?;
    check(t == 0.5, format!("threshold {t}"))?;
    let table = example_closed_forms(&example(0.0, 0.5, 12)).unwrap();
    let gap = table.row(RuleKind::DPlus).expected_risk - table.row(RuleKind::DMinus).expected_risk;
    check(gap.abs() <= 1e-10, format!("oracle gap at δ=0.5: {gap}"))?;
    for (delta, aware_better) in [(0.75, true), (0.25, false)] {
        let s = example(0.0, delta, 12).scenario(161).unwrap();
        let out = verify_example_tradeoff(&s.spec, &s.prior, &s.training, 50_000).map_err(|e| e.to_string())?;
        let e = out.estimates.iter().find(|e| e.name == "assisted_risk_gap_sign").unwrap();
        check((e.estimate.mean < 0.0) == aware_better, format!("δ={delta}: MC gap {}", e.estimate.mean))?;
        for e in out.estimates.iter().filter(|e| e.name.starts_with("expected_risk_d") || e.name == "assisted_risk_gap_sign") {
            check(e.passed, format!("δ={delta}: {} {:?} vs {}", e.name, e.estimate, e.oracle))?;
        }
    }
    Ok(format!("threshold 0.5, |oracle gap| {:.1e} at δ=0.5, signs confirmed at 0.75 and 0.25", gap.abs()))
}

fn consistency() -> Verdict {
    let spec = ProblemSpec::single_covariate(CellPair::new(0.3, 0.0), 1.0);
    let marginal = WeightedValue::discretized_normal(0.0, 1.0, 8.0, 2001);
    let prior = GridPrior { cells: vec![GridCell::Product { mu1: marginal.clone(), mu0: marginal }] };
    let out = verify_consistency(&prior, &spec, 0, Group::One, &[10, 100, 1000], 500, 99, 0.05).map_err(|e| e.to_string())?;
    let rows = out.consistency.as_ref().unwrap();
    let medians: Vec<f64> = rows.iter().map(|r| r.median_abs_error).collect();
    check(medians.windows(2).all(|w| w[1] <= w[0] + 0.02), format!("medians {medians:?}"))?;
    check(medians[2] < 0.05, format!("median at n=1000 is {}", medians[2]))?;
    check(out.success_fraction == 1.0, "verifier did not pass")?;
    Ok(format!("medians {:.4} / {:.4} / {:.4}", medians[0], medians[1], medians[2]))
}

fn collect_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism(tmp: &Path) -> Verdict {
    let cases: [(&str, Vec<&str>, &str); 4] = [
        ("simulate", vec!["simulate", "--reps", "5000"], "standard_example.json"),
        ("verify", vec!["verify", "thm2", "--reps", "300"], "thm2.json"),
        ("sweep", vec!["sweep", "--reps", "2000"], "sweep_delta_mu.json"),
        ("closed-form", vec!["closed-form"], "standard_example.json"),
    ];
    let mut compared = 0;
    for (name, args, config) in cases {
        let mut runs = vec![];
        for (i, threads) in [Some(1), Some(4), Some(4)].into_iter().enumerate() {
            let out = tmp.join(format!("c10_{name}_{i}"));
            let cfg = configs().join(config);
            let mut full = args.clone();
            full.extend(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            let run = cli(&full, threads);
            check(run.status.code() != Some(2), format!("{name}: {}", String::from_utf8_lossy(&run.stderr)))?;
            runs.push((collect_outputs(&out), run.stdout));
        }
        check(!runs[0].0.is_empty(), format!("{name}: no output files"))?;
        for r in &runs[1..] {
            check(r.0 == runs[0].0, format!("{name}: output files differ across runs"))?;
            check(r.1 == runs[0].1, format!("{name}: stdout differs across runs"))?;
        }
        compared += runs[0].0.len();
    }
    Ok(format!("{compared} files byte-identical across 1, 4, 4 worker threads"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let tmp = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("standard example reproduction", Box::new(|| standard_example_reproduction(tmp))),
        ("exact invariants", Box::new(exact_invariants)),
        ("conjugate-grid equivalence", Box::new(conjugate_grid_equivalence)),
        ("disparity reversal (thm1)", Box::new(|| disparity_reversal(tmp))),
        ("disparity reordering (cor1)", Box::new(|| reordering(tmp))),
        ("trade-off reversal (thm2)", Box::new(|| tradeoff_reversal(tmp))),
        ("machine regimes", Box::new(machine_regimes)),
        ("assistance threshold", Box::new(delta_threshold)),
        ("posterior consistency", Box::new(consistency)),
        ("determinism", Box::new(|| determinism(tmp))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
