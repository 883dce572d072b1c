use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use assistfair::metrics::{mc_expected_metrics, Estimate, MetricsReport};
use assistfair::model::{DerivedExampleParams, ExampleParams};
use assistfair::oracle::{delta_threshold_example, example_closed_forms, ClosedFormTable};
use assistfair::verify::{
    verify_consistency, verify_disparity_reversal, verify_example_reversal, verify_example_tradeoff,
    verify_machine_regimes, verify_reordering, verify_tradeoff_reversal, ClaimId, VerificationOutcome,
};
use assistfair::{Prior, RuleKind};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::exit::CliError;

pub enum Status {
    Success,
    ClaimFailed,
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(CliError::usage)
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::failure)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Monte Carlo estimate set against its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub rule: RuleKind,
    pub quantity: String,
    pub oracle: f64,
    pub estimate: Estimate,
    pub z: Option<f64>,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub report: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_forms: Option<ClosedFormTable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub oracle_comparison: Vec<OracleComparison>,
}

/// Closed forms apply only when the config is the balanced example.
pub fn example_table(config: &ExperimentConfig) -> Option<ClosedFormTable> {
    let params = DerivedExampleParams::derive_full(&config.spec, config.prior(), &config.training()).ok()?;
    example_closed_forms(&params).ok()
}

pub fn compare(report: &MetricsReport, table: &ClosedFormTable) -> Vec<OracleComparison> {
    let mut out = Vec::new();
    for m in &report.rules {
        let row = table.row(m.rule);
        for (quantity, estimate, oracle) in [
            ("avg_disparity", m.avg_disparity, row.expected_disparity),
            ("expected_risk", m.expected_risk, row.expected_risk),
        ] {
            out.push(OracleComparison {
                rule: m.rule,
                quantity: quantity.into(),
                oracle,
                estimate,
                z: estimate.z_score(oracle),
                within_3se: estimate.within(oracle, 3.0, 1e-12),
            });
        }
    }
    out
}

fn fmt_se(se: Option<f64>) -> String {
    se.map(|s| format!("{s:.6}")).unwrap_or_else(|| "n/a".into())
}

pub fn summary_table(output: &SimulationOutput) -> String {
    let r = &output.report;
    let mut s = String::new();
    let _ = writeln!(s, "reps={} seed={} σ²={}", r.reps, r.seed, r.noise_var);
    let _ = writeln!(s, "{:>5}  {:>10} {:>10}  {:>10} {:>10}", "rule", "E[Δ]", "se", "E[r]", "se");
    for m in &r.rules {
        let _ = writeln!(
            s,
            "{:>5}  {:>10.6} {:>10}  {:>10.6} {:>10}",
            m.rule.symbol(),
            m.avg_disparity.mean,
            fmt_se(m.avg_disparity.se),
            m.expected_risk.mean,
            fmt_se(m.expected_risk.se)
        );
    }
    if !output.oracle_comparison.is_empty() {
        let _ = writeln!(s, "\nclosed-form comparison");
        let _ = writeln!(s, "{:>5}  {:>14} {:>10} {:>10} {:>8}  3 SE", "rule", "quantity", "oracle", "estimate", "z");
        for c in &output.oracle_comparison {
            let _ = writeln!(
                s,
                "{:>5}  {:>14} {:>10.6} {:>10.6} {:>8}  {}",
                c.rule.symbol(),
                c.quantity,
                c.oracle,
                c.estimate.mean,
                c.z.map(|z| format!("{z:.2}")).unwrap_or_else(|| "n/a".into()),
                if c.within_3se { "ok" } else { "outside" }
            );
        }
    }
    s
}

pub fn run_simulation(config: &ExperimentConfig) -> Result<SimulationOutput, CliError> {
    let report = mc_expected_metrics(&config.spec, config.prior(), &config.training(), &config.rules, config.reps)?;
    let closed_forms = example_table(config);
    let oracle_comparison = closed_forms.as_ref().map(|t| compare(&report, t)).unwrap_or_default();
    Ok(SimulationOutput { report, closed_forms, oracle_comparison })
}

pub fn simulate(config: &ExperimentConfig, out: &Path) -> Result<Status, CliError> {
    let output = run_simulation(config)?;
    ensure_dir(out)?;
    let mut csv = Vec::new();
    output.report.write_csv(&mut csv)?;
    write_file(&out.join("metrics.csv"), csv)?;
    write_file(&out.join("metrics.json"), to_json(&output)?)?;
    let summary = summary_table(&output);
    write_file(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(Status::Success)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormOutput {
    pub table: ClosedFormTable,
    /// `2σ/√n`, the `|Δμ|` at which the machine predictions tie.
    pub xi: f64,
    /// Smallest `δ` at which the aware-assisted decision is strictly more
    /// accurate than the blind-assisted one.
    pub delta_threshold: f64,
}

pub fn closed_form(params: &ExampleParams, out: Option<&Path>) -> Result<Status, CliError> {
    let table = example_closed_forms(params)?;
    let xi = 2.0 * params.sigma_sq.sqrt() / (params.n as f64).sqrt();
    let delta_threshold = delta_threshold_example(params.sigma_sq, params.tau_sq, params.n as f64, params.delta_mu)?;
    let output = ClosedFormOutput { table, xi, delta_threshold };
    let text = format!("{}ξ = {xi}\nδ* = {delta_threshold}\n", output.table);
    print!("{text}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_file(&dir.join("closed_form.json"), to_json(&output)?)?;
        write_file(&dir.join("closed_form.txt"), text)?;
    }
    Ok(Status::Success)
}

pub fn run_verification(claim: ClaimId, config: &ExperimentConfig) -> Result<VerificationOutcome, CliError> {
    let (spec, prior, training, reps) = (&config.spec, config.prior(), config.training(), config.reps);
    let outcome = match claim {
        ClaimId::Remark1 => verify_example_reversal(spec, prior, &training, reps)?,
        ClaimId::Remark2 => verify_example_tradeoff(spec, prior, &training, reps)?,
        ClaimId::Remark3 => verify_machine_regimes(spec, &training, config.covariate_index()?, reps)?,
        ClaimId::Thm1 => verify_disparity_reversal(spec, prior, &training, reps)?,
        ClaimId::Cor1 => verify_reordering(spec, prior, &training, reps)?,
        ClaimId::Thm2 => verify_tradeoff_reversal(spec, prior, &training, reps, config.zeta)?,
        ClaimId::Consistency => {
            let Prior::Grid(grid) = prior else {
                return Err(CliError::usage(anyhow!("the consistency check requires a grid prior")));
            };
            let c = &config.consistency;
            verify_consistency(grid, spec, config.covariate_index()?, c.group, &c.n_grid, reps, config.seed, c.bound)?
        }
    };
    Ok(outcome)
}

pub fn verify(claim: ClaimId, config: &ExperimentConfig, out: &Path) -> Result<Status, CliError> {
    let outcome = run_verification(claim, config)?;
    ensure_dir(out)?;
    write_file(&out.join(format!("verify_{}.json", claim.as_str())), to_json(&outcome)?)?;
    println!("{}", outcome.summary_line(config.level));
    for c in &outcome.checks {
        println!("  {:<44} {:.4}", c.name, c.fraction);
    }
    for e in &outcome.estimates {
        println!(
            "  {:<44} {:.6} (se {}) vs {:.6} {}",
            e.name,
            e.estimate.mean,
            fmt_se(e.estimate.se),
            e.oracle,
            if e.passed { "ok" } else { "FAILED" }
        );
    }
    if let Some(r) = &outcome.regime {
        println!(
            "  regime {:?}: Δμ={} ξ={} E[r_f̂₊]={} E[r_f̂₋]={}",
            r.regime, r.delta_mu, r.xi, r.machine_risks.aware, r.machine_risks.blind
        );
    }
    if let Some(rows) = &outcome.consistency {
        println!("  {:>8} {:>12} {:>12}", "n", "median |err|", "mean |err|");
        for row in rows {
            println!("  {:>8} {:>12.6} {:>12.6}", row.n, row.median_abs_error, row.mean_abs_error);
        }
    }
    for note in &outcome.notes {
        println!("  note: {note}");
    }
    Ok(if outcome.passes(config.level) { Status::Success } else { Status::ClaimFailed })
}

/// Output directory: flag, then config, then `assistfair-out`.
pub fn out_dir(flag: Option<PathBuf>, config: Option<&ExperimentConfig>) -> PathBuf {
    flag.or_else(|| config.and_then(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("assistfair-out"))
}
