//! Exact expectations for the balanced single-covariate example and the
//! regime thresholds for machine and assisted decisions.
//!
//! All thresholds are closed forms. The machine-risk gap
//! `E[r_{f̂₊}(x)] - E[r_{f̂₋}(x)] = A - B·Δμ²` with
//! `A = Σ_g P(g|x) σ²/n(x,g) - σ²/N` and `B = Σ_g P(g|x) (n(x,1-g)/N)²`
//! vanishes at `|Δμ| = ξ = sqrt(A / B)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CellPair, ExampleParams, Group, Prior, ProblemSpec, RuleKind, TrainingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRow {
    pub rule: RuleKind,
    pub expected_disparity: f64,
    pub expected_risk: f64,
}

/// Expected disparities and risks of all five rules in the balanced example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormTable {
    pub inputs: ExampleParams,
    pub rows: Vec<ClosedFormRow>,
}

impl ClosedFormTable {
    pub fn row(&self, rule: RuleKind) -> &ClosedFormRow {
        self.rows.iter().find(|r| r.rule == rule).expect("all rules present")
    }
}

impl fmt::Display for ClosedFormTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.inputs;
        writeln!(
            f,
            "σ²={} τ²={} n={} δ={} Δμ={} β̄={} μ̄={}",
            p.sigma_sq, p.tau_sq, p.n, p.delta, p.delta_mu, p.beta_bar, p.mu_bar
        )?;
        writeln!(f, "{:>6} | {:>12} | {:>12}", "d", "E[Δ_d]", "E[r_d]")?;
        writeln!(f, "{:-<6}-+-{:-<12}-+-{:-<12}", "", "", "")?;
        for (i, row) in self.rows.iter().enumerate() {
            if i == 2 {
                writeln!(f, "{:-<6}-+-{:-<12}-+-{:-<12}", "", "", "")?;
            }
            writeln!(
                f,
                "{:>6} | {:>12.6} | {:>12.6}",
                row.rule.symbol(),
                row.expected_disparity,
                row.expected_risk
            )?;
        }
        Ok(())
    }
}

/// All ten entries of the example table.
pub fn example_closed_forms(params: &ExampleParams) -> Result<ClosedFormTable> {
    params.validate()?;
    let ExampleParams { sigma_sq: s2, tau_sq: t2, n, delta, delta_mu, beta_bar, mu_bar } = *params;
    let n = n as f64;
    let h = s2 + n / 2.0 * t2;
    let mean_bias_sq = (mu_bar - beta_bar).powi(2);
    let gap_bias_sq = (delta_mu - delta).powi(2) / 4.0;
    let s4 = s2 * s2;
    let t4 = t2 * t2;
    let row = |rule, expected_disparity, expected_risk| ClosedFormRow { rule, expected_disparity, expected_risk };
    Ok(ClosedFormTable {
        inputs: *params,
        rows: vec![
            row(RuleKind::FMinus, 0.0, delta_mu * delta_mu / 4.0 + s2 * (1.0 + 1.0 / n)),
            row(RuleKind::FPlus, delta_mu, s2 * (1.0 + 2.0 / n)),
            row(RuleKind::D0, delta, mean_bias_sq + gap_bias_sq + s2),
            row(
                RuleKind::DMinus,
                delta,
                s4 * mean_bias_sq / (h * h) + gap_bias_sq + s2 * (1.0 + n * t4 / (4.0 * h * h)),
            ),
            row(
                RuleKind::DPlus,
                (s2 * delta + n / 2.0 * t2 * delta_mu) / h,
                s4 * (mean_bias_sq + gap_bias_sq) / (h * h) + s2 * (1.0 + n * t4 / (2.0 * h * h)),
            ),
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellBiasVariance {
    pub bias: f64,
    pub variance: f64,
}

/// Exact per-group bias `E[d(g)] - mu(g)` and variance of each rule in the
/// balanced example.
pub fn example_bias_variance(params: &ExampleParams, rule: RuleKind) -> Result<CellPair<CellBiasVariance>> {
    params.validate()?;
    let ExampleParams { sigma_sq: s2, tau_sq: t2, n, delta, delta_mu, beta_bar, mu_bar } = *params;
    let n = n as f64;
    let k = n * t2 + 2.0 * s2;
    let shrink = 2.0 * s2 / k;
    Ok(CellPair::from_fn(|g| {
        let sign = if g == Group::One { 0.5 } else { -0.5 };
        let (bias, variance) = match rule {
            RuleKind::FMinus => (-sign * delta_mu, s2 / n),
            RuleKind::FPlus => (0.0, 2.0 * s2 / n),
            RuleKind::D0 => ((beta_bar - mu_bar) + sign * (delta - delta_mu), 0.0),
            RuleKind::DMinus => (
                shrink * (beta_bar - mu_bar) + sign * (delta - delta_mu),
                n * t2 * t2 * s2 / (k * k),
            ),
            RuleKind::DPlus => (
                shrink * (beta_bar - mu_bar) + sign * shrink * (delta - delta_mu),
                2.0 * n * t2 * t2 * s2 / (k * k),
            ),
        };
        CellBiasVariance { bias, variance }
    }))
}

/// Smallest prior gap `δ` at which the aware-assisted decision has strictly
/// lower expected risk than the blind-assisted one:
/// `Δμ + 2τσ / sqrt(nτ² + 4σ²)`.
pub fn delta_threshold_example(sigma_sq: f64, tau_sq: f64, n: f64, delta_mu: f64) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(Error::NonPositiveNoiseVar(sigma_sq));
    }
    if !(tau_sq > 0.0) || !(n > 0.0) {
        return Err(Error::Precondition("tau_sq and n must be positive".into()));
    }
    Ok(delta_mu + 2.0 * (tau_sq * sigma_sq).sqrt() / (n * tau_sq + 4.0 * sigma_sq).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineRisks {
    /// `E[r_{f̂₊}(x)]`.
    pub aware: f64,
    /// `E[r_{f̂₋}(x)]`.
    pub blind: f64,
}

impl MachineRisks {
    /// `E[r_{f̂₊}(x)] - E[r_{f̂₋}(x)]`.
    pub fn gap(&self) -> f64 {
        self.aware - self.blind
    }
}

struct GapCoefficients {
    constant: f64,
    quadratic: f64,
}

fn gap_coefficients(spec: &ProblemSpec, config: &TrainingConfig, x: usize) -> Result<GapCoefficients> {
    spec.validate()?;
    config.validate_for(spec)?;
    spec.check_index(x)?;
    let counts = config.counts[x];
    for g in Group::BOTH {
        if counts.get(g) == 0 {
            return Err(Error::EmptyCell { x, g });
        }
    }
    let s2 = spec.noise_var;
    let total = counts.total() as f64;
    let mut constant = -s2 / total;
    let mut quadratic = 0.0;
    for g in Group::BOTH {
        let p = spec.group_prob(x, g);
        constant += p * s2 / counts.get(g) as f64;
        quadratic += p * (counts.get(g.other()) as f64 / total).powi(2);
    }
    Ok(GapCoefficients { constant, quadratic })
}

/// Exact expected risks of the two machine predictions at `x`.
pub fn machine_risk_expectations(spec: &ProblemSpec, config: &TrainingConfig, x: usize) -> Result<MachineRisks> {
    gap_coefficients(spec, config, x)?;
    let counts = config.counts[x];
    let s2 = spec.noise_var;
    let total = counts.total() as f64;
    let dmu = spec.true_gap(x);
    let mut aware = s2;
    let mut blind = s2 / total + s2;
    for g in Group::BOTH {
        let p = spec.group_prob(x, g);
        aware += p * s2 / counts.get(g) as f64;
        blind += p * (counts.get(g.other()) as f64 / total * dmu).powi(2);
    }
    Ok(MachineRisks { aware, blind })
}

/// The `|Δμ(x)|` at which both machine predictions have equal expected risk.
pub fn xi_threshold_general(spec: &ProblemSpec, config: &TrainingConfig, x: usize) -> Result<f64> {
    let c = gap_coefficients(spec, config, x)?;
    Ok((c.constant / c.quadratic).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// The group-aware prediction is more accurate and more disparate.
    TradeOff,
    /// The group-blind prediction is at least as accurate and less disparate.
    Dominance,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::TradeOff => "TRADE_OFF",
            Regime::Dominance => "DOMINANCE",
        })
    }
}

/// `|Δμ| > ξ` is a trade-off; `|Δμ| <= ξ` is dominance (at equality the
/// risks tie and the blind rule is still less disparate).
pub fn classify(delta_mu: f64, xi: f64) -> Regime {
    if delta_mu.abs() > xi {
        Regime::TradeOff
    } else {
        Regime::Dominance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeResult {
    pub xi: f64,
    pub regime: Regime,
    pub delta_mu: f64,
    pub machine_risks: MachineRisks,
    /// Prior-gap threshold for assistance; present for a balanced design
    /// with a conjugate prior.
    pub delta_threshold: Option<f64>,
    pub counts: CellPair<u64>,
    pub noise_var: f64,
}

impl RegimeResult {
    pub fn evaluate(spec: &ProblemSpec, config: &TrainingConfig, prior: Option<&Prior>, x: usize) -> Result<Self> {
        let xi = xi_threshold_general(spec, config, x)?;
        let machine_risks = machine_risk_expectations(spec, config, x)?;
        let counts = config.counts[x];
        let delta_mu = spec.true_gap(x);
        let delta_threshold = match prior {
            Some(Prior::ConjugateNormal(p)) if counts.g1 == counts.g0 => Some(delta_threshold_example(
                spec.noise_var,
                p.tau_sq,
                counts.total() as f64,
                delta_mu,
            )?),
            _ => None,
        };
        Ok(RegimeResult {
            xi,
            regime: classify(delta_mu, xi),
            delta_mu,
            machine_risks,
            delta_threshold,
            counts,
            noise_var: spec.noise_var,
        })
    }
}

impl fmt::Display for RegimeResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "σ²={} n(x,1)={} n(x,0)={} Δμ={}",
            self.noise_var, self.counts.g1, self.counts.g0, self.delta_mu
        )?;
        writeln!(f, "ξ = {:.6}  regime = {}", self.xi, self.regime)?;
        writeln!(
            f,
            "E[r_f̂₊] = {:.6}  E[r_f̂₋] = {:.6}",
            self.machine_risks.aware, self.machine_risks.blind
        )?;
        if let Some(t) = self.delta_threshold {
            writeln!(f, "δ threshold = {t:.6}")?;
        }
        Ok(())
    }
}
