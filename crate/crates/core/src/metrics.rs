//! Disparity and risk functionals of decision rules, for a single realized
//! rule and in expectation over training draws.
//!
//! Risks include the irreducible `sigma^2`; [`RuleMetrics::excess_risk`]
//! reports `r - sigma^2`. Expectations over `(X, G)` use the exact
//! probabilities of the [`ProblemSpec`]; only the training data is
//! simulated.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::replicate_rules;
use crate::model::{CellPair, Covariate, DecisionRule, Group, Prior, ProblemSpec, RuleKind, TrainingConfig};
use crate::numeric::{self, RunningStats};

/// `d(x,1) - d(x,0)`.
pub fn disparity(rule: &DecisionRule, x: usize) -> Result<f64> {
    Ok(rule.value(x, Group::One)? - rule.value(x, Group::Zero)?)
}

/// `E_X[Delta_d(X)]`.
pub fn avg_disparity(rule: &DecisionRule, spec: &ProblemSpec) -> Result<f64> {
    let terms = (0..spec.num_covariates())
        .map(|x| Ok(spec.covariate_probs[x] * disparity(rule, x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(numeric::sum(terms))
}

/// `r⁰(x,g) = (d - mu(x,g))^2 + sigma^2` for a decision value at one cell.
pub fn pointwise_risk(rule_value: f64, spec: &ProblemSpec, x: usize, g: Group) -> Result<f64> {
    spec.check_index(x)?;
    let err = rule_value - spec.mean(x, g);
    Ok(err * err + spec.noise_var)
}

/// `r(x) = P(G=1|x) r⁰(x,1) + P(G=0|x) r⁰(x,0)`.
pub fn risk_at_x(rule: &DecisionRule, spec: &ProblemSpec, x: usize) -> Result<f64> {
    let mut total = 0.0;
    for g in Group::BOTH {
        total += spec.group_prob(x, g) * pointwise_risk(rule.value(x, g)?, spec, x, g)?;
    }
    Ok(total)
}

/// `r̄ = E_X[r(X)]`.
pub fn expected_risk(rule: &DecisionRule, spec: &ProblemSpec) -> Result<f64> {
    let terms = (0..spec.num_covariates())
        .map(|x| Ok(spec.covariate_probs[x] * risk_at_x(rule, spec, x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(numeric::sum(terms))
}

/// Monte Carlo mean with its standard error (`None` with one replication).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: Option<f64>,
    pub reps: usize,
}

impl Estimate {
    pub fn from_stats(stats: &RunningStats) -> Self {
        Estimate { mean: stats.mean(), se: stats.standard_error(), reps: stats.count() }
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        Self::from_stats(&values.into_iter().collect())
    }

    /// Absolute deviation from `target` in standard errors. An exact match
    /// with zero standard error gives 0.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        let diff = (self.mean - target).abs();
        let se = self.se?;
        Some(if diff == 0.0 { 0.0 } else { diff / se })
    }

    /// `|mean - target| <= k * se + abs_floor`; the floor absorbs
    /// round-off for quantities whose standard error is exactly zero.
    pub fn within(&self, target: f64, k: f64, abs_floor: f64) -> bool {
        match self.se {
            Some(se) => (self.mean - target).abs() <= k * se + abs_floor,
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasVariance {
    /// `E[d(x,g)] - mu(x,g)` with the standard error of `E[d(x,g)]`.
    pub bias: Estimate,
    /// Sample variance of `d(x,g)` across replications.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMetrics {
    pub rule: RuleKind,
    pub disparity_by_x: Vec<Estimate>,
    pub avg_disparity: Estimate,
    pub risk0_by_cell: Vec<CellPair<Estimate>>,
    pub risk_by_x: Vec<Estimate>,
    pub expected_risk: Estimate,
    pub bias_variance: Vec<CellPair<BiasVariance>>,
}

impl RuleMetrics {
    /// Expected risk net of the noise floor.
    pub fn excess_risk(&self, noise_var: f64) -> Estimate {
        Estimate { mean: self.expected_risk.mean - noise_var, ..self.expected_risk }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub covariates: Vec<Covariate>,
    pub noise_var: f64,
    pub reps: usize,
    pub seed: u64,
    pub rules: Vec<RuleMetrics>,
}

impl MetricsReport {
    pub fn rule(&self, kind: RuleKind) -> Option<&RuleMetrics> {
        self.rules.iter().find(|r| r.rule == kind)
    }

    /// CSV rows `rule,x,quantity,value,se,reps,seed`. Covariate-averaged
    /// quantities use `x = all`; unavailable standard errors are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rule", "x", "quantity", "value", "se", "reps", "seed"])?;
        let reps = self.reps.to_string();
        let seed = self.seed.to_string();
        let mut row = |rule: RuleKind, x: &str, quantity: &str, value: f64, se: Option<f64>| {
            w.write_record([
                rule.as_str(),
                x,
                quantity,
                &value.to_string(),
                &se.map(|s| s.to_string()).unwrap_or_default(),
                &reps,
                &seed,
            ])
        };
        for m in &self.rules {
            for (x, id) in self.covariates.iter().enumerate() {
                let x_id = id.0.as_str();
                let d = m.disparity_by_x[x];
                row(m.rule, x_id, "disparity", d.mean, d.se)?;
                let r = m.risk_by_x[x];
                row(m.rule, x_id, "risk_x", r.mean, r.se)?;
                for g in Group::BOTH {
                    let r0 = m.risk0_by_cell[x].get(g);
                    row(m.rule, x_id, &format!("risk0_g{g}"), r0.mean, r0.se)?;
                }
                for g in Group::BOTH {
                    let bv = m.bias_variance[x].get(g);
                    row(m.rule, x_id, &format!("bias_g{g}"), bv.bias.mean, bv.bias.se)?;
                    if let Some(v) = bv.variance {
                        row(m.rule, x_id, &format!("variance_g{g}"), v, None)?;
                    }
                }
            }
            row(m.rule, "all", "avg_disparity", m.avg_disparity.mean, m.avg_disparity.se)?;
            row(m.rule, "all", "expected_risk", m.expected_risk.mean, m.expected_risk.se)?;
            let ex = m.excess_risk(self.noise_var);
            row(m.rule, "all", "excess_risk", ex.mean, ex.se)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rule_metrics(spec: &ProblemSpec, kind: RuleKind, draws: &[&DecisionRule]) -> Result<RuleMetrics> {
    let k = spec.num_covariates();
    let mut disparity_by_x = vec![RunningStats::new(); k];
    let mut risk_by_x = vec![RunningStats::new(); k];
    let mut risk0 = vec![CellPair::splat(RunningStats::new()); k];
    let mut values = vec![CellPair::splat(RunningStats::new()); k];
    let mut avg_disp = RunningStats::new();
    let mut exp_risk = RunningStats::new();
    for rule in draws {
        for x in 0..k {
            disparity_by_x[x].push(disparity(rule, x)?);
            risk_by_x[x].push(risk_at_x(rule, spec, x)?);
            for g in Group::BOTH {
                let v = rule.value(x, g)?;
                values[x].get_mut(g).push(v);
                risk0[x].get_mut(g).push(pointwise_risk(v, spec, x, g)?);
            }
        }
        avg_disp.push(avg_disparity(rule, spec)?);
        exp_risk.push(expected_risk(rule, spec)?);
    }
    let est = |s: &RunningStats| Estimate::from_stats(s);
    Ok(RuleMetrics {
        rule: kind,
        disparity_by_x: disparity_by_x.iter().map(est).collect(),
        avg_disparity: est(&avg_disp),
        risk0_by_cell: risk0.iter().map(|c| CellPair::new(est(&c.g1), est(&c.g0))).collect(),
        risk_by_x: risk_by_x.iter().map(est).collect(),
        expected_risk: est(&exp_risk),
        bias_variance: values
            .iter()
            .enumerate()
            .map(|(x, c)| {
                CellPair::from_fn(|g| {
                    let s = &c.get(g);
                    let mut bias = est(s);
                    bias.mean -= spec.mean(x, g);
                    BiasVariance { bias, variance: s.sample_variance() }
                })
            })
            .collect(),
    })
}

/// Expected disparities and risks over `reps` seeded training draws.
///
/// A single replication is accepted and yields estimates without standard
/// errors.
pub fn mc_expected_metrics(
    spec: &ProblemSpec,
    prior: &Prior,
    config: &TrainingConfig,
    kinds: &[RuleKind],
    reps: usize,
) -> Result<MetricsReport> {
    if reps == 0 {
        return Err(Error::TooFewReplications { min: 1, got: 0 });
    }
    let draws = replicate_rules(spec, prior, config, kinds, reps)?;
    let rules = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let column: Vec<&DecisionRule> = draws.iter().map(|d| &d[i]).collect();
            rule_metrics(spec, kind, &column)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        covariates: spec.covariates.clone(),
        noise_var: spec.noise_var,
        reps,
        seed: config.seed,
        rules,
    })
}

/// Per-cell Monte Carlo bias and variance of one rule.
pub fn bias_variance_decomp(
    spec: &ProblemSpec,
    prior: &Prior,
    config: &TrainingConfig,
    kind: RuleKind,
    reps: usize,
) -> Result<Vec<CellPair<BiasVariance>>> {
    if reps < 2 {
        return Err(Error::TooFewReplications { min: 2, got: reps });
    }
    let report = mc_expected_metrics(spec, prior, config, &[kind], reps)?;
    Ok(report.rules.into_iter().next().unwrap().bias_variance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ProblemSpec {
        ProblemSpec::single_covariate(CellPair::new(1.0, 0.0), 1.0)
    }

    #[test]
    fn disparity_sign_convention() {
        let r = DecisionRule::new(RuleKind::DPlus, vec![CellPair::new(1.3, 0.3)]);
        assert!((disparity(&r, 0).unwrap() - 1.0).abs() < 1e-15);
        let r = DecisionRule::new(RuleKind::DPlus, vec![CellPair::new(0.3, 1.3)]);
        assert!((disparity(&r, 0).unwrap() + 1.0).abs() < 1e-15);
        let blind = DecisionRule::group_blind(RuleKind::FMinus, [0.123]);
        assert_eq!(disparity(&blind, 0).unwrap(), 0.0);
        assert!(disparity(&blind, 1).is_err());
    }

    #[test]
    fn average_disparity() {
        let mut s = spec();
        s.covariates.push("b".into());
        s.group_probs.push(0.5);
        s.true_means.push(CellPair::splat(0.0));
        s.covariate_probs = vec![0.5, 0.5];
        let r = DecisionRule::new(RuleKind::D0, vec![CellPair::new(1.0, 0.0), CellPair::new(0.0, 1.0)]);
        assert_eq!(avg_disparity(&r, &s).unwrap(), 0.0);
        s.covariate_probs = vec![0.25, 0.75];
        let r = DecisionRule::new(RuleKind::D0, vec![CellPair::new(0.4, 0.0), CellPair::new(0.8, 0.0)]);
        assert!((avg_disparity(&r, &s).unwrap() - 0.7).abs() < 1e-15);
        let single = DecisionRule::new(RuleKind::D0, vec![CellPair::new(0.4, 0.1)]);
        assert_eq!(avg_disparity(&single, &spec()).unwrap(), disparity(&single, 0).unwrap());
    }

    #[test]
    fn pointwise_risk_examples() {
        let s = spec();
        assert!((pointwise_risk(0.8, &s, 0, Group::One).unwrap() - 1.04).abs() < 1e-15);
        assert_eq!(pointwise_risk(0.0, &s, 0, Group::Zero).unwrap(), 1.0);
        let mut half = s.clone();
        half.noise_var = 0.5;
        assert_eq!(pointwise_risk(3.0, &half, 0, Group::One).unwrap(), 4.5);
        assert!(pointwise_risk(0.0, &s, 2, Group::One).is_err());
    }

    #[test]
    fn risk_at_x_examples() {
        // Decisions chosen so that r0 = (1.2, 0.8) with sigma^2 = 0.8.
        let mut s = spec();
        s.noise_var = 0.8;
        let r = DecisionRule::new(RuleKind::D0, vec![CellPair::new(1.0 + 0.4f64.sqrt(), 0.0)]);
        assert!((risk_at_x(&r, &s, 0).unwrap() - 1.0).abs() < 1e-14);
        s.group_probs[0] = 1.0;
        assert!((risk_at_x(&r, &s, 0).unwrap() - 1.2).abs() < 1e-14);
        // P(G=1)=0.25 with r0 = (2, 1) at sigma^2 = 1.
        let mut s = spec();
        s.group_probs[0] = 0.25;
        let r = DecisionRule::new(RuleKind::D0, vec![CellPair::new(2.0, 0.0)]);
        assert!((risk_at_x(&r, &s, 0).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn unassisted_rule_has_zero_standard_error() {
        let sc = crate::model::ExampleParams {
            sigma_sq: 1.0,
            tau_sq: 1.0,
            n: 8,
            delta: 1.0,
            delta_mu: 0.0,
            beta_bar: 0.0,
            mu_bar: 0.0,
        }
        .scenario(1)
        .unwrap();
        let report = mc_expected_metrics(&sc.spec, &sc.prior, &sc.training, &[RuleKind::D0], 50).unwrap();
        let d0 = report.rule(RuleKind::D0).unwrap();
        assert_eq!(d0.disparity_by_x[0].mean, 1.0);
        assert_eq!(d0.disparity_by_x[0].se, Some(0.0));
        assert_eq!(d0.bias_variance[0].g1.variance, Some(0.0));
        assert_eq!(d0.bias_variance[0].g1.bias.mean, 0.5);
    }

    #[test]
    fn single_replication_has_no_se() {
        let sc = crate::model::ExampleParams {
            sigma_sq: 1.0,
            tau_sq: 1.0,
            n: 8,
            delta: 1.0,
            delta_mu: 0.0,
            beta_bar: 0.0,
            mu_bar: 0.0,
        }
        .scenario(1)
        .unwrap();
        let report = mc_expected_metrics(&sc.spec, &sc.prior, &sc.training, &RuleKind::ALL, 1).unwrap();
        assert!(report.rules.iter().all(|r| r.expected_risk.se.is_none()));
        assert!(mc_expected_metrics(&sc.spec, &sc.prior, &sc.training, &RuleKind::ALL, 0).is_err());
        assert!(bias_variance_decomp(&sc.spec, &sc.prior, &sc.training, RuleKind::DPlus, 1).is_err());
    }

    #[test]
    fn empty_cell_error_names_replication() {
        let spec = spec();
        let prior = Prior::ConjugateNormal(crate::model::ConjugateNormalPrior {
            beta: vec![CellPair::splat(0.0)],
            tau_sq: 1.0,
        });
        let cfg = TrainingConfig { counts: vec![CellPair::new(3, 0)], seed: 0 };
        let err = mc_expected_metrics(&spec, &prior, &cfg, &[RuleKind::FPlus], 4).unwrap_err();
        assert!(matches!(err, Error::Replication { index: 0, .. }), "{err}");
    }
}
