//! Experiment configuration: one flat JSON document holding the problem,
//! the training design, the decision-maker's prior and run parameters.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use assistfair::model::Scenario;
use assistfair::{CellPair, Covariate, Group, Prior, ProblemSpec, RuleKind, TrainingConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exit::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub spec: ProblemSpec,
    pub counts: Vec<CellPair<u64>>,
    pub seed: u64,
    /// Inline prior object, or a path (relative to the config file) to a
    /// JSON file holding one.
    pub prior: PriorSource,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_rules")]
    pub rules: Vec<RuleKind>,
    /// Minimum success fraction for `verify` to exit 0.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Covariate examined by single-covariate claims; the first by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Covariate>,
    /// Balance margin for the trade-off reversal claim.
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default)]
    pub consistency: ConsistencySettings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_reps() -> usize {
    1000
}

fn default_rules() -> Vec<RuleKind> {
    RuleKind::ALL.to_vec()
}

fn default_level() -> f64 {
    0.95
}

fn default_zeta() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySettings {
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<u64>,
    #[serde(default = "default_group")]
    pub group: Group,
    #[serde(default = "default_bound")]
    pub bound: f64,
}

fn default_n_grid() -> Vec<u64> {
    vec![10, 100, 1000]
}

fn default_group() -> Group {
    Group::One
}

fn default_bound() -> f64 {
    0.05
}

impl Default for ConsistencySettings {
    fn default() -> Self {
        ConsistencySettings { n_grid: default_n_grid(), group: default_group(), bound: default_bound() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorSource {
    Inline(Prior),
    File { path: PathBuf, prior: Prior },
}

impl PriorSource {
    pub fn prior(&self) -> &Prior {
        match self {
            PriorSource::Inline(p) | PriorSource::File { prior: p, .. } => p,
        }
    }

    pub fn prior_mut(&mut self) -> &mut Prior {
        match self {
            PriorSource::Inline(p) | PriorSource::File { prior: p, .. } => p,
        }
    }
}

/// File references deserialize with an empty placeholder prior that
/// [`ExperimentConfig::load`] fills in.
impl<'de> Deserialize<'de> for PriorSource {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::String(path) => Ok(PriorSource::File {
                path: path.into(),
                prior: Prior::Grid(assistfair::GridPrior { cells: vec![] }),
            }),
            other => Prior::deserialize(other).map(PriorSource::Inline).map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for PriorSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PriorSource::Inline(p) => p.serialize(serializer),
            PriorSource::File { path, .. } => path.serialize(serializer),
        }
    }
}

/// Scalar parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Total training size of a single-covariate balanced design.
    N,
    /// Per-cell count at every covariate.
    NPerGroup,
    /// True gap `mu(x,1) - mu(x,0)`, keeping the midpoint.
    DeltaMu,
    /// True midpoint, keeping the gap.
    MuBar,
    /// Prior mean gap, keeping the midpoint.
    Delta,
    /// Prior mean midpoint, keeping the gap.
    BetaBar,
    NoiseVar,
    TauSq,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::NPerGroup => "n_per_group",
            SweepParam::DeltaMu => "delta_mu",
            SweepParam::MuBar => "mu_bar",
            SweepParam::Delta => "delta",
            SweepParam::BetaBar => "beta_bar",
            SweepParam::NoiseVar => "noise_var",
            SweepParam::TauSq => "tau_sq",
        }
    }

    /// Axis label for figures.
    pub fn symbol(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::NPerGroup => "n(x,g)",
            SweepParam::DeltaMu => "Δμ",
            SweepParam::MuBar => "μ̄",
            SweepParam::Delta => "δ",
            SweepParam::BetaBar => "β̄",
            SweepParam::NoiseVar => "σ²",
            SweepParam::TauSq => "τ²",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    /// Number of evenly spaced points, endpoints included.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<AxisRange>,
}

impl SweepAxis {
    pub fn points(&self) -> anyhow::Result<Vec<f64>> {
        let name = self.param.as_str();
        let points = match (&self.values[..], self.range) {
            ([], None) => bail!("sweep axis {name} needs `values` or `range`"),
            ([_, ..], Some(_)) => bail!("sweep axis {name} has both `values` and `range`"),
            (values, None) => values.to_vec(),
            ([], Some(r)) => {
                if r.steps == 0 {
                    bail!("sweep axis {name}: range.steps must be positive");
                }
                if r.steps == 1 {
                    vec![r.start]
                } else {
                    let last = (r.steps - 1) as f64;
                    (0..r.steps).map(|i| r.start + (r.stop - r.start) * i as f64 / last).collect()
                }
            }
        };
        if let Some(v) = points.iter().find(|v| !v.is_finite()) {
            bail!("sweep axis {name}: non-finite value {v}");
        }
        Ok(points)
    }
}

impl ExperimentConfig {
    /// Reads, resolves the prior reference and validates a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(CliError::usage)?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .map_err(CliError::usage)?;
        if let PriorSource::File { path: rel, prior } = &mut config.prior {
            let full = path.parent().unwrap_or(Path::new(".")).join(&*rel);
            let text = fs::read_to_string(&full)
                .with_context(|| format!("reading prior {}", full.display()))
                .map_err(CliError::usage)?;
            *prior = serde_json::from_str(&text)
                .with_context(|| format!("parsing prior {}", full.display()))
                .map_err(CliError::usage)?;
        }
        Ok(config)
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario().validate().map_err(CliError::usage)?;
        if self.reps == 0 {
            return Err(CliError::usage(anyhow::anyhow!("reps must be at least 1")));
        }
        if self.rules.is_empty() {
            return Err(CliError::usage(anyhow::anyhow!("rules must not be empty")));
        }
        if !(0.0..=1.0).contains(&self.level) {
            return Err(CliError::usage(anyhow::anyhow!("level must lie in [0, 1] (got {})", self.level)));
        }
        self.covariate_index()?;
        for axis in &self.sweep {
            axis.points().map_err(CliError::usage)?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            spec: self.spec.clone(),
            prior: self.prior().clone(),
            training: TrainingConfig { counts: self.counts.clone(), seed: self.seed },
        }
    }

    pub fn prior(&self) -> &Prior {
        self.prior.prior()
    }

    pub fn training(&self) -> TrainingConfig {
        TrainingConfig { counts: self.counts.clone(), seed: self.seed }
    }

    pub fn covariate_index(&self) -> Result<usize, CliError> {
        match &self.x {
            None => Ok(0),
            Some(id) => self
                .spec
                .index_of(id)
                .ok_or_else(|| CliError::usage(anyhow::anyhow!("x: unknown covariate {id:?}"))),
        }
    }

    /// Config for the balanced example with the given parameters.
    #[cfg(test)]
    pub fn from_example(params: &assistfair::model::ExampleParams, seed: u64) -> assistfair::Result<Self> {
        let s = params.scenario(seed)?;
        Ok(ExperimentConfig {
            spec: s.spec,
            counts: s.training.counts,
            seed,
            prior: PriorSource::Inline(s.prior),
            reps: default_reps(),
            rules: default_rules(),
            level: default_level(),
            x: None,
            zeta: default_zeta(),
            consistency: ConsistencySettings::default(),
            sweep: vec![],
            out: None,
        })
    }

    /// Sets one swept parameter on every covariate.
    pub fn apply(&mut self, param: SweepParam, value: f64) -> anyhow::Result<()> {
        let count = || -> anyhow::Result<u64> {
            if value < 0.0 || value.fract() != 0.0 || value > u64::MAX as f64 {
                bail!("{}: expected a non-negative integer (got {value})", param.as_str());
            }
            Ok(value as u64)
        };
        match param {
            SweepParam::N => {
                let n = count()?;
                if self.counts.len() != 1 || !n.is_multiple_of(2) {
                    bail!("n sweeps need a single covariate and even values (got n={n}); use n_per_group");
                }
                self.counts = vec![CellPair::splat(n / 2)];
            }
            SweepParam::NPerGroup => {
                let n = count()?;
                self.counts.iter_mut().for_each(|c| *c = CellPair::splat(n));
            }
            SweepParam::DeltaMu => {
                for m in &mut self.spec.true_means {
                    *m = centered(m.midpoint(), value);
                }
            }
            SweepParam::MuBar => {
                for m in &mut self.spec.true_means {
                    *m = centered(value, m.gap());
                }
            }
            SweepParam::NoiseVar => self.spec.noise_var = value,
            SweepParam::Delta | SweepParam::BetaBar | SweepParam::TauSq => {
                let Prior::ConjugateNormal(p) = self.prior.prior_mut() else {
                    bail!("sweeping {} requires a conjugate_normal prior", param.as_str());
                };
                match param {
                    SweepParam::TauSq => p.tau_sq = value,
                    SweepParam::Delta => p.beta.iter_mut().for_each(|b| *b = centered(b.midpoint(), value)),
                    _ => p.beta.iter_mut().for_each(|b| *b = centered(value, b.gap())),
                }
            }
        }
        Ok(())
    }
}

fn centered(mid: f64, gap: f64) -> CellPair<f64> {
    CellPair::new(mid + gap / 2.0, mid - gap / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use assistfair::model::ExampleParams;

    fn example() -> ExperimentConfig {
        let p = ExampleParams { sigma_sq: 1.0, tau_sq: 1.0, n: 8, delta: 1.0, delta_mu: 0.0, beta_bar: 0.0, mu_bar: 0.0 };
        ExperimentConfig::from_example(&p, 7).unwrap()
    }

    #[test]
    fn round_trips_through_json() {
        let mut c = example();
        c.sweep = vec![SweepAxis { param: SweepParam::DeltaMu, values: vec![0.1, 0.2], range: None }];
        c.x = Some("x".into());
        let json = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn missing_prior_is_named() {
        let mut v = serde_json::to_value(example()).unwrap();
        v.as_object_mut().unwrap().remove("prior");
        let err = serde_json::from_value::<ExperimentConfig>(v).unwrap_err();
        assert!(err.to_string().contains("prior"), "{err}");
    }

    #[test]
    fn missing_nested_prior_field_is_named() {
        let mut v = serde_json::to_value(example()).unwrap();
        v["prior"].as_object_mut().unwrap().remove("tau_sq");
        let err = serde_json::from_value::<ExperimentConfig>(v).unwrap_err();
        assert!(err.to_string().contains("tau_sq"), "{err}");
    }

    #[test]
    fn range_axis_includes_endpoints() {
        let axis = SweepAxis { param: SweepParam::Delta, values: vec![], range: Some(AxisRange { start: 0.0, stop: 1.0, steps: 5 }) };
        assert_eq!(axis.points().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn apply_keeps_midpoints() {
        let mut c = example();
        c.apply(SweepParam::DeltaMu, 0.4).unwrap();
        c.apply(SweepParam::Delta, 2.0).unwrap();
        assert_eq!(c.spec.true_means[0], CellPair::new(0.2, -0.2));
        let Prior::ConjugateNormal(p) = c.prior() else { panic!() };
        assert_eq!(p.beta[0], CellPair::new(1.0, -1.0));
        assert!(c.apply(SweepParam::N, 7.0).is_err());
        c.apply(SweepParam::N, 32.0).unwrap();
        assert_eq!(c.counts, vec![CellPair::splat(16)]);
    }
}
