//! Domain types for the data-generating process: ground truth, training
//! design, decision-maker beliefs, and realized decision rules.

mod prior;
mod sampling;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric;

pub use prior::{ConjugateNormalPrior, GridCell, GridPoint, GridPrior, Prior, WeightedValue};
pub use sampling::{sample_deployment_group, sample_training, sample_training_replicate};

/// Tolerance for probability vectors and grid weights summing to one.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// Opaque covariate identifier. Integers in JSON are accepted and kept as
/// their decimal string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Covariate(pub String);

impl<'de> Deserialize<'de> for Covariate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Str(s) => Covariate(s),
            Raw::Int(i) => Covariate(i.to_string()),
        })
    }
}

impl From<&str> for Covariate {
    fn from(s: &str) -> Self {
        Covariate(s.to_owned())
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Binary group identity `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Zero,
    One,
}

impl Group {
    /// Group 1 first, matching the `d(x,1) - d(x,0)` sign convention.
    pub const BOTH: [Group; 2] = [Group::One, Group::Zero];

    pub fn other(self) -> Group {
        match self {
            Group::Zero => Group::One,
            Group::One => Group::Zero,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Group::Zero => 0,
            Group::One => 1,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl TryFrom<u8> for Group {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Group::Zero),
            1 => Ok(Group::One),
            other => Err(format!("group must be 0 or 1 (got {other})")),
        }
    }
}

impl Serialize for Group {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.index())
    }
}

impl<'de> Deserialize<'de> for Group {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Group::try_from(u8::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

/// One value per group at a fixed covariate, serialized as `{"g1":..,"g0":..}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellPair<T> {
    pub g1: T,
    pub g0: T,
}

impl<T: Copy> CellPair<T> {
    pub fn new(g1: T, g0: T) -> Self {
        CellPair { g1, g0 }
    }

    pub fn splat(value: T) -> Self {
        CellPair { g1: value, g0: value }
    }

    pub fn get(&self, g: Group) -> T {
        match g {
            Group::One => self.g1,
            Group::Zero => self.g0,
        }
    }

    pub fn get_mut(&mut self, g: Group) -> &mut T {
        match g {
            Group::One => &mut self.g1,
            Group::Zero => &mut self.g0,
        }
    }

    pub fn map<U: Copy>(self, mut f: impl FnMut(T) -> U) -> CellPair<U> {
        CellPair { g1: f(self.g1), g0: f(self.g0) }
    }

    pub fn from_fn(mut f: impl FnMut(Group) -> T) -> Self {
        CellPair { g1: f(Group::One), g0: f(Group::Zero) }
    }
}

impl CellPair<f64> {
    /// `g1 - g0`.
    pub fn gap(&self) -> f64 {
        self.g1 - self.g0
    }

    pub fn midpoint(&self) -> f64 {
        (self.g1 + self.g0) / 2.0
    }
}

impl CellPair<u64> {
    pub fn total(&self) -> u64 {
        self.g1 + self.g0
    }

    /// Training-data group shares `(w1, w0)`; `None` when both cells are empty.
    pub fn shares(&self) -> Option<CellPair<f64>> {
        let total = self.total();
        (total > 0).then(|| self.map(|n| n as f64 / total as f64))
    }
}

/// Ground truth: finite covariate support, group and covariate
/// probabilities, true cell means and the shared noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub covariates: Vec<Covariate>,
    /// `P(G=1 | X=x)` per covariate.
    pub group_probs: Vec<f64>,
    /// `P(X=x)` per covariate.
    pub covariate_probs: Vec<f64>,
    /// `mu(x,g)` per covariate.
    pub true_means: Vec<CellPair<f64>>,
    /// `sigma^2`, known to both the algorithm and the decision-maker.
    pub noise_var: f64,
}

impl ProblemSpec {
    /// Single-covariate spec with `P(G=1) = 1/2`.
    pub fn single_covariate(true_means: CellPair<f64>, noise_var: f64) -> Self {
        ProblemSpec {
            covariates: vec![Covariate::from("x")],
            group_probs: vec![0.5],
            covariate_probs: vec![1.0],
            true_means: vec![true_means],
            noise_var,
        }
    }

    pub fn num_covariates(&self) -> usize {
        self.covariates.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_var > 0.0) || !self.noise_var.is_finite() {
            return Err(Error::NonPositiveNoiseVar(self.noise_var));
        }
        let k = self.covariates.len();
        if k == 0 {
            return Err(Error::InvalidSpec("covariates must be non-empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.covariates {
            if !seen.insert(c) {
                return Err(Error::InvalidSpec(format!("duplicate covariate {c}")));
            }
        }
        if self.covariate_probs.len() != k {
            return Err(Error::InvalidSpec(format!(
                "covariate_probs has {} entries for {k} covariates",
                self.covariate_probs.len()
            )));
        }
        if self.covariate_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidSpec("covariate_probs must lie in [0, 1]".into()));
        }
        let total = numeric::sum(self.covariate_probs.iter().copied());
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::CovariateProbsSum(total));
        }
        if self.group_probs.len() != k {
            return Err(Error::InvalidSpec(format!(
                "group_probs has {} entries for {k} covariates",
                self.group_probs.len()
            )));
        }
        if self.group_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidSpec("group_probs must lie in [0, 1]".into()));
        }
        if self.true_means.len() != k {
            let missing = self
                .covariates
                .get(self.true_means.len())
                .map(|c| c.to_string())
                .unwrap_or_default();
            return Err(Error::InvalidSpec(format!(
                "missing true mean cell for covariate {missing:?} ({} cells for {k} covariates)",
                self.true_means.len()
            )));
        }
        if self
            .true_means
            .iter()
            .any(|m| !m.g1.is_finite() || !m.g0.is_finite())
        {
            return Err(Error::InvalidSpec("true_means must be finite".into()));
        }
        Ok(())
    }

    pub fn check_index(&self, x: usize) -> Result<()> {
        if x < self.covariates.len() {
            Ok(())
        } else {
            Err(Error::UnknownCovariate(x))
        }
    }

    pub fn index_of(&self, covariate: &Covariate) -> Option<usize> {
        self.covariates.iter().position(|c| c == covariate)
    }

    pub fn mean(&self, x: usize, g: Group) -> f64 {
        self.true_means[x].get(g)
    }

    /// `P(G=g | X=x)`.
    pub fn group_prob(&self, x: usize, g: Group) -> f64 {
        match g {
            Group::One => self.group_probs[x],
            Group::Zero => 1.0 - self.group_probs[x],
        }
    }

    /// `Delta_mu(x) = mu(x,1) - mu(x,0)`.
    pub fn true_gap(&self, x: usize) -> f64 {
        self.true_means[x].gap()
    }
}

/// Returns the spec unchanged when every invariant holds.
pub fn validate_spec(spec: ProblemSpec) -> Result<ProblemSpec> {
    spec.validate()?;
    Ok(spec)
}

/// Training design: `n(x,g)` per cell and the master seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub counts: Vec<CellPair<u64>>,
    pub seed: u64,
}

impl TrainingConfig {
    pub fn balanced(per_group: u64, seed: u64) -> Self {
        TrainingConfig { counts: vec![CellPair::splat(per_group)], seed }
    }

    pub fn validate_for(&self, spec: &ProblemSpec) -> Result<()> {
        if self.counts.len() != spec.num_covariates() {
            return Err(Error::InvalidConfig(format!(
                "counts has {} cells for {} covariates",
                self.counts.len(),
                spec.num_covariates()
            )));
        }
        Ok(())
    }

    pub fn count(&self, x: usize, g: Group) -> u64 {
        self.counts[x].get(g)
    }
}

/// Count-weighted training mean `(n1 mu1 + n0 mu0) / (n1 + n0)` at `x`.
pub fn weighted_mean_mu(spec: &ProblemSpec, config: &TrainingConfig, x: usize) -> Result<f64> {
    spec.check_index(x)?;
    config.validate_for(spec)?;
    let w = config.counts[x]
        .shares()
        .ok_or(Error::EmptyCovariate { x })?;
    let mu = spec.true_means[x];
    Ok(w.g1 * mu.g1 + w.g0 * mu.g0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub x: usize,
    pub g: Group,
    pub y: f64,
}

/// Sampled labeled training instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub records: Vec<Record>,
    pub counts: Vec<CellPair<u64>>,
}

impl TrainingSet {
    /// Builds a set from records, deriving the cell counts.
    pub fn from_records(num_covariates: usize, records: Vec<Record>) -> Result<Self> {
        let mut counts = vec![CellPair::splat(0u64); num_covariates];
        for r in &records {
            if r.x >= num_covariates {
                return Err(Error::UnknownCovariate(r.x));
            }
            if !r.y.is_finite() {
                return Err(Error::InvalidConfig(format!("non-finite label at x={}", r.x)));
            }
            *counts[r.x].get_mut(r.g) += 1;
        }
        Ok(TrainingSet { records, counts })
    }

    pub fn num_covariates(&self) -> usize {
        self.counts.len()
    }

    pub fn labels(&self, x: usize, g: Group) -> impl Iterator<Item = f64> + '_ {
        self.records
            .iter()
            .filter(move |r| r.x == x && r.g == g)
            .map(|r| r.y)
    }
}

/// The five scalar parameters of the balanced single-covariate example
/// together with noise and prior variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    pub sigma_sq: f64,
    pub tau_sq: f64,
    /// Total training size, split evenly between the groups.
    pub n: u64,
    /// Prior gap `beta(1) - beta(0)`.
    pub delta: f64,
    /// True gap `mu(1) - mu(0)`.
    pub delta_mu: f64,
    pub beta_bar: f64,
    pub mu_bar: f64,
}

impl ExampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > 0.0) {
            return Err(Error::NonPositiveNoiseVar(self.sigma_sq));
        }
        if !(self.tau_sq > 0.0) {
            return Err(Error::InvalidPrior(format!("tau_sq must be positive (got {})", self.tau_sq)));
        }
        if self.n == 0 || !self.n.is_multiple_of(2) {
            return Err(Error::NotBalancedExample(format!(
                "balanced example requires even n (got {})",
                self.n
            )));
        }
        Ok(())
    }

    pub fn true_means(&self) -> CellPair<f64> {
        CellPair::new(self.mu_bar + self.delta_mu / 2.0, self.mu_bar - self.delta_mu / 2.0)
    }

    pub fn prior_means(&self) -> CellPair<f64> {
        CellPair::new(self.beta_bar + self.delta / 2.0, self.beta_bar - self.delta / 2.0)
    }

    /// Materializes the example as a spec, conjugate prior and training design.
    pub fn scenario(&self, seed: u64) -> Result<Scenario> {
        self.validate()?;
        Ok(Scenario {
            spec: ProblemSpec::single_covariate(self.true_means(), self.sigma_sq),
            prior: Prior::ConjugateNormal(ConjugateNormalPrior {
                beta: vec![self.prior_means()],
                tau_sq: self.tau_sq,
            }),
            training: TrainingConfig::balanced(self.n / 2, seed),
        })
    }
}

/// Summary parameters read back from a balanced example scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExampleParams {
    pub delta_mu: f64,
    pub mu_bar: f64,
    pub delta: f64,
    pub beta_bar: f64,
    pub n: u64,
}

impl DerivedExampleParams {
    /// Fails unless the inputs form the balanced, two-group, single-covariate
    /// example with `P(G=1) = 1/2` and an independent conjugate Normal prior.
    pub fn derive(spec: &ProblemSpec, prior: &Prior, config: &TrainingConfig) -> Result<Self> {
        Ok(Self::derive_full(spec, prior, config)?.into())
    }

    /// As [`DerivedExampleParams::derive`], also returning `sigma^2` and `tau^2`.
    pub fn derive_full(
        spec: &ProblemSpec,
        prior: &Prior,
        config: &TrainingConfig,
    ) -> Result<ExampleParams> {
        spec.validate()?;
        config.validate_for(spec)?;
        if spec.num_covariates() != 1 {
            return Err(Error::NotBalancedExample(format!(
                "expected a single covariate (got {})",
                spec.num_covariates()
            )));
        }
        if spec.group_probs[0] != 0.5 {
            return Err(Error::NotBalancedExample(format!(
                "expected P(G=1) = 1/2 (got {})",
                spec.group_probs[0]
            )));
        }
        let counts = config.counts[0];
        if counts.g1 != counts.g0 || counts.g1 == 0 {
            return Err(Error::NotBalancedExample(format!(
                "expected equal positive group counts (got n1={}, n0={})",
                counts.g1, counts.g0
            )));
        }
        let Prior::ConjugateNormal(conj) = prior else {
            return Err(Error::NotBalancedExample("expected a conjugate Normal prior".into()));
        };
        let beta = conj.beta[0];
        let mu = spec.true_means[0];
        Ok(ExampleParams {
            sigma_sq: spec.noise_var,
            tau_sq: conj.tau_sq,
            n: counts.total(),
            delta: beta.gap(),
            delta_mu: mu.gap(),
            beta_bar: beta.midpoint(),
            mu_bar: mu.midpoint(),
        })
    }
}

impl From<ExampleParams> for DerivedExampleParams {
    fn from(p: ExampleParams) -> Self {
        DerivedExampleParams {
            delta_mu: p.delta_mu,
            mu_bar: p.mu_bar,
            delta: p.delta,
            beta_bar: p.beta_bar,
            n: p.n,
        }
    }
}

/// A complete experimental setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub spec: ProblemSpec,
    pub prior: Prior,
    pub training: TrainingConfig,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.training.validate_for(&self.spec)?;
        self.prior.validate_for(self.spec.num_covariates())
    }
}

/// The five decision rules under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Group-blind machine prediction applied directly.
    FMinus,
    /// Group-aware machine prediction applied directly.
    FPlus,
    /// Unassisted human decision (prior mean).
    D0,
    /// Human decision assisted by the group-blind prediction.
    DMinus,
    /// Human decision assisted by the group-aware prediction.
    DPlus,
}

impl RuleKind {
    pub const ALL: [RuleKind; 5] = [
        RuleKind::FMinus,
        RuleKind::FPlus,
        RuleKind::D0,
        RuleKind::DMinus,
        RuleKind::DPlus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::FMinus => "f_minus",
            RuleKind::FPlus => "f_plus",
            RuleKind::D0 => "d0",
            RuleKind::DMinus => "d_minus",
            RuleKind::DPlus => "d_plus",
        }
    }

    /// Mathematical label used in tables and figures.
    pub fn symbol(self) -> &'static str {
        match self {
            RuleKind::FMinus => "f̂₋",
            RuleKind::FPlus => "f̂₊",
            RuleKind::D0 => "d₀",
            RuleKind::DMinus => "d̂₋",
            RuleKind::DPlus => "d̂₊",
        }
    }

    /// Whether the rule's output depends on the training data.
    pub fn is_data_dependent(self) -> bool {
        self != RuleKind::D0
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RuleKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        RuleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

/// A realized mapping `(x, g) -> decision`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub kind: RuleKind,
    pub values: Vec<CellPair<f64>>,
}

impl DecisionRule {
    pub fn new(kind: RuleKind, values: Vec<CellPair<f64>>) -> Self {
        debug_assert!(
            kind != RuleKind::FMinus || values.iter().all(|v| v.g1 == v.g0),
            "group-blind rule must not vary with group"
        );
        DecisionRule { kind, values }
    }

    /// A rule that ignores group identity.
    pub fn group_blind(kind: RuleKind, per_x: impl IntoIterator<Item = f64>) -> Self {
        DecisionRule { kind, values: per_x.into_iter().map(CellPair::splat).collect() }
    }

    pub fn value(&self, x: usize, g: Group) -> Result<f64> {
        self.values
            .get(x)
            .map(|v| v.get(g))
            .ok_or(Error::UnknownCovariate(x))
    }
}
