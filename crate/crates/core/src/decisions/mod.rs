//! Human decision rules as posterior means.
//!
//! The decision-maker at `(x, g)` conditions only on the single prediction
//! shown for that instance: nothing for `d₀`, the pooled `f̂₋(x)` for `d̂₋`,
//! and the cell average `f̂₊(x,g)` for `d̂₊`. Cells at different covariates
//! are updated independently.
//!
//! Conjugate Normal priors use closed forms; discrete priors go through the
//! grid engine in [`grid_posterior_aware`] / [`grid_posterior_blind`].

mod conjugate;
mod grid;

use serde::{Deserialize, Serialize};

pub use conjugate::{blind_conjugate_pair, decide_assisted_aware_conjugate, decide_assisted_blind_conjugate};
pub use grid::{grid_blind_pair, grid_posterior_aware, grid_posterior_blind};

use crate::error::{Error, Result};
use crate::model::{CellPair, DecisionRule, GridCell, Group, Prior, ProblemSpec, RuleKind, TrainingSet};
use crate::predictors::{fit_group_aware, fit_group_blind};

/// `d₀(x,g) = E_pi[mu(x,g)]`.
pub fn decide_unassisted(prior: &Prior, x: usize, g: Group) -> Result<f64> {
    prior.prior_mean(x, g)
}

/// The prediction a decision-maker conditions on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    None,
    /// Pooled average over both groups at `x`, with the training counts.
    Blind { value: f64, counts: CellPair<u64> },
    /// Average of the instance's own cell and its size.
    Aware { value: f64, n_cell: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    None,
    Blind,
    Aware,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub signal_kind: SignalKind,
    pub x: usize,
    pub g: Group,
}

/// Both cells' posterior means at `x` given the pooled prediction.
pub fn blind_pair(
    prior: &Prior,
    fminus: f64,
    counts: CellPair<u64>,
    sigma_sq: f64,
    x: usize,
) -> Result<CellPair<f64>> {
    match prior {
        Prior::ConjugateNormal(p) => blind_conjugate_pair(p, fminus, counts, sigma_sq, x),
        Prior::Grid(p) => grid_blind_pair(p, fminus, counts, sigma_sq, x),
    }
}

/// Posterior mean of `mu(x,g)` for any prior and signal.
pub fn posterior(
    prior: &Prior,
    signal: Signal,
    sigma_sq: f64,
    x: usize,
    g: Group,
) -> Result<PosteriorSummary> {
    let (mean, signal_kind) = match signal {
        Signal::None => (decide_unassisted(prior, x, g)?, SignalKind::None),
        Signal::Blind { value, counts } => {
            (blind_pair(prior, value, counts, sigma_sq, x)?.get(g), SignalKind::Blind)
        }
        Signal::Aware { value, n_cell } => {
            let mean = match prior {
                Prior::ConjugateNormal(p) => {
                    decide_assisted_aware_conjugate(p, value, n_cell, sigma_sq, x, g)?
                }
                Prior::Grid(p) => grid_posterior_aware(p, value, n_cell, sigma_sq, x, g)?,
            };
            (mean, SignalKind::Aware)
        }
    };
    if !mean.is_finite() {
        return Err(Error::SignalOutsideSupport);
    }
    Ok(PosteriorSummary { mean, signal_kind, x, g })
}

/// Infimum over conditioning values of `E_pi[mu(x,1) - mu(x,0) | mu_bar(x)]`,
/// where `mu_bar` weights the cells by their training shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DisparityInfimum {
    Bounded(f64),
    UnboundedBelow,
}

impl DisparityInfimum {
    pub fn value(self) -> f64 {
        match self {
            DisparityInfimum::Bounded(v) => v,
            DisparityInfimum::UnboundedBelow => f64::NEG_INFINITY,
        }
    }

    /// Whether the belief is `delta`-disparate.
    pub fn at_least(self, delta: f64) -> bool {
        self.value() >= delta
    }
}

/// Relative tolerance for treating two grid points' weighted means as the
/// same conditioning value.
const MU_BAR_TIE_TOL: f64 = 1e-9;

/// Conditional prior disparity given the training-weighted mean.
///
/// For a conjugate prior `E[mu1 - mu0 | mu_bar]` is linear in `mu_bar` with
/// slope `(w1 - w0) tau^2 / Var(mu_bar)`: constant `beta1 - beta0` when the
/// counts are balanced, unbounded below otherwise. For a grid prior the
/// scan runs over the `mu_bar` values realized on the support.
pub fn check_delta_disparate(prior: &Prior, counts: CellPair<u64>, x: usize) -> Result<DisparityInfimum> {
    let w = counts.shares().ok_or(Error::EmptyCovariate { x })?;
    match prior {
        Prior::ConjugateNormal(p) => {
            let beta = p.beta(x)?;
            Ok(if counts.g1 == counts.g0 {
                DisparityInfimum::Bounded(beta.gap())
            } else {
                DisparityInfimum::UnboundedBelow
            })
        }
        Prior::Grid(p) => Ok(DisparityInfimum::Bounded(grid_conditional_disparity_inf(
            p.cell(x)?,
            w,
        ))),
    }
}

fn grid_conditional_disparity_inf(cell: &GridCell, w: CellPair<f64>) -> f64 {
    let mut points = Vec::new();
    cell.for_each_point(|p| points.push((w.g1 * p.mu1 + w.g0 * p.mu0, p.weight, p.mu1 - p.mu0)));
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut inf = f64::INFINITY;
    let mut i = 0;
    while i < points.len() {
        let anchor = points[i].0;
        let tol = MU_BAR_TIE_TOL * anchor.abs().max(1.0);
        let mut mass = 0.0;
        let mut gap = 0.0;
        while i < points.len() && points[i].0 - anchor <= tol {
            mass += points[i].1;
            gap += points[i].1 * points[i].2;
            i += 1;
        }
        inf = inf.min(gap / mass);
    }
    inf
}

/// Computes the requested rules from one training draw.
pub fn realize_rules(
    spec: &ProblemSpec,
    prior: &Prior,
    train: &TrainingSet,
    kinds: &[RuleKind],
) -> Result<Vec<DecisionRule>> {
    let k = spec.num_covariates();
    let sigma_sq = spec.noise_var;
    let needs_blind = kinds.iter().any(|r| matches!(r, RuleKind::FMinus | RuleKind::DMinus));
    let needs_aware = kinds.iter().any(|r| matches!(r, RuleKind::FPlus | RuleKind::DPlus));
    let blind = needs_blind.then(|| fit_group_blind(train));
    let aware = needs_aware.then(|| fit_group_aware(train));

    kinds
        .iter()
        .map(|&kind| {
            let values = (0..k)
                .map(|x| -> Result<CellPair<f64>> {
                    Ok(match kind {
                        RuleKind::FMinus => {
                            CellPair::splat(blind.as_ref().unwrap().value(x, Group::One)?)
                        }
                        RuleKind::FPlus => {
                            let f = aware.as_ref().unwrap();
                            CellPair::new(f.value(x, Group::One)?, f.value(x, Group::Zero)?)
                        }
                        RuleKind::D0 => CellPair::new(
                            decide_unassisted(prior, x, Group::One)?,
                            decide_unassisted(prior, x, Group::Zero)?,
                        ),
                        RuleKind::DMinus => {
                            let f = blind.as_ref().unwrap();
                            blind_pair(prior, f.value(x, Group::One)?, train.counts[x], sigma_sq, x)?
                        }
                        RuleKind::DPlus => {
                            let f = aware.as_ref().unwrap();
                            let mut out = CellPair::splat(0.0);
                            for g in Group::BOTH {
                                let signal = Signal::Aware {
                                    value: f.value(x, g)?,
                                    n_cell: train.counts[x].get(g),
                                };
                                *out.get_mut(g) = posterior(prior, signal, sigma_sq, x, g)?.mean;
                            }
                            out
                        }
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DecisionRule::new(kind, values))
        })
        .collect()
}
