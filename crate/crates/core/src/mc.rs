//! Replication driver. Replications run on the current rayon pool and land
//! in index-ordered slots, so every downstream reduction sees the same
//! sequence whatever the worker count.

use rayon::prelude::*;

use crate::decisions::realize_rules;
use crate::error::{Error, Result};
use crate::model::{sample_training_replicate, DecisionRule, Prior, ProblemSpec, RuleKind, TrainingConfig};

/// Runs `f(replication)` for `0..reps` and returns results in index order.
/// The first failure (lowest index) is reported with its replication index.
pub fn replicate<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|i| {
            f(i as u64).map_err(|e| Error::Replication { index: i, source: Box::new(e) })
        })
        .collect()
}

/// Samples `reps` training sets and realizes the requested rules on each.
pub fn replicate_rules(
    spec: &ProblemSpec,
    prior: &Prior,
    config: &TrainingConfig,
    kinds: &[RuleKind],
    reps: usize,
) -> Result<Vec<Vec<DecisionRule>>> {
    spec.validate()?;
    config.validate_for(spec)?;
    prior.validate_for(spec.num_covariates())?;
    replicate(reps, |rep| {
        let train = sample_training_replicate(spec, config, rep)?;
        realize_rules(spec, prior, &train, kinds)
    })
}
