use rand::Rng;
use rand_distr::StandardNormal;

use super::{Group, ProblemSpec, Record, TrainingConfig, TrainingSet};
use crate::error::Result;
use crate::rng::{substream_rng, STREAM_DEPLOYMENT, STREAM_TRAINING};

/// Draws one training set from the configured seed (replication 0).
pub fn sample_training(spec: &ProblemSpec, config: &TrainingConfig) -> Result<TrainingSet> {
    sample_training_replicate(spec, config, 0)
}

/// Draws the training set of one Monte Carlo replication:
/// `n(x,g)` labels `mu(x,g) + N(0, sigma^2)` per cell, cells visited in
/// covariate order, group 1 before group 0.
pub fn sample_training_replicate(
    spec: &ProblemSpec,
    config: &TrainingConfig,
    replication: u64,
) -> Result<TrainingSet> {
    config.validate_for(spec)?;
    let mut rng = substream_rng(config.seed, replication, STREAM_TRAINING);
    let sd = spec.noise_var.sqrt();
    let total: u64 = config.counts.iter().map(|c| c.total()).sum();
    let mut records = Vec::with_capacity(total as usize);
    for (x, counts) in config.counts.iter().enumerate() {
        for g in Group::BOTH {
            let mu = spec.mean(x, g);
            for _ in 0..counts.get(g) {
                let z: f64 = rng.sample(StandardNormal);
                records.push(Record { x, g, y: mu + sd * z });
            }
        }
    }
    Ok(TrainingSet { records, counts: config.counts.clone() })
}

/// Bernoulli draw of the deployment group with `P(G=1 | X=x)`.
pub fn sample_deployment_group(spec: &ProblemSpec, x: usize, seed: u64) -> Result<Group> {
    spec.check_index(x)?;
    let mut rng = substream_rng(seed, 0, STREAM_DEPLOYMENT);
    let u: f64 = rng.random();
    Ok(if u < spec.group_probs[x] { Group::One } else { Group::Zero })
}
