use crate::error::{Error, Result};
use crate::model::{CellPair, ConjugateNormalPrior, Group};

fn check_variances(prior: &ConjugateNormalPrior, sigma_sq: f64) -> Result<()> {
    prior.validate()?;
    if !(sigma_sq > 0.0) {
        return Err(Error::NonPositiveNoiseVar(sigma_sq));
    }
    Ok(())
}

/// Posterior mean of `mu(x,g)` given the cell average `fplus` of `n_cell`
/// observations: inverse-variance weighting of prior and signal,
/// `(sigma^2 beta + tau^2 n fplus) / (sigma^2 + n tau^2)`.
pub fn decide_assisted_aware_conjugate(
    prior: &ConjugateNormalPrior,
    fplus: f64,
    n_cell: u64,
    sigma_sq: f64,
    x: usize,
    g: Group,
) -> Result<f64> {
    check_variances(prior, sigma_sq)?;
    if n_cell == 0 {
        return Err(Error::EmptyCell { x, g });
    }
    let beta = prior.beta(x)?.get(g);
    let signal_precision = n_cell as f64 * prior.tau_sq;
    Ok((sigma_sq * beta + signal_precision * fplus) / (sigma_sq + signal_precision))
}

/// Posterior means of both cells given the pooled average `fminus`.
///
/// With shares `w_g = n_g / N` the pooled average is
/// `w1 mu1 + w0 mu0 + noise` with noise variance `sigma^2 / N`, so joint
/// Normal conditioning gives
/// `beta_g + w_g tau^2 (fminus - w·beta) / ((w1² + w0²) tau^2 + sigma^2 / N)`.
pub fn blind_conjugate_pair(
    prior: &ConjugateNormalPrior,
    fminus: f64,
    counts: CellPair<u64>,
    sigma_sq: f64,
    x: usize,
) -> Result<CellPair<f64>> {
    check_variances(prior, sigma_sq)?;
    let w = counts.shares().ok_or(Error::EmptyCovariate { x })?;
    let beta = prior.beta(x)?;
    let total = counts.total() as f64;
    let predictive_mean = w.g1 * beta.g1 + w.g0 * beta.g0;
    let predictive_var = (w.g1 * w.g1 + w.g0 * w.g0) * prior.tau_sq + sigma_sq / total;
    let innovation = (fminus - predictive_mean) / predictive_var;
    Ok(CellPair::from_fn(|g| {
        beta.get(g) + w.get(g) * prior.tau_sq * innovation
    }))
}

pub fn decide_assisted_blind_conjugate(
    prior: &ConjugateNormalPrior,
    fminus: f64,
    counts: CellPair<u64>,
    sigma_sq: f64,
    x: usize,
    g: Group,
) -> Result<f64> {
    Ok(blind_conjugate_pair(prior, fminus, counts, sigma_sq, x)?.get(g))
}
