//! Posterior means under discrete priors. Every support point is reweighted
//! by the Normal likelihood of the observed prediction and the weights are
//! normalized in log space, so arbitrarily peaked likelihoods do not
//! underflow.

use crate::error::{Error, Result};
use crate::model::{CellPair, GridCell, GridPrior, Group};
use crate::numeric::{log_weighted_mean, log_weighted_means};

fn check_signal(signal: f64, sigma_sq: f64) -> Result<()> {
    if !(sigma_sq > 0.0) {
        return Err(Error::NonPositiveNoiseVar(sigma_sq));
    }
    if !signal.is_finite() {
        return Err(Error::SignalOutsideSupport);
    }
    Ok(())
}

fn log_weight(weight: f64) -> f64 {
    if weight > 0.0 { weight.ln() } else { f64::NEG_INFINITY }
}

/// `E[mu(x,g) | fplus]` with `fplus | mu ~ N(mu(x,g), sigma^2 / n_cell)`.
pub fn grid_posterior_aware(
    prior: &GridPrior,
    fplus: f64,
    n_cell: u64,
    sigma_sq: f64,
    x: usize,
    g: Group,
) -> Result<f64> {
    check_signal(fplus, sigma_sq)?;
    if n_cell == 0 {
        return Err(Error::EmptyCell { x, g });
    }
    let scale = n_cell as f64 / (2.0 * sigma_sq);
    let loglik = |mu: f64| -scale * (fplus - mu) * (fplus - mu);
    let mean = match prior.cell(x)? {
        GridCell::Points(points) => log_weighted_mean(|| {
            points.iter().map(|p| {
                let mu = p.mean(g);
                (log_weight(p.weight) + loglik(mu), mu)
            })
        }),
        GridCell::Product { mu1, mu0 } => {
            let side = if g == Group::One { mu1 } else { mu0 };
            log_weighted_mean(|| {
                side.iter()
                    .map(|v| (log_weight(v.weight) + loglik(v.value), v.value))
            })
        }
    };
    mean.ok_or(Error::SignalOutsideSupport)
}

/// `E[(mu(x,1), mu(x,0)) | fminus]` with
/// `fminus | mu ~ N(w1 mu1 + w0 mu0, sigma^2 / N)`.
pub fn grid_blind_pair(
    prior: &GridPrior,
    fminus: f64,
    counts: CellPair<u64>,
    sigma_sq: f64,
    x: usize,
) -> Result<CellPair<f64>> {
    check_signal(fminus, sigma_sq)?;
    let w = counts.shares().ok_or(Error::EmptyCovariate { x })?;
    let scale = counts.total() as f64 / (2.0 * sigma_sq);
    let loglik = |mu1: f64, mu0: f64| {
        let r = fminus - (w.g1 * mu1 + w.g0 * mu0);
        -scale * r * r
    };
    let means = match prior.cell(x)? {
        GridCell::Points(points) => log_weighted_means(|| {
            points.iter().map(|p| {
                (log_weight(p.weight) + loglik(p.mu1, p.mu0), [p.mu1, p.mu0])
            })
        }),
        GridCell::Product { mu1, mu0 } => log_weighted_means(|| {
            mu1.iter().flat_map(move |a| {
                let la = log_weight(a.weight);
                mu0.iter().map(move |b| {
                    (la + log_weight(b.weight) + loglik(a.value, b.value), [a.value, b.value])
                })
            })
        }),
    };
    let [m1, m0] = means.ok_or(Error::SignalOutsideSupport)?;
    Ok(CellPair::new(m1, m0))
}

pub fn grid_posterior_blind(
    prior: &GridPrior,
    fminus: f64,
    counts: CellPair<u64>,
    sigma_sq: f64,
    x: usize,
    g: Group,
) -> Result<f64> {
    Ok(grid_blind_pair(prior, fminus, counts, sigma_sq, x)?.get(g))
}
