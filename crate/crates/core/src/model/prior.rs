use serde::{Deserialize, Serialize};

use super::{CellPair, Group, PROBABILITY_SUM_TOL};
use crate::error::{Error, Result};
use crate::numeric;

/// Decision-maker beliefs over the mean vector, one cell per covariate.
/// Cells at different covariates are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    ConjugateNormal(ConjugateNormalPrior),
    Grid(GridPrior),
}

impl Prior {
    pub fn num_cells(&self) -> usize {
        match self {
            Prior::ConjugateNormal(p) => p.beta.len(),
            Prior::Grid(p) => p.cells.len(),
        }
    }

    pub fn validate_for(&self, num_covariates: usize) -> Result<()> {
        if self.num_cells() != num_covariates {
            return Err(Error::InvalidPrior(format!(
                "prior has {} cells for {num_covariates} covariates",
                self.num_cells()
            )));
        }
        match self {
            Prior::ConjugateNormal(p) => p.validate(),
            Prior::Grid(p) => p.validate(),
        }
    }

    /// `E_pi[mu(x,g)]`.
    pub fn prior_mean(&self, x: usize, g: Group) -> Result<f64> {
        match self {
            Prior::ConjugateNormal(p) => p.beta.get(x).map(|b| b.get(g)),
            Prior::Grid(p) => p.cells.get(x).map(|c| c.prior_mean(g)),
        }
        .ok_or(Error::UnknownCovariate(x))
    }
}

/// `mu(x,g) ~ N(beta(x,g), tau^2)` independently across cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateNormalPrior {
    pub beta: Vec<CellPair<f64>>,
    pub tau_sq: f64,
}

impl ConjugateNormalPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_sq > 0.0) || !self.tau_sq.is_finite() {
            return Err(Error::InvalidPrior(format!(
                "tau_sq must be positive (got {})",
                self.tau_sq
            )));
        }
        if self.beta.iter().any(|b| !b.g1.is_finite() || !b.g0.is_finite()) {
            return Err(Error::InvalidPrior("beta must be finite".into()));
        }
        Ok(())
    }

    pub fn beta(&self, x: usize) -> Result<CellPair<f64>> {
        self.beta.get(x).copied().ok_or(Error::UnknownCovariate(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub mu1: f64,
    pub mu0: f64,
    pub weight: f64,
}

impl GridPoint {
    pub fn mean(&self, g: Group) -> f64 {
        match g {
            Group::One => self.mu1,
            Group::Zero => self.mu0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedValue {
    pub value: f64,
    pub weight: f64,
}

impl WeightedValue {
    /// Equally spaced nodes on `mean ± half_width_sd * sd`, weighted by the
    /// Normal density and normalized to sum to one.
    pub fn discretized_normal(
        mean: f64,
        var: f64,
        half_width_sd: f64,
        points: usize,
    ) -> Vec<WeightedValue> {
        assert!(points >= 2 && var > 0.0);
        let sd = var.sqrt();
        let step = 2.0 * half_width_sd / (points - 1) as f64;
        let mut nodes: Vec<WeightedValue> = (0..points)
            .map(|i| {
                let z = -half_width_sd + step * i as f64;
                WeightedValue { value: mean + z * sd, weight: (-0.5 * z * z).exp() }
            })
            .collect();
        let total = numeric::sum(nodes.iter().map(|n| n.weight));
        for n in &mut nodes {
            n.weight /= total;
        }
        nodes
    }
}

/// A discrete belief over `(mu(x,1), mu(x,0))` at one covariate.
///
/// Besides the two stored forms, JSON input accepts
/// `{"normal_product": {"beta": {"g1":..,"g0":..}, "tau_sq":.., "half_width_sd":.., "points":..}}`,
/// which expands to [`GridCell::normal_product`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "GridCellRepr")]
pub enum GridCell {
    /// Explicit support points with joint weights.
    Points(Vec<GridPoint>),
    /// Independent marginals; the joint support is their Cartesian product
    /// and is never materialized.
    Product {
        mu1: Vec<WeightedValue>,
        mu0: Vec<WeightedValue>,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum GridCellRepr {
    Points(Vec<GridPoint>),
    Product { mu1: Vec<WeightedValue>, mu0: Vec<WeightedValue> },
    NormalProduct { beta: CellPair<f64>, tau_sq: f64, half_width_sd: f64, points: usize },
}

impl TryFrom<GridCellRepr> for GridCell {
    type Error = String;
    fn try_from(repr: GridCellRepr) -> std::result::Result<Self, String> {
        Ok(match repr {
            GridCellRepr::Points(p) => GridCell::Points(p),
            GridCellRepr::Product { mu1, mu0 } => GridCell::Product { mu1, mu0 },
            GridCellRepr::NormalProduct { beta, tau_sq, half_width_sd, points } => {
                if !(tau_sq > 0.0 && tau_sq.is_finite()) || !(half_width_sd > 0.0) || points < 2 {
                    return Err(format!(
                        "normal_product needs tau_sq > 0, half_width_sd > 0 and points >= 2 \
                         (got {tau_sq}, {half_width_sd}, {points})"
                    ));
                }
                GridCell::normal_product(beta, tau_sq, half_width_sd, points)
            }
        })
    }
}

impl GridCell {
    /// All prior mass on a single pair.
    pub fn dogmatic(mu1: f64, mu0: f64) -> Self {
        GridCell::Points(vec![GridPoint { mu1, mu0, weight: 1.0 }])
    }

    /// Product grid approximating independent `N(beta_g, tau^2)` marginals.
    pub fn normal_product(beta: CellPair<f64>, tau_sq: f64, half_width_sd: f64, points: usize) -> Self {
        GridCell::Product {
            mu1: WeightedValue::discretized_normal(beta.g1, tau_sq, half_width_sd, points),
            mu0: WeightedValue::discretized_normal(beta.g0, tau_sq, half_width_sd, points),
        }
    }

    fn validate(&self) -> Result<()> {
        fn check_weights(weights: impl Iterator<Item = f64> + Clone, what: &str) -> Result<()> {
            if weights.clone().next().is_none() {
                return Err(Error::InvalidPrior(format!("{what} grid is empty")));
            }
            if weights.clone().any(|w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidPrior(format!("{what} weights must be non-negative")));
            }
            let total = numeric::sum(weights);
            if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
                return Err(Error::InvalidPrior(format!(
                    "{what} weights must sum to 1 (got {total})"
                )));
            }
            Ok(())
        }
        match self {
            GridCell::Points(points) => {
                if points.iter().any(|p| !p.mu1.is_finite() || !p.mu0.is_finite()) {
                    return Err(Error::InvalidPrior("grid points must be finite".into()));
                }
                check_weights(points.iter().map(|p| p.weight), "joint")
            }
            GridCell::Product { mu1, mu0 } => {
                for (side, name) in [(mu1, "mu1"), (mu0, "mu0")] {
                    if side.iter().any(|v| !v.value.is_finite()) {
                        return Err(Error::InvalidPrior("grid points must be finite".into()));
                    }
                    check_weights(side.iter().map(|v| v.weight), name)?;
                }
                Ok(())
            }
        }
    }

    /// Visits every joint support point with positive weight.
    pub fn for_each_point(&self, mut f: impl FnMut(GridPoint)) {
        match self {
            GridCell::Points(points) => points.iter().filter(|p| p.weight > 0.0).for_each(|p| f(*p)),
            GridCell::Product { mu1, mu0 } => {
                for a in mu1.iter().filter(|a| a.weight > 0.0) {
                    for b in mu0.iter().filter(|b| b.weight > 0.0) {
                        f(GridPoint { mu1: a.value, mu0: b.value, weight: a.weight * b.weight });
                    }
                }
            }
        }
    }

    pub fn prior_mean(&self, g: Group) -> f64 {
        match self {
            GridCell::Points(points) => numeric::sum(points.iter().map(|p| p.weight * p.mean(g))),
            GridCell::Product { mu1, mu0 } => {
                let side = if g == Group::One { mu1 } else { mu0 };
                numeric::sum(side.iter().map(|v| v.weight * v.value))
            }
        }
    }

    /// Smallest and largest `mu(x,g)` carrying positive prior weight.
    pub fn support_range(&self, g: Group) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        match self {
            GridCell::Points(points) => {
                points.iter().filter(|p| p.weight > 0.0).for_each(|p| visit(p.mean(g)))
            }
            GridCell::Product { mu1, mu0 } => {
                let side = if g == Group::One { mu1 } else { mu0 };
                side.iter().filter(|v| v.weight > 0.0).for_each(|v| visit(v.value))
            }
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPrior {
    pub cells: Vec<GridCell>,
}

impl GridPrior {
    pub fn validate(&self) -> Result<()> {
        self.cells.iter().try_for_each(GridCell::validate)
    }

    /// Product-grid discretization of a conjugate prior on `beta ± half_width_sd * tau`.
    pub fn discretize(prior: &ConjugateNormalPrior, half_width_sd: f64, points: usize) -> Self {
        GridPrior {
            cells: prior
                .beta
                .iter()
                .map(|b| GridCell::normal_product(*b, prior.tau_sq, half_width_sd, points))
                .collect(),
        }
    }

    pub fn cell(&self, x: usize) -> Result<&GridCell> {
        self.cells.get(x).ok_or(Error::UnknownCovariate(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_product_shorthand_expands() {
        let json = r#"{"normal_product":{"beta":{"g1":0.5,"g0":0.0},"tau_sq":1.0,"half_width_sd":8.0,"points":11}}"#;
        let cell: GridCell = serde_json::from_str(json).unwrap();
        assert_eq!(cell, GridCell::normal_product(CellPair::new(0.5, 0.0), 1.0, 8.0, 11));
        let bad = r#"{"normal_product":{"beta":{"g1":0,"g0":0},"tau_sq":0.0,"half_width_sd":8.0,"points":11}}"#;
        assert!(serde_json::from_str::<GridCell>(bad).unwrap_err().to_string().contains("tau_sq"));
    }

    #[test]
    fn discretized_normal_moments() {
        let nodes = WeightedValue::discretized_normal(0.5, 4.0, 8.0, 2001);
        let mean = numeric::sum(nodes.iter().map(|n| n.weight * n.value));
        let var = numeric::sum(nodes.iter().map(|n| n.weight * (n.value - 0.5).powi(2)));
        assert!((mean - 0.5).abs() < 1e-12);
        assert!((var - 4.0).abs() < 1e-9);
        let prior = GridPrior { cells: vec![GridCell::Product { mu1: nodes.clone(), mu0: nodes }] };
        prior.validate().unwrap();
    }

    #[test]
    fn grid_weights_must_sum_to_one() {
        let cell = GridCell::Points(vec![
            GridPoint { mu1: 0.0, mu0: 0.0, weight: 0.5 },
            GridPoint { mu1: 1.0, mu0: 0.0, weight: 0.4 },
        ]);
        assert!(GridPrior { cells: vec![cell] }.validate().is_err());
        assert!(GridPrior { cells: vec![GridCell::Points(vec![])] }.validate().is_err());
    }

    #[test]
    fn tau_sq_must_be_positive() {
        let p = ConjugateNormalPrior { beta: vec![CellPair::splat(0.0)], tau_sq: 0.0 };
        assert!(p.validate().is_err());
    }

    #[test]
    fn prior_json_shape() {
        let p = Prior::ConjugateNormal(ConjugateNormalPrior {
            beta: vec![CellPair::new(0.5, -0.5)],
            tau_sq: 1.0,
        });
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"kind":"conjugate_normal","beta":[{"g1":0.5,"g0":-0.5}],"tau_sq":1.0}"#);
        let grid: Prior = serde_json::from_str(
            r#"{"kind":"grid","cells":[{"points":[{"mu1":2.0,"mu0":-1.0,"weight":1.0}]}]}"#,
        )
        .unwrap();
        assert_eq!(grid, Prior::Grid(GridPrior { cells: vec![GridCell::dogmatic(2.0, -1.0)] }));
    }
}
