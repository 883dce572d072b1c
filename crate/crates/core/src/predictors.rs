//! Machine predictions as training-cell averages: the group-blind pooled
//! mean `f̂₋(x)` and the group-aware cell mean `f̂₊(x,g)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CellPair, Covariate, Group, TrainingSet};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Blind,
    Aware,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachinePrediction {
    pub kind: PredictionKind,
    /// Blind: one value per covariate. Aware: one value per cell. `None`
    /// where the denominator is zero.
    values: Vec<CellPair<Option<f64>>>,
    pub cell_counts: Vec<CellPair<u64>>,
}

/// One exported prediction; `g` is absent for blind predictions and `n` is
/// the denominator of the average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub x: Covariate,
    pub g: Option<Group>,
    pub value: f64,
    pub n: u64,
}

struct CellSums {
    cells: Vec<CellPair<CompensatedSum>>,
    pooled: Vec<CompensatedSum>,
}

fn cell_sums(train: &TrainingSet) -> CellSums {
    let k = train.num_covariates();
    let mut cells = vec![CellPair::splat(CompensatedSum::new()); k];
    let mut pooled = vec![CompensatedSum::new(); k];
    for r in &train.records {
        cells[r.x].get_mut(r.g).add(r.y);
        pooled[r.x].add(r.y);
    }
    CellSums { cells, pooled }
}

/// Pooled average of all labels at each covariate.
pub fn fit_group_blind(train: &TrainingSet) -> MachinePrediction {
    let sums = cell_sums(train);
    let values = sums
        .pooled
        .iter()
        .zip(&train.counts)
        .map(|(s, n)| {
            let total = n.total();
            CellPair::splat((total > 0).then(|| s.total() / total as f64))
        })
        .collect();
    MachinePrediction {
        kind: PredictionKind::Blind,
        values,
        cell_counts: train.counts.clone(),
    }
}

/// Per-cell average of labels.
pub fn fit_group_aware(train: &TrainingSet) -> MachinePrediction {
    let sums = cell_sums(train);
    let values = sums
        .cells
        .iter()
        .zip(&train.counts)
        .map(|(s, n)| {
            CellPair::from_fn(|g| {
                let count = n.get(g);
                (count > 0).then(|| s.get(g).total() / count as f64)
            })
        })
        .collect();
    MachinePrediction {
        kind: PredictionKind::Aware,
        values,
        cell_counts: train.counts.clone(),
    }
}

impl MachinePrediction {
    pub fn num_covariates(&self) -> usize {
        self.values.len()
    }

    /// The prediction shown for an instance at `(x, g)`; blind predictions
    /// ignore `g`.
    pub fn value(&self, x: usize, g: Group) -> Result<f64> {
        let cell = self.values.get(x).ok_or(Error::UnknownCovariate(x))?;
        cell.get(g).ok_or(match self.kind {
            PredictionKind::Blind => Error::EmptyCovariate { x },
            PredictionKind::Aware => Error::EmptyCell { x, g },
        })
    }

    /// Number of observations behind the prediction at `(x, g)`.
    pub fn support(&self, x: usize, g: Group) -> u64 {
        match self.kind {
            PredictionKind::Blind => self.cell_counts[x].total(),
            PredictionKind::Aware => self.cell_counts[x].get(g),
        }
    }

    /// `f̂(x,1) - f̂(x,0)`.
    pub fn disparity(&self, x: usize) -> Result<f64> {
        Ok(self.value(x, Group::One)? - self.value(x, Group::Zero)?)
    }

    pub fn rows(&self, covariates: &[Covariate]) -> Vec<PredictionRow> {
        let mut rows = Vec::new();
        for (x, cell) in self.values.iter().enumerate() {
            let id = covariates
                .get(x)
                .cloned()
                .unwrap_or_else(|| Covariate(x.to_string()));
            match self.kind {
                PredictionKind::Blind => {
                    if let Some(value) = cell.g1 {
                        rows.push(PredictionRow { x: id, g: None, value, n: self.cell_counts[x].total() });
                    }
                }
                PredictionKind::Aware => {
                    for g in Group::BOTH {
                        if let Some(value) = cell.get(g) {
                            rows.push(PredictionRow {
                                x: id.clone(),
                                g: Some(g),
                                value,
                                n: self.cell_counts[x].get(g),
                            });
                        }
                    }
                }
            }
        }
        rows
    }

    /// Writes `x,g,value,n` rows with a header.
    pub fn write_csv<W: Write>(&self, covariates: &[Covariate], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "g", "value", "n"])?;
        for row in self.rows(covariates) {
            w.write_record([
                row.x.0.clone(),
                row.g.map(|g| g.to_string()).unwrap_or_default(),
                row.value.to_string(),
                row.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Record;

    fn set(records: &[(usize, Group, f64)]) -> TrainingSet {
        let records = records.iter().map(|&(x, g, y)| Record { x, g, y }).collect();
        TrainingSet::from_records(1, records).unwrap()
    }

    #[test]
    fn blind_is_pooled_average() {
        let t = set(&[(0, Group::One, 1.0), (0, Group::One, 3.0), (0, Group::Zero, 0.0)]);
        let f = fit_group_blind(&t);
        assert!((f.value(0, Group::One).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.value(0, Group::One).unwrap(), f.value(0, Group::Zero).unwrap());
        assert_eq!(f.disparity(0).unwrap(), 0.0);
    }

    #[test]
    fn aware_is_cell_average() {
        let t = set(&[(0, Group::One, 1.0), (0, Group::One, 3.0), (0, Group::Zero, 7.0)]);
        let f = fit_group_aware(&t);
        assert_eq!(f.value(0, Group::One).unwrap(), 2.0);
        assert_eq!(f.value(0, Group::Zero).unwrap(), 7.0);
    }

    #[test]
    fn constant_labels() {
        let t = set(&[(0, Group::One, 2.5), (0, Group::Zero, 2.5), (0, Group::Zero, 2.5)]);
        assert_eq!(fit_group_blind(&t).value(0, Group::One).unwrap(), 2.5);
    }

    #[test]
    fn empty_cell_is_an_error() {
        let t = set(&[(0, Group::One, 1.0)]);
        let f = fit_group_aware(&t);
        let err = f.value(0, Group::Zero).unwrap_err();
        assert!(matches!(err, Error::EmptyCell { x: 0, g: Group::Zero }));
        assert!(err.to_string().contains("undefined for empty cell"));
        assert!(fit_group_blind(&t).value(0, Group::Zero).is_ok());

        let empty = TrainingSet::from_records(1, vec![]).unwrap();
        assert!(matches!(
            fit_group_blind(&empty).value(0, Group::One),
            Err(Error::EmptyCovariate { x: 0 })
        ));
    }

    #[test]
    fn csv_export() {
        let t = set(&[(0, Group::One, 1.0), (0, Group::One, 3.0), (0, Group::Zero, 0.0)]);
        let mut out = Vec::new();
        fit_group_aware(&t)
            .write_csv(&[Covariate::from("a")], &mut out)
            .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x,g,value,n\na,1,2,2\na,0,0,1\n");
        let rows = fit_group_blind(&t).rows(&[Covariate::from("a")]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].g, None);
        assert_eq!(rows[0].n, 3);
    }
}
