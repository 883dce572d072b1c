//! Grid sweeps over scalar parameters. Axes combine as a Cartesian
//! product with the first axis varying slowest; every point reuses the
//! master seed so neighbouring points share random numbers.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::anyhow;
use assistfair::model::DerivedExampleParams;
use assistfair::oracle::{delta_threshold_example, machine_risk_expectations, xi_threshold_general, MachineRisks};
use assistfair::RuleKind;
use serde::{Deserialize, Serialize};

use crate::commands::{ensure_dir, run_simulation, simulate, to_json, write_file, SimulationOutput, Status};
use crate::config::{ExperimentConfig, SweepParam};
use crate::exit::CliError;
use crate::svg::{Chart, Marker, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub values: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub output: SimulationOutput,
    /// Closed-form machine risks at the examined covariate.
    pub machine_risks: Option<MachineRisks>,
    pub xi: Option<f64>,
    pub delta_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<SweepParam>,
    pub points: Vec<SweepPoint>,
}

fn grid(axes: &[(SweepParam, Vec<f64>)]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, (_, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, CliError> {
    let axes = config
        .sweep
        .iter()
        .map(|a| Ok((a.param, a.points()?)))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(CliError::usage)?;
    for (i, (p, _)) in axes.iter().enumerate() {
        if axes[..i].iter().any(|(q, _)| q == p) {
            return Err(CliError::usage(anyhow!("sweep axis {} listed twice", p.as_str())));
        }
    }
    let x = config.covariate_index()?;
    let mut points = Vec::new();
    for values in grid(&axes) {
        let mut point = config.clone();
        let mut named = BTreeMap::new();
        for ((param, _), &v) in axes.iter().zip(&values) {
            point.apply(*param, v).map_err(CliError::usage)?;
            named.insert(param.as_str().to_string(), v);
        }
        point.validate().map_err(|e| CliError { code: e.code, error: e.error.context(format!("sweep point {named:?}")) })?;
        let output = run_simulation(&point)?;
        let training = point.training();
        let machine_risks = machine_risk_expectations(&point.spec, &training, x).ok();
        let xi = xi_threshold_general(&point.spec, &training, x).ok();
        let delta_threshold = DerivedExampleParams::derive_full(&point.spec, point.prior(), &training)
            .ok()
            .and_then(|p| delta_threshold_example(p.sigma_sq, p.tau_sq, p.n as f64, p.delta_mu).ok());
        points.push(SweepPoint { values: named, output, machine_risks, xi, delta_threshold });
    }
    Ok(SweepResult { axes: axes.iter().map(|(p, _)| *p).collect(), points })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn risk_gap(p: &SweepPoint, a: RuleKind, b: RuleKind) -> Option<f64> {
    let r = &p.output.report;
    Some(r.rule(a)?.expected_risk.mean - r.rule(b)?.expected_risk.mean)
}

fn oracle_gap(p: &SweepPoint, a: RuleKind, b: RuleKind) -> Option<f64> {
    let t = p.output.closed_forms.as_ref()?;
    Some(t.row(a).expected_risk - t.row(b).expected_risk)
}

fn write_long_csv(result: &SweepResult) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["point".to_string()];
    header.extend(result.axes.iter().map(|a| a.as_str().to_string()));
    header.extend(["rule", "x", "quantity", "value", "se", "reps", "seed"].map(String::from));
    w.write_record(&header).map_err(CliError::failure)?;
    for (i, p) in result.points.iter().enumerate() {
        let mut buf = Vec::new();
        p.output.report.write_csv(&mut buf)?;
        let mut rows = csv::Reader::from_reader(buf.as_slice());
        for row in rows.records() {
            let row = row.map_err(CliError::failure)?;
            let mut rec = vec![i.to_string()];
            rec.extend(result.axes.iter().map(|a| p.values[a.as_str()].to_string()));
            rec.extend(row.iter().map(String::from));
            w.write_record(&rec).map_err(CliError::failure)?;
        }
    }
    w.into_inner().map_err(|e| CliError::failure(anyhow!("{e}")))
}

/// One row per sweep point.
fn write_summary_csv(result: &SweepResult) -> Result<Vec<u8>, CliError> {
    let rules: Vec<RuleKind> = result
        .points
        .first()
        .map(|p| p.output.report.rules.iter().map(|m| m.rule).collect())
        .unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["point".to_string()];
    header.extend(result.axes.iter().map(|a| a.as_str().to_string()));
    for r in &rules {
        for q in ["disparity", "disparity_se", "risk", "risk_se", "oracle_disparity", "oracle_risk"] {
            header.push(format!("{q}_{r}"));
        }
    }
    header.extend(
        [
            "machine_risk_gap",
            "machine_risk_gap_oracle",
            "assisted_risk_gap",
            "assisted_risk_gap_oracle",
            "xi",
            "delta_threshold",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(CliError::failure)?;
    for (i, p) in result.points.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(result.axes.iter().map(|a| p.values[a.as_str()].to_string()));
        for &r in &rules {
            let m = p.output.report.rule(r).expect("same rules at every point");
            let row = p.output.closed_forms.as_ref().map(|t| *t.row(r));
            rec.extend([
                m.avg_disparity.mean.to_string(),
                opt(m.avg_disparity.se),
                m.expected_risk.mean.to_string(),
                opt(m.expected_risk.se),
                opt(row.map(|r| r.expected_disparity)),
                opt(row.map(|r| r.expected_risk)),
            ]);
        }
        rec.extend([
            opt(risk_gap(p, RuleKind::FPlus, RuleKind::FMinus)),
            opt(p.machine_risks.map(|m| m.gap())),
            opt(risk_gap(p, RuleKind::DPlus, RuleKind::DMinus)),
            opt(oracle_gap(p, RuleKind::DPlus, RuleKind::DMinus)),
            opt(p.xi),
            opt(p.delta_threshold),
        ]);
        w.write_record(&rec).map_err(CliError::failure)?;
    }
    w.into_inner().map_err(|e| CliError::failure(anyhow!("{e}")))
}

/// A marker is drawn only where the threshold is the same at every point.
fn constant(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut it = values;
    let first = it.next()??;
    it.all(|v| v == Some(first)).then_some(first)
}

fn series(name: &str, dashed: bool, points: impl Iterator<Item = Option<(f64, f64)>>) -> Option<Series> {
    let points: Option<Vec<_>> = points.collect();
    points.filter(|p| !p.is_empty()).map(|points| Series { name: name.into(), points, dashed })
}

/// Figures for single-axis sweeps, keyed by file stem.
pub fn figures(result: &SweepResult) -> Vec<(&'static str, Chart)> {
    let [param] = result.axes[..] else { return vec![] };
    let xs: Vec<f64> = result.points.iter().map(|p| p.values[param.as_str()]).collect();
    let rules: Vec<RuleKind> =
        result.points.first().map(|p| p.output.report.rules.iter().map(|m| m.rule).collect()).unwrap_or_default();
    let per_rule = |f: fn(&assistfair::metrics::RuleMetrics) -> f64| -> Vec<Series> {
        rules
            .iter()
            .map(|&r| Series {
                name: r.symbol().into(),
                points: result.points.iter().zip(&xs).map(|(p, &x)| (x, f(p.output.report.rule(r).unwrap()))).collect(),
                dashed: false,
            })
            .collect()
    };
    let mut out = vec![
        (
            "disparity",
            Chart {
                title: format!("Expected disparity vs {}", param.symbol()),
                x_label: param.symbol().into(),
                y_label: "E[Δ_d]".into(),
                series: per_rule(|m| m.avg_disparity.mean),
                markers: vec![],
            },
        ),
        (
            "risk",
            Chart {
                title: format!("Expected risk vs {}", param.symbol()),
                x_label: param.symbol().into(),
                y_label: "E[r_d]".into(),
                series: per_rule(|m| m.expected_risk.mean),
                markers: vec![],
            },
        ),
    ];
    let gap_chart = |a: RuleKind, b: RuleKind, oracle: &dyn Fn(&SweepPoint) -> Option<f64>, marker: Option<Marker>| {
        let mc = series(
            "Monte Carlo",
            false,
            result.points.iter().zip(&xs).map(|(p, &x)| risk_gap(p, a, b).map(|g| (x, g))),
        )?;
        let mut all = vec![mc];
        all.extend(series("closed form", true, result.points.iter().zip(&xs).map(|(p, &x)| oracle(p).map(|g| (x, g)))));
        Some(Chart {
            title: format!("E[r_{}] − E[r_{}] vs {}", a.symbol(), b.symbol(), param.symbol()),
            x_label: param.symbol().into(),
            y_label: "risk gap".into(),
            series: all,
            markers: marker.into_iter().collect(),
        })
    };
    let xi_marker = (param == SweepParam::DeltaMu)
        .then(|| constant(result.points.iter().map(|p| p.xi)))
        .flatten()
        .map(|x| Marker { name: "ξ".into(), x });
    if let Some(c) = gap_chart(RuleKind::FPlus, RuleKind::FMinus, &|p| p.machine_risks.map(|m| m.gap()), xi_marker) {
        out.push(("machine_risk_gap", c));
    }
    let delta_marker = (param == SweepParam::Delta)
        .then(|| constant(result.points.iter().map(|p| p.delta_threshold)))
        .flatten()
        .map(|x| Marker { name: "δ*".into(), x });
    if let Some(c) = gap_chart(
        RuleKind::DPlus,
        RuleKind::DMinus,
        &|p| oracle_gap(p, RuleKind::DPlus, RuleKind::DMinus),
        delta_marker,
    ) {
        out.push(("assisted_risk_gap", c));
    }
    out
}

pub fn sweep(config: &ExperimentConfig, out: &Path) -> Result<Status, CliError> {
    if config.sweep.is_empty() {
        return simulate(config, out);
    }
    let result = run_sweep(config)?;
    ensure_dir(out)?;
    write_file(&out.join("sweep.csv"), write_long_csv(&result)?)?;
    let summary = write_summary_csv(&result)?;
    write_file(&out.join("sweep_summary.csv"), &summary)?;
    write_file(&out.join("sweep.json"), to_json(&result)?)?;
    for (stem, chart) in figures(&result) {
        write_file(&out.join(format!("{stem}.svg")), chart.to_svg())?;
        let mut csv = Vec::new();
        chart.write_csv(&mut csv).map_err(CliError::failure)?;
        write_file(&out.join(format!("{stem}.csv")), csv)?;
    }
    print!("{}", String::from_utf8_lossy(&summary));
    Ok(Status::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_varies_last_axis_fastest() {
        let g = grid(&[(SweepParam::N, vec![8.0, 16.0]), (SweepParam::Delta, vec![0.0, 1.0, 2.0])]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![8.0, 0.0]);
        assert_eq!(g[1], vec![8.0, 1.0]);
        assert_eq!(g[5], vec![16.0, 2.0]);
    }

    #[test]
    fn markers_need_a_constant_threshold() {
        assert_eq!(constant([Some(0.5), Some(0.5)].into_iter()), Some(0.5));
        assert_eq!(constant([Some(0.5), Some(0.4)].into_iter()), None);
        assert_eq!(constant([None, Some(0.4)].into_iter()), None);
    }
}
