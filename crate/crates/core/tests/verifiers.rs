//! Verification harnesses on the standard parameter sets.

use assistfair::model::{ExampleParams, GridCell, Scenario, WeightedValue};
use assistfair::oracle::Regime;
use assistfair::verify::{
    verify_consistency, verify_disparity_reversal, verify_example_reversal, verify_example_tradeoff,
    verify_machine_regimes, verify_reordering, verify_tradeoff_reversal, ClaimId,
};
use assistfair::{CellPair, Error, GridPrior, Group, Prior, ProblemSpec, TrainingConfig};

fn scenario(delta_mu: f64, delta: f64, per_group: u64) -> Scenario {
    ExampleParams { sigma_sq: 1.0, tau_sq: 1.0, n: 2 * per_group, delta, delta_mu, beta_bar: 0.0, mu_bar: 0.0 }
        .scenario(2024)
        .unwrap()
}

#[test]
fn disparity_reversal_holds_with_ample_data() {
    let s = scenario(0.2, 1.0, 200);
    let out = verify_disparity_reversal(&s.spec, &s.prior, &s.training, 1000).unwrap();
    assert_eq!(out.claim, ClaimId::Thm1);
    assert!(out.success_fraction >= 0.95, "{}", out.summary_line(0.95));
    assert_eq!(out.delta, Some(1.0));
    assert_eq!(out.check("delta_at_most_d_minus"), Some(1.0));
}

#[test]
fn chain_fractions_do_not_fall_with_more_data() {
    for run in [
        |s: &Scenario| verify_disparity_reversal(&s.spec, &s.prior, &s.training, 1000),
        |s: &Scenario| verify_reordering(&s.spec, &s.prior, &s.training, 1000),
        |s: &Scenario| verify_tradeoff_reversal(&s.spec, &s.prior, &s.training, 1000, 0.25),
    ] {
        let dmu = 0.5;
        let fractions: Vec<f64> =
            [4, 20, 200].into_iter().map(|n| run(&scenario(dmu, 1.0, n)).unwrap().success_fraction).collect();
        assert!(fractions.windows(2).all(|w| w[1] >= w[0] - 0.02), "{fractions:?}");
    }
}

#[test]
fn small_samples_reduce_success() {
    let one = verify_disparity_reversal(&scenario(0.2, 1.0, 1).spec, &scenario(0.2, 1.0, 1).prior, &scenario(0.2, 1.0, 1).training, 1000)
        .unwrap();
    let big = scenario(0.2, 1.0, 200);
    let big = verify_disparity_reversal(&big.spec, &big.prior, &big.training, 1000).unwrap();
    assert!(one.success_fraction < big.success_fraction);

    let two = scenario(0.5, 1.0, 2);
    let two = verify_tradeoff_reversal(&two.spec, &two.prior, &two.training, 1000, 0.25).unwrap();
    let big = scenario(0.5, 1.0, 200);
    let big = verify_tradeoff_reversal(&big.spec, &big.prior, &big.training, 1000, 0.25).unwrap();
    assert!(two.success_fraction < big.success_fraction - 0.1, "{} vs {}", two.success_fraction, big.success_fraction);
}

#[test]
fn reordering_holds_and_blind_machine_is_never_disparate() {
    let s = scenario(0.2, 1.0, 200);
    let out = verify_reordering(&s.spec, &s.prior, &s.training, 1000).unwrap();
    assert!(out.success_fraction >= 0.95, "{}", out.summary_line(0.95));
    assert_eq!(out.check("f_minus_disparity_zero"), Some(1.0));

    let s = scenario(0.2, 1.0, 4);
    let out = verify_reordering(&s.spec, &s.prior, &s.training, 1000).unwrap();
    assert_eq!(out.check("f_plus_over_f_minus"), Some(1.0));
}

#[test]
fn tradeoff_reversal_holds_balanced_and_mildly_unbalanced() {
    let s = scenario(0.5, 1.0, 200);
    let out = verify_tradeoff_reversal(&s.spec, &s.prior, &s.training, 1000, 0.25).unwrap();
    assert!(out.success_fraction >= 0.95, "{}", out.summary_line(0.95));
    assert!(out.notes.is_empty());

    let mut s = scenario(0.5, 1.0, 200);
    s.training.counts = vec![CellPair::new(300, 100)];
    let out = verify_tradeoff_reversal(&s.spec, &s.prior, &s.training, 1000, 0.25).unwrap();
    assert!(!out.notes.is_empty(), "unbalanced conjugate design is flagged");
    // At 300/100 the blind bias for the majority group is only w0·Δμ = 0.125,
    // so the pointwise machine comparison still fails in about a tenth of
    // draws; ten times the data clears the standard level.
    let modest = out.success_fraction;
    s.training.counts = vec![CellPair::new(3000, 1000)];
    let out = verify_tradeoff_reversal(&s.spec, &s.prior, &s.training, 1000, 0.25).unwrap();
    assert!(out.success_fraction >= 0.95 && out.success_fraction >= modest, "{} after {modest}", out.summary_line(0.95));

    s.training.counts = vec![CellPair::new(350, 50)];
    let err = verify_tradeoff_reversal(&s.spec, &s.prior, &s.training, 10, 0.25).unwrap_err();
    assert!(err.is_precondition());
}

#[test]
fn preconditions_are_reported() {
    let s = scenario(0.0, 1.0, 200);
    let err = verify_tradeoff_reversal(&s.spec, &s.prior, &s.training, 10, 0.25).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");

    let s = scenario(1.2, 1.0, 200);
    assert!(verify_disparity_reversal(&s.spec, &s.prior, &s.training, 10).unwrap_err().is_precondition());

    let mut s = scenario(0.2, 1.0, 200);
    s.training.counts = vec![CellPair::new(300, 100)];
    assert!(verify_disparity_reversal(&s.spec, &s.prior, &s.training, 10).unwrap_err().is_precondition());
}

#[test]
fn dogmatic_unbiased_prior_is_not_disparate() {
    let s = scenario(0.0, 1.0, 200);
    let prior = Prior::Grid(GridPrior { cells: vec![GridCell::dogmatic(0.0, 0.0)] });
    assert!(verify_disparity_reversal(&s.spec, &prior, &s.training, 10).unwrap_err().is_precondition());
}

#[test]
fn machine_regimes_match_threshold() {
    let spec_at = |dmu: f64| ProblemSpec::single_covariate(CellPair::new(dmu / 2.0, -dmu / 2.0), 1.0);
    let config = TrainingConfig::balanced(8, 17);
    for (dmu, regime, blind) in [(0.8, Regime::TradeOff, 1.2225), (0.2, Regime::Dominance, 1.0725)] {
        let out = verify_machine_regimes(&spec_at(dmu), &config, 0, 20_000).unwrap();
        let r = out.regime.as_ref().unwrap();
        assert!((r.xi - 0.5).abs() < 1e-12);
        assert_eq!(r.regime, regime);
        assert!((r.machine_risks.aware - 1.125).abs() < 1e-12);
        assert!((r.machine_risks.blind - blind).abs() < 1e-12);
        assert!(out.passes(0.95), "{}", out.summary_line(0.95));
    }
    for per_group in [1, 5, 50] {
        let out = verify_machine_regimes(&spec_at(0.0), &TrainingConfig::balanced(per_group, 1), 0, 100).unwrap();
        assert_eq!(out.regime.unwrap().regime, Regime::Dominance);
    }
}

#[test]
fn example_reversal_is_exact() {
    let s = scenario(0.0, 1.0, 4);
    let out = verify_example_reversal(&s.spec, &s.prior, &s.training, 10_000).unwrap();
    assert_eq!(out.success_fraction, 1.0);
    assert!(out.passes(1.0), "{}", out.summary_line(1.0));
}

#[test]
fn example_tradeoff_follows_delta_threshold() {
    for (delta, aware_better) in [(0.75, true), (0.25, false)] {
        let s = scenario(0.0, delta, 6);
        let out = verify_example_tradeoff(&s.spec, &s.prior, &s.training, 50_000).unwrap();
        let gap = out.estimates.iter().find(|e| e.name == "assisted_risk_gap_sign").unwrap();
        assert_eq!(gap.oracle < 0.0, aware_better);
        assert!(out.passes(0.95), "{}", out.summary_line(0.95));
    }
}

#[test]
fn posterior_concentrates_at_truth() {
    let spec = ProblemSpec::single_covariate(CellPair::new(0.3, 0.0), 1.0);
    let normal = WeightedValue::discretized_normal(0.0, 1.0, 8.0, 2001);
    let prior = GridPrior { cells: vec![GridCell::Product { mu1: normal.clone(), mu0: normal }] };
    let out = verify_consistency(&prior, &spec, 0, Group::One, &[10, 100, 1000], 500, 8, 0.05).unwrap();
    let rows = out.consistency.as_ref().unwrap();
    assert!(rows[2].median_abs_error < 0.05, "{rows:?}");
    assert_eq!(out.success_fraction, 1.0);

    let dogmatic = GridPrior { cells: vec![GridCell::dogmatic(0.3, 0.0)] };
    let out = verify_consistency(&dogmatic, &spec, 0, Group::One, &[10, 100, 1000], 50, 8, 0.05).unwrap();
    assert!(out.consistency.unwrap().iter().all(|r| r.median_abs_error == 0.0));

    let spec = ProblemSpec::single_covariate(CellPair::new(0.0, 0.0), 1.0);
    let far = WeightedValue::discretized_normal(2.5, 0.05, 3.0, 101);
    let outside = GridPrior { cells: vec![GridCell::Product { mu1: far.clone(), mu0: far }] };
    let out = verify_consistency(&outside, &spec, 0, Group::One, &[10, 100, 1000], 100, 8, 0.05).unwrap();
    assert_eq!(out.success_fraction, 0.0);
    assert!(out.notes.iter().any(|n| n.contains("truth outside support")));
    assert!(out.consistency.unwrap().iter().all(|r| r.median_abs_error > 1.5));
}

#[test]
fn outcomes_are_reproducible() {
    let s = scenario(0.2, 1.0, 20);
    let a = verify_reordering(&s.spec, &s.prior, &s.training, 500).unwrap();
    let b = verify_reordering(&s.spec, &s.prior, &s.training, 500).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
