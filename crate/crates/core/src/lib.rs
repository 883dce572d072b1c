//! Machine-assisted human decisions under group-blind and group-aware
//! predictions.
//!
//! A decision-maker with Normal beliefs about group-conditional outcome
//! means observes a machine prediction trained on finite data and updates
//! by Bayes' rule. The crate provides the predictors, the resulting
//! decision rules, disparity and risk metrics, closed forms for the
//! balanced conjugate example, and Monte Carlo verifiers for the ordering
//! claims relating them.
//!
//! ```
//! use assistfair::model::ExampleParams;
//! use assistfair::oracle::example_closed_forms;
//! use assistfair::RuleKind;
//!
//! let params = ExampleParams {
//!     sigma_sq: 1.0, tau_sq: 1.0, n: 8, delta: 1.0,
//!     delta_mu: 0.0, beta_bar: 0.0, mu_bar: 0.0,
//! };
//! let table = example_closed_forms(&params).unwrap();
//! assert_eq!(table.row(RuleKind::FMinus).expected_risk, 1.125);
//! ```

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decisions;
pub mod error;
pub mod mc;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod predictors;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    CellPair, ConjugateNormalPrior, Covariate, DecisionRule, GridPrior, Group, Prior, ProblemSpec, RuleKind,
    TrainingConfig, TrainingSet,
};

/// Book chapters compiled as doc-tests so their snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/predictors.md")]
    mod predictors {}
    #[doc = include_str!("../../../book/src/decisions.md")]
    mod decisions {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/closed-forms.md")]
    mod closed_forms {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
