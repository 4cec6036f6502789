//! Every functional the analysis controls: the entropy-energy ledger, the
//! conservation and envelope reports, escape probabilities, Monte-Carlo
//! moment estimates, and the pathwise-uniqueness functionals.

mod ledger;
mod reports;
mod uniqueness;

pub use ledger::{entropy_row, g_terms, BudgetParams, EntropyLedgerRow, GTerms, StepWork};
pub use reports::{
    cor32_bound, escape_probability, lemma31_check, moment_estimates, BoundReport, EscapeReport,
    InvariantReport, InvariantTolerances, MomentEstimate, MomentReport, MIN_ENSEMBLE,
};
pub use uniqueness::{uniqueness_metrics, UniquenessMetrics};
