//! Group comparisons, logistic regression and the distribution functions
//! they rely on.

pub mod dist;
pub mod groups;
pub mod hypothesis;
pub mod logit;

pub use groups::{
    compare_groups, default_blocks, model_blocks, roc_auc, stars, CompareOptions, GroupReport, GroupRow,
    MetricsTable, ModelOptions, ModelReport, ModelSpec,
};
pub use hypothesis::{chi2_2x2, chi2_contingency, mann_whitney_u, welch_t, ChiSquare, TestResult};
pub use logit::{logistic_fit, vif, LogitModel};
