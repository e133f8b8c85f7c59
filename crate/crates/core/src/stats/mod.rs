//! Resampling, correlation, log-odds and regression analyses.

pub mod bootstrap;
pub mod correlation;
pub mod dynamics;
pub mod features;
pub mod logit;
pub mod logodds;
pub mod roles;

pub use bootstrap::{bootstrap_ci, bootstrap_multi, BootstrapConfig, Interval};
pub use correlation::{signed_rank_variance, spearman, Correlation};
pub use dynamics::{gender_thread_shares, DynamicsConfig, ThreadShares};
pub use features::{
    correlate_features, parse_feature_csv, CorrelationReport, FeatureCorrelation, FeatureTable,
};
pub use logit::{multinomial_logit, LogitDesign, LogitResult};
pub use logodds::{
    calibrate_prior, log_odds, stouffer, tokenize, weighted_logodds, DocumentCorpus, Group,
    TermCounts,
};
pub use roles::{role_distributions, role_observations, Role, RoleDistributions, RoleObservation};
