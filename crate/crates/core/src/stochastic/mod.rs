//! Sampling from the invariant measure and statistical checks.

mod exec;
mod experiments;
mod measure;
mod report;
mod rng;

pub use exec::{pairwise_sum, MeanEstimate, SampleExecutor, Sequential};
pub use experiments::{
    analytic_var_p, analytic_var_q, lowerbound_scan, smooth_data_experiment, smooth_profile,
    trace_identity, verify_constraint_energy, verify_covariance, verify_theorem1, verify_theorem2,
    Theorem2Config, MIN_SAMPLES,
};
pub use measure::GaussianMeasure;
pub use report::{Estimate, ExperimentReport, ParamValue, Threshold, Verdict};
pub use rng::{NormalSource, RngStream};
