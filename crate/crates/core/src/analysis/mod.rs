//! Numerical checks of the selection guarantees and metrics export.

mod bounds;
mod brute;
mod cluster;
mod convergence;
mod descent;
mod gradcheck;
mod metrics;
mod report;
mod submodularity;
mod suite;

pub use bounds::{measure_bound_constants, BoundConstants};
pub use brute::{
    brute_force_optimum, greedy_ratio_bound, greedy_ratio_check, BruteForceOptimum, MAX_BRUTE_CANDIDATES,
    MAX_BRUTE_SUBSET,
};
pub use cluster::{cluster_bound_check, kmeans, KMEANS_ITERATIONS};
pub use convergence::{
    convergence_bound_check, optimum_proxy, subset_descent_run, transition_share_weights, ConvergenceLog, OptimumProxy,
};
pub use descent::{monotone_descent_check, QuadraticProblem, StepSchedule};
pub use gradcheck::{finite_difference, gradient_check, relative_error, FD_STEP, FD_TOLERANCE};
pub use metrics::{export_metrics, metrics_to_string, parse_metrics, read_metrics, MetricsRow, METRICS_HEADER};
pub use report::{read_reports, reports_to_string, write_reports, ProbeReport, Relation};
pub use submodularity::{submodularity_ratio_probe, subset_gains, MAX_PROBE_CANDIDATES};
pub use suite::{
    cluster_suite, convergence_suite, descent_suite, greedy_suite, probe_instance, run_probe, submodularity_suite,
    ProbeInstance, CLUSTER_COUNTS, CONVERGENCE_LR, CONVERGENCE_STEPS, DESCENT_SCHEDULES, PROBE_NAMES,
    SUBMODULARITY_LAMBDA_SCALES,
};
