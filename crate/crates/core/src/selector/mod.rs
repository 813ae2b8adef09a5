//! Gradient-matching subset selection and reference baselines.

mod baselines;
mod gradients;
mod io;
mod omp;
mod redor;

pub use baselines::{baseline_select, trajectory_td_error, BaselineMethod};
pub use gradients::{build_gradient_table, trajectory_gradient, GradientTable};
pub use io::{
    parse_selection, read_selection, selection_to_string, write_selection, SelectionFile, SELECTION_FORMAT_VERSION,
};
pub use omp::{omp_select, residual_error, residual_error_reg, Dictionary, Selection, SelectorConfig, SupportFit};
pub use redor::{merge_rounds, redor, redor_with_threads, select_round, top_return_filter, RedorOutcome};
