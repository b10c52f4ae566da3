//! Predicted asymptotic constants and reports comparing them with oracle
//! or simulated measurements.

mod constants;
mod report;

pub use constants::{
    constants, convolution_prediction, finite_constant, finite_constant_remainder, lambda_partial_sums, local_constant,
    stopped_constant, AsymptoticConstants, LambdaRow, TailComponent,
};
pub use report::{
    convergence_report, tail_level_grid, ConvergenceReport, ConvergenceRow, Provenance, Verdict, DEFAULT_REPORT_TOL,
};
