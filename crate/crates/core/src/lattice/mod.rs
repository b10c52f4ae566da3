//! Lattice oracles: discretisation of an increment law onto a uniform grid
//! and dynamic programs for the laws of the maxima `M`, `M_n` and the
//! maximum stopped at the first descending epoch, with certified truncation
//! bounds.

mod convolve;
mod kernel;
mod maxlaw;
mod passage;
mod pmf;
mod stopped;

pub use convolve::{
    convolution_power_tail, convolution_power_tail_with, convolve, convolve_power, convolve_power_with, convolve_with,
    ConvolutionMethod, PowerTailRow,
};
pub use maxlaw::{
    exp_moment, finite_horizon, finite_horizon_with, lindley_fixed_point, lindley_fixed_point_with, LindleyOptions,
    MaxLaw, ReflectedWalk, DEFAULT_MAX_ITER, DEFAULT_TOL, EXP_MOMENT_TOL,
};
pub use passage::{
    bigjump_oracle, first_passage_landing, partial_sum_laws, passage_lower_cutoff, BigJumpOracle, LandingLaw,
    PartialSumLaw,
};
pub use pmf::{
    default_span, default_step, default_top, discretize, floor_index, lattice_for, snap, top_covering, LatticePmf,
    TailCertificate, FOLD_LIMIT,
};
pub use stopped::{stopped_max_sigma1, stopped_max_sigma1_partial, StoppedLaw, StoppedTail};
