// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod mode_solver;
pub mod observables;
pub mod profiles;
pub mod states;
mod stencil;
pub mod verification;
