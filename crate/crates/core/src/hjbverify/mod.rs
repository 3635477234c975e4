//! Model-agnostic checks of a closed-form solution: HJB residual sampling,
//! value matching with an analytic tail, dynamic-programming consistency,
//! transversality, and a brute-force dynamic-programming value bracket.

mod matching;
mod oracle;
mod report;
mod residual;

pub use matching::{
    dpp_check, suboptimal_check, transversality, value_match, value_match_along, DppCheck, SuboptimalScore, Transversality,
    ValueMatch,
};
pub use oracle::{brute_force_value, settled_start, DelayDp, DpOptions, DpProblem, OracleReport};
pub use report::{Check, VerifyReport};
pub use residual::{sample_residuals, ResidualStats};
