//! Grids, quadrature, stencils and time integrators.

mod age;
mod grid;
mod history;
mod stencil;
mod trajectory;

pub use age::{AgeField, AgeGrid};
pub use grid::{inner_product, quad_circle, CircleGrid, Field};
pub use history::{history_advance, history_weighted_sum, HistorySegment, StructuralState};
pub use stencil::{
    cn_step, sl_apply, sl_apply_reference, solve_cyclic_tridiagonal, solve_tridiagonal, SlOperator,
};
pub use trajectory::Trajectory;
