//! Wasserstein distances between probability measures.

pub mod one_d;
pub mod sliced;
pub mod transport;

pub use one_d::{w1_cdf, w1_to_analytic_cdf, wp_quantile, wp_to_analytic, wp_to_law};
pub use sliced::{max_sliced_wp, projected_wp, sliced_wp, MaxSlicedEstimate, SlicedConfig, SlicedEstimate};
pub use transport::{solve_transport, wp_exact, PlanEntry, TransportPlan, EXACT_CELL_LIMIT};
