//! Finite graphs, fibrations and percolation estimates.

pub mod compare;
pub mod fibration;
pub mod graph;
pub mod reach;
pub mod sample;

pub use compare::{compare_exact, compare_mc, exact_fixtures, exact_p_grid, mc_fixtures, ExactRow, McRow, PercFixture};
pub use fibration::{
    box_projection, cycle_cover, cycle_cover_with_pendant, fibration_counterexample, is_fibration,
    lift_path_smallest, star_graph, star_graph_pi, two_floor_box, StarLift, VertexMap,
};
pub use graph::Graph;
pub use reach::{
    bernoulli_mc, estimate_pc, fibre_selection_reach_exact, fibre_selection_reach_mc, reach_exact, reach_mc,
    reach_polynomial, saw_count, MCEstimate, PcInterval, ReachPolynomial, DEFAULT_EXACT_CAP, DEFAULT_SAW_CAP,
};
pub use sample::{cluster_of, fibre_choices, fibre_selection_sample, reaches, sample_percolation, Mode, PercSample, Uniforms};
