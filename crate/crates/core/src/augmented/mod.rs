//! Cell decompositions, augmented clusters and boundary-relation laws.

pub mod cells;
pub mod cluster;
pub mod compare;
pub mod relation;

pub use cells::{
    build_cells, build_cells_with_centres, maximal_separated, subdivide, CellDecomposition, CellsFile, Subdivision,
    Violation,
};
pub use cluster::{augmented_cluster, explore, sample_augmented, AugSample};
pub use compare::{certify_cells, compare_pc_aug, CertRow, CertifyReport, corner_grid, ring, s_p, subdivided_cover, torus, AugCompareReport, AugFixture, AugRow};
pub use relation::{
    boundary_relation, enumerate_cell, max_delta, relation_distribution, relation_dominates, BoundaryRelation,
    CellEnumeration, DeltaReport, RelationDistribution, Variant, DEFAULT_RELATION_CAP,
};
