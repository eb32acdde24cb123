//! Behavioral similarity analysis of mobility traces.
//!
//! A trace of `(node, location, start, end)` sessions becomes, per user, a
//! slot-by-location association matrix. Its SVD yields a small set of weighted
//! "eigen-behaviors"; users are compared by the weighted absolute inner
//! products of those vectors. The resulting similarity scores feed a
//! thresholded graph, community detection, network metrics and a dendrogram.
//!
//! The [`mobility`] module produces synthetic traces in the same format from
//! Random Direction and time-variant community models, and [`pipeline`] runs
//! the whole chain from one config.

pub mod community;
pub mod error;
pub mod mobility;
pub mod pipeline;
pub mod profile;
pub mod similarity;
pub mod trace_io;

pub use community::{
    cut_dendrogram, edge_betweenness, girvan_newman, hierarchical_dendrogram, modularity,
    Dendrogram, GirvanNewman, Partition,
};
pub use error::{Error, Result};
pub use mobility::{
    assign_communities, generate_random_direction, generate_tvc, AssignmentMode,
    CommunityAssignment, RdConfig, TvcConfig, WorldGrid,
};
pub use nalgebra;
pub use profile::{
    build_association_matrix, build_profile, compute_svd, AssociationMatrix, BehavioralProfile,
    SvdResult,
};
pub use similarity::{
    build_similarity_graph, pairwise_similarity, similarity_matrix, SimilarityGraph,
    SimilarityMatrix,
};
pub use trace_io::{parse_sessions, SessionRecord, TimeWindow, Trace};
