//! Determinable, interpretable node representations for bipartite networks
//! and weighted-diffusion link prediction built on them.
//!
//! The crate covers the full experiment pipeline:
//!
//! - [`graph`]: interaction-file parsing, the bipartite graph, and its
//!   symmetric augmented adjacency matrix;
//! - [`mod@split`]: seeded train/eval/test realizations;
//! - [`hindex`]: the H-index operator, its synchronous iteration to
//!   coreness, and the k-core oracle;
//! - [`spectral`]: symmetric eigendecomposition into rank-one idempotents;
//! - [`embed`]: H-index sequence representations (method one) and spectral
//!   entropy representations (method two);
//! - [`mod@similarity`] and [`diffusion`]: the similarity metrics, the weight
//!   pipeline (max-min normalization, proportioning), and the one-round
//!   diffusion predictors;
//! - [`eval`]: top-N lists, Recall/MRR/NDCG, and aggregation;
//! - [`experiment`]: end-to-end runs and combination sweeps with
//!   deterministic report files.
//!
//! Every numerical routine is generic over the scalar type; `f64` aliases
//! for the main artifacts live at the crate root.

pub mod diffusion;
pub mod embed;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod hindex;
pub mod scalar;
pub mod similarity;
pub mod spectral;
pub mod split;

pub use diffusion::{
    aiprobs_predict, aiprobs_predict_from_similarity, aiprobs_weights, diffusion_operator,
    iterate_to_fixpoint, maxmin_normalize, probs_predict, probs_weights, proportioning,
    pure_dhc_predict, Axis, CombinationConfig, Normalization, PredictionMatrix, Proportioning,
    WeightPair,
};
pub use embed::{
    dhc_entropy, method_one_representations, method_two_representations, EmbeddingVector,
    RepresentationMatrix, SpectralMode,
};
pub use error::{Error, Result};
pub use eval::{
    aggregate, mrr_at_n, ndcg_at_n, recall_at_n, top_n, top_n_streaming, GroundTruth, MetricReport,
    RecommendationLists,
};
pub use experiment::{run_experiment, run_matrix, Model, Representation, RunConfig};
pub use graph::{
    augment, parse_interactions, AugmentedMatrix, BipartiteGraph, InteractionRecord, ParseOptions,
};
pub use hindex::{
    coreness, h_index_sequences, h_operator, weighted_h_index_sequences, HIndexTable,
};
pub use scalar::Real;
pub use similarity::{similarity, Metric, SimilarityMatrix};
pub use spectral::{
    spectral_decompose, spectral_decompose_matrix, symmetric_eigen, SpectralDecomposition,
};
pub use split::{realizations, split, SplitRealization, DEFAULT_RATIOS};

/// Default working precision.
pub type DefaultScalar = f64;

pub type HIndexTable64 = hindex::HIndexTable<f64>;
pub type EmbeddingVector64 = embed::EmbeddingVector<f64>;
pub type RepresentationMatrix64 = embed::RepresentationMatrix<f64>;
pub type SpectralDecomposition64 = spectral::SpectralDecomposition<f64>;
pub type AugmentedMatrix64 = graph::AugmentedMatrix<f64>;
pub type SimilarityMatrix64 = similarity::SimilarityMatrix<f64>;
pub type WeightPair64 = diffusion::WeightPair<f64>;
pub type PredictionMatrix64 = diffusion::PredictionMatrix<f64>;
pub type MetricReport64 = eval::MetricReport<f64>;
