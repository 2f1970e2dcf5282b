//! Hyperbolic graph collaborative filtering on the Lorentz hyperboloid.
//!
//! Users and items live in tangent space at the hyperboloid origin. A few
//! rounds of mean aggregation over the bipartite interaction graph are
//! sum-pooled, centered on their mean (the root), and mapped onto the
//! hyperboloid. Training minimizes a margin loss on squared geodesic
//! distances plus a term that pushes the centered embeddings away from the
//! root.

pub mod config;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod manifold;
pub mod objective;
pub mod optim;
pub mod oracle;
pub mod train;

pub use config::TrainConfig;
pub use encoder::{encode, init_embeddings, EmbeddingTable, EncoderOutput};
pub use error::{HrcfError, Result};
pub use eval::{evaluate, EvalResult};
pub use graph::{InteractionGraph, InteractionRecord, SyntheticGraphSpec};
pub use manifold::{
    distance_ratio_diagnostic, exp_origin, geodesic_distance, log_origin, lorentz_inner, HyperbolicPoint,
    TangentVector,
};
pub use objective::{loss_and_grad, total_loss, LossReport, ObjectiveParams, Triplet, TripletBatch};
pub use optim::OptimizerState;
pub use train::{train, DataSource, RunRecord};
