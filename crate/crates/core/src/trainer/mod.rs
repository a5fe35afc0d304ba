//! Per-ray Lorentz features trained against forest supervision.

mod backprop;
mod batch;
mod config;
mod embedding;
mod loss;
mod optim;

pub use batch::{enumerate_lca_triplets, sample_lca_triplets, Batch, Triplet};
pub use config::{LossConfig, RootCentroidMode, Schedule};
pub use embedding::{aggregate_ray_feature, RaySamples, TrainableEmbedding};
pub use loss::{
    compactness_loss, compute_leaf_prototypes, compute_root_centroids, gradient, lca_order_loss,
    leaf_angular_loss, loss_and_gradient, multi_image_loss_and_gradient, root_angular_loss,
    root_centroids_from_prototypes, total_loss, LossBreakdown, PointSet, PrototypeSet,
    RootCentroidSet, DEGENERATE_PROTOTYPE_NORM,
};
pub use optim::{
    lca_order_accuracy, nearest_prototype_accuracy, train, LossRecord, TrainError, TrainingImage,
};
