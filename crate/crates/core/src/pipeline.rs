//! End-to-end fit and predict over relation instances.

use std::time::{Duration, Instant};

use crate::classifier::{train_ovr_with, Model, TrainConfig};
use crate::corpus::RelationInstance;
use crate::error::Result;
use crate::featurizer::{vectorize_all, Families, Family, FeatureSpace, LabelMode};
use crate::par::Execution;
use crate::resources::Resources;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitTimings {
    pub featurize: Duration,
    pub train: Duration,
}

/// Embedding dimension and cluster count a space should be built with.
pub fn resource_dims(families: Families, resources: &Resources) -> (usize, usize) {
    let embed_dim = match (&resources.embeddings, families.contains(Family::Embedding)) {
        (Some(t), true) => t.dim(),
        _ => 0,
    };
    let num_clusters = match (&resources.clusters, families.contains(Family::Cluster)) {
        (Some(c), true) => c.num_classes(),
        _ => 0,
    };
    (embed_dim, num_clusters)
}

/// Builds the feature space (expanded with `extra` when non-empty),
/// vectorizes `train` and trains the one-vs-rest model.
pub fn fit(
    train: &[RelationInstance],
    extra: &[RelationInstance],
    families: Families,
    resources: &Resources,
    config: &TrainConfig,
    exec: Execution,
) -> Result<(Model, FitTimings)> {
    let start = Instant::now();
    let (embed_dim, num_clusters) = resource_dims(families, resources);
    let space = FeatureSpace::build(train, extra, families, embed_dim, num_clusters)?;
    let vectors = vectorize_all(train, &space, resources, LabelMode::Train, exec)?;
    let featurize = start.elapsed();

    let start = Instant::now();
    let model = train_ovr_with(&vectors, &space, config, exec)?;
    let train_time = start.elapsed();
    Ok((
        model,
        FitTimings {
            featurize,
            train: train_time,
        },
    ))
}

pub fn predict_instances(
    model: &Model,
    instances: &[RelationInstance],
    resources: &Resources,
    exec: Execution,
) -> Result<Vec<String>> {
    let vectors = vectorize_all(instances, &model.space, resources, LabelMode::Predict, exec)?;
    vectors
        .iter()
        .map(|x| model.predict(x).map(str::to_string))
        .collect()
}
