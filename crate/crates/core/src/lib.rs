//! Relation classification with fixed-length slotted features and a
//! one-vs-rest linear SVM trained by dual coordinate descent.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`corpus`] parses annotated abstracts and relation files into
//!    [`RelationInstance`]s (entity-1 head through entity-2 head).
//! 2. [`featurizer`] freezes a [`FeatureSpace`] and turns each instance into
//!    a [`FeatureVector`] of word, shape, cluster, embedding and context
//!    features.
//! 3. [`classifier`] trains one L2-loss SVM per label.
//! 4. [`evaluation`] scores predictions and runs k-fold cross-validation.
//!
//! With the default `parallel` feature, vectorization, per-class training
//! and cross-validation folds run on rayon; see [`Execution`].

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod featurizer;
pub mod par;
pub mod pipeline;
pub mod resources;
pub mod synth;

pub use classifier::{load_model, save_model, train_ovr, Model, TrainConfig};
pub use corpus::{AbstractDoc, EntityPair, RelationInstance, RelationLabel};
pub use error::{Error, Result};
pub use evaluation::{cross_validate, kfold_split, score, CvConfig, EvaluationReport};
pub use featurizer::{Families, Family, FeatureSpace, FeatureVector};
pub use par::Execution;
pub use resources::{ClusterMap, EmbeddingTable, Resources};
