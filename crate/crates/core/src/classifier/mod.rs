//! One-vs-rest multiclass linear SVM.

mod model_io;
mod solver;

pub use model_io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use solver::{max_projected_gradient, primal_objective, solve_binary_dual_cd, BinarySolution};

use crate::error::{Error, Result};
use crate::featurizer::{FeatureSpace, FeatureVector};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub cost: f64,
    /// Stopping tolerance on the largest projected-gradient violation.
    pub eps: f64,
    pub max_outer_iters: usize,
    pub seed: u64,
    /// Append a constant-1 feature.
    pub bias: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            cost: 0.1,
            eps: 0.1,
            max_outer_iters: 1000,
            seed: 0,
            bias: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::Config(format!("cost must be positive, got {}", self.cost)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::Config("max_outer_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub space: FeatureSpace,
    /// One row per label of `space`, each `space.dim()` long plus the bias
    /// weight when `config.bias` is set.
    pub weights: Vec<Vec<f64>>,
    pub config: TrainConfig,
}

impl Model {
    pub fn new(space: FeatureSpace, weights: Vec<Vec<f64>>, config: TrainConfig) -> Result<Model> {
        if weights.len() != space.num_labels() {
            return Err(Error::Model(format!(
                "{} weight rows for {} labels",
                weights.len(),
                space.num_labels()
            )));
        }
        let width = space.dim() + usize::from(config.bias);
        if let Some(row) = weights.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: row.len(),
            });
        }
        Ok(Model { space, weights, config })
    }

    pub fn decision_values(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        let dim = self.space.dim();
        if x.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim,
            });
        }
        Ok(self
            .weights
            .iter()
            .map(|w| x.dot(w) + if self.config.bias { w[dim] } else { 0.0 })
            .collect())
    }

    /// Class id with the largest decision value; ties go to the lowest id.
    pub fn predict_id(&self, x: &FeatureVector) -> Result<usize> {
        let scores = self.decision_values(x)?;
        argmax(&scores).ok_or_else(|| Error::Model("model has no classes".into()))
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<&str> {
        let id = self.predict_id(x)?;
        Ok(self.space.label(id).expect("weight rows match labels"))
    }
}

pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Trains one binary classifier per label of `space`.
pub fn train_ovr(data: &[FeatureVector], space: &FeatureSpace, config: &TrainConfig) -> Result<Model> {
    train_ovr_with(data, space, config, Execution::default())
}

pub fn train_ovr_with(
    data: &[FeatureVector],
    space: &FeatureSpace,
    config: &TrainConfig,
    exec: Execution,
) -> Result<Model> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let labels: Vec<usize> = data
        .iter()
        .map(|x| x.label.ok_or(Error::MissingLabel))
        .collect::<Result<_>>()?;
    let mut distinct = labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewClasses(distinct.len()));
    }
    if let Some(&bad) = distinct.iter().find(|&&l| l >= space.num_labels()) {
        return Err(Error::UnknownLabel(format!("class id {bad}")));
    }

    let rows = exec.map_range(space.num_labels(), |class| {
        let polarity: Vec<f64> = labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        solve_binary_dual_cd(data, &polarity, config).map(|s| s.weights)
    });
    let weights = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Model::new(space.clone(), weights, config.clone())
}
