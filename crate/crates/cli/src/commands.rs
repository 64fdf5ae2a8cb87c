use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use relsvm_core::corpus::{
    extract_instances, parse_abstracts, parse_pairs, parse_relations, split_label, EntityPair, RelationLabel,
};
use relsvm_core::evaluation::cross_validate_with;
use relsvm_core::featurizer::{vectorize_all, LabelMode};
use relsvm_core::pipeline::{fit, predict_instances};
use relsvm_core::resources::{load_clusters, load_embeddings};
use relsvm_core::{load_model, save_model, score, CvConfig, Execution, Families, Family, RelationInstance, Resources};

use crate::config::{require, CliError, CliResult, RunConfig};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Prefixes core errors with the file they came from.
fn in_file<T>(path: &Path, result: relsvm_core::Result<T>) -> CliResult<T> {
    result.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_err(path: Option<&Path>, e: std::io::Error) -> CliError {
    match path {
        Some(p) => CliError::Data(format!("{}: {e}", p.display())),
        None => CliError::Data(e.to_string()),
    }
}

fn load_instances(abstracts: &Path, pairs: Vec<EntityPair>) -> CliResult<Vec<RelationInstance>> {
    let docs = in_file(abstracts, parse_abstracts(open(abstracts)?))?;
    in_file(abstracts, extract_instances(&docs, &pairs))
}

fn load_labeled(config: &RunConfig) -> CliResult<Vec<RelationInstance>> {
    let abstracts = require(&config.abstracts, "abstracts")?;
    let relations = require(&config.relations, "relations")?;
    let labels = in_file(relations, parse_relations(open(relations)?))?;
    load_instances(abstracts, labels.iter().map(EntityPair::from).collect())
}

/// Loads the resources the enabled families need. `num_clusters` pins the
/// cluster count instead of inferring it from the file.
fn load_resources(config: &RunConfig, families: Families, num_clusters: Option<usize>) -> CliResult<Resources> {
    let mut resources = Resources::default();
    if families.contains(Family::Embedding) {
        let path = config
            .embeddings
            .as_deref()
            .ok_or_else(|| CliError::Usage("embedding features are enabled but --embeddings is missing".into()))?;
        resources.embeddings = Some(in_file(path, load_embeddings(open(path)?))?);
    }
    if families.contains(Family::Cluster) {
        let path = config
            .clusters
            .as_deref()
            .ok_or_else(|| CliError::Usage("cluster features are enabled but --clusters is missing".into()))?;
        resources.clusters = Some(in_file(path, load_clusters(open(path)?, num_clusters))?);
    }
    Ok(resources)
}

pub fn train(config: &RunConfig, dump_vectors: Option<&Path>) -> CliResult<()> {
    let model_path = require(&config.model, "model")?;
    let instances = load_labeled(config)?;
    let resources = load_resources(config, config.families, None)?;

    let extra = match (&config.test_abstracts, &config.test_relations) {
        (Some(a), Some(r)) if config.transductive => load_instances(a, in_file(r, parse_pairs(open(r)?))?)?,
        (Some(_), Some(_)) | (None, None) => Vec::new(),
        _ => {
            return Err(CliError::Usage(
                "--test-abstracts and --test-relations must be given together".into(),
            ))
        }
    };

    let (model, timings) = fit(
        &instances,
        &extra,
        config.families,
        &resources,
        &config.train,
        Execution::default(),
    )?;
    let mut sink = create(model_path)?;
    save_model(&model, &mut sink)?;
    sink.flush().map_err(|e| write_err(Some(model_path), e))?;

    if let Some(path) = dump_vectors {
        let vectors = vectorize_all(&instances, &model.space, &resources, LabelMode::Train, Execution::default())?;
        let mut out = create(path)?;
        for v in &vectors {
            writeln!(out, "{}", v.to_sparse_text()).map_err(|e| write_err(Some(path), e))?;
        }
        out.flush().map_err(|e| write_err(Some(path), e))?;
    }

    println!(
        "trained on {} instances ({} unlabeled for vocabulary): k={} dim={} classes={} families={} featurize={:.3}s train={:.3}s",
        instances.len(),
        extra.len(),
        model.space.k(),
        model.space.dim(),
        model.space.num_labels(),
        model.space.families(),
        timings.featurize.as_secs_f64(),
        timings.train.as_secs_f64(),
    );
    Ok(())
}

/// `TYPE(ID1,ID2)` or `TYPE(ID1,ID2,REVERSE)`.
pub fn answer_line(e1: &str, e2: &str, label: &str) -> String {
    let (rel_type, reversed) = split_label(label);
    RelationLabel {
        rel_type: rel_type.to_string(),
        e1: e1.to_string(),
        e2: e2.to_string(),
        reversed,
    }
    .to_string()
}

pub fn predict(config: &RunConfig) -> CliResult<()> {
    let model_path = require(&config.model, "model")?;
    let abstracts = require(&config.abstracts, "abstracts")?;
    let pairs_path = require(&config.relations, "relations")?;
    let model = in_file(model_path, load_model(open(model_path)?))?;
    let space = &model.space;
    let pinned = space.families().contains(Family::Cluster).then(|| space.num_clusters());
    let resources = load_resources(config, space.families(), pinned)?;

    let pairs = in_file(pairs_path, parse_pairs(open(pairs_path)?))?;
    let instances = load_instances(abstracts, pairs)?;
    let labels = predict_instances(&model, &instances, &resources, Execution::default())?;

    let mut text = String::new();
    for (inst, label) in instances.iter().zip(&labels) {
        text.push_str(&answer_line(&inst.e1_id, &inst.e2_id, label));
        text.push('\n');
    }
    match config.out.as_deref() {
        Some(path) => std::fs::write(path, text).map_err(|e| write_err(Some(path), e))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| write_err(None, e))?,
    }
    log::info!("wrote {} predictions", labels.len());
    Ok(())
}

pub fn cv(config: &RunConfig) -> CliResult<()> {
    let instances = load_labeled(config)?;
    let resources = load_resources(config, config.families, None)?;
    let cv_config = CvConfig {
        folds: config.folds,
        seed: config.train.seed,
        families: config.families,
        train: config.train.clone(),
        transductive: config.transductive,
    };
    let report = cross_validate_with(&instances, &cv_config, &resources, Execution::default())?;
    println!(
        "{}-fold cross-validation on {} instances, families={}",
        config.folds,
        instances.len(),
        config.families
    );
    print!("{}", report.render_text());
    print!("{}", report.render_kv());
    Ok(())
}

pub fn score_files(gold_path: &Path, pred_path: &Path) -> CliResult<()> {
    let gold = in_file(gold_path, parse_relations(open(gold_path)?))?;
    let pred = in_file(pred_path, parse_relations(open(pred_path)?))?;

    let mut predicted: HashMap<(&str, &str), String> = HashMap::new();
    for r in &pred {
        if predicted.insert((&r.e1, &r.e2), r.label()).is_some() {
            return Err(CliError::Data(format!(
                "{}: pair ({},{}) appears twice",
                pred_path.display(),
                r.e1,
                r.e2
            )));
        }
    }
    let mut gold_labels = Vec::with_capacity(gold.len());
    let mut pred_labels = Vec::with_capacity(gold.len());
    let mut seen = std::collections::HashSet::new();
    let mut unmatched = Vec::new();
    for r in &gold {
        if !seen.insert((r.e1.as_str(), r.e2.as_str())) {
            return Err(CliError::Data(format!(
                "{}: pair ({},{}) appears twice",
                gold_path.display(),
                r.e1,
                r.e2
            )));
        }
        match predicted.get(&(r.e1.as_str(), r.e2.as_str())) {
            Some(label) => {
                gold_labels.push(r.label());
                pred_labels.push(label.clone());
            }
            None => unmatched.push(format!("({},{}) only in {}", r.e1, r.e2, gold_path.display())),
        }
    }
    for r in &pred {
        if !seen.contains(&(r.e1.as_str(), r.e2.as_str())) {
            unmatched.push(format!("({},{}) only in {}", r.e1, r.e2, pred_path.display()));
        }
    }
    if !unmatched.is_empty() {
        return Err(CliError::Data(format!("pair sets differ: {}", unmatched.join("; "))));
    }
    let report = score(&gold_labels, &pred_labels)?;
    print!("{}", report.render_text());
    print!("{}", report.render_kv(""));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_lines() {
        assert_eq!(
            answer_line("E89-1006.1", "E89-1006.2", "MODEL-FEATURE REVERSE"),
            "MODEL-FEATURE(E89-1006.1,E89-1006.2,REVERSE)"
        );
        assert_eq!(answer_line("A.1", "A.2", "USAGE"), "USAGE(A.1,A.2)");
    }

    #[test]
    fn answer_lines_parse_back() {
        let line = answer_line("X.3", "X.7", "PART_WHOLE REVERSE");
        let parsed = relsvm_core::corpus::parse_relations_str(&line).unwrap();
        assert_eq!(parsed[0].label(), "PART_WHOLE REVERSE");
        assert_eq!((parsed[0].e1.as_str(), parsed[0].e2.as_str()), ("X.3", "X.7"));
    }
}
