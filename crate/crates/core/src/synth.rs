//! Synthetic corpora with a planted signal, for tests and benchmarks.
//!
//! Each instance's label is a function of its first inner word (the entity-1
//! context word). Entity heads and remaining inner words are label-neutral;
//! inner words mix cue words into the filler so that a cue seen at some slot
//! says little about the label.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{split_label, RelationInstance};
use crate::resources::{ClusterMap, EmbeddingTable, Resources};

const RELATION_TYPES: [&str; 6] = ["USAGE", "MODEL-FEATURE", "PART_WHOLE", "RESULT", "TOPIC", "COMPARE"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub instances: usize,
    pub labels: usize,
    pub filler_vocab: usize,
    pub entity_vocab: usize,
    pub cues_per_label: usize,
    pub min_inner: usize,
    pub max_inner: usize,
    /// Probability that a non-initial inner word is a cue rather than filler.
    pub noise_cue_rate: f64,
    pub embed_dim: usize,
    pub num_clusters: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            instances: 1000,
            labels: 4,
            filler_vocab: 2000,
            entity_vocab: 300,
            cues_per_label: 8,
            min_inner: 1,
            max_inner: 20,
            noise_cue_rate: 0.5,
            embed_dim: 16,
            num_clusters: 50,
            seed: 0,
        }
    }
}

/// Directed label names: `USAGE`, `USAGE REVERSE`, `MODEL-FEATURE`, ...
pub fn label_names(n: usize) -> Vec<String> {
    RELATION_TYPES
        .iter()
        .flat_map(|t| [t.to_string(), format!("{t} REVERSE")])
        .cycle()
        .enumerate()
        .map(|(i, l)| if i < 12 { l } else { format!("{l}{}", i / 12) })
        .take(n)
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub instances: Vec<RelationInstance>,
    pub resources: Resources,
}

impl SyntheticCorpus {
    pub fn generate(config: &SynthConfig) -> SyntheticCorpus {
        assert!(config.labels >= 1 && config.cues_per_label >= 1);
        assert!(config.min_inner >= 1 && config.min_inner <= config.max_inner);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let labels = label_names(config.labels);
        let cues: Vec<Vec<String>> = (0..config.labels)
            .map(|l| (0..config.cues_per_label).map(|j| format!("cue{l}x{j}")).collect())
            .collect();
        let all_cues: Vec<&String> = cues.iter().flatten().collect();
        let filler: Vec<String> = (0..config.filler_vocab).map(|i| format!("w{i}")).collect();
        let entities: Vec<String> = (0..config.entity_vocab).map(|i| format!("Ent_{i}")).collect();

        let instances = (0..config.instances)
            .map(|i| {
                let label = rng.gen_range(0..config.labels);
                let inner_len = rng.gen_range(config.min_inner..=config.max_inner);
                let mut tokens = Vec::with_capacity(inner_len + 2);
                tokens.push(entities.choose(&mut rng).unwrap().clone());
                tokens.push(cues[label].choose(&mut rng).unwrap().clone());
                for _ in 1..inner_len {
                    let word = if rng.gen_bool(config.noise_cue_rate) || filler.is_empty() {
                        all_cues.choose(&mut rng).unwrap().as_str()
                    } else {
                        filler.choose(&mut rng).unwrap().as_str()
                    };
                    tokens.push(word.to_string());
                }
                tokens.push(entities.choose(&mut rng).unwrap().clone());
                let abstract_id = format!("S{i:05}");
                RelationInstance {
                    e1_id: format!("{abstract_id}.1"),
                    e2_id: format!("{abstract_id}.2"),
                    abstract_id,
                    sentence_len: tokens.len(),
                    tokens,
                    label: Some(labels[label].clone()),
                }
            })
            .collect();

        let mut embeddings = EmbeddingTable::new(config.embed_dim.max(1)).unwrap();
        let mut clusters = ClusterMap::new(config.num_clusters.max(1));
        for word in filler.iter().chain(&entities).chain(all_cues.iter().copied()) {
            let v = (0..embeddings.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            embeddings.insert(word.clone(), v).unwrap();
            clusters.insert(word.clone(), rng.gen_range(0..clusters.num_classes())).unwrap();
        }

        SyntheticCorpus {
            instances,
            resources: Resources {
                embeddings: Some(embeddings),
                clusters: Some(clusters),
            },
        }
    }

    /// One `<text>` element per instance, entity heads written with spaces.
    pub fn abstracts_text(&self) -> String {
        let mut out = String::from("<doc>\n");
        for inst in &self.instances {
            let inner = inst.inner().join(" ");
            let _ = writeln!(
                out,
                "<text id=\"{id}\"><abstract><entity id=\"{e1}\">{s1}</entity> {inner} <entity id=\"{e2}\">{s2}</entity></abstract></text>",
                id = inst.abstract_id,
                e1 = inst.e1_id,
                e2 = inst.e2_id,
                s1 = inst.e1_token().replace('_', " "),
                s2 = inst.e2_token().replace('_', " "),
            );
        }
        out.push_str("</doc>\n");
        out
    }

    pub fn relations_text(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            let (rel_type, reversed) = split_label(inst.label.as_deref().unwrap_or(""));
            let rev = if reversed { ",REVERSE" } else { "" };
            let _ = writeln!(out, "{rel_type}({},{}{rev})", inst.e1_id, inst.e2_id);
        }
        out
    }

    pub fn embeddings_text(&self, vocab: &[String]) -> String {
        let table = self.resources.embeddings.as_ref().unwrap();
        let mut out = format!("{} {}\n", vocab.len(), table.dim());
        for word in vocab {
            out.push_str(word);
            for v in table.lookup(word) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn clusters_text(&self, vocab: &[String]) -> String {
        let clusters = self.resources.clusters.as_ref().unwrap();
        let mut out = String::new();
        for word in vocab {
            if let Some(id) = clusters.get(word) {
                let _ = writeln!(out, "{word}\t{id}");
            }
        }
        out
    }

    /// Distinct tokens in instance order.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.instances
            .iter()
            .flat_map(|i| &i.tokens)
            .filter(|t| seen.insert(t.as_str()))
            .cloned()
            .collect()
    }
}
