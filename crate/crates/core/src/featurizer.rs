//! Fixed-length slotted featurization.
//!
//! A relation mention with at most `k` inner tokens is laid out as `k + 2`
//! slots: entity 1, padding, the inner tokens, entity 2. Padding goes right
//! after entity 1, so inner tokens are aligned against entity 2.
//!
//! Global index layout is slot-major. Each slot holds, in order and only for
//! enabled families:
//!
//! ```text
//! [word one-hot |V|+1][shape 6][cluster one-hot C+1][embedding d]
//! ```
//!
//! followed once by `[ctx1 one-hot |X|+1][ctx2 one-hot |X|+1]`. The last id of
//! every one-hot block is reserved (padding / unknown / no context).

use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;

use crate::corpus::RelationInstance;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::resources::Resources;

pub const SHAPE_FLAGS: usize = 6;

const QUOTES: [char; 7] = ['\'', '"', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '`'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Word,
    Shape,
    Cluster,
    Embedding,
    Ctx1,
    Ctx2,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Word,
        Family::Shape,
        Family::Cluster,
        Family::Embedding,
        Family::Ctx1,
        Family::Ctx2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Word => "word",
            Family::Shape => "shape",
            Family::Cluster => "cluster",
            Family::Embedding => "embedding",
            Family::Ctx1 => "ctx1",
            Family::Ctx2 => "ctx2",
        }
    }
}

/// Set of enabled feature families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Families(u8);

impl Families {
    pub const NONE: Families = Families(0);
    pub const ALL: Families = Families(0b11_1111);

    fn bit(family: Family) -> u8 {
        1 << Family::ALL.iter().position(|&f| f == family).unwrap()
    }

    pub fn of(families: &[Family]) -> Families {
        families.iter().fold(Families::NONE, |acc, &f| acc.with(f))
    }

    pub fn contains(self, family: Family) -> bool {
        self.0 & Self::bit(family) != 0
    }

    pub fn with(self, family: Family) -> Families {
        Families(self.0 | Self::bit(family))
    }

    pub fn without(self, family: Family) -> Families {
        Families(self.0 & !Self::bit(family))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Family> {
        Family::ALL.into_iter().filter(move |&f| self.contains(f))
    }

    /// Ablation presets: `all`, `no-shape`, `no-e2ctx`, `no-ctx`.
    pub fn preset(name: &str) -> Option<Families> {
        match name {
            "all" => Some(Families::ALL),
            "no-shape" => Some(Families::ALL.without(Family::Shape)),
            "no-e2ctx" => Some(Families::ALL.without(Family::Ctx2)),
            "no-ctx" => Some(Families::ALL.without(Family::Ctx1).without(Family::Ctx2)),
            _ => None,
        }
    }
}

impl Default for Families {
    /// Everything except shape.
    fn default() -> Self {
        Families::ALL.without(Family::Shape)
    }
}

impl fmt::Display for Families {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Family::name).collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

impl FromStr for Families {
    type Err = Error;

    /// Comma-separated family names, a preset name, or `none`.
    fn from_str(s: &str) -> Result<Families> {
        let s = s.trim();
        if let Some(preset) = Families::preset(s) {
            return Ok(preset);
        }
        if s == "none" {
            return Ok(Families::NONE);
        }
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .try_fold(Families::NONE, |acc, part| {
                Family::ALL
                    .into_iter()
                    .find(|f| f.name() == part)
                    .map(|f| acc.with(f))
                    .ok_or_else(|| Error::Config(format!("unknown feature family `{part}`")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ShapeFlags {
    pub has_uppercase: bool,
    pub has_comma: bool,
    pub initial_cap_and_first: bool,
    pub first_lower: bool,
    pub has_underscore: bool,
    pub has_quote: bool,
}

impl ShapeFlags {
    pub fn as_array(&self) -> [bool; SHAPE_FLAGS] {
        [
            self.has_uppercase,
            self.has_comma,
            self.initial_cap_and_first,
            self.first_lower,
            self.has_underscore,
            self.has_quote,
        ]
    }
}

/// Character-level flags of a token; `is_first` marks the first token of the
/// relation mention.
pub fn shape_signature(token: &str, is_first: bool) -> ShapeFlags {
    let first = token.chars().next();
    ShapeFlags {
        has_uppercase: token.chars().any(char::is_uppercase),
        has_comma: token.contains(','),
        initial_cap_and_first: is_first && first.is_some_and(char::is_uppercase),
        first_lower: first.is_some_and(char::is_lowercase),
        has_underscore: token.contains('_'),
        has_quote: token.contains(QUOTES),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotToken<'a> {
    Token(&'a str),
    Pad,
}

impl<'a> SlotToken<'a> {
    pub fn as_token(self) -> Option<&'a str> {
        match self {
            SlotToken::Token(t) => Some(t),
            SlotToken::Pad => None,
        }
    }
}

/// Lays an instance out over exactly `k + 2` slots. Over-long instances keep
/// the first `ceil(k/2)` and last `floor(k/2)` inner tokens.
pub fn slot_tokens(instance: &RelationInstance, k: usize) -> Vec<SlotToken<'_>> {
    let inner = instance.inner();
    let mut slots = Vec::with_capacity(k + 2);
    slots.push(SlotToken::Token(instance.e1_token()));
    if inner.len() > k {
        log::warn!(
            "instance {}-{} has {} inner tokens, truncating to {k}",
            instance.e1_id,
            instance.e2_id,
            inner.len()
        );
        let head = k.div_ceil(2);
        let tail = k / 2;
        slots.extend(inner[..head].iter().map(|t| SlotToken::Token(t)));
        slots.extend(inner[inner.len() - tail..].iter().map(|t| SlotToken::Token(t)));
    } else {
        slots.extend(std::iter::repeat_n(SlotToken::Pad, k - inner.len()));
        slots.extend(inner.iter().map(|t| SlotToken::Token(t)));
    }
    slots.push(SlotToken::Token(instance.e2_token()));
    slots
}

/// Words right of entity 1 and left of entity 2. One inner word is shared by
/// both; no inner words means no context.
pub fn context_words(instance: &RelationInstance) -> (Option<&str>, Option<&str>) {
    let inner = instance.inner();
    match (inner.first(), inner.last()) {
        (Some(first), Some(last)) => (Some(first), Some(last)),
        _ => (None, None),
    }
}

/// A decoded global feature index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Word { slot: usize, id: usize },
    Shape { slot: usize, flag: usize },
    Cluster { slot: usize, id: usize },
    Embedding { slot: usize, component: usize },
    Ctx1 { id: usize },
    Ctx2 { id: usize },
}

/// Block offsets derived from a space's sizes and enabled families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    word: Option<usize>,
    shape: Option<usize>,
    cluster: Option<usize>,
    embedding: Option<usize>,
    slot_width: usize,
    slots: usize,
    ctx1: Option<usize>,
    ctx2: Option<usize>,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    vocab: IndexSet<String>,
    ctx_vocab: IndexSet<String>,
    labels: IndexSet<String>,
    k: usize,
    families: Families,
    embed_dim: usize,
    num_clusters: usize,
    layout: Layout,
}

impl FeatureSpace {
    /// Indexes tokens and context words of `train` and `extra`, labels of
    /// `train` only. `k` is the largest inner length over both.
    pub fn build(
        train: &[RelationInstance],
        extra: &[RelationInstance],
        families: Families,
        embed_dim: usize,
        num_clusters: usize,
    ) -> Result<FeatureSpace> {
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let mut vocab = IndexSet::new();
        let mut ctx_vocab = IndexSet::new();
        let mut k = 0;
        for inst in train.iter().chain(extra) {
            for tok in &inst.tokens {
                if !vocab.contains(tok.as_str()) {
                    vocab.insert(tok.clone());
                }
            }
            let (c1, c2) = context_words(inst);
            for c in [c1, c2].into_iter().flatten() {
                if !ctx_vocab.contains(c) {
                    ctx_vocab.insert(c.to_string());
                }
            }
            k = k.max(inst.inner_len());
        }
        let mut labels: Vec<String> = train.iter().filter_map(|i| i.label.clone()).collect();
        labels.sort();
        labels.dedup();
        FeatureSpace::from_parts(
            vocab.into_iter().collect(),
            ctx_vocab.into_iter().collect(),
            labels,
            k,
            families,
            embed_dim,
            num_clusters,
        )
    }

    /// Reassembles a space from its index tables, e.g. when loading a model.
    pub fn from_parts(
        vocab: Vec<String>,
        ctx_vocab: Vec<String>,
        labels: Vec<String>,
        k: usize,
        families: Families,
        embed_dim: usize,
        num_clusters: usize,
    ) -> Result<FeatureSpace> {
        fn index(name: &str, items: Vec<String>) -> Result<IndexSet<String>> {
            let n = items.len();
            let set: IndexSet<String> = items.into_iter().collect();
            if set.len() != n {
                return Err(Error::Config(format!("duplicate entries in {name}")));
            }
            Ok(set)
        }
        if families.contains(Family::Embedding) && embed_dim == 0 {
            return Err(Error::Config("embedding family needs a positive dimension".into()));
        }
        let mut space = FeatureSpace {
            vocab: index("vocabulary", vocab)?,
            ctx_vocab: index("context vocabulary", ctx_vocab)?,
            labels: index("label set", labels)?,
            k,
            families,
            embed_dim,
            num_clusters,
            layout: Layout {
                word: None,
                shape: None,
                cluster: None,
                embedding: None,
                slot_width: 0,
                slots: 0,
                ctx1: None,
                ctx2: None,
                dim: 0,
            },
        };
        space.layout = space.compute_layout();
        Ok(space)
    }

    fn compute_layout(&self) -> Layout {
        let mut width = 0;
        let mut block = |family: Family, size: usize| {
            self.families.contains(family).then(|| {
                let offset = width;
                width += size;
                offset
            })
        };
        let word = block(Family::Word, self.word_block());
        let shape = block(Family::Shape, SHAPE_FLAGS);
        let cluster = block(Family::Cluster, self.cluster_block());
        let embedding = block(Family::Embedding, self.embed_dim);
        let slots = self.k + 2;
        let mut dim = slots * width;
        let mut ctx = |family: Family| {
            self.families.contains(family).then(|| {
                let offset = dim;
                dim += self.ctx_block();
                offset
            })
        };
        let ctx1 = ctx(Family::Ctx1);
        let ctx2 = ctx(Family::Ctx2);
        Layout {
            word,
            shape,
            cluster,
            embedding,
            slot_width: width,
            slots,
            ctx1,
            ctx2,
            dim,
        }
    }

    fn word_block(&self) -> usize {
        self.vocab.len() + 1
    }

    fn cluster_block(&self) -> usize {
        self.num_clusters + 1
    }

    fn ctx_block(&self) -> usize {
        self.ctx_vocab.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn slots(&self) -> usize {
        self.layout.slots
    }

    pub fn families(&self) -> Families {
        self.families
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn vocab(&self) -> impl ExactSizeIterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    pub fn ctx_vocab(&self) -> impl ExactSizeIterator<Item = &str> {
        self.ctx_vocab.iter().map(String::as_str)
    }

    pub fn labels(&self) -> impl ExactSizeIterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn ctx_vocab_len(&self) -> usize {
        self.ctx_vocab.len()
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.get_index_of(label)
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get_index(id).map(String::as_str)
    }

    /// Word id; padding and unknown tokens share the reserved last id.
    pub fn word_id(&self, token: SlotToken<'_>) -> usize {
        token
            .as_token()
            .and_then(|t| self.vocab.get_index_of(t))
            .unwrap_or(self.vocab.len())
    }

    pub fn ctx_id(&self, word: Option<&str>) -> usize {
        word.and_then(|w| self.ctx_vocab.get_index_of(w))
            .unwrap_or(self.ctx_vocab.len())
    }

    /// Checks that loaded resources match what the space was built for.
    pub fn check_resources(&self, resources: &Resources) -> Result<()> {
        if self.families.contains(Family::Embedding) {
            let table = resources
                .embeddings
                .as_ref()
                .ok_or(Error::MissingResource("embedding"))?;
            if table.dim() != self.embed_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.embed_dim,
                    found: table.dim(),
                });
            }
        }
        if self.families.contains(Family::Cluster) {
            let clusters = resources
                .clusters
                .as_ref()
                .ok_or(Error::MissingResource("cluster"))?;
            if clusters.num_classes() != self.num_clusters {
                return Err(Error::DimensionMismatch {
                    expected: self.num_clusters,
                    found: clusters.num_classes(),
                });
            }
        }
        Ok(())
    }

    pub fn encode(&self, feature: Feature) -> Option<usize> {
        let l = &self.layout;
        let in_slot = |slot: usize, offset: Option<usize>, within: usize, size: usize| {
            (slot < l.slots && within < size).then_some(())?;
            Some(slot * l.slot_width + offset? + within)
        };
        match feature {
            Feature::Word { slot, id } => in_slot(slot, l.word, id, self.word_block()),
            Feature::Shape { slot, flag } => in_slot(slot, l.shape, flag, SHAPE_FLAGS),
            Feature::Cluster { slot, id } => in_slot(slot, l.cluster, id, self.cluster_block()),
            Feature::Embedding { slot, component } => in_slot(slot, l.embedding, component, self.embed_dim),
            Feature::Ctx1 { id } => (id < self.ctx_block()).then_some(l.ctx1? + id),
            Feature::Ctx2 { id } => (id < self.ctx_block()).then_some(l.ctx2? + id),
        }
    }

    pub fn decode(&self, index: usize) -> Option<Feature> {
        let l = &self.layout;
        let slot_area = l.slots * l.slot_width;
        if index < slot_area {
            let slot = index / l.slot_width;
            let within = index % l.slot_width;
            let blocks = [
                (l.word, self.word_block()),
                (l.shape, SHAPE_FLAGS),
                (l.cluster, self.cluster_block()),
                (l.embedding, self.embed_dim),
            ];
            for (family, (offset, size)) in blocks.into_iter().enumerate() {
                let Some(offset) = offset else { continue };
                if (offset..offset + size).contains(&within) {
                    let i = within - offset;
                    return Some(match family {
                        0 => Feature::Word { slot, id: i },
                        1 => Feature::Shape { slot, flag: i },
                        2 => Feature::Cluster { slot, id: i },
                        _ => Feature::Embedding { slot, component: i },
                    });
                }
            }
            return None;
        }
        let in_ctx = |offset: Option<usize>| {
            offset.and_then(|o| (o..o + self.ctx_block()).contains(&index).then(|| index - o))
        };
        if let Some(id) = in_ctx(l.ctx1) {
            return Some(Feature::Ctx1 { id });
        }
        in_ctx(l.ctx2).map(|id| Feature::Ctx2 { id })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment {
    pub offset: usize,
    pub values: Vec<f64>,
}

/// Binary sparse indices plus dense embedding segments, all in one global
/// index space of size `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub dense: Vec<DenseSegment>,
    pub label: Option<usize>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> FeatureVector {
        FeatureVector {
            dim,
            indices: Vec::new(),
            dense: Vec::new(),
            label: None,
        }
    }

    pub fn dense_len(&self) -> usize {
        self.dense.iter().map(|s| s.values.len()).sum()
    }

    /// Dot product with the leading `dim` entries of `weights`.
    #[inline]
    pub fn dot(&self, weights: &[f64]) -> f64 {
        let mut sum: f64 = self.indices.iter().map(|&i| weights[i as usize]).sum();
        for seg in &self.dense {
            let w = &weights[seg.offset..seg.offset + seg.values.len()];
            sum += w.iter().zip(&seg.values).map(|(a, b)| a * b).sum::<f64>();
        }
        sum
    }

    /// `weights += scale * self`.
    #[inline]
    pub fn axpy(&self, scale: f64, weights: &mut [f64]) {
        for &i in &self.indices {
            weights[i as usize] += scale;
        }
        for seg in &self.dense {
            let w = &mut weights[seg.offset..seg.offset + seg.values.len()];
            for (a, b) in w.iter_mut().zip(&seg.values) {
                *a = scale.mul_add(*b, *a);
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.indices.len() as f64
            + self
                .dense
                .iter()
                .flat_map(|s| &s.values)
                .map(|v| v * v)
                .sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.dense.iter().flat_map(|s| &s.values).all(|v| v.is_finite())
    }

    /// Nonzero entries in increasing index order.
    pub fn entries(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self.indices.iter().map(|&i| (i as usize, 1.0)).collect();
        for seg in &self.dense {
            out.extend(
                seg.values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (seg.offset + j, *v)),
            );
        }
        out.sort_by_key(|e| e.0);
        out
    }

    /// Classic `label idx:val ...` line with 1-based indices. The label is the
    /// 1-based class id, or 0 for unlabeled vectors.
    pub fn to_sparse_text(&self) -> String {
        let mut line = self.label.map_or(0, |l| l + 1).to_string();
        for (i, v) in self.entries() {
            line.push(' ');
            line.push_str(&format!("{}:{}", i + 1, v));
        }
        line
    }
}

/// How labels are treated during vectorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Labels must belong to the space; unlabeled instances stay unlabeled.
    Train,
    /// Labels are ignored.
    Predict,
}

pub fn vectorize(
    instance: &RelationInstance,
    space: &FeatureSpace,
    resources: &Resources,
    mode: LabelMode,
) -> Result<FeatureVector> {
    let label = match (mode, &instance.label) {
        (LabelMode::Train, Some(label)) => {
            Some(space.label_id(label).ok_or_else(|| Error::UnknownLabel(label.clone()))?)
        }
        _ => None,
    };

    let l = &space.layout;
    let slots = slot_tokens(instance, space.k);
    let mut indices: Vec<u32> = Vec::new();
    let mut dense = Vec::new();
    for (s, token) in slots.iter().enumerate() {
        let base = s * l.slot_width;
        if let Some(off) = l.word {
            indices.push((base + off + space.word_id(*token)) as u32);
        }
        if let Some(off) = l.shape {
            if let SlotToken::Token(t) = token {
                let flags = shape_signature(t, s == 0).as_array();
                for (f, on) in flags.into_iter().enumerate() {
                    if on {
                        indices.push((base + off + f) as u32);
                    }
                }
            }
        }
        if let Some(off) = l.cluster {
            let clusters = resources.clusters.as_ref().ok_or(Error::MissingResource("cluster"))?;
            let id = match token {
                SlotToken::Token(t) => clusters.get(t).filter(|&c| c < space.num_clusters),
                SlotToken::Pad => None,
            };
            indices.push((base + off + id.unwrap_or(space.num_clusters)) as u32);
        }
        if let Some(off) = l.embedding {
            let table = resources
                .embeddings
                .as_ref()
                .ok_or(Error::MissingResource("embedding"))?;
            if table.dim() != space.embed_dim {
                return Err(Error::DimensionMismatch {
                    expected: space.embed_dim,
                    found: table.dim(),
                });
            }
            let values = match token {
                SlotToken::Token(t) => table.lookup(t).to_vec(),
                SlotToken::Pad => vec![0.0; space.embed_dim],
            };
            dense.push(DenseSegment {
                offset: base + off,
                values,
            });
        }
    }
    let (c1, c2) = context_words(instance);
    if let Some(off) = l.ctx1 {
        indices.push((off + space.ctx_id(c1)) as u32);
    }
    if let Some(off) = l.ctx2 {
        indices.push((off + space.ctx_id(c2)) as u32);
    }
    debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));

    Ok(FeatureVector {
        dim: l.dim,
        indices,
        dense,
        label,
    })
}

pub fn vectorize_all(
    instances: &[RelationInstance],
    space: &FeatureSpace,
    resources: &Resources,
    mode: LabelMode,
    exec: Execution,
) -> Result<Vec<FeatureVector>> {
    space.check_resources(resources)?;
    exec.map(instances, |inst| vectorize(inst, space, resources, mode))
        .into_iter()
        .collect()
}
