//! Precomputed lexical resources: word2vec text-format embeddings and
//! tab-separated word clusters.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use crate::error::{format_err, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    zeros: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(crate::Error::Config("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dim,
            entries: HashMap::new(),
            zeros: vec![0.0; dim],
        })
    }

    /// Inserts or overwrites a vector; the length must equal `dim`.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(crate::Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.entries.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// Stored vector, or zeros for unknown tokens.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.entries.get(token).map_or(&self.zeros[..], Vec::as_slice)
    }
}

pub fn load_embeddings<R: Read>(reader: R) -> Result<EmbeddingTable> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (dim, declared) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(format_err(1, "missing `count dim` header"));
        };
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [count, dim] = fields.as_slice() else {
            return Err(format_err(line_no, "expected header `count dim`"));
        };
        let count: usize = count
            .parse()
            .map_err(|_| format_err(line_no, format!("invalid vector count `{count}`")))?;
        let dim: usize = dim
            .parse()
            .map_err(|_| format_err(line_no, format!("invalid dimension `{dim}`")))?;
        if dim == 0 {
            return Err(format_err(line_no, "dimension must be positive"));
        }
        break (dim, count);
    };

    let mut table = EmbeddingTable::new(dim)?;
    table.entries.reserve(declared.min(1 << 20));
    for (i, line) in lines {
        let line = line?;
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| format_err(line_no, format!("non-numeric component `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(format_err(
                line_no,
                format!("expected {dim} components, got {}", values.len()),
            ));
        }
        table.entries.insert(token.to_string(), values);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterMap {
    num_classes: usize,
    entries: HashMap<String, usize>,
}

impl ClusterMap {
    pub fn new(num_classes: usize) -> Self {
        ClusterMap {
            num_classes,
            entries: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, id: usize) -> Result<()> {
        if id >= self.num_classes {
            return Err(crate::Error::Config(format!(
                "cluster id {id} out of range for {} classes",
                self.num_classes
            )));
        }
        self.entries.insert(token.into(), id);
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Id used for tokens without a cluster; one past the last real class.
    pub fn unknown_id(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.entries.get(token).copied()
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(self.num_classes)
    }
}

/// Loads `token<TAB>cluster_id` lines. `num_classes` overrides the class count
/// otherwise inferred as one past the largest id seen.
pub fn load_clusters<R: Read>(reader: R, num_classes: Option<usize>) -> Result<ClusterMap> {
    let mut entries = HashMap::new();
    let mut max_id: Option<usize> = None;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let line = line.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let (token, id) = line
            .rsplit_once('\t')
            .or_else(|| line.trim().rsplit_once(char::is_whitespace))
            .ok_or_else(|| format_err(line_no, "expected `token<TAB>cluster_id`"))?;
        let token = token.trim();
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| format_err(line_no, format!("non-integer cluster id `{}`", id.trim())))?;
        if let Some(n) = num_classes {
            if id >= n {
                return Err(format_err(line_no, format!("id out of range: {id} >= {n}")));
            }
        }
        max_id = max_id.max(Some(id));
        entries.insert(token.to_string(), id);
    }
    Ok(ClusterMap {
        num_classes: num_classes.unwrap_or(max_id.map_or(0, |m| m + 1)),
        entries,
    })
}

/// Lexical resources consumed by the featurizer. Either table may be absent
/// when its feature family is disabled.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub embeddings: Option<EmbeddingTable>,
    pub clusters: Option<ClusterMap>,
}
