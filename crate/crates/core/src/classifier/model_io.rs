//! Plain-text model files.
//!
//! ```text
//! relsvm-model
//! version 1
//! cost 0.1
//! eps 0.1
//! max_outer_iters 1000
//! seed 0
//! bias 0
//! classes 2
//! dimension 120
//! k 4
//! families word,cluster,embedding,ctx1,ctx2
//! embed_dim 2
//! num_clusters 3
//! labels 2
//! <one label per line>
//! vocab 6
//! <one token per line>
//! ctx_vocab 2
//! <one token per line>
//! weights
//! <one row per class: space-separated values, 17 significant digits>
//! end
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use super::{Model, TrainConfig};
use crate::error::{Error, Result};
use crate::featurizer::{Families, FeatureSpace};

pub const MODEL_MAGIC: &str = "relsvm-model";
pub const MODEL_VERSION: u32 = 1;

fn write_value(out: &mut impl Write, v: f64) -> std::io::Result<()> {
    if v == 0.0 {
        out.write_all(b"0")
    } else {
        write!(out, "{v:.16e}")
    }
}

pub fn save_model<W: Write>(model: &Model, sink: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(sink);
    let space = &model.space;
    let cfg = &model.config;
    writeln!(out, "{MODEL_MAGIC}")?;
    writeln!(out, "version {MODEL_VERSION}")?;
    writeln!(out, "cost {:.16e}", cfg.cost)?;
    writeln!(out, "eps {:.16e}", cfg.eps)?;
    writeln!(out, "max_outer_iters {}", cfg.max_outer_iters)?;
    writeln!(out, "seed {}", cfg.seed)?;
    writeln!(out, "bias {}", u8::from(cfg.bias))?;
    writeln!(out, "classes {}", space.num_labels())?;
    writeln!(out, "dimension {}", space.dim())?;
    writeln!(out, "k {}", space.k())?;
    writeln!(out, "families {}", space.families())?;
    writeln!(out, "embed_dim {}", space.embed_dim())?;
    writeln!(out, "num_clusters {}", space.num_clusters())?;
    for (name, items) in [
        ("labels", space.labels().collect::<Vec<_>>()),
        ("vocab", space.vocab().collect()),
        ("ctx_vocab", space.ctx_vocab().collect()),
    ] {
        writeln!(out, "{name} {}", items.len())?;
        for item in items {
            writeln!(out, "{item}")?;
        }
    }
    writeln!(out, "weights")?;
    for row in &model.weights {
        for (i, &v) in row.iter().enumerate() {
            if i > 0 {
                out.write_all(b" ")?;
            }
            write_value(&mut out, v)?;
        }
        writeln!(out)?;
    }
    writeln!(out, "end")?;
    out.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    line_no: usize,
}

impl<R: Read> Lines<R> {
    fn err(&self, message: impl std::fmt::Display) -> Error {
        Error::Model(format!("line {}: {message}", self.line_no))
    }

    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(Error::Model(format!("truncated file at line {}", self.line_no))),
        }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(format!("expected `{key} <value>`, got `{line}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let value = self.field(key)?;
        value
            .trim()
            .parse()
            .map_err(|_| self.err(format!("invalid value `{value}` for `{key}`")))
    }

    fn table(&mut self, key: &str) -> Result<Vec<String>> {
        let n: usize = self.parsed(key)?;
        (0..n).map(|_| self.next_line()).collect()
    }
}

pub fn load_model<R: Read>(source: R) -> Result<Model> {
    let mut lines = Lines {
        inner: BufReader::new(source).lines(),
        line_no: 0,
    };
    let magic = lines.next_line()?;
    if magic.trim() != MODEL_MAGIC {
        return Err(lines.err(format!("not a model file (magic `{}`)", magic.trim())));
    }
    let version: u32 = lines.parsed("version")?;
    if version != MODEL_VERSION {
        return Err(lines.err(format!("unsupported version {version}, expected {MODEL_VERSION}")));
    }
    let config = TrainConfig {
        cost: lines.parsed("cost")?,
        eps: lines.parsed("eps")?,
        max_outer_iters: lines.parsed("max_outer_iters")?,
        seed: lines.parsed("seed")?,
        bias: lines.parsed::<u8>("bias")? != 0,
    };
    let classes: usize = lines.parsed("classes")?;
    let dimension: usize = lines.parsed("dimension")?;
    let k: usize = lines.parsed("k")?;
    let families: Families = lines.field("families")?.parse()?;
    let embed_dim: usize = lines.parsed("embed_dim")?;
    let num_clusters: usize = lines.parsed("num_clusters")?;
    let labels = lines.table("labels")?;
    if labels.len() != classes {
        return Err(lines.err(format!("{} labels for {classes} classes", labels.len())));
    }
    let vocab = lines.table("vocab")?;
    let ctx_vocab = lines.table("ctx_vocab")?;
    let space = FeatureSpace::from_parts(vocab, ctx_vocab, labels, k, families, embed_dim, num_clusters)?;
    if space.dim() != dimension {
        return Err(lines.err(format!(
            "declared dimension {dimension} but tables imply {}",
            space.dim()
        )));
    }
    if lines.next_line()?.trim() != "weights" {
        return Err(lines.err("expected `weights`"));
    }
    let width = dimension + usize::from(config.bias);
    let mut weights = Vec::with_capacity(classes);
    for _ in 0..classes {
        let line = lines.next_line()?;
        let row = line
            .split_ascii_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| lines.err(format!("invalid weight `{v}`"))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != width {
            return Err(lines.err(format!("expected {width} weights, got {}", row.len())));
        }
        weights.push(row);
    }
    if lines.next_line()?.trim() != "end" {
        return Err(lines.err("expected `end`"));
    }
    Model::new(space, weights, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurizer::{FeatureVector, Family};

    fn tiny_model() -> Model {
        let space = FeatureSpace::from_parts(
            vec!["a".into(), "b".into()],
            vec!["c".into()],
            vec!["USAGE".into(), "USAGE REVERSE".into()],
            1,
            Families::of(&[Family::Word, Family::Ctx1]),
            0,
            0,
        )
        .unwrap();
        let dim = space.dim();
        let weights = vec![
            (0..dim).map(|i| (i as f64).sin() / 3.0).collect(),
            (0..dim).map(|i| if i % 2 == 0 { 0.0 } else { -1e-300 * i as f64 }).collect(),
        ];
        Model::new(space, weights, TrainConfig::default()).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = tiny_model();
        let mut buf = Vec::new();
        save_model(&model, &mut buf).unwrap();
        let loaded = load_model(buf.as_slice()).unwrap();
        assert_eq!(loaded, model);
        for (a, b) in loaded.weights.iter().flatten().zip(model.weights.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let mut again = Vec::new();
        save_model(&loaded, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn wrong_magic_and_version() {
        assert!(load_model("not-a-model\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        save_model(&tiny_model(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("version 1", "version 2");
        let err = load_model(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unsupported version"), "{err}");
    }

    #[test]
    fn truncated_file() {
        let mut buf = Vec::new();
        save_model(&tiny_model(), &mut buf).unwrap();
        for cut in [10, buf.len() / 2, buf.len() - 5] {
            assert!(load_model(&buf[..cut]).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn hand_written_single_class_model() {
        // k = 0, word family, one vocab entry: two slots of width 2.
        let text = "relsvm-model\nversion 1\ncost 0.1\neps 0.1\nmax_outer_iters 1000\nseed 0\nbias 0\n\
                    classes 1\ndimension 4\nk 0\nfamilies word\nembed_dim 0\nnum_clusters 0\n\
                    labels 1\nUSAGE\nvocab 1\nparser\nctx_vocab 0\nweights\n0.5 0 -2 1\nend\n";
        let model = load_model(text.as_bytes()).unwrap();
        for indices in [vec![], vec![0u32, 2], vec![1, 3]] {
            let x = FeatureVector {
                dim: 4,
                indices,
                dense: vec![],
                label: None,
            };
            assert_eq!(model.predict(&x).unwrap(), "USAGE");
        }
    }

    #[test]
    fn declared_dimension_must_match_tables() {
        let text = "relsvm-model\nversion 1\ncost 0.1\neps 0.1\nmax_outer_iters 1000\nseed 0\nbias 0\n\
                    classes 1\ndimension 5\nk 0\nfamilies word\nembed_dim 0\nnum_clusters 0\n\
                    labels 1\nUSAGE\nvocab 1\nparser\nctx_vocab 0\nweights\n0.5 0 -2 1 0\nend\n";
        assert!(load_model(text.as_bytes()).is_err());
    }
}
