//! Annotated-abstract and relation-file parsing, token normalization and
//! relation-instance extraction.
//!
//! Abstract files carry inline `<entity id="...">surface</entity>` markup.
//! `<text id="...">` elements delimit abstracts when present; bare
//! `<abstract>` wrappers are accepted as delimiters too, and anything else in
//! angle brackets is treated as structure and dropped.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;

use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{format_err, Error, Result};

/// Suffix folded into the label string for relations whose arguments run
/// against textual order.
pub const REVERSE_SUFFIX: &str = " REVERSE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Plain(String),
    Entity { id: String, surface: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractDoc {
    pub id: String,
    pub segments: Vec<Segment>,
}

impl AbstractDoc {
    pub fn entity_ids(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Entity { id, .. } => Some(id.as_str()),
            Segment::Plain(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationLabel {
    pub rel_type: String,
    pub e1: String,
    pub e2: String,
    pub reversed: bool,
}

impl RelationLabel {
    /// Internal label string, e.g. `MODEL-FEATURE REVERSE`.
    pub fn label(&self) -> String {
        compose_label(&self.rel_type, self.reversed)
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{}", self.rel_type, self.e1, self.e2)?;
        if self.reversed {
            f.write_str(",REVERSE")?;
        }
        f.write_str(")")
    }
}

pub fn compose_label(rel_type: &str, reversed: bool) -> String {
    if reversed {
        format!("{rel_type}{REVERSE_SUFFIX}")
    } else {
        rel_type.to_string()
    }
}

/// Splits an internal label back into relation type and direction.
pub fn split_label(label: &str) -> (&str, bool) {
    match label.strip_suffix(REVERSE_SUFFIX) {
        Some(rel_type) => (rel_type, true),
        None => (label, false),
    }
}

/// An entity pair to classify, optionally with its gold label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityPair {
    pub e1: String,
    pub e2: String,
    pub label: Option<String>,
}

impl From<&RelationLabel> for EntityPair {
    fn from(rel: &RelationLabel) -> Self {
        EntityPair {
            e1: rel.e1.clone(),
            e2: rel.e2.clone(),
            label: Some(rel.label()),
        }
    }
}

/// One relation mention: the normalized token span from the entity-1 head
/// through the entity-2 head, inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInstance {
    pub abstract_id: String,
    pub tokens: Vec<String>,
    pub e1_id: String,
    pub e2_id: String,
    pub label: Option<String>,
    pub sentence_len: usize,
}

impl RelationInstance {
    /// Tokens strictly between the two entity heads.
    pub fn inner(&self) -> &[String] {
        match self.tokens.len() {
            0..=2 => &[],
            n => &self.tokens[1..n - 1],
        }
    }

    pub fn inner_len(&self) -> usize {
        self.tokens.len().saturating_sub(2)
    }

    pub fn e1_token(&self) -> &str {
        &self.tokens[0]
    }

    pub fn e2_token(&self) -> &str {
        &self.tokens[self.tokens.len() - 1]
    }
}

/// Normalized token stream of one abstract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedDoc {
    pub tokens: Vec<String>,
    pub entity_positions: HashMap<String, usize>,
}

pub fn is_punctuation_only(token: &str) -> bool {
    !token.is_empty()
        && token
            .chars()
            .all(|c| c.general_category_group() == GeneralCategoryGroup::Punctuation)
}

/// Appends every punctuation-only token to its predecessor. A leading
/// punctuation-only token has no predecessor and stays standalone.
pub fn merge_punctuation<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let tok = tok.as_ref();
        match out.last_mut() {
            Some(prev) if is_punctuation_only(tok) => prev.push_str(tok),
            _ => out.push(tok.to_string()),
        }
    }
    out
}

pub fn join_entity_surface(surface: &str) -> String {
    surface.split_whitespace().collect::<Vec<_>>().join("_")
}

pub fn normalize_tokens(doc: &AbstractDoc) -> NormalizedDoc {
    let mut tokens: Vec<String> = Vec::new();
    let mut entity_positions = HashMap::new();
    for segment in &doc.segments {
        match segment {
            Segment::Plain(text) => {
                for tok in text.split_whitespace() {
                    match tokens.last_mut() {
                        Some(prev) if is_punctuation_only(tok) => prev.push_str(tok),
                        _ => tokens.push(tok.to_string()),
                    }
                }
            }
            Segment::Entity { id, surface } => {
                entity_positions.insert(id.clone(), tokens.len());
                tokens.push(join_entity_surface(surface));
            }
        }
    }
    NormalizedDoc {
        tokens,
        entity_positions,
    }
}

fn ends_sentence(token: &str) -> bool {
    token.ends_with(['.', '!', '?'])
}

fn starts_upper(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// Length of the sentence containing `position`. Boundaries fall after a
/// token ending in `.`, `!` or `?` that is followed by a capitalized token.
fn sentence_len_at(tokens: &[String], position: usize) -> usize {
    let is_boundary = |i: usize| {
        i + 1 < tokens.len() && ends_sentence(&tokens[i]) && starts_upper(&tokens[i + 1])
    };
    let start = (0..position).rev().find(|&i| is_boundary(i)).map_or(0, |i| i + 1);
    let end = (position..tokens.len())
        .find(|&i| is_boundary(i))
        .map_or(tokens.len(), |i| i + 1);
    end - start
}

pub fn extract_instances(docs: &[AbstractDoc], pairs: &[EntityPair]) -> Result<Vec<RelationInstance>> {
    let normalized: Vec<NormalizedDoc> = docs.iter().map(normalize_tokens).collect();
    let mut index: HashMap<&str, (usize, usize)> = HashMap::new();
    for (d, norm) in normalized.iter().enumerate() {
        for (id, &pos) in &norm.entity_positions {
            if index.insert(id.as_str(), (d, pos)).is_some() {
                return Err(Error::DuplicateEntity(id.clone()));
            }
        }
    }

    pairs
        .iter()
        .map(|pair| {
            let &(d1, p1) = index
                .get(pair.e1.as_str())
                .ok_or_else(|| Error::UnknownEntity(pair.e1.clone()))?;
            let &(d2, p2) = index
                .get(pair.e2.as_str())
                .ok_or_else(|| Error::UnknownEntity(pair.e2.clone()))?;
            if d1 != d2 {
                return Err(Error::AbstractMismatch {
                    e1: pair.e1.clone(),
                    e2: pair.e2.clone(),
                });
            }
            if p2 <= p1 {
                return Err(Error::EntityOrder {
                    e1: pair.e1.clone(),
                    e2: pair.e2.clone(),
                });
            }
            let tokens = &normalized[d1].tokens;
            Ok(RelationInstance {
                abstract_id: docs[d1].id.clone(),
                tokens: tokens[p1..=p2].to_vec(),
                e1_id: pair.e1.clone(),
                e2_id: pair.e2.clone(),
                label: pair.label.clone(),
                sentence_len: sentence_len_at(tokens, p1),
            })
        })
        .collect()
}

fn read_utf8<R: Read>(mut reader: R) -> Result<String> {
    let mut buf = String::new();
    reader.read_to_string(&mut buf)?;
    Ok(buf)
}

// ---------------------------------------------------------------------------
// Abstract files

pub fn parse_abstracts<R: Read>(reader: R) -> Result<Vec<AbstractDoc>> {
    parse_abstracts_str(&read_utf8(reader)?)
}

pub fn parse_abstracts_str(input: &str) -> Result<Vec<AbstractDoc>> {
    AbstractParser::new(input).run()
}

#[derive(Default)]
struct DocBuilder {
    id: Option<String>,
    segments: Vec<Segment>,
    seen: HashSet<String>,
}

impl DocBuilder {
    fn push_plain(&mut self, text: &str) {
        if let Some(Segment::Plain(last)) = self.segments.last_mut() {
            last.push_str(text);
        } else {
            self.segments.push(Segment::Plain(text.to_string()));
        }
    }

    fn has_content(&self) -> bool {
        self.segments.iter().any(|s| match s {
            Segment::Plain(t) => !t.trim().is_empty(),
            Segment::Entity { .. } => true,
        })
    }
}

struct OpenEntity {
    id: String,
    offset: usize,
    surface: String,
}

struct AbstractParser<'a> {
    input: &'a str,
    docs: Vec<AbstractDoc>,
    current: DocBuilder,
    in_text: bool,
    entity: Option<OpenEntity>,
}

impl<'a> AbstractParser<'a> {
    fn new(input: &'a str) -> Self {
        AbstractParser {
            input,
            docs: Vec::new(),
            current: DocBuilder::default(),
            in_text: false,
            entity: None,
        }
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> Error {
        let before = &self.input[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Vec<AbstractDoc>> {
        let input = self.input;
        let mut pos = 0;
        while let Some(rel) = input[pos..].find('<') {
            let lt = pos + rel;
            self.text(&input[pos..lt]);
            let gt = match input[lt..].find('>') {
                Some(r) => lt + r,
                None => return Err(self.error_at(lt, "unclosed tag")),
            };
            self.tag(lt, &input[lt + 1..gt])?;
            pos = gt + 1;
        }
        self.text(&input[pos..]);
        if let Some(open) = &self.entity {
            return Err(self.error_at(open.offset, format!("entity `{}` is never closed", open.id)));
        }
        self.flush()?;
        Ok(self.docs)
    }

    fn text(&mut self, raw: &str) {
        if raw.is_empty() {
            return;
        }
        let text = decode_xml(raw);
        match &mut self.entity {
            Some(open) => open.surface.push_str(&text),
            None => self.current.push_plain(&text),
        }
    }

    fn tag(&mut self, offset: usize, body: &str) -> Result<()> {
        if body.starts_with('?') || body.starts_with('!') {
            return Ok(());
        }
        if let Some(name) = body.strip_prefix('/') {
            return self.close_tag(offset, name.trim());
        }
        let self_closing = body.ends_with('/');
        let body = body.trim_end_matches('/');
        let name = body.split_whitespace().next().unwrap_or("");
        match name {
            "entity" if !self_closing => {
                if let Some(open) = &self.entity {
                    return Err(self.error_at(offset, format!("entity nested inside `{}`", open.id)));
                }
                let id = attribute(body, "id")
                    .ok_or_else(|| self.error_at(offset, "entity tag without id attribute"))?;
                self.entity = Some(OpenEntity {
                    id,
                    offset,
                    surface: String::new(),
                });
            }
            "text" if !self_closing => {
                self.flush()?;
                self.current.id = attribute(body, "id");
                self.in_text = true;
            }
            "abstract" if !self.in_text => self.flush()?,
            _ => self.boundary(),
        }
        Ok(())
    }

    fn close_tag(&mut self, offset: usize, name: &str) -> Result<()> {
        match name {
            "entity" => {
                let open = self
                    .entity
                    .take()
                    .ok_or_else(|| self.error_at(offset, "closing entity tag without opening tag"))?;
                if open.surface.trim().is_empty() {
                    return Err(self.error_at(open.offset, format!("entity `{}` has empty surface", open.id)));
                }
                if !self.current.seen.insert(open.id.clone()) {
                    return Err(Error::DuplicateEntity(open.id));
                }
                self.current.segments.push(Segment::Entity {
                    id: open.id,
                    surface: open.surface,
                });
            }
            "text" => {
                self.flush()?;
                self.in_text = false;
            }
            "abstract" if !self.in_text => self.flush()?,
            _ => self.boundary(),
        }
        Ok(())
    }

    // Structural tags separate words, e.g. `</title><abstract>`.
    fn boundary(&mut self) {
        match &mut self.entity {
            Some(open) => open.surface.push(' '),
            None => self.current.push_plain(" "),
        }
    }

    fn flush(&mut self) -> Result<()> {
        if let Some(open) = &self.entity {
            return Err(self.error_at(open.offset, format!("entity `{}` is never closed", open.id)));
        }
        let builder = std::mem::take(&mut self.current);
        if !builder.has_content() {
            return Ok(());
        }
        let derived = builder.segments.iter().find_map(|s| match s {
            Segment::Entity { id, .. } => id.rsplit_once('.').map(|(prefix, _)| prefix.to_string()),
            Segment::Plain(_) => None,
        });
        let Some(id) = builder.id.or(derived) else {
            // Free text without entities or an id carries no relations.
            return Ok(());
        };
        for entity in builder.segments.iter().filter_map(|s| match s {
            Segment::Entity { id, .. } => Some(id),
            Segment::Plain(_) => None,
        }) {
            let belongs = entity
                .strip_prefix(id.as_str())
                .is_some_and(|rest| rest.starts_with('.') && rest.len() > 1);
            if !belongs {
                return Err(Error::ForeignEntity {
                    entity: entity.clone(),
                    abstract_id: id,
                });
            }
        }
        self.docs.push(AbstractDoc {
            id,
            segments: builder.segments,
        });
        Ok(())
    }
}

fn attribute(tag_body: &str, name: &str) -> Option<String> {
    let mut rest = tag_body;
    while let Some(at) = rest.find(name) {
        let preceded_ok = rest[..at].ends_with(char::is_whitespace);
        let after = rest[at + name.len()..].trim_start();
        if preceded_ok {
            if let Some(value) = after.strip_prefix('=') {
                let value = value.trim_start();
                let quote = value.chars().next()?;
                if quote == '"' || quote == '\'' {
                    let end = value[1..].find(quote)?;
                    return Some(decode_xml(&value[1..1 + end]));
                }
                return None;
            }
        }
        rest = &rest[at + name.len()..];
    }
    None
}

fn decode_xml(raw: &str) -> String {
    if !raw.contains('&') {
        return raw.to_string();
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let decoded = tail.find(';').and_then(|semi| {
            let name = &tail[1..semi];
            let ch = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                _ => name
                    .strip_prefix("#x")
                    .and_then(|hex| u32::from_str_radix(hex, 16).ok())
                    .or_else(|| name.strip_prefix('#').and_then(|dec| dec.parse().ok()))
                    .and_then(char::from_u32),
            };
            ch.map(|c| (c, semi + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &tail[len..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

// ---------------------------------------------------------------------------
// Relation files

fn abstract_prefix(entity_id: &str) -> &str {
    entity_id.rsplit_once('.').map_or(entity_id, |(p, _)| p)
}

struct RelationLine {
    rel_type: Option<String>,
    e1: String,
    e2: String,
    reversed: bool,
}

fn parse_relation_line(line_no: usize, line: &str) -> Result<RelationLine> {
    let open = line
        .find('(')
        .ok_or_else(|| format_err(line_no, format!("expected `TYPE(ID1,ID2[,REVERSE])`, got `{line}`")))?;
    let args = line[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| format_err(line_no, "missing closing parenthesis"))?;
    let rel_type = line[..open].trim();
    if rel_type.chars().any(char::is_whitespace) {
        return Err(format_err(line_no, format!("relation type `{rel_type}` contains whitespace")));
    }
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    let reversed = match parts.as_slice() {
        [_, _] => false,
        [_, _, "REVERSE"] => true,
        [_, _, other] => return Err(format_err(line_no, format!("unexpected third argument `{other}`"))),
        _ => return Err(format_err(line_no, format!("expected 2 or 3 arguments, got {}", parts.len()))),
    };
    let (e1, e2) = (parts[0], parts[1]);
    if e1.is_empty() || e2.is_empty() {
        return Err(format_err(line_no, "empty entity id"));
    }
    if e1 == e2 {
        return Err(format_err(line_no, format!("relation between `{e1}` and itself")));
    }
    if abstract_prefix(e1) != abstract_prefix(e2) {
        return Err(format_err(
            line_no,
            format!("entity ids `{e1}` and `{e2}` belong to different abstracts"),
        ));
    }
    Ok(RelationLine {
        rel_type: (!rel_type.is_empty()).then(|| rel_type.to_string()),
        e1: e1.to_string(),
        e2: e2.to_string(),
        reversed,
    })
}

fn relation_lines(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_relations<R: Read>(reader: R) -> Result<Vec<RelationLabel>> {
    parse_relations_str(&read_utf8(reader)?)
}

pub fn parse_relations_str(input: &str) -> Result<Vec<RelationLabel>> {
    relation_lines(input)
        .map(|(line_no, line)| {
            let rel = parse_relation_line(line_no, line)?;
            let rel_type = rel
                .rel_type
                .ok_or_else(|| format_err(line_no, "missing relation type"))?;
            Ok(RelationLabel {
                rel_type,
                e1: rel.e1,
                e2: rel.e2,
                reversed: rel.reversed,
            })
        })
        .collect()
}

/// Reads entity pairs to classify. Accepts the relation syntax as well as
/// untyped `(ID1,ID2)` lines; the REVERSE marker of untyped lines is
/// ignored since direction is part of the predicted label.
pub fn parse_pairs<R: Read>(reader: R) -> Result<Vec<EntityPair>> {
    parse_pairs_str(&read_utf8(reader)?)
}

pub fn parse_pairs_str(input: &str) -> Result<Vec<EntityPair>> {
    relation_lines(input)
        .map(|(line_no, line)| {
            let rel = parse_relation_line(line_no, line)?;
            Ok(EntityPair {
                label: rel.rel_type.map(|t| compose_label(&t, rel.reversed)),
                e1: rel.e1,
                e2: rel.e2,
            })
        })
        .collect()
}
