use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::taxonomy::{Taxonomy, TaxonomyId, TaxonomySet};

/// Event type handle. Ids follow the lexicographic order of the type names,
/// so comparing ids compares names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeId(pub u16);

impl TypeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTypeDecl {
    pub name: String,
    pub taxonomies: Vec<TaxonomyId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    taxonomies: TaxonomySet,
    event_types: Vec<EventTypeDecl>,
    by_name: HashMap<String, TypeId>,
    rel_types: HashMap<(TypeId, TypeId), Vec<TaxonomyId>>,
}

fn pair_key(a: TypeId, b: TypeId) -> (TypeId, TypeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | '#' | ';' | '[' | ']')))
}

fn split_list(s: Option<&str>) -> Vec<String> {
    match s {
        None => Vec::new(),
        Some(s) => s.split(',').map(|p| p.trim().to_string()).collect(),
    }
}

impl Schema {
    /// Assemble a schema from declarations. Event types are re-ordered by name.
    pub fn new(
        taxonomies: TaxonomySet,
        event_types: Vec<(String, Vec<String>)>,
        rel_types: Vec<(String, String, Vec<String>)>,
    ) -> Result<Schema, ParseError> {
        let resolve = |names: &[String]| -> Result<Vec<TaxonomyId>, ParseError> {
            names
                .iter()
                .map(|n| {
                    taxonomies
                        .id(n)
                        .ok_or_else(|| ParseError::general(format!("unknown taxonomy {n:?}")))
                })
                .collect()
        };

        let mut decls = Vec::with_capacity(event_types.len());
        for (name, taxes) in &event_types {
            if !valid_name(name) {
                return Err(ParseError::general(format!("invalid event type name {name:?}")));
            }
            decls.push(EventTypeDecl {
                name: name.clone(),
                taxonomies: resolve(taxes)?,
            });
        }
        decls.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = decls.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(ParseError::general(format!(
                "duplicate event type {:?}",
                w[0].name
            )));
        }
        if decls.len() > u16::MAX as usize {
            return Err(ParseError::general("too many event types"));
        }
        let by_name: HashMap<String, TypeId> = decls
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), TypeId(i as u16)))
            .collect();

        let mut rels = HashMap::new();
        for (a, b, taxes) in &rel_types {
            let lookup = |n: &str| {
                by_name.get(n).copied().ok_or_else(|| {
                    ParseError::general(format!("relationship references undeclared event type {n:?}"))
                })
            };
            let key = pair_key(lookup(a)?, lookup(b)?);
            if rels.insert(key, resolve(taxes)?).is_some() {
                return Err(ParseError::general(format!(
                    "duplicate relationship type for pair {a} x {b}"
                )));
            }
        }

        Ok(Schema {
            taxonomies,
            event_types: decls,
            by_name,
            rel_types: rels,
        })
    }

    /// Parse a schema file. `resolve` maps a taxonomy path to its text.
    ///
    /// A taxonomy argument starting with `(` is read as an inline prefix tree.
    pub fn parse<F>(text: &str, mut resolve: F) -> Result<Schema, ParseError>
    where
        F: FnMut(&str) -> Result<String, String>,
    {
        let mut taxonomies = TaxonomySet::new();
        let mut event_types = Vec::new();
        let mut event_lines = Vec::new();
        let mut rel_types = Vec::new();
        let mut rel_lines = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (keyword, rest) = match line.split_once(char::is_whitespace) {
                Some((k, r)) => (k, r.trim()),
                None => (line, ""),
            };
            match keyword {
                "taxonomy" => {
                    let (name, source) = rest
                        .split_once(char::is_whitespace)
                        .map(|(n, s)| (n, s.trim()))
                        .ok_or_else(|| ParseError::at(line_no, "expected: taxonomy <name> <path>"))?;
                    if !valid_name(name) {
                        return Err(ParseError::at(line_no, format!("invalid taxonomy name {name:?}")));
                    }
                    let tax = if source.starts_with('(') {
                        Taxonomy::parse(name, source).map_err(|e| {
                            ParseError::at(line_no, format!("taxonomy {name}: {e}"))
                        })?
                    } else {
                        let body = resolve(source)
                            .map_err(|e| ParseError::at(line_no, format!("cannot read {source:?}: {e}")))?;
                        Taxonomy::parse(name, &body).map_err(|e| {
                            ParseError::at(line_no, format!("taxonomy {name} ({source}): {e}"))
                        })?
                    };
                    if taxonomies.insert(tax).is_none() {
                        return Err(ParseError::at(line_no, format!("duplicate taxonomy {name:?}")));
                    }
                }
                "eventtype" => {
                    let mut parts = rest.split_whitespace();
                    let name = parts
                        .next()
                        .ok_or_else(|| ParseError::at(line_no, "expected: eventtype <type> [taxonomies]"))?;
                    let taxes = split_list(parts.next());
                    if parts.next().is_some() {
                        return Err(ParseError::at(line_no, "unexpected trailing tokens"));
                    }
                    event_types.push((name.to_string(), taxes));
                    event_lines.push(line_no);
                }
                "reltype" => {
                    let mut parts = rest.split_whitespace();
                    let (a, b) = match (parts.next(), parts.next()) {
                        (Some(a), Some(b)) => (a, b),
                        _ => {
                            return Err(ParseError::at(
                                line_no,
                                "expected: reltype <typeA> <typeB> [taxonomies]",
                            ))
                        }
                    };
                    let taxes = split_list(parts.next());
                    if parts.next().is_some() {
                        return Err(ParseError::at(line_no, "unexpected trailing tokens"));
                    }
                    rel_types.push((a.to_string(), b.to_string(), taxes));
                    rel_lines.push(line_no);
                }
                other => {
                    return Err(ParseError::at(line_no, format!("unknown directive {other:?}")))
                }
            }
        }

        // Validate line by line first so errors carry the offending line.
        let mut seen = HashMap::new();
        for ((name, taxes), &line) in event_types.iter().zip(&event_lines) {
            if !valid_name(name) {
                return Err(ParseError::at(line, format!("invalid event type name {name:?}")));
            }
            if seen.insert(name.clone(), line).is_some() {
                return Err(ParseError::at(line, format!("duplicate event type {name:?}")));
            }
            for t in taxes {
                if taxonomies.id(t).is_none() {
                    return Err(ParseError::at(line, format!("unknown taxonomy {t:?}")));
                }
            }
        }
        let mut pairs = HashMap::new();
        for ((a, b, taxes), &line) in rel_types.iter().zip(&rel_lines) {
            for n in [a, b] {
                if !seen.contains_key(n) {
                    return Err(ParseError::at(
                        line,
                        format!("relationship references undeclared event type {n:?}"),
                    ));
                }
            }
            let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if pairs.insert(key, line).is_some() {
                return Err(ParseError::at(line, format!("duplicate relationship type for pair {a} x {b}")));
            }
            for t in taxes {
                if taxonomies.id(t).is_none() {
                    return Err(ParseError::at(line, format!("unknown taxonomy {t:?}")));
                }
            }
        }

        Schema::new(taxonomies, event_types, rel_types)
    }

    /// Read a schema file from disk; taxonomy paths are relative to its directory.
    pub fn load(path: &Path) -> Result<Schema, ParseError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ParseError::general(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Schema::parse(&text, |p| {
            fs::read_to_string(dir.join(p)).map_err(|e| e.to_string())
        })
    }

    pub fn taxonomies(&self) -> &TaxonomySet {
        &self.taxonomies
    }

    pub fn taxonomy(&self, id: TaxonomyId) -> &Taxonomy {
        self.taxonomies.get(id)
    }

    pub fn n_types(&self) -> usize {
        self.event_types.len()
    }

    pub fn types(&self) -> impl Iterator<Item = TypeId> {
        (0..self.event_types.len() as u16).map(TypeId)
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.event_types[t.index()].name
    }

    /// Event type schema: taxonomies describing events of type `t`.
    pub fn event_schema(&self, t: TypeId) -> &[TaxonomyId] {
        &self.event_types[t.index()].taxonomies
    }

    /// Relationship type schema for the unordered pair `{a, b}`; empty when
    /// the pair was never declared.
    pub fn rel_schema(&self, a: TypeId, b: TypeId) -> &[TaxonomyId] {
        self.rel_types
            .get(&pair_key(a, b))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn n_rel_types(&self) -> usize {
        self.rel_types.len()
    }
}
