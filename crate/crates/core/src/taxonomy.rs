//! Rooted is-a trees of named concepts.
//!
//! A taxonomy is read from a parenthesized prefix-tree expression such as
//! `(Any(Tested(Sensitive,Resistant,Intermediate),Not-tested))`. The outermost
//! node is the root; children keep the order in which they appear in the text.
//! Subsumption is reflexive: every concept subsumes itself and all of its
//! descendants.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ParseError, TaxonomyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptId(pub u32);

impl ConceptId {
    pub const ROOT: ConceptId = ConceptId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaxonomyId(pub u32);

impl TaxonomyId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A concept qualified by the taxonomy it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptRef {
    pub taxonomy: TaxonomyId,
    pub concept: ConceptId,
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    name: String,
    labels: Vec<String>,
    parent: Vec<Option<ConceptId>>,
    children: Vec<Vec<ConceptId>>,
    depth: Vec<u32>,
    by_label: HashMap<String, ConceptId>,
    // Pre-order rank and the exclusive end of each concept's subtree in rank
    // space; `a` subsumes `b` iff rank[a] <= rank[b] < subtree_end[a].
    rank: Vec<u32>,
    subtree_end: Vec<u32>,
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.labels == other.labels
            && self.parent == other.parent
            && self.children == other.children
    }
}

impl Eq for Taxonomy {}

fn is_label_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | '#'))
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Comma,
    Label(String),
}

fn tokenize(text: &str) -> Vec<(Token, usize)> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let mut chars = line.char_indices().peekable();
        while let Some((start, c)) = chars.next() {
            match c {
                '(' => out.push((Token::Open, line_no)),
                ')' => out.push((Token::Close, line_no)),
                ',' => out.push((Token::Comma, line_no)),
                c if c.is_whitespace() => {}
                _ => {
                    let mut end = start + c.len_utf8();
                    while let Some(&(i, d)) = chars.peek() {
                        if !is_label_char(d) {
                            break;
                        }
                        end = i + d.len_utf8();
                        chars.next();
                    }
                    out.push((Token::Label(line[start..end].to_string()), line_no));
                }
            }
        }
    }
    out
}

impl Taxonomy {
    /// Parse a prefix-tree expression. `#` starts a comment running to the end
    /// of the line; whitespace between tokens is ignored.
    pub fn parse(name: &str, text: &str) -> Result<Taxonomy, ParseError> {
        let tokens = tokenize(text);
        let last_line = text.lines().count().max(1);
        let mut iter = tokens.into_iter();

        match iter.next() {
            None => return Err(ParseError::at(last_line, "empty taxonomy")),
            Some((Token::Open, _)) => {}
            Some((tok, line)) => {
                return Err(ParseError::at(
                    line,
                    format!("taxonomy must start with '(' (found {tok:?})"),
                ))
            }
        }

        let mut labels: Vec<String> = Vec::new();
        let mut parent: Vec<Option<ConceptId>> = Vec::new();
        let mut by_label: HashMap<String, ConceptId> = HashMap::new();
        let mut stack: Vec<ConceptId> = Vec::new();
        let mut expect_label = true;
        let mut last_node: Option<ConceptId> = None;
        let mut closed = false;

        for (tok, line) in iter.by_ref() {
            if expect_label {
                match tok {
                    Token::Label(label) => {
                        if by_label.contains_key(&label) {
                            return Err(ParseError::at(
                                line,
                                format!("duplicate concept label {label:?}"),
                            ));
                        }
                        let id = ConceptId(labels.len() as u32);
                        by_label.insert(label.clone(), id);
                        labels.push(label);
                        parent.push(stack.last().copied());
                        last_node = Some(id);
                        expect_label = false;
                    }
                    _ => return Err(ParseError::at(line, "empty node label")),
                }
                continue;
            }
            match tok {
                Token::Open => {
                    stack.push(last_node.expect("a node precedes '('"));
                    expect_label = true;
                }
                Token::Comma => {
                    if stack.is_empty() {
                        return Err(ParseError::at(line, "the root cannot have siblings"));
                    }
                    expect_label = true;
                }
                Token::Close => {
                    if stack.pop().is_none() {
                        closed = true;
                        break;
                    }
                }
                Token::Label(label) => {
                    return Err(ParseError::at(
                        line,
                        format!("unexpected label {label:?}; missing ',' or '('"),
                    ))
                }
            }
        }

        if !closed {
            return Err(ParseError::at(last_line, "unbalanced parentheses"));
        }
        if let Some((_, line)) = iter.next() {
            return Err(ParseError::at(
                line,
                "unbalanced parentheses: trailing tokens after the root",
            ));
        }
        Ok(Self::from_parents(name, labels, parent))
    }

    /// Build from a parent vector where index 0 is the root and each child
    /// appears after its parent. Child order follows index order.
    fn from_parents(name: &str, labels: Vec<String>, parent: Vec<Option<ConceptId>>) -> Taxonomy {
        let n = labels.len();
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0u32; n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[p.index()].push(ConceptId(i as u32));
                depth[i] = depth[p.index()] + 1;
            }
        }
        let by_label = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), ConceptId(i as u32)))
            .collect();
        let mut tax = Taxonomy {
            name: name.to_string(),
            labels,
            parent,
            children,
            depth,
            by_label,
            rank: vec![0; n],
            subtree_end: vec![0; n],
        };
        tax.compute_ranks();
        tax
    }

    fn compute_ranks(&mut self) {
        let n = self.labels.len();
        let mut rank = vec![0u32; n];
        let mut end = vec![0u32; n];
        let mut next = 0u32;
        // (node, visited-children flag)
        let mut stack = vec![(ConceptId::ROOT, false)];
        while let Some((node, done)) = stack.pop() {
            if done {
                end[node.index()] = next;
                continue;
            }
            rank[node.index()] = next;
            next += 1;
            stack.push((node, true));
            for &c in self.children[node.index()].iter().rev() {
                stack.push((c, false));
            }
        }
        self.rank = rank;
        self.subtree_end = end;
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn root(&self) -> ConceptId {
        ConceptId::ROOT
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> + '_ {
        (0..self.labels.len() as u32).map(ConceptId)
    }

    pub fn label(&self, c: ConceptId) -> &str {
        &self.labels[c.index()]
    }

    pub fn lookup(&self, label: &str) -> Result<ConceptId, TaxonomyError> {
        self.by_label
            .get(label)
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownConcept(label.to_string()))
    }

    pub fn contains(&self, c: ConceptId) -> bool {
        c.index() < self.labels.len()
    }

    fn check(&self, c: ConceptId) -> Result<(), TaxonomyError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(TaxonomyError::BadConceptId(c.0))
        }
    }

    pub fn parent(&self, c: ConceptId) -> Option<ConceptId> {
        self.parent[c.index()]
    }

    pub fn children(&self, c: ConceptId) -> &[ConceptId] {
        &self.children[c.index()]
    }

    pub fn depth(&self, c: ConceptId) -> u32 {
        self.depth[c.index()]
    }

    pub fn is_leaf(&self, c: ConceptId) -> bool {
        self.children[c.index()].is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.concepts().filter(move |&c| self.is_leaf(c))
    }

    /// Concepts in the subtree rooted at `c`, including `c`, in pre-order.
    pub fn descendants(&self, c: ConceptId) -> Vec<ConceptId> {
        let mut out = Vec::new();
        let mut stack = vec![c];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children[n.index()].iter().rev());
        }
        out
    }

    /// Pre-order rank of `c`; children are visited in file order.
    #[inline]
    pub fn rank(&self, c: ConceptId) -> u32 {
        self.rank[c.index()]
    }

    /// `a ⊨ b`: `a` equals `b` or is a proper ancestor of it.
    #[inline]
    pub fn subsumes(&self, a: ConceptId, b: ConceptId) -> bool {
        let ra = self.rank[a.index()];
        let rb = self.rank[b.index()];
        ra <= rb && rb < self.subtree_end[a.index()]
    }

    pub fn try_subsumes(&self, a: ConceptId, b: ConceptId) -> Result<bool, TaxonomyError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.subsumes(a, b))
    }

    pub fn subsumes_labels(&self, a: &str, b: &str) -> Result<bool, TaxonomyError> {
        Ok(self.subsumes(self.lookup(a)?, self.lookup(b)?))
    }

    /// `c` followed by its proper ancestors, stopping before the root.
    /// Empty when `c` is the root.
    pub fn ancestors_excluding_root(&self, c: ConceptId) -> Vec<ConceptId> {
        let mut out = Vec::with_capacity(self.depth[c.index()] as usize);
        let mut cur = c;
        while let Some(p) = self.parent[cur.index()] {
            out.push(cur);
            cur = p;
        }
        out
    }

    pub fn try_ancestors_excluding_root(
        &self,
        c: ConceptId,
    ) -> Result<Vec<ConceptId>, TaxonomyError> {
        self.check(c)?;
        Ok(self.ancestors_excluding_root(c))
    }

    /// Map every concept to its pre-order DFS index.
    pub fn traversal_rank(&self) -> HashMap<ConceptId, u32> {
        self.concepts().map(|c| (c, self.rank(c))).collect()
    }

    /// Serialize back to a single-line prefix-tree expression.
    pub fn to_prefix_string(&self) -> String {
        let mut out = String::from("(");
        self.write_node(ConceptId::ROOT, &mut out);
        out.push(')');
        out
    }

    fn write_node(&self, c: ConceptId, out: &mut String) {
        out.push_str(&self.labels[c.index()]);
        let kids = &self.children[c.index()];
        if !kids.is_empty() {
            out.push('(');
            for (i, &k) in kids.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.write_node(k, out);
            }
            out.push(')');
        }
    }
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_prefix_string())
    }
}

/// All taxonomies referenced by a schema, addressed by [`TaxonomyId`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaxonomySet {
    taxonomies: Vec<Taxonomy>,
    by_name: HashMap<String, TaxonomyId>,
}

impl TaxonomySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a taxonomy; returns `None` when the name is already taken.
    pub fn insert(&mut self, tax: Taxonomy) -> Option<TaxonomyId> {
        if self.by_name.contains_key(tax.name()) {
            return None;
        }
        let id = TaxonomyId(self.taxonomies.len() as u32);
        self.by_name.insert(tax.name().to_string(), id);
        self.taxonomies.push(tax);
        Some(id)
    }

    pub fn id(&self, name: &str) -> Option<TaxonomyId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: TaxonomyId) -> &Taxonomy {
        &self.taxonomies[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TaxonomyId, &Taxonomy)> {
        self.taxonomies
            .iter()
            .enumerate()
            .map(|(i, t)| (TaxonomyId(i as u32), t))
    }

    pub fn len(&self) -> usize {
        self.taxonomies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxonomies.is_empty()
    }

    /// Element-wise subsumption of two concept arrays under `schema`.
    pub fn subsumes_array(
        &self,
        a: &[ConceptRef],
        b: &[ConceptRef],
        schema: &[TaxonomyId],
    ) -> Result<bool, TaxonomyError> {
        if a.len() != b.len() || a.len() != schema.len() {
            return Err(TaxonomyError::LengthMismatch {
                left: a.len(),
                right: b.len(),
                schema: schema.len(),
            });
        }
        let mut all = true;
        for (k, ((x, y), &tid)) in a.iter().zip(b).zip(schema).enumerate() {
            if x.taxonomy != tid || y.taxonomy != tid {
                return Err(TaxonomyError::TaxonomyMismatch(k));
            }
            all &= self.get(tid).try_subsumes(x.concept, y.concept)?;
        }
        Ok(all)
    }
}
