use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ParseError};
use crate::model::schema::{Schema, TypeId};
use crate::model::sequence::Sequence;
use crate::taxonomy::{ConceptId, TaxonomyId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    Type(TypeId),
    Separator,
}

/// Max-gap and max-projected-length bounds on occurrence index vectors,
/// measured in event ordinals. `None` is unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraints {
    pub max_gap: Option<usize>,
    pub max_projected_length: Option<usize>,
}

impl Constraints {
    pub const NONE: Constraints = Constraints {
        max_gap: None,
        max_projected_length: None,
    };

    pub fn new(max_gap: Option<usize>, max_projected_length: Option<usize>) -> Self {
        Constraints {
            max_gap,
            max_projected_length,
        }
    }

    /// Whether an index vector respects both bounds.
    pub fn admits(&self, lambda: &[usize]) -> bool {
        if let Some(g) = self.max_gap {
            if lambda.windows(2).any(|w| w[1] - w[0] > g) {
                return false;
            }
        }
        if let (Some(w), Some(first), Some(last)) =
            (self.max_projected_length, lambda.first(), lambda.last())
        {
            if last - first > w {
                return false;
            }
        }
        true
    }
}

/// A pattern over event types and transaction separators.
///
/// Stored as one type per event plus the transaction index of each event.
/// Types inside a transaction are non-decreasing; duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypePattern {
    types: Vec<TypeId>,
    tx: Vec<u32>,
}

impl TypePattern {
    /// Build from `(type, starts_new_transaction)` pairs; the flag of the
    /// first event is ignored.
    pub fn from_events(events: &[(TypeId, bool)]) -> Result<TypePattern, ModelError> {
        let mut types = Vec::with_capacity(events.len());
        let mut tx = Vec::with_capacity(events.len());
        let mut cur = 0u32;
        for (i, &(t, new_tx)) in events.iter().enumerate() {
            if i > 0 && new_tx {
                cur += 1;
            }
            types.push(t);
            tx.push(cur);
        }
        let p = TypePattern { types, tx };
        p.validate()?;
        Ok(p)
    }

    pub fn from_elements(elements: &[Element]) -> Result<TypePattern, ModelError> {
        let mut events = Vec::new();
        let mut pending_sep = false;
        for (i, el) in elements.iter().enumerate() {
            match el {
                Element::Separator => {
                    if i == 0 || pending_sep || i + 1 == elements.len() {
                        return Err(ModelError::SchemaMismatch(
                            "empty transaction in pattern".into(),
                        ));
                    }
                    pending_sep = true;
                }
                Element::Type(t) => {
                    events.push((*t, pending_sep));
                    pending_sep = false;
                }
            }
        }
        Self::from_events(&events)
    }

    /// Single-event pattern.
    pub fn single(t: TypeId) -> TypePattern {
        TypePattern {
            types: vec![t],
            tx: vec![0],
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        for i in 1..self.types.len() {
            if self.tx[i] == self.tx[i - 1] && self.types[i] < self.types[i - 1] {
                return Err(ModelError::SchemaMismatch(
                    "types within a transaction must be sorted".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn n_events(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[TypeId] {
        &self.types
    }

    pub fn transaction_of(&self) -> &[u32] {
        &self.tx
    }

    /// Whether events `i` and `i + 1` lie in different transactions.
    #[inline]
    pub fn separated_after(&self, i: usize) -> bool {
        self.tx[i + 1] != self.tx[i]
    }

    pub fn elements(&self) -> Vec<Element> {
        let mut out = Vec::new();
        for i in 0..self.types.len() {
            if i > 0 && self.separated_after(i - 1) {
                out.push(Element::Separator);
            }
            out.push(Element::Type(self.types[i]));
        }
        out
    }

    fn event_flags(&self) -> Vec<(TypeId, bool)> {
        (0..self.types.len())
            .map(|i| (self.types[i], i > 0 && self.separated_after(i - 1)))
            .collect()
    }

    /// Drop event `i`, merging transactions as needed.
    pub fn delete(&self, i: usize) -> TypePattern {
        let flags = self.event_flags();
        let mut out = Vec::with_capacity(flags.len() - 1);
        for (j, &(t, sep)) in flags.iter().enumerate() {
            if j == i {
                continue;
            }
            // a separator before the deleted event carries over to its successor
            let carried = j == i + 1 && flags[i].1;
            out.push((t, sep || carried));
        }
        TypePattern::from_events(&out).expect("deletion keeps transactions sorted")
    }

    /// Pattern without its last event.
    pub fn head(&self) -> TypePattern {
        self.delete(self.types.len() - 1)
    }

    /// Pattern without its first event.
    pub fn tail(&self) -> TypePattern {
        self.delete(0)
    }

    /// Append one event, in the last transaction or after a new separator.
    pub fn extended(&self, t: TypeId, new_transaction: bool) -> Result<TypePattern, ModelError> {
        let mut flags = self.event_flags();
        flags.push((t, new_transaction));
        TypePattern::from_events(&flags)
    }

    /// Occurrence counts of each type, indexed by type id.
    pub fn type_counts(&self, n_types: usize) -> Vec<u32> {
        let mut m = vec![0u32; n_types];
        for t in &self.types {
            m[t.index()] += 1;
        }
        m
    }

    /// Parse `a b ; c` style text: type names separated by spaces, `;`
    /// between transactions.
    pub fn parse(text: &str, schema: &Schema) -> Result<TypePattern, ParseError> {
        let mut elements = Vec::new();
        for tok in text.split_whitespace() {
            if tok == ";" {
                elements.push(Element::Separator);
            } else {
                let t = schema
                    .type_id(tok)
                    .ok_or_else(|| ParseError::general(format!("unknown event type {tok:?}")))?;
                elements.push(Element::Type(t));
            }
        }
        if elements.is_empty() {
            return Err(ParseError::general("empty pattern"));
        }
        TypePattern::from_elements(&elements).map_err(|e| ParseError::general(e.to_string()))
    }

    pub fn display(&self, schema: &Schema) -> String {
        let mut out = String::new();
        for i in 0..self.types.len() {
            if i > 0 {
                out.push_str(if self.separated_after(i - 1) { " ; " } else { " " });
            }
            out.push_str(schema.type_name(self.types[i]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    /// Attribute `attr` of event `event`.
    Event { event: usize, attr: usize },
    /// Attribute `attr` of the relationship between `event` and an earlier
    /// `partner`.
    Relationship {
        event: usize,
        partner: usize,
        attr: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub kind: SlotKind,
    pub taxonomy: TaxonomyId,
}

impl Slot {
    pub fn is_event(&self) -> bool {
        matches!(self.kind, SlotKind::Event { .. })
    }
}

/// Order of the concept slots of a type-pattern: for each event, its own
/// attributes, then its relationships with every earlier event in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayout {
    slots: Vec<Slot>,
    n_events: usize,
}

impl SlotLayout {
    pub fn new(pattern: &TypePattern, schema: &Schema) -> SlotLayout {
        Self::for_types(pattern.types(), schema)
    }

    pub fn for_types(types: &[TypeId], schema: &Schema) -> SlotLayout {
        let mut slots = Vec::new();
        for (m, &tm) in types.iter().enumerate() {
            for (attr, &tax) in schema.event_schema(tm).iter().enumerate() {
                slots.push(Slot {
                    kind: SlotKind::Event { event: m, attr },
                    taxonomy: tax,
                });
            }
            for (k, &tk) in types[..m].iter().enumerate() {
                for (attr, &tax) in schema.rel_schema(tm, tk).iter().enumerate() {
                    slots.push(Slot {
                        kind: SlotKind::Relationship {
                            event: m,
                            partner: k,
                            attr,
                        },
                        taxonomy: tax,
                    });
                }
            }
        }
        SlotLayout {
            slots,
            n_events: types.len(),
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Q, the number of slots.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    /// Concept-aware flattening of the projection of `seq` onto `lambda`.
    pub fn flatten(&self, seq: &Sequence, lambda: &[usize]) -> Result<Vec<ConceptId>, ModelError> {
        if lambda.len() != self.n_events {
            return Err(ModelError::SchemaMismatch(format!(
                "index vector has {} entries, layout expects {}",
                lambda.len(),
                self.n_events
            )));
        }
        crate::model::sequence::check_lambda(lambda, seq.n_events())?;
        let mut out = Vec::with_capacity(self.slots.len());
        self.flatten_into(seq, lambda, &mut out);
        if out.len() != self.slots.len() {
            return Err(ModelError::SchemaMismatch(
                "sequence events do not match the layout types".into(),
            ));
        }
        Ok(out)
    }

    /// Unchecked flattening; `lambda` must be a valid occurrence of the
    /// layout's type-pattern.
    pub fn flatten_into(&self, seq: &Sequence, lambda: &[usize], out: &mut Vec<ConceptId>) {
        for m in 0..lambda.len() {
            out.extend_from_slice(&seq.event(lambda[m]).concepts);
            for k in 0..m {
                out.extend_from_slice(seq.rel(lambda[m], lambda[k]));
            }
        }
    }
}

/// A type-pattern with one concept per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RefinedPattern {
    pub base: TypePattern,
    pub slots: Vec<ConceptId>,
}

impl RefinedPattern {
    /// The refinement with every slot at its taxonomy root.
    pub fn all_root(base: TypePattern, schema: &Schema) -> RefinedPattern {
        let q = SlotLayout::new(&base, schema).len();
        RefinedPattern {
            base,
            slots: vec![ConceptId::ROOT; q],
        }
    }

    pub fn layout(&self, schema: &Schema) -> SlotLayout {
        SlotLayout::new(&self.base, schema)
    }

    pub fn validate(&self, schema: &Schema) -> Result<SlotLayout, ModelError> {
        for &t in self.base.types() {
            if t.index() >= schema.n_types() {
                return Err(ModelError::SchemaMismatch(format!("unknown type id {}", t.0)));
            }
        }
        let layout = self.layout(schema);
        if layout.len() != self.slots.len() {
            return Err(ModelError::SchemaMismatch(format!(
                "pattern has {} slots, layout expects {}",
                self.slots.len(),
                layout.len()
            )));
        }
        for (slot, &c) in layout.slots().iter().zip(&self.slots) {
            if !schema.taxonomy(slot.taxonomy).contains(c) {
                return Err(ModelError::SchemaMismatch("slot concept outside its taxonomy".into()));
            }
        }
        Ok(layout)
    }

    /// Slot-wise subsumption: every slot of `self` subsumes the same slot of
    /// `other`. Both must share the base type-pattern.
    pub fn subsumes(&self, other: &RefinedPattern, schema: &Schema) -> bool {
        if self.base != other.base {
            return false;
        }
        let layout = self.layout(schema);
        layout
            .slots()
            .iter()
            .zip(self.slots.iter().zip(&other.slots))
            .all(|(s, (&a, &b))| schema.taxonomy(s.taxonomy).subsumes(a, b))
    }

    pub fn is_all_root(&self) -> bool {
        self.slots.iter().all(|&c| c == ConceptId::ROOT)
    }

    /// Render as `Type(c,..) Type(c,..) ; Type(c,..) | r(m,k)=[c,..]`, with
    /// 1-based event numbers and only non-root relationship groups.
    pub fn display(&self, schema: &Schema) -> String {
        let layout = self.layout(schema);
        let types = self.base.types();
        let mut out = String::new();
        let mut pos = 0;
        let mut rel_groups: Vec<(usize, usize, &[ConceptId])> = Vec::new();
        for m in 0..types.len() {
            if m > 0 {
                out.push_str(if self.base.separated_after(m - 1) { " ; " } else { " " });
            }
            let ev_taxes = schema.event_schema(types[m]);
            out.push_str(schema.type_name(types[m]));
            out.push('(');
            for (a, &tid) in ev_taxes.iter().enumerate() {
                if a > 0 {
                    out.push(',');
                }
                out.push_str(schema.taxonomy(tid).label(self.slots[pos + a]));
            }
            out.push(')');
            pos += ev_taxes.len();
            for k in 0..m {
                let n = schema.rel_schema(types[m], types[k]).len();
                rel_groups.push((m, k, &self.slots[pos..pos + n]));
                pos += n;
            }
        }
        debug_assert_eq!(pos, layout.len());
        for (m, k, group) in rel_groups {
            if group.iter().all(|&c| c == ConceptId::ROOT) {
                continue;
            }
            let taxes = schema.rel_schema(types[m], types[k]);
            write!(out, " | r({},{})=[", m + 1, k + 1).unwrap();
            for (a, (&c, &tid)) in group.iter().zip(taxes).enumerate() {
                if a > 0 {
                    out.push(',');
                }
                out.push_str(schema.taxonomy(tid).label(c));
            }
            out.push(']');
        }
        out
    }

    /// Parse the rendering produced by [`RefinedPattern::display`].
    pub fn parse(text: &str, schema: &Schema) -> Result<RefinedPattern, ParseError> {
        let err = |m: String| ParseError::general(format!("pattern {text:?}: {m}"));
        let mut parts = text.split(" | ");
        let events_part = parts.next().unwrap_or("").trim();
        let mut events: Vec<(TypeId, bool, Vec<ConceptId>)> = Vec::new();
        let mut sep = false;
        for tok in events_part.split_whitespace() {
            if tok == ";" {
                if events.is_empty() || sep {
                    return Err(err("empty transaction".into()));
                }
                sep = true;
                continue;
            }
            let (name, rest) = tok
                .split_once('(')
                .ok_or_else(|| err(format!("event {tok:?} lacks '('")))?;
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| err(format!("event {tok:?} lacks ')'")))?;
            let t = schema
                .type_id(name)
                .ok_or_else(|| err(format!("unknown event type {name:?}")))?;
            let taxes = schema.event_schema(t);
            let labels: Vec<&str> = if inner.is_empty() { Vec::new() } else { inner.split(',').collect() };
            if labels.len() != taxes.len() {
                return Err(err(format!("event {tok:?} has wrong arity")));
            }
            let cs = labels
                .iter()
                .zip(taxes)
                .map(|(l, &tid)| schema.taxonomy(tid).lookup(l).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            events.push((t, sep, cs));
            sep = false;
        }
        if sep || events.is_empty() {
            return Err(err("empty transaction".into()));
        }
        let flags: Vec<(TypeId, bool)> = events.iter().map(|(t, s, _)| (*t, *s)).collect();
        let base = TypePattern::from_events(&flags).map_err(|e| err(e.to_string()))?;
        let types = base.types().to_vec();

        let mut rels: Vec<Vec<Option<Vec<ConceptId>>>> = (0..types.len()).map(|m| vec![None; m]).collect();
        for clause in parts {
            let clause = clause.trim();
            let body = clause
                .strip_prefix("r(")
                .ok_or_else(|| err(format!("bad relationship clause {clause:?}")))?;
            let (idx, concepts) = body
                .split_once(")=[")
                .ok_or_else(|| err(format!("bad relationship clause {clause:?}")))?;
            let concepts = concepts
                .strip_suffix(']')
                .ok_or_else(|| err(format!("bad relationship clause {clause:?}")))?;
            let (m, k) = idx
                .split_once(',')
                .and_then(|(m, k)| Some((m.parse::<usize>().ok()?, k.parse::<usize>().ok()?)))
                .ok_or_else(|| err(format!("bad relationship indices in {clause:?}")))?;
            if !(1..=types.len()).contains(&m) || k == 0 || k >= m {
                return Err(err(format!("relationship indices out of range in {clause:?}")));
            }
            let taxes = schema.rel_schema(types[m - 1], types[k - 1]);
            let labels: Vec<&str> = concepts.split(',').collect();
            if labels.len() != taxes.len() {
                return Err(err(format!("relationship clause {clause:?} has wrong arity")));
            }
            let cs = labels
                .iter()
                .zip(taxes)
                .map(|(l, &tid)| schema.taxonomy(tid).lookup(l).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            rels[m - 1][k - 1] = Some(cs);
        }

        let mut slots = Vec::new();
        for m in 0..types.len() {
            slots.extend_from_slice(&events[m].2);
            for k in 0..m {
                match rels[m][k].take() {
                    Some(cs) => slots.extend(cs),
                    None => {
                        let n = schema.rel_schema(types[m], types[k]).len();
                        slots.extend(std::iter::repeat_n(ConceptId::ROOT, n));
                    }
                }
            }
        }
        Ok(RefinedPattern { base, slots })
    }
}

/// Whether `pattern` matches `seq`: some strictly increasing index vector
/// agrees on types, subsumes event and relationship concepts, keeps the same
/// transaction separation as the pattern, and satisfies `constraints`.
pub fn pattern_matches(
    pattern: &RefinedPattern,
    seq: &Sequence,
    schema: &Schema,
    constraints: Constraints,
) -> Result<bool, ModelError> {
    let layout = pattern.validate(schema)?;
    let p = pattern.base.n_events();
    if p == 0 {
        return Ok(true);
    }
    // slot offset of each pattern event's block
    let mut offsets = Vec::with_capacity(p);
    let mut pos = 0;
    for m in 0..p {
        offsets.push(pos);
        while pos < layout.len() && slot_event(&layout.slots()[pos]) == m {
            pos += 1;
        }
    }
    let search = Search {
        pattern,
        seq,
        schema,
        layout: &layout,
        offsets: &offsets,
        constraints,
    };
    let mut lambda = Vec::with_capacity(p);
    Ok(search.extend(&mut lambda))
}

fn slot_event(s: &Slot) -> usize {
    match s.kind {
        SlotKind::Event { event, .. } | SlotKind::Relationship { event, .. } => event,
    }
}

struct Search<'a> {
    pattern: &'a RefinedPattern,
    seq: &'a Sequence,
    schema: &'a Schema,
    layout: &'a SlotLayout,
    offsets: &'a [usize],
    constraints: Constraints,
}

impl Search<'_> {
    fn extend(&self, lambda: &mut Vec<usize>) -> bool {
        let m = lambda.len();
        let p = self.pattern.base.n_events();
        if m == p {
            return true;
        }
        let start = lambda.last().map_or(0, |&x| x + 1);
        for j in start..self.seq.n_events() {
            lambda.push(j);
            if self.consistent(lambda) && self.extend(lambda) {
                return true;
            }
            lambda.pop();
        }
        false
    }

    /// Check the newest entry of `lambda` against everything before it.
    fn consistent(&self, lambda: &[usize]) -> bool {
        let m = lambda.len() - 1;
        let j = lambda[m];
        let seq_tx = self.seq.transaction_of();
        let ev = self.seq.event(j);
        if ev.etype != self.pattern.base.types()[m] {
            return false;
        }
        if m > 0 {
            let seq_sep = seq_tx[j] != seq_tx[lambda[m - 1]];
            if seq_sep != self.pattern.base.separated_after(m - 1) {
                return false;
            }
        }
        if !self.constraints.admits(lambda) {
            return false;
        }
        let slots = self.layout.slots();
        let mut pos = self.offsets[m];
        for &c in &ev.concepts {
            let s = &slots[pos];
            if !self.schema.taxonomy(s.taxonomy).subsumes(self.pattern.slots[pos], c) {
                return false;
            }
            pos += 1;
        }
        for &partner in &lambda[..m] {
            for &c in self.seq.rel(j, partner) {
                let s = &slots[pos];
                if !self.schema.taxonomy(s.taxonomy).subsumes(self.pattern.slots[pos], c) {
                    return false;
                }
                pos += 1;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sequence::parse_sequence_db;
    use crate::testutil::{letters_schema, medical_schema, tp, valued_schema};

    #[test]
    fn pattern_delete_merges_transactions() {
        let s = letters_schema(3);
        let p = tp(&s, "a ; b ; c");
        assert_eq!(p.delete(1).display(&s), "a ; c");
        assert_eq!(p.head().display(&s), "a ; b");
        assert_eq!(p.tail().display(&s), "b ; c");
        let q = tp(&s, "a b ; c");
        assert_eq!(q.delete(1).display(&s), "a ; c");
        assert_eq!(q.delete(0).display(&s), "b ; c");
        assert_eq!(q.delete(2).display(&s), "a b");
        let r = tp(&s, "a ; b c");
        assert_eq!(r.delete(0).display(&s), "b c");
        assert_eq!(r.delete(1).display(&s), "a ; c");
    }

    #[test]
    fn unsorted_transaction_is_rejected() {
        let s = letters_schema(2);
        let a = s.type_id("a").unwrap();
        let b = s.type_id("b").unwrap();
        assert!(TypePattern::from_events(&[(b, false), (a, false)]).is_err());
        assert!(TypePattern::from_events(&[(b, false), (a, true)]).is_ok());
        assert!(TypePattern::from_elements(&[Element::Separator, Element::Type(a)]).is_err());
        assert!(TypePattern::from_elements(&[Element::Type(a), Element::Separator]).is_err());
    }

    #[test]
    fn layout_sizes() {
        let s = medical_schema();
        let b = s.type_id("B").unwrap();
        let t = s.type_id("T").unwrap();
        assert_eq!(SlotLayout::for_types(&[b, t], &s).len(), 3);
        assert_eq!(SlotLayout::for_types(&[b, t, t], &s).len(), 6);
        let empty = letters_schema(2);
        let a = empty.type_id("a").unwrap();
        assert!(SlotLayout::for_types(&[a, a, a], &empty).is_empty());
    }

    #[test]
    fn flatten_follows_layout() {
        let s = medical_schema();
        let db = parse_sequence_db("seq x\ne B Ecoli\ne T J01\nr 2 1 Resistant\nend\n", &s).unwrap();
        let b = s.type_id("B").unwrap();
        let t = s.type_id("T").unwrap();
        let layout = SlotLayout::for_types(&[b, t], &s);
        let flat = layout.flatten(&db[0], &[0, 1]).unwrap();
        let labels: Vec<&str> = layout
            .slots()
            .iter()
            .zip(&flat)
            .map(|(sl, &c)| s.taxonomy(sl.taxonomy).label(c))
            .collect();
        assert_eq!(labels, ["Ecoli", "J01", "Resistant"]);
        assert!(layout.flatten(&db[0], &[0]).is_err());
        assert!(layout.flatten(&db[0], &[1, 0]).is_err());
    }

    #[test]
    fn separator_semantics() {
        let s = letters_schema(2);
        let db = parse_sequence_db("seq ab\ne a\ne b\nend\nseq a_b\ne a\nts\ne b\nend\n", &s).unwrap();
        let sep = RefinedPattern::all_root(tp(&s, "a ; b"), &s);
        let same = RefinedPattern::all_root(tp(&s, "a b"), &s);
        assert!(!pattern_matches(&sep, &db[0], &s, Constraints::NONE).unwrap());
        assert!(pattern_matches(&sep, &db[1], &s, Constraints::NONE).unwrap());
        assert!(!pattern_matches(&same, &db[1], &s, Constraints::NONE).unwrap());
        assert!(pattern_matches(&same, &db[0], &s, Constraints::NONE).unwrap());
    }

    #[test]
    fn concept_subsumption_in_matching() {
        let s = medical_schema();
        let db = parse_sequence_db(
            "seq x\ne B Ecoli\ne T J01CA\nr 2 1 Resistant\nend\n",
            &s,
        )
        .unwrap();
        let root = RefinedPattern::parse("B(Any) T(ATC)", &s).unwrap();
        assert!(root.is_all_root());
        assert!(pattern_matches(&root, &db[0], &s, Constraints::NONE).unwrap());
        let tested = RefinedPattern::parse("B(Gammaproteobacteria) T(J01C) | r(2,1)=[Tested]", &s).unwrap();
        assert!(pattern_matches(&tested, &db[0], &s, Constraints::NONE).unwrap());
        let sensitive = RefinedPattern::parse("B(Any) T(ATC) | r(2,1)=[Sensitive]", &s).unwrap();
        assert!(!pattern_matches(&sensitive, &db[0], &s, Constraints::NONE).unwrap());
        let wrong_bug = RefinedPattern::parse("B(Firmicutes) T(ATC)", &s).unwrap();
        assert!(!pattern_matches(&wrong_bug, &db[0], &s, Constraints::NONE).unwrap());
    }

    #[test]
    fn gap_constraints_in_matching() {
        let s = valued_schema(2);
        let db = parse_sequence_db("seq x\ne a v1\nts\ne b v1\nts\ne a v2\nend\n", &s).unwrap();
        let aa = RefinedPattern::all_root(tp(&s, "a ; a"), &s);
        assert!(!pattern_matches(&aa, &db[0], &s, Constraints::new(Some(1), None)).unwrap());
        assert!(pattern_matches(&aa, &db[0], &s, Constraints::new(Some(2), None)).unwrap());
        assert!(!pattern_matches(&aa, &db[0], &s, Constraints::new(None, Some(1))).unwrap());
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let s = medical_schema();
        let db = parse_sequence_db("seq x\ne B Ecoli\nend\n", &s).unwrap();
        let bad = RefinedPattern {
            base: TypePattern::single(s.type_id("B").unwrap()),
            slots: vec![],
        };
        assert!(pattern_matches(&bad, &db[0], &s, Constraints::NONE).is_err());
    }

    #[test]
    fn display_and_parse() {
        let s = medical_schema();
        let text = "B(Gammaproteobacteria) ; T(J01C) T(J01D) | r(2,1)=[Resistant] | r(3,2)=[≠]";
        let p = RefinedPattern::parse(text, &s).unwrap();
        assert_eq!(p.base.display(&s), "B ; T T");
        assert_eq!(p.display(&s), text);
        assert!(RefinedPattern::parse("B(Any) ;", &s).is_err());
        assert!(RefinedPattern::parse("B(Any) | r(1,2)=[Tested]", &s).is_err());
        assert!(RefinedPattern::parse("T(ATC) B(Any)", &s).is_err());
    }

    #[test]
    fn refined_subsumption() {
        let s = medical_schema();
        let general = RefinedPattern::parse("B(Any) T(ATC) | r(2,1)=[Tested]", &s).unwrap();
        let specific = RefinedPattern::parse("B(Ecoli) T(ATC) | r(2,1)=[Resistant]", &s).unwrap();
        assert!(general.subsumes(&specific, &s));
        assert!(!specific.subsumes(&general, &s));
        assert!(general.subsumes(&general, &s));
    }
}
