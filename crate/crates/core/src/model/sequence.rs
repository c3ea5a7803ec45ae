use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{ModelError, ParseError};
use crate::model::pattern::Element;
use crate::model::schema::{Schema, TypeId};
use crate::taxonomy::ConceptId;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub etype: TypeId,
    /// Aligned with the event type schema of `etype`.
    pub concepts: Vec<ConceptId>,
}

impl Event {
    pub fn new(etype: TypeId, concepts: Vec<ConceptId>) -> Self {
        Event { etype, concepts }
    }
}

/// Index of the unordered pair `{k, l}` (k > l, 0-based) in the triangular
/// relationship table.
#[inline]
pub(crate) fn pair_index(k: usize, l: usize) -> usize {
    debug_assert!(k > l);
    k * (k - 1) / 2 + l
}

/// A relationship-aware sequence in canonical form.
///
/// Event ordinals are 0-based positions in the event-only view (separators
/// excluded). Transactions are stored as a per-event transaction index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    id: String,
    events: Vec<Event>,
    tx: Vec<u32>,
    rel_start: Vec<u32>,
    rel_data: Vec<ConceptId>,
}

/// Canonical order of two events: type name, then concept arrays compared at
/// the first differing concept by pre-order rank.
pub fn compare_events(schema: &Schema, a: &Event, b: &Event) -> Ordering {
    a.etype.cmp(&b.etype).then_with(|| {
        let taxes = schema.event_schema(a.etype);
        for ((x, y), &tid) in a.concepts.iter().zip(&b.concepts).zip(taxes) {
            let tax = schema.taxonomy(tid);
            match tax.rank(*x).cmp(&tax.rank(*y)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    })
}

/// Relationship table keyed by input ordinals, used while building.
pub type RelInput = Vec<((usize, usize), Vec<ConceptId>)>;

impl Sequence {
    /// Build and canonicalize a sequence.
    ///
    /// `rels` is keyed by 0-based input ordinals `(k, l)` with `k > l`;
    /// missing pairs default to the all-root array.
    pub fn new(
        schema: &Schema,
        id: impl Into<String>,
        transactions: Vec<Vec<Event>>,
        rels: RelInput,
    ) -> Result<Sequence, ParseError> {
        let id = id.into();
        let mut events = Vec::new();
        let mut tx = Vec::new();
        for (t, trans) in transactions.into_iter().enumerate() {
            if trans.is_empty() {
                return Err(ParseError::general(format!("sequence {id}: empty transaction")));
            }
            let mut seen = HashSet::new();
            for e in trans {
                validate_event(schema, &e).map_err(|m| ParseError::general(format!("sequence {id}: {m}")))?;
                if !seen.insert(e.clone()) {
                    return Err(ParseError::general(format!(
                        "sequence {id}: duplicate event in transaction {}",
                        t + 1
                    )));
                }
                events.push(e);
                tx.push(t as u32);
            }
        }

        let n = events.len();
        let mut table: Vec<Option<Vec<ConceptId>>> = vec![None; n * n.saturating_sub(1) / 2];
        for ((k, l), concepts) in rels {
            if k >= n || l >= n || k <= l {
                return Err(ParseError::general(format!(
                    "sequence {id}: bad relationship indices ({}, {})",
                    k + 1,
                    l + 1
                )));
            }
            let rschema = schema.rel_schema(events[k].etype, events[l].etype);
            if concepts.len() != rschema.len() {
                return Err(ParseError::general(format!(
                    "sequence {id}: relationship ({}, {}) has {} concepts, schema expects {}",
                    k + 1,
                    l + 1,
                    concepts.len(),
                    rschema.len()
                )));
            }
            for (&c, &tid) in concepts.iter().zip(rschema) {
                if !schema.taxonomy(tid).contains(c) {
                    return Err(ParseError::general(format!("sequence {id}: bad relationship concept")));
                }
            }
            let slot = &mut table[pair_index(k, l)];
            if slot.is_some() {
                return Err(ParseError::general(format!(
                    "sequence {id}: relationship ({}, {}) given twice",
                    k + 1,
                    l + 1
                )));
            }
            *slot = Some(concepts);
        }

        let mut rel_start = Vec::with_capacity(table.len() + 1);
        let mut rel_data = Vec::new();
        rel_start.push(0);
        for k in 1..n {
            for l in 0..k {
                match table[pair_index(k, l)].take() {
                    Some(c) => rel_data.extend(c),
                    None => {
                        let len = schema.rel_schema(events[k].etype, events[l].etype).len();
                        rel_data.extend(std::iter::repeat_n(ConceptId::ROOT, len));
                    }
                }
                rel_start.push(rel_data.len() as u32);
            }
        }

        let raw = Sequence {
            id,
            events,
            tx,
            rel_start,
            rel_data,
        };
        Ok(raw.canonicalize(schema))
    }

    /// Sort every transaction canonically and re-index relationships.
    /// Idempotent.
    pub fn canonicalize(&self, schema: &Schema) -> Sequence {
        let n = self.events.len();
        // order[new] = old
        let mut order: Vec<usize> = (0..n).collect();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && self.tx[end] == self.tx[start] {
                end += 1;
            }
            order[start..end].sort_by(|&a, &b| compare_events(schema, &self.events[a], &self.events[b]));
            start = end;
        }

        let events: Vec<Event> = order.iter().map(|&o| self.events[o].clone()).collect();
        let mut rel_start = Vec::with_capacity(self.rel_start.len());
        let mut rel_data = Vec::with_capacity(self.rel_data.len());
        rel_start.push(0);
        for k in 1..n {
            for l in 0..k {
                rel_data.extend_from_slice(self.rel_by_pair(order[k], order[l]));
                rel_start.push(rel_data.len() as u32);
            }
        }
        Sequence {
            id: self.id.clone(),
            events,
            tx: self.tx.clone(),
            rel_start,
            rel_data,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn event(&self, i: usize) -> &Event {
        &self.events[i]
    }

    /// Transaction index of each event.
    pub fn transaction_of(&self) -> &[u32] {
        &self.tx
    }

    pub fn n_transactions(&self) -> usize {
        self.tx.last().map_or(0, |&t| t as usize + 1)
    }

    /// Number of elements, events plus separators.
    pub fn len_elements(&self) -> usize {
        self.events.len() + self.n_transactions().saturating_sub(1)
    }

    fn rel_by_pair(&self, a: usize, b: usize) -> &[ConceptId] {
        let (k, l) = if a > b { (a, b) } else { (b, a) };
        let p = pair_index(k, l);
        &self.rel_data[self.rel_start[p] as usize..self.rel_start[p + 1] as usize]
    }

    /// Relationship concepts between two distinct events (symmetric).
    #[inline]
    pub fn rel(&self, a: usize, b: usize) -> &[ConceptId] {
        assert_ne!(a, b, "an event has no relationship with itself");
        self.rel_by_pair(a, b)
    }

    /// Position of the `i`-th event (0-based) in the full element list,
    /// separators included.
    pub fn event_index(&self, i: usize) -> Result<usize, ModelError> {
        if i >= self.events.len() {
            return Err(ModelError::EventOutOfRange(i, self.events.len()));
        }
        Ok(i + self.tx[i] as usize)
    }

    /// Events at the positions of a strictly increasing index vector.
    pub fn project(&self, lambda: &[usize]) -> Result<Vec<&Event>, ModelError> {
        check_lambda(lambda, self.events.len())?;
        Ok(lambda.iter().map(|&i| &self.events[i]).collect())
    }

    /// The type-aware view: event types with separators kept in place.
    pub fn type_aware(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(self.len_elements());
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 && self.tx[i] != self.tx[i - 1] {
                out.push(Element::Separator);
            }
            out.push(Element::Type(e.etype));
        }
        out
    }

    /// Serialize in the sequence-file format. Relationships equal to the
    /// all-root default are omitted.
    pub fn to_text(&self, schema: &Schema) -> String {
        let mut out = String::new();
        writeln!(out, "seq {}", self.id).unwrap();
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 && self.tx[i] != self.tx[i - 1] {
                out.push_str("ts\n");
            }
            out.push_str("e ");
            out.push_str(schema.type_name(e.etype));
            if !e.concepts.is_empty() {
                out.push(' ');
                push_concepts(&mut out, schema, schema.event_schema(e.etype), &e.concepts);
            }
            out.push('\n');
        }
        for k in 1..self.events.len() {
            for l in 0..k {
                let r = self.rel(k, l);
                if r.iter().any(|&c| c != ConceptId::ROOT) {
                    let rs = schema.rel_schema(self.events[k].etype, self.events[l].etype);
                    write!(out, "r {} {} ", k + 1, l + 1).unwrap();
                    push_concepts(&mut out, schema, rs, r);
                    out.push('\n');
                }
            }
        }
        out.push_str("end\n");
        out
    }
}

fn push_concepts(out: &mut String, schema: &Schema, taxes: &[crate::taxonomy::TaxonomyId], cs: &[ConceptId]) {
    for (j, (&c, &tid)) in cs.iter().zip(taxes).enumerate() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(schema.taxonomy(tid).label(c));
    }
}

pub(crate) fn check_lambda(lambda: &[usize], n: usize) -> Result<(), ModelError> {
    for (i, &x) in lambda.iter().enumerate() {
        if x >= n {
            return Err(ModelError::EventOutOfRange(x, n));
        }
        if i > 0 && lambda[i - 1] >= x {
            return Err(ModelError::NotIncreasing);
        }
    }
    Ok(())
}

fn validate_event(schema: &Schema, e: &Event) -> Result<(), String> {
    if e.etype.index() >= schema.n_types() {
        return Err(format!("unknown event type id {}", e.etype.0));
    }
    let taxes = schema.event_schema(e.etype);
    if taxes.len() != e.concepts.len() {
        return Err(format!(
            "event of type {} has {} concepts, schema expects {}",
            schema.type_name(e.etype),
            e.concepts.len(),
            taxes.len()
        ));
    }
    for (&c, &tid) in e.concepts.iter().zip(taxes) {
        if !schema.taxonomy(tid).contains(c) {
            return Err("concept outside its taxonomy".into());
        }
    }
    Ok(())
}

fn parse_concepts(schema: &Schema, taxes: &[crate::taxonomy::TaxonomyId], text: Option<&str>) -> Result<Vec<ConceptId>, String> {
    let labels: Vec<&str> = match text {
        None => Vec::new(),
        Some(t) => t.split(',').map(str::trim).collect(),
    };
    if labels.len() != taxes.len() {
        return Err(format!(
            "expected {} concepts, found {}",
            taxes.len(),
            labels.len()
        ));
    }
    labels
        .iter()
        .zip(taxes)
        .map(|(l, &tid)| {
            let tax = schema.taxonomy(tid);
            tax.lookup(l)
                .map_err(|_| format!("unknown concept {l:?} in taxonomy {}", tax.name()))
        })
        .collect()
}

struct PendingSeq {
    id: String,
    start_line: usize,
    transactions: Vec<Vec<Event>>,
    current: Vec<Event>,
    current_seen: HashSet<Event>,
    n_events: usize,
    types: Vec<TypeId>,
    rels: Vec<((usize, usize), Vec<ConceptId>, usize)>,
}

/// Parse a sequence-database file against `schema`.
pub fn parse_sequence_db(text: &str, schema: &Schema) -> Result<Vec<Sequence>, ParseError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    let mut pending: Option<PendingSeq> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap();
        match (keyword, pending.as_mut()) {
            ("seq", None) => {
                let id = parts
                    .next()
                    .ok_or_else(|| ParseError::at(line_no, "expected: seq <id>"))?;
                if parts.next().is_some() {
                    return Err(ParseError::at(line_no, "sequence ids cannot contain whitespace"));
                }
                if !ids.insert(id.to_string()) {
                    return Err(ParseError::at(line_no, format!("duplicate sequence id {id:?}")));
                }
                pending = Some(PendingSeq {
                    id: id.to_string(),
                    start_line: line_no,
                    transactions: Vec::new(),
                    current: Vec::new(),
                    current_seen: HashSet::new(),
                    n_events: 0,
                    types: Vec::new(),
                    rels: Vec::new(),
                });
            }
            ("seq", Some(p)) => {
                return Err(ParseError::at(
                    line_no,
                    format!("sequence {:?} opened at line {} is not closed", p.id, p.start_line),
                ))
            }
            (_, None) => {
                return Err(ParseError::at(line_no, format!("{keyword:?} outside a seq block")))
            }
            ("e", Some(p)) => {
                let tname = parts
                    .next()
                    .ok_or_else(|| ParseError::at(line_no, "expected: e <type> [concepts]"))?;
                let etype = schema
                    .type_id(tname)
                    .ok_or_else(|| ParseError::at(line_no, format!("unknown event type {tname:?}")))?;
                let concepts = parse_concepts(schema, schema.event_schema(etype), parts.next())
                    .map_err(|m| ParseError::at(line_no, m))?;
                if parts.next().is_some() {
                    return Err(ParseError::at(line_no, "unexpected trailing tokens"));
                }
                let ev = Event::new(etype, concepts);
                if !p.current_seen.insert(ev.clone()) {
                    return Err(ParseError::at(line_no, "duplicate event within a transaction"));
                }
                p.current.push(ev);
                p.types.push(etype);
                p.n_events += 1;
            }
            ("ts", Some(p)) => {
                if p.current.is_empty() {
                    return Err(ParseError::at(line_no, "empty transaction"));
                }
                p.transactions.push(std::mem::take(&mut p.current));
                p.current_seen.clear();
            }
            ("r", Some(p)) => {
                let k = parts.next().and_then(|s| s.parse::<usize>().ok());
                let l = parts.next().and_then(|s| s.parse::<usize>().ok());
                let (k, l) = match (k, l) {
                    (Some(k), Some(l)) => (k, l),
                    _ => return Err(ParseError::at(line_no, "expected: r <k> <l> <concepts>")),
                };
                if k <= l || l == 0 {
                    return Err(ParseError::at(line_no, format!("relationship indices must satisfy k > l >= 1 (got {k} {l})")));
                }
                if k > p.n_events {
                    return Err(ParseError::at(
                        line_no,
                        format!("relationship index {k} out of range: only {} events so far", p.n_events),
                    ));
                }
                let rs = schema.rel_schema(p.types[k - 1], p.types[l - 1]);
                let concepts = parse_concepts(schema, rs, parts.next())
                    .map_err(|m| ParseError::at(line_no, m))?;
                if parts.next().is_some() {
                    return Err(ParseError::at(line_no, "unexpected trailing tokens"));
                }
                if p.rels.iter().any(|(key, _, _)| *key == (k - 1, l - 1)) {
                    return Err(ParseError::at(line_no, format!("relationship ({k}, {l}) given twice")));
                }
                p.rels.push(((k - 1, l - 1), concepts, line_no));
            }
            ("end", Some(_)) => {
                let mut p = pending.take().unwrap();
                if !p.current.is_empty() {
                    p.transactions.push(std::mem::take(&mut p.current));
                } else if !p.transactions.is_empty() {
                    return Err(ParseError::at(line_no, "empty transaction"));
                }
                let rels = p.rels.into_iter().map(|(key, c, _)| (key, c)).collect();
                let seq = Sequence::new(schema, p.id, p.transactions, rels)
                    .map_err(|e| e.with_line(p.start_line))?;
                out.push(seq);
            }
            (other, Some(_)) => {
                return Err(ParseError::at(line_no, format!("unknown directive {other:?}")))
            }
        }
    }
    if let Some(p) = pending {
        return Err(ParseError::at(
            p.start_line,
            format!("sequence {:?} is missing its end line", p.id),
        ));
    }
    Ok(out)
}

/// Serialize a whole database.
pub fn db_to_text(db: &[Sequence], schema: &Schema) -> String {
    db.iter().map(|s| s.to_text(schema)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{medical_schema, types_of};

    #[test]
    fn builds_relationship_from_r_line() {
        let s = medical_schema();
        let db = parse_sequence_db("seq s1\ne B Ecoli\ne T J01CA\nr 2 1 Resistant\nend\n", &s).unwrap();
        assert_eq!(db.len(), 1);
        let seq = &db[0];
        let sir = s.taxonomy(s.taxonomies().id("SIR").unwrap());
        assert_eq!(seq.rel(1, 0), &[sir.lookup("Resistant").unwrap()]);
        assert_eq!(seq.rel(0, 1), seq.rel(1, 0));
    }

    #[test]
    fn missing_relationship_defaults_to_root() {
        let s = medical_schema();
        let db = parse_sequence_db("seq s1\ne B Ecoli\ne T J01CA\nend\n", &s).unwrap();
        assert_eq!(db[0].rel(1, 0), &[ConceptId::ROOT]);
    }

    #[test]
    fn duplicate_event_in_transaction_is_rejected() {
        let s = medical_schema();
        let err = parse_sequence_db("seq s1\ne B Ecoli\ne B Ecoli\nend\n", &s).unwrap_err();
        assert_eq!(err, ParseError::at(3, "duplicate event within a transaction"));
        // the same event in different transactions is fine
        parse_sequence_db("seq s1\ne B Ecoli\nts\ne B Ecoli\nend\n", &s).unwrap();
    }

    #[test]
    fn sequence_file_errors() {
        let s = medical_schema();
        let cases = [
            ("seq a\nts\ne B Ecoli\nend\n", 2),
            ("seq a\ne B Ecoli\nts\nts\ne B Ecoli\nend\n", 4),
            ("seq a\ne B Ecoli\nts\nend\n", 4),
            ("seq a\ne X Ecoli\nend\n", 2),
            ("seq a\ne B Nope\nend\n", 2),
            ("seq a\ne B\nend\n", 2),
            ("seq a\ne B Ecoli\ne T J01\nr 1 2 Resistant\nend\n", 4),
            ("seq a\ne B Ecoli\ne T J01\nr 3 1 Resistant\nend\n", 4),
            ("seq a\ne B Ecoli\ne T J01\nr 2 1 =\nend\n", 4),
            ("seq a\ne B Ecoli\n", 1),
            ("e B Ecoli\n", 1),
            ("seq a\nend\nseq a\nend\n", 3),
        ];
        for (text, line) in cases {
            match parse_sequence_db(text, &s) {
                Err(ParseError::Line { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("expected error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn canonical_order_by_type_then_rank() {
        let s = medical_schema();
        let db = parse_sequence_db(
            "seq a\ne T J01CA\ne B Klebsiella\ne B Gammaproteobacteria\nr 2 1 Resistant\nr 3 1 Sensitive\nend\n",
            &s,
        )
        .unwrap();
        let seq = &db[0];
        let newt = s.taxonomy(s.taxonomies().id("NewT").unwrap());
        let sir = s.taxonomy(s.taxonomies().id("SIR").unwrap());
        assert_eq!(types_of(&s, seq), "B B T");
        assert_eq!(newt.label(seq.event(0).concepts[0]), "Gammaproteobacteria");
        assert_eq!(newt.label(seq.event(1).concepts[0]), "Klebsiella");
        // Gammaproteobacteria was input event 3, related to the drug as Sensitive
        assert_eq!(sir.label(seq.rel(2, 0)[0]), "Sensitive");
        assert_eq!(sir.label(seq.rel(2, 1)[0]), "Resistant");
        assert_eq!(seq.canonicalize(&s), *seq);
    }

    #[test]
    fn permuted_input_serializes_identically() {
        let s = medical_schema();
        let a = parse_sequence_db(
            "seq a\ne T J01CA\ne B Ecoli\nr 2 1 Resistant\nts\ne T J01D\nend\n",
            &s,
        )
        .unwrap();
        let b = parse_sequence_db(
            "seq a\ne B Ecoli\ne T J01CA\nr 2 1 Resistant\nts\ne T J01D\nend\n",
            &s,
        )
        .unwrap();
        assert_eq!(db_to_text(&a, &s), db_to_text(&b, &s));
        let again = parse_sequence_db(&db_to_text(&a, &s), &s).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn event_index_counts_separators() {
        let s = medical_schema();
        let db = parse_sequence_db(
            "seq x\ne B Ecoli\ne T J01\nts\ne T J01\nend\nseq y\ne B Ecoli\nend\nseq z\ne B Ecoli\nts\ne B Staph\nts\ne B Ecoli\nend\n",
            &s,
        )
        .unwrap();
        // 1-based E(Σ,3) = 4 for ⟨a b ; c⟩
        assert_eq!(db[0].event_index(2).unwrap() + 1, 4);
        assert_eq!(db[1].event_index(0).unwrap() + 1, 1);
        assert_eq!(db[2].event_index(1).unwrap() + 1, 3);
        assert!(db[1].event_index(1).is_err());
        assert_eq!(db[2].len_elements(), 5);
    }

    #[test]
    fn projection() {
        let s = medical_schema();
        let db = parse_sequence_db(
            "seq x\ne B Ecoli\ne B Staph\ne T J01CA\ne T J01DD\nend\n",
            &s,
        )
        .unwrap();
        let seq = &db[0];
        let p = seq.project(&[0, 2]).unwrap();
        assert_eq!(p, vec![seq.event(0), seq.event(2)]);
        assert_eq!(seq.project(&[0, 1, 2, 3]).unwrap().len(), 4);
        assert!(seq.project(&[]).unwrap().is_empty());
        assert_eq!(seq.project(&[2, 1]), Err(ModelError::NotIncreasing));
        assert_eq!(seq.project(&[4]), Err(ModelError::EventOutOfRange(4, 4)));
    }

    #[test]
    fn type_aware_keeps_separators() {
        let s = medical_schema();
        let db = parse_sequence_db("seq x\ne B Ecoli\ne T J01CA\nts\ne T J01DD\nend\n", &s).unwrap();
        let b = s.type_id("B").unwrap();
        let t = s.type_id("T").unwrap();
        assert_eq!(
            db[0].type_aware(),
            vec![Element::Type(b), Element::Type(t), Element::Separator, Element::Type(t)]
        );
    }

    #[test]
    fn empty_db_and_empty_sequence() {
        let s = medical_schema();
        assert!(parse_sequence_db("# nothing\n", &s).unwrap().is_empty());
        let db = parse_sequence_db("seq e\nend\n", &s).unwrap();
        assert_eq!(db[0].n_events(), 0);
        assert_eq!(db[0].n_transactions(), 0);
    }
}
