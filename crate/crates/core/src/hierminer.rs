//! Specialization of frequent type-patterns down the taxonomies.
//!
//! Each occurrence of a type-pattern is flattened into one concept per slot.
//! Every non-root ancestor of a slot concept, paired with the slot, becomes an
//! item; an occurrence row holds all items of its concepts. Itemsets are
//! counted by the number of distinct sequences among the rows that contain
//! them, and the maximal frequent itemsets map back to the most specific
//! frequent refinements of the type-pattern.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::RefineError;
use crate::model::{RefinedPattern, Schema, Sequence, SlotLayout, TypePattern};
use crate::taxonomy::ConceptId;
use crate::typeminer::FrequentTypePattern;

/// A `(concept, slot)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Item {
    pub slot: usize,
    pub concept: ConceptId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    items: Vec<Item>,
    index: HashMap<Item, usize>,
}

impl Vocabulary {
    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, item: &Item) -> Option<usize> {
        self.index.get(item).copied()
    }
}

/// Vertical occurrence matrix: for each vocabulary item the ascending rows
/// containing it, plus the sequence of each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceMatrix {
    pub n_rows: usize,
    pub item_rows: Vec<Vec<u32>>,
    pub seq_of_row: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementResult {
    pub base: TypePattern,
    pub type_support: usize,
    pub refinements: Vec<(RefinedPattern, usize)>,
}

fn flatten_rows(ftp: &FrequentTypePattern, db: &[Sequence], layout: &SlotLayout) -> Vec<ConceptId> {
    let q = layout.len();
    let mut data = Vec::with_capacity(q * ftp.occurrences.len());
    let mut lambda = Vec::with_capacity(ftp.pattern.n_events());
    for (seq, l) in ftp.occurrences.iter() {
        lambda.clear();
        lambda.extend(l.iter().map(|&x| x as usize));
        layout.flatten_into(&db[seq], &lambda, &mut data);
    }
    debug_assert_eq!(data.len(), q * ftp.occurrences.len());
    data
}

fn active_slots(layout: &SlotLayout, relationship_only: bool) -> Vec<usize> {
    layout
        .slots()
        .iter()
        .enumerate()
        .filter(|(_, s)| !(relationship_only && s.is_event()))
        .map(|(j, _)| j)
        .collect()
}

fn vocabulary_from_rows(rows: &[ConceptId], layout: &SlotLayout, schema: &Schema, active: &[usize]) -> Vocabulary {
    let q = layout.len();
    let mut seen: Vec<Vec<bool>> = layout
        .slots()
        .iter()
        .map(|s| vec![false; schema.taxonomy(s.taxonomy).len()])
        .collect();
    if q > 0 {
        for row in rows.chunks_exact(q) {
            for &j in active {
                let tax = schema.taxonomy(layout.slots()[j].taxonomy);
                let mut c = row[j];
                while let Some(p) = tax.parent(c) {
                    if seen[j][c.index()] {
                        break;
                    }
                    seen[j][c.index()] = true;
                    c = p;
                }
            }
        }
    }
    let mut items = Vec::new();
    for &j in active {
        let tax = schema.taxonomy(layout.slots()[j].taxonomy);
        let mut slot_items: Vec<Item> = tax
            .concepts()
            .filter(|c| seen[j][c.index()])
            .map(|concept| Item { slot: j, concept })
            .collect();
        slot_items.sort_by_key(|it| tax.rank(it.concept));
        items.extend(slot_items);
    }
    let index = items.iter().enumerate().map(|(i, &it)| (it, i)).collect();
    Vocabulary { items, index }
}

/// All `(non-root ancestor, slot)` pairs observed over the occurrences of
/// `ftp`, ordered by slot, then pre-order rank. Event slots are skipped when
/// `relationship_only` is set.
pub fn build_vocabulary(
    ftp: &FrequentTypePattern,
    db: &[Sequence],
    schema: &Schema,
    relationship_only: bool,
) -> Vocabulary {
    let layout = SlotLayout::new(&ftp.pattern, schema);
    let rows = flatten_rows(ftp, db, &layout);
    vocabulary_from_rows(&rows, &layout, schema, &active_slots(&layout, relationship_only))
}

fn matrix_from_rows(
    ftp: &FrequentTypePattern,
    rows: &[ConceptId],
    layout: &SlotLayout,
    schema: &Schema,
    vocab: &Vocabulary,
) -> OccurrenceMatrix {
    let q = layout.len();
    let m = ftp.occurrences.len();
    // dense (slot, concept) -> item lookup
    let mut lookup: Vec<Vec<u32>> = layout
        .slots()
        .iter()
        .map(|s| vec![u32::MAX; schema.taxonomy(s.taxonomy).len()])
        .collect();
    let mut slots_used: Vec<usize> = Vec::new();
    for (i, it) in vocab.items().iter().enumerate() {
        lookup[it.slot][it.concept.index()] = i as u32;
        if slots_used.last() != Some(&it.slot) {
            slots_used.push(it.slot);
        }
    }
    let mut item_rows = vec![Vec::new(); vocab.len()];
    if q > 0 {
        for (r, row) in rows.chunks_exact(q).enumerate() {
            for &j in &slots_used {
                let tax = schema.taxonomy(layout.slots()[j].taxonomy);
                let mut c = row[j];
                while tax.parent(c).is_some() {
                    let it = lookup[j][c.index()];
                    if it != u32::MAX {
                        item_rows[it as usize].push(r as u32);
                    }
                    c = tax.parent(c).unwrap();
                }
            }
        }
    }
    OccurrenceMatrix {
        n_rows: m,
        item_rows,
        seq_of_row: (0..m).map(|r| ftp.occurrences.seq_of(r) as u32).collect(),
    }
}

/// Vertical occurrence matrix of `ftp` over `vocab`; row order equals the
/// occurrence order.
pub fn build_occurrence_matrix(
    ftp: &FrequentTypePattern,
    db: &[Sequence],
    vocab: &Vocabulary,
    schema: &Schema,
) -> OccurrenceMatrix {
    let layout = SlotLayout::new(&ftp.pattern, schema);
    let rows = flatten_rows(ftp, db, &layout);
    matrix_from_rows(ftp, &rows, &layout, schema, vocab)
}

/// Distinct sequences among ascending `rows`.
pub fn count_sequences(rows: &[u32], seq_of_row: &[u32]) -> usize {
    let mut count = 0;
    let mut last = None;
    for &r in rows {
        let s = seq_of_row[r as usize];
        if last != Some(s) {
            count += 1;
            last = Some(s);
        }
    }
    count
}

pub fn intersect_rows(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Number of sequences owning at least one row common to all `row_sets`.
/// With no row sets every row counts.
pub fn sequence_support(row_sets: &[&[u32]], seq_of_row: &[u32]) -> usize {
    match row_sets.split_first() {
        None => {
            let all: Vec<u32> = (0..seq_of_row.len() as u32).collect();
            count_sequences(&all, seq_of_row)
        }
        Some((first, rest)) => {
            let mut acc = first.to_vec();
            for r in rest {
                acc = intersect_rows(&acc, r);
            }
            count_sequences(&acc, seq_of_row)
        }
    }
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

struct MaxSearch<'a> {
    seq_of_row: &'a [u32],
    min_support: usize,
    found: Vec<Vec<usize>>,
}

impl MaxSearch<'_> {
    fn subsumed(&self, items: &[usize]) -> bool {
        self.found.iter().any(|f| f.len() >= items.len() && is_subset(items, f))
    }

    fn record(&mut self, mut items: Vec<usize>) {
        items.sort_unstable();
        if !self.subsumed(&items) {
            self.found.push(items);
        }
    }

    /// `prefix` is frequent; `cands` are later items that
    /// stay frequent together with it, each with its intersected rows.
    fn extend(&mut self, prefix: &mut Vec<usize>, cands: Vec<(usize, Vec<u32>)>) {
        if cands.is_empty() {
            self.record(prefix.clone());
            return;
        }
        let mut everything: Vec<usize> = prefix.iter().copied().chain(cands.iter().map(|c| c.0)).collect();
        everything.sort_unstable();
        if self.subsumed(&everything) {
            return;
        }
        // the whole remaining tail may already be frequent
        let mut tail_rows = cands[0].1.clone();
        for c in &cands[1..] {
            tail_rows = intersect_rows(&tail_rows, &c.1);
        }
        if count_sequences(&tail_rows, self.seq_of_row) >= self.min_support {
            self.record(everything);
            return;
        }

        for idx in 0..cands.len() {
            let (item, ref item_rows) = cands[idx];
            let base_len = prefix.len();
            prefix.push(item);
            let mut next = Vec::new();
            for (other, other_rows) in &cands[idx + 1..] {
                let r = intersect_rows(item_rows, other_rows);
                if r.len() == item_rows.len() {
                    // `other` is present in every row of the new prefix: any
                    // maximal set below contains it
                    prefix.push(*other);
                } else if count_sequences(&r, self.seq_of_row) >= self.min_support {
                    next.push((*other, r));
                }
            }
            self.extend(prefix, next);
            prefix.truncate(base_len);
        }
    }
}

/// Maximal itemsets (sorted vocabulary indices) whose sequence support is at
/// least `min_support`. The empty itemset is returned alone when it is
/// frequent and no single item is.
pub fn mine_maximal_refinements(matrix: &OccurrenceMatrix, min_support: usize) -> Vec<Vec<usize>> {
    let all_rows: Vec<u32> = (0..matrix.n_rows as u32).collect();
    if count_sequences(&all_rows, &matrix.seq_of_row) < min_support.max(1) {
        return Vec::new();
    }
    let cands: Vec<(usize, Vec<u32>)> = matrix
        .item_rows
        .iter()
        .enumerate()
        .filter(|(_, rows)| count_sequences(rows, &matrix.seq_of_row) >= min_support)
        .map(|(i, rows)| (i, rows.clone()))
        .collect();
    let mut search = MaxSearch {
        seq_of_row: &matrix.seq_of_row,
        min_support,
        found: Vec::new(),
    };
    let mut prefix = Vec::new();
    // items present in every row belong to every maximal set
    let (always, rest): (Vec<_>, Vec<_>) = cands.into_iter().partition(|(_, r)| r.len() == matrix.n_rows);
    prefix.extend(always.iter().map(|c| c.0));
    search.extend(&mut prefix, rest);
    let mut out = search.found;
    out.sort();
    out
}

/// Rows shared by every item of `itemset`; all rows for the empty set.
pub fn itemset_rows(matrix: &OccurrenceMatrix, itemset: &[usize]) -> Vec<u32> {
    match itemset.split_first() {
        None => (0..matrix.n_rows as u32).collect(),
        Some((&first, rest)) => {
            let mut acc = matrix.item_rows[first].clone();
            for &i in rest {
                acc = intersect_rows(&acc, &matrix.item_rows[i]);
            }
            acc
        }
    }
}

/// Refined pattern of an itemset: each slot takes its most specific concept,
/// or the taxonomy root when the itemset says nothing about it.
pub fn itemset_to_pattern(
    itemset: &[usize],
    base: &TypePattern,
    vocab: &Vocabulary,
    schema: &Schema,
) -> Result<RefinedPattern, RefineError> {
    let layout = SlotLayout::new(base, schema);
    let mut slots = vec![ConceptId::ROOT; layout.len()];
    for &i in itemset {
        let Item { slot, concept } = vocab.items()[i];
        let tax = schema.taxonomy(layout.slots()[slot].taxonomy);
        let cur = slots[slot];
        if tax.subsumes(cur, concept) {
            slots[slot] = concept;
        } else if !tax.subsumes(concept, cur) {
            return Err(RefineError::IncomparableConcepts {
                slot,
                a: tax.label(cur).to_string(),
                b: tax.label(concept).to_string(),
            });
        }
    }
    Ok(RefinedPattern {
        base: base.clone(),
        slots,
    })
}

/// Maximal frequent refinements of a single type-pattern.
pub fn refine_one(
    ftp: &FrequentTypePattern,
    db: &[Sequence],
    schema: &Schema,
    min_support: usize,
    relationship_only: bool,
) -> Result<RefinementResult, RefineError> {
    let layout = SlotLayout::new(&ftp.pattern, schema);
    let rows = flatten_rows(ftp, db, &layout);
    let vocab = vocabulary_from_rows(&rows, &layout, schema, &active_slots(&layout, relationship_only));
    let matrix = matrix_from_rows(ftp, &rows, &layout, schema, &vocab);
    let mut refinements = Vec::new();
    for itemset in mine_maximal_refinements(&matrix, min_support) {
        let support = count_sequences(&itemset_rows(&matrix, &itemset), &matrix.seq_of_row);
        refinements.push((itemset_to_pattern(&itemset, &ftp.pattern, &vocab, schema)?, support));
    }
    Ok(RefinementResult {
        base: ftp.pattern.clone(),
        type_support: ftp.support,
        refinements,
    })
}

/// Refine every type-pattern; results keep the input order.
pub fn refine_all(
    ftps: &[FrequentTypePattern],
    db: &[Sequence],
    schema: &Schema,
    min_support: usize,
    relationship_only: bool,
) -> Result<Vec<RefinementResult>, RefineError> {
    ftps.par_iter()
        .map(|f| refine_one(f, db, schema, min_support, relationship_only))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_sequence_db;
    use crate::testutil::{medical_schema, tp};
    use crate::typeminer::{mine_type_patterns, MinerConfig};

    fn labels(schema: &Schema, base: &TypePattern, vocab: &Vocabulary) -> Vec<(String, usize)> {
        let layout = SlotLayout::new(base, schema);
        vocab
            .items()
            .iter()
            .map(|it| {
                (
                    schema.taxonomy(layout.slots()[it.slot].taxonomy).label(it.concept).to_string(),
                    it.slot + 1,
                )
            })
            .collect()
    }

    fn bt_ftp(schema: &Schema, db: &[Sequence], pattern: &str) -> FrequentTypePattern {
        let res = mine_type_patterns(db, schema, &MinerConfig::new(1));
        res.patterns.into_iter().find(|f| f.pattern == tp(schema, pattern)).unwrap()
    }

    #[test]
    fn vocabulary_is_ancestor_closed_without_roots() {
        let s = medical_schema();
        let db = parse_sequence_db("seq 1\ne B Bacteria\ne T J01\nr 2 1 Resistant\nend\n", &s).unwrap();
        let ftp = bt_ftp(&s, &db, "B T");
        let v = build_vocabulary(&ftp, &db, &s, false);
        assert_eq!(
            labels(&s, &ftp.pattern, &v),
            vec![
                ("Bacteria".into(), 1),
                ("J01".into(), 2),
                ("Tested".into(), 3),
                ("Resistant".into(), 3)
            ]
        );
        let v = build_vocabulary(&ftp, &db, &s, true);
        assert_eq!(
            labels(&s, &ftp.pattern, &v),
            vec![("Tested".into(), 3), ("Resistant".into(), 3)]
        );
    }

    #[test]
    fn root_concepts_contribute_nothing() {
        let s = medical_schema();
        let db = parse_sequence_db("seq 1\ne B Any\ne T ATC\nend\n", &s).unwrap();
        let ftp = bt_ftp(&s, &db, "B T");
        assert!(build_vocabulary(&ftp, &db, &s, false).is_empty());
        let res = refine_one(&ftp, &db, &s, 1, false).unwrap();
        assert_eq!(res.refinements.len(), 1);
        assert!(res.refinements[0].0.is_all_root());
        assert_eq!(res.refinements[0].1, ftp.support);
    }

    fn matrix(item_rows: Vec<Vec<u32>>, seq_of_row: Vec<u32>) -> OccurrenceMatrix {
        OccurrenceMatrix {
            n_rows: seq_of_row.len(),
            item_rows,
            seq_of_row,
        }
    }

    #[test]
    fn sequence_support_examples() {
        let seq_of_row = [1, 1, 2];
        assert_eq!(sequence_support(&[&[0, 1]], &seq_of_row), 1);
        assert_eq!(sequence_support(&[&[1, 2]], &seq_of_row), 2);
        assert_eq!(sequence_support(&[&[0], &[2]], &seq_of_row), 0);
        assert_eq!(sequence_support(&[], &seq_of_row), 2);
    }

    #[test]
    fn maximal_itemsets() {
        // x and y co-occur in sequences 0 and 1; z only in sequence 2
        let m = matrix(vec![vec![0, 1, 2], vec![0, 2], vec![3]], vec![0, 0, 1, 2]);
        assert_eq!(mine_maximal_refinements(&m, 2), vec![vec![0, 1]]);
        assert_eq!(mine_maximal_refinements(&m, 1), vec![vec![0, 1], vec![2]]);
        let none = matrix(vec![vec![0], vec![1]], vec![0, 1]);
        assert_eq!(mine_maximal_refinements(&none, 2), vec![Vec::<usize>::new()]);
        assert!(mine_maximal_refinements(&none, 3).is_empty());
    }

    #[test]
    fn matrix_columns_follow_ancestry() {
        let s = medical_schema();
        let db = parse_sequence_db(
            "seq 1\ne B Ecoli\ne T J01\nr 2 1 Resistant\nend\nseq 2\ne B Staph\ne T J01\nr 2 1 Sensitive\nend\n",
            &s,
        )
        .unwrap();
        let ftp = bt_ftp(&s, &db, "B T");
        let v = build_vocabulary(&ftp, &db, &s, false);
        let m = build_occurrence_matrix(&ftp, &db, &v, &s);
        assert_eq!(m.seq_of_row, vec![0, 1]);
        let sir = s.taxonomy(s.taxonomies().id("SIR").unwrap());
        let tested = v.get(&Item { slot: 2, concept: sir.lookup("Tested").unwrap() }).unwrap();
        let resistant = v.get(&Item { slot: 2, concept: sir.lookup("Resistant").unwrap() }).unwrap();
        assert_eq!(m.item_rows[tested], vec![0, 1]);
        assert_eq!(m.item_rows[resistant], vec![0]);
    }

    #[test]
    fn itemset_reconstruction() {
        let s = medical_schema();
        let db = parse_sequence_db("seq 1\ne B Bacteria\ne T J01\nr 2 1 Resistant\nend\n", &s).unwrap();
        let ftp = bt_ftp(&s, &db, "B T");
        let v = build_vocabulary(&ftp, &db, &s, true);
        let p = itemset_to_pattern(&[0, 1], &ftp.pattern, &v, &s).unwrap();
        assert_eq!(p.display(&s), "B(Any) T(ATC) | r(2,1)=[Resistant]");
        let p = itemset_to_pattern(&[], &ftp.pattern, &v, &s).unwrap();
        assert!(p.is_all_root());
    }

    #[test]
    fn incomparable_concepts_are_rejected() {
        let s = medical_schema();
        let db = parse_sequence_db(
            "seq 1\ne B Ecoli\ne T J01\nr 2 1 Resistant\nend\nseq 2\ne B Ecoli\ne T J01\nr 2 1 Not-tested\nend\n",
            &s,
        )
        .unwrap();
        let ftp = bt_ftp(&s, &db, "B T");
        let v = build_vocabulary(&ftp, &db, &s, true);
        let sir = s.taxonomy(s.taxonomies().id("SIR").unwrap());
        let r = v.get(&Item { slot: 2, concept: sir.lookup("Resistant").unwrap() }).unwrap();
        let nt = v.get(&Item { slot: 2, concept: sir.lookup("Not-tested").unwrap() }).unwrap();
        assert!(itemset_to_pattern(&[r, nt], &ftp.pattern, &v, &s).is_err());
    }

    #[test]
    fn treatment_pattern_shape() {
        // two drugs followed by a bug resistant to the first one
        let s = medical_schema();
        let mut text = String::new();
        for i in 0..3 {
            text.push_str(&format!(
                "seq {i}\ne T J01CA\nts\ne T J01DD\nr 2 1 ≠\nts\ne B Ecoli\nr 3 1 Resistant\nr 3 2 Sensitive\nend\n"
            ));
        }
        let db = parse_sequence_db(&text, &s).unwrap();
        let ftp = bt_ftp(&s, &db, "T ; T ; B");
        let res = refine_one(&ftp, &db, &s, 3, false).unwrap();
        assert_eq!(res.refinements.len(), 1);
        assert_eq!(
            res.refinements[0].0.display(&s),
            "T(J01CA) ; T(J01DD) ; B(Ecoli) | r(2,1)=[≠] | r(3,1)=[Resistant] | r(3,2)=[Sensitive]"
        );
        assert_eq!(res.refinements[0].1, 3);
    }

    fn brute_maximal(m: &OccurrenceMatrix, theta: usize) -> Vec<Vec<usize>> {
        let n = m.item_rows.len();
        let frequent: Vec<Vec<usize>> = (0u32..1 << n)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|set| count_sequences(&itemset_rows(m, set), &m.seq_of_row) >= theta.max(1))
            .collect();
        let mut out: Vec<Vec<usize>> = frequent
            .iter()
            .filter(|a| !frequent.iter().any(|b| b.len() > a.len() && is_subset(a, b)))
            .cloned()
            .collect();
        out.sort();
        out
    }

    proptest::proptest! {
        #[test]
        fn maximal_search_matches_brute_force(
            bits in proptest::collection::vec(proptest::collection::vec(proptest::bool::weighted(0.6), 6), 1..20),
            seq_step in proptest::collection::vec(0u32..2, 20),
            theta in 1usize..6,
        ) {
            let rows = bits.len();
            let mut seq_of_row = Vec::with_capacity(rows);
            let mut s = 0;
            for step in &seq_step[..rows] {
                s += step;
                seq_of_row.push(s);
            }
            let item_rows = (0..6)
                .map(|i| (0..rows as u32).filter(|&r| bits[r as usize][i]).collect())
                .collect();
            let m = matrix(item_rows, seq_of_row);
            proptest::prop_assert_eq!(mine_maximal_refinements(&m, theta), brute_maximal(&m, theta));
        }
    }
}
