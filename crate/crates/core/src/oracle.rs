//! Brute-force reference miner for small databases.
//!
//! Slow on purpose and independent of the search code in [`crate::matcher`],
//! [`crate::typeminer`] and [`crate::hierminer`]: occurrences come from plain
//! index combinations, every canonical type-pattern up to the size limit is
//! tried, and concept assignments are checked against every occurrence.

use itertools::Itertools;

use crate::model::{Constraints, RefinedPattern, Schema, Sequence, TypeId, TypePattern};
use crate::taxonomy::{ConceptId, Taxonomy};

pub const MAX_SEQUENCES: usize = 64;
pub const MAX_EVENTS_PER_SEQUENCE: usize = 12;
pub const MAX_TAXONOMY_SIZE: usize = 16;
pub const MAX_PATTERN_EVENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub min_support: usize,
    pub constraints: Constraints,
    pub max_pattern_events: usize,
    pub relationship_only: bool,
}

impl OracleConfig {
    pub fn new(min_support: usize) -> Self {
        OracleConfig {
            min_support,
            constraints: Constraints::NONE,
            max_pattern_events: MAX_PATTERN_EVENTS,
            relationship_only: false,
        }
    }
}

/// Every index vector of `seq` that matches the event types and transaction
/// separators of `pat` and satisfies `constraints`, in lexicographic order.
pub fn naive_all_occurrences(pat: &TypePattern, seq: &Sequence, constraints: Constraints) -> Vec<Vec<usize>> {
    naive_on_types(pat, &seq_types(seq), seq.transaction_of(), constraints)
}

fn seq_types(seq: &Sequence) -> Vec<TypeId> {
    seq.events().iter().map(|e| e.etype).collect()
}

/// Same as [`naive_all_occurrences`] over a bare type/transaction view.
pub fn naive_on_types(
    pat: &TypePattern,
    types: &[TypeId],
    tx: &[u32],
    constraints: Constraints,
) -> Vec<Vec<usize>> {
    let k = pat.n_events();
    (0..types.len())
        .combinations(k)
        .filter(|lambda| {
            lambda.iter().zip(pat.types()).all(|(&j, &t)| types[j] == t)
                && (1..k).all(|i| (tx[lambda[i]] != tx[lambda[i - 1]]) == pat.separated_after(i - 1))
                && constraints.admits(lambda)
        })
        .collect()
}

/// All canonical type-patterns with 1..=`max_events` events over `n_types`.
pub fn all_type_patterns(n_types: usize, max_events: usize) -> Vec<TypePattern> {
    let mut out = Vec::new();
    for k in 1..=max_events {
        let type_seqs = (0..k).map(|_| 0..n_types).multi_cartesian_product();
        for ts in type_seqs {
            for seps in 0u32..(1 << (k - 1)) {
                let sep = |i: usize| seps >> i & 1 == 1;
                if (1..k).any(|i| !sep(i - 1) && ts[i] < ts[i - 1]) {
                    continue;
                }
                let events: Vec<(TypeId, bool)> = ts
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| (TypeId(t as u16), i > 0 && sep(i - 1)))
                    .collect();
                out.push(TypePattern::from_events(&events).expect("canonical by construction"));
            }
        }
    }
    out
}

/// Concepts of one occurrence, in slot order: each event's attributes, then
/// its relationships with every earlier event.
fn concepts_of(seq: &Sequence, lambda: &[usize]) -> Vec<ConceptId> {
    let mut out = Vec::new();
    for (m, &j) in lambda.iter().enumerate() {
        out.extend(seq.event(j).concepts.iter().copied());
        for &i in &lambda[..m] {
            out.extend(seq.rel(j, i).iter().copied());
        }
    }
    out
}

struct Assignments<'a> {
    taxes: Vec<&'a Taxonomy>,
    editable: Vec<bool>,
    /// concept vector of every occurrence, grouped by sequence
    rows: Vec<Vec<ConceptId>>,
    row_seq: Vec<usize>,
    min_support: usize,
    out: Vec<(Vec<ConceptId>, usize)>,
}

impl Assignments<'_> {
    fn support(&self, alive: &[usize]) -> usize {
        alive.iter().map(|&r| self.row_seq[r]).dedup().count()
    }

    fn matching(&self, alive: &[usize], j: usize, c: ConceptId) -> Vec<usize> {
        alive
            .iter()
            .copied()
            .filter(|&r| self.taxes[j].subsumes(c, self.rows[r][j]))
            .collect()
    }

    /// `alive` holds the rows matched by the complete assignment `a`.
    fn maximal(&self, a: &[ConceptId], alive: &[usize]) -> bool {
        (0..a.len()).filter(|&j| self.editable[j]).all(|j| {
            self.taxes[j]
                .children(a[j])
                .iter()
                .all(|&child| self.support(&self.matching(alive, j, child)) < self.min_support)
        })
    }

    /// Slots before `j` are assigned and `alive` are the rows they match;
    /// slots from `j` on are still at the root.
    fn walk(&mut self, a: &mut Vec<ConceptId>, j: usize, alive: &[usize]) {
        if j == a.len() {
            if self.maximal(a, alive) {
                self.out.push((a.clone(), self.support(alive)));
            }
            return;
        }
        let choices: Vec<ConceptId> = if self.editable[j] {
            self.taxes[j].concepts().collect()
        } else {
            vec![self.taxes[j].root()]
        };
        for c in choices {
            let next = self.matching(alive, j, c);
            if self.support(&next) >= self.min_support {
                a[j] = c;
                self.walk(a, j + 1, &next);
            }
        }
        a[j] = self.taxes[j].root();
    }
}

/// Every frequent type-pattern with at most `cfg.max_pattern_events` events,
/// refined to each of its maximal frequent concept assignments, with the
/// number of sequences matching the refinement.
pub fn brute_force_mine(db: &[Sequence], schema: &Schema, cfg: &OracleConfig) -> Vec<(RefinedPattern, usize)> {
    assert!(db.len() <= MAX_SEQUENCES, "oracle database too large");
    assert!(db.iter().all(|s| s.n_events() <= MAX_EVENTS_PER_SEQUENCE), "oracle sequence too long");
    assert!(
        schema.taxonomies().iter().all(|(_, t)| t.len() <= MAX_TAXONOMY_SIZE),
        "oracle taxonomy too large"
    );
    assert!(cfg.max_pattern_events <= MAX_PATTERN_EVENTS, "oracle pattern limit too large");
    assert!(cfg.min_support >= 1);

    let mut out = Vec::new();
    for pat in all_type_patterns(schema.n_types(), cfg.max_pattern_events) {
        let mut rows = Vec::new();
        let mut row_seq = Vec::new();
        for (i, seq) in db.iter().enumerate() {
            for l in naive_all_occurrences(&pat, seq, cfg.constraints) {
                rows.push(concepts_of(seq, &l));
                row_seq.push(i);
            }
        }
        let layout = RefinedPattern::all_root(pat.clone(), schema).layout(schema);
        let mut search = Assignments {
            taxes: layout.slots().iter().map(|s| schema.taxonomy(s.taxonomy)).collect(),
            editable: layout
                .slots()
                .iter()
                .map(|s| !(cfg.relationship_only && s.is_event()))
                .collect(),
            rows,
            row_seq,
            min_support: cfg.min_support,
            out: Vec::new(),
        };
        let all: Vec<usize> = (0..search.rows.len()).collect();
        if search.support(&all) < cfg.min_support {
            continue;
        }
        let mut a: Vec<ConceptId> = search.taxes.iter().map(|t| t.root()).collect();
        search.walk(&mut a, 0, &all);
        for (slots, support) in search.out {
            out.push((RefinedPattern { base: pat.clone(), slots }, support));
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_sequence_db;
    use crate::testutil::{letters_schema, medical_schema, tp};

    #[test]
    fn binomial_occurrences() {
        let s = letters_schema(2);
        let a = s.type_id("a").unwrap();
        let p = tp(&s, "a a");
        assert_eq!(naive_on_types(&p, &[a; 4], &[0; 4], Constraints::NONE).len(), 6);
    }

    #[test]
    fn separators_must_agree() {
        let s = letters_schema(2);
        let (a, b) = (s.type_id("a").unwrap(), s.type_id("b").unwrap());
        assert!(naive_on_types(&tp(&s, "a ; b"), &[a, b], &[0, 0], Constraints::NONE).is_empty());
        assert!(naive_on_types(&tp(&s, "a b"), &[a, b], &[0, 1], Constraints::NONE).is_empty());
        assert_eq!(naive_on_types(&tp(&s, "a b"), &[a, b], &[0, 0], Constraints::NONE).len(), 1);
    }

    #[test]
    fn type_pattern_enumeration_is_canonical() {
        // 1 event: a, b; 2 events: ab, aa, bb, a;a, a;b, b;a, b;b
        assert_eq!(all_type_patterns(2, 1).len(), 2);
        assert_eq!(all_type_patterns(2, 2).len(), 2 + 7);
    }

    #[test]
    fn identical_sequences_give_fully_specific_refinement() {
        let s = medical_schema();
        let text = (0..3)
            .map(|i| format!("seq {i}\ne B Ecoli\ne T J01CA\nr 2 1 Resistant\nend\n"))
            .collect::<String>();
        let db = parse_sequence_db(&text, &s).unwrap();
        let out = brute_force_mine(&db, &s, &OracleConfig::new(3));
        let shown: Vec<String> = out
            .iter()
            .map(|(p, n)| format!("{n} {}", p.display(&s)))
            .sorted()
            .collect();
        assert_eq!(
            shown,
            vec!["3 B(Ecoli)", "3 B(Ecoli) T(J01CA) | r(2,1)=[Resistant]", "3 T(J01CA)"]
        );
        assert!(brute_force_mine(&db, &s, &OracleConfig::new(4)).is_empty());
    }
}
