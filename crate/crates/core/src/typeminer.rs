//! Level-wise mining of frequent type-patterns with their complete
//! occurrence sets.
//!
//! Candidates of `k` events come from joining two frequent `(k-1)`-patterns
//! whose overlap agrees, and are checked only against the sequences that
//! support both parents.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::ConfigError;
use crate::matcher::{collect_occurrences, Occurrence, TypeView};
use crate::model::{Constraints, Schema, Sequence, TypePattern};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerConfig {
    /// Minimum number of supporting sequences (θ).
    pub min_support: usize,
    pub constraints: Constraints,
    pub max_pattern_events: usize,
    /// Keep at most this many occurrences per sequence and pattern.
    pub occ_cap: Option<usize>,
    /// Skip patterns made of three or more events of one single type.
    pub ban_uniform_runs: bool,
}

impl MinerConfig {
    pub fn new(min_support: usize) -> Self {
        MinerConfig {
            min_support,
            constraints: Constraints::NONE,
            max_pattern_events: 10,
            occ_cap: None,
            ban_uniform_runs: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_support < 1 {
            return Err(ConfigError::ThresholdTooSmall(self.min_support as u64));
        }
        if self.max_pattern_events < 1 {
            return Err(ConfigError::CapTooSmall("max pattern events"));
        }
        if self.occ_cap == Some(0) {
            return Err(ConfigError::CapTooSmall("occurrence cap"));
        }
        if self.constraints.max_gap == Some(0) {
            return Err(ConfigError::CapTooSmall("max gap"));
        }
        Ok(())
    }
}

/// Occurrences stored flat: one sequence index and `n_events` ordinals each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OccurrenceSet {
    n_events: usize,
    seqs: Vec<u32>,
    lambdas: Vec<u32>,
}

impl OccurrenceSet {
    pub fn new(n_events: usize) -> Self {
        OccurrenceSet {
            n_events,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn seq_of(&self, row: usize) -> usize {
        self.seqs[row] as usize
    }

    pub fn lambda(&self, row: usize) -> &[u32] {
        &self.lambdas[row * self.n_events..(row + 1) * self.n_events]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[u32])> + '_ {
        (0..self.len()).map(move |r| (self.seq_of(r), self.lambda(r)))
    }

    pub fn to_occurrences(&self) -> Vec<Occurrence> {
        self.iter()
            .map(|(seq, l)| Occurrence {
                seq,
                lambda: l.iter().map(|&x| x as usize).collect(),
            })
            .collect()
    }

    /// Number of occurrences in each supporting sequence.
    pub fn count_in(&self, seq: usize) -> usize {
        self.seqs.iter().filter(|&&s| s as usize == seq).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentTypePattern {
    pub pattern: TypePattern,
    pub occurrences: OccurrenceSet,
    pub support: usize,
    /// Ascending sequence indices with at least one occurrence.
    pub supporting_seqs: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct TypeMiningResult {
    pub patterns: Vec<FrequentTypePattern>,
    /// Set when `occ_cap` dropped at least one occurrence.
    pub truncated: bool,
}

/// One single-event candidate per declared type.
pub fn level1_candidates(schema: &Schema) -> Vec<TypePattern> {
    schema.types().map(TypePattern::single).collect()
}

/// Join frequent `(k-1)`-patterns into `k`-event candidates.
///
/// Two patterns join when the first without its first event equals the
/// second without its last event; the candidate is the first pattern plus the
/// last event of the second, placed as in the second. Single events join
/// into `x ; y` for every ordered pair and into `x y` when `x <= y`.
pub fn join_candidates(frequent: &[TypePattern]) -> Vec<TypePattern> {
    let mut out = Vec::new();
    if frequent.is_empty() {
        return out;
    }
    if frequent[0].n_events() == 1 {
        for x in frequent {
            for y in frequent {
                let (tx, ty) = (x.types()[0], y.types()[0]);
                out.push(x.extended(ty, true).unwrap());
                if tx <= ty {
                    out.push(x.extended(ty, false).unwrap());
                }
            }
        }
    } else {
        let mut by_head: HashMap<TypePattern, Vec<&TypePattern>> = HashMap::new();
        for p in frequent {
            by_head.entry(p.head()).or_default().push(p);
        }
        for p in frequent {
            if let Some(partners) = by_head.get(&p.tail()) {
                for q in partners {
                    let last = q.n_events() - 1;
                    let cand = p
                        .extended(q.types()[last], q.separated_after(last - 1))
                        .expect("join preserves canonical transaction order");
                    out.push(cand);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Apriori pruning. Without a max-gap every single-event deletion must be
/// frequent; with one only the head and tail are consulted, since deleting a
/// middle event can widen a gap past the bound.
pub fn prune_candidates(
    candidates: Vec<TypePattern>,
    frequent: &HashSet<TypePattern>,
    config: &MinerConfig,
) -> Vec<TypePattern> {
    candidates
        .into_iter()
        .filter(|c| {
            let k = c.n_events();
            if config.ban_uniform_runs && k >= 3 && c.types().iter().all(|&t| t == c.types()[0]) {
                return false;
            }
            if k < 2 {
                return true;
            }
            if config.constraints.max_gap.is_none() {
                (0..k).all(|i| frequent.contains(&c.delete(i)))
            } else {
                frequent.contains(&c.head()) && frequent.contains(&c.tail())
            }
        })
        .collect()
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
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

struct Checked {
    fp: FrequentTypePattern,
    truncated: bool,
}

fn check_candidate(
    pattern: TypePattern,
    seqs: &[u32],
    views: &[TypeView],
    config: &MinerConfig,
) -> Checked {
    let mut occ = OccurrenceSet::new(pattern.n_events());
    let mut supporting = Vec::new();
    let mut truncated = false;
    for &s in seqs {
        let before = occ.lambdas.len();
        let stats = collect_occurrences(
            &pattern,
            &views[s as usize],
            config.constraints,
            config.occ_cap,
            &mut occ.lambdas,
        );
        debug_assert_eq!(occ.lambdas.len() - before, stats.found * pattern.n_events());
        if stats.found > 0 {
            supporting.push(s);
            occ.seqs.extend(std::iter::repeat_n(s, stats.found));
        }
        truncated |= stats.truncated;
    }
    Checked {
        fp: FrequentTypePattern {
            support: supporting.len(),
            pattern,
            occurrences: occ,
            supporting_seqs: supporting,
        },
        truncated,
    }
}

/// Mine every frequent type-pattern of `db` with all its occurrences.
///
/// Output is sorted by event count, then pattern order.
pub fn mine_type_patterns(db: &[Sequence], schema: &Schema, config: &MinerConfig) -> TypeMiningResult {
    let n_types = schema.n_types();
    let views: Vec<TypeView> = db.iter().map(|s| TypeView::from_sequence(s, n_types)).collect();
    mine_views(&views, schema, config)
}

/// Same as [`mine_type_patterns`] over prepared type views.
pub fn mine_views(views: &[TypeView], schema: &Schema, config: &MinerConfig) -> TypeMiningResult {
    let mut result = TypeMiningResult::default();
    if views.is_empty() || config.min_support > views.len() {
        return result;
    }
    let all: Vec<u32> = (0..views.len() as u32).collect();

    let checked: Vec<Checked> = level1_candidates(schema)
        .into_par_iter()
        .map(|p| check_candidate(p, &all, views, config))
        .collect();
    let mut level = keep_frequent(checked, config, &mut result.truncated);

    let mut k = 1;
    while !level.is_empty() {
        let index: HashMap<&TypePattern, usize> =
            level.iter().enumerate().map(|(i, f)| (&f.pattern, i)).collect();
        let frequent_set: HashSet<TypePattern> = level.iter().map(|f| f.pattern.clone()).collect();

        let next = if k < config.max_pattern_events {
            let patterns: Vec<TypePattern> = level.iter().map(|f| f.pattern.clone()).collect();
            let candidates = prune_candidates(join_candidates(&patterns), &frequent_set, config);
            let checked: Vec<Checked> = candidates
                .into_par_iter()
                .map(|c| {
                    let h = &level[index[&c.head()]].supporting_seqs;
                    let t = &level[index[&c.tail()]].supporting_seqs;
                    let seqs = intersect_sorted(h, t);
                    if seqs.len() < config.min_support {
                        let n = c.n_events();
                        return Checked {
                            fp: FrequentTypePattern {
                                pattern: c,
                                occurrences: OccurrenceSet::new(n),
                                support: 0,
                                supporting_seqs: Vec::new(),
                            },
                            truncated: false,
                        };
                    }
                    check_candidate(c, &seqs, views, config)
                })
                .collect();
            keep_frequent(checked, config, &mut result.truncated)
        } else {
            Vec::new()
        };
        drop(index);
        result.patterns.append(&mut level);
        level = next;
        k += 1;
    }
    result
}

fn keep_frequent(checked: Vec<Checked>, config: &MinerConfig, truncated: &mut bool) -> Vec<FrequentTypePattern> {
    let mut out: Vec<FrequentTypePattern> = checked
        .into_iter()
        .filter(|c| c.fp.support >= config.min_support)
        .map(|c| {
            *truncated |= c.truncated;
            c.fp
        })
        .collect();
    out.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    out
}
