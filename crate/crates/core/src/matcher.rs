//! Enumeration of every occurrence of a type-pattern in a sequence.
//!
//! The search walks pattern position `i` and sequence position `j` together.
//! On a type match it first extends the occurrence with `j` and then also
//! tries to skip `j`, so every embedding is produced exactly once and in
//! lexicographic order of the index vector. Transaction separators, max-gap
//! and max-projected-length are checked as soon as the next pattern event is
//! being placed, and a per-position type-count check cuts branches that can
//! no longer be completed.

use crate::model::{Element, Sequence, TypeId, TypePattern};
use crate::model::Constraints;

/// Count of each event type in a pattern or sequence, indexed by type id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMultiset(pub Vec<u32>);

impl TypeMultiset {
    pub fn of_types(types: &[TypeId], n_types: usize) -> Self {
        let mut counts = vec![0u32; n_types];
        for t in types {
            counts[t.index()] += 1;
        }
        TypeMultiset(counts)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

/// True when the sequence lacks some type the pattern needs, i.e. some
/// component of `seq - pat` is negative.
pub fn multiset_prune(seq: &TypeMultiset, pat: &TypeMultiset) -> bool {
    pat.0
        .iter()
        .enumerate()
        .any(|(t, &need)| need > seq.0.get(t).copied().unwrap_or(0))
}

/// Type-aware view of a sequence prepared for repeated matching.
#[derive(Debug, Clone)]
pub struct TypeView {
    types: Vec<TypeId>,
    tx: Vec<u32>,
    next_tx_start: Vec<u32>,
    // suffix[j * n_types + t] = count of type t among events j..
    suffix: Vec<u32>,
    n_types: usize,
}

impl TypeView {
    /// `tx` must be non-decreasing, one transaction index per event.
    pub fn new(types: Vec<TypeId>, tx: Vec<u32>, n_types: usize) -> TypeView {
        assert_eq!(types.len(), tx.len());
        let n = types.len();
        let mut next_tx_start = vec![n as u32; n];
        for j in (0..n).rev() {
            if j + 1 < n {
                next_tx_start[j] = if tx[j + 1] != tx[j] {
                    (j + 1) as u32
                } else {
                    next_tx_start[j + 1]
                };
            }
        }
        let mut suffix = vec![0u32; (n + 1) * n_types];
        for j in (0..n).rev() {
            let (head, tail) = suffix.split_at_mut((j + 1) * n_types);
            head[j * n_types..].copy_from_slice(&tail[..n_types]);
            head[j * n_types + types[j].index()] += 1;
        }
        TypeView {
            types,
            tx,
            next_tx_start,
            suffix,
            n_types,
        }
    }

    pub fn from_sequence(seq: &Sequence, n_types: usize) -> TypeView {
        let types = seq.events().iter().map(|e| e.etype).collect();
        TypeView::new(types, seq.transaction_of().to_vec(), n_types)
    }

    /// Build from a type-aware element list; used for type-level reasoning
    /// where canonical transaction order is not required.
    pub fn from_elements(elements: &[Element], n_types: usize) -> TypeView {
        let mut types = Vec::new();
        let mut tx = Vec::new();
        let mut cur = 0;
        for el in elements {
            match el {
                Element::Separator => cur += 1,
                Element::Type(t) => {
                    types.push(*t);
                    tx.push(cur);
                }
            }
        }
        TypeView::new(types, tx, n_types)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[TypeId] {
        &self.types
    }

    pub fn transaction_of(&self) -> &[u32] {
        &self.tx
    }

    pub fn multiset(&self) -> TypeMultiset {
        TypeMultiset(self.suffix[..self.n_types].to_vec())
    }

    #[inline]
    fn remaining(&self, j: usize, t: TypeId) -> u32 {
        self.suffix[j * self.n_types + t.index()]
    }
}

/// One occurrence: a sequence and the 0-based event ordinals of the match.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub seq: usize,
    pub lambda: Vec<usize>,
}

/// Outcome of a bounded scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScanStats {
    pub found: usize,
    pub truncated: bool,
}

/// Call `visit` with every occurrence index vector in lexicographic order.
/// `visit` returns `false` to stop early.
pub fn enumerate_occurrences<F>(pattern: &TypePattern, view: &TypeView, constraints: Constraints, mut visit: F)
where
    F: FnMut(&[usize]) -> bool,
{
    let p = pattern.n_events();
    let n = view.len();
    if p == 0 || p > n {
        return;
    }
    let pat_types = pattern.types();
    if pat_types.iter().any(|t| t.index() >= view.n_types) {
        return;
    }
    if multiset_prune(&view.multiset(), &TypeMultiset::of_types(pat_types, view.n_types)) {
        return;
    }

    // need[i * d + q]: copies of distinct type q still required from pattern
    // position i onwards.
    let mut distinct: Vec<TypeId> = pat_types.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let d = distinct.len();
    let mut need = vec![0u32; (p + 1) * d];
    for i in (0..p).rev() {
        let (head, tail) = need.split_at_mut((i + 1) * d);
        head[i * d..].copy_from_slice(&tail[..d]);
        let q = distinct.binary_search(&pat_types[i]).unwrap();
        head[i * d + q] += 1;
    }

    let max_gap = constraints.max_gap.unwrap_or(usize::MAX);
    let max_len = constraints.max_projected_length.unwrap_or(usize::MAX);

    let mut lambda: Vec<usize> = Vec::with_capacity(p);
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    'frames: while let Some((i, j)) = stack.pop() {
        lambda.truncate(i);
        if i == p {
            if !visit(&lambda) {
                return;
            }
            continue;
        }
        if j >= n {
            continue;
        }
        if i > 0 {
            let prev = lambda[i - 1];
            if j - prev > max_gap || j - lambda[0] > max_len {
                continue;
            }
            let need_sep = pattern.separated_after(i - 1);
            let same_tx = view.tx[j] == view.tx[prev];
            if !need_sep && !same_tx {
                // left the transaction of the previous match
                continue;
            }
            if need_sep && same_tx {
                let next = view.next_tx_start[prev] as usize;
                if next < n {
                    stack.push((i, next));
                }
                continue;
            }
        }
        if n - j < p - i {
            continue;
        }
        for q in 0..d {
            if view.remaining(j, distinct[q]) < need[i * d + q] {
                continue 'frames;
            }
        }
        stack.push((i, j + 1));
        if view.types[j] == pat_types[i] {
            lambda.push(j);
            stack.push((i + 1, j + 1));
        }
    }
}

/// Every occurrence of `pattern` in `view`, sorted lexicographically.
pub fn find_all_occurrences(pattern: &TypePattern, view: &TypeView, constraints: Constraints) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    enumerate_occurrences(pattern, view, constraints, |l| {
        out.push(l.to_vec());
        true
    });
    out
}

/// Append up to `cap` of the lexicographically smallest occurrences to `out`
/// as flat `u32` index vectors.
pub fn collect_occurrences(
    pattern: &TypePattern,
    view: &TypeView,
    constraints: Constraints,
    cap: Option<usize>,
    out: &mut Vec<u32>,
) -> ScanStats {
    let mut stats = ScanStats::default();
    let cap = cap.unwrap_or(usize::MAX);
    enumerate_occurrences(pattern, view, constraints, |l| {
        if stats.found == cap {
            stats.truncated = true;
            return false;
        }
        out.extend(l.iter().map(|&x| x as u32));
        stats.found += 1;
        true
    });
    stats
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Upper bound on the number of occurrences of a `k`-event pattern in an
/// `n`-event sequence under max-gap `g` and max projected length `w`
/// (`None` is unbounded). The gap and window bounds are coarse heuristics
/// meant for diagnostics, not for pruning.
pub fn count_occurrences_bound(n: u64, k: u64, g: Option<u64>, w: Option<u64>) -> u128 {
    let mut bound = binomial(n, k);
    if k == 0 {
        return bound;
    }
    if let Some(g) = g {
        let b = (g.saturating_sub(1) as u128)
            .saturating_pow((k - 1) as u32)
            .saturating_mul(n.saturating_sub(k) as u128);
        bound = bound.min(b);
    }
    if let Some(w) = w {
        let b = binomial(w, k - 1).saturating_mul(n.saturating_sub(k) as u128);
        bound = bound.min(b);
    }
    bound
}
