#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rasp_core::datagen::{generate_db, EventsPerSeq, GenSpec, TreeShape};
use rasp_core::model::{RefinedPattern, Schema, Sequence};
use rasp_core::oracle::{brute_force_mine, OracleConfig};
use rasp_core::pipeline::{mine, RunParams};

/// Small random database: at most 30 sequences of at most 8 events over at
/// most 3 types, taxonomies of at most 7 concepts.
pub fn desk_db(seed: u64) -> (Schema, Vec<Sequence>) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0x5eed);
    let mut spec = GenSpec::new(seed, rng.gen_range(4..=30));
    spec.n_types = rng.gen_range(1..=3);
    spec.events_per_seq = EventsPerSeq::Geometric {
        mean: rng.gen_range(2.0..5.0),
        max: 8,
    };
    spec.event_taxonomy = TreeShape {
        branching: 2,
        depth: rng.gen_range(1..=2),
    };
    spec.relationship_taxonomy = if rng.gen_bool(0.7) {
        Some(TreeShape { branching: 2, depth: 1 })
    } else {
        None
    };
    spec.transaction_break = rng.gen_range(0.3..0.9);
    let g = generate_db(&spec).expect("desk spec is feasible");
    let schema = g.schema().unwrap();
    let db = g.sequences(&schema).unwrap();
    (schema, db)
}

pub fn pipeline_output(db: &[Sequence], schema: &Schema, params: &RunParams) -> Vec<(RefinedPattern, usize)> {
    let mut out: Vec<_> = mine(db, schema, params)
        .unwrap()
        .patterns
        .into_iter()
        .map(|p| (p.pattern, p.support))
        .collect();
    out.sort();
    out
}

pub fn oracle_output(db: &[Sequence], schema: &Schema, params: &RunParams) -> Vec<(RefinedPattern, usize)> {
    let cfg = OracleConfig {
        min_support: params.min_support,
        constraints: params.miner_config().constraints,
        max_pattern_events: params.max_pattern_events,
        relationship_only: params.relationship_only,
    };
    brute_force_mine(db, schema, &cfg)
}

/// Parameter grid for the equivalence checks.
pub fn param_grid(n_sequences: usize) -> Vec<RunParams> {
    let mut out = Vec::new();
    let thetas = [1, 2, (3 * n_sequences).div_ceil(10).max(1)];
    for &theta in &thetas {
        for mg in [None, Some(1), Some(2)] {
            for mpl in [None, Some(4)] {
                for relationship_only in [false, true] {
                    let mut p = RunParams::new(theta);
                    p.max_gap = mg;
                    p.max_projected_length = mpl;
                    p.relationship_only = relationship_only;
                    p.max_pattern_events = 4;
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Check the structural guarantees of a mining run; returns the first
/// violation found.
pub fn check_invariants(db: &[Sequence], schema: &Schema, params: &RunParams) -> Result<(), String> {
    use rasp_core::hierminer::{build_occurrence_matrix, build_vocabulary, mine_maximal_refinements, Item};
    use rasp_core::model::pattern_matches;
    use rasp_core::typeminer::mine_type_patterns;
    use std::collections::HashSet;

    let config = params.miner_config();
    let types = mine_type_patterns(db, schema, &config);
    let emitted: HashSet<_> = types.patterns.iter().map(|f| f.pattern.clone()).collect();
    for f in &types.patterns {
        let show = f.pattern.display(schema);
        if f.pattern.n_events() > 1
            && (!emitted.contains(&f.pattern.head()) || !emitted.contains(&f.pattern.tail()))
        {
            return Err(format!("{show}: head or tail missing"));
        }
        if f.support > f.occurrences.len() {
            return Err(format!("{show}: support exceeds occurrence count"));
        }
        if f.support < params.min_support {
            return Err(format!("{show}: infrequent type-pattern emitted"));
        }

        let vocab = build_vocabulary(f, db, schema, params.relationship_only);
        let matrix = build_occurrence_matrix(f, db, &vocab, schema);
        let layout = rasp_core::model::SlotLayout::new(&f.pattern, schema);
        for itemset in mine_maximal_refinements(&matrix, params.min_support) {
            let set: HashSet<usize> = itemset.iter().copied().collect();
            for &i in &itemset {
                let Item { slot, concept } = vocab.items()[i];
                let tax = schema.taxonomy(layout.slots()[slot].taxonomy);
                for a in tax.ancestors_excluding_root(concept) {
                    match vocab.get(&Item { slot, concept: a }) {
                        Some(ai) if set.contains(&ai) => {}
                        _ => return Err(format!("{show}: itemset {itemset:?} not ancestor-closed")),
                    }
                }
            }
        }
    }

    let output = mine(db, schema, params).map_err(|e| e.to_string())?;
    let type_support: std::collections::HashMap<_, _> =
        types.patterns.iter().map(|f| (f.pattern.clone(), f.support)).collect();
    for (i, a) in output.patterns.iter().enumerate() {
        let show = a.pattern.display(schema);
        if a.support < params.min_support || a.support > type_support[&a.pattern.base] {
            return Err(format!("{show}: support {} out of range", a.support));
        }
        let direct = db
            .iter()
            .filter(|s| pattern_matches(&a.pattern, s, schema, config.constraints).unwrap())
            .count();
        if direct != a.support {
            return Err(format!("{show}: support {} but {direct} sequences match", a.support));
        }
        for (j, b) in output.patterns.iter().enumerate() {
            if i != j && a.pattern.subsumes(&b.pattern, schema) {
                return Err(format!("{show} subsumes {}", b.pattern.display(schema)));
            }
        }
    }
    Ok(())
}
