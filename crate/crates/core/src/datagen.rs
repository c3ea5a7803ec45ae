//! Seeded synthetic databases with planted multi-level patterns.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`), so a seed always yields the same
//! bytes.
//!
//! Event types are named `A`, `B`, ...; type `A` is described by taxonomy
//! `TA` whose concepts are `A`, `A.1`, `A.1.2`, ... Every pair of types is
//! related through taxonomy `Rel` (concepts `r`, `r.1`, ...) when relationship
//! taxonomies are enabled. Background concepts are uniform over leaves.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::GenError;
use crate::model::{db_to_text, Event, RefinedPattern, Schema, Sequence, SlotKind};
use crate::taxonomy::{ConceptId, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventsPerSeq {
    Fixed(usize),
    /// Geometric on `1..` with the given mean, truncated at `max`.
    Geometric { mean: f64, max: usize },
}

impl EventsPerSeq {
    pub fn max(&self) -> usize {
        match *self {
            EventsPerSeq::Fixed(n) => n,
            EventsPerSeq::Geometric { max, .. } => max,
        }
    }

    fn sample(&self, rng: &mut Xoshiro256PlusPlus) -> usize {
        match *self {
            EventsPerSeq::Fixed(n) => n,
            EventsPerSeq::Geometric { mean, max } => {
                let p = 1.0 / mean.max(1.0);
                let mut n = 1;
                while n < max && !rng.gen_bool(p) {
                    n += 1;
                }
                n.min(max)
            }
        }
    }
}

/// Shape of a complete tree: every internal node has `branching` children
/// and leaves sit at `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    pub branching: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub n_sequences: usize,
    pub events_per_seq: EventsPerSeq,
    pub n_types: usize,
    pub event_taxonomy: TreeShape,
    pub relationship_taxonomy: Option<TreeShape>,
    /// Chance that a background event opens a new transaction.
    pub transaction_break: f64,
    /// Refined patterns in the textual pattern syntax, with the fraction of
    /// sequences that receive them.
    pub planted: Vec<(String, f64)>,
}

impl GenSpec {
    pub fn new(seed: u64, n_sequences: usize) -> Self {
        GenSpec {
            seed,
            n_sequences,
            events_per_seq: EventsPerSeq::Geometric { mean: 8.0, max: 30 },
            n_types: 3,
            event_taxonomy: TreeShape { branching: 3, depth: 2 },
            relationship_taxonomy: Some(TreeShape { branching: 2, depth: 1 }),
            transaction_break: 0.6,
            planted: Vec::new(),
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.to_string()));
        if self.n_types == 0 || self.n_types > 26 {
            return bad("number of event types must be in 1..=26");
        }
        if self.events_per_seq.max() == 0 {
            return bad("sequences need at least one event");
        }
        if let EventsPerSeq::Geometric { mean, .. } = self.events_per_seq {
            if mean.is_nan() || mean < 1.0 {
                return bad("mean events per sequence must be at least 1");
            }
        }
        if !(0.0..=1.0).contains(&self.transaction_break) {
            return bad("transaction break probability must be in [0,1]");
        }
        if self.planted.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
            return bad("plant probabilities must be in [0,1]");
        }
        for shape in std::iter::once(self.event_taxonomy).chain(self.relationship_taxonomy) {
            if shape.branching == 0 && shape.depth > 0 {
                return bad("taxonomy branching must be positive");
            }
            if (shape.branching as f64).powi(shape.depth as i32) > 100_000.0 {
                return bad("taxonomy too large");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedDb {
    pub schema_text: String,
    /// `(file name, contents)` of each taxonomy referenced by the schema.
    pub taxonomy_files: Vec<(String, String)>,
    pub data_text: String,
}

impl GeneratedDb {
    pub fn schema(&self) -> Result<Schema, crate::ParseError> {
        Schema::parse(&self.schema_text, |p| {
            self.taxonomy_files
                .iter()
                .find(|(n, _)| n == p)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| format!("no taxonomy file {p}"))
        })
    }

    pub fn sequences(&self, schema: &Schema) -> Result<Vec<Sequence>, crate::ParseError> {
        crate::model::parse_sequence_db(&self.data_text, schema)
    }
}

fn tree_text(root: &str, shape: TreeShape) -> String {
    fn node(label: &str, depth: usize, shape: TreeShape, out: &mut String) {
        out.push_str(label);
        if depth < shape.depth {
            out.push('(');
            for i in 1..=shape.branching {
                if i > 1 {
                    out.push(',');
                }
                node(&format!("{label}.{i}"), depth + 1, shape, out);
            }
            out.push(')');
        }
    }
    let mut out = String::from("(");
    node(root, 0, shape, &mut out);
    out.push_str(")\n");
    out
}

fn type_name(i: usize) -> String {
    ((b'A' + i as u8) as char).to_string()
}

fn schema_files(spec: &GenSpec) -> (String, Vec<(String, String)>) {
    let mut schema = String::new();
    let mut files = Vec::new();
    for i in 0..spec.n_types {
        let t = type_name(i);
        files.push((format!("T{t}.tax"), tree_text(&t, spec.event_taxonomy)));
        schema.push_str(&format!("taxonomy T{t} T{t}.tax\n"));
    }
    if let Some(shape) = spec.relationship_taxonomy {
        files.push(("Rel.tax".into(), tree_text("r", shape)));
        schema.push_str("taxonomy Rel Rel.tax\n");
    }
    for i in 0..spec.n_types {
        let t = type_name(i);
        schema.push_str(&format!("eventtype {t} T{t}\n"));
    }
    if spec.relationship_taxonomy.is_some() {
        for i in 0..spec.n_types {
            for j in i..spec.n_types {
                schema.push_str(&format!("reltype {} {} Rel\n", type_name(i), type_name(j)));
            }
        }
    }
    (schema, files)
}

fn random_leaf_under(tax: &Taxonomy, c: ConceptId, rng: &mut Xoshiro256PlusPlus) -> ConceptId {
    let leaves: Vec<ConceptId> = tax.descendants(c).into_iter().filter(|&d| tax.is_leaf(d)).collect();
    *leaves.choose(rng).unwrap_or(&c)
}

const RESAMPLE_LIMIT: usize = 64;

/// Build the schema and a sequence database from `spec`.
pub fn generate_db(spec: &GenSpec) -> Result<GeneratedDb, GenError> {
    spec.validate()?;
    let (schema_text, taxonomy_files) = schema_files(spec);
    let mut out = GeneratedDb {
        schema_text,
        taxonomy_files,
        data_text: String::new(),
    };
    let schema = out
        .schema()
        .map_err(|e| GenError::InvalidSpec(format!("generated schema: {e}")))?;

    let mut plants = Vec::new();
    for (text, prob) in &spec.planted {
        let p = RefinedPattern::parse(text, &schema).map_err(|e| GenError::InvalidSpec(format!("{text}: {e}")))?;
        if p.base.n_events() > spec.events_per_seq.max() {
            return Err(GenError::Infeasible(format!(
                "{text} has {} events, sequences hold at most {}",
                p.base.n_events(),
                spec.events_per_seq.max()
            )));
        }
        plants.push((p, *prob));
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let n = spec.n_sequences;
    // which sequences receive which plant
    let mut hosts: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pi, (_, prob)) in plants.iter().enumerate() {
        let count = ((prob * n as f64).floor() as usize).min(n);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        for &s in &ids[..count] {
            hosts[s].push(pi);
        }
    }

    let mut db = Vec::with_capacity(n);
    for (s, host) in hosts.iter().enumerate() {
        db.push(generate_sequence(spec, &schema, &plants, host, s, &mut rng)?);
    }
    out.data_text = db_to_text(&db, &schema);
    Ok(out)
}

fn generate_sequence(
    spec: &GenSpec,
    schema: &Schema,
    plants: &[(RefinedPattern, f64)],
    host: &[usize],
    index: usize,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<Sequence, GenError> {
    let planted_events: usize = host.iter().map(|&p| plants[p].0.base.n_events()).sum();
    let target = spec.events_per_seq.sample(rng).max(planted_events.min(spec.events_per_seq.max()));
    let noise = target.saturating_sub(planted_events);

    // background transactions
    let mut noise_tx: Vec<Vec<Event>> = Vec::new();
    for _ in 0..noise {
        let new_tx = noise_tx.is_empty() || rng.gen_bool(spec.transaction_break);
        let mut ev = random_event(schema, rng);
        if !new_tx {
            let cur = noise_tx.last().unwrap();
            let mut tries = 0;
            while cur.contains(&ev) && tries < RESAMPLE_LIMIT {
                ev = random_event(schema, rng);
                tries += 1;
            }
            if cur.contains(&ev) {
                noise_tx.push(vec![ev]);
                continue;
            }
            noise_tx.last_mut().unwrap().push(ev);
        } else {
            noise_tx.push(vec![ev]);
        }
    }

    // planted transactions, each tagged with (plant, event) per event
    struct Block {
        events: Vec<Event>,
        tags: Vec<(usize, usize)>,
    }
    let mut blocks_per_plant: Vec<Vec<Block>> = Vec::new();
    for (hi, &pi) in host.iter().enumerate() {
        let pat = &plants[pi].0;
        let layout = pat.layout(schema);
        let mut blocks: Vec<Block> = Vec::new();
        for m in 0..pat.base.n_events() {
            if m == 0 || pat.base.separated_after(m - 1) {
                blocks.push(Block {
                    events: Vec::new(),
                    tags: Vec::new(),
                });
            }
            let t = pat.base.types()[m];
            let slots: Vec<(usize, ConceptId)> = layout
                .slots()
                .iter()
                .enumerate()
                .filter(|(_, s)| matches!(s.kind, SlotKind::Event { event, .. } if event == m))
                .map(|(j, _)| (j, pat.slots[j]))
                .collect();
            let block = blocks.last_mut().unwrap();
            let mut tries = 0;
            let ev = loop {
                let concepts = slots
                    .iter()
                    .map(|&(j, c)| random_leaf_under(schema.taxonomy(layout.slots()[j].taxonomy), c, rng))
                    .collect();
                let ev = Event::new(t, concepts);
                if !block.events.contains(&ev) {
                    break ev;
                }
                tries += 1;
                if tries >= RESAMPLE_LIMIT {
                    return Err(GenError::Infeasible(format!(
                        "cannot plant {} with distinct events in one transaction",
                        pat.display(schema)
                    )));
                }
            };
            block.events.push(ev);
            block.tags.push((hi, m));
        }
        blocks_per_plant.push(blocks);
    }

    // interleave: each plant's blocks keep their order among background ones
    type Tagged = (Vec<Event>, Vec<Option<(usize, usize)>>);
    let mut layout_tx: Vec<Tagged> = noise_tx
        .into_iter()
        .map(|t| {
            let len = t.len();
            (t, vec![None; len])
        })
        .collect();
    for blocks in blocks_per_plant {
        let mut points: Vec<usize> = (0..blocks.len()).map(|_| rng.gen_range(0..=layout_tx.len())).collect();
        points.sort_unstable();
        for (offset, (block, at)) in blocks.into_iter().zip(points).enumerate() {
            let tags = block.tags.into_iter().map(Some).collect();
            layout_tx.insert(at + offset, (block.events, tags));
        }
    }

    // flat positions of planted events
    let mut where_is: Vec<Vec<usize>> = host.iter().map(|&p| vec![0; plants[p].0.base.n_events()]).collect();
    let mut flat = 0;
    for (_, tags) in &layout_tx {
        for tag in tags {
            if let Some((h, m)) = tag {
                where_is[*h][*m] = flat;
            }
            flat += 1;
        }
    }
    let types: Vec<_> = layout_tx.iter().flat_map(|(t, _)| t.iter().map(|e| e.etype)).collect();

    let mut rels = Vec::new();
    for k in 0..flat {
        for l in 0..k {
            let taxes = schema.rel_schema(types[k], types[l]);
            if taxes.is_empty() {
                continue;
            }
            let concepts: Vec<ConceptId> = taxes
                .iter()
                .map(|&t| {
                    let tax = schema.taxonomy(t);
                    random_leaf_under(tax, tax.root(), rng)
                })
                .collect();
            rels.push(((k, l), concepts));
        }
    }
    let rel_pos: std::collections::HashMap<(usize, usize), usize> =
        rels.iter().enumerate().map(|(i, ((k, l), _))| ((*k, *l), i)).collect();
    for (h, &pi) in host.iter().enumerate() {
        let pat = &plants[pi].0;
        let layout = pat.layout(schema);
        for (j, slot) in layout.slots().iter().enumerate() {
            if let SlotKind::Relationship { event, partner, attr } = slot.kind {
                let (a, b) = (where_is[h][event], where_is[h][partner]);
                let key = (a.max(b), a.min(b));
                let tax = schema.taxonomy(slot.taxonomy);
                let c = random_leaf_under(tax, pat.slots[j], rng);
                rels[rel_pos[&key]].1[attr] = c;
            }
        }
    }

    let transactions = layout_tx.into_iter().map(|(t, _)| t).collect();
    Sequence::new(schema, format!("s{index}"), transactions, rels)
        .map_err(|e| GenError::InvalidSpec(format!("generated sequence: {e}")))
}

fn random_event(schema: &Schema, rng: &mut Xoshiro256PlusPlus) -> Event {
    let t = crate::model::TypeId(rng.gen_range(0..schema.n_types()) as u16);
    let concepts = schema
        .event_schema(t)
        .iter()
        .map(|&x| {
            let tax = schema.taxonomy(x);
            random_leaf_under(tax, tax.root(), rng)
        })
        .collect();
    Event::new(t, concepts)
}
