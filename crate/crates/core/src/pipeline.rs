//! End-to-end mining runs, threshold resolution and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{ConfigError, RefineError};
use crate::hierminer::refine_all;
use crate::model::{Constraints, RefinedPattern, Schema, Sequence};
use crate::typeminer::{mine_type_patterns, MinerConfig};

/// Minimum support as given by the user: an absolute sequence count, or a
/// decimal fraction of the database size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinSupport {
    Absolute(u64),
    /// `numerator / denominator`, kept exact.
    Fraction { numerator: u128, denominator: u128 },
}

impl FromStr for MinSupport {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadMinSupport(s.to_string());
        let t = s.trim();
        match t.split_once('.') {
            None => t.parse().map(MinSupport::Absolute).map_err(|_| bad()),
            Some((int, frac)) => {
                let digits_ok = |d: &str| d.chars().all(|c| c.is_ascii_digit());
                if (int.is_empty() && frac.is_empty()) || !digits_ok(int) || !digits_ok(frac) || frac.len() > 30 {
                    return Err(bad());
                }
                let denominator = 10u128.pow(frac.len() as u32);
                let int: u128 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
                let frac_v: u128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
                let numerator = int
                    .checked_mul(denominator)
                    .and_then(|x| x.checked_add(frac_v))
                    .ok_or_else(bad)?;
                Ok(MinSupport::Fraction {
                    numerator,
                    denominator,
                })
            }
        }
    }
}

impl MinSupport {
    /// Absolute threshold θ for a database of `n_sequences`; fractions round
    /// up.
    pub fn resolve(&self, n_sequences: usize) -> Result<usize, ConfigError> {
        let theta = match *self {
            MinSupport::Absolute(v) => v as u128,
            MinSupport::Fraction {
                numerator,
                denominator,
            } => (numerator * n_sequences as u128).div_ceil(denominator),
        };
        if theta < 1 {
            return Err(ConfigError::ThresholdTooSmall(theta as u64));
        }
        Ok(usize::try_from(theta).unwrap_or(usize::MAX))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunParams {
    pub min_support: usize,
    pub max_gap: Option<usize>,
    pub max_projected_length: Option<usize>,
    pub relationship_only: bool,
    pub max_pattern_events: usize,
    pub occ_cap: Option<usize>,
    pub ban_uniform_runs: bool,
}

impl RunParams {
    pub fn new(min_support: usize) -> Self {
        RunParams {
            min_support,
            max_gap: None,
            max_projected_length: None,
            relationship_only: false,
            max_pattern_events: 10,
            occ_cap: None,
            ban_uniform_runs: false,
        }
    }

    pub fn miner_config(&self) -> MinerConfig {
        MinerConfig {
            min_support: self.min_support,
            constraints: Constraints::new(self.max_gap, self.max_projected_length),
            max_pattern_events: self.max_pattern_events,
            occ_cap: self.occ_cap,
            ban_uniform_runs: self.ban_uniform_runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedPattern {
    pub pattern: RefinedPattern,
    pub support: usize,
}

#[derive(Debug, Clone)]
pub struct MiningOutput {
    pub patterns: Vec<MinedPattern>,
    pub n_type_patterns: usize,
    pub truncated: bool,
    pub type_stage: Duration,
    pub hier_stage: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Refine(#[from] RefineError),
}

/// Run both stages. Patterns come out grouped by type-pattern in mining order.
pub fn mine(db: &[Sequence], schema: &Schema, params: &RunParams) -> Result<MiningOutput, RunError> {
    let config = params.miner_config();
    config.validate()?;
    let t0 = Instant::now();
    let types = mine_type_patterns(db, schema, &config);
    let type_stage = t0.elapsed();
    let t1 = Instant::now();
    let refined = refine_all(&types.patterns, db, schema, params.min_support, params.relationship_only)?;
    let hier_stage = t1.elapsed();
    let patterns = refined
        .into_iter()
        .flat_map(|r| r.refinements)
        .map(|(pattern, support)| MinedPattern { pattern, support })
        .collect();
    Ok(MiningOutput {
        patterns,
        n_type_patterns: types.patterns.len(),
        truncated: types.truncated,
        type_stage,
        hier_stage,
    })
}

/// `support / n` with four decimals, halves rounded up.
pub fn format_fraction(support: usize, n: usize) -> String {
    if n == 0 {
        return "0.0000".into();
    }
    let (s, n) = (support as u128, n as u128);
    let scaled = (s * 20_000 + n) / (2 * n);
    format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
}

/// One line per pattern: support, fraction and pattern text, sorted by event
/// count and then text.
pub fn render_pattern_file(patterns: &[MinedPattern], schema: &Schema, n_sequences: usize) -> String {
    let mut lines: Vec<(usize, String, usize)> = patterns
        .iter()
        .map(|p| (p.pattern.base.n_events(), p.pattern.display(schema), p.support))
        .collect();
    lines.sort();
    let mut out = String::new();
    for (_, text, support) in lines {
        let _ = writeln!(out, "{support}\t{}\t{text}", format_fraction(support, n_sequences));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DbStats {
    pub sequences: usize,
    pub events: usize,
    pub events_per_type: BTreeMap<String, usize>,
    /// events per sequence -> number of sequences
    pub histogram: BTreeMap<usize, usize>,
}

impl DbStats {
    pub fn of(db: &[Sequence], schema: &Schema) -> DbStats {
        let mut events_per_type: BTreeMap<String, usize> =
            schema.types().map(|t| (schema.type_name(t).to_string(), 0)).collect();
        let mut histogram = BTreeMap::new();
        let mut events = 0;
        for seq in db {
            events += seq.n_events();
            *histogram.entry(seq.n_events()).or_insert(0) += 1;
            for e in seq.events() {
                *events_per_type.get_mut(schema.type_name(e.etype)).unwrap() += 1;
            }
        }
        DbStats {
            sequences: db.len(),
            events,
            events_per_type,
            histogram,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sequences: {}", self.sequences);
        let _ = writeln!(out, "events: {}", self.events);
        for (t, n) in &self.events_per_type {
            let _ = writeln!(out, "events[{t}]: {n}");
        }
        let _ = writeln!(out, "histogram (events per sequence):");
        for (k, n) in &self.histogram {
            let _ = writeln!(out, "  {k}\t{n}");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub input: DbStats,
    pub params: RunParams,
    pub type_stage_secs: f64,
    pub hier_stage_secs: f64,
    pub total_secs: f64,
    pub type_patterns: usize,
    pub refined_patterns: usize,
    pub specialized_patterns: usize,
    pub complete: bool,
}

impl RunReport {
    pub fn new(input: DbStats, params: RunParams, out: &MiningOutput, total: Duration) -> RunReport {
        RunReport {
            input,
            params,
            type_stage_secs: out.type_stage.as_secs_f64(),
            hier_stage_secs: out.hier_stage.as_secs_f64(),
            total_secs: total.as_secs_f64().max(out.type_stage.as_secs_f64() + out.hier_stage.as_secs_f64()),
            type_patterns: out.n_type_patterns,
            refined_patterns: out.patterns.len(),
            specialized_patterns: out.patterns.iter().filter(|p| !p.pattern.is_all_root()).count(),
            complete: !out.truncated,
        }
    }
}
