use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rasp_core::datagen::{generate_db, EventsPerSeq, GenSpec, TreeShape};
use rasp_core::error::GenError;
use rasp_core::model::{parse_sequence_db, Schema, Sequence};
use rasp_core::pipeline::{mine, render_pattern_file, DbStats, MinSupport, RunError, RunParams, RunReport};

#[derive(Parser)]
#[command(name = "rasp", version, about = "Relationship-aware sequential pattern mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine frequent refined patterns
    Mine(MineArgs),
    /// Print database statistics
    Stats(InputArgs),
    /// Write a synthetic schema and database
    Generate(GenerateArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Schema file
    #[arg(long)]
    schema: PathBuf,
    /// Sequence database file
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Pattern file to write; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute sequence count, or a fraction of the database when it contains a '.'
    #[arg(long)]
    min_support: String,
    #[arg(long)]
    max_gap: Option<usize>,
    #[arg(long)]
    max_projected_length: Option<usize>,
    /// Only specialize relationship concepts
    #[arg(long)]
    relationship_only: bool,
    #[arg(long, default_value_t = 10)]
    max_pattern_events: usize,
    /// Keep at most this many occurrences per sequence and type-pattern
    #[arg(long)]
    occ_cap: Option<usize>,
    /// Skip candidates of three or more events of a single type
    #[arg(long)]
    ban_uniform_runs: bool,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// JSON run report to write
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    /// Directory receiving schema.txt, the taxonomy files and data.txt
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 100)]
    sequences: usize,
    #[arg(long, default_value_t = 3)]
    types: usize,
    #[arg(long, default_value_t = 3)]
    branching: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    rel_branching: usize,
    #[arg(long, default_value_t = 1)]
    rel_depth: usize,
    /// Omit relationship taxonomies
    #[arg(long)]
    no_relationships: bool,
    /// Mean events per sequence (geometric)
    #[arg(long, default_value_t = 8.0)]
    mean_events: f64,
    #[arg(long, default_value_t = 30)]
    max_events: usize,
    /// Exact events per sequence, overriding the geometric draw
    #[arg(long)]
    fixed_events: Option<usize>,
    #[arg(long, default_value_t = 0.6)]
    transaction_break: f64,
    /// Planted pattern as PATTERN@PROBABILITY; repeatable
    #[arg(long = "plant")]
    plants: Vec<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load(input: &InputArgs) -> Result<(Schema, Vec<Sequence>), Failure> {
    let schema = Schema::load(&input.schema).map_err(|e| Failure::input(format!("{}: {e}", input.schema.display())))?;
    let text = read(&input.data)?;
    let db = parse_sequence_db(&text, &schema).map_err(|e| Failure::input(format!("{}: {e}", input.data.display())))?;
    Ok((schema, db))
}

fn cmd_mine(args: &MineArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let (schema, db) = load(&args.input)?;
    let min_support: MinSupport = args.min_support.parse().map_err(|e| Failure::config(format!("{e}")))?;
    let theta = min_support.resolve(db.len()).map_err(|e| Failure::config(format!("{e}")))?;
    let params = RunParams {
        min_support: theta,
        max_gap: args.max_gap,
        max_projected_length: args.max_projected_length,
        relationship_only: args.relationship_only,
        max_pattern_events: args.max_pattern_events,
        occ_cap: args.occ_cap,
        ban_uniform_runs: args.ban_uniform_runs,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::config(e.to_string()))?;
    let output = pool.install(|| mine(&db, &schema, &params)).map_err(|e| match e {
        RunError::Config(c) => Failure::config(c.to_string()),
        RunError::Refine(r) => Failure::input(r.to_string()),
    })?;

    let text = render_pattern_file(&output.patterns, &schema, db.len());
    match &args.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if output.truncated {
        eprintln!("warning: occurrence cap reached; supports may be underestimated");
    }
    if let Some(path) = &args.report {
        let report = RunReport::new(DbStats::of(&db, &schema), params, &output, started.elapsed());
        let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::input(e.to_string()))?;
        write(path, &(json + "\n"))?;
    }
    Ok(())
}

fn cmd_stats(args: &InputArgs) -> Result<(), Failure> {
    let (schema, db) = load(args)?;
    print!("{}", DbStats::of(&db, &schema).render());
    Ok(())
}

fn parse_plant(s: &str) -> Result<(String, f64), Failure> {
    let (pattern, prob) = s
        .rsplit_once('@')
        .ok_or_else(|| Failure::config(format!("plant {s:?}: expected PATTERN@PROBABILITY")))?;
    let prob: f64 = prob
        .trim()
        .parse()
        .map_err(|_| Failure::config(format!("plant {s:?}: bad probability")))?;
    Ok((pattern.trim().to_string(), prob))
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let spec = GenSpec {
        seed: args.seed,
        n_sequences: args.sequences,
        events_per_seq: match args.fixed_events {
            Some(n) => EventsPerSeq::Fixed(n),
            None => EventsPerSeq::Geometric {
                mean: args.mean_events,
                max: args.max_events,
            },
        },
        n_types: args.types,
        event_taxonomy: TreeShape {
            branching: args.branching,
            depth: args.depth,
        },
        relationship_taxonomy: (!args.no_relationships).then_some(TreeShape {
            branching: args.rel_branching,
            depth: args.rel_depth,
        }),
        transaction_break: args.transaction_break,
        planted: args.plants.iter().map(|p| parse_plant(p)).collect::<Result<_, _>>()?,
    };
    let generated = generate_db(&spec).map_err(|e: GenError| Failure::config(e.to_string()))?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::input(format!("{}: {e}", args.out_dir.display())))?;
    for (name, text) in &generated.taxonomy_files {
        write(&args.out_dir.join(name), text)?;
    }
    write(&args.out_dir.join("schema.txt"), &generated.schema_text)?;
    write(&args.out_dir.join("data.txt"), &generated.data_text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rasp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
