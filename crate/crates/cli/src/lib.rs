//! The `leakscope` command line: ingest, synth, audit, search, report, plot.

pub mod config;
pub mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use leakscope::classify::ProbeKind;
use leakscope::cohort::CohortSpec;
use leakscope::corpus::{IngestSummary, JoinSummary, Trait};
use leakscope::error::CohortError;
use leakscope::io::{atomic_write, read_jsonl, to_jsonl, write_jsonl};
use leakscope::report::{chart_files, pairwise_csv, pairwise_table, report_files, summary_stats, write_files};
use leakscope::search::{pairing_counts, promoted_results, run_search_resumable, OutcomeStatus, SearchContext};
use leakscope::synth::{default_marker, generate, Marker, COMMENTS_FILE, PROFILES_FILE};
use leakscope::{build_cohort, evaluate_probes, Corpus, Error, EvaluationResult};

use config::{EmbedderKind, RunConfig};
use manifest::write_manifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const TRACE_FILE: &str = "search_trace.jsonl";
pub const RESULTS_FILE: &str = "results.jsonl";

#[derive(Debug, Parser)]
#[command(
    name = "leakscope",
    version,
    about = "Audit how strongly comment text leaks author attributes"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `search`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,
    #[arg(long, global = true)]
    comments: Option<PathBuf>,
    /// Precomputed embedding file (selects the precomputed embedder).
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Hashed embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and summarize a corpus.
    Ingest,
    /// Generate a synthetic corpus with planted trait markers.
    Synth(SynthArgs),
    /// Evaluate a single (subreddit, trait) pairing.
    Audit(AuditArgs),
    /// Screen every eligible pairing and fully evaluate the survivors.
    Search(SearchArgs),
    /// Aggregate a results file into tables.
    Report(ReportArgs),
    /// Render bar charts from a results file.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    authors: Option<usize>,
    #[arg(long)]
    comments_per_author: Option<usize>,
    /// Comma-separated subreddit names.
    #[arg(long, value_delimiter = ',')]
    subreddits: Option<Vec<String>>,
    /// Plant a marker, as TRAIT:SUBREDDIT:P. Repeatable.
    #[arg(long, value_parser = parse_plant)]
    plant: Vec<(Trait, String, f64)>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    subreddit: String,
    #[arg(long = "trait", value_parser = parse_trait)]
    trait_: Trait,
    /// Cohort size cap in comments, both classes together.
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    min_per_class: Option<usize>,
    /// Probe to run; repeat for several. Defaults to the configured set.
    #[arg(long, value_parser = parse_probe)]
    probe: Vec<ProbeKind>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Continue from an existing trace instead of starting over.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated per-class stage sizes.
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<usize>>,
    #[arg(long)]
    max_pairings: Option<usize>,
    #[arg(long)]
    min_per_class: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Results JSONL; defaults to results.jsonl in the output directory.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Two subreddits for a side-by-side per-trait table, as A,B.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pairwise: Option<Vec<String>>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    bottom_k: Option<usize>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    bottom_k: Option<usize>,
}

fn parse_trait(s: &str) -> Result<Trait, String> {
    s.parse::<Trait>().map_err(|e| e.to_string())
}

fn parse_probe(s: &str) -> Result<ProbeKind, String> {
    s.parse()
}

fn parse_plant(s: &str) -> Result<(Trait, String, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [t, sub, p] = parts[..] else {
        return Err(format!("expected TRAIT:SUBREDDIT:P, got `{s}`"));
    };
    let p: f64 = p.parse().map_err(|_| format!("`{p}` is not a probability"))?;
    Ok((parse_trait(t)?, sub.to_string(), p))
}

/// Parse `argv` (program name first) and run the command. Human summaries
/// go to `out`, diagnostics to `err`; the return value is the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Configuration mistakes are usage errors; anything the data causes is a
/// data error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Cohort(CohortError::InvalidSpec(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn resolve(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(dir) = &common.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(p) = &common.profiles {
        cfg.profiles = Some(p.clone());
    }
    if let Some(p) = &common.comments {
        cfg.comments = Some(p.clone());
    }
    if let Some(p) = &common.embeddings {
        cfg.embeddings = Some(p.clone());
        cfg.embedder.kind = EmbedderKind::Precomputed;
    }
    if let Some(d) = common.dim {
        cfg.embedder.dim = d;
    }
    if cfg.workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    cfg.propagate_seed();
    Ok(cfg)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    let mut cfg = resolve(&cli.common)?;
    let config_file: Vec<&Path> = cli.common.config.as_deref().into_iter().collect();
    match cli.command {
        Command::Ingest => ingest(&cfg, &config_file, out),
        Command::Synth(args) => {
            apply_synth(&mut cfg, args);
            synth(&cfg, &config_file, out)
        }
        Command::Audit(args) => audit(&mut cfg, args, &config_file, out),
        Command::Search(args) => {
            if let Some(t) = args.threshold {
                cfg.search.promote_threshold = t;
            }
            if let Some(s) = args.stages {
                cfg.search.stage_sizes = s;
            }
            if let Some(m) = args.max_pairings {
                cfg.search.max_pairings = m;
            }
            if let Some(m) = args.min_per_class {
                cfg.search.min_per_class = m;
            }
            search(&cfg, args.resume, &config_file, out)
        }
        Command::Report(args) => {
            apply_k(&mut cfg, args.top_k, args.bottom_k);
            report(&cfg, args.results, args.pairwise, &config_file, out)
        }
        Command::Plot(args) => {
            apply_k(&mut cfg, args.top_k, args.bottom_k);
            plot(&cfg, args.results, &config_file, out)
        }
    }
}

fn apply_k(cfg: &mut RunConfig, top: Option<usize>, bottom: Option<usize>) {
    if let Some(k) = top {
        cfg.report.top_k = k;
    }
    if let Some(k) = bottom {
        cfg.report.bottom_k = k;
    }
}

fn apply_synth(cfg: &mut RunConfig, args: SynthArgs) {
    if let Some(n) = args.authors {
        cfg.synth.n_authors = n;
    }
    if let Some(n) = args.comments_per_author {
        cfg.synth.comments_per_author = n;
    }
    if let Some(s) = args.subreddits {
        cfg.synth.subreddits = s;
    }
    for (t, sub, p) in args.plant {
        let marker = cfg.synth.trait_markers.entry(t).or_insert_with(|| Marker {
            token: default_marker(t),
            p,
            subreddits: Some(Vec::new()),
        });
        marker.p = p;
        if let Some(subs) = marker.subreddits.as_mut() {
            if !subs.contains(&sub) {
                subs.push(sub);
            }
        }
    }
}

fn with_inputs<'a>(cfg: &'a RunConfig, config_file: &[&'a Path]) -> Vec<&'a Path> {
    let mut inputs = config_file.to_vec();
    inputs.extend(cfg.input_files());
    inputs
}

#[derive(Serialize)]
struct PairingCount {
    subreddit: String,
    #[serde(rename = "trait")]
    trait_: Trait,
    n_true: usize,
    n_false: usize,
}

#[derive(Serialize)]
struct IngestReport {
    profiles: IngestSummary,
    mbti_unparsed: u64,
    age_unparsed: u64,
    comments: IngestSummary,
    join: JoinSummary,
    pairings: Vec<PairingCount>,
}

fn load_corpus(cfg: &RunConfig) -> Result<Corpus, Error> {
    let (profiles, comments) = cfg.require_corpus()?;
    Ok(Corpus::load(profiles, comments)?)
}

fn ingest(cfg: &RunConfig, config_file: &[&Path], out: &mut dyn Write) -> Result<(), Error> {
    let corpus = load_corpus(cfg)?;
    let pairings = pairing_counts(&corpus.labeled)
        .into_iter()
        .map(|(p, (n_true, n_false))| PairingCount {
            subreddit: p.subreddit,
            trait_: p.trait_,
            n_true,
            n_false,
        })
        .collect::<Vec<_>>();
    let summary = IngestReport {
        profiles: corpus.profiles.summary,
        mbti_unparsed: corpus.profiles.mbti_unparsed,
        age_unparsed: corpus.profiles.age_unparsed,
        comments: corpus.comments,
        join: corpus.join,
        pairings,
    };
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut body = serde_json::to_string_pretty(&summary)?;
    body.push('\n');
    atomic_write(dir.join("ingest_summary.json"), body.as_bytes())?;
    write_manifest(
        dir,
        "ingest",
        cfg,
        &with_inputs(cfg, config_file),
        vec!["ingest_summary.json".into()],
    )?;

    writeln!(
        out,
        "profiles: {} loaded, {} skipped ({} unparsed MBTI, {} unparsed age)",
        summary.profiles.rows_emitted, summary.profiles.rows_skipped, summary.mbti_unparsed, summary.age_unparsed
    )?;
    writeln!(
        out,
        "comments: {} loaded, {} skipped ({} duplicate ids)",
        summary.comments.rows_emitted, summary.comments.rows_skipped, summary.comments.duplicates
    )?;
    writeln!(
        out,
        "joined: {} labeled comments, {} without a profile; {} (subreddit, trait) pairings",
        summary.join.joined,
        summary.join.dropped_unprofiled,
        summary.pairings.len()
    )?;
    Ok(())
}

fn synth(cfg: &RunConfig, config_file: &[&Path], out: &mut dyn Write) -> Result<(), Error> {
    let corpus = generate(&cfg.synth)?;
    let dir = &cfg.output_dir;
    corpus.write_to(dir)?;
    write_manifest(
        dir,
        "synth",
        cfg,
        config_file,
        vec![PROFILES_FILE.into(), COMMENTS_FILE.into()],
    )?;
    writeln!(
        out,
        "wrote {} authors x {} comments to {}",
        cfg.synth.n_authors,
        cfg.synth.comments_per_author,
        dir.display()
    )?;
    Ok(())
}

fn audit(cfg: &mut RunConfig, args: AuditArgs, config_file: &[&Path], out: &mut dyn Write) -> Result<(), Error> {
    if let Some(m) = args.max_size {
        cfg.cohort.max_size = m;
    }
    if let Some(m) = args.min_per_class {
        cfg.cohort.min_per_class = m;
    }
    if !args.probe.is_empty() {
        cfg.probes = args.probe;
    }
    if cfg.probes.is_empty() {
        return Err(Error::Config("at least one probe is required".into()));
    }
    let corpus = load_corpus(cfg)?;
    let embedder = cfg.build_embedder()?;
    let spec = CohortSpec {
        subreddit: args.subreddit,
        trait_: args.trait_,
        max_size: cfg.cohort.max_size,
        min_per_class: cfg.cohort.min_per_class,
        test_fraction: cfg.cohort.test_fraction,
        seed: cfg.seed,
    };
    let cohort = build_cohort(&corpus.labeled, &spec)?;
    let results = evaluate_probes(&cohort, embedder.as_ref(), &cfg.probes, &cfg.hyper, cfg.seed)?;

    let stem = format!("{}_{}", file_safe(&cohort.pairing.subreddit), cohort.pairing.trait_);
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let results_name = format!("audit_{stem}.jsonl");
    let cohort_name = format!("cohort_{stem}.json");
    write_jsonl(dir.join(&results_name), &results)?;
    let mut body = serde_json::to_string_pretty(&cohort.manifest())?;
    body.push('\n');
    atomic_write(dir.join(&cohort_name), body.as_bytes())?;
    write_manifest(
        dir,
        "audit",
        cfg,
        &with_inputs(cfg, config_file),
        vec![results_name, cohort_name],
    )?;

    out.write_all(to_jsonl(&results)?.as_bytes())?;
    Ok(())
}

fn search(cfg: &RunConfig, resume: bool, config_file: &[&Path], out: &mut dyn Write) -> Result<(), Error> {
    if cfg.probes.is_empty() {
        return Err(Error::Config("at least one probe is required".into()));
    }
    cfg.search.validate()?;
    let corpus = load_corpus(cfg)?;
    let embedder = cfg.build_embedder()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let trace = dir.join(TRACE_FILE);
    if !resume && trace.exists() {
        std::fs::remove_file(&trace)?;
    }
    let ctx = SearchContext {
        config: &cfg.search,
        embedder: embedder.as_ref(),
        probes: &cfg.probes,
        hyper: &cfg.hyper,
    };
    let outcomes = run_search_resumable(&corpus.labeled, &ctx, cfg.workers, &trace)?;
    let results = promoted_results(&outcomes);
    write_jsonl(dir.join(RESULTS_FILE), &results)?;
    write_manifest(
        dir,
        "search",
        cfg,
        &with_inputs(cfg, config_file),
        vec![TRACE_FILE.into(), RESULTS_FILE.into()],
    )?;

    let mut by_status: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &outcomes {
        let key = match o.status {
            OutcomeStatus::Promoted => "promoted",
            OutcomeStatus::Pruned => "pruned",
            OutcomeStatus::SkippedInsufficient => "skipped",
        };
        *by_status.entry(key).or_default() += 1;
    }
    writeln!(out, "screened {} pairings: {by_status:?}", outcomes.len())?;
    for o in outcomes.iter().filter(|o| o.status == OutcomeStatus::Promoted) {
        let lifts: Vec<String> = o
            .final_results
            .iter()
            .flatten()
            .map(|r| format!("{} {:+.4}", r.probe.name(), r.macro_f1_lift))
            .collect();
        writeln!(
            out,
            "  {} / {}: {}",
            o.pairing.subreddit,
            o.pairing.trait_,
            lifts.join(", ")
        )?;
    }
    Ok(())
}

fn load_results(cfg: &RunConfig, path: Option<PathBuf>) -> Result<(PathBuf, Vec<EvaluationResult>), Error> {
    let path = path.unwrap_or_else(|| cfg.output_dir.join(RESULTS_FILE));
    if !path.is_file() {
        return Err(Error::Config(format!("results file {} does not exist", path.display())));
    }
    let results = read_jsonl(&path)?;
    Ok((path, results))
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn report(
    cfg: &RunConfig,
    results: Option<PathBuf>,
    pairwise: Option<Vec<String>>,
    config_file: &[&Path],
    out: &mut dyn Write,
) -> Result<(), Error> {
    let pair = match pairwise.as_deref() {
        None => None,
        Some([a, b]) => Some([a.trim().to_lowercase(), b.trim().to_lowercase()]),
        Some(_) => return Err(Error::Config("--pairwise takes exactly two subreddits, as A,B".into())),
    };
    let (path, results) = load_results(cfg, results)?;
    let mut files = report_files(&results, cfg.report.top_k, cfg.report.bottom_k)?;
    if let Some([a, b]) = &pair {
        let table = pairwise_table(&results, [a, b], &Trait::ALL);
        files.insert(
            format!("pairwise_{}_{}.csv", file_safe(a), file_safe(b)),
            pairwise_csv(&table)?,
        );
    }
    let dir = &cfg.output_dir;
    write_files(dir, &files)?;
    let mut inputs = with_inputs(cfg, config_file);
    inputs.push(&path);
    write_manifest(dir, "report", cfg, &inputs, files.keys().cloned().collect())?;

    let stats = summary_stats(&results)?;
    writeln!(
        out,
        "{} pairings: mean lift {:.3}, max {:.3} ({} / {}), min {:.3} ({} / {})",
        stats.n_pairings,
        stats.mean_lift,
        stats.max.lift,
        stats.max.subreddit,
        stats.max.trait_,
        stats.min.lift,
        stats.min.subreddit,
        stats.min.trait_
    )?;
    Ok(())
}

fn plot(cfg: &RunConfig, results: Option<PathBuf>, config_file: &[&Path], out: &mut dyn Write) -> Result<(), Error> {
    let (path, results) = load_results(cfg, results)?;
    let files = chart_files(&results, cfg.report.top_k, cfg.report.bottom_k)?;
    let dir = &cfg.output_dir;
    write_files(dir, &files)?;
    let mut inputs = with_inputs(cfg, config_file);
    inputs.push(&path);
    write_manifest(dir, "plot", cfg, &inputs, files.keys().cloned().collect())?;
    for name in files.keys() {
        writeln!(out, "wrote {}", dir.join(name).display())?;
    }
    Ok(())
}
