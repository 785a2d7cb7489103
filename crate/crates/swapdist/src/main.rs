//! Command-line front end. Each subcommand reads flat files, runs one
//! pipeline stage and writes flat files, so stages compose through the
//! filesystem. Options resolve as flag > config file > built-in default,
//! where the built-in defaults are the reference analysis settings.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use swapdist::pipeline::{
    run_extract, run_measure, run_report, run_stratified, run_test_families,
    read_metrics_json, write_alpha_sweep_csv, write_family_summary_csv, write_family_tests_csv,
    write_json, write_metrics_csv, write_ndo_csv, write_scatter_csv, Subset,
};
use swapdist::taxonomy::{read_alias_tsv, AliasMap, Taxonomy, TaxonomyConfig};
use swapdist::treebank::counts::{read_counts_tsv, write_counts_tsv};
use swapdist::treebank::ParseMode;
use swapdist::{AnnotationStyle, DepPolicy};

const DEFAULT_RHO0: f64 = 0.5;
const DEFAULT_N_SAMPLES: u64 = 1_000_000;
const DEFAULT_N_RESAMPLES: u64 = 10_000;
const DEFAULT_CONFIDENCE: f64 = 0.99;
const DEFAULT_SEED: u64 = 0;

/// A bad flag or config value; exits 1 instead of 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "swapdist",
    version,
    about = "Swap-distance analysis of subject/object/verb order in dependency treebanks"
)]
struct Cli {
    /// TOML config file supplying defaults for any option.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count S/O/V triplet orders across a directory of CoNLL-U treebanks.
    Extract(ExtractArgs),
    /// Join counts to a taxonomy and compute per-language metrics.
    Measure(MeasureArgs),
    /// Per-family Wilcoxon tests with step-down minP adjustment.
    TestFamilies(TestFamiliesArgs),
    /// Stratified-resampling confidence interval for the family-level p.
    Stratified(StratifiedArgs),
    /// Figure-ready scatter, family-summary and NDO tables.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Ud,
    Sud,
}

impl From<StyleArg> for AnnotationStyle {
    fn from(s: StyleArg) -> AnnotationStyle {
        match s {
            StyleArg::Ud => AnnotationStyle::UD,
            StyleArg::Sud => AnnotationStyle::SUD,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DepPolicyArg {
    AllPairs,
    Nearest,
}

impl From<DepPolicyArg> for DepPolicy {
    fn from(p: DepPolicyArg) -> DepPolicy {
        match p {
            DepPolicyArg::AllPairs => DepPolicy::AllPairs,
            DepPolicyArg::Nearest => DepPolicy::Nearest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    All,
    Ndo,
}

impl From<SubsetArg> for Subset {
    fn from(s: SubsetArg) -> Subset {
        match s {
            SubsetArg::All => Subset::All,
            SubsetArg::Ndo => Subset::Ndo,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Directory scanned recursively for .conllu / .conllu.gz files.
    #[arg(long, value_name = "DIR")]
    treebanks: Option<PathBuf>,
    /// Annotation style of the treebanks.
    #[arg(long, value_enum)]
    style: Option<StyleArg>,
    /// How to pick among several subjects/objects of one verb.
    #[arg(long, value_enum)]
    dep_policy: Option<DepPolicyArg>,
    /// Abort on the first malformed sentence (the default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Skip malformed sentences and record them in the log.
    #[arg(long)]
    lenient: bool,
    /// Counts TSV to write.
    #[arg(long, value_name = "FILE", default_value = "counts.tsv")]
    out: PathBuf,
    /// Extraction audit log (JSON); defaults to <out> with a .log.json suffix.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    /// Counts TSV (as written by extract).
    #[arg(long, value_name = "FILE")]
    counts: Option<PathBuf>,
    /// Languoid table CSV.
    #[arg(long, value_name = "FILE")]
    taxonomy: Option<PathBuf>,
    /// Optional local_id<TAB>glottocode alias table.
    #[arg(long, value_name = "FILE")]
    aliases: Option<PathBuf>,
    /// NDO threshold on the second-to-first order frequency ratio.
    #[arg(long)]
    rho0: Option<f64>,
    /// Metrics table to write (CSV).
    #[arg(long, value_name = "FILE", default_value = "metrics.csv")]
    out_csv: PathBuf,
    /// Metrics report to write (JSON, consumed by later stages).
    #[arg(long, value_name = "FILE", default_value = "metrics.json")]
    out_json: PathBuf,
}

#[derive(Args)]
struct TestFamiliesArgs {
    /// Metrics report JSON (as written by measure).
    #[arg(long, value_name = "FILE")]
    metrics: Option<PathBuf>,
    /// Monte Carlo resamples for the minP adjustment.
    #[arg(long)]
    n_resamples: Option<u64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-family test table to write (CSV).
    #[arg(long, value_name = "FILE", default_value = "family_tests.csv")]
    out_tests: PathBuf,
    /// Backward-cumulative sweep table to write (CSV).
    #[arg(long, value_name = "FILE", default_value = "alpha_sweep.csv")]
    out_sweep: PathBuf,
    /// Full test report to write (JSON).
    #[arg(long, value_name = "FILE", default_value = "family_tests.json")]
    out_json: PathBuf,
}

#[derive(Args)]
struct StratifiedArgs {
    /// Metrics report JSON (as written by measure).
    #[arg(long, value_name = "FILE")]
    metrics: Option<PathBuf>,
    /// Which languages enter the analysis.
    #[arg(long, value_enum)]
    subset: Option<SubsetArg>,
    /// Stratified draws.
    #[arg(long)]
    n_samples: Option<u64>,
    /// Confidence level of the equal-tail interval.
    #[arg(long)]
    confidence: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CI report to write (JSON).
    #[arg(long, value_name = "FILE", default_value = "stratified.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics report JSON (as written by measure).
    #[arg(long, value_name = "FILE")]
    metrics: Option<PathBuf>,
    /// Per-language scatter table to write (CSV).
    #[arg(long, value_name = "FILE", default_value = "scatter.csv")]
    out_scatter: PathBuf,
    /// Per-family summary to write (CSV).
    #[arg(long, value_name = "FILE", default_value = "family_summary.csv")]
    out_families: PathBuf,
    /// NDO-language table to write (CSV).
    #[arg(long, value_name = "FILE", default_value = "ndo_languages.csv")]
    out_ndo: PathBuf,
}

/// Config-file counterpart of the flags; any key may be omitted.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    treebanks: Option<PathBuf>,
    counts: Option<PathBuf>,
    metrics: Option<PathBuf>,
    taxonomy: Option<PathBuf>,
    aliases: Option<PathBuf>,
    style: Option<String>,
    dep_policy: Option<String>,
    lenient: Option<bool>,
    rho0: Option<f64>,
    n_resamples: Option<u64>,
    n_samples: Option<u64>,
    confidence: Option<f64>,
    seed: Option<u64>,
    subset: Option<String>,
    taxonomy_columns: Option<TaxonomyConfig>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    fn style(&self) -> anyhow::Result<Option<AnnotationStyle>> {
        self.style
            .as_deref()
            .map(AnnotationStyle::from_str)
            .transpose()
            .map_err(|e| usage(format!("config key style: {e}")))
    }

    fn dep_policy(&self) -> anyhow::Result<Option<DepPolicy>> {
        match self.dep_policy.as_deref() {
            None => Ok(None),
            Some("all-pairs") => Ok(Some(DepPolicy::AllPairs)),
            Some("nearest") => Ok(Some(DepPolicy::Nearest)),
            Some(other) => Err(usage(format!(
                "config key dep_policy: unknown value {other:?}, expected \"all-pairs\" or \"nearest\""
            ))),
        }
    }

    fn subset(&self) -> anyhow::Result<Option<Subset>> {
        self.subset
            .as_deref()
            .map(Subset::from_str)
            .transpose()
            .map_err(|e| usage(format!("config key subset: {e}")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Extract(args) => cmd_extract(args, &cfg),
        Command::Measure(args) => cmd_measure(args, &cfg),
        Command::TestFamilies(args) => cmd_test_families(args, &cfg),
        Command::Stratified(args) => cmd_stratified(args, &cfg),
        Command::Report(args) => cmd_report(args, &cfg),
    }
}

fn require(flag: Option<PathBuf>, cfg: Option<&PathBuf>, name: &str) -> anyhow::Result<PathBuf> {
    flag.or_else(|| cfg.cloned()).ok_or_else(|| {
        usage(format!(
            "--{name} is required (pass the flag or set {name} in the config file)"
        ))
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn load_metrics(
    flag: Option<PathBuf>,
    cfg: &FileConfig,
) -> anyhow::Result<swapdist::pipeline::MetricsReport> {
    let path = flag
        .or_else(|| cfg.metrics.clone())
        .unwrap_or_else(|| PathBuf::from("metrics.json"));
    read_metrics_json(open(&path)?).with_context(|| format!("reading {}", path.display()))
}

fn cmd_extract(args: ExtractArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let dir = require(args.treebanks, cfg.treebanks.as_ref(), "treebanks")?;
    let style: AnnotationStyle = args
        .style
        .map(Into::into)
        .or(cfg.style()?)
        .unwrap_or_default();
    let policy: DepPolicy = args
        .dep_policy
        .map(Into::into)
        .or(cfg.dep_policy()?)
        .unwrap_or_default();
    let lenient = if args.strict {
        false
    } else {
        args.lenient || cfg.lenient.unwrap_or(false)
    };
    let mode = if lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };

    let outcome = run_extract(&dir, style, policy, mode)?;
    write_counts_tsv(create(&args.out)?, &outcome.counts)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let log_path = args
        .log
        .unwrap_or_else(|| args.out.with_extension("log.json"));
    write_json(&outcome.log, create(&log_path)?)
        .with_context(|| format!("writing {}", log_path.display()))?;

    println!(
        "extracted {} languages from {} files ({} zero-triplet, {} skipped sentences) -> {}",
        outcome.counts.len(),
        outcome.log.files.len(),
        outcome.log.zero_triplet_languages.len(),
        outcome.log.skipped_sentences.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_measure(args: MeasureArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    // Usage errors must win over data errors, so parameters are validated
    // before any file is opened.
    let rho0 = args.rho0.or(cfg.rho0).unwrap_or(DEFAULT_RHO0);
    if !(rho0 > 0.0 && rho0 <= 1.0) {
        return Err(usage(format!("--rho0 must lie in (0, 1], got {rho0}")));
    }
    let tax_path = require(args.taxonomy, cfg.taxonomy.as_ref(), "taxonomy")?;

    let counts_path = args
        .counts
        .or_else(|| cfg.counts.clone())
        .unwrap_or_else(|| PathBuf::from("counts.tsv"));
    let counts = read_counts_tsv(open(&counts_path)?)
        .with_context(|| format!("reading {}", counts_path.display()))?;

    let columns = cfg.taxonomy_columns.clone().unwrap_or_default();
    let taxonomy = Taxonomy::from_csv(open(&tax_path)?, &columns)
        .with_context(|| format!("reading {}", tax_path.display()))?;

    let aliases = match args.aliases.or_else(|| cfg.aliases.clone()) {
        Some(path) => read_alias_tsv(open(&path)?)
            .with_context(|| format!("reading {}", path.display()))?,
        None => AliasMap::new(),
    };

    let report = run_measure(&counts, &taxonomy, &aliases, rho0)?;
    write_metrics_csv(&report, create(&args.out_csv)?)
        .with_context(|| format!("writing {}", args.out_csv.display()))?;
    write_json(&report, create(&args.out_json)?)
        .with_context(|| format!("writing {}", args.out_json.display()))?;

    let e = &report.exclusions;
    println!(
        "measured {} languages (excluded: {} unresolved, {} pseudofamily, {} dedup, {} empty) -> {}",
        report.rows.len(),
        e.unresolved.len(),
        e.pseudofamily.len(),
        e.dedup_removed.len(),
        e.zero_triplets.len(),
        args.out_json.display()
    );
    Ok(())
}

fn cmd_test_families(args: TestFamiliesArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let n_resamples = args
        .n_resamples
        .or(cfg.n_resamples)
        .unwrap_or(DEFAULT_N_RESAMPLES);
    if n_resamples == 0 {
        return Err(usage("--n-resamples must be at least 1"));
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let metrics = load_metrics(args.metrics, cfg)?;

    let tests = run_test_families(&metrics, n_resamples, seed)?;
    write_family_tests_csv(&tests, create(&args.out_tests)?)
        .with_context(|| format!("writing {}", args.out_tests.display()))?;
    write_alpha_sweep_csv(&tests, create(&args.out_sweep)?)
        .with_context(|| format!("writing {}", args.out_sweep.display()))?;
    write_json(&tests, create(&args.out_json)?)
        .with_context(|| format!("writing {}", args.out_json.display()))?;

    let significant = tests.rows.iter().filter(|r| r.adjusted_p <= 0.05).count();
    println!(
        "tested {} families ({} untestable, {} with adjusted p <= 0.05) -> {}",
        tests.rows.len(),
        tests.untestable_families.len(),
        significant,
        args.out_tests.display()
    );
    Ok(())
}

fn cmd_stratified(args: StratifiedArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let subset: Subset = args
        .subset
        .map(Into::into)
        .or(cfg.subset()?)
        .unwrap_or_default();
    let n_samples = args.n_samples.or(cfg.n_samples).unwrap_or(DEFAULT_N_SAMPLES);
    if n_samples < 100 {
        return Err(usage(format!(
            "--n-samples must be at least 100, got {n_samples}"
        )));
    }
    let confidence = args
        .confidence
        .or(cfg.confidence)
        .unwrap_or(DEFAULT_CONFIDENCE);
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(usage(format!(
            "--confidence must lie strictly between 0 and 1, got {confidence}"
        )));
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let metrics = load_metrics(args.metrics, cfg)?;

    let report = run_stratified(&metrics, subset, n_samples, confidence, seed)?;
    write_json(&report, create(&args.out)?)
        .with_context(|| format!("writing {}", args.out.display()))?;

    println!(
        "stratified CI ({}, {} families, {} draws): [{:e}, {:e}] -> {}",
        report.subset,
        report.n_families,
        report.n_samples,
        report.lower,
        report.upper,
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let metrics = load_metrics(args.metrics, cfg)?;
    let tables = run_report(&metrics)?;
    write_scatter_csv(&tables, create(&args.out_scatter)?)
        .with_context(|| format!("writing {}", args.out_scatter.display()))?;
    write_family_summary_csv(&tables, create(&args.out_families)?)
        .with_context(|| format!("writing {}", args.out_families.display()))?;
    write_ndo_csv(&tables, create(&args.out_ndo)?)
        .with_context(|| format!("writing {}", args.out_ndo.display()))?;

    println!(
        "reported {} languages, {} families, {} NDO -> {}, {}, {}",
        tables.scatter.len(),
        tables.families.len(),
        tables.ndo.len(),
        args.out_scatter.display(),
        args.out_families.display(),
        args.out_ndo.display()
    );
    Ok(())
}
