//! End-to-end commands behind the CLI: extract counts from a treebank tree,
//! join them to a taxonomy, test families, run stratified confidence
//! intervals, and emit figure-ready tables.
//!
//! Artifacts are flat CSV/TSV/JSON only. JSON reports carry a
//! `schema_version` field and readers reject other versions. Every command
//! is deterministic given identical inputs and seeds: inputs are sorted
//! before processing and all randomness is seed-derived.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::minp::{adjust_sd_minp, MinPError};
use crate::stats::stratified::{stratified_ci, StratifiedError};
use crate::taxonomy::{dedup_samples, typical_macroarea_of, AliasMap, Languoid, MacroareaError, Taxonomy};
use crate::treebank::counts::TripletCounts;
use crate::treebank::extract::AnnotationStyle;
use crate::treebank::extract::DepPolicy;
use crate::treebank::{count_conllu_file, ParseMode, TreebankError};

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Treebank(#[from] TreebankError),
    #[error(transparent)]
    MinP(#[from] MinPError),
    #[error(transparent)]
    Stratified(#[from] StratifiedError),
    #[error(transparent)]
    Macroarea(#[from] MacroareaError),
    #[error("cannot scan {path}: {source}")]
    Scan {
        path: PathBuf,
        source: walkdir::Error,
    },
    #[error("no .conllu or .conllu.gz files matched under {0}")]
    NoFilesMatched(PathBuf),
    #[error("subset filter {0:?} matched no languages")]
    EmptySubset(&'static str),
    #[error("no family has a nonzero delta to test")]
    NoTestableFamilies,
    #[error("rho0 must lie in (0, 1], got {0}")]
    BadRho0(f64),
    #[error("unsupported schema_version {found} (this build reads {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
}

// ---------------------------------------------------------------------------
// extract

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractedFile {
    pub path: String,
    pub language: String,
    pub triplets: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkipEntry {
    pub path: String,
    pub line: u64,
    pub reason: String,
}

/// Audit log of one extraction run; always written next to the counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractLog {
    pub schema_version: u32,
    pub style: String,
    pub files: Vec<ExtractedFile>,
    pub zero_triplet_languages: Vec<String>,
    pub skipped_sentences: Vec<SkipEntry>,
}

#[derive(Debug)]
pub struct ExtractOutcome {
    /// Per-language merged counts, sorted by language code; zero-triplet
    /// languages omitted (they appear in the log instead).
    pub counts: Vec<TripletCounts>,
    pub log: ExtractLog,
}

/// Language code of a treebank file: the stem up to the first `_` or `-`,
/// so `cy_ccg-ud-test.conllu.gz` and `cy_adt-ud-train.conllu` merge as `cy`.
pub fn language_code(path: &Path) -> String {
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    let stem = name.strip_suffix(".gz").unwrap_or(&name);
    let stem = stem.strip_suffix(".conllu").unwrap_or(stem);
    stem.split(['_', '-']).next().unwrap_or(stem).to_owned()
}

fn is_treebank_file(name: &str) -> bool {
    name.ends_with(".conllu") || name.ends_with(".conllu.gz")
}

/// Walks a directory tree, extracts triplets from every CoNLL-U file and
/// merges counts across files of the same language code.
pub fn run_extract(
    dir: &Path,
    style: AnnotationStyle,
    policy: DepPolicy,
    mode: ParseMode,
) -> Result<ExtractOutcome, PipelineError> {
    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(dir) {
        let entry = entry.map_err(|source| PipelineError::Scan {
            path: dir.to_owned(),
            source,
        })?;
        if entry.file_type().is_file() && is_treebank_file(&entry.file_name().to_string_lossy()) {
            paths.push(entry.into_path());
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(PipelineError::NoFilesMatched(dir.to_owned()));
    }

    let mut merged: BTreeMap<String, [u64; 6]> = BTreeMap::new();
    let mut log = ExtractLog {
        schema_version: SCHEMA_VERSION,
        style: style.label().to_owned(),
        files: Vec::new(),
        zero_triplet_languages: Vec::new(),
        skipped_sentences: Vec::new(),
    };
    for path in &paths {
        let language = language_code(path);
        let (counts, skipped) = count_conllu_file(path, style, policy, mode)?;
        log.files.push(ExtractedFile {
            path: path.display().to_string(),
            language: language.clone(),
            triplets: counts.iter().sum(),
        });
        log.skipped_sentences.extend(skipped.into_iter().map(|s| SkipEntry {
            path: s.path.display().to_string(),
            line: s.line,
            reason: s.reason,
        }));
        let slot = merged.entry(language).or_insert([0; 6]);
        for (s, c) in slot.iter_mut().zip(counts) {
            *s += c;
        }
    }

    let mut out = Vec::new();
    for (language, counts) in merged {
        if counts.iter().sum::<u64>() == 0 {
            log.zero_triplet_languages.push(language);
        } else {
            out.push(TripletCounts::with_counts(language, counts));
        }
    }
    Ok(ExtractOutcome { counts: out, log })
}

// ---------------------------------------------------------------------------
// measure

/// One retained language with all per-language quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageMetricsRow {
    /// Sample id as it appeared in the counts table.
    pub language: String,
    pub glottocode: String,
    pub name: String,
    pub family: String,
    pub macroareas: Vec<String>,
    pub total: u64,
    /// Counts in canonical order SOV, SVO, VSO, VOS, OVS, OSV.
    pub counts: [u64; 6],
    pub mean_swap_distance: f64,
    pub random_baseline: f64,
    pub simpson: f64,
    pub dominance_ratio: f64,
    /// Dominant order label, or "NDO".
    pub class: String,
}

impl LanguageMetricsRow {
    /// Signed distance from the baseline; negative when the language sits
    /// below the control line.
    pub fn delta(&self) -> f64 {
        self.mean_swap_distance - self.random_baseline
    }

    pub fn is_ndo(&self) -> bool {
        self.class == "NDO"
    }

    /// Single-area label, or the hyphenated hybrid for multi-area languages
    /// (areas sorted lexicographically).
    pub fn macroarea_label(&self) -> String {
        let mut areas = self.macroareas.clone();
        areas.sort();
        areas.join("-")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedEntry {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudofamilyEntry {
    pub id: String,
    pub glottocode: String,
    pub family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupEntry {
    pub sample: String,
    pub language_ref: String,
    pub kept_sample: String,
}

/// Everything dropped on the way from counts to metrics rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Exclusions {
    pub unresolved: Vec<UnresolvedEntry>,
    pub pseudofamily: Vec<PseudofamilyEntry>,
    pub dedup_removed: Vec<DedupEntry>,
    pub zero_triplets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub rho0: f64,
    pub rows: Vec<LanguageMetricsRow>,
    pub exclusions: Exclusions,
}

/// Joins counts to the taxonomy and computes every per-language metric.
/// Zero-triplet, unresolvable, pseudofamily and dedup-removed samples go to
/// the exclusion log; each retained language yields exactly one row, sorted
/// by sample id.
pub fn run_measure(
    counts: &[TripletCounts],
    taxonomy: &Taxonomy,
    aliases: &AliasMap,
    rho0: f64,
) -> Result<MetricsReport, PipelineError> {
    if !(rho0 > 0.0 && rho0 <= 1.0) {
        return Err(PipelineError::BadRho0(rho0));
    }
    let mut sorted: Vec<&TripletCounts> = counts.iter().collect();
    sorted.sort_by(|a, b| a.language.cmp(&b.language));

    let mut exclusions = Exclusions::default();
    let mut resolved: Vec<(String, &Languoid)> = Vec::new();
    let mut by_sample: BTreeMap<&str, &TripletCounts> = BTreeMap::new();
    for c in sorted {
        if c.total() == 0 {
            exclusions.zero_triplets.push(c.language.clone());
            continue;
        }
        match taxonomy.resolve(&c.language, aliases) {
            Err(e) => exclusions.unresolved.push(UnresolvedEntry {
                id: c.language.clone(),
                reason: e.to_string(),
            }),
            Ok(l) if l.excluded => exclusions.pseudofamily.push(PseudofamilyEntry {
                id: c.language.clone(),
                glottocode: l.glottocode.clone(),
                family: l.family.clone(),
            }),
            Ok(l) => {
                resolved.push((c.language.clone(), l));
                by_sample.insert(&c.language, c);
            }
        }
    }

    let dedup = dedup_samples(resolved);
    exclusions.dedup_removed = dedup
        .removed
        .into_iter()
        .map(|r| DedupEntry {
            sample: r.sample,
            language_ref: r.language_ref,
            kept_sample: r.kept_sample,
        })
        .collect();

    let mut rows = Vec::with_capacity(dedup.kept.len());
    for (sample, languoid) in dedup.kept {
        let c = by_sample[sample.as_str()];
        let dist = c.distribution().expect("zero-total rows were filtered");
        rows.push(LanguageMetricsRow {
            language: sample,
            glottocode: languoid.glottocode.clone(),
            name: languoid.name.clone(),
            family: languoid.family.clone(),
            macroareas: languoid.macroareas.clone(),
            total: c.total(),
            counts: c.counts(),
            mean_swap_distance: dist.mean_swap_distance(),
            random_baseline: dist.random_baseline(),
            simpson: dist.simpson_index(),
            dominance_ratio: dist.dominance_ratio(),
            class: dist.classify(rho0).to_string(),
        });
    }
    Ok(MetricsReport {
        schema_version: SCHEMA_VERSION,
        rho0,
        rows,
        exclusions,
    })
}

/// Per-family delta lists over the given rows, sorted by family name;
/// within a family, deltas follow row order.
pub fn family_deltas(rows: &[&LanguageMetricsRow]) -> Vec<(String, Vec<f64>)> {
    let mut map: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        map.entry(r.family.as_str()).or_default().push(r.delta());
    }
    map.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

// ---------------------------------------------------------------------------
// test-families

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyTestRow {
    pub family: String,
    pub n_languages: usize,
    pub raw_p: f64,
    pub adjusted_p: f64,
}

/// One level of the backward-cumulative sweep: all families whose adjusted
/// p reaches `alpha`, with their language counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSweepRow {
    pub alpha: f64,
    pub n_families: usize,
    pub families: Vec<String>,
    pub language_counts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyTestsReport {
    pub schema_version: u32,
    pub n_resamples: u64,
    pub seed: u64,
    /// Families whose deltas are all exactly zero; the signed-rank test is
    /// undefined for them, so they are reported here instead of tested.
    pub untestable_families: Vec<String>,
    pub rows: Vec<FamilyTestRow>,
    pub alpha_sweep: Vec<AlphaSweepRow>,
}

/// Tests every family (one-tailed: languages sit below their baselines) and
/// adjusts for multiplicity, then derives the sweep table: for each achieved
/// adjusted-p level, which families reach it.
pub fn run_test_families(
    metrics: &MetricsReport,
    n_resamples: u64,
    seed: u64,
) -> Result<FamilyTestsReport, PipelineError> {
    let rows: Vec<&LanguageMetricsRow> = metrics.rows.iter().collect();
    let mut names = Vec::new();
    let mut deltas = Vec::new();
    let mut untestable = Vec::new();
    for (name, d) in family_deltas(&rows) {
        if d.iter().any(|x| *x != 0.0) {
            names.push(name);
            deltas.push(d);
        } else {
            untestable.push(name);
        }
    }
    if names.is_empty() {
        return Err(PipelineError::NoTestableFamilies);
    }
    let tests = adjust_sd_minp(&deltas, n_resamples, seed)?;
    let rows: Vec<FamilyTestRow> = names
        .into_iter()
        .zip(&deltas)
        .zip(tests)
        .map(|((family, d), t)| FamilyTestRow {
            family,
            n_languages: d.len(),
            raw_p: t.raw_p,
            adjusted_p: t.adjusted_p,
        })
        .collect();

    let mut alphas: Vec<f64> = rows.iter().map(|r| r.adjusted_p).collect();
    alphas.sort_by(|a, b| a.total_cmp(b));
    alphas.dedup();
    let alpha_sweep = alphas
        .into_iter()
        .map(|alpha| {
            let hit: Vec<&FamilyTestRow> =
                rows.iter().filter(|r| r.adjusted_p <= alpha).collect();
            AlphaSweepRow {
                alpha,
                n_families: hit.len(),
                families: hit.iter().map(|r| r.family.clone()).collect(),
                language_counts: hit.iter().map(|r| r.n_languages).collect(),
            }
        })
        .collect();

    Ok(FamilyTestsReport {
        schema_version: SCHEMA_VERSION,
        n_resamples,
        seed,
        untestable_families: untestable,
        rows,
        alpha_sweep,
    })
}

// ---------------------------------------------------------------------------
// stratified

/// Which languages enter the stratified analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subset {
    #[default]
    All,
    /// Only languages classified as lacking a dominant order.
    Ndo,
}

impl Subset {
    pub fn label(self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::Ndo => "ndo",
        }
    }
}

impl std::fmt::Display for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown subset {0:?}, expected \"all\" or \"ndo\"")]
pub struct ParseSubsetError(String);

impl FromStr for Subset {
    type Err = ParseSubsetError;

    fn from_str(s: &str) -> Result<Subset, ParseSubsetError> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(Subset::All),
            "ndo" => Ok(Subset::Ndo),
            _ => Err(ParseSubsetError(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub schema_version: u32,
    pub subset: String,
    pub n_families: usize,
    pub n_languages: usize,
    pub n_samples: u64,
    pub confidence: f64,
    pub seed: u64,
    pub lower: f64,
    pub upper: f64,
    pub n_degenerate: u64,
}

/// Stratified-resampling CI of the family-level p-value, optionally
/// restricted to NDO languages.
pub fn run_stratified(
    metrics: &MetricsReport,
    subset: Subset,
    n_samples: u64,
    confidence: f64,
    seed: u64,
) -> Result<StratifiedReport, PipelineError> {
    let rows: Vec<&LanguageMetricsRow> = metrics
        .rows
        .iter()
        .filter(|r| subset == Subset::All || r.is_ndo())
        .collect();
    if rows.is_empty() {
        return Err(PipelineError::EmptySubset(subset.label()));
    }
    let groups = family_deltas(&rows);
    let deltas: Vec<Vec<f64>> = groups.iter().map(|(_, d)| d.clone()).collect();
    let ci = stratified_ci(&deltas, n_samples, confidence, seed)?;
    Ok(StratifiedReport {
        schema_version: SCHEMA_VERSION,
        subset: subset.label().to_owned(),
        n_families: groups.len(),
        n_languages: rows.len(),
        n_samples: ci.n_samples,
        confidence: ci.confidence,
        seed: ci.seed,
        lower: ci.lower,
        upper: ci.upper,
        n_degenerate: ci.n_degenerate,
    })
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterRow {
    pub language: String,
    pub family: String,
    pub macroarea: String,
    pub class: String,
    pub total: u64,
    pub mean_swap_distance: f64,
    pub random_baseline: f64,
    pub simpson: f64,
    pub dominance_ratio: f64,
    /// True iff ⟨d⟩ < ⟨d⟩_r: the language beats its own shuffled baseline.
    pub below_control_line: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySummaryRow {
    pub family: String,
    pub n_languages: usize,
    pub typical_macroarea: String,
    /// Weighted share of the family in that macroarea, as a percentage.
    pub rho_percent: f64,
    pub tied: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NdoRow {
    pub language: String,
    pub family: String,
    pub macroarea: String,
    pub total: u64,
    pub mean_swap_distance: f64,
    pub random_baseline: f64,
    pub dominance_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportTables {
    pub scatter: Vec<ScatterRow>,
    pub families: Vec<FamilySummaryRow>,
    pub ndo: Vec<NdoRow>,
}

/// Builds the three figure-ready tables from a metrics report.
pub fn run_report(metrics: &MetricsReport) -> Result<ReportTables, PipelineError> {
    let scatter = metrics
        .rows
        .iter()
        .map(|r| ScatterRow {
            language: r.language.clone(),
            family: r.family.clone(),
            macroarea: r.macroarea_label(),
            class: r.class.clone(),
            total: r.total,
            mean_swap_distance: r.mean_swap_distance,
            random_baseline: r.random_baseline,
            simpson: r.simpson,
            dominance_ratio: r.dominance_ratio,
            below_control_line: r.mean_swap_distance < r.random_baseline,
        })
        .collect();

    let mut by_family: BTreeMap<&str, Vec<&LanguageMetricsRow>> = BTreeMap::new();
    for r in &metrics.rows {
        by_family.entry(r.family.as_str()).or_default().push(r);
    }
    let mut families = Vec::with_capacity(by_family.len());
    for (family, members) in by_family {
        let call = typical_macroarea_of(
            members
                .iter()
                .map(|r| (r.language.as_str(), r.macroareas.as_slice())),
        )?;
        families.push(FamilySummaryRow {
            family: family.to_owned(),
            n_languages: members.len(),
            typical_macroarea: call.macroarea,
            rho_percent: call.rho * 100.0,
            tied: call.tied,
        });
    }

    let ndo = metrics
        .rows
        .iter()
        .filter(|r| r.is_ndo())
        .map(|r| NdoRow {
            language: r.language.clone(),
            family: r.family.clone(),
            macroarea: r.macroarea_label(),
            total: r.total,
            mean_swap_distance: r.mean_swap_distance,
            random_baseline: r.random_baseline,
            dominance_ratio: r.dominance_ratio,
        })
        .collect();

    Ok(ReportTables {
        scatter,
        families,
        ndo,
    })
}

// ---------------------------------------------------------------------------
// serialization

/// Writes any JSON artifact pretty-printed with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, mut out: impl Write) -> Result<(), PipelineError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads a metrics report, rejecting other schema versions.
pub fn read_metrics_json(input: impl Read) -> Result<MetricsReport, PipelineError> {
    let value: serde_json::Value = serde_json::from_reader(input)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(PipelineError::SchemaVersion { found: v as u32 });
        }
        None => return Err(PipelineError::SchemaVersion { found: 0 }),
    }
    Ok(serde_json::from_value(value)?)
}

pub fn write_metrics_csv(report: &MetricsReport, out: impl Write) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "language",
        "glottocode",
        "name",
        "family",
        "macroareas",
        "total",
        "sov",
        "svo",
        "vso",
        "vos",
        "ovs",
        "osv",
        "mean_swap_distance",
        "random_baseline",
        "simpson",
        "dominance_ratio",
        "class",
    ])?;
    for r in &report.rows {
        let mut record = vec![
            r.language.clone(),
            r.glottocode.clone(),
            r.name.clone(),
            r.family.clone(),
            r.macroareas.join(";"),
            r.total.to_string(),
        ];
        record.extend(r.counts.iter().map(|c| c.to_string()));
        record.extend([
            r.mean_swap_distance.to_string(),
            r.random_baseline.to_string(),
            r.simpson.to_string(),
            r.dominance_ratio.to_string(),
            r.class.clone(),
        ]);
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_family_tests_csv(
    report: &FamilyTestsReport,
    out: impl Write,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["family", "n_languages", "raw_p", "adjusted_p"])?;
    for r in &report.rows {
        w.write_record([
            r.family.clone(),
            r.n_languages.to_string(),
            r.raw_p.to_string(),
            r.adjusted_p.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_alpha_sweep_csv(
    report: &FamilyTestsReport,
    out: impl Write,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "n_families", "families", "language_counts"])?;
    for r in &report.alpha_sweep {
        w.write_record([
            r.alpha.to_string(),
            r.n_families.to_string(),
            r.families.join(";"),
            r.language_counts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter_csv(tables: &ReportTables, out: impl Write) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "language",
        "family",
        "macroarea",
        "class",
        "total",
        "mean_swap_distance",
        "random_baseline",
        "simpson",
        "dominance_ratio",
        "below_control_line",
    ])?;
    for r in &tables.scatter {
        w.write_record([
            r.language.clone(),
            r.family.clone(),
            r.macroarea.clone(),
            r.class.clone(),
            r.total.to_string(),
            r.mean_swap_distance.to_string(),
            r.random_baseline.to_string(),
            r.simpson.to_string(),
            r.dominance_ratio.to_string(),
            r.below_control_line.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_family_summary_csv(
    tables: &ReportTables,
    out: impl Write,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "family",
        "n_languages",
        "typical_macroarea",
        "rho_percent",
        "tied",
    ])?;
    for r in &tables.families {
        w.write_record([
            r.family.clone(),
            r.n_languages.to_string(),
            r.typical_macroarea.clone(),
            r.rho_percent.to_string(),
            r.tied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ndo_csv(tables: &ReportTables, out: impl Write) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "language",
        "family",
        "macroarea",
        "total",
        "mean_swap_distance",
        "random_baseline",
        "dominance_ratio",
    ])?;
    for r in &tables.ndo {
        w.write_record([
            r.language.clone(),
            r.family.clone(),
            r.macroarea.clone(),
            r.total.to_string(),
            r.mean_swap_distance.to_string(),
            r.random_baseline.to_string(),
            r.dominance_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::TaxonomyConfig;
    use std::fs;

    const TAXONOMY: &str = "\
glottocode,name,family,macroareas,kind,language_ref
wels1247,Welsh,Indo-European,Eurasia,language,
iris1253,Irish,Indo-European,Eurasia,language,
basq1248,Basque,,Eurasia,language,
nucl1301,Turkish,Turkic,Eurasia,language,
stan1290,French,Indo-European,Eurasia,language,
braz1246,Brazilian Portuguese,Indo-European,South America,dialect,port1283
port1283,Portuguese,Indo-European,Eurasia;South America,language,
espe1235,Esperanto,Artificial Language,Eurasia,language,
";

    fn taxonomy() -> Taxonomy {
        Taxonomy::from_csv(TAXONOMY.as_bytes(), &TaxonomyConfig::default()).unwrap()
    }

    fn aliases() -> AliasMap {
        AliasMap::from([
            ("cy".to_owned(), "wels1247".to_owned()),
            ("pt_br".to_owned(), "braz1246".to_owned()),
        ])
    }

    fn sample_counts() -> Vec<TripletCounts> {
        vec![
            // Mixed distribution: all metrics strictly inside their ranges,
            // VSO clearly dominant.
            TripletCounts::with_counts("cy", [10, 20, 60, 7, 3, 0]),
            // Degenerate: a single order.
            TripletCounts::with_counts("iris1253", [0, 0, 80, 0, 0, 0]),
            // Uniform: the NDO extreme.
            TripletCounts::with_counts("basq1248", [7, 7, 7, 7, 7, 7]),
            TripletCounts::with_counts("nucl1301", [50, 10, 0, 0, 0, 0]),
            TripletCounts::with_counts("port1283", [20, 60, 0, 0, 0, 0]),
            TripletCounts::with_counts("pt_br", [5, 15, 0, 0, 0, 0]),
            TripletCounts::with_counts("espe1235", [10, 10, 0, 0, 0, 0]),
            TripletCounts::with_counts("missing_lang", [3, 0, 0, 0, 0, 0]),
            TripletCounts::with_counts("stan1290", [0, 0, 0, 0, 0, 0]),
        ]
    }

    fn measured() -> MetricsReport {
        run_measure(&sample_counts(), &taxonomy(), &aliases(), 0.5).unwrap()
    }

    #[test]
    fn measure_joins_resolves_and_excludes() {
        let report = measured();
        let ids: Vec<&str> = report.rows.iter().map(|r| r.language.as_str()).collect();
        // Sorted by sample id; pt_br lost dedup, espe1235 is pseudofamily,
        // missing_lang unresolved, stan1290 empty.
        assert_eq!(ids, ["basq1248", "cy", "iris1253", "nucl1301", "port1283"]);
        assert_eq!(report.exclusions.zero_triplets, ["stan1290"]);
        assert_eq!(report.exclusions.unresolved.len(), 1);
        assert_eq!(report.exclusions.unresolved[0].id, "missing_lang");
        assert_eq!(report.exclusions.pseudofamily.len(), 1);
        assert_eq!(report.exclusions.pseudofamily[0].glottocode, "espe1235");
        assert_eq!(report.exclusions.dedup_removed.len(), 1);
        assert_eq!(report.exclusions.dedup_removed[0].sample, "pt_br");
        assert_eq!(report.exclusions.dedup_removed[0].kept_sample, "port1283");
        let welsh = &report.rows[1];
        assert_eq!(welsh.glottocode, "wels1247");
        assert_eq!(welsh.family, "Indo-European");
        assert_eq!(welsh.total, 100);
    }

    #[test]
    fn measure_metrics_satisfy_their_identities() {
        let report = measured();
        for r in &report.rows {
            assert!(
                (r.random_baseline - 1.8 * (1.0 - r.simpson)).abs() < 1e-12,
                "{}: baseline vs simpson identity",
                r.language
            );
            assert_eq!(r.total, r.counts.iter().sum::<u64>());
        }
        // Degenerate single-order language: both metrics hit zero and the
        // order itself is dominant.
        let irish = report.rows.iter().find(|r| r.language == "iris1253").unwrap();
        assert_eq!(irish.mean_swap_distance, 0.0);
        assert_eq!(irish.random_baseline, 0.0);
        assert_eq!(irish.class, "VSO");
        assert_eq!(irish.dominance_ratio, 0.0);
        // Uniform language: both metrics at the ceiling, no dominant order.
        let basque = report.rows.iter().find(|r| r.language == "basq1248").unwrap();
        assert!((basque.mean_swap_distance - 1.5).abs() < 1e-12);
        assert!((basque.random_baseline - 1.5).abs() < 1e-12);
        assert_eq!(basque.class, "NDO");
    }

    #[test]
    fn measure_rejects_bad_rho0() {
        let err = run_measure(&sample_counts(), &taxonomy(), &aliases(), 0.0);
        assert!(matches!(err, Err(PipelineError::BadRho0(_))));
        let err = run_measure(&sample_counts(), &taxonomy(), &aliases(), 1.5);
        assert!(matches!(err, Err(PipelineError::BadRho0(_))));
    }

    #[test]
    fn metrics_json_round_trips() {
        let report = measured();
        let mut buf = Vec::new();
        write_json(&report, &mut buf).unwrap();
        let back = read_metrics_json(buf.as_slice()).unwrap();
        assert_eq!(back, report);
        // A bumped version is rejected.
        let mut tampered = report.clone();
        tampered.schema_version = 99;
        let mut buf = Vec::new();
        write_json(&tampered, &mut buf).unwrap();
        assert!(matches!(
            read_metrics_json(buf.as_slice()),
            Err(PipelineError::SchemaVersion { found: 99 })
        ));
    }

    #[test]
    fn test_families_reports_and_sweeps() {
        let report = measured();
        let tests = run_test_families(&report, 200, 7).unwrap();
        // Basque and Turkic are their own families; Irish (delta 0) makes
        // Indo-European 3 languages strong with cy and port1283.
        let fams: Vec<&str> = tests.rows.iter().map(|r| r.family.as_str()).collect();
        assert_eq!(fams, ["Basque", "Indo-European", "Turkic"]);
        for r in &tests.rows {
            assert!(r.adjusted_p >= r.raw_p);
            assert!(r.adjusted_p <= 1.0 && r.raw_p > 0.0);
        }
        // Sweep is backward-cumulative: counts nondecreasing in alpha, and
        // each level lists exactly its families.
        let mut prev = 0;
        for level in &tests.alpha_sweep {
            assert!(level.n_families >= prev);
            assert_eq!(level.n_families, level.families.len());
            assert_eq!(level.n_families, level.language_counts.len());
            prev = level.n_families;
        }
        assert_eq!(tests.alpha_sweep.last().unwrap().n_families, 3);
    }

    #[test]
    fn test_families_sets_aside_all_zero_families() {
        let counts = vec![
            // Two degenerate languages: the whole family has delta 0
            // exactly, since single-order rows put both metrics at 0.
            TripletCounts::with_counts("iris1253", [0, 0, 80, 0, 0, 0]),
            TripletCounts::with_counts("wels1247", [0, 90, 0, 0, 0, 0]),
            TripletCounts::with_counts("nucl1301", [50, 10, 0, 0, 0, 0]),
            TripletCounts::with_counts("basq1248", [40, 10, 5, 0, 0, 0]),
        ];
        let report = run_measure(&counts, &taxonomy(), &AliasMap::new(), 0.5).unwrap();
        let tests = run_test_families(&report, 100, 1).unwrap();
        assert_eq!(tests.untestable_families, ["Indo-European"]);
        let fams: Vec<&str> = tests.rows.iter().map(|r| r.family.as_str()).collect();
        assert_eq!(fams, ["Basque", "Turkic"]);
    }

    #[test]
    fn stratified_filters_ndo_and_errors_on_empty_subset() {
        let report = measured();
        let all = run_stratified(&report, Subset::All, 500, 0.99, 3).unwrap();
        assert_eq!(all.subset, "all");
        assert_eq!(all.n_families, 3);
        assert_eq!(all.n_languages, 5);
        assert!(all.lower <= all.upper);
        // Only Basque is NDO here: a single family cannot be stratified.
        assert!(matches!(
            run_stratified(&report, Subset::Ndo, 500, 0.99, 3),
            Err(PipelineError::Stratified(StratifiedError::TooFewFamilies(1)))
        ));
        // And with no NDO language at all the filter itself errors.
        let mut no_ndo = report.clone();
        no_ndo.rows.retain(|r| !r.is_ndo());
        assert!(matches!(
            run_stratified(&no_ndo, Subset::Ndo, 500, 0.99, 3),
            Err(PipelineError::EmptySubset("ndo"))
        ));
    }

    #[test]
    fn stratified_singleton_families_degenerate_to_a_point() {
        // Every family has exactly one language, so each draw resamples the
        // same set and the CI collapses.
        let counts = vec![
            TripletCounts::with_counts("nucl1301", [50, 10, 0, 0, 0, 0]),
            TripletCounts::with_counts("basq1248", [7, 7, 7, 6, 7, 7]),
            TripletCounts::with_counts("wels1247", [10, 30, 45, 10, 5, 0]),
        ];
        let report = run_measure(&counts, &taxonomy(), &AliasMap::new(), 0.5).unwrap();
        let ci = run_stratified(&report, Subset::All, 200, 0.95, 11).unwrap();
        assert_eq!(ci.lower, ci.upper);
    }

    #[test]
    fn report_tables_follow_their_definitions() {
        let report = measured();
        let tables = run_report(&report).unwrap();
        assert_eq!(tables.scatter.len(), report.rows.len());
        for (s, r) in tables.scatter.iter().zip(&report.rows) {
            assert_eq!(
                s.below_control_line,
                r.mean_swap_distance < r.random_baseline
            );
        }
        // Portuguese spans two areas: hybrid hyphenated label, sorted.
        let pt = tables
            .scatter
            .iter()
            .find(|s| s.language == "port1283")
            .unwrap();
        assert_eq!(pt.macroarea, "Eurasia-South America");
        for f in &tables.families {
            assert!(f.rho_percent >= 0.0 && f.rho_percent <= 100.0);
        }
        // Indo-European: cy + iris1253 in Eurasia, port1283 split over two
        // areas; rho(Eurasia) = (1 + 1 + 1/2)/3.
        let ie = tables
            .families
            .iter()
            .find(|f| f.family == "Indo-European")
            .unwrap();
        assert_eq!(ie.n_languages, 3);
        assert_eq!(ie.typical_macroarea, "Eurasia");
        assert!((ie.rho_percent - 250.0 / 3.0).abs() < 1e-9);
        assert!(!ie.tied);
        let ndo_ids: Vec<&str> = tables.ndo.iter().map(|r| r.language.as_str()).collect();
        assert_eq!(ndo_ids, ["basq1248"]);
    }

    #[test]
    fn csv_writers_emit_one_row_per_record() {
        let report = measured();
        let mut buf = Vec::new();
        write_metrics_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + report.rows.len());
        assert!(text.starts_with("language,glottocode,name,family,"));
        assert!(text.contains("Eurasia;South America"));

        let tests = run_test_families(&report, 100, 5).unwrap();
        let mut buf = Vec::new();
        write_family_tests_csv(&tests, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            1 + tests.rows.len()
        );
        let mut buf = Vec::new();
        write_alpha_sweep_csv(&tests, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            1 + tests.alpha_sweep.len()
        );

        let tables = run_report(&report).unwrap();
        let mut buf = Vec::new();
        write_scatter_csv(&tables, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            1 + tables.scatter.len()
        );
        let mut buf = Vec::new();
        write_family_summary_csv(&tables, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            1 + tables.families.len()
        );
        let mut buf = Vec::new();
        write_ndo_csv(&tables, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            1 + tables.ndo.len()
        );
    }

    #[test]
    fn extract_merges_by_language_code_and_logs() {
        let dir = tempfile::tempdir().unwrap();
        // Two files of the same language, one different, one gz, one empty
        // language, one non-treebank file that must be ignored.
        let sov = "1\tingrid\tingrid\tPROPN\t_\t_\t3\tnsubj\t_\t_\n\
                   2\tfisk\tfisk\tNOUN\t_\t_\t3\tobj\t_\t_\n\
                   3\tkoper\tkope\tVERB\t_\t_\t0\troot\t_\t_\n\n";
        fs::write(dir.path().join("xx_alpha-ud-train.conllu"), sov).unwrap();
        fs::write(dir.path().join("xx_beta-ud-test.conllu"), sov).unwrap();
        let mut gz = flate2::write::GzEncoder::new(
            fs::File::create(dir.path().join("yy_gamma-ud-train.conllu.gz")).unwrap(),
            flate2::Compression::default(),
        );
        gz.write_all(sov.as_bytes()).unwrap();
        gz.finish().unwrap();
        // A sentence with no verbal triplet at all.
        fs::write(
            dir.path().join("zz_empty-ud-train.conllu"),
            "1\thej\thej\tINTJ\t_\t_\t0\troot\t_\t_\n\n",
        )
        .unwrap();
        fs::write(dir.path().join("README.txt"), "not a treebank").unwrap();

        let outcome = run_extract(
            dir.path(),
            AnnotationStyle::UD,
            DepPolicy::AllPairs,
            ParseMode::Strict,
        )
        .unwrap();
        let langs: Vec<&str> = outcome
            .counts
            .iter()
            .map(|c| c.language.as_str())
            .collect();
        assert_eq!(langs, ["xx", "yy"]);
        assert_eq!(outcome.counts[0].counts(), [2, 0, 0, 0, 0, 0]);
        assert_eq!(outcome.counts[1].counts(), [1, 0, 0, 0, 0, 0]);
        assert_eq!(outcome.log.zero_triplet_languages, ["zz"]);
        assert_eq!(outcome.log.files.len(), 4);

        // Determinism: a second run produces the same outcome.
        let again = run_extract(
            dir.path(),
            AnnotationStyle::UD,
            DepPolicy::AllPairs,
            ParseMode::Strict,
        )
        .unwrap();
        assert_eq!(again.counts, outcome.counts);
        assert_eq!(
            serde_json::to_string(&again.log).unwrap(),
            serde_json::to_string(&outcome.log).unwrap()
        );
    }

    #[test]
    fn extract_errors_when_nothing_matches() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("notes.txt"), "nothing here").unwrap();
        assert!(matches!(
            run_extract(
                dir.path(),
                AnnotationStyle::UD,
                DepPolicy::AllPairs,
                ParseMode::Strict
            ),
            Err(PipelineError::NoFilesMatched(_))
        ));
        assert!(matches!(
            run_extract(
                &dir.path().join("no_such_subdir"),
                AnnotationStyle::UD,
                DepPolicy::AllPairs,
                ParseMode::Strict
            ),
            Err(PipelineError::Scan { .. })
        ));
    }

    #[test]
    fn language_code_strips_collection_suffixes() {
        for (file, code) in [
            ("cy_ccg-ud-test.conllu", "cy"),
            ("cy_adt-ud-train.conllu.gz", "cy"),
            ("grc_proiel-sud-dev.conllu", "grc"),
            ("welsh.conllu", "welsh"),
            ("xx-odd.conllu", "xx"),
        ] {
            assert_eq!(language_code(Path::new(file)), code, "{file}");
        }
    }

    #[test]
    fn subset_labels_round_trip() {
        assert_eq!("all".parse::<Subset>().unwrap(), Subset::All);
        assert_eq!("NDO".parse::<Subset>().unwrap(), Subset::Ndo);
        assert!("some".parse::<Subset>().is_err());
        assert_eq!(Subset::Ndo.to_string(), "ndo");
    }
}
