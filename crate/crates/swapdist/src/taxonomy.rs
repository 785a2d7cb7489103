//! Genealogical and areal metadata: family assignment, pseudofamily
//! exclusion, isolate handling, one-sample-per-language deduplication and the
//! typical-macroarea statistic.
//!
//! The input is a Glottolog-style languoid CSV (column names configurable).
//! Isolates and family roots arrive with an empty family cell and become the
//! sole member of a family named after themselves. Pseudofamily rows (sign
//! languages, pidgins, artificial languages by default) stay in the table but
//! are flagged so the pipeline can exclude and report them.

use std::collections::HashMap;
use std::io::Read;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LanguoidKind {
    Language,
    Dialect,
    Macrolanguage,
    Pseudo,
}

impl LanguoidKind {
    /// Dedup keep-priority: lower wins.
    fn priority(self) -> u8 {
        match self {
            LanguoidKind::Language => 0,
            LanguoidKind::Dialect => 1,
            LanguoidKind::Macrolanguage => 2,
            LanguoidKind::Pseudo => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Languoid {
    pub glottocode: String,
    pub name: String,
    /// Family-level ancestor name; the languoid's own name for isolates.
    pub family: String,
    /// Macroareas the languoid spans; non-empty, file order, deduplicated.
    pub macroareas: Vec<String>,
    pub kind: LanguoidKind,
    /// Glottocode of the language-level languoid this row stands for; equals
    /// `glottocode` unless the row is a dialect or macrolanguage sample of
    /// some language. Drives deduplication.
    pub language_ref: String,
    /// True for pseudofamily rows (by kind or by family name).
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxonomyConfig {
    pub col_glottocode: String,
    pub col_name: String,
    pub col_family: String,
    pub col_macroareas: String,
    pub col_kind: String,
    /// Optional column linking dialect/macrolanguage rows to their language;
    /// rows fall back to their own glottocode when it is absent or empty.
    pub col_language_ref: String,
    /// Separator between macroarea names within the cell.
    pub macroarea_separator: char,
    /// Kind labels treated as pseudofamilies (case-insensitive); a family
    /// whose *name* matches one of these is excluded too.
    pub pseudo_kinds: Vec<String>,
}

impl Default for TaxonomyConfig {
    fn default() -> TaxonomyConfig {
        TaxonomyConfig {
            col_glottocode: "glottocode".into(),
            col_name: "name".into(),
            col_family: "family".into(),
            col_macroareas: "macroareas".into(),
            col_kind: "kind".into(),
            col_language_ref: "language_ref".into(),
            macroarea_separator: ';',
            pseudo_kinds: vec![
                "sign language".into(),
                "pidgin".into(),
                "artificial language".into(),
            ],
        }
    }
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("required column {0:?} not found in the languoid table")]
    MissingColumn(String),
    #[error("row {row}: duplicate glottocode {glottocode:?}")]
    DuplicateGlottocode { row: u64, glottocode: String },
    #[error("row {row}: empty glottocode")]
    EmptyGlottocode { row: u64 },
    #[error("row {row}: unrecognized kind {value:?}")]
    BadKind { row: u64, value: String },
    #[error("row {row}: languoid {glottocode:?} has no macroareas")]
    NoMacroareas { row: u64, glottocode: String },
}

/// Languoid table keyed by glottocode, with a name index for resolution.
#[derive(Debug, Clone, Default)]
pub struct Taxonomy {
    rows: Vec<Languoid>,
    by_code: HashMap<String, usize>,
    by_name: HashMap<String, Vec<usize>>,
}

impl Taxonomy {
    /// Loads a languoid CSV under the given column mapping. A zero-byte
    /// input is an empty table.
    pub fn from_csv(input: impl Read, config: &TaxonomyConfig) -> Result<Taxonomy, TaxonomyError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Ok(Taxonomy::default());
        }
        let col = |name: &str| -> Result<usize, TaxonomyError> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| TaxonomyError::MissingColumn(name.to_owned()))
        };
        let c_code = col(&config.col_glottocode)?;
        let c_name = col(&config.col_name)?;
        let c_family = col(&config.col_family)?;
        let c_areas = col(&config.col_macroareas)?;
        let c_kind = col(&config.col_kind)?;
        let c_ref = headers.iter().position(|h| h == config.col_language_ref);

        let pseudo: Vec<String> = config
            .pseudo_kinds
            .iter()
            .map(|k| k.to_lowercase())
            .collect();
        let mut tax = Taxonomy::default();
        for (i, record) in reader.records().enumerate() {
            let row = i as u64 + 2; // 1-based, after the header
            let record = record?;
            let get = |c: usize| record.get(c).unwrap_or("").trim();
            let glottocode = get(c_code).to_owned();
            if glottocode.is_empty() {
                return Err(TaxonomyError::EmptyGlottocode { row });
            }
            let name = get(c_name).to_owned();
            let kind_raw = get(c_kind);
            let kind = match kind_raw.to_lowercase().as_str() {
                "language" => LanguoidKind::Language,
                "dialect" => LanguoidKind::Dialect,
                "macrolanguage" => LanguoidKind::Macrolanguage,
                k if pseudo.iter().any(|p| p == k) => LanguoidKind::Pseudo,
                _ => {
                    return Err(TaxonomyError::BadKind {
                        row,
                        value: kind_raw.to_owned(),
                    })
                }
            };
            // Isolates and family roots have no ancestor: their own name is
            // the family name.
            let family = match get(c_family) {
                "" => name.clone(),
                f => f.to_owned(),
            };
            let mut macroareas: Vec<String> = Vec::new();
            for a in get(c_areas).split(config.macroarea_separator) {
                let a = a.trim();
                if !a.is_empty() && !macroareas.iter().any(|x| x == a) {
                    macroareas.push(a.to_owned());
                }
            }
            if macroareas.is_empty() {
                return Err(TaxonomyError::NoMacroareas { row, glottocode });
            }
            let language_ref = match c_ref.map(get).unwrap_or("") {
                "" => glottocode.clone(),
                r => r.to_owned(),
            };
            let excluded =
                kind == LanguoidKind::Pseudo || pseudo.iter().any(|p| *p == family.to_lowercase());
            if tax.by_code.contains_key(&glottocode) {
                return Err(TaxonomyError::DuplicateGlottocode { row, glottocode });
            }
            tax.by_code.insert(glottocode.clone(), tax.rows.len());
            tax.by_name
                .entry(name.clone())
                .or_default()
                .push(tax.rows.len());
            tax.rows.push(Languoid {
                glottocode,
                name,
                family,
                macroareas,
                kind,
                language_ref,
                excluded,
            });
        }
        Ok(tax)
    }

    pub fn get(&self, glottocode: &str) -> Option<&Languoid> {
        self.by_code.get(glottocode).map(|&i| &self.rows[i])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Languoid> {
        self.rows.iter()
    }

    /// Resolves a dataset-local id to a languoid: glottocode first, then
    /// exact name, then the alias map.
    pub fn resolve<'a>(
        &'a self,
        id: &str,
        aliases: &AliasMap,
    ) -> Result<&'a Languoid, ResolveError> {
        if let Some(l) = self.get(id) {
            return Ok(l);
        }
        if let Some(indices) = self.by_name.get(id) {
            match indices.as_slice() {
                [one] => return Ok(&self.rows[*one]),
                many => {
                    return Err(ResolveError::AmbiguousName {
                        name: id.to_owned(),
                        candidates: many.iter().map(|&i| self.rows[i].glottocode.clone()).collect(),
                    })
                }
            }
        }
        if let Some(code) = aliases.get(id) {
            return self.get(code).ok_or_else(|| ResolveError::AliasTargetMissing {
                id: id.to_owned(),
                glottocode: code.clone(),
            });
        }
        Err(ResolveError::Unknown(id.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown language id {0:?}")]
    Unknown(String),
    #[error("name {name:?} is ambiguous (candidates: {})", candidates.join(", "))]
    AmbiguousName {
        name: String,
        candidates: Vec<String>,
    },
    #[error("alias maps {id:?} to {glottocode:?}, which is not in the table")]
    AliasTargetMissing { id: String, glottocode: String },
}

pub type AliasMap = HashMap<String, String>;

#[derive(Debug, Error)]
pub enum AliasError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `local_id<TAB>glottocode`, found {found} fields")]
    Columns { line: u64, found: usize },
    #[error("line {line}: duplicate alias for {id:?}")]
    Duplicate { line: u64, id: String },
}

/// Reads a `local_id<TAB>glottocode` alias table. `#` comments, blank lines
/// and an optional literal header line are ignored.
pub fn read_alias_tsv(input: impl std::io::BufRead) -> Result<AliasMap, AliasError> {
    let mut map = AliasMap::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') || line == "local_id\tglottocode" {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(AliasError::Columns {
                line: line_no,
                found: fields.len(),
            });
        }
        if map.insert(fields[0].to_owned(), fields[1].to_owned()).is_some() {
            return Err(AliasError::Duplicate {
                line: line_no,
                id: fields[0].to_owned(),
            });
        }
    }
    Ok(map)
}

/// A sample removed by deduplication, for the audit log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupRemoval {
    pub sample: String,
    pub language_ref: String,
    pub kept_sample: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupResult<'a> {
    pub kept: Vec<(String, &'a Languoid)>,
    pub removed: Vec<DedupRemoval>,
}

/// Keeps at most one sample per language. Within a group of samples sharing
/// a `language_ref`, the winner is the best (kind priority, sample id) pair:
/// language beats dialect beats macrolanguage, lexicographic sample id as
/// the deterministic tie-break. Input order is preserved among the kept.
pub fn dedup_samples<'a>(records: Vec<(String, &'a Languoid)>) -> DedupResult<'a> {
    let mut best: HashMap<&str, usize> = HashMap::new();
    for (i, (sample, languoid)) in records.iter().enumerate() {
        let slot = best.entry(languoid.language_ref.as_str()).or_insert(i);
        let (cur_sample, cur) = &records[*slot];
        if (languoid.kind.priority(), sample.as_str())
            < (cur.kind.priority(), cur_sample.as_str())
        {
            *slot = i;
        }
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (i, (sample, languoid)) in records.iter().enumerate() {
        let winner = best[languoid.language_ref.as_str()];
        if winner == i {
            kept.push((sample.clone(), *languoid));
        } else {
            removed.push(DedupRemoval {
                sample: sample.clone(),
                language_ref: languoid.language_ref.clone(),
                kept_sample: records[winner].0.clone(),
            });
        }
    }
    DedupResult { kept, removed }
}

/// The typical macroarea of a family and its weighted proportion.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroareaCall {
    pub macroarea: String,
    pub rho: f64,
    /// True when another macroarea reaches exactly the same rho; the
    /// lexicographically first one is reported.
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MacroareaError {
    #[error("cannot compute a typical macroarea for an empty family")]
    NoMembers,
    #[error("languoid {0:?} has no macroareas")]
    EmptyMacroareas(String),
}

/// Weighted proportion of family members per macroarea: each member spreads
/// weight 1/a_i over its a_i macroareas, normalized by family size, so the
/// proportions sum to 1. Members are (id, macroareas) pairs; the id only
/// labels errors. Returned lexicographically sorted by macroarea.
pub fn macroarea_weights_of<'a, I>(members: I) -> Result<Vec<(String, f64)>, MacroareaError>
where
    I: IntoIterator<Item = (&'a str, &'a [String])>,
{
    let mut weights: Vec<(String, f64)> = Vec::new();
    let mut n = 0u64;
    for (id, areas) in members {
        n += 1;
        if areas.is_empty() {
            return Err(MacroareaError::EmptyMacroareas(id.to_owned()));
        }
        let w = 1.0 / areas.len() as f64;
        for a in areas {
            match weights.iter_mut().find(|(name, _)| name == a) {
                Some((_, total)) => *total += w,
                None => weights.push((a.clone(), w)),
            }
        }
    }
    if n == 0 {
        return Err(MacroareaError::NoMembers);
    }
    for (_, w) in &mut weights {
        *w /= n as f64;
    }
    weights.sort_by(|(a, _), (b, _)| a.cmp(b));
    Ok(weights)
}

/// [`macroarea_weights_of`] over languoid rows.
pub fn macroarea_weights<'a, I>(members: I) -> Result<Vec<(String, f64)>, MacroareaError>
where
    I: IntoIterator<Item = &'a Languoid>,
{
    macroarea_weights_of(
        members
            .into_iter()
            .map(|m| (m.glottocode.as_str(), m.macroareas.as_slice())),
    )
}

/// The argmax of [`macroarea_weights_of`], lexicographically first on ties.
pub fn typical_macroarea_of<'a, I>(members: I) -> Result<MacroareaCall, MacroareaError>
where
    I: IntoIterator<Item = (&'a str, &'a [String])>,
{
    let weights = macroarea_weights_of(members)?;
    let (mut macroarea, mut rho) = weights[0].clone();
    let mut tied = false;
    for (name, w) in &weights[1..] {
        if *w > rho {
            macroarea = name.clone();
            rho = *w;
            tied = false;
        } else if *w == rho {
            tied = true;
        }
    }
    Ok(MacroareaCall {
        macroarea,
        rho,
        tied,
    })
}

/// [`typical_macroarea_of`] over languoid rows.
pub fn typical_macroarea<'a, I>(members: I) -> Result<MacroareaCall, MacroareaError>
where
    I: IntoIterator<Item = &'a Languoid>,
{
    typical_macroarea_of(
        members
            .into_iter()
            .map(|m| (m.glottocode.as_str(), m.macroareas.as_slice())),
    )
}
