//! S/O/V triplet extraction from dependency-annotated sentences.
//!
//! A triplet is a verbal head together with one nominal subject dependent and
//! one nominal object dependent; the word order is read off the linear
//! positions of the three tokens. The two annotation styles differ in which
//! heads qualify, which relations mark subjects and objects, and which parts
//! of speech count as nominal.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::conllu::Sentence;
use crate::permutohedron::Order;
use crate::treebank::counts::TripletCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnnotationStyle {
    #[default]
    UD,
    SUD,
}

impl AnnotationStyle {
    pub fn label(self) -> &'static str {
        match self {
            AnnotationStyle::UD => "ud",
            AnnotationStyle::SUD => "sud",
        }
    }
}

impl fmt::Display for AnnotationStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized annotation style {0:?} (expected \"ud\" or \"sud\")")]
pub struct ParseStyleError(pub String);

impl FromStr for AnnotationStyle {
    type Err = ParseStyleError;

    fn from_str(s: &str) -> Result<AnnotationStyle, ParseStyleError> {
        match s.to_ascii_lowercase().as_str() {
            "ud" => Ok(AnnotationStyle::UD),
            "sud" => Ok(AnnotationStyle::SUD),
            _ => Err(ParseStyleError(s.to_owned())),
        }
    }
}

/// How to resolve a verb with several qualifying subjects or objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepPolicy {
    /// One triplet per (subject, object) pair of the verb.
    #[default]
    AllPairs,
    /// One triplet from the subject and object linearly closest to the verb
    /// (earlier token on a distance tie).
    Nearest,
}

/// One matched (subject, object, verb) with token-id positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub subject: usize,
    pub object: usize,
    pub verb: usize,
}

impl Triplet {
    pub fn order(&self) -> Order {
        Order::from_positions(self.subject, self.object, self.verb)
    }
}

/// Does `deprel` equal `base` or carry a subtype suffix after `sep`?
fn rel_matches(deprel: &str, base: &str, sep: char) -> bool {
    match deprel.strip_prefix(base) {
        Some("") => true,
        Some(rest) => rest.starts_with(sep),
        None => false,
    }
}

fn is_verbal_head(style: AnnotationStyle, upos: &str) -> bool {
    match style {
        AnnotationStyle::UD => upos == "VERB",
        AnnotationStyle::SUD => upos == "VERB" || upos == "AUX",
    }
}

fn is_subject_rel(style: AnnotationStyle, deprel: &str) -> bool {
    match style {
        AnnotationStyle::UD => {
            rel_matches(deprel, "nsubj", ':') || rel_matches(deprel, "obl:subj", ':')
        }
        AnnotationStyle::SUD => {
            rel_matches(deprel, "subj", '@') || rel_matches(deprel, "udep@subj", '@')
        }
    }
}

fn is_object_rel(style: AnnotationStyle, deprel: &str) -> bool {
    match style {
        AnnotationStyle::UD => {
            rel_matches(deprel, "obj", ':') || rel_matches(deprel, "obl:obj", ':')
        }
        AnnotationStyle::SUD => {
            rel_matches(deprel, "comp:obj", '@') || rel_matches(deprel, "udep@obj", '@')
        }
    }
}

fn is_nominal(style: AnnotationStyle, upos: &str) -> bool {
    match upos {
        "NOUN" | "PRON" | "PROPN" => true,
        "ADP" => style == AnnotationStyle::SUD,
        _ => false,
    }
}

/// All triplets of the sentence under the given style and dependent policy,
/// in (verb id, subject id, object id) order.
pub fn extract_triplets(
    sentence: &Sentence,
    style: AnnotationStyle,
    policy: DepPolicy,
) -> Vec<Triplet> {
    let n = sentence.tokens.len();
    let mut subjects: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut objects: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for t in &sentence.tokens {
        if t.head == 0 || !is_nominal(style, &t.upos) {
            continue;
        }
        if is_subject_rel(style, &t.deprel) {
            subjects[t.head].push(t.id);
        } else if is_object_rel(style, &t.deprel) {
            // SCONJ objects are excluded under SUD; the nominal whitelist
            // above already guarantees that, so no extra check is needed.
            objects[t.head].push(t.id);
        }
    }

    let mut out = Vec::new();
    for v in &sentence.tokens {
        if !is_verbal_head(style, &v.upos) {
            continue;
        }
        let (subs, objs) = (&subjects[v.id], &objects[v.id]);
        if subs.is_empty() || objs.is_empty() {
            continue;
        }
        match policy {
            DepPolicy::AllPairs => {
                for &s in subs {
                    for &o in objs {
                        out.push(Triplet {
                            subject: s,
                            object: o,
                            verb: v.id,
                        });
                    }
                }
            }
            DepPolicy::Nearest => {
                let nearest = |ids: &[usize]| {
                    *ids.iter()
                        .min_by_key(|&&id| (id.abs_diff(v.id), id))
                        .expect("non-empty")
                };
                out.push(Triplet {
                    subject: nearest(subs),
                    object: nearest(objs),
                    verb: v.id,
                });
            }
        }
    }
    out
}

/// Sums triplet orders over a sentence stream into per-order counts.
pub fn count_orders<I>(
    sentences: I,
    style: AnnotationStyle,
    policy: DepPolicy,
    language: &str,
) -> TripletCounts
where
    I: IntoIterator<Item = Sentence>,
{
    let mut counts = TripletCounts::new(language);
    for s in sentences {
        for t in extract_triplets(&s, style, policy) {
            counts.add(t.order());
        }
    }
    counts
}
