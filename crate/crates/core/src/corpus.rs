//! Tagged document collections with binary relevance judgments, and
//! estimation of the model parameters for a tagged query.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::model::{self, CollectionParams, TagParams, TaggingVerdict, TermParams};

/// Name that selects the inline token tags rather than a named layer.
pub const BASE_LAYER: &str = "base";

/// Matching key for a term: NFC-normalized and lower-cased.
pub fn normalize_term(term: &str) -> String {
    let nfc: String = term.nfc().collect();
    nfc.to_lowercase().nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Token {
    pub term: String,
    #[serde(default)]
    pub tag: Option<String>,
}

impl Token {
    pub fn new(term: impl Into<String>, tag: Option<&str>) -> Result<Self> {
        let token = Token {
            term: term.into(),
            tag: tag.map(str::to_string),
        };
        token.validate()?;
        Ok(token)
    }

    fn validate(&self) -> Result<()> {
        if self.term.is_empty() {
            return Err(Error::InvalidToken("empty term".into()));
        }
        if self.tag.as_deref() == Some("") {
            return Err(Error::InvalidToken(format!("empty tag on `{}`", self.term)));
        }
        Ok(())
    }
}

/// A single-term query, optionally restricted to one tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedQuery {
    pub term: String,
    #[serde(default)]
    pub tag: Option<String>,
}

impl TaggedQuery {
    pub fn new(term: impl Into<String>, tag: Option<&str>) -> Result<Self> {
        let query = TaggedQuery {
            term: term.into(),
            tag: tag.map(str::to_string),
        };
        Token {
            term: query.term.clone(),
            tag: query.tag.clone(),
        }
        .validate()?;
        Ok(query)
    }

    pub fn key(&self) -> String {
        normalize_term(&self.term)
    }

    pub fn require_tag(&self) -> Result<&str> {
        self.tag
            .as_deref()
            .ok_or_else(|| Error::MissingQueryTag(self.term.clone()))
    }
}

impl fmt::Display for TaggedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.tag {
            Some(tag) => write!(f, "{}/{}", self.term, tag),
            None => write!(f, "{}", self.term),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    relevant: bool,
    tokens: Vec<Token>,
    layers: BTreeMap<String, Vec<Option<String>>>,
    keys: Vec<String>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        relevant: bool,
        tokens: Vec<Token>,
        layers: BTreeMap<String, Vec<Option<String>>>,
    ) -> Result<Self> {
        let id = id.into();
        for token in &tokens {
            token.validate()?;
        }
        for (name, tags) in &layers {
            if name == BASE_LAYER {
                return Err(Error::ReservedLayer(name.clone()));
            }
            if tags.len() != tokens.len() {
                return Err(Error::LayerLength {
                    doc: id,
                    layer: name.clone(),
                    expected: tokens.len(),
                    got: tags.len(),
                });
            }
            if tags.iter().any(|t| t.as_deref() == Some("")) {
                return Err(Error::InvalidToken(format!("empty tag in layer `{name}`")));
            }
        }
        let keys = tokens.iter().map(|t| normalize_term(&t.term)).collect();
        Ok(Document {
            id,
            relevant,
            tokens,
            layers,
            keys,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_relevant(&self) -> bool {
        self.relevant
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn layers(&self) -> &BTreeMap<String, Vec<Option<String>>> {
        &self.layers
    }

    fn tag_at(&self, i: usize, layer: Option<&str>) -> Option<&str> {
        match layer {
            None => self.tokens[i].tag.as_deref(),
            Some(name) => self.layers.get(name).and_then(|tags| tags[i].as_deref()),
        }
    }

    pub fn has_term(&self, key: &str) -> bool {
        self.keys.iter().any(|k| k == key)
    }

    /// True when at least one occurrence of the term carries `tag` in `layer`.
    pub fn has_tagged_term(&self, key: &str, tag: &str, layer: Option<&str>) -> bool {
        self.keys
            .iter()
            .enumerate()
            .any(|(i, k)| k == key && self.tag_at(i, layer) == Some(tag))
    }

    fn layer_tags(&self, layer: Option<&str>) -> Vec<Option<String>> {
        (0..self.tokens.len())
            .map(|i| self.tag_at(i, layer).map(str::to_string))
            .collect()
    }

    fn set_layer(&mut self, layer: Option<&str>, tags: Vec<Option<String>>) {
        match layer {
            None => {
                for (token, tag) in self.tokens.iter_mut().zip(tags) {
                    token.tag = tag;
                }
            }
            Some(name) => {
                self.layers.insert(name.to_string(), tags);
            }
        }
    }
}

/// Binary features of one document with respect to a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DocFeatures {
    pub relevant: bool,
    pub has_term: bool,
    pub has_tagged_term: bool,
}

/// An ordered, immutable collection of documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
    layer_names: Vec<String>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let first = docs.first().ok_or(Error::EmptyCorpus)?;
        let layer_names: Vec<String> = first.layers.keys().cloned().collect();
        let mut seen = HashSet::new();
        for doc in &docs {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if !doc.layers.keys().eq(layer_names.iter()) {
                return Err(Error::LayerSet {
                    doc: doc.id.clone(),
                    expected: layer_names.clone(),
                    got: doc.layers.keys().cloned().collect(),
                });
            }
        }
        Ok(Corpus { docs, layer_names })
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Named layers, excluding the inline token tags.
    pub fn layer_names(&self) -> &[String] {
        &self.layer_names
    }

    /// Maps a user-facing layer name to a layer selector (`None` = inline tags).
    pub fn resolve_layer<'a>(&self, name: &'a str) -> Result<Option<&'a str>> {
        if name == BASE_LAYER {
            Ok(None)
        } else if self.layer_names.iter().any(|l| l == name) {
            Ok(Some(name))
        } else {
            Err(Error::UnknownLayer(name.to_string()))
        }
    }

    fn check_layer(&self, layer: Option<&str>) -> Result<()> {
        match layer {
            Some(name) => self.resolve_layer(name).map(|_| ()),
            None => Ok(()),
        }
    }

    pub fn features(&self, query: &TaggedQuery, layer: Option<&str>) -> Result<Vec<DocFeatures>> {
        self.check_layer(layer)?;
        let key = query.key();
        Ok(self
            .docs
            .iter()
            .map(|doc| DocFeatures {
                relevant: doc.relevant,
                has_term: doc.has_term(&key),
                has_tagged_term: query
                    .tag
                    .as_deref()
                    .is_some_and(|tag| doc.has_tagged_term(&key, tag, layer)),
            })
            .collect())
    }

    /// Tag slots of every document in `layer`, parallel to the tokens.
    pub fn layer_tags(&self, layer: Option<&str>) -> Result<Vec<Vec<Option<String>>>> {
        self.check_layer(layer)?;
        Ok(self.docs.iter().map(|d| d.layer_tags(layer)).collect())
    }

    /// Copy of the corpus with `layer` (existing, or the inline tags) replaced.
    pub fn replace_layer(
        &self,
        layer: Option<&str>,
        tags: Vec<Vec<Option<String>>>,
    ) -> Result<Corpus> {
        self.check_layer(layer)?;
        self.with_tags(layer, tags)
    }

    /// Copy of the corpus with an additional named layer.
    pub fn with_layer(&self, name: &str, tags: Vec<Vec<Option<String>>>) -> Result<Corpus> {
        if name == BASE_LAYER {
            return Err(Error::ReservedLayer(name.to_string()));
        }
        self.with_tags(Some(name), tags)
    }

    fn with_tags(&self, layer: Option<&str>, tags: Vec<Vec<Option<String>>>) -> Result<Corpus> {
        if tags.len() != self.docs.len() {
            return Err(Error::Grid(format!(
                "{} tag rows for {} documents",
                tags.len(),
                self.docs.len()
            )));
        }
        let mut docs = self.docs.clone();
        for (doc, row) in docs.iter_mut().zip(tags) {
            if row.len() != doc.tokens.len() {
                return Err(Error::LayerLength {
                    doc: doc.id.clone(),
                    layer: layer.unwrap_or(BASE_LAYER).to_string(),
                    expected: doc.tokens.len(),
                    got: row.len(),
                });
            }
            if row.iter().any(|t| t.as_deref() == Some("")) {
                return Err(Error::InvalidToken("empty tag".into()));
            }
            doc.set_layer(layer, row);
        }
        Corpus::new(docs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" | "ndjson" => Some(CorpusFormat::Jsonl),
            "tsv" | "txt" => Some(CorpusFormat::Tsv),
            _ => None,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(format!(
                "unknown corpus format `{other}` (expected jsonl or tsv)"
            )),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocRecord {
    id: String,
    relevant: bool,
    tokens: Vec<Token>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    layers: BTreeMap<String, Vec<Option<String>>>,
}

pub fn load_corpus<R: BufRead>(source: R, format: CorpusFormat) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let at_line = |e: Error| match e {
            Error::Parse { .. } | Error::DuplicateId(_) => e,
            other => Error::Parse {
                line: line_no,
                reason: other.to_string(),
            },
        };
        let doc = match format {
            CorpusFormat::Jsonl => parse_jsonl_line(line, line_no),
            CorpusFormat::Tsv => parse_tsv_line(line, line_no),
        }
        .map_err(at_line)?;
        if !ids.insert(doc.id.clone()) {
            return Err(Error::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::new(docs)
}

fn parse_jsonl_line(line: &str, line_no: usize) -> Result<Document> {
    let rec: DocRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        reason: e.to_string(),
    })?;
    Document::new(rec.id, rec.relevant, rec.tokens, rec.layers)
}

fn parse_tsv_line(line: &str, line_no: usize) -> Result<Document> {
    let bad = |reason: String| Error::Parse {
        line: line_no,
        reason,
    };
    let mut fields = line.split('\t');
    let (Some(id), Some(rel), Some(tokens), None) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(bad(
            "expected 3 tab-separated fields: id, rel, tokens".into()
        ));
    };
    if id.is_empty() {
        return Err(bad("empty document id".into()));
    }
    let relevant = match rel {
        "1" => true,
        "0" => false,
        other => return Err(bad(format!("relevance must be 0 or 1, got `{other}`"))),
    };
    let tokens = tokens
        .split(' ')
        .filter(|s| !s.is_empty())
        .map(|s| parse_tsv_token(s).map_err(|e| bad(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Document::new(id, relevant, tokens, BTreeMap::new())
}

/// `term` or `term/TAG`; `\/` and `\\` escape a slash or backslash in the term.
fn parse_tsv_token(raw: &str) -> Result<Token> {
    let mut term = String::new();
    let mut chars = raw.char_indices();
    let mut tag = None;
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, e @ ('/' | '\\'))) => term.push(e),
                _ => return Err(Error::InvalidToken(format!("bad escape in `{raw}`"))),
            },
            '/' => {
                tag = Some(&raw[i + 1..]);
                break;
            }
            c => term.push(c),
        }
    }
    Token::new(term, tag)
}

fn escape_tsv_term(term: &str) -> String {
    term.replace('\\', "\\\\").replace('/', "\\/")
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W, format: CorpusFormat) -> Result<()> {
    for doc in &corpus.docs {
        match format {
            CorpusFormat::Jsonl => {
                let rec = DocRecord {
                    id: doc.id.clone(),
                    relevant: doc.relevant,
                    tokens: doc.tokens.clone(),
                    layers: doc.layers.clone(),
                };
                serde_json::to_writer(&mut out, &rec)?;
                writeln!(out)?;
            }
            CorpusFormat::Tsv => {
                if !doc.layers.is_empty() {
                    return Err(Error::TsvLayers);
                }
                let unsafe_char = |s: &str| s.chars().any(|c| c == '\t' || c == '\n' || c == ' ');
                if unsafe_char(&doc.id) {
                    return Err(Error::InvalidToken(format!(
                        "id `{}` not representable in tsv",
                        doc.id
                    )));
                }
                let mut parts = Vec::with_capacity(doc.tokens.len());
                for token in &doc.tokens {
                    if unsafe_char(&token.term) || token.tag.as_deref().is_some_and(unsafe_char) {
                        return Err(Error::InvalidToken(format!(
                            "token `{}` not representable in tsv",
                            token.term
                        )));
                    }
                    let mut s = escape_tsv_term(&token.term);
                    if let Some(tag) = &token.tag {
                        s.push('/');
                        s.push_str(tag);
                    }
                    parts.push(s);
                }
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    doc.id,
                    if doc.relevant { 1 } else { 0 },
                    parts.join(" ")
                )?;
            }
        }
    }
    Ok(())
}

/// The six document counts behind every estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub docs: u64,
    pub relevant: u64,
    pub term_docs: u64,
    pub relevant_term_docs: u64,
    pub tagged_term_docs: u64,
    pub relevant_tagged_term_docs: u64,
}

impl Counts {
    pub fn from_features(features: &[DocFeatures]) -> Counts {
        let mut c = Counts::default();
        for f in features {
            c.docs += 1;
            c.relevant += f.relevant as u64;
            c.term_docs += f.has_term as u64;
            c.relevant_term_docs += (f.has_term && f.relevant) as u64;
            c.tagged_term_docs += (f.has_term && f.has_tagged_term) as u64;
            c.relevant_tagged_term_docs += (f.has_term && f.has_tagged_term && f.relevant) as u64;
        }
        c
    }

    pub fn nonrelevant_term_docs(&self) -> u64 {
        self.term_docs - self.relevant_term_docs
    }

    pub fn nonrelevant_tagged_term_docs(&self) -> u64 {
        self.tagged_term_docs - self.relevant_tagged_term_docs
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Conditions worth reporting next to an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    NoRelevant,
    TermAbsent,
    UntaggedQuery,
    NoTermDocs,
    NoRelevantTermDocs,
    /// `tau` counted over all term documents differs from the rate among the
    /// non-relevant term documents alone.
    TauDefinition {
        tau_all: f64,
        tagged_term_docs: u64,
        term_docs: u64,
        tau_nonrelevant: f64,
        nonrelevant_tagged_term_docs: u64,
        nonrelevant_term_docs: u64,
    },
    Overridden {
        parameter: String,
        estimate: Option<f64>,
        value: f64,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoRelevant => write!(f, "no relevant documents: p and pi are undefined"),
            Diagnostic::TermAbsent => write!(f, "query term does not occur in the corpus: t = 0"),
            Diagnostic::UntaggedQuery => write!(f, "query has no tag: tau and pi not estimated"),
            Diagnostic::NoTermDocs => write!(f, "no document contains the term: tau is undefined"),
            Diagnostic::NoRelevantTermDocs => {
                write!(f, "no relevant document contains the term: pi is undefined")
            }
            Diagnostic::TauDefinition {
                tau_all,
                tagged_term_docs,
                term_docs,
                tau_nonrelevant,
                nonrelevant_tagged_term_docs,
                nonrelevant_term_docs,
            } => write!(
                f,
                "NOTE: tau = {tagged_term_docs}/{term_docs} = {} counts all term-bearing documents; \
                 restricted to non-relevant term-bearing documents it would be \
                 {nonrelevant_tagged_term_docs}/{nonrelevant_term_docs} = {}. \
                 Use an explicit tau override to apply the alternative reading.",
                crate::numfmt::sig(*tau_all, 6),
                crate::numfmt::sig(*tau_nonrelevant, 6),
            ),
            Diagnostic::Overridden {
                parameter,
                estimate,
                value,
            } => match estimate {
                Some(e) => write!(f, "{parameter} overridden: {value} (estimated {e})"),
                None => write!(f, "{parameter} overridden: {value} (not estimable)"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedParams {
    pub n_docs: u64,
    pub rel_rate: f64,
    pub t: f64,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    pub pi: Option<f64>,
    pub counts: Counts,
    pub diagnostics: Vec<Diagnostic>,
}

impl EstimatedParams {
    pub fn from_counts(counts: Counts, tagged_query: bool) -> Result<Self> {
        if counts.docs == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut diagnostics = Vec::new();
        if counts.relevant == 0 {
            diagnostics.push(Diagnostic::NoRelevant);
        }
        if counts.term_docs == 0 {
            diagnostics.push(Diagnostic::TermAbsent);
        }
        let (tau, pi) = if tagged_query {
            let tau = ratio(counts.tagged_term_docs, counts.term_docs);
            let pi = ratio(counts.relevant_tagged_term_docs, counts.relevant_term_docs);
            if tau.is_none() {
                diagnostics.push(Diagnostic::NoTermDocs);
            }
            if pi.is_none() && counts.relevant > 0 {
                diagnostics.push(Diagnostic::NoRelevantTermDocs);
            }
            if let (Some(tau_all), Some(tau_nonrelevant)) = (
                tau,
                ratio(
                    counts.nonrelevant_tagged_term_docs(),
                    counts.nonrelevant_term_docs(),
                ),
            ) {
                if tau_all != tau_nonrelevant {
                    diagnostics.push(Diagnostic::TauDefinition {
                        tau_all,
                        tagged_term_docs: counts.tagged_term_docs,
                        term_docs: counts.term_docs,
                        tau_nonrelevant,
                        nonrelevant_tagged_term_docs: counts.nonrelevant_tagged_term_docs(),
                        nonrelevant_term_docs: counts.nonrelevant_term_docs(),
                    });
                }
            }
            (tau, pi)
        } else {
            diagnostics.push(Diagnostic::UntaggedQuery);
            (None, None)
        };
        let est = EstimatedParams {
            n_docs: counts.docs,
            rel_rate: counts.relevant as f64 / counts.docs as f64,
            t: counts.term_docs as f64 / counts.docs as f64,
            p: ratio(counts.relevant_term_docs, counts.relevant),
            tau,
            pi,
            counts,
            diagnostics,
        };
        // Empirical proportions are mixtures by construction.
        if let (Ok(coll), Ok(term)) = (est.collection(), est.term()) {
            assert!(model::term_feasibility(&coll, &term).is_empty());
            if let Ok(tag) = est.tag() {
                assert!(model::tag_feasibility(&coll, &term, &tag).is_empty());
            }
        }
        Ok(est)
    }

    pub fn collection(&self) -> Result<CollectionParams> {
        CollectionParams::new(self.n_docs, self.rel_rate)
    }

    pub fn term(&self) -> Result<TermParams> {
        TermParams::new(self.t, self.p.ok_or(Error::Undefined("p"))?)
    }

    pub fn tag(&self) -> Result<TagParams> {
        TagParams::new(
            self.tau.ok_or(Error::Undefined("tau"))?,
            self.pi.ok_or(Error::Undefined("pi"))?,
        )
    }

    pub fn with_overrides(&self, o: &ParamOverrides) -> Result<EstimatedParams> {
        let mut out = self.clone();
        let mut note = |name: &str, estimate: Option<f64>, value: f64| {
            out.diagnostics.push(Diagnostic::Overridden {
                parameter: name.to_string(),
                estimate,
                value,
            })
        };
        if let Some(n) = o.n_docs {
            if n == 0 {
                return Err(Error::NoDocuments);
            }
            note("n_docs", Some(self.n_docs as f64), n as f64);
        }
        let checked = |name: &'static str, v: Option<f64>| -> Result<Option<f64>> {
            match v {
                Some(x) if !(0.0..=1.0).contains(&x) => Err(Error::OutOfRange {
                    name,
                    value: x,
                    range: "[0, 1]",
                }),
                _ => Ok(v),
            }
        };
        let r = checked("r", o.rel_rate)?;
        let t = checked("t", o.t)?;
        let p = checked("p", o.p)?;
        let tau = checked("tau", o.tau)?;
        let pi = checked("pi", o.pi)?;
        if let Some(v) = r {
            note("r", Some(self.rel_rate), v);
        }
        if let Some(v) = t {
            note("t", Some(self.t), v);
        }
        if let Some(v) = p {
            note("p", self.p, v);
        }
        if let Some(v) = tau {
            note("tau", self.tau, v);
        }
        if let Some(v) = pi {
            note("pi", self.pi, v);
        }
        out.n_docs = o.n_docs.unwrap_or(self.n_docs);
        out.rel_rate = r.unwrap_or(self.rel_rate);
        out.t = t.unwrap_or(self.t);
        out.p = p.or(self.p);
        out.tau = tau.or(self.tau);
        out.pi = pi.or(self.pi);
        Ok(out)
    }
}

/// Explicit values that replace estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamOverrides {
    pub n_docs: Option<u64>,
    pub rel_rate: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    pub pi: Option<f64>,
}

impl ParamOverrides {
    pub fn is_empty(&self) -> bool {
        *self == ParamOverrides::default()
    }
}

pub fn estimate_params(
    corpus: &Corpus,
    query: &TaggedQuery,
    layer: Option<&str>,
) -> Result<EstimatedParams> {
    let features = corpus.features(query, layer)?;
    EstimatedParams::from_counts(Counts::from_features(&features), query.tag.is_some())
}

/// Estimates, applies overrides, and compares tagged with untagged retrieval.
pub fn predict_from_corpus(
    corpus: &Corpus,
    query: &TaggedQuery,
    layer: Option<&str>,
    overrides: &ParamOverrides,
    tol: f64,
) -> Result<TaggingVerdict> {
    let est = estimate_params(corpus, query, layer)?.with_overrides(overrides)?;
    model::verdict(&est.collection()?, &est.term()?, &est.tag()?, tol)
}
