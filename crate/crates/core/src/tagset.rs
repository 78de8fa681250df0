//! Comparing tag layers by their average tagging improvement factor over a
//! query workload.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::corpus::{estimate_params, Corpus, TaggedQuery};
use crate::error::{Error, Result};
use crate::model;

/// Queries to score a layer against; every query carries a tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    queries: Vec<TaggedQuery>,
}

impl Workload {
    pub fn new(queries: Vec<TaggedQuery>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyWorkload);
        }
        for q in &queries {
            q.require_tag()?;
        }
        Ok(Workload { queries })
    }

    pub fn queries(&self) -> &[TaggedQuery] {
        &self.queries
    }
}

/// Reads one `{"term": ..., "tag": ...}` object per line.
pub fn load_workload<R: BufRead>(source: R) -> Result<Workload> {
    let mut queries = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Parse {
            line: idx + 1,
            reason,
        };
        let q: TaggedQuery = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let q = TaggedQuery::new(q.term, q.tag.as_deref()).map_err(|e| bad(e.to_string()))?;
        q.require_tag().map_err(|e| bad(e.to_string()))?;
        queries.push(q);
    }
    Workload::new(queries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryScore {
    pub term: String,
    pub tag: String,
    pub tif: Option<f64>,
    /// Why `tif` is absent.
    pub reason: Option<String>,
    /// Number of documents containing the term.
    pub term_docs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerScore {
    pub layer: String,
    pub mean_tif: f64,
    pub aggregation: String,
    pub evaluated_count: usize,
    pub per_query: Vec<QueryScore>,
}

/// How per-query improvement factors combine into one layer score.
pub trait Aggregation: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// `scores` is non-empty.
    fn aggregate(&self, scores: &[&QueryScore]) -> f64;
}

pub struct UnweightedMean;

impl Aggregation for UnweightedMean {
    fn name(&self) -> &'static str {
        "mean"
    }

    fn description(&self) -> &'static str {
        "unweighted mean over evaluated queries"
    }

    fn aggregate(&self, scores: &[&QueryScore]) -> f64 {
        scores.iter().filter_map(|s| s.tif).sum::<f64>() / scores.len() as f64
    }
}

pub struct FrequencyWeighted;

impl Aggregation for FrequencyWeighted {
    fn name(&self) -> &'static str {
        "frequency"
    }

    fn description(&self) -> &'static str {
        "mean weighted by the number of documents containing each query term"
    }

    fn aggregate(&self, scores: &[&QueryScore]) -> f64 {
        let total: u64 = scores.iter().map(|s| s.term_docs).sum();
        scores
            .iter()
            .filter_map(|s| s.tif.map(|c| c * s.term_docs as f64))
            .sum::<f64>()
            / total as f64
    }
}

pub struct AggregationRegistry {
    rules: BTreeMap<&'static str, Box<dyn Aggregation>>,
}

impl AggregationRegistry {
    pub fn builtin() -> Self {
        let mut reg = AggregationRegistry {
            rules: BTreeMap::new(),
        };
        reg.register(Box::new(UnweightedMean));
        reg.register(Box::new(FrequencyWeighted));
        reg
    }

    pub fn register(&mut self, rule: Box<dyn Aggregation>) {
        self.rules.insert(rule.name(), rule);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Aggregation> {
        self.rules
            .get(name)
            .map(|r| r.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "aggregation",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.rules.keys().copied().collect()
    }
}

impl Default for AggregationRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn score_query(corpus: &Corpus, layer: Option<&str>, query: &TaggedQuery) -> Result<QueryScore> {
    let est = estimate_params(corpus, query, layer)?;
    let reason = if est.counts.term_docs == 0 {
        Some("term does not occur in the corpus")
    } else if est.counts.relevant == 0 {
        Some("no relevant documents")
    } else if est.pi.is_none() {
        Some("no relevant document contains the term (pi undefined)")
    } else {
        None
    };
    let tif = match reason {
        None => Some(model::tif(&est.term()?, &est.tag()?)),
        Some(_) => None,
    };
    Ok(QueryScore {
        term: query.term.clone(),
        tag: query.require_tag()?.to_string(),
        tif,
        reason: reason.map(str::to_string),
        term_docs: est.counts.term_docs,
    })
}

/// Scores one layer (by user-facing name, `base` = inline tags).
pub fn score_layer(
    corpus: &Corpus,
    layer: &str,
    workload: &Workload,
    aggregation: &dyn Aggregation,
) -> Result<LayerScore> {
    let selector = corpus.resolve_layer(layer)?;
    let per_query = workload
        .queries
        .iter()
        .map(|q| score_query(corpus, selector, q))
        .collect::<Result<Vec<_>>>()?;
    let evaluated: Vec<&QueryScore> = per_query.iter().filter(|s| s.tif.is_some()).collect();
    if evaluated.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    Ok(LayerScore {
        layer: layer.to_string(),
        mean_tif: aggregation.aggregate(&evaluated),
        aggregation: aggregation.name().to_string(),
        evaluated_count: evaluated.len(),
        per_query,
    })
}

/// One entry of a ranking: a score, or the reason the layer could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLayer {
    pub layer: String,
    pub score: Option<LayerScore>,
    pub error: Option<String>,
}

/// Scores every layer and sorts by descending mean TIF, ties by name. Layers
/// that fail to score come last, by name.
pub fn rank_layers(
    corpus: &Corpus,
    layers: &[&str],
    workload: &Workload,
    aggregation: &dyn Aggregation,
) -> Result<Vec<RankedLayer>> {
    if layers.is_empty() {
        return Err(Error::UnknownLayer("(none given)".into()));
    }
    let mut ranked: Vec<RankedLayer> = layers
        .iter()
        .map(
            |&name| match score_layer(corpus, name, workload, aggregation) {
                Ok(score) => RankedLayer {
                    layer: name.to_string(),
                    score: Some(score),
                    error: None,
                },
                Err(e) => RankedLayer {
                    layer: name.to_string(),
                    score: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    ranked.sort_by(|a, b| match (&a.score, &b.score) {
        (Some(x), Some(y)) => y
            .mean_tif
            .total_cmp(&x.mean_tif)
            .then_with(|| a.layer.cmp(&b.layer)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.layer.cmp(&b.layer),
    });
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, CorpusFormat, Document, Token};
    use crate::oracle::{retag, RetagCase};

    fn layered() -> Corpus {
        load_corpus(
            include_str!("../fixtures/table1_layers.jsonl").as_bytes(),
            CorpusFormat::Jsonl,
        )
        .unwrap()
    }

    fn girl() -> Workload {
        Workload::new(vec![TaggedQuery::new("girl", Some("SUBJ")).unwrap()]).unwrap()
    }

    #[test]
    fn workload_file() {
        let w =
            load_workload(include_str!("../fixtures/table1_workload.jsonl").as_bytes()).unwrap();
        assert_eq!(w, girl());
        assert!(matches!(
            load_workload("".as_bytes()),
            Err(Error::EmptyWorkload)
        ));
        assert!(matches!(
            load_workload("{\"term\":\"x\",\"tag\":null}".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn table1_base_layer_is_neutral() {
        let s = score_layer(&layered(), "base", &girl(), &UnweightedMean).unwrap();
        assert!(s.mean_tif.abs() < 1e-12);
        assert_eq!(s.evaluated_count, 1);
    }

    #[test]
    fn uniform_layer_scores_zero() {
        let c = layered();
        let flat: Vec<Vec<Option<String>>> = c
            .documents()
            .iter()
            .map(|d| vec![Some("T".to_string()); d.tokens().len()])
            .collect();
        let c = c.with_layer("flat", flat).unwrap();
        let w = Workload::new(vec![
            TaggedQuery::new("girl", Some("T")).unwrap(),
            TaggedQuery::new("dog", Some("T")).unwrap(),
        ])
        .unwrap();
        let s = score_layer(&c, "flat", &w, &UnweightedMean).unwrap();
        assert!(s.per_query.iter().all(|q| q.tif == Some(0.0)));
    }

    #[test]
    fn relevant_only_tagging_beats_blanket_tagging() {
        // t = 4/6, p = 2/3. Layer B tags x in the two relevant docs only:
        // tau = 1/2, pi = 1, tif = 2/3 * 1/2 = 1/3. Layer A tags every x: tif = 0.
        let text = r#"{"id":"r1","relevant":true,"tokens":[{"term":"x"}],"layers":{"A":["N"],"B":["N"]}}
{"id":"r2","relevant":true,"tokens":[{"term":"x"}],"layers":{"A":["N"],"B":["N"]}}
{"id":"r3","relevant":true,"tokens":[{"term":"y"}],"layers":{"A":[null],"B":[null]}}
{"id":"n1","relevant":false,"tokens":[{"term":"x"}],"layers":{"A":["N"],"B":[null]}}
{"id":"n2","relevant":false,"tokens":[{"term":"x"}],"layers":{"A":["N"],"B":[null]}}
{"id":"n3","relevant":false,"tokens":[{"term":"y"}],"layers":{"A":[null],"B":[null]}}"#;
        let c = load_corpus(text.as_bytes(), CorpusFormat::Jsonl).unwrap();
        let w = Workload::new(vec![TaggedQuery::new("x", Some("N")).unwrap()]).unwrap();
        let a = score_layer(&c, "A", &w, &UnweightedMean).unwrap();
        let b = score_layer(&c, "B", &w, &UnweightedMean).unwrap();
        assert!(a.mean_tif.abs() < 1e-12);
        assert!((b.mean_tif - 1.0 / 3.0).abs() < 1e-12);
        let ranked = rank_layers(&c, &["A", "B"], &w, &UnweightedMean).unwrap();
        assert_eq!(ranked[0].layer, "B");
    }

    #[test]
    fn ranking_of_retagged_layers() {
        let c = layered();
        let ranked = rank_layers(&c, &["worst", "base", "best"], &girl(), &UnweightedMean).unwrap();
        let names: Vec<_> = ranked.iter().map(|r| r.layer.as_str()).collect();
        assert_eq!(names, ["best", "base", "worst"]);
        // Best: tau = 3/5, pi = 1, tif = t - r p = 0.2. Worst: tau = 2/5, pi = 0, tif = r p - p = -0.3.
        let score = |i: usize| ranked[i].score.as_ref().unwrap().mean_tif;
        assert!((score(0) - 0.2).abs() < 1e-12);
        assert!((score(2) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn ranking_ties_and_errors() {
        let c = layered();
        let ranked = rank_layers(
            &c,
            &["best", "nope", "base", "best"],
            &girl(),
            &UnweightedMean,
        )
        .unwrap();
        let names: Vec<_> = ranked.iter().map(|r| r.layer.as_str()).collect();
        assert_eq!(names, ["best", "best", "base", "nope"]);
        assert!(ranked[3]
            .error
            .as_ref()
            .unwrap()
            .contains("unknown tag layer"));
        let single = rank_layers(&c, &["base"], &girl(), &UnweightedMean).unwrap();
        assert_eq!(single.len(), 1);
        assert!(rank_layers(&c, &[], &girl(), &UnweightedMean).is_err());
    }

    #[test]
    fn scoring_errors_and_exclusions() {
        let c = layered();
        assert!(matches!(
            score_layer(&c, "nope", &girl(), &UnweightedMean),
            Err(Error::UnknownLayer(_))
        ));
        let absent =
            Workload::new(vec![TaggedQuery::new("unicorn", Some("SUBJ")).unwrap()]).unwrap();
        assert!(matches!(
            score_layer(&c, "base", &absent, &UnweightedMean),
            Err(Error::EmptyEvaluation)
        ));
        let mixed = Workload::new(vec![
            TaggedQuery::new("unicorn", Some("SUBJ")).unwrap(),
            TaggedQuery::new("girl", Some("SUBJ")).unwrap(),
        ])
        .unwrap();
        let s = score_layer(&c, "best", &mixed, &UnweightedMean).unwrap();
        assert_eq!(s.evaluated_count, 1);
        assert!(s.per_query[0].reason.is_some());
        assert!((s.mean_tif - 0.2).abs() < 1e-12);
        assert!(Workload::new(vec![TaggedQuery::new("x", None).unwrap()]).is_err());
    }

    #[test]
    fn duplicating_documents_is_scale_free() {
        let c = layered();
        let mut docs = Vec::new();
        for k in 0..3 {
            for d in c.documents() {
                docs.push(
                    Document::new(
                        format!("{}-{k}", d.id()),
                        d.is_relevant(),
                        d.tokens().to_vec(),
                        d.layers().clone(),
                    )
                    .unwrap(),
                );
            }
        }
        let big = Corpus::new(docs).unwrap();
        for layer in ["base", "best", "worst"] {
            let a = score_layer(&c, layer, &girl(), &UnweightedMean).unwrap();
            let b = score_layer(&big, layer, &girl(), &UnweightedMean).unwrap();
            assert_eq!(a.mean_tif, b.mean_tif);
        }
    }

    #[test]
    fn adding_a_query_at_the_mean_keeps_the_mean() {
        let c = layered();
        let q = TaggedQuery::new("girl", Some("SUBJ")).unwrap();
        let one = score_layer(&c, "best", &girl(), &UnweightedMean).unwrap();
        let two = Workload::new(vec![q.clone(), q]).unwrap();
        let both = score_layer(&c, "best", &two, &UnweightedMean).unwrap();
        assert_eq!(one.mean_tif, both.mean_tif);
    }

    #[test]
    fn frequency_weighting() {
        let c = layered();
        let w = Workload::new(vec![
            TaggedQuery::new("girl", Some("SUBJ")).unwrap(),
            TaggedQuery::new("dog", Some("OBJ")).unwrap(),
        ])
        .unwrap();
        let reg = AggregationRegistry::builtin();
        let mean = score_layer(&c, "base", &w, reg.get("mean").unwrap()).unwrap();
        let freq = score_layer(&c, "base", &w, reg.get("frequency").unwrap()).unwrap();
        let (g, d) = (&mean.per_query[0], &mean.per_query[1]);
        assert_eq!((g.term_docs, d.term_docs), (5, 3));
        let expected = (5.0 * g.tif.unwrap() + 3.0 * d.tif.unwrap()) / 8.0;
        assert!((freq.mean_tif - expected).abs() < 1e-12);
        assert!((mean.mean_tif - (g.tif.unwrap() + d.tif.unwrap()) / 2.0).abs() < 1e-12);
        assert!(reg.get("median").is_err());
    }

    /// Every tagging of the term documents of every small corpus: the
    /// best-case retag is never beaten.
    #[test]
    fn best_case_layer_is_maximal() {
        let q = TaggedQuery::new("x", Some("N")).unwrap();
        let w = Workload::new(vec![q.clone()]).unwrap();
        for n in 1..=5usize {
            for rel_mask in 1u32..(1 << n) {
                for term_mask in 1u32..(1 << n) {
                    let docs: Vec<Document> = (0..n)
                        .map(|i| {
                            let term = if term_mask >> i & 1 == 1 { "x" } else { "y" };
                            Document::new(
                                format!("d{i}"),
                                rel_mask >> i & 1 == 1,
                                vec![Token::new(term, None).unwrap()],
                                BTreeMap::new(),
                            )
                            .unwrap()
                        })
                        .collect();
                    let corpus = Corpus::new(docs).unwrap();
                    let best = retag(&corpus, &q, None, RetagCase::Best).unwrap();
                    let Ok(best_score) = score_layer(&best, "base", &w, &UnweightedMean) else {
                        continue;
                    };
                    for tag_mask in 0u32..(1 << n) {
                        let tags: Vec<Vec<Option<String>>> = (0..n)
                            .map(|i| vec![(tag_mask >> i & 1 == 1).then(|| "N".to_string())])
                            .collect();
                        let other = corpus.with_layer("L", tags).unwrap();
                        let s = score_layer(&other, "L", &w, &UnweightedMean).unwrap();
                        assert!(best_score.mean_tif >= s.mean_tif - 1e-12);
                    }
                }
            }
        }
    }
}
