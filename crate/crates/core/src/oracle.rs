//! Exact discrete ranking on a concrete corpus.
//!
//! A single binary feature splits the collection into two tie blocks: the
//! matching documents occupy positions `1..=m` and the rest `m+1..=N`. Every
//! document in a block is credited with the block's mean position.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocFeatures, TaggedQuery};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingOutcome {
    pub asl: f64,
    /// (matched, unmatched)
    pub block_sizes: (u64, u64),
    /// Relevant documents in each block, (matched, unmatched).
    pub relevant_in_block: (u64, u64),
}

fn matches(f: &DocFeatures, use_tag: bool) -> bool {
    if use_tag {
        f.has_term && f.has_tagged_term
    } else {
        f.has_term
    }
}

/// Block-midpoint ASL for precomputed document features.
pub fn rank_features(features: &[DocFeatures], use_tag: bool) -> Result<RankingOutcome> {
    let n = features.len() as u64;
    let (mut matched, mut rel_matched, mut rel_unmatched) = (0u64, 0u64, 0u64);
    for f in features {
        let hit = matches(f, use_tag);
        matched += hit as u64;
        if f.relevant {
            if hit {
                rel_matched += 1;
            } else {
                rel_unmatched += 1;
            }
        }
    }
    let relevant = rel_matched + rel_unmatched;
    if relevant == 0 {
        return Err(Error::NoRelevant);
    }
    let m = matched as f64;
    let first_mid = (m + 1.0) / 2.0;
    let second_mid = m + (n as f64 - m + 1.0) / 2.0;
    let asl =
        (rel_matched as f64 * first_mid + rel_unmatched as f64 * second_mid) / relevant as f64;
    Ok(RankingOutcome {
        asl,
        block_sizes: (matched, n - matched),
        relevant_in_block: (rel_matched, rel_unmatched),
    })
}

/// Ranks documents by the query feature (the term, plus the query tag when
/// `use_tag`) and returns the mean block position of the relevant documents.
pub fn block_asl(
    corpus: &Corpus,
    query: &TaggedQuery,
    layer: Option<&str>,
    use_tag: bool,
) -> Result<RankingOutcome> {
    if use_tag {
        query.require_tag()?;
    }
    rank_features(&corpus.features(query, layer)?, use_tag)
}

/// Rng for one trial. Seeding by (seed, trial) keeps parallel and serial runs
/// identical.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Mean over `trials` random within-block orderings of the mean position of
/// the relevant documents.
pub fn monte_carlo_features(
    features: &[DocFeatures],
    use_tag: bool,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::OutOfRange {
            name: "trials",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let outcome = rank_features(features, use_tag)?;
    let relevant = (outcome.relevant_in_block.0 + outcome.relevant_in_block.1) as f64;
    let (first, second): (Vec<bool>, Vec<bool>) = {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for f in features {
            if matches(f, use_tag) {
                a.push(f.relevant);
            } else {
                b.push(f.relevant);
            }
        }
        (a, b)
    };
    let offset = first.len();
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || (first.clone(), second.clone()),
            |(a, b), trial| {
                a.copy_from_slice(&first);
                b.copy_from_slice(&second);
                let mut rng = trial_rng(seed, trial);
                a.shuffle(&mut rng);
                b.shuffle(&mut rng);
                let head: usize = a
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| **r)
                    .map(|(i, _)| i + 1)
                    .sum();
                let tail: usize = b
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| **r)
                    .map(|(i, _)| offset + i + 1)
                    .sum();
                (head + tail) as f64 / relevant
            },
        )
        .collect();
    Ok(per_trial.iter().sum::<f64>() / trials as f64)
}

pub fn monte_carlo_asl(
    corpus: &Corpus,
    query: &TaggedQuery,
    layer: Option<&str>,
    use_tag: bool,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if use_tag {
        query.require_tag()?;
    }
    monte_carlo_features(&corpus.features(query, layer)?, use_tag, trials, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetagCase {
    /// Query tag on the term exactly in the relevant documents.
    Best,
    /// Query tag on the term exactly in the non-relevant documents.
    Worst,
}

impl std::str::FromStr for RetagCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "best" => Ok(RetagCase::Best),
            "worst" => Ok(RetagCase::Worst),
            other => Err(format!(
                "unknown retag case `{other}` (expected best or worst)"
            )),
        }
    }
}

/// Copy of the corpus where, in `layer`, every occurrence of the query term
/// in a selected document carries the query tag and occurrences elsewhere
/// lose it. Other tokens and tags are untouched.
pub fn retag(
    corpus: &Corpus,
    query: &TaggedQuery,
    layer: Option<&str>,
    case: RetagCase,
) -> Result<Corpus> {
    let tag = query.require_tag()?;
    let key = query.key();
    let mut tags = corpus.layer_tags(layer)?;
    for (doc, row) in corpus.documents().iter().zip(tags.iter_mut()) {
        let selected = match case {
            RetagCase::Best => doc.is_relevant(),
            RetagCase::Worst => !doc.is_relevant(),
        };
        for (token, slot) in doc.tokens().iter().zip(row.iter_mut()) {
            if crate::corpus::normalize_term(&token.term) != key {
                continue;
            }
            if selected {
                *slot = Some(tag.to_string());
            } else if slot.as_deref() == Some(tag) {
                *slot = None;
            }
        }
    }
    corpus.replace_layer(layer, tags)
}

pub fn best_case_retag(
    corpus: &Corpus,
    query: &TaggedQuery,
    layer: Option<&str>,
) -> Result<(Corpus, RankingOutcome)> {
    let retagged = retag(corpus, query, layer, RetagCase::Best)?;
    let outcome = block_asl(&retagged, query, layer, true)?;
    Ok((retagged, outcome))
}

pub fn worst_case_retag(
    corpus: &Corpus,
    query: &TaggedQuery,
    layer: Option<&str>,
) -> Result<(Corpus, RankingOutcome)> {
    let retagged = retag(corpus, query, layer, RetagCase::Worst)?;
    let outcome = block_asl(&retagged, query, layer, true)?;
    Ok((retagged, outcome))
}
