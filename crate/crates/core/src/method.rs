//! Interchangeable ways of computing the ASL of a query on a corpus, looked
//! up by name.
//!
//! The closed forms work from the estimated proportions; the block ranker and
//! the Monte Carlo shuffler work on the documents themselves. All four agree
//! (the last one only in expectation), which is what the cross-checks rely on.

use std::collections::BTreeMap;

use crate::corpus::{estimate_params, Corpus, TaggedQuery};
use crate::error::{Error, Result};
use crate::model::{self, CollectionParams, TermParams};
use crate::oracle;

/// Everything an ASL method may look at.
#[derive(Debug, Clone, Copy)]
pub struct AslInput<'a> {
    pub corpus: &'a Corpus,
    pub query: &'a TaggedQuery,
    pub layer: Option<&'a str>,
    pub use_tag: bool,
    pub trials: u64,
    pub seed: u64,
}

pub trait AslMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn asl(&self, input: &AslInput<'_>) -> Result<f64>;
}

/// Collection and effective term parameters: with `use_tag`, a document
/// matches only if it has the term carrying the query tag.
fn effective_params(
    input: &AslInput<'_>,
) -> Result<(CollectionParams, TermParams, Option<model::TagParams>)> {
    if input.use_tag {
        input.query.require_tag()?;
    }
    let est = estimate_params(input.corpus, input.query, input.layer)?;
    if est.counts.relevant == 0 {
        return Err(Error::NoRelevant);
    }
    let coll = est.collection()?;
    let term = est.term()?;
    if !input.use_tag {
        return Ok((coll, term, None));
    }
    // With no term documents tau is undefined, but the tagged feature is
    // simply never present.
    let tag = match (est.tau, est.pi) {
        (Some(tau), Some(pi)) => model::TagParams::new(tau, pi)?,
        (Some(tau), None) => model::TagParams::new(tau, 0.0)?,
        (None, _) => model::TagParams::new(0.0, 0.0)?,
    };
    Ok((coll, term, Some(tag)))
}

pub struct Analytic;

impl AslMethod for Analytic {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn description(&self) -> &'static str {
        "N/2 (1 + t - p) + 1/2 at the estimated proportions"
    }

    fn asl(&self, input: &AslInput<'_>) -> Result<f64> {
        let (coll, term, tag) = effective_params(input)?;
        Ok(match tag {
            Some(tag) => model::asl_tagged(&coll, &term, &tag).asl,
            None => model::asl_untagged(&coll, &term).asl,
        })
    }
}

pub struct Positional;

impl AslMethod for Positional {
    fn name(&self) -> &'static str {
        "positional"
    }

    fn description(&self) -> &'static str {
        "two-block midpoint form at the estimated proportions"
    }

    fn asl(&self, input: &AslInput<'_>) -> Result<f64> {
        let (coll, term, tag) = effective_params(input)?;
        let term = match tag {
            Some(tag) => term.tagged(&tag),
            None => term,
        };
        Ok(model::asl_positional(&coll, &term).asl)
    }
}

pub struct Block;

impl AslMethod for Block {
    fn name(&self) -> &'static str {
        "block"
    }

    fn description(&self) -> &'static str {
        "exact ranking of the documents with tie blocks at their midpoints"
    }

    fn asl(&self, input: &AslInput<'_>) -> Result<f64> {
        Ok(oracle::block_asl(input.corpus, input.query, input.layer, input.use_tag)?.asl)
    }
}

pub struct MonteCarlo;

impl AslMethod for MonteCarlo {
    fn name(&self) -> &'static str {
        "monte-carlo"
    }

    fn description(&self) -> &'static str {
        "mean over seeded random orderings within tie blocks"
    }

    fn asl(&self, input: &AslInput<'_>) -> Result<f64> {
        oracle::monte_carlo_asl(
            input.corpus,
            input.query,
            input.layer,
            input.use_tag,
            input.trials,
            input.seed,
        )
    }
}

pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Box<dyn AslMethod>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry {
            methods: BTreeMap::new(),
        }
    }

    /// The four built-in methods.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(Analytic));
        reg.register(Box::new(Positional));
        reg.register(Box::new(Block));
        reg.register(Box::new(MonteCarlo));
        reg
    }

    /// Adds a method, replacing any previous one with the same name.
    pub fn register(&mut self, method: Box<dyn AslMethod>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn AslMethod> {
        self.methods
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "ASL method",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn AslMethod> {
        self.methods.values().map(|m| m.as_ref())
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, CorpusFormat};

    fn table1() -> Corpus {
        load_corpus(
            include_str!("../fixtures/table1.tsv").as_bytes(),
            CorpusFormat::Tsv,
        )
        .unwrap()
    }

    #[test]
    fn lookup() {
        let reg = MethodRegistry::builtin();
        assert_eq!(
            reg.names(),
            ["analytic", "block", "monte-carlo", "positional"]
        );
        assert!(matches!(
            reg.get("nope"),
            Err(Error::UnknownStrategy { .. })
        ));
    }

    #[test]
    fn methods_agree_on_table1() {
        let corpus = table1();
        let query = TaggedQuery::new("girl", Some("SUBJ")).unwrap();
        let reg = MethodRegistry::builtin();
        for use_tag in [false, true] {
            let input = AslInput {
                corpus: &corpus,
                query: &query,
                layer: None,
                use_tag,
                trials: 20_000,
                seed: 1,
            };
            for m in reg.iter() {
                let asl = m.asl(&input).unwrap();
                let tol = if m.name() == "monte-carlo" {
                    0.1
                } else {
                    1e-12
                };
                assert!((asl - 5.0).abs() < tol, "{} gave {asl}", m.name());
            }
        }
    }

    #[test]
    fn tagged_feature_absent_everywhere() {
        let corpus = load_corpus("a\t1\tx\nb\t0\ty".as_bytes(), CorpusFormat::Tsv).unwrap();
        let query = TaggedQuery::new("zzz", Some("N")).unwrap();
        let input = AslInput {
            corpus: &corpus,
            query: &query,
            layer: None,
            use_tag: true,
            trials: 1,
            seed: 0,
        };
        let reg = MethodRegistry::builtin();
        let block = reg.get("block").unwrap().asl(&input).unwrap();
        assert_eq!(block, 1.5);
        assert_eq!(reg.get("analytic").unwrap().asl(&input).unwrap(), block);
    }

    struct Constant;

    impl AslMethod for Constant {
        fn name(&self) -> &'static str {
            "constant"
        }
        fn description(&self) -> &'static str {
            "always 1"
        }
        fn asl(&self, _: &AslInput<'_>) -> Result<f64> {
            Ok(1.0)
        }
    }

    #[test]
    fn custom_methods_can_be_registered() {
        let mut reg = MethodRegistry::builtin();
        reg.register(Box::new(Constant));
        assert!(reg.names().contains(&"constant"));
    }
}
