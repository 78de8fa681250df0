//! Closed-form average search length (ASL) model for single-term queries
//! under optimal ranking, with and without a part-of-speech tag on the term.
//!
//! Notation used throughout:
//!
//! - `t`: probability a document contains the query term.
//! - `p`: probability a relevant document contains the query term.
//! - `tau`: probability a term-bearing document carries the query tag on it.
//! - `pi`: the same probability restricted to relevant term-bearing documents.
//! - `r`: proportion of relevant documents in the collection.
//!
//! All functions are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack used by the advisory feasibility checks.
pub const FEASIBILITY_EPS: f64 = 1e-12;

fn unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

/// Collection size and relevance rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionParams {
    n_docs: u64,
    rel_rate: f64,
}

impl CollectionParams {
    pub fn new(n_docs: u64, rel_rate: f64) -> Result<Self> {
        if n_docs == 0 {
            return Err(Error::NoDocuments);
        }
        Ok(Self {
            n_docs,
            rel_rate: unit("r", rel_rate)?,
        })
    }

    /// Collection with unknown relevance rate; `r` is set to 0, which makes the
    /// exact bounds collapse onto the asymptotic ones.
    pub fn with_size(n_docs: u64) -> Result<Self> {
        Self::new(n_docs, 0.0)
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn rel_rate(&self) -> f64 {
        self.rel_rate
    }

    fn n(&self) -> f64 {
        self.n_docs as f64
    }
}

/// Probabilities describing one query term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermParams {
    t: f64,
    p: f64,
}

impl TermParams {
    pub fn new(t: f64, p: f64) -> Result<Self> {
        Ok(Self {
            t: unit("t", t)?,
            p: unit("p", p)?,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The term as seen through a tag: a document matches only if it has the
    /// term carrying the query tag, so the match rates become `t*tau` and `p*pi`.
    pub fn tagged(&self, tag: &TagParams) -> TermParams {
        TermParams {
            t: self.t * tag.tau,
            p: self.p * tag.pi,
        }
    }
}

/// Conditional tagging probabilities for one (term, tag) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagParams {
    tau: f64,
    pi: f64,
}

impl TagParams {
    pub fn new(tau: f64, pi: f64) -> Result<Self> {
        Ok(Self {
            tau: unit("tau", tau)?,
            pi: unit("pi", pi)?,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }
}

/// A violated mixture constraint. These are warnings, not errors: the
/// break-even and mesh sweeps deliberately cover infeasible corners.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityIssue {
    pub constraint: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl std::fmt::Display for FeasibilityIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "infeasible parameters: {} ({} vs {})",
            self.constraint, self.lhs, self.rhs
        )
    }
}

/// `t` mixes the relevant and non-relevant rates: `p*r <= t <= p*r + (1 - r)`.
pub fn term_feasibility(coll: &CollectionParams, term: &TermParams) -> Vec<FeasibilityIssue> {
    let r = coll.rel_rate;
    let pr = term.p * r;
    let mut issues = Vec::new();
    if term.t < pr - FEASIBILITY_EPS {
        issues.push(FeasibilityIssue {
            constraint: "p*r <= t",
            lhs: pr,
            rhs: term.t,
        });
    }
    if term.t > pr + (1.0 - r) + FEASIBILITY_EPS {
        issues.push(FeasibilityIssue {
            constraint: "t <= p*r + (1 - r)",
            lhs: term.t,
            rhs: pr + (1.0 - r),
        });
    }
    issues
}

/// Tagged documents are a subset of term documents, split into relevant and
/// non-relevant parts: `pi*p*r <= tau*t <= pi*p*r + (t - p*r)`.
pub fn tag_feasibility(
    coll: &CollectionParams,
    term: &TermParams,
    tag: &TagParams,
) -> Vec<FeasibilityIssue> {
    let mut issues = term_feasibility(coll, term);
    let r = coll.rel_rate;
    let rel_tagged = tag.pi * term.p * r;
    let tagged = tag.tau * term.t;
    let nonrel_term = term.t - term.p * r;
    if tagged < rel_tagged - FEASIBILITY_EPS {
        issues.push(FeasibilityIssue {
            constraint: "pi*p*r <= tau*t",
            lhs: rel_tagged,
            rhs: tagged,
        });
    }
    if tagged > rel_tagged + nonrel_term + FEASIBILITY_EPS {
        issues.push(FeasibilityIssue {
            constraint: "tau*t <= pi*p*r + (t - p*r)",
            lhs: tagged,
            rhs: rel_tagged + nonrel_term,
        });
    }
    issues
}

/// An ASL value together with the A factor that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub asl: f64,
    pub a_factor: f64,
    pub n_docs: u64,
}

impl Prediction {
    fn from_a(coll: &CollectionParams, a_factor: f64) -> Self {
        Prediction {
            asl: coll.n() / 2.0 * a_factor + 0.5,
            a_factor,
            n_docs: coll.n_docs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsKind {
    Asymptotic,
    Exact,
}

/// Worst (largest) and best (smallest) attainable ASL over all taggings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub worst: f64,
    pub best: f64,
    pub kind: BoundsKind,
}

impl Bounds {
    pub fn contains(&self, asl: f64, eps: f64) -> bool {
        asl >= self.best - eps && asl <= self.worst + eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Improves,
    Degrades,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggingVerdict {
    pub tif: f64,
    pub decision: Decision,
    pub asl_untagged: f64,
    pub asl_tagged: f64,
}

/// Break-even `pi` for a given `(t, p, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakEven {
    /// Tagging helps for `pi` above this value and hurts below it.
    Pi(f64),
    /// The tagging improvement factor is positive for every `pi` in [0, 1].
    AlwaysBeneficial,
    /// `p = 0`: no relevant document has the term, so `pi` has no effect.
    Undefined,
}

impl BreakEven {
    pub fn value(&self) -> Option<f64> {
        match self {
            BreakEven::Pi(v) => Some(*v),
            _ => None,
        }
    }
}

/// `A = 1 + t - p`. Below 1 beats random retrieval, above 1 is worse.
pub fn a_factor(term: &TermParams) -> f64 {
    1.0 + term.t - term.p
}

/// `ASL = N/2 * (1 + t - p) + 1/2`.
pub fn asl_untagged(coll: &CollectionParams, term: &TermParams) -> Prediction {
    Prediction::from_a(coll, a_factor(term))
}

/// The two-block form: term-bearing documents come first, so a relevant
/// document sits at the midpoint of the first block with probability `p` and
/// at the midpoint of the second block otherwise.
pub fn asl_positional(coll: &CollectionParams, term: &TermParams) -> Prediction {
    let n = coll.n();
    let (t, p) = (term.t, term.p);
    let absent = 1.0 - t;
    let asl = n * (p * t / 2.0 + (1.0 - p) * (1.0 - absent / 2.0)) + 0.5;
    Prediction {
        asl,
        a_factor: (asl - 0.5) * 2.0 / n,
        n_docs: coll.n_docs,
    }
}

/// `ASL = N/2 * (1 + t*tau - p*pi) + 1/2`.
pub fn asl_tagged(coll: &CollectionParams, term: &TermParams, tag: &TagParams) -> Prediction {
    asl_untagged(coll, &term.tagged(tag))
}

/// Tagging improvement factor `t(1 - tau) - p(1 - pi)`. Positive values mean
/// the tag lowers the ASL.
pub fn tif(term: &TermParams, tag: &TagParams) -> f64 {
    term.t * (1.0 - tag.tau) - term.p * (1.0 - tag.pi)
}

pub fn verdict(
    coll: &CollectionParams,
    term: &TermParams,
    tag: &TagParams,
    tol: f64,
) -> Result<TaggingVerdict> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::OutOfRange {
            name: "tolerance",
            value: tol,
            range: "[0, inf)",
        });
    }
    let c = tif(term, tag);
    let decision = if c > tol {
        Decision::Improves
    } else if c < -tol {
        Decision::Degrades
    } else {
        Decision::Neutral
    };
    Ok(TaggingVerdict {
        tif: c,
        decision,
        asl_untagged: asl_untagged(coll, term).asl,
        asl_tagged: asl_tagged(coll, term, tag).asl,
    })
}

/// Root of `tif = 0` in `pi`: `pi = 1 - t(1 - tau)/p`.
pub fn break_even_pi(term: &TermParams, tau: f64) -> Result<BreakEven> {
    let tau = unit("tau", tau)?;
    if term.p == 0.0 {
        return Ok(BreakEven::Undefined);
    }
    let pi = 1.0 - term.t * (1.0 - tau) / term.p;
    if pi < 0.0 {
        Ok(BreakEven::AlwaysBeneficial)
    } else {
        Ok(BreakEven::Pi(pi))
    }
}

/// Limits reached as `tau -> 1, pi -> 0` (worst) and `tau -> 0, pi -> 1` (best).
pub fn bounds_asymptotic(coll: &CollectionParams, term: &TermParams) -> Bounds {
    let half = coll.n() / 2.0;
    Bounds {
        worst: half * (1.0 + term.t) + 0.5,
        best: half * (1.0 - term.p) + 0.5,
        kind: BoundsKind::Asymptotic,
    }
}

/// Attainable limits once the relevant term documents (a share `r*p` of the
/// collection) are accounted for: they can never leave the tagged block in
/// the best case nor join it in the worst case.
pub fn bounds_exact(coll: &CollectionParams, term: &TermParams) -> Bounds {
    let half = coll.n() / 2.0;
    let rp = coll.rel_rate * term.p;
    Bounds {
        worst: half * (1.0 + term.t - rp) + 0.5,
        best: half * (1.0 + rp - term.p) + 0.5,
        kind: BoundsKind::Exact,
    }
}

pub fn bounds(coll: &CollectionParams, term: &TermParams, kind: BoundsKind) -> Bounds {
    match kind {
        BoundsKind::Asymptotic => bounds_asymptotic(coll, term),
        BoundsKind::Exact => bounds_exact(coll, term),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= EPS
    }

    fn coll(n: u64, r: f64) -> CollectionParams {
        CollectionParams::new(n, r).unwrap()
    }

    fn term(t: f64, p: f64) -> TermParams {
        TermParams::new(t, p).unwrap()
    }

    fn tag(tau: f64, pi: f64) -> TagParams {
        TagParams::new(tau, pi).unwrap()
    }

    /// Bisection on `pi -> tif`, used as an oracle for `break_even_pi`.
    fn bisect_root(term: &TermParams, tau: f64) -> Option<f64> {
        let f = |pi: f64| tif(term, &tag(tau, pi));
        let (mut lo, mut hi) = (0.0, 1.0);
        if f(lo) > 0.0 || f(hi) < 0.0 {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    #[test]
    fn range_checks() {
        assert!(TermParams::new(1.1, 0.5).is_err());
        assert!(TermParams::new(0.5, -0.1).is_err());
        assert!(TermParams::new(f64::NAN, 0.5).is_err());
        assert!(TagParams::new(0.5, 2.0).is_err());
        assert!(CollectionParams::new(0, 0.5).is_err());
        assert!(CollectionParams::new(10, 1.5).is_err());
        assert!(break_even_pi(&term(0.5, 0.5), -0.1).is_err());
    }

    #[test]
    fn a_factor_examples() {
        assert!(close(a_factor(&term(0.5, 0.6)), 0.9));
        for x in [0.0, 0.13, 0.5, 1.0] {
            assert!(close(a_factor(&term(x, x)), 1.0));
        }
        assert!(close(a_factor(&term(0.0, 1.0)), 0.0));
    }

    #[test]
    fn asl_untagged_examples() {
        assert!(close(
            asl_untagged(&coll(10, 0.5), &term(0.5, 0.6)).asl,
            5.0
        ));
        assert!(close(
            asl_untagged(&coll(10, 0.5), &term(0.37, 0.37)).asl,
            5.5
        ));
        assert!(close(asl_untagged(&coll(1, 0.5), &term(0.0, 1.0)).asl, 0.5));
    }

    #[test]
    fn asl_positional_examples() {
        let pred = asl_positional(&coll(10, 0.5), &term(0.5, 0.6));
        assert!(close(pred.asl, 5.0));
        assert!(close(pred.a_factor, 0.9));
        assert!(close(
            asl_positional(&coll(10, 0.5), &term(1.0, 1.0)).asl,
            5.5
        ));
    }

    #[test]
    fn asl_tagged_examples() {
        let c = coll(10, 0.5);
        let tm = term(0.5, 0.6);
        assert!(close(asl_tagged(&c, &tm, &tag(0.5, 2.0 / 3.0)).asl, 4.75));
        assert_eq!(asl_tagged(&c, &tm, &tag(1.0, 1.0)), asl_untagged(&c, &tm));
        assert!(close(asl_tagged(&c, &tm, &tag(0.6, 2.0 / 3.0)).asl, 5.0));
    }

    #[test]
    fn tif_examples() {
        let tm = term(0.5, 0.6);
        let c = coll(10, 0.5);
        let tg = tag(0.5, 2.0 / 3.0);
        let via_asl = (asl_untagged(&c, &tm).asl - asl_tagged(&c, &tm, &tg).asl) / 5.0;
        assert!(close(tif(&tm, &tg), 0.05));
        assert!(close(via_asl, 0.05));
        assert!(close(tif(&tm, &tag(1.0, 1.0)), 0.0));
        assert!(close(tif(&term(0.3, 0.3), &tag(0.4, 0.4)), 0.0));
    }

    #[test]
    fn verdict_examples() {
        let c = coll(10, 0.5);
        let v = verdict(&c, &term(0.5, 0.6), &tag(0.5, 2.0 / 3.0), 0.0).unwrap();
        assert_eq!(v.decision, Decision::Improves);
        assert!(close(v.tif, 0.05));
        assert!(close(v.asl_untagged, 5.0));
        assert!(close(v.asl_tagged, 4.75));

        let v = verdict(&c, &term(0.4, 0.4), &tag(0.7, 0.7), 0.0).unwrap();
        assert_eq!(v.decision, Decision::Neutral);

        let v = verdict(&c, &term(0.1, 0.6), &tag(0.5, 0.5), 0.0).unwrap();
        assert!(close(v.tif, -0.25));
        assert_eq!(v.decision, Decision::Degrades);

        // A band wider than |tif| turns a small improvement neutral.
        let v = verdict(&c, &term(0.5, 0.6), &tag(0.5, 2.0 / 3.0), 0.1).unwrap();
        assert_eq!(v.decision, Decision::Neutral);
        assert!(verdict(&c, &term(0.5, 0.6), &tag(0.5, 0.5), -1.0).is_err());
    }

    #[test]
    fn break_even_examples() {
        let tm = term(0.5, 0.6);
        let be = break_even_pi(&tm, 0.5).unwrap().value().unwrap();
        let oracle = bisect_root(&tm, 0.5).unwrap();
        assert!((be - oracle).abs() < 1e-12);
        assert!(close(be, 7.0 / 12.0));
        // The worked point (tau=1/2, pi=2/3) lies above the break-even surface.
        assert!(2.0 / 3.0 > be);

        for (t, p) in [(0.1, 0.3), (0.9, 0.2), (0.0, 1.0)] {
            assert_eq!(break_even_pi(&term(t, p), 1.0).unwrap(), BreakEven::Pi(1.0));
        }
        assert_eq!(
            break_even_pi(&term(0.7, 0.3), 0.0).unwrap(),
            BreakEven::AlwaysBeneficial
        );
        assert_eq!(
            break_even_pi(&term(0.7, 0.0), 0.3).unwrap(),
            BreakEven::Undefined
        );
    }

    #[test]
    fn bounds_examples() {
        let c = coll(10, 0.5);
        let tm = term(0.5, 0.6);
        let a = bounds_asymptotic(&c, &tm);
        assert!(close(a.worst, 8.0) && close(a.best, 2.5));
        let e = bounds_exact(&c, &tm);
        assert!(close(e.worst, 6.5) && close(e.best, 4.0));
        assert!(e.contains(4.75, EPS));

        let z = bounds_asymptotic(&c, &term(0.0, 0.0));
        assert!(close(z.worst, 5.5) && close(z.best, 5.5));

        let small = bounds_asymptotic(&c, &term(0.01, 0.6));
        assert!(close(small.worst, 5.55) && close(small.best, 2.5));

        let r0 = bounds_exact(&coll(10, 0.0), &tm);
        assert!(close(r0.worst, a.worst) && close(r0.best, a.best));
    }

    #[test]
    fn feasibility_is_advisory() {
        let c = coll(10, 0.5);
        assert!(tag_feasibility(&c, &term(0.5, 0.6), &tag(0.6, 2.0 / 3.0)).is_empty());
        // All term documents tagged, yet no relevant one: impossible when p*r > 0.
        let issues = tag_feasibility(&c, &term(0.5, 0.6), &tag(1.0, 0.0));
        assert_eq!(issues.len(), 1);
        assert!(!term_feasibility(&c, &term(0.1, 0.6)).is_empty());
    }

    #[test]
    fn monotonicity_in_t_and_p() {
        let c = coll(7, 0.3);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for &p in &grid {
            for w in grid.windows(2) {
                assert!(
                    asl_untagged(&c, &term(w[1], p)).asl > asl_untagged(&c, &term(w[0], p)).asl
                );
                assert!(
                    asl_untagged(&c, &term(p, w[1])).asl < asl_untagged(&c, &term(p, w[0])).asl
                );
            }
        }
    }

    proptest! {
        #[test]
        fn positional_equals_reformulated(n in 1u64..100_000, t in 0.0..=1.0f64, p in 0.0..=1.0f64) {
            let c = coll(n, 0.0);
            let tm = term(t, p);
            let lhs = asl_positional(&c, &tm).asl;
            let rhs = asl_untagged(&c, &tm).asl;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (n as f64).max(1.0));
        }

        #[test]
        fn prediction_links_asl_and_a(n in 1u64..1000, t in 0.0..=1.0f64, p in 0.0..=1.0f64) {
            let pred = asl_untagged(&coll(n, 0.0), &term(t, p));
            prop_assert!(close(pred.asl, n as f64 / 2.0 * pred.a_factor + 0.5));
            prop_assert!(pred.asl >= 0.5 && pred.asl <= n as f64 + 0.5);
        }

        #[test]
        fn tif_identity(n in 1u64..1000, t in 0.0..=1.0f64, p in 0.0..=1.0f64,
                        tau in 0.0..=1.0f64, pi in 0.0..=1.0f64) {
            let c = coll(n, 0.0);
            let (tm, tg) = (term(t, p), tag(tau, pi));
            let diff = asl_untagged(&c, &tm).asl - asl_tagged(&c, &tm, &tg).asl;
            prop_assert!((diff - n as f64 / 2.0 * tif(&tm, &tg)).abs() <= 1e-12 * n as f64);
        }

        #[test]
        fn break_even_is_a_sign_change(t in 0.0..=1.0f64, p in 0.001..=1.0f64, tau in 0.0..=1.0f64) {
            let tm = term(t, p);
            match break_even_pi(&tm, tau).unwrap() {
                BreakEven::Pi(be) => {
                    prop_assert!((0.0..=1.0).contains(&be));
                    prop_assert!(tif(&tm, &tag(tau, be)).abs() <= 1e-12);
                    if be < 1.0 {
                        prop_assert!(tif(&tm, &tag(tau, (be + 1.0) / 2.0)) > 0.0);
                    }
                    if be > 0.0 {
                        prop_assert!(tif(&tm, &tag(tau, be / 2.0)) < 0.0);
                    }
                    let oracle = bisect_root(&tm, tau).unwrap();
                    prop_assert!((oracle - be).abs() < 1e-9);
                }
                BreakEven::AlwaysBeneficial => {
                    prop_assert!(tif(&tm, &tag(tau, 0.0)) > 0.0);
                }
                BreakEven::Undefined => prop_assert!(false),
            }
        }

        // d(pi_be)/dp = t(1-tau)/p^2 >= 0 and d(pi_be)/dtau = t/p >= 0.
        #[test]
        fn break_even_grows_with_p_and_tau(t in 0.0..=1.0f64, p in 0.01..0.99f64, tau in 0.0..0.99f64) {
            let be = |p: f64, tau: f64| break_even_pi(&term(t, p), tau).unwrap();
            if let (BreakEven::Pi(a), BreakEven::Pi(b)) = (be(p, tau), be(p + 0.01, tau)) {
                prop_assert!(b >= a);
            }
            if let (BreakEven::Pi(a), BreakEven::Pi(b)) = (be(p, tau), be(p, tau + 0.01)) {
                prop_assert!(b >= a);
            }
        }

        #[test]
        fn bounds_order_and_nesting(n in 1u64..1000, r in 0.0..=1.0f64, p in 0.0..=1.0f64,
                                    nonrel in 0.0..=1.0f64, tau in 0.0..=1.0f64, pi in 0.0..=1.0f64) {
            // Build a feasible (t, tau) from the relevant/non-relevant split.
            let t = p * r + nonrel * (1.0 - r);
            let c = coll(n, r);
            let tm = term(t.min(1.0), p);
            let exact = bounds_exact(&c, &tm);
            let asym = bounds_asymptotic(&c, &tm);
            prop_assert!(exact.best <= exact.worst + 1e-12);
            prop_assert!(asym.best <= exact.best + 1e-12 && exact.worst <= asym.worst + 1e-12);
            let a = a_factor(&tm.tagged(&tag(tau, pi)));
            prop_assert!(a <= 1.0 + t + 1e-12 && a >= 1.0 - p - 1e-12);

            // Feasible tag: tagged share = pi*p*r + tau_nr*(t - p*r).
            if t > 0.0 {
                let tagged = pi * p * r + tau * (t - p * r);
                let tg = tag((tagged / t).clamp(0.0, 1.0), pi);
                prop_assume!(tag_feasibility(&c, &tm, &tg).is_empty());
                prop_assert!(exact.contains(asl_tagged(&c, &tm, &tg).asl, 1e-9));
            }
        }
    }
}
