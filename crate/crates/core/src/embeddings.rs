//! The three embedding families carrying Hamming-cube segments into tree
//! spaces: a finite-rank map into a single tree of fixed height, the
//! isometric map of the Schreier family into the disjoint union of all
//! trees, and an almost-isometric map of the whole cube controlled by an
//! admissibility threshold sequence.
//!
//! All three share one building block: the image of a single element `m`
//! in the height-`r` tree puts `-1` on every singleton below `m`, `+1` on
//! the singleton `(m)`, and `+2` on every longer node ending at `m`. A set
//! maps to the coefficient-wise sum of its elements' images, so the
//! difference of two set images equals the difference over the disjoint
//! parts of the two sets.
//!
//! Images are materialized as sparse bundles behind a node budget; the gap
//! between two embedded sets is evaluated by streaming the signed merge of
//! the reduced element images through the norm scanner, without
//! materializing the difference vector per pair.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::hamming::{self, Point};
use crate::treespace::{self, BundleVector, NodePath, SparseVector};

/// Default cap on materialized support nodes per engine.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 20;

/// Materialization limits shared by the embedding operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedOptions {
    pub node_budget: u64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Choice of admissibility thresholds for the almost-isometric map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Thresholds {
    /// The smallest admissible sequence for the chosen epsilon.
    Smallest,
    /// Caller-supplied `N_0, N_1, ...`, validated against admissibility.
    Explicit(Vec<u64>),
}

/// One of the three embedding families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSpec {
    /// Sets of at most `set_cap` elements into the tree of height `height`.
    FiniteRank { set_cap: u32, height: u32 },
    /// Schreier sets into the disjoint union of all trees, isometrically.
    Schreier,
    /// The whole cube, with contraction at most `1/(1 - epsilon)`.
    AlmostIsometric {
        epsilon: Rational64,
        thresholds: Thresholds,
    },
}

impl EmbeddingSpec {
    pub fn finite_rank(set_cap: u32, height: u32) -> Result<Self> {
        let spec = EmbeddingSpec::FiniteRank { set_cap, height };
        spec.validate()?;
        Ok(spec)
    }

    pub fn almost_isometric(epsilon: Rational64, thresholds: Thresholds) -> Result<Self> {
        let spec = EmbeddingSpec::AlmostIsometric {
            epsilon,
            thresholds,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EmbeddingSpec::FiniteRank { set_cap, height } => {
                if *height < 1 || height > set_cap {
                    return Err(Error::InvalidSpec(format!(
                        "need 1 <= height <= set cap, got height {height}, cap {set_cap}"
                    )));
                }
            }
            EmbeddingSpec::Schreier => {}
            EmbeddingSpec::AlmostIsometric {
                epsilon,
                thresholds,
            } => {
                if *epsilon <= Rational64::new(0, 1) || *epsilon >= Rational64::new(1, 1) {
                    return Err(Error::InvalidSpec(format!(
                        "epsilon must lie strictly between 0 and 1, got {epsilon}"
                    )));
                }
                if let Thresholds::Explicit(seq) = thresholds {
                    validate_thresholds(*epsilon, seq)?;
                }
            }
        }
        Ok(())
    }

    /// Checks that `p` belongs to this embedding's domain.
    pub fn check_member(&self, p: &Point) -> Result<()> {
        match self {
            EmbeddingSpec::FiniteRank { set_cap, .. } => {
                if p.len() as u64 > *set_cap as u64 {
                    return Err(Error::OutsideDomain {
                        spec: self.to_string(),
                        set: p.to_string(),
                        reason: format!("has {} elements, cap is {set_cap}", p.len()),
                    });
                }
            }
            EmbeddingSpec::Schreier => {
                if !hamming::is_schreier(p) {
                    return Err(Error::OutsideDomain {
                        spec: self.to_string(),
                        set: p.to_string(),
                        reason: "not a Schreier set (size exceeds minimum)".into(),
                    });
                }
            }
            EmbeddingSpec::AlmostIsometric { thresholds, .. } => {
                if let (Thresholds::Explicit(seq), Some(max)) = (thresholds, p.max()) {
                    if max as usize >= seq.len() {
                        return Err(Error::ThresholdNotCovered {
                            element: max,
                            len: seq.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// The admissibility threshold for `element` (almost-isometric only).
    pub fn threshold(&self, element: u32) -> Result<u64> {
        match self {
            EmbeddingSpec::AlmostIsometric {
                epsilon,
                thresholds,
            } => match thresholds {
                Thresholds::Smallest => Ok(smallest_threshold(*epsilon, element)),
                Thresholds::Explicit(seq) => seq.get(element as usize).copied().ok_or(
                    Error::ThresholdNotCovered {
                        element,
                        len: seq.len(),
                    },
                ),
            },
            _ => Err(Error::InvalidSpec(
                "thresholds only apply to the almost-isometric map".into(),
            )),
        }
    }

    /// Whether `p` lies in the isometric core of the almost-isometric map:
    /// its size is at most the threshold of its least element.
    pub fn is_admissible(&self, p: &Point) -> Result<bool> {
        match p.min() {
            None => Ok(true),
            Some(first) => Ok(p.len() as u64 <= self.threshold(first)?),
        }
    }
}

impl fmt::Display for EmbeddingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingSpec::FiniteRank { set_cap, height } => {
                write!(f, "finite:{set_cap},{height}")
            }
            EmbeddingSpec::Schreier => write!(f, "schreier"),
            EmbeddingSpec::AlmostIsometric { epsilon, .. } => {
                write!(f, "ai:{}/{}", epsilon.numer(), epsilon.denom())
            }
        }
    }
}

/// Smallest integer `N` with `2m <= epsilon * N`; zero for `m = 0`.
fn smallest_threshold(epsilon: Rational64, m: u32) -> u64 {
    if m == 0 {
        return 0;
    }
    let p = *epsilon.numer() as u128;
    let q = *epsilon.denom() as u128;
    (2 * m as u128 * q).div_ceil(p) as u64
}

/// The smallest admissible threshold sequence `N_0..=N_max`: each entry the
/// least integer satisfying admissibility, forced strictly above its
/// predecessor.
pub fn default_thresholds(epsilon: Rational64, max_element: u32) -> Result<Vec<u64>> {
    EmbeddingSpec::almost_isometric(epsilon, Thresholds::Smallest)?;
    let mut seq = Vec::with_capacity(max_element as usize + 1);
    seq.push(0u64);
    for m in 1..=max_element {
        let prev = *seq.last().unwrap();
        seq.push(smallest_threshold(epsilon, m).max(prev + 1));
    }
    Ok(seq)
}

fn validate_thresholds(epsilon: Rational64, seq: &[u64]) -> Result<()> {
    if seq.first() != Some(&0) {
        return Err(Error::InvalidSpec("thresholds must start at 0".into()));
    }
    if !seq.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidSpec(
            "thresholds must be strictly increasing".into(),
        ));
    }
    let p = *epsilon.numer() as u128;
    let q = *epsilon.denom() as u128;
    for (m, &n) in seq.iter().enumerate() {
        // 2m <= epsilon * N_m, cleared of denominators
        if 2 * m as u128 * q > p * n as u128 {
            return Err(Error::InvalidSpec(format!(
                "threshold N_{m} = {n} violates admissibility for epsilon {epsilon}"
            )));
        }
    }
    Ok(())
}

/// Coefficient of `node` in the image of `element` within the tree of
/// height `height`: `-1` on singletons below the element, `+1` on the
/// element's own singleton, `+2` on longer nodes ending at the element.
pub fn element_coefficient(height: u32, element: u32, node: &NodePath) -> Result<i64> {
    if node.len() as u64 > height as u64 {
        return Err(Error::NodeTooLong {
            len: node.len(),
            height,
        });
    }
    Ok(match node.entries() {
        [single] => {
            if *single < element {
                -1
            } else if *single == element {
                1
            } else {
                0
            }
        }
        [.., last] if *last == element => 2,
        _ => 0,
    })
}

/// Number of support nodes of the image of `element` at `height`, or
/// `None` when it exceeds `cap`.
fn image_support_size(height: u32, element: u32, cap: u64) -> Option<u64> {
    let mut total = element as u128; // the singletons (1)..(element)
    let n = element.saturating_sub(1) as u128;
    let mut binom: u128 = 1;
    for j in 2..=height.min(element) as u128 {
        // C(element - 1, j - 1), computed incrementally
        let k = j - 1;
        binom = binom.checked_mul(n - k + 1)? / k;
        total = total.checked_add(binom)?;
        if total > cap as u128 {
            return None;
        }
    }
    (total <= cap as u128).then_some(total as u64)
}

/// Materializes the image of `element` at `height`, terms in path order.
fn image_terms(height: u32, element: u32) -> Vec<(NodePath, i64)> {
    let mut terms = Vec::new();
    for first in 1..=element {
        if first == element {
            terms.push((NodePath::from_sorted_unchecked(vec![element]), 1));
        } else {
            terms.push((NodePath::from_sorted_unchecked(vec![first]), -1));
            if height >= 2 {
                let mut stem = vec![first];
                push_tuples_ending_at(&mut stem, element, height, &mut terms);
            }
        }
    }
    terms
}

/// Depth-first emission, in path order, of every strictly increasing tuple
/// extending `stem` that ends at `element` and fits within `height`.
fn push_tuples_ending_at(
    stem: &mut Vec<u32>,
    element: u32,
    height: u32,
    out: &mut Vec<(NodePath, i64)>,
) {
    let last = *stem.last().unwrap();
    for next in last + 1..=element {
        if next == element {
            let mut node = stem.clone();
            node.push(element);
            out.push((NodePath::from_sorted_unchecked(node), 2));
        } else if (stem.len() as u32) + 1 < height {
            stem.push(next);
            push_tuples_ending_at(stem, element, height, out);
            stem.pop();
        }
    }
}

/// Embeds elements and sets under one spec, caching element images.
///
/// [`Engine::prepare`] materializes the images of `1..=max_element` up
/// front; afterwards every method takes `&self`, so one engine can be
/// shared read-only across sweep workers.
pub struct Engine {
    spec: EmbeddingSpec,
    budget: u64,
    used: AtomicU64,
    cache: HashMap<u32, BundleVector>,
}

impl Engine {
    pub fn new(spec: EmbeddingSpec, options: EmbedOptions) -> Result<Self> {
        spec.validate()?;
        Ok(Engine {
            spec,
            budget: options.node_budget,
            used: AtomicU64::new(0),
            cache: HashMap::new(),
        })
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    /// Materializes and caches the images of all elements up to
    /// `max_element`, charging them against the node budget once.
    pub fn prepare(&mut self, max_element: u32) -> Result<()> {
        for m in 1..=max_element {
            if !self.cache.contains_key(&m) {
                let image = self.build_image(m)?;
                self.cache.insert(m, image);
            }
        }
        Ok(())
    }

    fn charge(&self, nodes: u64) -> Result<()> {
        let used = self.used.fetch_add(nodes, Ordering::Relaxed) + nodes;
        if used > self.budget {
            return Err(Error::NodeBudgetExceeded {
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Builds the height runs of the image of `element`. Heights below the
    /// element each carry their own vector; all heights from the element to
    /// the top of its range share one stabilized vector, since no node
    /// ending at the element is longer than the element itself.
    fn build_image(&self, element: u32) -> Result<BundleVector> {
        let budget_err = Error::NodeBudgetExceeded {
            budget: self.budget,
        };
        let top: u64 = match &self.spec {
            EmbeddingSpec::FiniteRank { height, .. } => {
                let size = image_support_size(*height, element, self.budget)
                    .ok_or(budget_err.clone())?;
                self.charge(size)?;
                let vector =
                    SparseVector::from_sorted_unchecked(*height, image_terms(*height, element));
                return BundleVector::from_component(*height, vector);
            }
            EmbeddingSpec::Schreier => element as u64,
            EmbeddingSpec::AlmostIsometric { .. } => self.spec.threshold(element)?,
        };
        let top: u32 = top.try_into().map_err(|_| budget_err.clone())?;
        let stabilized = element.min(top);
        let mut runs = Vec::new();
        for height in 1..=stabilized {
            let size =
                image_support_size(height, element, self.budget).ok_or(budget_err.clone())?;
            self.charge(size)?;
            let vector = SparseVector::from_sorted_unchecked(height, image_terms(height, element));
            let hi = if height == stabilized { top } else { height };
            runs.push((height, hi, vector));
        }
        BundleVector::from_runs(runs)
    }

    fn image(&self, element: u32) -> Result<std::borrow::Cow<'_, BundleVector>> {
        match self.cache.get(&element) {
            Some(image) => Ok(std::borrow::Cow::Borrowed(image)),
            None => Ok(std::borrow::Cow::Owned(self.build_image(element)?)),
        }
    }

    /// Image of the single element `m`.
    pub fn embed_element(&self, m: u32) -> Result<BundleVector> {
        if m == 0 {
            return Err(Error::EntryOutOfRange(0));
        }
        Ok(self.image(m)?.into_owned())
    }

    /// Image of a set: the coefficient-wise sum over its elements. The
    /// empty set maps to zero.
    pub fn embed_set(&self, set: &Point) -> Result<BundleVector> {
        self.spec.check_member(set)?;
        let images = set
            .elements()
            .iter()
            .map(|&m| self.image(m))
            .collect::<Result<Vec<_>>>()?;
        let parts: Vec<(&BundleVector, i64)> = images.iter().map(|im| (im.as_ref(), 1)).collect();
        let sum = treespace::bundle_sum(&parts)?;
        self.charge(sum.stored_terms())?;
        Ok(sum)
    }

    /// Norm of the difference of two embedded sets.
    ///
    /// Reduced to the disjoint parts first (shared elements cancel
    /// coefficient-wise). Element images are length-filtered families —
    /// the component at any height is the deepest component restricted to
    /// nodes that fit — so the sup over all heights collapses to one
    /// length-capped scan per distinct image top, without materializing
    /// the difference.
    pub fn pair_gap(&self, a: &Point, b: &Point) -> Result<u64> {
        self.spec.check_member(a)?;
        self.spec.check_member(b)?;
        let only_a = a.difference(b);
        let only_b = b.difference(a);
        if only_a.is_empty() && only_b.is_empty() {
            return Ok(0);
        }
        let mut images = Vec::with_capacity(only_a.len() + only_b.len());
        for &m in only_a.elements() {
            images.push((self.image(m)?, 1i64));
        }
        for &m in only_b.elements() {
            images.push((self.image(m)?, -1i64));
        }
        let parts: Vec<(&SparseVector, u32, i64)> = images
            .iter()
            .map(|(image, sign)| {
                let bundle = image.as_ref();
                let deepest = bundle
                    .runs()
                    .last()
                    .expect("element images are nonzero")
                    .vector();
                (deepest, bundle.max_height(), *sign)
            })
            .collect();
        treespace::filtered_family_norm(&parts)
    }
}

/// One-shot wrapper around [`Engine::embed_element`].
pub fn embed_element(spec: &EmbeddingSpec, m: u32, options: EmbedOptions) -> Result<BundleVector> {
    Engine::new(spec.clone(), options)?.embed_element(m)
}

/// One-shot wrapper around [`Engine::embed_set`].
pub fn embed_set(spec: &EmbeddingSpec, set: &Point, options: EmbedOptions) -> Result<BundleVector> {
    Engine::new(spec.clone(), options)?.embed_set(set)
}

/// One-shot wrapper around [`Engine::pair_gap`].
pub fn pair_gap(spec: &EmbeddingSpec, a: &Point, b: &Point, options: EmbedOptions) -> Result<u64> {
    Engine::new(spec.clone(), options)?.pair_gap(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamming::distance;
    use proptest::prelude::*;

    fn pt(elements: &[u32]) -> Point {
        Point::new(elements.to_vec()).unwrap()
    }

    fn node(entries: &[u32]) -> NodePath {
        NodePath::new(entries.to_vec()).unwrap()
    }

    fn finite(set_cap: u32, height: u32) -> EmbeddingSpec {
        EmbeddingSpec::finite_rank(set_cap, height).unwrap()
    }

    fn ai(num: i64, den: i64) -> EmbeddingSpec {
        EmbeddingSpec::almost_isometric(Rational64::new(num, den), Thresholds::Smallest).unwrap()
    }

    fn engine(spec: EmbeddingSpec) -> Engine {
        Engine::new(spec, EmbedOptions::default()).unwrap()
    }

    #[test]
    fn element_coefficient_examples() {
        assert_eq!(element_coefficient(2, 3, &node(&[1])).unwrap(), -1);
        assert_eq!(element_coefficient(2, 3, &node(&[3])).unwrap(), 1);
        assert_eq!(element_coefficient(2, 3, &node(&[2, 3])).unwrap(), 2);
        assert_eq!(element_coefficient(2, 3, &node(&[1, 2])).unwrap(), 0);
        assert_eq!(element_coefficient(2, 3, &node(&[4])).unwrap(), 0);
        assert_eq!(element_coefficient(2, 3, &NodePath::root()).unwrap(), 0);
        assert!(element_coefficient(1, 3, &node(&[1, 3])).is_err());
    }

    #[test]
    fn single_element_image_in_height_two() {
        let image = engine(finite(2, 2)).embed_element(2).unwrap();
        let component = image.component(2).unwrap();
        assert_eq!(component.coefficient(&node(&[1])), -1);
        assert_eq!(component.coefficient(&node(&[2])), 1);
        assert_eq!(component.coefficient(&node(&[1, 2])), 2);
        assert_eq!(component.support_len(), 3);
    }

    #[test]
    fn image_terms_agree_with_coefficient_formula() {
        for (height, element) in [(1, 4), (2, 4), (3, 5), (4, 4), (3, 1), (2, 1)] {
            let terms = image_terms(height, element);
            assert!(terms.windows(2).all(|w| w[0].0 < w[1].0), "sorted order");
            for (path, coeff) in &terms {
                assert_eq!(element_coefficient(height, element, path).unwrap(), *coeff);
            }
            let expected = image_support_size(height, element, u64::MAX).unwrap();
            assert_eq!(terms.len() as u64, expected);
        }
    }

    #[test]
    fn every_element_image_has_norm_one() {
        for spec in [finite(4, 2), finite(3, 3), EmbeddingSpec::Schreier, ai(1, 2)] {
            let eng = engine(spec);
            for m in 1..=6 {
                assert_eq!(eng.embed_element(m).unwrap().norm().unwrap(), 1);
            }
        }
    }

    #[test]
    fn schreier_image_of_one_is_a_single_basis_vector() {
        let image = engine(EmbeddingSpec::Schreier).embed_element(1).unwrap();
        assert_eq!(image.runs().len(), 1);
        assert_eq!(image.runs()[0].heights(), (1, 1));
        let component = image.component(1).unwrap();
        assert_eq!(component.coefficient(&node(&[1])), 1);
        assert_eq!(component.support_len(), 1);
    }

    #[test]
    fn schreier_image_components_stack_up_to_the_element() {
        let image = engine(EmbeddingSpec::Schreier).embed_element(3).unwrap();
        assert_eq!(image.max_height(), 3);
        let c2 = image.component(2).unwrap();
        assert_eq!(c2.coefficient(&node(&[1])), -1);
        assert_eq!(c2.coefficient(&node(&[2])), -1);
        assert_eq!(c2.coefficient(&node(&[3])), 1);
        assert_eq!(c2.coefficient(&node(&[1, 3])), 2);
        assert_eq!(c2.coefficient(&node(&[2, 3])), 2);
        assert!(image.component(4).unwrap().is_zero());
    }

    #[test]
    fn almost_isometric_image_shares_its_tail_run() {
        // epsilon 1/2 gives thresholds N_m = 4m
        let image = engine(ai(1, 2)).embed_element(3).unwrap();
        assert_eq!(image.max_height(), 12);
        let runs: Vec<(u32, u32)> = image.runs().iter().map(|r| r.heights()).collect();
        assert_eq!(runs, vec![(1, 1), (2, 2), (3, 12)]);
        assert_eq!(
            image.component(5).unwrap().terms(),
            image.component(12).unwrap().terms()
        );
    }

    #[test]
    fn embedding_the_empty_set_gives_zero() {
        for spec in [finite(3, 2), EmbeddingSpec::Schreier, ai(1, 4)] {
            assert!(engine(spec).embed_set(&Point::empty()).unwrap().is_zero());
        }
    }

    #[test]
    fn frozen_gap_values() {
        // max branch sum realized at (1,2): -s + t + 2u with s=2, t=3, u=2
        let eng = engine(finite(3, 2));
        assert_eq!(eng.pair_gap(&pt(&[1, 2]), &pt(&[5, 6, 7])).unwrap(), 5);
        // the same value through the materialized bundle route
        let diff = eng
            .embed_set(&pt(&[1, 2]))
            .unwrap()
            .checked_sub(&eng.embed_set(&pt(&[5, 6, 7])).unwrap())
            .unwrap();
        assert_eq!(diff.norm().unwrap(), 5);

        // disjoint triples: the two-sided bound gives [4, 6], realized 5
        assert_eq!(eng.pair_gap(&pt(&[1, 2, 3]), &pt(&[4, 5, 6])).unwrap(), 5);

        // smaller-first side of size <= height embeds the pair isometrically
        let eng = engine(finite(4, 2));
        let (a, b) = (pt(&[1, 9]), pt(&[2, 3, 4, 5]));
        assert_eq!(eng.pair_gap(&a, &b).unwrap(), distance(&a, &b));
    }

    #[test]
    fn schreier_pairs_are_isometric() {
        let eng = engine(EmbeddingSpec::Schreier);
        let (a, b) = (pt(&[2, 3]), pt(&[3, 5]));
        assert_eq!(eng.pair_gap(&a, &b).unwrap(), 2);
        assert_eq!(distance(&a, &b), 2);
        // the difference bundle touches components 1..5 only
        let diff = eng
            .embed_set(&a)
            .unwrap()
            .checked_sub(&eng.embed_set(&b).unwrap())
            .unwrap();
        assert_eq!(diff.max_height(), 5);
        assert_eq!(diff.norm().unwrap(), 2);
    }

    #[test]
    fn gap_of_a_set_with_itself_is_zero() {
        let eng = engine(finite(3, 2));
        let a = pt(&[2, 4, 6]);
        assert_eq!(eng.pair_gap(&a, &a).unwrap(), 0);
    }

    #[test]
    fn domain_violations_are_named() {
        let eng = engine(finite(2, 2));
        let err = eng.embed_set(&pt(&[1, 2, 3])).unwrap_err();
        assert!(matches!(err, Error::OutsideDomain { .. }));

        let eng = engine(EmbeddingSpec::Schreier);
        let err = eng.embed_set(&pt(&[1, 2])).unwrap_err();
        assert!(matches!(err, Error::OutsideDomain { .. }));
        assert!(eng.embed_set(&pt(&[2, 3])).is_ok());
    }

    #[test]
    fn default_threshold_examples() {
        let half = Rational64::new(1, 2);
        assert_eq!(default_thresholds(half, 3).unwrap(), vec![0, 4, 8, 12]);
        let quarter = Rational64::new(1, 4);
        assert_eq!(default_thresholds(quarter, 1).unwrap(), vec![0, 8]);
        // admissibility holds along the default sequence, including m = 0
        assert!(validate_thresholds(half, &default_thresholds(half, 9).unwrap()).is_ok());
    }

    #[test]
    fn explicit_thresholds_are_validated() {
        let eps = Rational64::new(1, 2);
        assert!(
            EmbeddingSpec::almost_isometric(eps, Thresholds::Explicit(vec![0, 4, 8])).is_ok()
        );
        // must start at zero
        assert!(EmbeddingSpec::almost_isometric(eps, Thresholds::Explicit(vec![1, 4])).is_err());
        // must be strictly increasing
        assert!(
            EmbeddingSpec::almost_isometric(eps, Thresholds::Explicit(vec![0, 4, 4])).is_err()
        );
        // N_1 = 3 violates 2*1 <= eps * N_1
        assert!(
            EmbeddingSpec::almost_isometric(eps, Thresholds::Explicit(vec![0, 3, 8])).is_err()
        );
        // elements past the sequence are out of domain
        let spec =
            EmbeddingSpec::almost_isometric(eps, Thresholds::Explicit(vec![0, 4, 8])).unwrap();
        assert!(matches!(
            spec.check_member(&pt(&[5])),
            Err(Error::ThresholdNotCovered { .. })
        ));
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(EmbeddingSpec::finite_rank(2, 3).is_err());
        assert!(EmbeddingSpec::finite_rank(3, 0).is_err());
        assert!(
            EmbeddingSpec::almost_isometric(Rational64::new(1, 1), Thresholds::Smallest).is_err()
        );
        assert!(
            EmbeddingSpec::almost_isometric(Rational64::new(0, 1), Thresholds::Smallest).is_err()
        );
    }

    #[test]
    fn node_budget_guards_materialization() {
        let eng = Engine::new(finite(20, 8), EmbedOptions { node_budget: 100 }).unwrap();
        let err = eng.embed_element(20).unwrap_err();
        assert!(matches!(err, Error::NodeBudgetExceeded { .. }));
    }

    #[test]
    fn admissibility_of_sets() {
        let spec = ai(1, 2); // thresholds 4m
        assert!(spec.is_admissible(&Point::empty()).unwrap());
        assert!(spec.is_admissible(&pt(&[1, 2, 3, 4])).unwrap()); // 4 <= N_1 = 4
        assert!(!spec.is_admissible(&pt(&[1, 2, 3, 4, 5])).unwrap()); // 5 > 4
        assert!(spec.is_admissible(&pt(&[2, 5, 9])).unwrap()); // 3 <= N_2 = 8
    }

    fn small_point() -> impl Strategy<Value = Point> {
        proptest::collection::vec(1u32..10, 0..5).prop_map(|v| Point::new(v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gap_is_dominated_by_distance(a in small_point(), b in small_point()) {
            for spec in [finite(9, 2), finite(9, 5), ai(1, 3)] {
                let eng = engine(spec);
                prop_assert!(eng.pair_gap(&a, &b).unwrap() <= distance(&a, &b));
            }
        }

        #[test]
        fn finite_rank_two_sided_bound(a in small_point(), b in small_point()) {
            for (cap, height) in [(9u32, 1u32), (9, 2), (9, 4)] {
                let eng = engine(finite(cap, height));
                let gap = eng.pair_gap(&a, &b).unwrap();
                let d = distance(&a, &b);
                prop_assert!(height as u64 * d <= cap as u64 * gap);
                prop_assert!(gap <= d);
            }
        }

        #[test]
        fn gap_matches_reduced_and_bundle_routes(a in small_point(), b in small_point()) {
            // the fast filtered-family path must agree with the reduction
            // identity, the materialized bundle difference, and the
            // streaming interval walk, for every embedding family
            for spec in [finite(9, 3), EmbeddingSpec::Schreier, ai(1, 3)] {
                let schreier = matches!(spec, EmbeddingSpec::Schreier);
                let shrink = |p: &Point| if schreier {
                    let len = p.len() as u32;
                    Point::new(p.elements().iter().map(|e| e + len).collect()).unwrap()
                } else {
                    p.clone()
                };
                let (a, b) = (shrink(&a), shrink(&b));
                if spec.check_member(&a).is_err() || spec.check_member(&b).is_err() {
                    continue;
                }
                let eng = engine(spec);
                let gap = eng.pair_gap(&a, &b).unwrap();
                let reduced = eng.pair_gap(&a.difference(&b), &b.difference(&a)).unwrap();
                prop_assert_eq!(gap, reduced);
                let left = eng.embed_set(&a).unwrap();
                let right = eng.embed_set(&b).unwrap();
                let diff = left.checked_sub(&right).unwrap();
                prop_assert_eq!(gap, diff.norm().unwrap());
                prop_assert_eq!(
                    gap,
                    treespace::bundle_parts_norm(&[(&left, 1), (&right, -1)]).unwrap()
                );
            }
        }

        #[test]
        fn almost_isometric_two_sided_bound(a in small_point(), b in small_point()) {
            let spec = ai(1, 4);
            let eng = engine(spec.clone());
            let gap = eng.pair_gap(&a, &b).unwrap();
            let d = distance(&a, &b);
            // (1 - eps) d <= gap <= d with eps = 1/4, cleared of denominators
            prop_assert!(3 * d <= 4 * gap);
            prop_assert!(gap <= d);
            if spec.is_admissible(&a).unwrap() && spec.is_admissible(&b).unwrap() {
                prop_assert_eq!(gap, d);
            }
        }

        #[test]
        fn schreier_gap_equals_distance(raw_a in small_point(), raw_b in small_point()) {
            // shift sets upward until they are Schreier
            let shift = |p: &Point| {
                let len = p.len() as u32;
                Point::new(p.elements().iter().map(|e| e + len).collect()).unwrap()
            };
            let (a, b) = (shift(&raw_a), shift(&raw_b));
            prop_assume!(hamming::is_schreier(&a) && hamming::is_schreier(&b));
            let eng = engine(EmbeddingSpec::Schreier);
            prop_assert_eq!(eng.pair_gap(&a, &b).unwrap(), distance(&a, &b));
        }
    }
}
