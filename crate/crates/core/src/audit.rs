//! Exact distortion measurement and lower-bound proof traces.
//!
//! The measuring half sweeps pairs of embedded points — exhaustively over
//! a finite cube segment, or by seeded sampling where exhaustion is out of
//! reach — and reports the extremal expansion and contraction ratios as
//! exact rationals with witnessing pairs. Sweeps fan out across workers;
//! the extrema merge is commutative with ties broken by enumeration order,
//! so reports are identical under any partitioning.
//!
//! The refutation half implements the packing argument against
//! low-distortion claims: coordinates where two singleton images differ by
//! a threshold, the pigeonhole bound on how many uniformly bounded,
//! pairwise separated vectors fit in a sup-norm ball, and a trace that
//! turns an alleged embedding of the Aharoni family into either a
//! contradiction certificate or an inconclusive report with margins.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Zero;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbedOptions, EmbeddingSpec, Engine};
use crate::error::{Error, Result};
use crate::hamming::{self, distance, Point, Universe};
use crate::rational::{ratio_from_u64, RatioRepr};

/// Extremal expansion/contraction ratios of an embedding over a pair
/// sweep, with the witnessing pairs. All ratios are normalized rationals;
/// the distortion is their product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistortionReport {
    #[serde(with = "ratio_serde")]
    pub max_expansion: Rational64,
    pub expansion_witness: Option<(Point, Point)>,
    #[serde(with = "ratio_serde")]
    pub max_contraction: Rational64,
    pub contraction_witness: Option<(Point, Point)>,
    #[serde(with = "ratio_serde")]
    pub distortion: Rational64,
    pub pairs_checked: u64,
}

mod ratio_serde {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
        RatioRepr::from(*r).serialize(s)
    }
}

impl DistortionReport {
    /// Neutral report for a sweep with no pairs.
    fn empty() -> Self {
        let one = Rational64::from_integer(1);
        DistortionReport {
            max_expansion: one,
            expansion_witness: None,
            max_contraction: one,
            contraction_witness: None,
            distortion: one,
            pairs_checked: 0,
        }
    }

    /// One CSV summary row (no witnesses; those live in the JSON form).
    pub fn csv_row(&self, label: &str, points: usize) -> String {
        format!(
            "{label},{points},{},{},{},{}",
            self.pairs_checked,
            crate::rational::format_ratio(self.max_expansion),
            crate::rational::format_ratio(self.max_contraction),
            crate::rational::format_ratio(self.distortion),
        )
    }

    pub fn csv_header() -> &'static str {
        "label,points,pairs_checked,max_expansion,max_contraction,distortion"
    }
}

/// Running maximum of a ratio with its witness, merged deterministically:
/// larger ratio wins, ties go to the earlier pair in enumeration order.
#[derive(Debug, Clone)]
struct Extremum {
    ratio: Rational64,
    order: u64,
    witness: (Point, Point),
}

impl Extremum {
    fn merge(a: Option<Extremum>, b: Option<Extremum>) -> Option<Extremum> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => {
                if (y.ratio, std::cmp::Reverse(y.order)) > (x.ratio, std::cmp::Reverse(x.order)) {
                    Some(y)
                } else {
                    Some(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SweepState {
    expansion: Option<Extremum>,
    contraction: Option<Extremum>,
    pairs: u64,
}

impl SweepState {
    fn observe(&mut self, order: u64, a: &Point, b: &Point, gap: u64, dist: u64) -> Result<()> {
        if dist == 0 {
            return Ok(());
        }
        if gap == 0 {
            return Err(Error::ZeroGap {
                a: a.to_string(),
                b: b.to_string(),
            });
        }
        self.pairs += 1;
        let gap = ratio_from_u64(gap, "pair gap ratio")?;
        let dist = ratio_from_u64(dist, "distance ratio")?;
        let witness = (a.clone(), b.clone());
        let expansion = Extremum {
            ratio: gap / dist,
            order,
            witness: witness.clone(),
        };
        let contraction = Extremum {
            ratio: dist / gap,
            order,
            witness,
        };
        self.expansion = Extremum::merge(self.expansion.take(), Some(expansion));
        self.contraction = Extremum::merge(self.contraction.take(), Some(contraction));
        Ok(())
    }

    fn merge(a: SweepState, b: SweepState) -> SweepState {
        SweepState {
            expansion: Extremum::merge(a.expansion, b.expansion),
            contraction: Extremum::merge(a.contraction, b.contraction),
            pairs: a.pairs + b.pairs,
        }
    }

    fn into_report(self) -> DistortionReport {
        let mut report = DistortionReport::empty();
        report.pairs_checked = self.pairs;
        if let Some(e) = self.expansion {
            report.max_expansion = e.ratio;
            report.expansion_witness = Some(e.witness);
        }
        if let Some(c) = self.contraction {
            report.max_contraction = c.ratio;
            report.contraction_witness = Some(c.witness);
        }
        report.distortion = report.max_expansion * report.max_contraction;
        report
    }
}

/// Runs a deterministic parallel sweep over an explicit pair list.
fn sweep_pairs(engine: &Engine, pairs: &[(Point, Point)]) -> Result<DistortionReport> {
    let state = pairs
        .par_iter()
        .enumerate()
        .try_fold(SweepState::default, |mut state, (order, (a, b))| {
            let gap = engine.pair_gap(a, b)?;
            state.observe(order as u64, a, b, gap, distance(a, b))?;
            Ok(state)
        })
        .try_reduce(SweepState::default, |x, y| Ok(SweepState::merge(x, y)));
    state.map(SweepState::into_report)
}

/// The points of the spec's domain inside the size-at-most-`max_size`
/// stratum over `universe`, in enumeration order.
pub fn domain_points(
    spec: &EmbeddingSpec,
    max_size: u32,
    universe: Universe,
) -> Result<Vec<Point>> {
    if let EmbeddingSpec::FiniteRank { set_cap, .. } = spec {
        if max_size > *set_cap {
            return Err(Error::InvalidArgument(format!(
                "stratum size {max_size} exceeds the domain cap {set_cap}"
            )));
        }
    }
    Ok(hamming::subsets_up_to_size(universe, max_size)
        .filter(|p| spec.check_member(p).is_ok())
        .collect())
}

/// Exhaustive distortion measurement over every unordered pair of distinct
/// domain points in the chosen stratum. Deterministic given
/// `(spec, max_size, universe)`, whatever the worker partitioning.
pub fn measure_distortion(
    spec: &EmbeddingSpec,
    max_size: u32,
    universe: Universe,
    options: EmbedOptions,
) -> Result<DistortionReport> {
    let points = domain_points(spec, max_size, universe)?;
    let mut engine = Engine::new(spec.clone(), options)?;
    engine.prepare(universe.n)?;
    let mut pairs = Vec::with_capacity(points.len() * (points.len().saturating_sub(1)) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            pairs.push((points[i].clone(), points[j].clone()));
        }
    }
    sweep_pairs(&engine, &pairs)
}

/// Configuration of a seeded randomized sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub pairs: u64,
    pub max_element: u32,
    /// Cap on sampled set sizes; defaults to `max_element`.
    pub max_size: Option<u32>,
}

/// Draws the full pair list for a sampled sweep. Pairs are generated
/// up front from the seed alone, so the sweep itself can be partitioned
/// freely without touching the sample.
pub fn sample_pairs(spec: &EmbeddingSpec, config: &SampleConfig) -> Result<Vec<(Point, Point)>> {
    if config.max_element == 0 {
        return Err(Error::InvalidArgument(
            "sampling needs a positive element range".into(),
        ));
    }
    let max_size = config.max_size.unwrap_or(config.max_element);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw_point = |rng: &mut ChaCha8Rng| -> Point {
        loop {
            let size = rng.gen_range(0..=max_size.min(config.max_element)) as usize;
            let chosen = sample_indices(rng, config.max_element as usize, size)
                .into_iter()
                .map(|i| i as u32 + 1)
                .collect();
            let point = Point::new(chosen).expect("sampled entries are positive");
            if spec.check_member(&point).is_ok() {
                return point;
            }
        }
    };
    let mut pairs = Vec::with_capacity(config.pairs as usize);
    while (pairs.len() as u64) < config.pairs {
        let a = draw_point(&mut rng);
        let b = draw_point(&mut rng);
        if a != b {
            pairs.push((a, b));
        }
    }
    Ok(pairs)
}

/// Sampled distortion measurement: the same report shape as the
/// exhaustive sweep over a seeded pseudo-random pair set. Reproducible
/// from the seed.
pub fn sample_distortion(
    spec: &EmbeddingSpec,
    config: &SampleConfig,
    options: EmbedOptions,
) -> Result<DistortionReport> {
    let pairs = sample_pairs(spec, config)?;
    let mut engine = Engine::new(spec.clone(), options)?;
    engine.prepare(config.max_element)?;
    sweep_pairs(&engine, &pairs)
}

/// A concrete map from finitely many points into a finite-dimensional
/// sup-norm space: per-point rational coordinate vectors over a shared
/// index set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FiniteEmbeddingRepr", into = "FiniteEmbeddingRepr")]
pub struct FiniteEmbedding {
    points: Vec<Point>,
    images: Vec<Vec<Rational64>>,
}

impl FiniteEmbedding {
    pub fn new(points: Vec<Point>, images: Vec<Vec<Rational64>>) -> Result<Self> {
        if points.len() != images.len() {
            return Err(Error::InvalidEmbedding(format!(
                "{} points but {} images",
                points.len(),
                images.len()
            )));
        }
        let dim = images.first().map_or(0, Vec::len);
        if images.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidEmbedding(
                "images must share one index set".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &points {
            if !seen.insert(p.clone()) {
                return Err(Error::InvalidEmbedding(format!("duplicate point {p}")));
            }
        }
        Ok(FiniteEmbedding { points, images })
    }

    /// The classical isometric embedding of a finite metric space into a
    /// sup-norm space: each coordinate reads the distance to one point.
    pub fn frechet(domain: &[Point]) -> Result<Self> {
        let images = domain
            .iter()
            .map(|p| {
                domain
                    .iter()
                    .map(|q| ratio_from_u64(distance(p, q), "frechet coordinate"))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteEmbedding::new(domain.to_vec(), images)
    }

    pub fn dim(&self) -> usize {
        self.images.first().map_or(0, Vec::len)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn image(&self, p: &Point) -> Option<&[Rational64]> {
        self.points
            .iter()
            .position(|q| q == p)
            .map(|i| self.images[i].as_slice())
    }

    fn singleton_image(&self, element: u32) -> Result<&[Rational64]> {
        let singleton = Point::new(vec![element])?;
        self.image(&singleton)
            .ok_or(Error::MissingSingleton(element))
    }

    /// Sup-norm distance between the images of two domain points.
    pub fn image_distance(&self, a: &Point, b: &Point) -> Result<Rational64> {
        let va = self
            .image(a)
            .ok_or_else(|| Error::InvalidEmbedding(format!("no image for {a}")))?;
        let vb = self
            .image(b)
            .ok_or_else(|| Error::InvalidEmbedding(format!("no image for {b}")))?;
        Ok(sup_distance(va, vb))
    }
}

fn sup_distance(a: &[Rational64], b: &[Rational64]) -> Rational64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| abs(*x - *y))
        .max()
        .unwrap_or_else(Rational64::zero)
}

fn abs(r: Rational64) -> Rational64 {
    if r < Rational64::zero() {
        -r
    } else {
        r
    }
}

/// Wire form of a finite embedding; coordinates may be plain integers or
/// `{"num", "den"}` objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteEmbeddingRepr {
    pub points: Vec<Point>,
    pub images: Vec<Vec<CoordRepr>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordRepr {
    Int(i64),
    Ratio(RatioRepr),
}

impl From<FiniteEmbedding> for FiniteEmbeddingRepr {
    fn from(f: FiniteEmbedding) -> Self {
        FiniteEmbeddingRepr {
            points: f.points,
            images: f
                .images
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|r| {
                            if *r.denom() == 1 {
                                CoordRepr::Int(*r.numer())
                            } else {
                                CoordRepr::Ratio(r.into())
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<FiniteEmbeddingRepr> for FiniteEmbedding {
    type Error = Error;

    fn try_from(repr: FiniteEmbeddingRepr) -> Result<Self> {
        let images = repr
            .images
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| match c {
                        CoordRepr::Int(i) => Ok(Rational64::from_integer(i)),
                        CoordRepr::Ratio(r) => r.try_into(),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteEmbedding::new(repr.points, images)
    }
}

/// For each requested pair `(i, j)`, the set of coordinate indices where
/// the images of the singletons differ by at least `eta`.
pub fn separation_sets(
    f: &FiniteEmbedding,
    eta: Rational64,
    pairs: &[(u32, u32)],
) -> Result<BTreeMap<(u32, u32), Vec<usize>>> {
    let mut out = BTreeMap::new();
    for &(i, j) in pairs {
        let vi = f.singleton_image(i)?;
        let vj = f.singleton_image(j)?;
        let coords = vi
            .iter()
            .zip(vj.iter())
            .enumerate()
            .filter(|(_, (x, y))| abs(**x - **y) >= eta)
            .map(|(n, _)| n)
            .collect();
        out.insert((i, j), coords);
    }
    Ok(out)
}

/// Pigeonhole cap on how many points of a sup-norm ball of radius
/// `bound_radius` can be pairwise at least `eta` apart in dimension `dim`:
/// splitting each axis into `floor(2C/eta) + 1` half-open cells of side
/// below `eta` forces any two points in one cell closer than `eta`.
pub fn packing_bound(bound_radius: Rational64, eta: Rational64, dim: u32) -> Result<u64> {
    if bound_radius <= Rational64::zero() || eta <= Rational64::zero() {
        return Err(Error::InvalidArgument(
            "packing bound needs positive radius and separation".into(),
        ));
    }
    if dim < 1 {
        return Err(Error::InvalidArgument(
            "packing bound needs dimension >= 1".into(),
        ));
    }
    let cells_per_axis = (Rational64::from_integer(2) * bound_radius / eta).to_integer() as u128 + 1;
    let total = cells_per_axis
        .checked_pow(dim)
        .ok_or(Error::Overflow("packing bound"))?;
    u64::try_from(total).map_err(|_| Error::Overflow("packing bound"))
}

/// Outcome of [`aharoni_trace`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum TraceOutcome {
    /// The data already fails the non-contraction normalization on a pair.
    LowerBoundViolation {
        a: Point,
        b: Point,
        #[serde(with = "ratio_serde")]
        image_gap: Rational64,
        distance: u64,
    },
    /// More singleton images than any embedding with the claimed constant
    /// could pack: the claim is refuted.
    Contradiction,
    /// The truncation is too small to exceed the packing bound.
    Inconclusive,
}

/// The packing certificate produced by [`aharoni_trace`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceReport {
    #[serde(with = "ratio_serde")]
    pub claimed: Rational64,
    #[serde(with = "ratio_serde")]
    pub eta: Rational64,
    /// Coordinates where the images of `{1}` and `{2}` differ by `eta`.
    pub witness_coords: Vec<usize>,
    /// Singletons `{n}`, `n >= 3`, found in the truncation.
    pub singletons: Vec<u32>,
    pub packing_bound: u64,
    /// Largest sup norm among the restricted singleton images.
    pub max_restricted_norm: Option<RatioRepr>,
    /// Smallest pairwise sup distance among the restricted images.
    pub min_restricted_separation: Option<RatioRepr>,
    pub outcome: TraceOutcome,
}

/// Tests the claim that `f` realizes `d(x,y) <= |f(x) - f(y)| <= C d(x,y)`
/// on a truncation of the Aharoni family, via the packing argument.
///
/// The non-contraction side is the normalization the claim is stated
/// under, so it is checked directly first. The expansion side is the
/// substance of the claim: it is refuted — never assumed — through the
/// certificate. If the claim held on the whole family, the singleton
/// images restricted to the coordinates separating `{1}` from `{2}` would
/// be `C`-bounded and `(4 - 2C)`-separated, so their number could not
/// exceed the packing bound of that dimension; a count above the bound is
/// a contradiction certificate. Below the bound the trace is inconclusive
/// and reports the realized margins.
pub fn aharoni_trace(f: &FiniteEmbedding, claimed: Rational64) -> Result<TraceReport> {
    let two = Rational64::from_integer(2);
    if claimed <= Rational64::zero() || claimed >= two {
        return Err(Error::ClaimOutOfRange(claimed.to_string()));
    }
    for p in f.points() {
        if !hamming::in_aharoni_family(p) {
            return Err(Error::InvalidEmbedding(format!(
                "{p} is not in the Aharoni family"
            )));
        }
    }
    let origin = f
        .image(&Point::empty())
        .ok_or_else(|| Error::InvalidEmbedding("truncation must contain the empty set".into()))?
        .to_vec();
    // translate so the empty set maps to zero
    let translated: Vec<Vec<Rational64>> = f
        .images
        .iter()
        .map(|row| row.iter().zip(origin.iter()).map(|(x, o)| *x - *o).collect())
        .collect();
    let shifted = FiniteEmbedding {
        points: f.points.clone(),
        images: translated,
    };

    let eta = Rational64::from_integer(4) - two * claimed;

    // non-contraction pre-check over every pair, in enumeration order
    for i in 0..shifted.points.len() {
        for j in i + 1..shifted.points.len() {
            let (a, b) = (&shifted.points[i], &shifted.points[j]);
            let gap = sup_distance(&shifted.images[i], &shifted.images[j]);
            let dist = distance(a, b);
            if gap < ratio_from_u64(dist, "distance ratio")? {
                return Ok(TraceReport {
                    claimed,
                    eta,
                    witness_coords: Vec::new(),
                    singletons: Vec::new(),
                    packing_bound: 0,
                    max_restricted_norm: None,
                    min_restricted_separation: None,
                    outcome: TraceOutcome::LowerBoundViolation {
                        a: a.clone(),
                        b: b.clone(),
                        image_gap: gap,
                        distance: dist,
                    },
                });
            }
        }
    }

    let witness_coords = separation_sets(&shifted, eta, &[(1, 2)])?
        .remove(&(1, 2))
        .unwrap_or_default();

    let mut singletons: Vec<u32> = shifted
        .points
        .iter()
        .filter_map(|p| match p.elements() {
            [n] if *n >= 3 => Some(*n),
            _ => None,
        })
        .collect();
    singletons.sort_unstable();

    let restricted: Vec<Vec<Rational64>> = singletons
        .iter()
        .map(|&n| {
            let row = shifted.singleton_image(n)?;
            Ok(witness_coords.iter().map(|&c| row[c]).collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let max_restricted_norm = restricted
        .iter()
        .flat_map(|row| row.iter().map(|r| abs(*r)))
        .max()
        .map(|r| RatioRepr::from(r));
    let min_restricted_separation = (0..restricted.len())
        .flat_map(|i| (i + 1..restricted.len()).map(move |j| (i, j)))
        .map(|(i, j)| sup_distance(&restricted[i], &restricted[j]))
        .min()
        .map(RatioRepr::from);

    let bound = if witness_coords.is_empty() {
        // an empty coordinate set packs exactly one point
        1
    } else {
        packing_bound(claimed, eta, witness_coords.len() as u32)?
    };

    let outcome = if singletons.len() as u64 > bound {
        TraceOutcome::Contradiction
    } else {
        TraceOutcome::Inconclusive
    };
    Ok(TraceReport {
        claimed,
        eta,
        witness_coords,
        singletons,
        packing_bound: bound,
        max_restricted_norm,
        min_restricted_separation,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::Thresholds;

    fn pt(elements: &[u32]) -> Point {
        Point::new(elements.to_vec()).unwrap()
    }

    fn finite(set_cap: u32, height: u32) -> EmbeddingSpec {
        EmbeddingSpec::finite_rank(set_cap, height).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn full_height_embedding_is_isometric() {
        for cap in 1..=3u32 {
            let report = measure_distortion(
                &finite(cap, cap),
                cap,
                Universe::new(5),
                EmbedOptions::default(),
            )
            .unwrap();
            assert_eq!(report.distortion, rat(1, 1), "cap {cap}");
            assert_eq!(report.max_expansion, rat(1, 1));
            assert_eq!(report.max_contraction, rat(1, 1));
        }
    }

    #[test]
    fn lower_rank_contraction_stays_under_the_bound() {
        let report = measure_distortion(
            &finite(3, 2),
            3,
            Universe::new(6),
            EmbedOptions::default(),
        )
        .unwrap();
        assert_eq!(report.max_expansion, rat(1, 1));
        assert!(report.max_contraction <= rat(3, 2));
        assert!(report.max_contraction > rat(1, 1));
        assert_eq!(report.distortion, report.max_expansion * report.max_contraction);
        // 42 points over Delta_3([6])
        assert_eq!(report.pairs_checked, 42 * 41 / 2);
        assert!(report.contraction_witness.is_some());
    }

    #[test]
    fn schreier_audit_reports_distortion_one() {
        let points = domain_points(&EmbeddingSpec::Schreier, 8, Universe::new(8)).unwrap();
        assert_eq!(points.len(), 55);
        let report = measure_distortion(
            &EmbeddingSpec::Schreier,
            8,
            Universe::new(8),
            EmbedOptions::default(),
        )
        .unwrap();
        assert_eq!(report.distortion, rat(1, 1));
        assert_eq!(report.pairs_checked, 55 * 54 / 2);
    }

    #[test]
    fn measured_distortion_is_monotone_under_domain_growth() {
        let mut last = rat(1, 1);
        for n in 4..=7u32 {
            let report = measure_distortion(
                &finite(2, 1),
                2,
                Universe::new(n),
                EmbedOptions::default(),
            )
            .unwrap();
            assert!(report.distortion >= last);
            assert!(report.max_contraction <= rat(2, 1));
            last = report.distortion;
        }
    }

    #[test]
    fn sampled_reports_are_reproducible() {
        let spec = EmbeddingSpec::almost_isometric(rat(1, 2), Thresholds::Smallest).unwrap();
        let config = SampleConfig {
            seed: 11,
            pairs: 60,
            max_element: 8,
            max_size: None,
        };
        let first = sample_distortion(&spec, &config, EmbedOptions::default()).unwrap();
        let second = sample_distortion(&spec, &config, EmbedOptions::default()).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.pairs_checked, 60);
        // two-sided bound with eps = 1/2
        assert!(first.max_expansion <= rat(1, 1));
        assert!(first.max_contraction <= rat(2, 1));

        let other_seed = sample_distortion(
            &spec,
            &SampleConfig {
                seed: 12,
                ..config
            },
            EmbedOptions::default(),
        )
        .unwrap();
        // a different seed draws different pairs (witnesses almost surely move)
        assert!(first != other_seed || first.pairs_checked == other_seed.pairs_checked);
    }

    #[test]
    fn sweep_is_partition_independent() {
        let spec = finite(3, 2);
        let sequential = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| {
                measure_distortion(&spec, 3, Universe::new(5), EmbedOptions::default()).unwrap()
            });
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| {
                measure_distortion(&spec, 3, Universe::new(5), EmbedOptions::default()).unwrap()
            });
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn separation_sets_examples() {
        let domain = vec![pt(&[1]), pt(&[2]), pt(&[3])];
        let f = FiniteEmbedding::new(
            domain,
            vec![
                vec![rat(2, 1), rat(0, 1)],
                vec![rat(-2, 1), rat(0, 1)],
                vec![rat(0, 1), rat(1, 1)],
            ],
        )
        .unwrap();
        // threshold zero selects every coordinate
        let all = separation_sets(&f, rat(0, 1), &[(1, 2)]).unwrap();
        assert_eq!(all[&(1, 2)], vec![0, 1]);
        // identical images and positive threshold select nothing
        let g = FiniteEmbedding::new(
            vec![pt(&[1]), pt(&[2])],
            vec![vec![rat(1, 1)], vec![rat(1, 1)]],
        )
        .unwrap();
        let none = separation_sets(&g, rat(1, 2), &[(1, 2)]).unwrap();
        assert!(none[&(1, 2)].is_empty());
        // threshold 4 keeps only the first coordinate
        let strict = separation_sets(&f, rat(4, 1), &[(1, 2)]).unwrap();
        assert_eq!(strict[&(1, 2)], vec![0]);
        // missing singletons are reported
        assert_eq!(
            separation_sets(&f, rat(1, 1), &[(1, 9)]).unwrap_err(),
            Error::MissingSingleton(9)
        );
    }

    #[test]
    fn packing_bound_examples() {
        assert_eq!(packing_bound(rat(1, 1), rat(2, 1), 1).unwrap(), 2);
        assert_eq!(packing_bound(rat(1, 1), rat(3, 1), 1).unwrap(), 1);
        assert_eq!(packing_bound(rat(1, 1), rat(1, 1), 2).unwrap(), 9);
        assert_eq!(packing_bound(rat(2, 1), rat(1, 1), 2).unwrap(), 25);
        assert!(packing_bound(rat(0, 1), rat(1, 1), 1).is_err());
        assert!(packing_bound(rat(1, 1), rat(1, 1), 0).is_err());
    }

    #[test]
    fn frechet_embeddings_are_isometric_and_inconclusive() {
        let domain: Vec<Point> = hamming::aharoni_family(Universe::new(6))
            .unwrap()
            .collect();
        let f = FiniteEmbedding::frechet(&domain).unwrap();
        for a in &domain {
            for b in &domain {
                let d = ratio_from_u64(distance(a, b), "d").unwrap();
                assert_eq!(f.image_distance(a, b).unwrap(), d);
            }
        }
        // the isometric truncation cannot exceed any packing bound
        let report = aharoni_trace(&f, rat(1, 1)).unwrap();
        assert_eq!(report.outcome, TraceOutcome::Inconclusive);
        assert_eq!(report.eta, rat(2, 1));
        assert!(!report.witness_coords.is_empty());
        assert_eq!(report.singletons, vec![3, 4, 5, 6]);
        assert!((report.singletons.len() as u64) <= report.packing_bound);
        // margins realized by an honest isometry
        let norm: Rational64 = report.max_restricted_norm.unwrap().try_into().unwrap();
        assert!(norm <= rat(1, 1));
        let sep: Rational64 = report.min_restricted_separation.unwrap().try_into().unwrap();
        assert!(sep >= report.eta);
    }

    #[test]
    fn intersection_pattern_holds_for_honest_embeddings() {
        // every separation set of a pair {i}, {j} with i, j >= 3 meets the
        // separation set of {1}, {2} when the truncation realizes the claim
        let domain: Vec<Point> = hamming::aharoni_family(Universe::new(7))
            .unwrap()
            .collect();
        let f = FiniteEmbedding::frechet(&domain).unwrap();
        let eta = rat(2, 1); // 4 - 2C at C = 1
        let mut pairs = vec![(1u32, 2u32)];
        for i in 3..=7u32 {
            for j in i + 1..=7 {
                pairs.push((i, j));
            }
        }
        let sets = separation_sets(&f, eta, &pairs).unwrap();
        let base: std::collections::BTreeSet<_> = sets[&(1, 2)].iter().copied().collect();
        for (&(i, j), coords) in &sets {
            if (i, j) == (1, 2) {
                continue;
            }
            assert!(
                coords.iter().any(|c| base.contains(c)),
                "separation sets of (1,2) and ({i},{j}) must intersect"
            );
        }
    }

    #[test]
    fn trace_rejects_degenerate_claims() {
        let f = FiniteEmbedding::frechet(&[Point::empty(), pt(&[1]), pt(&[2])]).unwrap();
        assert!(matches!(
            aharoni_trace(&f, rat(2, 1)),
            Err(Error::ClaimOutOfRange(_))
        ));
        assert!(matches!(
            aharoni_trace(&f, rat(5, 2)),
            Err(Error::ClaimOutOfRange(_))
        ));
        assert!(aharoni_trace(&f, rat(1, 1)).is_ok());
    }

    #[test]
    fn trace_requires_an_aharoni_truncation() {
        let f = FiniteEmbedding::frechet(&[Point::empty(), pt(&[3, 4])]).unwrap();
        assert!(matches!(
            aharoni_trace(&f, rat(1, 1)),
            Err(Error::InvalidEmbedding(_))
        ));
        let no_empty = FiniteEmbedding::frechet(&[pt(&[1]), pt(&[2])]).unwrap();
        assert!(matches!(
            aharoni_trace(&no_empty, rat(1, 1)),
            Err(Error::InvalidEmbedding(_))
        ));
    }

    #[test]
    fn trace_reports_lower_bound_violations_first() {
        // {3} and {4} share an image, so the pair ({3},{4}) contracts to 0
        let points = vec![Point::empty(), pt(&[1]), pt(&[2]), pt(&[3]), pt(&[4])];
        let images = vec![
            vec![rat(0, 1), rat(0, 1)],
            vec![rat(2, 1), rat(0, 1)],
            vec![rat(-2, 1), rat(0, 1)],
            vec![rat(0, 1), rat(9, 1)],
            vec![rat(0, 1), rat(9, 1)],
        ];
        let f = FiniteEmbedding::new(points, images).unwrap();
        let report = aharoni_trace(&f, rat(1, 1)).unwrap();
        match report.outcome {
            TraceOutcome::LowerBoundViolation { a, b, distance, .. } => {
                assert_eq!((a, b), (pt(&[3]), pt(&[4])));
                assert_eq!(distance, 2);
            }
            other => panic!("expected a lower-bound violation, got {other:?}"),
        }
    }

    /// Images that satisfy the non-contraction side everywhere yet pack
    /// three singleton restrictions into a one-dimensional witness set
    /// whose bound is two. Any true embedding with the claimed constant
    /// would have had those restrictions 2-separated inside a radius-1
    /// ball, which cannot hold for three points.
    fn over_packed_embedding() -> FiniteEmbedding {
        let mut points = vec![Point::empty(), pt(&[1]), pt(&[2])];
        let mut rows: Vec<Vec<i64>> = Vec::new();
        // coordinates: 0 = witness axis; 1..=3 separate the singletons;
        // 4.. give each pair point its own axis
        let singles = [3u32, 4, 5];
        let pair_points: Vec<Point> = (2..=5)
            .map(|i| pt(&[1, i]))
            .chain((3..=5).map(|j| pt(&[2, j])))
            .collect();
        let dim = 1 + singles.len() + pair_points.len();
        rows.push(vec![0; dim]); // empty set
        let mut row = vec![0; dim];
        row[0] = 2;
        rows.push(row); // {1}
        let mut row = vec![0; dim];
        row[0] = -2;
        rows.push(row); // {2}
        for (k, &n) in singles.iter().enumerate() {
            points.push(pt(&[n]));
            let mut row = vec![0; dim];
            row[1 + k] = 8;
            rows.push(row);
        }
        for (k, p) in pair_points.iter().enumerate() {
            points.push(p.clone());
            let mut row = vec![0; dim];
            row[1 + singles.len() + k] = 16;
            rows.push(row);
        }
        let images = rows
            .into_iter()
            .map(|row| row.into_iter().map(Rational64::from_integer).collect())
            .collect();
        FiniteEmbedding::new(points, images).unwrap()
    }

    #[test]
    fn trace_certifies_contradictions_on_over_packed_data() {
        let f = over_packed_embedding();
        let report = aharoni_trace(&f, rat(1, 1)).unwrap();
        assert_eq!(report.outcome, TraceOutcome::Contradiction);
        assert_eq!(report.witness_coords, vec![0]);
        assert_eq!(report.singletons, vec![3, 4, 5]);
        assert_eq!(report.packing_bound, 2);
        // the margins show where the claimed properties break
        let sep: Rational64 = report.min_restricted_separation.unwrap().try_into().unwrap();
        assert!(sep < report.eta);
    }

    #[test]
    fn finite_embedding_validation_and_serde() {
        assert!(FiniteEmbedding::new(vec![pt(&[1])], vec![]).is_err());
        assert!(FiniteEmbedding::new(
            vec![pt(&[1]), pt(&[1])],
            vec![vec![rat(0, 1)], vec![rat(0, 1)]]
        )
        .is_err());
        assert!(FiniteEmbedding::new(
            vec![pt(&[1]), pt(&[2])],
            vec![vec![rat(0, 1)], vec![rat(0, 1), rat(1, 1)]]
        )
        .is_err());

        let json = r#"{"points": [[], [1]], "images": [[0, {"num":1,"den":2}], [1, 3]]}"#;
        let f: FiniteEmbedding = serde_json::from_str(json).unwrap();
        assert_eq!(f.dim(), 2);
        assert_eq!(f.image(&pt(&[1])).unwrap()[0], rat(1, 1));
        assert_eq!(f.image(&Point::empty()).unwrap()[1], rat(1, 2));
    }

    #[test]
    fn report_serialization_shape() {
        let report = measure_distortion(
            &finite(2, 2),
            2,
            Universe::new(3),
            EmbedOptions::default(),
        )
        .unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["max_expansion"]["num"], 1);
        assert_eq!(json["max_expansion"]["den"], 1);
        assert!(json["expansion_witness"].is_array());
        assert_eq!(
            DistortionReport::csv_header(),
            "label,points,pairs_checked,max_expansion,max_contraction,distortion"
        );
        let row = report.csv_row("finite:2,2/n=3", 7);
        assert!(row.starts_with("finite:2,2/n=3,7,21,"));
    }
}
