//! The repository's verification suite: nine checks pinning the
//! quantitative behavior of every component, from the two-sided embedding
//! bounds down to the packing certificates.
//!
//! The same checks back the `verify` CLI subcommand and the acceptance
//! test target. Each check returns a pass detail or a failure description;
//! thresholds, seeds, sweep sizes and time budgets are pinned here.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{
    self, aharoni_trace, measure_distortion, packing_bound, sample_pairs, SampleConfig,
    TraceOutcome,
};
use crate::embeddings::{EmbedOptions, EmbeddingSpec, Engine, Thresholds};
use crate::error::Error;
use crate::hamming::{self, distance, Point, Universe};
use crate::ordinals::{self, cb_index, cb_level_size, derivative, DerivedSpace, Ordinal};
use crate::treespace::{prefix_closure_norm, NodePath, SparseVector};

/// Pass/fail result of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

impl CriterionOutcome {
    /// One line of the pass/fail matrix.
    pub fn render(&self) -> String {
        format!(
            "{} {:>2}  {:<24} ({:>7.2}s)  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.millis as f64 / 1000.0,
            self.detail
        )
    }
}

/// Suite configuration: where report artifacts go.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub artifact_dir: PathBuf,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            artifact_dir: PathBuf::from("reports"),
        }
    }
}

type CheckResult = std::result::Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    run: fn(&SuiteConfig) -> CheckResult,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        name: "two-sided-bound",
        run: check_two_sided_bound,
    },
    Criterion {
        id: 2,
        name: "full-height-isometry",
        run: check_full_height_isometry,
    },
    Criterion {
        id: 3,
        name: "schreier-isometry",
        run: check_schreier_isometry,
    },
    Criterion {
        id: 4,
        name: "almost-isometric-bounds",
        run: check_almost_isometric_bounds,
    },
    Criterion {
        id: 5,
        name: "norm-oracle-equivalence",
        run: check_norm_oracle,
    },
    Criterion {
        id: 6,
        name: "cantor-bendixson",
        run: check_cantor_bendixson,
    },
    Criterion {
        id: 7,
        name: "node-ordinal-map",
        run: check_node_ordinal_map,
    },
    Criterion {
        id: 8,
        name: "packing-certificates",
        run: check_packing_certificates,
    },
    Criterion {
        id: 9,
        name: "tightness-probe",
        run: check_tightness_probe,
    },
];

pub fn criterion_ids() -> Vec<u32> {
    CRITERIA.iter().map(|c| c.id).collect()
}

/// Runs one criterion by id.
pub fn run_criterion(id: u32, config: &SuiteConfig) -> Option<CriterionOutcome> {
    let criterion = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let result = (criterion.run)(config);
    let millis = start.elapsed().as_millis();
    let (passed, detail) = match result {
        Ok(detail) => (true, detail),
        Err(detail) => (false, detail),
    };
    Some(CriterionOutcome {
        id: criterion.id,
        name: criterion.name,
        passed,
        detail,
        millis,
    })
}

/// Runs the whole suite in order.
pub fn run_all(config: &SuiteConfig) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .map(|c| run_criterion(c.id, config).expect("criterion ids are their own index"))
        .collect()
}

fn fail(message: impl Into<String>) -> CheckResult {
    Err(message.into())
}

fn internal(e: Error) -> String {
    format!("internal error: {e}")
}

fn over_time(what: &str, elapsed: Duration, budget: Duration) -> CheckResult {
    fail(format!(
        "{what} took {:.2}s, over the {:.0}s budget",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    ))
}

/// Criterion 1: for every set-size cap up to 4 and every tree height up to
/// the cap, each unordered pair over a 7-element universe satisfies both
/// `height * distance <= cap * gap` and `gap <= distance`, as exact
/// integers. Runs sequentially inside a 60 s budget.
fn check_two_sided_bound(_: &SuiteConfig) -> CheckResult {
    let start = Instant::now();
    let universe = Universe::new(7);
    let mut checked = 0u64;
    for cap in 1..=4u32 {
        let points: Vec<Point> = hamming::subsets_up_to_size(universe, cap).collect();
        for height in 1..=cap {
            let spec = EmbeddingSpec::finite_rank(cap, height).map_err(internal)?;
            let mut engine = Engine::new(spec, EmbedOptions::default()).map_err(internal)?;
            engine.prepare(universe.n).map_err(internal)?;
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    let (a, b) = (&points[i], &points[j]);
                    let d = distance(a, b);
                    let gap = engine.pair_gap(a, b).map_err(internal)?;
                    if height as u64 * d > cap as u64 * gap {
                        return fail(format!(
                            "lower bound fails at cap {cap}, height {height}: \
                             {height}*{d} > {cap}*{gap} for {a}, {b}"
                        ));
                    }
                    if gap > d {
                        return fail(format!(
                            "upper bound fails at cap {cap}, height {height}: \
                             gap {gap} > distance {d} for {a}, {b}"
                        ));
                    }
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return over_time("single-threaded sweep", elapsed, Duration::from_secs(60));
    }
    Ok(format!(
        "{checked} pair checks over caps 1..4, universe 7; zero violations"
    ))
}

/// Criterion 2: the full-height embedding is exactly isometric — measured
/// distortion 1/1 over every cube segment up to size 4 on 7 elements.
fn check_full_height_isometry(_: &SuiteConfig) -> CheckResult {
    let one = Rational64::from_integer(1);
    let mut detail = String::new();
    for cap in 1..=4u32 {
        let spec = EmbeddingSpec::finite_rank(cap, cap).map_err(internal)?;
        let report = measure_distortion(&spec, cap, Universe::new(7), EmbedOptions::default())
            .map_err(internal)?;
        if report.distortion != one {
            return fail(format!(
                "cap {cap}: distortion {} with contraction witness {:?}",
                report.distortion, report.contraction_witness
            ));
        }
        let _ = write!(detail, "cap {cap}: {} pairs exact; ", report.pairs_checked);
    }
    Ok(detail.trim_end_matches([' ', ';']).to_string())
}

/// Criterion 3: the Schreier-family map is isometric on every pair of
/// Schreier sets with maximum element at most 8, checked pair by pair.
fn check_schreier_isometry(_: &SuiteConfig) -> CheckResult {
    let points: Vec<Point> = hamming::schreier_family(Universe::new(8)).collect();
    let mut engine =
        Engine::new(EmbeddingSpec::Schreier, EmbedOptions::default()).map_err(internal)?;
    engine.prepare(8).map_err(internal)?;
    let mut checked = 0u64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (a, b) = (&points[i], &points[j]);
            let gap = engine.pair_gap(a, b).map_err(internal)?;
            let d = distance(a, b);
            if gap != d {
                return fail(format!("gap {gap} != distance {d} for {a}, {b}"));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{} Schreier sets, {checked} pairs, all exactly isometric",
        points.len()
    ))
}

/// Criterion 4: the almost-isometric map respects its two-sided bound on
/// seeded random pairs with elements up to 15, for epsilon 1/2 and 1/4
/// with the default thresholds; admissible pairs are exactly isometric.
/// Budget five minutes.
fn check_almost_isometric_bounds(_: &SuiteConfig) -> CheckResult {
    let start = Instant::now();
    let mut detail = String::new();
    for (num, den) in [(1i64, 2i64), (1, 4)] {
        let epsilon = Rational64::new(num, den);
        let spec = EmbeddingSpec::almost_isometric(epsilon, Thresholds::Smallest)
            .map_err(internal)?;
        let config = SampleConfig {
            seed: 7,
            pairs: 10_000,
            max_element: 15,
            max_size: None,
        };
        let pairs = sample_pairs(&spec, &config).map_err(internal)?;
        let mut engine = Engine::new(spec.clone(), EmbedOptions::default()).map_err(internal)?;
        engine.prepare(config.max_element).map_err(internal)?;
        let (p, q) = (num as u64, den as u64);
        let admissible_pairs = pairs
            .par_iter()
            .try_fold(
                || 0u64,
                |acc, (a, b)| {
                    let d = distance(a, b);
                    let gap = engine.pair_gap(a, b).map_err(internal)?;
                    // (1 - p/q) d <= gap <= d, denominators cleared
                    if (q - p) * d > q * gap {
                        return Err(format!(
                            "lower bound fails at epsilon {epsilon}: \
                             (1-eps)*{d} > {gap} for {a}, {b}"
                        ));
                    }
                    if gap > d {
                        return Err(format!(
                            "upper bound fails at epsilon {epsilon}: {gap} > {d} for {a}, {b}"
                        ));
                    }
                    let both_admissible = spec.is_admissible(a).map_err(internal)?
                        && spec.is_admissible(b).map_err(internal)?;
                    if both_admissible {
                        if gap != d {
                            return Err(format!(
                                "admissible pair not isometric at epsilon {epsilon}: \
                                 gap {gap} != {d} for {a}, {b}"
                            ));
                        }
                        return Ok(acc + 1);
                    }
                    Ok(acc)
                },
            )
            .try_reduce(|| 0u64, |x, y| Ok(x + y))?;
        if admissible_pairs == 0 {
            return fail(format!(
                "sample at epsilon {epsilon} contained no admissible pairs"
            ));
        }
        let _ = write!(
            detail,
            "eps {epsilon}: {} pairs in bound, {admissible_pairs} admissible pairs isometric; ",
            pairs.len()
        );
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        return over_time("sampled sweeps", elapsed, Duration::from_secs(300));
    }
    Ok(detail.trim_end_matches([' ', ';']).to_string())
}

/// Criterion 5: on a thousand seeded random sparse vectors with supports
/// up to 2^14, the support-restricted norm equals the prefix-closure
/// evaluation exactly, every time.
fn check_norm_oracle(_: &SuiteConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut max_support = 0usize;
    for case in 0..1000u32 {
        let height = rng.gen_range(1..=16u32);
        let magnitude = rng.gen_range(0..=14u32);
        let target = rng.gen_range(1..=(1u32 << magnitude)) as usize;
        let mut terms = Vec::with_capacity(target);
        for _ in 0..target {
            let len = rng.gen_range(0..=height.min(10)) as usize;
            let entries = rand::seq::index::sample(&mut rng, 40, len)
                .into_iter()
                .map(|i| i as u32 + 1)
                .collect::<Vec<_>>();
            let mut sorted = entries;
            sorted.sort_unstable();
            let coeff = loop {
                let c = rng.gen_range(-9i64..=9);
                if c != 0 {
                    break c;
                }
            };
            terms.push((NodePath::new(sorted).map_err(internal)?, coeff));
        }
        let vector = SparseVector::new(height, terms).map_err(internal)?;
        max_support = max_support.max(vector.support_len());
        let fast = vector.norm().map_err(internal)?;
        let reference = prefix_closure_norm(&vector).map_err(internal)?;
        if fast != reference {
            return fail(format!(
                "case {case}: support norm {fast} != closure norm {reference} \
                 (support {} nodes, height {height})",
                vector.support_len()
            ));
        }
    }
    Ok(format!(
        "1000 random vectors agree exactly (largest support {max_support} nodes)"
    ))
}

/// Criterion 6: iterated derivation classifies the ordinal intervals —
/// index `k + 1` for `[0, w^k]` with `k <= 6`, and a final level of
/// exactly `n` points for `[0, w^alpha * n]` with `alpha <= 4`, `n <= 5`.
/// Budget one second.
fn check_cantor_bendixson(_: &SuiteConfig) -> CheckResult {
    let start = Instant::now();
    for k in 1..=6u32 {
        let space = DerivedSpace::interval(Ordinal::power(k)).map_err(internal)?;
        let index = cb_index(&space);
        if index != Ordinal::from_integer(k as u64 + 1) {
            return fail(format!("index of [0, w^{k}] came out {index}, wanted {}", k + 1));
        }
        // walk the chain by hand and confirm it empties exactly then
        let mut current = space;
        for _ in 0..=k {
            current = derivative(&current).map_err(internal)?;
        }
        if !current.is_empty() {
            return fail(format!("[0, w^{k}] not empty after {} steps", k + 1));
        }
    }
    for alpha in 1..=4u32 {
        for copies in 1..=5u64 {
            let top = Ordinal::from_terms(vec![(alpha, copies)]).map_err(internal)?;
            let mut space = DerivedSpace::interval(top).map_err(internal)?;
            for _ in 0..alpha {
                space = derivative(&space).map_err(internal)?;
            }
            if space != DerivedSpace::Finite(copies) {
                return fail(format!(
                    "[0, w^{alpha}*{copies}] after {alpha} steps is {space}, wanted {copies} points"
                ));
            }
            let level = cb_level_size(alpha, copies).map_err(internal)?;
            if level != copies {
                return fail(format!("level size ({alpha}, {copies}) returned {level}"));
            }
            let index = cb_index(&DerivedSpace::interval(
                Ordinal::from_terms(vec![(alpha, copies)]).map_err(internal)?,
            ).map_err(internal)?);
            if index != Ordinal::from_integer(alpha as u64 + 1) {
                return fail(format!(
                    "index of [0, w^{alpha}*{copies}] came out {index}"
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(1) {
        return over_time("derivation sweep", elapsed, Duration::from_secs(1));
    }
    Ok("indices k+1 for k <= 6; levels |K| = n for alpha <= 4, n <= 5".into())
}

/// Criterion 7: the node-to-ordinal map is injective over all nodes with
/// entries up to 6 in trees of height up to 3, lands strictly above zero
/// and at most at the top power, and sends the root to the top power.
fn check_node_ordinal_map(_: &SuiteConfig) -> CheckResult {
    let mut nodes_checked = 0u64;
    for k in 1..=3u32 {
        let root_image = ordinals::node_to_ordinal(k, &NodePath::root()).map_err(internal)?;
        if root_image != Ordinal::power(k) {
            return fail(format!("root of height {k} maps to {root_image}"));
        }
        let mut seen: std::collections::HashMap<Ordinal, NodePath> =
            std::collections::HashMap::new();
        for point in hamming::subsets_up_to_size(Universe::new(6), k) {
            let node = NodePath::new(point.elements().to_vec()).map_err(internal)?;
            let image = ordinals::node_to_ordinal(k, &node).map_err(internal)?;
            if image <= Ordinal::zero() || image > Ordinal::power(k) {
                return fail(format!("image {image} of {node} escapes (0, w^{k}]"));
            }
            if let Some(previous) = seen.insert(image.clone(), node.clone()) {
                return fail(format!(
                    "collision in height {k}: {previous} and {node} both map to {image}"
                ));
            }
            nodes_checked += 1;
        }
    }
    Ok(format!("{nodes_checked} nodes, zero collisions, root to top power"))
}

/// Exhaustive maximum-separated-set search on the integer grid
/// `{-radius..radius}^dim` with pairwise sup-distance at least `eta`,
/// by branch and bound. Reference oracle for the pigeonhole formula.
fn max_separated_grid(radius: i64, eta: i64, dim: u32) -> u64 {
    let mut points: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..dim {
        points = points
            .into_iter()
            .flat_map(|p| {
                (-radius..=radius).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    fn recurse(
        points: &[Vec<i64>],
        eta: i64,
        next: usize,
        chosen: &mut Vec<usize>,
        best: &mut u64,
    ) {
        if (chosen.len() + (points.len() - next)) as u64 <= *best {
            return;
        }
        if next == points.len() {
            *best = (*best).max(chosen.len() as u64);
            return;
        }
        let fits = chosen.iter().all(|&c| {
            points[c]
                .iter()
                .zip(&points[next])
                .map(|(a, b)| (a - b).abs())
                .max()
                .unwrap_or(0)
                >= eta
        });
        if fits {
            chosen.push(next);
            recurse(points, eta, next + 1, chosen, best);
            chosen.pop();
        }
        recurse(points, eta, next + 1, chosen, best);
    }
    let mut best = 0u64;
    recurse(&points, eta, 0, &mut Vec::new(), &mut best);
    best
}

/// A fabricated truncation whose singleton images are squeezed onto a
/// single witness coordinate: three of them where a true embedding with
/// the claimed constant could pack at most two. The non-contraction side
/// holds everywhere, so the packing certificate is what catches it.
fn over_packed_fixture() -> Result<audit::FiniteEmbedding, Error> {
    let pt = |e: &[u32]| Point::new(e.to_vec());
    let mut points = vec![Point::empty(), pt(&[1])?, pt(&[2])?];
    let singles = [3u32, 4, 5];
    let pair_points: Vec<Point> = (2..=5)
        .map(|i| pt(&[1, i]))
        .chain((3..=5).map(|j| pt(&[2, j])))
        .collect::<Result<_, _>>()?;
    let dim = 1 + singles.len() + pair_points.len();
    let mut rows: Vec<Vec<i64>> = vec![vec![0; dim]];
    let mut row = vec![0; dim];
    row[0] = 2;
    rows.push(row);
    let mut row = vec![0; dim];
    row[0] = -2;
    rows.push(row);
    for (k, &n) in singles.iter().enumerate() {
        points.push(pt(&[n])?);
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
        .map(|r| r.into_iter().map(Rational64::from_integer).collect())
        .collect();
    audit::FiniteEmbedding::new(points, images)
}

/// Criterion 8: the pigeonhole packing bound equals the exhaustive
/// maximum-separated-set search on 1-D and 2-D integer grids for the
/// pinned radius/separation pairs; the trace rejects claims of 2 or more
/// and certifies a contradiction on the over-packed fixture.
fn check_packing_certificates(_: &SuiteConfig) -> CheckResult {
    let mut combos = 0u32;
    for (radius, eta) in [(1i64, 1i64), (1, 2), (2, 1)] {
        for dim in 1..=2u32 {
            let formula = packing_bound(
                Rational64::from_integer(radius),
                Rational64::from_integer(eta),
                dim,
            )
            .map_err(internal)?;
            let searched = max_separated_grid(radius, eta, dim);
            if formula != searched {
                return fail(format!(
                    "radius {radius}, separation {eta}, dim {dim}: \
                     formula {formula} != exhaustive {searched}"
                ));
            }
            combos += 1;
        }
    }

    let fixture = over_packed_fixture().map_err(internal)?;
    for claim in [Rational64::from_integer(2), Rational64::new(5, 2)] {
        match aharoni_trace(&fixture, claim) {
            Err(Error::ClaimOutOfRange(_)) => {}
            other => return fail(format!("claim {claim} not rejected: {other:?}")),
        }
    }
    let report = aharoni_trace(&fixture, Rational64::from_integer(1)).map_err(internal)?;
    if report.outcome != TraceOutcome::Contradiction {
        return fail(format!(
            "over-packed fixture produced {:?}, wanted a contradiction \
             ({} singletons against bound {})",
            report.outcome,
            report.singletons.len(),
            report.packing_bound
        ));
    }
    Ok(format!(
        "{combos} grid searches match the formula; claim >= 2 rejected; \
         contradiction certified ({} singletons > bound {})",
        report.singletons.len(),
        report.packing_bound
    ))
}

/// Criterion 9: the measured distortion of the height-(cap-1) embedding
/// over growing universes is nondecreasing and never exceeds
/// `cap/(cap-1)`, with expansion never above 1; the convergence table is
/// written out as a CSV artifact.
fn check_tightness_probe(config: &SuiteConfig) -> CheckResult {
    let one = Rational64::from_integer(1);
    let mut table = String::from("set_cap,height,n,points,pairs_checked,max_expansion,max_contraction,distortion\n");
    let mut detail = String::new();
    for cap in [2u32, 3] {
        let height = cap - 1;
        let spec = EmbeddingSpec::finite_rank(cap, height).map_err(internal)?;
        let ceiling = Rational64::new(cap as i64, cap as i64 - 1);
        let mut previous = Rational64::from_integer(0);
        let mut last = previous;
        for n in 4..=9u32 {
            let universe = Universe::new(n);
            let points = audit::domain_points(&spec, cap, universe).map_err(internal)?;
            let report = measure_distortion(&spec, cap, universe, EmbedOptions::default())
                .map_err(internal)?;
            if report.max_expansion > one {
                return fail(format!(
                    "expansion {} above 1 at cap {cap}, n {n}",
                    report.max_expansion
                ));
            }
            if report.distortion > ceiling {
                return fail(format!(
                    "distortion {} exceeds {ceiling} at cap {cap}, n {n}",
                    report.distortion
                ));
            }
            if report.distortion < previous {
                return fail(format!(
                    "distortion dropped from {previous} to {} at cap {cap}, n {n}",
                    report.distortion
                ));
            }
            previous = report.distortion;
            last = report.distortion;
            let _ = writeln!(
                table,
                "{cap},{height},{n},{},{},{},{},{}",
                points.len(),
                report.pairs_checked,
                crate::rational::format_ratio(report.max_expansion),
                crate::rational::format_ratio(report.max_contraction),
                crate::rational::format_ratio(report.distortion),
            );
        }
        let _ = write!(
            detail,
            "cap {cap}: distortion climbs to {} (ceiling {ceiling}); ",
            crate::rational::format_ratio(last)
        );
    }
    std::fs::create_dir_all(&config.artifact_dir)
        .map_err(|e| format!("cannot create {}: {e}", config.artifact_dir.display()))?;
    let path = config.artifact_dir.join("tightness_probe.csv");
    std::fs::write(&path, table).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    let _ = write!(detail, "table at {}", path.display());
    Ok(detail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_search_matches_known_values() {
        assert_eq!(max_separated_grid(1, 2, 1), 2);
        assert_eq!(max_separated_grid(1, 3, 1), 1);
        assert_eq!(max_separated_grid(1, 1, 2), 9);
        assert_eq!(max_separated_grid(2, 1, 1), 5);
        assert_eq!(max_separated_grid(1, 2, 2), 4);
    }

    #[test]
    fn criterion_ids_are_one_through_nine() {
        assert_eq!(criterion_ids(), (1..=9).collect::<Vec<_>>());
    }

    #[test]
    fn unknown_criterion_is_none() {
        assert!(run_criterion(77, &SuiteConfig::default()).is_none());
    }

    #[test]
    fn fast_criteria_pass() {
        let config = SuiteConfig {
            artifact_dir: std::env::temp_dir().join("cubetree-suite-unit"),
        };
        for id in [6, 7, 8] {
            let outcome = run_criterion(id, &config).unwrap();
            assert!(outcome.passed, "criterion {id}: {}", outcome.detail);
        }
    }
}
