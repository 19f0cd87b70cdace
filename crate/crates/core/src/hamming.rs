//! Points of the infinite Hamming cube and the symmetric-difference metric.
//!
//! A point is a finite set of positive integers; the distance between two
//! points is the size of their symmetric difference. The module also
//! generates the families used by the embeddings and the auditor: all sets
//! of size at most `k` over a finite universe, the Schreier family, and the
//! two-element family that witnesses Aharoni's lower bound.

use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite subset of the positive integers, stored sorted ascending.
///
/// The empty set is a valid point. Construction sorts, deduplicates and
/// rejects entries below 1, so equality and hashing are structural.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Point(Vec<u32>);

impl Point {
    /// Builds a point from arbitrary entries: sorts, deduplicates, rejects 0.
    pub fn new(mut elements: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = elements.iter().find(|&&e| e == 0) {
            return Err(Error::EntryOutOfRange(bad));
        }
        elements.sort_unstable();
        elements.dedup();
        Ok(Point(elements))
    }

    /// The empty set.
    pub fn empty() -> Self {
        Point(Vec::new())
    }

    /// Wraps a slice already known to be strictly increasing and positive.
    pub(crate) fn from_sorted_unchecked(elements: Vec<u32>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(elements.first().is_none_or(|&e| e >= 1));
        Point(elements)
    }

    pub fn elements(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> Option<u32> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn contains(&self, element: u32) -> bool {
        self.0.binary_search(&element).is_ok()
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &Point) -> Point {
        let kept = self
            .0
            .iter()
            .copied()
            .filter(|e| !other.contains(*e))
            .collect();
        Point(kept)
    }

    /// Parses `"1,4,9"`; the empty string is the empty set.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Point::empty());
        }
        let elements = text
            .split(',')
            .map(|piece| {
                piece
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad set element {piece:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Point::new(elements)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().join(","))
    }
}

impl TryFrom<Vec<u32>> for Point {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<u32> {
    fn from(p: Point) -> Vec<u32> {
        p.0
    }
}

/// A finite truncation `{1..n}` of the index set, bounding exhaustive sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Universe {
    pub n: u32,
}

impl Universe {
    pub fn new(n: u32) -> Self {
        Universe { n }
    }
}

/// Symmetric-difference distance `|a \ b| + |b \ a|`.
///
/// Both inputs are sorted, so a single merge pass counts the one-sided
/// elements exactly.
pub fn distance(a: &Point, b: &Point) -> u64 {
    let (xs, ys) = (a.elements(), b.elements());
    let (mut i, mut j) = (0usize, 0usize);
    let mut diff = 0u64;
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => {
                diff += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    diff + (xs.len() - i) as u64 + (ys.len() - j) as u64
}

/// Streams every subset of `{1..u.n}` of size at most `max_size`, each once,
/// in size-then-lexicographic order. The order is part of the contract:
/// audits key their witness tie-breaking to it.
pub fn subsets_up_to_size(u: Universe, max_size: u32) -> impl Iterator<Item = Point> {
    let n = u.n;
    let cap = max_size.min(n) as usize;
    (0..=cap).flat_map(move |size| {
        (1..=n)
            .combinations(size)
            .map(Point::from_sorted_unchecked)
    })
}

/// Whether `a` is a Schreier set: empty, or of size at most its minimum.
pub fn is_schreier(a: &Point) -> bool {
    match a.min() {
        None => true,
        Some(first) => a.len() as u64 <= first as u64,
    }
}

/// Streams the Schreier sets with maximum element at most `u.n`, in
/// size-then-lexicographic order.
pub fn schreier_family(u: Universe) -> impl Iterator<Item = Point> {
    subsets_up_to_size(u, u.n).filter(is_schreier)
}

/// Whether `a` belongs to the Aharoni witness family: the empty set, any
/// singleton, `{1, i}` with `i >= 2`, or `{2, j}` with `j >= 3`.
pub fn in_aharoni_family(a: &Point) -> bool {
    match a.elements() {
        [] => true,
        [_] => true,
        [1, i] => *i >= 2,
        [2, j] => *j >= 3,
        _ => false,
    }
}

/// Streams the Aharoni witness family truncated to `{1..u.n}`: the empty
/// set, all singletons, all `{1,i}`, then all `{2,j}`, each exactly once.
///
/// The family degenerates below three elements, so `u.n >= 3` is required.
pub fn aharoni_family(u: Universe) -> Result<impl Iterator<Item = Point>> {
    if u.n < 3 {
        return Err(Error::UniverseTooSmall { need: 3, got: u.n });
    }
    let n = u.n;
    let singletons = (1..=n).map(|m| Point::from_sorted_unchecked(vec![m]));
    let with_one = (2..=n).map(|i| Point::from_sorted_unchecked(vec![1, i]));
    let with_two = (3..=n).map(|j| Point::from_sorted_unchecked(vec![2, j]));
    Ok(std::iter::once(Point::empty())
        .chain(singletons)
        .chain(with_one)
        .chain(with_two))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(elements: &[u32]) -> Point {
        Point::new(elements.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pt(&[1, 2]), &pt(&[2, 3])), 2);
        assert_eq!(distance(&pt(&[1, 3, 7]), &pt(&[1, 3, 7])), 0);
        assert_eq!(distance(&Point::empty(), &pt(&[5, 9])), 2);
    }

    #[test]
    fn constructor_sorts_dedups_and_rejects_zero() {
        assert_eq!(Point::new(vec![3, 1, 3]).unwrap(), pt(&[1, 3]));
        assert_eq!(Point::new(vec![2, 0]), Err(Error::EntryOutOfRange(0)));
    }

    #[test]
    fn parse_round_trip() {
        assert_eq!(Point::parse("1, 4,9").unwrap(), pt(&[1, 4, 9]));
        assert_eq!(Point::parse("").unwrap(), Point::empty());
        assert!(Point::parse("1,x").is_err());
    }

    #[test]
    fn subsets_order_and_counts() {
        let points: Vec<_> = subsets_up_to_size(Universe::new(3), 1).collect();
        assert_eq!(
            points,
            vec![Point::empty(), pt(&[1]), pt(&[2]), pt(&[3])]
        );
        // 1 + 4 + C(4,2)
        assert_eq!(subsets_up_to_size(Universe::new(4), 2).count(), 11);
        let only_empty: Vec<_> = subsets_up_to_size(Universe::new(9), 0).collect();
        assert_eq!(only_empty, vec![Point::empty()]);
    }

    #[test]
    fn subsets_are_stratified() {
        let u = Universe::new(5);
        for k in 0..4 {
            let smaller: std::collections::BTreeSet<_> = subsets_up_to_size(u, k).collect();
            let larger: std::collections::BTreeSet<_> = subsets_up_to_size(u, k + 1).collect();
            assert!(smaller.is_subset(&larger));
        }
    }

    #[test]
    fn schreier_examples() {
        assert!(is_schreier(&pt(&[2, 3])));
        assert!(!is_schreier(&pt(&[1, 2])));
        assert!(is_schreier(&Point::empty()));
        assert!(is_schreier(&pt(&[3, 5, 9])));
        assert!(!is_schreier(&pt(&[2, 3, 5])));
    }

    #[test]
    fn aharoni_family_counts_and_membership() {
        let points: Vec<_> = aharoni_family(Universe::new(3)).unwrap().collect();
        assert_eq!(
            points,
            vec![
                Point::empty(),
                pt(&[1]),
                pt(&[2]),
                pt(&[3]),
                pt(&[1, 2]),
                pt(&[1, 3]),
                pt(&[2, 3]),
            ]
        );
        assert_eq!(aharoni_family(Universe::new(4)).unwrap().count(), 10);
        assert!(aharoni_family(Universe::new(2)).is_err());

        assert!(in_aharoni_family(&pt(&[2, 5])));
        assert!(!in_aharoni_family(&pt(&[3, 5])));
    }

    #[test]
    fn aharoni_family_lies_inside_size_two_stratum() {
        for p in aharoni_family(Universe::new(6)).unwrap() {
            assert!(p.len() <= 2);
            assert!(in_aharoni_family(&p));
        }
    }

    #[test]
    fn serde_points_as_arrays() {
        let p = pt(&[1, 4, 9]);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[1,4,9]");
        assert_eq!(serde_json::to_string(&Point::empty()).unwrap(), "[]");
        let back: Point = serde_json::from_str("[9,1,4]").unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Point>("[0]").is_err());
    }

    fn small_point() -> impl Strategy<Value = Point> {
        proptest::collection::vec(1u32..12, 0..6).prop_map(|v| Point::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn metric_axioms(a in small_point(), b in small_point(), c in small_point()) {
            prop_assert_eq!(distance(&a, &b), distance(&b, &a));
            prop_assert_eq!(distance(&a, &b) == 0, a == b);
            prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c));
        }

        #[test]
        fn distance_splits_into_one_sided_parts(a in small_point(), b in small_point()) {
            let one_way = a.difference(&b).len() as u64;
            let other_way = b.difference(&a).len() as u64;
            prop_assert_eq!(distance(&a, &b), one_way + other_way);
        }
    }
}
