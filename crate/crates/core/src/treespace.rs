//! Trees of bounded height, finitely supported integer vectors on them, and
//! exact evaluation of the sup-of-branch-sums norm.
//!
//! A node of the height-`k` tree is a strictly increasing tuple of positive
//! integers of length at most `k`; the empty tuple is the root. The branch
//! functional at a node sums a vector's coefficients over the node's initial
//! segments, and the norm is the supremum of the absolute branch sums.
//!
//! Coefficients are 64-bit integers with mandatory overflow detection, so
//! every norm is an exact integer. The norm supremum is evaluated over the
//! support nodes plus the root only: for any node `t`, the branch sum at `t`
//! equals the branch sum at the deepest prefix of `t` lying in the support,
//! because coefficients elsewhere on the branch are zero. The independent
//! [`prefix_closure_norm`] evaluation cross-checks this as a standing test.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A tree node: strictly increasing positive entries; empty means the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct NodePath(Vec<u32>);

impl NodePath {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&e| e == 0) {
            return Err(Error::EntryOutOfRange(bad));
        }
        if !entries.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parse(format!(
                "node entries must be strictly increasing, got {entries:?}"
            )));
        }
        Ok(NodePath(entries))
    }

    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<u32>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(entries.first().is_none_or(|&e| e >= 1));
        NodePath(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn is_prefix_of(&self, other: &NodePath) -> bool {
        is_prefix(&self.0, &other.0)
    }

    /// Parses `"2,5,9"`; the empty string is the root.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(NodePath::root());
        }
        let entries = text
            .split(',')
            .map(|piece| {
                piece
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad node entry {piece:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        NodePath::new(entries)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl TryFrom<Vec<u32>> for NodePath {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        NodePath::new(v)
    }
}

impl From<NodePath> for Vec<u32> {
    fn from(p: NodePath) -> Vec<u32> {
        p.0
    }
}

fn is_prefix(shorter: &[u32], longer: &[u32]) -> bool {
    shorter.len() <= longer.len() && &longer[..shorter.len()] == shorter
}

/// All initial segments of `t`, shortest first, including the root and `t`.
pub fn prefixes(t: &NodePath) -> Vec<NodePath> {
    (0..=t.len())
        .map(|len| NodePath::from_sorted_unchecked(t.entries()[..len].to_vec()))
        .collect()
}

fn checked_add(a: i64, b: i64) -> Result<i64> {
    a.checked_add(b).ok_or(Error::Overflow("branch sum"))
}

/// A finitely supported integer vector on the tree of height `height`.
///
/// Terms are kept sorted by path (prefixes before extensions), all stored
/// coefficients are nonzero, and every node length is at most `height`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SparseVectorRepr", into = "SparseVectorRepr")]
pub struct SparseVector {
    height: u32,
    terms: Vec<(NodePath, i64)>,
}

impl SparseVector {
    /// Builds from arbitrary terms: sorts, combines duplicates, drops zeros.
    pub fn new(height: u32, terms: Vec<(NodePath, i64)>) -> Result<Self> {
        for (path, _) in &terms {
            if path.len() as u64 > height as u64 {
                return Err(Error::NodeTooLong {
                    len: path.len(),
                    height,
                });
            }
        }
        let mut terms = terms;
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut combined: Vec<(NodePath, i64)> = Vec::with_capacity(terms.len());
        for (path, coeff) in terms {
            match combined.last_mut() {
                Some((last, sum)) if *last == path => *sum = checked_add(*sum, coeff)?,
                _ => combined.push((path, coeff)),
            }
        }
        combined.retain(|(_, c)| *c != 0);
        Ok(SparseVector {
            height,
            terms: combined,
        })
    }

    /// Terms already sorted by path, combined, nonzero, within height.
    pub(crate) fn from_sorted_unchecked(height: u32, terms: Vec<(NodePath, i64)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(terms
            .iter()
            .all(|(p, c)| *c != 0 && p.len() <= height as usize));
        SparseVector { height, terms }
    }

    pub fn zero(height: u32) -> Self {
        SparseVector {
            height,
            terms: Vec::new(),
        }
    }

    /// The unit vector at `path`.
    pub fn basis(height: u32, path: NodePath) -> Result<Self> {
        SparseVector::new(height, vec![(path, 1)])
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn terms(&self) -> &[(NodePath, i64)] {
        &self.terms
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient at `path` (zero when absent).
    pub fn coefficient(&self, path: &NodePath) -> i64 {
        match self.terms.binary_search_by(|(p, _)| p.cmp(path)) {
            Ok(i) => self.terms[i].1,
            Err(_) => 0,
        }
    }

    /// Reinterprets the same coefficients in a tree of another height.
    pub fn at_height(&self, height: u32) -> Result<Self> {
        if let Some((p, _)) = self
            .terms
            .iter()
            .find(|(p, _)| p.len() as u64 > height as u64)
        {
            return Err(Error::NodeTooLong {
                len: p.len(),
                height,
            });
        }
        Ok(SparseVector {
            height,
            terms: self.terms.clone(),
        })
    }

    pub fn checked_add(&self, other: &SparseVector) -> Result<SparseVector> {
        let height = self.height.max(other.height);
        merged_sum(height, &[(self, 1), (other, 1)])
    }

    pub fn checked_sub(&self, other: &SparseVector) -> Result<SparseVector> {
        let height = self.height.max(other.height);
        merged_sum(height, &[(self, 1), (other, -1)])
    }

    pub fn scaled(&self, factor: i64) -> Result<SparseVector> {
        if factor == 0 {
            return Ok(SparseVector::zero(self.height));
        }
        let terms = self
            .terms
            .iter()
            .map(|(p, c)| {
                c.checked_mul(factor)
                    .map(|c| (p.clone(), c))
                    .ok_or(Error::Overflow("coefficient scaling"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseVector {
            height: self.height,
            terms,
        })
    }

    /// Sum of coefficients along the initial segments of `t`.
    pub fn branch_functional(&self, t: &NodePath) -> Result<i64> {
        if t.len() as u64 > self.height as u64 {
            return Err(Error::NodeTooLong {
                len: t.len(),
                height: self.height,
            });
        }
        let mut sum = 0i64;
        for len in 0..=t.len() {
            let prefix = &t.entries()[..len];
            if let Ok(i) = self.terms.binary_search_by(|(p, _)| p.entries().cmp(prefix)) {
                sum = checked_add(sum, self.terms[i].1)?;
            }
        }
        Ok(sum)
    }

    /// The sup of absolute branch sums, evaluated over support nodes plus
    /// the root (see the module docs for why that is exhaustive).
    pub fn norm(&self) -> Result<u64> {
        let mut scanner = NormScanner::new();
        for (path, coeff) in &self.terms {
            scanner.feed(path.entries(), *coeff)?;
        }
        Ok(scanner.finish())
    }
}

/// Wire form: `{"height": k, "terms": [{"path": [...], "coeff": c}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseVectorRepr {
    pub height: u32,
    pub terms: Vec<TermRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermRepr {
    pub path: NodePath,
    pub coeff: i64,
}

impl From<SparseVector> for SparseVectorRepr {
    fn from(v: SparseVector) -> Self {
        SparseVectorRepr {
            height: v.height,
            terms: v
                .terms
                .into_iter()
                .map(|(path, coeff)| TermRepr { path, coeff })
                .collect(),
        }
    }
}

impl TryFrom<SparseVectorRepr> for SparseVector {
    type Error = Error;

    fn try_from(repr: SparseVectorRepr) -> Result<Self> {
        SparseVector::new(
            repr.height,
            repr.terms.into_iter().map(|t| (t.path, t.coeff)).collect(),
        )
    }
}

/// Merge-sums scaled sparse vectors into one materialized vector.
///
/// Inputs are already sorted, so the result costs one linear pass over the
/// combined supports regardless of how many parts there are.
pub fn merged_sum(height: u32, parts: &[(&SparseVector, i64)]) -> Result<SparseVector> {
    for (part, _) in parts {
        if let Some((p, _)) = part
            .terms
            .iter()
            .find(|(p, _)| p.len() as u64 > height as u64)
        {
            return Err(Error::NodeTooLong {
                len: p.len(),
                height,
            });
        }
    }
    let mut terms = Vec::new();
    merge_scaled(parts, |path, coeff| {
        terms.push((NodePath::from_sorted_unchecked(path.to_vec()), coeff));
        Ok(())
    })?;
    Ok(SparseVector::from_sorted_unchecked(height, terms))
}

/// Norm of a signed sum of sparse vectors without materializing the sum.
pub fn merged_norm(parts: &[(&SparseVector, i64)]) -> Result<u64> {
    let mut scanner = NormScanner::new();
    merge_scaled(parts, |path, coeff| scanner.feed(path, coeff))?;
    Ok(scanner.finish())
}

/// K-way merge over the sorted term lists of `parts`, invoking `emit` once
/// per path in lexicographic order with the combined scaled coefficient.
/// Zero sums are skipped.
fn merge_scaled<'a>(
    parts: &[(&'a SparseVector, i64)],
    mut emit: impl FnMut(&'a [u32], i64) -> Result<()>,
) -> Result<()> {
    let mut cursors: Vec<(usize, &'a [(NodePath, i64)], i64)> = parts
        .iter()
        .filter(|(v, factor)| !v.is_zero() && *factor != 0)
        .map(|(v, factor)| (0usize, v.terms(), *factor))
        .collect();
    loop {
        let mut smallest: Option<&'a [u32]> = None;
        for (idx, terms, _) in &cursors {
            if *idx < terms.len() {
                let path = terms[*idx].0.entries();
                if smallest.is_none_or(|s| path < s) {
                    smallest = Some(path);
                }
            }
        }
        let Some(path) = smallest else {
            return Ok(());
        };
        let mut coeff = 0i64;
        for (idx, terms, factor) in &mut cursors {
            if *idx < terms.len() && terms[*idx].0.entries() == path {
                let scaled = terms[*idx]
                    .1
                    .checked_mul(*factor)
                    .ok_or(Error::Overflow("coefficient scaling"))?;
                coeff = checked_add(coeff, scaled)?;
                *idx += 1;
            }
        }
        if coeff != 0 {
            emit(path, coeff)?;
        }
    }
}

/// Streaming branch-sum maximizer over terms arriving in path order.
///
/// Maintains the chain of support prefixes of the current node together
/// with their branch sums; lexicographic arrival guarantees every support
/// prefix of an incoming node is still on the stack when it arrives.
struct NormScanner<'a> {
    stack: Vec<(&'a [u32], i64)>,
    best: u64,
    length_cap: usize,
}

impl<'a> NormScanner<'a> {
    fn new() -> Self {
        NormScanner::with_length_cap(usize::MAX)
    }

    /// A scanner that maximizes only over nodes of length at most `cap`;
    /// deeper nodes still flow through the stack so prefix chains stay
    /// intact.
    fn with_length_cap(cap: usize) -> Self {
        NormScanner {
            stack: Vec::new(),
            best: 0,
            length_cap: cap,
        }
    }

    fn feed(&mut self, path: &'a [u32], coeff: i64) -> Result<()> {
        while let Some((top, _)) = self.stack.last() {
            if is_prefix(top, path) {
                break;
            }
            self.stack.pop();
        }
        let below = self.stack.last().map_or(0, |(_, sum)| *sum);
        let sum = checked_add(below, coeff)?;
        self.stack.push((path, sum));
        if path.len() <= self.length_cap {
            self.best = self.best.max(sum.unsigned_abs());
        }
        Ok(())
    }

    fn finish(self) -> u64 {
        self.best
    }
}

/// Reference norm evaluation: enumerates the branch functional at every
/// node of the prefix closure of the support by direct summation.
///
/// Deliberately shares no code with [`SparseVector::norm`]; the two must
/// agree exactly, and the verification suite holds them to that.
pub fn prefix_closure_norm(vector: &SparseVector) -> Result<u64> {
    let coeffs: HashMap<&[u32], i64> = vector
        .terms()
        .iter()
        .map(|(p, c)| (p.entries(), *c))
        .collect();
    let mut closure: BTreeSet<&[u32]> = BTreeSet::new();
    closure.insert(&[]);
    for (path, _) in vector.terms() {
        for len in 0..=path.len() {
            closure.insert(&path.entries()[..len]);
        }
    }
    let mut best = 0u64;
    for node in closure {
        let mut sum = 0i64;
        for len in 0..=node.len() {
            if let Some(c) = coeffs.get(&node[..len]) {
                sum = checked_add(sum, *c)?;
            }
        }
        best = best.max(sum.unsigned_abs());
    }
    Ok(best)
}

/// A finitely supported element of the direct sum of the tree spaces over
/// all heights, with the sup norm across components.
///
/// Components are stored as runs: a run `(lo, hi, vector)` says every
/// height in `lo..=hi` carries the same coefficient data. Embedded images
/// repeat heavily across heights (the image of an element stabilizes at
/// heights past the element), so runs keep bundles small. The canonical
/// form — sorted, disjoint, nonzero, adjacent equal runs merged — makes
/// structural equality meaningful.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BundleRepr", into = "BundleRepr")]
pub struct BundleVector {
    runs: Vec<Run>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    lo: u32,
    hi: u32,
    vector: SparseVector,
}

impl Run {
    pub fn heights(&self) -> (u32, u32) {
        (self.lo, self.hi)
    }

    pub fn vector(&self) -> &SparseVector {
        &self.vector
    }
}

impl BundleVector {
    pub fn zero() -> Self {
        BundleVector { runs: Vec::new() }
    }

    /// A bundle with a single component at `height`.
    pub fn from_component(height: u32, vector: SparseVector) -> Result<Self> {
        BundleVector::from_runs(vec![(height, height, vector)])
    }

    /// Builds from `(lo, hi, vector)` runs; they must be disjoint and each
    /// vector valid at its run's lowest height.
    pub fn from_runs(runs: Vec<(u32, u32, SparseVector)>) -> Result<Self> {
        let mut out: Vec<Run> = Vec::new();
        let mut sorted = runs;
        sorted.sort_by_key(|(lo, _, _)| *lo);
        for (lo, hi, vector) in sorted {
            if lo == 0 || hi < lo {
                return Err(Error::InvalidSpec(format!("bad height run {lo}..{hi}")));
            }
            if let Some(prev) = out.last() {
                if lo <= prev.hi {
                    return Err(Error::InvalidSpec(format!(
                        "overlapping height runs at {lo}"
                    )));
                }
            }
            let vector = vector.at_height(lo)?;
            if !vector.is_zero() {
                out.push(Run { lo, hi, vector });
            }
        }
        let mut bundle = BundleVector { runs: out };
        bundle.merge_adjacent();
        Ok(bundle)
    }

    fn merge_adjacent(&mut self) {
        let mut merged: Vec<Run> = Vec::with_capacity(self.runs.len());
        for run in self.runs.drain(..) {
            match merged.last_mut() {
                Some(prev)
                    if prev.hi + 1 == run.lo && prev.vector.terms() == run.vector.terms() =>
                {
                    prev.hi = run.hi;
                }
                _ => merged.push(run),
            }
        }
        self.runs = merged;
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_zero(&self) -> bool {
        self.runs.is_empty()
    }

    /// Total stored terms across runs (each run counted once).
    pub fn stored_terms(&self) -> u64 {
        self.runs
            .iter()
            .map(|r| r.vector.support_len() as u64)
            .sum()
    }

    pub fn max_height(&self) -> u32 {
        self.runs.last().map_or(0, |r| r.hi)
    }

    /// The component at `height` (zero when no run covers it).
    pub fn component(&self, height: u32) -> Result<SparseVector> {
        match self.run_covering(height) {
            Some(run) => run.vector.at_height(height),
            None => Ok(SparseVector::zero(height)),
        }
    }

    pub(crate) fn run_covering(&self, height: u32) -> Option<&Run> {
        self.runs.iter().find(|r| r.lo <= height && height <= r.hi)
    }

    pub fn checked_add(&self, other: &BundleVector) -> Result<BundleVector> {
        self.combine(other, 1)
    }

    pub fn checked_sub(&self, other: &BundleVector) -> Result<BundleVector> {
        self.combine(other, -1)
    }

    fn combine(&self, other: &BundleVector, factor: i64) -> Result<BundleVector> {
        bundle_sum(&[(self, 1), (other, factor)])
    }

    /// Sup of component norms. Each run is evaluated once: every height in
    /// a run carries identical coefficients, hence an identical norm.
    pub fn norm(&self) -> Result<u64> {
        let mut best = 0u64;
        for run in &self.runs {
            best = best.max(run.vector.norm()?);
        }
        Ok(best)
    }
}

/// Walks the common refinement of the height runs of `parts`, handing each
/// refined interval the component vectors (with their scale factors) that
/// are live there. Within an interval every part is constant, so a single
/// evaluation per interval covers all its heights.
fn for_each_refined_interval<'a>(
    parts: &[(&'a BundleVector, i64)],
    mut visit: impl FnMut(u32, u32, &[(&'a SparseVector, i64)]) -> Result<()>,
) -> Result<()> {
    let mut cuts = BTreeSet::new();
    for (bundle, _) in parts {
        for run in &bundle.runs {
            cuts.insert(run.lo);
            cuts.insert(run.hi + 1);
        }
    }
    let cuts: Vec<u32> = cuts.into_iter().collect();
    let mut live: Vec<(&SparseVector, i64)> = Vec::with_capacity(parts.len());
    for window in cuts.windows(2) {
        let (lo, hi) = (window[0], window[1] - 1);
        live.clear();
        for (bundle, factor) in parts {
            if let Some(run) = bundle.run_covering(lo) {
                live.push((&run.vector, *factor));
            }
        }
        if !live.is_empty() {
            visit(lo, hi, &live)?;
        }
    }
    Ok(())
}

/// Materialized signed sum of bundles, one merge pass per refined interval.
pub fn bundle_sum(parts: &[(&BundleVector, i64)]) -> Result<BundleVector> {
    let mut runs = Vec::new();
    for_each_refined_interval(parts, |lo, hi, live| {
        let sum = merged_sum(lo, live)?;
        if !sum.is_zero() {
            runs.push(Run {
                lo,
                hi,
                vector: sum,
            });
        }
        Ok(())
    })?;
    let mut bundle = BundleVector { runs };
    bundle.merge_adjacent();
    Ok(bundle)
}

/// One source of `(path, coefficient)` terms in path order: either a
/// sparse vector's term list with a scale factor, or an already merged
/// accumulator of borrowed slices.
enum TermStream<'a, 'b> {
    Scaled {
        terms: &'a [(NodePath, i64)],
        factor: i64,
        idx: usize,
    },
    Merged {
        terms: &'b [(&'a [u32], i64)],
        idx: usize,
    },
}

impl<'a, 'b> TermStream<'a, 'b> {
    fn peek(&self) -> Option<&'a [u32]> {
        match self {
            TermStream::Scaled { terms, idx, .. } => terms.get(*idx).map(|(p, _)| p.entries()),
            TermStream::Merged { terms, idx } => terms.get(*idx).map(|(p, _)| *p),
        }
    }

    fn take(&mut self) -> Result<(&'a [u32], i64)> {
        match self {
            TermStream::Scaled { terms, factor, idx } => {
                let (path, coeff) = &terms[*idx];
                *idx += 1;
                let scaled = coeff
                    .checked_mul(*factor)
                    .ok_or(Error::Overflow("coefficient scaling"))?;
                Ok((path.entries(), scaled))
            }
            TermStream::Merged { terms, idx } => {
                let entry = terms[*idx];
                *idx += 1;
                Ok(entry)
            }
        }
    }
}

/// K-way merge over term streams, emitting each path once with the
/// combined coefficient; zero sums are skipped.
fn merge_streams<'a, 'b>(
    mut streams: Vec<TermStream<'a, 'b>>,
    mut emit: impl FnMut(&'a [u32], i64) -> Result<()>,
) -> Result<()> {
    loop {
        let mut smallest: Option<&'a [u32]> = None;
        for stream in &streams {
            if let Some(path) = stream.peek() {
                if smallest.is_none_or(|s| path < s) {
                    smallest = Some(path);
                }
            }
        }
        let Some(path) = smallest else {
            return Ok(());
        };
        let mut coeff = 0i64;
        for stream in &mut streams {
            if stream.peek() == Some(path) {
                let (_, c) = stream.take()?;
                coeff = checked_add(coeff, c)?;
            }
        }
        if coeff != 0 {
            emit(path, coeff)?;
        }
    }
}

/// Norm of a signed sum of length-filtered families, the shape every
/// embedded image has: a family is a deepest vector together with a top
/// height, and its component at height `h <= top` is the deepest vector
/// restricted to nodes of length at most `h`.
///
/// Since restriction only removes deep nodes, branch sums at the
/// surviving nodes are unchanged, and the component norm at height `h`
/// is the maximum absolute branch sum over support nodes of length at
/// most `h` — nondecreasing in `h`. Grouping heights by which families
/// are live (live means `h <= top`) therefore reduces the whole sup over
/// heights to one length-capped scan per distinct top, taken at the top
/// of each group, over an incrementally merged accumulator.
pub(crate) fn filtered_family_norm(parts: &[(&SparseVector, u32, i64)]) -> Result<u64> {
    let mut order: Vec<usize> = (0..parts.len()).collect();
    // deepest-reaching families first
    order.sort_unstable_by(|&i, &j| parts[j].1.cmp(&parts[i].1));
    let mut best = 0u64;
    let mut acc: Vec<(&[u32], i64)> = Vec::new();
    let mut scratch: Vec<(&[u32], i64)> = Vec::new();
    let mut next = 0usize;
    while next < order.len() {
        let top = parts[order[next]].1;
        let mut streams = Vec::new();
        if !acc.is_empty() {
            streams.push(TermStream::Merged {
                terms: &acc,
                idx: 0,
            });
        }
        while next < order.len() && parts[order[next]].1 == top {
            let (vector, _, sign) = parts[order[next]];
            streams.push(TermStream::Scaled {
                terms: vector.terms(),
                factor: sign,
                idx: 0,
            });
            next += 1;
        }
        scratch.clear();
        let mut scanner = NormScanner::with_length_cap(top as usize);
        merge_streams(streams, |path, coeff| {
            scratch.push((path, coeff));
            scanner.feed(path, coeff)
        })?;
        best = best.max(scanner.finish());
        std::mem::swap(&mut acc, &mut scratch);
    }
    Ok(best)
}

/// Norm of a signed sum of bundles without materializing the sum.
///
/// Walks the refined height intervals from the top down, keeping the
/// merged terms of the live components in a reusable accumulator of
/// borrowed slices. Embedded images tile their height range contiguously
/// and stabilize above their element, so walking downward the live set
/// usually only grows and each step is a cheap incremental merge; any
/// other change of live set falls back to a full rebuild.
pub fn bundle_parts_norm(parts: &[(&BundleVector, i64)]) -> Result<u64> {
    let mut cuts = BTreeSet::new();
    for (bundle, _) in parts {
        for run in &bundle.runs {
            cuts.insert(run.lo);
            cuts.insert(run.hi + 1);
        }
    }
    let cuts: Vec<u32> = cuts.into_iter().collect();
    let mut best = 0u64;
    let mut acc: Vec<(&[u32], i64)> = Vec::new();
    let mut scratch: Vec<(&[u32], i64)> = Vec::new();
    let mut prev_live: Vec<(&SparseVector, i64)> = Vec::new();
    for window in cuts.windows(2).rev() {
        let lo = window[0];
        let live: Vec<(&SparseVector, i64)> = parts
            .iter()
            .filter_map(|(bundle, factor)| {
                bundle.run_covering(lo).map(|run| (&run.vector, *factor))
            })
            .collect();
        if live.is_empty() {
            acc.clear();
            prev_live.clear();
            continue;
        }
        let same = |a: &(&SparseVector, i64), b: &(&SparseVector, i64)| {
            std::ptr::eq(a.0, b.0) && a.1 == b.1
        };
        let grew = !prev_live.is_empty()
            && prev_live
                .iter()
                .all(|p| live.iter().any(|l| same(p, l)));
        let streams: Vec<TermStream> = if grew {
            let mut streams = vec![TermStream::Merged {
                terms: &acc,
                idx: 0,
            }];
            streams.extend(
                live.iter()
                    .filter(|l| !prev_live.iter().any(|p| same(p, l)))
                    .map(|(vector, factor)| TermStream::Scaled {
                        terms: vector.terms(),
                        factor: *factor,
                        idx: 0,
                    }),
            );
            streams
        } else {
            live.iter()
                .map(|(vector, factor)| TermStream::Scaled {
                    terms: vector.terms(),
                    factor: *factor,
                    idx: 0,
                })
                .collect()
        };
        scratch.clear();
        let mut scanner = NormScanner::new();
        merge_streams(streams, |path, coeff| {
            scratch.push((path, coeff));
            scanner.feed(path, coeff)
        })?;
        best = best.max(scanner.finish());
        std::mem::swap(&mut acc, &mut scratch);
        prev_live = live;
    }
    Ok(best)
}

/// Wire form: `{"runs": [{"heights": [lo, hi], "terms": [...]}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleRepr {
    pub runs: Vec<BundleRunRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleRunRepr {
    pub heights: (u32, u32),
    pub terms: Vec<TermRepr>,
}

impl From<BundleVector> for BundleRepr {
    fn from(b: BundleVector) -> Self {
        BundleRepr {
            runs: b
                .runs
                .into_iter()
                .map(|run| BundleRunRepr {
                    heights: (run.lo, run.hi),
                    terms: run
                        .vector
                        .terms
                        .into_iter()
                        .map(|(path, coeff)| TermRepr { path, coeff })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<BundleRepr> for BundleVector {
    type Error = Error;

    fn try_from(repr: BundleRepr) -> Result<Self> {
        BundleVector::from_runs(
            repr.runs
                .into_iter()
                .map(|run| {
                    let vector = SparseVector::new(
                        run.heights.0,
                        run.terms.into_iter().map(|t| (t.path, t.coeff)).collect(),
                    )?;
                    Ok((run.heights.0, run.heights.1, vector))
                })
                .collect::<Result<Vec<_>>>()?,
        )
    }
}
