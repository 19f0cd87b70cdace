//! Cantor-normal-form ordinals below the first power tower step, the
//! Cantor-Bendixson derivation on homeomorphism types of ordinal
//! intervals, and the map sending tree nodes to ordinals.
//!
//! An ordinal is either a finite sum of terms `w^e * c` with strictly
//! decreasing exponents and positive coefficients, or the distinguished
//! top value `w^w`. Ordinal arithmetic is implemented only as far as the
//! constructions need it: merging weakly decreasing term lists into
//! canonical form and comparing canonical forms.
//!
//! The derivation works on homeomorphism types, not point sets: a compact
//! ordinal interval `[0, g]` loses its isolated points, and what remains
//! is again a finite set or an ordinal interval. That is exactly the data
//! the Cantor-Bendixson index needs. The top interval `[0, w^w]` is a
//! fixed point of the type-level step even though genuine derivation
//! strictly shrinks the point set, so single-step derivation refuses it
//! and the index handles it as a closed form.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::treespace::NodePath;

/// One Cantor-normal-form term `w^exponent * coefficient`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CnfTerm {
    pub exponent: u32,
    pub coefficient: u64,
}

/// An ordinal below `w^w` in Cantor normal form, or the top value `w^w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ordinal {
    /// Strictly decreasing exponents, coefficients at least 1; the empty
    /// list is zero.
    Cnf(Vec<CnfTerm>),
    /// The distinguished top value.
    OmegaOmega,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal::Cnf(Vec::new())
    }

    pub fn from_integer(n: u64) -> Self {
        if n == 0 {
            Ordinal::zero()
        } else {
            Ordinal::Cnf(vec![CnfTerm {
                exponent: 0,
                coefficient: n,
            }])
        }
    }

    /// `w^exponent`.
    pub fn power(exponent: u32) -> Self {
        Ordinal::Cnf(vec![CnfTerm {
            exponent,
            coefficient: 1,
        }])
    }

    /// Builds from `(exponent, coefficient)` pairs with strictly decreasing
    /// exponents and positive coefficients.
    pub fn from_terms(terms: Vec<(u32, u64)>) -> Result<Self> {
        if !terms.windows(2).all(|w| w[0].0 > w[1].0) {
            return Err(Error::InvalidOrdinal(
                "exponents must be strictly decreasing".into(),
            ));
        }
        if terms.iter().any(|(_, c)| *c == 0) {
            return Err(Error::InvalidOrdinal("coefficients must be >= 1".into()));
        }
        Ok(Ordinal::Cnf(
            terms
                .into_iter()
                .map(|(exponent, coefficient)| CnfTerm {
                    exponent,
                    coefficient,
                })
                .collect(),
        ))
    }

    /// Normalizes a weakly decreasing term list into canonical form:
    /// adjacent terms with equal exponents merge, zero coefficients drop.
    pub fn from_weakly_decreasing(terms: Vec<(u32, u64)>) -> Result<Self> {
        if !terms.windows(2).all(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidOrdinal(
                "exponents must be weakly decreasing".into(),
            ));
        }
        let mut out: Vec<CnfTerm> = Vec::with_capacity(terms.len());
        for (exponent, coefficient) in terms {
            if coefficient == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.exponent == exponent => {
                    last.coefficient = last
                        .coefficient
                        .checked_add(coefficient)
                        .ok_or(Error::Overflow("ordinal coefficient"))?;
                }
                _ => out.push(CnfTerm {
                    exponent,
                    coefficient,
                }),
            }
        }
        Ok(Ordinal::Cnf(out))
    }

    pub fn terms(&self) -> Option<&[CnfTerm]> {
        match self {
            Ordinal::Cnf(terms) => Some(terms),
            Ordinal::OmegaOmega => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Ordinal::Cnf(terms) if terms.is_empty())
    }

    /// The value as a plain integer, when it is one.
    pub fn as_finite(&self) -> Option<u64> {
        match self {
            Ordinal::Cnf(terms) => match terms.as_slice() {
                [] => Some(0),
                [CnfTerm {
                    exponent: 0,
                    coefficient,
                }] => Some(*coefficient),
                _ => None,
            },
            Ordinal::OmegaOmega => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_finite().is_some()
    }

    /// Leading exponent of a nonzero canonical form.
    pub fn leading_exponent(&self) -> Option<u32> {
        match self {
            Ordinal::Cnf(terms) => terms.first().map(|t| t.exponent),
            Ordinal::OmegaOmega => None,
        }
    }
}

/// Total order consistent with ordinal order; the top value beats every
/// canonical form, and canonical forms compare term by term. With a common
/// leading prefix, the side whose next term has the larger exponent (or
/// equal exponent and larger coefficient) dominates the whole tail of the
/// other side.
impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ordinal::OmegaOmega, Ordinal::OmegaOmega) => Ordering::Equal,
            (Ordinal::OmegaOmega, Ordinal::Cnf(_)) => Ordering::Greater,
            (Ordinal::Cnf(_), Ordinal::OmegaOmega) => Ordering::Less,
            (Ordinal::Cnf(a), Ordinal::Cnf(b)) => {
                for (ta, tb) in a.iter().zip(b.iter()) {
                    match ta
                        .exponent
                        .cmp(&tb.exponent)
                        .then(ta.coefficient.cmp(&tb.coefficient))
                    {
                        Ordering::Equal => continue,
                        decided => return decided,
                    }
                }
                a.len().cmp(&b.len())
            }
        }
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ordinal::OmegaOmega => write!(f, "w^w"),
            Ordinal::Cnf(terms) if terms.is_empty() => write!(f, "0"),
            Ordinal::Cnf(terms) => {
                for (i, term) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    match term.exponent {
                        0 => write!(f, "{}", term.coefficient)?,
                        1 => {
                            write!(f, "w")?;
                            if term.coefficient > 1 {
                                write!(f, "*{}", term.coefficient)?;
                            }
                        }
                        e => {
                            write!(f, "w^{e}")?;
                            if term.coefficient > 1 {
                                write!(f, "*{}", term.coefficient)?;
                            }
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Ordinal {
    type Err = Error;

    /// Grammar: terms joined by `+`; a term is `w^w`, `w^E`, `w^E*C`, `w`,
    /// `w*C`, or a plain integer. Exponents must arrive strictly
    /// decreasing (canonical form); `w^w` only stands alone.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty ordinal".into()));
        }
        if text == "w^w" {
            return Ok(Ordinal::OmegaOmega);
        }
        if text == "0" {
            return Ok(Ordinal::zero());
        }
        let mut terms = Vec::new();
        for raw in text.split('+') {
            let piece = raw.trim();
            if piece == "w^w" {
                return Err(Error::Parse(
                    "w^w cannot appear inside a sum".into(),
                ));
            }
            terms.push(parse_term(piece)?);
        }
        Ordinal::from_terms(terms)
    }
}

fn parse_term(piece: &str) -> Result<(u32, u64)> {
    let bad = || Error::Parse(format!("bad ordinal term {piece:?}"));
    if let Some(rest) = piece.strip_prefix("w^") {
        let (exp_text, coeff_text) = match rest.split_once('*') {
            Some((e, c)) => (e.trim(), Some(c.trim())),
            None => (rest.trim(), None),
        };
        let exponent: u32 = exp_text.parse().map_err(|_| bad())?;
        let coefficient: u64 = match coeff_text {
            Some(c) => c.parse().map_err(|_| bad())?,
            None => 1,
        };
        if coefficient == 0 {
            return Err(bad());
        }
        Ok((exponent, coefficient))
    } else if let Some(rest) = piece.strip_prefix('w') {
        let coefficient: u64 = match rest.strip_prefix('*') {
            Some(c) => c.trim().parse().map_err(|_| bad())?,
            None if rest.trim().is_empty() => 1,
            None => return Err(bad()),
        };
        if coefficient == 0 {
            return Err(bad());
        }
        Ok((1, coefficient))
    } else {
        let coefficient: u64 = piece.parse().map_err(|_| bad())?;
        if coefficient == 0 {
            return Err(bad());
        }
        Ok((0, coefficient))
    }
}

/// Homeomorphism type of an iterated derivative: empty, a finite discrete
/// space, or a compact ordinal interval `[0, top]` with infinite top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivedSpace {
    Empty,
    /// A discrete space with `count >= 1` points.
    Finite(u64),
    /// The interval `[0, top]`; the constructor keeps `top` infinite.
    Interval(Ordinal),
}

impl DerivedSpace {
    /// The type of `[0, top]`: a finite interval is a finite discrete
    /// space with `top + 1` points, anything else stays an interval.
    pub fn interval(top: Ordinal) -> Result<Self> {
        match top.as_finite() {
            Some(n) => Ok(DerivedSpace::Finite(
                n.checked_add(1).ok_or(Error::Overflow("interval size"))?,
            )),
            None => Ok(DerivedSpace::Interval(top)),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, DerivedSpace::Empty)
    }
}

impl fmt::Display for DerivedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivedSpace::Empty => write!(f, "(empty)"),
            DerivedSpace::Finite(n) => write!(f, "{{{n} point{}}}", if *n == 1 { "" } else { "s" }),
            DerivedSpace::Interval(top) => write!(f, "[0, {top}]"),
        }
    }
}

/// One Cantor-Bendixson step: removes the isolated points.
///
/// A finite space is discrete, so it derives to empty. For an interval
/// `[0, g]` the accumulation points are the limit ordinals up to `g`;
/// writing `g` in canonical form, the finite part drops and every other
/// term loses one power, giving a value `d`. When `d` is finite the limit
/// ordinals form a discrete set of `d` points; when `d` is infinite the
/// set `[1, d]` is homeomorphic to `[0, d]` (a shift absorbs the missing
/// endpoint).
pub fn derivative(space: &DerivedSpace) -> Result<DerivedSpace> {
    match space {
        DerivedSpace::Empty => Ok(DerivedSpace::Empty),
        DerivedSpace::Finite(_) => Ok(DerivedSpace::Empty),
        DerivedSpace::Interval(Ordinal::OmegaOmega) => Err(Error::TopIntervalDerivative),
        DerivedSpace::Interval(Ordinal::Cnf(terms)) => {
            let dropped: Vec<(u32, u64)> = terms
                .iter()
                .filter(|t| t.exponent > 0)
                .map(|t| (t.exponent - 1, t.coefficient))
                .collect();
            let value = Ordinal::from_weakly_decreasing(dropped)?;
            match value.as_finite() {
                Some(0) => Ok(DerivedSpace::Empty),
                Some(n) => Ok(DerivedSpace::Finite(n)),
                None => Ok(DerivedSpace::Interval(value)),
            }
        }
    }
}

/// The full derivative chain, from the space itself down to empty.
pub fn derivative_chain(space: &DerivedSpace) -> Result<Vec<DerivedSpace>> {
    let mut chain = vec![space.clone()];
    while !chain.last().unwrap().is_empty() {
        chain.push(derivative(chain.last().unwrap())?);
    }
    Ok(chain)
}

/// The Cantor-Bendixson index: the least number of derivation steps after
/// which the space stops changing. Empty is the only fixed point of the
/// step, so the index counts the steps down to empty; the top interval is
/// answered in closed form as `w + 1` (its type-level step would never
/// terminate).
pub fn cb_index(space: &DerivedSpace) -> Ordinal {
    if matches!(space, DerivedSpace::Interval(Ordinal::OmegaOmega)) {
        return Ordinal::from_terms(vec![(1, 1), (0, 1)]).expect("w + 1 is canonical");
    }
    let mut steps = 0u64;
    let mut current = space.clone();
    while !current.is_empty() {
        current = derivative(&current).expect("non-top intervals always derive");
        steps += 1;
    }
    Ordinal::from_integer(steps)
}

/// Size of the last nonempty derivative of `[0, w^alpha * copies]`,
/// computed by running `alpha` derivation steps and reading off the
/// finite level.
pub fn cb_level_size(alpha: u32, copies: u64) -> Result<u64> {
    if alpha < 1 || copies < 1 {
        return Err(Error::InvalidOrdinal(
            "level size needs alpha >= 1 and copies >= 1".into(),
        ));
    }
    let top = Ordinal::from_terms(vec![(alpha, copies)])?;
    let mut space = DerivedSpace::interval(top)?;
    for _ in 0..alpha {
        space = derivative(&space)?;
    }
    match space {
        DerivedSpace::Finite(n) => Ok(n),
        other => Err(Error::InvalidOrdinal(format!(
            "expected a finite level after {alpha} steps, got {other}"
        ))),
    }
}

/// The ordinal assigned to a node of the height-`k` tree: the root maps to
/// `w^k`, and a node `(i_1, ..., i_r)` maps to
/// `sum_{j<r} w^(k-j) * (i_j - i_(j-1) - 1) + w^(k-r) * (i_r - i_(r-1))`
/// with `i_0 = 0`. The image of a non-root node lies strictly between `0`
/// and `w^k`.
pub fn node_to_ordinal(k: u32, node: &NodePath) -> Result<Ordinal> {
    if k < 1 {
        return Err(Error::InvalidOrdinal("tree height must be >= 1".into()));
    }
    if node.len() as u64 > k as u64 {
        return Err(Error::NodeTooLong {
            len: node.len(),
            height: k,
        });
    }
    if node.is_root() {
        return Ok(Ordinal::power(k));
    }
    let entries = node.entries();
    let depth = entries.len();
    let mut terms = Vec::with_capacity(depth);
    let mut previous = 0u32;
    for (index, &entry) in entries.iter().enumerate() {
        let position = index + 1;
        let step = (entry - previous) as u64;
        let coefficient = if position < depth { step - 1 } else { step };
        terms.push((k - position as u32, coefficient));
        previous = entry;
    }
    Ordinal::from_weakly_decreasing(terms)
}
