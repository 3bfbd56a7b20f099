//! The counting ring Z[oo, N0] and sequences of its elements.
//!
//! `oo` is the cardinality of an affine line over an algebraically closed
//! field; `N0` is a countably infinite set of excluded points inside such a
//! line. A counting polynomial records the cardinality of a constructible
//! or pro-constructible set in terms of these two symbols. Comparison of
//! sets with `N0` terms goes through the estimate substitutions: a lower
//! estimate replaces `N0` by `oo - k`, an upper estimate by the constant
//! `k`, giving ordinary polynomials in `oo` that bound the true count for
//! all large enough base sets.
//!
//! Counting sequences attach one counting polynomial to every truncation
//! order; eventually they follow a closed form whose coefficients and
//! `oo`-exponents are polynomials in the order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::poly::{rat_int, Int, Rat};

/// An element of Z[oo, N0], keyed by `(oo exponent, N0 exponent)`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CountingPolynomial {
    terms: BTreeMap<(u32, u32), Int>,
}

impl CountingPolynomial {
    pub fn zero() -> Self {
        CountingPolynomial::default()
    }

    pub fn one() -> Self {
        CountingPolynomial::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        let mut p = CountingPolynomial::zero();
        p.add_term(0, 0, Int::from(n));
        p
    }

    pub fn oo() -> Self {
        CountingPolynomial::oo_pow(1)
    }

    pub fn oo_pow(e: u32) -> Self {
        let mut p = CountingPolynomial::zero();
        p.add_term(e, 0, Int::one());
        p
    }

    pub fn n0() -> Self {
        let mut p = CountingPolynomial::zero();
        p.add_term(0, 1, Int::one());
        p
    }

    pub fn term(coeff: Int, oo_exp: u32, n0_exp: u32) -> Self {
        let mut p = CountingPolynomial::zero();
        p.add_term(oo_exp, n0_exp, coeff);
        p
    }

    fn add_term(&mut self, oo_exp: u32, n0_exp: u32, c: Int) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((oo_exp, n0_exp)).or_insert_with(Int::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(oo_exp, n0_exp));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_int().map(|n| n.is_one()).unwrap_or(false)
    }

    pub fn as_int(&self) -> Option<Int> {
        if self.terms.is_empty() {
            return Some(Int::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&(0, 0)) {
                return Some(c.clone());
            }
        }
        None
    }

    /// True if no `N0` occurs.
    pub fn is_n0_free(&self) -> bool {
        self.terms.keys().all(|&(_, n)| n == 0)
    }

    /// Terms in descending canonical order: higher `oo` power first, then
    /// higher `N0` power.
    pub fn terms_desc(&self) -> impl Iterator<Item = (u32, u32, &Int)> {
        self.terms.iter().rev().map(|(&(a, b), c)| (a, b, c))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(a, b), c) in &other.terms {
            out.add_term(a, b, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(a, b), c) in &other.terms {
            out.add_term(a, b, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        CountingPolynomial {
            terms: self.terms.iter().map(|(&k, c)| (k, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = CountingPolynomial::zero();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &other.terms {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Int) -> Self {
        if c.is_zero() {
            return CountingPolynomial::zero();
        }
        CountingPolynomial {
            terms: self.terms.iter().map(|(&k, v)| (k, v * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = CountingPolynomial::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Replaces every `N0` by the given counting polynomial.
    pub fn substitute_n0(&self, r: &CountingPolynomial) -> Self {
        let mut out = CountingPolynomial::zero();
        for (&(a, b), c) in &self.terms {
            let t = CountingPolynomial::term(c.clone(), a, 0).mul(&r.pow(b));
            out = out.add(&t);
        }
        out
    }

    /// Lower estimate of index `k`: substitutes `N0 = oo - k`. Valid as a
    /// lower bound once each excluded set is measured against base sets
    /// missing at least `k` of its points.
    pub fn lower_estimate(&self, k: u32) -> Self {
        let r = CountingPolynomial::oo().sub(&CountingPolynomial::from_int(k as i64));
        self.substitute_n0(&r)
    }

    /// Upper estimate of index `k`: substitutes `N0 = k`.
    pub fn upper_estimate(&self, k: u32) -> Self {
        self.substitute_n0(&CountingPolynomial::from_int(k as i64))
    }

    /// Evaluates at `oo = p`; `None` when an `N0` term is present.
    pub fn eval_at_oo(&self, p: &Int) -> Option<Int> {
        let mut acc = Int::zero();
        for (&(a, b), c) in &self.terms {
            if b != 0 {
                return None;
            }
            acc += c * p.pow(a);
        }
        Some(acc)
    }

    /// Compares two `N0`-free values by their behaviour for large `oo`.
    /// Panics if an `N0` term is present.
    pub fn eventual_cmp(&self, other: &Self) -> Ordering {
        let d = other.sub(self);
        assert!(d.is_n0_free(), "eventual comparison needs N0-free values");
        match d.terms.iter().next_back() {
            None => Ordering::Equal,
            Some((_, c)) => {
                if c.is_positive() {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    /// True if `self < other` for all large enough `oo` (`N0`-free inputs).
    pub fn eventual_less(&self, other: &Self) -> bool {
        self.eventual_cmp(other) == Ordering::Less
    }
}

/// Joins pre-rendered term bodies with signs: `-a + b - c`.
fn join_terms(terms: &[(bool, String)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (neg, body)) in terms.iter().enumerate() {
        if i == 0 {
            if *neg {
                out.push('-');
            }
        } else {
            out.push_str(if *neg { " - " } else { " + " });
        }
        out.push_str(body);
    }
    out
}

fn power_str(base: &str, e: u32) -> Option<String> {
    match e {
        0 => None,
        1 => Some(base.to_string()),
        _ => Some(format!("{base}^{e}")),
    }
}

impl fmt::Display for CountingPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ts = Vec::new();
        for (a, b, c) in self.terms_desc() {
            let mut parts: Vec<String> = Vec::new();
            let abs = c.abs();
            if !abs.is_one() || (a == 0 && b == 0) {
                parts.push(abs.to_string());
            }
            parts.extend(power_str("oo", a));
            parts.extend(power_str("N0", b));
            ts.push((c.is_negative(), parts.join("*")));
        }
        f.write_str(&join_terms(&ts))
    }
}

/// Relation between two sets decided from their counts.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SetRelation {
    Equal,
    Distinct,
    Unknown,
}

/// How much the decision is allowed to conclude.
///
/// `Equality` compares `N0`-free counts directly and falls back to the
/// estimate search otherwise. `Estimate` always runs the search, so it can
/// only ever separate the sets, never prove them equal.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DecideMode {
    Equality,
    Estimate,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DecideResult {
    pub outcome: SetRelation,
    /// Estimate indices `(k1, k2)` that separated the counts, when the
    /// outcome came from the estimate search.
    pub witness: Option<(u32, u32)>,
}

pub const DEFAULT_ESTIMATE_BOUND: u32 = 32;

/// Decides whether a subset is proper from the counts alone.
///
/// `c_sub` counts a set known to be contained in the set counted by
/// `c_sup`. If an upper estimate of the subset count stays eventually below
/// a lower estimate of the superset count, the inclusion is proper and the
/// sets are distinct. With `N0` present the answer is never `Equal`: equal
/// counts of infinite sets do not imply equal sets.
pub fn decide_sets(
    c_sub: &CountingPolynomial,
    c_sup: &CountingPolynomial,
    mode: DecideMode,
    k_max: u32,
) -> DecideResult {
    let n0_free = c_sub.is_n0_free() && c_sup.is_n0_free();
    if mode == DecideMode::Equality && n0_free {
        let outcome = if c_sub == c_sup {
            SetRelation::Equal
        } else {
            SetRelation::Distinct
        };
        return DecideResult {
            outcome,
            witness: None,
        };
    }
    for k1 in 0..=k_max {
        let upper = c_sub.upper_estimate(k1);
        for k2 in 0..=k_max {
            let lower = c_sup.lower_estimate(k2);
            if upper.eventual_less(&lower) {
                return DecideResult {
                    outcome: SetRelation::Distinct,
                    witness: Some((k1, k2)),
                };
            }
        }
    }
    DecideResult {
        outcome: SetRelation::Unknown,
        witness: None,
    }
}

/// A univariate polynomial over Q, used for `oo`-exponents, sequence
/// coefficients and excluded-value families. Coefficients are stored in
/// ascending degree with no trailing zeros.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct UniPoly {
    coeffs: Vec<Rat>,
}

pub type ExponentPolynomial = UniPoly;

impl UniPoly {
    pub fn zero() -> Self {
        UniPoly { coeffs: vec![] }
    }

    pub fn constant(c: Rat) -> Self {
        UniPoly { coeffs: vec![c] }.trimmed()
    }

    pub fn from_int(n: i64) -> Self {
        UniPoly::constant(rat_int(n))
    }

    /// The identity polynomial `l`.
    pub fn x() -> Self {
        UniPoly {
            coeffs: vec![Rat::zero(), Rat::one()],
        }
    }

    pub fn from_coeffs(coeffs: Vec<Rat>) -> Self {
        UniPoly { coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().map(Zero::is_zero).unwrap_or(false) {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn as_rat(&self) -> Option<Rat> {
        match self.coeffs.len() {
            0 => Some(Rat::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    /// Degree; zero polynomial gives `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    /// Coefficients in ascending degree.
    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        UniPoly { coeffs }.trimmed()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        UniPoly { coeffs }.trimmed()
    }

    pub fn neg(&self) -> Self {
        UniPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        UniPoly { coeffs }.trimmed()
    }

    pub fn scale(&self, c: &Rat) -> Self {
        UniPoly {
            coeffs: self.coeffs.iter().map(|k| k * c).collect(),
        }
        .trimmed()
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_int(&self, n: i64) -> Rat {
        self.eval(&rat_int(n))
    }

    /// The binomial coefficient `C(l + shift, n)` as a polynomial in `l`.
    pub fn binomial(shift: i64, n: u32) -> Self {
        let mut p = UniPoly::from_int(1);
        for j in 0..n as i64 {
            // factor (l + shift - j) / (j + 1)
            let f = UniPoly::x().add(&UniPoly::from_int(shift - j));
            p = p.mul(&f).scale(&Rat::new(Int::one(), Int::from(j + 1)));
        }
        p
    }

    /// Unique interpolating polynomial through the given points; panics on
    /// repeated abscissae.
    pub fn interpolate(points: &[(Rat, Rat)]) -> Self {
        let mut acc = UniPoly::zero();
        for (i, (xi, yi)) in points.iter().enumerate() {
            let mut basis = UniPoly::constant(yi.clone());
            for (j, (xj, _)) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dx = xi - xj;
                assert!(!Zero::is_zero(&dx), "repeated interpolation point");
                let factor = UniPoly::x()
                    .sub(&UniPoly::constant(xj.clone()))
                    .scale(&dx.recip());
                basis = basis.mul(&factor);
            }
            acc = acc.add(&basis);
        }
        acc
    }
}

impl fmt::Display for UniPoly {
    /// Renders in the order variable `l`, descending degree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ts = Vec::new();
        for i in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[i];
            if Zero::is_zero(c) {
                continue;
            }
            let abs = c.abs();
            let mut parts: Vec<String> = Vec::new();
            if !abs.is_one() || i == 0 {
                parts.push(abs.to_string());
            }
            parts.extend(power_str("l", i as u32));
            ts.push((c.is_negative(), parts.join("*")));
        }
        f.write_str(&join_terms(&ts))
    }
}

impl Ord for UniPoly {
    /// Total order by eventual value: the sign of the leading coefficient
    /// of the difference decides.
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.sub(other);
        if d.is_zero() {
            Ordering::Equal
        } else if d.leading().is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

impl PartialOrd for UniPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Errors from instantiating a closed form at a concrete order.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum SequenceEvalError {
    #[error("oo-exponent evaluates to a negative number at order {0}")]
    NegativeExponent(i64),
    #[error("closed form takes a non-integer value at order {0}")]
    NonIntegerValue(i64),
    #[error("sequence has no value below its starting order {0}")]
    BeforeStart(u32),
}

/// A closed form for an eventually polynomial counting sequence: a sum of
/// terms `c(l) * oo^e(l) * N0^m` with polynomial coefficient and exponent.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DifferentialCountingPolynomial {
    terms: BTreeMap<(UniPoly, u32), UniPoly>,
}

impl DifferentialCountingPolynomial {
    pub fn zero() -> Self {
        DifferentialCountingPolynomial::default()
    }

    pub fn term(coeff: UniPoly, oo_exp: UniPoly, n0_exp: u32) -> Self {
        let mut p = DifferentialCountingPolynomial::zero();
        p.push(coeff, oo_exp, n0_exp);
        p
    }

    /// A closed form with no order dependence.
    pub fn from_counting(c: &CountingPolynomial) -> Self {
        let mut p = DifferentialCountingPolynomial::zero();
        for (a, b, k) in c.terms_desc() {
            p.push(
                UniPoly::constant(Rat::from_integer(k.clone())),
                UniPoly::from_int(a as i64),
                b,
            );
        }
        p
    }

    fn push(&mut self, coeff: UniPoly, oo_exp: UniPoly, n0_exp: u32) {
        if coeff.is_zero() {
            return;
        }
        let key = (oo_exp, n0_exp);
        let entry = self.terms.entry(key.clone()).or_insert_with(UniPoly::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((e, m), c) in &other.terms {
            out.push(c.clone(), e.clone(), *m);
        }
        out
    }

    /// Terms in descending canonical order: eventually larger `oo`-exponent
    /// first, then higher `N0` power. Yields `(coeff, oo_exp, n0_exp)`.
    pub fn terms_desc(&self) -> impl Iterator<Item = (&UniPoly, &UniPoly, u32)> {
        self.terms.iter().rev().map(|((e, m), c)| (c, e, *m))
    }

    /// Instantiates the closed form at order `l`.
    pub fn eval_at(&self, l: i64) -> Result<CountingPolynomial, SequenceEvalError> {
        let mut out = CountingPolynomial::zero();
        for ((e, m), c) in &self.terms {
            let cv = c.eval_int(l);
            if Zero::is_zero(&cv) {
                continue;
            }
            if !cv.denom().is_one() {
                return Err(SequenceEvalError::NonIntegerValue(l));
            }
            let ev = e.eval_int(l);
            if !ev.denom().is_one() {
                return Err(SequenceEvalError::NonIntegerValue(l));
            }
            let ei = ev.to_integer();
            if ei.is_negative() {
                return Err(SequenceEvalError::NegativeExponent(l));
            }
            let exp = u32::try_from(&ei).map_err(|_| SequenceEvalError::NegativeExponent(l))?;
            out = out.add(&CountingPolynomial::term(cv.to_integer(), exp, *m));
        }
        Ok(out)
    }
}

impl fmt::Display for DifferentialCountingPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ts = Vec::new();
        for (coeff, e, m) in self.terms_desc() {
            let neg = coeff.leading().is_negative();
            let cpos = if neg { coeff.neg() } else { coeff.clone() };
            let mut parts: Vec<String> = Vec::new();
            match cpos.as_rat() {
                Some(r) => {
                    if !r.is_one() || (e.is_zero() && m == 0) {
                        parts.push(r.to_string());
                    }
                }
                None => {
                    let body = cpos.to_string();
                    if cpos.coeffs.iter().filter(|c| !Zero::is_zero(*c)).count() > 1 {
                        parts.push(format!("({body})"));
                    } else {
                        parts.push(body);
                    }
                }
            }
            if !e.is_zero() {
                match e.as_rat() {
                    Some(r) if r.is_one() => parts.push("oo".to_string()),
                    Some(r) => parts.push(format!("oo^{r}")),
                    None if *e == UniPoly::x() => parts.push("oo^l".to_string()),
                    None => parts.push(format!("oo^({e})")),
                }
            }
            parts.extend(power_str("N0", m));
            let body = if parts.is_empty() {
                "1".to_string()
            } else {
                parts.join("*")
            };
            ts.push((neg, body));
        }
        f.write_str(&join_terms(&ts))
    }
}

/// A counting sequence: explicit values from a first claimed order up to a
/// starting order, then a closed form valid from that order on. Orders below
/// the first claimed one have no value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CountingSequence {
    /// Smallest order at which the sequence claims a value.
    first: u32,
    /// Values at orders `first, first + 1, ..., start - 1`.
    prefix: Vec<CountingPolynomial>,
    /// Closed form valid for every order `>= start`.
    tail: DifferentialCountingPolynomial,
}

impl CountingSequence {
    pub fn new(prefix: Vec<CountingPolynomial>, tail: DifferentialCountingPolynomial) -> Self {
        CountingSequence {
            first: 0,
            prefix,
            tail,
        }
    }

    /// A sequence with no values below order `first`.
    pub fn with_first(
        first: u32,
        prefix: Vec<CountingPolynomial>,
        tail: DifferentialCountingPolynomial,
    ) -> Self {
        CountingSequence {
            first,
            prefix,
            tail,
        }
    }

    /// A sequence following its closed form from order zero.
    pub fn from_tail(tail: DifferentialCountingPolynomial) -> Self {
        CountingSequence {
            first: 0,
            prefix: vec![],
            tail,
        }
    }

    pub fn constant(c: &CountingPolynomial) -> Self {
        CountingSequence::from_tail(DifferentialCountingPolynomial::from_counting(c))
    }

    /// Smallest order at which the sequence claims a value.
    pub fn first(&self) -> u32 {
        self.first
    }

    /// First order at which the closed form applies.
    pub fn start(&self) -> u32 {
        self.first + self.prefix.len() as u32
    }

    pub fn prefix(&self) -> &[CountingPolynomial] {
        &self.prefix
    }

    pub fn tail(&self) -> &DifferentialCountingPolynomial {
        &self.tail
    }

    pub fn value_at(&self, l: u32) -> Result<CountingPolynomial, SequenceEvalError> {
        if l < self.first {
            return Err(SequenceEvalError::BeforeStart(self.first));
        }
        let idx = (l - self.first) as usize;
        if idx < self.prefix.len() {
            Ok(self.prefix[idx].clone())
        } else {
            self.tail.eval_at(l as i64)
        }
    }
}

/// Pointwise sum of sequences: prefixes are summed value by value up to the
/// largest starting order, the closed forms beyond it. The sum claims values
/// only from the largest first order on.
pub fn sum_sequences(
    seqs: &[CountingSequence],
) -> Result<CountingSequence, SequenceEvalError> {
    let first = seqs.iter().map(|s| s.first()).max().unwrap_or(0);
    let start = seqs.iter().map(|s| s.start()).max().unwrap_or(0).max(first);
    let mut prefix = Vec::with_capacity((start - first) as usize);
    for l in first..start {
        let mut acc = CountingPolynomial::zero();
        for s in seqs {
            acc = acc.add(&s.value_at(l)?);
        }
        prefix.push(acc);
    }
    let mut tail = DifferentialCountingPolynomial::zero();
    for s in seqs {
        tail = tail.add(s.tail());
    }
    Ok(CountingSequence::with_first(first, prefix, tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oo() -> CountingPolynomial {
        CountingPolynomial::oo()
    }
    fn n0() -> CountingPolynomial {
        CountingPolynomial::n0()
    }
    fn int(n: i64) -> CountingPolynomial {
        CountingPolynomial::from_int(n)
    }

    #[test]
    fn ring_arithmetic() {
        // (oo - N0)^2 = oo^2 - 2 oo N0 + N0^2
        let p = oo().sub(&n0()).pow(2);
        let expect = CountingPolynomial::oo_pow(2)
            .sub(&oo().mul(&n0()).scale(&Int::from(2)))
            .add(&n0().mul(&n0()));
        assert_eq!(p, expect);
        assert_eq!(p.sub(&p), CountingPolynomial::zero());
    }

    #[test]
    fn estimates_substitute_n0() {
        // lower estimate of oo^3 - oo^2 + oo - N0 at k = 1 is oo^3 - oo^2 + 1
        let c = CountingPolynomial::oo_pow(3)
            .sub(&CountingPolynomial::oo_pow(2))
            .add(&oo())
            .sub(&n0());
        let low = c.lower_estimate(1);
        let expect = CountingPolynomial::oo_pow(3)
            .sub(&CountingPolynomial::oo_pow(2))
            .add(&int(1));
        assert_eq!(low, expect);
        // upper estimate at k = 5 replaces N0 by 5
        let up = c.upper_estimate(5);
        let expect = CountingPolynomial::oo_pow(3)
            .sub(&CountingPolynomial::oo_pow(2))
            .add(&oo())
            .sub(&int(5));
        assert_eq!(up, expect);
    }

    #[test]
    fn decide_separates_proper_subset() {
        // subset count oo^3 - oo^2, superset count oo^3 - oo^2 + oo - N0
        let c_sub = CountingPolynomial::oo_pow(3).sub(&CountingPolynomial::oo_pow(2));
        let c_sup = c_sub.add(&oo()).sub(&n0());
        let r = decide_sets(&c_sub, &c_sup, DecideMode::Equality, 32);
        assert_eq!(r.outcome, SetRelation::Distinct);
        assert_eq!(r.witness, Some((0, 1)));
    }

    #[test]
    fn decide_never_claims_equality_with_n0() {
        let c = oo().sub(&n0());
        let r = decide_sets(&c, &c, DecideMode::Equality, 8);
        assert_eq!(r.outcome, SetRelation::Unknown);
        // N0-free equal counts under equality mode
        let r = decide_sets(&oo(), &oo(), DecideMode::Equality, 8);
        assert_eq!(r.outcome, SetRelation::Equal);
        // estimate mode never short-circuits to Equal
        let r = decide_sets(&oo(), &oo(), DecideMode::Estimate, 8);
        assert_eq!(r.outcome, SetRelation::Unknown);
    }

    #[test]
    fn closed_form_evaluation() {
        // (l + 1) oo^l - l oo^(l-1)
        let l = UniPoly::x();
        let dcp = DifferentialCountingPolynomial::term(
            l.add(&UniPoly::from_int(1)),
            l.clone(),
            0,
        )
        .add(&DifferentialCountingPolynomial::term(
            l.neg(),
            l.sub(&UniPoly::from_int(1)),
            0,
        ));
        let at2 = dcp.eval_at(2).unwrap();
        let expect = CountingPolynomial::term(Int::from(3), 2, 0)
            .sub(&CountingPolynomial::term(Int::from(2), 1, 0));
        assert_eq!(at2, expect);
        // the coefficient of the lower term vanishes at l = 0
        let at0 = dcp.eval_at(0).unwrap();
        assert_eq!(at0, int(1));
        // negative exponent with a nonzero coefficient is an error
        let bad = DifferentialCountingPolynomial::term(
            UniPoly::from_int(1),
            l.sub(&UniPoly::from_int(1)),
            0,
        );
        assert!(matches!(
            bad.eval_at(0),
            Err(SequenceEvalError::NegativeExponent(0))
        ));
    }

    #[test]
    fn sequences_sum_pointwise() {
        // one sequence valid from order 1 with prefix value 1, one constant
        let s1 = CountingSequence::new(
            vec![int(1)],
            DifferentialCountingPolynomial::from_counting(&oo().sub(&n0())),
        );
        let s2 = CountingSequence::constant(&oo());
        let sum = sum_sequences(&[s1, s2]).unwrap();
        assert_eq!(sum.start(), 1);
        assert_eq!(sum.value_at(0).unwrap(), oo().add(&int(1)));
        assert_eq!(
            sum.value_at(3).unwrap(),
            oo().scale(&Int::from(2)).sub(&n0())
        );
    }

    #[test]
    fn binomial_polynomials() {
        // C(l + 2, 2) = (l+2)(l+1)/2
        let b = UniPoly::binomial(2, 2);
        assert_eq!(b.eval_int(0), rat_int(1));
        assert_eq!(b.eval_int(3), rat_int(10));
        assert_eq!(b.degree(), Some(2));
        // C(l, 4) vanishes at 0..=3
        let b = UniPoly::binomial(0, 4);
        for i in 0..4 {
            assert_eq!(b.eval_int(i), rat_int(0));
        }
        assert_eq!(b.eval_int(6), rat_int(15));
    }

    #[test]
    fn interpolation_recovers_polynomials() {
        let p = UniPoly::from_coeffs(vec![rat_int(4), rat_int(-3), rat_int(2)]);
        let pts: Vec<(Rat, Rat)> = (0..3).map(|i| (rat_int(i), p.eval_int(i))).collect();
        assert_eq!(UniPoly::interpolate(&pts), p);
    }

    #[test]
    fn canonical_rendering() {
        let c = CountingPolynomial::oo_pow(2)
            .scale(&Int::from(2))
            .sub(&oo().scale(&Int::from(4)));
        assert_eq!(c.to_string(), "2*oo^2 - 4*oo");
        assert_eq!(oo().sub(&n0()).to_string(), "oo - N0");
        assert_eq!(CountingPolynomial::zero().to_string(), "0");
        assert_eq!(int(-3).to_string(), "-3");
        assert_eq!(
            oo().mul(&n0()).neg().add(&int(1)).to_string(),
            "-oo*N0 + 1"
        );

        let l = UniPoly::x();
        let omega = UniPoly::from_coeffs(vec![
            rat_int(4),
            Rat::new(Int::from(17), Int::from(2)),
            Rat::new(Int::from(11), Int::from(2)),
            rat_int(1),
        ]);
        assert_eq!(omega.to_string(), "l^3 + 11/2*l^2 + 17/2*l + 4");
        let dcp = DifferentialCountingPolynomial::term(UniPoly::from_int(1), omega, 0);
        assert_eq!(dcp.to_string(), "oo^(l^3 + 11/2*l^2 + 17/2*l + 4)");

        let dcp = DifferentialCountingPolynomial::term(
            l.add(&UniPoly::from_int(1)),
            l.clone(),
            0,
        )
        .add(&DifferentialCountingPolynomial::term(
            l.neg(),
            l.sub(&UniPoly::from_int(1)),
            0,
        ));
        assert_eq!(dcp.to_string(), "(l + 1)*oo^l - l*oo^(l - 1)");

        let c = CountingPolynomial::oo_pow(3)
            .sub(&CountingPolynomial::oo_pow(2))
            .add(&oo())
            .sub(&n0());
        assert_eq!(
            DifferentialCountingPolynomial::from_counting(&c).to_string(),
            "oo^3 - oo^2 + oo - N0"
        );
    }

    #[test]
    fn unipoly_order_is_eventual() {
        let l = UniPoly::x();
        assert!(l > UniPoly::from_int(1000));
        assert!(l.neg() < UniPoly::from_int(-1000));
        assert!(l.mul(&l) > l.scale(&rat_int(50)));
    }
}
