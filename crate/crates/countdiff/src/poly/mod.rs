//! Sparse multivariate polynomials over exact coefficient fields.
//!
//! Variables are identified by their position in a ranking; comparing two
//! monomials compares exponents of the highest-ranked variable first, so the
//! canonical term order is ranking-major. The same representation serves
//! plain algebraic variables, power series coefficient variables and
//! differential indeterminates (any key type with a total order works).

mod ratfn;
mod subres;

pub use ratfn::RatFn;
pub use subres::{
    gcd_wrt, mv_gcd, resultant, squarefree_part, subresultant_at, subresultant_chain,
    sylvester_det, Subresultant,
};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Int = num_bigint::BigInt;
pub type Rat = num_rational::BigRational;

/// Rational from a numerator and denominator.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

/// Rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

/// Exact field operations required of polynomial coefficients.
pub trait Field: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Exact division; panics on a zero divisor.
    fn div(&self, other: &Self) -> Self;
    fn from_int(n: i64) -> Self;
}

impl Field for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        <Rat as One>::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn from_int(n: i64) -> Self {
        rat_int(n)
    }
}

/// Key type usable as a polynomial variable.
pub trait VarKey: Ord + Eq + Clone + fmt::Debug {}
impl<T: Ord + Eq + Clone + fmt::Debug> VarKey for T {}

/// An algebraic variable, identified by its ranking position.
/// A larger index means a higher rank.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct Var(pub u32);

/// A power product, stored as (variable, exponent) pairs with ascending
/// variables and strictly positive exponents.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Mono<V: VarKey>(Vec<(V, u32)>);

impl<V: VarKey> Mono<V> {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn var(v: V) -> Self {
        Mono(vec![(v, 1)])
    }

    pub fn var_pow(v: V, e: u32) -> Self {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(v, e)])
        }
    }

    /// Builds a monomial from arbitrary pairs, merging duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut map: BTreeMap<V, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Mono(map.into_iter().collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[(V, u32)] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, v: &V) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    /// The highest-ranked variable, if any.
    pub fn max_var(&self) -> Option<&V> {
        self.0.last().map(|(v, _)| v)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// Componentwise division; `None` if any exponent would go negative.
    pub fn try_div(&self, other: &Self) -> Option<Self> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut i = 0;
        for (v, e) in &other.0 {
            loop {
                if i >= self.0.len() {
                    return None;
                }
                match self.0[i].0.cmp(v) {
                    Ordering::Less => {
                        out.push(self.0[i].clone());
                        i += 1;
                    }
                    Ordering::Equal => {
                        if self.0[i].1 < *e {
                            return None;
                        }
                        if self.0[i].1 > *e {
                            out.push((v.clone(), self.0[i].1 - e));
                        }
                        i += 1;
                        break;
                    }
                    Ordering::Greater => return None,
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        Some(Mono(out))
    }

    /// Removes `v`, returning the exponent it had.
    pub fn without_var(&self, v: &V) -> (Mono<V>, u32) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|(w, ew)| {
                if w == v {
                    e = *ew;
                    false
                } else {
                    true
                }
            })
            .cloned()
            .collect();
        (Mono(rest), e)
    }
}

impl<V: VarKey> Ord for Mono<V> {
    /// Ranking-major exponent order: compare the exponent of the greatest
    /// variable first. This is a lexicographic monomial order with respect
    /// to descending variable rank.
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (self.0.len(), other.0.len());
        loop {
            match (i, j) {
                (0, 0) => return Ordering::Equal,
                (0, _) => return Ordering::Less,
                (_, 0) => return Ordering::Greater,
                _ => {}
            }
            let (va, ea) = &self.0[i - 1];
            let (vb, eb) = &other.0[j - 1];
            match va.cmp(vb) {
                Ordering::Greater => return Ordering::Greater,
                Ordering::Less => return Ordering::Less,
                Ordering::Equal => match ea.cmp(eb) {
                    Ordering::Equal => {
                        i -= 1;
                        j -= 1;
                    }
                    ord => return ord,
                },
            }
        }
    }
}

impl<V: VarKey> PartialOrd for Mono<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse polynomial; no zero coefficients are stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly<V: VarKey, K: Field> {
    terms: BTreeMap<Mono<V>, K>,
}

/// Result of a pseudo-division `ini(q)^exp * p = quot * q + rem`.
#[derive(Clone, Debug)]
pub struct PseudoDiv<V: VarKey, K: Field> {
    pub quot: Poly<V, K>,
    pub rem: Poly<V, K>,
    pub exp: u32,
    /// The initial of the divisor, the multiplier base.
    pub initial: Poly<V, K>,
}

impl<V: VarKey, K: Field> Poly<V, K> {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Poly::constant(K::one())
    }

    pub fn constant(c: K) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Mono::one(), c);
        }
        Poly { terms }
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(K::from_int(n))
    }

    pub fn var(v: V) -> Self {
        Poly::monomial(Mono::var(v), K::one())
    }

    pub fn var_pow(v: V, e: u32) -> Self {
        Poly::monomial(Mono::var_pow(v, e), K::one())
    }

    pub fn monomial(m: Mono<V>, c: K) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Mono<V>, K)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.keys().all(Mono::is_one)
    }

    pub fn as_constant(&self) -> Option<K> {
        if self.terms.is_empty() {
            return Some(K::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Mono::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in increasing canonical order.
    pub fn terms(&self) -> std::collections::btree_map::Iter<'_, Mono<V>, K> {
        self.terms.iter()
    }

    /// The greatest term in the canonical order.
    pub fn leading_term(&self) -> Option<(&Mono<V>, &K)> {
        self.terms.iter().next_back()
    }

    /// The highest-ranked variable occurring anywhere in the polynomial.
    /// With the ranking-major order it sits in the leading term.
    pub fn leader(&self) -> Option<V> {
        self.leading_term().and_then(|(m, _)| m.max_var().cloned())
    }

    pub fn vars(&self) -> BTreeSet<V> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (v, _) in m.pairs() {
                out.insert(v.clone());
            }
        }
        out
    }

    pub fn degree_in(&self, v: &V) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Mono<V>, c: K) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &K) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.mul(c)))
                .collect(),
        }
    }

    pub fn mul_mono(&self, m: &Mono<V>, c: &K) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, k)| (mm.mul(m), k.mul(c)))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Poly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Coefficients of the powers of `v`, index = degree. The returned
    /// polynomials do not contain `v`.
    pub fn coeffs_by_degree(&self, v: &V) -> Vec<Poly<V, K>> {
        let d = self.degree_in(v) as usize;
        let mut out = vec![Poly::zero(); d + 1];
        for (m, c) in &self.terms {
            let (rest, e) = m.without_var(v);
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    /// Rebuilds a polynomial from `v`-coefficients.
    pub fn from_coeffs(v: &V, coeffs: &[Poly<V, K>]) -> Self {
        let mut out = Poly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            let vm = Mono::var_pow(v.clone(), e as u32);
            for (m, k) in &c.terms {
                out.add_term(m.mul(&vm), k.clone());
            }
        }
        out
    }

    /// Coefficient of `v^k` as a polynomial without `v`.
    pub fn coeff_of_power(&self, v: &V, k: u32) -> Poly<V, K> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (rest, e) = m.without_var(v);
            if e == k {
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    /// The initial with respect to `v`: the coefficient of the highest power
    /// of `v`.
    pub fn initial_wrt(&self, v: &V) -> Poly<V, K> {
        self.coeff_of_power(v, self.degree_in(v))
    }

    /// The initial with respect to the polynomial's own leader. For a
    /// constant polynomial this is the polynomial itself.
    pub fn initial(&self) -> Poly<V, K> {
        match self.leader() {
            Some(v) => self.initial_wrt(&v),
            None => self.clone(),
        }
    }

    /// Drops the leading `v`-coefficient: `p - ini * v^deg`.
    pub fn tail_wrt(&self, v: &V) -> Poly<V, K> {
        let d = self.degree_in(v);
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.degree_in(v) != d {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Formal partial derivative with respect to `v` (coefficients constant).
    pub fn derivative(&self, v: &V) -> Poly<V, K> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (rest, e) = m.without_var(v);
            if e > 0 {
                let nm = rest.mul(&Mono::var_pow(v.clone(), e - 1));
                out.add_term(nm, c.mul(&K::from_int(e as i64)));
            }
        }
        out
    }

    /// Pseudo-division of `self` by `q` with respect to `v`:
    /// `ini(q)^exp * self = quot * q + rem` with `deg_v(rem) < deg_v(q)`.
    /// Requires `deg_v(q) >= 1`.
    pub fn pseudo_div(&self, q: &Self, v: &V) -> PseudoDiv<V, K> {
        let dq = q.degree_in(v);
        assert!(dq >= 1, "pseudo-division by a v-free polynomial");
        let ini = q.initial_wrt(v);
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let mut exp = 0;
        loop {
            if rem.is_zero() {
                break;
            }
            let dr = rem.degree_in(v);
            if dr < dq {
                break;
            }
            let c = rem.coeff_of_power(v, dr);
            let shift = Mono::var_pow(v.clone(), dr - dq);
            // rem <- ini*rem - c*v^(dr-dq)*q ; quot <- ini*quot + c*v^(dr-dq)
            rem = rem.mul(&ini).sub(&c.mul_mono(&shift, &K::one()).mul(q));
            quot = quot.mul(&ini).add(&c.mul_mono(&shift, &K::one()));
            exp += 1;
            debug_assert!(rem.degree_in(v) < dr);
        }
        PseudoDiv {
            quot,
            rem,
            exp,
            initial: ini,
        }
    }

    /// Exact multivariate division; `None` if `d` does not divide `self`.
    pub fn try_exact_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (dm, dc) = d.leading_term().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((rm, rc)) = rem.leading_term().map(|(m, c)| (m.clone(), c.clone())) {
            let qm = rm.try_div(&dm)?;
            let qc = rc.div(&dc);
            let t = Poly::monomial(qm, qc);
            rem = rem.sub(&t.mul(d));
            quot = quot.add(&t);
        }
        Some(quot)
    }

    /// Substitutes polynomials for variables. Variables not present in the
    /// map are kept.
    pub fn substitute(&self, map: &BTreeMap<V, Poly<V, K>>) -> Poly<V, K> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for (v, e) in m.pairs() {
                let factor = match map.get(v) {
                    Some(p) => p.pow(*e),
                    None => Poly::var_pow(v.clone(), *e),
                };
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    /// Replaces every coefficient through `f`, dropping zeros.
    pub fn map_coeffs<L: Field>(&self, mut f: impl FnMut(&K) -> L) -> Poly<V, L> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    /// Replaces every variable key through `f` (must be injective and
    /// order-preserving for the result to stay canonical; both are checked
    /// only by debug assertions downstream).
    pub fn map_vars<W: VarKey>(&self, mut f: impl FnMut(&V) -> W) -> Poly<W, K> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let nm = Mono::from_pairs(m.pairs().iter().map(|(v, e)| (f(v), *e)));
            out.add_term(nm, c.clone());
        }
        out
    }
}

impl<V: VarKey> Poly<V, Rat> {
    /// Evaluates at a full assignment of rational values.
    pub fn eval(&self, values: &BTreeMap<V, Rat>) -> Rat {
        let mut acc = <Rat as Zero>::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.pairs() {
                let val = values.get(v).expect("missing variable in evaluation");
                for _ in 0..*e {
                    t *= val;
                }
            }
            acc += t;
        }
        acc
    }

    /// The positive rational `c` such that `self / c` has coprime integer
    /// coefficients. Zero polynomial gives 1.
    pub fn content(&self) -> Rat {
        if self.is_zero() {
            return <Rat as One>::one();
        }
        let mut num_gcd = Int::zero();
        let mut den_lcm = Int::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(&c.numer().abs());
            den_lcm = den_lcm.lcm(c.denom());
        }
        Rat::new(num_gcd, den_lcm)
    }

    /// Divides by the content and fixes the sign so the leading coefficient
    /// in the canonical term order is positive.
    pub fn normalized(&self) -> Poly<V, Rat> {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.content();
        if self.leading_term().map(|(_, k)| k.is_negative()).unwrap_or(false) {
            c = -c;
        }
        let inv = c.recip();
        self.map_coeffs(|k| k * &inv)
    }
}

impl<V: VarKey, K: Field> std::ops::Add for &Poly<V, K> {
    type Output = Poly<V, K>;
    fn add(self, rhs: Self) -> Poly<V, K> {
        Poly::add(self, rhs)
    }
}

impl<V: VarKey, K: Field> std::ops::Sub for &Poly<V, K> {
    type Output = Poly<V, K>;
    fn sub(self, rhs: Self) -> Poly<V, K> {
        Poly::sub(self, rhs)
    }
}

impl<V: VarKey, K: Field> std::ops::Mul for &Poly<V, K> {
    type Output = Poly<V, K>;
    fn mul(self, rhs: Self) -> Poly<V, K> {
        Poly::mul(self, rhs)
    }
}

impl<V: VarKey, K: Field> std::ops::Neg for &Poly<V, K> {
    type Output = Poly<V, K>;
    fn neg(self) -> Poly<V, K> {
        Poly::neg(self)
    }
}
