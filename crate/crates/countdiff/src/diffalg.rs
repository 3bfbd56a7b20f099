//! Differential polynomial rings over ℚ(x₁,…,xₙ).
//!
//! A differential variable is one derivative of one unknown function,
//! indexed by a multi-index over the base variables. Differential
//! polynomials are sparse polynomials in these variables with rational
//! functions of the base variables as coefficients. The module provides the
//! orderly ranking used everywhere downstream, the total derivation, Ritt
//! reduction, the substitution of power-series coefficient symbols for
//! derivatives, Janet division with completion, and the construction of the
//! order-truncated algebraic systems whose solutions are the truncated
//! power-series solutions of a differential system.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::poly::{Field, Int, Mono, Poly, Rat, RatFn, Var};
use crate::sigma::{QPoly, SigmaSystem};

const MAX_COMPLETION_ADDITIONS: usize = 4096;

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum DiffError {
    #[error("a coefficient has a pole at the expansion point")]
    PoleAtExpansionPoint,
    #[error("derivative {0} lies outside the coefficient universe")]
    OutsideUniverse(String),
    #[error("system is not simple: {0}")]
    NotSimple(String),
    #[error("an initial or separant vanishes identically at the expansion point")]
    VanishingInitialOrSeparant,
    #[error("leader completion exceeded its limit")]
    CompletionLimit,
    #[error("expansion point has {got} coordinates, expected {expected}")]
    BadExpansionPoint { expected: usize, got: usize },
    #[error("a ranking must list every declared function exactly once")]
    BadRanking,
}

/// Exponent vector of a derivation operator ∂^μ.
///
/// The derived `Ord` is lexicographic and is only used to keep collections
/// canonically ordered; the ranking order lives on [`DiffVar`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total order of the derivation: the sum of the entries.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// The index with entry `i` raised by one.
    pub fn bump(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    /// Componentwise difference, if nonnegative.
    pub fn try_sub(&self, other: &Self) -> Option<Self> {
        debug_assert_eq!(self.len(), other.len());
        let mut v = Vec::with_capacity(self.len());
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            v.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(v))
    }

    /// Componentwise comparison: every entry at least as large.
    pub fn dominates(&self, other: &Self) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a >= b)
    }

    /// Componentwise maximum.
    pub fn join(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }
}

/// One derivative of one unknown function.
///
/// `func` is the function's ranking priority: greater values rank higher.
/// The total order is the orderly ranking: lower derivation order ranks
/// lower; ties break by function priority, then reverse-lexicographically
/// on the multi-index (scanning from the last base variable, the smaller
/// entry ranks greater, so derivatives leaning on earlier base variables
/// dominate).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DiffVar {
    pub func: u16,
    pub mu: MultiIndex,
}

impl DiffVar {
    pub fn new(func: u16, mu: MultiIndex) -> Self {
        DiffVar { func, mu }
    }

    pub fn order(&self) -> u32 {
        self.mu.order()
    }
}

impl Ord for DiffVar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mu
            .order()
            .cmp(&other.mu.order())
            .then_with(|| self.func.cmp(&other.func))
            .then_with(|| {
                for i in (0..self.mu.len()).rev() {
                    let (a, b) = (self.mu.get(i), other.mu.get(i));
                    if a != b {
                        return if a < b { Ordering::Greater } else { Ordering::Less };
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for DiffVar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A differential polynomial: coefficients are rational functions of the
/// base variables.
pub type DiffPoly = Poly<DiffVar, RatFn>;

/// The derivation order of a polynomial: the order of its leader, which is
/// maximal among its variables under any orderly ranking.
pub fn order_of(p: &DiffPoly) -> Option<u32> {
    p.leader().map(|v| v.order())
}

/// Separant: the partial derivative with respect to the leader.
pub fn separant(p: &DiffPoly) -> DiffPoly {
    match p.leader() {
        Some(v) => p.derivative(&v),
        None => DiffPoly::zero(),
    }
}

/// Applies the total derivation with respect to base variable `i`:
/// coefficients are differentiated as rational functions and every
/// differential variable contributes through the chain rule.
pub fn derive(p: &DiffPoly, i: usize) -> DiffPoly {
    let xi = Var(i as u32);
    let mut out = DiffPoly::zero();
    for (m, c) in p.terms() {
        let dc = c.derivative(&xi);
        if !dc.is_zero() {
            out = out.add(&DiffPoly::monomial(m.clone(), dc));
        }
        for (idx, (dv, e)) in m.pairs().iter().enumerate() {
            let bumped = DiffVar::new(dv.func, dv.mu.bump(i));
            let mut rest = Vec::new();
            for (k, (w, f)) in m.pairs().iter().enumerate() {
                let f2 = if k == idx { *f - 1 } else { *f };
                if f2 > 0 {
                    rest.push((w.clone(), f2));
                }
            }
            let mono = Mono::from_pairs(rest).mul(&Mono::var(bumped));
            let coeff = c.mul(&RatFn::from_rat(Rat::from_integer(Int::from(*e))));
            out = out.add(&DiffPoly::monomial(mono, coeff));
        }
    }
    out
}

/// Applies ∂^θ by iterating [`derive`].
pub fn derive_multi(p: &DiffPoly, theta: &MultiIndex) -> DiffPoly {
    let mut q = p.clone();
    for i in 0..theta.len() {
        for _ in 0..theta.get(i) {
            q = derive(&q, i);
        }
    }
    q
}

/// One pseudo-division multiplier accumulated during reduction.
#[derive(Clone, PartialEq, Debug)]
pub struct ReductionStep {
    pub multiplier: DiffPoly,
    pub exponent: u32,
}

/// Differential reduction: repeatedly eliminates the greatest occurrence of
/// a derivative of a reducer leader. A proper derivative of a reducer is
/// linear in its own leader (with the reducer's separant as coefficient),
/// so any positive degree is reducible; the reducer itself requires its
/// leader degree. Returns the fully reduced polynomial and the
/// pseudo-division multipliers in application order.
pub fn ritt_reduce(p: &DiffPoly, reducers: &[DiffPoly]) -> (DiffPoly, Vec<ReductionStep>) {
    let mut cur = p.clone();
    let mut steps = Vec::new();
    'outer: loop {
        let vars: Vec<DiffVar> = cur.vars().into_iter().collect();
        for v in vars.iter().rev() {
            for g in reducers {
                let Some(w) = g.leader() else { continue };
                if v.func != w.func || !v.mu.dominates(&w.mu) {
                    continue;
                }
                let theta = v.mu.try_sub(&w.mu).expect("dominating index subtracts");
                let (reducer, threshold) = if theta.order() == 0 {
                    (g.clone(), g.degree_in(&w))
                } else {
                    (derive_multi(g, &theta), 1)
                };
                if cur.degree_in(v) >= threshold {
                    let pd = cur.pseudo_div(&reducer, v);
                    if pd.exp > 0 {
                        steps.push(ReductionStep {
                            multiplier: pd.initial.clone(),
                            exponent: pd.exp,
                        });
                    }
                    cur = pd.rem;
                    continue 'outer;
                }
            }
        }
        return (cur, steps);
    }
}

/// The enumeration of power-series coefficient symbols up to a maximal
/// derivation order, in ranking order. Position in the enumeration is the
/// algebraic variable index, so algebraic leaders agree with the ranking.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoeffUniverse {
    vars: Vec<DiffVar>,
    index: BTreeMap<DiffVar, u32>,
    func_names: Vec<String>,
    n_indep: usize,
    max_order: u32,
}

impl CoeffUniverse {
    /// All coefficient symbols `(j, μ)` with `|μ| <= max_order`, for every
    /// function name. `func_names` is indexed by ranking priority.
    pub fn new(func_names: Vec<String>, n_indep: usize, max_order: u32) -> Self {
        assert!(n_indep >= 1, "at least one base variable");
        assert!(!func_names.is_empty(), "at least one function");
        let mut vars = Vec::new();
        for mu in multi_indices_up_to(n_indep, max_order) {
            for j in 0..func_names.len() as u16 {
                vars.push(DiffVar::new(j, mu.clone()));
            }
        }
        vars.sort();
        let index = vars
            .iter()
            .enumerate()
            .map(|(i, dv)| (dv.clone(), i as u32))
            .collect();
        CoeffUniverse {
            vars,
            index,
            func_names,
            n_indep,
            max_order,
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn n_indep(&self) -> usize {
        self.n_indep
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn func_names(&self) -> &[String] {
        &self.func_names
    }

    pub fn var_of(&self, dv: &DiffVar) -> Option<Var> {
        self.index.get(dv).map(|i| Var(*i))
    }

    pub fn diff_var_of(&self, v: Var) -> &DiffVar {
        &self.vars[v.0 as usize]
    }

    /// The ambient variable list, in ranking order.
    pub fn variables(&self) -> Vec<Var> {
        (0..self.vars.len() as u32).map(Var).collect()
    }

    /// Canonical display name, e.g. `g(u1,2)` or `g(u,1,0)`.
    pub fn name(&self, v: Var) -> String {
        let dv = self.diff_var_of(v);
        let idx: Vec<String> = dv.mu.entries().iter().map(|e| e.to_string()).collect();
        format!("g({},{})", self.func_names[dv.func as usize], idx.join(","))
    }
}

fn multi_indices_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos == cur.len() {
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[pos] = e;
            rec(pos + 1, left - e, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, max_order, &mut cur, &mut out);
    out
}

fn zeta_map(zeta: &[Rat]) -> BTreeMap<Var, Rat> {
    zeta.iter()
        .enumerate()
        .map(|(i, z)| (Var(i as u32), z.clone()))
        .collect()
}

/// Substitutes a coefficient symbol for every derivative and evaluates the
/// rational-function coefficients at the expansion point.
pub fn rho(p: &DiffPoly, zeta: &[Rat], uni: &CoeffUniverse) -> Result<QPoly, DiffError> {
    if zeta.len() != uni.n_indep() {
        return Err(DiffError::BadExpansionPoint {
            expected: uni.n_indep(),
            got: zeta.len(),
        });
    }
    let at = zeta_map(zeta);
    let mut out = QPoly::zero();
    for (m, c) in p.terms() {
        let scalar = c.eval(&at).ok_or(DiffError::PoleAtExpansionPoint)?;
        if num_traits::Zero::is_zero(&scalar) {
            continue;
        }
        let mut pairs = Vec::with_capacity(m.pairs().len());
        for (dv, e) in m.pairs() {
            let v = uni
                .var_of(dv)
                .ok_or_else(|| DiffError::OutsideUniverse(format!("{dv:?}")))?;
            pairs.push((v, *e));
        }
        out = out.add(&QPoly::monomial(Mono::from_pairs(pairs), scalar));
    }
    Ok(out)
}

/// Replaces an equation by its first derivatives together with its
/// coefficient-level image; the solution set is unchanged.
pub fn postpone(
    p: &DiffPoly,
    zeta: &[Rat],
    uni: &CoeffUniverse,
) -> Result<(Vec<DiffPoly>, QPoly), DiffError> {
    let derivatives = (0..uni.n_indep()).map(|i| derive(p, i)).collect();
    let image = rho(p, zeta, uni)?;
    Ok((derivatives, image))
}

/// For each base variable, whether it is multiplicative for `nu` within
/// `set` under the Janet division: entry `i` is multiplicative when `nu`
/// attains the maximal `i`-entry among the members agreeing with it on all
/// earlier entries.
pub fn janet_multiplicative(set: &[MultiIndex], nu: &MultiIndex) -> Vec<bool> {
    let n = nu.len();
    let mut mult = vec![false; n];
    for i in 0..n {
        let max_i = set
            .iter()
            .filter(|mu| (0..i).all(|k| mu.get(k) == nu.get(k)))
            .map(|mu| mu.get(i))
            .max()
            .unwrap_or(0);
        mult[i] = nu.get(i) == max_i;
    }
    mult
}

/// Whether `mu` lies in the Janet cone of `nu` within `set`: it dominates
/// `nu` and agrees with it on every non-multiplicative entry.
pub fn janet_cone_contains(set: &[MultiIndex], nu: &MultiIndex, mu: &MultiIndex) -> bool {
    if !mu.dominates(nu) {
        return false;
    }
    let mult = janet_multiplicative(set, nu);
    (0..nu.len()).all(|i| mult[i] || mu.get(i) == nu.get(i))
}

/// Completes a set of indices with attached payloads until every
/// non-multiplicative prolongation is covered by some Janet cone; the added
/// index's payload is produced by `prolong` from its parent. After
/// completion the Janet cones partition the full cone union.
pub fn janet_complete_with<T: Clone>(
    items: Vec<(MultiIndex, T)>,
    mut prolong: impl FnMut(&T, usize) -> T,
) -> Result<Vec<(MultiIndex, T)>, DiffError> {
    let mut items = items;
    let mut additions = 0usize;
    loop {
        let set: Vec<MultiIndex> = items.iter().map(|(m, _)| m.clone()).collect();
        let mut next: Option<(MultiIndex, T)> = None;
        'scan: for (nu, payload) in &items {
            let mult = janet_multiplicative(&set, nu);
            for i in 0..nu.len() {
                if mult[i] {
                    continue;
                }
                let cand = nu.bump(i);
                let covered = set.iter().any(|m| janet_cone_contains(&set, m, &cand));
                if !covered {
                    next = Some((cand, prolong(payload, i)));
                    break 'scan;
                }
            }
        }
        match next {
            Some(item) => {
                additions += 1;
                if additions > MAX_COMPLETION_ADDITIONS {
                    return Err(DiffError::CompletionLimit);
                }
                items.push(item);
            }
            None => return Ok(items),
        }
    }
}

/// A system of differential equations over ℚ(x₁,…,xₙ). Function names are
/// indexed by ranking priority.
#[derive(Clone, PartialEq, Debug)]
pub struct DifferentialSystem {
    pub n_indep: usize,
    pub func_names: Vec<String>,
    pub equations: Vec<DiffPoly>,
}

impl DifferentialSystem {
    pub fn new(n_indep: usize, func_names: Vec<String>, equations: Vec<DiffPoly>) -> Self {
        DifferentialSystem {
            n_indep,
            func_names,
            equations,
        }
    }

    /// Rebuilds the system with its functions ranked in the given order,
    /// highest priority first. The list must name every function exactly
    /// once; jet variables keep their derivation operators and only their
    /// priorities move.
    pub fn with_ranking(&self, highest_first: &[String]) -> Result<DifferentialSystem, DiffError> {
        let n = self.func_names.len();
        if highest_first.len() != n {
            return Err(DiffError::BadRanking);
        }
        let mut new_names = vec![String::new(); n];
        let mut new_id = vec![u16::MAX; n];
        for (pos, name) in highest_first.iter().enumerate() {
            let old = self
                .func_names
                .iter()
                .position(|f| f == name)
                .ok_or(DiffError::BadRanking)?;
            if new_id[old] != u16::MAX {
                return Err(DiffError::BadRanking);
            }
            new_id[old] = (n - 1 - pos) as u16;
            new_names[n - 1 - pos] = name.clone();
        }
        let equations = self
            .equations
            .iter()
            .map(|eq| {
                Poly::from_terms(eq.terms().map(|(m, c)| {
                    let mono = Mono::from_pairs(m.pairs().iter().map(|(dv, e)| {
                        (DiffVar::new(new_id[dv.func as usize], dv.mu.clone()), *e)
                    }));
                    (mono, c.clone())
                }))
            })
            .collect();
        Ok(DifferentialSystem::new(
            self.n_indep,
            new_names,
            equations,
        ))
    }

    /// Equation leaders as `(priority, multi-index)` pairs.
    pub fn leaders(&self) -> Result<Vec<DiffVar>, DiffError> {
        let mut out = Vec::new();
        for eq in &self.equations {
            let ld = eq
                .leader()
                .ok_or_else(|| DiffError::NotSimple("constant equation".into()))?;
            out.push(ld);
        }
        Ok(out)
    }
}

type CompletedEquations = BTreeMap<u16, Vec<(MultiIndex, DiffPoly)>>;

/// Checks triangularity and completes each function's equation set under
/// the Janet division, deriving the added equations from their parents.
fn completed_equations(sys: &DifferentialSystem) -> Result<CompletedEquations, DiffError> {
    let leaders = sys.leaders()?;
    for (i, a) in leaders.iter().enumerate() {
        for (k, b) in leaders.iter().enumerate() {
            if i != k && a.func == b.func && a.mu.dominates(&b.mu) {
                return Err(DiffError::NotSimple(format!(
                    "leader {a:?} is a derivative of leader {b:?}"
                )));
            }
        }
    }
    let mut grouped: BTreeMap<u16, Vec<(MultiIndex, DiffPoly)>> = BTreeMap::new();
    for (ld, eq) in leaders.iter().zip(sys.equations.iter()) {
        grouped
            .entry(ld.func)
            .or_default()
            .push((ld.mu.clone(), eq.clone()));
    }
    let mut completed = BTreeMap::new();
    for (func, items) in grouped {
        let done = janet_complete_with(items, |p, i| derive(p, i))?;
        completed.insert(func, done);
    }
    Ok(completed)
}

/// Normal form under Janet reduction: each reducible occurrence is
/// eliminated by the unique completed equation whose Janet cone contains
/// it.
pub fn janet_reduce(p: &DiffPoly, completed: &CompletedEquations) -> DiffPoly {
    let mut cur = p.clone();
    'outer: loop {
        let vars: Vec<DiffVar> = cur.vars().into_iter().collect();
        for v in vars.iter().rev() {
            let Some(entries) = completed.get(&v.func) else {
                continue;
            };
            let set: Vec<MultiIndex> = entries.iter().map(|(m, _)| m.clone()).collect();
            for (nu, eq) in entries {
                if !janet_cone_contains(&set, nu, &v.mu) {
                    continue;
                }
                let theta = v.mu.try_sub(nu).expect("cone member dominates");
                let (reducer, threshold) = if theta.order() == 0 {
                    (eq.clone(), eq.degree_in(v))
                } else {
                    (derive_multi(eq, &theta), 1)
                };
                if cur.degree_in(v) >= threshold {
                    cur = cur.pseudo_div(&reducer, v).rem;
                    continue 'outer;
                }
            }
        }
        return cur;
    }
}

/// Outcome of the formal-integrability probe.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Passivity {
    /// Every non-multiplicative prolongation Janet-reduces to zero.
    Verified,
    /// The check could not be carried out or found a nonzero residue; any
    /// result computed from the system is conditional on its passivity.
    Conditional(String),
}

/// Checks every non-multiplicative prolongation of the completed system for
/// Janet reduction to zero.
pub fn passivity_probe(sys: &DifferentialSystem) -> Passivity {
    let completed = match completed_equations(sys) {
        Ok(c) => c,
        Err(e) => return Passivity::Conditional(e.to_string()),
    };
    for entries in completed.values() {
        let set: Vec<MultiIndex> = entries.iter().map(|(m, _)| m.clone()).collect();
        for (nu, eq) in entries {
            let mult = janet_multiplicative(&set, nu);
            for i in 0..nu.len() {
                if mult[i] {
                    continue;
                }
                let residue = janet_reduce(&derive(eq, i), &completed);
                if !residue.is_zero() {
                    return Passivity::Conditional(format!(
                        "prolongation of the equation with leader index {nu:?} along base \
                         variable {i} does not reduce to zero"
                    ));
                }
            }
        }
    }
    Passivity::Verified
}

/// Builds the algebraic system whose solutions are the order-`ell`
/// truncated power-series solutions: the image of every equation of order
/// at most `ell` together with exactly one prolongation per principal
/// derivative of order at most `ell`, generated along Janet-multiplicative
/// variables.
pub fn truncation_system(
    sys: &DifferentialSystem,
    zeta: &[Rat],
    ell: u32,
) -> Result<(SigmaSystem, CoeffUniverse), DiffError> {
    if zeta.len() != sys.n_indep {
        return Err(DiffError::BadExpansionPoint {
            expected: sys.n_indep,
            got: zeta.len(),
        });
    }
    let completed = completed_equations(sys)?;
    let uni = CoeffUniverse::new(sys.func_names.clone(), sys.n_indep, ell);
    let at = zeta_map(zeta);

    // pole check over every equation, participating or not
    for eq in &sys.equations {
        for (_, c) in eq.terms() {
            if c.eval(&at).is_none() {
                return Err(DiffError::PoleAtExpansionPoint);
            }
        }
    }

    let mut images: BTreeMap<DiffVar, QPoly> = BTreeMap::new();
    for (func, entries) in &completed {
        let set: Vec<MultiIndex> = entries.iter().map(|(m, _)| m.clone()).collect();
        for (nu, eq) in entries {
            if nu.order() > ell {
                continue;
            }
            // images of the initial and separant must not vanish: the
            // leading coefficient of every prolongation is the separant
            let check_uni =
                CoeffUniverse::new(sys.func_names.clone(), sys.n_indep, nu.order());
            let ld = DiffVar::new(*func, nu.clone());
            let ini = rho(&eq.initial_wrt(&ld), zeta, &check_uni)?;
            let sep = rho(&eq.derivative(&ld), zeta, &check_uni)?;
            if ini.is_zero() || sep.is_zero() {
                return Err(DiffError::VanishingInitialOrSeparant);
            }

            let mult = janet_multiplicative(&set, nu);
            let mut generated: BTreeMap<MultiIndex, DiffPoly> = BTreeMap::new();
            generated.insert(nu.clone(), eq.clone());
            let mut stack = vec![nu.clone()];
            while let Some(mu) = stack.pop() {
                for (i, m) in mult.iter().enumerate() {
                    if !m {
                        continue;
                    }
                    let child = mu.bump(i);
                    if child.order() > ell || generated.contains_key(&child) {
                        continue;
                    }
                    let parent = generated.get(&mu).expect("parent generated").clone();
                    generated.insert(child.clone(), derive(&parent, i));
                    stack.push(child);
                }
            }
            for (mu, p) in generated {
                let key = DiffVar::new(*func, mu);
                let image = rho(&p, zeta, &uni)?;
                debug_assert_eq!(image.leader(), uni.var_of(&key), "image keeps its leader");
                if images.insert(key, image).is_some() {
                    return Err(DiffError::NotSimple(
                        "two prolongations share a principal derivative".into(),
                    ));
                }
            }
        }
    }

    let mut out = SigmaSystem::new(uni.variables());
    for image in images.values() {
        out.push_equation(image.clone());
    }
    Ok((out, uni))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat_int;

    fn mi(entries: &[u32]) -> MultiIndex {
        MultiIndex::new(entries.to_vec())
    }

    // one base variable t; functions u1 (priority 1) and u2 (priority 0)
    fn u1(k: u32) -> DiffVar {
        DiffVar::new(1, mi(&[k]))
    }
    fn u2(k: u32) -> DiffVar {
        DiffVar::new(0, mi(&[k]))
    }
    fn v(dv: DiffVar) -> DiffPoly {
        DiffPoly::var(dv)
    }
    fn t_rf() -> RatFn {
        RatFn::var(Var(0))
    }
    fn c_int(n: i64) -> DiffPoly {
        DiffPoly::constant(RatFn::from_rat(rat_int(n)))
    }

    /// u2*u1' - u1 + 1/t
    fn hard_p() -> DiffPoly {
        v(u2(0))
            .mul(&v(u1(1)))
            .sub(&v(u1(0)))
            .add(&DiffPoly::constant(t_rf().recip()))
    }

    #[test]
    fn ranking_is_orderly_with_priority_and_reverse_lex_ties() {
        assert!(u1(0) < u2(1), "order dominates priority");
        assert!(u2(0) < u1(0), "priority breaks order ties");
        // two base variables: x-leaning derivatives rank above y-leaning
        let uxx = DiffVar::new(0, mi(&[2, 0]));
        let uxy = DiffVar::new(0, mi(&[1, 1]));
        let uyy = DiffVar::new(0, mi(&[0, 2]));
        assert!(uxx > uxy && uxy > uyy);
        // ranking axiom: derivation preserves the order
        assert!(DiffVar::new(0, mi(&[3, 0])) > DiffVar::new(0, mi(&[2, 1])));
    }

    #[test]
    fn derivation_matches_the_quotient_and_chain_rules() {
        // d/dt (u2*u1' - u1 + 1/t) = u2*u1'' + (u2' - 1)*u1' - 1/t^2
        let dp = derive(&hard_p(), 0);
        let expected = v(u2(0))
            .mul(&v(u1(2)))
            .add(&v(u2(1)).sub(&c_int(1)).mul(&v(u1(1))))
            .sub(&DiffPoly::constant(
                RatFn::from_poly(Poly::var_pow(Var(0), 2)).recip(),
            ));
        assert_eq!(dp, expected);
        // d/dx u = u_(1,0,...)
        let u = DiffPoly::var(DiffVar::new(0, mi(&[0, 0])));
        assert_eq!(
            derive(&u, 0),
            DiffPoly::var(DiffVar::new(0, mi(&[1, 0])))
        );
        // constants die
        assert!(derive(&c_int(7), 0).is_zero());
    }

    #[test]
    fn derivation_satisfies_leibniz_and_commutes() {
        let p = hard_p();
        let q = v(u1(1)).mul(&v(u2(1))).add(&DiffPoly::constant(t_rf()));
        let left = derive(&p.mul(&q), 0);
        let right = derive(&p, 0).mul(&q).add(&p.mul(&derive(&q, 0)));
        assert_eq!(left, right);

        let r = DiffPoly::var(DiffVar::new(0, mi(&[1, 0])))
            .mul(&DiffPoly::var(DiffVar::new(1, mi(&[0, 1]))));
        assert_eq!(derive(&derive(&r, 0), 1), derive(&derive(&r, 1), 0));
    }

    #[test]
    fn reduction_produces_the_frozen_second_derivative_form() {
        // d^2/dt^2 of hard_p reduced by u2'' gives
        // u2*u1''' + (2 u2' - 1) u1'' + 2/t^3
        let ddp = derive(&derive(&hard_p(), 0), 0);
        let (q2, steps) = ritt_reduce(&ddp, &[v(u2(2))]);
        let expected = v(u2(0))
            .mul(&v(u1(3)))
            .add(
                &v(u2(1))
                    .scale(&RatFn::from_rat(rat_int(2)))
                    .sub(&c_int(1))
                    .mul(&v(u1(2))),
            )
            .add(&DiffPoly::constant(
                RatFn::from_poly(Poly::var_pow(Var(0), 3))
                    .recip()
                    .mul(&RatFn::from_rat(rat_int(2))),
            ));
        assert_eq!(q2, expected);
        assert!(steps.iter().all(|s| s.multiplier.is_constant()));
        // self-reduction annihilates
        let (zero, _) = ritt_reduce(&hard_p(), &[hard_p()]);
        assert!(zero.is_zero());
        // nothing to reduce
        let (same, steps) = ritt_reduce(&v(u1(1)), &[v(u2(2))]);
        assert_eq!(same, v(u1(1)));
        assert!(steps.is_empty());
    }

    #[test]
    fn coefficient_substitution_and_poles() {
        // universe of order 1: g(u2,0) < g(u1,0) < g(u2,1) < g(u1,1)
        let uni = CoeffUniverse::new(vec!["u2".into(), "u1".into()], 1, 1);
        assert_eq!(uni.len(), 4);
        assert_eq!(uni.name(Var(0)), "g(u2,0)");
        assert_eq!(uni.name(Var(3)), "g(u1,1)");

        let img = rho(&hard_p(), &[rat_int(1)], &uni).unwrap();
        let expected = QPoly::var(Var(0))
            .mul(&QPoly::var(Var(3)))
            .sub(&QPoly::var(Var(1)))
            .add(&QPoly::one());
        assert_eq!(img, expected);

        assert_eq!(
            rho(&hard_p(), &[rat_int(0)], &uni),
            Err(DiffError::PoleAtExpansionPoint)
        );
        assert_eq!(
            rho(&v(u1(0)), &[rat_int(5)], &uni).unwrap(),
            QPoly::var(Var(1))
        );
        // derivative outside the universe
        assert!(matches!(
            rho(&v(u1(2)), &[rat_int(1)], &uni),
            Err(DiffError::OutsideUniverse(_))
        ));
    }

    #[test]
    fn postponing_returns_derivatives_and_the_coefficient_equation() {
        let uni = CoeffUniverse::new(vec!["u2".into(), "u1".into()], 1, 1);
        let (ders, image) = postpone(&hard_p(), &[rat_int(2)], &uni).unwrap();
        assert_eq!(ders.len(), 1);
        assert_eq!(ders[0], derive(&hard_p(), 0));
        let expected = QPoly::var(Var(0))
            .mul(&QPoly::var(Var(3)))
            .sub(&QPoly::var(Var(1)))
            .add(&QPoly::constant(crate::poly::rat(1, 2)));
        assert_eq!(image, expected);
    }

    #[test]
    fn janet_division_partitions_cones_after_completion() {
        // {(2,0), (0,2)} is incomplete: (1,2) is missing
        let set = vec![mi(&[2, 0]), mi(&[0, 2])];
        assert_eq!(janet_multiplicative(&set, &mi(&[2, 0])), vec![true, true]);
        assert_eq!(janet_multiplicative(&set, &mi(&[0, 2])), vec![false, true]);
        let done =
            janet_complete_with(set.into_iter().map(|m| (m, ())).collect(), |_, _| ())
                .unwrap();
        let completed: Vec<MultiIndex> = done.into_iter().map(|(m, _)| m).collect();
        assert!(completed.contains(&mi(&[1, 2])));

        // after completion, Janet cones partition the full cone union
        for a in 0..=6u32 {
            for b in 0..=(6 - a) {
                let mu = mi(&[a, b]);
                let in_union = completed.iter().any(|nu| mu.dominates(nu));
                let cones = completed
                    .iter()
                    .filter(|nu| janet_cone_contains(&completed, nu, &mu))
                    .count();
                assert_eq!(cones, usize::from(in_union), "at {mu:?}");
            }
        }
    }

    #[test]
    fn truncation_of_a_squared_first_derivative() {
        // (u')^2 - 1 at order 2 becomes {g1^2 - 1, 2 g1 g2}
        let u1d = DiffVar::new(0, mi(&[1]));
        let eq = DiffPoly::var(u1d).pow(2).sub(&c_int(1));
        let sys = DifferentialSystem::new(1, vec!["u".into()], vec![eq]);
        let (trunc, uni) = truncation_system(&sys, &[rat_int(0)], 2).unwrap();
        assert_eq!(uni.len(), 3);
        let g = |i: u32| QPoly::var(Var(i));
        assert_eq!(
            trunc.equations(),
            &[
                g(1).pow(2).sub(&QPoly::one()),
                g(1).mul(&g(2)).scale(&rat_int(2)),
            ]
        );
        assert!(trunc.inequations().is_empty());
    }

    #[test]
    fn truncation_filters_by_order() {
        // heat equation u_t = u_xx: at order 1 nothing survives
        let heat = DiffPoly::var(DiffVar::new(0, mi(&[0, 1])))
            .sub(&DiffPoly::var(DiffVar::new(0, mi(&[2, 0]))));
        let sys = DifferentialSystem::new(2, vec!["u".into()], vec![heat]);
        let (trunc, uni) = truncation_system(&sys, &[rat_int(0), rat_int(0)], 1).unwrap();
        assert_eq!(uni.len(), 3);
        assert!(trunc.equations().is_empty());
        // at order 2 exactly the image itself
        let (trunc, uni) = truncation_system(&sys, &[rat_int(0), rat_int(0)], 2).unwrap();
        assert_eq!(uni.len(), 6);
        assert_eq!(trunc.equations().len(), 1);
        let ld = trunc.equations()[0].leader().unwrap();
        assert_eq!(uni.name(ld), "g(u,2,0)");
    }

    #[test]
    fn truncation_rejects_vanishing_leading_data() {
        // t * u' has initial t, which vanishes identically at 0
        let eq = DiffPoly::var(DiffVar::new(0, mi(&[1]))).mul(&DiffPoly::constant(t_rf()));
        let sys = DifferentialSystem::new(1, vec!["u".into()], vec![eq]);
        assert_eq!(
            truncation_system(&sys, &[rat_int(0)], 1),
            Err(DiffError::VanishingInitialOrSeparant)
        );
    }

    #[test]
    fn passivity_probe_distinguishes_integrable_pairs() {
        // u_x = 0, u_y = 0 is passive
        let ux = DiffPoly::var(DiffVar::new(0, mi(&[1, 0])));
        let uy = DiffPoly::var(DiffVar::new(0, mi(&[0, 1])));
        let good = DifferentialSystem::new(2, vec!["u".into()], vec![ux, uy]);
        assert_eq!(passivity_probe(&good), Passivity::Verified);

        // u_x = v, u_y = 0 is not: the cross derivative forces v_y = 0
        let ux_minus_v = DiffPoly::var(DiffVar::new(1, mi(&[1, 0])))
            .sub(&DiffPoly::var(DiffVar::new(0, mi(&[0, 0]))));
        let uy = DiffPoly::var(DiffVar::new(1, mi(&[0, 1])));
        let bad = DifferentialSystem::new(2, vec!["v".into(), "u".into()], vec![ux_minus_v, uy]);
        assert!(matches!(passivity_probe(&bad), Passivity::Conditional(_)));
    }

    #[test]
    fn truncated_systems_have_one_equation_per_principal_derivative() {
        // two cones for one function: leaders u_x and u_yy
        let ux = DiffPoly::var(DiffVar::new(0, mi(&[1, 0])));
        let uyy = DiffPoly::var(DiffVar::new(0, mi(&[0, 2])));
        let sys = DifferentialSystem::new(2, vec!["u".into()], vec![ux, uyy]);
        for ell in 0..=4u32 {
            let (trunc, uni) = truncation_system(&sys, &[rat_int(0), rat_int(0)], ell).unwrap();
            // count principal derivatives directly
            let principal = (0..uni.len() as u32)
                .map(Var)
                .filter(|v| {
                    let mu = &uni.diff_var_of(*v).mu;
                    mu.dominates(&mi(&[1, 0])) || mu.dominates(&mi(&[0, 2]))
                })
                .count();
            assert_eq!(trunc.equations().len(), principal, "order {ell}");
            // distinct leaders
            let leaders: std::collections::BTreeSet<_> = trunc
                .equations()
                .iter()
                .map(|e| e.leader().unwrap())
                .collect();
            assert_eq!(leaders.len(), trunc.equations().len());
        }
    }
}
