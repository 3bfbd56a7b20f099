//! Decomposition of finite systems into disjoint simple systems.
//!
//! The algorithm keeps a set of branches. Each branch holds a partial
//! triangular system (at most one equation or one inequation per leader), a
//! queue of unprocessed constraints and the conditions assumed so far. One
//! step picks the queued constraint with the greatest leader, reduces it by
//! the committed equations and either discards it, commits it, merges it
//! with the committed constraint on the same leader through a conditional
//! subresultant gcd, or splits the branch when a needed sign condition can
//! neither be proven nor refuted. Every split queues the condition itself
//! as a constraint, so each output system carries all its case distinctions
//! explicitly and the solution sets of the outputs are pairwise disjoint by
//! construction.
//!
//! Equations and inequations are made squarefree before they are committed,
//! again by deciding principal subresultant coefficients and splitting if
//! necessary, so the fiber-degree counting formula applies to every output.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_integer::Integer;

use crate::counting::CountingPolynomial;
use crate::poly::{subresultant_at, Int, Var};
use crate::sigma::{
    prove_nonzero, reduce_by_triangular, NonzeroCtx, QPoly, SigmaError, SigmaSystem,
};

const MAX_STEPS_PER_BRANCH: u32 = 10_000;
const MAX_BRANCHES: u32 = 100_000;

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum DecomposeError {
    #[error("branch exceeded the step limit")]
    IterationLimit,
    #[error("decomposition exceeded the branch limit")]
    BranchLimit,
    #[error("marked variable {0:?} acquired an equation")]
    MarkerCollision(Var),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
}

/// One recorded case distinction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SplitRecord {
    /// The reduced, normalized condition that was split on.
    pub condition: QPoly,
}

/// The result of a decomposition: pairwise disjoint simple systems whose
/// union of solution sets equals that of the input.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Decomposition {
    pub components: Vec<SigmaSystem>,
    pub splits: Vec<SplitRecord>,
}

impl Decomposition {
    /// Sum of the component counts. Simplicity of the components holds by
    /// construction of the algorithm, so certificates the nonzero prover
    /// cannot reproduce are accepted here.
    pub fn count(&self) -> Result<CountingPolynomial, SigmaError> {
        let mut acc = CountingPolynomial::zero();
        for c in &self.components {
            acc = acc.add(&c.count_assuming_certificates()?);
        }
        Ok(acc)
    }
}

/// Decomposes a system and returns the total count of its solution set.
pub fn count_constructible(sys: &SigmaSystem) -> Result<CountingPolynomial, DecomposeError> {
    Ok(decompose(sys)?.count()?)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Eq,
    Ineq,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Decision {
    Zero,
    NonZero,
    Unknown,
}

#[derive(Clone)]
struct Branch {
    t_eqs: BTreeMap<Var, QPoly>,
    t_ineqs: BTreeMap<Var, QPoly>,
    queue: Vec<(QPoly, Kind)>,
    assumed_zero: Vec<QPoly>,
    assumed_nonzero: Vec<QPoly>,
    steps: u32,
}

enum StepOutcome {
    Continue,
    Dead,
    Done,
    Split { condition: QPoly, requeue: (QPoly, Kind) },
}

/// Canonical total order on polynomials, for deterministic tie-breaking.
fn poly_cmp(a: &QPoly, b: &QPoly) -> Ordering {
    let mut ia = a.terms().rev();
    let mut ib = b.terms().rev();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((ma, ca)), Some((mb, cb))) => match ma.cmp(mb).then_with(|| ca.cmp(cb)) {
                Ordering::Equal => continue,
                ord => return ord,
            },
        }
    }
}

/// Priority of queued constraints: constants first, then greater leaders,
/// equations before inequations, canonical order last.
fn priority_cmp(a: &(QPoly, Kind), b: &(QPoly, Kind)) -> Ordering {
    let la = a.0.leader();
    let lb = b.0.leader();
    match (la, lb) {
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (la, lb) => la
            .cmp(&lb)
            .then_with(|| match (a.1, b.1) {
                (Kind::Eq, Kind::Ineq) => Ordering::Greater,
                (Kind::Ineq, Kind::Eq) => Ordering::Less,
                _ => Ordering::Equal,
            })
            .then_with(|| poly_cmp(&a.0, &b.0)),
    }
}

impl Branch {
    fn new(sys: &SigmaSystem) -> Self {
        let mut queue: Vec<(QPoly, Kind)> = Vec::new();
        for p in sys.equations() {
            queue.push((p.clone(), Kind::Eq));
        }
        for p in sys.inequations() {
            queue.push((p.clone(), Kind::Ineq));
        }
        Branch {
            t_eqs: BTreeMap::new(),
            t_ineqs: BTreeMap::new(),
            queue,
            assumed_zero: Vec::new(),
            assumed_nonzero: Vec::new(),
            steps: 0,
        }
    }

    fn pop_best(&mut self) -> Option<(QPoly, Kind)> {
        if self.queue.is_empty() {
            return None;
        }
        let mut best = 0;
        for i in 1..self.queue.len() {
            if priority_cmp(&self.queue[i], &self.queue[best]) == Ordering::Greater {
                best = i;
            }
        }
        Some(self.queue.remove(best))
    }

    fn nonzero_ctx(&self, markers: &SigmaSystem) -> NonzeroCtx {
        let mut ineqs: Vec<QPoly> = self.t_ineqs.values().cloned().collect();
        ineqs.extend(self.assumed_nonzero.iter().cloned());
        NonzeroCtx {
            eqs: self.t_eqs.clone(),
            ineqs,
            markers: markers.markers().to_vec(),
        }
    }

    /// Decides the sign of a condition on this branch. Returns the decision
    /// together with the reduced normalized form used for assumptions.
    fn decide(&self, c: &QPoly, sys: &SigmaSystem) -> (Decision, QPoly) {
        let r = reduce_by_triangular(c, &self.t_eqs).normalized();
        if r.is_zero() {
            return (Decision::Zero, r);
        }
        if r.is_constant() {
            return (Decision::NonZero, r);
        }
        if self.assumed_zero.contains(&r) {
            return (Decision::Zero, r);
        }
        if self.assumed_nonzero.contains(&r) {
            return (Decision::NonZero, r);
        }
        if prove_nonzero(&r, &self.nonzero_ctx(sys)) {
            return (Decision::NonZero, r);
        }
        (Decision::Unknown, r)
    }

    /// The conditional gcd of `a` and `b` with respect to `v` on this
    /// branch: the first subresultant whose principal coefficient is
    /// decided nonzero. Requires `deg_v(a) >= deg_v(b) >= 1`.
    fn conditional_gcd(
        &self,
        a: &QPoly,
        b: &QPoly,
        v: &Var,
        sys: &SigmaSystem,
    ) -> Result<(u32, QPoly), QPoly> {
        let db = b.degree_in(v);
        for j in 0..db {
            let s = subresultant_at(a, b, v, j);
            match self.decide(&s.principal, sys) {
                (Decision::Zero, _) => continue,
                (Decision::NonZero, _) => return Ok((j, s.poly)),
                (Decision::Unknown, r) => return Err(r),
            }
        }
        Ok((db, b.clone()))
    }

    fn step(&mut self, sys: &SigmaSystem) -> StepOutcome {
        let Some((raw, kind)) = self.pop_best() else {
            return StepOutcome::Done;
        };
        if kind == Kind::Ineq {
            // A split condition sits in `assumed_nonzero` while its inequation
            // waits in the queue. Once the inequation itself is processed, the
            // assumption must not be used to justify its own insertion (or its
            // own redundancy), so withhold it; from here on the constraint is
            // carried by the triangular set or by a requeued copy.
            if let Some(i) = self.assumed_nonzero.iter().position(|q| *q == raw) {
                self.assumed_nonzero.remove(i);
            }
        }
        let p = reduce_by_triangular(&raw, &self.t_eqs).normalized();
        if p.is_zero() {
            return match kind {
                Kind::Eq => StepOutcome::Continue,
                Kind::Ineq => StepOutcome::Dead,
            };
        }
        if p.is_constant() {
            return match kind {
                Kind::Eq => StepOutcome::Dead,
                Kind::Ineq => StepOutcome::Continue,
            };
        }
        let v = p.leader().expect("nonconstant polynomial has a leader");

        // resolve the initial
        let ini = p.initial_wrt(&v);
        match self.decide(&ini, sys) {
            (Decision::Zero, _) => {
                self.queue.push((p.tail_wrt(&v), kind));
                return StepOutcome::Continue;
            }
            (Decision::Unknown, r) => {
                return StepOutcome::Split {
                    condition: r,
                    requeue: (p, kind),
                };
            }
            (Decision::NonZero, _) => {}
        }

        // make the fiber squarefree
        if p.degree_in(&v) >= 2 {
            let sep = p.derivative(&v);
            match self.conditional_gcd(&p, &sep, &v, sys) {
                Err(condition) => {
                    return StepOutcome::Split {
                        condition,
                        requeue: (p, kind),
                    };
                }
                Ok((0, _)) => {}
                Ok((_, g)) => {
                    let sf = p.pseudo_div(&g, &v).quot;
                    self.queue.push((sf, kind));
                    return StepOutcome::Continue;
                }
            }
        }

        match kind {
            Kind::Eq => self.insert_equation(p, v, sys),
            Kind::Ineq => self.insert_inequation(p, v, sys),
        }
    }

    fn insert_equation(&mut self, p: QPoly, v: Var, sys: &SigmaSystem) -> StepOutcome {
        if let Some(e) = self.t_eqs.get(&v).cloned() {
            // reduction put p strictly below the committed degree
            debug_assert!(p.degree_in(&v) < e.degree_in(&v));
            return match self.conditional_gcd(&e, &p, &v, sys) {
                Err(condition) => StepOutcome::Split {
                    condition,
                    requeue: (p, Kind::Eq),
                },
                Ok((0, _)) => StepOutcome::Dead,
                Ok((_, g)) => {
                    // both equations reduce to their common part
                    self.t_eqs.remove(&v);
                    self.queue.push((g, Kind::Eq));
                    StepOutcome::Continue
                }
            };
        }
        if let Some(r) = self.t_ineqs.get(&v).cloned() {
            let (a, b) = if p.degree_in(&v) >= r.degree_in(&v) {
                (&p, &r)
            } else {
                (&r, &p)
            };
            return match self.conditional_gcd(a, b, &v, sys) {
                Err(condition) => StepOutcome::Split {
                    condition,
                    requeue: (p, Kind::Eq),
                },
                Ok((0, _)) => {
                    // no excluded root lies on the fiber
                    self.t_ineqs.remove(&v);
                    self.commit_equation(p, v)
                }
                Ok((k, g)) => {
                    if k == p.degree_in(&v) {
                        // every root of p is excluded
                        return StepOutcome::Dead;
                    }
                    let shrunk = p.pseudo_div(&g, &v).quot;
                    self.t_ineqs.remove(&v);
                    self.queue.push((shrunk, Kind::Eq));
                    StepOutcome::Continue
                }
            };
        }
        self.commit_equation(p, v)
    }

    fn commit_equation(&mut self, p: QPoly, v: Var) -> StepOutcome {
        self.t_eqs.insert(v, p);
        StepOutcome::Continue
    }

    fn insert_inequation(&mut self, p: QPoly, v: Var, sys: &SigmaSystem) -> StepOutcome {
        if let Some(e) = self.t_eqs.get(&v).cloned() {
            // reduction put p strictly below the committed degree
            debug_assert!(p.degree_in(&v) < e.degree_in(&v));
            return match self.conditional_gcd(&e, &p, &v, sys) {
                Err(condition) => StepOutcome::Split {
                    condition,
                    requeue: (p, Kind::Ineq),
                },
                Ok((0, _)) => StepOutcome::Continue,
                Ok((k, g)) => {
                    if k == e.degree_in(&v) {
                        // every root of the equation is excluded
                        return StepOutcome::Dead;
                    }
                    let shrunk = e.pseudo_div(&g, &v).quot;
                    self.t_eqs.remove(&v);
                    self.queue.push((shrunk, Kind::Eq));
                    StepOutcome::Continue
                }
            };
        }
        if let Some(r) = self.t_ineqs.get(&v).cloned() {
            let (a, b) = if r.degree_in(&v) >= p.degree_in(&v) {
                (&r, &p)
            } else {
                (&p, &r)
            };
            return match self.conditional_gcd(a, b, &v, sys) {
                Err(condition) => StepOutcome::Split {
                    condition,
                    requeue: (p, Kind::Ineq),
                },
                Ok((0, _)) => {
                    // disjoint root sets: exclude the union
                    let merged = r.mul(&p).normalized();
                    self.t_ineqs.insert(v, merged);
                    StepOutcome::Continue
                }
                Ok((k, g)) => {
                    if k == b.degree_in(&v) {
                        // the lower-degree root set is contained in the other
                        let wider = (*a).clone();
                        self.t_ineqs.insert(v, wider);
                        return StepOutcome::Continue;
                    }
                    let extra = a.pseudo_div(&g, &v).quot;
                    let merged = b.mul(&extra).normalized();
                    self.t_ineqs.insert(v, merged);
                    StepOutcome::Continue
                }
            };
        }
        self.t_ineqs.insert(v, p);
        StepOutcome::Continue
    }

    fn finish(self, sys: &SigmaSystem) -> Result<SigmaSystem, DecomposeError> {
        let mut out = SigmaSystem::new(sys.universe().to_vec());
        for (v, e) in &self.t_eqs {
            if sys.markers().iter().any(|m| m.var == *v) {
                return Err(DecomposeError::MarkerCollision(*v));
            }
            out.push_equation(e.clone());
        }
        for r in self.t_ineqs.values() {
            out.push_inequation(r.clone());
        }
        for m in sys.markers() {
            out.push_marker(m.clone());
        }
        Ok(out)
    }
}

/// Splits a finite system into pairwise disjoint simple systems covering
/// the same solution set. Cofinite markers are passed through unchanged.
pub fn decompose(sys: &SigmaSystem) -> Result<Decomposition, DecomposeError> {
    let mut stack = vec![Branch::new(sys)];
    let mut components: Vec<SigmaSystem> = Vec::new();
    let mut splits: Vec<SplitRecord> = Vec::new();
    let mut branches_created: u32 = 1;
    while let Some(mut branch) = stack.pop() {
        loop {
            branch.steps += 1;
            if branch.steps > MAX_STEPS_PER_BRANCH {
                return Err(DecomposeError::IterationLimit);
            }
            match branch.step(sys) {
                StepOutcome::Continue => continue,
                StepOutcome::Dead => break,
                StepOutcome::Done => {
                    components.push(branch.finish(sys)?);
                    break;
                }
                StepOutcome::Split { condition, requeue } => {
                    branches_created += 1;
                    if branches_created > MAX_BRANCHES {
                        return Err(DecomposeError::BranchLimit);
                    }
                    splits.push(SplitRecord {
                        condition: condition.clone(),
                    });
                    let mut zero_branch = branch.clone();
                    zero_branch.assumed_zero.push(condition.clone());
                    zero_branch.queue.push((condition.clone(), Kind::Eq));
                    zero_branch.queue.push(requeue.clone());

                    branch.assumed_nonzero.push(condition.clone());
                    branch.queue.push((condition, Kind::Ineq));
                    branch.queue.push(requeue);

                    // nonzero branch continues first
                    stack.push(zero_branch);
                    stack.push(branch);
                    break;
                }
            }
        }
    }
    components.sort_by(component_cmp);
    Ok(Decomposition { components, splits })
}

fn component_cmp(a: &SigmaSystem, b: &SigmaSystem) -> Ordering {
    let seq = |s: &SigmaSystem| -> Vec<QPoly> {
        s.equations()
            .iter()
            .chain(s.inequations().iter())
            .cloned()
            .collect()
    };
    let (sa, sb) = (seq(a), seq(b));
    for (pa, pb) in sa.iter().zip(sb.iter()) {
        match poly_cmp(pa, pb) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    sa.len().cmp(&sb.len())
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("cofinite markers cannot be checked over a finite field")]
    MarkersUnsupported,
    #[error("a coefficient denominator vanishes modulo {0}")]
    BadPrime(u32),
}

/// Counts the solutions of the system over the prime field with `p`
/// elements by exhaustive enumeration. Intended as an independent check of
/// counting polynomials on systems whose fibers split over that field. The
/// work is spread over threads (capped by `COUNTDIFF_THREADS`) with a
/// deterministic merge.
pub fn verify_over_prime_field(sys: &SigmaSystem, p: u32) -> Result<u64, VerifyError> {
    if !sys.markers().is_empty() {
        return Err(VerifyError::MarkersUnsupported);
    }
    let n = sys.universe().len();
    let index_of = |v: &Var| -> usize {
        sys.universe()
            .iter()
            .position(|w| w == v)
            .expect("member variable inside the universe")
    };
    let modp = p as i64;
    let convert = |poly: &QPoly| -> Result<Vec<(Vec<(usize, u32)>, i64)>, VerifyError> {
        let mut terms = Vec::new();
        for (m, c) in poly.terms() {
            let num = c.numer().mod_floor(&Int::from(modp));
            let den = c.denom().mod_floor(&Int::from(modp));
            let num = i64::try_from(&num).expect("residue fits");
            let den = i64::try_from(&den).expect("residue fits");
            if den == 0 {
                return Err(VerifyError::BadPrime(p));
            }
            let coeff = num * mod_inverse(den, modp) % modp;
            let vars = m.pairs().iter().map(|(v, e)| (index_of(v), *e)).collect();
            terms.push((vars, coeff));
        }
        Ok(terms)
    };
    let eqs: Vec<_> = sys
        .equations()
        .iter()
        .map(&convert)
        .collect::<Result<_, _>>()?;
    let ineqs: Vec<_> = sys
        .inequations()
        .iter()
        .map(&convert)
        .collect::<Result<_, _>>()?;

    let eval = |terms: &[(Vec<(usize, u32)>, i64)], point: &[i64]| -> i64 {
        let mut acc = 0i64;
        for (vars, c) in terms {
            let mut t = *c;
            for (i, e) in vars {
                let mut base = point[*i];
                let mut exp = *e;
                let mut powed = 1i64;
                while exp > 0 {
                    if exp & 1 == 1 {
                        powed = powed * base % modp;
                    }
                    base = base * base % modp;
                    exp >>= 1;
                }
                t = t * powed % modp;
            }
            acc = (acc + t) % modp;
        }
        acc.rem_euclid(modp)
    };

    let count_range = |lo: i64, hi: i64| -> u64 {
        // first coordinate in [lo, hi), remaining coordinates full range
        let mut count = 0u64;
        let mut point = vec![0i64; n];
        let rest = n.saturating_sub(1);
        let total: u64 = (modp as u64).pow(rest as u32);
        for first in lo..hi {
            if n > 0 {
                point[0] = first;
            }
            for combo in 0..total {
                let mut c = combo;
                for slot in 1..n {
                    point[slot] = (c % modp as u64) as i64;
                    c /= modp as u64;
                }
                let ok = eqs.iter().all(|t| eval(t, &point) == 0)
                    && ineqs.iter().all(|t| eval(t, &point) != 0);
                if ok {
                    count += 1;
                }
            }
        }
        count
    };

    if n == 0 {
        let empty: Vec<i64> = vec![];
        let ok = eqs.iter().all(|t| eval(t, &empty) == 0)
            && ineqs.iter().all(|t| eval(t, &empty) != 0);
        return Ok(ok as u64);
    }

    let threads = thread_budget().min(p as usize).max(1);
    if threads <= 1 {
        return Ok(count_range(0, modp));
    }
    let chunk = (modp as usize).div_ceil(threads) as i64;
    let mut totals = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let mut lo = 0i64;
        while lo < modp {
            let hi = (lo + chunk).min(modp);
            let f = &count_range;
            handles.push(scope.spawn(move || f(lo, hi)));
            lo = hi;
        }
        for h in handles {
            totals.push(h.join().expect("counting thread panicked"));
        }
    });
    Ok(totals.iter().sum())
}

fn thread_budget() -> usize {
    if let Ok(s) = std::env::var("COUNTDIFF_THREADS") {
        if let Ok(n) = s.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn mod_inverse(a: i64, p: i64) -> i64 {
    // p prime, a nonzero mod p
    let mut result = 1i64;
    let mut base = a.rem_euclid(p);
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    result
}
