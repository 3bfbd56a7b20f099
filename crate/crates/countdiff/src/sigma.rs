//! Simple systems of equations, inequations and cofinite exclusion markers,
//! and their counting polynomials.
//!
//! A system lives in an ambient space with one coordinate per universe
//! variable. It is *simple* when it is weakly triangular (per leader either
//! one equation or inequations, never both), the initial of every member is
//! nonzero on the solutions of the lower members, every fiber is squarefree
//! and inequations sharing a leader exclude disjoint root sets. For such a
//! system the count is a product over the universe: an equation leader
//! contributes its fiber degree, an inequation leader the affine line minus
//! the excluded roots, a marked variable the affine line minus a countable
//! set, and a free variable the whole line.
//!
//! The semantic parts of simplicity are certified where possible: a
//! dedicated prover shows polynomials nonzero on the solution set by
//! reduction, stripping of excluded factors and resultant recursion. What
//! cannot be proven is reported as assumed, and the strict counting entry
//! point refuses to rely on assumptions.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::counting::{CountingPolynomial, UniPoly};
use crate::poly::{rat_int, resultant, Poly, Rat, Var};

pub type QPoly = Poly<Var, Rat>;

/// Marks a variable as ranging over the complement of a countably infinite
/// set inside the affine line.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CofiniteMarker {
    pub var: Var,
    /// Explicit description of the excluded set, when known.
    pub family: Option<ExcludedFamily>,
}

/// The excluded values `b(i)/a(i)` for all integers `i >= from`, recorded
/// through the vanishing conditions `a(i) * v - b(i) = 0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExcludedFamily {
    pub scale: UniPoly,
    pub offset: UniPoly,
    pub from: i64,
}

impl ExcludedFamily {
    /// The instance polynomial `a(i) * v - b(i)` for a concrete index.
    pub fn instance(&self, var: Var, i: i64) -> QPoly {
        let a = self.scale.eval_int(i);
        let b = self.offset.eval_int(i);
        QPoly::var(var)
            .scale(&a)
            .sub(&QPoly::constant(b))
    }

    /// True if `alpha * v - beta` equals some instance with an admissible
    /// index. Solves the matching condition exactly for linear data and
    /// falls back to a bounded scan.
    pub fn matches_instance(&self, alpha: &Rat, beta: &Rat) -> bool {
        if Zero::is_zero(alpha) {
            return false;
        }
        // a(i) * beta - b(i) * alpha = 0 locates the index
        let p = self.scale.scale(beta).sub(&self.offset.scale(alpha));
        if p.is_zero() {
            // every admissible index matches
            return true;
        }
        match p.degree() {
            Some(0) | None => false,
            Some(1) => {
                let root = -p.coeff(0) / p.coeff(1);
                if !root.denom().is_one() {
                    return false;
                }
                let i = match i64::try_from(&root.to_integer()) {
                    Ok(i) => i,
                    Err(_) => return false,
                };
                i >= self.from && self.checks_at(i, alpha, beta)
            }
            Some(_) => (self.from..self.from + 64)
                .any(|i| self.checks_at(i, alpha, beta)),
        }
    }

    fn checks_at(&self, i: i64, alpha: &Rat, beta: &Rat) -> bool {
        let a = self.scale.eval_int(i);
        let b = self.offset.eval_int(i);
        // proportionality (a, b) ~ (alpha, beta) with a nonzero
        !Zero::is_zero(&a) && &a * beta == &b * alpha
    }
}

/// Outcome of certifying one semantic requirement.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CertStatus {
    Proved,
    AssumedByCaller,
}

impl CertStatus {
    fn and(self, other: CertStatus) -> CertStatus {
        if self == CertStatus::Proved && other == CertStatus::Proved {
            CertStatus::Proved
        } else {
            CertStatus::AssumedByCaller
        }
    }
}

/// Certification record for a structurally simple system.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SimpleCertificate {
    /// Every initial is nonzero on the lower solution set.
    pub initials_nonvanishing: CertStatus,
    /// Every equation and inequation fiber is squarefree.
    pub squarefree_fibers: CertStatus,
    /// Inequations sharing a leader exclude disjoint roots.
    pub inequations_coprime: CertStatus,
    /// Marked variables exclude infinitely many pairwise distinct values,
    /// disjoint from any inequation roots on the same variable.
    pub markers_consistent: CertStatus,
}

impl SimpleCertificate {
    pub fn all_proved(&self) -> bool {
        [
            self.initials_nonvanishing,
            self.squarefree_fibers,
            self.inequations_coprime,
            self.markers_consistent,
        ]
        .iter()
        .all(|s| *s == CertStatus::Proved)
    }

    fn proved() -> Self {
        SimpleCertificate {
            initials_nonvanishing: CertStatus::Proved,
            squarefree_fibers: CertStatus::Proved,
            inequations_coprime: CertStatus::Proved,
            markers_consistent: CertStatus::Proved,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum SigmaError {
    #[error("system member is a constant")]
    ConstantMember,
    #[error("variable {0:?} is not part of the universe")]
    OutsideUniverse(Var),
    #[error("two equations share the leader {0:?}")]
    DuplicateEquationLeader(Var),
    #[error("leader {0:?} carries both an equation and an inequation")]
    MixedConstraint(Var),
    #[error("marked variable {0:?} is constrained by an equation")]
    MarkerOnEquationLeader(Var),
    #[error("variable {0:?} carries more than one marker")]
    DuplicateMarker(Var),
    #[error("simplicity requirement '{0}' could not be proven")]
    Unproven(&'static str),
}

/// Constraints on one leader.
#[derive(Clone, Debug, Default)]
pub struct LeaderBlock<'a> {
    pub equation: Option<&'a QPoly>,
    pub inequations: Vec<&'a QPoly>,
    pub marker: Option<&'a CofiniteMarker>,
}

/// A finite system over an explicit universe of variables. The members are
/// stored raw; structural simplicity is checked on demand, so the same type
/// also carries arbitrary input systems for the decomposition algorithm.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SigmaSystem {
    universe: Vec<Var>,
    equations: Vec<QPoly>,
    inequations: Vec<QPoly>,
    markers: Vec<CofiniteMarker>,
}

impl SigmaSystem {
    pub fn new(universe: Vec<Var>) -> Self {
        SigmaSystem {
            universe,
            ..SigmaSystem::default()
        }
    }

    /// Universe `x1, ..., xn` as the first `n` variable indices.
    pub fn ambient(n: u32) -> Self {
        SigmaSystem::new((0..n).map(Var).collect())
    }

    pub fn push_equation(&mut self, p: QPoly) {
        self.equations.push(p);
    }

    pub fn push_inequation(&mut self, p: QPoly) {
        self.inequations.push(p);
    }

    pub fn push_marker(&mut self, m: CofiniteMarker) {
        self.markers.push(m);
    }

    pub fn universe(&self) -> &[Var] {
        &self.universe
    }

    pub fn equations(&self) -> &[QPoly] {
        &self.equations
    }

    pub fn inequations(&self) -> &[QPoly] {
        &self.inequations
    }

    pub fn markers(&self) -> &[CofiniteMarker] {
        &self.markers
    }

    /// Groups members by leader, rejecting structurally non-simple shapes.
    pub fn partition_by_leader(&self) -> Result<BTreeMap<Var, LeaderBlock<'_>>, SigmaError> {
        let in_universe = |v: &Var| self.universe.contains(v);
        let mut blocks: BTreeMap<Var, LeaderBlock> = BTreeMap::new();
        for p in &self.equations {
            let v = p.leader().ok_or(SigmaError::ConstantMember)?;
            for w in p.vars() {
                if !in_universe(&w) {
                    return Err(SigmaError::OutsideUniverse(w));
                }
            }
            let b = blocks.entry(v).or_default();
            if b.equation.is_some() {
                return Err(SigmaError::DuplicateEquationLeader(v));
            }
            b.equation = Some(p);
        }
        for p in &self.inequations {
            let v = p.leader().ok_or(SigmaError::ConstantMember)?;
            for w in p.vars() {
                if !in_universe(&w) {
                    return Err(SigmaError::OutsideUniverse(w));
                }
            }
            blocks.entry(v).or_default().inequations.push(p);
        }
        for m in &self.markers {
            if !in_universe(&m.var) {
                return Err(SigmaError::OutsideUniverse(m.var));
            }
            let b = blocks.entry(m.var).or_default();
            if b.marker.is_some() {
                return Err(SigmaError::DuplicateMarker(m.var));
            }
            b.marker = Some(m);
        }
        for (v, b) in &blocks {
            if b.equation.is_some() && !b.inequations.is_empty() {
                return Err(SigmaError::MixedConstraint(*v));
            }
            if b.equation.is_some() && b.marker.is_some() {
                return Err(SigmaError::MarkerOnEquationLeader(*v));
            }
        }
        Ok(blocks)
    }

    /// Checks structural simplicity and certifies the semantic requirements
    /// as far as the prover reaches.
    pub fn validate(&self) -> Result<SimpleCertificate, SigmaError> {
        let blocks = self.partition_by_leader()?;
        let ctx = self.nonzero_ctx();
        let mut cert = SimpleCertificate::proved();
        let check = |p: &QPoly| -> CertStatus {
            if prove_nonzero(p, &ctx) {
                CertStatus::Proved
            } else {
                CertStatus::AssumedByCaller
            }
        };
        for (v, b) in &blocks {
            for p in b.equation.iter().copied().chain(b.inequations.iter().copied()) {
                let ini = p.initial_wrt(v);
                if !ini.is_constant() || ini.is_zero() {
                    cert.initials_nonvanishing = cert.initials_nonvanishing.and(check(&ini));
                }
                if p.degree_in(v) >= 2 {
                    let disc = resultant(p, &p.derivative(v), v);
                    cert.squarefree_fibers = cert.squarefree_fibers.and(check(&disc));
                }
            }
            for (i, q1) in b.inequations.iter().enumerate() {
                for q2 in &b.inequations[i + 1..] {
                    let res = resultant(q1, q2, v);
                    cert.inequations_coprime = cert.inequations_coprime.and(check(&res));
                }
            }
            if let Some(m) = b.marker {
                let status = match (&m.family, b.inequations.is_empty()) {
                    (Some(f), true) if family_values_distinct(f) && family_scale_nonzero(f) => {
                        CertStatus::Proved
                    }
                    _ => CertStatus::AssumedByCaller,
                };
                cert.markers_consistent = cert.markers_consistent.and(status);
            }
        }
        Ok(cert)
    }

    /// The counting polynomial, requiring every certificate to be proven.
    pub fn count(&self) -> Result<CountingPolynomial, SigmaError> {
        let cert = self.validate()?;
        if cert.initials_nonvanishing != CertStatus::Proved {
            return Err(SigmaError::Unproven("initials nonvanishing"));
        }
        if cert.squarefree_fibers != CertStatus::Proved {
            return Err(SigmaError::Unproven("squarefree fibers"));
        }
        if cert.inequations_coprime != CertStatus::Proved {
            return Err(SigmaError::Unproven("inequations pairwise coprime"));
        }
        if cert.markers_consistent != CertStatus::Proved {
            return Err(SigmaError::Unproven("marker exclusions distinct"));
        }
        self.count_assuming_certificates()
    }

    /// The counting polynomial, trusting the caller for any requirement the
    /// prover could not establish. Structural simplicity is still enforced.
    pub fn count_assuming_certificates(&self) -> Result<CountingPolynomial, SigmaError> {
        let blocks = self.partition_by_leader()?;
        let mut acc = CountingPolynomial::one();
        for v in &self.universe {
            acc = acc.mul(&factor_for(blocks.get(v)));
        }
        Ok(acc)
    }

    /// Context for proving values nonzero on this system's solution set.
    pub fn nonzero_ctx(&self) -> NonzeroCtx {
        let mut eqs = BTreeMap::new();
        for p in &self.equations {
            if let Some(v) = p.leader() {
                eqs.entry(v).or_insert_with(|| p.clone());
            }
        }
        NonzeroCtx {
            eqs,
            ineqs: self.inequations.clone(),
            markers: self.markers.clone(),
        }
    }
}

/// Per-variable contribution to the count.
fn factor_for(block: Option<&LeaderBlock>) -> CountingPolynomial {
    let oo = CountingPolynomial::oo();
    match block {
        None => oo,
        Some(b) => {
            if let Some(e) = b.equation {
                let v = e.leader().expect("equation member has a leader");
                return CountingPolynomial::from_int(e.degree_in(&v) as i64);
            }
            let mut acc = oo;
            for q in &b.inequations {
                let v = q.leader().expect("inequation member has a leader");
                acc = acc.sub(&CountingPolynomial::from_int(q.degree_in(&v) as i64));
            }
            if b.marker.is_some() {
                acc = acc.sub(&CountingPolynomial::n0());
            }
            acc
        }
    }
}

/// The excluded values are pairwise distinct for all admissible indices:
/// substitute `i = from + s`, `j = from + s + t + 1` into
/// `a(j) b(i) - a(i) b(j)` and require every coefficient of the resulting
/// polynomial in `s, t` to carry the same sign.
fn family_values_distinct(f: &ExcludedFamily) -> bool {
    let s = QPoly::var(Var(0));
    let t = QPoly::var(Var(1));
    let pi = s.add(&QPoly::constant(rat_int(f.from)));
    let pj = s.add(&t).add(&QPoly::constant(rat_int(f.from + 1)));
    let ai = compose_unipoly(&f.scale, &pi);
    let aj = compose_unipoly(&f.scale, &pj);
    let bi = compose_unipoly(&f.offset, &pi);
    let bj = compose_unipoly(&f.offset, &pj);
    let r = aj.mul(&bi).sub(&ai.mul(&bj));
    same_sign_coefficients(&r)
}

/// `a(from + s)` has coefficients of one sign, so no admissible index makes
/// the scale vanish.
fn family_scale_nonzero(f: &ExcludedFamily) -> bool {
    let s = QPoly::var(Var(0));
    let shifted = compose_unipoly(&f.scale, &s.add(&QPoly::constant(rat_int(f.from))));
    same_sign_coefficients(&shifted)
}

fn compose_unipoly(p: &UniPoly, arg: &QPoly) -> QPoly {
    let mut acc = QPoly::zero();
    for c in p.coeffs().iter().rev() {
        acc = acc.mul(arg).add(&QPoly::constant(c.clone()));
    }
    acc
}

fn same_sign_coefficients(p: &QPoly) -> bool {
    if p.is_zero() {
        return false;
    }
    let mut signs = p.terms().map(|(_, c)| c.is_positive());
    let first = signs.next().expect("nonzero polynomial has a term");
    signs.all(|s| s == first)
}

/// Reduces `p` by a triangular set of equations: one pseudo-remainder
/// cascade from the highest leader down. On the solution set the result
/// vanishes exactly when `p` does, provided the equation initials are
/// nonzero there.
pub fn reduce_by_triangular(p: &QPoly, eqs: &BTreeMap<Var, QPoly>) -> QPoly {
    let mut r = p.clone();
    for (v, e) in eqs.iter().rev() {
        if r.degree_in(v) >= e.degree_in(v) && e.degree_in(v) >= 1 {
            r = r.pseudo_div(e, v).rem;
        }
    }
    r
}

/// Everything known to be satisfied on a solution set, for use in nonzero
/// proofs: triangular equations, inequations and marker exclusions.
#[derive(Clone, Debug, Default)]
pub struct NonzeroCtx {
    pub eqs: BTreeMap<Var, QPoly>,
    pub ineqs: Vec<QPoly>,
    pub markers: Vec<CofiniteMarker>,
}

/// Tries to prove that `p` vanishes nowhere on the solution set described
/// by the context. The strategy, in order: reduce by the equations, strip
/// factors excluded by inequations or marker instances, and eliminate an
/// equation-bound leader through a resultant, recursing on the result.
/// `false` means no proof was found, not that `p` vanishes.
pub fn prove_nonzero(p: &QPoly, ctx: &NonzeroCtx) -> bool {
    let mut r = reduce_by_triangular(p, &ctx.eqs);
    if r.is_zero() {
        return false;
    }
    // Common factors with an inequation are nonzero on the solution set and
    // can be divided out; gcd-based stripping also reaches factors hidden
    // inside merged inequations.
    loop {
        if let Some(c) = r.as_constant() {
            return !c.is_zero();
        }
        let mut stripped = false;
        for q in &ctx.ineqs {
            let g = crate::poly::mv_gcd(&r, q);
            if !g.is_constant() {
                r = r.try_exact_div(&g).expect("gcd divides");
                stripped = true;
                if r.is_constant() {
                    break;
                }
            }
        }
        if !stripped {
            break;
        }
    }
    if let Some(c) = r.as_constant() {
        return !c.is_zero();
    }
    // linear match against a marker's excluded family
    for m in &ctx.markers {
        if let Some(f) = &m.family {
            if r.degree_in(&m.var) == 1 && r.vars().len() == 1 && r.leader() == Some(m.var) {
                let alpha = r.coeff_of_power(&m.var, 1).as_constant();
                let beta = r.coeff_of_power(&m.var, 0).as_constant().map(|c| -c);
                if let (Some(alpha), Some(beta)) = (alpha, beta) {
                    if f.matches_instance(&alpha, &beta) {
                        return true;
                    }
                }
            }
        }
    }
    // eliminate the leader through its equation
    let v = match r.leader() {
        Some(v) => v,
        None => return false,
    };
    if let Some(e) = ctx.eqs.get(&v) {
        let res = resultant(e, &r, &v);
        if res.is_zero() {
            return false;
        }
        return prove_nonzero(&res, ctx);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> QPoly {
        QPoly::var(Var(0))
    }
    fn y() -> QPoly {
        QPoly::var(Var(1))
    }
    fn oo() -> CountingPolynomial {
        CountingPolynomial::oo()
    }

    #[test]
    fn hyperbola_counts_affine_line_minus_a_point() {
        // x != 0, x*y - 1 = 0 in the plane
        let mut s = SigmaSystem::ambient(2);
        s.push_inequation(x());
        s.push_equation(x().mul(&y()).sub(&QPoly::one()));
        let cert = s.validate().unwrap();
        assert!(cert.all_proved());
        assert_eq!(s.count().unwrap(), oo().sub(&CountingPolynomial::one()));
    }

    #[test]
    fn parabola_fiber_squarefreeness_is_not_provable() {
        // y^2 - x = 0: the fiber over x = 0 is a double root
        let mut s = SigmaSystem::ambient(2);
        s.push_equation(y().pow(2).sub(&x()));
        let cert = s.validate().unwrap();
        assert_eq!(cert.squarefree_fibers, CertStatus::AssumedByCaller);
        assert_eq!(cert.initials_nonvanishing, CertStatus::Proved);
        assert!(s.count().is_err());
        assert_eq!(
            s.count_assuming_certificates().unwrap(),
            CountingPolynomial::from_int(2).mul(&oo())
        );
    }

    #[test]
    fn truncated_square_derivative_system() {
        // g1^2 - 1 = 0, 2 g1 g2 = 0 with g0 free
        let g1 = QPoly::var(Var(1));
        let g2 = QPoly::var(Var(2));
        let mut s = SigmaSystem::ambient(3);
        s.push_equation(g1.pow(2).sub(&QPoly::one()));
        s.push_equation(g1.scale(&rat_int(2)).mul(&g2));
        let cert = s.validate().unwrap();
        assert!(cert.all_proved(), "{cert:?}");
        assert_eq!(
            s.count().unwrap(),
            CountingPolynomial::from_int(2).mul(&oo())
        );
    }

    #[test]
    fn disjoint_inequations_subtract_their_degrees() {
        // v != 1, 2v != 1, u free
        let v = QPoly::var(Var(1));
        let mut s = SigmaSystem::ambient(2);
        s.push_inequation(v.sub(&QPoly::one()));
        s.push_inequation(v.scale(&rat_int(2)).sub(&QPoly::one()));
        let cert = s.validate().unwrap();
        assert!(cert.all_proved());
        assert_eq!(
            s.count().unwrap(),
            oo().sub(&CountingPolynomial::from_int(2)).mul(&oo())
        );
    }

    #[test]
    fn marker_with_certified_family() {
        // v avoids 1/i for all i >= 1
        let mut s = SigmaSystem::ambient(1);
        s.push_marker(CofiniteMarker {
            var: Var(0),
            family: Some(ExcludedFamily {
                scale: UniPoly::x(),
                offset: UniPoly::from_int(1),
                from: 1,
            }),
        });
        let cert = s.validate().unwrap();
        assert!(cert.all_proved());
        assert_eq!(
            s.count().unwrap(),
            oo().sub(&CountingPolynomial::n0())
        );
    }

    #[test]
    fn marker_without_family_needs_caller_assumption() {
        let mut s = SigmaSystem::ambient(1);
        s.push_marker(CofiniteMarker {
            var: Var(0),
            family: None,
        });
        let cert = s.validate().unwrap();
        assert_eq!(cert.markers_consistent, CertStatus::AssumedByCaller);
        assert_eq!(
            s.count_assuming_certificates().unwrap(),
            oo().sub(&CountingPolynomial::n0())
        );
    }

    #[test]
    fn structural_rejections() {
        let mut s = SigmaSystem::ambient(2);
        s.push_equation(y().sub(&x()));
        s.push_equation(y().add(&x()));
        assert_eq!(
            s.validate(),
            Err(SigmaError::DuplicateEquationLeader(Var(1)))
        );

        let mut s = SigmaSystem::ambient(2);
        s.push_equation(y().sub(&x()));
        s.push_inequation(y().add(&x()));
        assert_eq!(s.validate(), Err(SigmaError::MixedConstraint(Var(1))));

        let mut s = SigmaSystem::ambient(2);
        s.push_equation(QPoly::one());
        assert_eq!(s.validate(), Err(SigmaError::ConstantMember));

        let mut s = SigmaSystem::ambient(1);
        s.push_equation(y().sub(&QPoly::one()));
        assert_eq!(s.validate(), Err(SigmaError::OutsideUniverse(Var(1))));

        let mut s = SigmaSystem::ambient(1);
        s.push_equation(x());
        s.push_marker(CofiniteMarker {
            var: Var(0),
            family: None,
        });
        assert_eq!(s.validate(), Err(SigmaError::MarkerOnEquationLeader(Var(0))));
    }

    #[test]
    fn nonzero_prover_uses_marker_instances() {
        // context: v avoids 1/i for i >= 1; then 3v - 1 is nonzero
        let ctx = NonzeroCtx {
            eqs: BTreeMap::new(),
            ineqs: vec![],
            markers: vec![CofiniteMarker {
                var: Var(0),
                family: Some(ExcludedFamily {
                    scale: UniPoly::x(),
                    offset: UniPoly::from_int(1),
                    from: 1,
                }),
            }],
        };
        let p = x().scale(&rat_int(3)).sub(&QPoly::one());
        assert!(prove_nonzero(&p, &ctx));
        // 3v - 2 is not an instance (i = 2/3 is not an integer)
        let p = x().scale(&rat_int(3)).sub(&QPoly::int(2));
        assert!(!prove_nonzero(&p, &ctx));
        // 0*v - 1 style: i = 0 is below the family start
        let f = ExcludedFamily {
            scale: UniPoly::x(),
            offset: UniPoly::from_int(1),
            from: 1,
        };
        assert!(!f.matches_instance(&rat_int(0), &rat_int(1)));
    }

    #[test]
    fn nonzero_prover_recurses_through_resultants() {
        // on g1^2 = 1, the value 2 g1 never vanishes
        let g1 = QPoly::var(Var(0));
        let mut eqs = BTreeMap::new();
        eqs.insert(Var(0), g1.pow(2).sub(&QPoly::one()));
        let ctx = NonzeroCtx {
            eqs,
            ineqs: vec![],
            markers: vec![],
        };
        assert!(prove_nonzero(&g1.scale(&rat_int(2)), &ctx));
        // g1 - 1 vanishes on half the solutions
        assert!(!prove_nonzero(&g1.sub(&QPoly::one()), &ctx));
    }
}
