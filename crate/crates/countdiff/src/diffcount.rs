//! Counting sequences and counting polynomials for differential systems.
//!
//! For a simple differential system the number of truncated power-series
//! solutions at each order is a product of leader degrees times a power of
//! `oo` whose exponent is the dimension function; from the threshold order
//! on, the exponent follows the dimension polynomial, giving a closed-form
//! differential counting polynomial. The module also handles coefficient
//! inequations on parametric derivatives, stratified counting driven by
//! manifest descriptions (differential, family and residual strata) with
//! closed-form fitting of the resulting sequences, and a cross-check that
//! compares the predicted sequence against actual truncation systems.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::counting::{
    CountingPolynomial, CountingSequence, DifferentialCountingPolynomial, SequenceEvalError,
    UniPoly,
};
use crate::diffalg::{
    passivity_probe, rho, truncation_system, CoeffUniverse, DiffError, DiffPoly, DiffVar,
    DifferentialSystem, MultiIndex, Passivity,
};
use crate::dimension::{dimension_function, dimension_polynomial, LeaderSet};
use crate::poly::{rat_int, Int, Mono, Poly, Rat, Var};
use crate::sigma::{CofiniteMarker, ExcludedFamily, QPoly, SigmaError, SigmaSystem};

/// An algebraic polynomial in the series coefficient symbols, with exact
/// rational coefficients. Unlike [`QPoly`] its variables carry their own
/// identity, so the same polynomial can be placed into coefficient
/// universes of different truncation orders.
pub type CoeffPoly = Poly<DiffVar, Rat>;

#[derive(Clone, PartialEq, Debug, thiserror::Error)]
pub enum StratumError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error(transparent)]
    Sequence(#[from] SequenceEvalError),
    #[error("the truncation order is not available in this context")]
    OrderNotInScope,
    #[error("unbound index name `{0}`")]
    UnboundBinder(String),
    #[error("expansion point has no coordinate {0}")]
    BadZetaIndex(usize),
    #[error("function index {got} out of range, the system has {count} functions")]
    BadFunctionIndex { got: u16, count: usize },
    #[error("a derivative index list has {got} entries, expected {expected}")]
    BadIndexArity { expected: usize, got: usize },
    #[error("expected an integer value, found {0}")]
    NonInteger(String),
    #[error("expected a scalar value")]
    NonScalar,
    #[error("division by zero")]
    DivisionByZero,
    #[error("negative value {0} where a nonnegative index is required")]
    NegativeIndex(i64),
    #[error("exponent {0} is too large")]
    ExponentTooLarge(i64),
    #[error("unsupported expression in an excluded-family description")]
    BadFamilyExpression,
}

// ---------------------------------------------------------------------------
// simple differential systems
// ---------------------------------------------------------------------------

/// A differential system validated for triangularity: every equation has a
/// leader, and no leader is a derivative of another leader of the same
/// function. Construction runs the passivity probe; when it does not
/// verify, counting results are conditional on the system's passivity.
#[derive(Clone, Debug)]
pub struct SimpleDifferentialSystem {
    system: DifferentialSystem,
    leaders: Vec<DiffVar>,
    degrees: Vec<u32>,
    leader_set: LeaderSet,
    passivity: Passivity,
}

impl SimpleDifferentialSystem {
    pub fn new(system: DifferentialSystem) -> Result<Self, DiffError> {
        let leaders = system.leaders()?;
        for (i, a) in leaders.iter().enumerate() {
            for (k, b) in leaders.iter().enumerate() {
                if i != k && a.func == b.func && a.mu.dominates(&b.mu) {
                    return Err(DiffError::NotSimple(format!(
                        "leader {a:?} is a derivative of leader {b:?}"
                    )));
                }
            }
        }
        let degrees = leaders
            .iter()
            .zip(system.equations.iter())
            .map(|(ld, eq)| eq.degree_in(ld))
            .collect();
        let mut families = vec![Vec::new(); system.func_names.len()];
        for ld in &leaders {
            families[ld.func as usize].push(ld.mu.clone());
        }
        let leader_set = LeaderSet::new(system.n_indep, families)
            .map_err(|e| DiffError::NotSimple(e.to_string()))?;
        let passivity = passivity_probe(&system);
        Ok(SimpleDifferentialSystem {
            system,
            leaders,
            degrees,
            leader_set,
            passivity,
        })
    }

    pub fn system(&self) -> &DifferentialSystem {
        &self.system
    }

    pub fn leaders(&self) -> &[DiffVar] {
        &self.leaders
    }

    pub fn leader_degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn leader_set(&self) -> &LeaderSet {
        &self.leader_set
    }

    pub fn passivity(&self) -> &Passivity {
        &self.passivity
    }

    pub fn max_order(&self) -> u32 {
        self.leaders.iter().map(|l| l.order()).max().unwrap_or(0)
    }

    /// Verifies that no equation coefficient has a pole at the expansion
    /// point and that the image of every initial and separant is nonzero as
    /// a polynomial in the coefficient symbols.
    pub fn check_leading_data(&self, zeta: &[Rat]) -> Result<(), DiffError> {
        if zeta.len() != self.system.n_indep {
            return Err(DiffError::BadExpansionPoint {
                expected: self.system.n_indep,
                got: zeta.len(),
            });
        }
        let at: BTreeMap<Var, Rat> = zeta
            .iter()
            .enumerate()
            .map(|(i, z)| (Var(i as u32), z.clone()))
            .collect();
        for (eq, ld) in self.system.equations.iter().zip(self.leaders.iter()) {
            for (_, c) in eq.terms() {
                if c.eval(&at).is_none() {
                    return Err(DiffError::PoleAtExpansionPoint);
                }
            }
            let uni = CoeffUniverse::new(
                self.system.func_names.clone(),
                self.system.n_indep,
                ld.order(),
            );
            let ini = rho(&eq.initial_wrt(ld), zeta, &uni)?;
            let sep = rho(&eq.derivative(ld), zeta, &uni)?;
            if ini.is_zero() || sep.is_zero() {
                return Err(DiffError::VanishingInitialOrSeparant);
            }
        }
        Ok(())
    }
}

/// One parametric coordinate restricted by coefficient inequations:
/// `total_degree` excluded points, available from truncation order `order`.
#[derive(Clone, PartialEq, Eq, Debug)]
struct IneqBlock {
    leader: DiffVar,
    order: u32,
    total_degree: u32,
}

/// Groups coefficient inequations by leader and validates that every
/// leader is a parametric derivative of the system.
fn inequation_blocks(
    s: &SimpleDifferentialSystem,
    ineqs: &[CoeffPoly],
) -> Result<Vec<IneqBlock>, DiffError> {
    let mut map: BTreeMap<DiffVar, (u32, u32)> = BTreeMap::new();
    for q in ineqs {
        let ld = q
            .leader()
            .ok_or_else(|| DiffError::NotSimple("constant coefficient inequation".into()))?;
        if !s.leader_set.is_parametric(ld.func as usize, &ld.mu) {
            return Err(DiffError::NotSimple(format!(
                "coefficient inequation leads in the principal derivative {ld:?}"
            )));
        }
        let reach = q.vars().into_iter().map(|v| v.order()).max().unwrap_or(0);
        let deg = q.degree_in(&ld);
        let entry = map.entry(ld).or_insert((0, 0));
        entry.0 = entry.0.max(reach);
        entry.1 += deg;
    }
    Ok(map
        .into_iter()
        .map(|(leader, (order, total_degree))| IneqBlock {
            leader,
            order,
            total_degree,
        })
        .collect())
}

fn oo_power(e: u64) -> CountingPolynomial {
    CountingPolynomial::oo_pow(u32::try_from(e).expect("exponent fits in u32"))
}

/// The number of truncated solutions at one order: leader degrees for the
/// equations in range, one `oo - d` factor per restricted parametric
/// coordinate, and `oo` for every free parametric coordinate.
fn order_value(
    s: &SimpleDifferentialSystem,
    blocks: &[IneqBlock],
    ell: u32,
) -> CountingPolynomial {
    let mut value = CountingPolynomial::one();
    for (ld, deg) in s.leaders.iter().zip(s.degrees.iter()) {
        if ld.order() <= ell {
            value = value.scale(&Int::from(*deg));
        }
    }
    let mut restricted = 0u64;
    for b in blocks {
        if b.order <= ell {
            let factor = CountingPolynomial::oo()
                .sub(&CountingPolynomial::from_int(i64::from(b.total_degree)));
            value = value.mul(&factor);
            restricted += 1;
        }
    }
    let omega = dimension_function(&s.leader_set, ell);
    debug_assert!(omega >= restricted, "restricted coordinates are parametric");
    value.mul(&oo_power(omega - restricted))
}

/// The closed-form tail: the dimension polynomial in the exponent, the
/// product of all leader degrees in the coefficient, and the expanded
/// `oo - d` factors of the restricted coordinates.
fn tail_polynomial(
    s: &SimpleDifferentialSystem,
    blocks: &[IneqBlock],
    omega: &UniPoly,
) -> DifferentialCountingPolynomial {
    let mut prod = Int::one();
    for deg in &s.degrees {
        prod *= Int::from(*deg);
    }
    let mut expansion: Vec<(Int, u32)> = vec![(prod, 0)];
    for b in blocks {
        let mut next = Vec::with_capacity(expansion.len() * 2);
        for (c, shift) in &expansion {
            next.push((c.clone(), *shift));
            next.push((-(c * Int::from(b.total_degree)), shift + 1));
        }
        expansion = next;
    }
    let mut tail = DifferentialCountingPolynomial::zero();
    for (c, shift) in expansion {
        let exponent = omega.sub(&UniPoly::constant(rat_int(i64::from(shift))));
        let coeff = UniPoly::constant(Rat::from_integer(c));
        tail = tail.add(&DifferentialCountingPolynomial::term(coeff, exponent, 0));
    }
    tail
}

/// The counting sequence of a simple differential system together with
/// coefficient inequations on parametric derivatives: explicit values up
/// to the threshold order, the closed form beyond it.
pub fn counting_sequence_with_inequations(
    s: &SimpleDifferentialSystem,
    zeta: &[Rat],
    ineqs: &[CoeffPoly],
) -> Result<CountingSequence, DiffError> {
    s.check_leading_data(zeta)?;
    let blocks = inequation_blocks(s, ineqs)?;
    let (omega, threshold) = dimension_polynomial(&s.leader_set);
    let block_order = blocks.iter().map(|b| b.order).max().unwrap_or(0);
    let start = threshold.max(s.max_order()).max(block_order);
    let prefix = (0..start).map(|ell| order_value(s, &blocks, ell)).collect();
    let tail = tail_polynomial(s, &blocks, &omega);
    Ok(CountingSequence::new(prefix, tail))
}

/// The counting sequence of a simple differential system: explicit values
/// up to the threshold order, the closed form beyond it.
pub fn counting_sequence_simple(
    s: &SimpleDifferentialSystem,
    zeta: &[Rat],
) -> Result<CountingSequence, DiffError> {
    counting_sequence_with_inequations(s, zeta, &[])
}

/// The differential counting polynomial with coefficient inequations: the
/// closed form valid for all large truncation orders.
pub fn differential_counting_polynomial_with_inequations(
    s: &SimpleDifferentialSystem,
    ineqs: &[CoeffPoly],
) -> Result<DifferentialCountingPolynomial, DiffError> {
    let blocks = inequation_blocks(s, ineqs)?;
    let (omega, _) = dimension_polynomial(&s.leader_set);
    Ok(tail_polynomial(s, &blocks, &omega))
}

/// The differential counting polynomial of a simple differential system:
/// the product of the leader degrees times `oo` to the dimension
/// polynomial.
pub fn differential_counting_polynomial_simple(
    s: &SimpleDifferentialSystem,
) -> DifferentialCountingPolynomial {
    differential_counting_polynomial_with_inequations(s, &[])
        .expect("no inequations, nothing to validate")
}

/// The degree product and `oo`-exponent of the count at one truncation
/// order.
pub fn leading_term(s: &SimpleDifferentialSystem, ell: u32) -> (Int, u64) {
    let mut prod = Int::one();
    for (ld, deg) in s.leaders.iter().zip(s.degrees.iter()) {
        if ld.order() <= ell {
            prod *= Int::from(*deg);
        }
    }
    (prod, dimension_function(&s.leader_set, ell))
}

#[derive(Clone, PartialEq, Debug, thiserror::Error)]
pub enum CrosscheckError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error(transparent)]
    Sequence(#[from] SequenceEvalError),
    #[error("order {ell}: sequence predicts {predicted}, truncation counts {truncated}")]
    Mismatch {
        ell: u32,
        predicted: CountingPolynomial,
        truncated: CountingPolynomial,
    },
}

/// Compares the predicted counting sequence against the count of each
/// actual truncation system, for every order up to `ell_max`. The two
/// sides come from independent computations: the dimension function by
/// inclusion–exclusion, and the triangular block product of the assembled
/// algebraic system.
pub fn crosscheck_truncation(
    s: &SimpleDifferentialSystem,
    zeta: &[Rat],
    ell_max: u32,
) -> Result<(), CrosscheckError> {
    let seq = counting_sequence_simple(s, zeta)?;
    for ell in 0..=ell_max {
        let (trunc, _) = truncation_system(s.system(), zeta, ell)?;
        let truncated = trunc.count_assuming_certificates()?;
        let predicted = seq.value_at(ell)?;
        if truncated != predicted {
            return Err(CrosscheckError::Mismatch {
                ell,
                predicted,
                truncated,
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// stratum expressions
// ---------------------------------------------------------------------------

/// A symbolic expression over the truncation order `l`, named integer
/// indices, the expansion point coordinates and the coefficient symbols
/// `g(f, mu)`. Evaluation produces a polynomial in the coefficient
/// symbols with exact rational coefficients.
#[derive(Clone, PartialEq, Debug)]
pub enum KExpr {
    Num(Rat),
    /// The truncation order.
    L,
    /// A named integer index bound by a family stratum or a declaration.
    Binder(String),
    /// One coordinate of the expansion point.
    Zeta(usize),
    /// A coefficient symbol: function index and derivative indices.
    G(u16, Vec<KExpr>),
    Add(Box<KExpr>, Box<KExpr>),
    Sub(Box<KExpr>, Box<KExpr>),
    Mul(Box<KExpr>, Box<KExpr>),
    Div(Box<KExpr>, Box<KExpr>),
    Pow(Box<KExpr>, Box<KExpr>),
    Neg(Box<KExpr>),
    /// Factorial of a nonnegative integer value.
    Fact(Box<KExpr>),
    /// Binomial coefficient with integer arguments.
    Binom(Box<KExpr>, Box<KExpr>),
}

impl KExpr {
    pub fn int(n: i64) -> Self {
        KExpr::Num(rat_int(n))
    }

    pub fn binder(name: &str) -> Self {
        KExpr::Binder(name.to_string())
    }

    pub fn g(func: u16, indices: Vec<KExpr>) -> Self {
        KExpr::G(func, indices)
    }

    pub fn pow(self, e: KExpr) -> Self {
        KExpr::Pow(Box::new(self), Box::new(e))
    }

    pub fn fact(self) -> Self {
        KExpr::Fact(Box::new(self))
    }

    pub fn binom(top: KExpr, bottom: KExpr) -> Self {
        KExpr::Binom(Box::new(top), Box::new(bottom))
    }
}

impl std::ops::Add for KExpr {
    type Output = KExpr;
    fn add(self, rhs: KExpr) -> KExpr {
        KExpr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for KExpr {
    type Output = KExpr;
    fn sub(self, rhs: KExpr) -> KExpr {
        KExpr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for KExpr {
    type Output = KExpr;
    fn mul(self, rhs: KExpr) -> KExpr {
        KExpr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for KExpr {
    type Output = KExpr;
    fn div(self, rhs: KExpr) -> KExpr {
        KExpr::Div(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for KExpr {
    type Output = KExpr;
    fn neg(self) -> KExpr {
        KExpr::Neg(Box::new(self))
    }
}

/// Evaluation context for stratum expressions.
pub struct KCtx<'a> {
    pub ell: Option<i64>,
    pub binders: BTreeMap<String, i64>,
    pub zeta: &'a [Rat],
    pub n_funcs: usize,
    pub n_indep: usize,
}

fn rat_pow(base: &Rat, e: i64) -> Result<Rat, StratumError> {
    if e.unsigned_abs() > 10_000 {
        return Err(StratumError::ExponentTooLarge(e));
    }
    if e < 0 && base.is_zero() {
        return Err(StratumError::DivisionByZero);
    }
    let mut acc = Rat::one();
    for _ in 0..e.unsigned_abs() {
        acc *= base;
    }
    if e < 0 {
        acc = acc.recip();
    }
    Ok(acc)
}

impl KExpr {
    pub fn eval(&self, ctx: &KCtx) -> Result<CoeffPoly, StratumError> {
        match self {
            KExpr::Num(r) => Ok(CoeffPoly::constant(r.clone())),
            KExpr::L => {
                let l = ctx.ell.ok_or(StratumError::OrderNotInScope)?;
                Ok(CoeffPoly::constant(rat_int(l)))
            }
            KExpr::Binder(name) => {
                let v = ctx
                    .binders
                    .get(name)
                    .ok_or_else(|| StratumError::UnboundBinder(name.clone()))?;
                Ok(CoeffPoly::constant(rat_int(*v)))
            }
            KExpr::Zeta(i) => {
                let z = ctx
                    .zeta
                    .get(*i)
                    .ok_or(StratumError::BadZetaIndex(*i))?;
                Ok(CoeffPoly::constant(z.clone()))
            }
            KExpr::G(func, indices) => {
                if usize::from(*func) >= ctx.n_funcs {
                    return Err(StratumError::BadFunctionIndex {
                        got: *func,
                        count: ctx.n_funcs,
                    });
                }
                if indices.len() != ctx.n_indep {
                    return Err(StratumError::BadIndexArity {
                        expected: ctx.n_indep,
                        got: indices.len(),
                    });
                }
                let mut mu = Vec::with_capacity(indices.len());
                for e in indices {
                    let v = e.eval_index(ctx)?;
                    if v < 0 {
                        return Err(StratumError::NegativeIndex(v));
                    }
                    mu.push(v as u32);
                }
                Ok(CoeffPoly::var(DiffVar::new(*func, MultiIndex::new(mu))))
            }
            KExpr::Add(a, b) => Ok(a.eval(ctx)?.add(&b.eval(ctx)?)),
            KExpr::Sub(a, b) => Ok(a.eval(ctx)?.sub(&b.eval(ctx)?)),
            KExpr::Mul(a, b) => Ok(a.eval(ctx)?.mul(&b.eval(ctx)?)),
            KExpr::Div(a, b) => {
                let divisor = b.eval_scalar(ctx)?;
                if divisor.is_zero() {
                    return Err(StratumError::DivisionByZero);
                }
                Ok(a.eval(ctx)?.scale(&divisor.recip()))
            }
            KExpr::Pow(a, e) => {
                let exp = e.eval_index(ctx)?;
                let base = a.eval(ctx)?;
                match base.as_constant() {
                    Some(c) => Ok(CoeffPoly::constant(rat_pow(&c, exp)?)),
                    None => {
                        if !(0..=64).contains(&exp) {
                            return Err(StratumError::ExponentTooLarge(exp));
                        }
                        Ok(base.pow(exp as u32))
                    }
                }
            }
            KExpr::Neg(a) => Ok(a.eval(ctx)?.neg()),
            KExpr::Fact(a) => {
                let n = a.eval_index(ctx)?;
                if n < 0 {
                    return Err(StratumError::NegativeIndex(n));
                }
                if n > 10_000 {
                    return Err(StratumError::ExponentTooLarge(n));
                }
                let mut acc = Int::one();
                for i in 1..=n {
                    acc *= Int::from(i);
                }
                Ok(CoeffPoly::constant(Rat::from_integer(acc)))
            }
            KExpr::Binom(a, b) => {
                let top = a.eval_index(ctx)?;
                let bottom = b.eval_index(ctx)?;
                if bottom < 0 {
                    return Err(StratumError::NegativeIndex(bottom));
                }
                if bottom > 10_000 {
                    return Err(StratumError::ExponentTooLarge(bottom));
                }
                let mut acc = Rat::one();
                for i in 0..bottom {
                    acc *= Rat::from_integer(Int::from(top - i));
                    acc /= Rat::from_integer(Int::from(i + 1));
                }
                Ok(CoeffPoly::constant(acc))
            }
        }
    }

    pub fn eval_scalar(&self, ctx: &KCtx) -> Result<Rat, StratumError> {
        self.eval(ctx)?
            .as_constant()
            .ok_or(StratumError::NonScalar)
    }

    pub fn eval_index(&self, ctx: &KCtx) -> Result<i64, StratumError> {
        let r = self.eval_scalar(ctx)?;
        if !r.is_integer() {
            return Err(StratumError::NonInteger(r.to_string()));
        }
        i64::try_from(r.to_integer())
            .map_err(|_| StratumError::NonInteger(r.to_string()))
    }
}

/// Converts an expression in one distinguished index name into a
/// univariate polynomial over that index. Used for the excluded-family
/// data of cofinite markers.
fn kexpr_to_unipoly(e: &KExpr, param: &str, ctx: &KCtx) -> Result<UniPoly, StratumError> {
    match e {
        KExpr::Num(r) => Ok(UniPoly::constant(r.clone())),
        KExpr::Binder(name) if name == param => Ok(UniPoly::x()),
        KExpr::Binder(_) | KExpr::L | KExpr::Zeta(_) => {
            Ok(UniPoly::constant(e.eval_scalar(ctx)?))
        }
        KExpr::Add(a, b) => Ok(kexpr_to_unipoly(a, param, ctx)?
            .add(&kexpr_to_unipoly(b, param, ctx)?)),
        KExpr::Sub(a, b) => Ok(kexpr_to_unipoly(a, param, ctx)?
            .sub(&kexpr_to_unipoly(b, param, ctx)?)),
        KExpr::Mul(a, b) => Ok(kexpr_to_unipoly(a, param, ctx)?
            .mul(&kexpr_to_unipoly(b, param, ctx)?)),
        KExpr::Neg(a) => Ok(kexpr_to_unipoly(a, param, ctx)?.neg()),
        KExpr::Div(a, b) => {
            let divisor = kexpr_to_unipoly(b, param, ctx)?;
            let c = divisor.as_rat().ok_or(StratumError::NonScalar)?;
            if c.is_zero() {
                return Err(StratumError::DivisionByZero);
            }
            Ok(kexpr_to_unipoly(a, param, ctx)?.scale(&c.recip()))
        }
        KExpr::Pow(a, e) => {
            let base = kexpr_to_unipoly(a, param, ctx)?;
            let exp = {
                let mut inner = KCtx {
                    ell: ctx.ell,
                    binders: ctx.binders.clone(),
                    zeta: ctx.zeta,
                    n_funcs: ctx.n_funcs,
                    n_indep: ctx.n_indep,
                };
                inner.binders.remove(param);
                e.eval_index(&inner)?
            };
            if !(0..=64).contains(&exp) {
                return Err(StratumError::ExponentTooLarge(exp));
            }
            let mut acc = UniPoly::constant(Rat::one());
            for _ in 0..exp {
                acc = acc.mul(&base);
            }
            Ok(acc)
        }
        KExpr::G(..) | KExpr::Fact(_) | KExpr::Binom(..) => {
            Err(StratumError::BadFamilyExpression)
        }
    }
}

// ---------------------------------------------------------------------------
// strata and manifests
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DeclKind {
    Equation,
    Inequation,
}

/// An optional `for name in lo..hi` quantifier on a declaration; both
/// endpoints are included, and the range is empty when the upper end is
/// smaller than the lower end.
#[derive(Clone, PartialEq, Debug)]
pub struct BinderRange {
    pub name: String,
    pub lo: KExpr,
    pub hi: KExpr,
}

/// One equation or inequation declaration, possibly quantified.
#[derive(Clone, PartialEq, Debug)]
pub struct Decl {
    pub kind: DeclKind,
    pub binder: Option<BinderRange>,
    pub expr: KExpr,
}

/// A cofinite exclusion on one coefficient symbol: for every integer
/// `param >= from`, the value `offset(param) / scale(param)` is excluded.
#[derive(Clone, PartialEq, Debug)]
pub struct MarkerSpec {
    pub func: u16,
    pub indices: Vec<KExpr>,
    pub param: String,
    pub scale: KExpr,
    pub offset: KExpr,
    pub from: i64,
}

/// A stratum described by a differential system with coefficient
/// inequations; counted through the closed product formula.
#[derive(Clone, PartialEq, Debug)]
pub struct DifferentialStratum {
    pub equations: Vec<DiffPoly>,
    pub coeff_inequations: Vec<KExpr>,
}

/// A family of algebraic strata indexed by an integer ranging over an
/// order-dependent interval; each member is counted as a simple system and
/// the members are summed.
#[derive(Clone, PartialEq, Debug)]
pub struct FamilyStratum {
    pub binder: String,
    pub lo: KExpr,
    pub hi: KExpr,
    pub declarations: Vec<Decl>,
}

/// A single algebraic stratum per order, possibly carrying cofinite
/// markers. Markers whose coefficient symbol lies beyond the truncation
/// order are omitted at that order.
#[derive(Clone, PartialEq, Debug)]
pub struct ResidualStratum {
    pub declarations: Vec<Decl>,
    pub markers: Vec<MarkerSpec>,
}

#[derive(Clone, PartialEq, Debug)]
pub enum Stratum {
    Differential(DifferentialStratum),
    Family(FamilyStratum),
    Residual(ResidualStratum),
}

/// A stratified description of the truncated solution sets of a
/// differential system: disjoint strata whose counts add up, valid from
/// order `start` on.
#[derive(Clone, PartialEq, Debug)]
pub struct Manifest {
    pub n_indep: usize,
    pub func_names: Vec<String>,
    pub zeta: Vec<Rat>,
    pub start: u32,
    pub fit_degree: u32,
    pub strata: Vec<Stratum>,
}

pub const DEFAULT_FIT_DEGREE: u32 = 2;
pub const FIT_START_SEARCH_SPAN: u32 = 6;

impl Manifest {
    fn ctx<'a>(&'a self, ell: Option<i64>) -> KCtx<'a> {
        KCtx {
            ell,
            binders: BTreeMap::new(),
            zeta: &self.zeta,
            n_funcs: self.func_names.len(),
            n_indep: self.n_indep,
        }
    }
}

/// Places a coefficient-symbol polynomial into a concrete universe.
fn coeff_to_universe(p: &CoeffPoly, uni: &CoeffUniverse) -> Result<QPoly, DiffError> {
    let mut out = QPoly::zero();
    for (m, c) in p.terms() {
        let mut pairs = Vec::with_capacity(m.pairs().len());
        for (dv, e) in m.pairs() {
            let v = uni
                .var_of(dv)
                .ok_or_else(|| DiffError::OutsideUniverse(format!("{dv:?}")))?;
            pairs.push((v, *e));
        }
        out = out.add(&QPoly::monomial(Mono::from_pairs(pairs), c.clone()));
    }
    Ok(out)
}

/// Expands the declarations into a simple system over the order-`ell`
/// universe. Returns `None` when a constant contradiction makes the
/// stratum empty at this order.
fn instantiate_sigma(
    m: &Manifest,
    decls: &[Decl],
    markers: &[MarkerSpec],
    binders: &BTreeMap<String, i64>,
    ell: u32,
) -> Result<Option<SigmaSystem>, StratumError> {
    let uni = CoeffUniverse::new(m.func_names.clone(), m.n_indep, ell);
    let mut sys = SigmaSystem::new(uni.variables());
    for decl in decls {
        let values: Vec<BTreeMap<String, i64>> = match &decl.binder {
            None => vec![binders.clone()],
            Some(range) => {
                let outer = KCtx {
                    ell: Some(i64::from(ell)),
                    binders: binders.clone(),
                    zeta: &m.zeta,
                    n_funcs: m.func_names.len(),
                    n_indep: m.n_indep,
                };
                let lo = range.lo.eval_index(&outer)?;
                let hi = range.hi.eval_index(&outer)?;
                (lo..=hi)
                    .map(|v| {
                        let mut b = binders.clone();
                        b.insert(range.name.clone(), v);
                        b
                    })
                    .collect()
            }
        };
        for bound in values {
            let ctx = KCtx {
                ell: Some(i64::from(ell)),
                binders: bound,
                zeta: &m.zeta,
                n_funcs: m.func_names.len(),
                n_indep: m.n_indep,
            };
            let p = decl.expr.eval(&ctx)?;
            let q = coeff_to_universe(&p, &uni).map_err(StratumError::Diff)?;
            match decl.kind {
                DeclKind::Equation => {
                    if q.is_zero() {
                        continue;
                    }
                    if q.is_constant() {
                        return Ok(None);
                    }
                    sys.push_equation(q);
                }
                DeclKind::Inequation => {
                    if q.is_zero() {
                        return Ok(None);
                    }
                    if q.is_constant() {
                        continue;
                    }
                    sys.push_inequation(q);
                }
            }
        }
    }
    for marker in markers {
        let ctx = KCtx {
            ell: Some(i64::from(ell)),
            binders: binders.clone(),
            zeta: &m.zeta,
            n_funcs: m.func_names.len(),
            n_indep: m.n_indep,
        };
        let mut mu = Vec::with_capacity(marker.indices.len());
        for e in &marker.indices {
            let v = e.eval_index(&ctx)?;
            if v < 0 {
                return Err(StratumError::NegativeIndex(v));
            }
            mu.push(v as u32);
        }
        let dv = DiffVar::new(marker.func, MultiIndex::new(mu));
        let Some(var) = uni.var_of(&dv) else {
            // the excluded coordinate is not part of this truncation yet
            continue;
        };
        let scale = kexpr_to_unipoly(&marker.scale, &marker.param, &ctx)?;
        let offset = kexpr_to_unipoly(&marker.offset, &marker.param, &ctx)?;
        sys.push_marker(CofiniteMarker {
            var,
            family: Some(ExcludedFamily {
                scale,
                offset,
                from: marker.from,
            }),
        });
    }
    Ok(Some(sys))
}

/// The count contributed by one stratum at one truncation order.
pub fn stratum_value(
    m: &Manifest,
    stratum: &Stratum,
    ell: u32,
) -> Result<CountingPolynomial, StratumError> {
    match stratum {
        Stratum::Differential(d) => {
            let sys = DifferentialSystem::new(
                m.n_indep,
                m.func_names.clone(),
                d.equations.clone(),
            );
            let simple = SimpleDifferentialSystem::new(sys)?;
            simple.check_leading_data(&m.zeta)?;
            let ctx = m.ctx(None);
            let ineqs: Vec<CoeffPoly> = d
                .coeff_inequations
                .iter()
                .map(|e| e.eval(&ctx))
                .collect::<Result<_, _>>()?;
            let blocks = inequation_blocks(&simple, &ineqs)?;
            Ok(order_value(&simple, &blocks, ell))
        }
        Stratum::Family(f) => {
            let ctx = m.ctx(Some(i64::from(ell)));
            let lo = f.lo.eval_index(&ctx)?;
            let hi = f.hi.eval_index(&ctx)?;
            let mut acc = CountingPolynomial::zero();
            for k in lo..=hi {
                let mut binders = BTreeMap::new();
                binders.insert(f.binder.clone(), k);
                match instantiate_sigma(m, &f.declarations, &[], &binders, ell)? {
                    None => continue,
                    Some(sys) => acc = acc.add(&sys.count()?),
                }
            }
            Ok(acc)
        }
        Stratum::Residual(r) => {
            let binders = BTreeMap::new();
            match instantiate_sigma(m, &r.declarations, &r.markers, &binders, ell)? {
                None => Ok(CountingPolynomial::zero()),
                Some(sys) => Ok(sys.count()?),
            }
        }
    }
}

/// The total count of all strata at one truncation order.
pub fn manifest_value(m: &Manifest, ell: u32) -> Result<CountingPolynomial, StratumError> {
    let mut acc = CountingPolynomial::zero();
    for s in &m.strata {
        acc = acc.add(&stratum_value(m, s, ell)?);
    }
    Ok(acc)
}

/// The totals for every order from `start` through `up_to`.
pub fn manifest_values(
    m: &Manifest,
    up_to: u32,
) -> Result<Vec<(u32, CountingPolynomial)>, StratumError> {
    (m.start..=up_to)
        .map(|ell| Ok((ell, manifest_value(m, ell)?)))
        .collect()
}

/// Result of closed-form fitting: either a counting sequence whose tail
/// reproduces every computed value, or the computed values themselves when
/// no stable shape emerged.
#[derive(Clone, Debug)]
pub enum FitOutcome {
    Fitted(CountingSequence),
    NoFit { values: Vec<(u32, CountingPolynomial)> },
}

fn fit_window(ells: &[u32], vals: &[&CountingPolynomial]) -> Option<DifferentialCountingPolynomial> {
    let shapes: Vec<Vec<(u32, u32, Int)>> = vals
        .iter()
        .map(|v| v.terms_desc().map(|(a, b, c)| (a, b, c.clone())).collect())
        .collect();
    let t = shapes[0].len();
    if shapes.iter().any(|s| s.len() != t) {
        return None;
    }
    if t == 0 {
        return Some(DifferentialCountingPolynomial::zero());
    }
    let mut tail = DifferentialCountingPolynomial::zero();
    for slot in 0..t {
        let n0 = shapes[0][slot].1;
        if shapes.iter().any(|s| s[slot].1 != n0) {
            return None;
        }
        let exp_points: Vec<(Rat, Rat)> = ells
            .iter()
            .zip(shapes.iter())
            .map(|(l, s)| (rat_int(i64::from(*l)), rat_int(i64::from(s[slot].0))))
            .collect();
        let coeff_points: Vec<(Rat, Rat)> = ells
            .iter()
            .zip(shapes.iter())
            .map(|(l, s)| (rat_int(i64::from(*l)), Rat::from_integer(s[slot].2.clone())))
            .collect();
        let exponent = UniPoly::interpolate(&exp_points);
        let coeff = UniPoly::interpolate(&coeff_points);
        tail = tail.add(&DifferentialCountingPolynomial::term(coeff, exponent, n0));
    }
    Some(tail)
}

/// Computes the stratified counts and fits a closed form: a window of
/// `fit_degree + 2` consecutive orders determines candidate exponent and
/// coefficient polynomials per term, which are then verified at two
/// further orders. The window start is searched over the first few orders.
pub fn stratified_counting(m: &Manifest) -> Result<FitOutcome, StratumError> {
    let d = m.fit_degree;
    let mut values: Vec<CountingPolynomial> = Vec::new();
    let ensure = |values: &mut Vec<CountingPolynomial>, up_to: u32| -> Result<(), StratumError> {
        while m.start + (values.len() as u32) <= up_to {
            let ell = m.start + values.len() as u32;
            values.push(manifest_value(m, ell)?);
        }
        Ok(())
    };
    for l0 in m.start..=m.start + FIT_START_SEARCH_SPAN {
        let top = l0 + d + 3;
        ensure(&mut values, top)?;
        let window_ells: Vec<u32> = (l0..=l0 + d + 1).collect();
        let window_vals: Vec<&CountingPolynomial> = window_ells
            .iter()
            .map(|l| &values[(l - m.start) as usize])
            .collect();
        let Some(tail) = fit_window(&window_ells, &window_vals) else {
            continue;
        };
        let verified = (l0 + d + 2..=top).all(|l| {
            tail.eval_at(i64::from(l))
                .map(|v| v == values[(l - m.start) as usize])
                .unwrap_or(false)
        });
        if !verified {
            continue;
        }
        let prefix = values[..(l0 - m.start) as usize].to_vec();
        return Ok(FitOutcome::Fitted(CountingSequence::with_first(
            m.start, prefix, tail,
        )));
    }
    let out = values
        .iter()
        .enumerate()
        .map(|(i, v)| (m.start + i as u32, v.clone()))
        .collect();
    Ok(FitOutcome::NoFit { values: out })
}
