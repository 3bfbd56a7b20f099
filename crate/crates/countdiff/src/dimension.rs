//! Dimension functions and dimension polynomials of leader sets.
//!
//! A leader set records, for each of `m` unknown functions in `n` base
//! variables, the minimal derivatives that lead an equation. A derivative
//! is *principal* when it dominates some leader of its function and
//! *parametric* otherwise; the dimension function counts the parametric
//! derivatives up to a given order. By inclusion–exclusion over the leader
//! cones the count is an integer-valued polynomial for all large orders,
//! and its binomial-basis coefficients are the classical differential
//! invariants.

use num_traits::Zero;

use crate::counting::UniPoly;
use crate::diffalg::MultiIndex;
use crate::poly::{rat_int, Rat};

/// Inclusion–exclusion over subsets of a leader family is exponential;
/// leader families beyond this size are rejected.
pub const MAX_LEADERS_PER_FUNCTION: usize = 12;

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum DimensionError {
    #[error("a function has {0} leaders, more than the supported {MAX_LEADERS_PER_FUNCTION}")]
    TooManyLeaders(usize),
    #[error("a leader has {got} entries, expected {expected}")]
    WrongArity { expected: usize, got: usize },
    #[error("polynomial degree {degree} exceeds the number of base variables {n}")]
    DegreeExceedsN { degree: usize, n: u32 },
}

/// The leaders of a triangular differential system, grouped by function.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LeaderSet {
    n: usize,
    leaders: Vec<Vec<MultiIndex>>,
}

impl LeaderSet {
    /// Builds a leader set for `leaders.len()` functions in `n` base
    /// variables. Each family is reduced to its minimal elements: a leader
    /// dominating another is absorbed by it.
    pub fn new(n: usize, leaders: Vec<Vec<MultiIndex>>) -> Result<Self, DimensionError> {
        let mut minimal = Vec::with_capacity(leaders.len());
        for family in leaders {
            for mu in &family {
                if mu.len() != n {
                    return Err(DimensionError::WrongArity {
                        expected: n,
                        got: mu.len(),
                    });
                }
            }
            let mut keep: Vec<MultiIndex> = Vec::new();
            for mu in family {
                if keep.iter().any(|nu| mu.dominates(nu)) {
                    continue;
                }
                keep.retain(|nu| !nu.dominates(&mu));
                keep.push(mu);
            }
            keep.sort();
            if keep.len() > MAX_LEADERS_PER_FUNCTION {
                return Err(DimensionError::TooManyLeaders(keep.len()));
            }
            minimal.push(keep);
        }
        Ok(LeaderSet {
            n,
            leaders: minimal,
        })
    }

    pub fn n_indep(&self) -> usize {
        self.n
    }

    pub fn n_funcs(&self) -> usize {
        self.leaders.len()
    }

    pub fn families(&self) -> &[Vec<MultiIndex>] {
        &self.leaders
    }

    /// Whether the derivative `(func, mu)` is parametric, i.e. dominates no
    /// leader of its function.
    pub fn is_parametric(&self, func: usize, mu: &MultiIndex) -> bool {
        self.leaders[func].iter().all(|nu| !mu.dominates(nu))
    }
}

fn comb(t: u64, k: u64) -> u64 {
    if k > t {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k.min(t - k) {
        acc = acc * u128::from(t - i) / u128::from(i + 1);
    }
    u64::try_from(acc).expect("binomial fits in u64")
}

/// Subsets of one leader family with the order of their componentwise
/// maximum and the inclusion–exclusion sign.
fn cone_terms(family: &[MultiIndex]) -> Vec<(u32, i64)> {
    let k = family.len();
    let mut out = Vec::with_capacity((1usize << k) - 1);
    for mask in 1u32..(1u32 << k) {
        let mut join: Option<MultiIndex> = None;
        for (i, mu) in family.iter().enumerate() {
            if mask & (1 << i) != 0 {
                join = Some(match join {
                    None => mu.clone(),
                    Some(j) => j.join(mu),
                });
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        out.push((join.expect("nonempty subset").order(), sign));
    }
    out
}

/// The number of parametric derivatives of order at most `ell`: the
/// dimension function of the leader set.
pub fn dimension_function(set: &LeaderSet, ell: u32) -> u64 {
    let n = set.n as u64;
    let mut total = i128::from(set.n_funcs() as u64 * comb(u64::from(ell) + n, n));
    for family in &set.leaders {
        for (order, sign) in cone_terms(family) {
            if ell >= order {
                let count = comb(u64::from(ell - order) + n, n);
                total -= i128::from(sign) * i128::from(count);
            }
        }
    }
    u64::try_from(total).expect("parametric count is nonnegative")
}

/// The dimension polynomial and the order from which it agrees with the
/// dimension function.
pub fn dimension_polynomial(set: &LeaderSet) -> (UniPoly, u32) {
    let n = set.n as u32;
    let mut poly = UniPoly::binomial(i64::from(n), n)
        .scale(&rat_int(set.n_funcs() as i64));
    let mut threshold = 0u32;
    for family in &set.leaders {
        for (order, sign) in cone_terms(family) {
            threshold = threshold.max(order);
            let term =
                UniPoly::binomial(i64::from(n) - i64::from(order), n).scale(&rat_int(sign));
            poly = poly.sub(&term);
        }
    }
    (poly, threshold)
}

/// Brute-force oracle: counts the parametric derivatives of order at most
/// `ell` by enumeration.
pub fn enumerate_parametric(set: &LeaderSet, ell: u32) -> u64 {
    let mut count = 0u64;
    let mut cur = vec![0u32; set.n];
    fn rec(
        pos: usize,
        left: u32,
        cur: &mut Vec<u32>,
        set: &LeaderSet,
        count: &mut u64,
    ) {
        if pos == cur.len() {
            let mu = MultiIndex::new(cur.clone());
            for f in 0..set.n_funcs() {
                if set.is_parametric(f, &mu) {
                    *count += 1;
                }
            }
            return;
        }
        for e in 0..=left {
            cur[pos] = e;
            rec(pos + 1, left - e, cur, set, count);
        }
        cur[pos] = 0;
    }
    rec(0, ell, &mut cur, set, &mut count);
    count
}

/// The classical invariants of an integer-valued polynomial written in the
/// binomial basis `C(l+i, i)`, `i = 0..=n`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DifferentialInvariants {
    /// Degree of the polynomial (0 for the zero polynomial).
    pub diff_type: u32,
    /// Coefficient of the basis element whose index is the degree.
    pub typical_dim: Rat,
    /// Coefficient of the top basis element `C(l+n, n)`.
    pub diff_dim: Rat,
    /// All basis coefficients, index `i` holding the coefficient of
    /// `C(l+i, i)`.
    pub coefficients: Vec<Rat>,
}

/// Decomposes a polynomial of degree at most `n` over the binomial basis
/// and reads off the differential type, typical dimension and dimension.
pub fn differential_invariants(
    omega: &UniPoly,
    n: u32,
) -> Result<DifferentialInvariants, DimensionError> {
    let degree = omega.degree().unwrap_or(0);
    if degree > n as usize {
        return Err(DimensionError::DegreeExceedsN { degree, n });
    }
    let mut rem = omega.clone();
    let mut coeffs = vec![Rat::zero(); n as usize + 1];
    for i in (0..=n).rev() {
        let basis = UniPoly::binomial(i64::from(i), i);
        let coeff = match rem.degree() {
            Some(d) if d == i as usize => {
                let lead = rem.leading().clone();
                let basis_lead = basis.leading().clone();
                lead / basis_lead
            }
            _ => continue,
        };
        rem = rem.sub(&basis.scale(&coeff));
        coeffs[i as usize] = coeff;
    }
    debug_assert!(rem.is_zero(), "binomial basis spans all polynomials");
    let typ = degree as u32;
    Ok(DifferentialInvariants {
        diff_type: typ,
        typical_dim: coeffs[typ as usize].clone(),
        diff_dim: coeffs[n as usize].clone(),
        coefficients: coeffs,
    })
}
