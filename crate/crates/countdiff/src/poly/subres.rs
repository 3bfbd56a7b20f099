//! Resultants, subresultant chains and gcds.
//!
//! Subresultants are computed as determinant polynomials of Sylvester-type
//! matrices, with the determinants evaluated by fraction-free elimination.
//! This stays exact over any coefficient field and never divides by a
//! quantity that is not a proven divisor. The chain drives both the generic
//! gcd here and the case distinctions of the decomposition algorithm, which
//! inspects the principal coefficients one by one.

use super::{Field, Mono, Poly, VarKey};

/// One entry of a subresultant chain: the subresultant of the given index
/// and its principal coefficient (the coefficient of `v^index`, possibly
/// zero for defective entries).
#[derive(Clone, Debug)]
pub struct Subresultant<V: VarKey, K: Field> {
    pub index: u32,
    pub poly: Poly<V, K>,
    pub principal: Poly<V, K>,
}

/// Determinant by fraction-free elimination with row pivoting. Exact in any
/// integral domain: every division is by a previous pivot and divides evenly.
fn bareiss_det<V: VarKey, K: Field>(mut m: Vec<Vec<Poly<V, K>>>) -> Poly<V, K> {
    let n = m.len();
    if n == 0 {
        return Poly::one();
    }
    debug_assert!(m.iter().all(|row| row.len() == n));
    let mut negate = false;
    let mut prev = Poly::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(r) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return Poly::zero();
            };
            m.swap(k, r);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = t
                    .try_exact_div(&prev)
                    .expect("fraction-free elimination step divides exactly");
            }
            m[i][k] = Poly::zero();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        det.neg()
    } else {
        det
    }
}

/// Rows of the matrix whose determinant polynomial is the subresultant of
/// index `j`: the polynomials `v^(dq-j-1) p, ..., p, v^(dp-j-1) q, ..., q`
/// written out on the power basis `v^(dp+dq-j-1), ..., v, 1`.
fn chain_rows<V: VarKey, K: Field>(
    p: &Poly<V, K>,
    q: &Poly<V, K>,
    v: &V,
    j: u32,
) -> Vec<Vec<Poly<V, K>>> {
    let dp = p.degree_in(v);
    let dq = q.degree_in(v);
    let width = (dp + dq - j) as usize;
    let top = dp + dq - j - 1;
    let mut rows = Vec::with_capacity((dp + dq - 2 * j) as usize);
    let mut push_shifts = |poly: &Poly<V, K>, count: u32| {
        for s in (0..count).rev() {
            // row for v^s * poly
            let mut row = vec![Poly::zero(); width];
            for (m, c) in poly.terms() {
                let (rest, e) = m.without_var(v);
                let power = e + s;
                let col = (top - power) as usize;
                row[col] = row[col].add(&Poly::monomial(rest, c.clone()));
            }
            rows.push(row);
        }
    };
    push_shifts(p, dq - j);
    push_shifts(q, dp - j);
    rows
}

/// The subresultants of indices `0..deg_v(q)` in ascending order. Requires
/// `deg_v(p) >= deg_v(q) >= 1`.
pub fn subresultant_chain<V: VarKey, K: Field>(
    p: &Poly<V, K>,
    q: &Poly<V, K>,
    v: &V,
) -> Vec<Subresultant<V, K>> {
    let dp = p.degree_in(v);
    let dq = q.degree_in(v);
    assert!(dp >= dq && dq >= 1, "chain needs deg p >= deg q >= 1");
    (0..dq).map(|j| subresultant_at(p, q, v, j)).collect()
}

/// A single subresultant of index `j`, without computing the rest of the
/// chain. Indices run up to `deg_v(q)`, the top one only for strictly
/// different degrees, where it gives `q` scaled by a power of its initial.
pub fn subresultant_at<V: VarKey, K: Field>(
    p: &Poly<V, K>,
    q: &Poly<V, K>,
    v: &V,
    j: u32,
) -> Subresultant<V, K> {
    let dp = p.degree_in(v);
    let dq = q.degree_in(v);
    assert!(dp >= dq && dq >= 1);
    assert!(j < dq || (j == dq && dp > dq), "chain index out of range");
    let rows = chain_rows(p, q, v, j);
    let square = rows.len();
    // The first `square - 1` columns are shared; the last column of each
    // determinant runs over the powers v^j, ..., v^0.
    let mut poly = Poly::zero();
    let mut principal = Poly::zero();
    for t in 0..=j {
        let col = (dp + dq - j - 1 - t) as usize;
        let m: Vec<Vec<Poly<V, K>>> = rows
            .iter()
            .map(|row| {
                let mut r: Vec<Poly<V, K>> = row[..square - 1].to_vec();
                r.push(row[col].clone());
                r
            })
            .collect();
        let d = bareiss_det(m);
        if t == j {
            principal = d.clone();
        }
        if !d.is_zero() {
            poly = poly.add(&d.mul_mono(&Mono::var_pow(v.clone(), t), &K::one()));
        }
    }
    Subresultant {
        index: j,
        poly,
        principal,
    }
}

/// Resultant with respect to `v`. For inputs of positive degree this is the
/// Sylvester determinant; a `v`-free nonzero input contributes through the
/// power convention `res(p, c) = c^deg(p)`, and a zero input gives zero.
pub fn resultant<V: VarKey, K: Field>(p: &Poly<V, K>, q: &Poly<V, K>, v: &V) -> Poly<V, K> {
    if p.is_zero() || q.is_zero() {
        return Poly::zero();
    }
    let dp = p.degree_in(v);
    let dq = q.degree_in(v);
    match (dp, dq) {
        (0, 0) => Poly::one(),
        (0, _) => p.pow(dq),
        (_, 0) => q.pow(dp),
        _ if dp >= dq => subresultant_at(p, q, v, 0).poly,
        _ => {
            let r = subresultant_at(q, p, v, 0).poly;
            if (dp * dq) % 2 == 1 {
                r.neg()
            } else {
                r
            }
        }
    }
}

/// Resultant through naive cofactor expansion of the Sylvester matrix.
/// Exponential in the matrix size; kept as an independent cross-check for
/// the elimination-based computation.
pub fn sylvester_det<V: VarKey, K: Field>(p: &Poly<V, K>, q: &Poly<V, K>, v: &V) -> Poly<V, K> {
    let dp = p.degree_in(v);
    let dq = q.degree_in(v);
    if p.is_zero() || q.is_zero() {
        return Poly::zero();
    }
    match (dp, dq) {
        (0, 0) => return Poly::one(),
        (0, _) => return p.pow(dq),
        (_, 0) => return q.pow(dp),
        _ => {}
    }
    let rows = chain_rows(p, q, v, 0);
    laplace_det(&rows)
}

fn laplace_det<V: VarKey, K: Field>(m: &[Vec<Poly<V, K>>]) -> Poly<V, K> {
    let n = m.len();
    if n == 0 {
        return Poly::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Poly::zero();
    for (i, row) in m.iter().enumerate() {
        if row[0].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Poly<V, K>>> = m
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != i)
            .map(|(_, r)| r[1..].to_vec())
            .collect();
        let cof = row[0].mul(&laplace_det(&minor));
        acc = if i % 2 == 0 { acc.add(&cof) } else { acc.sub(&cof) };
    }
    acc
}

/// Gcd of `p` and `q` as polynomials in `v` over the rational function field
/// in the remaining variables: the first subresultant with a nonzero
/// principal coefficient. The result is only defined up to `v`-free factors;
/// use [`mv_gcd`] for a true multivariate gcd.
pub fn gcd_wrt<V: VarKey, K: Field>(p: &Poly<V, K>, q: &Poly<V, K>, v: &V) -> Poly<V, K> {
    if p.is_zero() {
        return q.clone();
    }
    if q.is_zero() {
        return p.clone();
    }
    let (a, b) = if p.degree_in(v) >= q.degree_in(v) {
        (p, q)
    } else {
        (q, p)
    };
    let db = b.degree_in(v);
    if db == 0 {
        return Poly::one();
    }
    for j in 0..db {
        let s = subresultant_at(a, b, v, j);
        if !s.principal.is_zero() {
            return s.poly;
        }
    }
    b.clone()
}

/// Gcd of the `v`-coefficients.
fn content_wrt<V: VarKey, K: Field>(p: &Poly<V, K>, v: &V) -> Poly<V, K> {
    let mut g = Poly::zero();
    for c in p.coeffs_by_degree(v) {
        if !c.is_zero() {
            g = mv_gcd(&g, &c);
        }
    }
    g
}

/// True multivariate gcd over the coefficient field, by recursion on the
/// highest variable: split off contents, take the generic gcd of the
/// primitive parts through the subresultant chain, and restore its primitive
/// part. The result is an associate of the gcd; callers normalize.
pub fn mv_gcd<V: VarKey, K: Field>(p: &Poly<V, K>, q: &Poly<V, K>) -> Poly<V, K> {
    if p.is_zero() {
        return q.clone();
    }
    if q.is_zero() {
        return p.clone();
    }
    let v = match (p.leader(), q.leader()) {
        (None, None) => return Poly::one(),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (Some(a), Some(b)) => a.max(b),
    };
    let dp = p.degree_in(&v);
    let dq = q.degree_in(&v);
    if dp == 0 {
        return mv_gcd(p, &content_wrt(q, &v));
    }
    if dq == 0 {
        return mv_gcd(&content_wrt(p, &v), q);
    }
    let cp = content_wrt(p, &v);
    let cq = content_wrt(q, &v);
    let pp = p.try_exact_div(&cp).expect("content divides");
    let qq = q.try_exact_div(&cq).expect("content divides");
    let g0 = mv_gcd(&cp, &cq);
    let (a, b) = if dp >= dq { (&pp, &qq) } else { (&qq, &pp) };
    let db = b.degree_in(&v);
    let mut generic = b.clone();
    let mut found = false;
    for j in 0..db {
        let s = subresultant_at(a, b, &v, j);
        if !s.principal.is_zero() {
            if j == 0 {
                // coprime primitive parts
                return g0;
            }
            generic = s.poly;
            found = true;
            break;
        }
    }
    let _ = found;
    let prim = generic
        .try_exact_div(&content_wrt(&generic, &v))
        .expect("content divides");
    g0.mul(&prim)
}

/// The squarefree part of `p` with respect to `v`: `p` divided by
/// `gcd(p, dp/dv)`. Vanishes on the same set, with every `v`-root simple.
pub fn squarefree_part<V: VarKey, K: Field>(p: &Poly<V, K>, v: &V) -> Poly<V, K> {
    let d = p.derivative(v);
    if d.is_zero() {
        return p.clone();
    }
    let g = mv_gcd(p, &d);
    p.try_exact_div(&g)
        .expect("gcd of p and its derivative divides p")
}

#[cfg(test)]
mod tests {
    use super::super::{rat_int, Rat, Var};
    use super::*;

    type P = Poly<Var, Rat>;

    fn x() -> P {
        Poly::var(Var(0))
    }
    fn y() -> P {
        Poly::var(Var(1))
    }
    const Y: Var = Var(1);

    #[test]
    fn resultants_match_frozen_values() {
        // res_y(y^2 - x, y - 1) = 1 - x
        let r = resultant(&y().pow(2).sub(&x()), &y().sub(&P::one()), &Y);
        assert_eq!(r, P::one().sub(&x()));
        // res_y(y^2 - 1, 2y) = -4
        let r = resultant(&y().pow(2).sub(&P::one()), &y().scale(&rat_int(2)), &Y);
        assert_eq!(r, P::int(-4));
        // res_y(y^2 - x, 2y) = -4x
        let r = resultant(&y().pow(2).sub(&x()), &y().scale(&rat_int(2)), &Y);
        assert_eq!(r, x().scale(&rat_int(-4)));
    }

    #[test]
    fn chain_entry_above_resultant() {
        // subresultant of index 1 for (y^2 - x, 2y) is 2y
        let s = subresultant_at(&y().pow(2).sub(&x()), &y().scale(&rat_int(2)), &Y, 1);
        assert_eq!(s.poly, y().scale(&rat_int(2)));
        assert_eq!(s.principal, P::int(2));
    }

    #[test]
    fn elimination_agrees_with_cofactor_expansion() {
        let cases: Vec<(P, P)> = vec![
            (y().pow(3).sub(&x().mul(&y())).add(&P::one()), y().pow(2).add(&x())),
            (
                y().pow(2).mul(&x()).add(&y()).add(&P::int(3)),
                y().pow(2).sub(&x().pow(2)),
            ),
            (y().pow(4).sub(&P::one()), y().pow(2).add(&y()).add(&P::one())),
        ];
        for (p, q) in cases {
            assert_eq!(resultant(&p, &q, &Y), sylvester_det(&p, &q, &Y));
        }
    }

    #[test]
    fn swapped_arguments_flip_sign_by_degree_parity() {
        let p = y().pow(2).sub(&x());
        let q = y().pow(3).add(&x().mul(&y())).sub(&P::int(2));
        let a = resultant(&p, &q, &Y);
        let b = resultant(&q, &p, &Y);
        // degrees 2*3: even product, equal
        assert_eq!(a, b);
        let q1 = y().add(&x());
        let a = resultant(&p, &q1, &Y);
        let b = resultant(&q1, &p, &Y);
        // degrees 2*1: even again
        assert_eq!(a, b);
        let p1 = y().pow(3).sub(&x());
        let a = resultant(&p1, &q1, &Y);
        let b = resultant(&q1, &p1, &Y);
        // degrees 3*1: odd product, opposite sign
        assert_eq!(a, b.neg());
    }

    #[test]
    fn gcd_and_squarefree_part() {
        let d = y().sub(&x());
        let p = d.pow(2);
        assert_eq!(squarefree_part(&p, &Y).normalized(), d.clone().normalized());
        // gcd((y-x)^2 (y+1), (y-x)(y-1)) = y - x
        let a = p.mul(&y().add(&P::one()));
        let b = d.mul(&y().sub(&P::one()));
        let g = mv_gcd(&a, &b).normalized();
        assert_eq!(g, d.normalized());
        // coprime
        let g = mv_gcd(&y().sub(&P::one()), &y().add(&P::one())).normalized();
        assert!(g.is_constant() && !g.is_zero());
        // pure content gcd
        let g = mv_gcd(&x().mul(&y()), &x().mul(&y().sub(&P::one()))).normalized();
        assert_eq!(g, x());
    }

    #[test]
    fn vanishing_resultant_detects_common_root() {
        // p = (y - x)(y + 1), q = (y - x)(y - 2) share the factor y - x
        let p = y().sub(&x()).mul(&y().add(&P::one()));
        let q = y().sub(&x()).mul(&y().sub(&P::int(2)));
        assert!(resultant(&p, &q, &Y).is_zero());
        let g = mv_gcd(&p, &q).normalized();
        assert_eq!(g, y().sub(&x()).normalized());
    }
}
