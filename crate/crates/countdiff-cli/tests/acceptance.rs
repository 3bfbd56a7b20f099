//! End-to-end acceptance suite.
//!
//! Each test below checks one release criterion and prints a single
//! `PASS <name> in <time>` line (visible with `--nocapture`); a failure
//! panics with the criterion name. Expected values are either worked out
//! independently inside the test (brute-force oracles over prime fields,
//! parametric-derivative enumeration) or are exact closed forms checked
//! symbolically, term by term. Every test also enforces its own wall-clock
//! budget so the suite stays runnable on a laptop without network access.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use countdiff::counting::{decide_sets, DecideMode, SetRelation, UniPoly};
use countdiff::diffcount::{
    counting_sequence_simple, crosscheck_truncation, differential_counting_polynomial_simple,
    stratified_counting, FitOutcome,
};
use countdiff::dimension::{dimension_function, dimension_polynomial};
use countdiff::poly::{rat, rat_int, Int, Poly};
use countdiff::sigma::QPoly;
use countdiff::{
    decompose, parse_dsys, parse_lead, parse_manifest, parse_sys, CountingPolynomial, LeaderSet,
    MultiIndex, SigmaSystem, SimpleDifferentialSystem, Var,
};
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn data_str(name: &str) -> String {
    let path = data(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// Runs the installed binary and returns (stdout, stderr, exit code).
fn cli(args: &[&str]) -> (String, String, i32) {
    cli_env(args, &[])
}

fn cli_env(args: &[&str], env: &[(&str, &str)]) -> (String, String, i32) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_countdiff"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawning the command line binary");
    (
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
        out.status.code().unwrap_or(-1),
    )
}

/// Writes an input file into the test's temp directory and returns its path.
fn temp_input(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("countdiff-accept-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("creating temp dir");
    let path = dir.join(name);
    std::fs::write(&path, text).expect("writing temp input");
    path.to_str().unwrap().to_owned()
}

fn term(c: i64, oo: u32, n0: u32) -> CountingPolynomial {
    CountingPolynomial::term(Int::from(c), oo, n0)
}

fn finish(name: &str, started: Instant, budget_secs: u64) {
    let elapsed = started.elapsed();
    let budget = Duration::from_secs(budget_secs);
    assert!(
        elapsed < budget,
        "{name} exceeded its time budget: {elapsed:?} (budget {budget:?})"
    );
    println!("PASS {name} in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// prime-field evaluation (independent oracle, no library involvement)
// ---------------------------------------------------------------------------

/// A polynomial compiled to machine integers for evaluation modulo `p`:
/// a sum of (coefficient, [(slot, exponent)]) terms, where `slot` indexes
/// into a point vector ordered like the system's universe.
struct CompiledPoly {
    terms: Vec<(i64, Vec<(usize, u32)>)>,
}

fn pow_mod(mut b: i64, mut e: u32, p: i64) -> i64 {
    let mut acc = 1i64;
    b = b.rem_euclid(p);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn big_mod(n: &Int, p: i64) -> i64 {
    let r = n % Int::from(p);
    (r.to_i64().expect("residue fits i64") + p) % p
}

fn compile_poly(q: &QPoly, universe: &[Var], p: i64) -> CompiledPoly {
    let mut terms = Vec::new();
    for (mono, coeff) in q.terms() {
        let num = big_mod(coeff.numer(), p);
        let den = big_mod(coeff.denom(), p);
        assert!(den != 0, "coefficient denominator divisible by the prime");
        let c = num * pow_mod(den, (p - 2) as u32, p) % p;
        let slots = mono
            .pairs()
            .iter()
            .map(|(v, e)| {
                let slot = universe
                    .iter()
                    .position(|u| u == v)
                    .expect("variable outside the declared universe");
                (slot, *e)
            })
            .collect();
        terms.push((c, slots));
    }
    CompiledPoly { terms }
}

impl CompiledPoly {
    fn eval(&self, pt: &[i64], p: i64) -> i64 {
        let mut acc = 0i64;
        for (c, slots) in &self.terms {
            let mut t = *c;
            for (slot, e) in slots {
                t = t * pow_mod(pt[*slot], *e, p) % p;
            }
            acc = (acc + t) % p;
        }
        acc
    }
}

struct CompiledSystem {
    eqs: Vec<CompiledPoly>,
    ineqs: Vec<CompiledPoly>,
}

fn compile_system(sys: &SigmaSystem, p: i64) -> CompiledSystem {
    assert!(
        sys.markers().is_empty(),
        "prime-field checks only cover marker-free systems"
    );
    let uni = sys.universe();
    CompiledSystem {
        eqs: sys
            .equations()
            .iter()
            .map(|q| compile_poly(q, uni, p))
            .collect(),
        ineqs: sys
            .inequations()
            .iter()
            .map(|q| compile_poly(q, uni, p))
            .collect(),
    }
}

impl CompiledSystem {
    fn satisfied(&self, pt: &[i64], p: i64) -> bool {
        self.eqs.iter().all(|q| q.eval(pt, p) == 0)
            && self.ineqs.iter().all(|q| q.eval(pt, p) != 0)
    }
}

/// Visits every point of the n-dimensional affine space over F_p.
fn for_each_point(p: i64, n: usize, mut f: impl FnMut(&[i64])) {
    let mut pt = vec![0i64; n];
    loop {
        f(&pt);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            pt[i] += 1;
            if pt[i] < p {
                break;
            }
            pt[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// random corpus of split triangular systems
// ---------------------------------------------------------------------------

const CORPUS_SEED: u64 = 0x5EED_CAFE;
const CORPUS_SIZE: usize = 120;
const PRIMES: [i64; 5] = [5, 7, 11, 13, 17];

/// Generates triangular systems whose fiber polynomials factor into
/// pointwise-distinct roots inside F_p: per variable either no constraint,
/// an equation, or an inequation whose roots are distinct constants, all
/// optionally shifted by a common linear form in one lower variable (a
/// shared slope keeps the roots distinct at every point). Counting such a
/// system and evaluating at oo = p must agree exactly with exhaustive
/// enumeration.
fn random_split_corpus() -> Vec<(SigmaSystem, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut out = Vec::with_capacity(CORPUS_SIZE);
    for _ in 0..CORPUS_SIZE {
        let p = PRIMES[rng.gen_range(0..PRIMES.len())];
        let n = rng.gen_range(1..=4usize);
        let mut sys = SigmaSystem::ambient(n as u32);
        for v in 0..n {
            // 0 => free, 1..=2 => equation, 3 => inequation
            let kind = rng.gen_range(0..4u8);
            if kind == 0 {
                continue;
            }
            let k = rng.gen_range(1..=3usize);
            let mut values: Vec<i64> = (0..p).collect();
            values.shuffle(&mut rng);
            let slope = if v > 0 && rng.gen_bool(0.4) {
                Some((rng.gen_range(0..v), rng.gen_range(1..p)))
            } else {
                None
            };
            let var_poly: QPoly = Poly::var(Var(v as u32));
            let mut f: QPoly = Poly::one();
            for c in values.into_iter().take(k) {
                let mut root: QPoly = Poly::int(c);
                if let Some((w, s)) = slope {
                    root = root.add(&Poly::var(Var(w as u32)).scale(&rat_int(s)));
                }
                f = f.mul(&var_poly.sub(&root));
            }
            if kind <= 2 {
                let a = rng.gen_range(1..p);
                sys.push_equation(f.scale(&rat_int(a)));
            } else {
                sys.push_inequation(f);
            }
        }
        out.push((sys, p));
    }
    out
}

// ---------------------------------------------------------------------------
// 1. closed form, command line output and truncation values for the
//    incompressible flow system
// ---------------------------------------------------------------------------

#[test]
fn c1_flow_system_closed_form_and_truncations() {
    let started = Instant::now();

    let f = parse_dsys(&data_str("navier_stokes.dsys")).unwrap();
    let zeta = f.point.clone();
    let s = SimpleDifferentialSystem::new(f.system).unwrap();
    let dcp = differential_counting_polynomial_simple(&s);

    // exponent polynomial l^3 + 11/2 l^2 + 17/2 l + 4, symbolically
    let expected_exp = UniPoly::from_coeffs(vec![rat_int(4), rat(17, 2), rat(11, 2), rat_int(1)]);
    let terms: Vec<_> = dcp.terms_desc().collect();
    assert_eq!(terms.len(), 1, "single power of oo expected");
    let (coeff, exp, n0) = &terms[0];
    assert_eq!(**coeff, UniPoly::from_int(1));
    assert_eq!(**exp, expected_exp);
    assert_eq!(*n0, 0);
    assert_eq!(dcp.to_string(), "oo^(l^3 + 11/2*l^2 + 17/2*l + 4)");

    // the shipped binary prints the identical closed form
    let ns_path = data("navier_stokes.dsys");
    let (stdout, stderr, code) = cli(&[
        "count-diff",
        ns_path.to_str().unwrap(),
        "--point",
        "0,0,0,0",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert_eq!(stdout.trim(), "oo^(l^3 + 11/2*l^2 + 17/2*l + 4)");

    // truncation orders 0..3 carry oo^4, oo^19, oo^51, oo^106
    let seq = counting_sequence_simple(&s, &zeta).unwrap();
    for (ell, e) in [(0u32, 4u32), (1, 19), (2, 51), (3, 106)] {
        assert_eq!(
            seq.value_at(ell).unwrap(),
            CountingPolynomial::oo_pow(e),
            "order {ell}"
        );
    }
    // independent route: dimension-function prediction vs the count of the
    // assembled truncation systems
    crosscheck_truncation(&s, &zeta, 3).unwrap();

    finish("flow system closed form", started, 10);
}

// ---------------------------------------------------------------------------
// 2. stratified counting of the guarded first-order example and the
//    set-comparison verdict between its generic stratum and the whole set
// ---------------------------------------------------------------------------

#[test]
fn c2_stratified_counting_and_compare_distinct() {
    let started = Instant::now();

    let m = parse_manifest(&data_str("hard.mf")).unwrap();
    let FitOutcome::Fitted(seq) = stratified_counting(&m).unwrap() else {
        panic!("no closed form fitted for the stratified count");
    };
    let at0 = term(1, 2, 0).add(&term(-1, 1, 0)).add(&term(1, 0, 0));
    assert_eq!(seq.value_at(0).unwrap(), at0, "order 0");
    let tail = term(1, 3, 0)
        .add(&term(-1, 2, 0))
        .add(&term(1, 1, 0))
        .add(&term(-1, 0, 1));
    for ell in 1..=10u32 {
        assert_eq!(seq.value_at(ell).unwrap(), tail, "order {ell}");
    }

    // generic stratum vs full set: distinct, found within estimate bound 2
    let mt = parse_manifest(&data_str("hard_T.mf")).unwrap();
    let FitOutcome::Fitted(seq_t) = stratified_counting(&mt).unwrap() else {
        panic!("no closed form fitted for the generic stratum");
    };
    let order = seq.start().max(seq_t.start());
    let res = decide_sets(
        &seq_t.value_at(order).unwrap(),
        &seq.value_at(order).unwrap(),
        DecideMode::Equality,
        2,
    );
    assert_eq!(res.outcome, SetRelation::Distinct);
    assert!(res.witness.is_some(), "a witness pair must be reported");

    // the same verdict through the binary
    let t_path = data("hard_T.mf");
    let s_path = data("hard.mf");
    let (stdout, stderr, code) = cli(&[
        "compare",
        t_path.to_str().unwrap(),
        s_path.to_str().unwrap(),
        "--K",
        "2",
        "--assert-subset",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert_eq!(stdout.lines().next(), Some("Distinct"));

    finish("stratified counting and compare", started, 5);
}

// ---------------------------------------------------------------------------
// 3. stratified counting of the second-order example, its dimension
//    polynomial, and the strict eventual comparison against the smaller
//    candidate closed form
// ---------------------------------------------------------------------------

#[test]
fn c3_second_order_example_and_eventual_order() {
    let started = Instant::now();

    let m = parse_manifest(&data_str("better.mf")).unwrap();
    let FitOutcome::Fitted(seq) = stratified_counting(&m).unwrap() else {
        panic!("no closed form fitted for the stratified count");
    };
    for ell in 1..=10u32 {
        let expected = term(1, ell + 2, 0)
            .add(&term(-1, ell + 1, 0))
            .add(&term(i64::from(ell) + 1, ell, 0))
            .add(&term(-i64::from(ell), ell - 1, 0));
        assert_eq!(seq.value_at(ell).unwrap(), expected, "order {ell}");
    }

    // dimension polynomial of the shipped leader set is l + 2
    let lead = parse_lead(&data_str("better.lead")).unwrap();
    let (omega, _threshold) = dimension_polynomial(&lead.set);
    assert_eq!(omega, UniPoly::from_coeffs(vec![rat_int(2), rat_int(1)]));

    // the candidate value (oo - 1) * oo^(l+1) is strictly below the true
    // count under the eventual order, at every order >= 1
    for ell in 1..=10u32 {
        let candidate = term(1, ell + 2, 0).add(&term(-1, ell + 1, 0));
        let full = seq.value_at(ell).unwrap();
        assert_ne!(candidate, full);
        assert!(candidate.eventual_less(&full), "order {ell}");
        assert!(!full.eventual_less(&candidate), "order {ell}");
    }

    finish("second-order example", started, 5);
}

// ---------------------------------------------------------------------------
// 4. exact prime-field oracle on random split triangular systems
// ---------------------------------------------------------------------------

#[test]
fn c4_prime_field_oracle_on_split_systems() {
    let started = Instant::now();

    let corpus = random_split_corpus();
    assert!(corpus.len() >= 100);
    for (idx, (sys, p)) in corpus.iter().enumerate() {
        let count = countdiff::count_constructible(sys)
            .unwrap_or_else(|e| panic!("system {idx}: {e:?}"))
            .eval_at_oo(&Int::from(*p))
            .expect("split systems have aleph-free counts");

        let compiled = compile_system(sys, *p);
        let n = sys.universe().len();
        let mut brute = 0i64;
        for_each_point(*p, n, |pt| {
            if compiled.satisfied(pt, *p) {
                brute += 1;
            }
        });
        assert_eq!(count, Int::from(brute), "system {idx} over F_{p}");
    }

    finish("prime-field oracle", started, 60);
}

// ---------------------------------------------------------------------------
// 5. decomposition partition property: over the same corpus plus the
//    handwritten non-split systems, every prime-field solution of the
//    input lies in exactly one component
// ---------------------------------------------------------------------------

fn check_partition(sys: &SigmaSystem, p: i64, label: &str) {
    let dec = decompose(sys).unwrap_or_else(|e| panic!("{label}: {e:?}"));
    let input = compile_system(sys, p);
    let comps: Vec<CompiledSystem> = dec
        .components
        .iter()
        .map(|c| compile_system(c, p))
        .collect();
    let n = sys.universe().len();
    for_each_point(p, n, |pt| {
        let inside = input.satisfied(pt, p);
        let hits = comps.iter().filter(|c| c.satisfied(pt, p)).count();
        if inside {
            assert_eq!(
                hits, 1,
                "{label}: point {pt:?} over F_{p} lies in {hits} components"
            );
        } else {
            assert_eq!(
                hits, 0,
                "{label}: point {pt:?} over F_{p} is outside the input but inside a component"
            );
        }
    });
}

#[test]
fn c5_partition_property_over_prime_fields() {
    let started = Instant::now();

    for (idx, (sys, p)) in random_split_corpus().iter().enumerate() {
        check_partition(sys, *p, &format!("random system {idx}"));
    }

    let dir = data("nonsplit");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "sys"))
        .collect();
    files.sort();
    assert_eq!(files.len(), 25, "handwritten corpus size");
    for path in &files {
        let text = std::fs::read_to_string(path).unwrap();
        let parsed = parse_sys(&text).unwrap();
        let name = path.file_name().unwrap().to_string_lossy();
        for p in [5i64, 7] {
            check_partition(&parsed.system, p, &name);
        }
    }

    finish("partition property", started, 60);
}

// ---------------------------------------------------------------------------
// 6. dimension function against brute-force parametric enumeration, and
//    polynomial agreement from the threshold on
// ---------------------------------------------------------------------------

/// Counts derivatives of order <= ell not dominated by any leader,
/// walking every multi-index explicitly.
fn brute_parametric(n: usize, families: &[Vec<Vec<u32>>], ell: u32) -> u64 {
    fn visit(mu: &mut Vec<u32>, slot: usize, budget: u32, count: &mut u64, fam: &[Vec<u32>]) {
        if slot == mu.len() {
            let dominated = fam
                .iter()
                .any(|lead| lead.iter().zip(mu.iter()).all(|(l, m)| l <= m));
            if !dominated {
                *count += 1;
            }
            return;
        }
        for e in 0..=budget {
            mu[slot] = e;
            visit(mu, slot + 1, budget - e, count, fam);
        }
        mu[slot] = 0;
    }
    let mut total = 0;
    for fam in families {
        let mut mu = vec![0u32; n];
        visit(&mut mu, 0, ell, &mut total, fam);
    }
    total
}

#[test]
fn c6_dimension_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1_5EED);

    for case in 0..200 {
        let n = rng.gen_range(1..=4usize);
        let m = rng.gen_range(1..=3usize);
        let mut families: Vec<Vec<Vec<u32>>> = Vec::new();
        for _ in 0..m {
            let k = rng.gen_range(0..=3usize);
            let mut fam = Vec::new();
            for _ in 0..k {
                loop {
                    let mu: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=3u32)).collect();
                    if mu.iter().sum::<u32>() <= 4 {
                        fam.push(mu);
                        break;
                    }
                }
            }
            families.push(fam);
        }
        let set = LeaderSet::new(
            n,
            families
                .iter()
                .map(|f| f.iter().map(|mu| MultiIndex::new(mu.clone())).collect())
                .collect(),
        )
        .unwrap();

        for ell in 0..=8u32 {
            assert_eq!(
                dimension_function(&set, ell),
                brute_parametric(n, &families, ell),
                "case {case}, order {ell}"
            );
        }

        let (omega, l0) = dimension_polynomial(&set);
        for ell in l0..=l0 + 5 {
            assert_eq!(
                omega.eval_int(i64::from(ell)),
                rat_int(dimension_function(&set, ell) as i64),
                "case {case}, order {ell}"
            );
        }
    }

    finish("dimension oracle", started, 30);
}

// ---------------------------------------------------------------------------
// 7. closed formula versus assembled truncation systems
// ---------------------------------------------------------------------------

#[test]
fn c7_closed_formula_vs_truncation() {
    let started = Instant::now();

    for (file, ell_max) in [
        ("heat.dsys", 5u32),
        ("wave.dsys", 5),
        ("sqder.dsys", 5),
        ("navier_stokes.dsys", 3),
    ] {
        let f = parse_dsys(&data_str(file)).unwrap();
        let s = SimpleDifferentialSystem::new(f.system).unwrap();
        crosscheck_truncation(&s, &f.point, ell_max).unwrap_or_else(|e| panic!("{file}: {e:?}"));
    }

    finish("closed formula vs truncation", started, 30);
}

// ---------------------------------------------------------------------------
// 8. counting-ring properties on random instances
// ---------------------------------------------------------------------------

fn random_cp(rng: &mut ChaCha8Rng, allow_n0: bool) -> CountingPolynomial {
    let t = rng.gen_range(0..=4usize);
    let mut acc = CountingPolynomial::zero();
    for _ in 0..t {
        let c = rng.gen_range(-9..=9i64);
        if c == 0 {
            continue;
        }
        let oo = rng.gen_range(0..=5u32);
        let n0 = if allow_n0 { rng.gen_range(0..=2u32) } else { 0 };
        acc = acc.add(&term(c, oo, n0));
    }
    acc
}

/// A value of the shape the per-block counting formula produces: an
/// aleph-free part minus a positive combination of oo powers times N0.
fn random_simple_shape(rng: &mut ChaCha8Rng) -> CountingPolynomial {
    let mut p = random_cp(rng, false);
    let k = rng.gen_range(1..=3usize);
    for _ in 0..k {
        p = p.add(&term(-rng.gen_range(1..=9i64), rng.gen_range(0..=4u32), 1));
    }
    p
}

#[test]
fn c8_counting_ring_properties() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0_0C1E);

    // ring laws and canonical form
    for _ in 0..1000 {
        let a = random_cp(&mut rng, true);
        let b = random_cp(&mut rng, true);
        let c = random_cp(&mut rng, true);
        assert_eq!(a.add(&b), b.add(&a));
        assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        assert_eq!(a.mul(&b), b.mul(&a));
        assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        assert_eq!(a.add(&CountingPolynomial::zero()), a);
        assert_eq!(a.mul(&CountingPolynomial::one()), a);
        assert!(a.sub(&a).is_zero());
        assert!(a.add(&a.neg()).is_zero());

        // canonical form: strictly descending exponent pairs, no zero terms
        let prod = a.mul(&b);
        let mut last: Option<(u32, u32)> = None;
        for (oo, n0, coeff) in prod.terms_desc() {
            assert!(coeff != &Int::from(0), "zero coefficient survived");
            if let Some(prev) = last {
                assert!((oo, n0) < prev, "terms not strictly descending");
            }
            last = Some((oo, n0));
        }
    }

    // eventual order: trichotomy and transitivity on aleph-free values
    for _ in 0..1000 {
        let q1 = random_cp(&mut rng, false);
        let q2 = random_cp(&mut rng, false);
        let q3 = random_cp(&mut rng, false);
        let less = q1.eventual_less(&q2);
        let greater = q2.eventual_less(&q1);
        let equal = q1 == q2;
        assert_eq!(
            usize::from(less) + usize::from(greater) + usize::from(equal),
            1,
            "exactly one of <, >, = must hold"
        );
        if q1.eventual_less(&q2) && q2.eventual_less(&q3) {
            assert!(q1.eventual_less(&q3), "transitivity");
        }
    }

    // estimate dominance: the finite upper substitution always eventually
    // exceeds the cofinite lower substitution
    for _ in 0..1000 {
        let p = random_simple_shape(&mut rng);
        let k_up = rng.gen_range(0..=8u32);
        let k_low = rng.gen_range(1..=8u32);
        let lower = p.lower_estimate(k_low);
        let upper = p.upper_estimate(k_up);
        assert!(lower.eventual_less(&upper), "{p:?}: lower !< upper");
        assert!(!upper.eventual_less(&lower), "{p:?}: upper < lower");
    }

    // decision guard: never Equal while N0 is present
    for _ in 0..1000 {
        let mut c1 = random_cp(&mut rng, true);
        if c1.is_n0_free() {
            c1 = c1.add(&term(-1, rng.gen_range(0..=3u32), 1));
        }
        let c2 = if rng.gen_bool(0.3) {
            c1.clone()
        } else {
            random_cp(&mut rng, true)
        };
        let k = rng.gen_range(0..=8u32);
        for mode in [DecideMode::Equality, DecideMode::Estimate] {
            assert_ne!(decide_sets(&c1, &c2, mode, k).outcome, SetRelation::Equal);
            assert_ne!(decide_sets(&c2, &c1, mode, k).outcome, SetRelation::Equal);
        }
    }

    finish("counting-ring properties", started, 30);
}

// ---------------------------------------------------------------------------
// shipped examples through the binary: exact output and exit codes
// ---------------------------------------------------------------------------

#[test]
fn cli_examples_byte_exact() {
    let started = Instant::now();
    let path = |n: &str| data(n).to_str().unwrap().to_owned();

    // algebraic counts
    let (out, _, code) = cli(&["count-alg", &path("split3.sys")]);
    assert_eq!((out.trim(), code), ("2*oo^2 - 4*oo", 0));
    let (out, _, code) = cli(&["count-alg", &path("cofinite.sys")]);
    assert_eq!((out.trim(), code), ("2*oo - 2*N0", 0));
    let (out, _, code) = cli(&["count-alg", &path("parabola.sys")]);
    assert_eq!((out.trim(), code), ("2*oo - 1", 0));

    // differential counts
    let (out, _, code) = cli(&["count-diff", &path("heat.dsys")]);
    assert_eq!((out.trim(), code), ("oo^(2*l + 1)", 0));
    let (out, _, code) = cli(&["count-diff", &path("sqder.dsys")]);
    assert_eq!((out.trim(), code), ("2*oo", 0));
    let (out, _, code) = cli(&["count-diff", &path("hard.dsys")]);
    assert_eq!((out.trim(), code), ("oo^3", 0));

    // stratified counts print the prefix and the eventual tail
    let (out, _, code) = cli(&["count-diff", &path("hard.mf")]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().collect::<Vec<_>>(),
        vec!["l = 0: oo^2 - oo + 1", "l >= 1: oo^3 - oo^2 + oo - N0"]
    );
    let (out, _, code) = cli(&["count-diff", &path("better.mf")]);
    assert_eq!(code, 0);
    assert_eq!(
        out.trim(),
        "l >= 1: oo^(l + 2) - oo^(l + 1) + (l + 1)*oo^l - l*oo^(l - 1)"
    );

    // comparison verdicts and exit codes
    let (out, _, code) = cli(&[
        "compare",
        &path("hard_T.mf"),
        &path("hard.mf"),
        "--K",
        "8",
        "--assert-subset",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().collect::<Vec<_>>(),
        vec!["Distinct", "witness: k1 = 0, k2 = 1"]
    );
    let (out, _, code) = cli(&[
        "compare",
        &path("hard.mf"),
        &path("hard.mf"),
        "--assert-subset",
    ]);
    assert_eq!((out.trim(), code), ("Unknown", 2));
    let (out, _, code) = cli(&[
        "compare",
        &path("split3.sys"),
        &path("split3.sys"),
        "--assert-subset",
    ]);
    assert_eq!((out.trim(), code), ("Equal", 0));
    let (out, _, code) = cli(&["compare", &path("split3.sys"), &path("split3.sys")]);
    assert_eq!(code, 0);
    assert!(
        out.contains("note: the verdict assumes"),
        "conditional note missing: {out}"
    );

    // failures carry a stable error code and exit 1
    let (_, err, code) = cli(&["count-diff", &path("hard.dsys"), "--point", "0"]);
    assert_eq!(code, 1);
    assert!(
        err.contains("error[PoleAtExpansionPoint]"),
        "stderr: {err}"
    );

    // dimension and truncation commands
    let (out, _, code) = cli(&["dimension", &path("better.lead")]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().collect::<Vec<_>>(),
        vec![
            "omega: l + 2",
            "threshold: 1",
            "differential type: 1",
            "typical dimension: 1",
            "differential dimension: 1"
        ]
    );
    let (out, _, code) = cli(&["truncate", &path("sqder.dsys"), "--order", "2"]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().collect::<Vec<_>>(),
        vec![
            "vars g(u,0) g(u,1) g(u,2)",
            "eq g(u,1)^2 - 1",
            "eq 2*g(u,1)*g(u,2)"
        ]
    );

    // structured output is stable json
    let (out, _, code) = cli(&["count-alg", &path("split3.sys"), "--output", "structured"]);
    assert_eq!(code, 0);
    assert!(out.trim_start().starts_with('{'));
    assert!(out.contains("\"schema\":1"));
    assert!(out.contains("\"rendered\":\"2*oo^2 - 4*oo\""));

    // injected failures map onto stable error codes and exit 1
    let nonsimple = temp_input(
        "nonsimple.dsys",
        "basevars t\nfuncs u\neq D(u,t)^2 - 1\neq D(u,t) - 1\n",
    );
    let (_, err, code) = cli(&["count-diff", &nonsimple]);
    assert_eq!(code, 1, "stderr: {err}");
    assert!(err.contains("error[NotSimple]"), "stderr: {err}");

    let vanishing = temp_input(
        "vanishing.dsys",
        "basevars t\nfuncs u\npoint 0\neq t*D(u,t) - u\n",
    );
    let (_, err, code) = cli(&["count-diff", &vanishing]);
    assert_eq!(code, 1, "stderr: {err}");
    assert!(
        err.contains("error[VanishingInitialOrSeparant]"),
        "stderr: {err}"
    );

    let (_, err, code) = cli(&["count-diff", &path("hard.dsys"), "--point", "1,2"]);
    assert_eq!(code, 1, "stderr: {err}");
    assert!(err.contains("expected 1"), "stderr: {err}");

    // a ranking override can turn an unordered system into a simple one
    let ordered = temp_input(
        "ordered.dsys",
        "basevars t\nfuncs u v\neq D(u,t) - v\neq v - u\n",
    );
    let (_, err, code) = cli(&["count-diff", &ordered]);
    assert_eq!(code, 1, "stderr: {err}");
    assert!(err.contains("error[NotSimple]"), "stderr: {err}");
    let (out, _, code) = cli(&["count-diff", &ordered, "--ranking", "v,u"]);
    assert_eq!((out.trim(), code), ("oo", 0));
    let (out, _, code) = cli(&["count-diff", &path("hard.dsys"), "--ranking", "u1,u2"]);
    assert_eq!((out.trim(), code), ("oo^3", 0));
    let (_, err, code) = cli(&["count-diff", &path("hard.dsys"), "--ranking", "u1,u1"]);
    assert_eq!(code, 1, "stderr: {err}");
    assert!(err.contains("error[BadRanking]"), "stderr: {err}");
    let (_, err, code) = cli(&["count-diff", &path("hard.mf"), "--ranking", "u1,u2"]);
    assert_eq!(code, 1, "stderr: {err}");
    assert!(err.contains(".dsys inputs only"), "stderr: {err}");

    // the thread cap is validated
    let (out, _, code) = cli_env(&["count-alg", &path("split3.sys")], &[("COUNTDIFF_THREADS", "4")]);
    assert_eq!((out.trim(), code), ("2*oo^2 - 4*oo", 0));
    for bad in ["abc", "0", "-2", ""] {
        let (_, err, code) = cli_env(
            &["count-alg", &path("split3.sys")],
            &[("COUNTDIFF_THREADS", bad)],
        );
        assert_eq!(code, 1, "cap `{bad}` accepted; stderr: {err}");
        assert!(err.contains("COUNTDIFF_THREADS"), "stderr: {err}");
    }

    finish("shipped examples", started, 30);
}
