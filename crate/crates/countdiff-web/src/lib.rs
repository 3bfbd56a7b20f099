//! Browser bindings for the counting toolkit.
//!
//! Three entry points, all operating on the same text formats the command
//! line tool reads from files: algebraic systems (`vars`/`eq`/`ineq`
//! lines), differential systems (`basevars`/`funcs`/`point`/`eq` lines)
//! and stratified manifests (`stratum` blocks). Inputs arrive as plain
//! strings, results and errors come back as plain strings, so the page
//! needs no framework and no serialization layer.
//!
//! The crate builds both natively (for tests) and for
//! `wasm32-unknown-unknown` via wasm-bindgen.

use countdiff::counting::{decide_sets, DecideMode, SetRelation};
use countdiff::diffcount::{
    counting_sequence_simple, differential_counting_polynomial_simple, stratified_counting,
    FitOutcome,
};
use countdiff::poly::Rat;
use countdiff::textio::poly_string;
use countdiff::{
    decompose, parse_dsys, parse_manifest, parse_sys, CountingPolynomial, CountingSequence,
    SimpleDifferentialSystem, Var,
};
use wasm_bindgen::prelude::*;

/// What a pasted input is, judged from its header lines.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum InputKind {
    Algebraic,
    Differential,
    Manifest,
}

/// Detects the format of a pasted system: manifests contain `stratum`
/// blocks, algebraic systems start with a `vars` line, everything else is
/// treated as a differential system.
fn detect(text: &str) -> InputKind {
    for line in text.lines() {
        let line = line.trim_start();
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        match first {
            "stratum" | "start" | "fit-degree" => return InputKind::Manifest,
            "vars" => return InputKind::Algebraic,
            _ => continue,
        }
    }
    InputKind::Differential
}

fn parse_point(text: &str, expected: usize) -> Result<Vec<Rat>, String> {
    let parts: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.len() != expected {
        return Err(format!(
            "the expansion point needs {expected} coordinates, got {}",
            parts.len()
        ));
    }
    parts
        .iter()
        .map(|s| {
            s.parse::<Rat>()
                .map_err(|_| format!("bad coordinate: {s}"))
        })
        .collect()
}

fn sequence_lines(s: &CountingSequence) -> String {
    let mut lines = Vec::new();
    for (i, v) in s.prefix().iter().enumerate() {
        lines.push(format!("l = {}: {v}", s.first() + i as u32));
    }
    lines.push(format!("l >= {}: {}", s.start(), s.tail()));
    lines.join("\n")
}

/// Counts the solutions of an algebraic system and lists the disjoint
/// simple systems it decomposes into. Returns a multi-line report, or a
/// line starting with `error:`.
#[wasm_bindgen]
pub fn count_algebraic(text: &str) -> String {
    match count_algebraic_inner(text) {
        Ok(s) => s,
        Err(e) => format!("error: {e}"),
    }
}

fn count_algebraic_inner(text: &str) -> Result<String, String> {
    if detect(text) != InputKind::Algebraic {
        return Err("expected an algebraic system (a `vars` line followed by `eq`/`ineq` lines)"
            .to_owned());
    }
    let f = parse_sys(text).map_err(|e| e.to_string())?;
    let d = decompose(&f.system).map_err(|e| e.to_string())?;
    let total = d.count().map_err(|e| e.to_string())?;
    let name = |v: Var| f.var_names[v.0 as usize].clone();
    let mut lines = vec![format!("count: {total}")];
    lines.push(format!("components: {}", d.components.len()));
    for (i, c) in d.components.iter().enumerate() {
        let count = c.count_assuming_certificates().map_err(|e| e.to_string())?;
        lines.push(format!("component {} (count {count})", i + 1));
        for eq in c.equations() {
            lines.push(format!("  eq {}", poly_string(eq, &name)));
        }
        for q in c.inequations() {
            lines.push(format!("  ineq {}", poly_string(q, &name)));
        }
        for m in c.markers() {
            lines.push(format!("  cofinite {}", name(m.var)));
        }
    }
    Ok(lines.join("\n"))
}

/// Counts order-l truncated solutions of a differential system or a
/// stratified manifest and reports the eventual closed form. `point`
/// optionally overrides the expansion point with comma-separated
/// coordinates. Returns the closed form (or per-order values), or a line
/// starting with `error:`.
#[wasm_bindgen]
pub fn count_differential(text: &str, point: &str) -> String {
    match count_differential_inner(text, point) {
        Ok(s) => s,
        Err(e) => format!("error: {e}"),
    }
}

fn count_differential_inner(text: &str, point: &str) -> Result<String, String> {
    match detect(text) {
        InputKind::Algebraic => {
            Err("this looks like an algebraic system; use the algebraic panel".to_owned())
        }
        InputKind::Differential => {
            let f = parse_dsys(text).map_err(|e| e.to_string())?;
            let zeta = if point.trim().is_empty() {
                f.point.clone()
            } else {
                parse_point(point, f.basevars.len())?
            };
            let s = SimpleDifferentialSystem::new(f.system).map_err(|e| e.to_string())?;
            s.check_leading_data(&zeta).map_err(|e| e.to_string())?;
            let dcp = differential_counting_polynomial_simple(&s);
            let seq = counting_sequence_simple(&s, &zeta).map_err(|e| e.to_string())?;
            let mut out = format!("closed form: {dcp}");
            for ell in 0..=3u32 {
                let v = seq.value_at(ell).map_err(|e| e.to_string())?;
                out.push_str(&format!("\nl = {ell}: {v}"));
            }
            Ok(out)
        }
        InputKind::Manifest => {
            let m = parse_manifest(text).map_err(|e| e.to_string())?;
            match stratified_counting(&m).map_err(|e| e.to_string())? {
                FitOutcome::Fitted(seq) => Ok(sequence_lines(&seq)),
                FitOutcome::NoFit { values } => {
                    let lines: Vec<String> = values
                        .iter()
                        .map(|(ell, v)| format!("l = {ell}: {v}"))
                        .collect();
                    Ok(format!("no stable closed form\n{}", lines.join("\n")))
                }
            }
        }
    }
}

/// Decides whether two solution sets of the pasted systems are equal,
/// assuming the first is contained in the second. `k` bounds the
/// estimate search; `order` fixes the truncation order for differential
/// inputs (pass -1 for the natural order). Returns `Equal`, `Distinct`
/// (with a witness), or `Unknown`, or a line starting with `error:`.
#[wasm_bindgen]
pub fn compare_sets(first: &str, second: &str, k: u32, order: i32) -> String {
    match compare_inner(first, second, k, order) {
        Ok(s) => s,
        Err(e) => format!("error: {e}"),
    }
}

/// A comparison operand: either a single counting polynomial or an
/// order-indexed sequence to be sampled at the chosen order.
enum Side {
    Fixed(CountingPolynomial),
    Seq(CountingSequence),
}

impl Side {
    fn natural_start(&self) -> u32 {
        match self {
            Side::Fixed(_) => 0,
            Side::Seq(s) => s.start(),
        }
    }

    fn value_at(&self, order: u32) -> Result<CountingPolynomial, String> {
        match self {
            Side::Fixed(c) => Ok(c.clone()),
            Side::Seq(s) => s.value_at(order).map_err(|e| e.to_string()),
        }
    }
}

fn load_side(text: &str) -> Result<Side, String> {
    match detect(text) {
        InputKind::Algebraic => {
            let f = parse_sys(text).map_err(|e| e.to_string())?;
            let c = countdiff::count_constructible(&f.system).map_err(|e| e.to_string())?;
            Ok(Side::Fixed(c))
        }
        InputKind::Differential => {
            let f = parse_dsys(text).map_err(|e| e.to_string())?;
            let s = SimpleDifferentialSystem::new(f.system).map_err(|e| e.to_string())?;
            let seq = counting_sequence_simple(&s, &f.point).map_err(|e| e.to_string())?;
            Ok(Side::Seq(seq))
        }
        InputKind::Manifest => {
            let m = parse_manifest(text).map_err(|e| e.to_string())?;
            match stratified_counting(&m).map_err(|e| e.to_string())? {
                FitOutcome::Fitted(seq) => Ok(Side::Seq(seq)),
                FitOutcome::NoFit { .. } => {
                    Err("no stable closed form for one of the inputs".to_owned())
                }
            }
        }
    }
}

fn compare_inner(first: &str, second: &str, k: u32, order: i32) -> Result<String, String> {
    let a = load_side(first)?;
    let b = load_side(second)?;
    let order = if order < 0 {
        a.natural_start().max(b.natural_start())
    } else {
        order as u32
    };
    let ca = a.value_at(order)?;
    let cb = b.value_at(order)?;
    let res = decide_sets(&ca, &cb, DecideMode::Equality, k);
    let mut out = match res.outcome {
        SetRelation::Equal => "Equal".to_owned(),
        SetRelation::Distinct => "Distinct".to_owned(),
        SetRelation::Unknown => "Unknown".to_owned(),
    };
    if let Some((k1, k2)) = res.witness {
        out.push_str(&format!("\nwitness: k1 = {k1}, k2 = {k2}"));
    }
    out.push_str(&format!("\nat order {order}, estimate bound {k}"));
    out.push_str("\nnote: the verdict assumes the first system's solutions are contained in the second's");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPLIT3: &str = "vars x y z\neq x^2 - 3*x + 2\nineq y^2 - y\n";
    const HEAT: &str = "basevars x t\nfuncs u\npoint 0 0\neq D(u,t) - D(u,x,2)\n";

    #[test]
    fn detects_formats() {
        assert_eq!(detect(SPLIT3), InputKind::Algebraic);
        assert_eq!(detect(HEAT), InputKind::Differential);
        assert_eq!(detect("start 0\nstratum diff\n"), InputKind::Manifest);
        assert_eq!(detect("# comment\n\nvars x\n"), InputKind::Algebraic);
    }

    #[test]
    fn counts_algebraic_systems() {
        let out = count_algebraic(SPLIT3);
        assert!(out.starts_with("count: 2*oo^2 - 4*oo"), "{out}");
        assert!(out.contains("components:"), "{out}");
    }

    #[test]
    fn counts_differential_systems() {
        let out = count_differential(HEAT, "");
        assert!(out.starts_with("closed form: oo^(2*l + 1)"), "{out}");
        assert!(out.contains("l = 2: oo^5"), "{out}");
    }

    #[test]
    fn compares_equal_algebraic_sets() {
        let out = compare_sets(SPLIT3, SPLIT3, 4, -1);
        assert!(out.starts_with("Equal"), "{out}");
    }

    #[test]
    fn reports_errors_as_text() {
        let out = count_algebraic("vars x\neq x +\n");
        assert!(out.starts_with("error:"), "{out}");
    }
}
