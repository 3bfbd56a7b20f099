//! Command-line front end: parses system files, runs counting
//! computations and renders canonical text or structured JSON.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use countdiff::counting::{
    decide_sets, CountingPolynomial, CountingSequence, DecideMode,
    DifferentialCountingPolynomial, SetRelation, UniPoly, DEFAULT_ESTIMATE_BOUND,
};
use countdiff::diffalg::{truncation_system, DiffError, DifferentialSystem};
use countdiff::diffcount::{
    counting_sequence_simple, differential_counting_polynomial_simple, manifest_value,
    stratified_counting, FitOutcome, Manifest, SimpleDifferentialSystem, StratumError,
};
use countdiff::dimension::{differential_invariants, dimension_polynomial};
use countdiff::poly::{Rat, Var};
use countdiff::textio::{
    parse_dsys, parse_lead, parse_manifest, parse_sys, poly_string, render_sys,
};
use countdiff::thomas::decompose;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "countdiff",
    version,
    about = "Counting polynomials for algebraic and differential systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count the solutions of an algebraic system (.sys), decomposing it
    /// into simple systems first.
    CountAlg { file: PathBuf },
    /// Decompose an algebraic system (.sys) into disjoint simple systems.
    Decompose { file: PathBuf },
    /// Compute the counting sequence of a differential system (.dsys) or
    /// a stratified counting manifest (.mf).
    CountDiff {
        file: PathBuf,
        /// Expansion point, overriding the one in the file (comma-separated
        /// rationals, one per base variable).
        #[arg(long)]
        point: Option<String>,
        /// Ranking override for .dsys inputs: every function name once,
        /// comma-separated, highest priority first.
        #[arg(long)]
        ranking: Option<String>,
    },
    /// Compute the dimension polynomial and differential invariants of a
    /// leader set (.lead).
    Dimension { file: PathBuf },
    /// Build the algebraic system of truncated power series solutions of
    /// a differential system (.dsys) at one order.
    Truncate {
        file: PathBuf,
        /// Truncation order.
        #[arg(long)]
        order: u32,
        /// Expansion point, overriding the one in the file.
        #[arg(long)]
        point: Option<String>,
        /// Ranking override: every function name once, comma-separated,
        /// highest priority first.
        #[arg(long)]
        ranking: Option<String>,
    },
    /// Decide whether two solution sets are equal or distinct from their
    /// counting polynomials (.sys, .dsys or .mf inputs).
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Bound for the estimate index search.
        #[arg(long = "K", default_value_t = DEFAULT_ESTIMATE_BOUND)]
        k: u32,
        /// Acknowledge that the first system's solution set is contained
        /// in the second's, which the verdict relies on.
        #[arg(long)]
        assert_subset: bool,
        /// Truncation order at which order-dependent inputs are compared
        /// (default: the largest order at which every input has reached
        /// its eventual closed form).
        #[arg(long)]
        order: Option<u32>,
        /// Expansion point override for differential inputs.
        #[arg(long)]
        point: Option<String>,
        /// Ranking override applied to each .dsys input: every function
        /// name once, comma-separated, highest priority first.
        #[arg(long)]
        ranking: Option<String>,
    },
}

struct Failure {
    code: Option<&'static str>,
    message: String,
}

impl Failure {
    fn new(message: impl Into<String>) -> Self {
        Failure {
            code: None,
            message: message.into(),
        }
    }
}

fn diff_code(e: &DiffError) -> &'static str {
    match e {
        DiffError::PoleAtExpansionPoint => "PoleAtExpansionPoint",
        DiffError::OutsideUniverse(_) => "OutsideUniverse",
        DiffError::NotSimple(_) => "NotSimple",
        DiffError::VanishingInitialOrSeparant => "VanishingInitialOrSeparant",
        DiffError::CompletionLimit => "CompletionLimit",
        DiffError::BadExpansionPoint { .. } => "BadExpansionPoint",
        DiffError::BadRanking => "BadRanking",
    }
}

fn diff_fail(e: DiffError) -> Failure {
    Failure {
        code: Some(diff_code(&e)),
        message: e.to_string(),
    }
}

fn stratum_fail(e: StratumError) -> Failure {
    match e {
        StratumError::Diff(d) => diff_fail(d),
        other => Failure::new(other.to_string()),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn at_path(path: &Path) -> impl Fn(countdiff::textio::ParseError) -> Failure + '_ {
    move |e| Failure::new(format!("{}: {e}", path.display()))
}

fn parse_point(spec: &str, expected: usize) -> Result<Vec<Rat>, Failure> {
    let parts: Vec<&str> = spec
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    let mut coords = Vec::new();
    for part in parts {
        let r: Rat = part
            .parse()
            .map_err(|_| Failure::new(format!("invalid point coordinate `{part}`")))?;
        coords.push(r);
    }
    if coords.len() != expected {
        return Err(Failure::new(format!(
            "point has {} coordinates, expected {expected}",
            coords.len()
        )));
    }
    Ok(coords)
}

/// Applies a `--ranking` override to a parsed differential system.
fn apply_ranking(
    system: DifferentialSystem,
    ranking: Option<&str>,
) -> Result<DifferentialSystem, Failure> {
    match ranking {
        None => Ok(system),
        Some(spec) => {
            let names: Vec<String> = spec
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            system.with_ranking(&names).map_err(diff_fail)
        }
    }
}

fn extension(path: &Path) -> Result<&str, Failure> {
    path.extension()
        .and_then(|e| e.to_str())
        .ok_or_else(|| Failure::new(format!("{}: missing file extension", path.display())))
}

// ---------------------------------------------------------------------------
// structured rendering
// ---------------------------------------------------------------------------

fn json_count(c: &CountingPolynomial) -> Value {
    let terms: Vec<Value> = c
        .terms_desc()
        .map(|(oo, n0, coeff)| json!({"coeff": coeff.to_string(), "oo": oo, "n0": n0}))
        .collect();
    json!({"rendered": c.to_string(), "terms": terms})
}

fn json_unipoly(u: &UniPoly) -> Value {
    let coeffs: Vec<String> = u.coeffs().iter().map(|r| r.to_string()).collect();
    json!({"rendered": u.to_string(), "coeffs": coeffs})
}

fn json_dcp(d: &DifferentialCountingPolynomial) -> Value {
    let terms: Vec<Value> = d
        .terms_desc()
        .map(|(coeff, oo_exp, n0)| {
            json!({"coeff": json_unipoly(coeff), "oo_exp": json_unipoly(oo_exp), "n0": n0})
        })
        .collect();
    json!({"rendered": d.to_string(), "terms": terms})
}

fn json_sequence(s: &CountingSequence) -> Value {
    let prefix: Vec<Value> = s.prefix().iter().map(json_count).collect();
    json!({
        "first": s.first(),
        "start": s.start(),
        "prefix": prefix,
        "tail": json_dcp(s.tail()),
    })
}

fn sequence_text(s: &CountingSequence) -> String {
    let mut lines = Vec::new();
    for (i, v) in s.prefix().iter().enumerate() {
        lines.push(format!("l = {}: {v}", s.first() + i as u32));
    }
    lines.push(format!("l >= {}: {}", s.start(), s.tail()));
    lines.join("\n")
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn run_count_alg(file: &Path, out: Output) -> Result<(String, u8), Failure> {
    let f = parse_sys(&read_file(file)?).map_err(at_path(file))?;
    let c = countdiff::thomas::count_constructible(&f.system)
        .map_err(|e| Failure::new(e.to_string()))?;
    let text = match out {
        Output::Text => c.to_string(),
        Output::Structured => {
            json!({"schema": 1, "command": "count-alg", "count": json_count(&c)}).to_string()
        }
    };
    Ok((text, 0))
}

fn run_decompose(file: &Path, out: Output) -> Result<(String, u8), Failure> {
    let f = parse_sys(&read_file(file)?).map_err(at_path(file))?;
    let d = decompose(&f.system).map_err(|e| Failure::new(e.to_string()))?;
    let total = d.count().map_err(|e| Failure::new(e.to_string()))?;
    let name = |v: Var| f.var_names[v.0 as usize].clone();
    match out {
        Output::Text => {
            let mut lines = vec![format!("components: {}", d.components.len())];
            for (i, c) in d.components.iter().enumerate() {
                lines.push(format!("component {}", i + 1));
                for eq in c.equations() {
                    lines.push(format!("  eq {}", poly_string(eq, &name)));
                }
                for q in c.inequations() {
                    lines.push(format!("  ineq {}", poly_string(q, &name)));
                }
                for m in c.markers() {
                    lines.push(format!("  cofinite {}", name(m.var)));
                }
                let count = c
                    .count_assuming_certificates()
                    .map_err(|e| Failure::new(e.to_string()))?;
                lines.push(format!("  count {count}"));
            }
            if !d.splits.is_empty() {
                let conds: Vec<String> = d
                    .splits
                    .iter()
                    .map(|s| poly_string(&s.condition, &name))
                    .collect();
                lines.push(format!("splits: {}", conds.join(", ")));
            }
            lines.push(format!("count: {total}"));
            Ok((lines.join("\n"), 0))
        }
        Output::Structured => {
            let mut components = Vec::new();
            for c in &d.components {
                let count = c
                    .count_assuming_certificates()
                    .map_err(|e| Failure::new(e.to_string()))?;
                components.push(json!({
                    "equations": c.equations().iter().map(|p| poly_string(p, &name)).collect::<Vec<_>>(),
                    "inequations": c.inequations().iter().map(|p| poly_string(p, &name)).collect::<Vec<_>>(),
                    "cofinite": c.markers().iter().map(|m| name(m.var)).collect::<Vec<_>>(),
                    "count": json_count(&count),
                }));
            }
            let splits: Vec<String> = d
                .splits
                .iter()
                .map(|s| poly_string(&s.condition, &name))
                .collect();
            let doc = json!({
                "schema": 1,
                "command": "decompose",
                "components": components,
                "splits": splits,
                "count": json_count(&total),
            });
            Ok((doc.to_string(), 0))
        }
    }
}

fn run_count_diff(
    file: &Path,
    point: Option<&str>,
    ranking: Option<&str>,
    out: Output,
) -> Result<(String, u8), Failure> {
    match extension(file)? {
        "dsys" => {
            let f = parse_dsys(&read_file(file)?).map_err(at_path(file))?;
            let zeta = match point {
                Some(s) => parse_point(s, f.basevars.len())?,
                None => f.point.clone(),
            };
            let system = apply_ranking(f.system, ranking)?;
            let s = SimpleDifferentialSystem::new(system).map_err(diff_fail)?;
            s.check_leading_data(&zeta).map_err(diff_fail)?;
            let dcp = differential_counting_polynomial_simple(&s);
            let text = match out {
                Output::Text => dcp.to_string(),
                Output::Structured => json!({
                    "schema": 1,
                    "command": "count-diff",
                    "kind": "closed-form",
                    "count": json_dcp(&dcp),
                })
                .to_string(),
            };
            Ok((text, 0))
        }
        "mf" => {
            if ranking.is_some() {
                return Err(Failure::new(
                    "the ranking override applies to .dsys inputs only",
                ));
            }
            let mut m = parse_manifest(&read_file(file)?).map_err(at_path(file))?;
            if let Some(s) = point {
                m.zeta = parse_point(s, m.n_indep)?;
            }
            match stratified_counting(&m).map_err(stratum_fail)? {
                FitOutcome::Fitted(seq) => {
                    let text = match out {
                        Output::Text => sequence_text(&seq),
                        Output::Structured => json!({
                            "schema": 1,
                            "command": "count-diff",
                            "kind": "sequence",
                            "sequence": json_sequence(&seq),
                        })
                        .to_string(),
                    };
                    Ok((text, 0))
                }
                FitOutcome::NoFit { values } => {
                    let text = match out {
                        Output::Text => {
                            let mut lines = vec!["no closed form found".to_string()];
                            for (ell, v) in &values {
                                lines.push(format!("l = {ell}: {v}"));
                            }
                            lines.join("\n")
                        }
                        Output::Structured => json!({
                            "schema": 1,
                            "command": "count-diff",
                            "kind": "values",
                            "values": values
                                .iter()
                                .map(|(ell, v)| json!({"l": ell, "count": json_count(v)}))
                                .collect::<Vec<_>>(),
                        })
                        .to_string(),
                    };
                    Ok((text, 0))
                }
            }
        }
        other => Err(Failure::new(format!(
            "unsupported input `.{other}` (expected .dsys or .mf)"
        ))),
    }
}

fn run_dimension(file: &Path, out: Output) -> Result<(String, u8), Failure> {
    let f = parse_lead(&read_file(file)?).map_err(at_path(file))?;
    let (omega, threshold) = dimension_polynomial(&f.set);
    let inv = differential_invariants(&omega, f.basevars.len() as u32)
        .map_err(|e| Failure::new(e.to_string()))?;
    match out {
        Output::Text => {
            let lines = vec![
                format!("omega: {omega}"),
                format!("threshold: {threshold}"),
                format!("differential type: {}", inv.diff_type),
                format!("typical dimension: {}", inv.typical_dim),
                format!("differential dimension: {}", inv.diff_dim),
            ];
            Ok((lines.join("\n"), 0))
        }
        Output::Structured => {
            let doc = json!({
                "schema": 1,
                "command": "dimension",
                "omega": json_unipoly(&omega),
                "threshold": threshold,
                "differential_type": inv.diff_type,
                "typical_dimension": inv.typical_dim.to_string(),
                "differential_dimension": inv.diff_dim.to_string(),
            });
            Ok((doc.to_string(), 0))
        }
    }
}

fn run_truncate(
    file: &Path,
    order: u32,
    point: Option<&str>,
    ranking: Option<&str>,
    out: Output,
) -> Result<(String, u8), Failure> {
    let f = parse_dsys(&read_file(file)?).map_err(at_path(file))?;
    let zeta = match point {
        Some(s) => parse_point(s, f.basevars.len())?,
        None => f.point.clone(),
    };
    let system = apply_ranking(f.system, ranking)?;
    let (sys, uni) = truncation_system(&system, &zeta, order).map_err(diff_fail)?;
    let names: Vec<String> = (0..uni.len() as u32).map(|i| uni.name(Var(i))).collect();
    match out {
        Output::Text => Ok((render_sys(&sys, &names).trim_end().to_string(), 0)),
        Output::Structured => {
            let name = |v: Var| names[v.0 as usize].clone();
            let doc = json!({
                "schema": 1,
                "command": "truncate",
                "order": order,
                "vars": names,
                "equations": sys.equations().iter().map(|p| poly_string(p, &name)).collect::<Vec<_>>(),
                "inequations": sys.inequations().iter().map(|p| poly_string(p, &name)).collect::<Vec<_>>(),
                "cofinite": sys.markers().iter().map(|m| name(m.var)).collect::<Vec<_>>(),
            });
            Ok((doc.to_string(), 0))
        }
    }
}

/// One comparison input, reduced to something a counting polynomial can be
/// extracted from.
enum Side {
    Fixed(CountingPolynomial),
    Seq(CountingSequence),
    Man(Manifest),
}

impl Side {
    /// The order from which this input has reached its eventual form, if
    /// it is order-dependent.
    fn natural_start(&self) -> Option<u32> {
        match self {
            Side::Fixed(_) => None,
            Side::Seq(s) => Some(s.start()),
            Side::Man(m) => Some(m.start),
        }
    }

    fn value_at(&self, order: Option<u32>) -> Result<CountingPolynomial, Failure> {
        match self {
            Side::Fixed(c) => Ok(c.clone()),
            Side::Seq(s) => {
                let o = order.expect("order resolved for order-dependent input");
                s.value_at(o).map_err(|e| Failure::new(e.to_string()))
            }
            Side::Man(m) => {
                let o = order.expect("order resolved for order-dependent input");
                manifest_value(m, o).map_err(stratum_fail)
            }
        }
    }
}

fn load_side(path: &Path, point: Option<&str>, ranking: Option<&str>) -> Result<Side, Failure> {
    match extension(path)? {
        "sys" => {
            let f = parse_sys(&read_file(path)?).map_err(at_path(path))?;
            let c = countdiff::thomas::count_constructible(&f.system)
                .map_err(|e| Failure::new(e.to_string()))?;
            Ok(Side::Fixed(c))
        }
        "dsys" => {
            let f = parse_dsys(&read_file(path)?).map_err(at_path(path))?;
            let zeta = match point {
                Some(s) => parse_point(s, f.basevars.len())?,
                None => f.point.clone(),
            };
            let system = apply_ranking(f.system, ranking)?;
            let s = SimpleDifferentialSystem::new(system).map_err(diff_fail)?;
            let seq = counting_sequence_simple(&s, &zeta).map_err(diff_fail)?;
            Ok(Side::Seq(seq))
        }
        "mf" => {
            let mut m = parse_manifest(&read_file(path)?).map_err(at_path(path))?;
            if let Some(s) = point {
                m.zeta = parse_point(s, m.n_indep)?;
            }
            match stratified_counting(&m).map_err(stratum_fail)? {
                FitOutcome::Fitted(seq) => Ok(Side::Seq(seq)),
                FitOutcome::NoFit { .. } => Ok(Side::Man(m)),
            }
        }
        other => Err(Failure::new(format!(
            "unsupported input `.{other}` (expected .sys, .dsys or .mf)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_compare(
    first: &Path,
    second: &Path,
    k: u32,
    assert_subset: bool,
    order: Option<u32>,
    point: Option<&str>,
    ranking: Option<&str>,
    out: Output,
) -> Result<(String, u8), Failure> {
    let a = load_side(first, point, ranking)?;
    let b = load_side(second, point, ranking)?;
    let order = order.or_else(|| a.natural_start().max(b.natural_start()));
    let va = a.value_at(order)?;
    let vb = b.value_at(order)?;
    let res = decide_sets(&va, &vb, DecideMode::Equality, k);
    let relation = match res.outcome {
        SetRelation::Equal => "Equal",
        SetRelation::Distinct => "Distinct",
        SetRelation::Unknown => "Unknown",
    };
    let code = if res.outcome == SetRelation::Unknown {
        2
    } else {
        0
    };
    match out {
        Output::Text => {
            let mut lines = vec![relation.to_string()];
            if let Some((k1, k2)) = res.witness {
                lines.push(format!("witness: k1 = {k1}, k2 = {k2}"));
            }
            if !assert_subset {
                lines.push(
                    "note: the verdict assumes the first system's solutions are \
                     contained in the second's; pass --assert-subset to accept that \
                     hypothesis"
                        .to_string(),
                );
            }
            Ok((lines.join("\n"), code))
        }
        Output::Structured => {
            let witness = res
                .witness
                .map(|(k1, k2)| json!([k1, k2]))
                .unwrap_or(Value::Null);
            let doc = json!({
                "schema": 1,
                "command": "compare",
                "relation": relation,
                "witness": witness,
                "order": order,
                "conditional": !assert_subset,
                "first": json_count(&va),
                "second": json_count(&vb),
            });
            Ok((doc.to_string(), code))
        }
    }
}

fn run(cli: &Cli) -> Result<(String, u8), Failure> {
    match &cli.cmd {
        Cmd::CountAlg { file } => run_count_alg(file, cli.output),
        Cmd::Decompose { file } => run_decompose(file, cli.output),
        Cmd::CountDiff {
            file,
            point,
            ranking,
        } => run_count_diff(file, point.as_deref(), ranking.as_deref(), cli.output),
        Cmd::Dimension { file } => run_dimension(file, cli.output),
        Cmd::Truncate {
            file,
            order,
            point,
            ranking,
        } => run_truncate(file, *order, point.as_deref(), ranking.as_deref(), cli.output),
        Cmd::Compare {
            first,
            second,
            k,
            assert_subset,
            order,
            point,
            ranking,
        } => run_compare(
            first,
            second,
            *k,
            *assert_subset,
            *order,
            point.as_deref(),
            ranking.as_deref(),
            cli.output,
        ),
    }
}

/// Writes the result to stdout. A closed pipe (e.g. piping into `head`)
/// is a normal way for the reader to stop early, not an error.
fn emit(text: &str) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    out.flush()
}

/// Reads the `COUNTDIFF_THREADS` cap. Every computation currently runs on
/// a single thread, so any valid cap is honored as-is; the value is still
/// validated so a typo fails loudly instead of being ignored.
fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var("COUNTDIFF_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => Err(Failure::new(
            "COUNTDIFF_THREADS must be a positive integer",
        )),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure::new(format!(
                "COUNTDIFF_THREADS must be a positive integer, got `{s}`"
            ))),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match thread_cap().and_then(|_cap| run(&cli)) {
        Ok((text, code)) => match emit(&text) {
            Ok(()) => ExitCode::from(code),
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::from(code),
            Err(e) => {
                eprintln!("error: cannot write to stdout: {e}");
                ExitCode::from(1)
            }
        },
        Err(f) => {
            match f.code {
                Some(code) => eprintln!("error[{code}]: {}", f.message),
                None => eprintln!("error: {}", f.message),
            }
            ExitCode::from(1)
        }
    }
}
