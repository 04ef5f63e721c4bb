use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use symfind::algsolve::Limits;
use symfind::analysis::{analyze, report_json, Analysis, AnalysisConfig, AnalysisError};
use symfind::cas::{RatFunc, Rational};
use symfind::detsys::{build_finite_detsys, build_inf_detsys};
use symfind::model::{parse_expr, parse_model, print_model, reduce_model, validate_model, AnalysisOptions, ControlModel};
use symfind::symmetry::{positivity_bounds, Bounds, SymmetryError};
use symfind::verify::{numeric_invariance_explicit, random_scenarios, residual_passes, symbolic_residual_at};

/// Symmetry-based structural identifiability and observability analysis.
#[derive(Parser)]
#[command(name = "symfind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model, then print it in normal form.
    Parse {
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the finite (or infinitesimal) determining system.
    Detsys {
        model: PathBuf,
        #[arg(long)]
        infinitesimal: bool,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        opts: OptionFlags,
    },
    /// Run the full analysis.
    Analyze(AnalyzeArgs),
    /// Re-check every explicit element of a report.
    Verify {
        model: PathBuf,
        report: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct OptionFlags {
    /// Total degree of the state maps in the states.
    #[arg(long, default_value_t = 1)]
    deg_x: u32,
    /// Degree of the state maps in time.
    #[arg(long, default_value_t = 0)]
    deg_t: u32,
    /// Degree of the infinitesimal generator ansatz.
    #[arg(long, default_value_t = 2)]
    deg_xi: u32,
    /// Allow transformed parameters to depend on the states.
    #[arg(long)]
    theta_depends_on_x: bool,
    /// Keep a parameter invariant (repeatable).
    #[arg(long = "fix-param", value_name = "NAME")]
    fix_param: Vec<String>,
    /// Drop a state that no other equation or output references (repeatable).
    #[arg(long = "remove-state", value_name = "NAME")]
    remove_state: Vec<String>,
}

impl OptionFlags {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            deg_x: self.deg_x,
            deg_t: self.deg_t,
            deg_xi: self.deg_xi,
            theta_independent_of_x: !self.theta_depends_on_x,
            fixed_params: self.fix_param.iter().cloned().collect::<BTreeSet<_>>(),
            specialize_seed: None,
            removed_states: self.remove_state.clone(),
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    model: PathBuf,
    #[command(flatten)]
    opts: OptionFlags,
    /// Write the JSON report here (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Omit timestamps and timings from the report.
    #[arg(long)]
    no_timestamp: bool,
    /// Replace parameters by seeded random rationals before solving.
    #[arg(long)]
    specialize: bool,
    /// Seed for sampling and specialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the polynomial system in the ansatz unknowns as JSON.
    #[arg(long, value_name = "PATH")]
    dump_algsys: Option<PathBuf>,
    /// Write the Gröbner bases of all components as text.
    #[arg(long, value_name = "PATH")]
    dump_groebner: Option<PathBuf>,
    /// Require every state and parameter to be positive in the biological sub-report.
    #[arg(long)]
    positive: bool,
    /// Open interval for one variable, e.g. `gamma=0.5:1`; either end may be empty.
    #[arg(long = "bound", value_name = "NAME=LO:HI")]
    bound: Vec<String>,
    /// Ceiling on S-polynomial reductions per Gröbner computation.
    #[arg(long, default_value_t = 200_000)]
    max_steps: u64,
    /// Time limit in seconds for the Gröbner computations.
    #[arg(long, default_value_t = 1800)]
    time_limit: u64,
    /// Skip the search for continuous symmetries.
    #[arg(long)]
    no_infinitesimal: bool,
}

/// Failure classes and their exit codes.
enum Failure {
    User(String),
    Internal(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::User(_) => 2,
            Failure::Internal(_) | Failure::Verification(_) => 1,
        }
    }
}

const EXIT_INCONCLUSIVE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            match &f {
                Failure::User(m) => eprintln!("error: {m}"),
                Failure::Internal(m) => eprintln!("internal error: {m}"),
                Failure::Verification(m) => eprintln!("verification failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load(path: &Path) -> Result<ControlModel, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::User(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn analysis_failure(e: AnalysisError) -> Failure {
    match e {
        AnalysisError::Symmetry(SymmetryError::Internal(m)) => Failure::Internal(m),
        AnalysisError::Symmetry(e) => Failure::Internal(e.to_string()),
        other => Failure::User(other.to_string()),
    }
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    if path == Path::new("-") {
        println!("{contents}");
        return Ok(());
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Failure::User(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let io = |e: std::io::Error| Failure::User(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Parse { model, json } => {
            let m = load(&model)?;
            let findings = validate_model(&m);
            if json {
                let names = m.registry().names().to_vec();
                let v = serde_json::json!({
                    "name": m.name,
                    "states": m.states,
                    "inputs": m.inputs,
                    "params": m.params,
                    "rhs": m.states.iter().zip(&m.rhs).map(|(s, f)| (s.clone(), f.fmt_with_names(&names))).collect::<std::collections::BTreeMap<_, _>>(),
                    "outputs": m.outputs.iter().map(|(n, h)| (n.clone(), h.fmt_with_names(&names))).collect::<std::collections::BTreeMap<_, _>>(),
                    "findings": findings.iter().map(|f| format!("{}: {}", f.location, f.message)).collect::<Vec<_>>(),
                });
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else {
                print!("{}", print_model(&m));
                for f in &findings {
                    eprintln!("warning: {}: {}", f.location, f.message);
                }
            }
            Ok(if findings.is_empty() { 0 } else { 2 })
        }
        Command::Detsys { model, infinitesimal, json, opts } => {
            let m = load(&model)?;
            let o = opts.options();
            let m = reduce_model(&m, &o).map_err(|e| Failure::User(e.to_string()))?;
            let d = if infinitesimal { build_inf_detsys(&m, &o) } else { build_finite_detsys(&m, &o) }
                .map_err(|e| Failure::User(e.to_string()))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&d.to_json()).expect("json"));
            } else {
                print!("{}", d.to_text());
            }
            Ok(0)
        }
        Command::Analyze(args) => run_analyze(args),
        Command::Verify { model, report, tol, seed } => run_verify(&model, &report, tol, seed),
    }
}

fn parse_bound(spec: &str) -> Result<(String, (f64, f64)), Failure> {
    let bad = || Failure::User(format!("bad bound `{spec}`; expected NAME=LO:HI"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
    let num = |s: &str, dflt: f64| if s.trim().is_empty() { Ok(dflt) } else { s.trim().parse::<f64>().map_err(|_| bad()) };
    let (lo, hi) = (num(lo, f64::NEG_INFINITY)?, num(hi, f64::INFINITY)?);
    if lo >= hi {
        return Err(bad());
    }
    Ok((name.trim().to_string(), (lo, hi)))
}

fn run_analyze(args: AnalyzeArgs) -> Result<u8, Failure> {
    let model = load(&args.model)?;
    let mut opts = args.opts.options();
    if args.specialize {
        opts.specialize_seed = Some(args.seed);
    }
    opts.check(&model).map_err(|e| Failure::User(e.to_string()))?;
    let bounds = if args.positive || !args.bound.is_empty() {
        let reduced = reduce_model(&model, &opts).map_err(|e| Failure::User(e.to_string()))?;
        let mut b: Bounds = if args.positive { positivity_bounds(&reduced) } else { Bounds::new() };
        for spec in &args.bound {
            let (name, iv) = parse_bound(spec)?;
            if reduced.state_index(&name).is_none() && reduced.param_index(&name).is_none() {
                return Err(Failure::User(format!("bound names unknown variable `{name}`")));
            }
            b.insert(name, iv);
        }
        Some(b)
    } else {
        None
    };
    if args.max_steps == 0 || args.time_limit == 0 {
        return Err(Failure::User("resource ceilings must be positive".into()));
    }
    let cfg = AnalysisConfig {
        opts,
        limits: Limits { max_steps: args.max_steps, max_time: Duration::from_secs(args.time_limit) },
        seed: args.seed,
        bounds,
        infinitesimal: !args.no_infinitesimal,
    };
    let a = analyze(&model, &cfg).map_err(analysis_failure)?;
    if let Some(p) = &args.dump_algsys {
        write_atomic(p, &serde_json::to_string_pretty(&a.system.to_json()).expect("json"))?;
    }
    if let Some(p) = &args.dump_groebner {
        write_atomic(p, &groebner_dump(&a))?;
    }
    let ts = (!args.no_timestamp).then(|| chrono::Utc::now().to_rfc3339());
    let report = report_json(&a, ts);
    if let Some(p) = &args.json {
        write_atomic(p, &(serde_json::to_string_pretty(&report).expect("json") + "\n"))?;
    }
    if args.json.as_deref() != Some(Path::new("-")) {
        print!("{}", summary(&a, &report));
    }
    Ok(if a.is_inconclusive() { EXIT_INCONCLUSIVE } else { 0 })
}

fn groebner_dump(a: &Analysis) -> String {
    let mut s = String::new();
    let Some(out) = &a.outcome else { return "finite analysis inconclusive\n".into() };
    let th = &a.model.params;
    let un = a.system.unknown_names();
    for (i, c) in out.components.iter().enumerate() {
        let _ = writeln!(s, "# component {i}");
        for g in &c.gens {
            let _ = writeln!(s, "{}", c.ring.fmt(g, th, &un));
        }
    }
    s
}

fn summary(a: &Analysis, r: &Value) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model {}", a.model.name);
    let d = &r["discrete"];
    match a.count() {
        Some(n) => {
            let _ = write!(s, "discrete symmetries: {n}");
            if let Some(name) = d["group_name"].as_str() {
                let _ = write!(s, " (group {name})");
            }
            let _ = writeln!(s);
        }
        None if a.is_inconclusive() => {
            let _ = writeln!(s, "discrete symmetries: inconclusive");
        }
        None => {
            let _ = writeln!(s, "discrete symmetries: positive-dimensional solution set");
        }
    }
    if let Some(elems) = d["elements"].as_array() {
        for e in elems {
            let id = &e["id"];
            if e["identity"].as_bool() == Some(true) {
                let _ = writeln!(s, "  [{id}] identity");
            } else if let Some(st) = e["states"].as_object() {
                let mut parts: Vec<String> = Vec::new();
                for (k, v) in st.iter().chain(e["params"].as_object().into_iter().flatten()) {
                    if v.as_str() != Some(k.as_str()) {
                        parts.push(format!("{k}~ = {}", v.as_str().unwrap_or("?")));
                    }
                }
                let _ = writeln!(s, "  [{id}] {}", parts.join(", "));
            } else {
                let _ = writeln!(s, "  [{id}] algebraic, {} (branch {})", e["real"].as_str().unwrap_or("?"), e["branch"]);
            }
        }
    }
    let c = &r["continuous"];
    let _ = writeln!(s, "continuous generators: {}", c["dimension"]);
    for g in c["generators"].as_array().into_iter().flatten() {
        let mut parts = Vec::new();
        for key in ["xi", "zeta"] {
            for (k, v) in g[key].as_object().into_iter().flatten() {
                if v.as_str() != Some("0") {
                    parts.push(format!("d{k}: {}", v.as_str().unwrap_or("?")));
                }
            }
        }
        let _ = writeln!(s, "  {}", parts.join(", "));
    }
    let _ = writeln!(s, "verdicts:");
    let show = |s: &mut String, v: &Value| {
        for key in ["states", "params"] {
            for (k, e) in v[key].as_object().into_iter().flatten() {
                let _ = write!(s, "  {k}: {}", e["verdict"].as_str().unwrap_or("?"));
                for field in ["qualifier", "witness", "note"] {
                    if let Some(w) = e[field].as_str() {
                        let _ = write!(s, " ({w})");
                    }
                }
                let _ = writeln!(s);
            }
        }
    };
    show(&mut s, &r["verdicts"]);
    if let Some(b) = r.get("biological") {
        let _ = writeln!(s, "biologically relevant verdicts (discarded elements {}):", b["discarded"]);
        show(&mut s, &b["verdicts"]);
    }
    for c in a.caveats.iter() {
        let _ = writeln!(s, "note: {c}");
    }
    s
}

fn run_verify(model_path: &Path, report_path: &Path, tol: f64, seed: u64) -> Result<u8, Failure> {
    let model = load(model_path)?;
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| Failure::User(format!("cannot read {}: {e}", report_path.display())))?;
    let report: Value = serde_json::from_str(&text).map_err(|e| Failure::User(format!("bad report: {e}")))?;
    let opts: AnalysisOptions = serde_json::from_value(report["options"].clone())
        .map_err(|e| Failure::User(format!("bad report options: {e}")))?;
    let model = reduce_model(&model, &opts).map_err(|e| Failure::User(e.to_string()))?;
    if report["model"].as_str() != Some(model.name.as_str()) {
        return Err(Failure::User("report was produced for a different model".into()));
    }
    let spec: Option<Vec<Rational>> = match report["options"].get("specialization") {
        Some(Value::Object(map)) => Some(
            model
                .params
                .iter()
                .map(|p| {
                    map.get(p)
                        .and_then(Value::as_str)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Failure::User(format!("specialization lacks {p}")))
                })
                .collect::<Result<_, _>>()?,
        ),
        _ => None,
    };
    let theta: Option<Vec<f64>> = spec.as_ref().map(|p| p.iter().map(Rational::to_f64).collect());
    let scenarios = random_scenarios(&model, seed, 3, theta.as_deref());
    let parse = |m: &Value, names: &[String]| -> Result<Vec<RatFunc>, Failure> {
        names
            .iter()
            .map(|n| {
                let src = m.get(n).and_then(Value::as_str).ok_or_else(|| Failure::User(format!("map for {n} missing")))?;
                parse_expr(src, model.registry()).map_err(|e| Failure::User(format!("map for {n}: {e}")))
            })
            .collect()
    };
    let mut failed = Vec::new();
    let mut checked = 0;
    for e in report["discrete"]["elements"].as_array().into_iter().flatten() {
        let id = &e["id"];
        if e["explicit"].as_bool() != Some(true) {
            println!("element {id}: constraint form, not re-checkable from the report (skipped)");
            continue;
        }
        let states = parse(&e["states"], &model.states)?;
        let params = parse(&e["params"], &model.params)?;
        let res = symbolic_residual_at(&model, &states, &params, spec.as_deref()).map_err(|e| Failure::User(e.to_string()))?;
        let sym = residual_passes(&res);
        let mut worst: f64 = 0.0;
        let mut num_ok = true;
        for sc in &scenarios {
            match numeric_invariance_explicit(&model, &states, &params, sc, tol) {
                Ok(r) => {
                    worst = worst.max(r.max_rel);
                    num_ok &= r.pass;
                }
                Err(err) => {
                    num_ok = false;
                    println!("element {id}: numeric check error: {err}");
                }
            }
        }
        checked += 1;
        println!(
            "element {id}: symbolic {}, numeric {} (max deviation {worst:.3e})",
            if sym { "pass" } else { "FAIL" },
            if num_ok { "pass" } else { "FAIL" }
        );
        if !(sym && num_ok) {
            failed.push(id.to_string());
        }
    }
    if failed.is_empty() {
        println!("{checked} element(s) verified");
        Ok(0)
    } else {
        Err(Failure::Verification(format!("elements {}", failed.join(", "))))
    }
}
