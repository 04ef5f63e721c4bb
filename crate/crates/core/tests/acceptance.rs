//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use symfind::algsolve::{check_buchberger, check_disjoint, check_membership, equations_in, Dimension, Limits, RealFlag};
use symfind::analysis::{analyze, check_elements, Analysis, AnalysisConfig};
use symfind::ansatz::instantiate_infinitesimal;
use symfind::cas::{RatFunc, Rational};
use symfind::detsys::build_inf_detsys;
use symfind::model::{parse_expr, parse_model, AnalysisOptions, ControlModel};
use symfind::symmetry::{generators, in_span, positivity_bounds, Verdict};
use symfind::verify::{residual_passes, symbolic_residual};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn load(name: &str) -> ControlModel {
    let path = format!("{}/../../models/{name}.sfm", env!("CARGO_MANIFEST_DIR"));
    parse_model(&std::fs::read_to_string(path).expect("corpus model")).expect("corpus model parses")
}

fn run(name: &str, opts: AnalysisOptions) -> Result<Analysis, String> {
    let cfg = AnalysisConfig { opts, ..Default::default() };
    analyze(&load(name), &cfg).map_err(|e| format!("{name}: {e}"))
}

fn seirq_opts() -> AnalysisOptions {
    let mut o = AnalysisOptions { removed_states: vec!["R".into()], ..Default::default() };
    o.fixed_params.insert("gamma".into());
    o
}

fn expr(m: &ControlModel, s: &str) -> RatFunc {
    parse_expr(s, m.registry()).expect("expected map parses")
}

fn maps_equal(a: &Analysis, i: usize, states: &[&str], params: &[&str]) -> bool {
    let e = &a.elements.as_ref().unwrap().elements[i];
    let m = &a.model;
    let want_s: Vec<RatFunc> = states.iter().map(|s| expr(m, s)).collect();
    let want_p: Vec<RatFunc> = params.iter().map(|s| expr(m, s)).collect();
    e.states.as_ref() == Some(&want_s) && e.params.as_ref() == Some(&want_p)
}

fn criterion_1() -> Outcome {
    let clock = Instant::now();
    let a = run("mammillary4", AnalysisOptions::default())?;
    let set = a.elements.as_ref().ok_or("no elements")?;
    ensure!(a.count() == Some(6), "count {:?}", a.count());
    ensure!(set.branches.iter().all(|b| b.degree == 1), "non-rational branch");
    let m = &a.model;
    let mut perms = BTreeSet::new();
    for e in &set.elements {
        let (s, p) = (e.states.as_ref().unwrap(), e.params.as_ref().unwrap());
        // σ(i) read off x_i, then checked against k1i and ki1.
        let mut sigma = Vec::new();
        for i in 2..=4 {
            let img = (2..=4)
                .find(|&j| s[i - 1] == RatFunc::var(m.nvars(), m.state_var(j - 1)))
                .ok_or(format!("x{i} is not mapped to a peripheral state"))?;
            let k = |a: &str| RatFunc::var(m.nvars(), m.param_var(m.param_index(a).unwrap()));
            ensure!(p[m.param_index(&format!("k1{i}")).unwrap()] == k(&format!("k1{img}")), "k1{i} not permuted with x{i}");
            ensure!(p[m.param_index(&format!("k{i}1")).unwrap()] == k(&format!("k{img}1")), "k{i}1 not permuted with x{i}");
            sigma.push(img);
        }
        perms.insert(sigma);
    }
    ensure!(perms.len() == 6, "{} distinct permutations", perms.len());
    let g = a.group.as_ref().ok_or("no group")?;
    ensure!(g.name.as_deref() == Some("S3"), "group {:?}", g.name);
    let v = &a.verdicts;
    ensure!(v.state("x1") == Verdict::Global && v.param("k01") == Verdict::Global, "x1/k01 not global");
    for s in ["x2", "x3", "x4"] {
        ensure!(v.state(s) == Verdict::Sling, "{s} not SLING");
    }
    for p in ["k12", "k13", "k14", "k21", "k31", "k41"] {
        ensure!(v.param(p) == Verdict::Sling, "{p} not SLING");
    }
    let secs = clock.elapsed().as_secs_f64();
    ensure!(secs < 300.0, "took {secs:.1}s");
    Ok(format!("6 permutations, S3, verdicts match ({secs:.2}s)"))
}

fn criterion_2() -> Outcome {
    let opts = AnalysisOptions { deg_x: 1, ..Default::default() };
    let cfg = AnalysisConfig { opts, bounds: None, ..Default::default() };
    let m = load("goodwin");
    let a = analyze(&m, &cfg).map_err(|e| e.to_string())?;
    ensure!(a.count() == Some(8), "count {:?}", a.count());
    let set = a.elements.as_ref().unwrap();
    let deg2: Vec<usize> = (0..set.branches.len()).filter(|&b| set.branches[b].degree == 2).collect();
    ensure!(deg2.len() == 2, "{} degree-2 branches", deg2.len());
    for &b in &deg2 {
        ensure!(set.branches[b].real == RealFlag::NonReal, "branch {b} not flagged non-real");
        let e = set.elements.iter().find(|e| e.branch == b).unwrap();
        ensure!(set.constraints(e).iter().any(|c| c == "k1^2 + k1~^2"), "branch {b} lacks k1~^2 + k1^2");
    }
    let swaps: Vec<usize> = (0..set.order())
        .filter(|&i| maps_equal(&a, i, &["X", "Y + Z/k1*(k2 - k3)", "Z"], &["k1", "k3", "k2"]))
        .collect();
    ensure!(swaps.len() == 1, "{} elements equal the swap", swaps.len());
    let g = a.group.as_ref().unwrap();
    let mut orders: Vec<usize> = g.element_orders.iter().map(|o| o.unwrap_or(0)).collect();
    orders.sort();
    ensure!(g.abelian == Some(true) && orders == [1, 2, 2, 2, 4, 4, 4, 4], "orders {orders:?}, abelian {:?}", g.abelian);
    ensure!(g.name.as_deref() == Some("C4xC2"), "group {:?}", g.name);
    for (s, v) in [("Y", a.verdicts.state("Y")), ("k2", a.verdicts.param("k2")), ("k3", a.verdicts.param("k3"))] {
        ensure!(v == Verdict::Sling, "{s} is {v:?}");
    }
    let bio_cfg = AnalysisConfig { bounds: Some(positivity_bounds(&m)), ..cfg };
    let b = analyze(&m, &bio_cfg).map_err(|e| e.to_string())?;
    let bv = &b.biological.as_ref().unwrap().verdicts;
    ensure!(bv.param("k1") == Verdict::Global && bv.state("Z") == Verdict::Global, "biological k1/Z not global");
    Ok("count 8, two non-real k1~^2 + k1^2 branches, swap exact, C4xC2, bio k1/Z global".into())
}

fn criterion_3() -> Outcome {
    let clock = Instant::now();
    let mut seen = Vec::new();
    for (name, m) in [("goodwin2", 2), ("goodwin3", 3), ("goodwin5", 5)] {
        let a = run(name, AnalysisOptions::default())?;
        let order = a.group.as_ref().map(|g| g.order);
        ensure!(a.count() == Some(2 * m) && order == Some(2 * m), "m={m}: count {:?}, order {order:?}", a.count());
        seen.push(format!("m={m}: {}", 2 * m));
    }
    let secs = clock.elapsed().as_secs_f64();
    ensure!(secs < 600.0, "took {secs:.1}s");
    Ok(format!("{} ({secs:.1}s)", seen.join(", ")))
}

fn criterion_4() -> Outcome {
    let opts = AnalysisOptions { deg_xi: 1, ..Default::default() };
    let a = run("llw1987", opts.clone())?;
    let positive = matches!(a.outcome.as_ref().map(|o| &o.dimension), Some(Dimension::Positive { .. }));
    ensure!(positive, "finite set not positive-dimensional");
    let m = &a.model;
    let lin = instantiate_infinitesimal(&build_inf_detsys(m, &opts).map_err(|e| e.to_string())?, &opts).map_err(|e| e.to_string())?;
    let gens = generators(m, &lin);
    ensure!(!gens.is_empty(), "no generators");
    let mut w = vec![Rational::zero(); lin.columns.len()];
    for (col, v) in [("xi_x1[x1]", -1), ("xi_x2[x2]", 1), ("zeta_th2[th2]", -1), ("zeta_th4[th4]", 1)] {
        let c = lin.columns.iter().position(|c| c == col).ok_or(format!("no column {col}"))?;
        w[c] = Rational::from_int(v);
    }
    let basis: Vec<Vec<Rational>> = gens.iter().map(|g| g.vector.clone()).collect();
    ensure!(in_span(&basis, &w), "scaling generator not in the nullspace");
    let v = &a.verdicts;
    for p in ["th1", "th3"] {
        ensure!(v.param(p) == Verdict::Sling, "{p} is {:?}", v.param(p));
    }
    for p in ["th2", "th4"] {
        ensure!(v.param(p) == Verdict::Unidentifiable, "{p} is {:?}", v.param(p));
    }
    for s in ["x1", "x2"] {
        ensure!(v.state(s) == Verdict::Unidentifiable, "{s} is {:?}", v.state(s));
    }
    Ok(format!("positive-dimensional, nullspace dimension {}, scaling generator in span", gens.len()))
}

fn criterion_5() -> Outcome {
    let clock = Instant::now();
    let a = run("seirq", seirq_opts())?;
    let generic_secs = clock.elapsed().as_secs_f64();
    ensure!(a.count() == Some(2), "count {:?}", a.count());
    let states = [
        "nu*psi*S*(gamma - 1)/((nu - gamma)*(psi*gamma - psi - gamma))",
        "(I*(psi - 1)*gamma - psi*I + nu*(E + I))*(gamma - 1)*psi/((nu - gamma)*((psi - 1)*gamma - psi))",
        "I*psi*(1 - gamma)/(nu - gamma)",
        "Q",
    ];
    let params = ["beta*(gamma - nu)/((gamma - 1)*psi)", "(1 - psi)*gamma + psi", "(gamma - nu)/(gamma - 1)", "gamma"];
    ensure!((0..2).any(|i| maps_equal(&a, i, &states, &params)), "no element equals the expected maps");
    let v = &a.verdicts;
    for s in ["S", "E", "I"] {
        ensure!(v.state(s) == Verdict::Sling, "{s} is {:?}", v.state(s));
    }
    for p in ["beta", "nu", "psi"] {
        ensure!(v.param(p) == Verdict::Sling, "{p} is {:?}", v.param(p));
    }
    ensure!(v.param("gamma") == Verdict::Unknown, "gamma is {:?}", v.param("gamma"));
    ensure!(generic_secs < 1800.0, "generic run took {generic_secs:.1}s");
    let clock = Instant::now();
    let s = run("seirq", AnalysisOptions { specialize_seed: Some(1), ..seirq_opts() })?;
    let spec_secs = clock.elapsed().as_secs_f64();
    ensure!(s.count() == Some(2), "specialized count {:?}", s.count());
    ensure!(spec_secs < 300.0, "specialized run took {spec_secs:.1}s");
    Ok(format!("2 solutions, maps exact ({generic_secs:.2}s), specialized count 2 ({spec_secs:.2}s)"))
}

/// Models and options the property suites run over.
fn corpus() -> Vec<(&'static str, AnalysisOptions)> {
    let d = AnalysisOptions::default;
    vec![
        ("mammillary4", d()),
        ("goodwin", d()),
        ("goodwin2", d()),
        ("goodwin3", d()),
        ("goodwin5", d()),
        ("llw1987", d()),
        ("seirq", seirq_opts()),
        ("toy_sign", d()),
        ("two_pool", d()),
        ("decay", d()),
    ]
}

fn identity_present(a: &Analysis) -> bool {
    if a.elements.as_ref().is_some_and(|s| s.identity().is_some()) {
        return true;
    }
    let Some(out) = &a.outcome else { return false };
    let sys = &a.system;
    let id = sys.identity_point();
    let nv = sys.nvars();
    let bind: Vec<(usize, RatFunc)> =
        id.iter().enumerate().map(|(u, p)| (sys.unknown_var(u), RatFunc::from_poly(p.clone()))).collect();
    out.decomposition.positive.iter().any(|c| {
        c.gens.iter().all(|g| {
            let p = RatFunc::from_poly(c.ring.to_mpoly(g));
            debug_assert_eq!(p.nvars(), nv);
            p.substitute(&bind).map(|r| r.is_zero()).unwrap_or(false)
        })
    })
}

fn criterion_6() -> Outcome {
    let limits = Limits::default();
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, opts) in corpus() {
        let a = run(name, opts.clone())?;
        let out = a.outcome.as_ref().ok_or(format!("{name}: inconclusive"))?;
        let mut fail = |p: &str| failures.push(format!("{name}:{p}"));
        if !identity_present(&a) {
            fail("a");
        }
        let checks = check_elements(&a, 11, 3, 1e-8, false).map_err(|e| format!("{name}: {e}"))?;
        if !checks.iter().all(|c| c.symbolic) {
            fail("b");
        }
        if !checks.iter().all(|c| c.numeric.len() == 3 && c.numeric.iter().all(|r| r.pass && r.max_abs < 1e-8)) {
            fail("c");
        }
        let bases = out.components.iter().chain(out.decomposition.branches.iter().map(|b| &b.lex));
        let certs = bases.clone().all(check_buchberger)
            && bases.into_iter().all(|gb| check_membership(gb, &equations_in(&gb.ring, &a.system).0));
        if !certs {
            fail("d");
        }
        if let Some(count) = a.count() {
            if out.decomposition.total_degree() != count {
                fail("e");
            }
            if !check_disjoint(&out.decomposition.branches, &limits).unwrap_or(false) {
                fail("f");
            }
            for seed in 1..=5 {
                let s = run(name, AnalysisOptions { specialize_seed: Some(seed), ..opts.clone() })?;
                if s.count() != Some(count) {
                    fail(&format!("g(seed {seed})"));
                }
            }
        }
        let bad = check_elements(&a, 11, 3, 1e-8, true).map_err(|e| format!("{name}: {e}"))?;
        if !bad.iter().all(|c| !c.passes() && c.numeric.iter().all(|r| !r.pass)) {
            fail("h");
        }
        checked += 1;
    }
    ensure!(failures.is_empty(), "failed: {}", failures.join(", "));
    Ok(format!("(a)-(h) hold on {checked} corpus models"))
}

/// Brute force over degree-1 maps `x~ = a x + b`, `theta~ = c theta + d`
/// with small rational coefficients. By hand: `(a x + b)^2 = x^2` forces
/// `b = 0`, `a = ±1`; the state equation then forces `c = 1`, `d = 0`.
fn brute_force_toy(m: &ControlModel) -> Vec<(Rational, Rational)> {
    let grid: Vec<Rational> = [-2, -1, 0, 1, 2]
        .iter()
        .flat_map(|&n| [Rational::from_int(n), Rational::new(n, 2)])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let nv = m.nvars();
    let x = RatFunc::var(nv, m.state_var(0));
    let th = RatFunc::var(nv, m.param_var(0));
    let lin = |v: &RatFunc, p: &Rational, q: &Rational| v.scale(p).add(&RatFunc::constant(nv, q.clone()));
    let mut found = Vec::new();
    for a in &grid {
        for b in &grid {
            for c in &grid {
                for d in &grid {
                    let res = symbolic_residual(m, &[lin(&x, a, b)], &[lin(&th, c, d)]).unwrap();
                    if residual_passes(&res) {
                        found.push((a.clone(), b.clone()));
                        assert!(c == &Rational::from_int(1) && d.is_zero());
                    }
                }
            }
        }
    }
    found
}

fn criterion_7() -> Outcome {
    let a = run("toy_sign", AnalysisOptions::default())?;
    ensure!(a.count() == Some(2), "count {:?}", a.count());
    let m = &a.model;
    let id = (0..2).any(|i| maps_equal(&a, i, &["x"], &["theta"]));
    let flip = (0..2).any(|i| maps_equal(&a, i, &["-x"], &["theta"]));
    ensure!(id && flip, "elements are not {{identity, x~ = -x}}");
    ensure!(a.verdicts.param("theta") == Verdict::Global, "theta is {:?}", a.verdicts.param("theta"));
    ensure!(a.verdicts.state("x") == Verdict::Sling, "x is {:?}", a.verdicts.state("x"));
    let brute = brute_force_toy(m);
    let mut want = vec![(Rational::from_int(-1), Rational::zero()), (Rational::from_int(1), Rational::zero())];
    want.sort();
    let mut got = brute.clone();
    got.sort();
    ensure!(got == want, "brute force found {got:?}");
    Ok("2 solutions {identity, x~ = -x}; brute force agrees".into())
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 7] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (5, criterion_5), (6, criterion_6), (7, criterion_7)];
    let mut failed = 0;
    let total = Instant::now();
    for (n, f) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {detail}");
            }
        }
    }
    println!("acceptance: {} of 7 passed in {:.1?}", 7 - failed, total.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
