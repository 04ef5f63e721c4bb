use std::sync::OnceLock;

use proptest::prelude::*;
use symfind::algsolve::{check_buchberger, check_membership, groebner, nullspace_rows, Limits, Ring, TermOrder};
use symfind::analysis::{analyze, Analysis, AnalysisConfig};
use symfind::cas::{MPoly, RatFunc, Rational};
use symfind::model::{parse_model, ControlModel};
use symfind::symmetry::{catalog_name, classify, in_span, ClassifyInput, Verdict};
use symfind::verify::{rk4_integrate, NumericScenario};

const NV: usize = 3;

fn poly() -> impl Strategy<Value = MPoly> {
    prop::collection::vec((prop::collection::vec(0u16..3, NV), -5i64..=5), 1..5)
        .prop_map(|terms| MPoly::from_terms(NV, terms.into_iter().map(|(e, c)| (e, Rational::from_int(c)))))
}

fn nonzero_poly() -> impl Strategy<Value = MPoly> {
    poly().prop_filter("nonzero", |p| !p.is_zero())
}

fn ratfunc() -> impl Strategy<Value = RatFunc> {
    (poly(), nonzero_poly()).prop_map(|(n, d)| RatFunc::new(n, d).unwrap())
}

fn goodwin() -> &'static Analysis {
    static A: OnceLock<Analysis> = OnceLock::new();
    A.get_or_init(|| {
        let path = format!("{}/../../models/goodwin.sfm", env!("CARGO_MANIFEST_DIR"));
        let m = parse_model(&std::fs::read_to_string(path).unwrap()).unwrap();
        analyze(&m, &AnalysisConfig::default()).unwrap()
    })
}

fn decay(theta: &str) -> ControlModel {
    let text = format!("model decay {{\n  params {theta}\n  states x\n  deq x' = -{theta}*x\n  output y = x\n}}\n");
    parse_model(&text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ratfunc_field_laws(a in ratfunc(), b in ratfunc(), c in ratfunc()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
        if !b.is_zero() {
            prop_assert_eq!(a.div(&b).unwrap().mul(&b), a);
        }
    }

    #[test]
    fn compose_with_identity_images(a in ratfunc()) {
        let id: Vec<RatFunc> = (0..NV).map(|v| RatFunc::var(NV, v)).collect();
        prop_assert_eq!(a.compose(&id, NV).unwrap(), a);
    }

    #[test]
    fn rational_evaluation_matches_float(a in ratfunc(), p in prop::collection::vec(-3i64..=3, NV)) {
        let pt: Vec<Rational> = p.iter().map(|&v| Rational::new(2 * v + 1, 3)).collect();
        if let Ok(exact) = a.eval(&pt) {
            let f: Vec<f64> = pt.iter().map(Rational::to_f64).collect();
            let approx = a.eval_f64(&f).unwrap();
            prop_assert!((exact.to_f64() - approx).abs() <= 1e-9 * (1.0 + approx.abs()));
        }
    }

    #[test]
    fn groebner_certificates(gens in prop::collection::vec(nonzero_poly(), 1..4)) {
        let ring = Ring::new(NV, 0, TermOrder::Degrevlex);
        let input: Vec<_> = gens.iter().map(|g| ring.from_mpoly(g)).collect();
        let gb = groebner(&ring, &input, &Limits::default()).unwrap();
        prop_assert!(check_buchberger(&gb));
        prop_assert!(check_membership(&gb, &input));
    }

    #[test]
    fn nullspace_vectors_annihilate_rows(m in prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 1..5)) {
        let rows: Vec<Vec<(usize, Rational)>> = m
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, &v)| (j, Rational::from_int(v))).collect())
            .collect();
        let basis = nullspace_rows(5, &rows);
        prop_assert!(basis.len() >= 5 - m.len());
        for v in &basis {
            for r in &rows {
                let dot = r.iter().fold(Rational::zero(), |acc, (j, c)| acc + c.clone() * v[*j].clone());
                prop_assert!(dot.is_zero());
            }
            let scaled: Vec<Rational> = v.iter().map(|x| x.clone() * Rational::from_int(-7)).collect();
            prop_assert!(in_span(&basis, &scaled));
        }
    }

    #[test]
    fn rk4_tracks_exponential_decay(theta in 0.1f64..2.0, x0 in 0.2f64..1.2) {
        let m = decay("k");
        let sc = NumericScenario { x0: vec![x0], theta: vec![theta], inputs: vec![], t0: 0.0, t1: 2.0, h: 1e-3 };
        let tr = rk4_integrate(&m, &sc).unwrap();
        let last = tr.states.last().unwrap()[0].re;
        prop_assert!((last - x0 * (-theta * 2.0).exp()).abs() < 1e-10);
    }

    #[test]
    fn cyclic_groups_are_named(n in 1usize..12) {
        // Element orders of C_n: the order of g^i is n / gcd(i, n).
        let gcd = |mut a: usize, mut b: usize| { while b != 0 { (a, b) = (b, a % b); } a };
        let orders: Vec<usize> = (0..n).map(|i| n / gcd(i, n)).collect();
        let want = format!("C{n}");
        prop_assert_eq!(catalog_name(n, true, &orders), Some(want));
    }

    #[test]
    fn bounds_never_demote_global_verdicts(mask in prop::collection::vec(any::<bool>(), 8)) {
        let a = goodwin();
        let set = a.elements.as_ref().unwrap();
        let mut active = mask.clone();
        active[set.identity().unwrap()] = true;
        let input = ClassifyInput {
            model: &a.model,
            fixed_params: &a.config.opts.fixed_params,
            elements: Some(set),
            active: Some(&active),
            positive: &a.positive,
            generators: &a.generators,
            finite_inconclusive: false,
        };
        let filtered = classify(&input);
        for (name, e) in a.verdicts.states.iter().chain(&a.verdicts.params) {
            if e.verdict == Verdict::Global {
                let f = filtered.states.get(name).or_else(|| filtered.params.get(name)).unwrap();
                prop_assert_eq!(f.verdict, Verdict::Global);
            }
        }
    }
}
