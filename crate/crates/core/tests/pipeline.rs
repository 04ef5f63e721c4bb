use symfind::analysis::{analyze, check_elements, report_json, AnalysisConfig};
use symfind::model::{parse_model, AnalysisOptions, ControlModel};
use symfind::symmetry::{compose, Verdict};
use symfind::verify::{residual_passes, symbolic_residual};

fn load(name: &str) -> ControlModel {
    let path = format!("{}/../../models/{name}.sfm", env!("CARGO_MANIFEST_DIR"));
    parse_model(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn explicit_elements_have_inverses_or_a_warning() {
    for name in ["mammillary4", "goodwin", "toy_sign", "seirq"] {
        let mut opts = AnalysisOptions::default();
        if name == "seirq" {
            opts.removed_states.push("R".into());
            opts.fixed_params.insert("gamma".into());
        }
        let a = analyze(&load(name), &AnalysisConfig { opts, ..Default::default() }).unwrap();
        let set = a.elements.as_ref().unwrap();
        let id = &set.elements[set.identity().unwrap()];
        let explicit = set.explicit_indices();
        let warned = a.group.as_ref().unwrap().warnings.iter().any(|w| w.contains("inverse"));
        for &i in &explicit {
            let has_inverse = explicit.iter().any(|&j| {
                let (s, p) = compose(&a.model, &set.elements[i], &set.elements[j]).unwrap();
                Some(&s) == id.states.as_ref() && Some(&p) == id.params.as_ref()
            });
            assert!(has_inverse ^ warned, "{name}: element {i}");
        }
    }
}

#[test]
fn every_emitted_map_has_zero_residual() {
    for name in ["mammillary4", "goodwin2", "two_pool"] {
        let a = analyze(&load(name), &AnalysisConfig::default()).unwrap();
        let Some(set) = &a.elements else { continue };
        for e in set.elements.iter().filter(|e| e.is_explicit()) {
            let res = symbolic_residual(&a.model, e.states.as_ref().unwrap(), e.params.as_ref().unwrap()).unwrap();
            assert!(residual_passes(&res), "{name}");
        }
    }
}

#[test]
fn seirq_element_matches_numerically_despite_negative_values() {
    let mut opts = AnalysisOptions::default();
    opts.removed_states.push("R".into());
    opts.fixed_params.insert("gamma".into());
    let a = analyze(&load("seirq"), &AnalysisConfig { opts, ..Default::default() }).unwrap();
    let checks = check_elements(&a, 4, 3, 1e-8, false).unwrap();
    assert!(checks.iter().all(|c| c.passes()));
}

#[test]
fn two_pool_rescaling_is_continuous() {
    let a = analyze(&load("two_pool"), &AnalysisConfig::default()).unwrap();
    assert!(!a.generators.is_empty());
    assert_eq!(a.verdicts.state("x2"), Verdict::Unidentifiable);
    assert_eq!(a.verdicts.param("b"), Verdict::Unidentifiable);
    assert_eq!(a.verdicts.param("a"), Verdict::Global);
}

#[test]
fn report_fields() {
    let a = analyze(&load("mammillary4"), &AnalysisConfig::default()).unwrap();
    let r = report_json(&a, None);
    for key in ["model", "options", "continuous", "discrete", "verdicts", "caveats"] {
        assert!(r.get(key).is_some(), "{key}");
    }
    assert!(r.get("timestamp").is_none());
    assert_eq!(r["discrete"]["elements"].as_array().unwrap().len(), 6);
    let with_time = report_json(&a, Some("2024-01-01T00:00:00Z".into()));
    assert_eq!(with_time["timestamp"], "2024-01-01T00:00:00Z");
}

#[test]
fn decay_only_has_identity() {
    let a = analyze(&load("decay"), &AnalysisConfig::default()).unwrap();
    assert_eq!(a.count(), Some(1));
    assert_eq!(a.group.as_ref().unwrap().name.as_deref(), Some("C1"));
    assert_eq!(a.verdicts.state("x"), Verdict::Global);
}
