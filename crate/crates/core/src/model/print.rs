use super::ControlModel;

/// Canonical text form; `parse_model(print_model(m)) == m`.
pub fn print_model(mdl: &ControlModel) -> String {
    let names = mdl.registry().names().to_vec();
    let mut s = format!("model {} {{\n", mdl.name);
    s.push_str(&format!("  states {}\n", mdl.states.join(", ")));
    if !mdl.params.is_empty() {
        s.push_str(&format!("  params {}\n", mdl.params.join(", ")));
    }
    if !mdl.inputs.is_empty() {
        s.push_str(&format!("  inputs {}\n", mdl.inputs.join(", ")));
    }
    for (x, f) in mdl.states.iter().zip(&mdl.rhs) {
        s.push_str(&format!("  deq {x}' = {}\n", f.fmt_with_names(&names)));
    }
    for (y, h) in &mdl.outputs {
        s.push_str(&format!("  output {y} = {}\n", h.fmt_with_names(&names)));
    }
    s.push_str("}\n");
    s
}
