use num_complex::Complex64;
use serde::Serialize;

use super::transform::{compose, ElementSet};
use super::SymmetryError;

/// Composition data of the found elements.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryGroup {
    /// Number of elements (sum of branch degrees).
    pub order: usize,
    pub identity: Option<usize>,
    /// Exact table over explicit elements: `exact_table[a][b]` is the index of
    /// `e_a ∘ e_b` (apply `e_b` first), `None` when it left the element set.
    pub explicit: Vec<usize>,
    pub exact_table: Vec<Vec<Option<usize>>>,
    /// Table over all elements from complex floating evaluation, when closed.
    pub table: Option<Vec<Vec<usize>>>,
    pub element_orders: Vec<Option<usize>>,
    /// Orders involve algebraic elements and were estimated numerically.
    pub orders_numeric: bool,
    pub abelian: Option<bool>,
    pub name: Option<String>,
    pub warnings: Vec<String>,
}

const MATCH_TOL: f64 = 1e-6;

/// Fixed complex evaluation points `(t, x)`; generic enough to separate elements.
fn probe_points(n: usize) -> Vec<(Complex64, Vec<Complex64>)> {
    (0..3)
        .map(|p| {
            let p = p as f64;
            let t = Complex64::new(0.31 + 0.2 * p, 0.07 + 0.05 * p);
            let x = (0..n)
                .map(|v| {
                    let v = v as f64;
                    Complex64::new(0.41 + 0.173 * v + 0.11 * p, 0.23 - 0.061 * v + 0.09 * p)
                })
                .collect();
            (t, x)
        })
        .collect()
}

fn close(a: &[Complex64], b: &[Complex64]) -> bool {
    a.iter().zip(b).all(|(p, q)| (p - q).norm() <= MATCH_TOL * (1.0 + p.norm()))
}

fn flatten(parts: &[(Vec<Complex64>, Vec<Complex64>)]) -> Vec<Complex64> {
    parts.iter().flat_map(|(x, p)| x.iter().chain(p).copied()).collect()
}

struct Numeric<'a> {
    set: &'a ElementSet,
    points: Vec<(Complex64, Vec<Complex64>)>,
    theta: Vec<Complex64>,
    sigs: Vec<Option<Vec<Complex64>>>,
}

impl<'a> Numeric<'a> {
    fn new(set: &'a ElementSet) -> Self {
        let points = probe_points(set.model.n());
        let theta: Vec<Complex64> = set.reference.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut me = Numeric { set, points, theta, sigs: Vec::new() };
        me.sigs = (0..set.order()).map(|i| me.composite(&[i])).collect();
        me
    }

    /// Signature of `e_{seq[0]} ∘ … ∘ e_{seq[last]}` (rightmost applied first).
    fn composite(&self, seq: &[usize]) -> Option<Vec<Complex64>> {
        let mut parts = Vec::new();
        for (t, x) in &self.points {
            let (mut x, mut th) = (x.clone(), self.theta.clone());
            for &i in seq.iter().rev() {
                (x, th) = self.set.apply(i, *t, &x, &th)?;
            }
            parts.push((x, th));
        }
        Some(flatten(&parts))
    }

    fn lookup(&self, sig: &[Complex64]) -> Option<usize> {
        let hits: Vec<usize> =
            (0..self.sigs.len()).filter(|&i| self.sigs[i].as_deref().is_some_and(|s| close(s, sig))).collect();
        (hits.len() == 1).then(|| hits[0])
    }
}

/// Smallest `r ≤ cap` with `e^r` returning every probe to its start, at
/// parameter point `theta`.
fn orbit_order(set: &ElementSet, i: usize, theta: &[f64], cap: usize) -> Option<usize> {
    let th0: Vec<Complex64> = theta.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let pts = probe_points(set.model.n());
    let mut cur: Vec<(Vec<Complex64>, Vec<Complex64>)> = pts.iter().map(|(_, x)| (x.clone(), th0.clone())).collect();
    for r in 1..=cap {
        for ((t, _), c) in pts.iter().zip(cur.iter_mut()) {
            *c = set.apply(i, *t, &c.0, &c.1)?;
        }
        let back = pts.iter().zip(&cur).all(|((_, x), (y, th))| close(x, y) && close(&th0, th));
        if back {
            return Some(r);
        }
    }
    None
}

fn order_in_table(table: &[Vec<usize>], id: usize, i: usize) -> Option<usize> {
    let mut cur = i;
    for r in 1..=table.len() {
        if cur == id {
            return Some(r);
        }
        cur = table[i][cur];
    }
    None
}

/// Exact composition table over explicit elements, a numeric table over all
/// elements, element orders and a catalog name. `samples` are the parameter
/// points for the numeric order estimates of algebraic elements.
pub fn group_structure(set: &ElementSet, samples: &[Vec<f64>]) -> Result<SymmetryGroup, SymmetryError> {
    let order = set.order();
    let identity = set.identity();
    let explicit = set.explicit_indices();
    let mut warnings = Vec::new();
    if identity.is_none() {
        warnings.push("identity transformation not found".to_string());
    }
    let mut g = SymmetryGroup {
        order,
        identity,
        explicit: explicit.clone(),
        exact_table: Vec::new(),
        table: None,
        element_orders: vec![None; order],
        orders_numeric: false,
        abelian: None,
        name: None,
        warnings: Vec::new(),
    };
    if set.specialization.is_some() {
        warnings.push("parameters were specialized to numbers; composition is not analyzed".to_string());
        g.warnings = warnings;
        return Ok(g);
    }

    // Exact part.
    let model = &set.model;
    for &a in &explicit {
        let mut row = Vec::new();
        for &b in &explicit {
            let (s, p) = compose(model, &set.elements[a], &set.elements[b])?;
            let hit = explicit.iter().copied().find(|&c| {
                let e = &set.elements[c];
                e.states.as_ref() == Some(&s) && e.params.as_ref() == Some(&p)
            });
            if hit.is_none() {
                warnings.push(format!("composition of elements {a} and {b} is not among the found elements; solutions may be missing"));
            }
            row.push(hit);
        }
        g.exact_table.push(row);
    }
    if let Some(id) = identity {
        for (ia, &a) in explicit.iter().enumerate() {
            let has_inverse = (0..explicit.len()).any(|ib| {
                g.exact_table[ia][ib] == Some(id) && g.exact_table[ib][ia] == Some(id)
            });
            if !has_inverse {
                warnings.push(format!("element {a} has no inverse among the explicit elements; solutions may be missing"));
            }
        }
    }

    // Numeric part over all elements.
    let num = Numeric::new(set);
    let pos_explicit = |i: usize| explicit.iter().position(|&e| e == i);
    let mut table = vec![vec![usize::MAX; order]; order];
    let mut closed = num.sigs.iter().all(|s| s.is_some());
    'outer: for a in 0..order {
        for b in 0..order {
            let exact = match (pos_explicit(a), pos_explicit(b)) {
                (Some(ia), Some(ib)) => Some(g.exact_table[ia][ib]),
                _ => None,
            };
            let hit = match exact {
                Some(h) => h,
                None => num.composite(&[a, b]).and_then(|s| num.lookup(&s)),
            };
            match hit {
                Some(c) => table[a][b] = c,
                None => {
                    closed = false;
                    if exact.is_none() {
                        warnings.push(format!("numeric composition of elements {a} and {b} matched no element"));
                    }
                    break 'outer;
                }
            }
        }
    }
    let has_algebraic = explicit.len() < order;
    g.orders_numeric = has_algebraic;
    if closed {
        if let Some(id) = identity {
            g.element_orders = (0..order).map(|i| order_in_table(&table, id, i)).collect();
        }
        let abelian = (0..order).all(|a| (0..order).all(|b| table[a][b] == table[b][a]));
        g.abelian = Some(abelian);
        if g.element_orders.iter().all(|o| o.is_some()) {
            let orders: Vec<usize> = g.element_orders.iter().map(|o| o.unwrap()).collect();
            g.name = catalog_name(order, abelian, &orders);
        }
        g.table = Some(table);
    } else if has_algebraic || !explicit.is_empty() {
        for i in 0..order {
            g.element_orders[i] = samples.first().and_then(|s| orbit_order(set, i, s, 2 * order.max(6)));
        }
    }
    // Algebraic elements: orders must agree across parameter samples.
    for i in 0..order {
        if set.elements[i].is_explicit() {
            continue;
        }
        for s in samples {
            let o = orbit_order(set, i, s, 2 * order.max(6));
            if o != g.element_orders[i] {
                warnings.push(format!("numeric order of element {i} disagrees across parameter samples ({o:?} vs {:?})", g.element_orders[i]));
                break;
            }
        }
    }
    for (i, o) in g.element_orders.iter().enumerate() {
        if let Some(o) = o {
            if order % o != 0 {
                warnings.push(format!("order {o} of element {i} does not divide the group order {order}"));
            }
        }
    }
    g.warnings = warnings;
    Ok(g)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Invariant-factor lists `d_1 | d_2 | … | d_r` with product `n`, all `d_i > 1`.
fn invariant_factors(n: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, prev: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 1 {
            out.push(acc.clone());
            return;
        }
        for d in 2..=rem {
            if rem % d == 0 && (prev == 0 || d % prev == 0) {
                // Later factors are multiples of d, so the rest must be divisible by d.
                let rest = rem / d;
                if rest == 1 || rest % d == 0 {
                    acc.push(d);
                    rec(rest, d, acc, out);
                    acc.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(n, 0, &mut Vec::new(), &mut out);
    if n == 1 {
        out = vec![vec![]];
    }
    out
}

fn abelian_orders(factors: &[usize]) -> Vec<usize> {
    let mut orders = vec![1usize];
    for &d in factors {
        let mut next = Vec::new();
        for &o in &orders {
            for a in 0..d {
                next.push(lcm(o, d / gcd(a, d)));
            }
        }
        orders = next;
    }
    orders.sort_unstable();
    orders
}

fn multiset(spec: &[(usize, usize)]) -> Vec<usize> {
    let mut v: Vec<usize> = spec.iter().flat_map(|&(o, c)| std::iter::repeat(o).take(c)).collect();
    v.sort_unstable();
    v
}

/// Best-effort name from the order statistics: abelian groups in
/// invariant-factor form (`C4xC2`), and the non-abelian groups of order ≤ 12.
pub fn catalog_name(order: usize, abelian: bool, element_orders: &[usize]) -> Option<String> {
    let mut orders = element_orders.to_vec();
    orders.sort_unstable();
    if orders.len() != order {
        return None;
    }
    if abelian {
        for f in invariant_factors(order) {
            if abelian_orders(&f) == orders {
                if f.is_empty() {
                    return Some("C1".into());
                }
                let parts: Vec<String> = f.iter().rev().map(|d| format!("C{d}")).collect();
                return Some(parts.join("x"));
            }
        }
        return None;
    }
    let known: [(&str, Vec<usize>); 7] = [
        ("S3", multiset(&[(1, 1), (2, 3), (3, 2)])),
        ("D4", multiset(&[(1, 1), (2, 5), (4, 2)])),
        ("Q8", multiset(&[(1, 1), (2, 1), (4, 6)])),
        ("D5", multiset(&[(1, 1), (2, 5), (5, 4)])),
        ("A4", multiset(&[(1, 1), (2, 3), (3, 8)])),
        ("D6", multiset(&[(1, 1), (2, 7), (3, 2), (6, 2)])),
        ("Dic3", multiset(&[(1, 1), (2, 1), (3, 2), (4, 6), (6, 2)])),
    ];
    known.into_iter().find(|(_, m)| *m == orders).map(|(n, _)| n.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abelian_names() {
        assert_eq!(catalog_name(1, true, &[1]).as_deref(), Some("C1"));
        assert_eq!(catalog_name(8, true, &[1, 2, 2, 2, 4, 4, 4, 4]).as_deref(), Some("C4xC2"));
        assert_eq!(catalog_name(4, true, &[1, 2, 2, 2]).as_deref(), Some("C2xC2"));
        assert_eq!(catalog_name(6, true, &[1, 2, 3, 3, 6, 6]).as_deref(), Some("C6"));
        assert_eq!(catalog_name(8, true, &[1, 2, 2, 2, 2, 2, 2, 2]).as_deref(), Some("C2xC2xC2"));
    }

    #[test]
    fn nonabelian_names() {
        assert_eq!(catalog_name(6, false, &[1, 2, 2, 2, 3, 3]).as_deref(), Some("S3"));
        assert_eq!(catalog_name(8, false, &[1, 2, 4, 4, 4, 4, 4, 4]).as_deref(), Some("Q8"));
        assert_eq!(catalog_name(8, false, &[1, 2, 2, 2, 2, 2, 4, 4]).as_deref(), Some("D4"));
        assert_eq!(catalog_name(12, false, &[1, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3]).as_deref(), Some("A4"));
        assert_eq!(catalog_name(9, false, &[1; 9]), None);
    }

    #[test]
    fn invariant_factor_counts() {
        // Abelian groups of order 16: 5 of them.
        assert_eq!(invariant_factors(16).len(), 5);
        assert_eq!(invariant_factors(12).len(), 2);
        assert_eq!(abelian_orders(&[2, 4]), vec![1, 2, 2, 2, 4, 4, 4, 4]);
    }
}
