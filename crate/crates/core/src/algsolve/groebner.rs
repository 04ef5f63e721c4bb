//! Buchberger's algorithm with sugar selection and the Gebauer–Möller
//! pair criteria, fraction-free over `ℚ[θ]`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cas::{gcd, MPoly, RatFunc};

use super::apoly::{coprime, lcm_mono, mono_degree, mono_divides, mono_quot, APoly, Ring};
use super::AlgError;

/// Resource ceilings for one basis computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_steps: u64,
    pub max_time: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_steps: 200_000, max_time: Duration::from_secs(1800) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GbStats {
    pub pairs_reduced: u64,
    pub zero_reductions: u64,
    pub millis: u64,
}

/// Reduced Gröbner basis; generators are primitive (unit content) rather
/// than monic so coefficients stay polynomial in θ.
#[derive(Debug, Clone)]
pub struct GroebnerBasis {
    pub ring: Ring,
    pub gens: Vec<APoly>,
    pub reduced: bool,
    pub stats: GbStats,
}

impl GroebnerBasis {
    pub fn is_unit(&self) -> bool {
        self.gens.len() == 1 && self.gens[0].is_unit()
    }

    pub fn leading_monomials(&self) -> Vec<Vec<u16>> {
        self.gens.iter().map(|g| g.lm().clone()).collect()
    }

    pub fn normal_form(&self, p: &APoly) -> APoly {
        normal_form(&self.ring, p, &self.gens.iter().collect::<Vec<_>>(), None).0
    }

    pub fn contains(&self, p: &APoly) -> bool {
        self.normal_form(p).is_zero()
    }
}

/// Multipliers `(a', b')` with `b'·a_lead = a'·b_lead` up to a common factor.
fn cancel(a: &MPoly, b: &MPoly) -> (MPoly, MPoly) {
    if b.is_constant() {
        let inv = b.constant_value().expect("constant").recip();
        return (a.scale(&inv), MPoly::one(a.nvars()));
    }
    if let Some(q) = a.div_exact(b) {
        return (q, MPoly::one(a.nvars()));
    }
    let g = gcd(a, b);
    if g.is_constant() {
        return (a.clone(), b.clone());
    }
    (a.div_exact(&g).expect("gcd divides"), b.div_exact(&g).expect("gcd divides"))
}

/// Full fraction-free reduction. When `track` is supplied, it is multiplied
/// by the accumulated scaling so that `track·p ≡ result` modulo the basis.
pub fn normal_form(ring: &Ring, p: &APoly, basis: &[&APoly], mut track: Option<&mut RatFunc>) -> (APoly, bool) {
    let mut p = p.clone();
    let mut start = 0usize;
    let mut changed = false;
    let mut steps = 0u32;
    loop {
        let mut hit = None;
        for i in start..p.terms.len() {
            let m = &p.terms[i].0;
            if let Some(g) = basis.iter().find(|g| mono_divides(g.lm(), m)) {
                hit = Some((i, *g));
                break;
            }
        }
        let Some((i, g)) = hit else { break };
        let (m, a) = (p.terms[i].0.clone(), p.terms[i].1.clone());
        let (a2, b2) = cancel(&a, g.lc());
        let q = mono_quot(&m, g.lm());
        let scaled = ring.scale(&p, &b2);
        p = ring.sub(&scaled, &ring.mul_term(g, &q, &a2));
        if let Some(t) = track.as_deref_mut() {
            if !b2.is_one() {
                *t = t.mul(&RatFunc::from_poly(b2.clone()));
            }
        }
        changed = true;
        start = i;
        steps += 1;
        if ring.k > 0 && !b2.is_constant() && steps % 8 == 0 {
            let (np, _) = primitive_tracked(ring, &p, track.as_deref_mut());
            p = np;
        }
    }
    if changed {
        let (np, _) = primitive_tracked(ring, &p, track.as_deref_mut());
        p = np;
    }
    (p, changed)
}

fn primitive_tracked(ring: &Ring, p: &APoly, track: Option<&mut RatFunc>) -> (APoly, ()) {
    if p.is_zero() {
        return (p.clone(), ());
    }
    let q = ring.primitive(p);
    if let Some(t) = track {
        // q = p / s with s = p.lc / q.lc.
        let s = RatFunc::from_poly(p.lc().clone())
            .div(&RatFunc::from_poly(q.lc().clone()))
            .expect("nonzero");
        *t = t.div(&s).expect("nonzero");
    }
    (q, ())
}

struct Pair {
    i: usize,
    j: usize,
    lcm: Vec<u16>,
    sugar: u32,
}

struct State<'r> {
    ring: &'r Ring,
    polys: Vec<APoly>,
    sugar: Vec<u32>,
    active: Vec<bool>,
    pairs: Vec<Pair>,
}

impl<'r> State<'r> {
    fn basis(&self) -> Vec<&APoly> {
        self.polys.iter().zip(&self.active).filter(|(_, a)| **a).map(|(p, _)| p).collect()
    }

    /// Gebauer–Möller update with a new polynomial `h`.
    fn update(&mut self, h: APoly, sugar_h: u32) {
        let hi = self.polys.len();
        let lm_h = h.lm().clone();
        let mut cands: Vec<Pair> = Vec::new();
        for (g, _) in self.polys.iter().enumerate().filter(|(i, _)| self.active[*i]) {
            let lm_g = self.polys[g].lm();
            let lcm = lcm_mono(lm_g, &lm_h);
            let sugar = (self.sugar[g] + mono_degree(&lcm) - mono_degree(lm_g))
                .max(sugar_h + mono_degree(&lcm) - mono_degree(&lm_h));
            cands.push(Pair { i: g, j: hi, lcm, sugar });
        }
        // Chain criterion among the new pairs: drop (g, h) if another new pair's lcm
        // properly divides it; keep coprime pairs for the product check below.
        let mut keep: Vec<Pair> = Vec::new();
        for (ci, c) in cands.iter().enumerate() {
            let lm_g = self.polys[c.i].lm();
            if coprime(lm_g, &lm_h) {
                keep.push(Pair { i: c.i, j: c.j, lcm: c.lcm.clone(), sugar: c.sugar });
                continue;
            }
            let dominated = cands.iter().enumerate().any(|(di, d)| {
                di != ci && mono_divides(&d.lcm, &c.lcm) && (d.lcm != c.lcm || di < ci)
            });
            if !dominated {
                keep.push(Pair { i: c.i, j: c.j, lcm: c.lcm.clone(), sugar: c.sugar });
            }
        }
        // Product criterion.
        keep.retain(|p| !coprime(self.polys[p.i].lm(), &lm_h));
        // Old pairs made redundant by h.
        let polys = &self.polys;
        self.pairs.retain(|p| {
            if !mono_divides(&lm_h, &p.lcm) {
                return true;
            }
            let li = lcm_mono(polys[p.i].lm(), &lm_h);
            let lj = lcm_mono(polys[p.j].lm(), &lm_h);
            li == p.lcm || lj == p.lcm
        });
        self.pairs.extend(keep);
        for g in 0..self.polys.len() {
            if self.active[g] && mono_divides(&lm_h, self.polys[g].lm()) {
                self.active[g] = false;
            }
        }
        self.polys.push(h);
        self.sugar.push(sugar_h);
        self.active.push(true);
    }

    fn select(&mut self) -> Option<Pair> {
        if self.pairs.is_empty() {
            return None;
        }
        let ring = self.ring;
        let mut best = 0;
        for idx in 1..self.pairs.len() {
            let (a, b) = (&self.pairs[idx], &self.pairs[best]);
            let better = a.sugar < b.sugar
                || (a.sugar == b.sugar && ring.order.cmp(&a.lcm, &b.lcm) == std::cmp::Ordering::Less)
                || (a.sugar == b.sugar && a.lcm == b.lcm && (a.j, a.i) < (b.j, b.i));
            if better {
                best = idx;
            }
        }
        Some(self.pairs.swap_remove(best))
    }
}

pub fn spoly(ring: &Ring, f: &APoly, g: &APoly) -> APoly {
    let l = lcm_mono(f.lm(), g.lm());
    let (a, b) = cancel(f.lc(), g.lc());
    // b·(l/lm f)·f − a·(l/lm g)·g cancels the leading terms.
    let t1 = ring.mul_term(f, &mono_quot(&l, f.lm()), &b);
    let t2 = ring.mul_term(g, &mono_quot(&l, g.lm()), &a);
    ring.sub(&t1, &t2)
}

/// Reduced Gröbner basis of the ideal generated by `input`.
pub fn groebner(ring: &Ring, input: &[APoly], limits: &Limits) -> Result<GroebnerBasis, AlgError> {
    match buchberger(ring, input, limits, &mut |_| None)? {
        Outcome::Done(gb) => Ok(gb),
        Outcome::Split { .. } => unreachable!("hook never splits"),
    }
}

pub(crate) enum Outcome {
    Done(GroebnerBasis),
    /// The hook found a factorization of a new basis element.
    Split { basis: Vec<APoly>, factors: Vec<APoly> },
}

/// Buchberger loop; `hook` sees every new basis element and may stop the
/// computation by returning its factors.
pub(crate) fn buchberger(
    ring: &Ring,
    input: &[APoly],
    limits: &Limits,
    hook: &mut dyn FnMut(&APoly) -> Option<Vec<APoly>>,
) -> Result<Outcome, AlgError> {
    let t0 = Instant::now();
    let mut st = State { ring, polys: Vec::new(), sugar: Vec::new(), active: Vec::new(), pairs: Vec::new() };
    let mut stats = GbStats::default();
    let mut sorted: Vec<APoly> = input.iter().filter(|p| !p.is_zero()).map(|p| ring.resort(p)).collect();
    sorted.sort_by(|a, b| ring.order.cmp(a.lm(), b.lm()));
    let mut pending: Vec<(APoly, u32)> = Vec::new();
    for f in sorted {
        let s = f.total_degree();
        let (h, _) = normal_form(ring, &ring.primitive(&f), &st.basis(), None);
        if h.is_zero() {
            continue;
        }
        if h.is_unit() {
            return Ok(Outcome::Done(unit_basis(ring, stats, t0)));
        }
        st.update(h.clone(), s);
        pending.push((h, s));
    }
    for (h, _) in &pending {
        if let Some(factors) = hook(h) {
            return Ok(Outcome::Split { basis: st.polys.clone(), factors });
        }
    }
    while let Some(pair) = st.select() {
        stats.pairs_reduced += 1;
        if stats.pairs_reduced > limits.max_steps {
            return Err(AlgError::Inconclusive(format!("Gröbner step limit {} exceeded", limits.max_steps)));
        }
        if t0.elapsed() > limits.max_time {
            return Err(AlgError::Inconclusive(format!("Gröbner time limit {:?} exceeded", limits.max_time)));
        }
        let s = spoly(ring, &st.polys[pair.i], &st.polys[pair.j]);
        if s.is_zero() {
            stats.zero_reductions += 1;
            continue;
        }
        let (h, _) = normal_form(ring, &s, &st.basis(), None);
        if h.is_zero() {
            stats.zero_reductions += 1;
            continue;
        }
        let h = ring.primitive(&h);
        if h.is_unit() {
            return Ok(Outcome::Done(unit_basis(ring, stats, t0)));
        }
        if let Some(factors) = hook(&h) {
            // Inactive elements are still needed as generators.
            let mut basis = st.polys.clone();
            basis.push(h);
            return Ok(Outcome::Split { basis, factors });
        }
        st.update(h, pair.sugar);
    }
    let gens = interreduce(ring, st.basis().into_iter().cloned().collect());
    stats.millis = t0.elapsed().as_millis() as u64;
    Ok(Outcome::Done(GroebnerBasis { ring: ring.clone(), gens, reduced: true, stats }))
}

fn unit_basis(ring: &Ring, mut stats: GbStats, t0: Instant) -> GroebnerBasis {
    stats.millis = t0.elapsed().as_millis() as u64;
    GroebnerBasis { ring: ring.clone(), gens: vec![ring.one()], reduced: true, stats }
}

/// Minimal, fully reduced, sorted by descending leading monomial.
pub fn interreduce(ring: &Ring, mut gens: Vec<APoly>) -> Vec<APoly> {
    gens.retain(|g| !g.is_zero());
    gens.sort_by(|a, b| ring.order.cmp(a.lm(), b.lm()));
    let mut minimal: Vec<APoly> = Vec::new();
    for g in gens {
        if minimal.iter().any(|h| mono_divides(h.lm(), g.lm())) {
            continue;
        }
        minimal.retain(|h| !mono_divides(g.lm(), h.lm()));
        minimal.push(g);
    }
    let mut out = Vec::with_capacity(minimal.len());
    for i in 0..minimal.len() {
        let others: Vec<&APoly> = minimal.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p).collect();
        let (r, _) = normal_form(ring, &minimal[i], &others, None);
        out.push(ring.primitive(&r));
    }
    out.sort_by(|a, b| ring.order.cmp(b.lm(), a.lm()));
    out
}

/// Every S-polynomial of the basis reduces to zero.
pub fn check_buchberger(gb: &GroebnerBasis) -> bool {
    let basis: Vec<&APoly> = gb.gens.iter().collect();
    for i in 0..gb.gens.len() {
        for j in i + 1..gb.gens.len() {
            let s = spoly(&gb.ring, &gb.gens[i], &gb.gens[j]);
            if !normal_form(&gb.ring, &s, &basis, None).0.is_zero() {
                return false;
            }
        }
    }
    true
}

/// Every input reduces to zero modulo the basis.
pub fn check_membership(gb: &GroebnerBasis, input: &[APoly]) -> bool {
    input.iter().all(|p| gb.contains(&gb.ring.resort(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algsolve::testutil::{names, system};
    use crate::algsolve::TermOrder;

    fn fmt_all(ring: &Ring, gb: &GroebnerBasis, th: &[&str], un: &[&str]) -> Vec<String> {
        gb.gens.iter().map(|g| ring.fmt(g, &names(th), &names(un))).collect()
    }

    #[test]
    fn redundant_generator_collapses() {
        let (ring, f) = system(&[], &["x"], &["x^2 - 1", "x - 1"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        assert_eq!(fmt_all(&ring, &gb, &[], &["x"]), vec!["x - 1"]);
    }

    #[test]
    fn triangular_linear_system() {
        let (ring, f) = system(&[], &["c", "d"], &["c - 1", "c*d - 2"], TermOrder::Lex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        let s = fmt_all(&ring, &gb, &[], &["c", "d"]);
        assert_eq!(s, vec!["c - 1", "d - 2"]);
        assert!(check_buchberger(&gb));
        assert!(check_membership(&gb, &f));
    }

    #[test]
    fn parametric_quadratic_is_already_a_basis() {
        let (ring, f) = system(&["k"], &["s"], &["s^2 + k^2"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        assert_eq!(gb.gens.len(), 1);
        assert_eq!(gb.gens[0].total_degree(), 2);
    }

    #[test]
    fn inconsistent_system_gives_unit() {
        let (ring, f) = system(&["a"], &["x", "y"], &["x*y - a", "x", "y - 1"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        assert!(gb.is_unit());
    }

    #[test]
    fn parametric_coefficients_are_cleared() {
        // a*x - b = 0, b*y - a = 0 over Q(a, b): x = b/a, y = a/b.
        let (ring, f) = system(&["a", "b"], &["x", "y"], &["a*x - b", "b*y - a", "x*y - 1"], TermOrder::Lex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        assert_eq!(fmt_all(&ring, &gb, &["a", "b"], &["x", "y"]), vec!["a*x - b", "-a + b*y"]);
        assert!(check_buchberger(&gb));
    }

    #[test]
    fn cyclic3_certificates() {
        let (ring, f) = system(
            &[],
            &["x", "y", "z"],
            &["x + y + z", "x*y + y*z + z*x", "x*y*z - 1"],
            TermOrder::Degrevlex,
        );
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        assert!(check_buchberger(&gb));
        assert!(check_membership(&gb, &f));
        let lex = Ring::new(3, 0, TermOrder::Lex);
        let gl = groebner(&lex, &f, &Limits::default()).unwrap();
        // Lex basis of cyclic-3 ends in z^3 - 1.
        let last = gl.gens.last().unwrap();
        assert_eq!(lex.fmt(last, &[], &names(&["x", "y", "z"])), "z^3 - 1");
    }

    #[test]
    fn step_limit_is_inconclusive() {
        let (ring, f) = system(&[], &["x", "y"], &["x^2 - y", "x*y - 1"], TermOrder::Degrevlex);
        let lim = Limits { max_steps: 0, max_time: Duration::from_secs(10) };
        assert!(matches!(groebner(&ring, &f, &lim), Err(AlgError::Inconclusive(_))));
    }

    #[test]
    fn tracked_reduction_multiplier() {
        let (ring, f) = system(&["a"], &["x"], &["a*x^2 + 1", "a*x - 1"], TermOrder::Lex);
        let mut s = RatFunc::one(1);
        let (r, _) = normal_form(&ring, &f[0], &[&f[1]], Some(&mut s));
        // a*x^2 + 1 ≡ 1/a + 1 mod (a*x - 1); r = s*(1/a + 1).
        assert!(r.is_unit());
        let val = RatFunc::from_poly(r.lc().clone());
        let expect = s.mul(&RatFunc::from_poly(MPoly::var(1, 0).add(&MPoly::one(1))).div(&RatFunc::var(1, 0)).unwrap());
        assert_eq!(val, expect);
    }
}
