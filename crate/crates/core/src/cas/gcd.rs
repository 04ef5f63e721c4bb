//! Multivariate gcd over the rationals.
//!
//! Recursive primitive-PRS with content splitting. A univariate image test
//! short-circuits the (very common) coprime case.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{MPoly, Rational};

/// Monic gcd of two polynomials; `gcd(p, 0)` is `p` made monic.
pub fn gcd(a: &MPoly, b: &MPoly) -> MPoly {
    debug_assert_eq!(a.nvars(), b.nvars(), "registry mismatch");
    gcd_inner(a, b).monic()
}

/// gcd of a list of polynomials, stopping early once it becomes constant.
pub fn gcd_many<'a>(polys: impl IntoIterator<Item = &'a MPoly>, nvars: usize) -> MPoly {
    let mut g = MPoly::zero(nvars);
    for p in polys {
        g = gcd_inner(&g, p);
        if g.is_constant() && !g.is_zero() {
            return MPoly::one(nvars);
        }
    }
    g.monic()
}

fn gcd_inner(a: &MPoly, b: &MPoly) -> MPoly {
    let n = a.nvars();
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.is_constant() || b.is_constant() {
        return MPoly::one(n);
    }
    if a == b {
        return a.clone();
    }
    if a.is_monomial() {
        return monomial_gcd(a, b);
    }
    if b.is_monomial() {
        return monomial_gcd(b, a);
    }
    // Factor out the monomial content first; it is cheap and common.
    let ma = monomial_content(a);
    let mb = monomial_content(b);
    let mono = min_exps(&ma, &mb);
    let (a, b) = if ma.iter().any(|&k| k > 0) || mb.iter().any(|&k| k > 0) {
        (
            a.div_exact(&MPoly::monomial(ma, Rational::one())).unwrap(),
            b.div_exact(&MPoly::monomial(mb, Rational::one())).unwrap(),
        )
    } else {
        (a.clone(), b.clone())
    };
    let mono_poly = MPoly::monomial(mono, Rational::one());
    let g = gcd_no_monomial(&a, &b);
    g.mul(&mono_poly)
}

fn gcd_no_monomial(a: &MPoly, b: &MPoly) -> MPoly {
    let n = a.nvars();
    if a.is_constant() || b.is_constant() {
        return MPoly::one(n);
    }
    let va = a.vars();
    let vb = b.vars();
    // A variable present in only one argument cannot occur in the gcd.
    if let Some(&v) = va.iter().find(|v| !vb.contains(v)) {
        let ca = content_wrt(a, v);
        return gcd_inner(&ca, b);
    }
    if let Some(&v) = vb.iter().find(|v| !va.contains(v)) {
        let cb = content_wrt(b, v);
        return gcd_inner(a, &cb);
    }
    // Same variable set; pick the variable of least combined degree as main variable.
    let v = *va
        .iter()
        .min_by_key(|&&v| (a.degree_in(v) + b.degree_in(v), v))
        .unwrap();
    let ca = content_wrt(a, v);
    let cb = content_wrt(b, v);
    let c = gcd_inner(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let g = primitive_gcd(&pa, &pb, v);
    c.mul(&g)
}

fn monomial_content(p: &MPoly) -> Vec<u16> {
    let n = p.nvars();
    let mut m = vec![u16::MAX; n];
    for (e, _) in p.terms() {
        for (i, &k) in e.iter().enumerate() {
            m[i] = m[i].min(k);
        }
    }
    if p.is_zero() {
        return vec![0; n];
    }
    m
}

fn min_exps(a: &[u16], b: &[u16]) -> Vec<u16> {
    a.iter().zip(b).map(|(x, y)| *x.min(y)).collect()
}

fn monomial_gcd(m: &MPoly, p: &MPoly) -> MPoly {
    let e = &m.terms()[0].0;
    let pc = monomial_content(p);
    MPoly::monomial(min_exps(e, &pc), Rational::one())
}

/// gcd of the coefficients of `p` viewed as a polynomial in `v`.
pub fn content_wrt(p: &MPoly, v: usize) -> MPoly {
    let mut coeffs = p.to_univariate(v);
    coeffs.retain(|c| !c.is_zero());
    coeffs.sort_by_key(|c| c.num_terms());
    let n = p.nvars();
    let mut g = MPoly::zero(n);
    for c in &coeffs {
        g = gcd_inner(&g, c);
        if g.is_constant() {
            return MPoly::one(n);
        }
    }
    g.monic()
}

pub fn primitive_part_wrt(p: &MPoly, v: usize) -> MPoly {
    if p.is_zero() {
        return p.clone();
    }
    let c = content_wrt(p, v);
    p.div_exact(&c).expect("content divides")
}

/// Pseudo-remainder of `a` by `b` with respect to `v` (up to a factor that is
/// a power of the leading coefficient of `b`).
pub fn pseudo_rem(a: &MPoly, b: &MPoly, v: usize) -> MPoly {
    let n = a.nvars();
    let bu = b.to_univariate(v);
    let db = bu.len() - 1;
    let lcb = bu[db].clone();
    let mut r = a.to_univariate(v);
    while r.len() > db && !r.is_empty() {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        if lr.is_zero() {
            r.pop();
            continue;
        }
        let shift = dr - db;
        let mut next: Vec<MPoly> = r.iter().map(|c| c.mul(&lcb)).collect();
        for (i, bc) in bu.iter().enumerate() {
            next[i + shift] = next[i + shift].sub(&lr.mul(bc));
        }
        next.pop();
        while matches!(next.last(), Some(c) if c.is_zero()) {
            next.pop();
        }
        r = next;
    }
    MPoly::from_univariate(v, &r, n)
}

fn primitive_gcd(a: &MPoly, b: &MPoly, v: usize) -> MPoly {
    let n = a.nvars();
    let (mut p, mut q) = if a.degree_in(v) >= b.degree_in(v) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    if q.degree_in(v) == 0 {
        return MPoly::one(n);
    }
    if let Some(_) = p.div_exact(&q) {
        return q;
    }
    if image_coprime(&p, &q, v) {
        return MPoly::one(n);
    }
    if let Some(g) = heuristic_gcd(&p, &q) {
        return g;
    }
    loop {
        let r = pseudo_rem(&p, &q, v);
        if r.is_zero() {
            return q;
        }
        if r.degree_in(v) == 0 {
            return MPoly::one(n);
        }
        p = q;
        q = primitive_part_wrt(&r, v).primitive_integer();
    }
}

/// Bit budget for the evaluation images of [`heuristic_gcd`].
const HEU_BITS: u64 = 40_000;

/// Heuristic gcd by evaluation at a large integer and ξ-adic reconstruction.
/// A candidate is only returned after it divides both inputs, which (with ξ
/// above twice the smaller coefficient norm) makes it the gcd. `None` means
/// the heuristic gave up.
fn heuristic_gcd(a: &MPoly, b: &MPoly) -> Option<MPoly> {
    let (ca, pa) = integer_split(a);
    let (cb, pb) = integer_split(b);
    let g = heu_primitive(&pa, &pb, 0)?;
    Some(g.scale(&Rational::from_bigint(ca.gcd(&cb))))
}

/// Integer content and the integer primitive part.
fn integer_split(p: &MPoly) -> (BigInt, MPoly) {
    let pp = p.primitive_integer();
    let c = p.terms()[0].1.clone() / pp.terms()[0].1.clone();
    (c.abs().numer().clone(), pp)
}

fn max_norm(p: &MPoly) -> BigInt {
    p.terms().iter().map(|(_, c)| c.numer().abs()).max().unwrap_or_default()
}

/// gcd of two integer-primitive polynomials, itself integer-primitive.
fn heu_primitive(a: &MPoly, b: &MPoly, depth: usize) -> Option<MPoly> {
    let n = a.nvars();
    if a.is_constant() || b.is_constant() {
        return Some(MPoly::one(n));
    }
    let mut vars = a.vars();
    for v in b.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    // Image size grows with the product of degrees over the evaluated variables.
    let spread: u64 = vars.iter().map(|&v| 1 + a.degree_in(v).min(b.degree_in(v)) as u64).product();
    let x = vars[0];
    let mut xi: BigInt = 2 * max_norm(a).min(max_norm(b)) + 29;
    for _ in 0..6 {
        if xi.bits().saturating_mul(spread) > HEU_BITS || depth > 8 {
            return None;
        }
        let at = [(x, Rational::from_bigint(xi.clone()))];
        let (ea, eb) = (a.partial_eval(&at), b.partial_eval(&at));
        if !ea.is_zero() && !eb.is_zero() {
            let (ca, pa) = integer_split(&ea);
            let (cb, pb) = integer_split(&eb);
            let gamma = heu_primitive(&pa, &pb, depth + 1)?.scale(&Rational::from_bigint(ca.gcd(&cb)));
            let g = xi_adic(&gamma, x, &xi).primitive_integer();
            if a.div_exact(&g).is_some() && b.div_exact(&g).is_some() {
                return Some(g);
            }
        }
        xi = xi * 73_794u32 / 27_011u32;
    }
    None
}

/// Rebuilds a polynomial in `x` from its image at `x = xi` using symmetric
/// residues of every integer coefficient.
fn xi_adic(gamma: &MPoly, x: usize, xi: &BigInt) -> MPoly {
    let n = gamma.nvars();
    let half = xi / 2;
    let mut rest = gamma.clone();
    let mut out = MPoly::zero(n);
    let mut k: u16 = 0;
    while !rest.is_zero() {
        let digit: Vec<(Vec<u16>, Rational)> = rest
            .terms()
            .iter()
            .filter_map(|(e, c)| {
                let mut r = c.numer().mod_floor(xi);
                if r > half {
                    r -= xi;
                }
                (!r.is_zero()).then(|| (e.clone(), Rational::from_bigint(r)))
            })
            .collect();
        let digit = MPoly::from_terms(n, digit);
        rest = rest.sub(&digit).scale(&Rational::from_big(BigInt::from(1), xi.clone()));
        out = out.add(&digit.mul_term(&mono_x(n, x, k), &Rational::one()));
        k += 1;
    }
    out
}

fn mono_x(n: usize, x: usize, k: u16) -> Vec<u16> {
    let mut e = vec![0; n];
    e[x] = k;
    e
}

const PRIME: u64 = 2_147_483_629;

fn mod_p(c: &Rational) -> Option<u64> {
    use num_traits::ToPrimitive;
    let p = BigInt::from(PRIME);
    let rem = |x: &BigInt| ((x % &p + &p) % &p).to_u64().expect("residue fits");
    let d = rem(c.denom());
    (d != 0).then(|| rem(c.numer()) * inv_p(d) % PRIME)
}

fn pow_p(mut b: u64, mut e: u64) -> u64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    acc
}

fn inv_p(a: u64) -> u64 {
    pow_p(a, PRIME - 2)
}

/// Specializes every variable except `v` to small integers, reduces modulo a
/// prime, and checks whether the univariate images are coprime. A `true`
/// answer proves coprimality: the leading coefficients survive both steps.
fn image_coprime(a: &MPoly, b: &MPoly, v: usize) -> bool {
    let n = a.nvars();
    let point: Vec<u64> = (0..n).map(|i| ((i as u64 * 7919 + 104_729) % 89) + 3).collect();
    let (Some(ua), Some(ub)) = (image_mod_p(a, v, &point), image_mod_p(b, v, &point)) else {
        return false;
    };
    if ua.len() != a.degree_in(v) as usize + 1 || ub.len() != b.degree_in(v) as usize + 1 {
        return false;
    }
    univariate_gcd_degree(ua, ub) == 0
}

/// Dense image of `p` in `F_p[v]`, trimmed; `None` if a denominator vanishes.
fn image_mod_p(p: &MPoly, v: usize, point: &[u64]) -> Option<Vec<u64>> {
    let mut out = vec![0u64; p.degree_in(v) as usize + 1];
    for (e, c) in p.terms() {
        let mut t = mod_p(c)?;
        for (i, &k) in e.iter().enumerate() {
            if i != v && k > 0 {
                t = t * pow_p(point[i], k as u64) % PRIME;
            }
        }
        let slot = &mut out[e[v] as usize];
        *slot = (*slot + t) % PRIME;
    }
    trim(&mut out);
    Some(out)
}

fn trim(p: &mut Vec<u64>) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

/// Degree of the gcd of two dense univariate polynomials over `F_p`.
fn univariate_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>) -> usize {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = urem(&a, &b);
        a = b;
        b = r;
    }
    a.len().saturating_sub(1)
}

fn urem(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv = inv_p(b[db]);
    while r.len() > db {
        let dr = r.len() - 1;
        let q = r[dr] * inv % PRIME;
        for i in 0..=db {
            let t = q * b[i] % PRIME;
            r[dr - db + i] = (r[dr - db + i] + PRIME - t) % PRIME;
        }
        r.pop();
        trim(&mut r);
    }
    r
}
