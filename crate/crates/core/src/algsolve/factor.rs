//! Multivariate factorization over ℚ.
//!
//! Squarefree decomposition, a univariate image at a random point factored
//! through numeric roots with exact recombination, then Hensel lifting one
//! variable at a time with the leading coefficient imposed on every factor.
//! Every factor returned has been confirmed by exact division.

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cas::{content_wrt, gcd, MPoly, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub unit: Rational,
    /// Primitive integer factors with positive leading coefficient.
    pub factors: Vec<(MPoly, u32)>,
}

impl Factorization {
    pub fn expand(&self, nvars: usize) -> MPoly {
        let mut acc = MPoly::constant(nvars, self.unit.clone());
        for (f, e) in &self.factors {
            acc = acc.mul(&f.pow(*e));
        }
        acc
    }
}

pub fn factor(p: &MPoly) -> Factorization {
    assert!(!p.is_zero(), "factoring the zero polynomial");
    let n = p.nvars();
    let mut q = p.primitive_integer();
    let mut out: Vec<(MPoly, u32)> = Vec::new();
    for v in 0..n {
        let m = q.terms().iter().map(|(e, _)| e[v]).min().unwrap_or(0);
        if m > 0 {
            let mut e = vec![0u16; n];
            e[v] = m;
            q = q.div_exact(&MPoly::monomial(e, Rational::one())).expect("monomial divides");
            out.push((MPoly::var(n, v), m as u32));
        }
    }
    factor_rec(&q, 1, &mut out);
    let mut merged: Vec<(MPoly, u32)> = Vec::new();
    for (f, e) in out {
        let f = f.primitive_integer();
        if f.is_constant() {
            continue;
        }
        match merged.iter_mut().find(|(g, _)| *g == f) {
            Some(slot) => slot.1 += e,
            None => merged.push((f, e)),
        }
    }
    // Normalize the unit so the product reproduces p exactly.
    let mut fz = Factorization { unit: Rational::one(), factors: merged };
    let prod = fz.expand(n);
    fz.unit = &p.lc() * &prod.lc().recip();
    fz.factors.sort_by(|a, b| (a.0.total_degree(), a.0.num_terms()).cmp(&(b.0.total_degree(), b.0.num_terms())).then_with(|| b.0.terms().cmp(a.0.terms())));
    fz
}

fn derivative_squarefree(f: &MPoly, t: usize) -> Vec<(MPoly, u32)> {
    // Yun's algorithm with respect to t.
    let mut out = Vec::new();
    let df = f.diff(t);
    let a0 = gcd(f, &df);
    let mut b = f.div_exact(&a0).expect("gcd divides");
    let mut c = df.div_exact(&a0).expect("gcd divides");
    let mut d = c.sub(&b.diff(t));
    let mut i = 1;
    while !b.is_constant() {
        let a = gcd(&b, &d);
        if !a.is_constant() {
            out.push((a.clone(), i));
        }
        b = b.div_exact(&a).expect("gcd divides");
        c = d.div_exact(&a).expect("gcd divides");
        d = c.sub(&b.diff(t));
        i += 1;
    }
    out
}

fn factor_rec(q: &MPoly, mult: u32, out: &mut Vec<(MPoly, u32)>) {
    if q.is_constant() {
        return;
    }
    let vars = q.vars();
    let t = *vars.iter().min_by_key(|&&v| (q.degree_in(v), q.to_univariate(v).last().unwrap().num_terms(), v)).unwrap();
    let c = content_wrt(q, t);
    let q = if !c.is_constant() {
        factor_rec(&c, mult, out);
        q.div_exact(&c).expect("content divides")
    } else {
        q.clone()
    };
    for (piece, e) in derivative_squarefree(&q, t) {
        for f in factor_sqf(&piece, t) {
            out.push((f, mult * e));
        }
    }
}

/// Irreducible factors of a polynomial that is squarefree and primitive in `t`.
fn factor_sqf(a: &MPoly, t: usize) -> Vec<MPoly> {
    let deg = a.degree_in(t);
    if deg <= 1 {
        return vec![a.clone()];
    }
    let others: Vec<usize> = a.vars().into_iter().filter(|&v| v != t).collect();
    if others.is_empty() {
        return univariate_factor(a, t);
    }
    let lc = a.to_univariate(t).pop().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5f17 + a.num_terms() as u64);
    let mut best: Option<(Vec<Rational>, Vec<MPoly>)> = None;
    let mut tries = 0;
    let mut found = 0;
    while found < 3 && tries < 60 {
        tries += 1;
        let span = 3 + tries as i64 / 4;
        let pt: Vec<Rational> = others.iter().map(|_| Rational::from_int(rng.gen_range(-span..=span))).collect();
        let vals: Vec<(usize, Rational)> = others.iter().cloned().zip(pt.iter().cloned()).collect();
        if lc.partial_eval(&vals).is_zero() {
            continue;
        }
        let img = a.partial_eval(&vals);
        if !gcd(&img, &img.diff(t)).is_constant() {
            continue;
        }
        found += 1;
        let fs = univariate_factor(&img.primitive_integer(), t);
        if fs.len() == 1 {
            return vec![a.clone()];
        }
        if best.as_ref().map_or(true, |(_, b)| fs.len() < b.len()) {
            best = Some((pt, fs));
        }
    }
    let Some((pt, us)) = best else {
        return vec![a.clone()];
    };
    if let Some(fs) = hensel_lift(a, t, &others, &pt, &us) {
        return fs;
    }
    // Spurious image factors: look for a true two-way split.
    let r = us.len();
    for size in 1..=r / 2 {
        for subset in subsets(r, size) {
            if size * 2 == r && !subset.contains(&0) {
                continue;
            }
            let g0 = subset.iter().fold(MPoly::one(a.nvars()), |acc, &i| acc.mul(&us[i]));
            let h0 = (0..r).filter(|i| !subset.contains(i)).fold(MPoly::one(a.nvars()), |acc, i| acc.mul(&us[i]));
            if let Some(pair) = hensel_lift(a, t, &others, &pt, &[g0, h0]) {
                let mut out = factor_sqf(&pair[0], t);
                out.extend(factor_sqf(&pair[1], t));
                return out;
            }
        }
    }
    vec![a.clone()]
}

fn subsets(r: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, r: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..r {
            cur.push(i);
            go(i + 1, r, size, cur, out);
            cur.pop();
        }
    }
    go(0, r, size, &mut cur, &mut out);
    out
}

fn shift(p: &MPoly, vars: &[usize], pt: &[Rational], sign: i64) -> MPoly {
    let n = p.nvars();
    let images: Vec<Option<MPoly>> = (0..n)
        .map(|v| match vars.iter().position(|&w| w == v) {
            Some(i) => Some(MPoly::var(n, v).add(&MPoly::constant(n, pt[i].clone() * Rational::from_int(sign)))),
            None => Some(MPoly::var(n, v)),
        })
        .collect();
    p.compose(&images, n)
}

fn set_lc(u: &MPoly, t: usize, lc: &MPoly) -> MPoly {
    let mut cs = u.to_univariate(t);
    *cs.last_mut().unwrap() = lc.clone();
    MPoly::from_univariate(t, &cs, u.nvars())
}

fn product(ps: &[MPoly], n: usize) -> MPoly {
    ps.iter().fold(MPoly::one(n), |acc, p| acc.mul(p))
}

fn coeff_of_power(p: &MPoly, v: usize, m: usize) -> MPoly {
    let cs = p.to_univariate(v);
    cs.get(m).cloned().unwrap_or_else(|| MPoly::zero(p.nvars()))
}

/// Lifts univariate factors `us` of `a(pt, t)` to factors of `a`.
fn hensel_lift(a: &MPoly, t: usize, vars: &[usize], pt: &[Rational], us: &[MPoly]) -> Option<Vec<MPoly>> {
    let n = a.nvars();
    let r = us.len();
    let b = shift(a, vars, pt, 1);
    let l = b.to_univariate(t).pop().unwrap();
    let bp = b.mul(&l.pow(r as u32 - 1));
    let zeros: Vec<(usize, Rational)> = vars.iter().map(|&v| (v, Rational::zero())).collect();
    let l0 = l.partial_eval(&zeros).constant_value()?;
    let mut u: Vec<MPoly> = us.iter().map(|f| f.scale(&(&l0 * &f.lc().recip()))).collect();
    let bound = vars.iter().map(|&v| bp.degree_in(v)).max().unwrap_or(0) as usize;
    for j in 0..vars.len() {
        let x = vars[j];
        let later: Vec<(usize, Rational)> = vars[j + 1..].iter().map(|&v| (v, Rational::zero())).collect();
        let bj = bp.partial_eval(&later);
        let lj = l.partial_eval(&later);
        u = u.iter().map(|f| set_lc(f, t, &lj)).collect();
        let u0: Vec<MPoly> = u.iter().map(|f| f.partial_eval(&[(x, Rational::zero())])).collect();
        let mut e = bj.sub(&product(&u, n));
        let maxdeg = bj.degree_in(x) as usize;
        for m in 1..=maxdeg {
            if e.is_zero() {
                break;
            }
            let cm = coeff_of_power(&e, x, m);
            if cm.is_zero() {
                continue;
            }
            let sig = multi_diophant(&u0, &cm, t, &vars[..j], bound)?;
            let mut xm = vec![0u16; n];
            xm[x] = m as u16;
            let xm = MPoly::monomial(xm, Rational::one());
            for i in 0..r {
                u[i] = u[i].add(&sig[i].mul(&xm));
            }
            e = bj.sub(&product(&u, n));
        }
        if !e.is_zero() {
            return None;
        }
    }
    let fs: Vec<MPoly> = u
        .iter()
        .map(|f| {
            let g = shift(f, vars, pt, -1);
            let c = content_wrt(&g, t);
            g.div_exact(&c).expect("content divides").primitive_integer()
        })
        .collect();
    let prod = product(&fs, n);
    let q = a.div_exact(&prod)?;
    q.is_constant().then_some(fs)
}

/// Solves `Σ σ_i Π_{l≠i} a_l = c` with `deg_t σ_i < deg_t a_i`, by evaluation
/// at zero in `ys` and recursion down to ℚ[t].
fn multi_diophant(a: &[MPoly], c: &MPoly, t: usize, ys: &[usize], bound: usize) -> Option<Vec<MPoly>> {
    let n = c.nvars();
    let r = a.len();
    let bs: Vec<MPoly> = (0..r)
        .map(|i| product(&a.iter().enumerate().filter(|(l, _)| *l != i).map(|(_, p)| p.clone()).collect::<Vec<_>>(), n))
        .collect();
    let check = |sig: &[MPoly]| -> MPoly {
        let mut e = c.clone();
        for i in 0..r {
            e = e.sub(&sig[i].mul(&bs[i]));
        }
        e
    };
    if ys.is_empty() {
        let ua: Vec<UPoly> = a.iter().map(|p| UPoly::from_mpoly(p, t)).collect::<Option<_>>()?;
        let ub: Vec<UPoly> = bs.iter().map(|p| UPoly::from_mpoly(p, t)).collect::<Option<_>>()?;
        let uc = UPoly::from_mpoly(c, t)?;
        let mut sig = Vec::with_capacity(r);
        for i in 0..r {
            let s = ub[i].inverse_mod(&ua[i])?;
            sig.push(uc.mul(&s).rem(&ua[i]).to_mpoly(t, n));
        }
        return check(&sig).is_zero().then_some(sig);
    }
    let y = *ys.last().unwrap();
    let rest = &ys[..ys.len() - 1];
    let at0 = [(y, Rational::zero())];
    let a0: Vec<MPoly> = a.iter().map(|p| p.partial_eval(&at0)).collect();
    let mut sig = multi_diophant(&a0, &c.partial_eval(&at0), t, rest, bound)?;
    let mut e = check(&sig);
    for m in 1..=bound {
        if e.is_zero() {
            break;
        }
        let cm = coeff_of_power(&e, y, m);
        if cm.is_zero() {
            continue;
        }
        let ds = multi_diophant(&a0, &cm, t, rest, bound)?;
        let mut ym = vec![0u16; n];
        ym[y] = m as u16;
        let ym = MPoly::monomial(ym, Rational::one());
        for i in 0..r {
            sig[i] = sig[i].add(&ds[i].mul(&ym));
        }
        e = check(&sig);
    }
    e.is_zero().then_some(sig)
}

/// Dense univariate polynomial over ℚ, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
struct UPoly(Vec<Rational>);

impl UPoly {
    fn from_mpoly(p: &MPoly, t: usize) -> Option<UPoly> {
        let cs = p.to_univariate(t);
        let v: Option<Vec<Rational>> = cs.iter().map(|c| if c.is_zero() { Some(Rational::zero()) } else { c.constant_value() }).collect();
        let mut u = UPoly(v?);
        u.trim();
        Some(u)
    }

    fn to_mpoly(&self, t: usize, n: usize) -> MPoly {
        let cs: Vec<MPoly> = self.0.iter().map(|c| MPoly::constant(n, c.clone())).collect();
        MPoly::from_univariate(t, &cs, n)
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn deg(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly(Vec::new());
        }
        let mut out = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += &(a * b);
            }
        }
        let mut u = UPoly(out);
        u.trim();
        u
    }

    fn sub(&self, o: &UPoly) -> UPoly {
        let len = self.0.len().max(o.0.len());
        let mut out = vec![Rational::zero(); len];
        for (i, a) in self.0.iter().enumerate() {
            out[i] += a;
        }
        for (i, b) in o.0.iter().enumerate() {
            out[i] -= b;
        }
        let mut u = UPoly(out);
        u.trim();
        u
    }

    fn divrem(&self, d: &UPoly) -> (UPoly, UPoly) {
        let mut r = self.clone();
        if r.0.len() < d.0.len() {
            return (UPoly(Vec::new()), r);
        }
        let inv = d.0.last().unwrap().recip();
        let mut q = vec![Rational::zero(); r.0.len() - d.0.len() + 1];
        while !r.is_zero() && r.0.len() >= d.0.len() {
            let shift = r.0.len() - d.0.len();
            let c = r.0.last().unwrap() * &inv;
            for (i, dc) in d.0.iter().enumerate() {
                r.0[i + shift] -= &(&c * dc);
            }
            q[shift] = c;
            r.0.pop();
            r.trim();
        }
        let mut q = UPoly(q);
        q.trim();
        (q, r)
    }

    fn rem(&self, d: &UPoly) -> UPoly {
        self.divrem(d).1
    }

    /// `s` with `s·self ≡ 1 (mod m)`.
    fn inverse_mod(&self, m: &UPoly) -> Option<UPoly> {
        let (mut r0, mut r1) = (m.clone(), self.rem(m));
        let (mut s0, mut s1) = (UPoly(Vec::new()), UPoly(vec![Rational::one()]));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            let s = s0.sub(&q.mul(&s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if r0.deg() != 0 || r0.is_zero() {
            return None;
        }
        let inv = r0.0[0].recip();
        Some(UPoly(s0.0.iter().map(|c| c * &inv).collect()).rem(m))
    }
}

/// Simultaneous root finder (Aberth–Ehrlich) followed by Newton polishing.
pub fn complex_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let cs: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    complex_roots_c(&cs)
}

pub fn complex_roots_c(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    let radius = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for k in (0..=n).rev() {
            dp = dp * z + p;
            p = p * z + monic[k];
        }
        (p, dp)
    };
    let r0 = radius.min(1e6).max(1e-3) * 0.5;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r0, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval(*zi);
            let step = p / dp;
            if step.is_finite() {
                *zi -= step;
            }
        }
    }
    z
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64()
}

/// Factors a squarefree primitive polynomial in the single variable `t`.
fn univariate_factor(f: &MPoly, t: usize) -> Vec<MPoly> {
    let n = f.nvars();
    let f = f.primitive_integer();
    if f.degree_in(t) <= 1 {
        return vec![f];
    }
    let cs: Vec<f64> = f.to_univariate(t).iter().map(|c| c.constant_value().map(|v| to_f64(&v)).unwrap_or(0.0)).collect();
    let mut roots = complex_roots(&cs);
    let mut g = f.clone();
    let mut out = Vec::new();
    let mut size = 1;
    while size * 2 <= roots.len() {
        let mut hit = None;
        for s in subsets(roots.len(), size) {
            let lc = to_f64(&g.lc());
            let mut prod = vec![Complex64::new(lc, 0.0)];
            for &i in &s {
                let mut next = vec![Complex64::new(0.0, 0.0); prod.len() + 1];
                for (k, c) in prod.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * roots[i];
                }
                prod = next;
            }
            let scale = prod.iter().map(|c| c.norm()).fold(1.0, f64::max);
            if prod.iter().any(|c| c.im.abs() > 1e-6 * scale) || scale > 1e15 {
                continue;
            }
            let coeffs: Vec<MPoly> = prod
                .iter()
                .map(|c| {
                    let v = num_bigint::BigInt::from(c.re.round() as i64);
                    MPoly::constant(n, Rational::from_bigint(v))
                })
                .collect();
            let h = MPoly::from_univariate(t, &coeffs, n);
            if h.is_zero() || h.degree_in(t) as usize != size {
                continue;
            }
            let h = h.primitive_integer();
            if let Some(q) = g.div_exact(&h) {
                hit = Some((s, h, q));
                break;
            }
        }
        match hit {
            Some((s, h, q)) => {
                out.push(h);
                g = q.primitive_integer();
                let keep: Vec<Complex64> = roots.iter().enumerate().filter(|(i, _)| !s.contains(i)).map(|(_, r)| *r).collect();
                roots = keep;
            }
            None => size += 1,
        }
    }
    if !g.is_constant() {
        out.push(g);
    }
    out
}

/// Whether a big integer fits comfortably in f64 rounding.
#[allow(dead_code)]
fn fits(v: &num_bigint::BigInt) -> bool {
    v.to_f64().is_some_and(|x| x.abs() < 1e15) || v.is_zero()
}
