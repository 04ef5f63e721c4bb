use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{CasError, Rational, VarRegistry};

/// Exponent vector, one entry per registry variable.
pub type Exps = Vec<u16>;

pub(crate) fn add_exps(a: &[u16], b: &[u16]) -> Exps {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_add(*y).expect("exponent overflow (degree exceeds u16)"))
        .collect()
}

pub(crate) fn divides(d: &[u16], m: &[u16]) -> bool {
    d.iter().zip(m).all(|(x, y)| x <= y)
}

pub(crate) fn sub_exps(a: &[u16], b: &[u16]) -> Exps {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Sparse multivariate polynomial with rational coefficients.
///
/// Terms are stored in strictly decreasing lexicographic order of their
/// exponent vectors (variable 0 most significant) and never carry a zero
/// coefficient, so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MPoly {
    nvars: usize,
    terms: Vec<(Exps, Rational)>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly { nvars, terms: Vec::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        if c.is_zero() {
            return Self::zero(nvars);
        }
        MPoly { nvars, terms: vec![(vec![0; nvars], c)] }
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, Rational::from_int(c))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut e = vec![0; nvars];
        e[i] = 1;
        MPoly { nvars, terms: vec![(e, Rational::one())] }
    }

    pub fn monomial(exps: Exps, c: Rational) -> Self {
        let nvars = exps.len();
        if c.is_zero() {
            return Self::zero(nvars);
        }
        MPoly { nvars, terms: vec![(exps, c)] }
    }

    /// Builds a polynomial from arbitrary (possibly repeated, possibly zero) terms.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exps, Rational)>) -> Self {
        let mut acc: HashMap<Exps, Rational> = HashMap::new();
        for (e, c) in terms {
            debug_assert_eq!(e.len(), nvars);
            if c.is_zero() {
                continue;
            }
            match acc.get_mut(&e) {
                Some(v) => *v += &c,
                None => {
                    acc.insert(e, c);
                }
            }
        }
        Self::from_map(nvars, acc)
    }

    fn from_map(nvars: usize, acc: HashMap<Exps, Rational>) -> Self {
        let mut terms: Vec<(Exps, Rational)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        MPoly { nvars, terms }
    }

    pub(crate) fn from_sorted_terms(nvars: usize, terms: Vec<(Exps, Rational)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 > w[1].0));
        debug_assert!(terms.iter().all(|(_, c)| !c.is_zero()));
        MPoly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Exps, Rational)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Exps, Rational)> {
        self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.iter().all(|&e| e == 0))
    }

    pub fn is_one(&self) -> bool {
        self.is_constant() && !self.is_zero() && self.terms[0].1.is_one()
    }

    /// Value of a constant polynomial.
    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            Some(Rational::zero())
        } else if self.is_constant() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    /// Leading term in lexicographic order.
    pub fn lead(&self) -> Option<(&Exps, &Rational)> {
        self.terms.first().map(|(e, c)| (e, c))
    }

    pub fn lc(&self) -> Rational {
        self.terms.first().map(|t| t.1.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().map(|&x| x as u32).sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.iter().map(|(e, _)| e[v] as u32).max().unwrap_or(0)
    }

    pub fn min_degree_in(&self, v: usize) -> u32 {
        self.terms.iter().map(|(e, _)| e[v] as u32).min().unwrap_or(0)
    }

    pub fn contains_var(&self, v: usize) -> bool {
        self.terms.iter().any(|(e, _)| e[v] > 0)
    }

    /// Sorted list of variables that occur.
    pub fn vars(&self) -> Vec<usize> {
        (0..self.nvars).filter(|&v| self.contains_var(v)).collect()
    }

    pub fn neg(&self) -> MPoly {
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect(),
        }
    }

    /// Multiplies by the monomial `c * x^e`.
    pub fn mul_term(&self, e: &[u16], c: &Rational) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(x, k)| (add_exps(x, e), k * c)).collect(),
        }
    }

    fn merge(&self, other: &MPoly, negate: bool) -> MPoly {
        debug_assert_eq!(self.nvars, other.nvars, "registry mismatch");
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &other.terms;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            let c = if negate { -&t.1 } else { t.1.clone() };
            out.push((t.0.clone(), c));
        }
        MPoly { nvars: self.nvars, terms: out }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.merge(other, true)
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        debug_assert_eq!(self.nvars, other.nvars, "registry mismatch");
        if self.is_zero() || other.is_zero() {
            return MPoly::zero(self.nvars);
        }
        if other.terms.len() == 1 {
            return self.mul_term(&other.terms[0].0, &other.terms[0].1);
        }
        if self.terms.len() == 1 {
            return other.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        let mut acc: HashMap<Exps, Rational> =
            HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = add_exps(ea, eb);
                let c = ca * cb;
                match acc.get_mut(&e) {
                    Some(v) => *v += &c,
                    None => {
                        acc.insert(e, c);
                    }
                }
            }
        }
        Self::from_map(self.nvars, acc)
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut result = MPoly::one(self.nvars);
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Partial derivative with respect to variable `v`.
    pub fn diff(&self, v: usize) -> MPoly {
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            if e[v] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[v] -= 1;
            terms.push((e2, c * &Rational::from_int(e[v] as i64)));
        }
        // Lowering one exponent keeps the lexicographic order strict.
        MPoly { nvars: self.nvars, terms }
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        debug_assert_eq!(point.len(), self.nvars);
        let mut cache: Vec<Vec<Rational>> = vec![Vec::new(); self.nvars];
        let mut sum = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let powers = &mut cache[v];
                if powers.is_empty() {
                    powers.push(Rational::one());
                }
                while powers.len() <= k as usize {
                    let next = powers.last().unwrap() * &point[v];
                    powers.push(next);
                }
                t = &t * &powers[k as usize];
            }
            sum += &t;
        }
        sum
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = c.to_f64();
                for (v, &k) in e.iter().enumerate() {
                    if k > 0 {
                        t *= point[v].powi(k as i32);
                    }
                }
                t
            })
            .sum()
    }

    pub fn eval_complex(&self, point: &[Complex64]) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut t = Complex64::new(c.to_f64(), 0.0);
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= point[v].powi(k as i32);
                }
            }
            sum += t;
        }
        sum
    }

    /// Replaces a subset of variables by rational values, keeping the registry.
    pub fn partial_eval(&self, values: &[(usize, Rational)]) -> MPoly {
        let mut acc: HashMap<Exps, Rational> = HashMap::new();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let mut c2 = c.clone();
            for (v, val) in values {
                let k = e2[*v];
                if k > 0 {
                    c2 = &c2 * &val.pow(k as u32);
                    e2[*v] = 0;
                }
            }
            if c2.is_zero() {
                continue;
            }
            match acc.get_mut(&e2) {
                Some(x) => *x += &c2,
                None => {
                    acc.insert(e2, c2);
                }
            }
        }
        Self::from_map(self.nvars, acc)
    }

    /// Composition: variable `i` is replaced by `images[i]` (all living in a
    /// ring with `target_nvars` variables). `None` entries are not allowed to
    /// occur in the polynomial.
    pub fn compose(&self, images: &[Option<MPoly>], target_nvars: usize) -> MPoly {
        debug_assert_eq!(images.len(), self.nvars);
        let mut powers: Vec<Vec<MPoly>> = vec![Vec::new(); self.nvars];
        let mut acc: HashMap<Exps, Rational> = HashMap::new();
        for (e, c) in &self.terms {
            let mut t = MPoly::constant(target_nvars, c.clone());
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let img = images[v]
                    .as_ref()
                    .unwrap_or_else(|| panic!("variable {v} has no image in composition"));
                let pw = &mut powers[v];
                if pw.is_empty() {
                    pw.push(MPoly::one(target_nvars));
                }
                while pw.len() <= k as usize {
                    let next = pw.last().unwrap().mul(img);
                    pw.push(next);
                }
                t = t.mul(&pw[k as usize]);
            }
            for (e2, c2) in t.terms {
                match acc.get_mut(&e2) {
                    Some(x) => *x += &c2,
                    None => {
                        acc.insert(e2, c2);
                    }
                }
            }
        }
        Self::from_map(target_nvars, acc)
    }

    /// Re-embeds into another registry: variable `i` becomes `mapping[i]`.
    pub fn remap(&self, target_nvars: usize, mapping: &[usize]) -> MPoly {
        let terms = self.terms.iter().map(|(e, c)| {
            let mut e2 = vec![0u16; target_nvars];
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    e2[mapping[v]] += k;
                }
            }
            (e2, c.clone())
        });
        MPoly::from_terms(target_nvars, terms)
    }

    /// Coefficients with respect to `v`: entry `d` is the coefficient of `v^d`
    /// (a polynomial in which `v` does not occur).
    pub fn to_univariate(&self, v: usize) -> Vec<MPoly> {
        let deg = self.degree_in(v) as usize;
        let mut buckets: Vec<Vec<(Exps, Rational)>> = vec![Vec::new(); deg + 1];
        for (e, c) in &self.terms {
            let d = e[v] as usize;
            let mut e2 = e.clone();
            e2[v] = 0;
            buckets[d].push((e2, c.clone()));
        }
        buckets
            .into_iter()
            .map(|mut ts| {
                ts.sort_unstable_by(|a, b| b.0.cmp(&a.0));
                MPoly { nvars: self.nvars, terms: ts }
            })
            .collect()
    }

    pub fn from_univariate(v: usize, coeffs: &[MPoly], nvars: usize) -> MPoly {
        let mut terms = Vec::new();
        for (d, c) in coeffs.iter().enumerate() {
            for (e, k) in &c.terms {
                let mut e2 = e.clone();
                e2[v] = e2[v].checked_add(d as u16).expect("exponent overflow");
                terms.push((e2, k.clone()));
            }
        }
        MPoly::from_terms(nvars, terms)
    }

    /// Coefficients with respect to a set of variables: maps each exponent
    /// pattern on `vars` to its cofactor polynomial (with those variables removed).
    pub fn coefficients_in(&self, vars: &[usize]) -> Vec<(Vec<u16>, MPoly)> {
        let mut groups: HashMap<Vec<u16>, Vec<(Exps, Rational)>> = HashMap::new();
        for (e, c) in &self.terms {
            let key: Vec<u16> = vars.iter().map(|&v| e[v]).collect();
            let mut e2 = e.clone();
            for &v in vars {
                e2[v] = 0;
            }
            groups.entry(key).or_default().push((e2, c.clone()));
        }
        let mut out: Vec<(Vec<u16>, MPoly)> = groups
            .into_iter()
            .map(|(k, ts)| (k, MPoly::from_terms(self.nvars, ts)))
            .collect();
        out.sort_by(|a, b| b.0.cmp(&a.0));
        out
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &MPoly) -> Option<MPoly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Some(MPoly::zero(self.nvars));
        }
        if d.is_constant() {
            return Some(self.scale(&d.terms[0].1.recip()));
        }
        if d.terms.len() == 1 {
            let (de, dc) = &d.terms[0];
            let inv = dc.recip();
            let mut terms = Vec::with_capacity(self.terms.len());
            for (e, c) in &self.terms {
                if !divides(de, e) {
                    return None;
                }
                terms.push((sub_exps(e, de), c * &inv));
            }
            return Some(MPoly { nvars: self.nvars, terms });
        }
        let (dl, dlc) = (&d.terms[0].0, &d.terms[0].1);
        let inv = dlc.recip();
        // Quick degree rejection.
        for v in 0..self.nvars {
            if d.degree_in(v) > self.degree_in(v) {
                return None;
            }
        }
        let mut rem = self.clone();
        let mut q: Vec<(Exps, Rational)> = Vec::new();
        while let Some((le, lc)) = rem.lead() {
            if !divides(dl, le) {
                return None;
            }
            let e = sub_exps(le, dl);
            let c = lc * &inv;
            rem = rem.sub(&d.mul_term(&e, &c));
            q.push((e, c));
        }
        Some(MPoly::from_sorted_terms(self.nvars, q))
    }

    /// gcd of all coefficients as a positive rational (zero for the zero polynomial).
    pub fn rational_content(&self) -> Rational {
        let mut g = Rational::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
        }
        g
    }

    /// Scales so that the leading coefficient is one.
    pub fn monic(&self) -> MPoly {
        if self.is_zero() {
            return self.clone();
        }
        let lc = self.terms[0].1.clone();
        if lc.is_one() {
            return self.clone();
        }
        self.scale(&lc.recip())
    }

    /// Scales to integer coefficients with unit content and positive leading coefficient.
    pub fn primitive_integer(&self) -> MPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.rational_content();
        if self.terms[0].1.is_negative() {
            c = -c;
        }
        self.scale(&c.recip())
    }

    pub fn check_same_registry(&self, other: &MPoly) -> Result<(), CasError> {
        if self.nvars != other.nvars {
            return Err(CasError::RegistryMismatch(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, reg: &'a VarRegistry) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, reg }
    }

    /// Writes the polynomial using variable names from `names`.
    pub fn fmt_with_names(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let is_const = e.iter().all(|&k| k == 0);
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            if is_const || !abs.is_one() {
                factors.push(abs.to_string());
            }
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if k == 1 {
                    factors.push(names[v].clone());
                } else {
                    factors.push(format!("{}^{}", names[v], k));
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a MPoly,
    reg: &'a VarRegistry,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.poly.fmt_with_names(self.reg.names()))
    }
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("v{i}")).collect();
        write!(f, "{}", self.fmt_with_names(&names))
    }
}

impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        MPoly::add(self, rhs)
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        MPoly::sub(self, rhs)
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        MPoly::mul(self, rhs)
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        MPoly::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MPoly {
        MPoly::var(n, i)
    }

    #[test]
    fn difference_of_squares() {
        let one = MPoly::one(1);
        let p = (&x(1, 0) + &one).mul(&(&x(1, 0) - &one));
        assert_eq!(p, &x(1, 0).pow(2) - &one);
    }

    #[test]
    fn add_zero_is_identity() {
        let p = &x(2, 0).pow(3) + &x(2, 1).scale(&Rational::new(2, 3));
        assert_eq!(&p + &MPoly::zero(2), p);
    }

    #[test]
    fn hand_expansion_cancels() {
        // vars: k2, k3, Z
        let (k2, k3, z) = (x(3, 0), x(3, 1), x(3, 2));
        let lhs = &(&k2 - &k3).mul(&z) + &k3.mul(&z);
        assert_eq!(lhs, k2.mul(&z));
    }

    #[test]
    fn derivatives() {
        let z = x(1, 0);
        assert_eq!(z.pow(4).diff(0), z.pow(3).scale(&Rational::from_int(4)));
        let p = x(3, 0).mul(&x(3, 1)).sub(&x(3, 2));
        assert_eq!(p.diff(0), x(3, 1));
        assert!(x(2, 0).scale(&Rational::from_int(5)).diff(1).is_zero());
    }

    #[test]
    fn exact_division() {
        let p = &x(2, 0).pow(2) - &x(2, 1).pow(2);
        let d = &x(2, 0) - &x(2, 1);
        assert_eq!(p.div_exact(&d).unwrap(), &x(2, 0) + &x(2, 1));
        assert!(p.div_exact(&(&x(2, 0) + &MPoly::one(2))).is_none());
    }

    #[test]
    fn composition_substitutes() {
        // (x + y)^2 with x -> y, y -> 1
        let p = (&x(2, 0) + &x(2, 1)).pow(2);
        let img = vec![Some(x(2, 1)), Some(MPoly::one(2))];
        let q = p.compose(&img, 2);
        assert_eq!(q, (&x(2, 1) + &MPoly::one(2)).pow(2));
    }

    #[test]
    fn univariate_roundtrip() {
        let p = &x(2, 0).pow(2).mul(&x(2, 1)) + &x(2, 1).pow(3);
        let cs = p.to_univariate(0);
        assert_eq!(cs.len(), 3);
        assert_eq!(MPoly::from_univariate(0, &cs, 2), p);
    }

    #[test]
    fn content_sees_every_denominator() {
        let p = MPoly::from_terms(1, vec![(vec![2], Rational::one()), (vec![1], Rational::new(5, 6)), (vec![0], Rational::new(1, 6))]);
        assert_eq!(p.rational_content(), Rational::new(1, 6));
        assert_eq!(p.primitive_integer().lc(), Rational::from_int(6));
    }
}
