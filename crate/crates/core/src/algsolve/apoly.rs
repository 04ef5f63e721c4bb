//! Polynomials in the unknowns with coefficients in `ℚ[θ]`, kept
//! fraction-free and content-free so that they represent elements of
//! `ℚ(θ)[unknowns]` up to a unit.

use std::cmp::Ordering;

use crate::cas::{add_exps, divides, gcd, sub_exps, MPoly, RatFunc, Rational};

use super::TermOrder;

pub type Mono = Vec<u16>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct APoly {
    /// Sorted strictly descending by the order the polynomial was built under.
    pub terms: Vec<(Mono, MPoly)>,
}

/// Shape shared by all polynomials of one computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    /// Number of unknowns.
    pub n: usize,
    /// Number of coefficient-field parameters θ.
    pub k: usize,
    pub order: TermOrder,
}

pub fn lcm_mono(a: &[u16], b: &[u16]) -> Mono {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

pub fn coprime(a: &[u16], b: &[u16]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}

pub fn mono_degree(m: &[u16]) -> u32 {
    m.iter().map(|&x| x as u32).sum()
}

impl Ring {
    pub fn new(n: usize, k: usize, order: TermOrder) -> Self {
        Ring { n, k, order }
    }

    pub fn zero(&self) -> APoly {
        APoly { terms: Vec::new() }
    }

    pub fn constant(&self, c: MPoly) -> APoly {
        if c.is_zero() {
            return self.zero();
        }
        APoly { terms: vec![(vec![0; self.n], c)] }
    }

    pub fn one(&self) -> APoly {
        self.constant(MPoly::one(self.k))
    }

    pub fn var(&self, i: usize) -> APoly {
        let mut m = vec![0; self.n];
        m[i] = 1;
        APoly { terms: vec![(m, MPoly::one(self.k))] }
    }

    /// Splits a polynomial over `[θ, unknowns]` into coefficient form.
    pub fn from_mpoly(&self, p: &MPoly) -> APoly {
        let vars: Vec<usize> = (self.k..self.k + self.n).collect();
        let mut terms: Vec<(Mono, MPoly)> = p
            .coefficients_in(&vars)
            .into_iter()
            .map(|(m, c)| {
                let keep: Vec<usize> = (0..self.k).collect();
                let mut mapping = vec![0usize; p.nvars()];
                for (i, v) in keep.iter().enumerate() {
                    mapping[*v] = i;
                }
                (m, c.remap(self.k, &mapping))
            })
            .collect();
        terms.sort_by(|a, b| self.order.cmp(&b.0, &a.0));
        APoly { terms }
    }

    /// Inverse of `from_mpoly`.
    pub fn to_mpoly(&self, p: &APoly) -> MPoly {
        let nv = self.k + self.n;
        let mapping: Vec<usize> = (0..self.k).collect();
        let mut acc = MPoly::zero(nv);
        for (m, c) in &p.terms {
            let mut e = vec![0u16; nv];
            e[self.k..].copy_from_slice(m);
            acc = acc.add(&c.remap(nv, &mapping).mul(&MPoly::monomial(e, Rational::one())));
        }
        acc
    }

    pub fn resort(&self, p: &APoly) -> APoly {
        let mut terms = p.terms.clone();
        terms.sort_by(|a, b| self.order.cmp(&b.0, &a.0));
        APoly { terms }
    }

    fn merge(&self, a: &APoly, b: &APoly, negate_b: bool) -> APoly {
        let mut out = Vec::with_capacity(a.terms.len() + b.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < a.terms.len() && j < b.terms.len() {
            match self.order.cmp(&a.terms[i].0, &b.terms[j].0) {
                Ordering::Greater => {
                    out.push(a.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate_b { b.terms[j].1.neg() } else { b.terms[j].1.clone() };
                    out.push((b.terms[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate_b {
                        a.terms[i].1.sub(&b.terms[j].1)
                    } else {
                        a.terms[i].1.add(&b.terms[j].1)
                    };
                    if !c.is_zero() {
                        out.push((a.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a.terms[i..].iter().cloned());
        for t in &b.terms[j..] {
            let c = if negate_b { t.1.neg() } else { t.1.clone() };
            out.push((t.0.clone(), c));
        }
        APoly { terms: out }
    }

    pub fn add(&self, a: &APoly, b: &APoly) -> APoly {
        self.merge(a, b, false)
    }

    pub fn sub(&self, a: &APoly, b: &APoly) -> APoly {
        self.merge(a, b, true)
    }

    pub fn scale(&self, p: &APoly, c: &MPoly) -> APoly {
        if c.is_zero() {
            return self.zero();
        }
        if c.is_one() {
            return p.clone();
        }
        APoly { terms: p.terms.iter().map(|(m, a)| (m.clone(), a.mul(c))).collect() }
    }

    /// `c · x^m · p`; multiplication by a monomial preserves the term order.
    pub fn mul_term(&self, p: &APoly, m: &[u16], c: &MPoly) -> APoly {
        if c.is_zero() {
            return self.zero();
        }
        APoly {
            terms: p
                .terms
                .iter()
                .map(|(e, a)| (add_exps(e, m), if c.is_one() { a.clone() } else { a.mul(c) }))
                .collect(),
        }
    }

    pub fn mul(&self, a: &APoly, b: &APoly) -> APoly {
        let mut acc = self.zero();
        for (m, c) in &b.terms {
            acc = self.add(&acc, &self.mul_term(a, m, c));
        }
        acc
    }

    pub fn pow(&self, a: &APoly, e: u32) -> APoly {
        let mut acc = self.one();
        for _ in 0..e {
            acc = self.mul(&acc, a);
        }
        acc
    }

    /// Divides out the gcd of the coefficients and fixes the sign and the
    /// rational scale.
    pub fn primitive(&self, p: &APoly) -> APoly {
        if p.terms.is_empty() {
            return p.clone();
        }
        let mut g = if self.k == 0 {
            MPoly::one(0)
        } else {
            // Start from the smallest coefficient: the gcd collapses fast.
            let mut idx: Vec<usize> = (0..p.terms.len()).collect();
            idx.sort_by_key(|&i| p.terms[i].1.num_terms());
            let mut g = MPoly::zero(self.k);
            for i in idx {
                g = if g.is_zero() { p.terms[i].1.monic() } else { gcd(&g, &p.terms[i].1) };
                if g.is_constant() {
                    break;
                }
            }
            g
        };
        // Rational normalization: integer coefficients, unit content,
        // positive leading rational.
        let mut content = Rational::zero();
        let mut divided: Vec<(Mono, MPoly)> = Vec::with_capacity(p.terms.len());
        if !g.is_constant() {
            for (m, c) in &p.terms {
                divided.push((m.clone(), c.div_exact(&g).expect("content divides")));
            }
        } else {
            divided = p.terms.clone();
        }
        for (_, c) in &divided {
            for (_, r) in c.terms() {
                content = content.gcd(r);
            }
        }
        if divided[0].1.lc().is_negative() {
            content = -content;
        }
        g = MPoly::constant(self.k, content.recip());
        APoly { terms: divided.into_iter().map(|(m, c)| (m, c.mul(&g))).collect() }
    }

    pub fn substitute_theta(&self, p: &APoly, point: &[Rational]) -> APoly {
        let vals: Vec<(usize, Rational)> = point.iter().cloned().enumerate().collect();
        let terms = p
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let v = c.partial_eval(&vals);
                let v = v.constant_value().unwrap_or_else(Rational::zero);
                (!v.is_zero()).then(|| (m.clone(), MPoly::constant(0, v)))
            })
            .collect();
        APoly { terms }
    }

    pub fn fmt(&self, p: &APoly, theta: &[String], unknowns: &[String]) -> String {
        let mut names: Vec<String> = theta.to_vec();
        names.extend(unknowns.iter().cloned());
        self.to_mpoly(p).fmt_with_names(&names)
    }

    /// Coefficients as rational functions after dividing by the leading one.
    pub fn monic_coeffs(&self, p: &APoly) -> Vec<(Mono, RatFunc)> {
        let lc = RatFunc::from_poly(p.terms[0].1.clone());
        p.terms
            .iter()
            .map(|(m, c)| (m.clone(), RatFunc::from_poly(c.clone()).div(&lc).expect("nonzero lc")))
            .collect()
    }
}

impl APoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lm(&self) -> &Mono {
        &self.terms[0].0
    }

    pub fn lc(&self) -> &MPoly {
        &self.terms[0].1
    }

    /// Nonzero and free of unknowns.
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.iter().all(|&e| e == 0)
    }

    pub fn contains_unknown(&self, v: usize) -> bool {
        self.terms.iter().any(|(m, _)| m[v] > 0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| mono_degree(m)).max().unwrap_or(0)
    }
}

pub fn mono_divides(d: &[u16], m: &[u16]) -> bool {
    divides(d, m)
}

pub fn mono_quot(m: &[u16], d: &[u16]) -> Mono {
    sub_exps(m, d)
}
