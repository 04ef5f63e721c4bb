//! Splitting zero-dimensional components into prime branches through
//! minimal polynomials of coordinates and of random linear forms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cas::{MPoly, RatFunc, Rational};

use super::apoly::{APoly, Ring};
use super::factor::{complex_roots_c, factor};
use super::groebner::{groebner, normal_form, GroebnerBasis, Limits};
use super::ideal::{dimension, standard_monomials, Dimension};
use super::{AlgError, TermOrder};

/// One prime (or uncertified) component of the solution set.
#[derive(Debug, Clone)]
pub struct SolutionBranch {
    /// Reduced lex basis, last unknown lowest.
    pub lex: GroebnerBasis,
    pub degree: usize,
    /// Unknown values over ℚ(θ) when the branch is a single point.
    pub explicit: Option<Vec<RatFunc>>,
    /// Primality was certified by an irreducible minimal polynomial of full degree.
    pub certified: bool,
    pub real: RealFlag,
}

/// Sign analysis of a branch at numeric parameter samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealFlag {
    /// Every solution was real at every sample.
    Real,
    /// No solution was real at any sample.
    NonReal,
    Unknown,
}

impl SolutionBranch {
    pub fn is_rational(&self) -> bool {
        self.degree == 1
    }

    /// Solutions of the branch at a numeric parameter point, by back
    /// substitution through the lex basis.
    pub fn points(&self, theta: &[f64]) -> Vec<Vec<Complex64>> {
        branch_points(&self.lex, theta)
    }
}

fn leading_var(m: &[u16]) -> usize {
    m.iter().position(|&e| e > 0).unwrap_or(m.len())
}

pub fn branch_points(lex: &GroebnerBasis, theta: &[f64]) -> Vec<Vec<Complex64>> {
    let th: Vec<Complex64> = theta.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    branch_points_c(lex, &th)
}

/// [`branch_points`] at a complex parameter point.
pub fn branch_points_c(lex: &GroebnerBasis, theta: &[Complex64]) -> Vec<Vec<Complex64>> {
    let ring = &lex.ring;
    let n = ring.n;
    let coeffs: Vec<Vec<(Vec<u16>, Complex64)>> = lex
        .gens
        .iter()
        .map(|g| g.terms.iter().map(|(m, c)| (m.clone(), c.eval_complex(theta))).collect())
        .collect();
    let mut partial: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]];
    for v in (0..n).rev() {
        let gens: Vec<&Vec<(Vec<u16>, Complex64)>> =
            coeffs.iter().zip(&lex.gens).filter(|(_, g)| leading_var(g.lm()) == v).map(|(c, _)| c).collect();
        let mut next = Vec::new();
        for pt in &partial {
            // Univariate images in x_v and their coefficient scales.
            let polys: Vec<(Vec<Complex64>, f64)> = gens
                .iter()
                .map(|g| {
                    let deg = g.iter().map(|(m, _)| m[v]).max().unwrap_or(0) as usize;
                    let mut u = vec![Complex64::new(0.0, 0.0); deg + 1];
                    let mut scale = 0.0f64;
                    for (m, c) in g.iter() {
                        let mut t = *c;
                        for w in v + 1..n {
                            if m[w] > 0 {
                                t *= pt[w].powu(m[w] as u32);
                            }
                        }
                        scale += t.norm();
                        u[m[v] as usize] += t;
                    }
                    (u, scale.max(1e-300))
                })
                .collect();
            let pivot = polys
                .iter()
                .filter(|(u, s)| u.len() > 1 && u.last().unwrap().norm() > 1e-9 * s)
                .min_by_key(|(u, _)| u.len());
            let Some((piv, _)) = pivot else { continue };
            for r in complex_roots_c(piv) {
                let ok = polys.iter().all(|(u, s)| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in u.iter().rev() {
                        acc = acc * r + c;
                    }
                    acc.norm() <= 1e-6 * s * (1.0 + r.norm()).powi(u.len() as i32 - 1)
                });
                if ok {
                    let mut p = pt.clone();
                    p[v] = r;
                    next.push(p);
                }
            }
        }
        partial = next;
    }
    partial
}

fn real_flag(lex: &GroebnerBasis, samples: &[Vec<f64>]) -> RealFlag {
    let mut all_real = true;
    let mut none_real = true;
    for th in samples {
        for p in branch_points(lex, th) {
            let real = p.iter().all(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()));
            all_real &= real;
            none_real &= !real;
        }
    }
    match (all_real, none_real) {
        (true, false) => RealFlag::Real,
        (false, true) => RealFlag::NonReal,
        _ => RealFlag::Unknown,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Decomposition {
    pub branches: Vec<SolutionBranch>,
    /// Positive-dimensional components, left undecomposed.
    pub positive: Vec<GroebnerBasis>,
}

impl Decomposition {
    pub fn total_degree(&self) -> usize {
        self.branches.iter().map(|b| b.degree).sum()
    }
}

/// `ℓ` evaluated as an element of the ring.
fn linear_form(ring: &Ring, coeffs: &[i64]) -> APoly {
    let mut acc = ring.zero();
    for (i, &c) in coeffs.iter().enumerate() {
        if c != 0 {
            acc = ring.add(&acc, &ring.scale(&ring.var(i), &MPoly::from_int(ring.k, c)));
        }
    }
    acc
}

/// Minimal polynomial of `ell` in the quotient ring, as a polynomial over
/// `[θ_1..θ_k, T]` with denominators cleared.
pub fn minimal_polynomial(gb: &GroebnerBasis, ell: &APoly) -> MPoly {
    let ring = &gb.ring;
    let k = ring.k;
    let std = standard_monomials(gb, 100_000).expect("zero-dimensional");
    let basis: Vec<&APoly> = gb.gens.iter().collect();
    let coords = |r: &APoly, s: &RatFunc| -> Vec<RatFunc> {
        let mut v = vec![RatFunc::zero(k); std.len()];
        for (m, c) in &r.terms {
            let idx = std.iter().position(|x| x == m).expect("normal form is standard");
            v[idx] = RatFunc::from_poly(c.clone()).div(s).expect("nonzero scale");
        }
        v
    };
    // Echelon rows: (pivot, vector, combination over powers of ell).
    let mut rows: Vec<(usize, Vec<RatFunc>, Vec<RatFunc>)> = Vec::new();
    let mut r = ring.one();
    let mut s = RatFunc::one(k);
    for i in 0..=std.len() {
        if i > 0 {
            let mut step = RatFunc::one(k);
            let prod = ring.mul(ell, &r);
            let (nr, _) = normal_form(ring, &prod, &basis, Some(&mut step));
            r = nr;
            s = s.mul(&step);
        }
        let mut w = coords(&r, &s);
        let mut combo = vec![RatFunc::zero(k); i + 1];
        combo[i] = RatFunc::one(k);
        for (piv, v, c) in &rows {
            if w[*piv].is_zero() {
                continue;
            }
            let f = w[*piv].div(&v[*piv]).expect("pivot nonzero");
            for j in 0..w.len() {
                if !v[j].is_zero() {
                    w[j] = w[j].sub(&f.mul(&v[j]));
                }
            }
            for j in 0..c.len() {
                if !c[j].is_zero() {
                    combo[j] = combo[j].sub(&f.mul(&c[j]));
                }
            }
        }
        match w.iter().position(|x| !x.is_zero()) {
            Some(piv) => rows.push((piv, w, combo)),
            None => return clear_denominators(&combo, k),
        }
    }
    unreachable!("dependency within dim+1 powers")
}

fn clear_denominators(combo: &[RatFunc], k: usize) -> MPoly {
    let nv = k + 1;
    let mut l = MPoly::one(k);
    for c in combo {
        if !c.is_zero() {
            let g = crate::cas::gcd(&l, c.den());
            l = l.mul(c.den()).div_exact(&g).expect("gcd divides");
        }
    }
    let up: Vec<usize> = (0..k).collect();
    let mut acc = MPoly::zero(nv);
    for (d, c) in combo.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let coef = c.num().mul(&l).div_exact(c.den()).expect("lcm clears");
        let mut e = vec![0u16; nv];
        e[k] = d as u16;
        acc = acc.add(&coef.remap(nv, &up).mul(&MPoly::monomial(e, Rational::one())));
    }
    acc.primitive_integer()
}

/// `q(ell)` for `q` over `[θ, T]`.
fn eval_at(ring: &Ring, q: &MPoly, ell: &APoly) -> APoly {
    let k = ring.k;
    let cs = q.to_univariate(k);
    let mut acc = ring.zero();
    let mut pw = ring.one();
    let down: Vec<usize> = (0..=k).map(|i| i.min(k.saturating_sub(1))).collect();
    for (d, c) in cs.iter().enumerate() {
        if d > 0 {
            pw = ring.mul(&pw, ell);
        }
        if c.is_zero() {
            continue;
        }
        let c = if k == 0 { MPoly::constant(0, c.constant_value().unwrap()) } else { c.remap(k, &down) };
        acc = ring.add(&acc, &ring.scale(&pw, &c));
    }
    acc
}

/// Splits `gb` along the factors of the minimal polynomial of `ell`, or
/// returns `None` when that polynomial is a power of one irreducible.
fn try_split(gb: &GroebnerBasis, ell: &APoly, limits: &Limits) -> Result<(Option<Vec<GroebnerBasis>>, usize, bool), AlgError> {
    let ring = &gb.ring;
    let mp = minimal_polynomial(gb, ell);
    let deg = mp.degree_in(ring.k) as usize;
    let fz = factor(&mp);
    let parts: Vec<(MPoly, u32)> = fz.factors.into_iter().filter(|(f, _)| f.contains_var(ring.k)).collect();
    let irreducible = parts.len() == 1 && parts[0].1 == 1;
    if parts.len() <= 1 {
        return Ok((None, deg, irreducible));
    }
    let mut out = Vec::new();
    for (q, e) in parts {
        let mut gens = gb.gens.clone();
        gens.push(eval_at(ring, &q.pow(e), ell));
        let sub = groebner(ring, &gens, limits)?;
        if !sub.is_unit() {
            out.push(sub);
        }
    }
    Ok((Some(out), deg, false))
}

/// Splits zero-dimensional components into branches. `samples` are the
/// numeric parameter points used for the realness flags.
pub fn triangular_decompose(
    components: &[GroebnerBasis],
    seed: u64,
    samples: &[Vec<f64>],
    limits: &Limits,
) -> Result<Decomposition, AlgError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dec = Decomposition::default();
    let mut queue: Vec<GroebnerBasis> = components.to_vec();
    'outer: while let Some(gb) = queue.pop() {
        let count = match dimension(&gb) {
            Dimension::Empty => continue,
            Dimension::Positive { .. } => {
                dec.positive.push(gb);
                continue;
            }
            Dimension::Zero { count } => count,
        };
        let ring = gb.ring.clone();
        if count == 1 {
            dec.branches.push(finalize(&gb, 1, true, samples, limits)?);
            continue;
        }
        for v in (0..ring.n).rev() {
            if let (Some(parts), _, _) = try_split(&gb, &ring.var(v), limits)? {
                queue.extend(parts);
                continue 'outer;
            }
        }
        let mut certified = false;
        for _ in 0..3 {
            let coeffs: Vec<i64> = (0..ring.n).map(|_| rng.gen_range(-9..=9)).collect();
            let ell = linear_form(&ring, &coeffs);
            match try_split(&gb, &ell, limits)? {
                (Some(parts), _, _) => {
                    queue.extend(parts);
                    continue 'outer;
                }
                (None, deg, irreducible) if deg == count && irreducible => {
                    certified = true;
                    break;
                }
                _ => {}
            }
        }
        dec.branches.push(finalize(&gb, count, certified, samples, limits)?);
    }
    dec.branches.sort_by(|a, b| a.degree.cmp(&b.degree).then_with(|| fmt_key(a).cmp(&fmt_key(b))));
    Ok(dec)
}

fn fmt_key(b: &SolutionBranch) -> String {
    let n = b.lex.ring.n;
    let k = b.lex.ring.k;
    let th: Vec<String> = (0..k).map(|i| format!("t{i}")).collect();
    let un: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    b.lex.gens.iter().map(|g| b.lex.ring.fmt(g, &th, &un)).collect::<Vec<_>>().join(";")
}

fn finalize(
    gb: &GroebnerBasis,
    degree: usize,
    certified: bool,
    samples: &[Vec<f64>],
    limits: &Limits,
) -> Result<SolutionBranch, AlgError> {
    let lex_ring = Ring::new(gb.ring.n, gb.ring.k, TermOrder::Lex);
    let lex = if gb.ring.order == TermOrder::Lex { gb.clone() } else { groebner(&lex_ring, &gb.gens, limits)? };
    let explicit = (degree == 1).then(|| explicit_point(&lex));
    let real = real_flag(&lex, samples);
    Ok(SolutionBranch { lex, degree, explicit, certified, real })
}

/// Reads `u_i = -c/a` off a lex basis `{a·u_i + c}` of a single point.
fn explicit_point(lex: &GroebnerBasis) -> Vec<RatFunc> {
    let ring = &lex.ring;
    let mut vals = vec![RatFunc::zero(ring.k); ring.n];
    for g in &lex.gens {
        let v = g.lm().iter().position(|&e| e == 1).expect("linear generator");
        let a = RatFunc::from_poly(g.lc().clone());
        let c = g.terms.get(1).map(|(m, c)| {
            debug_assert!(m.iter().all(|&e| e == 0));
            RatFunc::from_poly(c.clone())
        });
        vals[v] = match c {
            Some(c) => c.neg().div(&a).expect("nonzero lc"),
            None => RatFunc::zero(ring.k),
        };
    }
    vals
}

/// The joint ideal of every pair of branches is the unit ideal.
pub fn check_disjoint(branches: &[SolutionBranch], limits: &Limits) -> Result<bool, AlgError> {
    for i in 0..branches.len() {
        for j in i + 1..branches.len() {
            let ring = &branches[i].lex.ring;
            let mut gens = branches[i].lex.gens.clone();
            gens.extend(branches[j].lex.gens.iter().cloned());
            if !groebner(ring, &gens, limits)?.is_unit() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algsolve::testutil::system;

    fn decompose_one(theta: &[&str], un: &[&str], eqs: &[&str]) -> Decomposition {
        let (ring, f) = system(theta, un, eqs, TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        let samples = vec![vec![1.3; theta.len()], vec![0.7; theta.len()]];
        triangular_decompose(&[gb], 1, &samples, &Limits::default()).unwrap()
    }

    #[test]
    fn quartic_branches() {
        let d = decompose_one(&["k"], &["s"], &["s^4 - k^4"]);
        let degs: Vec<usize> = d.branches.iter().map(|b| b.degree).collect();
        assert_eq!(degs, vec![1, 1, 2]);
        assert_eq!(d.total_degree(), 4);
        assert!(check_disjoint(&d.branches, &Limits::default()).unwrap());
        let vals: Vec<String> = d.branches[..2]
            .iter()
            .map(|b| b.explicit.as_ref().unwrap()[0].fmt_with_names(&["k".to_string()]))
            .collect();
        assert!(vals.contains(&"k".to_string()) && vals.contains(&"-k".to_string()), "{vals:?}");
        assert_eq!(d.branches[0].real, RealFlag::Real);
        assert_eq!(d.branches[2].real, RealFlag::NonReal);
        let pts = d.branches[2].points(&[2.0]);
        assert_eq!(pts.len(), 2);
        for p in pts {
            assert!((p[0] * p[0] + 4.0).norm() < 1e-9);
        }
    }

    #[test]
    fn separating_form_splits_diagonals() {
        // x^2 = a, y^2 = a: coordinate minimal polynomials are irreducible,
        // but the ideal has two components x = y and x = -y.
        let d = decompose_one(&["a"], &["x", "y"], &["x^2 - a", "y^2 - a"]);
        let degs: Vec<usize> = d.branches.iter().map(|b| b.degree).collect();
        assert_eq!(degs, vec![2, 2]);
        assert!(d.branches.iter().all(|b| b.certified));
    }

    #[test]
    fn minimal_polynomial_of_coordinate() {
        let (ring, f) = system(&["a"], &["x", "y"], &["x - y - a", "y^2 - 2"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        let mp = minimal_polynomial(&gb, &ring.var(0));
        // x = y + a, so (x - a)^2 = 2.
        let names = vec!["a".to_string(), "T".to_string()];
        assert_eq!(mp.fmt_with_names(&names), "a^2 - 2*a*T + T^2 - 2");
    }
}
