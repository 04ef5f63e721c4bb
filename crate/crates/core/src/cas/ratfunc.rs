use std::fmt;

use num_complex::Complex64;

use super::gcd::gcd;
use super::{CasError, MPoly, Rational};

/// Reduced rational function: `gcd(num, den) = 1` and `den` is monic in lex order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: MPoly,
    den: MPoly,
}

impl RatFunc {
    /// Normalizes `num / den`: removes the gcd and makes the denominator monic.
    pub fn new(num: MPoly, den: MPoly) -> Result<RatFunc, CasError> {
        num.check_same_registry(&den)?;
        if den.is_zero() {
            return Err(CasError::ZeroDenominator);
        }
        let n = num.nvars();
        if num.is_zero() {
            return Ok(RatFunc { num, den: MPoly::one(n) });
        }
        if den.is_constant() {
            let c = den.lc();
            return Ok(RatFunc { num: num.scale(&c.recip()), den: MPoly::one(n) });
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        let c = den.lc().recip();
        Ok(RatFunc { num: num.scale(&c), den: den.scale(&c) })
    }

    pub fn from_poly(p: MPoly) -> RatFunc {
        let n = p.nvars();
        RatFunc { num: p, den: MPoly::one(n) }
    }

    pub fn zero(nvars: usize) -> RatFunc {
        Self::from_poly(MPoly::zero(nvars))
    }

    pub fn one(nvars: usize) -> RatFunc {
        Self::from_poly(MPoly::one(nvars))
    }

    pub fn constant(nvars: usize, c: Rational) -> RatFunc {
        Self::from_poly(MPoly::constant(nvars, c))
    }

    pub fn var(nvars: usize, i: usize) -> RatFunc {
        Self::from_poly(MPoly::var(nvars, i))
    }

    pub fn num(&self) -> &MPoly {
        &self.num
    }

    pub fn den(&self) -> &MPoly {
        &self.den
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn contains_var(&self, v: usize) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn add(&self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::new(self.num.add(&o.num), self.den.clone()).unwrap();
        }
        if o.den.is_one() {
            return RatFunc { num: self.num.add(&o.num.mul(&self.den)), den: self.den.clone() };
        }
        if self.den.is_one() {
            return RatFunc { num: o.num.add(&self.num.mul(&o.den)), den: o.den.clone() };
        }
        let num = self.num.mul(&o.den).add(&o.num.mul(&self.den));
        RatFunc::new(num, self.den.mul(&o.den)).unwrap()
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &RatFunc) -> RatFunc {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RatFunc) -> RatFunc {
        if self.den.is_one() && o.den.is_one() {
            return RatFunc::from_poly(self.num.mul(&o.num));
        }
        RatFunc::new(self.num.mul(&o.num), self.den.mul(&o.den)).unwrap()
    }

    pub fn scale(&self, c: &Rational) -> RatFunc {
        RatFunc { num: self.num.scale(c), den: self.den.clone() }.renormalized()
    }

    fn renormalized(self) -> RatFunc {
        if self.num.is_zero() {
            let n = self.nvars();
            return RatFunc::zero(n);
        }
        self
    }

    pub fn inv(&self) -> Result<RatFunc, CasError> {
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &RatFunc) -> Result<RatFunc, CasError> {
        if o.is_zero() {
            return Err(CasError::ZeroDenominator);
        }
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i32) -> Result<RatFunc, CasError> {
        if e >= 0 {
            Ok(RatFunc { num: self.num.pow(e as u32), den: self.den.pow(e as u32) })
        } else {
            self.inv()?.pow(-e)
        }
    }

    pub fn diff(&self, v: usize) -> RatFunc {
        if self.den.is_one() {
            return RatFunc::from_poly(self.num.diff(v));
        }
        let num = self.num.diff(v).mul(&self.den).sub(&self.num.mul(&self.den.diff(v)));
        RatFunc::new(num, self.den.pow(2)).unwrap()
    }

    /// Composition with every variable replaced by `images[i]` (same target registry).
    pub fn compose(&self, images: &[RatFunc], target_nvars: usize) -> Result<RatFunc, CasError> {
        let (nn, nd) = compose_poly(&self.num, images, target_nvars);
        let (dn, dd) = compose_poly(&self.den, images, target_nvars);
        if dn.is_zero() {
            return Err(CasError::ZeroDenominator);
        }
        RatFunc::new(nn.mul(&dd), nd.mul(&dn))
    }

    /// Substitutes the bound variables; unbound variables pass through.
    pub fn substitute(&self, bindings: &[(usize, RatFunc)]) -> Result<RatFunc, CasError> {
        let n = self.nvars();
        let mut images: Vec<RatFunc> = (0..n).map(|i| RatFunc::var(n, i)).collect();
        for (v, img) in bindings {
            if *v >= n {
                return Err(CasError::UnknownVariable(format!("#{v}")));
            }
            if img.den.is_zero() {
                return Err(CasError::ZeroDenominator);
            }
            images[*v] = img.clone();
        }
        self.compose(&images, n)
    }

    pub fn remap(&self, target_nvars: usize, mapping: &[usize]) -> RatFunc {
        RatFunc::new(self.num.remap(target_nvars, mapping), self.den.remap(target_nvars, mapping))
            .unwrap()
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational, CasError> {
        let d = self.den.eval(point);
        if d.is_zero() {
            return Err(CasError::ZeroDenominator);
        }
        Ok(&self.num.eval(point) / &d)
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, CasError> {
        let d = self.den.eval_f64(point);
        if d == 0.0 || !d.is_finite() {
            return Err(CasError::ZeroDenominator);
        }
        Ok(self.num.eval_f64(point) / d)
    }

    pub fn eval_complex(&self, point: &[Complex64]) -> Complex64 {
        self.num.eval_complex(point) / self.den.eval_complex(point)
    }

    pub fn fmt_with_names(&self, names: &[String]) -> String {
        let n = self.num.fmt_with_names(names);
        if self.den.is_one() {
            return n;
        }
        let d = self.den.fmt_with_names(names);
        let n = if self.num.num_terms() > 1 || n.starts_with('-') { format!("({n})") } else { n };
        let d = if self.den.num_terms() > 1 || self.den.terms()[0].1 != Rational::one() {
            format!("({d})")
        } else {
            d
        };
        format!("{n}/{d}")
    }
}

/// Composes a polynomial with rational images over a common denominator:
/// returns `(N, D)` with `p(images) = N / D`.
fn compose_poly(p: &MPoly, images: &[RatFunc], target: usize) -> (MPoly, MPoly) {
    let n = p.nvars();
    let degs: Vec<u32> = (0..n).map(|v| p.degree_in(v)).collect();
    let mut num_pows: Vec<Vec<MPoly>> = vec![Vec::new(); n];
    let mut den_pows: Vec<Vec<MPoly>> = vec![Vec::new(); n];
    for v in 0..n {
        if degs[v] == 0 {
            continue;
        }
        let mut np = vec![MPoly::one(target)];
        let mut dp = vec![MPoly::one(target)];
        for k in 1..=degs[v] as usize {
            np.push(np[k - 1].mul(images[v].num()));
            dp.push(dp[k - 1].mul(images[v].den()));
        }
        num_pows[v] = np;
        den_pows[v] = dp;
    }
    let mut total = MPoly::zero(target);
    for (e, c) in p.terms() {
        let mut t = MPoly::constant(target, c.clone());
        for v in 0..n {
            if degs[v] == 0 {
                continue;
            }
            let k = e[v] as usize;
            let d = degs[v] as usize;
            if k > 0 {
                t = t.mul(&num_pows[v][k]);
            }
            if d > k && !images[v].den().is_one() {
                t = t.mul(&den_pows[v][d - k]);
            }
        }
        total = total.add(&t);
    }
    let mut den = MPoly::one(target);
    for v in 0..n {
        if degs[v] > 0 && !images[v].den().is_one() {
            den = den.mul(&den_pows[v][degs[v] as usize]);
        }
    }
    (total, den)
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})/({:?})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MPoly {
        MPoly::var(n, i)
    }

    #[test]
    fn common_factor_removed() {
        let one = MPoly::one(1);
        let f = RatFunc::new(&x(1, 0).pow(2) - &one, &x(1, 0) - &one).unwrap();
        assert_eq!(f, RatFunc::from_poly(&x(1, 0) + &one));
    }

    #[test]
    fn zero_numerator() {
        let f = RatFunc::new(MPoly::zero(1), &x(1, 0) + &MPoly::one(1)).unwrap();
        assert!(f.den().is_one());
        assert!(f.is_zero());
    }

    #[test]
    fn content_removed() {
        let f = RatFunc::new(x(1, 0).scale(&Rational::from_int(2)), MPoly::from_int(1, 4)).unwrap();
        assert_eq!(f, RatFunc::from_poly(x(1, 0).scale(&Rational::new(1, 2))));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(matches!(RatFunc::new(x(1, 0), MPoly::zero(1)), Err(CasError::ZeroDenominator)));
    }

    #[test]
    fn substitution_hand_oracle() {
        // x + y with y -> 1/x is (x^2 + 1)/x; dividing by y = 1/x gives x^2 + 1.
        let y_img = RatFunc::new(MPoly::one(2), x(2, 0)).unwrap();
        let sum = RatFunc::from_poly(&x(2, 0) + &x(2, 1));
        let s = sum.substitute(&[(1, y_img.clone())]).unwrap();
        assert_eq!(s, RatFunc::new(&x(2, 0).pow(2) + &MPoly::one(2), x(2, 0)).unwrap());
        let f = RatFunc::new(&x(2, 0) + &x(2, 1), x(2, 1)).unwrap();
        let g = f.substitute(&[(1, y_img)]).unwrap();
        assert_eq!(g, RatFunc::from_poly(&x(2, 0).pow(2) + &MPoly::one(2)));
    }

    #[test]
    fn identity_binding() {
        let f = RatFunc::var(1, 0);
        assert_eq!(f.substitute(&[(0, RatFunc::var(1, 0))]).unwrap(), f);
    }

    #[test]
    fn substitution_to_zero_denominator() {
        let f = RatFunc::new(MPoly::one(1), x(1, 0)).unwrap();
        assert!(matches!(
            f.substitute(&[(0, RatFunc::zero(1))]),
            Err(CasError::ZeroDenominator)
        ));
    }

    #[test]
    fn hill_function_invariance_under_fourth_root() {
        // vars: Z, k1, kt. 1/(1+Z^4) with Z -> -(k1/kt) Z.
        let n = 3;
        let one = MPoly::one(n);
        let f = RatFunc::new(one.clone(), &one + &x(n, 0).pow(4)).unwrap();
        let img = RatFunc::new(x(n, 1).mul(&x(n, 0)).neg(), x(n, 2)).unwrap();
        let g = f.substitute(&[(0, img)]).unwrap();
        let expect = RatFunc::new(
            x(n, 2).pow(4),
            &x(n, 2).pow(4) + &x(n, 1).pow(4).mul(&x(n, 0).pow(4)),
        )
        .unwrap();
        assert_eq!(g, expect);
        // kt = k1 recovers the original.
        let back = g.substitute(&[(2, RatFunc::var(n, 1))]).unwrap();
        assert_eq!(back, f);
    }
}
