use std::collections::BTreeMap;

use crate::ansatz::LinearCoefficientSystem;
use crate::cas::Rational;

/// Basis of `{v : A v = 0}` for sparse rows over ℚ, one vector per free column.
pub fn nullspace_rows(ncols: usize, rows: &[Vec<(usize, Rational)>]) -> Vec<Vec<Rational>> {
    // Reduced row echelon form, rows kept sparse.
    let mut pivots: BTreeMap<usize, BTreeMap<usize, Rational>> = BTreeMap::new();
    for row in rows {
        let mut r: BTreeMap<usize, Rational> = BTreeMap::new();
        for (c, v) in row {
            if !v.is_zero() {
                let e = r.entry(*c).or_insert_with(Rational::zero);
                *e += v;
            }
        }
        r.retain(|_, v| !v.is_zero());
        loop {
            let Some(c) = r.keys().find(|c| pivots.contains_key(c)).copied() else { break };
            let f = r[&c].clone();
            for (cc, pv) in &pivots[&c] {
                let e = r.entry(*cc).or_insert_with(Rational::zero);
                *e -= &(&f * pv);
            }
            r.retain(|_, v| !v.is_zero());
        }
        let Some((&p, lead)) = r.iter().next() else { continue };
        let inv = lead.recip();
        for v in r.values_mut() {
            *v = &*v * &inv;
        }
        // Keep earlier pivot rows reduced against the new pivot.
        for prow in pivots.values_mut() {
            if let Some(f) = prow.get(&p).cloned() {
                for (cc, v) in &r {
                    let e = prow.entry(*cc).or_insert_with(Rational::zero);
                    *e -= &(&f * v);
                }
                prow.retain(|_, v| !v.is_zero());
            }
        }
        pivots.insert(p, r);
    }
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains_key(c)) {
        let mut v = vec![Rational::zero(); ncols];
        v[free] = Rational::one();
        for (p, row) in &pivots {
            if let Some(a) = row.get(&free) {
                v[*p] = -a.clone();
            }
        }
        out.push(v);
    }
    out
}

pub fn nullspace(lin: &LinearCoefficientSystem) -> Vec<Vec<Rational>> {
    nullspace_rows(lin.columns.len(), &lin.rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn zero_matrix_is_everything() {
        assert_eq!(nullspace_rows(3, &[]).len(), 3);
    }

    #[test]
    fn small_kernel() {
        // x + y + z = 0, x - z = 0 → span (1, -2, 1).
        let rows = vec![vec![(0, r(1)), (1, r(1)), (2, r(1))], vec![(0, r(1)), (2, r(-1))]];
        let ns = nullspace_rows(3, &rows);
        assert_eq!(ns, vec![vec![r(1), r(-2), r(1)]]);
        for v in &ns {
            for row in &rows {
                let s = row.iter().fold(Rational::zero(), |acc, (c, a)| acc + &(a * &v[*c]));
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn full_rank_is_trivial() {
        let rows = vec![vec![(0, r(2))], vec![(1, r(3)), (0, r(1))]];
        assert!(nullspace_rows(2, &rows).is_empty());
    }
}
