use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Monomial order over the unknowns. Variable 0 ranks highest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TermOrder {
    Degrevlex,
    Lex,
    /// Consecutive variable blocks, each compared by degrevlex; earlier blocks
    /// dominate. `[1, n]` eliminates variable 0.
    Block { sizes: Vec<usize> },
}

fn degrevlex(a: &[u16], b: &[u16]) -> Ordering {
    let da: u32 = a.iter().map(|&x| x as u32).sum();
    let db: u32 = b.iter().map(|&x| x as u32).sum();
    match da.cmp(&db) {
        Ordering::Equal => {}
        o => return o,
    }
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            Ordering::Equal => continue,
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    Ordering::Equal
}

impl TermOrder {
    pub fn cmp(&self, a: &[u16], b: &[u16]) -> Ordering {
        match self {
            TermOrder::Degrevlex => degrevlex(a, b),
            TermOrder::Lex => a.cmp(b),
            TermOrder::Block { sizes } => {
                let mut start = 0;
                for &s in sizes {
                    let end = (start + s).min(a.len());
                    match degrevlex(&a[start..end], &b[start..end]) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                    start = end;
                }
                if start < a.len() {
                    degrevlex(&a[start..], &b[start..])
                } else {
                    Ordering::Equal
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            TermOrder::Degrevlex => "degrevlex".into(),
            TermOrder::Lex => "lex".into(),
            TermOrder::Block { sizes } => format!("block{sizes:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrevlex_breaks_ties_on_last_variable() {
        let o = TermOrder::Degrevlex;
        // x*z < y^2 in degrevlex with x > y > z.
        assert_eq!(o.cmp(&[1, 0, 1], &[0, 2, 0]), Ordering::Less);
        assert_eq!(o.cmp(&[2, 0, 0], &[0, 0, 1]), Ordering::Greater);
    }

    #[test]
    fn lex_and_block() {
        assert_eq!(TermOrder::Lex.cmp(&[1, 0], &[0, 5]), Ordering::Greater);
        let b = TermOrder::Block { sizes: vec![1, 2] };
        assert_eq!(b.cmp(&[1, 0, 0], &[0, 3, 3]), Ordering::Greater);
        assert_eq!(b.cmp(&[0, 1, 0], &[0, 0, 2]), Ordering::Less);
    }
}
