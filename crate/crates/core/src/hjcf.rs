//! Hirzebruch–Jung continued fractions and closed-form counts.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::notation::{to_u64, Chain, Fraction};

/// Expands `n/q = c1 - 1/(c2 - 1/(...))` with every `ci >= 2`.
pub fn hj_expand(f: &Fraction) -> Result<Chain> {
    let (mut n, mut q) = (f.n().clone(), f.q().clone());
    let mut entries = Vec::new();
    loop {
        let c = n.div_ceil(&q);
        let r = &c * &q - &n;
        entries.push(to_u64(&c)?);
        if r.is_zero() {
            break;
        }
        n = std::mem::replace(&mut q, r);
    }
    Chain::new(entries)
}

/// `(n, q)` with `n/q = [c1,...,cs]`, evaluated from the back.
pub fn hj_evaluate_entries(entries: &[u64]) -> (BigInt, BigInt) {
    let mut num = BigInt::one();
    let mut den = BigInt::zero();
    for &c in entries.iter().rev() {
        let next = BigInt::from(c) * &num - &den;
        den = std::mem::replace(&mut num, next);
    }
    (num, den)
}

pub fn hj_evaluate(c: &Chain) -> Fraction {
    let (n, q) = hj_evaluate_entries(c.entries());
    Fraction::new(n, q).expect("chains with entries >= 2 evaluate to reduced fractions")
}

/// Returns `(q', n')` with `1 <= q' < n` (or `q' = 0` when `n = 1`) and
/// `q q' = n n' + 1`.
pub fn mod_inverse(q: &BigInt, n: &BigInt) -> Result<(BigInt, BigInt)> {
    if !n.is_positive() || q.is_negative() {
        return Err(Error::InvalidArgument(format!("mod_inverse({q}, {n})")));
    }
    let e = q.extended_gcd(n);
    if !e.gcd.is_one() {
        return Err(Error::InvalidFraction {
            n: n.to_string(),
            q: q.to_string(),
            reason: "n and q are not coprime",
        });
    }
    let qi = e.x.mod_floor(n);
    let ni = (q * &qi - 1) / n;
    Ok((qi, ni))
}

/// `m = 2 + sum (ci - 2)`.
pub fn multiplicity(c: &Chain) -> u64 {
    2 + c.entries().iter().map(|&x| x - 2).sum::<u64>()
}

/// `binom(2(m-2), m-2) / (m-1)`, the Catalan number `C_{m-2}`.
pub fn catalan_bound(m: u64) -> Result<BigInt> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "catalan_bound needs m >= 2, got {m}"
        )));
    }
    let k = m - 2;
    let mut binom = BigInt::one();
    for i in 0..k {
        binom = binom * BigInt::from(2 * k - i) / BigInt::from(i + 1);
    }
    Ok(binom / BigInt::from(m - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Sn1Facts {
    pub t1_dim: u64,
    pub artin_dim: u64,
    pub ksb_codim: u64,
    pub pair_space_dim: u64,
}

/// Closed-form dimensions attached to `1/n(1,1)`.
pub fn sn1_facts(n: u64) -> Result<Sn1Facts> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "sn1_facts needs n >= 3, got {n}"
        )));
    }
    Ok(Sn1Facts {
        t1_dim: 2 * n - 4,
        artin_dim: n - 1,
        ksb_codim: n - 3,
        pair_space_dim: 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(n: u64, q: u64) -> Fraction {
        Fraction::new(n, q).unwrap()
    }

    fn chain(v: &[u64]) -> Chain {
        Chain::new(v.to_vec()).unwrap()
    }

    #[test]
    fn expand_examples() {
        assert_eq!(hj_expand(&frac(4, 1)).unwrap(), chain(&[4]));
        assert_eq!(hj_expand(&frac(6, 5)).unwrap(), chain(&[2; 5]));
        assert_eq!(hj_expand(&frac(19, 7)).unwrap(), chain(&[3, 4, 2]));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(hj_evaluate(&chain(&[4, 3, 2])), frac(18, 5));
        assert_eq!(hj_evaluate(&chain(&[2])), frac(2, 1));
        assert_eq!(hj_evaluate(&chain(&[2, 5, 3])), frac(25, 14));
    }

    #[test]
    fn inverse_examples() {
        let b = |v: i64| BigInt::from(v);
        assert_eq!(mod_inverse(&b(5), &b(7)).unwrap().0, b(3));
        assert_eq!(mod_inverse(&b(1), &b(9)).unwrap(), (b(1), b(0)));
        assert_eq!(mod_inverse(&b(2), &b(5)).unwrap(), (b(3), b(1)));
        assert!(mod_inverse(&b(2), &b(4)).is_err());
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity(&chain(&[4])), 4);
        assert_eq!(multiplicity(&chain(&[2, 2, 2])), 2);
        assert_eq!(multiplicity(&chain(&[4, 3, 2])), 5);
    }

    #[test]
    fn catalan_examples() {
        let got: Vec<BigInt> = (2..=7).map(|m| catalan_bound(m).unwrap()).collect();
        let want: Vec<BigInt> = [1, 1, 2, 5, 14, 42].into_iter().map(BigInt::from).collect();
        assert_eq!(got, want);
        assert!(catalan_bound(1).is_err());
    }

    #[test]
    fn sn1_examples() {
        let f = |n| {
            let s = sn1_facts(n).unwrap();
            (s.t1_dim, s.artin_dim, s.ksb_codim, s.pair_space_dim)
        };
        assert_eq!(f(4), (4, 3, 1, 2));
        assert_eq!(f(3), (2, 2, 0, 2));
        assert_eq!(f(10), (16, 9, 7, 2));
        assert!(sn1_facts(2).is_err());
    }

    #[test]
    fn sn1_t1_minus_codim_is_artin() {
        for n in 3..50 {
            let s = sn1_facts(n).unwrap();
            assert_eq!(s.t1_dim - s.ksb_codim, s.artin_dim);
        }
    }
}
