//! The cyclic double cover `S_{N,Q} -> S^d_{n,q}` of a dihedral quotient.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjcf::{hj_expand, mod_inverse};
use crate::notation::{Chain, Fraction};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverParams {
    pub big_n: BigInt,
    pub big_q: BigInt,
    /// `q q' = n n' + 1`.
    pub n_prime: BigInt,
    pub q_prime: BigInt,
}

impl CoverParams {
    pub fn fraction(&self) -> Result<Fraction> {
        Fraction::new(self.big_n.clone(), self.big_q.clone())
    }
}

/// `N = 2q(n-q)` and `Q = 2n'(n-q) + 1`.
pub fn double_cover_params(n: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<CoverParams> {
    let f = Fraction::new(n, q)?;
    let (n, q) = (f.n(), f.q());
    let (q_prime, n_prime) = mod_inverse(q, n)?;
    let diff: BigInt = n - q;
    let big_n: BigInt = BigInt::from(2) * q * &diff;
    let big_q: BigInt = BigInt::from(2) * &n_prime * &diff + 1;
    if !((&big_q * &big_q - BigInt::one()) % &big_n).is_zero() {
        return Err(Error::Inconsistent(format!("Q^2 != 1 mod N for {f}")));
    }
    Ok(CoverParams {
        big_n,
        big_q,
        n_prime,
        q_prime,
    })
}

/// `[cs,...,c2, 2(c1-1), c2,...,cs]` for `n/q = [c1,...,cs]`.
pub fn cover_chain(n: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Chain> {
    let c = hj_expand(&Fraction::new(n, q)?)?;
    let e = c.entries();
    let mut out: Vec<u64> = e[1..].iter().rev().copied().collect();
    out.push(2 * (e[0] - 1));
    out.extend_from_slice(&e[1..]);
    Chain::new(out)
}

/// `(n, q)` with `q = N/g` and `n = q + g/2`, where `g = gcd(N, Q-1)`.
/// Fails unless `(N, Q)` comes from [`double_cover_params`].
pub fn inverse_params(
    big_n: impl Into<BigInt>,
    big_q: impl Into<BigInt>,
) -> Result<(BigInt, BigInt)> {
    let (big_n, big_q) = (big_n.into(), big_q.into());
    let invalid = |reason| Error::InvalidCover {
        big_n: big_n.to_string(),
        big_q: big_q.to_string(),
        reason,
    };
    if !big_n.is_positive() || big_n.is_odd() {
        return Err(invalid("N must be positive and even"));
    }
    if !big_q.is_positive() || big_q >= big_n {
        return Err(invalid("Q must satisfy 1 <= Q < N"));
    }
    if !((&big_q * &big_q - BigInt::one()) % &big_n).is_zero() {
        return Err(invalid("Q^2 must be 1 mod N"));
    }
    let g = big_n.gcd(&(&big_q - BigInt::one()));
    if g.is_odd() {
        return Err(invalid("gcd(N, Q-1) is odd"));
    }
    let q: BigInt = &big_n / &g;
    let n: BigInt = &q + &g / 2;
    match double_cover_params(n.clone(), q.clone()) {
        Ok(p) if p.big_n == big_n && p.big_q == big_q => Ok((n, q)),
        _ => Err(invalid("not the cover of a dihedral quotient")),
    }
}
