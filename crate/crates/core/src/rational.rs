//! Exact rational helpers. Rationals are always written as `p/q`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `p/q` with `q >= 1`, including `1/1` and `0/1`.
pub fn fmt_q(v: &Q) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

/// Accepts `p/q` or a bare integer.
pub fn parse_q(s: &str) -> Result<Q> {
    let bad = || Error::Parse {
        pos: 0,
        msg: format!("not a rational number: {s:?}"),
    };
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

/// Closed interval `[lo, hi]` of rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QRange {
    pub lo: Q,
    pub hi: Q,
}

impl QRange {
    pub fn new(lo: Q, hi: Q) -> Self {
        QRange { lo, hi }
    }

    pub fn contains(&self, v: &Q) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    /// `a..b`, `a,b` or a single value.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = if s.contains("..") {
            s.splitn(2, "..").collect()
        } else if s.contains(',') {
            s.splitn(2, ',').collect()
        } else {
            vec![s, s]
        };
        Ok(QRange::new(parse_q(parts[0])?, parse_q(parts[1])?))
    }

    pub fn unit() -> Self {
        QRange::new(Q::zero(), Q::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_and_parse() {
        assert_eq!(fmt_q(&q(6, 4)), "3/2");
        assert_eq!(fmt_q(&qi(1)), "1/1");
        assert_eq!(fmt_q(&qi(0)), "0/1");
        assert_eq!(parse_q(" 3 / 5 ").unwrap(), q(3, 5));
        assert_eq!(parse_q("2").unwrap(), qi(2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn ranges() {
        let r = QRange::parse("1/2..1").unwrap();
        assert!(r.contains(&q(3, 4)) && r.contains(&qi(1)) && !r.contains(&q(1, 3)));
        assert_eq!(QRange::parse("2/3").unwrap(), QRange::new(q(2, 3), q(2, 3)));
    }
}
