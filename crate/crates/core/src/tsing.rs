//! T-singularities `1/(rn^2)(1, arn-1)`: recognition, generation, M-chains.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::hjcf::{hj_evaluate_entries, hj_expand};
use crate::lattice::CurveConfig;
use crate::notation::{Chain, SingularityType, TParams};

/// Undoes the construction moves until a base chain `[4]` or
/// `[3,2,...,2,3]` is reached. Returns `r`.
pub fn t_recognize_peeling(entries: &[u64]) -> Option<u64> {
    let mut c = entries.to_vec();
    loop {
        let len = c.len();
        if c == [4] {
            return Some(1);
        }
        if len >= 2 && c[0] == 3 && c[len - 1] == 3 && c[1..len - 1].iter().all(|&x| x == 2) {
            return Some(len as u64);
        }
        if len < 2 {
            return None;
        }
        if c[0] == 2 && c[len - 1] >= 3 {
            c.remove(0);
            *c.last_mut().unwrap() -= 1;
        } else if c[len - 1] == 2 && c[0] >= 3 {
            c.pop();
            c[0] -= 1;
        } else {
            return None;
        }
    }
}

/// Finds `(r, n, a)` with `hj_evaluate(entries) = (rn^2, arn-1)` by trying
/// every square divisor `n^2` of `N` with `n | gcd(N, Q+1)`.
pub fn t_recognize_arithmetic(entries: &[u64]) -> Option<TParams> {
    let (big_n, big_q) = hj_evaluate_entries(entries);
    let qp1: BigInt = &big_q + 1;
    let g = big_n.gcd(&qp1);
    let mut n = BigInt::from(2);
    while &n * &n <= big_n && n <= g {
        let nn = &n * &n;
        if g.is_multiple_of(&n) && big_n.is_multiple_of(&nn) {
            let r = &big_n / &nn;
            let rn = &r * &n;
            if qp1.is_multiple_of(&rn) {
                let a = &qp1 / &rn;
                if !a.is_zero() && a < n && a.gcd(&n).is_one() {
                    return Some(TParams {
                        r: r.to_u64()?,
                        n: n.to_u64()?,
                        a: a.to_u64()?,
                    });
                }
            }
        }
        n += 1;
    }
    None
}

/// Runs both recognizers and reports a disagreement as an error.
pub fn t_recognize(c: &Chain) -> Result<Option<TParams>> {
    let peel = t_recognize_peeling(c.entries());
    let arith = t_recognize_arithmetic(c.entries());
    match (peel, arith) {
        (None, None) => Ok(None),
        (Some(r), Some(p)) if p.r == r => Ok(Some(p)),
        _ => Err(Error::RecognizerDisagreement {
            chain: c.to_string(),
            peeling: format!("{peel:?}"),
            arithmetic: format!("{arith:?}"),
        }),
    }
}

/// The chain of `T(r,n,a)`.
pub fn t_chain(p: TParams) -> Result<Chain> {
    hj_expand(&p.fraction())
}

/// All T-chains of weight `sum ci <= budget`, built from the base chains by
/// the prepend/append moves, sorted by weight and then lexicographically.
pub fn t_generate(budget: u64) -> Result<Vec<(Chain, TParams)>> {
    let mut found: BTreeSet<(u64, Vec<u64>)> = BTreeSet::new();
    let mut frontier: Vec<Vec<u64>> = Vec::new();
    if budget >= 4 {
        frontier.push(vec![4]);
    }
    let mut r = 2;
    while 6 + 2 * (r - 2) <= budget {
        let mut base = vec![3];
        base.extend(std::iter::repeat_n(2, (r - 2) as usize));
        base.push(3);
        frontier.push(base);
        r += 1;
    }
    while let Some(c) = frontier.pop() {
        let w: u64 = c.iter().sum();
        if !found.insert((w, c.clone())) {
            continue;
        }
        if w + 3 <= budget {
            let mut left = vec![2];
            left.extend_from_slice(&c);
            *left.last_mut().unwrap() += 1;
            frontier.push(left);
            let mut right = c.clone();
            right[0] += 1;
            right.push(2);
            frontier.push(right);
        }
    }
    found
        .into_iter()
        .map(|(_, c)| {
            let chain = Chain::new(c)?;
            let p = t_recognize(&chain)?.ok_or_else(|| {
                Error::Inconsistent(format!("generated chain {chain} is not recognized"))
            })?;
            Ok((chain, p))
        })
        .collect()
}

/// `r` copies of the chain of `1/n^2(1, an-1)` joined by `(-1)`-curves.
#[derive(Clone, Debug)]
pub struct MChain {
    pub piece: Chain,
    pub r: u64,
    /// Self-intersections along the configuration.
    pub self_ints: Vec<i64>,
    pub config: CurveConfig,
    /// Curve indices of each copy of `piece`.
    pub groups: Vec<Vec<usize>>,
}

pub fn m_chain(p: TParams) -> Result<MChain> {
    let p = TParams::new(p.r, p.n, p.a)?;
    let piece = t_chain(TParams::new(1, p.n, p.a)?)?;
    let mut entries = Vec::new();
    let mut groups = Vec::new();
    for i in 0..p.r {
        if i > 0 {
            entries.push(1);
        }
        let start = entries.len();
        entries.extend_from_slice(piece.entries());
        groups.push((start..entries.len()).collect());
    }
    let config = CurveConfig::chain(&entries, 0, 0);
    Ok(MChain {
        piece,
        r: p.r,
        self_ints: entries.iter().map(|&c| -(c as i64)).collect(),
        config,
        groups,
    })
}

/// Contracts `(-1)`-curves of a chain until none is left.
pub fn blow_down_chain(self_ints: &[i64]) -> Vec<i64> {
    let mut c = self_ints.to_vec();
    while let Some(i) = c.iter().position(|&x| x == -1) {
        if c.len() == 1 {
            return Vec::new();
        }
        c.remove(i);
        if i > 0 {
            c[i - 1] += 1;
        }
        if i < c.len() {
            c[i] += 1;
        }
    }
    c
}

/// Dimension `r` of the KSB deformation space of a Du Val or T point.
pub fn ksb_local_dim(t: &SingularityType) -> Result<u64> {
    t.ksb_r()
        .ok_or_else(|| Error::NoKsbSmoothing(t.to_string()))
}

/// Replaces `Cyclic` by `T` when the fraction is of T type.
pub fn refine(t: SingularityType) -> Result<SingularityType> {
    if let SingularityType::Cyclic(f) = &t {
        if let Some(p) = t_recognize(&hj_expand(f)?)? {
            return Ok(SingularityType::T(p));
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::Fraction;

    fn chain(v: &[u64]) -> Chain {
        Chain::new(v.to_vec()).unwrap()
    }

    fn tp(r: u64, n: u64, a: u64) -> TParams {
        TParams::new(r, n, a).unwrap()
    }

    #[test]
    fn recognize_examples() {
        assert_eq!(t_recognize(&chain(&[4])).unwrap(), Some(tp(1, 2, 1)));
        assert_eq!(t_recognize(&chain(&[3, 3])).unwrap(), Some(tp(2, 2, 1)));
        assert_eq!(t_recognize(&chain(&[2, 5, 3])).unwrap(), Some(tp(1, 5, 3)));
        assert_eq!(t_recognize(&chain(&[3, 2, 3])).unwrap(), Some(tp(3, 2, 1)));
        assert_eq!(t_recognize(&chain(&[4, 3, 2])).unwrap(), Some(tp(2, 3, 1)));
        assert_eq!(t_recognize(&chain(&[2, 2, 2])).unwrap(), None);
        assert_eq!(t_recognize(&chain(&[5])).unwrap(), None);
    }

    #[test]
    fn reversal_flips_a() {
        assert_eq!(t_recognize(&chain(&[2, 3, 4])).unwrap(), Some(tp(2, 3, 2)));
    }

    #[test]
    fn generate_small_budgets() {
        let g4 = t_generate(4).unwrap();
        assert_eq!(g4, vec![(chain(&[4]), tp(1, 2, 1))]);
        // Each move adds 3 to the weight, so [2,5] and [5,2] first appear at 7.
        let g6: Vec<Chain> = t_generate(6).unwrap().into_iter().map(|x| x.0).collect();
        assert_eq!(g6, vec![chain(&[4]), chain(&[3, 3])]);
        let g7: Vec<(Chain, TParams)> = t_generate(7).unwrap();
        assert_eq!(
            g7,
            vec![
                (chain(&[4]), tp(1, 2, 1)),
                (chain(&[3, 3]), tp(2, 2, 1)),
                (chain(&[2, 5]), tp(1, 3, 2)),
                (chain(&[5, 2]), tp(1, 3, 1)),
            ]
        );
        assert!(t_generate(8)
            .unwrap()
            .contains(&(chain(&[3, 2, 3]), tp(3, 2, 1))));
        assert!(t_generate(3).unwrap().is_empty());
    }

    #[test]
    fn m_chain_examples() {
        let m = m_chain(tp(1, 3, 1)).unwrap();
        assert_eq!(m.self_ints, vec![-5, -2]);
        let m = m_chain(tp(2, 2, 1)).unwrap();
        assert_eq!(m.self_ints, vec![-4, -1, -4]);
        assert_eq!(m.groups, vec![vec![0], vec![2]]);
        let m = m_chain(tp(3, 2, 1)).unwrap();
        assert_eq!(m.self_ints, vec![-4, -1, -4, -1, -4]);
    }

    #[test]
    fn m_chain_blows_down_to_t_chain() {
        for (r, n, a) in [(2, 2, 1), (3, 2, 1), (2, 3, 1), (2, 5, 2), (4, 3, 2)] {
            let p = tp(r, n, a);
            let m = m_chain(p).unwrap();
            let t: Vec<i64> = t_chain(p)
                .unwrap()
                .entries()
                .iter()
                .map(|&c| -(c as i64))
                .collect();
            assert_eq!(blow_down_chain(&m.self_ints), t, "{p}");
        }
    }

    #[test]
    fn blow_down_handles_ends() {
        assert_eq!(blow_down_chain(&[-1, -3]), vec![-2]);
        assert_eq!(blow_down_chain(&[-3, -1]), vec![-2]);
        assert_eq!(blow_down_chain(&[-2, -1]), Vec::<i64>::new());
        assert_eq!(blow_down_chain(&[-1]), Vec::<i64>::new());
    }

    #[test]
    fn local_dims() {
        assert_eq!(ksb_local_dim(&SingularityType::T(tp(1, 2, 1))).unwrap(), 1);
        assert_eq!(ksb_local_dim(&SingularityType::DuValA(5)).unwrap(), 5);
        let c = SingularityType::Cyclic(Fraction::new(5, 2).unwrap());
        assert!(matches!(ksb_local_dim(&c), Err(Error::NoKsbSmoothing(_))));
    }

    #[test]
    fn refine_cyclic() {
        let c = SingularityType::Cyclic(Fraction::new(18, 5).unwrap());
        assert_eq!(refine(c).unwrap(), SingularityType::T(tp(2, 3, 1)));
        let c = SingularityType::Cyclic(Fraction::new(7, 3).unwrap());
        assert_eq!(refine(c.clone()).unwrap(), c);
    }
}
