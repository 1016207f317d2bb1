//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use quotsing::deform::{
    def_components, def_ksb_pair_components_cyclic, def_ksb_pair_components_dihedral, ksba_search,
    plt_rigidity, triviality_lemmas_check, verify_theorem_1,
};
use quotsing::dihedral::{cover_chain, double_cover_params, inverse_params};
use quotsing::hjcf::{catalan_bound, hj_evaluate, hj_expand, multiplicity, sn1_facts};
use quotsing::lattice::{cartier_index, log_discrepancy_solve, Curve, CurveConfig, Origin};
use quotsing::modgen::{
    dihedral_cross_check, enumerate_q_modifications, CurveLabel, ModKey, Modification,
};
use quotsing::rational::{q, qi};
use quotsing::tsing::{t_chain, t_recognize_arithmetic, t_recognize_peeling};
use quotsing::{Chain, Fraction, GraphKind, PairGraph, SingularityType, TParams, Q};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn chain(v: &[u64]) -> Chain {
    Chain::new(v.to_vec()).expect("test chains have entries >= 2")
}

fn frac(n: u64, q: u64) -> Fraction {
    Fraction::new(n, q).expect("coprime")
}

/// Chains with entries >= 2, weight <= `max_weight`, excess `Σ(c-2)` <=
/// `max_excess` and length <= `max_len`.
fn chains(max_weight: u64, max_excess: u64, max_len: usize) -> Vec<Vec<u64>> {
    fn go(cur: &mut Vec<u64>, w: u64, e: u64, lim: (u64, u64, usize), out: &mut Vec<Vec<u64>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == lim.2 {
            return;
        }
        let mut c = 2;
        while w + c <= lim.0 && e + c - 2 <= lim.1 {
            cur.push(c);
            go(cur, w + c, e + c - 2, lim, out);
            cur.pop();
            c += 1;
        }
    }
    let mut out = Vec::new();
    go(
        &mut Vec::new(),
        0,
        0,
        (max_weight, max_excess, max_len),
        &mut out,
    );
    out
}

fn c1_hj_round_trip() -> Outcome {
    let mut count = 0;
    for n in 2..=500u64 {
        for q in 1..n {
            if n.gcd(&q) != 1 {
                continue;
            }
            let f = frac(n, q);
            let c = hj_expand(&f).map_err(err)?;
            ensure(c.entries().iter().all(|&x| x >= 2), || format!("{f}: {c}"))?;
            ensure(hj_evaluate(&c) == f, || format!("{f} does not round-trip"))?;
            let rev = hj_expand(&f.swapped()).map_err(err)?;
            ensure(rev == c.reversed(), || format!("{f}: reversal law fails"))?;
            count += 1;
        }
    }
    Ok(format!("{count} fractions"))
}

fn c2_t_recognition() -> Outcome {
    let all = chains(30, u64::MAX, usize::MAX);
    let mut ts = 0;
    for c in &all {
        let peel = t_recognize_peeling(c);
        let arith = t_recognize_arithmetic(c);
        ensure(peel == arith.map(|p| p.r), || {
            format!("{c:?}: {peel:?} vs {arith:?}")
        })?;
        ts += usize::from(peel.is_some());
    }
    for r in 1..=4u64 {
        for n in 2..=6u64 {
            for a in 1..n {
                if a.gcd(&n) != 1 {
                    continue;
                }
                let p = TParams::new(r, n, a).map_err(err)?;
                let f = hj_evaluate(&t_chain(p).map_err(err)?);
                let want = frac(r * n * n, a * r * n - 1);
                ensure(f == want, || format!("{p}: {f}"))?;
            }
        }
    }
    Ok(format!("{} chains, {ts} T-chains", all.len()))
}

fn c3_sn1_facts() -> Outcome {
    for n in 3..=10u64 {
        let s = sn1_facts(n).map_err(err)?;
        let got = (s.t1_dim, s.artin_dim, s.ksb_codim, s.pair_space_dim);
        ensure(got == (2 * n - 4, n - 1, n - 3, 2), || {
            format!("n={n}: {got:?}")
        })?;
        let pair = def_ksb_pair_components_cyclic(&frac(n, 1)).map_err(err)?;
        let max = pair.iter().map(|r| r.dimension).max();
        ensure(max == Some(2), || {
            format!("n={n}: max pair dimension {max:?}")
        })?;
    }
    let dims: Vec<u64> = def_components(&chain(&[4]))
        .map_err(err)?
        .iter()
        .map(|r| r.dimension)
        .collect();
    ensure(dims == [1, 3], || format!("[4]: dimensions {dims:?}"))?;
    Ok("n = 3..10".into())
}

fn c4_catalan() -> Outcome {
    let all: Vec<Vec<u64>> = chains(14, 4, usize::MAX);
    let mut attained = BTreeSet::new();
    for c in &all {
        let ch = chain(c);
        let m = multiplicity(&ch);
        let count = def_components(&ch).map_err(err)?.len();
        let bound = catalan_bound(m).map_err(err)?;
        ensure(BigInt::from(count) <= bound, || {
            format!("{c:?}: {count} components, bound {bound}")
        })?;
        if BigInt::from(count) == bound {
            attained.insert(m);
        }
    }
    let four = def_components(&chain(&[4])).map_err(err)?.len();
    ensure(four == 2, || format!("[4] has {four} components"))?;
    ensure((3..=5).all(|m| attained.contains(&m)), || {
        format!("equality attained only for m in {attained:?}")
    })?;
    Ok(format!("{} chains", all.len()))
}

fn c5_cyclic_pairs() -> Outcome {
    let all = chains(u64::MAX, 4, 5);
    for c in &all {
        let ch = chain(c);
        ensure(verify_theorem_1(&ch).map_err(err)?, || {
            format!("{c:?}: counts differ")
        })?;
        let pair = def_ksb_pair_components_cyclic(&hj_evaluate(&ch)).map_err(err)?;
        ensure(pair.iter().all(|r| r.generic_fiber.is_empty()), || {
            format!("{c:?}: singular generic fiber")
        })?;
    }
    Ok(format!("{} chains of length <= 5", all.len()))
}

fn c6_dihedral_pairs() -> Outcome {
    let tails = chains(u64::MAX, 3, 3);
    let mut graphs = 0;
    for c1 in 2..=4u64 {
        let mut inputs: Vec<Vec<u64>> = vec![vec![c1]];
        inputs.extend(tails.iter().map(|t| {
            let mut v = vec![c1];
            v.extend(t);
            v
        }));
        for c in inputs {
            let ch = chain(&c);
            let g = PairGraph::new(GraphKind::DihedralD, ch.clone());
            let check = dihedral_cross_check(&g, false).map_err(err)?;
            let want = if c.len() == 1 {
                1
            } else {
                def_components(&chain(&c[1..])).map_err(err)?.len()
            };
            let pair = def_ksb_pair_components_dihedral(&hj_evaluate(&ch)).map_err(err)?;
            ensure(check.pair_relevant == want && pair.len() == want, || {
                format!(
                    "{g}: {} / {} pair components, expected {want}",
                    check.pair_relevant,
                    pair.len()
                )
            })?;
            let two = vec![(SingularityType::DuValA(1), 1); 2];
            ensure(pair.iter().all(|r| r.generic_fiber == two), || {
                format!("{g}: generic fiber")
            })?;
            graphs += 1;
        }
    }
    Ok(format!("{graphs} forks, c1 <= 4, s <= 4"))
}

fn c7_plt() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut done = 0;
    while done < 20 {
        let n: u64 = rng.gen_range(2..=60);
        let q: u64 = rng.gen_range(1..n);
        if n.gcd(&q) != 1 {
            continue;
        }
        let v = plt_rigidity(&frac(n, q)).map_err(err)?;
        ensure(v.rigid && v.cartier_index == BigInt::from(n), || {
            format!("{n}/{q}: {v:?}")
        })?;
        done += 1;
    }
    for c in [&[4][..], &[3, 4, 2], &[2, 5, 3], &[2, 2]] {
        for (kind, want) in [(GraphKind::CyclicD, 1), (GraphKind::DihedralD, 2)] {
            let g = PairGraph::new(kind, chain(c));
            let cfg = CurveConfig::minimal_resolution(&g);
            let idx = cartier_index(&cfg, &cfg.uniform_weights(&qi(1))).map_err(err)?;
            ensure(idx == BigInt::from(want), || format!("{g}: index {idx}"))?;
        }
    }
    Ok("20 plt pairs".into())
}

fn c8_ksba_series() -> Outcome {
    for c in 2..=6u64 {
        let g = PairGraph::new(GraphKind::CyclicB, chain(&[4, c]));
        let r = ksba_search(&g, None).map_err(err)?;
        let d = q(2 * c as i64 - 3, 2 * c as i64 - 1);
        ensure(
            r.iter().any(|r| {
                r.modification.target() == format!("* - [4/1] - {c}")
                    && r.d_value == Some(d.clone())
            }),
            || format!("{g}: no [4/1] solution"),
        )?;
    }
    let series: [(&[u64], usize, [&str; 2]); 2] = [
        (&[4, 3], 2, ["4/1", "18/5"]),
        (&[2, 5, 3], 1, ["9/5", "25/14"]),
    ];
    for (head, extra, boxes) in series {
        for n in 0..=2 {
            let mut c = head.to_vec();
            c.extend(vec![2; n + extra]);
            let g = PairGraph::new(GraphKind::CyclicB, chain(&c));
            let r = ksba_search(&g, None).map_err(err)?;
            let mut got: Vec<String> = r
                .iter()
                .map(|r| r.modification.groups[0].kind.box_label())
                .collect();
            got.sort();
            let mut want: Vec<String> = boxes.iter().map(|s| s.to_string()).collect();
            want.sort();
            ensure(got == want, || format!("{g}: boxes {got:?}"))?;
            ensure(
                r[0].d_value.is_some() && r[0].d_value != r[1].d_value,
                || format!("{g}: d-values not distinct"),
            )?;
        }
    }
    Ok("[4,c] and both series".into())
}

fn c9_triviality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut random_chain = |max_len: usize| -> Chain {
        let len = rng.gen_range(1..=max_len);
        chain(&(0..len).map(|_| rng.gen_range(2..=5)).collect::<Vec<_>>())
    };
    let mut cases: Vec<(PairGraph, Q)> = Vec::new();
    for i in 0..10 {
        let d = if i % 2 == 0 { q(1, 3) } else { q(2, 3) };
        cases.push((PairGraph::new(GraphKind::CyclicD, random_chain(3)), d));
    }
    let ds = [q(2, 3), q(3, 4), q(3, 5), q(4, 5), q(5, 6)];
    for d in ds {
        cases.push((PairGraph::new(GraphKind::DihedralD, random_chain(2)), d));
    }
    for _ in 0..10 {
        cases.push((PairGraph::new(GraphKind::CyclicB, random_chain(3)), q(1, 2)));
    }
    for (g, d) in &cases {
        ensure(triviality_lemmas_check(g, d).map_err(err)?, || {
            format!("{g} at d = {d}: nontrivial solution")
        })?;
    }
    Ok(format!("{} pairs", cases.len()))
}

fn c10_cover() -> Outcome {
    let mut count = 0;
    for n in 2..=30u64 {
        for q in 1..n {
            if n.gcd(&q) != 1 {
                continue;
            }
            let p = double_cover_params(n, q).map_err(err)?;
            let (big_n, big_q) = (&p.big_n, &p.big_q);
            ensure(big_n.is_even(), || format!("{n}/{q}: N = {big_n}"))?;
            ensure(((big_q * big_q) - 1u32) % big_n == BigInt::from(0), || {
                format!("{n}/{q}: Q^2 != 1 mod N")
            })?;
            let back = inverse_params(big_n.clone(), big_q.clone()).map_err(err)?;
            ensure(back == (BigInt::from(n), BigInt::from(q)), || {
                format!("{n}/{q}: inverse gives {back:?}")
            })?;
            let cover = hj_expand(&p.fraction().map_err(err)?).map_err(err)?;
            ensure(cover_chain(n, q).map_err(err)? == cover, || {
                format!("{n}/{q}: cover chain")
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} pairs (n, q)"))
}

/// Key of a modification of `c`, relabelled as a modification of
/// `[3] + c + [3]` with the two outer curves kept.
fn shifted_key(m: &Modification, len: usize) -> ModKey {
    let shift = |l: CurveLabel| match l {
        CurveLabel::Orig(k) => CurveLabel::Orig(k + 1),
        CurveLabel::New { u, v, pos } => CurveLabel::New {
            u: u + 1,
            v: v + 1,
            pos,
        },
    };
    let mut k: ModKey = m
        .key()
        .into_iter()
        .map(|(l, s, kept)| (shift(l), s, kept))
        .collect();
    k.push((CurveLabel::Orig(0), -3, true));
    k.push((CurveLabel::Orig(len + 1), -3, true));
    k.sort_unstable();
    k
}

fn c11_locality() -> Outcome {
    let all = chains(10, u64::MAX, usize::MAX);
    let mut mods = 0;
    for c in &all {
        let inner = PairGraph::new(GraphKind::CyclicPlain, chain(c));
        let mut outer_c = vec![3];
        outer_c.extend(c);
        outer_c.push(3);
        let outer = PairGraph::new(GraphKind::CyclicPlain, chain(&outer_c));
        let last = c.len() + 1;
        let mut want: Vec<(ModKey, Vec<SingularityType>)> = enumerate_q_modifications(&inner)
            .map_err(err)?
            .iter()
            .map(|m| (shifted_key(m, c.len()), m.singularities()))
            .collect();
        let mut got: Vec<(ModKey, Vec<SingularityType>)> = enumerate_q_modifications(&outer)
            .map_err(err)?
            .into_iter()
            .filter(|m| {
                m.key().iter().all(|(l, s, kept)| match l {
                    CurveLabel::Orig(k) if *k == 0 || *k == last => *kept && *s == -3,
                    CurveLabel::New { u, v, .. } => *u != 0 && *v != last,
                    _ => true,
                })
            })
            .map(|m| (m.key(), m.singularities()))
            .collect();
        want.sort();
        got.sort();
        ensure(want == got, || {
            format!(
                "{c:?}: {} modifications inside, {} on the image",
                want.len(),
                got.len()
            )
        })?;
        mods += want.len();
    }
    Ok(format!("{} chains, {mods} Q-modifications", all.len()))
}

fn c12_discrepancies() -> Outcome {
    let one = qi(1);
    for c in [&[4][..], &[3, 4, 2], &[2, 2, 2], &[5, 2, 3, 6]] {
        let g = PairGraph::new(GraphKind::CyclicD, chain(c));
        let cfg = CurveConfig::minimal_resolution(&g);
        let d = log_discrepancy_solve(&cfg, &cfg.uniform_weights(&one)).map_err(err)?;
        ensure((0..cfg.len()).all(|i| d.coeff(i) == one), || {
            format!("{g}: {d:?}")
        })?;

        let g = PairGraph::new(GraphKind::DihedralD, chain(c));
        let cfg = CurveConfig::minimal_resolution(&g);
        let d = log_discrepancy_solve(&cfg, &cfg.uniform_weights(&one)).map_err(err)?;
        let s = c.len();
        let want = |i: usize| if i >= s { q(1, 2) } else { qi(1) };
        ensure((0..cfg.len()).all(|i| d.coeff(i) == want(i)), || {
            format!("{g}: {d:?}")
        })?;
    }
    let half = q(1, 2);
    let arms =
        CurveConfig::tree(&[4, 2, 2, 2, 2], &[(0, 1), (0, 2), (0, 3), (0, 4)]).map_err(err)?;
    let d = log_discrepancy_solve(&arms, &Default::default()).map_err(err)?;
    ensure(
        d.coeff(0) == one && (1..5).all(|i| d.coeff(i) == half),
        || format!("star with (-2)-arms: {d:?}"),
    )?;
    let center = Curve {
        self_int: -4,
        boundary: 4,
        origin: Origin::Original(0),
        exceptional: true,
    };
    let bullets = CurveConfig::new(vec![center], &[]).map_err(err)?;
    let d = log_discrepancy_solve(&bullets, &bullets.uniform_weights(&half)).map_err(err)?;
    ensure(d.coeff(0) == one, || format!("star with branches: {d:?}"))?;
    Ok("chains, forks and stars".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("1 HJ round trip", c1_hj_round_trip),
        ("2 T-recognition dual oracle", c2_t_recognition),
        ("3 facts on 1/n(1,1)", c3_sn1_facts),
        ("4 Catalan bound", c4_catalan),
        ("5 cyclic pair components", c5_cyclic_pairs),
        ("6 dihedral pair components", c6_dihedral_pairs),
        ("7 plt rigidity and indices", c7_plt),
        ("8 KSBA series", c8_ksba_series),
        ("9 triviality", c9_triviality),
        ("10 dihedral cover", c10_cover),
        ("11 graph locality", c11_locality),
        ("12 discrepancy spot checks", c12_discrepancies),
    ];
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.split(' ').next() == Some(o)) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
