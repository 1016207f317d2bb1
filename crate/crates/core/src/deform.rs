//! Deformation components attached to P-modifications: counts, dimensions,
//! generic fibers and the boundary coefficient `d` of KSBA pairs.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjcf::hj_expand;
use crate::lattice::{self, CurveConfig, DivisorForm};
use crate::modgen::{
    dihedral_p_modifications, enumerate_modifications, enumerate_p_modifications,
    filter_p_modifications, Engine, Group, ModKind, Modification, SearchOptions,
};
use crate::notation::{
    render_graph, Chain, Fraction, GraphKind, PairGraph, SingularityType, TParams,
};
use crate::rational::{fmt_q, q, QRange, Q};

/// A point of `S_P` where the curve `D_P + E_P` is singular or meets a
/// contracted group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JunctionType {
    /// Two components of `D_P + E_P` crossing at a smooth point.
    SmoothNode,
    /// `A_r` group joining two components through its two ends.
    TypeA(u64),
    /// `A_r` group met by one branch at an end.
    ABranch(u64),
    /// T group joining two components through its two ends.
    TJunction(TParams),
    /// `D_r` group met by one branch at the end of its long arm.
    DBranch(u64),
    /// T group met by at most one branch.
    PltTEnd(TParams),
    /// Du Val point off the curve.
    DuValPoint(SingularityType),
    /// Anything else, with the number of branches through the point.
    Other(SingularityType, usize),
}

impl JunctionType {
    /// Junctions that carry doubly KSB deformations.
    pub fn is_whitelisted(&self) -> bool {
        !matches!(self, JunctionType::PltTEnd(_) | JunctionType::Other(..))
    }

    /// The `A_1` points with one branch left on a general fiber.
    fn generic_points(&self) -> usize {
        match self {
            JunctionType::ABranch(_) | JunctionType::DBranch(_) => 1,
            _ => 0,
        }
    }
}

/// Classifies every junction of `(S_P, D_P + E_P)`.
pub fn junctions(m: &Modification) -> Vec<JunctionType> {
    let cfg = &m.config;
    let kept = |c: usize| m.kept.binary_search(&c).is_ok();
    let mut out = Vec::new();
    for &k in &m.kept {
        for _ in 0..cfg.curve(k).boundary {
            out.push(JunctionType::SmoothNode);
        }
        for &n in cfg.neighbors(k) {
            if n > k && kept(n) {
                out.push(JunctionType::SmoothNode);
            }
        }
    }
    for g in &m.groups {
        let mut attach = Vec::new();
        for &c in &g.curves {
            for _ in 0..cfg.curve(c).boundary {
                attach.push(c);
            }
            attach.extend(cfg.neighbors(c).iter().filter(|&&n| kept(n)).map(|_| c));
        }
        out.push(classify_junction(cfg, g, &attach));
    }
    out.sort();
    out
}

fn classify_junction(cfg: &CurveConfig, g: &Group, attach: &[usize]) -> JunctionType {
    let inner_degree = |c: usize| {
        cfg.neighbors(c)
            .iter()
            .filter(|n| g.curves.contains(n))
            .count()
    };
    let at_end = |c: usize| inner_degree(c) <= 1;
    let spans = match attach {
        [a, b] => at_end(*a) && at_end(*b) && (a != b || g.curves.len() == 1),
        _ => false,
    };
    let leaves = cfg
        .dihedral_leaves()
        .filter(|(l1, l2)| g.curves.contains(l1) && g.curves.contains(l2));
    let r = g.curves.len() as u64;
    match (&g.kind, attach.len()) {
        (SingularityType::T(p), 2) if spans => JunctionType::TJunction(*p),
        (SingularityType::T(p), 0 | 1) => JunctionType::PltTEnd(*p),
        (k, 0) if k.is_du_val() => JunctionType::DuValPoint(k.clone()),
        (k, 1) if k.is_du_val() && leaves.is_some() => {
            let (l1, l2) = leaves.unwrap_or_default();
            let a = attach[0];
            if a != l1 && a != l2 && (at_end(a) || r == 3) {
                JunctionType::DBranch(r)
            } else {
                JunctionType::Other(k.clone(), 1)
            }
        }
        (SingularityType::DuValA(r), 2) if spans => JunctionType::TypeA(*r),
        (SingularityType::DuValA(r), 1) if at_end(attach[0]) => JunctionType::ABranch(*r),
        (k, n) => JunctionType::Other(k.clone(), n),
    }
}

/// Which dimension formula a report uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ReportKind {
    /// Component of `Def(S)`.
    Def,
    /// Component of `Def_KSB` of a cyclic pair.
    CyclicPair,
    /// Component of `Def_KSB` of a dihedral pair.
    DihedralPair,
    /// KSBA pair `(S, d D)` found by [`ksba_search`].
    Ksba,
}

#[derive(Clone, Debug)]
pub struct ComponentReport {
    pub kind: ReportKind,
    pub modification: Modification,
    pub dimension: u64,
    /// Singularities of a general fiber with the number of boundary
    /// branches through each.
    pub generic_fiber: Vec<(SingularityType, u32)>,
    pub d_value: Option<Q>,
    pub junctions: Vec<JunctionType>,
}

fn sum_r(m: &Modification) -> Result<u64> {
    m.groups
        .iter()
        .map(|g| {
            g.kind
                .ksb_r()
                .ok_or_else(|| Error::NoKsbSmoothing(g.kind.to_string()))
        })
        .sum()
}

fn pair_dimension(m: &Modification, js: &[JunctionType]) -> Result<u64> {
    let nodes = js
        .iter()
        .filter(|j| matches!(j, JunctionType::SmoothNode | JunctionType::TypeA(_)))
        .count() as u64;
    Ok(sum_r(m)? + nodes)
}

impl ComponentReport {
    fn new(kind: ReportKind, modification: Modification, d_value: Option<Q>) -> Result<Self> {
        let junctions = junctions(&modification);
        let generic_fiber = match kind {
            ReportKind::Def | ReportKind::CyclicPair => Vec::new(),
            ReportKind::DihedralPair => vec![(SingularityType::DuValA(1), 1); 2],
            ReportKind::Ksba if modification.base.kind.is_dihedral() => {
                vec![(SingularityType::DuValA(1), 1); 2]
            }
            ReportKind::Ksba => {
                let count = junctions.iter().map(JunctionType::generic_points).sum();
                vec![(SingularityType::DuValA(1), 1); count]
            }
        };
        let mut report = ComponentReport {
            kind,
            modification,
            dimension: 0,
            generic_fiber,
            d_value,
            junctions,
        };
        report.dimension = report.formula_dimension()?;
        Ok(report)
    }

    /// Recomputes the dimension from the modification.
    pub fn formula_dimension(&self) -> Result<u64> {
        let m = &self.modification;
        match self.kind {
            ReportKind::Def => {
                let e: u64 = m.e_values().iter().map(|(_, e)| e - 1).sum();
                Ok(sum_r(m)? + e)
            }
            ReportKind::CyclicPair | ReportKind::Ksba => pair_dimension(m, &junctions(m)),
            ReportKind::DihedralPair => pair_dimension(m, &junctions(m))?
                .checked_sub(2)
                .ok_or_else(|| {
                    Error::Inconsistent(format!("{} has dimension below 2", m.target()))
                }),
        }
    }
}

impl Serialize for ComponentReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Point<'a> {
            singularity: &'a SingularityType,
            branches: u32,
        }
        let fiber: Vec<Point> = self
            .generic_fiber
            .iter()
            .map(|(singularity, branches)| Point {
                singularity,
                branches: *branches,
            })
            .collect();
        let mut st = s.serialize_struct("ComponentReport", 5)?;
        st.serialize_field("dimension", &self.dimension)?;
        st.serialize_field("d", &self.d_value.as_ref().map(fmt_q))?;
        st.serialize_field("singularities", &self.modification.singularities())?;
        st.serialize_field("generic_fiber", &fiber)?;
        st.serialize_field("modification", &self.modification)?;
        st.end()
    }
}

/// `{"graph": ..., "components": [...]}`.
pub fn reports_json(g: &PairGraph, reports: &[ComponentReport]) -> serde_json::Value {
    serde_json::json!({
        "graph": render_graph(g),
        "components": reports,
    })
}

fn sorted(mut reports: Vec<ComponentReport>) -> Vec<ComponentReport> {
    reports.sort_by_cached_key(|r| (r.dimension, r.modification.key()));
    reports
}

/// Components of `Def(S)` for the cyclic quotient with chain `c`.
pub fn def_components(c: &Chain) -> Result<Vec<ComponentReport>> {
    let g = PairGraph::new(GraphKind::CyclicPlain, c.clone());
    let reports = enumerate_p_modifications(&g)?
        .into_iter()
        .map(|m| ComponentReport::new(ReportKind::Def, m, None))
        .collect::<Result<_>>()?;
    Ok(sorted(reports))
}

/// `(K + D + E)·Ā` for every kept curve, with weight one on every branch.
fn log_degrees(m: &Modification, d: &Q) -> Result<Vec<Q>> {
    let contracted = m.contracted();
    let k = m.canonical_degrees(None)?;
    let form = DivisorForm {
        canonical: Q::zero(),
        curves: m.kept.iter().map(|&c| (c, Q::one())).collect(),
        branches: m.config.uniform_weights(&Q::one()),
    };
    k.into_iter()
        .map(|(c, kd)| Ok(kd + d * lattice::pullback_degree(&m.config, &contracted, &form, c)?))
        .collect()
}

/// `(D + E)·Ā` for every kept curve.
fn boundary_degrees(m: &Modification) -> Result<Vec<Q>> {
    let contracted = m.contracted();
    let form = DivisorForm {
        canonical: Q::zero(),
        curves: m.kept.iter().map(|&c| (c, Q::one())).collect(),
        branches: m.config.uniform_weights(&Q::one()),
    };
    m.kept
        .iter()
        .map(|&c| lattice::pullback_degree(&m.config, &contracted, &form, c))
        .collect()
}

/// The unique `d` with `(K + d(D + E))·Ā = 0` on every kept curve, if any.
/// `Ok(None)` means there is no kept curve.
fn solve_d(m: &Modification) -> Result<Option<Option<Q>>> {
    if m.kept.is_empty() {
        return Ok(None);
    }
    let k = m.canonical_degrees(None)?;
    let b = boundary_degrees(m)?;
    let mut d: Option<Q> = None;
    for ((_, kd), bd) in k.iter().zip(&b) {
        if bd.is_zero() {
            if !kd.is_zero() {
                return Ok(Some(None));
            }
            continue;
        }
        let v = -kd / bd;
        match &d {
            Some(prev) if *prev != v => return Ok(Some(None)),
            _ => d = Some(v),
        }
    }
    Ok(Some(d))
}

fn is_log_trivial(m: &Modification) -> Result<bool> {
    Ok(log_degrees(m, &Q::one())?.iter().all(Zero::is_zero))
}

/// Components of `Def_KSB` of the pair `(S_{n,q}, D_{n,q})`.
pub fn def_ksb_pair_components_cyclic(f: &Fraction) -> Result<Vec<ComponentReport>> {
    let g = PairGraph::new(GraphKind::CyclicD, hj_expand(f)?);
    let mut reports = Vec::new();
    for m in enumerate_p_modifications(&g)? {
        if !is_log_trivial(&m)? {
            return Err(Error::Inconsistent(format!(
                "K + D + E is not trivial on {}",
                m.target()
            )));
        }
        reports.push(ComponentReport::new(ReportKind::CyclicPair, m, None)?);
    }
    Ok(sorted(reports))
}

/// Components of `Def_KSB` of the dihedral pair with chain `[c1,...,cs]`
/// given by `f`.
pub fn def_ksb_pair_components_dihedral(f: &Fraction) -> Result<Vec<ComponentReport>> {
    let g = PairGraph::new(GraphKind::DihedralD, hj_expand(f)?);
    let reports = dihedral_p_modifications(&g)?
        .into_iter()
        .map(|m| ComponentReport::new(ReportKind::DihedralPair, m, None))
        .collect::<Result<_>>()?;
    Ok(sorted(reports))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PltVerdict {
    pub rigid: bool,
    /// Index of `K + B`, the order of the local class group.
    pub cartier_index: BigInt,
}

/// The plt pair `(S_{n,q}, B_{n,q})` has index-one cover the smooth plane
/// with a line, so it is KSB rigid.
pub fn plt_rigidity(f: &Fraction) -> Result<PltVerdict> {
    let g = PairGraph::new(GraphKind::CyclicB, hj_expand(f)?);
    let cfg = CurveConfig::minimal_resolution(&g);
    let cartier_index = lattice::cartier_index(&cfg, &cfg.uniform_weights(&Q::one()))?;
    if &cartier_index != f.n() {
        return Err(Error::Inconsistent(format!(
            "index of K + B on {f} is {cartier_index}"
        )));
    }
    Ok(PltVerdict {
        rigid: true,
        cartier_index,
    })
}

/// P-modifications of the singularity of `g` that carry a KSBA pair
/// `(S_P, d(D_P + E_P))` with `K + d(D_P + E_P)` trivial over `S` and only
/// whitelisted junctions. `d` is restricted to `(0, 1]`, or to `d_filter`.
pub fn ksba_search(g: &PairGraph, d_filter: Option<&QRange>) -> Result<Vec<ComponentReport>> {
    if g.bullet_count() == 0 {
        return Err(Error::InvalidArgument(format!("{g} has no boundary")));
    }
    let mut out = Vec::new();
    for m in enumerate_p_modifications(g)? {
        if !junctions(&m).iter().all(JunctionType::is_whitelisted) {
            continue;
        }
        let d = match solve_d(&m)? {
            None => None,
            Some(None) => continue,
            Some(Some(d)) => {
                let ok = match d_filter {
                    Some(r) => r.contains(&d),
                    None => d.is_positive() && d <= Q::one(),
                };
                if !ok {
                    continue;
                }
                Some(d)
            }
        };
        out.push(ComponentReport::new(ReportKind::Ksba, m, d)?);
    }
    Ok(sorted(out))
}

/// Counts pair components through the Q-modifications of the pair (filtered
/// to P-modifications with `K + D + E` trivial) and compares with the
/// components of `Def(S)`.
pub fn verify_theorem_1(c: &Chain) -> Result<bool> {
    let def = def_components(c)?.len();
    let g = PairGraph::new(GraphKind::CyclicD, c.clone());
    let q = enumerate_modifications(&g, ModKind::Q, Engine::ChainDfs, &SearchOptions::default())?;
    let mut pair = 0;
    for m in filter_p_modifications(&q)? {
        if is_log_trivial(&m)? {
            pair += 1;
        }
    }
    Ok(def == pair)
}

/// Exhaustive check of the triviality statements over the Q-modifications
/// of `g` whose canonical class is ample:
/// - `CyclicD`, and `DihedralD` with `1/2 < d < 1`: no nontrivial one has
///   `K + d(D + E)` trivial;
/// - `CyclicB`: every one with `K + d'(D + E)` trivial for some `d' < 1`
///   has at most one kept curve.
pub fn triviality_lemmas_check(g: &PairGraph, d: &Q) -> Result<bool> {
    if !(d.is_positive() && *d < Q::one()) {
        return Err(Error::InvalidArgument(format!(
            "d = {} is not in (0,1)",
            fmt_q(d)
        )));
    }
    let ample = |m: &Modification| -> Result<bool> {
        Ok(m.canonical_degrees(None)?
            .iter()
            .all(|(_, k)| k.is_positive()))
    };
    let qmods = enumerate_modifications(g, ModKind::Q, Engine::Auto, &SearchOptions::default())?;
    match g.kind {
        GraphKind::CyclicD | GraphKind::DihedralD => {
            if g.kind == GraphKind::DihedralD && *d <= q(1, 2) {
                return Err(Error::InvalidArgument(
                    "dihedral check needs d > 1/2".into(),
                ));
            }
            for m in &qmods {
                if m.is_identity() || !ample(m)? {
                    continue;
                }
                if log_degrees(m, d)?.iter().all(Zero::is_zero) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        GraphKind::CyclicB => {
            for m in &qmods {
                if m.kept.len() < 2 || !ample(m)? {
                    continue;
                }
                if let Some(Some(v)) = solve_d(m)? {
                    if v < Q::one() {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        _ => Err(Error::InvalidArgument(format!("{g} has no boundary"))),
    }
}
