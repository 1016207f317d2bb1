//! Enumeration of Q-, P- and M-modifications.
//!
//! Every Q-modification `S̄ -> S` factors through a sequence of node blow-ups
//! of the minimal resolution followed by a contraction. Blow-ups are pruned by
//! the discrepancy over the base: the new curve at a node of `C_a`, `C_b` gets
//! coefficient `δ_a + δ_b - 1` in `-K`, which must stay non-negative.
//!
//! Contracted curves always have self-intersection at most `-2`, so the
//! blown-up surface is the minimal resolution of `S̄` and the pair
//! (configuration, kept curves) determines the modification.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::rc::Rc;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, BoundaryWeights, CurveConfig, Origin};
use crate::notation::{
    classify_chain, classify_singularity, GraphKind, PairGraph, SingularityType,
};
use crate::rational::{qi, Q};
use crate::tsing::{m_chain, refine};

pub const DEFAULT_SAFETY_CAP: usize = 1_000_000;

/// Subset enumeration is exponential in the number of free curves.
pub const MAX_SUBSET_CURVES: usize = 24;

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Maximum number of blow-up configurations visited.
    pub safety_cap: usize,
    /// Explore nodes in reverse order; the result must not change.
    pub reverse_order: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        let safety_cap = std::env::var("QUOTSING_SAFETY_CAP")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_SAFETY_CAP);
        SearchOptions {
            safety_cap,
            reverse_order: false,
        }
    }
}

/// Orientation-aware name of a curve, independent of blow-up order.
///
/// `New { u, v, pos }` is the `pos`-th curve (counted from `C_u`) on the path
/// that replaced the original node `C_u - C_v`, `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveLabel {
    Orig(usize),
    New { u: usize, v: usize, pos: usize },
}

impl fmt::Display for CurveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveLabel::Orig(k) => write!(f, "C{k}"),
            CurveLabel::New { u, v, pos } => write!(f, "E{u}.{v}.{pos}"),
        }
    }
}

impl Serialize for CurveLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn curve_labels(cfg: &CurveConfig) -> Vec<CurveLabel> {
    let original = |c: usize| match cfg.curve(c).origin {
        Origin::Original(k) => Some(k),
        Origin::BlowUp { .. } => None,
    };
    let mut labels: Vec<Option<CurveLabel>> = vec![None; cfg.len()];
    for u in 0..cfg.len() {
        let Some(ku) = original(u) else { continue };
        labels[u] = Some(CurveLabel::Orig(ku));
        for &w in cfg.neighbors(u) {
            if original(w).is_some() {
                continue;
            }
            let mut path = vec![w];
            let (mut prev, mut cur) = (u, w);
            let kv = loop {
                let next = *cfg
                    .neighbors(cur)
                    .iter()
                    .find(|&&x| x != prev)
                    .expect("blow-up curves sit between two curves");
                if let Some(kv) = original(next) {
                    break kv;
                }
                path.push(next);
                prev = cur;
                cur = next;
            };
            if ku < kv {
                for (i, &c) in path.iter().enumerate() {
                    labels[c] = Some(CurveLabel::New {
                        u: ku,
                        v: kv,
                        pos: i + 1,
                    });
                }
            }
        }
    }
    labels
        .into_iter()
        .map(|l| l.expect("every curve is labelled"))
        .collect()
}

/// A configuration reached from the minimal resolution by node blow-ups,
/// with `δ` (minus the discrepancy over the base) on every curve.
#[derive(Clone, Debug)]
pub struct BlowupTree {
    pub config: CurveConfig,
    pub delta: Vec<Q>,
    pub labels: Vec<CurveLabel>,
}

impl BlowupTree {
    pub fn minimal(g: &PairGraph) -> Result<Self> {
        let config = CurveConfig::minimal_resolution(g);
        let all: Vec<usize> = (0..config.len()).collect();
        let d = lattice::discrepancies(&config, &all)?;
        let delta = all.iter().map(|&c| d.coeff(c)).collect();
        let labels = curve_labels(&config);
        Ok(BlowupTree {
            config,
            delta,
            labels,
        })
    }

    /// Labels with self-intersections, sorted.
    pub fn key(&self) -> Vec<(CurveLabel, i64)> {
        let mut k: Vec<(CurveLabel, i64)> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, self.config.curve(i).self_int))
            .collect();
        k.sort_unstable();
        k
    }

    pub fn blowup_count(&self) -> usize {
        self.config
            .curves()
            .iter()
            .filter(|c| matches!(c.origin, Origin::BlowUp { .. }))
            .count()
    }

    /// Nodes whose blow-up keeps `-K` effective over the base.
    pub fn admissible_nodes(&self) -> Vec<(usize, usize)> {
        self.config
            .edges()
            .into_iter()
            .filter(|&(a, b)| {
                self.config.curve(a).exceptional
                    && self.config.curve(b).exceptional
                    && &self.delta[a] + &self.delta[b] >= qi(1)
            })
            .collect()
    }

    pub fn blow_up(&self, a: usize, b: usize) -> Result<Self> {
        let config = blow_up_node(&self.config, a, b)?;
        let mut delta = self.delta.clone();
        delta.push(&self.delta[a] + &self.delta[b] - qi(1));
        let labels = curve_labels(&config);
        Ok(BlowupTree {
            config,
            delta,
            labels,
        })
    }
}

/// Blows up the node of two exceptional curves.
pub fn blow_up_node(cfg: &CurveConfig, a: usize, b: usize) -> Result<CurveConfig> {
    let step = cfg
        .curves()
        .iter()
        .filter(|c| matches!(c.origin, Origin::BlowUp { .. }))
        .count();
    cfg.blow_up_node(a, b, step)
}

/// All admissible blow-up configurations, sorted by key.
pub fn enumerate_blowup_trees(g: &PairGraph, opts: &SearchOptions) -> Result<Vec<BlowupTree>> {
    let root = BlowupTree::minimal(g)?;
    let mut seen: HashSet<Vec<(CurveLabel, i64)>> = HashSet::new();
    seen.insert(root.key());
    let mut queue = VecDeque::from([root]);
    let mut out = Vec::new();
    while let Some(t) = queue.pop_front() {
        let mut nodes = t.admissible_nodes();
        if opts.reverse_order {
            nodes.reverse();
        }
        for (a, b) in nodes {
            let next = t.blow_up(a, b)?;
            if seen.insert(next.key()) {
                if seen.len() > opts.safety_cap {
                    return Err(Error::SafetyCapExceeded(opts.safety_cap));
                }
                queue.push_back(next);
            }
        }
        out.push(t);
    }
    out.sort_by_cached_key(BlowupTree::key);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    /// Curves of the group; chains are listed in reading order.
    pub curves: Vec<usize>,
    pub kind: SingularityType,
}

/// A modification `S̄ -> S`: a blow-up configuration together with the curves
/// that survive on `S̄`. The remaining curves are contracted in groups.
#[derive(Clone, Debug)]
pub struct Modification {
    pub base: PairGraph,
    pub config: CurveConfig,
    pub labels: Vec<CurveLabel>,
    /// Sorted curve ids.
    pub kept: Vec<usize>,
    /// Sorted by their first label.
    pub groups: Vec<Group>,
}

pub type ModKey = Vec<(CurveLabel, i64, bool)>;

impl Modification {
    /// Classifies the connected components of the non-kept curves.
    pub fn from_kept(base: PairGraph, config: CurveConfig, kept: Vec<usize>) -> Result<Self> {
        let mut kept = kept;
        kept.sort_unstable();
        kept.dedup();
        let contracted: Vec<usize> = (0..config.len()).filter(|c| !kept.contains(c)).collect();
        let mut groups = Vec::new();
        for comp in config.components(&contracted) {
            let kind = refine(classify_singularity(&config, &comp)?)?;
            let curves = if comp.iter().all(|&c| config.neighbors(c).len() <= 2) {
                config.oriented_path(&comp)
            } else {
                comp
            };
            groups.push(Group { curves, kind });
        }
        Ok(Self::assemble(base, config, kept, groups))
    }

    fn assemble(
        base: PairGraph,
        config: CurveConfig,
        kept: Vec<usize>,
        groups: Vec<Group>,
    ) -> Self {
        let labels = curve_labels(&config);
        let mut groups = groups;
        groups.sort_by_key(|g| g.curves.iter().map(|&c| labels[c]).min());
        Modification {
            base,
            config,
            labels,
            kept,
            groups,
        }
    }

    pub fn key(&self) -> ModKey {
        let mut k: ModKey = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, self.config.curve(i).self_int, self.kept.contains(&i)))
            .collect();
        k.sort_unstable();
        k
    }

    pub fn contracted(&self) -> Vec<usize> {
        (0..self.config.len())
            .filter(|c| !self.kept.contains(c))
            .collect()
    }

    pub fn blowup_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| matches!(l, CurveLabel::New { .. }))
            .count()
    }

    pub fn is_identity(&self) -> bool {
        self.kept.is_empty() && self.blowup_count() == 0
    }

    pub fn is_minimal_resolution(&self) -> bool {
        self.groups.is_empty() && self.blowup_count() == 0
    }

    /// Blow-up history as nodes `(a, b)` in creation order.
    pub fn blowups(&self) -> Vec<(usize, usize)> {
        let mut steps: Vec<(usize, (usize, usize))> = self
            .config
            .curves()
            .iter()
            .filter_map(|c| match c.origin {
                Origin::BlowUp { step, between } => Some((step, between)),
                Origin::Original(_) => None,
            })
            .collect();
        steps.sort_unstable();
        steps.into_iter().map(|(_, n)| n).collect()
    }

    /// `e_i`: minus the self-intersection of each kept curve on the minimal
    /// resolution of `S̄`.
    pub fn e_values(&self) -> Vec<(usize, u64)> {
        self.kept
            .iter()
            .map(|&c| (c, (-self.config.curve(c).self_int) as u64))
            .collect()
    }

    pub fn singularities(&self) -> Vec<SingularityType> {
        self.groups.iter().map(|g| g.kind.clone()).collect()
    }

    /// `(K + boundary)·Ā` for every kept curve.
    pub fn canonical_degrees(&self, weights: Option<&BoundaryWeights>) -> Result<Vec<(usize, Q)>> {
        let empty = BoundaryWeights::new();
        let w = weights.unwrap_or(&empty);
        let delta = lattice::log_discrepancy_on(&self.config, &self.contracted(), w)?;
        Ok(self
            .kept
            .iter()
            .map(|&k| {
                let mut deg = qi(-self.config.curve(k).self_int - 2)
                    + w.iter()
                        .filter(|(b, _)| b.curve == k)
                        .map(|(_, v)| v.clone())
                        .sum::<Q>();
                for &n in self.config.neighbors(k) {
                    if let Some(d) = delta.coeffs.get(&n) {
                        deg += d;
                    }
                }
                (k, deg)
            })
            .collect())
    }

    /// `K` nef over the base and only quotient singularities.
    pub fn is_q_modification(&self) -> Result<bool> {
        Ok(self
            .canonical_degrees(None)?
            .iter()
            .all(|(_, d)| !d.is_negative()))
    }

    /// `K` ample over the base and only Du Val and T singularities.
    pub fn is_p_modification(&self) -> Result<bool> {
        let sings_ok = self
            .groups
            .iter()
            .all(|g| g.kind.is_du_val() || g.kind.is_t());
        Ok(sings_ok
            && self
                .canonical_degrees(None)?
                .iter()
                .all(|(_, d)| d.is_positive()))
    }

    /// The target surface as a decorated graph: kept curves by `e_i`,
    /// contracted groups as boxes.
    pub fn target(&self) -> String {
        let cfg = &self.config;
        let mut node_of = vec![usize::MAX; cfg.len()];
        let mut node_label = Vec::new();
        for &k in &self.kept {
            node_of[k] = node_label.len();
            node_label.push((-cfg.curve(k).self_int).to_string());
        }
        for g in &self.groups {
            for &c in &g.curves {
                node_of[c] = node_label.len();
            }
            node_label.push(format!("[{}]", g.kind.box_label()));
        }
        let mut nadj: Vec<Vec<usize>> = vec![Vec::new(); node_label.len()];
        let mut bullets = vec![0u32; node_label.len()];
        for c in 0..cfg.len() {
            bullets[node_of[c]] += cfg.curve(c).boundary;
            for &d in cfg.neighbors(c) {
                let (a, b) = (node_of[c], node_of[d]);
                if a != b && !nadj[a].contains(&b) {
                    nadj[a].push(b);
                }
            }
        }
        // Walks a path of nodes starting at `start`, away from `prev`.
        let walk = |start: usize, prev: usize| -> Vec<usize> {
            let mut out = vec![start];
            let (mut p, mut cur) = (prev, start);
            while let Some(&next) = nadj[cur].iter().find(|&&x| x != p) {
                out.push(next);
                p = cur;
                cur = next;
            }
            out
        };
        let render = |nodes: &[usize]| -> String {
            nodes
                .iter()
                .map(|&n| node_label[n].clone())
                .collect::<Vec<_>>()
                .join(" - ")
        };
        let root_node = node_of[cfg.root()];
        match cfg.dihedral_leaves() {
            None => {
                let ends: Vec<usize> = (0..node_label.len())
                    .filter(|&n| nadj[n].len() <= 1)
                    .collect();
                let start = if ends.contains(&root_node) {
                    root_node
                } else {
                    ends[0]
                };
                let path = walk(start, usize::MAX);
                let left_bullet = matches!(self.base.kind, GraphKind::CyclicB | GraphKind::CyclicD);
                let right_bullet = self.base.kind == GraphKind::CyclicD;
                let mut s = String::new();
                if left_bullet {
                    s.push_str("* - ");
                }
                s.push_str(&render(&path));
                if right_bullet {
                    s.push_str(" - *");
                }
                s
            }
            Some((l1, l2)) => {
                let (n1, n2) = (node_of[l1], node_of[l2]);
                let mut side = Vec::new();
                let mut main = None;
                for &nb in &nadj[root_node] {
                    let arm = walk(nb, root_node);
                    if arm.contains(&n1) || arm.contains(&n2) {
                        side.push(arm);
                    } else {
                        main = Some(arm);
                    }
                }
                side.sort_by_key(|arm| !arm.contains(&n1));
                let mut path = vec![root_node];
                path.extend(main.unwrap_or_default());
                if side.is_empty() {
                    let mut s = render(&path);
                    if self.base.kind == GraphKind::DihedralD {
                        s.push_str(" - *");
                    }
                    return s;
                }
                let mut s = String::from("[");
                let sides: Vec<String> = side.iter().map(|a| render(a)).collect();
                s.push_str(&sides.join(", "));
                s.push_str("; ");
                s.push_str(&render(&path));
                if self.base.kind == GraphKind::DihedralD {
                    s.push_str(" - *");
                }
                s.push(']');
                s
            }
        }
    }
}

impl PartialEq for Modification {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.key() == other.key()
    }
}

impl Eq for Modification {}

impl Serialize for Modification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Kept {
            curve: CurveLabel,
            self_int: i64,
        }
        #[derive(Serialize)]
        struct G {
            curves: Vec<CurveLabel>,
            #[serde(rename = "type")]
            kind: SingularityType,
            r#box: String,
        }
        let l = &self.labels;
        let blowups: Vec<[CurveLabel; 2]> =
            self.blowups().iter().map(|&(a, b)| [l[a], l[b]]).collect();
        let kept: Vec<Kept> = self
            .kept
            .iter()
            .map(|&c| Kept {
                curve: l[c],
                self_int: self.config.curve(c).self_int,
            })
            .collect();
        let groups: Vec<G> = self
            .groups
            .iter()
            .map(|g| G {
                curves: g.curves.iter().map(|&c| l[c]).collect(),
                kind: g.kind.clone(),
                r#box: g.kind.box_label(),
            })
            .collect();
        let mut st = s.serialize_struct("Modification", 4)?;
        st.serialize_field("target", &self.target())?;
        st.serialize_field("blowups", &blowups)?;
        st.serialize_field("kept", &kept)?;
        st.serialize_field("groups", &groups)?;
        st.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModKind {
    /// `K` nef, quotient singularities.
    Q,
    /// `K` ample, Du Val and T singularities.
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    /// `ChainDfs` on chains, `Fork` on trees with one branching curve,
    /// `Subsets` otherwise.
    Auto,
    /// Depth-first search over kept positions of a chain.
    ChainDfs,
    /// Split at the branching curve and search each arm as a chain.
    Fork,
    /// All subsets of contractible curves.
    Subsets,
}

/// Fixed-width rationals for the search. Overflow is reported, never wrapped.
type R = Ratio<i64>;

fn overflow() -> Error {
    Error::Overflow("rational out of range in modification search".into())
}

fn r_add(a: &R, b: &R) -> Result<R> {
    a.checked_add(b).ok_or_else(overflow)
}

fn r_sub(a: &R, b: &R) -> Result<R> {
    a.checked_sub(b).ok_or_else(overflow)
}

fn r_mul(a: &R, b: &R) -> Result<R> {
    a.checked_mul(b).ok_or_else(overflow)
}

fn r_div(a: &R, b: &R) -> Result<R> {
    a.checked_div(b).ok_or_else(overflow)
}

fn ri(n: i64) -> R {
    R::from_integer(n)
}

fn to_r(v: &Q) -> Result<R> {
    let n = v.numer().to_i64().ok_or_else(overflow)?;
    let d = v.denom().to_i64().ok_or_else(overflow)?;
    Ok(R::new(n, d))
}

fn degree_ok<T: Signed>(kind: ModKind, d: &T) -> bool {
    match kind {
        ModKind::Q => !d.is_negative(),
        ModKind::P => d.is_positive(),
    }
}

fn type_ok(kind: ModKind, t: &SingularityType) -> bool {
    kind == ModKind::Q || t.is_du_val() || t.is_t()
}

struct Interval {
    kind: SingularityType,
    first: R,
    last: R,
}

/// Intervals keyed by their self-intersections; `None` if not allowed.
type IntervalMemo = HashMap<Vec<i64>, Option<Rc<Interval>>>;

/// Solves `M x = (C_j^2 + 2)_j` for a chain of curves with self-intersections
/// `si`, all at most `-2`.
fn chain_delta(si: &[i64]) -> Result<Vec<R>> {
    chain_delta_weighted(si, &R::zero(), &R::zero())
}

/// As `chain_delta`, with contracted outside neighbours of coefficients `wl`
/// and `wr` at the two ends.
fn chain_delta_weighted(si: &[i64], wl: &R, wr: &R) -> Result<Vec<R>> {
    let n = si.len();
    let mut sup: Vec<R> = Vec::with_capacity(n);
    let mut r: Vec<R> = Vec::with_capacity(n);
    for j in 0..n {
        let mut rhs = ri(si[j] + 2);
        if j == 0 {
            rhs = r_sub(&rhs, wl)?;
        }
        if j + 1 == n {
            rhs = r_sub(&rhs, wr)?;
        }
        let (diag, rhs) = if j == 0 {
            (ri(si[0]), rhs)
        } else {
            (r_sub(&ri(si[j]), &sup[j - 1])?, r_sub(&rhs, &r[j - 1])?)
        };
        r.push(r_div(&rhs, &diag)?);
        sup.push(r_div(&R::one(), &diag)?);
    }
    let mut x = r;
    for j in (0..n.saturating_sub(1)).rev() {
        let t = r_mul(&sup[j], &x[j + 1])?;
        x[j] = r_sub(&x[j], &t)?;
    }
    Ok(x)
}

/// Kept curves and groups on a path, with the `δ` handed to the curve outside
/// the path next to its first element.
#[derive(Clone)]
struct PathSol {
    kept: Vec<usize>,
    groups: Vec<Group>,
    out: R,
}

struct PathSearch<'a, 'm> {
    order: &'a [usize],
    si: Vec<i64>,
    kind: ModKind,
    memo: &'m mut IntervalMemo,
    kept: Vec<usize>,
    groups: Vec<Group>,
    out: R,
    sols: Vec<PathSol>,
}

impl<'a, 'm> PathSearch<'a, 'm> {
    /// Solutions on `order`. With `incoming = Some(d)` the first curve is kept
    /// and receives `d` from outside; otherwise the outside curve is kept.
    fn run(
        cfg: &'a CurveConfig,
        order: &'a [usize],
        kind: ModKind,
        incoming: Option<R>,
        memo: &'m mut IntervalMemo,
    ) -> Result<Vec<PathSol>> {
        let mut s = PathSearch {
            order,
            si: order.iter().map(|&c| cfg.curve(c).self_int).collect(),
            kind,
            memo,
            kept: Vec::new(),
            groups: Vec::new(),
            out: R::zero(),
            sols: Vec::new(),
        };
        match incoming {
            None => s.rec(None)?,
            Some(_) if order.is_empty() => {}
            Some(d) => {
                s.kept.push(order[0]);
                s.rec(Some((0, d)))?;
            }
        }
        if order.is_empty() {
            s.sols.push(PathSol {
                kept: Vec::new(),
                groups: Vec::new(),
                out: R::zero(),
            });
        }
        Ok(s.sols)
    }

    fn interval(&mut self, i: usize, j: usize) -> Result<Option<Rc<Interval>>> {
        let key = &self.si[i..=j];
        if let Some(v) = self.memo.get(key) {
            return Ok(v.clone());
        }
        let entries: Vec<u64> = key.iter().map(|&x| (-x) as u64).collect();
        let t = refine(classify_chain(&entries)?)?;
        let entry = if type_ok(self.kind, &t) {
            let x = chain_delta(key)?;
            Some(Rc::new(Interval {
                kind: t,
                first: x[0],
                last: x[x.len() - 1],
            }))
        } else {
            None
        };
        self.memo.insert(key.to_vec(), entry.clone());
        Ok(entry)
    }

    fn rec(&mut self, last: Option<(usize, R)>) -> Result<()> {
        let len = self.order.len();
        let start = last.as_ref().map_or(0, |(k, _)| k + 1);
        for p in start..=len {
            if p > start && self.si[p - 1] > -2 {
                break;
            }
            let iv = if p > start {
                match self.interval(start, p - 1)? {
                    None => continue,
                    some => some,
                }
            } else {
                None
            };
            let zero = R::zero();
            let (first, tail) = iv
                .as_ref()
                .map_or((&zero, &zero), |iv| (&iv.first, &iv.last));
            match &last {
                Some((k, left)) => {
                    let deg = r_add(&r_add(&ri(-self.si[*k] - 2), left)?, first)?;
                    if !degree_ok(self.kind, &deg) {
                        continue;
                    }
                }
                None => self.out = *first,
            }
            let tail = *tail;
            if let Some(iv) = &iv {
                self.groups.push(Group {
                    curves: self.order[start..p].to_vec(),
                    kind: iv.kind.clone(),
                });
            }
            if p == len {
                self.sols.push(PathSol {
                    kept: self.kept.clone(),
                    groups: self.groups.clone(),
                    out: self.out,
                });
            } else {
                self.kept.push(self.order[p]);
                self.rec(Some((p, tail)))?;
                self.kept.pop();
            }
            if iv.is_some() {
                self.groups.pop();
            }
        }
        Ok(())
    }
}

fn chain_dfs(
    base: &PairGraph,
    cfg: &CurveConfig,
    kind: ModKind,
    memo: &mut IntervalMemo,
) -> Result<Vec<Modification>> {
    let order = cfg
        .path_order()
        .ok_or_else(|| Error::InvalidArgument("chain search needs a path configuration".into()))?;
    Ok(PathSearch::run(cfg, &order, kind, None, memo)?
        .into_iter()
        .map(|s| {
            let mut kept = s.kept;
            kept.sort_unstable();
            Modification::assemble(base.clone(), cfg.clone(), kept, s.groups)
        })
        .collect())
}

/// Cartesian product of per-arm solutions.
fn combine(arms: &[Vec<PathSol>], mut f: impl FnMut(&[&PathSol]) -> Result<()>) -> Result<()> {
    let mut idx = vec![0usize; arms.len()];
    if arms.iter().any(|a| a.is_empty()) {
        return Ok(());
    }
    loop {
        let pick: Vec<&PathSol> = arms.iter().zip(&idx).map(|(a, &i)| &a[i]).collect();
        f(&pick)?;
        let mut k = 0;
        loop {
            if k == arms.len() {
                return Ok(());
            }
            idx[k] += 1;
            if idx[k] < arms[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Trees with a single branching curve: split at the centre into paths.
fn fork_search(
    base: &PairGraph,
    cfg: &CurveConfig,
    kind: ModKind,
    memo: &mut IntervalMemo,
) -> Result<Vec<Modification>> {
    let branching: Vec<usize> = (0..cfg.len())
        .filter(|&c| cfg.neighbors(c).len() > 2)
        .collect();
    if branching.is_empty() {
        return chain_dfs(base, cfg, kind, memo);
    }
    let &[centre] = branching.as_slice() else {
        return Err(Error::InvalidArgument(
            "fork search needs exactly one branching curve".into(),
        ));
    };
    let arms: Vec<Vec<usize>> = cfg
        .neighbors(centre)
        .iter()
        .map(|&nb| {
            let mut arm = vec![nb];
            let (mut prev, mut cur) = (centre, nb);
            while let Some(&next) = cfg.neighbors(cur).iter().find(|&&x| x != prev) {
                arm.push(next);
                prev = cur;
                cur = next;
            }
            arm
        })
        .collect();
    let mut out = Vec::new();
    let mut emit = |picks: &[&PathSol], extra_kept: Option<usize>, extra_group: Option<Group>| {
        let mut kept: Vec<usize> = picks.iter().flat_map(|s| s.kept.iter().copied()).collect();
        kept.extend(extra_kept);
        kept.sort_unstable();
        let mut groups: Vec<Group> = picks
            .iter()
            .flat_map(|s| s.groups.iter().cloned())
            .collect();
        groups.extend(extra_group);
        out.push(Modification::assemble(
            base.clone(),
            cfg.clone(),
            kept,
            groups,
        ));
    };

    // Centre kept.
    let sols = arms
        .iter()
        .map(|a| PathSearch::run(cfg, a, kind, None, memo))
        .collect::<Result<Vec<_>>>()?;
    combine(&sols, |picks| {
        let mut deg = ri(-cfg.curve(centre).self_int - 2);
        for s in picks {
            deg = r_add(&deg, &s.out)?;
        }
        if degree_ok(kind, &deg) {
            emit(picks, Some(centre), None);
        }
        Ok(())
    })?;

    // Centre contracted together with a prefix of every arm.
    if cfg.curve(centre).self_int > -2 {
        return Ok(out);
    }
    let max_prefix: Vec<usize> = arms
        .iter()
        .map(|a| {
            a.iter()
                .take_while(|&&c| cfg.curve(c).self_int <= -2)
                .count()
        })
        .collect();
    let mut lens = vec![0usize; arms.len()];
    'prefixes: loop {
        let mut group = vec![centre];
        for (a, &l) in arms.iter().zip(&lens) {
            group.extend_from_slice(&a[..l]);
        }
        let t = match classify_singularity(cfg, &group) {
            Ok(t) => Some(refine(t)?),
            Err(Error::NotNegativeDefinite) => None,
            Err(e) => return Err(e),
        };
        if let Some(t) = t.filter(|t| type_ok(kind, t)) {
            let rhs: Vec<Q> = group
                .iter()
                .map(|&c| qi(cfg.curve(c).self_int + 2))
                .collect();
            let x = lattice::solve_forest(cfg, &group, &rhs)?;
            let delta: HashMap<usize, Q> = group.iter().copied().zip(x).collect();
            let mut sols = Vec::new();
            for (a, &l) in arms.iter().zip(&lens) {
                let edge = if l == 0 { centre } else { a[l - 1] };
                sols.push(PathSearch::run(
                    cfg,
                    &a[l..],
                    kind,
                    Some(to_r(&delta[&edge])?),
                    memo,
                )?);
            }
            let curves = if group.iter().all(|&c| cfg.neighbors(c).len() <= 2) {
                cfg.oriented_path(&group)
            } else {
                let mut g = group.clone();
                g.sort_unstable();
                g
            };
            let g = Group { curves, kind: t };
            combine(&sols, |picks| {
                emit(picks, None, Some(g.clone()));
                Ok(())
            })?;
        }
        let mut k = 0;
        loop {
            if k == arms.len() {
                break 'prefixes;
            }
            lens[k] += 1;
            if lens[k] <= max_prefix[k] {
                break;
            }
            lens[k] = 0;
            k += 1;
        }
    }
    Ok(out)
}

fn subsets(base: &PairGraph, cfg: &CurveConfig, kind: ModKind) -> Result<Vec<Modification>> {
    let free: Vec<usize> = (0..cfg.len())
        .filter(|&c| cfg.curve(c).self_int <= -2)
        .collect();
    if free.len() > MAX_SUBSET_CURVES {
        return Err(Error::TooLarge(cfg.len()));
    }
    let mut memo: HashMap<Vec<usize>, Option<(Group, Vec<Q>)>> = HashMap::new();
    let mut out = Vec::new();
    'masks: for mask in 0u64..(1u64 << free.len()) {
        let contracted: Vec<usize> = free
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        let mut delta: BTreeMap<usize, Q> = BTreeMap::new();
        let mut groups = Vec::new();
        for comp in cfg.components(&contracted) {
            if !memo.contains_key(&comp) {
                let t = match classify_singularity(cfg, &comp) {
                    Ok(t) => Some(refine(t)?),
                    Err(Error::NotNegativeDefinite) => None,
                    Err(e) => return Err(e),
                };
                let entry = if let Some(t) = t.filter(|t| type_ok(kind, t)) {
                    let rhs: Vec<Q> = comp
                        .iter()
                        .map(|&c| qi(cfg.curve(c).self_int + 2))
                        .collect();
                    let x = lattice::solve_forest(cfg, &comp, &rhs)?;
                    let curves = if comp.iter().all(|&c| cfg.neighbors(c).len() <= 2) {
                        cfg.oriented_path(&comp)
                    } else {
                        comp.clone()
                    };
                    Some((Group { curves, kind: t }, x))
                } else {
                    None
                };
                memo.insert(comp.clone(), entry);
            }
            match &memo[&comp] {
                None => continue 'masks,
                Some((g, x)) => {
                    delta.extend(comp.iter().copied().zip(x.iter().cloned()));
                    groups.push(g.clone());
                }
            }
        }
        let kept: Vec<usize> = (0..cfg.len()).filter(|c| !delta.contains_key(c)).collect();
        for &k in &kept {
            let mut deg = qi(-cfg.curve(k).self_int - 2);
            for n in cfg.neighbors(k) {
                if let Some(d) = delta.get(n) {
                    deg += d;
                }
            }
            if !degree_ok(kind, &deg) {
                continue 'masks;
            }
        }
        out.push(Modification::assemble(
            base.clone(),
            cfg.clone(),
            kept,
            groups,
        ));
    }
    Ok(out)
}

/// Blow-ups on one node of the minimal resolution as a binary tree: the
/// first blow-up, then the patterns on the two nodes it creates.
#[derive(Debug)]
struct Pattern {
    left_dec: i64,
    right_dec: i64,
    /// Self-intersections of the new curves, from the left end.
    seq: Vec<i64>,
    /// Their coefficients in `-K` over the base.
    delta: Vec<R>,
    split: Option<(Rc<Pattern>, Rc<Pattern>)>,
}

/// Necessary condition on `(-1)`-curves: both neighbours are contracted and
/// `K·E >= 0` (`> 0` for P).
///
/// Bounds for the coefficient `δ'` of a contracted curve on the target: its
/// `δ` over the base, and its `δ` when the whole run of `(<= -2)`-curves
/// through it is contracted. Curves that may still change (`open`) are cut
/// off the run and replaced by their base `δ`, which only raises the bound.
struct Pruner {
    kind: Option<ModKind>,
    segments: HashMap<(Vec<i64>, R, R), Rc<Vec<R>>>,
}

impl Pruner {
    fn bound_ok(&self, sum: &R) -> bool {
        match self.kind {
            None => true,
            Some(ModKind::Q) => *sum >= R::one(),
            Some(ModKind::P) => *sum > R::one(),
        }
    }

    fn segment(&mut self, seg: &[i64], wl: &R, wr: &R) -> Result<Rc<Vec<R>>> {
        let key = (seg.to_vec(), *wl, *wr);
        if let Some(v) = self.segments.get(&key) {
            return Ok(v.clone());
        }
        let v = Rc::new(chain_delta_weighted(seg, wl, wr)?);
        self.segments.insert(key, v.clone());
        Ok(v)
    }

    /// Upper bound for `δ'` at position `i` of a chain.
    fn chain_bound(
        &mut self,
        seq: &[i64],
        delta: &[R],
        open: &dyn Fn(usize) -> bool,
        i: usize,
    ) -> Result<R> {
        if open(i) {
            return Ok(delta[i]);
        }
        let len = seq.len();
        let mut a = i;
        while a > 0 && seq[a - 1] <= -2 && !open(a - 1) {
            a -= 1;
        }
        let mut b = i + 1;
        while b < len && seq[b] <= -2 && !open(b) {
            b += 1;
        }
        let wl = if a > 0 && open(a - 1) && seq[a - 1] <= -2 {
            delta[a - 1]
        } else {
            R::zero()
        };
        let wr = if b < len && open(b) && seq[b] <= -2 {
            delta[b]
        } else {
            R::zero()
        };
        let run = self.segment(&seq[a..b], &wl, &wr)?;
        Ok(run[i - a].min(delta[i]))
    }

    /// Checks every `(-1)`-curve of a chain.
    fn chain_ok(&mut self, seq: &[i64], delta: &[R], open: &dyn Fn(usize) -> bool) -> Result<bool> {
        if self.kind.is_none() {
            return Ok(true);
        }
        let len = seq.len();
        for i in (0..len).filter(|&i| seq[i] == -1) {
            let mut sum = R::zero();
            if i > 0 && seq[i - 1] <= -2 {
                sum = r_add(&sum, &self.chain_bound(seq, delta, open, i - 1)?)?;
            }
            if i + 1 < len && seq[i + 1] <= -2 {
                sum = r_add(&sum, &self.chain_bound(seq, delta, open, i + 1)?)?;
            }
            if !self.bound_ok(&sum) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks a configuration whose curves in `open` may still change.
    fn config_ok(&mut self, cfg: &CurveConfig, base_delta: &[R], open: &[usize]) -> Result<bool> {
        if self.kind.is_none() {
            return Ok(true);
        }
        let delta = blowup_deltas(cfg, base_delta)?;
        if let Some(order) = cfg.path_order() {
            let seq: Vec<i64> = order.iter().map(|&c| cfg.curve(c).self_int).collect();
            let d: Vec<R> = order.iter().map(|&c| delta[c]).collect();
            let is_open = |i: usize| open.contains(&order[i]);
            return self.chain_ok(&seq, &d, &is_open);
        }
        let minus: Vec<usize> = (0..cfg.len())
            .filter(|&c| cfg.curve(c).self_int == -1)
            .collect();
        if minus.is_empty() {
            return Ok(true);
        }
        let closed: Vec<usize> = (0..cfg.len())
            .filter(|&c| cfg.curve(c).self_int <= -2 && !open.contains(&c))
            .collect();
        let mut bound: Vec<R> = delta.clone();
        let to_q = |v: &R| Q::new((*v.numer()).into(), (*v.denom()).into());
        for comp in cfg.components(&closed) {
            let rhs: Vec<Q> = comp
                .iter()
                .map(|&c| {
                    let w: Q = cfg
                        .neighbors(c)
                        .iter()
                        .filter(|&&n| open.contains(&n) && cfg.curve(n).self_int <= -2)
                        .map(|&n| to_q(&delta[n]))
                        .sum();
                    qi(cfg.curve(c).self_int + 2) - w
                })
                .collect();
            match lattice::solve_forest(cfg, &comp, &rhs) {
                Ok(x) => {
                    for (&c, v) in comp.iter().zip(x) {
                        let v = to_r(&v)?;
                        if v < bound[c] {
                            bound[c] = v;
                        }
                    }
                }
                Err(Error::NotNegativeDefinite) => {}
                Err(e) => return Err(e),
            }
        }
        for e in minus {
            let mut sum = R::zero();
            for &n in cfg.neighbors(e) {
                if cfg.curve(n).self_int <= -2 {
                    sum = r_add(&sum, &bound[n])?;
                }
            }
            if !self.bound_ok(&sum) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `δ` over the base for every curve, from the original curves' values.
fn blowup_deltas(cfg: &CurveConfig, base_delta: &[R]) -> Result<Vec<R>> {
    let mut d: Vec<R> = Vec::with_capacity(cfg.len());
    for (i, c) in cfg.curves().iter().enumerate() {
        let v = match c.origin {
            Origin::Original(_) => base_delta[i],
            Origin::BlowUp {
                between: (a, b), ..
            } => r_sub(&r_add(&d[a], &d[b])?, &R::one())?,
        };
        d.push(v);
    }
    Ok(d)
}

struct PatternBank {
    pruner: Pruner,
    memo: HashMap<(R, R), Rc<Vec<Rc<Pattern>>>>,
    empty: Rc<Pattern>,
}

impl PatternBank {
    fn new(kind: Option<ModKind>) -> Self {
        PatternBank {
            pruner: Pruner {
                kind,
                segments: HashMap::new(),
            },
            memo: HashMap::new(),
            empty: Rc::new(Pattern {
                left_dec: 0,
                right_dec: 0,
                seq: Vec::new(),
                delta: Vec::new(),
                split: None,
            }),
        }
    }

    /// Patterns on a node of curves with coefficients `du`, `dv` that can
    /// occur in a modification.
    fn patterns(&mut self, du: &R, dv: &R) -> Result<Rc<Vec<Rc<Pattern>>>> {
        let key = (*du, *dv);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let mut out = vec![self.empty.clone()];
        let de = r_sub(&r_add(du, dv)?, &R::one())?;
        if !de.is_negative() {
            let ls = self.patterns(du, &de)?;
            let rs = self.patterns(&de, dv)?;
            for l in ls.iter() {
                for r in rs.iter() {
                    // The end curves are still open; -2 stands in for them.
                    let mut seq = vec![-2];
                    seq.extend_from_slice(&l.seq);
                    seq.push(-1 - l.right_dec - r.left_dec);
                    seq.extend_from_slice(&r.seq);
                    seq.push(-2);
                    let mut delta = vec![*du];
                    delta.extend(l.delta.iter().copied());
                    delta.push(de);
                    delta.extend(r.delta.iter().copied());
                    delta.push(*dv);
                    let last = seq.len() - 1;
                    if !self
                        .pruner
                        .chain_ok(&seq, &delta, &|i| i == 0 || i == last)?
                    {
                        continue;
                    }
                    seq.pop();
                    seq.remove(0);
                    delta.pop();
                    delta.remove(0);
                    out.push(Rc::new(Pattern {
                        left_dec: 1 + l.left_dec,
                        right_dec: 1 + r.right_dec,
                        seq,
                        delta,
                        split: Some((l.clone(), r.clone())),
                    }));
                }
            }
        }
        let out = Rc::new(out);
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

fn apply_pattern(
    cfg: &mut CurveConfig,
    a: usize,
    b: usize,
    p: &Pattern,
    step: &mut usize,
) -> Result<()> {
    if let Some((l, r)) = &p.split {
        let e = cfg.blow_up_in_place(a, b, *step)?;
        *step += 1;
        apply_pattern(cfg, a, e, l, step)?;
        apply_pattern(cfg, e, b, r, step)?;
    }
    Ok(())
}

/// Calls `f` on every admissible blow-up configuration of the minimal
/// resolution of `g` that passes the `(-1)`-curve test for `prune`.
fn for_each_configuration(
    g: &PairGraph,
    prune: Option<ModKind>,
    opts: &SearchOptions,
    f: impl FnMut(CurveConfig) -> Result<()>,
) -> Result<()> {
    let base = CurveConfig::minimal_resolution(g);
    let all: Vec<usize> = (0..base.len()).collect();
    let delta = lattice::discrepancies(&base, &all)?;
    let base_delta: Vec<R> = all
        .iter()
        .map(|&c| to_r(&delta.coeff(c)))
        .collect::<Result<_>>()?;
    // Breadth-first from the root, so that curves are finished early.
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([(base.root(), usize::MAX)]);
    while let Some((c, parent)) = queue.pop_front() {
        for &n in base.neighbors(c) {
            if n != parent {
                edges.push((c, n));
                queue.push_back((n, c));
            }
        }
    }
    if opts.reverse_order {
        edges.reverse();
    }
    let mut bank = PatternBank::new(prune);

    let lists: Vec<Rc<Vec<Rc<Pattern>>>> = edges
        .iter()
        .map(|&(a, b)| bank.patterns(&base_delta[a], &base_delta[b]))
        .collect::<Result<_>>()?;
    // Original curves that still gain blow-ups after edge `k` is filled in.
    let open_after: Vec<Vec<usize>> = (0..edges.len())
        .map(|k| {
            let mut v: Vec<usize> = edges[k + 1..].iter().flat_map(|&(a, b)| [a, b]).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    struct Walk<'a, F> {
        edges: &'a [(usize, usize)],
        lists: &'a [Rc<Vec<Rc<Pattern>>>],
        open_after: &'a [Vec<usize>],
        base_delta: &'a [R],
        bank: &'a mut PatternBank,
        visited: usize,
        cap: usize,
        f: F,
    }
    fn walk<F: FnMut(CurveConfig) -> Result<()>>(
        w: &mut Walk<'_, F>,
        k: usize,
        cfg: &CurveConfig,
        step: usize,
    ) -> Result<()> {
        if k == w.edges.len() {
            return (w.f)(cfg.clone());
        }
        let (a, b) = w.edges[k];
        for p in w.lists[k].iter() {
            w.visited += 1;
            if w.visited > w.cap {
                return Err(Error::SafetyCapExceeded(w.cap));
            }
            let mut next = cfg.clone();
            let mut st = step;
            apply_pattern(&mut next, a, b, p, &mut st)?;
            if w.bank
                .pruner
                .config_ok(&next, w.base_delta, &w.open_after[k])?
            {
                walk(w, k + 1, &next, st)?;
            }
        }
        Ok(())
    }
    let mut w = Walk {
        edges: &edges,
        lists: &lists,
        open_after: &open_after,
        base_delta: &base_delta,
        bank: &mut bank,
        visited: 0,
        cap: opts.safety_cap,
        f,
    };
    walk(&mut w, 0, &base, 0)
}

/// Q- or P-modifications of the singularity underlying `g`, sorted by key.
pub fn enumerate_modifications(
    g: &PairGraph,
    kind: ModKind,
    engine: Engine,
    opts: &SearchOptions,
) -> Result<Vec<Modification>> {
    let mut found: BTreeMap<ModKey, Modification> = BTreeMap::new();
    let mut memo = IntervalMemo::new();
    for_each_configuration(g, Some(kind), opts, |cfg| {
        let engine = match engine {
            Engine::Auto if cfg.path_order().is_some() => Engine::ChainDfs,
            Engine::Auto => match (0..cfg.len())
                .filter(|&c| cfg.neighbors(c).len() > 2)
                .count()
            {
                1 => Engine::Fork,
                _ => Engine::Subsets,
            },
            e => e,
        };
        let mods = match engine {
            Engine::ChainDfs => chain_dfs(g, &cfg, kind, &mut memo)?,
            Engine::Fork => fork_search(g, &cfg, kind, &mut memo)?,
            _ => subsets(g, &cfg, kind)?,
        };
        for m in mods {
            if let Some(prev) = found.insert(m.key(), m) {
                return Err(Error::Inconsistent(format!(
                    "modification {} enumerated twice",
                    prev.target()
                )));
            }
        }
        Ok(())
    })?;
    Ok(found.into_values().collect())
}

pub fn enumerate_q_modifications(g: &PairGraph) -> Result<Vec<Modification>> {
    enumerate_modifications(g, ModKind::Q, Engine::Auto, &SearchOptions::default())
}

pub fn enumerate_p_modifications(g: &PairGraph) -> Result<Vec<Modification>> {
    enumerate_modifications(g, ModKind::P, Engine::Auto, &SearchOptions::default())
}

/// Keeps the modifications with `K` ample and only Du Val and T points.
pub fn filter_p_modifications(qmods: &[Modification]) -> Result<Vec<Modification>> {
    let mut out = Vec::new();
    for m in qmods {
        if m.is_p_modification()? {
            out.push(m.clone());
        }
    }
    Ok(out)
}

/// The M-modification of a P-modification: Du Val points are resolved and
/// every `T(r,n,a)` group is split by `r-1` node blow-ups into `r` copies of
/// the chain of `1/n^2(1,an-1)`.
pub fn p_to_m(p: &Modification) -> Result<Modification> {
    let mut cfg = p.config.clone();
    let mut kept = p.kept.clone();
    let mut groups = Vec::new();
    for g in &p.groups {
        match &g.kind {
            t if t.is_du_val() => kept.extend_from_slice(&g.curves),
            SingularityType::T(tp) => {
                let m = m_chain(*tp)?;
                // Blow down the M-chain, remembering where each (-1)-curve sat.
                let mut ints = m.self_ints.clone();
                let mut events = Vec::new();
                while let Some(i) = ints.iter().position(|&x| x == -1) {
                    if i == 0 || i + 1 == ints.len() {
                        return Err(Error::Inconsistent(format!(
                            "M-chain of {tp} has a (-1)-curve at an end"
                        )));
                    }
                    ints.remove(i);
                    ints[i - 1] += 1;
                    ints[i] += 1;
                    events.push(i);
                }
                let mut ids = g.curves.clone();
                let own: Vec<i64> = ids.iter().map(|&c| cfg.curve(c).self_int).collect();
                if own != ints {
                    return Err(Error::Inconsistent(format!(
                        "group of type {tp} does not blow down from its M-chain"
                    )));
                }
                for &i in events.iter().rev() {
                    cfg = blow_up_node(&cfg, ids[i - 1], ids[i])?;
                    ids.insert(i, cfg.len() - 1);
                }
                for piece in &m.groups {
                    let curves: Vec<usize> = piece.iter().map(|&j| ids[j]).collect();
                    let kind = refine(classify_singularity(&cfg, &curves)?)?;
                    groups.push(Group { curves, kind });
                }
                for (j, &id) in ids.iter().enumerate() {
                    if m.self_ints[j] == -1 {
                        kept.push(id);
                    }
                }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "p_to_m needs Du Val and T points, found {other}"
                )))
            }
        }
    }
    kept.sort_unstable();
    Ok(Modification::assemble(p.base.clone(), cfg, kept, groups))
}

/// Copies the blow-ups of `src` into `dst`, with `map[i]` the image of the
/// original curve `i` of `src`. Returns the extended map.
fn replay_blowups(src: &CurveConfig, dst: &mut CurveConfig, map: &[usize]) -> Result<Vec<usize>> {
    let mut map = map.to_vec();
    map.resize(src.len(), usize::MAX);
    let mut created: Vec<(usize, usize, (usize, usize))> = src
        .curves()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c.origin {
            Origin::BlowUp { step, between } => Some((step, i, between)),
            Origin::Original(_) => None,
        })
        .collect();
    created.sort_unstable();
    for (_, id, (a, b)) in created {
        *dst = blow_up_node(dst, map[a], map[b])?;
        map[id] = dst.len() - 1;
    }
    Ok(map)
}

fn dihedral_parts(g: &PairGraph) -> Result<(usize, u64)> {
    if !g.kind.is_dihedral() {
        return Err(Error::InvalidArgument(format!(
            "{g} is not a dihedral graph"
        )));
    }
    Ok((g.chain.len(), g.chain.entries()[0]))
}

/// Pair-relevant P-modifications of a dihedral quotient, built from the
/// P-modifications of the chain `[c2,...,cs]` (one trivial modification when
/// `s = 1`).
///
/// With `C2` kept or in a non-Du Val group, `C1` is kept when `c1 > 2`; when
/// `c1 = 2` the two `(-2)`-branches, `C1` and a Du Val `A` group through
/// `C2` (if any) form a `D` point.
pub fn dihedral_p_modifications(g: &PairGraph) -> Result<Vec<Modification>> {
    let (s, c1) = dihedral_parts(g)?;
    let fork0 = CurveConfig::minimal_resolution(g);
    let inner: Vec<Option<Modification>> = if s == 1 {
        vec![None]
    } else {
        let chain = PairGraph::new(
            GraphKind::CyclicPlain,
            crate::notation::Chain::new(g.chain.entries()[1..].to_vec())?,
        );
        enumerate_p_modifications(&chain)?
            .into_iter()
            .map(Some)
            .collect()
    };
    let mut out = Vec::new();
    for pm in inner {
        let mut cfg = fork0.clone();
        let mut kept = Vec::new();
        let mut c2_group_du_val = false;
        let mut c2_group: Vec<usize> = Vec::new();
        if let Some(pm) = &pm {
            let orig: Vec<usize> = (1..s).collect();
            let map = replay_blowups(&pm.config, &mut cfg, &orig)?;
            kept = pm.kept.iter().map(|&c| map[c]).collect();
            if let Some(gr) = pm.groups.iter().find(|gr| gr.curves.contains(&0)) {
                c2_group_du_val = gr.kind.is_du_val();
                c2_group = gr.curves.iter().map(|&c| map[c]).collect();
            }
        }
        let c2_kept_or_absent = c2_group.is_empty();
        if c1 > 2 || !(c2_kept_or_absent || c2_group_du_val) {
            kept.push(0);
        }
        out.push(Modification::from_kept(g.clone(), cfg, kept)?);
    }
    let mut keyed: BTreeMap<ModKey, Modification> = BTreeMap::new();
    for m in out {
        keyed.insert(m.key(), m);
    }
    Ok(keyed.into_values().collect())
}

/// Which of the four cases produced a dihedral P-modification from a
/// P-modification of `[2, c1, ..., cs]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DihedralCase {
    /// `C1` kept; the two branches are `A1` points.
    C1Kept,
    /// `C0'` and `C1` in a Du Val group, which absorbs `C0''`.
    DuValThroughC1,
    /// `C1` in a group without `C0'`; both branches kept.
    BranchesKept,
    /// `C0'` and `C1` in a non-Du Val group; `C0''` kept (or the mirror).
    OneBranchKept,
}

impl DihedralCase {
    pub fn pair_relevant(self) -> bool {
        matches!(self, DihedralCase::C1Kept | DihedralCase::DuValThroughC1)
    }
}

/// All P-modifications of a dihedral quotient via the P-modifications of the
/// chain `[2, c1, ..., cs]` (the fork with one branch folded into the chain).
pub fn dihedral_p_modifications_four_cases(
    g: &PairGraph,
) -> Result<Vec<(DihedralCase, Modification)>> {
    let (s, _) = dihedral_parts(g)?;
    let fork0 = CurveConfig::minimal_resolution(g);
    let mut entries = vec![2];
    entries.extend_from_slice(g.chain.entries());
    let chain = PairGraph::new(
        GraphKind::CyclicPlain,
        crate::notation::Chain::new(entries)?,
    );
    let mut out = Vec::new();
    for pm in enumerate_p_modifications(&chain)? {
        let group_of = |c: usize| pm.groups.iter().position(|gr| gr.curves.contains(&c));
        let (g0, g1) = (group_of(0), group_of(1));
        let case = match (g0, g1) {
            (_, None) => DihedralCase::C1Kept,
            (Some(a), Some(b)) if a == b && pm.groups[a].kind.is_du_val() => {
                DihedralCase::DuValThroughC1
            }
            (Some(a), Some(b)) if a == b => DihedralCase::OneBranchKept,
            _ => DihedralCase::BranchesKept,
        };
        let mirrors: &[bool] = if case == DihedralCase::OneBranchKept {
            &[false, true]
        } else {
            &[false]
        };
        for &mirror in mirrors {
            let (this, other) = if mirror { (s + 1, s) } else { (s, s + 1) };
            let mut orig = vec![this];
            orig.extend(0..s);
            let mut cfg = fork0.clone();
            let map = replay_blowups(&pm.config, &mut cfg, &orig)?;
            let mut kept: Vec<usize> = pm.kept.iter().map(|&c| map[c]).collect();
            if matches!(
                case,
                DihedralCase::BranchesKept | DihedralCase::OneBranchKept
            ) {
                kept.push(other);
            }
            out.push((case, Modification::from_kept(g.clone(), cfg, kept)?));
        }
    }
    out.sort_by_cached_key(|(c, m)| (m.key(), *c));
    Ok(out)
}

/// P-modifications of the fork found by direct enumeration.
pub fn dihedral_p_modifications_direct(g: &PairGraph) -> Result<Vec<Modification>> {
    dihedral_parts(g)?;
    enumerate_modifications(g, ModKind::P, Engine::Fork, &SearchOptions::default())
}

/// Both `(-2)`-branches lie in Du Val groups.
pub fn is_pair_relevant(m: &Modification) -> bool {
    let Some((l1, l2)) = m.config.dihedral_leaves() else {
        return false;
    };
    [l1, l2].iter().all(|&l| {
        m.groups
            .iter()
            .any(|g| g.curves.contains(&l) && g.kind.is_du_val())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DihedralCheck {
    pub pair_relevant: usize,
    pub total: usize,
}

/// Checks that the bijection and the four-case construction give the same
/// pair-relevant P-modifications, and that every four-case output is a
/// P-modification in the stated case. With `direct`, also compares with the
/// enumeration on the fork itself.
pub fn dihedral_cross_check(g: &PairGraph, direct: bool) -> Result<DihedralCheck> {
    let keys = |ms: &mut dyn Iterator<Item = &Modification>| -> Vec<ModKey> {
        let mut k: Vec<ModKey> = ms.map(Modification::key).collect();
        k.sort();
        k
    };
    let bij = dihedral_p_modifications(g)?;
    let cases = dihedral_p_modifications_four_cases(g)?;
    for (case, m) in &cases {
        if !m.is_p_modification()? || case.pair_relevant() != is_pair_relevant(m) {
            return Err(Error::Inconsistent(format!(
                "{g}: case {case:?} produced {}",
                m.target()
            )));
        }
    }
    let bij_keys = keys(&mut bij.iter());
    let case_keys = keys(
        &mut cases
            .iter()
            .filter(|(c, _)| c.pair_relevant())
            .map(|(_, m)| m),
    );
    if bij_keys != case_keys {
        return Err(Error::Inconsistent(format!(
            "{g}: pair-relevant counts differ (bijection {}, four cases {})",
            bij_keys.len(),
            case_keys.len()
        )));
    }
    let all_cases = keys(&mut cases.iter().map(|(_, m)| m));
    if direct {
        let found = dihedral_p_modifications_direct(g)?;
        let all_direct = keys(&mut found.iter());
        if all_cases != all_direct {
            return Err(Error::Inconsistent(format!(
                "{g}: four-case union has {} modifications, direct search {}",
                all_cases.len(),
                all_direct.len()
            )));
        }
    }
    Ok(DihedralCheck {
        pair_relevant: bij_keys.len(),
        total: all_cases.len(),
    })
}
