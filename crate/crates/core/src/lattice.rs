//! Intersection theory on trees of smooth rational curves.
//!
//! Sign convention: the divisor `Δ` returned by the solvers is minus the
//! discrepancy, so `K_Y + Δ` is numerically trivial on the contracted curves
//! and quotient singularities have coefficients in `[0, 1)`.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::notation::{GraphKind, PairGraph};
use crate::rational::{qi, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Origin {
    /// Curve `C_i` of the minimal resolution of the base.
    Original(usize),
    /// Created by the `step`-th blow-up, at the node of the two curves.
    BlowUp {
        step: usize,
        between: (usize, usize),
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Curve {
    pub self_int: i64,
    /// Number of boundary branches through the curve.
    pub boundary: u32,
    pub origin: Origin,
    pub exceptional: bool,
}

/// A tree (or forest) of smooth rational curves.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CurveConfig {
    curves: Vec<Curve>,
    adj: Vec<Vec<usize>>,
    /// The two `(-2)`-branches of a dihedral fork.
    dihedral_leaves: Option<(usize, usize)>,
}

/// Boundary branch `index` through curve `curve`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BranchId {
    pub curve: usize,
    pub index: u32,
}

pub type BoundaryWeights = BTreeMap<BranchId, Q>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RationalDivisor {
    pub coeffs: BTreeMap<usize, Q>,
    pub boundary_coeffs: BoundaryWeights,
}

impl RationalDivisor {
    pub fn coeff(&self, curve: usize) -> Q {
        self.coeffs.get(&curve).cloned().unwrap_or_else(Q::zero)
    }
}

impl CurveConfig {
    pub fn new(curves: Vec<Curve>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); curves.len()];
        for &(a, b) in edges {
            if a >= curves.len() || b >= curves.len() {
                return Err(Error::NoSuchCurve(a.max(b)));
            }
            if a == b || adj[a].contains(&b) {
                return Err(Error::InvalidArgument(format!("bad edge ({a},{b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let cfg = CurveConfig {
            curves,
            adj,
            dihedral_leaves: None,
        };
        let all: Vec<usize> = (0..cfg.len()).collect();
        if edges.len() + cfg.components(&all).len() != cfg.len() {
            return Err(Error::InvalidArgument("curve graph has a cycle".into()));
        }
        Ok(cfg)
    }

    /// A chain with self-intersections `-entries[i]` and the given number of
    /// boundary branches at the two ends.
    pub fn chain(entries: &[u64], left_boundary: u32, right_boundary: u32) -> Self {
        let mut curves: Vec<Curve> = entries
            .iter()
            .enumerate()
            .map(|(i, &c)| Curve {
                self_int: -(c as i64),
                boundary: 0,
                origin: Origin::Original(i),
                exceptional: true,
            })
            .collect();
        if let Some(first) = curves.first_mut() {
            first.boundary += left_boundary;
        }
        if let Some(last) = curves.last_mut() {
            last.boundary += right_boundary;
        }
        let edges: Vec<(usize, usize)> = (1..entries.len()).map(|i| (i - 1, i)).collect();
        CurveConfig::new(curves, &edges).expect("a path is a tree")
    }

    /// A tree of exceptional curves without boundary.
    pub fn tree(entries: &[u64], edges: &[(usize, usize)]) -> Result<Self> {
        let curves = entries
            .iter()
            .enumerate()
            .map(|(i, &c)| Curve {
                self_int: -(c as i64),
                boundary: 0,
                origin: Origin::Original(i),
                exceptional: true,
            })
            .collect();
        CurveConfig::new(curves, edges)
    }

    /// Minimal resolution of a decorated graph.
    ///
    /// Chain curves are numbered `0..s` from the left. For dihedral graphs
    /// `0..s` are `C1..Cs`, and `s`, `s+1` are the two `(-2)`-curves at `C1`.
    pub fn minimal_resolution(g: &PairGraph) -> Self {
        let e = g.chain.entries();
        let s = e.len();
        match g.kind {
            GraphKind::CyclicPlain => CurveConfig::chain(e, 0, 0),
            GraphKind::CyclicB => CurveConfig::chain(e, 1, 0),
            GraphKind::CyclicD => CurveConfig::chain(e, 1, 1),
            GraphKind::DihedralPlain | GraphKind::DihedralD => {
                let mut entries = e.to_vec();
                entries.extend([2, 2]);
                let mut edges: Vec<(usize, usize)> = (1..s).map(|i| (i - 1, i)).collect();
                edges.extend([(0, s), (0, s + 1)]);
                let mut cfg = CurveConfig::tree(&entries, &edges).expect("a fork is a tree");
                if g.kind == GraphKind::DihedralD {
                    cfg.curves[s - 1].boundary += 1;
                }
                cfg.dihedral_leaves = Some((s, s + 1));
                cfg
            }
        }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn dihedral_leaves(&self) -> Option<(usize, usize)> {
        self.dihedral_leaves
    }

    pub fn curve(&self, i: usize) -> &Curve {
        &self.curves[i]
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.adj.iter().enumerate() {
            for &b in nb {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn branches(&self) -> Vec<BranchId> {
        let mut out = Vec::new();
        for (i, c) in self.curves.iter().enumerate() {
            for index in 0..c.boundary {
                out.push(BranchId { curve: i, index });
            }
        }
        out
    }

    /// Every boundary branch with weight `d`.
    pub fn uniform_weights(&self, d: &Q) -> BoundaryWeights {
        self.branches()
            .into_iter()
            .map(|b| (b, d.clone()))
            .collect()
    }

    pub fn exceptional_curves(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.curves[i].exceptional)
            .collect()
    }

    /// The curve `C_0` of the base resolution.
    pub fn root(&self) -> usize {
        self.curves
            .iter()
            .position(|c| c.origin == Origin::Original(0))
            .unwrap_or(0)
    }

    /// Connected components of the induced subgraph on `subset`, each listed
    /// in increasing curve order; components are ordered by their smallest
    /// curve.
    pub fn components(&self, subset: &[usize]) -> Vec<Vec<usize>> {
        let mut member = vec![false; self.len()];
        for &c in subset {
            member[c] = true;
        }
        let mut seen = vec![false; self.len()];
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let mut out = Vec::new();
        for &start in &sorted {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if member[w] && !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Distances from `from` along the tree; unreachable curves get `usize::MAX`.
    pub fn distances(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// A connected path-shaped group listed from the end nearer the root
    /// (ties broken by the smaller curve index).
    pub fn oriented_path(&self, group: &[usize]) -> Vec<usize> {
        if group.len() <= 1 {
            return group.to_vec();
        }
        let in_group = |c: usize| group.contains(&c);
        let dist = self.distances(self.root());
        let start = group
            .iter()
            .copied()
            .filter(|&c| self.adj[c].iter().filter(|&&d| in_group(d)).count() <= 1)
            .min_by_key(|&c| (dist[c], c))
            .expect("a path has an end");
        let mut order = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        while let Some(&next) = self.adj[cur].iter().find(|&&d| d != prev && in_group(d)) {
            order.push(next);
            prev = cur;
            cur = next;
        }
        order
    }

    /// All curves in path order from the root end, if the graph is a path.
    pub fn path_order(&self) -> Option<Vec<usize>> {
        if self.adj.iter().any(|nb| nb.len() > 2) {
            return None;
        }
        let all: Vec<usize> = (0..self.len()).collect();
        if self.components(&all).len() != 1 {
            return None;
        }
        Some(self.oriented_path(&all))
    }

    /// Blows up the node of `a` and `b`: a new `(-1)`-curve is inserted
    /// between them and both self-intersections drop by one.
    pub fn blow_up_node(&self, a: usize, b: usize, step: usize) -> Result<Self> {
        let mut out = self.clone();
        out.blow_up_in_place(a, b, step)?;
        Ok(out)
    }

    /// Like `blow_up_node`, returning the id of the new `(-1)`-curve.
    pub fn blow_up_in_place(&mut self, a: usize, b: usize, step: usize) -> Result<usize> {
        if a >= self.len() {
            return Err(Error::NoSuchCurve(a));
        }
        if b >= self.len() {
            return Err(Error::NoSuchCurve(b));
        }
        if !self.are_adjacent(a, b) || !self.curves[a].exceptional || !self.curves[b].exceptional {
            return Err(Error::NotANode(a, b));
        }
        let e = self.curves.len();
        self.curves.push(Curve {
            self_int: -1,
            boundary: 0,
            origin: Origin::BlowUp {
                step,
                between: (a, b),
            },
            exceptional: true,
        });
        self.curves[a].self_int -= 1;
        self.curves[b].self_int -= 1;
        for (x, y) in [(a, b), (b, a)] {
            let slot = self.adj[x].iter().position(|&w| w == y).unwrap();
            self.adj[x][slot] = e;
        }
        self.adj.push(vec![a, b]);
        Ok(e)
    }

    fn boundary_weight(&self, weights: &BoundaryWeights, curve: usize) -> Q {
        weights
            .range(
                BranchId { curve, index: 0 }..=BranchId {
                    curve,
                    index: u32::MAX,
                },
            )
            .map(|(_, w)| w.clone())
            .sum()
    }
}

/// `M[i][j]` = intersection number of `subset[i]` and `subset[j]`.
pub fn intersection_matrix(cfg: &CurveConfig, subset: &[usize]) -> Vec<Vec<i64>> {
    subset
        .iter()
        .map(|&a| {
            subset
                .iter()
                .map(|&b| {
                    if a == b {
                        cfg.curve(a).self_int
                    } else if cfg.are_adjacent(a, b) {
                        1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

/// Sylvester's criterion with fraction-free (Bareiss) elimination: the
/// `k`-th leading principal minor must have sign `(-1)^k`.
pub fn is_negative_definite(m: &[Vec<i64>]) -> bool {
    let n = m.len();
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| row.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        let minor = &a[k][k];
        let want_negative = k % 2 == 0;
        if minor.is_zero() || minor.is_negative() != want_negative {
            return false;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    true
}

/// Solves `M x = rhs` where `M` is the intersection matrix of `subset`, by
/// eliminating leaves of the induced forest. Fails unless `M` is negative
/// definite.
pub fn solve_forest(cfg: &CurveConfig, subset: &[usize], rhs: &[Q]) -> Result<Vec<Q>> {
    let k = subset.len();
    let mut pos = vec![usize::MAX; cfg.len()];
    for (i, &c) in subset.iter().enumerate() {
        pos[c] = i;
    }
    let mut parent = vec![usize::MAX; k];
    let mut order = Vec::with_capacity(k);
    let mut visited = vec![false; k];
    for root in 0..k {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in cfg.neighbors(subset[v]) {
                let wi = pos[w];
                if wi != usize::MAX && !visited[wi] {
                    visited[wi] = true;
                    parent[wi] = v;
                    stack.push(wi);
                }
            }
        }
    }
    let mut diag: Vec<Q> = subset.iter().map(|&c| qi(cfg.curve(c).self_int)).collect();
    let mut r = rhs.to_vec();
    for &v in order.iter().rev() {
        if !diag[v].is_negative() {
            return Err(Error::NotNegativeDefinite);
        }
        let p = parent[v];
        if p != usize::MAX {
            let inv = diag[v].recip();
            diag[p] -= &inv;
            let t = &r[v] * &inv;
            r[p] -= t;
        }
    }
    let mut x = vec![Q::zero(); k];
    for &v in &order {
        let p = parent[v];
        let above = if p == usize::MAX {
            Q::zero()
        } else {
            x[p].clone()
        };
        x[v] = (&r[v] - above) / &diag[v];
    }
    Ok(x)
}

/// Solves `(K + B_w + Δ)·C_j = 0` for every `C_j` in `contracted`, where
/// `B_w` is the weighted boundary.
pub fn log_discrepancy_on(
    cfg: &CurveConfig,
    contracted: &[usize],
    weights: &BoundaryWeights,
) -> Result<RationalDivisor> {
    let rhs: Vec<Q> = contracted
        .iter()
        .map(|&c| qi(cfg.curve(c).self_int + 2) - cfg.boundary_weight(weights, c))
        .collect();
    let x = solve_forest(cfg, contracted, &rhs)?;
    Ok(RationalDivisor {
        coeffs: contracted.iter().copied().zip(x).collect(),
        boundary_coeffs: weights.clone(),
    })
}

/// `Δ` with `K + Δ` numerically trivial on `contracted`.
pub fn discrepancies(cfg: &CurveConfig, contracted: &[usize]) -> Result<RationalDivisor> {
    log_discrepancy_on(cfg, contracted, &BoundaryWeights::new())
}

/// `Δ` with `K + Σ d_b B_b + Δ` numerically trivial on every exceptional curve.
pub fn log_discrepancy_solve(
    cfg: &CurveConfig,
    weights: &BoundaryWeights,
) -> Result<RationalDivisor> {
    log_discrepancy_on(cfg, &cfg.exceptional_curves(), weights)
}

/// Intersection of `K` (plus the weighted boundary, if given) with the image
/// of `kept` after contracting `contracted`.
pub fn canonical_degree(
    cfg: &CurveConfig,
    contracted: &[usize],
    kept: usize,
    weights: Option<&BoundaryWeights>,
) -> Result<Q> {
    if contracted.contains(&kept) {
        return Err(Error::InvalidArgument(format!(
            "curve {kept} is contracted"
        )));
    }
    let empty = BoundaryWeights::new();
    let weights = weights.unwrap_or(&empty);
    let delta = log_discrepancy_on(cfg, contracted, weights)?;
    let mut deg = qi(-cfg.curve(kept).self_int - 2) + cfg.boundary_weight(weights, kept);
    for &w in cfg.neighbors(kept) {
        if let Some(c) = delta.coeffs.get(&w) {
            deg += c;
        }
    }
    Ok(deg)
}

/// A Q-divisor `k K + Σ a_i A_i + Σ w_b B_b` on the resolution.
#[derive(Clone, Debug, Default)]
pub struct DivisorForm {
    pub canonical: Q,
    pub curves: BTreeMap<usize, Q>,
    pub branches: BoundaryWeights,
}

/// Intersection number of the push-forward of `form` with the image of
/// `curve`, after contracting `contracted` (numerical pullback).
pub fn pullback_degree(
    cfg: &CurveConfig,
    contracted: &[usize],
    form: &DivisorForm,
    curve: usize,
) -> Result<Q> {
    if contracted.contains(&curve) || form.curves.keys().any(|c| contracted.contains(c)) {
        return Err(Error::InvalidArgument(
            "divisor form must be supported off the contracted curves".into(),
        ));
    }
    let dot = |target: usize| -> Q {
        let mut v = &form.canonical * qi(-cfg.curve(target).self_int - 2)
            + cfg.boundary_weight(&form.branches, target);
        for (&a, coeff) in &form.curves {
            if a == target {
                v += coeff * qi(cfg.curve(a).self_int);
            } else if cfg.are_adjacent(a, target) {
                v += coeff;
            }
        }
        v
    };
    let rhs: Vec<Q> = contracted.iter().map(|&c| -dot(c)).collect();
    let x = solve_forest(cfg, contracted, &rhs)?;
    let mut deg = dot(curve);
    for (&c, xc) in contracted.iter().zip(&x) {
        if cfg.are_adjacent(c, curve) {
            deg += xc;
        }
    }
    Ok(deg)
}

/// Smallest `m >= 1` such that `m (K + Σ d_b B_b)` has integral numerical
/// pullback, computed over all exceptional curves.
pub fn cartier_index(cfg: &CurveConfig, weights: &BoundaryWeights) -> Result<BigInt> {
    let delta = log_discrepancy_solve(cfg, weights)?;
    Ok(delta
        .coeffs
        .values()
        .chain(weights.values())
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom())))
}
