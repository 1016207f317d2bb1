//! Data model for quotient singularities and decorated dual graphs.
//!
//! A cyclic quotient singularity is written either as a reduced fraction
//! `n/q` or as its Hirzebruch–Jung chain `[c1,...,cs]`. Pairs with a boundary
//! curve are described by a [`PairGraph`]: a chain (or a dihedral fork) whose
//! ends may carry boundary branches, written `*` in the text notation.
//!
//! Text notation:
//!
//! ```text
//! graph  := node ("-" node)*
//!         | "[2,2;" node (("," | "-") node)* "]"      dihedral fork
//! node   := INT | "*" | "[" box "]"
//! box    := "A_" INT | INT "/" INT | INT ("," INT)*
//! ```
//!
//! Boxes are expanded when parsed: `[A_r]` is `r` curves of self-intersection
//! `-2`, `[n/q]` is the chain of `n/q`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjcf::{hj_evaluate_entries, hj_expand};
use crate::lattice::{self, CurveConfig};

/// A cyclic quotient `1/n(1,q)` with `gcd(n,q) = 1` and `1 <= q < n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fraction {
    n: BigInt,
    q: BigInt,
}

impl Fraction {
    /// Strict constructor: rejects non-coprime or out-of-range input.
    pub fn new(n: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self> {
        let (n, q) = (n.into(), q.into());
        let invalid = |reason| Error::InvalidFraction {
            n: n.to_string(),
            q: q.to_string(),
            reason,
        };
        if !q.is_positive() {
            return Err(invalid("q must be positive"));
        }
        if q >= n {
            return Err(invalid("q must be smaller than n"));
        }
        if !n.gcd(&q).is_one() {
            return Err(invalid("n and q are not coprime"));
        }
        Ok(Fraction { n, q })
    }

    /// Divides `n` and `q` by their gcd before validating, so that
    /// `1/n(1,q)` and `1/(n/g)(1,q/g)` name the same singularity.
    pub fn reduced(n: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self> {
        let (n, q) = (n.into(), q.into());
        if n.is_zero() || q.is_zero() {
            return Fraction::new(n, q);
        }
        let g = n.gcd(&q);
        Fraction::new(&n / &g, &q / &g)
    }

    pub fn n(&self) -> &BigInt {
        &self.n
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    /// The same singularity with the coordinates swapped: `n/q'` where
    /// `q q' = 1 mod n`.
    pub fn swapped(&self) -> Fraction {
        let (qi, _) =
            crate::hjcf::mod_inverse(&self.q, &self.n).expect("stored fractions are coprime");
        Fraction {
            n: self.n.clone(),
            q: qi,
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.n, self.q)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.trim().split_once('/').ok_or_else(|| Error::Parse {
            pos: 0,
            msg: format!("expected n/q, got {s:?}"),
        })?;
        let parse = |t: &str, pos: usize| {
            t.trim().parse::<BigInt>().map_err(|_| Error::Parse {
                pos,
                msg: format!("not an integer: {t:?}"),
            })
        };
        Fraction::new(parse(a, 0)?, parse(b, a.len() + 1)?)
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hirzebruch–Jung chain: negatives of the self-intersections along the
/// minimal resolution. Every entry is at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Chain(Vec<u64>);

impl Chain {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyChain);
        }
        if let Some(&c) = entries.iter().find(|&&c| c < 2) {
            return Err(Error::EntryTooSmall(c as i64));
        }
        Ok(Chain(entries))
    }

    /// The `A_r` chain `[2,...,2]`.
    pub fn twos(r: usize) -> Result<Self> {
        Chain::new(vec![2; r])
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of the entries.
    pub fn weight(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn reversed(&self) -> Chain {
        Chain(self.0.iter().rev().copied().collect())
    }

    pub fn is_du_val(&self) -> bool {
        self.0.iter().all(|&c| c == 2)
    }
}

impl TryFrom<Vec<u64>> for Chain {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Chain::new(v)
    }
}

impl From<Chain> for Vec<u64> {
    fn from(c: Chain) -> Self {
        c.0
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl FromStr for Chain {
    type Err = Error;

    /// Accepts `[4,3,2]`, `4,3,2` or `4 3 2`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let mut entries = Vec::new();
        let mut offset = 0;
        for tok in inner.split(|c: char| c == ',' || c.is_whitespace()) {
            if !tok.is_empty() {
                let c = tok.parse::<u64>().map_err(|_| Error::Parse {
                    pos: offset,
                    msg: format!("not a chain entry: {tok:?}"),
                })?;
                entries.push(c);
            }
            offset += tok.len() + 1;
        }
        Chain::new(entries)
    }
}

/// Shape and boundary decoration of a [`PairGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphKind {
    /// `c1 - ... - cs`
    CyclicPlain,
    /// `* - c1 - ... - cs`: one boundary branch, attached at `c1`.
    CyclicB,
    /// `* - c1 - ... - cs - *`
    CyclicD,
    /// Fork with two `(-2)`-curves at `c1`.
    DihedralPlain,
    /// Fork with one boundary branch at the `cs` end.
    DihedralD,
}

impl GraphKind {
    pub fn is_dihedral(self) -> bool {
        matches!(self, GraphKind::DihedralPlain | GraphKind::DihedralD)
    }

    pub fn bullets(self) -> &'static [&'static str] {
        match self {
            GraphKind::CyclicPlain | GraphKind::DihedralPlain => &[],
            GraphKind::CyclicB => &["left"],
            GraphKind::CyclicD => &["left", "right"],
            GraphKind::DihedralD => &["end"],
        }
    }

    fn name(self) -> &'static str {
        match self {
            GraphKind::CyclicPlain => "CyclicPlain",
            GraphKind::CyclicB => "CyclicB",
            GraphKind::CyclicD => "CyclicD",
            GraphKind::DihedralPlain => "DihedralPlain",
            GraphKind::DihedralD => "DihedralD",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [
            GraphKind::CyclicPlain,
            GraphKind::CyclicB,
            GraphKind::CyclicD,
            GraphKind::DihedralPlain,
            GraphKind::DihedralD,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// A decorated dual graph: a chain or a dihedral fork, with boundary branches.
///
/// For dihedral kinds the two `(-2)`-branches at `c1` are implicit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairGraph {
    pub kind: GraphKind,
    pub chain: Chain,
}

impl PairGraph {
    pub fn new(kind: GraphKind, chain: Chain) -> Self {
        PairGraph { kind, chain }
    }

    pub fn bullet_count(&self) -> usize {
        self.kind.bullets().len()
    }

    /// The same singularity with the boundary decoration removed.
    pub fn undecorated(&self) -> PairGraph {
        let kind = if self.kind.is_dihedral() {
            GraphKind::DihedralPlain
        } else {
            GraphKind::CyclicPlain
        };
        PairGraph::new(kind, self.chain.clone())
    }
}

impl fmt::Display for PairGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_graph(self))
    }
}

impl FromStr for PairGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_graph(s)
    }
}

#[derive(Serialize, Deserialize)]
struct PairGraphRepr {
    kind: String,
    chain: Vec<u64>,
    bullets: Vec<String>,
}

impl Serialize for PairGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PairGraphRepr {
            kind: self.kind.name().to_string(),
            chain: self.chain.entries().to_vec(),
            bullets: self.kind.bullets().iter().map(|b| b.to_string()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PairGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = PairGraphRepr::deserialize(d)?;
        let kind = GraphKind::from_name(&repr.kind)
            .ok_or_else(|| D::Error::custom(format!("unknown graph kind {:?}", repr.kind)))?;
        if kind.bullets() != repr.bullets.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(D::Error::custom(format!(
                "bullets {:?} do not match kind {}",
                repr.bullets,
                kind.name()
            )));
        }
        let chain = Chain::new(repr.chain).map_err(D::Error::custom)?;
        Ok(PairGraph { kind, chain })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(u64),
    Star,
    Dash,
    LBr,
    RBr,
    Comma,
    Semi,
    Slash,
    AUnder,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'*' => Tok::Star,
            b'-' => Tok::Dash,
            b'[' => Tok::LBr,
            b']' => Tok::RBr,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b'/' => Tok::Slash,
            b'A' | b'a' if bytes.get(i + 1) == Some(&b'_') => {
                out.push((Tok::AUnder, i));
                i += 2;
                continue;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v = text[start..i].parse::<u64>().map_err(|_| Error::Parse {
                    pos: start,
                    msg: "integer too large".into(),
                })?;
                out.push((Tok::Int(v), start));
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    pos: i,
                    msg: format!(
                        "unexpected character {:?}",
                        text[i..].chars().next().unwrap()
                    ),
                })
            }
        };
        out.push((tok, i));
        i += 1;
    }
    Ok(out)
}

enum Node {
    Entries(Vec<u64>),
    Bullet,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn int(&mut self) -> Result<u64> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.at += 1;
                Ok(v)
            }
            _ => self.err("expected an integer"),
        }
    }

    fn entry(&mut self) -> Result<u64> {
        let pos = self.pos();
        let v = self.int()?;
        if v < 2 {
            return Err(Error::Parse {
                pos,
                msg: Error::EntryTooSmall(v as i64).to_string(),
            });
        }
        Ok(v)
    }

    fn node(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Int(_)) => Ok(Node::Entries(vec![self.entry()?])),
            Some(Tok::Star) => {
                self.at += 1;
                Ok(Node::Bullet)
            }
            Some(Tok::LBr) => {
                self.at += 1;
                let entries = self.boxed()?;
                self.expect(Tok::RBr, "']'")?;
                Ok(Node::Entries(entries))
            }
            _ => self.err("expected a curve, '*' or a box"),
        }
    }

    fn boxed(&mut self) -> Result<Vec<u64>> {
        if self.peek() == Some(&Tok::AUnder) {
            self.at += 1;
            let pos = self.pos();
            let r = self.int()?;
            if r == 0 {
                return Err(Error::Parse {
                    pos,
                    msg: "A_r needs r >= 1".into(),
                });
            }
            return Ok(vec![2; r as usize]);
        }
        let pos = self.pos();
        let first = self.int()?;
        if self.peek() == Some(&Tok::Slash) {
            self.at += 1;
            let q = self.int()?;
            let f = Fraction::new(first, q).map_err(|e| Error::Parse {
                pos,
                msg: e.to_string(),
            })?;
            return Ok(hj_expand(&f)?.entries().to_vec());
        }
        if first < 2 {
            return Err(Error::Parse {
                pos,
                msg: Error::EntryTooSmall(first as i64).to_string(),
            });
        }
        let mut entries = vec![first];
        while self.peek() == Some(&Tok::Comma) {
            self.at += 1;
            entries.push(self.entry()?);
        }
        Ok(entries)
    }
}

/// Parses the text notation into a [`PairGraph`].
pub fn parse_graph(text: &str) -> Result<PairGraph> {
    let toks = lex(text)?;
    let dihedral = toks.first().map(|(t, _)| t) == Some(&Tok::LBr)
        && toks
            .iter()
            .take_while(|(t, _)| *t != Tok::RBr)
            .any(|(t, _)| *t == Tok::Semi);
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let mut nodes: Vec<(Node, usize)> = Vec::new();
    if dihedral {
        p.expect(Tok::LBr, "'['")?;
        for (i, sep) in [(0, Some(Tok::Comma)), (1, Some(Tok::Semi))] {
            let pos = p.pos();
            if p.int()? != 2 {
                return Err(Error::Parse {
                    pos,
                    msg: "dihedral prefix must be [2,2;".into(),
                });
            }
            let _ = i;
            p.expect(sep.unwrap(), "dihedral prefix [2,2;")?;
        }
        loop {
            let pos = p.pos();
            nodes.push((p.node()?, pos));
            match p.peek() {
                Some(Tok::Comma) | Some(Tok::Dash) => p.at += 1,
                _ => break,
            }
        }
        p.expect(Tok::RBr, "']'")?;
    } else {
        loop {
            let pos = p.pos();
            nodes.push((p.node()?, pos));
            match p.peek() {
                Some(Tok::Dash) => p.at += 1,
                _ => break,
            }
        }
    }
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }

    let last = nodes.len() - 1;
    let mut entries = Vec::new();
    let (mut left, mut right) = (false, false);
    for (i, (node, pos)) in nodes.iter().enumerate() {
        match node {
            Node::Entries(e) => entries.extend_from_slice(e),
            Node::Bullet => {
                let ok_left = i == 0 && !dihedral;
                let ok_right = i == last && i > 0;
                if ok_left {
                    left = true;
                } else if ok_right {
                    right = true;
                } else {
                    return Err(Error::BulletPosition { pos: *pos });
                }
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            pos: 0,
            msg: "graph has no curves".into(),
        });
    }
    let chain = Chain::new(entries)?;
    let graph = match (dihedral, left, right) {
        (true, _, false) => PairGraph::new(GraphKind::DihedralPlain, chain),
        (true, _, true) => PairGraph::new(GraphKind::DihedralD, chain),
        (false, false, false) => PairGraph::new(GraphKind::CyclicPlain, chain),
        (false, true, false) => PairGraph::new(GraphKind::CyclicB, chain),
        (false, false, true) => PairGraph::new(GraphKind::CyclicB, chain.reversed()),
        (false, true, true) => PairGraph::new(GraphKind::CyclicD, chain),
    };
    Ok(graph)
}

/// Canonical text form; `parse_graph(render_graph(g)) == g`.
pub fn render_graph(g: &PairGraph) -> String {
    let entries: Vec<String> = g.chain.entries().iter().map(u64::to_string).collect();
    match g.kind {
        GraphKind::CyclicPlain => entries.join(" - "),
        GraphKind::CyclicB => format!("* - {}", entries.join(" - ")),
        GraphKind::CyclicD => format!("* - {} - *", entries.join(" - ")),
        GraphKind::DihedralPlain => format!("[2,2; {}]", entries.join(", ")),
        GraphKind::DihedralD => format!("[2,2; {}, *]", entries.join(", ")),
    }
}

/// Parameters `(r, n, a)` of the T-singularity `1/(rn^2)(1, arn-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TParams {
    pub r: u64,
    pub n: u64,
    pub a: u64,
}

impl TParams {
    pub fn new(r: u64, n: u64, a: u64) -> Result<Self> {
        if r == 0 || n < 2 || a == 0 || a >= n || a.gcd(&n) != 1 {
            return Err(Error::InvalidArgument(format!(
                "T({r},{n},{a}) needs r >= 1, n >= 2, 1 <= a < n, gcd(a,n) = 1"
            )));
        }
        Ok(TParams { r, n, a })
    }

    /// `(rn^2, arn - 1)`.
    pub fn fraction(&self) -> Fraction {
        let r = BigInt::from(self.r);
        let n = BigInt::from(self.n);
        let a = BigInt::from(self.a);
        let big_n = &r * &n * &n;
        let big_q = &a * &r * &n - 1;
        Fraction::new(big_n, big_q).expect("valid T parameters give a reduced fraction")
    }
}

impl fmt::Display for TParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T({},{},{})", self.r, self.n, self.a)
    }
}

/// Classification of a contracted curve group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SingularityType {
    Smooth,
    Cyclic(Fraction),
    DuValA(u64),
    DuValD(u64),
    DuValE(u8),
    T(TParams),
    Dihedral(Fraction),
}

impl SingularityType {
    /// `D_r`, with `D_3` normalized to `A_3`.
    pub fn du_val_d(r: u64) -> Result<Self> {
        match r {
            3 => Ok(SingularityType::DuValA(3)),
            r if r >= 4 => Ok(SingularityType::DuValD(r)),
            _ => Err(Error::InvalidArgument(format!("D_{r} is not defined"))),
        }
    }

    pub fn is_du_val(&self) -> bool {
        matches!(
            self,
            SingularityType::DuValA(_) | SingularityType::DuValD(_) | SingularityType::DuValE(_)
        )
    }

    pub fn is_t(&self) -> bool {
        matches!(self, SingularityType::T(_))
    }

    /// Label used inside boxes of the target graph, e.g. `4/1` or `A_3`.
    pub fn box_label(&self) -> String {
        match self {
            SingularityType::Smooth => "smooth".into(),
            SingularityType::Cyclic(f) => f.to_string(),
            SingularityType::DuValA(r) => format!("A_{r}"),
            SingularityType::DuValD(r) => format!("D_{r}"),
            SingularityType::DuValE(r) => format!("E_{r}"),
            SingularityType::T(p) => p.fraction().to_string(),
            SingularityType::Dihedral(f) => format!("Dih {f}"),
        }
    }

    /// The local KSB deformation dimension `r` for Du Val and T points.
    pub fn ksb_r(&self) -> Option<u64> {
        match self {
            SingularityType::DuValA(r) | SingularityType::DuValD(r) => Some(*r),
            SingularityType::DuValE(r) => Some(u64::from(*r)),
            SingularityType::T(p) => Some(p.r),
            _ => None,
        }
    }
}

impl fmt::Display for SingularityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularityType::Smooth => write!(f, "smooth"),
            SingularityType::Cyclic(fr) => write!(f, "1/{}(1,{})", fr.n(), fr.q()),
            SingularityType::DuValA(r) => write!(f, "A_{r}"),
            SingularityType::DuValD(r) => write!(f, "D_{r}"),
            SingularityType::DuValE(r) => write!(f, "E_{r}"),
            SingularityType::T(p) => write!(f, "{p}"),
            SingularityType::Dihedral(fr) => write!(f, "Dih({fr})"),
        }
    }
}

impl Serialize for SingularityType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Chain classification in the given reading order.
pub fn classify_chain(entries: &[u64]) -> Result<SingularityType> {
    if entries.is_empty() {
        return Ok(SingularityType::Smooth);
    }
    if let Some(&c) = entries.iter().find(|&&c| c < 2) {
        return Err(Error::EntryTooSmall(c as i64));
    }
    if entries.iter().all(|&c| c == 2) {
        return Ok(SingularityType::DuValA(entries.len() as u64));
    }
    let (n, q) = hj_evaluate_entries(entries);
    Ok(SingularityType::Cyclic(Fraction::new(n, q)?))
}

/// Classifies a connected group of curves that is contracted to a point.
///
/// Chains become cyclic quotients (read from the end nearer to the
/// configuration root), forks with two `(-2)`-leaves at the branch vertex
/// become dihedral quotients, and all-`(-2)` forks become `D` or `E`.
pub fn classify_singularity(cfg: &CurveConfig, group: &[usize]) -> Result<SingularityType> {
    if group.is_empty() {
        return Ok(SingularityType::Smooth);
    }
    for &c in group {
        if c >= cfg.len() {
            return Err(Error::NoSuchCurve(c));
        }
    }
    if cfg.components(group).len() != 1 {
        return Err(Error::InvalidArgument(
            "curve group is not connected".into(),
        ));
    }
    if group.iter().any(|&c| cfg.curve(c).self_int > -2) {
        return Err(Error::NotNegativeDefinite);
    }
    if !lattice::is_negative_definite(&lattice::intersection_matrix(cfg, group)) {
        return Err(Error::NotNegativeDefinite);
    }
    let in_group = |c: usize| group.contains(&c);
    let degree = |c: usize| cfg.neighbors(c).iter().filter(|&&d| in_group(d)).count();
    let forks: Vec<usize> = group.iter().copied().filter(|&c| degree(c) >= 3).collect();
    let neg = |c: usize| (-cfg.curve(c).self_int) as u64;

    if let Some((l1, l2)) = cfg.dihedral_leaves() {
        let center = cfg
            .neighbors(l1)
            .iter()
            .copied()
            .find(|&c| in_group(c) && cfg.are_adjacent(c, l2));
        if let (true, true, Some(center)) = (in_group(l1), in_group(l2), center) {
            let rest: Vec<usize> = group
                .iter()
                .copied()
                .filter(|&c| c != l1 && c != l2)
                .collect();
            if degree(center) <= 3 && forks.iter().all(|&f| f == center) {
                let mut entries = vec![neg(center)];
                let tail: Vec<usize> = rest.iter().copied().filter(|&c| c != center).collect();
                if !tail.is_empty() {
                    let arm = cfg.oriented_path(&tail);
                    entries.extend(arm.iter().map(|&c| neg(c)));
                }
                if entries.iter().all(|&c| c == 2) {
                    return SingularityType::du_val_d(entries.len() as u64 + 2);
                }
                let (n, q) = hj_evaluate_entries(&entries);
                return Ok(SingularityType::Dihedral(Fraction::new(n, q)?));
            }
        }
    }
    if forks.is_empty() {
        let order = cfg.oriented_path(group);
        let entries: Vec<u64> = order.iter().map(|&c| neg(c)).collect();
        return classify_chain(&entries);
    }
    if forks.len() > 1 || degree(forks[0]) > 3 {
        return Err(Error::UnsupportedShape(format!(
            "group with {} branch vertices",
            forks.len()
        )));
    }
    let center = forks[0];
    let mut arms: Vec<Vec<u64>> = cfg
        .neighbors(center)
        .iter()
        .filter(|&&d| in_group(d))
        .map(|&start| {
            let mut arm = vec![neg(start)];
            let (mut prev, mut cur) = (center, start);
            while let Some(&next) = cfg
                .neighbors(cur)
                .iter()
                .find(|&&d| d != prev && in_group(d))
            {
                arm.push(neg(next));
                prev = cur;
                cur = next;
            }
            arm
        })
        .collect();
    arms.sort_by_key(|a| (a.len(), a.clone()));
    let all_two = neg(center) == 2 && arms.iter().flatten().all(|&c| c == 2);
    if all_two {
        let lens: Vec<usize> = arms.iter().map(Vec::len).collect();
        return match lens.as_slice() {
            [1, 1, k] => SingularityType::du_val_d(*k as u64 + 3),
            [1, 2, 2] => Ok(SingularityType::DuValE(6)),
            [1, 2, 3] => Ok(SingularityType::DuValE(7)),
            [1, 2, 4] => Ok(SingularityType::DuValE(8)),
            _ => Err(Error::UnsupportedShape(format!(
                "all-2 fork with arms {lens:?}"
            ))),
        };
    }
    let short: Vec<usize> = (0..3).filter(|&i| arms[i] == [2]).collect();
    if short.len() >= 2 {
        let rest = (0..3).find(|i| !short[..2].contains(i)).unwrap();
        let mut entries = vec![neg(center)];
        entries.extend_from_slice(&arms[rest]);
        let (n, q) = hj_evaluate_entries(&entries);
        return Ok(SingularityType::Dihedral(Fraction::new(n, q)?));
    }
    Err(Error::UnsupportedShape(format!(
        "fork with center {} and arms {:?}",
        neg(center),
        arms
    )))
}

/// Converts a big integer to `u64`, reporting overflow.
pub(crate) fn to_u64(v: &BigInt) -> Result<u64> {
    v.to_u64().ok_or_else(|| Error::Overflow(v.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(v: &[u64]) -> Chain {
        Chain::new(v.to_vec()).unwrap()
    }

    #[test]
    fn fraction_validation() {
        assert!(Fraction::new(7, 3).is_ok());
        assert!(Fraction::new(6, 2).is_err());
        assert!(Fraction::new(3, 3).is_err());
        assert!(Fraction::new(3, 0).is_err());
        assert_eq!(
            Fraction::reduced(6, 2).unwrap(),
            Fraction::new(3, 1).unwrap()
        );
        assert_eq!(
            "19/7".parse::<Fraction>().unwrap(),
            Fraction::new(19, 7).unwrap()
        );
    }

    #[test]
    fn parse_examples() {
        let g = parse_graph("* - 4 - 3 - [A_5]").unwrap();
        assert_eq!(g.kind, GraphKind::CyclicB);
        assert_eq!(g.chain, chain(&[4, 3, 2, 2, 2, 2, 2]));

        let g = parse_graph("* - 3 - *").unwrap();
        assert_eq!(g.kind, GraphKind::CyclicD);
        assert_eq!(g.chain, chain(&[3]));

        let g = parse_graph("[2,2; 3, 4, *]").unwrap();
        assert_eq!(g.kind, GraphKind::DihedralD);
        assert_eq!(g.chain, chain(&[3, 4]));
    }

    #[test]
    fn parse_boxes_and_lists() {
        assert_eq!(parse_graph("[18/5]").unwrap().chain, chain(&[4, 3, 2]));
        assert_eq!(parse_graph("[4]").unwrap().chain, chain(&[4]));
        assert_eq!(parse_graph("[2,2]").unwrap().chain, chain(&[2, 2]));
        assert_eq!(
            parse_graph("2-[25/14]").unwrap().chain,
            chain(&[2, 2, 5, 3])
        );
        let g = parse_graph("4 - 3 - *").unwrap();
        assert_eq!((g.kind, g.chain), (GraphKind::CyclicB, chain(&[3, 4])));
        let g = parse_graph("[2,2; [A_2] - 3]").unwrap();
        assert_eq!(
            (g.kind, g.chain),
            (GraphKind::DihedralPlain, chain(&[2, 2, 3]))
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_graph("4 - * - 3"),
            Err(Error::BulletPosition { pos: 4 })
        ));
        assert!(matches!(
            parse_graph("[2,2; *, 3]"),
            Err(Error::BulletPosition { .. })
        ));
        assert!(matches!(
            parse_graph("* - 1 - 3"),
            Err(Error::Parse { pos: 4, .. })
        ));
        assert!(matches!(
            parse_graph("4 -"),
            Err(Error::Parse { pos: 3, .. })
        ));
        assert!(matches!(
            parse_graph("4 ? 3"),
            Err(Error::Parse { pos: 2, .. })
        ));
        assert!(parse_graph("* - *").is_err());
        assert!(parse_graph("[6/4]").is_err());
        assert!(parse_graph("[2,3; 4]").is_err());
    }

    #[test]
    fn render_examples() {
        let d = PairGraph::new(GraphKind::CyclicD, chain(&[3]));
        assert_eq!(render_graph(&d), "* - 3 - *");
        let b = PairGraph::new(GraphKind::CyclicB, chain(&[4, 3]));
        assert_eq!(render_graph(&b), "* - 4 - 3");
        let f = PairGraph::new(GraphKind::DihedralD, chain(&[3, 4]));
        assert_eq!(render_graph(&f), "[2,2; 3, 4, *]");
    }

    #[test]
    fn json_schema() {
        let g = parse_graph("* - 4 - 3").unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"kind": "CyclicB", "chain": [4, 3], "bullets": ["left"]})
        );
        let back: PairGraph = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
        let bad = serde_json::json!({"kind": "CyclicB", "chain": [4, 3], "bullets": []});
        assert!(serde_json::from_value::<PairGraph>(bad).is_err());
    }

    #[test]
    fn classify_examples() {
        let cfg = CurveConfig::chain(&[2, 2, 2], 0, 0);
        assert_eq!(
            classify_singularity(&cfg, &[0, 1, 2]).unwrap(),
            SingularityType::DuValA(3)
        );
        let cfg = CurveConfig::chain(&[4], 0, 0);
        assert_eq!(
            classify_singularity(&cfg, &[0]).unwrap(),
            SingularityType::Cyclic(Fraction::new(4, 1).unwrap())
        );
        let fork = CurveConfig::minimal_resolution(&parse_graph("[2,2; 3]").unwrap());
        let all: Vec<usize> = (0..fork.len()).collect();
        assert_eq!(
            classify_singularity(&fork, &all).unwrap(),
            SingularityType::Dihedral(Fraction::new(3, 1).unwrap())
        );
    }

    #[test]
    fn classify_du_val_forks() {
        let d = |chain: &str| {
            let cfg = CurveConfig::minimal_resolution(&parse_graph(chain).unwrap());
            let all: Vec<usize> = (0..cfg.len()).collect();
            classify_singularity(&cfg, &all).unwrap()
        };
        assert_eq!(d("[2,2; 2]"), SingularityType::DuValA(3));
        assert_eq!(d("[2,2; 2, 2]"), SingularityType::DuValD(4));
        assert_eq!(d("[2,2; 2, 2, 2, 2]"), SingularityType::DuValD(6));

        // E_6: arms of length 1, 2, 2 around a (-2) center.
        let e6 = CurveConfig::tree(
            &[2, 2, 2, 2, 2, 2],
            &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5)],
        )
        .unwrap();
        assert_eq!(
            classify_singularity(&e6, &[0, 1, 2, 3, 4, 5]).unwrap(),
            SingularityType::DuValE(6)
        );
        let bad = CurveConfig::tree(&[3, 3, 2, 3], &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(matches!(
            classify_singularity(&bad, &[0, 1, 2, 3]),
            Err(Error::UnsupportedShape(_))
        ));
        let not_negdef = CurveConfig::chain(&[1, 2], 0, 0);
        assert_eq!(
            classify_singularity(&not_negdef, &[0, 1]),
            Err(Error::NotNegativeDefinite)
        );
    }

    #[test]
    fn d3_normalizes_to_a3() {
        assert_eq!(
            SingularityType::du_val_d(3).unwrap(),
            SingularityType::DuValA(3)
        );
    }
}
