use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use quotsing::deform::{
    def_components, def_ksb_pair_components_cyclic, def_ksb_pair_components_dihedral, ksba_search,
    reports_json, triviality_lemmas_check, verify_theorem_1, ComponentReport,
};
use quotsing::dihedral::{cover_chain, double_cover_params, inverse_params};
use quotsing::hjcf::{hj_evaluate, hj_expand, multiplicity};
use quotsing::lattice::{cartier_index, CurveConfig};
use quotsing::modgen::enumerate_p_modifications;
use quotsing::notation::{classify_chain, classify_singularity};
use quotsing::rational::qi;
use quotsing::tsing::refine;
use quotsing::{fmt_q, parse_graph, parse_q, Chain, Error, Fraction, GraphKind, PairGraph, QRange};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "quotsing",
    version,
    about = "Deformations of cyclic and dihedral quotient surface singularities"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Continued fraction, multiplicity, type and Cartier indices.
    Expand {
        /// `n/q` or `[c1,...,cs]`.
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Type of the singularity of a graph.
    Classify {
        graph: String,
        #[arg(long)]
        json: bool,
    },
    /// Deformation components.
    Components {
        graph: String,
        /// Treat an undecorated chain as the pair with both boundary branches.
        #[arg(long)]
        ksb_pair: bool,
        /// Search KSBA pairs with `d` in this value or range (`a..b`).
        #[arg(long)]
        d: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// P-modifications.
    Pmods {
        graph: String,
        #[arg(long)]
        json: bool,
    },
    /// KSBA pairs `(S_P, d(D_P + E_P))`.
    Ksba {
        graph: String,
        #[arg(long)]
        d: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Double cover of a dihedral quotient.
    Cover {
        /// `n/q`, or `N/Q` with `--inverse`.
        input: String,
        #[arg(long)]
        inverse: bool,
        #[arg(long)]
        json: bool,
    },
    /// Batch tables as JSON lines.
    Atlas {
        #[arg(long)]
        nmax: u64,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        resume: bool,
    },
    /// Cross-checks on a chain or decorated graph.
    Verify {
        graph: String,
        /// Also run the triviality check at this `d`.
        #[arg(long)]
        d: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Def,
    KsbPairCyclic,
    KsbPairDihedral,
    KsbaB,
}

enum Failure {
    Math(Error),
    Usage(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Usage(e.to_string()),
            e => Failure::Math(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

type Res<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    match run(cli.cmd, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Math(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Cmd, out: &mut impl Write) -> Res<()> {
    match cmd {
        Cmd::Expand { input, json } => expand(&input, json, out),
        Cmd::Classify { graph, json } => classify(&graph, json, out),
        Cmd::Components {
            graph,
            ksb_pair,
            d,
            json,
        } => components(&graph, ksb_pair, d.as_deref(), json, out),
        Cmd::Pmods { graph, json } => pmods(&graph, json, out),
        Cmd::Ksba { graph, d, json } => {
            let g = parse_graph(&graph)?;
            let range = d.as_deref().map(QRange::parse).transpose()?;
            let reports = ksba_search(&g, range.as_ref())?;
            print_reports(&g, &reports, json, out)
        }
        Cmd::Cover {
            input,
            inverse,
            json,
        } => cover(&input, inverse, json, out),
        Cmd::Atlas {
            nmax,
            mode,
            out: path,
            resume,
        } => atlas(nmax, mode, &path, resume),
        Cmd::Verify { graph, d } => verify(&graph, d.as_deref(), out),
    }
}

/// `n/q` or a bracketed chain.
fn parse_input(s: &str) -> Res<(Fraction, Chain)> {
    let s = s.trim();
    if s.starts_with('[') {
        let c: Chain = s.parse()?;
        Ok((hj_evaluate(&c), c))
    } else {
        let f: Fraction = s.parse()?;
        let c = hj_expand(&f)?;
        Ok((f, c))
    }
}

fn expand(input: &str, json: bool, out: &mut impl Write) -> Res<()> {
    let (f, c) = parse_input(input)?;
    let kind = refine(classify_chain(c.entries())?)?;
    let mut index = Vec::new();
    for (name, k) in [
        ("K", GraphKind::CyclicPlain),
        ("K+B", GraphKind::CyclicB),
        ("K+D", GraphKind::CyclicD),
    ] {
        let cfg = CurveConfig::minimal_resolution(&PairGraph::new(k, c.clone()));
        index.push((name, cartier_index(&cfg, &cfg.uniform_weights(&qi(1)))?));
    }
    if json {
        let v = json!({
            "fraction": f.to_string(),
            "chain": c.entries(),
            "multiplicity": multiplicity(&c),
            "type": kind.to_string(),
            "cartier_index": index.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
        });
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "fraction      {f}")?;
        writeln!(out, "chain         {c}")?;
        writeln!(out, "multiplicity  {}", multiplicity(&c))?;
        writeln!(out, "type          {kind}")?;
        for (name, v) in index {
            writeln!(out, "index {name:<7} {v}")?;
        }
    }
    Ok(())
}

fn classify(graph: &str, json: bool, out: &mut impl Write) -> Res<()> {
    let g = parse_graph(graph)?;
    let kind = if g.kind.is_dihedral() {
        let cfg = CurveConfig::minimal_resolution(&g);
        classify_singularity(&cfg, &cfg.exceptional_curves())?
    } else {
        refine(classify_chain(g.chain.entries())?)?
    };
    if json {
        writeln!(
            out,
            "{}",
            json!({"graph": g.to_string(), "type": kind.to_string()})
        )?;
    } else {
        writeln!(out, "{kind}")?;
    }
    Ok(())
}

fn pair_reports(g: &PairGraph) -> Res<Vec<ComponentReport>> {
    let f = hj_evaluate(&g.chain);
    Ok(match g.kind {
        GraphKind::CyclicPlain => def_components(&g.chain)?,
        GraphKind::CyclicD => def_ksb_pair_components_cyclic(&f)?,
        GraphKind::DihedralD => def_ksb_pair_components_dihedral(&f)?,
        GraphKind::CyclicB | GraphKind::DihedralPlain => {
            return Err(Failure::Math(Error::UnsupportedShape(format!(
                "{g}: components need no boundary or the full pair boundary"
            ))))
        }
    })
}

fn components(
    graph: &str,
    ksb_pair: bool,
    d: Option<&str>,
    json: bool,
    out: &mut impl Write,
) -> Res<()> {
    let mut g = parse_graph(graph)?;
    if ksb_pair {
        g.kind = match g.kind {
            GraphKind::CyclicPlain | GraphKind::CyclicD => GraphKind::CyclicD,
            GraphKind::DihedralPlain | GraphKind::DihedralD => GraphKind::DihedralD,
            GraphKind::CyclicB => {
                return Err(Failure::Usage(
                    "--ksb-pair needs a chain without a single boundary branch".into(),
                ))
            }
        };
    }
    let reports = match d {
        Some(d) => ksba_search(&g, Some(&QRange::parse(d)?))?,
        None => pair_reports(&g)?,
    };
    print_reports(&g, &reports, json, out)
}

fn print_reports(
    g: &PairGraph,
    reports: &[ComponentReport],
    json: bool,
    out: &mut impl Write,
) -> Res<()> {
    if json {
        writeln!(out, "{}", reports_json(g, reports))?;
        return Ok(());
    }
    writeln!(out, "{g}: {} component(s)", reports.len())?;
    for (i, r) in reports.iter().enumerate() {
        let sing: Vec<String> = r
            .modification
            .singularities()
            .iter()
            .map(ToString::to_string)
            .collect();
        write!(
            out,
            "{i:>3}  dim {}  {}",
            r.dimension,
            r.modification.target()
        )?;
        if let Some(d) = &r.d_value {
            write!(out, "  d = {}", fmt_q(d))?;
        }
        write!(out, "  [{}]", sing.join(", "))?;
        if !r.generic_fiber.is_empty() {
            let fiber: Vec<String> = r
                .generic_fiber
                .iter()
                .map(|(s, b)| format!("{s}/{b}"))
                .collect();
            write!(out, "  fiber {}", fiber.join(" "))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn pmods(graph: &str, json: bool, out: &mut impl Write) -> Res<()> {
    let g = parse_graph(graph)?;
    let mods = enumerate_p_modifications(&g)?;
    if json {
        writeln!(out, "{}", json!({"graph": g.to_string(), "pmods": mods}))?;
    } else {
        writeln!(out, "{g}: {} P-modification(s)", mods.len())?;
        for (i, m) in mods.iter().enumerate() {
            writeln!(out, "{i:>3}  {}", m.target())?;
        }
    }
    Ok(())
}

fn cover(input: &str, inverse: bool, json: bool, out: &mut impl Write) -> Res<()> {
    let (a, b) = input
        .trim()
        .split_once('/')
        .ok_or_else(|| Failure::Usage(format!("expected a pair a/b, got {input:?}")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| Failure::Usage(format!("not an integer: {s:?}")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if inverse {
        let (n, q) = inverse_params(a.clone(), b.clone())?;
        if json {
            writeln!(
                out,
                "{}",
                json!({"N": a.to_string(), "Q": b.to_string(), "n": n.to_string(), "q": q.to_string()})
            )?;
        } else {
            writeln!(out, "{n}/{q}")?;
        }
        return Ok(());
    }
    let p = double_cover_params(a.clone(), b.clone())?;
    let c = cover_chain(a, b)?;
    if json {
        writeln!(
            out,
            "{}",
            json!({
                "N": p.big_n.to_string(),
                "Q": p.big_q.to_string(),
                "n_prime": p.n_prime.to_string(),
                "q_prime": p.q_prime.to_string(),
                "cover_chain": c.entries(),
            })
        )?;
    } else {
        writeln!(out, "cover  {}/{}", p.big_n, p.big_q)?;
        writeln!(out, "n' q'  {} {}", p.n_prime, p.q_prime)?;
        writeln!(out, "chain  {c}")?;
    }
    Ok(())
}

fn verify(graph: &str, d: Option<&str>, out: &mut impl Write) -> Res<()> {
    let g = parse_graph(graph)?;
    let mut ok = true;
    if !g.kind.is_dihedral() {
        let agree = verify_theorem_1(&g.chain)?;
        writeln!(out, "pair components = Def components: {}", verdict(agree))?;
        ok &= agree;
    }
    if let Some(d) = d {
        let d = parse_q(d)?;
        let trivial = triviality_lemmas_check(&g, &d)?;
        writeln!(out, "triviality at d = {}: {}", fmt_q(&d), verdict(trivial))?;
        ok &= trivial;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Math(Error::Inconsistent(format!(
            "{g}: check failed"
        ))))
    }
}

fn verdict(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct AtlasRow<'a> {
    graph: String,
    mode: Mode,
    n: u64,
    q: u64,
    component_index: usize,
    dimension: u64,
    d: Option<String>,
    singularities: Vec<String>,
    generic_fiber: &'a serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    mode: Mode,
    /// Last fully written `(n, q)`.
    n: u64,
    q: u64,
    rows: u64,
    bytes: u64,
}

const CHECKPOINT_ROWS: u64 = 1000;
const BATCH: usize = 64;

fn checkpoint_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".checkpoint");
    PathBuf::from(p)
}

fn atlas_graph(mode: Mode, chain: Chain) -> PairGraph {
    let kind = match mode {
        Mode::Def => GraphKind::CyclicPlain,
        Mode::KsbPairCyclic => GraphKind::CyclicD,
        Mode::KsbPairDihedral => GraphKind::DihedralD,
        Mode::KsbaB => GraphKind::CyclicB,
    };
    PairGraph::new(kind, chain)
}

/// Rows for one `n/q`, serialized.
fn atlas_rows(mode: Mode, n: u64, q: u64) -> Result<Vec<String>, Error> {
    let f = Fraction::new(n, q)?;
    let g = atlas_graph(mode, hj_expand(&f)?);
    let reports = match mode {
        Mode::Def => def_components(&g.chain)?,
        Mode::KsbPairCyclic => def_ksb_pair_components_cyclic(&f)?,
        Mode::KsbPairDihedral => def_ksb_pair_components_dihedral(&f)?,
        Mode::KsbaB => ksba_search(&g, None)?,
    };
    let graph = g.to_string();
    let mut rows = Vec::with_capacity(reports.len());
    for (i, r) in reports.iter().enumerate() {
        let v = serde_json::to_value(r).map_err(|e| Error::Inconsistent(e.to_string()))?;
        let row = AtlasRow {
            graph: graph.clone(),
            mode,
            n,
            q,
            component_index: i,
            dimension: r.dimension,
            d: r.d_value.as_ref().map(fmt_q),
            singularities: r
                .modification
                .singularities()
                .iter()
                .map(ToString::to_string)
                .collect(),
            generic_fiber: &v["generic_fiber"],
        };
        rows.push(serde_json::to_string(&row).map_err(|e| Error::Inconsistent(e.to_string()))?);
    }
    Ok(rows)
}

fn read_checkpoint(path: &Path, mode: Mode) -> Res<Option<Checkpoint>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut line = String::new();
    BufReader::new(file).read_line(&mut line)?;
    let cp: Checkpoint = serde_json::from_str(&line)?;
    if cp.mode != mode {
        return Err(Failure::Usage(format!(
            "checkpoint {} belongs to another mode",
            path.display()
        )));
    }
    Ok(Some(cp))
}

fn write_checkpoint(path: &Path, cp: &Checkpoint) -> Res<()> {
    let tmp = path.with_extension("checkpoint.tmp");
    fs::write(&tmp, serde_json::to_string(cp)? + "\n")?;
    fs::rename(tmp, path)?;
    Ok(())
}

fn atlas(nmax: u64, mode: Mode, out: &Path, resume: bool) -> Res<()> {
    let cp_path = checkpoint_path(out);
    let start = if resume {
        read_checkpoint(&cp_path, mode)?
    } else {
        None
    };
    let mut file = match &start {
        Some(cp) => {
            let f = OpenOptions::new().write(true).open(out)?;
            f.set_len(cp.bytes)?;
            let mut f = f;
            io::Seek::seek(&mut f, io::SeekFrom::End(0))?;
            f
        }
        None => File::create(out)?,
    };
    let (mut rows, mut bytes) = start.as_ref().map_or((0, 0), |cp| (cp.rows, cp.bytes));
    let mut since = 0u64;
    let todo: Vec<(u64, u64)> = (2..=nmax)
        .flat_map(|n| (1..n).map(move |q| (n, q)))
        .filter(|&(n, q)| num_integer::gcd(n, q) == 1)
        .filter(|&(n, q)| start.as_ref().is_none_or(|cp| (n, q) > (cp.n, cp.q)))
        .collect();
    for batch in todo.chunks(BATCH) {
        let results: Vec<Result<Vec<String>, Error>> = batch
            .par_iter()
            .map(|&(n, q)| atlas_rows(mode, n, q))
            .collect();
        for (&(n, q), res) in batch.iter().zip(results) {
            for line in res? {
                file.write_all(line.as_bytes())?;
                file.write_all(b"\n")?;
                bytes += line.len() as u64 + 1;
                rows += 1;
                since += 1;
            }
            if since >= CHECKPOINT_ROWS {
                file.flush()?;
                write_checkpoint(
                    &cp_path,
                    &Checkpoint {
                        mode,
                        n,
                        q,
                        rows,
                        bytes,
                    },
                )?;
                since = 0;
            }
        }
    }
    file.flush()?;
    if let Some(&(n, q)) = todo.last() {
        write_checkpoint(
            &cp_path,
            &Checkpoint {
                mode,
                n,
                q,
                rows,
                bytes,
            },
        )?;
    }
    Ok(())
}
