//! Command-line front end: argument parsing, input files, report formatting
//! and run manifests.
//!
//! Exit codes: 0 success, 1 validation failure or malformed input, 2 cap
//! exceeded, 3 failed assertion (duality and projector checks).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::groups::FiniteGroup;
use crate::harmonic::{
    fourier_abelian, fourier_nonabelian, is_admissible, random_admissible, WeightFunction, ADMISSIBILITY_TOL,
};
use crate::homology::{coboundaries, cohomology, simplicial_cohomology, SimplicialComplex, DEFAULT_CELL_CAP};
use crate::ising::{
    kw_dual_check, partition_vector, partition_vector_nonabelian, spin_partition, transfer_matrix, DisorderInsertion,
    FlatBackground, Insertions, OrderInsertion, SumMethod, SumOptions, DEFAULT_SPIN_CAP, DEFAULT_TRANSFER_CAP,
};
use crate::surface::{dual_lattice, generate_lattice, Lattice2, LatticeKind};
use crate::tqft::{
    count_bundles, em_duality_check, higher_partition, loop_operator, pair_with_handlebody, GroupPresentation,
    HandlebodyData, HigherTheorySpec, LoopKind, DEFAULT_HOM_CAP,
};
use crate::turaev_viro::{
    build_backend, categorical_dim, duality_harness, ising_vector_with, projector_check, sphere_value,
    state_space_with_cap, vertex_projectors, BackendKind, IsingActionVector, DEFAULT_STATE_CAP,
};
use crate::{Error, C64};

/// Tolerance for projector idempotence, self-adjointness and commutation.
pub const PROJECTOR_TOL: f64 = 1e-9;

/// Top-level arguments.
#[derive(Parser, Debug)]
#[command(
    name = "kwdual",
    version,
    about = "Kramers-Wannier duality and finite gauge theory on latticed surfaces"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Emit a JSON report with a run manifest.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print only the verdict line.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Single thread, no wall time: reports are byte-identical across runs.
    #[arg(long, global = true)]
    pub serial: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "KWDUAL_THREADS")]
    pub threads: Option<usize>,
    /// Cap on spin configurations `#G^V`.
    #[arg(long, global = true, env = "KWDUAL_SPIN_CAP", default_value_t = DEFAULT_SPIN_CAP as u64)]
    pub spin_cap: u64,
    /// Cap on Turaev-Viro state-space dimensions.
    #[arg(long, global = true, env = "KWDUAL_STATE_CAP", default_value_t = DEFAULT_STATE_CAP)]
    pub state_cap: usize,
    /// Cap on transfer-matrix states.
    #[arg(long, global = true, env = "KWDUAL_TRANSFER_CAP", default_value_t = DEFAULT_TRANSFER_CAP)]
    pub transfer_cap: usize,
    /// Cap on simplicial cells.
    #[arg(long, global = true, env = "KWDUAL_CELL_CAP", default_value_t = DEFAULT_CELL_CAP)]
    pub cell_cap: usize,
    /// Cap on enumerated homomorphisms.
    #[arg(long, global = true, env = "KWDUAL_HOM_CAP", default_value_t = DEFAULT_HOM_CAP as u64)]
    pub hom_cap: u64,
    /// Tolerance for duality checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate, dualize and validate lattices.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Fourier transform of a weight.
    Fourier(GroupTheta),
    /// Admissibility test of a weight.
    Admissible(GroupTheta),
    /// Ising partition functions and duality checks.
    #[command(subcommand)]
    Ising(IsingCmd),
    /// Finite gauge theory counts.
    #[command(subcommand)]
    Tqft(TqftCmd),
    /// Turaev-Viro state spaces.
    #[command(subcommand)]
    Tv(TvCmd),
    /// Cohomology of a lattice or simplicial complex.
    Cohomology(CohomologyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GenKind {
    Torus,
    SphereCube,
    SphereTetra,
    Genus,
}

#[derive(Subcommand, Debug)]
pub enum LatticeCmd {
    /// Generate a lattice and print it as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        genus: usize,
        /// Write the lattice here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the dual lattice as JSON.
    Dual {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every structural invariant.
    Validate { lattice: PathBuf },
}

/// A group and a weight.
#[derive(Args, Debug)]
pub struct GroupTheta {
    #[arg(long)]
    pub group: String,
    /// Comma-separated values in element order, or a file holding them.
    #[arg(long)]
    pub theta: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Auto,
    Brute,
    Elimination,
}

/// Lattice, group, weight and insertions.
#[derive(Args, Debug)]
pub struct SpinArgs {
    #[arg(long)]
    pub lattice: PathBuf,
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub theta: String,
    /// Order insertion `vertex:character`.
    #[arg(long = "order")]
    pub order: Vec<String>,
    /// Disorder insertion `face:element`.
    #[arg(long = "disorder")]
    pub disorder: Vec<String>,
    /// Rescale by `#A^{-1/2}` per vertex.
    #[arg(long)]
    pub normalize_vertices: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
}

#[derive(Subcommand, Debug)]
pub enum IsingCmd {
    /// Partition function on the trivial background.
    Partition(SpinArgs),
    /// Partition vector over cohomology classes (or gauge orbits).
    Vector(SpinArgs),
    /// Kramers-Wannier comparison with the dual lattice.
    KwCheck(SpinArgs),
    /// Transfer matrix on a latticed circle.
    Transfer {
        #[arg(long)]
        sites: usize,
        #[arg(long)]
        group: String,
        #[arg(long)]
        theta: String,
        /// Holonomy around the circle.
        #[arg(long)]
        twist: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum TqftCmd {
    /// Groupoid count of bundles: `S1`, `T2`, `T3`, `torus:K`, `genus:G`,
    /// `lens:P` or `sphere`.
    Count {
        #[arg(long)]
        group: String,
        #[arg(long)]
        manifold: String,
    },
    /// Partition function of the degree-`r` theory.
    Higher {
        #[arg(long)]
        group: String,
        /// `S3`, `T3`, `RP2`, `torus:MxN`, `genus:G` or a JSON file.
        #[arg(long)]
        complex: String,
        #[arg(long)]
        r: usize,
    },
    /// Electric-magnetic duality ratio.
    Emdual {
        #[arg(long)]
        group: String,
        #[arg(long)]
        complex: String,
        #[arg(long)]
        r: usize,
    },
    /// Pairing of the Ising vector with a handlebody.
    Handlebody {
        /// JSON file with `lattice` and `meridians`.
        #[arg(long)]
        handlebody: PathBuf,
        #[arg(long)]
        group: String,
        #[arg(long)]
        theta: String,
        #[arg(long = "disorder")]
        disorder: Vec<String>,
    },
    /// Wilson or 't Hooft loop on `S¹ × Y`.
    Loop {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        group: String,
        /// Character of a Wilson loop.
        #[arg(long)]
        wilson: Option<usize>,
        /// 't Hooft loop `face:element`.
        #[arg(long)]
        thooft: Option<String>,
    },
}

/// Turaev-Viro inputs.
#[derive(Args, Debug)]
pub struct TvArgs {
    #[arg(long, default_value = "vect")]
    pub backend: String,
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub lattice: PathBuf,
    /// Weight; repeat for the duality check.
    #[arg(long)]
    pub theta: Vec<String>,
    /// Random admissible weights added to the duality check.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Transpose the `Rep(G)` blocks.
    #[arg(long)]
    pub antipode: bool,
}

#[derive(Subcommand, Debug)]
pub enum TvCmd {
    /// Dimension of the labeled-lattice state space.
    StateDim(TvArgs),
    /// Idempotence, self-adjointness, commutation and rank of the projectors.
    ProjectorCheck(TvArgs),
    /// The projected Ising vector.
    IsingVector(TvArgs),
    /// Compare a weight with its dual through the state sums.
    DualityCheck(TvArgs),
}

#[derive(Args, Debug)]
pub struct CohomologyArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long, conflicts_with = "complex")]
    pub lattice: Option<PathBuf>,
    #[arg(long)]
    pub complex: Option<String>,
}

/// Provenance attached to every JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub input_hashes: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
    pub caps: BTreeMap<String, f64>,
    pub version: String,
    pub threads: usize,
    pub serial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

/// Failure of a CLI run.
#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    /// Malformed input, with file and position when known.
    Input(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Input(s) => write!(f, "{s}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::CapExceeded { .. }) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produced.
struct Outcome {
    report: Value,
    table: String,
    verdict: String,
    passed: bool,
    /// Raw text printed instead of the table (lattice JSON).
    raw: Option<String>,
}

impl Outcome {
    fn ok(report: Value, table: String, verdict: String) -> Self {
        Outcome {
            report,
            table,
            verdict,
            passed: true,
            raw: None,
        }
    }
}

/// Inputs read during a run, for the manifest.
#[derive(Default)]
struct Inputs {
    hashes: BTreeMap<String, String>,
    tolerances: BTreeMap<String, f64>,
    caps: BTreeMap<String, f64>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let hash = Sha256::digest(&bytes);
        let hex = hash.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        self.hashes.insert(path.display().to_string(), hex);
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> CliResult<T> {
        let text = self.read(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e)))
    }

    fn lattice(&mut self, path: &Path) -> CliResult<Lattice2> {
        self.json(path)
    }

    fn theta(&mut self, spec: &str, group: &FiniteGroup) -> CliResult<WeightFunction> {
        let path = Path::new(spec);
        let (text, origin) = if path.is_file() {
            (self.read(path)?, path.display().to_string())
        } else {
            (spec.to_string(), "--theta".to_string())
        };
        let trimmed = text.trim().trim_start_matches('[').trim_end_matches(']');
        let values = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .enumerate()
            .map(|(i, t)| {
                t.parse::<f64>()
                    .map_err(|_| CliError::Input(format!("{origin}: value {} `{t}` is not a number", i + 1)))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if values.len() != group.order() {
            return Err(CliError::Input(format!(
                "{origin}: {} values given, group {} has {} elements",
                values.len(),
                group.name(),
                group.order()
            )));
        }
        Ok(WeightFunction::new(values)?)
    }
}

/// Round to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Format with 12 significant digits, trailing zeros removed.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, e) = s.split_once('e').expect("exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

/// Format a complex number as `a+bi` with 12 significant digits.
pub fn fmt_c64(z: C64) -> String {
    let floor = z.norm() * 1e-14;
    let re = if z.re.abs() <= floor { 0.0 } else { round_sig(z.re) };
    let im = if z.im.abs() <= floor { 0.0 } else { round_sig(z.im) };
    if im == 0.0 {
        fmt_f64(re)
    } else if im < 0.0 {
        format!("{}-{}i", fmt_f64(re), fmt_f64(-im))
    } else {
        format!("{}+{}i", fmt_f64(re), fmt_f64(im))
    }
}

/// Recursively round every float in a JSON value to 12 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable report")
}

/// Key-value lines followed by optional tables.
#[derive(Default)]
struct Table {
    out: String,
}

impl Table {
    fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key}: {value}");
        self
    }

    fn rows(&mut self, header: &[&str], rows: &[Vec<String>]) -> &mut Self {
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for r in rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: Vec<String>| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(self.out, "{}", line(header.iter().map(|s| s.to_string()).collect()));
        for r in rows {
            let _ = writeln!(self.out, "{}", line(r.clone()));
        }
        self
    }

    fn finish(&mut self) -> String {
        std::mem::take(&mut self.out)
    }
}

fn parse_group(desc: &str) -> CliResult<FiniteGroup> {
    Ok(FiniteGroup::parse(desc)?)
}

fn element(group: &FiniteGroup, s: &str) -> CliResult<usize> {
    if let Some(g) = group.element_by_name(s) {
        return Ok(g);
    }
    match s.parse::<usize>() {
        Ok(g) if g < group.order() => Ok(g),
        _ => Err(CliError::Input(format!("`{s}` is not an element of {}", group.name()))),
    }
}

fn pair(s: &str, what: &str) -> CliResult<(usize, String)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Input(format!("{what} `{s}` must have the form index:value")))?;
    let a = a
        .parse()
        .map_err(|_| CliError::Input(format!("{what} `{s}`: `{a}` is not an index")))?;
    Ok((a, b.to_string()))
}

fn insertions(group: &FiniteGroup, order: &[String], disorder: &[String]) -> CliResult<Insertions> {
    let mut ins = Insertions::default();
    for o in order {
        let (vertex, chi) = pair(o, "order insertion")?;
        ins.order.push(OrderInsertion {
            vertex,
            character: element(group, &chi)?,
        });
    }
    for d in disorder {
        let (face, g) = pair(d, "disorder insertion")?;
        ins.disorder.push(DisorderInsertion {
            face,
            element: element(group, &g)?,
        });
    }
    Ok(ins)
}

fn sum_options(args: &SpinArgs, global: &GlobalOpts) -> SumOptions {
    SumOptions {
        spin_cap: global.spin_cap as u128,
        method: match args.method {
            MethodArg::Auto => SumMethod::Auto,
            MethodArg::Brute => SumMethod::BruteForce,
            MethodArg::Elimination => SumMethod::Elimination,
        },
        normalize_vertices: args.normalize_vertices,
    }
}

fn presentation(spec: &str) -> CliResult<GroupPresentation> {
    let lower = spec.to_ascii_lowercase();
    let num = |s: &str| -> CliResult<usize> {
        s.parse()
            .map_err(|_| CliError::Input(format!("manifold `{spec}`: `{s}` is not a number")))
    };
    Ok(match lower.as_str() {
        "s1" => GroupPresentation::free_abelian(1),
        "t2" => GroupPresentation::surface(1),
        "t3" => GroupPresentation::free_abelian(3),
        "sphere" | "s2" | "s3" => GroupPresentation::trivial(),
        _ => match lower.split_once(':') {
            Some(("torus", k)) => GroupPresentation::free_abelian(num(k)?),
            Some(("genus", g)) => GroupPresentation::surface(num(g)?),
            Some(("lens", p)) => GroupPresentation::cyclic(num(p)?),
            _ => return Err(CliError::Input(format!("unknown manifold `{spec}`"))),
        },
    })
}

fn complex(spec: &str, inputs: &mut Inputs) -> CliResult<SimplicialComplex> {
    let lower = spec.to_ascii_lowercase();
    let path = Path::new(spec);
    if path.is_file() {
        let c: SimplicialComplex = inputs.json(path)?;
        return Ok(SimplicialComplex::new(c.dim, c.simplices)?);
    }
    Ok(match lower.as_str() {
        "s3" => SimplicialComplex::sphere3(),
        "t3" => SimplicialComplex::torus3(3)?,
        "rp2" => SimplicialComplex::rp2(),
        _ => match lower.split_once(':') {
            Some(("genus", g)) => {
                let g = g
                    .parse()
                    .map_err(|_| CliError::Input(format!("complex `{spec}`: bad genus")))?;
                SimplicialComplex::from_lattice(&generate_lattice(LatticeKind::Genus(g))?)
            }
            Some(("torus", mn)) => {
                let (m, n) = mn
                    .split_once('x')
                    .and_then(|(m, n)| Some((m.parse().ok()?, n.parse().ok()?)))
                    .ok_or_else(|| CliError::Input(format!("complex `{spec}`: expected torus:MxN")))?;
                SimplicialComplex::from_lattice(&generate_lattice(LatticeKind::Torus { m, n })?)
            }
            _ => return Err(CliError::Input(format!("unknown complex `{spec}`"))),
        },
    })
}

fn c64_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn lattice_summary(t: &mut Table, l: &Lattice2) {
    t.kv("vertices", l.num_vertices())
        .kv("edges", l.num_edges())
        .kv("faces", l.num_faces())
        .kv("euler_characteristic", l.euler_characteristic());
}

fn emit_lattice(l: &Lattice2, out: &Option<PathBuf>) -> CliResult<Outcome> {
    let text = serde_json::to_string_pretty(l).expect("lattice serializes");
    let mut t = Table::default();
    lattice_summary(&mut t, l);
    let mut outcome = Outcome::ok(
        json!({ "lattice": to_value(l) }),
        t.finish(),
        format!(
            "ok: lattice with {} vertices, {} edges, {} faces",
            l.num_vertices(),
            l.num_edges(),
            l.num_faces()
        ),
    );
    match out {
        Some(path) => {
            std::fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        }
        None => outcome.raw = Some(text),
    }
    Ok(outcome)
}

fn run_lattice(cmd: &LatticeCmd, inputs: &mut Inputs) -> CliResult<Outcome> {
    match cmd {
        LatticeCmd::Gen { kind, m, n, genus, out } => {
            let kind = match kind {
                GenKind::Torus => LatticeKind::Torus { m: *m, n: *n },
                GenKind::SphereCube => LatticeKind::SphereCube,
                GenKind::SphereTetra => LatticeKind::SphereTetra,
                GenKind::Genus => LatticeKind::Genus(*genus),
            };
            emit_lattice(&generate_lattice(kind)?, out)
        }
        LatticeCmd::Dual { lattice, out } => {
            let l = inputs.lattice(lattice)?;
            emit_lattice(&dual_lattice(&l)?.lattice, out)
        }
        LatticeCmd::Validate { lattice } => {
            let l = inputs.lattice(lattice)?;
            let report = l.validate();
            let mut t = Table::default();
            lattice_summary(&mut t, &l);
            t.kv("valid", report.valid);
            if !report.issues.is_empty() {
                let rows: Vec<Vec<String>> = report
                    .issues
                    .iter()
                    .map(|i| vec![i.location.clone(), i.message.clone()])
                    .collect();
                t.rows(&["location", "message"], &rows);
            }
            let verdict = if report.valid {
                "valid".to_string()
            } else {
                format!(
                    "invalid: {} issue(s), first: {}",
                    report.issues.len(),
                    report.issues[0].message
                )
            };
            Ok(Outcome {
                report: to_value(&report),
                table: t.finish(),
                verdict,
                passed: report.valid,
                raw: None,
            })
        }
    }
}

fn run_fourier(args: &GroupTheta, inputs: &mut Inputs) -> CliResult<Outcome> {
    let g = parse_group(&args.group)?;
    let theta = inputs.theta(&args.theta, &g)?;
    let mut t = Table::default();
    if let Ok(a) = g.as_abelian() {
        let values: Vec<C64> = theta.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        let f = fourier_abelian(&values, a)?;
        let rows: Vec<Vec<String>> = f
            .iter()
            .enumerate()
            .map(|(b, z)| vec![g.element_name(b).to_string(), fmt_c64(*z)])
            .collect();
        t.rows(&["character", "value"], &rows);
        Ok(Outcome::ok(
            json!({ "group": g.name(), "transform": f.iter().map(|z| c64_json(*z)).collect::<Vec<_>>() }),
            t.finish(),
            format!("ok: transform of {} values", f.len()),
        ))
    } else {
        let f = fourier_nonabelian(&theta, &g)?;
        let mut blocks = Vec::new();
        for (i, b) in f.blocks.iter().enumerate() {
            let _ = writeln!(t.out, "irrep {i} (dim {}):", b.nrows());
            let mut rows_json = Vec::new();
            for r in 0..b.nrows() {
                let cells: Vec<String> = (0..b.ncols()).map(|c| fmt_c64(b[(r, c)])).collect();
                let _ = writeln!(t.out, "  {}", cells.join("  "));
                rows_json.push((0..b.ncols()).map(|c| c64_json(b[(r, c)])).collect::<Vec<_>>());
            }
            blocks.push(rows_json);
        }
        Ok(Outcome::ok(
            json!({ "group": g.name(), "blocks": blocks }),
            t.finish(),
            format!("ok: {} operator blocks", f.blocks.len()),
        ))
    }
}

fn run_admissible(args: &GroupTheta, inputs: &mut Inputs) -> CliResult<Outcome> {
    let g = parse_group(&args.group)?;
    let theta = inputs.theta(&args.theta, &g)?;
    inputs.tolerances.insert("admissibility".into(), ADMISSIBILITY_TOL);
    let a = is_admissible(&theta, &g, ADMISSIBILITY_TOL)?;
    let mut t = Table::default();
    t.kv("admissible", a.admissible);
    if let Some(v) = &a.violation {
        t.kv("violation", serde_json::to_string(v).expect("violation serializes"));
    }
    let verdict = if a.admissible { "admissible" } else { "inadmissible" };
    Ok(Outcome::ok(to_value(&a), t.finish(), verdict.into()))
}

fn run_ising(cmd: &IsingCmd, global: &GlobalOpts, inputs: &mut Inputs) -> CliResult<Outcome> {
    inputs.caps.insert("spin_cap".into(), global.spin_cap as f64);
    match cmd {
        IsingCmd::Partition(args) => {
            let l = inputs.lattice(&args.lattice)?;
            let g = parse_group(&args.group)?;
            let theta = inputs.theta(&args.theta, &g)?;
            let ins = insertions(&g, &args.order, &args.disorder)?;
            let z = spin_partition(
                &l,
                &g,
                &theta,
                &FlatBackground::trivial(&l, &g),
                &ins,
                &sum_options(args, global),
            )?;
            let mut t = Table::default();
            t.kv("partition", fmt_c64(z));
            Ok(Outcome::ok(
                json!({ "partition": c64_json(z) }),
                t.finish(),
                format!("ok: Z = {}", fmt_c64(z)),
            ))
        }
        IsingCmd::Vector(args) => {
            let l = inputs.lattice(&args.lattice)?;
            let g = parse_group(&args.group)?;
            let theta = inputs.theta(&args.theta, &g)?;
            let ins = insertions(&g, &args.order, &args.disorder)?;
            let opts = sum_options(args, global);
            let mut t = Table::default();
            if let Ok(a) = g.as_abelian() {
                let v = partition_vector(&l, a, &theta, &ins, &opts)?;
                t.kv("selection_rule_zero", v.selection_rule_zero);
                let rows: Vec<Vec<String>> = v
                    .values
                    .iter()
                    .enumerate()
                    .map(|(k, z)| vec![k.to_string(), fmt_c64(*z)])
                    .collect();
                t.rows(&["class", "value"], &rows);
                Ok(Outcome::ok(
                    to_value(&v),
                    t.finish(),
                    format!("ok: {} classes", v.values.len()),
                ))
            } else {
                let v = partition_vector_nonabelian(&l, &g, &theta, &ins, &opts)?;
                let rows: Vec<Vec<String>> = v
                    .orbits
                    .iter()
                    .zip(&v.values)
                    .enumerate()
                    .map(|(k, (o, x))| vec![k.to_string(), o.size.to_string(), fmt_f64(*x)])
                    .collect();
                t.rows(&["orbit", "size", "value"], &rows);
                Ok(Outcome::ok(
                    to_value(&v),
                    t.finish(),
                    format!("ok: {} orbits", v.values.len()),
                ))
            }
        }
        IsingCmd::KwCheck(args) => {
            let l = inputs.lattice(&args.lattice)?;
            let g = parse_group(&args.group)?;
            let a = g.as_abelian()?;
            let theta = inputs.theta(&args.theta, &g)?;
            let ins = insertions(&g, &args.order, &args.disorder)?;
            inputs.tolerances.insert("kw_relative".into(), global.tol);
            let r = kw_dual_check(&l, a, &theta, &ins, &sum_options(args, global))?;
            let mut t = Table::default();
            t.kv("factor", fmt_f64(r.factor))
                .kv("h1_order", r.h1_order)
                .kv("max_error", fmt_f64(r.max_error))
                .kv("max_relative_error", fmt_f64(r.max_relative_error));
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .map(|row| {
                    vec![
                        row.class.to_string(),
                        fmt_c64(row.lhs),
                        fmt_c64(row.rhs),
                        fmt_f64(row.abs_err),
                    ]
                })
                .collect();
            t.rows(&["class", "lhs", "rhs", "abs_err"], &rows);
            let passed = r.max_relative_error <= global.tol;
            let verdict = format!(
                "{} kw-check: max_relative_error {} (tolerance {})",
                if passed { "PASS" } else { "FAIL" },
                fmt_f64(r.max_relative_error),
                fmt_f64(global.tol)
            );
            Ok(Outcome {
                report: to_value(&r),
                table: t.finish(),
                verdict,
                passed,
                raw: None,
            })
        }
        IsingCmd::Transfer {
            sites,
            group,
            theta,
            twist,
        } => {
            let g = parse_group(group)?;
            let theta = inputs.theta(theta, &g)?;
            let h = match twist {
                Some(s) => element(&g, s)?,
                None => g.identity(),
            };
            inputs.caps.insert("transfer_cap".into(), global.transfer_cap as f64);
            let r = transfer_matrix(*sites, &g, &theta, h, global.transfer_cap)?;
            let mut t = Table::default();
            t.kv("sites", r.sites)
                .kv("states", r.states)
                .kv("rank", r.rank)
                .kv("top_multiplicity", r.top_multiplicity)
                .kv("idempotence_constant", fmt_f64(r.idempotence_constant))
                .kv("idempotence_residual", fmt_f64(r.idempotence_residual));
            let rows: Vec<Vec<String>> = r
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(i, x)| vec![i.to_string(), fmt_f64(*x)])
                .collect();
            t.rows(&["index", "eigenvalue"], &rows);
            Ok(Outcome::ok(
                to_value(&r),
                t.finish(),
                format!("ok: rank {}, top multiplicity {}", r.rank, r.top_multiplicity),
            ))
        }
    }
}

fn run_tqft(cmd: &TqftCmd, global: &GlobalOpts, inputs: &mut Inputs) -> CliResult<Outcome> {
    match cmd {
        TqftCmd::Count { group, manifold } => {
            let g = parse_group(group)?;
            let p = presentation(manifold)?;
            inputs.caps.insert("hom_cap".into(), global.hom_cap as f64);
            let c = count_bundles(&p, &g, global.hom_cap as u128)?;
            let mut t = Table::default();
            t.kv("count", c);
            Ok(Outcome::ok(
                json!({ "manifold": manifold, "group": g.name(), "count": c.to_string() }),
                t.finish(),
                format!("ok: count {c}"),
            ))
        }
        TqftCmd::Higher {
            group,
            complex: spec,
            r,
        } => {
            let g = parse_group(group)?;
            let a = g.as_abelian()?.clone();
            let x = complex(spec, inputs)?;
            inputs.caps.insert("cell_cap".into(), global.cell_cap as f64);
            let s = HigherTheorySpec::new(*r, a, x.dim)?;
            let z = higher_partition(&x, &s, global.cell_cap)?;
            let mut t = Table::default();
            t.kv("dimension", x.dim).kv("r", r).kv("partition", z);
            Ok(Outcome::ok(
                json!({ "dimension": x.dim, "r": r, "partition": z.to_string() }),
                t.finish(),
                format!("ok: partition {z}"),
            ))
        }
        TqftCmd::Emdual {
            group,
            complex: spec,
            r,
        } => {
            let g = parse_group(group)?;
            let a = g.as_abelian()?;
            let x = complex(spec, inputs)?;
            inputs.caps.insert("cell_cap".into(), global.cell_cap as f64);
            let rep = em_duality_check(&x, a, *r, global.cell_cap)?;
            let mut t = Table::default();
            t.kv("dimension", rep.dimension)
                .kv("r", rep.r)
                .kv("dual_r", rep.dual_r)
                .kv("z", rep.z)
                .kv("z_dual", rep.z_dual)
                .kv("ratio", rep.ratio)
                .kv("euler_characteristic", rep.euler_characteristic)
                .kv("expected", rep.expected);
            let verdict = format!(
                "{} emdual: ratio {} expected {}",
                if rep.holds { "PASS" } else { "FAIL" },
                rep.ratio,
                rep.expected
            );
            Ok(Outcome {
                report: to_value(&rep),
                table: t.finish(),
                verdict,
                passed: rep.holds,
                raw: None,
            })
        }
        TqftCmd::Handlebody {
            handlebody,
            group,
            theta,
            disorder,
        } => {
            let data: HandlebodyData = inputs.json(handlebody)?;
            let g = parse_group(group)?;
            let theta = inputs.theta(theta, &g)?;
            let ins = insertions(&g, &[], disorder)?;
            let opts = SumOptions {
                spin_cap: global.spin_cap as u128,
                ..SumOptions::default()
            };
            let v = pair_with_handlebody(&data, &g, &theta, &ins, &opts)?;
            let mut t = Table::default();
            t.kv("pairing", fmt_f64(v));
            Ok(Outcome::ok(
                json!({ "pairing": v }),
                t.finish(),
                format!("ok: pairing {}", fmt_f64(v)),
            ))
        }
        TqftCmd::Loop {
            lattice,
            group,
            wilson,
            thooft,
        } => {
            let l = inputs.lattice(lattice)?;
            let g = parse_group(group)?;
            let kind = match (wilson, thooft) {
                (Some(chi), None) => LoopKind::Wilson { character: *chi },
                (None, Some(s)) => {
                    let (face, e) = pair(s, "'t Hooft loop")?;
                    LoopKind::THooft {
                        face,
                        element: element(&g, &e)?,
                    }
                }
                _ => return Err(CliError::Input("give exactly one of --wilson or --thooft".into())),
            };
            let v = loop_operator(&l, &g, kind)?;
            let mut t = Table::default();
            t.kv("value", fmt_f64(v));
            Ok(Outcome::ok(
                json!({ "loop": to_value(&kind), "value": v }),
                t.finish(),
                format!("ok: loop value {}", fmt_f64(v)),
            ))
        }
    }
}

fn run_tv(cmd: &TvCmd, global: &GlobalOpts, inputs: &mut Inputs) -> CliResult<Outcome> {
    let args = match cmd {
        TvCmd::StateDim(a) | TvCmd::ProjectorCheck(a) | TvCmd::IsingVector(a) | TvCmd::DualityCheck(a) => a,
    };
    let kind: BackendKind = args.backend.parse()?;
    let g = parse_group(&args.group)?;
    let l = inputs.lattice(&args.lattice)?;
    inputs.caps.insert("state_cap".into(), global.state_cap as f64);
    let backend = build_backend(kind, &g)?;
    let mut t = Table::default();
    match cmd {
        TvCmd::StateDim(_) => {
            let sp = state_space_with_cap(&backend, &l, global.state_cap)?;
            t.kv("backend", format!("{kind:?}").to_lowercase())
                .kv("labelings", sp.labelings.len())
                .kv("dimension", sp.dim)
                .kv("categorical_dimension", fmt_f64(categorical_dim(&backend)))
                .kv("sphere_value", fmt_f64(sphere_value(&backend)));
            Ok(Outcome::ok(
                json!({
                    "backend": kind,
                    "labelings": sp.labelings.len(),
                    "dimension": sp.dim,
                    "categorical_dimension": categorical_dim(&backend),
                    "sphere_value": sphere_value(&backend),
                }),
                t.finish(),
                format!("{}", sp.dim),
            ))
        }
        TvCmd::ProjectorCheck(_) => {
            let sp = state_space_with_cap(&backend, &l, global.state_cap)?;
            inputs.tolerances.insert("projector".into(), PROJECTOR_TOL);
            let r = projector_check(&backend, &sp)?;
            t.kv("dimension", r.dim)
                .kv("vertices", r.vertices)
                .kv("idempotence_error", fmt_f64(r.idempotence_error))
                .kv("self_adjoint_error", fmt_f64(r.self_adjoint_error))
                .kv("commutation_error", fmt_f64(r.commutation_error))
                .kv("trace", fmt_f64(r.trace))
                .kv("rank", r.rank)
                .kv("rank_method", &r.rank_method);
            let passed = r.idempotence_error <= PROJECTOR_TOL
                && r.self_adjoint_error <= PROJECTOR_TOL
                && r.commutation_error <= PROJECTOR_TOL;
            let verdict = format!(
                "{} projector-check: rank {}",
                if passed { "PASS" } else { "FAIL" },
                r.rank
            );
            Ok(Outcome {
                report: to_value(&r),
                table: t.finish(),
                verdict,
                passed,
                raw: None,
            })
        }
        TvCmd::IsingVector(_) => {
            let spec = args
                .theta
                .first()
                .ok_or_else(|| CliError::Input("--theta is required".into()))?;
            let theta = inputs.theta(spec, &g)?;
            let sp = state_space_with_cap(&backend, &l, global.state_cap)?;
            let ps = vertex_projectors(&backend, &sp)?;
            let blocks = match kind {
                BackendKind::Vect => IsingActionVector::from_weight(&theta),
                BackendKind::Rep => {
                    let b = IsingActionVector::from_weight_rep(&theta, &g)?;
                    if args.antipode {
                        b.antipode()
                    } else {
                        b
                    }
                }
            };
            let v = ising_vector_with(&backend, &sp, &ps, &blocks)?;
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nonzero: Vec<(usize, C64)> = v
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 1e-12)
                .map(|(i, z)| (i, *z))
                .collect();
            t.kv("dimension", sp.dim)
                .kv("norm", fmt_f64(norm))
                .kv("nonzero", nonzero.len());
            let rows: Vec<Vec<String>> = nonzero
                .iter()
                .map(|(i, z)| {
                    let (li, _) = sp.locate(*i);
                    let lab: Vec<&str> = sp.labelings[li].iter().map(|&x| backend.simple_name(x)).collect();
                    vec![i.to_string(), lab.join(","), fmt_c64(*z)]
                })
                .collect();
            t.rows(&["index", "labeling", "value"], &rows);
            Ok(Outcome::ok(
                json!({
                    "dimension": sp.dim,
                    "norm": norm,
                    "entries": nonzero.iter().map(|(i, z)| json!({"index": i, "value": c64_json(*z)})).collect::<Vec<_>>(),
                }),
                t.finish(),
                format!("ok: {} nonzero components, norm {}", nonzero.len(), fmt_f64(norm)),
            ))
        }
        TvCmd::DualityCheck(_) => {
            let mut thetas = args
                .theta
                .iter()
                .map(|s| inputs.theta(s, &g))
                .collect::<CliResult<Vec<_>>>()?;
            for k in 0..args.samples {
                thetas.push(random_admissible(&g, args.seed.wrapping_add(k as u64))?);
            }
            let r = duality_harness(&g, &l, &thetas, args.antipode, global.state_cap)?;
            let passed = r.passed();
            match &r {
                crate::turaev_viro::HarnessReport::Abelian { reports, max_error } => {
                    t.kv("route", "abelian")
                        .kv("weights", reports.len())
                        .kv("max_error", fmt_f64(*max_error));
                    if let Some(first) = reports.first() {
                        t.kv("factor", fmt_f64(first.factor));
                    }
                }
                crate::turaev_viro::HarnessReport::Nonabelian {
                    ratios,
                    ratio,
                    relative_spread,
                    antipode,
                } => {
                    t.kv("route", "nonabelian")
                        .kv("weights", thetas.len())
                        .kv("ratio", fmt_c64(*ratio))
                        .kv("relative_spread", fmt_f64(*relative_spread))
                        .kv("antipode", antipode);
                    let rows: Vec<Vec<String>> = ratios
                        .iter()
                        .enumerate()
                        .map(|(i, z)| vec![i.to_string(), fmt_c64(*z)])
                        .collect();
                    t.rows(&["pair", "ratio"], &rows);
                }
            }
            let verdict = format!("{} duality-check", if passed { "PASS" } else { "FAIL" });
            Ok(Outcome {
                report: json!({ "harness": to_value(&r), "weights": thetas.iter().map(|w| w.values.clone()).collect::<Vec<_>>() }),
                table: t.finish(),
                verdict,
                passed,
                raw: None,
            })
        }
    }
}

fn run_cohomology(args: &CohomologyArgs, global: &GlobalOpts, inputs: &mut Inputs) -> CliResult<Outcome> {
    let g = parse_group(&args.group)?;
    let a = g.as_abelian()?;
    let orders: Vec<u128> = match (&args.lattice, &args.complex) {
        (Some(path), None) => {
            let l = inputs.lattice(path)?;
            cohomology(&coboundaries(&l, a))?.orders.to_vec()
        }
        (None, Some(spec)) => {
            let x = complex(spec, inputs)?;
            inputs.caps.insert("cell_cap".into(), global.cell_cap as f64);
            simplicial_cohomology(&x, a, global.cell_cap)?
        }
        _ => return Err(CliError::Input("give exactly one of --lattice or --complex".into())),
    };
    let mut t = Table::default();
    let rows: Vec<Vec<String>> = orders
        .iter()
        .enumerate()
        .map(|(k, o)| vec![k.to_string(), o.to_string()])
        .collect();
    t.rows(&["degree", "order"], &rows);
    let list: Vec<String> = orders.iter().map(|o| o.to_string()).collect();
    Ok(Outcome::ok(
        json!({ "group": g.name(), "orders": list }),
        t.finish(),
        format!("ok: orders [{}]", list.join(", ")),
    ))
}

fn dispatch(cli: &Cli, inputs: &mut Inputs) -> CliResult<Outcome> {
    match &cli.command {
        Command::Lattice(c) => run_lattice(c, inputs),
        Command::Fourier(a) => run_fourier(a, inputs),
        Command::Admissible(a) => run_admissible(a, inputs),
        Command::Ising(c) => run_ising(c, &cli.global, inputs),
        Command::Tqft(c) => run_tqft(c, &cli.global, inputs),
        Command::Tv(c) => run_tv(c, &cli.global, inputs),
        Command::Cohomology(a) => run_cohomology(a, &cli.global, inputs),
    }
}

/// Parse `argv`, run the command, write to `out` and `err`, and return the
/// exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let threads = if cli.global.serial {
        1
    } else {
        cli.global.threads.unwrap_or_else(rayon::current_num_threads).max(1)
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return 1;
        }
    };
    let start = Instant::now();
    let mut inputs = Inputs::default();
    let result = pool.install(|| dispatch(&cli, &mut inputs));
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let code = if outcome.passed {
        0
    } else {
        match &cli.command {
            Command::Lattice(LatticeCmd::Validate { .. }) => 1,
            _ => 3,
        }
    };
    if cli.global.quiet {
        let _ = writeln!(out, "{}", outcome.verdict);
        return code;
    }
    if cli.global.json {
        let mut caps = inputs.caps.clone();
        caps.entry("state_cap".into()).or_insert(cli.global.state_cap as f64);
        let mut tolerances = inputs.tolerances.clone();
        tolerances.entry("duality".into()).or_insert(cli.global.tol);
        let manifest = RunManifest {
            command_line: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            input_hashes: inputs.hashes.clone(),
            tolerances,
            caps,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads,
            serial: cli.global.serial,
            wall_time_seconds: if cli.global.serial {
                None
            } else {
                Some(start.elapsed().as_secs_f64())
            },
        };
        let doc = json!({
            "manifest": to_value(&manifest),
            "report": outcome.report,
            "verdict": outcome.verdict,
            "passed": outcome.passed,
        });
        let text = serde_json::to_string_pretty(&round_json(doc)).expect("report serializes");
        let _ = writeln!(out, "{text}");
        return code;
    }
    match &outcome.raw {
        Some(raw) => {
            let _ = writeln!(out, "{raw}");
        }
        None => {
            let _ = write!(out, "{}", outcome.table);
            let _ = writeln!(out, "{}", outcome.verdict);
        }
    }
    code
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
