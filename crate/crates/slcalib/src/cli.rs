//! Command-line front end: family evaluation, flow integration, validation,
//! classification and normalization of initial data, periodicity tables and
//! OBJ export.
//!
//! Numbers are written in Rust's shortest round-trip form (at most 17
//! significant digits), so every file parses back to the exact f64.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{periodicity_from_pq, periodicity_scan, sl_residual, PeriodicitySpec, SLResidualReport};
use crate::cgeom::{c, Complex3, C64};
use crate::error::Error;
use crate::families::{
    AlphaTriple, CaseAParams, CaseDParams, CaseIIIParams, FamilySpec, KFamilyParams, PQCurve, PQSurface, Surface,
    ZCurve, ZSurface, CASEC_THETA1_0,
};
use crate::flow::{
    constraint_residuals_pq, constraint_residuals_z, integrate_observe, lemma91_invariants, rhs_pq, rhs_w, rhs_wpqr,
    rhs_z, DenseTrajectory, IntegratorCfg, PQState, WPQRState, ZState,
};
use crate::symmetry::{classify_case, normalize_case_iii, normalize_case_iv, SpanCase, Unitary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Relative tolerance for the ω-constraints on initial data.
const INIT_TOL: f64 = 1e-9;
const MAX_NODES: usize = 10_000_000;

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    /// A computed result failed its check.
    Validation(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::InvalidInput(_) | Error::Inadmissible(_) | Error::Degenerate(_)) => EXIT_BAD_INPUT,
            CliError::Lib(Error::Numerical(_) | Error::Consistency(_)) => EXIT_NUMERICAL,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_BAD_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Lib(Error::InvalidInput(msg.into()))
}

/// Shortest decimal that parses back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Parser, Debug)]
#[command(name = "slcalib", version, about = "Special Lagrangian 3-folds from evolution equations")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample Φ of a closed-form family on a grid and write CSV.
    FamilyEval(FamilyEvalArgs),
    /// Integrate one of the flows from initial data.
    Evolve(EvolveArgs),
    /// Special Lagrangian residuals of a family or an integrated state.
    Validate(ValidateArgs),
    /// Case of the span of z₁, z₂, z₃.
    Classify(StateFileArgs),
    /// Normal form of case-iii or case-iv initial data.
    Normalize(StateFileArgs),
    /// Integer data of the rational periodic case-d families.
    Periodicity(PeriodicityArgs),
    /// OBJ export of a sampled patch.
    Mesh(MeshArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyName {
    #[value(name = "case-iii")]
    CaseIII,
    #[value(name = "case-a")]
    CaseA,
    #[value(name = "case-b")]
    CaseB,
    #[value(name = "case-c")]
    CaseC,
    #[value(name = "case-d")]
    CaseD,
    K,
}

#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    #[arg(long)]
    pub family: FamilyName,
    /// File of `key = value` lines.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// One parameter, e.g. `-P A.re=0.5`; overrides the file.
    #[arg(short = 'P', long = "param", value_name = "KEY=VALUE")]
    pub param: Vec<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// min:max:n
    #[arg(long, allow_hyphen_values = true)]
    pub y1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub y2: Option<String>,
    /// First k-family coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Second k-family coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
}

#[derive(Args, Debug)]
pub struct FamilyEvalArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// CSV path; stdout if absent (no manifest then).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Record wall-clock time in the manifest (breaks byte-identical output).
    #[arg(long)]
    pub timing: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemName {
    Z,
    Pq,
    W,
    Wpqr,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodName {
    Rk4,
    Rk45,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[arg(long)]
    pub system: SystemName,
    #[arg(long)]
    pub init: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: f64,
    #[arg(long, value_enum, default_value_t = MethodName::Rk4)]
    pub method: MethodName,
    /// RK4 step.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// RK45 tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Write every n-th step (the last step is always written).
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    /// Exit 1 if the first-integral drift exceeds this.
    #[arg(long)]
    pub drift_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, conflicts_with = "init")]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(short = 'P', long = "param", value_name = "KEY=VALUE")]
    pub param: Vec<String>,
    /// Initial state at t0; the surface is its RK4 trajectory.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SystemName::Z)]
    pub system: SystemName,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Samples per axis over [−2,2]² × [0,4π] unless grid flags are given.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct StateFileArgs {
    /// z-state file; only z1, z2, z3 are read.
    #[arg(long)]
    pub init: PathBuf,
}

#[derive(Args, Debug)]
pub struct PeriodicityArgs {
    #[arg(long, requires = "q", conflicts_with = "scan_qmax")]
    pub p: Option<i64>,
    #[arg(long, requires = "p")]
    pub q: Option<i64>,
    #[arg(long)]
    pub scan_qmax: Option<i64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MeshArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// `re-re-re` style (part of z₁, z₂, z₃) or three of re1,im1,re2,im2,re3,im3.
    #[arg(long, default_value = "re-re-re")]
    pub coords: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

/// Flat `key = value` parameters. Every key must be consumed.
#[derive(Debug, Default)]
pub struct ParamSet {
    vals: BTreeMap<String, f64>,
    used: std::cell::RefCell<BTreeSet<String>>,
}

impl ParamSet {
    pub fn parse_text(text: &str) -> CliResult<Self> {
        let mut ps = ParamSet::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if ps.vals.contains_key(k) {
                return Err(bad(format!("line {}: duplicate key {k}", n + 1)));
            }
            ps.insert(k, v.trim())?;
        }
        Ok(ps)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    /// `key=value` from the command line; replaces an earlier value.
    pub fn set(&mut self, kv: &str) -> CliResult<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected KEY=VALUE, got {kv}")))?;
        self.insert(k.trim(), v.trim())
    }

    fn insert(&mut self, k: &str, v: &str) -> CliResult<()> {
        if k.is_empty() {
            return Err(bad("empty key"));
        }
        let x: f64 = v.parse().map_err(|_| bad(format!("{k}: cannot parse {v:?} as a number")))?;
        if !x.is_finite() {
            return Err(bad(format!("{k}: non-finite value")));
        }
        self.vals.insert(k.to_string(), x);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let v = self.vals.get(key).copied();
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn real(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    pub fn has_complex(&self, name: &str) -> bool {
        self.vals.contains_key(&format!("{name}.re")) || self.vals.contains_key(&format!("{name}.im"))
    }

    /// `name.re`, `name.im`, each defaulting to 0.
    pub fn complex(&self, name: &str) -> C64 {
        c(self.real(&format!("{name}.re"), 0.0), self.real(&format!("{name}.im"), 0.0))
    }

    pub fn vec3(&self, name: &str) -> Complex3 {
        Complex3::new(
            self.complex(&format!("{name}.1")),
            self.complex(&format!("{name}.2")),
            self.complex(&format!("{name}.3")),
        )
    }

    pub fn integer(&self, key: &str) -> CliResult<Option<i64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) if v.fract() == 0.0 && v.abs() < 1e9 => Ok(Some(v as i64)),
            Some(v) => Err(bad(format!("{key} must be an integer, got {v}"))),
        }
    }

    pub fn finish(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.vals.keys().filter(|k| !used.contains(*k)).map(|k| k.as_str()).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(bad(format!("unknown parameter(s): {}", unknown.join(", "))))
        }
    }
}

fn load_params(file: &Option<PathBuf>, extra: &[String]) -> CliResult<ParamSet> {
    let mut ps = match file {
        Some(p) => ParamSet::read(p)?,
        None => ParamSet::default(),
    };
    for kv in extra {
        ps.set(kv)?;
    }
    Ok(ps)
}

fn alphas_from(ps: &ParamSet) -> CliResult<AlphaTriple> {
    let (a1, a2, a3) = (ps.get("alpha1"), ps.get("alpha2"), ps.get("alpha3"));
    match (a1, a2, a3) {
        (Some(a1), Some(a2), Some(a3)) => Ok(AlphaTriple::new(a1, a2, a3)?),
        (None, Some(a2), Some(a3)) => Ok(AlphaTriple::from_pair(a2, a3)?),
        _ => Err(bad("need alpha2 and alpha3 (alpha1 optional)")),
    }
}

/// Builds the family from parameter keys. Keys:
/// case-iii: A, B, D, E (complex);
/// case-a: B, C, E, F, B2, C2, E2, F2;
/// case-b: alpha1?, alpha2, alpha3;
/// case-c: alphas, A, theta1_0;
/// case-d: alphas or p, q; C, D, C2 (complex); D2 (complex) or rho; E1..E3;
/// k: k, A1 (real), A2..Ak, B1..Bk (complex).
pub fn family_from_params(name: FamilyName, ps: &ParamSet) -> CliResult<FamilySpec> {
    let spec = match name {
        FamilyName::CaseIII => FamilySpec::CaseIII(CaseIIIParams {
            a: ps.complex("A"),
            b: ps.complex("B"),
            d: ps.complex("D"),
            e: ps.complex("E"),
        }),
        FamilyName::CaseA => FamilySpec::CaseA(CaseAParams {
            b: ps.real("B", 0.0),
            c: ps.real("C", 0.0),
            e: ps.real("E", 0.0),
            f: ps.real("F", 0.0),
            b2: ps.real("B2", 0.0),
            c2: ps.real("C2", 0.0),
            e2: ps.real("E2", 0.0),
            f2: ps.real("F2", 0.0),
        }),
        FamilyName::CaseB => FamilySpec::CaseB { alphas: alphas_from(ps)? },
        FamilyName::CaseC => FamilySpec::CaseC {
            alphas: alphas_from(ps)?,
            amp: ps.get("A").ok_or_else(|| bad("case-c needs A"))?,
            theta1_0: ps.real("theta1_0", CASEC_THETA1_0),
        },
        FamilyName::CaseD => {
            let alphas = match (ps.integer("p")?, ps.integer("q")?) {
                (Some(p), Some(q)) => {
                    if ps.has_complex("alpha1") || ps.get("alpha2").is_some() {
                        return Err(bad("give either p, q or the alphas"));
                    }
                    periodicity_from_pq(p, q)?.1
                }
                (None, None) => alphas_from(ps)?,
                _ => return Err(bad("p and q go together")),
            };
            let (cc, d, c2) = (ps.complex("C"), ps.complex("D"), ps.complex("C2"));
            let e = [ps.complex("E1"), ps.complex("E2"), ps.complex("E3")];
            let params = match ps.get("rho") {
                Some(rho) => {
                    if ps.has_complex("D2") {
                        return Err(bad("give either D2 or rho"));
                    }
                    CaseDParams::complete(alphas, cc, d, c2, rho, e)?
                }
                None => CaseDParams { alphas, c: cc, d, c2, d2: ps.complex("D2"), e },
            };
            FamilySpec::CaseD(params)
        }
        FamilyName::K => {
            let k = ps.integer("k")?.ok_or_else(|| bad("k-family needs k"))?;
            if !(1..=64).contains(&k) {
                return Err(bad(format!("k = {k} out of range 1..64")));
            }
            let k = k as usize;
            FamilySpec::K(KFamilyParams {
                k,
                a1: ps.real("A1", 0.0),
                a: (2..=k).map(|j| ps.complex(&format!("A{j}"))).collect(),
                b: (1..=k).map(|j| ps.complex(&format!("B{j}"))).collect(),
            })
        }
    };
    ps.finish()?;
    Ok(spec)
}

fn push_c(m: &mut BTreeMap<String, String>, name: &str, v: C64) {
    m.insert(format!("{name}.re"), num(v.re));
    m.insert(format!("{name}.im"), num(v.im));
}

/// Resolved parameters under their file keys; reading them back gives the
/// same family.
pub fn spec_record(spec: &FamilySpec) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let alphas = |m: &mut BTreeMap<String, String>, a: &AlphaTriple| {
        for (j, v) in a.get().iter().enumerate() {
            m.insert(format!("alpha{}", j + 1), num(*v));
        }
    };
    match spec {
        FamilySpec::CaseIII(p) => {
            for (n, v) in [("A", p.a), ("B", p.b), ("D", p.d), ("E", p.e)] {
                push_c(&mut m, n, v);
            }
        }
        FamilySpec::CaseA(p) => {
            for (n, v) in
                [("B", p.b), ("C", p.c), ("E", p.e), ("F", p.f), ("B2", p.b2), ("C2", p.c2), ("E2", p.e2), ("F2", p.f2)]
            {
                m.insert(n.into(), num(v));
            }
        }
        FamilySpec::CaseB { alphas: a } => alphas(&mut m, a),
        FamilySpec::CaseC { alphas: a, amp, theta1_0 } => {
            alphas(&mut m, a);
            m.insert("A".into(), num(*amp));
            m.insert("theta1_0".into(), num(*theta1_0));
        }
        FamilySpec::CaseD(p) => {
            alphas(&mut m, &p.alphas);
            for (n, v) in [("C", p.c), ("D", p.d), ("C2", p.c2), ("D2", p.d2)] {
                push_c(&mut m, n, v);
            }
            for (j, v) in p.e.iter().enumerate() {
                push_c(&mut m, &format!("E{}", j + 1), *v);
            }
        }
        FamilySpec::K(p) => {
            m.insert("k".into(), p.k.to_string());
            m.insert("A1".into(), num(p.a1));
            for (j, v) in p.a.iter().enumerate() {
                push_c(&mut m, &format!("A{}", j + 2), *v);
            }
            for (j, v) in p.b.iter().enumerate() {
                push_c(&mut m, &format!("B{}", j + 1), *v);
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn parse(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let err = || bad(format!("grid axis must be min:max:n, got {s:?}"));
        if parts.len() != 3 {
            return Err(err());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| err())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| err())?;
        let n: usize = parts[2].trim().parse().map_err(|_| err())?;
        if !min.is_finite() || !max.is_finite() || n == 0 || max < min || (n > 1 && max == min) {
            return Err(err());
        }
        Ok(Axis { min, max, n })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        (0..self.n).map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64).collect()
    }

    fn label(&self) -> String {
        format!("{}:{}:{}", num(self.min), num(self.max), self.n)
    }
}

/// Three axes in (first, second, t) order.
fn grid_axes(g: &GridArgs, k_family: bool, default: Option<[Axis; 3]>) -> CliResult<[Axis; 3]> {
    let (first, second, names, wrong) = if k_family {
        (&g.x, &g.y, ("--x", "--y"), g.y1.is_some() || g.y2.is_some())
    } else {
        (&g.y1, &g.y2, ("--y1", "--y2"), g.x.is_some() || g.y.is_some())
    };
    if wrong {
        return Err(bad(if k_family {
            "the k-family uses --x/--y, not --y1/--y2"
        } else {
            "--x/--y are for the k-family; use --y1/--y2"
        }));
    }
    let pick = |s: &Option<String>, name: &str, i: usize| -> CliResult<Axis> {
        match (s, default) {
            (Some(s), _) => Axis::parse(s),
            (None, Some(d)) => Ok(d[i]),
            (None, None) => Err(bad(format!("missing grid flag {name}"))),
        }
    };
    let axes = [pick(first, names.0, 0)?, pick(second, names.1, 1)?, pick(&g.t, "--t", 2)?];
    let total = axes.iter().map(|a| a.n).try_fold(1usize, |acc, n| acc.checked_mul(n));
    match total {
        Some(t) if t <= MAX_NODES => Ok(axes),
        _ => Err(bad(format!("grid exceeds {MAX_NODES} nodes"))),
    }
}

fn grid_points(axes: &[Axis; 3]) -> Vec<[f64; 3]> {
    let (a, b, t) = (axes[0].values(), axes[1].values(), axes[2].values());
    let mut out = Vec::with_capacity(a.len() * b.len() * t.len());
    for &x in &a {
        for &y in &b {
            for &s in &t {
                out.push([x, y, s]);
            }
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub parameters: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, String>,
    pub residuals: BTreeMap<String, String>,
    /// Only with --timing, so that default runs are reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            parameters: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            residuals: BTreeMap::new(),
            timing_ms: None,
        }
    }

    fn write(&self, path: &Path) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        write_file(path, &s)
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn manifest_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

fn record_report(m: &mut BTreeMap<String, String>, r: &SLResidualReport) {
    m.insert("max_omega".into(), num(r.max_omega));
    m.insert("max_im_omega3".into(), num(r.max_im_omega3));
    m.insert("max_flow".into(), num(r.max_lemma61));
    m.insert("samples".into(), r.samples.to_string());
    m.insert("degenerate".into(), r.degenerate.to_string());
}

struct Sampled {
    spec: FamilySpec,
    axes: [Axis; 3],
    points: Vec<[f64; 3]>,
    values: Vec<Complex3>,
    report: SLResidualReport,
}

fn sample_family(fa: &FamilyArgs, grid: &GridArgs) -> CliResult<Sampled> {
    let ps = load_params(&fa.params, &fa.param)?;
    let spec = family_from_params(fa.family, &ps)?;
    let axes = grid_axes(grid, fa.family == FamilyName::K, None)?;
    let surf = spec.surface()?;
    let points = grid_points(&axes);
    let values: Vec<Complex3> =
        points.par_iter().map(|&[a, b, t]| surf.point(a, b, t)).collect::<Result<_, Error>>()?;
    let report = sl_residual(surf.as_ref(), &points)?;
    Ok(Sampled { spec, axes, points, values, report })
}

fn sampled_manifest(cmd: &str, s: &Sampled) -> RunManifest {
    let mut m = RunManifest::new(cmd);
    m.parameters = spec_record(&s.spec);
    m.parameters.insert("family".into(), s.spec.name().into());
    let names = if matches!(s.spec, FamilySpec::K(_)) { ["x", "y", "t"] } else { ["y1", "y2", "t"] };
    for (n, a) in names.iter().zip(&s.axes) {
        m.parameters.insert(format!("grid.{n}"), a.label());
    }
    m.tolerances.insert("immersion".into(), num(crate::analysis::IMMERSION_TOL));
    record_report(&mut m.residuals, &s.report);
    m
}

fn cmd_family_eval(a: &FamilyEvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let start = Instant::now();
    let s = sample_family(&a.family, &a.grid)?;
    let mut csv = String::new();
    csv.push_str(if matches!(s.spec, FamilySpec::K(_)) { "x,y,t" } else { "y1,y2,t" });
    csv.push_str(",re_z1,im_z1,re_z2,im_z2,re_z3,im_z3\n");
    for (p, v) in s.points.iter().zip(&s.values) {
        let _ = write!(csv, "{},{},{}", num(p[0]), num(p[1]), num(p[2]));
        for z in v.as_array() {
            let _ = write!(csv, ",{},{}", num(z.re), num(z.im));
        }
        csv.push('\n');
    }
    match &a.out {
        Some(path) => {
            write_file(path, &csv)?;
            let mut m = sampled_manifest("family-eval", &s);
            if a.timing {
                m.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            m.write(&manifest_path(path, &a.manifest))?;
            writeln!(out, "wrote {} rows to {}", s.points.len(), path.display()).map_err(io)?;
        }
        None => out.write_all(csv.as_bytes()).map_err(io)?,
    }
    Ok(())
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// An initial state of one of the four systems.
#[derive(Debug, Clone)]
pub enum InitState {
    Z(ZState),
    Pq(PQState),
    W([C64; 3]),
    Wpqr(WPQRState),
}

fn scalars(ps: &ParamSet, name: &str) -> [C64; 3] {
    [1, 2, 3].map(|j| ps.complex(&format!("{name}{j}")))
}

/// Reads an initial state. Keys: z: `z4.2.re` (vector 4, component 2);
/// pq: `k`, `p0.1.re`, `q1.3.im`, `q2.1.re`; w: `w1.re`; wpqr: `w1.re`,
/// `p2.im`, `q3.re`, `r1.im`. Missing keys are zero.
pub fn read_state(system: SystemName, ps: &ParamSet) -> CliResult<InitState> {
    let s = match system {
        SystemName::Z => InitState::Z(ZState::new([1, 2, 3, 4, 5, 6].map(|j| ps.vec3(&format!("z{j}"))))),
        SystemName::Pq => {
            let k = ps.integer("k")?.ok_or_else(|| bad("pq state needs k"))?;
            if !(1..=64).contains(&k) {
                return Err(bad(format!("k = {k} out of range 1..64")));
            }
            let p = (0..=k).map(|i| ps.vec3(&format!("p{i}"))).collect();
            InitState::Pq(PQState::new(p, ps.vec3("q1"), ps.vec3("q2"))?)
        }
        SystemName::W => InitState::W(scalars(ps, "w")),
        SystemName::Wpqr => InitState::Wpqr(WPQRState {
            w: scalars(ps, "w"),
            p: scalars(ps, "p"),
            q: scalars(ps, "q"),
            r: scalars(ps, "r"),
        }),
    };
    ps.finish()?;
    Ok(s)
}

fn w_integrals(w: &[C64; 3]) -> [f64; 3] {
    let n = w.map(|v| v.norm_sqr());
    [n[0] + n[1], n[0] + n[2], (w[0] * w[1] * w[2]).im]
}

impl InitState {
    fn columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        let mut vec3 = |name: String| {
            for m in 1..=3 {
                cols.push(format!("re_{name}_{m}"));
                cols.push(format!("im_{name}_{m}"));
            }
        };
        match self {
            InitState::Z(_) => (1..=6).for_each(|j| vec3(format!("z{j}"))),
            InitState::Pq(s) => {
                (0..=s.k()).for_each(|i| vec3(format!("p{i}")));
                vec3("q1".into());
                vec3("q2".into());
            }
            InitState::W(_) | InitState::Wpqr(_) => {
                let names: &[&str] = if matches!(self, InitState::W(_)) { &["w"] } else { &["w", "p", "q", "r"] };
                for n in names {
                    for j in 1..=3 {
                        cols.push(format!("re_{n}{j}"));
                        cols.push(format!("im_{n}{j}"));
                    }
                }
            }
        }
        cols
    }

    /// Quantities conserved by the flow.
    fn integrals(&self) -> Vec<f64> {
        match self {
            InitState::Z(s) => constraint_residuals_z(s).to_vec(),
            InitState::Pq(s) => constraint_residuals_pq(s),
            InitState::W(w) => w_integrals(w).to_vec(),
            InitState::Wpqr(s) => {
                let mut v = lemma91_invariants(&s.w, &s.p, &s.q).to_vec();
                v.extend(w_integrals(&s.w));
                v
            }
        }
    }

    /// ω-constraints that must vanish, with the state scale.
    fn constraint_check(&self) -> CliResult<()> {
        let (res, scale): (Vec<f64>, f64) = match self {
            InitState::Z(s) => (constraint_residuals_z(s).to_vec(), s.z.iter().map(|v| v.norm()).fold(0.0, f64::max)),
            InitState::Pq(s) => {
                (constraint_residuals_pq(s), s.p.iter().chain([&s.q1, &s.q2]).map(|v| v.norm()).fold(0.0, f64::max))
            }
            InitState::W(_) => return Ok(()),
            InitState::Wpqr(s) => {
                let z = s.to_z();
                (constraint_residuals_z(&z).to_vec(), z.z.iter().map(|v| v.norm()).fold(0.0, f64::max))
            }
        };
        let worst = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if worst > INIT_TOL * scale.max(1.0).powi(2) {
            return Err(CliError::Lib(Error::Inadmissible(format!(
                "initial data violate the omega-constraints (largest residual {worst:e})"
            ))));
        }
        Ok(())
    }

    fn values(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut push = |z: &C64| {
            v.push(z.re);
            v.push(z.im);
        };
        match self {
            InitState::Z(s) => s.z.iter().flat_map(|x| x.as_array()).for_each(|z| push(&z)),
            InitState::Pq(s) => s.p.iter().chain([&s.q1, &s.q2]).flat_map(|x| x.as_array()).for_each(|z| push(&z)),
            InitState::W(w) => w.iter().for_each(push),
            InitState::Wpqr(s) => s.w.iter().chain(&s.p).chain(&s.q).chain(&s.r).for_each(push),
        }
        v
    }
}

struct Traj {
    rows: Vec<(f64, InitState)>,
    steps: usize,
    drift: f64,
}

fn run_flow(init: &InitState, t0: f64, t1: f64, cfg: &IntegratorCfg, every: usize) -> CliResult<Traj> {
    let base = init.integrals();
    let mut drift = 0.0f64;
    let mut rows = Vec::new();
    let mut step = 0usize;
    let mut last: Option<(f64, InitState)> = None;
    let mut observe = |t: f64, s: InitState| {
        for (a, b) in s.integrals().iter().zip(&base) {
            drift = drift.max((a - b).abs());
        }
        if step % every == 0 {
            rows.push((t, s.clone()));
            last = None;
        } else {
            last = Some((t, s));
        }
        step += 1;
    };
    match init {
        InitState::Z(s) => {
            integrate_observe(rhs_z, s, t0, t1, cfg, |t, x| observe(t, InitState::Z(*x)))?;
        }
        InitState::Pq(s) => {
            integrate_observe(rhs_pq, s, t0, t1, cfg, |t, x| observe(t, InitState::Pq(x.clone())))?;
        }
        InitState::W(w) => {
            let s = WPQRState { w: *w, ..Default::default() };
            let f = |s: &WPQRState| WPQRState { w: rhs_w(&s.w), ..Default::default() };
            integrate_observe(f, &s, t0, t1, cfg, |t, x| observe(t, InitState::W(x.w)))?;
        }
        InitState::Wpqr(s) => {
            integrate_observe(rhs_wpqr, s, t0, t1, cfg, |t, x| observe(t, InitState::Wpqr(*x)))?;
        }
    }
    if let Some(l) = last {
        rows.push(l);
    }
    // the initial state is observed too
    Ok(Traj { rows, steps: step.saturating_sub(1), drift })
}

fn cmd_evolve(a: &EvolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let start = Instant::now();
    if a.every == 0 {
        return Err(bad("--every must be positive"));
    }
    let ps = ParamSet::read(&a.init)?;
    let init = read_state(a.system, &ps)?;
    init.constraint_check()?;
    let cfg = match a.method {
        MethodName::Rk4 => IntegratorCfg::rk4(a.h),
        MethodName::Rk45 => IntegratorCfg::rk45(a.tol),
    };
    let traj = run_flow(&init, a.t0, a.t1, &cfg, a.every)?;
    let mut csv = String::from("t");
    for c in init.columns() {
        csv.push(',');
        csv.push_str(&c);
    }
    csv.push('\n');
    for (t, s) in &traj.rows {
        csv.push_str(&num(*t));
        for v in s.values() {
            csv.push(',');
            csv.push_str(&num(v));
        }
        csv.push('\n');
    }
    let report =
        format!("steps = {}\nrows = {}\nmax_constraint_drift = {}\n", traj.steps, traj.rows.len(), num(traj.drift));
    match &a.out {
        Some(path) => {
            write_file(path, &csv)?;
            let mut m = RunManifest::new("evolve");
            m.parameters = ps.vals.iter().map(|(k, v)| (format!("init.{k}"), num(*v))).collect();
            let system = format!("{:?}", a.system).to_lowercase();
            m.parameters.insert("system".into(), system);
            m.parameters.insert("t0".into(), num(a.t0));
            m.parameters.insert("t1".into(), num(a.t1));
            m.parameters.insert("method".into(), format!("{:?}", a.method).to_lowercase());
            m.tolerances.insert(if a.method == MethodName::Rk4 { "h" } else { "tol" }.into(), num(cfg.step_or_tol));
            m.residuals.insert("max_constraint_drift".into(), num(traj.drift));
            if a.timing {
                m.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            m.write(&manifest_path(path, &a.manifest))?;
            out.write_all(report.as_bytes()).map_err(io)?;
        }
        None => {
            out.write_all(csv.as_bytes()).map_err(io)?;
            eprint!("{report}");
        }
    }
    if let Some(tol) = a.drift_tol {
        if traj.drift > tol {
            return Err(CliError::Validation(format!("constraint drift {} exceeds {}", num(traj.drift), num(tol))));
        }
    }
    Ok(())
}

/// Dense RK4 trajectory of the z-flow as a curve.
struct ZTrajectory(DenseTrajectory<ZState, fn(&ZState) -> ZState>);

impl ZCurve for ZTrajectory {
    fn z_state(&self, t: f64) -> crate::Result<(ZState, ZState)> {
        let s = self.0.eval(t)?;
        let d = rhs_z(&s);
        Ok((s, d))
    }
}

struct PQTrajectory(DenseTrajectory<PQState, fn(&PQState) -> PQState>);

impl PQCurve for PQTrajectory {
    fn pq_state(&self, t: f64) -> crate::Result<(PQState, PQState)> {
        let s = self.0.eval(t)?;
        let d = rhs_pq(&s);
        Ok((s, d))
    }
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.samples == 0 {
        return Err(bad("--samples must be positive"));
    }
    if !(a.tol >= 0.0) {
        return Err(bad("--tol must be non-negative"));
    }
    let (surf, k_family): (Box<dyn Surface>, bool) = match (&a.family, &a.init) {
        (Some(f), None) => {
            let ps = load_params(&a.params, &a.param)?;
            (family_from_params(*f, &ps)?.surface()?, *f == FamilyName::K)
        }
        (None, Some(path)) => {
            if a.params.is_some() || !a.param.is_empty() {
                return Err(bad("--params/--param go with --family"));
            }
            let ps = ParamSet::read(path)?;
            match read_state(a.system, &ps)? {
                InitState::Z(s) => {
                    let f: fn(&ZState) -> ZState = rhs_z;
                    (Box::new(ZSurface(ZTrajectory(DenseTrajectory::new(f, s, a.t0, a.h)?))), false)
                }
                InitState::Wpqr(s) => {
                    let f: fn(&ZState) -> ZState = rhs_z;
                    (Box::new(ZSurface(ZTrajectory(DenseTrajectory::new(f, s.to_z(), a.t0, a.h)?))), false)
                }
                InitState::Pq(s) => {
                    let f: fn(&PQState) -> PQState = rhs_pq;
                    (Box::new(PQSurface(PQTrajectory(DenseTrajectory::new(f, s, a.t0, a.h)?))), true)
                }
                InitState::W(_) => return Err(bad("a w-state alone does not define a 3-fold; use wpqr")),
            }
        }
        _ => return Err(bad("give exactly one of --family or --init")),
    };
    let n = a.samples;
    let default = [
        Axis { min: -2.0, max: 2.0, n },
        Axis { min: -2.0, max: 2.0, n },
        Axis { min: a.t0, max: a.t0 + 4.0 * std::f64::consts::PI, n },
    ];
    let axes = grid_axes(&a.grid, k_family, Some(default))?;
    let rep = sl_residual(surf.as_ref(), &grid_points(&axes))?;
    let pass = rep.worst() <= a.tol;
    let mut text = String::new();
    let _ = writeln!(text, "samples = {}", rep.samples);
    let _ = writeln!(text, "degenerate = {}", rep.degenerate);
    let _ = writeln!(text, "max_omega = {}", num(rep.max_omega));
    let _ = writeln!(text, "max_im_omega3 = {}", num(rep.max_im_omega3));
    let _ = writeln!(text, "max_flow = {}", num(rep.max_lemma61));
    let _ = writeln!(text, "tol = {}", num(a.tol));
    let _ = writeln!(text, "status = {}", if pass { "pass" } else { "fail" });
    out.write_all(text.as_bytes()).map_err(io)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Validation(format!("residual {} exceeds tol {}", num(rep.worst()), num(a.tol))))
    }
}

fn read_triple(path: &Path) -> CliResult<[Complex3; 3]> {
    let ps = ParamSet::read(path)?;
    let z = [ps.vec3("z1"), ps.vec3("z2"), ps.vec3("z3")];
    for j in 4..=6 {
        ps.vec3(&format!("z{j}"));
    }
    ps.finish()?;
    Ok(z)
}

fn write_c3(text: &mut String, name: &str, v: &Complex3) {
    for (m, z) in v.as_array().iter().enumerate() {
        let _ = writeln!(text, "{name}.{}.re = {}", m + 1, num(z.re));
        let _ = writeln!(text, "{name}.{}.im = {}", m + 1, num(z.im));
    }
}

fn write_unitary(text: &mut String, u: &Unitary) {
    for (i, row) in u.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            let _ = writeln!(text, "U{}{}.re = {}", i + 1, j + 1, num(z.re));
            let _ = writeln!(text, "U{}{}.im = {}", i + 1, j + 1, num(z.im));
        }
    }
}

fn cmd_classify(a: &StateFileArgs, out: &mut dyn Write) -> CliResult<()> {
    let [z1, z2, z3] = read_triple(&a.init)?;
    let cl = classify_case(&z1, &z2, &z3)?;
    let mut text = String::new();
    let _ = writeln!(text, "case = {}", cl.case.label());
    let _ = writeln!(text, "dim = {}", cl.dim);
    for (j, s) in cl.singular_values.iter().enumerate() {
        let _ = writeln!(text, "sigma{} = {}", j + 1, num(*s));
    }
    if let Some((form, _)) = cl.quadric {
        let _ = writeln!(text, "quadric = {}", form.tag());
    }
    out.write_all(text.as_bytes()).map_err(io)
}

fn cmd_normalize(a: &StateFileArgs, out: &mut dyn Write) -> CliResult<()> {
    let [z1, z2, z3] = read_triple(&a.init)?;
    let cl = classify_case(&z1, &z2, &z3)?;
    let mut text = String::new();
    let _ = writeln!(text, "case = {}", cl.case.label());
    let (g, u) = match cl.case {
        SpanCase::III => {
            let n = normalize_case_iii(&z1, &z2, &z3)?;
            for (j, z) in n.z.iter().enumerate() {
                write_c3(&mut text, &format!("z{}", j + 1), z);
            }
            (n.gl2, n.unitary)
        }
        SpanCase::IV => {
            let n = normalize_case_iv(&z1, &z2, &z3)?;
            for (j, w) in n.w.iter().enumerate() {
                let _ = writeln!(text, "w{}.re = {}", j + 1, num(w.re));
                let _ = writeln!(text, "w{}.im = {}", j + 1, num(w.im));
            }
            (n.gl2, n.unitary)
        }
        other => {
            return Err(CliError::Lib(Error::Inadmissible(format!(
                "normal forms exist for cases iii and iv; these data are case {}",
                other.label()
            ))))
        }
    };
    for (n, v) in [("a", g.a), ("b", g.b), ("c", g.c), ("d", g.d), ("e", g.e), ("f", g.f)] {
        let _ = writeln!(text, "gl2.{n} = {}", num(v));
    }
    write_unitary(&mut text, &u);
    out.write_all(text.as_bytes()).map_err(io)
}

fn periodicity_row(s: &PeriodicitySpec) -> String {
    let [a1, a2, a3] = s.a;
    let [x, y, z] = s.alpha_ints();
    format!("{},{},{a1},{a2},{a3},{},{x},{y},{z},{},{}\n", s.p, s.q, s.lambda, s.sigma, s.tau)
}

fn cmd_periodicity(a: &PeriodicityArgs, out: &mut dyn Write) -> CliResult<()> {
    let rows = match (a.p, a.q, a.scan_qmax) {
        (Some(p), Some(q), None) => vec![periodicity_from_pq(p, q)?.0],
        (None, None, Some(qmax)) => {
            if !(1..=2000).contains(&qmax) {
                return Err(bad("--scan-qmax must be in 1..=2000"));
            }
            periodicity_scan(qmax)?
        }
        _ => return Err(bad("give --p and --q, or --scan-qmax")),
    };
    let mut text = String::from("p,q,a1,a2,a3,lambda,alpha1,alpha2,alpha3,sigma,tau\n");
    for r in &rows {
        text.push_str(&periodicity_row(r));
    }
    match &a.out {
        Some(path) => write_file(path, &text),
        None => out.write_all(text.as_bytes()).map_err(io),
    }
}

/// Indices into the real 6-vector (Re z₁, Im z₁, Re z₂, …) of Φ.
pub fn parse_projection(s: &str) -> CliResult<[usize; 3]> {
    let err = || bad(format!("--coords: expected e.g. re-re-re or re1,im2,re3, got {s:?}"));
    let part = |p: &str| match p {
        "re" => Some(0),
        "im" => Some(1),
        _ => None,
    };
    if s.contains('-') {
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() != 3 {
            return Err(err());
        }
        let mut out = [0; 3];
        for (j, p) in parts.iter().enumerate() {
            out[j] = 2 * j + part(p).ok_or_else(err)?;
        }
        return Ok(out);
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(err());
    }
    let mut out = [0; 3];
    for (j, p) in parts.iter().enumerate() {
        if p.len() != 3 {
            return Err(err());
        }
        let (kind, idx) = p.split_at(2);
        let idx: usize = idx.parse().map_err(|_| err())?;
        if !(1..=3).contains(&idx) {
            return Err(err());
        }
        out[j] = 2 * (idx - 1) + part(kind).ok_or_else(err)?;
    }
    if out[0] == out[1] || out[1] == out[2] || out[0] == out[2] {
        return Err(err());
    }
    Ok(out)
}

/// OBJ text: one vertex per node (first index slowest, t fastest) and, in
/// each slab between consecutive t values, the quads swept by the grid
/// lines of both parameter directions.
pub fn obj_text(axes: &[Axis; 3], values: &[Complex3], proj: [usize; 3], header: &str) -> String {
    let [n1, n2, n3] = [axes[0].n, axes[1].n, axes[2].n];
    let id = |i: usize, j: usize, k: usize| 1 + (i * n2 + j) * n3 + k;
    let mut s = String::new();
    let _ = writeln!(s, "# {header}");
    let _ = writeln!(s, "# grid {n1} {n2} {n3}");
    for v in values {
        let r = v.to_real6();
        let _ = writeln!(s, "v {} {} {}", num(r[proj[0]]), num(r[proj[1]]), num(r[proj[2]]));
    }
    for k in 0..n3.saturating_sub(1) {
        for i in 0..n1 {
            for j in 0..n2.saturating_sub(1) {
                let _ =
                    writeln!(s, "f {} {} {} {}", id(i, j, k), id(i, j + 1, k), id(i, j + 1, k + 1), id(i, j, k + 1));
            }
        }
        for j in 0..n2 {
            for i in 0..n1.saturating_sub(1) {
                let _ =
                    writeln!(s, "f {} {} {} {}", id(i, j, k), id(i + 1, j, k), id(i + 1, j, k + 1), id(i, j, k + 1));
            }
        }
    }
    s
}

fn cmd_mesh(a: &MeshArgs, out: &mut dyn Write) -> CliResult<()> {
    let start = Instant::now();
    let proj = parse_projection(&a.coords)?;
    let s = sample_family(&a.family, &a.grid)?;
    let text = obj_text(&s.axes, &s.values, proj, &format!("slcalib mesh {}", s.spec.name()));
    write_file(&a.out, &text)?;
    let mut m = sampled_manifest("mesh", &s);
    m.parameters.insert("coords".into(), a.coords.clone());
    if a.timing {
        m.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    m.write(&manifest_path(&a.out, &a.manifest))?;
    writeln!(out, "wrote {} vertices to {}", s.values.len(), a.out.display()).map_err(io)
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.cmd {
        Command::FamilyEval(a) => cmd_family_eval(a, out),
        Command::Evolve(a) => cmd_evolve(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Classify(a) => cmd_classify(a, out),
        Command::Normalize(a) => cmd_normalize(a, out),
        Command::Periodicity(a) => cmd_periodicity(a, out),
        Command::Mesh(a) => cmd_mesh(a, out),
    }
}

fn thread_count() -> CliResult<Option<usize>> {
    match std::env::var("SLCALIB_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(_) => Err(bad("SLCALIB_THREADS is not valid unicode")),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(bad(format!("SLCALIB_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_BAD_INPUT,
            };
        }
    };
    let result = thread_count().and_then(|n| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = n {
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| CliError::Io(e.to_string()))?;
        let mut buf = Vec::new();
        let r = pool.install(|| dispatch(&cli, &mut buf));
        out.write_all(&buf).map_err(io)?;
        r
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
