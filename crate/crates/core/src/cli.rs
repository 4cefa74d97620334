//! Command-line front end. `run` is the whole program minus process exit,
//! so it can be driven in-process by tests.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::{BigInt, One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::analysis::{
    check_slice, membership, verify_monotone, verify_quasi_affine, Limits, MembershipMode, MonotoneBudget,
    ToricCubeSpec, DEFAULT_MAX_FACES, DEFAULT_MAX_SUBSETS,
};
use crate::cone::{FourierMotzkin, DEFAULT_FM_GUARD};
use crate::model::{
    parse_constraints, parse_spec, ConeConstraint, ConstraintSystem, IndexSet, LogConstant, LogVector, Rational,
    Relation,
};
use crate::oracle::{self, SamplingConfig, DEFAULT_RESOLUTION};
use crate::report::{self, AnalysisReport, Section, Verdict};
use crate::strata::{stratify, CoverageCheck};
use crate::{rng, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "toricube", version, about = "Exact analysis of toric cubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Spec document {"d":..,"n":..,"rows":[[..]]}.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_SUBSETS)]
    max_subsets: u128,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_FACES)]
    max_faces: u128,
    /// Cap on intermediate inequalities during elimination.
    #[arg(long, global = true, default_value_t = DEFAULT_FM_GUARD)]
    fm_guard: usize,
    /// Sampling grid resolution per axis.
    #[arg(long, global = true, default_value_t = DEFAULT_RESOLUTION)]
    grid: usize,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Add wall-clock time to the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Open,
    Closure,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dimension of the open cube.
    Dim,
    /// Coordinate projection onto a subset of image coordinates.
    Project {
        /// 1-based indices, comma separated.
        #[arg(long)]
        indices: String,
    },
    /// Membership of a point given in log coordinates.
    Member {
        /// Comma-separated rationals; "-inf" marks a zero coordinate.
        #[arg(long, allow_hyphen_values = true)]
        zeta: String,
        #[arg(long, value_enum, default_value_t = Mode::Open)]
        mode: Mode,
    },
    /// Intersection of the open cube with a coordinate cone.
    Slice {
        /// Constraint document [{"j":..,"rel":..,"log_c":..}].
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// Extra constraint "J<C", "J=C" or "J>C" with a decimal constant
        /// C in [0,1]; log C is rounded to a rational within 1e-12.
        #[arg(long = "cut", allow_hyphen_values = true)]
        cuts: Vec<String>,
    },
    /// Injectivity versus full image dimension for every coordinate subset.
    QuasiAffine,
    /// Face images, overlaps and the repaired partition.
    Strata,
    /// Strata plus the closure poset and its cell-complex checks.
    CwCheck,
    /// Everything: quasi-affinity, slices, strata, cell checks, oracle.
    Verify,
    /// Sampling cross-checks only.
    Oracle {
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dim => "dim",
            Command::Project { .. } => "project",
            Command::Member { .. } => "member",
            Command::Slice { .. } => "slice",
            Command::QuasiAffine => "quasi-affine",
            Command::Strata => "strata",
            Command::CwCheck => "cw-check",
            Command::Verify => "verify",
            Command::Oracle { .. } => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAP: i32 = 3;

fn failure(code: i32, message: impl std::fmt::Display) -> Outcome {
    Outcome {
        code,
        stdout: String::new(),
        stderr: format!("error: {message}\n"),
    }
}

fn error_code(e: &Error) -> i32 {
    if e.is_resource_limit() {
        EXIT_CAP
    } else {
        EXIT_INPUT
    }
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let first = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
                failure(EXIT_INPUT, first)
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: rendered,
                    stderr: String::new(),
                }
            };
        }
    };
    let started = Instant::now();
    let result = match cli.common.threads {
        Some(0) => return failure(EXIT_INPUT, "--threads must be at least 1"),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => return failure(EXIT_INPUT, e),
        },
        None => execute(&cli),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(e) => return failure(error_code(&e), e),
    };
    if cli.common.timing {
        report.wall_time_ms = Some(started.elapsed().as_millis());
    }
    let code = if report.overall() == Verdict::Fail {
        EXIT_FAIL
    } else {
        EXIT_OK
    };
    let body = match cli.common.format {
        Format::Json => report.to_canonical_string(),
        Format::Text => {
            let color = cli.common.output.is_none()
                && std::env::var_os("NO_COLOR").is_none()
                && std::io::stdout().is_terminal();
            report::render_text(&report.to_json(), color)
        }
    };
    match &cli.common.output {
        Some(path) => match std::fs::write(path, body) {
            Ok(()) => Outcome {
                code,
                stdout: String::new(),
                stderr: String::new(),
            },
            Err(e) => failure(EXIT_INPUT, format!("cannot write {}: {e}", path.display())),
        },
        None => Outcome {
            code,
            stdout: body,
            stderr: String::new(),
        },
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))
}

fn load_spec(common: &Common) -> Result<ToricCubeSpec> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| Error::Precondition("--input is required".into()))?;
    Ok(ToricCubeSpec::new(parse_spec(&read(path)?)?))
}

fn limits(common: &Common) -> Limits {
    Limits {
        max_subsets: common.max_subsets,
        max_faces: common.max_faces,
        engine: FourierMotzkin::new(common.fm_guard),
    }
}

fn sampling(common: &Common) -> Result<SamplingConfig> {
    if common.grid < 2 {
        return Err(Error::Precondition("--grid must be at least 2".into()));
    }
    Ok(SamplingConfig {
        resolution: common.grid,
        ..SamplingConfig::default()
    })
}

fn parameters(common: &Common) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("seed".into(), json!(common.seed));
    m.insert("max_subsets".into(), Value::String(common.max_subsets.to_string()));
    m.insert("max_faces".into(), Value::String(common.max_faces.to_string()));
    m.insert("fm_guard".into(), json!(common.fm_guard));
    m.insert("grid".into(), json!(common.grid));
    m
}

/// First continued-fraction convergent of `x` within `tol`.
fn rational_near(x: f64, tol: f64) -> Rational {
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let approx = Rational::new(p1.clone(), q1.clone());
        if (crate::model::rational_to_f64(&approx) - x).abs() <= tol || rest == a {
            return approx;
        }
        rest = 1.0 / (rest - a);
    }
    Rational::new(p1, q1)
}

/// `J<C`, `J=C` or `J>C` with decimal `C in [0,1]`.
fn parse_cut(text: &str, n: usize) -> Result<ConeConstraint> {
    let bad = || Error::Precondition(format!("--cut {text:?}: expected J<C, J=C or J>C with C in [0,1]"));
    let pos = text.find(['<', '=', '>']).ok_or_else(bad)?;
    let j: usize = text[..pos].trim().parse().map_err(|_| bad())?;
    let relation = Relation::from_symbol(&text[pos..pos + 1]).ok_or_else(bad)?;
    let c: f64 = text[pos + 1..].trim().parse().map_err(|_| bad())?;
    if !(0.0..=1.0).contains(&c) {
        return Err(bad());
    }
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let log_c = if c == 0.0 {
        LogConstant::Bottom
    } else {
        let q = rational_near(c.ln(), 1e-12);
        LogConstant::Finite(if q.is_positive() { Rational::zero() } else { q })
    };
    Ok(ConeConstraint {
        coord: j - 1,
        relation,
        log_c,
    })
}

fn execute(cli: &Cli) -> Result<AnalysisReport> {
    let common = &cli.common;
    let spec = load_spec(common)?;
    let limits = limits(common);
    let mut params = parameters(common);
    let command = cli.command.name();
    let mut sections: Vec<Section> = Vec::new();
    match &cli.command {
        Command::Dim => sections.push(report::dimension_section(spec.dimension(), spec.d(), spec.n())),
        Command::Project { indices } => {
            let subset = parse_indices(indices, spec.n())?;
            params.insert("indices".into(), report::index_set(&subset));
            let projected = spec.project(&subset)?;
            sections.push(report::projection_section(
                &subset,
                projected.matrix(),
                spec.is_injective_projection(&subset)?,
                spec.image_dim(&subset)?,
                spec.dimension(),
            ));
        }
        Command::Member { zeta, mode } => {
            let zeta: LogVector = zeta.parse()?;
            let mode = match mode {
                Mode::Open => MembershipMode::Open,
                Mode::Closure => MembershipMode::Closure,
            };
            params.insert("mode".into(), json!(if mode == MembershipMode::Open { "open" } else { "closure" }));
            let m = membership(&spec, &zeta, mode, &limits.engine)?;
            sections.push(report::membership_section(&zeta, mode, &m));
        }
        Command::Slice { constraints, cuts } => {
            let mut list = match constraints {
                Some(path) => parse_constraints(&read(path)?, spec.n())?.constraints().to_vec(),
                None => Vec::new(),
            };
            for cut in cuts {
                list.push(parse_cut(cut, spec.n())?);
            }
            let sys = ConstraintSystem::new(list)?;
            let cfg = sampling(common)?;
            let (report, verdict, passed, note) =
                check_slice(&spec, &sys, &cfg, rng::derive_seed(common.seed, &[1]), &limits.engine)?;
            let Some(report) = report else {
                return Err(Error::Precondition(note.unwrap_or_default()));
            };
            let verdict = verdict.expect("oracle runs whenever the exact slice does");
            sections.push(report::slice_section(&sys, &report, &verdict, passed, note.as_deref()));
        }
        Command::QuasiAffine => sections.push(report::quasi_affine_section(&verify_quasi_affine(&spec, &limits)?)),
        Command::Strata | Command::CwCheck => {
            let s = stratify(&spec, &limits, &coverage(common))?;
            sections.push(report::strata_section(&s));
            if matches!(cli.command, Command::CwCheck) {
                sections.push(report::cw_section(&s));
            }
        }
        Command::Verify => {
            let budget = MonotoneBudget {
                sampling: sampling(common)?,
                ..MonotoneBudget::default()
            };
            let monotone = verify_monotone(&spec, &budget, common.seed, &limits)?;
            sections.push(report::quasi_affine_section(&monotone.quasi_affine));
            sections.push(report::slices_section(&monotone));
            let s = stratify(&spec, &limits, &coverage(common))?;
            sections.push(report::strata_section(&s));
            sections.push(report::cw_section(&s));
            sections.push(oracle_section(&spec, &limits, DEFAULT_ORACLE_TRIALS, common.seed)?);
        }
        Command::Oracle { trials } => {
            params.insert("trials".into(), json!(trials));
            sections.push(oracle_section(&spec, &limits, *trials, common.seed)?);
        }
    }
    let mut report = AnalysisReport::new(command, Some(spec.matrix().clone()), params);
    for s in sections {
        report.push(s);
    }
    Ok(report)
}

const DEFAULT_ORACLE_TRIALS: usize = 200;
/// Injective subsets audited for the graph property, at most.
const GRAPH_SUBSETS: usize = 64;
const GRAPH_TRIALS: usize = 10;
const LOCAL_POINTS: usize = 5;
const LOCAL_RADIUS: f64 = 1e-5;

fn coverage(common: &Common) -> CoverageCheck {
    CoverageCheck {
        seed: rng::derive_seed(common.seed, &[2]),
        ..CoverageCheck::default()
    }
}

fn parse_indices(text: &str, n: usize) -> Result<IndexSet> {
    let parts: Vec<usize> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Precondition(format!("--indices: {s:?} is not a positive integer")))
        })
        .collect::<Result<_>>()?;
    IndexSet::from_one_based(&parts, n)
}

fn oracle_section(spec: &ToricCubeSpec, limits: &Limits, trials: usize, seed: u64) -> Result<Section> {
    let engine = &limits.engine;
    let members = oracle::check_constructed_members(spec, trials, rng::derive_seed(seed, &[10]), engine)?;
    let convexity = oracle::check_log_convexity(spec, trials, rng::derive_seed(seed, &[11]), engine)?;

    let points = oracle::interior_points(spec.d(), LOCAL_POINTS, rng::derive_seed(seed, &[12]));
    let mut estimates = Vec::new();
    for (k, z0) in points.iter().enumerate() {
        let count = 4 * (spec.d() + 1);
        estimates.push(oracle::estimate_local_dimension(
            spec,
            z0,
            LOCAL_RADIUS,
            count,
            rng::derive_seed(seed, &[13, k as u64]),
        )?);
    }
    let mismatches = estimates.iter().filter(|&&e| e != spec.dimension()).count();

    let mut graph_violations = 0;
    let mut audited = Vec::new();
    if (spec.n() as u32) < 64 && 1u128 << spec.n() <= limits.max_subsets {
        for subset in IndexSet::all_subsets(spec.n()) {
            if audited.len() == GRAPH_SUBSETS {
                break;
            }
            if spec.is_injective_projection(&subset)? {
                let s = rng::derive_seed(seed, &[14, audited.len() as u64]);
                graph_violations += oracle::check_graph_property(spec, &subset, GRAPH_TRIALS, s)?;
                audited.push(report::index_set(&subset));
            }
        }
    }
    let ok = members == 0 && convexity == 0 && mismatches == 0 && graph_violations == 0;
    Ok(Section::new(
        "oracle",
        if ok { Verdict::Pass } else { Verdict::Fail },
        json!({
            "constructed_members": { "trials": trials, "failures": members },
            "log_convexity": { "trials": trials, "violations": convexity },
            "local_dimension": {
                "expected": spec.dimension(),
                "estimates": estimates,
                "points": points.len(),
                "mismatches": mismatches,
                "cutoff": oracle::SINGULAR_VALUE_CUTOFF,
            },
            "graph_property": {
                "subsets": audited.len(),
                "trials_per_subset": GRAPH_TRIALS,
                "violations": graph_violations,
            },
        }),
    ))
}
