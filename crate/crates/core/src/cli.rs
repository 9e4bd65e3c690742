//! Command-line front end. `run` returns the exit code and the text to print,
//! so every command can be driven from tests without a subprocess.
//!
//! Exit codes: 0 ok / equivalent, 1 property failure / not equivalent,
//! 2 parse, validation or domain error, 3 indeterminate within tolerance.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::classifier::{self, EquivalenceVerdict};
use crate::dual::{self, CnBound, DualReport};
use crate::error::{Error, Result};
use crate::io::{self, WeightFile, WeightRule};
use crate::model::{self, CanonicalInvariant, SplitStrategy};
use crate::operator::{self, PropertyReport, ShiftSpec, SpectralData};
use crate::tree::{self, BranchingDegrees, TreeFile, TreeSkeleton};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "twoiso", version, about = "2-isometric weighted shifts on rooted directed trees")]
pub struct Cli {
    /// Truncation depth (number of generations kept).
    #[arg(long, global = true, default_value_t = 10)]
    pub depth: usize,
    /// Tolerance applied to every numerical check.
    #[arg(long, global = true, default_value_t = operator::DEFAULT_TOL)]
    pub tol: f64,
    /// Seed for random weight splits; selects the uwrem-random rule.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// ‖S e_root‖ used to generate weights.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generations, branching degrees and canonical form of a tree file.
    TreeInfo {
        tree: PathBuf,
        /// Number of generations to list.
        #[arg(long, default_value_t = 6)]
        generations: usize,
    },
    /// Generate 2-isometric weights on a tree (needs --x; --seed for random splits).
    Build { tree: PathBuf },
    /// Verify 2-isometry, (hypo+) and the kernel condition.
    Check {
        tree: PathBuf,
        /// Weight file; otherwise weights are generated from --x.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Canonical invariant (x, j) of a tree shift, or a tree realizing a given invariant.
    Invariant {
        tree: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Invariant file to realize as a tree with weights.
        #[arg(long, conflicts_with_all = ["tree", "weights"])]
        synthesize: Option<PathBuf>,
    },
    /// Decide unitary equivalence of two tree shifts (or, with --spectral, two diagonal operator shifts).
    Equiv {
        a: PathBuf,
        b: PathBuf,
        /// x for the second tree (defaults to --x).
        #[arg(long, allow_negative_numbers = true)]
        x_b: Option<f64>,
        #[arg(long)]
        weights_a: Option<PathBuf>,
        #[arg(long)]
        weights_b: Option<PathBuf>,
        /// Treat both inputs as spectral data files.
        #[arg(long)]
        spectral: bool,
    },
    /// Cauchy dual analysis: limits of T′*ⁿT′ⁿ, C-classes and the constants cₙ.
    Dual {
        #[command(flatten)]
        target: DualTarget,
        /// Tree weights file (with a tree target).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Power used for the iterative limit (defaults to depth − 1).
        #[arg(long)]
        iterations: Option<usize>,
        /// Largest n for the cₙ table.
        #[arg(long, default_value_t = 6)]
        max_n: usize,
    },
    /// Run a built-in worked example end to end.
    Demo {
        name: DemoName,
        #[arg(long, default_value_t = 3)]
        eta: usize,
        #[arg(long, default_value_t = 2)]
        kappa: usize,
    },
}

#[derive(Debug, clap::Args)]
#[group(required = true, multiple = false)]
pub struct DualTarget {
    /// Tree file (weights from --weights or --x).
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Spectral data file of a diagonal operator valued shift.
    #[arg(long)]
    pub spectral: Option<PathBuf>,
    /// The scalar shift S_[x] with x from --x.
    #[arg(long)]
    pub scalar: bool,
    /// Brownian shift with the given σ.
    #[arg(long)]
    pub brownian: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    #[value(name = "example-2+3")]
    Example23,
    EtaKappa,
    Brownian,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Self { code, stdout, stderr: String::new() }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Precondition(_) | Error::NotEquivalent(_) => EXIT_FAILURE,
        _ => EXIT_INVALID,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeInfo {
    pub root: String,
    pub skeleton_depth: usize,
    pub skeleton_vertices: usize,
    pub generation_sizes: Vec<usize>,
    pub generations: Vec<Vec<String>>,
    pub branching_degrees: Vec<(usize, usize)>,
    pub canonical_form: String,
}

/// How the weights of a checked tree were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSource {
    pub x: Option<f64>,
    pub rule: Option<WeightRule>,
    pub seed: Option<u64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub weights: WeightSource,
    pub report: PropertyReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub invariant: CanonicalInvariant,
    pub tree: TreeFile,
    pub weights: WeightFile,
}

/// Either side of an equivalence question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EquivInput {
    Tree(CanonicalInvariant),
    Spectral(SpectralData),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivReport {
    pub verdict: EquivalenceVerdict,
    pub a: EquivInput,
    pub b: EquivInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCliReport {
    pub report: DualReport,
    pub cn: Vec<CnBound>,
    /// `None` for isometries, where cₙ = 1.
    pub cn_limit: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_INVALID, stdout: String::new(), stderr: text }
            } else {
                Outcome::ok(EXIT_OK, text)
            };
        }
    };
    match execute(&cli) {
        Ok(o) => o,
        Err(e) => Outcome { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn emit<T: Serialize>(cli: &Cli, code: i32, value: &T) -> Result<Outcome> {
    if let Some(path) = &cli.out {
        io::write_json(path, value)?;
    }
    Ok(Outcome::ok(code, io::to_json(value)? + "\n"))
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", cli.tol)));
    }
    match &cli.command {
        Command::TreeInfo { tree, generations } => emit(cli, EXIT_OK, &tree_info(&io::load_tree(tree)?, *generations)),
        Command::Build { tree } => {
            let t = io::load_tree(tree)?;
            let (spec, src) = generated_spec(cli, &t, cli.x)?;
            emit(cli, EXIT_OK, &WeightFile::from_spec(&spec, src.rule, src.seed)?)
        }
        Command::Check { tree, weights } => {
            let r = run_check(cli, &io::load_tree(tree)?, weights.as_deref(), cli.x)?;
            emit(cli, if r.passed { EXIT_OK } else { EXIT_FAILURE }, &r)
        }
        Command::Invariant { tree, weights, synthesize } => {
            if let Some(path) = synthesize {
                let inv = io::load_invariant(path)?;
                let (t, spec) = model::synthesize_from_invariant(inv.x, &inv.j)?;
                let weights = WeightFile::from_spec(&spec, Some(WeightRule::UwremEqual), None)?;
                return emit(cli, EXIT_OK, &SynthesisReport { invariant: inv, tree: t.to_file(), weights });
            }
            let tree = tree.as_ref().ok_or_else(|| Error::Domain("give a tree file or --synthesize".into()))?;
            let inv = invariant_of(cli, &io::load_tree(tree)?, weights.as_deref(), cli.x)?;
            emit(cli, EXIT_OK, &inv)
        }
        Command::Equiv { a, b, x_b, weights_a, weights_b, spectral } => {
            let report = if *spectral {
                let (sa, sb) = (io::load_spectral(a)?, io::load_spectral(b)?);
                let verdict = classifier::equiv_diagonal_opshifts(&sa, &sb, cli.tol);
                EquivReport { verdict, a: EquivInput::Spectral(sa), b: EquivInput::Spectral(sb) }
            } else {
                let ia = invariant_of(cli, &io::load_tree(a)?, weights_a.as_deref(), cli.x)?;
                let ib = invariant_of(cli, &io::load_tree(b)?, weights_b.as_deref(), x_b.or(cli.x))?;
                let verdict = classifier::equiv_tree_shifts(&ia, &ib, cli.tol);
                EquivReport { verdict, a: EquivInput::Tree(ia), b: EquivInput::Tree(ib) }
            };
            let code = if report.verdict.is_indeterminate() {
                EXIT_INDETERMINATE
            } else if report.verdict.equivalent {
                EXIT_OK
            } else {
                EXIT_FAILURE
            };
            emit(cli, code, &report)
        }
        Command::Dual { target, weights, iterations, max_n } => {
            let spec = dual_spec(cli, target, weights.as_deref())?;
            emit(cli, EXIT_OK, &run_dual(&spec, cli.depth, *iterations, *max_n)?)
        }
        Command::Demo { name, eta, kappa } => {
            let (ok, text) = run_demo(*name, cli.x, *eta, *kappa)?;
            Ok(Outcome::ok(if ok { EXIT_OK } else { EXIT_FAILURE }, text))
        }
    }
}

pub fn tree_info(t: &TreeSkeleton, generations: usize) -> TreeInfo {
    let gens: Vec<Vec<String>> = (0..generations).map(|n| t.generation(n)).collect();
    TreeInfo {
        root: t.root().to_string(),
        skeleton_depth: t.skeleton_depth(),
        skeleton_vertices: t.skeleton_len(),
        generation_sizes: gens.iter().map(Vec::len).collect(),
        generations: gens,
        branching_degrees: t.all_branching_degrees().sparse(),
        canonical_form: t.canonical_form(),
    }
}

fn generated_spec(cli: &Cli, t: &TreeSkeleton, x: Option<f64>) -> Result<(ShiftSpec, WeightSource)> {
    let x = x.ok_or_else(|| Error::Domain("--x is required to generate weights".into()))?;
    let (strategy, rule) = match cli.seed {
        Some(seed) => (SplitStrategy::Random { seed }, WeightRule::UwremRandom),
        None => (SplitStrategy::Equal, WeightRule::UwremEqual),
    };
    let spec = model::build_weights_uwrem(t, x, strategy)?;
    Ok((spec, WeightSource { x: Some(x), rule: Some(rule), seed: cli.seed, file: None }))
}

fn tree_spec(cli: &Cli, t: &TreeSkeleton, weights: Option<&Path>, x: Option<f64>) -> Result<(ShiftSpec, WeightSource)> {
    match weights {
        Some(path) => {
            let f = io::load_weights(path)?;
            let spec = f.to_spec(t)?;
            Ok((spec, WeightSource { x: f.x, rule: f.rule, seed: f.seed, file: Some(path.to_path_buf()) }))
        }
        None => generated_spec(cli, t, x),
    }
}

/// Property report of a tree shift; `passed` iff 2-isometry, (hypo+) and the kernel condition hold.
pub fn run_check(cli: &Cli, t: &TreeSkeleton, weights: Option<&Path>, x: Option<f64>) -> Result<CheckReport> {
    if cli.depth < 4 {
        return Err(Error::DepthTooSmall { depth: cli.depth, reason: "check needs depth at least 4".into() });
    }
    let (spec, source) = tree_spec(cli, t, weights, x)?;
    let report = operator::property_report(&spec, cli.depth, cli.tol)?;
    Ok(CheckReport { weights: source, passed: report.all_hold(), report })
}

fn invariant_of(cli: &Cli, t: &TreeSkeleton, weights: Option<&Path>, x: Option<f64>) -> Result<CanonicalInvariant> {
    let (spec, _) = tree_spec(cli, t, weights, x)?;
    let depth = cli.depth.max(model::verification_depth(&spec));
    model::decompose_with(&spec, depth, cli.tol)
}

fn dual_spec(cli: &Cli, target: &DualTarget, weights: Option<&Path>) -> Result<ShiftSpec> {
    if cli.depth < 4 {
        return Err(Error::DepthTooSmall { depth: cli.depth, reason: "dual needs depth at least 4".into() });
    }
    if let Some(path) = &target.tree {
        return Ok(tree_spec(cli, &io::load_tree(path)?, weights, cli.x)?.0);
    }
    if let Some(path) = &target.spectral {
        return model::spectral_to_opshift(&io::load_spectral(path)?);
    }
    if let Some(sigma) = target.brownian {
        return ShiftSpec::brownian(sigma);
    }
    ShiftSpec::scalar_xi(cli.x.ok_or_else(|| Error::Domain("--scalar needs --x".into()))?)
}

pub fn run_dual(spec: &ShiftSpec, depth: usize, iterations: Option<usize>, max_n: usize) -> Result<DualCliReport> {
    let iterations = iterations.unwrap_or(depth.saturating_sub(1)).max(1);
    let report = dual::classify_with(spec, depth, iterations, max_n)?;
    let cn = (1..=max_n.min(depth.saturating_sub(1)))
        .map(|n| dual::cn_bound(spec, n, depth))
        .collect::<Result<Vec<_>>>()?;
    let cn_limit = if report.norm_sq <= 1.0 + operator::DEFAULT_TOL { None } else { Some(dual::cn_limit(spec)?) };
    Ok(DualCliReport { report, cn, cn_limit })
}

struct Checklist {
    text: String,
    ok: bool,
}

impl Checklist {
    fn new() -> Self {
        Self { text: String::new(), ok: true }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn assert(&mut self, what: &str, cond: bool) {
        self.ok &= cond;
        let _ = writeln!(self.text, "[{}] {what}", if cond { "ok" } else { "FAILED" });
    }
}

fn fmt_j(j: &BranchingDegrees) -> String {
    let parts: Vec<String> = j.sparse().iter().map(|(k, v)| format!("j{k}={v}")).collect();
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(", ")
    }
}

/// Runs a worked example; returns whether every embedded assertion held and the report text.
pub fn run_demo(name: DemoName, x: Option<f64>, eta: usize, kappa: usize) -> Result<(bool, String)> {
    let x = x.unwrap_or(std::f64::consts::SQRT_2);
    let mut out = Checklist::new();
    match name {
        DemoName::Example23 => {
            let (t1, t2) = tree::example_pair_1_2();
            out.line(format!("tree 1: {}", t1.canonical_form()));
            out.line(format!("tree 2: {}", t2.canonical_form()));
            let s1 = model::build_weights_uwrem(&t1, x, SplitStrategy::Equal)?;
            let s2 = model::build_weights_uwrem(&t2, x, SplitStrategy::Random { seed: 7 })?;
            for (k, s) in [(1, &s1), (2, &s2)] {
                let r = operator::property_report(s, 10, operator::DEFAULT_TOL)?;
                out.line(format!(
                    "tree {k}: 2-isometry defect {:.3e}, kernel condition residual {:.3e}",
                    r.defect_2iso, r.kernel_condition.residual
                ));
                out.assert(&format!("tree {k} satisfies 2-isometry, (hypo+) and the kernel condition"), r.all_hold());
            }
            let (i1, i2) = (model::decompose(&s1)?, model::decompose(&s2)?);
            out.line(format!("invariant 1: x = {:.12}, {}", i1.x, fmt_j(&i1.j)));
            out.line(format!("invariant 2: x = {:.12}, {}", i2.x, fmt_j(&i2.j)));
            let verdict = classifier::equiv_tree_shifts(&i1, &i2, operator::DEFAULT_TOL);
            let iso = tree::graph_isomorphic(&t1, &t2);
            out.line(format!("equivalent: {}, graph-isomorphic: {}", verdict.equivalent, iso));
            out.assert("both invariants are (x, (1, 2, 0, ...))", i1.j.dense() == [1, 2] && i1.j == i2.j);
            out.assert("shifts are unitarily equivalent", verdict.equivalent);
            out.assert("trees are not isomorphic", !iso);
        }
        DemoName::EtaKappa => {
            let t = tree::make_eta_kappa(eta, kappa)?;
            let spec = model::build_weights_uwrem(&t, x, SplitStrategy::Equal)?;
            let depth = (kappa + 6).max(8);
            let r = operator::property_report(&spec, depth, operator::DEFAULT_TOL)?;
            out.line(format!("T_{{{eta},{kappa}}} at x = {x}: canonical form {}", t.canonical_form()));
            out.assert("2-isometry, (hypo+) and kernel condition", r.all_hold());
            let inv = model::decompose(&spec)?;
            let k = kappa + 1;
            out.line(format!("invariant: x = {:.12}, {}", inv.x, fmt_j(&inv.j)));
            out.line(format!("j_{k} = {}", inv.j.get(k)));
            out.assert(&format!("j_{k} = eta - 1 and no other branching"), inv.j.sparse() == vec![(k, eta - 1)]);
            out.assert("x recovered", (inv.x - x.max(1.0)).abs() <= 1e-12);
            let order = classifier::multicyclicity_order(&spec)?;
            out.line(format!("multicyclicity order: {order}"));
            out.assert("multicyclicity order = eta", order == eta);
        }
        DemoName::Brownian => {
            let spec = ShiftSpec::brownian(1.0)?;
            let r = operator::property_report(&spec, 10, operator::DEFAULT_TOL)?;
            out.line(format!("Brownian shift, sigma = 1: ||B||^2 = {:.12}", r.norm_sq));
            out.assert("2-isometry", r.is_2isometry);
            out.assert("quasi-Brownian", r.quasi_brownian.holds);
            out.assert("kernel condition fails", !r.kernel_condition.holds);
            let c1 = dual::cn_bound(&spec, 1, 40)?;
            out.line(format!("c1 = {}", c1.c_n));
            out.line(format!("min |B'f|^2 over unit f (depth 40) = {:.6}", c1.min_singular_sq));
            out.assert("c1 = 0.5", (c1.c_n - 0.5).abs() < 1e-15);
            let a = dual::asymptotic_closed_form(&spec, 10)?;
            let k = a.labels.iter().position(|l| l == "c").expect("scalar coordinate");
            out.line(format!("A scalar-entry -> {:.12} (1/3)", a.re[k][k]));
            out.assert("closed-form scalar entry is 1/3", (a.re[k][k] - 1.0 / 3.0).abs() < 1e-12);
            let it = dual::asymptotic_iterative(&spec, 50, 60)?;
            let k = it.labels.iter().position(|l| l == "c").expect("scalar coordinate");
            out.line(format!("iterate n = 50: {:.6}", it.re[k][k]));
            out.assert("iterate within 2e-2 of 1/3", (it.re[k][k] - 1.0 / 3.0).abs() < 2e-2);
            let lim = dual::cn_limit(&spec)?;
            out.line(format!("lim cn = {lim:.12}"));
            out.assert("lim cn = 1/3", (lim - 1.0 / 3.0).abs() < 1e-12);
        }
    }
    Ok((out.ok, out.text))
}
