//! Batch front end for the `fraisse` library: reads structure documents,
//! runs one library operation and writes the result document.
//!
//! Exit status is 0 on success, 1 when the operation reports a domain error
//! and 2 on malformed input or usage.

pub mod document;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fraisse::builder::{
    boolean_conditions, build_dense_orbit_approx, build_generic_approx, generic_schedule, replay, Budget, ConstructionTrace,
};
use fraisse::cap::{amalgamate_greatest, amalgamate_least, amalgamate_over_normal, jep_boolean, Amalgam, Extension};
use fraisse::chains::{decompose, ChainDecomposition};
use fraisse::checkers::boolean::{BooleanCofinal, BooleanDriver};
use fraisse::checkers::relational::{BoundedMetric, EquivalenceTwo, Graph, LinearOrder, RelationalDriver};
use fraisse::checkers::{check_cap, check_jep, check_wap, ClassDriver};
use fraisse::exec::Execution;
use fraisse::grid::{factor_grid_permutation, GridPermutation};
use fraisse::measured::{amalgamate_measured, jep_measured_systems, MeasuredSystem};
use fraisse::metric::{amalgamate_metric, check_metric_embedding, jep_metric_systems, union_isometry, MetricSystem, PartialMap};
use fraisse::refine::{normalize, Refinement};
use fraisse::shift::shift_independence;
use fraisse::trees::{extend_to_tree_automorphism, TreeIso};
use fraisse::{random, AlgebraEmbedding, PartialIsoSystem, SystemEmbedding};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use document::{Kind, VERSION};

#[derive(Parser)]
#[command(name = "fraisse", version, about = "Normal forms, amalgamation, class checks and generic approximations for partial automorphisms")]
struct Cli {
    /// Seed for randomly generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a partial automorphism of a finite Boolean algebra to normal form.
    Normalize(NormalizeArgs),
    /// Decompose a partial automorphism into chains or report why it is not normal.
    Decompose(InOut),
    /// Amalgamate two extensions of a base system.
    Amalgamate(AmalgamateArgs),
    /// Jointly embed two systems.
    Jep(JepArgs),
    /// Check a class property up to a size bound.
    CheckClass(CheckClassArgs),
    /// Build a finite approximation of a dense-orbit or generic automorphism.
    BuildGeneric(BuildArgs),
    /// Factor a grid permutation as row-preserving, column-preserving, row-preserving.
    FactorGrid(FactorGridArgs),
    /// Extend a subtree isomorphism to an automorphism of the bounded tree.
    TreeExtend(TreeExtendArgs),
    /// Certify independence of a window and its shift.
    ShiftIndependence(ShiftArgs),
}

#[derive(Args)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long = "in", required_unless_present = "random", conflicts_with = "random")]
    input: Option<PathBuf>,
    /// Normalize a random partial automorphism with this many atoms instead.
    #[arg(long, value_name = "ATOMS")]
    random: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the chain decomposition certifying normality.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Method {
    /// Chain construction over a normal base.
    #[default]
    Normal,
    /// Largest consistent set of product atoms.
    Greatest,
    /// Smallest consistent set of product atoms covering both sides.
    Least,
}

#[derive(Args)]
struct AmalgamateArgs {
    /// Base system; optional for metric systems, whose base is the shared point set.
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    /// Embedding of the base into the left system; defaults to the lineage map.
    #[arg(long)]
    left_embedding: Option<PathBuf>,
    /// Embedding of the base into the right system; defaults to the lineage map.
    #[arg(long)]
    right_embedding: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    method: Method,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JepArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A class of structures with a checker driver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassName {
    Equiv2,
    LinearOrder,
    Graph,
    Metric(u8),
    Boolean,
    BooleanWhole,
}

impl FromStr for ClassName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "equiv2" => ClassName::Equiv2,
            "linear-order" => ClassName::LinearOrder,
            "graph" => ClassName::Graph,
            "boolean" => ClassName::Boolean,
            "boolean-whole" => ClassName::BooleanWhole,
            _ => match s.strip_prefix("metric").map(str::parse::<u8>) {
                Some(Ok(k)) if k >= 1 => ClassName::Metric(k),
                _ => return Err(format!("unknown class {s}; expected equiv2, linear-order, graph, metric<k>, boolean or boolean-whole")),
            },
        })
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PropertyArg {
    Jep,
    Cjep,
    Wap,
    Cap,
}

#[derive(Args)]
struct CheckClassArgs {
    /// equiv2, linear-order, graph, metric<k>, boolean or boolean-whole.
    #[arg(long)]
    class: ClassName,
    #[arg(long, value_enum)]
    property: PropertyArg,
    /// Number of partial maps.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Largest structure size searched.
    #[arg(long, default_value_t = 3)]
    bound: usize,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
    /// For relational classes, take systems of automorphisms as the cofinal subclass.
    #[arg(long)]
    full_cofinal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Mode {
    /// Meet the dense set of each condition.
    Dense,
    /// Meet each refined condition and its scheduled local orbits.
    #[default]
    Generic,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum, default_value_t)]
    mode: Mode,
    /// boolean or metric<k>.
    #[arg(long, default_value = "boolean")]
    class: ClassName,
    /// Boolean: depth of the coordinate algebra. Metric: largest number of points.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Boolean: largest number of blocks of a condition.
    #[arg(long, default_value_t = 2)]
    max_blocks: usize,
    /// Extensions scheduled per condition in generic mode.
    #[arg(long, default_value_t = 1)]
    extensions: usize,
    /// Stage budget.
    #[arg(long, default_value_t = Budget::default().stages)]
    stages: usize,
    /// Size budget for a condition.
    #[arg(long, default_value_t = Budget::default().size)]
    size: usize,
    /// Trace file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replay a trace file instead of building.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["out", "mode"])]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct FactorGridArgs {
    #[arg(long, required_unless_present = "input")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "input")]
    m: Option<usize>,
    /// Images of the cells in row-major order, separated by commas or spaces.
    #[arg(long, required_unless_present = "input")]
    perm: Option<String>,
    #[arg(long = "in", conflicts_with_all = ["n", "m", "perm"])]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TreeExtendArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Branching and height of the bounded tree.
    #[arg(long)]
    m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShiftArgs {
    /// Window radius.
    #[arg(long)]
    k: usize,
    /// Truncation depth; defaults to 2(2k+1)+2.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// The payload of a `normal-refinement` document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalRefinement {
    pub source: PartialIsoSystem,
    pub refinement: Refinement,
}

#[derive(Debug)]
enum Failure {
    /// Unreadable or invalid input: exit 2.
    Input(String),
    /// The operation failed on valid input: exit 1.
    Domain(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Domain(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Domain(m) => m,
        }
    }
}

impl From<fraisse::Error> for Failure {
    fn from(e: fraisse::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs the command line `argv` (program name first) and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Normalize(a) => cmd_normalize(a, cli.seed),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Amalgamate(a) => cmd_amalgamate(a),
        Command::Jep(a) => cmd_jep(a),
        Command::CheckClass(a) => cmd_check_class(a),
        Command::BuildGeneric(a) => cmd_build(a),
        Command::FactorGrid(a) => cmd_factor_grid(a),
        Command::TreeExtend(a) => cmd_tree_extend(a),
        Command::ShiftIndependence(a) => cmd_shift(a),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load<T: DeserializeOwned>(path: &Path, kind: Kind) -> Result<T, Failure> {
    document::parse(&read(path)?, kind).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(kind: Kind, payload: &T, out: Option<&Path>) -> Outcome {
    let text = document::render(kind, payload).map_err(|e| Failure::Domain(format!("cannot encode result: {e}")))?;
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Domain(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_normalize(a: NormalizeArgs, seed: u64) -> Outcome {
    let source: PartialIsoSystem = match (&a.input, a.random) {
        (Some(p), _) => load(p, Kind::BooleanSystem)?,
        (None, Some(0)) => return Err(Failure::Input("--random needs at least one atom".into())),
        (None, Some(n)) => random::partial_iso(&mut ChaCha8Rng::seed_from_u64(seed), n),
        (None, None) => return Err(Failure::Input("no input".into())),
    };
    let (refinement, decomposition) = normalize(&source)?;
    emit(Kind::NormalRefinement, &NormalRefinement { source, refinement }, a.out.as_deref())?;
    if let Some(w) = &a.witness {
        emit::<ChainDecomposition>(Kind::ChainDecomposition, &decomposition, Some(w))?;
    }
    Ok(())
}

fn cmd_decompose(a: InOut) -> Outcome {
    let s: PartialIsoSystem = load(&a.input, Kind::BooleanSystem)?;
    emit(Kind::Normality, &decompose(&s)?, a.out.as_deref())
}

fn document_kind(path: &Path) -> Result<Kind, Failure> {
    document::kind_of(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_amalgamate(a: AmalgamateArgs) -> Outcome {
    let out = a.out.as_deref();
    let need_base = || a.base.as_deref().ok_or_else(|| Failure::Input("--base is required for this kind".into()));
    match document_kind(&a.left)? {
        Kind::BooleanSystem => {
            let s: PartialIsoSystem = load(need_base()?, Kind::BooleanSystem)?;
            let l: PartialIsoSystem = load(&a.left, Kind::BooleanSystem)?;
            let r: PartialIsoSystem = load(&a.right, Kind::BooleanSystem)?;
            let embedding = |p: &Option<PathBuf>, t: &PartialIsoSystem| -> Result<SystemEmbedding, Failure> {
                match p {
                    Some(p) => load(p, Kind::SystemEmbedding),
                    None => Ok(SystemEmbedding { base: AlgebraEmbedding::by_lineage(s.ambient(), t.ambient())? }),
                }
            };
            let (le, re) = (embedding(&a.left_embedding, &l)?, embedding(&a.right_embedding, &r)?);
            let (x, y) = (Extension::new(&l, &le), Extension::new(&r, &re));
            let none = || Failure::Domain("the two extensions have no amalgam".into());
            let am: Amalgam = match a.method {
                Method::Normal => amalgamate_over_normal(&s, x, y)?,
                Method::Greatest => amalgamate_greatest(&s, x, y)?.ok_or_else(none)?,
                Method::Least => amalgamate_least(&s, x, y)?.ok_or_else(none)?,
            };
            emit(Kind::BooleanAmalgam, &am, out)
        }
        Kind::MeasuredSystem => {
            let s: MeasuredSystem = load(need_base()?, Kind::MeasuredSystem)?;
            let l: MeasuredSystem = load(&a.left, Kind::MeasuredSystem)?;
            let r: MeasuredSystem = load(&a.right, Kind::MeasuredSystem)?;
            let embedding = |p: &Option<PathBuf>, t: &MeasuredSystem| -> Result<AlgebraEmbedding, Failure> {
                match p {
                    Some(p) => load(p, Kind::AlgebraEmbedding),
                    None => Ok(AlgebraEmbedding::by_lineage(s.system().ambient(), t.system().ambient())?),
                }
            };
            let (f, g) = (embedding(&a.left_embedding, &l)?, embedding(&a.right_embedding, &r)?);
            emit(Kind::MeasuredAmalgam, &amalgamate_measured(s.measure(), &f, l.measure(), &g, r.measure())?, out)
        }
        Kind::MetricSystem => {
            let l: MetricSystem = load(&a.left, Kind::MetricSystem)?;
            let r: MetricSystem = load(&a.right, Kind::MetricSystem)?;
            if l.arity() != r.arity() {
                return Err(fraisse::Error::ArityMismatch { left: l.arity(), right: r.arity() }.into());
            }
            if let Some(p) = &a.base {
                let s: MetricSystem = load(p, Kind::MetricSystem)?;
                let shared: Vec<&String> = l.space().points().iter().filter(|x| r.space().index(x).is_some()).collect();
                if shared.len() != s.space().len() || shared.iter().any(|x| s.space().index(x).is_none()) {
                    return Err(Failure::Domain("the base is not the set of shared points".into()));
                }
                let id: PartialMap = s.space().points().iter().map(|x| (x.clone(), x.clone())).collect();
                check_metric_embedding(&s, &l, &id)?;
                check_metric_embedding(&s, &r, &id)?;
            }
            let glued = amalgamate_metric(l.space(), r.space())?;
            let isos = l
                .isos()
                .iter()
                .zip(r.isos())
                .map(|(phi, chi)| union_isometry(&glued, l.space(), r.space(), phi, chi))
                .collect::<fraisse::Result<Vec<_>>>()?;
            emit(Kind::MetricSystem, &MetricSystem::new(glued, isos)?, out)
        }
        k => Err(Failure::Input(format!("cannot amalgamate a {} document", k.tag()))),
    }
}

fn cmd_jep(a: JepArgs) -> Outcome {
    let out = a.out.as_deref();
    match document_kind(&a.left)? {
        Kind::BooleanSystem => {
            let l: PartialIsoSystem = load(&a.left, Kind::BooleanSystem)?;
            let r: PartialIsoSystem = load(&a.right, Kind::BooleanSystem)?;
            emit(Kind::BooleanAmalgam, &jep_boolean(&l, &r)?, out)
        }
        Kind::MeasuredSystem => {
            let l: MeasuredSystem = load(&a.left, Kind::MeasuredSystem)?;
            let r: MeasuredSystem = load(&a.right, Kind::MeasuredSystem)?;
            emit(Kind::MeasuredJoin, &jep_measured_systems(&l, &r)?, out)
        }
        Kind::MetricSystem => {
            let l: MetricSystem = load(&a.left, Kind::MetricSystem)?;
            let r: MetricSystem = load(&a.right, Kind::MetricSystem)?;
            emit(Kind::MetricJoin, &jep_metric_systems(&l, &r)?, out)
        }
        k => Err(Failure::Input(format!("cannot jointly embed a {} document", k.tag()))),
    }
}

fn check_with<D: ClassDriver>(d: &D, a: &CheckClassArgs) -> Outcome {
    let exec = if a.sequential { Execution::Sequential } else { Execution::default() };
    let report = match a.property {
        PropertyArg::Jep => check_jep(d, a.n, a.bound, None, exec)?,
        PropertyArg::Cjep => {
            let pinned = d
                .systems(a.n, 1)?
                .into_iter()
                .next()
                .ok_or_else(|| Failure::Domain(format!("{} has no one-point structure to pin", d.name())))?;
            check_jep(d, a.n, a.bound, Some(&pinned), exec)?
        }
        PropertyArg::Wap => check_wap(d, a.n, a.bound, exec)?,
        PropertyArg::Cap => check_cap(d, a.n, a.bound, exec)?,
    };
    emit(Kind::CheckReport, &report, a.out.as_deref())
}

fn relational<T: fraisse::checkers::relational::PairTheory>(theory: T, full: bool) -> RelationalDriver<T> {
    RelationalDriver { theory, full_cofinal: full }
}

fn cmd_check_class(a: CheckClassArgs) -> Outcome {
    let full = a.full_cofinal;
    match a.class {
        ClassName::Equiv2 => check_with(&relational(EquivalenceTwo, full), &a),
        ClassName::LinearOrder => check_with(&relational(LinearOrder, full), &a),
        ClassName::Graph => check_with(&relational(Graph, full), &a),
        ClassName::Metric(max) => check_with(&relational(BoundedMetric { max }, full), &a),
        ClassName::Boolean => check_with(&BooleanDriver { cofinal: BooleanCofinal::Normal }, &a),
        ClassName::BooleanWhole => check_with(&BooleanDriver { cofinal: BooleanCofinal::Whole }, &a),
    }
}

fn build_with<D: ClassDriver>(d: &D, a: &BuildArgs, conditions: Vec<D::System>) -> Outcome {
    let budget = Budget { stages: a.stages, size: a.size };
    let trace = match a.mode {
        Mode::Dense => build_dense_orbit_approx(d, d.empty(1), conditions, budget)?,
        Mode::Generic => build_generic_approx(d, d.empty(1), generic_schedule(d, conditions, a.extensions)?, budget)?,
    };
    replay(d, &trace).map_err(|e| Failure::Domain(format!("trace failed its own replay: {e}")))?;
    emit(Kind::ConstructionTrace, &trace, a.out.as_deref())
}

fn replay_with<D>(d: &D, path: &Path, payload: serde_json::Value) -> Outcome
where
    D: ClassDriver,
    D::System: DeserializeOwned,
    D::Embedding: DeserializeOwned,
{
    let trace: ConstructionTrace<D::System, D::Embedding> =
        serde_json::from_value(payload).map_err(|e| Failure::Input(format!("{}: invalid construction-trace payload: {e}", path.display())))?;
    replay(d, &trace).map_err(|e| Failure::Domain(format!("replay failed: {e}")))?;
    eprintln!(
        "replayed {} stages of a {} trace for {}{}",
        trace.stages.len(),
        serde_json::to_value(trace.builder).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
        trace.class,
        if trace.complete { "" } else { " (incomplete)" }
    );
    Ok(())
}

fn cmd_build(a: BuildArgs) -> Outcome {
    if let Some(path) = &a.replay {
        let payload: serde_json::Value = load(path, Kind::ConstructionTrace)?;
        let class = payload.get("class").and_then(|c| c.as_str()).unwrap_or_default();
        return match ClassName::from_str(class) {
            Ok(ClassName::Boolean) => replay_with(&BooleanDriver::default(), path, payload),
            Ok(ClassName::Metric(max)) => replay_with(&RelationalDriver::with_full_cofinal(BoundedMetric { max }), path, payload),
            _ => Err(Failure::Input(format!("{}: no builder for class {class:?}", path.display()))),
        };
    }
    match a.class {
        ClassName::Boolean => build_with(&BooleanDriver::default(), &a, boolean_conditions(a.depth, a.max_blocks)),
        ClassName::Metric(max) => {
            let d = RelationalDriver::with_full_cofinal(BoundedMetric { max });
            let conditions = d.systems(1, a.depth)?;
            build_with(&d, &a, conditions)
        }
        c => Err(Failure::Input(format!("no builder for class {c:?}; expected boolean or metric<k>"))),
    }
}

fn cmd_factor_grid(a: FactorGridArgs) -> Outcome {
    let rho = match &a.input {
        Some(p) => load(p, Kind::GridPermutation)?,
        None => {
            let (Some(n), Some(m), Some(perm)) = (a.n, a.m, &a.perm) else {
                return Err(Failure::Input("--n, --m and --perm are required without --in".into()));
            };
            let images = perm
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(str::parse::<usize>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Input(format!("--perm: {e}")))?;
            GridPermutation::new(n, m, images).map_err(|e| Failure::Input(format!("--perm: {e}")))?
        }
    };
    emit(Kind::GridFactorization, &factor_grid_permutation(&rho)?, a.out.as_deref())
}

fn cmd_tree_extend(a: TreeExtendArgs) -> Outcome {
    let phi: TreeIso = load(&a.input, Kind::TreeIso)?;
    emit(Kind::TreeAutomorphism, &extend_to_tree_automorphism(&phi, a.m)?, a.out.as_deref())
}

fn cmd_shift(a: ShiftArgs) -> Outcome {
    let depth = a.depth.unwrap_or(2 * (2 * a.k + 1) + 2);
    let cert = shift_independence(a.k, depth)?;
    cert.verify().map_err(|e| Failure::Domain(format!("certificate does not verify: {e}")))?;
    emit(Kind::ShiftCertificate, &cert, a.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_names_parse() {
        assert_eq!("metric3".parse::<ClassName>().unwrap(), ClassName::Metric(3));
        assert_eq!("boolean-whole".parse::<ClassName>().unwrap(), ClassName::BooleanWhole);
        assert!("metric0".parse::<ClassName>().is_err());
        assert!("groups".parse::<ClassName>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
