use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ultragh::correspondence::CorrespondenceError;
use ultragh::engine::Caps;
use ultragh::{
    classical_gh, diameter_trend, dhat_gh, find_split, full_spectrum, metric_ratio, random_ultrametric,
    ramified_ball_approx, spectra_lower_bound, sutb_check, truncated_scaled_ball, truncated_unramified_ring, ums,
    zq_delta, Budget, BudgetExceeded, ConvergenceError, Correspondence, EngineConfig, EngineError, ExactValue,
    GeneratorError, IsometryError, Method, MethodSelection, MetricRatio, UltrametricSpace, UmsError,
};

use crate::output::{self, Lines};

#[derive(Parser, Debug)]
#[command(name = "ultragh", version, about = "Exact Gromov-Hausdorff distances between finite ultrametric spaces")]
pub struct Cli {
    /// Print machine-readable JSON instead of `key: value` lines
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for random generation
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and validate a `.ums` file
    Validate { file: PathBuf },
    /// Generate an example space
    Gen {
        kind: GenKind,
        #[command(flatten)]
        params: GenArgs,
        /// Output file (standard output when omitted)
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Non-Archimedean Gromov-Hausdorff distance with a full report
    Dhat {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Node budget per search
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Classical Gromov-Hausdorff distance
    Dgh {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Ratio of the non-Archimedean to the classical distance
    Ratio {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Weight spectrum (distinct nonzero distances)
    Spectra { file: PathBuf },
    /// Weight-spectrum lower bound and diameter upper bound
    Lowerbound { a: PathBuf, b: PathBuf },
    /// Smallest eps-net (one point per open eps-ball)
    Net {
        file: PathBuf,
        #[arg(long)]
        eps: ExactValue,
    },
    /// Split a space into classes matching a target space
    Split {
        big: PathBuf,
        target: PathBuf,
        #[arg(long)]
        eps: ExactValue,
    },
    /// Strongness verdict and equilibrium table of a correspondence
    Chi {
        a: PathBuf,
        b: PathBuf,
        /// File with one `left_label right_label` pair per line
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Diameter trend of a sequence manifest, with optional splits
    Converge {
        manifest: PathBuf,
        /// Also look for a split of each term onto the target at this scale
        #[arg(long)]
        eps: Option<ExactValue>,
    },
    /// Uniform total boundedness check over a manifest's spaces
    Sutb {
        manifest: PathBuf,
        #[arg(long)]
        eps: ExactValue,
        #[arg(long)]
        max_net: usize,
        /// Allowed weights, comma separated (may be empty)
        #[arg(long, default_value = "")]
        pool: String,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum GenKind {
    /// Z/p^depth
    Zp,
    /// unramified ring of residue degree f, truncated at depth
    Ring,
    /// ball M^s truncated at depth (approximated when e > 1)
    Ball,
    /// Z/q^depth plus p - q extra points
    Zqdelta,
    /// random dendrogram space on n points
    Random,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long, default_value_t = 1)]
    e: u32,
    #[arg(long, default_value_t = 1)]
    f: u32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    s: i64,
    #[arg(long, default_value_t = 1)]
    depth: u32,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 32)]
    precision_bits: u32,
    /// Distance pool for `random`, comma separated
    #[arg(long, default_value = "1/4,1/2,1")]
    pool: String,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum MethodArg {
    /// every method admitted by the size caps
    Auto,
    Corr,
    Iso,
    Approx,
    /// all three methods regardless of size
    All,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<UmsError> for CliError {
    fn from(e: UmsError) -> Self {
        let code = if matches!(e, UmsError::Io { .. }) { 1 } else { 2 };
        CliError { code, message: e.to_string() }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::BudgetExceeded { .. } | EngineError::ClassicalBudgetExceeded { .. } => 3,
            EngineError::MethodDisagreement(_) | EngineError::InvariantViolation(_) => 4,
            EngineError::NoMethod => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<BudgetExceeded> for CliError {
    fn from(e: BudgetExceeded) -> Self {
        CliError { code: 3, message: e.to_string() }
    }
}

impl From<IsometryError> for CliError {
    fn from(e: IsometryError) -> Self {
        let code = if matches!(e, IsometryError::BudgetExceeded { .. }) { 3 } else { 2 };
        CliError { code, message: e.to_string() }
    }
}

impl From<ConvergenceError> for CliError {
    fn from(e: ConvergenceError) -> Self {
        match e {
            ConvergenceError::Engine { source, index } => {
                let inner = CliError::from(source);
                CliError { code: inner.code, message: format!("term {index}: {}", inner.message) }
            }
            ConvergenceError::Map { source, index } => {
                let inner = CliError::from(source);
                CliError { code: inner.code, message: format!("map {index}: {}", inner.message) }
            }
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<CorrespondenceError> for CliError {
    fn from(e: CorrespondenceError) -> Self {
        CliError::usage(e.to_string())
    }
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load(path: &Path) -> Result<UltrametricSpace, CliError> {
    Ok(ums::read_file(path)?)
}

fn budget(nodes: Option<u64>) -> Budget {
    nodes.map_or(Budget::DEFAULT, Budget::nodes)
}

fn parse_pool(text: &str) -> Result<Vec<ExactValue>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<ExactValue>().map_err(|e| CliError::usage(e.to_string())))
        .collect()
}

struct Manifest {
    target: Option<UltrametricSpace>,
    spaces: Vec<UltrametricSpace>,
}

/// One `.ums` path per line, optionally preceded by a `target <path>` line.
/// Relative paths are resolved against the manifest's directory; blank
/// lines and `#` comments are skipped.
fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError { code: 1, message: format!("{}: {e}", path.display()) })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut manifest = Manifest { target: None, spaces: Vec::new() };
    let mut first = true;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("target ") {
            if !first {
                return Err(CliError::usage(format!("{}:{}: `target` must come first", path.display(), no + 1)));
            }
            manifest.target = Some(load(&base.join(rest.trim()))?);
        } else {
            manifest.spaces.push(load(&base.join(line))?);
        }
        first = false;
    }
    Ok(manifest)
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    let json = cli.json;
    let mut out = Lines::default();
    match &cli.command {
        Command::Validate { file } => {
            let space = load(file)?;
            if json {
                return Ok(to_json(&json!({
                    "valid": true,
                    "points": space.len(),
                    "diameter": space.diameter(),
                    "inexact": space.is_inexact(),
                })));
            }
            Ok(out
                .kv("valid", true)
                .kv("points", space.len())
                .kv("diameter", space.diameter())
                .kv("inexact", space.is_inexact())
                .finish())
        }
        Command::Gen { kind, params, output } => {
            let space = generate(*kind, params, cli.seed)?;
            match output {
                None => Ok(ums::to_string(&space)),
                Some(path) => {
                    ums::write_file(path, &space)?;
                    if json {
                        return Ok(to_json(&json!({ "path": path, "points": space.len() })));
                    }
                    Ok(out.kv("wrote", path.display()).kv("points", space.len()).finish())
                }
            }
        }
        Command::Dhat { a, b, method, budget: nodes } => {
            let (x, y) = (load(a)?, load(b)?);
            let methods = match method {
                MethodArg::Auto => MethodSelection::Auto,
                MethodArg::Corr => MethodSelection::Only(vec![Method::StrongCorrespondence]),
                MethodArg::Iso => MethodSelection::Only(vec![Method::IsometryScan]),
                MethodArg::Approx => MethodSelection::Only(vec![Method::ApproximationScan]),
                MethodArg::All => MethodSelection::Only(Method::ALL.to_vec()),
            };
            let config = EngineConfig { methods, budget: budget(*nodes), caps: Caps::default() };
            let r = dhat_gh(&x, &y, &config)?;
            if json {
                return Ok(to_json(&r));
            }
            out.kv("dhat", &r.dhat).kv("dhat_attained", output::opt(&r.dhat_attained));
            let methods: Vec<String> = r.methods.iter().map(|m| format!("{}={}", m.method, m.value)).collect();
            out.kv("methods", methods.join(" "))
                .kv("classical_dgh", output::opt(&r.classical_dgh))
                .kv("classical_bounds", output::values(&r.classical_bounds))
                .kv("ratio", output::opt(&r.ratio))
                .kv("isometric", r.isometric)
                .kv("spectra_lower_bound", &r.spectra_lower_bound)
                .kv("spectra_gap", &r.spectra_gap)
                .kv("diameter_upper_bound", &r.diameter_upper_bound)
                .kv("agreement", r.agreement)
                .kv("inexact", r.inexact);
            if let Some(pairs) = &r.witnesses.strong_correspondence {
                out.kv("witness.strong_correspondence", output::pairs(&x, &y, pairs));
            }
            if let (Some(images), Some(eps)) = (&r.witnesses.isometry, &r.witnesses.isometry_epsilon) {
                let f: Vec<usize> = images.clone();
                out.kv("witness.isometry", format!("{} at eps {eps}", output::labels(&y, &f)));
            }
            if let Some(w) = &r.witnesses.approximation {
                out.kv(
                    "witness.approximation",
                    format!("[{}] ~ [{}] at eps {}", output::labels(&x, &w.xs), output::labels(&y, &w.ys), w.epsilon),
                );
            }
            if let Some(pairs) = &r.witnesses.classical {
                out.kv("witness.classical", output::pairs(&x, &y, pairs));
            }
            Ok(out.finish())
        }
        Command::Dgh { a, b, budget: nodes } => {
            let (x, y) = (load(a)?, load(b)?);
            let c = classical_gh(&x, &y, budget(*nodes))?;
            if json {
                return Ok(to_json(&json!({ "classical_dgh": c.value, "witness": c.pairs })));
            }
            Ok(out.kv("classical_dgh", &c.value).kv("witness", output::pairs(&x, &y, &c.pairs)).finish())
        }
        Command::Ratio { a, b, budget: nodes } => {
            let (x, y) = (load(a)?, load(b)?);
            let config = EngineConfig { budget: budget(*nodes), ..EngineConfig::default() };
            let ratio = metric_ratio(&x, &y, &config)?;
            let (value, isometric) = match &ratio {
                MetricRatio::Value(r) => (Some(r.clone()), false),
                MetricRatio::Isometric => (None, true),
            };
            if json {
                return Ok(to_json(&json!({ "ratio": value, "isometric": isometric })));
            }
            Ok(out.kv("ratio", output::opt(&value)).kv("isometric", isometric).finish())
        }
        Command::Spectra { file } => {
            let space = load(file)?;
            let s = full_spectrum(&space);
            if json {
                return Ok(to_json(&s.values()));
            }
            Ok(format!("{}\n", output::values(s.values())))
        }
        Command::Lowerbound { a, b } => {
            let (x, y) = (load(a)?, load(b)?);
            let lower = spectra_lower_bound(&x, &y);
            let upper = x.diameter().max(y.diameter());
            if json {
                return Ok(to_json(&json!({ "spectra_lower_bound": lower, "diameter_upper_bound": upper })));
            }
            Ok(out.kv("spectra_lower_bound", lower).kv("diameter_upper_bound", upper).finish())
        }
        Command::Net { file, eps } => {
            if !eps.is_positive() {
                return Err(CliError::usage("eps must be positive"));
            }
            let space = load(file)?;
            let net = space.ball_representatives(eps);
            if json {
                let labels: Vec<&String> = net.iter().map(|&i| &space.labels()[i]).collect();
                return Ok(to_json(&json!({ "size": net.len(), "net": net, "labels": labels })));
            }
            Ok(out.kv("size", net.len()).kv("net", output::labels(&space, &net)).finish())
        }
        Command::Split { big, target, eps } => {
            let (x, t) = (load(big)?, load(target)?);
            let split = find_split(&x, &t, eps)?;
            if json {
                return Ok(to_json(&json!({ "found": split.is_some(), "split": split })));
            }
            out.kv("found", split.is_some());
            if let Some(s) = split {
                for (i, class) in s.classes.iter().enumerate() {
                    out.kv(&format!("class {}", t.labels()[i]), output::labels(&x, class));
                }
                out.kv("class_diameters", output::values(&s.class_diameters));
                for (i, row) in s.pairwise_class_distances.iter().enumerate() {
                    out.kv(&format!("distances {}", t.labels()[i]), output::values(row));
                }
            }
            Ok(out.finish())
        }
        Command::Chi { a, b, pairs } => {
            let (x, y) = (load(a)?, load(b)?);
            let related = read_pairs(pairs, &x, &y)?;
            let c = Correspondence::new(&x, &y, related)?;
            let verdict = c.strongness();
            let table = if verdict.is_strong { Some(c.equilibrium_table()?) } else { None };
            if json {
                return Ok(to_json(&json!({ "strongness": verdict, "equilibrium": table })));
            }
            out.kv("strong", verdict.is_strong).kv("distortion", &verdict.distortion);
            if let Some(ce) = &verdict.counterexample {
                out.kv(
                    "counterexample",
                    format!(
                        "({},{}) outside, d_X({},{}) = {}, d_Y({},{}) = {}",
                        x.labels()[ce.outside.0],
                        y.labels()[ce.outside.1],
                        x.labels()[ce.outside.0],
                        x.labels()[ce.left_partner],
                        ce.d_left,
                        y.labels()[ce.outside.1],
                        y.labels()[ce.right_partner],
                        ce.d_right
                    ),
                );
            }
            if let Some(t) = table {
                for e in &t.entries {
                    out.kv(&format!("chi({},{})", x.labels()[e.x], y.labels()[e.y]), &e.chi);
                }
                out.kv("inf", output::opt(&t.inf)).kv("sup", output::opt(&t.sup)).kv("min_diameter", &t.min_diameter);
            }
            Ok(out.finish())
        }
        Command::Converge { manifest, eps } => {
            let m = load_manifest(manifest)?;
            let trend = diameter_trend(&m.spaces, m.target.as_ref(), &EngineConfig::default())?;
            let splits = match (eps, &m.target) {
                (Some(eps), Some(t)) => Some(
                    m.spaces
                        .iter()
                        .map(|s| find_split(s, t, eps))
                        .collect::<Result<Vec<_>, _>>()?,
                ),
                (Some(_), None) => return Err(CliError::usage("--eps needs a `target` line in the manifest")),
                _ => None,
            };
            if json {
                return Ok(to_json(&json!({ "trend": trend, "splits": splits })));
            }
            out.kv("diameters", output::values(&trend.diameters))
                .kv("target_diameter", output::opt(&trend.target_diameter))
                .kv("classification", format!("{:?}", trend.classification));
            if m.target.is_some() {
                let d: Vec<String> = trend.dhat_to_target.iter().map(output::opt).collect();
                out.kv("dhat_to_target", d.join(" "))
                    .kv("equal_diameter_from", output::opt(&trend.equal_diameter_from))
                    .kv("violations", format!("{:?}", trend.violations));
            }
            if let Some(splits) = splits {
                let found: Vec<String> = splits.iter().map(|s| s.is_some().to_string()).collect();
                out.kv("split_found", found.join(" "));
            }
            Ok(out.kv("note", trend.note).finish())
        }
        Command::Sutb { manifest, eps, max_net, pool } => {
            let m = load_manifest(manifest)?;
            let allowed: BTreeSet<ExactValue> = parse_pool(pool)?.into_iter().collect();
            let verdict = sutb_check(&m.spaces, eps, *max_net, &allowed)?;
            if json {
                return Ok(to_json(&verdict));
            }
            out.kv("holds", verdict.holds);
            for (i, (space, net)) in m.spaces.iter().zip(&verdict.nets).enumerate() {
                let shown = net.as_ref().map_or_else(|| "none".to_string(), |n| output::labels(space, n));
                out.kv(&format!("net {i}"), shown);
            }
            Ok(out.finish())
        }
    }
}

fn required<T: Copy>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("missing --{flag}")))
}

fn generate(kind: GenKind, a: &GenArgs, seed: u64) -> Result<UltrametricSpace, CliError> {
    Ok(match kind {
        GenKind::Zp => truncated_unramified_ring(required(a.p, "p")?, 1, a.depth)?,
        GenKind::Ring => truncated_unramified_ring(required(a.p, "p")?, a.f, a.depth)?,
        GenKind::Ball if a.e > 1 => ramified_ball_approx(required(a.p, "p")?, a.e, a.f, a.s, a.depth, a.precision_bits)?,
        GenKind::Ball => truncated_scaled_ball(required(a.p, "p")?, a.f, a.s, a.depth)?,
        GenKind::Zqdelta => zq_delta(required(a.p, "p")?, required(a.q, "q")?, a.depth)?,
        GenKind::Random => random_ultrametric(required(a.n, "n")?, seed, &parse_pool(&a.pool)?)?,
    })
}

fn read_pairs(path: &Path, x: &UltrametricSpace, y: &UltrametricSpace) -> Result<Vec<(usize, usize)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError { code: 1, message: format!("{}: {e}", path.display()) })?;
    let find = |space: &UltrametricSpace, label: &str, no: usize| {
        space
            .labels()
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| CliError::usage(format!("{}:{no}: unknown label `{label}`", path.display())))
    };
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] => {}
            [l, r] => pairs.push((find(x, l, no + 1)?, find(y, r, no + 1)?)),
            _ => return Err(CliError::usage(format!("{}:{}: expected `left right`", path.display(), no + 1))),
        }
    }
    Ok(pairs)
}
