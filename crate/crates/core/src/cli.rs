//! Command-line driver. Every subcommand is a thin wrapper over library
//! calls; outputs go to stdout and, with `--out`, to files in a directory.
//!
//! Exit codes: 0 success, 1 numeric failure, 2 usage or validation error,
//! 3 inconclusive verdict.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{
    self, coverage_trend, dichotomy_experiment, AffineSweep, Chart, CoverageGrid, DensityRow, FlowKind, HitSet,
    Verdict,
};
use crate::error::Error;
use crate::fuchsian::{
    closed_geodesics_in_band, cyclic_group, dirichlet_reduce, enumerate_elements, genus2_kernel_cover,
    genus2_octagon_group, sanov_free_group, GroupPresentation, GroupSpec, Word,
};
use crate::hirsch::{self, AngleParam};
use crate::hyperbolic::{axis_frame, BoundaryPoint, Frame, Moebius};
use crate::keylemma::{run_key_lemma, ConvergenceTol, KeyLemmaConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Environment variable holding tolerance overrides, `key=value` pairs
/// separated by commas, semicolons or whitespace.
pub const TOL_ENV: &str = "HOROFLOW_TOL";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) => match e {
                Error::NoCluster { .. } | Error::EscapeFail { .. } => EXIT_INCONCLUSIVE,
                Error::InvalidBand { .. }
                | Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::NotAPath(_)
                | Error::NotInHalfPlane(_)
                | Error::Determinant { .. }
                | Error::NonpositiveScale(_)
                | Error::BaseOffCircle { .. } => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "horoflow", version, about = "Horocycle and geodesic flow experiments on hyperbolic surfaces")]
pub struct Cli {
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files, created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Push a frame along the geodesic, horocycle or affine action.
    Flow(FlowArgs),
    /// Inspect a Fuchsian group.
    #[command(subcommand)]
    Group(GroupCommand),
    /// Run the Key Lemma pipeline on a group and frame.
    Keylemma(KeyLemmaArgs),
    /// Hirsch foliation leaves and gluing.
    #[command(subcommand)]
    Hirsch(HirschCommand),
    /// Orbit coverage experiments.
    Density(DensityArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GroupSource {
    /// Group-spec TOML file.
    #[arg(long, conflicts_with = "builtin")]
    pub group: Option<PathBuf>,
    /// Built-in group: genus2, genus2-kernel, sanov, cyclic or cyclic:<length>.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Rescale generators with positive determinant to determinant one.
    #[arg(long)]
    pub normalize_det: bool,
}

fn parse_frame(v: &[f64]) -> CliResult<Frame> {
    let [a, b, c, d] = v else {
        return Err(CliError::Usage(format!("a frame needs 4 matrix entries, got {}", v.len())));
    };
    Ok(Frame::new(Moebius::from_row_major([*a, *b, *c, *d])?))
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("kind").required(true).args(["geodesic", "horocycle", "affine"])))]
pub struct FlowArgs {
    /// Starting frame as row-major matrix entries `a,b,c,d` (default identity).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub frame: Option<Vec<f64>>,
    #[arg(long)]
    pub geodesic: bool,
    #[arg(long)]
    pub horocycle: bool,
    #[arg(long)]
    pub affine: bool,
    /// Geodesic time.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Horocycle parameter.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Affine scale α > 0.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Affine shift β.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Intermediate points for geodesic and horocycle trajectories.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
}

#[derive(Debug, Subcommand)]
pub enum GroupCommand {
    /// Print the group spec and relator residuals.
    Info(GroupSource),
    /// Elements up to a word length.
    Enumerate {
        #[command(flatten)]
        src: GroupSource,
        #[arg(long)]
        maxlen: usize,
    },
    /// Closed geodesics with length in a band.
    Geodesics {
        #[command(flatten)]
        src: GroupSource,
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
        band: Vec<f64>,
        #[arg(long)]
        maxlen: usize,
    },
    /// Dirichlet-reduce a frame.
    Reduce {
        #[command(flatten)]
        src: GroupSource,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        frame: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct KeyLemmaArgs {
    #[command(flatten)]
    pub src: GroupSource,
    /// Frame whose ray is tested (default: on the axis of the first generator).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub frame: Option<Vec<f64>>,
    /// Length band; defaults to `[a0, 4·a0]` with `a0` the shortest harvested length.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    pub band: Option<Vec<f64>>,
    #[arg(long, default_value_t = 12)]
    pub maxlen: usize,
    #[arg(long, default_value_t = 2)]
    pub core_len: usize,
    #[arg(long, default_value_t = 40.0)]
    pub horizon: f64,
}

#[derive(Debug, Subcommand)]
pub enum HirschCommand {
    /// Leaf types of every reduced p/q with q up to `qmax`.
    Classify {
        #[arg(long)]
        qmax: u64,
    },
    /// Doubling orbit of an angle.
    Orbit {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Edge list of a pants tree.
    Tree {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 1.0)]
        cuff_length: f64,
    },
    /// Apply the gluing map.
    Glue {
        /// Pants coordinate `re,im`.
        #[arg(long = "big-z", value_delimiter = ',', allow_hyphen_values = true)]
        big_z: Vec<f64>,
        /// Base-circle coordinate `re,im`.
        #[arg(long = "z", value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<f64>,
    },
    /// Cuffs crossed along a path of node ids from the root.
    Path {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 1.0)]
        cuff_length: f64,
        /// Node ids; empty for the root alone. Use `spine` for the periodic spine.
        #[arg(long, default_value = "")]
        path: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowArg {
    Horocycle,
    Geodesic,
    Affine,
}

impl From<FlowArg> for FlowKind {
    fn from(f: FlowArg) -> Self {
        match f {
            FlowArg::Horocycle => FlowKind::Horocycle,
            FlowArg::Geodesic => FlowKind::Geodesic,
            FlowArg::Affine => FlowKind::Affine,
        }
    }
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Experiment config (TOML); command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub src: GroupSource,
    #[arg(long, value_enum)]
    pub flow: Option<FlowArg>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub frame: Option<Vec<f64>>,
    /// Increasing list of horizons `s_max`.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<f64>>,
    #[arg(long)]
    pub ds: Option<f64>,
    /// Bins `x,y,angle`.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Also run the Key Lemma on the same group and frame.
    #[arg(long)]
    pub keylemma: bool,
    /// Write orbit point clouds and coverage heat grids (needs `--out`).
    #[arg(long)]
    pub plot_data: bool,
}

/// Grid part of a density config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_bins: Option<usize>,
    pub y_bins: Option<usize>,
    pub angle_bins: Option<usize>,
    pub chart: Option<Chart>,
    /// `[x_min, x_max, y_min, y_max]` in chart coordinates.
    #[serde(rename = "box")]
    pub domain_box: Option<[f64; 4]>,
}

/// Density experiment config document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    /// Group-spec path, relative to the config file.
    pub group: Option<PathBuf>,
    pub builtin: Option<String>,
    #[serde(default)]
    pub normalize_det: bool,
    pub flow: Option<FlowArg>,
    pub frame: Option<[f64; 4]>,
    pub budgets: Option<Vec<f64>>,
    pub ds: Option<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    pub affine_rows: Option<usize>,
    pub affine_t_max: Option<f64>,
    #[serde(default)]
    pub keylemma: bool,
}

impl DensityConfig {
    pub fn parse(text: &str) -> crate::Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Reads `HOROFLOW_TOL`-style overrides on top of `base`. Keys: `eps_xi`,
/// `eps_b`, `s_tol`; values must be positive and finite.
pub fn parse_tolerances(spec: &str, base: ConvergenceTol) -> crate::Result<ConvergenceTol> {
    let mut tol = base;
    for item in spec.split([',', ';', ' ', '\t', '\n']).filter(|s| !s.is_empty()) {
        let (key, value) =
            item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
        let v: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad number in `{item}`")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("tolerance {key} must be positive, got {v}")));
        }
        match key.trim() {
            "eps_xi" => tol.eps_xi = v,
            "eps_b" => tol.eps_b = v,
            "s_tol" => tol.s_tol = v,
            other => return Err(Error::Parse(format!("unknown tolerance key `{other}`"))),
        }
    }
    Ok(tol)
}

fn env_tolerances() -> CliResult<ConvergenceTol> {
    match std::env::var(TOL_ENV) {
        Ok(s) => parse_tolerances(&s, ConvergenceTol::default()).map_err(|e| CliError::Usage(format!("{TOL_ENV}: {e}"))),
        Err(_) => Ok(ConvergenceTol::default()),
    }
}

pub fn builtin_group(name: &str) -> CliResult<GroupPresentation> {
    match name {
        "genus2" => Ok(genus2_octagon_group()),
        "genus2-kernel" => Ok(genus2_kernel_cover()),
        "sanov" => Ok(sanov_free_group()),
        "cyclic" => Ok(cyclic_group(2.0)?),
        other => match other.strip_prefix("cyclic:") {
            Some(len) => {
                let l: f64 = len.parse().map_err(|_| CliError::Usage(format!("bad cyclic length `{len}`")))?;
                Ok(cyclic_group(l)?)
            }
            None => Err(CliError::Usage(format!("unknown built-in group `{other}`"))),
        },
    }
}

fn load_group(path: Option<&Path>, builtin: Option<&str>, normalize: bool, default: &str) -> CliResult<GroupPresentation> {
    match (path, builtin) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Ok(GroupSpec::parse(&text)?.build(normalize)?)
        }
        (None, Some(b)) => builtin_group(b),
        (None, None) => builtin_group(default),
    }
}

impl GroupSource {
    fn load(&self, default: &str) -> CliResult<GroupPresentation> {
        load_group(self.group.as_deref(), self.builtin.as_deref(), self.normalize_det, default)
    }
}

/// Collected outputs: stdout text and named files for `--out`.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<(String, String)>,
}

impl Output {
    fn print(&mut self, s: &str) {
        self.stdout.push_str(s);
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

fn frame_row(t: f64, s: f64, f: &Frame) -> String {
    let [a, b, c, d] = f.matrix().entries();
    let base = f.base();
    format!("{t},{s},{a},{b},{c},{d},{},{},{}\n", base.re(), base.im(), f.direction())
}

fn run_flow(args: &FlowArgs, out: &mut Output) -> CliResult<i32> {
    let u = match &args.frame {
        Some(v) => parse_frame(v)?,
        None => Frame::IDENTITY,
    };
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be >= 1".into()));
    }
    let mut csv = String::from("t,s,a,b,c,d,base_re,base_im,direction\n");
    if args.geodesic {
        let t = args.t.ok_or_else(|| CliError::Usage("--geodesic needs --t".into()))?;
        for j in 0..=args.steps {
            let tj = t * j as f64 / args.steps as f64;
            csv.push_str(&frame_row(tj + 0.0, 0.0, &crate::hyperbolic::geodesic_flow(&u, tj)));
        }
    } else if args.horocycle {
        let s = args.s.ok_or_else(|| CliError::Usage("--horocycle needs --s".into()))?;
        for j in 0..=args.steps {
            let sj = s * j as f64 / args.steps as f64;
            csv.push_str(&frame_row(0.0, sj + 0.0, &crate::hyperbolic::horocycle_flow(&u, sj)));
        }
    } else {
        let (Some(alpha), Some(beta)) = (args.a, args.b) else {
            return Err(CliError::Usage("--affine needs --a and --b".into()));
        };
        let f = crate::hyperbolic::affine_act(&u, alpha, beta)?;
        csv.push_str(&frame_row(2.0 * alpha.ln(), beta / alpha, &f));
    }
    out.print(&csv);
    out.file("flow.csv", csv);
    Ok(EXIT_OK)
}

fn boundary_str(x: BoundaryPoint) -> String {
    match x {
        BoundaryPoint::Infinity => "inf".into(),
        BoundaryPoint::Finite(v) => v.to_string(),
    }
}

fn word_str(w: &Word, g: &GroupPresentation) -> String {
    if w.is_empty() {
        "e".into()
    } else {
        w.display_with(g.names()).to_string()
    }
}

fn run_group(cmd: &GroupCommand, out: &mut Output) -> CliResult<i32> {
    match cmd {
        GroupCommand::Info(src) => {
            let g = src.load("genus2")?;
            let mut s = GroupSpec::from_presentation(&g).to_toml();
            for (i, r) in g.relators().iter().enumerate() {
                let m = g.evaluate(r);
                let residual = m.projective_distance(&Moebius::IDENTITY);
                s.push_str(&format!("# relator {i}: {} residual {residual:e}\n", word_str(r, &g)));
            }
            out.print(&s);
            out.file("group.toml", s);
        }
        GroupCommand::Enumerate { src, maxlen } => {
            let g = src.load("genus2")?;
            let mut s = String::from("index,word,a,b,c,d,trace\n");
            for (i, e) in enumerate_elements(&g, *maxlen)?.iter().enumerate() {
                let [a, b, c, d] = e.matrix.entries();
                s.push_str(&format!("{i},{},{a},{b},{c},{d},{}\n", word_str(&e.word, &g), e.matrix.trace()));
            }
            out.print(&s);
            out.file("elements.csv", s);
        }
        GroupCommand::Geodesics { src, band, maxlen } => {
            let g = src.load("genus2")?;
            let recs = closed_geodesics_in_band(&g, *maxlen, band[0], band[1])?;
            let mut s = String::from("word,length,repelling,attracting\n");
            for r in &recs {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    word_str(&r.element.word, &g),
                    r.length,
                    boundary_str(r.repelling),
                    boundary_str(r.attracting)
                ));
            }
            out.print(&s);
            out.file("geodesics.csv", s);
        }
        GroupCommand::Reduce { src, frame } => {
            let g = src.load("genus2")?;
            let u = parse_frame(frame)?;
            let (f, e) = dirichlet_reduce(&g, &u)?;
            let mut s = String::from("word,a,b,c,d,base_re,base_im,direction\n");
            let [a, b, c, d] = f.matrix().entries();
            let base = f.base();
            s.push_str(&format!(
                "{},{a},{b},{c},{d},{},{},{}\n",
                word_str(&e.word, &g),
                base.re(),
                base.im(),
                f.direction()
            ));
            out.print(&s);
            out.file("reduced.csv", s);
        }
    }
    Ok(EXIT_OK)
}

fn default_keylemma_frame(g: &GroupPresentation) -> CliResult<Frame> {
    Ok(axis_frame(&g.generators()[0])?)
}

fn run_keylemma(args: &KeyLemmaArgs, out: &mut Output) -> CliResult<i32> {
    let tol = env_tolerances()?;
    let g = args.src.load("genus2-kernel")?;
    let u = match &args.frame {
        Some(v) => parse_frame(v)?,
        None => default_keylemma_frame(&g)?,
    };
    let band = args.band.as_ref().map(|b| (b[0], b[1]));
    if let Some((a, b)) = band {
        if !(a > 0.0) || !(a <= b) || !b.is_finite() {
            return Err(Error::InvalidBand { a, b }.into());
        }
    }
    let cfg = KeyLemmaConfig {
        core_len: args.core_len,
        max_word_length: args.maxlen,
        horizon: args.horizon,
        band,
        tol,
        ..KeyLemmaConfig::default()
    };
    let run = run_key_lemma(&g, &u, &cfg)?;
    let csv = run.to_csv();
    let report = serde_json::to_string_pretty(&run.report()).expect("report serializes") + "\n";
    out.print(&report);
    out.file("keylemma_report.json", report);
    out.file("keylemma_crossings.csv", csv);
    if !run.all_bounds_ok() {
        return Ok(EXIT_NUMERIC);
    }
    if !run.converged() {
        return Ok(EXIT_INCONCLUSIVE);
    }
    Ok(EXIT_OK)
}

fn parse_path(tree: &hirsch::PantsTree, spec: &str) -> CliResult<Vec<usize>> {
    if spec.trim() == "spine" {
        return Ok(tree.spine());
    }
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| CliError::Usage(format!("bad node id `{s}`"))))
        .collect()
}

fn run_hirsch(cmd: &HirschCommand, out: &mut Output) -> CliResult<i32> {
    match cmd {
        HirschCommand::Classify { qmax } => {
            if *qmax == 0 {
                return Err(CliError::Usage("--qmax must be >= 1".into()));
            }
            let csv = hirsch::classification_csv(&hirsch::classify_all(*qmax));
            out.print(&csv);
            out.file("leaf_types.csv", csv);
        }
        HirschCommand::Orbit { theta, max_iter } => {
            let t = AngleParam::parse(theta)?;
            let orbit = hirsch::doubling_orbit(t, max_iter.unwrap_or(t.q() as usize))?;
            let leaf = hirsch::leaf_type(t);
            let points: Vec<String> = orbit.orbit.iter().map(|a| a.to_string()).collect();
            let period = orbit.period.map(|p| p.to_string()).unwrap_or_default();
            let s = format!(
                "orbit,preperiod,period,kind\n{},{},{period},{}\n",
                points.join(" "),
                orbit.preperiod,
                leaf.kind.as_str()
            );
            out.print(&s);
            out.file("orbit.csv", s);
        }
        HirschCommand::Tree { theta, depth, cuff_length } => {
            let tree = hirsch::pants_tree(AngleParam::parse(theta)?, *depth, *cuff_length)?;
            let s = tree.to_edge_list();
            out.print(&s);
            out.file("pants_tree.txt", s);
        }
        HirschCommand::Glue { big_z, z } => {
            if big_z.len() != 2 || z.len() != 2 {
                return Err(CliError::Usage("complex arguments take re,im".into()));
            }
            let (z2, w2) =
                hirsch::hirsch_glue(Complex64::new(big_z[0], big_z[1]), Complex64::new(z[0], z[1]))?;
            let s = format!("Z2_re,Z2_im,z2_re,z2_im\n{},{},{},{}\n", z2.re, z2.im, w2.re, w2.im);
            out.print(&s);
            out.file("glue.csv", s);
        }
        HirschCommand::Path { theta, depth, cuff_length, path } => {
            let tree = hirsch::pants_tree(AngleParam::parse(theta)?, *depth, *cuff_length)?;
            let ids = parse_path(&tree, path)?;
            let c = hirsch::coarse_tameness_graph_check(&tree, &ids)?;
            let s = format!(
                "cuffs_crossed,all_in_band,handle_cuffs\n{},{},{}\n",
                c.cuffs_crossed, c.all_in_band, c.handle_cuffs
            );
            out.print(&s);
            out.file("path.csv", s);
        }
    }
    Ok(EXIT_OK)
}

/// Default seed for density runs: forward endpoint 2, base `2 + i`.
pub const DEFAULT_DENSITY_FRAME: [f64; 4] = [2.0, -1.0, 1.0, 0.0];
pub const DEFAULT_BUDGETS: [f64; 3] = [100.0, 1000.0, 10000.0];
pub const DEFAULT_DS: f64 = 0.01;

fn build_grid(g: &GroupPresentation, cfg: &GridConfig) -> CliResult<CoverageGrid> {
    let x = cfg.x_bins.unwrap_or(20);
    let y = cfg.y_bins.unwrap_or(20);
    let a = cfg.angle_bins.unwrap_or(16);
    let reducer = crate::fuchsian::DirichletReducer::new(g);
    match cfg.domain_box {
        Some([x0, x1, y0, y1]) => {
            let chart = cfg.chart.unwrap_or(Chart::HalfPlane);
            Ok(CoverageGrid::new(x, y, a, (x0, x1, y0, y1), chart)?.with_domain_mask(&reducer))
        }
        None => Ok(CoverageGrid::for_group(g, x, y, a)?),
    }
}

fn run_density(args: &DensityArgs, out: &mut Output) -> CliResult<i32> {
    let (mut cfg, base_dir) = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            (DensityConfig::parse(&text)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (DensityConfig::default(), PathBuf::new()),
    };
    if let Some(p) = &args.src.group {
        cfg.group = Some(p.clone());
        cfg.builtin = None;
    } else if let Some(b) = &args.src.builtin {
        cfg.builtin = Some(b.clone());
        cfg.group = None;
    } else if let Some(p) = &cfg.group {
        cfg.group = Some(base_dir.join(p));
    }
    cfg.normalize_det |= args.src.normalize_det;
    if let Some(f) = args.flow {
        cfg.flow = Some(f);
    }
    if let Some(v) = &args.frame {
        let entries: [f64; 4] = v
            .as_slice()
            .try_into()
            .map_err(|_| CliError::Usage(format!("a frame needs 4 matrix entries, got {}", v.len())))?;
        cfg.frame = Some(entries);
    }
    if let Some(b) = &args.budgets {
        cfg.budgets = Some(b.clone());
    }
    if let Some(ds) = args.ds {
        cfg.ds = Some(ds);
    }
    if let Some(gr) = &args.grid {
        if gr.len() != 3 {
            return Err(CliError::Usage("--grid takes x,y,angle bin counts".into()));
        }
        cfg.grid.x_bins = Some(gr[0]);
        cfg.grid.y_bins = Some(gr[1]);
        cfg.grid.angle_bins = Some(gr[2]);
    }
    cfg.keylemma |= args.keylemma;

    let g = load_group(cfg.group.as_deref(), cfg.builtin.as_deref(), cfg.normalize_det, "genus2")?;
    let u = match cfg.frame {
        Some(f) => parse_frame(&f)?,
        None if cfg.keylemma => default_keylemma_frame(&g)?,
        None => parse_frame(&DEFAULT_DENSITY_FRAME)?,
    };
    let flow: FlowKind = cfg.flow.unwrap_or(FlowArg::Horocycle).into();
    let budgets = cfg.budgets.clone().unwrap_or(DEFAULT_BUDGETS.to_vec());
    let ds = cfg.ds.unwrap_or(DEFAULT_DS);
    let grid = build_grid(&g, &cfg.grid)?;

    let rows: Vec<DensityRow> = match flow {
        FlowKind::Horocycle => {
            let run = if cfg.keylemma {
                let kl = KeyLemmaConfig { tol: env_tolerances()?, ..KeyLemmaConfig::default() };
                match run_key_lemma(&g, &u, &kl) {
                    Ok(r) => Some(r),
                    Err(e @ (Error::NoCluster { .. } | Error::EscapeFail { .. })) => {
                        eprintln!("key lemma: {e}");
                        None
                    }
                    Err(e) => return Err(e.into()),
                }
            } else {
                None
            };
            let report = dichotomy_experiment(&g, &u, &budgets, ds, &grid, run.as_ref())?;
            if let Some(b) = report.im_bound {
                let rows: Vec<String> = report.empty_rows.iter().map(|r| r.to_string()).collect();
                out.file("stall.csv", format!("im_bound,empty_rows\n{b},{}\n", rows.join(" ")));
            }
            report.rows
        }
        other => coverage_trend(
            &g,
            &u,
            other,
            &budgets,
            ds,
            &grid,
            cfg.affine_rows.unwrap_or(3),
            cfg.affine_t_max.unwrap_or(1.0),
        )?,
    };
    let csv = density::density_csv(&rows);
    out.print(&csv);
    out.file("density.csv", csv);

    if args.plot_data {
        let largest = *budgets.last().expect("non-empty budgets");
        let sample = match flow {
            FlowKind::Affine => density::sample_affine(
                &g,
                &u,
                &AffineSweep::matched(largest, ds, cfg.affine_rows.unwrap_or(3), cfg.affine_t_max.unwrap_or(1.0)),
            )?,
            _ => density::sample_orbit(&g, &u, flow, largest, ds)?,
        };
        let hits = HitSet::from_frames(&grid, &sample.frames);
        out.file("orbit_points.csv", density::orbit_points_csv(&sample, 10_000));
        out.file("coverage_grid.csv", density::heat_grid_csv(&grid, &hits));
    }

    let last = rows.last().map(|r| r.verdict).unwrap_or(Verdict::Inconclusive);
    Ok(if last == Verdict::Inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK })
}

fn dispatch(cli: &Cli, out: &mut Output) -> CliResult<i32> {
    match &cli.command {
        Command::Flow(a) => run_flow(a, out),
        Command::Group(c) => run_group(c, out),
        Command::Keylemma(a) => run_keylemma(a, out),
        Command::Hirsch(c) => run_hirsch(c, out),
        Command::Density(a) => {
            if a.plot_data && cli.out.is_none() {
                return Err(CliError::Usage("--plot-data needs --out".into()));
            }
            run_density(a, out)
        }
    }
}

fn write_files(dir: &Path, out: &Output) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Lib(e.into()))?;
    for (name, contents) in &out.files {
        std::fs::write(dir.join(name), contents).map_err(|e| CliError::Lib(e.into()))?;
    }
    Ok(())
}

/// Parses `args`, runs the command, writes stdout text to `stdout` and
/// diagnostics to `stderr`, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut out = Output::default();
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut out)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli, &mut out),
    };
    let result = result.and_then(|code| {
        if let Some(dir) = &cli.out {
            write_files(dir, &out)?;
        }
        Ok(code)
    });
    let _ = stdout.write_all(out.stdout.as_bytes());
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
