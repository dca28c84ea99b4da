use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use serde_json::{json, Value};
use stump_core::csg::{parse_csg, simplify_stump, tree_to_stump, CsgError, CsgModel, SoftStump, Solid, Stump};
use stump_core::fit::{
    loss_primitive, loss_recon, refine_continuous, solve_anneal, solve_exhaustive_with, solve_minterm, BpInstance,
    FitError, FitReport, RowLayout, DEFAULT_EXHAUSTIVE_CAP,
};
use stump_core::geometry::{Aabb, Sharpness, Vec3};
use stump_core::io::{
    export_openscad, export_openscad_tree, import_scad, marching_cubes, rasterize, rasterize_field, rasterize_soft,
    soft_stump_to_json, stump_from_json, stump_to_json, IoError, Mesh, StumpDoc,
};
use stump_core::sampling::pointio::{read_bin, read_labeled, read_labels, read_xyz};
use stump_core::sampling::{chamfer_l2, sample_balanced, sample_surface_in, SamplingError, TestPointSet};

use crate::config::Config;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub err: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, err: impl Into<anyhow::Error>) -> Self {
        Self { code, err: err.into() }
    }

    pub fn parse(err: impl Into<anyhow::Error>) -> Self {
        Self::new(EXIT_PARSE, err)
    }

    pub fn other(err: impl Into<anyhow::Error>) -> Self {
        Self::new(EXIT_OTHER, err)
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        let code = match e {
            FitError::Budget { .. } => EXIT_BUDGET,
            FitError::NonFinite { .. } | FitError::Geometry(_) => EXIT_NUMERIC,
            FitError::Dimension(_) | FitError::ComplementRequired | FitError::NegativeLambda(_) => EXIT_PARSE,
            FitError::EmptyPoints => EXIT_PARSE,
        };
        Self::new(code, e)
    }
}

impl From<SamplingError> for Failure {
    fn from(e: SamplingError) -> Self {
        let code = match e {
            SamplingError::InfeasibleBalance { .. } => EXIT_BUDGET,
            SamplingError::NonFinite(_) => EXIT_NUMERIC,
            _ => EXIT_PARSE,
        };
        Self::new(code, e)
    }
}

impl From<CsgError> for Failure {
    fn from(e: CsgError) -> Self {
        let code = match e {
            CsgError::TermOverflow { .. } => EXIT_BUDGET,
            _ => EXIT_PARSE,
        };
        Self::new(code, e)
    }
}

/// What a run read and wrote, collected for the manifest.
#[derive(Default)]
pub struct Run {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub config: Option<Value>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub quiet: bool,
}

impl Run {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn write(&mut self, p: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
        let file = File::create(p)
            .with_context(|| format!("creating {}", p.display()))
            .map_err(Failure::other)?;
        let mut w = BufWriter::new(file);
        f(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", p.display()))
            .map_err(Failure::other)?;
        self.outputs.push(p.to_path_buf());
        Ok(())
    }

    fn write_text(&mut self, p: &Path, text: &str) -> Result<(), Failure> {
        self.write(p, |w| w.write_all(text.as_bytes()))
    }

    fn write_json(&mut self, p: &Path, v: &impl serde::Serialize) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(v).map_err(Failure::other)?;
        self.write_text(p, &(text + "\n"))
    }
}

/// Any shape file the CLI accepts.
pub enum Shape {
    Tree(CsgModel),
    Hard(Stump),
    Soft(SoftStump),
}

impl Shape {
    /// Hard solid view; soft stumps are binarized at 0.5.
    fn solid(&self) -> Box<dyn Solid + '_> {
        match self {
            Shape::Tree(m) => Box::new(m.clone()),
            Shape::Hard(s) => Box::new(s.clone()),
            Shape::Soft(s) => Box::new(s.binarize(0.5)),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Shape::Tree(_) => "tree",
            Shape::Hard(_) => "stump",
            Shape::Soft(_) => "soft_stump",
        }
    }

    fn primitives(&self) -> &[stump_core::Primitive] {
        match self {
            Shape::Tree(m) => &m.primitives,
            Shape::Hard(s) => &s.primitives,
            Shape::Soft(s) => &s.primitives,
        }
    }
}

fn read_text(path: &Path, run: &mut Run) -> Result<String, Failure> {
    run.input(path);
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::parse)
}

fn extension(path: &Path) -> String {
    path.extension()
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_default()
}

pub fn load_shape(path: &Path, run: &mut Run) -> Result<Shape, Failure> {
    let text = read_text(path, run)?;
    let ctx = |e: anyhow::Error| Failure::parse(e.context(format!("{}", path.display())));
    match extension(path).as_str() {
        "csg" => parse_csg(&text).map(Shape::Tree).map_err(|e| ctx(e.into())),
        "scad" => import_scad(&text).map(Shape::Tree).map_err(|e| ctx(e.into())),
        "json" => match stump_from_json(&text).map_err(|e| ctx(e.into()))? {
            StumpDoc::Hard(s) => Ok(Shape::Hard(s)),
            StumpDoc::Soft(s) => Ok(Shape::Soft(s)),
        },
        other => Err(Failure::parse(anyhow!(
            "{}: unknown shape extension '{other}' (expected .csg, .json or .scad)",
            path.display()
        ))),
    }
}

fn load_tree(path: &Path, run: &mut Run) -> Result<CsgModel, Failure> {
    match load_shape(path, run)? {
        Shape::Tree(m) => Ok(m),
        _ => Err(Failure::parse(anyhow!(
            "{}: expected a .csg or .scad tree",
            path.display()
        ))),
    }
}

fn read_points_file(path: &Path, run: &mut Run) -> Result<Vec<Vec3>, Failure> {
    run.input(path);
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::parse)?;
    let res = if extension(path) == "bin" {
        read_bin(BufReader::new(file))
    } else {
        read_xyz(BufReader::new(file))
    };
    res.with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::parse)
}

/// Labelled points from `--points` (+ `--labels`), or sampled from a reference tree.
#[derive(Args, Debug, Clone)]
pub struct PointSource {
    /// Reference `.csg` (or `.scad`) shape to sample labelled points from.
    #[arg(long, conflicts_with = "points")]
    pub reference: Option<PathBuf>,
    /// Point file: `x y z` per line (`.bin`: binary), or `x y z label` when `--labels` is absent.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// One 0/1 label per line, parallel to `--points`.
    #[arg(long, requires = "points")]
    pub labels: Option<PathBuf>,
    /// Number of points drawn from `--reference`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sample uniformly in the bounding box instead of balancing inside and outside.
    #[arg(long)]
    pub uniform: bool,
}

impl PointSource {
    fn load(&self, cfg: &mut Config, run: &mut Run) -> Result<(TestPointSet, Option<CsgModel>), Failure> {
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(path) = &self.reference {
            let tree = load_tree(path, run)?;
            let bbox = tree.bounds();
            let set = if self.uniform {
                stump_core::sampling::sample_uniform(&tree, cfg.samples, &bbox, cfg.seed)?
            } else {
                sample_balanced(&tree, cfg.samples, &bbox, cfg.seed)?
            };
            return Ok((set, Some(tree)));
        }
        let Some(points) = &self.points else {
            return Err(Failure::parse(anyhow!("either --reference or --points is required")));
        };
        let (pts, labels) = match &self.labels {
            Some(lp) => {
                let pts = read_points_file(points, run)?;
                run.input(lp);
                let f = File::open(lp)
                    .with_context(|| format!("opening {}", lp.display()))
                    .map_err(Failure::parse)?;
                let labels = read_labels(BufReader::new(f))
                    .with_context(|| format!("reading {}", lp.display()))
                    .map_err(Failure::parse)?;
                (pts, labels)
            }
            None => {
                run.input(points);
                let f = File::open(points)
                    .with_context(|| format!("opening {}", points.display()))
                    .map_err(Failure::parse)?;
                read_labeled(BufReader::new(f))
                    .with_context(|| format!("reading {}", points.display()))
                    .map_err(Failure::parse)?
            }
        };
        Ok((TestPointSet::from_loaded(pts, labels)?, None))
    }
}

fn uniform_in(bbox: &Aabb, n: usize, seed: u64) -> Vec<Vec3> {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.gen_range(bbox.min.x..=bbox.max.x),
                rng.gen_range(bbox.min.y..=bbox.max.y),
                rng.gen_range(bbox.min.z..=bbox.max.z),
            )
        })
        .collect()
}

const VERIFY_POINTS: usize = 10_000;

#[derive(Args, Debug)]
pub struct NormalizeArgs {
    /// Input `.csg` file.
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Keep every column produced by the conversion.
    #[arg(long)]
    pub no_simplify: bool,
    /// Check tree/stump agreement on 10000 fresh points; exit 4 on any mismatch.
    #[arg(long)]
    pub verify: bool,
    /// Maximum number of intersection terms before giving up.
    #[arg(long, default_value_t = stump_core::csg::DEFAULT_TERM_CAP)]
    pub term_cap: usize,
}

pub fn normalize(a: &NormalizeArgs, cfg: &Config, run: &mut Run) -> Result<(), Failure> {
    run.config = Some(json!({ "seed": cfg.seed, "term_cap": a.term_cap, "simplify": !a.no_simplify }));
    let text = read_text(&a.input, run)?;
    let tree = parse_csg(&text).map_err(|e| Failure::parse(anyhow!("{}:{e}", a.input.display())))?;
    let raw = tree_to_stump(&tree, a.term_cap)?;
    let bbox = tree.bounds();
    let stump = if a.no_simplify {
        raw.clone()
    } else {
        simplify_stump(&raw, &uniform_in(&bbox, VERIFY_POINTS, cfg.seed))
    };
    run.write_text(&a.output, &stump_to_json(&stump))?;
    run.say(format!(
        "K={} C={} (columns before simplification: {})",
        stump.k(),
        stump.c(),
        raw.c()
    ));
    if a.verify {
        let probe = uniform_in(&bbox, VERIFY_POINTS, cfg.seed ^ 0x005E_ED0F_7E57);
        let bad = probe.iter().filter(|x| tree.eval_hard(x) != stump.eval_hard(x)).count();
        if bad > 0 {
            return Err(Failure::new(
                EXIT_VERIFY,
                anyhow!("verification failed: {bad} of {VERIFY_POINTS} points disagree"),
            ));
        }
        run.say(format!("verified on {VERIFY_POINTS} points"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SolverArg {
    Exhaustive,
    Minterm,
    Anneal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LayoutArg {
    Single,
    Paired,
}

impl From<LayoutArg> for RowLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Single => RowLayout::Single,
            LayoutArg::Paired => RowLayout::Paired,
        }
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: PointSource,
    /// Shape whose primitives are used (default: the reference tree's).
    #[arg(long)]
    pub primitives: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "anneal")]
    pub solver: SolverArg,
    /// Number of intersection columns.
    #[arg(long = "C", id = "columns")]
    pub columns: usize,
    #[arg(long)]
    pub allow_complement: bool,
    /// Row layout (default: single for exhaustive, paired for anneal with complements).
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    /// Stump JSON output.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Report JSON (default: `<output stem>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn fit(a: &FitArgs, cfg: &mut Config, run: &mut Run) -> Result<(), Failure> {
    let (set, tree) = a.source.load(cfg, run)?;
    let prims = match (&a.primitives, tree) {
        (Some(p), _) => load_shape(p, run)?.primitives().to_vec(),
        (None, Some(t)) => t.primitives,
        (None, None) => return Err(Failure::parse(anyhow!("--primitives is required with --points"))),
    };
    let inst = BpInstance::from_primitives(&prims, &set.points, &set.target, a.columns, a.allow_complement)?;
    cfg.anneal.seed = cfg.seed;
    if let Some(l) = a.layout {
        cfg.anneal.layout = Some(l.into());
    }
    run.config = Some(json!({
        "solver": format!("{:?}", a.solver).to_lowercase(),
        "columns": a.columns,
        "allow_complement": a.allow_complement,
        "layout": a.layout.map(|l| format!("{l:?}").to_lowercase()),
        "samples": set.len(),
        "uniform": a.source.uniform,
        "anneal": cfg.anneal,
    }));
    let (m, mut report): (_, FitReport) = match a.solver {
        SolverArg::Exhaustive => {
            let layout = a.layout.map_or(RowLayout::Single, Into::into);
            solve_exhaustive_with(&inst, layout, DEFAULT_EXHAUSTIVE_CAP)?
        }
        SolverArg::Minterm => solve_minterm(&inst)?,
        SolverArg::Anneal => solve_anneal(&inst, &cfg.anneal)?,
    };
    if report.min_columns.is_none() && a.allow_complement {
        report.min_columns = solve_minterm(&inst)?.1.min_columns;
    }
    let stump = m.to_stump(&prims);
    run.write_text(&a.output, &stump_to_json(&stump))?;
    let report_path = a.report.clone().unwrap_or_else(|| sibling(&a.output, "report.json"));
    run.write_json(&report_path, &report)?;
    run.say(format!(
        "objective {:.6} ({} of {} points wrong), {:.3}s, minterm columns {}",
        report.objective,
        (report.objective * set.len() as f64).round(),
        set.len(),
        report.wall_time,
        report.min_columns.map_or("n/a".into(), |c| c.to_string())
    ));
    Ok(())
}

#[derive(Args, Debug)]
pub struct RefineArgs {
    /// Stump JSON (hard stumps are lifted to 0.01 / 0.99 weights).
    pub input: PathBuf,
    #[command(flatten)]
    pub source: PointSource,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub psi: Option<f64>,
    #[arg(long)]
    pub freeze_weights: bool,
    #[arg(long)]
    pub freeze_primitives: bool,
    /// Binarized stump JSON output.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Also write the refined soft stump.
    #[arg(long)]
    pub soft_output: Option<PathBuf>,
    /// Report JSON (default: `<output stem>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

const LIFT_LO: f64 = 0.01;
const LIFT_HI: f64 = 0.99;

fn binarized_recon(s: &Stump, set: &TestPointSet) -> f64 {
    let bad = set
        .points
        .iter()
        .zip(&set.target)
        .filter(|(x, &t)| s.eval_hard(x) != t)
        .count();
    bad as f64 / set.len() as f64
}

pub fn refine(a: &RefineArgs, cfg: &mut Config, run: &mut Run) -> Result<(), Failure> {
    let shape = load_shape(&a.input, run)?;
    let (set, _) = a.source.load(cfg, run)?;
    cfg.eta = a.eta.unwrap_or(cfg.eta);
    cfg.psi = a.psi.unwrap_or(cfg.psi);
    let o = &mut cfg.optim;
    o.iterations = a.iters.unwrap_or(o.iterations);
    o.lr = a.lr.unwrap_or(o.lr);
    o.lambda = a.lambda.unwrap_or(o.lambda);
    o.freeze_weights |= a.freeze_weights;
    o.freeze_primitives |= a.freeze_primitives;
    let sharp = Sharpness::new(cfg.eta, cfg.psi).map_err(Failure::parse)?;
    run.config = Some(json!({
        "eta": cfg.eta,
        "psi": cfg.psi,
        "optim": cfg.optim,
        "samples": set.len(),
        "uniform": a.source.uniform,
    }));

    let init = match shape {
        Shape::Hard(s) => s.lift(LIFT_LO, LIFT_HI, sharp),
        Shape::Soft(mut s) => {
            s.sharpness = sharp;
            s
        }
        Shape::Tree(m) => tree_to_stump(&m, stump_core::csg::DEFAULT_TERM_CAP)?.lift(LIFT_LO, LIFT_HI, sharp),
    };
    let soft_before = loss_recon(&init, &set)?;
    let bin_before = binarized_recon(&init.binarize(0.5), &set);
    let (out, report) = refine_continuous(&init, &set, &cfg.optim)?;
    let soft_after = loss_recon(&out, &set)?;
    let prim_after = loss_primitive(&out, &set)?;
    let hard = out.binarize(0.5);
    let bin_after = binarized_recon(&hard, &set);

    run.write_text(&a.output, &stump_to_json(&hard))?;
    if let Some(p) = &a.soft_output {
        run.write_text(p, &soft_stump_to_json(&out))?;
    }
    let summary = json!({
        "fit": report,
        "lambda": cfg.optim.lambda,
        "l_total": report.objective,
        "l_recon": soft_after,
        "l_primitive": prim_after,
        "soft_l_recon": { "before": soft_before, "after": soft_after },
        "binarized_l_recon": { "before": bin_before, "after": bin_after },
    });
    let report_path = a.report.clone().unwrap_or_else(|| sibling(&a.output, "report.json"));
    run.write_json(&report_path, &summary)?;
    run.say(format!(
        "L_total {:.6}; L_recon soft {soft_before:.4} -> {soft_after:.4}, binarized {bin_before:.4} -> {bin_after:.4}; {} iterations in {:.2}s",
        report.objective, report.iterations, report.wall_time
    ));
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Shape: stump `.json`, `.csg` tree or `.scad` (exporter subset).
    pub input: PathBuf,
    /// Reference shape (`.csg`, `.json`, `.scad`) or surface points (`.xyz`, `.bin`).
    #[arg(long)]
    pub chamfer: Option<PathBuf>,
    /// Occupancy grid dimensions: `N` or `NX,NY,NZ`.
    #[arg(long, value_parser = parse_dims)]
    pub grid: Option<[usize; 3]>,
    /// Write the occupancy grid here (requires `--grid`).
    #[arg(long, requires = "grid")]
    pub grid_output: Option<PathBuf>,
    /// Marching-cubes mesh output (`.obj` or `.stl`).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub scad: Option<PathBuf>,
    /// Surface samples per shape for Chamfer distance.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Marching-cubes resolution.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Metrics JSON.
    #[arg(long, short)]
    pub output: PathBuf,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [n] => Ok([n; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err("expected N or NX,NY,NZ".into()),
    }
}

fn mesh_stats(m: &Mesh) -> Value {
    json!({
        "vertices": m.vertices.len(),
        "faces": m.faces.len(),
        "area": m.area(),
        "volume": m.signed_volume(),
        "euler_characteristic": m.euler_characteristic(),
    })
}

pub fn eval(a: &EvalArgs, cfg: &mut Config, run: &mut Run) -> Result<(), Failure> {
    cfg.chamfer_samples = a.samples.unwrap_or(cfg.chamfer_samples);
    cfg.resolution = a.resolution.unwrap_or(cfg.resolution);
    run.config = Some(json!({
        "seed": cfg.seed,
        "chamfer_samples": cfg.chamfer_samples,
        "resolution": cfg.resolution,
        "grid": a.grid,
    }));
    let shape = load_shape(&a.input, run)?;
    let solid = shape.solid();
    let bbox = solid.bounds();
    let mut metrics = serde_json::Map::new();
    metrics.insert("kind".into(), json!(shape.kind()));
    metrics.insert("primitives".into(), json!(shape.primitives().len()));
    match &shape {
        Shape::Hard(s) => {
            metrics.insert("columns".into(), json!(s.c()));
        }
        Shape::Soft(s) => {
            metrics.insert("columns".into(), json!(s.c()));
            metrics.insert("binarized_at".into(), json!(0.5));
        }
        Shape::Tree(m) => {
            metrics.insert("depth".into(), json!(m.expr.depth()));
        }
    }
    metrics.insert(
        "bounds".into(),
        json!({ "min": bbox.min.as_slice(), "max": bbox.max.as_slice() }),
    );

    if let Some(dims) = a.grid {
        let grid = match &shape {
            Shape::Soft(s) => rasterize_soft(s, dims, &bbox),
            _ => rasterize(solid.as_ref(), dims, &bbox),
        }
        .map_err(Failure::parse)?;
        let occupied = grid.values.iter().filter(|&&v| v >= 0.5).count();
        metrics.insert(
            "grid".into(),
            json!({
                "dims": dims,
                "occupied_fraction": occupied as f64 / grid.values.len() as f64,
                "volume": grid.volume(),
            }),
        );
        if let Some(p) = &a.grid_output {
            run.write(p, |w| grid.write(w))?;
        }
    }

    if let Some(p) = &a.mesh {
        let grid = rasterize_field(solid.as_ref(), [cfg.resolution.max(2); 3], &bbox).map_err(Failure::parse)?;
        let mesh = marching_cubes(&grid, 0.5);
        match extension(p).as_str() {
            "stl" => run.write(p, |w| mesh.write_stl(w))?,
            "obj" => run.write(p, |w| mesh.write_obj(w))?,
            other => {
                return Err(Failure::parse(anyhow!(
                    "unknown mesh extension '{other}' (expected .obj or .stl)"
                )))
            }
        }
        metrics.insert("mesh".into(), mesh_stats(&mesh));
    }

    if let Some(p) = &a.scad {
        let text = match &shape {
            Shape::Hard(s) => export_openscad(s),
            Shape::Tree(m) => export_openscad_tree(m),
            Shape::Soft(_) => return Err(Failure::parse(IoError::SoftExport)),
        };
        run.write_text(p, &text)?;
    }

    if let Some(r) = &a.chamfer {
        let (n, res) = (cfg.chamfer_samples, cfg.resolution);
        let (reference, shared) = match extension(r).as_str() {
            "xyz" | "bin" => (read_points_file(r, run)?, bbox),
            _ => {
                let ref_shape = load_shape(r, run)?;
                let ref_solid = ref_shape.solid();
                let shared = bbox.union(&ref_solid.bounds());
                (
                    sample_surface_in(ref_solid.as_ref(), n, res, &shared, cfg.seed)?,
                    shared,
                )
            }
        };
        let own = sample_surface_in(solid.as_ref(), n, res, &shared, cfg.seed)?;
        let cd = chamfer_l2(&own, &reference)?;
        metrics.insert(
            "chamfer".into(),
            json!({
                "raw": cd,
                "x1000": cd * 1000.0,
                "samples": n,
                "resolution": res,
                "seed": cfg.seed,
            }),
        );
        run.say(format!("chamfer x1000 = {:.4}", cd * 1000.0));
    }

    run.write_json(&a.output, &Value::Object(metrics))?;
    Ok(())
}
