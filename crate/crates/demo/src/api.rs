use serde::Serialize;
use stump_core::csg::{parse_csg, simplify_stump, tree_to_stump, CsgModel, Solid, DEFAULT_TERM_CAP};
use stump_core::fit::{solve_anneal, AnnealConfig, BpInstance, RowLayout};
use stump_core::geometry::{Sharpness, Vec3};
use stump_core::io::{export_openscad, stump_to_json};
use stump_core::sampling::sample_balanced;
use stump_core::toy::TOY_SOURCES;

pub const MAX_RES: usize = 256;
pub const MAX_COLUMNS: usize = 16;
const FIT_POINTS: usize = 1000;
const SIMPLIFY_POINTS: usize = 4000;

/// Values on an axis-aligned z slice, row-major with x fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slice {
    pub res: usize,
    /// `[x0, y0, x1, y1]`
    pub extent: [f64; 4],
    pub z: f64,
    pub values: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoftSlice {
    pub soft: Slice,
    /// Hard occupancy of the source tree on the same slice.
    pub hard: Slice,
    pub max_deviation: f32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizeStats {
    pub tree_primitives: usize,
    /// Primitives still referenced after simplification.
    pub primitives: usize,
    pub depth: usize,
    pub columns_raw: usize,
    pub columns: usize,
    pub stump_json: String,
    pub scad: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub columns: usize,
    pub objective: f64,
    pub wrong: usize,
    pub points: usize,
    pub min_columns: Option<usize>,
    pub wall_time: f64,
    pub trace: Vec<f64>,
    pub slice: Slice,
    pub stump_json: String,
}

pub fn toy_names() -> Vec<&'static str> {
    TOY_SOURCES.iter().map(|(n, _)| *n).collect()
}

pub fn toy_source(name: &str) -> Option<&'static str> {
    TOY_SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

fn parse(source: &str) -> Result<CsgModel, String> {
    parse_csg(source).map_err(|e| format!("line {e}"))
}

fn check_res(res: usize) -> Result<(), String> {
    if (2..=MAX_RES).contains(&res) {
        Ok(())
    } else {
        Err(format!("resolution must be within 2..={MAX_RES}, got {res}"))
    }
}

fn slice_of(shape: &CsgModel, z_frac: f64, res: usize, f: impl Fn(&Vec3) -> f64) -> Slice {
    let b = shape.bounds();
    let z = b.min.z + z_frac.clamp(0.0, 1.0) * (b.max.z - b.min.z);
    let e = b.extent();
    let mut values = Vec::with_capacity(res * res);
    for j in 0..res {
        for i in 0..res {
            let x = Vec3::new(
                b.min.x + (i as f64 + 0.5) / res as f64 * e.x,
                b.min.y + (j as f64 + 0.5) / res as f64 * e.y,
                z,
            );
            values.push(f(&x) as f32);
        }
    }
    Slice {
        res,
        extent: [b.min.x, b.min.y, b.max.x, b.max.y],
        z,
        values,
    }
}

/// Soft occupancy of the normalized stump (binary weights) next to the
/// tree's hard occupancy on a z slice at `z_frac` of the shape's height.
pub fn occupancy_slice(source: &str, eta: f64, psi: f64, z_frac: f64, res: usize) -> Result<SoftSlice, String> {
    check_res(res)?;
    let tree = parse(source)?;
    let sharp = Sharpness::new(eta, psi).map_err(|e| e.to_string())?;
    let soft = tree_to_stump(&tree, DEFAULT_TERM_CAP)
        .map_err(|e| e.to_string())?
        .lift(0.0, 1.0, sharp);
    let s = slice_of(&tree, z_frac, res, |x| soft.eval(x));
    let h = slice_of(&tree, z_frac, res, |x| if tree.contains(x) { 1.0 } else { 0.0 });
    let max_deviation = s
        .values
        .iter()
        .zip(&h.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f32::max);
    Ok(SoftSlice {
        soft: s,
        hard: h,
        max_deviation,
    })
}

pub fn normalize_stats(source: &str) -> Result<NormalizeStats, String> {
    let tree = parse(source)?;
    let raw = tree_to_stump(&tree, DEFAULT_TERM_CAP).map_err(|e| e.to_string())?;
    let b = tree.bounds();
    let e = b.extent();
    // regular lattice over the bounds
    let n = (SIMPLIFY_POINTS as f64).cbrt().ceil() as usize;
    let pts: Vec<Vec3> = (0..n * n * n)
        .map(|i| {
            let (a, bb, c) = (i % n, (i / n) % n, i / (n * n));
            let t = |k: usize| (k as f64 + 0.5) / n as f64;
            b.min + Vec3::new(t(a) * e.x, t(bb) * e.y, t(c) * e.z)
        })
        .collect();
    let stump = simplify_stump(&raw, &pts);
    Ok(NormalizeStats {
        tree_primitives: tree.primitives.len(),
        primitives: stump.k(),
        depth: tree.expr.depth(),
        columns_raw: raw.c(),
        columns: stump.c(),
        stump_json: stump_to_json(&stump),
        scad: export_openscad(&stump),
    })
}

/// Anneals connection matrices with `columns` columns on the tree's own
/// primitives and returns the fitted stump's hard slice.
pub fn fit_columns(source: &str, columns: usize, seed: u64, z_frac: f64, res: usize) -> Result<FitResult, String> {
    check_res(res)?;
    if !(1..=MAX_COLUMNS).contains(&columns) {
        return Err(format!("columns must be within 1..={MAX_COLUMNS}, got {columns}"));
    }
    let tree = parse(source)?;
    let set = sample_balanced(&tree, FIT_POINTS, &tree.bounds(), seed).map_err(|e| e.to_string())?;
    let inst = BpInstance::from_primitives(&tree.primitives, &set.points, &set.target, columns, true)
        .map_err(|e| e.to_string())?;
    let cfg = AnnealConfig {
        seed,
        layout: Some(RowLayout::Paired),
        time_limit_secs: Some(10.0),
        ..Default::default()
    };
    let (m, rep) = solve_anneal(&inst, &cfg).map_err(|e| e.to_string())?;
    let stump = m.to_stump(&tree.primitives);
    let step = rep.objective_trace.len().div_ceil(200).max(1);
    Ok(FitResult {
        columns,
        objective: rep.objective,
        wrong: (rep.objective * set.len() as f64).round() as usize,
        points: set.len(),
        min_columns: rep.min_columns,
        wall_time: rep.wall_time,
        trace: rep.objective_trace.iter().step_by(step).copied().collect(),
        slice: slice_of(&tree, z_frac, res, |x| if stump.eval_hard(x) { 1.0 } else { 0.0 }),
        stump_json: stump_to_json(&stump),
    })
}
