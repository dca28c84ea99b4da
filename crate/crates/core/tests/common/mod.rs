#![allow(dead_code)]

use std::io::Write;

use rand::Rng;
use stump_core::csg::{CsgExpr, CsgModel, SoftStump, Stump};
use stump_core::geometry::{Pose, Primitive, PrimitiveKind, Sharpness, Vec3};

/// Writes straight to the stderr handle so the line survives libtest capture.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {id} [{name}]: {verdict} ({detail})");
}

pub fn random_pose(rng: &mut impl Rng, spread: f64) -> Pose {
    let t = Vec3::new(
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
    );
    let mut q = [0.0; 4];
    loop {
        q.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let n: f64 = q.iter().map(|v| v * v).sum();
        if n > 0.05 && n <= 1.0 {
            break;
        }
    }
    Pose::new(t, q).unwrap()
}

pub fn random_kind(rng: &mut impl Rng) -> PrimitiveKind {
    PrimitiveKind::ALL[rng.gen_range(0..4)]
}

pub fn random_primitive_of(rng: &mut impl Rng, kind: PrimitiveKind, spread: f64) -> Primitive {
    let q: Vec<f64> = match kind {
        PrimitiveKind::Box => (0..3).map(|_| rng.gen_range(0.2..0.8)).collect(),
        PrimitiveKind::Sphere => vec![rng.gen_range(0.2..0.9)],
        PrimitiveKind::Cylinder => vec![rng.gen_range(0.1..0.5)],
        PrimitiveKind::Cone => vec![rng.gen_range(15f64..60.0).to_radians()],
    };
    Primitive::new(kind, &q, random_pose(rng, spread)).unwrap()
}

pub fn random_primitive(rng: &mut impl Rng) -> Primitive {
    let kind = random_kind(rng);
    random_primitive_of(rng, kind, 0.6)
}

fn random_expr(rng: &mut impl Rng, k: usize, depth: usize) -> CsgExpr {
    if depth == 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..40) {
            0 => CsgExpr::Universe,
            1 => CsgExpr::Empty,
            _ => CsgExpr::Leaf(rng.gen_range(0..k)),
        };
    }
    let op = rng.gen_range(0..7);
    let a = random_expr(rng, k, depth - 1);
    if op == 6 {
        return CsgExpr::complement(a);
    }
    let b = random_expr(rng, k, depth - 1);
    match op {
        0 | 1 => CsgExpr::union(a, b),
        2 | 3 => CsgExpr::intersection(a, b),
        _ => CsgExpr::difference(a, b),
    }
}

/// Random tree with at most `max_k` primitives and depth at most `max_depth`.
pub fn random_tree(rng: &mut impl Rng, max_k: usize, max_depth: usize) -> CsgModel {
    let k = rng.gen_range(1..=max_k);
    let prims = (0..k).map(|_| random_primitive(rng)).collect();
    CsgModel::new(random_expr(rng, k, max_depth), prims).unwrap()
}

pub fn random_tree_over(rng: &mut impl Rng, prims: Vec<Primitive>, max_depth: usize) -> CsgModel {
    let k = prims.len();
    CsgModel::new(random_expr(rng, k, max_depth), prims).unwrap()
}

pub fn random_stump(rng: &mut impl Rng, max_k: usize, max_c: usize) -> Stump {
    let k = rng.gen_range(1..=max_k);
    let c = rng.gen_range(1..=max_c);
    let prims = (0..k).map(|_| random_primitive(rng)).collect();
    let w_c = (0..k).map(|_| rng.gen_bool(0.3)).collect();
    let w_i = (0..k).map(|_| (0..c).map(|_| rng.gen_bool(0.5)).collect()).collect();
    let w_u = (0..c).map(|_| rng.gen_bool(0.8)).collect();
    Stump::new(prims, w_c, w_i, w_u).unwrap()
}

pub fn random_soft_stump(rng: &mut impl Rng, max_k: usize, max_c: usize) -> SoftStump {
    let k = rng.gen_range(1..=max_k);
    let c = rng.gen_range(1..=max_c);
    let prims = (0..k).map(|_| random_primitive(rng)).collect();
    let mut w = || rng.gen_range(0.05..0.95);
    let w_c = (0..k).map(|_| w()).collect();
    let w_i = (0..k).map(|_| (0..c).map(|_| w()).collect()).collect();
    let w_u = (0..c).map(|_| w()).collect();
    SoftStump::new(prims, w_c, w_i, w_u, Sharpness::default()).unwrap()
}

pub fn uniform_points(rng: &mut impl Rng, n: usize, half: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
            )
        })
        .collect()
}
