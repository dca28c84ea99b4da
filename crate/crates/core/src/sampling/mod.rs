//! Labelled test points, surface samples and the L2 Chamfer distance.

mod chamfer;
pub mod pointio;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csg::Solid;
use crate::geometry::{Aabb, Vec3};
use crate::io::{marching_cubes, rasterize_field};

pub use chamfer::{chamfer, chamfer_brute_force, chamfer_l2, ChamferMode, NearestNeighbors};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("bounding box is degenerate")]
    DegenerateBox,
    #[error("sample count must be at least 1")]
    ZeroCount,
    #[error("balanced sampling needs an even count, got {0}")]
    OddCount(usize),
    #[error("could not draw {wanted} {deficient} points within {attempts} attempts (got {got})")]
    InfeasibleBalance {
        deficient: &'static str,
        wanted: usize,
        got: usize,
        attempts: usize,
    },
    #[error("no isosurface found at resolution {0}")]
    EmptySurface(usize),
    #[error("point set is empty")]
    EmptyInput,
    #[error("{points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("point {0} lies outside the bounding box")]
    OutsideBox(usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    AnalyticTree,
    LoadedFile,
    /// Balanced sampling was requested but could not be satisfied.
    UniformFallback,
}

/// Sample points with target occupancy bits.
#[derive(Clone, Debug, PartialEq)]
pub struct TestPointSet {
    pub points: Vec<Vec3>,
    pub target: Vec<bool>,
    pub bbox: Aabb,
    pub provenance: Provenance,
}

impl TestPointSet {
    pub fn new(
        points: Vec<Vec3>,
        target: Vec<bool>,
        bbox: Aabb,
        provenance: Provenance,
    ) -> Result<Self, SamplingError> {
        if points.is_empty() {
            return Err(SamplingError::EmptyInput);
        }
        if points.len() != target.len() {
            return Err(SamplingError::LengthMismatch {
                points: points.len(),
                labels: target.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(SamplingError::NonFinite(i));
        }
        if let Some(i) = points.iter().position(|p| !bbox.contains(p)) {
            return Err(SamplingError::OutsideBox(i));
        }
        Ok(Self {
            points,
            target,
            bbox,
            provenance,
        })
    }

    /// Builds a set from loaded data, with the bounds of the points.
    pub fn from_loaded(points: Vec<Vec3>, target: Vec<bool>) -> Result<Self, SamplingError> {
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(SamplingError::NonFinite(i));
        }
        let first = *points.first().ok_or(SamplingError::EmptyInput)?;
        let bbox = points
            .iter()
            .fold(Aabb::new(first, first), |b, p| Aabb::new(b.min.inf(p), b.max.sup(p)));
        Self::new(points, target, bbox, Provenance::LoadedFile)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn inside_count(&self) -> usize {
        self.target.iter().filter(|t| **t).count()
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, bbox: &Aabb) -> Vec3 {
    let e = bbox.extent();
    Vec3::new(
        bbox.min.x + rng.gen::<f64>() * e.x,
        bbox.min.y + rng.gen::<f64>() * e.y,
        bbox.min.z + rng.gen::<f64>() * e.z,
    )
}

/// `n` i.i.d. uniform points in `bbox`, labelled by hard membership.
pub fn sample_uniform(shape: &dyn Solid, n: usize, bbox: &Aabb, seed: u64) -> Result<TestPointSet, SamplingError> {
    if n == 0 {
        return Err(SamplingError::ZeroCount);
    }
    if bbox.is_degenerate() {
        return Err(SamplingError::DegenerateBox);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec3> = (0..n).map(|_| uniform_point(&mut rng, bbox)).collect();
    let target = points.iter().map(|p| shape.contains(p)).collect();
    Ok(TestPointSet {
        points,
        target,
        bbox: *bbox,
        provenance: Provenance::AnalyticTree,
    })
}

/// Exactly `n/2` inside and `n/2` outside points by rejection sampling, at
/// most `1000 n` draws.
pub fn sample_balanced(shape: &dyn Solid, n: usize, bbox: &Aabb, seed: u64) -> Result<TestPointSet, SamplingError> {
    if n == 0 {
        return Err(SamplingError::ZeroCount);
    }
    if !n.is_multiple_of(2) {
        return Err(SamplingError::OddCount(n));
    }
    if bbox.is_degenerate() {
        return Err(SamplingError::DegenerateBox);
    }
    let half = n / 2;
    let attempts = 1000 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inside, mut outside) = (Vec::with_capacity(half), Vec::with_capacity(half));
    for _ in 0..attempts {
        if inside.len() == half && outside.len() == half {
            break;
        }
        let p = uniform_point(&mut rng, bbox);
        if shape.contains(&p) {
            if inside.len() < half {
                inside.push(p);
            }
        } else if outside.len() < half {
            outside.push(p);
        }
    }
    if inside.len() < half || outside.len() < half {
        let (deficient, got) = if inside.len() < half {
            ("inside", inside.len())
        } else {
            ("outside", outside.len())
        };
        return Err(SamplingError::InfeasibleBalance {
            deficient,
            wanted: half,
            got,
            attempts,
        });
    }
    // interleave so prefixes stay roughly balanced
    let mut points = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    for (a, b) in inside.into_iter().zip(outside) {
        points.push(a);
        target.push(true);
        points.push(b);
        target.push(false);
    }
    Ok(TestPointSet {
        points,
        target,
        bbox: *bbox,
        provenance: Provenance::AnalyticTree,
    })
}

/// Balanced sampling that falls back to uniform sampling when one class
/// cannot be filled; the fallback is recorded in the provenance.
pub fn sample_balanced_or_uniform(
    shape: &dyn Solid,
    n: usize,
    bbox: &Aabb,
    seed: u64,
) -> Result<TestPointSet, SamplingError> {
    match sample_balanced(shape, n, bbox, seed) {
        Err(SamplingError::InfeasibleBalance { .. }) | Err(SamplingError::OddCount(_)) => {
            let mut set = sample_uniform(shape, n, bbox, seed)?;
            set.provenance = Provenance::UniformFallback;
            Ok(set)
        }
        other => other,
    }
}

/// `n` points on the boundary of `shape`, drawn area-weighted from a
/// marching-cubes mesh of the shape's field at `resolution` voxels per axis.
pub fn sample_surface(shape: &dyn Solid, n: usize, resolution: usize, seed: u64) -> Result<Vec<Vec3>, SamplingError> {
    sample_surface_in(shape, n, resolution, &shape.bounds(), seed)
}

/// [`sample_surface`] on an explicit grid box.
pub fn sample_surface_in(
    shape: &dyn Solid,
    n: usize,
    resolution: usize,
    bbox: &Aabb,
    seed: u64,
) -> Result<Vec<Vec3>, SamplingError> {
    if n == 0 {
        return Err(SamplingError::ZeroCount);
    }
    if bbox.is_degenerate() {
        return Err(SamplingError::DegenerateBox);
    }
    let grid = rasterize_field(shape, [resolution.max(2); 3], bbox).map_err(|_| SamplingError::DegenerateBox)?;
    let mesh = marching_cubes(&grid, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mesh.sample_points(n, &mut rng)
        .ok_or(SamplingError::EmptySurface(resolution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csg::{parse_csg, CsgExpr, CsgModel};

    #[test]
    fn loaded_points_must_be_finite() {
        let pts = vec![Vec3::zeros(), Vec3::new(f64::NAN, 0.0, 0.0)];
        assert_eq!(
            TestPointSet::from_loaded(pts, vec![true, false]).unwrap_err(),
            SamplingError::NonFinite(1)
        );
    }

    #[test]
    fn sphere_volume_fraction() {
        let m = parse_csg("sphere(r=1)").unwrap();
        let set = sample_uniform(&m, 100_000, &Aabb::cube(1.0), 7).unwrap();
        let frac = set.inside_count() as f64 / set.len() as f64;
        assert!((frac - std::f64::consts::PI / 6.0).abs() < 0.01, "{frac}");
    }

    #[test]
    fn special_shapes_label_trivially() {
        let empty = CsgModel::new(CsgExpr::Empty, vec![]).unwrap();
        let all = CsgModel::new(CsgExpr::Universe, vec![]).unwrap();
        assert_eq!(
            sample_uniform(&empty, 100, &Aabb::cube(1.0), 1).unwrap().inside_count(),
            0
        );
        assert_eq!(
            sample_uniform(&all, 100, &Aabb::cube(1.0), 1).unwrap().inside_count(),
            100
        );
    }

    #[test]
    fn uniform_is_reproducible_and_in_bounds() {
        let m = parse_csg("sphere(r=1)").unwrap();
        let b = Aabb::new(Vec3::new(-1.0, 0.0, 2.0), Vec3::new(3.0, 0.5, 2.5));
        let a = sample_uniform(&m, 500, &b, 3).unwrap();
        assert_eq!(a, sample_uniform(&m, 500, &b, 3).unwrap());
        assert!(a.points.iter().all(|p| b.contains(p)));
        assert!(sample_uniform(&m, 10, &Aabb::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0)), 3).is_err());
        assert_eq!(sample_uniform(&m, 0, &b, 3).unwrap_err(), SamplingError::ZeroCount);
    }

    #[test]
    fn balanced_thin_plate() {
        let m = parse_csg("box(2, 2, 0.05)").unwrap();
        let set = sample_balanced(&m, 2048, &m.bounds(), 11).unwrap();
        assert_eq!(set.inside_count(), 1024);
        assert_eq!(set.len(), 2048);
        for (p, t) in set.points.iter().zip(&set.target) {
            assert_eq!(m.contains(p), *t);
        }
        let other = sample_balanced(&m, 2048, &m.bounds(), 12).unwrap();
        assert_ne!(other.points, set.points);
        assert_eq!(other.inside_count(), 1024);
    }

    #[test]
    fn balanced_empty_is_infeasible() {
        let empty = CsgModel::new(CsgExpr::Empty, vec![]).unwrap();
        let err = sample_balanced(&empty, 10, &Aabb::cube(1.0), 1).unwrap_err();
        assert!(matches!(
            err,
            SamplingError::InfeasibleBalance {
                deficient: "inside",
                ..
            }
        ));
        assert_eq!(
            sample_balanced(&empty, 9, &Aabb::cube(1.0), 1).unwrap_err(),
            SamplingError::OddCount(9)
        );
        let fb = sample_balanced_or_uniform(&empty, 10, &Aabb::cube(1.0), 1).unwrap();
        assert_eq!(fb.provenance, Provenance::UniformFallback);
    }

    #[test]
    fn surface_points_on_sphere() {
        let m = parse_csg("sphere(r=1)").unwrap();
        let pts = sample_surface(&m, 10_000, 128, 5).unwrap();
        assert_eq!(pts.len(), 10_000);
        let worst = pts.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 0.03, "{worst}");
    }

    #[test]
    fn surface_points_on_box() {
        let m = parse_csg("rotate(10, 20, 30, box(1.5, 1, 0.5))").unwrap();
        let res = 64;
        let pts = sample_surface(&m, 5000, res, 5).unwrap();
        let b = m.bounds();
        let voxel = (b.extent() / res as f64).norm();
        let worst = pts.iter().map(|p| m.primitives[0].sdf(p).abs()).fold(0.0, f64::max);
        assert!(worst < voxel, "{worst} vs {voxel}");
        assert_eq!(sample_surface(&m, 0, res, 5).unwrap_err(), SamplingError::ZeroCount);
    }

    #[test]
    fn surface_of_empty_shape_errors() {
        let m = parse_csg("difference(sphere(1), sphere(2))").unwrap();
        assert!(matches!(
            sample_surface(&m, 10, 16, 1),
            Err(SamplingError::EmptySurface(16))
        ));
    }
}
