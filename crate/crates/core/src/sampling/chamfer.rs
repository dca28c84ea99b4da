use std::collections::HashMap;

use crate::geometry::Vec3;
use crate::sampling::SamplingError;

/// Uniform spatial hash for nearest-neighbour queries.
pub struct NearestNeighbors<'a> {
    points: &'a [Vec3],
    origin: Vec3,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    max_ring: i64,
}

impl<'a> NearestNeighbors<'a> {
    pub fn new(points: &'a [Vec3]) -> Self {
        let (lo, hi) = points.iter().fold(
            (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
            |(lo, hi), p| (lo.inf(p), hi.sup(p)),
        );
        let ext = if points.is_empty() { Vec3::zeros() } else { hi - lo };
        // cell edge near the mean point spacing, whatever the set's dimensionality
        let n = points.len().max(1) as f64;
        let nonzero: Vec<f64> = ext.iter().copied().filter(|e| *e > 1e-12).collect();
        let cell = match nonzero.len() {
            0 => 1.0,
            d => nonzero.iter().product::<f64>().powf(1.0 / d as f64) / n.powf(1.0 / d as f64),
        }
        .max(ext.max() / 1024.0)
        .max(1e-12);
        let origin = if points.is_empty() { Vec3::zeros() } else { lo };
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(&origin, cell, p)).or_default().push(i);
        }
        let max_ring = (ext.max() / cell).ceil() as i64 + 1;
        Self {
            points,
            origin,
            cell,
            cells,
            max_ring,
        }
    }

    fn key(origin: &Vec3, cell: f64, p: &Vec3) -> [i64; 3] {
        let r = (p - origin) / cell;
        [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64]
    }

    /// Squared distance to the closest stored point.
    pub fn nearest_sq(&self, q: &Vec3) -> f64 {
        let c = Self::key(&self.origin, self.cell, q);
        let mut best = f64::INFINITY;
        let visit = |k: [i64; 3], best: &mut f64| {
            if let Some(ids) = self.cells.get(&k) {
                for &i in ids {
                    *best = best.min((self.points[i] - q).norm_squared());
                }
            }
        };
        // a query far outside the occupied region still needs enough rings
        let reach = (0..3)
            .map(|a| {
                let lo = -c[a];
                let hi = c[a] - self.max_ring;
                lo.max(hi).max(0)
            })
            .max()
            .unwrap_or(0);
        let limit = self.max_ring + reach + 1;
        for ring in 0..=limit {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    let edge = dx.abs() == ring || dy.abs() == ring;
                    if edge {
                        for dz in -ring..=ring {
                            visit([c[0] + dx, c[1] + dy, c[2] + dz], &mut best);
                        }
                    } else {
                        visit([c[0] + dx, c[1] + dy, c[2] - ring], &mut best);
                        visit([c[0] + dx, c[1] + dy, c[2] + ring], &mut best);
                    }
                }
            }
            // every unvisited cell is at least `ring * cell` away
            let bound = ring as f64 * self.cell;
            if best <= bound * bound {
                break;
            }
        }
        best
    }
}

/// Whether nearest-neighbour distances are squared before averaging.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChamferMode {
    #[default]
    Squared,
    Plain,
}

fn one_way(from: &[Vec3], to: &NearestNeighbors<'_>, mode: ChamferMode) -> f64 {
    let total: f64 = from
        .iter()
        .map(|p| {
            let d = to.nearest_sq(p);
            match mode {
                ChamferMode::Squared => d,
                ChamferMode::Plain => d.sqrt(),
            }
        })
        .sum();
    total / from.len() as f64
}

/// Symmetric Chamfer distance in the chosen mode.
pub fn chamfer(a: &[Vec3], b: &[Vec3], mode: ChamferMode) -> Result<f64, SamplingError> {
    if a.is_empty() || b.is_empty() {
        return Err(SamplingError::EmptyInput);
    }
    let na = NearestNeighbors::new(a);
    let nb = NearestNeighbors::new(b);
    Ok(one_way(a, &nb, mode) + one_way(b, &na, mode))
}

/// Mean squared nearest-neighbour distance, summed over both directions.
pub fn chamfer_l2(a: &[Vec3], b: &[Vec3]) -> Result<f64, SamplingError> {
    chamfer(a, b, ChamferMode::Squared)
}

/// O(|a| |b|) reference implementation.
pub fn chamfer_brute_force(a: &[Vec3], b: &[Vec3]) -> f64 {
    let dir = |from: &[Vec3], to: &[Vec3]| {
        from.iter()
            .map(|p| to.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / from.len() as f64
    };
    dir(a, b) + dir(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64, scale: f64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * scale)
            .collect()
    }

    #[test]
    fn basic_values() {
        let a = cloud(50, 1, 1.0);
        assert_eq!(chamfer_l2(&a, &a).unwrap(), 0.0);
        let d = chamfer_l2(&[Vec3::zeros()], &[Vec3::new(1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(chamfer_l2(&[], &a).unwrap_err(), SamplingError::EmptyInput);
        let p = chamfer(&[Vec3::zeros()], &[Vec3::new(2.0, 0.0, 0.0)], ChamferMode::Plain).unwrap();
        assert_eq!(p, 4.0);
    }

    #[test]
    fn matches_brute_force_on_2048_points() {
        let a = cloud(2048, 2, 2.0);
        let b = cloud(2048, 3, 2.0)
            .into_iter()
            .map(|p| p + Vec3::new(0.3, -0.1, 0.0))
            .collect::<Vec<_>>();
        let fast = chamfer_l2(&a, &b).unwrap();
        let slow = chamfer_brute_force(&a, &b);
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn far_query_and_planar_sets() {
        let plane: Vec<Vec3> = (0..100)
            .map(|i| Vec3::new((i % 10) as f64, (i / 10) as f64, 0.0))
            .collect();
        let nn = NearestNeighbors::new(&plane);
        assert_eq!(nn.nearest_sq(&Vec3::new(100.0, 0.0, 0.0)), 91.0 * 91.0);
        assert_eq!(nn.nearest_sq(&Vec3::new(-5.0, -5.0, 3.0)), 59.0);
        let single = [Vec3::new(1.0, 1.0, 1.0)];
        assert_eq!(NearestNeighbors::new(&single).nearest_sq(&Vec3::zeros()), 3.0);
    }

    proptest! {
        #[test]
        fn symmetric_and_translation_invariant(seed in 0u64..1000, n in 1usize..60, m in 1usize..60, shift in -5.0f64..5.0) {
            let a = cloud(n, seed, 1.0);
            let b = cloud(m, seed + 1, 1.5);
            let ab = chamfer_l2(&a, &b).unwrap();
            prop_assert!((ab - chamfer_l2(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!((ab - chamfer_brute_force(&a, &b)).abs() < 1e-12);
            let t = Vec3::new(shift, -shift, 0.5 * shift);
            let at: Vec<Vec3> = a.iter().map(|p| p + t).collect();
            let bt: Vec<Vec3> = b.iter().map(|p| p + t).collect();
            prop_assert!((ab - chamfer_l2(&at, &bt).unwrap()).abs() < 1e-12);
        }
    }
}
