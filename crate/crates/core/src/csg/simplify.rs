use crate::csg::stump::Stump;
use crate::geometry::Vec3;

/// Prunes a stump against sample points without changing T on any of them.
///
/// Columns outside the union are dropped first, then each remaining column
/// (in order) is removed if every point it covers is covered by another
/// surviving column. Rows no longer selected by any column are dropped last.
pub fn simplify_stump(s: &Stump, points: &[Vec3]) -> Stump {
    let active: Vec<usize> = (0..s.c()).filter(|&j| s.w_u[j]).collect();
    let covers: Vec<Vec<bool>> = {
        let lits: Vec<Vec<bool>> = points.iter().map(|x| s.literals(x)).collect();
        active
            .iter()
            .map(|&j| lits.iter().map(|l| (0..s.k()).all(|k| !s.w_i[k][j] || l[k])).collect())
            .collect()
    };
    let mut count = vec![0usize; points.len()];
    for cov in &covers {
        for (n, &c) in cov.iter().enumerate() {
            count[n] += c as usize;
        }
    }
    let mut keep = vec![true; active.len()];
    for (a, cov) in covers.iter().enumerate() {
        let redundant = cov.iter().zip(&count).all(|(&c, &n)| !c || n >= 2);
        if redundant {
            keep[a] = false;
            for (n, &c) in cov.iter().enumerate() {
                count[n] -= c as usize;
            }
        }
    }
    let cols: Vec<usize> = active.iter().zip(&keep).filter(|(_, &k)| k).map(|(&j, _)| j).collect();
    let rows: Vec<usize> = (0..s.k()).filter(|&k| cols.iter().any(|&j| s.w_i[k][j])).collect();
    Stump {
        primitives: rows.iter().map(|&k| s.primitives[k]).collect(),
        w_c: rows.iter().map(|&k| s.w_c[k]).collect(),
        w_i: rows
            .iter()
            .map(|&k| cols.iter().map(|&j| s.w_i[k][j]).collect())
            .collect(),
        w_u: vec![true; cols.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, Primitive};

    fn grid() -> Vec<Vec3> {
        let mut pts = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                for k in 0..12 {
                    pts.push(Vec3::new(i as f64, j as f64, k as f64) * (4.0 / 11.0) - Vec3::repeat(2.0));
                }
            }
        }
        pts
    }

    fn sphere(r: f64, x: f64) -> Primitive {
        Primitive::sphere(r, Pose::from_translation(Vec3::new(x, 0.0, 0.0))).unwrap()
    }

    #[test]
    fn all_unselected_is_empty() {
        let s = Stump::new(
            vec![sphere(1.0, 0.0)],
            vec![false],
            vec![vec![true, true]],
            vec![false, false],
        )
        .unwrap();
        let out = simplify_stump(&s, &grid());
        assert_eq!(out, Stump::empty());
    }

    #[test]
    fn duplicate_columns_collapse() {
        let s = Stump::new(
            vec![sphere(1.0, 0.0), sphere(0.5, 1.0)],
            vec![false, false],
            vec![vec![true, true, false], vec![false, false, true]],
            vec![true, true, true],
        )
        .unwrap();
        let pts = grid();
        let out = simplify_stump(&s, &pts);
        assert_eq!(out.c(), 2);
        for x in &pts {
            assert_eq!(out.eval_hard(x), s.eval_hard(x));
        }
    }

    #[test]
    fn nested_union_keeps_outer() {
        let s = Stump::new(
            vec![sphere(1.5, 0.0), sphere(0.5, 0.2)],
            vec![false, false],
            vec![vec![true, false], vec![false, true]],
            vec![true, true],
        )
        .unwrap();
        let pts = grid();
        let out = simplify_stump(&s, &pts);
        assert_eq!(out.c(), 1);
        assert_eq!(out.k(), 1);
        assert_eq!(out.primitives[0].q(), &[1.5]);
        for x in &pts {
            assert_eq!(out.eval_hard(x), s.eval_hard(x));
        }
    }
}
