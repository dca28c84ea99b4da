use std::collections::BTreeMap;

use serde::Serialize;

use crate::csg::{ParamClass, SoftStump};
use crate::fit::FitError;
use crate::sampling::TestPointSet;

/// Weight of the primitive term in the total loss.
pub const DEFAULT_LAMBDA: f64 = 0.001;

fn check(pts: &TestPointSet) -> Result<(), FitError> {
    if pts.is_empty() {
        Err(FitError::EmptyPoints)
    } else {
        Ok(())
    }
}

fn target(t: bool) -> f64 {
    if t {
        1.0
    } else {
        0.0
    }
}

/// Mean squared error between soft occupancy and the target bits.
pub fn loss_recon(s: &SoftStump, pts: &TestPointSet) -> Result<f64, FitError> {
    check(pts)?;
    let sum: f64 = pts
        .points
        .iter()
        .zip(&pts.target)
        .map(|(x, &t)| (s.eval(x) - target(t)).powi(2))
        .sum();
    Ok(sum / pts.len() as f64)
}

/// For each primitive, the index of the test point closest to its surface.
fn closest(s: &SoftStump, pts: &TestPointSet) -> Vec<(usize, f64)> {
    s.primitives
        .iter()
        .map(|p| {
            pts.points
                .iter()
                .enumerate()
                .map(|(i, x)| (i, p.sdf(x)))
                .fold((0, f64::INFINITY), |a, b| if b.1 * b.1 < a.1 * a.1 { b } else { a })
        })
        .collect()
}

/// Mean over primitives of the smallest squared SDF over the test points.
pub fn loss_primitive(s: &SoftStump, pts: &TestPointSet) -> Result<f64, FitError> {
    check(pts)?;
    if s.k() == 0 {
        return Ok(0.0);
    }
    Ok(closest(s, pts).iter().map(|(_, d)| d * d).sum::<f64>() / s.k() as f64)
}

pub fn loss_total(s: &SoftStump, pts: &TestPointSet, lambda: f64) -> Result<f64, FitError> {
    if lambda < 0.0 {
        return Err(FitError::NegativeLambda(lambda));
    }
    let prim = if lambda == 0.0 { 0.0 } else { loss_primitive(s, pts)? };
    Ok(loss_recon(s, pts)? + lambda * prim)
}

/// `L_total` and its gradient in the layout of [`SoftStump::params`].
pub fn loss_total_grad(s: &SoftStump, pts: &TestPointSet, lambda: f64) -> Result<(f64, Vec<f64>), FitError> {
    check(pts)?;
    if lambda < 0.0 {
        return Err(FitError::NegativeLambda(lambda));
    }
    let n = pts.len() as f64;
    let mut grad = vec![0.0; s.param_count()];
    let mut recon = 0.0;
    for (x, &t) in pts.points.iter().zip(&pts.target) {
        let y = target(t);
        let mut r = 0.0;
        s.eval_grad_by(
            x,
            |v| {
                r = v - y;
                2.0 * r / n
            },
            &mut grad,
        );
        recon += r * r;
    }
    let mut loss = recon / n;
    if lambda > 0.0 && s.k() > 0 {
        let k = s.k() as f64;
        let mut cursor = 0;
        let mut prim = 0.0;
        for (p, (i, d)) in s.primitives.iter().zip(closest(s, pts)) {
            prim += d * d;
            let (_, g) = p.sdf_grad(&pts.points[i]);
            let scale = lambda * 2.0 * d / k;
            let a = p.kind().arity();
            for (slot, v) in g.q[..a].iter().chain(&g.t).chain(&g.r).enumerate() {
                grad[cursor + slot] += scale * v;
            }
            cursor += a + 7;
        }
        loss += lambda * prim / k;
    }
    Ok((loss, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_parameter: String,
    /// Largest relative error per parameter class.
    pub per_class: BTreeMap<String, f64>,
    pub checked: usize,
}

/// Compares the analytic gradient of `L_total` with central differences of
/// step `h` for every parameter. Relative errors use `max(|a|, |f|, 1e-6)` as
/// the denominator.
pub fn grad_check(s: &SoftStump, pts: &TestPointSet, lambda: f64, h: f64) -> Result<GradCheckReport, FitError> {
    let (_, analytic) = loss_total_grad(s, pts, lambda)?;
    let theta = s.params();
    let names = s.param_names();
    let mut per_class: BTreeMap<String, f64> = BTreeMap::new();
    let mut worst = (0.0, String::new());
    for (i, (name, class)) in names.iter().enumerate() {
        let mut probe = theta.clone();
        probe[i] = theta[i] + h;
        let up = loss_total(&s.with_params(&probe)?, pts, lambda)?;
        probe[i] = theta[i] - h;
        let dn = loss_total(&s.with_params(&probe)?, pts, lambda)?;
        let fd = (up - dn) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
        let e = per_class.entry(class_name(*class).into()).or_insert(0.0);
        *e = e.max(rel);
        if rel > worst.0 || worst.1.is_empty() {
            worst = (rel, name.clone());
        }
    }
    Ok(GradCheckReport {
        max_rel_error: worst.0,
        worst_parameter: worst.1,
        per_class,
        checked: names.len(),
    })
}

fn class_name(c: ParamClass) -> &'static str {
    match c {
        ParamClass::Intrinsic => "intrinsic",
        ParamClass::Translation => "translation",
        ParamClass::Rotation => "rotation",
        ParamClass::ComplementWeight => "w_c",
        ParamClass::IntersectionWeight => "w_i",
        ParamClass::UnionWeight => "w_u",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csg::parse_csg;
    use crate::geometry::{Aabb, Pose, Primitive, Sharpness, Vec3};
    use crate::sampling::{sample_uniform, Provenance};

    fn pts(points: Vec<Vec3>, target: Vec<bool>) -> TestPointSet {
        TestPointSet::new(points, target, Aabb::cube(5.0), Provenance::LoadedFile).unwrap()
    }

    fn sphere_stump(r: f64, t: Vec3) -> SoftStump {
        let p = Primitive::sphere(r, Pose::from_translation(t)).unwrap();
        SoftStump::new(vec![p], vec![0.0], vec![vec![1.0]], vec![1.0], Sharpness::default()).unwrap()
    }

    #[test]
    fn recon_examples() {
        // one empty column at union weight 0.5 gives T = 0.5 everywhere
        let half = SoftStump::new(vec![], vec![], vec![], vec![0.5], Sharpness::default()).unwrap();
        let set = pts(vec![Vec3::zeros(), Vec3::x()], vec![true, false]);
        assert_eq!(half.eval(&Vec3::new(0.3, 2.0, -1.0)), 0.5);
        assert_eq!(loss_recon(&half, &set).unwrap(), 0.25);
        let sharp = sphere_stump(1.0, Vec3::zeros());
        let far = pts(vec![Vec3::zeros(), Vec3::new(3.0, 0.0, 0.0)], vec![true, false]);
        assert!(loss_recon(&sharp, &far).unwrap() < 1e-12);
    }

    #[test]
    fn recon_against_direct_formula() {
        let m = parse_csg("union(sphere(r=0.6), translate(0.5, 0, 0, sphere(r=0.5)))").unwrap();
        let stump = crate::csg::tree_to_stump(&m, 16).unwrap();
        let mut soft = stump.lift(0.2, 0.8, Sharpness::new(10.0, 5.0).unwrap());
        soft.primitives[1] = Primitive::sphere(0.45, Pose::from_translation(Vec3::new(0.55, 0.05, 0.0))).unwrap();
        let set = sample_uniform(&m, 500, &Aabb::cube(1.2), 4).unwrap();
        // independent evaluation of the relaxed layers
        let direct = |x: &Vec3| {
            let f: Vec<f64> = soft
                .primitives
                .iter()
                .zip(&soft.w_c)
                .map(|(p, c)| {
                    let d = p.sdf(x);
                    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
                    c * sig(10.0 * d) + (1.0 - c) * sig(-10.0 * d)
                })
                .collect();
            let wavg = |v: &[f64], beta: f64| {
                let m = v.iter().map(|a| beta * a).fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = v.iter().map(|a| (beta * a - m).exp()).collect();
                v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
            };
            let s: Vec<f64> = (0..soft.c())
                .map(|j| {
                    let col: Vec<f64> = (0..soft.k())
                        .map(|k| soft.w_i[k][j] * f[k] + 1.0 - soft.w_i[k][j])
                        .collect();
                    wavg(&col, -5.0)
                })
                .collect();
            let b: Vec<f64> = s.iter().zip(&soft.w_u).map(|(s, w)| s * w).collect();
            wavg(&b, 5.0)
        };
        let expect: f64 = set
            .points
            .iter()
            .zip(&set.target)
            .map(|(x, &t)| (direct(x) - if t { 1.0 } else { 0.0 }).powi(2))
            .sum::<f64>()
            / set.len() as f64;
        let got = loss_recon(&soft, &set).unwrap();
        assert!(got > 0.0);
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn primitive_loss_examples() {
        let s = sphere_stump(1.0, Vec3::zeros());
        let set = pts(
            vec![Vec3::new(0.0, 0.0, 3.0), Vec3::new(0.0, 0.0, 4.0)],
            vec![false, false],
        );
        assert_eq!(loss_primitive(&s, &set).unwrap(), 4.0);
        let p2 = Primitive::sphere(1.0, Pose::from_translation(Vec3::new(0.0, 0.0, 3.0))).unwrap();
        let two = SoftStump::new(
            vec![s.primitives[0], p2],
            vec![0.0, 0.0],
            vec![vec![1.0], vec![1.0]],
            vec![1.0],
            Sharpness::default(),
        )
        .unwrap();
        let touch = pts(vec![Vec3::new(0.0, 0.0, 2.0)], vec![false]);
        assert_eq!(loss_primitive(&two, &touch).unwrap(), 0.5);
        let empty = TestPointSet {
            points: vec![],
            target: vec![],
            bbox: Aabb::cube(1.0),
            provenance: Provenance::LoadedFile,
        };
        assert_eq!(loss_primitive(&s, &empty).unwrap_err(), FitError::EmptyPoints);
    }

    #[test]
    fn total_is_linear_in_lambda() {
        let s = sphere_stump(0.9, Vec3::new(0.1, 0.0, 0.0));
        let set = pts(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 3.0)], vec![true, false]);
        let recon = loss_recon(&s, &set).unwrap();
        let prim = loss_primitive(&s, &set).unwrap();
        assert_eq!(loss_total(&s, &set, 0.0).unwrap(), recon);
        let one = loss_total(&s, &set, 0.001).unwrap() - recon;
        let two = loss_total(&s, &set, 0.002).unwrap() - recon;
        assert!((two - 2.0 * one).abs() < 1e-15);
        assert!((one - 0.001 * prim).abs() < 1e-15);
        assert!(loss_total(&s, &set, -1.0).is_err());
        assert_eq!(DEFAULT_LAMBDA, 0.001);
    }

    fn random_soft(seed: u64) -> SoftStump {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let prims = vec![
            Primitive::cuboid(
                [0.8, 1.1, 0.6],
                Pose::new(Vec3::new(0.1, -0.2, 0.0), [0.9, 0.2, -0.3, 0.1]).unwrap(),
            )
            .unwrap(),
            Primitive::sphere(0.7, Pose::from_translation(Vec3::new(-0.3, 0.1, 0.2))).unwrap(),
            Primitive::cone(0.6, Pose::new(Vec3::new(0.0, 0.0, 0.5), [0.8, 0.0, 0.4, 0.1]).unwrap()).unwrap(),
        ];
        let mut w = || rng.gen_range(0.05..0.95);
        let w_c = vec![w(), w(), w()];
        let w_i = (0..3).map(|_| vec![w(), w()]).collect();
        let w_u = vec![w(), w()];
        SoftStump::new(prims, w_c, w_i, w_u, Sharpness::new(8.0, 4.0).unwrap()).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = random_soft(1);
        let m = parse_csg("sphere(r=1)").unwrap();
        let set = sample_uniform(&m, 64, &Aabb::cube(1.2), 2).unwrap();
        let rep = grad_check(&s, &set, 0.01, 1e-5).unwrap();
        assert!(rep.max_rel_error < 1e-4, "{rep:?}");
        assert_eq!(rep.checked, s.param_count());
    }

    #[test]
    fn unused_weights_have_zero_gradient() {
        let mut s = random_soft(2);
        s.w_u = vec![0.0, 0.0];
        let m = parse_csg("sphere(r=1)").unwrap();
        let set = sample_uniform(&m, 32, &Aabb::cube(1.2), 3).unwrap();
        let (_, g) = loss_total_grad(&s, &set, 0.0).unwrap();
        let off = s.weight_offset() + s.k();
        assert!(g[off..off + s.k() * s.c()].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn eta_affects_recon_but_not_primitive_gradients() {
        let s = random_soft(3);
        let mut sharp = s.clone();
        sharp.sharpness.eta *= 2.0;
        let m = parse_csg("sphere(r=1)").unwrap();
        let set = sample_uniform(&m, 32, &Aabb::cube(1.2), 5).unwrap();
        let (_, g1) = loss_total_grad(&s, &set, 0.0).unwrap();
        let (_, g2) = loss_total_grad(&sharp, &set, 0.0).unwrap();
        assert_ne!(g1, g2);
        let prim_only = |st: &SoftStump| {
            let (_, a) = loss_total_grad(st, &set, 1.0).unwrap();
            let (_, b) = loss_total_grad(st, &set, 0.0).unwrap();
            a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<f64>>()
        };
        let (p1, p2) = (prim_only(&s), prim_only(&sharp));
        assert!(p1.iter().zip(&p2).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
