use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::csg::{ParamClass, SoftStump};
use crate::fit::loss::{loss_total_grad, DEFAULT_LAMBDA};
use crate::fit::{FitError, FitReport, Instant, SolverKind};
use crate::geometry::PrimitiveKind;
use crate::sampling::TestPointSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub lr: f64,
    pub iterations: usize,
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub freeze_weights: bool,
    pub freeze_primitives: bool,
    pub time_limit_secs: Option<f64>,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            iterations: 2000,
            lambda: DEFAULT_LAMBDA,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            freeze_weights: false,
            freeze_primitives: false,
            time_limit_secs: None,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Map {
    /// theta = exp(u)
    Log,
    /// theta = exp(u), capped below pi/2
    ConeLog,
    Free,
    /// theta = sigmoid(u)
    Logit,
}

const CONE_MAX: f64 = FRAC_PI_2 - 1e-6;
const LOGIT_MAX: f64 = 30.0;

fn maps(s: &SoftStump) -> Vec<Map> {
    let mut out = Vec::with_capacity(s.param_count());
    for p in &s.primitives {
        let m = if p.kind() == PrimitiveKind::Cone {
            Map::ConeLog
        } else {
            Map::Log
        };
        out.extend(std::iter::repeat_n(m, p.kind().arity()));
        out.extend([Map::Free; 7]);
    }
    out.resize(s.param_count(), Map::Logit);
    out
}

fn encode(theta: &[f64], maps: &[Map]) -> Vec<f64> {
    theta
        .iter()
        .zip(maps)
        .map(|(&v, m)| match m {
            Map::Log | Map::ConeLog => v.ln(),
            Map::Free => v,
            Map::Logit => {
                let w = v.clamp(1e-12, 1.0 - 1e-12);
                (w / (1.0 - w)).ln().clamp(-LOGIT_MAX, LOGIT_MAX)
            }
        })
        .collect()
}

fn decode(u: &[f64], maps: &[Map]) -> Vec<f64> {
    u.iter()
        .zip(maps)
        .map(|(&v, m)| match m {
            Map::Log => v.exp(),
            Map::ConeLog => v.exp().min(CONE_MAX),
            Map::Free => v,
            Map::Logit => 1.0 / (1.0 + (-v).exp()),
        })
        .collect()
}

/// Gradient descent with Adam moments on log intrinsics, free poses and
/// logit weights. Quaternions are re-normalized after every step. Returns
/// the iterate with the lowest `L_total` seen.
pub fn refine_continuous(
    init: &SoftStump,
    pts: &TestPointSet,
    cfg: &OptimConfig,
) -> Result<(SoftStump, FitReport), FitError> {
    let start = Instant::now();
    let maps = maps(init);
    let classes: Vec<ParamClass> = init.param_names().into_iter().map(|(_, c)| c).collect();
    let names = init.param_names();
    let frozen: Vec<bool> = classes
        .iter()
        .map(|c| {
            if c.is_weight() {
                cfg.freeze_weights
            } else {
                cfg.freeze_primitives
            }
        })
        .collect();
    let quats: Vec<usize> = {
        let mut v = Vec::new();
        let mut cursor = 0;
        for p in &init.primitives {
            let a = p.kind().arity();
            v.push(cursor + a + 3);
            cursor += a + 7;
        }
        v
    };

    let mut u = encode(&init.params(), &maps);
    let mut m1 = vec![0.0; u.len()];
    let mut m2 = vec![0.0; u.len()];
    let mut current = init.clone();
    let mut best: Option<(f64, SoftStump)> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;

    for it in 0..=cfg.iterations {
        let (loss, grad) = loss_total_grad(&current, pts, cfg.lambda)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            let bad = grad
                .iter()
                .position(|g| !g.is_finite())
                .map_or("loss", |i| names[i].0.as_str());
            return Err(FitError::NonFinite {
                iteration: it,
                parameter: bad.to_string(),
            });
        }
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, current.clone()));
        }
        trace.push(best.as_ref().unwrap().0);
        let timed_out = cfg.time_limit_secs.is_some_and(|l| start.elapsed().as_secs_f64() > l);
        if it == cfg.iterations || timed_out {
            break;
        }
        iterations += 1;

        let theta = current.params();
        let t = (it + 1) as i32;
        let (c1, c2) = (1.0 - cfg.beta1.powi(t), 1.0 - cfg.beta2.powi(t));
        for i in 0..u.len() {
            if frozen[i] {
                continue;
            }
            let chain = match maps[i] {
                Map::Log | Map::ConeLog => theta[i],
                Map::Free => 1.0,
                Map::Logit => theta[i] * (1.0 - theta[i]),
            };
            let g = grad[i] * chain;
            m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g;
            m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g * g;
            u[i] -= cfg.lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + cfg.epsilon);
            match maps[i] {
                Map::ConeLog => u[i] = u[i].min(CONE_MAX.ln()),
                Map::Logit => u[i] = u[i].clamp(-LOGIT_MAX, LOGIT_MAX),
                _ => {}
            }
        }
        for &q in &quats {
            let n = u[q..q + 4].iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-9 {
                u[q..q + 4].iter_mut().for_each(|v| *v /= n);
            }
        }
        let mut next = decode(&u, &maps);
        for i in 0..next.len() {
            if frozen[i] {
                next[i] = theta[i];
            }
        }
        current = current.with_params(&next)?;
    }

    let (objective, stump) = best.expect("at least one evaluation");
    Ok((
        stump,
        FitReport {
            solver: SolverKind::Continuous,
            objective,
            objective_trace: trace,
            iterations,
            wall_time: start.elapsed().as_secs_f64(),
            min_columns: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csg::parse_csg;
    use crate::fit::loss::loss_recon;
    use crate::geometry::{Aabb, Pose, Primitive, Sharpness, Vec3};
    use crate::sampling::sample_uniform;

    fn sphere(r: f64, t: Vec3) -> Primitive {
        Primitive::sphere(r, Pose::from_translation(t)).unwrap()
    }

    #[test]
    fn zero_iterations_returns_init() {
        let s = SoftStump::new(
            vec![sphere(0.8, Vec3::zeros())],
            vec![0.01],
            vec![vec![0.99]],
            vec![0.99],
            Sharpness::default(),
        )
        .unwrap();
        let m = parse_csg("sphere(r=1)").unwrap();
        let set = sample_uniform(&m, 200, &Aabb::cube(1.5), 1).unwrap();
        let cfg = OptimConfig {
            iterations: 0,
            ..Default::default()
        };
        let (out, rep) = refine_continuous(&s, &set, &cfg).unwrap();
        assert_eq!(out, s);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.objective_trace.len(), 1);
    }

    #[test]
    fn recovers_sphere_radius() {
        let s = SoftStump::new(
            vec![sphere(0.8, Vec3::zeros())],
            vec![0.01],
            vec![vec![0.99]],
            vec![0.99],
            Sharpness::default(),
        )
        .unwrap();
        let m = parse_csg("sphere(r=1)").unwrap();
        let set = sample_uniform(&m, 2000, &Aabb::cube(1.5), 2).unwrap();
        let cfg = OptimConfig {
            freeze_weights: true,
            ..Default::default()
        };
        let before = loss_recon(&s, &set).unwrap();
        let (out, rep) = refine_continuous(&s, &set, &cfg).unwrap();
        let r = out.primitives[0].q()[0];
        assert!((r - 1.0).abs() < 0.02, "radius {r}");
        assert!(loss_recon(&out, &set).unwrap() <= 0.1 * before);
        assert!(rep.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.w_u, s.w_u);
    }

    #[test]
    fn two_sphere_union_improves() {
        let truth =
            parse_csg("union(translate(-0.4, 0, 0, sphere(r=0.6)), translate(0.4, 0, 0, sphere(r=0.5)))").unwrap();
        let set = sample_uniform(&truth, 2000, &Aabb::cube(1.2), 3).unwrap();
        let s = SoftStump::new(
            vec![
                sphere(0.6, Vec3::new(-0.5, 0.08, 0.0)),
                sphere(0.5, Vec3::new(0.33, -0.05, 0.1)),
            ],
            vec![0.01, 0.01],
            vec![vec![0.99, 0.01], vec![0.01, 0.99]],
            vec![0.99, 0.99],
            Sharpness::default(),
        )
        .unwrap();
        let before = loss_recon(&s, &set).unwrap();
        let (out, _) = refine_continuous(&s, &set, &OptimConfig::default()).unwrap();
        assert!(loss_recon(&out, &set).unwrap() <= 0.5 * before);
    }

    #[test]
    fn non_finite_is_reported() {
        let s = SoftStump::new(
            vec![sphere(1.0, Vec3::zeros())],
            vec![0.0],
            vec![vec![1.0]],
            vec![1.0],
            Sharpness::default(),
        )
        .unwrap();
        let mut set = sample_uniform(&parse_csg("sphere(r=1)").unwrap(), 10, &Aabb::cube(1.5), 1).unwrap();
        set.points[3] = Vec3::new(f64::NAN, 0.0, 0.0);
        let err = refine_continuous(&s, &set, &OptimConfig::default()).unwrap_err();
        assert!(matches!(err, FitError::NonFinite { iteration: 0, .. }), "{err}");
    }
}
