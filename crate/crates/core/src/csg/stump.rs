//! Three-layer stump: complement layer (one bit per primitive), intersection
//! layer (K x C selection matrix) and a single union node (C bits).

use crate::csg::expr::{CsgExpr, CsgModel};
use crate::csg::{CsgError, Solid};
use crate::geometry::{sigmoid, Aabb, GeometryError, Pose, Primitive, Sharpness, Vec3};

/// Binary stump.
#[derive(Clone, Debug, PartialEq)]
pub struct Stump {
    pub primitives: Vec<Primitive>,
    pub w_c: Vec<bool>,
    /// Row `k` holds the selections of primitive `k` across the C columns.
    pub w_i: Vec<Vec<bool>>,
    pub w_u: Vec<bool>,
}

fn check_dims<T>(k: usize, w_c: usize, w_i: &[Vec<T>], w_u: usize) -> Result<(), CsgError> {
    if w_c != k {
        return Err(CsgError::Dimension(format!("w_c has {w_c} entries, expected {k}")));
    }
    if w_i.len() != k {
        return Err(CsgError::Dimension(format!("w_i has {} rows, expected {k}", w_i.len())));
    }
    for (row, r) in w_i.iter().enumerate() {
        if r.len() != w_u {
            return Err(CsgError::Dimension(format!(
                "w_i row {row} has {} entries, expected {w_u}",
                r.len()
            )));
        }
    }
    Ok(())
}

impl Stump {
    pub fn new(
        primitives: Vec<Primitive>,
        w_c: Vec<bool>,
        w_i: Vec<Vec<bool>>,
        w_u: Vec<bool>,
    ) -> Result<Self, CsgError> {
        check_dims(primitives.len(), w_c.len(), &w_i, w_u.len())?;
        Ok(Self {
            primitives,
            w_c,
            w_i,
            w_u,
        })
    }

    /// The stump with no primitives and no columns (T = 0 everywhere).
    pub fn empty() -> Self {
        Self {
            primitives: Vec::new(),
            w_c: Vec::new(),
            w_i: Vec::new(),
            w_u: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.primitives.len()
    }

    pub fn c(&self) -> usize {
        self.w_u.len()
    }

    /// Complement-layer output F_k for every primitive.
    pub fn literals(&self, x: &Vec3) -> Vec<bool> {
        self.primitives
            .iter()
            .zip(&self.w_c)
            .map(|(p, &c)| p.occupancy_hard(x) != c)
            .collect()
    }

    /// Hard column values S_j given complement-layer outputs.
    pub fn columns_from_literals(&self, lits: &[bool]) -> Vec<bool> {
        (0..self.c())
            .map(|j| (0..self.k()).all(|k| !self.w_i[k][j] || lits[k]))
            .collect()
    }

    pub fn eval_hard(&self, x: &Vec3) -> bool {
        let lits = self.literals(x);
        (0..self.c()).any(|j| self.w_u[j] && (0..self.k()).all(|k| !self.w_i[k][j] || lits[k]))
    }

    /// Unfolds into a right-associated union of right-associated intersections.
    pub fn to_tree(&self) -> CsgModel {
        let literal = |k: usize| {
            if self.w_c[k] {
                CsgExpr::complement(CsgExpr::Leaf(k))
            } else {
                CsgExpr::Leaf(k)
            }
        };
        let columns: Vec<CsgExpr> = (0..self.c())
            .filter(|&j| self.w_u[j])
            .map(|j| {
                let rows: Vec<usize> = (0..self.k()).filter(|&k| self.w_i[k][j]).collect();
                match rows.split_last() {
                    None => CsgExpr::Universe,
                    Some((&last, rest)) => rest
                        .iter()
                        .rev()
                        .fold(literal(last), |acc, &k| CsgExpr::intersection(literal(k), acc)),
                }
            })
            .collect();
        let mut it = columns.into_iter().rev();
        let expr = match it.next() {
            None => CsgExpr::Empty,
            Some(last) => it.fold(last, |acc, e| CsgExpr::union(e, acc)),
        };
        CsgModel {
            expr,
            primitives: self.primitives.clone(),
        }
    }

    /// Soft copy with weights mapped `true -> hi`, `false -> lo`.
    pub fn lift(&self, lo: f64, hi: f64, sharpness: Sharpness) -> SoftStump {
        let m = |b: &bool| if *b { hi } else { lo };
        SoftStump {
            primitives: self.primitives.clone(),
            w_c: self.w_c.iter().map(m).collect(),
            w_i: self.w_i.iter().map(|r| r.iter().map(m).collect()).collect(),
            w_u: self.w_u.iter().map(m).collect(),
            sharpness,
        }
    }
}

impl Solid for Stump {
    fn contains(&self, x: &Vec3) -> bool {
        self.eval_hard(x)
    }

    fn field(&self, x: &Vec3) -> f64 {
        let lit: Vec<f64> = self
            .primitives
            .iter()
            .zip(&self.w_c)
            .map(|(p, &c)| if c { -p.sdf(x) } else { p.sdf(x) })
            .collect();
        (0..self.c())
            .filter(|&j| self.w_u[j])
            .map(|j| {
                (0..self.k())
                    .filter(|&k| self.w_i[k][j])
                    .map(|k| lit[k])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn bounds(&self) -> Aabb {
        self.to_tree().bounds()
    }
}

/// Softmax-weighted average `sum_i softmax(beta * v)_i * v_i`.
///
/// `beta > 0` approximates the maximum, `beta < 0` the minimum. Returns the
/// value and the softmax weights.
pub fn soft_extreme(values: &[f64], beta: f64) -> (f64, Vec<f64>) {
    let top = values.iter().map(|v| beta * v).fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = values.iter().map(|v| (beta * v - top).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|w| *w /= z);
    let y = p.iter().zip(values).map(|(w, v)| w * v).sum();
    (y, p)
}

/// Relaxed max: `max*(v) = softmax(psi v) . v`.
pub fn soft_max(values: &[f64], psi: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    soft_extreme(values, psi).0
}

/// Relaxed min: `min*(v) = softmax(-psi v) . v`.
pub fn soft_min(values: &[f64], psi: f64) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    soft_extreme(values, -psi).0
}

/// Stump with relaxed connection weights in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct SoftStump {
    pub primitives: Vec<Primitive>,
    pub w_c: Vec<f64>,
    pub w_i: Vec<Vec<f64>>,
    pub w_u: Vec<f64>,
    pub sharpness: Sharpness,
}

/// Which group a flat parameter belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamClass {
    Intrinsic,
    Translation,
    Rotation,
    ComplementWeight,
    IntersectionWeight,
    UnionWeight,
}

impl ParamClass {
    pub fn is_weight(self) -> bool {
        matches!(
            self,
            ParamClass::ComplementWeight | ParamClass::IntersectionWeight | ParamClass::UnionWeight
        )
    }
}

/// Per-point intermediate values of the soft forward pass.
struct SoftTrace {
    sdf: Vec<f64>,
    f: Vec<f64>,
    s: Vec<f64>,
    t: f64,
}

impl SoftStump {
    pub fn new(
        primitives: Vec<Primitive>,
        w_c: Vec<f64>,
        w_i: Vec<Vec<f64>>,
        w_u: Vec<f64>,
        sharpness: Sharpness,
    ) -> Result<Self, CsgError> {
        check_dims(primitives.len(), w_c.len(), &w_i, w_u.len())?;
        let all = w_c.iter().chain(w_i.iter().flatten()).chain(&w_u);
        if let Some(w) = all.copied().find(|w| !(0.0..=1.0).contains(w)) {
            return Err(CsgError::WeightRange(w));
        }
        Ok(Self {
            primitives,
            w_c,
            w_i,
            w_u,
            sharpness,
        })
    }

    pub fn k(&self) -> usize {
        self.primitives.len()
    }

    pub fn c(&self) -> usize {
        self.w_u.len()
    }

    fn forward(&self, x: &Vec3) -> SoftTrace {
        let (eta, psi) = (self.sharpness.eta, self.sharpness.psi);
        let sdf: Vec<f64> = self.primitives.iter().map(|p| p.sdf(x)).collect();
        let f: Vec<f64> = sdf
            .iter()
            .zip(&self.w_c)
            .map(|(&d, &c)| c * sigmoid(eta * d) + (1.0 - c) * sigmoid(-eta * d))
            .collect();
        let mut col = vec![0.0; self.k()];
        let s: Vec<f64> = (0..self.c())
            .map(|j| {
                for k in 0..self.k() {
                    let w = self.w_i[k][j];
                    col[k] = w * f[k] + (1.0 - w);
                }
                soft_min(&col, psi)
            })
            .collect();
        let b: Vec<f64> = s.iter().zip(&self.w_u).map(|(s, w)| w * s).collect();
        let t = soft_max(&b, psi);
        SoftTrace { sdf, f, s, t }
    }

    /// Soft occupancy T(x) in [0, 1].
    pub fn eval(&self, x: &Vec3) -> f64 {
        self.forward(x).t
    }

    /// Evaluates T(x) and accumulates `scale * dT/dtheta` into `grad`, laid out as
    /// [`SoftStump::params`].
    pub fn eval_grad(&self, x: &Vec3, scale: f64, grad: &mut [f64]) -> f64 {
        self.eval_grad_by(x, |_| scale, grad)
    }

    /// Like [`SoftStump::eval_grad`] with the scale computed from T(x).
    pub fn eval_grad_by(&self, x: &Vec3, scale_of: impl FnOnce(f64) -> f64, grad: &mut [f64]) -> f64 {
        let (eta, psi) = (self.sharpness.eta, self.sharpness.psi);
        let tr = self.forward(x);
        let scale = scale_of(tr.t);
        if scale == 0.0 {
            return tr.t;
        }
        let (k_n, c_n) = (self.k(), self.c());
        let off = self.weight_offset();

        // union layer
        let b: Vec<f64> = tr.s.iter().zip(&self.w_u).map(|(s, w)| w * s).collect();
        let mut d_s = vec![0.0; c_n];
        if c_n > 0 {
            let (t, p) = soft_extreme(&b, psi);
            for j in 0..c_n {
                let d_b = scale * p[j] * (1.0 + psi * (b[j] - t));
                grad[off + k_n + k_n * c_n + j] += d_b * tr.s[j];
                d_s[j] = d_b * self.w_u[j];
            }
        }

        // intersection layer
        let mut d_f = vec![0.0; k_n];
        if k_n > 0 {
            let mut a = vec![0.0; k_n];
            for j in 0..c_n {
                for (k, ak) in a.iter_mut().enumerate() {
                    let w = self.w_i[k][j];
                    *ak = w * tr.f[k] + (1.0 - w);
                }
                let (s, p) = soft_extreme(&a, -psi);
                for k in 0..k_n {
                    let d_a = d_s[j] * p[k] * (1.0 - psi * (a[k] - s));
                    grad[off + k_n + k * c_n + j] += d_a * (tr.f[k] - 1.0);
                    d_f[k] += d_a * self.w_i[k][j];
                }
            }
        }

        // complement layer and primitives
        let mut cursor = 0;
        for k in 0..k_n {
            let prim = &self.primitives[k];
            let arity = prim.kind().arity();
            let d = tr.sdf[k];
            let (up, dn) = (sigmoid(eta * d), sigmoid(-eta * d));
            let c = self.w_c[k];
            grad[off + k] += d_f[k] * (up - dn);
            let d_sdf = d_f[k] * eta * up * dn * (2.0 * c - 1.0);
            if d_sdf != 0.0 {
                let (_, g) = prim.sdf_grad(x);
                for i in 0..arity {
                    grad[cursor + i] += d_sdf * g.q[i];
                }
                for i in 0..3 {
                    grad[cursor + arity + i] += d_sdf * g.t[i];
                }
                for i in 0..4 {
                    grad[cursor + arity + 3 + i] += d_sdf * g.r[i];
                }
            }
            cursor += arity + 7;
        }
        tr.t
    }

    /// Index of the first connection weight in the flat parameter vector.
    pub fn weight_offset(&self) -> usize {
        self.primitives.iter().map(|p| p.kind().arity() + 7).sum()
    }

    pub fn param_count(&self) -> usize {
        self.weight_offset() + self.k() + self.k() * self.c() + self.c()
    }

    /// Flat parameter vector: per primitive `[q.., t(3), r(4)]`, then `w_c`,
    /// `w_i` row-major, `w_u`.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for p in &self.primitives {
            v.extend_from_slice(p.q());
            v.extend(p.pose().translation().iter());
            v.extend_from_slice(&p.pose().rotation());
        }
        v.extend_from_slice(&self.w_c);
        for row in &self.w_i {
            v.extend_from_slice(row);
        }
        v.extend_from_slice(&self.w_u);
        v
    }

    /// Rebuilds from a flat vector. Primitive constraints are enforced (the
    /// quaternion is normalized); weights are taken as given, so values
    /// slightly outside [0, 1] from finite-difference probes are accepted.
    pub fn with_params(&self, v: &[f64]) -> Result<SoftStump, GeometryError> {
        assert_eq!(v.len(), self.param_count(), "parameter vector length");
        let mut cursor = 0;
        let mut prims = Vec::with_capacity(self.k());
        for p in &self.primitives {
            let a = p.kind().arity();
            let q = &v[cursor..cursor + a];
            let t = Vec3::new(v[cursor + a], v[cursor + a + 1], v[cursor + a + 2]);
            let r = [
                v[cursor + a + 3],
                v[cursor + a + 4],
                v[cursor + a + 5],
                v[cursor + a + 6],
            ];
            prims.push(Primitive::new(p.kind(), q, Pose::new(t, r)?)?);
            cursor += a + 7;
        }
        let (k, c) = (self.k(), self.c());
        let w_c = v[cursor..cursor + k].to_vec();
        cursor += k;
        let w_i = (0..k)
            .map(|r| v[cursor + r * c..cursor + (r + 1) * c].to_vec())
            .collect();
        cursor += k * c;
        let w_u = v[cursor..cursor + c].to_vec();
        Ok(SoftStump {
            primitives: prims,
            w_c,
            w_i,
            w_u,
            sharpness: self.sharpness,
        })
    }

    /// Name and class of every flat parameter.
    pub fn param_names(&self) -> Vec<(String, ParamClass)> {
        let mut out = Vec::with_capacity(self.param_count());
        for (k, p) in self.primitives.iter().enumerate() {
            for i in 0..p.kind().arity() {
                out.push((format!("prim[{k}].q[{i}]"), ParamClass::Intrinsic));
            }
            for i in 0..3 {
                out.push((format!("prim[{k}].t[{i}]"), ParamClass::Translation));
            }
            for i in 0..4 {
                out.push((format!("prim[{k}].r[{i}]"), ParamClass::Rotation));
            }
        }
        for k in 0..self.k() {
            out.push((format!("w_c[{k}]"), ParamClass::ComplementWeight));
        }
        for k in 0..self.k() {
            for j in 0..self.c() {
                out.push((format!("w_i[{k}][{j}]"), ParamClass::IntersectionWeight));
            }
        }
        for j in 0..self.c() {
            out.push((format!("w_u[{j}]"), ParamClass::UnionWeight));
        }
        out
    }

    /// Entrywise `w >= threshold` becomes 1.
    pub fn binarize(&self, threshold: f64) -> Stump {
        let b = |w: &f64| *w >= threshold;
        Stump {
            primitives: self.primitives.clone(),
            w_c: self.w_c.iter().map(b).collect(),
            w_i: self.w_i.iter().map(|r| r.iter().map(b).collect()).collect(),
            w_u: self.w_u.iter().map(b).collect(),
        }
    }
}

/// `binarize` as a free function; `threshold` must lie in (0, 1).
pub fn binarize(s: &SoftStump, threshold: f64) -> Result<Stump, CsgError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(CsgError::Threshold(threshold));
    }
    Ok(s.binarize(threshold))
}
