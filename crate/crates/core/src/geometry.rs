//! Parametric primitives, rigid poses and analytic signed distance fields.
//!
//! Every primitive lives in its own local frame. A world point `x` is mapped
//! to the local point `x' = R^T (x - t)` and the kind-specific SDF is
//! evaluated there. Cylinders and cones are infinite; bounded variants are
//! built by intersecting with a box.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Default occupancy steepness.
pub const DEFAULT_ETA: f64 = 75.0;
/// Default softmax modulating coefficient.
pub const DEFAULT_PSI: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("quaternion norm {0:e} is too close to zero")]
    DegenerateQuaternion(f64),
    #[error("{kind} takes {expected} intrinsic parameter(s), got {got}")]
    ParamCount {
        kind: PrimitiveKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind} parameter {index} must be strictly positive, got {value}")]
    NonPositive {
        kind: PrimitiveKind,
        index: usize,
        value: f64,
    },
    #[error("cone opening angle must lie in (0, pi/2), got {0}")]
    ConeAngle(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("sharpness parameters must be positive and finite (eta={eta}, psi={psi})")]
    Sharpness { eta: f64, psi: f64 },
}

/// Logistic sigmoid, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Rigid transform: rotation `r` (unit quaternion, w-x-y-z) followed by translation `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    t: Vec3,
    r: [f64; 4],
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    /// Builds a pose, normalizing the quaternion.
    pub fn new(t: Vec3, r: [f64; 4]) -> Result<Self, GeometryError> {
        if !t.iter().all(|v| v.is_finite()) || !r.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("pose"));
        }
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-9 {
            return Err(GeometryError::DegenerateQuaternion(n));
        }
        // unit input is stored as given
        if (n - 1.0).abs() < 1e-14 {
            return Ok(Self { t, r });
        }
        Ok(Self {
            t,
            r: [r[0] / n, r[1] / n, r[2] / n, r[3] / n],
        })
    }

    pub fn identity() -> Self {
        Self {
            t: Vec3::zeros(),
            r: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            t,
            r: [1.0, 0.0, 0.0, 0.0],
        }
    }

    /// Rotation about `axis` by `angle` radians.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, GeometryError> {
        let a = axis.normalize();
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(Vec3::zeros(), [c, s * a.x, s * a.y, s * a.z])
    }

    /// Rotation `rotate([ax, ay, az])` in OpenSCAD's convention: x first, then y, then z
    /// (R = Rz * Ry * Rx), angles in degrees.
    pub fn from_euler_xyz_deg(ax: f64, ay: f64, az: f64) -> Result<Self, GeometryError> {
        let rx = Self::from_axis_angle(Vec3::x(), ax.to_radians())?;
        let ry = Self::from_axis_angle(Vec3::y(), ay.to_radians())?;
        let rz = Self::from_axis_angle(Vec3::z(), az.to_radians())?;
        Ok(rx.then(&ry).then(&rz))
    }

    /// Inverse of [`Pose::from_euler_xyz_deg`] for the rotation part.
    pub fn euler_xyz_deg(&self) -> [f64; 3] {
        let m = self.rotation_matrix();
        let sy = (-m[(2, 0)]).clamp(-1.0, 1.0);
        let ay = sy.asin();
        let (ax, az) = if sy.abs() < 1.0 - 1e-12 {
            (m[(2, 1)].atan2(m[(2, 2)]), m[(1, 0)].atan2(m[(0, 0)]))
        } else {
            // gimbal lock: fold the x rotation into z
            (0.0, (-m[(0, 1)]).atan2(m[(1, 1)]))
        };
        [ax.to_degrees(), ay.to_degrees(), az.to_degrees()]
    }

    pub fn translation(&self) -> Vec3 {
        self.t
    }

    pub fn rotation(&self) -> [f64; 4] {
        self.r
    }

    pub fn is_identity_rotation(&self) -> bool {
        (self.r[0].abs() - 1.0).abs() < 1e-15
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        quat_matrix(&self.r)
    }

    /// World point to primitive-local coordinates.
    pub fn to_local(&self, x: &Vec3) -> Vec3 {
        self.rotation_matrix().transpose() * (x - self.t)
    }

    /// Primitive-local point to world coordinates.
    pub fn from_local(&self, x: &Vec3) -> Vec3 {
        self.rotation_matrix() * x + self.t
    }

    /// The pose obtained by applying `self` first and `outer` afterwards.
    pub fn then(&self, outer: &Pose) -> Pose {
        let t = outer.rotation_matrix() * self.t + outer.t;
        let r = quat_mul(&outer.r, &self.r);
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        Pose {
            t,
            r: [r[0] / n, r[1] / n, r[2] / n, r[3] / n],
        }
    }
}

fn quat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    let [aw, ax, ay, az] = *a;
    let [bw, bx, by, bz] = *b;
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

/// Homogeneous rotation matrix M(q)/|q|^2; equals the rotation of q/|q|.
fn quat_matrix(q: &[f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = *q;
    let n = w * w + x * x + y * y + z * z;
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    ) / n
}

/// Derivatives of `quat_matrix` with respect to the four raw quaternion
/// components, evaluated at a unit quaternion.
fn quat_matrix_derivs(q: &[f64; 4]) -> [Matrix3<f64>; 4] {
    let [w, x, y, z] = *q;
    let m = quat_matrix(q);
    let dw = Matrix3::new(w, -z, y, z, w, -x, -y, x, w) * 2.0;
    let dx = Matrix3::new(x, y, z, y, -x, -w, z, w, -x) * 2.0;
    let dy = Matrix3::new(-y, x, w, x, y, z, -w, z, -y) * 2.0;
    let dz = Matrix3::new(-z, -w, x, w, -z, y, x, y, z) * 2.0;
    [
        dw - m * (2.0 * w),
        dx - m * (2.0 * x),
        dy - m * (2.0 * y),
        dz - m * (2.0 * z),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Box,
    Sphere,
    Cylinder,
    Cone,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 4] = [
        PrimitiveKind::Box,
        PrimitiveKind::Sphere,
        PrimitiveKind::Cylinder,
        PrimitiveKind::Cone,
    ];

    /// Number of intrinsic parameters.
    pub fn arity(self) -> usize {
        match self {
            PrimitiveKind::Box => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Box => "box",
            PrimitiveKind::Sphere => "sphere",
            PrimitiveKind::Cylinder => "cylinder",
            PrimitiveKind::Cone => "cone",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which cone distance formula to use.
///
/// `Verbatim` is the two-branch formula as commonly published for an infinite
/// cone opening downward from its apex; it is positive everywhere below the
/// apex. `Exact` is the true signed distance to the same infinite cone and is
/// what every fitting and evaluation path uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConeFormula {
    Verbatim,
    #[default]
    Exact,
}

/// Box SDF in the local frame; `q` holds the full side lengths.
pub fn sdf_box(q: &[f64; 3], x: &Vec3) -> f64 {
    let d = Vec3::new(x.x.abs() - 0.5 * q[0], x.y.abs() - 0.5 * q[1], x.z.abs() - 0.5 * q[2]);
    let outside = d.map(|v| v.max(0.0)).norm();
    outside + d.max().min(0.0)
}

pub fn sdf_sphere(radius: f64, x: &Vec3) -> f64 {
    x.norm() - radius
}

/// Infinite cylinder around the local z axis.
pub fn sdf_cylinder(radius: f64, x: &Vec3) -> f64 {
    x.x.hypot(x.y) - radius
}

/// Infinite cone with apex at the origin opening along -z with half-angle `angle`.
pub fn sdf_cone(angle: f64, x: &Vec3, formula: ConeFormula) -> f64 {
    let rho = x.x.hypot(x.y);
    let (s, c) = angle.sin_cos();
    match formula {
        ConeFormula::Verbatim => {
            if x.z >= 0.0 {
                x.norm()
            } else {
                let tan = angle.tan();
                (rho - x.z * tan) / (1.0 + tan * tan).sqrt()
            }
        }
        ConeFormula::Exact => {
            if rho * s - x.z * c >= 0.0 {
                rho * c + x.z * s
            } else {
                x.norm()
            }
        }
    }
}

/// Local SDF with its gradient w.r.t. the local point and the intrinsics.
fn local_sdf_grad(kind: PrimitiveKind, q: &[f64; 3], x: &Vec3) -> (f64, Vec3, [f64; 3]) {
    let unit = |v: &Vec3| {
        let n = v.norm();
        if n > 0.0 {
            v / n
        } else {
            Vec3::zeros()
        }
    };
    match kind {
        PrimitiveKind::Box => {
            let sgn = x.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
            let d = Vec3::new(x.x.abs() - 0.5 * q[0], x.y.abs() - 0.5 * q[1], x.z.abs() - 0.5 * q[2]);
            let pos = d.map(|v| v.max(0.0));
            let outside = pos.norm();
            if outside > 0.0 {
                let g = pos.component_mul(&sgn) / outside;
                let dq = [-0.5 * pos.x / outside, -0.5 * pos.y / outside, -0.5 * pos.z / outside];
                (outside, g, dq)
            } else {
                let i = d.imax();
                let mut g = Vec3::zeros();
                g[i] = sgn[i];
                let mut dq = [0.0; 3];
                dq[i] = -0.5;
                (d[i], g, dq)
            }
        }
        PrimitiveKind::Sphere => (x.norm() - q[0], unit(x), [-1.0, 0.0, 0.0]),
        PrimitiveKind::Cylinder => {
            let rho = x.x.hypot(x.y);
            let g = if rho > 0.0 {
                Vec3::new(x.x / rho, x.y / rho, 0.0)
            } else {
                Vec3::zeros()
            };
            (rho - q[0], g, [-1.0, 0.0, 0.0])
        }
        PrimitiveKind::Cone => {
            let rho = x.x.hypot(x.y);
            let (s, c) = q[0].sin_cos();
            let proj = rho * s - x.z * c;
            if proj >= 0.0 {
                let (gx, gy) = if rho > 0.0 {
                    (c * x.x / rho, c * x.y / rho)
                } else {
                    (0.0, 0.0)
                };
                (rho * c + x.z * s, Vec3::new(gx, gy, s), [-proj, 0.0, 0.0])
            } else {
                (x.norm(), unit(x), [0.0; 3])
            }
        }
    }
}

/// Partial derivatives of a primitive's world-space SDF at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrimitiveGrad {
    /// Intrinsic parameters (only the first `arity` entries are meaningful).
    pub q: [f64; 3],
    pub t: [f64; 3],
    /// Raw quaternion components, through normalization.
    pub r: [f64; 4],
}

/// One parametric solid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    kind: PrimitiveKind,
    params: [f64; 3],
    pose: Pose,
}

impl Primitive {
    pub fn new(kind: PrimitiveKind, q: &[f64], pose: Pose) -> Result<Self, GeometryError> {
        if q.len() != kind.arity() {
            return Err(GeometryError::ParamCount {
                kind,
                expected: kind.arity(),
                got: q.len(),
            });
        }
        for (index, &value) in q.iter().enumerate() {
            if !value.is_finite() {
                return Err(GeometryError::NonFinite("intrinsic parameter"));
            }
            if value <= 0.0 {
                return Err(GeometryError::NonPositive { kind, index, value });
            }
        }
        if kind == PrimitiveKind::Cone && q[0] >= std::f64::consts::FRAC_PI_2 {
            return Err(GeometryError::ConeAngle(q[0]));
        }
        let mut params = [0.0; 3];
        params[..q.len()].copy_from_slice(q);
        Ok(Self { kind, params, pose })
    }

    pub fn cuboid(extents: [f64; 3], pose: Pose) -> Result<Self, GeometryError> {
        Self::new(PrimitiveKind::Box, &extents, pose)
    }

    pub fn sphere(radius: f64, pose: Pose) -> Result<Self, GeometryError> {
        Self::new(PrimitiveKind::Sphere, &[radius], pose)
    }

    pub fn cylinder(radius: f64, pose: Pose) -> Result<Self, GeometryError> {
        Self::new(PrimitiveKind::Cylinder, &[radius], pose)
    }

    /// Cone with opening half-angle in radians.
    pub fn cone(angle: f64, pose: Pose) -> Result<Self, GeometryError> {
        Self::new(PrimitiveKind::Cone, &[angle], pose)
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.kind
    }

    /// Intrinsic parameters, `arity` entries.
    pub fn q(&self) -> &[f64] {
        &self.params[..self.kind.arity()]
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn with_pose(&self, pose: Pose) -> Self {
        Self { pose, ..*self }
    }

    pub fn local_sdf(&self, x_local: &Vec3, formula: ConeFormula) -> f64 {
        match self.kind {
            PrimitiveKind::Box => sdf_box(&self.params, x_local),
            PrimitiveKind::Sphere => sdf_sphere(self.params[0], x_local),
            PrimitiveKind::Cylinder => sdf_cylinder(self.params[0], x_local),
            PrimitiveKind::Cone => sdf_cone(self.params[0], x_local, formula),
        }
    }

    pub fn sdf(&self, x: &Vec3) -> f64 {
        self.local_sdf(&self.pose.to_local(x), ConeFormula::Exact)
    }

    pub fn sdf_with(&self, x: &Vec3, formula: ConeFormula) -> f64 {
        self.local_sdf(&self.pose.to_local(x), formula)
    }

    /// SDF value and its gradient w.r.t. intrinsics, translation and quaternion.
    pub fn sdf_grad(&self, x: &Vec3) -> (f64, PrimitiveGrad) {
        let rot = self.pose.rotation_matrix();
        let d = x - self.pose.t;
        let local = rot.transpose() * d;
        let (value, g_local, dq) = local_sdf_grad(self.kind, &self.params, &local);
        let dt = -(rot * g_local);
        let derivs = quat_matrix_derivs(&self.pose.r);
        let mut dr = [0.0; 4];
        for (m, slot) in derivs.iter().zip(dr.iter_mut()) {
            // x'_a = sum_b R_ba d_b, so d x'/d q_m = (dR/dq_m)^T d
            *slot = (m.transpose() * d).dot(&g_local);
        }
        (
            value,
            PrimitiveGrad {
                q: dq,
                t: [dt.x, dt.y, dt.z],
                r: dr,
            },
        )
    }

    /// `sigmoid(-eta * sdf)`, 0.5 on the surface.
    pub fn occupancy_soft(&self, x: &Vec3, eta: f64) -> f64 {
        sigmoid(-eta * self.sdf(x))
    }

    /// Inside test; the boundary counts as inside.
    pub fn occupancy_hard(&self, x: &Vec3) -> bool {
        self.sdf(x) <= 0.0
    }

    /// World-space bounds; infinite kinds are clamped to `world`.
    pub fn bounds(&self, world: &Aabb) -> Aabb {
        let half = match self.kind {
            PrimitiveKind::Box => Vec3::new(self.params[0], self.params[1], self.params[2]) * 0.5,
            PrimitiveKind::Sphere => Vec3::repeat(self.params[0]),
            PrimitiveKind::Cylinder | PrimitiveKind::Cone => return *world,
        };
        let rot = self.pose.rotation_matrix().abs();
        let ext = rot * half;
        Aabb {
            min: self.pose.t - ext,
            max: self.pose.t + ext,
        }
    }
}

/// Occupancy steepness `eta` and softmax coefficient `psi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sharpness {
    pub eta: f64,
    pub psi: f64,
}

impl Default for Sharpness {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            psi: DEFAULT_PSI,
        }
    }
}

impl Sharpness {
    pub fn new(eta: f64, psi: f64) -> Result<Self, GeometryError> {
        if eta > 0.0 && psi > 0.0 && eta.is_finite() && psi.is_finite() {
            Ok(Self { eta, psi })
        } else {
            Err(GeometryError::Sharpness { eta, psi })
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn cube(half: f64) -> Self {
        Self::new(Vec3::repeat(-half), Vec3::repeat(half))
    }

    /// The world clamp box used for unbounded shapes.
    pub fn world() -> Self {
        Self::cube(2.0)
    }

    /// True when some axis has zero or negative extent.
    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|i| self.max[i] <= self.min[i] || !self.max[i].is_finite() || !self.min[i].is_finite())
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.max + self.min) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|i| x[i] >= self.min[i] && x[i] <= self.max[i])
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn intersection(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.sup(&other.min), self.max.inf(&other.max))
    }

    /// Scales the box about its center by `1 + fraction`.
    pub fn inflate(&self, fraction: f64) -> Aabb {
        let c = self.center();
        let h = self.extent() * (0.5 * (1.0 + fraction));
        Aabb::new(c - h, c + h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn z90() -> Pose {
        Pose::new(Vec3::zeros(), [SQRT_2 / 2.0, 0.0, 0.0, SQRT_2 / 2.0]).unwrap()
    }

    /// Rotation matrix about z built from angles, independent of the quaternion path.
    fn rot_z(angle: f64) -> Matrix3<f64> {
        let (s, c) = angle.sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    #[test]
    fn to_local_examples() {
        let x = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(Pose::identity().to_local(&x), x);
        let p = Pose::from_translation(Vec3::new(1.0, 0.0, 0.0));
        assert!(p.to_local(&Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);

        let got = z90().to_local(&Vec3::new(1.0, 0.0, 0.0));
        let oracle = rot_z(FRAC_PI_2).transpose() * Vec3::new(1.0, 0.0, 0.0);
        assert!((got - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        assert!((got - oracle).norm() < 1e-12);
    }

    #[test]
    fn quaternion_is_normalized_and_zero_rejected() {
        let p = Pose::new(Vec3::zeros(), [2.0, 0.0, 0.0, 2.0]).unwrap();
        let n: f64 = p.rotation().iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(matches!(
            Pose::new(Vec3::zeros(), [0.0, 1e-12, 0.0, 0.0]),
            Err(GeometryError::DegenerateQuaternion(_))
        ));
    }

    #[test]
    fn euler_round_trip() {
        let p = Pose::from_euler_xyz_deg(30.0, -20.0, 75.0).unwrap();
        let e = p.euler_xyz_deg();
        assert!((e[0] - 30.0).abs() < 1e-9 && (e[1] + 20.0).abs() < 1e-9 && (e[2] - 75.0).abs() < 1e-9);
        // x-then-y-then-z composition against explicit matrices
        let (a, b, c) = (30f64.to_radians(), (-20f64).to_radians(), 75f64.to_radians());
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos());
        let ry = Matrix3::new(b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos());
        let m = rot_z(c) * ry * rx;
        assert!((p.rotation_matrix() - m).norm() < 1e-12);
    }

    #[test]
    fn box_examples() {
        let q = [2.0, 2.0, 2.0];
        assert_eq!(sdf_box(&q, &Vec3::zeros()), -1.0);
        assert_eq!(sdf_box(&q, &Vec3::new(2.0, 0.0, 0.0)), 1.0);
        assert!((sdf_box(&q, &Vec3::new(2.0, 2.0, 2.0)) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn box_outside_matches_dense_surface_sampling() {
        // distance oracle: closest point over a dense sampling of the box surface
        let q = [2.0, 1.0, 0.5];
        let x = Vec3::new(1.7, -0.9, 0.6);
        let n = 200;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let u = i as f64 / n as f64 - 0.5;
                let v = j as f64 / n as f64 - 0.5;
                for axis in 0..3 {
                    for side in [-0.5, 0.5] {
                        let mut p = Vec3::zeros();
                        p[axis] = side * q[axis];
                        p[(axis + 1) % 3] = u * q[(axis + 1) % 3];
                        p[(axis + 2) % 3] = v * q[(axis + 2) % 3];
                        best = best.min((p - x).norm());
                    }
                }
            }
        }
        assert!((sdf_box(&q, &x) - best).abs() < 1e-2);
    }

    #[test]
    fn sphere_cylinder_examples() {
        assert_eq!(sdf_sphere(1.0, &Vec3::zeros()), -1.0);
        assert_eq!(sdf_sphere(1.0, &Vec3::new(0.0, 0.0, 2.0)), 1.0);
        assert!(sdf_sphere(0.5, &Vec3::new(0.3, 0.4, 0.0)).abs() < 1e-15);
        assert_eq!(sdf_cylinder(0.5, &Vec3::new(1.0, 0.0, 5.0)), 0.5);
        assert_eq!(sdf_cylinder(0.5, &Vec3::new(0.0, 0.0, -3.0)), -0.5);
        assert_eq!(sdf_cylinder(2.0, &Vec3::new(3.0, 4.0, 0.0)), 3.0);
    }

    #[test]
    fn cone_examples() {
        for angle in [0.1, FRAC_PI_4, 1.4] {
            for f in [ConeFormula::Exact, ConeFormula::Verbatim] {
                assert!((sdf_cone(angle, &Vec3::new(0.0, 0.0, 1.0), f) - 1.0).abs() < 1e-15);
            }
        }
        assert!(sdf_cone(FRAC_PI_4, &Vec3::new(1.0, 0.0, -1.0), ConeFormula::Exact).abs() < 1e-15);
        let v = sdf_cone(FRAC_PI_4, &Vec3::new(0.0, 0.0, -1.0), ConeFormula::Verbatim);
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        let e = sdf_cone(FRAC_PI_4, &Vec3::new(0.0, 0.0, -1.0), ConeFormula::Exact);
        assert!((e + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
    }

    #[test]
    fn exact_cone_matches_generator_distance() {
        // oracle: distance in the (rho, z) half-plane to the ray from the apex
        let angle = 0.6f64;
        let dir = (angle.sin(), -angle.cos());
        for &(r, z) in &[(0.3, -1.0), (2.0, -0.5), (1.0, 0.4), (0.1, 2.0), (0.0, -0.7)] {
            let t = (r * dir.0 + z * dir.1).max(0.0);
            let dist = ((r - t * dir.0).powi(2) + (z - t * dir.1).powi(2)).sqrt();
            let inside = z < 0.0 && r < -z * angle.tan();
            let oracle = if inside { -dist } else { dist };
            let got = sdf_cone(angle, &Vec3::new(r, 0.0, z), ConeFormula::Exact);
            assert!((got - oracle).abs() < 1e-12, "({r},{z}): {got} vs {oracle}");
        }
    }

    #[test]
    fn world_sdf_examples() {
        let s = Primitive::sphere(1.0, Pose::from_translation(Vec3::new(1.0, 0.0, 0.0))).unwrap();
        assert_eq!(s.sdf(&Vec3::new(1.0, 0.0, 0.0)), -1.0);
        assert_eq!(s.sdf(&Vec3::new(3.0, 0.0, 0.0)), 1.0);
        let b = Primitive::cuboid([2.0, 1.0, 1.0], z90()).unwrap();
        assert!((b.sdf(&Vec3::new(0.0, 0.9, 0.0)) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn occupancy_examples() {
        let s = Primitive::sphere(1.0, Pose::identity()).unwrap();
        assert_eq!(s.occupancy_soft(&Vec3::new(1.0, 0.0, 0.0), 75.0), 0.5);
        assert!((s.occupancy_soft(&Vec3::zeros(), 75.0) - 1.0).abs() < 1e-12);
        let v = s.occupancy_soft(&Vec3::new(0.0, 0.0, 1.1), 75.0);
        assert!((v - 1.0 / (1.0 + 7.5f64.exp())).abs() < 1e-15);
        assert!((v - 5.53e-4).abs() < 1e-6);
        assert!(s.occupancy_hard(&Vec3::zeros()));
        assert!(!s.occupancy_hard(&Vec3::new(0.0, 0.0, 2.0)));
        assert!(s.occupancy_hard(&Vec3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn invalid_primitives() {
        assert!(matches!(
            Primitive::new(PrimitiveKind::Box, &[1.0], Pose::identity()),
            Err(GeometryError::ParamCount { .. })
        ));
        assert!(matches!(
            Primitive::sphere(-1.0, Pose::identity()),
            Err(GeometryError::NonPositive { .. })
        ));
        assert!(matches!(
            Primitive::cone(FRAC_PI_2, Pose::identity()),
            Err(GeometryError::ConeAngle(_))
        ));
        assert!(Sharpness::new(0.0, 1.0).is_err());
    }

    #[test]
    fn sdf_gradient_matches_finite_differences() {
        let pose = Pose::new(Vec3::new(0.1, -0.2, 0.3), [0.9, 0.2, -0.3, 0.1]).unwrap();
        let x = Vec3::new(0.7, 0.4, -0.9);
        let prims = [
            Primitive::cuboid([1.2, 0.7, 0.9], pose).unwrap(),
            Primitive::cuboid([0.3, 0.2, 0.4], pose).unwrap(),
            Primitive::sphere(0.8, pose).unwrap(),
            Primitive::cylinder(0.4, pose).unwrap(),
            Primitive::cone(0.5, pose).unwrap(),
        ];
        let h = 1e-6;
        for p in prims {
            let (_, g) = p.sdf_grad(&x);
            for i in 0..p.kind().arity() {
                let mut up = p.params;
                let mut dn = p.params;
                up[i] += h;
                dn[i] -= h;
                let fu = Primitive::new(p.kind(), &up[..p.kind().arity()], pose).unwrap().sdf(&x);
                let fd = Primitive::new(p.kind(), &dn[..p.kind().arity()], pose).unwrap().sdf(&x);
                assert!(((fu - fd) / (2.0 * h) - g.q[i]).abs() < 1e-6, "{:?} q{i}", p.kind());
            }
            for i in 0..3 {
                let mut tu = pose.translation();
                let mut td = tu;
                tu[i] += h;
                td[i] -= h;
                let fu = p.with_pose(Pose::new(tu, pose.rotation()).unwrap()).sdf(&x);
                let fd = p.with_pose(Pose::new(td, pose.rotation()).unwrap()).sdf(&x);
                assert!(((fu - fd) / (2.0 * h) - g.t[i]).abs() < 1e-6);
            }
            for i in 0..4 {
                let mut ru = pose.rotation();
                let mut rd = ru;
                ru[i] += h;
                rd[i] -= h;
                let fu = p.with_pose(Pose::new(pose.translation(), ru).unwrap()).sdf(&x);
                let fd = p.with_pose(Pose::new(pose.translation(), rd).unwrap()).sdf(&x);
                assert!(((fu - fd) / (2.0 * h) - g.r[i]).abs() < 1e-6, "{:?} r{i}", p.kind());
            }
        }
    }
}
