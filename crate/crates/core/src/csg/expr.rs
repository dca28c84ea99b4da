use std::fmt;

use crate::csg::{CsgError, Solid};
use crate::geometry::{Aabb, Primitive, PrimitiveKind, Vec3};

/// Boolean expression over indices into a primitive table.
#[derive(Clone, Debug, PartialEq)]
pub enum CsgExpr {
    Leaf(usize),
    Union(Box<CsgExpr>, Box<CsgExpr>),
    Intersection(Box<CsgExpr>, Box<CsgExpr>),
    Difference(Box<CsgExpr>, Box<CsgExpr>),
    Complement(Box<CsgExpr>),
    Universe,
    Empty,
}

impl CsgExpr {
    pub fn union(a: CsgExpr, b: CsgExpr) -> Self {
        CsgExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn intersection(a: CsgExpr, b: CsgExpr) -> Self {
        CsgExpr::Intersection(Box::new(a), Box::new(b))
    }

    pub fn difference(a: CsgExpr, b: CsgExpr) -> Self {
        CsgExpr::Difference(Box::new(a), Box::new(b))
    }

    pub fn complement(a: CsgExpr) -> Self {
        CsgExpr::Complement(Box::new(a))
    }

    /// Largest leaf index, if any leaf exists.
    pub fn max_leaf(&self) -> Option<usize> {
        match self {
            CsgExpr::Leaf(i) => Some(*i),
            CsgExpr::Union(a, b) | CsgExpr::Intersection(a, b) | CsgExpr::Difference(a, b) => {
                a.max_leaf().max(b.max_leaf())
            }
            CsgExpr::Complement(a) => a.max_leaf(),
            CsgExpr::Universe | CsgExpr::Empty => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            CsgExpr::Union(a, b) | CsgExpr::Intersection(a, b) | CsgExpr::Difference(a, b) => {
                1 + a.depth().max(b.depth())
            }
            CsgExpr::Complement(a) => 1 + a.depth(),
            _ => 1,
        }
    }

    /// Hard evaluation given per-primitive occupancy.
    pub fn eval_with(&self, occ: &dyn Fn(usize) -> bool) -> bool {
        match self {
            CsgExpr::Leaf(i) => occ(*i),
            CsgExpr::Union(a, b) => a.eval_with(occ) || b.eval_with(occ),
            CsgExpr::Intersection(a, b) => a.eval_with(occ) && b.eval_with(occ),
            CsgExpr::Difference(a, b) => a.eval_with(occ) && !b.eval_with(occ),
            CsgExpr::Complement(a) => !a.eval_with(occ),
            CsgExpr::Universe => true,
            CsgExpr::Empty => false,
        }
    }

    fn field_with(&self, sdf: &dyn Fn(usize) -> f64) -> f64 {
        match self {
            CsgExpr::Leaf(i) => sdf(*i),
            CsgExpr::Union(a, b) => a.field_with(sdf).min(b.field_with(sdf)),
            CsgExpr::Intersection(a, b) => a.field_with(sdf).max(b.field_with(sdf)),
            CsgExpr::Difference(a, b) => a.field_with(sdf).max(-b.field_with(sdf)),
            CsgExpr::Complement(a) => -a.field_with(sdf),
            CsgExpr::Universe => f64::NEG_INFINITY,
            CsgExpr::Empty => f64::INFINITY,
        }
    }

    fn bounds_with(&self, prims: &[Primitive], world: &Aabb) -> Option<Aabb> {
        // None stands for the empty set
        match self {
            CsgExpr::Leaf(i) => Some(prims[*i].bounds(world)),
            CsgExpr::Union(a, b) => match (a.bounds_with(prims, world), b.bounds_with(prims, world)) {
                (Some(x), Some(y)) => Some(x.union(&y)),
                (x, None) => x,
                (None, y) => y,
            },
            CsgExpr::Intersection(a, b) => {
                let x = a.bounds_with(prims, world)?;
                let y = b.bounds_with(prims, world)?;
                let i = x.intersection(&y);
                (!i.is_degenerate()).then_some(i)
            }
            CsgExpr::Difference(a, _) => a.bounds_with(prims, world),
            CsgExpr::Complement(_) | CsgExpr::Universe => Some(*world),
            CsgExpr::Empty => None,
        }
    }
}

/// A CSG expression together with the primitive table its leaves index.
#[derive(Clone, Debug, PartialEq)]
pub struct CsgModel {
    pub expr: CsgExpr,
    pub primitives: Vec<Primitive>,
}

impl CsgModel {
    pub fn new(expr: CsgExpr, primitives: Vec<Primitive>) -> Result<Self, CsgError> {
        if let Some(i) = expr.max_leaf() {
            if i >= primitives.len() {
                return Err(CsgError::LeafOutOfRange {
                    index: i,
                    len: primitives.len(),
                });
            }
        }
        Ok(Self { expr, primitives })
    }

    /// Recursive hard evaluation with min/max/complement semantics.
    pub fn eval_hard(&self, x: &Vec3) -> bool {
        self.expr.eval_with(&|i| self.primitives[i].occupancy_hard(x))
    }

    /// Tight bounds of the expression; unbounded parts are clamped to `world`.
    /// The result is not inflated. Returns `None` for provably empty shapes.
    pub fn tight_bounds(&self, world: &Aabb) -> Option<Aabb> {
        self.expr.bounds_with(&self.primitives, world)
    }
}

/// `eval_tree_hard` on a model.
pub fn eval_tree_hard(model: &CsgModel, x: &Vec3) -> bool {
    model.eval_hard(x)
}

impl Solid for CsgModel {
    fn contains(&self, x: &Vec3) -> bool {
        self.eval_hard(x)
    }

    fn field(&self, x: &Vec3) -> f64 {
        self.expr.field_with(&|i| self.primitives[i].sdf(x))
    }

    fn bounds(&self) -> Aabb {
        let world = Aabb::world();
        self.tight_bounds(&world).unwrap_or(world).inflate(0.05)
    }
}

/// Formats a primitive (with its pose wrappers) in DSL syntax.
pub(crate) fn write_primitive(f: &mut fmt::Formatter<'_>, p: &Primitive) -> fmt::Result {
    let t = p.pose().translation();
    let translated = t != Vec3::zeros();
    let rotated = !p.pose().is_identity_rotation();
    if translated {
        write!(f, "translate({}, {}, {}, ", t.x, t.y, t.z)?;
    }
    if rotated {
        let e = p.pose().euler_xyz_deg();
        write!(f, "rotate({}, {}, {}, ", e[0], e[1], e[2])?;
    }
    let q = p.q();
    match p.kind() {
        PrimitiveKind::Box => write!(f, "box({}, {}, {})", q[0], q[1], q[2])?,
        PrimitiveKind::Sphere => write!(f, "sphere(r={})", q[0])?,
        PrimitiveKind::Cylinder => write!(f, "cylinder(r={})", q[0])?,
        PrimitiveKind::Cone => write!(f, "cone(angle={})", q[0].to_degrees())?,
    }
    if rotated {
        f.write_str(")")?;
    }
    if translated {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for CsgModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(f: &mut fmt::Formatter<'_>, e: &CsgExpr, prims: &[Primitive]) -> fmt::Result {
            let binary = |f: &mut fmt::Formatter<'_>, name: &str, a: &CsgExpr, b: &CsgExpr| {
                write!(f, "{name}(")?;
                go(f, a, prims)?;
                f.write_str(", ")?;
                go(f, b, prims)?;
                f.write_str(")")
            };
            match e {
                CsgExpr::Leaf(i) => write_primitive(f, &prims[*i]),
                CsgExpr::Union(a, b) => binary(f, "union", a, b),
                CsgExpr::Intersection(a, b) => binary(f, "intersection", a, b),
                CsgExpr::Difference(a, b) => binary(f, "difference", a, b),
                CsgExpr::Complement(a) => {
                    f.write_str("complement(")?;
                    go(f, a, prims)?;
                    f.write_str(")")
                }
                CsgExpr::Universe => f.write_str("universe()"),
                CsgExpr::Empty => f.write_str("empty()"),
            }
        }
        go(f, &self.expr, &self.primitives)
    }
}
