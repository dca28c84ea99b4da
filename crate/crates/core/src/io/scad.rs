//! OpenSCAD emission and a reader for the emitted subset.
//!
//! Complements become `difference()` against a cube of side `L`, centred on
//! the shape's bounds; infinite cylinders and cones are clamped to height `L`.
//! `rotate([ax, ay, az])` applies x, then y, then z, so the angles are the
//! Z-Y-X decomposition `R = Rz(az) Ry(ay) Rx(ax)` of the primitive's rotation.

use std::fmt::Write as _;

use crate::csg::{CsgExpr, CsgModel, Solid, Stump};
use crate::geometry::{Aabb, Pose, Primitive, PrimitiveKind, Vec3};
use crate::io::IoError;

/// Side of the complement cube relative to the bounds diagonal.
pub const CLAMP_FACTOR: f64 = 100.0;

/// Fixed-point rendering with 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || x.abs() < 1e-300 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).clamp(0, 40) as usize;
    let s = format!("{x:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

fn vec3(v: &Vec3) -> String {
    format!("[{}, {}, {}]", fmt_num(v.x), fmt_num(v.y), fmt_num(v.z))
}

struct Emitter {
    out: String,
    depth: usize,
    side: f64,
    center: Vec3,
}

impl Emitter {
    fn new(bounds: &Aabb) -> Self {
        let b = if bounds.is_degenerate() { Aabb::world() } else { *bounds };
        let side = CLAMP_FACTOR * b.diagonal();
        let mut out = String::new();
        writeln!(out, "// complement cube side L = {}", fmt_num(side)).unwrap();
        writeln!(out, "// complement cube center = {}", vec3(&b.center())).unwrap();
        writeln!(out, "$fn = 64;").unwrap();
        Self {
            out,
            depth: 0,
            side,
            center: b.center(),
        }
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn open(&mut self, s: &str) {
        self.line(&format!("{s} {{"));
        self.depth += 1;
    }

    fn close(&mut self) {
        self.depth -= 1;
        self.line("}");
    }

    fn big_cube(&mut self) {
        let s = format!(
            "translate({}) cube({}, center=true);",
            vec3(&self.center),
            fmt_num(self.side)
        );
        self.line(&s);
    }

    fn primitive(&mut self, p: &Primitive) {
        let mut s = String::new();
        let t = p.pose().translation();
        if t != Vec3::zeros() {
            write!(s, "translate({}) ", vec3(&t)).unwrap();
        }
        if !p.pose().is_identity_rotation() {
            let e = p.pose().euler_xyz_deg();
            write!(s, "rotate({}) ", vec3(&Vec3::new(e[0], e[1], e[2]))).unwrap();
        }
        let q = p.q();
        let h = self.side;
        match p.kind() {
            PrimitiveKind::Box => write!(s, "cube({}, center=true);", vec3(&Vec3::new(q[0], q[1], q[2]))),
            PrimitiveKind::Sphere => write!(s, "sphere(r={});", fmt_num(q[0])),
            PrimitiveKind::Cylinder => write!(
                s,
                "cylinder(r={}, h={}, center=true); // infinite cylinder clamped to h = L",
                fmt_num(q[0]),
                fmt_num(h)
            ),
            PrimitiveKind::Cone => write!(
                s,
                "translate([0, 0, {}]) cylinder(h={}, r1={}, r2=0); // infinite cone clamped to h = L",
                fmt_num(-h),
                fmt_num(h),
                fmt_num(h * q[0].tan())
            ),
        }
        .unwrap();
        self.line(&s);
    }

    fn complement(&mut self, emit: impl FnOnce(&mut Self)) {
        self.open("difference()");
        self.big_cube();
        emit(self);
        self.close();
    }

    fn expr(&mut self, e: &CsgExpr, prims: &[Primitive]) {
        match e {
            CsgExpr::Leaf(i) => self.primitive(&prims[*i]),
            CsgExpr::Universe => self.big_cube(),
            CsgExpr::Empty => self.line("union() {}"),
            CsgExpr::Union(a, b) | CsgExpr::Intersection(a, b) | CsgExpr::Difference(a, b) => {
                let name = match e {
                    CsgExpr::Union(..) => "union()",
                    CsgExpr::Intersection(..) => "intersection()",
                    _ => "difference()",
                };
                self.open(name);
                self.expr(a, prims);
                self.expr(b, prims);
                self.close();
            }
            CsgExpr::Complement(a) => self.complement(|s| s.expr(a, prims)),
        }
    }
}

/// OpenSCAD program for a binary stump.
pub fn export_openscad(s: &Stump) -> String {
    let mut em = Emitter::new(&s.bounds());
    em.open("union()");
    for j in (0..s.c()).filter(|&j| s.w_u[j]) {
        let rows: Vec<usize> = (0..s.k()).filter(|&k| s.w_i[k][j]).collect();
        if rows.is_empty() {
            em.big_cube();
            continue;
        }
        em.open("intersection()");
        for k in rows {
            if s.w_c[k] {
                em.complement(|e| e.primitive(&s.primitives[k]));
            } else {
                em.primitive(&s.primitives[k]);
            }
        }
        em.close();
    }
    em.close();
    em.out
}

/// OpenSCAD program for a CSG tree.
pub fn export_openscad_tree(m: &CsgModel) -> String {
    let mut em = Emitter::new(&m.bounds());
    em.expr(&m.expr, &m.primitives);
    em.out
}

/// Soft stumps cannot be exported directly.
pub fn export_openscad_soft() -> Result<String, IoError> {
    Err(IoError::SoftExport)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Punct(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, IoError> {
    let mut toks = Vec::new();
    for (n, raw) in src.lines().enumerate() {
        let line = n + 1;
        let text = raw.split("//").next().unwrap_or("");
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), line));
            } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
                let start = i;
                i += 1;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '-' || chars[i] == '+') && matches!(chars[i - 1], 'e' | 'E')))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| IoError::Scad {
                    line,
                    msg: format!("invalid number '{s}'"),
                })?;
                toks.push((Tok::Num(v), line));
            } else if "()[]{},;=".contains(c) {
                toks.push((Tok::Punct(c), line));
                i += 1;
            } else {
                return Err(IoError::Scad {
                    line,
                    msg: format!("unexpected character '{c}'"),
                });
            }
        }
    }
    Ok(toks)
}

#[derive(Clone, Debug)]
enum Arg {
    Num(f64),
    Vec(Vec<f64>),
    Bool(bool),
}

#[derive(Debug)]
struct Node {
    name: String,
    line: usize,
    args: Vec<(Option<String>, Arg)>,
    children: Vec<Node>,
}

impl Node {
    fn arg(&self, name: &str, pos: usize) -> Option<&Arg> {
        self.args
            .iter()
            .find(|(k, _)| k.as_deref() == Some(name))
            .or_else(|| self.args.iter().filter(|(k, _)| k.is_none()).nth(pos))
            .map(|(_, a)| a)
    }

    fn err(&self, msg: impl Into<String>) -> IoError {
        IoError::Scad {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn num(&self, name: &str, pos: usize) -> Result<f64, IoError> {
        match self.arg(name, pos) {
            Some(Arg::Num(v)) => Ok(*v),
            _ => Err(self.err(format!("{}: expected number argument '{name}'", self.name))),
        }
    }

    fn vec3(&self, pos: usize) -> Result<Vec3, IoError> {
        match self.args.get(pos) {
            Some((_, Arg::Vec(v))) if v.len() == 3 => Ok(Vec3::new(v[0], v[1], v[2])),
            _ => Err(self.err(format!("{}: expected a 3-vector", self.name))),
        }
    }

    fn centered(&self) -> bool {
        matches!(self.arg("center", usize::MAX), Some(Arg::Bool(true)))
    }
}

struct Reader {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Reader {
    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map(|t| t.1).unwrap_or(1)
    }

    fn err(&self, msg: impl Into<String>) -> IoError {
        IoError::Scad {
            line: self.line(),
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), IoError> {
        match self.next() {
            Some(Tok::Punct(p)) if p == c => Ok(()),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected '{c}', found {other:?}")))
            }
        }
    }

    fn value(&mut self) -> Result<Arg, IoError> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Arg::Num(v)),
            Some(Tok::Ident(s)) if s == "true" => Ok(Arg::Bool(true)),
            Some(Tok::Ident(s)) if s == "false" => Ok(Arg::Bool(false)),
            Some(Tok::Punct('[')) => {
                let mut v = Vec::new();
                loop {
                    match self.next() {
                        Some(Tok::Num(x)) => v.push(x),
                        _ => return Err(self.err("expected a number in vector")),
                    }
                    match self.next() {
                        Some(Tok::Punct(',')) => continue,
                        Some(Tok::Punct(']')) => break,
                        _ => return Err(self.err("expected ',' or ']'")),
                    }
                }
                Ok(Arg::Vec(v))
            }
            _ => Err(self.err("expected a value")),
        }
    }

    fn statements(&mut self, until_brace: bool) -> Result<Vec<Node>, IoError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None if !until_brace => return Ok(out),
                None => return Err(self.err("unexpected end of input, expected '}'")),
                Some(Tok::Punct('}')) if until_brace => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(Tok::Punct(';')) => self.pos += 1,
                _ => {
                    if let Some(n) = self.statement()? {
                        out.push(n);
                    }
                }
            }
        }
    }

    fn statement(&mut self) -> Result<Option<Node>, IoError> {
        let line = self.line();
        let name = match self.next() {
            Some(Tok::Ident(s)) => s,
            other => {
                self.pos -= 1;
                return Err(self.err(format!("expected a module name, found {other:?}")));
            }
        };
        if name.starts_with('$') {
            self.expect('=')?;
            self.value()?;
            self.expect(';')?;
            return Ok(None);
        }
        self.expect('(')?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::Punct(')')) {
            loop {
                let key = match (self.toks.get(self.pos), self.toks.get(self.pos + 1)) {
                    (Some((Tok::Ident(k), _)), Some((Tok::Punct('='), _))) => {
                        let k = k.clone();
                        self.pos += 2;
                        Some(k)
                    }
                    _ => None,
                };
                args.push((key, self.value()?));
                match self.next() {
                    Some(Tok::Punct(',')) => continue,
                    Some(Tok::Punct(')')) => break,
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
        } else {
            self.pos += 1;
        }
        let children = match self.peek() {
            Some(Tok::Punct(';')) => {
                self.pos += 1;
                Vec::new()
            }
            Some(Tok::Punct('{')) => {
                self.pos += 1;
                self.statements(true)?
            }
            _ => self.statement()?.into_iter().collect(),
        };
        Ok(Some(Node {
            name,
            line,
            args,
            children,
        }))
    }
}

struct Builder {
    primitives: Vec<Primitive>,
}

impl Builder {
    fn leaf(&mut self, p: Primitive) -> CsgExpr {
        self.primitives.push(p);
        CsgExpr::Leaf(self.primitives.len() - 1)
    }

    fn prim(&mut self, n: &Node, kind: PrimitiveKind, q: &[f64], local: Pose, pose: &Pose) -> Result<CsgExpr, IoError> {
        let p = Primitive::new(kind, q, local.then(pose)).map_err(|e| n.err(e.to_string()))?;
        Ok(self.leaf(p))
    }

    fn fold(
        &mut self,
        n: &Node,
        pose: &Pose,
        f: fn(CsgExpr, CsgExpr) -> CsgExpr,
        unit: CsgExpr,
    ) -> Result<CsgExpr, IoError> {
        let kids: Vec<CsgExpr> = n
            .children
            .iter()
            .map(|c| self.node(c, pose))
            .collect::<Result<_, _>>()?;
        let mut it = kids.into_iter();
        Ok(match it.next() {
            None => unit,
            Some(first) => it.fold(first, f),
        })
    }

    fn node(&mut self, n: &Node, pose: &Pose) -> Result<CsgExpr, IoError> {
        let shift = |v: Vec3| Pose::from_translation(v);
        match n.name.as_str() {
            "union" => self.fold(n, pose, CsgExpr::union, CsgExpr::Empty),
            "intersection" => self.fold(n, pose, CsgExpr::intersection, CsgExpr::Universe),
            "difference" => self.fold(n, pose, CsgExpr::difference, CsgExpr::Empty),
            "translate" | "rotate" => {
                let v = n.vec3(0)?;
                let local = if n.name == "translate" {
                    shift(v)
                } else {
                    Pose::from_euler_xyz_deg(v.x, v.y, v.z).map_err(|e| n.err(e.to_string()))?
                };
                let inner = local.then(pose);
                match n.children.as_slice() {
                    [child] => self.node(child, &inner),
                    _ => Err(n.err(format!("{} takes exactly one child", n.name))),
                }
            }
            "sphere" => self.prim(n, PrimitiveKind::Sphere, &[n.num("r", 0)?], Pose::identity(), pose),
            "cube" => {
                let size = match n.arg("size", 0) {
                    Some(Arg::Num(s)) => Vec3::repeat(*s),
                    Some(Arg::Vec(v)) if v.len() == 3 => Vec3::new(v[0], v[1], v[2]),
                    _ => return Err(n.err("cube: expected a size")),
                };
                let local = if n.centered() {
                    Pose::identity()
                } else {
                    shift(size * 0.5)
                };
                self.prim(n, PrimitiveKind::Box, &[size.x, size.y, size.z], local, pose)
            }
            "cylinder" => {
                let h = n.num("h", 0)?;
                let (r1, r2) = match (n.arg("r", usize::MAX), n.arg("r1", usize::MAX), n.arg("r2", usize::MAX)) {
                    (Some(Arg::Num(r)), _, _) => (*r, *r),
                    (None, Some(Arg::Num(a)), Some(Arg::Num(b))) => (*a, *b),
                    _ => return Err(n.err("cylinder: expected r or r1 and r2")),
                };
                // local frame with the base at z = 0
                let base = if n.centered() {
                    shift(Vec3::new(0.0, 0.0, -0.5 * h))
                } else {
                    Pose::identity()
                };
                let frame = base.then(pose);
                let rmax = r1.max(r2);
                let slab = self.prim(
                    n,
                    PrimitiveKind::Box,
                    &[4.0 * rmax, 4.0 * rmax, h],
                    shift(Vec3::new(0.0, 0.0, 0.5 * h)),
                    &frame,
                )?;
                let body = if r1 == r2 {
                    self.prim(n, PrimitiveKind::Cylinder, &[r1], Pose::identity(), &frame)?
                } else if r2 == 0.0 {
                    let angle = (r1 / h).atan();
                    self.prim(n, PrimitiveKind::Cone, &[angle], shift(Vec3::new(0.0, 0.0, h)), &frame)?
                } else {
                    return Err(n.err("cylinder: truncated cones are not supported"));
                };
                Ok(CsgExpr::intersection(body, slab))
            }
            other => Err(n.err(format!("unsupported module '{other}'"))),
        }
    }
}

/// Reads the OpenSCAD subset produced by the exporters back into a tree.
/// Finite cylinders and cones become the infinite primitive intersected with a slab.
pub fn import_scad(src: &str) -> Result<CsgModel, IoError> {
    let mut r = Reader {
        toks: lex(src)?,
        pos: 0,
    };
    let nodes = r.statements(false)?;
    let mut b = Builder { primitives: Vec::new() };
    let mut exprs = Vec::new();
    for n in &nodes {
        exprs.push(b.node(n, &Pose::identity())?);
    }
    let mut it = exprs.into_iter();
    let expr = match it.next() {
        None => CsgExpr::Empty,
        Some(first) => it.fold(first, CsgExpr::union),
    };
    CsgModel::new(expr, b.primitives).map_err(|e| IoError::Scad {
        line: 0,
        msg: e.to_string(),
    })
}
