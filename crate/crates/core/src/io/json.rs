use serde_json::{json, Map, Value};

use crate::csg::{SoftStump, Stump};
use crate::geometry::{Pose, Primitive, PrimitiveKind, Sharpness, Vec3};
use crate::io::IoError;

/// A stump file's content.
#[derive(Clone, Debug, PartialEq)]
pub enum StumpDoc {
    Hard(Stump),
    Soft(SoftStump),
}

impl StumpDoc {
    pub fn k(&self) -> usize {
        match self {
            StumpDoc::Hard(s) => s.k(),
            StumpDoc::Soft(s) => s.k(),
        }
    }

    pub fn c(&self) -> usize {
        match self {
            StumpDoc::Hard(s) => s.c(),
            StumpDoc::Soft(s) => s.c(),
        }
    }
}

fn primitive_json(p: &Primitive) -> Value {
    let t = p.pose().translation();
    json!({
        "kind": p.kind().name(),
        "q": p.q(),
        "t": [t.x, t.y, t.z],
        "r": p.pose().rotation(),
    })
}

fn bits(v: &[bool]) -> Value {
    Value::Array(v.iter().map(|b| json!(*b as u8)).collect())
}

fn to_text(v: Value) -> String {
    serde_json::to_string_pretty(&v).expect("stump json is always serializable")
}

pub fn stump_to_json(s: &Stump) -> String {
    to_text(json!({
        "primitives": s.primitives.iter().map(primitive_json).collect::<Vec<_>>(),
        "w_c": bits(&s.w_c),
        "w_i": s.w_i.iter().map(|r| bits(r)).collect::<Vec<_>>(),
        "w_u": bits(&s.w_u),
        "soft": false,
    }))
}

pub fn soft_stump_to_json(s: &SoftStump) -> String {
    to_text(json!({
        "primitives": s.primitives.iter().map(primitive_json).collect::<Vec<_>>(),
        "w_c": s.w_c,
        "w_i": s.w_i,
        "w_u": s.w_u,
        "soft": true,
        "eta": s.sharpness.eta,
        "psi": s.sharpness.psi,
    }))
}

fn err(pointer: impl Into<String>, msg: impl Into<String>) -> IoError {
    IoError::Json {
        pointer: pointer.into(),
        msg: msg.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value, IoError> {
    obj.get(key).ok_or_else(|| err(at, format!("missing field '{key}'")))
}

fn array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>, IoError> {
    v.as_array().ok_or_else(|| err(at, "expected an array"))
}

fn number(v: &Value, at: &str) -> Result<f64, IoError> {
    v.as_f64().ok_or_else(|| err(at, "expected a number"))
}

fn numbers(v: &Value, at: &str, len: Option<usize>) -> Result<Vec<f64>, IoError> {
    let a = array(v, at)?;
    if let Some(n) = len {
        if a.len() != n {
            return Err(err(at, format!("expected {n} numbers, found {}", a.len())));
        }
    }
    a.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{at}/{i}")))
        .collect()
}

fn bit(v: &Value, at: &str) -> Result<bool, IoError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Number(n) if n.as_f64() == Some(0.0) => Ok(false),
        Value::Number(n) if n.as_f64() == Some(1.0) => Ok(true),
        _ => Err(err(at, "expected 0, 1, true or false")),
    }
}

fn weights<T>(
    v: &Value,
    at: &str,
    len: usize,
    f: &dyn Fn(&Value, &str) -> Result<T, IoError>,
) -> Result<Vec<T>, IoError> {
    let a = array(v, at)?;
    if a.len() != len {
        return Err(err(at, format!("expected {len} entries, found {}", a.len())));
    }
    a.iter().enumerate().map(|(i, x)| f(x, &format!("{at}/{i}"))).collect()
}

fn primitive(v: &Value, at: &str) -> Result<Primitive, IoError> {
    let obj = v.as_object().ok_or_else(|| err(at, "expected an object"))?;
    let kind_at = format!("{at}/kind");
    let name = field(obj, at, "kind")?
        .as_str()
        .ok_or_else(|| err(&kind_at, "expected a string"))?;
    let kind = PrimitiveKind::from_name(name).ok_or_else(|| {
        let valid: Vec<&str> = PrimitiveKind::ALL.iter().map(|k| k.name()).collect();
        err(
            &kind_at,
            format!("unknown primitive kind '{name}', expected one of {}", valid.join(", ")),
        )
    })?;
    let q = numbers(field(obj, at, "q")?, &format!("{at}/q"), Some(kind.arity()))?;
    let t = numbers(field(obj, at, "t")?, &format!("{at}/t"), Some(3))?;
    let r = numbers(field(obj, at, "r")?, &format!("{at}/r"), Some(4))?;
    let pose = Pose::new(Vec3::new(t[0], t[1], t[2]), [r[0], r[1], r[2], r[3]])
        .map_err(|e| err(format!("{at}/r"), e.to_string()))?;
    Primitive::new(kind, &q, pose).map_err(|e| err(format!("{at}/q"), e.to_string()))
}

/// Parses either a binary or a soft stump.
pub fn stump_from_json(text: &str) -> Result<StumpDoc, IoError> {
    let root: Value = serde_json::from_str(text).map_err(|e| err("", e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| err("", "expected an object"))?;
    let prims: Vec<Primitive> = array(field(obj, "", "primitives")?, "/primitives")?
        .iter()
        .enumerate()
        .map(|(i, p)| primitive(p, &format!("/primitives/{i}")))
        .collect::<Result<_, _>>()?;
    let k = prims.len();
    let soft = match obj.get("soft") {
        None => false,
        Some(v) => v.as_bool().ok_or_else(|| err("/soft", "expected a boolean"))?,
    };
    let rows = array(field(obj, "", "w_i")?, "/w_i")?;
    if rows.len() != k {
        return Err(err(
            "/w_i",
            format!("expected {k} rows (one per primitive), found {}", rows.len()),
        ));
    }
    let c = array(field(obj, "", "w_u")?, "/w_u")?.len();
    if soft {
        let unit = |v: &Value, at: &str| {
            let w = number(v, at)?;
            if (0.0..=1.0).contains(&w) {
                Ok(w)
            } else {
                Err(err(at, format!("weight {w} outside [0, 1]")))
            }
        };
        let w_c = weights(field(obj, "", "w_c")?, "/w_c", k, &unit)?;
        let w_i = rows
            .iter()
            .enumerate()
            .map(|(r, v)| weights(v, &format!("/w_i/{r}"), c, &unit))
            .collect::<Result<_, _>>()?;
        let w_u = weights(field(obj, "", "w_u")?, "/w_u", c, &unit)?;
        let eta = number(field(obj, "", "eta")?, "/eta")?;
        let psi = number(field(obj, "", "psi")?, "/psi")?;
        let sharpness = Sharpness::new(eta, psi).map_err(|e| err("/eta", e.to_string()))?;
        let s = SoftStump::new(prims, w_c, w_i, w_u, sharpness).map_err(|e| err("", e.to_string()))?;
        Ok(StumpDoc::Soft(s))
    } else {
        let w_c = weights(field(obj, "", "w_c")?, "/w_c", k, &bit)?;
        let w_i = rows
            .iter()
            .enumerate()
            .map(|(r, v)| weights(v, &format!("/w_i/{r}"), c, &bit))
            .collect::<Result<_, _>>()?;
        let w_u = weights(field(obj, "", "w_u")?, "/w_u", c, &bit)?;
        let s = Stump::new(prims, w_c, w_i, w_u).map_err(|e| err("", e.to_string()))?;
        Ok(StumpDoc::Hard(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csg::{parse_csg, tree_to_stump};

    fn sample() -> Stump {
        let m = parse_csg(
            "union(difference(rotate(10, 20, 30, box(1, 2, 3)), translate(0.1, 0.2, 0.3, sphere(r=0.7))), \
             intersection(cylinder(r=0.4), rotate(0, 90, 0, cone(angle=25))))",
        )
        .unwrap();
        tree_to_stump(&m, 64).unwrap()
    }

    #[test]
    fn hard_round_trip() {
        let s = sample();
        let text = stump_to_json(&s);
        assert_eq!(stump_from_json(&text).unwrap(), StumpDoc::Hard(s));
    }

    #[test]
    fn soft_round_trip() {
        let s = sample().lift(0.013, 0.987654321, Sharpness::new(50.0, 10.0).unwrap());
        assert_eq!(stump_from_json(&soft_stump_to_json(&s)).unwrap(), StumpDoc::Soft(s));
    }

    #[test]
    fn row_mismatch_names_the_row() {
        let text = r#"{"primitives":[{"kind":"sphere","q":[1],"t":[0,0,0],"r":[1,0,0,0]},
            {"kind":"sphere","q":[2],"t":[0,0,0],"r":[1,0,0,0]}],
            "w_c":[0,0],"w_i":[[1,0],[1]],"w_u":[1,1]}"#;
        match stump_from_json(text).unwrap_err() {
            IoError::Json { pointer, .. } => assert_eq!(pointer, "/w_i/1"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_kind_lists_valid_kinds() {
        let text = r#"{"primitives":[{"kind":"torus","q":[1],"t":[0,0,0],"r":[1,0,0,0]}],
            "w_c":[0],"w_i":[[1]],"w_u":[1]}"#;
        let e = stump_from_json(text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("/primitives/0/kind"), "{msg}");
        for k in ["box", "sphere", "cylinder", "cone"] {
            assert!(msg.contains(k), "{msg}");
        }
    }

    #[test]
    fn other_schema_errors() {
        assert!(stump_from_json("[]").is_err());
        let bad_weight = r#"{"primitives":[],"w_c":[],"w_i":[],"w_u":[1.5],"soft":true,"eta":75,"psi":20}"#;
        assert!(matches!(stump_from_json(bad_weight), Err(IoError::Json { pointer, .. }) if pointer == "/w_u/0"));
        let bad_q =
            r#"{"primitives":[{"kind":"box","q":[1,2],"t":[0,0,0],"r":[1,0,0,0]}],"w_c":[0],"w_i":[[1]],"w_u":[1]}"#;
        assert!(matches!(stump_from_json(bad_q), Err(IoError::Json { pointer, .. }) if pointer == "/primitives/0/q"));
        let empty = r#"{"primitives":[],"w_c":[],"w_i":[],"w_u":[]}"#;
        assert_eq!(stump_from_json(empty).unwrap(), StumpDoc::Hard(Stump::empty()));
    }
}
