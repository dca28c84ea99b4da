//! Recursive-descent parser for the CSG expression language.
//!
//! ```text
//! expr  := prim | op
//! op    := ("union" | "intersection" | "difference") "(" expr ("," expr)+ ")"
//!        | "complement" "(" expr ")"
//!        | ("translate" | "rotate") "(" num "," num "," num "," expr ")"
//!        | "universe" "(" ")" | "empty" "(" ")"
//! prim  := "box" "(" num "," num "," num ")" | "sphere" "(" ["r" "="] num ")"
//!        | "cylinder" "(" ["r" "="] num ")" | "cone" "(" ["angle" "="] num ")"
//! ```
//!
//! `rotate` takes x-y-z Euler angles in degrees, `cone` its half-angle in
//! degrees. `union`/`intersection` fold right, `difference` folds left.
//! `#` starts a comment that runs to the end of the line.

use thiserror::Error;

use crate::csg::expr::{CsgExpr, CsgModel};
use crate::geometry::{GeometryError, Pose, Primitive, PrimitiveKind, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: {op} takes {expected} operand(s), got {got}")]
    Arity {
        line: usize,
        col: usize,
        op: String,
        expected: &'static str,
        got: usize,
    },
    #[error("{line}:{col}: {source}")]
    Primitive {
        line: usize,
        col: usize,
        source: GeometryError,
    },
}

impl ParseError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Arity { line, col, .. }
            | ParseError::Primitive { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    Comma,
    Eq,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line: tl, col: tc });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let v = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                line: tl,
                col: tc,
                msg: format!("invalid number '{text}'"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                line: tl,
                col: tc,
            });
            continue;
        }
        return Err(ParseError::Syntax {
            line: tl,
            col: tc,
            msg: format!("unexpected character '{c}'"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prims: Vec<Primitive>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            self.err(&t, format!("expected {what}, found {}", describe(&t.tok)))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(v),
            _ => self.err(&t, format!("expected number, found {}", describe(&t.tok))),
        }
    }

    /// A number optionally preceded by `name =`.
    fn named_number(&mut self, name: &str) -> Result<f64, ParseError> {
        if let Tok::Ident(id) = &self.peek().tok {
            let t = self.peek().clone();
            if id != name {
                return self.err(&t, format!("expected '{name}=', found '{id}'"));
            }
            self.next();
            self.expect(Tok::Eq, "'='")?;
        }
        self.number()
    }

    fn expr(&mut self, pose: &Pose) -> Result<CsgExpr, ParseError> {
        let head = self.next();
        let name = match &head.tok {
            Tok::Ident(s) => s.clone(),
            other => {
                return self.err(
                    &head,
                    format!("expected an operation or primitive, found {}", describe(other)),
                )
            }
        };
        self.expect(Tok::LParen, "'('")?;
        let e = match name.as_str() {
            "union" | "intersection" | "difference" => {
                let mut kids = vec![self.expr(pose)?];
                while self.peek().tok == Tok::Comma {
                    self.next();
                    kids.push(self.expr(pose)?);
                }
                if kids.len() < 2 {
                    return Err(ParseError::Arity {
                        line: head.line,
                        col: head.col,
                        op: name,
                        expected: "at least 2",
                        got: kids.len(),
                    });
                }
                match name.as_str() {
                    "difference" => {
                        let mut it = kids.into_iter();
                        let first = it.next().unwrap();
                        it.fold(first, CsgExpr::difference)
                    }
                    "union" => fold_right(kids, CsgExpr::union),
                    _ => fold_right(kids, CsgExpr::intersection),
                }
            }
            "complement" => {
                let inner = self.expr(pose)?;
                if self.peek().tok == Tok::Comma {
                    let t = self.peek().clone();
                    return Err(ParseError::Arity {
                        line: t.line,
                        col: t.col,
                        op: name,
                        expected: "exactly 1",
                        got: 2,
                    });
                }
                CsgExpr::complement(inner)
            }
            "translate" | "rotate" => {
                let a = self.number()?;
                self.expect(Tok::Comma, "','")?;
                let b = self.number()?;
                self.expect(Tok::Comma, "','")?;
                let c = self.number()?;
                self.expect(Tok::Comma, "','")?;
                let local = if name == "translate" {
                    Pose::from_translation(Vec3::new(a, b, c))
                } else {
                    Pose::from_euler_xyz_deg(a, b, c).map_err(|source| ParseError::Primitive {
                        line: head.line,
                        col: head.col,
                        source,
                    })?
                };
                let inner_pose = local.then(pose);
                self.expr(&inner_pose)?
            }
            "universe" => CsgExpr::Universe,
            "empty" => CsgExpr::Empty,
            "box" | "sphere" | "cylinder" | "cone" => {
                let (kind, q) = match name.as_str() {
                    "box" => {
                        let a = self.number()?;
                        self.expect(Tok::Comma, "','")?;
                        let b = self.number()?;
                        self.expect(Tok::Comma, "','")?;
                        let c = self.number()?;
                        (PrimitiveKind::Box, vec![a, b, c])
                    }
                    "sphere" => (PrimitiveKind::Sphere, vec![self.named_number("r")?]),
                    "cylinder" => (PrimitiveKind::Cylinder, vec![self.named_number("r")?]),
                    _ => (PrimitiveKind::Cone, vec![self.named_number("angle")?.to_radians()]),
                };
                let prim = Primitive::new(kind, &q, *pose).map_err(|source| ParseError::Primitive {
                    line: head.line,
                    col: head.col,
                    source,
                })?;
                self.prims.push(prim);
                CsgExpr::Leaf(self.prims.len() - 1)
            }
            other => return self.err(&head, format!("unknown operation '{other}'")),
        };
        self.expect(Tok::RParen, "')'")?;
        Ok(e)
    }
}

fn fold_right(kids: Vec<CsgExpr>, op: fn(CsgExpr, CsgExpr) -> CsgExpr) -> CsgExpr {
    let mut it = kids.into_iter().rev();
    let last = it.next().unwrap();
    it.fold(last, |acc, e| op(e, acc))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Num(v) => format!("number {v}"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Eq => "'='".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses DSL text into an expression plus its primitive table (source order).
pub fn parse_csg(source: &str) -> Result<CsgModel, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        prims: Vec::new(),
    };
    let expr = p.expr(&Pose::identity())?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return p.err(&t, format!("trailing input: {}", describe(&t.tok)));
    }
    Ok(CsgModel {
        expr,
        primitives: p.prims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sphere() {
        let m = parse_csg("sphere(r=1)").unwrap();
        assert_eq!(m.expr, CsgExpr::Leaf(0));
        assert_eq!(m.primitives.len(), 1);
        assert_eq!(m.primitives[0].q(), &[1.0]);
    }

    #[test]
    fn difference_of_two() {
        let m = parse_csg("difference(box(2,2,2), sphere(r=1))").unwrap();
        assert_eq!(m.expr, CsgExpr::difference(CsgExpr::Leaf(0), CsgExpr::Leaf(1)));
        assert_eq!(m.primitives[0].kind(), PrimitiveKind::Box);
    }

    #[test]
    fn canonical_print_round_trip() {
        let src = "union(sphere(r=1), translate(1, 0, 0, sphere(r=1)))";
        let m = parse_csg(src).unwrap();
        assert_eq!(m.to_string(), src);
        assert_ne!(m.primitives[0].pose(), m.primitives[1].pose());
        assert_eq!(m.primitives[1].pose().translation(), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn nested_transforms_compose_outer_last() {
        // rotate 90 about z, then translate by (1,0,0): the local x axis ends up along world y
        let m = parse_csg("translate(1, 0, 0, rotate(0, 0, 90, box(2, 0.5, 0.5)))").unwrap();
        let p = m.primitives[0];
        assert!(p.occupancy_hard(&Vec3::new(1.0, 0.9, 0.0)));
        assert!(!p.occupancy_hard(&Vec3::new(1.9, 0.0, 0.0)));
    }

    #[test]
    fn variadic_folds() {
        let m = parse_csg("difference(sphere(3), sphere(2), sphere(1))").unwrap();
        assert_eq!(
            m.expr,
            CsgExpr::difference(
                CsgExpr::difference(CsgExpr::Leaf(0), CsgExpr::Leaf(1)),
                CsgExpr::Leaf(2)
            )
        );
        let m = parse_csg("union(sphere(3), sphere(2), sphere(1))").unwrap();
        assert_eq!(
            m.expr,
            CsgExpr::union(CsgExpr::Leaf(0), CsgExpr::union(CsgExpr::Leaf(1), CsgExpr::Leaf(2)))
        );
    }

    #[test]
    fn comments_and_whitespace() {
        let src = "# a comment\nunion(\n  cone(angle=30), # trailing\n  cylinder( r = 0.5 )\n)\n";
        let m = parse_csg(src).unwrap();
        assert!((m.primitives[0].q()[0] - 30f64.to_radians()).abs() < 1e-15);
        assert_eq!(m.primitives[1].kind(), PrimitiveKind::Cylinder);
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_csg("union(sphere(1),\n  blob(2))").unwrap_err();
        assert_eq!(e.location(), (2, 3));
        let e = parse_csg("difference(sphere(1))").unwrap_err();
        assert!(matches!(e, ParseError::Arity { got: 1, .. }));
        let e = parse_csg("sphere(r=-1)").unwrap_err();
        assert!(matches!(
            e,
            ParseError::Primitive {
                source: GeometryError::NonPositive { .. },
                ..
            }
        ));
        let e = parse_csg("sphere(1) sphere(2)").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { .. }));
        assert!(parse_csg("complement(sphere(1), sphere(2))").is_err());
        assert!(parse_csg("sphere(1").is_err());
        assert!(parse_csg("box(1, 2)").is_err());
        assert!(parse_csg("sphere(1) $").is_err());
    }

    #[test]
    fn universe_and_empty() {
        let m = parse_csg("union(universe(), empty())").unwrap();
        assert_eq!(m.to_string(), "union(universe(), empty())");
        assert!(m.primitives.is_empty());
    }
}
