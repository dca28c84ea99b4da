//! Point list formats: `x y z` text, `x y z label` text, a parallel label
//! file (one 0/1 per line) and little-endian binary (u64 count followed by
//! f64 triples).

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum PointIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("binary point file truncated: expected {expected} points")]
    Truncated { expected: u64 },
}

fn parse_fields(line: &str, n: usize, lineno: usize) -> Result<Vec<f64>, PointIoError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != n {
        return Err(PointIoError::Parse {
            line: lineno,
            msg: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|_| PointIoError::Parse {
                line: lineno,
                msg: format!("invalid number '{f}'"),
            })
        })
        .collect()
}

fn content_lines(r: impl BufRead) -> impl Iterator<Item = (usize, io::Result<String>)> {
    r.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true))
}

pub fn write_xyz(mut w: impl Write, points: &[Vec3]) -> io::Result<()> {
    for p in points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

pub fn read_xyz(r: impl BufRead) -> Result<Vec<Vec3>, PointIoError> {
    content_lines(r)
        .map(|(n, l)| {
            let v = parse_fields(&l?, 3, n)?;
            Ok(Vec3::new(v[0], v[1], v[2]))
        })
        .collect()
}

pub fn write_labels(mut w: impl Write, labels: &[bool]) -> io::Result<()> {
    for &b in labels {
        writeln!(w, "{}", b as u8)?;
    }
    Ok(())
}

fn parse_label(s: &str, line: usize) -> Result<bool, PointIoError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(PointIoError::Parse {
            line,
            msg: format!("label must be 0 or 1, found '{other}'"),
        }),
    }
}

pub fn read_labels(r: impl BufRead) -> Result<Vec<bool>, PointIoError> {
    content_lines(r).map(|(n, l)| parse_label(l?.trim(), n)).collect()
}

pub fn write_labeled(mut w: impl Write, points: &[Vec3], labels: &[bool]) -> io::Result<()> {
    for (p, &b) in points.iter().zip(labels) {
        writeln!(w, "{} {} {} {}", p.x, p.y, p.z, b as u8)?;
    }
    Ok(())
}

pub fn read_labeled(r: impl BufRead) -> Result<(Vec<Vec3>, Vec<bool>), PointIoError> {
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for (n, l) in content_lines(r) {
        let l = l?;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(PointIoError::Parse {
                line: n,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let v = parse_fields(&fields[..3].join(" "), 3, n)?;
        pts.push(Vec3::new(v[0], v[1], v[2]));
        labels.push(parse_label(fields[3], n)?);
    }
    Ok((pts, labels))
}

pub fn write_bin(mut w: impl Write, points: &[Vec3]) -> io::Result<()> {
    w.write_all(&(points.len() as u64).to_le_bytes())?;
    for p in points {
        for c in p.iter() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_bin(mut r: impl Read) -> Result<Vec<Vec3>, PointIoError> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head)?;
    let n = u64::from_le_bytes(head);
    let mut out = Vec::new();
    let mut buf = [0u8; 24];
    for _ in 0..n {
        r.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => PointIoError::Truncated { expected: n },
            _ => PointIoError::Io(e),
        })?;
        let f = |i: usize| f64::from_le_bytes(buf[i * 8..i * 8 + 8].try_into().unwrap());
        out.push(Vec3::new(f(0), f(1), f(2)));
    }
    Ok(out)
}
