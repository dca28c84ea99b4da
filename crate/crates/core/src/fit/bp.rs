use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::csg::Stump;
use crate::fit::{FitError, FitReport, Instant, SolverKind};
use crate::geometry::{Primitive, Vec3};

/// Largest `R*C + R + C` that [`solve_exhaustive`] enumerates by default.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 24;

/// How primitives map to rows of the weight matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowLayout {
    /// One row per primitive.
    #[default]
    Single,
    /// Two rows per primitive: rows `0..K` start positive, rows `K..2K` complemented.
    Paired,
}

impl RowLayout {
    fn rows(self, k: usize) -> (Vec<usize>, Vec<bool>) {
        match self {
            RowLayout::Single => ((0..k).collect(), vec![false; k]),
            RowLayout::Paired => ((0..k).chain(0..k).collect(), (0..2 * k).map(|r| r >= k).collect()),
        }
    }
}

/// Binary program: primitive occupancy bits per sample, target bits, column budget.
#[derive(Clone, Debug, PartialEq)]
pub struct BpInstance {
    /// `occ[i][k]`: sample `i` lies inside primitive `k`.
    pub occ: Vec<Vec<bool>>,
    pub target: Vec<bool>,
    pub c: usize,
    pub allow_complement: bool,
}

/// A distinct primitive-occupancy signature with its label counts.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Signature {
    pub bits: Vec<bool>,
    pub inside: u64,
    pub outside: u64,
}

impl BpInstance {
    pub fn new(occ: Vec<Vec<bool>>, target: Vec<bool>, c: usize, allow_complement: bool) -> Result<Self, FitError> {
        if occ.len() != target.len() {
            return Err(FitError::Dimension(format!(
                "{} occupancy rows for {} targets",
                occ.len(),
                target.len()
            )));
        }
        if occ.is_empty() {
            return Err(FitError::EmptyPoints);
        }
        let k = occ[0].len();
        if let Some(i) = occ.iter().position(|r| r.len() != k) {
            return Err(FitError::Dimension(format!(
                "occupancy row {i} has {} entries, expected {k}",
                occ[i].len()
            )));
        }
        Ok(Self {
            occ,
            target,
            c,
            allow_complement,
        })
    }

    /// Occupancy from hard primitive membership at `points`.
    pub fn from_primitives(
        primitives: &[Primitive],
        points: &[Vec3],
        target: &[bool],
        c: usize,
        allow_complement: bool,
    ) -> Result<Self, FitError> {
        let occ = points
            .iter()
            .map(|x| primitives.iter().map(|p| p.occupancy_hard(x)).collect())
            .collect();
        Self::new(occ, target.to_vec(), c, allow_complement)
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn k(&self) -> usize {
        self.occ.first().map_or(0, Vec::len)
    }

    /// Distinct signatures in ascending bit order.
    pub(crate) fn signatures(&self) -> Vec<Signature> {
        let mut map: BTreeMap<&[bool], (u64, u64)> = BTreeMap::new();
        for (row, &t) in self.occ.iter().zip(&self.target) {
            let e = map.entry(row.as_slice()).or_default();
            if t {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        map.into_iter()
            .map(|(bits, (inside, outside))| Signature {
                bits: bits.to_vec(),
                inside,
                outside,
            })
            .collect()
    }
}

/// Connection matrices over a row table; `rows[r]` is the primitive behind row `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matrices {
    pub rows: Vec<usize>,
    pub w_c: Vec<bool>,
    pub w_i: Vec<Vec<bool>>,
    pub w_u: Vec<bool>,
}

impl Matrices {
    /// No selections and no active columns.
    pub fn empty(k: usize, c: usize, layout: RowLayout) -> Self {
        let (rows, w_c) = layout.rows(k);
        let r = rows.len();
        Self {
            rows,
            w_c,
            w_i: vec![vec![false; c]; r],
            w_u: vec![false; c],
        }
    }

    pub fn r(&self) -> usize {
        self.rows.len()
    }

    pub fn c(&self) -> usize {
        self.w_u.len()
    }

    /// Hard stump value for one sample's primitive occupancy.
    pub fn eval(&self, occ: &[bool]) -> bool {
        (0..self.c())
            .any(|j| self.w_u[j] && (0..self.r()).all(|r| !self.w_i[r][j] || (occ[self.rows[r]] != self.w_c[r])))
    }

    pub fn to_stump(&self, primitives: &[Primitive]) -> Stump {
        Stump {
            primitives: self.rows.iter().map(|&k| primitives[k]).collect(),
            w_c: self.w_c.clone(),
            w_i: self.w_i.clone(),
            w_u: self.w_u.clone(),
        }
    }

    fn check(&self, inst: &BpInstance) -> Result<(), FitError> {
        let k = inst.k();
        if let Some(&bad) = self.rows.iter().find(|&&p| p >= k) {
            return Err(FitError::Dimension(format!(
                "row refers to primitive {bad}, instance has {k}"
            )));
        }
        if self.w_c.len() != self.r() || self.w_i.len() != self.r() {
            return Err(FitError::Dimension(
                "w_c / w_i row count differs from the row table".into(),
            ));
        }
        if let Some(r) = self.w_i.iter().position(|row| row.len() != self.c()) {
            return Err(FitError::Dimension(format!(
                "w_i row {r} has {} entries, expected {}",
                self.w_i[r].len(),
                self.c()
            )));
        }
        Ok(())
    }
}

/// Mean absolute error of the hard stump against the targets, from the occupancy bits.
pub fn bp_objective(inst: &BpInstance, m: &Matrices) -> Result<f64, FitError> {
    m.check(inst)?;
    let wrong = inst
        .occ
        .iter()
        .zip(&inst.target)
        .filter(|(o, &t)| m.eval(o) != t)
        .count();
    Ok(wrong as f64 / inst.n() as f64)
}

fn report(
    solver: SolverKind,
    trace: Vec<f64>,
    iterations: usize,
    start: Instant,
    min_columns: Option<usize>,
) -> FitReport {
    FitReport {
        solver,
        objective: *trace.last().expect("trace is never empty"),
        objective_trace: trace,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        min_columns,
    }
}

/// Exhaustive search with the single-row layout and the default cap.
pub fn solve_exhaustive(inst: &BpInstance) -> Result<(Matrices, FitReport), FitError> {
    solve_exhaustive_with(inst, RowLayout::Single, DEFAULT_EXHAUSTIVE_CAP)
}

/// Enumerates every assignment of the bit string `[w_c, w_i row-major, w_u]`;
/// the lexicographically smallest optimum wins. `w_c` stays zero when
/// complements are not allowed.
pub fn solve_exhaustive_with(
    inst: &BpInstance,
    layout: RowLayout,
    cap: usize,
) -> Result<(Matrices, FitReport), FitError> {
    let start = Instant::now();
    let base = Matrices::empty(inst.k(), inst.c, layout);
    let (r_n, c_n) = (base.r(), base.c());
    let bits = r_n * c_n + r_n + c_n;
    if bits > cap || bits >= 63 {
        return Err(FitError::Budget { bits, cap });
    }
    let base_wc = vec![false; r_n];
    // free positions in bit-string order
    let free: Vec<usize> = (0..bits).filter(|&b| inst.allow_complement || b >= r_n).collect();
    let sigs = inst.signatures();
    let row_bits: Vec<u64> = sigs
        .iter()
        .map(|s| (0..r_n).fold(0u64, |m, r| m | ((s.bits[base.rows[r]] as u64) << r)))
        .collect();
    let fixed_wc: u64 = (0..r_n).fold(0, |m, r| m | ((base_wc[r] as u64) << r));

    let mut best = (u64::MAX, 0u64);
    let mut trace = Vec::new();
    let nf = free.len();
    let mut sel = vec![0u64; c_n];
    for code in 0..(1u64 << nf) {
        let mut wc = fixed_wc;
        sel.iter_mut().for_each(|s| *s = 0);
        let mut wu = 0u64;
        for (i, &pos) in free.iter().enumerate() {
            if (code >> (nf - 1 - i)) & 1 == 0 {
                continue;
            }
            if pos < r_n {
                wc |= 1 << pos;
            } else if pos < r_n + r_n * c_n {
                let p = pos - r_n;
                sel[p % c_n] |= 1 << (p / c_n);
            } else {
                wu |= 1 << (pos - r_n - r_n * c_n);
            }
        }
        let mut err = 0u64;
        for (s, rb) in sigs.iter().zip(&row_bits) {
            let lits = rb ^ wc;
            let inside = (0..c_n).any(|j| (wu >> j) & 1 == 1 && lits & sel[j] == sel[j]);
            err += if inside { s.outside } else { s.inside };
            if err >= best.0 {
                break;
            }
        }
        if err < best.0 {
            best = (err, code);
            trace.push(err as f64 / inst.n() as f64);
        }
    }

    let mut m = base;
    m.w_c = base_wc;
    let code = best.1;
    for (i, &pos) in free.iter().enumerate() {
        let on = (code >> (nf - 1 - i)) & 1 == 1;
        if pos < r_n {
            m.w_c[pos] = on;
        } else if pos < r_n + r_n * c_n {
            let p = pos - r_n;
            m.w_i[p / c_n][p % c_n] = on;
        } else {
            m.w_u[pos - r_n - r_n * c_n] = on;
        }
    }
    Ok((m, report(SolverKind::Exhaustive, trace, 1usize << nf, start, None)))
}

/// One full-conjunction column per inside signature (paired layout), ranked
/// by inside minus outside points covered and truncated to `C` columns.
pub fn solve_minterm(inst: &BpInstance) -> Result<(Matrices, FitReport), FitError> {
    if !inst.allow_complement {
        return Err(FitError::ComplementRequired);
    }
    let start = Instant::now();
    let k = inst.k();
    let mut cols: Vec<(i64, Vec<bool>)> = inst
        .signatures()
        .into_iter()
        .map(|s| (s.inside as i64 - s.outside as i64, s.bits))
        .filter(|(gain, _)| *gain > 0)
        .collect();
    cols.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let min_columns = cols.len();
    let mut m = Matrices::empty(k, inst.c, RowLayout::Paired);
    for (j, (_, bits)) in cols.iter().take(inst.c).enumerate() {
        for (p, &b) in bits.iter().enumerate() {
            m.w_i[if b { p } else { k + p }][j] = true;
        }
        m.w_u[j] = true;
    }
    let obj = bp_objective(inst, &m)?;
    Ok((m, report(SolverKind::Minterm, vec![obj], 1, start, Some(min_columns))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(occ: &[&[u8]], target: &[u8], c: usize, comp: bool) -> BpInstance {
        BpInstance::new(
            occ.iter().map(|r| r.iter().map(|b| *b == 1).collect()).collect(),
            target.iter().map(|b| *b == 1).collect(),
            c,
            comp,
        )
        .unwrap()
    }

    #[test]
    fn objective_examples() {
        let i = inst(&[&[1, 0], &[0, 1], &[0, 0]], &[1, 1, 1], 2, true);
        let m = Matrices::empty(2, 2, RowLayout::Single);
        assert_eq!(bp_objective(&i, &m).unwrap(), 1.0);
        let one = inst(&[&[1], &[0], &[1]], &[1, 0, 1], 1, false);
        let mut m = Matrices::empty(1, 1, RowLayout::Single);
        m.w_i[0][0] = true;
        m.w_u[0] = true;
        assert_eq!(bp_objective(&one, &m).unwrap(), 0.0);
        let mut bad = m.clone();
        bad.w_i[0].push(true);
        assert!(bp_objective(&one, &bad).is_err());
    }

    #[test]
    fn exhaustive_union_of_two() {
        let i = inst(&[&[1, 0], &[0, 1], &[1, 1], &[0, 0]], &[1, 1, 1, 0], 2, true);
        let (m, r) = solve_exhaustive(&i).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(bp_objective(&i, &m).unwrap(), 0.0);
        assert_eq!(*r.objective_trace.last().unwrap(), r.objective);
    }

    #[test]
    fn exhaustive_complement() {
        let i = inst(&[&[1], &[0], &[0]], &[0, 1, 1], 1, true);
        let (m, r) = solve_exhaustive(&i).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(m.w_c, vec![true]);
        let no = BpInstance {
            allow_complement: false,
            ..i
        };
        let (m, r) = solve_exhaustive(&no).unwrap();
        assert_eq!(m.w_c, vec![false]);
        // best of {empty, primitive, everything}: everything misses one of three
        assert!((r.objective - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_budget_and_tie_break() {
        let i = inst(&[&[1, 0, 1, 0, 1]], &[1], 3, true);
        assert!(solve_exhaustive(&i).is_ok());
        let big = inst(&[&[1, 0, 1, 0, 1]], &[1], 4, true);
        assert!(matches!(
            solve_exhaustive(&big),
            Err(FitError::Budget { bits: 29, cap: 24 })
        ));
        // all-inside target: the smallest optimal string is a single empty active column
        let tiny = inst(&[&[1], &[0]], &[1, 1], 1, true);
        let (m, _) = solve_exhaustive(&tiny).unwrap();
        assert_eq!((m.w_c, m.w_i, m.w_u), (vec![false], vec![vec![false]], vec![true]));
    }

    #[test]
    fn minterm_symmetric_difference() {
        let i = inst(
            &[&[1, 0], &[0, 1], &[1, 1], &[0, 0], &[1, 0]],
            &[1, 1, 0, 0, 1],
            4,
            true,
        );
        let (m, r) = solve_minterm(&i).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.min_columns, Some(2));
        assert_eq!(m.w_u, vec![true, true, false, false]);
        assert_eq!(m.r(), 4);
        // most covered signature {10} first
        assert_eq!(
            m.w_i.iter().map(|r| r[0]).collect::<Vec<_>>(),
            vec![true, false, false, true]
        );
    }

    #[test]
    fn minterm_edge_cases() {
        let zeros = inst(&[&[1, 0], &[0, 1]], &[0, 0], 3, true);
        let (m, r) = solve_minterm(&zeros).unwrap();
        assert_eq!(r.objective, 0.0);
        assert!(m.w_u.iter().all(|u| !u));
        // same signature labelled both ways: the minority is unavoidable error
        let conflict = inst(&[&[1], &[1], &[1], &[0]], &[1, 1, 0, 0], 2, true);
        let (_, r) = solve_minterm(&conflict).unwrap();
        assert_eq!(r.objective, 0.25);
        let no = BpInstance {
            allow_complement: false,
            ..conflict
        };
        assert_eq!(solve_minterm(&no).unwrap_err(), FitError::ComplementRequired);
    }

    #[test]
    fn minterm_truncation_reports_residual() {
        let i = inst(&[&[1, 0], &[1, 0], &[0, 1], &[0, 0]], &[1, 1, 1, 0], 1, true);
        let (m, r) = solve_minterm(&i).unwrap();
        assert_eq!(r.objective, 0.25);
        assert_eq!(r.min_columns, Some(2));
        assert_eq!(m.c(), 1);
    }
}
