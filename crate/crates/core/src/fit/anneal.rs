use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fit::bp::{bp_objective, solve_minterm, BpInstance, Matrices, RowLayout, Signature};
use crate::fit::{FitError, FitReport, Instant, SolverKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnealInit {
    /// Truncated minterm solution (paired layout with complements only).
    #[default]
    Minterm,
    /// No selections, no active columns.
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Geometric temperature decay per sweep.
    pub decay: f64,
    /// Target acceptance rate of uphill moves at the start temperature.
    pub initial_acceptance: f64,
    pub max_sweeps: usize,
    pub time_limit_secs: Option<f64>,
    /// Row layout; `None` picks paired when complements are allowed.
    pub layout: Option<RowLayout>,
    pub init: AnnealInit,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            decay: 0.995,
            initial_acceptance: 0.8,
            max_sweeps: 4000,
            time_limit_secs: Some(60.0),
            layout: None,
            init: AnnealInit::Minterm,
        }
    }
}

/// Incremental objective over distinct signatures.
#[derive(Clone)]
pub(crate) struct State<'a> {
    sigs: &'a [Signature],
    /// Primitive occupancy of each row per signature, before `w_c`.
    occ: Vec<Vec<bool>>,
    m: Matrices,
    /// Selected rows with a false literal, per signature and column.
    fail: Vec<u32>,
    /// Active columns with no failing row, per signature.
    active: Vec<u32>,
    err: u64,
}

impl<'a> State<'a> {
    pub(crate) fn new(sigs: &'a [Signature], m: Matrices) -> Self {
        let occ = sigs
            .iter()
            .map(|s| m.rows.iter().map(|&k| s.bits[k]).collect())
            .collect();
        let mut st = Self {
            sigs,
            occ,
            fail: vec![0; sigs.len() * m.c()],
            active: vec![0; sigs.len()],
            m,
            err: 0,
        };
        st.rebuild();
        st
    }

    fn lit(&self, s: usize, r: usize) -> bool {
        self.occ[s][r] != self.m.w_c[r]
    }

    fn contrib(&self, s: usize, inside: bool) -> u64 {
        if inside {
            self.sigs[s].outside
        } else {
            self.sigs[s].inside
        }
    }

    fn rebuild(&mut self) {
        let c = self.m.c();
        self.err = 0;
        for s in 0..self.sigs.len() {
            self.active[s] = 0;
            for j in 0..c {
                let f = (0..self.m.r()).filter(|&r| self.m.w_i[r][j] && !self.lit(s, r)).count() as u32;
                self.fail[s * c + j] = f;
                if f == 0 && self.m.w_u[j] {
                    self.active[s] += 1;
                }
            }
            self.err += self.contrib(s, self.active[s] > 0);
        }
    }

    /// Misclassified sample count recomputed from scratch.
    pub(crate) fn recount(&self) -> u64 {
        (0..self.sigs.len())
            .map(|s| {
                let inside = (0..self.m.c())
                    .any(|j| self.m.w_u[j] && (0..self.m.r()).all(|r| !self.m.w_i[r][j] || self.lit(s, r)));
                self.contrib(s, inside)
            })
            .sum()
    }

    pub(crate) fn err(&self) -> u64 {
        self.err
    }

    fn shift_active(&mut self, s: usize, up: bool) {
        let before = self.active[s] > 0;
        if up {
            self.active[s] += 1;
        } else {
            self.active[s] -= 1;
        }
        let after = self.active[s] > 0;
        if before != after {
            self.err = self.err - self.contrib(s, before) + self.contrib(s, after);
        }
    }

    fn shift_fail(&mut self, s: usize, j: usize, up: bool) {
        let idx = s * self.m.c() + j;
        let before = self.fail[idx] == 0;
        if up {
            self.fail[idx] += 1;
        } else {
            self.fail[idx] -= 1;
        }
        let after = self.fail[idx] == 0;
        if self.m.w_u[j] && before != after {
            self.shift_active(s, after);
        }
    }

    /// Flips bit `b` of `[w_c, w_i row-major, w_u]`.
    pub(crate) fn flip(&mut self, b: usize) {
        let (r_n, c_n) = (self.m.r(), self.m.c());
        if b < r_n {
            for s in 0..self.sigs.len() {
                let was = self.lit(s, b);
                for j in 0..c_n {
                    if self.m.w_i[b][j] {
                        self.shift_fail(s, j, was);
                    }
                }
            }
            self.m.w_c[b] = !self.m.w_c[b];
        } else if b < r_n + r_n * c_n {
            let (r, j) = ((b - r_n) / c_n, (b - r_n) % c_n);
            let sel = !self.m.w_i[r][j];
            self.m.w_i[r][j] = sel;
            for s in 0..self.sigs.len() {
                if !self.lit(s, r) {
                    self.shift_fail(s, j, sel);
                }
            }
        } else {
            let j = b - r_n - r_n * c_n;
            self.m.w_u[j] = !self.m.w_u[j];
            let on = self.m.w_u[j];
            for s in 0..self.sigs.len() {
                if self.fail[s * c_n + j] == 0 {
                    self.shift_active(s, on);
                }
            }
        }
    }
}

/// Simulated annealing over single-bit flips, started from the minterm
/// truncation (or the empty solution). Returns the best solution seen, which
/// is never worse than the start.
pub fn solve_anneal(inst: &BpInstance, cfg: &AnnealConfig) -> Result<(Matrices, FitReport), FitError> {
    let layout = cfg.layout.unwrap_or(if inst.allow_complement {
        RowLayout::Paired
    } else {
        RowLayout::Single
    });
    let (k, c) = (inst.k(), inst.c);
    match (cfg.init, layout, inst.allow_complement) {
        (AnnealInit::Minterm, RowLayout::Paired, true) => {
            let (m, rep) = solve_minterm(inst)?;
            let (m, mut report) = solve_anneal_from(inst, cfg, m)?;
            report.min_columns = rep.min_columns;
            Ok((m, report))
        }
        _ => solve_anneal_from(inst, cfg, Matrices::empty(k, c, layout)),
    }
}

/// Annealing from a given start. Columns are added (inactive) or dropped to
/// match the instance's budget; `cfg.init` and `cfg.layout` are ignored.
pub fn solve_anneal_from(
    inst: &BpInstance,
    cfg: &AnnealConfig,
    mut init: Matrices,
) -> Result<(Matrices, FitReport), FitError> {
    let start = Instant::now();
    let c = inst.c;
    init.w_i.iter_mut().for_each(|row| row.resize(c, false));
    init.w_u.resize(c, false);
    if !inst.allow_complement {
        init.w_c.iter_mut().for_each(|w| *w = false);
    }
    bp_objective(inst, &init)?;
    let (r_n, c_n) = (init.r(), init.c());
    let free: Vec<usize> = (0..r_n * c_n + r_n + c_n)
        .filter(|&b| inst.allow_complement || b >= r_n)
        .collect();
    let sigs = inst.signatures();
    let n = inst.n() as f64;
    let base = State::new(&sigs, init);

    let mut best = (base.err(), base.m.clone());
    let mut trace = vec![best.0 as f64 / n];
    let mut flips = 0usize;
    let out_of_time = |t: &Instant| cfg.time_limit_secs.is_some_and(|lim| t.elapsed().as_secs_f64() > lim);

    if !free.is_empty() && best.0 > 0 {
        'restarts: for restart in 0..cfg.restarts.max(1) {
            let seed = cfg
                .seed
                .wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut st = base.clone();
            let mut temp = initial_temperature(&mut st, &free, cfg.initial_acceptance, &mut rng);
            for _sweep in 0..cfg.max_sweeps {
                for _ in 0..free.len() {
                    let b = free[rng.gen_range(0..free.len())];
                    let before = st.err();
                    st.flip(b);
                    let delta = st.err() as f64 - before as f64;
                    flips += 1;
                    if delta > 0.0 && rng.gen::<f64>() >= (-delta / temp).exp() {
                        st.flip(b);
                    } else if st.err() < best.0 {
                        best = (st.err(), st.m.clone());
                    }
                    debug_assert!(!flips.is_multiple_of(1000) || st.err() == st.recount());
                    if best.0 == 0 {
                        trace.push(0.0);
                        break 'restarts;
                    }
                }
                trace.push(best.0 as f64 / n);
                temp *= cfg.decay;
                if out_of_time(&start) {
                    break 'restarts;
                }
            }
        }
    }
    let report = FitReport {
        solver: SolverKind::Anneal,
        objective: best.0 as f64 / n,
        objective_trace: trace,
        iterations: flips,
        wall_time: start.elapsed().as_secs_f64(),
        min_columns: None,
    };
    Ok((best.1, report))
}

/// Temperature at which the mean uphill move from `st` is accepted with the
/// requested probability.
fn initial_temperature(st: &mut State<'_>, free: &[usize], acceptance: f64, rng: &mut ChaCha8Rng) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for _ in 0..256 {
        let b = free[rng.gen_range(0..free.len())];
        let before = st.err();
        st.flip(b);
        let d = st.err() as f64 - before as f64;
        st.flip(b);
        if d > 0.0 {
            sum += d;
            count += 1;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 1.0 };
    -mean / acceptance.clamp(1e-6, 1.0 - 1e-6).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::bp::solve_exhaustive;

    fn random_instance(seed: u64, n: usize, k: usize, c: usize) -> BpInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let occ: Vec<Vec<bool>> = (0..n).map(|_| (0..k).map(|_| rng.gen()).collect()).collect();
        let target = occ.iter().map(|_| rng.gen()).collect();
        BpInstance::new(occ, target, c, true).unwrap()
    }

    #[test]
    fn incremental_objective_matches_recount() {
        let inst = random_instance(3, 300, 4, 3);
        let sigs = inst.signatures();
        let mut st = State::new(&sigs, Matrices::empty(4, 3, RowLayout::Paired));
        let nb = st.m.r() * 3 + st.m.r() + 3;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 1..=20_000 {
            st.flip(rng.gen_range(0..nb));
            if i % 1000 == 0 {
                assert_eq!(st.err(), st.recount());
                let from_scratch = bp_objective(&inst, &st.m).unwrap();
                assert_eq!(st.err() as f64 / inst.n() as f64, from_scratch);
            }
        }
    }

    #[test]
    fn reproducible_and_never_worse_than_start() {
        let inst = random_instance(5, 200, 3, 2);
        let cfg = AnnealConfig {
            seed: 42,
            max_sweeps: 300,
            ..Default::default()
        };
        let (a, ra) = solve_anneal(&inst, &cfg).unwrap();
        let (b, rb) = solve_anneal(&inst, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.objective, rb.objective);
        let (_, minterm) = solve_minterm(&inst).unwrap();
        assert!(ra.objective <= minterm.objective);
        assert!(ra.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*ra.objective_trace.last().unwrap(), ra.objective);
        assert_eq!(bp_objective(&inst, &a).unwrap(), ra.objective);
    }

    #[test]
    fn minterm_solvable_stays_zero() {
        let inst = BpInstance::new(
            vec![
                vec![true, false],
                vec![false, true],
                vec![true, true],
                vec![false, false],
            ],
            vec![true, true, false, false],
            2,
            true,
        )
        .unwrap();
        let (m, r) = solve_anneal(&inst, &AnnealConfig::default()).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.iterations, 0);
        assert_eq!(bp_objective(&inst, &m).unwrap(), 0.0);
    }

    #[test]
    fn warm_start_keeps_columns() {
        let inst = random_instance(11, 150, 3, 2);
        let (small, rs) = solve_anneal(&inst, &AnnealConfig::default()).unwrap();
        let wide = BpInstance { c: 4, ..inst.clone() };
        let (m, r) = solve_anneal_from(&wide, &AnnealConfig::default(), small).unwrap();
        assert_eq!(m.c(), 4);
        assert!(r.objective <= rs.objective);
    }

    #[test]
    fn matches_exhaustive_without_complements() {
        let mut inst = random_instance(8, 100, 2, 1);
        inst.allow_complement = false;
        let (_, ex) = solve_exhaustive(&inst).unwrap();
        let (m, an) = solve_anneal(&inst, &AnnealConfig::default()).unwrap();
        assert_eq!(an.objective, ex.objective);
        assert!(m.w_c.iter().all(|c| !c));
    }
}
