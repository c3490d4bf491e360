//! Dense two-phase primal simplex for bounded variables.
//!
//! Every column is shifted so its lower bound is zero; nonbasic columns sit at
//! either bound. Entering columns are chosen by largest reduced cost until a
//! long run of degenerate pivots is observed, after which Bland's smallest-index
//! rule takes over for the rest of the solve.

use std::time::Instant;

use super::model::Relation;

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 64;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min cost·x` subject to `rows` and `lower <= x <= upper`.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    Infeasible,
    Unbounded,
    /// Pivot budget or wall-clock deadline exhausted.
    Aborted,
}

/// How an original variable maps onto tableau columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// x = offset + col
    Shifted { col: usize, offset: f64 },
    /// x = offset - col
    Mirrored { col: usize, offset: f64 },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    ncols: usize,
    a: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    /// Row holding each basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    at_upper: Vec<bool>,
    ub: Vec<f64>,
    d: Vec<f64>,
}

enum Stop {
    Unbounded,
    Aborted,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.ncols + c]
    }

    fn nonbasic_value(&self, c: usize) -> f64 {
        if self.at_upper[c] {
            self.ub[c]
        } else {
            0.0
        }
    }

    fn price(&mut self, cost: &[f64]) {
        self.d.clear();
        self.d.extend_from_slice(cost);
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.ncols..(r + 1) * self.ncols];
                for (dj, &arj) in self.d.iter_mut().zip(row) {
                    *dj -= cb * arj;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.ncols;
        let piv = self.a[r * n + q];
        {
            let row = &mut self.a[r * n..(r + 1) * n];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for chunk in before.chunks_exact_mut(n).chain(after.chunks_exact_mut(n)) {
            let f = chunk[q];
            if f != 0.0 {
                for (v, &p) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                chunk[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, &p) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = usize::MAX;
        self.basis[r] = q;
        self.row_of[q] = r;
    }

    fn run(&mut self, deadline: Option<Instant>, pivots: &mut usize) -> Result<(), Stop> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Stop::Aborted);
            }
            if (*pivots).is_multiple_of(128) {
                if let Some(t) = deadline {
                    if Instant::now() >= t {
                        return Err(Stop::Aborted);
                    }
                }
            }

            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if self.row_of[j] != usize::MAX || self.ub[j] <= 0.0 {
                    continue;
                }
                let dj = self.d[j];
                let gain = if !self.at_upper[j] && dj < -DUAL_TOL {
                    -dj
                } else if self.at_upper[j] && dj > DUAL_TOL {
                    dj
                } else {
                    continue;
                };
                if bland {
                    enter = Some(j);
                    break;
                }
                if gain > best {
                    best = gain;
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                return Ok(());
            };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

            // Ratio test: basic r moves by -dir * alpha_r * theta.
            let mut theta = self.ub[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0f64;
            for r in 0..self.m {
                let alpha = dir * self.at(r, q);
                let (limit, to_upper) = if alpha > PIVOT_TOL {
                    ((self.xb[r] / alpha).max(0.0), false)
                } else if alpha < -PIVOT_TOL {
                    let ubr = self.ub[self.basis[r]];
                    if !ubr.is_finite() {
                        continue;
                    }
                    (((ubr - self.xb[r]) / -alpha).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < theta || (limit <= theta && theta.is_infinite()),
                    Some((lr, _)) => {
                        let tie = (limit - theta).abs() <= 1e-12 * (1.0 + theta.abs());
                        if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                alpha.abs() > leave_alpha.abs()
                            }
                        } else {
                            limit < theta
                        }
                    }
                };
                if better {
                    theta = limit;
                    leave = Some((r, to_upper));
                    leave_alpha = alpha;
                }
            }
            if theta.is_infinite() {
                return Err(Stop::Unbounded);
            }

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            if theta > 0.0 {
                for r in 0..self.m {
                    let arq = self.at(r, q);
                    if arq != 0.0 {
                        self.xb[r] -= dir * arq * theta;
                    }
                }
            }
            let entering_value = self.nonbasic_value(q) + dir * theta;
            match leave {
                None => {
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    self.pivot(r, q);
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[q] = false;
                    self.xb[r] = entering_value;
                }
            }
        }
    }
}

/// Solves the LP from scratch.
pub fn solve_lp(problem: &LpProblem, deadline: Option<Instant>) -> LpOutcome {
    let n = problem.num_vars();
    let mut maps = Vec::with_capacity(n);
    let mut col_ub: Vec<f64> = Vec::new();
    let mut col_cost: Vec<f64> = Vec::new();
    for j in 0..n {
        let (l, u, c) = (problem.lower[j], problem.upper[j], problem.cost[j]);
        if l > u {
            return LpOutcome::Infeasible;
        }
        if l.is_finite() {
            maps.push(ColMap::Shifted { col: col_ub.len(), offset: l });
            col_ub.push(u - l);
            col_cost.push(c);
        } else if u.is_finite() {
            maps.push(ColMap::Mirrored { col: col_ub.len(), offset: u });
            col_ub.push(f64::INFINITY);
            col_cost.push(-c);
        } else {
            let pos = col_ub.len();
            maps.push(ColMap::Split { pos, neg: pos + 1 });
            col_ub.extend([f64::INFINITY, f64::INFINITY]);
            col_cost.extend([c, -c]);
        }
    }
    let nstruct = col_ub.len();
    let m = problem.rows.len();

    // Row data over shifted columns, with nonnegative rhs.
    struct Prepared {
        coefs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    }
    let mut prepared = Vec::with_capacity(m);
    let mut n_slack = 0;
    let mut n_art = 0;
    for row in &problem.rows {
        let mut rhs = row.rhs;
        let mut coefs = Vec::with_capacity(row.coefs.len());
        for &(j, a) in &row.coefs {
            match maps[j] {
                ColMap::Shifted { col, offset } => {
                    rhs -= a * offset;
                    coefs.push((col, a));
                }
                ColMap::Mirrored { col, offset } => {
                    rhs -= a * offset;
                    coefs.push((col, -a));
                }
                ColMap::Split { pos, neg } => {
                    coefs.push((pos, a));
                    coefs.push((neg, -a));
                }
            }
        }
        let mut relation = row.relation;
        if rhs < 0.0 {
            rhs = -rhs;
            for c in coefs.iter_mut() {
                c.1 = -c.1;
            }
            relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        match relation {
            Relation::Le => n_slack += 1,
            Relation::Ge => {
                n_slack += 1;
                n_art += 1
            }
            Relation::Eq => n_art += 1,
        }
        prepared.push(Prepared { coefs, relation, rhs });
    }

    let ncols = nstruct + n_slack + n_art;
    let art_start = nstruct + n_slack;
    let mut tab = Tableau {
        m,
        ncols,
        a: vec![0.0; m * ncols],
        xb: vec![0.0; m],
        basis: vec![0; m],
        row_of: vec![usize::MAX; ncols],
        at_upper: vec![false; ncols],
        ub: col_ub,
        d: Vec::with_capacity(ncols),
    };
    tab.ub.resize(ncols, f64::INFINITY);

    let mut next_slack = nstruct;
    let mut next_art = art_start;
    let mut rhs_scale = 1.0f64;
    for (r, row) in prepared.iter().enumerate() {
        let base = r * ncols;
        for &(c, a) in &row.coefs {
            tab.a[base + c] += a;
        }
        tab.xb[r] = row.rhs;
        rhs_scale = rhs_scale.max(row.rhs.abs());
        let basic = match row.relation {
            Relation::Le => {
                tab.a[base + next_slack] = 1.0;
                next_slack += 1;
                next_slack - 1
            }
            Relation::Ge => {
                tab.a[base + next_slack] = -1.0;
                next_slack += 1;
                tab.a[base + next_art] = 1.0;
                next_art += 1;
                next_art - 1
            }
            Relation::Eq => {
                tab.a[base + next_art] = 1.0;
                next_art += 1;
                next_art - 1
            }
        };
        tab.basis[r] = basic;
        tab.row_of[basic] = r;
    }

    let mut pivots = 0usize;
    if n_art > 0 {
        let mut phase1 = vec![0.0; ncols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        tab.price(&phase1);
        match tab.run(deadline, &mut pivots) {
            Ok(()) => {}
            Err(Stop::Aborted) => return LpOutcome::Aborted,
            // Phase 1 is bounded below by zero.
            Err(Stop::Unbounded) => return LpOutcome::Aborted,
        }
        let infeasibility: f64 = (0..m).filter(|&r| tab.basis[r] >= art_start).map(|r| tab.xb[r]).sum();
        if infeasibility > 1e-8 * rhs_scale {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] < art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for c in 0..art_start {
                if tab.row_of[c] != usize::MAX {
                    continue;
                }
                let v = tab.at(r, c).abs();
                if v > 1e-7 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((c, v));
                }
            }
            if let Some((c, _)) = best {
                let value = tab.nonbasic_value(c);
                let art = tab.basis[r];
                tab.pivot(r, c);
                tab.at_upper[art] = false;
                tab.at_upper[c] = false;
                // Degenerate pivot: the artificial was at (numerically) zero.
                let drift = tab.xb[r];
                tab.xb[r] = value;
                if drift != 0.0 {
                    for i in 0..m {
                        if i != r {
                            // Artificial leaves at 0 instead of `drift`.
                            let coef = tab.at(i, art);
                            tab.xb[i] += coef * drift;
                        }
                    }
                }
            }
        }
        for c in art_start..ncols {
            tab.ub[c] = 0.0;
            tab.at_upper[c] = false;
        }
    }

    col_cost.resize(ncols, 0.0);
    tab.price(&col_cost);
    match tab.run(deadline, &mut pivots) {
        Ok(()) => {}
        Err(Stop::Aborted) => return LpOutcome::Aborted,
        Err(Stop::Unbounded) => return LpOutcome::Unbounded,
    }

    let mut col_val = vec![0.0; ncols];
    for (c, v) in col_val.iter_mut().enumerate() {
        *v = match tab.row_of[c] {
            usize::MAX => tab.nonbasic_value(c),
            r => tab.xb[r].clamp(0.0, tab.ub[c]),
        };
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            ColMap::Shifted { col, offset } => offset + col_val[col],
            ColMap::Mirrored { col, offset } => offset - col_val[col],
            ColMap::Split { pos, neg } => col_val[pos] - col_val[neg],
        })
        .collect();
    let objective = x.iter().zip(&problem.cost).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, objective }
}
