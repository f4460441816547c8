//! Dense bounded revised primal simplex.
//!
//! Solves `min c x` subject to `row_lo <= A x <= row_hi` and
//! `col_lo <= x <= col_hi`. Each row gets a logical variable `s = A x`, so the
//! dual of row `r` is the reduced cost of its logical: non-negative when the
//! lower bound binds, non-positive when the upper bound binds.

use serde::{Deserialize, Serialize};

const FEAS_TOL: f64 = 1e-7;
const OPT_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: u64 = 100;
const DEGENERATE_BEFORE_BLAND: u32 = 50;

#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    /// Sparse columns as `(row, coefficient)` pairs.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
}

impl LpProblem {
    pub fn num_rows(&self) -> usize {
        self.row_lo.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn add_row(&mut self, lo: f64, hi: f64) -> usize {
        self.row_lo.push(lo);
        self.row_hi.push(hi);
        self.row_lo.len() - 1
    }

    pub fn add_col(&mut self, cost: f64, lo: f64, hi: f64, entries: Vec<(usize, f64)>) -> usize {
        self.cost.push(cost);
        self.col_lo.push(lo);
        self.col_hi.push(hi);
        self.cols.push(entries);
        self.cols.len() - 1
    }

    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for (j, col) in self.cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(r, v) in col {
                    act[r] += v * x[j];
                }
            }
        }
        act
    }

    /// Writes the problem in CPLEX LP format.
    pub fn to_lp_format(&self, row_names: &[String], col_names: &[String]) -> String {
        use std::fmt::Write as _;
        let term = |s: &mut String, v: f64, name: &str| {
            let sign = if v < 0.0 { '-' } else { '+' };
            write!(s, " {sign} {} {name}", v.abs()).unwrap();
        };
        let mut s = String::from("Minimize\n obj:");
        for (j, &c) in self.cost.iter().enumerate() {
            term(&mut s, c, &col_names[j]);
        }
        s.push_str("\nSubject To\n");
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_rows()];
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                rows[r].push((j, v));
            }
        }
        for (r, entries) in rows.iter().enumerate() {
            let (lo, hi) = (self.row_lo[r], self.row_hi[r]);
            let mut body = String::new();
            for &(j, v) in entries {
                term(&mut body, v, &col_names[j]);
            }
            if body.is_empty() {
                body.push_str(" 0 dummy");
            }
            if lo.is_finite() && hi.is_finite() && lo != hi {
                writeln!(s, " {}:{body} >= {lo}", row_names[r]).unwrap();
                writeln!(s, " {}_ub:{body} <= {hi}", row_names[r]).unwrap();
            } else if lo.is_finite() && lo == hi {
                writeln!(s, " {}:{body} = {lo}", row_names[r]).unwrap();
            } else if lo.is_finite() {
                writeln!(s, " {}:{body} >= {lo}", row_names[r]).unwrap();
            } else if hi.is_finite() {
                writeln!(s, " {}:{body} <= {hi}", row_names[r]).unwrap();
            }
        }
        s.push_str("Bounds\n");
        for (j, name) in col_names.iter().enumerate() {
            let hi = self.col_hi[j];
            if hi.is_finite() {
                writeln!(s, " {} <= {name} <= {hi}", self.col_lo[j]).unwrap();
            } else {
                writeln!(s, " {name} >= {}", self.col_lo[j]).unwrap();
            }
        }
        s.push_str("End\n");
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    Numerical,
}

/// Variable identity that survives appending columns or rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasicVar {
    Column(usize),
    Row(usize),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Basis {
    pub basic: Vec<BasicVar>,
    /// Nonbasic variables sitting at their upper bound.
    pub at_upper: Vec<BasicVar>,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub iterations: u64,
    pub basis: Basis,
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum State {
    Basic(usize),
    Lower,
    Upper,
}

struct Simplex<'a> {
    lp: &'a LpProblem,
    m: usize,
    n: usize,
    /// variables: structural `0..n`, logical `n..n+m`, artificial `n+m..n+2m`
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    iterations: u64,
    max_iterations: u64,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LpProblem) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_cols());
        let total = n + 2 * m;
        let mut lo = Vec::with_capacity(total);
        let mut hi = Vec::with_capacity(total);
        lo.extend_from_slice(&lp.col_lo);
        hi.extend_from_slice(&lp.col_hi);
        lo.extend_from_slice(&lp.row_lo);
        hi.extend_from_slice(&lp.row_hi);
        lo.extend(std::iter::repeat_n(0.0, m));
        hi.extend(std::iter::repeat_n(0.0, m));
        Simplex {
            lp,
            m,
            n,
            lo,
            hi,
            cost: vec![0.0; total],
            art_sign: vec![1.0; m],
            x: vec![0.0; total],
            state: vec![State::Lower; total],
            basis: Vec::new(),
            binv: Vec::new(),
            iterations: 0,
            max_iterations: 50_000 + 50 * (n + m) as u64,
        }
    }

    fn column(&self, v: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if v < self.n {
            out.extend_from_slice(&self.lp.cols[v]);
        } else if v < self.n + self.m {
            out.push((v - self.n, -1.0));
        } else {
            let r = v - self.n - self.m;
            out.push((r, self.art_sign[r]));
        }
    }

    fn nonbasic_value(&self, v: usize, upper: bool) -> f64 {
        if upper {
            self.hi[v]
        } else {
            self.lo[v]
        }
    }

    /// Inverts the basis matrix; false if singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        let mut col = Vec::new();
        for (k, &v) in self.basis.iter().enumerate() {
            self.column(v, &mut col);
            for &(r, val) in &col {
                a[r * m + k] = val;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs()))
                .unwrap();
            if a[p * m + c].abs() < 1e-11 {
                return false;
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let piv = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        // inv = B^-1 with rows indexed by basis position
        self.binv = inv;
        self.recompute_basics();
        true
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        let mut col = Vec::new();
        for v in 0..self.x.len() {
            if matches!(self.state[v], State::Basic(_)) || self.x[v] == 0.0 {
                continue;
            }
            self.column(v, &mut col);
            for &(r, val) in &col {
                rhs[r] -= val * self.x[v];
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for k in 0..m {
                    y[k] += cb * self.binv[i * m + k];
                }
            }
        }
        y
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&v| (self.lo[v] - self.x[v]).max(self.x[v] - self.hi[v]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Runs simplex iterations on the current cost vector.
    fn optimize(&mut self) -> LpStatus {
        let m = self.m;
        let total = self.x.len();
        let mut degenerate = 0u32;
        let mut since_refactor = 0u64;
        let mut col = Vec::new();
        let mut alpha = vec![0.0; m];
        loop {
            if self.iterations >= self.max_iterations {
                return LpStatus::IterationLimit;
            }
            if since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    return LpStatus::Numerical;
                }
                since_refactor = 0;
            }
            let bland = degenerate >= DEGENERATE_BEFORE_BLAND;
            let y = self.duals();

            let mut entering: Option<(usize, f64)> = None;
            for v in 0..total {
                let up = match self.state[v] {
                    State::Basic(_) => continue,
                    State::Lower => false,
                    State::Upper => true,
                };
                if self.hi[v] - self.lo[v] <= 0.0 {
                    continue;
                }
                self.column(v, &mut col);
                let d = self.cost[v] - col.iter().map(|&(r, a)| y[r] * a).sum::<f64>();
                let eligible = if up { d > OPT_TOL } else { d < -OPT_TOL };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((v, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                    entering = Some((v, d));
                }
            }
            let Some((q, dq)) = entering else {
                return LpStatus::Optimal;
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            self.column(q, &mut col);
            for (i, a) in alpha.iter_mut().enumerate() {
                let row = &self.binv[i * m..(i + 1) * m];
                *a = col.iter().map(|&(r, v)| row[r] * v).sum();
            }

            // basic i moves by -dir * theta * alpha_i
            let mut theta = self.hi[q] - self.lo[q];
            let mut leave: Option<usize> = None;
            for i in 0..m {
                let rate = dir * alpha[i];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let v = self.basis[i];
                let room = if rate > 0.0 {
                    (self.x[v] - self.lo[v]).max(0.0) / rate
                } else {
                    (self.hi[v] - self.x[v]).max(0.0) / -rate
                };
                let better = match leave {
                    None => room < theta,
                    Some(l) => {
                        if room < theta - 1e-12 {
                            true
                        } else if room <= theta + 1e-12 {
                            if bland {
                                v < self.basis[l]
                            } else {
                                alpha[i].abs() > alpha[l].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = room.min(theta);
                    leave = Some(i);
                }
            }
            if theta.is_infinite() {
                return LpStatus::Numerical;
            }
            self.iterations += 1;
            since_refactor += 1;
            degenerate = if theta <= 1e-12 { degenerate + 1 } else { 0 };

            self.x[q] += dir * theta;
            for i in 0..m {
                let v = self.basis[i];
                self.x[v] -= dir * theta * alpha[i];
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.x[q] = self.nonbasic_value(q, dir > 0.0);
                }
                Some(p) => {
                    let out = self.basis[p];
                    let to_upper = dir * alpha[p] < 0.0;
                    self.state[out] = if to_upper { State::Upper } else { State::Lower };
                    self.x[out] = self.nonbasic_value(out, to_upper);
                    self.basis[p] = q;
                    self.state[q] = State::Basic(p);
                    let piv = alpha[p];
                    for k in 0..m {
                        self.binv[p * m + k] /= piv;
                    }
                    for i in 0..m {
                        if i == p || alpha[i] == 0.0 {
                            continue;
                        }
                        let f = alpha[i];
                        for k in 0..m {
                            self.binv[i * m + k] -= f * self.binv[p * m + k];
                        }
                    }
                }
            }
        }
    }

    fn cold_start(&mut self) {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let at = if self.lo[j].is_finite() { self.lo[j] } else { 0.0 };
            self.x[j] = at;
            self.state[j] = State::Lower;
        }
        let act = {
            let mut act = vec![0.0; m];
            for j in 0..n {
                if self.x[j] != 0.0 {
                    for &(r, v) in &self.lp.cols[j] {
                        act[r] += v * self.x[j];
                    }
                }
            }
            act
        };
        self.basis = Vec::with_capacity(m);
        for r in 0..m {
            let s = n + r;
            let a = n + m + r;
            if act[r] >= self.lo[s] - FEAS_TOL && act[r] <= self.hi[s] + FEAS_TOL {
                self.state[s] = State::Basic(r);
                self.basis.push(s);
                self.state[a] = State::Lower;
                self.hi[a] = 0.0;
            } else {
                let upper = act[r] > self.hi[s];
                let target = if upper { self.hi[s] } else { self.lo[s] };
                self.state[s] = if upper { State::Upper } else { State::Lower };
                self.x[s] = target;
                self.art_sign[r] = if target > act[r] { 1.0 } else { -1.0 };
                self.hi[a] = f64::INFINITY;
                self.cost[a] = 1.0;
                self.state[a] = State::Basic(r);
                self.basis.push(a);
            }
        }
    }

    fn warm_start(&mut self, start: &Basis) -> bool {
        let (n, m) = (self.n, self.m);
        let var = |b: BasicVar| match b {
            BasicVar::Column(j) if j < n => Some(j),
            BasicVar::Row(r) if r < m => Some(n + r),
            _ => None,
        };
        for v in 0..n + m {
            self.state[v] = State::Lower;
        }
        for &b in &start.at_upper {
            if let Some(v) = var(b) {
                self.state[v] = State::Upper;
            }
        }
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        let mut used = vec![false; n + m];
        for &b in &start.basic {
            let Some(v) = var(b) else { return false };
            if used[v] {
                return false;
            }
            used[v] = true;
            basis.push(v);
        }
        // rows added since the basis was taken enter with their logicals
        for r in (0..m).rev() {
            if basis.len() == m {
                break;
            }
            if !used[n + r] {
                used[n + r] = true;
                basis.push(n + r);
            }
        }
        if basis.len() != m {
            return false;
        }
        for v in 0..n + m {
            let upper = self.state[v] == State::Upper;
            let val = self.nonbasic_value(v, upper);
            if !val.is_finite() {
                let other = self.nonbasic_value(v, !upper);
                if !other.is_finite() && !used[v] {
                    return false;
                }
                self.state[v] = if upper { State::Lower } else { State::Upper };
                self.x[v] = other;
            } else {
                self.x[v] = val;
            }
        }
        for (k, &v) in basis.iter().enumerate() {
            self.state[v] = State::Basic(k);
        }
        self.basis = basis;
        self.refactor() && self.infeasibility() <= FEAS_TOL
    }

    fn result(&self, status: LpStatus) -> LpResult {
        let n = self.n;
        let x: Vec<f64> = self.x[..n].to_vec();
        let objective = x.iter().zip(&self.lp.cost).map(|(a, c)| a * c).sum();
        let ident = |v: usize| {
            if v < n {
                BasicVar::Column(v)
            } else {
                BasicVar::Row((v - n) % self.m)
            }
        };
        let basis = Basis {
            basic: self.basis.iter().map(|&v| ident(v)).collect(),
            at_upper: (0..n + self.m)
                .filter(|&v| self.state[v] == State::Upper)
                .map(ident)
                .collect(),
        };
        LpResult {
            status,
            objective,
            x,
            duals: self.duals(),
            iterations: self.iterations,
            basis,
        }
    }
}

/// Solves the LP, optionally starting from a previous basis. A warm start
/// that is singular or primal infeasible falls back to a cold start.
pub fn solve(lp: &LpProblem, warm: Option<&Basis>) -> LpResult {
    let m = lp.num_rows();
    let mut sx = Simplex::new(lp);
    sx.cost[..lp.num_cols()].copy_from_slice(&lp.cost);
    if m == 0 {
        let mut r = sx.result(LpStatus::Optimal);
        for j in 0..lp.num_cols() {
            r.x[j] = if lp.cost[j] < 0.0 { lp.col_hi[j] } else { lp.col_lo[j] };
        }
        r.objective = r.x.iter().zip(&lp.cost).map(|(a, c)| a * c).sum();
        if !r.objective.is_finite() {
            r.status = LpStatus::Numerical;
        }
        return r;
    }
    let warmed = warm.is_some_and(|b| sx.warm_start(b));
    if !warmed {
        sx = Simplex::new(lp);
        sx.cold_start();
        if !sx.refactor() {
            return sx.result(LpStatus::Numerical);
        }
        let needs_phase1 = sx.basis.iter().any(|&v| v >= lp.num_cols() + m);
        if needs_phase1 {
            let status = sx.optimize();
            if status != LpStatus::Optimal {
                return sx.result(status);
            }
            if !sx.refactor() {
                return sx.result(LpStatus::Numerical);
            }
            let art_sum: f64 = (0..m).map(|r| sx.x[lp.num_cols() + m + r]).sum();
            if art_sum > FEAS_TOL {
                return sx.result(LpStatus::Infeasible);
            }
        }
        let n = lp.num_cols();
        for a in n + m..n + 2 * m {
            sx.cost[a] = 0.0;
            sx.hi[a] = 0.0;
            if !matches!(sx.state[a], State::Basic(_)) {
                sx.x[a] = 0.0;
                sx.state[a] = State::Lower;
            }
        }
        sx.cost[..n].copy_from_slice(&lp.cost);
    }
    loop {
        let status = sx.optimize();
        if status != LpStatus::Optimal {
            return sx.result(status);
        }
        if !sx.refactor() {
            return sx.result(LpStatus::Numerical);
        }
        if sx.infeasibility() > FEAS_TOL {
            return sx.result(LpStatus::Numerical);
        }
        // re-check optimality after the fresh factorization
        let y = sx.duals();
        let mut col = Vec::new();
        let still_optimal = (0..sx.x.len()).all(|v| {
            let up = match sx.state[v] {
                State::Basic(_) => return true,
                State::Lower => false,
                State::Upper => true,
            };
            if sx.hi[v] - sx.lo[v] <= 0.0 {
                return true;
            }
            sx.column(v, &mut col);
            let d = sx.cost[v] - col.iter().map(|&(r, a)| y[r] * a).sum::<f64>();
            if up {
                d <= OPT_TOL
            } else {
                d >= -OPT_TOL
            }
        });
        if still_optimal {
            return sx.result(LpStatus::Optimal);
        }
    }
}
