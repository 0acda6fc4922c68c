//! Bounded-variable simplex on a dense condensed tableau.
//!
//! Every row `r` gets a logical variable equal to its activity, so the
//! system is `A x - s = 0` with bounds on both `x` and `s`. Basic variables
//! are kept as linear functions of the nonbasic ones: `x_B = T x_N`.

use std::time::Instant;

pub(crate) const PIVOT_TOL: f64 = 1e-9;
/// Smallest pivot the dual ratio test accepts.
const DUAL_PIVOT_TOL: f64 = 1e-7;
pub(crate) const FEAS_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
/// Wrong-signed reduced costs below this are left for the primal cleanup.
const LOOSE_DUAL_TOL: f64 = 1e-6;
const DROP_TOL: f64 = 1e-13;
const STALL_LIMIT: usize = 50;
const REFACTOR_EVERY: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    Basic(usize),
    Nonbasic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    /// Too many degenerate steps in a row.
    Stalled,
    Numerical,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

/// Snapshot of a basis: basic variables and nonbasic sides.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basic: Vec<usize>,
    side: Vec<Side>,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    rows: Vec<SparseRow>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    t: Vec<f64>,
    d: Vec<f64>,
    /// `1 + |row|^2` for each tableau row, used for dual pricing.
    rnorm: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    loc: Vec<Loc>,
    side: Vec<Side>,
    pub pivots: u64,
    refactored_at: u64,
}

fn default_side(lb: f64, ub: f64) -> Side {
    if lb.is_finite() {
        Side::Lower
    } else if ub.is_finite() {
        Side::Upper
    } else {
        Side::Zero
    }
}

impl Tableau {
    /// `lb`/`ub` cover the `n` structural columns, `row_lo`/`row_hi` the rows.
    pub fn new(
        n: usize,
        rows: Vec<SparseRow>,
        cost: Vec<f64>,
        lb: &[f64],
        ub: &[f64],
        row_lo: &[f64],
        row_hi: &[f64],
    ) -> Self {
        let m = rows.len();
        let mut all_lb = lb.to_vec();
        all_lb.extend_from_slice(row_lo);
        let mut all_ub = ub.to_vec();
        all_ub.extend_from_slice(row_hi);
        let mut full_cost = cost;
        full_cost.resize(n + m, 0.0);
        let side = (0..n + m).map(|v| default_side(all_lb[v], all_ub[v])).collect();
        let mut tab = Tableau {
            m,
            n,
            rows,
            cost: full_cost,
            lb: all_lb,
            ub: all_ub,
            x: vec![0.0; n + m],
            t: Vec::new(),
            d: Vec::new(),
            rnorm: Vec::new(),
            basic: Vec::new(),
            nonbasic: Vec::new(),
            loc: Vec::new(),
            side,
            pivots: 0,
            refactored_at: 0,
        };
        tab.reset_to_slack_basis();
        tab
    }

    fn reset_to_slack_basis(&mut self) {
        let (m, n) = (self.m, self.n);
        self.t = vec![0.0; m * n];
        for (r, row) in self.rows.iter().enumerate() {
            for (&j, &a) in row.idx.iter().zip(&row.val) {
                self.t[r * n + j] += a;
            }
        }
        self.basic = (n..n + m).collect();
        self.nonbasic = (0..n).collect();
        self.loc = (0..n).map(Loc::Nonbasic).chain((0..m).map(Loc::Basic)).collect();
        self.recompute_rnorm();
        self.recompute_d();
        self.place_nonbasics();
        self.recompute_basics();
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    pub fn basis(&self) -> Basis {
        Basis { basic: self.basic.clone(), side: self.side.clone() }
    }

    /// Rebuilds the tableau around a saved basis.
    pub fn load_basis(&mut self, b: &Basis) {
        self.basic.clone_from(&b.basic);
        self.side.clone_from(&b.side);
        self.refactor();
    }

    /// Whether the reduced costs allow a dual simplex start.
    pub fn dual_feasible(&self) -> bool {
        (0..self.n).all(|q| {
            let v = self.nonbasic[q];
            let dq = self.d[q];
            let boxed = self.lb[v].is_finite() && self.ub[v].is_finite();
            boxed
                || (!self.lb[v].is_finite() || dq >= -LOOSE_DUAL_TOL)
                    && (!self.ub[v].is_finite() || dq <= LOOSE_DUAL_TOL)
        })
    }

    /// Replaces the bounds of the structural columns.
    pub fn set_bounds(&mut self, lb: &[f64], ub: &[f64]) {
        self.lb[..self.n].copy_from_slice(lb);
        self.ub[..self.n].copy_from_slice(ub);
        self.place_nonbasics();
        self.recompute_basics();
    }

    fn place(&mut self, v: usize) {
        let (l, u) = (self.lb[v], self.ub[v]);
        let side = match self.side[v] {
            Side::Lower if l.is_finite() => Side::Lower,
            Side::Upper if u.is_finite() => Side::Upper,
            _ => default_side(l, u),
        };
        self.side[v] = side;
        self.x[v] = match side {
            Side::Lower => l,
            Side::Upper => u,
            Side::Zero => 0.0,
        };
    }

    fn place_nonbasics(&mut self) {
        for q in 0..self.n {
            let v = self.nonbasic[q];
            self.place(v);
        }
    }

    fn recompute_basics(&mut self) {
        let n = self.n;
        let active: Vec<(usize, f64)> =
            (0..n).map(|q| (q, self.x[self.nonbasic[q]])).filter(|&(_, v)| v != 0.0).collect();
        for i in 0..self.m {
            let row = &self.t[i * n..(i + 1) * n];
            let v: f64 = active.iter().map(|&(q, xv)| row[q] * xv).sum();
            self.x[self.basic[i]] = v;
        }
    }

    fn recompute_d(&mut self) {
        let n = self.n;
        let mut d: Vec<f64> = self.nonbasic.iter().map(|&v| self.cost[v]).collect();
        for i in 0..self.m {
            let c = self.cost[self.basic[i]];
            if c != 0.0 {
                let row = &self.t[i * n..(i + 1) * n];
                for q in 0..n {
                    d[q] += c * row[q];
                }
            }
        }
        self.d = d;
    }

    fn recompute_rnorm(&mut self) {
        let n = self.n;
        self.rnorm = (0..self.m).map(|i| 1.0 + self.t[i * n..(i + 1) * n].iter().map(|a| a * a).sum::<f64>()).collect();
    }

    /// Jordan exchange: the basic variable of row `p` leaves, the nonbasic of
    /// column `q` enters.
    fn pivot(&mut self, p: usize, q: usize) {
        let n = self.n;
        let piv = self.t[p * n + q];
        let prow: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != q)
            .map(|j| (j, self.t[p * n + j] / piv))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        let psq: f64 = prow.iter().map(|&(_, v)| v * v).sum();
        for i in 0..self.m {
            if i == p {
                continue;
            }
            let f = self.t[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            let mut dot = 0.0;
            for &(j, v) in &prow {
                dot += row[j] * v;
                let nv = row[j] - f * v;
                row[j] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
            row[q] = f / piv;
            let norm = self.rnorm[i] - f * f - 2.0 * f * dot + f * f * (psq + 1.0 / (piv * piv));
            self.rnorm[i] = norm.max(1.0);
        }
        self.rnorm[p] = 1.0 + psq + 1.0 / (piv * piv);
        let f = self.d[q];
        if f != 0.0 {
            for &(j, v) in &prow {
                let nv = self.d[j] - f * v;
                self.d[j] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
        }
        self.d[q] = f / piv;
        let row = &mut self.t[p * n..(p + 1) * n];
        for r in row.iter_mut() {
            *r = 0.0;
        }
        for &(j, v) in &prow {
            row[j] = -v;
        }
        row[q] = 1.0 / piv;
        let leaving = self.basic[p];
        let entering = self.nonbasic[q];
        self.basic[p] = entering;
        self.nonbasic[q] = leaving;
        self.loc[entering] = Loc::Basic(p);
        self.loc[leaving] = Loc::Nonbasic(q);
        self.pivots += 1;
    }

    fn infeasibility(&self, v: usize) -> f64 {
        let x = self.x[v];
        if x < self.lb[v] - FEAS_TOL {
            self.lb[v] - x
        } else if x > self.ub[v] + FEAS_TOL {
            x - self.ub[v]
        } else {
            0.0
        }
    }

    fn can_move(&self, v: usize) -> (bool, bool) {
        if self.lb[v] == self.ub[v] {
            return (false, false);
        }
        match self.side[v] {
            Side::Lower => (true, false),
            Side::Upper => (false, true),
            Side::Zero => (true, true),
        }
    }

    fn shift_basics(&mut self, q: usize, delta: f64) {
        let n = self.n;
        for i in 0..self.m {
            let a = self.t[i * n + q];
            if a != 0.0 {
                self.x[self.basic[i]] += a * delta;
            }
        }
    }

    /// Two-phase primal simplex from the current basis.
    /// Two-phase primal simplex from the current basis. A stalled run is
    /// restarted with the bounds of the basic variables spread apart, then
    /// cleaned up against the true bounds.
    pub fn primal(&mut self, deadline: Option<Instant>, max_iter: usize) -> LpOutcome {
        let out = self.primal_iterations(deadline, max_iter, true);
        if out != LpOutcome::Stalled {
            return out;
        }
        let (lb, ub) = (self.lb.clone(), self.ub.clone());
        for i in 0..self.m {
            let v = self.basic[i];
            let h = (v as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(self.pivots);
            let jitter = 1.0 + (h >> 40) as f64 / (1u64 << 24) as f64;
            if self.lb[v].is_finite() {
                self.lb[v] -= 1e-6 * (1.0 + self.lb[v].abs()) * jitter;
            }
            if self.ub[v].is_finite() {
                self.ub[v] += 1e-6 * (1.0 + self.ub[v].abs()) * jitter;
            }
        }
        let out = self.primal_iterations(deadline, max_iter, false);
        self.lb = lb;
        self.ub = ub;
        self.place_nonbasics();
        self.recompute_basics();
        if out != LpOutcome::Optimal {
            return out;
        }
        match self.dual(deadline, max_iter) {
            LpOutcome::Infeasible => LpOutcome::Infeasible,
            _ => self.primal_iterations(deadline, max_iter, false),
        }
    }

    fn primal_iterations(&mut self, deadline: Option<Instant>, max_iter: usize, stall_exit: bool) -> LpOutcome {
        let n = self.n;
        let mut stall = 0usize;
        let mut bland = false;
        let mut g = vec![0.0; n];
        for iter in 0..max_iter {
            if iter % 32 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
                return LpOutcome::TimeLimit;
            }
            let infeasible: Vec<(usize, f64)> = (0..self.m)
                .filter_map(|i| {
                    let v = self.basic[i];
                    let x = self.x[v];
                    if x < self.lb[v] - FEAS_TOL {
                        Some((i, -1.0))
                    } else if x > self.ub[v] + FEAS_TOL {
                        Some((i, 1.0))
                    } else {
                        None
                    }
                })
                .collect();
            let phase1 = !infeasible.is_empty();
            if phase1 {
                g.iter_mut().for_each(|v| *v = 0.0);
                for &(i, w) in &infeasible {
                    let row = &self.t[i * n..(i + 1) * n];
                    for q in 0..n {
                        g[q] += w * row[q];
                    }
                }
            }
            let price = if phase1 { &g } else { &self.d };
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for q in 0..n {
                let v = self.nonbasic[q];
                let (inc, dec) = self.can_move(v);
                let gq = price[q];
                let dir = if inc && gq < -DUAL_TOL {
                    1.0
                } else if dec && gq > DUAL_TOL {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    if enter.map_or(true, |(e, _)| v < self.nonbasic[e]) {
                        enter = Some((q, dir));
                    }
                } else if gq.abs() > best {
                    best = gq.abs();
                    enter = Some((q, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return if phase1 { LpOutcome::Infeasible } else { LpOutcome::Optimal };
            };
            let ve = self.nonbasic[q];
            let range = self.ub[ve] - self.lb[ve];

            // Harris ratio test: relaxed bounds first, then the largest pivot.
            let mut relaxed = f64::INFINITY;
            let limit = |i: usize, tol: f64| -> Option<(f64, f64)> {
                let alpha = dir * self.t[i * n + q];
                if alpha.abs() <= PIVOT_TOL {
                    return None;
                }
                let v = self.basic[i];
                let (x, l, u) = (self.x[v], self.lb[v], self.ub[v]);
                if alpha > 0.0 {
                    if x < l - FEAS_TOL {
                        Some(((l - x + tol) / alpha, l))
                    } else if x > u + FEAS_TOL || !u.is_finite() {
                        None
                    } else {
                        Some((((u - x + tol) / alpha).max(0.0), u))
                    }
                } else if x > u + FEAS_TOL {
                    Some(((x - u + tol) / -alpha, u))
                } else if x < l - FEAS_TOL || !l.is_finite() {
                    None
                } else {
                    Some((((x - l + tol) / -alpha).max(0.0), l))
                }
            };
            for i in 0..self.m {
                if let Some((r, _)) = limit(i, FEAS_TOL) {
                    relaxed = relaxed.min(r);
                }
            }
            let mut leave: Option<(usize, f64, f64)> = None;
            let mut best_alpha = 0.0;
            if relaxed.is_finite() {
                for i in 0..self.m {
                    let Some((r, target)) = limit(i, 0.0) else { continue };
                    if r > relaxed {
                        continue;
                    }
                    let a = self.t[i * n + q].abs();
                    let better = if bland {
                        leave.map_or(true, |(p, _, _)| self.basic[i] < self.basic[p])
                    } else {
                        a > best_alpha
                    };
                    if better {
                        best_alpha = a;
                        leave = Some((i, r, target));
                    }
                }
            }
            let step = leave.map_or(f64::INFINITY, |(_, r, _)| r);
            if range.is_finite() && range <= step {
                self.shift_basics(q, dir * range);
                let (side, val) = if dir > 0.0 { (Side::Upper, self.ub[ve]) } else { (Side::Lower, self.lb[ve]) };
                self.side[ve] = side;
                self.x[ve] = val;
                stall = 0;
                bland = false;
                continue;
            }
            let Some((p, step, target)) = leave else {
                return if phase1 { LpOutcome::Numerical } else { LpOutcome::Unbounded };
            };
            self.shift_basics(q, dir * step);
            self.x[ve] += dir * step;
            let vl = self.basic[p];
            self.x[vl] = target;
            self.side[vl] = if target == self.lb[vl] { Side::Lower } else { Side::Upper };
            self.pivot(p, q);
            if step <= 1e-12 {
                stall += 1;
                if stall > STALL_LIMIT {
                    if stall_exit {
                        return LpOutcome::Stalled;
                    }
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }
        }
        LpOutcome::IterationLimit
    }

    /// Moves boxed nonbasics to the side that matches their reduced cost.
    /// False if some unboxed variable has the wrong sign.
    fn make_dual_feasible(&mut self) -> bool {
        let mut ok = true;
        for q in 0..self.n {
            let v = self.nonbasic[q];
            if self.lb[v] == self.ub[v] {
                continue;
            }
            let dq = self.d[q];
            match self.side[v] {
                Side::Lower if dq < -DUAL_TOL => {
                    if self.ub[v].is_finite() {
                        self.side[v] = Side::Upper;
                    } else if dq < -LOOSE_DUAL_TOL {
                        ok = false;
                    }
                }
                Side::Upper if dq > DUAL_TOL => {
                    if self.lb[v].is_finite() {
                        self.side[v] = Side::Lower;
                    } else if dq > LOOSE_DUAL_TOL {
                        ok = false;
                    }
                }
                Side::Zero if dq.abs() > LOOSE_DUAL_TOL => ok = false,
                _ => {}
            }
        }
        self.place_nonbasics();
        self.recompute_basics();
        ok
    }

    /// Dual simplex from a dual feasible basis.
    pub fn dual(&mut self, deadline: Option<Instant>, max_iter: usize) -> LpOutcome {
        if !self.make_dual_feasible() {
            return LpOutcome::Numerical;
        }
        // Push reduced costs off zero to avoid stalling; undone on exit.
        let saved = self.cost.clone();
        for q in 0..self.n {
            let v = self.nonbasic[q];
            let sign = match (self.side[v], self.lb[v] == self.ub[v]) {
                (_, true) | (Side::Zero, _) => continue,
                (Side::Lower, _) => 1.0,
                (Side::Upper, _) => -1.0,
            };
            let jitter = 1.0 + ((v as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 40) as f64 / (1u64 << 24) as f64;
            let eps = sign * 1e-7 * (1.0 + self.cost[v].abs()) * jitter;
            self.cost[v] += eps;
            self.d[q] += eps;
        }
        let out = self.dual_iterations(deadline, max_iter);
        self.cost = saved;
        self.recompute_d();
        out
    }

    fn infeasibility_proven(&self, p: usize) -> bool {
        let n = self.n;
        let (mut lo, mut hi) = (0.0, 0.0);
        for q in 0..n {
            let a = self.t[p * n + q];
            let v = self.nonbasic[q];
            if a == 0.0 || a.abs() < PIVOT_TOL && !(self.lb[v].is_finite() && self.ub[v].is_finite()) {
                continue;
            }
            let (l, u) = if a > 0.0 { (a * self.lb[v], a * self.ub[v]) } else { (a * self.ub[v], a * self.lb[v]) };
            lo += l;
            hi += u;
        }
        let b = self.basic[p];
        hi < self.lb[b] - 1e-6 * (1.0 + self.lb[b].abs()) || lo > self.ub[b] + 1e-6 * (1.0 + self.ub[b].abs())
    }

    fn dual_iterations(&mut self, deadline: Option<Instant>, max_iter: usize) -> LpOutcome {
        let n = self.n;
        let mut stall = 0usize;
        for iter in 0..max_iter {
            if iter % 32 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
                return LpOutcome::TimeLimit;
            }
            let bland = stall > STALL_LIMIT;
            let mut pick: Option<usize> = None;
            let mut worst = 0.0;
            for i in 0..self.m {
                let inf = self.infeasibility(self.basic[i]);
                if inf <= 0.0 {
                    continue;
                }
                let score = inf * inf / self.rnorm[i];
                let better = if bland { pick.map_or(true, |p| self.basic[i] < self.basic[p]) } else { score > worst };
                if better {
                    worst = score;
                    pick = Some(i);
                }
            }
            let Some(p) = pick else { return LpOutcome::Optimal };
            let vb = self.basic[p];
            let (delta, target) =
                if self.x[vb] < self.lb[vb] { (1.0, self.lb[vb]) } else { (-1.0, self.ub[vb]) };
            let ratio = |q: usize, tol: f64| -> Option<f64> {
                let a = self.t[p * n + q];
                if a.abs() <= DUAL_PIVOT_TOL {
                    return None;
                }
                let v = self.nonbasic[q];
                let sigma = if delta * a > 0.0 { 1.0 } else { -1.0 };
                let (inc, dec) = self.can_move(v);
                if (sigma > 0.0 && !inc) || (sigma < 0.0 && !dec) {
                    return None;
                }
                Some(((self.d[q] * sigma).max(0.0) + tol) / a.abs())
            };
            let mut relaxed = f64::INFINITY;
            for q in 0..n {
                if let Some(r) = ratio(q, if bland { 0.0 } else { DUAL_TOL }) {
                    relaxed = relaxed.min(r);
                }
            }
            if !relaxed.is_finite() {
                return if self.infeasibility_proven(p) { LpOutcome::Infeasible } else { LpOutcome::Numerical };
            }
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for q in 0..n {
                let Some(r) = ratio(q, 0.0) else { continue };
                if r > relaxed {
                    continue;
                }
                let a = self.t[p * n + q].abs();
                let better = if bland {
                    enter.map_or(true, |(e, _)| self.nonbasic[q] < self.nonbasic[e])
                } else {
                    a > best
                };
                if better {
                    best = a;
                    enter = Some((q, r));
                }
            }
            let (q, r) = enter.expect("relaxed ratio has a candidate");
            if r <= 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            let step = (target - self.x[vb]) / self.t[p * n + q];
            let ve = self.nonbasic[q];
            self.shift_basics(q, step);
            self.x[ve] += step;
            self.x[vb] = target;
            self.side[vb] = if delta > 0.0 { Side::Lower } else { Side::Upper };
            self.pivot(p, q);
        }
        LpOutcome::IterationLimit
    }

    /// Largest relative mismatch between row activities and their logicals.
    fn drift(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, row) in self.rows.iter().enumerate() {
            let act: f64 = row.idx.iter().zip(&row.val).map(|(&j, &a)| a * self.x[j]).sum();
            let s = self.x[self.n + r];
            worst = worst.max((act - s).abs() / (1.0 + act.abs()));
        }
        worst
    }

    /// Drift plus the largest bound violation.
    pub fn residual(&self) -> f64 {
        let mut worst = self.drift();
        for v in 0..self.n + self.m {
            worst = worst.max(self.infeasibility(v));
        }
        worst
    }

    /// Rebuilds the tableau for the current basis from the original rows.
    pub fn refactor(&mut self) {
        let target: Vec<usize> = self.basic.iter().copied().filter(|&v| v < self.n).collect();
        let mut wanted = vec![false; self.n + self.m];
        for &v in &self.basic {
            wanted[v] = true;
        }
        let n = self.n;
        self.t = vec![0.0; self.m * n];
        for (r, row) in self.rows.iter().enumerate() {
            for (&j, &a) in row.idx.iter().zip(&row.val) {
                self.t[r * n + j] += a;
            }
        }
        self.basic = (n..n + self.m).collect();
        self.nonbasic = (0..n).collect();
        self.loc = (0..n).map(Loc::Nonbasic).chain((0..self.m).map(Loc::Basic)).collect();
        for v in target {
            let Loc::Nonbasic(q) = self.loc[v] else { continue };
            let mut best = (None, 1e-7);
            for i in 0..self.m {
                let b = self.basic[i];
                if b >= n && !wanted[b] {
                    let a = self.t[i * n + q].abs();
                    if a > best.1 {
                        best = (Some(i), a);
                    }
                }
            }
            if let Some(p) = best.0 {
                let leaving = self.basic[p];
                self.pivot(p, q);
                if self.side[leaving] == Side::Zero {
                    self.side[leaving] = default_side(self.lb[leaving], self.ub[leaving]);
                }
            }
        }
        self.recompute_rnorm();
        self.recompute_d();
        self.place_nonbasics();
        self.recompute_basics();
        self.refactored_at = self.pivots;
    }

    /// Solves from the current basis, with a dual warm start when asked.
    pub fn solve(&mut self, warm: bool, deadline: Option<Instant>) -> LpOutcome {
        let max_iter = 20 * (self.m + self.n) + 1000;
        if warm && (self.pivots - self.refactored_at > REFACTOR_EVERY || self.drift() > 1e-9) {
            self.refactor();
        }
        let mut out = if warm { self.dual(deadline, max_iter) } else { LpOutcome::Numerical };
        if !matches!(out, LpOutcome::TimeLimit | LpOutcome::Infeasible) {
            out = self.primal(deadline, max_iter);
        }
        for _ in 0..2 {
            let bad = match out {
                LpOutcome::Optimal => self.residual() > 1e-6,
                LpOutcome::Infeasible | LpOutcome::Unbounded => self.drift() > 1e-7,
                _ => false,
            };
            if !bad {
                break;
            }
            self.refactor();
            out = self.primal(deadline, max_iter);
        }
        if out == LpOutcome::Optimal && self.residual() > 1e-6 {
            return LpOutcome::Numerical;
        }
        if matches!(out, LpOutcome::Numerical | LpOutcome::IterationLimit) {
            self.reset_to_slack_basis();
            out = self.primal(deadline, max_iter);
            if out == LpOutcome::Optimal && self.residual() > 1e-6 {
                return LpOutcome::Numerical;
            }
        }
        out
    }
}
