//! Fixed-column removal and singleton-row bound tightening.

use crate::model::{Model, Sense};

use super::simplex::{SparseRow, FEAS_TOL};

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    /// Original variable index of each kept column.
    pub cols: Vec<usize>,
    pub integer: Vec<bool>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub cost: Vec<f64>,
    pub offset: f64,
    pub rows: Vec<SparseRow>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    /// Values of every original variable that was fixed.
    pub fixed: Vec<Option<f64>>,
}

impl Reduced {
    /// Whether every integral point has an integer objective value.
    pub fn integral_objective(&self) -> bool {
        let int = |c: f64| c.fract() == 0.0 && c.abs() < 1e15;
        int(self.offset) && self.cost.iter().zip(&self.integer).all(|(&c, &i)| c == 0.0 || (i && int(c)))
    }

    /// Expands column values to the original variable order.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
        for (k, &c) in self.cols.iter().enumerate() {
            out[c] = x[k];
        }
        out
    }
}

struct Row {
    terms: Vec<(usize, f64)>,
    lo: f64,
    hi: f64,
    live: bool,
}

fn round_bounds(lb: f64, ub: f64) -> (f64, f64) {
    ((lb - 1e-9).ceil(), (ub + 1e-9).floor())
}

/// None when the bounds alone prove infeasibility.
pub(crate) fn presolve(model: &Model, integral: bool) -> Option<Reduced> {
    let nv = model.num_vars();
    let mut lb: Vec<f64> = model.vars().iter().map(|v| v.lb).collect();
    let mut ub: Vec<f64> = model.vars().iter().map(|v| v.ub).collect();
    let is_int: Vec<bool> = model.vars().iter().map(|v| integral && v.kind.is_integral()).collect();
    for v in 0..nv {
        if is_int[v] {
            (lb[v], ub[v]) = round_bounds(lb[v], ub[v]);
        }
        if lb[v] > ub[v] {
            return None;
        }
    }
    let mut rows: Vec<Row> = model
        .constraints()
        .iter()
        .map(|c| {
            let e = c.expr.normalized();
            let rhs = c.rhs - e.constant;
            let terms = e.linear.iter().filter(|t| t.1 != 0.0).map(|&(v, a)| (v.0, a)).collect();
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, rhs),
                Sense::Ge => (rhs, f64::INFINITY),
                Sense::Eq => (rhs, rhs),
            };
            Row { terms, lo, hi, live: true }
        })
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for row in rows.iter_mut().filter(|r| r.live) {
            let mut shift = 0.0;
            row.terms.retain(|&(v, a)| {
                if lb[v] == ub[v] {
                    shift += a * lb[v];
                    false
                } else {
                    true
                }
            });
            row.lo -= shift;
            row.hi -= shift;
            let scale = 1.0 + row.lo.abs().min(row.hi.abs());
            match row.terms.as_slice() {
                [] => {
                    if row.lo > FEAS_TOL * scale || row.hi < -FEAS_TOL * scale {
                        return None;
                    }
                    row.live = false;
                }
                &[(v, a)] => {
                    let (mut l, mut u) = (row.lo / a, row.hi / a);
                    if a < 0.0 {
                        std::mem::swap(&mut l, &mut u);
                    }
                    if is_int[v] {
                        (l, u) = round_bounds(l, u);
                    }
                    let (nl, nu) = (lb[v].max(l), ub[v].min(u));
                    if nl > nu + FEAS_TOL {
                        return None;
                    }
                    lb[v] = nl;
                    ub[v] = nu.max(nl);
                    row.live = false;
                    changed = true;
                }
                _ => {}
            }
        }
    }

    let obj = model.objective().normalized();
    let mut cost_full = vec![0.0; nv];
    for &(v, c) in &obj.linear {
        cost_full[v.0] += c;
    }
    let mut offset = obj.constant;
    let mut col_of = vec![usize::MAX; nv];
    let mut cols = Vec::new();
    let mut fixed = vec![None; nv];
    for v in 0..nv {
        if lb[v] == ub[v] {
            fixed[v] = Some(lb[v]);
            offset += cost_full[v] * lb[v];
        } else {
            col_of[v] = cols.len();
            cols.push(v);
        }
    }
    let mut out_rows = Vec::new();
    let (mut row_lo, mut row_hi) = (Vec::new(), Vec::new());
    for row in rows.into_iter().filter(|r| r.live) {
        let mut sr = SparseRow::default();
        let mut shift = 0.0;
        for (v, a) in row.terms {
            if col_of[v] == usize::MAX {
                shift += a * lb[v];
            } else {
                sr.idx.push(col_of[v]);
                sr.val.push(a);
            }
        }
        out_rows.push(sr);
        row_lo.push(row.lo - shift);
        row_hi.push(row.hi - shift);
    }
    Some(Reduced {
        integer: cols.iter().map(|&v| is_int[v]).collect(),
        lb: cols.iter().map(|&v| lb[v]).collect(),
        ub: cols.iter().map(|&v| ub[v]).collect(),
        cost: cols.iter().map(|&v| cost_full[v]).collect(),
        cols,
        offset,
        rows: out_rows,
        row_lo,
        row_hi,
        fixed,
    })
}
