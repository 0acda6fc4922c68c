//! Solver-neutral mixed-integer models.
//!
//! A [`Model`] holds declared variables, named constraints and a minimization
//! objective. Constraints and the objective may carry bilinear terms; those
//! are removed by [`linearize`] before export or solving.

mod evaluate;
mod linearize;
mod lp_format;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use evaluate::{evaluate, Assignment, Evaluation, Violation, DEFAULT_INTEGRALITY_TOL, DEFAULT_TOL};
pub use linearize::{extend_with_products, linearize};
pub use lp_format::{export_lp, import_lp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate variable name {0:?}")]
    DuplicateVariable(String),
    #[error("invalid variable name {0:?}")]
    InvalidName(String),
    #[error("variable {0:?} has empty bounds [{1}, {2}]")]
    EmptyBounds(String, f64, f64),
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("unknown variable {0:?}")]
    UnknownName(String),
    #[error("bilinear term {0} * {1} has no binary factor")]
    NoBinaryFactor(String, String),
    #[error("bilinear co-factor {0:?} has an infinite bound")]
    Unbounded(String),
    #[error("model has bilinear terms; linearize it first")]
    Bilinear,
    #[error("LP parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("assignment has no value for {0:?}")]
    MissingValue(String),
    #[error("assignment line {line}: {msg}")]
    Assignment { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// `sum c_k x_k + sum q_k x_a x_b + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expr {
    pub linear: Vec<(VarId, f64)>,
    pub bilinear: Vec<(VarId, VarId, f64)>,
    pub constant: f64,
}

impl Expr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, v: VarId, c: f64) -> Self {
        self.linear.push((v, c));
        self
    }

    pub fn product(mut self, a: VarId, b: VarId, c: f64) -> Self {
        self.bilinear.push((a, b, c));
        self
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_term(&mut self, v: VarId, c: f64) {
        self.linear.push((v, c));
    }

    pub fn add_product(&mut self, a: VarId, b: VarId, c: f64) {
        self.bilinear.push((a, b, c));
    }

    pub fn is_linear(&self) -> bool {
        self.bilinear.is_empty()
    }

    /// Merges repeated terms, orders them by variable index and drops zeros.
    /// Bilinear factors are stored with the smaller index first.
    pub fn normalized(&self) -> Expr {
        let mut lin: Vec<(VarId, f64)> = self.linear.clone();
        lin.sort_by_key(|t| t.0);
        let mut linear: Vec<(VarId, f64)> = Vec::with_capacity(lin.len());
        for (v, c) in lin {
            match linear.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => linear.push((v, c)),
            }
        }
        linear.retain(|t| t.1 != 0.0);
        let mut bil: Vec<(VarId, VarId, f64)> =
            self.bilinear.iter().map(|&(a, b, c)| if a <= b { (a, b, c) } else { (b, a, c) }).collect();
        bil.sort_by_key(|t| (t.0, t.1));
        let mut bilinear: Vec<(VarId, VarId, f64)> = Vec::with_capacity(bil.len());
        for (a, b, c) in bil {
            match bilinear.last_mut() {
                Some(last) if last.0 == a && last.1 == b => last.2 += c,
                _ => bilinear.push((a, b, c)),
            }
        }
        bilinear.retain(|t| t.2 != 0.0);
        Expr { linear, bilinear, constant: self.constant }
    }

    fn max_var(&self) -> Option<usize> {
        self.linear
            .iter()
            .map(|t| t.0 .0)
            .chain(self.bilinear.iter().flat_map(|t| [t.0 .0, t.1 .0]))
            .max()
    }
}

/// `expr sense rhs`, with the expression constant folded into `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: Expr,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    name: String,
    vars: Vec<Variable>,
    index: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    objective: Expr,
    products: Vec<(VarId, VarId, VarId)>,
}

const RESERVED: &[&str] = &[
    "free", "inf", "infinity", "st", "s.t.", "end", "min", "minimize", "minimum", "subject", "such", "bounds",
    "bound", "generals", "general", "gen", "integers", "integer", "binaries", "binary", "bin",
];

pub(crate) fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "_.[]#".contains(c))
        && !RESERVED.contains(&name.to_ascii_lowercase().as_str())
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model { name: name.into(), ..Default::default() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> Result<VarId> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(ModelError::InvalidName(name));
        }
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            _ => (lb, ub),
        };
        if lb > ub || lb.is_nan() || ub.is_nan() {
            return Err(ModelError::EmptyBounds(name, lb, ub));
        }
        if self.index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let id = VarId(self.vars.len());
        self.index.insert(name.clone(), id);
        self.vars.push(Variable { name, kind, lb, ub });
        Ok(id)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    fn check_expr(&self, e: &Expr) -> Result<()> {
        match e.max_var() {
            Some(v) if v >= self.vars.len() => Err(ModelError::UnknownVariable(v)),
            _ => Ok(()),
        }
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, expr: Expr, sense: Sense, rhs: f64) -> Result<()> {
        self.check_expr(&expr)?;
        let mut expr = expr.normalized();
        let rhs = rhs - expr.constant;
        expr.constant = 0.0;
        self.constraints.push(Constraint { name: name.into(), expr, sense, rhs });
        Ok(())
    }

    pub fn set_objective(&mut self, expr: Expr) -> Result<()> {
        self.check_expr(&expr)?;
        self.objective = expr.normalized();
        Ok(())
    }

    pub fn set_bounds(&mut self, v: VarId, lb: f64, ub: f64) -> Result<()> {
        let var = self.vars.get_mut(v.0).ok_or(ModelError::UnknownVariable(v.0))?;
        if lb > ub {
            return Err(ModelError::EmptyBounds(var.name.clone(), lb, ub));
        }
        var.lb = lb;
        var.ub = ub;
        Ok(())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_linear(&self) -> bool {
        self.objective.is_linear() && self.constraints.iter().all(|c| c.expr.is_linear())
    }

    pub fn num_bilinear_terms(&self) -> usize {
        let mut seen: Vec<(VarId, VarId)> = self
            .constraints
            .iter()
            .flat_map(|c| c.expr.bilinear.iter())
            .chain(self.objective.bilinear.iter())
            .map(|&(a, b, _)| (a, b))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Product variables introduced by [`linearize`]: `(z, x, v)` with `z = x * v`.
    pub fn products(&self) -> &[(VarId, VarId, VarId)] {
        &self.products
    }

    pub(crate) fn push_product(&mut self, z: VarId, x: VarId, v: VarId) {
        self.products.push((z, x, v));
    }

    pub fn integer_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().enumerate().filter(|(_, v)| v.kind.is_integral()).map(|(i, _)| VarId(i))
    }
}

/// Equality up to term ordering; product bookkeeping is ignored.
impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.vars == other.vars
            && self.objective.normalized() == other.objective.normalized()
            && self.constraints.len() == other.constraints.len()
            && self.constraints.iter().zip(&other.constraints).all(|(a, b)| {
                a.name == b.name && a.sense == b.sense && a.rhs == b.rhs && a.expr.normalized() == b.expr.normalized()
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_checks() {
        let mut m = Model::new("t");
        let x = m.binary("x").unwrap();
        assert_eq!(m.binary("x"), Err(ModelError::DuplicateVariable("x".into())));
        assert!(matches!(m.add_var("1bad", VarKind::Integer, 0.0, 1.0), Err(ModelError::InvalidName(_))));
        assert!(matches!(m.add_var("y", VarKind::Integer, 2.0, 1.0), Err(ModelError::EmptyBounds(..))));
        assert_eq!(m.add_constraint("c", Expr::new().term(VarId(7), 1.0), Sense::Le, 1.0), Err(ModelError::UnknownVariable(7)));
        m.add_constraint("c", Expr::new().term(x, 1.0).term(x, 2.0).constant(1.0), Sense::Le, 4.0).unwrap();
        let c = &m.constraints()[0];
        assert_eq!((c.expr.linear.clone(), c.rhs), (vec![(x, 3.0)], 3.0));
    }

    #[test]
    fn normalization_merges_products() {
        let e = Expr::new().product(VarId(2), VarId(1), 1.0).product(VarId(1), VarId(2), 2.0).term(VarId(0), 0.0);
        let n = e.normalized();
        assert_eq!(n.bilinear, vec![(VarId(1), VarId(2), 3.0)]);
        assert!(n.linear.is_empty());
    }
}
