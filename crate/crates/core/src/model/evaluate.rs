use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Constraint, Expr, Model, ModelError, Result, Sense};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_INTEGRALITY_TOL: f64 = 1e-6;

/// Variable values keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<String, BigRational>,
}

pub(crate) fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(i) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(i));
    }
    let x: f64 = s.parse().ok()?;
    x.is_finite().then(|| rational(x))
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: BigRational) {
        self.values.insert(name.into(), value);
    }

    pub fn set_int(&mut self, name: impl Into<String>, value: i64) {
        self.set(name, BigRational::from_integer(value.into()));
    }

    /// Stores the exact binary value of `value`.
    pub fn set_f64(&mut self, name: impl Into<String>, value: f64) {
        self.set(name, rational(value));
    }

    pub fn get(&self, name: &str) -> Option<&BigRational> {
        self.values.get(name)
    }

    pub fn get_f64(&self, name: &str) -> Option<f64> {
        self.values.get(name).and_then(|r| r.to_f64())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BigRational)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_complete_for(&self, model: &Model) -> bool {
        model.vars().iter().all(|v| self.values.contains_key(&v.name))
    }

    /// Values in model variable order.
    pub fn to_vector(&self, model: &Model) -> Result<Vec<BigRational>> {
        model
            .vars()
            .iter()
            .map(|v| self.values.get(&v.name).cloned().ok_or_else(|| ModelError::MissingValue(v.name.clone())))
            .collect()
    }

    pub fn from_f64_slice(model: &Model, x: &[f64]) -> Self {
        let mut a = Assignment::new();
        for (v, &val) in model.vars().iter().zip(x) {
            a.set_f64(v.name.clone(), val);
        }
        a
    }

    /// One `name value` line per variable; values are integers or `p/q`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} {}", format_rational(v));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut a = Assignment::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(ModelError::Assignment { line: i + 1, msg: "expected `name value`".into() });
            };
            let value = parse_rational(val)
                .ok_or_else(|| ModelError::Assignment { line: i + 1, msg: format!("bad value {val:?}") })?;
            a.set(name, value);
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: BigRational,
    pub violations: Vec<Violation>,
    pub bound_violations: Vec<Violation>,
    pub integrality_violations: Vec<Violation>,
}

impl Evaluation {
    pub fn objective_f64(&self) -> f64 {
        self.objective.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty() && self.bound_violations.is_empty() && self.integrality_violations.is_empty()
    }
}

struct Coefs {
    cache: BTreeMap<u64, BigRational>,
}

impl Coefs {
    fn get(&mut self, c: f64) -> BigRational {
        self.cache.entry(c.to_bits()).or_insert_with(|| rational(c)).clone()
    }
}

fn expr_value(e: &Expr, x: &[BigRational], coefs: &mut Coefs) -> BigRational {
    let mut acc = coefs.get(e.constant);
    for &(v, c) in &e.linear {
        if !x[v.0].is_zero() {
            acc += coefs.get(c) * &x[v.0];
        }
    }
    for &(a, b, c) in &e.bilinear {
        if !x[a.0].is_zero() && !x[b.0].is_zero() {
            acc += coefs.get(c) * &x[a.0] * &x[b.0];
        }
    }
    acc
}

fn to_residual(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

fn constraint_residual(c: &Constraint, x: &[BigRational], coefs: &mut Coefs) -> BigRational {
    let lhs = expr_value(&c.expr, x, coefs);
    let rhs = coefs.get(c.rhs);
    let diff = lhs - rhs;
    match c.sense {
        Sense::Le => diff.max(BigRational::zero()),
        Sense::Ge => (-diff).max(BigRational::zero()),
        Sense::Eq => diff.abs(),
    }
}

/// Checks every constraint, bound and integrality mark exactly; residuals
/// above `tol` are reported.
pub fn evaluate(model: &Model, a: &Assignment, tol: f64) -> Result<Evaluation> {
    let x = a.to_vector(model)?;
    let mut coefs = Coefs { cache: BTreeMap::new() };
    let tol_r = rational(tol);
    let mut violations = Vec::new();
    for c in model.constraints() {
        let r = constraint_residual(c, &x, &mut coefs);
        if r > tol_r {
            violations.push(Violation { name: c.name.clone(), residual: to_residual(&r) });
        }
    }
    let mut bound_violations = Vec::new();
    let mut integrality_violations = Vec::new();
    let int_tol = rational(DEFAULT_INTEGRALITY_TOL.max(tol));
    for (var, val) in model.vars().iter().zip(&x) {
        let mut r = BigRational::zero();
        if var.lb.is_finite() {
            let lb = coefs.get(var.lb);
            if *val < lb {
                r = lb - val;
            }
        }
        if var.ub.is_finite() {
            let ub = coefs.get(var.ub);
            if *val > ub {
                r = val - ub;
            }
        }
        if r > tol_r {
            bound_violations.push(Violation { name: var.name.clone(), residual: to_residual(&r) });
        }
        if var.kind.is_integral() {
            let frac = val - val.floor();
            let dist = if frac > BigRational::one() - &frac { BigRational::one() - frac } else { frac };
            if dist > int_tol {
                integrality_violations.push(Violation { name: var.name.clone(), residual: to_residual(&dist) });
            }
        }
    }
    let objective = expr_value(model.objective(), &x, &mut coefs);
    Ok(Evaluation { objective, violations, bound_violations, integrality_violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Expr, VarKind};

    fn small() -> Model {
        let mut m = Model::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 10.0).unwrap();
        let y = m.add_var("y", VarKind::Integer, 0.0, 10.0).unwrap();
        m.add_constraint("sum", Expr::new().term(x, 1.0).term(y, 1.0), Sense::Eq, 3.0).unwrap();
        m.add_constraint("cap", Expr::new().term(x, 1.0), Sense::Le, 2.0).unwrap();
        m.set_objective(Expr::new().term(x, 2.0).term(y, 1.0).constant(0.5)).unwrap();
        m
    }

    #[test]
    fn feasible_point() {
        let m = small();
        let mut a = Assignment::new();
        a.set_int("x", 1);
        a.set_int("y", 2);
        let e = evaluate(&m, &a, DEFAULT_TOL).unwrap();
        assert!(e.is_feasible());
        assert_eq!(e.objective_f64(), 4.5);
    }

    #[test]
    fn equality_violated_by_half() {
        let m = small();
        let mut a = Assignment::new();
        a.set_f64("x", 1.5);
        a.set_int("y", 2);
        let e = evaluate(&m, &a, DEFAULT_TOL).unwrap();
        assert_eq!(e.violations, vec![Violation { name: "sum".into(), residual: 0.5 }]);
        a.set_f64("y", 1.5);
        let e = evaluate(&m, &a, DEFAULT_TOL).unwrap();
        assert_eq!(e.integrality_violations.len(), 1);
    }

    #[test]
    fn missing_value() {
        let m = small();
        let mut a = Assignment::new();
        a.set_int("x", 1);
        assert_eq!(evaluate(&m, &a, DEFAULT_TOL), Err(ModelError::MissingValue("y".into())));
    }

    #[test]
    fn text_round_trip() {
        let mut a = Assignment::new();
        a.set_int("x_1_2", 1);
        a.set_f64("d_1_2", 0.375);
        a.set("z", BigRational::new(1.into(), 3.into()));
        let t = a.to_text();
        assert!(t.contains("d_1_2 3/8"));
        assert_eq!(Assignment::from_text(&t).unwrap(), a);
        assert!(Assignment::from_text("x 1 2").is_err());
        assert_eq!(Assignment::from_text("x 0.5").unwrap().get_f64("x"), Some(0.5));
    }
}
