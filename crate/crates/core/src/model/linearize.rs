use std::collections::BTreeMap;

use num_rational::BigRational;

use super::{Assignment, Expr, Model, ModelError, Result, Sense, VarId, VarKind};

fn product_name(model: &Model, x: VarId, v: VarId) -> String {
    let base = format!("z_{}_{}", model.var(x).name, model.var(v).name);
    if model.lookup(&base).is_none() {
        return base;
    }
    (1..).map(|k| format!("{base}_{k}")).find(|n| model.lookup(n).is_none()).unwrap()
}

fn pick_factors(model: &Model, a: VarId, b: VarId) -> Result<(VarId, VarId)> {
    let (va, vb) = (model.var(a), model.var(b));
    let (x, v) = if va.kind == VarKind::Binary {
        (a, b)
    } else if vb.kind == VarKind::Binary {
        (b, a)
    } else {
        return Err(ModelError::NoBinaryFactor(va.name.clone(), vb.name.clone()));
    };
    let cv = model.var(v);
    if !cv.lb.is_finite() || !cv.ub.is_finite() {
        return Err(ModelError::Unbounded(cv.name.clone()));
    }
    Ok((x, v))
}

/// Replaces every product `x * v` (x binary, v bounded) by a fresh variable
/// `z` tied to it by four inequalities. Repeated products share one `z`.
pub fn linearize(model: &Model) -> Result<Model> {
    let mut out = model.clone();
    let mut zmap: BTreeMap<(VarId, VarId), VarId> = BTreeMap::new();
    let mut pending: Vec<(VarId, VarId, VarId)> = Vec::new();

    let mut substitute = |out: &mut Model, e: &Expr| -> Result<Expr> {
        let mut lin = e.clone();
        lin.bilinear.clear();
        for &(a, b, c) in &e.bilinear {
            let (x, v) = pick_factors(out, a, b)?;
            let z = match zmap.get(&(a, b)) {
                Some(&z) => z,
                None => {
                    let cv = out.var(v).clone();
                    let name = product_name(out, x, v);
                    let z = out.add_var(name, VarKind::Continuous, cv.lb.min(0.0), cv.ub.max(0.0))?;
                    zmap.insert((a, b), z);
                    pending.push((z, x, v));
                    z
                }
            };
            lin.linear.push((z, c));
        }
        Ok(lin.normalized())
    };

    let constraints = std::mem::take(&mut out.constraints);
    let mut rebuilt = Vec::with_capacity(constraints.len());
    for mut c in constraints {
        if !c.expr.bilinear.is_empty() {
            c.expr = substitute(&mut out, &c.expr)?;
        }
        rebuilt.push(c);
    }
    let obj = out.objective.clone();
    if !obj.bilinear.is_empty() {
        out.objective = substitute(&mut out, &obj)?;
    }
    out.constraints = rebuilt;

    for (z, x, v) in pending {
        let (lo, hi) = (out.var(v).lb, out.var(v).ub);
        let zn = out.var(z).name.clone();
        out.add_constraint(format!("{zn}_a"), Expr::new().term(z, 1.0).term(x, -hi), Sense::Le, 0.0)?;
        out.add_constraint(format!("{zn}_b"), Expr::new().term(z, 1.0).term(x, -lo), Sense::Ge, 0.0)?;
        out.add_constraint(format!("{zn}_c"), Expr::new().term(z, 1.0).term(v, -1.0).term(x, -lo), Sense::Le, -lo)?;
        out.add_constraint(format!("{zn}_d"), Expr::new().term(z, 1.0).term(v, -1.0).term(x, -hi), Sense::Ge, -hi)?;
        out.push_product(z, x, v);
    }
    Ok(out)
}

/// Adds `z = x * v` values for every product variable of a linearized model.
pub fn extend_with_products(model: &Model, a: &Assignment) -> Result<Assignment> {
    let mut out = a.clone();
    for &(z, x, v) in model.products() {
        let name_of = |id: VarId| model.var(id).name.clone();
        let get = |id: VarId| -> Result<BigRational> {
            a.get(&model.var(id).name).cloned().ok_or_else(|| ModelError::MissingValue(name_of(id)))
        };
        let val = get(x)? * get(v)?;
        out.set(name_of(z), val);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate, DEFAULT_TOL};

    fn product_model() -> (Model, VarId, VarId) {
        let mut m = Model::new("p");
        let x = m.binary("x").unwrap();
        let v = m.add_var("v", VarKind::Integer, 1.0, 3.0).unwrap();
        m.add_constraint("c", Expr::new().product(x, v, 1.0).term(v, 1.0), Sense::Ge, 0.0).unwrap();
        m.set_objective(Expr::new().product(v, x, 2.0)).unwrap();
        (m, x, v)
    }

    fn z_range(lin: &Model, xv: f64, vv: f64) -> (f64, f64) {
        let z = lin.products()[0].0;
        let zn = lin.var(z).name.clone();
        let mut feasible = Vec::new();
        for k in -40..=40 {
            let zv = k as f64 * 0.125;
            let mut a = Assignment::new();
            a.set_f64("x", xv);
            a.set_f64("v", vv);
            a.set_f64(zn.clone(), zv);
            let e = evaluate(lin, &a, DEFAULT_TOL).unwrap();
            if e.violations.iter().all(|w| !w.name.starts_with("z_")) && e.bound_violations.is_empty() {
                feasible.push(zv);
            }
        }
        (feasible[0], *feasible.last().unwrap())
    }

    #[test]
    fn forces_product_value() {
        let (m, _, _) = product_model();
        let lin = linearize(&m).unwrap();
        assert!(lin.is_linear());
        assert_eq!(z_range(&lin, 1.0, 2.0), (2.0, 2.0));
        assert_eq!(z_range(&lin, 0.0, 3.0), (0.0, 0.0));
    }

    #[test]
    fn counts_new_variables_and_rows() {
        let (m, _, _) = product_model();
        let k = m.num_bilinear_terms();
        assert_eq!(k, 1);
        let lin = linearize(&m).unwrap();
        assert_eq!(lin.num_vars(), m.num_vars() + k);
        assert_eq!(lin.num_constraints(), m.num_constraints() + 4 * k);
    }

    #[test]
    fn rejects_bad_products() {
        let mut m = Model::new("p");
        let a = m.add_var("a", VarKind::Integer, 0.0, 3.0).unwrap();
        let b = m.add_var("b", VarKind::Integer, 0.0, 3.0).unwrap();
        let x = m.binary("x").unwrap();
        let u = m.add_var("u", VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        let mut m1 = m.clone();
        m1.set_objective(Expr::new().product(a, b, 1.0)).unwrap();
        assert!(matches!(linearize(&m1), Err(ModelError::NoBinaryFactor(..))));
        m.set_objective(Expr::new().product(x, u, 1.0)).unwrap();
        assert!(matches!(linearize(&m), Err(ModelError::Unbounded(_))));
    }

    #[test]
    fn objective_preserved_on_integral_points() {
        let (m, _, _) = product_model();
        let lin = linearize(&m).unwrap();
        for xv in 0..=1 {
            for vv in 1..=3 {
                let mut a = Assignment::new();
                a.set_int("x", xv);
                a.set_int("v", vv);
                let full = extend_with_products(&lin, &a).unwrap();
                let e0 = evaluate(&m, &a, DEFAULT_TOL).unwrap();
                let e1 = evaluate(&lin, &full, DEFAULT_TOL).unwrap();
                assert!(e1.is_feasible());
                assert_eq!(e0.objective, e1.objective);
            }
        }
    }
}
