use ocst_core::model::{evaluate, export_lp, extend_with_products, import_lp, linearize, Assignment, Expr, Model, Sense, VarId, VarKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_linear_model(seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Model::new(format!("rand{seed}"));
    let nv = rng.gen_range(1..=8);
    let mut ids = Vec::new();
    for k in 0..nv {
        let kind = match rng.gen_range(0..3) {
            0 => VarKind::Binary,
            1 => VarKind::Integer,
            _ => VarKind::Continuous,
        };
        let (lb, ub) = match kind {
            VarKind::Binary => (0.0, 1.0),
            _ => match rng.gen_range(0..4) {
                0 => (f64::NEG_INFINITY, f64::INFINITY),
                1 => (0.0, f64::INFINITY),
                2 => (-(rng.gen_range(0..5) as f64), rng.gen_range(1..9) as f64 / 4.0),
                _ => (rng.gen_range(0..3) as f64, 10.0),
            },
        };
        ids.push(m.add_var(format!("v_{k}"), kind, lb, ub).unwrap());
    }
    let coef = |rng: &mut ChaCha8Rng| {
        let c: f64 = rng.gen_range(-50..=50) as f64 / 8.0;
        if rng.gen_bool(0.1) {
            c * 1e-7 + 1.0 / 3.0
        } else {
            c
        }
    };
    for r in 0..rng.gen_range(0..6) {
        let mut e = Expr::new();
        for &v in &ids {
            if rng.gen_bool(0.6) {
                e.add_term(v, coef(&mut rng));
            }
        }
        let sense = [Sense::Le, Sense::Eq, Sense::Ge][rng.gen_range(0..3)];
        m.add_constraint(format!("c{r}"), e, sense, coef(&mut rng)).unwrap();
    }
    let mut obj = Expr::new();
    for &v in &ids {
        if rng.gen_bool(0.7) {
            obj.add_term(v, coef(&mut rng));
        }
    }
    m.set_objective(obj.constant(rng.gen_range(-3..=3) as f64)).unwrap();
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lp_text_round_trips(seed in any::<u64>()) {
        let m = random_linear_model(seed);
        let text = export_lp(&m).unwrap();
        let back = import_lp(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(export_lp(&back).unwrap(), text);
    }

    #[test]
    fn evaluation_matches_direct_arithmetic(seed in any::<u64>()) {
        let m = random_linear_model(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut a = Assignment::new();
        let mut x = Vec::new();
        for v in m.vars() {
            let val = if v.kind.is_integral() { rng.gen_range(0..=1) as f64 } else { rng.gen_range(-8..=8) as f64 / 2.0 };
            a.set_f64(v.name.clone(), val);
            x.push(val);
        }
        let e = evaluate(&m, &a, 1e-9).unwrap();
        let obj = m.objective().constant + m.objective().linear.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>();
        prop_assert!((e.objective_f64() - obj).abs() <= 1e-9 * (1.0 + obj.abs()));
        let mut violated = 0;
        for c in m.constraints() {
            let lhs: f64 = c.expr.linear.iter().map(|&(v, k)| k * x[v.0]).sum();
            let r = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            // Stay clear of the rounding band around the tolerance.
            if r > 1e-6 {
                violated += 1;
            }
            prop_assume!(r <= 1e-12 || r > 1e-6);
        }
        prop_assert_eq!(e.violations.len(), violated);
    }
}

/// Products of a binary and a bounded integer, with the feasible `z` values
/// of the linearization found by scanning a grid.
#[test]
fn linearization_admits_only_the_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let lo = rng.gen_range(-3..=2);
        let hi = lo + rng.gen_range(0..=4);
        let mut m = Model::new("p");
        let x = m.binary("x").unwrap();
        let v = m.add_var("v", VarKind::Integer, lo as f64, hi as f64).unwrap();
        let w = m.binary("w").unwrap();
        m.set_objective(Expr::new().product(x, v, 2.0).product(w, v, -1.0).term(v, 1.0)).unwrap();
        let lin = linearize(&m).unwrap();
        assert!(lin.is_linear());
        assert_eq!(lin.num_vars(), m.num_vars() + 2);
        assert_eq!(lin.num_constraints(), m.num_constraints() + 8);
        let z_names: Vec<String> = lin.vars()[3..].iter().map(|v| v.name.clone()).collect();
        for xv in 0..=1 {
            for wv in 0..=1 {
                for vv in lo..=hi {
                    let mut base = Assignment::new();
                    base.set_int("x", xv);
                    base.set_int("w", wv);
                    base.set_int("v", vv);
                    let full = extend_with_products(&lin, &base).unwrap();
                    let e = evaluate(&lin, &full, 1e-9).unwrap();
                    assert!(e.is_feasible());
                    assert_eq!(e.objective_f64(), (2 * xv * vv - wv * vv + vv) as f64);
                    for (k, name) in z_names.iter().enumerate() {
                        let truth = [xv * vv, wv * vv];
                        let factor = if lin.var(VarId(3 + k)).name.contains('x') { truth[0] } else { truth[1] };
                        assert_eq!(full.get_f64(name), Some(factor as f64));
                        let mut feasible = Vec::new();
                        for z in (lo.min(0) * 2)..=(hi.max(0) * 2) {
                            let mut alt = full.clone();
                            alt.set_int(name.clone(), z);
                            if evaluate(&lin, &alt, 1e-9).unwrap().violations.is_empty() {
                                feasible.push(z);
                            }
                        }
                        assert_eq!(feasible, vec![factor]);
                    }
                }
            }
        }
    }
}

#[test]
fn one_violation_by_half() {
    let mut m = Model::new("h");
    let x = m.add_var("x", VarKind::Continuous, 0.0, 5.0).unwrap();
    let y = m.add_var("y", VarKind::Continuous, 0.0, 5.0).unwrap();
    m.add_constraint("eq", Expr::new().term(x, 1.0).term(y, 1.0), Sense::Eq, 2.0).unwrap();
    m.add_constraint("le", Expr::new().term(x, 1.0), Sense::Le, 4.0).unwrap();
    let mut a = Assignment::new();
    a.set_f64("x", 1.5);
    a.set_f64("y", 1.0);
    let e = evaluate(&m, &a, 1e-6).unwrap();
    assert_eq!(e.violations.len(), 1);
    assert_eq!(e.violations[0].name, "eq");
    assert_eq!(e.violations[0].residual, 0.5);
}
