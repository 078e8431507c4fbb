use nonlocal_core::cantor::{audit_cantor, build_cantor_model, bump_f0, cantor_function, cantor_space, to_f64, MAX_DEPTH};
use nonlocal_core::Error;

/// Removed intervals by plain floating recursion (exact for these dyadics).
fn removed(m: u32) -> Vec<Vec<(f64, f64)>> {
    let mut comps = vec![(0.0f64, 1.0f64)];
    let mut out = Vec::new();
    for i in 1..=m {
        let len = 0.25f64.powi(i as i32);
        let mut gen = Vec::new();
        let mut next = Vec::new();
        for (a, b) in comps {
            let c = 0.5 * (a + b);
            gen.push((c - len / 2.0, c + len / 2.0));
            next.push((a, c - len / 2.0));
            next.push((c + len / 2.0, b));
        }
        out.push(gen);
        comps = next;
    }
    out
}

#[test]
fn construction_matches_recursion() {
    for m in 1..=10 {
        let model = build_cantor_model(m).unwrap();
        let want = removed(m);
        for i in 1..=m {
            let got: Vec<(f64, f64)> = model.d_intervals(i).iter().map(|(a, b)| (to_f64(*a), to_f64(*b))).collect();
            assert_eq!(got, want[i as usize - 1], "depth {m} generation {i}");
            // L_i = 1/2 + 2^(-i-1)
            assert_eq!(model.l(i), 0.5 + 0.5f64.powi(i as i32 + 1));
        }
        assert_eq!(model.a_intervals().len(), 1 << m);
        let set: f64 = model.a_intervals().iter().map(|(a, b)| to_f64(b - a)).sum();
        assert_eq!(set, model.l(m));
        // μ([0, 1]) = 2 L_m + (1 - L_m)
        assert_eq!(model.weight().total(), 1.0 + model.l(m));
    }
}

#[test]
fn functions_of_the_construction() {
    let model = build_cantor_model(6).unwrap();
    let f = model.primitive();
    assert_eq!(f.eval(1.0), 2.0 * model.l(6));
    assert_eq!(f.lipschitz(), 2.0);
    for i in 1..=6 {
        let fi = model.approximant(i);
        // each approximant climbs from 0 to 1 on D_i only
        assert_eq!(fi.eval(0.0), 0.0);
        assert_eq!(fi.eval(1.0), 1.0);
        assert_eq!(fi.lipschitz(), 2f64.powi(i as i32 + 1));
    }
    assert_eq!(model.approximant_infimum(), 1.0);
    let cf = cantor_function(&model);
    assert_eq!(cf.f.eval(0.5), f.eval(0.5));
}

#[test]
fn identities_hold_through_depth_twelve() {
    for m in 1..=12 {
        let a = audit_cantor(&build_cantor_model(m).unwrap());
        for c in &a.checks {
            assert!(c.pass, "depth {m}: {} ({})", c.name, c.detail);
        }
        assert!(!a.checks.is_empty());
    }
}

#[test]
fn resolution_and_depth_limits() {
    assert!(build_cantor_model(0).is_err());
    assert!(build_cantor_model(MAX_DEPTH + 1).is_err());
    let model = build_cantor_model(4).unwrap();
    match cantor_space(&model, 1000) {
        Err(Error::Resolution { required, .. }) => assert_eq!(required, 1 << 11),
        other => panic!("expected a resolution error, got {other:?}"),
    }
    let sp = cantor_space(&model, 1 << 11).unwrap();
    assert!((sp.masses().iter().sum::<f64>() - (1.0 + model.l(4))).abs() < 1e-12);
    let b = bump_f0(&sp, 1.0).unwrap();
    assert!(b.values.iter().all(|v| v.is_finite()));
}
