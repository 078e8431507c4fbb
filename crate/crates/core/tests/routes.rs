//! The continuum route against closed forms and against the node route.

use nonlocal_core::funcspace::{sample_function, Descriptor, Pl};
use nonlocal_core::functional::continuum::{self, lambda_planar_affine, Problem};
use nonlocal_core::functional::{Anchor, Evaluator, Normalizer, Region, Route};
use nonlocal_core::mollifier::{make_mollifier, Family, RadialProfile};
use nonlocal_core::phi::{make_phi, PhiKind};
use nonlocal_core::space::{build_planar_grid, build_weighted_interval, WeightProfile};

fn lambda_1d_closed_form(delta: f64) -> f64 {
    2.0 * (1.0 - delta + delta * delta.ln())
}

#[test]
fn affine_flat_window_is_exact() {
    let w = WeightProfile::new(vec![0.0, 0.4, 1.0], vec![1.0, 2.5]).unwrap();
    let pl = Pl::new(vec![0.0, 1.0], vec![0.0, -1.5]).unwrap();
    let prob = Problem::new(pl, w, (0.2, 0.8), (0.0, 1.0)).unwrap();
    let moll = make_mollifier(Family::FlatWindow { r: 0.05 }, 1.0).unwrap();
    let ev = Evaluator::new(1);
    let m = continuum::moments(&ev, &prob, &moll, &[1.0, 2.0], None).unwrap();
    // every row moment is |a|^e; the outer mass is 0.2·1 + 0.4·2.5
    let mu = 0.2 + 1.0;
    assert!((m.sums[0] - 1.5 * mu).abs() < 1e-12, "{}", m.sums[0]);
    assert!((m.sums[1] - 2.25 * mu).abs() < 1e-12, "{}", m.sums[1]);
    assert!((m.outer_mass - mu).abs() < 1e-13);
}

#[test]
fn lambda_1d_against_closed_form() {
    let w = WeightProfile::uniform(1.0).unwrap();
    let pl = Pl::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    let prob = Problem::new(pl, w, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let phi = make_phi(PhiKind::Step).unwrap();
    let coarse = Evaluator::new(1);
    let mut fine = Evaluator::new(1);
    fine.gl_points = 20;
    for delta in [0.5, 0.1, 0.01, 1e-3] {
        let want = lambda_1d_closed_form(delta);
        for (ev, tol) in [(&coarse, 1e-8), (&fine, 1e-12)] {
            let (v, _, _) = continuum::lambda(ev, &prob, 1.0, delta, &phi, Anchor::AhlforsPower { q: 1.0 }).unwrap();
            assert!((v - want).abs() < tol * want, "{delta} ({} points): {v} vs {want}", ev.gl_points);
        }
    }
}

#[test]
fn lambda_routes_agree_on_a_grid() {
    let sp = build_weighted_interval(&[0.0, 1.0], &[1.0], 4000).unwrap();
    let f = sample_function(&sp, &Descriptor::Affine { a: 1.0, b: 0.0 }).unwrap();
    let phi = make_phi(PhiKind::Step).unwrap();
    let anchor = Anchor::AhlforsPower { q: 1.0 };
    let nodes = Evaluator::new(1).eval_lambda(&sp, &f, 1.0, 0.1, &phi, anchor, &Region::Whole).unwrap().value;
    let cont = Evaluator::new(1)
        .with_route(Route::Continuum)
        .eval_lambda(&sp, &f, 1.0, 0.1, &phi, anchor, &Region::Whole)
        .unwrap()
        .value;
    assert!((cont - lambda_1d_closed_form(0.1)).abs() < 1e-8);
    assert!((nodes - cont).abs() < 2e-3 * cont, "nodes {nodes} continuum {cont}");
}

#[test]
fn radial_routes_agree_on_a_grid() {
    let sp = build_weighted_interval(&[0.0, 0.5, 1.0], &[1.0, 2.0], 20000).unwrap();
    let f = sample_function(&sp, &"pl:0:0;0.3:0.6;0.7:0.2;1:0.5".parse::<Descriptor>().unwrap()).unwrap();
    let moll = make_mollifier(Family::EuclideanRadial(RadialProfile::indicator_1d(50.0).unwrap()), 1.0).unwrap();
    let reg = Region::Trimmed(Region::interior_mask(&sp, 0.05));
    let run = |route| {
        Evaluator::new(1).with_route(route).moments(&sp, &f, &moll, &[1.0, 2.0], Some(2.0), &reg).unwrap()
    };
    let (a, b) = (run(Route::Nodes), run(Route::Continuum));
    for k in 0..2 {
        assert!((a.sums[k] - b.sums[k]).abs() < 2e-3 * b.sums[k], "e{k}: {} vs {}", a.sums[k], b.sums[k]);
        assert!((a.root_sums[k] - b.root_sums[k]).abs() < 2e-3 * b.root_sums[k]);
    }
}

#[test]
fn window_routes_converge_with_analytic_normalizer() {
    let d = "pl:0:0;0.45:0.9;1:0.1".parse::<Descriptor>().unwrap();
    let moll = make_mollifier(Family::WindowPower { r: 0.02, q: 2.0 }, 1.0).unwrap();
    let gap = |cells: usize| {
        let sp = build_weighted_interval(&[0.0, 0.5, 1.0], &[1.0, 2.0], cells).unwrap();
        let f = sample_function(&sp, &d).unwrap();
        let nodes = Evaluator::new(1)
            .with_normalizer(Normalizer::Analytic)
            .eval_i(&sp, &f, 1.0, &moll, &Region::Whole)
            .unwrap()
            .value;
        let cont = Evaluator::new(1).with_route(Route::Continuum).eval_i(&sp, &f, 1.0, &moll, &Region::Whole).unwrap().value;
        (nodes - cont).abs() / cont
    };
    let (g1, g2) = (gap(5000), gap(20000));
    assert!(g2 < 4e-3, "{g2}");
    assert!(g2 < g1 / 2.0, "node error did not shrink: {g1} -> {g2}");
}

#[test]
fn planar_lambda_against_polar_reference() {
    // values from an independent polar integration of the same integral
    let phi = make_phi(PhiKind::Step).unwrap();
    let ev = Evaluator::new(1);
    for (delta, want) in [(0.4, 0.54505), (0.2, 1.39170), (0.1, 2.21111), (1e-3, 3.94621)] {
        let v = lambda_planar_affine(&ev, [0.6, -0.8], 1.0, delta, &phi, 2.0).unwrap();
        assert!((v - want).abs() < 2e-5 * want.max(1.0), "{delta}: {v} vs {want}");
    }
    // the square is symmetric under quarter turns of the gradient
    let a = lambda_planar_affine(&ev, [0.0, 1.0], 1.0, 0.2, &phi, 2.0).unwrap();
    let b = lambda_planar_affine(&ev, [1.0, 0.0], 1.0, 0.2, &phi, 2.0).unwrap();
    assert!((a - b).abs() < 1e-12 * b);
}

#[test]
fn planar_lambda_routes_agree() {
    let sp = build_planar_grid(64, 64).unwrap();
    let f = sample_function(&sp, &Descriptor::Affine2 { a: [0.6, 0.8], b: 0.0 }).unwrap();
    let phi = make_phi(PhiKind::Step).unwrap();
    let anchor = Anchor::AhlforsPower { q: 2.0 };
    let nodes = Evaluator::new(1).eval_lambda(&sp, &f, 1.0, 0.4, &phi, anchor, &Region::Whole).unwrap().value;
    let cont = lambda_planar_affine(&Evaluator::new(1), [0.6, 0.8], 1.0, 0.4, &phi, 2.0).unwrap();
    assert!((nodes - cont).abs() < 0.02 * cont, "nodes {nodes} continuum {cont}");
}

#[test]
fn worker_count_does_not_change_bits() {
    let sp = build_weighted_interval(&[0.0, 0.3, 1.0], &[2.0, 1.0], 3000).unwrap();
    let f = sample_function(&sp, &Descriptor::Sine { amp: 1.0, freq: 1.0, phase: 0.3 }).unwrap();
    let moll = make_mollifier(Family::FlatWindow { r: 0.01 }, 1.0).unwrap();
    let reg = Region::Trimmed(Region::interior_mask(&sp, 0.02));
    let base = Evaluator::new(1).moments(&sp, &f, &moll, &[1.0, 1.5], Some(2.0), &reg).unwrap();
    for w in [2, 3, 8] {
        let m = Evaluator::new(w).moments(&sp, &f, &moll, &[1.0, 1.5], Some(2.0), &reg).unwrap();
        assert_eq!(m, base, "workers {w}");
    }
    let phi = make_phi(PhiKind::Step).unwrap();
    let pl = sample_function(&sp, &Descriptor::Affine { a: 1.0, b: 0.0 }).unwrap();
    let c1 = Evaluator::new(1).with_route(Route::Continuum).eval_lambda(&sp, &pl, 1.0, 0.01, &phi, Anchor::YBall, &Region::Whole).unwrap();
    let c4 = Evaluator::new(4).with_route(Route::Continuum).eval_lambda(&sp, &pl, 1.0, 0.01, &phi, Anchor::YBall, &Region::Whole).unwrap();
    assert_eq!(c1.value.to_bits(), c4.value.to_bits());
}
