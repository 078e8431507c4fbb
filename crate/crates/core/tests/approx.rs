use nonlocal_core::approx::{build_cover, build_pou, discrete_convolution, l1_gap, lip_chain_report};
use nonlocal_core::funcspace::{sample_function, Descriptor};
use nonlocal_core::space::{build_planar_grid, build_weighted_interval, Space};

fn masks(space: &Space, u: (f64, f64), omega: (f64, f64)) -> (Vec<bool>, Vec<bool>) {
    let inside = |p: [f64; 2], (a, b): (f64, f64)| {
        let ok = |t: f64| t >= a && t <= b;
        ok(p[0]) && (space.ys().is_empty() || ok(p[1]))
    };
    let uu = (0..space.len()).map(|i| inside(space.point(i), u)).collect();
    let om = (0..space.len()).map(|i| inside(space.point(i), omega)).collect();
    (uu, om)
}

#[test]
fn interval_cover_partition_and_chain() {
    let sp = build_weighted_interval(&[0.0, 0.5, 1.0], &[1.0, 2.0], 800).unwrap();
    let (u, om) = masks(&sp, (0.3, 0.7), (0.1, 0.9));
    assert!(build_cover(&sp, &u, &om, 0.05).is_err());
    let s = 0.015;
    let cover = build_cover(&sp, &u, &om, s).unwrap();
    assert!(!cover.centers.is_empty());
    // every node of U(5s) within s of a center
    for i in (0..sp.len()).filter(|i| cover.enlarged[*i]) {
        let near = cover.centers.iter().any(|&c| sp.dist(i, c) < s);
        assert!(near || cover.discarded > 0, "node {i} uncovered");
    }
    // the centers are s-separated
    for (k, &a) in cover.centers.iter().enumerate() {
        for &b in &cover.centers[k + 1..] {
            assert!(sp.dist(a, b) >= s);
        }
    }
    let pou = build_pou(&sp, &cover).unwrap();
    for i in (0..sp.len()).filter(|i| pou.is_defined(*i)) {
        let total: f64 = pou.weights[i].iter().map(|w| w.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
    assert!(pou.lip_const > 0.0 && pou.lip_const.is_finite());

    let f = sample_function(&sp, &Descriptor::Affine { a: 1.0, b: 0.0 }).unwrap();
    let conv = discrete_convolution(&sp, &f, &cover, &pou).unwrap();
    // h mixes averages over balls within 2s, so it stays within 3s of f
    let mu_u: f64 = (0..sp.len()).filter(|i| u[*i]).map(|i| sp.masses()[i]).sum();
    assert!(l1_gap(&sp, &conv.h, &f, &u) <= 3.0 * s * mu_u);

    let g = sample_function(&sp, &Descriptor::Sine { amp: 1.0, freq: 2.0, phase: 0.1 }).unwrap();
    let rep = lip_chain_report(&sp, &g, &cover, &pou, 1.5, 2.0, 4.0, 10_000).unwrap();
    assert!(rep.holds(), "{rep:?}");
    assert!(rep.pairs_audited > 0);
    assert!(rep.tight_constant <= rep.constant);
}

#[test]
fn planar_chain() {
    let sp = build_planar_grid(64, 64).unwrap();
    let (u, om) = masks(&sp, (0.35, 0.65), (0.1, 0.9));
    let cover = build_cover(&sp, &u, &om, 0.02).unwrap();
    let pou = build_pou(&sp, &cover).unwrap();
    let f = sample_function(&sp, &Descriptor::Affine2 { a: [0.3, -0.7], b: 0.1 }).unwrap();
    let rep = lip_chain_report(&sp, &f, &cover, &pou, 1.0, 2.0, 4.0, 2_000).unwrap();
    assert!(rep.holds(), "{rep:?}");
    assert_eq!(rep.violations, 0);
    assert_eq!(rep.triangle_violations, 0);
}

#[test]
fn cover_input_checks() {
    let sp = build_weighted_interval(&[0.0, 1.0], &[1.0], 100).unwrap();
    let (u, om) = masks(&sp, (0.3, 0.7), (0.1, 0.9));
    assert!(build_cover(&sp, &om, &u, 0.001).is_err());
    assert!(build_cover(&sp, &[false; 100], &om, 0.001).is_err());
    assert!(build_cover(&sp, &u[..50], &om, 0.001).is_err());
}
