use jlnet::domain::PointCloud;
use jlnet::jl::{
    build_jl_prefix, circulant_alpha, distortion_audit, gen_circulant, gen_gaussian,
    infinity_radius, net_to_set_distortion, op_norm, required_dim_finite, required_dim_set, JlMap,
    OP_NORM_ITERS, OP_NORM_TOL,
};
use jlnet::Exec;
use proptest::prelude::*;

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn matvec(a: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    a.chunks(cols)
        .map(|r| r.iter().zip(x).map(|(u, v)| u * v).sum())
        .collect()
}

fn make(circulant: bool, d: usize, big_d: usize, seed: u64) -> JlMap {
    if circulant {
        gen_circulant(d, big_d, seed).unwrap()
    } else {
        gen_gaussian(d, big_d, seed, Exec::Sequential).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_matches_materialized(
        circ in any::<bool>(),
        (big_d, d) in (1usize..24).prop_flat_map(|n| (Just(n), 1..=n)),
        seed in any::<u64>(),
        x in prop::collection::vec(-5.0..5.0f64, 24),
        y in prop::collection::vec(-5.0..5.0f64, 24),
    ) {
        let a = make(circ, d, big_d, seed);
        let mat = a.materialize();
        let (x, y) = (&x[..big_d], &y[..d]);
        let ax = a.apply(x).unwrap();
        for (u, v) in ax.iter().zip(matvec(&mat, big_d, x)) {
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + v.abs()));
        }
        let lhs: f64 = ax.iter().zip(y).map(|(u, v)| u * v).sum();
        let rhs: f64 = a.apply_transpose(y).unwrap().iter().zip(x).map(|(u, v)| u * v).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        let back = JlMap::deserialize(&a.serialize().unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn prefix_computes_the_map(
        circ in any::<bool>(),
        (big_d, d) in (1usize..16).prop_flat_map(|n| (Just(n), 1..=n)),
        seed in any::<u64>(),
        x in prop::collection::vec(-2.0..=2.0f64, 16),
    ) {
        let a = make(circ, d, big_d, seed);
        let x = &x[..big_d];
        let net = build_jl_prefix(&a, 2.0).unwrap();
        let want = a.apply(x).unwrap();
        for (u, v) in net.evaluate(x).unwrap().iter().zip(&want) {
            prop_assert!((u - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn net_to_set_is_monotone(r in 0.0..1.0f64, n in 0.0..5.0f64, d in 0.0..1.0f64, dr in 0.0..1.0f64, dn in 0.0..1.0f64, dd in 0.0..1.0f64) {
        let base = net_to_set_distortion(r, n, d).unwrap();
        prop_assert!(net_to_set_distortion(r + dr, n, d).unwrap() >= base);
        prop_assert!(net_to_set_distortion(r, n + dn, d).unwrap() >= base);
        prop_assert!(net_to_set_distortion(r, n, d + dd).unwrap() >= base);
    }

    #[test]
    fn required_dims_are_monotone(rho in 0.05..0.45f64, n in 1.0..1e6f64, beta in 0.01..0.5f64, lc in 0.0..50.0f64, big_d in 1usize..10_000) {
        let base = required_dim_finite(rho, n, beta, 1.0).unwrap();
        prop_assert!(required_dim_finite(rho * 0.9, n, beta, 1.0).unwrap() >= base);
        prop_assert!(required_dim_finite(rho, n * 2.0, beta, 1.0).unwrap() >= base);
        prop_assert!(required_dim_finite(rho, n, beta * 0.5, 1.0).unwrap() >= base);

        let plain = required_dim_set(rho, lc, big_d, false, 1.0).unwrap();
        prop_assert!(required_dim_set(rho * 0.9, lc, big_d, false, 1.0).unwrap() >= plain);
        prop_assert!(required_dim_set(rho, lc + 1.0, big_d, false, 1.0).unwrap() >= plain);
        let circ = required_dim_set(rho, lc, big_d, true, 1.0).unwrap();
        prop_assert!(circ >= plain);
        // least fixed point of d ≥ k·ln(4D + 4d)
        let k = lc / (rho * rho);
        let need = |d: usize| k * (4.0 * (big_d + d) as f64).ln();
        prop_assert!(circ as f64 >= need(circ) * (1.0 - 1e-9));
        if circ > 1 {
            prop_assert!(((circ - 1) as f64) < need(circ - 1) * (1.0 + 1e-9));
        }
    }
}

#[test]
fn gaussian_columns_have_unit_mean_square() {
    let (d, big_d) = (200, 300);
    let a = gen_gaussian(d, big_d, 7, Exec::auto()).unwrap();
    let mat = a.materialize();
    let mean = (0..big_d)
        .map(|j| (0..d).map(|i| mat[i * big_d + j].powi(2)).sum::<f64>())
        .sum::<f64>()
        / big_d as f64;
    // each column is χ²₂₀₀/200 with sd 0.1; the mean of 300 has sd ≈ 0.006
    assert!((mean - 1.0).abs() < 0.03, "{mean}");
}

#[test]
fn maps_are_isotropic_on_average() {
    let (d, big_d) = (8, 32);
    let x: Vec<f64> = (0..big_d)
        .map(|i| ((i * 5 % 7) as f64 - 3.0) / 4.0)
        .collect();
    let nx = sq(&x);
    for circ in [false, true] {
        let trials = if circ { 10_000 } else { 4_000 };
        let (mut s, mut s2, mut fro) = (0.0, 0.0, 0.0);
        for seed in 0..trials {
            let a = make(circ, d, big_d, seed);
            let r = sq(&a.apply(&x).unwrap()) / nx;
            s += r;
            s2 += r * r;
            fro += op_norm(&a, 1, 1.0).unwrap().frobenius.powi(2);
        }
        let t = trials as f64;
        let mean = s / t;
        let se = ((s2 / t - mean * mean) / t).sqrt();
        assert!(
            (mean - 1.0).abs() < 4.0 * se,
            "circulant={circ}: {mean} ± {se}"
        );
        let fro = fro / t;
        assert!(
            (fro / big_d as f64 - 1.0).abs() < 0.02,
            "circulant={circ}: {fro}"
        );
    }
}

#[test]
fn identity_has_no_distortion() {
    let pts: Vec<Vec<f64>> = (0..20)
        .map(|i| vec![i as f64, (i * i) as f64 * 0.1, -1.0])
        .collect();
    let cloud = PointCloud::new(3, pts, 0).unwrap();
    let a = JlMap::identity(3).unwrap();
    let audit = distortion_audit(&a, &cloud, 1000, 0, Exec::auto()).unwrap();
    assert!(audit.exhaustive);
    assert_eq!(audit.pairs_checked, 190);
    assert!(audit.distortion() < 1e-12);
    assert_eq!(
        infinity_radius(&a, &cloud, Exec::auto()).unwrap(),
        19.0 * 19.0 * 0.1
    );
    let n = op_norm(&a, OP_NORM_ITERS, OP_NORM_TOL).unwrap();
    assert!((n.spectral_lower - 1.0).abs() < 1e-9);
    assert!((n.frobenius - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn spectral_norm_is_bracketed() {
    for seed in 0..5 {
        let a = gen_gaussian(10, 40, seed, Exec::auto()).unwrap();
        let n = op_norm(&a, OP_NORM_ITERS, OP_NORM_TOL).unwrap();
        let mat = a.materialize();
        let max_col = (0..40)
            .map(|j| (0..10).map(|i| mat[i * 40 + j].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        assert!(n.spectral_lower >= max_col * (1.0 - 1e-6));
        assert!(n.spectral_lower <= n.frobenius);
    }
}

#[test]
fn sampled_audit_is_seeded() {
    let pts: Vec<Vec<f64>> = (0..200)
        .map(|i| (0..16).map(|j| ((i * 16 + j) as f64).sin()).collect())
        .collect();
    let cloud = PointCloud::new(16, pts, 0).unwrap();
    let a = gen_gaussian(8, 16, 3, Exec::auto()).unwrap();
    let one = distortion_audit(&a, &cloud, 500, 9, Exec::Sequential).unwrap();
    let two = distortion_audit(&a, &cloud, 500, 9, Exec::Parallel).unwrap();
    assert!(!one.exhaustive);
    assert_eq!(one, two);
}

#[test]
fn circulant_alpha_flags_small_sets() {
    let small = circulant_alpha(0.0, 64, 8).unwrap();
    assert!(!small.well_defined);
    assert_eq!(small.alpha, 0.0);
    let big = circulant_alpha(20.0, 64, 8).unwrap();
    let want = (2f64.ln() + 20.0).ln() / (4.0 * 72.0f64).ln().ln();
    assert!(big.well_defined && (big.alpha - want).abs() < 1e-15);
}

#[test]
fn finite_dimension_example() {
    // ⌈ρ⁻² ln(n/β)⌉ with n/β = e¹⁰⁰ and ρ = 0.1
    assert_eq!(
        required_dim_finite(0.1, 100f64.exp() * 0.5, 0.5, 1.0).unwrap(),
        10_000
    );
    assert!(required_dim_finite(0.5, 10.0, 0.1, 1.0).is_err());
}
