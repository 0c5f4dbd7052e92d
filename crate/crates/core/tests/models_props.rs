use jlnet::models::{
    circular_convolution, convolution_from_outer, empirical_inverse_lipschitz, incoherence, outer,
    sample_deconv, sample_lowrank_masked, sample_sparse, singular_values, InverseProblemSample,
    MaskSpec, ModelSet,
};
use jlnet::Exec;
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outer_product_determines_the_convolution(
        x in prop::collection::vec(-2.0..2.0f64, 1..12),
        seed in any::<u64>(),
        alpha in 0.1..10.0f64,
    ) {
        let n = x.len();
        let k: Vec<f64> = (0..n).map(|i| ((seed % 97) as f64 + i as f64).sin()).collect();
        let y = circular_convolution(&x, &k).unwrap();
        prop_assert!(close(&convolution_from_outer(&outer(&x, &k), n), &y, 1e-12));
        prop_assert!(close(&circular_convolution(&k, &x).unwrap(), &y, 1e-12));
        // (x, k) ↦ (αx, k/α) leaves the target unchanged
        let xs: Vec<f64> = x.iter().map(|v| v * alpha).collect();
        let ks: Vec<f64> = k.iter().map(|v| v / alpha).collect();
        prop_assert!(close(&outer(&xs, &ks), &outer(&x, &k), 1e-12));
    }

    #[test]
    fn rank_one_incoherence_matches_closed_form(
        a in prop::collection::vec(-2.0..2.0f64, 2..6),
        b in prop::collection::vec(-2.0..2.0f64, 2..6),
    ) {
        let na: f64 = a.iter().map(|v| v * v).sum();
        let nb: f64 = b.iter().map(|v| v * v).sum();
        prop_assume!(na > 1e-2 && nb > 1e-2);
        let (m, n) = (a.len(), b.len());
        let x = outer(&a, &b);
        let inc = incoherence(m, n, 1, &x).unwrap();
        let ma = a.iter().map(|v| v * v).fold(0.0, f64::max);
        let mb = b.iter().map(|v| v * v).fold(0.0, f64::max);
        let mu0 = (m as f64 * ma / na).max(n as f64 * mb / nb);
        let mu1 = (m * n) as f64 * ma * mb / (na * nb);
        prop_assert!((inc.mu0 - mu0).abs() < 1e-9 * mu0);
        prop_assert!((inc.mu1 - mu1).abs() < 1e-9 * mu1);
        let s = singular_values(m, n, &x);
        prop_assert!((s[0] - (na * nb).sqrt()).abs() < 1e-9 * s[0]);
        prop_assert!(s[1..].iter().all(|v| *v < 1e-9 * s[0]));
    }
}

#[test]
fn sets_regenerate_from_seed() {
    let a = sample_sparse(20, 2, 8, 50, 3, Exec::Sequential).unwrap();
    assert_eq!(a, sample_sparse(20, 2, 8, 50, 3, Exec::Parallel).unwrap());
    assert_ne!(a, sample_sparse(20, 2, 8, 50, 4, Exec::Sequential).unwrap());
    let d = sample_deconv(16, 2, 3, 20, 1, Exec::Sequential).unwrap();
    assert_eq!(d, sample_deconv(16, 2, 3, 20, 1, Exec::Parallel).unwrap());
    let l = sample_lowrank_masked(5, 5, 2, 20, 20, 2, None, Exec::Sequential).unwrap();
    assert_eq!(
        l,
        sample_lowrank_masked(5, 5, 2, 20, 20, 2, None, Exec::Parallel).unwrap()
    );
}

#[test]
fn sparse_samples_follow_the_model() {
    let set = sample_sparse(30, 3, 10, 100, 8, Exec::auto()).unwrap();
    for s in &set.samples {
        assert!(s.x.iter().filter(|v| **v != 0.0).count() <= 3);
        assert!(close(&set.forward(&s.x), &s.y, 1e-12));
    }
    let back = ModelSet::from_json(&set.to_model_set().to_json()).unwrap();
    assert_eq!(back, set.to_model_set());
    let l = empirical_inverse_lipschitz(&set.samples, 10_000, 0, Exec::auto()).unwrap();
    assert!(l.is_finite() && l > 0.0);
}

#[test]
fn deconv_samples_follow_the_model() {
    let set = sample_deconv(16, 2, 2, 30, 5, Exec::auto()).unwrap();
    for s in &set.samples {
        assert!(close(&set.forward(&s.sample.x), &s.sample.y, 1e-12));
        assert_eq!(outer(&s.signal, &s.kernel), s.sample.x);
    }
}

#[test]
fn lowrank_samples_have_rank_r_and_honor_the_cap() {
    let set = sample_lowrank_masked(6, 5, 2, 15, 40, 9, Some(3.0), Exec::auto()).unwrap();
    assert_eq!(set.mask.omega.len(), 15);
    for (s, inc) in set.samples.iter().zip(&set.incoherence) {
        let sv = singular_values(6, 5, &s.x);
        assert!(sv[2] < 1e-9 * sv[0]);
        assert!(inc.mu0 <= 3.0);
        assert_eq!(inc, &incoherence(6, 5, 2, &s.x).unwrap());
        assert_eq!(set.forward(&s.x), s.y);
        assert_eq!(s.y.iter().filter(|v| **v != 0.0).count(), 15);
    }
    assert!(sample_lowrank_masked(6, 5, 2, 15, 5, 9, Some(0.5), Exec::auto()).is_err());
}

#[test]
fn masks_validate() {
    assert!(MaskSpec::new(2, 2, vec![(0, 0), (0, 0)]).is_err());
    assert!(MaskSpec::new(2, 2, vec![(2, 0)]).is_err());
    let m = MaskSpec::new(2, 2, vec![(1, 1), (0, 1)]).unwrap();
    assert_eq!(m.omega, vec![(0, 1), (1, 1)]);
    assert_eq!(m.project(&[1.0, 2.0, 3.0, 4.0]), vec![0.0, 2.0, 0.0, 4.0]);
}

#[test]
fn collisions_make_the_inverse_unbounded() {
    let s = |y: f64, x: f64| InverseProblemSample {
        y: vec![y],
        x: vec![x],
    };
    let samples = vec![s(0.0, 0.0), s(1.0, 2.0), s(1.0, 3.0)];
    let l = empirical_inverse_lipschitz(&samples, 100, 0, Exec::auto()).unwrap();
    assert_eq!(l, f64::INFINITY);
    let fine = vec![s(0.0, 0.0), s(1.0, 2.0), s(3.0, 3.0)];
    assert_eq!(
        empirical_inverse_lipschitz(&fine, 100, 0, Exec::auto()).unwrap(),
        2.0
    );
}
