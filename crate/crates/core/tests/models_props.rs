use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use warmth::fusion::{concat, standardize};
use warmth::matrix::FeatureMatrix;
use warmth::models::{self, linsvc, ClassifierKind, ClassifierSpec, Dense, TrainedModel};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i:03}")).collect()
}

fn names(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|j| format!("{prefix}{j}")).collect()
}

/// Three Gaussian blobs in `d` dimensions.
fn blobs(n: usize, d: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        let c = i % 3;
        y.push(c);
        for j in 0..d {
            let centre = if j % 3 == c { 1.5 } else { 0.0 };
            values.push(centre + r.gen_range(-1.0..1.0));
        }
    }
    (FeatureMatrix::new(ids(n), names("f", d), values).unwrap(), y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concat_is_bit_exact(n in 1usize..12, da in 0usize..5, dt in 0usize..5, seed in 0u64..500) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut gen = |d: usize| -> Vec<f64> { (0..n * d).map(|_| r.gen_range(-1e6..1e6)).collect() };
        let ac = FeatureMatrix::new(ids(n), names("a", da), gen(da)).unwrap();
        // Text rows arrive in reverse order.
        let tx_vals = gen(dt);
        let mut rev_ids = ids(n);
        rev_ids.reverse();
        let tx = FeatureMatrix::new(rev_ids, names("t", dt), tx_vals).unwrap();
        let f = concat(&ac, &tx).unwrap();
        prop_assert_eq!(f.n_cols(), da + dt);
        prop_assert_eq!(f.sample_ids(), ac.sample_ids());
        for i in 0..n {
            prop_assert_eq!(&f.row(i)[..da], ac.row(i));
            prop_assert_eq!(&f.row(i)[da..], tx.row(n - 1 - i));
        }
        prop_assert!(f.feature_names().iter().take(da).all(|s| s.starts_with("ac:")));
        prop_assert!(f.feature_names().iter().skip(da).all(|s| s.starts_with("tx:")));
    }

    #[test]
    fn standardized_training_columns_have_unit_scale(
        n in 2usize..40, d in 1usize..6, seed in 0u64..500, shift in -1e3f64..1e3, scale in 1e-3f64..1e3,
    ) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n * d).map(|_| shift + scale * r.gen_range(-1.0..1.0)).collect();
        let m = FeatureMatrix::new(ids(n), names("f", d), values).unwrap();
        let train: Vec<usize> = (0..n).filter(|i| i % 4 != 3).collect();
        prop_assume!(train.len() >= 2);
        let z = standardize(&m, &train).unwrap();
        for j in 0..d {
            let col: Vec<f64> = train.iter().map(|&i| z.get(i, j)).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            prop_assert!(mean.abs() <= 1e-9, "mean {}", mean);
            prop_assert!((sd - 1.0).abs() <= 1e-9, "std {}", sd);
        }
    }
}

#[test]
fn constant_columns_pass_through() {
    let m = FeatureMatrix::new(ids(3), names("f", 2), vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0]).unwrap();
    let z = standardize(&m, &[0, 1, 2]).unwrap();
    assert_eq!(z.column(0), vec![5.0; 3]);
}

#[test]
fn every_kind_is_deterministic_and_learns() {
    let (x, y) = blobs(90, 6, 1);
    let (xt, yt) = blobs(60, 6, 2);
    for kind in ClassifierKind::ALL {
        let spec = ClassifierSpec::new(kind, 11);
        let a = models::train(&spec, &x, &y).unwrap();
        let b = models::train(&spec, &x, &y).unwrap();
        assert_eq!(a, b, "{kind:?}");
        let pa = a.predict(&xt).unwrap();
        assert_eq!(pa, b.predict(&xt).unwrap());
        let acc = pa.iter().zip(&yt).filter(|(p, t)| p == t).count() as f64 / yt.len() as f64;
        assert!(acc > 0.7, "{kind:?} accuracy {acc}");
        let scores = a.decision_scores(&xt).unwrap();
        assert!(scores.iter().all(|r| r.len() == 3 && r.iter().all(|v| v.is_finite())));
    }
}

#[test]
fn saved_models_predict_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = blobs(60, 4, 5);
    let (xt, _) = blobs(30, 4, 6);
    for kind in ClassifierKind::ALL {
        let m = models::train(&ClassifierSpec::new(kind, 3), &x, &y).unwrap();
        let p = dir.path().join(format!("{}.json", kind.name()));
        m.save(&p).unwrap();
        let back = TrainedModel::load(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.decision_scores(&xt).unwrap(), m.decision_scores(&xt).unwrap());
    }
}

#[test]
fn linsvc_one_vs_rest_columns_are_independent() {
    let (x, y) = blobs(45, 5, 9);
    let dense = Dense::from(&x);
    let base = linsvc::fit(dense, &y, 3, 1.0, 1e-4, 1000, 0);
    // Flipping one binary problem's labels (same seed) negates its
    // hyperplane and nothing else.
    let flip = linsvc::fit_binary(
        dense,
        &y.iter().map(|&l| l != 1).collect::<Vec<_>>(),
        1.0,
        1e-4,
        1000,
        1,
    );
    let d = x.n_cols();
    for j in 0..d {
        assert!(
            (flip.weights[j] + base.weights[d + j]).abs() <= 1e-6,
            "feature {j}: {} vs {}",
            flip.weights[j],
            base.weights[d + j]
        );
    }
    assert!((flip.bias + base.bias[1]).abs() <= 1e-6);
    // The other columns depend only on their own binary problem.
    for k in [0usize, 2] {
        let own = linsvc::fit_binary(
            dense,
            &y.iter().map(|&l| l == k).collect::<Vec<_>>(),
            1.0,
            1e-4,
            1000,
            k as u64,
        );
        assert_eq!(&base.weights[k * d..(k + 1) * d], &own.weights[..]);
        assert_eq!(base.bias[k], own.bias);
    }
}

#[test]
fn knn_ignores_training_row_order() {
    let (x, y) = blobs(40, 3, 12);
    let (xt, _) = blobs(25, 3, 13);
    let spec = ClassifierSpec::new(ClassifierKind::Knn, 0);
    let base = models::train(&spec, &x, &y).unwrap().predict(&xt).unwrap();
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    order.reverse();
    order.rotate_left(7);
    let px = x.select_rows(&order);
    let py: Vec<usize> = order.iter().map(|&i| y[i]).collect();
    let perm = models::train(&spec, &px, &py).unwrap().predict(&xt).unwrap();
    assert_eq!(base, perm);
}

#[test]
fn predict_matches_argmax_of_scores() {
    let (x, y) = blobs(60, 4, 21);
    let (xt, _) = blobs(40, 4, 22);
    for kind in [ClassifierKind::Logreg, ClassifierKind::Linsvc, ClassifierKind::Rforest] {
        let m = models::train(&ClassifierSpec::new(kind, 0), &x, &y).unwrap();
        let pred = m.predict(&xt).unwrap();
        let scores = m.decision_scores(&xt).unwrap();
        for (p, s) in pred.iter().zip(&scores) {
            assert_eq!(m.classes[models::argmax(s)], *p, "{kind:?}");
        }
    }
}
