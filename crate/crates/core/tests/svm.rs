mod common;

use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use gaitsvm::svm::{
    load_model, read_model, save_model, smo_train, train_ovo, write_model, KernelParams, ModelIoError, SvmError,
    TrainConfig,
};
use gaitsvm::{FeatureVector, GaitPhase, N_FEATURES};

use common::*;

fn kernel() -> KernelParams {
    KernelParams::fine_gaussian(N_FEATURES)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_matrix_is_symmetric_psd_with_unit_diagonal(seed in any::<u64>(), n in 2usize..25, gamma in 0.01f64..10.0) {
        let mut r = rng(seed);
        let x: Vec<FeatureVector> = (0..n).map(|_| random_vector(&mut r, 3.0)).collect();
        let k = KernelParams::rbf(gamma).unwrap();
        let g = gram(&x, &k);
        for i in 0..n {
            prop_assert_eq!(g[(i, i)], 1.0);
            prop_assert_eq!(k.eval(&x[i], &x[i]), 1.0);
            for j in 0..n {
                prop_assert_eq!(g[(i, j)], g[(j, i)]);
                prop_assert!((k.eval(&x[i], &x[j]) - g[(i, j)]).abs() < 1e-15);
                prop_assert!(g[(i, j)] >= 0.0 && g[(i, j)] <= 1.0);
            }
        }
        let eig = SymmetricEigen::new(g);
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
    }

    #[test]
    fn smo_matches_oracle_on_random_small_problems(seed in any::<u64>(), n in 2usize..=6, c in 0.05f64..20.0) {
        let mut r = rng(seed);
        let (x, y) = random_binary_problem(&mut r, n);
        let cfg = TrainConfig { c, kkt_tol: 1e-9, eps_alpha: 1e-15, max_passes: 10_000, ..TrainConfig::default() };
        let fit = smo_train(&x, &y, &kernel(), &cfg).unwrap();
        prop_assert!(fit.converged);
        let oracle = brute_force_dual(&x, &y, &kernel(), c);
        prop_assert!((fit.dual_objective - oracle.objective).abs() <= 1e-6);
        prop_assert!((fit.dual_objective - dual_value(&gram(&x, &kernel()), &y, &fit.alphas)).abs() <= 1e-9);
    }

    #[test]
    fn flipping_labels_negates_the_decision_function(seed in any::<u64>(), n in 10usize..40) {
        let mut r = rng(seed);
        let (x, y) = overlapping_binary(&mut r, n, 1.0);
        let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
        let cfg = TrainConfig { kkt_tol: 1e-6, ..TrainConfig::default() };
        let a = smo_train(&x, &y, &kernel(), &cfg).unwrap();
        let b = smo_train(&x, &flipped, &kernel(), &cfg).unwrap();
        prop_assert!((a.dual_objective - b.dual_objective).abs() < 1e-6);
        for _ in 0..10 {
            let p = random_vector(&mut r, 2.0);
            prop_assert!((a.model.decision_value(&p) + b.model.decision_value(&p)).abs() < 1e-4);
        }
    }
}

#[test]
fn two_point_problem_has_closed_form_solution() {
    let x = [FeatureVector([0.0; 5]), FeatureVector([1.0, 0.0, 0.0, 0.0, 0.0])];
    let y = [1.0, -1.0];
    let k = KernelParams::rbf(2.0).unwrap();
    let k12 = (-2.0f64).exp();
    let alpha = 1.0 / (1.0 - k12);
    for c in [0.5, 1.0, alpha * 0.99, alpha * 1.01, 10.0] {
        let cfg = TrainConfig {
            c,
            kkt_tol: 1e-10,
            eps_alpha: 1e-15,
            ..TrainConfig::default()
        };
        let fit = smo_train(&x, &y, &k, &cfg).unwrap();
        let want = alpha.min(c);
        assert!((fit.alphas[0] - want).abs() < 1e-9, "C={c}: {:?}", fit.alphas);
        assert!((fit.alphas[1] - want).abs() < 1e-9);
        assert!(fit.model.bias.abs() < 1e-9);
    }
}

#[test]
fn binary_training_rejects_bad_input() {
    let x = [FeatureVector([0.0; 5]), FeatureVector([1.0; 5])];
    let cfg = TrainConfig::default();
    assert_eq!(smo_train(&x, &[1.0, 1.0], &kernel(), &cfg).unwrap_err(), SvmError::SingleClass);
    assert_eq!(
        smo_train(&x, &[1.0, 0.0], &kernel(), &cfg).unwrap_err(),
        SvmError::InvalidLabel(0.0)
    );
    assert!(matches!(
        smo_train(&x, &[1.0], &kernel(), &cfg).unwrap_err(),
        SvmError::LengthMismatch { rows: 2, labels: 1 }
    ));
    let bad = TrainConfig { c: 0.0, ..cfg };
    assert!(matches!(smo_train(&x, &[1.0, -1.0], &kernel(), &bad).unwrap_err(), SvmError::BadParam(_)));
}

#[test]
fn ovo_separates_well_spaced_clusters() {
    let data = separable_clusters(1, 15);
    let fit = train_ovo(&data, &kernel(), &TrainConfig::default()).unwrap();
    assert!(fit.all_converged());
    assert_eq!(fit.model.classifiers().len(), 21);
    for row in &data.rows {
        let p = fit.model.predict(&row.features);
        assert_eq!(p.phase, row.phase);
        assert_eq!(p.votes[row.phase.index()], 6, "winner takes every duel");
        assert_eq!(p.votes.iter().sum::<u32>(), 21);
    }
}

#[test]
fn missing_phase_is_reported() {
    let mut data = separable_clusters(2, 5);
    data.rows.retain(|r| r.phase != GaitPhase::TerminalStance);
    assert_eq!(
        train_ovo(&data, &kernel(), &TrainConfig::default()).unwrap_err(),
        SvmError::MissingPhase(GaitPhase::TerminalStance)
    );
}

#[test]
fn row_order_does_not_change_predictions() {
    let data = separable_clusters(3, 10);
    let mut shuffled = data.clone();
    shuffled.rows.shuffle(&mut rng(8));
    let cfg = TrainConfig {
        kkt_tol: 1e-8,
        eps_alpha: 1e-15,
        ..TrainConfig::default()
    };
    let a = train_ovo(&data, &kernel(), &cfg).unwrap().model;
    let b = train_ovo(&shuffled, &kernel(), &cfg).unwrap().model;
    let mut r = rng(9);
    for _ in 0..200 {
        let base = data.rows[r.random_range(0..data.len())].features;
        let probe = FeatureVector(std::array::from_fn(|k| base.0[k] + r.random_range(-3.0..3.0)));
        let (pa, pb) = (a.predict(&probe), b.predict(&probe));
        assert_eq!(pa.phase, pb.phase);
        for (x, y) in pa.scores.iter().zip(&pb.scores) {
            assert!((x - y).abs() < 1e-5);
        }
    }
}

#[test]
fn saved_models_reload_exactly() {
    let data = separable_clusters(4, 8);
    let model = train_ovo(&data, &kernel(), &TrainConfig::default()).unwrap().model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let mut r = rng(10);
    for _ in 0..100 {
        let probe = random_vector(&mut r, 40.0);
        let (a, b) = (model.predict(&probe), loaded.predict(&probe));
        assert_eq!(a.phase, b.phase);
        assert_eq!(a.votes, b.votes);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    write_model(&mut first, &model).unwrap();
    write_model(&mut second, &loaded).unwrap();
    assert_eq!(first, second, "a reloaded model saves to the same bytes");
}

#[test]
fn damaged_model_files_are_rejected() {
    let data = separable_clusters(5, 6);
    let model = train_ovo(&data, &kernel(), &TrainConfig::default()).unwrap().model;
    let mut buf = Vec::new();
    write_model(&mut buf, &model).unwrap();
    let text = String::from_utf8(buf).unwrap();

    let truncated = &text[..text.len() / 2];
    assert!(matches!(read_model(truncated.as_bytes()), Err(ModelIoError::CorruptSection(_))));

    let future = text.replacen("GAITSVM v1", "GAITSVM v999", 1);
    assert!(matches!(
        read_model(future.as_bytes()),
        Err(ModelIoError::FormatVersionMismatch(h)) if h == "GAITSVM v999"
    ));

    assert!(matches!(read_model(&b""[..]), Err(ModelIoError::FormatVersionMismatch(_) | ModelIoError::CorruptSection(_))));
    let missing = std::path::Path::new("/nonexistent/model.txt");
    assert!(matches!(load_model(missing), Err(ModelIoError::Io(_))));
}
