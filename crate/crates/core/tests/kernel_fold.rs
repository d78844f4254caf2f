mod common;

use common::{eigenvalues, rng, unit_points};
use memsvm::crossbar::{CrossbarArray, ReadoutConfig};
use memsvm::data::Dataset;
use memsvm::device::DeviceParams;
use memsvm::svm::{
    argmax, synthesize_kernel, train_multiclass, FoldSource, TemplateBank, TemplateTrainOptions, TrainingPath,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn random_dataset(r: &mut rand_chacha::ChaCha8Rng, n: usize, d: usize, c: usize) -> Dataset {
    let x = unit_points(r, n, d);
    let labels: Vec<usize> = (0..n).map(|i| if i < c { i } else { r.random_range(0..c) }).collect();
    Dataset::new(x, labels, (0..c).map(|k| format!("c{k}")).collect()).unwrap()
}

fn random_bank(r: &mut rand_chacha::ChaCha8Rng, d: usize, p: usize) -> TemplateBank {
    let m = unit_points(r, d, p);
    if r.random::<bool>() {
        TemplateBank::ideal(m)
    } else {
        let params = DeviceParams {
            num_states: r.random_range(2..100),
            sigma_program: [0.0, 0.02][r.random_range(0..2)],
            ..DeviceParams::default()
        };
        TemplateBank::crossbar(CrossbarArray::program(m.view(), &params, r.random()).unwrap())
    }
}

#[test]
fn folded_scores_equal_support_vector_form() {
    let mut checked = 0;
    for seed in 0..120u64 {
        let mut r = rng(seed);
        let (n, d, p) = (r.random_range(4..=60), r.random_range(1..=8), r.random_range(1..=12));
        let c = if seed % 3 == 0 { 3 } else { 2 };
        let data = random_dataset(&mut r, n, d, c);
        let bank = random_bank(&mut r, d, p);
        let trained = train_multiclass(&data, &bank, &TemplateTrainOptions::default()).unwrap();
        let probe = unit_points(&mut r, 10, d);
        for x in probe.rows() {
            let scores = trained.model.predict(x).unwrap().scores;
            for (k, machine) in trained.machines.iter().enumerate() {
                let row = if c == 2 { 1 } else { k };
                let sv_form = machine.decision(x).unwrap();
                let folded = scores[row];
                let scale: f64 = 1.0 + sv_form.abs();
                assert!((sv_form - folded).abs() <= 1e-9 * scale, "seed {seed}: {sv_form} vs {folded}");
                if c == 2 {
                    assert!((scores[0] + folded).abs() <= 1e-12 * scale);
                }
            }
        }
        checked += 1;
    }
    assert!(checked >= 100);
}

#[test]
fn synthesized_gram_matrices_are_psd() {
    for seed in 0..50u64 {
        let mut r = rng(1000 + seed);
        let (n, d, p) = (r.random_range(2..=30), r.random_range(1..=10), r.random_range(1..=12));
        let x = unit_points(&mut r, n, d);
        let bank = random_bank(&mut r, d, p);
        let k = synthesize_kernel(x.view(), x.view(), &bank, ReadoutConfig::noiseless()).unwrap();
        let ev = eigenvalues(k.view());
        let (min, max) = (ev[0], ev[ev.len() - 1]);
        assert!(min >= -1e-8 * max.max(0.0), "seed {seed}: min eigenvalue {min}, max {max}");
    }
}

#[test]
fn direct_and_folded_paths_agree() {
    for seed in 0..20u64 {
        let mut r = rng(500 + seed);
        let (n, d, p) = (r.random_range(10..=50), r.random_range(2..=6), r.random_range(2..=10));
        let data = random_dataset(&mut r, n, d, 2 + (seed as usize % 2));
        let bank = TemplateBank::ideal(unit_points(&mut r, d, p));
        let mut opts = TemplateTrainOptions::default();
        opts.solver.tol = 1e-10;
        let folded = train_multiclass(&data, &bank, &opts).unwrap();
        opts.path = TrainingPath::Direct;
        let direct = train_multiclass(&data, &bank, &opts).unwrap();
        let probe = unit_points(&mut r, 20, d);
        for x in probe.rows() {
            let a = folded.model.predict(x).unwrap().scores;
            let b = direct.model.predict(x).unwrap().scores;
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-5 * (1.0 + u.abs()), "seed {seed}: {u} vs {v}");
            }
        }
    }
}

#[test]
fn ideal_fold_on_exact_templates_matches_calibrated() {
    let mut r = rng(3);
    let data = random_dataset(&mut r, 40, 3, 2);
    // Templates already on the ladder and no programming noise: the
    // crossbar reproduces them exactly.
    let params = DeviceParams::default();
    let ladder = memsvm::device::state_ladder(&params).unwrap();
    let m = Array2::from_shape_fn((3, 5), |_| ladder[r.random_range(0..ladder.len())]);
    let bank = TemplateBank::crossbar(CrossbarArray::program(m.view(), &params, 0).unwrap());
    let calibrated = train_multiclass(&data, &bank, &TemplateTrainOptions::default()).unwrap();
    let opts = TemplateTrainOptions {
        fold: FoldSource::Ideal,
        ..TemplateTrainOptions::default()
    };
    let ideal = train_multiclass(&data, &bank, &opts).unwrap();
    for (a, b) in calibrated.model.weights.iter().zip(ideal.model.weights.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn model_size_does_not_depend_on_training_size(n in 6usize..80, p in 1usize..12, seed in 0u64..1000) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, n, 3, 3);
        let bank = TemplateBank::ideal(unit_points(&mut r, 3, p));
        let model = train_multiclass(&data, &bank, &TemplateTrainOptions::default()).unwrap().model;
        prop_assert_eq!(model.weights.dim(), (3, p));
        prop_assert_eq!(model.biases.len(), 3);
        prop_assert_eq!(model.n_templates(), p);
    }

    #[test]
    fn argmax_ignores_positive_scaling_and_shift(
        scores in proptest::collection::vec(-100.0f64..100.0, 1..12),
        a in 0.01f64..100.0,
        b in -50.0f64..50.0,
    ) {
        let moved: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let k = argmax(&scores);
        let j = argmax(&moved);
        // Rounding may merge near-ties; the winner must still be a maximum.
        prop_assert!(moved[k] >= moved[j] - 1e-9 * (1.0 + moved[j].abs()));
        prop_assert!(scores.iter().all(|&s| s <= scores[k]));
    }

    #[test]
    fn model_json_round_trip_preserves_predictions(seed in 0u64..200) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, 30, 4, 2);
        let bank = random_bank(&mut r, 4, 6);
        let model = train_multiclass(&data, &bank, &TemplateTrainOptions::default()).unwrap().model;
        let back = memsvm::svm::TemplateSvmModel::from_json(&model.to_json().unwrap()).unwrap();
        let probe = unit_points(&mut r, 15, 4);
        prop_assert_eq!(model.predict_rows(probe.view(), 1).unwrap(), back.predict_rows(probe.view(), 1).unwrap());
    }
}
