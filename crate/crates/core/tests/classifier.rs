use foliate::generate::icosphere;
use foliate::svm::{baseline_features, cross_validate, train, Baseline, ClassifyError, Dataset, DEFAULT_FOLD_SEED};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn blobs(per_class: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (class, centre) in [(0u8, 0.0), (1, 3.0)] {
        for _ in 0..per_class {
            x.push(vec![centre + noise.sample(&mut rng), centre + noise.sample(&mut rng)]);
            y.push(class);
        }
    }
    Dataset::new(x, y).unwrap()
}

/// Best training accuracy of any line `cos(a) x + sin(a) y = c`, either
/// side labelled 1, over a fine grid of directions and every useful offset.
fn best_linear_accuracy(data: &Dataset) -> f64 {
    let n = data.len() as f64;
    let mut best: f64 = 0.0;
    for k in 0..3600 {
        let a = std::f64::consts::PI * k as f64 / 3600.0;
        let mut proj: Vec<(f64, u8)> = data.x.iter().zip(&data.y).map(|(r, &y)| (a.cos() * r[0] + a.sin() * r[1], y)).collect();
        proj.sort_by(|p, q| p.0.total_cmp(&q.0));
        // Threshold below index i: everything from i on is predicted 1.
        let ones_total = proj.iter().filter(|p| p.1 == 1).count();
        let mut zeros_below = 0;
        let mut ones_below = 0;
        for i in 0..=proj.len() {
            let hits = zeros_below + (ones_total - ones_below);
            best = best.max(hits as f64 / n).max((n - hits as f64) / n);
            if i < proj.len() {
                if proj[i].1 == 0 {
                    zeros_below += 1;
                } else {
                    ones_below += 1;
                }
            }
        }
    }
    best
}

#[test]
fn blobs_match_brute_force_separator() {
    let data = blobs(50, 42);
    let oracle = best_linear_accuracy(&data);
    let model = train(&data, 1.0).unwrap();
    let acc = model.accuracy(&data);
    assert!(acc >= 0.98, "{acc}");
    assert!(acc >= oracle - 0.02, "svm {acc} vs best line {oracle}");
    assert!(model.duality_gap.abs() < 1e-6, "gap {}", model.duality_gap);
}

#[test]
fn blobs_cross_validate_perfectly() {
    let cv = cross_validate(&blobs(30, 42), 10, 1.0, DEFAULT_FOLD_SEED).unwrap();
    assert_eq!(cv.accuracy, 1.0);
    assert_eq!(cv.fold_accuracies.len(), 10);
}

#[test]
fn permuted_labels_sit_at_chance() {
    let mut data = blobs(30, 42);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    data.y.shuffle(&mut rng);
    let cv = cross_validate(&data, 10, 1.0, DEFAULT_FOLD_SEED).unwrap();
    assert!((0.3..=0.7).contains(&cv.accuracy), "{}", cv.accuracy);
}

#[test]
fn cross_validation_is_deterministic() {
    let data = blobs(20, 3);
    let a = cross_validate(&data, 5, 0.5, 11).unwrap();
    let b = cross_validate(&data, 5, 0.5, 11).unwrap();
    assert_eq!(a, b);
}

#[test]
fn area_baseline_of_icospheres() {
    let small = icosphere(1.0, 4).unwrap();
    let big = icosphere(1.2, 4).unwrap();
    let areas = baseline_features(&[&small, &big, &small], Baseline::Area).unwrap();
    let sphere = 4.0 * std::f64::consts::PI;
    assert!((areas[0] - sphere).abs() < 0.01 * sphere);
    assert!((areas[1] / areas[0] - 1.44).abs() < 1e-12);
    assert_eq!(areas[0], areas[2]);
    let curv = baseline_features(&[&small, &small], Baseline::MeanCurvature).unwrap();
    assert_eq!(curv[0], curv[1]);
    let empty = Dataset::new(vec![], vec![]).unwrap();
    assert_eq!(cross_validate(&empty, 10, 1.0, 1), Err(ClassifyError::TooFewRows { rows: 0, folds: 10 }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn standardization_is_consistent(seed in any::<u64>(), n in 4usize..30, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 2.0).unwrap();
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| normal.sample(&mut rng) + 5.0).collect()).collect();
        let mut y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        y.shuffle(&mut rng);
        let data = Dataset::new(x, y).unwrap();
        let m = train(&data, 1.0).unwrap();
        prop_assert!(m.duality_gap.abs() < 1e-6 * (1.0 + n as f64));
        for r in &data.x {
            let z = m.scaler.apply(r);
            prop_assert_eq!(m.predict(r), m.predict_standardized(&z));
            prop_assert_eq!(m.decision(r), m.decision_standardized(&z));
        }
    }
}
