//! Property suites: oracle cross-checks and structural invariants that
//! must hold with no dataset present.

use proptest::prelude::*;

use idsbench_core::learners::tree::{
    best_split, GiniCriterion, NewtonCriterion, SplitConstraints, SplitDecision,
};
use idsbench_core::learners::{glm, mlp, MlpModel};
use idsbench_core::matrix::Matrix;
use idsbench_core::metrics::{auc, auc_pairwise_oracle, roc_points};
use idsbench_core::preprocess::{kfold, stratified_split, undersample, SamplerConfig};
use idsbench_core::rng::Rng;

/// Scores with ties (quantized) plus labels guaranteed to carry both classes.
fn scored_labels(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2..=max_len).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..=20, n),
            prop::collection::vec(any::<bool>(), n),
            0..n,
            0..n,
        )
            .prop_map(|(quants, flags, i, j)| {
                let scores: Vec<f64> = quants.iter().map(|&q| f64::from(q) / 20.0).collect();
                let mut labels: Vec<u8> = flags.iter().map(|&f| u8::from(f)).collect();
                // Force both classes to be present at two distinct rows.
                let n = labels.len();
                let pos = i % n;
                let neg = (pos + 1 + (j % (n - 1))) % n;
                labels[pos] = 1;
                labels[neg] = 0;
                (scores, labels)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn auc_rank_equals_pairwise_oracle((scores, labels) in scored_labels(200)) {
        let fast = auc(&scores, &labels).unwrap();
        let slow = auc_pairwise_oracle(&scores, &labels).unwrap();
        prop_assert!((fast - slow).abs() < 1e-12, "rank {fast} vs pairwise {slow}");
    }

    #[test]
    fn auc_is_invariant_under_increasing_transforms((scores, labels) in scored_labels(100)) {
        let base = auc(&scores, &labels).unwrap();
        let exp_scores: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let affine_scores: Vec<f64> = scores.iter().map(|s| 3.5 * s + 0.25).collect();
        prop_assert!((auc(&exp_scores, &labels).unwrap() - base).abs() < 1e-12);
        prop_assert!((auc(&affine_scores, &labels).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn auc_of_flipped_labels_complements(seed in any::<u64>(), n in 2usize..80) {
        // Tie-free scores by construction.
        let mut rng = Rng::new(seed);
        let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        rng.shuffle(&mut scores);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(2) as u8).collect();
        labels[0] = 1;
        labels[n - 1] = 0;
        let flipped: Vec<u8> = labels.iter().map(|&y| 1 - y).collect();
        let a = auc(&scores, &labels).unwrap();
        let b = auc(&scores, &flipped).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12, "{a} + {b} != 1");
    }

    #[test]
    fn roc_area_equals_auc_and_curve_is_monotone((scores, labels) in scored_labels(150)) {
        let curve = roc_points(&scores, &labels).unwrap();
        let area = curve.trapezoid_area();
        let reference = auc(&scores, &labels).unwrap();
        prop_assert!((area - reference).abs() < 1e-12, "area {area} vs auc {reference}");
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn folds_partition_and_stratify(seed in any::<u64>(), n in 10usize..200, k in 2usize..8) {
        let mut rng = Rng::new(seed);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(2) as u8).collect();
        for i in 0..(k + 1).min(n) {
            labels[i] = (i % 2) as u8;
        }
        let folds = kfold(&labels, k, seed).unwrap();
        // Disjoint and exhaustive.
        let mut seen = vec![0u8; n];
        for f in 0..k as u32 {
            for row in folds.fold_rows(f) {
                seen[row] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        // Per-fold class counts within one of each other.
        for class in [0u8, 1u8] {
            let counts: Vec<i64> = (0..k as u32)
                .map(|f| folds.fold_rows(f).iter().filter(|&&r| labels[r] == class).count() as i64)
                .collect();
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            prop_assert!(max - min <= 1, "class {class}: {counts:?}");
        }
    }

    #[test]
    fn undersampling_balances_exactly(seed in any::<u64>(), n in 4usize..300) {
        let mut rng = Rng::new(seed.wrapping_add(1));
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_range(4) != 0)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let retained = undersample(&labels, &SamplerConfig { seed }).unwrap();
        let pos = retained.iter().filter(|&&i| labels[i] == 1).count();
        let neg = retained.len() - pos;
        let minority = labels.iter().filter(|&&y| y == 1).count()
            .min(labels.iter().filter(|&&y| y == 0).count());
        prop_assert_eq!(pos, minority);
        prop_assert_eq!(neg, minority);
        // No duplicates.
        let mut sorted = retained.clone();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), retained.len());
    }

    #[test]
    fn split_is_deterministic_and_stratified(seed in any::<u64>(), n in 10usize..200) {
        let mut rng = Rng::new(seed.wrapping_add(2));
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(2) as u8).collect();
        for i in 0..6.min(n) {
            labels[i] = (i % 2) as u8;
        }
        let fraction = 0.25;
        let a = stratified_split(&labels, fraction, seed).unwrap();
        let b = stratified_split(&labels, fraction, seed).unwrap();
        prop_assert_eq!(&a, &b);
        // Partition.
        let mut all: Vec<usize> = a.train_idx.iter().chain(a.test_idx.iter()).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        // Per-class test counts within one of fraction * class size.
        for class in [0u8, 1u8] {
            let class_size = labels.iter().filter(|&&y| y == class).count() as f64;
            let in_test = a.test_idx.iter().filter(|&&i| labels[i] == class).count() as f64;
            prop_assert!((in_test - fraction * class_size).abs() < 1.0);
        }
    }
}

/// Brute-force candidate enumeration sharing only the potential formulas
/// with the implementation under test.
fn enumerate_best<C: idsbench_core::learners::tree::Criterion>(
    x: &Matrix,
    rows: &[usize],
    criterion: &C,
    constraints: &SplitConstraints,
) -> Option<SplitDecision> {
    let potential = |subset: &[usize]| {
        let mut acc = C::Acc::default();
        for &r in subset {
            criterion.add(&mut acc, r);
        }
        (criterion.potential(&acc), criterion.count(&acc))
    };
    let (parent_potential, parent_count) = potential(rows);
    if parent_count < constraints.min_split || rows.len() < 2 {
        return None;
    }
    let mut best: Option<SplitDecision> = None;
    for f in 0..x.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let threshold = {
                let m = 0.5 * (w[0] + w[1]);
                if m > w[0] {
                    m
                } else {
                    w[1]
                }
            };
            let left: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| x.get(r, f) < threshold)
                .collect();
            let right: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| x.get(r, f) >= threshold)
                .collect();
            let (lp, lc) = potential(&left);
            let (rp, rc) = potential(&right);
            if lc < constraints.min_leaf || rc < constraints.min_leaf {
                continue;
            }
            let gain = lp + rp - parent_potential;
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitDecision {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn best_split_gini_matches_enumeration(
        cells in prop::collection::vec(0u8..6, 16),
        label_bits in prop::collection::vec(any::<bool>(), 8),
    ) {
        let x = Matrix::from_rows(
            (0..8).map(|i| vec![f64::from(cells[2 * i]), f64::from(cells[2 * i + 1])]).collect(),
        );
        let y: Vec<u8> = label_bits.iter().map(|&b| u8::from(b)).collect();
        let rows: Vec<usize> = (0..8).collect();
        let criterion = GiniCriterion { labels: &y, weights: None };
        let constraints = SplitConstraints { min_leaf: 1.0, min_split: 2.0 };
        let ours = best_split(&x, &rows, &[0, 1], &criterion, &constraints);
        let oracle = enumerate_best(&x, &rows, &criterion, &constraints);
        match (ours, oracle) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                prop_assert_eq!(a.feature, b.feature);
                prop_assert_eq!(a.threshold, b.threshold);
                prop_assert!((a.gain - b.gain).abs() < 1e-9);
            }
            (a, b) => prop_assert!(false, "scan {a:?} vs enumeration {b:?}"),
        }
    }

    #[test]
    fn best_split_newton_matches_enumeration(
        cells in prop::collection::vec(0u8..6, 16),
        grads in prop::collection::vec(-10i8..=10, 8),
    ) {
        let x = Matrix::from_rows(
            (0..8).map(|i| vec![f64::from(cells[2 * i]), f64::from(cells[2 * i + 1])]).collect(),
        );
        // Dyadic statistics: sums are exact in f64, so mathematically tied
        // gains are bit-identical in both implementations and tie-breaking
        // is well defined.
        let grad: Vec<f64> = grads.iter().map(|&g| f64::from(g) / 16.0).collect();
        let hess: Vec<f64> = grad.iter().map(|g| 1.0 - g.abs()).collect();
        let rows: Vec<usize> = (0..8).collect();
        let criterion = NewtonCriterion { grad: &grad, hess: &hess, lambda: 1.0 };
        let constraints = SplitConstraints { min_leaf: 1.0, min_split: 2.0 };
        let ours = best_split(&x, &rows, &[0, 1], &criterion, &constraints);
        let oracle = enumerate_best(&x, &rows, &criterion, &constraints);
        match (ours, oracle) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                prop_assert_eq!(a.feature, b.feature);
                prop_assert_eq!(a.threshold, b.threshold);
                prop_assert!((a.gain - b.gain).abs() < 1e-9);
            }
            (a, b) => prop_assert!(false, "scan {a:?} vs enumeration {b:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn glm_gradient_matches_finite_differences(
        seed in any::<u64>(),
        n in 3usize..12,
        p in 1usize..5,
    ) {
        let mut rng = Rng::new(seed);
        let x = Matrix::from_rows(
            (0..n).map(|_| (0..p).map(|_| rng.uniform(-2.0, 2.0)).collect()).collect(),
        );
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(2) as u8).collect();
        let weights: Vec<f64> = (0..p).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let bias = rng.uniform(-0.5, 0.5);
        let l2 = 0.01;
        let (_, grad_w, grad_b) = glm::loss_and_gradient(&x, &y, &weights, bias, l2);
        let eps = 1e-6;
        for j in 0..p {
            let mut plus = weights.clone();
            plus[j] += eps;
            let mut minus = weights.clone();
            minus[j] -= eps;
            let (lp, _, _) = glm::loss_and_gradient(&x, &y, &plus, bias, l2);
            let (lm, _, _) = glm::loss_and_gradient(&x, &y, &minus, bias, l2);
            let numeric = (lp - lm) / (2.0 * eps);
            let rel = (grad_w[j] - numeric).abs() / numeric.abs().max(1e-6);
            prop_assert!(rel < 1e-4, "w[{j}] analytic {} numeric {numeric}", grad_w[j]);
        }
        let (lp, _, _) = glm::loss_and_gradient(&x, &y, &weights, bias + eps, l2);
        let (lm, _, _) = glm::loss_and_gradient(&x, &y, &weights, bias - eps, l2);
        let numeric = (lp - lm) / (2.0 * eps);
        prop_assert!((grad_b - numeric).abs() / numeric.abs().max(1e-6) < 1e-4);
    }

    #[test]
    fn mlp_gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = Matrix::from_rows(
            (0..6).map(|_| (0..3).map(|_| rng.uniform(-1.5, 1.5)).collect()).collect(),
        );
        let y: Vec<u8> = (0..6).map(|_| rng.gen_range(2) as u8).collect();
        let model = MlpModel::init(vec![3, 4, 1], &mut rng);
        let rows: Vec<usize> = (0..6).collect();
        let (_, grads) = mlp::loss_and_gradient(&model, &x, &rows, &y);
        let eps = 1e-6;
        for l in 0..model.weights.len() {
            for idx in 0..model.weights[l].len() {
                let mut plus = model.clone();
                plus.weights[l][idx] += eps;
                let mut minus = model.clone();
                minus.weights[l][idx] -= eps;
                let (lp, _) = mlp::loss_and_gradient(&plus, &x, &rows, &y);
                let (lm, _) = mlp::loss_and_gradient(&minus, &x, &rows, &y);
                let numeric = (lp - lm) / (2.0 * eps);
                let analytic = grads.weights[l][idx];
                // Skip coordinates pinched by a rectifier kink, where the
                // two-sided difference is not a derivative estimate.
                if numeric.abs() < 1e-9 && analytic.abs() < 1e-9 {
                    continue;
                }
                let rel = (analytic - numeric).abs() / numeric.abs().max(1e-6);
                prop_assert!(rel < 1e-4, "layer {l} w[{idx}] analytic {analytic} numeric {numeric}");
            }
        }
    }

    #[test]
    fn gbm_training_loss_is_monotone_nonincreasing(
        seed in any::<u64>(),
        rounds in 1u32..25,
        shrinkage in 0.01f64..0.3,
    ) {
        let mut rng = Rng::new(seed);
        let n = 60;
        let x = Matrix::from_rows(
            (0..n).map(|_| vec![rng.next_f64(), rng.next_f64()]).collect(),
        );
        let mut y: Vec<u8> = (0..n).map(|i| u8::from(x.get(i, 0) > 0.5)).collect();
        // Mislabel a few rows so the problem is not trivially separable.
        for i in 0..6 {
            let j = rng.gen_range(n);
            let _ = i;
            y[j] ^= 1;
        }
        let params = idsbench_core::learners::GbmParams {
            n_rounds: rounds,
            max_depth: 3,
            shrinkage,
            min_samples_leaf: 3,
            leaf_lambda: 1.0,
        };
        let model = idsbench_core::learners::gbm::train_gbm(&x, &y, &params).unwrap();
        prop_assert_eq!(model.round_losses.len(), rounds as usize + 1);
        for w in model.round_losses.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "loss rose {} -> {}", w[0], w[1]);
        }
    }
}
