//! Property suites over the numeric core: metric inequalities and
//! invariances, split partitioning, scaler round-trips, loss accounting,
//! and linearity of the reverse-mode gradient.

use lattice_pinn::autodiff::{gradient, Var};
use lattice_pinn::lattice::{split_indices, SplitConfig, StandardScaler};
use lattice_pinn::metrics::{mae, median, mse, r2};
use lattice_pinn::pinn::LossBreakdown;
use proptest::prelude::*;

fn vec_pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max_len).prop_flat_map(|len| {
        (
            proptest::collection::vec(-1000i32..1000i32, len),
            proptest::collection::vec(-1000i32..1000i32, len),
        )
            .prop_map(|(a, p)| {
                (
                    a.into_iter().map(|v| f64::from(v) / 16.0).collect(),
                    p.into_iter().map(|v| f64::from(v) / 16.0).collect(),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_mae_squared_never_exceeds_mse((actual, predicted) in vec_pair(24)) {
        let m = mse(&actual, &predicted).unwrap();
        let a = mae(&actual, &predicted).unwrap();
        prop_assert!(a * a <= m + 1e-12, "mae^2 {} vs mse {m}", a * a);
    }

    #[test]
    fn prop_mse_and_mae_are_invariant_under_joint_permutation(
        (actual, predicted) in vec_pair(16),
        rotate in 0usize..16,
    ) {
        let k = rotate % actual.len();
        let mut ra = actual.clone();
        let mut rp = predicted.clone();
        ra.rotate_left(k);
        rp.rotate_left(k);
        // Sixteenths are dyadic, so both accumulation orders are exact.
        prop_assert_eq!(mse(&actual, &predicted).unwrap(), mse(&ra, &rp).unwrap());
        prop_assert_eq!(mae(&actual, &predicted).unwrap(), mae(&ra, &rp).unwrap());
    }

    #[test]
    fn prop_translation_leaves_mse_and_mae_unchanged(
        (actual, predicted) in vec_pair(16),
        shift in -500i32..500,
    ) {
        // Integer shifts on dyadic data keep every difference bit-identical.
        let c = f64::from(shift);
        let sa: Vec<f64> = actual.iter().map(|v| v + c).collect();
        let sp: Vec<f64> = predicted.iter().map(|v| v + c).collect();
        prop_assert_eq!(mse(&actual, &predicted).unwrap(), mse(&sa, &sp).unwrap());
        prop_assert_eq!(mae(&actual, &predicted).unwrap(), mae(&sa, &sp).unwrap());
    }

    #[test]
    fn prop_r2_of_exact_predictions_is_one(values in proptest::collection::vec(-1000i32..1000i32, 3..20)) {
        let mut actual: Vec<f64> = values.into_iter().map(f64::from).collect();
        actual[0] += 0.5;  // guarantee non-constant
        let score = r2(&actual, &actual).unwrap();
        prop_assert_eq!(score, 1.0);
    }

    #[test]
    fn prop_median_lies_within_the_sample_range(values in proptest::collection::vec(-1e4f64..1e4, 1..30)) {
        let m = median(&values).unwrap();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((lo..=hi).contains(&m), "median {m} outside [{lo}, {hi}]");
    }

    #[test]
    fn prop_split_partitions_every_index_exactly_once(
        n in 2usize..200,
        seed in 0u64..500,
        fraction in 1usize..9,
    ) {
        let cfg = SplitConfig { train_fraction: fraction as f64 / 10.0, seed };
        let (train, test) = split_indices(n, &cfg).unwrap();
        prop_assert!(!train.is_empty() && !test.is_empty());
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        let expected: Vec<usize> = (0..n).collect();
        prop_assert_eq!(all, expected, "train and test must partition 0..n");
        let (train2, test2) = split_indices(n, &cfg).unwrap();
        prop_assert_eq!(train, train2);
        prop_assert_eq!(test, test2);
    }

    #[test]
    fn prop_scaler_round_trips_to_working_precision(
        rows in proptest::collection::vec(
            (-1e3f64..1e3, 1f64..1e5),
            3..40,
        ),
    ) {
        let data: Vec<Vec<f64>> = rows.iter().map(|&(a, b)| vec![a, b]).collect();
        let scaler = StandardScaler::fit(&data).unwrap();
        for row in &data {
            let back = scaler.inverse_transform(&scaler.transform(row));
            for (orig, restored) in row.iter().zip(&back) {
                let scale = orig.abs().max(1.0);
                prop_assert!(
                    (orig - restored).abs() <= 1e-9 * scale,
                    "round trip {orig} -> {restored}"
                );
            }
        }
    }

    #[test]
    fn prop_loss_breakdown_total_is_the_weighted_sum(
        data in 0f64..10.0,
        physics in 0f64..10.0,
        initial in 0f64..10.0,
        boundary in 0f64..10.0,
        lambda_scaled in 0u32..400,
    ) {
        let lambda = f64::from(lambda_scaled) / 100.0;
        let b = LossBreakdown::new(data, physics, initial, boundary, lambda);
        let expected = data + lambda * physics + initial + boundary;
        prop_assert!(
            (b.total - expected).abs() <= 1e-12 * expected.abs().max(1.0),
            "total {} vs recomputed {expected}",
            b.total
        );
    }

    #[test]
    fn prop_gradient_is_linear_in_the_objective(
        p0 in -2f64..2.0,
        p1 in -2f64..2.0,
        p2 in 0.5f64..2.0,
        a_scaled in -8i32..8,
        b_scaled in -8i32..8,
    ) {
        fn f<'t>(p: &'t [Var<'t, f64>]) -> Var<'t, f64> {
            (p[0] * p[1]).sin() * p[2]
        }
        fn g<'t>(p: &'t [Var<'t, f64>]) -> Var<'t, f64> {
            p[2] / (p[0] * p[0] + p[1].exp())
        }
        let a = f64::from(a_scaled) / 4.0;
        let b = f64::from(b_scaled) / 4.0;
        let params = [p0, p1, p2];
        let (_, gf) = gradient(&params, |_, p| f(p));
        let (_, gg) = gradient(&params, |_, p| g(p));
        let (_, combined) = gradient(&params, |_, p| f(p).scale(a) + g(p).scale(b));
        for k in 0..3 {
            let want = a * gf[k] + b * gg[k];
            let scale = want.abs().max(1.0);
            prop_assert!(
                (combined[k] - want).abs() <= 1e-12 * scale,
                "coordinate {k}: {} vs {want}",
                combined[k]
            );
        }
    }
}
