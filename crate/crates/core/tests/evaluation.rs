use gradefuse_core::fse::{self, WeightMode};
use gradefuse_core::hypotest::{self, SampleStats, TransformCase};
use gradefuse_core::ScoreGrid;
use proptest::prelude::*;

fn matrix(max_r: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=max_r, 3usize..=max_n).prop_flat_map(|(r, n)| {
        prop::collection::vec(prop::collection::vec((1u32..=100).prop_map(f64::from), n), r)
    })
}

fn sample(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, n)
}

fn weights(r: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=r).map(|i| i as f64).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn benefit_ignores_reviewer_shift(values in matrix(4, 10), shift in -50i32..50) {
        let shifted: Vec<Vec<f64>> = values
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|g| if i == 0 { g + f64::from(shift) } else { *g }).collect())
            .collect();
        let a = fse::benefit_matrix(&ScoreGrid::from_matrix(values)).unwrap();
        let b = fse::benefit_matrix(&ScoreGrid::from_matrix(shifted)).unwrap();
        for (x, y) in a.row(0).iter().zip(b.row(0)) {
            prop_assert!((x.unwrap() - y.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_is_label_equivariant(values in matrix(4, 10), seed in any::<u64>()) {
        let n = values[0].len();
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher-Yates driven by a splitmix sequence
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            perm.swap(i, (z ^ (z >> 31)) as usize % (i + 1));
        }
        let permuted: Vec<Vec<f64>> = values
            .iter()
            .map(|row| perm.iter().map(|&p| row[p]).collect())
            .collect();
        let w = weights(values.len());
        for mode in [WeightMode::PaperLiteral, WeightMode::Renormalized] {
            let f = fse::fuse(&fse::benefit_matrix(&ScoreGrid::from_matrix(values.clone())).unwrap(), &w, mode).unwrap();
            let g = fse::fuse(&fse::benefit_matrix(&ScoreGrid::from_matrix(permuted.clone())).unwrap(), &w, mode).unwrap();
            for (k, &p) in perm.iter().enumerate() {
                prop_assert_eq!(g[k], f[p]);
            }
        }
    }

    #[test]
    fn renormalized_fusion_is_a_convex_combination(values in matrix(4, 10)) {
        let grid = ScoreGrid::from_matrix(values);
        let b = fse::benefit_matrix(&grid).unwrap();
        let f = fse::fuse(&b, &weights(grid.reviewer_count()), WeightMode::Renormalized).unwrap();
        for (j, fj) in f.iter().enumerate() {
            let col: Vec<f64> = (0..grid.reviewer_count()).map(|i| b.get(i, j).unwrap()).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= *fj && *fj <= hi + 1e-12);
        }
    }

    #[test]
    fn display_map_preserves_fused_order(values in matrix(4, 12)) {
        let grid = ScoreGrid::from_matrix(values);
        let b = fse::benefit_matrix(&grid).unwrap();
        let f = fse::fuse(&b, &weights(grid.reviewer_count()), WeightMode::PaperLiteral).unwrap();
        let Ok(result) = fse::final_scores(&f, &grid, 0) else { return Ok(()) };
        let (lo, hi) = (result.reference_min, result.reference_max);
        let unrounded: Vec<f64> = f.iter().map(|x| x * (hi - lo) + lo).collect();
        let by = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
            idx
        };
        prop_assert_eq!(by(&f), by(&unrounded));
        prop_assert_eq!(fse::competition_ranks(&f), fse::competition_ranks(&unrounded));
    }

    #[test]
    fn full_blend_is_identity(reference in sample(5..=30), compared in sample(5..=30)) {
        let cmp = hypotest::compare_classes(&reference, &compared, 0.05).unwrap();
        for case in [TransformCase::MeanAndScale, TransformCase::Shift, TransformCase::Scale, TransformCase::Identity] {
            let forced = hypotest::ClassComparison { case, ..cmp.clone() };
            let out = hypotest::rescale(&compared, &forced, 1.0).unwrap();
            for (a, b) in out.scores.iter().zip(&compared) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn zero_blend_hits_case_targets(reference in sample(5..=30), compared in sample(5..=30)) {
        let cmp = hypotest::compare_classes(&reference, &compared, 0.05).unwrap();
        let (g1, s1) = mean_std(&reference);
        let (g2, s2) = mean_std(&compared);
        let targets = [
            (TransformCase::MeanAndScale, g1, s1),
            (TransformCase::Shift, g1, s2),
            (TransformCase::Scale, g2, s1),
            (TransformCase::Identity, g2, s2),
        ];
        for (case, mean, std) in targets {
            let forced = hypotest::ClassComparison { case, ..cmp.clone() };
            let out = hypotest::rescale(&compared, &forced, 0.0).unwrap();
            let (m, s) = mean_std(&out.scores);
            prop_assert!((m - mean).abs() < 1e-9, "{case:?} mean {m} vs {mean}");
            prop_assert!((s - std).abs() < 1e-9, "{case:?} std {s} vs {std}");
        }
    }

    #[test]
    fn rescaling_keeps_class_order(
        reference in sample(5..=30),
        compared in sample(5..=30),
        blend in 0.0f64..1.0,
    ) {
        let cmp = hypotest::compare_classes(&reference, &compared, 0.05).unwrap();
        for case in [TransformCase::MeanAndScale, TransformCase::Shift, TransformCase::Scale] {
            let forced = hypotest::ClassComparison { case, ..cmp.clone() };
            let out = hypotest::rescale(&compared, &forced, blend).unwrap();
            for a in 0..compared.len() {
                for b in 0..compared.len() {
                    if compared[a] < compared[b] {
                        prop_assert!(out.scores[a] <= out.scores[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn decisions_ignore_student_order(reference in sample(5..=30), compared in sample(5..=30)) {
        let a = hypotest::compare_classes(&reference, &compared, 0.05).unwrap();
        let mut r = reference.clone();
        let mut c = compared.clone();
        r.reverse();
        c.rotate_left(1);
        let b = hypotest::compare_classes(&r, &c, 0.05).unwrap();
        prop_assert_eq!(a.case, b.case);
        prop_assert_eq!(a.mean_rejected(), b.mean_rejected());
        prop_assert_eq!(a.variance_rejected(), b.variance_rejected());
    }
}

#[test]
fn sample_stats_use_n_minus_one() {
    let s = SampleStats::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
    assert_eq!(s.mean, 5.0);
    assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
}

#[test]
fn shifted_class_is_shifted_back() {
    let reference: Vec<f64> = (0..30).map(|i| 60.0 + (i * 7 % 30) as f64).collect();
    let compared: Vec<f64> = reference.iter().map(|g| g + 15.0).collect();
    let cmp = hypotest::compare_classes(&reference, &compared, 0.05).unwrap();
    assert_eq!(cmp.case, TransformCase::Shift);
    let out = hypotest::rescale(&compared, &cmp, 0.05).unwrap();
    let gap = mean_std(&out.scores).0 - mean_std(&reference).0;
    assert!((gap - 0.05 * 15.0).abs() < 1e-9);
}
