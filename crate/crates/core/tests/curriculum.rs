use cdem::curriculum::{class_quota, pseudo_label_counts, select};
use cdem::prototype::PseudoLabelTable;
use cdem::Matrix64;
use proptest::prelude::*;

fn table(y: &[usize], consistent: &[bool], confidence: &[f64], classes: usize) -> PseudoLabelTable<f64> {
    let n = y.len();
    let p = Matrix64::from_fn(n, classes, |i, c| if c == y[i] { confidence[i] } else { 0.0 });
    PseudoLabelTable {
        p_source: p.clone(),
        p_target: p.clone(),
        p,
        y_hat_source: y.to_vec(),
        y_hat_target: y.to_vec(),
        y_hat: y.to_vec(),
        consistent: consistent.to_vec(),
        selected: vec![false; n],
        confidence: confidence.to_vec(),
    }
}

fn rows() -> impl Strategy<Value = Vec<(usize, bool, f64)>> {
    prop::collection::vec((0usize..3, any::<bool>(), 0.0f64..1.0), 1..40)
}

fn unzip(rows: &[(usize, bool, f64)]) -> PseudoLabelTable<f64> {
    let y: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let c: Vec<bool> = rows.iter().map(|r| r.1).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.2).collect();
    table(&y, &c, &p, 3)
}

#[test]
fn everything_consistent_is_admitted_at_the_end() {
    let t = table(&[0, 0, 1, 1, 1], &[true, false, true, true, true], &[0.9, 0.8, 0.7, 0.6, 0.5], 2);
    let last = select(&t, &pseudo_label_counts(&t), 4, 4).unwrap();
    assert_eq!(last.selected, vec![0, 2, 3, 4]);
    let first = select(&t, &pseudo_label_counts(&t), 1, 4).unwrap();
    assert_eq!(first.quotas, vec![1, 1]);
    assert_eq!(first.selected, vec![0, 2]);
    assert!(select(&t, &[1, 1], 0, 4).is_err());
    assert!(select(&t, &[1], 1, 4).is_err());
}

#[test]
fn quota_never_exceeds_either_bound() {
    for n in 0..20 {
        for total in 1..12 {
            for t in 1..=total {
                for con in 0..=n {
                    let q = class_quota(n, t, total, con);
                    assert!(q <= con && q <= n);
                    if t == total {
                        assert_eq!(q, con);
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn selection_grows_with_iteration(rows in rows(), total in 1usize..12) {
        let t = unzip(&rows);
        let counts = pseudo_label_counts(&t);
        let mut prev: Vec<usize> = Vec::new();
        for it in 1..=total {
            let s = select(&t, &counts, it, total).unwrap();
            prop_assert!(prev.iter().all(|i| s.selected.contains(i)));
            for &i in &s.selected {
                prop_assert!(t.consistent[i]);
            }
            prev = s.selected;
        }
    }

    #[test]
    fn selection_is_permutation_equivariant(
        rows in rows(),
        total in 1usize..8,
        seed in any::<u64>(),
    ) {
        // Distinct confidences so ties cannot depend on sample order.
        let rows: Vec<(usize, bool, f64)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.0, r.1, r.2 + i as f64 * 1e-6))
            .collect();
        let n = rows.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<_> = perm.iter().map(|&i| rows[i]).collect();
        let a = unzip(&rows);
        let b = unzip(&shuffled);
        for it in 1..=total {
            let sa = select(&a, &pseudo_label_counts(&a), it, total).unwrap();
            let sb = select(&b, &pseudo_label_counts(&b), it, total).unwrap();
            let mut mapped: Vec<usize> = sb.selected.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(&sa.selected, &mapped);
            prop_assert_eq!(&sa.quotas, &sb.quotas);
        }
    }
}
