use proptest::prelude::*;
use setgreedy_core::acquisition::sum_dispersion;
use setgreedy_core::pareto::{dominates, hvi, hypervolume, marginal_hvi, non_dominated_sort, pareto_indices};
use setgreedy_core::tasks::{action_mask, hamming, Objective};
use setgreedy_core::{BigramTask, Candidate, ObjectiveVector, ReferencePoint, SequenceSpace};

fn ov(p: &[u32]) -> ObjectiveVector {
    ObjectiveVector::new(p.iter().map(|&v| f64::from(v)).collect()).unwrap()
}

/// Unit cells of `[0, 5]^m` covered by at least one box `[0, p]`.
fn cell_count(points: &[Vec<u32>], m: usize) -> f64 {
    let mut covered = 0u32;
    let total = 5u32.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let cell: Vec<u32> = (0..m)
            .map(|_| {
                let d = c % 5;
                c /= 5;
                d
            })
            .collect();
        if points.iter().any(|p| p.iter().zip(&cell).all(|(&pi, &ci)| pi > ci)) {
            covered += 1;
        }
    }
    f64::from(covered)
}

fn front(m: usize, max: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0u32..=5, m), 0..max)
}

fn any_front() -> impl Strategy<Value = (usize, Vec<Vec<u32>>)> {
    (2usize..=4).prop_flat_map(|m| (Just(m), front(m, 9)))
}

fn pairwise_front0(points: &[ObjectiveVector]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !(0..points.len()).any(|j| dominates(&points[j], &points[i]).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hypervolume_matches_cell_count((m, pts) in any_front()) {
        let v: Vec<ObjectiveVector> = pts.iter().map(|p| ov(p)).collect();
        prop_assert_eq!(hypervolume(&v, &ReferencePoint::origin(m)).unwrap(), cell_count(&pts, m));
    }

    #[test]
    fn hypervolume_ignores_order_duplicates_and_dominated_points((m, pts) in any_front(), rot in 0usize..9) {
        let r = ReferencePoint::origin(m);
        let v: Vec<ObjectiveVector> = pts.iter().map(|p| ov(p)).collect();
        let base = hypervolume(&v, &r).unwrap();
        let mut shuffled = v.clone();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            shuffled.push(shuffled[0].clone());
            let weaker: Vec<u32> = pts[0].iter().map(|&c| c.saturating_sub(1)).collect();
            shuffled.push(ov(&weaker));
        }
        prop_assert_eq!(hypervolume(&shuffled, &r).unwrap(), base);
    }

    #[test]
    fn hvi_is_union_minus_archive((m, batch) in any_front(), archive_seed in front(4, 6)) {
        let archive: Vec<Vec<u32>> = archive_seed.into_iter().map(|p| p[..m].to_vec()).collect();
        let r = ReferencePoint::origin(m);
        let b: Vec<ObjectiveVector> = batch.iter().map(|p| ov(p)).collect();
        let a: Vec<ObjectiveVector> = archive.iter().map(|p| ov(p)).collect();
        let mut union = archive.clone();
        union.extend(batch.iter().cloned());
        let expected = cell_count(&union, m) - cell_count(&archive, m);
        prop_assert_eq!(hvi(&b, &a, &r).unwrap(), expected);
    }

    #[test]
    fn marginal_gain_is_monotone_and_diminishing(
        (m, pts) in (2usize..=3).prop_flat_map(|m| (Just(m), front(m, 8))),
        x in prop::collection::vec(0u32..=5, 4),
        split in 0usize..8,
    ) {
        let r = ReferencePoint::origin(m);
        let x = ov(&x[..m]);
        let b: Vec<ObjectiveVector> = pts.iter().map(|p| ov(p)).collect();
        let sub = &b[..split.min(b.len())];
        let small = marginal_hvi(&x, sub, &[], &r).unwrap();
        let large = marginal_hvi(&x, &b, &[], &r).unwrap();
        prop_assert!(large >= 0.0);
        prop_assert!(small >= large);
    }

    #[test]
    fn non_dominated_sort_layers((_m, pts) in any_front()) {
        let v: Vec<ObjectiveVector> = pts.iter().map(|p| ov(p)).collect();
        let fronts = non_dominated_sort(&v).unwrap();
        let mut all: Vec<usize> = fronts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..v.len()).collect::<Vec<_>>());
        prop_assert_eq!(pareto_indices(&v).unwrap(), pairwise_front0(&v));
        if let Some(f0) = fronts.first() {
            prop_assert_eq!(f0, &pairwise_front0(&v));
        }
        for f in &fronts {
            for &i in f {
                for &j in f {
                    prop_assert!(!dominates(&v[i], &v[j]).unwrap());
                }
            }
        }
        for w in fronts.windows(2) {
            for &j in &w[1] {
                prop_assert!(w[0].iter().any(|&i| dominates(&v[i], &v[j]).unwrap()));
            }
        }
    }

    #[test]
    fn hamming_is_a_metric(
        a in prop::collection::vec(0u8..3, 0..6),
        b in prop::collection::vec(0u8..3, 0..6),
        c in prop::collection::vec(0u8..3, 0..6),
    ) {
        let (a, b, c) = (Candidate(a), Candidate(b), Candidate(c));
        prop_assert_eq!(hamming(&a, &a), 0);
        prop_assert_eq!(hamming(&a, &b), hamming(&b, &a));
        prop_assert_eq!(hamming(&a, &b) == 0, a == b);
        prop_assert!(hamming(&a, &c) <= hamming(&a, &b) + hamming(&b, &c));
        let set = [a.clone(), b.clone(), c.clone()];
        let ordered: usize = set.iter().flat_map(|x| set.iter().map(move |y| hamming(x, y))).sum();
        prop_assert_eq!(sum_dispersion(&set), ordered as f64 / 2.0);
    }

    #[test]
    fn bigram_objective_counts_overlaps(tokens in prop::collection::vec(0u8..4, 6..=8)) {
        let space = SequenceSpace::new("ACVW", 6, 8).unwrap();
        let task = BigramTask::new(space.clone(), &["AV", "VC", "AA"]).unwrap();
        let x = Candidate(tokens);
        let s = space.render(&x);
        let y = task.evaluate(&x).unwrap();
        for (i, t) in ["AV", "VC", "AA"].iter().enumerate() {
            let count = (0..s.len() - 1).filter(|&k| &s[k..k + 2] == *t).count();
            let expected = (count as f64 / 4.0).min(1.0);
            prop_assert_eq!(y.as_slice()[i], expected);
        }
    }

    #[test]
    fn action_mask_respects_length_limits(min in 1usize..4, extra in 0usize..3, len in 0usize..8) {
        let max = min + extra;
        let space = SequenceSpace::new("AB", min, max).unwrap();
        let mut mask = Vec::new();
        if len <= max {
            action_mask(&space, len, &mut mask);
            prop_assert_eq!(mask.len(), 3);
            prop_assert_eq!(mask[2], len >= min);
            prop_assert_eq!(mask[0] && mask[1], len < max);
            prop_assert!(mask.iter().any(|&b| b));
        }
    }
}
