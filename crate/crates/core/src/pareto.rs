//! Dominance, non-dominated sorting and exact hypervolume.
//!
//! All objectives are maximized. The hypervolume of a set of points is the
//! Lebesgue measure of the union of the boxes `[ref, y]`; it is computed with
//! a WFG-style recursion on exclusive contributions, bottoming out in a
//! two-dimensional sweep.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::error::{contract, Error, Result};

/// Largest number of objectives the exact hypervolume routine accepts.
pub const MAX_HV_DIM: usize = 4;

/// A point in objective space (maximization orientation).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(contract!("objective vector must have at least one entry"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(contract!("objective vector entry {bad} is not finite"));
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(alloc::vec![0.0; m.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Componentwise map; the caller guarantees finite outputs.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty() && values.iter().all(|v| v.is_finite()));
        Self(values)
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

impl core::ops::Index<usize> for ObjectiveVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Lower corner of every hypervolume box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ReferencePoint(pub ObjectiveVector);

impl ReferencePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ObjectiveVector::new(values).map(Self)
    }

    pub fn origin(m: usize) -> Self {
        Self(ObjectiveVector::zeros(m))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// `a` dominates `b`: at least as good everywhere and not equal.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(contract!("dimension mismatch: {} vs {}", a.dim(), b.dim()));
    }
    Ok(dominates_raw(a.as_slice(), b.as_slice()))
}

#[inline]
pub(crate) fn dominates_raw(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Partitions point indices into successive non-dominated fronts.
///
/// Front 0 holds the points no other input point dominates; front `k` is the
/// non-dominated set of what remains after removing fronts `0..k`. Indices
/// inside a front are ascending.
pub fn non_dominated_sort(points: &[ObjectiveVector]) -> Result<Vec<Vec<usize>>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let m = first.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != m) {
        return Err(contract!("dimension mismatch: {} vs {}", p.dim(), m));
    }

    let n = points.len();
    let mut dominated_by = alloc::vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_slice(), points[j].as_slice());
            if dominates_raw(a, b) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates_raw(b, a) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(fronts)
}

/// Indices of the non-dominated points (front 0).
pub fn pareto_indices(points: &[ObjectiveVector]) -> Result<Vec<usize>> {
    Ok(non_dominated_sort(points)?.into_iter().next().unwrap_or_default())
}

fn check_inputs<'a>(
    sets: &[&'a [ObjectiveVector]],
    reference: &ReferencePoint,
) -> Result<Vec<&'a [f64]>> {
    let m = reference.dim();
    if m > MAX_HV_DIM {
        return Err(Error::UnsupportedDimension { dim: m, max: MAX_HV_DIM });
    }
    let mut out = Vec::new();
    for set in sets {
        for p in set.iter() {
            if p.dim() != m {
                return Err(contract!("dimension mismatch: point {} vs reference {}", p.dim(), m));
            }
            out.push(p.as_slice());
        }
    }
    Ok(out)
}

/// Exact hypervolume of `points` above `reference`.
///
/// Points that fail to strictly exceed the reference in every coordinate add
/// nothing. Duplicates and dominated points do not change the result.
pub fn hypervolume(points: &[ObjectiveVector], reference: &ReferencePoint) -> Result<f64> {
    let pts = check_inputs(&[points], reference)?;
    Ok(hv_slices(&pts, reference.as_slice()))
}

/// Hypervolume improvement of adding `batch` to `archive`; never negative.
pub fn hvi(
    batch: &[ObjectiveVector],
    archive: &[ObjectiveVector],
    reference: &ReferencePoint,
) -> Result<f64> {
    let all = check_inputs(&[archive, batch], reference)?;
    let base = hv_slices(&all[..archive.len()], reference.as_slice());
    let union = hv_slices(&all, reference.as_slice());
    Ok((union - base).max(0.0))
}

/// Marginal improvement of adding `x` to `batch` given `archive`.
///
/// Computed directly as the exclusive contribution of `x` with respect to
/// `batch ∪ archive`.
pub fn marginal_hvi(
    x: &ObjectiveVector,
    batch: &[ObjectiveVector],
    archive: &[ObjectiveVector],
    reference: &ReferencePoint,
) -> Result<f64> {
    let others = check_inputs(&[archive, batch], reference)?;
    if x.dim() != reference.dim() {
        return Err(contract!("dimension mismatch: point {} vs reference {}", x.dim(), reference.dim()));
    }
    Ok(exclusive_contribution(x.as_slice(), &others, reference.as_slice()))
}

/// Volume of `[r, x]` not covered by any box of `others`.
pub(crate) fn exclusive_contribution(x: &[f64], others: &[&[f64]], r: &[f64]) -> f64 {
    let own = box_volume(x, r);
    if own <= 0.0 {
        return 0.0;
    }
    let mut limited: Vec<Vec<f64>> = Vec::with_capacity(others.len());
    for q in others {
        if dominates_or_equal(q, x) {
            return 0.0;
        }
        let l: Vec<f64> = x.iter().zip(q.iter()).map(|(a, b)| a.min(*b)).collect();
        if l.iter().zip(r).all(|(a, b)| a > b) {
            limited.push(l);
        }
    }
    let covered = hv_owned(limited, r);
    (own - covered).max(0.0)
}

#[inline]
fn dominates_or_equal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

#[inline]
fn box_volume(p: &[f64], r: &[f64]) -> f64 {
    let mut v = 1.0;
    for (a, b) in p.iter().zip(r) {
        if a <= b {
            return 0.0;
        }
        v *= a - b;
    }
    v
}

pub(crate) fn hv_slices(points: &[&[f64]], r: &[f64]) -> f64 {
    let kept: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(r).all(|(a, b)| a > b))
        .map(|p| p.to_vec())
        .collect();
    hv_owned(kept, r)
}

/// Hypervolume of points that all strictly exceed `r`.
fn hv_owned(points: Vec<Vec<f64>>, r: &[f64]) -> f64 {
    let front = canonical_front(points);
    match front.len() {
        0 => 0.0,
        1 => box_volume(&front[0], r),
        _ => wfg(&front, r),
    }
}

/// Deduplicated non-dominated subset in descending lexicographic order.
fn canonical_front(mut points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    points.sort_by(|a, b| lex_desc(a, b));
    points.dedup();
    let mut front: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    // Descending lexicographic order: a point can only be dominated by one
    // that precedes it.
    'outer: for p in points {
        for q in &front {
            if dominates_or_equal(q, &p) {
                continue 'outer;
            }
        }
        front.push(p);
    }
    front
}

fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// WFG recursion over a canonical front (non-dominated, sorted descending by
/// the first objective).
fn wfg(front: &[Vec<f64>], r: &[f64]) -> f64 {
    match r.len() {
        1 => front.iter().map(|p| p[0] - r[0]).fold(0.0, f64::max),
        2 => sweep_2d(front, r),
        _ => {
            let mut total = 0.0;
            for (i, p) in front.iter().enumerate() {
                let own = box_volume(p, r);
                let rest = &front[i + 1..];
                if rest.is_empty() {
                    total += own;
                    continue;
                }
                let limited: Vec<Vec<f64>> = rest
                    .iter()
                    .map(|q| p.iter().zip(q).map(|(a, b)| a.min(*b)).collect::<Vec<f64>>())
                    .filter(|l: &Vec<f64>| l.iter().zip(r).all(|(a, b)| a > b))
                    .collect();
                total += own - hv_owned(limited, r);
            }
            total
        }
    }
}

/// Area of a 2-d non-dominated front sorted by descending first coordinate.
fn sweep_2d(front: &[Vec<f64>], r: &[f64]) -> f64 {
    let mut area = 0.0;
    let mut prev_y = r[1];
    for p in front {
        // Non-dominated and sorted by x descending, so y ascends.
        area += (p[0] - r[0]) * (p[1] - prev_y);
        prev_y = p[1];
    }
    area
}

/// Monte-Carlo estimate of the hypervolume with its standard error.
///
/// Samples uniformly in the bounding box `[reference, max_i y_i]`. Used as an
/// independent cross-check of the exact routine; it works for any dimension.
pub fn monte_carlo_hypervolume<R: Rng + ?Sized>(
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let m = reference.dim();
    let r = reference.as_slice();
    let mut pts: Vec<&[f64]> = Vec::new();
    for p in points {
        if p.dim() != m {
            return Err(contract!("dimension mismatch: point {} vs reference {}", p.dim(), m));
        }
        if p.as_slice().iter().zip(r).all(|(a, b)| a > b) {
            pts.push(p.as_slice());
        }
    }
    if pts.is_empty() || samples == 0 {
        return Ok((0.0, 0.0));
    }
    let upper: Vec<f64> = (0..m)
        .map(|k| pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let volume: f64 = upper.iter().zip(r).map(|(u, l)| u - l).product();
    let mut sample = alloc::vec![0.0; m];
    let mut hits = 0usize;
    for _ in 0..samples {
        for k in 0..m {
            sample[k] = r[k] + rng.random::<f64>() * (upper[k] - r[k]);
        }
        if pts.iter().any(|p| dominates_or_equal(p, &sample)) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let sigma = volume * libm::sqrt(frac * (1.0 - frac) / samples as f64);
    Ok((volume * frac, sigma))
}

/// Best hypervolume reachable by any `n` of the given images, with the image
/// indices achieving it.
///
/// Only the distinct non-dominated images are searched: swapping an image
/// for one that dominates it never lowers the hypervolume.
pub fn optimal_subset_hypervolume(
    images: &[ObjectiveVector],
    reference: &ReferencePoint,
    n: usize,
    cap: u128,
) -> Result<(f64, Vec<usize>)> {
    check_inputs(&[images], reference)?;
    let r = reference.as_slice();
    let mut front: Vec<usize> = pareto_indices(images)?
        .into_iter()
        .filter(|&i| images[i].as_slice().iter().zip(r).all(|(a, b)| a > b))
        .collect();
    front.sort_by(|&a, &b| lex_desc(images[a].as_slice(), images[b].as_slice()));
    front.dedup_by(|a, b| images[*a] == images[*b]);
    if front.len() <= n {
        let pts: Vec<&[f64]> = front.iter().map(|&i| images[i].as_slice()).collect();
        return Ok((hv_slices(&pts, r), front));
    }
    let size = binomial(front.len() as u128, n as u128);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        let pts: Vec<&[f64]> = combo.iter().map(|&c| images[front[c]].as_slice()).collect();
        let hv = hv_slices(&pts, r);
        if hv > best.0 {
            best = (hv, combo.iter().map(|&c| front[c]).collect());
        }
        if !next_combination(&mut combo, front.len()) {
            break;
        }
    }
    Ok(best)
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Advances `combo` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ov(v: &[f64]) -> ObjectiveVector {
        ObjectiveVector::new(v.to_vec()).unwrap()
    }

    fn origin(m: usize) -> ReferencePoint {
        ReferencePoint::origin(m)
    }

    /// Exact hypervolume by coordinate-grid decomposition: every cell of the
    /// grid spanned by the distinct coordinates is either fully covered or not.
    fn grid_hv(points: &[Vec<f64>], r: &[f64]) -> f64 {
        let m = r.len();
        let axes: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let mut a: Vec<f64> = points.iter().map(|p| p[k]).filter(|&v| v > r[k]).collect();
                a.push(r[k]);
                a.sort_by(f64::total_cmp);
                a.dedup();
                a
            })
            .collect();
        let dims: Vec<usize> = axes.iter().map(|a| a.len() - 1).collect();
        if dims.iter().any(|&d| d == 0) {
            return 0.0;
        }
        let mut idx = vec![0usize; m];
        let mut total = 0.0;
        loop {
            let lo: Vec<f64> = (0..m).map(|k| axes[k][idx[k]]).collect();
            let hi: Vec<f64> = (0..m).map(|k| axes[k][idx[k] + 1]).collect();
            if points.iter().any(|p| p.iter().zip(&hi).all(|(a, b)| a >= b)) {
                total += lo.iter().zip(&hi).map(|(l, h)| h - l).product::<f64>();
            }
            let mut k = 0;
            loop {
                if k == m {
                    return total;
                }
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&ov(&[2.0, 2.0]), &ov(&[1.0, 1.0])).unwrap());
        assert!(!dominates(&ov(&[1.0, 1.0]), &ov(&[1.0, 1.0])).unwrap());
        assert!(!dominates(&ov(&[2.0, 0.0]), &ov(&[1.0, 1.0])).unwrap());
        assert!(dominates(&ov(&[1.0]), &ov(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn objective_vector_rejects_nan_and_empty() {
        assert!(ObjectiveVector::new(vec![f64::NAN]).is_err());
        assert!(ObjectiveVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(ObjectiveVector::new(vec![]).is_err());
    }

    #[test]
    fn sort_examples() {
        let pts = [ov(&[2.0, 0.0]), ov(&[0.0, 2.0]), ov(&[1.0, 1.0])];
        assert_eq!(non_dominated_sort(&pts).unwrap(), vec![vec![0, 1, 2]]);
        let pts = [ov(&[2.0, 2.0]), ov(&[1.0, 1.0])];
        assert_eq!(non_dominated_sort(&pts).unwrap(), vec![vec![0], vec![1]]);
        assert!(non_dominated_sort(&[]).unwrap().is_empty());
    }

    #[test]
    fn sort_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pts: Vec<ObjectiveVector> = (0..50)
                .map(|_| ov(&[rng.random_range(0..5) as f64, rng.random_range(0..5) as f64, rng.random::<f64>()]))
                .collect();
            let fronts = non_dominated_sort(&pts).unwrap();
            // Peel fronts with the O(N²·m) oracle.
            let mut remaining: Vec<usize> = (0..pts.len()).collect();
            let mut expect = Vec::new();
            while !remaining.is_empty() {
                let front: Vec<usize> = remaining
                    .iter()
                    .copied()
                    .filter(|&i| !remaining.iter().any(|&j| dominates_raw(pts[j].as_slice(), pts[i].as_slice())))
                    .collect();
                remaining.retain(|i| !front.contains(i));
                expect.push(front);
            }
            assert_eq!(fronts, expect);
        }
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume(&[ov(&[1.0, 1.0])], &origin(2)).unwrap(), 1.0);
        assert_eq!(hypervolume(&[], &origin(2)).unwrap(), 0.0);
        let pts = [ov(&[3.0, 1.0]), ov(&[2.0, 2.0]), ov(&[1.0, 3.0])];
        assert_eq!(hypervolume(&pts, &origin(2)).unwrap(), 6.0);
        assert_eq!(grid_hv(&[vec![3.0, 1.0], vec![2.0, 2.0], vec![1.0, 3.0]], &[0.0, 0.0]), 6.0);
    }

    #[test]
    fn hypervolume_errors_and_clipping() {
        let p5 = ov(&[1.0; 5]);
        assert!(matches!(
            hypervolume(&[p5], &origin(5)),
            Err(Error::UnsupportedDimension { dim: 5, .. })
        ));
        assert!(hypervolume(&[ov(&[1.0])], &origin(2)).is_err());
        // On or below the reference contributes nothing.
        assert_eq!(hypervolume(&[ov(&[2.0, 0.0]), ov(&[-1.0, 5.0])], &origin(2)).unwrap(), 0.0);
    }

    #[test]
    fn hvi_examples() {
        let r = origin(2);
        assert_eq!(hvi(&[ov(&[1.0, 1.0])], &[], &r).unwrap(), 1.0);
        assert_eq!(hvi(&[ov(&[0.5, 0.5])], &[ov(&[1.0, 1.0])], &r).unwrap(), 0.0);
        assert_eq!(hvi(&[ov(&[2.0, 1.0])], &[ov(&[1.0, 2.0])], &r).unwrap(), 1.0);
    }

    #[test]
    fn marginal_examples() {
        let r = origin(2);
        assert_eq!(marginal_hvi(&ov(&[1.0, 1.0]), &[], &[], &r).unwrap(), 1.0);
        assert_eq!(marginal_hvi(&ov(&[1.0, 1.0]), &[ov(&[2.0, 2.0])], &[], &r).unwrap(), 0.0);
        assert_eq!(marginal_hvi(&ov(&[1.0, 3.0]), &[ov(&[3.0, 1.0])], &[], &r).unwrap(), 2.0);
    }

    #[test]
    fn exact_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=4 {
            for _ in 0..40 {
                let n = rng.random_range(0..9);
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..m).map(|_| rng.random_range(-0.2..1.0)).collect())
                    .collect();
                let ovs: Vec<ObjectiveVector> = pts.iter().map(|p| ov(p)).collect();
                let exact = hypervolume(&ovs, &origin(m)).unwrap();
                let grid = grid_hv(&pts, &vec![0.0; m]);
                assert!((exact - grid).abs() <= 1e-12, "m={m} exact={exact} grid={grid}");
            }
        }
    }

    #[test]
    fn dominated_points_do_not_change_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 2..=4 {
            let mut pts: Vec<ObjectiveVector> =
                (0..30).map(|_| ov(&(0..m).map(|_| rng.random::<f64>()).collect::<Vec<_>>())).collect();
            let full = hypervolume(&pts, &origin(m)).unwrap();
            let front = pareto_indices(&pts).unwrap();
            let dominated: Vec<usize> = (0..pts.len()).filter(|i| !front.contains(i)).collect();
            for &d in dominated.iter().rev() {
                pts.remove(d);
                assert_eq!(hypervolume(&pts, &origin(m)).unwrap().to_bits(), full.to_bits());
            }
            // Duplicates too.
            let dup = pts[0].clone();
            pts.push(dup);
            assert_eq!(hypervolume(&pts, &origin(m)).unwrap().to_bits(), full.to_bits());
        }
    }

    #[test]
    fn monte_carlo_agrees_on_unit_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (est, sigma) =
            monte_carlo_hypervolume(&[ov(&[1.0, 1.0])], &origin(2), 10_000, &mut rng).unwrap();
        assert_eq!(est, 1.0);
        assert_eq!(sigma, 0.0);
    }

    #[test]
    fn optimal_subset_examples() {
        let imgs = [ov(&[3.0, 1.0]), ov(&[2.0, 2.0]), ov(&[1.0, 3.0]), ov(&[1.0, 1.0]), ov(&[2.0, 2.0])];
        let (hv, idx) = optimal_subset_hypervolume(&imgs, &origin(2), 1, 1000).unwrap();
        assert_eq!(hv, 4.0);
        assert_eq!(idx, vec![1]);
        let (hv, idx) = optimal_subset_hypervolume(&imgs, &origin(2), 2, 1000).unwrap();
        assert_eq!(hv, 5.0);
        assert_eq!(idx.len(), 2);
        let (hv, _) = optimal_subset_hypervolume(&imgs, &origin(2), 5, 1000).unwrap();
        assert_eq!(hv, 6.0);
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut combo = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut combo, 5) {
            count += 1;
        }
        assert_eq!(count, binomial(5, 2));
        assert_eq!(binomial(64, 3), 41_664);
    }
}
