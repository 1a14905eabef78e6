//! Pareto ordering, non-dominated filtering, box decompositions of the
//! dominated region and exact hypervolume.
//!
//! Everything here uses the maximization convention: `a` dominates `b` when
//! `a - b` is componentwise non-negative. The dominated region of a set
//! `Y` is `{z : z ⪯ y for some y in Y}`, which extends to `-inf` in every
//! coordinate, so decomposed boxes carry `f64::NEG_INFINITY` lower bounds.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Points closer than this in every coordinate are treated as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Weak (`strict = false`) or strict Pareto domination of `b` by `a`.
pub fn dominates(a: &[f64], b: &[f64], strict: bool) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(dominates_unchecked(a, b, strict))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64], strict: bool) -> bool {
    let mut better_somewhere = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            better_somewhere = true;
        }
    }
    !strict || better_somewhere
}

fn near_duplicate(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x == y || (x - y).abs() <= DUPLICATE_TOL)
}

/// Mutually non-dominated set of objective vectors without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    points: Vec<Vec<f64>>,
}

impl ParetoFront {
    /// Wraps `points`, failing if any point is dominated by or duplicates another.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let m = first.len();
            if let Some(bad) = points.iter().find(|p| p.len() != m) {
                return Err(Error::DimensionMismatch { expected: m, got: bad.len() });
            }
        }
        for (i, a) in points.iter().enumerate() {
            for b in points.iter().skip(i + 1) {
                if near_duplicate(a, b) || dominates_unchecked(a, b, false) || dominates_unchecked(b, a, false) {
                    return Err(Error::DominatedInput);
                }
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn decompose(&self) -> Result<BoxDecomposition> {
        box_decompose(&self.points)
    }
}

/// Indices of the non-dominated points of `points`, in input order. Of a
/// group of duplicates only the first is kept.
pub fn non_dominated_indices(points: &[Vec<f64>]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        if p.iter().any(|v| v.is_nan()) {
            continue;
        }
        for (j, q) in points.iter().enumerate() {
            if i == j || q.iter().any(|v| v.is_nan()) {
                continue;
            }
            if dominates_unchecked(q, p, true) {
                continue 'outer;
            }
            if j < i && near_duplicate(p, q) {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

/// Maximal non-dominated subset of `points` with duplicates removed.
pub fn pareto_filter(points: &[Vec<f64>]) -> ParetoFront {
    let points = non_dominated_indices(points)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    ParetoFront { points }
}

/// Half-open hyperrectangle `(lower, upper]`; lower bounds may be `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperbox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Hyperbox {
    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l < *v && *v <= *u)
    }

    /// Volume of the part of the box lying above `reference`.
    pub fn clipped_volume(&self, reference: &[f64]) -> f64 {
        let mut vol = 1.0;
        for ((l, u), r) in self.lower.iter().zip(&self.upper).zip(reference) {
            let side = u - l.max(*r);
            if side <= 0.0 {
                return 0.0;
            }
            vol *= side;
        }
        vol
    }
}

/// Disjoint boxes whose union is the dominated region of a front.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDecomposition {
    boxes: Vec<Hyperbox>,
}

impl BoxDecomposition {
    pub fn boxes(&self) -> &[Hyperbox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(z))
    }

    pub fn clipped_volume(&self, reference: &[f64]) -> f64 {
        self.boxes.iter().map(|b| b.clipped_volume(reference)).sum()
    }
}

/// Decomposes the dominated region of a mutually non-dominated set.
///
/// Near-duplicates are merged first. The region is swept along the last
/// objective: between consecutive distinct levels of that objective the
/// cross-section is the dominated region of the points at or above the
/// level, which is decomposed recursively in one dimension fewer.
pub fn box_decompose(points: &[Vec<f64>]) -> Result<BoxDecomposition> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("cannot decompose an empty front".into()));
    };
    let m = first.len();
    if m == 0 {
        return Err(Error::InvalidArgument("objective vectors must be non-empty".into()));
    }
    let mut unique: Vec<&[f64]> = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("front points must be finite".into()));
        }
        if !unique.iter().any(|q| near_duplicate(p, q)) {
            unique.push(p);
        }
    }
    for (i, a) in unique.iter().enumerate() {
        for (j, b) in unique.iter().enumerate() {
            if i != j && dominates_unchecked(a, b, false) {
                return Err(Error::DominatedInput);
            }
        }
    }
    let mut boxes = Vec::new();
    let mut lower = vec![f64::NEG_INFINITY; m];
    let mut upper = vec![0.0; m];
    sweep(unique, m, &mut lower, &mut upper, &mut boxes);
    Ok(BoxDecomposition { boxes })
}

fn sweep(mut pts: Vec<&[f64]>, free: usize, lower: &mut [f64], upper: &mut [f64], out: &mut Vec<Hyperbox>) {
    if free == 1 {
        lower[0] = f64::NEG_INFINITY;
        upper[0] = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        out.push(Hyperbox { lower: lower.to_vec(), upper: upper.to_vec() });
        return;
    }
    let c = free - 1;
    pts.sort_by(|a, b| b[c].partial_cmp(&a[c]).unwrap_or(Ordering::Equal));
    let mut start = 0;
    while start < pts.len() {
        let level = pts[start][c];
        let mut end = start;
        while end < pts.len() && pts[end][c] == level {
            end += 1;
        }
        let next = pts.get(end).map_or(f64::NEG_INFINITY, |p| p[c]);
        let active = project_non_dominated(&pts[..end], c);
        lower[c] = next;
        upper[c] = level;
        sweep(active, c, lower, upper, out);
        start = end;
    }
}

/// Non-dominated subset of `pts` restricted to their first `dims` coordinates.
fn project_non_dominated<'a>(pts: &[&'a [f64]], dims: usize) -> Vec<&'a [f64]> {
    let mut keep: Vec<&[f64]> = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        let pp = &p[..dims];
        let dominated = pts.iter().enumerate().any(|(j, q)| {
            let qq = &q[..dims];
            i != j && (dominates_unchecked(qq, pp, true) || (j < i && qq == pp))
        });
        if !dominated {
            keep.push(p);
        }
    }
    keep
}

/// Exact hypervolume of the region dominated by `points` and dominating
/// `reference`. Dominated points and points not above the reference add
/// nothing.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let above: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.len() == reference.len() && p.iter().zip(reference).all(|(v, r)| v > r))
        .cloned()
        .collect();
    if above.is_empty() {
        return 0.0;
    }
    if reference.len() == 2 {
        return hypervolume_2d(&above, reference);
    }
    let front = pareto_filter(&above);
    match box_decompose(front.points()) {
        Ok(d) => d.clipped_volume(reference),
        Err(_) => 0.0,
    }
}

fn hypervolume_2d(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal)));
    let mut vol = 0.0;
    let mut best_second = reference[1];
    for (x, y) in pts {
        if y > best_second {
            vol += (x - reference[0]) * (y - best_second);
            best_second = y;
        }
    }
    vol
}

/// Greedily picks `target` indices, each time adding the point with the
/// largest marginal hypervolume gain. Ties go to the lowest index.
pub fn greedy_hv_truncate(points: &[Vec<f64>], target: usize, reference: &[f64]) -> Vec<usize> {
    let target = target.min(points.len());
    if target == points.len() {
        return (0..points.len()).collect();
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    let mut taken = vec![false; points.len()];
    let mut current: Vec<Vec<f64>> = Vec::with_capacity(target + 1);
    let mut current_hv = 0.0;
    while chosen.len() < target {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if taken[i] {
                continue;
            }
            current.push(p.clone());
            let gain = hypervolume(&current, reference) - current_hv;
            current.pop();
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let (i, gain) = best.expect("target never exceeds the number of points");
        taken[i] = true;
        chosen.push(i);
        current.push(points[i].clone());
        current_hv += gain;
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn domination_examples() {
        assert!(dominates(&[1.0, 2.0], &[0.0, 2.0], true).unwrap());
        assert!(dominates(&[1.0, 2.0], &[1.0, 2.0], false).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0], true).unwrap());
        assert!(!dominates(&[1.0, 0.0], &[0.0, 1.0], false).unwrap());
        assert!(!dominates(&[0.0, 1.0], &[1.0, 0.0], true).unwrap());
        assert!(matches!(dominates(&[1.0], &[1.0, 2.0], true), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn filter_examples() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 0.0]];
        assert_eq!(pareto_filter(&pts).points(), &pts[..3]);
        assert_eq!(pareto_filter(&[vec![3.0, 4.0]]).points(), &[vec![3.0, 4.0]]);
        let dup = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(pareto_filter(&dup).len(), 1);
        assert!(pareto_filter(&[]).is_empty());
    }

    #[test]
    fn filter_matches_pairwise_brute_force() {
        let mut rng = crate::rng::seeded(1);
        let pts: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let brute: Vec<Vec<f64>> = pts
            .iter()
            .filter(|p| !pts.iter().any(|q| q.iter().zip(p.iter()).all(|(a, b)| a >= b) && q != *p))
            .cloned()
            .collect();
        assert_eq!(pareto_filter(&pts).points(), &brute[..]);
    }

    #[test]
    fn one_dimensional_decomposition_is_an_interval() {
        let d = box_decompose(&[vec![3.0]]).unwrap();
        assert_eq!(d.boxes(), &[Hyperbox { lower: vec![f64::NEG_INFINITY], upper: vec![3.0] }]);
    }

    #[test]
    fn single_point_gives_single_orthant() {
        let d = box_decompose(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.boxes()[0].lower, vec![f64::NEG_INFINITY; 2]);
        assert_eq!(d.boxes()[0].upper, vec![0.0, 0.0]);
    }

    #[test]
    fn two_point_front_membership_agrees_with_domination() {
        let front = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let d = box_decompose(&front).unwrap();
        assert_eq!(d.len(), 2);
        let mut rng = crate::rng::seeded(2);
        for _ in 0..1_000_000 {
            let z = [rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)];
            let hits = d.boxes().iter().filter(|b| b.contains(&z)).count();
            let dominated = front.iter().any(|y| dominates_unchecked(y, &z, false));
            assert!(hits <= 1);
            assert_eq!(hits == 1, dominated, "{z:?}");
        }
    }

    #[test]
    fn dominated_input_is_rejected() {
        assert!(matches!(box_decompose(&[vec![1.0, 1.0], vec![0.0, 0.0]]), Err(Error::DominatedInput)));
        assert!(box_decompose(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-13]]).is_ok());
        assert!(ParetoFront::new(vec![vec![1.0, 1.0], vec![0.5, 1.0]]).is_err());
    }

    #[test]
    fn hypervolume_examples() {
        assert!((hypervolume(&[vec![1.0, 1.0]], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((hypervolume(&[vec![2.0, 1.0], vec![1.0, 2.0]], &[0.0, 0.0]) - 3.0).abs() < 1e-15);
        assert_eq!(hypervolume(&[vec![-1.0, 5.0]], &[0.0, 0.0]), 0.0);
        let three = vec![vec![2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0], vec![1.0, 1.0, 2.0]];
        // 3 unit-thick slabs of volume 2 overlapping pairwise in 1 and triply in 1
        assert!((hypervolume(&three, &[0.0; 3]) - (3.0 * 2.0 - 3.0 * 1.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn greedy_examples() {
        let pts = vec![vec![2.0, 1.0], vec![1.0, 2.0], vec![0.1, 0.1]];
        assert_eq!(greedy_hv_truncate(&pts, 3, &[0.0, 0.0]), vec![0, 1, 2]);
        assert_eq!(greedy_hv_truncate(&pts, 2, &[0.0, 0.0]), vec![0, 1]);
        // equal contributions: lowest index wins
        let sym = vec![vec![1.0, 3.0], vec![3.0, 1.0]];
        assert_eq!(greedy_hv_truncate(&sym, 1, &[0.0, 0.0]), vec![0]);
    }

    fn front_strategy(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), 1..12)
            .prop_map(|pts| pareto_filter(&pts).into_points())
    }

    proptest! {
        #[test]
        fn hypervolume_permutation_invariant_and_ignores_dominated(pts in front_strategy(3), shift in 0usize..12) {
            let r = [-0.1, -0.1, -0.1];
            let hv = hypervolume(&pts, &r);
            let mut rotated = pts.clone();
            let k = shift % rotated.len();
            rotated.rotate_left(k);
            prop_assert!((hypervolume(&rotated, &r) - hv).abs() < 1e-12);
            let mut with_dominated = pts.clone();
            with_dominated.push(pts[0].iter().map(|v| v - 0.05).collect());
            prop_assert!((hypervolume(&with_dominated, &r) - hv).abs() < 1e-12);
        }

        #[test]
        fn decomposition_volume_matches_2d_sweep(pts in front_strategy(2)) {
            let r = [-0.2, -0.3];
            let d = box_decompose(&pts).unwrap();
            prop_assert!((d.clipped_volume(&r) - hypervolume_2d(&pts, &r)).abs() < 1e-12);
        }

        #[test]
        fn strictly_better_front_has_larger_hypervolume(pts in front_strategy(3), eps in 0.001f64..0.2) {
            let r = [-0.1, -0.1, -0.1];
            let better: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v + eps).collect()).collect();
            prop_assert!(hypervolume(&better, &r) > hypervolume(&pts, &r));
        }
    }
}
