//! Piecewise-constant functions on axis-aligned rectangle meshes of
//! `[0,1]^d`, plus sparse sums of weighted rectangle indicators.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use ndarray::{ArrayD, Dimension, IxDyn};
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mesh::{Interval, Rectangle};
use crate::rng;
use rand::Rng;

/// Cell index of `x` in sorted breakpoints: right-continuous, last cell closed.
pub(crate) fn locate(breaks: &[f64], x: f64) -> usize {
    let cells = breaks.len() - 1;
    breaks.partition_point(|&b| b <= x).saturating_sub(1).min(cells - 1)
}

/// Half-open membership `lo <= x < hi`, closed at `hi = 1`.
pub(crate) fn in_side(side: &Interval, x: f64) -> bool {
    side.lo <= x && (x < side.hi || (side.hi >= 1.0 && x <= side.hi))
}

fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// A step function given by per-axis breakpoints (including 0 and 1) and a
/// value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<Vec<f64>>,
    values: ArrayD<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<Vec<f64>>, values: ArrayD<f64>) -> Result<Self> {
        if breaks.is_empty() {
            return Err(Error::InvalidArgument("a step function needs at least one axis".into()));
        }
        for b in &breaks {
            if b.len() < 2 || b[0] != 0.0 || *b.last().unwrap() != 1.0 {
                return Err(Error::InvalidArgument("breakpoints must start at 0 and end at 1".into()));
            }
            if let Some(index) = b.windows(2).position(|w| !(w[0] < w[1])) {
                return Err(Error::NotSorted { index: index + 1 });
            }
        }
        let shape: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        if values.shape() != shape.as_slice() {
            return Err(Error::DimensionMismatch { expected: shape.iter().product(), found: values.len() });
        }
        Ok(Self { breaks, values })
    }

    pub fn constant(d: usize, c: f64) -> Self {
        Self { breaks: vec![vec![0.0, 1.0]; d], values: ArrayD::from_elem(IxDyn(&vec![1; d]), c) }
    }

    /// `value · 1_R`
    /// `cells` cells per axis with uniform random breakpoints and values
    /// uniform in `[lo, hi)`.
    pub fn random(d: usize, cells: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if d == 0 || cells == 0 || !(lo < hi) {
            return Err(Error::InvalidArgument(format!("need d, cells > 0 and lo < hi, got {d}, {cells}, [{lo}, {hi})")));
        }
        let mut rng = rng::stream(seed, &[0x7273_7465, d as u64, cells as u64]);
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let mut b: Vec<f64> = (1..cells).map(|_| rng.random::<f64>()).filter(|&x| x > 0.0).collect();
                b.push(0.0);
                b.push(1.0);
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            })
            .collect();
        let shape: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let values = ArrayD::from_shape_fn(IxDyn(&shape), |_| rng.random_range(lo..hi));
        Self::new(breaks, values)
    }

    pub fn indicator(rect: &Rectangle, value: f64) -> Self {
        Self::from_rectangles(rect.dim(), &[(rect.clone(), value)])
    }

    /// `Σ v · 1_R` over the given terms (overlaps add up).
    pub fn from_rectangles(d: usize, terms: &[(Rectangle, f64)]) -> Self {
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|mu| {
                let mut b: Vec<f64> = vec![0.0, 1.0];
                for (r, _) in terms {
                    b.push(r.side(mu).lo);
                    b.push(r.side(mu).hi);
                }
                merge_breaks(&b, &[])
            })
            .collect();
        let shape: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let mut values = ArrayD::zeros(IxDyn(&shape));
        for (r, v) in terms {
            let ranges: Vec<(usize, usize)> = (0..d)
                .map(|mu| {
                    let b = &breaks[mu];
                    let s = r.side(mu);
                    (b.partition_point(|&t| t < s.lo), b.partition_point(|&t| t < s.hi))
                })
                .collect();
            for_each_index(&ranges, |ix| values[IxDyn(ix)] += v);
        }
        Self { breaks, values }
    }

    pub fn dim(&self) -> usize {
        self.breaks.len()
    }

    pub fn breaks(&self, axis: usize) -> &[f64] {
        &self.breaks[axis]
    }

    pub fn all_breaks(&self) -> &[Vec<f64>] {
        &self.breaks
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn into_values(self) -> ArrayD<f64> {
        self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn cell(&self, index: &[usize]) -> Rectangle {
        Rectangle::new(index.iter().zip(&self.breaks).map(|(&i, b)| Interval::new(b[i], b[i + 1])).collect())
            .expect("breakpoints lie in [0, 1]")
    }

    fn cell_volume(&self, index: &[usize]) -> f64 {
        index.iter().zip(&self.breaks).map(|(&i, b)| b[i + 1] - b[i]).product()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: point.len() });
        }
        if let Some(&x) = point.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::OutOfDomain { value: x });
        }
        let ix: Vec<usize> = point.iter().zip(&self.breaks).map(|(&x, b)| locate(b, x)).collect();
        Ok(self.values[IxDyn(&ix)])
    }

    pub fn integral(&self) -> f64 {
        self.integral_map(|v| v)
    }

    /// `∫ g(f)`
    pub fn integral_map(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values.indexed_iter().map(|(ix, &v)| if v == 0.0 && g(0.0) == 0.0 { 0.0 } else { g(v) * self.cell_volume(ix.slice()) }).sum()
    }

    /// `∫_R f`
    pub fn integral_over(&self, rect: &Rectangle) -> f64 {
        let weights: Vec<Vec<f64>> = self
            .breaks
            .iter()
            .enumerate()
            .map(|(mu, b)| b.windows(2).map(|w| Interval::new(w[0], w[1]).overlap(&rect.side(mu))).collect())
            .collect();
        let ranges: Vec<(usize, usize)> = weights
            .iter()
            .map(|w| {
                let lo = w.iter().position(|&v| v > 0.0).unwrap_or(w.len());
                let hi = w.iter().rposition(|&v| v > 0.0).map_or(lo, |p| p + 1);
                (lo, hi.max(lo))
            })
            .collect();
        let mut total = 0.0;
        for_each_index(&ranges, |ix| {
            let v = self.values[IxDyn(ix)];
            if v != 0.0 {
                total += v * ix.iter().zip(&weights).map(|(&i, w)| w[i]).product::<f64>();
            }
        });
        total
    }

    /// `|{x : |f(x)| > λ}|`
    pub fn level_measure(&self, lambda: f64) -> f64 {
        self.integral_map(|v| if v.abs() > lambda { 1.0 } else { 0.0 })
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self { breaks: self.breaks.clone(), values: self.values.mapv(g) }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// The same function on a mesh that contains the current breakpoints.
    pub fn refine(&self, breaks: &[Vec<f64>]) -> Result<Self> {
        if breaks.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: breaks.len() });
        }
        let maps: Vec<Vec<usize>> = breaks
            .iter()
            .zip(&self.breaks)
            .map(|(fine, coarse)| {
                if coarse.iter().any(|c| fine.binary_search_by(|v| v.total_cmp(c)).is_err()) {
                    return Err(Error::InvalidArgument("refinement must contain the existing breakpoints".into()));
                }
                Ok(fine.windows(2).map(|w| locate(coarse, w[0])).collect())
            })
            .collect::<Result<_>>()?;
        let shape: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let values = ArrayD::from_shape_fn(IxDyn(&shape), |ix| {
            let c: Vec<usize> = ix.slice().iter().zip(&maps).map(|(&i, m)| m[i]).collect();
            self.values[IxDyn(&c)]
        });
        Self::new(breaks.to_vec(), values)
    }

    /// Pointwise sum on the merged mesh.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let breaks: Vec<Vec<f64>> = self.breaks.iter().zip(&other.breaks).map(|(a, b)| merge_breaks(a, b)).collect();
        let a = self.refine(&breaks)?;
        let b = other.refine(&breaks)?;
        Self::new(breaks, a.values + b.values)
    }

    /// Cells with nonzero value as `(rectangle, value)`.
    pub fn pieces(&self) -> impl Iterator<Item = (Rectangle, f64)> + '_ {
        self.values.indexed_iter().filter(|(_, v)| **v != 0.0).map(|(ix, &v)| (self.cell(ix.slice()), v))
    }

    /// The distinct cell values, sorted.
    pub fn value_set(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn to_json(&self) -> Value {
        json!({ "breaks": self.breaks, "values": crate::bspline::nested_json(&self.values) })
    }
}

/// Calls `f` on every multi-index in the product of half-open ranges.
pub(crate) fn for_each_index(ranges: &[(usize, usize)], mut f: impl FnMut(&[usize])) {
    if ranges.iter().any(|(lo, hi)| lo >= hi) {
        return;
    }
    let mut ix: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&ix);
        let mut mu = ranges.len();
        loop {
            if mu == 0 {
                return;
            }
            mu -= 1;
            ix[mu] += 1;
            if ix[mu] < ranges[mu].1 {
                break;
            }
            ix[mu] = ranges[mu].0;
        }
    }
}

const BUCKETS: usize = 512;

/// `Σ v_r 1_{R_r}` kept as a list of terms, with a bucket index on the first
/// axis for point evaluation. Rectangles are half-open on the right except at 1.
#[derive(Debug, Clone)]
pub struct RectangleSum {
    d: usize,
    terms: Vec<(Rectangle, f64)>,
    buckets: Vec<Vec<u32>>,
}

impl RectangleSum {
    pub fn new(d: usize) -> Self {
        Self { d, terms: Vec::new(), buckets: vec![Vec::new(); BUCKETS] }
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Rectangle, f64)>) -> Result<Self> {
        let mut s = Self::new(d);
        for (r, v) in terms {
            s.push(r, v)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, rect: Rectangle, value: f64) -> Result<()> {
        if rect.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: rect.dim() });
        }
        if rect.volume() == 0.0 || value == 0.0 {
            return Ok(());
        }
        let id = u32::try_from(self.terms.len()).map_err(|_| Error::MeshBlowup { count: "rectangle terms".into(), cap: u32::MAX as usize })?;
        let s = rect.side(0);
        let lo = ((s.lo * BUCKETS as f64) as usize).min(BUCKETS - 1);
        let hi = ((s.hi * BUCKETS as f64).ceil() as usize).clamp(lo + 1, BUCKETS);
        for b in &mut self.buckets[lo..hi] {
            b.push(id);
        }
        self.terms.push((rect, value));
        Ok(())
    }

    pub fn extend(&mut self, other: &RectangleSum, scale: f64) -> Result<()> {
        for (r, v) in &other.terms {
            self.push(r.clone(), v * scale)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Rectangle, f64)] {
        &self.terms
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let b = ((point[0] * BUCKETS as f64) as usize).min(BUCKETS - 1);
        self.buckets[b]
            .iter()
            .map(|&id| &self.terms[id as usize])
            .filter(|(r, _)| r.sides().iter().zip(point).all(|(s, &x)| in_side(s, x)))
            .map(|(_, v)| v)
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.terms.iter().map(|(r, v)| v * r.volume()).sum()
    }

    /// `∫_R f`
    pub fn integral_over(&self, rect: &Rectangle) -> f64 {
        let s = rect.side(0);
        let lo = ((s.lo * BUCKETS as f64) as usize).min(BUCKETS - 1);
        let hi = ((s.hi * BUCKETS as f64).ceil() as usize).clamp(lo + 1, BUCKETS);
        let mut ids: Vec<u32> = self.buckets[lo..hi].iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids.iter().map(|&id| &self.terms[id as usize]).map(|(r, v)| v * r.overlap_volume(rect)).sum()
    }

    /// Materializes on the merged breakpoint mesh; fails past `cap` cells.
    pub fn to_step(&self, cap: usize) -> Result<StepFunction> {
        let cells: f64 = (0..self.d)
            .map(|mu| {
                let mut b: Vec<f64> = self.terms.iter().flat_map(|(r, _)| [r.side(mu).lo, r.side(mu).hi]).collect();
                b.sort_by(f64::total_cmp);
                b.dedup();
                (b.len() + 1) as f64
            })
            .product();
        if cells > cap as f64 {
            return Err(Error::MeshBlowup { count: format!("{cells:.0} cells"), cap });
        }
        Ok(StepFunction::from_rectangles(self.d, &self.terms))
    }
}

/// Exact union area of axis-aligned rectangles given by per-axis `(lo, hi)`
/// bounds, by coordinate compression. Works for floats and exact rationals.
pub fn union_area<T>(rects: &[Vec<(T, T)>]) -> T
where
    T: Clone + PartialOrd + Zero + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let Some(first) = rects.first() else { return T::zero() };
    let d = first.len();
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    let coords: Vec<Vec<T>> = (0..d)
        .map(|mu| {
            let mut c: Vec<T> = rects.iter().flat_map(|r| [r[mu].0.clone(), r[mu].1.clone()]).collect();
            c.sort_by(cmp);
            c.dedup_by(|a, b| a == b);
            c
        })
        .collect();
    let shape: Vec<usize> = coords.iter().map(|c| c.len().saturating_sub(1)).collect();
    if shape.contains(&0) {
        return T::zero();
    }
    let mut covered = ArrayD::from_elem(IxDyn(&shape), false);
    for r in rects {
        let ranges: Vec<(usize, usize)> = (0..d)
            .map(|mu| {
                let c = &coords[mu];
                (c.partition_point(|v| cmp(v, &r[mu].0) == Ordering::Less), c.partition_point(|v| cmp(v, &r[mu].1) == Ordering::Less))
            })
            .collect();
        for_each_index(&ranges, |ix| covered[IxDyn(ix)] = true);
    }
    let mut total = T::zero();
    for (ix, &c) in covered.indexed_iter() {
        if c {
            let vol = ix
                .slice()
                .iter()
                .enumerate()
                .fold(None::<T>, |acc, (mu, &i)| {
                    let len = coords[mu][i + 1].clone() - coords[mu][i].clone();
                    Some(match acc {
                        None => len,
                        Some(a) => a * len,
                    })
                })
                .unwrap_or_else(T::zero);
            total = total + vol;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::Rng;

    fn rect(lo: &[f64], hi: &[f64]) -> Rectangle {
        Rectangle::from_bounds(lo, hi).unwrap()
    }

    pub(crate) fn random_step(d: usize, cells: usize, seed: u64) -> StepFunction {
        let mut rng = rng::stream(seed, &[0x73746570]);
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let mut b: Vec<f64> = (1..cells).map(|_| rng.random::<f64>()).collect();
                b.push(0.0);
                b.push(1.0);
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            })
            .collect();
        let shape: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let values = ArrayD::from_shape_fn(IxDyn(&shape), |_| rng.random_range(-2.0..3.0));
        StepFunction::new(breaks, values).unwrap()
    }

    #[test]
    fn construction_and_eval() {
        let f = StepFunction::indicator(&rect(&[0.0, 0.0], &[0.5, 0.5]), 1.0);
        assert_eq!(f.breaks(0), &[0.0, 0.5, 1.0]);
        assert_eq!(f.eval(&[0.25, 0.25]).unwrap(), 1.0);
        assert_eq!(f.eval(&[0.5, 0.25]).unwrap(), 0.0);
        assert_eq!(f.eval(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(f.integral(), 0.25);
        assert!(f.eval(&[1.5, 0.0]).is_err());
        assert!(StepFunction::new(vec![vec![0.0, 0.5, 0.5, 1.0]], ArrayD::zeros(IxDyn(&[3]))).is_err());
        assert!(StepFunction::new(vec![vec![0.0, 1.0]], ArrayD::zeros(IxDyn(&[2]))).is_err());
    }

    #[test]
    fn integrals_over_rectangles_match_pieces() {
        let f = random_step(2, 7, 3);
        let r = rect(&[0.1, 0.3], &[0.77, 0.9]);
        let direct: f64 = f.pieces().map(|(c, v)| v * c.overlap_volume(&r)).sum();
        assert!((f.integral_over(&r) - direct).abs() < 1e-14);
        assert!((f.integral_over(&Rectangle::unit(2)) - f.integral()).abs() < 1e-14);
    }

    #[test]
    fn sum_and_refine() {
        let f = random_step(2, 5, 1);
        let g = random_step(2, 6, 2);
        let h = f.add(&g).unwrap();
        let mut rng = rng::stream(9, &[]);
        for _ in 0..200 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            assert!((h.eval(&p).unwrap() - f.eval(&p).unwrap() - g.eval(&p).unwrap()).abs() < 1e-14);
        }
        assert!((h.integral() - f.integral() - g.integral()).abs() < 1e-13);
    }

    #[test]
    fn rectangle_sum_matches_materialized_step() {
        let mut rng = rng::stream(4, &[]);
        let mut terms = Vec::new();
        for _ in 0..40 {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            let (c, e): (f64, f64) = (rng.random(), rng.random());
            terms.push((rect(&[a.min(b), c.min(e)], &[a.max(b), c.max(e)]), rng.random_range(0.5..2.0)));
        }
        let sum = RectangleSum::from_terms(2, terms.clone()).unwrap();
        let step = sum.to_step(1 << 20).unwrap();
        for _ in 0..500 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            assert!((sum.eval(&p) - step.eval(&p).unwrap()).abs() < 1e-12);
        }
        assert!((sum.integral() - step.integral()).abs() < 1e-12);
        let r = rect(&[0.2, 0.1], &[0.6, 0.95]);
        assert!((sum.integral_over(&r) - step.integral_over(&r)).abs() < 1e-12);
        assert!(matches!(sum.to_step(10), Err(Error::MeshBlowup { .. })));
    }

    #[test]
    fn union_area_exact_and_float() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        // the N = 5 staircase from the origin
        let rects: Vec<Vec<(BigRational, BigRational)>> =
            (1..=5).map(|j| vec![(q(0, 1), q(j, 5)), (q(0, 1), q(1, j))]).collect();
        assert_eq!(union_area(&rects), q(137, 300));
        let f: Vec<Vec<(f64, f64)>> = vec![vec![(0.0, 0.5), (0.0, 0.5)], vec![(0.25, 0.75), (0.25, 0.75)]];
        assert!((union_area(&f) - 0.4375).abs() < 1e-15);
        assert_eq!(union_area::<f64>(&[]), 0.0);
    }

    proptest! {
        #[test]
        fn refinement_preserves_integral(seed in any::<u64>(), extra in proptest::collection::vec(0.0f64..1.0, 0..10)) {
            let f = random_step(2, 4, seed);
            let breaks: Vec<Vec<f64>> = f.all_breaks().iter().map(|b| merge_breaks(b, &extra)).collect();
            let g = f.refine(&breaks).unwrap();
            prop_assert!((g.integral() - f.integral()).abs() < 1e-13);
            prop_assert_eq!(g.value_set(), f.value_set());
        }
    }
}
