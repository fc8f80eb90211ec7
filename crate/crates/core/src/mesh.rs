//! Knot vectors, tensor meshes and axis-aligned rectangles.
//!
//! Knots live in `[0, 1]` with both boundary knots repeated `k` times.
//! Indices in the Rust API are 0-based: basis function `i` is supported on
//! `[t[i], t[i + k]]` and cell `i` is `[t[i], t[i + 1]]`. Files written by
//! the CLI use 1-based indices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Convex hull of the two intervals.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Length of the intersection, zero when disjoint.
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }
}

/// An axis-parallel rectangle in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rectangle {
    sides: Vec<Interval>,
}

impl Rectangle {
    pub fn new(sides: Vec<Interval>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidArgument("rectangle needs at least one side".into()));
        }
        if let Some(s) = sides.iter().find(|s| !(s.lo <= s.hi) || !s.lo.is_finite() || !s.hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid side [{}, {}]", s.lo, s.hi)));
        }
        Ok(Self { sides })
    }

    pub fn unit(d: usize) -> Self {
        Self { sides: vec![Interval::new(0.0, 1.0); d] }
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        Self::new(lo.iter().zip(hi).map(|(&a, &b)| Interval { lo: a, hi: b }).collect())
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[Interval] {
        &self.sides
    }

    pub fn side(&self, axis: usize) -> Interval {
        self.sides[axis]
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().map(Interval::len).product()
    }

    /// Euclidean length of the side-length vector.
    pub fn diameter(&self) -> f64 {
        self.sides.iter().map(|s| s.len() * s.len()).sum::<f64>().sqrt()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && self.sides.iter().zip(point).all(|(s, &x)| s.contains(x))
    }

    pub fn overlap_volume(&self, other: &Rectangle) -> f64 {
        self.sides.iter().zip(&other.sides).map(|(a, b)| a.overlap(b)).product()
    }

    pub fn intersect(&self, other: &Rectangle) -> Option<Rectangle> {
        let sides: Option<Vec<_>> = self.sides.iter().zip(&other.sides).map(|(a, b)| a.intersect(b)).collect();
        sides.map(|sides| Rectangle { sides })
    }
}

/// The three intervals attached to an index pair `(i, j)` on one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairIntervals {
    /// `[t_i, t_{i+1}]`
    pub cell: Interval,
    /// `[t_min(i,j), t_max(i,j)+1]`, the convex hull of the two cells.
    pub hull: Interval,
    /// `[t_min(i,j), t_max(i,j)+k]`, the hull of the two supports.
    pub support_hull: Interval,
}

#[derive(Serialize, Deserialize)]
struct KnotVectorRepr {
    k: usize,
    knots: Vec<f64>,
}

/// A validated knot sequence of order `k` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnotVectorRepr", into = "KnotVectorRepr")]
pub struct KnotVector {
    order: usize,
    knots: Vec<f64>,
}

impl TryFrom<KnotVectorRepr> for KnotVector {
    type Error = Error;

    fn try_from(r: KnotVectorRepr) -> Result<Self> {
        KnotVector::new(r.knots, r.k)
    }
}

impl From<KnotVector> for KnotVectorRepr {
    fn from(kv: KnotVector) -> Self {
        KnotVectorRepr { k: kv.order, knots: kv.knots }
    }
}

impl KnotVector {
    /// Validates `raw` as a knot sequence of order `k`.
    ///
    /// Comparisons are exact: knots must be sorted, the first and last `k`
    /// knots must equal 0 and 1, and no value may appear more than `k` times.
    pub fn new(raw: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidOrder(k));
        }
        if raw.is_empty() {
            return Err(Error::EmptyKnots);
        }
        if let Some(index) = raw.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFiniteKnot { index });
        }
        if let Some(index) = raw.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::NotSorted { index: index + 1 });
        }
        let len = raw.len();
        if len < k + 1 {
            return Err(Error::BadBoundary { order: k });
        }
        let left_ok = raw[..k].iter().all(|&t| t == 0.0);
        let right_ok = raw[len - k..].iter().all(|&t| t == 1.0);
        if !left_ok || !right_ok {
            return Err(Error::BadBoundary { order: k });
        }
        if let Some(index) = (0..len - k).find(|&i| raw[i] >= raw[i + k]) {
            return Err(Error::MultiplicityTooHigh { index, value: raw[index], order: k });
        }
        Ok(Self { order: k, knots: raw })
    }

    /// Uniform knots with `cells` interior cells.
    pub fn uniform(cells: usize, k: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InfeasibleSize("a mesh needs at least one cell".into()));
        }
        let interior = (1..cells).map(|i| i as f64 / cells as f64);
        Self::from_breakpoints(interior, k)
    }

    /// Builds knots from the interior breakpoints, clamping both ends `k` times.
    pub fn from_breakpoints(interior: impl IntoIterator<Item = f64>, k: usize) -> Result<Self> {
        let mut knots = vec![0.0; k];
        knots.extend(interior);
        knots.extend(std::iter::repeat_n(1.0, k));
        Self::new(knots, k)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of B-splines `n`.
    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.order
    }

    /// Distinct breakpoints, `0` and `1` included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.knots.clone();
        b.dedup();
        b
    }

    /// Knot indices `i` with `t_i < t_{i+1}`, i.e. the cells of positive length.
    pub fn cell_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (self.order - 1..self.basis_count()).filter(move |&i| self.knots[i] < self.knots[i + 1])
    }

    pub fn cell(&self, i: usize) -> Interval {
        Interval::new(self.knots[i], self.knots[i + 1])
    }

    /// Knot index `i` of the cell containing `x`, with `t_i <= x < t_{i+1}`;
    /// the last cell is closed at `x = 1`.
    pub fn span(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain { value: x });
        }
        let k = self.order;
        let n = self.basis_count();
        let p = self.knots.partition_point(|&t| t <= x);
        Ok(p.saturating_sub(1).clamp(k - 1, n - 1))
    }

    /// The intervals `I_i`, `I_ij` and `E_ij` for 0-based indices.
    pub fn intervals(&self, i: usize, j: usize) -> Result<PairIntervals> {
        let n = self.basis_count();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
        let t = &self.knots;
        let (lo, hi) = (i.min(j), i.max(j));
        Ok(PairIntervals {
            cell: Interval::new(t[i], t[i + 1]),
            hull: Interval::new(t[lo], t[hi + 1]),
            support_hull: Interval::new(t[lo], t[hi + self.order]),
        })
    }

    /// `|Δ|`, the largest cell length.
    pub fn diameter(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Greville abscissa of basis function `i`.
    pub fn greville(&self, i: usize) -> f64 {
        let k = self.order;
        if k == 1 {
            return 0.5 * (self.knots[i] + self.knots[i + 1]);
        }
        self.knots[i + 1..i + k].iter().sum::<f64>() / (k - 1) as f64
    }
}

/// Family used by [`generate_mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Uniform,
    Random,
    Geometric,
}

impl std::str::FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "random" => Ok(Self::Random),
            "geometric" => Ok(Self::Geometric),
            other => Err(Error::InvalidArgument(format!("unknown mesh kind '{other}'"))),
        }
    }
}

/// Generates a knot vector with `n` basis functions of order `k`.
///
/// `param` is the ratio between consecutive cell lengths for geometric
/// meshes and is ignored otherwise. Random meshes draw the `n - k` interior
/// knots uniformly and resample collisions, so every interior knot is simple.
pub fn generate_mesh(kind: MeshKind, n: usize, k: usize, param: f64, seed: u64) -> Result<KnotVector> {
    if k == 0 {
        return Err(Error::InvalidOrder(k));
    }
    if n < k.max(1) {
        return Err(Error::InfeasibleSize(format!("need n >= k, got n = {n}, k = {k}")));
    }
    let cells = n - k + 1;
    let interior: Vec<f64> = match kind {
        MeshKind::Uniform => return KnotVector::uniform(cells, k),
        MeshKind::Random => {
            let mut rng = rng::stream(seed, &[0x6d65_7368, n as u64, k as u64]);
            let mut pts: Vec<f64> = Vec::with_capacity(cells - 1);
            while pts.len() < cells - 1 {
                let x: f64 = rng.random();
                if x > 0.0 && !pts.contains(&x) {
                    pts.push(x);
                }
            }
            pts.sort_by(f64::total_cmp);
            pts
        }
        MeshKind::Geometric => {
            if !(param > 0.0 && param.is_finite()) {
                return Err(Error::InvalidArgument(format!("geometric ratio must be positive, got {param}")));
            }
            let mut lengths: Vec<f64> = (0..cells).map(|i| param.powi(i as i32)).collect();
            let mut total: f64 = lengths.iter().sum();
            if !total.is_finite() {
                let top = (cells - 1) as i32;
                lengths = (0..cells).map(|i| param.powi(i as i32 - top)).collect();
                total = lengths.iter().sum();
            }
            let mut acc = 0.0;
            lengths[..cells - 1]
                .iter()
                .map(|l| {
                    acc += l / total;
                    acc
                })
                .collect()
        }
    };
    KnotVector::from_breakpoints(interior, k)
        .map_err(|e| Error::InfeasibleSize(format!("{kind:?} mesh with {cells} cells is not representable: {e}")))
}

/// A tensor-product mesh: one knot vector per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<KnotVector>", into = "Vec<KnotVector>")]
pub struct TensorMesh {
    axes: Vec<KnotVector>,
}

impl TryFrom<Vec<KnotVector>> for TensorMesh {
    type Error = Error;

    fn try_from(axes: Vec<KnotVector>) -> Result<Self> {
        TensorMesh::new(axes)
    }
}

impl From<TensorMesh> for Vec<KnotVector> {
    fn from(m: TensorMesh) -> Self {
        m.axes
    }
}

impl From<KnotVector> for TensorMesh {
    fn from(kv: KnotVector) -> Self {
        Self { axes: vec![kv] }
    }
}

impl TensorMesh {
    pub fn new(axes: Vec<KnotVector>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("a tensor mesh needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[KnotVector] {
        &self.axes
    }

    pub fn axis(&self, mu: usize) -> &KnotVector {
        &self.axes[mu]
    }

    /// Basis counts `(n_1, ..., n_d)`.
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(KnotVector::basis_count).collect()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.axes.iter().map(KnotVector::order).collect()
    }

    /// `|Δ| = max_μ |Δ_μ|`.
    pub fn diameter(&self) -> f64 {
        self.axes.iter().map(KnotVector::diameter).fold(0.0, f64::max)
    }

    /// Cell `I_i` for a multi-index of knot indices.
    pub fn cell(&self, index: &[usize]) -> Rectangle {
        Rectangle { sides: self.axes.iter().zip(index).map(|(kv, &i)| kv.cell(i)).collect() }
    }

    /// Knot indices of the cell containing `point`.
    pub fn cell_of(&self, point: &[f64]) -> Result<Vec<usize>> {
        self.check_point(point)?;
        self.axes.iter().zip(point).map(|(kv, &x)| kv.span(x)).collect()
    }

    /// `I_ij`: product of the per-axis cell hulls.
    pub fn hull_rect(&self, i: &[usize], j: &[usize]) -> Result<Rectangle> {
        let sides = self.pair_intervals(i, j)?.into_iter().map(|p| p.hull).collect();
        Ok(Rectangle { sides })
    }

    /// `E_ij`: product of the per-axis support hulls.
    pub fn support_rect(&self, i: &[usize], j: &[usize]) -> Result<Rectangle> {
        let sides = self.pair_intervals(i, j)?.into_iter().map(|p| p.support_hull).collect();
        Ok(Rectangle { sides })
    }

    fn pair_intervals(&self, i: &[usize], j: &[usize]) -> Result<Vec<PairIntervals>> {
        for v in [i, j] {
            if v.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
            }
        }
        self.axes.iter().enumerate().map(|(mu, kv)| kv.intervals(i[mu], j[mu])).collect()
    }

    pub(crate) fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: point.len() });
        }
        match point.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            Some(&value) => Err(Error::OutOfDomain { value }),
            None => Ok(()),
        }
    }
}
