//! Local projections `P_I` onto polynomials on a rectangle, their level
//! sets, union measures of Bohr families, and the divergence curve.

use std::collections::HashMap;

use ndarray::IxDyn;
use rayon::prelude::*;
use serde::Serialize;

use super::bohr::{box_moments, mapped_moments, MomentTable, Rect, Role, Scalar, MOMENT_ORDERS};
use super::schedule::{build_saks_partial, LevelKey, SaksPartial, SaksSchedule};
use super::{Block, PieceSource};
use crate::bspline::eval_basis_into;
use crate::error::{Error, Result};
use crate::mesh::{KnotVector, Rectangle, TensorMesh};
use crate::projection::Projector;
use crate::remez::{level_set_measure, remez_constant, Poly1D};
use crate::step::union_area;

/// Monomial coefficients of the Bernstein polynomials of order `k`,
/// `c[i][a]` for `B_i(u) = Σ_a c[i][a] u^a`; these are the B-splines of a
/// single-cell knot vector.
fn bernstein(k: usize) -> Vec<Vec<f64>> {
    let n = k - 1;
    let choose = |n: usize, r: usize| (1..=r).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64);
    (0..k)
        .map(|i| {
            (0..k)
                .map(|a| if a < i { 0.0 } else { choose(n, i) * choose(n - i, a - i) * if (a - i) % 2 == 0 { 1.0 } else { -1.0 } })
                .collect()
        })
        .collect()
}

/// Projection onto polynomials of orders `(k₁, k₂)` on a rectangle, i.e.
/// onto splines with single-cell knot vectors.
#[derive(Debug)]
pub struct LocalProjector {
    orders: (usize, usize),
    projector: Projector,
}

impl LocalProjector {
    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        if k1 > MOMENT_ORDERS || k2 > MOMENT_ORDERS {
            return Err(Error::InvalidArgument(format!("orders above {MOMENT_ORDERS} are not supported")));
        }
        let mesh = TensorMesh::new(vec![KnotVector::uniform(1, k1)?, KnotVector::uniform(1, k2)?])?;
        Ok(Self { orders: (k1, k2), projector: Projector::new(mesh) })
    }

    pub fn orders(&self) -> (usize, usize) {
        self.orders
    }

    /// `P_I f` for a piecewise-constant `f`, with exact moments.
    pub fn project(&self, f: &dyn PieceSource, rect: &Rect<f64>) -> Result<LocalProjection> {
        let (w, h) = (rect.width(), rect.height());
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::InvalidArgument("the rectangle must have positive area".into()));
        }
        let u = |x: f64| ((x - rect.x0) / w).clamp(0.0, 1.0);
        let v = |y: f64| ((y - rect.y0) / h).clamp(0.0, 1.0);
        let mut m: MomentTable = [[0.0; MOMENT_ORDERS]; MOMENT_ORDERS];
        f.visit_blocks(rect, &mut |b| match b {
            Block::Constant(r, val) => {
                let (u0, u1, v0, v1) = (u(r.x0), u(r.x1), v(r.y0), v(r.y1));
                if u0 < u1 && v0 < v1 {
                    box_moments(&mut m, val, (u0, u1), (v0, v1));
                }
            }
            Block::Scaled { rect: r, scale, moments } => {
                mapped_moments(&mut m, scale, moments, ((r.x0 - rect.x0) / w, r.width() / w), ((r.y0 - rect.y0) / h, r.height() / h));
            }
        });
        let (k1, k2) = self.orders;
        let (c1, c2) = (bernstein(k1), bernstein(k2));
        let mut b = ndarray::ArrayD::zeros(IxDyn(&[k1, k2]));
        for i in 0..k1 {
            for j in 0..k2 {
                let mut s = 0.0;
                for (a, ca) in c1[i].iter().enumerate() {
                    for (bb, cb) in c2[j].iter().enumerate() {
                        s += ca * cb * m[a][bb];
                    }
                }
                b[IxDyn(&[i, j])] = s;
            }
        }
        let c = self.projector.solve_moments(b)?;
        let coeffs = (0..k1 * k2).map(|i| c[IxDyn(&[i / k2, i % k2])]).collect();
        Ok(LocalProjection {
            rect: rect.clone(),
            axes: (self.projector.mesh().axis(0).clone(), self.projector.mesh().axis(1).clone()),
            coeffs,
            average: m[0][0],
        })
    }
}

/// `P_I f` in the single-cell B-spline basis of `I`.
#[derive(Debug, Clone)]
pub struct LocalProjection {
    rect: Rect<f64>,
    axes: (KnotVector, KnotVector),
    /// Row-major `k₁ × k₂` coefficients.
    coeffs: Vec<f64>,
    average: f64,
}

fn basis_table(kv: &KnotVector, points: &[f64]) -> Vec<f64> {
    let k = kv.order();
    let mut out = vec![0.0; points.len() * k];
    for (p, chunk) in points.iter().zip(out.chunks_mut(k)) {
        eval_basis_into(kv, *p, chunk).expect("point in [0, 1]");
    }
    out
}

fn midpoints(res: usize) -> Vec<f64> {
    (0..res).map(|i| (i as f64 + 0.5) / res as f64).collect()
}

impl LocalProjection {
    pub fn rect(&self) -> &Rect<f64> {
        &self.rect
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(1/|I|) ∫_I f`
    pub fn average(&self) -> f64 {
        self.average
    }

    fn orders(&self) -> (usize, usize) {
        (self.axes.0.order(), self.axes.1.order())
    }

    /// Value at local coordinates `(u, v) ∈ [0,1]²`.
    pub fn eval_local(&self, u: f64, v: f64) -> f64 {
        let (k1, k2) = self.orders();
        let bu = basis_table(&self.axes.0, &[u]);
        let bv = basis_table(&self.axes.1, &[v]);
        (0..k1).map(|r| bu[r] * (0..k2).map(|s| self.coeffs[r * k2 + s] * bv[s]).sum::<f64>()).sum()
    }

    /// Value at a point of `I`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let u = ((x - self.rect.x0) / self.rect.width()).clamp(0.0, 1.0);
        let v = ((y - self.rect.y0) / self.rect.height()).clamp(0.0, 1.0);
        self.eval_local(u, v)
    }

    /// `|p(u_a, v_b)|` on the `res × res` midpoint grid, row by row in `v`.
    fn grid_rows(&self, res: usize) -> impl IndexedParallelIterator<Item = Vec<f64>> + '_ {
        let (k1, k2) = self.orders();
        let mids = midpoints(res);
        let bu = basis_table(&self.axes.0, &mids);
        let bv = basis_table(&self.axes.1, &mids);
        (0..res).into_par_iter().map(move |b| {
            let cv: Vec<f64> =
                (0..k1).map(|r| (0..k2).map(|s| self.coeffs[r * k2 + s] * bv[b * k2 + s]).sum()).collect();
            (0..res).map(|a| (0..k1).map(|r| bu[a * k1 + r] * cv[r]).sum::<f64>().abs()).collect()
        })
    }

    /// Fraction of the `res × res` midpoints of `I` where `|P_I f| ≥ t`.
    pub fn level_fraction_grid(&self, t: f64, res: usize) -> f64 {
        let hits: usize = self.grid_rows(res).map(|row| row.iter().filter(|&&v| v >= t).count()).sum();
        hits as f64 / (res * res) as f64
    }

    /// Fraction of `I` where `|P_I f| > t`, exact along each of `slices`
    /// vertical lines and averaged over them by the midpoint rule.
    pub fn level_fraction_slices(&self, t: f64, slices: usize) -> Result<f64> {
        let (k1, k2) = self.orders();
        let mids = midpoints(slices);
        let bu = basis_table(&self.axes.0, &mids);
        let total: Result<f64> = (0..slices)
            .into_par_iter()
            .map(|a| {
                let cs: Vec<f64> = (0..k2).map(|s| (0..k1).map(|r| bu[a * k1 + r] * self.coeffs[r * k2 + s]).sum()).collect();
                let q = Poly1D::interpolate(k2, 0.0, 1.0, |v| {
                    let b = basis_table(&self.axes.1, &[v]);
                    cs.iter().zip(&b).map(|(c, n)| c * n).sum()
                })?;
                Ok(level_set_measure(&q, t))
            })
            .sum();
        Ok(total? / slices as f64)
    }

    /// `{|P_I f| ≥ t}` on the `res × res` grid of `I` as rectangles, merging
    /// runs along each row.
    pub fn level_set_rects(&self, t: f64, res: usize) -> Vec<Rect<f64>> {
        let (w, h) = (self.rect.width() / res as f64, self.rect.height() / res as f64);
        let rows: Vec<Vec<f64>> = self.grid_rows(res).collect();
        let mut out = Vec::new();
        for (b, row) in rows.iter().enumerate() {
            let mut a = 0;
            while a < res {
                if row[a] >= t {
                    let start = a;
                    while a < res && row[a] >= t {
                        a += 1;
                    }
                    let x1 = if a == res { self.rect.x1 } else { self.rect.x0 + a as f64 * w };
                    let y1 = if b + 1 == res { self.rect.y1 } else { self.rect.y0 + (b + 1) as f64 * h };
                    out.push(Rect::new(self.rect.x0 + start as f64 * w, x1, self.rect.y0 + b as f64 * h, y1));
                } else {
                    a += 1;
                }
            }
        }
        out
    }
}

/// Outcome of [`projpointwise_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub area: f64,
    pub average: f64,
    /// `c_{k₁} c_{k₂} t`
    pub required: f64,
    pub threshold: f64,
    pub resolution: usize,
    /// `|A(I)|/|I|` on the grid, on the grid of twice the resolution, and
    /// from exact vertical slices.
    pub fraction: f64,
    pub fraction_fine: f64,
    pub fraction_slices: f64,
    /// `|A(I)|` from the grid.
    pub measure: f64,
    /// Grid and fine grid agree within 2%.
    pub richardson_ok: bool,
    /// `|A(I)| ≥ |I|/4`
    pub holds: bool,
}

/// `projpointwise_check` with the default constants `c_k` and a 512² grid.
pub fn projpointwise_check(f: &dyn PieceSource, rect: &Rectangle, orders: (usize, usize), t: f64) -> Result<PointwiseReport> {
    let constants = (remez_constant(orders.0), remez_constant(orders.1));
    projpointwise_check_with(f, rect, orders, t, constants, 512)
}

/// Projects `f` onto polynomials of orders `orders` on `rect` and measures
/// `A(I) = {x ∈ I : |P_I f(x)| ≥ t}`, after checking the hypothesis
/// `(1/|I|) ∫_I f ≥ c₁ c₂ t`.
pub fn projpointwise_check_with(
    f: &dyn PieceSource,
    rect: &Rectangle,
    orders: (usize, usize),
    t: f64,
    constants: (f64, f64),
    resolution: usize,
) -> Result<PointwiseReport> {
    if rect.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rect.dim() });
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let r = Rect::from_rectangle(rect);
    let lp = LocalProjector::new(orders.0, orders.1)?;
    let p = lp.project(f, &r)?;
    let required = constants.0 * constants.1 * t;
    if p.average() < required * (1.0 - 1e-12) {
        return Err(Error::HypothesisNotMet { average: p.average(), required });
    }
    let fraction = p.level_fraction_grid(t, resolution);
    let fraction_fine = p.level_fraction_grid(t, 2 * resolution);
    let fraction_slices = p.level_fraction_slices(t, 2 * resolution)?;
    Ok(PointwiseReport {
        area: r.area(),
        average: p.average(),
        required,
        threshold: t,
        resolution,
        fraction,
        fraction_fine,
        fraction_slices,
        measure: fraction * r.area(),
        richardson_ok: (fraction - fraction_fine).abs() <= 0.02 * fraction_fine,
        holds: fraction >= 0.25,
    })
}

/// `|A_n ∩ I_ℓ^c|` against `|I_n| (c - ℓ/n)`, 1-based `ℓ < n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub n: usize,
    pub l: usize,
    pub measure: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Outcome of [`union_measure_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionReport {
    /// `|∪A_j| / |∪I_j|`
    pub ratio: f64,
    pub union_sets: f64,
    pub union_rects: f64,
    /// `c = min_j |A_j|/|I_j|`
    pub c: f64,
    pub pairs: Vec<PairCheck>,
    pub pairs_ok: bool,
}

/// Measures `|∪A_j|/|∪I_j|` and the pairwise quantities `|A_n ∩ I_ℓ^c|`,
/// exactly in the arithmetic of `T`. Each `A_j` is a union of rectangles
/// that must lie in `I_j`.
pub fn union_measure_check<T: Scalar>(rects: &[Rect<T>], sets: &[Vec<Rect<T>>]) -> Result<UnionReport> {
    if rects.len() != sets.len() {
        return Err(Error::DimensionMismatch { expected: rects.len(), found: sets.len() });
    }
    for (j, (r, a)) in rects.iter().zip(sets).enumerate() {
        if !a.iter().all(|p| r.contains_rect(p)) {
            return Err(Error::NotSubset { index: j + 1 });
        }
    }
    let bounds = |rs: &[Rect<T>]| rs.iter().map(Rect::bounds).collect::<Vec<_>>();
    let all: Vec<Rect<T>> = sets.iter().flatten().cloned().collect();
    let union_sets = union_area(&bounds(&all));
    let union_rects = union_area(&bounds(rects));
    let measures: Vec<T> = sets.iter().map(|a| union_area(&bounds(a))).collect();
    let ratios: Vec<T> = rects.iter().zip(&measures).map(|(r, m)| m.clone() / r.area()).collect();
    let c = ratios.iter().skip(1).fold(ratios.first().cloned().unwrap_or_else(T::zero), |a, b| if *b < a { b.clone() } else { a });
    let mut pairs = Vec::new();
    for n in 1..=rects.len() {
        for l in 1..n {
            let inside: Vec<Rect<T>> = sets[n - 1].iter().filter_map(|p| p.intersect(&rects[l - 1])).collect();
            let measure = measures[n - 1].clone() - union_area(&bounds(&inside));
            let frac = T::from_usize(l).expect("small") / T::from_usize(n).expect("small");
            let bound = rects[n - 1].area() * (c.clone() - frac);
            pairs.push(PairCheck { n, l, measure: measure.approx(), bound: bound.approx(), holds: measure >= bound });
        }
    }
    let pairs_ok = pairs.iter().all(|p| p.holds);
    let ratio = if union_rects > T::zero() { union_sets.approx() / union_rects.approx() } else { 0.0 };
    Ok(UnionReport {
        ratio,
        union_sets: union_sets.approx(),
        union_rects: union_rects.approx(),
        c: c.approx(),
        pairs,
        pairs_ok,
    })
}

/// One row of the divergence curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: usize,
    /// `t_i = (ε_i c_{k₁} c_{k₂})^{-1}`
    pub threshold: f64,
    /// Grid estimate of `|B_i|`.
    pub b_measure: f64,
    /// Median and maximum of `g_n` over the sample points, `n = level`.
    pub median_growth: f64,
    pub max_growth: f64,
    pub diameter_ok: bool,
}

/// `|A(I)|` for a construction rectangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectangleRow {
    pub level: usize,
    pub order: u64,
    pub role: String,
    pub area: f64,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub orders: (usize, usize),
    pub constants: (f64, f64),
    pub resolution: usize,
    pub points: usize,
    pub levels: Vec<LevelRow>,
    pub rectangles: Vec<RectangleRow>,
    /// `growth[n-1][p] = g_n(x_p)`.
    pub growth: Vec<Vec<f64>>,
}

impl DivergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,t,b_measure,median_growth,max_growth\n");
        for r in &self.levels {
            s.push_str(&format!("{},{},{},{},{}\n", r.level, r.threshold, r.b_measure, r.median_growth, r.max_growth));
        }
        s
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

/// `g_n(x) = max |P_I φ_n(x)|` over enumerated rectangles `I ∋ x` of levels
/// `≤ n` with `diam I ≤ 1/n`; `phi` must be `φ_n`.
pub fn growth_at(phi: &SaksPartial, lp: &LocalProjector, x: f64, y: f64) -> Result<f64> {
    let n = phi.n();
    let mut best = 0.0f64;
    for l in 1..=n {
        for (_, r) in phi.containing(l, x, y) {
            if r.diameter() <= 1.0 / n as f64 * (1.0 + 1e-12) {
                best = best.max(lp.project(phi, &r)?.eval(x, y).abs());
            }
        }
    }
    Ok(best)
}

/// Grid estimate of `|B_i|` for `φ = phi`: midpoints of a `res × res` grid
/// lying in some enumerated level-`i` rectangle `I` with `|P_I φ| ≥ t`.
fn b_measure(phi: &SaksPartial, lp: &LocalProjector, level: usize, t: f64, res: usize) -> Result<f64> {
    let mids = midpoints(res);
    let m = phi.spec(level).cells;
    let hits: Result<usize> = (0..phi.square_count(level))
        .into_par_iter()
        .map(|index| {
            let (row, col) = (index / m, index % m);
            let cell = |v: f64| ((v * m as f64) as usize).min(m - 1);
            let mut cache: HashMap<LevelKey, LocalProjection> = HashMap::new();
            let mut hits = 0;
            for &y in mids.iter().filter(|&&y| cell(y) == row) {
                for &x in mids.iter().filter(|&&x| cell(x) == col) {
                    let mut hit = false;
                    for (key, r) in phi.containing(level, x, y) {
                        let p = match cache.get(&key) {
                            Some(p) => p,
                            None => {
                                let p = lp.project(phi, &r)?;
                                cache.entry(key).or_insert(p)
                            }
                        };
                        if p.eval(x, y).abs() >= t {
                            hit = true;
                            break;
                        }
                    }
                    hits += usize::from(hit);
                }
            }
            Ok(hits)
        })
        .sum();
    Ok(hits? as f64 / (res * res) as f64)
}

/// The divergence laboratory: thresholds `t_i`, `|B_i|` on a `res × res`
/// grid, `|A(I)|` for the first group and remainder of each level, and the
/// growth `g_n` at the sample points.
pub fn divergence_curve(
    sched: &SaksSchedule,
    orders: (usize, usize),
    points: &[[f64; 2]],
    n_max: usize,
    resolution: usize,
) -> Result<DivergenceReport> {
    if points.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("sample points must lie in [0,1]²".into()));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let phi = build_saks_partial(sched, n_max)?;
    let lp = LocalProjector::new(orders.0, orders.1)?;
    let constants = (remez_constant(orders.0), remez_constant(orders.1));
    let mut levels = Vec::new();
    let mut rectangles = Vec::new();
    let mut growth = Vec::new();
    for i in 1..=n_max {
        let t = 1.0 / (phi.spec(i).epsilon * constants.0 * constants.1);
        let b = b_measure(&phi, &lp, i, t, resolution)?;
        let first: Vec<_> = phi
            .enumeration(i, 0)
            .take(phi.decomposition(i).n())
            .chain(phi.enumeration(i, 0).filter(|e| e.key.role == Role::Remainder).take(1))
            .collect();
        for e in first {
            let p = lp.project(&phi, &e.rect)?;
            let role = match e.key.role {
                Role::Group(j) => format!("I{j}"),
                Role::Remainder => "J".into(),
            };
            rectangles.push(RectangleRow {
                level: i,
                order: e.order,
                role,
                area: e.rect.area(),
                measure: p.level_fraction_grid(t, 128) * e.rect.area(),
            });
        }
        let phi_n = phi.prefix(i);
        let g: Result<Vec<f64>> = points.par_iter().map(|p| growth_at(&phi_n, &lp, p[0], p[1])).collect();
        let g = g?;
        levels.push(LevelRow {
            level: i,
            threshold: t,
            b_measure: b,
            median_growth: median(&g),
            max_growth: g.iter().copied().fold(0.0, f64::max),
            diameter_ok: sched.diameter_ok(i),
        });
        growth.push(g);
    }
    Ok(DivergenceReport { orders, constants, resolution, points: points.len(), levels, rectangles, growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saks::bohr::{group_rect, rational, BohrDecomposition, Q};
    use crate::saks::schedule::SaksSchedule;
    use crate::step::{RectangleSum, StepFunction};

    fn psi(alpha: f64) -> (BohrDecomposition, RectangleSum) {
        let dec = BohrDecomposition::new(&Rectangle::unit(2), alpha).unwrap();
        let psi = crate::saks::build_psi(&dec, 100_000).unwrap();
        (dec, psi)
    }

    #[test]
    fn projection_reproduces_polynomials_and_averages() {
        let lp = LocalProjector::new(2, 2).unwrap();
        let f = StepFunction::constant(2, 3.0);
        let r = Rect::new(0.2, 0.5, 0.1, 0.9);
        let p = lp.project(&f, &r).unwrap();
        assert!((p.eval(0.3, 0.4) - 3.0).abs() < 1e-12);
        assert!((p.average() - 3.0).abs() < 1e-12);
        // k = 1 gives the average
        let (_, psi) = psi(5.0);
        let lp1 = LocalProjector::new(1, 1).unwrap();
        let r = Rect::new(0.0, 0.6, 0.0, 1.0 / 3.0);
        let p = lp1.project(&psi, &r).unwrap();
        assert!((p.eval(0.5, 0.2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_moments_match_materialized_pieces() {
        let (_, psi) = psi(4.0);
        let phi = SaksPartial::new(&SaksSchedule::trivial(4.0), 1, usize::MAX).unwrap();
        for (k1, k2) in [(1, 1), (2, 3), (4, 4)] {
            let lp = LocalProjector::new(k1, k2).unwrap();
            for r in [Rect::new(0.0, 1.0, 0.0, 1.0), Rect::new(0.1, 0.7, 0.05, 0.4), Rect::new(0.3, 0.35, 0.6, 0.9)] {
                let a = lp.project(&psi, &r).unwrap();
                let b = lp.project(&phi, &r).unwrap();
                assert!((a.average() - b.average()).abs() < 1e-12);
                for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                    assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "{k1}{k2} {x} {y}");
                }
            }
        }
    }

    #[test]
    fn constant_and_piecewise_constant_hypothesis_cases() {
        let c = (remez_constant(2), remez_constant(2));
        let t = 0.7;
        let f = StepFunction::constant(2, c.0 * c.1 * t);
        let r = projpointwise_check_with(&f, &Rectangle::unit(2), (2, 2), t, c, 64).unwrap();
        assert_eq!(r.fraction, 1.0);
        let c1 = remez_constant(1);
        let (_, psi) = psi(5.0);
        let i3 = group_rect(&Rect::new(0.0, 1.0, 0.0, 1.0), 5, 3);
        let rect = i3.to_rectangle();
        let r = projpointwise_check_with(&psi, &rect, (1, 1), 1.0 / (c1 * c1), (c1, c1), 64).unwrap();
        assert_eq!(r.fraction, 1.0);
        let err = projpointwise_check_with(&psi, &rect, (1, 1), 2.0, (c1, c1), 64);
        assert!(matches!(err, Err(Error::HypothesisNotMet { .. })));
    }

    #[test]
    fn bohr_rectangle_level_set() {
        let (_, psi) = psi(5.0);
        let i3 = group_rect(&Rect::new(0.0, 1.0, 0.0, 1.0), 5, 3).to_rectangle();
        let c = remez_constant(2);
        let lp = LocalProjector::new(2, 2).unwrap();
        let avg = lp.project(&psi, &Rect::from_rectangle(&i3)).unwrap().average();
        let r = projpointwise_check(&psi, &i3, (2, 2), avg / (c * c)).unwrap();
        assert!(r.holds && r.richardson_ok, "{r:?}");
        assert!((r.fraction - r.fraction_slices).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn union_checks() {
        let unit = Rect::new(rational(0, 1), rational(1, 1), rational(0, 1), rational(1, 1));
        let rects: Vec<Rect<Q>> = (1..=5).map(|j| group_rect(&unit, 5, j)).collect();
        let full: Vec<Vec<Rect<Q>>> = rects.iter().map(|r| vec![r.clone()]).collect();
        let rep = union_measure_check(&rects, &full).unwrap();
        assert_eq!(rep.ratio, 1.0);
        let half: Vec<Vec<Rect<Q>>> = rects
            .iter()
            .map(|r| {
                let mid = (r.x0.clone() + r.x1.clone()) / rational(2, 1);
                vec![Rect::new(r.x0.clone(), mid, r.y0.clone(), r.y1.clone())]
            })
            .collect();
        let rep = union_measure_check(&rects, &half).unwrap();
        assert_eq!(rep.c, 0.5);
        assert!(rep.pairs_ok);
        assert_eq!(rep.pairs.len(), 10);
        let mut bad = half.clone();
        bad[1] = vec![rects[4].clone()];
        assert!(matches!(union_measure_check(&rects, &bad), Err(Error::NotSubset { index: 2 })));
    }

    #[test]
    fn small_divergence_curve() {
        let s = SaksSchedule::default_levels(2);
        let pts: Vec<[f64; 2]> = crate::projection::sample_points(2, 40, 3).iter().map(|p| [p[0], p[1]]).collect();
        let rep = divergence_curve(&s, (2, 2), &pts, 2, 32).unwrap();
        assert_eq!(rep.levels.len(), 2);
        for l in &rep.levels {
            assert!((0.0..=1.0).contains(&l.b_measure) && l.b_measure > 0.0, "{l:?}");
        }
        for r in &rep.rectangles {
            assert!(r.measure >= 0.0 && r.measure <= r.area);
        }
        assert!(rep.to_csv().starts_with("level,t,b_measure,median_growth,max_growth\n"));
    }
}
