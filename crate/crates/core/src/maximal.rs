//! The strong maximal function of step functions, pointwise domination of
//! the projection by it, and sampled weak-type ratios.

use std::fmt::Write as _;

use ndarray::{ArrayD, Dimension, IxDyn};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projection::{Projector, QuadratureSpec};
use crate::step::{for_each_index, StepFunction};

/// Prefix sums of `|f|` on `f`'s mesh refined by the coordinates of one point.
struct Prefix {
    breaks: Vec<Vec<f64>>,
    cells: ArrayD<f64>,
    sums: ArrayD<f64>,
    strides: Vec<usize>,
    at: Vec<usize>,
}

impl Prefix {
    fn new(f: &StepFunction, x: &[f64]) -> Result<Self> {
        let d = f.dim();
        let mut breaks = f.all_breaks().to_vec();
        let mut at = vec![0; d];
        for mu in 0..d {
            let b = &mut breaks[mu];
            at[mu] = match b.binary_search_by(|v| v.total_cmp(&x[mu])) {
                Ok(p) => p,
                Err(p) => {
                    b.insert(p, x[mu]);
                    p
                }
            };
        }
        let g = f.refine(&breaks)?.abs();
        let shape: Vec<usize> = breaks.iter().map(|b| b.len()).collect();
        let mut sums = ArrayD::zeros(IxDyn(&shape));
        // sums[i] = ∫ over [0, b_{i_0}] × … × [0, b_{i_{d-1}}]
        for (ix, &v) in g.values().indexed_iter() {
            let vol: f64 = ix.slice().iter().zip(&breaks).map(|(&i, b)| b[i + 1] - b[i]).product();
            let up: Vec<usize> = ix.slice().iter().map(|&i| i + 1).collect();
            sums[IxDyn(&up)] = v * vol;
        }
        for mu in 0..d {
            sums.accumulate_axis_inplace(ndarray::Axis(mu), |&prev, cur| *cur += prev);
        }
        let mut strides = vec![1; d];
        for mu in (0..d.saturating_sub(1)).rev() {
            strides[mu] = strides[mu + 1] * shape[mu + 1];
        }
        Ok(Self { breaks, cells: g.into_values(), sums, strides, at })
    }

    /// `∫ |f|` over the box with corner indices `lo[μ] < hi[μ]`.
    fn box_sum(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let d = lo.len();
        let data = self.sums.as_slice().expect("standard layout");
        let mut total = 0.0;
        for mask in 0..(1usize << d) {
            let mut off = 0;
            let mut sign = 1.0;
            for mu in 0..d {
                if mask >> mu & 1 == 1 {
                    off += lo[mu] * self.strides[mu];
                    sign = -sign;
                } else {
                    off += hi[mu] * self.strides[mu];
                }
            }
            total += sign * data[off];
        }
        total
    }

    /// Average over a box by direct summation, free of prefix cancellation.
    fn direct_average(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let ranges: Vec<(usize, usize)> = lo.iter().zip(hi).map(|(&l, &h)| (l, h)).collect();
        let (mut mass, mut vol) = (0.0, 0.0);
        for_each_index(&ranges, |ix| {
            let v: f64 = ix.iter().zip(&self.breaks).map(|(&i, b)| b[i + 1] - b[i]).product();
            mass += self.cells[IxDyn(ix)] * v;
            vol += v;
        });
        mass / vol
    }

    fn volume(&self, lo: &[usize], hi: &[usize]) -> f64 {
        (0..lo.len()).map(|mu| self.breaks[mu][hi[mu]] - self.breaks[mu][lo[mu]]).product()
    }

    /// Largest density of `|f|` over cells of the free axes inside the slab
    /// fixed on the first `depth` axes; bounds every average in the slab.
    fn slab_bound(&self, depth: usize, lo: &[usize], hi: &[usize]) -> f64 {
        let d = lo.len();
        let ranges: Vec<(usize, usize)> = (depth..d).map(|mu| (0, self.breaks[mu].len() - 1)).collect();
        let (mut l, mut h) = (lo.to_vec(), hi.to_vec());
        let mut best = 0.0f64;
        for_each_index(&ranges, |cells| {
            for (i, &c) in cells.iter().enumerate() {
                l[depth + i] = c;
                h[depth + i] = c + 1;
            }
            best = best.max(self.box_sum(&l, &h) / self.volume(&l, &h));
        });
        best
    }
}

struct Search<'a> {
    p: &'a Prefix,
    cap: f64,
    best: f64,
    lo: Vec<usize>,
    hi: Vec<usize>,
    arg: (Vec<usize>, Vec<usize>),
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.best >= self.cap * (1.0 - 4.0 * f64::EPSILON)
    }

    fn run(&mut self, depth: usize) {
        let d = self.lo.len();
        if depth == d {
            let v = self.p.box_sum(&self.lo, &self.hi) / self.p.volume(&self.lo, &self.hi);
            if v > self.best {
                self.best = v;
                self.arg = (self.lo.clone(), self.hi.clone());
            }
            return;
        }
        if depth > 0 && self.p.slab_bound(depth, &self.lo, &self.hi) <= self.best {
            return;
        }
        let at = self.p.at[depth];
        let last = self.p.breaks[depth].len() - 1;
        for l in (0..=at).rev() {
            for h in at..=last {
                if l == h || self.done() {
                    continue;
                }
                self.lo[depth] = l;
                self.hi[depth] = h;
                self.run(depth + 1);
            }
        }
    }
}

/// `M_S f(x)`: the largest average of `|f|` over rectangles in `[0,1]^d`
/// containing `x`, searched exactly over edges at `f`'s breakpoints and at
/// the coordinates of `x`.
pub fn strong_maximal(f: &StepFunction, x: &[f64]) -> Result<f64> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: x.len() });
    }
    if let Some(&v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfDomain { value: v });
    }
    let cap = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if cap == 0.0 {
        return Ok(0.0);
    }
    let p = Prefix::new(f, x)?;
    let d = f.dim();
    let mut s = Search { p: &p, cap, best: 0.0, lo: vec![0; d], hi: vec![0; d], arg: (vec![], vec![]) };
    s.run(0);
    Ok(p.direct_average(&s.arg.0, &s.arg.1))
}

/// `M_S f` at many points, in parallel.
pub fn strong_maximal_many(f: &StepFunction, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.par_iter().map(|x| strong_maximal(f, x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationSample {
    pub point: Vec<f64>,
    pub projection: f64,
    pub maximal: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub samples: Vec<DominationSample>,
    pub max_ratio: f64,
}

impl DominationReport {
    /// CSV with the point coordinates, `Pf`, `M_S f` and the ratio.
    pub fn to_csv(&self) -> String {
        let d = self.samples.first().map_or(0, |s| s.point.len());
        let mut out = String::new();
        for mu in 1..=d {
            let _ = write!(out, "x{mu},");
        }
        out.push_str("pf,msf,ratio\n");
        for s in &self.samples {
            for v in &s.point {
                let _ = write!(out, "{v:e},");
            }
            let _ = writeln!(out, "{:e},{:e},{:e}", s.projection, s.maximal, s.ratio);
        }
        out
    }
}

/// Ratios `|P f(x)| / M_S f(x)` with precomputed maximal values.
pub fn domination_with(p: &Projector, f: &StepFunction, points: &[Vec<f64>], maximal: &[f64]) -> Result<DominationReport> {
    if maximal.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: maximal.len() });
    }
    let c = p.project(f, QuadratureSpec::for_mesh(p.mesh()))?;
    let mut samples = Vec::with_capacity(points.len());
    for (x, &m) in points.iter().zip(maximal) {
        let pf = c.eval(x)?;
        let ratio = if m > 0.0 {
            pf.abs() / m
        } else if pf == 0.0 {
            0.0
        } else {
            return Err(Error::DivisionByZeroRegion { projection: pf });
        };
        samples.push(DominationSample { point: x.clone(), projection: pf, maximal: m, ratio });
    }
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(DominationReport { samples, max_ratio })
}

pub fn domination_ratio(p: &Projector, f: &StepFunction, points: &[Vec<f64>]) -> Result<DominationReport> {
    let maximal = strong_maximal_many(f, points)?;
    domination_with(p, f, points, &maximal)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakTypeReport {
    pub lambdas: Vec<f64>,
    pub measured: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Grid points per axis at which `M_S f` was evaluated.
    pub resolution: usize,
    pub log_power: usize,
}

impl WeakTypeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,measure,rhs,ratio\n");
        for i in 0..self.lambdas.len() {
            let _ = writeln!(out, "{:e},{:e},{:e},{:e}", self.lambdas[i], self.measured[i], self.rhs[i], self.ratios[i]);
        }
        out
    }
}

/// Grid resolution per axis used by [`weak_type_ratio`].
pub fn default_resolution(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 128,
        _ => 16,
    }
}

/// `|{M_S f > λ}|` against `∫ (|f|/λ)(1 + log⁺(|f|/λ))^{d-1}` with the
/// default resolution.
pub fn weak_type_ratio(f: &StepFunction, lambdas: &[f64]) -> Result<WeakTypeReport> {
    weak_type_ratio_with(f, lambdas, default_resolution(f.dim()), f.dim() - 1)
}

/// The level sets are measured at the midpoints of a uniform grid with
/// `resolution` points per axis; the right side is exact.
pub fn weak_type_ratio_with(f: &StepFunction, lambdas: &[f64], resolution: usize, log_power: usize) -> Result<WeakTypeReport> {
    if let Some(&l) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidArgument(format!("λ must be positive, got {l}")));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let d = f.dim();
    let total = resolution.checked_pow(d as u32).ok_or_else(|| Error::SizeCapExceeded { size: usize::MAX, cap: 1 << 24 })?;
    if total > 1 << 24 {
        return Err(Error::SizeCapExceeded { size: total, cap: 1 << 24 });
    }
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut i| {
            let mut x = vec![0.0; d];
            for mu in (0..d).rev() {
                x[mu] = ((i % resolution) as f64 + 0.5) / resolution as f64;
                i /= resolution;
            }
            x
        })
        .collect();
    let m = strong_maximal_many(f, &points)?;
    let mut report = WeakTypeReport {
        lambdas: lambdas.to_vec(),
        measured: vec![],
        rhs: vec![],
        ratios: vec![],
        max_ratio: 0.0,
        resolution,
        log_power,
    };
    for &lambda in lambdas {
        let measured = m.iter().filter(|&&v| v > lambda).count() as f64 / total as f64;
        let rhs = f.integral_map(|v| {
            let t = v.abs() / lambda;
            t * (1.0 + t.ln().max(0.0)).powi(log_power as i32)
        });
        let ratio = if measured == 0.0 { 0.0 } else { measured / rhs };
        report.measured.push(measured);
        report.rhs.push(rhs);
        report.ratios.push(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshKind, Rectangle, TensorMesh};
    use crate::rng;
    use rand::Rng;

    fn rect(lo: &[f64], hi: &[f64]) -> Rectangle {
        Rectangle::from_bounds(lo, hi).unwrap()
    }

    fn random_step(d: usize, cells: usize, seed: u64, nonneg: bool) -> StepFunction {
        let mut rng = rng::stream(seed, &[0x6d61_78]);
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let mut b: Vec<f64> = (1..cells).map(|_| (rng.random::<f64>() * 64.0).round() / 64.0).collect();
                b.extend([0.0, 1.0]);
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            })
            .collect();
        let shape: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let lo = if nonneg { 0.0 } else { -1.0 };
        StepFunction::new(breaks, ArrayD::from_shape_fn(IxDyn(&shape), |_| rng.random_range(lo..2.0))).unwrap()
    }

    /// Exhaustive search over a dyadic grid of edges containing all breakpoints.
    fn brute_maximal_2d(f: &StepFunction, x: &[f64], grid: usize) -> f64 {
        let mut coords: Vec<Vec<f64>> = (0..2)
            .map(|mu| {
                let mut c: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
                c.extend_from_slice(f.breaks(mu));
                c.push(x[mu]);
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            })
            .collect();
        let g = f.abs();
        let mut best = 0.0f64;
        let (cx, cy) = (std::mem::take(&mut coords[0]), std::mem::take(&mut coords[1]));
        for &a in cx.iter().filter(|&&v| v <= x[0]) {
            for &b in cx.iter().filter(|&&v| v >= x[0] && v > a) {
                for &c in cy.iter().filter(|&&v| v <= x[1]) {
                    for &e in cy.iter().filter(|&&v| v >= x[1] && v > c) {
                        let r = rect(&[a, c], &[b, e]);
                        best = best.max(g.integral_over(&r) / r.volume());
                    }
                }
            }
        }
        best
    }

    #[test]
    fn maximal_examples() {
        let one = StepFunction::constant(2, 1.0);
        assert_eq!(strong_maximal(&one, &[0.3, 0.9]).unwrap(), 1.0);
        let f = StepFunction::indicator(&rect(&[0.0, 0.0], &[0.5, 0.5]), 1.0);
        let m = strong_maximal(&f, &[0.75, 0.75]).unwrap();
        assert!((m - 4.0 / 9.0).abs() < 1e-15, "{m}");
        let g = StepFunction::indicator(&rect(&[0.0], &[0.5]), 1.0);
        assert_eq!(strong_maximal(&g, &[0.5]).unwrap(), 1.0);
        assert!(strong_maximal(&g, &[1.2]).is_err());
        assert_eq!(strong_maximal(&StepFunction::constant(2, 0.0), &[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn maximal_matches_brute_force_and_refinement() {
        let mut rng = rng::stream(2, &[]);
        for s in 0..6 {
            let f = random_step(2, 4, s, false);
            for _ in 0..5 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let m = strong_maximal(&f, &x).unwrap();
                let brute = brute_maximal_2d(&f, &x, 16);
                assert!((m - brute).abs() <= 1e-12 * m.max(1.0), "{m} vs {brute}");
                // a finer mesh of the same function does not change M_S f
                let fine: Vec<Vec<f64>> = (0..2)
                    .map(|mu| {
                        let mut b: Vec<f64> = f.breaks(mu).windows(2).flat_map(|w| [w[0], 0.5 * (w[0] + w[1])]).collect();
                        b.push(1.0);
                        b
                    })
                    .collect();
                let m2 = strong_maximal(&f.refine(&fine).unwrap(), &x).unwrap();
                assert!((m - m2).abs() <= 1e-12 * m.max(1.0));
            }
        }
    }

    #[test]
    fn maximal_properties() {
        let mut rng = rng::stream(3, &[]);
        for s in 0..5 {
            let f = random_step(2, 5, 10 + s, true);
            let bump = StepFunction::indicator(&rect(&[0.2, 0.3], &[0.6, 0.5]), 0.7);
            let g = f.add(&bump).unwrap();
            for idx in [[0usize, 0], [1, 2], [3, 1]] {
                let c = f.cell(&[idx[0].min(f.breaks(0).len() - 2), idx[1].min(f.breaks(1).len() - 2)]);
                let mid = [0.5 * (c.side(0).lo + c.side(0).hi), 0.5 * (c.side(1).lo + c.side(1).hi)];
                assert!(strong_maximal(&f, &mid).unwrap() >= f.eval(&mid).unwrap().abs() * (1.0 - 1e-15));
            }
            for _ in 0..10 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let (mf, mg) = (strong_maximal(&f, &x).unwrap(), strong_maximal(&g, &x).unwrap());
                assert!(mf <= mg * (1.0 + 1e-14));
                let scaled = strong_maximal(&f.scale(-2.5), &x).unwrap();
                assert!((scaled - 2.5 * mf).abs() <= 1e-14 * mf);
            }
        }
    }

    #[test]
    fn domination_examples() {
        let f = random_step(2, 6, 5, false);
        let pts = crate::projection::sample_points(2, 100, 4);
        let kv = generate_mesh(MeshKind::Random, 9, 1, 0.0, 1).unwrap();
        let p = Projector::new(TensorMesh::new(vec![kv.clone(), kv]).unwrap());
        assert!(domination_ratio(&p, &f, &pts).unwrap().max_ratio <= 1.0 + 1e-10);

        let c = StepFunction::constant(2, 3.0);
        let kv = generate_mesh(MeshKind::Random, 9, 2, 0.0, 1).unwrap();
        let p = Projector::new(TensorMesh::new(vec![kv.clone(), kv]).unwrap());
        let r = domination_ratio(&p, &c, &pts).unwrap();
        assert!(r.samples.iter().all(|s| (s.ratio - 1.0).abs() < 1e-10));
        assert!(r.to_csv().starts_with("x1,x2,pf,msf,ratio\n"));
        let zero = domination_ratio(&p, &StepFunction::constant(2, 0.0), &pts).unwrap();
        assert_eq!(zero.max_ratio, 0.0);
    }

    #[test]
    fn weak_type_examples() {
        let one = StepFunction::constant(2, 1.0);
        let r = weak_type_ratio_with(&one, &[2.0], 8, 1).unwrap();
        assert_eq!((r.measured[0], r.ratios[0]), (0.0, 0.0));

        let f = StepFunction::indicator(&rect(&[0.0], &[0.25]), 1.0);
        let r = weak_type_ratio(&f, &[0.5]).unwrap();
        assert!((r.measured[0] - 0.5).abs() <= 1.0 / 4096.0);
        assert!((r.rhs[0] - 0.5).abs() < 1e-15);
        assert!((r.ratios[0] - 1.0).abs() <= 2.0 / 4096.0);
        // with one logarithmic factor the right side becomes 2 (1 + log 2) / 4
        let r = weak_type_ratio_with(&f, &[0.5], 4096, 1).unwrap();
        assert!((r.ratios[0] - 1.0 / (1.0 + 2f64.ln())).abs() <= 1e-3);
        assert!(weak_type_ratio(&f, &[0.0]).is_err());
    }
}
