//! Orthogonal projection onto tensor-product spline spaces, its Dirichlet
//! kernel, kernel-bound statistics, Lebesgue constants and sup errors.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use ndarray::{Array1, ArrayD, Axis, IxDyn};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bspline::{eval_basis, eval_basis_into, integrate_basis_range, SplineCoeffs, TensorCoeffs};
use crate::error::{Error, Result};
use crate::gram::{assemble_gram, inverse_entries, BandedSpd};
use crate::mesh::{KnotVector, Rectangle, TensorMesh};
use crate::quadrature::GaussRule;
use crate::remez::Poly1D;
use crate::rng;
use crate::step::{for_each_index, RectangleSum, StepFunction};

/// A real function on `[0,1]^d`.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Visits a decomposition `f = Σ v 1_R` if the field has one and returns
    /// whether it did. Moments of such fields are computed exactly.
    fn for_each_piece(&self, _visit: &mut dyn FnMut(&Rectangle, f64)) -> bool {
        false
    }
}

/// A field backed by a closure.
pub struct FnField<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(d: usize, f: F) -> Self {
        Self { d, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> ScalarField for FnField<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl ScalarField for StepFunction {
    fn dim(&self) -> usize {
        StepFunction::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        StepFunction::eval(self, x).unwrap_or(f64::NAN)
    }

    fn for_each_piece(&self, visit: &mut dyn FnMut(&Rectangle, f64)) -> bool {
        for (r, v) in self.pieces() {
            visit(&r, v);
        }
        true
    }
}

impl ScalarField for RectangleSum {
    fn dim(&self) -> usize {
        RectangleSum::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        RectangleSum::eval(self, x)
    }

    fn for_each_piece(&self, visit: &mut dyn FnMut(&Rectangle, f64)) -> bool {
        for (r, v) in self.terms() {
            visit(r, *v);
        }
        true
    }
}

/// Named test functions for experiments: `const`, `x`, `xy`, `x2`,
/// `sin2pi` (product of `sin 2πx_μ`), `runge`, `abs`.
pub fn named_field(name: &str, d: usize) -> Result<FnField<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>>> {
    use std::f64::consts::PI;
    let f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync> = match name {
        "const" => Box::new(|_| 1.0),
        "x" => Box::new(|x| x[0]),
        "xy" => Box::new(|x| x.iter().product()),
        "x2" => Box::new(|x| x[0] * x[0]),
        "sin2pi" => Box::new(|x| x.iter().map(|v| (2.0 * PI * v).sin()).product()),
        "runge" => Box::new(|x| 1.0 / (1.0 + 25.0 * x.iter().map(|v| (2.0 * v - 1.0).powi(2)).sum::<f64>())),
        "abs" => Box::new(|x| x.iter().map(|v| (v - 1.0 / 3.0).abs()).sum()),
        other => return Err(Error::InvalidArgument(format!("unknown function '{other}'"))),
    };
    Ok(FnField::new(d, f))
}

/// Gauss points per cell and axis for smooth fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureSpec {
    pub points: usize,
}

impl QuadratureSpec {
    pub fn new(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one point per cell".into()));
        }
        Ok(Self { points })
    }

    /// `k + 2` points for the largest order of the mesh.
    pub fn for_mesh(mesh: &TensorMesh) -> Self {
        Self { points: mesh.orders().into_iter().max().unwrap_or(1) + 2 }
    }
}

struct AxisQuad {
    first: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `values[q * k + r] = N_{first + r}(nodes[q])`
    values: Vec<f64>,
}

fn axis_quadrature(kv: &KnotVector, m: usize) -> Vec<AxisQuad> {
    let k = kv.order();
    let rule = GaussRule::cached(m);
    let mut buf = vec![0.0; k];
    kv.cell_indices()
        .map(|c| {
            let cell = kv.cell(c);
            let mut q = AxisQuad { first: c + 1 - k, nodes: vec![], weights: vec![], values: vec![] };
            for (x, w) in rule.on(cell.lo, cell.hi) {
                eval_basis_into(kv, x, &mut buf).expect("node inside [0, 1]");
                q.nodes.push(x);
                q.weights.push(w);
                q.values.extend_from_slice(&buf);
            }
            q
        })
        .collect()
}

/// Projection onto the spline space of a tensor mesh, with cached Gram
/// matrices and lazily computed inverse entries.
#[derive(Debug)]
pub struct Projector {
    mesh: TensorMesh,
    grams: Vec<BandedSpd>,
    inverses: Vec<OnceLock<Result<DMatrix<f64>>>>,
}

impl Projector {
    pub fn new(mesh: TensorMesh) -> Self {
        let grams = mesh.axes().iter().map(assemble_gram).collect();
        let inverses = (0..mesh.dim()).map(|_| OnceLock::new()).collect();
        Self { mesh, grams, inverses }
    }

    pub fn mesh(&self) -> &TensorMesh {
        &self.mesh
    }

    pub fn gram(&self, axis: usize) -> &BandedSpd {
        &self.grams[axis]
    }

    /// Dense inverse Gram entries of one axis.
    pub fn inverse(&self, axis: usize) -> Result<&DMatrix<f64>> {
        self.inverses[axis].get_or_init(|| inverse_entries(&self.grams[axis])).as_ref().map_err(Clone::clone)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.mesh.dim() {
            return Err(Error::DimensionMismatch { expected: self.mesh.dim(), found: d });
        }
        Ok(())
    }

    /// `b_j = ⟨f, N_j⟩`. Piecewise-constant fields are integrated exactly
    /// piece by piece; other fields use `q.points` Gauss nodes per cell and axis.
    pub fn moments(&self, f: &dyn ScalarField, q: QuadratureSpec) -> Result<ArrayD<f64>> {
        self.check_dim(f.dim())?;
        let d = self.mesh.dim();
        let mut b = ArrayD::zeros(IxDyn(&self.mesh.shape()));
        let mut failure = None;
        let piecewise = f.for_each_piece(&mut |rect, v| {
            if failure.is_some() {
                return;
            }
            let per_axis: Result<Vec<(usize, Vec<f64>)>> = self
                .mesh
                .axes()
                .iter()
                .zip(rect.sides())
                .map(|(kv, s)| integrate_basis_range(kv, s.lo.clamp(0.0, 1.0), s.hi.clamp(0.0, 1.0)))
                .collect();
            match per_axis {
                Ok(per_axis) => {
                    let ranges: Vec<(usize, usize)> = per_axis.iter().map(|(_, w)| (0, w.len())).collect();
                    let mut full = vec![0usize; d];
                    for_each_index(&ranges, |ix| {
                        let mut w = v;
                        for mu in 0..d {
                            w *= per_axis[mu].1[ix[mu]];
                            full[mu] = per_axis[mu].0 + ix[mu];
                        }
                        b[IxDyn(&full)] += w;
                    });
                }
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if piecewise {
            return Ok(b);
        }
        let quads: Vec<Vec<AxisQuad>> = self.mesh.axes().iter().map(|kv| axis_quadrature(kv, q.points)).collect();
        let orders = self.mesh.orders();
        let cell_ranges: Vec<(usize, usize)> = quads.iter().map(|a| (0, a.len())).collect();
        let node_ranges: Vec<(usize, usize)> = vec![(0, q.points); d];
        let block_ranges: Vec<(usize, usize)> = orders.iter().map(|&k| (0, k)).collect();
        let mut point = vec![0.0; d];
        let mut full = vec![0usize; d];
        for_each_index(&cell_ranges, |cells| {
            let qs: Vec<&AxisQuad> = cells.iter().enumerate().map(|(mu, &c)| &quads[mu][c]).collect();
            for_each_index(&node_ranges, |nodes| {
                let mut w = 1.0;
                for mu in 0..d {
                    point[mu] = qs[mu].nodes[nodes[mu]];
                    w *= qs[mu].weights[nodes[mu]];
                }
                let fw = w * f.eval(&point);
                if fw == 0.0 {
                    return;
                }
                for_each_index(&block_ranges, |r| {
                    let mut v = fw;
                    for mu in 0..d {
                        v *= qs[mu].values[nodes[mu] * orders[mu] + r[mu]];
                        full[mu] = qs[mu].first + r[mu];
                    }
                    b[IxDyn(&full)] += v;
                });
            });
        });
        Ok(b)
    }

    /// Applies `G_μ^{-1}` along every axis, last axis first.
    pub fn solve_moments(&self, b: ArrayD<f64>) -> Result<ArrayD<f64>> {
        let order: Vec<usize> = (0..self.mesh.dim()).rev().collect();
        self.solve_moments_in_order(b, &order)
    }

    /// Applies `G_μ^{-1}` along the axes in the given order.
    pub fn solve_moments_in_order(&self, mut b: ArrayD<f64>, order: &[usize]) -> Result<ArrayD<f64>> {
        if b.shape() != self.mesh.shape().as_slice() {
            return Err(Error::DimensionMismatch { expected: self.mesh.shape().iter().product(), found: b.len() });
        }
        for &mu in order {
            if mu >= self.mesh.dim() {
                return Err(Error::IndexOutOfRange { index: mu, len: self.mesh.dim() });
            }
            for mut lane in b.lanes_mut(Axis(mu)) {
                let x = self.grams[mu].solve(&lane.to_vec())?;
                lane.assign(&Array1::from(x));
            }
        }
        Ok(b)
    }

    pub fn project(&self, f: &dyn ScalarField, q: QuadratureSpec) -> Result<TensorCoeffs> {
        let b = self.moments(f, q)?;
        TensorCoeffs::new(self.mesh.clone(), self.solve_moments(b)?)
    }

    /// `K_{Δ_μ}(x, y) = Σ a_ij N_i(x) N_j(y)` over the active blocks.
    pub fn kernel_1d(&self, axis: usize, x: f64, y: f64) -> Result<f64> {
        let kv = self.mesh.axis(axis);
        let a = self.inverse(axis)?;
        let (bx, by) = (eval_basis(kv, x)?, eval_basis(kv, y)?);
        let mut s = 0.0;
        for (r, vx) in bx.values.iter().enumerate() {
            for (c, vy) in by.values.iter().enumerate() {
                s += a[(bx.first + r, by.first + c)] * vx * vy;
            }
        }
        Ok(s)
    }

    /// The Dirichlet kernel, a product of per-axis kernels.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        (0..self.mesh.dim()).map(|mu| self.kernel_1d(mu, x[mu], y[mu])).product()
    }

    /// Coefficients `c_j = Σ_i a_ij N_i(x)` of `y ↦ K_{Δ_μ}(x, y)`.
    fn kernel_row(&self, axis: usize, x: f64) -> Result<Vec<f64>> {
        let kv = self.mesh.axis(axis);
        let a = self.inverse(axis)?;
        let bx = eval_basis(kv, x)?;
        Ok((0..kv.basis_count())
            .map(|j| bx.values.iter().enumerate().map(|(r, v)| a[(bx.first + r, j)] * v).sum())
            .collect())
    }

    /// `∫ |K_{Δ_μ}(x, y)| dy`, exact per cell from the roots of each
    /// polynomial piece.
    pub fn lebesgue_function_1d(&self, axis: usize, x: f64) -> Result<f64> {
        let kv = self.mesh.axis(axis);
        let c = self.kernel_row(axis, x)?;
        let k = kv.order();
        let mut total = 0.0;
        for cell in kv.cell_indices() {
            let iv = kv.cell(cell);
            let first = cell + 1 - k;
            if c[first..first + k].iter().all(|&v| v == 0.0) {
                continue;
            }
            let piece = Poly1D::interpolate(k, iv.lo, iv.hi, |y| piece_value(kv, cell, y, &c))?;
            total += piece.abs_integral();
        }
        Ok(total)
    }
}

/// Value at `y` of the polynomial that `Σ c_j N_j` is on `cell`, valid on
/// the closed cell.
fn piece_value(kv: &KnotVector, cell: usize, y: f64, c: &[f64]) -> f64 {
    let k = kv.order();
    let t = kv.knots();
    // de Boor on the fixed span `cell`
    let mut d: Vec<f64> = c[cell + 1 - k..=cell].to_vec();
    for r in 1..k {
        for j in (r..k).rev() {
            let i = j + cell + 1 - k;
            let (lo, hi) = (t[i], t[i + k - r]);
            let alpha = if hi > lo { (y - lo) / (hi - lo) } else { 0.0 };
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
        }
    }
    d[k - 1]
}

pub fn project_1d(kv: &KnotVector, f: &dyn ScalarField, q: QuadratureSpec) -> Result<SplineCoeffs> {
    let mesh = TensorMesh::new(vec![kv.clone()])?;
    let c = Projector::new(mesh).project(f, q)?;
    SplineCoeffs::new(kv.clone(), c.into_coeffs().into_iter().collect())
}

pub fn project_tensor(mesh: &TensorMesh, f: &dyn ScalarField, q: QuadratureSpec) -> Result<TensorCoeffs> {
    Projector::new(mesh.clone()).project(f, q)
}

pub fn dirichlet_kernel(mesh: &TensorMesh, x: &[f64], y: &[f64]) -> Result<f64> {
    Projector::new(mesh.clone()).kernel(x, y)
}

/// Sampled maxima of `|K(x,y)| |I_ij| γ^{-|i-j|₁}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBound {
    pub c_hat: f64,
    pub per_axis: Vec<f64>,
    pub samples: usize,
}

const MAX_OFFSET: usize = 8;

/// Candidate pairs for one axis: for every cell and every cell offset up to
/// `MAX_OFFSET`, the pairs of cell ends and midpoints; then `samples` random
/// pairs with `x` uniform and `y` in the cell of `x` half of the time, else
/// in a cell at a uniform offset in `1..=MAX_OFFSET`. The offset range is the
/// same for every mesh size.
fn kernel_pairs(kv: &KnotVector, samples: usize, seed: u64) -> Vec<(f64, f64)> {
    let (lo_cell, hi_cell) = (kv.order() - 1, kv.basis_count() - 1);
    let marks = |c: usize| {
        let iv = kv.cell(c);
        [iv.lo, 0.5 * (iv.lo + iv.hi), iv.hi]
    };
    let mut pairs = Vec::new();
    for i in lo_cell..=hi_cell {
        for j in i.saturating_sub(MAX_OFFSET).max(lo_cell)..=(i + MAX_OFFSET).min(hi_cell) {
            for x in marks(i) {
                for y in marks(j) {
                    pairs.push((x, y));
                }
            }
        }
    }
    let mut rng = rng::stream(seed, &[0x6b65_726e]);
    for _ in 0..samples {
        let x: f64 = rng.random();
        let i = kv.span(x).expect("x in [0, 1)");
        let j = if rng.random::<bool>() {
            i
        } else {
            let m = rng.random_range(1..=MAX_OFFSET);
            if rng.random::<bool>() {
                (i + m).min(hi_cell)
            } else {
                i.saturating_sub(m).max(lo_cell)
            }
        };
        let c = kv.cell(j);
        pairs.push((x, c.lo + rng.random::<f64>() * c.len()));
    }
    pairs
}

fn pair_ratio(p: &Projector, axis: usize, gamma: f64, x: f64, y: f64) -> Result<f64> {
    let kv = p.mesh().axis(axis);
    let (i, j) = (kv.span(x)?, kv.span(y)?);
    let t = kv.knots();
    let hull = t[i.max(j) + 1] - t[i.min(j)];
    Ok(p.kernel_1d(axis, x, y)?.abs() * hull * gamma.powi(-(i.abs_diff(j) as i32)))
}

/// `Ĉ` over sampled pairs. Each axis draws its own candidate pairs from
/// `seed`; tensor samples combine randomly chosen candidates of each axis.
pub fn kernel_bound(p: &Projector, gamma: f64, samples: usize, seed: u64) -> Result<KernelBound> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("γ must lie in (0, 1), got {gamma}")));
    }
    let d = p.mesh().dim();
    let ratios: Vec<Vec<f64>> = (0..d)
        .map(|mu| {
            kernel_pairs(p.mesh().axis(mu), samples, seed)
                .into_par_iter()
                .map(|(x, y)| pair_ratio(p, mu, gamma, x, y))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let per_axis: Vec<f64> = ratios.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect();
    let c_hat = if d == 1 {
        per_axis[0]
    } else {
        let mut rng = rng::stream(seed, &[0x6b65_726f, d as u64]);
        (0..samples)
            .map(|_| ratios.iter().map(|r| r[rng.random_range(0..r.len())]).product::<f64>())
            .fold(0.0, f64::max)
    };
    Ok(KernelBound { c_hat, per_axis, samples })
}

pub fn kernel_bound_stat(mesh: &TensorMesh, gamma: f64, samples: usize, seed: u64) -> Result<f64> {
    Ok(kernel_bound(&Projector::new(mesh.clone()), gamma, samples, seed)?.c_hat)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LebesgueReport {
    pub per_axis: Vec<f64>,
    pub lambda: f64,
    pub argmax: Vec<f64>,
    pub density: usize,
}

/// Sample abscissae: Greville points, `density` evenly spread points per
/// cell (ends included) and knots shifted by `±1e-9`.
fn lebesgue_samples(kv: &KnotVector, density: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..kv.basis_count()).map(|i| kv.greville(i)).collect();
    for c in kv.cell_indices() {
        let iv = kv.cell(c);
        for s in 0..density {
            xs.push(iv.lo + iv.len() * s as f64 / (density - 1) as f64);
        }
        for v in [iv.lo + 1e-9, iv.hi - 1e-9] {
            xs.push(v.clamp(iv.lo, iv.hi));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

pub fn lebesgue_axis(p: &Projector, axis: usize, density: usize) -> Result<(f64, f64)> {
    let xs = lebesgue_samples(p.mesh().axis(axis), density);
    let vals: Vec<f64> = xs.par_iter().map(|&x| p.lebesgue_function_1d(axis, x)).collect::<Result<_>>()?;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for (x, v) in xs.iter().zip(vals) {
        if v > best {
            best = v;
            arg = *x;
        }
    }
    Ok((best, arg))
}

/// `Λ = Π Λ_μ`; the tensor kernel factorizes, so the maximum over product
/// samples is the product of per-axis maxima.
pub fn lebesgue_report(p: &Projector, density: usize) -> Result<LebesgueReport> {
    if density < 2 {
        return Err(Error::InvalidArgument(format!("density must be at least 2, got {density}")));
    }
    let per: Vec<(f64, f64)> = (0..p.mesh().dim()).map(|mu| lebesgue_axis(p, mu, density)).collect::<Result<_>>()?;
    Ok(LebesgueReport {
        lambda: per.iter().map(|v| v.0).product(),
        per_axis: per.iter().map(|v| v.0).collect(),
        argmax: per.iter().map(|v| v.1).collect(),
        density,
    })
}

pub fn lebesgue_constant(mesh: &TensorMesh, density: usize) -> Result<LebesgueReport> {
    lebesgue_report(&Projector::new(mesh.clone()), density)
}

/// Uniform sample points in `[0,1]^d`.
pub fn sample_points(d: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, &[0x7074_73, d as u64]);
    (0..samples).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

/// `max |P f - f|` over uniform samples.
pub fn sup_error(mesh: &TensorMesh, f: &dyn ScalarField, samples: usize, seed: u64) -> Result<f64> {
    let p = Projector::new(mesh.clone());
    let c = p.project(f, QuadratureSpec::for_mesh(mesh))?;
    let pts = sample_points(mesh.dim(), samples, seed);
    let errs: Vec<f64> = pts.par_iter().map(|x| Ok((c.eval(x)? - f.eval(x)).abs())).collect::<Result<_>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}
