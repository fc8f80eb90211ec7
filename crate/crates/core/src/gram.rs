//! B-spline Gram matrices: assembly, banded Cholesky solves, inverse entries,
//! and the fitted geometric decay `|a_ij| ≤ K γ^{|i-j|} |E_ij|^{-1}`.

use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bspline::eval_basis_into;
use crate::error::{Error, Result};
use crate::mesh::KnotVector;
use crate::quadrature::GaussRule;

/// Default cap on the dense inverse size.
pub const INVERSE_CAP: usize = 512;

/// A symmetric positive definite band matrix; only the lower band is stored.
#[derive(Debug)]
pub struct BandedSpd {
    n: usize,
    bandwidth: usize,
    /// Row `i` holds `G[i, i - bandwidth ..= i]`, left-padded with zeros.
    band: Vec<f64>,
    factor: OnceLock<std::result::Result<BandedCholesky, Error>>,
}

impl Clone for BandedSpd {
    fn clone(&self) -> Self {
        Self { n: self.n, bandwidth: self.bandwidth, band: self.band.clone(), factor: OnceLock::new() }
    }
}

impl PartialEq for BandedSpd {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.bandwidth == other.bandwidth && self.band == other.band
    }
}

/// Lower Cholesky factor in the same band layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bandwidth, band: vec![0.0; n * (bandwidth + 1)], factor: OnceLock::new() }
    }

    /// Builds from a dense symmetric matrix, keeping the lower band.
    pub fn from_dense(m: &DMatrix<f64>, bandwidth: usize) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let mut g = Self::zeros(m.nrows(), bandwidth);
        for i in 0..g.n {
            for j in i.saturating_sub(bandwidth)..=i {
                *g.slot(i, j) = m[(i, j)];
            }
        }
        Ok(g)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.band[i * (self.bandwidth + 1) + self.bandwidth + j - i]
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            return 0.0;
        }
        self.band[i * (self.bandwidth + 1) + self.bandwidth + j - i]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `G x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bandwidth);
                let hi = (i + self.bandwidth).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Cholesky factor, computed on first use and cached.
    pub fn factor(&self) -> Result<&BandedCholesky> {
        self.factor.get_or_init(|| BandedCholesky::new(self)).as_ref().map_err(Clone::clone)
    }

    /// Solves `G x = rhs` with the cached factorization.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: rhs.len() });
        }
        if self.bandwidth == 0 {
            return rhs
                .iter()
                .zip(&self.band)
                .enumerate()
                .map(|(i, (r, &d))| if d > 0.0 { Ok(r / d) } else { Err(Error::NotPositiveDefinite { pivot: i, value: d }) })
                .collect();
        }
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x);
        Ok(x)
    }
}

impl BandedCholesky {
    fn new(g: &BandedSpd) -> Result<Self> {
        let (n, bw) = (g.n, g.bandwidth);
        let w = bw + 1;
        let mut l = g.band.clone();
        for j in 0..n {
            // L[j][j]
            let lo = j.saturating_sub(bw);
            let mut d = l[j * w + bw];
            for p in lo..j {
                let v = l[j * w + bw + p - j];
                d -= v * v;
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[j * w + bw] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = l[i * w + bw + j - i];
                for p in lo_i..j {
                    s -= l[i * w + bw + p - i] * l[j * w + bw + p - j];
                }
                l[i * w + bw + j - i] = s / d;
            }
        }
        Ok(Self { n, bandwidth: bw, band: l })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * (self.bandwidth + 1) + self.bandwidth + j - i]
    }

    /// Overwrites `x` with `G^{-1} x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let bw = self.bandwidth;
        for i in 0..self.n {
            let mut s = x[i];
            for p in i.saturating_sub(bw)..i {
                s -= self.at(i, p) * x[p];
            }
            x[i] = s / self.at(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for p in i + 1..(i + bw + 1).min(self.n) {
                s -= self.at(p, i) * x[p];
            }
            x[i] = s / self.at(i, i);
        }
    }

}

/// Assembles `G_ij = ∫ N_i N_j` with a `k`-point Gauss rule per cell, exact
/// for the degree `2k - 2` integrands.
pub fn assemble_gram(kv: &KnotVector) -> BandedSpd {
    let k = kv.order();
    let mut g = BandedSpd::zeros(kv.basis_count(), k - 1);
    let rule = GaussRule::cached(k);
    let mut vals = vec![0.0; k];
    for cell in kv.cell_indices() {
        let c = kv.cell(cell);
        for (x, w) in rule.on(c.lo, c.hi) {
            let first = eval_basis_into(kv, x, &mut vals).expect("quadrature node lies in [0, 1]");
            for r in 0..k {
                for s in 0..=r {
                    *g.slot(first + r, first + s) += w * vals[r] * vals[s];
                }
            }
        }
    }
    g
}

pub fn solve(g: &BandedSpd, rhs: &[f64]) -> Result<Vec<f64>> {
    g.solve(rhs)
}

/// Dense inverse `(a_ij)` of a Gram matrix, column by column.
pub fn inverse_entries(g: &BandedSpd) -> Result<DMatrix<f64>> {
    inverse_entries_capped(g, INVERSE_CAP)
}

pub fn inverse_entries_capped(g: &BandedSpd, cap: usize) -> Result<DMatrix<f64>> {
    let n = g.size();
    if n > cap {
        return Err(Error::SizeCapExceeded { size: n, cap });
    }
    let mut a = DMatrix::zeros(n, n);
    if g.bandwidth == 0 {
        for (i, r) in g.solve(&vec![1.0; n])?.into_iter().enumerate() {
            a[(i, i)] = r;
        }
        return Ok(a);
    }
    let chol = g.factor()?;
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        chol.solve_in_place(&mut col);
        a.column_mut(j).copy_from_slice(&col);
    }
    // symmetrize the round-off
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}

/// `a_ij` for multi-indices from per-axis inverses.
pub fn tensor_inverse_entry(per_axis: &[DMatrix<f64>], i: &[usize], j: &[usize]) -> f64 {
    per_axis.iter().zip(i.iter().zip(j)).map(|(a, (&p, &q))| a[(p, q)]).product()
}

/// Fitted decay of the inverse Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// `K̂ = max_r m_r / γ̂^r`; for a diagonal inverse this is `m_0`.
    pub k_hat: f64,
    /// Fitted ratio; `0` flags a diagonal inverse (no off-diagonal decay to fit).
    pub gamma_hat: f64,
    /// `m_r = max_{|i-j|=r} |a_ij| |E_ij|` for `r = 0..n`.
    pub maxima: Vec<f64>,
    /// Distances used by the regression.
    pub used: Vec<usize>,
    /// `log m_r - (intercept + slope r)` for each used distance.
    pub residuals: Vec<f64>,
}

impl DecayFit {
    /// `K̂ γ̂^r`
    pub fn envelope(&self, r: usize) -> f64 {
        if self.gamma_hat == 0.0 {
            return if r == 0 { self.k_hat } else { 0.0 };
        }
        self.k_hat * self.gamma_hat.powi(r as i32)
    }

    /// CSV with columns `r,m_r,fitted`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,m_r,fitted\n");
        for (r, m) in self.maxima.iter().enumerate() {
            let _ = writeln!(s, "{r},{m:e},{:e}", self.envelope(r));
        }
        s
    }
}

/// Per-distance maxima `m_r` of `|a_ij| |E_ij|`.
pub fn decay_maxima(kv: &KnotVector, inverse: &DMatrix<f64>) -> Vec<f64> {
    let n = kv.basis_count();
    let (k, t) = (kv.order(), kv.knots());
    let mut m = vec![0.0f64; n];
    for j in 0..n {
        for i in 0..n {
            let (lo, hi) = (i.min(j), i.max(j));
            let e = t[hi + k] - t[lo];
            let r = hi - lo;
            m[r] = m[r].max(inverse[(i, j)].abs() * e);
        }
    }
    m
}

/// Fits `log m_r ≈ log K + r log γ` over `r ≥ 1` with `m_r > 1e-300`.
pub fn fit_decay(kv: &KnotVector) -> Result<DecayFit> {
    let (n, k) = (kv.basis_count(), kv.order());
    if n < 2 * k {
        return Err(Error::InfeasibleSize(format!("decay fit needs n >= 2k, got n = {n}, k = {k}")));
    }
    let inverse = inverse_entries(&assemble_gram(kv))?;
    fit_from_maxima(decay_maxima(kv, &inverse))
}

pub(crate) fn fit_from_maxima(maxima: Vec<f64>) -> Result<DecayFit> {
    if maxima.iter().skip(1).all(|&m| m == 0.0) {
        return Ok(DecayFit { k_hat: maxima[0], gamma_hat: 0.0, maxima, used: vec![], residuals: vec![] });
    }
    let used: Vec<usize> = (1..maxima.len()).filter(|&r| maxima[r] > 1e-300).collect();
    if used.len() < 3 {
        return Err(Error::DegenerateFit { usable: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|&r| r as f64).collect();
    let ys: Vec<f64> = used.iter().map(|&r| maxima[r].ln()).collect();
    let len = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / len, ys.iter().sum::<f64>() / len);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let gamma_hat = slope.exp();
    let k_hat = maxima.iter().enumerate().map(|(r, m)| m / gamma_hat.powi(r as i32)).fold(0.0, f64::max);
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(DecayFit { k_hat, gamma_hat, maxima, used, residuals })
}
