//! B-spline evaluation: the L∞-normalized basis and splines built from it.

use ndarray::{ArrayD, Dimension, IxDyn};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::mesh::{KnotVector, TensorMesh};
use crate::quadrature::GaussRule;

/// The `k` possibly-nonzero basis values at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    /// 0-based index of the first active basis function.
    pub first: usize,
    pub values: Vec<f64>,
}

/// Evaluates `N_first, ..., N_{first+k-1}` at `x`.
pub fn eval_basis(kv: &KnotVector, x: f64) -> Result<BasisValues> {
    let mut values = vec![0.0; kv.order()];
    let first = eval_basis_into(kv, x, &mut values)?;
    Ok(BasisValues { first, values })
}

/// Allocation-free variant of [`eval_basis`]; `out` must hold `k` values.
/// Returns the index of the first active basis function.
///
/// Basis functions are right-continuous at interior knots and the last cell
/// is closed at `x = 1`.
pub fn eval_basis_into(kv: &KnotVector, x: f64, out: &mut [f64]) -> Result<usize> {
    let k = kv.order();
    assert_eq!(out.len(), k, "output buffer must hold k values");
    let mu = kv.span(x)?;
    let t = kv.knots();
    out[0] = 1.0;
    // Triangular Cox–de Boor scheme; the span has positive length so the
    // denominators below only vanish for repeated knots, where 0/0 := 0.
    let mut left = [0.0f64; 16];
    let mut right = [0.0f64; 16];
    let mut left_v;
    let mut right_v;
    let (l, r): (&mut [f64], &mut [f64]) = if k <= 16 {
        (&mut left[..k], &mut right[..k])
    } else {
        left_v = vec![0.0; k];
        right_v = vec![0.0; k];
        (&mut left_v[..], &mut right_v[..])
    };
    for j in 1..k {
        l[j] = x - t[mu + 1 - j];
        r[j] = t[mu + j] - x;
        let mut saved = 0.0;
        for s in 0..j {
            let denom = r[s + 1] + l[j - s];
            let temp = if denom == 0.0 { 0.0 } else { out[s] / denom };
            out[s] = saved + r[s + 1] * temp;
            saved = l[j - s] * temp;
        }
        out[j] = saved;
    }
    for v in out.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(mu + 1 - k)
}

/// `∫_a^b N_i(x) dx` for every basis function, exact up to rounding.
pub fn integrate_basis(kv: &KnotVector, a: f64, b: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; kv.basis_count()];
    integrate_basis_into(kv, a, b, &mut out)?;
    Ok(out)
}

pub(crate) fn integrate_basis_into(kv: &KnotVector, a: f64, b: f64, out: &mut [f64]) -> Result<()> {
    for v in [a, b] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfDomain { value: v });
        }
    }
    out.iter_mut().for_each(|v| *v = 0.0);
    if b <= a {
        return Ok(());
    }
    let k = kv.order();
    let rule = GaussRule::cached(k.div_ceil(2).max(1));
    let mut vals = vec![0.0; k];
    let start = kv.span(a)?;
    for cell in start..kv.basis_count() {
        let c = kv.cell(cell);
        if c.lo >= b {
            break;
        }
        let (lo, hi) = (c.lo.max(a), c.hi.min(b));
        if hi <= lo {
            continue;
        }
        for (x, w) in rule.on(lo, hi) {
            let first = eval_basis_into(kv, x, &mut vals)?;
            for (r, v) in vals.iter().enumerate() {
                out[first + r] += w * v;
            }
        }
    }
    Ok(())
}

/// `∫_a^b N_i` for the basis functions whose support meets `(a, b)`;
/// returns the index of the first one and the integrals.
pub(crate) fn integrate_basis_range(kv: &KnotVector, a: f64, b: f64) -> Result<(usize, Vec<f64>)> {
    for v in [a, b] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfDomain { value: v });
        }
    }
    if b <= a {
        return Ok((0, Vec::new()));
    }
    let k = kv.order();
    let start = kv.span(a)?;
    let mut end = kv.span(b)?;
    while end > start && kv.knots()[end] >= b {
        end -= 1;
    }
    let first = start + 1 - k;
    let mut out = vec![0.0; end + k - start];
    let rule = GaussRule::cached(k.div_ceil(2).max(1));
    let mut vals = [0.0; 16];
    let mut heap;
    let vals: &mut [f64] = if k <= 16 {
        &mut vals[..k]
    } else {
        heap = vec![0.0; k];
        &mut heap
    };
    for cell in start..=end {
        let c = kv.cell(cell);
        let (lo, hi) = (c.lo.max(a), c.hi.min(b));
        if hi <= lo {
            continue;
        }
        for (x, w) in rule.on(lo, hi) {
            let f = eval_basis_into(kv, x, vals)?;
            for (r, v) in vals.iter().enumerate() {
                out[f + r - first] += w * v;
            }
        }
    }
    Ok((first, out))
}

/// A univariate spline `Σ c_i N_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCoeffs {
    knots: KnotVector,
    coeffs: Vec<f64>,
}

impl SplineCoeffs {
    pub fn new(knots: KnotVector, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != knots.basis_count() {
            return Err(Error::DimensionMismatch { expected: knots.basis_count(), found: coeffs.len() });
        }
        Ok(Self { knots, coeffs })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Evaluates the spline using only the `k` active basis functions.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let b = eval_basis(&self.knots, x)?;
        Ok(b.values.iter().zip(&self.coeffs[b.first..]).map(|(n, c)| n * c).sum())
    }
}

pub fn eval_spline(s: &SplineCoeffs, x: f64) -> Result<f64> {
    s.eval(x)
}

/// Coefficients of a tensor-product spline, one array axis per mesh axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCoeffs {
    mesh: TensorMesh,
    coeffs: ArrayD<f64>,
}

impl TensorCoeffs {
    pub fn new(mesh: TensorMesh, coeffs: ArrayD<f64>) -> Result<Self> {
        let shape = mesh.shape();
        if coeffs.shape() != shape.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: shape.iter().product(),
                found: coeffs.len(),
            });
        }
        Ok(Self { mesh, coeffs })
    }

    pub fn from_fn(mesh: TensorMesh, f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut f = f;
        let coeffs = ArrayD::from_shape_fn(IxDyn(&mesh.shape()), |ix| f(ix.slice()));
        Self { mesh, coeffs }
    }

    pub fn mesh(&self) -> &TensorMesh {
        &self.mesh
    }

    pub fn coeffs(&self) -> &ArrayD<f64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> ArrayD<f64> {
        self.coeffs
    }

    /// Evaluates at `point`, contracting the `Π k_μ` active block one axis
    /// at a time from the last axis to the first.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.mesh.check_point(point)?;
        let d = self.mesh.dim();
        let basis: Vec<BasisValues> =
            self.mesh.axes().iter().zip(point).map(|(kv, &x)| eval_basis(kv, x)).collect::<Result<_>>()?;
        let orders: Vec<usize> = basis.iter().map(|b| b.values.len()).collect();
        // gather the active block in row-major order
        let block_len: usize = orders.iter().product();
        let mut block = Vec::with_capacity(block_len);
        let mut ix = vec![0usize; d];
        let mut full = vec![0usize; d];
        for _ in 0..block_len {
            for mu in 0..d {
                full[mu] = basis[mu].first + ix[mu];
            }
            block.push(self.coeffs[IxDyn(&full)]);
            for mu in (0..d).rev() {
                ix[mu] += 1;
                if ix[mu] < orders[mu] {
                    break;
                }
                ix[mu] = 0;
            }
        }
        let mut len = block_len;
        for mu in (0..d).rev() {
            let k = orders[mu];
            len /= k;
            for outer in 0..len {
                block[outer] = (0..k).map(|r| block[outer * k + r] * basis[mu].values[r]).sum();
            }
        }
        Ok(block[0])
    }

    /// Coefficients as nested JSON arrays in axis order.
    pub fn to_json(&self) -> Value {
        nested_json(&self.coeffs)
    }
}

pub fn eval_tensor(tc: &TensorCoeffs, point: &[f64]) -> Result<f64> {
    tc.eval(point)
}

pub(crate) fn nested_json(a: &ArrayD<f64>) -> Value {
    fn rec(a: ndarray::ArrayViewD<'_, f64>) -> Value {
        if a.ndim() == 0 {
            return Value::from(*a.first().expect("scalar view"));
        }
        Value::Array(a.outer_iter().map(rec).collect())
    }
    rec(a.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshKind};
    use crate::rng;
    use rand::Rng;

    fn hat() -> KnotVector {
        KnotVector::new(vec![0.0, 0.0, 0.5, 1.0, 1.0], 2).unwrap()
    }

    #[test]
    fn basis_examples() {
        let kv = KnotVector::new(vec![0.0, 0.5, 1.0], 1).unwrap();
        assert_eq!(eval_basis(&kv, 0.25).unwrap(), BasisValues { first: 0, values: vec![1.0] });
        assert_eq!(eval_basis(&hat(), 0.25).unwrap(), BasisValues { first: 0, values: vec![0.5, 0.5] });
        for k in 1..=5 {
            let kv = generate_mesh(MeshKind::Random, k + 6, k, 0.0, 3).unwrap();
            let b = eval_basis(&kv, 1.0).unwrap();
            assert_eq!(b.first + k, kv.basis_count());
            assert!((b.values.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((b.values[k - 1] - 1.0).abs() < 1e-14);
        }
        assert!(matches!(eval_basis(&hat(), -0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn cubic_matches_closed_form() {
        // uniform cubic on knots 0,0,0,0,1/3,2/3,1,1,1,1: N_0(1/6) = (1/2)^3
        let kv = KnotVector::new(vec![0., 0., 0., 0., 1. / 3., 2. / 3., 1., 1., 1., 1.], 4).unwrap();
        let b = eval_basis(&kv, 1.0 / 6.0).unwrap();
        assert_eq!(b.first, 0);
        assert!((b.values[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn spline_examples() {
        let kv = KnotVector::new(vec![0.0, 0.5, 1.0], 1).unwrap();
        let s = SplineCoeffs::new(kv, vec![2.0, 5.0]).unwrap();
        assert_eq!(s.eval(0.75).unwrap(), 5.0);

        let kv = generate_mesh(MeshKind::Uniform, 12, 2, 0.0, 0).unwrap();
        let ones = SplineCoeffs::new(kv.clone(), vec![1.0; 12]).unwrap();
        let grev: Vec<f64> = (0..12).map(|i| kv.greville(i)).collect();
        let lin = SplineCoeffs::new(kv, grev).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((ones.eval(x).unwrap() - 1.0).abs() < 1e-14);
            assert!((lin.eval(x).unwrap() - x).abs() < 1e-12);
        }
        assert!(SplineCoeffs::new(hat(), vec![1.0]).is_err());
    }

    #[test]
    fn tensor_examples() {
        let a = generate_mesh(MeshKind::Random, 7, 3, 0.0, 1).unwrap();
        let b = generate_mesh(MeshKind::Random, 5, 2, 0.0, 2).unwrap();
        let mesh = TensorMesh::new(vec![a.clone(), b.clone()]).unwrap();
        let ones = TensorCoeffs::from_fn(mesh.clone(), |_| 1.0);
        let ca: Vec<f64> = (0..7).map(|i| (i as f64).sin()).collect();
        let cb: Vec<f64> = (0..5).map(|i| 1.0 + i as f64).collect();
        let rank1 = TensorCoeffs::from_fn(mesh.clone(), |ix| ca[ix[0]] * cb[ix[1]]);
        let sa = SplineCoeffs::new(a, ca.clone()).unwrap();
        let sb = SplineCoeffs::new(b, cb.clone()).unwrap();
        let mut rng = rng::stream(5, &[]);
        for _ in 0..200 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            assert!((ones.eval(&p).unwrap() - 1.0).abs() < 1e-14);
            let want = sa.eval(p[0]).unwrap() * sb.eval(p[1]).unwrap();
            assert!((rank1.eval(&p).unwrap() - want).abs() < 1e-12);
        }
        assert!(matches!(ones.eval(&[0.5]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(ones.eval(&[0.5, 1.5]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn piecewise_constant_cells() {
        let kv = KnotVector::uniform(3, 1).unwrap();
        let mesh = TensorMesh::new(vec![kv.clone(), kv]).unwrap();
        let tc = TensorCoeffs::from_fn(mesh, |ix| (10 * ix[0] + ix[1]) as f64);
        // cell (2,1) in 1-based numbering
        assert_eq!(tc.eval(&[0.5, 0.1]).unwrap(), 10.0);
        assert_eq!(tc.to_json(), serde_json::json!([[0.0, 1.0, 2.0], [10.0, 11.0, 12.0], [20.0, 21.0, 22.0]]));
    }

    #[test]
    fn integrate_basis_range_matches_full_vector() {
        let kv = generate_mesh(MeshKind::Random, 20, 3, 0.0, 5).unwrap();
        for (a, b) in [(0.0, 1.0), (0.13, 0.57), (0.4, 0.4001), (0.0, 0.02), (0.9, 1.0)] {
            let full = integrate_basis(&kv, a, b).unwrap();
            let (first, part) = integrate_basis_range(&kv, a, b).unwrap();
            for (i, v) in full.iter().enumerate() {
                let got = if i >= first && i < first + part.len() { part[i - first] } else { 0.0 };
                assert!((got - v).abs() <= 1e-15, "{a} {b} {i}");
            }
        }
    }

    #[test]
    fn integrate_basis_matches_closed_form() {
        // ∫_0^1 N_i = (t_{i+k} - t_i) / k
        let kv = generate_mesh(MeshKind::Random, 15, 4, 0.0, 9).unwrap();
        let ints = integrate_basis(&kv, 0.0, 1.0).unwrap();
        for (i, v) in ints.iter().enumerate() {
            let t = kv.knots();
            assert!((v - (t[i + 4] - t[i]) / 4.0).abs() < 1e-15);
        }
        let part = integrate_basis(&hat(), 0.0, 0.25).unwrap();
        // N_0 = 1 - 2x, N_1 = 2x on [0, 0.5]
        assert!((part[0] - 0.1875).abs() < 1e-16 && (part[1] - 0.0625).abs() < 1e-16 && part[2] == 0.0);
    }

    #[test]
    fn local_degree_is_below_order() {
        // on each cell, k samples determine the polynomial; a (k+1)-st sample must agree
        for k in 1..=4 {
            let kv = generate_mesh(MeshKind::Random, k + 8, k, 0.0, 17).unwrap();
            for cell in kv.cell_indices() {
                let c = kv.cell(cell);
                let xs: Vec<f64> = (0..=k).map(|s| c.lo + c.len() * (0.1 + 0.8 * s as f64 / k as f64)).collect();
                for i in cell + 1 - k..=cell {
                    let ys: Vec<f64> = xs
                        .iter()
                        .map(|&x| {
                            let b = eval_basis(&kv, x).unwrap();
                            b.values[i - b.first]
                        })
                        .collect();
                    // Lagrange extrapolation from the first k samples to the last one
                    let target = xs[k];
                    let mut pred = 0.0;
                    for a in 0..k {
                        let mut l = 1.0;
                        for b in 0..k {
                            if a != b {
                                l *= (target - xs[b]) / (xs[a] - xs[b]);
                            }
                        }
                        pred += ys[a] * l;
                    }
                    assert!((pred - ys[k]).abs() < 1e-9, "k={k} cell={cell} i={i}");
                }
            }
        }
    }
}
