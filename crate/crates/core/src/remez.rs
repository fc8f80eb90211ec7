//! Univariate polynomials on an interval, their level-set measures, and the
//! empirical Remez-type constants `c_{k,ρ}` and `c_k`.
//!
//! `c_{k,ρ}` bounds `max_I |Q| / sup_A |Q|` over polynomials of order `k`
//! (degree below `k`) and sets `A ⊂ I` of measure at least `ρ|I|`. The worst
//! set `A` is where `|Q|` is smallest, so the ratio is `‖Q‖ / s*` with `s*`
//! the level at which `|{|Q| > s*}| = (1 - ρ)|I|`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;

const TRIM: f64 = 1e-12;

/// A polynomial on `[a, b]`, stored in the local variable `u = (x - a)/(b - a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Poly1D {
    /// Monomial coefficients in `u`, lowest degree first.
    coeffs: Vec<f64>,
    a: f64,
    b: f64,
}

impl Poly1D {
    /// Polynomial with local coefficients `coeffs` in `u ∈ [0, 1]`.
    pub fn local(coeffs: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
        }
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Ok(Self { coeffs, a, b })
    }

    /// Polynomial given by monomial coefficients in `x`.
    pub fn from_monomial(coeffs: &[f64], a: f64, b: f64) -> Result<Self> {
        let h = b - a;
        let m = coeffs.len();
        let mut local = vec![0.0; m.max(1)];
        // Σ c_p (a + h u)^p, expanded binomially
        for (p, &c) in coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for q in 0..=p {
                local[q] += c * binom * a.powi((p - q) as i32) * h.powi(q as i32);
                binom = binom * (p - q) as f64 / (q + 1) as f64;
            }
        }
        Self::local(local, a, b)
    }

    /// Interpolates `f` at `k` Chebyshev points; exact when `f` has degree `< k`.
    pub fn interpolate(k: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let us: Vec<f64> = (0..k)
            .map(|i| 0.5 - 0.5 * (std::f64::consts::PI * (i as f64 + 0.5) / k as f64).cos())
            .collect();
        let ys: Vec<f64> = us.iter().map(|&u| f(a + (b - a) * u)).collect();
        // Newton divided differences, then expand into monomials
        let mut dd = ys;
        for j in 1..k {
            for i in (j..k).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (us[i] - us[i - j]);
            }
        }
        let mut coeffs = vec![0.0; k.max(1)];
        for j in (0..k).rev() {
            // coeffs = coeffs * (u - us[j]) + dd[j]
            let mut next = vec![0.0; k.max(1)];
            for p in 0..k {
                if p + 1 < k {
                    next[p + 1] += coeffs[p];
                }
                next[p] -= us[j] * coeffs[p];
            }
            next[0] += dd[j];
            coeffs = next;
        }
        Self::local(coeffs, a, b)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval_local(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_local((x - self.a) / (self.b - self.a))
    }

    /// Degree after dropping leading coefficients below `1e-12` of the largest.
    pub fn degree(&self) -> usize {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return 0;
        }
        self.coeffs.iter().rposition(|c| c.abs() > TRIM * scale).unwrap_or(0)
    }

    fn derivative_local(&self) -> Vec<f64> {
        self.coeffs.iter().enumerate().skip(1).map(|(p, c)| p as f64 * c).collect()
    }

    fn shifted(&self, s: f64) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        c[0] -= s;
        c
    }

    /// Real roots in `[0, 1]` (local variable) of `Σ c_p u^p`, sorted.
    fn local_roots(coeffs: &[f64]) -> Vec<f64> {
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return Vec::new();
        }
        let deg = coeffs.iter().rposition(|c| c.abs() > TRIM * scale).unwrap_or(0);
        if deg == 0 {
            return Vec::new();
        }
        let lead = coeffs[deg];
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -coeffs[i] / lead;
        }
        let eval = |u: f64| coeffs[..=deg].iter().rev().fold(0.0, |acc, &c| acc * u + c);
        let deval = |u: f64| {
            coeffs[1..=deg].iter().enumerate().rev().fold(0.0, |acc, (p, &c)| acc * u + (p + 1) as f64 * c)
        };
        let mut roots: Vec<f64> = companion
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
            .map(|z| {
                let mut u = z.re;
                for _ in 0..8 {
                    let d = deval(u);
                    if d == 0.0 {
                        break;
                    }
                    let step = eval(u) / d;
                    if !step.is_finite() {
                        break;
                    }
                    u -= step;
                    if step.abs() <= 1e-16 * (1.0 + u.abs()) {
                        break;
                    }
                }
                u
            })
            .filter(|u| u.is_finite() && (-1e-12..=1.0 + 1e-12).contains(u))
            .map(|u| u.clamp(0.0, 1.0))
            .collect();
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        roots
    }

    /// Real roots of `Q` in `[a, b]`.
    pub fn roots(&self) -> Vec<f64> {
        Self::local_roots(&self.coeffs).into_iter().map(|u| self.a + u * self.len()).collect()
    }

    /// Local points where `|Q|` may attain its extrema: ends and critical points.
    fn extremal_candidates(&self) -> Vec<f64> {
        let mut pts = vec![0.0, 1.0];
        pts.extend(Self::local_roots(&self.derivative_local()));
        pts
    }

    /// `max_{[a,b]} |Q|`.
    pub fn sup_norm(&self) -> f64 {
        self.extremal_candidates().into_iter().map(|u| self.eval_local(u).abs()).fold(0.0, f64::max)
    }

    /// `∫_a^b Q(x) dx`.
    pub fn integral(&self) -> f64 {
        self.len() * self.coeffs.iter().enumerate().map(|(p, c)| c / (p + 1) as f64).sum::<f64>()
    }

    /// `∫_a^b |Q(x)| dx`, splitting at the sign changes.
    pub fn abs_integral(&self) -> f64 {
        let mut cuts = vec![0.0];
        cuts.extend(Self::local_roots(&self.coeffs));
        cuts.push(1.0);
        let anti = |u: f64| self.coeffs.iter().enumerate().rev().fold(0.0, |acc, (p, &c)| acc * u + c / (p + 1) as f64) * u;
        cuts.windows(2).map(|w| (anti(w[1]) - anti(w[0])).abs()).sum::<f64>() * self.len()
    }
}

/// `|{x ∈ [a,b] : |Q(x)| > s}|`, from the real roots of `Q ∓ s` and the
/// sign of `|Q| - s` between consecutive roots.
pub fn level_set_measure(q: &Poly1D, s: f64) -> f64 {
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(Poly1D::local_roots(&q.shifted(s)));
    cuts.extend(Poly1D::local_roots(&q.shifted(-s)));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let local: f64 = cuts
        .windows(2)
        .filter(|w| q.eval_local(0.5 * (w[0] + w[1])).abs() > s)
        .map(|w| w[1] - w[0])
        .sum();
    local * q.len()
}

/// `|Q|` split into monotone pieces for repeated level queries.
struct LevelSolver<'a> {
    q: &'a Poly1D,
    /// `(u0, u1, increasing)` pieces of `|Q|` in local coordinates.
    pieces: Vec<(f64, f64, bool)>,
}

impl<'a> LevelSolver<'a> {
    fn new(q: &'a Poly1D) -> Self {
        let mut cuts = q.extremal_candidates();
        cuts.extend(Poly1D::local_roots(&q.coeffs));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1], q.eval_local(w[1]).abs() >= q.eval_local(w[0]).abs()))
            .collect();
        Self { q, pieces }
    }

    /// Local measure of `{|Q| > s}`.
    fn measure(&self, s: f64) -> f64 {
        let f = |u: f64| self.q.eval_local(u).abs();
        self.pieces
            .iter()
            .map(|&(u0, u1, inc)| {
                let (lo, hi) = (f(u0), f(u1));
                let (small, large) = if inc { (lo, hi) } else { (hi, lo) };
                if s >= large {
                    return 0.0;
                }
                if s < small {
                    return u1 - u0;
                }
                // bisection for |Q(u*)| = s on the monotone piece
                let (mut l, mut r) = (u0, u1);
                for _ in 0..60 {
                    let m = 0.5 * (l + r);
                    if (f(m) > s) == inc {
                        r = m;
                    } else {
                        l = m;
                    }
                }
                let root = 0.5 * (l + r);
                if inc {
                    u1 - root
                } else {
                    root - u0
                }
            })
            .sum()
    }

    /// Smallest level `s` with local measure of `{|Q| > s}` at most `target`.
    fn level_for(&self, target: f64, sup: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, sup);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.measure(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Result of [`check_half_measure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfMeasureCheck {
    pub holds: bool,
    /// `|{|Q| > t / c_k}|`
    pub measure: f64,
    pub half: f64,
}

/// Checks `|{x ∈ I : |Q(x)| > t/c_k}| ≥ |I|/2` for `‖Q‖ ≥ t`.
pub fn check_half_measure(q: &Poly1D, t: f64, c_k: f64) -> Result<HalfMeasureCheck> {
    if !(c_k > 1.0) {
        return Err(Error::PreconditionViolated(format!("c_k must exceed 1, got {c_k}")));
    }
    let sup = q.sup_norm();
    if sup < t {
        return Err(Error::PreconditionViolated(format!("sup norm {sup} is below t = {t}")));
    }
    let half = 0.5 * q.len();
    // constants take the explicit branch: the whole interval is above any lower level
    let measure = if q.degree() == 0 { if sup > t / c_k { q.len() } else { 0.0 } } else { level_set_measure(q, t / c_k) };
    Ok(HalfMeasureCheck { holds: measure >= half, measure, half })
}

/// Empirical `c_{k,ρ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemezEstimate {
    pub order: usize,
    pub rho: f64,
    pub constant: f64,
    pub trials: usize,
    /// Local coefficients (on `[0, 1]`) of the polynomial attaining the estimate.
    pub witness: Vec<f64>,
}

/// `‖Q‖ / s*` for the worst set of measure `ρ|I|`; `None` for `Q ≡ 0`.
fn remez_ratio(q: &Poly1D, rho: f64) -> Option<f64> {
    let sup = q.sup_norm();
    if sup == 0.0 || !sup.is_finite() {
        return None;
    }
    if q.degree() == 0 {
        return Some(1.0);
    }
    let s = LevelSolver::new(q).level_for(1.0 - rho, sup);
    (s > 0.0).then(|| sup / s)
}

fn random_poly(deg: usize, trial: u64, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, &[0x7265_6d65, deg as u64, trial]);
    if trial % 2 == 0 {
        // product of linear factors with roots spread around the interval
        let mut c = vec![1.0];
        for _ in 0..deg {
            let r: f64 = rng.random_range(-0.5..1.5);
            let mut next = vec![0.0; c.len() + 1];
            for (p, &v) in c.iter().enumerate() {
                next[p + 1] += v;
                next[p] -= r * v;
            }
            c = next;
        }
        c
    } else {
        (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

fn best_of_degree(deg: usize, rho: f64, trials: usize, seed: u64) -> (f64, Vec<f64>) {
    let eval = |c: &[f64]| Poly1D::local(c.to_vec(), 0.0, 1.0).ok().and_then(|q| remez_ratio(&q, rho));
    let (mut best, mut witness) = (0..trials as u64)
        .into_par_iter()
        .filter_map(|t| {
            let c = random_poly(deg, t, seed);
            eval(&c).map(|r| (r, t, c))
        })
        .reduce_with(|a, b| if (b.0, std::cmp::Reverse(b.1)) > (a.0, std::cmp::Reverse(a.1)) { b } else { a })
        .map(|(r, _, c)| (r, c))
        .unwrap_or((1.0, vec![1.0]));
    // deterministic local refinement around the best sample
    let mut rng = rng::stream(seed, &[0x7265_6669, deg as u64]);
    let mut step = 0.05;
    for _ in 0..400 {
        let scale = witness.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let cand: Vec<f64> = witness.iter().map(|c| c + step * scale * rng.random_range(-1.0..1.0)).collect();
        match eval(&cand) {
            Some(r) if r > best => {
                best = r;
                witness = cand;
            }
            _ => step *= 0.985,
        }
    }
    (best, witness)
}

/// Estimates `c_{k,ρ}` by sampling polynomials of every degree below `k`.
///
/// Each degree is sampled from its own random stream and the estimate is the
/// maximum over degrees, so it is nondecreasing in `k` for a fixed seed.
pub fn estimate_remez(k: usize, rho: f64, trials: usize, seed: u64) -> Result<RemezEstimate> {
    if k == 0 {
        return Err(Error::InvalidOrder(k));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let (mut constant, mut witness) = (1.0, vec![1.0]);
    for deg in 1..k {
        let (r, w) = best_of_degree(deg, rho, trials, seed);
        if r > constant {
            constant = r;
            witness = w;
        }
    }
    Ok(RemezEstimate { order: k, rho, constant, trials, witness })
}

/// Seed used for the default constant table.
pub const DEFAULT_SEED: u64 = 0x5eed_c0de;
/// Trials per degree behind the default constant table.
pub const DEFAULT_TRIALS: usize = 10_000;
/// Safety factor applied to the sampled constant.
pub const SAFETY: f64 = 1.01;

/// The default `c_k`: `estimate_remez(k, 1/2)` scaled by [`SAFETY`], computed
/// once per order on first use.
pub fn remez_constant(k: usize) -> f64 {
    const MAX: usize = 12;
    static TABLE: [OnceLock<f64>; MAX + 1] = [const { OnceLock::new() }; MAX + 1];
    assert!((1..=MAX).contains(&k), "default constants cover orders 1..={MAX}");
    *TABLE[k].get_or_init(|| {
        let est = estimate_remez(k, 0.5, DEFAULT_TRIALS, DEFAULT_SEED).expect("valid remez parameters");
        est.constant * SAFETY
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lin(c0: f64, c1: f64) -> Poly1D {
        Poly1D::from_monomial(&[c0, c1], 0.0, 1.0).unwrap()
    }

    #[test]
    fn level_set_examples() {
        assert!((level_set_measure(&lin(0.0, 1.0), 0.5) - 0.5).abs() < 1e-15);
        let c = Poly1D::from_monomial(&[3.0], 0.2, 0.9).unwrap();
        assert!((level_set_measure(&c, 1.0) - 0.7).abs() < 1e-15);
        assert!((level_set_measure(&lin(1.0, -4.0), 1.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn half_measure_examples() {
        let r = check_half_measure(&lin(1.0, -4.0), 3.0, 3.0).unwrap();
        assert!(r.holds && (r.measure - 0.5).abs() < 1e-14);
        let c = Poly1D::from_monomial(&[2.0], 0.0, 4.0).unwrap();
        let r = check_half_measure(&c, 2.0, 1.5).unwrap();
        assert!(r.holds && r.measure == 4.0);
        assert!(matches!(check_half_measure(&c, 3.0, 2.0), Err(Error::PreconditionViolated(_))));
        assert!(matches!(check_half_measure(&c, 1.0, 1.0), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn monomial_conversion_and_interpolation() {
        let q = Poly1D::from_monomial(&[1.0, -2.0, 0.5, 3.0], -1.0, 2.0).unwrap();
        let p = Poly1D::interpolate(4, -1.0, 2.0, |x| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x).unwrap();
        for i in 0..=10 {
            let x = -1.0 + 0.3 * i as f64;
            let want = 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
            assert!((q.eval(x) - want).abs() < 1e-12);
            assert!((p.eval(x) - want).abs() < 1e-11);
        }
        assert_eq!(q.degree(), 3);
        let roots = lin(1.0, -4.0).roots();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn integrals() {
        let q = lin(1.0, -4.0);
        assert!((q.integral() - (-1.0)).abs() < 1e-15);
        // ∫|1-4x| = 1/8 + 9/8
        assert!((q.abs_integral() - 1.25).abs() < 1e-14);
    }

    #[test]
    fn constants_estimate_to_one() {
        let e = estimate_remez(1, 0.3, 5, 1).unwrap();
        assert_eq!(e.constant, 1.0);
    }

    #[test]
    fn linear_remez_constant_is_three() {
        // oracle: brute force over a grid of linear polynomials u - c
        let mut oracle: f64 = 0.0;
        for i in 0..=4000 {
            let c = -1.0 + 3.0 * i as f64 / 4000.0;
            let q = lin(-c, 1.0);
            let sup = q.sup_norm();
            let (mut lo, mut hi) = (0.0, sup);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if level_set_measure(&q, mid) <= 0.5 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            oracle = oracle.max(sup / hi);
        }
        assert!((oracle - 3.0).abs() < 1e-3, "{oracle}");
        let e = estimate_remez(2, 0.5, 2000, 42).unwrap();
        assert!((e.constant - 3.0).abs() <= 0.02 * 3.0, "{}", e.constant);
        assert!(e.constant <= 3.0 + 1e-9);
    }

    #[test]
    fn estimate_is_monotone_in_order() {
        let cs: Vec<f64> = (1..=4).map(|k| estimate_remez(k, 0.5, 500, 3).unwrap().constant).collect();
        assert!(cs.windows(2).all(|w| w[1] >= w[0]), "{cs:?}");
    }

    #[test]
    fn fast_level_solver_agrees_with_root_based_measure() {
        for t in 0..200u64 {
            let c = random_poly(3, t, 99);
            let q = Poly1D::local(c, 0.0, 1.0).unwrap();
            let solver = LevelSolver::new(&q);
            let sup = q.sup_norm();
            for j in 0..10 {
                let s = sup * j as f64 / 10.0;
                assert!((solver.measure(s) - level_set_measure(&q, s)).abs() < 1e-9, "t={t} s={s}");
            }
        }
    }

    proptest! {
        #[test]
        fn level_set_is_monotone(c in proptest::collection::vec(-3.0f64..3.0, 1..5), s1 in 0.0f64..4.0, s2 in 0.0f64..4.0) {
            let q = Poly1D::local(c, 0.0, 1.0).unwrap();
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            prop_assert!(level_set_measure(&q, lo) + 1e-12 >= level_set_measure(&q, hi));
            let sup = q.sup_norm();
            prop_assert!(level_set_measure(&q, sup * 1.0001 + 1e-12) == 0.0);
        }

        #[test]
        fn level_set_is_affine_invariant(c in proptest::collection::vec(-3.0f64..3.0, 1..5), s in 0.0f64..3.0, a in -5.0f64..5.0, len in 0.01f64..10.0) {
            let unit = Poly1D::local(c.clone(), 0.0, 1.0).unwrap();
            let moved = Poly1D::local(c, a, a + len).unwrap();
            prop_assert!((level_set_measure(&moved, s) - len * level_set_measure(&unit, s)).abs() < 1e-9 * len);
        }
    }
}
