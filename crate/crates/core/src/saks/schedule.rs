//! Saks schedules and the partial sums `φ_n = Σ_{i≤n} ε_i^{-1} Σ_j ψ_{S_j^(i), α^(i)}`.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bohr::{BohrDecomposition, EnumeratedRect, Rect, RectKey, Scalar};
use super::{Block, PieceSource};
use crate::error::{Error, Result};
use crate::mesh::Rectangle;
use crate::step::StepFunction;

/// Orlicz gauge `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `σ(t) = 1 / log(e + t)`
    InverseLog,
    /// `σ ≡ 1`
    One,
}

impl Gauge {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Gauge::InverseLog => 1.0 / (std::f64::consts::E + t).ln(),
            Gauge::One => 1.0,
        }
    }
}

/// One level: `[0,1]²` cut into `cells × cells` equal squares, each
/// carrying `ψ` with amplitude `alpha`, weighted by `1/epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub cells: usize,
    pub alpha: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaksSchedule {
    pub levels: Vec<LevelSpec>,
    pub sigma: Gauge,
}

/// Cap on support pieces of a partial sum.
pub const DEFAULT_PIECE_CAP: usize = 4_000_000;

impl SaksSchedule {
    /// Level `i`: squares of side `1/(2i)`, `α = i + 1`, `ε = 1/i`,
    /// `σ(t) = 1/log(e + t)`.
    pub fn default_levels(n_max: usize) -> Self {
        let levels =
            (1..=n_max).map(|i| LevelSpec { cells: 2 * i, alpha: (i + 1) as f64, epsilon: 1.0 / i as f64 }).collect();
        Self { levels, sigma: Gauge::InverseLog }
    }

    /// A single level: `ψ_{[0,1]², α}` with `ε = 1`.
    pub fn trivial(alpha: f64) -> Self {
        Self { levels: vec![LevelSpec { cells: 1, alpha, epsilon: 1.0 }], sigma: Gauge::InverseLog }
    }

    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("a schedule needs at least one level".into()));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if l.cells == 0 {
                return Err(Error::InvalidArgument(format!("level {} has no cells", i + 1)));
            }
            if !(l.epsilon > 0.0 && l.epsilon.is_finite()) {
                return Err(Error::InvalidArgument(format!("level {} needs epsilon > 0, got {}", i + 1, l.epsilon)));
            }
            if !l.alpha.is_finite() || l.alpha < 2.0 {
                return Err(Error::DegenerateAlpha { alpha: l.alpha });
            }
        }
        Ok(())
    }

    /// Whether level `i` (1-based) has squares of diameter at most `1/i`.
    pub fn diameter_ok(&self, i: usize) -> bool {
        std::f64::consts::SQRT_2 / self.levels[i - 1].cells as f64 <= 1.0 / i as f64
    }
}

/// Square `(row, col)` of an `m × m` grid.
fn square(m: usize, row: usize, col: usize) -> Rect<f64> {
    let m = m as f64;
    Rect::new(col as f64 / m, (col + 1) as f64 / m, row as f64 / m, (row + 1) as f64 / m)
}

fn cell_range(m: usize, lo: f64, hi: f64) -> std::ops::Range<usize> {
    let mf = m as f64;
    let a = ((lo * mf).floor().max(0.0) as usize).min(m - 1);
    let b = ((hi * mf).ceil().max(0.0) as usize).clamp(a + 1, m);
    a..b
}

#[derive(Debug, Clone)]
struct Level {
    spec: LevelSpec,
    dec: BohrDecomposition,
}

impl Level {
    fn value(&self) -> f64 {
        self.spec.alpha / self.spec.epsilon
    }
}

/// An enumerated rectangle of some level, with its square.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelKey {
    /// 1-based level.
    pub level: usize,
    /// Row-major square index.
    pub square: usize,
    pub key: RectKey,
}

/// The partial sum `φ_n`, kept as one Bohr template per level.
#[derive(Debug, Clone)]
pub struct SaksPartial {
    schedule: SaksSchedule,
    levels: Vec<Level>,
}

/// `build_saks_partial(sched, n)` with the default piece cap.
pub fn build_saks_partial(sched: &SaksSchedule, n: usize) -> Result<SaksPartial> {
    SaksPartial::new(sched, n, DEFAULT_PIECE_CAP)
}

impl SaksPartial {
    pub fn new(sched: &SaksSchedule, n: usize, cap: usize) -> Result<Self> {
        sched.validate()?;
        if n == 0 || n > sched.n_max() {
            return Err(Error::InvalidArgument(format!("n must lie in 1..={}, got {n}", sched.n_max())));
        }
        let mut levels = Vec::with_capacity(n);
        let mut pieces = BigUint::from(0u8);
        for spec in &sched.levels[..n] {
            let m = spec.cells as f64;
            let dec = BohrDecomposition::new(&Rectangle::from_bounds(&[0.0, 0.0], &[1.0 / m, 1.0 / m])?, spec.alpha)?;
            pieces += dec.support_count() * BigUint::from(spec.cells * spec.cells);
            levels.push(Level { spec: spec.clone(), dec });
        }
        if pieces > BigUint::from(cap) {
            return Err(Error::MeshBlowup { count: format!("{pieces} support pieces"), cap });
        }
        Ok(Self { schedule: sched.clone(), levels })
    }

    pub fn schedule(&self) -> &SaksSchedule {
        &self.schedule
    }

    pub fn n(&self) -> usize {
        self.levels.len()
    }

    /// `φ_m` for `m ≤ n`.
    pub fn prefix(&self, m: usize) -> Self {
        Self { schedule: self.schedule.clone(), levels: self.levels[..m.clamp(1, self.n())].to_vec() }
    }

    pub fn decomposition(&self, level: usize) -> &BohrDecomposition {
        &self.levels[level - 1].dec
    }

    pub fn spec(&self, level: usize) -> &LevelSpec {
        &self.levels[level - 1].spec
    }

    pub fn square(&self, level: usize, index: usize) -> Rect<f64> {
        let m = self.levels[level - 1].spec.cells;
        square(m, index / m, index % m)
    }

    pub fn square_count(&self, level: usize) -> usize {
        let m = self.levels[level - 1].spec.cells;
        m * m
    }

    /// Number of support pieces over all levels.
    pub fn piece_count(&self) -> BigUint {
        self.levels.iter().map(|l| l.dec.support_count() * BigUint::from(l.spec.cells * l.spec.cells)).sum()
    }

    fn square_of(&self, level: usize, x: f64, y: f64) -> Option<(usize, Rect<f64>)> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return None;
        }
        let m = self.levels[level - 1].spec.cells;
        let col = ((x * m as f64) as usize).min(m - 1);
        let row = ((y * m as f64) as usize).min(m - 1);
        Some((row * m + col, square(m, row, col)))
    }

    /// `φ_n(x, y)`
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (1..=self.n())
            .filter_map(|l| {
                let (_, root) = self.square_of(l, x, y)?;
                let lv = &self.levels[l - 1];
                Some(lv.dec.eval(&root, x, y) / lv.spec.epsilon)
            })
            .sum()
    }

    /// `∫ ψ` summed over the squares of each level, from the closed forms
    /// (`ε` not applied).
    pub fn level_masses(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| l.dec.piece_mean(0).approx() * l.dec.root_f64().area() * (l.spec.cells * l.spec.cells) as f64)
            .collect()
    }

    /// `∫ φ_n` from the closed-form level masses.
    pub fn integral(&self) -> f64 {
        self.level_masses().iter().zip(&self.levels).map(|(m, l)| m / l.spec.epsilon).sum()
    }

    /// Visits the support pieces of one level clipped to `region`.
    pub fn visit_level(&self, level: usize, region: &Rect<f64>, f: &mut dyn FnMut(&Rect<f64>, f64)) {
        let lv = &self.levels[level - 1];
        let m = lv.spec.cells;
        let v = lv.value();
        for row in cell_range(m, region.y0, region.y1) {
            for col in cell_range(m, region.x0, region.x1) {
                let root = square(m, row, col);
                if root.intersect(region).is_none() {
                    continue;
                }
                lv.dec.visit_support(&root, region, &mut |r| f(&r, v));
            }
        }
    }

    /// `∫_R φ_n` by descent with closed-form subtree masses.
    pub fn integral_over(&self, r: &Rect<f64>) -> f64 {
        let mut total = 0.0;
        for lv in &self.levels {
            let m = lv.spec.cells;
            for row in cell_range(m, r.y0, r.y1) {
                for col in cell_range(m, r.x0, r.x1) {
                    total += lv.dec.integral_over_f64(&square(m, row, col), r) / lv.spec.epsilon;
                }
            }
        }
        total
    }

    /// Enumerated rectangles of `level` in square `index`, in enumeration order.
    pub fn enumeration(&self, level: usize, index: usize) -> impl Iterator<Item = EnumeratedRect<f64>> + '_ {
        let root = self.square(level, index);
        self.levels[level - 1].dec.enumeration_in(&root)
    }

    pub fn rect_of(&self, key: &LevelKey) -> Rect<f64> {
        self.levels[key.level - 1].dec.rect_of(&self.square(key.level, key.square), &key.key)
    }

    /// Enumerated rectangles of `level` containing the point.
    pub fn containing(&self, level: usize, x: f64, y: f64) -> Vec<(LevelKey, Rect<f64>)> {
        let Some((index, root)) = self.square_of(level, x, y) else { return Vec::new() };
        self.levels[level - 1]
            .dec
            .containing(&root, x, y)
            .into_iter()
            .map(|(key, r)| (LevelKey { level, square: index, key }, r))
            .collect()
    }

    /// Checks `∫_I φ_n ≥ |I|/ε_i` for every enumerated rectangle of every
    /// level; returns the count and `min ε_i ∫_I φ_n / |I|`.
    pub fn check_averages(&self) -> (u64, f64) {
        let jobs: Vec<(usize, usize)> =
            (1..=self.n()).flat_map(|l| (0..self.square_count(l)).map(move |s| (l, s))).collect();
        jobs.par_iter()
            .map(|&(l, s)| {
                let eps = self.levels[l - 1].spec.epsilon;
                self.enumeration(l, s).fold((0u64, f64::INFINITY), |(c, m), e| {
                    (c + 1, m.min(eps * self.integral_over(&e.rect) / e.rect.area()))
                })
            })
            .reduce(|| (0, f64::INFINITY), |a, b| (a.0 + b.0, a.1.min(b.1)))
    }

    /// Measure of `∩_{l ∈ levels} supp ψ_l`.
    fn intersection_measure(&self, levels: &[usize], region: &Rect<f64>) -> f64 {
        let Some((&first, rest)) = levels.split_first() else { return region.area() };
        let mut total = 0.0;
        self.visit_level(first, region, &mut |r, _| total += self.intersection_measure(rest, r));
        total
    }

    /// `∫ g(φ_n)` for `g(0) = 0`, exactly: the measure of each pattern of
    /// covering levels comes from intersection measures by inclusion-exclusion.
    pub fn integral_map(&self, g: impl Fn(f64) -> f64) -> f64 {
        let n = self.n();
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        let subsets = 1usize << n;
        let inter: Vec<f64> = (0..subsets)
            .into_par_iter()
            .map(|mask| {
                let levels: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
                self.intersection_measure(&levels, &unit)
            })
            .collect();
        let mut total = 0.0;
        for mask in 1..subsets {
            // measure of points covered by exactly the levels in `mask`
            let mut exact = 0.0;
            for sup in mask..subsets {
                if sup & mask == mask {
                    let sign = if (sup ^ mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    exact += sign * inter[sup];
                }
            }
            let v: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| self.levels[b].value()).sum();
            total += g(v) * exact;
        }
        total
    }

    /// `∫ σ(φ_n) φ_n (log⁺ φ_n)^{d-1}` with `d = 2`.
    pub fn orlicz_integral(&self) -> f64 {
        let sigma = self.schedule.sigma;
        self.integral_map(|v| orlicz_density(sigma, v, 1))
    }

    /// Materializes `φ_n` on its merged breakpoint mesh; fails past `cap` cells.
    pub fn to_step(&self, cap: usize) -> Result<StepFunction> {
        let mut terms = Vec::new();
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        for l in 1..=self.n() {
            self.visit_level(l, &unit, &mut |r, v| terms.push((r.to_rectangle(), v)));
        }
        crate::step::RectangleSum::from_terms(2, terms)?.to_step(cap)
    }
}

impl PieceSource for SaksPartial {
    fn visit_pieces(&self, region: &Rect<f64>, f: &mut dyn FnMut(&Rect<f64>, f64)) {
        for l in 1..=self.n() {
            self.visit_level(l, region, f);
        }
    }

    fn visit_blocks(&self, region: &Rect<f64>, f: &mut dyn FnMut(Block<'_>)) {
        for lv in &self.levels {
            let m = lv.spec.cells;
            for row in cell_range(m, region.y0, region.y1) {
                for col in cell_range(m, region.x0, region.x1) {
                    let root = square(m, row, col);
                    if root.intersect(region).is_some() {
                        lv.dec.visit_blocks(&root, region, 1.0 / lv.spec.epsilon, f);
                    }
                }
            }
        }
    }
}

fn orlicz_density(sigma: Gauge, v: f64, power: i32) -> f64 {
    let a = v.abs();
    if a == 0.0 {
        return 0.0;
    }
    sigma.eval(a) * a * a.ln().max(0.0).powi(power)
}

/// `∫ σ(|f|) |f| (log⁺|f|)^{d-1}` over the cells of a step function.
pub fn orlicz_integral(f: &StepFunction, sigma: Gauge, d: usize) -> f64 {
    let power = d.saturating_sub(1) as i32;
    f.integral_map(|v| orlicz_density(sigma, v, power))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_schedule_is_psi() {
        let phi = build_saks_partial(&SaksSchedule::trivial(5.0), 1).unwrap();
        let dec = BohrDecomposition::new(&Rectangle::unit(2), 5.0).unwrap();
        assert!((phi.integral() - dec.mass_f64()).abs() < 1e-14);
        for (x, y) in [(0.1, 0.1), (0.5, 0.5), (0.9, 0.95), (0.3, 0.7)] {
            assert_eq!(phi.eval(x, y), dec.eval(dec.root_f64(), x, y));
        }
        let (count, min) = phi.check_averages();
        assert_eq!(count, 1365 * 5 + 4096);
        assert!(min >= 1.0 - 1e-12, "{min}");
    }

    #[test]
    fn default_levels_and_masses() {
        let s = SaksSchedule::default_levels(4);
        assert!((1..=4).all(|i| s.diameter_ok(i)));
        assert!(!SaksSchedule::trivial(5.0).diameter_ok(1));
        let phi = build_saks_partial(&s, 2).unwrap();
        // integral from the pieces equals the closed-form level masses
        let from_pieces = phi.integral_map(|v| v);
        assert!((from_pieces - phi.integral()).abs() < 1e-12, "{from_pieces} {}", phi.integral());
        let mut direct = 0.0;
        phi.visit_pieces(&Rect::new(0.0, 1.0, 0.0, 1.0), &mut |r, v| direct += r.area() * v);
        assert!((direct - phi.integral()).abs() < 1e-12);
        let (_, min) = phi.check_averages();
        assert!(min >= 1.0 - 1e-12);
    }

    #[test]
    fn orlicz_matches_step_materialization() {
        let s = SaksSchedule::default_levels(2);
        let phi = build_saks_partial(&s, 2).unwrap();
        let step = phi.to_step(1 << 22).unwrap();
        let a = phi.orlicz_integral();
        let b = orlicz_integral(&step, Gauge::InverseLog, 2);
        assert!((a - b).abs() < 1e-12 * a.max(1.0), "{a} {b}");
        assert!((phi.integral() - step.integral()).abs() < 1e-12);
        for (x, y) in [(0.1, 0.1), (0.33, 0.71), (0.9, 0.05)] {
            assert!((phi.eval(x, y) - step.eval(&[x, y]).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn orlicz_trivial_cases() {
        assert_eq!(orlicz_integral(&StepFunction::constant(2, 0.0), Gauge::One, 2), 0.0);
        let e = std::f64::consts::E;
        assert!((orlicz_integral(&StepFunction::constant(2, e), Gauge::One, 2) - e).abs() < 1e-15);
    }

    #[test]
    fn caps_and_validation() {
        let s = SaksSchedule::default_levels(5);
        assert!(matches!(SaksPartial::new(&s, 4, 1000), Err(Error::MeshBlowup { .. })));
        assert!(build_saks_partial(&s, 6).is_err());
        let mut bad = SaksSchedule::default_levels(1);
        bad.levels[0].alpha = 1.5;
        assert!(matches!(build_saks_partial(&bad, 1), Err(Error::DegenerateAlpha { .. })));
    }
}
