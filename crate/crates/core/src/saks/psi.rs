//! `ψ_{S,α} = α 1_{∪δ ∪ ∪J}` and the checks of its three properties.

use num_bigint::BigUint;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::bohr::{child_rect, group_rect, BohrDecomposition, EnumeratedRect, Paths, Rect, RectKey, Role, Scalar, Q};
use crate::error::Result;
use crate::mesh::Rectangle;
use crate::rng;
use crate::step::{union_area, RectangleSum};

/// Materializes `ψ` as its support rectangles; fails past `cap` pieces.
pub fn build_psi(dec: &BohrDecomposition, cap: usize) -> Result<RectangleSum> {
    let terms = dec.support_terms(dec.root_f64(), cap)?;
    RectangleSum::from_terms(2, terms.iter().map(|r| (r.to_rectangle(), dec.alpha())))
}

/// Outcome of [`verify_psi`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiReport {
    pub alpha: f64,
    pub n: usize,
    pub generations: usize,
    /// Property (i): attained values.
    pub value_set: Vec<f64>,
    pub values_ok: bool,
    /// Property (ii): `∫ ψ log⁺ ψ / |S|`.
    pub orlicz_ratio: f64,
    pub orlicz_ok: bool,
    /// Property (iii): rectangles checked, whether that was all of them,
    /// and `min ∫_I ψ / |I|` over the checked ones.
    pub rectangles_checked: u64,
    pub exhaustive: bool,
    pub min_slack: f64,
    pub averages_ok: bool,
    /// Group unions, children and remainders tile `S` on the checked pieces.
    pub coverage_ok: bool,
    pub remainder_ratio: f64,
    pub remainder_ok: bool,
    /// `|∪ I^(1)_j| / |S|` from the exact union, and whether it equals `H_N/N`.
    pub first_union: f64,
    pub first_union_ok: bool,
    /// When `ψ` was materialized: its integrals agree with the closed forms.
    pub materialized_ok: Option<bool>,
    pub all_pass: bool,
}

/// Checks properties (i)–(iii) of `ψ` on `dec` in exact arithmetic.
///
/// Every enumerated rectangle is checked when there are at most `budget` of
/// them; otherwise whole generations are checked while they fit and
/// `samples` random deeper rectangles are added. A materialized `psi` is
/// cross-checked against the closed forms.
pub fn verify_psi(dec: &BohrDecomposition, psi: Option<&RectangleSum>, budget: u64, samples: usize, seed: u64) -> PsiReport {
    let n = dec.n();
    let s_area = dec.root().area();

    // (i): pieces are disjoint and all carry α, so the values are {0, α}
    // unless the support fills S.
    let support = dec.support_area();
    let mut value_set = vec![dec.alpha()];
    if support < s_area {
        value_set.insert(0, 0.0);
    }
    let values_ok = value_set == [0.0, dec.alpha()];

    // (ii)
    let orlicz_ratio = dec.orlicz_mass() / s_area.approx();
    let orlicz_ok = orlicz_ratio <= 9.0;

    // (iii) and coverage
    let total = dec.rectangle_count();
    let exhaustive = total <= BigUint::from(budget);
    let mut rects: Vec<EnumeratedRect> = Vec::new();
    let mut pieces: Vec<Vec<u8>> = Vec::new();
    if exhaustive {
        rects.extend(dec.enumeration());
        pieces.extend((0..dec.generations()).flat_map(|g| Paths::new(g, n - 1)));
    } else {
        let mut used = 0u64;
        for g in 0..dec.generations() {
            let count = BigUint::from(n - 1).pow(g as u32) * BigUint::from(n);
            if BigUint::from(used) + count.clone() > BigUint::from(budget) {
                break;
            }
            used += count.to_u64().expect("within budget");
            for path in Paths::new(g, n - 1) {
                let piece = dec.piece(dec.root(), &path);
                rects.extend((1..=n).map(|j| EnumeratedRect {
                    order: 0,
                    generation: g + 1,
                    key: RectKey { path: path.clone(), role: Role::Group(j) },
                    rect: group_rect(&piece, n, j),
                }));
                pieces.push(path);
            }
        }
        let mut r = rng::stream(seed, &[0x7073_69, dec.n() as u64]);
        for _ in 0..samples {
            let depth = r.random_range(0..=dec.generations());
            let path: Vec<u8> = (0..depth).map(|_| r.random_range(1..n) as u8).collect();
            let role = if depth == dec.generations() { Role::Remainder } else { Role::Group(r.random_range(1..=n)) };
            let key = RectKey { path, role };
            let rect = dec.rect_of(dec.root(), &key);
            if depth < dec.generations() {
                pieces.push(key.path.clone());
            }
            rects.push(EnumeratedRect { order: 0, generation: depth + 1, key, rect });
        }
    }
    let slacks: Vec<Q> = rects.par_iter().map(|e| dec.integral_over(&e.rect) / e.rect.area()).collect();
    let averages_ok = slacks.iter().all(|s| *s >= Q::from_u8(1).expect("one"));
    let min_slack = slacks.iter().map(Scalar::approx).fold(f64::INFINITY, f64::min);

    let coverage_ok = pieces.par_iter().all(|path| {
        let p = dec.piece(dec.root(), path);
        let group: Vec<Rect<Q>> = (1..=n).map(|j| group_rect(&p, n, j)).collect();
        let bounds: Vec<Vec<(Q, Q)>> = group.iter().map(Rect::bounds).collect();
        let children: Vec<Rect<Q>> = (1..n).map(|j| child_rect(&p, n, j)).collect();
        let child_area = children.iter().fold(Q::zero(), |a, c| a + c.area());
        let disjoint = children.iter().all(|c| group.iter().all(|g| g.overlap(c).is_zero()))
            && children.iter().enumerate().all(|(i, a)| children[i + 1..].iter().all(|b| a.overlap(b).is_zero()));
        disjoint && union_area(&bounds) + child_area == p.area()
    });

    let remainder_ratio = (dec.remainder_area() / s_area.clone()).approx();
    let nq = Q::from_usize(n).expect("small");
    let remainder_ok = dec.remainder_area() < s_area.clone() / (nq.clone() * nq.clone());

    let first: Vec<Vec<(Q, Q)>> = (1..=n).map(|j| group_rect(dec.root(), n, j).bounds()).collect();
    let first_exact = union_area(&first);
    let first_union_ok = first_exact == dec.first_union_area();
    let first_union = (first_exact / s_area.clone()).approx();

    let materialized_ok = psi.map(|p| {
        let scale = s_area.approx();
        let mass_ok = (p.integral() - dec.mass_f64()).abs() <= 1e-12 * scale.max(dec.mass_f64());
        let values_ok = p.terms().iter().all(|(_, v)| *v == dec.alpha());
        let area: f64 = p.terms().iter().map(|(r, _)| r.volume()).sum();
        mass_ok && values_ok && (area - support.approx()).abs() <= 1e-12 * scale
    });

    let all_pass = values_ok
        && orlicz_ok
        && averages_ok
        && coverage_ok
        && remainder_ok
        && first_union_ok
        && materialized_ok.unwrap_or(true);
    PsiReport {
        alpha: dec.alpha(),
        n,
        generations: dec.generations(),
        value_set,
        values_ok,
        orlicz_ratio,
        orlicz_ok,
        rectangles_checked: rects.len() as u64,
        exhaustive,
        min_slack,
        averages_ok,
        coverage_ok,
        remainder_ratio,
        remainder_ok,
        first_union,
        first_union_ok,
        materialized_ok,
        all_pass,
    }
}

/// `supp ψ` as unit-square [`Rectangle`]s, for tests and export.
pub fn support_rectangles(dec: &BohrDecomposition, cap: usize) -> Result<Vec<Rectangle>> {
    Ok(dec.support_terms(dec.root_f64(), cap)?.iter().map(Rect::to_rectangle).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saks::bohr::rational;

    fn unit(alpha: f64) -> BohrDecomposition {
        BohrDecomposition::new(&Rectangle::unit(2), alpha).unwrap()
    }

    #[test]
    fn alpha_five_passes_exhaustively() {
        let dec = unit(5.0);
        let psi = build_psi(&dec, 10_000).unwrap();
        let r = verify_psi(&dec, Some(&psi), 20_000, 0, 1);
        assert!(r.exhaustive);
        assert_eq!(r.rectangles_checked, 1365 * 5 + 4096);
        assert!(r.all_pass, "{r:?}");
        assert_eq!(r.value_set, vec![0.0, 5.0]);
        // group rectangles tie at α = N: ∫_I ψ = |I| exactly
        assert_eq!(r.min_slack, 1.0);
    }

    #[test]
    fn large_alpha_passes_on_samples() {
        for alpha in [10.0, 20.0] {
            let dec = unit(alpha);
            let r = verify_psi(&dec, None, 5_000, 200, 3);
            assert!(!r.exhaustive);
            assert!(r.all_pass, "{r:?}");
            assert!(r.orlicz_ratio < 9.0);
        }
    }

    #[test]
    fn small_alpha_orlicz_ratio() {
        let dec = unit(2.0);
        let r = verify_psi(&dec, None, 1000, 0, 1);
        assert!(r.all_pass);
        // μ_2 = 2, μ_1 = 2/4 + 2/4 = 1, μ_0 = 2/4 + 1/4 = 3/4
        assert_eq!(dec.mass(), rational(3, 4));
        assert!((r.orlicz_ratio - 0.75 * 2f64.ln()).abs() < 1e-15);
    }
}
