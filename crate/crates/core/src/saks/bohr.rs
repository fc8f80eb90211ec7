//! Bohr's splitting of a rectangle into groups of `N` rectangles of equal
//! area whose corners lie on a hyperbola, repeated on the uncovered part.
//!
//! The decomposition is kept implicit: piece geometry is derived from a path
//! of child indices, counts and areas come from closed forms, and the
//! enumeration is produced lazily. Exact geometry uses big rationals.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::Block;
use crate::error::{Error, Result};
use crate::mesh::Rectangle;

pub type Q = BigRational;

/// Numbers the geometry can be carried out in.
pub trait Scalar: Clone + PartialOrd + Num + FromPrimitive + std::fmt::Debug {
    fn approx(&self) -> f64;
}

impl Scalar for f64 {
    fn approx(&self) -> f64 {
        *self
    }
}

impl Scalar for Q {
    fn approx(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn min<T: Scalar>(a: &T, b: &T) -> T {
    if a.partial_cmp(b) == Some(Ordering::Greater) { b.clone() } else { a.clone() }
}

fn max<T: Scalar>(a: &T, b: &T) -> T {
    if a.partial_cmp(b) == Some(Ordering::Less) { b.clone() } else { a.clone() }
}

fn int<T: Scalar>(v: usize) -> T {
    T::from_usize(v).expect("small integer")
}

/// `q(n, d)` as an exact rational.
pub fn rational(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// A closed axis-parallel rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
    pub y1: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x0: T, x1: T, y0: T, y1: T) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> T {
        self.x1.clone() - self.x0.clone()
    }

    pub fn height(&self) -> T {
        self.y1.clone() - self.y0.clone()
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn intersect(&self, o: &Self) -> Option<Self> {
        let r = Self::new(max(&self.x0, &o.x0), min(&self.x1, &o.x1), max(&self.y0, &o.y0), min(&self.y1, &o.y1));
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    pub fn overlap(&self, o: &Self) -> T {
        self.intersect(o).map_or_else(T::zero, |r| r.area())
    }

    pub fn contains_rect(&self, o: &Self) -> bool {
        self.x0 <= o.x0 && o.x1 <= self.x1 && self.y0 <= o.y0 && o.y1 <= self.y1
    }

    pub fn to_f64(&self) -> Rect<f64> {
        Rect::new(self.x0.approx(), self.x1.approx(), self.y0.approx(), self.y1.approx())
    }

    pub fn to_rectangle(&self) -> Rectangle {
        Rectangle::from_bounds(&[self.x0.approx(), self.y0.approx()], &[self.x1.approx(), self.y1.approx()])
            .expect("ordered bounds")
    }

    pub fn bounds(&self) -> Vec<(T, T)> {
        vec![(self.x0.clone(), self.x1.clone()), (self.y0.clone(), self.y1.clone())]
    }
}

impl Rect<f64> {
    pub fn from_rectangle(r: &Rectangle) -> Self {
        Self::new(r.side(0).lo, r.side(0).hi, r.side(1).lo, r.side(1).hi)
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub(crate) fn contains_half_open(&self, x: f64, y: f64, root: &Rect<f64>) -> bool {
        let right = x < self.x1 || (x == self.x1 && self.x1 >= root.x1);
        let top = y < self.y1 || (y == self.y1 && self.y1 >= root.y1);
        self.x0 <= x && right && self.y0 <= y && top
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

impl Rect<Q> {
    pub fn from_f64(r: &Rect<f64>) -> Result<Self> {
        let c = |v: f64| Q::from_float(v).ok_or_else(|| Error::InvalidArgument(format!("non-finite coordinate {v}")));
        Ok(Self::new(c(r.x0)?, c(r.x1)?, c(r.y0)?, c(r.y1)?))
    }
}

/// `I_j = [a₁, a₁ + j w/N] × [a₂, a₂ + h/j]`, `1 ≤ j ≤ N`.
pub fn group_rect<T: Scalar>(p: &Rect<T>, n: usize, j: usize) -> Rect<T> {
    Rect::new(
        p.x0.clone(),
        p.x0.clone() + p.width() * int(j) / int(n),
        p.y0.clone(),
        p.y0.clone() + p.height() / int(j),
    )
}

/// `δ = ∩_j I_j = [a₁, a₁ + w/N] × [a₂, a₂ + h/N]`.
pub fn core_rect<T: Scalar>(p: &Rect<T>, n: usize) -> Rect<T> {
    Rect::new(p.x0.clone(), p.x0.clone() + p.width() / int(n), p.y0.clone(), p.y0.clone() + p.height() / int(n))
}

/// `R_j = [a₁ + j w/N, a₁ + (j+1) w/N] × [a₂ + h/(j+1), b₂]`, `1 ≤ j ≤ N-1`.
pub fn child_rect<T: Scalar>(p: &Rect<T>, n: usize, j: usize) -> Rect<T> {
    Rect::new(
        p.x0.clone() + p.width() * int(j) / int(n),
        p.x0.clone() + p.width() * int(j + 1) / int(n),
        p.y0.clone() + p.height() / int(j + 1),
        p.y1.clone(),
    )
}

/// Role of a rectangle in the enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// `I_j` of a group, `1 ≤ j ≤ N`.
    Group(usize),
    /// A final remainder rectangle.
    Remainder,
}

/// Identifies an enumerated rectangle by the child path of its piece.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RectKey {
    pub path: Vec<u8>,
    pub role: Role,
}

/// One group `I_1..I_N` on a piece.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// 1-based position among all groups (the `i` of `δ^(i)`), saturating.
    pub order: u64,
    /// 1-based generation.
    pub generation: usize,
    pub path: Vec<u8>,
    pub piece: Rect<Q>,
}

impl Group {
    pub fn rects(&self, n: usize) -> Vec<Rect<Q>> {
        (1..=n).map(|j| group_rect(&self.piece, n, j)).collect()
    }

    pub fn core(&self, n: usize) -> Rect<Q> {
        core_rect(&self.piece, n)
    }
}

/// A rectangle of the enumeration with its 1-based position.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedRect<T = Q> {
    pub order: u64,
    pub generation: usize,
    pub key: RectKey,
    pub rect: Rect<T>,
}

/// The implicit decomposition of a rectangle for a given `α`.
#[derive(Debug, Clone)]
pub struct BohrDecomposition {
    root: Rect<Q>,
    root_f: Rect<f64>,
    alpha: f64,
    alpha_q: Q,
    n: usize,
    generations: usize,
    q: Q,
    /// `μ_g`: mean of `ψ` over a piece of depth `g`, `0 ≤ g ≤ G`.
    masses: Vec<Q>,
    masses_f: Vec<f64>,
    /// Moments of `ψ` on a piece of depth `g`, mapped to `[0,1]²`.
    moments: Vec<MomentTable>,
}

/// Largest polynomial order per axis covered by moment tables.
pub const MOMENT_ORDERS: usize = 8;

/// `m[a][b] = ∫_{[0,1]²} h(s,t) s^a t^b` for `a, b < MOMENT_ORDERS`.
pub type MomentTable = [[f64; MOMENT_ORDERS]; MOMENT_ORDERS];

fn binomials() -> MomentTable {
    let mut c = [[0.0; MOMENT_ORDERS]; MOMENT_ORDERS];
    for a in 0..MOMENT_ORDERS {
        c[a][0] = 1.0;
        for b in 1..=a {
            c[a][b] = c[a - 1][b - 1] + if b < a { c[a - 1][b] } else { 0.0 };
        }
    }
    c
}

/// Moments of `v 1_[u0,u1]×[v0,v1]`, added into `out`.
pub fn box_moments(out: &mut MomentTable, v: f64, (u0, u1): (f64, f64), (v0, v1): (f64, f64)) {
    let mut pu = [0.0; MOMENT_ORDERS];
    let mut pv = [0.0; MOMENT_ORDERS];
    let (mut a0, mut a1, mut b0, mut b1) = (u0, u1, v0, v1);
    for a in 0..MOMENT_ORDERS {
        pu[a] = (a1 - a0) / (a + 1) as f64;
        pv[a] = (b1 - b0) / (a + 1) as f64;
        a0 *= u0;
        a1 *= u1;
        b0 *= v0;
        b1 *= v1;
    }
    for a in 0..MOMENT_ORDERS {
        for b in 0..MOMENT_ORDERS {
            out[a][b] += v * pu[a] * pv[b];
        }
    }
}

/// Moments of `scale · h((u-u0)/du, (v-v0)/dv)` on `[u0,u0+du]×[v0,v0+dv]`
/// from the moments `m` of `h`, added into `out`.
pub fn mapped_moments(out: &mut MomentTable, scale: f64, m: &MomentTable, (u0, du): (f64, f64), (v0, dv): (f64, f64)) {
    let c = binomials();
    // (u0 + du s)^a = Σ_p c[a][p] u0^(a-p) du^p s^p
    let expand = |x0: f64, dx: f64| {
        let mut e = [[0.0; MOMENT_ORDERS]; MOMENT_ORDERS];
        for a in 0..MOMENT_ORDERS {
            for p in 0..=a {
                e[a][p] = c[a][p] * x0.powi((a - p) as i32) * dx.powi(p as i32);
            }
        }
        e
    };
    let (eu, ev) = (expand(u0, du), expand(v0, dv));
    let mut half = [[0.0; MOMENT_ORDERS]; MOMENT_ORDERS];
    for a in 0..MOMENT_ORDERS {
        for q in 0..MOMENT_ORDERS {
            half[a][q] = (0..=a).map(|p| eu[a][p] * m[p][q]).sum();
        }
    }
    for a in 0..MOMENT_ORDERS {
        for b in 0..MOMENT_ORDERS {
            out[a][b] += scale * du * dv * (0..=b).map(|q| ev[b][q] * half[a][q]).sum::<f64>();
        }
    }
}

/// `H_N = 1 + 1/2 + … + 1/N`
pub fn harmonic(n: usize) -> Q {
    (1..=n).map(|j| rational(1, j as i64)).fold(Q::zero(), |a, b| a + b)
}

impl BohrDecomposition {
    pub fn new(root: &Rectangle, alpha: f64) -> Result<Self> {
        if root.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: root.dim() });
        }
        if !alpha.is_finite() || alpha < 2.0 {
            return Err(Error::DegenerateAlpha { alpha });
        }
        if root.volume() <= 0.0 {
            return Err(Error::InvalidArgument("the root rectangle must have positive area".into()));
        }
        if alpha >= 257.0 {
            return Err(Error::InfeasibleSize(format!("alpha {alpha} needs more than 255 children per piece")));
        }
        let n = alpha.floor() as usize;
        let root_f = Rect::from_rectangle(root);
        let root_q = Rect::<Q>::from_f64(&root_f)?;
        let alpha_q = Q::from_float(alpha).expect("finite");
        let nq = Q::from_usize(n).expect("small");
        let q = Q::one() - harmonic(n) / nq.clone();
        let target = Q::one() / (nq.clone() * nq.clone());
        let mut generations = 1;
        let mut qg = q.clone();
        while qg >= target {
            qg = qg * q.clone();
            generations += 1;
        }
        let mut masses = vec![alpha_q.clone(); generations + 1];
        for g in (0..generations).rev() {
            masses[g] = alpha_q.clone() / (nq.clone() * nq.clone()) + q.clone() * masses[g + 1].clone();
        }
        let masses_f = masses.iter().map(Scalar::approx).collect();
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        let mut moments = vec![[[0.0; MOMENT_ORDERS]; MOMENT_ORDERS]; generations + 1];
        box_moments(&mut moments[generations], alpha, (0.0, 1.0), (0.0, 1.0));
        for g in (0..generations).rev() {
            let mut m = [[0.0; MOMENT_ORDERS]; MOMENT_ORDERS];
            let c = core_rect(&unit, n);
            box_moments(&mut m, alpha, (c.x0, c.x1), (c.y0, c.y1));
            for j in 1..n {
                let r = child_rect(&unit, n, j);
                mapped_moments(&mut m, 1.0, &moments[g + 1], (r.x0, r.width()), (r.y0, r.height()));
            }
            moments[g] = m;
        }
        Ok(Self { root: root_q, root_f, alpha, alpha_q, n, generations, q, masses, masses_f, moments })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of group generations `G`; remainder pieces sit at depth `G`.
    pub fn generations(&self) -> usize {
        self.generations
    }

    pub fn root(&self) -> &Rect<Q> {
        &self.root
    }

    pub fn root_f64(&self) -> &Rect<f64> {
        &self.root_f
    }

    /// Fraction `1 - H_N/N` of a piece left uncovered by its group.
    pub fn uncovered_fraction(&self) -> &Q {
        &self.q
    }

    fn pow(&self, g: usize) -> BigUint {
        num_traits::pow(BigUint::from(self.n - 1), g)
    }

    pub fn group_count(&self) -> BigUint {
        (0..self.generations).map(|g| self.pow(g)).sum()
    }

    pub fn remainder_count(&self) -> BigUint {
        self.pow(self.generations)
    }

    /// All rectangles of the enumeration: `N` per group plus the remainders.
    pub fn rectangle_count(&self) -> BigUint {
        self.group_count() * BigUint::from(self.n) + self.remainder_count()
    }

    /// `|supp ψ| = Σ_{g<G} q^g |S|/N² + q^G |S|`
    pub fn support_area(&self) -> Q {
        let n = Q::from_usize(self.n).expect("small");
        let mut total = Q::zero();
        let mut qg = Q::one();
        for _ in 0..self.generations {
            total = total + qg.clone() / (n.clone() * n.clone());
            qg = qg * self.q.clone();
        }
        (total + qg) * self.root.area()
    }

    /// Pieces of `supp ψ`: one core per group plus the remainders.
    pub fn support_count(&self) -> BigUint {
        self.group_count() + self.remainder_count()
    }

    pub fn remainder_area(&self) -> Q {
        num_traits::pow(self.q.clone(), self.generations) * self.root.area()
    }

    /// `|∪_j I_j^(1)| = H_N/N · |S|`
    pub fn first_union_area(&self) -> Q {
        harmonic(self.n) / Q::from_usize(self.n).expect("small") * self.root.area()
    }

    /// `∫ ψ`
    pub fn mass(&self) -> Q {
        self.masses[0].clone() * self.root.area()
    }

    pub fn mass_f64(&self) -> f64 {
        self.masses_f[0] * self.root_f.area()
    }

    /// Mean of `ψ` over a piece at depth `g`.
    pub fn piece_mean(&self, g: usize) -> &Q {
        &self.masses[g]
    }

    /// `∫ ψ log⁺ ψ = log⁺ α · ∫ ψ`, since `ψ ∈ {0, α}`.
    pub fn orlicz_mass(&self) -> f64 {
        self.alpha.ln().max(0.0) * self.mass().approx()
    }

    /// Geometry of the piece reached by `path` (child indices `1..N`).
    pub fn piece<T: Scalar>(&self, root: &Rect<T>, path: &[u8]) -> Rect<T> {
        path.iter().fold(root.clone(), |p, &j| child_rect(&p, self.n, j as usize))
    }

    pub fn group(&self, order: u64, path: Vec<u8>) -> Group {
        Group { order, generation: path.len() + 1, piece: self.piece(&self.root, &path), path }
    }

    /// Groups in enumeration order: by generation, then by path.
    pub fn groups(&self) -> impl Iterator<Item = Group> + '_ {
        let n = self.n;
        (0..self.generations)
            .flat_map(move |g| Paths::new(g, n - 1))
            .enumerate()
            .map(move |(i, path)| self.group(i as u64 + 1, path))
    }

    pub fn remainders(&self) -> impl Iterator<Item = (Vec<u8>, Rect<Q>)> + '_ {
        Paths::new(self.generations, self.n - 1).map(move |p| {
            let r = self.piece(&self.root, &p);
            (p, r)
        })
    }

    /// The enumeration `I^(1)_1..I^(1)_N; …; I^(s)_1..I^(s)_N; J^(1)..J^(r)`.
    pub fn enumeration(&self) -> impl Iterator<Item = EnumeratedRect> + '_ {
        self.enumeration_in(&self.root)
    }

    /// The enumeration for the decomposition placed on `root`.
    pub fn enumeration_in<'a, T: Scalar + 'a>(&'a self, root: &Rect<T>) -> impl Iterator<Item = EnumeratedRect<T>> + 'a {
        let n = self.n;
        let (r1, r2) = (root.clone(), root.clone());
        let groups = (0..self.generations).flat_map(move |g| Paths::new(g, n - 1)).flat_map(move |path| {
            let piece = self.piece(&r1, &path);
            (1..=n).map(move |j| EnumeratedRect {
                order: 0,
                generation: path.len() + 1,
                key: RectKey { path: path.clone(), role: Role::Group(j) },
                rect: group_rect(&piece, n, j),
            })
        });
        let rest = Paths::new(self.generations, n - 1).map(move |path| EnumeratedRect {
            order: 0,
            generation: self.generations + 1,
            rect: self.piece(&r2, &path),
            key: RectKey { path, role: Role::Remainder },
        });
        groups.chain(rest).enumerate().map(|(i, mut e)| {
            e.order = i as u64 + 1;
            e
        })
    }

    /// Geometry of an enumerated rectangle under `root`.
    pub fn rect_of<T: Scalar>(&self, root: &Rect<T>, key: &RectKey) -> Rect<T> {
        let p = self.piece(root, &key.path);
        match key.role {
            Role::Group(j) => group_rect(&p, self.n, j),
            Role::Remainder => p,
        }
    }

    fn integral_rec<T: Scalar>(&self, p: &Rect<T>, g: usize, r: &Rect<T>, means: &[T], alpha: &T) -> T {
        let Some(cut) = p.intersect(r) else { return T::zero() };
        if r.contains_rect(p) {
            return means[g].clone() * p.area();
        }
        if g == self.generations {
            return alpha.clone() * cut.area();
        }
        let mut total = alpha.clone() * core_rect(p, self.n).overlap(r);
        for j in 1..self.n {
            total = total + self.integral_rec(&child_rect(p, self.n, j), g + 1, r, means, alpha);
        }
        total
    }

    /// Exact `∫_R ψ` by descent with closed-form subtree masses.
    pub fn integral_over(&self, r: &Rect<Q>) -> Q {
        self.integral_rec(&self.root, 0, r, &self.masses, &self.alpha_q)
    }

    /// `∫_R ψ` in floating point for the decomposition placed on `root`.
    pub fn integral_over_f64(&self, root: &Rect<f64>, r: &Rect<f64>) -> f64 {
        self.integral_rec(root, 0, r, &self.masses_f, &self.alpha)
    }

    /// Visits the pieces of `supp ψ` (cores and remainders) clipped to
    /// `region`, for the decomposition placed on `root`.
    pub fn visit_support(&self, root: &Rect<f64>, region: &Rect<f64>, f: &mut dyn FnMut(Rect<f64>)) {
        self.visit_rec(root, 0, region, f);
    }

    fn visit_rec(&self, p: &Rect<f64>, g: usize, region: &Rect<f64>, f: &mut dyn FnMut(Rect<f64>)) {
        let Some(cut) = p.intersect(region) else { return };
        if g == self.generations {
            f(cut);
            return;
        }
        if let Some(c) = core_rect(p, self.n).intersect(region) {
            f(c);
        }
        for j in 1..self.n {
            self.visit_rec(&child_rect(p, self.n, j), g + 1, region, f);
        }
    }

    /// Moments of `ψ` on a piece of depth `g`, mapped to `[0,1]²`.
    pub fn piece_moments(&self, g: usize) -> &MomentTable {
        &self.moments[g]
    }

    /// Visits `ψ` (times `scale`) inside `region` for the decomposition
    /// placed on `root`: pieces lying inside `region` are reported whole
    /// with their moments, the rest as clipped support pieces.
    pub fn visit_blocks(&self, root: &Rect<f64>, region: &Rect<f64>, scale: f64, f: &mut dyn FnMut(Block<'_>)) {
        self.blocks_rec(root, 0, region, scale, f);
    }

    fn blocks_rec(&self, p: &Rect<f64>, g: usize, region: &Rect<f64>, scale: f64, f: &mut dyn FnMut(Block<'_>)) {
        if region.contains_rect(p) {
            f(Block::Scaled { rect: p, scale, moments: &self.moments[g] });
            return;
        }
        let Some(cut) = p.intersect(region) else { return };
        if g == self.generations {
            f(Block::Constant(&cut, scale * self.alpha));
            return;
        }
        if let Some(c) = core_rect(p, self.n).intersect(region) {
            f(Block::Constant(&c, scale * self.alpha));
        }
        for j in 1..self.n {
            self.blocks_rec(&child_rect(p, self.n, j), g + 1, region, scale, f);
        }
    }

    /// `ψ(x)` with half-open pieces, for the decomposition placed on `root`.
    pub fn eval(&self, root: &Rect<f64>, x: f64, y: f64) -> f64 {
        if !root.contains_half_open(x, y, root) {
            return 0.0;
        }
        let mut p = root.clone();
        for _ in 0..self.generations {
            if core_rect(&p, self.n).contains_half_open(x, y, root) {
                return self.alpha;
            }
            match (1..self.n).map(|j| child_rect(&p, self.n, j)).find(|c| c.contains_half_open(x, y, root)) {
                Some(c) => p = c,
                None => return 0.0,
            }
        }
        self.alpha
    }

    /// Enumerated rectangles (closed) containing the point, for the
    /// decomposition placed on `root`.
    pub fn containing(&self, root: &Rect<f64>, x: f64, y: f64) -> Vec<(RectKey, Rect<f64>)> {
        let mut out = Vec::new();
        self.containing_rec(root, Vec::new(), x, y, &mut out);
        out
    }

    fn containing_rec(&self, p: &Rect<f64>, path: Vec<u8>, x: f64, y: f64, out: &mut Vec<(RectKey, Rect<f64>)>) {
        if !p.contains_point(x, y) {
            return;
        }
        if path.len() == self.generations {
            out.push((RectKey { path, role: Role::Remainder }, p.clone()));
            return;
        }
        for j in 1..=self.n {
            let r = group_rect(p, self.n, j);
            if r.contains_point(x, y) {
                out.push((RectKey { path: path.clone(), role: Role::Group(j) }, r));
            }
        }
        for j in 1..self.n {
            let mut next = path.clone();
            next.push(j as u8);
            self.containing_rec(&child_rect(p, self.n, j), next, x, y, out);
        }
    }

    /// `supp ψ` as rectangles (value `α`), if there are at most `cap`.
    pub fn support_terms(&self, root: &Rect<f64>, cap: usize) -> Result<Vec<Rect<f64>>> {
        let count = self.support_count();
        if count > BigUint::from(cap) {
            return Err(Error::MeshBlowup { count: count.to_string(), cap });
        }
        let mut out = Vec::new();
        self.visit_support(root, root, &mut |r| out.push(r));
        Ok(out)
    }

    /// JSON summary plus, when the enumeration has at most `cap` rectangles,
    /// every rectangle with its 1-based order, generation and role.
    pub fn to_json(&self, cap: usize) -> Value {
        let f = |v: &Q| v.approx();
        let mut out = json!({
            "alpha": self.alpha,
            "n": self.n,
            "generations": self.generations,
            "groups": self.group_count().to_string(),
            "remainders": self.remainder_count().to_string(),
            "rectangles_total": self.rectangle_count().to_string(),
            "root": [[f(&self.root.x0), f(&self.root.x1)], [f(&self.root.y0), f(&self.root.y1)]],
            "remainder_area": f(&self.remainder_area()),
            "remainder_area_exact": self.remainder_area().to_string(),
            "first_union_area_exact": self.first_union_area().to_string(),
            "mass": f(&self.mass()),
        });
        let fits = self.rectangle_count() + self.group_count() <= BigUint::from(cap);
        if fits {
            let mut rects = Vec::new();
            let side = |r: &Rect<Q>| json!([[f(&r.x0), f(&r.x1)], [f(&r.y0), f(&r.y1)]]);
            for e in self.enumeration() {
                let (role, j) = match e.key.role {
                    Role::Group(j) => ("I", j),
                    Role::Remainder => ("J", 0),
                };
                rects.push(json!({"order": e.order, "generation": e.generation, "role": role, "j": j, "rect": side(&e.rect)}));
                if e.key.role == Role::Group(self.n) {
                    let core = core_rect(&self.piece(&self.root, &e.key.path), self.n);
                    rects.push(json!({"order": e.order + 1 - self.n as u64, "generation": e.generation, "role": "delta", "j": 0, "rect": side(&core)}));
                }
            }
            out["rectangles"] = Value::Array(rects);
        }
        out["rectangles_listed"] = Value::Bool(fits);
        out
    }
}

/// All paths of a given length over digits `1..=base`, in lexicographic order.
pub struct Paths {
    cur: Option<Vec<u8>>,
    base: u8,
}

impl Paths {
    pub fn new(len: usize, base: usize) -> Self {
        Self { cur: (base > 0 || len == 0).then(|| vec![1; len]), base: base as u8 }
    }
}

impl Iterator for Paths {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        let out = self.cur.clone()?;
        let mut next = out.clone();
        let mut i = next.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if next[i] < self.base {
                next[i] += 1;
                self.cur = Some(next);
                break;
            }
            next[i] = 1;
        }
        Some(out)
    }
}
