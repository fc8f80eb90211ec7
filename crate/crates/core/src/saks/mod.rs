//! Bohr's rectangle construction, Saks' functions `ψ` and partial sums
//! `φ_n`, and the divergence laboratory built on them (`d = 2`).

pub mod bohr;
pub mod lab;
pub mod psi;
pub mod schedule;

pub use bohr::{BohrDecomposition, EnumeratedRect, Group, MomentTable, Rect, RectKey, Role, Scalar, MOMENT_ORDERS, Q};
pub use lab::{
    divergence_curve, growth_at, projpointwise_check, projpointwise_check_with, union_measure_check, DivergenceReport, LevelRow,
    LocalProjection, LocalProjector, PointwiseReport, RectangleRow, UnionReport,
};
pub use psi::{build_psi, verify_psi, PsiReport};
pub use schedule::{build_saks_partial, orlicz_integral, Gauge, LevelSpec, SaksPartial, SaksSchedule};

use crate::mesh::Rectangle;
use crate::step::{RectangleSum, StepFunction};

/// `bohr_decompose(S, α)`
pub fn bohr_decompose(s: &Rectangle, alpha: f64) -> crate::Result<BohrDecomposition> {
    BohrDecomposition::new(s, alpha)
}

/// Part of a piecewise-constant function inside a region.
#[derive(Debug, Clone, Copy)]
pub enum Block<'a> {
    /// `v` on a rectangle.
    Constant(&'a Rect<f64>, f64),
    /// `scale · h` on a rectangle inside the region, where `h` is a fixed
    /// function on `[0,1]²` mapped affinely onto the rectangle and
    /// `moments[a][b] = ∫ h(s,t) s^a t^b`.
    Scaled { rect: &'a Rect<f64>, scale: f64, moments: &'a MomentTable },
}

/// A planar function `Σ v 1_R` whose pieces can be listed inside a region.
pub trait PieceSource: Sync {
    /// Visits every piece clipped to `region` with its value. Pieces may
    /// overlap; values add.
    fn visit_pieces(&self, region: &Rect<f64>, f: &mut dyn FnMut(&Rect<f64>, f64));

    /// Like [`visit_pieces`](Self::visit_pieces), but whole self-similar
    /// parts may be reported at once with their moments.
    fn visit_blocks(&self, region: &Rect<f64>, f: &mut dyn FnMut(Block<'_>)) {
        self.visit_pieces(region, &mut |r, v| f(Block::Constant(r, v)));
    }
}

impl PieceSource for BohrDecomposition {
    fn visit_pieces(&self, region: &Rect<f64>, f: &mut dyn FnMut(&Rect<f64>, f64)) {
        let alpha = self.alpha();
        self.visit_support(self.root_f64(), region, &mut |r| f(&r, alpha));
    }

    fn visit_blocks(&self, region: &Rect<f64>, f: &mut dyn FnMut(Block<'_>)) {
        self.visit_blocks(self.root_f64(), region, 1.0, f);
    }
}

impl PieceSource for RectangleSum {
    fn visit_pieces(&self, region: &Rect<f64>, f: &mut dyn FnMut(&Rect<f64>, f64)) {
        for (r, v) in self.terms() {
            if let Some(c) = Rect::from_rectangle(r).intersect(region) {
                f(&c, *v);
            }
        }
    }
}

impl PieceSource for StepFunction {
    fn visit_pieces(&self, region: &Rect<f64>, f: &mut dyn FnMut(&Rect<f64>, f64)) {
        for (r, v) in self.pieces() {
            if let Some(c) = Rect::from_rectangle(&r).intersect(region) {
                f(&c, v);
            }
        }
    }
}
