//! Hedging prices: one-round pricing over the simplex family, the LP
//! superreplicating strategy, N-round backward induction and the
//! convex/separable reductions.

mod boyle;
mod induction;
mod reductions;
mod verify;

pub use boyle::{boyle_measure, boyle_price};
pub use induction::{
    backward_induction, convergence_series, FastPathMode, Induction, InductionOptions, PriceReport, Pricer,
    SeriesRow, StateLattice, Strategy,
};
pub use reductions::{convex_reduction, product_blocks, separable_price};
pub use verify::{verify_superreplication, PATH_BUDGET};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{enumerate_simplexes, MoveSet, Simplex, SimplexFamily};
use crate::lp;

/// Ties within this gap of the optimum are recorded and resolved by
/// lexicographic simplex order.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Upper,
    Lower,
}

impl Side {
    /// `+1` for upper, `-1` for lower: the lower price of `f` is minus the
    /// upper price of `-f`.
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleRoundPrice {
    pub price: f64,
    pub argmax: Simplex,
    /// Every member within [`TIE_TOL`] of the optimum, in order.
    pub near_ties: Vec<Simplex>,
}

/// Best member for the upper side: `(max value, first index within TIE_TOL)`.
#[inline]
pub(crate) fn best_member(fam: &SimplexFamily, values: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (k, m) in fam.members.iter().enumerate() {
        let v = m.expectation(values);
        if v > best + TIE_TOL {
            best = v;
            arg = k;
        } else if v > best {
            best = v;
        }
    }
    (best, arg)
}

pub(crate) fn near_ties(fam: &SimplexFamily, values: &[f64], best: f64) -> Vec<usize> {
    (0..fam.len())
        .filter(|&k| fam.members[k].expectation(values) >= best - TIE_TOL)
        .collect()
}

/// `max` (upper) or `min` (lower) of `I(χ̃, f)` over a precomputed family.
pub fn price_over_family(fam: &SimplexFamily, values: &[f64], side: Side) -> SingleRoundPrice {
    let s = side.sign();
    let signed: Vec<f64> = values.iter().map(|v| s * v).collect();
    let (best, _) = best_member(fam, &signed);
    let ties = near_ties(fam, &signed, best);
    SingleRoundPrice {
        price: s * best,
        argmax: fam.members[ties[0]].simplex.clone(),
        near_ties: ties.iter().map(|&k| fam.members[k].simplex.clone()).collect(),
    }
}

/// One-round upper or lower price of the claim with values `f` on the moves.
pub fn single_round_price(m: &MoveSet, f: &[f64], side: Side) -> Result<SingleRoundPrice> {
    if f.len() != m.len() {
        return Err(Error::DimensionMismatch { expected: m.len(), got: f.len() });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadParams("payoff values must be finite".into()));
    }
    Ok(price_over_family(&enumerate_simplexes(m), f, side))
}

/// Cheapest `(α, M)` with `α + M·a >= f(a)` for every move, from the dual
/// multipliers of `max Σ q f` over risk-neutral `q`.
pub fn superreplicating_strategy(m: &MoveSet, f: &[f64]) -> Result<(f64, Vec<f64>)> {
    let points: Vec<Vec<f64>> = (0..m.len()).map(|i| m.point_f64(i)).collect();
    superreplicate_points(&points, f)
}

pub(crate) fn superreplicate_points(points: &[Vec<f64>], f: &[f64]) -> Result<(f64, Vec<f64>)> {
    if f.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: f.len() });
    }
    let d = points[0].len();
    let mut a = vec![vec![1.0; points.len()]];
    for k in 0..d {
        a.push(points.iter().map(|p| p[k]).collect());
    }
    let mut b = vec![0.0; d + 1];
    b[0] = 1.0;
    let sol = lp::maximize(&a, &b, f)?;
    let alpha = sol.y[0];
    let holdings = sol.y[1..].to_vec();
    let scale = 1.0 + f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for (p, &fv) in points.iter().zip(f) {
        let cap = alpha + holdings.iter().zip(p).map(|(h, x)| h * x).sum::<f64>();
        if cap < fv - 1e-9 * scale {
            return Err(Error::LpNumericalFailure(format!(
                "dual solution violates a hedging constraint by {:e}",
                fv - cap
            )));
        }
    }
    Ok((alpha, holdings))
}
