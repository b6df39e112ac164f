use itertools::Itertools;

use super::{backward_induction, InductionOptions, Side};
use crate::error::{Error, Result};
use crate::geometry::{build_move_set, hull_vertices, MoveSet, Rational};
use crate::payoffs::{certify_convex, separable_decompose, Payoff};

/// Splits `m` into per-block move sets when `m` is their Cartesian product.
pub fn product_blocks(m: &MoveSet, blocks: &[Vec<usize>]) -> Result<Vec<MoveSet>> {
    let projections: Vec<Vec<Vec<Rational>>> = blocks
        .iter()
        .map(|b| {
            m.points()
                .iter()
                .map(|p| b.iter().map(|&k| p[k].clone()).collect::<Vec<_>>())
                .sorted()
                .dedup()
                .collect()
        })
        .collect();
    let size = projections.iter().try_fold(1usize, |acc, p| acc.checked_mul(p.len()));
    if size != Some(m.len()) {
        return Err(Error::NotProductAcrossBlocks);
    }
    projections
        .into_iter()
        .map(|pts| build_move_set(pts).map_err(|_| Error::NotProductAcrossBlocks))
        .collect()
}

/// Sum of the block prices of a declared-separable claim on a product move
/// set.
pub fn separable_price(m: &MoveSet, p: &Payoff, rounds: usize, side: Side) -> Result<f64> {
    let part = separable_decompose(p, m.dim())?;
    let sets = product_blocks(m, &part.blocks)?;
    sets.iter()
        .zip(&part.components)
        .map(|(ms, c)| {
            let c = c.clone().with_scaling(p.scaling);
            backward_induction(ms, &c, rounds, side, InductionOptions::default()).map(|r| r.value)
        })
        .sum()
}

/// Upper price of a convex claim computed on the hull vertices of `m`.
pub fn convex_reduction(m: &MoveSet, p: &Payoff, rounds: usize) -> Result<f64> {
    let reach = m
        .points()
        .iter()
        .flatten()
        .map(|c| crate::linalg::rational_to_f64(c).abs())
        .fold(0.0f64, f64::max)
        * rounds as f64;
    certify_convex(p, m.dim(), reach.max(1.0) * 1.5, 4096, 0xc0de)?;
    let hull = hull_vertices(m);
    Ok(backward_induction(&hull, p, rounds, Side::Upper, InductionOptions::default())?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::integer;
    use crate::payoffs::{Butterfly, Scaling, SeparablePartition};

    #[test]
    fn blocks_of_products() {
        let grid = MoveSet::product(&vec![vec![integer(-1), integer(0), integer(1)]; 2]).unwrap();
        let sets = product_blocks(&grid, &[vec![0], vec![1]]).unwrap();
        assert_eq!(sets.iter().map(MoveSet::len).collect::<Vec<_>>(), vec![3, 3]);
        assert!(matches!(product_blocks(&MoveSet::chi2(), &[vec![0], vec![1]]), Err(Error::NotProductAcrossBlocks)));
    }

    #[test]
    fn separable_matches_full_induction() {
        let p = Payoff::double_butterfly(Butterfly::default(), 2).unwrap().with_scaling(Scaling::SqrtN);
        let m = MoveSet::chi1();
        for side in [Side::Upper, Side::Lower] {
            let full = backward_induction(&m, &p, 4, side, InductionOptions::default()).unwrap().value;
            assert!((separable_price(&m, &p, 4, side).unwrap() - full).abs() < 1e-9);
        }
        let lin = Payoff::linear(vec![1.0, 1.0]).unwrap();
        assert!(separable_price(&m, &lin, 3, Side::Upper).unwrap().abs() < 1e-12);
        assert!(matches!(separable_price(&MoveSet::chi2(), &p, 2, Side::Upper), Err(Error::NotProductAcrossBlocks)));
        let comps = vec![Payoff::custom("a", |s: &[f64]| s[0].abs()), Payoff::custom("b", |s: &[f64]| s[0] * s[0])];
        let part = SeparablePartition::new(2, vec![vec![1], vec![0]], comps).unwrap();
        let q = Payoff::custom("q", |s: &[f64]| s[1].abs() + s[0] * s[0]).with_separable(part);
        let full = backward_induction(&m, &q, 3, Side::Upper, InductionOptions::default()).unwrap().value;
        assert!((separable_price(&m, &q, 3, Side::Upper).unwrap() - full).abs() < 1e-9);
    }

    #[test]
    fn convex_claims_reduce_to_hull() {
        let grid = MoveSet::product(&vec![vec![integer(-1), integer(0), integer(1)]; 2]).unwrap();
        let abs = Payoff::custom("abs", |s: &[f64]| s[0].abs() + s[1].abs()).with_convex(true);
        let on_grid = backward_induction(&grid, &abs, 3, Side::Upper, InductionOptions::default()).unwrap().value;
        let on_hull = convex_reduction(&grid, &abs, 3).unwrap();
        let on_chi1 = backward_induction(&MoveSet::chi1(), &abs, 3, Side::Upper, InductionOptions::default()).unwrap().value;
        assert!((on_grid - on_hull).abs() < 1e-9 && (on_hull - on_chi1).abs() < 1e-9);

        let line = MoveSet::from_integers(&[vec![-1], vec![0], vec![2]]).unwrap();
        let call = Payoff::custom("call", |s: &[f64]| (s[0] - 0.5).max(0.0));
        let binom = MoveSet::from_integers(&[vec![-1], vec![2]]).unwrap();
        let a = convex_reduction(&line, &call, 2).unwrap();
        let b = backward_induction(&binom, &call, 2, Side::Upper, InductionOptions::default()).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        assert!(convex_reduction(&grid, &Payoff::linear(vec![1.0, -2.0]).unwrap(), 2).unwrap().abs() < 1e-12);
        assert!(matches!(convex_reduction(&grid, &Payoff::cone(), 2), Err(Error::ConvexityCheckFailed(_))));
    }
}
